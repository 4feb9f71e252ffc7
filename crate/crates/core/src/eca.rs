//! Elementary cellular automata (radius 1, binary states).
//!
//! Rule numbering follows the usual truth-table weighting: bit `k` of the
//! rule number is the new value of a cell whose neighbourhood
//! `(left, centre, right)` reads `k = 4·left + 2·centre + right`.

use rayon::prelude::*;
use thiserror::Error;

use crate::linalg::Matrix;
use crate::scalar::Real;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum EcaError {
    #[error("row width must be at least 3, got {0}")]
    RowTooNarrow(usize),
    #[error("pattern length must be at least 3, got {0}")]
    PatternTooShort(usize),
    #[error("pattern length {0} too large (at most 24)")]
    PatternTooLong(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct EcaRule(u8);

impl EcaRule {
    pub const fn new(number: u8) -> Self {
        Self(number)
    }

    pub fn number(self) -> u8 {
        self.0
    }

    /// Build a rule from its outputs, indexed by neighbourhood value.
    pub fn from_table(table: [bool; 8]) -> Self {
        Self(table.iter().enumerate().fold(0u8, |n, (k, &b)| n | u8::from(b) << k))
    }

    pub fn table(self) -> [bool; 8] {
        std::array::from_fn(|k| self.output(k as u8))
    }

    /// New value for neighbourhood `k = 4·left + 2·centre + right`.
    #[inline]
    pub fn output(self, k: u8) -> bool {
        (self.0 >> (k & 7)) & 1 == 1
    }

    #[inline]
    pub fn apply(self, left: bool, centre: bool, right: bool) -> bool {
        self.output(u8::from(left) << 2 | u8::from(centre) << 1 | u8::from(right))
    }

    /// Left-right reflection: the rule that sees every neighbourhood reversed.
    pub fn mirror(self) -> Self {
        Self::from_table(std::array::from_fn(|k| {
            let k = k as u8;
            let rev = (k & 1) << 2 | (k & 2) | (k >> 2);
            self.output(rev)
        }))
    }
}

impl From<u8> for EcaRule {
    fn from(n: u8) -> Self {
        Self(n)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum EcaBoundary {
    /// Cells beyond the ends read as 0.
    #[default]
    FixedZero,
    Periodic,
}

/// One synchronous update of a whole row.
pub fn apply_rule(rule: EcaRule, row: &[bool], boundary: EcaBoundary) -> Result<Vec<bool>, EcaError> {
    let n = row.len();
    if n < 3 {
        return Err(EcaError::RowTooNarrow(n));
    }
    let at = |i: isize| -> bool {
        if (0..n as isize).contains(&i) {
            row[i as usize]
        } else {
            match boundary {
                EcaBoundary::FixedZero => false,
                EcaBoundary::Periodic => row[i.rem_euclid(n as isize) as usize],
            }
        }
    };
    Ok((0..n as isize).map(|i| rule.apply(at(i - 1), at(i), at(i + 1))).collect())
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SpacetimeDiagram {
    pub rule: EcaRule,
    pub boundary: EcaBoundary,
    /// Row `t` is the configuration at time `t`.
    pub rows: Vec<Vec<bool>>,
}

impl SpacetimeDiagram {
    pub fn width(&self) -> usize {
        self.rows.first().map_or(0, Vec::len)
    }

    pub fn steps(&self) -> usize {
        self.rows.len().saturating_sub(1)
    }
}

/// Evolve `steps` generations from `initial`; the diagram has `steps + 1` rows.
pub fn evolve(rule: EcaRule, initial: &[bool], steps: usize, boundary: EcaBoundary) -> Result<SpacetimeDiagram, EcaError> {
    if initial.len() < 3 {
        return Err(EcaError::RowTooNarrow(initial.len()));
    }
    let mut rows = Vec::with_capacity(steps + 1);
    rows.push(initial.to_vec());
    for t in 0..steps {
        let next = apply_rule(rule, &rows[t], boundary)?;
        rows.push(next);
    }
    Ok(SpacetimeDiagram { rule, boundary, rows })
}

/// Row of `width` zeros with a single 1 at `width / 2`.
pub fn single_seed(width: usize) -> Vec<bool> {
    let mut row = vec![false; width];
    if width > 0 {
        row[width / 2] = true;
    }
    row
}

/// The pattern-response matrix: every `l`-bit pattern (row, most significant
/// bit leftmost) against all 256 rules (column), each entry the `l−2`-bit
/// interior image read as a binary number.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PatternTable {
    l: usize,
    entries: Vec<u32>,
}

pub const RULE_COUNT: usize = 256;

impl PatternTable {
    pub fn pattern_length(&self) -> usize {
        self.l
    }

    /// Number of patterns, `2^l`.
    pub fn rows(&self) -> usize {
        1 << self.l
    }

    pub fn cols(&self) -> usize {
        RULE_COUNT
    }

    pub fn get(&self, pattern: usize, rule: u8) -> u32 {
        self.entries[pattern * RULE_COUNT + rule as usize]
    }

    pub fn row(&self, pattern: usize) -> &[u32] {
        &self.entries[pattern * RULE_COUNT..(pattern + 1) * RULE_COUNT]
    }

    pub fn to_matrix<T: Real>(&self) -> Matrix<T> {
        Matrix::from_fn(self.rows(), RULE_COUNT, |i, j| T::lit(f64::from(self.get(i, j as u8))))
    }
}

/// Apply `rule` once to the interior of an `l`-bit pattern.
pub fn interior_image(rule: EcaRule, pattern: u32, l: usize) -> u32 {
    (0..l - 2).fold(0u32, |acc, c| {
        let k = (pattern >> (l - 3 - c)) & 0b111;
        acc << 1 | u32::from(rule.output(k as u8))
    })
}

pub fn build_pattern_table(l: usize) -> Result<PatternTable, EcaError> {
    if l < 3 {
        return Err(EcaError::PatternTooShort(l));
    }
    if l > 24 {
        return Err(EcaError::PatternTooLong(l));
    }
    let n = 1usize << l;
    let mut entries = vec![0u32; n * RULE_COUNT];
    entries.par_chunks_mut(RULE_COUNT).enumerate().for_each(|(i, row)| {
        for (j, e) in row.iter_mut().enumerate() {
            *e = interior_image(EcaRule::new(j as u8), i as u32, l);
        }
    });
    Ok(PatternTable { l, entries })
}

/// Render an `l`-bit value as a string, most significant bit first.
pub fn bit_string(value: u32, len: usize) -> String {
    (0..len).rev().map(|b| if (value >> b) & 1 == 1 { '1' } else { '0' }).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(s: &str) -> Vec<bool> {
        s.chars().map(|c| c == '1').collect()
    }

    #[test]
    fn rule_90_table() {
        // 111→0 110→1 101→0 100→1 011→1 010→0 001→1 000→0
        let t = EcaRule::new(90).table();
        assert_eq!(t, [false, true, false, true, true, false, true, false]);
        assert_eq!(EcaRule::from_table(t).number(), 90);
    }

    #[test]
    fn number_table_round_trip() {
        for n in 0..=255u8 {
            assert_eq!(EcaRule::from_table(EcaRule::new(n).table()).number(), n);
        }
    }

    #[test]
    fn rule_90_single_step() {
        let out = apply_rule(EcaRule::new(90), &row("00100"), EcaBoundary::FixedZero).unwrap();
        assert_eq!(out, row("01010"));
    }

    #[test]
    fn rule_0_and_identity() {
        let r = row("1101001110");
        for b in [EcaBoundary::FixedZero, EcaBoundary::Periodic] {
            assert!(apply_rule(EcaRule::new(0), &r, b).unwrap().iter().all(|&c| !c));
            assert_eq!(apply_rule(EcaRule::new(204), &r, b).unwrap(), r);
        }
    }

    #[test]
    fn periodic_wraps() {
        // rule 170 copies the right neighbour: a left rotation.
        let out = apply_rule(EcaRule::new(170), &row("10011"), EcaBoundary::Periodic).unwrap();
        assert_eq!(out, row("00111"));
        let out = apply_rule(EcaRule::new(170), &row("10011"), EcaBoundary::FixedZero).unwrap();
        assert_eq!(out, row("00110"));
    }

    #[test]
    fn narrow_rows_rejected() {
        assert_eq!(apply_rule(EcaRule::new(90), &row("01"), EcaBoundary::FixedZero), Err(EcaError::RowTooNarrow(2)));
        assert!(evolve(EcaRule::new(90), &row(""), 3, EcaBoundary::FixedZero).is_err());
    }

    #[test]
    fn evolve_shapes() {
        let d = evolve(EcaRule::new(90), &single_seed(9), 0, EcaBoundary::FixedZero).unwrap();
        assert_eq!(d.rows.len(), 1);
        let d = evolve(EcaRule::new(255), &row("0100010"), 4, EcaBoundary::FixedZero).unwrap();
        assert_eq!(d.rows.len(), 5);
        assert!(d.rows[1..].iter().all(|r| r.iter().all(|&c| c)));
    }

    #[test]
    fn mirror_is_involution() {
        for n in 0..=255u8 {
            let r = EcaRule::new(n);
            assert_eq!(r.mirror().mirror(), r);
        }
        assert_eq!(EcaRule::new(90).mirror(), EcaRule::new(90));
        assert_eq!(EcaRule::new(110).mirror(), EcaRule::new(124));
    }

    #[test]
    fn table_1_entries() {
        let t = build_pattern_table(5).unwrap();
        assert_eq!(t.rows(), 32);
        assert_eq!(t.get(0b00001, 1), 0b110);
        assert_eq!(t.get(0b00001, 254), 0b001);
        assert_eq!(bit_string(t.get(0b00000, 1), 3), "111");
    }

    #[test]
    fn pattern_errors() {
        assert_eq!(build_pattern_table(2), Err(EcaError::PatternTooShort(2)));
        assert_eq!(build_pattern_table(25), Err(EcaError::PatternTooLong(25)));
    }

    #[test]
    fn bit_strings() {
        assert_eq!(bit_string(6, 3), "110");
        assert_eq!(bit_string(1, 5), "00001");
    }
}
