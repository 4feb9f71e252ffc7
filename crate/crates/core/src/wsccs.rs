//! Probabilistic choice and synchronous composition of WSCCS agents, and the
//! discrete-time Markov chain of an ant colony built from them.
//!
//! Only the tick action `✓` is modelled. An agent is a weighted choice
//!
//! ```text
//! A ≡ p₁:✓.B₁ + p₂:✓.B₂ + …
//! ```
//!
//! and a composition `E × F` makes every component take one branch per tick,
//! with the product of branch weights as the joint weight.
//!
//! Everything except trajectory sampling is generic over [`Weight`], so the
//! chain can be built and analysed over exact rationals.

use std::collections::BTreeMap;
use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::rng::{self, Stream};
use crate::scalar::Weight;

#[derive(Debug, Error, PartialEq)]
pub enum WsccsError {
    #[error("agent `{0}` is not defined")]
    UndefinedAgent(String),
    #[error("agent `{0}` is defined twice")]
    DuplicateAgent(String),
    #[error("agent `{0}` has no branches")]
    NoBranches(String),
    #[error("agent `{agent}` branch weights sum to {sum}, not 1")]
    WeightsDoNotSumToOne { agent: String, sum: f64 },
    #[error("agent `{agent}` has a branch weight {weight} outside (0, 1]")]
    BadWeight { agent: String, weight: f64 },
    #[error("composition of {n} agents exceeds the exact-expansion limit of {max}")]
    TooManyAgents { n: usize, max: usize },
    #[error("parameter out of domain: {0}")]
    Domain(String),
    #[error("row {row} is not a probability distribution (sum {sum})")]
    NotStochastic { row: usize, sum: f64 },
    #[error("state {state} outside the chain's {size} states")]
    StateOutOfRange { state: usize, size: usize },
    #[error("hitting-time system is singular")]
    Singular,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum Action {
    /// The identity action: one tick of the global clock.
    #[default]
    Tick,
}

impl fmt::Display for Action {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("✓")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Branch<T> {
    pub weight: T,
    pub action: Action,
    pub next: String,
}

impl<T> Branch<T> {
    pub fn tick(weight: T, next: impl Into<String>) -> Self {
        Self { weight, action: Action::Tick, next: next.into() }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AgentDef<T> {
    pub name: String,
    pub branches: Vec<Branch<T>>,
}

impl<T> AgentDef<T> {
    pub fn new(name: impl Into<String>, branches: Vec<Branch<T>>) -> Self {
        Self { name: name.into(), branches }
    }
}

impl<T: Weight> fmt::Display for AgentDef<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} ≡ ", self.name)?;
        for (i, b) in self.branches.iter().enumerate() {
            if i > 0 {
                f.write_str(" + ")?;
            }
            write!(f, "{}:{}.{}", b.weight.to_f64(), b.action, b.next)?;
        }
        Ok(())
    }
}

/// A closed set of agent definitions: every `next` name resolves.
#[derive(Debug, Clone, PartialEq)]
pub struct AgentSystem<T> {
    defs: BTreeMap<String, AgentDef<T>>,
}

impl<T: Weight> AgentSystem<T> {
    pub fn new(defs: Vec<AgentDef<T>>) -> Result<Self, WsccsError> {
        let mut map = BTreeMap::new();
        for def in defs {
            if def.branches.is_empty() {
                return Err(WsccsError::NoBranches(def.name));
            }
            let mut sum = T::zero();
            for b in &def.branches {
                if b.weight <= T::zero() || b.weight > T::one() {
                    return Err(WsccsError::BadWeight { agent: def.name.clone(), weight: b.weight.to_f64() });
                }
                sum = sum + b.weight.clone();
            }
            if !sum.is_one_within_tolerance() {
                return Err(WsccsError::WeightsDoNotSumToOne { agent: def.name.clone(), sum: sum.to_f64() });
            }
            if map.contains_key(&def.name) {
                return Err(WsccsError::DuplicateAgent(def.name));
            }
            map.insert(def.name.clone(), def);
        }
        for def in map.values() {
            if let Some(b) = def.branches.iter().find(|b| !map.contains_key(&b.next)) {
                return Err(WsccsError::UndefinedAgent(b.next.clone()));
            }
        }
        Ok(Self { defs: map })
    }

    pub fn get(&self, name: &str) -> Option<&AgentDef<T>> {
        self.defs.get(name)
    }

    pub fn agents(&self) -> impl Iterator<Item = &AgentDef<T>> {
        self.defs.values()
    }
}

pub const ACTIVE: &str = "Active";
pub const PASSIVE: &str = "Passive";

/// `Active ≡ p:✓.Passive + (1−p):✓.Active` and `Passive ≡ 1:✓.Passive`.
pub fn ant_colony<T: Weight>(p: T) -> Result<AgentSystem<T>, WsccsError> {
    check_open_unit(&p)?;
    AgentSystem::new(vec![
        AgentDef::new(ACTIVE, vec![Branch::tick(p.clone(), PASSIVE), Branch::tick(T::one() - p, ACTIVE)]),
        AgentDef::new(PASSIVE, vec![Branch::tick(T::one(), PASSIVE)]),
    ])
}

fn check_open_unit<T: Weight>(p: &T) -> Result<(), WsccsError> {
    if *p > T::zero() && *p < T::one() {
        Ok(())
    } else {
        Err(WsccsError::Domain(format!("p = {} must lie in (0, 1)", p.to_f64())))
    }
}

/// A composition of agents, as counts per agent name. Zero counts are not
/// stored.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct ProcessState(BTreeMap<String, usize>);

impl ProcessState {
    pub fn new<S: Into<String>>(counts: impl IntoIterator<Item = (S, usize)>) -> Self {
        let mut map = BTreeMap::new();
        for (name, c) in counts {
            if c > 0 {
                *map.entry(name.into()).or_insert(0) += c;
            }
        }
        Self(map)
    }

    /// `∏ⁱ Active × ∏ⁿ⁻ⁱ Passive`.
    pub fn colony(n: usize, active: usize) -> Self {
        Self::new([(ACTIVE, active), (PASSIVE, n.saturating_sub(active))])
    }

    pub fn count(&self, name: &str) -> usize {
        self.0.get(name).copied().unwrap_or(0)
    }

    pub fn total(&self) -> usize {
        self.0.values().sum()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, usize)> {
        self.0.iter().map(|(k, &v)| (k.as_str(), v))
    }
}

impl fmt::Display for ProcessState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(|(k, v)| format!("{v}·{k}")).collect();
        f.write_str(&parts.join(" × "))
    }
}

/// Largest composition expanded exactly by [`compose_step`].
pub const MAX_COMPOSED_AGENTS: usize = 16;

/// Successor distribution of one tick of the composition, obtained by
/// enumerating every joint branch assignment of the individual agents.
pub fn compose_step<T: Weight>(
    system: &AgentSystem<T>,
    state: &ProcessState,
) -> Result<BTreeMap<ProcessState, T>, WsccsError> {
    let n = state.total();
    if n > MAX_COMPOSED_AGENTS {
        return Err(WsccsError::TooManyAgents { n, max: MAX_COMPOSED_AGENTS });
    }
    let mut agents = Vec::with_capacity(n);
    for (name, count) in state.iter() {
        let def = system.get(name).ok_or_else(|| WsccsError::UndefinedAgent(name.to_string()))?;
        agents.extend(std::iter::repeat_n(def, count));
    }

    fn expand<'a, T: Weight>(
        agents: &[&'a AgentDef<T>],
        weight: T,
        chosen: &mut Vec<&'a str>,
        out: &mut BTreeMap<ProcessState, T>,
    ) {
        match agents.split_first() {
            None => {
                let next = ProcessState::new(chosen.iter().map(|&s| (s, 1)));
                let slot = out.entry(next).or_insert_with(T::zero);
                *slot = slot.clone() + weight;
            }
            Some((head, rest)) => {
                for b in &head.branches {
                    chosen.push(&b.next);
                    expand(rest, weight.clone() * b.weight.clone(), chosen, out);
                    chosen.pop();
                }
            }
        }
    }

    let mut out = BTreeMap::new();
    expand(&agents, T::one(), &mut Vec::with_capacity(n), &mut out);
    Ok(out)
}

/// Row-stochastic matrix over states labelled `0..size`.
#[derive(Debug, Clone, PartialEq)]
pub struct TransitionMatrix<T> {
    rows: Vec<Vec<T>>,
}

impl<T: Weight> TransitionMatrix<T> {
    pub fn new(rows: Vec<Vec<T>>) -> Result<Self, WsccsError> {
        let size = rows.len();
        for (i, row) in rows.iter().enumerate() {
            if row.len() != size {
                return Err(WsccsError::Domain(format!("row {i} has {} entries, expected {size}", row.len())));
            }
            let mut sum = T::zero();
            for x in row {
                if *x < T::zero() {
                    return Err(WsccsError::NotStochastic { row: i, sum: f64::NAN });
                }
                sum = sum + x.clone();
            }
            if !sum.is_one_within_tolerance() {
                return Err(WsccsError::NotStochastic { row: i, sum: sum.to_f64() });
            }
        }
        Ok(Self { rows })
    }

    pub fn size(&self) -> usize {
        self.rows.len()
    }

    pub fn get(&self, from: usize, to: usize) -> &T {
        &self.rows[from][to]
    }

    pub fn row(&self, i: usize) -> &[T] {
        &self.rows[i]
    }

    pub fn rows(&self) -> &[Vec<T>] {
        &self.rows
    }

    fn check_state(&self, s: usize) -> Result<(), WsccsError> {
        if s < self.size() {
            Ok(())
        } else {
            Err(WsccsError::StateOutOfRange { state: s, size: self.size() })
        }
    }

    /// Row vector times this matrix.
    pub fn propagate_distribution(&self, dist: &[T]) -> Vec<T> {
        let n = self.size();
        (0..n)
            .map(|j| {
                dist.iter()
                    .zip(&self.rows)
                    .fold(T::zero(), |acc, (d, row)| acc + d.clone() * row[j].clone())
            })
            .collect()
    }

    fn mul(&self, rhs: &Self) -> Self {
        Self { rows: self.rows.iter().map(|r| rhs.propagate_distribution(r)).collect() }
    }

    /// `Pᵗ` by repeated squaring.
    pub fn power(&self, t: u64) -> Self {
        let n = self.size();
        let mut acc = Self {
            rows: (0..n).map(|i| (0..n).map(|j| if i == j { T::one() } else { T::zero() }).collect()).collect(),
        };
        let mut base = self.clone();
        let mut e = t;
        while e > 0 {
            if e & 1 == 1 {
                acc = acc.mul(&base);
            }
            e >>= 1;
            if e > 0 {
                base = base.mul(&base);
            }
        }
        acc
    }

    pub fn to_f64(&self) -> TransitionMatrix<f64> {
        TransitionMatrix { rows: self.rows.iter().map(|r| r.iter().map(Weight::to_f64).collect()).collect() }
    }
}

/// Binomial thinning row `k ↦ C(i,k) p^{i−k} (1−p)^k` for `k = 0..=i`.
///
/// Terms are generated by their ratio recurrence outward from the mode and
/// then normalised, so no intermediate binomial coefficient or power can
/// overflow. Over exact rationals the normalisation is exact.
fn binomial_row<T: Weight>(i: usize, p: &T) -> Vec<T> {
    let q = T::one() - p.clone();
    let mode = (((i + 1) as f64) * q.to_f64()).floor().clamp(0.0, i as f64) as usize;
    let mut terms = vec![T::zero(); i + 1];
    terms[mode] = T::one();
    // t_{k+1} / t_k = (i−k)/(k+1) · q/p
    for k in mode..i {
        let num = T::from_usize(i - k) * q.clone();
        let den = T::from_usize(k + 1) * p.clone();
        terms[k + 1] = terms[k].clone() * num / den;
    }
    for k in (1..=mode).rev() {
        let num = T::from_usize(k) * p.clone();
        let den = T::from_usize(i - k + 1) * q.clone();
        terms[k - 1] = terms[k].clone() * num / den;
    }
    let total = terms.iter().fold(T::zero(), |acc, t| acc + t.clone());
    terms.into_iter().map(|t| t / total.clone()).collect()
}

/// Chain of the active-ant count for a colony of `n` ants: from `i` active,
/// each active ant independently turns passive with probability `p`.
pub fn colony_matrix<T: Weight>(n: usize, p: T) -> Result<TransitionMatrix<T>, WsccsError> {
    if n == 0 {
        return Err(WsccsError::Domain("colony needs n ≥ 1".into()));
    }
    check_open_unit(&p)?;
    let rows = (0..=n)
        .map(|i| {
            let mut row = vec![T::zero(); n + 1];
            for (k, t) in binomial_row(i, &p).into_iter().enumerate() {
                row[k] = t;
            }
            row
        })
        .collect();
    TransitionMatrix::new(rows)
}

/// Collapse a distribution over compositions onto the number of `Active`
/// agents.
pub fn project_active_counts<T: Weight>(dist: &BTreeMap<ProcessState, T>, n: usize) -> Vec<T> {
    let mut out = vec![T::zero(); n + 1];
    for (state, w) in dist {
        let k = state.count(ACTIVE);
        out[k] = out[k].clone() + w.clone();
    }
    out
}

/// The colony chain obtained by brute-force expansion of every composition
/// `Colonyₙ(i)`, projected onto active counts.
pub fn colony_matrix_by_composition<T: Weight>(n: usize, p: T) -> Result<TransitionMatrix<T>, WsccsError> {
    let system = ant_colony(p)?;
    let rows = (0..=n)
        .map(|i| compose_step(&system, &ProcessState::colony(n, i)).map(|d| project_active_counts(&d, n)))
        .collect::<Result<Vec<_>, _>>()?;
    TransitionMatrix::new(rows)
}

/// Sampled paths `A_0, A_1, …, A_T`, one per trial.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Trajectories {
    pub paths: Vec<Vec<usize>>,
}

impl Trajectories {
    /// Histogram of `A_t` over trials.
    pub fn histogram(&self, t: usize, size: usize) -> Vec<u64> {
        let mut h = vec![0u64; size];
        for p in &self.paths {
            h[p[t]] += 1;
        }
        h
    }
}

/// Sample `trials` independent paths of `steps` transitions from `start`.
/// Trial `k` draws from its own ChaCha stream keyed on `(seed, k)`, so the
/// output does not depend on how trials are scheduled.
pub fn simulate<T: Weight + Sync>(
    chain: &TransitionMatrix<T>,
    start: usize,
    steps: usize,
    trials: usize,
    seed: u64,
) -> Result<Trajectories, WsccsError> {
    chain.check_state(start)?;
    let cumulative: Vec<Vec<f64>> = chain
        .rows
        .iter()
        .map(|r| {
            r.iter()
                .scan(0.0, |acc, x| {
                    *acc += x.to_f64();
                    Some(*acc)
                })
                .collect()
        })
        .collect();
    let paths = (0..trials)
        .into_par_iter()
        .map(|trial| {
            let mut rng = ChaCha8Rng::seed_from_u64(rng::keyed(seed, &[Stream::Trial as u64, trial as u64]));
            let mut path = Vec::with_capacity(steps + 1);
            let mut s = start;
            path.push(s);
            for _ in 0..steps {
                let u: f64 = rng.gen();
                let cum = &cumulative[s];
                // The last entry absorbs rounding in the cumulative sum.
                s = cum.iter().position(|&c| u < c).unwrap_or_else(|| {
                    cum.iter().rposition(|_| true).expect("non-empty row")
                });
                path.push(s);
            }
            path
        })
        .collect();
    Ok(Trajectories { paths })
}

/// Expected number of steps to first reach `target` from every state, by
/// first-step analysis: `h = 1 + Q h` on the states other than `target`.
pub fn expected_hitting_times<T: Weight>(chain: &TransitionMatrix<T>, target: usize) -> Result<Vec<T>, WsccsError> {
    chain.check_state(target)?;
    let others: Vec<usize> = (0..chain.size()).filter(|&s| s != target).collect();
    let m = others.len();
    // Augmented system (I − Q) h = 1.
    let mut a: Vec<Vec<T>> = others
        .iter()
        .enumerate()
        .map(|(r, &i)| {
            let mut row: Vec<T> = others
                .iter()
                .enumerate()
                .map(|(c, &j)| {
                    let id = if r == c { T::one() } else { T::zero() };
                    id - chain.rows[i][j].clone()
                })
                .collect();
            row.push(T::one());
            row
        })
        .collect();
    for col in 0..m {
        let pivot = (col..m)
            .max_by(|&x, &y| a[x][col].abs().partial_cmp(&a[y][col].abs()).unwrap_or(std::cmp::Ordering::Equal))
            .ok_or(WsccsError::Singular)?;
        if a[pivot][col].is_zero() {
            return Err(WsccsError::Singular);
        }
        a.swap(col, pivot);
        let pivot_row = a[col].clone();
        for (r, row) in a.iter_mut().enumerate() {
            if r != col && !row[col].is_zero() {
                let f = row[col].clone() / pivot_row[col].clone();
                for (x, p) in row[col..].iter_mut().zip(&pivot_row[col..]) {
                    *x = x.clone() - p.clone() * f.clone();
                }
            }
        }
    }
    let mut h = vec![T::zero(); chain.size()];
    for (r, &i) in others.iter().enumerate() {
        h[i] = a[r][m].clone() / a[r][r].clone();
        if h[i] < T::zero() {
            return Err(WsccsError::Singular);
        }
    }
    Ok(h)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChainAnalysis<T> {
    /// `e_start · Pᵗ`.
    pub distribution: Vec<T>,
    /// Expected steps to reach state 0 from `start`.
    pub expected_absorption: T,
    /// Expected steps to reach state 0 from every state.
    pub absorption_times: Vec<T>,
}

/// Exact state distribution after `t` steps and expected absorption time
/// into state 0.
pub fn analyze<T: Weight>(chain: &TransitionMatrix<T>, start: usize, t: u64) -> Result<ChainAnalysis<T>, WsccsError> {
    chain.check_state(start)?;
    let distribution = chain.power(t).rows[start].clone();
    let absorption_times = expected_hitting_times(chain, 0)?;
    Ok(ChainAnalysis { expected_absorption: absorption_times[start].clone(), distribution, absorption_times })
}
