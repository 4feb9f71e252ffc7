//! Karhunen-Loève / principal component analysis and the rule-space study
//! of the 256 elementary CA rules.
//!
//! Data matrices are `n × p`: rows are observations (patterns), columns are
//! variables (rules). The rule-space pipeline is
//!
//! 1. build the pattern-response table `F` for pattern length `l`;
//! 2. centre every column, `x_ij = f_ij − E_j`;
//! 3. weight with the diagonal norm `M = diag(1/S_j²)`;
//! 4. eigen-decompose the `p × p` correlation matrix `W R Wᵀ`, `W = M^{1/2}`,
//!    `R = XᵀX / n`.
//!
//! Constant columns (`S_j = 0`, rules 0 and 255) have no finite weight. They
//! are carried as zero rows and columns of the correlation matrix, so its
//! trace is `p − |mask|`.

use thiserror::Error;

use crate::eca::{self, EcaError};
use crate::linalg::{self, LinalgError, Matrix, Spectrum};
use crate::scalar::Real;

#[derive(Debug, Error, PartialEq)]
pub enum PcaError {
    #[error("data matrix has no rows")]
    NoObservations,
    #[error("data matrix must be centred first")]
    NotCentered,
    #[error("retained components {m} exceed dimension {p}")]
    TooManyComponents { m: usize, p: usize },
    #[error("pattern length {0} outside 3..=12")]
    PatternLength(usize),
    #[error("norm has {norm} weights but data has {data} columns")]
    NormShape { norm: usize, data: usize },
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error(transparent)]
    Eca(#[from] EcaError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct DataMatrix<T> {
    values: Matrix<T>,
    centered: bool,
}

impl<T: Real> DataMatrix<T> {
    pub fn new(values: Matrix<T>) -> Self {
        Self { values, centered: false }
    }

    pub fn values(&self) -> &Matrix<T> {
        &self.values
    }

    pub fn is_centered(&self) -> bool {
        self.centered
    }

    pub fn n(&self) -> usize {
        self.values.rows()
    }

    pub fn p(&self) -> usize {
        self.values.cols()
    }

    pub fn column_means(&self) -> Vec<T> {
        let n = T::count(self.n());
        (0..self.p())
            .map(|j| (0..self.n()).fold(T::zero(), |acc, i| acc + self.values[(i, j)]) / n)
            .collect()
    }
}

/// Subtract every column mean, `x_ij = f_ij − E_j`.
pub fn center<T: Real>(data: &DataMatrix<T>) -> Result<DataMatrix<T>, PcaError> {
    if data.n() == 0 {
        return Err(PcaError::NoObservations);
    }
    let means = data.column_means();
    let values = Matrix::from_fn(data.n(), data.p(), |i, j| data.values[(i, j)] - means[j]);
    Ok(DataMatrix { values, centered: true })
}

/// `S_j² = (1/n) Σ_i x_ij²` of a centred matrix.
pub fn column_variances<T: Real>(x: &DataMatrix<T>) -> Result<Vec<T>, PcaError> {
    if !x.centered {
        return Err(PcaError::NotCentered);
    }
    if x.n() == 0 {
        return Err(PcaError::NoObservations);
    }
    let n = T::count(x.n());
    Ok((0..x.p())
        .map(|j| (0..x.n()).fold(T::zero(), |acc, i| acc + x.values[(i, j)] * x.values[(i, j)]) / n)
        .collect())
}

/// Diagonal norm `M = diag(1/S_j²)` with zero-variance columns masked out.
#[derive(Debug, Clone, PartialEq)]
pub struct NormMatrix<T> {
    variances: Vec<T>,
    mask: Vec<bool>,
}

impl<T: Real> NormMatrix<T> {
    /// A column is masked when its variance is zero, or below `ε²` times the
    /// largest variance (rounding residue of a constant column).
    pub fn from_variances(variances: Vec<T>) -> Self {
        let max = variances.iter().copied().fold(T::zero(), T::max);
        let floor = T::epsilon() * T::epsilon() * max;
        let mask = variances.iter().map(|&v| v <= floor).collect();
        Self { variances, mask }
    }

    pub fn len(&self) -> usize {
        self.variances.len()
    }

    pub fn is_empty(&self) -> bool {
        self.variances.is_empty()
    }

    pub fn variances(&self) -> &[T] {
        &self.variances
    }

    pub fn is_masked(&self, j: usize) -> bool {
        self.mask[j]
    }

    /// Indices of the zero-variance columns.
    pub fn zero_variance_mask(&self) -> Vec<usize> {
        self.mask.iter().enumerate().filter(|(_, &m)| m).map(|(j, _)| j).collect()
    }

    /// `1/S_j²`, or `None` on the mask.
    pub fn weight(&self, j: usize) -> Option<T> {
        (!self.mask[j]).then(|| T::one() / self.variances[j])
    }

    /// `1/S_j` (the diagonal of `W = M^{1/2}`), zero on the mask.
    pub fn sqrt_weight(&self, j: usize) -> T {
        if self.mask[j] {
            T::zero()
        } else {
            T::one() / self.variances[j].sqrt()
        }
    }
}

/// `Ĉ_jk = (1/n) Σ_i x_ij x_ik / (S_j S_k)`; masked rows and columns are 0.
pub fn correlation_matrix<T: Real>(x: &DataMatrix<T>, norm: &NormMatrix<T>) -> Result<Matrix<T>, PcaError> {
    if !x.centered {
        return Err(PcaError::NotCentered);
    }
    if norm.len() != x.p() {
        return Err(PcaError::NormShape { norm: norm.len(), data: x.p() });
    }
    let n = T::count(x.n());
    let scaled = Matrix::from_fn(x.n(), x.p(), |i, j| x.values[(i, j)] * norm.sqrt_weight(j));
    let g = scaled.gram();
    Ok(Matrix::from_fn(x.p(), x.p(), |j, k| g[(j, k)] / n))
}

/// `R = XᵀX / n` of a centred matrix.
pub fn covariance_matrix<T: Real>(x: &DataMatrix<T>) -> Result<Matrix<T>, PcaError> {
    if x.n() == 0 {
        return Err(PcaError::NoObservations);
    }
    let n = T::count(x.n());
    let g = x.values.gram();
    Ok(Matrix::from_fn(x.p(), x.p(), |j, k| g[(j, k)] / n))
}

/// Symmetric eigen-decomposition, descending eigenvalues.
pub fn eig_sym<T: Real>(a: &Matrix<T>) -> Result<Spectrum<T>, PcaError> {
    Ok(linalg::eig_sym(a)?)
}

/// Optimal rank-`m` projector of a data set, with the mean-square
/// reconstruction error of every truncation.
#[derive(Debug, Clone)]
pub struct KlTransform<T> {
    data: Matrix<T>,
    spectrum: Spectrum<T>,
}

impl<T: Real> KlTransform<T> {
    /// Decompose `R = XᵀX / n`. `x` is used as given: centre it first for
    /// the usual PCA.
    pub fn fit(x: &DataMatrix<T>) -> Result<Self, PcaError> {
        let r = covariance_matrix(x)?;
        Ok(Self { data: x.values.clone(), spectrum: linalg::eig_sym(&r)? })
    }

    pub fn spectrum(&self) -> &Spectrum<T> {
        &self.spectrum
    }

    /// `J_m = (1/n) Σ_j ‖u_j − Φ_m Φ_mᵀ u_j‖²`, evaluated directly from the
    /// reconstruction residual.
    pub fn error(&self, m: usize) -> Result<T, PcaError> {
        let p = self.data.cols();
        if m > p {
            return Err(PcaError::TooManyComponents { m, p });
        }
        let phi = self.spectrum.eigenvectors.leading_columns(m);
        let coords = self.data.matmul(&phi)?;
        let recon = coords.matmul(&phi.transpose())?;
        let resid = self.data.sub(&recon)?;
        let ss = resid.frobenius_norm();
        Ok(ss * ss / T::count(self.data.rows()))
    }
}

/// Mean-square error of the best rank-`m` reconstruction of `x`. Equals the
/// sum of the `p − m` smallest eigenvalues of `XᵀX / n`.
pub fn kl_error<T: Real>(x: &DataMatrix<T>, m: usize) -> Result<T, PcaError> {
    if m > x.p() {
        return Err(PcaError::TooManyComponents { m, p: x.p() });
    }
    KlTransform::fit(x)?.error(m)
}

/// How constant columns enter the rule-space correlation matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ConstantColumns {
    /// Keep them as zero rows/columns (`p × p` matrix).
    #[default]
    Zero,
    /// Remove them before building the matrix (`(p − |mask|)²` matrix).
    Drop,
}

#[derive(Debug, Clone)]
pub struct RuleSpaceAnalysis<T> {
    pub pattern_length: usize,
    /// Rule index of every correlation-matrix column.
    pub rules: Vec<u8>,
    pub norm: NormMatrix<T>,
    pub correlation: Matrix<T>,
    /// Spectrum of the correlation matrix (weighted frame).
    pub spectrum: Spectrum<T>,
}

impl<T: Real> RuleSpaceAnalysis<T> {
    /// Eigenvectors mapped back to the unweighted frame,
    /// `a_k = W â_k` with `W = diag(1/S_j)` (0 on the mask), each column
    /// rescaled to unit length.
    pub fn original_frame_eigenvectors(&self) -> Matrix<T> {
        let p = self.rules.len();
        let vecs = &self.spectrum.eigenvectors;
        let weight = |i: usize| self.norm.sqrt_weight(self.rules[i] as usize);
        let mut out = Matrix::from_fn(p, p, |i, k| weight(i) * vecs[(i, k)]);
        for k in 0..p {
            let len = (0..p).fold(T::zero(), |acc, i| acc + out[(i, k)] * out[(i, k)]).sqrt();
            if len > T::zero() {
                for i in 0..p {
                    out[(i, k)] = out[(i, k)] / len;
                }
            }
        }
        out
    }
}

/// Largest pattern length accepted by [`analyze_rulespace`].
pub const MAX_PATTERN_LENGTH: usize = 12;

/// Correlation spectrum of the pattern-response matrix of the 256 rules.
pub fn analyze_rulespace<T: Real>(l: usize, constant: ConstantColumns) -> Result<RuleSpaceAnalysis<T>, PcaError> {
    if !(3..=MAX_PATTERN_LENGTH).contains(&l) {
        return Err(PcaError::PatternLength(l));
    }
    let table = eca::build_pattern_table(l)?;
    let x = center(&DataMatrix::new(table.to_matrix::<T>()))?;
    let full_norm = NormMatrix::from_variances(column_variances(&x)?);
    let rules: Vec<u8> = match constant {
        ConstantColumns::Zero => (0..=255).collect(),
        ConstantColumns::Drop => (0..=255u8).filter(|&j| !full_norm.is_masked(j as usize)).collect(),
    };
    let correlation = if rules.len() == x.p() {
        correlation_matrix(&x, &full_norm)?
    } else {
        let kept = DataMatrix {
            values: Matrix::from_fn(x.n(), rules.len(), |i, j| x.values[(i, rules[j] as usize)]),
            centered: true,
        };
        let norm = NormMatrix::from_variances(rules.iter().map(|&r| full_norm.variances[r as usize]).collect());
        correlation_matrix(&kept, &norm)?
    };
    let spectrum = linalg::eig_sym(&correlation)?;
    Ok(RuleSpaceAnalysis { pattern_length: l, rules, norm: full_norm, correlation, spectrum })
}
