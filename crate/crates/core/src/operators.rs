//! Dense operators on truncated bases.

use std::fmt;
use std::ops::{Add, Mul, Sub};
use std::sync::Arc;

use nalgebra::DMatrix;
use num_complex::Complex64;
use thiserror::Error;

pub type C64 = Complex64;
pub type CMatrix = DMatrix<C64>;

pub const I: C64 = C64::new(0.0, 1.0);
pub const ONE: C64 = C64::new(1.0, 0.0);
pub const ZERO: C64 = C64::new(0.0, 0.0);

const HERMITIAN_TOL: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OperatorError {
    #[error("operators live on different bases ({left} vs {right})")]
    BasisMismatch { left: String, right: String },
    #[error("matrix shape {rows}x{cols} does not match basis dimension {dim}")]
    Shape { rows: usize, cols: usize, dim: usize },
    #[error("operator is not Hermitian (|H - H^dag|_F = {0:e})")]
    NotHermitian(f64),
    #[error("invalid basis parameter: {0}")]
    InvalidParameter(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BasisKind {
    TwoLevel,
    Ring,
    Oscillator,
}

/// A finite basis: `m = -m_max..=m_max` for the ring, `n = 0..=n_max` for
/// the oscillator, `0, 1` for the two-level system.
#[derive(Debug, Clone, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(try_from = "RawBasis")]
pub struct Basis {
    kind: BasisKind,
    labels: Vec<i64>,
}

#[derive(serde::Deserialize)]
#[serde(deny_unknown_fields)]
struct RawBasis {
    kind: BasisKind,
    labels: Vec<i64>,
}

impl TryFrom<RawBasis> for Basis {
    type Error = OperatorError;
    fn try_from(raw: RawBasis) -> Result<Self, OperatorError> {
        Basis::new(raw.kind, raw.labels)
    }
}

impl Basis {
    pub fn new(kind: BasisKind, labels: Vec<i64>) -> Result<Self, OperatorError> {
        if labels.is_empty() {
            return Err(OperatorError::InvalidParameter("empty basis".into()));
        }
        if labels.windows(2).any(|w| w[0] >= w[1]) {
            return Err(OperatorError::InvalidParameter(
                "basis labels must be strictly increasing".into(),
            ));
        }
        Ok(Self { kind, labels })
    }

    pub fn two_level() -> Self {
        Self {
            kind: BasisKind::TwoLevel,
            labels: vec![0, 1],
        }
    }

    pub fn ring(m_max: usize) -> Result<Self, OperatorError> {
        if m_max < 1 {
            return Err(OperatorError::InvalidParameter(format!(
                "ring basis needs m_max >= 1, got {m_max}"
            )));
        }
        let m = m_max as i64;
        Ok(Self {
            kind: BasisKind::Ring,
            labels: (-m..=m).collect(),
        })
    }

    pub fn oscillator(n_max: usize) -> Result<Self, OperatorError> {
        if n_max < 2 {
            return Err(OperatorError::InvalidParameter(format!(
                "oscillator basis needs n_max >= 2, got {n_max}"
            )));
        }
        Ok(Self {
            kind: BasisKind::Oscillator,
            labels: (0..=n_max as i64).collect(),
        })
    }

    pub fn kind(&self) -> BasisKind {
        self.kind
    }

    pub fn dim(&self) -> usize {
        self.labels.len()
    }

    pub fn labels(&self) -> &[i64] {
        &self.labels
    }
}

impl fmt::Display for Basis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{:?}[{}..={}]",
            self.kind,
            self.labels[0],
            self.labels[self.labels.len() - 1]
        )
    }
}

/// A square complex matrix tagged with its basis.
#[derive(Debug, Clone, PartialEq)]
pub struct Operator {
    basis: Arc<Basis>,
    matrix: CMatrix,
}

impl Operator {
    pub fn new(basis: Arc<Basis>, matrix: CMatrix) -> Result<Self, OperatorError> {
        let dim = basis.dim();
        if matrix.nrows() != dim || matrix.ncols() != dim {
            return Err(OperatorError::Shape {
                rows: matrix.nrows(),
                cols: matrix.ncols(),
                dim,
            });
        }
        Ok(Self { basis, matrix })
    }

    pub(crate) fn from_parts(basis: Arc<Basis>, matrix: CMatrix) -> Self {
        debug_assert_eq!(matrix.nrows(), basis.dim());
        Self { basis, matrix }
    }

    pub fn zeros(basis: &Arc<Basis>) -> Self {
        let d = basis.dim();
        Self::from_parts(basis.clone(), CMatrix::zeros(d, d))
    }

    pub fn identity(basis: &Arc<Basis>) -> Self {
        let d = basis.dim();
        Self::from_parts(basis.clone(), CMatrix::identity(d, d))
    }

    pub fn from_real_diagonal(basis: &Arc<Basis>, diag: &[f64]) -> Result<Self, OperatorError> {
        let d = basis.dim();
        if diag.len() != d {
            return Err(OperatorError::Shape {
                rows: diag.len(),
                cols: diag.len(),
                dim: d,
            });
        }
        let mut m = CMatrix::zeros(d, d);
        for (k, v) in diag.iter().enumerate() {
            m[(k, k)] = C64::new(*v, 0.0);
        }
        Ok(Self::from_parts(basis.clone(), m))
    }

    /// `|ψ⟩⟨ψ|` for a normalised copy of `amplitudes`.
    pub fn pure_state(basis: &Arc<Basis>, amplitudes: &[C64]) -> Result<Self, OperatorError> {
        let d = basis.dim();
        if amplitudes.len() != d {
            return Err(OperatorError::Shape {
                rows: amplitudes.len(),
                cols: 1,
                dim: d,
            });
        }
        let norm = amplitudes.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        if norm == 0.0 {
            return Err(OperatorError::InvalidParameter("zero state vector".into()));
        }
        let psi = nalgebra::DVector::from_iterator(d, amplitudes.iter().map(|a| a / norm));
        Ok(Self::from_parts(basis.clone(), &psi * psi.adjoint()))
    }

    pub fn basis(&self) -> &Arc<Basis> {
        &self.basis
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> CMatrix {
        self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn same_basis(&self, other: &Operator) -> Result<(), OperatorError> {
        if Arc::ptr_eq(&self.basis, &other.basis) || self.basis == other.basis {
            Ok(())
        } else {
            Err(OperatorError::BasisMismatch {
                left: self.basis.to_string(),
                right: other.basis.to_string(),
            })
        }
    }

    pub fn hermiticity_residual(&self) -> f64 {
        (&self.matrix - self.matrix.adjoint()).norm()
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.hermiticity_residual() <= tol
    }

    pub fn ensure_hermitian(&self, tol: f64) -> Result<(), OperatorError> {
        let r = self.hermiticity_residual();
        if r > tol {
            Err(OperatorError::NotHermitian(r))
        } else {
            Ok(())
        }
    }

    pub fn scale(&self, s: C64) -> Operator {
        Self::from_parts(self.basis.clone(), &self.matrix * s)
    }

    pub fn scale_real(&self, s: f64) -> Operator {
        self.scale(C64::new(s, 0.0))
    }

    pub fn try_add(&self, other: &Operator) -> Result<Operator, OperatorError> {
        self.same_basis(other)?;
        Ok(Self::from_parts(self.basis.clone(), &self.matrix + &other.matrix))
    }

    pub fn try_sub(&self, other: &Operator) -> Result<Operator, OperatorError> {
        self.same_basis(other)?;
        Ok(Self::from_parts(self.basis.clone(), &self.matrix - &other.matrix))
    }

    pub fn try_mul(&self, other: &Operator) -> Result<Operator, OperatorError> {
        self.same_basis(other)?;
        Ok(Self::from_parts(self.basis.clone(), &self.matrix * &other.matrix))
    }

    /// Frobenius norm of the leading `keep × keep` block.
    pub fn interior_norm(&self, keep: usize) -> f64 {
        let k = keep.min(self.dim());
        self.matrix.view((0, 0), (k, k)).norm()
    }
}

impl<'a> Add for &'a Operator {
    type Output = Operator;
    fn add(self, rhs: &'a Operator) -> Operator {
        self.try_add(rhs).expect("operator basis mismatch")
    }
}

impl<'a> Sub for &'a Operator {
    type Output = Operator;
    fn sub(self, rhs: &'a Operator) -> Operator {
        self.try_sub(rhs).expect("operator basis mismatch")
    }
}

impl<'a> Mul for &'a Operator {
    type Output = Operator;
    fn mul(self, rhs: &'a Operator) -> Operator {
        self.try_mul(rhs).expect("operator basis mismatch")
    }
}

/// `[A, B] = AB - BA`.
pub fn commutator(a: &Operator, b: &Operator) -> Result<Operator, OperatorError> {
    a.same_basis(b)?;
    let m = &a.matrix * &b.matrix - &b.matrix * &a.matrix;
    Ok(Operator::from_parts(a.basis.clone(), m))
}

pub fn adjoint(a: &Operator) -> Operator {
    Operator::from_parts(a.basis.clone(), a.matrix.adjoint())
}

pub fn trace(a: &Operator) -> C64 {
    a.matrix.trace()
}

/// `tr(A ρ)`.
pub fn expectation(a: &Operator, rho: &Operator) -> Result<C64, OperatorError> {
    a.same_basis(rho)?;
    Ok(trace_of_product(&a.matrix, &rho.matrix))
}

pub(crate) fn trace_of_product(a: &CMatrix, b: &CMatrix) -> C64 {
    let d = a.nrows();
    let mut acc = ZERO;
    for i in 0..d {
        for k in 0..d {
            acc += a[(i, k)] * b[(k, i)];
        }
    }
    acc
}

/// Eigen-decomposition of a Hermitian matrix, eigenvalues ascending.
pub(crate) fn hermitian_eigen(m: &CMatrix) -> (Vec<f64>, CMatrix) {
    let eig = nalgebra::SymmetricEigen::new(m.clone());
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let vals = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let vecs = CMatrix::from_fn(m.nrows(), m.ncols(), |r, c| eig.eigenvectors[(r, order[c])]);
    (vals, vecs)
}

/// `f(H)` for Hermitian `H` through its spectral decomposition.
pub(crate) fn hermitian_function(m: &CMatrix, f: impl Fn(f64) -> C64) -> CMatrix {
    let (vals, vecs) = hermitian_eigen(m);
    let d = m.nrows();
    let mut scaled = vecs.clone();
    for c in 0..d {
        let w = f(vals[c]);
        for r in 0..d {
            scaled[(r, c)] *= w;
        }
    }
    scaled * vecs.adjoint()
}

/// `e^{-iHt}`.
pub fn propagator(h: &Operator, t: f64) -> Result<Operator, OperatorError> {
    h.ensure_hermitian(HERMITIAN_TOL * h.matrix.norm().max(1.0))?;
    let u = hermitian_function(&h.matrix, |e| C64::from_polar(1.0, -e * t));
    Ok(Operator::from_parts(h.basis.clone(), u))
}

/// `e^{-iHt} ρ e^{iHt}`.
pub fn unitary_propagate(h: &Operator, rho: &Operator, t: f64) -> Result<Operator, OperatorError> {
    h.same_basis(rho)?;
    if t == 0.0 {
        h.ensure_hermitian(HERMITIAN_TOL * h.matrix.norm().max(1.0))?;
        return Ok(rho.clone());
    }
    let u = propagator(h, t)?;
    let m = &u.matrix * &rho.matrix * u.matrix.adjoint();
    Ok(Operator::from_parts(rho.basis.clone(), m))
}

/// Matrix exponential of an arbitrary square operator (Padé scaling and squaring).
pub fn expm(a: &Operator) -> Operator {
    Operator::from_parts(a.basis.clone(), a.matrix.clone().exp())
}

/// Pauli matrices and identity on a two-level basis.
#[derive(Debug, Clone)]
pub struct TwoLevelOps {
    pub basis: Arc<Basis>,
    pub sx: Operator,
    pub sy: Operator,
    pub sz: Operator,
    pub id: Operator,
}

pub fn two_level_basis() -> TwoLevelOps {
    let basis = Arc::new(Basis::two_level());
    let m = |a: [C64; 4]| Operator::from_parts(basis.clone(), CMatrix::from_row_slice(2, 2, &a));
    TwoLevelOps {
        sx: m([ZERO, ONE, ONE, ZERO]),
        sy: m([ZERO, -I, I, ZERO]),
        sz: m([ONE, ZERO, ZERO, -ONE]),
        id: m([ONE, ZERO, ZERO, ONE]),
        basis,
    }
}

/// Particle on a ring in the angular-momentum basis `|m⟩`, `m = -m_max..=m_max`.
///
/// `e^{iθ}` raises `m` by one, so `[L_z, cos θ] = i sin θ` and
/// `[L_z, sin θ] = -i cos θ`.
#[derive(Debug, Clone)]
pub struct RingOps {
    pub basis: Arc<Basis>,
    pub lz: Operator,
    pub cos: Operator,
    pub sin: Operator,
    pub id: Operator,
}

pub fn ring_basis(m_max: usize) -> Result<RingOps, OperatorError> {
    let basis = Arc::new(Basis::ring(m_max)?);
    let d = basis.dim();
    let lz: Vec<f64> = basis.labels().iter().map(|&m| m as f64).collect();
    let mut cos = CMatrix::zeros(d, d);
    let mut sin = CMatrix::zeros(d, d);
    for k in 0..d - 1 {
        // ⟨m+1|e^{iθ}|m⟩ = 1
        cos[(k + 1, k)] = C64::new(0.5, 0.0);
        cos[(k, k + 1)] = C64::new(0.5, 0.0);
        sin[(k + 1, k)] = C64::new(0.0, -0.5);
        sin[(k, k + 1)] = C64::new(0.0, 0.5);
    }
    Ok(RingOps {
        lz: Operator::from_real_diagonal(&basis, &lz)?,
        cos: Operator::from_parts(basis.clone(), cos),
        sin: Operator::from_parts(basis.clone(), sin),
        id: Operator::identity(&basis),
        basis,
    })
}

/// Truncated harmonic oscillator `|n⟩`, `n = 0..=n_max`.
#[derive(Debug, Clone)]
pub struct OscillatorOps {
    pub basis: Arc<Basis>,
    pub x: Operator,
    pub p: Operator,
    /// `ω₀(n + 1/2)` on the diagonal.
    pub h0: Operator,
    pub id: Operator,
    pub mass: f64,
    pub frequency: f64,
}

pub fn oscillator_basis(n_max: usize, mass: f64, frequency: f64) -> Result<OscillatorOps, OperatorError> {
    if !(mass > 0.0) || !(frequency > 0.0) {
        return Err(OperatorError::InvalidParameter(format!(
            "oscillator needs mass > 0 and frequency > 0, got m = {mass}, w = {frequency}"
        )));
    }
    let basis = Arc::new(Basis::oscillator(n_max)?);
    let d = basis.dim();
    let mut a = CMatrix::zeros(d, d);
    for n in 1..d {
        a[(n - 1, n)] = C64::new((n as f64).sqrt(), 0.0);
    }
    let ad = a.adjoint();
    let x = (&a + &ad) * C64::new(1.0 / (2.0 * mass * frequency).sqrt(), 0.0);
    let p = (&ad - &a) * C64::new(0.0, (mass * frequency / 2.0).sqrt());
    let h0: Vec<f64> = (0..d).map(|n| frequency * (n as f64 + 0.5)).collect();
    Ok(OscillatorOps {
        x: Operator::from_parts(basis.clone(), x),
        p: Operator::from_parts(basis.clone(), p),
        h0: Operator::from_real_diagonal(&basis, &h0)?,
        id: Operator::identity(&basis),
        mass,
        frequency,
        basis,
    })
}
