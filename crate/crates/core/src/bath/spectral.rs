//! Spectral density families.

use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, Matrix3, Vector3};
use num_complex::Complex64;

use super::BathError;

type C64 = Complex64;

/// Odd scalar spectral functions `s(ω) = −s(−ω)`.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum ScalarFamily {
    /// `2λγω / (ω² + γ²)`
    Drude { lambda: f64, gamma: f64 },
    /// `η ω e^{−|ω|/ω_c}`
    OhmicExponential { eta: f64, cutoff: f64 },
    /// Underdamped or overdamped Brownian mode,
    /// `2λω₀²γω / ((ω₀² − ω²)² + γ²ω²)`.
    LorentzianMode { lambda: f64, omega0: f64, gamma: f64 },
    /// A cavity line `π g² [δ_w(ω − ω_k) − δ_w(ω + ω_k)]` with the delta
    /// functions broadened to Lorentzians of half-width `w`.
    BroadenedLine { frequency: f64, weight: f64, width: f64 },
}

/// A pole `ω_p` of `s` in the lower half plane with its residue.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct Pole {
    pub omega: C64,
    pub residue: C64,
}

/// Lower-half-plane poles grouped so that mirror partners (`ω ↔ −ω*`) are
/// adjacent: `Single` poles lie on the imaginary axis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) enum PoleGroup {
    Single(Pole),
    Pair(Pole, Pole),
}

impl ScalarFamily {
    pub fn validate(&self) -> Result<(), BathError> {
        let bad = |msg: String| Err(BathError::InvalidSpec(msg));
        match *self {
            ScalarFamily::Drude { lambda, gamma } => {
                if !(lambda >= 0.0) || !(gamma > 0.0) {
                    return bad(format!("drude needs lambda >= 0 and gamma > 0 (got {lambda}, {gamma})"));
                }
            }
            ScalarFamily::OhmicExponential { eta, cutoff } => {
                if !(eta >= 0.0) || !(cutoff > 0.0) {
                    return bad(format!("ohmic_exponential needs eta >= 0 and cutoff > 0 (got {eta}, {cutoff})"));
                }
            }
            ScalarFamily::LorentzianMode { lambda, omega0, gamma } => {
                if !(lambda >= 0.0) || !(omega0 > 0.0) || !(gamma > 0.0) {
                    return bad(format!(
                        "lorentzian_mode needs lambda >= 0, omega0 > 0, gamma > 0 (got {lambda}, {omega0}, {gamma})"
                    ));
                }
            }
            ScalarFamily::BroadenedLine { frequency, weight, width } => {
                if !(frequency > 0.0) || !(weight >= 0.0) || !(width > 0.0) {
                    return bad(format!(
                        "mode needs frequency > 0, weight >= 0, width > 0 (got {frequency}, {weight}, {width})"
                    ));
                }
            }
        }
        Ok(())
    }

    pub fn eval(&self, w: f64) -> f64 {
        match *self {
            ScalarFamily::Drude { lambda, gamma } => 2.0 * lambda * gamma * w / (w * w + gamma * gamma),
            ScalarFamily::OhmicExponential { eta, cutoff } => eta * w * (-w.abs() / cutoff).exp(),
            ScalarFamily::LorentzianMode { lambda, omega0, gamma } => {
                let w0 = omega0 * omega0;
                let d = w0 - w * w;
                2.0 * lambda * w0 * gamma * w / (d * d + gamma * gamma * w * w)
            }
            ScalarFamily::BroadenedLine { frequency, weight, width } => {
                let a = w - frequency;
                let b = w + frequency;
                weight * width * (1.0 / (a * a + width * width) - 1.0 / (b * b + width * width))
            }
        }
    }

    /// Analytic continuation; for the exponential cutoff the branch is chosen
    /// by the sign of `Re z`.
    pub fn eval_complex(&self, z: C64) -> C64 {
        match *self {
            ScalarFamily::Drude { lambda, gamma } => z * (2.0 * lambda * gamma) / (z * z + gamma * gamma),
            ScalarFamily::OhmicExponential { eta, cutoff } => {
                let sign = if z.re >= 0.0 { -1.0 } else { 1.0 };
                z * eta * (z * (sign / cutoff)).exp()
            }
            ScalarFamily::LorentzianMode { lambda, omega0, gamma } => {
                let w0 = omega0 * omega0;
                let d = -(z * z) + w0;
                z * (2.0 * lambda * w0 * gamma) / (d * d + z * z * (gamma * gamma))
            }
            ScalarFamily::BroadenedLine { frequency, weight, width } => {
                let a = z - frequency;
                let b = z + frequency;
                let w2 = width * width;
                ((a * a + w2).inv() - (b * b + w2).inv()) * (weight * width)
            }
        }
    }

    /// `s'(0)`.
    pub fn slope_at_zero(&self) -> f64 {
        match *self {
            ScalarFamily::Drude { lambda, gamma } => 2.0 * lambda / gamma,
            ScalarFamily::OhmicExponential { eta, .. } => eta,
            ScalarFamily::LorentzianMode { lambda, omega0, gamma } => 2.0 * lambda * gamma / (omega0 * omega0),
            ScalarFamily::BroadenedLine { frequency, weight, width } => {
                let d = frequency * frequency + width * width;
                4.0 * weight * width * frequency / (d * d)
            }
        }
    }

    /// Frequency scale beyond which `s` is in its asymptotic tail.
    pub fn frequency_scale(&self) -> f64 {
        match *self {
            ScalarFamily::Drude { gamma, .. } => gamma,
            ScalarFamily::OhmicExponential { cutoff, .. } => cutoff,
            ScalarFamily::LorentzianMode { omega0, gamma, .. } => omega0 + gamma,
            ScalarFamily::BroadenedLine { frequency, width, .. } => frequency + width,
        }
    }

    pub fn decays_exponentially(&self) -> bool {
        matches!(self, ScalarFamily::OhmicExponential { .. })
    }

    pub fn name(&self) -> &'static str {
        match self {
            ScalarFamily::Drude { .. } => "drude",
            ScalarFamily::OhmicExponential { .. } => "ohmic_exponential",
            ScalarFamily::LorentzianMode { .. } => "lorentzian_mode",
            ScalarFamily::BroadenedLine { .. } => "broadened_line",
        }
    }

    /// Lower-half-plane poles, or `None` when the family has no finite pole
    /// representation.
    pub(crate) fn pole_groups(&self) -> Result<Option<Vec<PoleGroup>>, BathError> {
        let i = C64::new(0.0, 1.0);
        Ok(match *self {
            ScalarFamily::Drude { lambda, gamma } => Some(vec![PoleGroup::Single(Pole {
                omega: C64::new(0.0, -gamma),
                residue: C64::new(lambda * gamma, 0.0),
            })]),
            ScalarFamily::OhmicExponential { .. } => None,
            ScalarFamily::LorentzianMode { lambda, omega0, gamma } => {
                // roots of ω² + iγω − ω₀² = 0
                let disc = 4.0 * omega0 * omega0 - gamma * gamma;
                if disc == 0.0 {
                    return Err(BathError::Unsupported(
                        "critically damped lorentzian_mode has a double pole".into(),
                    ));
                }
                let res = |p: C64, q: C64| i * (lambda * omega0 * omega0) / (p - q);
                if disc > 0.0 {
                    let a = C64::new(0.5 * disc.sqrt(), -0.5 * gamma);
                    let b = -a.conj();
                    Some(vec![PoleGroup::Pair(
                        Pole { omega: a, residue: res(a, b) },
                        Pole { omega: b, residue: res(b, a) },
                    )])
                } else {
                    let s = (-disc).sqrt();
                    let a = C64::new(0.0, -0.5 * (gamma - s));
                    let b = C64::new(0.0, -0.5 * (gamma + s));
                    Some(vec![
                        PoleGroup::Single(Pole { omega: a, residue: res(a, b) }),
                        PoleGroup::Single(Pole { omega: b, residue: res(b, a) }),
                    ])
                }
            }
            ScalarFamily::BroadenedLine { frequency, weight, width } => {
                let a = C64::new(frequency, -width);
                let b = -a.conj();
                Some(vec![PoleGroup::Pair(
                    Pole { omega: a, residue: C64::new(0.0, 0.5 * weight) },
                    Pole { omega: b, residue: C64::new(0.0, -0.5 * weight) },
                )])
            }
        })
    }
}

/// A single cavity mode: frequency, weight `g_k²` (quantisation constant
/// absorbed) and its polarisation vectors.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct CavityMode {
    pub frequency: f64,
    pub weight: f64,
    pub polarizations: Vec<[f64; 3]>,
    /// Lorentzian half-width; defaults to `1e-2 · frequency`.
    #[serde(default)]
    pub width: Option<f64>,
}

/// `J_ij += s(ω) W_ij` with `W` real symmetric.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralTerm {
    pub family: ScalarFamily,
    pub weight: Matrix3<f64>,
}

pub type CustomSpectral = Arc<dyn Fn(f64) -> Matrix3<C64> + Send + Sync>;

#[derive(Clone)]
pub enum SpectralDensitySpec {
    /// `J_ij = s(ω) δ_ij`; expansions are stored as 1×1.
    Isotropic(ScalarFamily),
    /// Full 3×3 composite.
    Matrix(Vec<SpectralTerm>),
    /// Arbitrary `J(ω)` for symmetry checks only.
    Custom(CustomSpectral),
}

impl fmt::Debug for SpectralDensitySpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SpectralDensitySpec::Isotropic(s) => f.debug_tuple("Isotropic").field(s).finish(),
            SpectralDensitySpec::Matrix(t) => f.debug_tuple("Matrix").field(t).finish(),
            SpectralDensitySpec::Custom(_) => write!(f, "Custom(..)"),
        }
    }
}

impl SpectralDensitySpec {
    pub fn validate(&self) -> Result<(), BathError> {
        match self {
            SpectralDensitySpec::Isotropic(s) => s.validate(),
            SpectralDensitySpec::Matrix(terms) => {
                if terms.is_empty() {
                    return Err(BathError::InvalidSpec("matrix spectral density has no terms".into()));
                }
                for t in terms {
                    t.family.validate()?;
                    if (t.weight - t.weight.transpose()).norm() != 0.0 {
                        return Err(BathError::InvalidSpec("term weight matrix must be symmetric".into()));
                    }
                }
                Ok(())
            }
            SpectralDensitySpec::Custom(_) => Ok(()),
        }
    }

    /// Builds the broadened mode-sum `J_ij = π Σ_k g_k² Σ_s ε_ki ε_kj [δ(ω−ω_k) − δ(ω+ω_k)]`.
    pub fn discrete_modes(modes: &[CavityMode]) -> Result<Self, BathError> {
        if modes.is_empty() {
            return Err(BathError::InvalidSpec("discrete_modes needs at least one mode".into()));
        }
        let terms = modes
            .iter()
            .map(|m| {
                let mut w = Matrix3::zeros();
                for p in &m.polarizations {
                    let e = Vector3::from(*p);
                    w += e * e.transpose();
                }
                SpectralTerm {
                    family: ScalarFamily::BroadenedLine {
                        frequency: m.frequency,
                        weight: m.weight,
                        width: m.width.unwrap_or(1e-2 * m.frequency),
                    },
                    weight: w,
                }
            })
            .collect();
        let spec = SpectralDensitySpec::Matrix(terms);
        spec.validate()?;
        Ok(spec)
    }

    /// Matrix dimension of `J`: 1 for isotropic, 3 otherwise.
    pub fn dim(&self) -> usize {
        match self {
            SpectralDensitySpec::Isotropic(_) => 1,
            _ => 3,
        }
    }

    pub fn kind(&self) -> String {
        match self {
            SpectralDensitySpec::Isotropic(s) => s.name().to_string(),
            SpectralDensitySpec::Matrix(_) => "matrix".into(),
            SpectralDensitySpec::Custom(_) => "custom".into(),
        }
    }

    pub(crate) fn eval_into(&self, w: f64, out: &mut DMatrix<C64>) {
        match self {
            SpectralDensitySpec::Isotropic(s) => out[(0, 0)] = C64::new(s.eval(w), 0.0),
            SpectralDensitySpec::Matrix(terms) => {
                out.fill(C64::new(0.0, 0.0));
                for t in terms {
                    let v = t.family.eval(w);
                    for i in 0..3 {
                        for j in 0..3 {
                            out[(i, j)] += C64::new(v * t.weight[(i, j)], 0.0);
                        }
                    }
                }
            }
            SpectralDensitySpec::Custom(f) => {
                let m = f(w);
                for i in 0..3 {
                    for j in 0..3 {
                        out[(i, j)] = m[(i, j)];
                    }
                }
            }
        }
    }

    /// `J(z)` off the real axis; `None` for custom specs.
    pub(crate) fn eval_complex(&self, z: C64) -> Option<DMatrix<C64>> {
        match self {
            SpectralDensitySpec::Isotropic(s) => Some(DMatrix::from_element(1, 1, s.eval_complex(z))),
            SpectralDensitySpec::Matrix(terms) => {
                let mut out = DMatrix::zeros(3, 3);
                for t in terms {
                    let v = t.family.eval_complex(z);
                    for i in 0..3 {
                        for j in 0..3 {
                            out[(i, j)] += v * t.weight[(i, j)];
                        }
                    }
                }
                Some(out)
            }
            SpectralDensitySpec::Custom(_) => None,
        }
    }

    /// `J'(0)`; custom specs use a central difference.
    pub(crate) fn slope_at_zero(&self) -> DMatrix<C64> {
        match self {
            SpectralDensitySpec::Isotropic(s) => DMatrix::from_element(1, 1, C64::new(s.slope_at_zero(), 0.0)),
            SpectralDensitySpec::Matrix(terms) => {
                let mut out = DMatrix::zeros(3, 3);
                for t in terms {
                    let v = t.family.slope_at_zero();
                    for i in 0..3 {
                        for j in 0..3 {
                            out[(i, j)] += C64::new(v * t.weight[(i, j)], 0.0);
                        }
                    }
                }
                out
            }
            SpectralDensitySpec::Custom(f) => {
                let h = 1e-6;
                let d = (f(h) - f(-h)) / C64::new(2.0 * h, 0.0);
                DMatrix::from_fn(3, 3, |i, j| d[(i, j)])
            }
        }
    }

    pub(crate) fn families(&self) -> Vec<(&ScalarFamily, Option<&Matrix3<f64>>)> {
        match self {
            SpectralDensitySpec::Isotropic(s) => vec![(s, None)],
            SpectralDensitySpec::Matrix(terms) => terms.iter().map(|t| (&t.family, Some(&t.weight))).collect(),
            SpectralDensitySpec::Custom(_) => vec![],
        }
    }

    pub(crate) fn frequency_scale(&self) -> f64 {
        self.families()
            .iter()
            .map(|(f, _)| f.frequency_scale())
            .fold(0.0, f64::max)
    }
}

/// `J_ij(ω)`.
pub fn eval_spectral_density(spec: &SpectralDensitySpec, w: f64) -> DMatrix<C64> {
    let d = spec.dim();
    let mut out = DMatrix::zeros(d, d);
    spec.eval_into(w, &mut out);
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SymmetryCheck {
    /// `J*_ij(ω) = −J_ij(−ω)`
    Oddness,
    /// `J*_ij(ω) = J_ji(ω)`
    Hermiticity,
    /// `J_ii(ω)/ω ≥ 0`
    Positivity,
    /// `|J_ij|² ≤ J_ii J_jj`
    CauchySchwarz,
}

#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct SymmetryViolation {
    pub check: SymmetryCheck,
    pub i: usize,
    pub j: usize,
    pub omega: f64,
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct SymmetryReport {
    pub points: usize,
    pub max_residual: f64,
    pub violations: Vec<SymmetryViolation>,
}

impl SymmetryReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

pub const SYMMETRY_TOL: f64 = 1e-12;

/// Pointwise check of the symmetry and positivity relations of `J`.
pub fn validate_symmetry(spec: &SpectralDensitySpec, grid: &[f64]) -> Result<SymmetryReport, BathError> {
    if grid.is_empty() {
        return Err(BathError::InvalidSpec("symmetry grid is empty".into()));
    }
    let d = spec.dim();
    let mut plus = DMatrix::zeros(d, d);
    let mut minus = DMatrix::zeros(d, d);
    let mut violations = Vec::new();
    let mut max_residual: f64 = 0.0;
    let mut flag = |check, i, j, omega, residual: f64, tol: f64| {
        max_residual = max_residual.max(residual);
        if residual > tol {
            violations.push(SymmetryViolation { check, i, j, omega, residual });
        }
    };
    for &w in grid {
        spec.eval_into(w, &mut plus);
        spec.eval_into(-w, &mut minus);
        for i in 0..d {
            for j in 0..d {
                let v = plus[(i, j)];
                let tol = SYMMETRY_TOL * v.norm().max(1.0);
                flag(SymmetryCheck::Oddness, i, j, w, (v.conj() + minus[(i, j)]).norm(), tol);
                flag(SymmetryCheck::Hermiticity, i, j, w, (v.conj() - plus[(j, i)]).norm(), tol);
            }
        }
        for i in 0..d {
            let jii = plus[(i, i)].re;
            if w != 0.0 {
                let tol = SYMMETRY_TOL * (jii / w).abs().max(1.0);
                flag(SymmetryCheck::Positivity, i, i, w, (-jii / w).max(0.0), tol);
            }
            for j in (i + 1)..d {
                let lhs = plus[(i, j)].norm_sqr();
                let rhs = plus[(i, i)].re * plus[(j, j)].re;
                let tol = SYMMETRY_TOL * lhs.max(rhs.abs()).max(1.0);
                flag(SymmetryCheck::CauchySchwarz, i, j, w, (lhs - rhs).max(0.0), tol);
            }
        }
    }
    Ok(SymmetryReport { points: grid.len(), max_residual, violations })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid() -> Vec<f64> {
        (0..1000).map(|k| -20.0 + 40.0 * k as f64 / 999.0).collect()
    }

    #[test]
    fn drude_plug_in() {
        let s = SpectralDensitySpec::Isotropic(ScalarFamily::Drude { lambda: 0.5, gamma: 1.0 });
        assert_eq!(eval_spectral_density(&s, 1.0)[(0, 0)].re, 0.5);
        assert_eq!(eval_spectral_density(&s, 0.0)[(0, 0)].re, 0.0);
        let r = validate_symmetry(&s, &grid()).unwrap();
        assert!(r.passed());
        assert_eq!(r.max_residual, 0.0);
    }

    #[test]
    fn odd_families_vanish_at_zero() {
        for f in [
            ScalarFamily::Drude { lambda: 0.3, gamma: 2.0 },
            ScalarFamily::OhmicExponential { eta: 0.7, cutoff: 3.0 },
            ScalarFamily::LorentzianMode { lambda: 0.2, omega0: 1.5, gamma: 0.4 },
            ScalarFamily::BroadenedLine { frequency: 2.0, weight: 0.1, width: 0.05 },
        ] {
            assert_eq!(f.eval(0.0), 0.0);
            assert_eq!(f.eval(-1.3), -f.eval(1.3));
        }
    }

    #[test]
    fn single_mode_line_shape() {
        let spec = SpectralDensitySpec::discrete_modes(&[CavityMode {
            frequency: 2.0,
            weight: 0.1,
            polarizations: vec![[1.0, 0.0, 0.0]],
            width: Some(0.05),
        }])
        .unwrap();
        // direct evaluation of the broadened delta pair
        let lorentz = |x: f64| (0.05 / std::f64::consts::PI) / (x * x + 0.05 * 0.05);
        for w in [-2.5, -2.0, -1.0, 0.3, 1.97, 2.0, 4.0] {
            let direct = std::f64::consts::PI * 0.1 * (lorentz(w - 2.0) - lorentz(w + 2.0));
            let j = eval_spectral_density(&spec, w);
            assert!((j[(0, 0)].re - direct).abs() < 1e-12 * direct.abs().max(1.0));
            assert_eq!(j[(1, 1)].re, 0.0);
        }
        let peak = eval_spectral_density(&spec, 2.0)[(0, 0)].re;
        assert!(peak > eval_spectral_density(&spec, 1.95)[(0, 0)].re);
        assert!(peak > eval_spectral_density(&spec, 2.05)[(0, 0)].re);
        assert_eq!(eval_spectral_density(&spec, -2.0)[(0, 0)].re, -peak);
    }

    #[test]
    fn matrix_composite_passes() {
        let w = Matrix3::new(1.0, 0.3, 0.0, 0.3, 0.5, 0.1, 0.0, 0.1, 0.2);
        let spec = SpectralDensitySpec::Matrix(vec![
            SpectralTerm { family: ScalarFamily::Drude { lambda: 0.2, gamma: 1.0 }, weight: w },
            SpectralTerm {
                family: ScalarFamily::LorentzianMode { lambda: 0.1, omega0: 2.0, gamma: 0.3 },
                weight: Matrix3::identity(),
            },
        ]);
        assert!(validate_symmetry(&spec, &grid()).unwrap().passed());
    }

    #[test]
    fn imaginary_antisymmetric_offdiagonal() {
        // Im J_xy must be even in ω and antisymmetric in (x, y).
        let kappa = 0.05;
        let good: CustomSpectral = Arc::new(move |w: f64| {
            let d = 2.0 * w / (1.0 + w * w);
            let off = C64::new(0.0, kappa * d * d);
            Matrix3::new(
                C64::new(d, 0.0), off, C64::new(0.0, 0.0),
                -off, C64::new(d, 0.0), C64::new(0.0, 0.0),
                C64::new(0.0, 0.0), C64::new(0.0, 0.0), C64::new(d, 0.0),
            )
        });
        let r = validate_symmetry(&SpectralDensitySpec::Custom(good), &grid()).unwrap();
        assert!(r.passed(), "{:?}", r.violations.first());

        // i κ ω is odd, which breaks J*(ω) = −J(−ω)
        let odd: CustomSpectral = Arc::new(move |w: f64| {
            let d = 2.0 * w / (1.0 + w * w);
            let off = C64::new(0.0, kappa * w);
            Matrix3::new(
                C64::new(d, 0.0), off, C64::new(0.0, 0.0),
                -off, C64::new(d, 0.0), C64::new(0.0, 0.0),
                C64::new(0.0, 0.0), C64::new(0.0, 0.0), C64::new(d, 0.0),
            )
        });
        let r = validate_symmetry(&SpectralDensitySpec::Custom(odd), &[0.5]).unwrap();
        assert!(r.violations.iter().any(|v| v.check == SymmetryCheck::Oddness && v.i == 0 && v.j == 1));
    }

    #[test]
    fn broken_hermiticity_is_flagged() {
        let bad: CustomSpectral = Arc::new(|w: f64| {
            let mut m = Matrix3::from_diagonal_element(C64::new(w, 0.0));
            m[(0, 1)] = C64::new(0.1 * w, 0.0);
            m[(1, 0)] = C64::new(0.2 * w, 0.0);
            m
        });
        let r = validate_symmetry(&SpectralDensitySpec::Custom(bad), &[1.0, 2.0]).unwrap();
        let pairs: Vec<_> = r
            .violations
            .iter()
            .filter(|v| v.check == SymmetryCheck::Hermiticity)
            .map(|v| (v.i, v.j, v.omega))
            .collect();
        assert!(pairs.contains(&(0, 1, 1.0)));
        assert!(pairs.contains(&(1, 0, 2.0)));
    }

    #[test]
    fn negative_weight_fails_positivity() {
        let spec = SpectralDensitySpec::Isotropic(ScalarFamily::Drude { lambda: -0.1, gamma: 1.0 });
        assert!(spec.validate().is_err());
        let r = validate_symmetry(&spec, &[1.0]).unwrap();
        assert!(r.violations.iter().any(|v| v.check == SymmetryCheck::Positivity));
    }

    #[test]
    fn complex_continuation_agrees_on_real_axis() {
        for f in [
            ScalarFamily::Drude { lambda: 0.3, gamma: 2.0 },
            ScalarFamily::OhmicExponential { eta: 0.7, cutoff: 3.0 },
            ScalarFamily::LorentzianMode { lambda: 0.2, omega0: 1.5, gamma: 0.4 },
            ScalarFamily::BroadenedLine { frequency: 2.0, weight: 0.1, width: 0.05 },
        ] {
            for w in [-3.0, -0.2, 0.7, 5.0] {
                let z = f.eval_complex(C64::new(w, 0.0));
                assert!((z.re - f.eval(w)).abs() < 1e-13 && z.im.abs() < 1e-13);
            }
            let h = 1e-6;
            let fd = (f.eval(h) - f.eval(-h)) / (2.0 * h);
            assert!((fd - f.slope_at_zero()).abs() < 1e-6 * fd.abs().max(1.0));
        }
    }

    #[test]
    fn pole_residues_match_laurent_limit() {
        for f in [
            ScalarFamily::Drude { lambda: 0.3, gamma: 2.0 },
            ScalarFamily::LorentzianMode { lambda: 0.2, omega0: 1.5, gamma: 0.4 },
            ScalarFamily::LorentzianMode { lambda: 0.2, omega0: 0.5, gamma: 3.0 },
            ScalarFamily::BroadenedLine { frequency: 2.0, weight: 0.1, width: 0.05 },
        ] {
            let groups = f.pole_groups().unwrap().unwrap();
            for g in groups {
                let poles = match g {
                    PoleGroup::Single(p) => vec![p],
                    PoleGroup::Pair(a, b) => {
                        assert_eq!(b.omega, -a.omega.conj());
                        vec![a, b]
                    }
                };
                for p in poles {
                    assert!(p.omega.im < 0.0);
                    let eps = C64::new(1e-7, 1e-7);
                    let approx = f.eval_complex(p.omega + eps) * eps;
                    assert!((approx - p.residue).norm() < 1e-5 * p.residue.norm(), "{f:?}");
                }
            }
        }
        assert!(ScalarFamily::OhmicExponential { eta: 1.0, cutoff: 1.0 }.pole_groups().unwrap().is_none());
    }
}
