//! Exponential (sum-over-poles) decompositions of bath correlation functions,
//!
//! ```text
//! C_ij(t) = Σ_κ η_ijκ e^{−γ_κ t}
//! ```
//!
//! obtained by closing the frequency integral in the lower half plane. Poles
//! of `J` and of the (exact or Padé) Bose function both contribute.

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::bose::{bose_exact, BosePoles};
use super::fdt::correlation_fdt;
use super::spectral::{PoleGroup, SpectralDensitySpec};
use super::BathError;

type C64 = Complex64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExpansionScheme {
    Matsubara,
    Pade,
    Imported,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ExpansionDoc", into = "ExpansionDoc")]
pub struct BathExpansion {
    beta: f64,
    dim: usize,
    exponents: Vec<C64>,
    coefficients: Vec<DMatrix<C64>>,
    conjugate: Vec<usize>,
    scheme: ExpansionScheme,
}

impl BathExpansion {
    /// Validates and assembles an expansion. Requirements: `β > 0`,
    /// `Re γ_κ > 0`, an involutive conjugate map with `γ_κ̄ = γ_κ*` exactly,
    /// and square `dim × dim` coefficients with `dim ∈ {1, 3}`.
    pub fn new(
        beta: f64,
        exponents: Vec<C64>,
        coefficients: Vec<DMatrix<C64>>,
        conjugate: Vec<usize>,
        scheme: ExpansionScheme,
    ) -> Result<Self, BathError> {
        let bad = |m: String| Err(BathError::InvalidExpansion(m));
        if !(beta > 0.0) || !beta.is_finite() {
            return bad(format!("beta must be positive and finite (got {beta})"));
        }
        let k = exponents.len();
        if coefficients.len() != k || conjugate.len() != k {
            return bad(format!(
                "{k} exponents but {} coefficient matrices and {} conjugate entries",
                coefficients.len(),
                conjugate.len()
            ));
        }
        let dim = coefficients.first().map(|m| m.nrows()).unwrap_or(1);
        if dim != 1 && dim != 3 {
            return bad(format!("coefficient matrices must be 1x1 or 3x3 (got {dim})"));
        }
        for (kappa, (g, eta)) in exponents.iter().zip(&coefficients).enumerate() {
            if !(g.re > 0.0) || !g.im.is_finite() {
                return bad(format!("exponent {kappa} = {g} must have positive real part"));
            }
            if eta.nrows() != dim || eta.ncols() != dim {
                return bad(format!("coefficient {kappa} has shape {}x{}", eta.nrows(), eta.ncols()));
            }
            if eta.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
                return bad(format!("coefficient {kappa} is not finite"));
            }
        }
        for (kappa, &bar) in conjugate.iter().enumerate() {
            if bar >= k || conjugate[bar] != kappa {
                return bad(format!("conjugate map is not an involution at {kappa}"));
            }
            let (a, b) = (exponents[bar], exponents[kappa].conj());
            if a != b {
                return bad(format!("exponent {bar} is not the conjugate of exponent {kappa}"));
            }
        }
        Ok(Self { beta, dim, exponents, coefficients, conjugate, scheme })
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }
    /// 1 for isotropic baths (`η_ijκ = η_κ δ_ij`), 3 otherwise.
    pub fn dim(&self) -> usize {
        self.dim
    }
    pub fn len(&self) -> usize {
        self.exponents.len()
    }
    pub fn is_empty(&self) -> bool {
        self.exponents.is_empty()
    }
    pub fn exponents(&self) -> &[C64] {
        &self.exponents
    }
    pub fn coefficients(&self) -> &[DMatrix<C64>] {
        &self.coefficients
    }
    pub fn conjugate_map(&self) -> &[usize] {
        &self.conjugate
    }
    pub fn scheme(&self) -> ExpansionScheme {
        self.scheme
    }

    /// `η_ijκ` for spatial components; isotropic expansions are diagonal.
    pub fn coefficient(&self, i: usize, j: usize, kappa: usize) -> C64 {
        if self.dim == 1 {
            if i == j {
                self.coefficients[kappa][(0, 0)]
            } else {
                C64::new(0.0, 0.0)
            }
        } else {
            self.coefficients[kappa][(i, j)]
        }
    }

    pub fn to_json(&self) -> Result<String, BathError> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self, BathError> {
        Ok(serde_json::from_str(s)?)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ExpansionDoc {
    beta: f64,
    exponents: Vec<[f64; 2]>,
    coefficients: BTreeMap<String, Vec<[f64; 2]>>,
    conjugate_map: Vec<usize>,
    #[serde(default)]
    scheme: Option<ExpansionScheme>,
}

impl From<BathExpansion> for ExpansionDoc {
    fn from(e: BathExpansion) -> Self {
        let mut coefficients = BTreeMap::new();
        for i in 0..e.dim {
            for j in 0..e.dim {
                coefficients.insert(
                    format!("{i}{j}"),
                    e.coefficients.iter().map(|m| [m[(i, j)].re, m[(i, j)].im]).collect(),
                );
            }
        }
        ExpansionDoc {
            beta: e.beta,
            exponents: e.exponents.iter().map(|g| [g.re, g.im]).collect(),
            coefficients,
            conjugate_map: e.conjugate,
            scheme: Some(e.scheme),
        }
    }
}

impl TryFrom<ExpansionDoc> for BathExpansion {
    type Error = BathError;

    fn try_from(doc: ExpansionDoc) -> Result<Self, BathError> {
        let dim = match doc.coefficients.len() {
            1 => 1,
            9 => 3,
            n => return Err(BathError::InvalidExpansion(format!("expected 1 or 9 coefficient entries, found {n}"))),
        };
        let k = doc.exponents.len();
        let mut coefficients = vec![DMatrix::zeros(dim, dim); k];
        for i in 0..dim {
            for j in 0..dim {
                let key = format!("{i}{j}");
                let list = doc
                    .coefficients
                    .get(&key)
                    .ok_or_else(|| BathError::InvalidExpansion(format!("missing coefficient entry \"{key}\"")))?;
                if list.len() != k {
                    return Err(BathError::InvalidExpansion(format!(
                        "coefficient entry \"{key}\" has {} values for {k} exponents",
                        list.len()
                    )));
                }
                for (kappa, v) in list.iter().enumerate() {
                    coefficients[kappa][(i, j)] = C64::new(v[0], v[1]);
                }
            }
        }
        BathExpansion::new(
            doc.beta,
            doc.exponents.iter().map(|v| C64::new(v[0], v[1])).collect(),
            coefficients,
            doc.conjugate_map,
            doc.scheme.unwrap_or(ExpansionScheme::Imported),
        )
    }
}

fn build(spec: &SpectralDensitySpec, beta: f64, k: usize, scheme: ExpansionScheme) -> Result<BathExpansion, BathError> {
    if !(beta > 0.0) || !beta.is_finite() {
        return Err(BathError::InvalidSpec(format!("beta must be positive and finite (got {beta})")));
    }
    if matches!(spec, SpectralDensitySpec::Custom(_)) {
        return Err(BathError::Unsupported(
            "custom spectral densities have no pole structure; build the density from drude, lorentzian_mode or discrete_modes terms".into(),
        ));
    }
    spec.validate()?;
    let d = spec.dim();
    let bose = match scheme {
        ExpansionScheme::Pade => BosePoles::pade(k),
        _ => BosePoles::matsubara(k),
    };
    let bose_at = |x: C64| match scheme {
        ExpansionScheme::Pade => bose.eval(x),
        _ => bose_exact(x),
    };
    let minus_2i = C64::new(0.0, -2.0);

    let mut exponents = Vec::new();
    let mut coefficients = Vec::new();
    let mut conjugate = Vec::new();
    for (family, weight) in spec.families() {
        let groups = family.pole_groups()?.ok_or_else(|| {
            BathError::Unsupported(format!(
                "{} has no finite pole representation; sum-over-poles expansions support drude, lorentzian_mode and discrete_modes",
                family.name()
            ))
        })?;
        let w = match weight {
            Some(m) => DMatrix::from_fn(3, 3, |i, j| C64::new(m[(i, j)], 0.0)),
            None => DMatrix::from_element(1, 1, C64::new(1.0, 0.0)),
        };
        for g in groups {
            let poles = match g {
                PoleGroup::Single(p) => vec![p],
                PoleGroup::Pair(a, b) => vec![a, b],
            };
            let base = exponents.len();
            for (offset, p) in poles.iter().enumerate() {
                for xi in &bose.xi {
                    if (p.omega * beta + C64::new(0.0, *xi)).norm() < 1e-8 * xi {
                        return Err(BathError::Unsupported(format!(
                            "pole of {} at {} coincides with a Bose pole; shift beta or the family parameters",
                            family.name(),
                            p.omega
                        )));
                    }
                }
                let eta = minus_2i * p.residue * bose_at(p.omega * beta);
                // γ = iω_p; mirror poles −ω_p* give bitwise-conjugate exponents
                exponents.push(C64::new(-p.omega.im, p.omega.re));
                coefficients.push(w.map(|z| z * eta));
                conjugate.push(base + poles.len() - 1 - offset);
            }
        }
    }
    for (xi, r) in bose.xi.iter().zip(&bose.residues) {
        let nu = xi / beta;
        let j = spec.eval_complex(C64::new(0.0, -nu)).expect("analytic family");
        let scale = minus_2i * (r / beta);
        conjugate.push(exponents.len());
        exponents.push(C64::new(nu, 0.0));
        coefficients.push(j.map(|z| z * scale));
    }
    debug_assert!(coefficients.iter().all(|m| m.nrows() == d));
    BathExpansion::new(beta, exponents, coefficients, conjugate, scheme)
}

/// Poles of `J` with the exact Bose function plus `K` Matsubara terms
/// `ν_k = 2πk/β`.
pub fn matsubara_expansion(spec: &SpectralDensitySpec, beta: f64, k: usize) -> Result<BathExpansion, BathError> {
    build(spec, beta, k, ExpansionScheme::Matsubara)
}

/// Poles of `J` plus `K` poles of the `[K−1/K]` Padé approximant of the
/// Bose function; the approximant is used consistently at the `J` poles.
pub fn pade_expansion(spec: &SpectralDensitySpec, beta: f64, k: usize) -> Result<BathExpansion, BathError> {
    build(spec, beta, k, ExpansionScheme::Pade)
}

/// `Σ_κ η_ijκ e^{−γ_κ t}`.
pub fn reconstruct_correlation(exp: &BathExpansion, t: f64) -> DMatrix<C64> {
    let d = exp.dim;
    let mut c = DMatrix::zeros(d, d);
    for (g, eta) in exp.exponents.iter().zip(&exp.coefficients) {
        c += eta * (-g * t).exp();
    }
    c
}

/// `Σ_κ η*_ijκ̄ e^{−γ_κ t}`, which equals `[C_ij(t)]*` for a consistent map.
pub fn reconstruct_conjugate(exp: &BathExpansion, t: f64) -> DMatrix<C64> {
    let d = exp.dim;
    let mut c = DMatrix::zeros(d, d);
    for (kappa, g) in exp.exponents.iter().enumerate() {
        c += exp.coefficients[exp.conjugate[kappa]].map(|z| z.conj()) * (-g * t).exp();
    }
    c
}

/// Bit patterns with the sign of zero normalised away.
fn bits(z: C64) -> (u64, u64) {
    ((z.re + 0.0).to_bits(), (z.im + 0.0).to_bits())
}

/// Bitwise check that the terms of `C*(t)`, `{(γ_κ*, η_κ*)}`, coincide as a
/// multiset with the re-indexed terms `{(γ_κ, η_κ̄*)}` given by the stored map.
pub fn time_reversal_consistent(exp: &BathExpansion) -> bool {
    let key = |g: C64, eta: &DMatrix<C64>| {
        let mut v = vec![bits(g)];
        v.extend(eta.iter().map(|z| bits(z.conj())));
        v
    };
    let mut lhs: Vec<_> = exp
        .exponents
        .iter()
        .zip(&exp.coefficients)
        .map(|(g, eta)| key(g.conj(), eta))
        .collect();
    let mut rhs: Vec<_> = (0..exp.len())
        .map(|k| key(exp.exponents[k], &exp.coefficients[exp.conjugate[k]]))
        .collect();
    lhs.sort();
    rhs.sort();
    lhs == rhs
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FitReport {
    pub window: (f64, f64),
    pub samples: usize,
    /// `max_t max_ij |ΔC_ij(t)| / N` with `N = max_t max_ij |C_ij(t)|`.
    pub max_relative_error: f64,
    pub mean_relative_error: f64,
    pub max_absolute_error: f64,
    pub worst_time: f64,
    pub normalization: f64,
}

/// Compares the reconstruction with the quadrature on `samples` uniform
/// points of `window` (endpoints included).
pub fn fit_report(
    exp: &BathExpansion,
    spec: &SpectralDensitySpec,
    window: (f64, f64),
    samples: usize,
) -> Result<FitReport, BathError> {
    let (t0, t1) = window;
    if samples == 0 || !(t0 >= 0.0) || !(t1 >= t0) {
        return Err(BathError::InvalidSpec(format!("bad fit window {window:?} with {samples} samples")));
    }
    if spec.dim() != exp.dim {
        return Err(BathError::InvalidExpansion(format!(
            "expansion dimension {} does not match spectral density dimension {}",
            exp.dim,
            spec.dim()
        )));
    }
    let times: Vec<f64> = (0..samples)
        .map(|k| if samples == 1 { t0 } else { t0 + (t1 - t0) * k as f64 / (samples - 1) as f64 })
        .collect();
    fit_report_at(exp, spec, &times).map(|mut r| {
        r.window = window;
        r
    })
}

/// As [`fit_report`] on arbitrary sample times.
pub fn fit_report_at(exp: &BathExpansion, spec: &SpectralDensitySpec, times: &[f64]) -> Result<FitReport, BathError> {
    use rayon::prelude::*;
    let rows: Vec<(f64, f64, f64)> = times
        .par_iter()
        .map(|&t| {
            let exact = correlation_fdt(spec, exp.beta, t)?;
            let approx = reconstruct_correlation(exp, t);
            let diff = (&exact - &approx).iter().map(|z| z.norm()).fold(0.0, f64::max);
            let size = exact.iter().map(|z| z.norm()).fold(0.0, f64::max);
            Ok((t, diff, size))
        })
        .collect::<Result<_, BathError>>()?;
    let norm = rows.iter().map(|r| r.2).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
    let (worst_time, max_abs) = rows
        .iter()
        .fold((times.first().copied().unwrap_or(0.0), 0.0), |acc, r| if r.1 > acc.1 { (r.0, r.1) } else { acc });
    let mean = rows.iter().map(|r| r.1).sum::<f64>() / rows.len().max(1) as f64;
    Ok(FitReport {
        window: (
            times.iter().copied().fold(f64::INFINITY, f64::min),
            times.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        ),
        samples: times.len(),
        max_relative_error: max_abs / norm,
        mean_relative_error: mean / norm,
        max_absolute_error: max_abs,
        worst_time,
        normalization: norm,
    })
}
