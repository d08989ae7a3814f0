//! Reference solutions that do not go through the hierarchy.

use num_complex::Complex64;
use thiserror::Error;

use crate::bath::quadrature::{integrate_half_line, integrate_partition};
use crate::bath::{BathExpansion, ScalarFamily, SpectralDensitySpec};
use crate::frames::{FrameTrajectory, RotationSpec, TranslationSpec};
use crate::model::{system_hamiltonian_at, ModelError, SystemModel};
use crate::operators::{hermitian_eigen, hermitian_function, unitary_propagate, CMatrix, Operator, OperatorError};

type C64 = Complex64;

/// Step of the midpoint product formula for time-dependent `H_S`.
pub const PRODUCT_STEP: f64 = 1e-4;
pub const CLOSED_SYSTEM_TOL: f64 = 1e-8;
pub const DEPHASING_TOL: f64 = 1e-4;
const GAMMA_ABS_TOL: f64 = 1e-12;
const MAX_SEGMENTS: usize = 200_000;

#[derive(Debug, Error)]
pub enum OracleError {
    #[error("oracle not applicable: {0}")]
    NotApplicable(String),
    #[error("quadrature for Γ(t) did not converge at t = {t} (error {error:.3e})")]
    NonConvergent { t: f64, error: f64 },
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Operator(#[from] OperatorError),
}

/// Reference density matrices on a time grid.
#[derive(Debug, Clone, PartialEq)]
pub struct OracleResult {
    pub name: String,
    pub times: Vec<f64>,
    pub values: Vec<CMatrix>,
    pub tolerance: f64,
}

impl OracleResult {
    /// Largest elementwise deviation of `other` (same grid) from the reference.
    pub fn max_deviation(&self, other: &[CMatrix]) -> f64 {
        self.values
            .iter()
            .zip(other)
            .map(|(a, b)| (a - b).iter().map(|z| z.norm()).fold(0.0, f64::max))
            .fold(0.0, f64::max)
    }
}

/// `H_S` is constant when the frame rotates (if at all) about a fixed axis
/// at a fixed rate and the acceleration, seen from the rotating frame, does
/// not change.
fn hamiltonian_is_static(frame: &FrameTrajectory) -> Result<bool, OracleError> {
    let axis = match &frame.rotation {
        RotationSpec::None => None,
        RotationSpec::ConstantAxis { axis, omega } => (*omega != 0.0).then_some(*axis),
        _ => return Ok(frame.is_rotation_trivial() && matches!(frame.translation, TranslationSpec::None | TranslationSpec::Boost { .. })),
    };
    Ok(match &frame.translation {
        TranslationSpec::None | TranslationSpec::Boost { .. } => true,
        TranslationSpec::ConstantAccel { acceleration } => match axis {
            None => true,
            Some(n) => acceleration.cross(&n).norm() <= 1e-15 * acceleration.norm() * n.norm(),
        },
        TranslationSpec::Callback { .. } => false,
    })
}

/// `ρ(t) = U(t) ρ₀ U(t)†` under `H_S(t)` alone.
pub fn closed_system_oracle(
    model: &SystemModel,
    frame: &FrameTrajectory,
    rho0: &Operator,
    t_grid: &[f64],
) -> Result<OracleResult, OracleError> {
    closed_system_oracle_with_step(model, frame, rho0, t_grid, PRODUCT_STEP)
}

/// As [`closed_system_oracle`]; `step` is the midpoint-product step used
/// when `H_S` depends on time.
pub fn closed_system_oracle_with_step(
    model: &SystemModel,
    frame: &FrameTrajectory,
    rho0: &Operator,
    t_grid: &[f64],
    step: f64,
) -> Result<OracleResult, OracleError> {
    check_grid(t_grid)?;
    rho0.same_basis(&Operator::zeros(&model.basis))?;
    let mut values = Vec::with_capacity(t_grid.len());
    if hamiltonian_is_static(frame)? {
        let h = system_hamiltonian_at(model, frame, 0.0)?;
        for &t in t_grid {
            values.push(unitary_propagate(&h, rho0, t)?.into_matrix());
        }
        return Ok(OracleResult { name: "closed_system".into(), times: t_grid.to_vec(), values, tolerance: CLOSED_SYSTEM_TOL });
    }
    if !(step > 0.0) {
        return Err(OracleError::NotApplicable(format!("product step must be positive, got {step}")));
    }
    let mut rho = rho0.matrix().clone();
    let mut t = 0.0;
    for &target in t_grid {
        let span = target - t;
        let n = (span / step).ceil().max(0.0) as usize;
        let h = if n > 0 { span / n as f64 } else { 0.0 };
        for k in 0..n {
            let mid = t + (k as f64 + 0.5) * h;
            let hm = system_hamiltonian_at(model, frame, mid)?;
            let u = hermitian_function(hm.matrix(), |e| C64::from_polar(1.0, -e * h));
            rho = &u * &rho * u.adjoint();
        }
        t = target;
        values.push(rho.clone());
    }
    Ok(OracleResult { name: "closed_system".into(), times: t_grid.to_vec(), values, tolerance: CLOSED_SYSTEM_TOL })
}

fn check_grid(t_grid: &[f64]) -> Result<(), OracleError> {
    if t_grid.iter().any(|t| !(t.is_finite() && *t >= 0.0)) || t_grid.windows(2).any(|w| w[1] < w[0]) {
        return Err(OracleError::NotApplicable("time grid must be finite, non-negative and sorted".into()));
    }
    Ok(())
}

/// Source of the bath correlation for the dephasing oracle.
#[derive(Debug, Clone, Copy)]
pub enum DephasingKernel<'a> {
    /// `C(t) = Σ_κ η_κ e^{−γ_κ t}`.
    Expansion(&'a BathExpansion),
    /// `C(t)` from the spectral density through the thermal integral.
    Spectral { spec: &'a SpectralDensitySpec, beta: f64 },
}

/// `∫_0^t (t − s) e^{−γ s} ds = (γt − 1 + e^{−γt}) / γ²`.
fn ramp_integral(gamma: C64, t: f64) -> C64 {
    let x = gamma * t;
    if x.norm() < 0.1 {
        // t² Σ_k (−x)^k / (k+2)!
        let mut term = C64::new(0.5, 0.0);
        let mut acc = term;
        for k in 1..20 {
            term *= -x / (k as f64 + 2.0);
            acc += term;
        }
        acc * t * t
    } else {
        (x - 1.0 + (-x).exp()) / (gamma * gamma)
    }
}

/// `Γ(t) = 4 ∫_0^t (t − s) Re C(s) ds` for a scalar bath.
pub fn dephasing_gamma(kernel: DephasingKernel<'_>, t: f64) -> Result<f64, OracleError> {
    if t == 0.0 {
        return Ok(0.0);
    }
    match kernel {
        DephasingKernel::Expansion(exp) => {
            if exp.dim() != 1 {
                return Err(OracleError::NotApplicable("dephasing oracle needs a scalar bath".into()));
            }
            let mut acc = C64::new(0.0, 0.0);
            for (k, &g) in exp.exponents().iter().enumerate() {
                acc += exp.coefficients()[k][(0, 0)] * ramp_integral(g, t);
            }
            Ok(4.0 * acc.re)
        }
        DephasingKernel::Spectral { spec, beta } => match spec {
            SpectralDensitySpec::Isotropic(f) => spectral_gamma(f, beta, t),
            _ => Err(OracleError::NotApplicable("dephasing oracle needs a scalar bath".into())),
        },
    }
}

/// `Γ(t) = 4 ∫_0^t (t − s) c(s) ds` for an arbitrary real kernel `c`.
pub fn dephasing_gamma_from_correlation(re_c: impl Fn(f64) -> f64, t: f64) -> Result<f64, OracleError> {
    if t == 0.0 {
        return Ok(0.0);
    }
    let r = integrate_partition(
        |s, out: &mut [C64]| out[0] = C64::new((t - s) * re_c(s), 0.0),
        &[0.0, t],
        1,
        GAMMA_ABS_TOL,
        MAX_SEGMENTS,
    )
    .map_err(|f| OracleError::NonConvergent { t, error: f.error })?;
    Ok(4.0 * r.value[0].re)
}

/// `(4/π) ∫_0^∞ J(ω) coth(βω/2) (1 − cos ωt) / ω² dω`.
fn spectral_gamma(family: &ScalarFamily, beta: f64, t: f64) -> Result<f64, OracleError> {
    if !(beta > 0.0) {
        return Err(OracleError::NotApplicable(format!("beta must be positive, got {beta}")));
    }
    let weight = |w: f64| -> f64 {
        // g(ω) = (4/π) J coth(βω/2) / ω²
        4.0 / std::f64::consts::PI * family.eval(w) / (0.5 * beta * w).tanh() / (w * w)
    };
    let integrand = |w: f64| -> f64 {
        if w < 1e-8 * family.frequency_scale().min(1.0 / beta) {
            return 4.0 / std::f64::consts::PI * family.slope_at_zero() * t * t / beta;
        }
        let s = (0.5 * w * t).sin();
        weight(w) * 2.0 * s * s
    };
    let scale = family.frequency_scale();
    let cut = (200.0 * scale).max(200.0 / beta);
    let mut points = vec![0.0];
    let mut p = 0.1 * scale.min(1.0 / beta);
    while p < cut {
        points.push(p);
        p *= 4.0;
    }
    let period = 2.0 * std::f64::consts::PI / t;
    let n_osc = ((cut / period) as usize).min(50_000);
    points.extend((1..=n_osc).map(|k| k as f64 * period));
    points.push(cut);
    points.retain(|&x| x <= cut);
    points.sort_by(f64::total_cmp);
    points.dedup();
    let tol = GAMMA_ABS_TOL;
    let body = integrate_partition(|w, out: &mut [C64]| out[0] = C64::new(integrand(w), 0.0), &points, 1, tol, MAX_SEGMENTS)
        .map_err(|f| OracleError::NonConvergent { t, error: f.error })?;
    // tail: ∫ g − ∫ g cos ωt, the latter by two integrations by parts
    let smooth = integrate_half_line(|y, out: &mut [C64]| out[0] = C64::new(weight(cut + y), 0.0), 1, tol, MAX_SEGMENTS)
        .map_err(|f| OracleError::NonConvergent { t, error: f.error })?;
    let h = 1e-4 * cut;
    let g = weight(cut);
    let dg = (weight(cut + h) - weight(cut - h)) / (2.0 * h);
    let osc = -g * (cut * t).sin() / t - dg * (cut * t).cos() / (t * t);
    Ok(body.value[0].re + smooth.value[0].re - osc)
}

/// Coherent two-level dynamics under `ω₀σ_z/2 + q σ_z·A`:
/// `ρ₀₁(t) = ρ₀₁(0) e^{−iω₀t} e^{−q²Γ(t)}`, populations frozen.
pub fn pure_dephasing_oracle(
    omega0: f64,
    q: f64,
    kernel: DephasingKernel<'_>,
    rho0: &Operator,
    t_grid: &[f64],
) -> Result<OracleResult, OracleError> {
    check_grid(t_grid)?;
    if rho0.dim() != 2 {
        return Err(OracleError::NotApplicable("dephasing oracle needs a two-level system".into()));
    }
    let mut values = Vec::with_capacity(t_grid.len());
    for &t in t_grid {
        let gamma = dephasing_gamma(kernel, t)?;
        let mut m = rho0.matrix().clone();
        let c = m[(0, 1)] * C64::from_polar((-q * q * gamma).exp(), -omega0 * t);
        m[(0, 1)] = c;
        m[(1, 0)] = c.conj();
        values.push(m);
    }
    Ok(OracleResult { name: "pure_dephasing".into(), times: t_grid.to_vec(), values, tolerance: DEPHASING_TOL })
}

/// `e^{−βH} / tr e^{−βH}`.
pub fn gibbs_oracle(h: &Operator, beta: f64) -> Result<Operator, OracleError> {
    h.ensure_hermitian(1e-12 * h.matrix().norm().max(1.0))?;
    if !(beta >= 0.0) {
        return Err(OracleError::NotApplicable(format!("beta must be non-negative, got {beta}")));
    }
    let e0 = hermitian_eigen(h.matrix()).0[0];
    let w = hermitian_function(h.matrix(), |e| C64::new((-beta * (e - e0)).exp(), 0.0));
    let z = w.trace();
    Ok(Operator::new(h.basis().clone(), w / z)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bath::pade_expansion;
    use crate::frames::TranslationSpec;
    use crate::operators::two_level_basis;
    use nalgebra::Vector3;

    fn coherent() -> Operator {
        let b = two_level_basis();
        let s = C64::new(0.5f64.sqrt(), 0.0);
        Operator::pure_state(&b.basis, &[s, s]).unwrap()
    }

    #[test]
    fn ring_phases_are_analytic() {
        let m = SystemModel::ring(4, 1.0, 1.0, 0.0, 0.0).unwrap();
        let f = FrameTrajectory::rotating(Vector3::z(), 0.3).unwrap();
        let d = m.basis.dim();
        let amp = C64::new(1.0 / (d as f64).sqrt(), 0.0);
        let rho0 = Operator::pure_state(&m.basis, &vec![amp; d]).unwrap();
        let r = closed_system_oracle(&m, &f, &rho0, &[0.0, 2.5, 10.0]).unwrap();
        let labels = m.basis.labels();
        for (t, v) in r.times.iter().zip(&r.values) {
            for a in 0..d {
                for b in 0..d {
                    let e = |m: i64| (m * m) as f64 / 2.0 - 0.3 * m as f64;
                    let want = amp * amp * C64::from_polar(1.0, -(e(labels[a]) - e(labels[b])) * t);
                    assert!((v[(a, b)] - want).norm() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn two_level_precession() {
        let m = SystemModel::two_level(1.3, 0.0, 1.0, 0.0, &[]).unwrap();
        let r = closed_system_oracle(&m, &FrameTrajectory::inertial(), &coherent(), &[0.0, 1.0, 7.0]).unwrap();
        for (t, v) in r.times.iter().zip(&r.values) {
            assert!((v[(0, 1)] - C64::from_polar(0.5, -1.3 * t)).norm() < 1e-13);
            assert!((v[(0, 0)].re - 0.5).abs() < 1e-13);
        }
    }

    #[test]
    fn product_formula_converges_at_second_order() {
        // growing acceleration on the oscillator makes H_S time dependent
        let m = SystemModel::oscillator(8, 1.0, 1.0, 0.0).unwrap();
        let f = FrameTrajectory::translating(TranslationSpec::Callback {
            path: std::sync::Arc::new(|t: f64| Vector3::new(0.1 * t * t * t, 0.0, 0.0)),
            step: 1e-3,
        })
        .unwrap();
        let d = m.basis.dim();
        let rho0 = Operator::from_real_diagonal(&m.basis, &(0..d).map(|k| if k == 1 { 1.0 } else { 0.0 }).collect::<Vec<_>>()).unwrap();
        let run = |h: f64| closed_system_oracle_with_step(&m, &f, &rho0, &[2.0], h).unwrap().values[0].clone();
        let r1 = run(0.02);
        let r2 = run(0.01);
        let r3 = run(0.005);
        let ratio = (&r1 - &r2).norm() / (&r2 - &r3).norm();
        assert!(ratio > 3.5 && ratio < 4.5, "ratio {ratio}");
    }

    #[test]
    fn gibbs_limits() {
        let b = two_level_basis();
        let h = b.sz.scale_real(-0.5);
        let inf = gibbs_oracle(&h, 0.0).unwrap();
        assert!((inf.matrix() - b.id.matrix().scale(0.5)).norm() < 1e-15);
        let cold = gibbs_oracle(&h, 1e4).unwrap();
        // ground state of −σ_z/2 is |0⟩
        assert!((cold.matrix()[(0, 0)].re - 1.0).abs() < 1e-15);
        let g = gibbs_oracle(&h, 1.0).unwrap();
        let e = (-1.0f64).exp();
        assert!((g.matrix()[(0, 0)].re - 1.0 / (1.0 + e)).abs() < 1e-14);
        assert!((g.matrix()[(1, 1)].re - e / (1.0 + e)).abs() < 1e-14);
    }

    #[test]
    fn ramp_integral_branches_agree() {
        for g in [C64::new(0.3, 2.0), C64::new(1e-3, 0.0), C64::new(5.0, -1.0)] {
            for t in [1e-3, 0.0199, 0.0201, 0.5, 3.0] {
                let q = integrate_partition(
                    |s, out: &mut [C64]| out[0] = (-g * s).exp() * (t - s),
                    &[0.0, t],
                    1,
                    1e-15,
                    1000,
                )
                .unwrap();
                let v = ramp_integral(g, t);
                assert!((v - q.value[0]).norm() <= 1e-13 * v.norm().max(1e-6), "{g} {t}");
            }
        }
    }

    #[test]
    fn zero_kernel_gives_pure_phase() {
        let spec = SpectralDensitySpec::Isotropic(ScalarFamily::Drude { lambda: 0.0, gamma: 1.0 });
        let exp = pade_expansion(&spec, 1.0, 2).unwrap();
        let r = pure_dephasing_oracle(1.0, 1.0, DephasingKernel::Expansion(&exp), &coherent(), &[0.0, 3.0]).unwrap();
        assert!((r.values[1][(0, 1)] - C64::from_polar(0.5, -3.0)).norm() < 1e-15);
    }

    #[test]
    fn real_exponential_kernel_closed_form() {
        let (c0, g) = (0.7, 1.9);
        let exp = BathExpansion::new(1.0, vec![C64::new(g, 0.0)], vec![nalgebra::DMatrix::from_element(1, 1, C64::new(c0, 0.0))], vec![0], crate::bath::ExpansionScheme::Imported).unwrap();
        for t in [0.01, 0.3, 2.0, 10.0] {
            let want = 4.0 * c0 / (g * g) * (g * t - 1.0 + (-g * t).exp());
            let got = dephasing_gamma(DephasingKernel::Expansion(&exp), t).unwrap();
            let quad = dephasing_gamma_from_correlation(|s| c0 * (-g * s).exp(), t).unwrap();
            assert!((got - want).abs() < 1e-13 * want.max(1.0));
            assert!((quad - want).abs() < 1e-11);
        }
    }

    #[test]
    fn short_time_expansion() {
        let spec = SpectralDensitySpec::Isotropic(ScalarFamily::Drude { lambda: 0.05, gamma: 1.0 });
        let exp = pade_expansion(&spec, 1.0, 4).unwrap();
        let c0: f64 = exp.coefficients().iter().map(|c| c[(0, 0)].re).sum();
        for t in [1e-3, 3e-3] {
            let got = dephasing_gamma(DephasingKernel::Expansion(&exp), t).unwrap();
            let want = 2.0 * c0 * t * t;
            assert!(((got - want) / want).abs() < 0.05, "{got} {want}");
        }
    }

    #[test]
    fn spectral_route_matches_converged_expansion() {
        let spec = SpectralDensitySpec::Isotropic(ScalarFamily::LorentzianMode { lambda: 0.1, omega0: 1.5, gamma: 0.4 });
        let exp = pade_expansion(&spec, 2.0, 30).unwrap();
        for t in [0.2, 1.0, 5.0, 20.0] {
            let a = dephasing_gamma(DephasingKernel::Expansion(&exp), t).unwrap();
            let b = dephasing_gamma(DephasingKernel::Spectral { spec: &spec, beta: 2.0 }, t).unwrap();
            assert!((a - b).abs() < 1e-8 * a.abs().max(1.0), "t = {t}: {a} vs {b}");
        }
        let drude = SpectralDensitySpec::Isotropic(ScalarFamily::Drude { lambda: 0.05, gamma: 1.0 });
        let exp = pade_expansion(&drude, 1.0, 30).unwrap();
        for t in [0.5, 4.0, 20.0] {
            let a = dephasing_gamma(DephasingKernel::Expansion(&exp), t).unwrap();
            let b = dephasing_gamma(DephasingKernel::Spectral { spec: &drude, beta: 1.0 }, t).unwrap();
            assert!((a - b).abs() < 1e-7 * a.abs().max(1.0), "t = {t}: {a} vs {b}");
        }
    }

    #[test]
    fn rejects_matrix_bath() {
        let spec = SpectralDensitySpec::Matrix(vec![crate::bath::SpectralTerm {
            family: ScalarFamily::Drude { lambda: 0.1, gamma: 1.0 },
            weight: nalgebra::Matrix3::identity(),
        }]);
        assert!(dephasing_gamma(DephasingKernel::Spectral { spec: &spec, beta: 1.0 }, 1.0).is_err());
    }

    fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
        a.kronecker(b)
    }

    /// Two-level system dephased by three explicit modes truncated at four
    /// levels each, `H = ω₀σ_z/2 + Σ ω_k a†a + σ_z Σ c_k (a + a†)`.
    #[test]
    fn brute_force_discrete_bath_fixes_the_convention() {
        let (omega0, beta) = (1.0, 2.0);
        let modes = [(1.2, 0.08), (1.7, 0.1), (2.5, 0.06)];
        let nl = 4;
        let id_b = CMatrix::identity(nl, nl);
        let mut a = CMatrix::zeros(nl, nl);
        for n in 1..nl {
            a[(n - 1, n)] = C64::new((n as f64).sqrt(), 0.0);
        }
        let x = &a + a.adjoint();
        let num = a.adjoint() * &a;
        let embed = |op: &CMatrix, k: usize| {
            let mut m = CMatrix::identity(1, 1);
            for j in 0..3 {
                m = kron(&m, if j == k { op } else { &id_b });
            }
            m
        };
        let tl = two_level_basis();
        let sz = tl.sz.matrix().clone();
        let id_s = CMatrix::identity(2, 2);
        let nb = nl * nl * nl;
        let mut hb = CMatrix::zeros(nb, nb);
        let mut abath = CMatrix::zeros(nb, nb);
        let mut thermal = CMatrix::identity(1, 1);
        for (k, &(w, c)) in modes.iter().enumerate() {
            hb += embed(&num, k) * C64::new(w, 0.0);
            abath += embed(&x, k) * C64::new(c, 0.0);
            let p: Vec<f64> = (0..nl).map(|n| (-beta * w * n as f64).exp()).collect();
            let z: f64 = p.iter().sum();
            thermal = kron(&thermal, &CMatrix::from_diagonal(&nalgebra::DVector::from_iterator(nl, p.iter().map(|v| C64::new(v / z, 0.0)))));
        }
        let h = kron(&sz, &CMatrix::identity(nb, nb)) * C64::new(omega0 / 2.0, 0.0) + kron(&id_s, &hb) + kron(&sz, &abath);
        let rho_s = coherent().matrix().clone();
        let rho = kron(&rho_s, &thermal);
        let re_c = |s: f64| modes.iter().map(|&(w, c)| c * c * (w * s).cos() / (0.5 * beta * w).tanh()).sum::<f64>();
        for t in [0.5, 1.5, 3.0, 6.0] {
            let u = hermitian_function(&h, |e| C64::from_polar(1.0, -e * t));
            let rt = &u * &rho * u.adjoint();
            let mut r01 = C64::new(0.0, 0.0);
            for b in 0..nb {
                r01 += rt[(b, nb + b)];
            }
            let gamma = dephasing_gamma_from_correlation(re_c, t).unwrap();
            let closed: f64 = modes
                .iter()
                .map(|&(w, c)| 4.0 * c * c * (1.0 - (w * t).cos()) / (w * w) / (0.5 * beta * w).tanh())
                .sum();
            assert!((gamma - closed).abs() < 1e-10);
            let want = C64::from_polar(0.5 * (-gamma).exp(), -omega0 * t);
            assert!((r01 - want).norm() < 2e-4, "t = {t}: {r01} vs {want}, Γ = {gamma}");
            // factor 2 instead of 4 would be far outside the tolerance
            assert!((r01 - C64::from_polar(0.5 * (-gamma / 2.0).exp(), -omega0 * t)).norm() > 2e-3);
        }
    }

    #[test]
    fn static_detection() {
        let rot = FrameTrajectory::rotating(Vector3::z(), 0.3).unwrap();
        assert!(hamiltonian_is_static(&rot).unwrap());
        let along = FrameTrajectory::new(
            RotationSpec::ConstantAxis { axis: Vector3::z(), omega: 0.3 },
            TranslationSpec::ConstantAccel { acceleration: Vector3::new(0.0, 0.0, 0.2) },
        )
        .unwrap();
        assert!(hamiltonian_is_static(&along).unwrap());
        let across = FrameTrajectory::new(
            RotationSpec::ConstantAxis { axis: Vector3::z(), omega: 0.3 },
            TranslationSpec::ConstantAccel { acceleration: Vector3::new(0.2, 0.0, 0.0) },
        )
        .unwrap();
        assert!(!hamiltonian_is_static(&across).unwrap());
    }
}
