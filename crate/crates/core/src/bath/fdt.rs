//! Bath correlation functions from the fluctuation–dissipation theorem,
//!
//! ```text
//! C_ij(t) = (1/π) ∫ dω e^{−iωt} J_ij(ω) / (1 − e^{−βω})
//! ```

use nalgebra::DMatrix;
use num_complex::Complex64;

use super::bose::bose_exact;
use super::quadrature::{integrate_half_line, integrate_partition, QuadFailure};
use super::spectral::{PoleGroup, SpectralDensitySpec};
use super::BathError;

type C64 = Complex64;

/// Absolute tolerance of the frequency quadrature.
pub const FDT_ABS_TOL: f64 = 1e-10;
const MAX_SEGMENTS: usize = 50_000;

/// `J(ω)/(1 − e^{−βω})` written into `out` (row-major), using the limit
/// `J'(0)/β` at `ω = 0`.
fn real_axis_integrand(spec: &SpectralDensitySpec, beta: f64, slope: &DMatrix<C64>, w: f64, jbuf: &mut DMatrix<C64>, out: &mut [C64]) {
    let d = jbuf.nrows();
    if w == 0.0 {
        for i in 0..d {
            for j in 0..d {
                out[i * d + j] = slope[(i, j)] / beta;
            }
        }
        return;
    }
    spec.eval_into(w, jbuf);
    let n = -1.0 / (-beta * w).exp_m1();
    for i in 0..d {
        for j in 0..d {
            out[i * d + j] = jbuf[(i, j)] * n;
        }
    }
}

fn lower_poles(spec: &SpectralDensitySpec) -> Vec<C64> {
    let mut out = Vec::new();
    for (family, _) in spec.families() {
        if let Ok(Some(groups)) = family.pole_groups() {
            for g in groups {
                match g {
                    PoleGroup::Single(p) => out.push(p.omega),
                    PoleGroup::Pair(a, b) => out.extend([a.omega, b.omega]),
                }
            }
        }
    }
    out
}

fn cutoff(spec: &SpectralDensitySpec, beta: f64) -> f64 {
    let w = (50.0 / beta).max(50.0 * spec.frequency_scale());
    lower_poles(spec).iter().fold(w, |w, p| w.max(2.0 * p.norm()))
}

/// Breakpoints for `[−W, W]`: geometric refinement towards `ω = 0` (thermal
/// scale `1/β`) and clusters around resonances.
fn partition(spec: &SpectralDensitySpec, beta: f64, w_max: f64) -> Vec<f64> {
    let poles = lower_poles(spec);
    let finest = poles
        .iter()
        .map(|p| p.im.abs())
        .fold((1.0 / beta).min(spec.frequency_scale()), f64::min);
    let mut pts = vec![-w_max, 0.0, w_max];
    let mut h = 0.1 * finest;
    while h < w_max {
        pts.extend([h, -h]);
        h *= 4.0;
    }
    for p in poles {
        if p.re != 0.0 {
            for k in [0.0, 1.0, 4.0, 16.0] {
                pts.extend([p.re - k * p.im.abs(), p.re + k * p.im.abs()]);
            }
        }
    }
    pts.retain(|x| x.abs() <= w_max);
    pts.sort_by(|a, b| a.total_cmp(b));
    pts.dedup();
    pts
}

fn non_convergent(t: f64, f: QuadFailure, d: usize) -> BathError {
    BathError::NonConvergent {
        t,
        error: f.error,
        estimate: DMatrix::from_row_slice(d, d, &f.estimate),
    }
}

/// `C_ij(t)` by adaptive quadrature.
///
/// The window `[−W, W]` is integrated on the real axis. For algebraically
/// decaying densities the tail beyond `W` is taken along the ray
/// `ω = W ∓ i y` (sign of `t`), where the oscillating factor becomes
/// `e^{−|t| y}`; exponentially decaying densities use a bounded real-axis
/// tail. The Bose-suppressed opposite tail is bounded and added to the
/// error budget.
pub fn correlation_fdt(spec: &SpectralDensitySpec, beta: f64, t: f64) -> Result<DMatrix<C64>, BathError> {
    if !(beta > 0.0) || !beta.is_finite() {
        return Err(BathError::InvalidSpec(format!("beta must be positive and finite (got {beta})")));
    }
    if !t.is_finite() {
        return Err(BathError::InvalidSpec(format!("time must be finite (got {t})")));
    }
    if matches!(spec, SpectralDensitySpec::Custom(_)) {
        return Err(BathError::Unsupported(
            "correlation functions need an analytic spectral density family; custom densities are for symmetry checks only".into(),
        ));
    }
    spec.validate()?;
    let d = spec.dim();
    let n = d * d;
    let slope = spec.slope_at_zero();
    let w_max = cutoff(spec, beta);
    let exp_decay = spec.families().iter().all(|(f, _)| f.decays_exponentially());

    let phase_integrand = |w: f64, out: &mut [C64]| {
        let mut jbuf = DMatrix::zeros(d, d);
        real_axis_integrand(spec, beta, &slope, w, &mut jbuf, out);
        let ph = C64::new(0.0, -w * t).exp();
        for v in out.iter_mut() {
            *v *= ph;
        }
    };

    let r = integrate_partition(phase_integrand, &partition(spec, beta, w_max), n, 0.5 * FDT_ABS_TOL, MAX_SEGMENTS)
        .map_err(|f| non_convergent(t, f, d))?;
    let mut total = r.value;
    let mut error = r.error;

    let j_at = |w: f64| {
        let mut m = DMatrix::zeros(d, d);
        spec.eval_into(w, &mut m);
        m.iter().map(|z| z.norm()).fold(0.0, f64::max)
    };
    // Bose-suppressed negative tail: |J| n(βω) ≤ |J(−W)| e^{βω}.
    error += j_at(-w_max) * (-beta * w_max).exp() / beta;

    if exp_decay {
        // ∫_W^∞ ω e^{−ω/ω_c} dω envelope for the exponential cutoff
        let bound: f64 = spec
            .families()
            .iter()
            .map(|(f, wt)| {
                let scale = wt.map(|m| m.abs().max()).unwrap_or(1.0);
                match **f {
                    super::spectral::ScalarFamily::OhmicExponential { eta, cutoff } => {
                        let nb = 1.0 / (1.0 - (-beta * w_max).exp());
                        scale * eta * cutoff * (w_max + cutoff) * (-w_max / cutoff).exp() * nb
                    }
                    _ => 0.0,
                }
            })
            .sum();
        error += bound;
    } else if t == 0.0 {
        // On the real axis the tail is ∫_W^∞ J(ω) n(βω) dω; it converges only
        // for densities decaying faster than 1/ω.
        let r = integrate_half_line(
            |y, out: &mut [C64]| {
                let mut jbuf = DMatrix::zeros(d, d);
                real_axis_integrand(spec, beta, &slope, w_max + y, &mut jbuf, out);
            },
            n,
            0.25 * FDT_ABS_TOL,
            MAX_SEGMENTS,
        )
        .map_err(|f| non_convergent(t, f, d))?;
        for k in 0..n {
            total[k] += r.value[k];
        }
        error += r.error;
    } else {
        let s = t.signum();
        let lead = C64::new(0.0, -s) * C64::new(0.0, -w_max * t).exp();
        let r = integrate_half_line(
            |y, out: &mut [C64]| {
                let z = C64::new(w_max, -s * y);
                let damp = (-t.abs() * y).exp();
                if damp == 0.0 {
                    out.fill(C64::new(0.0, 0.0));
                    return;
                }
                let jz = spec.eval_complex(z).expect("analytic family");
                let nb = bose_exact(z * beta) * damp;
                for i in 0..d {
                    for j in 0..d {
                        out[i * d + j] = jz[(i, j)] * nb;
                    }
                }
            },
            n,
            0.25 * FDT_ABS_TOL,
            MAX_SEGMENTS,
        )
        .map_err(|f| non_convergent(t, f, d))?;
        for k in 0..n {
            total[k] += lead * r.value[k];
        }
        error += r.error;
    }

    if error > FDT_ABS_TOL * std::f64::consts::PI {
        return Err(BathError::NonConvergent {
            t,
            error: error / std::f64::consts::PI,
            estimate: DMatrix::from_row_slice(d, d, &total) / C64::new(std::f64::consts::PI, 0.0),
        });
    }
    let inv_pi = C64::new(1.0 / std::f64::consts::PI, 0.0);
    Ok(DMatrix::from_row_slice(d, d, &total) * inv_pi)
}
