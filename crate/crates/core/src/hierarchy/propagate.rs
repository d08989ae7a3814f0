//! Fixed-step classical Runge–Kutta propagation.

use std::ops::ControlFlow;

use num_complex::Complex64;
use rayon::prelude::*;

use super::dynamics::{Dynamics, RhsKernel};
use super::state::HierarchyState;
use super::HierarchyError;
use crate::operators::CMatrix;

type C64 = Complex64;

/// Real-axis stability limit of classical RK4 is about 2.78; warn below it.
const STABILITY_LIMIT: f64 = 2.5;

#[derive(Debug, Clone, PartialEq)]
pub struct PropagateOptions {
    /// Snapshot every `stride` steps.
    pub stride: u64,
    /// Slots predicted (from the first RK stage) to stay below this norm
    /// for the whole step act as zero sources in the remaining stages. `0`
    /// disables filtering.
    pub filter_tol: f64,
    /// Abort when any stored slot norm exceeds this (or is not finite).
    pub divergence_bound: f64,
}

impl Default for PropagateOptions {
    fn default() -> Self {
        Self { stride: 1, filter_tol: 0.0, divergence_bound: 1e8 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PropagationSummary {
    pub steps: u64,
    pub t_final: f64,
    pub stopped_early: bool,
}

/// `dt · max(L max|γ|, spread of H)` for the stability warning.
pub fn stability_number(dynamics: &Dynamics, max_tier: usize, dt: f64) -> Result<f64, HierarchyError> {
    let gamma = dynamics.expansion.exponents().iter().map(|g| g.norm()).fold(0.0, f64::max);
    let ops = dynamics.stage_ops(0.0)?;
    let h = &ops.h;
    let herm = (h + h.adjoint()) * C64::new(0.5, 0.0);
    let eig = nalgebra::SymmetricEigen::new(herm).eigenvalues;
    let lo = eig.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = eig.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    Ok(dt * (max_tier as f64 * gamma).max(hi - lo))
}

/// Advances `state` to within `dt/2` of `t_end`.
///
/// Times are `t_origin + k·dt` with `k` the global step counter, so a run
/// restarted from a checkpoint with the same `dt` retraces the same grid.
/// `observer` sees the state after every step (and at `k = 0` before the
/// first); its flag marks snapshot steps (`k % stride == 0` or the last
/// step). Returning `Break` stops the propagation after that step.
pub fn propagate<F>(
    dynamics: &Dynamics,
    state: &mut HierarchyState,
    t_end: f64,
    dt: f64,
    options: &PropagateOptions,
    mut observer: F,
) -> Result<PropagationSummary, HierarchyError>
where
    F: FnMut(&HierarchyState, bool) -> ControlFlow<()>,
{
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(HierarchyError::InvalidInput(format!("time step must be positive, got {dt}")));
    }
    if options.stride == 0 {
        return Err(HierarchyError::InvalidInput("snapshot stride must be at least 1".into()));
    }
    if state.catalog.labels() != dynamics.labels().len() || state.basis.dim() != dynamics.dim() {
        return Err(HierarchyError::InvalidInput("state does not match the dynamics".into()));
    }
    if state.dt != dt {
        if state.step != 0 {
            state.t_origin = state.time();
            state.step = 0;
        }
        state.dt = dt;
    }
    let sn = stability_number(dynamics, state.catalog.max_tier(), dt)?;
    if sn > STABILITY_LIMIT {
        log::warn!("dt = {dt} may be unstable: dt·(largest rate) = {sn:.3} exceeds {STABILITY_LIMIT}");
    }

    let remaining = ((t_end - state.time()) / dt).round();
    let n_steps = if remaining > 0.0 { remaining as u64 } else { 0 };
    let last = state.step + n_steps;

    if state.step == 0 && observer(state, true).is_break() {
        return Ok(PropagationSummary { steps: 0, t_final: state.time(), stopped_early: true });
    }

    let d = dynamics.dim();
    let size = state.catalog.len();
    let catalog = state.catalog.clone();
    let scaling = state.scaling.clone();
    let kernel = RhsKernel::new(dynamics, &catalog, scaling.as_deref().map(|v| v.as_slice()));
    let mut k = vec![CMatrix::zeros(d, d); size];
    let mut acc = vec![CMatrix::zeros(d, d); size];
    let mut stage = vec![CMatrix::zeros(d, d); size];
    let mut skip = vec![false; size];
    let filtering = options.filter_tol > 0.0;

    let mut done = 0;
    while state.step < last {
        let t0 = state.time();
        let half = state.t_origin + (state.step as f64 + 0.5) * dt;
        let t1 = state.t_origin + (state.step + 1) as f64 * dt;
        let ops0 = dynamics.stage_ops(t0)?;
        let ops_h = dynamics.stage_ops(half)?;
        let ops1 = dynamics.stage_ops(t1)?;
        let y = &state.ddos;
        let c_half = C64::new(0.5 * dt, 0.0);
        let c_full = C64::new(dt, 0.0);
        let sixth = C64::new(dt / 6.0, 0.0);
        let two = C64::new(2.0, 0.0);

        // k1, always unfiltered; it also predicts which slots stay small
        kernel.eval(&ops0, y, None, &mut k);
        if filtering {
            skip.par_iter_mut().enumerate().for_each(|(s, f)| {
                *f = s != 0 && y[s].norm() + dt * k[s].norm() < options.filter_tol;
            });
        }
        let sk = filtering.then_some(skip.as_slice());
        acc.par_iter_mut().zip(&k).for_each(|(a, k)| a.copy_from(k));
        stage.par_iter_mut().zip(y.par_iter().zip(&k)).for_each(|(s, (y, k))| {
            s.copy_from(y);
            s.zip_apply(k, |x, v| *x += c_half * v);
        });
        // k2
        kernel.eval(&ops_h, &stage, sk, &mut k);
        acc.par_iter_mut().zip(&k).for_each(|(a, k)| a.zip_apply(k, |x, v| *x += two * v));
        stage.par_iter_mut().zip(y.par_iter().zip(&k)).for_each(|(s, (y, k))| {
            s.copy_from(y);
            s.zip_apply(k, |x, v| *x += c_half * v);
        });
        // k3
        kernel.eval(&ops_h, &stage, sk, &mut k);
        acc.par_iter_mut().zip(&k).for_each(|(a, k)| a.zip_apply(k, |x, v| *x += two * v));
        stage.par_iter_mut().zip(y.par_iter().zip(&k)).for_each(|(s, (y, k))| {
            s.copy_from(y);
            s.zip_apply(k, |x, v| *x += c_full * v);
        });
        // k4
        kernel.eval(&ops1, &stage, sk, &mut k);
        acc.par_iter_mut().zip(&k).for_each(|(a, k)| a.zip_apply(k, |x, v| *x += v));
        state.ddos.par_iter_mut().zip(&acc).for_each(|(y, a)| y.zip_apply(a, |x, v| *x += sixth * v));

        state.step += 1;
        done += 1;
        let (slot, norm) = state.max_norm();
        if !(norm <= options.divergence_bound) {
            return Err(HierarchyError::Diverged {
                t: state.time(),
                slot,
                tier: state.catalog.tier(slot),
                norm,
            });
        }
        let snapshot = state.step % options.stride == 0 || state.step == last;
        if observer(state, snapshot).is_break() {
            return Ok(PropagationSummary { steps: done, t_final: state.time(), stopped_early: true });
        }
    }
    Ok(PropagationSummary { steps: done, t_final: state.time(), stopped_early: false })
}

/// Propagates and collects the snapshots (including the initial state).
pub fn propagate_trajectory(
    dynamics: &Dynamics,
    state: &mut HierarchyState,
    t_end: f64,
    dt: f64,
    options: &PropagateOptions,
) -> Result<Vec<HierarchyState>, HierarchyError> {
    let mut out = Vec::new();
    propagate(dynamics, state, t_end, dt, options, |s, snap| {
        if snap {
            out.push(s.clone());
        }
        ControlFlow::Continue(())
    })?;
    Ok(out)
}
