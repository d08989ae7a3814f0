//! `validate` and `check-bath`: self-consistency checks on a configuration.

use serde::Serialize;
use serde_json::{json, Value};

use deom_core::bath::{time_reversal_consistent, validate_symmetry, BathExpansion, SpectralDensitySpec};
use deom_core::hierarchy::{initial_hierarchy, propagate_trajectory, Dynamics, HierarchyState, PropagateOptions};
use deom_core::model::is_pure_dephasing;
use deom_core::observables::{reduced_density, trace_drift};
use deom_core::operators::CMatrix;
use deom_core::oracles::{
    closed_system_oracle, pure_dephasing_oracle, DephasingKernel, CLOSED_SYSTEM_TOL, DEPHASING_TOL,
};

use crate::build::{self, Setup};
use crate::config::{RunConfig, SystemConfig};
use crate::run::fit_summary;
use crate::CliError;

pub const FIT_TOL: f64 = 1e-3;
pub const INVARIANT_TOL: f64 = 1e-8;
const SYMMETRY_POINTS: usize = 1000;

#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub value: Option<f64>,
    pub tolerance: Option<f64>,
    pub detail: String,
}

impl Check {
    fn measured(name: &str, value: f64, tolerance: f64, detail: impl Into<String>) -> Self {
        Self { name: name.into(), passed: value <= tolerance, value: Some(value), tolerance: Some(tolerance), detail: detail.into() }
    }

    fn flag(name: &str, passed: bool, detail: impl Into<String>) -> Self {
        Self { name: name.into(), passed, value: None, tolerance: None, detail: detail.into() }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ValidationReport {
    pub passed: bool,
    pub checks: Vec<Check>,
    pub skipped: Vec<String>,
}

impl ValidationReport {
    fn new(checks: Vec<Check>, skipped: Vec<String>) -> Self {
        Self { passed: checks.iter().all(|c| c.passed), checks, skipped }
    }

    pub fn to_json(&self) -> Value {
        json!(self)
    }
}

fn symmetry_grid(spec: &SpectralDensitySpec) -> Vec<f64> {
    let top = 50.0 * spec_scale(spec);
    (0..SYMMETRY_POINTS).map(|k| top * (k as f64 + 0.5) / SYMMETRY_POINTS as f64).collect()
}

fn spec_scale(spec: &SpectralDensitySpec) -> f64 {
    match spec {
        SpectralDensitySpec::Isotropic(f) => f.frequency_scale(),
        SpectralDensitySpec::Matrix(terms) => terms.iter().map(|t| t.family.frequency_scale()).fold(0.0, f64::max),
        SpectralDensitySpec::Custom(_) => 1.0,
    }
    .max(1e-6)
}

fn bath_checks(spec: &SpectralDensitySpec, exp: &BathExpansion, t_end: f64) -> Vec<Check> {
    let mut checks = Vec::new();
    match validate_symmetry(spec, &symmetry_grid(spec)) {
        Ok(r) => checks.push(Check::flag(
            "spectral_symmetry",
            r.passed(),
            format!("{} points, max residual {:.3e}, {} violations", r.points, r.max_residual, r.violations.len()),
        )),
        Err(e) => checks.push(Check::flag("spectral_symmetry", false, e.to_string())),
    }
    checks.push(Check::flag(
        "time_reversal",
        time_reversal_consistent(exp),
        "every exponent has a conjugate partner carrying the conjugate weight",
    ));
    let fit = fit_summary(exp, spec, t_end);
    match fit.get("max_relative_error").and_then(Value::as_f64) {
        Some(err) => checks.push(Check::measured("fit_report", err, FIT_TOL, fit.to_string())),
        None => checks.push(Check::flag("fit_report", false, fit.to_string())),
    }
    checks
}

/// Spectral symmetry, time-reversal consistency and fit quality only.
pub fn check_bath(cfg: &RunConfig) -> Result<ValidationReport, CliError> {
    let spec = build::spectral(&cfg.bath.spectral)?;
    let exp = build::expansion(cfg, &spec)?;
    Ok(ValidationReport::new(bath_checks(&spec, &exp, cfg.hierarchy.t_final), Vec::new()))
}

fn trajectory(setup: &Setup, cfg: &RunConfig, max_tier: usize) -> Result<Vec<HierarchyState>, CliError> {
    let h = &cfg.hierarchy;
    let catalog = build::catalog(&setup.dynamics, max_tier, h.max_slots)?;
    let mut state = initial_hierarchy(&setup.rho0, catalog).map_err(|e| CliError::Config(e.to_string()))?;
    if h.scaling {
        state = setup.dynamics.rescale(&state, true).map_err(|e| CliError::Config(e.to_string()))?;
    }
    let opts = PropagateOptions { stride: h.stride, filter_tol: h.filter_tol, divergence_bound: h.divergence_bound };
    propagate_trajectory(&setup.dynamics, &mut state, h.t_final, h.dt, &opts).map_err(|e| match e {
        deom_core::hierarchy::HierarchyError::Diverged { .. } => CliError::Diverged(e.to_string()),
        other => CliError::Config(other.to_string()),
    })
}

fn rhos(states: &[HierarchyState]) -> Vec<CMatrix> {
    states.iter().map(|s| reduced_density(s).into_matrix()).collect()
}

fn max_deviation(a: &[CMatrix], b: &[CMatrix]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).iter().map(|z| z.norm()).fold(0.0, f64::max)).fold(0.0, f64::max)
}

/// Charge over mass when the run is a two-level pure-dephasing problem the
/// analytic oracle covers.
fn dephasing_charge(cfg: &RunConfig, dynamics: &Dynamics, times: &[f64]) -> Option<f64> {
    let SystemConfig::TwoLevel { delta, mass, charge, coupling, .. } = &cfg.system else { return None };
    let isotropic = matches!(dynamics.expansion.dim(), 1);
    let single = coupling.len() == 1 && coupling.values().all(|op| op == "sigma_z") && dynamics.labels().components().len() == 1;
    let still = dynamics.frame.is_rotation_trivial() && dynamics.frame.is_translation_trivial();
    let commuting = is_pure_dephasing(&dynamics.model, &dynamics.frame, &dynamics.field_frame, times).unwrap_or(false);
    (*delta == 0.0 && isotropic && single && still && commuting).then_some(charge / mass)
}

pub fn validate(cfg: &RunConfig) -> Result<ValidationReport, CliError> {
    let setup = build::setup(cfg)?;
    let dynamics = &setup.dynamics;
    let mut checks = bath_checks(&setup.spec, &dynamics.expansion, cfg.hierarchy.t_final);
    let mut skipped = Vec::new();

    let states = trajectory(&setup, cfg, cfg.hierarchy.max_tier)?;
    let times: Vec<f64> = states.iter().map(|s| s.time()).collect();
    let trace = states.iter().map(trace_drift).fold(0.0, f64::max);
    checks.push(Check::measured("trace", trace, INVARIANT_TOL, "max |tr ρ_S − 1| over the snapshots"));
    let mut conj = 0.0f64;
    for s in &states {
        conj = conj.max(dynamics.conjugacy_residual(s).map_err(|e| CliError::Config(e.to_string()))?);
    }
    checks.push(Check::measured("conjugacy", conj, INVARIANT_TOL, "max ‖ρ_n† − ρ_n̄‖_F over the snapshots"));
    let rho = rhos(&states);

    if dynamics.model.charge == 0.0 {
        match closed_system_oracle(&dynamics.model, &dynamics.frame, &setup.rho0, &times) {
            Ok(o) => checks.push(Check::measured("closed_system_oracle", o.max_deviation(&rho), CLOSED_SYSTEM_TOL, "unitary evolution under H_S")),
            Err(e) => skipped.push(format!("closed_system_oracle: {e}")),
        }
    } else {
        skipped.push("closed_system_oracle: the system is charged".into());
    }

    match dephasing_charge(cfg, dynamics, &times) {
        Some(q) => {
            let SystemConfig::TwoLevel { omega0, .. } = &cfg.system else { unreachable!() };
            let kernel = DephasingKernel::Expansion(&dynamics.expansion);
            match pure_dephasing_oracle(*omega0, q, kernel, &setup.rho0, &times) {
                Ok(o) => checks.push(Check::measured("pure_dephasing_oracle", o.max_deviation(&rho), DEPHASING_TOL, "analytic coherence decay")),
                Err(e) => skipped.push(format!("pure_dephasing_oracle: {e}")),
            }
        }
        None => skipped.push("pure_dephasing_oracle: not a two-level pure-dephasing problem".into()),
    }

    let deeper = trajectory(&setup, cfg, cfg.hierarchy.max_tier + 2)?;
    let shift = max_deviation(&rho, &rhos(&deeper));
    checks.push(Check::measured(
        "truncation",
        shift,
        cfg.hierarchy.convergence_tol,
        format!("max |ρ_S(L) − ρ_S(L+2)| with L = {}", cfg.hierarchy.max_tier),
    ));
    Ok(ValidationReport::new(checks, skipped))
}
