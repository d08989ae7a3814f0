//! Turns a validated [`RunConfig`] into core objects.

use std::sync::Arc;

use nalgebra::{Matrix3, Vector3};
use num_complex::Complex64;

use deom_core::bath::{
    matsubara_expansion, pade_expansion, BathExpansion, CavityMode, SpectralDensitySpec, SpectralTerm,
};
use deom_core::frames::{FrameTrajectory, RotationSegment, RotationSpec, TranslationSpec};
use deom_core::hierarchy::{Catalog, Dynamics, HierarchyError};
use deom_core::model::{FieldFrameMode, Pauli, SystemModel};
use deom_core::operators::{CMatrix, Operator};
use deom_core::oracles::gibbs_oracle;

use crate::config::{
    ExpansionKind, FieldFrameConfig, FrameConfig, InitialState, RotationConfig, RunConfig, SpectralConfig, SystemConfig,
    TranslationConfig,
};
use crate::CliError;

type C64 = Complex64;

pub fn axis_index(a: &str) -> usize {
    match a {
        "x" => 0,
        "y" => 1,
        _ => 2,
    }
}

fn unit(v: [f64; 3]) -> Vector3<f64> {
    Vector3::from(v).normalize()
}

pub fn frame(cfg: &FrameConfig) -> Result<FrameTrajectory, CliError> {
    let rotation = match &cfg.rotation {
        RotationConfig::None => RotationSpec::None,
        RotationConfig::Constant { axis, omega } => RotationSpec::ConstantAxis { axis: unit(*axis), omega: *omega },
        RotationConfig::Piecewise { segments } => RotationSpec::Piecewise(
            segments.iter().map(|s| RotationSegment { start: s.start, axis: unit(s.axis), omega: s.omega }).collect(),
        ),
    };
    let translation = match &cfg.translation {
        TranslationConfig::None => TranslationSpec::None,
        TranslationConfig::Boost { velocity } => TranslationSpec::Boost { velocity: Vector3::from(*velocity) },
        TranslationConfig::ConstantAccel { acceleration } => {
            TranslationSpec::ConstantAccel { acceleration: Vector3::from(*acceleration) }
        }
    };
    FrameTrajectory::new(rotation, translation).map_err(|e| CliError::Config(format!("frame: {e}")))
}

pub fn field_frame(cfg: &FieldFrameConfig) -> Result<FieldFrameMode, CliError> {
    Ok(match cfg {
        FieldFrameConfig::Static => FieldFrameMode::Static,
        FieldFrameConfig::Comoving => FieldFrameMode::Comoving,
        FieldFrameConfig::Custom(f) => FieldFrameMode::Custom(frame(f)?),
    })
}

pub fn spectral(cfg: &SpectralConfig) -> Result<SpectralDensitySpec, CliError> {
    let bad = |e: deom_core::bath::BathError| CliError::Config(format!("bath.spectral: {e}"));
    let spec = match cfg {
        SpectralConfig::Scalar(f) => SpectralDensitySpec::Isotropic(f.clone()),
        SpectralConfig::Matrix { terms, .. } => SpectralDensitySpec::Matrix(
            terms
                .iter()
                .map(|t| SpectralTerm { family: t.spectral.clone(), weight: Matrix3::from_fn(|i, j| t.weight[i][j]) })
                .collect(),
        ),
        SpectralConfig::Cavity { modes, .. } => {
            let modes: Vec<CavityMode> = modes
                .iter()
                .map(|m| CavityMode { frequency: m.frequency, weight: m.weight, polarizations: m.polarizations.clone(), width: m.width })
                .collect();
            SpectralDensitySpec::discrete_modes(&modes).map_err(bad)?
        }
    };
    spec.validate().map_err(bad)?;
    Ok(spec)
}

pub fn expansion(cfg: &RunConfig, spec: &SpectralDensitySpec) -> Result<BathExpansion, CliError> {
    let b = &cfg.bath;
    let r = match b.expansion {
        ExpansionKind::Pade => pade_expansion(spec, b.beta, b.terms),
        ExpansionKind::Matsubara => matsubara_expansion(spec, b.beta, b.terms),
    };
    r.map_err(|e| CliError::Config(format!("bath: {e}")))
}

pub fn model(cfg: &SystemConfig) -> Result<SystemModel, CliError> {
    let m = match cfg {
        SystemConfig::TwoLevel { omega0, delta, mass, charge, coupling } => {
            let list: Vec<(usize, Pauli)> = coupling
                .iter()
                .map(|(axis, op)| {
                    let p = match op.as_str() {
                        "sigma_x" => Pauli::X,
                        "sigma_y" => Pauli::Y,
                        _ => Pauli::Z,
                    };
                    (axis_index(axis), p)
                })
                .collect();
            SystemModel::two_level(*omega0, *delta, *mass, *charge, &list)
        }
        SystemConfig::Ring { m_max, inertia, radius, charge, v_cos } => SystemModel::ring(*m_max, *inertia, *radius, *charge, *v_cos),
        SystemConfig::Oscillator { n_max, mass, omega0, charge } => SystemModel::oscillator(*n_max, *mass, *omega0, *charge),
    };
    m.map_err(|e| CliError::Config(format!("system: {e}")))
}

fn complex(z: [f64; 2]) -> C64 {
    C64::new(z[0], z[1])
}

pub fn initial_state(cfg: &RunConfig, model: &SystemModel, frame: &FrameTrajectory) -> Result<Operator, CliError> {
    let basis = &model.basis;
    let d = basis.dim();
    let bad = |e: String| CliError::Config(format!("initial_state: {e}"));
    match &cfg.initial_state {
        InitialState::Basis { index } => {
            let mut amp = vec![C64::new(0.0, 0.0); d];
            amp[*index] = C64::new(1.0, 0.0);
            Operator::pure_state(basis, &amp).map_err(|e| bad(e.to_string()))
        }
        InitialState::Pure { amplitudes } => {
            let amp: Vec<C64> = amplitudes.iter().map(|z| complex(*z)).collect();
            Operator::pure_state(basis, &amp).map_err(|e| bad(e.to_string()))
        }
        InitialState::Density { matrix } => {
            let m = CMatrix::from_fn(d, d, |i, j| complex(matrix[i][j]));
            Operator::new(basis.clone(), m).map_err(|e| bad(e.to_string()))
        }
        InitialState::Gibbs => {
            let h = deom_core::model::system_hamiltonian_at(model, frame, 0.0).map_err(|e| bad(e.to_string()))?;
            gibbs_oracle(&h, cfg.bath.beta).map_err(|e| bad(e.to_string()))
        }
    }
}

/// Everything a run needs, built once.
pub struct Setup {
    pub spec: SpectralDensitySpec,
    pub dynamics: Dynamics,
    pub rho0: Operator,
}

pub fn setup(cfg: &RunConfig) -> Result<Setup, CliError> {
    let model = model(&cfg.system)?;
    let frame = frame(&cfg.frame)?;
    let field = field_frame(&cfg.field_frame)?;
    let spec = spectral(&cfg.bath.spectral)?;
    let exp = expansion(cfg, &spec)?;
    let rho0 = initial_state(cfg, &model, &frame)?;
    let components = cfg.bath.components.as_ref().map(|c| c.iter().map(|a| axis_index(a)).collect());
    let dynamics = Dynamics::new(model, frame, field, exp, components).map_err(|e| CliError::Config(e.to_string()))?;
    for o in &cfg.output.observables {
        o.validate(&dynamics).map_err(|e| CliError::Config(format!("output.observables: {e}")))?;
    }
    // surface missing-operator problems before any propagation
    dynamics.stage_ops(0.0).map_err(|e| CliError::Config(e.to_string()))?;
    Ok(Setup { spec, dynamics, rho0 })
}

pub fn catalog(dynamics: &Dynamics, max_tier: usize, max_slots: usize) -> Result<Arc<Catalog>, CliError> {
    dynamics.catalog(max_tier, Some(max_slots)).map_err(|e| match e {
        HierarchyError::BudgetExceeded { .. } => CliError::Budget(e.to_string()),
        other => CliError::Config(other.to_string()),
    })
}
