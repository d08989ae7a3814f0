//! Bosonic environments: spectral densities, correlation functions and their
//! exponential decompositions.

mod bose;
mod expansion;
mod fdt;
pub(crate) mod quadrature;
mod spectral;

use nalgebra::DMatrix;
use num_complex::Complex64;

pub use bose::{bose_exact, BosePoles};
pub use expansion::{
    fit_report, fit_report_at, matsubara_expansion, pade_expansion, reconstruct_conjugate, reconstruct_correlation,
    time_reversal_consistent, BathExpansion, ExpansionScheme, FitReport,
};
pub use fdt::{correlation_fdt, FDT_ABS_TOL};
pub use spectral::{
    eval_spectral_density, validate_symmetry, CavityMode, CustomSpectral, ScalarFamily, SpectralDensitySpec,
    SpectralTerm, SymmetryCheck, SymmetryReport, SymmetryViolation, SYMMETRY_TOL,
};

#[derive(Debug, thiserror::Error)]
pub enum BathError {
    #[error("invalid bath specification: {0}")]
    InvalidSpec(String),
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("frequency quadrature did not converge at t = {t} (error estimate {error:.3e})")]
    NonConvergent {
        t: f64,
        error: f64,
        estimate: DMatrix<Complex64>,
    },
    #[error("invalid expansion: {0}")]
    InvalidExpansion(String),
    #[error("expansion document: {0}")]
    Json(#[from] serde_json::Error),
}
