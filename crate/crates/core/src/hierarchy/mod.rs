//! Dissipaton density operator hierarchy: index space, right-hand side and
//! time propagation.

mod catalog;
mod dynamics;
mod propagate;
mod state;

use thiserror::Error;

pub use catalog::{binomial, catalog_size, enumerate_indices, Catalog, NO_NEIGHBOR};
pub use dynamics::{default_components, Dynamics, LabelMap, StageOps};
pub use propagate::{propagate, propagate_trajectory, stability_number, PropagateOptions, PropagationSummary};
pub use state::{initial_hierarchy, Checkpoint, HierarchyState, INITIAL_STATE_TOL};

use crate::model::ModelError;

#[derive(Debug, Error)]
pub enum HierarchyError {
    #[error("hierarchy of {size} slots exceeds the budget of {budget}")]
    BudgetExceeded { size: String, budget: usize },
    #[error("invalid initial state: {0}")]
    InvalidInitialState(String),
    #[error("{0}")]
    InvalidInput(String),
    #[error("propagation diverged at t = {t}: slot {slot} (tier {tier}) has norm {norm:.3e}")]
    Diverged { t: f64, slot: usize, tier: usize, norm: f64 },
    #[error(transparent)]
    Model(#[from] ModelError),
}
