use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::catalog::{enumerate_indices, Catalog};
use super::HierarchyError;
use crate::operators::{Basis, CMatrix, Operator};

type C64 = Complex64;

/// Tolerance used when validating an initial density matrix.
pub const INITIAL_STATE_TOL: f64 = 1e-10;

/// All dissipaton density operators at one time.
///
/// When `scaling` is set, slot `n` holds `s_n ρ_n` with
/// `s_n = Π_a (n_a! c_a^{n_a})^{−1/2}`; otherwise it holds `ρ_n`.
#[derive(Debug, Clone, PartialEq)]
pub struct HierarchyState {
    pub(crate) catalog: Arc<Catalog>,
    pub(crate) basis: Arc<Basis>,
    pub(crate) ddos: Vec<CMatrix>,
    pub(crate) scaling: Option<Arc<Vec<f64>>>,
    pub(crate) t_origin: f64,
    pub(crate) step: u64,
    pub(crate) dt: f64,
}

/// Slot 0 holds `ρ₀`, every other slot is zero, `t = 0`.
pub fn initial_hierarchy(rho0: &Operator, catalog: Arc<Catalog>) -> Result<HierarchyState, HierarchyError> {
    let m = rho0.matrix();
    let herm = rho0.hermiticity_residual();
    if herm > INITIAL_STATE_TOL {
        return Err(HierarchyError::InvalidInitialState(format!("not Hermitian (residual {herm:.3e})")));
    }
    let tr = m.trace();
    if (tr.re - 1.0).abs() > INITIAL_STATE_TOL || tr.im.abs() > INITIAL_STATE_TOL {
        return Err(HierarchyError::InvalidInitialState(format!("trace is {tr}, expected 1")));
    }
    let herm_part = (m + m.adjoint()) * C64::new(0.5, 0.0);
    let eig = nalgebra::SymmetricEigen::new(herm_part).eigenvalues;
    let min = eig.iter().copied().fold(f64::INFINITY, f64::min);
    if min < -INITIAL_STATE_TOL {
        return Err(HierarchyError::InvalidInitialState(format!("not positive semidefinite (eigenvalue {min:.3e})")));
    }
    let d = rho0.dim();
    let mut ddos = vec![CMatrix::zeros(d, d); catalog.len()];
    ddos[0] = m.clone();
    Ok(HierarchyState {
        catalog,
        basis: rho0.basis().clone(),
        ddos,
        scaling: None,
        t_origin: 0.0,
        step: 0,
        dt: 0.0,
    })
}

impl HierarchyState {
    pub fn catalog(&self) -> &Arc<Catalog> {
        &self.catalog
    }

    pub fn basis(&self) -> &Arc<Basis> {
        &self.basis
    }

    /// `t_origin + step · dt`, recomputed so that restarts land on the same grid.
    pub fn time(&self) -> f64 {
        self.t_origin + self.step as f64 * self.dt
    }

    pub fn step(&self) -> u64 {
        self.step
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn is_scaled(&self) -> bool {
        self.scaling.is_some()
    }

    pub fn scale_factors(&self) -> Option<&[f64]> {
        self.scaling.as_deref().map(|v| v.as_slice())
    }

    /// Slot contents in the stored representation.
    pub fn raw(&self, slot: usize) -> &CMatrix {
        &self.ddos[slot]
    }

    pub fn raw_mut(&mut self, slot: usize) -> &mut CMatrix {
        &mut self.ddos[slot]
    }

    /// `s_n` for the slot (1 when unscaled).
    pub fn slot_scale(&self, slot: usize) -> f64 {
        match &self.scaling {
            None => 1.0,
            Some(c) => slot_scale(self.catalog.occupation(slot), c),
        }
    }

    /// `ρ_n` in the physical (unscaled) representation.
    pub fn ddo(&self, slot: usize) -> CMatrix {
        match &self.scaling {
            None => self.ddos[slot].clone(),
            Some(c) => &self.ddos[slot] / C64::new(slot_scale(self.catalog.occupation(slot), c), 0.0),
        }
    }

    pub fn max_norm(&self) -> (usize, f64) {
        self.ddos
            .iter()
            .enumerate()
            .map(|(s, m)| (s, m.norm()))
            .fold((0, 0.0), |acc, x| if x.1 > acc.1 || x.1.is_nan() { x } else { acc })
    }

    pub fn to_checkpoint(&self) -> Checkpoint {
        Checkpoint {
            labels: self.catalog.labels(),
            max_tier: self.catalog.max_tier(),
            dim: self.basis.dim(),
            basis: (*self.basis).clone(),
            t: self.time(),
            t_origin: self.t_origin,
            step: self.step,
            dt: self.dt,
            scaling: self.scaling.as_ref().map(|v| v.to_vec()),
            ddos: self
                .ddos
                .iter()
                .map(|m| {
                    let d = m.nrows();
                    let mut v = Vec::with_capacity(2 * d * d);
                    for i in 0..d {
                        for j in 0..d {
                            v.push(m[(i, j)].re);
                            v.push(m[(i, j)].im);
                        }
                    }
                    v
                })
                .collect(),
        }
    }

    pub fn from_checkpoint(ck: &Checkpoint, max_slots: Option<usize>) -> Result<Self, HierarchyError> {
        let catalog = Arc::new(enumerate_indices(ck.labels, ck.max_tier, max_slots)?);
        let d = ck.dim;
        if ck.basis.dim() != d {
            return Err(HierarchyError::InvalidInput("checkpoint basis does not match its dimension".into()));
        }
        if ck.ddos.len() != catalog.len() {
            return Err(HierarchyError::InvalidInput(format!(
                "checkpoint has {} slots, catalog ({}, {}) has {}",
                ck.ddos.len(),
                ck.labels,
                ck.max_tier,
                catalog.len()
            )));
        }
        if let Some(s) = &ck.scaling {
            if s.len() != ck.labels {
                return Err(HierarchyError::InvalidInput("checkpoint scaling has the wrong length".into()));
            }
        }
        let mut ddos = Vec::with_capacity(catalog.len());
        for v in &ck.ddos {
            if v.len() != 2 * d * d {
                return Err(HierarchyError::InvalidInput("checkpoint slot has the wrong size".into()));
            }
            ddos.push(CMatrix::from_fn(d, d, |i, j| C64::new(v[2 * (i * d + j)], v[2 * (i * d + j) + 1])));
        }
        Ok(Self {
            catalog,
            basis: Arc::new(ck.basis.clone()),
            ddos,
            scaling: ck.scaling.clone().map(Arc::new),
            t_origin: ck.t_origin,
            step: ck.step,
            dt: ck.dt,
        })
    }
}

pub(crate) fn slot_scale(occ: &[u16], c: &[f64]) -> f64 {
    let mut s = 1.0;
    for (a, &n) in occ.iter().enumerate() {
        for k in 1..=n {
            s *= (k as f64 * c[a]).sqrt();
        }
    }
    1.0 / s
}

/// Serialised hierarchy: catalog parameters, time grid and all slots as
/// row-major `(re, im)` pairs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Checkpoint {
    pub labels: usize,
    pub max_tier: usize,
    pub dim: usize,
    pub basis: Basis,
    pub t: f64,
    pub t_origin: f64,
    pub step: u64,
    pub dt: f64,
    pub scaling: Option<Vec<f64>>,
    pub ddos: Vec<Vec<f64>>,
}
