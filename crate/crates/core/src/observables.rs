//! Physical quantities read off a hierarchy snapshot.
//!
//! Everything here works on the unscaled representation; scaled states are
//! divided back on the fly.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use thiserror::Error;

use crate::hierarchy::{Dynamics, HierarchyError, HierarchyState};
use crate::model::{coupling_operators_at, system_hamiltonian_at, ModelError};
use crate::operators::{trace_of_product, BasisKind, CMatrix, Operator};

type C64 = Complex64;

const AXES: [&str; 3] = ["x", "y", "z"];

#[derive(Debug, Error)]
pub enum ObservableError {
    #[error("invalid observable: {0}")]
    Invalid(String),
    #[error(transparent)]
    Hierarchy(#[from] HierarchyError),
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// A quantity recorded per snapshot.
///
/// The text form is `population:i`, `coherence:i:j`, `expectation:NAME`,
/// `coupling_energy` or `dissipaton_moment:AXIS:κ`, where `AXIS` is `x`, `y`
/// or `z` (or `0..=2`).
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ObservableSpec {
    Population(usize),
    Coherence(usize, usize),
    Expectation(String),
    CouplingEnergy,
    DissipatonMoment { i: usize, kappa: usize },
}

/// Operator names accepted by [`ObservableSpec::Expectation`].
pub const NAMED_OPERATORS: &[&str] = &[
    "H", "H0", "x", "y", "z", "p_x", "p_y", "p_z", "L_x", "L_y", "L_z", "sigma_x", "sigma_y", "sigma_z",
];

fn parse_axis(s: &str) -> Option<usize> {
    match s {
        "x" | "0" => Some(0),
        "y" | "1" => Some(1),
        "z" | "2" => Some(2),
        _ => None,
    }
}

impl FromStr for ObservableSpec {
    type Err = ObservableError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let parts: Vec<&str> = s.trim().split(':').collect();
        let bad = || ObservableError::Invalid(format!("cannot parse {s:?}"));
        let index = |p: &str| p.parse::<usize>().map_err(|_| bad());
        match parts.as_slice() {
            ["population", i] => Ok(Self::Population(index(i)?)),
            ["coherence", i, j] => Ok(Self::Coherence(index(i)?, index(j)?)),
            ["expectation", name] => {
                if NAMED_OPERATORS.contains(name) {
                    Ok(Self::Expectation(name.to_string()))
                } else {
                    Err(ObservableError::Invalid(format!(
                        "unknown operator {name:?}; known: {}",
                        NAMED_OPERATORS.join(", ")
                    )))
                }
            }
            ["coupling_energy"] => Ok(Self::CouplingEnergy),
            ["dissipaton_moment", i, k] => Ok(Self::DissipatonMoment { i: parse_axis(i).ok_or_else(bad)?, kappa: index(k)? }),
            _ => Err(bad()),
        }
    }
}

impl fmt::Display for ObservableSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Population(i) => write!(f, "population:{i}"),
            Self::Coherence(i, j) => write!(f, "coherence:{i}:{j}"),
            Self::Expectation(n) => write!(f, "expectation:{n}"),
            Self::CouplingEnergy => write!(f, "coupling_energy"),
            Self::DissipatonMoment { i, kappa } => write!(f, "dissipaton_moment:{}:{kappa}", AXES[*i]),
        }
    }
}

impl serde::Serialize for ObservableSpec {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> serde::Deserialize<'de> for ObservableSpec {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

impl ObservableSpec {
    /// Column stem used in tabular output (no separators that need quoting).
    pub fn column_name(&self) -> String {
        self.to_string().replace(':', "_")
    }

    /// Check indices against the system and label set.
    pub fn validate(&self, dynamics: &Dynamics) -> Result<(), ObservableError> {
        let d = dynamics.dim();
        match self {
            Self::Population(i) if *i >= d => Err(ObservableError::Invalid(format!("population index {i} >= dimension {d}"))),
            Self::Coherence(i, j) if *i >= d || *j >= d => {
                Err(ObservableError::Invalid(format!("coherence ({i}, {j}) outside dimension {d}")))
            }
            Self::Expectation(name) => named_operator(dynamics, name, 0.0).map(|_| ()),
            Self::DissipatonMoment { i, kappa } => dynamics.labels().label(*i, *kappa).map(|_| ()).ok_or_else(|| {
                ObservableError::Invalid(format!("label ({}, {kappa}) is not part of the hierarchy", AXES[*i]))
            }),
            _ => Ok(()),
        }
    }

    pub fn evaluate(&self, state: &HierarchyState, dynamics: &Dynamics) -> Result<C64, ObservableError> {
        let t = state.time();
        Ok(match self {
            Self::Population(i) => state.raw(0)[(*i, *i)],
            Self::Coherence(i, j) => state.raw(0)[(*i, *j)],
            Self::Expectation(name) => trace_of_product(named_operator(dynamics, name, t)?.matrix(), state.raw(0)),
            Self::CouplingEnergy => {
                let e = coupling_energy(state, dynamics)?;
                C64::new(e.value, e.imag)
            }
            Self::DissipatonMoment { i, kappa } => dissipaton_moment(state, dynamics, *i, *kappa)?,
        })
    }
}

/// Operator behind an expectation name at time `t`.
pub fn named_operator(dynamics: &Dynamics, name: &str, t: f64) -> Result<Operator, ObservableError> {
    let model = &dynamics.model;
    let missing = || ObservableError::Invalid(format!("the system provides no operator {name:?}"));
    let axis_op = |set: &[Option<Operator>; 3], a: &str| parse_axis(a).and_then(|k| set[k].clone());
    match name {
        "H" => Ok(system_hamiltonian_at(model, &dynamics.frame, t)?),
        "H0" => Ok(model.bare_hamiltonian()),
        "x" | "y" | "z" => axis_op(&model.position, name).ok_or_else(missing),
        _ if name.starts_with("p_") => axis_op(&model.momentum, &name[2..]).ok_or_else(missing),
        _ if name.starts_with("L_") => axis_op(&model.angular_momentum, &name[2..]).ok_or_else(missing),
        _ if name.starts_with("sigma_") => {
            if model.basis.kind() != BasisKind::TwoLevel {
                return Err(missing());
            }
            let ops = crate::operators::two_level_basis();
            let m = match &name[6..] {
                "x" => ops.sx,
                "y" => ops.sy,
                "z" => ops.sz,
                _ => return Err(missing()),
            };
            Ok(Operator::new(model.basis.clone(), m.into_matrix()).map_err(ModelError::from)?)
        }
        _ => Err(missing()),
    }
}

/// `ρ_S = ρ_0`.
pub fn reduced_density(state: &HierarchyState) -> Operator {
    Operator::new(state.basis().clone(), state.raw(0).clone()).expect("slot 0 matches the state basis")
}

/// `tr ρ_{e_a}` for label `a = (i, κ)`: the mean of dissipaton `f_{iκ}` in
/// the correlated total state.
pub fn dissipaton_moment(state: &HierarchyState, dynamics: &Dynamics, i: usize, kappa: usize) -> Result<C64, ObservableError> {
    let a = dynamics
        .labels()
        .label(i, kappa)
        .ok_or_else(|| ObservableError::Invalid(format!("label ({i}, {kappa}) is not part of the hierarchy")))?;
    check_labels(state, dynamics)?;
    match state.catalog().single(a) {
        Some(slot) => Ok(state.ddo(slot).trace()),
        None => Err(ObservableError::Invalid("the hierarchy is truncated at tier 0".into())),
    }
}

fn check_labels(state: &HierarchyState, dynamics: &Dynamics) -> Result<(), ObservableError> {
    if state.catalog().labels() != dynamics.labels().len() {
        return Err(ObservableError::Invalid(format!(
            "state has {} labels, dynamics has {}",
            state.catalog().labels(),
            dynamics.labels().len()
        )));
    }
    Ok(())
}

/// Real part and imaginary residual of the system-bath energy.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct CouplingEnergy {
    pub value: f64,
    pub imag: f64,
}

/// `⟨H_SE⟩ = Σ_{iκ} tr[Q_i(t) ρ_{e_{iκ}}]`, using the full `Q_i` (its
/// c-number drive included). Zero at tier-0 truncation.
pub fn coupling_energy(state: &HierarchyState, dynamics: &Dynamics) -> Result<CouplingEnergy, ObservableError> {
    check_labels(state, dynamics)?;
    let t = state.time();
    let q = coupling_operators_at(&dynamics.model, &dynamics.frame, &dynamics.field_frame, t)?;
    let labels = dynamics.labels();
    let mut acc = C64::new(0.0, 0.0);
    for a in 0..labels.len() {
        let Some(slot) = state.catalog().single(a) else { break };
        let (i, _) = labels.split(a);
        acc += trace_of_product(q.components[i].full().matrix(), &state.ddo(slot));
    }
    Ok(CouplingEnergy { value: acc.re, imag: acc.im })
}

/// `|tr ρ_S − 1|`.
pub fn trace_drift(state: &HierarchyState) -> f64 {
    (state.raw(0).trace() - C64::new(1.0, 0.0)).norm()
}

/// `‖ρ_S − ρ_S†‖_F`.
pub fn hermiticity_drift(state: &HierarchyState) -> f64 {
    let m: &CMatrix = state.raw(0);
    (m - m.adjoint()).norm()
}

/// Observables sampled along a trajectory, one row per snapshot.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeries {
    pub specs: Vec<ObservableSpec>,
    pub times: Vec<f64>,
    pub rows: Vec<Vec<C64>>,
}

impl TimeSeries {
    pub fn new(specs: Vec<ObservableSpec>) -> Self {
        Self { specs, times: Vec::new(), rows: Vec::new() }
    }

    /// `t, <name>.re, <name>.im, ...`
    pub fn header(&self) -> Vec<String> {
        let mut h = vec!["t".to_string()];
        for s in &self.specs {
            let n = s.column_name();
            h.push(format!("{n}.re"));
            h.push(format!("{n}.im"));
        }
        h
    }

    pub fn record(&mut self, state: &HierarchyState, dynamics: &Dynamics) -> Result<(), ObservableError> {
        let row = evaluate_row(&self.specs, state, dynamics)?;
        self.times.push(state.time());
        self.rows.push(row);
        Ok(())
    }

    /// Column `k` of the table.
    pub fn column(&self, k: usize) -> Vec<C64> {
        self.rows.iter().map(|r| r[k]).collect()
    }
}

pub fn evaluate_row(specs: &[ObservableSpec], state: &HierarchyState, dynamics: &Dynamics) -> Result<Vec<C64>, ObservableError> {
    specs.iter().map(|s| s.evaluate(state, dynamics)).collect()
}

/// Evaluate `specs` on every state of a stored trajectory.
pub fn timeseries(states: &[HierarchyState], specs: &[ObservableSpec], dynamics: &Dynamics) -> Result<TimeSeries, ObservableError> {
    let mut ts = TimeSeries::new(specs.to_vec());
    for s in states {
        ts.record(s, dynamics)?;
    }
    Ok(ts)
}
