//! The hierarchy right-hand side
//!
//! ```text
//! ρ̇_n = −i[H_S, ρ_n] − Σ_a n_a γ_a ρ_n − i Σ_a [Q_{i(a)}, ρ_{n+a}]
//!        − i Σ_a n_a (A_a ρ_{n−a} − ρ_{n−a} B_a)
//! A_a = Σ_j η_{i(a) j κ(a)} Q_j,   B_a = Σ_j η*_{i(a) j κ̄(a)} Q_j
//! ```
//!
//! with `Q_j` including its c-number part (which cancels in the commutator
//! and survives in the tier-down term as a drive).

use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;

use super::catalog::{enumerate_indices, Catalog, NO_NEIGHBOR};
use super::state::{slot_scale, HierarchyState};
use super::HierarchyError;
use crate::bath::BathExpansion;
use crate::frames::{FrameTrajectory, TranslationSpec};
use crate::model::{coupling_operators_at, system_hamiltonian_at, FieldFrameMode, SystemModel};
use crate::operators::CMatrix;

type C64 = Complex64;
const I: C64 = C64::new(0.0, 1.0);
const ZERO: C64 = C64::new(0.0, 0.0);

/// Flattening of `(spatial component, expansion index)` pairs into labels
/// `a = c · K + κ`, where `c` runs over the active components.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelMap {
    components: Vec<usize>,
    k: usize,
    conjugate: Vec<usize>,
}

impl LabelMap {
    pub fn new(components: Vec<usize>, conjugate: &[usize]) -> Result<Self, HierarchyError> {
        if components.is_empty() {
            return Err(HierarchyError::InvalidInput("no active coupling components".into()));
        }
        if components.iter().any(|&c| c > 2) {
            return Err(HierarchyError::InvalidInput(format!("spatial components must be 0..=2, got {components:?}")));
        }
        let mut sorted = components.clone();
        sorted.sort();
        sorted.dedup();
        if sorted.len() != components.len() {
            return Err(HierarchyError::InvalidInput(format!("duplicate spatial components {components:?}")));
        }
        Ok(Self { components, k: conjugate.len(), conjugate: conjugate.to_vec() })
    }

    pub fn len(&self) -> usize {
        self.components.len() * self.k
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn components(&self) -> &[usize] {
        &self.components
    }

    pub fn terms(&self) -> usize {
        self.k
    }

    /// `(i, κ)` of label `a`.
    pub fn split(&self, a: usize) -> (usize, usize) {
        (self.components[a / self.k], a % self.k)
    }

    pub fn label(&self, i: usize, kappa: usize) -> Option<usize> {
        let c = self.components.iter().position(|&x| x == i)?;
        (kappa < self.k).then_some(c * self.k + kappa)
    }

    /// Label of `(i, κ̄)`.
    pub fn conjugate(&self, a: usize) -> usize {
        (a / self.k) * self.k + self.conjugate[a % self.k]
    }
}

/// Everything needed to evaluate the right-hand side.
#[derive(Debug, Clone)]
pub struct Dynamics {
    pub model: SystemModel,
    pub frame: FrameTrajectory,
    pub field_frame: FieldFrameMode,
    pub expansion: BathExpansion,
    labels: LabelMap,
    static_ops: Option<Arc<StageOps>>,
}

/// Time-dependent operators at one stage time.
#[derive(Debug, Clone)]
pub struct StageOps {
    pub h: CMatrix,
    /// Operator part of `Q_i` for each active component.
    pub q: Vec<CMatrix>,
    /// `false` where `q` is identically zero.
    pub q_live: Vec<bool>,
    /// Spatial components `j` that feed the tier-down term.
    pub sources: Vec<usize>,
    /// Full `Q_j` (c-number included) for each entry of `sources`.
    pub full: Vec<CMatrix>,
    /// `η_{i(a) j κ(a)}` at `[a · sources.len() + s]`.
    pub ea: Vec<C64>,
    /// `η*_{i(a) j κ̄(a)}`, same layout.
    pub eb: Vec<C64>,
}

/// Components that can carry a coupling: those with a momentum operator,
/// and all three once rotations can mix them or the frame translates.
pub fn default_components(model: &SystemModel, frame: &FrameTrajectory, field: &FieldFrameMode) -> Vec<usize> {
    let mixing = !frame.is_rotation_trivial() && !matches!(field, FieldFrameMode::Comoving);
    let custom = matches!(field, FieldFrameMode::Custom(f) if !f.is_rotation_trivial());
    if mixing || custom || !frame.is_translation_trivial() {
        return vec![0, 1, 2];
    }
    let v: Vec<usize> = (0..3).filter(|&i| model.momentum[i].is_some()).collect();
    if v.is_empty() {
        vec![0]
    } else {
        v
    }
}

impl Dynamics {
    /// `components` defaults to [`default_components`].
    pub fn new(
        model: SystemModel,
        frame: FrameTrajectory,
        field_frame: FieldFrameMode,
        expansion: BathExpansion,
        components: Option<Vec<usize>>,
    ) -> Result<Self, HierarchyError> {
        frame.validate().map_err(|e| HierarchyError::Model(e.into()))?;
        let components = components.unwrap_or_else(|| default_components(&model, &frame, &field_frame));
        if expansion.dim() == 1 && components.len() > 1 {
            log::debug!("isotropic bath coupled through {} components", components.len());
        }
        let labels = LabelMap::new(components, expansion.conjugate_map())?;
        if labels.is_empty() {
            return Err(HierarchyError::InvalidInput("the bath expansion has no terms".into()));
        }
        let time_independent = frame.is_rotation_trivial()
            && matches!(frame.translation, TranslationSpec::None | TranslationSpec::Boost { .. })
            && !matches!(field_frame, FieldFrameMode::Custom(_));
        let mut dynamics = Self { model, frame, field_frame, expansion, labels, static_ops: None };
        if time_independent {
            dynamics.static_ops = Some(Arc::new(dynamics.build_stage_ops(0.0)?));
        }
        Ok(dynamics)
    }

    pub fn labels(&self) -> &LabelMap {
        &self.labels
    }

    pub fn dim(&self) -> usize {
        self.model.basis.dim()
    }

    pub fn is_time_independent(&self) -> bool {
        self.static_ops.is_some()
    }

    pub fn catalog(&self, max_tier: usize, max_slots: Option<usize>) -> Result<Arc<Catalog>, HierarchyError> {
        Ok(Arc::new(enumerate_indices(self.labels.len(), max_tier, max_slots)?))
    }

    /// `γ` of label `a`.
    pub fn exponent(&self, a: usize) -> C64 {
        self.expansion.exponents()[self.labels.split(a).1]
    }

    /// Scaling constants `c_a = |η_{i(a) i(a) κ(a)}|`; zero moduli are
    /// replaced by 1 (scaling disabled for that label) with a warning.
    pub fn scale_constants(&self) -> Vec<f64> {
        (0..self.labels.len())
            .map(|a| {
                let (i, k) = self.labels.split(a);
                let c = self.expansion.coefficient(i, i, k).norm();
                if c > 0.0 && c.is_finite() {
                    c
                } else {
                    log::warn!("label {a} (component {i}, term {k}) has a zero diagonal coefficient; scaling disabled for it");
                    1.0
                }
            })
            .collect()
    }

    pub fn stage_ops(&self, t: f64) -> Result<Arc<StageOps>, HierarchyError> {
        match &self.static_ops {
            Some(ops) => Ok(ops.clone()),
            None => Ok(Arc::new(self.build_stage_ops(t)?)),
        }
    }

    fn build_stage_ops(&self, t: f64) -> Result<StageOps, HierarchyError> {
        let h = system_hamiltonian_at(&self.model, &self.frame, t)?.into_matrix();
        let q = coupling_operators_at(&self.model, &self.frame, &self.field_frame, t)?;
        let full: Vec<CMatrix> = q.components.iter().map(|c| c.full().into_matrix()).collect();
        let q_ops: Vec<CMatrix> = self
            .labels
            .components()
            .iter()
            .map(|&i| q.components[i].operator.matrix().clone())
            .collect();
        let q_live = q_ops.iter().map(|m| m.iter().any(|z| *z != ZERO)).collect();
        let m = self.labels.len();
        let coeffs = |a: usize, j: usize| {
            let (i, k) = self.labels.split(a);
            let kb = self.expansion.conjugate_map()[k];
            (self.expansion.coefficient(i, j, k), self.expansion.coefficient(i, j, kb).conj())
        };
        let sources: Vec<usize> = (0..3)
            .filter(|&j| {
                full[j].iter().any(|z| *z != ZERO)
                    && (0..m).any(|a| {
                        let (ea, eb) = coeffs(a, j);
                        ea != ZERO || eb != ZERO
                    })
            })
            .collect();
        let mut ea = Vec::with_capacity(m * sources.len());
        let mut eb = Vec::with_capacity(m * sources.len());
        for a in 0..m {
            for &j in &sources {
                let (x, y) = coeffs(a, j);
                ea.push(x);
                eb.push(y);
            }
        }
        let full = sources.iter().map(|&j| full[j].clone()).collect();
        Ok(StageOps { h, q: q_ops, q_live, sources, full, ea, eb })
    }

    fn check_state(&self, state: &HierarchyState) -> Result<(), HierarchyError> {
        if state.catalog.labels() != self.labels.len() {
            return Err(HierarchyError::InvalidInput(format!(
                "state has {} labels, dynamics has {}",
                state.catalog.labels(),
                self.labels.len()
            )));
        }
        if state.basis.dim() != self.dim() {
            return Err(HierarchyError::InvalidInput(format!(
                "state dimension {} does not match the system dimension {}",
                state.basis.dim(),
                self.dim()
            )));
        }
        Ok(())
    }

    /// Derivative of every slot at time `t`, in the representation of `state`.
    pub fn deom_rhs(&self, state: &HierarchyState, t: f64) -> Result<Vec<CMatrix>, HierarchyError> {
        self.check_state(state)?;
        let ops = self.stage_ops(t)?;
        let d = self.dim();
        let mut out = vec![CMatrix::zeros(d, d); state.catalog.len()];
        let kernel = RhsKernel::new(self, &state.catalog, state.scaling.as_deref().map(|v| v.as_slice()));
        kernel.eval(&ops, &state.ddos, None, &mut out);
        Ok(out)
    }

    /// `max_n ‖ρ_n† − ρ_n̄‖_F` over the catalog, where `n̄` exchanges the
    /// occupations of `(i, κ)` and `(i, κ̄)`. Unscaled representation.
    pub fn conjugacy_residual(&self, state: &HierarchyState) -> Result<f64, HierarchyError> {
        self.check_state(state)?;
        let cat = &state.catalog;
        let m = cat.labels();
        let conj: Vec<usize> = (0..m).map(|a| self.labels.conjugate(a)).collect();
        let worst = (0..cat.len())
            .into_par_iter()
            .map(|s| {
                let occ = cat.occupation(s);
                let mut bar = vec![0u16; m];
                for a in 0..m {
                    bar[conj[a]] = occ[a];
                }
                let sb = cat.rank(&bar).expect("permutation preserves the tier");
                (state.ddo(s).adjoint() - state.ddo(sb)).norm()
            })
            .reduce(|| 0.0, f64::max);
        Ok(worst)
    }

    /// Forward (`true`) multiplies slot `n` by `s_n`; backward divides by it.
    pub fn rescale(&self, state: &HierarchyState, forward: bool) -> Result<HierarchyState, HierarchyError> {
        self.check_state(state)?;
        let mut out = state.clone();
        match (forward, &state.scaling) {
            (true, Some(_)) | (false, None) => return Ok(out),
            (true, None) => {
                let c = Arc::new(self.scale_constants());
                for (s, m) in out.ddos.iter_mut().enumerate() {
                    let f = slot_scale(state.catalog.occupation(s), &c);
                    if f != 1.0 {
                        *m *= C64::new(f, 0.0);
                    }
                }
                out.scaling = Some(c);
            }
            (false, Some(c)) => {
                for (s, m) in out.ddos.iter_mut().enumerate() {
                    let f = slot_scale(state.catalog.occupation(s), c);
                    if f != 1.0 {
                        *m /= C64::new(f, 0.0);
                    }
                }
                out.scaling = None;
            }
        }
        Ok(out)
    }
}

/// Per-slot data reused across evaluations.
pub(crate) struct RhsKernel<'a> {
    catalog: &'a Catalog,
    decay: Vec<C64>,
    scale: Option<&'a [f64]>,
    comp_of_label: Vec<usize>,
}

impl<'a> RhsKernel<'a> {
    pub(crate) fn new(dynamics: &Dynamics, catalog: &'a Catalog, scale: Option<&'a [f64]>) -> Self {
        let m = catalog.labels();
        let gammas: Vec<C64> = (0..m).map(|a| dynamics.exponent(a)).collect();
        let decay = (0..catalog.len())
            .map(|s| {
                catalog
                    .occupation(s)
                    .iter()
                    .zip(&gammas)
                    .fold(ZERO, |acc, (&n, g)| if n == 0 { acc } else { acc + g * n as f64 })
            })
            .collect();
        let k = dynamics.labels.terms();
        Self { catalog, decay, scale, comp_of_label: (0..m).map(|a| a / k).collect() }
    }

    /// `out[n] = rhs(src)[n]`; slots flagged in `skip` act as zero sources.
    ///
    /// Neighbours are first summed per operator, so each slot costs one
    /// commutator per coupling operator rather than one per label.
    pub(crate) fn eval(&self, ops: &StageOps, src: &[CMatrix], skip: Option<&[bool]>, out: &mut [CMatrix]) {
        let m = self.catalog.labels();
        let d = ops.h.nrows();
        let nc = ops.q.len();
        let ns = ops.sources.len();
        out.par_iter_mut().enumerate().for_each_init(
            || Scratch::new(d, nc, ns),
            |w, (s, o)| {
                let is_skipped = |k: usize| skip.is_some_and(|sk| sk[k]);
                let occ = self.catalog.occupation(s);
                let o = o.as_mut_slice();
                o.fill(ZERO);
                if !is_skipped(s) {
                    let rho = src[s].as_slice();
                    commutator_add(o, -I, ops.h.as_slice(), rho, d);
                    let g = self.decay[s];
                    if g != ZERO {
                        o.iter_mut().zip(rho).for_each(|(x, r)| *x -= g * r);
                    }
                }
                w.clear();
                for a in 0..m {
                    let n_a = occ[a];
                    let c = self.comp_of_label[a];
                    let up = self.catalog.up(s, a);
                    if up != NO_NEIGHBOR && ops.q_live[c] && !is_skipped(up) {
                        let f = match self.scale {
                            None => 1.0,
                            Some(cs) => ((n_a as f64 + 1.0) * cs[a]).sqrt(),
                        };
                        w.add_up(c, C64::new(f, 0.0), &src[up]);
                    }
                    if n_a > 0 && ns > 0 {
                        let dn = self.catalog.down(s, a);
                        if is_skipped(dn) {
                            continue;
                        }
                        let f = match self.scale {
                            None => n_a as f64,
                            Some(cs) => (n_a as f64 / cs[a]).sqrt(),
                        };
                        for k in 0..ns {
                            let (ea, eb) = (ops.ea[a * ns + k], ops.eb[a * ns + k]);
                            w.add_down(k, ea * f, eb * f, &src[dn]);
                        }
                    }
                }
                for c in 0..nc {
                    if w.up_used[c] {
                        commutator_add(o, -I, ops.q[c].as_slice(), w.up[c].as_slice(), d);
                    }
                }
                for k in 0..ns {
                    if w.x_used[k] {
                        mul_add(o, -I, ops.full[k].as_slice(), w.x[k].as_slice(), d);
                    }
                    if w.y_used[k] {
                        mul_add(o, I, w.y[k].as_slice(), ops.full[k].as_slice(), d);
                    }
                }
            },
        );
    }
}

/// `o += α a b` on column-major `d × d` slices.
fn mul_add(o: &mut [C64], alpha: C64, a: &[C64], b: &[C64], d: usize) {
    for (oj, bj) in o.chunks_exact_mut(d).zip(b.chunks_exact(d)) {
        for (ak, &bkj) in a.chunks_exact(d).zip(bj) {
            if bkj == ZERO {
                continue;
            }
            let f = alpha * bkj;
            oj.iter_mut().zip(ak).for_each(|(x, &y)| *x += f * y);
        }
    }
}

/// `o += α (a x − x a)`.
fn commutator_add(o: &mut [C64], alpha: C64, a: &[C64], x: &[C64], d: usize) {
    mul_add(o, alpha, a, x, d);
    mul_add(o, -alpha, x, a, d);
}

/// Per-thread sums of neighbouring slots.
struct Scratch {
    up: Vec<CMatrix>,
    up_used: Vec<bool>,
    x: Vec<CMatrix>,
    x_used: Vec<bool>,
    y: Vec<CMatrix>,
    y_used: Vec<bool>,
}

impl Scratch {
    fn new(d: usize, nc: usize, ns: usize) -> Self {
        Self {
            up: vec![CMatrix::zeros(d, d); nc],
            up_used: vec![false; nc],
            x: vec![CMatrix::zeros(d, d); ns],
            x_used: vec![false; ns],
            y: vec![CMatrix::zeros(d, d); ns],
            y_used: vec![false; ns],
        }
    }

    fn clear(&mut self) {
        self.up_used.fill(false);
        self.x_used.fill(false);
        self.y_used.fill(false);
    }

    fn accumulate(m: &mut CMatrix, used: &mut bool, f: C64, r: &CMatrix) {
        let (m, r) = (m.as_mut_slice(), r.as_slice());
        if *used {
            m.iter_mut().zip(r).for_each(|(x, v)| *x += f * v);
        } else {
            m.iter_mut().zip(r).for_each(|(x, v)| *x = f * v);
            *used = true;
        }
    }

    fn add_up(&mut self, c: usize, f: C64, r: &CMatrix) {
        Self::accumulate(&mut self.up[c], &mut self.up_used[c], f, r);
    }

    fn add_down(&mut self, k: usize, ea: C64, eb: C64, r: &CMatrix) {
        if ea != ZERO {
            Self::accumulate(&mut self.x[k], &mut self.x_used[k], ea, r);
        }
        if eb != ZERO {
            Self::accumulate(&mut self.y[k], &mut self.y_used[k], eb, r);
        }
    }
}
