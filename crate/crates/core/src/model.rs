//! System Hamiltonian and coupling operators in the moving frame.
//!
//! With the particle frame `(R_t, ζ_t)` and the field frame `(R̃_t, ζ̃_t)`,
//!
//! ```text
//! H_S(t) = p²/2m + V₀(r) − Ω(t) n(t)·(R_t L) + m ζ̈_t·(R_t r)
//! Q(t)   = e R̃_t⁻¹ (R_t p / m + ζ̇_t)
//! ```
//!
//! Terms of order `e²` are dropped and the field is taken in the
//! long-wavelength limit, so `Q` carries no position dependence. The
//! `e R̃⁻¹ζ̇` piece is a c-number and is kept as the scalar part of each
//! coupling component.

use std::sync::Arc;

use nalgebra::{Matrix3, Vector3};
use thiserror::Error;

use crate::frames::{rotation_at, translation_state_at, FrameError, FrameTrajectory};
use crate::operators::{
    commutator, expm, oscillator_basis, ring_basis, two_level_basis, Basis, BasisKind, C64,
    CMatrix, Operator, OperatorError,
};

const AXES: [&str; 3] = ["x", "y", "z"];
const HERMITIAN_TOL: f64 = 1e-12;
/// Relative size below which a frame coefficient is treated as exactly zero.
const COEFF_EPS: f64 = 1e-13;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("configuration requires operator {0}, which the model does not provide")]
    MissingOperator(String),
    #[error("{0} is not Hermitian")]
    NotHermitian(String),
    #[error("unsupported configuration: {0}")]
    Unsupported(String),
    #[error(transparent)]
    Frame(#[from] FrameError),
    #[error(transparent)]
    Operator(#[from] OperatorError),
}

/// How the field's reference frame moves.
#[derive(Debug, Clone, Default)]
pub enum FieldFrameMode {
    /// `R̃ = R`, `ζ̃ = ζ`.
    Comoving,
    /// `R̃ = I`, `ζ̃ = 0`.
    #[default]
    Static,
    Custom(FrameTrajectory),
}

/// A charged particle on a finite basis.
///
/// Absent position / angular-momentum components are an error only when the
/// frame motion needs them. Absent momentum components are zero.
#[derive(Debug, Clone)]
pub struct SystemModel {
    pub basis: Arc<Basis>,
    pub mass: f64,
    pub charge: f64,
    /// The kinetic term `p²/2m` (or its stand-in, e.g. `L_z²/2I` on the ring).
    pub kinetic: Operator,
    pub potential: Operator,
    pub position: [Option<Operator>; 3],
    pub momentum: [Option<Operator>; 3],
    pub angular_momentum: [Option<Operator>; 3],
}

impl SystemModel {
    pub fn new(
        basis: Arc<Basis>,
        mass: f64,
        charge: f64,
        kinetic: Operator,
        potential: Operator,
    ) -> Result<Self, ModelError> {
        if !(mass > 0.0) {
            return Err(ModelError::Unsupported(format!("mass must be positive, got {mass}")));
        }
        if !charge.is_finite() {
            return Err(ModelError::Unsupported("charge must be finite".into()));
        }
        let model = Self {
            basis,
            mass,
            charge,
            kinetic,
            potential,
            position: [None, None, None],
            momentum: [None, None, None],
            angular_momentum: [None, None, None],
        };
        model.check_operator("kinetic term", &model.kinetic)?;
        model.check_operator("V0", &model.potential)?;
        Ok(model)
    }

    fn check_operator(&self, name: &str, op: &Operator) -> Result<(), ModelError> {
        op.same_basis(&Operator::zeros(&self.basis))?;
        if !op.is_hermitian(HERMITIAN_TOL * op.matrix().norm().max(1.0)) {
            return Err(ModelError::NotHermitian(name.to_string()));
        }
        Ok(())
    }

    pub fn with_position(mut self, axis: usize, op: Operator) -> Result<Self, ModelError> {
        self.check_operator(&format!("r_{}", AXES[axis]), &op)?;
        self.position[axis] = Some(op);
        Ok(self)
    }

    pub fn with_momentum(mut self, axis: usize, op: Operator) -> Result<Self, ModelError> {
        self.check_operator(&format!("p_{}", AXES[axis]), &op)?;
        self.momentum[axis] = Some(op);
        Ok(self)
    }

    pub fn with_angular_momentum(mut self, axis: usize, op: Operator) -> Result<Self, ModelError> {
        self.check_operator(&format!("L_{}", AXES[axis]), &op)?;
        self.angular_momentum[axis] = Some(op);
        Ok(self)
    }

    pub fn with_charge(mut self, charge: f64) -> Self {
        self.charge = charge;
        self
    }

    /// `p²/2m + V₀`.
    pub fn bare_hamiltonian(&self) -> Operator {
        &self.kinetic + &self.potential
    }

    /// Two-level system `ω₀σ_z/2 + Δσ_x/2`. The listed Pauli operators stand
    /// in for the momentum components they are attached to.
    pub fn two_level(
        omega0: f64,
        delta: f64,
        mass: f64,
        charge: f64,
        momentum: &[(usize, Pauli)],
    ) -> Result<Self, ModelError> {
        let p = two_level_basis();
        let potential = &p.sz.scale_real(0.5 * omega0) + &p.sx.scale_real(0.5 * delta);
        let mut model = Self::new(p.basis.clone(), mass, charge, Operator::zeros(&p.basis), potential)?;
        for &(axis, which) in momentum {
            let op = match which {
                Pauli::X => p.sx.clone(),
                Pauli::Y => p.sy.clone(),
                Pauli::Z => p.sz.clone(),
            };
            model = model.with_momentum(axis, op)?;
        }
        Ok(model)
    }

    /// Particle of mass `inertia / radius²` on a ring of the given radius in
    /// the `xy` plane, with `V₀ = v_cos · cos θ`.
    pub fn ring(m_max: usize, inertia: f64, radius: f64, charge: f64, v_cos: f64) -> Result<Self, ModelError> {
        if !(inertia > 0.0) || !(radius > 0.0) {
            return Err(ModelError::Unsupported(
                "ring needs positive moment of inertia and radius".into(),
            ));
        }
        let r = ring_basis(m_max)?;
        let mass = inertia / (radius * radius);
        let kinetic = (&r.lz * &r.lz).scale_real(0.5 / inertia);
        let potential = r.cos.scale_real(v_cos);
        let sym = |a: &Operator, b: &Operator| (&(a * b) + &(b * a)).scale_real(0.5);
        let px = sym(&r.sin, &r.lz).scale_real(-1.0 / radius);
        let py = sym(&r.cos, &r.lz).scale_real(1.0 / radius);
        Self::new(r.basis.clone(), mass, charge, kinetic, potential)?
            .with_position(0, r.cos.scale_real(radius))?
            .with_position(1, r.sin.scale_real(radius))?
            .with_momentum(0, px)?
            .with_momentum(1, py)?
            .with_angular_momentum(2, r.lz)
    }

    /// One-dimensional oscillator along `x`.
    pub fn oscillator(n_max: usize, mass: f64, omega0: f64, charge: f64) -> Result<Self, ModelError> {
        let o = oscillator_basis(n_max, mass, omega0)?;
        let kinetic = (&o.p * &o.p).scale_real(0.5 / mass);
        let potential = (&o.x * &o.x).scale_real(0.5 * mass * omega0 * omega0);
        Self::new(o.basis.clone(), mass, charge, kinetic, potential)?
            .with_position(0, o.x)?
            .with_momentum(0, o.p)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Pauli {
    X,
    Y,
    Z,
}

/// One spatial component of `Q(t)`: `operator + scalar · I`.
#[derive(Debug, Clone, PartialEq)]
pub struct CouplingComponent {
    pub operator: Operator,
    pub scalar: f64,
}

impl CouplingComponent {
    pub fn full(&self) -> Operator {
        let mut m = self.operator.matrix().clone();
        for k in 0..m.nrows() {
            m[(k, k)] += C64::new(self.scalar, 0.0);
        }
        Operator::from_parts(self.operator.basis().clone(), m)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CouplingSet {
    pub components: [CouplingComponent; 3],
}

fn field_rotation(field: &FieldFrameMode, frame_r: &Matrix3<f64>, t: f64) -> Result<Matrix3<f64>, ModelError> {
    Ok(match field {
        FieldFrameMode::Comoving => *frame_r,
        FieldFrameMode::Static => Matrix3::identity(),
        FieldFrameMode::Custom(traj) => rotation_at(traj, t)?,
    })
}

fn combine(
    basis: &Arc<Basis>,
    coeffs: &Vector3<f64>,
    ops: &[Option<Operator>; 3],
    symbol: &str,
    scale: f64,
) -> Result<Option<Operator>, ModelError> {
    let mut acc: Option<CMatrix> = None;
    for j in 0..3 {
        if coeffs[j].abs() <= COEFF_EPS * scale {
            continue;
        }
        let op = ops[j]
            .as_ref()
            .ok_or_else(|| ModelError::MissingOperator(format!("{symbol}_{}", AXES[j])))?;
        let term = op.matrix() * C64::new(coeffs[j], 0.0);
        acc = Some(match acc {
            Some(a) => a + term,
            None => term,
        });
    }
    Ok(acc.map(|m| Operator::from_parts(basis.clone(), m)))
}

/// `H_S(t)`.
pub fn system_hamiltonian_at(
    model: &SystemModel,
    frame: &FrameTrajectory,
    t: f64,
) -> Result<Operator, ModelError> {
    let mut h = model.bare_hamiltonian();
    let (omega, axis) = frame.angular_velocity_at(t)?;
    let trans = translation_state_at(frame, t)?;
    let needs_rotation = omega != 0.0;
    let needs_accel = trans.acceleration.iter().any(|a| *a != 0.0);
    if !needs_rotation && !needs_accel {
        return Ok(h);
    }
    let r = rotation_at(frame, t)?;
    if needs_rotation {
        // n·(R L) = (Rᵀn)·L
        let c = r.transpose() * axis * omega;
        if let Some(op) = combine(&model.basis, &c, &model.angular_momentum, "L", omega.abs())? {
            h = &h - &op;
        }
    }
    if needs_accel {
        let c = r.transpose() * trans.acceleration * model.mass;
        let scale = model.mass * trans.acceleration.norm();
        if let Some(op) = combine(&model.basis, &c, &model.position, "r", scale)? {
            h = &h + &op;
        }
    }
    Ok(h)
}

/// `Q_i(t)` for `i = x, y, z`.
pub fn coupling_operators_at(
    model: &SystemModel,
    frame: &FrameTrajectory,
    field_frame: &FieldFrameMode,
    t: f64,
) -> Result<CouplingSet, ModelError> {
    let e = model.charge;
    let zero = Operator::zeros(&model.basis);
    let trans = translation_state_at(frame, t)?;
    let (mixing, field_r) = match field_frame {
        FieldFrameMode::Comoving if frame.is_rotation_trivial() => (None, Matrix3::identity()),
        FieldFrameMode::Comoving => (None, rotation_at(frame, t)?),
        FieldFrameMode::Static if frame.is_rotation_trivial() => (None, Matrix3::identity()),
        _ => {
            let r = rotation_at(frame, t)?;
            let rf = field_rotation(field_frame, &r, t)?;
            (Some(rf.transpose() * r), rf)
        }
    };
    let drive = field_r.transpose() * trans.velocity * e;
    let components = std::array::from_fn(|i| {
        let operator = if e == 0.0 {
            zero.clone()
        } else {
            match &mixing {
                None => model.momentum[i]
                    .as_ref()
                    .map(|p| p.scale_real(e / model.mass))
                    .unwrap_or_else(|| zero.clone()),
                Some(m) => {
                    let mut acc = zero.matrix().clone();
                    for j in 0..3 {
                        if m[(i, j)] == 0.0 {
                            continue;
                        }
                        if let Some(p) = &model.momentum[j] {
                            acc += p.matrix() * C64::new(m[(i, j)] * e / model.mass, 0.0);
                        }
                    }
                    Operator::from_parts(model.basis.clone(), acc)
                }
            }
        };
        CouplingComponent {
            operator,
            scalar: drive[i],
        }
    });
    Ok(CouplingSet { components })
}

/// Interior-block residuals of the frame-transformation identities.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct TransformationReport {
    /// `‖U₂ r U₂† − (r + ζ)‖`
    pub displacement_position: f64,
    /// `‖U₂ p U₂† − (p + m ζ̇)‖`
    pub displacement_momentum: f64,
    /// `‖U₁ (r + ζ) U₁† − (R r + ζ)‖`
    pub rotation: f64,
    /// `‖U₁ L_z U₁† − L_z‖` (ring only, zero otherwise)
    pub angular_momentum: f64,
    /// Size of the leading block the residuals are measured on.
    pub interior: usize,
    pub tolerance: f64,
    pub passed: bool,
}

impl TransformationReport {
    pub fn max_residual(&self) -> f64 {
        self.displacement_position
            .max(self.displacement_momentum)
            .max(self.rotation)
            .max(self.angular_momentum)
    }
}

/// Builds `U₂ = exp(−i m ζ̇·r) exp(i ζ·p)` and the rotation unitary `U₁` on the
/// truncated basis and measures how well they reproduce the classical frame
/// shifts. For the oscillator the residuals are taken on the leading
/// `dim − margin` block.
pub fn verify_transformation_identities(
    model: &SystemModel,
    frame: &FrameTrajectory,
    t: f64,
    margin: usize,
    tol: f64,
) -> Result<TransformationReport, ModelError> {
    let trans = translation_state_at(frame, t)?;
    let r = rotation_at(frame, t)?;
    let basis = &model.basis;
    let d = basis.dim();
    let keep = d.saturating_sub(margin).max(1);
    match basis.kind() {
        BasisKind::Oscillator => {
            if !frame.is_rotation_trivial() {
                return Err(ModelError::Unsupported(
                    "a one-dimensional oscillator cannot rotate".into(),
                ));
            }
            if trans.position.y != 0.0 || trans.position.z != 0.0 || trans.velocity.y != 0.0 || trans.velocity.z != 0.0 {
                return Err(ModelError::Unsupported(
                    "oscillator realises the x axis only; translation must be along x".into(),
                ));
            }
            let x = model.position[0]
                .as_ref()
                .ok_or_else(|| ModelError::MissingOperator("r_x".into()))?;
            let p = model.momentum[0]
                .as_ref()
                .ok_or_else(|| ModelError::MissingOperator("p_x".into()))?;
            let id = Operator::identity(basis);
            let kick = expm(&x.scale(C64::new(0.0, -model.mass * trans.velocity.x)));
            let shift = expm(&p.scale(C64::new(0.0, trans.position.x)));
            let u2 = &kick * &shift;
            let u2d = crate::operators::adjoint(&u2);
            let res_r = &(&(&u2 * x) * &u2d) - &(x + &id.scale_real(trans.position.x));
            let res_p = &(&(&u2 * p) * &u2d) - &(p + &id.scale_real(model.mass * trans.velocity.x));
            // U₁ = I here, so the rotation identity reduces to R_xx = 1.
            let shifted = x + &id.scale_real(trans.position.x);
            let rotated = &x.scale_real(r[(0, 0)]) + &id.scale_real(trans.position.x);
            let res_rot = &shifted - &rotated;
            let report = TransformationReport {
                displacement_position: res_r.interior_norm(keep),
                displacement_momentum: res_p.interior_norm(keep),
                rotation: res_rot.interior_norm(keep),
                angular_momentum: 0.0,
                interior: keep,
                tolerance: tol,
                passed: false,
            };
            Ok(finish(report))
        }
        BasisKind::Ring => {
            if !frame.is_translation_trivial() {
                return Err(ModelError::Unsupported("ring frames cannot translate".into()));
            }
            if (r[(2, 2)] - 1.0).abs() > 1e-12 || r[(0, 2)].abs() > 1e-12 || r[(1, 2)].abs() > 1e-12 {
                return Err(ModelError::Unsupported(
                    "ring rotations must be about the z axis".into(),
                ));
            }
            let lz = model.angular_momentum[2]
                .as_ref()
                .ok_or_else(|| ModelError::MissingOperator("L_z".into()))?;
            let x = model.position[0]
                .as_ref()
                .ok_or_else(|| ModelError::MissingOperator("r_x".into()))?;
            let y = model.position[1]
                .as_ref()
                .ok_or_else(|| ModelError::MissingOperator("r_y".into()))?;
            let angle = r[(1, 0)].atan2(r[(0, 0)]);
            // U₁ = exp(i θ L_z) for a rotation by θ about z.
            let u1 = expm(&lz.scale(C64::new(0.0, angle)));
            let u1d = crate::operators::adjoint(&u1);
            let conj = |a: &Operator| &(&u1 * a) * &u1d;
            let rx = &(&x.scale_real(r[(0, 0)]) + &y.scale_real(r[(0, 1)])) - &conj(x);
            let ry = &(&x.scale_real(r[(1, 0)]) + &y.scale_real(r[(1, 1)])) - &conj(y);
            let rl = &conj(lz) - lz;
            let report = TransformationReport {
                displacement_position: 0.0,
                displacement_momentum: 0.0,
                rotation: rx.interior_norm(d).hypot(ry.interior_norm(d)),
                angular_momentum: rl.interior_norm(d),
                interior: d,
                tolerance: tol,
                passed: false,
            };
            Ok(finish(report))
        }
        BasisKind::TwoLevel => Err(ModelError::Unsupported(
            "the two-level basis has no position or momentum operators".into(),
        )),
    }
}

fn finish(mut report: TransformationReport) -> TransformationReport {
    report.passed = report.max_residual() <= report.tolerance;
    report
}

/// `true` when `[H_S(t), Q_i(t)] = 0` for every component at the sampled times.
pub fn is_pure_dephasing(
    model: &SystemModel,
    frame: &FrameTrajectory,
    field_frame: &FieldFrameMode,
    times: &[f64],
) -> Result<bool, ModelError> {
    for &t in times {
        let h = system_hamiltonian_at(model, frame, t)?;
        let q = coupling_operators_at(model, frame, field_frame, t)?;
        for c in &q.components {
            if commutator(&h, &c.operator)?.matrix().norm() > 1e-12 {
                return Ok(false);
            }
        }
    }
    Ok(true)
}
