//! Kinematics of non-inertial frames.
//!
//! A [`FrameTrajectory`] pairs a rotation `R_t ∈ SO(3)` with a translation
//! `ζ_t ∈ R³`. Both start at the identity (`R_0 = I`, `ζ_0 = 0`). Rotations are
//! generated by `Ω(t) n(t)·J` with `(J_i)_{jk} = -ε_{ijk}`, and for a
//! time-varying axis the time-ordered exponential is built as a product of
//! exact axis-angle steps, later times multiplying from the left.

use std::fmt;
use std::sync::Arc;

use nalgebra::{Matrix3, Vector3};
use thiserror::Error;

/// Default step for the time-ordered product (simulation time units).
pub const DEFAULT_ROTATION_STEP: f64 = 1e-4;
/// Default central-difference step for callback translations.
pub const DEFAULT_FD_STEP: f64 = 1e-6;

const UNIT_TOL: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FrameError {
    #[error("rotation axis {axis:?} at t = {t} is not a unit vector (norm {norm})")]
    NonUnitAxis { axis: [f64; 3], t: f64, norm: f64 },
    #[error("time must be non-negative, got {0}")]
    NegativeTime(f64),
    #[error("invalid frame parameter: {0}")]
    InvalidParameter(String),
}

pub type AxisFn = Arc<dyn Fn(f64) -> Vector3<f64> + Send + Sync>;
pub type ScalarFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;
pub type PathFn = Arc<dyn Fn(f64) -> Vector3<f64> + Send + Sync>;

/// A constant-axis, constant-rate rotation active from `start` onwards.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RotationSegment {
    pub start: f64,
    pub axis: Vector3<f64>,
    pub omega: f64,
}

#[derive(Clone)]
pub enum RotationSpec {
    None,
    ConstantAxis {
        axis: Vector3<f64>,
        omega: f64,
    },
    /// Segments sorted by start time; the first must start at 0.
    Piecewise(Vec<RotationSegment>),
    Callback {
        axis: AxisFn,
        omega: ScalarFn,
        step: f64,
    },
}

impl fmt::Debug for RotationSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RotationSpec::None => write!(f, "None"),
            RotationSpec::ConstantAxis { axis, omega } => f
                .debug_struct("ConstantAxis")
                .field("axis", axis)
                .field("omega", omega)
                .finish(),
            RotationSpec::Piecewise(s) => f.debug_tuple("Piecewise").field(s).finish(),
            RotationSpec::Callback { step, .. } => {
                f.debug_struct("Callback").field("step", step).finish_non_exhaustive()
            }
        }
    }
}

#[derive(Clone)]
pub enum TranslationSpec {
    None,
    Boost {
        velocity: Vector3<f64>,
    },
    ConstantAccel {
        acceleration: Vector3<f64>,
    },
    /// `ζ(t)` given as a closure; derivatives by central differences.
    Callback {
        path: PathFn,
        step: f64,
    },
}

impl fmt::Debug for TranslationSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TranslationSpec::None => write!(f, "None"),
            TranslationSpec::Boost { velocity } => {
                f.debug_struct("Boost").field("velocity", velocity).finish()
            }
            TranslationSpec::ConstantAccel { acceleration } => f
                .debug_struct("ConstantAccel")
                .field("acceleration", acceleration)
                .finish(),
            TranslationSpec::Callback { step, .. } => {
                f.debug_struct("Callback").field("step", step).finish_non_exhaustive()
            }
        }
    }
}

/// Position, velocity and acceleration of the frame origin.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TranslationState {
    pub position: Vector3<f64>,
    pub velocity: Vector3<f64>,
    pub acceleration: Vector3<f64>,
}

#[derive(Debug, Clone)]
pub struct FrameTrajectory {
    pub rotation: RotationSpec,
    pub translation: TranslationSpec,
}

impl Default for FrameTrajectory {
    fn default() -> Self {
        Self::inertial()
    }
}

impl FrameTrajectory {
    pub fn inertial() -> Self {
        Self {
            rotation: RotationSpec::None,
            translation: TranslationSpec::None,
        }
    }

    pub fn new(rotation: RotationSpec, translation: TranslationSpec) -> Result<Self, FrameError> {
        let traj = Self {
            rotation,
            translation,
        };
        traj.validate()?;
        Ok(traj)
    }

    pub fn rotating(axis: Vector3<f64>, omega: f64) -> Result<Self, FrameError> {
        Self::new(
            RotationSpec::ConstantAxis { axis, omega },
            TranslationSpec::None,
        )
    }

    pub fn translating(translation: TranslationSpec) -> Result<Self, FrameError> {
        Self::new(RotationSpec::None, translation)
    }

    /// Checks the static parts of the rotation and translation setup. Callback axes are
    /// checked at every evaluation instead.
    pub fn validate(&self) -> Result<(), FrameError> {
        match &self.rotation {
            RotationSpec::None => {}
            RotationSpec::ConstantAxis { axis, omega } => {
                check_unit(axis, 0.0)?;
                if !omega.is_finite() {
                    return Err(FrameError::InvalidParameter(format!(
                        "angular velocity must be finite, got {omega}"
                    )));
                }
            }
            RotationSpec::Piecewise(segments) => {
                if segments.is_empty() {
                    return Err(FrameError::InvalidParameter(
                        "piecewise rotation needs at least one segment".into(),
                    ));
                }
                if segments[0].start != 0.0 {
                    return Err(FrameError::InvalidParameter(
                        "first rotation segment must start at t = 0".into(),
                    ));
                }
                for w in segments.windows(2) {
                    if w[1].start <= w[0].start {
                        return Err(FrameError::InvalidParameter(
                            "rotation segments must have strictly increasing start times".into(),
                        ));
                    }
                }
                for s in segments {
                    check_unit(&s.axis, s.start)?;
                }
            }
            RotationSpec::Callback { step, .. } => {
                if !(*step > 0.0) {
                    return Err(FrameError::InvalidParameter(format!(
                        "rotation step must be positive, got {step}"
                    )));
                }
            }
        }
        if let TranslationSpec::Callback { step, .. } = &self.translation {
            if !(*step > 0.0) {
                return Err(FrameError::InvalidParameter(format!(
                    "finite-difference step must be positive, got {step}"
                )));
            }
        }
        Ok(())
    }

    /// `Ω(t)` and `n(t)`. For `RotationSpec::None` the axis is `ẑ` and `Ω = 0`.
    pub fn angular_velocity_at(&self, t: f64) -> Result<(f64, Vector3<f64>), FrameError> {
        match &self.rotation {
            RotationSpec::None => Ok((0.0, Vector3::z())),
            RotationSpec::ConstantAxis { axis, omega } => Ok((*omega, *axis)),
            RotationSpec::Piecewise(segments) => {
                let seg = segments
                    .iter()
                    .rev()
                    .find(|s| s.start <= t)
                    .unwrap_or(&segments[0]);
                Ok((seg.omega, seg.axis))
            }
            RotationSpec::Callback { axis, omega, .. } => {
                let n = axis(t);
                check_unit(&n, t)?;
                Ok((omega(t), n))
            }
        }
    }

    /// `true` when `R_t = I` for every `t`.
    pub fn is_rotation_trivial(&self) -> bool {
        match &self.rotation {
            RotationSpec::None => true,
            RotationSpec::ConstantAxis { omega, .. } => *omega == 0.0,
            RotationSpec::Piecewise(s) => s.iter().all(|s| s.omega == 0.0),
            RotationSpec::Callback { .. } => false,
        }
    }

    pub fn is_translation_trivial(&self) -> bool {
        match &self.translation {
            TranslationSpec::None => true,
            TranslationSpec::Boost { velocity } => velocity.iter().all(|v| *v == 0.0),
            TranslationSpec::ConstantAccel { acceleration } => {
                acceleration.iter().all(|v| *v == 0.0)
            }
            TranslationSpec::Callback { .. } => false,
        }
    }
}

fn check_unit(axis: &Vector3<f64>, t: f64) -> Result<(), FrameError> {
    let norm = axis.norm();
    if (norm - 1.0).abs() > UNIT_TOL || !norm.is_finite() {
        return Err(FrameError::NonUnitAxis {
            axis: [axis.x, axis.y, axis.z],
            t,
            norm,
        });
    }
    Ok(())
}

/// The three `so(3)` generators, `(J_i)_{jk} = -ε_{ijk}`.
pub fn so3_generators() -> [Matrix3<f64>; 3] {
    let mut gens = [Matrix3::zeros(); 3];
    for (i, g) in gens.iter_mut().enumerate() {
        for j in 0..3 {
            for k in 0..3 {
                g[(j, k)] = -levi_civita(i, j, k);
            }
        }
    }
    gens
}

fn levi_civita(i: usize, j: usize, k: usize) -> f64 {
    match (i, j, k) {
        (0, 1, 2) | (1, 2, 0) | (2, 0, 1) => 1.0,
        (0, 2, 1) | (2, 1, 0) | (1, 0, 2) => -1.0,
        _ => 0.0,
    }
}

/// `v·J` as a 3×3 matrix; acting on `x` it gives `v × x`.
pub fn hat(v: &Vector3<f64>) -> Matrix3<f64> {
    Matrix3::new(0.0, -v.z, v.y, v.z, 0.0, -v.x, -v.y, v.x, 0.0)
}

/// `exp(angle · n·J)` by the Rodrigues formula. `axis` must be a unit vector.
pub fn axis_angle(axis: &Vector3<f64>, angle: f64) -> Matrix3<f64> {
    let k = hat(axis);
    let (s, c) = angle.sin_cos();
    Matrix3::identity() + k * s + (k * k) * (1.0 - c)
}

/// `R_t` for the configured rotation.
pub fn rotation_at(traj: &FrameTrajectory, t: f64) -> Result<Matrix3<f64>, FrameError> {
    if t < 0.0 {
        return Err(FrameError::NegativeTime(t));
    }
    match &traj.rotation {
        RotationSpec::None => Ok(Matrix3::identity()),
        RotationSpec::ConstantAxis { axis, omega } => {
            check_unit(axis, t)?;
            Ok(axis_angle(axis, omega * t))
        }
        RotationSpec::Piecewise(segments) => {
            let mut r = Matrix3::identity();
            for (idx, seg) in segments.iter().enumerate() {
                if seg.start >= t {
                    break;
                }
                let end = segments
                    .get(idx + 1)
                    .map(|s| s.start.min(t))
                    .unwrap_or(t);
                check_unit(&seg.axis, seg.start)?;
                r = axis_angle(&seg.axis, seg.omega * (end - seg.start)) * r;
            }
            Ok(r)
        }
        RotationSpec::Callback { axis, omega, step } => {
            let mut r = Matrix3::identity();
            let n_full = (t / step).floor() as usize;
            let mut t0 = 0.0;
            for k in 0..=n_full {
                let t1 = if k == n_full { t } else { (k + 1) as f64 * step };
                let h = t1 - t0;
                if h <= 0.0 {
                    break;
                }
                let tm = 0.5 * (t0 + t1);
                let n = axis(tm);
                check_unit(&n, tm)?;
                r = axis_angle(&n, omega(tm) * h) * r;
                t0 = t1;
            }
            Ok(r)
        }
    }
}

/// `(ζ_t, ζ̇_t, ζ̈_t)`.
pub fn translation_state_at(
    traj: &FrameTrajectory,
    t: f64,
) -> Result<TranslationState, FrameError> {
    if t < 0.0 {
        return Err(FrameError::NegativeTime(t));
    }
    let zero = Vector3::zeros();
    Ok(match &traj.translation {
        TranslationSpec::None => TranslationState {
            position: zero,
            velocity: zero,
            acceleration: zero,
        },
        TranslationSpec::Boost { velocity } => TranslationState {
            position: velocity * t,
            velocity: *velocity,
            acceleration: zero,
        },
        TranslationSpec::ConstantAccel { acceleration } => TranslationState {
            position: acceleration * (0.5 * t * t),
            velocity: acceleration * t,
            acceleration: *acceleration,
        },
        TranslationSpec::Callback { path, step } => {
            let h = *step;
            let (zm, z0, zp) = (path(t - h), path(t), path(t + h));
            TranslationState {
                position: z0,
                velocity: (zp - zm) / (2.0 * h),
                acceleration: (zp - z0 * 2.0 + zm) / (h * h),
            }
        }
    })
}
