//! Unicycle kinematics, the robot-frame tracking error and a fixed-step RK4
//! integrator shared by the plant, the reference and the hat system.

use crate::math::{cos, sin};
use crate::reference::RefSample;
use crate::{Error, Result};

/// Planar pose. `theta` is kept unwrapped.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Pose {
    pub x: f64,
    pub y: f64,
    pub theta: f64,
}

impl Pose {
    pub const fn new(x: f64, y: f64, theta: f64) -> Self {
        Self { x, y, theta }
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.theta.is_finite()
    }

    fn to_array(self) -> [f64; 3] {
        [self.x, self.y, self.theta]
    }

    fn from_array(a: [f64; 3]) -> Self {
        Self::new(a[0], a[1], a[2])
    }
}

/// Tracking error `(x_e, y_e, theta_e)` expressed in the robot frame.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ErrorState {
    pub x_e: f64,
    pub y_e: f64,
    pub theta_e: f64,
}

impl ErrorState {
    pub const ZERO: Self = Self::new(0.0, 0.0, 0.0);

    pub const fn new(x_e: f64, y_e: f64, theta_e: f64) -> Self {
        Self { x_e, y_e, theta_e }
    }

    pub fn is_finite(&self) -> bool {
        self.x_e.is_finite() && self.y_e.is_finite() && self.theta_e.is_finite()
    }

    pub fn to_array(self) -> [f64; 3] {
        [self.x_e, self.y_e, self.theta_e]
    }

    pub fn from_array(a: [f64; 3]) -> Self {
        Self::new(a[0], a[1], a[2])
    }
}

/// Linear and angular velocity command.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ControlInput {
    pub v: f64,
    pub omega: f64,
}

impl ControlInput {
    pub const fn new(v: f64, omega: f64) -> Self {
        Self { v, omega }
    }

    /// Channel `0` is `v`, channel `1` is `omega`.
    pub fn channel(&self, i: usize) -> f64 {
        match i {
            0 => self.v,
            1 => self.omega,
            _ => panic!("control channel {i} out of range"),
        }
    }

    pub fn is_finite(&self) -> bool {
        self.v.is_finite() && self.omega.is_finite()
    }
}

impl core::ops::Sub for ControlInput {
    type Output = ControlInput;

    fn sub(self, rhs: Self) -> Self {
        Self::new(self.v - rhs.v, self.omega - rhs.omega)
    }
}

/// Rotates the world-frame offset `reference - robot` into the robot frame.
pub fn error_transform(robot: &Pose, reference: &Pose) -> ErrorState {
    let (s, c) = (sin(robot.theta), cos(robot.theta));
    let dx = reference.x - robot.x;
    let dy = reference.y - robot.y;
    ErrorState::new(c * dx + s * dy, -s * dx + c * dy, reference.theta - robot.theta)
}

/// Inverse of [`error_transform`]: the robot pose that has tracking error
/// `error` with respect to `reference`.
pub fn robot_pose_from_error(reference: &Pose, error: &ErrorState) -> Pose {
    let theta = reference.theta - error.theta_e;
    let (s, c) = (sin(theta), cos(theta));
    Pose::new(
        reference.x - (c * error.x_e - s * error.y_e),
        reference.y - (s * error.x_e + c * error.y_e),
        theta,
    )
}

/// Control-affine error dynamics `F(X, t) + G(X) u`, returned as a
/// derivative in the same layout as the state.
pub fn error_field(x: &ErrorState, r: &RefSample, u: &ControlInput) -> ErrorState {
    ErrorState::new(
        r.v_r * cos(x.theta_e) - u.v + x.y_e * u.omega,
        r.v_r * sin(x.theta_e) - x.x_e * u.omega,
        r.omega_r - u.omega,
    )
}

/// `G(X) e` for an input perturbation `e`.
pub(crate) fn input_direction(x: &ErrorState, e: &ControlInput) -> [f64; 3] {
    [-e.v + x.y_e * e.omega, -x.x_e * e.omega, -e.omega]
}

/// Unicycle kinematics.
pub fn unicycle_field(pose: &Pose, u: &ControlInput) -> Pose {
    Pose::new(u.v * cos(pose.theta), u.v * sin(pose.theta), u.omega)
}

/// One classical fourth-order Runge–Kutta step of `dx/dt = field(t, x)`.
///
/// Fails with [`Error::Integration`] carrying the stage time if any stage
/// derivative is non-finite.
pub fn rk4_step<const N: usize, F>(state: [f64; N], t: f64, h: f64, mut field: F) -> Result<[f64; N]>
where
    F: FnMut(f64, &[f64; N]) -> [f64; N],
{
    let mut eval = |tt: f64, x: &[f64; N]| {
        let d = field(tt, x);
        if d.iter().all(|v| v.is_finite()) {
            Ok(d)
        } else {
            Err(Error::Integration { t: tt })
        }
    };
    let offset = |k: &[f64; N], scale: f64| -> [f64; N] {
        let mut out = state;
        for (o, ki) in out.iter_mut().zip(k) {
            *o += scale * ki;
        }
        out
    };

    let half = 0.5 * h;
    let k1 = eval(t, &state)?;
    let k2 = eval(t + half, &offset(&k1, half))?;
    let k3 = eval(t + half, &offset(&k2, half))?;
    let k4 = eval(t + h, &offset(&k3, h))?;

    let mut out = state;
    for i in 0..N {
        out[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }
    Ok(out)
}

/// Advances the unicycle one step with a constant input.
pub fn plant_step(pose: &Pose, u: &ControlInput, h: f64) -> Pose {
    // A constant finite input cannot produce a non-finite field from a finite pose.
    plant_step_with(pose, 0.0, h, |_| *u).unwrap_or(Pose::new(f64::NAN, f64::NAN, f64::NAN))
}

/// Advances the unicycle one step, re-evaluating the input at each RK4 stage
/// time `t`, `t + h/2`, `t + h`.
pub fn plant_step_with<U>(pose: &Pose, t: f64, h: f64, mut input: U) -> Result<Pose>
where
    U: FnMut(f64) -> ControlInput,
{
    rk4_step(pose.to_array(), t, h, |tt, s| {
        let u = input(tt);
        unicycle_field(&Pose::from_array(*s), &u).to_array()
    })
    .map(Pose::from_array)
}
