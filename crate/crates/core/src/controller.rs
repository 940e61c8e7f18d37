//! Continuous-time backstepping tracking law and its parameters.

use crate::dynamics::{ControlInput, ErrorState};
use crate::math::{cos, sin, whole_steps};
use crate::reference::RefSample;
use crate::{Error, Result};

/// Gains and design parameters of the controller, the event rule and the
/// coefficient fit.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default))]
pub struct ControllerParams {
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
    pub gamma: f64,
    /// Fraction of the nominal decay rate that must be preserved, in (0, 1).
    pub sigma: f64,
    /// Level set `V <= epsilon_sq` below which no events are generated.
    pub epsilon_sq: f64,
    /// Input-magnitude penalties for the `v` and `omega` fits.
    pub delta: [f64; 2],
    /// Prediction horizon `T` in seconds.
    pub horizon: f64,
    /// Polynomial degree `p`.
    pub degree: usize,
    /// Integration step `h` in seconds.
    pub step: f64,
}

/// Highest supported polynomial degree.
pub const MAX_DEGREE: usize = 6;

impl Default for ControllerParams {
    fn default() -> Self {
        Self::simulation_study()
    }
}

impl ControllerParams {
    /// Gains of the simulation study: `gamma = 100`, `c = (0.02, 0.05, 0.01)`,
    /// `sigma = 0.5`, `epsilon = 0.1`, `T = 1 s`, `h = 5 ms`, with `p = 2`.
    pub fn simulation_study() -> Self {
        Self {
            c1: 0.02,
            c2: 0.05,
            c3: 0.01,
            gamma: 100.0,
            sigma: 0.5,
            epsilon_sq: 0.01,
            delta: [0.0, 0.0],
            horizon: 1.0,
            degree: 2,
            step: 0.005,
        }
    }

    /// Gains used on hardware: `gamma = 1`, `c = (0.5, 0.8, 0.7)`,
    /// `sigma = 0.9`, with `p = 1` (a 16-byte payload).
    pub fn experimental() -> Self {
        Self {
            c1: 0.5,
            c2: 0.8,
            c3: 0.7,
            gamma: 1.0,
            sigma: 0.9,
            degree: 1,
            ..Self::simulation_study()
        }
    }

    /// Number of integration steps in the prediction horizon.
    pub fn horizon_steps(&self) -> usize {
        whole_steps(self.horizon, self.step).unwrap_or(0)
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |v: f64| v > 0.0 && v.is_finite();
        if ![self.c1, self.c2, self.c3, self.gamma].into_iter().all(positive) {
            return Err(Error::InvalidConfig("c1, c2, c3 and gamma must be positive"));
        }
        if !(self.sigma > 0.0 && self.sigma < 1.0) {
            return Err(Error::InvalidConfig("sigma must lie in (0, 1)"));
        }
        if !positive(self.epsilon_sq) {
            return Err(Error::InvalidConfig("epsilon_sq must be positive"));
        }
        if !self.delta.iter().all(|d| *d >= 0.0 && d.is_finite()) {
            return Err(Error::InvalidConfig("delta weights must be non-negative"));
        }
        if !(positive(self.horizon) && positive(self.step)) {
            return Err(Error::InvalidConfig("horizon and step must be positive"));
        }
        if self.degree > MAX_DEGREE {
            return Err(Error::InvalidConfig("polynomial degree is capped at 6"));
        }
        match whole_steps(self.horizon, self.step) {
            Some(n) if n >= 1 => Ok(()),
            _ => Err(Error::InvalidConfig("horizon must be a whole number of steps")),
        }
    }
}

const TAYLOR_THRESHOLD: f64 = 1e-4;

/// `sin(x) / x`, equal to 1 at the origin.
pub fn sinc(x: f64) -> f64 {
    if x.abs() < TAYLOR_THRESHOLD {
        let x2 = x * x;
        1.0 - x2 / 6.0 * (1.0 - x2 / 20.0 * (1.0 - x2 / 42.0))
    } else {
        sin(x) / x
    }
}

/// Derivative of [`sinc`]: `(x cos x - sin x) / x^2`.
pub fn sinc_prime(x: f64) -> f64 {
    if x.abs() < TAYLOR_THRESHOLD {
        let x2 = x * x;
        -x / 3.0 * (1.0 - x2 / 10.0 * (1.0 - x2 / 28.0 * (1.0 - x2 / 54.0)))
    } else {
        (x * cos(x) - sin(x)) / (x * x)
    }
}

/// The angular-velocity component `omega_hat(X, t)` of the ideal law.
pub fn omega_hat(x: &ErrorState, r: &RefSample, p: &ControllerParams) -> f64 {
    r.omega_r + p.gamma * x.y_e * r.v_r * sinc(x.theta_e) + p.c2 * p.gamma * x.theta_e
}

/// Ideal control `(v_hat, omega_hat)` at state `x`.
pub fn ideal_control(x: &ErrorState, r: &RefSample, p: &ControllerParams) -> ControlInput {
    let ErrorState { x_e, y_e, theta_e } = *x;
    let (s, c) = (sin(theta_e), cos(theta_e));
    let sc = sinc(theta_e);
    let w = omega_hat(x, r, p);
    // v2 is the time derivative of omega_hat along the closed loop.
    let v2 = r.omegadot_r
        + p.gamma * r.v_r * sc * (-w * x_e + r.v_r * s)
        + p.gamma * y_e * r.vdot_r * sc
        + (p.gamma * y_e * r.v_r * sinc_prime(theta_e) + p.c2 * p.gamma) * (r.omega_r - w);
    let v1 = r.v_r * c - p.c3 * v2 * y_e + p.c3 * w * (w * x_e - r.v_r * s);
    let v = v1 + p.c1 * (x_e - p.c3 * w * y_e);
    ControlInput::new(v, w)
}
