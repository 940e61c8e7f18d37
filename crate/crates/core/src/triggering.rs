//! Lyapunov function, its nominal decay `Sigma`, the perturbation `Lambda`
//! caused by the input error, and the event rule built from them.
//!
//! Along the closed loop `dV/dt = -Sigma + Lambda`, so the rule
//! `dV >= -sigma * Sigma` is evaluated as `Lambda >= (1 - sigma) * Sigma`.

use crate::controller::{omega_hat, sinc, sinc_prime, ControllerParams};
use crate::dynamics::{input_direction, ControlInput, ErrorState};
use crate::reference::RefSample;

/// Everything the event rule looks at, evaluated at one instant.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct TriggerState {
    pub v: f64,
    pub sigma: f64,
    pub lambda: f64,
    /// `u - u_hat(X, t)`.
    pub error: ControlInput,
    /// `V` at the most recent event.
    pub eps_k_sq: f64,
}

impl TriggerState {
    pub fn evaluate(
        x: &ErrorState,
        error: ControlInput,
        r: &RefSample,
        params: &ControllerParams,
        eps_k_sq: f64,
    ) -> Self {
        let parts = Parts::new(x, r, params);
        TriggerState {
            v: parts.v(params),
            sigma: parts.sigma(params),
            lambda: parts.lambda(x, &error, params),
            error,
            eps_k_sq,
        }
    }

    /// Analytic `dV/dt = -Sigma + Lambda`.
    pub fn v_dot(&self) -> f64 {
        self.lambda - self.sigma
    }

    pub fn fires(&self, params: &ControllerParams) -> bool {
        self.lambda >= (1.0 - params.sigma) * self.sigma && self.v >= params.epsilon_sq
    }
}

/// Shared intermediate quantities.
struct Parts {
    y_e: f64,
    theta_e: f64,
    omega: f64,
    x1: f64,
    dw_dy: f64,
    dw_dtheta: f64,
}

impl Parts {
    fn new(x: &ErrorState, r: &RefSample, p: &ControllerParams) -> Self {
        let omega = omega_hat(x, r, p);
        Parts {
            y_e: x.y_e,
            theta_e: x.theta_e,
            omega,
            x1: x.x_e - p.c3 * omega * x.y_e,
            dw_dy: p.gamma * r.v_r * sinc(x.theta_e),
            dw_dtheta: p.gamma * x.y_e * r.v_r * sinc_prime(x.theta_e) + p.c2 * p.gamma,
        }
    }

    fn v(&self, p: &ControllerParams) -> f64 {
        0.5 * self.x1 * self.x1 + 0.5 * self.y_e * self.y_e + self.theta_e * self.theta_e / (2.0 * p.gamma)
    }

    fn sigma(&self, p: &ControllerParams) -> f64 {
        p.c1 * self.x1 * self.x1
            + p.c2 * self.theta_e * self.theta_e
            + p.c3 * self.omega * self.omega * self.y_e * self.y_e
    }

    fn gradient(&self, p: &ControllerParams) -> [f64; 3] {
        // dx1/dX = (1, -c3 (omega + y dw/dy), -c3 y dw/dtheta)
        let dx1 = [1.0, -p.c3 * (self.omega + self.y_e * self.dw_dy), -p.c3 * self.y_e * self.dw_dtheta];
        [
            self.x1 * dx1[0],
            self.x1 * dx1[1] + self.y_e,
            self.x1 * dx1[2] + self.theta_e / p.gamma,
        ]
    }

    fn lambda(&self, x: &ErrorState, e: &ControlInput, p: &ControllerParams) -> f64 {
        let g = self.gradient(p);
        let d = input_direction(x, e);
        g[0] * d[0] + g[1] * d[1] + g[2] * d[2]
    }
}

/// `V = x1^2 / 2 + y_e^2 / 2 + theta_e^2 / (2 gamma)` with
/// `x1 = x_e - c3 omega_hat(X, t) y_e`.
pub fn lyapunov(x: &ErrorState, r: &RefSample, p: &ControllerParams) -> f64 {
    Parts::new(x, r, p).v(p)
}

/// `Sigma = c1 x1^2 + c2 theta_e^2 + c3 omega_hat^2 y_e^2`.
pub fn sigma(x: &ErrorState, r: &RefSample, p: &ControllerParams) -> f64 {
    Parts::new(x, r, p).sigma(p)
}

/// Gradient `dV/dX` at fixed `t`.
pub fn lyapunov_gradient(x: &ErrorState, r: &RefSample, p: &ControllerParams) -> [f64; 3] {
    Parts::new(x, r, p).gradient(p)
}

/// `Lambda = dV/dX . G(X) e`.
pub fn lambda_term(x: &ErrorState, e: &ControlInput, r: &RefSample, p: &ControllerParams) -> f64 {
    Parts::new(x, r, p).lambda(x, e, p)
}

/// The event rule: `Lambda >= (1 - sigma) Sigma` and `V >= epsilon^2`.
pub fn should_trigger(x: &ErrorState, e: &ControlInput, r: &RefSample, p: &ControllerParams) -> bool {
    TriggerState::evaluate(x, *e, r, p, 0.0).fires(p)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::Pose;
    use crate::sampling::UniformSource;
    use proptest::prelude::*;

    fn reference(src: &mut UniformSource) -> RefSample {
        RefSample {
            pose: Pose::default(),
            v_r: src.uniform(0.05, 0.3),
            omega_r: src.uniform(-0.5, 0.5),
            vdot_r: src.uniform(-0.1, 0.1),
            omegadot_r: src.uniform(-0.1, 0.1),
        }
    }

    fn circle() -> RefSample {
        RefSample { pose: Pose::default(), v_r: 0.15, omega_r: 0.15, vdot_r: 0.0, omegadot_r: 0.0 }
    }

    #[test]
    fn lyapunov_examples() {
        let p = ControllerParams::default();
        let r = circle();
        assert_eq!(lyapunov(&ErrorState::ZERO, &r, &p), 0.0);
        let v = lyapunov(&ErrorState::new(0.0, 0.0, 0.142), &r, &p);
        assert!((v - 0.142f64 * 0.142 / 200.0).abs() < 1e-18);
        assert!((v - 1.0082e-4).abs() < 1e-8);
        assert!((lyapunov(&ErrorState::new(0.8, 0.0, 0.0), &r, &p) - 0.32).abs() < 1e-15);
    }

    #[test]
    fn sigma_examples() {
        let p = ControllerParams::default();
        let r = circle();
        assert_eq!(sigma(&ErrorState::ZERO, &r, &p), 0.0);
        assert_eq!(sigma(&ErrorState::new(1.0, 0.0, 0.0), &r, &p), p.c1);
    }

    #[test]
    fn lambda_vanishes() {
        let p = ControllerParams::default();
        let r = circle();
        let x = ErrorState::new(0.4, -1.1, 0.1);
        assert_eq!(lambda_term(&x, &ControlInput::default(), &r, &p), 0.0);
        assert_eq!(lambda_term(&ErrorState::ZERO, &ControlInput::new(0.3, -2.0), &r, &p), 0.0);
    }

    #[test]
    fn lambda_matches_directional_difference() {
        let p = ControllerParams::default();
        let mut src = UniformSource::new(17);
        for _ in 0..1000 {
            let r = reference(&mut src);
            let x = ErrorState::new(src.uniform(-2.0, 2.0), src.uniform(-2.0, 2.0), src.uniform(-0.5, 0.5));
            let e = ControlInput::new(src.uniform(-0.5, 0.5), src.uniform(-0.5, 0.5));
            let d = input_direction(&x, &e);
            let step = 1e-6;
            let shifted = |s: f64| {
                ErrorState::new(x.x_e + s * d[0], x.y_e + s * d[1], x.theta_e + s * d[2])
            };
            let fd = (lyapunov(&shifted(step), &r, &p) - lyapunov(&shifted(-step), &r, &p)) / (2.0 * step);
            let an = lambda_term(&x, &e, &r, &p);
            assert!((an - fd).abs() <= 1e-4 * fd.abs().max(1e-8), "{an} vs {fd}");
        }
    }

    #[test]
    fn trigger_examples() {
        let p = ControllerParams::default();
        let r = circle();
        let x = ErrorState::new(0.5, 0.3, 0.05);
        assert!(lyapunov(&x, &r, &p) >= p.epsilon_sq);
        assert!(!should_trigger(&x, &ControlInput::default(), &r, &p));

        let small = ErrorState::new(0.01, 0.01, 0.0);
        assert!(!should_trigger(&small, &ControlInput::new(100.0, 100.0), &r, &p));

        // Lambda is linear in e, so a unit direction can be scaled to hit any
        // multiple of the threshold exactly.
        let dir = ControlInput::new(1.0, 0.0);
        let base = lambda_term(&x, &dir, &r, &p);
        let target = 1.01 * (1.0 - p.sigma) * sigma(&x, &r, &p);
        let scale = target / base;
        let e = ControlInput::new(scale, 0.0);
        assert!(should_trigger(&x, &e, &r, &p));
        let e = ControlInput::new(0.98 * scale, 0.0);
        assert!(!should_trigger(&x, &e, &r, &p));
    }

    proptest! {
        #[test]
        fn sigma_and_v_nonnegative(x in -3.0f64..3.0, y in -3.0f64..3.0, th in -1.0f64..1.0) {
            let p = ControllerParams::default();
            let s = ErrorState::new(x, y, th);
            prop_assert!(sigma(&s, &circle(), &p) >= 0.0);
            prop_assert!(lyapunov(&s, &circle(), &p) >= 0.0);
        }

        #[test]
        fn lambda_linear_in_error(x in -2.0f64..2.0, y in -2.0f64..2.0, th in -0.2f64..0.2,
                                  ev in -1.0f64..1.0, ew in -1.0f64..1.0) {
            let p = ControllerParams::default();
            let s = ErrorState::new(x, y, th);
            let one = lambda_term(&s, &ControlInput::new(ev, ew), &circle(), &p);
            let two = lambda_term(&s, &ControlInput::new(2.0 * ev, 2.0 * ew), &circle(), &p);
            prop_assert_eq!(two, 2.0 * one);
        }

        #[test]
        fn v_and_sigma_ignore_error(x in -2.0f64..2.0, y in -2.0f64..2.0, ev in -1.0f64..1.0) {
            let p = ControllerParams::default();
            let s = ErrorState::new(x, y, 0.1);
            let a = TriggerState::evaluate(&s, ControlInput::default(), &circle(), &p, 0.0);
            let b = TriggerState::evaluate(&s, ControlInput::new(ev, -ev), &circle(), &p, 0.0);
            prop_assert_eq!((a.v, a.sigma), (b.v, b.sigma));
        }
    }
}
