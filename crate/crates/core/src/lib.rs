//! Event-triggered polynomial control (ETPC) for unicycle trajectory tracking.
//!
//! Between two events the actuator applies, per input channel, a polynomial in
//! the time elapsed since the last event. At every event the controller
//! predicts the ideal continuous-time feedback over a horizon, fits the
//! polynomial coefficients by constrained least squares, and transmits them.
//! Events are generated by a Lyapunov-based rule.
//!
//! The crate is `no_std` and only needs `alloc`. File formats, the batch
//! runner and the command line live in the `etpc` crate.

#![no_std]

extern crate alloc;
#[cfg(any(feature = "std", test))]
extern crate std;

pub mod controller;
pub mod dynamics;
mod error;
pub(crate) mod math;
pub mod metrics;
pub mod polyfit;
pub mod reference;
pub mod sampling;
pub mod simulation;
pub mod triggering;

pub use controller::{ideal_control, sinc, sinc_prime, ControllerParams};
pub use dynamics::{error_field, error_transform, plant_step, rk4_step, ControlInput, ErrorState, Pose};
pub use error::Error;
pub use metrics::{compute_metrics, quartiles, Quartiles, RunMetrics};
pub use polyfit::{
    eval_poly, hessian, predict_horizon, rhs_vector, solve_coefficients, CoefficientPacket,
    HorizonSamples,
};
pub use reference::{validate_a1, A1Bounds, OmegaProfile, PathSpec, RefSample, Reference};
pub use sampling::{sample_initial_conditions, UniformSource};
pub use simulation::{derive_ttc_period, payload_bytes, run, Event, Scenario, SimTrace, Strategy};
pub use triggering::{lambda_term, lyapunov, should_trigger, sigma, TriggerState};

pub type Result<T, E = Error> = core::result::Result<T, E>;
