//! Closed-loop simulation of the tracking loop under one of three update
//! strategies.
//!
//! The robot pose is integrated with RK4 at the fixed step `h`; the tracking
//! error is recomputed from the robot and reference poses on the grid. The
//! event rule is checked once per step, after the state update, and an event
//! takes effect at that same grid instant.

use alloc::vec::Vec;

use crate::controller::{ideal_control, ControllerParams};
use crate::dynamics::{error_transform, plant_step_with, robot_pose_from_error, ControlInput, ErrorState, Pose};
use crate::math::{round, whole_steps};
use crate::polyfit::{predict_horizon, solve_coefficients, CoefficientPacket};
use crate::reference::{validate_a1, PathSpec, RefSample, Reference};
use crate::triggering::TriggerState;
use crate::{Error, Result};

/// How the actuator input is updated.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Strategy {
    /// Event-triggered polynomial control of degree `params.degree`.
    Etpc,
    /// Event-triggered zero-order hold of the ideal control.
    Etc,
    /// Periodic zero-order hold; `period` must be a whole number of steps.
    Ttc { period: f64 },
}

impl Strategy {
    pub fn label(&self) -> &'static str {
        match self {
            Strategy::Etpc => "etpc",
            Strategy::Etc => "etc",
            Strategy::Ttc { .. } => "ttc",
        }
    }
}

/// Bytes of useful payload per transmitted update: 4 for a held `(v, omega)`
/// pair, 4 bytes per coefficient for polynomial packets.
pub fn payload_bytes(strategy: &Strategy, degree: usize) -> usize {
    match strategy {
        Strategy::Etpc => 4 * 2 * (degree + 1),
        Strategy::Etc | Strategy::Ttc { .. } => 4,
    }
}

/// One closed-loop experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub path: PathSpec,
    pub params: ControllerParams,
    pub initial_error: ErrorState,
    /// Experiment length `T_e` in seconds.
    pub duration: f64,
    /// Identifies the run in batch output; the simulation itself is
    /// deterministic.
    pub seed: u64,
}

impl Scenario {
    pub fn new(path: PathSpec, params: ControllerParams, initial_error: ErrorState) -> Self {
        let duration = path.duration;
        Self { path, params, initial_error, duration, seed: 0 }
    }
}

/// A transmitted update.
#[derive(Debug, Clone, PartialEq)]
pub struct Event {
    /// Grid index of the event.
    pub step: usize,
    pub t: f64,
    pub packet: CoefficientPacket,
    pub payload_bytes: usize,
}

/// Everything logged by [`run`], one entry per grid instant `t = i h`.
///
/// At event instants the logged input error and `Lambda` are those right
/// after the update, i.e. zero.
#[derive(Debug, Clone, PartialEq)]
pub struct SimTrace {
    pub strategy: Strategy,
    pub step: f64,
    pub duration: f64,
    pub robot: Vec<Pose>,
    pub reference: Vec<Pose>,
    pub states: Vec<ErrorState>,
    pub v: Vec<f64>,
    pub inputs: Vec<ControlInput>,
    pub input_error: Vec<ControlInput>,
    pub sigma: Vec<f64>,
    pub lambda: Vec<f64>,
    pub event_flags: Vec<bool>,
    pub events: Vec<Event>,
}

impl SimTrace {
    pub fn len(&self) -> usize {
        self.v.len()
    }

    pub fn is_empty(&self) -> bool {
        self.v.is_empty()
    }

    pub fn time(&self, i: usize) -> f64 {
        i as f64 * self.step
    }

    pub fn times(&self) -> Vec<f64> {
        (0..self.len()).map(|i| self.time(i)).collect()
    }

    pub fn event_times(&self) -> Vec<f64> {
        self.events.iter().map(|e| e.t).collect()
    }

    /// Analytic `dV/dt = -Sigma + Lambda` at grid index `i`.
    pub fn v_dot(&self, i: usize) -> f64 {
        self.lambda[i] - self.sigma[i]
    }
}

/// Runs one scenario to completion.
pub fn run(scenario: &Scenario, strategy: Strategy) -> Result<SimTrace> {
    let params = &scenario.params;
    params.validate()?;
    let h = params.step;
    let n = whole_steps(scenario.duration, h)
        .filter(|&n| n > 0)
        .ok_or(Error::InvalidConfig("duration must be a positive whole number of steps"))?;
    let period_steps = match strategy {
        Strategy::Ttc { period } => Some(
            whole_steps(period, h)
                .filter(|&k| k > 0)
                .ok_or(Error::InvalidConfig("TTC period must be a positive whole number of steps"))?,
        ),
        _ => None,
    };

    let mut path = scenario.path.clone();
    path.duration = scenario.duration;
    // Piecewise paths only fail the derivative bound at isolated instants.
    validate_a1(&path, h)?;
    let reference = Reference::new(&path, h, params.horizon + h)?;

    let bytes = payload_bytes(&strategy, params.degree);
    let update = |x: &ErrorState, t: f64, r: &RefSample, index: usize| -> Result<CoefficientPacket> {
        match strategy {
            Strategy::Etpc if params.degree > 0 => predict_horizon(x, t, &reference, params)
                .and_then(|s| solve_coefficients(&s, params, t))
                .map_err(|e| e.at_event(index)),
            _ => Ok(CoefficientPacket::hold(ideal_control(x, r, params), t)),
        }
    };

    let mut trace = SimTrace {
        strategy,
        step: h,
        duration: scenario.duration,
        robot: Vec::with_capacity(n + 1),
        reference: Vec::with_capacity(n + 1),
        states: Vec::with_capacity(n + 1),
        v: Vec::with_capacity(n + 1),
        inputs: Vec::with_capacity(n + 1),
        input_error: Vec::with_capacity(n + 1),
        sigma: Vec::with_capacity(n + 1),
        lambda: Vec::with_capacity(n + 1),
        event_flags: Vec::with_capacity(n + 1),
        events: Vec::new(),
    };

    let r0 = reference.sample(0.0)?;
    let mut pose = robot_pose_from_error(&r0.pose, &scenario.initial_error);
    let x0 = error_transform(&pose, &r0.pose);
    let mut packet = update(&x0, 0.0, &r0, 0)?;
    let mut state = TriggerState::evaluate(&x0, ControlInput::default(), &r0, params, 0.0);
    state.eps_k_sq = state.v;
    trace.events.push(Event { step: 0, t: 0.0, packet: packet.clone(), payload_bytes: bytes });
    record(&mut trace, pose, r0.pose, x0, packet.eval(0.0), &state, true);

    for i in 0..n {
        let t = i as f64 * h;
        let t_k = packet.t_event();
        pose = plant_step_with(&pose, t, h, |s| packet.eval(s - t_k))?;
        let t1 = (i + 1) as f64 * h;
        let r = reference.sample(t1)?;
        let x = error_transform(&pose, &r.pose);
        if !x.is_finite() {
            return Err(Error::Integration { t: t1 });
        }
        let mut u = packet.eval(t1 - t_k);
        let e = u - ideal_control(&x, &r, params);
        let mut state = TriggerState::evaluate(&x, e, &r, params, state.eps_k_sq);
        let fire = match period_steps {
            Some(k) => (i + 1) % k == 0,
            None => state.fires(params),
        };
        if fire {
            packet = update(&x, t1, &r, trace.events.len())?;
            u = packet.eval(0.0);
            state.error = u - ideal_control(&x, &r, params);
            state.lambda = crate::triggering::lambda_term(&x, &state.error, &r, params);
            state.eps_k_sq = state.v;
            trace.events.push(Event { step: i + 1, t: t1, packet: packet.clone(), payload_bytes: bytes });
        }
        record(&mut trace, pose, r.pose, x, u, &state, fire);
    }
    Ok(trace)
}

fn record(
    trace: &mut SimTrace,
    robot: Pose,
    reference: Pose,
    x: ErrorState,
    u: ControlInput,
    state: &TriggerState,
    event: bool,
) {
    trace.robot.push(robot);
    trace.reference.push(reference);
    trace.states.push(x);
    trace.v.push(state.v);
    trace.inputs.push(u);
    trace.input_error.push(state.error);
    trace.sigma.push(state.sigma);
    trace.lambda.push(state.lambda);
    trace.event_flags.push(event);
}

/// Period of a time-triggered baseline with the same average transmission
/// rate as `trace`, rounded to the grid (at least one step).
pub fn derive_ttc_period(trace: &SimTrace) -> f64 {
    let events = trace.events.len().max(1) as f64;
    let steps = round(trace.duration / events / trace.step).max(1.0);
    steps * trace.step
}
