//! Reference trajectories generated by unicycle kinematics with a constant
//! reference speed and a family of angular-velocity profiles.
//!
//! Constant and piecewise-constant profiles are solved in closed form on each
//! segment. The sinusoidal profile has a closed-form heading but no
//! closed-form position, so positions are integrated once on a half-step grid
//! and cached; queries between grid points integrate the short remainder.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use crate::controller::sinc;
use crate::dynamics::Pose;
use crate::math::{cos, floor, sin};
use crate::{Error, Result};

/// Reference pose plus the reference inputs and their time derivatives.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct RefSample {
    pub pose: Pose,
    pub v_r: f64,
    pub omega_r: f64,
    pub vdot_r: f64,
    pub omegadot_r: f64,
}

/// Angular velocity of the reference as a function of time.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(tag = "kind", rename_all = "snake_case"))]
pub enum OmegaProfile {
    Constant { omega: f64 },
    /// `levels[i]` is active on `[switch_times[i-1], switch_times[i])`;
    /// right-continuous at the switches.
    Piecewise { levels: Vec<f64>, switch_times: Vec<f64> },
    /// `omega(t) = amplitude * sin(2 pi frequency t)`.
    Sinusoidal { amplitude: f64, frequency: f64 },
}

impl OmegaProfile {
    fn level_index(levels_len: usize, switch_times: &[f64], t: f64) -> usize {
        switch_times.partition_point(|&s| s <= t).min(levels_len - 1)
    }

    pub fn omega(&self, t: f64) -> f64 {
        match self {
            OmegaProfile::Constant { omega } => *omega,
            OmegaProfile::Piecewise { levels, switch_times } => {
                levels[Self::level_index(levels.len(), switch_times, t)]
            }
            OmegaProfile::Sinusoidal { amplitude, frequency } => {
                amplitude * sin(2.0 * PI * frequency * t)
            }
        }
    }

    /// Analytic derivative; zero at and between piecewise switches.
    pub fn omega_dot(&self, t: f64) -> f64 {
        match self {
            OmegaProfile::Sinusoidal { amplitude, frequency } => {
                let w = 2.0 * PI * frequency;
                amplitude * w * cos(w * t)
            }
            _ => 0.0,
        }
    }

    fn validate(&self) -> Result<()> {
        match self {
            OmegaProfile::Constant { omega } if !omega.is_finite() => {
                Err(Error::InvalidConfig("omega must be finite"))
            }
            OmegaProfile::Piecewise { levels, switch_times } => {
                if levels.len() != switch_times.len() + 1 {
                    return Err(Error::InvalidConfig("piecewise profile needs one more level than switch times"));
                }
                if levels.iter().chain(switch_times).any(|v| !v.is_finite()) {
                    return Err(Error::InvalidConfig("piecewise profile must be finite"));
                }
                if switch_times.first().is_some_and(|&s| s <= 0.0) {
                    return Err(Error::InvalidConfig("switch times must be positive"));
                }
                if switch_times.windows(2).any(|w| w[1] <= w[0]) {
                    return Err(Error::InvalidConfig("switch times must be strictly increasing"));
                }
                Ok(())
            }
            OmegaProfile::Sinusoidal { amplitude, frequency }
                if !(amplitude.is_finite() && frequency.is_finite()) =>
            {
                Err(Error::InvalidConfig("sinusoid parameters must be finite"))
            }
            _ => Ok(()),
        }
    }
}

/// A reference path: constant speed, an angular-velocity profile, a start
/// pose and the experiment duration `T_e`.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct PathSpec {
    pub name: String,
    pub v_r: f64,
    pub omega: OmegaProfile,
    #[cfg_attr(feature = "serde", serde(default))]
    pub initial: Pose,
    pub duration: f64,
}

/// Reference speed used by every catalog path (15 cm/s).
pub const CATALOG_SPEED: f64 = 0.15;

impl PathSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.v_r.is_finite() && self.initial.is_finite()) {
            return Err(Error::InvalidConfig("path speed and initial pose must be finite"));
        }
        if !(self.duration > 0.0 && self.duration.is_finite()) {
            return Err(Error::InvalidConfig("path duration must be positive"));
        }
        self.omega.validate()
    }

    /// Path 1: a circle of the given radius.
    pub fn circle(radius: f64, duration: f64) -> Self {
        PathSpec {
            name: "path1-circle".into(),
            v_r: CATALOG_SPEED,
            omega: OmegaProfile::Constant { omega: CATALOG_SPEED / radius },
            initial: Pose::default(),
            duration,
        }
    }

    /// Path 2: a rounded rectangle. Straight legs alternate with 5 s quarter
    /// turns, long and short sides alternating.
    pub fn rounded_rectangle(duration: f64) -> Self {
        let turn = (PI / 2.0) / 5.0;
        let pattern = [(10.0, 0.0), (5.0, turn), (6.0, 0.0), (5.0, turn)];
        let (levels, switch_times) = repeat_pattern(&pattern, duration);
        PathSpec {
            name: "path2-rounded-rectangle".into(),
            v_r: CATALOG_SPEED,
            omega: OmegaProfile::Piecewise { levels, switch_times },
            initial: Pose::default(),
            duration,
        }
    }

    /// Path 3: an S-curve with sinusoidal angular velocity.
    pub fn s_curve(duration: f64) -> Self {
        PathSpec {
            name: "path3-s-curve".into(),
            v_r: CATALOG_SPEED,
            omega: OmegaProfile::Sinusoidal { amplitude: 0.2, frequency: 0.05 },
            initial: Pose::default(),
            duration,
        }
    }

    /// Path 4: a zigzag whose straight legs are joined by arcs of alternating
    /// turning direction.
    pub fn zigzag(duration: f64) -> Self {
        let pattern = [(4.0, 0.0), (4.0, 0.4), (4.0, 0.0), (4.0, -0.4)];
        let (levels, switch_times) = repeat_pattern(&pattern, duration);
        PathSpec {
            name: "path4-zigzag".into(),
            v_r: CATALOG_SPEED,
            omega: OmegaProfile::Piecewise { levels, switch_times },
            initial: Pose::default(),
            duration,
        }
    }

    /// The four evaluation paths, in order.
    pub fn catalog(duration: f64) -> Vec<Self> {
        vec![
            Self::circle(1.0, duration),
            Self::rounded_rectangle(duration),
            Self::s_curve(duration),
            Self::zigzag(duration),
        ]
    }

    /// `true` if the angular velocity has jump discontinuities.
    pub fn is_piecewise(&self) -> bool {
        matches!(self.omega, OmegaProfile::Piecewise { .. })
    }
}

/// Repeats `(segment duration, omega)` pairs until the switch times cover
/// `duration` plus a margin for prediction horizons.
fn repeat_pattern(pattern: &[(f64, f64)], duration: f64) -> (Vec<f64>, Vec<f64>) {
    let mut levels = Vec::new();
    let mut switches = Vec::new();
    let mut t = 0.0;
    'outer: loop {
        for &(len, omega) in pattern {
            levels.push(omega);
            t += len;
            if t > duration + 10.0 {
                break 'outer;
            }
            switches.push(t);
        }
    }
    (levels, switches)
}

/// Result of checking the boundedness assumption on the reference inputs.
#[derive(Debug, Clone, PartialEq)]
pub struct A1Bounds {
    /// Supremum of `|v_r|, |omega_r|, |vdot_r|, |omegadot_r|` on the grid.
    pub m: f64,
    /// Infimum of `|v_r|`.
    pub c: f64,
    /// Instants where `omega_r` jumps, so `omegadot_r` is unbounded there.
    pub derivative_exceptions: Vec<f64>,
}

/// Checks the reference inputs on the grid `0, h, 2h, ... <= duration`.
///
/// Jumps of a piecewise profile are reported as derivative exceptions rather
/// than as a violation.
pub fn validate_a1(spec: &PathSpec, h: f64) -> Result<A1Bounds> {
    spec.validate()?;
    if !(h > 0.0) {
        return Err(Error::InvalidConfig("grid step must be positive"));
    }
    let c = spec.v_r.abs();
    if !(c > 0.0) {
        return Err(Error::Assumption { c });
    }
    let n = floor(spec.duration / h + 1e-9) as usize;
    let mut m = c;
    for k in 0..=n {
        let t = k as f64 * h;
        m = m.max(spec.omega.omega(t).abs()).max(spec.omega.omega_dot(t).abs());
    }
    let derivative_exceptions = match &spec.omega {
        OmegaProfile::Piecewise { switch_times, .. } => {
            switch_times.iter().copied().filter(|&s| s <= spec.duration).collect()
        }
        _ => Vec::new(),
    };
    Ok(A1Bounds { m, c, derivative_exceptions })
}

#[derive(Debug, Clone, Copy)]
struct Segment {
    start: f64,
    omega: f64,
    pose: Pose,
}

#[derive(Debug, Clone)]
enum Track {
    Segments(Vec<Segment>),
    Cached { step: f64, poses: Vec<Pose> },
}

/// Simpson panels per cache interval when integrating sinusoidal positions.
const PANELS: usize = 4;

/// A reference trajectory valid on `[0, end]`. Immutable after construction.
#[derive(Debug, Clone)]
pub struct Reference {
    spec: PathSpec,
    end: f64,
    track: Track,
}

impl Reference {
    /// Builds the trajectory for `spec` on `[0, spec.duration + padding]`.
    /// `h` is the simulation step; sinusoidal paths are cached every `h/2`
    /// so RK4 stage times hit the cache.
    pub fn new(spec: &PathSpec, h: f64, padding: f64) -> Result<Self> {
        spec.validate()?;
        if !(h > 0.0 && padding >= 0.0) {
            return Err(Error::InvalidConfig("reference grid step must be positive"));
        }
        let end = spec.duration + padding;
        let track = match &spec.omega {
            OmegaProfile::Constant { omega } => {
                Track::Segments(vec![Segment { start: 0.0, omega: *omega, pose: spec.initial }])
            }
            OmegaProfile::Piecewise { levels, switch_times } => {
                let mut segs = vec![Segment { start: 0.0, omega: levels[0], pose: spec.initial }];
                for (&s, &omega) in switch_times.iter().zip(&levels[1..]) {
                    let prev = *segs.last().unwrap();
                    let pose = arc(&prev.pose, spec.v_r, prev.omega, s - prev.start);
                    segs.push(Segment { start: s, omega, pose });
                }
                Track::Segments(segs)
            }
            OmegaProfile::Sinusoidal { .. } => {
                let step = 0.5 * h;
                let n = floor(end / step) as usize + 2;
                let mut poses = Vec::with_capacity(n + 1);
                poses.push(spec.initial);
                for i in 0..n {
                    let t0 = i as f64 * step;
                    let next = integrate_sinusoid(spec, &poses[i], t0, t0 + step);
                    poses.push(next);
                }
                Track::Cached { step, poses }
            }
        };
        Ok(Self { spec: spec.clone(), end, track })
    }

    pub fn spec(&self) -> &PathSpec {
        &self.spec
    }

    pub fn end(&self) -> f64 {
        self.end
    }

    /// Reference sample at time `t`.
    pub fn sample(&self, t: f64) -> Result<RefSample> {
        let tol = 1e-9;
        if !(t >= -tol && t <= self.end + tol) {
            return Err(Error::Domain { t, start: 0.0, end: self.end });
        }
        let t = t.max(0.0);
        let pose = match &self.track {
            Track::Segments(segs) => {
                let i = segs.partition_point(|s| s.start <= t).saturating_sub(1);
                let seg = &segs[i];
                arc(&seg.pose, self.spec.v_r, seg.omega, t - seg.start)
            }
            Track::Cached { step, poses } => {
                let i = (floor(t / step) as usize).min(poses.len() - 1);
                let t0 = i as f64 * step;
                if t - t0 <= 1e-12 {
                    poses[i]
                } else {
                    integrate_sinusoid(&self.spec, &poses[i], t0, t)
                }
            }
        };
        Ok(RefSample {
            pose,
            v_r: self.spec.v_r,
            omega_r: self.spec.omega.omega(t),
            vdot_r: 0.0,
            omegadot_r: self.spec.omega.omega_dot(t),
        })
    }
}

/// Exact unicycle motion with constant `(v, omega)` for `dt` seconds.
fn arc(start: &Pose, v: f64, omega: f64, dt: f64) -> Pose {
    let dtheta = omega * dt;
    let mid = start.theta + 0.5 * dtheta;
    let chord = v * dt * sinc(0.5 * dtheta);
    Pose::new(start.x + chord * cos(mid), start.y + chord * sin(mid), start.theta + dtheta)
}

fn sinusoid_heading(spec: &PathSpec, t: f64) -> f64 {
    match spec.omega {
        OmegaProfile::Sinusoidal { amplitude, frequency } => {
            let w = 2.0 * PI * frequency;
            if w == 0.0 {
                spec.initial.theta
            } else {
                spec.initial.theta + amplitude / w * (1.0 - cos(w * t))
            }
        }
        _ => unreachable!("heading requested for non-sinusoidal path"),
    }
}

/// Composite Simpson on the exact heading from `(t0, start)` to `t1`.
fn integrate_sinusoid(spec: &PathSpec, start: &Pose, t0: f64, t1: f64) -> Pose {
    let n = 2 * PANELS;
    let dt = (t1 - t0) / n as f64;
    let (mut sx, mut sy) = (0.0, 0.0);
    for k in 0..=n {
        let weight = if k == 0 || k == n {
            1.0
        } else if k % 2 == 1 {
            4.0
        } else {
            2.0
        };
        let th = sinusoid_heading(spec, t0 + k as f64 * dt);
        sx += weight * cos(th);
        sy += weight * sin(th);
    }
    let scale = spec.v_r * dt / 3.0;
    Pose::new(start.x + scale * sx, start.y + scale * sy, sinusoid_heading(spec, t1))
}
