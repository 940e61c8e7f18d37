//! Polynomial fit of the predicted ideal control.
//!
//! At an event the controller simulates the hat system over the horizon
//! `[0, T]` under the ideal law, samples the ideal inputs `u_bar(tau)` and,
//! per channel, picks the degree-`p` polynomial with `f(0) = u_bar(0)` that
//! minimises `int_0^T |f - u_bar|^2 + delta |f|^2 dtau`. With the constant
//! term fixed the problem is an unconstrained quadratic in the remaining `p`
//! coefficients whose Hessian is a scaled Gram matrix of the monomials.
//!
//! The normal equations are assembled in the scaled time `s = tau / T`, where
//! the Gram matrix is Hilbert-like (`1 / (j + l + 1)` up to quadrature error)
//! and independent of `T`, solved by Cholesky, and mapped back with
//! `a_j = b_j / T^j`.

use alloc::vec;
use alloc::vec::Vec;

use crate::controller::{ideal_control, ControllerParams};
use crate::dynamics::{error_field, rk4_step, ControlInput, ErrorState};
use crate::math::powi;
use crate::reference::Reference;
use crate::{Error, Result};

/// Polynomial coefficients sent to the actuator at one event.
///
/// Row `j` holds the `tau^j` coefficients of `(v, omega)`.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct CoefficientPacket {
    coeffs: Vec<[f64; 2]>,
    t_event: f64,
}

impl CoefficientPacket {
    pub fn new(coeffs: Vec<[f64; 2]>, t_event: f64) -> Self {
        assert!(!coeffs.is_empty(), "a packet needs at least the constant term");
        Self { coeffs, t_event }
    }

    /// A degree-0 packet: zero-order hold of `u`.
    pub fn hold(u: ControlInput, t_event: f64) -> Self {
        Self::new(vec![[u.v, u.omega]], t_event)
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn coeffs(&self) -> &[[f64; 2]] {
        &self.coeffs
    }

    pub fn t_event(&self) -> f64 {
        self.t_event
    }

    /// Coefficients of one channel, lowest order first.
    pub fn column(&self, channel: usize) -> Vec<f64> {
        self.coeffs.iter().map(|row| row[channel]).collect()
    }

    pub fn is_finite(&self) -> bool {
        self.coeffs.iter().flatten().all(|c| c.is_finite())
    }

    /// Input at `tau` seconds after the event; valid past the horizon.
    pub fn eval(&self, tau: f64) -> ControlInput {
        let mut acc = [0.0; 2];
        for row in self.coeffs.iter().rev() {
            acc[0] = acc[0] * tau + row[0];
            acc[1] = acc[1] * tau + row[1];
        }
        ControlInput::new(acc[0], acc[1])
    }
}

/// Free-function form of [`CoefficientPacket::eval`].
pub fn eval_poly(packet: &CoefficientPacket, tau: f64) -> ControlInput {
    packet.eval(tau)
}

/// Ideal inputs sampled on the uniform horizon grid `tau_j = j * step`.
#[derive(Debug, Clone, PartialEq)]
pub struct HorizonSamples {
    step: f64,
    values: Vec<[f64; 2]>,
}

impl HorizonSamples {
    pub fn new(step: f64, values: Vec<[f64; 2]>) -> Result<Self> {
        if values.len() < 2 || !(step > 0.0) {
            return Err(Error::InvalidConfig("horizon needs at least two samples"));
        }
        if !values.iter().flatten().all(|v| v.is_finite()) {
            return Err(Error::InvalidConfig("horizon samples must be finite"));
        }
        Ok(Self { step, values })
    }

    /// Samples `signal` on `[0, horizon]` with the given step.
    pub fn from_fn(step: f64, intervals: usize, mut signal: impl FnMut(f64) -> [f64; 2]) -> Result<Self> {
        Self::new(step, (0..=intervals).map(|j| signal(j as f64 * step)).collect())
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    pub fn values(&self) -> &[[f64; 2]] {
        &self.values
    }

    pub fn tau(&self, j: usize) -> f64 {
        j as f64 * self.step
    }

    /// Horizon length `T`.
    pub fn horizon(&self) -> f64 {
        self.tau(self.values.len() - 1)
    }

    /// `u_bar(0)` per channel.
    pub fn mu(&self) -> [f64; 2] {
        self.values[0]
    }

    /// `<u_bar_channel, tau^power>` on `[0, T]` by the horizon quadrature
    /// (composite Boole, see [`quadrature_weights`]).
    pub fn inner_monomial(&self, channel: usize, power: usize) -> f64 {
        let weights = quadrature_weights(self.values.len() - 1, self.step);
        self.values
            .iter()
            .zip(&weights)
            .enumerate()
            .map(|(j, (v, w))| w * v[channel] * powi(self.tau(j), power))
            .sum()
    }
}

/// Closed Newton-Cotes weights for `n` intervals of width `h`: composite
/// Boole panels (4 intervals), closed by at most one Simpson and one 3/8
/// panel when `n` is not a multiple of 4. `n = 1` falls back to the
/// trapezoid.
pub(crate) fn quadrature_weights(n: usize, h: f64) -> Vec<f64> {
    let mut w = vec![0.0; n + 1];
    let mut panel = |start: usize, rule: &[f64], scale: f64| {
        for (k, c) in rule.iter().enumerate() {
            w[start + k] += scale * h * c;
        }
    };
    let tail = match (n, n % 4) {
        (1..=3, _) => n,
        (_, 0) => 0,
        (_, 1) => 5,
        (_, r) => r,
    };
    let boole_end = n - tail;
    for start in (0..boole_end).step_by(4) {
        panel(start, &[7.0, 32.0, 12.0, 32.0, 7.0], 2.0 / 45.0);
    }
    let mut start = boole_end;
    if tail == 1 {
        panel(start, &[1.0, 1.0], 0.5);
    }
    if tail == 2 || tail == 5 {
        panel(start, &[1.0, 4.0, 1.0], 1.0 / 3.0);
        start += 2;
    }
    if tail == 3 || tail == 5 {
        panel(start, &[1.0, 3.0, 3.0, 1.0], 3.0 / 8.0);
    }
    w
}

/// Simulates the hat system from `x_k` at `t_k` for the full horizon and
/// samples the ideal control along it.
pub fn predict_horizon(
    x_k: &ErrorState,
    t_k: f64,
    reference: &Reference,
    params: &ControllerParams,
) -> Result<HorizonSamples> {
    predict_trajectory(x_k, t_k, reference, params).map(|(_, samples)| samples)
}

/// Like [`predict_horizon`] but also returns the predicted states.
pub fn predict_trajectory(
    x_k: &ErrorState,
    t_k: f64,
    reference: &Reference,
    params: &ControllerParams,
) -> Result<(Vec<ErrorState>, HorizonSamples)> {
    let h = params.step;
    let n = params.horizon_steps();
    if n == 0 {
        return Err(Error::InvalidConfig("horizon must be a whole number of steps"));
    }
    // Reference faults inside the RK4 closure are stashed and re-raised.
    let mut domain_fault = None;
    let mut states = Vec::with_capacity(n + 1);
    let mut values = Vec::with_capacity(n + 1);
    let mut x = *x_k;
    for j in 0..=n {
        let t = t_k + j as f64 * h;
        let r = reference.sample(t)?;
        let u = ideal_control(&x, &r, params);
        if !(x.is_finite() && u.is_finite()) {
            return Err(Error::Prediction { t });
        }
        states.push(x);
        values.push([u.v, u.omega]);
        if j == n {
            break;
        }
        let next = rk4_step(x.to_array(), t, h, |tt, s| {
            let r = match reference.sample(tt) {
                Ok(r) => r,
                Err(e) => {
                    domain_fault.get_or_insert(e);
                    return [f64::NAN; 3];
                }
            };
            let xs = ErrorState::from_array(*s);
            error_field(&xs, &r, &ideal_control(&xs, &r, params)).to_array()
        });
        if let Some(e) = domain_fault.take() {
            return Err(e);
        }
        x = match next {
            Ok(s) => ErrorState::from_array(s),
            Err(Error::Integration { t }) => return Err(Error::Prediction { t }),
            Err(e) => return Err(e),
        };
    }
    Ok((states, HorizonSamples { step: h, values }))
}

/// Hessian of the reduced cost in the raw monomial basis:
/// `H[j-1][l-1] = 2 (1 + delta) T^(j+l+1) / (j+l+1)` for `j, l = 1..=p`.
/// Empty for `p = 0`.
pub fn hessian(degree: usize, horizon: f64, delta: f64) -> Vec<Vec<f64>> {
    (1..=degree)
        .map(|j| {
            (1..=degree)
                .map(|l| 2.0 * (1.0 + delta) * powi(horizon, j + l + 1) / (j + l + 1) as f64)
                .collect()
        })
        .collect()
}

/// Right-hand side `D` of the normal equations in the raw basis:
/// `D_j = 2 <u_bar, tau^j> - 2 (1 + delta) mu T^(j+1) / (j+1)`.
pub fn rhs_vector(samples: &HorizonSamples, channel: usize, params: &ControllerParams) -> Vec<f64> {
    let t = samples.horizon();
    let delta = params.delta[channel];
    let mu = samples.mu()[channel];
    (1..=params.degree)
        .map(|j| {
            2.0 * samples.inner_monomial(channel, j)
                - 2.0 * (1.0 + delta) * mu * powi(t, j + 1) / (j + 1) as f64
        })
        .collect()
}

/// Solves the constrained least-squares fit for both channels.
///
/// The Gram matrix and the right-hand side are both built with the horizon
/// quadrature, so the result is the exact minimiser of the discretised cost:
/// polynomial inputs of degree `<= p` are reproduced to rounding, and the
/// closed-form system `hessian * a = rhs_vector` holds to quadrature error.
pub fn solve_coefficients(
    samples: &HorizonSamples,
    params: &ControllerParams,
    t_event: f64,
) -> Result<CoefficientPacket> {
    let p = params.degree;
    let t = samples.horizon();
    let mu = samples.mu();
    let mut coeffs = vec![[0.0; 2]; p + 1];
    coeffs[0] = mu;
    if p == 0 {
        return Ok(CoefficientPacket::new(coeffs, t_event));
    }

    // Moments in scaled time s = tau / T: gram[k] = sum_m w_m s_m^k for
    // k = 2..=2p, proj[c][j] = sum_m w_m u_m s_m^j and ones[j] = sum_m w_m s_m^j.
    let weights = quadrature_weights(samples.values.len() - 1, samples.step / t);
    let mut moments = vec![0.0; 2 * p + 1];
    let mut proj = [vec![0.0; p + 1], vec![0.0; p + 1]];
    for (m, (w, u)) in weights.iter().zip(&samples.values).enumerate() {
        let s = samples.tau(m) / t;
        let mut sk = 1.0;
        for k in 0..=2 * p {
            moments[k] += w * sk;
            if k <= p {
                proj[0][k] += w * u[0] * sk;
                proj[1][k] += w * u[1] * sk;
            }
            sk *= s;
        }
    }

    for channel in 0..2 {
        let scale = 1.0 + params.delta[channel];
        let mut gram = vec![0.0; p * p];
        for j in 1..=p {
            for l in 1..=p {
                gram[(j - 1) * p + (l - 1)] = scale * moments[j + l];
            }
        }
        let mut rhs: Vec<f64> =
            (1..=p).map(|j| proj[channel][j] - scale * mu[channel] * moments[j]).collect();
        cholesky_solve(&mut gram, &mut rhs, p).ok_or(Error::Solver { degree: p, horizon: t })?;
        for j in 1..=p {
            coeffs[j][channel] = rhs[j - 1] / powi(t, j);
        }
    }
    let packet = CoefficientPacket::new(coeffs, t_event);
    if packet.is_finite() {
        Ok(packet)
    } else {
        Err(Error::Solver { degree: p, horizon: t })
    }
}

/// In-place Cholesky solve of the `n x n` row-major system `a x = b`.
/// Returns `None` if `a` is not numerically positive definite.
fn cholesky_solve(a: &mut [f64], b: &mut [f64], n: usize) -> Option<()> {
    for j in 0..n {
        let mut d = a[j * n + j];
        for k in 0..j {
            d -= a[j * n + k] * a[j * n + k];
        }
        if !(d > 0.0) {
            return None;
        }
        let d = crate::math::sqrt(d);
        a[j * n + j] = d;
        for i in j + 1..n {
            let mut s = a[i * n + j];
            for k in 0..j {
                s -= a[i * n + k] * a[j * n + k];
            }
            a[i * n + j] = s / d;
        }
    }
    for i in 0..n {
        let mut s = b[i];
        for k in 0..i {
            s -= a[i * n + k] * b[k];
        }
        b[i] = s / a[i * n + i];
    }
    for i in (0..n).rev() {
        let mut s = b[i];
        for k in i + 1..n {
            s -= a[k * n + i] * b[k];
        }
        b[i] = s / a[i * n + i];
    }
    Some(())
}
