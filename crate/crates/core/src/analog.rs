//! Analog resonance: a driven damped oscillator as the learner.
//!
//! The plant obeys `m ẍ = -k x - γ ẋ + f(t)`. Its mechanical energy
//! `E = ½ m v² + ½ k x²` changes at the rate `dE/dt = f v - γ v²`: the drive pumps power in,
//! friction dissipates it. Net intake vanishes when `v = f / γ` and peaks at `v = f / (2γ)`.

use std::f64::consts::PI;
use std::io::Write;

use crate::csvio;
use crate::error::invalid;
use crate::{Error, Location, Result};

/// Steps per period used when no explicit time step is given.
pub const STEPS_PER_PERIOD: f64 = 1000.0;
/// Transient allowance before steady-state statistics, in damping times `m / γ`.
pub const SETTLE_DAMPING_TIMES: f64 = 20.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OscillatorParams {
    pub mass: f64,
    pub stiffness: f64,
    pub friction: f64,
}

impl OscillatorParams {
    pub fn new(mass: f64, stiffness: f64, friction: f64) -> Result<Self> {
        let p = OscillatorParams {
            mass,
            stiffness,
            friction,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.mass > 0.0 && self.mass.is_finite()) {
            return Err(invalid("mass must be positive"));
        }
        if !(self.stiffness >= 0.0 && self.stiffness.is_finite()) {
            return Err(invalid("stiffness must be nonnegative"));
        }
        if !(self.friction >= 0.0 && self.friction.is_finite()) {
            return Err(invalid("friction must be nonnegative"));
        }
        Ok(())
    }

    /// `sqrt(k / m)`, or `None` without a spring.
    pub fn natural_frequency(&self) -> Option<f64> {
        (self.stiffness > 0.0).then(|| (self.stiffness / self.mass).sqrt())
    }

    pub fn mechanical_energy(&self, x: f64, v: f64) -> f64 {
        0.5 * self.mass * v * v + 0.5 * self.stiffness * x * x
    }
}

/// External force `f(t)` in newtons.
#[derive(Debug, Clone, PartialEq)]
pub enum ForceSignal {
    /// `amplitude · cos(omega · t + phase)`
    Sinusoid { amplitude: f64, omega: f64, phase: f64 },
    /// Samples at `t = i · dt`, linearly interpolated, last value held.
    Sampled { values: Vec<f64>, dt: f64 },
    Constant(f64),
}

impl ForceSignal {
    pub fn sinusoid(amplitude: f64, omega: f64) -> Self {
        ForceSignal::Sinusoid {
            amplitude,
            omega,
            phase: 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            ForceSignal::Sinusoid {
                amplitude,
                omega,
                phase,
            } => {
                if ![amplitude, omega, phase].iter().all(|v| v.is_finite()) {
                    return Err(invalid("sinusoid parameters must be finite"));
                }
            }
            ForceSignal::Sampled { values, dt } => {
                if !(*dt > 0.0 && dt.is_finite()) {
                    return Err(invalid("sample spacing must be positive"));
                }
                if values.is_empty() || values.iter().any(|v| !v.is_finite()) {
                    return Err(invalid("samples must be non-empty and finite"));
                }
            }
            ForceSignal::Constant(f) => {
                if !f.is_finite() {
                    return Err(invalid("constant force must be finite"));
                }
            }
        }
        Ok(())
    }

    pub fn at(&self, t: f64) -> f64 {
        match self {
            ForceSignal::Sinusoid {
                amplitude,
                omega,
                phase,
            } => amplitude * (omega * t + phase).cos(),
            ForceSignal::Sampled { values, dt } => {
                let pos = (t / dt).max(0.0);
                let i = pos.floor() as usize;
                if i + 1 >= values.len() {
                    return *values.last().expect("validated non-empty");
                }
                let frac = pos - i as f64;
                values[i] * (1.0 - frac) + values[i + 1] * frac
            }
            ForceSignal::Constant(f) => *f,
        }
    }

    pub fn omega(&self) -> Option<f64> {
        match self {
            ForceSignal::Sinusoid { omega, .. } if *omega > 0.0 => Some(*omega),
            _ => None,
        }
    }
}

/// Sampled trajectory with its power flows.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PowerTrace {
    pub t: Vec<f64>,
    pub x: Vec<f64>,
    pub v: Vec<f64>,
    pub f: Vec<f64>,
    /// `f · v`
    pub p_in: Vec<f64>,
    /// `γ · v²`
    pub p_out: Vec<f64>,
    /// running integral of `p_in - p_out`, integrated alongside the state
    pub e_net: Vec<f64>,
}

impl PowerTrace {
    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }

    fn push(&mut self, t: f64, x: f64, v: f64, f: f64, friction: f64, e: f64) {
        self.t.push(t);
        self.x.push(x);
        self.v.push(v);
        self.f.push(f);
        self.p_in.push(f * v);
        self.p_out.push(friction * v * v);
        self.e_net.push(e);
    }

    /// Time average of `p_in` over samples `from..`, trapezoidal rule.
    pub fn mean_input_power(&self, from: usize) -> f64 {
        trapezoid_mean(&self.t[from..], &self.p_in[from..])
    }

    /// Writes `t,x,v,f,p_in,p_out,e_net`.
    pub fn write_csv<W: Write>(&self, w: &mut W) -> std::io::Result<()> {
        csvio::write_row(w, &["t", "x", "v", "f", "p_in", "p_out", "e_net"])?;
        for i in 0..self.len() {
            let row = [
                self.t[i], self.x[i], self.v[i], self.f[i], self.p_in[i], self.p_out[i], self.e_net[i],
            ]
            .map(csvio::fmt_f64);
            csvio::write_row(w, &row)?;
        }
        Ok(())
    }
}

fn trapezoid_mean(t: &[f64], y: &[f64]) -> f64 {
    if t.len() < 2 {
        return y.first().copied().unwrap_or(0.0);
    }
    let area: f64 = t
        .windows(2)
        .zip(y.windows(2))
        .map(|(tt, yy)| 0.5 * (yy[0] + yy[1]) * (tt[1] - tt[0]))
        .sum();
    area / (t[t.len() - 1] - t[0])
}

/// `dE/dt = v (f - γ v)`
///
/// The force balance `f - γ v` is formed exactly with a fused multiply-add; a balance below
/// the rounding resolution of `f` counts as zero, so `v = f / γ` yields exactly no net power.
pub fn net_power(force: f64, velocity: f64, friction: f64) -> f64 {
    let balance = (-friction).mul_add(velocity, force);
    if balance.abs() <= f64::EPSILON * force.abs() {
        return 0.0;
    }
    velocity * balance
}

/// Default step: a thousandth of the shortest of the natural period, the drive period and
/// the damping time `m / γ`.
pub fn default_dt(params: &OscillatorParams, force: &ForceSignal) -> Option<f64> {
    let damping_time = (params.friction > 0.0).then(|| params.mass / params.friction);
    [params.natural_frequency(), force.omega()]
        .into_iter()
        .flatten()
        .map(|w| 2.0 * PI / w)
        .chain(damping_time)
        .reduce(f64::min)
        .map(|p| p / STEPS_PER_PERIOD)
}

/// Fixed-step RK4 integration from `(x0, v0)` at `t = 0` for `round(duration / dt)` steps.
pub fn simulate(
    params: &OscillatorParams,
    force: &ForceSignal,
    x0: f64,
    v0: f64,
    dt: f64,
    duration: f64,
) -> Result<PowerTrace> {
    params.validate()?;
    force.validate()?;
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(invalid("dt must be positive"));
    }
    if !(duration >= dt && duration.is_finite()) {
        return Err(invalid("duration must be at least dt"));
    }
    if !(x0.is_finite() && v0.is_finite()) {
        return Err(invalid("initial state must be finite"));
    }
    let steps = (duration / dt).round() as usize;
    let OscillatorParams {
        mass: m,
        stiffness: k,
        friction: g,
    } = *params;

    // state (x, v, e): ẋ = v, v̇ = (f - k x - γ v)/m, ė = f v - γ v²
    let deriv = |t: f64, s: [f64; 3]| -> [f64; 3] {
        let f = force.at(t);
        [s[1], (f - k * s[0] - g * s[1]) / m, net_power(f, s[1], g)]
    };

    let mut trace = PowerTrace::default();
    let mut s = [x0, v0, 0.0];
    trace.push(0.0, s[0], s[1], force.at(0.0), g, s[2]);
    for i in 1..=steps {
        let t = (i - 1) as f64 * dt;
        let k1 = deriv(t, s);
        let k2 = deriv(t + 0.5 * dt, axpy(s, 0.5 * dt, k1));
        let k3 = deriv(t + 0.5 * dt, axpy(s, 0.5 * dt, k2));
        let k4 = deriv(t + dt, axpy(s, dt, k3));
        for j in 0..3 {
            s[j] += dt / 6.0 * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j]);
        }
        if s.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite(Location::Step(i)));
        }
        let t_now = i as f64 * dt;
        trace.push(t_now, s[0], s[1], force.at(t_now), g, s[2]);
    }
    Ok(trace)
}

fn axpy(s: [f64; 3], h: f64, k: [f64; 3]) -> [f64; 3] {
    [s[0] + h * k[0], s[1] + h * k[1], s[2] + h * k[2]]
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SteadyState {
    /// `V = F₀ ω / sqrt((k - m ω²)² + (γ ω)²)`
    pub velocity_amplitude: f64,
    /// Phase of velocity relative to force, zero at `ω = ω₀`.
    pub phase: f64,
    /// `½ γ V²`
    pub mean_power: f64,
}

/// Closed-form periodic response to `F₀ cos(ω t)`.
pub fn analytic_steady_state(params: &OscillatorParams, amplitude: f64, omega: f64) -> Result<SteadyState> {
    params.validate()?;
    if !(omega >= 0.0 && omega.is_finite()) {
        return Err(invalid("omega must be nonnegative"));
    }
    let OscillatorParams {
        mass: m,
        stiffness: k,
        friction: g,
    } = *params;
    let reactive = k - m * omega * omega;
    let denom = (reactive * reactive + (g * omega).powi(2)).sqrt();
    if denom == 0.0 {
        if omega == 0.0 && k == 0.0 {
            return Err(invalid("free mass under a static force has no steady state"));
        }
        return Err(invalid(format!(
            "undamped oscillator driven exactly at resonance (omega = {omega}) has unbounded response"
        )));
    }
    let v_amp = amplitude.abs() * omega / denom;
    // velocity phasor ∝ F₀ / (γ + i (m ω - k / ω))
    let phase = if omega == 0.0 {
        PI / 2.0
    } else {
        -(m * omega - k / omega).atan2(g)
    };
    Ok(SteadyState {
        velocity_amplitude: v_amp,
        phase,
        mean_power: 0.5 * g * v_amp * v_amp,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Residual {
    pub value: f64,
    /// False when the force vanished and the value is the raw `RMS(v) · γ`.
    pub normalized: bool,
}

/// RMS of `v - f/γ` over the trailing half of the trace, relative to RMS of `f/γ`.
pub fn resonance_residual(trace: &PowerTrace, force: &ForceSignal, friction: f64) -> Result<Residual> {
    if !(friction > 0.0 && friction.is_finite()) {
        return Err(invalid("resonance residual needs positive friction"));
    }
    if trace.is_empty() {
        return Err(invalid("empty trace"));
    }
    let from = trace.len() / 2;
    let n = (trace.len() - from) as f64;
    let mut diff = 0.0;
    let mut reference = 0.0;
    let mut speed = 0.0;
    for i in from..trace.len() {
        let target = force.at(trace.t[i]) / friction;
        diff += (trace.v[i] - target).powi(2);
        reference += target * target;
        speed += trace.v[i] * trace.v[i];
    }
    if reference == 0.0 {
        return Ok(Residual {
            value: (speed / n).sqrt() * friction,
            normalized: false,
        });
    }
    Ok(Residual {
        value: (diff / reference).sqrt(),
        normalized: true,
    })
}

/// Time-domain measurement of the periodic regime under a sinusoidal drive.
#[derive(Debug, Clone, PartialEq)]
pub struct SteadyMeasurement {
    pub omega: f64,
    /// Mean `p_in` over the measurement window.
    pub mean_power: f64,
    pub residual: Residual,
    pub dt: f64,
    /// First sample of the measurement window.
    pub window_start: usize,
    pub trace: PowerTrace,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeasureOptions {
    pub settle_damping_times: f64,
    /// Overrides the default step; rounded down to a whole number of steps per drive period.
    pub dt: Option<f64>,
}

impl Default for MeasureOptions {
    fn default() -> Self {
        MeasureOptions {
            settle_damping_times: SETTLE_DAMPING_TIMES,
            dt: None,
        }
    }
}

/// Simulates from rest under `F₀ cos(ω t)`, lets transients decay for the settle time, then
/// averages over a window of whole drive periods at least as long as the settle time (so
/// the window is the trailing half or more of the run).
pub fn measure_steady_state(
    params: &OscillatorParams,
    amplitude: f64,
    omega: f64,
    opts: &MeasureOptions,
) -> Result<SteadyMeasurement> {
    params.validate()?;
    if !(params.friction > 0.0) {
        return Err(invalid("steady-state measurement needs positive friction"));
    }
    if !(omega > 0.0 && omega.is_finite()) {
        return Err(invalid("drive frequency must be positive"));
    }
    if !(opts.settle_damping_times >= 0.0) {
        return Err(invalid("settle time must be nonnegative"));
    }
    let force = ForceSignal::sinusoid(amplitude, omega);
    let period = 2.0 * PI / omega;
    let dt_target = match opts.dt {
        Some(dt) if dt > 0.0 && dt.is_finite() => dt,
        Some(_) => return Err(invalid("dt must be positive")),
        None => default_dt(params, &force).expect("drive frequency is positive"),
    };
    let steps_per_period = (period / dt_target).ceil().max(1.0) as usize;
    let dt = period / steps_per_period as f64;
    let settle = opts.settle_damping_times * params.mass / params.friction;
    let settle_steps = (settle / dt).ceil() as usize;
    let window_periods = (settle / period).ceil().max(1.0) as usize;
    let window_steps = window_periods * steps_per_period;
    let total_steps = settle_steps + window_steps;

    let trace = simulate(params, &force, 0.0, 0.0, dt, total_steps as f64 * dt)?;
    let window_start = trace.len() - 1 - window_steps;
    let mean_power = trace.mean_input_power(window_start);
    let residual = resonance_residual(&trace, &force, params.friction)?;
    Ok(SteadyMeasurement {
        omega,
        mean_power,
        residual,
        dt,
        window_start,
        trace,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepPoint {
    pub omega: f64,
    pub mean_power_sim: f64,
    pub mean_power_analytic: f64,
    pub residual: f64,
}

pub fn sweep_point(params: &OscillatorParams, amplitude: f64, omega: f64, opts: &MeasureOptions) -> Result<SweepPoint> {
    let m = measure_steady_state(params, amplitude, omega, opts)?;
    let a = analytic_steady_state(params, amplitude, omega)?;
    Ok(SweepPoint {
        omega,
        mean_power_sim: m.mean_power,
        mean_power_analytic: a.mean_power,
        residual: m.residual.value,
    })
}

/// `n` evenly spaced frequencies from `lo` to `hi` inclusive.
pub fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![lo],
        _ => (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect(),
    }
}

/// Writes `omega,mean_power_sim,mean_power_analytic,residual`.
pub fn write_sweep_csv<W: Write>(w: &mut W, points: &[SweepPoint]) -> std::io::Result<()> {
    csvio::write_row(w, &["omega", "mean_power_sim", "mean_power_analytic", "residual"])?;
    for p in points {
        let row = [p.omega, p.mean_power_sim, p.mean_power_analytic, p.residual].map(csvio::fmt_f64);
        csvio::write_row(w, &row)?;
    }
    Ok(())
}
