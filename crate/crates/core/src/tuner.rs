//! Noise-driven tuner: a seeded random walk over plant parameters whose step scale is braked
//! by the smoothed extracted power, `sigma_eff = sigma0 / (1 + beta · max(p_bar, 0))`.

use std::f64::consts::PI;
use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::analog::{self, MeasureOptions, OscillatorParams};
use crate::csvio;
use crate::error::{check_dim, invalid};
use crate::Result;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TunerConfig {
    pub sigma0: f64,
    /// Braking strength, per watt.
    pub beta: f64,
    /// EMA horizon in evaluations; the smoothing factor is `2 / (window + 1)`.
    pub window: usize,
    pub budget: usize,
    pub seed: u64,
}

impl TunerConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.sigma0 > 0.0 && self.sigma0.is_finite()) {
            return Err(invalid("sigma0 must be positive"));
        }
        if !(self.beta >= 0.0 && self.beta.is_finite()) {
            return Err(invalid("beta must be nonnegative"));
        }
        if self.window == 0 {
            return Err(invalid("window must be at least 1"));
        }
        Ok(())
    }

    pub fn smoothing(&self) -> f64 {
        2.0 / (self.window as f64 + 1.0)
    }

    pub fn braked_sigma(&self, p_bar: f64) -> f64 {
        self.sigma0 / (1.0 + self.beta * p_bar.max(0.0))
    }
}

/// Per-coordinate box; infinite ends are allowed.
#[derive(Debug, Clone, PartialEq)]
pub struct Bounds {
    lower: Vec<f64>,
    upper: Vec<f64>,
}

impl Bounds {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        check_dim("bounds", lower.len(), upper.len())?;
        for (lo, hi) in lower.iter().zip(&upper) {
            if lo.is_nan() || hi.is_nan() || lo >= hi {
                return Err(invalid(format!("empty bound interval [{lo}, {hi}]")));
            }
        }
        Ok(Bounds { lower, upper })
    }

    pub fn unbounded(dim: usize) -> Self {
        Bounds {
            lower: vec![f64::NEG_INFINITY; dim],
            upper: vec![f64::INFINITY; dim],
        }
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    pub fn contains(&self, theta: &[f64]) -> bool {
        theta.len() == self.dim()
            && theta
                .iter()
                .zip(self.lower.iter().zip(&self.upper))
                .all(|(x, (lo, hi))| x >= lo && x <= hi)
    }

    /// Mirror-reflects each coordinate back into its interval.
    pub fn reflect(&self, theta: &mut [f64]) {
        for (x, (&lo, &hi)) in theta.iter_mut().zip(self.lower.iter().zip(&self.upper)) {
            *x = reflect(*x, lo, hi);
        }
    }
}

fn reflect(mut x: f64, lo: f64, hi: f64) -> f64 {
    let w = hi - lo;
    if w.is_finite() && (x < lo - 2.0 * w || x > hi + 2.0 * w) {
        // fold far overshoots onto one period first
        let y = (x - lo).rem_euclid(2.0 * w);
        x = lo + if y > w { 2.0 * w - y } else { y };
    }
    while x < lo || x > hi {
        x = if x < lo { 2.0 * lo - x } else { 2.0 * hi - x };
    }
    x
}

/// Uniform step in `[-sigma, sigma]` per coordinate: `sigma · (2u - 1)` with `u = rng.random::<f64>()`.
pub fn uniform_step(rng: &mut ChaCha8Rng, sigma: f64, dim: usize) -> Vec<f64> {
    (0..dim).map(|_| sigma * (2.0 * rng.random::<f64>() - 1.0)).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct TunerState {
    pub theta: Vec<f64>,
    pub sigma_eff: f64,
    pub p_bar: f64,
    pub best_theta: Vec<f64>,
    pub best_power: f64,
    /// Whether `p_bar` has seen a sample yet.
    pub primed: bool,
    rng: ChaCha8Rng,
}

impl TunerState {
    pub fn new(theta0: Vec<f64>, cfg: &TunerConfig) -> Result<Self> {
        cfg.validate()?;
        if theta0.is_empty() || theta0.iter().any(|x| !x.is_finite()) {
            return Err(invalid("theta0 must be non-empty and finite"));
        }
        Ok(TunerState {
            best_theta: theta0.clone(),
            theta: theta0,
            sigma_eff: cfg.sigma0,
            p_bar: 0.0,
            best_power: f64::NEG_INFINITY,
            primed: false,
            rng: ChaCha8Rng::seed_from_u64(cfg.seed),
        })
    }

    /// Folds in the power measured at the current `theta`, then moves `theta`.
    /// Returns whether the measurement became the incumbent.
    pub fn step(&mut self, cfg: &TunerConfig, bounds: &Bounds, measured_power: f64) -> Result<bool> {
        if !measured_power.is_finite() {
            return Err(invalid("measured power must be finite"));
        }
        check_dim("tuner bounds", self.theta.len(), bounds.dim())?;
        self.p_bar = if self.primed {
            let a = cfg.smoothing();
            (1.0 - a) * self.p_bar + a * measured_power
        } else {
            measured_power
        };
        self.primed = true;
        self.sigma_eff = cfg.braked_sigma(self.p_bar);
        let improved = measured_power > self.best_power;
        if improved {
            self.best_power = measured_power;
            self.best_theta.clone_from(&self.theta);
        }
        self.perturb(bounds);
        Ok(improved)
    }

    fn perturb(&mut self, bounds: &Bounds) {
        let step = uniform_step(&mut self.rng, self.sigma_eff, self.theta.len());
        for (x, d) in self.theta.iter_mut().zip(step) {
            *x += d;
        }
        bounds.reflect(&mut self.theta);
    }
}

/// Pure successor of `state` after one measurement.
pub fn tuner_step(state: &TunerState, cfg: &TunerConfig, bounds: &Bounds, measured_power: f64) -> Result<TunerState> {
    let mut next = state.clone();
    next.step(cfg, bounds, measured_power)?;
    Ok(next)
}

/// A deterministic power oracle over a bounded parameter box.
pub trait Plant {
    fn bounds(&self) -> &Bounds;
    /// Mean extracted power in watts; non-finite values mark an invalid point.
    fn power(&self, theta: &[f64]) -> f64;
}

impl<P: Plant + ?Sized> Plant for &P {
    fn bounds(&self) -> &Bounds {
        (**self).bounds()
    }

    fn power(&self, theta: &[f64]) -> f64 {
        (**self).power(theta)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HistoryRow {
    pub step: usize,
    pub theta: Vec<f64>,
    pub power: f64,
    pub sigma_eff: f64,
    pub is_incumbent: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TuneResult {
    pub best_theta: Vec<f64>,
    pub best_power: f64,
    pub history: Vec<HistoryRow>,
    /// Steps whose evaluation was non-finite, with the rejected point.
    pub skipped: Vec<(usize, Vec<f64>)>,
}

/// Evaluates `budget` points starting at `theta0`, stepping the tuner after each.
/// A non-finite evaluation is logged, discarded, and replaced by a fresh step from the
/// point it was proposed from.
pub fn tune<P: Plant>(plant: &P, theta0: &[f64], cfg: &TunerConfig) -> Result<TuneResult> {
    let bounds = plant.bounds();
    check_dim("theta0", bounds.dim(), theta0.len())?;
    if !bounds.contains(theta0) {
        return Err(invalid("theta0 lies outside the plant bounds"));
    }
    let mut state = TunerState::new(theta0.to_vec(), cfg)?;
    let mut result = TuneResult {
        best_theta: theta0.to_vec(),
        best_power: f64::NEG_INFINITY,
        history: Vec::with_capacity(cfg.budget),
        skipped: Vec::new(),
    };
    if cfg.budget == 0 {
        result.best_power = plant.power(theta0);
        return Ok(result);
    }
    let mut origin = theta0.to_vec();
    for step in 0..cfg.budget {
        let power = plant.power(&state.theta);
        if !power.is_finite() {
            result.skipped.push((step, state.theta.clone()));
            state.theta.clone_from(&origin);
            state.perturb(bounds);
            continue;
        }
        let theta = state.theta.clone();
        let is_incumbent = state.step(cfg, bounds, power)?;
        result.history.push(HistoryRow {
            step,
            theta: theta.clone(),
            power,
            sigma_eff: state.sigma_eff,
            is_incumbent,
        });
        origin = theta;
    }
    result.best_theta = state.best_theta;
    result.best_power = state.best_power;
    Ok(result)
}

/// Writes `step,theta_0..,power_W,sigma_eff,is_incumbent`.
pub fn write_history_csv<W: Write>(w: &mut W, history: &[HistoryRow]) -> std::io::Result<()> {
    let dim = history.first().map_or(1, |r| r.theta.len());
    let mut header = vec!["step".to_string()];
    header.extend((0..dim).map(|i| format!("theta_{i}")));
    header.extend(["power_W", "sigma_eff", "is_incumbent"].map(String::from));
    csvio::write_row(w, &header)?;
    for r in history {
        let mut row = vec![r.step.to_string()];
        row.extend(r.theta.iter().map(|&x| csvio::fmt_f64(x)));
        row.push(csvio::fmt_f64(r.power));
        row.push(csvio::fmt_f64(r.sigma_eff));
        row.push(u8::from(r.is_incumbent).to_string());
        csvio::write_row(w, &row)?;
    }
    Ok(())
}

/// Driven oscillator with tunable spring constant; power is the simulated steady-state mean.
#[derive(Debug, Clone, PartialEq)]
pub struct OscillatorPlant {
    pub mass: f64,
    pub friction: f64,
    pub amplitude: f64,
    pub omega: f64,
    /// Integration steps per period of the faster of drive and natural motion.
    pub steps_per_period: f64,
    bounds: Bounds,
}

impl OscillatorPlant {
    pub fn new(mass: f64, friction: f64, amplitude: f64, omega: f64, k_range: (f64, f64)) -> Result<Self> {
        OscillatorParams::new(mass, 0.0, friction)?;
        if !(friction > 0.0) {
            return Err(invalid("tuning plant needs positive friction"));
        }
        if !(omega > 0.0 && omega.is_finite() && amplitude.is_finite()) {
            return Err(invalid("drive must have positive frequency and finite amplitude"));
        }
        if !(k_range.0 >= 0.0) {
            return Err(invalid("stiffness bounds must be nonnegative"));
        }
        Ok(OscillatorPlant {
            mass,
            friction,
            amplitude,
            omega,
            steps_per_period: 200.0,
            bounds: Bounds::new(vec![k_range.0], vec![k_range.1])?,
        })
    }

    pub fn with_steps_per_period(mut self, steps: f64) -> Self {
        self.steps_per_period = steps;
        self
    }
}

impl Plant for OscillatorPlant {
    fn bounds(&self) -> &Bounds {
        &self.bounds
    }

    fn power(&self, theta: &[f64]) -> f64 {
        let Ok(params) = OscillatorParams::new(self.mass, theta[0], self.friction) else {
            return f64::NAN;
        };
        let fastest = params.natural_frequency().map_or(self.omega, |w0| w0.max(self.omega));
        let opts = MeasureOptions {
            dt: Some(2.0 * PI / fastest / self.steps_per_period),
            ..MeasureOptions::default()
        };
        analog::measure_steady_state(&params, self.amplitude, self.omega, &opts).map_or(f64::NAN, |m| m.mean_power)
    }
}
