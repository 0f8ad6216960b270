//! Random RLC networks: every junction has a capacitance to ground, every edge is a series
//! inductor and resistor. Loop counting, modal spectra and driven absorption.
//!
//! The state uses energy-normalized coordinates `u_i = sqrt(C_i) V_i` and
//! `w_e = sqrt(L_e) I_e`, in which the state matrix is skew-symmetric apart from the
//! `-R_e / L_e` diagonal, so stored energy is `½ |x|²`.

use std::collections::VecDeque;
use std::f64::consts::PI;
use std::fmt;
use std::io::{Read, Write};
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::analog::ForceSignal;
use crate::tuner::{Bounds, Plant};
use crate::csvio;
use crate::error::invalid;
use crate::{Error, Location, Result};

/// Minimum integration steps per period of the fastest mode.
pub const MIN_STEPS_PER_PERIOD: f64 = 20.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Terminal {
    Node(usize),
    Ground,
}

impl fmt::Display for Terminal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Terminal::Node(i) => write!(f, "{i}"),
            Terminal::Ground => f.write_str("gnd"),
        }
    }
}

impl FromStr for Terminal {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "gnd" => Ok(Terminal::Ground),
            t => t
                .parse()
                .map(Terminal::Node)
                .map_err(|_| Error::Parse(format!("bad terminal '{t}'"))),
        }
    }
}

/// Series RL branch; positive current flows from `a` to `b`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Edge {
    pub a: Terminal,
    pub b: Terminal,
    pub inductance: f64,
    pub resistance: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CircuitGraph {
    capacitances: Vec<f64>,
    edges: Vec<Edge>,
}

impl CircuitGraph {
    pub fn new(capacitances: Vec<f64>, edges: Vec<Edge>) -> Result<Self> {
        if capacitances.is_empty() {
            return Err(invalid("a network needs at least one node"));
        }
        if let Some(c) = capacitances.iter().find(|c| !(**c > 0.0 && c.is_finite())) {
            return Err(invalid(format!("capacitance must be positive, got {c}")));
        }
        for e in &edges {
            for t in [e.a, e.b] {
                if let Terminal::Node(i) = t {
                    if i >= capacitances.len() {
                        return Err(invalid(format!("edge endpoint {i} is not a node")));
                    }
                }
            }
            if e.a == e.b {
                return Err(invalid(format!("self-loop at {}", e.a)));
            }
            if !(e.inductance > 0.0 && e.inductance.is_finite()) {
                return Err(invalid("inductance must be positive"));
            }
            if !(e.resistance >= 0.0 && e.resistance.is_finite()) {
                return Err(invalid("resistance must be nonnegative"));
            }
        }
        Ok(CircuitGraph { capacitances, edges })
    }

    pub fn node_count(&self) -> usize {
        self.capacitances.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn capacitances(&self) -> &[f64] {
        &self.capacitances
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn uses_ground(&self) -> bool {
        self.edges.iter().any(|e| e.a == Terminal::Ground || e.b == Terminal::Ground)
    }

    pub fn state_dim(&self) -> usize {
        self.node_count() + self.edge_count()
    }

    /// Copy with every capacitance multiplied by `c_scale` and every inductance by `l_scale`.
    pub fn scaled(&self, c_scale: f64, l_scale: f64) -> Result<CircuitGraph> {
        let caps = self.capacitances.iter().map(|c| c * c_scale).collect();
        let edges = self
            .edges
            .iter()
            .map(|e| Edge {
                inductance: e.inductance * l_scale,
                ..*e
            })
            .collect();
        CircuitGraph::new(caps, edges)
    }

    /// Disjoint union; the second graph's nodes are renumbered after the first's.
    pub fn disjoint_union(&self, other: &CircuitGraph) -> CircuitGraph {
        let shift = self.node_count();
        let moved = other.edges.iter().map(|e| {
            let mv = |t| match t {
                Terminal::Node(i) => Terminal::Node(i + shift),
                Terminal::Ground => Terminal::Ground,
            };
            Edge { a: mv(e.a), b: mv(e.b), ..*e }
        });
        CircuitGraph {
            capacitances: self.capacitances.iter().chain(&other.capacitances).copied().collect(),
            edges: self.edges.iter().copied().chain(moved).collect(),
        }
    }

    /// Writes `i,C_F`.
    pub fn write_nodes_csv<W: Write>(&self, w: &mut W) -> std::io::Result<()> {
        csvio::write_row(w, &["i", "C_F"])?;
        for (i, c) in self.capacitances.iter().enumerate() {
            csvio::write_row(w, &[i.to_string(), csvio::fmt_f64(*c)])?;
        }
        Ok(())
    }

    /// Writes `i,j,L_H,R_ohm`; the ground terminal is written as `gnd`.
    pub fn write_edges_csv<W: Write>(&self, w: &mut W) -> std::io::Result<()> {
        csvio::write_row(w, &["i", "j", "L_H", "R_ohm"])?;
        for e in &self.edges {
            csvio::write_row(
                w,
                &[
                    e.a.to_string(),
                    e.b.to_string(),
                    csvio::fmt_f64(e.inductance),
                    csvio::fmt_f64(e.resistance),
                ],
            )?;
        }
        Ok(())
    }

    pub fn read_csv<R1: Read, R2: Read>(nodes: R1, edges: R2) -> Result<Self> {
        let (_, rows) = csvio::read_rows(nodes, true)?;
        let mut caps = vec![f64::NAN; rows.len()];
        for row in rows {
            if row.len() != 2 {
                return Err(Error::Parse("node rows need i,C_F".into()));
            }
            let i = row[0] as usize;
            if row[0] != i as f64 || i >= caps.len() {
                return Err(Error::Parse(format!("bad node index {}", row[0])));
            }
            caps[i] = row[1];
        }
        let mut rdr = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .comment(Some(b'#'))
            .from_reader(edges);
        let mut list = Vec::new();
        for rec in rdr.records() {
            let rec = rec.map_err(|e| Error::Parse(e.to_string()))?;
            if rec.len() != 4 {
                return Err(Error::Parse("edge rows need i,j,L_H,R_ohm".into()));
            }
            let num = |k: usize| {
                rec[k]
                    .parse::<f64>()
                    .map_err(|_| Error::Parse(format!("bad number '{}'", &rec[k])))
            };
            list.push(Edge {
                a: rec[0].parse()?,
                b: rec[1].parse()?,
                inductance: num(2)?,
                resistance: num(3)?,
            });
        }
        CircuitGraph::new(caps, list)
    }
}

/// Log-uniform sampling interval; `(0, 0)` means the value is identically zero.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ValueRange {
    pub lo: f64,
    pub hi: f64,
}

impl ValueRange {
    pub const ZERO: ValueRange = ValueRange { lo: 0.0, hi: 0.0 };

    pub fn new(lo: f64, hi: f64) -> Self {
        ValueRange { lo, hi }
    }

    fn validate(&self, what: &str, allow_zero: bool) -> Result<()> {
        if allow_zero && *self == Self::ZERO {
            return Ok(());
        }
        if !(self.lo > 0.0 && self.lo <= self.hi && self.hi.is_finite()) {
            return Err(invalid(format!(
                "{what} range [{}, {}] must be positive and non-empty",
                self.lo, self.hi
            )));
        }
        Ok(())
    }

    fn sample(&self, rng: &mut ChaCha8Rng) -> f64 {
        if *self == Self::ZERO {
            return 0.0;
        }
        let u: f64 = rng.random();
        (self.lo.ln() + u * (self.hi.ln() - self.lo.ln())).exp()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NetworkParams {
    pub nodes: usize,
    pub edge_prob: f64,
    pub capacitance: ValueRange,
    pub inductance: ValueRange,
    pub resistance: ValueRange,
}

/// Erdős-Rényi topology over the junctions with log-uniform component values. Capacitances
/// are drawn first in node order, then each pair `i < j` in lexicographic order decides its
/// edge and, if present, draws `L` then `R`.
pub fn build_random_network(params: &NetworkParams, seed: u64) -> Result<CircuitGraph> {
    if params.nodes == 0 {
        return Err(invalid("a network needs at least one node"));
    }
    if !(0.0..=1.0).contains(&params.edge_prob) {
        return Err(invalid("edge_prob must lie in [0, 1]"));
    }
    params.capacitance.validate("capacitance", false)?;
    params.inductance.validate("inductance", false)?;
    params.resistance.validate("resistance", true)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let caps = (0..params.nodes).map(|_| params.capacitance.sample(&mut rng)).collect();
    let mut edges = Vec::new();
    for i in 0..params.nodes {
        for j in i + 1..params.nodes {
            if rng.random::<f64>() < params.edge_prob {
                let inductance = params.inductance.sample(&mut rng);
                let resistance = params.resistance.sample(&mut rng);
                edges.push(Edge {
                    a: Terminal::Node(i),
                    b: Terminal::Node(j),
                    inductance,
                    resistance,
                });
            }
        }
    }
    CircuitGraph::new(caps, edges)
}

fn vertex(t: Terminal, nodes: usize) -> usize {
    match t {
        Terminal::Node(i) => i,
        Terminal::Ground => nodes,
    }
}

fn find(parent: &mut [usize], mut x: usize) -> usize {
    while parent[x] != x {
        parent[x] = parent[parent[x]];
        x = parent[x];
    }
    x
}

/// Number of connected components; ground is a vertex only when some edge touches it.
pub fn component_count(graph: &CircuitGraph) -> usize {
    let n = graph.node_count();
    let vertices = n + usize::from(graph.uses_ground());
    let mut parent: Vec<usize> = (0..=n).collect();
    let mut components = vertices;
    for e in &graph.edges {
        let (ra, rb) = (find(&mut parent, vertex(e.a, n)), find(&mut parent, vertex(e.b, n)));
        if ra != rb {
            parent[ra] = rb;
            components -= 1;
        }
    }
    components
}

/// `E - V + C`, the number of independent loops.
pub fn cycle_rank(graph: &CircuitGraph) -> usize {
    let vertices = graph.node_count() + usize::from(graph.uses_ground());
    graph.edge_count() + component_count(graph) - vertices
}

/// The state matrix `A` of `ẋ = A x + b I(t)` for current injection.
pub fn state_matrix(graph: &CircuitGraph) -> DMatrix<f64> {
    let n = graph.node_count();
    let dim = graph.state_dim();
    let mut a = DMatrix::zeros(dim, dim);
    for (e, edge) in graph.edges.iter().enumerate() {
        let row = n + e;
        for (t, sign) in [(edge.a, -1.0), (edge.b, 1.0)] {
            if let Terminal::Node(i) = t {
                let k = sign / (graph.capacitances[i] * edge.inductance).sqrt();
                a[(i, row)] = k;
                a[(row, i)] = -k;
            }
        }
        a[(row, row)] = -edge.resistance / edge.inductance;
    }
    a
}

/// Eigenvalues of the state matrix, in solver order.
pub fn eigenvalues(graph: &CircuitGraph) -> Vec<Complex64> {
    let a = state_matrix(graph);
    a.complex_eigenvalues()
        .iter()
        .map(|z| Complex64::new(z.re, z.im))
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModalSpectrum {
    /// rad/s, ascending.
    pub eigenfrequencies: Vec<f64>,
    /// 1/s, paired with `eigenfrequencies`.
    pub damping_rates: Vec<f64>,
}

impl ModalSpectrum {
    pub fn len(&self) -> usize {
        self.eigenfrequencies.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenfrequencies.is_empty()
    }

    /// Frequencies of the oscillating modes, ascending.
    pub fn oscillating(&self) -> Vec<f64> {
        self.eigenfrequencies.iter().copied().filter(|&w| w > 0.0).collect()
    }

    /// Smallest decay rate among damped oscillating modes; its inverse sets the settling time.
    pub fn slowest_decay(&self) -> Option<f64> {
        self.eigenfrequencies
            .iter()
            .zip(&self.damping_rates)
            .filter(|(w, d)| **w > 0.0 && **d > 0.0)
            .map(|(_, d)| *d)
            .reduce(f64::min)
    }

    /// Writes `omega_rad_s,damping_1_s`.
    pub fn write_csv<W: Write>(&self, w: &mut W) -> std::io::Result<()> {
        csvio::write_row(w, &["omega_rad_s", "damping_1_s"])?;
        for (o, d) in self.eigenfrequencies.iter().zip(&self.damping_rates) {
            csvio::write_row(w, &[csvio::fmt_f64(*o), csvio::fmt_f64(*d)])?;
        }
        Ok(())
    }
}

/// One mode per conjugate pair (positive imaginary part) and one zero-frequency mode per
/// real eigenvalue, sorted by frequency then damping.
pub fn modal_spectrum(graph: &CircuitGraph) -> ModalSpectrum {
    let eig = eigenvalues(graph);
    let scale = eig.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let tol = 1e-10 * scale.max(f64::MIN_POSITIVE);
    let mut modes: Vec<(f64, f64)> = eig
        .iter()
        .filter_map(|z| {
            if z.im.abs() <= tol {
                Some((0.0, -z.re))
            } else if z.im > 0.0 {
                Some((z.im, -z.re))
            } else {
                None
            }
        })
        .collect();
    modes.sort_by(|x, y| x.0.total_cmp(&y.0).then(x.1.total_cmp(&y.1)));
    ModalSpectrum {
        eigenfrequencies: modes.iter().map(|m| m.0).collect(),
        damping_rates: modes.iter().map(|m| m.1).collect(),
    }
}

/// Largest eigenvalue modulus of the state matrix, a bound on every mode's rate.
pub fn fastest_rate(graph: &CircuitGraph) -> f64 {
    eigenvalues(graph).iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Coarsest step that still gives the fastest mode `MIN_STEPS_PER_PERIOD` steps per period.
pub fn max_stable_dt(graph: &CircuitGraph) -> f64 {
    let rate = fastest_rate(graph);
    if rate == 0.0 {
        f64::INFINITY
    } else {
        2.0 * PI / rate / MIN_STEPS_PER_PERIOD
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DriveResult {
    /// Trailing-half sample mean of injected current times node voltage.
    pub mean_power: f64,
    pub steps: usize,
}

/// RK4 integration from rest with current `signal` injected into `drive_node`.
pub fn drive_response(
    graph: &CircuitGraph,
    drive_node: usize,
    signal: &ForceSignal,
    duration: f64,
    dt: f64,
) -> Result<DriveResult> {
    let limit = max_stable_dt(graph);
    check_drive(graph, drive_node, signal, duration, dt, limit)?;
    let a = state_matrix(graph);
    integrate(&a, graph, drive_node, signal, duration, dt)
}

fn check_drive(
    graph: &CircuitGraph,
    drive_node: usize,
    signal: &ForceSignal,
    duration: f64,
    dt: f64,
    limit: f64,
) -> Result<()> {
    if drive_node >= graph.node_count() {
        return Err(invalid(format!("drive node {drive_node} does not exist")));
    }
    signal.validate()?;
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(invalid("dt must be positive"));
    }
    if !(duration >= dt && duration.is_finite()) {
        return Err(invalid("duration must be at least dt"));
    }
    if dt > limit {
        return Err(invalid(format!(
            "dt = {dt} is too coarse for the network spectrum; need dt <= {limit}"
        )));
    }
    Ok(())
}

fn integrate(
    a: &DMatrix<f64>,
    graph: &CircuitGraph,
    drive_node: usize,
    signal: &ForceSignal,
    duration: f64,
    dt: f64,
) -> Result<DriveResult> {
    let steps = (duration / dt).round() as usize;
    let gain = 1.0 / graph.capacitances[drive_node].sqrt();
    let deriv = |t: f64, x: &DVector<f64>| {
        let mut d = a * x;
        d[drive_node] += gain * signal.at(t);
        d
    };
    let mut x = DVector::zeros(a.nrows());
    let from = steps.div_ceil(2);
    let mut acc = 0.0;
    let mut weight = 0.0;
    for i in 0..=steps {
        let t = i as f64 * dt;
        if i >= from {
            // trapezoid weights, exact for trigonometric content over whole periods
            let w = if i == from || i == steps { 0.5 } else { 1.0 };
            acc += w * signal.at(t) * x[drive_node] * gain;
            weight += w;
        }
        if i == steps {
            break;
        }
        let k1 = deriv(t, &x);
        let k2 = deriv(t + 0.5 * dt, &(&x + &k1 * (0.5 * dt)));
        let k3 = deriv(t + 0.5 * dt, &(&x + &k2 * (0.5 * dt)));
        let k4 = deriv(t + dt, &(&x + &k3 * dt));
        x += (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (dt / 6.0);
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite(Location::Step(i + 1)));
        }
    }
    Ok(DriveResult {
        mean_power: acc / weight,
        steps,
    })
}

/// Periodic-regime absorbed power `½ I₀² Re Z_in(ω)` from a complex linear solve.
/// `None` when `iω` is an eigenvalue of an undamped mode.
pub fn phasor_absorbed_power(graph: &CircuitGraph, drive_node: usize, amplitude: f64, omega: f64) -> Option<f64> {
    let a = state_matrix(graph);
    let dim = a.nrows();
    let m = DMatrix::from_fn(dim, dim, |i, j| {
        let diag = if i == j { Complex64::new(0.0, omega) } else { Complex64::new(0.0, 0.0) };
        diag - Complex64::new(a[(i, j)], 0.0)
    });
    let gain = 1.0 / graph.capacitances[drive_node].sqrt();
    let mut b = DVector::from_element(dim, Complex64::new(0.0, 0.0));
    b[drive_node] = Complex64::new(gain, 0.0);
    let x = m.lu().solve(&b)?;
    let z_in = x[drive_node] * gain;
    z_in.re.is_finite().then_some(0.5 * amplitude * amplitude * z_in.re)
}

/// A network under a fixed sinusoidal current drive whose capacitances and inductances are
/// rescaled by `exp(θ₀)` and `exp(θ₁)`; the plant reports the periodic-regime absorbed power.
#[derive(Debug, Clone)]
pub struct NetworkPlant {
    base: CircuitGraph,
    drive_node: usize,
    amplitude: f64,
    omega: f64,
    bounds: Bounds,
}

impl NetworkPlant {
    /// `log_range` bounds both log-scales to `[-log_range, log_range]`.
    pub fn new(base: CircuitGraph, drive_node: usize, amplitude: f64, omega: f64, log_range: f64) -> Result<Self> {
        if drive_node >= base.node_count() {
            return Err(invalid(format!("drive node {drive_node} is not a node")));
        }
        if !(amplitude.is_finite() && omega > 0.0 && omega.is_finite()) {
            return Err(invalid("drive needs a finite amplitude and a positive frequency"));
        }
        if !(log_range > 0.0 && log_range.is_finite()) {
            return Err(invalid("log_range must be positive"));
        }
        let bounds = Bounds::new(vec![-log_range; 2], vec![log_range; 2])?;
        Ok(NetworkPlant {
            base,
            drive_node,
            amplitude,
            omega,
            bounds,
        })
    }

    pub fn base(&self) -> &CircuitGraph {
        &self.base
    }

    pub fn tuned(&self, theta: &[f64]) -> Result<CircuitGraph> {
        if theta.len() != 2 {
            return Err(invalid("network plant takes two log-scales"));
        }
        self.base.scaled(theta[0].exp(), theta[1].exp())
    }
}

impl Plant for NetworkPlant {
    fn bounds(&self) -> &Bounds {
        &self.bounds
    }

    fn power(&self, theta: &[f64]) -> f64 {
        self.tuned(theta)
            .ok()
            .and_then(|g| phasor_absorbed_power(&g, self.drive_node, self.amplitude, self.omega))
            .unwrap_or(f64::NAN)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepConfig {
    pub drive_node: usize,
    pub amplitude: f64,
    pub duration: f64,
    pub dt: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NetworkSweep {
    pub omegas: Vec<f64>,
    pub mean_power: Vec<f64>,
    /// Indices of interior local maxima.
    pub peaks: Vec<usize>,
}

impl NetworkSweep {
    pub fn peak_frequencies(&self) -> Vec<f64> {
        self.peaks.iter().map(|&i| self.omegas[i]).collect()
    }

    /// Writes `omega,mean_power_W`.
    pub fn write_csv<W: Write>(&self, w: &mut W) -> std::io::Result<()> {
        csvio::write_row(w, &["omega", "mean_power_W"])?;
        for (o, p) in self.omegas.iter().zip(&self.mean_power) {
            csvio::write_row(w, &[csvio::fmt_f64(*o), csvio::fmt_f64(*p)])?;
        }
        Ok(())
    }
}

/// Validated single-frequency time-domain drive, sharing one state matrix across a sweep.
///
/// Each run starts from rest; its step and length are adjusted per frequency so the
/// averaging window spans whole drive periods.
pub struct SweepRunner<'g> {
    graph: &'g CircuitGraph,
    a: DMatrix<f64>,
    cfg: SweepConfig,
}

impl<'g> SweepRunner<'g> {
    pub fn new(graph: &'g CircuitGraph, cfg: SweepConfig) -> Result<Self> {
        let probe = ForceSignal::sinusoid(cfg.amplitude, 1.0);
        check_drive(graph, cfg.drive_node, &probe, cfg.duration, cfg.dt, max_stable_dt(graph))?;
        Ok(SweepRunner {
            graph,
            a: state_matrix(graph),
            cfg,
        })
    }

    pub fn power_at(&self, omega: f64) -> Result<f64> {
        if !(omega >= 0.0 && omega.is_finite()) {
            return Err(invalid("sweep frequencies must be nonnegative"));
        }
        let s = ForceSignal::sinusoid(self.cfg.amplitude, omega);
        let (duration, dt) = periodic_grid(self.cfg.duration, self.cfg.dt, omega);
        integrate(&self.a, self.graph, self.cfg.drive_node, &s, duration, dt).map(|r| r.mean_power)
    }
}

/// Shrinks `dt` to a whole fraction of the drive period and stretches `duration` so the
/// trailing half covers whole periods.
fn periodic_grid(duration: f64, dt: f64, omega: f64) -> (f64, f64) {
    if omega == 0.0 {
        return (duration, dt);
    }
    let period = 2.0 * PI / omega;
    let per_period = (period / dt).ceil();
    let half_periods = (0.5 * duration / period).ceil().max(1.0);
    (2.0 * half_periods * period, period / per_period)
}

/// Interior strict local maxima.
pub fn local_maxima(values: &[f64]) -> Vec<usize> {
    (1..values.len().saturating_sub(1))
        .filter(|&i| values[i] > values[i - 1] && values[i] > values[i + 1])
        .collect()
}

/// Time-domain absorbed power over a frequency grid, with its peaks.
pub fn sweep(graph: &CircuitGraph, cfg: SweepConfig, omegas: &[f64]) -> Result<NetworkSweep> {
    let runner = SweepRunner::new(graph, cfg)?;
    let mean_power = omegas.iter().map(|&w| runner.power_at(w)).collect::<Result<Vec<_>>>()?;
    Ok(NetworkSweep {
        peaks: local_maxima(&mean_power),
        omegas: omegas.to_vec(),
        mean_power,
    })
}

/// Least-squares slope and intercept of `ln(cycle_rank)` against `ln(V)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalingFit {
    pub nodes: Vec<usize>,
    pub ranks: Vec<usize>,
    pub exponent: f64,
    pub intercept: f64,
}

/// Builds one network per size (seed `seed + index`) and fits the loop-count exponent.
pub fn scaling_fit(sizes: &[usize], template: &NetworkParams, seed: u64) -> Result<ScalingFit> {
    let ranks = sizes
        .iter()
        .enumerate()
        .map(|(k, &v)| {
            let params = NetworkParams { nodes: v, ..*template };
            build_random_network(&params, seed.wrapping_add(k as u64)).map(|g| cycle_rank(&g))
        })
        .collect::<Result<Vec<_>>>()?;
    fit_power_law(sizes, &ranks)
}

pub fn fit_power_law(sizes: &[usize], ranks: &[usize]) -> Result<ScalingFit> {
    if sizes.len() < 2 || sizes.len() != ranks.len() {
        return Err(invalid("scaling fit needs at least two sizes"));
    }
    if ranks.contains(&0) || sizes.contains(&0) {
        return Err(invalid("scaling fit needs positive sizes and cycle ranks"));
    }
    let xs: Vec<f64> = sizes.iter().map(|&v| (v as f64).ln()).collect();
    let ys: Vec<f64> = ranks.iter().map(|&r| (r as f64).ln()).collect();
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(invalid("scaling fit needs distinct sizes"));
    }
    let exponent = sxy / sxx;
    Ok(ScalingFit {
        nodes: sizes.to_vec(),
        ranks: ranks.to_vec(),
        exponent,
        intercept: my - exponent * mx,
    })
}

/// Spanning-forest count by breadth-first search: `E` minus the number of tree edges.
pub fn cycle_rank_by_forest(graph: &CircuitGraph) -> usize {
    let n = graph.node_count();
    let mut adj = vec![Vec::new(); n + 1];
    for e in &graph.edges {
        let (a, b) = (vertex(e.a, n), vertex(e.b, n));
        adj[a].push(b);
        adj[b].push(a);
    }
    let mut seen = vec![false; n + 1];
    let mut tree_edges = 0;
    for root in 0..=n {
        if seen[root] {
            continue;
        }
        seen[root] = true;
        let mut queue = VecDeque::from([root]);
        while let Some(u) = queue.pop_front() {
            for &v in &adj[u] {
                if !seen[v] {
                    seen[v] = true;
                    tree_edges += 1;
                    queue.push_back(v);
                }
            }
        }
    }
    graph.edge_count() - tree_edges
}
