//! Acceptance suite: each criterion prints one PASS/FAIL line; any failure exits nonzero.

use std::collections::BTreeMap;
use std::f64::consts::LN_2;
use std::fs;
use std::panic;
use std::path::Path;
use std::time::Instant;

use autolearn_cli::{run_experiment, validate_config, ExperimentConfig, Kind};
use autolearn_core::analog::{
    analytic_steady_state, linspace, measure_steady_state, net_power, MeasureOptions, OscillatorParams,
};
use autolearn_core::autoencoder::{
    gradient_step_bound, train_decoder, train_encoder, Dataset, DecoderTraining, Frame, LinearCoder,
};
use autolearn_core::collective::{align_decoders, broadcast_round, objective_image, AlignConfig, Agent, Ensemble};
use autolearn_core::digital::{
    extract_from_residual, random_words, reversible_restore, reversible_subtract, run_digital_loop, BitWord,
    EnergyLedger, ResidualStream,
};
use autolearn_core::resonet::{
    build_random_network, cycle_rank, cycle_rank_by_forest, eigenvalues, max_stable_dt,
    modal_spectrum, scaling_fit, sweep, CircuitGraph, Edge, NetworkParams, SweepConfig, Terminal, ValueRange,
};
use autolearn_core::tuner::{tune, OscillatorPlant, TunerConfig};
use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

type Check = Result<String, String>;
type Criterion = (&'static str, fn() -> Check);

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn within_time(start: Instant, limit_s: f64) -> Result<(), String> {
    let t = start.elapsed().as_secs_f64();
    ensure(t < limit_s, || format!("took {t:.1} s, limit {limit_s} s"))
}

const BOLTZMANN: f64 = 1.380649e-23;

fn reversibility() -> Check {
    let start = Instant::now();
    for a in 0..256u64 {
        for b in 0..256u64 {
            let (x, y) = (BitWord::new(a, 8).unwrap(), BitWord::new(b, 8).unwrap());
            let (d, k) = reversible_subtract(x, y).unwrap();
            ensure(d.value() == a.wrapping_sub(b) & 0xff, || format!("{a} - {b} gave {}", d.value()))?;
            ensure(reversible_restore(d, k).unwrap() == (x, y), || format!("pair ({a}, {b}) not restored"))?;
        }
    }
    within_time(start, 1.0)?;
    Ok(format!("65536 pairs restored exactly in {:.3} s", start.elapsed().as_secs_f64()))
}

fn landauer_ledger() -> Check {
    let expected = 8000.0 * BOLTZMANN * 300.0 * LN_2;
    let external = random_words(1000, 8, 42).unwrap();
    let ledger = EnergyLedger::new(300.0).unwrap();
    let out = run_digital_loop(&external, &external, &ledger, 7).unwrap();
    let rel = (out.net_joules - expected).abs() / expected;
    ensure(rel <= 1e-12, || format!("net {} J vs {expected} J", out.net_joules))?;
    ensure((out.net_joules - 2.2968e-17).abs() < 5e-22, || format!("net {} J", out.net_joules))?;

    // reversible-only pipeline: subtract then restore every word; nothing reaches the ledger
    let model = random_words(1000, 8, 43).unwrap();
    for (&x, &y) in external.iter().zip(&model) {
        let (d, k) = reversible_subtract(x, y).unwrap();
        ensure(reversible_restore(d, k).unwrap() == (x, y), || "restore failed".into())?;
    }
    ensure(ledger.joules() == 0.0, || format!("reversible pipeline netted {} J", ledger.joules()))?;

    let dir = tempfile::tempdir().unwrap();
    let mut cfg = validate_config("[digital_loop]\nseed = 1\nwords = 1000\nwidth = 8\ntemperature = 300\nmodel = \"perfect\"\n")
        .map_err(|e| e.to_string())?;
    cfg.output = dir.path().to_path_buf();
    let m = run_experiment(&cfg);
    let cli_net = m.summary["net_joules"].as_f64().ok_or("manifest lacks net_joules")?;
    ensure((cli_net - expected).abs() <= 1e-12 * expected, || format!("CLI manifest net {cli_net} J"))?;
    Ok(format!("net {:.6e} J (relative error {rel:.1e}); reversible pipeline 0 J; CLI manifest agrees", out.net_joules))
}

fn randomization() -> Check {
    let n = 100_000usize;
    let sigma = (0.25 / n as f64).sqrt();
    let mut worst = 0.0_f64;
    for seed in 0..10 {
        let (output, _) = extract_from_residual(&ResidualStream::zeros(n), &EnergyLedger::default(), seed);
        ensure(output.len() == n, || "output length changed".into())?;
        let z = (output.count_ones() as f64 / n as f64 - 0.5).abs() / sigma;
        ensure(z <= 3.0, || format!("seed {seed}: ones fraction {z:.2} sigma from 0.5"))?;
        worst = worst.max(z);
    }
    Ok(format!("10 seeds x 1e5 bits, worst deviation {worst:.2} sigma"))
}

/// `F₀² γ ω² / (2 ((k - m ω²)² + γ² ω²))`
fn lorentzian(m: f64, k: f64, g: f64, f0: f64, w: f64) -> f64 {
    f0 * f0 * g * w * w / (2.0 * ((k - m * w * w).powi(2) + (g * w).powi(2)))
}

fn analog_resonance() -> Check {
    let start = Instant::now();
    let (f0, gamma) = (1.0, 0.5);
    let p = OscillatorParams::new(1.0, 1.0, gamma).unwrap();
    let opts = MeasureOptions::default();
    let at = measure_steady_state(&p, f0, 1.0, &opts).unwrap().mean_power;
    let peak = f0 * f0 / (2.0 * gamma);
    ensure((at - peak).abs() <= 0.01 * peak, || format!("power at resonance {at} vs {peak}"))?;

    let omegas = linspace(0.2, 3.0, 50);
    let mut worst = 0.0_f64;
    for &w in &omegas {
        let sim = measure_steady_state(&p, 1.0, w, &opts).unwrap().mean_power;
        let ana = analytic_steady_state(&p, 1.0, w).unwrap().mean_power;
        let oracle = lorentzian(1.0, 1.0, 0.5, 1.0, w);
        ensure((ana - oracle).abs() <= 1e-12 * oracle, || format!("analytic {ana} vs {oracle} at {w}"))?;
        let rel = (sim - ana).abs() / ana;
        ensure(rel <= 0.02, || format!("omega {w}: simulated {sim} vs {ana}"))?;
        worst = worst.max(rel);
    }
    within_time(start, 10.0)?;
    Ok(format!(
        "P(w0) = {at:.6} vs 1; 50-point sweep worst relative error {worst:.2e}; {:.1} s",
        start.elapsed().as_secs_f64()
    ))
}

fn resonance_condition() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..10_000 {
        let f: f64 = rng.random_range(-1e3..1e3);
        let g = 10f64.powf(rng.random_range(-3.0..3.0));
        ensure(net_power(f, f / g, g) == 0.0, || format!("net_power({f}, f/g, {g}) != 0"))?;
    }

    let mut worst = 0.0_f64;
    for _ in 0..20 {
        let f: f64 = rng.random_range(0.1..10.0) * if rng.random::<bool>() { 1.0 } else { -1.0 };
        let g: f64 = rng.random_range(0.05..5.0);
        // grid over [-|f|/γ, 2|f|/γ], 3001 points, not aligned with the optimum
        let n = 3001;
        let span = f.abs() / g;
        let (best_v, best_p) = (0..n)
            .map(|i| -span + 3.0 * span * (i as f64 + 0.37) / n as f64)
            .map(|v| (v, net_power(f, v, g)))
            .max_by(|a, b| a.1.total_cmp(&b.1))
            .unwrap();
        let (v_star, p_star) = (f / (2.0 * g), f * f / (4.0 * g));
        let dv = (best_v - v_star).abs() / v_star.abs();
        let dp = (best_p - p_star).abs() / p_star;
        ensure(dv <= 0.005 && dp <= 0.005, || format!("f={f} g={g}: argmax {best_v} vs {v_star}, max {best_p} vs {p_star}"))?;
        worst = worst.max(dv.max(dp));
    }

    let p = OscillatorParams::new(1.0, 1.0, 0.5).unwrap();
    let opts = MeasureOptions::default();
    let on = measure_steady_state(&p, 1.0, 1.0, &opts).unwrap().residual.value;
    let off = measure_steady_state(&p, 1.0, 2.0, &opts).unwrap().residual.value;
    ensure(on < 0.05, || format!("residual at w0 {on}"))?;
    ensure(off > 0.5, || format!("residual at 2 w0 {off}"))?;
    Ok(format!(
        "zero net power exact on 10^4 pairs; grid optimum within {:.2}%; residual {on:.1e} at w0, {off:.3} at 2 w0",
        100.0 * worst
    ))
}

/// Seeded uniform walk in `[lo, hi]` with mirror walls.
fn reference_walk(theta0: f64, sigma: f64, lo: f64, hi: f64, steps: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut x = theta0;
    let mut out = Vec::with_capacity(steps);
    for _ in 0..steps {
        out.push(x);
        x += sigma * (2.0 * rng.random::<f64>() - 1.0);
        while x < lo || x > hi {
            x = if x < lo { 2.0 * lo - x } else { 2.0 * hi - x };
        }
    }
    out
}

fn tuner_efficacy() -> Check {
    let start = Instant::now();
    let (k_lo, k_hi) = (0.25, 4.5);
    let plant = OscillatorPlant::new(1.0, 0.5, 1.0, 1.0, (k_lo, k_hi)).map_err(|e| e.to_string())?;
    let cfg = |seed, beta| TunerConfig {
        sigma0: 0.5,
        beta,
        window: 10,
        budget: 2000,
        seed,
    };
    let errors: Vec<f64> = (0..20u64)
        .into_par_iter()
        .map(|seed| {
            let r = tune(&plant, &[4.0], &cfg(seed, 3.0)).unwrap();
            (r.best_theta[0].sqrt() - 1.0).abs()
        })
        .collect();
    let hits = errors.iter().filter(|&&e| e <= 0.05).count();
    ensure(hits >= 19, || format!("{hits}/20 runs within 5%: {errors:?}"))?;

    let free = tune(&plant, &[4.0], &cfg(99, 0.0)).unwrap();
    let walk = reference_walk(4.0, 0.5, k_lo, k_hi, 2000, 99);
    let path: Vec<f64> = free.history.iter().map(|h| h.theta[0]).collect();
    ensure(path == walk, || "beta = 0 trajectory differs from the seeded walk".into())?;
    within_time(start, 120.0)?;
    Ok(format!(
        "{hits}/20 runs within 5% (worst {:.2}%); beta = 0 path equals the seeded walk; {:.1} s",
        100.0 * errors.iter().copied().fold(0.0, f64::max),
        start.elapsed().as_secs_f64()
    ))
}

fn gaussian(rng: &mut ChaCha8Rng, r: usize, c: usize) -> DMatrix<f64> {
    DMatrix::from_fn(r, c, |_, _| rng.sample(StandardNormal))
}

fn cond(m: &DMatrix<f64>) -> f64 {
    let s = m.singular_values();
    s.max() / s.min()
}

/// `min_B mean (A B C - C)²` through `vec(ABC) = (Cᵀ ⊗ A) vec(B)` and pseudo-inverted normal equations.
fn kronecker_optimum(a: &DMatrix<f64>, c: &DMatrix<f64>) -> f64 {
    let m = c.transpose().kronecker(a);
    let target = DMatrix::from_column_slice(c.len(), 1, c.as_slice());
    let eig = (m.transpose() * &m).symmetric_eigen();
    let cut = 1e-12 * eig.eigenvalues.amax();
    let inv = DMatrix::from_diagonal(&eig.eigenvalues.map(|l| if l > cut { 1.0 / l } else { 0.0 }));
    let b = &eig.eigenvectors * inv * eig.eigenvectors.transpose() * m.transpose() * &target;
    (&m * b - target).norm_squared() / c.len() as f64
}

fn decoder_training() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut worst = 0.0_f64;
    let mut made = 0;
    while made < 50 {
        let d = rng.random_range(2..=8);
        let k = rng.random_range(1..=d.min(4));
        let n = rng.random_range(d..=d + 12);
        let aw = gaussian(&mut rng, k, d);
        let fm = gaussian(&mut rng, d, n);
        // keep instances where fixed-threshold gradient descent can reach 1e-6
        if (cond(&aw) * cond(&(&aw * &fm))).powi(2) > 1e3 {
            continue;
        }
        made += 1;
        let a = LinearCoder::encoder(aw).unwrap();
        let data = Dataset::from_columns(&fm).unwrap();
        let oracle = kronecker_optimum(a.weights(), &(a.weights() * &fm));
        let closed = train_decoder(&a, &data, DecoderTraining::ClosedForm).unwrap().objective;
        let grad = train_decoder(
            &a,
            &data,
            DecoderTraining::Gradient {
                step: gradient_step_bound(&a, &data),
                max_iters: 1_000_000,
            },
        )
        .unwrap()
        .objective;
        ensure((closed - oracle).abs() <= 1e-9, || format!("closed form {closed} vs oracle {oracle}"))?;
        ensure((grad - oracle).abs() <= 1e-6, || format!("instance {made}: gradient {grad} vs {oracle}"))?;
        worst = worst.max((grad - oracle).abs());
    }

    let mut worst_proj = 0.0_f64;
    for seed in 0..20u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(1000 + seed);
        let d = rng.random_range(2..=8);
        let k = rng.random_range(1..d);
        let q = gaussian(&mut rng, d, d).qr().q();
        let mut frames = Vec::new();
        for i in 0..d {
            let col = q.column(i) * (10.0 - i as f64);
            frames.push(Frame::from_vector(col.clone_owned()).unwrap());
            frames.push(Frame::from_vector(-col).unwrap());
        }
        let enc = train_encoder(&Dataset::new(frames).unwrap(), k).unwrap();
        let top = q.columns(0, k);
        let w = enc.weights();
        let got = w.transpose() * (w * w.transpose()).try_inverse().unwrap() * w;
        let diff = (got - top * top.transpose()).abs().max();
        ensure(diff <= 1e-8, || format!("seed {seed}: projector difference {diff}"))?;
        worst_proj = worst_proj.max(diff);
    }
    Ok(format!(
        "50 instances, worst gradient gap {worst:.1e}; 20 subspaces, worst projector difference {worst_proj:.1e}"
    ))
}

fn uniform(rng: &mut ChaCha8Rng, r: usize, c: usize) -> DMatrix<f64> {
    DMatrix::from_fn(r, c, |_, _| rng.random_range(-1.0..1.0))
}

fn ensemble(rng: &mut ChaCha8Rng, n: usize, d: usize, k: usize) -> Ensemble {
    Ensemble::new(
        (0..n)
            .map(|i| {
                let e = LinearCoder::encoder(uniform(rng, k, d)).unwrap();
                let dec = LinearCoder::decoder(uniform(rng, d, k)).unwrap();
                Agent::new(i as u32, e, dec).unwrap()
            })
            .collect(),
    )
    .unwrap()
}

/// Max over listener/speaker pairs of `d(f_ii, f_ik)`, recomputed from one broadcast per frame.
fn max_pairwise(ens: &Ensemble, data: &Dataset) -> f64 {
    let rounds: Vec<_> = data.frames().iter().map(|f| broadcast_round(ens, f).unwrap()).collect();
    let n = ens.len();
    let mut worst = 0.0_f64;
    for i in 0..n {
        for k in (0..n).filter(|&k| k != i) {
            let d = rounds
                .iter()
                .map(|r| {
                    let (own, heard) = (r.get(i, i).samples(), r.get(i, k).samples());
                    own.iter().zip(heard).map(|(a, b)| (a - b).powi(2)).sum::<f64>() / own.len() as f64
                })
                .sum::<f64>()
                / rounds.len() as f64;
            worst = worst.max(d);
        }
    }
    worst
}

fn collective_convergence() -> Check {
    let mut worst = 0.0_f64;
    for seed in 0..5 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let ens = ensemble(&mut rng, 8, 3, 1);
        let data = Dataset::from_columns(&uniform(&mut rng, 3, 1)).unwrap();
        let cfg = AlignConfig {
            tol: 1e-4,
            ..AlignConfig::default()
        };
        let out = align_decoders(&ens, &data, &cfg).unwrap();
        let d = max_pairwise(&out.ensemble, &data);
        ensure(out.converged && d <= 1e-4, || format!("seed {seed}: converged {} with {d}", out.converged))?;
        worst = worst.max(d);
    }

    let mut rng = ChaCha8Rng::seed_from_u64(77);
    for _ in 0..100 {
        let n = rng.random_range(1..9);
        let d = rng.random_range(1..5);
        let k = rng.random_range(1..=d);
        let ens = ensemble(&mut rng, n, d, k);
        let frame = Frame::from_vector(uniform(&mut rng, d, 1).column(0).into_owned()).unwrap();
        let mut order: Vec<usize> = (0..n).collect();
        order.shuffle(&mut rng);
        let a = objective_image(&ens, &frame).unwrap();
        let b = objective_image(&ens.permuted(&order).unwrap(), &frame).unwrap();
        ensure(a == b, || format!("Obj changed under permutation {order:?}"))?;
    }

    let mut worst_pair = 0.0_f64;
    for seed in 0..10u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(300 + seed);
        let scalar = |rng: &mut ChaCha8Rng| {
            let mag: f64 = rng.random_range(0.5..2.0);
            if rng.random::<bool>() {
                mag
            } else {
                -mag
            }
        };
        let agents = (0..2)
            .map(|i| {
                let e = LinearCoder::encoder(DMatrix::from_element(1, 1, scalar(&mut rng))).unwrap();
                let d = LinearCoder::decoder(DMatrix::from_element(1, 1, scalar(&mut rng))).unwrap();
                Agent::new(i, e, d).unwrap()
            })
            .collect();
        let ens = Ensemble::new(agents).unwrap();
        let data = Dataset::new(vec![Frame::new(vec![rng.random_range(0.5..2.0)]).unwrap()]).unwrap();
        let cfg = AlignConfig {
            tol: 1e-20,
            rounds: 2000,
            ..AlignConfig::default()
        };
        let out = align_decoders(&ens, &data, &cfg).unwrap();
        let de: Vec<f64> = out
            .ensemble
            .agents()
            .iter()
            .map(|a| a.decoder().weights()[(0, 0)] * a.encoder().weights()[(0, 0)])
            .collect();
        let gap = (de[0] - de[1]).abs();
        ensure(gap <= 1e-6, || format!("seed {seed}: D1E1 = {} vs D2E2 = {}", de[0], de[1]))?;
        worst_pair = worst_pair.max(gap);
    }
    Ok(format!(
        "5 ensembles aligned (worst {worst:.1e}); Obj exact under 100 permutations; N=2 fixed point gap {worst_pair:.1e}"
    ))
}

/// Components over the vertices that carry the graph: every node, plus ground when an edge reaches it.
fn components_by_search(g: &CircuitGraph) -> (usize, usize) {
    let n = g.node_count();
    let idx = |t: Terminal| match t {
        Terminal::Node(i) => i,
        Terminal::Ground => n,
    };
    let mut adj = vec![Vec::new(); n + 1];
    for e in g.edges() {
        adj[idx(e.a)].push(idx(e.b));
        adj[idx(e.b)].push(idx(e.a));
    }
    let vertices = n + usize::from(!adj[n].is_empty());
    let mut seen = vec![false; n + 1];
    let mut comps = 0;
    for root in 0..vertices {
        if seen[root] {
            continue;
        }
        comps += 1;
        let mut stack = vec![root];
        seen[root] = true;
        while let Some(u) = stack.pop() {
            for &v in &adj[u] {
                if !seen[v] {
                    seen[v] = true;
                    stack.push(v);
                }
            }
        }
    }
    (vertices, comps)
}

fn network_structure() -> Check {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let params = |nodes, edge_prob, resistance| NetworkParams {
        nodes,
        edge_prob,
        capacitance: ValueRange::new(0.1, 10.0),
        inductance: ValueRange::new(0.1, 10.0),
        resistance,
    };
    for i in 0..100u64 {
        let v = rng.random_range(1..40);
        let mut g = build_random_network(&params(v, rng.random_range(0.0..1.0), ValueRange::new(0.01, 1.0)), i).unwrap();
        if i % 2 == 1 {
            let mut edges = g.edges().to_vec();
            edges.push(Edge {
                a: Terminal::Node(rng.random_range(0..v)),
                b: Terminal::Ground,
                inductance: 1.0,
                resistance: 0.1,
            });
            g = CircuitGraph::new(g.capacitances().to_vec(), edges).unwrap();
        }
        let (vertices, comps) = components_by_search(&g);
        let expected = g.edge_count() + comps - vertices;
        ensure(cycle_rank(&g) == expected, || format!("graph {i}: rank {} vs E-V+C {expected}", cycle_rank(&g)))?;
        ensure(cycle_rank_by_forest(&g) == expected, || format!("graph {i}: forest count disagrees"))?;
    }

    let sizes: Vec<usize> = (10..=60).collect();
    let fit = scaling_fit(&sizes, &params(0, 0.9, ValueRange::new(0.01, 1.0)), 3).unwrap();
    ensure((fit.exponent - 2.0).abs() <= 0.2, || format!("scaling exponent {}", fit.exponent))?;

    for _ in 0..50 {
        let (l, c) = (10f64.powf(rng.random_range(-3.0..3.0)), 10f64.powf(rng.random_range(-3.0..3.0)));
        let g = CircuitGraph::new(
            vec![c],
            vec![Edge {
                a: Terminal::Node(0),
                b: Terminal::Ground,
                inductance: l,
                resistance: 0.0,
            }],
        )
        .unwrap();
        let w = modal_spectrum(&g).eigenfrequencies[0];
        let expected = 1.0 / (l * c).sqrt();
        ensure((w - expected).abs() <= 1e-6 * expected, || format!("LC {l}, {c}: {w} vs {expected}"))?;
    }

    let mut worst_re = 0.0_f64;
    for seed in 0..50 {
        let g = build_random_network(&params(rng.random_range(1..12), 0.6, ValueRange::ZERO), seed).unwrap();
        for z in eigenvalues(&g) {
            worst_re = worst_re.max(z.re.abs());
        }
    }
    ensure(worst_re <= 1e-8, || format!("lossless eigenvalue real part {worst_re}"))?;

    let lightly_damped = NetworkParams {
        nodes: 4,
        edge_prob: 0.7,
        capacitance: ValueRange::new(0.5, 2.0),
        inductance: ValueRange::new(0.5, 2.0),
        resistance: ValueRange::new(0.02, 0.05),
    };
    let mut peaks = 0;
    for seed in 0..3 {
        let g = build_random_network(&lightly_damped, seed).unwrap();
        let spectrum = modal_spectrum(&g);
        let freqs = spectrum.oscillating();
        let top = freqs[freqs.len() - 1];
        let omegas: Vec<f64> = (1..=120).map(|i| 1.2 * top * i as f64 / 120.0).collect();
        let step = omegas[1] - omegas[0];
        let cfg = SweepConfig {
            drive_node: 0,
            amplitude: 1.0,
            duration: 20.0 / spectrum.slowest_decay().unwrap(),
            dt: max_stable_dt(&g),
        };
        let s = sweep(&g, cfg, &omegas).unwrap();
        ensure(s.peaks.len() == freqs.len(), || format!("seed {seed}: {} peaks for {} modes", s.peaks.len(), freqs.len()))?;
        for w in s.peak_frequencies() {
            let near = freqs.iter().map(|f| (f - w).abs()).fold(f64::INFINITY, f64::min);
            ensure(near <= step, || format!("seed {seed}: peak {w} is {near} from a mode (step {step})"))?;
            peaks += 1;
        }
    }
    within_time(start, 120.0)?;
    Ok(format!(
        "100 graphs E-V+C exact; exponent {:.3}; LC within 1e-6; lossless |Re| <= {worst_re:.1e}; {peaks} sweep peaks on modes; {:.1} s",
        fit.exponent,
        start.elapsed().as_secs_f64()
    ))
}

const REPRO_CONFIGS: [&str; 8] = [
    "[parrot_train]\nseed = 4\ndim = 5\nbottleneck = 2\nframes = 60\ntraining = \"gradient\"\n",
    "[collective]\nseed = 4\nagents = 6\ndim = 3\ncode_dim = 1\nframes = 2\n",
    "[digital_loop]\nseed = 4\nwords = 500\nwidth = 12\nmodel = \"noisy\"\nerror_rate = 0.05\n",
    "[analog_sweep]\nseed = 4\nmass = 1\nstiffness = 2\nfriction = 0.4\namplitude = 1\npoints = 24\n",
    "[tune_oscillator]\nseed = 4\nmass = 1\nfriction = 0.5\namplitude = 1\nomega = 1\nruns = 3\nbudget = 150\n",
    "[tune_network]\nseed = 4\nnodes = 4\nedge_prob = 0.7\nomega = 1.2\nbudget = 400\n",
    "[resonet_spectrum]\nseed = 4\nnodes = 4\nedge_prob = 0.7\nsweep_points = 40\n",
    "[resonet_scaling]\nseed = 4\nnodes_min = 10\nnodes_max = 40\nedge_prob = 0.8\n",
];

fn artifacts(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for entry in fs::read_dir(&d).unwrap() {
            let path = entry.unwrap().path();
            if path.is_dir() {
                stack.push(path);
            } else if path.file_name().is_some_and(|n| n != "manifest.json") {
                let rel = path.strip_prefix(dir).unwrap().to_string_lossy().into_owned();
                out.insert(rel, fs::read(&path).unwrap());
            }
        }
    }
    out
}

fn run_in_pool(cfg: &ExperimentConfig, threads: usize, dir: &Path) -> Result<BTreeMap<String, Vec<u8>>, String> {
    let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
    let mut cfg = cfg.clone();
    cfg.output = dir.to_path_buf();
    let m = pool.install(|| run_experiment(&cfg));
    ensure(m.succeeded(), || format!("{} failed: {:?}", cfg.kind, m.failure))?;
    Ok(artifacts(dir))
}

fn reproducibility() -> Check {
    let mut kinds = Vec::new();
    let mut files = 0;
    for raw in REPRO_CONFIGS {
        let cfg = validate_config(raw).map_err(|e| e.to_string())?;
        let tmp = tempfile::tempdir().unwrap();
        let first = run_in_pool(&cfg, 1, &tmp.path().join("a"))?;
        let second = run_in_pool(&cfg, 1, &tmp.path().join("b"))?;
        let wide = run_in_pool(&cfg, 4, &tmp.path().join("c"))?;
        ensure(first.keys().any(|k| k.ends_with(".csv")), || format!("{}: no CSV written", cfg.kind))?;
        ensure(first == second, || format!("{}: repeated run differs", cfg.kind))?;
        ensure(first == wide, || format!("{}: 4-thread run differs", cfg.kind))?;
        files += first.len();
        kinds.push(cfg.kind);
    }
    ensure(kinds == Kind::ALL, || "not every kind was exercised".into())?;
    Ok(format!("{} kinds, {files} artifacts byte-identical across reruns and 1 vs 4 threads", kinds.len()))
}

fn main() {
    let criteria: [Criterion; 10] = [
        ("reversibility", reversibility),
        ("landauer ledger", landauer_ledger),
        ("randomized extractor output", randomization),
        ("analog resonance oracle", analog_resonance),
        ("resonance condition", resonance_condition),
        ("tuner efficacy", tuner_efficacy),
        ("decoder and encoder training", decoder_training),
        ("collective convergence", collective_convergence),
        ("network structure", network_structure),
        ("reproducibility", reproducibility),
    ];
    panic::set_hook(Box::new(|_| {}));
    let mut failed = 0;
    for (i, (name, check)) in criteria.into_iter().enumerate() {
        let start = Instant::now();
        let result = panic::catch_unwind(check).unwrap_or_else(|p| {
            let msg = p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panicked".into());
            Err(format!("panic: {msg}"))
        });
        let secs = start.elapsed().as_secs_f64();
        match result {
            Ok(detail) => println!("criterion {:>2} PASS  {name} [{secs:.1} s]: {detail}", i + 1),
            Err(why) => {
                failed += 1;
                println!("criterion {:>2} FAIL  {name} [{secs:.1} s]: {why}", i + 1);
            }
        }
    }
    println!("acceptance: {} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
