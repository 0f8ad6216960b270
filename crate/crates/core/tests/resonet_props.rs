use std::f64::consts::PI;

use autolearn_core::analog::ForceSignal;
use autolearn_core::resonet::{
    build_random_network, cycle_rank, cycle_rank_by_forest, drive_response, eigenvalues,
    max_stable_dt, modal_spectrum, phasor_absorbed_power, scaling_fit, sweep, CircuitGraph, Edge, NetworkParams,
    SweepConfig, Terminal, ValueRange,
};
use num_complex::Complex64;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn params(nodes: usize, edge_prob: f64, resistance: ValueRange) -> NetworkParams {
    NetworkParams {
        nodes,
        edge_prob,
        capacitance: ValueRange::new(0.1, 10.0),
        inductance: ValueRange::new(0.1, 10.0),
        resistance,
    }
}

fn tank(c: f64, l: f64, r: f64) -> CircuitGraph {
    CircuitGraph::new(
        vec![c],
        vec![Edge {
            a: Terminal::Node(0),
            b: Terminal::Ground,
            inductance: l,
            resistance: r,
        }],
    )
    .unwrap()
}

/// Capacitor in parallel with a series RL branch, seen from the node.
fn tank_impedance(c: f64, l: f64, r: f64, w: f64) -> Complex64 {
    let branch = Complex64::new(r, w * l);
    1.0 / (Complex64::new(0.0, w * c) + 1.0 / branch)
}

#[test]
fn single_loop_matches_closed_form_at_resonance() {
    let (c, l, r) = (1.0, 1.0, 0.1);
    let g = tank(c, l, r);
    let w = modal_spectrum(&g).eigenfrequencies[0];
    let expected = 0.5 * tank_impedance(c, l, r, w).re;
    let got = drive_response(&g, 0, &ForceSignal::sinusoid(1.0, w), 600.0, 0.01).unwrap().mean_power;
    assert!((got - expected).abs() / expected < 0.01, "{got} vs {expected}");
    let phasor = phasor_absorbed_power(&g, 0, 1.0, w).unwrap();
    assert!((phasor - expected).abs() / expected < 1e-12);
}

#[test]
fn lossless_network_far_below_resonance_absorbs_little() {
    let g = build_random_network(&params(6, 0.6, ValueRange::ZERO), 8).unwrap();
    let lowest = modal_spectrum(&g).oscillating()[0];
    let w = 0.05 * lowest;
    let period = 2.0 * PI / w;
    let dt = max_stable_dt(&g);
    let steps_per_period = (period / dt).ceil();
    let dt = period / steps_per_period;
    let got = drive_response(&g, 0, &ForceSignal::sinusoid(1.0, w), 10.0 * period, dt).unwrap().mean_power;
    let reactive = 0.5 * (1.0 / (w * g.capacitances().iter().sum::<f64>()));
    assert!(got.abs() <= 1e-3 * reactive, "{got} vs reactive scale {reactive}");
}

#[test]
fn sweep_peaks_sit_on_eigenfrequencies() {
    let lightly_damped = NetworkParams {
        nodes: 4,
        edge_prob: 0.7,
        capacitance: ValueRange::new(0.5, 2.0),
        inductance: ValueRange::new(0.5, 2.0),
        resistance: ValueRange::new(0.02, 0.05),
    };
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
        assert_eq!(s.peaks.len(), freqs.len(), "seed {seed}");
        for w in s.peak_frequencies() {
            let near = freqs.iter().map(|f| (f - w).abs()).fold(f64::INFINITY, f64::min);
            assert!(near <= step, "seed {seed}: peak at {w} is {near} from the nearest mode; grid step {step}");
        }
    }
}

#[test]
fn dense_loop_count_grows_quadratically() {
    let sizes: Vec<usize> = (10..=60).collect();
    let fit = scaling_fit(&sizes, &params(0, 0.9, ValueRange::new(0.01, 1.0)), 3).unwrap();
    assert!((fit.exponent - 2.0).abs() <= 0.2, "exponent {}", fit.exponent);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn cycle_rank_agrees_with_spanning_forest(seed in any::<u64>(), v in 1usize..25, p in 0.0..1.0f64, grounded in 0usize..4) {
        let mut g = build_random_network(&params(v, p, ValueRange::new(0.01, 1.0)), seed).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut edges = g.edges().to_vec();
        for _ in 0..grounded {
            edges.push(Edge { a: Terminal::Node(rng.random_range(0..v)), b: Terminal::Ground, inductance: 1.0, resistance: 0.0 });
        }
        g = CircuitGraph::new(g.capacitances().to_vec(), edges).unwrap();
        prop_assert_eq!(cycle_rank(&g), cycle_rank_by_forest(&g));
    }

    #[test]
    fn lossless_spectrum_is_imaginary(seed in any::<u64>(), v in 1usize..12, p in 0.2..1.0f64) {
        let g = build_random_network(&params(v, p, ValueRange::ZERO), seed).unwrap();
        for z in eigenvalues(&g) {
            prop_assert!(z.re.abs() <= 1e-8, "{}", z);
        }
    }

    #[test]
    fn lossy_networks_are_passive(seed in any::<u64>(), v in 1usize..12, p in 0.2..1.0f64) {
        let g = build_random_network(&params(v, p, ValueRange::new(0.001, 10.0)), seed).unwrap();
        for z in eigenvalues(&g) {
            prop_assert!(z.re <= 1e-8, "{}", z);
        }
        let s = modal_spectrum(&g);
        prop_assert!(s.len() <= g.state_dim());
        prop_assert!(s.eigenfrequencies.iter().all(|&w| w >= 0.0));
    }

    #[test]
    fn lc_tank_rings_at_inverse_root(l in 1e-3..1e3f64, c in 1e-3..1e3f64) {
        let s = modal_spectrum(&tank(c, l, 0.0));
        let expected = 1.0 / (l * c).sqrt();
        prop_assert!((s.eigenfrequencies[0] - expected).abs() <= 1e-6 * expected);
    }

    #[test]
    fn disjoint_union_merges_spectra(s1 in any::<u64>(), s2 in any::<u64>()) {
        let a = build_random_network(&params(4, 0.6, ValueRange::new(0.01, 0.1)), s1).unwrap();
        let b = build_random_network(&params(3, 0.8, ValueRange::new(0.01, 0.1)), s2).unwrap();
        let joint = modal_spectrum(&a.disjoint_union(&b));
        let (sa, sb) = (modal_spectrum(&a), modal_spectrum(&b));
        let mut merged: Vec<f64> = sa.eigenfrequencies.iter().chain(&sb.eigenfrequencies).copied().collect();
        merged.sort_by(f64::total_cmp);
        prop_assert_eq!(merged.len(), joint.len());
        for (x, y) in merged.iter().zip(&joint.eigenfrequencies) {
            prop_assert!((x - y).abs() <= 1e-9 * (1.0 + x.abs()), "{} vs {}", x, y);
        }
    }
}
