//! One runner per experiment kind. Each writes its artifacts and returns summary metrics.
//!
//! Sub-streams are seeded as `seed + n` with a fixed `n` per stream, and parallel work is
//! collected in index order, so artifacts do not depend on the thread count.

use std::fs;
use std::io::Write;

use autolearn_core::analog::{self, linspace, MeasureOptions, OscillatorParams};
use autolearn_core::autoencoder::{self, DecoderTraining, Dataset};
use autolearn_core::collective::{self, AlignConfig};
use autolearn_core::csvio::{fmt_f64, write_row};
use autolearn_core::digital::{self, Bitstream, EnergyLedger};
use autolearn_core::resonet::{self, CircuitGraph, NetworkPlant, NetworkParams, SweepConfig, SweepRunner, ValueRange};
use autolearn_core::tuner::{self, OscillatorPlant, Plant, TunerConfig};
use rayon::prelude::*;
use serde_json::{json, Map, Value as Json};

use crate::config::{ExperimentConfig, Kind};
use crate::run::Artifacts;
use crate::RunError;

type Summary = Map<String, Json>;

pub(crate) fn dispatch(cfg: &ExperimentConfig, out: &mut Artifacts) -> Result<Summary, RunError> {
    match cfg.kind {
        Kind::ParrotTrain => parrot_train(cfg, out),
        Kind::Collective => collective(cfg, out),
        Kind::DigitalLoop => digital_loop(cfg, out),
        Kind::AnalogSweep => analog_sweep(cfg, out),
        Kind::TuneOscillator => tune_oscillator(cfg, out),
        Kind::TuneNetwork => tune_network(cfg, out),
        Kind::ResonetSpectrum => resonet_spectrum(cfg, out),
        Kind::ResonetScaling => resonet_scaling(cfg, out),
    }
}

fn summary(pairs: impl IntoIterator<Item = (&'static str, Json)>) -> Summary {
    pairs.into_iter().map(|(k, v)| (k.to_string(), v)).collect()
}

fn read_input(path: &str) -> Result<String, RunError> {
    fs::read_to_string(path).map_err(|source| RunError::Io {
        path: path.into(),
        source,
    })
}

fn argmax(values: &[f64]) -> Option<usize> {
    (0..values.len()).max_by(|&a, &b| values[a].total_cmp(&values[b]))
}

fn parrot_train(cfg: &ExperimentConfig, out: &mut Artifacts) -> Result<Summary, RunError> {
    let dim = cfg.count("dim");
    let bottleneck = cfg.count("bottleneck");
    let data = match cfg.opt_text("data") {
        Some(path) => Dataset::read_csv(read_input(path)?.as_bytes())?,
        None => {
            let rank = cfg.opt_count("rank").unwrap_or(bottleneck);
            autoencoder::synthetic_dataset(dim, rank, cfg.count("frames"), cfg.float("noise"), cfg.seed)?
        }
    };
    if data.dim() != dim {
        return Err(RunError::Failed(format!(
            "data frames have dimension {}, config says dim = {dim}",
            data.dim()
        )));
    }
    out.write("dataset.csv", |w| data.write_csv(w))?;

    let encoder = autoencoder::train_encoder(&data, bottleneck)?;
    let mode = match cfg.text("training") {
        "gradient" => DecoderTraining::Gradient {
            step: cfg
                .opt_float("step")
                .unwrap_or_else(|| autoencoder::gradient_step_bound(&encoder, &data)),
            max_iters: cfg.count("max_iters"),
        },
        _ => DecoderTraining::ClosedForm,
    };
    let fit = autoencoder::train_decoder(&encoder, &data, mode)?;
    out.write("encoder.csv", |w| encoder.write_csv(w))?;
    out.write("decoder.csv", |w| fit.decoder.write_csv(w))?;

    let reports = data
        .frames()
        .par_iter()
        .map(|f| autoencoder::parrot_cycle(&encoder, &fit.decoder, f))
        .collect::<Result<Vec<_>, _>>()?;
    out.write("frames.csv", |w| {
        write_row(w, &["frame", "external_error", "internal_error"])?;
        for (i, r) in reports.iter().enumerate() {
            write_row(w, &[i.to_string(), fmt_f64(r.external_error), fmt_f64(r.internal_error)])?;
        }
        Ok(())
    })?;
    let n = reports.len() as f64;
    Ok(summary([
        ("frames", json!(data.len())),
        ("internal_objective", json!(fit.objective)),
        ("mean_external_error", json!(reports.iter().map(|r| r.external_error).sum::<f64>() / n)),
        ("compression_rate", json!(autoencoder::compression_rate(&encoder, &data)?)),
        ("iterations", json!(fit.iterations)),
        ("converged", json!(fit.converged)),
        ("degenerate", json!(fit.degenerate)),
    ]))
}

fn collective(cfg: &ExperimentConfig, out: &mut Artifacts) -> Result<Summary, RunError> {
    let dim = cfg.count("dim");
    let ensemble = collective::random_ensemble(cfg.count("agents"), dim, cfg.count("code_dim"), cfg.seed)?;
    let data = autoencoder::synthetic_dataset(dim, dim, cfg.count("frames"), 0.0, cfg.seed.wrapping_add(1))?;
    let align = AlignConfig {
        rounds: cfg.count("rounds"),
        tol: cfg.float("tol"),
        damping: cfg.float("damping"),
        self_weight: cfg.float("self_weight"),
    };
    let result = collective::align_decoders(&ensemble, &data, &align)?;
    out.write("history.csv", |w| collective::write_history_csv(w, &result.history))?;

    result.ensemble.write_dir(&out.path("agents"))?;
    out.record("agents/agents.csv");
    for a in result.ensemble.agents() {
        out.record(format!("agents/agent_{}_encoder.csv", a.id));
        out.record(format!("agents/agent_{}_decoder.csv", a.id));
    }

    let images = data
        .frames()
        .par_iter()
        .map(|f| collective::objective_image(&result.ensemble, f))
        .collect::<Result<Vec<_>, _>>()?;
    out.write("objective_image.csv", |w| {
        let mut header = vec!["frame".to_string()];
        header.extend((0..dim).map(|i| format!("external_{i}")));
        header.extend((0..dim).map(|i| format!("image_{i}")));
        write_row(w, &header)?;
        for (i, (f, img)) in data.frames().iter().zip(&images).enumerate() {
            let mut row = vec![i.to_string()];
            row.extend(f.samples().iter().chain(img.samples()).map(|&x| fmt_f64(x)));
            write_row(w, &row)?;
        }
        Ok(())
    })?;

    let (max_pairwise, mean_pairwise) = collective::pairwise_discrepancy(&result.ensemble, &data)?;
    Ok(summary([
        ("converged", json!(result.converged)),
        ("rounds", json!(result.history.len().saturating_sub(1))),
        ("max_pairwise", json!(max_pairwise)),
        ("mean_pairwise", json!(mean_pairwise)),
        (
            "objective",
            json!(collective::alignment_objective(&result.ensemble, &data, align.self_weight)?),
        ),
    ]))
}

fn digital_loop(cfg: &ExperimentConfig, out: &mut Artifacts) -> Result<Summary, RunError> {
    let width = cfg.count("width") as u32;
    let external = match cfg.opt_text("input") {
        Some(path) => match digital::parse_bitstream(&read_input(path)?)? {
            Bitstream::Words(words) => {
                if let Some(w) = words.iter().find(|w| w.width() != width) {
                    return Err(RunError::Failed(format!(
                        "input words are {} bits wide, config says width = {width}",
                        w.width()
                    )));
                }
                words
            }
            Bitstream::Bits(_) => {
                return Err(RunError::Failed("input must be a hex word list with a width= header".into()));
            }
        },
        None => digital::random_words(cfg.count("words"), width, cfg.seed)?,
    };
    let model = match cfg.text("model") {
        "perfect" => external.clone(),
        "zero" => external
            .iter()
            .map(|w| digital::BitWord::new(0, w.width()))
            .collect::<Result<Vec<_>, _>>()?,
        _ => digital::noisy_copy(&external, cfg.float("error_rate"), cfg.seed.wrapping_add(1))?,
    };
    let ledger = EnergyLedger::new(cfg.float("temperature"))?;
    let outcome = digital::run_digital_loop(&external, &model, &ledger, cfg.seed.wrapping_add(2))?;

    out.write("external.txt", |w| digital::write_words_hex(w, &external, width))?;
    out.write("model.txt", |w| digital::write_words_hex(w, &model, width))?;
    out.write("residual.txt", |w| digital::write_words_hex(w, &outcome.residual, width))?;
    out.write("extractor_output.txt", |w| writeln!(w, "{}", outcome.output))?;
    out.write("ledger.csv", |w| outcome.ledger.write_csv(w))?;

    let bits = outcome.output.len();
    let ones = if bits == 0 {
        Json::Null
    } else {
        json!(outcome.output.count_ones() as f64 / bits as f64)
    };
    Ok(summary([
        ("words", json!(external.len())),
        ("net_joules", json!(outcome.net_joules)),
        ("bit_energy_J", json!(ledger.bit_energy())),
        ("n_extracted", json!(outcome.ledger.n_extracted)),
        ("n_erased", json!(outcome.ledger.n_erased)),
        ("n_written", json!(outcome.ledger.n_written)),
        ("n_randomized", json!(outcome.ledger.n_randomized)),
        ("output_ones_fraction", ones),
    ]))
}

fn analog_sweep(cfg: &ExperimentConfig, out: &mut Artifacts) -> Result<Summary, RunError> {
    let params = OscillatorParams::new(cfg.float("mass"), cfg.float("stiffness"), cfg.float("friction"))?;
    let amplitude = cfg.float("amplitude");
    let opts = MeasureOptions {
        settle_damping_times: cfg.float("settle"),
        dt: cfg.opt_float("dt"),
    };
    let omegas = linspace(cfg.float("omega_min"), cfg.float("omega_max"), cfg.count("points"));
    let points = omegas
        .par_iter()
        .map(|&w| analog::sweep_point(&params, amplitude, w, &opts))
        .collect::<Result<Vec<_>, _>>()?;
    out.write("sweep.csv", |w| analog::write_sweep_csv(w, &points))?;

    let sim: Vec<f64> = points.iter().map(|p| p.mean_power_sim).collect();
    let ana: Vec<f64> = points.iter().map(|p| p.mean_power_analytic).collect();
    let peak = argmax(&sim).expect("at least one sweep point");
    let max_rel = points
        .iter()
        .map(|p| (p.mean_power_sim - p.mean_power_analytic).abs() / p.mean_power_analytic.abs())
        .fold(0.0, f64::max);
    Ok(summary([
        ("points", json!(points.len())),
        ("peak_omega", json!(omegas[peak])),
        ("peak_power", json!(sim[peak])),
        ("analytic_peak_omega", json!(omegas[argmax(&ana).expect("nonempty")])),
        ("natural_frequency", json!(params.natural_frequency())),
        ("max_relative_error", json!(max_rel)),
    ]))
}

fn tuner_config(cfg: &ExperimentConfig, seed: u64) -> TunerConfig {
    TunerConfig {
        sigma0: cfg.float("sigma0"),
        beta: cfg.float("beta"),
        window: cfg.count("window"),
        budget: cfg.count("budget"),
        seed,
    }
}

fn tune_oscillator(cfg: &ExperimentConfig, out: &mut Artifacts) -> Result<Summary, RunError> {
    let (mass, omega) = (cfg.float("mass"), cfg.float("omega"));
    let plant = OscillatorPlant::new(
        mass,
        cfg.float("friction"),
        cfg.float("amplitude"),
        omega,
        (cfg.float("k_min"), cfg.float("k_max")),
    )?
    .with_steps_per_period(cfg.float("steps_per_period"));
    let k0 = cfg.float("k0");
    let runs = (0..cfg.count("runs") as u64)
        .into_par_iter()
        .map(|i| {
            let seed = cfg.seed.wrapping_add(i);
            tuner::tune(&plant, &[k0], &tuner_config(cfg, seed)).map(|r| (seed, r))
        })
        .collect::<Result<Vec<_>, _>>()?;

    let rel_error = |k: f64| ((k / mass).sqrt() - omega).abs() / omega;
    for (i, (_, r)) in runs.iter().enumerate() {
        out.write(&format!("history_{i:03}.csv"), |w| tuner::write_history_csv(w, &r.history))?;
    }
    out.write("runs.csv", |w| {
        write_row(w, &["run", "seed", "best_k", "best_omega0", "relative_error", "best_power_W", "skipped"])?;
        for (i, (seed, r)) in runs.iter().enumerate() {
            let k = r.best_theta[0];
            write_row(
                w,
                &[
                    i.to_string(),
                    seed.to_string(),
                    fmt_f64(k),
                    fmt_f64((k / mass).sqrt()),
                    fmt_f64(rel_error(k)),
                    fmt_f64(r.best_power),
                    r.skipped.len().to_string(),
                ],
            )?;
        }
        Ok(())
    })?;

    let hits = runs.iter().filter(|(_, r)| rel_error(r.best_theta[0]) <= 0.05).count();
    let (_, best) = runs
        .iter()
        .max_by(|a, b| a.1.best_power.total_cmp(&b.1.best_power))
        .expect("at least one run");
    Ok(summary([
        ("runs", json!(runs.len())),
        ("target_k", json!(mass * omega * omega)),
        ("runs_within_5pct", json!(hits)),
        ("best_k", json!(best.best_theta[0])),
        ("best_power_W", json!(best.best_power)),
    ]))
}

fn network_params(cfg: &ExperimentConfig, nodes: usize) -> NetworkParams {
    let range = |lo: &str, hi: &str| ValueRange::new(cfg.float(lo), cfg.float(hi));
    let resistance = if cfg.float("r_max") == 0.0 {
        ValueRange::ZERO
    } else {
        range("r_min", "r_max")
    };
    NetworkParams {
        nodes,
        edge_prob: cfg.float("edge_prob"),
        capacitance: range("c_min", "c_max"),
        inductance: range("l_min", "l_max"),
        resistance,
    }
}

fn write_graph(out: &mut Artifacts, g: &CircuitGraph) -> Result<(), RunError> {
    out.write("nodes.csv", |w| g.write_nodes_csv(w))?;
    out.write("edges.csv", |w| g.write_edges_csv(w))
}

fn nearest(values: &[f64], target: f64) -> Option<f64> {
    values
        .iter()
        .copied()
        .min_by(|a, b| (a - target).abs().total_cmp(&(b - target).abs()))
}

fn tune_network(cfg: &ExperimentConfig, out: &mut Artifacts) -> Result<Summary, RunError> {
    let base = resonet::build_random_network(&network_params(cfg, cfg.count("nodes")), cfg.seed)?;
    let omega = cfg.float("omega");
    let plant = NetworkPlant::new(
        base,
        cfg.count("drive_node"),
        cfg.float("amplitude"),
        omega,
        cfg.float("log_range"),
    )?;
    let result = tuner::tune(&plant, &[0.0, 0.0], &tuner_config(cfg, cfg.seed.wrapping_add(1)))?;
    let tuned = plant.tuned(&result.best_theta)?;
    let before = resonet::modal_spectrum(plant.base());
    let after = resonet::modal_spectrum(&tuned);

    write_graph(out, plant.base())?;
    out.write("history.csv", |w| tuner::write_history_csv(w, &result.history))?;
    out.write("spectrum_initial.csv", |w| before.write_csv(w))?;
    out.write("spectrum_tuned.csv", |w| after.write_csv(w))?;

    Ok(summary([
        ("initial_power_W", json!(plant.power(&[0.0, 0.0]))),
        ("best_power_W", json!(result.best_power)),
        ("capacitance_scale", json!(result.best_theta[0].exp())),
        ("inductance_scale", json!(result.best_theta[1].exp())),
        ("nearest_mode_initial", json!(nearest(&before.oscillating(), omega))),
        ("nearest_mode_tuned", json!(nearest(&after.oscillating(), omega))),
        ("skipped", json!(result.skipped.len())),
    ]))
}

fn resonet_spectrum(cfg: &ExperimentConfig, out: &mut Artifacts) -> Result<Summary, RunError> {
    let graph = resonet::build_random_network(&network_params(cfg, cfg.count("nodes")), cfg.seed)?;
    let spectrum = resonet::modal_spectrum(&graph);
    write_graph(out, &graph)?;
    out.write("spectrum.csv", |w| spectrum.write_csv(w))?;
    let modes = spectrum.oscillating();

    let mut s = summary([
        ("nodes", json!(graph.node_count())),
        ("edges", json!(graph.edge_count())),
        ("components", json!(resonet::component_count(&graph))),
        ("cycle_rank", json!(resonet::cycle_rank(&graph))),
        ("modes", json!(modes.len())),
        ("lowest_mode", json!(modes.first())),
        ("highest_mode", json!(modes.last())),
    ]);

    let points = cfg.count("sweep_points");
    if points == 0 {
        return Ok(s);
    }
    let lo = cfg.opt_float("omega_min").or_else(|| modes.first().map(|w| 0.5 * w));
    let hi = cfg.opt_float("omega_max").or_else(|| modes.last().map(|w| 1.5 * w));
    let (Some(lo), Some(hi)) = (lo, hi) else {
        return Err(RunError::Failed(
            "network has no oscillating modes; set omega_min and omega_max for the sweep".into(),
        ));
    };
    let decay = spectrum
        .slowest_decay()
        .ok_or_else(|| RunError::Failed("a time-domain sweep needs a lossy network (r_max > 0)".into()))?;
    let sweep_cfg = SweepConfig {
        drive_node: cfg.count("drive_node"),
        amplitude: cfg.float("amplitude"),
        duration: cfg.float("settle") / decay,
        dt: resonet::max_stable_dt(&graph),
    };
    let runner = SweepRunner::new(&graph, sweep_cfg)?;
    let omegas = linspace(lo, hi, points);
    let mean_power = omegas
        .par_iter()
        .map(|&w| runner.power_at(w))
        .collect::<Result<Vec<_>, _>>()?;
    let sweep = resonet::NetworkSweep {
        peaks: resonet::local_maxima(&mean_power),
        omegas,
        mean_power,
    };
    out.write("sweep.csv", |w| sweep.write_csv(w))?;
    s.insert("sweep_peaks".into(), json!(sweep.peak_frequencies()));
    Ok(s)
}

fn resonet_scaling(cfg: &ExperimentConfig, out: &mut Artifacts) -> Result<Summary, RunError> {
    let sizes: Vec<usize> = (cfg.count("nodes_min")..=cfg.count("nodes_max"))
        .step_by(cfg.count("nodes_step"))
        .collect();
    let rows = sizes
        .par_iter()
        .enumerate()
        .map(|(k, &v)| {
            let g = resonet::build_random_network(&network_params(cfg, v), cfg.seed.wrapping_add(k as u64))?;
            Ok((g.edge_count(), resonet::component_count(&g), resonet::cycle_rank(&g)))
        })
        .collect::<Result<Vec<_>, autolearn_core::Error>>()?;
    out.write("scaling.csv", |w| {
        write_row(w, &["nodes", "edges", "components", "cycle_rank"])?;
        for (v, (e, c, r)) in sizes.iter().zip(&rows) {
            write_row(w, &[v.to_string(), e.to_string(), c.to_string(), r.to_string()])?;
        }
        Ok(())
    })?;
    let ranks: Vec<usize> = rows.iter().map(|r| r.2).collect();
    let fit = resonet::fit_power_law(&sizes, &ranks)?;
    Ok(summary([
        ("sizes", json!(sizes.len())),
        ("exponent", json!(fit.exponent)),
        ("intercept", json!(fit.intercept)),
    ]))
}
