//! Collective perception among parroting agents.
//!
//! Every agent `i` owns an encoder `E_i` and a decoder `D_i`. For a shared external signal
//! `F`, agent `k` speaks `F_k = D_k E_k F` and agent `i` hears it as `f_ik = E_i F_k`.
//! Agents adjust their decoders until what they hear from themselves matches what they hear
//! from everyone else; the mean of all `f_ik` is the ensemble's objective image of `F`.

use std::fs;
use std::io::Write;
use std::path::Path;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::autoencoder::{Dataset, Frame, LinearCoder, Role};
use crate::csvio;
use crate::error::{check_dim, invalid};
use crate::linalg::{mse_mat, pinv};
use crate::{Error, Location, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Agent {
    pub id: u32,
    encoder: LinearCoder,
    decoder: LinearCoder,
}

impl Agent {
    pub fn new(id: u32, encoder: LinearCoder, decoder: LinearCoder) -> Result<Self> {
        if encoder.role() != Role::Encoder || decoder.role() != Role::Decoder {
            return Err(invalid(format!("agent {id}: coder roles are swapped")));
        }
        check_dim("agent decoder input", encoder.rows(), decoder.cols())?;
        check_dim("agent decoder output", encoder.cols(), decoder.rows())?;
        Ok(Agent {
            id,
            encoder,
            decoder,
        })
    }

    pub fn encoder(&self) -> &LinearCoder {
        &self.encoder
    }

    pub fn decoder(&self) -> &LinearCoder {
        &self.decoder
    }
}

/// A non-empty set of agents with identical external and code dimensions.
#[derive(Debug, Clone, PartialEq)]
pub struct Ensemble {
    agents: Vec<Agent>,
}

impl Ensemble {
    pub fn new(agents: Vec<Agent>) -> Result<Self> {
        let first = agents
            .first()
            .ok_or_else(|| invalid("ensemble needs at least one agent"))?;
        let (k, d) = (first.encoder.rows(), first.encoder.cols());
        for a in &agents {
            check_dim("agent code dimension", k, a.encoder.rows())?;
            check_dim("agent external dimension", d, a.encoder.cols())?;
        }
        let mut ids: Vec<u32> = agents.iter().map(|a| a.id).collect();
        ids.sort_unstable();
        if ids.windows(2).any(|w| w[0] == w[1]) {
            return Err(invalid("agent ids must be unique"));
        }
        Ok(Ensemble { agents })
    }

    pub fn agents(&self) -> &[Agent] {
        &self.agents
    }

    pub fn len(&self) -> usize {
        self.agents.len()
    }

    pub fn is_empty(&self) -> bool {
        self.agents.is_empty()
    }

    pub fn external_dim(&self) -> usize {
        self.agents[0].encoder.cols()
    }

    pub fn code_dim(&self) -> usize {
        self.agents[0].encoder.rows()
    }

    /// Reorders agents; `order[j]` is the index of the agent placed at position `j`.
    pub fn permuted(&self, order: &[usize]) -> Result<Self> {
        let mut seen = vec![false; self.len()];
        if order.len() != self.len() || order.iter().any(|&i| i >= self.len() || std::mem::replace(&mut seen[i], true)) {
            return Err(invalid("not a permutation of the agents"));
        }
        Ok(Ensemble {
            agents: order.iter().map(|&i| self.agents[i].clone()).collect(),
        })
    }

    /// Writes `agents.csv` (id, encoder file, decoder file) and one CSV per coder.
    pub fn write_dir(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir)?;
        let mut manifest = fs::File::create(dir.join("agents.csv"))?;
        writeln!(manifest, "id,encoder,decoder")?;
        for a in &self.agents {
            let enc = format!("agent_{}_encoder.csv", a.id);
            let dec = format!("agent_{}_decoder.csv", a.id);
            a.encoder.write_csv(&mut fs::File::create(dir.join(&enc))?)?;
            a.decoder.write_csv(&mut fs::File::create(dir.join(&dec))?)?;
            writeln!(manifest, "{},{enc},{dec}", a.id)?;
        }
        Ok(())
    }

    pub fn read_dir(dir: &Path) -> Result<Self> {
        let text = fs::read_to_string(dir.join("agents.csv"))?;
        let mut agents = Vec::new();
        for (n, line) in text.lines().enumerate().skip(1) {
            if line.trim().is_empty() {
                continue;
            }
            let parts: Vec<&str> = line.split(',').map(str::trim).collect();
            if parts.len() != 3 {
                return Err(Error::Parse(format!("agents.csv line {}: expected id,encoder,decoder", n + 1)));
            }
            let id = parts[0]
                .parse()
                .map_err(|_| Error::Parse(format!("agents.csv line {}: bad id '{}'", n + 1, parts[0])))?;
            let enc = LinearCoder::read_csv(fs::File::open(dir.join(parts[1]))?, Role::Encoder)?;
            let dec = LinearCoder::read_csv(fs::File::open(dir.join(parts[2]))?, Role::Decoder)?;
            agents.push(Agent::new(id, enc, dec)?);
        }
        Self::new(agents)
    }
}

/// All cross-heard codes of one broadcast; entry `(i, k)` is `f_ik = E_i D_k E_k F`.
#[derive(Debug, Clone, PartialEq)]
pub struct RoundMatrix {
    entries: Vec<Vec<Frame>>,
}

impl RoundMatrix {
    pub fn get(&self, listener: usize, speaker: usize) -> &Frame {
        &self.entries[listener][speaker]
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

pub fn broadcast_round(ens: &Ensemble, frame: &Frame) -> Result<RoundMatrix> {
    check_dim("external signal", ens.external_dim(), frame.dim())?;
    let spoken: Vec<_> = ens
        .agents
        .iter()
        .map(|a| a.decoder.weights() * (a.encoder.weights() * frame.as_vector()))
        .collect();
    let entries = ens
        .agents
        .iter()
        .map(|listener| {
            spoken
                .iter()
                .map(|s| Frame::from_vector(listener.encoder.weights() * s))
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(RoundMatrix { entries })
}

/// Mean of `f_ik` over all ordered pairs `(i, k)`, the diagonal included.
pub fn objective_image(ens: &Ensemble, frame: &Frame) -> Result<Frame> {
    let round = broadcast_round(ens, frame)?;
    let n = ens.len();
    // sum in agent-id order so any permutation of the ensemble gives bit-identical output
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by_key(|&i| ens.agents[i].id);
    let mut sum = nalgebra::DVector::zeros(ens.code_dim());
    for &i in &order {
        for &k in &order {
            sum += round.get(i, k).as_vector();
        }
    }
    Frame::from_vector(sum / (n * n) as f64)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AlignConfig {
    pub rounds: usize,
    /// Stop once the largest pairwise discrepancy is at most this.
    pub tol: f64,
    /// Fraction of the least-squares step taken each round, in (0, 1].
    pub damping: f64,
    /// Weight of the self-parroting anchor `d(f_ii, f_i)`, in [0, 1].
    pub self_weight: f64,
}

impl Default for AlignConfig {
    fn default() -> Self {
        AlignConfig {
            rounds: 1000,
            tol: 1e-8,
            damping: 0.5,
            self_weight: 0.5,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RoundStats {
    pub round: usize,
    /// max over `i != k` of `d(f_ii, f_ik)`
    pub max_pairwise: f64,
    /// mean over `i != k` of `d(f_ii, f_ik)`
    pub mean_pairwise: f64,
    /// value of the joint alignment objective
    pub objective: f64,
}

#[derive(Debug, Clone)]
pub struct Alignment {
    pub ensemble: Ensemble,
    pub history: Vec<RoundStats>,
    pub converged: bool,
}

struct Signals {
    /// `C_i = E_i X`
    codes: Vec<DMatrix<f64>>,
    /// `heard[i][k] = E_i D_k C_k`
    heard: Vec<Vec<DMatrix<f64>>>,
}

fn signals(ens: &Ensemble, x: &DMatrix<f64>) -> Signals {
    let codes: Vec<_> = ens.agents.iter().map(|a| a.encoder.weights() * x).collect();
    let spoken: Vec<_> = ens
        .agents
        .iter()
        .zip(&codes)
        .map(|(a, c)| a.decoder.weights() * c)
        .collect();
    let heard = ens
        .agents
        .iter()
        .map(|l| spoken.iter().map(|s| l.encoder.weights() * s).collect())
        .collect();
    Signals { codes, heard }
}

fn stats(sig: &Signals, round: usize, self_weight: f64) -> RoundStats {
    let n = sig.codes.len();
    let (w_self, w_pair) = weights(n, self_weight);
    let mut max = 0.0_f64;
    let mut sum = 0.0;
    let mut objective = 0.0;
    for i in 0..n {
        let own = &sig.heard[i][i];
        objective += w_self * mse_mat(own, &sig.codes[i]);
        for k in (0..n).filter(|&k| k != i) {
            let d = mse_mat(own, &sig.heard[i][k]);
            max = max.max(d);
            sum += d;
            objective += w_pair * d;
        }
    }
    let pairs = n * (n - 1);
    RoundStats {
        round,
        max_pairwise: max,
        mean_pairwise: if pairs == 0 { 0.0 } else { sum / pairs as f64 },
        objective,
    }
}

fn weights(n: usize, self_weight: f64) -> (f64, f64) {
    if n == 1 {
        (1.0, 0.0)
    } else {
        (self_weight, (1.0 - self_weight) / (n - 1) as f64)
    }
}

/// Largest and mean `d(f_ii, f_ik)` over ordered pairs `i != k`, averaged over the frames.
pub fn pairwise_discrepancy(ens: &Ensemble, data: &Dataset) -> Result<(f64, f64)> {
    check_dim("external signal", ens.external_dim(), data.dim())?;
    let s = stats(&signals(ens, &data.to_matrix()), 0, 0.5);
    Ok((s.max_pairwise, s.mean_pairwise))
}

/// Joint alignment objective `Σ_i [α d(f_ii, f_i) + (1-α)/(N-1) Σ_{k≠i} d(f_ii, f_ik)]`.
pub fn alignment_objective(ens: &Ensemble, data: &Dataset, self_weight: f64) -> Result<f64> {
    check_dim("external signal", ens.external_dim(), data.dim())?;
    Ok(stats(&signals(ens, &data.to_matrix()), 0, self_weight).objective)
}

/// Synchronous damped decoder alignment.
///
/// Each round every agent solves, with all other decoders frozen at the previous round, the
/// least-squares problem over its own decoder made of every objective term the decoder
/// enters: as a listener (`α d(f_ii, f_i)` and `d(f_ii, f_ik)`) and as a speaker
/// (`d(f_kk, f_ki)` for the other agents). The minimal-norm solution is blended into the
/// current decoder with the damping factor. Stops as soon as the largest pairwise
/// discrepancy is within `tol`.
pub fn align_decoders(ens: &Ensemble, data: &Dataset, cfg: &AlignConfig) -> Result<Alignment> {
    check_dim("external signal", ens.external_dim(), data.dim())?;
    if !(cfg.tol > 0.0) {
        return Err(invalid("tol must be positive"));
    }
    if !(cfg.damping > 0.0 && cfg.damping <= 1.0) {
        return Err(invalid("damping must be in (0, 1]"));
    }
    if !(0.0..=1.0).contains(&cfg.self_weight) {
        return Err(invalid("self_weight must be in [0, 1]"));
    }

    let x = data.to_matrix();
    let mut current = ens.clone();
    let mut history = Vec::new();

    for round in 0..=cfg.rounds {
        let sig = signals(&current, &x);
        let st = stats(&sig, round, cfg.self_weight);
        history.push(st);
        if st.max_pairwise <= cfg.tol {
            return Ok(Alignment {
                ensemble: current,
                history,
                converged: true,
            });
        }
        if round == cfg.rounds {
            break;
        }

        current = update(&current, &sig, cfg, round + 1)?;
    }

    Ok(Alignment {
        ensemble: current,
        history,
        converged: false,
    })
}

/// One synchronous alignment round: every decoder moves toward its least-squares target
/// computed from the same (previous) ensemble state.
pub fn alignment_step(ens: &Ensemble, data: &Dataset, cfg: &AlignConfig) -> Result<Ensemble> {
    check_dim("external signal", ens.external_dim(), data.dim())?;
    update(ens, &signals(ens, &data.to_matrix()), cfg, 1)
}

fn update(current: &Ensemble, sig: &Signals, cfg: &AlignConfig, round: usize) -> Result<Ensemble> {
    let n = current.len();
    let (_, w_pair) = weights(n, cfg.self_weight);
    let mut next = Vec::with_capacity(n);
    for (i, agent) in current.agents.iter().enumerate() {
        let c = &sig.codes[i];
        let target = if n == 1 {
            c.clone()
        } else {
            let others = (0..n)
                .filter(|&k| k != i)
                .fold(DMatrix::zeros(c.nrows(), c.ncols()), |acc, k| acc + &sig.heard[i][k]);
            c * cfg.self_weight + others * ((1.0 - cfg.self_weight) / (n - 1) as f64)
        };
        let e_i = agent.encoder.weights();
        let mut gram = e_i.transpose() * e_i;
        let mut rhs = e_i.transpose() * &target;
        for (k, other) in current.agents.iter().enumerate().filter(|(k, _)| *k != i) {
            let e_k = other.encoder.weights();
            gram += e_k.transpose() * e_k * w_pair;
            rhs += e_k.transpose() * &sig.heard[k][k] * w_pair;
        }
        // normal equations G D (C Cᵀ) = R Cᵀ, minimal-norm solution
        let solved = pinv(&gram) * rhs * c.transpose() * pinv(&(c * c.transpose()));
        let updated = agent.decoder.weights() * (1.0 - cfg.damping) + solved * cfg.damping;
        if updated.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite(Location::RoundAgent {
                round,
                agent: agent.id as usize,
            }));
        }
        next.push(Agent {
            id: agent.id,
            encoder: agent.encoder.clone(),
            decoder: LinearCoder::decoder(updated)?,
        });
    }
    Ok(Ensemble { agents: next })
}

/// Writes `round,max_pairwise,mean_pairwise`.
pub fn write_history_csv<W: Write>(w: &mut W, history: &[RoundStats]) -> std::io::Result<()> {
    csvio::write_row(w, &["round", "max_pairwise", "mean_pairwise"])?;
    for s in history {
        csvio::write_row(
            w,
            &[
                s.round.to_string(),
                csvio::fmt_f64(s.max_pairwise),
                csvio::fmt_f64(s.mean_pairwise),
            ],
        )?;
    }
    Ok(())
}

/// An ensemble of `agents` with encoder and decoder entries uniform on `[-1, 1]`.
///
/// Agent `i` gets id `i`; all agents draw from one generator in id order.
pub fn random_ensemble(agents: usize, external_dim: usize, code_dim: usize, seed: u64) -> Result<Ensemble> {
    if external_dim == 0 || code_dim == 0 {
        return Err(invalid("coder dimensions must be positive"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let members = (0..agents)
        .map(|i| {
            let enc = DMatrix::from_fn(code_dim, external_dim, |_, _| 2.0 * rng.random::<f64>() - 1.0);
            let dec = DMatrix::from_fn(external_dim, code_dim, |_, _| 2.0 * rng.random::<f64>() - 1.0);
            let id = u32::try_from(i).map_err(|_| invalid("too many agents"))?;
            Agent::new(id, LinearCoder::encoder(enc)?, LinearCoder::decoder(dec)?)
        })
        .collect::<Result<Vec<_>>>()?;
    Ensemble::new(members)
}
