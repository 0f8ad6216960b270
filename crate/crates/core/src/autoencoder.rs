//! Linear classical and parroting autoencoders.
//!
//! A classical autoencoder reconstructs an external frame `F` as `F' = D(b) E(a) F` and is
//! trained against the external error `d(F, F')`. The parroting variant re-encodes its own
//! reconstruction, `f' = E(a) F'`, and trains the decoder on the internal error `d(f', f)`
//! alone. The encoder is trained separately on a criterion that only looks at the statistics
//! of `F` (retained variance at a fixed bottleneck).
//!
//! All distances are mean squared errors.

use std::io::{Read, Write};

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::csvio;
use crate::error::{check_dim, invalid};
use crate::linalg::{mse, mse_mat, pinv, row_space_projector};
use crate::{Error, Result};

/// Objective improvement below which gradient training stops.
pub const CONVERGENCE_TOL: f64 = 1e-10;

/// A fixed-length vector of finite real samples.
#[derive(Debug, Clone, PartialEq)]
pub struct Frame(DVector<f64>);

impl Frame {
    pub fn new(samples: Vec<f64>) -> Result<Self> {
        Self::from_vector(DVector::from_vec(samples))
    }

    pub fn from_vector(v: DVector<f64>) -> Result<Self> {
        if v.is_empty() {
            return Err(invalid("frame must have at least one sample"));
        }
        if let Some(i) = v.iter().position(|x| !x.is_finite()) {
            return Err(invalid(format!("frame sample {i} is not finite")));
        }
        Ok(Frame(v))
    }

    pub fn zeros(dim: usize) -> Self {
        Frame(DVector::zeros(dim.max(1)))
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn samples(&self) -> &[f64] {
        self.0.as_slice()
    }

    pub fn as_vector(&self) -> &DVector<f64> {
        &self.0
    }

    pub fn into_vector(self) -> DVector<f64> {
        self.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Role {
    Encoder,
    Decoder,
}

/// A linear map with tunable entries, tagged as encoder or decoder.
///
/// Encoders never widen the signal: `rows <= cols`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearCoder {
    weights: DMatrix<f64>,
    role: Role,
}

impl LinearCoder {
    pub fn new(weights: DMatrix<f64>, role: Role) -> Result<Self> {
        if weights.is_empty() {
            return Err(invalid("coder matrix must be non-empty"));
        }
        if weights.iter().any(|x| !x.is_finite()) {
            return Err(invalid("coder entries must be finite"));
        }
        if role == Role::Encoder && weights.nrows() > weights.ncols() {
            return Err(invalid(format!(
                "encoder must not widen the signal ({} rows > {} cols)",
                weights.nrows(),
                weights.ncols()
            )));
        }
        Ok(LinearCoder { weights, role })
    }

    pub fn encoder(weights: DMatrix<f64>) -> Result<Self> {
        Self::new(weights, Role::Encoder)
    }

    pub fn decoder(weights: DMatrix<f64>) -> Result<Self> {
        Self::new(weights, Role::Decoder)
    }

    pub fn identity(dim: usize, role: Role) -> Self {
        LinearCoder {
            weights: DMatrix::identity(dim, dim),
            role,
        }
    }

    pub fn weights(&self) -> &DMatrix<f64> {
        &self.weights
    }

    pub fn rows(&self) -> usize {
        self.weights.nrows()
    }

    pub fn cols(&self) -> usize {
        self.weights.ncols()
    }

    pub fn role(&self) -> Role {
        self.role
    }

    pub fn write_csv<W: Write>(&self, w: &mut W) -> std::io::Result<()> {
        csvio::write_matrix(w, &self.weights)
    }

    pub fn read_csv<R: Read>(r: R, role: Role) -> Result<Self> {
        Self::new(csvio::read_matrix(r)?, role)
    }
}

/// A non-empty population of frames sharing one dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    frames: Vec<Frame>,
}

impl Dataset {
    pub fn new(frames: Vec<Frame>) -> Result<Self> {
        let first = frames
            .first()
            .ok_or_else(|| invalid("dataset must contain at least one frame"))?;
        let dim = first.dim();
        for f in &frames {
            check_dim("dataset frame", dim, f.dim())?;
        }
        Ok(Dataset { frames })
    }

    /// Builds a dataset from the columns of `m` (one frame per column).
    pub fn from_columns(m: &DMatrix<f64>) -> Result<Self> {
        let frames = m
            .column_iter()
            .map(|c| Frame::from_vector(c.into_owned()))
            .collect::<Result<Vec<_>>>()?;
        Self::new(frames)
    }

    pub fn frames(&self) -> &[Frame] {
        &self.frames
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.frames[0].dim()
    }

    /// Frames as matrix columns (`dim × len`).
    pub fn to_matrix(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.dim(), self.len(), |i, j| self.frames[j].0[i])
    }

    /// Population covariance of the frames (mean removed, divided by `len`).
    pub fn covariance(&self) -> DMatrix<f64> {
        let x = self.to_matrix();
        let n = self.len() as f64;
        let mean = x.column_mean();
        let mut centered = x;
        for mut col in centered.column_iter_mut() {
            col -= &mean;
        }
        &centered * centered.transpose() / n
    }

    /// Writes the `s0,s1,...` header followed by one frame per row.
    pub fn write_csv<W: Write>(&self, w: &mut W) -> std::io::Result<()> {
        let header: Vec<String> = (0..self.dim()).map(|i| format!("s{i}")).collect();
        csvio::write_row(w, &header)?;
        for f in &self.frames {
            let row: Vec<String> = f.samples().iter().map(|&x| csvio::fmt_f64(x)).collect();
            csvio::write_row(w, &row)?;
        }
        Ok(())
    }

    pub fn read_csv<R: Read>(r: R) -> Result<Self> {
        let (header, rows) = csvio::read_rows(r, true)?;
        let header = header.unwrap_or_default();
        for (i, h) in header.iter().enumerate() {
            if *h != format!("s{i}") {
                return Err(Error::Parse(format!("header column {i} should be 's{i}', found '{h}'")));
            }
        }
        let frames = rows
            .into_iter()
            .map(|row| {
                check_dim("dataset row", header.len(), row.len())?;
                Frame::new(row)
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(frames)
    }
}

/// Signals and errors of one pass through the parroting loop.
#[derive(Debug, Clone, PartialEq)]
pub struct ParrotReport {
    /// `f = E(a) F`
    pub code: Frame,
    /// `f' = E(a) F'`, the encoder hearing its own output
    pub recode: Frame,
    /// `F' = D(b) f`
    pub reconstruction: Frame,
    /// `d(F, F')`
    pub external_error: f64,
    /// `d(f', f)`
    pub internal_error: f64,
}

pub fn encode(coder: &LinearCoder, frame: &Frame) -> Result<Frame> {
    if coder.role != Role::Encoder {
        return Err(invalid("encode needs an encoder"));
    }
    apply(coder, frame, "encoder input")
}

pub fn decode(coder: &LinearCoder, code: &Frame) -> Result<Frame> {
    if coder.role != Role::Decoder {
        return Err(invalid("decode needs a decoder"));
    }
    apply(coder, code, "decoder input")
}

fn apply(coder: &LinearCoder, frame: &Frame, context: &'static str) -> Result<Frame> {
    check_dim(context, coder.cols(), frame.dim())?;
    Ok(Frame(&coder.weights * &frame.0))
}

/// Runs `F -> f -> F' -> f'` and reports both the external and the internal error.
pub fn parrot_cycle(a: &LinearCoder, b: &LinearCoder, frame: &Frame) -> Result<ParrotReport> {
    check_dim("decoder output", frame.dim(), b.rows())?;
    let code = encode(a, frame)?;
    let reconstruction = decode(b, &code)?;
    let recode = encode(a, &reconstruction)?;
    Ok(ParrotReport {
        external_error: mse(&frame.0, &reconstruction.0),
        internal_error: mse(&code.0, &recode.0),
        code,
        recode,
        reconstruction,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DecoderTraining {
    /// Minimal-norm least squares.
    ClosedForm,
    /// Plain gradient descent from the zero decoder.
    Gradient { step: f64, max_iters: usize },
}

#[derive(Debug, Clone)]
pub struct DecoderFit {
    pub decoder: LinearCoder,
    /// Mean internal error over the dataset.
    pub objective: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Set when every code in the dataset is zero; the decoder is then all-zero.
    pub degenerate: bool,
}

/// Mean internal error `d(E b E F, E F)` over the dataset.
pub fn internal_objective(a: &LinearCoder, b: &LinearCoder, data: &Dataset) -> Result<f64> {
    check_dim("encoder input", a.cols(), data.dim())?;
    check_dim("decoder input", a.rows(), b.cols())?;
    check_dim("decoder output", a.cols(), b.rows())?;
    let codes = a.weights() * data.to_matrix();
    let recodes = a.weights() * b.weights() * &codes;
    Ok(mse_mat(&recodes, &codes))
}

/// The step `1/L` for the internal objective, `L` being the Lipschitz constant of its gradient.
pub fn gradient_step_bound(a: &LinearCoder, data: &Dataset) -> f64 {
    let codes = a.weights() * data.to_matrix();
    let scale = 2.0 / codes.len() as f64;
    let lip = scale * spectral_norm_sq(a.weights()) * spectral_norm_sq(&codes);
    if lip > 0.0 {
        1.0 / lip
    } else {
        f64::INFINITY
    }
}

fn spectral_norm_sq(m: &DMatrix<f64>) -> f64 {
    let s = m.singular_values().max();
    s * s
}

/// Trains the decoder on the internal error with the encoder held fixed.
pub fn train_decoder(a: &LinearCoder, data: &Dataset, mode: DecoderTraining) -> Result<DecoderFit> {
    check_dim("encoder input", a.cols(), data.dim())?;
    let aw = a.weights();
    let codes = aw * data.to_matrix();
    let (k, d) = (a.rows(), a.cols());

    if codes.iter().all(|&x| x == 0.0) {
        return Ok(DecoderFit {
            decoder: LinearCoder::decoder(DMatrix::zeros(d, k))?,
            objective: 0.0,
            iterations: 0,
            converged: true,
            degenerate: true,
        });
    }

    let objective = |b: &DMatrix<f64>| mse_mat(&(aw * b * &codes), &codes);

    match mode {
        DecoderTraining::ClosedForm => {
            // min ||A B C - C||_F has minimal-norm solution B = A⁺ C C⁺
            let b = pinv(aw) * &codes * pinv(&codes);
            let obj = objective(&b);
            Ok(DecoderFit {
                decoder: LinearCoder::decoder(b)?,
                objective: obj,
                iterations: 0,
                converged: true,
                degenerate: false,
            })
        }
        DecoderTraining::Gradient { step, max_iters } => {
            if !(step > 0.0 && step.is_finite()) {
                return Err(invalid("gradient step must be positive and finite"));
            }
            let scale = 2.0 / codes.len() as f64;
            let at = aw.transpose();
            let ct = codes.transpose();
            let mut b = DMatrix::zeros(d, k);
            let mut obj = objective(&b);
            let mut converged = false;
            let mut iterations = 0;
            while iterations < max_iters {
                let resid = aw * &b * &codes - &codes;
                let grad = &at * resid * &ct * scale;
                b -= grad * step;
                iterations += 1;
                let next = objective(&b);
                if !next.is_finite() {
                    return Err(Error::NonFinite(crate::Location::Step(iterations)));
                }
                let improvement = obj - next;
                obj = next;
                if improvement.abs() < CONVERGENCE_TOL {
                    converged = true;
                    break;
                }
            }
            Ok(DecoderFit {
                decoder: LinearCoder::decoder(b)?,
                objective: obj,
                iterations,
                converged,
                degenerate: false,
            })
        }
    }
}

/// Principal-subspace encoder: the top `bottleneck` covariance eigenvectors as rows.
///
/// Rows are ordered by decreasing eigenvalue and signed so that each row's
/// largest-magnitude entry is positive.
pub fn train_encoder(data: &Dataset, bottleneck: usize) -> Result<LinearCoder> {
    let dim = data.dim();
    if bottleneck == 0 || bottleneck > dim {
        return Err(invalid(format!(
            "bottleneck must be in 1..={dim}, got {bottleneck}"
        )));
    }
    let eig = SymmetricEigen::new(data.covariance());
    let mut order: Vec<usize> = (0..dim).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[j].total_cmp(&eig.eigenvalues[i]));

    let mut w = DMatrix::zeros(bottleneck, dim);
    for (r, &idx) in order.iter().take(bottleneck).enumerate() {
        let mut v = eig.eigenvectors.column(idx).into_owned();
        let lead = v.iter().copied().fold(0.0_f64, |m, x| if x.abs() > m.abs() { x } else { m });
        if lead < 0.0 {
            v = -v;
        }
        w.set_row(r, &v.transpose());
    }
    LinearCoder::encoder(w)
}

/// Fraction of the dataset's total variance captured by the encoder's row space.
///
/// A dataset without variance loses nothing and scores 1.
pub fn compression_rate(a: &LinearCoder, data: &Dataset) -> Result<f64> {
    check_dim("encoder input", a.cols(), data.dim())?;
    let cov = data.covariance();
    let total = cov.trace();
    let scale = data.frames().iter().map(|f| f.0.norm_squared()).sum::<f64>() / data.len() as f64;
    if total <= 1e-24 * (1.0 + scale) {
        return Ok(1.0);
    }
    let p = row_space_projector(a.weights());
    let kept = (p * cov).trace();
    Ok((kept / total).clamp(0.0, 1.0))
}

/// Frames `M z + e` with a fixed `dim × rank` mixing `M`, latent `z` uniform on `[-1, 1]` and
/// noise `e` uniform on `[-noise, noise]`.
pub fn synthetic_dataset(dim: usize, rank: usize, frames: usize, noise: f64, seed: u64) -> Result<Dataset> {
    if dim == 0 || frames == 0 {
        return Err(invalid("need at least one dimension and one frame"));
    }
    if rank > dim {
        return Err(invalid(format!("rank {rank} exceeds dimension {dim}")));
    }
    if !(noise >= 0.0 && noise.is_finite()) {
        return Err(invalid(format!("noise must be nonnegative, got {noise}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut uniform = move || 2.0 * rng.random::<f64>() - 1.0;
    let mixing = DMatrix::from_fn(dim, rank, |_, _| uniform());
    let mut out = Vec::with_capacity(frames);
    for _ in 0..frames {
        let z = DVector::from_fn(rank, |_, _| uniform());
        let e = DVector::from_fn(dim, |_, _| noise * uniform());
        out.push(Frame(&mixing * z + e));
    }
    Dataset::new(out)
}
