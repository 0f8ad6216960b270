//! Digital resonance: reversible subtraction, Landauer bookkeeping and energy extraction.
//!
//! The external word `F` and the internally generated word `f` pass through a reversible
//! subtractor that keeps `f` alongside `F - f`, so no information is lost and the stage is
//! energy neutral. The residual bits are then fed to an extraction unit that predicts every
//! bit to be zero: a correct prediction yields `k_B T ln 2`, a wrong one costs the same to
//! reset the cell. Extracted cells are refilled with random bits, which is free.

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::csvio;
use crate::error::invalid;
use crate::{Error, Result};

/// Boltzmann constant, J/K (exact SI value).
pub const BOLTZMANN: f64 = 1.380649e-23;
pub const DEFAULT_TEMPERATURE: f64 = 300.0;
pub const DEFAULT_WIDTH: u32 = 8;

/// An unsigned word of `width` bits.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct BitWord {
    value: u64,
    width: u32,
}

impl BitWord {
    pub fn new(value: u64, width: u32) -> Result<Self> {
        if !(1..=64).contains(&width) {
            return Err(invalid(format!("word width must be in 1..=64, got {width}")));
        }
        if width < 64 && value >> width != 0 {
            return Err(invalid(format!("value {value} does not fit in {width} bits")));
        }
        Ok(BitWord { value, width })
    }

    pub fn value(self) -> u64 {
        self.value
    }

    pub fn width(self) -> u32 {
        self.width
    }

    fn mask(width: u32) -> u64 {
        if width == 64 {
            u64::MAX
        } else {
            (1 << width) - 1
        }
    }

    /// Bits from most to least significant.
    pub fn bits(self) -> impl Iterator<Item = bool> {
        (0..self.width).rev().map(move |i| (self.value >> i) & 1 == 1)
    }
}

fn same_width(a: BitWord, b: BitWord) -> Result<()> {
    if a.width == b.width {
        Ok(())
    } else {
        Err(invalid(format!("word widths differ ({} vs {})", a.width, b.width)))
    }
}

/// `(F, f) -> ((F - f) mod 2^w, f)`; a bijection on pairs of `w`-bit words.
pub fn reversible_subtract(external: BitWord, internal: BitWord) -> Result<(BitWord, BitWord)> {
    same_width(external, internal)?;
    let w = external.width;
    let diff = external.value.wrapping_sub(internal.value) & BitWord::mask(w);
    Ok((BitWord { value: diff, width: w }, internal))
}

/// Inverse of [`reversible_subtract`].
pub fn reversible_restore(diff: BitWord, keep: BitWord) -> Result<(BitWord, BitWord)> {
    same_width(diff, keep)?;
    let w = diff.width;
    let external = diff.value.wrapping_add(keep.value) & BitWord::mask(w);
    Ok((BitWord { value: external, width: w }, keep))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Transaction {
    /// Reset of unknown content: costs `k_B T ln 2` per bit.
    Erase,
    /// Writing known content into an unknown cell: costs `k_B T ln 2` per bit.
    WriteKnown,
    /// Scrambling a cell: free.
    Randomize,
    /// Harvesting a correctly predicted bit: yields `k_B T ln 2`.
    ExtractPredicted,
}

/// Running energy account at a fixed temperature.
///
/// Only bit counts are stored; the energy is always recomputed from them, so it equals
/// `(extracted - erased - written) k_B T ln 2` for every sequence of transactions.
#[derive(Debug, Clone, PartialEq)]
pub struct EnergyLedger {
    temperature: f64,
    pub n_extracted: u64,
    pub n_erased: u64,
    pub n_written: u64,
    pub n_randomized: u64,
}

impl EnergyLedger {
    pub fn new(temperature: f64) -> Result<Self> {
        if !(temperature > 0.0 && temperature.is_finite()) {
            return Err(invalid("temperature must be positive and finite"));
        }
        Ok(EnergyLedger {
            temperature,
            n_extracted: 0,
            n_erased: 0,
            n_written: 0,
            n_randomized: 0,
        })
    }

    pub fn temperature(&self) -> f64 {
        self.temperature
    }

    /// `k_B T ln 2`, the energy of one bit.
    pub fn bit_energy(&self) -> f64 {
        BOLTZMANN * self.temperature * std::f64::consts::LN_2
    }

    /// Accumulated energy in joules; positive means gained.
    pub fn joules(&self) -> f64 {
        let net = self.n_extracted as i128 - self.n_erased as i128 - self.n_written as i128;
        net as f64 * self.bit_energy()
    }

    pub fn record(&mut self, kind: Transaction, n_bits: u64) -> Result<()> {
        let counter = match kind {
            Transaction::Erase => &mut self.n_erased,
            Transaction::WriteKnown => &mut self.n_written,
            Transaction::Randomize => &mut self.n_randomized,
            Transaction::ExtractPredicted => &mut self.n_extracted,
        };
        *counter = counter
            .checked_add(n_bits)
            .ok_or_else(|| invalid("bit counter overflow"))?;
        Ok(())
    }

    /// Writes the `temperature_K,joules,n_extracted,n_erased,n_written,n_randomized` CSV.
    pub fn write_csv<W: Write>(&self, w: &mut W) -> std::io::Result<()> {
        csvio::write_row(
            w,
            &["temperature_K", "joules", "n_extracted", "n_erased", "n_written", "n_randomized"],
        )?;
        csvio::write_row(
            w,
            &[
                csvio::fmt_f64(self.temperature),
                csvio::fmt_f64(self.joules()),
                self.n_extracted.to_string(),
                self.n_erased.to_string(),
                self.n_written.to_string(),
                self.n_randomized.to_string(),
            ],
        )
    }
}

impl Default for EnergyLedger {
    fn default() -> Self {
        EnergyLedger::new(DEFAULT_TEMPERATURE).expect("default temperature is valid")
    }
}

/// Applies one transaction of `n_bits` to a copy of the ledger.
pub fn ledger_transact(ledger: &EnergyLedger, kind: Transaction, n_bits: i64) -> Result<EnergyLedger> {
    let n = u64::try_from(n_bits).map_err(|_| invalid(format!("bit count must be nonnegative, got {n_bits}")))?;
    let mut next = ledger.clone();
    next.record(kind, n)?;
    Ok(next)
}

/// A sequence of bits, written as a line of `0`/`1` characters.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ResidualStream {
    pub bits: Vec<bool>,
}

impl ResidualStream {
    pub fn new(bits: Vec<bool>) -> Self {
        ResidualStream { bits }
    }

    pub fn zeros(n: usize) -> Self {
        ResidualStream { bits: vec![false; n] }
    }

    pub fn from_words(words: &[BitWord]) -> Self {
        ResidualStream {
            bits: words.iter().flat_map(|w| w.bits()).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    pub fn count_ones(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }
}

impl fmt::Display for ResidualStream {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &b in &self.bits {
            f.write_str(if b { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl FromStr for ResidualStream {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        s.trim()
            .chars()
            .enumerate()
            .map(|(i, c)| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                other => Err(Error::Parse(format!("bit {i}: '{other}' is not 0 or 1"))),
            })
            .collect::<Result<Vec<_>>>()
            .map(ResidualStream::new)
    }
}

/// Harvests a residual stream under the constant-zero prediction.
///
/// Each zero bit is extracted, each one bit is erased, and every cell is refilled with a
/// random bit drawn in stream order from a generator seeded with `seed`.
pub fn extract_from_residual(
    stream: &ResidualStream,
    ledger: &EnergyLedger,
    seed: u64,
) -> (ResidualStream, EnergyLedger) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut next = ledger.clone();
    let ones = stream.count_ones() as u64;
    let zeros = stream.len() as u64 - ones;
    let out: Vec<bool> = stream.bits.iter().map(|_| rng.random::<bool>()).collect();
    // counters saturate only past 2^64 bits, far beyond any stream held in memory
    next.record(Transaction::ExtractPredicted, zeros).expect("counter overflow");
    next.record(Transaction::Erase, ones).expect("counter overflow");
    next.record(Transaction::Randomize, stream.len() as u64).expect("counter overflow");
    (ResidualStream::new(out), next)
}

#[derive(Debug, Clone)]
pub struct LoopOutcome {
    /// Energy gained during this run (J).
    pub net_joules: f64,
    pub ledger: EnergyLedger,
    /// `F - f` for every word.
    pub residual: Vec<BitWord>,
    /// Randomized bits left behind by the extraction unit.
    pub output: ResidualStream,
}

/// Matches an external word stream against the model stream and harvests the residual.
///
/// The subtract stage is reversible and leaves the ledger untouched; all energy flow comes
/// from extraction of the residual bits (most significant bit first, word by word).
pub fn run_digital_loop(
    external: &[BitWord],
    model: &[BitWord],
    ledger: &EnergyLedger,
    seed: u64,
) -> Result<LoopOutcome> {
    if external.len() != model.len() {
        return Err(Error::DimensionMismatch {
            context: "model stream length",
            expected: external.len(),
            found: model.len(),
        });
    }
    let residual = external
        .iter()
        .zip(model)
        .map(|(&big, &small)| reversible_subtract(big, small).map(|(d, _)| d))
        .collect::<Result<Vec<_>>>()?;
    let (output, after) = extract_from_residual(&ResidualStream::from_words(&residual), ledger, seed);
    Ok(LoopOutcome {
        net_joules: after.joules() - ledger.joules(),
        ledger: after,
        residual,
        output,
    })
}

/// `n` words of `width` bits, uniform over the word range.
pub fn random_words(n: usize, width: u32, seed: u64) -> Result<Vec<BitWord>> {
    BitWord::new(0, width)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mask = if width == 64 { u64::MAX } else { (1u64 << width) - 1 };
    (0..n).map(|_| BitWord::new(rng.random::<u64>() & mask, width)).collect()
}

/// Copy of `words` with each bit flipped independently with probability `flip_prob`.
pub fn noisy_copy(words: &[BitWord], flip_prob: f64, seed: u64) -> Result<Vec<BitWord>> {
    if !(0.0..=1.0).contains(&flip_prob) {
        return Err(invalid(format!("flip probability must lie in [0, 1], got {flip_prob}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    words
        .iter()
        .map(|w| {
            let flips = (0..w.width).fold(0u64, |acc, bit| {
                if rng.random::<f64>() < flip_prob {
                    acc | (1 << bit)
                } else {
                    acc
                }
            });
            BitWord::new(w.value ^ flips, w.width)
        })
        .collect()
}

/// Contents of a bitstream file.
#[derive(Debug, Clone, PartialEq)]
pub enum Bitstream {
    Bits(ResidualStream),
    Words(Vec<BitWord>),
}

/// Parses either a single line of `0`/`1` characters, or a hex word list whose first line
/// declares the width as `width=<bits>` followed by whitespace-separated hex words.
pub fn parse_bitstream(text: &str) -> Result<Bitstream> {
    let mut lines = text.lines().map(str::trim).filter(|l| !l.is_empty() && !l.starts_with('#'));
    let Some(first) = lines.next() else {
        return Ok(Bitstream::Bits(ResidualStream::default()));
    };
    if let Some(w) = first.strip_prefix("width=") {
        let width: u32 = w
            .trim()
            .parse()
            .map_err(|_| Error::Parse(format!("bad width declaration '{first}'")))?;
        let words = lines
            .flat_map(str::split_whitespace)
            .map(|tok| {
                let hex = tok.trim_start_matches("0x").trim_start_matches("0X");
                let v = u64::from_str_radix(hex, 16)
                    .map_err(|_| Error::Parse(format!("'{tok}' is not a hex word")))?;
                BitWord::new(v, width)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Bitstream::Words(words))
    } else {
        if lines.next().is_some() {
            return Err(Error::Parse("a bit stream must be a single line".into()));
        }
        Ok(Bitstream::Bits(first.parse()?))
    }
}

/// Writes the hex word format read by [`parse_bitstream`].
pub fn write_words_hex<W: Write>(w: &mut W, words: &[BitWord], width: u32) -> std::io::Result<()> {
    writeln!(w, "width={width}")?;
    let digits = width.div_ceil(4) as usize;
    for word in words {
        writeln!(w, "{:0digits$x}", word.value)?;
    }
    Ok(())
}
