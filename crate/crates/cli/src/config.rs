//! Experiment configuration: one `[kind]` section of flat `key = value` pairs.
//!
//! ```toml
//! [analog_sweep]
//! seed = 7
//! output = "runs/sweep"
//! mass = 1.0
//! stiffness = 1.0
//! friction = 0.5
//! amplitude = 1.0
//! points = 50
//! ```

use std::collections::BTreeMap;
use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Kind {
    ParrotTrain,
    Collective,
    DigitalLoop,
    AnalogSweep,
    TuneOscillator,
    TuneNetwork,
    ResonetSpectrum,
    ResonetScaling,
}

impl Kind {
    pub const ALL: [Kind; 8] = [
        Kind::ParrotTrain,
        Kind::Collective,
        Kind::DigitalLoop,
        Kind::AnalogSweep,
        Kind::TuneOscillator,
        Kind::TuneNetwork,
        Kind::ResonetSpectrum,
        Kind::ResonetScaling,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Kind::ParrotTrain => "parrot_train",
            Kind::Collective => "collective",
            Kind::DigitalLoop => "digital_loop",
            Kind::AnalogSweep => "analog_sweep",
            Kind::TuneOscillator => "tune_oscillator",
            Kind::TuneNetwork => "tune_network",
            Kind::ResonetSpectrum => "resonet_spectrum",
            Kind::ResonetScaling => "resonet_scaling",
        }
    }

    fn valid_names() -> String {
        Kind::ALL.map(Kind::name).join(", ")
    }
}

impl fmt::Display for Kind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Kind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        Kind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| format!("unknown kind '{s}'; valid kinds are {}", Kind::valid_names()))
    }
}

/// A parameter value after validation.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(untagged)]
pub enum Value {
    Int(i64),
    Float(f64),
    Str(String),
}

/// One problem found in a config, addressed by `section.key`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub path: String,
    pub message: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.path, self.message)
    }
}

/// Every violation found, in key order.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub struct ConfigErrors(pub Vec<Violation>);

impl fmt::Display for ConfigErrors {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, v) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str("\n")?;
            }
            write!(f, "{v}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub kind: Kind,
    pub seed: u64,
    pub output: PathBuf,
    params: BTreeMap<String, Value>,
}

impl ExperimentConfig {
    /// All parameters, defaults filled in.
    pub fn params(&self) -> &BTreeMap<String, Value> {
        &self.params
    }

    fn get(&self, key: &str) -> Option<&Value> {
        self.params.get(key)
    }

    /// Numeric parameter; integers widen to floats.
    pub fn float(&self, key: &str) -> f64 {
        self.opt_float(key)
            .unwrap_or_else(|| panic!("validated config has no numeric '{key}'"))
    }

    pub fn opt_float(&self, key: &str) -> Option<f64> {
        match self.get(key)? {
            Value::Float(x) => Some(*x),
            Value::Int(i) => Some(*i as f64),
            Value::Str(_) => None,
        }
    }

    pub fn int(&self, key: &str) -> i64 {
        match self.get(key) {
            Some(Value::Int(i)) => *i,
            _ => panic!("validated config has no integer '{key}'"),
        }
    }

    /// Nonnegative integer parameter.
    pub fn count(&self, key: &str) -> usize {
        usize::try_from(self.int(key)).unwrap_or_else(|_| panic!("'{key}' was validated nonnegative"))
    }

    pub fn opt_count(&self, key: &str) -> Option<usize> {
        self.get(key).map(|_| self.count(key))
    }

    pub fn text(&self, key: &str) -> &str {
        self.opt_text(key)
            .unwrap_or_else(|| panic!("validated config has no string '{key}'"))
    }

    pub fn opt_text(&self, key: &str) -> Option<&str> {
        match self.get(key)? {
            Value::Str(s) => Some(s),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy)]
enum Check {
    Any,
    Positive,
    NonNegative,
    /// `[0, 1]`
    Unit,
    /// `(0, 1]`
    Fraction,
    AtLeast(i64),
    Between(i64, i64),
    OneOf(&'static [&'static str]),
    Path,
}

#[derive(Debug, Clone, Copy)]
enum Fallback {
    Required,
    Optional,
    F(f64),
    I(i64),
    S(&'static str),
}

#[derive(Debug, Clone, Copy)]
struct Param {
    key: &'static str,
    check: Check,
    default: Fallback,
}

const fn p(key: &'static str, check: Check, default: Fallback) -> Param {
    Param { key, check, default }
}

use Check::*;
use Fallback::{Optional, Required, F, I, S};

const NETWORK: &[Param] = &[
    p("nodes", AtLeast(1), Required),
    p("edge_prob", Unit, Required),
    p("c_min", Positive, F(0.5)),
    p("c_max", Positive, F(2.0)),
    p("l_min", Positive, F(0.5)),
    p("l_max", Positive, F(2.0)),
    p("r_min", NonNegative, F(0.02)),
    p("r_max", NonNegative, F(0.05)),
];

const TUNER: &[Param] = &[
    p("sigma0", Positive, F(0.5)),
    p("beta", NonNegative, F(3.0)),
    p("window", AtLeast(1), I(10)),
    p("budget", AtLeast(0), I(2000)),
];

fn params_for(kind: Kind) -> Vec<Param> {
    let own: &[Param] = match kind {
        Kind::ParrotTrain => &[
            p("dim", AtLeast(1), Required),
            p("bottleneck", AtLeast(1), Required),
            p("rank", AtLeast(0), Optional),
            p("frames", AtLeast(1), I(200)),
            p("noise", NonNegative, F(0.05)),
            p("data", Path, Optional),
            p("training", OneOf(&["closed_form", "gradient"]), S("closed_form")),
            p("step", Positive, Optional),
            p("max_iters", AtLeast(1), I(100_000)),
        ],
        Kind::Collective => &[
            p("agents", AtLeast(1), Required),
            p("dim", AtLeast(1), Required),
            p("code_dim", AtLeast(1), Required),
            p("frames", AtLeast(1), I(1)),
            p("rounds", AtLeast(0), I(1000)),
            p("tol", Positive, F(1e-8)),
            p("damping", Fraction, F(0.5)),
            p("self_weight", Unit, F(0.5)),
        ],
        Kind::DigitalLoop => &[
            p("words", AtLeast(0), Required),
            p("width", Between(1, 64), Required),
            p("temperature", Positive, F(300.0)),
            p("model", OneOf(&["perfect", "zero", "noisy"]), S("perfect")),
            p("error_rate", Unit, F(0.1)),
            p("input", Path, Optional),
        ],
        Kind::AnalogSweep => &[
            p("mass", Positive, Required),
            p("stiffness", NonNegative, Required),
            p("friction", Positive, Required),
            p("amplitude", Any, Required),
            p("omega_min", Positive, F(0.5)),
            p("omega_max", Positive, F(1.5)),
            p("points", AtLeast(1), I(50)),
            p("dt", Positive, Optional),
            p("settle", NonNegative, F(20.0)),
        ],
        Kind::TuneOscillator => &[
            p("mass", Positive, Required),
            p("friction", Positive, Required),
            p("amplitude", Any, Required),
            p("omega", Positive, Required),
            p("k0", Positive, F(4.0)),
            p("k_min", NonNegative, F(0.25)),
            p("k_max", Positive, F(4.5)),
            p("runs", AtLeast(1), I(1)),
            p("steps_per_period", AtLeast(20), I(200)),
        ],
        Kind::TuneNetwork => &[
            p("omega", Positive, Required),
            p("drive_node", AtLeast(0), I(0)),
            p("amplitude", Any, F(1.0)),
            p("log_range", Positive, F(1.5)),
        ],
        Kind::ResonetSpectrum => &[
            p("sweep_points", AtLeast(0), I(0)),
            p("drive_node", AtLeast(0), I(0)),
            p("amplitude", Any, F(1.0)),
            p("omega_min", Positive, Optional),
            p("omega_max", Positive, Optional),
            p("settle", Positive, F(20.0)),
        ],
        Kind::ResonetScaling => &[
            p("nodes_min", AtLeast(1), I(10)),
            p("nodes_max", AtLeast(1), I(60)),
            p("nodes_step", AtLeast(1), I(1)),
            p("edge_prob", Unit, F(0.9)),
            p("c_min", Positive, F(0.5)),
            p("c_max", Positive, F(2.0)),
            p("l_min", Positive, F(0.5)),
            p("l_max", Positive, F(2.0)),
            p("r_min", NonNegative, F(0.02)),
            p("r_max", NonNegative, F(0.05)),
        ],
    };
    let mut all = own.to_vec();
    match kind {
        Kind::TuneOscillator => all.extend_from_slice(TUNER),
        Kind::TuneNetwork => {
            all.extend_from_slice(NETWORK);
            all.push(p("sigma0", Positive, F(0.2)));
            all.extend_from_slice(&TUNER[1..]);
        }
        Kind::ResonetSpectrum => all.extend_from_slice(NETWORK),
        _ => {}
    }
    all
}

fn expected_form(check: Check) -> String {
    match check {
        Any => "a finite number".into(),
        Positive => "a positive number".into(),
        NonNegative => "a nonnegative number".into(),
        Unit => "a number in [0, 1]".into(),
        Fraction => "a number in (0, 1]".into(),
        AtLeast(n) => format!("an integer >= {n}"),
        Between(a, b) => format!("an integer in [{a}, {b}]"),
        OneOf(choices) => format!("one of {}", choices.join(", ")),
        Path => "a file path string".into(),
    }
}

fn type_name(v: &toml::Value) -> &'static str {
    match v {
        toml::Value::String(_) => "a string",
        toml::Value::Integer(_) => "an integer",
        toml::Value::Float(_) => "a float",
        toml::Value::Boolean(_) => "a boolean",
        toml::Value::Datetime(_) => "a datetime",
        toml::Value::Array(_) => "an array",
        toml::Value::Table(_) => "a table",
    }
}

/// Checks one raw value; `Err` carries the message without the path.
fn check_value(key: &str, check: Check, raw: &toml::Value) -> Result<Value, String> {
    let mismatch = || format!("expected {}, got {}", expected_form(check), type_name(raw));
    match check {
        OneOf(choices) => {
            let s = raw.as_str().ok_or_else(mismatch)?;
            if choices.contains(&s) {
                Ok(Value::Str(s.to_string()))
            } else {
                Err(format!("{key} must be one of {} (got '{s}')", choices.join(", ")))
            }
        }
        Path => raw
            .as_str()
            .map(|s| Value::Str(s.to_string()))
            .ok_or_else(mismatch),
        AtLeast(lo) => {
            let i = raw.as_integer().ok_or_else(mismatch)?;
            if i < lo {
                Err(format!("{key} must be at least {lo} (got {i})"))
            } else {
                Ok(Value::Int(i))
            }
        }
        Between(lo, hi) => {
            let i = raw.as_integer().ok_or_else(mismatch)?;
            if !(lo..=hi).contains(&i) {
                Err(format!("{key} must lie in [{lo}, {hi}] (got {i})"))
            } else {
                Ok(Value::Int(i))
            }
        }
        Any | Positive | NonNegative | Unit | Fraction => {
            let x = match raw {
                toml::Value::Integer(i) => *i as f64,
                toml::Value::Float(x) => *x,
                _ => return Err(mismatch()),
            };
            let ok = match check {
                Positive => x > 0.0,
                NonNegative => x >= 0.0,
                Unit => (0.0..=1.0).contains(&x),
                Fraction => x > 0.0 && x <= 1.0,
                _ => true,
            };
            if !x.is_finite() {
                Err(format!("{key} must be finite (got {x})"))
            } else if !ok {
                let rule = match check {
                    Positive => "be positive",
                    NonNegative => "be nonnegative",
                    Unit => "lie in [0, 1]",
                    _ => "lie in (0, 1]",
                };
                Err(format!("{key} must {rule} (got {x})"))
            } else {
                Ok(Value::Float(x))
            }
        }
    }
}

fn violation(path: impl Into<String>, message: impl Into<String>) -> Violation {
    Violation {
        path: path.into(),
        message: message.into(),
    }
}

/// Parses and checks a config, reporting every violation rather than the first.
pub fn validate_config(raw: &str) -> Result<ExperimentConfig, ConfigErrors> {
    let table: toml::Table =
        toml::from_str(raw).map_err(|e| ConfigErrors(vec![violation("config", format!("not valid key-value text: {}", e.message()))]))?;

    let mut errors = Vec::new();
    let mut sections = Vec::new();
    for (name, value) in &table {
        match value {
            toml::Value::Table(t) => sections.push((name, t)),
            _ => errors.push(violation(name.as_str(), "top-level keys must sit inside an experiment section")),
        }
    }
    let (name, body) = match sections.as_slice() {
        [one] => *one,
        [] => {
            errors.push(violation(
                "config",
                format!("no experiment section; expected one of {}", Kind::valid_names()),
            ));
            return Err(ConfigErrors(errors));
        }
        many => {
            let names: Vec<&str> = many.iter().map(|(n, _)| n.as_str()).collect();
            errors.push(violation(
                "config",
                format!("one experiment per file, found sections {}", names.join(", ")),
            ));
            return Err(ConfigErrors(errors));
        }
    };
    let kind = match name.parse::<Kind>() {
        Ok(k) => k,
        Err(msg) => {
            errors.push(violation(name.as_str(), msg));
            return Err(ConfigErrors(errors));
        }
    };

    let at = |key: &str| format!("{kind}.{key}");
    let seed = match body.get("seed") {
        None => {
            errors.push(violation(at("seed"), "missing required key (expected a nonnegative integer)"));
            None
        }
        Some(toml::Value::Integer(i)) if *i >= 0 => Some(*i as u64),
        Some(other) => {
            errors.push(violation(
                at("seed"),
                format!("expected a nonnegative integer, got {}", type_name(other)),
            ));
            None
        }
    };
    let output = match body.get("output") {
        None => Some(PathBuf::from("output").join(kind.name())),
        Some(toml::Value::String(s)) if !s.is_empty() => Some(PathBuf::from(s)),
        Some(other) => {
            errors.push(violation(at("output"), format!("expected a directory path string, got {}", type_name(other))));
            None
        }
    };

    let allowed = params_for(kind);
    let mut params = BTreeMap::new();
    for param in &allowed {
        match body.get(param.key) {
            Some(raw) => match check_value(param.key, param.check, raw) {
                Ok(v) => {
                    params.insert(param.key.to_string(), v);
                }
                Err(msg) => errors.push(violation(at(param.key), msg)),
            },
            None => match param.default {
                Required => errors.push(violation(
                    at(param.key),
                    format!("missing required key (expected {})", expected_form(param.check)),
                )),
                Optional => {}
                F(x) => {
                    params.insert(param.key.to_string(), Value::Float(x));
                }
                I(i) => {
                    params.insert(param.key.to_string(), Value::Int(i));
                }
                S(s) => {
                    params.insert(param.key.to_string(), Value::Str(s.to_string()));
                }
            },
        }
    }
    for key in body.keys() {
        if key != "seed" && key != "output" && !allowed.iter().any(|s| s.key == key) {
            let known: Vec<&str> = allowed.iter().map(|s| s.key).collect();
            errors.push(violation(
                at(key),
                format!("unknown key; keys for {kind} are seed, output, {}", known.join(", ")),
            ));
        }
    }

    let (Some(seed), Some(output)) = (seed, output) else {
        return Err(ConfigErrors(errors));
    };
    if !errors.is_empty() {
        return Err(ConfigErrors(errors));
    }
    let cfg = ExperimentConfig {
        kind,
        seed,
        output,
        params,
    };
    let cross = cross_checks(&cfg);
    if cross.is_empty() {
        Ok(cfg)
    } else {
        Err(ConfigErrors(cross.into_iter().map(|(k, m)| violation(at(k), m)).collect()))
    }
}

/// Constraints between keys, checked once every key is individually valid.
fn cross_checks(cfg: &ExperimentConfig) -> Vec<(&'static str, String)> {
    let mut out = Vec::new();
    let mut order = |lo: &'static str, hi: &'static str, strict: bool| {
        if let (Some(a), Some(b)) = (cfg.opt_float(lo), cfg.opt_float(hi)) {
            if a > b || (strict && a == b) {
                let rel = if strict { "below" } else { "at most" };
                out.push((lo, format!("{lo} must be {rel} {hi} ({a} vs {b})")));
            }
        }
    };
    match cfg.kind {
        Kind::ParrotTrain => {
            order("bottleneck", "dim", false);
            order("rank", "dim", false);
        }
        Kind::Collective => order("code_dim", "dim", false),
        Kind::AnalogSweep => order("omega_min", "omega_max", false),
        Kind::TuneOscillator => {
            order("k_min", "k_max", true);
            order("k_min", "k0", false);
            order("k0", "k_max", false);
        }
        Kind::ResonetScaling => {
            order("nodes_min", "nodes_max", true);
            order("c_min", "c_max", false);
            order("l_min", "l_max", false);
            order("r_min", "r_max", false);
        }
        Kind::TuneNetwork | Kind::ResonetSpectrum => {
            order("c_min", "c_max", false);
            order("l_min", "l_max", false);
            order("r_min", "r_max", false);
            order("omega_min", "omega_max", true);
        }
        Kind::DigitalLoop => {}
    }
    if matches!(cfg.kind, Kind::TuneNetwork | Kind::ResonetSpectrum) && cfg.int("drive_node") >= cfg.int("nodes") {
        out.push(("drive_node", format!("drive_node must be below nodes ({})", cfg.int("nodes"))));
    }
    if cfg.kind == Kind::ResonetScaling && cfg.int("nodes_min") < 2 {
        out.push(("nodes_min", "nodes_min must be at least 2 for a fit".into()));
    }
    if let (Some(lo), Some(hi)) = (cfg.opt_float("r_min"), cfg.opt_float("r_max")) {
        if lo == 0.0 && hi > 0.0 {
            out.push(("r_min", "r_min must be positive unless r_max is also 0 (lossless)".into()));
        }
    }
    out
}
