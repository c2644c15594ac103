//! Experiment files: line-oriented `key = value`, `#` comments, and one
//! `[method.<label>]` section per optimizer.
//!
//! ```text
//! name = diag100
//! objective = quadratic
//! synth = diagonal
//! dim = 2
//! cond = 100
//! init = ones
//! seed = 0
//! max_oracle_calls = 2000
//! output_dir = out
//!
//! [method.gd_ls]
//! [method.mb_ellipsoid]
//! forward_step = false
//! ```

use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::dataio::SynthKind;
use crate::error::{Error, Result};
use crate::numkit::DiagPreconditioner;
use crate::optimizers::{Method, PrecondSource, RunConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ObjectiveKind {
    Quadratic,
    LinearRegression,
    LogisticRegression,
}

impl ObjectiveKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ObjectiveKind::Quadratic => "quadratic",
            ObjectiveKind::LinearRegression => "linear_regression",
            ObjectiveKind::LogisticRegression => "logistic_regression",
        }
    }
}

impl FromStr for ObjectiveKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "quadratic" => Ok(ObjectiveKind::Quadratic),
            "linear_regression" => Ok(ObjectiveKind::LinearRegression),
            "logistic_regression" => Ok(ObjectiveKind::LogisticRegression),
            other => Err(Error::Config(format!("unknown objective `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ProblemSource {
    Synth { kind: SynthKind, dim: usize, cond: f64 },
    /// Dense matrix file, as read by the `oracle` subcommand.
    Matrix(PathBuf),
    Dataset { path: PathBuf, bias: bool },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StartPoint {
    Ones,
    Zeros,
    Gaussian,
    /// Bias weight at the label MLE, zeros elsewhere.
    Bias,
}

impl FromStr for StartPoint {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ones" => Ok(StartPoint::Ones),
            "zeros" => Ok(StartPoint::Zeros),
            "gaussian" => Ok(StartPoint::Gaussian),
            "bias" => Ok(StartPoint::Bias),
            other => Err(Error::Config(format!("unknown init `{other}`"))),
        }
    }
}

/// Per-method settings; anything unset keeps the method default.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct MethodOverrides {
    pub gamma: Option<f64>,
    pub c0: Option<f64>,
    pub forward_step: Option<bool>,
    pub refine_lambda: Option<bool>,
    pub grad_tol: Option<f64>,
    pub max_oracle_calls: Option<u64>,
    pub preconditioner: Option<Vec<f64>>,
    pub baseline: Vec<(String, f64)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MethodSpec {
    pub label: String,
    /// Method id; `fixed_ls` is resolved with `overrides.preconditioner`.
    pub method_id: String,
    pub overrides: MethodOverrides,
}

impl MethodSpec {
    pub fn resolve(&self, dim: usize, budget: u64, seed: u64) -> Result<RunConfig> {
        let method = if self.method_id == "fixed_ls" {
            let p = self
                .overrides
                .preconditioner
                .clone()
                .ok_or_else(|| Error::Config(format!("[method.{}] fixed_ls needs `preconditioner`", self.label)))?;
            if p.len() != dim {
                return Err(Error::Config(format!(
                    "[method.{}] preconditioner has {} entries, problem has dimension {dim}",
                    self.label,
                    p.len()
                )));
            }
            Method::PrecondLs(PrecondSource::Given(DiagPreconditioner::new(p)?))
        } else {
            self.method_id
                .parse()
                .map_err(|_| Error::Config(format!("unknown method `{}`", self.method_id)))?
        };
        let mut cfg = RunConfig::new(method, dim);
        let o = &self.overrides;
        cfg.seed = seed;
        cfg.max_oracle_calls = o.max_oracle_calls.unwrap_or(budget);
        if let Some(v) = o.gamma {
            cfg.gamma = v;
        }
        if let Some(v) = o.c0 {
            cfg.c0 = v;
        }
        if let Some(v) = o.forward_step {
            cfg.forward_step = v;
        }
        if let Some(v) = o.refine_lambda {
            cfg.refine_lambda = v;
        }
        if let Some(v) = o.grad_tol {
            cfg.grad_tol = v;
        }
        let b = &mut cfg.baseline;
        for (k, v) in &o.baseline {
            match k.as_str() {
                "bb_initial_step" => b.bb_initial_step = *v,
                "bb_mu" => b.bb_mu = *v,
                "bb_backtrack" => b.bb_backtrack = *v,
                "bb_window" => b.bb_window = *v as usize,
                "rprop_initial_step" => b.rprop_initial_step = *v,
                "rprop_eta_plus" => b.rprop_eta_plus = *v,
                "rprop_eta_minus" => b.rprop_eta_minus = *v,
                "rprop_min_step" => b.rprop_min_step = *v,
                "rprop_max_step" => b.rprop_max_step = *v,
                "gdhd_beta" => b.gdhd_beta = *v,
                "gdhd_alpha0" => b.gdhd_alpha0 = *v,
                _ => unreachable!("filtered at parse time"),
            }
        }
        cfg.validate().map_err(|e| Error::Config(format!("[method.{}] {e}", self.label)))?;
        Ok(cfg)
    }
}

const BASELINE_KEYS: [&str; 11] = [
    "bb_initial_step",
    "bb_mu",
    "bb_backtrack",
    "bb_window",
    "rprop_initial_step",
    "rprop_eta_plus",
    "rprop_eta_minus",
    "rprop_min_step",
    "rprop_max_step",
    "gdhd_beta",
    "gdhd_alpha0",
];

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub name: String,
    pub objective: ObjectiveKind,
    pub source: ProblemSource,
    pub init: StartPoint,
    pub seed: u64,
    pub max_oracle_calls: u64,
    pub output_dir: PathBuf,
    pub methods: Vec<MethodSpec>,
}

fn cfg_err(line: usize, msg: impl std::fmt::Display) -> Error {
    Error::Config(format!("line {line}: {msg}"))
}

fn parse_value<T: FromStr>(line: usize, key: &str, v: &str) -> Result<T> {
    v.parse()
        .map_err(|_| cfg_err(line, format!("invalid value `{v}` for `{key}`")))
}

pub fn load_config(path: &Path) -> Result<ExperimentConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_config(&text, path.parent().unwrap_or(Path::new(".")))
}

/// Relative paths are resolved against `base_dir`.
pub fn parse_config(text: &str, base_dir: &Path) -> Result<ExperimentConfig> {
    let mut globals: Vec<(usize, String, String)> = Vec::new();
    let mut methods: Vec<MethodSpec> = Vec::new();

    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        if let Some(inner) = line.strip_prefix('[') {
            let inner = inner
                .strip_suffix(']')
                .ok_or_else(|| cfg_err(line_no, "unterminated section header"))?;
            let label = inner
                .trim()
                .strip_prefix("method.")
                .ok_or_else(|| cfg_err(line_no, format!("unknown section `[{inner}]`")))?;
            if label.is_empty() || !label.chars().all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-') {
                return Err(cfg_err(line_no, format!("bad method label `{label}`")));
            }
            if methods.iter().any(|m| m.label == label) {
                return Err(cfg_err(line_no, format!("duplicate section `[method.{label}]`")));
            }
            methods.push(MethodSpec {
                label: label.to_string(),
                method_id: label.to_string(),
                overrides: MethodOverrides::default(),
            });
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| cfg_err(line_no, format!("expected `key = value`, got `{line}`")))?;
        let (k, v) = (k.trim(), v.trim());
        match methods.last_mut() {
            None => {
                if globals.iter().any(|(_, gk, _)| gk == k) {
                    return Err(cfg_err(line_no, format!("duplicate key `{k}`")));
                }
                globals.push((line_no, k.to_string(), v.to_string()));
            }
            Some(spec) => apply_method_key(spec, line_no, k, v)?,
        }
    }

    let get = |key: &str| globals.iter().find(|(_, k, _)| k == key);
    let required = |key: &str| get(key).ok_or_else(|| Error::Config(format!("missing required key `{key}`")));
    let known = [
        "name", "objective", "synth", "dim", "cond", "matrix", "dataset", "bias", "init", "seed",
        "max_oracle_calls", "output_dir",
    ];
    if let Some((line, k, _)) = globals.iter().find(|(_, k, _)| !known.contains(&k.as_str())) {
        return Err(cfg_err(*line, format!("unknown key `{k}`")));
    }

    let (_, _, name) = required("name")?;
    let (l, _, v) = required("objective")?;
    let objective: ObjectiveKind = v.parse().map_err(|e: Error| cfg_err(*l, e))?;
    let (l, _, v) = required("init")?;
    let init: StartPoint = v.parse().map_err(|e: Error| cfg_err(*l, e))?;
    let (l, k, v) = required("seed")?;
    let seed: u64 = parse_value(*l, k, v)?;
    let (l, k, v) = required("max_oracle_calls")?;
    let max_oracle_calls: u64 = parse_value(*l, k, v)?;
    let (_, _, out) = required("output_dir")?;
    let resolve = |p: &str| {
        let p = PathBuf::from(p);
        if p.is_absolute() {
            p
        } else {
            base_dir.join(p)
        }
    };

    let forbid = |keys: &[&str], why: &str| -> Result<()> {
        for key in keys {
            if let Some((l, k, _)) = get(key) {
                return Err(cfg_err(*l, format!("`{k}` is not used {why}")));
            }
        }
        Ok(())
    };
    let source = match objective {
        ObjectiveKind::Quadratic => {
            forbid(&["dataset", "bias"], "by quadratic objectives")?;
            match (get("synth"), get("matrix")) {
                (Some((l, _, kind)), None) => {
                    let kind: SynthKind = kind.parse().map_err(|e: Error| cfg_err(*l, e))?;
                    let (l, k, v) = required("dim")?;
                    let dim: usize = parse_value(*l, k, v)?;
                    let (l, k, v) = required("cond")?;
                    let cond: f64 = parse_value(*l, k, v)?;
                    ProblemSource::Synth { kind, dim, cond }
                }
                (None, Some((_, _, path))) => {
                    forbid(&["dim", "cond"], "with `matrix`")?;
                    ProblemSource::Matrix(resolve(path))
                }
                _ => return Err(Error::Config("quadratic objectives need exactly one of `synth` or `matrix`".into())),
            }
        }
        _ => {
            forbid(&["synth", "matrix", "dim", "cond"], "by dataset objectives")?;
            let (_, _, path) = required("dataset")?;
            let (l, k, v) = required("bias")?;
            ProblemSource::Dataset {
                path: resolve(path),
                bias: parse_value(*l, k, v)?,
            }
        }
    };
    if methods.is_empty() {
        return Err(Error::Config("no [method.<label>] sections".into()));
    }
    Ok(ExperimentConfig {
        name: name.clone(),
        objective,
        source,
        init,
        seed,
        max_oracle_calls,
        output_dir: resolve(out),
        methods,
    })
}

fn apply_method_key(spec: &mut MethodSpec, line: usize, k: &str, v: &str) -> Result<()> {
    let o = &mut spec.overrides;
    match k {
        "method" => spec.method_id = v.to_string(),
        "gamma" => o.gamma = Some(parse_value(line, k, v)?),
        "c0" => o.c0 = Some(parse_value(line, k, v)?),
        "forward_step" => o.forward_step = Some(parse_value(line, k, v)?),
        "refine_lambda" => o.refine_lambda = Some(parse_value(line, k, v)?),
        "grad_tol" => o.grad_tol = Some(parse_value(line, k, v)?),
        "max_oracle_calls" => o.max_oracle_calls = Some(parse_value(line, k, v)?),
        "preconditioner" => {
            o.preconditioner = Some(
                v.split_whitespace()
                    .map(|t| parse_value(line, k, t))
                    .collect::<Result<_>>()?,
            )
        }
        _ if BASELINE_KEYS.contains(&k) => o.baseline.push((k.to_string(), parse_value(line, k, v)?)),
        _ => return Err(cfg_err(line, format!("unknown key `{k}` in [method.{}]", spec.label))),
    }
    Ok(())
}
