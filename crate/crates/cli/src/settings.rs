//! Flags plus an optional `key = value` config file, merged into one [`ExperimentSpec`].

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use clap::Args;
use ipg_core::{ErrorDirection, GradientErrorSchedule, LipschitzMode, TraceMetric, Variant};

use crate::error::{usage, CliError, Result};
use crate::spec::{parse_direction, parse_gradient_error, parse_l_mode, parse_variant, Budget, ProblemSpec, Strategy};

/// Options shared by every subcommand. Each long flag can also be given in the
/// config file as `flag-name = value`; flags win over the file.
#[derive(Debug, Clone, Default, Args)]
pub struct ExperimentArgs {
    /// Plain-text `key = value` file; `#` starts a comment.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// `lasso[:n=,d=,cond=,lambda=]`, `cur[:rows=,cols=,lambda_row=,lambda_col=]` or `csv:path=[,lambda_row=,lambda_col=]`.
    #[arg(long)]
    pub problem: Option<String>,
    /// `basic`, `accel`, `basic-strong` or `accel-strong`.
    #[arg(long)]
    pub solver: Option<String>,
    /// Inner stopping rule, repeatable: `exact`, `eps=1/k^3`, `eps=1e-6`, `eps=0.1*0.8^k`, `sweeps=3`.
    #[arg(long)]
    pub strategy: Vec<String>,
    /// `outer=<n>` outer iterations or `inner=<n>` cumulative inner iterations.
    #[arg(long)]
    pub budget: Option<String>,
    /// Seed for the problem generator and the error directions.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Gradient-error magnitude: `none`, `c/k^a` or `c*q^k`.
    #[arg(long)]
    pub grad_error: Option<String>,
    /// Gradient-error direction: `random` or `ascent`.
    #[arg(long)]
    pub direction: Option<String>,
    /// Strong-convexity modulus; defaults to the generator's known value.
    #[arg(long)]
    pub mu: Option<f64>,
    /// `known`, `fixed=<L>` or `double=<L0>`.
    #[arg(long)]
    pub lipschitz: Option<String>,
    /// Compute a reference optimum for the `dist_to_opt` column of `run`.
    #[arg(long)]
    pub reference: bool,
    /// Tolerance of the reference solve.
    #[arg(long)]
    pub reference_tol: Option<f64>,
    /// First iteration of the slope-fit window (`rates`).
    #[arg(long)]
    pub k_min: Option<usize>,
    /// Last iteration of the slope-fit window (`rates`).
    #[arg(long)]
    pub k_max: Option<usize>,
    /// Objective column for `rates`: `last`, `avg` or `best`.
    #[arg(long)]
    pub metric: Option<String>,
    /// Test hook: run with a fixed L of half the true constant and bound with it.
    #[arg(long, hide = true)]
    pub corrupt_bound: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentSpec {
    pub problem: ProblemSpec,
    pub variant: Variant,
    pub strategies: Vec<Strategy>,
    pub budget: Budget,
    pub seed: u64,
    pub out: PathBuf,
    pub grad_error: GradientErrorSchedule<f64>,
    pub direction: ErrorDirection,
    pub mu: Option<f64>,
    /// `None` uses the problem's default.
    pub l_mode: Option<LipschitzMode<f64>>,
    pub reference: bool,
    pub reference_tol: f64,
    pub k_min: usize,
    pub k_max: usize,
    pub metric: TraceMetric,
    pub corrupt_bound: bool,
}

fn read_config(path: &Path) -> Result<BTreeMap<String, Vec<String>>> {
    let text = std::fs::read_to_string(path)
        .map_err(|source| CliError::Io { path: path.display().to_string(), source })?;
    parse_config(&text)
}

/// Parses `key = value` lines. Keys may repeat (`strategy`); `-` and `_` are interchangeable.
pub fn parse_config(text: &str) -> Result<BTreeMap<String, Vec<String>>> {
    let mut map: BTreeMap<String, Vec<String>> = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or_else(|| usage(format!("config line {}: expected key = value", i + 1)))?;
        map.entry(k.trim().replace('_', "-")).or_default().push(v.trim().to_string());
    }
    Ok(map)
}

const KNOWN_KEYS: &[&str] = &[
    "problem", "solver", "strategy", "budget", "seed", "out", "grad-error", "direction", "mu", "lipschitz",
    "reference", "reference-tol", "k-min", "k-max", "metric",
];

fn parse_flag<T: std::str::FromStr>(key: &str, v: &str) -> Result<T> {
    v.parse().map_err(|_| usage(format!("invalid value `{v}` for {key}")))
}

fn parse_bool(key: &str, v: &str) -> Result<bool> {
    match v {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        _ => Err(usage(format!("invalid boolean `{v}` for {key}"))),
    }
}

impl ExperimentArgs {
    pub fn resolve(&self) -> Result<ExperimentSpec> {
        let mut map = match &self.config {
            Some(path) => read_config(path)?,
            None => BTreeMap::new(),
        };
        if let Some(k) = map.keys().find(|k| !KNOWN_KEYS.contains(&k.as_str())) {
            return Err(usage(format!("unknown config key `{k}`")));
        }
        let mut set = |key: &str, v: Option<String>| {
            if let Some(v) = v {
                map.insert(key.to_string(), vec![v]);
            }
        };
        set("problem", self.problem.clone());
        set("solver", self.solver.clone());
        set("budget", self.budget.clone());
        set("seed", self.seed.map(|v| v.to_string()));
        set("out", self.out.as_ref().map(|p| p.display().to_string()));
        set("grad-error", self.grad_error.clone());
        set("direction", self.direction.clone());
        set("mu", self.mu.map(|v| v.to_string()));
        set("lipschitz", self.lipschitz.clone());
        set("reference-tol", self.reference_tol.map(|v| v.to_string()));
        set("k-min", self.k_min.map(|v| v.to_string()));
        set("k-max", self.k_max.map(|v| v.to_string()));
        set("metric", self.metric.clone());
        if self.reference {
            map.insert("reference".into(), vec!["true".into()]);
        }
        if !self.strategy.is_empty() {
            map.insert("strategy".into(), self.strategy.clone());
        }

        let one = |key: &str| -> Option<&str> { map.get(key).and_then(|v| v.last()).map(String::as_str) };
        let strategies = map
            .get("strategy")
            .map(|v| v.iter().map(|s| Strategy::parse(s)).collect::<Result<Vec<_>>>())
            .transpose()?
            .unwrap_or_default();
        if strategies.is_empty() {
            return Err(usage("at least one --strategy is required"));
        }
        let metric = match one("metric").unwrap_or("last") {
            "last" => TraceMetric::LastIterate,
            "avg" => TraceMetric::AveragedIterate,
            "best" => TraceMetric::BestIterate,
            other => return Err(usage(format!("unknown metric `{other}` (last, avg, best)"))),
        };
        let spec = ExperimentSpec {
            problem: ProblemSpec::parse(one("problem").unwrap_or("lasso"))?,
            variant: parse_variant(one("solver").unwrap_or("basic"))?,
            strategies,
            budget: Budget::parse(one("budget").unwrap_or("outer=500"))?,
            seed: one("seed").map(|v| parse_flag("seed", v)).transpose()?.unwrap_or(0),
            out: PathBuf::from(one("out").unwrap_or("ipg-out")),
            grad_error: parse_gradient_error(one("grad-error").unwrap_or("none"))?,
            direction: parse_direction(one("direction").unwrap_or("random"))?,
            mu: one("mu").map(|v| parse_flag("mu", v)).transpose()?,
            l_mode: parse_l_mode(one("lipschitz").unwrap_or("known"))?,
            reference: one("reference").map(|v| parse_bool("reference", v)).transpose()?.unwrap_or(false),
            reference_tol: one("reference-tol").map(|v| parse_flag("reference-tol", v)).transpose()?.unwrap_or(1e-12),
            k_min: one("k-min").map(|v| parse_flag("k-min", v)).transpose()?.unwrap_or(50),
            k_max: one("k-max").map(|v| parse_flag("k-max", v)).transpose()?.unwrap_or(500),
            metric,
            corrupt_bound: self.corrupt_bound,
        };
        if !(spec.reference_tol > 0.0) {
            return Err(usage("reference tolerance must be positive"));
        }
        if spec.k_min == 0 || spec.k_max <= spec.k_min {
            return Err(usage("need 1 ≤ k-min < k-max"));
        }
        Ok(spec)
    }
}
