//! Parsing of the compact problem, strategy, budget and schedule notations.

use std::collections::BTreeMap;
use std::path::PathBuf;

use ipg_core::{
    gen_cur, gen_lasso, read_matrix_csv, CompositeProblem, CurInstance, ErrorDirection, GradientErrorSchedule,
    LipschitzMode, ProxSchedule, Variant,
};

use crate::error::{usage, Result};

#[derive(Debug, Clone, PartialEq)]
pub enum ProblemSpec {
    /// `lambda_frac` is λ as a fraction of `‖Aᵀb‖_∞`.
    Lasso { n: usize, d: usize, cond: f64, lambda_frac: f64 },
    Cur { rows: usize, cols: usize, lambda_row: f64, lambda_col: f64 },
    Csv { path: PathBuf, lambda_row: f64, lambda_col: f64 },
}

/// A built problem with the constants the drivers need.
pub struct BuiltProblem {
    pub problem: CompositeProblem<f64>,
    pub lipschitz: f64,
    pub mu: f64,
    /// Lasso problems get prox errors by loosening the closed form.
    pub loosened: Option<CompositeProblem<f64>>,
    pub default_l_mode: LipschitzMode<f64>,
}

fn parse_params(s: &str) -> Result<BTreeMap<String, String>> {
    let mut out = BTreeMap::new();
    for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        let (k, v) = part.split_once('=').ok_or_else(|| usage(format!("expected key=value, got `{part}`")))?;
        out.insert(k.trim().to_string(), v.trim().to_string());
    }
    Ok(out)
}

fn take<T: std::str::FromStr>(params: &mut BTreeMap<String, String>, key: &str, default: T) -> Result<T> {
    match params.remove(key) {
        None => Ok(default),
        Some(v) => v.parse().map_err(|_| usage(format!("invalid value `{v}` for `{key}`"))),
    }
}

fn no_leftovers(params: &BTreeMap<String, String>, kind: &str) -> Result<()> {
    match params.keys().next() {
        Some(k) => Err(usage(format!("unknown {kind} parameter `{k}`"))),
        None => Ok(()),
    }
}

impl ProblemSpec {
    /// `lasso[:n=100,d=50,cond=10,lambda=0.1]`, `cur[:rows=30,cols=30,lambda_row=0.01,lambda_col=0.01]`
    /// or `csv:path=W.csv[,lambda_row=..,lambda_col=..]`.
    pub fn parse(s: &str) -> Result<Self> {
        let (kind, rest) = s.split_once(':').unwrap_or((s, ""));
        let mut p = parse_params(rest)?;
        let spec = match kind.trim() {
            "lasso" => ProblemSpec::Lasso {
                n: take(&mut p, "n", 100)?,
                d: take(&mut p, "d", 50)?,
                cond: take(&mut p, "cond", 10.0)?,
                lambda_frac: take(&mut p, "lambda", 0.1)?,
            },
            "cur" => ProblemSpec::Cur {
                rows: take(&mut p, "rows", 30)?,
                cols: take(&mut p, "cols", 30)?,
                lambda_row: take(&mut p, "lambda_row", 0.01)?,
                lambda_col: take(&mut p, "lambda_col", 0.01)?,
            },
            "csv" => ProblemSpec::Csv {
                path: p.remove("path").map(PathBuf::from).ok_or_else(|| usage("csv problem needs path=<file>"))?,
                lambda_row: take(&mut p, "lambda_row", 0.01)?,
                lambda_col: take(&mut p, "lambda_col", 0.01)?,
            },
            other => return Err(usage(format!("unknown problem `{other}` (lasso, cur, csv)"))),
        };
        no_leftovers(&p, "problem")?;
        Ok(spec)
    }

    pub fn build(&self, seed: u64) -> Result<BuiltProblem> {
        match self {
            ProblemSpec::Lasso { n, d, cond, lambda_frac } => {
                if !(*lambda_frac >= 0.0) {
                    return Err(usage("lasso lambda must be nonnegative"));
                }
                let inst = gen_lasso::<f64>(seed, *n, *d, *cond)?;
                let lambda = lambda_frac * inst.lambda_max();
                let inst = inst.with_lambda(lambda);
                Ok(BuiltProblem {
                    problem: inst.problem()?,
                    lipschitz: inst.l_known,
                    mu: inst.mu_known,
                    loosened: Some(inst.problem_with_loosened_prox(seed)?),
                    default_l_mode: LipschitzMode::Fixed(inst.l_known),
                })
            }
            ProblemSpec::Cur { rows, cols, lambda_row, lambda_col } => {
                cur_problem(gen_cur::<f64>(seed, *rows, *cols, *lambda_row, *lambda_col)?)
            }
            ProblemSpec::Csv { path, lambda_row, lambda_col } => {
                let w = read_matrix_csv(path)?;
                cur_problem(CurInstance::from_matrix(w, *lambda_row, *lambda_col)?)
            }
        }
    }
}

fn cur_problem(inst: CurInstance<f64>) -> Result<BuiltProblem> {
    let problem = inst.problem()?;
    let lipschitz = problem.smooth().lipschitz();
    Ok(BuiltProblem { problem, lipschitz, mu: 0.0, loosened: None, default_l_mode: LipschitzMode::Doubling(1.0) })
}

pub fn parse_variant(s: &str) -> Result<Variant> {
    match s.trim() {
        "basic" | "basic-convex" => Ok(Variant::BasicConvex),
        "accel" | "accel-convex" => Ok(Variant::AccelConvex),
        "basic-strong" => Ok(Variant::BasicStrong),
        "accel-strong" => Ok(Variant::AccelStrong),
        other => Err(usage(format!("unknown solver `{other}` (basic, accel, basic-strong, accel-strong)"))),
    }
}

/// Parses `c/k^a`, `1/k`, `c*q^k` or a plain number into one of three decay shapes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Decay {
    Poly { c: f64, alpha: f64 },
    Geometric { c: f64, q: f64 },
    Constant(f64),
}

fn number(s: &str) -> Result<f64> {
    s.trim().parse().map_err(|_| usage(format!("invalid number `{s}`")))
}

impl Decay {
    pub fn parse(s: &str) -> Result<Self> {
        let s = s.trim();
        if let Some((c, rest)) = s.split_once('/') {
            let rest = rest.trim();
            let alpha = if rest == "k" {
                1.0
            } else {
                number(rest.strip_prefix("k^").ok_or_else(|| usage(format!("expected c/k^a, got `{s}`")))?)?
            };
            return Ok(Decay::Poly { c: number(c)?, alpha });
        }
        if let Some((c, rest)) = s.split_once('*') {
            let q = rest.trim().strip_suffix("^k").ok_or_else(|| usage(format!("expected c*q^k, got `{s}`")))?;
            return Ok(Decay::Geometric { c: number(c)?, q: number(q)? });
        }
        Ok(Decay::Constant(number(s)?))
    }
}

/// Inner stopping strategy compared across runs.
#[derive(Debug, Clone, PartialEq)]
pub struct Strategy {
    pub label: String,
    pub prox: ProxSchedule<f64>,
}

impl Strategy {
    /// `exact`, `eps=<decay>` or `sweeps=<n>` (also `n=<n>`).
    pub fn parse(s: &str) -> Result<Self> {
        let s = s.trim();
        let prox = if s == "exact" {
            ProxSchedule::Exact
        } else if let Some(v) = s.strip_prefix("eps=") {
            match Decay::parse(v)? {
                Decay::Poly { c, alpha } => ProxSchedule::PolyDecay { c, alpha },
                Decay::Geometric { c, q } => ProxSchedule::GeometricDecay { c, q },
                Decay::Constant(e) => ProxSchedule::Constant(e),
            }
        } else if let Some(v) = s.strip_prefix("sweeps=").or_else(|| s.strip_prefix("n=")) {
            ProxSchedule::FixedSweeps(v.trim().parse().map_err(|_| usage(format!("invalid sweep count `{v}`")))?)
        } else {
            return Err(usage(format!("unknown strategy `{s}` (exact, eps=<decay>, sweeps=<n>)")));
        };
        Ok(Strategy { label: file_label(s), prox })
    }
}

/// Strategy text reduced to characters that are safe in file names.
fn file_label(s: &str) -> String {
    s.chars().map(|c| if c.is_ascii_alphanumeric() || c == '.' || c == '-' { c } else { '_' }).collect()
}

pub fn parse_gradient_error(s: &str) -> Result<GradientErrorSchedule<f64>> {
    if s.trim() == "none" {
        return Ok(GradientErrorSchedule::None);
    }
    match Decay::parse(s)? {
        Decay::Poly { c, alpha } => Ok(GradientErrorSchedule::PolyDecay { c, alpha }),
        Decay::Geometric { c, q } => Ok(GradientErrorSchedule::GeometricDecay { c, q }),
        Decay::Constant(_) => Err(usage("gradient errors must decay (c/k^a or c*q^k)")),
    }
}

pub fn parse_direction(s: &str) -> Result<ErrorDirection> {
    match s.trim() {
        "random" => Ok(ErrorDirection::SeededRandom),
        "ascent" => Ok(ErrorDirection::TowardAscent),
        other => Err(usage(format!("unknown direction `{other}` (random, ascent)"))),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Budget {
    OuterIters(usize),
    InnerSweepTotal(usize),
}

impl Budget {
    /// `outer=<n>` or `inner=<n>`.
    pub fn parse(s: &str) -> Result<Self> {
        let (kind, n) = s.split_once('=').ok_or_else(|| usage(format!("expected outer=<n> or inner=<n>, got `{s}`")))?;
        let n: usize = n.trim().parse().map_err(|_| usage(format!("invalid budget `{n}`")))?;
        if n == 0 {
            return Err(usage("budget must be positive"));
        }
        match kind.trim() {
            "outer" => Ok(Budget::OuterIters(n)),
            "inner" => Ok(Budget::InnerSweepTotal(n)),
            other => Err(usage(format!("unknown budget kind `{other}` (outer, inner)"))),
        }
    }
}

/// `known`, `fixed=<L>` or `double=<L0>`; `None` for `known`.
pub fn parse_l_mode(s: &str) -> Result<Option<LipschitzMode<f64>>> {
    let s = s.trim();
    if s == "known" {
        return Ok(None);
    }
    let (kind, v) = s.split_once('=').ok_or_else(|| usage(format!("expected known, fixed=<L> or double=<L0>, got `{s}`")))?;
    let v = number(v)?;
    if !(v > 0.0) || !v.is_finite() {
        return Err(usage("Lipschitz estimate must be positive"));
    }
    match kind.trim() {
        "fixed" => Ok(Some(LipschitzMode::Fixed(v))),
        "double" => Ok(Some(LipschitzMode::Doubling(v))),
        other => Err(usage(format!("unknown Lipschitz mode `{other}`"))),
    }
}
