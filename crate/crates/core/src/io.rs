//! JSON problem specs, JSON results files and CSV convergence traces.
//!
//! A problem spec looks like
//!
//! ```json
//! {
//!   "dimension": 2,
//!   "chain_sets": [{ "kind": "ball", "center": [7, -6], "radius": 1 }, ...],
//!   "hub_set": { "kind": "box", "center": [1, -1], "half_widths": [1, 1] },
//!   "rho": [1, 2, 2, 1],
//!   "omega": [2, 1, 1, 2],
//!   "init": { "chain_points": [[8, -6], ...], "hub_point": [2, -2] },
//!   "solver": { "step_rule": "harmonic", "tolerance": 1e-12 }
//! }
//! ```
//!
//! `init` may also be the string `"anchors"`. Set kinds are `ball`, `box`,
//! `halfspace` (`normal`, `offset`) and `singleton` (`point`).

use std::fs;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{GhwpError, Result};
use crate::geometry::ConvexSet;
use crate::optimality::{OptimalityReport, Verdict};
use crate::point::Point;
use crate::problem::{Configuration, Problem, ProblemOptions, Weights};
use crate::solver::{
    Checkpoint, InitStrategy, SolveResult, SolverConfig, StepRule, StopReason, TraceRecord,
};

/// Results files must reproduce their objective to this accuracy.
pub const RESULTS_OBJECTIVE_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum SetRecord {
    Ball {
        center: Vec<f64>,
        radius: f64,
    },
    Box {
        center: Vec<f64>,
        half_widths: Vec<f64>,
    },
    Halfspace {
        normal: Vec<f64>,
        offset: f64,
    },
    Singleton {
        point: Vec<f64>,
    },
}

impl SetRecord {
    fn to_set(&self, field: &str) -> Result<ConvexSet> {
        let point = |v: &Vec<f64>, name: &str| {
            Point::new(v.clone())
                .map_err(|e| GhwpError::structural(format!("{field}.{name}"), e.to_string()))
        };
        let set = match self {
            SetRecord::Ball { center, radius } => {
                ConvexSet::ball(point(center, "center")?, *radius)
            }
            SetRecord::Box {
                center,
                half_widths,
            } => ConvexSet::r#box(point(center, "center")?, half_widths.clone()),
            SetRecord::Halfspace { normal, offset } => {
                ConvexSet::half_space(point(normal, "normal")?, *offset)
            }
            SetRecord::Singleton { point: p } => Ok(ConvexSet::singleton(point(p, "point")?)),
        };
        set.map_err(|e| GhwpError::structural(field, e.to_string()))
    }

    pub fn from_set(set: &ConvexSet) -> Self {
        match set {
            ConvexSet::Ball { center, radius } => SetRecord::Ball {
                center: center.coords().to_vec(),
                radius: *radius,
            },
            ConvexSet::Box {
                center,
                half_widths,
            } => SetRecord::Box {
                center: center.coords().to_vec(),
                half_widths: half_widths.clone(),
            },
            ConvexSet::HalfSpace { normal, offset } => SetRecord::Halfspace {
                normal: normal.coords().to_vec(),
                offset: *offset,
            },
            ConvexSet::Singleton { point } => SetRecord::Singleton {
                point: point.coords().to_vec(),
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigurationRecord {
    pub chain_points: Vec<Vec<f64>>,
    pub hub_point: Vec<f64>,
}

impl ConfigurationRecord {
    pub fn from_config(u: &Configuration) -> Self {
        ConfigurationRecord {
            chain_points: u.chain_points.iter().map(|p| p.coords().to_vec()).collect(),
            hub_point: u.hub_point.coords().to_vec(),
        }
    }

    pub fn to_config(&self, field: &str) -> Result<Configuration> {
        let chain_points = self
            .chain_points
            .iter()
            .enumerate()
            .map(|(i, c)| {
                Point::new(c.clone()).map_err(|e| {
                    GhwpError::structural(format!("{field}.chain_points[{i}]"), e.to_string())
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let hub_point = Point::new(self.hub_point.clone())
            .map_err(|e| GhwpError::structural(format!("{field}.hub_point"), e.to_string()))?;
        Ok(Configuration::new(chain_points, hub_point))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum InitRecord {
    Named(String),
    Explicit(ConfigurationRecord),
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverRecord {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub step_rule: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub step_offset: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub step_scale: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tolerance: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_iter: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stop_on_gradient: Option<bool>,
}

impl SolverRecord {
    fn to_config(&self) -> Result<SolverConfig> {
        let defaults = SolverConfig::default();
        let step_rule =
            match (self.step_rule.as_deref(), self.step_offset) {
                (None | Some("harmonic"), None) => StepRule::Harmonic,
                (Some("harmonic_offset"), offset) => StepRule::HarmonicOffset {
                    offset: offset.unwrap_or(0.0),
                },
                (Some("sqrt_decay"), None) => StepRule::SqrtDecay,
                (_, Some(_)) => {
                    return Err(GhwpError::structural(
                        "solver.step_offset",
                        "only valid with step_rule \"harmonic_offset\"",
                    ))
                }
                (Some(other), None) => return Err(GhwpError::structural(
                    "solver.step_rule",
                    format!(
                        "unknown rule {other:?}; expected harmonic, harmonic_offset or sqrt_decay"
                    ),
                )),
            };
        let cfg = SolverConfig {
            step_rule,
            step_scale: self.step_scale.unwrap_or(defaults.step_scale),
            tolerance: self.tolerance.unwrap_or(defaults.tolerance),
            max_iter: self.max_iter.unwrap_or(defaults.max_iter),
            stop_on_gradient: self.stop_on_gradient.unwrap_or(defaults.stop_on_gradient),
            ..defaults
        };
        cfg.validate()
            .map_err(|e| GhwpError::structural("solver", e.to_string()))?;
        Ok(cfg)
    }

    pub fn from_config(cfg: &SolverConfig) -> Self {
        let (rule, offset) = match cfg.step_rule {
            StepRule::Harmonic => ("harmonic", None),
            StepRule::HarmonicOffset { offset } => ("harmonic_offset", Some(offset)),
            StepRule::SqrtDecay => ("sqrt_decay", None),
        };
        SolverRecord {
            step_rule: Some(rule.to_string()),
            step_offset: offset,
            step_scale: Some(cfg.step_scale),
            tolerance: Some(cfg.tolerance),
            max_iter: Some(cfg.max_iter),
            stop_on_gradient: Some(cfg.stop_on_gradient),
        }
    }
}

/// The on-disk problem document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemSpecFile {
    pub dimension: usize,
    pub chain_sets: Vec<SetRecord>,
    pub hub_set: SetRecord,
    pub rho: Vec<f64>,
    pub omega: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub init: Option<InitRecord>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub solver: Option<SolverRecord>,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub allow_two_chain: bool,
}

/// Everything a spec document describes.
#[derive(Debug, Clone, PartialEq)]
pub struct ParsedSpec {
    pub problem: Problem,
    pub init: InitStrategy,
    pub solver: SolverConfig,
}

fn parse_error(e: serde_json::Error) -> GhwpError {
    GhwpError::Parse {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    }
}

/// Parses and validates a problem spec. Degenerate weights are rejected.
pub fn parse_problem(text: &str) -> Result<ParsedSpec> {
    let doc: ProblemSpecFile = serde_json::from_str(text).map_err(parse_error)?;
    doc.into_parsed()
}

impl ProblemSpecFile {
    pub fn into_parsed(self) -> Result<ParsedSpec> {
        if self.dimension == 0 {
            return Err(GhwpError::structural("dimension", "must be at least 1"));
        }
        let chain_sets = self
            .chain_sets
            .iter()
            .enumerate()
            .map(|(i, r)| r.to_set(&format!("chain_sets[{i}]")))
            .collect::<Result<Vec<_>>>()?;
        let hub_set = self.hub_set.to_set("hub_set")?;
        for (i, s) in chain_sets.iter().enumerate() {
            if s.dim() != self.dimension {
                return Err(GhwpError::structural(
                    format!("chain_sets[{i}]"),
                    format!(
                        "has dimension {}, document declares {}",
                        s.dim(),
                        self.dimension
                    ),
                ));
            }
        }
        if hub_set.dim() != self.dimension {
            return Err(GhwpError::structural(
                "hub_set",
                format!(
                    "has dimension {}, document declares {}",
                    hub_set.dim(),
                    self.dimension
                ),
            ));
        }
        let weights = Weights::new(self.rho, self.omega)?;
        let options = ProblemOptions {
            allow_two_chain: self.allow_two_chain,
        };
        let problem = Problem::with_options(chain_sets, hub_set, weights, options)?;
        problem.require_nondegenerate()?;

        let init = match &self.init {
            None => InitStrategy::SetAnchors,
            Some(InitRecord::Named(name)) if name == "anchors" => InitStrategy::SetAnchors,
            Some(InitRecord::Named(other)) => {
                return Err(GhwpError::structural(
                    "init",
                    format!("expected \"anchors\" or explicit points, got {other:?}"),
                ))
            }
            Some(InitRecord::Explicit(rec)) => {
                let u = rec.to_config("init")?;
                problem
                    .check_config(&u)
                    .map_err(|e| GhwpError::structural("init", e.to_string()))?;
                InitStrategy::ProjectGiven(u)
            }
        };
        let solver = self.solver.unwrap_or_default().to_config()?;
        Ok(ParsedSpec {
            problem,
            init,
            solver,
        })
    }

    pub fn from_parsed(spec: &ParsedSpec) -> Self {
        let p = &spec.problem;
        ProblemSpecFile {
            dimension: p.dim(),
            chain_sets: p.chain_sets().iter().map(SetRecord::from_set).collect(),
            hub_set: SetRecord::from_set(p.hub_set()),
            rho: p.weights().rho.clone(),
            omega: p.weights().omega.clone(),
            init: Some(match &spec.init {
                InitStrategy::SetAnchors => InitRecord::Named("anchors".into()),
                InitStrategy::ProjectGiven(u) => {
                    InitRecord::Explicit(ConfigurationRecord::from_config(u))
                }
            }),
            solver: Some(SolverRecord::from_config(&spec.solver)),
            allow_two_chain: p.len() == 2,
        }
    }
}

/// Pretty-printed JSON that parses back to the same spec. Floats use the
/// shortest representation that round-trips exactly.
pub fn serialize_problem(spec: &ParsedSpec) -> String {
    serde_json::to_string_pretty(&ProblemSpecFile::from_parsed(spec)).expect("spec serialises")
}

pub fn read_problem(path: &Path) -> Result<ParsedSpec> {
    let text = fs::read_to_string(path).map_err(|e| GhwpError::io(path, e))?;
    parse_problem(&text)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimalitySummary {
    pub verdict: Verdict,
    pub tolerance: f64,
    pub chain_normal_ok: Vec<bool>,
    pub hub_normal_ok: bool,
    pub indeterminate_vertices: Vec<usize>,
    pub global_balance_norm: f64,
    /// Pairs of sets closer than the tolerance, as `[first, second]` labels.
    pub overlapping_sets: Vec<[String; 2]>,
}

impl OptimalitySummary {
    pub fn from_report(r: &OptimalityReport) -> Self {
        OptimalitySummary {
            verdict: r.verdict,
            tolerance: r.tolerance,
            chain_normal_ok: r.chain_normal_ok.clone(),
            hub_normal_ok: r.hub_normal_ok,
            indeterminate_vertices: r.indeterminate_vertices(),
            global_balance_norm: r.global_balance_norm,
            overlapping_sets: r
                .overlaps
                .close_pairs
                .iter()
                .map(|c| [c.first.to_string(), c.second.to_string()])
                .collect(),
        }
    }
}

/// Solver output as written next to the trace.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ResultsFile {
    pub best_config: ConfigurationRecord,
    pub best_objective: f64,
    pub initial_objective: f64,
    pub initial_projected: bool,
    pub iterations: usize,
    pub stop_reason: StopReason,
    pub checkpoints: Vec<Checkpoint>,
    pub solver: SolverRecord,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub optimality: Option<OptimalitySummary>,
    /// File name of the companion trace, relative to the results file.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trace_file: Option<String>,
}

impl ResultsFile {
    pub fn new(
        result: &SolveResult,
        cfg: &SolverConfig,
        report: Option<&OptimalityReport>,
    ) -> Self {
        ResultsFile {
            best_config: ConfigurationRecord::from_config(&result.best_config),
            best_objective: result.best_objective,
            initial_objective: result.initial_objective,
            initial_projected: result.initial_projected,
            iterations: result.iterations,
            stop_reason: result.stop_reason,
            checkpoints: result.checkpoints.clone(),
            solver: SolverRecord::from_config(cfg),
            optimality: report.map(OptimalitySummary::from_report),
            trace_file: None,
        }
    }

    pub fn best_config(&self) -> Result<Configuration> {
        self.best_config.to_config("best_config")
    }

    /// Recomputes the objective of the stored configuration and compares it
    /// with the stored value.
    pub fn check_against(&self, p: &Problem) -> Result<Configuration> {
        let u = self.best_config()?;
        let j = p.objective(&u)?;
        if (j - self.best_objective).abs() > RESULTS_OBJECTIVE_TOL {
            return Err(GhwpError::structural(
                "best_objective",
                format!(
                    "stored {} but the stored configuration evaluates to {j}",
                    self.best_objective
                ),
            ));
        }
        Ok(u)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("results serialise")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(parse_error)
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| GhwpError::io(path, e))?;
        Self::from_json(&text)
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct TraceRow {
    k: usize,
    #[serde(rename = "J")]
    objective: f64,
    #[serde(rename = "J_best")]
    best_objective: f64,
    alpha: f64,
    grad_norm: f64,
}

/// Comma-separated trace with header `k,J,J_best,alpha,grad_norm`.
pub fn trace_to_csv(trace: &[TraceRecord]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in trace {
        w.serialize(TraceRow {
            k: r.k,
            objective: r.objective,
            best_objective: r.best_objective,
            alpha: r.step,
            grad_norm: r.grad_norm,
        })
        .map_err(|e| GhwpError::invalid(format!("trace row {}: {e}", r.k)))?;
    }
    let bytes = w
        .into_inner()
        .map_err(|e| GhwpError::invalid(format!("trace buffer: {e}")))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

pub fn trace_from_csv(text: &str) -> Result<Vec<TraceRecord>> {
    let mut rdr = csv::Reader::from_reader(text.as_bytes());
    rdr.deserialize::<TraceRow>()
        .enumerate()
        .map(|(i, row)| {
            let row = row.map_err(|e| GhwpError::Parse {
                line: i + 2,
                column: 0,
                message: e.to_string(),
            })?;
            Ok(TraceRecord {
                k: row.k,
                objective: row.objective,
                best_objective: row.best_objective,
                step: row.alpha,
                grad_norm: row.grad_norm,
            })
        })
        .collect()
}

/// Writes `contents` to a temporary file beside `path`, then renames it
/// into place.
pub fn write_atomic(path: &Path, contents: &str) -> Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| GhwpError::io(dir, e))?;
    tmp.write_all(contents.as_bytes())
        .map_err(|e| GhwpError::io(tmp.path(), e))?;
    tmp.persist(path)
        .map_err(|e| GhwpError::io(path, e.error))?;
    Ok(())
}

/// Formats a value with 12 significant digits for human-readable output.
pub fn fmt_sig(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return format!("{x}");
    }
    let magnitude = x.abs().log10().floor() as i32;
    let decimals = (11 - magnitude).max(0) as usize;
    if (-5..12).contains(&magnitude) {
        format!("{x:.decimals$}")
    } else {
        format!("{x:.11e}")
    }
}
