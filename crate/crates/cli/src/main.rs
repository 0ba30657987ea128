use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use ghwp::io::{fmt_sig, read_problem, trace_from_csv, trace_to_csv, write_atomic, ResultsFile};
use ghwp::render::{coordinate_table, render_svg_string, render_trace_svg};
use ghwp::solver::initialize;
use ghwp::{solve, verify, GhwpError, Problem, StepRule};

const EXIT_IO: u8 = 3;
const EXIT_PARSE: u8 = 4;
const EXIT_STRUCTURAL: u8 = 5;
const EXIT_NUMERICAL: u8 = 6;
const EXIT_UNSUPPORTED_DIMENSION: u8 = 7;

const RESULTS_NAME: &str = "results.json";
const TRACE_NAME: &str = "trace.csv";

#[derive(Parser)]
#[command(
    name = "ghwp",
    version,
    about = "Weighted closed chain plus hub over convex sets"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum StepRuleArg {
    Harmonic,
    HarmonicOffset,
    SqrtDecay,
}

#[derive(Subcommand)]
enum Command {
    /// Run the projected subgradient method and write results.json and trace.csv.
    Solve {
        spec: PathBuf,
        /// Stop once the objective changes by less than this between steps.
        #[arg(long)]
        tolerance: Option<f64>,
        #[arg(long)]
        max_iter: Option<usize>,
        #[arg(long, value_enum)]
        step_rule: Option<StepRuleArg>,
        /// Offset for the harmonic-offset rule, alpha_k = c / (k + offset).
        #[arg(long, default_value_t = 0.0)]
        step_offset: f64,
        #[arg(long)]
        step_scale: Option<f64>,
        /// Also stop when the subgradient norm drops below the tolerance.
        #[arg(long)]
        stop_on_gradient: bool,
        /// Tolerance for the optimality check run on the result.
        #[arg(long, default_value_t = 1e-4)]
        verify_tol: f64,
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
    /// Check the equilibrium conditions at a stored solution.
    Verify {
        spec: PathBuf,
        results: PathBuf,
        #[arg(long, default_value_t = 1e-4)]
        tolerance: f64,
    },
    /// Draw a planar solution as SVG. Higher dimensions get a CSV point table.
    Render {
        spec: PathBuf,
        results: PathBuf,
        #[arg(long)]
        svg: PathBuf,
        /// Also plot the convergence trace referenced by the results file.
        #[arg(long)]
        trace_svg: Option<PathBuf>,
    },
    /// Run the structural diagnostics on a problem spec.
    Check { spec: PathBuf },
}

fn exit_code(e: &GhwpError) -> u8 {
    match e {
        GhwpError::Io { .. } => EXIT_IO,
        GhwpError::Parse { .. } => EXIT_PARSE,
        GhwpError::InvalidInput(_) | GhwpError::Structural { .. } => EXIT_STRUCTURAL,
        GhwpError::Numerical { .. } => EXIT_NUMERICAL,
        GhwpError::UnsupportedDimension(_) => EXIT_UNSUPPORTED_DIMENSION,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Solve {
            spec,
            tolerance,
            max_iter,
            step_rule,
            step_offset,
            step_scale,
            stop_on_gradient,
            verify_tol,
            out,
        } => {
            let overrides = Overrides {
                tolerance,
                max_iter,
                step_rule,
                step_offset,
                step_scale,
                stop_on_gradient,
            };
            run_solve(&spec, &overrides, verify_tol, &out)
        }
        Command::Verify {
            spec,
            results,
            tolerance,
        } => run_verify(&spec, &results, tolerance),
        Command::Render {
            spec,
            results,
            svg,
            trace_svg,
        } => run_render(&spec, &results, &svg, trace_svg.as_deref()),
        Command::Check { spec } => run_check(&spec),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

struct Overrides {
    tolerance: Option<f64>,
    max_iter: Option<usize>,
    step_rule: Option<StepRuleArg>,
    step_offset: f64,
    step_scale: Option<f64>,
    stop_on_gradient: bool,
}

fn run_solve(
    spec_path: &Path,
    o: &Overrides,
    verify_tol: f64,
    out: &Path,
) -> Result<(), GhwpError> {
    let spec = read_problem(spec_path)?;
    let mut cfg = spec.solver.clone();
    if let Some(t) = o.tolerance {
        cfg.tolerance = t;
    }
    if let Some(n) = o.max_iter {
        cfg.max_iter = n;
    }
    if let Some(rule) = o.step_rule {
        cfg.step_rule = match rule {
            StepRuleArg::Harmonic => StepRule::Harmonic,
            StepRuleArg::HarmonicOffset => StepRule::HarmonicOffset {
                offset: o.step_offset,
            },
            StepRuleArg::SqrtDecay => StepRule::SqrtDecay,
        };
    }
    if let Some(c) = o.step_scale {
        cfg.step_scale = c;
    }
    cfg.stop_on_gradient |= o.stop_on_gradient;

    fs::create_dir_all(out).map_err(|e| GhwpError::Io {
        path: out.to_path_buf(),
        source: e,
    })?;
    let trace_path = out.join(TRACE_NAME);
    let u0 = initialize(&spec.problem, &spec.init)?;
    let result = match solve(&spec.problem, &u0, &cfg) {
        Ok(r) => r,
        Err(GhwpError::Numerical {
            iteration,
            message,
            trace,
        }) => {
            // keep the partial trace for diagnosis
            write_atomic(&trace_path, &trace_to_csv(&trace)?)?;
            eprintln!("partial trace written to {}", trace_path.display());
            return Err(GhwpError::Numerical {
                iteration,
                message,
                trace,
            });
        }
        Err(e) => return Err(e),
    };
    let report = verify(&spec.problem, &result.best_config, verify_tol)?;

    let mut file = ResultsFile::new(&result, &cfg, Some(&report));
    file.trace_file = Some(TRACE_NAME.to_string());
    write_atomic(&trace_path, &trace_to_csv(&result.trace)?)?;
    write_atomic(&out.join(RESULTS_NAME), &file.to_json())?;

    if result.initial_projected {
        println!("initial configuration was infeasible and has been projected");
    }
    println!("J_best      {}", fmt_sig(result.best_objective));
    println!("iterations  {}", result.iterations);
    println!("stop        {}", label(&result.stop_reason));
    for c in &result.checkpoints {
        match c.iteration {
            Some(k) => println!("  |dJ| < {:e} first at k = {k}", c.tolerance),
            None => println!("  |dJ| < {:e} not reached", c.tolerance),
        }
    }
    println!(
        "verdict     {} (tol {:e})",
        label(&report.verdict),
        verify_tol
    );
    println!("written     {}", out.join(RESULTS_NAME).display());
    Ok(())
}

/// The snake_case name a value serialises to.
fn label<T: serde::Serialize>(v: &T) -> String {
    match serde_json::to_value(v) {
        Ok(serde_json::Value::String(s)) => s,
        _ => "unknown".to_string(),
    }
}

fn load_solution(
    spec_path: &Path,
    results_path: &Path,
) -> Result<(Problem, ResultsFile, ghwp::Configuration), GhwpError> {
    let spec = read_problem(spec_path)?;
    let results = ResultsFile::read(results_path)?;
    let u = results.check_against(&spec.problem)?;
    Ok((spec.problem, results, u))
}

fn run_verify(spec_path: &Path, results_path: &Path, tol: f64) -> Result<(), GhwpError> {
    let (p, results, u) = load_solution(spec_path, results_path)?;
    let report = verify(&p, &u, tol)?;
    println!("J_best      {}", fmt_sig(results.best_objective));
    for (i, ok) in report.chain_normal_ok.iter().enumerate() {
        println!(
            "  vertex {:<3} {}",
            i + 1,
            if *ok { "ok" } else { "violated" }
        );
    }
    println!(
        "  hub        {}",
        if report.hub_normal_ok {
            "ok"
        } else {
            "violated"
        }
    );
    println!("balance     {:.3e}", report.global_balance_norm);
    for pair in &report.overlaps.close_pairs {
        println!(
            "warning: {} and {} are {:.3e} apart; the equilibrium test assumes disjoint sets",
            pair.first, pair.second, pair.distance
        );
    }
    println!("verdict     {} (tol {:e})", label(&report.verdict), tol);
    Ok(())
}

fn run_render(
    spec_path: &Path,
    results_path: &Path,
    svg: &Path,
    trace_svg: Option<&Path>,
) -> Result<(), GhwpError> {
    let (p, results, u) = load_solution(spec_path, results_path)?;
    if let Some(path) = trace_svg {
        let name = results
            .trace_file
            .as_deref()
            .ok_or_else(|| GhwpError::InvalidInput("results file names no trace".into()))?;
        let trace_path = results_path.parent().unwrap_or(Path::new(".")).join(name);
        let text = fs::read_to_string(&trace_path).map_err(|e| GhwpError::Io {
            path: trace_path.clone(),
            source: e,
        })?;
        write_atomic(path, &render_trace_svg(&trace_from_csv(&text)?)?)?;
        println!("trace plot  {}", path.display());
    }
    match render_svg_string(&p, &u) {
        Ok(text) => {
            write_atomic(svg, &text)?;
            println!("drawing     {}", svg.display());
            Ok(())
        }
        Err(e @ GhwpError::UnsupportedDimension(_)) => {
            let table = svg.with_extension("csv");
            write_atomic(&table, &coordinate_table(&p, &u)?)?;
            eprintln!("coordinate table written to {}", table.display());
            Err(e)
        }
        Err(e) => Err(e),
    }
}

fn run_check(spec_path: &Path) -> Result<(), GhwpError> {
    let spec = read_problem(spec_path)?;
    let p = &spec.problem;
    println!("chain       {} sets in dimension {}", p.len(), p.dim());
    let degenerate = p.check_nondegeneracy();
    println!(
        "weights     {}",
        if degenerate.is_empty() {
            "nondegenerate".to_string()
        } else {
            format!("degenerate at {degenerate:?}")
        }
    );
    for (i, c) in p.connected_components()?.iter().enumerate() {
        let members: Vec<String> = c.indices.iter().map(|k| format!("C{}", k + 1)).collect();
        println!(
            "component {} {{{}}}{}",
            i + 1,
            members.join(", "),
            if c.includes_hub { " + S" } else { "" }
        );
    }
    let existence = p.check_existence()?;
    for f in &existence.findings {
        if !f.satisfied() {
            println!(
                "  no bounded set anchors component {:?}",
                f.component.indices
            );
        }
    }
    println!(
        "existence   {}",
        if existence.satisfied() {
            "guaranteed"
        } else {
            "not guaranteed"
        }
    );
    let overlaps = p.check_pairwise_disjoint(0.0)?;
    if overlaps.is_clear() {
        println!("disjoint    yes");
    } else {
        for pair in &overlaps.close_pairs {
            println!("overlap     {} and {}", pair.first, pair.second);
        }
    }
    if let Some(note) = p.uniqueness_note() {
        println!("uniqueness  {note}");
    }
    if existence.satisfied() {
        Ok(())
    } else {
        Err(GhwpError::Structural {
            field: "chain_sets".into(),
            message: "a component has no bounded set; a minimiser may not exist".into(),
        })
    }
}
