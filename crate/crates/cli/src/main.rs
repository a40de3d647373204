use anyhow::{anyhow, Context, Result};
use clap::{Args, Parser, Subcommand};
use cxpath::experiments::{self, ExperimentConfig, ExperimentKind, ExperimentOutput};
use cxpath::Error;
use std::path::PathBuf;
use std::process::ExitCode;

/// Time integration along complex time-step paths.
#[derive(Parser, Debug)]
#[command(name = "cxpath", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Convergence study over a step ladder.
    Converge(Common),
    /// Stability regions and ray extents.
    Stability(Common),
    /// Path polylines for plotting.
    Paths(Common),
    /// Maximal SSP steps on y' = -y e^{-y}.
    Ssp(Common),
    /// Ralston RK3 against the complex 3-step path on the Schrödinger problem.
    Schrodinger(Common),
    /// Searches for complex composite RK2/RK3 coefficients.
    SolveComposite(Common),
}

#[derive(Args, Debug, Clone)]
struct Common {
    /// JSON experiment config; flags override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory for CSV and gnuplot files.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Match function-evaluation budgets across methods.
    #[arg(long)]
    fair: bool,
    /// Exit with status 4 when an acceptance threshold is missed.
    #[arg(long)]
    check: bool,
    /// Problem name (repeatable).
    #[arg(long = "problem")]
    problems: Vec<String>,
    /// Method or path name (repeatable).
    #[arg(long = "method")]
    methods: Vec<String>,
}

const EXIT_CONFIG: u8 = 2;
const EXIT_NUMERIC: u8 = 3;
const EXIT_CHECK: u8 = 4;

#[derive(Debug)]
struct Failure {
    code: u8,
    error: anyhow::Error,
}

fn config_error(e: impl Into<anyhow::Error>) -> Failure {
    Failure {
        code: EXIT_CONFIG,
        error: e.into(),
    }
}

fn classify(e: Error) -> Failure {
    let code = match &e {
        Error::Argument(_) | Error::NotFound(_) | Error::Capability(_) | Error::Json(_) => EXIT_CONFIG,
        _ => EXIT_NUMERIC,
    };
    Failure {
        code,
        error: e.into(),
    }
}

fn load_config(kind: ExperimentKind, args: &Common) -> Result<ExperimentConfig, Failure> {
    let mut cfg = match &args.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .with_context(|| format!("reading {}", path.display()))
                .map_err(config_error)?;
            ExperimentConfig::from_json(&text)
                .with_context(|| format!("parsing {}", path.display()))
                .map_err(config_error)?
        }
        None => ExperimentConfig::for_kind(kind),
    };
    cfg.kind = kind;
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    if let Some(out) = &args.out {
        cfg.out = Some(out.clone());
    }
    if args.fair {
        cfg.fair = true;
    }
    if !args.problems.is_empty() {
        cfg.problems = args.problems.clone();
    }
    if !args.methods.is_empty() {
        cfg.methods = args.methods.clone();
    }
    cfg.validate().map_err(classify)?;
    Ok(cfg)
}

fn summarise(output: &ExperimentOutput) {
    match output {
        ExperimentOutput::Converge(tables) => {
            for t in tables {
                let slope = t.slope.map_or("n/a".to_string(), |s| format!("{s:.4}"));
                let failed = t.rows.iter().filter(|r| r.error.is_none()).count();
                println!("{:<12} {:<28} slope {slope:>8}  ({failed} failed rows)", t.problem, t.method);
            }
        }
        ExperimentOutput::Stability(entries) => {
            for e in entries {
                for (d, x) in &e.extents {
                    let bound = if x.unbounded { " (unbounded)" } else { "" };
                    println!("{:<28} ray {d:.4}: extent {:.6}{bound}", e.name, x.extent);
                }
            }
        }
        ExperimentOutput::Paths(lines) => println!("{} polylines", lines.len()),
        ExperimentOutput::Ssp(curve) => println!("{} methods × {} samples", curve.methods.len(), curve.u.len()),
        ExperimentOutput::Schrodinger(cmp) => {
            for r in &cmp.rows {
                println!(
                    "dt {:.3e}: {} {:.3e} / {} {:.3e} ({} / {} evaluations)",
                    r.dt, cmp.methods[0], r.errors[0], cmp.methods[1], r.errors[1], r.evaluations[0], r.evaluations[1]
                );
            }
        }
        ExperimentOutput::SolveComposite(sol) => {
            println!("start {} residual {:.3e}", sol.start_index, sol.residual_inf)
        }
    }
}

fn run(cli: Cli) -> Result<(), Failure> {
    let (kind, args) = match cli.command {
        Command::Converge(a) => (ExperimentKind::Converge, a),
        Command::Stability(a) => (ExperimentKind::Stability, a),
        Command::Paths(a) => (ExperimentKind::Paths, a),
        Command::Ssp(a) => (ExperimentKind::Ssp, a),
        Command::Schrodinger(a) => (ExperimentKind::Schrodinger, a),
        Command::SolveComposite(a) => (ExperimentKind::SolveComposite, a),
    };
    let cfg = load_config(kind, &args)?;
    let output = experiments::run(&cfg).map_err(classify)?;
    summarise(&output);
    let dir = cfg.out.clone().unwrap_or_else(|| PathBuf::from("cxpath-out"));
    let written = experiments::write_outputs(&cfg, &output, &dir).map_err(classify)?;
    for p in &written {
        println!("wrote {}", p.display());
    }
    if args.check {
        let checks = experiments::checks(&output);
        let missed: Vec<_> = checks.iter().filter(|c| !c.passed).collect();
        for c in &checks {
            let verdict = if c.passed { "PASS" } else { "FAIL" };
            println!("{verdict} {} {}", c.name, c.detail);
        }
        if !missed.is_empty() {
            return Err(Failure {
                code: EXIT_CHECK,
                error: anyhow!("{} of {} checks missed", missed.len(), checks.len()),
            });
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {:#}", f.error);
            ExitCode::from(f.code)
        }
    }
}
