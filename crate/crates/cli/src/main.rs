use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use bolza_core::experiments::{self, to_json, Outcome, RunConfig};
use bolza_core::LabError;
use clap::{Parser, Subcommand};
use serde::Serialize;
use serde_json::json;

#[derive(Parser, Debug)]
#[command(name = "bolza-lab", version, about = "Reproducible experiments on the geodesic flow of the Bolza surface")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// JSON run configuration; unspecified fields take their defaults.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Override the master seed.
    #[arg(long, global = true, value_name = "N")]
    seed: Option<u64>,
    /// Override the output directory.
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Worker threads (results do not depend on this).
    #[arg(long, global = true, value_name = "N", env = "LAB_THREADS")]
    threads: Option<usize>,
}

#[derive(Subcommand, Debug, Clone, Copy)]
enum Command {
    /// Flow group law, Bolza relation and octagon area.
    Geometry,
    /// Closed geodesics up to census_L.
    Census,
    /// Commutation and structure identities on random fields of degree K.
    FiberCalculus,
    /// Metric, D/D* splitting and adjointness checks.
    TensorCalculus,
    /// X-ray kernel containment and the x-ray matrix of a degree-m basis.
    Xray,
    /// Solenoidal injectivity gap for degree m.
    Injectivity,
    /// Residue of the resolvent at λ = 0.
    Mixing,
    /// Symmetry and annihilation properties of Π.
    PiCheck,
    /// Symbol order of Π₀.
    Symbol,
    /// Prescribed push-forward.
    Pushforward,
    /// Coboundary consistency.
    Livsic,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::Geometry => "geometry",
            Command::Census => "census",
            Command::FiberCalculus => "fiber-calculus",
            Command::TensorCalculus => "tensor-calculus",
            Command::Xray => "xray",
            Command::Injectivity => "injectivity",
            Command::Mixing => "mixing",
            Command::PiCheck => "pi-check",
            Command::Symbol => "symbol",
            Command::Pushforward => "pushforward",
            Command::Livsic => "livsic",
        }
    }
}

const EXIT_INVARIANT: u8 = 2;
const EXIT_CONFIG: u8 = 3;
const EXIT_BUDGET: u8 = 4;
const EXIT_IO: u8 = 1;

fn exit_code(e: &LabError) -> u8 {
    match e {
        LabError::Config(_) | LabError::Degree(_) => EXIT_CONFIG,
        LabError::VarianceBudget { .. } | LabError::BudgetExceeded(_) | LabError::QuadratureNotConverged(_) => EXIT_BUDGET,
        LabError::Io(_) => EXIT_IO,
        _ => EXIT_INVARIANT,
    }
}

#[derive(Serialize)]
struct Manifest<'a> {
    subcommand: &'a str,
    version: &'a str,
    config: &'a RunConfig,
    seed: u64,
    threads: usize,
    wall_time_s: f64,
    pass: bool,
    checks: &'a [experiments::Check],
    files: Vec<String>,
}

fn error_json(sub: &str, e: &LabError) -> String {
    to_json(&json!({ "subcommand": sub, "error": { "kind": e.kind(), "message": e.to_string() } }))
}

fn fail(sub: &str, dir: Option<&Path>, e: &LabError) -> ExitCode {
    let text = error_json(sub, e);
    if let Some(d) = dir {
        if std::fs::create_dir_all(d).is_ok() {
            let _ = std::fs::write(d.join("error.json"), &text);
        }
    }
    eprint!("{text}");
    ExitCode::from(exit_code(e))
}

fn write_outputs(dir: &Path, sub: &str, cfg: &RunConfig, threads: usize, o: &Outcome, secs: f64) -> Result<(), LabError> {
    std::fs::create_dir_all(dir)?;
    let mut files = vec!["report.json".to_string()];
    std::fs::write(dir.join("report.json"), to_json(o))?;
    for t in &o.tables {
        t.write(dir)?;
        files.push(format!("{}.csv", t.name));
    }
    let _ = std::fs::remove_file(dir.join("error.json"));
    let m = Manifest {
        subcommand: sub,
        version: env!("CARGO_PKG_VERSION"),
        config: cfg,
        seed: cfg.seed,
        threads,
        wall_time_s: secs,
        pass: o.pass(),
        checks: &o.checks,
        files,
    };
    std::fs::write(dir.join("manifest.json"), to_json(&m))?;
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion | ErrorKind::DisplayHelpOnMissingArgumentOrSubcommand) {
                let _ = e.print();
                return ExitCode::SUCCESS;
            }
            return fail("", None, &LabError::Config(e.to_string()));
        }
    };
    let sub = cli.command.name();
    let mut cfg = match &cli.config {
        Some(p) => match RunConfig::load(p) {
            Ok(c) => c,
            Err(e) => return fail(sub, None, &e),
        },
        None => RunConfig::default(),
    };
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    if let Some(o) = &cli.out {
        cfg.output_dir = o.clone();
    }
    let dir = cfg.output_dir.join(sub);
    if let Err(e) = cfg.validate() {
        return fail(sub, Some(&dir), &e);
    }
    if let Some(n) = cli.threads {
        if n == 0 {
            return fail(sub, Some(&dir), &LabError::Config("threads must be at least 1".into()));
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            return fail(sub, Some(&dir), &LabError::Config(e.to_string()));
        }
    }
    let threads = rayon::current_num_threads();
    let t0 = Instant::now();
    let outcome = match experiments::run(sub, &cfg) {
        Ok(o) => o,
        Err(e) => return fail(sub, Some(&dir), &e),
    };
    let secs = t0.elapsed().as_secs_f64();
    if let Err(e) = write_outputs(&dir, sub, &cfg, threads, &outcome, secs) {
        return fail(sub, None, &e);
    }
    let verdict = if outcome.pass() { "PASS" } else { "FAIL" };
    println!("{verdict} {sub} ({secs:.1} s): {}", outcome.summary());
    println!("outputs in {}", dir.display());
    if outcome.pass() {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(EXIT_INVARIANT)
    }
}
