use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use glmb_core::experiment::{run_experiment, write_outputs, Meta};
use glmb_core::{RunError, ScenarioConfig};

/// Monte Carlo runs of the GLMB filter with spawning on the three-region
/// scenario.
#[derive(Debug, Parser)]
#[command(version)]
struct Args {
    /// Scenario JSON; omitted sections take their defaults.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    trials: Option<usize>,
    /// Master seed.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Spawn probability (0 disables spawning).
    #[arg(long = "p-t")]
    p_t: Option<f64>,
    /// Maximum number of GLMB components kept after each scan.
    #[arg(long)]
    cap: Option<usize>,
    /// Gibbs sweep budget per scan.
    #[arg(long)]
    hmax: Option<usize>,
    /// Worker threads (default: all cores). Outputs do not depend on it.
    #[arg(long)]
    threads: Option<usize>,
    /// Run the brute-force oracle checks and exit.
    #[arg(long)]
    selftest: bool,
}

fn load(args: &Args) -> Result<ScenarioConfig, RunError> {
    let mut cfg = match &args.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|source| RunError::Io {
                path: path.display().to_string(),
                source,
            })?;
            ScenarioConfig::from_json(&text)?
        }
        None => ScenarioConfig::default(),
    };
    if let Some(t) = args.trials {
        cfg.montecarlo.trials = t;
    }
    if let Some(s) = args.seed {
        cfg.montecarlo.seed = s;
    }
    if let Some(p) = args.p_t {
        cfg.spawn.p_t = p;
    }
    if let Some(c) = args.cap {
        cfg.filter.cap = c;
    }
    if let Some(h) = args.hmax {
        cfg.filter.hmax = h;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn git_hash() -> Option<String> {
    let out = std::process::Command::new("git")
        .args(["rev-parse", "HEAD"])
        .output()
        .ok()?;
    out.status
        .success()
        .then(|| String::from_utf8_lossy(&out.stdout).trim().to_string())
}

fn run(args: &Args) -> Result<(), RunError> {
    let cfg = load(args)?;
    log::info!(
        "running {} trials, seed {}, writing to {}",
        cfg.montecarlo.trials,
        cfg.montecarlo.seed,
        args.out.display()
    );
    let exp = run_experiment(&cfg)?;
    let violations = exp.violations().count();
    if violations > 0 {
        log::warn!("{violations} invariant violations, see diagnostics");
        for v in exp.violations().take(10) {
            log::warn!("trial {} scan {}: {}", v.trial, v.scan, v.message);
        }
    }
    let meta = Meta::new(&exp, git_hash(), rayon::current_num_threads());
    write_outputs(&args.out, &exp, &meta)?;
    log::info!("done in {:.1} s", exp.wall_seconds);
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let args = Args::parse();
    if let Some(n) = args.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: {e}");
            return ExitCode::FAILURE;
        }
    }
    if args.selftest {
        let report = glmb_core::selftest::run();
        print!("{report}");
        return if report.passed() { ExitCode::SUCCESS } else { ExitCode::FAILURE };
    }
    match run(&args) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
