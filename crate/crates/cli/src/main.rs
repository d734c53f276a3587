use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};
use kirchhoff_cli::checks::Verdict;
use kirchhoff_cli::{presets, run_scenario, write_artifacts, ScenarioConfig, ScenarioError};

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Switch {
    On,
    Off,
}

/// Traces positive-solution branches of the nonlocal Kirchhoff problem and
/// checks them against the threshold constants.
///
/// Exit codes: 0 all checks pass, 1 a check failed, 2 configuration error,
/// 3 solver failure.
#[derive(Debug, Parser)]
#[command(name = "kcont", version)]
struct Args {
    /// Scenario file (`key = value` lines).
    #[arg(long, conflicts_with = "preset", required_unless_present_any = ["preset", "list_presets"])]
    config: Option<PathBuf>,
    /// Built-in scenario, e.g. fig3b.
    #[arg(long)]
    preset: Option<String>,
    #[arg(long)]
    out_dir: Option<PathBuf>,
    #[arg(long)]
    mesh_n: Option<usize>,
    /// Optimizer seed.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, value_enum)]
    checks: Option<Switch>,
    /// Print the preset names and exit.
    #[arg(long)]
    list_presets: bool,
}

const CONFIG_ERROR: u8 = 2;
const SOLVER_ERROR: u8 = 3;

fn load(args: &Args) -> Result<(ScenarioConfig, PathBuf), String> {
    let (mut cfg, base) = match (&args.config, &args.preset) {
        (Some(path), _) => {
            let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
            let cfg = ScenarioConfig::parse(&text).map_err(|e| format!("{}: {e}", path.display()))?;
            let base = path.parent().map(PathBuf::from).unwrap_or_default();
            (cfg, base)
        }
        (None, Some(name)) => (presets::load(name).map_err(|e| e.to_string())?, PathBuf::from(".")),
        (None, None) => return Err("one of --config or --preset is required".into()),
    };
    if let Some(n) = args.mesh_n {
        cfg.mesh_n = n;
    }
    if let Some(s) = args.seed {
        cfg.seed = s;
    }
    if let Some(c) = args.checks {
        cfg.checks = matches!(c, Switch::On);
    }
    if let Some(d) = &args.out_dir {
        cfg.out_dir = d.clone();
    }
    cfg.validate().map_err(|e| e.to_string())?;
    Ok((cfg, base))
}

fn main() -> ExitCode {
    let args = match Args::try_parse() {
        Ok(a) => a,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(CONFIG_ERROR),
            };
        }
    };
    if args.list_presets {
        for name in presets::names() {
            println!("{name}");
        }
        return ExitCode::SUCCESS;
    }
    let (cfg, base) = match load(&args) {
        Ok(v) => v,
        Err(e) => {
            eprintln!("kcont: {e}");
            return ExitCode::from(CONFIG_ERROR);
        }
    };
    let outcome = match run_scenario(&cfg, &base) {
        Ok(o) => o,
        Err(ScenarioError::Config(e)) => {
            eprintln!("kcont: {e}");
            return ExitCode::from(CONFIG_ERROR);
        }
        Err(e) => {
            eprintln!("kcont: {e}");
            return ExitCode::from(SOLVER_ERROR);
        }
    };
    if let Err(e) = write_artifacts(&outcome, &cfg.out_dir) {
        eprintln!("kcont: {e}");
        return ExitCode::from(SOLVER_ERROR);
    }
    for (i, item) in outcome.items.iter().enumerate() {
        for e in &item.errors {
            eprintln!("item {i} (a = {}): {e}", item.a);
        }
        for c in &item.checks {
            println!("{:<13} {:<38} {}", c.verdict, c.id, c.scenario);
        }
    }
    if outcome.any_hard_failure() {
        ExitCode::from(SOLVER_ERROR)
    } else if outcome.any_failed_check() {
        ExitCode::from(1)
    } else {
        let inconclusive = outcome
            .items
            .iter()
            .flat_map(|i| &i.checks)
            .filter(|c| c.verdict == Verdict::Inconclusive)
            .count();
        if inconclusive > 0 {
            eprintln!("{inconclusive} check(s) inconclusive");
        }
        ExitCode::SUCCESS
    }
}
