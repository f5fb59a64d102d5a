use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use crflow_lab::output::Artifacts;
use crflow_lab::report::Report;
use crflow_lab::{presets, scenario, verdict_code, LabError, ScenarioConfig};

/// Conformal Ricci flow lab on the 3-torus.
///
/// Exit codes: 0 every enabled check passed, 1 a check failed, 2 configuration
/// error, 3 runtime abort.
#[derive(Parser)]
#[command(name = "crflow", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct Common {
    /// Scenario file, or the name of a bundled preset.
    scenario: String,
    /// Output directory (default: the scenario's `output`, else `out/<name>`).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Flow, conjugate and heat passes, frequency checks and audits.
    Run {
        #[command(flatten)]
        common: Common,
        /// Also write plots.svg.
        #[arg(long)]
        plots: bool,
    },
    /// Auditor suites only.
    Audit {
        #[command(flatten)]
        common: Common,
    },
    /// Grid-refinement slopes on the scenario's initial metric.
    Converge {
        #[command(flatten)]
        common: Common,
        /// Grid sizes of the study.
        #[arg(long, value_delimiter = ',', default_values_t = scenario::DEFAULT_NS)]
        ns: Vec<usize>,
    },
    /// Smallest nonzero eigenvalue of the drifting Laplacian of the initial data.
    Eigen {
        #[command(flatten)]
        common: Common,
    },
    /// List the bundled presets, or print one.
    Presets { name: Option<String> },
}

fn load(arg: &str) -> Result<ScenarioConfig, LabError> {
    let path = Path::new(arg);
    if path.exists() {
        ScenarioConfig::load(path)
    } else {
        presets::load(arg)
    }
}

fn out_dir(cfg: &ScenarioConfig, common: &Common) -> PathBuf {
    common
        .out
        .clone()
        .or_else(|| cfg.output.clone())
        .unwrap_or_else(|| PathBuf::from("out").join(if cfg.name.is_empty() { "scenario" } else { &cfg.name }))
}

fn execute(
    command: &str,
    common: &Common,
    plots: bool,
    f: impl FnOnce(&ScenarioConfig) -> Result<Artifacts, LabError>,
) -> i32 {
    let cfg = match load(&common.scenario) {
        Ok(cfg) => cfg,
        Err(e) => {
            eprintln!("crflow: {e}");
            return e.exit_code();
        }
    };
    let dir = out_dir(&cfg, common);
    match f(&cfg) {
        Ok(artifacts) => {
            if let Err(e) = artifacts.write(&dir, plots) {
                eprintln!("crflow: cannot write artifacts to {}: {e}", dir.display());
                return 3;
            }
            let report = &artifacts.report;
            for c in &report.checks {
                println!("{:<16} {:<44} residual {:>12.4e}  {}", format!("{:?}", c.status).to_lowercase(), c.name, c.residual, c.detail);
            }
            let failed: Vec<&str> = report.failed().map(|c| c.name.as_str()).collect();
            if failed.is_empty() {
                println!("{command}: all {} checks passed; artifacts in {}", report.checks.len(), dir.display());
            } else {
                println!("{command}: failed checks: {}; artifacts in {}", failed.join(", "), dir.display());
            }
            verdict_code(report.pass)
        }
        Err(e) => {
            eprintln!("crflow: {e}");
            // Flush what is known so a failed run still leaves a report.
            let partial = Report::aborted(command, &cfg, e.to_string());
            let _ = Artifacts::report_only(partial).write(&dir, false);
            e.exit_code()
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let code = match &cli.command {
        Command::Run { common, plots } => execute("run", common, *plots, scenario::run),
        Command::Audit { common } => execute("audit", common, false, scenario::audit),
        Command::Converge { common, ns } => execute("converge", common, false, |cfg| scenario::converge(cfg, ns)),
        Command::Eigen { common } => execute("eigen", common, false, scenario::eigen),
        Command::Presets { name: None } => {
            for n in presets::names() {
                println!("{n}");
            }
            0
        }
        Command::Presets { name: Some(n) } => match presets::text(n) {
            Some(t) => {
                print!("{t}");
                0
            }
            None => {
                eprintln!("crflow: unknown preset `{n}`");
                2
            }
        },
    };
    ExitCode::from(code as u8)
}
