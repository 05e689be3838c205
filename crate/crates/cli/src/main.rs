use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use critflow_cli::run::{default_out, workers_from_env};
use critflow_cli::{list_experiments, plan, plot, run_many, select, CliError, Overrides, MODULES};

#[derive(Parser)]
#[command(name = "critflow", version, about = "Verification experiments for SDE flows with critical drifts")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one experiment, a module or `all`.
    Run {
        target: String,
        /// Flat TOML overrides.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Seed for every selected experiment.
        #[arg(long)]
        seed: Option<u64>,
        /// Output directory.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// List registered experiments.
    List {
        #[arg(long)]
        module: Option<String>,
    },
    /// Emit tidy plot data from result CSVs below a directory.
    Plot {
        /// holder, mlevel or picard.
        view: String,
        #[arg(long)]
        from: PathBuf,
        /// Write here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn dispatch(cmd: Command) -> Result<i32, CliError> {
    match cmd {
        Command::Run { target, config, seed, out } => {
            let overrides = match &config {
                Some(p) => Overrides::load(p)?,
                None => Overrides::default(),
            };
            let ids = select(&target)?;
            let cfgs = plan(&ids, &overrides, seed)?;
            let workers = workers_from_env()?;
            let out = out.unwrap_or_else(default_out);
            let manifest = run_many(&cfgs, &out, workers, seed.or(overrides.seed))?;
            for e in &manifest.experiments {
                println!("{:<28} {:<13} {:>9.2} s", e.id, e.verdict, e.wall_seconds);
                if let Some(err) = &e.error {
                    println!("    {err}");
                }
                for c in e.checks.iter().filter(|c| c.outcome != "pass") {
                    println!("    {} / {} [{}]: {}", c.report, c.name, c.outcome, c.detail);
                }
            }
            println!("manifest: {}", out.join("manifest.json").display());
            Ok(manifest.exit_code())
        }
        Command::List { module } => {
            if let Some(m) = &module {
                if !MODULES.contains(&m.as_str()) {
                    return Err(CliError::Config(format!("unknown module `{m}`; available: {}", MODULES.join(", "))));
                }
            }
            for e in list_experiments(module.as_deref()) {
                println!("{:<24} {:<18} {}", e.id, e.module, e.summary);
            }
            Ok(0)
        }
        Command::Plot { view, from, out } => {
            let csv = plot::plot_dir(&from, &view)?;
            match out {
                Some(p) => std::fs::write(&p, csv).map_err(|e| CliError::Io { path: p, source: e })?,
                None => print!("{csv}"),
            }
            Ok(0)
        }
    }
}
