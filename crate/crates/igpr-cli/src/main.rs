use clap::{Parser, Subcommand};
use igpr_cli::config::{Algorithm, RunConfig};
use igpr_cli::{report, runner, CliError};
use std::path::{Path, PathBuf};

/// Likelihood-free inference experiments over registered simulators.
#[derive(Parser)]
#[command(name = "igpr", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every trial of a config and write a result bundle.
    Run {
        /// TOML run configuration.
        config: PathBuf,
        /// Output root; defaults to $IGPR_OUTPUT_ROOT or ./runs.
        #[arg(long)]
        output_root: Option<PathBuf>,
    },
    /// Derive tables and plot-ready series from stored bundles.
    Report {
        /// One or more bundle directories; series that compare bundles (time
        /// vs sample size) get one row per bundle.
        bundles: Vec<PathBuf>,
        /// Report directory; defaults to <first bundle>/report.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run (or reuse) the cached posterior-mean rejection oracle.
    Oracle {
        config: PathBuf,
        #[arg(long)]
        output_root: Option<PathBuf>,
    },
    /// List the registered simulation models.
    ListModels,
}

fn output_root(flag: Option<PathBuf>) -> PathBuf {
    flag.or_else(|| std::env::var_os("IGPR_OUTPUT_ROOT").map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("runs"))
}

fn config_dir(config_path: &Path) -> PathBuf {
    config_path.parent().map(Path::to_path_buf).unwrap_or_else(|| PathBuf::from("."))
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Run { config, output_root: root } => {
            let cfg = RunConfig::load(&config)?;
            let outcome = runner::run_experiment(&cfg, &config_dir(&config), &output_root(root))?;
            println!("bundle: {}", outcome.bundle_dir.display());
            println!(
                "trials: {} ok, {} failed{}",
                outcome.manifest.trial_seeds.len() - outcome.manifest.failed_trials.len(),
                outcome.manifest.failed_trials.len(),
                if outcome.manifest.aggregate_valid { "" } else { " (aggregate NOT valid)" }
            );
            Ok(())
        }
        Command::Report { bundles, out } => {
            if bundles.is_empty() {
                return Err(CliError::Config("report needs at least one bundle".into()));
            }
            let out_dir = out.unwrap_or_else(|| bundles[0].join("report"));
            let refs: Vec<&Path> = bundles.iter().map(PathBuf::as_path).collect();
            report::write_report(&refs, &out_dir)?;
            println!("report: {}", out_dir.display());
            Ok(())
        }
        Command::Oracle { config, output_root: root } => {
            let cfg = RunConfig::load(&config)?;
            if cfg.algorithm != Algorithm::Oracle {
                return Err(CliError::Config(format!(
                    "`igpr oracle` needs algorithm = \"oracle\", got \"{}\"",
                    cfg.algorithm
                )));
            }
            let outcome = runner::run_experiment(&cfg, &config_dir(&config), &output_root(root))?;
            println!("bundle: {}", outcome.bundle_dir.display());
            Ok(())
        }
        Command::ListModels => {
            for name in igpr::models::MODEL_NAMES {
                let model = igpr::models::build(name).expect("registry is consistent");
                println!(
                    "{name}: {} parameters -> {} data dimensions",
                    model.n_theta(),
                    model.n_data()
                );
            }
            Ok(())
        }
    }
}

fn main() {
    let cli = Cli::parse();
    if let Err(e) = run(cli) {
        eprintln!("error: {e}");
        std::process::exit(e.exit_code());
    }
}
