use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use dvlaccel_cli::config::RunConfig;
use dvlaccel_cli::pipeline::{self, ReportFormat};
use dvlaccel_cli::CliError;

/// Offline experiments comparing a CNN-LSTM acceleration regressor against
/// the least-squares baseline on synthetic DVL trajectory segments.
#[derive(Parser)]
#[command(name = "dvlaccel", version, about)]
struct Cli {
    /// Declarative run file (TOML); defaults apply when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Master seed override: reseeds simulation, augmentation, split,
    /// initialization, and shuffling.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Output directory override.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Machine-readable report format.
    #[arg(long, global = true, value_enum, default_value = "json")]
    format: ReportFormat,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate the configured trajectory segments as CSV files.
    Simulate,
    /// Write one augmented copy of every training segment.
    Augment,
    /// Assemble the train/validation/test split and write its manifest.
    Split,
    /// Train the network and write the checkpoint and loss history.
    Train,
    /// Evaluate the trained network's RMSE on the test segments.
    Eval,
    /// Compare the network against the least-squares baseline.
    Compare,
    /// Run simulate, augment, split, train, compare, and plot in order.
    Pipeline,
    /// Render the loss curve and prediction trace SVGs.
    Plot,
}

fn run(cli: Cli) -> Result<(), CliError> {
    let mut config = RunConfig::load_or_default(cli.config.as_deref())?;
    config.apply_overrides(cli.seed, cli.out.as_deref());
    match cli.command {
        Command::Simulate => {
            let written = pipeline::cmd_simulate(&config)?;
            println!("wrote {} segment files", written.len());
        }
        Command::Augment => {
            let written = pipeline::cmd_augment(&config)?;
            println!("wrote {} augmented segment files", written.len());
        }
        Command::Split => {
            let manifest = pipeline::cmd_split(&config)?;
            println!(
                "split: {} train / {} validation / {} test examples",
                manifest.train_example_count,
                manifest.validation_example_count,
                manifest.test_example_count
            );
        }
        Command::Train => {
            let (_, history) = pipeline::cmd_train(&config)?;
            let final_train = history.train.last().copied().unwrap_or(f64::NAN);
            match history.validation.last() {
                Some(val) => println!(
                    "trained {} epochs: final train loss {final_train:.6e}, val loss {val:.6e}",
                    history.train.len()
                ),
                None => println!(
                    "trained {} epochs: final train loss {final_train:.6e}",
                    history.train.len()
                ),
            }
        }
        Command::Eval => {
            let rmse = pipeline::cmd_eval(&config)?;
            println!("network test RMSE {rmse:.6e} m/s^2");
        }
        Command::Compare => {
            let report = pipeline::cmd_compare(&config, cli.format)?;
            print_report(&report);
        }
        Command::Pipeline => {
            let outputs = pipeline::run_pipeline(&config, cli.format)?;
            print_report(&outputs.report);
            println!("artifacts in {}", config.out_dir.0.display());
        }
        Command::Plot => {
            let plots = pipeline::cmd_plot(&config)?;
            for path in plots {
                println!("wrote {}", path.display());
            }
        }
    }
    Ok(())
}

fn print_report(report: &dvlaccel_cli::report::ComparisonReport) {
    println!(
        "network RMSE {:.6e} m/s^2 | least-squares RMSE {:.6e} m/s^2 | improvement {:.1}%",
        report.dl_rmse, report.ls_rmse, report.improvement_pct
    );
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(err.exit_code() as u8)
        }
    }
}
