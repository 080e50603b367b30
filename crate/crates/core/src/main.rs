use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use delta_scatter::report::{cmd_match, cmd_resonances, cmd_spectrum, cmd_verify, Overrides};
use delta_scatter::{Error, RunConfig};

/// Transmission spectra of delta-function potentials and windowed
/// three-spike resonance matching.
#[derive(Debug, Parser)]
#[command(name = "delta-scatter", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Write the transmission curve as `k,T` CSV.
    Spectrum(Args),
    /// List predicted resonances and their fitting windows.
    Resonances(Args),
    /// Fit a positive-only three-spike system in every window.
    Match(Args),
    /// Check exact-isospectrality conditions and the high-k mismatch.
    Verify(Args),
}

#[derive(Debug, clap::Args)]
struct Args {
    /// JSON run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Output directory, replacing `out_dir` from the config.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also write SVG plots.
    #[arg(long)]
    plots: bool,
    /// Strength ceiling as a multiple of |alpha1|.
    #[arg(long, value_name = "F")]
    strength_bound_factor: Option<f64>,
    #[arg(long, value_name = "N")]
    seed: Option<u64>,
    /// Fit once over the whole k range instead of per resonance window.
    #[arg(long)]
    global: bool,
}

fn run(command: Command) -> Result<Vec<PathBuf>, Error> {
    let (Command::Spectrum(args)
    | Command::Resonances(args)
    | Command::Match(args)
    | Command::Verify(args)) = &command;
    let mut config = RunConfig::load(&args.config)?;
    config.apply(&Overrides {
        out_dir: args.out.clone(),
        plots: args.plots,
        strength_bound_factor: args.strength_bound_factor,
        seed: args.seed,
        global: args.global,
    });

    match command {
        Command::Spectrum(_) => cmd_spectrum(&config),
        Command::Resonances(_) => {
            let (report, written) = cmd_resonances(&config)?;
            for r in &report.resonances {
                println!(
                    "n={} k={:.6} window=[{:.6}, {:.6}]",
                    r.n, r.k_n, r.window_lo, r.window_hi
                );
            }
            if report.resonances.is_empty() {
                println!("no resonances in [{}, {}]", report.k_min, report.k_max);
            }
            Ok(written)
        }
        Command::Match(_) => {
            let (report, written) = cmd_match(&config)?;
            for w in &report.windows {
                println!(
                    "W{} [{:.6}, {:.6}] mse={:.3e} dense={:.3e} iterations={} converged={}",
                    w.window.index,
                    w.window.lo,
                    w.window.hi,
                    w.mse,
                    w.mse_dense,
                    w.iterations,
                    w.converged
                );
            }
            println!("mean mse={:.3e}", report.summary.mean_mse);
            Ok(written)
        }
        Command::Verify(_) => {
            let (report, written) = cmd_verify(&config)?;
            for e in &report.entries {
                println!(
                    "{}: strength sums {}, pairwise products {}, sup k^2|dT|={:.6e}",
                    e.label,
                    if e.verdict.strength_sum_ok {
                        "equal"
                    } else {
                        "differ"
                    },
                    if e.verdict.pairwise_products_ok {
                        "vanish"
                    } else {
                        "nonzero"
                    },
                    e.mismatch_sup
                );
            }
            Ok(written)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli.command) {
        Ok(written) => {
            for path in written {
                println!("wrote {}", path.display());
            }
            ExitCode::SUCCESS
        }
        Err(e @ Error::NoResonances { .. }) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
