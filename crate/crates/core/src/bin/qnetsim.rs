use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use qnetsim::output::{fit_table, format_number, read_fits, read_xy_csv, resolve_output_dir, write_artifacts};
use qnetsim::simulation::Execution;
use qnetsim::sweep::{parse_values, run_sweep, SweepParam};
use qnetsim::{fit_monomolecular, fit_monomolecular_auto, fit_power_law, load_config, run_simulation, Model};

#[derive(Parser)]
#[command(name = "qnetsim", version, about = "Entanglement distribution and centrality simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one simulation and write all artifacts.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run one simulation per parameter value.
    Sweep {
        #[arg(long)]
        param: String,
        #[arg(long)]
        values: String,
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Run values one after another instead of in parallel.
        #[arg(long)]
        sequential: bool,
    },
    /// Fit a model to a two-column CSV series.
    Fit {
        #[arg(long, value_enum)]
        model: FitModel,
        #[arg(long)]
        input: PathBuf,
        /// Onset for monomolecular fits: an integer or `auto`.
        #[arg(long, default_value = "0")]
        k0: String,
    },
    /// Print the fit summary of a run directory.
    Report {
        #[arg(long = "in")]
        dir: PathBuf,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum FitModel {
    Powerlaw,
    Monomolecular,
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

fn run(cli: Cli) -> qnetsim::Result<()> {
    match cli.command {
        Command::Run { config, seed, out } => {
            let mut cfg = load_config(&config)?;
            if let Some(seed) = seed {
                cfg.seed = seed;
            }
            let dir = resolve_output_dir(out, &cfg.output_dir);
            let report = run_simulation(&cfg)?;
            write_artifacts(&report, &dir)?;
            println!(
                "{} requests ({} completed, {} failed), {} entanglements; artifacts in {}",
                cfg.m_connections,
                report.completed,
                report.failed,
                report.final_e_total(),
                dir.display()
            );
        }
        Command::Sweep { param, values, config, out, sequential } => {
            let param: SweepParam = param.parse()?;
            let values = parse_values(&values)?;
            let cfg = load_config(&config)?;
            let dir = resolve_output_dir(out, &cfg.output_dir);
            let execution = if sequential { Execution::Sequential } else { Execution::Parallel };
            let outcome = run_sweep(&cfg, param, &values, &dir, execution)?;
            for row in &outcome.rows {
                println!(
                    "{param}={:<8} e_total={:<6} top20_mean={:.2}",
                    row.value, row.final_e_total, row.top20_mean_frequency
                );
            }
            println!("comparison written to {}", outcome.comparison_csv.display());
        }
        Command::Fit { model, input, k0 } => {
            let points = read_xy_csv(&input)?;
            let fit = match model {
                FitModel::Powerlaw => fit_power_law(&points)?,
                FitModel::Monomolecular if k0 == "auto" => fit_monomolecular_auto(&points, 50)?,
                FitModel::Monomolecular => {
                    let k0 = k0.parse::<u32>().map_err(|_| {
                        qnetsim::Error::InvalidParameter(format!("--k0 must be `auto` or an integer, got {k0:?}"))
                    })?;
                    fit_monomolecular(&points, k0)?
                }
            };
            let params = match fit.model {
                Model::PowerLaw { a, b } => format!("A={} B={}", format_number(a), format_number(b)),
                Model::Monomolecular { c, d, rate, k0 } => {
                    format!("C={} D={} E={} k0={k0}", format_number(c), format_number(d), format_number(rate))
                }
            };
            println!("{params}");
            println!(
                "r2={} rmse={} points={} excluded={} converged={}",
                format_number(fit.r_squared),
                format_number(fit.rmse),
                fit.n_points,
                fit.excluded_points,
                fit.converged
            );
        }
        Command::Report { dir } => {
            print!("{}", fit_table(&read_fits(&dir)?));
        }
    }
    Ok(())
}
