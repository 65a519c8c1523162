use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use mrmhd::cases::L2Norm;
use mrmhd::config::{NormSampling, SimConfig};
use mrmhd::output::{norms_for_dump, run_config};
use mrmhd::{Direction, Error, GasGamma};

/// Adaptive multiresolution GLM-MHD solver. Set RAYON_NUM_THREADS to fix the worker count.
#[derive(Parser)]
#[command(version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a simulation; `--key value` pairs override the config file.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(trailing_var_arg = true, allow_hyphen_values = true)]
        overrides: Vec<String>,
    },
    /// Error norms of a mesh dump against a reference file.
    Norms {
        #[arg(long)]
        result: PathBuf,
        #[arg(long)]
        reference: PathBuf,
        #[arg(long, default_value = "x")]
        axis: String,
        #[arg(long, default_value_t = 5.0 / 3.0)]
        gamma: f64,
        #[arg(long, default_value = "count-root")]
        norm: String,
        #[arg(long)]
        centerline: bool,
    },
}

fn pairs(args: &[String]) -> Result<Vec<(String, String)>, Error> {
    let mut out = Vec::new();
    let mut it = args.iter();
    while let Some(a) = it.next() {
        let key = a
            .strip_prefix("--")
            .ok_or_else(|| Error::config(a.as_str(), "expected `--key value`"))?;
        if let Some((k, v)) = key.split_once('=') {
            out.push((k.to_string(), v.to_string()));
            continue;
        }
        let v = it.next().ok_or_else(|| Error::config(key, "missing value"))?;
        out.push((key.to_string(), v.clone()));
    }
    Ok(out)
}

fn execute(cli: Cli) -> Result<(), Error> {
    match cli.command {
        Command::Run { config, overrides } => {
            let cfg = SimConfig::load(&config, &pairs(&overrides)?)?;
            let s = run_config(&cfg)?;
            println!(
                "{} steps, leaf fraction mean {:.2}% final {:.2}%, outputs in {}",
                s.steps,
                s.compression.mean,
                s.compression.last,
                s.output.display()
            );
            if let Some(e) = s.errors {
                print!("{}", e.table_csv(cfg.norm));
            }
        }
        Command::Norms {
            result,
            reference,
            axis,
            gamma,
            norm,
            centerline,
        } => {
            let axis = match axis.as_str() {
                "x" => Direction::X,
                "y" => Direction::Y,
                "z" => Direction::Z,
                other => return Err(Error::config("axis", format!("unknown value `{other}`"))),
            };
            let norm = L2Norm::parse(&norm).ok_or_else(|| Error::config("norm", format!("unknown value `{norm}`")))?;
            let gamma = GasGamma::new(gamma)?;
            let sampling = if centerline { NormSampling::Centerline } else { NormSampling::FullGrid };
            let report = norms_for_dump(&result, &reference, gamma, axis, sampling)?;
            print!("{}", report.table_csv(norm));
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match execute(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            log::error!("{e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
