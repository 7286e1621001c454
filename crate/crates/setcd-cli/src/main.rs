//! Experiment runner CLI: run config files or built-in presets, inspect
//! graph spectra, and emit rate certificates.

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use setcd::experiment::{self, ExperimentConfig, SummaryReport};
use setcd::Topology;

#[derive(Parser)]
#[command(name = "setcd", about = "Setwise coordinate descent experiment harness")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment described by a JSON config file.
    Run {
        /// Path to the experiment config.
        config: PathBuf,
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Run a built-in preset by name.
    Preset {
        /// Preset name; see `--list`.
        name: Option<String>,
        /// List available presets and exit.
        #[arg(long)]
        list: bool,
        /// Comma-separated replication seeds overriding the preset's.
        #[arg(long, value_delimiter = ',')]
        seeds: Vec<u64>,
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Print the Laplacian spectral summary of a topology JSON file.
    Spectrum {
        /// Path to `{"n": ..., "edges": [[i, j], ...]}`.
        topology: PathBuf,
    },
    /// Emit the rate certificate for an experiment config.
    Certify {
        /// Path to the experiment config.
        config: PathBuf,
    },
}

#[derive(Args)]
struct CommonArgs {
    /// Output directory for CSV traces and the summary JSON.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Skip writing artifacts; print the summary only.
    #[arg(long)]
    no_artifacts: bool,
}

fn load_config(path: &PathBuf) -> Result<ExperimentConfig> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("reading {}", path.display()))?;
    Ok(ExperimentConfig::from_json(&text)?)
}

fn report_and_exit(report: &SummaryReport) -> ExitCode {
    println!("experiment: {}", report.name);
    println!(
        "graph: n={} E={} N_max={}",
        report.nodes, report.edges, report.max_degree
    );
    for a in &report.algorithms {
        print!(
            "  {:>6}: rho={:.4e} R2={:.4} final_subopt={:.3e} vectors={}",
            a.algorithm, a.rho, a.r_squared, a.final_subopt, a.vectors_transmitted
        );
        if let Some(ts) = a.time_slope {
            print!(" time_slope={ts:.4e}");
        }
        println!();
    }
    for (name, ratio) in &report.ratios {
        println!("  ratio {name} = {ratio:.3}");
    }
    let mut failed = false;
    for c in &report.checks {
        println!(
            "  check {:<32} {} ({})",
            c.name,
            if c.passed { "pass" } else { "FAIL" },
            c.detail
        );
        failed |= !c.passed;
    }
    if failed {
        ExitCode::FAILURE
    } else {
        ExitCode::SUCCESS
    }
}

fn main() -> Result<ExitCode> {
    let cli = Cli::parse();
    match cli.command {
        Command::Run { config, common } => {
            let config = load_config(&config)?;
            let out = (!common.no_artifacts).then_some(common.out.as_path());
            let report = experiment::run_experiment(&config, out)?;
            Ok(report_and_exit(&report))
        }
        Command::Preset {
            name,
            list,
            seeds,
            common,
        } => {
            if list {
                for name in experiment::preset_names() {
                    println!("{name}");
                }
                return Ok(ExitCode::SUCCESS);
            }
            let Some(name) = name else {
                bail!("preset name required (or --list)");
            };
            let mut config = experiment::preset(&name)?;
            if !seeds.is_empty() {
                config.seeds = seeds;
            }
            let out = (!common.no_artifacts).then_some(common.out.as_path());
            let report = experiment::run_experiment(&config, out)?;
            Ok(report_and_exit(&report))
        }
        Command::Spectrum { topology } => {
            let text = std::fs::read_to_string(&topology)
                .with_context(|| format!("reading {}", topology.display()))?;
            let topo = Topology::from_json(&text).map_err(|e| anyhow::anyhow!(e))?;
            let spectrum = topo
                .laplacian_spectrum::<f64>()
                .map_err(|e| anyhow::anyhow!(e.to_string()))?;
            println!("{}", serde_json::to_string_pretty(&spectrum)?);
            Ok(ExitCode::SUCCESS)
        }
        Command::Certify { config } => {
            let config = load_config(&config)?;
            let topology = config.topology.build()?;
            match experiment::certificate_for_config(&topology, &config.problem)? {
                Some(cert) => {
                    println!("{}", serde_json::to_string_pretty(&cert)?);
                    Ok(ExitCode::SUCCESS)
                }
                None => bail!(
                    "certificates need closed-form coordinate smoothness; \
                     this problem kind only supports estimated constants"
                ),
            }
        }
    }
}
