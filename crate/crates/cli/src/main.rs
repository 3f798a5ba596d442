use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use dtcns_core::config::{defaults_dump, RunConfig};
use dtcns_core::harness::{self, io, plot};
use dtcns_core::td3::train::{load_policies, policy_path};
use dtcns_core::td3::train as train_policy;
use dtcns_core::Style;

/// Train connection policies and simulate epidemics on temporal social networks.
#[derive(Parser)]
#[command(name = "dtcns", version)]
struct Cli {
    /// Output root; overrides `experiment.output_dir`.
    #[arg(long, global = true, env = "DTCNS_OUT")]
    root: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train the cooperative or egocentric policy.
    Train {
        #[arg(long, value_parser = parse_trainable)]
        style: Style,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Run the scenarios and grid of a config file for one seed.
    Simulate {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 0)]
        jobs: usize,
    },
    /// Run every scenario, grid cell and seed of a config file.
    Sweep {
        #[arg(long)]
        config: Option<PathBuf>,
        /// Worker threads; 0 uses every core.
        #[arg(long, default_value_t = 0)]
        jobs: usize,
    },
    /// Draw comparison charts from the traces in a results directory.
    Plot {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long = "out")]
        output: PathBuf,
    },
    /// Recompute summaries from traces and report any mismatch.
    Verify {
        #[arg(long = "in")]
        input: PathBuf,
    },
    /// Print the effective defaults as TOML.
    Config,
}

fn parse_trainable(s: &str) -> Result<Style, String> {
    match s.parse::<Style>() {
        Ok(Style::Ignorant) => Err("ignorant nodes have no policy to train".into()),
        Ok(style) => Ok(style),
        Err(e) => Err(e.to_string()),
    }
}

fn load_config(path: Option<&Path>) -> Result<RunConfig> {
    match path {
        Some(p) => Ok(RunConfig::load(p)?),
        None => Ok(RunConfig::default()),
    }
}

/// Output root, then the policy directory (relative paths sit under the root).
fn dirs(run: &RunConfig, out: Option<&Path>) -> (PathBuf, PathBuf) {
    let root = out.map_or_else(|| run.experiment.output_dir.clone(), Path::to_path_buf);
    let policies = root.join(&run.experiment.policy_dir);
    (root, policies)
}

fn train(run: &RunConfig, out: Option<&Path>, style: Style, seed: u64) -> Result<()> {
    let (root, policy_dir) = dirs(run, out);
    let cooperative = match style {
        Style::Egocentric => Some(load_policies(&policy_dir, &[Style::Cooperative])?.cooperative.unwrap()),
        _ => None,
    };
    let outcome = train_policy::train(style, run, cooperative.as_ref(), seed)?;
    let path = policy_path(&policy_dir, style);
    outcome.policy.save(&path)?;
    std::fs::create_dir_all(&root).with_context(|| format!("cannot create {}", root.display()))?;
    let curve = root.join(format!("training_{}.csv", style.short_name()));
    let file = std::fs::File::create(&curve).with_context(|| format!("cannot create {}", curve.display()))?;
    outcome.write_curve(file).with_context(|| format!("cannot write {}", curve.display()))?;
    if let Some(last) = outcome.curve.last() {
        println!(
            "trained {} policy: {} steps, {} episodes, last episode return {:.4}",
            style.short_name(),
            last.env_steps,
            outcome.curve.len(),
            last.mean_return
        );
    }
    println!("policy: {}", path.display());
    println!("curve: {}", curve.display());
    Ok(())
}

fn run_and_write(run: &RunConfig, out: Option<&Path>, jobs: usize) -> Result<()> {
    let (root, policy_dir) = dirs(run, out);
    let policies = load_policies(&policy_dir, &run.experiment.required_policies())?;
    let result = harness::run_resilience_sweep(run, &policies, jobs)?;
    io::write_results(&root, &result.cells, run.experiment.traces)?;
    println!("{} cells written to {}", result.cells.len(), root.display());
    if run.experiment.plots {
        let files = plot::emit_plots(&result.cells, &root.join("plots"))?;
        println!("{} charts written to {}", files.len(), root.join("plots").display());
    }
    Ok(())
}

fn run(cli: Cli) -> Result<bool> {
    let out = cli.root.as_deref();
    match cli.command {
        Command::Train { style, config, seed } => {
            train(&load_config(config.as_deref())?, out, style, seed)?;
        }
        Command::Simulate { scenario, seed, jobs } => {
            let mut run = load_config(Some(&scenario))?;
            run.experiment.seeds = vec![seed];
            run_and_write(&run, out, jobs)?;
        }
        Command::Sweep { config, jobs } => {
            run_and_write(&load_config(config.as_deref())?, out, jobs)?;
        }
        Command::Plot { input, output } => {
            let cells = io::read_traces(&input)?;
            if cells.is_empty() {
                bail!("no traces under {}", input.join("traces").display());
            }
            let files = plot::emit_plots(&cells, &output)?;
            println!("{} charts written to {}", files.len(), output.display());
        }
        Command::Verify { input } => {
            let report = io::verify(&input)?;
            for p in &report.problems {
                println!("{p}");
            }
            println!(
                "{} traces, {} summary rows, {} problems",
                report.traces_checked,
                report.summary_rows,
                report.problems.len()
            );
            return Ok(report.ok());
        }
        Command::Config => print!("{}", defaults_dump()),
    }
    Ok(true)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
