// SPDX-License-Identifier: Apache-2.0

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use bittide_core::harness::{
    compare_runs, run_experiment, suite_config, ExperimentConfig, RunOutput, Scale, SUITE_NAMES,
};
use bittide_core::Error;
use clap::{Args, Parser, Subcommand};

/// Simulate bittide networks and manage experiment artifacts.
#[derive(Parser)]
#[command(version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct RunFlags {
    /// Override the config's RNG seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Override the output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also write freq.svg and buffers.svg.
    #[arg(long)]
    svg: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Run one experiment config.
    Run {
        config: PathBuf,
        #[command(flatten)]
        flags: RunFlags,
    },
    /// Run a bundled experiment, or `all` of them.
    Suite {
        name: String,
        #[arg(long, default_value = "desk")]
        scale: String,
        #[command(flatten)]
        flags: RunFlags,
    },
    /// Compare the frequency traces of two run directories.
    Compare { dir_a: PathBuf, dir_b: PathBuf },
    /// Parse and check a config without running it.
    Validate { config: PathBuf },
}

fn apply(mut cfg: ExperimentConfig, flags: &RunFlags, out_root: Option<&Path>) -> ExperimentConfig {
    if let Some(seed) = flags.seed {
        cfg.sim.seed = seed;
    }
    if let Some(root) = out_root {
        cfg.out_dir = root.to_path_buf();
    }
    cfg.svg |= flags.svg;
    cfg
}

fn report(out: &RunOutput, cfg: &ExperimentConfig) {
    let s = &out.summary;
    let ttb = s
        .time_to_band()
        .map_or("never".to_string(), |t| format!("{t:.3} s"));
    println!(
        "{}: spread within {} ppm from {ttb}, final {:.3} ppm, {:.2} s wall clock -> {}",
        cfg.name,
        cfg.band_ppm,
        s.final_spread().unwrap_or(0.0),
        s.wall_clock.as_secs_f64(),
        cfg.out_dir.display()
    );
}

fn config_file(path: &Path) -> Result<ExperimentConfig, Error> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Usage(format!("cannot read {}: {e}", path.display())))?;
    text.parse()
}

fn execute(cli: Cli) -> Result<(), Error> {
    match cli.command {
        Command::Run { config, flags } => {
            let cfg = apply(config_file(&config)?, &flags, flags.out.as_deref());
            let out = run_experiment(&cfg)?;
            report(&out, &cfg);
        }
        Command::Suite { name, scale, flags } => {
            let scale: Scale = scale.parse()?;
            let names: Vec<&str> = if name == "all" {
                SUITE_NAMES.to_vec()
            } else {
                vec![name.as_str()]
            };
            let mut configs = Vec::new();
            for n in &names {
                let cfg = suite_config(n, scale)?;
                let out = flags.out.as_ref().map(|root| root.join(&cfg.name));
                configs.push(apply(cfg, &flags, out.as_deref()));
            }
            let results: Vec<_> = std::thread::scope(|s| {
                let handles: Vec<_> = configs
                    .iter()
                    .map(|cfg| s.spawn(move || run_experiment(cfg)))
                    .collect();
                handles.into_iter().map(|h| h.join().expect("run panicked")).collect()
            });
            let mut first_err = None;
            for (cfg, result) in configs.iter().zip(results) {
                match result {
                    Ok(out) => report(&out, cfg),
                    Err(e) => {
                        eprintln!("{}: {e}", cfg.name);
                        first_err.get_or_insert(e);
                    }
                }
            }
            if let Some(e) = first_err {
                return Err(e);
            }
        }
        Command::Compare { dir_a, dir_b } => {
            println!("{}", compare_runs(&dir_a, &dir_b)?);
        }
        Command::Validate { config } => {
            let cfg = config_file(&config)?;
            let report = cfg.sim.topology.validate();
            for w in &report.warnings {
                println!("warning: {w}");
            }
            println!(
                "{}: ok ({} nodes, {} links, mode {})",
                cfg.name,
                cfg.sim.topology.n_nodes(),
                cfg.sim.topology.links().len(),
                cfg.sim.mode
            );
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
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
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
