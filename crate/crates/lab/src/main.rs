use clap::{Parser, Subcommand};
use krs_core::geometry::BackendId;
use lab::config::{Experiment, Kappa};
use lab::RunConfig;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "lab", version, about = "Run soliton-energy experiments and write manifests")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one experiment (or `all`) and write manifest.json plus CSV curves.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        experiment: Option<Experiment>,
        #[arg(long)]
        backend: Option<BackendId>,
        #[arg(long)]
        grid: Option<usize>,
        /// A number, or `soliton` for the root of the invariant.
        #[arg(long, allow_hyphen_values = true)]
        kappa: Option<Kappa>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    let Command::Run {
        config,
        experiment,
        backend,
        grid,
        kappa,
        seed,
        out,
    } = Cli::parse().command;

    let mut cfg = match RunConfig::load(&config) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("{e}");
            return ExitCode::from(2);
        }
    };
    if let Some(v) = experiment {
        cfg.experiment = v;
    }
    if let Some(v) = backend {
        cfg.backend = v;
    }
    if let Some(v) = grid {
        cfg.grid = v;
    }
    if let Some(v) = kappa {
        cfg.kappa = v;
    }
    if let Some(v) = seed {
        cfg.seed = v;
    }
    if let Some(v) = out {
        cfg.out_dir = v;
    }
    if let Err(e) = cfg.validate() {
        eprintln!("{e}");
        return ExitCode::from(2);
    }

    let mut manifest = lab::run(&cfg);
    for e in &manifest.experiments {
        let failed: Vec<&str> = e.assertions.iter().filter(|a| !a.passed).map(|a| a.name.as_str()).collect();
        println!(
            "{:<15} {:?} ({} assertions, {:.1} s){}",
            e.experiment,
            e.status,
            e.assertions.len(),
            e.seconds,
            if failed.is_empty() { String::new() } else { format!(" failed: {}", failed.join(", ")) }
        );
        if let Some(err) = &e.error {
            println!("{:<15} error: {err}", "");
        }
    }
    match manifest.write(&cfg.out_dir) {
        Ok(p) => println!("manifest: {}", p.display()),
        Err(e) => {
            eprintln!("cannot write outputs to {}: {e}", cfg.out_dir.display());
            return ExitCode::from(2);
        }
    }
    if manifest.passed {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
