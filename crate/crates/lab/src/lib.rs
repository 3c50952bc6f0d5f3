//! Batch runner: a JSON config selects an experiment, the experiment's
//! assertions and curves land in `manifest.json` and CSV files.

pub mod config;
pub mod experiments;
pub mod report;
pub mod suites;

pub use config::{ConfigError, Experiment, RunConfig};
pub use report::{Assertion, Curve, ExperimentReport, Manifest, Status};

/// Runs the configured experiment (every experiment for `all`).
pub fn run(cfg: &RunConfig) -> Manifest {
    let list: Vec<Experiment> = match cfg.experiment {
        Experiment::All => Experiment::EACH.to_vec(),
        e => vec![e],
    };
    let reports = std::thread::scope(|scope| {
        let handles: Vec<_> = list
            .into_iter()
            .map(|e| {
                let c = cfg.for_experiment(e);
                scope.spawn(move || experiments::run_experiment(&c))
            })
            .collect();
        handles.into_iter().map(|h| h.join().expect("experiment thread panicked")).collect()
    });
    Manifest::new(cfg.clone(), reports)
}
