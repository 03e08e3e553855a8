//! Experiment orchestration: configuration, runners and result tables.

pub mod config;
pub mod experiments;
pub mod results;

pub use config::{ExperimentConfig, ExperimentKind};
pub use experiments::run_experiment;
pub use results::{Diagnostics, ResultTable};

/// Caps the rayon pool at LAB_THREADS when that variable is set.
pub fn configure_threads() {
    if let Some(n) = std::env::var("LAB_THREADS")
        .ok()
        .and_then(|v| v.parse::<usize>().ok())
    {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build_global()
        {
            log::warn!("could not configure {n} threads: {e}");
        }
    }
}
