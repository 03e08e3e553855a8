//! Programmatic experiment run: builds a van Hove cross-check config in code,
//! runs it and prints the result table.

use spinboson_lab::lab::config::{ExperimentConfig, ExperimentKind, ModelSource};
use spinboson_lab::lab::run_experiment;

fn main() -> spinboson_lab::error::Result<()> {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/configs/vanhove_bounded.toml");
    let mut cfg = ExperimentConfig::new(ExperimentKind::VanhoveCrosscheck);
    cfg.model = Some(ModelSource::Path(path.to_string()));
    cfg.grids.lambdas = vec![1.0];
    cfg.grids.times = vec![0.0, 1.0, 2.0, 5.0];
    cfg.fock.modes = 12;
    cfg.fock.n_max = 5;
    cfg.validate()?;
    let table = run_experiment(&cfg)?;
    print!("{}", table.to_csv());
    println!("{}", table.metadata_json()?);
    Ok(())
}
