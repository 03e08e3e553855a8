use std::process::{Command, Stdio};

use proptest::prelude::*;

use spinboson_lab::fock::QuadratureScheme;
use spinboson_lab::lab::config::{ExperimentConfig, ExperimentKind, ModelSource};
use spinboson_lab::lab::run_experiment;

const CONFIGS: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/configs");

fn kind_strategy() -> impl Strategy<Value = ExperimentKind> {
    prop::sample::select(vec![
        ExperimentKind::WeakCouplingScaling,
        ExperimentKind::Relaxation,
        ExperimentKind::PhotonBound,
        ExperimentKind::VanhoveCrosscheck,
    ])
}

fn grid() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(prop_oneof![0.01f64..10.0, -10.0f64..-0.01], 1..5)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn config_round_trip(
        kind in kind_strategy(),
        lambdas in grid(),
        times in grid(),
        macro_times in grid(),
        modes in 1usize..64,
        n_max in 1usize..8,
        scheme in prop::sample::select(vec![QuadratureScheme::Midpoint, QuadratureScheme::CellAverage, QuadratureScheme::GaussLegendre]),
        window in prop::option::of(0.5f64..20.0),
        seed in any::<u64>(),
        kappa in -0.2f64..0.2,
    ) {
        let mut cfg = ExperimentConfig::new(kind);
        cfg.model = Some(ModelSource::Path("model.toml".into()));
        cfg.seed = seed;
        cfg.grids.lambdas = lambdas;
        cfg.grids.times = times;
        cfg.grids.macro_times = macro_times;
        cfg.fock.modes = modes;
        cfg.fock.n_max = n_max;
        cfg.fock.scheme = scheme;
        cfg.fock.window = window;
        cfg.photon.kappa = kappa;
        let text = cfg.to_toml().unwrap();
        let back = ExperimentConfig::from_toml(&text).unwrap();
        prop_assert_eq!(&back, &cfg);
        prop_assert_eq!(back.to_toml().unwrap(), text);
    }
}

fn load(name: &str) -> ExperimentConfig {
    ExperimentConfig::load(std::path::Path::new(&format!("{CONFIGS}/{name}"))).unwrap()
}

#[test]
fn identical_config_gives_identical_rows() {
    for name in ["photon_bound.toml", "cluster_demo.toml"] {
        let mut cfg = load(name);
        if cfg.experiment == ExperimentKind::PhotonBound {
            cfg.fock.modes = 8;
            cfg.fock.n_max = 4;
        }
        let a = run_experiment(&cfg).unwrap();
        let b = run_experiment(&cfg).unwrap();
        assert_eq!(a.to_csv(), b.to_csv(), "{name}");
        assert_eq!(a.metadata.config_hash, b.metadata.config_hash);
    }
}

#[test]
fn heavy_truncation_is_flagged() {
    let mut cfg = load("vanhove_crosscheck.toml");
    cfg.fock.modes = 6;
    cfg.fock.n_max = 1;
    let table = run_experiment(&cfg).unwrap();
    assert!(table.any_flagged());
    for row in &table.rows {
        assert_eq!(row.flagged, row.diagnostics.norm_at_cutoff > 0.01);
    }
}

#[test]
fn cli_exit_code_reflects_flags() {
    let dir = tempfile::tempdir().unwrap();
    let write = |name: &str, n_max: usize, times: &str| {
        let path = dir.path().join(name);
        std::fs::write(
            &path,
            format!(
                "experiment = \"vanhove_crosscheck\"\nmodel = \"{CONFIGS}/vanhove_bounded.toml\"\n\n[grids]\nlambdas = [1.0]\ntimes = {times}\n\n[fock]\nmodes = 6\nn_max = {n_max}\n"
            ),
        )
        .unwrap();
        path
    };
    let run = |cfg: &std::path::Path| {
        Command::new(env!("CARGO_BIN_EXE_lab"))
            .args(["run", "--config"])
            .arg(cfg)
            .arg("--out")
            .arg(dir.path().join("out"))
            .stdout(Stdio::null())
            .stderr(Stdio::null())
            .status()
            .unwrap()
    };
    assert_eq!(run(&write("clean.toml", 6, "[0.0, 0.5]")).code(), Some(0));
    assert_eq!(run(&write("flagged.toml", 1, "[0.0, 5.0]")).code(), Some(1));
    assert!(dir.path().join("out/vanhove_crosscheck.csv").exists());
    assert!(dir.path().join("out/vanhove_crosscheck.json").exists());
}
