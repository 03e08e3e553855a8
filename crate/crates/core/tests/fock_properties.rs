use num_complex::Complex64;
use proptest::prelude::*;

use spinboson_lab::correlations::correlation_h;
use spinboson_lab::fock::{
    self, build_hamiltonian, build_mode_grid, propagate, FockState, ModeGrid, QuadratureScheme,
};
use spinboson_lab::linalg::{self, CMat, CVec};
use spinboson_lab::model::{
    build_model, CouplingMatrix, SpectralDensity, SpinBosonModel, SystemSpec,
};

fn two_level(lambda: f64) -> SpinBosonModel {
    build_model(
        SystemSpec::diagonal(vec![0.0, 1.0]).unwrap(),
        CouplingMatrix::pauli_x(),
        SpectralDensity::analytic(2.0, 1.0, 1.0).unwrap(),
        lambda,
        Complex64::new(0.0, 0.0),
        1.0,
    )
    .unwrap()
}

fn sup_error(grid: &ModeGrid, density: &SpectralDensity, t_max: f64) -> f64 {
    let h = correlation_h(density).unwrap();
    (0..=400)
        .map(|k| t_max * k as f64 / 400.0)
        .map(|t| (grid.discrete_h(t) - h.eval(t)).norm())
        .fold(0.0, f64::max)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn norm_and_energy_are_conserved(
        lambda in 0.05f64..1.0,
        modes in 2usize..=6,
        n_max in 1usize..=3,
        t in 0.5f64..8.0,
        raw in prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 2),
    ) {
        let m = two_level(lambda);
        let grid = build_mode_grid(m.density(), modes, QuadratureScheme::GaussLegendre);
        let h = build_hamiltonian(&m, &grid, n_max).unwrap();
        prop_assert!(h.hermiticity_defect() < 1e-12);
        let sys = CVec::from_iterator(2, raw.iter().map(|&(a, b)| Complex64::new(a, b)));
        prop_assume!(sys.norm() > 0.1);
        let psi0 = FockState::product_vacuum(&h, &(sys.clone() / linalg::c(sys.norm())));
        let e0 = h.expectation(&psi0);
        let psi = propagate(&h, &psi0, t).unwrap();
        prop_assert!((psi.norm() - 1.0).abs() < 1e-9 * t.max(1.0));
        prop_assert!((h.expectation(&psi) - e0).abs() < 1e-8 * e0.abs().max(1.0));
    }
}

#[test]
fn reduced_density_converges_monotonically_in_the_truncation() {
    let m = two_level(0.4);
    let grid = build_mode_grid(m.density(), 6, QuadratureScheme::Midpoint);
    let excited = linalg::basis_vector(2, 1);
    let states: Vec<CMat> = (1..=5)
        .map(|n_max| {
            let h = build_hamiltonian(&m, &grid, n_max).unwrap();
            fock::reduced_density(
                &propagate(&h, &FockState::product_vacuum(&h, &excited), 3.0).unwrap(),
            )
        })
        .collect();
    let diffs: Vec<f64> = states
        .windows(2)
        .map(|w| linalg::max_abs(&(&w[1] - &w[0])))
        .collect();
    for pair in diffs.windows(2) {
        assert!(pair[1] < pair[0], "increments {diffs:?}");
    }
}

#[test]
fn doubling_modes_halves_the_correlation_error() {
    let density = SpectralDensity::analytic(2.0, 1.0, 1.0).unwrap();
    for scheme in [QuadratureScheme::Midpoint, QuadratureScheme::GaussLegendre] {
        let errors: Vec<f64> = [8, 16, 32, 64]
            .iter()
            .map(|&k| sup_error(&build_mode_grid(&density, k, scheme), &density, 10.0))
            .collect();
        for pair in errors.windows(2) {
            assert!(pair[1] <= 0.5 * pair[0], "{scheme:?}: {errors:?}");
        }
    }
}
