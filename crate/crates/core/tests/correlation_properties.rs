use proptest::prelude::*;

use spinboson_lab::correlations::{
    correlation_h, correlation_h_quadrature, fourier_jhat, fourier_transform_numeric,
};
use spinboson_lab::model::{DensityFn, SpectralDensity};

fn analytic(gamma: f64, omega_c: f64) -> SpectralDensity {
    SpectralDensity::analytic(gamma, omega_c, 1.0).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn conjugate_symmetry(t in -50.0f64..50.0, gamma in prop::sample::select(vec![1.0, 1.5, 2.0, 3.0])) {
        let h = correlation_h(&analytic(gamma, 1.0)).unwrap();
        prop_assert!((h.eval(-t) - h.eval(t).conj()).norm() < 1e-10);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn quadrature_matches_closed_form(t in -100.0f64..100.0, gamma in prop::sample::select(vec![0.5, 1.0, 1.5, 2.0]), omega_c in 0.5f64..2.0) {
        let d = analytic(gamma, omega_c);
        let exact = correlation_h(&d).unwrap().eval(t);
        let quad = correlation_h_quadrature(&d).unwrap().evaluate(t).unwrap();
        prop_assert!((quad - exact).norm() <= 1e-8 * exact.norm().max(1e-300), "t = {}: {} vs {}", t, quad, exact);
    }

    #[test]
    fn correlation_is_linear_in_density(t in -30.0f64..30.0) {
        let sum = SpectralDensity::callback(
            DensityFn::new("sum", |w: f64| w * (-w).exp() + 0.5 * w * w * (-w).exp()),
            40.0,
        )
        .unwrap();
        let h_sum = correlation_h(&sum).unwrap().evaluate(t).unwrap();
        let h1 = correlation_h(&analytic(1.0, 1.0)).unwrap().eval(t);
        let h2 = correlation_h(&SpectralDensity::analytic(2.0, 1.0, 0.5).unwrap()).unwrap().eval(t);
        prop_assert!((h_sum - h1 - h2).norm() < 1e-10);
    }
}

#[test]
fn fourier_transform_converges_in_the_horizon() {
    let d = analytic(2.0, 1.0);
    let h = correlation_h(&d).unwrap();
    for k in 1..=12 {
        let eps = 0.25 * k as f64;
        let exact = fourier_jhat(&d, eps);
        let coarse = (fourier_transform_numeric(&h, eps, 10.0) - exact).abs();
        let fine = (fourier_transform_numeric(&h, eps, 1e3) - exact).abs();
        assert!(fine / exact < 1e-4, "eps {eps}: {fine}");
        assert!(fine <= coarse);
    }
}
