use num_complex::Complex64;
use proptest::prelude::*;

use spinboson_lab::linalg::{self, CMat};
use spinboson_lab::model::{
    build_model, CouplingMatrix, ModelConfig, SpectralDensity, SpinBosonModel, SystemSpec,
};

fn model_strategy() -> impl Strategy<Value = SpinBosonModel> {
    (1usize..=4).prop_flat_map(|d| {
        (
            prop::collection::vec(0.2f64..1.5, d.saturating_sub(1)),
            prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), d * d),
            prop::bool::ANY,
        )
            .prop_map(move |(gaps, entries, equal_gaps)| {
                let mut eigs = vec![-0.5];
                for (k, g) in gaps.iter().enumerate() {
                    // equal gaps produce degenerate Bohr frequencies
                    let step = if equal_gaps {
                        gaps[0]
                    } else {
                        *g + 0.01 * k as f64
                    };
                    eigs.push(eigs.last().unwrap() + step);
                }
                let a = CMat::from_vec(
                    d,
                    d,
                    entries
                        .into_iter()
                        .map(|(x, y)| Complex64::new(x, y))
                        .collect(),
                );
                build_model(
                    SystemSpec::diagonal(eigs).unwrap(),
                    CouplingMatrix::new((&a + a.adjoint()) * linalg::c(0.5)).unwrap(),
                    SpectralDensity::analytic(2.0, 1.0, 1.0).unwrap(),
                    0.1,
                    Complex64::new(0.0, 0.0),
                    1.0,
                )
                .unwrap()
            })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn bohr_components_reconstruct_coupling(m in model_strategy()) {
        let mut sum = CMat::zeros(m.dim(), m.dim());
        for k in 0..m.bohr().len() {
            sum += m.d_epsilon(k);
        }
        prop_assert!(linalg::max_abs(&(sum - m.coupling().matrix())) < 1e-12);
    }

    #[test]
    fn negated_frequency_gives_adjoint(m in model_strategy()) {
        let bohr = m.bohr();
        for k in 0..bohr.len() {
            let k_neg = bohr.negation(k);
            prop_assert_eq!(bohr.frequencies()[k_neg], -bohr.frequencies()[k]);
            prop_assert!(linalg::max_abs(&(m.d_epsilon(k_neg) - m.d_epsilon(k).adjoint())) < 1e-14);
        }
    }

    #[test]
    fn serialized_model_rebuilds_identically(m in model_strategy()) {
        let text = m.to_config().unwrap().to_toml().unwrap();
        let back = ModelConfig::from_toml(&text).unwrap().build(std::path::Path::new(".")).unwrap();
        prop_assert_eq!(back.bohr().frequencies(), m.bohr().frequencies());
        prop_assert_eq!(back.eps(), m.eps());
        prop_assert_eq!(back.eps_breve(), m.eps_breve());
    }
}
