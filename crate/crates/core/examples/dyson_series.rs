//! Leading Dyson series of the reduced dynamics against the Davies semigroup
//! at weak coupling, and its divergence report at moderate coupling.

use num_complex::Complex64;
use spinboson_lab::davies::{
    build_generator_direct, dyson_leading_propagator, semigroup_propagator,
};
use spinboson_lab::linalg;
use spinboson_lab::model::{build_model, CouplingMatrix, SpectralDensity, SystemSpec};

fn main() -> spinboson_lab::error::Result<()> {
    let model = build_model(
        SystemSpec::diagonal(vec![0.0, 1.0])?,
        CouplingMatrix::pauli_x(),
        SpectralDensity::analytic(1.0, 1.0, 1.0)?,
        0.02,
        Complex64::new(0.0, 0.0),
        1.0,
    )?;
    let gen = build_generator_direct(&model)?;
    for t in [5.0, 10.0, 20.0] {
        let q = dyson_leading_propagator(&model, t, 3)?;
        let sg = semigroup_propagator(&gen, model.system(), model.lambda(), t);
        println!(
            "λ = 0.02, t = {t:>4}: max |Q_l − e^{{tL}}| = {:.3e}",
            linalg::max_abs(&(q - sg))
        );
    }
    match dyson_leading_propagator(&model.with_lambda(0.3), 10.0, 4) {
        Ok(_) => println!("λ = 0.3, t = 10: converged"),
        Err(e) => println!("λ = 0.3, t = 10: {e}"),
    }
    Ok(())
}
