//! Davies generator of a two-level system: rates, both construction routes,
//! spectral data and relaxation of the reduced state.

use num_complex::Complex64;
use spinboson_lab::davies::{
    build_generator_direct, build_generator_quadrature, evolve_semigroup, jump_rates,
    spectral_analysis,
};
use spinboson_lab::linalg;
use spinboson_lab::model::{build_model, CouplingMatrix, SpectralDensity, SystemSpec};

fn main() -> spinboson_lab::error::Result<()> {
    let model = build_model(
        SystemSpec::diagonal(vec![0.0, 1.0])?,
        CouplingMatrix::pauli_x(),
        SpectralDensity::analytic(1.0, 1.0, 1.0)?,
        0.2,
        Complex64::new(0.0, 0.0),
        1.0,
    )?;
    let rates = jump_rates(&model);
    println!("rate 1 → 0: {:.6}", rates.get(1, 0));

    let direct = build_generator_direct(&model)?;
    let quadrature = build_generator_quadrature(&model, 200.0)?;
    let diff = linalg::max_abs(&(direct.superoperator() - quadrature.superoperator()));
    println!("direct vs quadrature route: max entry difference {diff:.2e}");

    let report = spectral_analysis(&direct)?;
    println!("spectrum of M:");
    for z in &report.eigenvalues {
        println!("  {:+.6} {:+.6}i", z.re, z.im);
    }
    println!(
        "gap {:.6}, zero eigenvalue simple: {}",
        report.gap, report.simple_zero
    );

    let excited = model.system().projector(1);
    for t in [0.0, 10.0, 25.0, 50.0, 100.0] {
        let rho = evolve_semigroup(&direct, model.system(), &excited, model.lambda(), t);
        println!("t = {t:>5}: excited population {:.6}", rho[(1, 1)].re);
    }
    Ok(())
}
