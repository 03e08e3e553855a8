//! Coherent (Weyl) states on a discretized bath and the vacuum expectation
//! of a Weyl operator.

use num_complex::Complex64;
use spinboson_lab::correlations::Profile;
use spinboson_lab::fock::{self, build_mode_grid, QuadratureScheme};
use spinboson_lab::model::SpectralDensity;

fn main() -> spinboson_lab::error::Result<()> {
    let density = SpectralDensity::analytic(2.0, 1.0, 1.0)?;
    let grid = build_mode_grid(&density, 16, QuadratureScheme::GaussLegendre);
    let profile = Profile::Matching(Complex64::new(0.0, 0.3));
    let amps = grid.profile_amplitudes(&density, &profile);
    let norm_sq: f64 = amps.iter().map(|a| a.norm_sqr()).sum();
    let state = fock::weyl_vacuum_state(&grid, &density, &profile, 4)?;
    println!("‖ψ‖² = {norm_sq:.6}");
    println!(
        "photon-number distribution: {:?}",
        state.photon_distribution()
    );
    println!("mean photon number {:.6}", fock::mean_photon_number(&state));
    let vacuum = fock::coherent_state(&vec![Complex64::new(0.0, 0.0); amps.len()], 4)?;
    let shifted = fock::apply_weyl(&vacuum, &amps)?;
    let overlap: Complex64 = vacuum
        .amplitudes()
        .iter()
        .zip(shifted.amplitudes())
        .map(|(a, b)| a.conj() * b)
        .sum();
    println!(
        "⟨Ω, W(ψ) Ω⟩ = {:.6}{:+.6}i, e^(−‖ψ‖²/2) = {:.6}",
        overlap.re,
        overlap.im,
        (-0.5 * norm_sq).exp()
    );
    Ok(())
}
