//! Exactly solvable van Hove model: photon number, generating function and
//! Weyl expectations in the bounded (γ = 2) and growing (γ = 1) regimes.

use num_complex::Complex64;
use spinboson_lab::correlations::{BoundaryProfiles, Profile};
use spinboson_lab::model::SpectralDensity;
use spinboson_lab::vanhove::{self, VanHoveModel};

fn main() -> spinboson_lab::error::Result<()> {
    let profiles = BoundaryProfiles::right_only(Profile::Matching(Complex64::new(0.0, 0.3)));
    for gamma in [1.0, 2.0] {
        let m = VanHoveModel::new(SpectralDensity::analytic(gamma, 1.0, 1.0)?, 1.0);
        println!(
            "J(ω) = ω^{gamma} e^(−ω), ground state exists: {}",
            m.has_ground_state()
        );
        println!(
            "{:>8} {:>12} {:>12} {:>22}",
            "t", "<N>", "<e^(0.1N)>", "Weyl"
        );
        for t in [1.0, 10.0, 100.0, 1000.0] {
            let n = vanhove::mean_photon_number(&m, t)?;
            let g = vanhove::photon_generating_function(&m, Complex64::new(0.1, 0.0), t)?;
            let w = vanhove::weyl_expectation(&m, &profiles, t)?;
            println!(
                "{t:>8} {n:>12.6} {:>12.6} {:>10.6}{:+.6}i",
                g.re, w.re, w.im
            );
        }
    }
    Ok(())
}
