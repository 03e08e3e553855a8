//! Truncated Fock-space simulation of a single-level (van Hove) model,
//! compared with the closed-form photon number.

use spinboson_lab::fock::{
    self, build_hamiltonian, build_mode_grid, propagate, FockState, QuadratureScheme,
};
use spinboson_lab::linalg::{self, CMat, CVec};
use spinboson_lab::model::{build_model, CouplingMatrix, SpectralDensity, SystemSpec};
use spinboson_lab::vanhove::{self, VanHoveModel};

fn main() -> spinboson_lab::error::Result<()> {
    let density = SpectralDensity::analytic(2.0, 1.0, 1.0)?;
    let model = build_model(
        SystemSpec::diagonal(vec![0.0])?,
        CouplingMatrix::new(CMat::from_element(1, 1, linalg::ONE))?,
        density.clone(),
        1.0,
        num_complex::Complex64::new(0.0, 0.0),
        1.0,
    )?;
    let grid = build_mode_grid(&density, 16, QuadratureScheme::Midpoint);
    let h = build_hamiltonian(&model, &grid, 6)?;
    println!("Fock dimension {}, nonzeros {}", h.dim(), h.nnz());
    let exact = VanHoveModel::new(density, 1.0);
    let mut psi = FockState::product_vacuum(&h, &CVec::from_element(1, linalg::ONE));
    let mut now = 0.0;
    for t in [1.0, 2.0, 5.0, 10.0] {
        psi = propagate(&h, &psi, t - now)?;
        now = t;
        println!(
            "t = {t:>4}: <N> Fock {:.5}, closed form {:.5}, top-shell mass {:.2e}, norm deficit {:.1e}",
            fock::mean_photon_number(&psi),
            vanhove::mean_photon_number(&exact, t)?,
            psi.norm_at_cutoff(),
            psi.norm_deficit()
        );
    }
    Ok(())
}
