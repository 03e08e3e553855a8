//! Exactly solvable van Hove model H = H_F + λΦ(φ) (one-dimensional
//! system space): ground-state energy, photon statistics of the vacuum
//! evolved in time, and Weyl-operator expectations.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::{gamma, gamma_ur};

use crate::correlations::{BoundaryProfiles, Profile};
use crate::error::{LabError, Result};
use crate::model::SpectralDensity;
use crate::quad;

/// Exponent c in the Weyl vacuum modulus e^{−c‖ψ‖²}. With
/// Φ(ψ) = a*(ψ) + a(ψ), ⟨Ω, e^{iΦ(ψ)} Ω⟩ = e^{−‖ψ‖²/2}; confirmed against
/// the truncated Fock oracle.
pub const WEYL_MODULUS_EXPONENT: f64 = 0.5;

/// Local power of J at the origin, estimated from two small frequencies.
fn infrared_power(density: &SpectralDensity) -> Option<f64> {
    if let Some(g) = density.infrared_exponent() {
        return Some(g);
    }
    let a = 1e-7 * density.omega_max();
    let b = 1e-5 * density.omega_max();
    let (ja, jb) = (density.eval(a), density.eval(b));
    if ja <= 0.0 || jb <= 0.0 {
        return None;
    }
    Some((jb / ja).ln() / (b / a).ln())
}

/// ∫₀^{ω_max} J(ω) ω^{−p} dω, or `DivergentIntegral`.
fn inverse_moment(density: &SpectralDensity, p: f64) -> Result<f64> {
    if density.is_zero() {
        return Ok(0.0);
    }
    if let Some(g) = infrared_power(density) {
        if g - p <= -1.0 + 1e-9 {
            return Err(LabError::DivergentIntegral(format!(
                "J(ω)/ω^{p} is not integrable at ω = 0 (J ~ ω^{g:.3})"
            )));
        }
    }
    if let Some((g, wc, a)) = density.closed_form() {
        return Ok(a * gamma(g - p + 1.0) * wc.powf(g - p + 1.0));
    }
    let wmax = density.omega_max();
    let mut breaks: Vec<f64> = (1..40).map(|k| wmax * 0.5f64.powi(k)).collect();
    breaks.extend(density.breakpoints());
    let mut f = |w: f64| density.eval(w) / w.powf(p);
    quad::adaptive_with_breaks(&mut f, 0.0, wmax, &breaks, 1e-11, 1e-300)
}

#[derive(Debug, Clone)]
pub struct VanHoveModel {
    density: SpectralDensity,
    lambda: f64,
    /// ∫ J/ω² (times λ²), +∞ when divergent.
    phi_over_omega_sq_norm: f64,
}

impl VanHoveModel {
    pub fn new(density: SpectralDensity, lambda: f64) -> Self {
        let phi_over_omega_sq_norm =
            inverse_moment(&density, 2.0).map_or(f64::INFINITY, |v| lambda * lambda * v);
        Self {
            density,
            lambda,
            phi_over_omega_sq_norm,
        }
    }

    pub fn density(&self) -> &SpectralDensity {
        &self.density
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn profile_phi_over_omega_sq_norm(&self) -> f64 {
        self.phi_over_omega_sq_norm
    }

    /// A normalizable ground state exists iff φ/ω is square integrable.
    pub fn has_ground_state(&self) -> bool {
        self.phi_over_omega_sq_norm.is_finite()
    }
}

/// E_gs = −λ² ∫ J(ω)/ω dω.
pub fn ground_state_energy(m: &VanHoveModel) -> Result<f64> {
    Ok(-m.lambda * m.lambda * inverse_moment(&m.density, 1.0)?)
}

/// ⟨N⟩_t = ‖φ_t‖² = 2λ² ∫ J(ω)(1 − cos ωt)/ω² dω; closed form for the
/// analytic family.
pub fn mean_photon_number(m: &VanHoveModel, t: f64) -> Result<f64> {
    if m.density.is_zero() || t == 0.0 {
        return Ok(0.0);
    }
    if let Some((g, wc, a)) = m.density.closed_form() {
        let l2 = m.lambda * m.lambda;
        let x = wc * t;
        let v = if (g - 1.0).abs() < 1e-8 {
            a * (1.0 + x * x).ln()
        } else {
            let z = Complex64::new(1.0, x).powf(1.0 - g);
            2.0 * a * gamma(g - 1.0) * wc.powf(g - 1.0) * (1.0 - z.re)
        };
        return Ok(l2 * v);
    }
    mean_photon_number_quadrature(m, t)
}

/// ‖φ_t‖² by direct frequency quadrature of 4λ² ∫ J sin²(ωt/2)/ω².
pub fn mean_photon_number_quadrature(m: &VanHoveModel, t: f64) -> Result<f64> {
    if m.density.is_zero() || t == 0.0 {
        return Ok(0.0);
    }
    if let Some(g) = infrared_power(&m.density) {
        if g <= -1.0 + 1e-9 {
            return Err(LabError::DivergentIntegral(
                "J is not integrable at ω = 0".into(),
            ));
        }
    }
    let wmax = m.density.omega_max();
    let mut breaks: Vec<f64> = (1..40).map(|k| wmax * 0.5f64.powi(k)).collect();
    let width = std::f64::consts::PI / t.abs();
    let n = (wmax / width).ceil().min(1e6) as usize;
    breaks.extend((1..n).map(|k| k as f64 * wmax / n as f64));
    breaks.extend(m.density.breakpoints());
    let mut f = |w: f64| {
        let s = (0.5 * w * t).sin();
        4.0 * m.density.eval(w) * s * s / (w * w)
    };
    let v = quad::adaptive_with_breaks(&mut f, 0.0, wmax, &breaks, 1e-12, 1e-300)?;
    Ok(m.lambda * m.lambda * v)
}

/// Upper bound on the part of ‖φ_t‖² lost to the cutoff ω_max, uniform in t.
pub fn photon_truncation_bound(m: &VanHoveModel) -> f64 {
    match m.density.kind() {
        crate::model::DensityKind::Analytic {
            gamma: g,
            omega_c: wc,
            amplitude: a,
        } => {
            let wmax = m.density.omega_max();
            let tail_mass = a * gamma(g + 1.0) * wc.powf(g + 1.0) * gamma_ur(g + 1.0, wmax / wc);
            4.0 * m.lambda * m.lambda * tail_mass / (wmax * wmax)
        }
        _ => 0.0,
    }
}

/// ⟨e^{κN}⟩_t = exp((e^κ − 1)‖φ_t‖²).
pub fn photon_generating_function(m: &VanHoveModel, kappa: Complex64, t: f64) -> Result<Complex64> {
    let n = mean_photon_number(m, t)?;
    Ok(((kappa.exp() - 1.0) * n).exp())
}

/// ∫ J_⋊(ω) (e^{iωt} − 1)/ω dω.
fn weyl_kernel_integral(
    m: &VanHoveModel,
    profiles: &BoundaryProfiles,
    t: f64,
) -> Result<Complex64> {
    let d = &m.density;
    if t == 0.0 || d.is_zero() {
        return Ok(Complex64::new(0.0, 0.0));
    }
    match &profiles.psi_right {
        Profile::Zero => Ok(Complex64::new(0.0, 0.0)),
        Profile::Matching(c) if d.closed_form().is_some() => {
            let (g, wc, a) = d.closed_form().unwrap();
            if g <= 0.0 {
                return Err(LabError::DivergentIntegral("J/ω at the origin".into()));
            }
            let z = Complex64::new(1.0, -wc * t).powf(-g);
            Ok(c * a * gamma(g) * wc.powf(g) * (z - 1.0))
        }
        _ => {
            let wmax = d.omega_max();
            let mut breaks: Vec<f64> = (1..40).map(|k| wmax * 0.5f64.powi(k)).collect();
            let n = (wmax * t.abs() / std::f64::consts::PI).ceil().min(1e6) as usize;
            breaks.extend((1..n).map(|k| k as f64 * wmax / n as f64));
            breaks.extend(d.breakpoints());
            let kernel = |w: f64| (Complex64::new(0.0, w * t).exp() - 1.0) / w;
            let mut re = |w: f64| (profiles.j_right(d, w) * kernel(w)).re;
            let vre = quad::adaptive_with_breaks(&mut re, 0.0, wmax, &breaks, 1e-11, 1e-300)?;
            let mut im = |w: f64| (profiles.j_right(d, w) * kernel(w)).im;
            let vim = quad::adaptive_with_breaks(&mut im, 0.0, wmax, &breaks, 1e-11, 1e-300)?;
            Ok(Complex64::new(vre, vim))
        }
    }
}

/// ⟨Ω, e^{itH} 𝓦(ψ_⋊) e^{−itH} Ω⟩
///   = e^{−‖ψ_⋊‖²/2} exp(2iλ Re ∫ J_⋊(ω)(e^{iωt} − 1)/ω dω),
/// with J_⋊ = φ̄ψ_⋊ and Φ(ψ) = a*(ψ) + a(ψ).
pub fn weyl_expectation(
    m: &VanHoveModel,
    profiles: &BoundaryProfiles,
    t: f64,
) -> Result<Complex64> {
    if let Profile::Zero = profiles.psi_right {
        return Ok(Complex64::new(1.0, 0.0));
    }
    let norm_sq = profiles.psi_right.norm_sq(&m.density)?;
    if !norm_sq.is_finite() {
        return Err(LabError::DivergentIntegral("‖ψ_⋊‖² is infinite".into()));
    }
    let phase = 2.0 * m.lambda * weyl_kernel_integral(m, profiles, t)?.re;
    Ok(Complex64::from_polar(
        (-WEYL_MODULUS_EXPONENT * norm_sq).exp(),
        phase,
    ))
}

/// Long-time limit of the Weyl phase, −2λ Re ∫ J_⋊/ω.
pub fn weyl_phase_limit(m: &VanHoveModel, profiles: &BoundaryProfiles) -> Result<f64> {
    let d = &m.density;
    let mut re = |w: f64| profiles.j_right(d, w).re / w;
    let wmax = d.omega_max();
    let breaks: Vec<f64> = (1..40).map(|k| wmax * 0.5f64.powi(k)).collect();
    let v = quad::adaptive_with_breaks(&mut re, 0.0, wmax, &breaks, 1e-11, 1e-300)?;
    Ok(-2.0 * m.lambda * v)
}

/// One row of a van Hove time scan.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScanRow {
    pub t: f64,
    pub mean_n: f64,
    pub genfun: Complex64,
    pub weyl: Complex64,
}

pub fn scan(
    m: &VanHoveModel,
    kappa: Complex64,
    profiles: &BoundaryProfiles,
    ts: &[f64],
) -> Result<Vec<ScanRow>> {
    ts.iter()
        .map(|&t| {
            Ok(ScanRow {
                t,
                mean_n: mean_photon_number(m, t)?,
                genfun: photon_generating_function(m, kappa, t)?,
                weyl: weyl_expectation(m, profiles, t)?,
            })
        })
        .collect()
}

/// CSV with columns t, mean_N, genfun_re, genfun_im, weyl_re, weyl_im.
pub fn scan_to_csv(rows: &[ScanRow]) -> String {
    let data: Vec<Vec<f64>> = rows
        .iter()
        .map(|r| {
            vec![
                r.t,
                r.mean_n,
                r.genfun.re,
                r.genfun.im,
                r.weyl.re,
                r.weyl.im,
            ]
        })
        .collect();
    crate::io::format_csv(
        &[
            "t",
            "mean_N",
            "genfun_re",
            "genfun_im",
            "weyl_re",
            "weyl_im",
        ],
        &data,
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    fn vh(gamma: f64) -> VanHoveModel {
        VanHoveModel::new(SpectralDensity::analytic(gamma, 1.0, 1.0).unwrap(), 1.0)
    }

    #[test]
    fn ground_state_energies() {
        assert!((ground_state_energy(&vh(1.0)).unwrap() + 1.0).abs() < 1e-14);
        assert!((ground_state_energy(&vh(2.0)).unwrap() + 1.0).abs() < 1e-14);
        let zero = VanHoveModel::new(SpectralDensity::zero(), 1.0);
        assert_eq!(ground_state_energy(&zero).unwrap(), 0.0);
        let flat = crate::model::DensityFn::new("flat", |w: f64| (-w).exp());
        let ir = VanHoveModel::new(SpectralDensity::callback(flat, 40.0).unwrap(), 1.0);
        assert!(matches!(
            ground_state_energy(&ir),
            Err(LabError::DivergentIntegral(_))
        ));
    }

    #[test]
    fn ground_state_dichotomy() {
        assert!(!vh(1.0).has_ground_state());
        assert!(vh(2.0).has_ground_state());
        assert!((vh(2.0).profile_phi_over_omega_sq_norm() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn photon_numbers_closed_form() {
        for t in [1.0f64, 10.0, 100.0] {
            let a = mean_photon_number(&vh(1.0), t).unwrap();
            assert!((a - (1.0 + t * t).ln()).abs() < 1e-12 * a);
            let b = mean_photon_number(&vh(2.0), t).unwrap();
            let exact = 2.0 * (1.0 - 1.0 / (1.0 + t * t));
            assert!((b - exact).abs() < 1e-12);
        }
    }

    #[test]
    fn photon_numbers_quadrature_agree() {
        for g in [1.0, 2.0, 1.5] {
            for t in [1.0, 10.0, 100.0] {
                let a = mean_photon_number(&vh(g), t).unwrap();
                let b = mean_photon_number_quadrature(&vh(g), t).unwrap();
                assert!((a - b).abs() < 1e-7 * a, "gamma {g} t {t}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn generating_function_basics() {
        let m = vh(2.0);
        for t in [0.0, 1.0, 30.0] {
            assert_eq!(
                photon_generating_function(&m, Complex64::new(0.0, 0.0), t).unwrap(),
                Complex64::new(1.0, 0.0)
            );
        }
        let t = 3.0;
        let h = 1e-5;
        let gp = photon_generating_function(&m, Complex64::new(h, 0.0), t)
            .unwrap()
            .ln();
        let gm = photon_generating_function(&m, Complex64::new(-h, 0.0), t)
            .unwrap()
            .ln();
        let deriv = (gp - gm).re / (2.0 * h);
        let n = mean_photon_number(&m, t).unwrap();
        assert!((deriv - n).abs() < 1e-4 * n);
    }

    #[test]
    fn weyl_trivial_cases() {
        let m = vh(2.0);
        let p = BoundaryProfiles::right_only(Profile::Matching(Complex64::new(0.5, 0.0)));
        let w0 = weyl_expectation(&m, &p, 0.0).unwrap();
        assert!(w0.arg().abs() < 1e-15);
        assert!((w0.norm() - (-0.5 * 0.25 * 2.0f64).exp()).abs() < 1e-14);
        let none = BoundaryProfiles::right_only(Profile::Zero);
        assert_eq!(
            weyl_expectation(&m, &none, 7.0).unwrap(),
            Complex64::new(1.0, 0.0)
        );
    }

    #[test]
    fn weyl_phase_converges() {
        let m = vh(2.0);
        let p = BoundaryProfiles::right_only(Profile::Matching(Complex64::new(1.0, 0.0)));
        let phase = |t: f64| 2.0 * weyl_kernel_integral(&m, &p, t).unwrap().re;
        assert!((phase(1e3) - phase(2e3)).abs() < 1e-3);
        assert!((phase(1e3) + 2.0).abs() < 1e-3);
        assert!((weyl_phase_limit(&m, &p).unwrap() + 2.0).abs() < 1e-9);
    }

    #[test]
    fn weyl_closed_form_matches_quadrature() {
        let m = vh(2.0);
        let c = Complex64::new(0.2, 0.3);
        let closed = BoundaryProfiles::right_only(Profile::Matching(c));
        let d = m.density().clone();
        let custom = BoundaryProfiles::right_only(Profile::custom("matching", move |w| {
            c * d.eval(w).sqrt()
        }));
        for t in [0.5, 3.0, 12.0] {
            let a = weyl_expectation(&m, &closed, t).unwrap();
            let b = weyl_expectation(&m, &custom, t).unwrap();
            assert!((a - b).norm() < 1e-8, "t {t}: {a} vs {b}");
        }
    }
}
