//! Bath correlation function, its Fourier transform and infrared regularity
//! for the analytic family J(ω) = ω^γ e^{−ω}.

use spinboson_lab::correlations::{
    correlation_h, fourier_jhat, fourier_transform_numeric, infrared_regularity_report,
    weighted_decay_norm,
};
use spinboson_lab::model::SpectralDensity;

fn main() -> spinboson_lab::error::Result<()> {
    for gamma in [1.0, 2.0, 3.0] {
        let j = SpectralDensity::analytic(gamma, 1.0, 1.0)?;
        let h = correlation_h(&j)?;
        println!("γ = {gamma}");
        for t in [0.0, 1.0, 10.0, 100.0] {
            let v = h.eval(t);
            println!("  h({t:>5}) = {:+.6e} {:+.6e}i", v.re, v.im);
        }
        for eps in [0.5, 1.0, 2.0] {
            let exact = fourier_jhat(&j, eps);
            let numeric = fourier_transform_numeric(&h, eps, 2000.0);
            println!("  ĵ({eps}) = {exact:.10}  numeric {numeric:.10}");
        }
        let norm = weighted_decay_norm(&h, 1.0, 1e4);
        println!(
            "  ∫(1+t)|h| up to 1e4 = {:.4} (converged: {})",
            norm.value, norm.converged
        );
        let r = infrared_regularity_report(&j, gamma)?;
        println!("  estimated decay exponent sup α = {:.3}", r.max_alpha);
    }
    Ok(())
}
