//! Polymer gas on a chain: exact partition function, Kotecký-Preiss check
//! and the truncated cluster expansion of log Z.

use num_complex::Complex64;
use spinboson_lab::polymer::{self, PolymerSystem};

fn main() -> spinboson_lab::error::Result<()> {
    let mut sys = PolymerSystem::new(8, 1)?;
    for i in 1..=7 {
        sys.set_weight(&[i, i + 1], Complex64::new(0.01, 0.002 * i as f64))?;
    }
    sys.set_weight(&[3], Complex64::new(-0.02, 0.0))?;
    sys.set_weight(&[2, 4, 5], Complex64::new(0.005, -0.003))?;

    let kp = polymer::check_kotecky_preiss(&sys, polymer::size_a);
    println!(
        "Kotecký-Preiss satisfied: {}, worst ratio {:.4}",
        kp.satisfied, kp.worst_ratio
    );
    let exact = polymer::brute_force_partition(&sys)?;
    println!("log Z (brute force) = {:.3e}", exact.ln());
    for cap in [1, 2, 3, 4, 5] {
        let s = polymer::cluster_log_partition(&sys, cap)?;
        println!(
            "size cap {cap}: {:.12e}{:+.12e}i, error {:.1e}, bound {:.1e}",
            s.value.re,
            s.value.im,
            (s.value - exact.ln()).norm(),
            s.truncation_bound
        );
    }
    let w = polymer::truncated_weight(&sys, &[vec![1, 2], vec![2, 3]])?;
    println!("w^T({{1,2}}, {{2,3}}) = {:.3e}{:+.3e}i", w.re, w.im);
    Ok(())
}
