//! Translation-invariant pair polymers: pressure, finite-size correction and
//! decay of cluster weights with diameter.

use spinboson_lab::lab::experiments::pair_power_family;
use spinboson_lab::polymer;

fn main() -> spinboson_lab::error::Result<()> {
    let family = pair_power_family(0.01, 3.0, 12, 1)?;
    let ac = polymer::anchored_clusters(&family, 3, 24)?;
    let p = ac.pressure();
    println!(
        "pressure {:.10e}{:+.3e}i, size tail bound {:.2e}",
        p.re,
        p.im,
        ac.size_tail_bound()
    );
    for n in [4, 6, 8] {
        let exact = polymer::brute_force_partition(&family.restrict(n)?)?.ln() / n as f64;
        println!(
            "n = {n}: (1/n) log Z {:.10e}, p − correction {:.10e}",
            exact.re,
            (p - ac.finite_size_correction(n)).re
        );
    }
    for m in [2, 4, 8, 12] {
        println!(
            "Σ over diameter ≥ {m:>2} of |w^T| = {:.3e}",
            ac.diameter_tail(m)
        );
    }
    Ok(())
}
