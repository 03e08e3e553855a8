use num_complex::Complex64;
use proptest::prelude::*;

use spinboson_lab::polymer::{self, PolymerSystem};

/// Random weights on subsets of {1..n} with span ≤ max_span.
fn system_strategy(
    n_range: std::ops::RangeInclusive<usize>,
    max_span: usize,
    amp: f64,
) -> impl Strategy<Value = PolymerSystem> {
    n_range.prop_flat_map(move |n| {
        let candidates: Vec<u64> = (1u64..(1 << n))
            .filter(|&m| polymer::diameter(m) <= max_span)
            .collect();
        let k = candidates.len();
        (
            Just(n),
            Just(candidates),
            prop::collection::vec((any::<bool>(), -amp..amp, -amp..amp), k),
        )
            .prop_map(|(n, candidates, draws)| {
                let mut sys = PolymerSystem::new(n, 1).unwrap();
                for (mask, (keep, re, im)) in candidates.into_iter().zip(draws) {
                    if keep {
                        sys.set_weight(&polymer::subset_sites(mask), Complex64::new(re, im))
                            .unwrap();
                    }
                }
                sys
            })
    })
}

fn connected(sys: &PolymerSystem, members: &[Vec<usize>]) -> bool {
    let m = members.len();
    let mut seen = vec![false; m];
    let mut stack = vec![0];
    seen[0] = true;
    while let Some(i) = stack.pop() {
        for j in 0..m {
            if !seen[j] && sys.adjacent(&members[i], &members[j]) {
                seen[j] = true;
                stack.push(j);
            }
        }
    }
    seen.into_iter().all(|s| s)
}

/// Multisets of polymer indices of size 1..=cap, as nondecreasing index lists.
fn multisets(k: usize, cap: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur = Vec::new();
    fn rec(start: usize, k: usize, cap: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if !cur.is_empty() {
            out.push(cur.clone());
        }
        if cur.len() == cap {
            return;
        }
        for i in start..k {
            cur.push(i);
            rec(i, k, cap, cur, out);
            cur.pop();
        }
    }
    rec(0, k, cap, &mut cur, &mut out);
    out
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn cluster_sum_reproduces_partition_function(sys in system_strategy(2..=6, 3, 2e-3)) {
        let kp = polymer::check_kotecky_preiss(&sys, polymer::size_a);
        prop_assume!(kp.satisfied && kp.worst_ratio <= 0.5);
        let sum = polymer::cluster_log_partition(&sys, 5).unwrap();
        let exact = polymer::brute_force_partition(&sys).unwrap();
        prop_assert!((sum.value.exp() - exact).norm() < 1e-9);
        prop_assert!((sum.value - exact.ln()).norm() <= sum.truncation_bound + 1e-14);
    }

    #[test]
    fn kotecky_preiss_bounds_clusters_touching_a_set(sys in system_strategy(2..=5, 2, 0.05)) {
        let kp = polymer::check_kotecky_preiss(&sys, polymer::size_a);
        prop_assume!(kp.satisfied);
        let polys: Vec<Vec<usize>> = sys.polymers().into_iter().map(|(m, _)| polymer::subset_sites(m)).collect();
        prop_assume!(!polys.is_empty() && polys.len() <= 12);
        let clusters: Vec<(Vec<Vec<usize>>, f64)> = multisets(polys.len(), 3)
            .into_iter()
            .map(|idx| idx.into_iter().map(|i| polys[i].clone()).collect::<Vec<_>>())
            .filter(|members| connected(&sys, members))
            .map(|members| {
                let w = polymer::truncated_weight(&sys, &members).unwrap().norm();
                (members, w)
            })
            .collect();
        let mut anchors: Vec<Vec<usize>> = (1..=sys.n()).map(|s| vec![s]).collect();
        anchors.extend(polys.iter().cloned());
        for a0 in anchors {
            let touching: f64 = clusters
                .iter()
                .filter(|(members, _)| members.iter().any(|b| sys.adjacent(b, &a0)))
                .map(|(_, w)| w)
                .sum();
            prop_assert!(touching <= polymer::size_a(&a0) + 1e-12, "anchor {:?}: {} > {}", a0, touching, a0.len());
        }
    }

    #[test]
    fn disconnected_collections_vanish_exactly(
        sys in system_strategy(6..=8, 8, 0.5),
        picks in prop::collection::vec(0usize..1000, 2..=5),
    ) {
        let polys: Vec<Vec<usize>> = sys.polymers().into_iter().map(|(m, _)| polymer::subset_sites(m)).collect();
        prop_assume!(!polys.is_empty());
        let members: Vec<Vec<usize>> = picks.iter().map(|&p| polys[p % polys.len()].clone()).collect();
        let w = polymer::truncated_weight(&sys, &members).unwrap();
        if !connected(&sys, &members) {
            prop_assert_eq!(w, Complex64::new(0.0, 0.0));
        }
    }

    #[test]
    fn cumulants_round_trip(k in 1usize..=6, seed in prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 64)) {
        let size = 1usize << k;
        let mut full: Vec<Complex64> = seed.iter().take(size).map(|&(a, b)| Complex64::new(a, b)).collect();
        full[0] = Complex64::new(1.0, 0.0);
        let conn = polymer::connected_from_full(&full);
        let back = polymer::full_from_connected(&conn);
        for mask in 1..size {
            prop_assert!((back[mask] - full[mask]).norm() < 1e-10 * (1.0 + full[mask].norm()));
        }
    }
}

#[test]
fn two_hundred_disconnected_draws_are_zero() {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(200);
    let mut found = 0;
    while found < 200 {
        let n = rng.gen_range(4..=10);
        let mut sys = PolymerSystem::new(n, rng.gen_range(1..=2)).unwrap();
        let mut members = Vec::new();
        for _ in 0..rng.gen_range(2..=5) {
            let a = rng.gen_range(1..=n);
            let b = (a + rng.gen_range(0..3)).min(n);
            let sites: Vec<usize> = (a..=b).collect();
            sys.set_weight(
                &sites,
                Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)),
            )
            .unwrap();
            members.push(sites);
        }
        if connected(&sys, &members) {
            continue;
        }
        found += 1;
        assert_eq!(
            polymer::truncated_weight(&sys, &members).unwrap(),
            Complex64::new(0.0, 0.0)
        );
    }
}
