//! One-dimensional polymer gas on the sites {1, …, n}: exact partition
//! functions, truncated (Ursell) weights, the Kotecký-Preiss criterion,
//! cluster expansions of log Υ_n, pressure and finite-size corrections.
//!
//! Subsets are bitmasks: site τ is bit τ − 1, so n ≤ 64.

use std::cell::RefCell;
use std::collections::{BTreeMap, HashMap};

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::io::serde_extended_f64;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// Largest horizon accepted by `brute_force_partition`.
pub const MAX_BRUTE_FORCE_HORIZON: usize = 12;
/// Largest member count accepted by `truncated_weight`.
pub const MAX_CLUSTER_MEMBERS: usize = 8;
/// Largest cluster size cap accepted by the cluster sums.
pub const MAX_CLUSTER_SIZE_CAP: usize = 12;
/// Largest horizon representable by the bitmask encoding.
pub const MAX_HORIZON: usize = 64;
pub const DEFAULT_CLUSTER_SIZE_CAP: usize = 5;
pub const DEFAULT_DIAMETER_CAP: usize = 24;

/// Bitmask of 1-based sites.
pub fn subset_mask(sites: &[usize]) -> Result<u64> {
    let mut m = 0u64;
    for &s in sites {
        if s == 0 || s > MAX_HORIZON {
            return Err(LabError::HorizonTooLarge(s, MAX_HORIZON));
        }
        m |= 1 << (s - 1);
    }
    Ok(m)
}

/// 1-based sites of a bitmask, increasing.
pub fn subset_sites(mask: u64) -> Vec<usize> {
    (0..64)
        .filter(|b| mask >> b & 1 == 1)
        .map(|b| b + 1)
        .collect()
}

/// Span length max − min + 1 of a nonempty subset.
pub fn diameter(mask: u64) -> usize {
    if mask == 0 {
        0
    } else {
        (64 - mask.leading_zeros() - mask.trailing_zeros()) as usize
    }
}

/// Sites within distance `gap` of the subset.
fn dilate(mask: u64, gap: usize) -> u64 {
    let mut out = mask;
    for k in 1..=gap.min(63) {
        out |= (mask << k) | (mask >> k);
    }
    out
}

fn adjacent(a: u64, b: u64, gap: usize) -> bool {
    dilate(a, gap) & b != 0
}

/// Complex weights on subsets of {1, …, n}; absent subsets weigh zero.
#[derive(Debug, Clone, PartialEq)]
pub struct PolymerSystem {
    n: usize,
    weights: BTreeMap<u64, Complex64>,
    adjacency_gap: usize,
}

/// One row of a weight table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightEntry {
    pub subset: Vec<usize>,
    pub re: f64,
    pub im: f64,
}

impl PolymerSystem {
    pub fn new(n: usize, adjacency_gap: usize) -> Result<Self> {
        if n > MAX_HORIZON {
            return Err(LabError::HorizonTooLarge(n, MAX_HORIZON));
        }
        Ok(Self {
            n,
            weights: BTreeMap::new(),
            adjacency_gap,
        })
    }

    pub fn set_weight(&mut self, sites: &[usize], w: Complex64) -> Result<()> {
        if sites.is_empty() {
            return Err(LabError::Config("the empty set carries no weight".into()));
        }
        if let Some(&s) = sites.iter().find(|&&s| s == 0 || s > self.n) {
            return Err(LabError::Config(format!("site {s} outside 1..={}", self.n)));
        }
        self.set_mask(subset_mask(sites)?, w);
        Ok(())
    }

    fn set_mask(&mut self, mask: u64, w: Complex64) {
        if w == ZERO {
            self.weights.remove(&mask);
        } else {
            self.weights.insert(mask, w);
        }
    }

    pub fn weight(&self, sites: &[usize]) -> Complex64 {
        subset_mask(sites)
            .map(|m| self.weight_mask(m))
            .unwrap_or(ZERO)
    }

    pub fn weight_mask(&self, mask: u64) -> Complex64 {
        self.weights.get(&mask).copied().unwrap_or(ZERO)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn adjacency_gap(&self) -> usize {
        self.adjacency_gap
    }

    /// Nonzero-weight polymers in increasing mask order.
    pub fn polymers(&self) -> Vec<(u64, Complex64)> {
        self.weights.iter().map(|(&m, &w)| (m, w)).collect()
    }

    pub fn adjacent(&self, a: &[usize], b: &[usize]) -> bool {
        match (subset_mask(a), subset_mask(b)) {
            (Ok(a), Ok(b)) => adjacent(a, b, self.adjacency_gap),
            _ => false,
        }
    }

    pub fn from_weight_table(
        n: usize,
        adjacency_gap: usize,
        entries: &[WeightEntry],
    ) -> Result<Self> {
        let mut sys = Self::new(n, adjacency_gap)?;
        for e in entries {
            sys.set_weight(&e.subset, Complex64::new(e.re, e.im))?;
        }
        Ok(sys)
    }

    pub fn weight_table(&self) -> Vec<WeightEntry> {
        self.weights
            .iter()
            .map(|(&m, w)| WeightEntry {
                subset: subset_sites(m),
                re: w.re,
                im: w.im,
            })
            .collect()
    }

    pub fn from_json(n: usize, adjacency_gap: usize, text: &str) -> Result<Self> {
        let entries: Vec<WeightEntry> = serde_json::from_str(text)?;
        Self::from_weight_table(n, adjacency_gap, &entries)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&self.weight_table())?)
    }
}

/// Υ_n: sum over collections of pairwise non-adjacent polymers of the
/// product of their weights; the empty collection contributes 1.
pub fn brute_force_partition(sys: &PolymerSystem) -> Result<Complex64> {
    if sys.n > MAX_BRUTE_FORCE_HORIZON {
        return Err(LabError::HorizonTooLarge(sys.n, MAX_BRUTE_FORCE_HORIZON));
    }
    let polys = sys.polymers();
    let halos: Vec<u64> = polys
        .iter()
        .map(|(m, _)| dilate(*m, sys.adjacency_gap))
        .collect();
    fn rec(
        polys: &[(u64, Complex64)],
        halos: &[u64],
        start: usize,
        forbidden: u64,
        prod: Complex64,
    ) -> Complex64 {
        let mut total = prod;
        for j in start..polys.len() {
            if polys[j].0 & forbidden == 0 {
                total += rec(polys, halos, j + 1, forbidden | halos[j], prod * polys[j].1);
            }
        }
        total
    }
    Ok(rec(&polys, &halos, 0, 0, ONE))
}

thread_local! {
    static URSELL_CACHE: RefCell<HashMap<(usize, u128), i64>> = RefCell::new(HashMap::new());
}

/// Σ over connected spanning subgraphs of G of (−1)^{#edges}, for a graph
/// on m ≤ 16 vertices given by neighbour bitmasks. Zero for disconnected G.
fn ursell_coefficient(nbrs: &[u16]) -> i64 {
    let m = nbrs.len();
    if m <= 1 {
        return 1;
    }
    let mut key = 0u128;
    let mut bit = 0;
    for (i, &ni) in nbrs.iter().enumerate() {
        for j in i + 1..m {
            if ni >> j & 1 == 1 {
                key |= 1 << bit;
            }
            bit += 1;
        }
    }
    if let Some(v) = URSELL_CACHE.with(|c| c.borrow().get(&(m, key)).copied()) {
        return v;
    }
    let full = (1usize << m) - 1;
    // g(S) = Σ over all spanning subgraphs of G[S] of (−1)^{#edges} = [G[S] has no edge]
    let edgeless = |s: usize| (0..m).all(|i| s >> i & 1 == 0 || (nbrs[i] as usize) & s == 0);
    let g: Vec<i64> = (0..=full).map(|s| edgeless(s) as i64).collect();
    let mut c = vec![0i64; full + 1];
    for s in 1..=full {
        let low = s & s.wrapping_neg();
        let rest = s ^ low;
        // c(S) = g(S) − Σ_{low ∈ T ⊊ S} c(T) g(S∖T)
        let mut acc = g[s];
        let mut sub = rest;
        loop {
            // T = low ∪ (proper part of rest)
            if sub != rest {
                let t = low | sub;
                acc -= c[t] * g[s ^ t];
            }
            if sub == 0 {
                break;
            }
            sub = (sub - 1) & rest;
        }
        c[s] = acc;
    }
    let v = c[full];
    URSELL_CACHE.with(|cache| cache.borrow_mut().insert((m, key), v));
    v
}

fn factorial(k: usize) -> f64 {
    (1..=k).map(|i| i as f64).product()
}

fn member_graph(members: &[u64], gap: usize) -> Vec<u16> {
    let m = members.len();
    (0..m)
        .map(|i| {
            (0..m)
                .filter(|&j| j != i && adjacent(members[i], members[j], gap))
                .fold(0u16, |acc, j| acc | 1 << j)
        })
        .collect()
}

/// w^T(𝓐) for a multiset of members: the connected-graph sum times the
/// product of weights, including the symmetry factor 1/Π(multiplicity!)
/// so that the cluster sum runs over multisets.
pub fn truncated_weight(sys: &PolymerSystem, members: &[Vec<usize>]) -> Result<Complex64> {
    let masks = members
        .iter()
        .map(|s| {
            if s.is_empty() {
                Err(LabError::Config("cluster member is empty".into()))
            } else {
                subset_mask(s)
            }
        })
        .collect::<Result<Vec<u64>>>()?;
    truncated_weight_masks(sys, &masks)
}

pub fn truncated_weight_masks(sys: &PolymerSystem, members: &[u64]) -> Result<Complex64> {
    if members.len() > MAX_CLUSTER_MEMBERS {
        return Err(LabError::ClusterTooLarge(
            members.len(),
            MAX_CLUSTER_MEMBERS,
        ));
    }
    if members.is_empty() {
        return Ok(ZERO);
    }
    let phi = ursell_coefficient(&member_graph(members, sys.adjacency_gap));
    if phi == 0 {
        return Ok(ZERO);
    }
    let mut counts: BTreeMap<u64, usize> = BTreeMap::new();
    for &m in members {
        *counts.entry(m).or_default() += 1;
    }
    let sym: f64 = counts.values().map(|&k| factorial(k)).product();
    let prod: Complex64 = members.iter().map(|&m| sys.weight_mask(m)).product();
    Ok(prod * (phi as f64 / sym))
}

/// A multiset of polymers with its truncated weight.
#[derive(Debug, Clone, PartialEq)]
pub struct Cluster {
    pub members: Vec<Vec<usize>>,
    pub truncated_weight: Complex64,
}

impl Cluster {
    pub fn new(sys: &PolymerSystem, members: Vec<Vec<usize>>) -> Result<Self> {
        let truncated_weight = truncated_weight(sys, &members)?;
        Ok(Self {
            members,
            truncated_weight,
        })
    }
}

/// Outcome of a Kotecký-Preiss check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KpReport {
    pub satisfied: bool,
    #[serde(with = "serde_extended_f64")]
    pub worst_ratio: f64,
    pub witness: Option<Vec<usize>>,
}

/// Σ_{A ∼ target} |w(A)| e^{a(A)}.
fn kp_lhs(polys: &[(u64, Complex64)], a_vals: &[f64], gap: usize, target: u64) -> f64 {
    let halo = dilate(target, gap);
    polys
        .iter()
        .zip(a_vals)
        .filter(|((m, _), _)| m & halo != 0)
        .map(|((_, w), a)| w.norm() * a.exp())
        .sum()
}

/// Checks Σ_{A ∼ A'} |w(A)| e^{a(A)} ≤ a(A') for every polymer A' of
/// nonzero weight; worst_ratio is the largest LHS/RHS.
pub fn check_kotecky_preiss(sys: &PolymerSystem, a_fn: impl Fn(&[usize]) -> f64) -> KpReport {
    let polys = sys.polymers();
    let a_vals: Vec<f64> = polys.iter().map(|(m, _)| a_fn(&subset_sites(*m))).collect();
    let mut worst = 0.0;
    let mut witness = None;
    for (i, (m, _)) in polys.iter().enumerate() {
        let lhs = kp_lhs(&polys, &a_vals, sys.adjacency_gap, *m);
        let ratio = if a_vals[i] > 0.0 {
            lhs / a_vals[i]
        } else {
            f64::INFINITY
        };
        if ratio > worst || witness.is_none() {
            worst = ratio;
            witness = Some(subset_sites(*m));
        }
    }
    KpReport {
        satisfied: worst <= 1.0,
        worst_ratio: worst,
        witness: if worst > 1.0 {
            witness
        } else {
            witness.filter(|_| false)
        },
    }
}

/// a(A) = |A|.
pub fn size_a(sites: &[usize]) -> f64 {
    sites.len() as f64
}

/// Visits every connected multiset of at most `cap` polymers once:
/// connected sets of distinct polymers come from ESU enumeration, then
/// every multiplicity assignment is expanded. `visit(acc, union, size, w^T)`.
fn enumerate_clusters<A, I, V>(
    polys: &[(u64, Complex64)],
    gap: usize,
    cap: usize,
    init: I,
    visit: V,
) -> Vec<A>
where
    A: Send,
    I: Fn() -> A + Sync,
    V: Fn(&mut A, u64, usize, Complex64) + Sync,
{
    let p = polys.len();
    let halos: Vec<u64> = polys.iter().map(|(m, _)| dilate(*m, gap)).collect();
    let nbrs: Vec<Vec<usize>> = (0..p)
        .into_par_iter()
        .map(|i| {
            (0..p)
                .filter(|&j| j != i && halos[i] & polys[j].0 != 0)
                .collect()
        })
        .collect();

    struct Ctx<'a, V> {
        polys: &'a [(u64, Complex64)],
        halos: &'a [u64],
        nbrs: &'a [Vec<usize>],
        gap: usize,
        cap: usize,
        visit: &'a V,
    }

    fn expand<A, V: Fn(&mut A, u64, usize, Complex64)>(ctx: &Ctx<V>, acc: &mut A, sub: &[usize]) {
        let s = sub.len();
        let union = sub.iter().fold(0u64, |u, &i| u | ctx.polys[i].0);
        let mut mult = vec![1usize; s];
        loop {
            let total: usize = mult.iter().sum();
            let mut members = Vec::with_capacity(total);
            let mut prod = ONE;
            let mut sym = 1.0;
            for (&i, &k) in sub.iter().zip(&mult) {
                for _ in 0..k {
                    members.push(ctx.polys[i].0);
                }
                prod *= ctx.polys[i].1.powu(k as u32);
                sym *= factorial(k);
            }
            let phi = ursell_coefficient(&member_graph(&members, ctx.gap));
            if phi != 0 {
                (ctx.visit)(acc, union, total, prod * (phi as f64 / sym));
            }
            // next multiplicity vector with Σ ≤ cap
            let mut pos = 0;
            loop {
                if pos == s {
                    return;
                }
                if mult.iter().sum::<usize>() < ctx.cap {
                    mult[pos] += 1;
                    break;
                }
                mult[pos] = 1;
                pos += 1;
            }
        }
    }

    fn extend<A, V: Fn(&mut A, u64, usize, Complex64)>(
        ctx: &Ctx<V>,
        acc: &mut A,
        sub: &mut Vec<usize>,
        mut ext: Vec<usize>,
        root: usize,
    ) {
        expand(ctx, acc, sub);
        if sub.len() == ctx.cap {
            return;
        }
        while let Some(w) = ext.pop() {
            let mut next = ext.clone();
            for &u in &ctx.nbrs[w] {
                if u > root
                    && !sub.contains(&u)
                    && u != w
                    && sub.iter().all(|&s| ctx.halos[s] & ctx.polys[u].0 == 0)
                    && !next.contains(&u)
                {
                    next.push(u);
                }
            }
            sub.push(w);
            extend(ctx, acc, sub, next, root);
            sub.pop();
        }
    }

    let ctx = Ctx {
        polys,
        halos: &halos,
        nbrs: &nbrs,
        gap,
        cap,
        visit: &visit,
    };
    (0..p)
        .into_par_iter()
        .map(|root| {
            let mut acc = init();
            if cap > 0 {
                let ext: Vec<usize> = nbrs[root].iter().copied().filter(|&u| u > root).collect();
                extend(&ctx, &mut acc, &mut vec![root], ext, root);
            }
            acc
        })
        .collect()
}

/// Capped cluster expansion with its tail bound.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClusterSum {
    pub value: Complex64,
    #[serde(with = "serde_extended_f64")]
    pub truncation_bound: f64,
}

/// Σ w^T(𝓐) over clusters of at most `cluster_size_cap` members. The
/// truncation bound uses the Kotecký-Preiss criterion with a(A) = |A|:
/// if its worst ratio is ρ < 1, clusters of size m are bounded through the
/// rescaled weights w/ρ, giving Σ_{m > cap} ≤ ρ^cap Σ_τ Σ_{A ∼ {τ}} |w(A)| e^{|A|}.
pub fn cluster_log_partition(sys: &PolymerSystem, cluster_size_cap: usize) -> Result<ClusterSum> {
    cluster_log_partition_with(sys, cluster_size_cap, size_a)
}

pub fn cluster_log_partition_with(
    sys: &PolymerSystem,
    cluster_size_cap: usize,
    a_fn: impl Fn(&[usize]) -> f64,
) -> Result<ClusterSum> {
    if sys.n > MAX_HORIZON {
        return Err(LabError::HorizonTooLarge(sys.n, MAX_HORIZON));
    }
    let polys = sys.polymers();
    if polys.is_empty() {
        return Ok(ClusterSum {
            value: ZERO,
            truncation_bound: 0.0,
        });
    }
    let kp = check_kotecky_preiss(sys, &a_fn);
    if !kp.satisfied {
        log::warn!(
            "Kotecky-Preiss criterion fails (worst ratio {:.3}); cluster sum may diverge",
            kp.worst_ratio
        );
    }
    if cluster_size_cap > MAX_CLUSTER_SIZE_CAP {
        return Err(LabError::ClusterTooLarge(
            cluster_size_cap,
            MAX_CLUSTER_SIZE_CAP,
        ));
    }
    let parts = enumerate_clusters(
        &polys,
        sys.adjacency_gap,
        cluster_size_cap,
        || ZERO,
        |acc, _, _, w| *acc += w,
    );
    let value: Complex64 = parts.into_iter().sum();
    let truncation_bound = if kp.worst_ratio < 1.0 {
        let a_vals: Vec<f64> = polys.iter().map(|(m, _)| a_fn(&subset_sites(*m))).collect();
        let site_sum: f64 = (0..sys.n)
            .map(|t| kp_lhs(&polys, &a_vals, sys.adjacency_gap, 1 << t))
            .sum();
        kp.worst_ratio.powi(cluster_size_cap as i32) * site_sum
    } else {
        f64::INFINITY
    };
    Ok(ClusterSum {
        value,
        truncation_bound,
    })
}

/// JSON report for a capped cluster expansion.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolymerReport {
    pub satisfied: bool,
    #[serde(with = "serde_extended_f64")]
    pub worst_ratio: f64,
    pub witness: Option<Vec<usize>>,
    pub value_re: f64,
    pub value_im: f64,
    #[serde(with = "serde_extended_f64")]
    pub tail_bound: f64,
}

pub fn polymer_report(sys: &PolymerSystem, cluster_size_cap: usize) -> Result<PolymerReport> {
    let kp = check_kotecky_preiss(sys, size_a);
    let sum = cluster_log_partition(sys, cluster_size_cap)?;
    Ok(PolymerReport {
        satisfied: kp.satisfied,
        worst_ratio: kp.worst_ratio,
        witness: kp.witness,
        value_re: sum.value.re,
        value_im: sum.value.im,
        tail_bound: sum.truncation_bound,
    })
}

/// Translation-invariant weights: w(τ + shape) = weight for every shape.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct WeightFamily {
    shapes: Vec<(u64, Complex64)>,
    adjacency_gap: usize,
}

impl WeightFamily {
    pub fn new(adjacency_gap: usize) -> Self {
        Self {
            shapes: Vec::new(),
            adjacency_gap,
        }
    }

    /// Adds a shape given by nonnegative offsets; it is shifted so its
    /// smallest offset is 0.
    pub fn add_shape(&mut self, offsets: &[usize], w: Complex64) -> Result<()> {
        let lo = *offsets
            .iter()
            .min()
            .ok_or_else(|| LabError::Config("empty shape".into()))?;
        let sites: Vec<usize> = offsets.iter().map(|o| o - lo + 1).collect();
        let mask = subset_mask(&sites)?;
        if let Some(entry) = self.shapes.iter_mut().find(|(m, _)| *m == mask) {
            entry.1 = w;
        } else {
            self.shapes.push((mask, w));
        }
        self.shapes.retain(|(_, w)| *w != ZERO);
        self.shapes.sort_by_key(|(m, _)| *m);
        Ok(())
    }

    pub fn adjacency_gap(&self) -> usize {
        self.adjacency_gap
    }

    pub fn shapes(&self) -> Vec<(Vec<usize>, Complex64)> {
        self.shapes
            .iter()
            .map(|(m, w)| (subset_sites(*m).iter().map(|s| s - 1).collect(), *w))
            .collect()
    }

    /// All translates fitting inside {1, …, n}.
    pub fn restrict(&self, n: usize) -> Result<PolymerSystem> {
        let mut sys = PolymerSystem::new(n, self.adjacency_gap)?;
        for &(mask, w) in &self.shapes {
            let d = diameter(mask);
            for shift in 0..(n + 1).saturating_sub(d) {
                sys.set_mask(mask << shift, w);
            }
        }
        Ok(sys)
    }
}

/// Anchored clusters (smallest site 1) of a translation-invariant family,
/// aggregated by diameter: index d holds Σ w^T and Σ |w^T| over clusters
/// of span d.
#[derive(Debug, Clone, PartialEq)]
pub struct AnchoredClusters {
    pub by_diameter: Vec<Complex64>,
    pub abs_by_diameter: Vec<f64>,
    pub cluster_size_cap: usize,
    pub diameter_cap: usize,
    /// Kotecký-Preiss worst ratio (a(A) = |A|) of the family on the window.
    pub kp_worst_ratio: f64,
    /// Σ_{A ∼ {1}} |w(A)| e^{|A|} on the window.
    pub anchor_lhs: f64,
}

pub fn anchored_clusters(
    family: &WeightFamily,
    cluster_size_cap: usize,
    diameter_cap: usize,
) -> Result<AnchoredClusters> {
    if diameter_cap > MAX_HORIZON {
        return Err(LabError::HorizonTooLarge(diameter_cap, MAX_HORIZON));
    }
    let window = family.restrict(diameter_cap)?;
    let polys = window.polymers();
    let kp = check_kotecky_preiss(&window, size_a);
    let a_vals: Vec<f64> = polys
        .iter()
        .map(|(m, _)| size_a(&subset_sites(*m)))
        .collect();
    let anchor_lhs = kp_lhs(&polys, &a_vals, family.adjacency_gap, 1);
    if cluster_size_cap > MAX_CLUSTER_SIZE_CAP {
        return Err(LabError::ClusterTooLarge(
            cluster_size_cap,
            MAX_CLUSTER_SIZE_CAP,
        ));
    }
    let cap = cluster_size_cap;
    let init = || (vec![ZERO; diameter_cap + 1], vec![0.0; diameter_cap + 1]);
    let parts = enumerate_clusters(
        &polys,
        family.adjacency_gap,
        cap,
        init,
        |acc, union, _, w| {
            if union & 1 == 1 {
                let d = diameter(union);
                acc.0[d] += w;
                acc.1[d] += w.norm();
            }
        },
    );
    let (mut by_diameter, mut abs_by_diameter) = init();
    for (s, a) in parts {
        for d in 0..=diameter_cap {
            by_diameter[d] += s[d];
            abs_by_diameter[d] += a[d];
        }
    }
    Ok(AnchoredClusters {
        by_diameter,
        abs_by_diameter,
        cluster_size_cap: cap,
        diameter_cap,
        kp_worst_ratio: kp.worst_ratio,
        anchor_lhs,
    })
}

impl AnchoredClusters {
    pub fn pressure(&self) -> Complex64 {
        self.by_diameter.iter().sum()
    }

    /// p − n^{-1} log Υ_n = Σ (1 − (n + 1 − d)₊/n) w^T over anchored clusters.
    pub fn finite_size_correction(&self, n: usize) -> Complex64 {
        let nf = n as f64;
        self.by_diameter
            .iter()
            .enumerate()
            .map(|(d, w)| w * (1.0 - ((nf + 1.0 - d as f64).max(0.0)) / nf))
            .sum()
    }

    /// Σ 1[d(𝓐) ≥ m] |w^T(𝓐)|.
    pub fn diameter_tail(&self, m: usize) -> f64 {
        self.abs_by_diameter.iter().skip(m).sum()
    }

    /// Bound on anchored clusters beyond the size cap: ρ^cap Σ_{A ∼ {1}} |w| e^{|A|}.
    pub fn size_tail_bound(&self) -> f64 {
        if self.kp_worst_ratio < 1.0 {
            self.kp_worst_ratio.powi(self.cluster_size_cap as i32) * self.anchor_lhs
        } else {
            f64::INFINITY
        }
    }
}

/// Pressure with its tail diagnostics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PressureResult {
    pub value: Complex64,
    /// Rigorous bound on clusters larger than the size cap (Kotecký-Preiss).
    #[serde(with = "serde_extended_f64")]
    pub size_tail_bound: f64,
    /// Σ |w^T| over enumerated clusters with diameter above half the cap;
    /// an estimate of what the diameter cap cuts off.
    pub diameter_tail_estimate: f64,
}

pub fn pressure(
    family: &WeightFamily,
    cluster_size_cap: usize,
    diameter_cap: usize,
) -> Result<PressureResult> {
    let ac = anchored_clusters(family, cluster_size_cap, diameter_cap)?;
    Ok(PressureResult {
        value: ac.pressure(),
        size_tail_bound: ac.size_tail_bound(),
        diameter_tail_estimate: ac.diameter_tail(diameter_cap / 2 + 1),
    })
}

pub fn finite_size_correction(
    family: &WeightFamily,
    n: usize,
    cluster_size_cap: usize,
    diameter_cap: usize,
) -> Result<Complex64> {
    Ok(anchored_clusters(family, cluster_size_cap, diameter_cap)?.finite_size_correction(n))
}

/// Connected weights G^c from full weights G on the subsets of {1, …, k},
/// inverting G(A) = Σ over set partitions of A of Π G^c(block).
/// Index i of the slices is the subset bitmask; entry 0 is ignored.
pub fn connected_from_full(full: &[Complex64]) -> Vec<Complex64> {
    let size = full.len();
    let mut conn = vec![ZERO; size];
    let g = |s: usize| if s == 0 { ONE } else { full[s] };
    for s in 1..size {
        let low = s & s.wrapping_neg();
        let rest = s ^ low;
        let mut acc = g(s);
        let mut sub = rest;
        loop {
            if sub != rest {
                let t = low | sub;
                acc -= conn[t] * g(s ^ t);
            }
            if sub == 0 {
                break;
            }
            sub = (sub - 1) & rest;
        }
        conn[s] = acc;
    }
    conn
}

/// Full weights from connected ones: G(A) = Σ_{min A ∈ B ⊆ A} G^c(B) G(A∖B).
pub fn full_from_connected(conn: &[Complex64]) -> Vec<Complex64> {
    let size = conn.len();
    let mut full = vec![ZERO; size];
    for s in 1..size {
        let low = s & s.wrapping_neg();
        let rest = s ^ low;
        let mut acc = ZERO;
        let mut sub = rest;
        loop {
            let t = low | sub;
            let remainder = s ^ t;
            acc += conn[t] * if remainder == 0 { ONE } else { full[remainder] };
            if sub == 0 {
                break;
            }
            sub = (sub - 1) & rest;
        }
        full[s] = acc;
    }
    full
}
