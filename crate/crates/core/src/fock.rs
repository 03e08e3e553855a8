//! Truncated Fock-space oracle: a finite mode grid, the occupation basis
//! with Σn_k ≤ N_max, the sparse Hamiltonian
//! H = H_S ⊗ 1 + Σ ω_k n_k + λ D ⊗ Σ (c_k a_k† + c̄_k a_k),
//! and Krylov propagation of state vectors.

use std::fmt::Write as _;
use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::correlations::Profile;
use crate::error::{LabError, Result};
use crate::linalg::{CMat, CVec};
use crate::model::{DensityKind, SpectralDensity, SpinBosonModel};
use crate::quad;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Default cap on the truncated dimension d_S · C(K + N_max, N_max).
pub const DEFAULT_DIMENSION_BUDGET: usize = 5_000_000;
/// Krylov subspace dimension.
pub const KRYLOV_DIM: usize = 30;
/// Target local error per Krylov step, relative to the state norm.
pub const KRYLOV_TOL: f64 = 1e-10;
/// Probability mass on the top shell above which a row is flagged.
pub const CUTOFF_MASS_THRESHOLD: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QuadratureScheme {
    /// K equal cells; ω_k the cell centers, |c_k|² = J(ω_k) Δω_k.
    Midpoint,
    /// K equal cells; ω_k the cell centers, |c_k|² the exact mass of J in
    /// the cell. Keeps features narrower than a cell.
    CellAverage,
    /// K-point Gauss-Legendre nodes; |c_k|² = J(ω_k) Δω_k.
    GaussLegendre,
}

/// Discrete field modes ω_k with couplings c_k.
#[derive(Debug, Clone, PartialEq)]
pub struct ModeGrid {
    frequencies: Vec<f64>,
    weights: Vec<f64>,
    couplings: Vec<Complex64>,
}

/// Frequency window discretized by default: the analytic family keeps
/// (0, min(ω_max, 1.5·√K·ω_c)], beyond which J is exponentially small.
pub fn default_mode_window(density: &SpectralDensity, k: usize) -> f64 {
    match density.kind() {
        DensityKind::Analytic { omega_c, .. } => {
            density.omega_max().min(1.5 * (k as f64).sqrt() * omega_c)
        }
        _ => density.omega_max(),
    }
}

pub fn build_mode_grid(density: &SpectralDensity, k: usize, scheme: QuadratureScheme) -> ModeGrid {
    build_mode_grid_window(density, k, scheme, default_mode_window(density, k))
}

pub fn build_mode_grid_window(
    density: &SpectralDensity,
    k: usize,
    scheme: QuadratureScheme,
    window: f64,
) -> ModeGrid {
    assert!(k >= 1, "mode count must be positive");
    let window = window.min(density.omega_max());
    let (frequencies, weights, masses): (Vec<f64>, Vec<f64>, Vec<f64>) = match scheme {
        QuadratureScheme::Midpoint => {
            let dw = window / k as f64;
            let freqs: Vec<f64> = (0..k).map(|j| (j as f64 + 0.5) * dw).collect();
            let masses = freqs.iter().map(|&f| density.eval(f) * dw).collect();
            (freqs, vec![dw; k], masses)
        }
        QuadratureScheme::CellAverage => {
            let dw = window / k as f64;
            let mut w = Vec::with_capacity(k);
            let mut m = Vec::with_capacity(k);
            for j in 0..k {
                let (a, b) = (j as f64 * dw, (j + 1) as f64 * dw);
                w.push(0.5 * (a + b));
                let mut f = |x: f64| density.eval(x);
                let mass =
                    quad::adaptive_with_breaks(&mut f, a, b, &density.breakpoints(), 1e-12, 1e-300)
                        .unwrap_or_else(|_| density.eval(0.5 * (a + b)) * dw);
                m.push(mass);
            }
            (w, vec![dw; k], m)
        }
        QuadratureScheme::GaussLegendre => {
            let (x, wt) = quad::gauss_legendre(k);
            let freqs: Vec<f64> = x.iter().map(|xi| 0.5 * window * (xi + 1.0)).collect();
            let weights: Vec<f64> = wt.iter().map(|wi| 0.5 * window * wi).collect();
            let masses = freqs
                .iter()
                .zip(&weights)
                .map(|(&f, &w)| density.eval(f) * w)
                .collect();
            (freqs, weights, masses)
        }
    };
    let couplings = masses
        .iter()
        .map(|&m| Complex64::new(m.max(0.0).sqrt(), 0.0))
        .collect();
    ModeGrid {
        frequencies,
        weights,
        couplings,
    }
}

impl ModeGrid {
    /// Explicit modes, e.g. a single oscillator.
    pub fn from_modes(frequencies: Vec<f64>, couplings: Vec<Complex64>) -> Result<Self> {
        if frequencies.len() != couplings.len() || frequencies.is_empty() {
            return Err(LabError::DimensionMismatch(
                "mode frequencies and couplings differ in length".into(),
            ));
        }
        if frequencies.iter().any(|&w| !(w > 0.0)) || frequencies.windows(2).any(|w| !(w[1] > w[0]))
        {
            return Err(LabError::InvalidDensity(
                "mode frequencies must be positive and increasing".into(),
            ));
        }
        let weights = vec![0.0; frequencies.len()];
        Ok(Self {
            frequencies,
            weights,
            couplings,
        })
    }

    pub fn len(&self) -> usize {
        self.frequencies.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frequencies.is_empty()
    }

    pub fn frequencies(&self) -> &[f64] {
        &self.frequencies
    }

    /// Quadrature weights Δω_k.
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn couplings(&self) -> &[Complex64] {
        &self.couplings
    }

    /// Σ |c_k|², the discrete counterpart of ∫ J.
    pub fn mass(&self) -> f64 {
        self.couplings.iter().map(|c| c.norm_sqr()).sum()
    }

    /// h_K(t) = Σ |c_k|² e^{−iω_k t}.
    pub fn discrete_h(&self, t: f64) -> Complex64 {
        self.frequencies
            .iter()
            .zip(&self.couplings)
            .map(|(&w, c)| Complex64::from_polar(c.norm_sqr(), -w * t))
            .sum()
    }

    /// Σ |c_k|² · 2(1 − cos ω_k t)/ω_k², the van Hove photon number of the grid.
    pub fn discrete_photon_number(&self, t: f64) -> f64 {
        self.frequencies
            .iter()
            .zip(&self.couplings)
            .map(|(&w, c)| 4.0 * c.norm_sqr() * (0.5 * w * t).sin().powi(2) / (w * w))
            .sum()
    }

    /// Discretized profile amplitudes ψ_k.
    pub fn profile_amplitudes(
        &self,
        density: &SpectralDensity,
        profile: &Profile,
    ) -> Vec<Complex64> {
        match profile {
            Profile::Zero => vec![ZERO; self.len()],
            Profile::Matching(c) => self.couplings.iter().map(|ck| c * ck).collect(),
            Profile::Custom { .. } => self
                .frequencies
                .iter()
                .zip(&self.weights)
                .map(|(&w, &dw)| profile.eval(density, w) * dw.sqrt())
                .collect(),
        }
    }
}

/// Occupation multi-indices n ∈ ℕ^K with Σ n_k ≤ N_max in lexicographic order.
#[derive(Debug, Clone)]
pub struct FockBasis {
    modes: usize,
    n_max: usize,
    occupations: Vec<u8>,
    totals: Vec<u8>,
    /// binom[l][r] = number of tuples of length l with sum ≤ r = C(l + r, l)
    binom: Vec<Vec<usize>>,
}

fn count_states(modes: usize, n_max: usize) -> Option<usize> {
    // C(K + N, N) with overflow detection
    let mut acc: u128 = 1;
    for i in 1..=n_max as u128 {
        acc = acc * (modes as u128 + i) / i;
        if acc > usize::MAX as u128 {
            return None;
        }
    }
    Some(acc as usize)
}

impl FockBasis {
    pub fn new(modes: usize, n_max: usize) -> Self {
        assert!(n_max < 256, "N_max must fit in a byte");
        let mut binom = vec![vec![1usize; n_max + 1]; modes + 1];
        for l in 1..=modes {
            for r in 1..=n_max {
                binom[l][r] = binom[l - 1][r] + binom[l][r - 1];
            }
        }
        let size = binom[modes][n_max];
        let mut occupations = Vec::with_capacity(size * modes);
        let mut totals = Vec::with_capacity(size);
        let mut cur = vec![0u8; modes];
        fn rec(
            i: usize,
            budget: usize,
            cur: &mut Vec<u8>,
            occ: &mut Vec<u8>,
            tot: &mut Vec<u8>,
            n_max: usize,
        ) {
            if i == cur.len() {
                occ.extend_from_slice(cur);
                tot.push((n_max - budget) as u8);
                return;
            }
            for v in 0..=budget {
                cur[i] = v as u8;
                rec(i + 1, budget - v, cur, occ, tot, n_max);
            }
            cur[i] = 0;
        }
        rec(0, n_max, &mut cur, &mut occupations, &mut totals, n_max);
        Self {
            modes,
            n_max,
            occupations,
            totals,
            binom,
        }
    }

    pub fn len(&self) -> usize {
        self.totals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.totals.is_empty()
    }

    pub fn modes(&self) -> usize {
        self.modes
    }

    pub fn n_max(&self) -> usize {
        self.n_max
    }

    pub fn occupation(&self, b: usize) -> &[u8] {
        &self.occupations[b * self.modes..(b + 1) * self.modes]
    }

    pub fn total(&self, b: usize) -> usize {
        self.totals[b] as usize
    }

    /// Lexicographic rank of a multi-index.
    pub fn rank(&self, occ: &[u8]) -> usize {
        let mut idx = 0;
        let mut budget = self.n_max;
        for (i, &n) in occ.iter().enumerate() {
            let rest = self.modes - i - 1;
            for v in 0..n as usize {
                idx += self.binom[rest][budget - v];
            }
            budget -= n as usize;
        }
        idx
    }
}

/// Compressed sparse rows.
#[derive(Debug, Clone)]
struct Csr {
    row_ptr: Vec<usize>,
    cols: Vec<u32>,
    vals: Vec<Complex64>,
}

impl Csr {
    fn matvec(&self, x: &[Complex64], y: &mut [Complex64]) {
        let row = |i: usize| -> Complex64 {
            let mut acc = ZERO;
            for p in self.row_ptr[i]..self.row_ptr[i + 1] {
                acc += self.vals[p] * x[self.cols[p] as usize];
            }
            acc
        };
        if y.len() > 4096 {
            y.par_iter_mut()
                .enumerate()
                .for_each(|(i, yi)| *yi = row(i));
        } else {
            for (i, yi) in y.iter_mut().enumerate() {
                *yi = row(i);
            }
        }
    }
}

/// Sparse Hamiltonian on the truncated space; index = s · |basis| + b.
#[derive(Debug, Clone)]
pub struct TruncatedHamiltonian {
    csr: Csr,
    basis: Arc<FockBasis>,
    d_s: usize,
}

pub fn build_hamiltonian(
    model: &SpinBosonModel,
    grid: &ModeGrid,
    n_max: usize,
) -> Result<TruncatedHamiltonian> {
    build_hamiltonian_with_budget(model, grid, n_max, DEFAULT_DIMENSION_BUDGET)
}

pub fn build_hamiltonian_with_budget(
    model: &SpinBosonModel,
    grid: &ModeGrid,
    n_max: usize,
    budget: usize,
) -> Result<TruncatedHamiltonian> {
    let d_s = model.dim();
    let k = grid.len();
    let size = count_states(k, n_max).and_then(|b| b.checked_mul(d_s));
    match size {
        Some(dim) if dim <= budget => {}
        Some(dim) => return Err(LabError::DimensionBudgetExceeded { dim, budget }),
        None => {
            return Err(LabError::DimensionBudgetExceeded {
                dim: usize::MAX,
                budget,
            })
        }
    }
    let basis = Arc::new(FockBasis::new(k, n_max));
    let nb = basis.len();
    let hs = model.system().hamiltonian();
    let dm = model.coupling().matrix() * Complex64::new(model.lambda(), 0.0);
    let freqs = grid.frequencies();
    let cs = grid.couplings();

    let rows: Vec<(Vec<u32>, Vec<Complex64>)> = (0..d_s * nb)
        .into_par_iter()
        .map(|row| {
            let sp = row / nb;
            let b = row % nb;
            let occ = basis.occupation(b);
            let field_energy: f64 = occ.iter().zip(freqs).map(|(&n, &w)| n as f64 * w).sum();
            let mut entries: Vec<(u32, Complex64)> = Vec::new();
            // neighbours in the field: (mode, column basis index, amplitude factor)
            let mut ladder: Vec<(usize, Complex64)> = Vec::with_capacity(2 * k);
            let mut tmp = occ.to_vec();
            for m in 0..k {
                if occ[m] > 0 {
                    // a_m† |n − e_m⟩ = √n_m |n⟩
                    tmp[m] -= 1;
                    ladder.push((basis.rank(&tmp), cs[m] * (occ[m] as f64).sqrt()));
                    tmp[m] += 1;
                }
                if basis.total(b) < n_max {
                    // a_m |n + e_m⟩ = √(n_m + 1) |n⟩
                    tmp[m] += 1;
                    ladder.push((
                        basis.rank(&tmp),
                        cs[m].conj() * ((occ[m] as f64) + 1.0).sqrt(),
                    ));
                    tmp[m] -= 1;
                }
            }
            for s in 0..d_s {
                let mut diag = hs[(sp, s)];
                if s == sp {
                    diag += field_energy;
                }
                if diag != ZERO {
                    entries.push(((s * nb + b) as u32, diag));
                }
                let coupling = dm[(sp, s)];
                if coupling != ZERO {
                    for &(col, amp) in &ladder {
                        entries.push(((s * nb + col) as u32, coupling * amp));
                    }
                }
            }
            entries.sort_by_key(|e| e.0);
            entries.into_iter().unzip()
        })
        .collect();
    let mut row_ptr = Vec::with_capacity(rows.len() + 1);
    row_ptr.push(0);
    let nnz: usize = rows.iter().map(|r| r.0.len()).sum();
    let mut cols = Vec::with_capacity(nnz);
    let mut vals = Vec::with_capacity(nnz);
    for (c, v) in rows {
        cols.extend(c);
        vals.extend(v);
        row_ptr.push(cols.len());
    }
    Ok(TruncatedHamiltonian {
        csr: Csr {
            row_ptr,
            cols,
            vals,
        },
        basis,
        d_s,
    })
}

impl TruncatedHamiltonian {
    pub fn dim(&self) -> usize {
        self.d_s * self.basis.len()
    }

    /// (d_S, K, N_max)
    pub fn dims(&self) -> (usize, usize, usize) {
        (self.d_s, self.basis.modes(), self.basis.n_max())
    }

    pub fn basis(&self) -> &Arc<FockBasis> {
        &self.basis
    }

    pub fn nnz(&self) -> usize {
        self.csr.vals.len()
    }

    pub fn apply(&self, x: &[Complex64]) -> Vec<Complex64> {
        let mut y = vec![ZERO; x.len()];
        self.csr.matvec(x, &mut y);
        y
    }

    /// Dense copy, for small instances.
    pub fn to_dense(&self) -> CMat {
        let n = self.dim();
        let mut m = CMat::zeros(n, n);
        for i in 0..n {
            for p in self.csr.row_ptr[i]..self.csr.row_ptr[i + 1] {
                m[(i, self.csr.cols[p] as usize)] += self.csr.vals[p];
            }
        }
        m
    }

    /// max |H_ij − conj H_ji| relative to max |H_ij|.
    pub fn hermiticity_defect(&self) -> f64 {
        let n = self.dim();
        let mut scale: f64 = 0.0;
        let mut defect: f64 = 0.0;
        let lookup = |i: usize, j: usize| -> Complex64 {
            let range = self.csr.row_ptr[i]..self.csr.row_ptr[i + 1];
            let cols = &self.csr.cols[range.clone()];
            match cols.binary_search(&(j as u32)) {
                Ok(p) => self.csr.vals[range.start + p],
                Err(_) => ZERO,
            }
        };
        for i in 0..n {
            for p in self.csr.row_ptr[i]..self.csr.row_ptr[i + 1] {
                let j = self.csr.cols[p] as usize;
                let v = self.csr.vals[p];
                scale = scale.max(v.norm());
                defect = defect.max((v - lookup(j, i).conj()).norm());
            }
        }
        if scale == 0.0 {
            0.0
        } else {
            defect / scale
        }
    }

    pub fn expectation(&self, psi: &FockState) -> f64 {
        let hp = self.apply(&psi.amplitudes);
        psi.amplitudes
            .iter()
            .zip(&hp)
            .map(|(a, b)| (a.conj() * b).re)
            .sum()
    }
}

/// State vector on the truncated space.
#[derive(Debug, Clone)]
pub struct FockState {
    amplitudes: Vec<Complex64>,
    basis: Arc<FockBasis>,
    d_s: usize,
}

impl FockState {
    /// ψ_s ⊗ Ω.
    pub fn product_vacuum(h: &TruncatedHamiltonian, system: &CVec) -> Self {
        let nb = h.basis.len();
        let mut amplitudes = vec![ZERO; h.dim()];
        for s in 0..h.d_s {
            amplitudes[s * nb] = system[s];
        }
        Self {
            amplitudes,
            basis: h.basis.clone(),
            d_s: h.d_s,
        }
    }

    /// ψ_s ⊗ χ for a field state χ on the same occupation basis.
    pub fn product(system: &CVec, field: &FockState) -> Result<Self> {
        if field.d_s != 1 {
            return Err(LabError::DimensionMismatch(
                "field state must have a trivial system factor".into(),
            ));
        }
        let nb = field.basis.len();
        let d_s = system.len();
        let mut amplitudes = vec![ZERO; d_s * nb];
        for s in 0..d_s {
            for b in 0..nb {
                amplitudes[s * nb + b] = system[s] * field.amplitudes[b];
            }
        }
        Ok(Self {
            amplitudes,
            basis: field.basis.clone(),
            d_s,
        })
    }

    pub fn from_amplitudes(h: &TruncatedHamiltonian, amplitudes: Vec<Complex64>) -> Result<Self> {
        if amplitudes.len() != h.dim() {
            return Err(LabError::DimensionMismatch(format!(
                "{} amplitudes for a space of dimension {}",
                amplitudes.len(),
                h.dim()
            )));
        }
        Ok(Self {
            amplitudes,
            basis: h.basis.clone(),
            d_s: h.d_s,
        })
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn basis(&self) -> &Arc<FockBasis> {
        &self.basis
    }

    pub fn system_dim(&self) -> usize {
        self.d_s
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes
            .iter()
            .map(|a| a.norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    /// Mass on the top shell Σ n_k = N_max.
    pub fn norm_at_cutoff(&self) -> f64 {
        let nb = self.basis.len();
        let n_max = self.basis.n_max();
        self.amplitudes
            .iter()
            .enumerate()
            .filter(|(i, _)| self.basis.total(i % nb) == n_max)
            .map(|(_, a)| a.norm_sqr())
            .sum()
    }

    /// 1 − ‖ψ‖², the norm lost relative to a unit vector.
    pub fn norm_deficit(&self) -> f64 {
        1.0 - self.norm().powi(2)
    }

    /// ⟨n_k⟩ for every mode.
    pub fn mode_occupations(&self) -> Vec<f64> {
        let nb = self.basis.len();
        let mut out = vec![0.0; self.basis.modes()];
        for (i, a) in self.amplitudes.iter().enumerate() {
            let p = a.norm_sqr();
            if p == 0.0 {
                continue;
            }
            for (k, &n) in self.basis.occupation(i % nb).iter().enumerate() {
                out[k] += p * n as f64;
            }
        }
        out
    }

    /// Distribution of the total photon number.
    pub fn photon_distribution(&self) -> Vec<f64> {
        let nb = self.basis.len();
        let mut out = vec![0.0; self.basis.n_max() + 1];
        for (i, a) in self.amplitudes.iter().enumerate() {
            out[self.basis.total(i % nb)] += a.norm_sqr();
        }
        out
    }

    /// Snapshot rows: system level, occupation string, re, im (nonzero entries).
    pub fn to_csv(&self) -> String {
        let nb = self.basis.len();
        let mut out = String::from("level,occupation,re,im\n");
        for (i, a) in self.amplitudes.iter().enumerate() {
            if *a == ZERO {
                continue;
            }
            let occ: Vec<String> = self
                .basis
                .occupation(i % nb)
                .iter()
                .map(|n| n.to_string())
                .collect();
            writeln!(out, "{},{},{:?},{:?}", i / nb, occ.join(" "), a.re, a.im).unwrap();
        }
        out
    }
}

/// Tr_F |ψ⟩⟨χ|.
pub fn reduced_cross(psi: &FockState, chi: &FockState) -> CMat {
    let nb = psi.basis.len();
    let d = psi.d_s;
    CMat::from_fn(d, d, |s, sp| {
        let a = &psi.amplitudes[s * nb..(s + 1) * nb];
        let b = &chi.amplitudes[sp * nb..(sp + 1) * nb];
        a.iter().zip(b).map(|(x, y)| x * y.conj()).sum()
    })
}

/// Tr_F |ψ⟩⟨ψ|.
pub fn reduced_density(psi: &FockState) -> CMat {
    reduced_cross(psi, psi)
}

/// Σ |amplitude|² e^{κ Σ n_k}.
pub fn photon_moment(psi: &FockState, kappa: Complex64) -> Complex64 {
    let nb = psi.basis.len();
    let factors: Vec<Complex64> = (0..=psi.basis.n_max())
        .map(|n| (kappa * n as f64).exp())
        .collect();
    psi.amplitudes
        .iter()
        .enumerate()
        .map(|(i, a)| factors[psi.basis.total(i % nb)] * a.norm_sqr())
        .sum()
}

/// Mean total photon number.
pub fn mean_photon_number(psi: &FockState) -> f64 {
    let nb = psi.basis.len();
    psi.amplitudes
        .iter()
        .enumerate()
        .map(|(i, a)| psi.basis.total(i % nb) as f64 * a.norm_sqr())
        .sum()
}

/// 𝓦(ψ)Ω = e^{−‖ψ‖²/2} e^{i a*(ψ)} Ω truncated to Σn ≤ N_max and
/// renormalized; fails when more than 1% of the mass lies above N_max.
pub fn weyl_vacuum_state(
    grid: &ModeGrid,
    density: &SpectralDensity,
    profile: &Profile,
    n_max: usize,
) -> Result<FockState> {
    let psi = grid.profile_amplitudes(density, profile);
    coherent_state(&psi, n_max)
}

/// Coherent state with per-mode amplitudes α_k = iψ_k.
pub fn coherent_state(psi: &[Complex64], n_max: usize) -> Result<FockState> {
    let basis = Arc::new(FockBasis::new(psi.len(), n_max));
    let alpha: Vec<Complex64> = psi.iter().map(|p| Complex64::new(0.0, 1.0) * p).collect();
    let total_sq: f64 = alpha.iter().map(|a| a.norm_sqr()).sum();
    let log_fact: Vec<f64> = (0..=n_max)
        .scan(0.0, |acc, n| {
            if n > 0 {
                *acc += (n as f64).ln();
            }
            Some(*acc)
        })
        .collect();
    let prefactor = (-0.5 * total_sq).exp();
    let amplitudes: Vec<Complex64> = (0..basis.len())
        .map(|b| {
            let mut amp = Complex64::new(prefactor, 0.0);
            for (k, &n) in basis.occupation(b).iter().enumerate() {
                if n > 0 {
                    amp *= alpha[k].powu(n as u32) * (-0.5 * log_fact[n as usize]).exp();
                }
            }
            amp
        })
        .collect();
    let kept: f64 = amplitudes.iter().map(|a| a.norm_sqr()).sum();
    if 1.0 - kept > CUTOFF_MASS_THRESHOLD {
        return Err(LabError::TailTooHeavy(format!(
            "coherent state loses {:.3}% of its mass above N_max = {n_max}",
            100.0 * (1.0 - kept)
        )));
    }
    let scale = 1.0 / kept.sqrt();
    Ok(FockState {
        amplitudes: amplitudes.into_iter().map(|a| a * scale).collect(),
        basis,
        d_s: 1,
    })
}

/// e^{−itH} ψ₀ by restarted Krylov (Arnoldi) steps of dimension 30 with
/// adaptive step size.
pub fn propagate(h: &TruncatedHamiltonian, psi0: &FockState, t: f64) -> Result<FockState> {
    if t == 0.0 {
        return Ok(psi0.clone());
    }
    let amplitudes = krylov_expmv(
        |x, y| h.csr.matvec(x, y),
        &psi0.amplitudes,
        Complex64::new(0.0, -t),
    )?;
    Ok(FockState {
        amplitudes,
        basis: psi0.basis.clone(),
        d_s: psi0.d_s,
    })
}

/// e^{z A} v for Hermitian A (given as a matvec) and z = −i t, via Krylov
/// subspaces. Only purely imaginary z is supported.
fn krylov_expmv<F: Fn(&[Complex64], &mut [Complex64])>(
    apply: F,
    v: &[Complex64],
    z: Complex64,
) -> Result<Vec<Complex64>> {
    let n = v.len();
    let total = z.im.abs();
    let dir = Complex64::new(0.0, z.im.signum());
    let m = KRYLOV_DIM.min(n);
    let mut w = v.to_vec();
    let mut done = 0.0;
    let mut tau = total;
    let norm = |x: &[Complex64]| x.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
    let beta0 = norm(&w);
    if beta0 == 0.0 {
        return Ok(w);
    }
    while done < total {
        let beta = norm(&w);
        let mut basis: Vec<Vec<Complex64>> = Vec::with_capacity(m + 1);
        basis.push(w.iter().map(|a| a / beta).collect());
        let mut alpha = Vec::with_capacity(m);
        let mut offdiag = Vec::with_capacity(m);
        let mut happy = false;
        let mut p = vec![ZERO; n];
        for j in 0..m {
            apply(&basis[j], &mut p);
            // modified Gram-Schmidt against the whole basis
            let mut a_jj = ZERO;
            for (i, q) in basis.iter().enumerate() {
                let c: Complex64 = q.iter().zip(&p).map(|(x, y)| x.conj() * y).sum();
                if i == j {
                    a_jj = c;
                }
                p.iter_mut().zip(q).for_each(|(y, x)| *y -= c * x);
            }
            alpha.push(a_jj.re);
            let b = norm(&p);
            offdiag.push(b);
            if b <= 1e-13 * beta.max(1.0) * (1.0 + a_jj.norm()) {
                happy = true;
                break;
            }
            basis.push(p.iter().map(|x| x / b).collect());
        }
        let k = alpha.len();
        let tri = |tau: f64| -> CMat {
            let mut t = CMat::zeros(k, k);
            for i in 0..k {
                t[(i, i)] = Complex64::new(alpha[i], 0.0);
                if i + 1 < k {
                    t[(i + 1, i)] = Complex64::new(offdiag[i], 0.0);
                    t[(i, i + 1)] = Complex64::new(offdiag[i], 0.0);
                }
            }
            (t * (dir * tau)).exp()
        };
        loop {
            tau = tau.min(total - done);
            let e = tri(tau);
            let coeffs = e.column(0);
            let err = if happy {
                0.0
            } else {
                beta * offdiag[k - 1] * coeffs[k - 1].norm()
            };
            if err <= KRYLOV_TOL * beta {
                let mut next = vec![ZERO; n];
                for (i, q) in basis.iter().take(k).enumerate() {
                    let c = coeffs[i] * beta;
                    next.iter_mut().zip(q).for_each(|(y, x)| *y += c * x);
                }
                w = next;
                done += tau;
                if !happy {
                    tau *= 1.5;
                }
                break;
            }
            tau *= 0.5;
            if tau < 1e-12 * total.max(1.0) {
                return Err(LabError::PropagationToleranceFailure(format!(
                    "Krylov step shrank below {tau:e} at t = {done}"
                )));
            }
        }
    }
    Ok(w)
}

/// Applies 𝓦(ψ) = e^{iΦ(ψ)} on the truncated single-factor space by a
/// Krylov exponential of Φ(ψ) = Σ (ψ_k a_k† + ψ̄_k a_k).
pub fn apply_weyl(state: &FockState, psi: &[Complex64]) -> Result<FockState> {
    let basis = state.basis.clone();
    let nb = basis.len();
    let k = basis.modes();
    if psi.len() != k {
        return Err(LabError::DimensionMismatch(
            "profile length differs from mode count".into(),
        ));
    }
    let n_max = basis.n_max();
    let d_s = state.d_s;
    let apply_phi = |x: &[Complex64], y: &mut [Complex64]| {
        y.iter_mut().for_each(|v| *v = ZERO);
        let mut tmp = vec![0u8; k];
        for s in 0..d_s {
            for b in 0..nb {
                let xv = x[s * nb + b];
                if xv == ZERO {
                    continue;
                }
                tmp.copy_from_slice(basis.occupation(b));
                for m in 0..k {
                    if basis.total(b) < n_max {
                        tmp[m] += 1;
                        let r = basis.rank(&tmp);
                        y[s * nb + r] += psi[m] * (tmp[m] as f64).sqrt() * xv;
                        tmp[m] -= 1;
                    }
                    if tmp[m] > 0 {
                        let nm = tmp[m] as f64;
                        tmp[m] -= 1;
                        let r = basis.rank(&tmp);
                        y[s * nb + r] += psi[m].conj() * nm.sqrt() * xv;
                        tmp[m] += 1;
                    }
                }
            }
        }
    };
    // e^{iΦ} = e^{−i(−1)Φ}
    let amplitudes = krylov_expmv(apply_phi, &state.amplitudes, Complex64::new(0.0, 1.0))?;
    Ok(FockState {
        amplitudes,
        basis,
        d_s,
    })
}
