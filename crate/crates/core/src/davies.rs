//! Davies/Lindblad generator of the weak-coupling limit.
//!
//! Two constructions are provided: the direct Lindblad form built from the
//! jump operators D_ε, rates ĥ and the Lamb shift, and a time-domain route
//! that integrates the second-order kernel F_s projected onto the spectral
//! subspaces of ad(H_S). Superoperators act on column-major vectorized
//! density matrices (see [`crate::linalg`]).

use std::collections::HashMap;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::correlations::{correlation_h, fourier_jhat, CorrelationFunction};
use crate::error::{LabError, Result};
use crate::io;
use crate::linalg::{self, CMat, CVec, ONE, ZERO};
use crate::model::{SpinBosonModel, SystemSpec};
use crate::quad;

/// Fermi Golden Rule rates j(e, e') = |⟨e|D|e'⟩|² ĥ(e − e'), per λ².
#[derive(Debug, Clone, PartialEq)]
pub struct JumpRates {
    rates: DMatrix<f64>,
}

impl JumpRates {
    /// Rate from level `from` to level `to`.
    pub fn get(&self, from: usize, to: usize) -> f64 {
        self.rates[(from, to)]
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.rates
    }

    pub fn dim(&self) -> usize {
        self.rates.nrows()
    }

    /// Nonzero entries as ((e, e'), rate).
    pub fn entries(&self) -> Vec<((usize, usize), f64)> {
        let d = self.dim();
        let mut out = Vec::new();
        for e in 0..d {
            for f in 0..d {
                if e != f && self.rates[(e, f)] > 0.0 {
                    out.push(((e, f), self.rates[(e, f)]));
                }
            }
        }
        out
    }

    /// 𝓜 assembled from the rates: 𝓜[e][e'] = e^κ j(e', e) − δ_{ee'} Σ_f j(e, f).
    pub fn markov_matrix(&self, kappa: Complex64) -> CMat {
        let d = self.dim();
        let gain = kappa.exp();
        CMat::from_fn(d, d, |e, f| {
            if e == f {
                let out: f64 = (0..d).filter(|&g| g != e).map(|g| self.rates[(e, g)]).sum();
                Complex64::new(-out, 0.0)
            } else {
                gain * self.rates[(f, e)]
            }
        })
    }
}

pub fn jump_rates(model: &SpinBosonModel) -> JumpRates {
    let d = model.dim();
    let sys = model.system();
    let dt = sys.to_eigenbasis(model.coupling().matrix());
    let ev = sys.eigenvalues();
    let rates = DMatrix::from_fn(d, d, |e, f| {
        if e == f {
            return 0.0;
        }
        let r = dt[(e, f)].norm_sqr() * fourier_jhat(model.density(), ev[e] - ev[f]);
        if r > -1e-14 {
            r.max(0.0)
        } else {
            r
        }
    });
    JumpRates { rates }
}

/// Davies generator M with its Lamb shift and diagonal block 𝓜.
#[derive(Debug, Clone)]
pub struct LindbladGenerator {
    superoperator: CMat,
    lamb_shift: CMat,
    diagonal_block: CMat,
    kappa: Complex64,
    system: SystemSpec,
}

impl LindbladGenerator {
    fn new(superoperator: CMat, lamb_shift: CMat, kappa: Complex64, system: SystemSpec) -> Self {
        let diagonal_block = extract_diagonal_block(&superoperator, &system);
        Self {
            superoperator,
            lamb_shift,
            diagonal_block,
            kappa,
            system,
        }
    }

    pub fn superoperator(&self) -> &CMat {
        &self.superoperator
    }

    pub fn lamb_shift(&self) -> &CMat {
        &self.lamb_shift
    }

    /// 𝓜[e][e'] = Tr(P_e M(P_{e'})), levels in ascending energy order.
    /// Complex because κ may be.
    pub fn diagonal_block(&self) -> &CMat {
        &self.diagonal_block
    }

    /// 𝓜 with levels listed from the highest energy down; lower-triangular
    /// at κ = 0 since probability only flows downward.
    pub fn diagonal_block_descending(&self) -> CMat {
        let d = self.dim();
        CMat::from_fn(d, d, |i, j| self.diagonal_block[(d - 1 - i, d - 1 - j)])
    }

    pub fn kappa(&self) -> Complex64 {
        self.kappa
    }

    pub fn system(&self) -> &SystemSpec {
        &self.system
    }

    pub fn dim(&self) -> usize {
        self.system.dim()
    }

    /// M applied to a density matrix.
    pub fn apply(&self, rho: &CMat) -> CMat {
        linalg::unvectorize(&(&self.superoperator * linalg::vectorize(rho)), self.dim())
    }

    pub fn to_dump(&self) -> GeneratorDump {
        let spec = spectral_analysis(self);
        let (eigenvalues, gap) = match &spec {
            Ok(r) => (r.eigenvalues.clone(), r.gap),
            Err(_) => (eigenvalues_sorted(&self.superoperator), f64::NAN),
        };
        GeneratorDump {
            dim: self.dim(),
            kappa: [self.kappa.re, self.kappa.im],
            system_eigenvalues: self.system.eigenvalues().to_vec(),
            eigenbasis: io::matrix_to_pairs(self.system.eigenbasis()),
            superoperator: io::matrix_to_pairs(&self.superoperator),
            lamb_shift: io::matrix_to_pairs(&self.lamb_shift),
            diagonal_block: io::matrix_to_pairs(&self.diagonal_block),
            eigenvalues: eigenvalues.iter().map(|z| [z.re, z.im]).collect(),
            gap,
        }
    }

    pub fn from_dump(dump: &GeneratorDump) -> Result<Self> {
        let system = SystemSpec::new(
            dump.system_eigenvalues.clone(),
            Some(io::matrix_from_pairs(&dump.eigenbasis)?),
            crate::model::DEFAULT_DEGENERACY_TOL,
        )?;
        let superoperator = io::matrix_from_pairs(&dump.superoperator)?;
        let d = system.dim();
        if superoperator.nrows() != d * d || superoperator.ncols() != d * d {
            return Err(LabError::DimensionMismatch(format!(
                "superoperator is {}x{}, expected {}x{}",
                superoperator.nrows(),
                superoperator.ncols(),
                d * d,
                d * d
            )));
        }
        Ok(Self::new(
            superoperator,
            io::matrix_from_pairs(&dump.lamb_shift)?,
            Complex64::new(dump.kappa[0], dump.kappa[1]),
            system,
        ))
    }
}

/// JSON form of a generator. Matrices are row-major lists of [re, im].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratorDump {
    pub dim: usize,
    pub kappa: [f64; 2],
    pub system_eigenvalues: Vec<f64>,
    pub eigenbasis: Vec<Vec<[f64; 2]>>,
    pub superoperator: Vec<Vec<[f64; 2]>>,
    pub lamb_shift: Vec<Vec<[f64; 2]>>,
    pub diagonal_block: Vec<Vec<[f64; 2]>>,
    pub eigenvalues: Vec<[f64; 2]>,
    #[serde(with = "crate::io::serde_extended_f64")]
    pub gap: f64,
}

fn extract_diagonal_block(m: &CMat, system: &SystemSpec) -> CMat {
    let d = system.dim();
    let projectors: Vec<CMat> = (0..d).map(|k| system.projector(k)).collect();
    let mut out = CMat::zeros(d, d);
    for f in 0..d {
        let image = linalg::unvectorize(&(m * linalg::vectorize(&projectors[f])), d);
        for e in 0..d {
            out[(e, f)] = linalg::trace(&(&projectors[e] * &image));
        }
    }
    out
}

/// S(x) = Im ∫₀^∞ e^{isx} h(s) ds.
fn lamb_coefficient(h: &CorrelationFunction, x: f64) -> Result<f64> {
    Ok(h.half_line(x, 0.0)?.im)
}

/// M ρ = −i[H_LS, ρ] + Σ_{ε<0} ĥ(−ε)(e^κ D_ε ρ D_ε† − ½{D_ε†D_ε, ρ}),
/// H_LS = Σ_ε S(−ε) D_ε†D_ε.
pub fn build_generator_direct(model: &SpinBosonModel) -> Result<LindbladGenerator> {
    let d = model.dim();
    let h = correlation_h(model.density())?;
    let bohr = model.bohr();
    let gain = model.kappa().exp();
    let mut lamb = CMat::zeros(d, d);
    let mut dissipator = CMat::zeros(d * d, d * d);
    for (k, &eps) in bohr.frequencies().iter().enumerate() {
        let de = model.d_epsilon(k);
        if linalg::max_abs(&de) == 0.0 {
            continue;
        }
        let dd = de.adjoint() * &de;
        let s = lamb_coefficient(&h, -eps)?;
        lamb += &dd * linalg::c(s);
        if eps < 0.0 {
            let rate = fourier_jhat(model.density(), -eps);
            let anti = linalg::left(&dd) + linalg::right(&dd);
            dissipator += (linalg::sandwich(&de, &de.adjoint()) * gain - anti * linalg::c(0.5))
                * linalg::c(rate);
        }
    }
    lamb = (&lamb + lamb.adjoint()) * linalg::c(0.5);
    let superop = linalg::commutator(&lamb) * Complex64::new(0.0, -1.0) + dissipator;
    Ok(LindbladGenerator::new(
        superop,
        lamb,
        model.kappa(),
        model.system().clone(),
    ))
}

/// M = Σ_ε ∫₀^∞ e^{isε} P_ε F_s P_ε ds with
/// F_s = e^κ h(s) R(D)E_sL(D) + e^κ h(−s) L(D)E_sR(D) − h(s) L(D)E_sL(D) − h(−s) R(D)E_sR(D),
/// E_s = e^{−is ad(H_S)}. The integral over [0, s_max] uses Gauss-Legendre
/// panels; beyond s_max an analytic tail is added for the closed-form
/// density family, otherwise the tail must be below 1e-8.
pub fn build_generator_quadrature(model: &SpinBosonModel, s_max: f64) -> Result<LindbladGenerator> {
    if !(s_max > 0.0) {
        return Err(LabError::Config(format!(
            "s_max must be positive, got {s_max}"
        )));
    }
    let d = model.dim();
    let n = d * d;
    let sys = model.system();
    let ev = sys.eigenvalues();
    let h = correlation_h(model.density())?;
    let gain = model.kappa().exp();
    let dt = sys.to_eigenbasis(model.coupling().matrix());
    let ld = linalg::left(&dt);
    let rd = linalg::right(&dt);
    let bohr = model.bohr();
    // index (i, j) of X_ij in the column-major vectorization is i + d j
    let omega: Vec<f64> = (0..n).map(|idx| ev[idx % d] - ev[idx / d]).collect();
    let masks: Vec<Vec<bool>> = (0..bohr.len())
        .map(|k| {
            let mut m = vec![false; n];
            for &(e, f) in bohr.pairs(k) {
                m[e + d * f] = true;
            }
            m
        })
        .collect();
    let project = |m: &CMat, mask: &[bool]| {
        CMat::from_fn(
            n,
            n,
            |i, j| if mask[i] && mask[j] { m[(i, j)] } else { ZERO },
        )
    };

    let max_freq = omega.iter().fold(0.0f64, |a, &w| a.max(w.abs())) * 2.0;
    let mut width = 0.5 * h.time_scale();
    if max_freq > 0.0 {
        width = width.min(std::f64::consts::PI / max_freq);
    }
    let panels = (s_max / width).ceil() as usize;
    let pw = s_max / panels as f64;
    let (x, w) = quad::gl16();

    let mut m_eig = CMat::zeros(n, n);
    if !h.is_zero() && linalg::max_abs(&dt) > 0.0 {
        let mut acc: Vec<CMat> = vec![CMat::zeros(n, n); bohr.len()];
        for p in 0..panels {
            let mid = (p as f64 + 0.5) * pw;
            for (xi, wi) in x.iter().zip(w) {
                let s = mid + 0.5 * pw * xi;
                let weight = wi * 0.5 * pw;
                let hs = h.eval(s);
                let hms = hs.conj();
                let es = CMat::from_diagonal(&CVec::from_iterator(
                    n,
                    omega.iter().map(|&o| Complex64::from_polar(1.0, -s * o)),
                ));
                let f_s = (&rd * &es * &ld) * (gain * hs) + (&ld * &es * &rd) * (gain * hms)
                    - (&ld * &es * &ld) * hs
                    - (&rd * &es * &rd) * hms;
                for (k, &eps) in bohr.frequencies().iter().enumerate() {
                    acc[k] += &f_s * (Complex64::from_polar(weight, s * eps));
                }
            }
        }
        // tail beyond s_max, assembled from scalar transforms
        let mut cache: HashMap<u64, Complex64> = HashMap::new();
        let mut tail = |y: f64| -> Result<Complex64> {
            if let Some(v) = cache.get(&y.to_bits()) {
                return Ok(*v);
            }
            let v = h.half_line(y, s_max)?;
            cache.insert(y.to_bits(), v);
            Ok(v)
        };
        for (k, &eps) in bohr.frequencies().iter().enumerate() {
            let mut t1 = CVec::zeros(n);
            let mut t2 = CVec::zeros(n);
            for idx in 0..n {
                let y = eps - omega[idx];
                t1[idx] = tail(y)?;
                t2[idx] = tail(-y)?.conj();
            }
            let t1 = CMat::from_diagonal(&t1);
            let t2 = CMat::from_diagonal(&t2);
            let tail_k = (&rd * &t1 * &ld) * gain + (&ld * &t2 * &rd) * gain
                - &ld * &t1 * &ld
                - &rd * &t2 * &rd;
            m_eig += project(&(&acc[k] + tail_k), &masks[k]);
        }
    }
    // back to the original basis: vec(U X U†) = (conj(U) ⊗ U) vec X
    let u = sys.eigenbasis();
    let s_op = linalg::kron(&u.map(|z| z.conj()), u);
    let superop = &s_op * m_eig * s_op.adjoint();

    let lamb = lamb_from_superoperator(&superop, sys);
    Ok(LindbladGenerator::new(
        superop,
        lamb,
        model.kappa(),
        sys.clone(),
    ))
}

/// Reads H_LS off the superoperator. In the energy basis the coefficient of
/// |e⟩⟨0| in M(|e⟩⟨0|) is −i(H_ee − H_00) − ½(Γ_e + Γ_0), so only level
/// differences are determined; the ground-level shift is set to zero.
fn lamb_from_superoperator(m: &CMat, sys: &SystemSpec) -> CMat {
    let d = sys.dim();
    let u = sys.eigenbasis();
    let s_op = linalg::kron(&u.map(|z| z.conj()), u);
    let m_eig = s_op.adjoint() * m * &s_op;
    let mut diag = CVec::zeros(d);
    for e in 1..d {
        let val = m_eig[(e, e)];
        diag[e] = Complex64::new(-val.im, 0.0);
    }
    sys.from_eigenbasis(&CMat::from_diagonal(&diag))
}

/// Spectral data of a generator.
#[derive(Debug, Clone)]
pub struct SpectralReport {
    /// Sorted by decreasing real part.
    pub eigenvalues: Vec<Complex64>,
    /// Re μ₀ − max over the other eigenvalues of Re μ; +∞ when d_S = 1.
    pub gap: f64,
    /// Leading eigenvalue μ₀ (0 at κ = 0).
    pub leading: Complex64,
    /// Right eigenvector of μ₀ as a matrix, normalized to trace 1 when
    /// the trace is nonzero; the invariant state at κ = 0.
    pub stationary: CMat,
    /// Left eigenvector η̃ of μ₀, normalized so that ⟨η̃, η⟩ = 1.
    pub left: CMat,
    /// μ₀ is simple and equals 0 within the clustering tolerance.
    pub simple_zero: bool,
    /// g_𝓜 = min over excited levels of their total outgoing rate.
    pub markov_gap: f64,
}

fn eigenvalues_sorted(m: &CMat) -> Vec<Complex64> {
    let schur = m.clone().schur();
    let (_, t) = schur.unpack();
    let mut ev: Vec<Complex64> = t.diagonal().iter().copied().collect();
    ev.sort_by(|a, b| {
        b.re.partial_cmp(&a.re)
            .unwrap()
            .then(b.im.partial_cmp(&a.im).unwrap())
    });
    ev
}

fn null_vector(m: &CMat) -> CVec {
    let svd = m.clone().svd(false, true);
    let v_t = svd.v_t.expect("requested V^T");
    let (k, _) = svd
        .singular_values
        .iter()
        .enumerate()
        .fold(
            (0, f64::INFINITY),
            |acc, (i, &s)| if s < acc.1 { (i, s) } else { acc },
        );
    v_t.row(k).adjoint()
}

pub fn spectral_analysis(gen: &LindbladGenerator) -> Result<SpectralReport> {
    let m = gen.superoperator();
    let d = gen.dim();
    let n = d * d;
    let eigenvalues = eigenvalues_sorted(m);
    let diameter = eigenvalues
        .iter()
        .flat_map(|a| eigenvalues.iter().map(move |b| (a - b).norm()))
        .fold(0.0, f64::max);
    let tol = 1e-9 * diameter.max(1.0);
    let leading = eigenvalues[0];
    let multiplicity = eigenvalues
        .iter()
        .filter(|z| (*z - leading).norm() <= tol)
        .count();
    if multiplicity > 1 {
        return Err(LabError::DegenerateLeadingEigenvalue {
            value: format!("{leading}"),
            multiplicity,
            tol,
        });
    }
    let gap = if n == 1 {
        f64::INFINITY
    } else {
        leading.re
            - eigenvalues[1..]
                .iter()
                .map(|z| z.re)
                .fold(f64::NEG_INFINITY, f64::max)
    };
    let shifted = m - CMat::identity(n, n) * leading;
    let right = linalg::unvectorize(&null_vector(&shifted), d);
    let tr = linalg::trace(&right);
    let stationary = if tr.norm() > 1e-12 {
        right * (ONE / tr)
    } else {
        right
    };
    let left_vec = null_vector(&shifted.adjoint());
    let mut left = linalg::unvectorize(&left_vec, d);
    // ⟨η̃, η⟩ = Tr(η̃† η)
    let pairing = linalg::trace(&(left.adjoint() * &stationary));
    if pairing.norm() > 1e-14 {
        left *= (ONE / pairing).conj();
    }
    let rates_out = |e: usize| -> f64 {
        // −𝓜[e][e] is the total outgoing rate of level e at any κ
        -gen.diagonal_block()[(e, e)].re
    };
    let markov_gap = if d == 1 {
        f64::INFINITY
    } else {
        (1..d).map(rates_out).fold(f64::INFINITY, f64::min)
    };
    Ok(SpectralReport {
        simple_zero: leading.norm() <= tol,
        eigenvalues,
        gap,
        leading,
        stationary,
        left,
        markov_gap,
    })
}

/// Superoperator of ad(H_S) = [H_S, ·].
pub fn liouvillian(system: &SystemSpec) -> CMat {
    linalg::commutator(&system.hamiltonian())
}

/// e^{−it ad(H_S) + λ² t M} ρ₀.
pub fn evolve_semigroup(
    gen: &LindbladGenerator,
    system: &SystemSpec,
    rho0: &CMat,
    lambda: f64,
    t: f64,
) -> CMat {
    if t == 0.0 {
        return rho0.clone();
    }
    let d = system.dim();
    let generator = liouvillian(system) * Complex64::new(0.0, -t)
        + gen.superoperator() * linalg::c(lambda * lambda * t);
    let prop = linalg::expm(&generator);
    linalg::unvectorize(&(prop * linalg::vectorize(rho0)), d)
}

/// The full semigroup propagator e^{−it ad(H_S) + λ² t M} as a superoperator.
pub fn semigroup_propagator(
    gen: &LindbladGenerator,
    system: &SystemSpec,
    lambda: f64,
    t: f64,
) -> CMat {
    let n = system.dim() * system.dim();
    if t == 0.0 {
        return CMat::identity(n, n);
    }
    let generator = liouvillian(system) * Complex64::new(0.0, -t)
        + gen.superoperator() * linalg::c(lambda * lambda * t);
    linalg::expm(&generator)
}

/// Leading (pairwise-adjacent pairing) Dyson series through order m_max:
/// Q⁰_t = E_t and Q^m_t = λ² ∫₀^t dv ∫₀^v du E_{t−v} F_{v−u} Q^{m−1}_u,
/// on a uniform grid with trapezoid weights. Fails when the λ^{2 m_max}
/// term still has an entry above 1e-6.
pub fn dyson_leading_propagator(model: &SpinBosonModel, t: f64, m_max: usize) -> Result<CMat> {
    let sys = model.system();
    let d = model.dim();
    let n = d * d;
    let ad = liouvillian(sys);
    let free = |s: f64| linalg::expm(&(&ad * Complex64::new(0.0, -s)));
    let lambda = model.lambda();
    if m_max == 0 || lambda == 0.0 || t == 0.0 {
        return Ok(free(t));
    }
    let h = correlation_h(model.density())?;
    let steps = ((t / 0.05).ceil() as usize).clamp(16, 4000);
    let dt = t / steps as f64;
    let gain = model.kappa().exp();
    let dm = model.coupling().matrix();
    let ld = linalg::left(dm);
    let rd = linalg::right(dm);
    let e_step = free(dt);
    let mut e_grid = Vec::with_capacity(steps + 1);
    e_grid.push(CMat::identity(n, n));
    for k in 1..=steps {
        let next = &e_step * &e_grid[k - 1];
        e_grid.push(next);
    }
    let f_grid: Vec<CMat> = (0..=steps)
        .map(|k| {
            let s = k as f64 * dt;
            let hs = h.eval(s);
            let hms = hs.conj();
            let es = &e_grid[k];
            (&rd * es * &ld) * (gain * hs) + (&ld * es * &rd) * (gain * hms)
                - (&ld * es * &ld) * hs
                - (&rd * es * &rd) * hms
        })
        .collect();
    let trap = |k: usize, last: usize| if k == 0 || k == last { 0.5 * dt } else { dt };

    let mut total = e_grid[steps].clone();
    let mut prev: Vec<CMat> = e_grid.clone();
    let mut last_norm = 0.0;
    for _ in 1..=m_max {
        // inner(v_j) = ∫₀^{v_j} F_{v_j − u} Q^{m−1}(u) du
        let inner: Vec<CMat> = (0..=steps)
            .map(|j| {
                let mut acc = CMat::zeros(n, n);
                if j > 0 {
                    for k in 0..=j {
                        acc += &f_grid[j - k] * &prev[k] * linalg::c(trap(k, j));
                    }
                }
                acc
            })
            .collect();
        let next: Vec<CMat> = (0..=steps)
            .map(|i| {
                let mut acc = CMat::zeros(n, n);
                if i > 0 {
                    for j in 0..=i {
                        acc += &e_grid[i - j] * &inner[j] * linalg::c(trap(j, i));
                    }
                }
                acc * linalg::c(lambda * lambda)
            })
            .collect();
        last_norm = linalg::max_abs(&next[steps]);
        total += &next[steps];
        prev = next;
    }
    if last_norm > 1e-6 {
        return Err(LabError::SeriesNotConverged(last_norm));
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{build_model, CouplingMatrix, SpectralDensity};

    fn two_level(kappa: f64) -> SpinBosonModel {
        build_model(
            SystemSpec::diagonal(vec![0.0, 1.0]).unwrap(),
            CouplingMatrix::pauli_x(),
            SpectralDensity::analytic(1.0, 1.0, 1.0).unwrap(),
            0.2,
            Complex64::new(kappa, 0.0),
            0.9,
        )
        .unwrap()
    }

    #[test]
    fn two_level_rates() {
        let r = jump_rates(&two_level(0.0));
        let j = 2.0 * std::f64::consts::PI * (-1.0f64).exp();
        assert!((r.get(1, 0) - j).abs() < 1e-14);
        assert_eq!(r.get(0, 1), 0.0);
    }

    #[test]
    fn two_level_diagonal_block() {
        let g = build_generator_direct(&two_level(0.0)).unwrap();
        let j = 2.0 * std::f64::consts::PI * (-1.0f64).exp();
        let m = g.diagonal_block();
        assert!((m[(0, 0)]).norm() < 1e-14);
        assert!((m[(0, 1)] - linalg::c(j)).norm() < 1e-13);
        assert!((m[(1, 0)]).norm() < 1e-14);
        assert!((m[(1, 1)] + linalg::c(j)).norm() < 1e-13);
    }

    #[test]
    fn zero_coupling_gives_zero_generator() {
        let m = two_level(0.0)
            .with_coupling(CouplingMatrix::zero(2))
            .unwrap();
        let g = build_generator_direct(&m).unwrap();
        assert_eq!(linalg::max_abs(g.superoperator()), 0.0);
        let q = build_generator_quadrature(&m, 50.0).unwrap();
        assert_eq!(linalg::max_abs(q.superoperator()), 0.0);
    }

    #[test]
    fn routes_agree_two_level() {
        for kappa in [0.0, 0.1] {
            let m = two_level(kappa);
            let a = build_generator_direct(&m).unwrap();
            let b = build_generator_quadrature(&m, 200.0).unwrap();
            let diff = linalg::max_abs(&(a.superoperator() - b.superoperator()));
            assert!(diff < 1e-6, "kappa {kappa}: {diff:e}");
        }
    }

    #[test]
    fn gain_weighted_by_kappa() {
        let g = build_generator_direct(&two_level(0.1)).unwrap();
        let j = 2.0 * std::f64::consts::PI * (-1.0f64).exp();
        let m = g.diagonal_block();
        assert!((m[(0, 1)] - linalg::c(0.1f64.exp() * j)).norm() < 1e-12);
        assert!((m[(1, 1)] + linalg::c(j)).norm() < 1e-12);
    }

    #[test]
    fn spectrum_of_two_level() {
        let g = build_generator_direct(&two_level(0.0)).unwrap();
        let r = spectral_analysis(&g).unwrap();
        let j = 2.0 * std::f64::consts::PI * (-1.0f64).exp();
        assert!(r.simple_zero);
        assert!(
            (r.stationary.clone() - CMat::from_row_slice(2, 2, &[ONE, ZERO, ZERO, ZERO])).norm()
                < 1e-10
        );
        assert!((r.eigenvalues[3].re + j).abs() < 1e-10);
        assert!((r.eigenvalues[1].re + 0.5 * j).abs() < 1e-10);
        assert!((r.eigenvalues[1].im + r.eigenvalues[2].im).abs() < 1e-10);
        assert!((r.gap - 0.5 * j).abs() < 1e-10);
    }

    #[test]
    fn diagonal_coupling_is_degenerate() {
        let m = two_level(0.0)
            .with_coupling(
                CouplingMatrix::new(CMat::from_row_slice(2, 2, &[ONE, ZERO, ZERO, -ONE])).unwrap(),
            )
            .unwrap();
        let err = spectral_analysis(&build_generator_direct(&m).unwrap()).unwrap_err();
        assert!(matches!(err, LabError::DegenerateLeadingEigenvalue { .. }));
    }

    #[test]
    fn scalar_system_gap_is_infinite() {
        let m = build_model(
            SystemSpec::diagonal(vec![0.0]).unwrap(),
            CouplingMatrix::new(CMat::from_element(1, 1, ONE)).unwrap(),
            SpectralDensity::analytic(2.0, 1.0, 1.0).unwrap(),
            0.3,
            ZERO,
            1.5,
        )
        .unwrap();
        let r = spectral_analysis(&build_generator_direct(&m).unwrap()).unwrap();
        assert_eq!(r.eigenvalues.len(), 1);
        assert!(r.eigenvalues[0].norm() < 1e-12);
        assert_eq!(r.gap, f64::INFINITY);
    }

    #[test]
    fn excited_population_decays_exponentially() {
        let m = two_level(0.0);
        let g = build_generator_direct(&m).unwrap();
        let j = jump_rates(&m).get(1, 0);
        let p1 = m.system().projector(1);
        assert_eq!(evolve_semigroup(&g, m.system(), &p1, 0.2, 0.0), p1);
        for t in [1.0, 10.0, 40.0] {
            let rho = evolve_semigroup(&g, m.system(), &p1, 0.2, t);
            assert!((rho[(1, 1)].re - (-0.04 * j * t).exp()).abs() < 1e-10);
        }
        let p0 = m.system().projector(0);
        let rho = evolve_semigroup(&g, m.system(), &p0, 0.2, 25.0);
        assert!((rho - p0).norm() < 1e-12);
    }

    #[test]
    fn dyson_trivial_cases() {
        let m = two_level(0.0);
        let free = linalg::expm(&(liouvillian(m.system()) * Complex64::new(0.0, -3.0)));
        let q0 = dyson_leading_propagator(&m, 3.0, 0).unwrap();
        assert_eq!(q0, free);
        let q = dyson_leading_propagator(&m.with_lambda(0.0), 3.0, 4).unwrap();
        assert_eq!(q, free);
    }

    #[test]
    fn dyson_reports_divergence_at_moderate_coupling() {
        // λ²t = 0.9: the order-4 term is still O(0.1)
        let m = two_level(0.0).with_lambda(0.3);
        assert!(matches!(
            dyson_leading_propagator(&m, 10.0, 4),
            Err(LabError::SeriesNotConverged(_))
        ));
    }

    #[test]
    fn dyson_matches_semigroup_at_weak_coupling() {
        // λ² t small: the leading series should track the Markov semigroup
        let m = two_level(0.0).with_lambda(0.02);
        let t = 20.0;
        let q = dyson_leading_propagator(&m, t, 3).unwrap();
        let g = build_generator_direct(&m).unwrap();
        let sg = semigroup_propagator(&g, m.system(), 0.02, t);
        assert!(linalg::max_abs(&(q - sg)) < 5e-3);
    }
}
