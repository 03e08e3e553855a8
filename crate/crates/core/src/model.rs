//! Spin-boson model data: system Hamiltonian, coupling operator, field
//! spectral density and coupling constants.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;
use std::sync::Arc;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::io;
use crate::linalg::{self, CMat, CVec};

/// Default clustering tolerance for eigenvalues and Bohr frequencies.
pub const DEFAULT_DEGENERACY_TOL: f64 = 1e-9;
/// Rates at or below this value do not count as transitions.
pub const DEFAULT_RATE_FLOOR: f64 = 1e-12;
/// Hard cutoff of the analytic family in units of omega_c.
pub const ANALYTIC_CUTOFF_FACTOR: f64 = 40.0;

/// Finite-level system Hamiltonian given by its spectrum and eigenbasis.
#[derive(Debug, Clone, PartialEq)]
pub struct SystemSpec {
    eigenvalues: Vec<f64>,
    eigenbasis: CMat,
    degeneracy_tol: f64,
}

impl SystemSpec {
    pub fn new(
        eigenvalues: Vec<f64>,
        eigenbasis: Option<CMat>,
        degeneracy_tol: f64,
    ) -> Result<Self> {
        let d = eigenvalues.len();
        if d == 0 {
            return Err(LabError::DimensionMismatch("empty system spectrum".into()));
        }
        if degeneracy_tol < 0.0 || !degeneracy_tol.is_finite() {
            return Err(LabError::Config(format!(
                "bad degeneracy_tol {degeneracy_tol}"
            )));
        }
        for (k, w) in eigenvalues.windows(2).enumerate() {
            if !(w[1] >= w[0]) {
                return Err(LabError::UnsortedSpectrum(k + 1));
            }
            if w[1] - w[0] <= degeneracy_tol {
                return Err(LabError::DegenerateSpectrum(w[0], w[1], degeneracy_tol));
            }
        }
        let eigenbasis = eigenbasis.unwrap_or_else(|| linalg::identity(d));
        if eigenbasis.nrows() != d || eigenbasis.ncols() != d {
            return Err(LabError::DimensionMismatch(format!(
                "eigenbasis is {}x{}, spectrum has {d} levels",
                eigenbasis.nrows(),
                eigenbasis.ncols()
            )));
        }
        let defect = linalg::max_abs(&(eigenbasis.adjoint() * &eigenbasis - linalg::identity(d)));
        if defect > 1e-12 {
            return Err(LabError::NonUnitaryBasis(defect));
        }
        Ok(Self {
            eigenvalues,
            eigenbasis,
            degeneracy_tol,
        })
    }

    /// System with the given energies in its own eigenbasis.
    pub fn diagonal(eigenvalues: Vec<f64>) -> Result<Self> {
        Self::new(eigenvalues, None, DEFAULT_DEGENERACY_TOL)
    }

    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn eigenbasis(&self) -> &CMat {
        &self.eigenbasis
    }

    pub fn degeneracy_tol(&self) -> f64 {
        self.degeneracy_tol
    }

    pub fn ground_energy(&self) -> f64 {
        self.eigenvalues[0]
    }

    pub fn eigenvector(&self, k: usize) -> CVec {
        self.eigenbasis.column(k).into_owned()
    }

    /// Spectral projector P_e onto level k.
    pub fn projector(&self, k: usize) -> CMat {
        let v = self.eigenvector(k);
        linalg::outer(&v, &v)
    }

    pub fn hamiltonian(&self) -> CMat {
        let diag = CMat::from_diagonal(&CVec::from_iterator(
            self.dim(),
            self.eigenvalues.iter().map(|&e| linalg::c(e)),
        ));
        &self.eigenbasis * diag * self.eigenbasis.adjoint()
    }

    /// e^{-i t H_S}
    pub fn propagator(&self, t: f64) -> CMat {
        let diag = CMat::from_diagonal(&CVec::from_iterator(
            self.dim(),
            self.eigenvalues
                .iter()
                .map(|&e| Complex64::from_polar(1.0, -e * t)),
        ));
        &self.eigenbasis * diag * self.eigenbasis.adjoint()
    }

    /// Expresses an operator in the H_S eigenbasis.
    pub fn to_eigenbasis(&self, op: &CMat) -> CMat {
        self.eigenbasis.adjoint() * op * &self.eigenbasis
    }

    pub fn from_eigenbasis(&self, op: &CMat) -> CMat {
        &self.eigenbasis * op * self.eigenbasis.adjoint()
    }
}

/// Hermitian coupling operator D.
#[derive(Debug, Clone, PartialEq)]
pub struct CouplingMatrix(CMat);

impl CouplingMatrix {
    pub fn new(entries: CMat) -> Result<Self> {
        if entries.nrows() != entries.ncols() {
            return Err(LabError::DimensionMismatch(
                "coupling matrix not square".into(),
            ));
        }
        let defect = linalg::hermiticity_defect(&entries);
        if defect > 1e-12 {
            return Err(LabError::NonHermitianCoupling(defect));
        }
        Ok(Self(entries))
    }

    pub fn pauli_x() -> Self {
        Self(CMat::from_row_slice(
            2,
            2,
            &[linalg::ZERO, linalg::ONE, linalg::ONE, linalg::ZERO],
        ))
    }

    pub fn zero(d: usize) -> Self {
        Self(CMat::zeros(d, d))
    }

    pub fn matrix(&self) -> &CMat {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }
}

/// User-supplied density J(ω).
#[derive(Clone)]
pub struct DensityFn {
    label: String,
    f: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
}

impl DensityFn {
    pub fn new(label: impl Into<String>, f: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        Self {
            label: label.into(),
            f: Arc::new(f),
        }
    }

    pub fn label(&self) -> &str {
        &self.label
    }
}

impl fmt::Debug for DensityFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "DensityFn({})", self.label)
    }
}

#[derive(Debug, Clone)]
pub enum DensityKind {
    /// amplitude · ω^gamma · exp(−ω/omega_c)
    Analytic {
        gamma: f64,
        omega_c: f64,
        amplitude: f64,
    },
    /// Piecewise-linear interpolation of (grid, values); zero outside the grid.
    Tabulated {
        grid: Vec<f64>,
        values: Vec<f64>,
    },
    Callback(DensityFn),
}

/// Radial spectral density J(ω) with a hard cutoff ω_max.
///
/// J is the angular integral of |φ|² at fixed |q| = ω, so that the field
/// correlation function is h(t) = ∫ J(ω) e^{−iωt} dω.
#[derive(Debug, Clone)]
pub struct SpectralDensity {
    kind: DensityKind,
    omega_max: f64,
}

impl SpectralDensity {
    /// amplitude · ω^gamma · exp(−ω/omega_c), cut off at 40·omega_c.
    pub fn analytic(gamma: f64, omega_c: f64, amplitude: f64) -> Result<Self> {
        Self::analytic_with_cutoff(gamma, omega_c, amplitude, ANALYTIC_CUTOFF_FACTOR * omega_c)
    }

    pub fn analytic_with_cutoff(
        gamma: f64,
        omega_c: f64,
        amplitude: f64,
        omega_max: f64,
    ) -> Result<Self> {
        if !(gamma > 0.0 && omega_c > 0.0 && amplitude > 0.0 && omega_max > 0.0) {
            return Err(LabError::InvalidDensity(format!(
                "analytic family needs gamma, omega_c, amplitude, omega_max > 0 (got {gamma}, {omega_c}, {amplitude}, {omega_max})"
            )));
        }
        Ok(Self {
            kind: DensityKind::Analytic {
                gamma,
                omega_c,
                amplitude,
            },
            omega_max,
        })
    }

    pub fn tabulated(grid: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if grid.len() < 2 || grid.len() != values.len() {
            return Err(LabError::InvalidDensity(
                "tabulated density needs at least two (omega, J) rows".into(),
            ));
        }
        if grid[0] < 0.0 || grid.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(LabError::InvalidDensity(
                "grid must be nonnegative and increasing".into(),
            ));
        }
        if let Some((k, v)) = values.iter().enumerate().find(|(_, v)| !(**v >= 0.0)) {
            return Err(LabError::NegativeDensity {
                omega: grid[k],
                value: *v,
            });
        }
        let omega_max = *grid.last().unwrap();
        Ok(Self {
            kind: DensityKind::Tabulated { grid, values },
            omega_max,
        })
    }

    /// Wraps a closure; J is sampled on a fine grid to reject negative values.
    pub fn callback(f: DensityFn, omega_max: f64) -> Result<Self> {
        if !(omega_max > 0.0) {
            return Err(LabError::InvalidDensity(
                "omega_max must be positive".into(),
            ));
        }
        for k in 1..=4096 {
            let w = omega_max * k as f64 / 4096.0;
            let v = (f.f)(w);
            if !(v >= 0.0) {
                return Err(LabError::NegativeDensity { omega: w, value: v });
            }
        }
        Ok(Self {
            kind: DensityKind::Callback(f),
            omega_max,
        })
    }

    /// J ≡ 0.
    pub fn zero() -> Self {
        Self {
            kind: DensityKind::Tabulated {
                grid: vec![0.0, 1.0],
                values: vec![0.0, 0.0],
            },
            omega_max: 1.0,
        }
    }

    pub fn kind(&self) -> &DensityKind {
        &self.kind
    }

    pub fn omega_max(&self) -> f64 {
        self.omega_max
    }

    pub fn is_zero(&self) -> bool {
        matches!(&self.kind, DensityKind::Tabulated { values, .. } if values.iter().all(|&v| v == 0.0))
    }

    pub fn eval(&self, omega: f64) -> f64 {
        if !(omega > 0.0) || omega > self.omega_max {
            return 0.0;
        }
        match &self.kind {
            DensityKind::Analytic {
                gamma,
                omega_c,
                amplitude,
            } => amplitude * omega.powf(*gamma) * (-omega / omega_c).exp(),
            DensityKind::Tabulated { grid, values } => interpolate(grid, values, omega),
            DensityKind::Callback(f) => (f.f)(omega),
        }
    }

    /// Points where J may fail to be smooth.
    pub fn breakpoints(&self) -> Vec<f64> {
        match &self.kind {
            DensityKind::Tabulated { grid, .. } => grid.clone(),
            _ => Vec::new(),
        }
    }

    /// Parameters of the analytic family when the mass beyond ω_max is
    /// negligible, so that closed forms over (0, ∞) apply.
    pub fn closed_form(&self) -> Option<(f64, f64, f64)> {
        match self.kind {
            DensityKind::Analytic {
                gamma,
                omega_c,
                amplitude,
            } => {
                let tail = statrs::function::gamma::gamma_ur(gamma + 1.0, self.omega_max / omega_c);
                (tail < 1e-10).then_some((gamma, omega_c, amplitude))
            }
            _ => None,
        }
    }

    /// Small-ω exponent when known: J(ω) ~ ω^γ.
    pub fn infrared_exponent(&self) -> Option<f64> {
        match self.kind {
            DensityKind::Analytic { gamma, .. } => Some(gamma),
            _ => None,
        }
    }

    /// ∫ J(ω) dω = h(0).
    pub fn mass(&self) -> Result<f64> {
        if let Some((g, wc, a)) = self.closed_form() {
            return Ok(a * statrs::function::gamma::gamma(g + 1.0) * wc.powf(g + 1.0));
        }
        let mut f = |w: f64| self.eval(w);
        crate::quad::adaptive_with_breaks(
            &mut f,
            0.0,
            self.omega_max,
            &self.breakpoints(),
            1e-12,
            1e-300,
        )
    }

    /// ω_c of the analytic family, or ω_max/40 otherwise; sets frequency scales.
    pub fn frequency_scale(&self) -> f64 {
        match self.kind {
            DensityKind::Analytic { omega_c, .. } => omega_c,
            _ => self.omega_max / ANALYTIC_CUTOFF_FACTOR,
        }
    }
}

fn interpolate(grid: &[f64], values: &[f64], x: f64) -> f64 {
    if x < grid[0] || x > *grid.last().unwrap() {
        return 0.0;
    }
    let k = grid.partition_point(|&g| g <= x);
    if k == 0 {
        return values[0];
    }
    if k >= grid.len() {
        return *values.last().unwrap();
    }
    let (x0, x1) = (grid[k - 1], grid[k]);
    let (y0, y1) = (values[k - 1], values[k]);
    y0 + (y1 - y0) * (x - x0) / (x1 - x0)
}

/// Distinct differences e − e' of system eigenvalues, clustered with the
/// degeneracy tolerance, together with the level pairs realizing them.
#[derive(Debug, Clone, PartialEq)]
pub struct BohrFrequencySet {
    frequencies: Vec<f64>,
    pair_lists: Vec<Vec<(usize, usize)>>,
}

impl BohrFrequencySet {
    pub fn new(eigenvalues: &[f64], tol: f64) -> Self {
        let d = eigenvalues.len();
        let mut diffs: Vec<(f64, usize, usize)> = Vec::with_capacity(d * d);
        for e in 0..d {
            for f in 0..d {
                let v = if e == f {
                    0.0
                } else {
                    eigenvalues[e] - eigenvalues[f]
                };
                diffs.push((v, e, f));
            }
        }
        diffs.sort_by(|a, b| {
            a.0.partial_cmp(&b.0)
                .unwrap()
                .then((a.1, a.2).cmp(&(b.1, b.2)))
        });
        let mut frequencies = Vec::new();
        let mut pair_lists: Vec<Vec<(usize, usize)>> = Vec::new();
        let mut sums = Vec::new();
        let mut last = f64::NEG_INFINITY;
        for (v, e, f) in diffs {
            if frequencies.is_empty() || v - last > tol {
                frequencies.push(v);
                pair_lists.push(Vec::new());
                sums.push(0.0);
            }
            let k = frequencies.len() - 1;
            pair_lists[k].push((e, f));
            sums[k] += v;
            last = v;
        }
        for (k, list) in pair_lists.iter().enumerate() {
            let is_zero = list.iter().any(|&(e, f)| e == f);
            frequencies[k] = if is_zero {
                0.0
            } else {
                sums[k] / list.len() as f64
            };
        }
        // Enforce exact antisymmetry of the representatives.
        let n = frequencies.len();
        for k in 0..n / 2 {
            let m = 0.5 * (frequencies[n - 1 - k] - frequencies[k]);
            frequencies[k] = -m;
            frequencies[n - 1 - k] = m;
        }
        Self {
            frequencies,
            pair_lists,
        }
    }

    pub fn frequencies(&self) -> &[f64] {
        &self.frequencies
    }

    pub fn pairs(&self, k: usize) -> &[(usize, usize)] {
        &self.pair_lists[k]
    }

    pub fn len(&self) -> usize {
        self.frequencies.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frequencies.is_empty()
    }

    pub fn zero_index(&self) -> usize {
        self.pair_lists
            .iter()
            .position(|l| l.iter().any(|&(e, f)| e == f))
            .expect("zero is always a Bohr frequency")
    }

    /// Index of the frequency −ε_k.
    pub fn negation(&self, k: usize) -> usize {
        self.len() - 1 - k
    }
}

/// Validated spin-boson model.
#[derive(Debug, Clone)]
pub struct SpinBosonModel {
    system: SystemSpec,
    coupling: CouplingMatrix,
    density: SpectralDensity,
    lambda: f64,
    kappa: Complex64,
    alpha: f64,
    bohr: BohrFrequencySet,
}

/// Builds and validates a model; Bohr frequencies are precomputed.
pub fn build_model(
    system: SystemSpec,
    coupling: CouplingMatrix,
    density: SpectralDensity,
    lambda: f64,
    kappa: Complex64,
    alpha: f64,
) -> Result<SpinBosonModel> {
    if coupling.dim() != system.dim() {
        return Err(LabError::DimensionMismatch(format!(
            "coupling is {0}x{0} but the system has {1} levels",
            coupling.dim(),
            system.dim()
        )));
    }
    if !(alpha > 0.0) {
        return Err(LabError::Config(format!(
            "decay exponent alpha must be positive, got {alpha}"
        )));
    }
    if !lambda.is_finite() || !kappa.re.is_finite() || !kappa.im.is_finite() {
        return Err(LabError::Config("lambda and kappa must be finite".into()));
    }
    let bohr = BohrFrequencySet::new(system.eigenvalues(), system.degeneracy_tol());
    Ok(SpinBosonModel {
        system,
        coupling,
        density,
        lambda,
        kappa,
        alpha,
        bohr,
    })
}

impl SpinBosonModel {
    pub fn system(&self) -> &SystemSpec {
        &self.system
    }

    pub fn coupling(&self) -> &CouplingMatrix {
        &self.coupling
    }

    pub fn density(&self) -> &SpectralDensity {
        &self.density
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn kappa(&self) -> Complex64 {
        self.kappa
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn bohr(&self) -> &BohrFrequencySet {
        &self.bohr
    }

    pub fn dim(&self) -> usize {
        self.system.dim()
    }

    /// ε = |λ|^{2·min(α,1)}
    pub fn eps(&self) -> f64 {
        self.lambda.abs().powf(2.0 * self.alpha.min(1.0))
    }

    /// ε̆ = max(|λ|, ε)
    pub fn eps_breve(&self) -> f64 {
        self.lambda.abs().max(self.eps())
    }

    pub fn with_lambda(&self, lambda: f64) -> Self {
        Self {
            lambda,
            ..self.clone()
        }
    }

    pub fn with_kappa(&self, kappa: Complex64) -> Self {
        Self {
            kappa,
            ..self.clone()
        }
    }

    pub fn with_coupling(&self, coupling: CouplingMatrix) -> Result<Self> {
        build_model(
            self.system.clone(),
            coupling,
            self.density.clone(),
            self.lambda,
            self.kappa,
            self.alpha,
        )
    }

    /// D_ε = Σ_{(e,e') realizing ε} P_e D P_{e'} for the k-th Bohr frequency.
    pub fn d_epsilon(&self, k: usize) -> CMat {
        let d = self.dim();
        let mut out = CMat::zeros(d, d);
        for &(e, f) in self.bohr.pairs(k) {
            out += self.system.projector(e) * self.coupling.matrix() * self.system.projector(f);
        }
        out
    }

    /// Serializable description; fails for callback densities.
    pub fn to_config(&self) -> Result<ModelConfig> {
        let density = match self.density.kind() {
            DensityKind::Analytic {
                gamma,
                omega_c,
                amplitude,
            } => DensityConfig {
                kind: "analytic".into(),
                gamma: Some(*gamma),
                omega_c: Some(*omega_c),
                amplitude: Some(*amplitude),
                omega_max: Some(self.density.omega_max()),
                table: None,
                grid: None,
                values: None,
            },
            DensityKind::Tabulated { grid, values } => DensityConfig {
                kind: "tabulated".into(),
                gamma: None,
                omega_c: None,
                amplitude: None,
                omega_max: None,
                table: None,
                grid: Some(grid.clone()),
                values: Some(values.clone()),
            },
            DensityKind::Callback(f) => {
                return Err(LabError::Config(format!(
                    "callback density '{}' cannot be serialized",
                    f.label()
                )))
            }
        };
        let identity =
            linalg::max_abs(&(self.system.eigenbasis() - linalg::identity(self.dim()))) == 0.0;
        Ok(ModelConfig {
            system: SystemConfig {
                eigenvalues: self.system.eigenvalues().to_vec(),
                eigenbasis: None,
                eigenbasis_matrix: (!identity)
                    .then(|| io::format_matrix_csv(self.system.eigenbasis())),
                degeneracy_tol: Some(self.system.degeneracy_tol()),
            },
            coupling: CouplingConfig {
                matrix: Some(io::format_matrix_csv(self.coupling.matrix())),
                file: None,
            },
            density,
            dynamics: DynamicsConfig {
                lambda: self.lambda,
                kappa_re: self.kappa.re,
                kappa_im: self.kappa.im,
                alpha: self.alpha,
            },
        })
    }
}

/// Report of the Fermi Golden Rule connectivity check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FgrReport {
    pub connected: bool,
    /// For each reachable excited level, the strictly decreasing chain of
    /// level indices ending at the ground level.
    pub chains: BTreeMap<usize, Vec<usize>>,
}

/// Checks that every excited level decays to the ground level through a
/// chain of strictly decreasing energies with rates above the floor.
/// `rates[(e, e')]` is the jump rate from level e to level e'.
pub fn check_fgr_connectivity(model: &SpinBosonModel, rates: &DMatrix<f64>) -> FgrReport {
    check_fgr_connectivity_with_floor(model, rates, DEFAULT_RATE_FLOOR)
}

pub fn check_fgr_connectivity_with_floor(
    model: &SpinBosonModel,
    rates: &DMatrix<f64>,
    rate_floor: f64,
) -> FgrReport {
    let d = model.dim();
    let mut next: Vec<Option<usize>> = vec![None; d];
    let mut reaches = vec![false; d];
    reaches[0] = true;
    for e in 1..d {
        // prefer the highest reachable target so chains stay short
        for f in (0..e).rev() {
            if reaches[f] && rates[(e, f)] > rate_floor {
                reaches[e] = true;
                next[e] = Some(f);
                break;
            }
        }
    }
    let mut chains = BTreeMap::new();
    for (e, &reached) in reaches.iter().enumerate().skip(1) {
        if reached {
            let mut chain = vec![e];
            let mut cur = e;
            while let Some(n) = next[cur] {
                chain.push(n);
                cur = n;
            }
            chains.insert(e, chain);
        }
    }
    FgrReport {
        connected: reaches.iter().all(|&r| r),
        chains,
    }
}

// ---------------------------------------------------------------------------
// Configuration files

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub system: SystemConfig,
    pub coupling: CouplingConfig,
    pub density: DensityConfig,
    pub dynamics: DynamicsConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SystemConfig {
    pub eigenvalues: Vec<f64>,
    /// Path to a CSV matrix whose columns are eigenvectors.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eigenbasis: Option<String>,
    /// Inline CSV alternative to `eigenbasis`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eigenbasis_matrix: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub degeneracy_tol: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CouplingConfig {
    /// Row-major CSV of "re,im" pairs.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub matrix: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub file: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensityConfig {
    /// "analytic", "tabulated" or "zero"
    pub kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub omega_c: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub amplitude: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub omega_max: Option<f64>,
    /// CSV file with rows "omega,J".
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub table: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub values: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DynamicsConfig {
    pub lambda: f64,
    #[serde(default)]
    pub kappa_re: f64,
    #[serde(default)]
    pub kappa_im: f64,
    pub alpha: f64,
}

impl DensityConfig {
    pub fn build(&self, base: &Path) -> Result<SpectralDensity> {
        match self.kind.as_str() {
            "analytic" => {
                let need = |v: Option<f64>, name: &str| {
                    v.ok_or_else(|| LabError::Config(format!("analytic density needs '{name}'")))
                };
                let gamma = need(self.gamma, "gamma")?;
                let omega_c = need(self.omega_c, "omega_c")?;
                let amplitude = need(self.amplitude, "amplitude")?;
                let omega_max = self.omega_max.unwrap_or(ANALYTIC_CUTOFF_FACTOR * omega_c);
                SpectralDensity::analytic_with_cutoff(gamma, omega_c, amplitude, omega_max)
            }
            "tabulated" => {
                let (grid, values) = match (&self.table, &self.grid, &self.values) {
                    (Some(path), _, _) => {
                        let text = std::fs::read_to_string(base.join(path))?;
                        io::parse_table_csv(&text)?
                    }
                    (None, Some(g), Some(v)) => (g.clone(), v.clone()),
                    _ => {
                        return Err(LabError::Config(
                            "tabulated density needs 'table' or 'grid' + 'values'".into(),
                        ))
                    }
                };
                SpectralDensity::tabulated(grid, values)
            }
            "zero" => Ok(SpectralDensity::zero()),
            other => Err(LabError::Config(format!("unknown density kind '{other}'"))),
        }
    }
}

impl ModelConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| LabError::Config(e.to_string()))
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| LabError::Config(e.to_string()))
    }

    /// Builds the model; relative paths are resolved against `base`.
    pub fn build(&self, base: &Path) -> Result<SpinBosonModel> {
        let basis = match (&self.system.eigenbasis, &self.system.eigenbasis_matrix) {
            (Some(path), _) => Some(io::parse_matrix_csv(&std::fs::read_to_string(
                base.join(path),
            )?)?),
            (None, Some(text)) => Some(io::parse_matrix_csv(text)?),
            (None, None) => None,
        };
        let system = SystemSpec::new(
            self.system.eigenvalues.clone(),
            basis,
            self.system.degeneracy_tol.unwrap_or(DEFAULT_DEGENERACY_TOL),
        )?;
        let coupling = match (&self.coupling.matrix, &self.coupling.file) {
            (Some(text), _) => io::parse_matrix_csv(text)?,
            (None, Some(path)) => io::parse_matrix_csv(&std::fs::read_to_string(base.join(path))?)?,
            (None, None) => {
                return Err(LabError::Config("coupling needs 'matrix' or 'file'".into()))
            }
        };
        build_model(
            system,
            CouplingMatrix::new(coupling)?,
            self.density.build(base)?,
            self.dynamics.lambda,
            Complex64::new(self.dynamics.kappa_re, self.dynamics.kappa_im),
            self.dynamics.alpha,
        )
    }
}

/// Reads a model TOML file.
pub fn load_model(path: &Path) -> Result<SpinBosonModel> {
    let text = std::fs::read_to_string(path)?;
    let base = path.parent().unwrap_or_else(|| Path::new("."));
    ModelConfig::from_toml(&text)?.build(base)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_level() -> SpinBosonModel {
        build_model(
            SystemSpec::diagonal(vec![0.0, 1.0]).unwrap(),
            CouplingMatrix::pauli_x(),
            SpectralDensity::analytic(1.0, 1.0, 1.0).unwrap(),
            0.2,
            Complex64::new(0.0, 0.0),
            0.9,
        )
        .unwrap()
    }

    #[test]
    fn two_level_bohr_frequencies() {
        let m = two_level();
        assert_eq!(m.bohr().frequencies(), &[-1.0, 0.0, 1.0]);
        assert_eq!(m.bohr().pairs(1).len(), 2);
        assert_eq!(m.bohr().pairs(0), &[(0, 1)]);
    }

    #[test]
    fn degenerate_spectrum_rejected() {
        let err = SystemSpec::diagonal(vec![0.0, 1e-15]).unwrap_err();
        assert!(matches!(err, LabError::DegenerateSpectrum(..)));
    }

    #[test]
    fn scalar_system_is_valid() {
        let m = build_model(
            SystemSpec::diagonal(vec![0.0]).unwrap(),
            CouplingMatrix::new(CMat::from_element(1, 1, linalg::ONE)).unwrap(),
            SpectralDensity::analytic(2.0, 1.0, 1.0).unwrap(),
            0.3,
            Complex64::new(0.0, 0.0),
            1.5,
        )
        .unwrap();
        assert_eq!(m.bohr().frequencies(), &[0.0]);
    }

    #[test]
    fn non_hermitian_coupling_rejected() {
        let m = CMat::from_row_slice(
            2,
            2,
            &[linalg::ZERO, linalg::ONE, linalg::ZERO, linalg::ZERO],
        );
        assert!(matches!(
            CouplingMatrix::new(m).unwrap_err(),
            LabError::NonHermitianCoupling(_)
        ));
    }

    #[test]
    fn negative_density_rejected() {
        let err =
            SpectralDensity::tabulated(vec![0.0, 1.0, 2.0], vec![0.0, -0.5, 0.0]).unwrap_err();
        assert!(matches!(err, LabError::NegativeDensity { .. }));
        let err = SpectralDensity::callback(DensityFn::new("neg", |w| w - 1.0), 2.0).unwrap_err();
        assert!(matches!(err, LabError::NegativeDensity { .. }));
    }

    #[test]
    fn renormalized_couplings() {
        let m = two_level();
        let eps = 0.2f64.powf(1.8);
        assert!((m.eps() - eps).abs() < 1e-15);
        assert!((m.eps_breve() - 0.2f64.max(eps)).abs() < 1e-15);
        let m2 = m.with_lambda(0.01);
        assert!((m2.eps() - 0.01f64.powf(1.8)).abs() < 1e-18);
    }

    #[test]
    fn degenerate_bohr_frequencies_are_merged() {
        // equally spaced ladder: 1 = e1 − e0 = e2 − e1
        let sys = SystemSpec::diagonal(vec![0.0, 1.0, 2.0]).unwrap();
        let b = BohrFrequencySet::new(sys.eigenvalues(), 1e-9);
        assert_eq!(b.frequencies(), &[-2.0, -1.0, 0.0, 1.0, 2.0]);
        assert_eq!(b.pairs(3).len(), 2);
    }

    #[test]
    fn fgr_connectivity_cases() {
        let m = two_level();
        let mut rates = DMatrix::zeros(2, 2);
        rates[(1, 0)] = 0.85;
        let rep = check_fgr_connectivity(&m, &rates);
        assert!(rep.connected);
        assert_eq!(rep.chains[&1], vec![1, 0]);

        let sys = SystemSpec::diagonal(vec![0.0, 1.0, 2.5]).unwrap();
        let m3 = build_model(
            sys,
            CouplingMatrix::zero(3),
            SpectralDensity::zero(),
            0.1,
            Complex64::new(0.0, 0.0),
            1.0,
        )
        .unwrap();
        let mut r3 = DMatrix::zeros(3, 3);
        r3[(2, 1)] = 0.3;
        let rep = check_fgr_connectivity(&m3, &r3);
        assert!(!rep.connected);
        assert!(rep.chains.is_empty());

        let m1 = build_model(
            SystemSpec::diagonal(vec![0.0]).unwrap(),
            CouplingMatrix::zero(1),
            SpectralDensity::zero(),
            0.1,
            Complex64::new(0.0, 0.0),
            1.0,
        )
        .unwrap();
        assert!(check_fgr_connectivity(&m1, &DMatrix::zeros(1, 1)).connected);
    }

    #[test]
    fn config_round_trip_preserves_bohr_data() {
        let m = two_level();
        let cfg = m.to_config().unwrap();
        let text = cfg.to_toml().unwrap();
        let back = ModelConfig::from_toml(&text).unwrap();
        assert_eq!(cfg, back);
        let rebuilt = back.build(Path::new(".")).unwrap();
        assert_eq!(rebuilt.bohr(), m.bohr());
        assert_eq!(rebuilt.eps(), m.eps());
        assert_eq!(rebuilt.eps_breve(), m.eps_breve());
    }
}
