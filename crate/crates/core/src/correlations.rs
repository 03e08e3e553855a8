//! Field correlation functions h, h_⋉, h_⋊, h_⋈, the Fermi Golden Rule
//! transform ĥ, weighted decay norms and infrared-regularity diagnostics.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::gamma;

use crate::error::{LabError, Result};
use crate::model::SpectralDensity;
use crate::quad;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Complex density on (0, ω_max], e.g. a cross density φ̄ψ.
#[derive(Clone)]
pub struct CrossDensity {
    f: Arc<dyn Fn(f64) -> Complex64 + Send + Sync>,
    omega_max: f64,
    breaks: Vec<f64>,
}

impl CrossDensity {
    pub fn new(
        f: impl Fn(f64) -> Complex64 + Send + Sync + 'static,
        omega_max: f64,
        breaks: Vec<f64>,
    ) -> Self {
        Self {
            f: Arc::new(f),
            omega_max,
            breaks,
        }
    }

    pub fn from_density(density: &SpectralDensity) -> Self {
        let d = density.clone();
        Self::new(
            move |w| Complex64::new(d.eval(w), 0.0),
            density.omega_max(),
            density.breakpoints(),
        )
    }

    pub fn eval(&self, omega: f64) -> Complex64 {
        if !(omega > 0.0) || omega > self.omega_max {
            ZERO
        } else {
            (self.f)(omega)
        }
    }

    pub fn omega_max(&self) -> f64 {
        self.omega_max
    }
}

impl fmt::Debug for CrossDensity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "CrossDensity(omega_max = {})", self.omega_max)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CorrelationSource {
    AnalyticClosedForm,
    Quadrature,
}

#[derive(Debug, Clone)]
enum Kernel {
    Zero,
    /// amplitude · Γ(γ+1) ω_c^{γ+1} / (1 + i ω_c t)^{γ+1}
    Closed {
        gamma: f64,
        omega_c: f64,
        amplitude: Complex64,
    },
    Density(CrossDensity),
}

/// t ↦ ∫ J(ω) e^{−i·phase·ω t} dω for a (possibly complex) density J.
#[derive(Debug, Clone)]
pub struct CorrelationFunction {
    kernel: Kernel,
    /// +1 for h and h_⋉, −1 for h_⋊ and h_⋈.
    phase: f64,
    /// 1/ω_c; sets the panel unit of time-domain quadratures.
    time_scale: f64,
    mass: f64,
}

/// h(t) = ∫ J(ω) e^{−iωt} dω, closed form for the analytic family.
pub fn correlation_h(density: &SpectralDensity) -> Result<CorrelationFunction> {
    let corr = CorrelationFunction::from_density(density, Complex64::new(1.0, 0.0), 1.0)?;
    corr.validate()?;
    Ok(corr)
}

/// Same as [`correlation_h`] but always evaluated by frequency quadrature.
pub fn correlation_h_quadrature(density: &SpectralDensity) -> Result<CorrelationFunction> {
    let corr = CorrelationFunction::quadrature(CrossDensity::from_density(density), 1.0, density)?;
    corr.validate()?;
    Ok(corr)
}

impl CorrelationFunction {
    fn from_density(density: &SpectralDensity, scale: Complex64, phase: f64) -> Result<Self> {
        let time_scale = 1.0 / density.frequency_scale();
        if density.is_zero() || scale == ZERO {
            return Ok(Self {
                kernel: Kernel::Zero,
                phase,
                time_scale,
                mass: 0.0,
            });
        }
        if let Some((gamma, omega_c, amplitude)) = density.closed_form() {
            return Ok(Self {
                kernel: Kernel::Closed {
                    gamma,
                    omega_c,
                    amplitude: scale * amplitude,
                },
                phase,
                time_scale,
                mass: scale.norm() * density.mass()?,
            });
        }
        let d = density.clone();
        let cross = CrossDensity::new(
            move |w| scale * d.eval(w),
            density.omega_max(),
            density.breakpoints(),
        );
        Self::quadrature(cross, phase, density)
    }

    fn quadrature(cross: CrossDensity, phase: f64, density: &SpectralDensity) -> Result<Self> {
        let mut abs = |w: f64| cross.eval(w).norm();
        let mass = quad::adaptive_with_breaks(
            &mut abs,
            0.0,
            cross.omega_max,
            &cross.breaks,
            1e-10,
            1e-300,
        )?;
        Ok(Self {
            kernel: if mass == 0.0 {
                Kernel::Zero
            } else {
                Kernel::Density(cross)
            },
            phase,
            time_scale: 1.0 / density.frequency_scale(),
            mass,
        })
    }

    /// Correlation of an arbitrary complex density.
    pub fn from_cross_density(cross: CrossDensity, phase: f64, time_scale: f64) -> Result<Self> {
        let mut abs = |w: f64| cross.eval(w).norm();
        let mass = quad::adaptive_with_breaks(
            &mut abs,
            0.0,
            cross.omega_max,
            &cross.breaks,
            1e-10,
            1e-300,
        )?;
        Ok(Self {
            kernel: if mass == 0.0 {
                Kernel::Zero
            } else {
                Kernel::Density(cross)
            },
            phase,
            time_scale,
            mass,
        })
    }

    pub fn zero() -> Self {
        Self {
            kernel: Kernel::Zero,
            phase: 1.0,
            time_scale: 1.0,
            mass: 0.0,
        }
    }

    fn validate(&self) -> Result<()> {
        if let Kernel::Density(_) = self.kernel {
            for t in [0.0, 1.0, 10.0, 100.0] {
                self.evaluate(t * self.time_scale)?;
            }
        }
        Ok(())
    }

    pub fn source(&self) -> CorrelationSource {
        match self.kernel {
            Kernel::Density(_) => CorrelationSource::Quadrature,
            _ => CorrelationSource::AnalyticClosedForm,
        }
    }

    /// Supremum of α with ∫ (1+t)^α |h| < ∞ when known in closed form.
    pub fn decay_alpha_estimate(&self) -> Option<f64> {
        match self.kernel {
            Kernel::Closed { gamma, .. } => Some(gamma),
            Kernel::Zero => Some(f64::INFINITY),
            Kernel::Density(_) => None,
        }
    }

    pub fn is_zero(&self) -> bool {
        matches!(self.kernel, Kernel::Zero)
    }

    pub fn time_scale(&self) -> f64 {
        self.time_scale
    }

    /// ∫ |J(ω)| dω, an upper bound for |h(t)|.
    pub fn mass(&self) -> f64 {
        self.mass
    }

    /// Closed-form parameters (γ, ω_c, complex amplitude) when available.
    pub fn closed_form(&self) -> Option<(f64, f64, Complex64)> {
        match self.kernel {
            Kernel::Closed {
                gamma,
                omega_c,
                amplitude,
            } => Some((gamma, omega_c, amplitude)),
            _ => None,
        }
    }

    pub fn eval(&self, t: f64) -> Complex64 {
        let t = self.phase * t;
        match &self.kernel {
            Kernel::Zero => ZERO,
            Kernel::Closed {
                gamma,
                omega_c,
                amplitude,
            } => closed_form_h(*gamma, *omega_c, *amplitude, Complex64::new(t, 0.0)),
            Kernel::Density(d) => fourier_panels(d, t, 0),
        }
    }

    /// Evaluation with an a posteriori refinement check (relative 1e-8).
    pub fn evaluate(&self, t: f64) -> Result<Complex64> {
        let Kernel::Density(d) = &self.kernel else {
            return Ok(self.eval(t));
        };
        let t = self.phase * t;
        let mut coarse = fourier_panels(d, t, 0);
        for refine in 1..=4 {
            let fine = fourier_panels(d, t, refine);
            if (fine - coarse).norm() <= 1e-8 * fine.norm() + 1e-14 * self.mass {
                return Ok(fine);
            }
            coarse = fine;
        }
        Err(LabError::QuadratureFailure(format!(
            "oscillatory quadrature at t = {t} did not reach relative tolerance 1e-8"
        )))
    }

    pub fn eval_many(&self, ts: &[f64]) -> Vec<Complex64> {
        ts.par_iter().map(|&t| self.eval(t)).collect()
    }

    /// ∫_{s0}^∞ e^{isx} h(s) ds.
    ///
    /// Closed-form kernels rotate the contour into the half plane where
    /// e^{isx} decays. Quadrature kernels at s0 = 0 use
    /// πJ(x) + i PV∫ J(ω)/(x − ω) dω; for s0 > 0 the tail is dropped and
    /// `TailTooHeavy` is raised if ∫_{s0}^∞ |h| exceeds 1e-8.
    pub fn half_line(&self, x: f64, s0: f64) -> Result<Complex64> {
        if self.phase != 1.0 {
            return Err(LabError::InvalidDensity(
                "half-line transform needs the e^{-iωt} convention".into(),
            ));
        }
        match &self.kernel {
            Kernel::Zero => Ok(ZERO),
            Kernel::Closed {
                gamma,
                omega_c,
                amplitude,
            } => closed_half_line(*gamma, *omega_c, *amplitude, x, s0),
            Kernel::Density(d) => {
                if s0 == 0.0 {
                    density_half_line(d, x)
                } else {
                    let mut abs = |s: f64| self.eval(s).norm();
                    let est = quad::panel(&mut abs, s0, 2.0 * s0)
                        + quad::panel(&mut abs, 2.0 * s0, 4.0 * s0);
                    if est > 1e-8 {
                        return Err(LabError::TailTooHeavy(format!(
                            "∫|h| beyond s = {s0} is about {est:e}; no analytic tail for this density"
                        )));
                    }
                    Ok(ZERO)
                }
            }
        }
    }

    /// Dumps t, re_h, im_h, abs_h.
    pub fn to_csv(&self, ts: &[f64]) -> String {
        let rows: Vec<Vec<f64>> = ts
            .iter()
            .zip(self.eval_many(ts))
            .map(|(&t, h)| vec![t, h.re, h.im, h.norm()])
            .collect();
        crate::io::format_csv(&["t", "re_h", "im_h", "abs_h"], &rows)
    }
}

fn closed_form_h(gamma_: f64, omega_c: f64, amplitude: Complex64, t: Complex64) -> Complex64 {
    let c = gamma(gamma_ + 1.0) * omega_c.powf(gamma_ + 1.0);
    let z = Complex64::new(1.0, 0.0) + Complex64::new(0.0, omega_c) * t;
    amplitude * c * z.powf(-(gamma_ + 1.0))
}

fn closed_half_line(
    gamma_: f64,
    omega_c: f64,
    amplitude: Complex64,
    x: f64,
    s0: f64,
) -> Result<Complex64> {
    if x == 0.0 && s0 == 0.0 {
        // ∫₀^∞ h = −i A Γ(γ) ω_c^γ
        return Ok(amplitude * Complex64::new(0.0, -gamma(gamma_) * omega_c.powf(gamma_)));
    }
    // upper ray for x > 0, downward ray otherwise; both avoid the branch
    // point at s = i/ω_c
    let dir = if x > 0.0 {
        Complex64::from_polar(1.0, PI / 4.0)
    } else {
        Complex64::new(0.0, -1.0)
    };
    let unit = 0.25 / omega_c.max(x.abs());
    let base = Complex64::new(s0, 0.0);
    let mut f = |r: f64| {
        let s = base + dir * r;
        (Complex64::new(0.0, x) * s).exp() * closed_form_h(gamma_, omega_c, amplitude, s) * dir
    };
    let scale = closed_form_h(gamma_, omega_c, amplitude, base).norm() / omega_c;
    quad::half_line_c(&mut f, unit, 1e-17 * scale.max(1e-300), 400)
}

fn density_half_line(d: &CrossDensity, x: f64) -> Result<Complex64> {
    let wmax = d.omega_max;
    let jx = d.eval(x);
    let pv = |part: fn(Complex64) -> f64| -> Result<f64> {
        let mut breaks = d.breaks.clone();
        if x > 0.0 && x < wmax {
            breaks.push(x);
            let jxp = part(jx);
            let mut g = |w: f64| (part(d.eval(w)) - jxp) / (x - w);
            let smooth = quad::adaptive_with_breaks(&mut g, 0.0, wmax, &breaks, 1e-11, 1e-15)?;
            Ok(smooth + jxp * (x / (wmax - x)).ln())
        } else {
            let mut g = |w: f64| part(d.eval(w)) / (x - w);
            if x == 0.0 {
                // J/ω must be integrable at the origin
                let probe = part(d.eval(1e-12)) / 1e-12;
                if !probe.is_finite() {
                    return Err(LabError::DivergentIntegral("J(ω)/ω at ω → 0".into()));
                }
            }
            quad::adaptive_with_breaks(&mut g, 0.0, wmax, &breaks, 1e-11, 1e-15)
        }
    };
    let re_pv = pv(|z| z.re)?;
    let im_pv = pv(|z| z.im)?;
    let pv = Complex64::new(re_pv, im_pv);
    Ok(jx * PI + Complex64::new(0.0, 1.0) * pv)
}

/// ∫₀^{ω_max} J(ω) e^{−iωt} dω with Gauss-Legendre panels no wider than
/// π/|t|; the first panel is refined geometrically toward ω = 0.
fn fourier_panels(d: &CrossDensity, t: f64, refine: u32) -> Complex64 {
    let wmax = d.omega_max;
    let mut width = wmax / 64.0;
    if t != 0.0 {
        width = width.min(PI / t.abs());
    }
    width = (width / f64::from(1u32 << refine)).max(wmax / f64::from(1u32 << 20));
    let mut pts = vec![0.0];
    pts.extend(d.breaks.iter().copied().filter(|&b| b > 0.0 && b < wmax));
    pts.push(wmax);
    pts.sort_by(|a, b| a.partial_cmp(b).unwrap());
    pts.dedup();
    let mut f = |w: f64| d.eval(w) * Complex64::from_polar(1.0, -w * t);
    let mut acc = ZERO;
    for seg in pts.windows(2) {
        let (a, b) = (seg[0], seg[1]);
        let n = ((b - a) / width).ceil().max(1.0) as usize;
        let h = (b - a) / n as f64;
        for k in 0..n {
            let lo = a + k as f64 * h;
            let hi = lo + h;
            if lo == 0.0 {
                let mut top = hi;
                for _ in 0..40 {
                    acc += quad::panel_c(&mut f, 0.5 * top, top);
                    top *= 0.5;
                }
                acc += quad::panel_c(&mut f, 0.0, top);
            } else {
                acc += quad::panel_c(&mut f, lo, hi);
            }
        }
    }
    acc
}

/// ĥ(ε) = 2π J(ε) for ε > 0, zero otherwise.
pub fn fourier_jhat(density: &SpectralDensity, eps: f64) -> f64 {
    if eps > 0.0 {
        2.0 * PI * density.eval(eps)
    } else {
        0.0
    }
}

/// ∫_{−T}^{T} e^{iεt} h(t) dt by time-domain quadrature; the oracle for ĥ.
pub fn fourier_transform_numeric(corr: &CorrelationFunction, eps: f64, horizon: f64) -> f64 {
    // h(−t) = conj h(t), so the symmetric integral is twice the real part
    let mut width = 0.5 * corr.time_scale;
    if eps != 0.0 {
        width = width.min(PI / eps.abs());
    }
    let n = (horizon / width).ceil() as usize;
    let h = horizon / n as f64;
    let mut f = |t: f64| Complex64::from_polar(1.0, eps * t) * corr.eval(t);
    let total: Complex64 = (0..n)
        .map(|k| quad::panel_c(&mut f, k as f64 * h, (k + 1) as f64 * h))
        .sum();
    2.0 * total.re
}

/// Complex radial profile ψ(ω) of a test function in the one-particle space.
#[derive(Clone)]
pub enum Profile {
    Zero,
    /// c·φ, i.e. ψ(ω) = c·√J(ω).
    Matching(Complex64),
    Custom {
        label: String,
        f: Arc<dyn Fn(f64) -> Complex64 + Send + Sync>,
    },
}

impl Profile {
    pub fn custom(
        label: impl Into<String>,
        f: impl Fn(f64) -> Complex64 + Send + Sync + 'static,
    ) -> Self {
        Self::Custom {
            label: label.into(),
            f: Arc::new(f),
        }
    }

    /// ψ(ω) relative to the radial measure dω.
    pub fn eval(&self, density: &SpectralDensity, omega: f64) -> Complex64 {
        if !(omega > 0.0) || omega > density.omega_max() {
            return ZERO;
        }
        match self {
            Profile::Zero => ZERO,
            Profile::Matching(c) => c * density.eval(omega).sqrt(),
            Profile::Custom { f, .. } => f(omega),
        }
    }

    /// ‖ψ‖² = ∫ |ψ(ω)|² dω.
    pub fn norm_sq(&self, density: &SpectralDensity) -> Result<f64> {
        match self {
            Profile::Zero => Ok(0.0),
            Profile::Matching(c) => Ok(c.norm_sqr() * density.mass()?),
            Profile::Custom { .. } => {
                let mut g = |w: f64| self.eval(density, w).norm_sqr();
                quad::adaptive_with_breaks(
                    &mut g,
                    0.0,
                    density.omega_max(),
                    &density.breakpoints(),
                    1e-10,
                    1e-300,
                )
            }
        }
    }
}

impl fmt::Debug for Profile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Profile::Zero => write!(f, "Profile::Zero"),
            Profile::Matching(c) => write!(f, "Profile::Matching({c})"),
            Profile::Custom { label, .. } => write!(f, "Profile::Custom({label})"),
        }
    }
}

/// Left (initial-state) and right (observable) profiles ψ_⋉, ψ_⋊.
#[derive(Debug, Clone)]
pub struct BoundaryProfiles {
    pub psi_left: Profile,
    pub psi_right: Profile,
}

impl BoundaryProfiles {
    pub fn new(psi_left: Profile, psi_right: Profile) -> Self {
        Self {
            psi_left,
            psi_right,
        }
    }

    /// Only an observable profile; the initial state is the vacuum.
    pub fn right_only(psi_right: Profile) -> Self {
        Self::new(Profile::Zero, psi_right)
    }

    /// J_⋉(ω) = φ̄ ψ_⋉
    pub fn j_left(&self, density: &SpectralDensity, omega: f64) -> Complex64 {
        density.eval(omega).sqrt() * self.psi_left.eval(density, omega)
    }

    /// J_⋊(ω) = φ̄ ψ_⋊
    pub fn j_right(&self, density: &SpectralDensity, omega: f64) -> Complex64 {
        density.eval(omega).sqrt() * self.psi_right.eval(density, omega)
    }

    /// J_⋈(ω) = ψ̄_⋉ ψ_⋊
    pub fn j_join(&self, density: &SpectralDensity, omega: f64) -> Complex64 {
        self.psi_left.eval(density, omega).conj() * self.psi_right.eval(density, omega)
    }
}

/// h_⋉, h_⋊, h_⋈.
#[derive(Debug, Clone)]
pub struct BoundaryCorrelations {
    pub h_left: CorrelationFunction,
    pub h_right: CorrelationFunction,
    pub h_join: CorrelationFunction,
}

/// h_⋉(t) = ∫ J_⋉ e^{−iωt}, h_⋊(t) = ∫ J_⋊ e^{iωt}, h_⋈(t) = ∫ J_⋈ e^{iωt}.
pub fn boundary_correlations(
    density: &SpectralDensity,
    profiles: &BoundaryProfiles,
) -> Result<BoundaryCorrelations> {
    let build = |p: &Profile, q: Option<&Profile>, phase: f64| -> Result<CorrelationFunction> {
        // q = None: pairing with φ; otherwise conj(p)·q
        match (p, q) {
            (Profile::Zero, _) | (_, Some(Profile::Zero)) => {
                CorrelationFunction::from_density(density, ZERO, phase)
            }
            (Profile::Matching(c), None) => CorrelationFunction::from_density(density, *c, phase),
            (Profile::Matching(a), Some(Profile::Matching(b))) => {
                CorrelationFunction::from_density(density, a.conj() * b, phase)
            }
            _ => {
                let (dd, pp, qq) = (density.clone(), p.clone(), q.cloned());
                let cross = CrossDensity::new(
                    move |w| match &qq {
                        None => dd.eval(w).sqrt() * pp.eval(&dd, w),
                        Some(q) => pp.eval(&dd, w).conj() * q.eval(&dd, w),
                    },
                    density.omega_max(),
                    density.breakpoints(),
                );
                CorrelationFunction::from_cross_density(
                    cross,
                    phase,
                    1.0 / density.frequency_scale(),
                )
            }
        }
    };
    let h_left = build(&profiles.psi_left, None, 1.0)?;
    let h_right = build(&profiles.psi_right, None, -1.0)?;
    let h_join = build(&profiles.psi_left, Some(&profiles.psi_right), -1.0)?;
    for h in [&h_left, &h_right, &h_join] {
        h.validate()?;
    }
    Ok(BoundaryCorrelations {
        h_left,
        h_right,
        h_join,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecayNorm {
    pub value: f64,
    pub converged: bool,
}

/// Geometric panel layout on [0, t_max]: nodes and weights.
fn decay_nodes(unit: f64, t_max: f64) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    let (x, w) = quad::gl16();
    let mut nodes = Vec::new();
    let mut weights = Vec::new();
    // weights restricted to [t_max/2, t_max]
    let mut tail = Vec::new();
    let mut edges = vec![0.0];
    let mut hi = unit.min(t_max);
    while *edges.last().unwrap() < t_max {
        let lo = *edges.last().unwrap();
        if lo < 0.5 * t_max && hi > 0.5 * t_max {
            hi = 0.5 * t_max;
        }
        edges.push(0.5 * (lo + hi));
        edges.push(hi);
        hi = (2.0 * hi).min(t_max);
    }
    for e in edges.windows(2) {
        let (a, b) = (e[0], e[1]);
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        let in_tail = a >= 0.5 * t_max;
        for (xi, wi) in x.iter().zip(w) {
            nodes.push(mid + half * xi);
            weights.push(wi * half);
            tail.push(if in_tail { wi * half } else { 0.0 });
        }
    }
    (nodes, weights, tail)
}

fn decay_from_samples(
    nodes: &[f64],
    weights: &[f64],
    tail_w: &[f64],
    abs_h: &[f64],
    alpha: f64,
) -> DecayNorm {
    let mut value = 0.0;
    let mut tail = 0.0;
    for k in 0..nodes.len() {
        let g = (1.0 + nodes[k]).powf(alpha) * abs_h[k];
        value += weights[k] * g;
        tail += tail_w[k] * g;
    }
    DecayNorm {
        value,
        converged: value == 0.0 || tail < 0.01 * value,
    }
}

/// ∫₀^{t_max} (1+t)^α |h(t)| dt; converged iff [t_max/2, t_max] carries
/// less than 1% of the value.
pub fn weighted_decay_norm(corr: &CorrelationFunction, alpha: f64, t_max: f64) -> DecayNorm {
    if corr.is_zero() {
        return DecayNorm {
            value: 0.0,
            converged: true,
        };
    }
    let (nodes, weights, tail) = decay_nodes(0.25 * corr.time_scale, t_max);
    let abs_h: Vec<f64> = corr.eval_many(&nodes).iter().map(|z| z.norm()).collect();
    decay_from_samples(&nodes, &weights, &tail, &abs_h, alpha)
}

/// sup_{t ≤ t_max} (1+t)^α |h(t)| over a log-spaced grid.
pub fn weighted_sup_norm(corr: &CorrelationFunction, alpha: f64, t_max: f64) -> f64 {
    let ts: Vec<f64> = std::iter::once(0.0)
        .chain((0..=400).map(|k| {
            corr.time_scale * 1e-3 * (t_max / (corr.time_scale * 1e-3)).powf(k as f64 / 400.0)
        }))
        .collect();
    corr.eval_many(&ts)
        .iter()
        .zip(&ts)
        .map(|(h, t)| (1.0 + t).powf(alpha) * h.norm())
        .fold(0.0, f64::max)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegularitySample {
    pub alpha: f64,
    pub value: f64,
    pub converged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegularityReport {
    /// +∞ when every tested α gives a finite norm.
    #[serde(with = "crate::io::serde_extended_f64")]
    pub max_alpha: f64,
    pub derivative_bounds_ok: bool,
    pub samples: Vec<RegularitySample>,
}

/// Horizon of the decay-norm bisection for closed-form correlations.
pub const REGULARITY_TMAX_CLOSED: f64 = 1e12;
/// Horizon for quadrature-evaluated correlations.
pub const REGULARITY_TMAX_QUADRATURE: f64 = 1e4;

/// Estimates sup{α : ∫(1+t)^α|h| < ∞} by bisection on the weighted decay
/// norm, and checks |∂ⁿJ(ω)| ≤ C ω^{γ−n} (n = 0, 1) on (0, 2].
pub fn infrared_regularity_report(
    density: &SpectralDensity,
    gamma_hint: f64,
) -> Result<RegularityReport> {
    let corr = correlation_h(density)?;
    let derivative_bounds_ok = derivative_bounds(density, gamma_hint);
    if corr.is_zero() {
        return Ok(RegularityReport {
            max_alpha: f64::INFINITY,
            derivative_bounds_ok,
            samples: Vec::new(),
        });
    }
    let t_max = match corr.source() {
        CorrelationSource::AnalyticClosedForm => REGULARITY_TMAX_CLOSED,
        CorrelationSource::Quadrature => REGULARITY_TMAX_QUADRATURE,
    };
    let (nodes, weights, tail) = decay_nodes(0.25 * corr.time_scale, t_max);
    let abs_h: Vec<f64> = corr.eval_many(&nodes).iter().map(|z| z.norm()).collect();
    let mut samples = Vec::new();
    let mut probe = |alpha: f64| {
        let n = decay_from_samples(&nodes, &weights, &tail, &abs_h, alpha);
        samples.push(RegularitySample {
            alpha,
            value: n.value,
            converged: n.converged,
        });
        n.converged
    };
    if !probe(0.0) {
        return Ok(RegularityReport {
            max_alpha: 0.0,
            derivative_bounds_ok,
            samples,
        });
    }
    let mut hi = 1.0;
    while probe(hi) {
        hi *= 2.0;
        if hi > 64.0 {
            return Ok(RegularityReport {
                max_alpha: f64::INFINITY,
                derivative_bounds_ok,
                samples,
            });
        }
    }
    let mut lo = hi / 2.0;
    if hi == 1.0 {
        lo = 0.0;
    }
    for _ in 0..30 {
        let mid = 0.5 * (lo + hi);
        if probe(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(RegularityReport {
        max_alpha: 0.5 * (lo + hi),
        derivative_bounds_ok,
        samples,
    })
}

fn derivative_bounds(density: &SpectralDensity, gamma_hint: f64) -> bool {
    let top = density.omega_max().min(2.0);
    let deriv = |w: f64| {
        let h = 1e-5 * w;
        (density.eval(w + h) - density.eval(w - h)) / (2.0 * h)
    };
    let ratio = |n: i32, w: f64| {
        let v = if n == 0 { density.eval(w) } else { deriv(w) };
        v.abs() / w.powf(gamma_hint - n as f64)
    };
    let logspace = |a: f64, b: f64, m: usize| -> Vec<f64> {
        (0..m)
            .map(move |k| a * (b / a).powf(k as f64 / (m - 1) as f64))
            .collect()
    };
    let fit_grid = logspace(0.05 * top, top * 0.999, 64);
    let check_grid = logspace(5e-5 * top, top * 0.999, 256);
    (0..=1).all(|n| {
        let c = fit_grid.iter().map(|&w| ratio(n, w)).fold(0.0, f64::max);
        let bound = 10.0 * c + 1e-300;
        check_grid.iter().all(|&w| ratio(n, w) <= bound)
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::DensityFn;

    fn ohmic(gamma: f64) -> SpectralDensity {
        SpectralDensity::analytic(gamma, 1.0, 1.0).unwrap()
    }

    #[test]
    fn ohmic_correlation_closed_form() {
        let h = correlation_h(&ohmic(1.0)).unwrap();
        assert_eq!(h.source(), CorrelationSource::AnalyticClosedForm);
        assert!((h.eval(0.0) - Complex64::new(1.0, 0.0)).norm() < 1e-14);
        for t in [0.3, 1.0, 7.0] {
            let exact = Complex64::new(1.0, t).powi(-2);
            assert!((h.eval(t) - exact).norm() < 1e-14);
        }
    }

    #[test]
    fn quadrature_matches_closed_form() {
        for gamma in [1.0, 2.0, 0.5] {
            let d = ohmic(gamma);
            let closed = correlation_h(&d).unwrap();
            let quad = correlation_h_quadrature(&d).unwrap();
            assert_eq!(quad.source(), CorrelationSource::Quadrature);
            for t in [-100.0, -3.0, 0.0, 0.7, 12.0, 100.0] {
                let a = closed.eval(t);
                let b = quad.evaluate(t).unwrap();
                assert!(
                    (a - b).norm() <= 1e-8 * a.norm(),
                    "gamma {gamma} t {t}: {a} vs {b}"
                );
            }
        }
    }

    #[test]
    fn super_ohmic_modulus() {
        let h = correlation_h(&ohmic(2.0)).unwrap();
        for t in [0.0f64, 1.0, 5.0, 40.0] {
            let exact = 2.0 / (1.0 + t * t).powf(1.5);
            assert!((h.eval(t).norm() - exact).abs() < 1e-13 * exact.max(1.0));
        }
    }

    #[test]
    fn zero_density_gives_zero() {
        let h = correlation_h(&SpectralDensity::zero()).unwrap();
        assert_eq!(h.eval(3.0), ZERO);
        let n = weighted_decay_norm(&h, 1.0, 1e4);
        assert_eq!(n.value, 0.0);
        assert!(n.converged);
    }

    #[test]
    fn jhat_values() {
        let d = ohmic(1.0);
        assert!((fourier_jhat(&d, 1.0) - 2.0 * PI * (-1.0f64).exp()).abs() < 1e-14);
        assert!((fourier_jhat(&d, 1.0) - 2.3116).abs() < 5e-4);
        assert_eq!(fourier_jhat(&d, -0.5), 0.0);
        assert_eq!(fourier_jhat(&d, 0.0), 0.0);
    }

    #[test]
    fn half_line_transform_matches_frequency_formula() {
        let d = ohmic(1.0);
        let closed = correlation_h(&d).unwrap();
        let quad = correlation_h_quadrature(&d).unwrap();
        for x in [-2.0, -0.3, 0.0, 0.4, 1.0, 3.0] {
            let a = closed.half_line(x, 0.0).unwrap();
            let b = quad.half_line(x, 0.0).unwrap();
            assert!((a - b).norm() < 1e-9, "x {x}: {a} vs {b}");
        }
        let z = closed.half_line(0.0, 0.0).unwrap();
        assert!((z - Complex64::new(0.0, -1.0)).norm() < 1e-14);
    }

    #[test]
    fn half_line_tail_plus_head_is_whole() {
        let h = correlation_h(&ohmic(1.5)).unwrap();
        for x in [-1.0, 0.0, 1.0] {
            let whole = h.half_line(x, 0.0).unwrap();
            let s0 = 30.0;
            let mut f = |s: f64| Complex64::from_polar(1.0, s * x) * h.eval(s);
            let n = 600;
            let head: Complex64 = (0..n)
                .map(|k| {
                    quad::panel_c(
                        &mut f,
                        k as f64 * s0 / n as f64,
                        (k + 1) as f64 * s0 / n as f64,
                    )
                })
                .sum();
            let tail = h.half_line(x, s0).unwrap();
            assert!((head + tail - whole).norm() < 1e-12, "x {x}");
        }
    }

    #[test]
    fn decay_norm_dichotomy() {
        let bounded = weighted_decay_norm(&correlation_h(&ohmic(2.0)).unwrap(), 1.0, 1e4);
        assert!(bounded.converged);
        let log_div = weighted_decay_norm(&correlation_h(&ohmic(1.0)).unwrap(), 1.0, 1e4);
        assert!(!log_div.converged);
    }

    #[test]
    fn boundary_profiles() {
        let d = ohmic(1.0);
        let h = correlation_h(&d).unwrap();
        let same = boundary_correlations(
            &d,
            &BoundaryProfiles::new(Profile::Matching(Complex64::new(1.0, 0.0)), Profile::Zero),
        )
        .unwrap();
        for t in [0.0, 1.0, 4.0] {
            assert!((same.h_left.eval(t) - h.eval(t)).norm() < 1e-14);
            assert_eq!(same.h_right.eval(t), ZERO);
            assert_eq!(same.h_join.eval(t), ZERO);
        }
        // J_⋉ = ω e^{−ω} through a custom profile ψ = √(ω) e^{−ω/2} · ...
        let custom = Profile::custom("sqrt-ohmic", |w: f64| {
            Complex64::new((w * (-w).exp()).sqrt(), 0.0)
        });
        let b = boundary_correlations(&d, &BoundaryProfiles::new(custom, Profile::Zero)).unwrap();
        for t in [0.0, 1.0, 4.0] {
            let exact = Complex64::new(1.0, t).powi(-2);
            assert!((b.h_left.evaluate(t).unwrap() - exact).norm() < 1e-9);
        }
    }

    #[test]
    fn regularity_report_on_analytic_family() {
        for gamma in [1.0, 2.0] {
            let r = infrared_regularity_report(&ohmic(gamma), gamma).unwrap();
            assert!(
                (r.max_alpha - gamma).abs() <= 0.1,
                "gamma {gamma}: {}",
                r.max_alpha
            );
            assert!(r.derivative_bounds_ok);
        }
        let z = infrared_regularity_report(&SpectralDensity::zero(), 1.0).unwrap();
        assert_eq!(z.max_alpha, f64::INFINITY);
        assert!(z.derivative_bounds_ok);
    }

    #[test]
    fn derivative_bounds_detect_wrong_exponent() {
        // J ~ ω^{1/2} violates |J| ≤ C ω^2 near zero
        let d =
            SpectralDensity::callback(DensityFn::new("sqrt", |w: f64| w.sqrt() * (-w).exp()), 40.0)
                .unwrap();
        assert!(!derivative_bounds(&d, 2.0));
        assert!(derivative_bounds(&d, 0.5));
    }
}
