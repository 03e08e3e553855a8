//! The headline experiments. Grid points run as independent rayon tasks;
//! rows are assembled in grid order, so output is deterministic.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::config::{ClusterFamily, ExperimentConfig, ExperimentKind, InitialStateConfig};
use super::results::{Diagnostics, ResultTable};
use crate::correlations::{BoundaryProfiles, Profile};
use crate::davies::{build_generator_direct, jump_rates, semigroup_propagator, LindbladGenerator};
use crate::error::{LabError, Result};
use crate::fock::{
    self, apply_weyl, build_hamiltonian_with_budget, build_mode_grid, build_mode_grid_window,
    coherent_state, photon_moment, propagate, reduced_cross, reduced_density, FockState, ModeGrid,
    TruncatedHamiltonian, DEFAULT_DIMENSION_BUDGET,
};
use crate::linalg::{self, CMat};
use crate::model::{check_fgr_connectivity, SpectralDensity, SpinBosonModel};
use crate::polymer::{self, PolymerSystem, WeightFamily};
use crate::vanhove::{self, VanHoveModel};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Width of the band around the semigroup prediction, in units of λ².
pub const RELAXATION_BAND_FACTOR: f64 = 5.0;
/// Diameters at which the cluster-weight tail is sampled for the decay fit.
pub const DECAY_FIT_DIAMETERS: [usize; 3] = [2, 4, 8];

/// Runs the configured experiment and stamps the metadata.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ResultTable> {
    cfg.validate()?;
    let mut table = match cfg.experiment {
        ExperimentKind::WeakCouplingScaling => run_weak_coupling_scaling(cfg)?,
        ExperimentKind::Relaxation => run_relaxation(cfg)?,
        ExperimentKind::PhotonBound => run_photon_bound(cfg)?,
        ExperimentKind::VanhoveCrosscheck => run_vanhove_crosscheck(cfg)?,
        ExperimentKind::ClusterDemo => run_cluster_demo(cfg)?,
    };
    let mut hasher_input = cfg.to_toml()?;
    hasher_input.push_str(&cfg.model_text()?);
    use sha2::{Digest, Sha256};
    table.metadata.config_hash = Sha256::digest(hasher_input.as_bytes())
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect();
    table.metadata.seed = cfg.seed;
    Ok(table)
}

fn mode_grid(cfg: &ExperimentConfig, density: &SpectralDensity) -> ModeGrid {
    match cfg.fock.window {
        Some(w) => build_mode_grid_window(density, cfg.fock.modes, cfg.fock.scheme, w),
        None => build_mode_grid(density, cfg.fock.modes, cfg.fock.scheme),
    }
}

fn hamiltonian(
    cfg: &ExperimentConfig,
    model: &SpinBosonModel,
    grid: &ModeGrid,
) -> Result<TruncatedHamiltonian> {
    build_hamiltonian_with_budget(
        model,
        grid,
        cfg.fock.n_max,
        cfg.fock.budget.unwrap_or(DEFAULT_DIMENSION_BUDGET),
    )
}

/// Least-squares slope of log y against log x.
pub fn loglog_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let pts: Vec<(f64, f64)> = xs
        .iter()
        .zip(ys)
        .filter(|(x, y)| **x > 0.0 && **y > 0.0)
        .map(|(x, y)| (x.ln(), y.ln()))
        .collect();
    if pts.len() < 2 {
        return f64::NAN;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    sxy / sxx
}

fn state_diagnostics(states: &[&FockState]) -> Diagnostics {
    Diagnostics {
        norm_at_cutoff: states
            .iter()
            .map(|s| s.norm_at_cutoff())
            .fold(0.0, f64::max),
        residual: states
            .iter()
            .map(|s| (s.norm() - 1.0).abs())
            .fold(0.0, f64::max),
    }
}

/// Times in increasing order with their original positions.
fn ascending(ts: &[f64]) -> Vec<(usize, f64)> {
    let mut v: Vec<(usize, f64)> = ts.iter().copied().enumerate().collect();
    v.sort_by(|a, b| a.1.partial_cmp(&b.1).unwrap());
    v
}

/// Propagates through increasing times, returning the states in input order.
fn trajectory(h: &TruncatedHamiltonian, psi0: &FockState, ts: &[f64]) -> Result<Vec<FockState>> {
    let mut out: Vec<Option<FockState>> = vec![None; ts.len()];
    let mut cur = psi0.clone();
    let mut now = 0.0;
    for (k, t) in ascending(ts) {
        cur = propagate(h, &cur, t - now)?;
        now = t;
        out[k] = Some(cur.clone());
    }
    Ok(out
        .into_iter()
        .map(|s| s.expect("every time visited"))
        .collect())
}

/// Operator distance between the Fock reduced map Q_t and the semigroup,
/// max over matrix units E_ij of ‖Q_t(E_ij) − e^{−itL_S + λ²tM}(E_ij)‖₁.
pub fn weak_coupling_error(
    model: &SpinBosonModel,
    generator: &LindbladGenerator,
    h: &TruncatedHamiltonian,
    t: f64,
) -> Result<(f64, Diagnostics)> {
    let d = model.dim();
    let states: Vec<FockState> = (0..d)
        .into_par_iter()
        .map(|i| {
            propagate(
                h,
                &FockState::product_vacuum(h, &linalg::basis_vector(d, i)),
                t,
            )
        })
        .collect::<Result<_>>()?;
    let prop = semigroup_propagator(generator, model.system(), model.lambda(), t);
    let mut err: f64 = 0.0;
    for i in 0..d {
        for j in 0..d {
            let q = reduced_cross(&states[i], &states[j]);
            let unit = linalg::outer(&linalg::basis_vector(d, i), &linalg::basis_vector(d, j));
            let p = linalg::unvectorize(&(&prop * linalg::vectorize(&unit)), d);
            err = err.max(linalg::trace_norm(&(q - p)));
        }
    }
    let refs: Vec<&FockState> = states.iter().collect();
    Ok((err, state_diagnostics(&refs)))
}

pub fn run_weak_coupling_scaling(cfg: &ExperimentConfig) -> Result<ResultTable> {
    let model = cfg.build_model()?.with_kappa(ZERO);
    let generator = build_generator_direct(&model)?;
    let grid = mode_grid(cfg, model.density());
    let lambdas = &cfg.grids.lambdas;
    let jobs: Vec<(f64, f64)> = cfg
        .grids
        .macro_times
        .iter()
        .flat_map(|&tt| lambdas.iter().map(move |&l| (tt, l)))
        .collect();
    let results: Vec<(f64, Diagnostics)> = jobs
        .par_iter()
        .map(|&(tt, lambda)| {
            let m = model.with_lambda(lambda);
            let h = hamiltonian(cfg, &m, &grid)?;
            weak_coupling_error(&m, &generator, &h, tt / (lambda * lambda))
        })
        .collect::<Result<_>>()?;
    let mut table = ResultTable::new(
        ExperimentKind::WeakCouplingScaling.name(),
        &["macro_time", "lambda", "t", "error", "slope"],
    );
    for (b, &tt) in cfg.grids.macro_times.iter().enumerate() {
        let block = &results[b * lambdas.len()..(b + 1) * lambdas.len()];
        let errors: Vec<f64> = block.iter().map(|r| r.0).collect();
        let slope = loglog_slope(lambdas, &errors);
        table
            .metadata
            .summary
            .insert(format!("slope[macro_time={tt}]"), slope);
        for (&lambda, &(err, diag)) in lambdas.iter().zip(block) {
            table.push(vec![tt, lambda, tt / (lambda * lambda), err, slope], diag);
        }
    }
    table.metadata.notes.push(format!(
        "Fock oracle: K = {}, N_max = {}, scheme {:?}, window {:.4}",
        cfg.fock.modes,
        cfg.fock.n_max,
        cfg.fock.scheme,
        grid.frequencies().last().copied().unwrap_or(0.0)
            + grid.weights().last().copied().unwrap_or(0.0) / 2.0
    ));
    Ok(table)
}

/// Initial product state ψ_S ⊗ 𝓦(c·φ)Ω on the truncated space of `h`.
pub fn initial_state(
    h: &TruncatedHamiltonian,
    model: &SpinBosonModel,
    grid: &ModeGrid,
    spec: &InitialStateConfig,
) -> Result<FockState> {
    let d = model.dim();
    if spec.level >= d {
        return Err(LabError::Config(format!(
            "initial level {} outside 0..{d}",
            spec.level
        )));
    }
    let sys = model.system().eigenvector(spec.level);
    match spec.coherent {
        None => Ok(FockState::product_vacuum(h, &sys)),
        Some([re, im]) => {
            let amps = grid
                .profile_amplitudes(model.density(), &Profile::Matching(Complex64::new(re, im)));
            let field = coherent_state(&amps, h.dims().2)?;
            FockState::product(&sys, &field)
        }
    }
}

/// ⟨ψ, (1 ⊗ 𝓦(ψ_obs)) ψ⟩.
pub fn weyl_observable(psi: &FockState, profile_amplitudes: &[Complex64]) -> Result<Complex64> {
    let w = apply_weyl(psi, profile_amplitudes)?;
    Ok(psi
        .amplitudes()
        .iter()
        .zip(w.amplitudes())
        .map(|(a, b)| a.conj() * b)
        .sum())
}

/// Populations of a system density matrix in the energy eigenbasis.
fn populations(model: &SpinBosonModel, rho: &CMat) -> Vec<f64> {
    let r = model.system().to_eigenbasis(rho);
    (0..rho.nrows()).map(|k| r[(k, k)].re).collect()
}

/// Per-time relaxation data for a pair of trajectories.
#[derive(Debug, Clone)]
pub struct RelaxationPoint {
    pub t: f64,
    pub populations: [Vec<f64>; 2],
    pub weyl: [Complex64; 2],
    pub distance: f64,
    pub semigroup_distance: [f64; 2],
    pub ground_distance: [f64; 2],
    pub diagnostics: Diagnostics,
}

/// Two Fock trajectories at coupling λ over the physical times `ts`.
pub fn relaxation_trajectories(
    cfg: &ExperimentConfig,
    model: &SpinBosonModel,
    generator: &LindbladGenerator,
    grid: &ModeGrid,
    lambda: f64,
    ts: &[f64],
) -> Result<Vec<RelaxationPoint>> {
    let specs = &cfg.relaxation.initial_states;
    if specs.len() < 2 {
        return Err(LabError::Config(
            "relaxation needs two initial states".into(),
        ));
    }
    let m = model.with_lambda(lambda);
    let h = hamiltonian(cfg, &m, grid)?;
    let obs = grid.profile_amplitudes(
        m.density(),
        &Profile::Matching(Complex64::new(
            cfg.relaxation.observable[0],
            cfg.relaxation.observable[1],
        )),
    );
    let starts = [
        initial_state(&h, &m, grid, &specs[0])?,
        initial_state(&h, &m, grid, &specs[1])?,
    ];
    let rho0 = [reduced_density(&starts[0]), reduced_density(&starts[1])];
    let trajs: Vec<Vec<FockState>> = starts
        .par_iter()
        .map(|s| trajectory(&h, s, ts))
        .collect::<Result<_>>()?;
    let ground = m.system().projector(0);
    ts.iter()
        .enumerate()
        .map(|(k, &t)| {
            let a = &trajs[0][k];
            let b = &trajs[1][k];
            let ra = reduced_density(a);
            let rb = reduced_density(b);
            let prop = semigroup_propagator(generator, m.system(), lambda, t);
            let predict =
                |r: &CMat| linalg::unvectorize(&(&prop * linalg::vectorize(r)), r.nrows());
            Ok(RelaxationPoint {
                t,
                populations: [populations(&m, &ra), populations(&m, &rb)],
                weyl: [weyl_observable(a, &obs)?, weyl_observable(b, &obs)?],
                distance: linalg::trace_norm(&(&ra - &rb)),
                semigroup_distance: [
                    linalg::trace_norm(&(&ra - predict(&rho0[0]))),
                    linalg::trace_norm(&(&rb - predict(&rho0[1]))),
                ],
                ground_distance: [
                    linalg::trace_norm(&(&ra - &ground)),
                    linalg::trace_norm(&(&rb - &ground)),
                ],
                diagnostics: state_diagnostics(&[a, b]),
            })
        })
        .collect()
}

pub fn run_relaxation(cfg: &ExperimentConfig) -> Result<ResultTable> {
    let model = cfg.build_model()?.with_kappa(ZERO);
    let rates = jump_rates(&model);
    let fgr = check_fgr_connectivity(&model, rates.matrix());
    if !fgr.connected {
        return Err(LabError::Config(
            "Fermi Golden Rule connectivity fails for this model".into(),
        ));
    }
    let generator = build_generator_direct(&model)?;
    let grid = mode_grid(cfg, model.density());
    let d = model.dim();
    let mut macro_times = vec![0.0];
    macro_times.extend(cfg.grids.macro_times.iter().copied().filter(|&x| x > 0.0));
    let mut columns: Vec<String> = vec!["lambda".into(), "macro_time".into(), "t".into()];
    for tag in ["a", "b"] {
        columns.extend((0..d).map(|k| format!("pop_{tag}_{k}")));
    }
    for c in [
        "weyl_a_re",
        "weyl_a_im",
        "weyl_b_re",
        "weyl_b_im",
        "distance",
        "semigroup_distance_a",
        "semigroup_distance_b",
        "ground_distance_a",
        "ground_distance_b",
    ] {
        columns.push(c.into());
    }
    let col_refs: Vec<&str> = columns.iter().map(String::as_str).collect();
    let mut table = ResultTable::new(ExperimentKind::Relaxation.name(), &col_refs);
    let per_lambda: Vec<Vec<RelaxationPoint>> = cfg
        .grids
        .lambdas
        .par_iter()
        .map(|&lambda| {
            let ts: Vec<f64> = macro_times
                .iter()
                .map(|tt| tt / (lambda * lambda))
                .collect();
            relaxation_trajectories(cfg, &model, &generator, &grid, lambda, &ts)
        })
        .collect::<Result<_>>()?;
    for (&lambda, points) in cfg.grids.lambdas.iter().zip(&per_lambda) {
        for (&tt, p) in macro_times.iter().zip(points) {
            let mut row = vec![lambda, tt, p.t];
            row.extend(&p.populations[0]);
            row.extend(&p.populations[1]);
            row.extend([
                p.weyl[0].re,
                p.weyl[0].im,
                p.weyl[1].re,
                p.weyl[1].im,
                p.distance,
            ]);
            row.extend(p.semigroup_distance);
            row.extend(p.ground_distance);
            table.push(row, p.diagnostics);
        }
        let first = points.first().map_or(f64::NAN, |p| p.distance);
        let last = points.last().map_or(f64::NAN, |p| p.distance);
        let worst = points
            .iter()
            .flat_map(|p| p.semigroup_distance)
            .fold(0.0, f64::max);
        let s = &mut table.metadata.summary;
        s.insert(format!("distance_ratio[lambda={lambda}]"), last / first);
        s.insert(format!("max_semigroup_distance[lambda={lambda}]"), worst);
        s.insert(
            format!("band[lambda={lambda}]"),
            RELAXATION_BAND_FACTOR * lambda * lambda,
        );
    }
    Ok(table)
}

pub fn run_photon_bound(cfg: &ExperimentConfig) -> Result<ResultTable> {
    let model = cfg.build_model()?.with_kappa(ZERO);
    let grid = mode_grid(cfg, model.density());
    let kappa = Complex64::new(cfg.photon.kappa, 0.0);
    let spec = InitialStateConfig {
        level: cfg.photon.level,
        coherent: None,
    };
    let d = model.dim();
    let ts = &cfg.grids.times;
    let per_lambda: Vec<Vec<(Vec<f64>, Diagnostics)>> = cfg
        .grids
        .lambdas
        .par_iter()
        .map(|&lambda| {
            let m = model.with_lambda(lambda);
            let h = hamiltonian(cfg, &m, &grid)?;
            let psi0 = initial_state(&h, &m, &grid, &spec)?;
            let states = trajectory(&h, &psi0, ts)?;
            let vh = (d == 1).then(|| {
                VanHoveModel::new(
                    m.density().clone(),
                    lambda * m.coupling().matrix()[(0, 0)].re,
                )
            });
            ts.iter()
                .zip(&states)
                .map(|(&t, psi)| {
                    let (g_exact, n_exact) = match &vh {
                        Some(v) => (
                            vanhove::photon_generating_function(v, kappa, t)?.re,
                            vanhove::mean_photon_number(v, t)?,
                        ),
                        None => (f64::NAN, f64::NAN),
                    };
                    let row = vec![
                        lambda,
                        t,
                        photon_moment(psi, kappa).re,
                        fock::mean_photon_number(psi),
                        g_exact,
                        n_exact,
                    ];
                    Ok((row, state_diagnostics(&[psi])))
                })
                .collect()
        })
        .collect::<Result<_>>()?;
    let mut table = ResultTable::new(
        ExperimentKind::PhotonBound.name(),
        &[
            "lambda",
            "t",
            "genfun_fock",
            "mean_n_fock",
            "genfun_exact",
            "mean_n_exact",
        ],
    );
    for rows in per_lambda {
        for (row, diag) in rows {
            table.push(row, diag);
        }
    }
    table
        .metadata
        .summary
        .insert("kappa".into(), cfg.photon.kappa);
    Ok(table)
}

fn rel_dev(a: Complex64, b: Complex64) -> f64 {
    let diff = (a - b).norm();
    if diff == 0.0 {
        0.0
    } else {
        diff / b.norm().max(1e-300)
    }
}

pub fn run_vanhove_crosscheck(cfg: &ExperimentConfig) -> Result<ResultTable> {
    let model = cfg.build_model()?.with_kappa(ZERO);
    if model.dim() != 1 {
        return Err(LabError::DimensionMismatch(format!(
            "van Hove cross-check needs a one-level system, got d_S = {}",
            model.dim()
        )));
    }
    let grid = mode_grid(cfg, model.density());
    let kappa = Complex64::new(cfg.photon.kappa, 0.0);
    let c = Complex64::new(cfg.vanhove.profile[0], cfg.vanhove.profile[1]);
    let profiles = BoundaryProfiles::right_only(Profile::Matching(c));
    let psi_amps = grid.profile_amplitudes(model.density(), &Profile::Matching(c));
    let ts = &cfg.grids.times;
    let spec = InitialStateConfig {
        level: 0,
        coherent: None,
    };
    let per_lambda: Vec<Vec<(Vec<f64>, Diagnostics)>> = cfg
        .grids
        .lambdas
        .par_iter()
        .map(|&lambda| {
            let m = model.with_lambda(lambda);
            let h = hamiltonian(cfg, &m, &grid)?;
            let psi0 = initial_state(&h, &m, &grid, &spec)?;
            let states = trajectory(&h, &psi0, ts)?;
            let vh = VanHoveModel::new(
                m.density().clone(),
                lambda * m.coupling().matrix()[(0, 0)].re,
            );
            ts.iter()
                .zip(&states)
                .map(|(&t, psi)| {
                    let w_f = weyl_observable(psi, &psi_amps)?;
                    let w_e = vanhove::weyl_expectation(&vh, &profiles, t)?;
                    let g_f = photon_moment(psi, kappa);
                    let g_e = vanhove::photon_generating_function(&vh, kappa, t)?;
                    let n_f = fock::mean_photon_number(psi);
                    let n_e = vanhove::mean_photon_number(&vh, t)?;
                    let dev = rel_dev(w_f, w_e)
                        .max(rel_dev(g_f, g_e))
                        .max(rel_dev(Complex64::new(n_f, 0.0), Complex64::new(n_e, 0.0)));
                    let row = vec![
                        lambda, t, w_f.re, w_f.im, w_e.re, w_e.im, g_f.re, g_e.re, n_f, n_e, dev,
                    ];
                    Ok((row, state_diagnostics(&[psi])))
                })
                .collect()
        })
        .collect::<Result<_>>()?;
    let mut table = ResultTable::new(
        ExperimentKind::VanhoveCrosscheck.name(),
        &[
            "lambda",
            "t",
            "weyl_fock_re",
            "weyl_fock_im",
            "weyl_exact_re",
            "weyl_exact_im",
            "genfun_fock",
            "genfun_exact",
            "mean_n_fock",
            "mean_n_exact",
            "relative_deviation",
        ],
    );
    let mut worst: f64 = 0.0;
    for rows in per_lambda {
        for (row, diag) in rows {
            worst = worst.max(row[10]);
            table.push(row, diag);
        }
    }
    table
        .metadata
        .summary
        .insert("max_relative_deviation".into(), worst);
    Ok(table)
}

/// w({τ, τ+ℓ}) = amplitude·ℓ^{−power} for 1 ≤ ℓ ≤ max_range.
pub fn pair_power_family(
    amplitude: f64,
    power: f64,
    max_range: usize,
    adjacency_gap: usize,
) -> Result<WeightFamily> {
    let mut fam = WeightFamily::new(adjacency_gap);
    for l in 1..=max_range {
        fam.add_shape(
            &[0, l],
            Complex64::new(amplitude * (l as f64).powf(-power), 0.0),
        )?;
    }
    Ok(fam)
}

/// Random complex weights of modulus ≤ amplitude on every subset of span ≤ 3.
pub fn random_local_system(
    n: usize,
    amplitude: f64,
    adjacency_gap: usize,
    rng: &mut ChaCha8Rng,
) -> Result<PolymerSystem> {
    let mut sys = PolymerSystem::new(n, adjacency_gap)?;
    for lo in 1..=n {
        for rest in 0u64..4 {
            let mut sites = vec![lo];
            sites.extend((1..=2).filter(|k| rest >> (k - 1) & 1 == 1).map(|k| lo + k));
            if sites.iter().any(|&s| s > n) {
                continue;
            }
            let r = amplitude * rng.gen::<f64>();
            let theta = rng.gen_range(0.0..std::f64::consts::TAU);
            sys.set_weight(&sites, Complex64::from_polar(r, theta))?;
        }
    }
    Ok(sys)
}

pub fn run_cluster_demo(cfg: &ExperimentConfig) -> Result<ResultTable> {
    let cc = cfg
        .cluster
        .as_ref()
        .ok_or_else(|| LabError::Config("cluster_demo needs a [cluster] table".into()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let family = match cc.family {
        ClusterFamily::PairPower => Some(pair_power_family(
            cc.amplitude,
            cc.power,
            cc.max_range,
            cc.adjacency_gap,
        )?),
        _ => None,
    };
    let table_sys = match (&cc.family, &cc.table) {
        (ClusterFamily::Table, Some(path)) => {
            let n = cc.horizons.iter().copied().max().unwrap_or(0);
            Some(PolymerSystem::from_json(
                n,
                cc.adjacency_gap,
                &std::fs::read_to_string(cfg.base_dir.join(path))?,
            )?)
        }
        (ClusterFamily::Table, None) => {
            return Err(LabError::Config("table family needs 'table'".into()))
        }
        _ => None,
    };
    let mut table = ResultTable::new(
        ExperimentKind::ClusterDemo.name(),
        &[
            "n",
            "log_partition_re",
            "log_partition_im",
            "cluster_re",
            "cluster_im",
            "abs_error",
            "kp_worst_ratio",
            "tail_bound",
        ],
    );
    for &n in &cc.horizons {
        let sys = match (&family, &table_sys, cc.family) {
            (Some(f), _, _) => f.restrict(n)?,
            (_, Some(s), _) => restrict_system(s, n)?,
            (_, _, ClusterFamily::RandomLocal) => {
                random_local_system(n, cc.amplitude, cc.adjacency_gap, &mut rng)?
            }
            _ => unreachable!("family resolved above"),
        };
        let kp = polymer::check_kotecky_preiss(&sys, polymer::size_a);
        let sum = polymer::cluster_log_partition(&sys, cc.size_cap)?;
        let exact = if n <= polymer::MAX_BRUTE_FORCE_HORIZON {
            polymer::brute_force_partition(&sys)?.ln()
        } else {
            Complex64::new(f64::NAN, f64::NAN)
        };
        table.push(
            vec![
                n as f64,
                exact.re,
                exact.im,
                sum.value.re,
                sum.value.im,
                (sum.value.exp() - exact.exp()).norm(),
                kp.worst_ratio,
                sum.truncation_bound,
            ],
            Diagnostics {
                norm_at_cutoff: 0.0,
                residual: sum.truncation_bound,
            },
        );
    }
    if let Some(f) = &family {
        let ac = polymer::anchored_clusters(f, cc.size_cap, cc.diameter_cap)?;
        let tails: Vec<f64> = DECAY_FIT_DIAMETERS
            .iter()
            .map(|&m| ac.diameter_tail(m))
            .collect();
        let ms: Vec<f64> = DECAY_FIT_DIAMETERS.iter().map(|&m| m as f64).collect();
        let s = &mut table.metadata.summary;
        s.insert("pressure_re".into(), ac.pressure().re);
        s.insert("pressure_im".into(), ac.pressure().im);
        s.insert("size_tail_bound".into(), ac.size_tail_bound());
        s.insert("decay_exponent".into(), -loglog_slope(&ms, &tails));
        for (m, t) in DECAY_FIT_DIAMETERS.iter().zip(&tails) {
            s.insert(format!("diameter_tail[m={m}]"), *t);
        }
    }
    Ok(table)
}

/// Polymers of `sys` contained in {1, …, n}.
fn restrict_system(sys: &PolymerSystem, n: usize) -> Result<PolymerSystem> {
    let mut out = PolymerSystem::new(n, sys.adjacency_gap())?;
    for e in sys.weight_table() {
        if e.subset.iter().all(|&s| s <= n) {
            out.set_weight(&e.subset, Complex64::new(e.re, e.im))?;
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lab::config::ModelSource;
    use crate::model::{build_model, CouplingMatrix, SystemSpec};

    fn two_level_cfg(kind: ExperimentKind, coupling: CouplingMatrix) -> ExperimentConfig {
        let model = build_model(
            SystemSpec::diagonal(vec![0.0, 1.0]).unwrap(),
            coupling,
            SpectralDensity::analytic(2.0, 1.0, 1.0).unwrap(),
            0.2,
            ZERO,
            1.0,
        )
        .unwrap();
        let mut cfg = ExperimentConfig::new(kind);
        cfg.model = Some(ModelSource::Inline(Box::new(model.to_config().unwrap())));
        cfg.fock.modes = 6;
        cfg.fock.n_max = 2;
        cfg
    }

    #[test]
    fn slope_of_power_law() {
        let xs = [0.4, 0.2, 0.1];
        let ys: Vec<f64> = xs.iter().map(|x| 3.0 * x * x).collect();
        assert!((loglog_slope(&xs, &ys) - 2.0).abs() < 1e-12);
        assert!(loglog_slope(&[1.0], &[1.0]).is_nan());
    }

    #[test]
    fn weak_coupling_free_dynamics_has_zero_error() {
        let mut cfg = two_level_cfg(ExperimentKind::WeakCouplingScaling, CouplingMatrix::zero(2));
        cfg.grids.lambdas = vec![0.4, 0.2];
        cfg.grids.macro_times = vec![1.0];
        let t = run_experiment(&cfg).unwrap();
        for e in t.column("error").unwrap() {
            assert!(e < 1e-9, "{e}");
        }
    }

    #[test]
    fn repeated_lambda_gives_identical_rows() {
        let mut cfg = two_level_cfg(
            ExperimentKind::WeakCouplingScaling,
            CouplingMatrix::pauli_x(),
        );
        cfg.grids.lambdas = vec![0.3, 0.3];
        cfg.grids.macro_times = vec![0.5];
        let t = run_experiment(&cfg).unwrap();
        // the slope over a repeated λ is NaN, so compare the printed rows
        let csv = t.to_csv();
        let lines: Vec<&str> = csv.lines().skip(1).collect();
        assert_eq!(lines[0], lines[1]);
        let again = run_experiment(&cfg).unwrap();
        assert_eq!(t.to_csv(), again.to_csv());
    }

    #[test]
    fn photon_bound_kappa_zero_is_one() {
        let mut cfg = two_level_cfg(ExperimentKind::PhotonBound, CouplingMatrix::pauli_x());
        cfg.photon.kappa = 0.0;
        cfg.photon.level = 1;
        cfg.grids.lambdas = vec![0.2];
        cfg.grids.times = vec![0.0, 2.0, 5.0];
        let t = run_experiment(&cfg).unwrap();
        for g in t.column("genfun_fock").unwrap() {
            assert!((g - 1.0).abs() < 1e-9);
        }
        assert!(t.column("genfun_exact").unwrap().iter().all(|x| x.is_nan()));
    }

    #[test]
    fn relaxation_at_zero_coupling_keeps_populations() {
        let cfg = two_level_cfg(ExperimentKind::Relaxation, CouplingMatrix::pauli_x());
        let model = cfg.build_model().unwrap();
        let generator = build_generator_direct(&model).unwrap();
        let grid = mode_grid(&cfg, model.density());
        let pts = relaxation_trajectories(&cfg, &model, &generator, &grid, 0.0, &[0.0, 5.0, 10.0])
            .unwrap();
        for p in &pts {
            assert!((p.distance - pts[0].distance).abs() < 1e-9);
            assert!((p.populations[0][1] - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn cluster_demo_random_local_matches_brute_force() {
        let mut cfg = ExperimentConfig::new(ExperimentKind::ClusterDemo);
        cfg.seed = 11;
        cfg.cluster = Some(crate::lab::config::ClusterConfig {
            family: ClusterFamily::RandomLocal,
            amplitude: 1e-3,
            power: 3.0,
            max_range: 12,
            horizons: vec![4, 6],
            size_cap: 4,
            diameter_cap: 24,
            adjacency_gap: 1,
            table: None,
        });
        let t = run_experiment(&cfg).unwrap();
        for e in t.column("abs_error").unwrap() {
            assert!(e < 1e-9, "{e}");
        }
    }
}
