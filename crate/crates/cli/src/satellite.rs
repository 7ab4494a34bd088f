//! Attitude tracking benchmark on `S³`.

use std::time::{Duration, Instant};

use nalgebra::Quaternion;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use riukf_core::linalg::{min_eigenvalue, psd_sqrt};
use riukf_core::system::gaussian_coords;
use riukf_core::{
    riadukf_step, riaukf_step, ukfrm_step, FilterOptions, FilterState, KarcherOptions, ManifoldPoint, Map, Matrix,
    NoiseSpec, System, Vector,
};

use crate::config::{SatelliteConfig, Variant};
use crate::quaternion::{from_array, quat_mul, s3, to_array, to_point};
use crate::CliError;

/// Ground truth `q(kδt)` for `k = 0..=steps`, by RK4 on `q̇ = ½ ω ⊗ q`.
pub fn gen_truth(cfg: &SatelliteConfig) -> Vec<Quaternion<f64>> {
    let deriv = |t: f64, q: &Quaternion<f64>| {
        let w = cfg.omega.omega(t);
        Quaternion::new(0.0, w[0], w[1], w[2]) * q * 0.5
    };
    let h = cfg.dt;
    let mut q = from_array(cfg.q0).normalize();
    let mut out = Vec::with_capacity(cfg.steps() + 1);
    out.push(q);
    for k in 0..cfg.steps() {
        let t = k as f64 * h;
        let k1 = deriv(t, &q);
        let k2 = deriv(t + 0.5 * h, &(q + k1 * (0.5 * h)));
        let k3 = deriv(t + 0.5 * h, &(q + k2 * (0.5 * h)));
        let k4 = deriv(t + h, &(q + k3 * h));
        q = (q + (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0)).normalize();
        out.push(q);
    }
    out
}

/// One-step rotation `[cos θ, ω̂ sin θ]` with `θ = ‖ω‖δt/2`, `ω` taken at `t`.
pub fn step_rotation(cfg: &SatelliteConfig, t: f64) -> Quaternion<f64> {
    let w = cfg.omega.omega(t);
    let norm = (w[0] * w[0] + w[1] * w[1] + w[2] * w[2]).sqrt();
    if norm == 0.0 {
        return Quaternion::identity();
    }
    let theta = norm * cfg.dt / 2.0;
    let (s, c) = theta.sin_cos();
    Quaternion::new(c, s * w[0] / norm, s * w[1] / norm, s * w[2] / norm)
}

/// The filtering model: additive tangent noises, `f_k` rotating by
/// `ω(t_{k−1})` and `h` the identity.
pub fn satellite_system(cfg: &SatelliteConfig) -> Result<System, CliError> {
    let c = cfg.clone();
    let f = Map::new(move |k, x| {
        let r = step_rotation(&c, (k - 1) as f64 * c.dt);
        to_point(&quat_mul(&r, &crate::quaternion::from_point(x)))
    });
    let q = NoiseSpec::zero_mean(Matrix::identity(3, 3) * cfg.q_scale)?;
    let r = NoiseSpec::zero_mean(Matrix::identity(3, 3) * cfg.r_scale)?;
    Ok(System::additive(s3(), s3(), f, q, Map::Identity, r)?)
}

/// Seed of the measurement stream for one Monte-Carlo run.
pub fn run_seed(seed: u64, run_id: usize) -> u64 {
    seed.wrapping_add((run_id as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15))
}

/// Measurements `y_k = exp_{q_k}(v_k)`, `v_k ∼ N(0, R)`, for `k = 1..=steps`.
pub fn measurements(cfg: &SatelliteConfig, truth: &[Quaternion<f64>], run_id: usize) -> Result<Vec<ManifoldPoint>, CliError> {
    let mut rng = ChaCha8Rng::seed_from_u64(run_seed(cfg.seed, run_id));
    let sqrt_r = psd_sqrt(&(Matrix::identity(3, 3) * cfg.r_scale))?;
    let zero = Vector::zeros(3);
    truth[1..]
        .iter()
        .map(|q| {
            let v = gaussian_coords(&mut rng, &zero, &sqrt_r);
            Ok(to_point(q)?.exp_coords(&v)?)
        })
        .collect()
}

/// Distance between attitudes, identifying `q` with `−q`.
pub fn attitude_error(truth: &ManifoldPoint, est: &ManifoldPoint) -> Result<f64, CliError> {
    Ok(truth.distance(&truth.align_antipodal(est)?)?)
}

#[derive(Clone, Debug, PartialEq)]
pub struct StepRecord {
    pub k: usize,
    pub estimate: [f64; 4],
    pub error: f64,
    pub min_eigenvalue: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Failure {
    pub step: usize,
    pub positiveness: bool,
    pub message: String,
}

#[derive(Clone, Debug, PartialEq)]
pub struct FilterRun {
    pub variant: Variant,
    pub records: Vec<StepRecord>,
    pub failure: Option<Failure>,
}

impl FilterRun {
    /// `√(mean_k dist²)` over a completed run.
    pub fn rmse(&self) -> Option<f64> {
        if self.failure.is_some() || self.records.is_empty() {
            return None;
        }
        let ms = self.records.iter().map(|r| r.error * r.error).sum::<f64>() / self.records.len() as f64;
        Some(ms.sqrt())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunResult {
    pub run_id: usize,
    pub measurements: Vec<[f64; 4]>,
    pub filters: Vec<FilterRun>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct FilterSummary {
    pub variant: Variant,
    /// Mean over completed runs of the per-run RMSE, times 10⁶.
    pub rmse_x1e6: Option<f64>,
    pub completed_runs: usize,
    pub failed_runs: usize,
    pub positiveness_losses: usize,
    pub first_failure_step: Option<(usize, usize)>,
}

#[derive(Clone, Debug)]
pub struct SatelliteReport {
    pub config: SatelliteConfig,
    pub truth: Vec<[f64; 4]>,
    pub runs: Vec<RunResult>,
    pub summary: Vec<FilterSummary>,
    pub wall_time: Duration,
}

impl SatelliteReport {
    pub fn summary_for(&self, v: Variant) -> Option<&FilterSummary> {
        self.summary.iter().find(|s| s.variant == v)
    }

    /// A filter other than the baseline failed, or the baseline failed for a
    /// reason other than positiveness loss.
    pub fn has_contract_violation(&self) -> bool {
        self.runs.iter().flat_map(|r| &r.filters).any(|f| match &f.failure {
            Some(fail) => !f.variant.is_baseline() || !fail.positiveness,
            None => false,
        })
    }
}

fn filter_options(cfg: &SatelliteConfig, variant: Variant) -> FilterOptions {
    FilterOptions {
        kind: variant.kind(cfg.rho).unwrap_or(riukf_core::SigmaKind::HomogeneousMinimumSymmetric),
        karcher: KarcherOptions {
            tol: cfg.karcher_tol,
            max_iter: cfg.karcher_max_iter,
        },
        reuse_sigma: cfg.reuse_sigma,
        identity_shortcut: true,
        align_antipodal: true,
    }
}

fn run_filter(
    cfg: &SatelliteConfig,
    variant: Variant,
    additive: &System,
    general: &System,
    truth: &[ManifoldPoint],
    ys: &[ManifoldPoint],
) -> Result<FilterRun, CliError> {
    let opts = filter_options(cfg, variant);
    let p0 = Matrix::from_fn(3, 3, |i, j| cfg.p0[i][j]);
    let mut state = FilterState::new(truth[0].clone(), p0)?;
    let mut records = Vec::with_capacity(ys.len());
    let mut failure = None;
    for (i, y) in ys.iter().enumerate() {
        let k = i + 1;
        let next = match variant {
            Variant::Ukfrm => ukfrm_step(&state, additive, y, &opts),
            v if v.is_augmented() => riaukf_step(&state, general, y, &opts),
            _ => riadukf_step(&state, additive, y, &opts),
        };
        match next {
            Ok(s) => {
                let c = s.x.coords();
                records.push(StepRecord {
                    k,
                    estimate: [c[0], c[1], c[2], c[3]],
                    error: attitude_error(&truth[k], &s.x)?,
                    min_eigenvalue: min_eigenvalue(&s.p),
                });
                state = s;
            }
            Err(e) => {
                failure = Some(Failure {
                    step: k,
                    positiveness: e.is_positiveness_loss(),
                    message: e.to_string(),
                });
                break;
            }
        }
    }
    Ok(FilterRun {
        variant,
        records,
        failure,
    })
}

fn summarize(cfg: &SatelliteConfig, runs: &[RunResult]) -> Vec<FilterSummary> {
    cfg.filters
        .iter()
        .enumerate()
        .map(|(i, &variant)| {
            let fr: Vec<&FilterRun> = runs.iter().map(|r| &r.filters[i]).collect();
            let rmses: Vec<f64> = fr.iter().filter_map(|f| f.rmse()).collect();
            let steps: Vec<usize> = fr.iter().filter_map(|f| f.failure.as_ref().map(|x| x.step)).collect();
            FilterSummary {
                variant,
                rmse_x1e6: (!rmses.is_empty()).then(|| 1e6 * rmses.iter().sum::<f64>() / rmses.len() as f64),
                completed_runs: rmses.len(),
                failed_runs: steps.len(),
                positiveness_losses: fr
                    .iter()
                    .filter(|f| f.failure.as_ref().is_some_and(|x| x.positiveness))
                    .count(),
                first_failure_step: steps
                    .iter()
                    .min()
                    .zip(steps.iter().max())
                    .map(|(a, b)| (*a, *b)),
            }
        })
        .collect()
}

/// Monte-Carlo comparison of the configured filters. Every filter of a run sees
/// the same measurements; runs execute in parallel and are reported in order.
pub fn run_satellite(cfg: &SatelliteConfig) -> Result<SatelliteReport, CliError> {
    cfg.validate()?;
    let start = Instant::now();
    let truth_q = gen_truth(cfg);
    let truth = truth_q.iter().map(to_point).collect::<Result<Vec<_>, _>>()?;
    let additive = satellite_system(cfg)?;
    let general = additive.to_general();
    let runs = (0..cfg.num_runs)
        .into_par_iter()
        .map(|run_id| {
            let ys = measurements(cfg, &truth_q, run_id)?;
            let filters = cfg
                .filters
                .iter()
                .map(|&v| run_filter(cfg, v, &additive, &general, &truth, &ys))
                .collect::<Result<Vec<_>, _>>()?;
            Ok(RunResult {
                run_id,
                measurements: ys.iter().map(|y| {
                    let c = y.coords();
                    [c[0], c[1], c[2], c[3]]
                }).collect(),
                filters,
            })
        })
        .collect::<Result<Vec<_>, CliError>>()?;
    let summary = summarize(cfg, &runs);
    Ok(SatelliteReport {
        config: cfg.clone(),
        truth: truth_q.iter().map(to_array).collect(),
        runs,
        summary,
        wall_time: start.elapsed(),
    })
}
