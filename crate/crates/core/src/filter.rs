//! Riemannian unscented Kalman filters.
//!
//! A step is split into [`predict`] and [`correct`]. Prediction handles each
//! equation of the [`System`] according to its form: additive equations
//! propagate the estimate and then add the tangent noise, general equations
//! propagate an estimate augmented with the noise. Identity maps with additive
//! noise skip the sigma points entirely.

use crate::error::{Error, Result, Stage, StageExt};
use crate::linalg::{block_diag, min_eigenvalue, sym_eigen, symmetrize, Matrix, SpdSolve, Vector};
use crate::manifold::{transport_cov_between, transport_matrix, tangent_basis, Manifold, ManifoldPoint};
use crate::sigma::SigmaKind;
use crate::stats::{KarcherOptions, RandomPointEstimate, WeightedSet};
use crate::system::{add_tangent_noise, Map, Model, NoiseSpec, NoisyMapFn, System, SystemForm};
use crate::ut::{transform_set, unscented_transform};

/// Relative tolerance of the positiveness check on corrected covariances.
pub const POSITIVENESS_TOL: f64 = 1e-9;

/// Smallest eigenvalue of `p` if it lies below `−1e-9·(1 + trace p)`.
pub fn lost_positiveness(p: &Matrix) -> Option<f64> {
    let lambda = min_eigenvalue(p);
    (lambda < -POSITIVENESS_TOL * (1.0 + p.trace())).then_some(lambda)
}

/// `p` is not numerically positive definite.
fn is_degenerate(p: &Matrix) -> bool {
    let (values, _) = sym_eigen(p);
    let n = values.len();
    n > 0 && values[0] <= 1e-12 * values[n - 1].abs()
}

#[derive(Clone, Debug, PartialEq)]
pub struct FilterState {
    /// `x̂_{k|k}`.
    pub x: ManifoldPoint,
    /// `P̂_{k|k}` in `tangent_basis(x)` coordinates.
    pub p: Matrix,
    pub k: usize,
}

impl FilterState {
    /// Initial state at `k = 0`.
    pub fn new(x: ManifoldPoint, p: Matrix) -> Result<Self> {
        let est = RandomPointEstimate::new(x, p)?;
        Ok(Self {
            x: est.mean,
            p: est.cov,
            k: 0,
        })
    }

    pub fn estimate(&self) -> RandomPointEstimate {
        RandomPointEstimate {
            mean: self.x.clone(),
            cov: self.p.clone(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct FilterOptions {
    pub kind: SigmaKind,
    pub karcher: KarcherOptions,
    /// Feed the propagated process set to the measurement transformation
    /// instead of drawing new sigma points. Needs an additive measurement
    /// equation and a propagated process set.
    pub reuse_sigma: bool,
    /// Skip sigma points for identity maps with additive noise.
    pub identity_shortcut: bool,
    /// Replace a sphere-valued measurement by its antipode when it lies in the
    /// opposite hemisphere from the predicted measurement.
    pub align_antipodal: bool,
}

impl Default for FilterOptions {
    fn default() -> Self {
        Self {
            kind: SigmaKind::HomogeneousMinimumSymmetric,
            karcher: KarcherOptions::default(),
            reuse_sigma: false,
            identity_shortcut: true,
            align_antipodal: false,
        }
    }
}

impl FilterOptions {
    pub fn with_kind(kind: SigmaKind) -> Self {
        Self {
            kind,
            ..Self::default()
        }
    }
}

/// The five predicted quantities needed by the correction.
#[derive(Clone, Debug, PartialEq)]
pub struct Prediction {
    pub k: usize,
    pub x: ManifoldPoint,
    pub p_xx: Matrix,
    pub y: ManifoldPoint,
    pub p_yy: Matrix,
    pub p_xy: Matrix,
}

struct Propagated {
    est: RandomPointEstimate,
    /// The propagated set and its sample mean, when sigma points were used.
    image: Option<(WeightedSet, ManifoldPoint)>,
}

fn is_sqrt_failure(e: &Error) -> bool {
    matches!(e, Error::Stage { stage: Stage::SigmaPoints, .. })
        && matches!(e.root(), Error::NotPsd { .. } | Error::Factorization)
}

fn positiveness(e: Error, step: usize, stage: Stage, cov: &Matrix) -> Error {
    if is_sqrt_failure(&e) {
        Error::PositivenessLoss {
            step,
            stage,
            min_eigenvalue: min_eigenvalue(cov),
        }
    } else {
        e.at(stage).at_step(step)
    }
}

/// `x̂⁻ := exp_x̂(ϖ̄)`, `P̂⁻ := P̂ + Q`: the prediction through an identity map.
pub fn identity_shortcut(est: &RandomPointEstimate, noise: &NoiseSpec) -> Result<RandomPointEstimate> {
    add_tangent_noise(est, noise)
}

fn predict_additive(
    map: &Map,
    noise: &NoiseSpec,
    prior: &RandomPointEstimate,
    k: usize,
    opts: &FilterOptions,
    cross: bool,
) -> Result<(Propagated, Option<Matrix>)> {
    if map.is_identity() && opts.identity_shortcut {
        let cross_cov = cross.then(|| prior.cov.clone());
        let est = identity_shortcut(prior, noise).stage(Stage::ProcessNoise)?;
        return Ok((Propagated { est, image: None }, cross_cov));
    }
    let f = |x: &ManifoldPoint| map.apply(k, x);
    let r = unscented_transform(&f, prior, &opts.kind, cross, opts.karcher)?;
    let star = RandomPointEstimate {
        mean: r.mean.clone(),
        cov: r.cov,
    };
    let est = add_tangent_noise(&star, noise).stage(Stage::ProcessNoise)?;
    Ok((
        Propagated {
            est,
            image: Some((r.image, r.mean)),
        },
        r.cross_cov,
    ))
}

fn augmented(prior: &RandomPointEstimate, noise: &RandomPointEstimate) -> RandomPointEstimate {
    let m = Manifold::product(vec![prior.manifold().clone(), noise.manifold().clone()]);
    let mean = m
        .point_from_factors(&[prior.mean.clone(), noise.mean.clone()])
        .expect("factors match the product");
    RandomPointEstimate {
        mean,
        cov: block_diag(&[&prior.cov, &noise.cov]),
    }
}

fn predict_augmented(
    map: &NoisyMapFn,
    noise: Option<&RandomPointEstimate>,
    prior: &RandomPointEstimate,
    k: usize,
    opts: &FilterOptions,
    cross: bool,
) -> Result<(Propagated, Option<Matrix>)> {
    let n = prior.dim();
    let r = match noise {
        None => {
            let f = |x: &ManifoldPoint| map(k, x, None);
            unscented_transform(&f, prior, &opts.kind, cross, opts.karcher)?
        }
        Some(w) => {
            let aug = augmented(prior, w);
            let f = |z: &ManifoldPoint| map(k, &z.factor(0)?, Some(&z.factor(1)?));
            unscented_transform(&f, &aug, &opts.kind, cross, opts.karcher)?
        }
    };
    let cross_cov = r.cross_cov.map(|c| c.rows(0, n).into_owned());
    let est = RandomPointEstimate {
        mean: r.mean.clone(),
        cov: r.cov,
    };
    let image = noise.is_none().then_some((r.image, r.mean));
    Ok((Propagated { est, image }, cross_cov))
}

fn predict_measurement(
    model: &Model,
    prior: &RandomPointEstimate,
    process_image: Option<&(WeightedSet, ManifoldPoint)>,
    k: usize,
    opts: &FilterOptions,
) -> Result<(RandomPointEstimate, Matrix)> {
    match model {
        Model::Additive { map, noise } if opts.reuse_sigma && !(map.is_identity() && opts.identity_shortcut) => {
            let (set, mean_x) = process_image.ok_or_else(|| {
                Error::InvalidArgument("sigma reuse needs a propagated process set".into())
            })?;
            let h = |x: &ManifoldPoint| map.apply(k, x);
            let r = transform_set(&h, set, mean_x, None, true, opts.karcher)?;
            let mut p_xy = r.cross_cov.expect("cross covariance requested");
            if *mean_x != prior.mean {
                let t = transport_matrix(mean_x, &prior.mean, &tangent_basis(mean_x), &tangent_basis(&prior.mean))
                    .stage(Stage::Transport)?;
                p_xy = t * p_xy;
            }
            let star = RandomPointEstimate {
                mean: r.mean,
                cov: r.cov,
            };
            add_measurement_noise(star, p_xy, noise)
        }
        Model::Additive { map, noise } => {
            let (prop, p_xy) = predict_additive(map, &NoiseSpec::zero(noise.dim()), prior, k, opts, true)
                .map_err(|e| relabel(e, Stage::ProcessNoise, Stage::MeasurementNoise))?;
            add_measurement_noise(prop.est, p_xy.expect("cross covariance requested"), noise)
        }
        Model::General { map, noise } => {
            if opts.reuse_sigma {
                return Err(Error::InvalidArgument(
                    "sigma reuse needs an additive measurement equation".into(),
                ));
            }
            let (prop, p_xy) = predict_augmented(map, noise.as_ref(), prior, k, opts, true)?;
            Ok((prop.est, p_xy.expect("cross covariance requested")))
        }
    }
}

fn relabel(e: Error, from: Stage, to: Stage) -> Error {
    match e {
        Error::Stage { stage, source } if stage == from => Error::Stage { stage: to, source },
        other => other,
    }
}

fn add_measurement_noise(
    star: RandomPointEstimate,
    p_xy: Matrix,
    noise: &NoiseSpec,
) -> Result<(RandomPointEstimate, Matrix)> {
    let est = add_tangent_noise(&star, noise).stage(Stage::MeasurementNoise)?;
    let p_xy = if est.mean == star.mean {
        p_xy
    } else {
        let t = transport_matrix(&star.mean, &est.mean, &tangent_basis(&star.mean), &tangent_basis(&est.mean))
            .stage(Stage::Transport)?;
        p_xy * t.transpose()
    };
    Ok((est, p_xy))
}

/// State and measurement prediction for step `state.k + 1`.
pub fn predict(state: &FilterState, sys: &System, opts: &FilterOptions) -> Result<Prediction> {
    let k = state.k + 1;
    let prior = state.estimate();
    let (prop, _) = match &sys.process {
        Model::Additive { map, noise } => predict_additive(map, noise, &prior, k, opts, false),
        Model::General { map, noise } => predict_augmented(map, noise.as_ref(), &prior, k, opts, false),
    }
    .map_err(|e| positiveness(e, k, Stage::StatePrediction, &state.p))?;
    let (y, p_xy) = predict_measurement(&sys.measurement, &prop.est, prop.image.as_ref(), k, opts)
        .map_err(|e| positiveness(e, k, Stage::MeasurementPrediction, &prop.est.cov))?;
    Ok(Prediction {
        k,
        x: prop.est.mean,
        p_xx: prop.est.cov,
        y: y.mean,
        p_yy: y.cov,
        p_xy,
    })
}

/// Kalman gain `G = P_xy P_yy⁻¹`, through a Cholesky solve.
pub fn gain(pred: &Prediction) -> Result<Matrix> {
    let solve = SpdSolve::new(&pred.p_yy)?;
    Ok(solve.right_divide(&pred.p_xy))
}

/// Correction with the observation `y_obs`; the result is transported to the
/// corrected mean.
pub fn correct(pred: &Prediction, y_obs: &ManifoldPoint, opts: &FilterOptions) -> Result<FilterState> {
    let k = pred.k;
    let g = match gain(pred) {
        Ok(g) => g,
        Err(Error::SingularInnovation { .. }) if is_degenerate(&pred.p_xx) => {
            return Err(Error::PositivenessLoss {
                step: k,
                stage: Stage::Gain,
                min_eigenvalue: min_eigenvalue(&pred.p_xx),
            })
        }
        Err(e) => return Err(e.at(Stage::Gain).at_step(k)),
    };
    let tag = |e: Error| e.at(Stage::Correction).at_step(k);
    let y_obs = if opts.align_antipodal {
        pred.y.align_antipodal(y_obs).map_err(tag)?
    } else {
        y_obs.clone()
    };
    let innovation = pred.y.log_coords(&y_obs).map_err(tag)?;
    let x_tm: Vector = &g * innovation;
    let x = pred.x.exp_coords(&x_tm).map_err(tag)?;
    let p = symmetrize(&(&pred.p_xx - &g * &pred.p_yy * g.transpose()));
    if let Some(lambda) = lost_positiveness(&p) {
        return Err(Error::PositivenessLoss {
            step: k,
            stage: Stage::Correction,
            min_eigenvalue: lambda,
        });
    }
    let p = transport_cov_between(&p, &pred.x, &x)
        .map_err(|e| e.at(Stage::Transport).at_step(k))?;
    Ok(FilterState { x, p, k })
}

/// One predict/correct cycle for any system form.
pub fn step(state: &FilterState, sys: &System, y_obs: &ManifoldPoint, opts: &FilterOptions) -> Result<FilterState> {
    let pred = predict(state, sys, opts)?;
    correct(&pred, y_obs, opts)
}

fn require(sys: &System, ok: &[SystemForm], what: &str) -> Result<()> {
    if ok.contains(&sys.form()) {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!(
            "{what} needs a {ok:?} system, got {:?}",
            sys.form()
        )))
    }
}

/// Additive filter: both equations with additive tangent noise.
pub fn riadukf_step(state: &FilterState, sys: &System, y_obs: &ManifoldPoint, opts: &FilterOptions) -> Result<FilterState> {
    require(sys, &[SystemForm::Additive], "the additive filter")?;
    step(state, sys, y_obs, opts)
}

/// Augmented filter: both equations in general form.
pub fn riaukf_step(state: &FilterState, sys: &System, y_obs: &ManifoldPoint, opts: &FilterOptions) -> Result<FilterState> {
    require(sys, &[SystemForm::General], "the augmented filter")?;
    step(state, sys, y_obs, opts)
}

/// Mixed filter: one additive and one general equation.
pub fn partially_additive_step(
    state: &FilterState,
    sys: &System,
    y_obs: &ManifoldPoint,
    opts: &FilterOptions,
) -> Result<FilterState> {
    require(
        sys,
        &[SystemForm::AdditiveProcess, SystemForm::AdditiveMeasurement],
        "the partially additive filter",
    )?;
    step(state, sys, y_obs, opts)
}

/// Baseline filter that ignores the noise statistics: sigma points from the
/// homogeneous minimum symmetric set through `f_k(·, ϖ̄)` and `h_k(·, ϑ̄)`,
/// no noise covariance anywhere, and a zero prior tangent correction.
pub fn ukfrm_step(state: &FilterState, sys: &System, y_obs: &ManifoldPoint, opts: &FilterOptions) -> Result<FilterState> {
    let opts = FilterOptions {
        kind: SigmaKind::HomogeneousMinimumSymmetric,
        reuse_sigma: false,
        identity_shortcut: false,
        ..opts.clone()
    };
    let process = sys.process.clone();
    let measurement = sys.measurement.clone();
    let bare = System {
        state_manifold: sys.state_manifold.clone(),
        meas_manifold: sys.meas_manifold.clone(),
        process: Model::additive(
            Map::new(move |k, x| process.mean_map(k, x)),
            NoiseSpec::zero(sys.state_manifold.intrinsic_dim()),
        ),
        measurement: Model::additive(
            Map::new(move |k, x| measurement.mean_map(k, x)),
            NoiseSpec::zero(sys.meas_manifold.intrinsic_dim()),
        ),
    };
    step(state, &bare, y_obs, &opts)
}

/// Affine Gaussian model `x' = A x + b + w`, `y = H x + c + v`.
#[derive(Clone, Debug, PartialEq)]
pub struct LinearModel {
    pub a: Matrix,
    pub b: Vector,
    pub h: Matrix,
    pub c: Vector,
    pub q: Matrix,
    pub r: Matrix,
}

#[derive(Clone, Debug, PartialEq)]
pub struct KalmanState {
    pub x: Vector,
    pub p: Matrix,
}

/// Textbook Kalman filter step.
pub fn linear_kf_step(state: &KalmanState, m: &LinearModel, y: &Vector) -> Result<KalmanState> {
    let x = &m.a * &state.x + &m.b;
    let p = &m.a * &state.p * m.a.transpose() + &m.q;
    let s = &m.h * &p * m.h.transpose() + &m.r;
    let p_xy = &p * m.h.transpose();
    let g = SpdSolve::new(&s)?.right_divide(&p_xy);
    let innovation = y - (&m.h * &x + &m.c);
    Ok(KalmanState {
        x: x + &g * innovation,
        p: symmetrize(&(&p - &g * s * g.transpose())),
    })
}
