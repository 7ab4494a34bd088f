//! State-space models with manifold-valued states and measurements.
//!
//! Each of the two equations of a [`System`] is either *additive*, with a
//! Gaussian tangent noise entering through the exponential map at the image of
//! the noise-free map, or *general*, with the noise point passed to the map.

use std::fmt;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::linalg::{check_square, check_symmetric, min_eigenvalue, psd_sqrt, symmetrize, Matrix, Vector, PSD_FLOOR};
use crate::manifold::{transport_cov_between, Manifold, ManifoldPoint};
use crate::stats::RandomPointEstimate;

/// `f_k(x)`, with `k` the time step.
pub type MapFn = Arc<dyn Fn(usize, &ManifoldPoint) -> Result<ManifoldPoint> + Send + Sync>;
/// `f_k(x, w)`; `w` is `None` when the equation carries no noise.
pub type NoisyMapFn =
    Arc<dyn Fn(usize, &ManifoldPoint, Option<&ManifoldPoint>) -> Result<ManifoldPoint> + Send + Sync>;

#[derive(Clone)]
pub enum Map {
    Identity,
    Function(MapFn),
}

impl Map {
    pub fn new(f: impl Fn(usize, &ManifoldPoint) -> Result<ManifoldPoint> + Send + Sync + 'static) -> Self {
        Map::Function(Arc::new(f))
    }

    pub fn apply(&self, k: usize, x: &ManifoldPoint) -> Result<ManifoldPoint> {
        match self {
            Map::Identity => Ok(x.clone()),
            Map::Function(f) => f(k, x),
        }
    }

    pub fn is_identity(&self) -> bool {
        matches!(self, Map::Identity)
    }
}

impl fmt::Debug for Map {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Map::Identity => f.write_str("Identity"),
            Map::Function(_) => f.write_str("Function(..)"),
        }
    }
}

/// Gaussian tangent noise: mean and covariance in the deterministic tangent
/// basis at the point where the noise is applied.
#[derive(Clone, Debug, PartialEq)]
pub struct NoiseSpec {
    pub mean: Vector,
    pub cov: Matrix,
}

impl NoiseSpec {
    pub fn new(mean: Vector, cov: Matrix) -> Result<Self> {
        check_square(&cov, mean.len())?;
        check_symmetric(&cov)?;
        let lambda = min_eigenvalue(&cov);
        if lambda < PSD_FLOOR {
            return Err(Error::NotPsd {
                min_eigenvalue: lambda,
            });
        }
        Ok(Self {
            mean,
            cov: symmetrize(&cov),
        })
    }

    pub fn zero_mean(cov: Matrix) -> Result<Self> {
        Self::new(Vector::zeros(cov.nrows()), cov)
    }

    pub fn zero(n: usize) -> Self {
        Self {
            mean: Vector::zeros(n),
            cov: Matrix::zeros(n, n),
        }
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }
}

#[derive(Clone)]
pub enum Model {
    Additive { map: Map, noise: NoiseSpec },
    General {
        map: NoisyMapFn,
        noise: Option<RandomPointEstimate>,
    },
}

impl Model {
    pub fn additive(map: Map, noise: NoiseSpec) -> Self {
        Model::Additive { map, noise }
    }

    pub fn general(
        map: impl Fn(usize, &ManifoldPoint, Option<&ManifoldPoint>) -> Result<ManifoldPoint> + Send + Sync + 'static,
        noise: Option<RandomPointEstimate>,
    ) -> Self {
        Model::General {
            map: Arc::new(map),
            noise,
        }
    }

    pub fn is_additive(&self) -> bool {
        matches!(self, Model::Additive { .. })
    }

    /// The map with the noise fixed at its mean.
    pub fn mean_map(&self, k: usize, x: &ManifoldPoint) -> Result<ManifoldPoint> {
        match self {
            Model::Additive { map, noise } => map.apply(k, x)?.exp_coords(&noise.mean),
            Model::General { map, noise } => map(k, x, noise.as_ref().map(|n| &n.mean)),
        }
    }

    /// Additive form rewritten as a general one whose noise lives in `ℝⁿ`:
    /// `f(x, w) = exp_{f(x)}(w)` with `w` in tangent-basis coordinates.
    pub fn to_general(&self) -> Model {
        match self {
            Model::General { .. } => self.clone(),
            Model::Additive { map, noise } => {
                let n = noise.dim();
                let map = map.clone();
                let est = RandomPointEstimate {
                    mean: Manifold::euclidean(n)
                        .point(noise.mean.as_slice().to_vec())
                        .expect("finite noise mean"),
                    cov: noise.cov.clone(),
                };
                Model::General {
                    map: Arc::new(move |k, x, w| {
                        let fx = map.apply(k, x)?;
                        match w {
                            Some(w) => fx.exp_coords(w.coords()),
                            None => Ok(fx),
                        }
                    }),
                    noise: Some(est),
                }
            }
        }
    }
}

impl fmt::Debug for Model {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Model::Additive { map, noise } => f
                .debug_struct("Additive")
                .field("map", map)
                .field("noise", noise)
                .finish(),
            Model::General { noise, .. } => f
                .debug_struct("General")
                .field("noise", noise)
                .finish_non_exhaustive(),
        }
    }
}

/// Which equations carry additive noise.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SystemForm {
    Additive,
    General,
    /// Additive process noise, general measurement equation.
    AdditiveProcess,
    /// General process equation, additive measurement noise.
    AdditiveMeasurement,
}

#[derive(Clone, Debug)]
pub struct System {
    pub state_manifold: Manifold,
    pub meas_manifold: Manifold,
    pub process: Model,
    pub measurement: Model,
}

fn check_model(model: &Model, from: &Manifold, to: &Manifold) -> Result<()> {
    match model {
        Model::Additive { map, noise } => {
            if noise.dim() != to.intrinsic_dim() {
                return Err(Error::DimensionMismatch {
                    expected: to.intrinsic_dim(),
                    found: noise.dim(),
                });
            }
            if map.is_identity() && from != to {
                return Err(Error::ManifoldMismatch {
                    expected: from.to_string(),
                    found: to.to_string(),
                });
            }
        }
        Model::General { noise: Some(n), .. } => {
            check_square(&n.cov, n.manifold().intrinsic_dim())?;
        }
        Model::General { noise: None, .. } => {}
    }
    Ok(())
}

impl System {
    pub fn new(state_manifold: Manifold, meas_manifold: Manifold, process: Model, measurement: Model) -> Result<Self> {
        check_model(&process, &state_manifold, &state_manifold)?;
        check_model(&measurement, &state_manifold, &meas_manifold)?;
        Ok(Self {
            state_manifold,
            meas_manifold,
            process,
            measurement,
        })
    }

    pub fn additive(
        state_manifold: Manifold,
        meas_manifold: Manifold,
        f: Map,
        q: NoiseSpec,
        h: Map,
        r: NoiseSpec,
    ) -> Result<Self> {
        Self::new(state_manifold, meas_manifold, Model::additive(f, q), Model::additive(h, r))
    }

    pub fn form(&self) -> SystemForm {
        match (self.process.is_additive(), self.measurement.is_additive()) {
            (true, true) => SystemForm::Additive,
            (false, false) => SystemForm::General,
            (true, false) => SystemForm::AdditiveProcess,
            (false, true) => SystemForm::AdditiveMeasurement,
        }
    }

    /// Both equations in general form (additive ones via [`Model::to_general`]).
    pub fn to_general(&self) -> System {
        System {
            state_manifold: self.state_manifold.clone(),
            meas_manifold: self.meas_manifold.clone(),
            process: self.process.to_general(),
            measurement: self.measurement.to_general(),
        }
    }
}

/// Adds tangent noise to a random point: the mean moves to
/// `exp_mean(noise.mean)` and `P + Q` is parallel transported there.
pub fn add_tangent_noise(est: &RandomPointEstimate, noise: &NoiseSpec) -> Result<RandomPointEstimate> {
    let n = est.dim();
    if noise.dim() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: noise.dim(),
        });
    }
    let radius = est.manifold().sigma_radius();
    let norm = noise.mean.norm();
    if !(norm < radius) {
        return Err(Error::OutsideInjectiveDomain { norm, limit: radius });
    }
    let sum = &est.cov + &noise.cov;
    if norm == 0.0 {
        return Ok(RandomPointEstimate {
            mean: est.mean.clone(),
            cov: sum,
        });
    }
    let mean = est.mean.exp_coords(&noise.mean)?;
    let cov = transport_cov_between(&sum, &est.mean, &mean)?;
    Ok(RandomPointEstimate { mean, cov })
}

/// States `x_0..=x_kf` and measurements `y_1..=y_kf` (`measurements[k-1]` is `y_k`).
#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory {
    pub states: Vec<ManifoldPoint>,
    pub measurements: Vec<ManifoldPoint>,
}

/// Sample of a Gaussian with the given tangent-coordinate mean and covariance.
pub fn gaussian_coords<R: Rng + ?Sized>(rng: &mut R, mean: &Vector, sqrt_cov: &Matrix) -> Vector {
    let z = Vector::from_fn(mean.len(), |_, _| rng.sample::<f64, _>(StandardNormal));
    mean + sqrt_cov * z
}

struct NoiseSampler {
    rng: ChaCha8Rng,
    sqrt: Option<Matrix>,
}

impl NoiseSampler {
    fn new(seed: u64, stream: u64, model: &Model) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        let sqrt = match model {
            Model::Additive { noise, .. } => Some(psd_sqrt(&noise.cov)?),
            Model::General { noise: Some(n), .. } => Some(psd_sqrt(&n.cov)?),
            Model::General { noise: None, .. } => None,
        };
        Ok(Self { rng, sqrt })
    }

    fn apply(&mut self, model: &Model, k: usize, x: &ManifoldPoint) -> Result<ManifoldPoint> {
        match model {
            Model::Additive { map, noise } => {
                let c = gaussian_coords(&mut self.rng, &noise.mean, self.sqrt.as_ref().expect("additive noise"));
                map.apply(k, x)?.exp_coords(&c)
            }
            Model::General { map, noise: Some(n) } => {
                let z = Vector::zeros(n.dim());
                let c = gaussian_coords(&mut self.rng, &z, self.sqrt.as_ref().expect("general noise"));
                let w = n.mean.exp_coords(&c)?;
                map(k, x, Some(&w))
            }
            Model::General { map, noise: None } => map(k, x, None),
        }
    }
}

/// Sample a trajectory of `k_f` steps from `x0`. Process and measurement noises
/// come from independent streams of a generator seeded with `seed`.
pub fn simulate(system: &System, x0: &ManifoldPoint, k_f: usize, seed: u64) -> Result<Trajectory> {
    if k_f == 0 {
        return Err(Error::InvalidArgument("k_f must be at least 1".into()));
    }
    if x0.manifold() != &system.state_manifold {
        return Err(Error::ManifoldMismatch {
            expected: system.state_manifold.to_string(),
            found: x0.manifold().to_string(),
        });
    }
    let mut process = NoiseSampler::new(seed, 1, &system.process)?;
    let mut measure = NoiseSampler::new(seed, 2, &system.measurement)?;
    let mut states = Vec::with_capacity(k_f + 1);
    let mut measurements = Vec::with_capacity(k_f);
    states.push(x0.clone());
    for k in 1..=k_f {
        let x = process
            .apply(&system.process, k, &states[k - 1])
            .map_err(|e| e.at_step(k))?;
        let y = measure.apply(&system.measurement, k, &x).map_err(|e| e.at_step(k))?;
        states.push(x);
        measurements.push(y);
    }
    Ok(Trajectory { states, measurements })
}
