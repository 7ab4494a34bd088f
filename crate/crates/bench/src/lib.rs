//! Fixtures shared by the criterion benchmarks.

use riukf_cli::satellite::{gen_truth, measurements, satellite_system};
use riukf_cli::SatelliteConfig;
use riukf_core::{FilterState, Manifold, ManifoldPoint, Matrix, RandomPointEstimate, System};

/// Satellite system, measurements of run 0 and the initial filter state.
pub struct SatelliteFixture {
    pub additive: System,
    pub general: System,
    pub measurements: Vec<ManifoldPoint>,
    pub start: FilterState,
}

pub fn satellite(steps: usize) -> SatelliteFixture {
    let cfg = SatelliteConfig {
        duration: steps as f64 * 0.1,
        ..SatelliteConfig::default()
    };
    let truth = gen_truth(&cfg);
    let additive = satellite_system(&cfg).expect("default config is valid");
    let general = additive.to_general();
    let ys = measurements(&cfg, &truth, 0).expect("measurements");
    let x0 = riukf_cli::quaternion::to_point(&truth[0]).expect("unit quaternion");
    let p0 = Matrix::from_fn(3, 3, |i, j| cfg.p0[i][j]);
    SatelliteFixture {
        additive,
        general,
        measurements: ys,
        start: FilterState::new(x0, p0).expect("valid state"),
    }
}

/// A random point on `Sⁿ` with a well-conditioned small covariance.
pub fn sphere_estimate(n: usize) -> RandomPointEstimate {
    let m = Manifold::sphere(n);
    let mean = m.project_point((0..=n).map(|i| 1.0 + i as f64).collect::<Vec<_>>()).expect("nonzero");
    let cov = Matrix::from_fn(n, n, |i, j| if i == j { 0.01 } else { 0.002 });
    RandomPointEstimate::new(mean, cov).expect("valid estimate")
}
