//! Scalar example on which the noise-free baseline filter breaks down:
//! `x₀ ∼ (1, 1)`, `f(x) = x`, `h(x) = 1 − x`, `Q = R = 1`, and every
//! measurement equal to 1.

use riukf_core::{
    linear_kf_step, riadukf_step, ukfrm_step, FilterOptions, FilterState, KalmanState, LinearModel, Manifold, Map,
    Matrix, NoiseSpec, System, Vector,
};

use crate::CliError;

pub fn scalar_system() -> Result<System, CliError> {
    let r1 = Manifold::euclidean(1);
    let one = Matrix::identity(1, 1);
    Ok(System::additive(
        r1.clone(),
        r1,
        Map::Identity,
        NoiseSpec::zero_mean(one.clone())?,
        Map::new(|_, x| Manifold::euclidean(1).point(vec![1.0 - x.coords()[0]])),
        NoiseSpec::zero_mean(one)?,
    )?)
}

pub fn scalar_linear_model() -> LinearModel {
    let one = Matrix::identity(1, 1);
    LinearModel {
        a: one.clone(),
        b: Vector::zeros(1),
        h: -one.clone(),
        c: Vector::from_element(1, 1.0),
        q: one.clone(),
        r: one,
    }
}

/// Estimate `(x̂, P̂)` after step `k`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ScalarRow {
    pub k: usize,
    pub kf: (f64, f64),
    pub riadukf: Option<(f64, f64)>,
    pub ukfrm: Option<(f64, f64)>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ScalarReport {
    pub rows: Vec<ScalarRow>,
    pub riadukf_failure: Option<(usize, String)>,
    /// Step at which the baseline stopped, and why.
    pub ukfrm_failure: Option<(usize, String)>,
    pub ukfrm_positiveness_loss: bool,
    /// Largest `|Δx̂|` or `|ΔP̂|` between the Kalman and unscented filters.
    pub max_deviation: f64,
}

pub fn run_scalar(steps: usize) -> Result<ScalarReport, CliError> {
    let sys = scalar_system()?;
    let model = scalar_linear_model();
    let y = Manifold::euclidean(1).point(vec![1.0])?;
    let y_vec = Vector::from_element(1, 1.0);
    let opts = FilterOptions::default();
    let x0 = Manifold::euclidean(1).point(vec![1.0])?;
    let mut kf = KalmanState {
        x: Vector::from_element(1, 1.0),
        p: Matrix::identity(1, 1),
    };
    let mut ri = Some(FilterState::new(x0.clone(), Matrix::identity(1, 1))?);
    let mut rm = Some(FilterState::new(x0, Matrix::identity(1, 1))?);
    let mut report = ScalarReport {
        rows: Vec::with_capacity(steps),
        riadukf_failure: None,
        ukfrm_failure: None,
        ukfrm_positiveness_loss: false,
        max_deviation: 0.0,
    };
    let pair = |s: &FilterState| (s.x.coords()[0], s.p[(0, 0)]);
    for k in 1..=steps {
        kf = linear_kf_step(&kf, &model, &y_vec)?;
        if let Some(s) = ri.take() {
            match riadukf_step(&s, &sys, &y, &opts) {
                Ok(next) => ri = Some(next),
                Err(e) => report.riadukf_failure = Some((k, e.to_string())),
            }
        }
        if let Some(s) = rm.take() {
            match ukfrm_step(&s, &sys, &y, &opts) {
                Ok(next) => rm = Some(next),
                Err(e) => {
                    report.ukfrm_positiveness_loss = e.is_positiveness_loss();
                    report.ukfrm_failure = Some((k, e.to_string()));
                }
            }
        }
        let row = ScalarRow {
            k,
            kf: (kf.x[0], kf.p[(0, 0)]),
            riadukf: ri.as_ref().map(pair),
            ukfrm: rm.as_ref().map(pair),
        };
        if let Some((x, p)) = row.riadukf {
            let d = (x - row.kf.0).abs().max((p - row.kf.1).abs());
            report.max_deviation = report.max_deviation.max(d);
        }
        report.rows.push(row);
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn first_step_values() {
        let r = run_scalar(1).unwrap();
        let (x, p) = r.rows[0].riadukf.unwrap();
        assert!((x - 1.0 / 3.0).abs() < 1e-12 && (p - 2.0 / 3.0).abs() < 1e-12);
        assert!((r.rows[0].kf.0 - 1.0 / 3.0).abs() < 1e-12);
        assert_eq!(r.rows[0].ukfrm.unwrap().1, 0.0);
    }

    #[test]
    fn baseline_stops_at_step_two() {
        let r = run_scalar(20).unwrap();
        assert_eq!(r.ukfrm_failure.as_ref().map(|f| f.0), Some(2));
        assert!(r.ukfrm_positiveness_loss);
        assert!(r.riadukf_failure.is_none());
        assert!(r.max_deviation <= 1e-10);
    }
}
