//! Satellite benchmark configuration, read from TOML.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use riukf_core::{PairWeights, SigmaKind};

use crate::CliError;

/// Filter variants compared by the satellite benchmark.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Variant {
    #[serde(rename = "RiMiAuUKF")]
    MiAu,
    #[serde(rename = "RiRhoMiAuUKF")]
    RhoMiAu,
    #[serde(rename = "RiMiSyAuUKF")]
    MiSyAu,
    #[serde(rename = "RiHoMiSyAuUKF")]
    HoMiSyAu,
    #[serde(rename = "RiMiAdUKF")]
    MiAd,
    #[serde(rename = "RiRhoMiAdUKF")]
    RhoMiAd,
    #[serde(rename = "RiMiSyAdUKF")]
    MiSyAd,
    #[serde(rename = "RiHoMiSyAdUKF")]
    HoMiSyAd,
    #[serde(rename = "UKFRM")]
    Ukfrm,
}

impl Variant {
    pub const ALL: [Variant; 9] = [
        Variant::MiAu,
        Variant::RhoMiAu,
        Variant::MiSyAu,
        Variant::HoMiSyAu,
        Variant::MiAd,
        Variant::RhoMiAd,
        Variant::MiSyAd,
        Variant::HoMiSyAd,
        Variant::Ukfrm,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Variant::MiAu => "RiMiAuUKF",
            Variant::RhoMiAu => "RiRhoMiAuUKF",
            Variant::MiSyAu => "RiMiSyAuUKF",
            Variant::HoMiSyAu => "RiHoMiSyAuUKF",
            Variant::MiAd => "RiMiAdUKF",
            Variant::RhoMiAd => "RiRhoMiAdUKF",
            Variant::MiSyAd => "RiMiSyAdUKF",
            Variant::HoMiSyAd => "RiHoMiSyAdUKF",
            Variant::Ukfrm => "UKFRM",
        }
    }

    /// Sigma representation; `None` for the baseline, which fixes its own.
    pub fn kind(self, rho: f64) -> Option<SigmaKind> {
        match self {
            Variant::MiAu | Variant::MiAd => Some(SigmaKind::Minimum),
            Variant::RhoMiAu | Variant::RhoMiAd => Some(SigmaKind::RhoMinimum(rho)),
            Variant::MiSyAu | Variant::MiSyAd => Some(SigmaKind::MinimumSymmetric(PairWeights::Linear)),
            Variant::HoMiSyAu | Variant::HoMiSyAd => Some(SigmaKind::HomogeneousMinimumSymmetric),
            Variant::Ukfrm => None,
        }
    }

    pub fn is_augmented(self) -> bool {
        matches!(self, Variant::MiAu | Variant::RhoMiAu | Variant::MiSyAu | Variant::HoMiSyAu)
    }

    pub fn is_baseline(self) -> bool {
        self == Variant::Ukfrm
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Variant {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Variant::ALL
            .into_iter()
            .find(|v| v.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| CliError::Config(format!("unknown filter variant {s:?}")))
    }
}

/// Angular velocity profile of the simulated satellite.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OmegaProfile {
    /// `0.03·sin([πt/600]° − φ)` with `φ ∈ {0°, 300°, 600°}`, arguments in degrees.
    SineDegrees,
    /// The same expression with every argument read in radians.
    SineRadians,
    Constant([f64; 3]),
    Zero,
}

impl OmegaProfile {
    pub fn omega(&self, t: f64) -> [f64; 3] {
        let phases = [0.0, 300.0, 600.0];
        match self {
            OmegaProfile::SineDegrees => {
                phases.map(|p: f64| 0.03 * (std::f64::consts::PI * t / 600.0 - p).to_radians().sin())
            }
            OmegaProfile::SineRadians => phases.map(|p: f64| 0.03 * (std::f64::consts::PI * t / 600.0 - p).sin()),
            OmegaProfile::Constant(w) => *w,
            OmegaProfile::Zero => [0.0; 3],
        }
    }
}

fn default_q0() -> [f64; 4] {
    let (a, b, c) = (0.96f64, 0.13f64, 0.19f64);
    [a, b, c, (1.0 - a * a - b * b - c * c).sqrt()]
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SatelliteConfig {
    /// Sampling period in seconds.
    pub dt: f64,
    /// Simulated interval in seconds.
    pub duration: f64,
    pub num_runs: usize,
    pub seed: u64,
    /// Process noise variance per axis.
    pub q_scale: f64,
    /// Measurement noise variance per axis.
    pub r_scale: f64,
    /// Initial attitude `[η, ε₁, ε₂, ε₃]`.
    pub q0: [f64; 4],
    /// Initial covariance, row-major.
    pub p0: [[f64; 3]; 3],
    pub omega: OmegaProfile,
    pub rho: f64,
    pub karcher_tol: f64,
    pub karcher_max_iter: usize,
    pub reuse_sigma: bool,
    /// Write the per-step trajectory CSV.
    pub trajectories: bool,
    pub filters: Vec<Variant>,
}

impl Default for SatelliteConfig {
    fn default() -> Self {
        let p = 1e-6;
        Self {
            dt: 0.1,
            duration: 20.0,
            num_runs: 100,
            seed: 2024,
            q_scale: 0.31236e-6f64.powi(2),
            r_scale: (0.5 * std::f64::consts::PI / 180.0 * 1e-6f64).powi(2),
            q0: default_q0(),
            p0: [[p, 0.0, 0.0], [0.0, p, 0.0], [0.0, 0.0, p]],
            omega: OmegaProfile::SineDegrees,
            rho: 0.5,
            karcher_tol: 1e-6,
            karcher_max_iter: 200,
            reuse_sigma: false,
            trajectories: true,
            filters: Variant::ALL.to_vec(),
        }
    }
}

impl SatelliteConfig {
    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        let cfg: Self = toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Io(path.display().to_string(), e))?;
        Self::from_toml(&text)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let bad = |m: String| Err(CliError::Config(m));
        if !(self.dt > 0.0) {
            return bad(format!("dt must be positive, got {}", self.dt));
        }
        if !(self.duration >= self.dt) {
            return bad(format!("duration {} is shorter than dt {}", self.duration, self.dt));
        }
        let n: f64 = self.q0.iter().map(|x| x * x).sum::<f64>().sqrt();
        if (n - 1.0).abs() > 1e-9 {
            return bad(format!("q0 must be a unit quaternion, norm is {n}"));
        }
        if self.q_scale < 0.0 || self.r_scale < 0.0 {
            return bad("noise variances must be non-negative".into());
        }
        if !(self.rho > 0.0) {
            return bad(format!("rho must be positive, got {}", self.rho));
        }
        if !(self.karcher_tol > 0.0) || self.karcher_max_iter == 0 {
            return bad("Karcher tolerance and iteration limit must be positive".into());
        }
        if self.filters.is_empty() {
            return bad("no filters selected".into());
        }
        Ok(())
    }

    /// Number of filter steps, `round(duration / dt)`.
    pub fn steps(&self) -> usize {
        (self.duration / self.dt).round() as usize
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }
}
