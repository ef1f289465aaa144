//! Run configuration: one TOML table per subcommand, every key optional.

use std::path::Path;

use serde::{Deserialize, Serialize};
use series_unfold::{Axis, Error, ErrorMode, StoppingPolicy};

use crate::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Grid {
    pub lo: f64,
    pub hi: f64,
    pub nbins: usize,
}

impl Default for Grid {
    fn default() -> Self {
        Self {
            lo: -15.0,
            hi: 15.0,
            nbins: 300,
        }
    }
}

impl Grid {
    pub fn axis(&self) -> Result<Axis, CliError> {
        Ok(Axis::new(self.lo, self.hi, self.nbins)?)
    }
}

/// Stopping and smoothing keys shared by the unfolding commands; they sit
/// directly in each command's table.
pub trait PolicyKeys {
    fn policy_mut(&mut self) -> (&mut f64, &mut usize, &mut f64, &mut ErrorMode, &mut String);

    fn stopping(&self) -> StoppingPolicy;
}

macro_rules! policy_keys {
    ($t:ty) => {
        impl PolicyKeys for $t {
            fn policy_mut(&mut self) -> (&mut f64, &mut usize, &mut f64, &mut ErrorMode, &mut String) {
                (
                    &mut self.noise_threshold,
                    &mut self.max_iters,
                    &mut self.cauchy_limit,
                    &mut self.error_mode,
                    &mut self.smoother,
                )
            }

            fn stopping(&self) -> StoppingPolicy {
                StoppingPolicy {
                    noise_threshold: self.noise_threshold,
                    max_iters: self.max_iters,
                    cauchy_limit: self.cauchy_limit,
                    error_mode: self.error_mode,
                }
            }
        }
    };
}

policy_keys!(Deconvolve);
policy_keys!(Unfold);
policy_keys!(SimulatePi0);

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Deconvolve {
    pub grid: Grid,
    /// `gauss(SIGMA)`, `triangle(W)`, `uniform(HALF_WIDTH)` or `file:PATH`.
    pub kernel: String,
    /// `cauchy(GAMMA)` or `file:PATH`.
    pub truth: String,
    /// Expected total counts of the Poisson-noised data.
    pub counts: f64,
    /// Skip the Poisson noise and unfold the exact folded density.
    pub noiseless: bool,
    pub seed: u64,
    pub noise_threshold: f64,
    pub max_iters: usize,
    pub cauchy_limit: f64,
    pub error_mode: ErrorMode,
    /// `identity`, `parity` or `gaussian:SIGMA`.
    pub smoother: String,
}

impl Default for Deconvolve {
    fn default() -> Self {
        let d = StoppingPolicy::default();
        Self {
            grid: Grid::default(),
            kernel: "gauss(1)".into(),
            truth: "cauchy(1)".into(),
            counts: 1e6,
            noiseless: false,
            seed: 1,
            noise_threshold: d.noise_threshold,
            max_iters: d.max_iters,
            cauchy_limit: d.cauchy_limit,
            error_mode: d.error_mode,
            smoother: "parity".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Unfold {
    /// Histogram CSV of the measured data.
    pub measured: String,
    /// Folding-matrix file (`.csv` or `.bin`), or `cpdf:gauss(SIGMA)` for a
    /// Gaussian response on the measured grid.
    pub response: String,
    pub quadrature_order: usize,
    pub noise_threshold: f64,
    pub max_iters: usize,
    pub cauchy_limit: f64,
    pub error_mode: ErrorMode,
    /// `identity`, `parity` or `gaussian:SIGMA`.
    pub smoother: String,
}

impl Default for Unfold {
    fn default() -> Self {
        let d = StoppingPolicy::default();
        Self {
            measured: "measured.csv".into(),
            response: "response.csv".into(),
            quadrature_order: 4,
            noise_threshold: d.noise_threshold,
            max_iters: d.max_iters,
            cauchy_limit: d.cauchy_limit,
            error_mode: d.error_mode,
            smoother: "identity".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Diagnose {
    pub grid: Grid,
    pub kernel: String,
    pub zero_tol: f64,
}

impl Default for Diagnose {
    fn default() -> Self {
        Self {
            grid: Grid::default(),
            kernel: "gauss(1)".into(),
            zero_tol: series_unfold::spectral::DEFAULT_ZERO_TOL,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CauchyTest {
    /// Measured histogram; when empty the photon spectrum of the
    /// `simulate_pi0` table is generated instead.
    pub measured: String,
    pub response: String,
    pub orders: usize,
    pub smoother: String,
}

impl Default for CauchyTest {
    fn default() -> Self {
        Self {
            measured: String::new(),
            response: String::new(),
            orders: 50,
            smoother: "identity".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimulatePi0 {
    pub mass: f64,
    pub sigma_y: f64,
    pub t_slope: f64,
    pub seed: u64,
    pub n_events: u64,
    pub eta_lo: f64,
    pub eta_hi: f64,
    pub eta_bins: usize,
    pub pt_lo: f64,
    pub pt_hi: f64,
    pub pt_bins: usize,
    /// Relative photon energy resolution; 0 disables energy smearing.
    pub energy_resolution: f64,
    /// Photon angular resolution in radians; 0 disables it.
    pub angle_resolution: f64,
    pub n_per_bin: u64,
    pub slices: Vec<f64>,
    pub cauchy_orders: usize,
    pub noise_threshold: f64,
    pub max_iters: usize,
    pub cauchy_limit: f64,
    pub error_mode: ErrorMode,
    /// `identity`, `parity` or `gaussian:SIGMA`.
    pub smoother: String,
}

impl Default for SimulatePi0 {
    fn default() -> Self {
        let exp = series_unfold::pi0::Pi0Experiment::default();
        let d = StoppingPolicy::default();
        let (eta, pt) = (exp.binning.eta, exp.binning.pt);
        Self {
            mass: exp.decay.mass,
            sigma_y: exp.decay.sigma_y,
            t_slope: exp.decay.t_slope,
            seed: exp.decay.seed,
            n_events: exp.n_events,
            eta_lo: eta.lo(),
            eta_hi: eta.hi(),
            eta_bins: eta.nbins(),
            pt_lo: pt.lo(),
            pt_hi: pt.hi(),
            pt_bins: pt.nbins(),
            energy_resolution: 0.0,
            angle_resolution: 0.0,
            n_per_bin: exp.n_per_bin,
            slices: exp.slices,
            cauchy_orders: exp.cauchy_orders,
            noise_threshold: exp.policy.noise_threshold,
            max_iters: d.max_iters,
            cauchy_limit: d.cauchy_limit,
            error_mode: d.error_mode,
            smoother: "identity".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VerifyCondition {
    pub grid: Grid,
    /// Kernel of a translation-invariant response, or empty to use `response`.
    pub kernel: String,
    pub response: String,
    pub smoother: String,
    pub max_order: usize,
}

impl Default for VerifyCondition {
    fn default() -> Self {
        Self {
            grid: Grid::default(),
            kernel: "gauss(1)".into(),
            response: String::new(),
            smoother: "parity".into(),
            max_order: 50,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub deconvolve: Deconvolve,
    pub unfold: Unfold,
    pub diagnose: Diagnose,
    pub cauchy_test: CauchyTest,
    pub simulate_pi0: SimulatePi0,
    pub verify_condition: VerifyCondition,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(Error::from)?;
        toml::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
    }

    pub fn to_toml(&self) -> Result<String, CliError> {
        toml::to_string(self).map_err(|e| CliError::Config(e.to_string()))
    }
}
