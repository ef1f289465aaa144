//! Synthetic deconvolution experiments: a known truth on a grid is folded
//! with a kernel, optionally Poisson-sampled, and recovered by the series.

use std::fmt;
use std::str::FromStr;

use rand_distr::{Distribution, Poisson};

use crate::error::{Error, Result};
use crate::folding::{matrix_from_kernel, substream, FoldingMatrix, KernelPdf};
use crate::histogram::{Axis, GridHistogram, HistKind};
use crate::pi0::derive_seed;
use crate::shapes::{cauchy_bin_masses, gauss_kernel, triangle_kernel, uniform_kernel};
use crate::spectral::{naive_deconvolve, Regulator};
use crate::unfold::{run_unfold_observed, Smoother, StoppingPolicy, UnfoldReport};

/// Parametric kernel family, written as `gauss(SIGMA)`, `triangle(W)` or
/// `uniform(HALF_WIDTH)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum KernelShape {
    Gauss(f64),
    Triangle(f64),
    Uniform(f64),
}

impl KernelShape {
    /// Samples the kernel with bin width `width`, using at most
    /// `max_half_bins` bins on either side of the origin.
    pub fn build(&self, width: f64, max_half_bins: usize) -> Result<KernelPdf> {
        match *self {
            KernelShape::Gauss(s) => gauss_kernel(s, width, max_half_bins),
            KernelShape::Triangle(w) => triangle_kernel(w, width, max_half_bins),
            KernelShape::Uniform(h) => uniform_kernel(h, width, max_half_bins),
        }
    }
}

fn parse_call(s: &str) -> Result<(&str, f64)> {
    let s = s.trim();
    let open = s
        .find('(')
        .ok_or_else(|| Error::Config(format!("expected NAME(VALUE), got `{s}`")))?;
    let inner = s[open + 1..]
        .strip_suffix(')')
        .ok_or_else(|| Error::Config(format!("missing `)` in `{s}`")))?;
    let value = inner
        .trim()
        .parse::<f64>()
        .map_err(|e| Error::Config(format!("bad parameter in `{s}`: {e}")))?;
    Ok((&s[..open], value))
}

impl FromStr for KernelShape {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match parse_call(s)? {
            ("gauss", v) => Ok(KernelShape::Gauss(v)),
            ("triangle", v) => Ok(KernelShape::Triangle(v)),
            ("uniform", v) => Ok(KernelShape::Uniform(v)),
            (name, _) => Err(Error::Config(format!("unknown kernel `{name}`"))),
        }
    }
}

impl fmt::Display for KernelShape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            KernelShape::Gauss(v) => write!(f, "gauss({v})"),
            KernelShape::Triangle(v) => write!(f, "triangle({v})"),
            KernelShape::Uniform(v) => write!(f, "uniform({v})"),
        }
    }
}

/// Parametric truth density, written as `cauchy(GAMMA)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TruthShape {
    Cauchy(f64),
}

impl TruthShape {
    /// Probability of each grid bin.
    pub fn bin_masses(&self, axis: &Axis) -> Result<Vec<f64>> {
        match *self {
            TruthShape::Cauchy(g) if g > 0.0 => Ok(cauchy_bin_masses(g, axis)),
            TruthShape::Cauchy(g) => Err(Error::Config(format!("cauchy scale must be positive, got {g}"))),
        }
    }
}

impl FromStr for TruthShape {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match parse_call(s)? {
            ("cauchy", v) => Ok(TruthShape::Cauchy(v)),
            (name, _) => Err(Error::Config(format!("unknown truth `{name}`"))),
        }
    }
}

impl fmt::Display for TruthShape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TruthShape::Cauchy(v) => write!(f, "cauchy({v})"),
        }
    }
}

/// A fully specified synthetic deconvolution problem.
#[derive(Debug, Clone, PartialEq)]
pub struct DeconvolveSetup {
    pub axis: Axis,
    pub kernel: KernelPdf,
    /// Probability of each grid bin under the truth.
    pub truth: Vec<f64>,
    /// Expected number of entries; `None` for exact (noiseless) data.
    pub counts: Option<f64>,
    pub seed: u64,
    /// Smoother applied before the series; the mirrored kernel gives the
    /// double operator.
    pub smoother: Smoother,
    pub policy: StoppingPolicy,
}

impl DeconvolveSetup {
    /// The standard setup for a parametric kernel and truth.
    pub fn from_shapes(axis: Axis, kernel: KernelShape, truth: TruthShape) -> Result<Self> {
        let kernel = kernel.build(axis.width(), axis.nbins().saturating_sub(1))?;
        Ok(Self {
            axis,
            smoother: Smoother::ParityKernel(kernel.clone()),
            kernel,
            truth: truth.bin_masses(&axis)?,
            counts: None,
            seed: 1,
            policy: StoppingPolicy::default(),
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DeconvolveReport {
    /// Truth as a density on the grid.
    pub truth: GridHistogram,
    /// Folded data: counts when noised, exact folded density otherwise.
    pub measured: GridHistogram,
    /// Recovered density on the grid (unit scale, comparable to `truth`).
    pub recovered: GridHistogram,
    pub response: FoldingMatrix,
    pub unfold: UnfoldReport,
    /// `sum_i |p_i - q_i|` between recovered and true bin probabilities.
    pub l1_distance: f64,
    /// The same distance for every computed series term.
    pub l1_by_iteration: Vec<f64>,
}

/// Sum of absolute differences.
pub fn l1_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum()
}

/// Folds the truth and, when requested, draws Poisson counts around it.
pub fn synthesize(setup: &DeconvolveSetup) -> Result<(FoldingMatrix, GridHistogram)> {
    let response = matrix_from_kernel(&setup.kernel, &setup.axis)?;
    let folded = response.apply_values(&setup.truth)?;
    let measured = match setup.counts {
        None => GridHistogram::from_contents(vec![setup.axis], &folded)?,
        Some(n) if !(n > 0.0) || !n.is_finite() => {
            return Err(Error::DegenerateInput(format!(
                "total counts must be positive, got {n}"
            )))
        }
        Some(n) => {
            let mut rng = substream(derive_seed(setup.seed, 3), 0);
            let values = folded
                .iter()
                .map(|&p| {
                    let lambda = n * p;
                    if lambda > 0.0 {
                        Poisson::new(lambda).map(|d| d.sample(&mut rng)).unwrap_or(0.0)
                    } else {
                        0.0
                    }
                })
                .collect();
            GridHistogram::new(vec![setup.axis], values, HistKind::Counts)?
        }
    };
    Ok((response, measured))
}

/// Runs the full synthetic deconvolution.
pub fn run_deconvolve(setup: &DeconvolveSetup) -> Result<DeconvolveReport> {
    let (response, measured) = synthesize(setup)?;
    let scale = setup.counts.unwrap_or(1.0);
    let mut l1_by_iteration = Vec::new();
    let unfold = run_unfold_observed(&measured, &response, &setup.smoother, &setup.policy, |s| {
        let rec: Vec<f64> = s.estimate.iter().map(|v| v / scale).collect();
        l1_by_iteration.push(l1_distance(&rec, &setup.truth));
    })?;
    let recovered: Vec<f64> = unfold.estimate.iter().map(|v| v / scale).collect();
    Ok(DeconvolveReport {
        truth: GridHistogram::from_contents(vec![setup.axis], &setup.truth)?,
        l1_distance: l1_distance(&recovered, &setup.truth),
        recovered: GridHistogram::from_contents(vec![setup.axis], &recovered)?,
        measured,
        response,
        unfold,
        l1_by_iteration,
    })
}

/// Direct Fourier division of the synthesized data, with its L1 distance
/// from the truth.
pub fn run_naive(setup: &DeconvolveSetup, regulator: Regulator) -> Result<(GridHistogram, f64)> {
    let (_, measured) = synthesize(setup)?;
    let scale = setup.counts.unwrap_or(1.0);
    let out = naive_deconvolve(&measured, &setup.kernel, regulator)?;
    let recovered: Vec<f64> = out.bin_contents().iter().map(|v| v / scale).collect();
    let l1 = l1_distance(&recovered, &setup.truth);
    Ok((GridHistogram::from_contents(vec![setup.axis], &recovered)?, l1))
}
