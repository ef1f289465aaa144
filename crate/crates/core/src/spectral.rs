//! Discrete Fourier diagnostics for convolution kernels and the direct
//! Fourier-division deconvolution baseline.
//!
//! Transforms follow `F_k = w * sum_j v_j exp(-2 pi i k j / M)` on an
//! `M`-bin grid of width `w`, so the zero-frequency value is the integral.
//! Frequency bin `k` corresponds to the angular frequency
//! `2 pi k' / (M w)` with `k'` the signed index (`k' = k - M` above `M/2`).
//!
//! The grid check is advisory: a condition that holds on the DFT
//! frequencies can still fail between them.

use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::folding::KernelPdf;
use crate::histogram::{Axis, GridHistogram, HistKind};

/// Default zero-set tolerance, relative to the peak modulus.
pub const DEFAULT_ZERO_TOL: f64 = 1e-9;

/// Moduli below this are treated as exact zeros.
const EXACT_ZERO: f64 = 1e-300;

/// Complex spectrum of a 1-D grid function.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    values: Vec<Complex64>,
    axis: Axis,
    kind: HistKind,
}

impl Spectrum {
    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn axis(&self) -> &Axis {
        &self.axis
    }

    /// Angular frequency of bin `k`.
    pub fn frequency(&self, k: usize) -> f64 {
        frequency(k, self.values.len(), self.axis.width())
    }

    pub fn moduli(&self) -> Vec<f64> {
        self.values.iter().map(|c| c.norm()).collect()
    }
}

/// Signed frequency index of bin `k` on an `m`-point transform.
pub fn signed_index(k: usize, m: usize) -> isize {
    if k <= m / 2 {
        k as isize
    } else {
        k as isize - m as isize
    }
}

/// Angular frequency of bin `k` on an `m`-point grid of bin width `width`.
pub fn frequency(k: usize, m: usize, width: f64) -> f64 {
    2.0 * std::f64::consts::PI * signed_index(k, m) as f64 / (m as f64 * width)
}

fn fft(mut buf: Vec<Complex64>, inverse: bool) -> Vec<Complex64> {
    let mut planner = FftPlanner::new();
    let plan = if inverse {
        planner.plan_fft_inverse(buf.len())
    } else {
        planner.plan_fft_forward(buf.len())
    };
    plan.process(&mut buf);
    buf
}

fn require_1d(h: &GridHistogram) -> Result<Axis> {
    match h.axes() {
        [a] => Ok(*a),
        _ => Err(Error::Unsupported("spectral diagnostics are 1-D only".into())),
    }
}

/// Forward transform of a 1-D histogram.
pub fn dft(h: &GridHistogram) -> Result<Spectrum> {
    let axis = require_1d(h)?;
    let w = axis.width();
    let buf = h.values().iter().map(|&v| Complex64::new(v * w, 0.0)).collect();
    Ok(Spectrum {
        values: fft(buf, false),
        axis,
        kind: h.kind(),
    })
}

/// Inverse of [`dft`]; the imaginary parts are dropped. A counts-kind
/// result that comes back with negative entries is returned as density.
pub fn idft(s: &Spectrum) -> Result<GridHistogram> {
    let m = s.values.len() as f64;
    let w = s.axis.width();
    let values: Vec<f64> = fft(s.values.clone(), true).iter().map(|c| c.re / (m * w)).collect();
    let kind = if values.iter().any(|v| *v < 0.0) {
        HistKind::Density
    } else {
        s.kind
    };
    GridHistogram::new(vec![s.axis], values, kind)
}

/// Transform of a kernel wrapped onto an `m`-point periodic grid with its
/// origin at index 0.
pub fn kernel_spectrum(eta: &KernelPdf, m: usize) -> Vec<Complex64> {
    let w = eta.width();
    let half = eta.half_bins() as isize;
    let mut buf = vec![Complex64::new(0.0, 0.0); m];
    for d in -half..=half {
        let idx = d.rem_euclid(m as isize) as usize;
        buf[idx].re += eta.at_offset(d) * w;
    }
    fft(buf, false)
}

/// Outcome of the convergence check `|1 - F| < 1` away from the zero set.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KernelDiagnosis {
    pub condition_holds: bool,
    /// Largest `|1 - F|` over resolved bins outside the zero set.
    pub max_excursion: f64,
    /// Frequency bins inside the resolved band where `|F|` is below tolerance.
    pub zero_set_bins: Vec<usize>,
    /// Angular frequencies of the zero-set bins.
    pub zero_set_frequencies: Vec<f64>,
    /// Highest signed frequency index whose modulus exceeds the tolerance;
    /// bins beyond it carry no resolvable information and are skipped.
    pub bandwidth_index: usize,
    pub grid_bins: usize,
}

fn diagnose_spectrum(spec: &[Complex64], width: f64, zero_tol: f64) -> KernelDiagnosis {
    let m = spec.len();
    let peak = spec.iter().map(|c| c.norm()).fold(0.0, f64::max);
    let floor = zero_tol * peak;
    let bandwidth = (0..m)
        .filter(|&k| spec[k].norm() > floor)
        .map(|k| signed_index(k, m).unsigned_abs())
        .max()
        .unwrap_or(0);
    let mut max_excursion: f64 = 0.0;
    let mut zero_set_bins = Vec::new();
    for (k, f) in spec.iter().enumerate() {
        if signed_index(k, m).unsigned_abs() > bandwidth {
            continue;
        }
        if f.norm() <= floor {
            zero_set_bins.push(k);
        } else {
            max_excursion = max_excursion.max((Complex64::new(1.0, 0.0) - f).norm());
        }
    }
    let zero_set_frequencies = zero_set_bins.iter().map(|&k| frequency(k, m, width)).collect();
    KernelDiagnosis {
        condition_holds: max_excursion < 1.0,
        max_excursion,
        zero_set_bins,
        zero_set_frequencies,
        bandwidth_index: bandwidth,
        grid_bins: m,
    }
}

/// Checks `|1 - F eta| < 1` on the frequencies of an `grid_bins`-point grid
/// (widened to the kernel length if that is larger).
pub fn diagnose_kernel(eta: &KernelPdf, grid_bins: usize, zero_tol: f64) -> KernelDiagnosis {
    let m = grid_bins.max(eta.samples().len());
    diagnose_spectrum(&kernel_spectrum(eta, m), eta.width(), zero_tol)
}

/// Same check for the double operator, whose kernel is the autocorrelation
/// of `eta` and whose transform is `|F eta|^2`.
pub fn diagnose_double_kernel(eta: &KernelPdf, grid_bins: usize, zero_tol: f64) -> KernelDiagnosis {
    diagnose_kernel(&eta.autocorrelation(), grid_bins, zero_tol)
}

/// How the Fourier division is stabilised.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Regulator {
    /// Plain division.
    None,
    /// Zero every angular frequency above the cutoff.
    Lowpass(f64),
    /// Clamp `|F eta|` from below at `eps` times its peak.
    Floor(f64),
}

/// Deconvolution by dividing transforms: `idft(dft(g) / F eta)`.
///
/// With [`Regulator::None`], frequency bins inside the kernel's resolved
/// band where the transform vanishes raise [`Error::DivisionBlowup`]. Bins
/// beyond the band whose transform is exactly zero are set to zero.
pub fn naive_deconvolve(g: &GridHistogram, eta: &KernelPdf, regulator: Regulator) -> Result<GridHistogram> {
    let axis = require_1d(g)?;
    if (axis.width() - eta.width()).abs() > 1e-9 * axis.width() {
        return Err(Error::Config("kernel and histogram bin widths differ".into()));
    }
    let m = axis.nbins();
    let gs = dft(g)?;
    let ks = kernel_spectrum(eta, m);
    let peak = ks.iter().map(|c| c.norm()).fold(0.0, f64::max);
    let width = axis.width();

    let mut out = Vec::with_capacity(m);
    match regulator {
        Regulator::None | Regulator::Lowpass(_) => {
            let cutoff = match regulator {
                Regulator::Lowpass(c) => c,
                _ => f64::INFINITY,
            };
            let diag = diagnose_spectrum(&ks, width, DEFAULT_ZERO_TOL);
            let blown: Vec<usize> = diag
                .zero_set_bins
                .iter()
                .copied()
                .filter(|&k| frequency(k, m, width).abs() <= cutoff)
                .collect();
            if !blown.is_empty() {
                return Err(Error::DivisionBlowup { bins: blown });
            }
            for k in 0..m {
                let keep = frequency(k, m, width).abs() <= cutoff && ks[k].norm() >= EXACT_ZERO;
                out.push(if keep {
                    gs.values[k] / ks[k]
                } else {
                    Complex64::new(0.0, 0.0)
                });
            }
        }
        Regulator::Floor(eps) => {
            if !(eps > 0.0) {
                return Err(Error::Config("floor regulator needs eps > 0".into()));
            }
            let floor = eps * peak;
            for k in 0..m {
                let f = ks[k];
                let n = f.norm();
                let d = if n >= floor {
                    f
                } else if n > 0.0 {
                    f * (floor / n)
                } else {
                    Complex64::new(floor, 0.0)
                };
                out.push(gs.values[k] / d);
            }
        }
    }
    let spec = Spectrum {
        values: out,
        axis,
        kind: HistKind::Density,
    };
    idft(&spec)
}
