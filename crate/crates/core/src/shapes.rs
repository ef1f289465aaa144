//! Standard kernels and test densities.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::folding::{Cpdf, GaussianCpdf, KernelPdf};
use crate::histogram::Axis;

/// Number of half-width bins needed to cover `support` on each side.
pub fn half_bins_for(support: f64, width: f64) -> usize {
    (support / width).ceil().max(0.0) as usize
}

/// Gaussian kernel with standard deviation `sigma`, cut at 8 sigma (or
/// `max_half_bins`, whichever is smaller). Each bin holds the exact normal
/// probability of that bin, so the kernel matrix coincides with the folding
/// matrix of a Gaussian conditional density sampled at bin centres.
pub fn gauss_kernel(sigma: f64, width: f64, max_half_bins: usize) -> Result<KernelPdf> {
    if !(sigma > 0.0) {
        return Err(Error::Config(format!("gauss sigma must be positive, got {sigma}")));
    }
    let half = half_bins_for(8.0 * sigma, width).min(max_half_bins);
    let axis = Axis::centered(width, half)?;
    let cpdf = GaussianCpdf { sigma };
    let masses: Vec<f64> = (0..axis.nbins())
        .map(|k| {
            let d = k as f64 - half as f64;
            cpdf.bin_mass((d - 0.5) * width, (d + 0.5) * width, 0.0).unwrap_or(0.0)
        })
        .collect();
    let total: f64 = masses.iter().sum();
    KernelPdf::new(axis, masses.iter().map(|m| m / (total * width)).collect())
}

/// Triangle kernel `(W - |x|) / W^2` on `|x| < W`.
pub fn triangle_kernel(half_width: f64, width: f64, max_half_bins: usize) -> Result<KernelPdf> {
    if !(half_width > 0.0) {
        return Err(Error::Config(format!("triangle W must be positive, got {half_width}")));
    }
    let half = half_bins_for(half_width, width).min(max_half_bins);
    KernelPdf::from_fn(width, half, |x| {
        ((half_width - x.abs()) / (half_width * half_width)).max(0.0)
    })
}

/// Uniform kernel on `[-half_width, half_width]`.
pub fn uniform_kernel(half_width: f64, width: f64, max_half_bins: usize) -> Result<KernelPdf> {
    if !(half_width > 0.0) {
        return Err(Error::Config(format!(
            "rectangle half-width must be positive, got {half_width}"
        )));
    }
    let half = half_bins_for(half_width, width).min(max_half_bins);
    let tol = 1e-9 * width;
    KernelPdf::from_fn(width, half, |x| if x.abs() <= half_width + tol { 1.0 } else { 0.0 })
}

/// Cauchy density with scale `gamma`, centred on zero.
pub fn cauchy_pdf(x: f64, gamma: f64) -> f64 {
    gamma / (PI * (x * x + gamma * gamma))
}

/// Exact Cauchy probability of every bin of `axis`.
pub fn cauchy_bin_masses(gamma: f64, axis: &Axis) -> Vec<f64> {
    (0..axis.nbins())
        .map(|i| ((axis.edge(i + 1) / gamma).atan() - (axis.edge(i) / gamma).atan()) / PI)
        .collect()
}

/// Exact probability of every bin for a centred normal distribution.
pub fn gauss_bin_masses(sigma: f64, axis: &Axis) -> Vec<f64> {
    let cdf = |x: f64| 0.5 * libm::erfc(-x / (sigma * std::f64::consts::SQRT_2));
    (0..axis.nbins())
        .map(|i| cdf(axis.edge(i + 1)) - cdf(axis.edge(i)))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn triangle_values() {
        let k = triangle_kernel(2.0, 0.5, 100).unwrap();
        assert_eq!(k.half_bins(), 4);
        assert_eq!(k.at_offset(4), 0.0);
        assert!((k.at_offset(0) - 0.5).abs() < 1e-12);
        assert!((k.at_offset(2) - 0.25).abs() < 1e-12);
    }

    #[test]
    fn gauss_is_symmetric_and_cut() {
        let k = gauss_kernel(1.0, 0.1, 1000).unwrap();
        assert_eq!(k.half_bins(), 80);
        assert_eq!(k.parity_reflect(), k);
        assert_eq!(gauss_kernel(1.0, 0.1, 30).unwrap().half_bins(), 30);
    }

    #[test]
    fn cauchy_masses_sum_to_grid_probability() {
        let axis = Axis::new(-15.0, 15.0, 300).unwrap();
        let total: f64 = cauchy_bin_masses(1.0, &axis).iter().sum();
        let expected = 2.0 * 15f64.atan() / PI;
        assert!((total - expected).abs() < 1e-12);
    }

    #[test]
    fn gauss_masses_match_erf() {
        let axis = Axis::new(-5.0, 5.0, 100).unwrap();
        let m = gauss_bin_masses(1.0, &axis);
        let centre = axis.index(0.0).unwrap();
        let expected = libm::erf(0.1 / std::f64::consts::SQRT_2) / 2.0;
        assert!((m[centre] - expected).abs() < 1e-15);
    }
}
