#![allow(dead_code)]

use nalgebra::{Complex, DMatrix};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use series_unfold::{Axis, DenseMatrix, FoldingMatrix};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn unit_axis(m: usize) -> Axis {
    Axis::new(0.0, m as f64, m).unwrap()
}

/// Random column-stochastic matrix with extra weight on the diagonal.
pub fn random_stochastic(m: usize, diag: f64, rng: &mut impl Rng) -> FoldingMatrix {
    let mut a = DenseMatrix::zeros(m, m);
    for j in 0..m {
        let mut col: Vec<f64> = (0..m).map(|_| rng.random::<f64>()).collect();
        col[j] += diag * m as f64 * rng.random::<f64>();
        let s: f64 = col.iter().sum();
        for i in 0..m {
            a[(i, j)] = col[i] / s;
        }
    }
    FoldingMatrix::from_entries(a, vec![unit_axis(m)], vec![unit_axis(m)]).unwrap()
}

pub fn to_na(m: &DenseMatrix) -> DMatrix<f64> {
    DMatrix::from_row_slice(m.rows(), m.cols(), m.as_slice())
}

/// Eigenvalues of `I - A`.
pub fn step_eigenvalues(a: &DenseMatrix) -> Vec<Complex<f64>> {
    let n = a.rows();
    let step = DMatrix::<f64>::identity(n, n) - to_na(a);
    step.complex_eigenvalues().iter().copied().collect()
}

/// `sum_{n=0}^{N} (I - A)^n`.
pub fn partial_sum(a: &DMatrix<f64>, terms: usize) -> DMatrix<f64> {
    let n = a.nrows();
    let step = DMatrix::<f64>::identity(n, n) - a;
    let mut power = DMatrix::<f64>::identity(n, n);
    let mut sum = power.clone();
    for _ in 0..terms {
        power = &step * &power;
        sum += &power;
    }
    sum
}

pub fn l1(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum()
}

/// Random mixture of shifted uniform, triangle and Gaussian bumps, sampled
/// on a grid of width `width`.
pub fn random_mixture_kernel(width: f64, rng: &mut impl Rng) -> series_unfold::KernelPdf {
    let parts: Vec<(u8, f64, f64, f64)> = (0..rng.random_range(1..=4))
        .map(|_| {
            (
                rng.random_range(0..3u8),
                rng.random_range(-1.5..1.5),
                rng.random_range(0.2..2.0),
                rng.random_range(0.1..1.0),
            )
        })
        .collect();
    let density = move |x: f64| -> f64 {
        parts
            .iter()
            .map(|&(kind, shift, scale, weight)| {
                let u = (x - shift) / scale;
                weight
                    * match kind {
                        0 => f64::from(u8::from(u.abs() <= 1.0)) / (2.0 * scale),
                        1 => (1.0 - u.abs()).max(0.0) / scale,
                        _ => (-0.5 * u * u).exp() / scale,
                    }
            })
            .sum()
    };
    series_unfold::KernelPdf::from_fn(width, (12.0 / width).ceil() as usize, density).unwrap()
}
