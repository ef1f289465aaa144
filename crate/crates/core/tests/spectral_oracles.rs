#![allow(clippy::needless_range_loop)]

mod common;

use common::*;
use proptest::prelude::*;
use series_unfold::shapes::gauss_kernel;
use series_unfold::spectral::{dft, frequency, kernel_spectrum, DEFAULT_ZERO_TOL};
use series_unfold::{
    diagnose_double_kernel, matrix_from_kernel, naive_deconvolve, Axis, GridHistogram, HistKind, KernelPdf, Regulator,
};

#[test]
fn sampled_gauss_transform_matches_closed_form() {
    let axis = Axis::new(-20.0, 20.0, 1024).unwrap();
    let norm = (2.0 * std::f64::consts::PI).sqrt();
    let values: Vec<f64> = axis.centers().iter().map(|x| (-0.5 * x * x).exp() / norm).collect();
    let spec = dft(&GridHistogram::new(vec![axis], values, HistKind::Density).unwrap()).unwrap();
    let mut checked = 0;
    for (k, m) in spec.moduli().iter().enumerate() {
        let omega = spec.frequency(k);
        if omega.abs() <= 5.0 {
            assert!((m - (-0.5 * omega * omega).exp()).abs() < 1e-4, "omega {omega}: {m}");
            checked += 1;
        }
    }
    assert!(checked > 60);
}

#[test]
fn noiseless_gauss_division_recovers_interior_truth() {
    let axis = Axis::new(-20.0, 20.0, 80).unwrap();
    let eta = gauss_kernel(1.0, axis.width(), 79).unwrap();
    let truth: Vec<f64> = axis
        .centers()
        .iter()
        .map(|x| (-x * x / 8.0).exp() + 0.5 * (-(x - 3.0).powi(2)).exp())
        .collect();
    let total: f64 = truth.iter().sum();
    let truth: Vec<f64> = truth.iter().map(|v| v / total).collect();
    let folded = matrix_from_kernel(&eta, &axis).unwrap().apply_values(&truth).unwrap();
    let g = GridHistogram::from_contents(vec![axis], &folded).unwrap();
    let out = naive_deconvolve(&g, &eta, Regulator::None).unwrap();
    assert!(l1(&out.bin_contents(), &truth) < 1e-6);
}

fn interior_density(axis: &Axis, seed: u64) -> Vec<f64> {
    use rand::Rng;
    let mut r = rng(seed);
    let m = axis.nbins();
    (0..m)
        .map(|i| {
            if i >= m / 4 && i < 3 * m / 4 {
                r.random::<f64>()
            } else {
                0.0
            }
        })
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn folding_multiplies_transforms(seed in any::<u64>()) {
        let axis = Axis::new(-64.0, 64.0, 512).unwrap();
        let eta = random_mixture_kernel(axis.width(), &mut rng(seed));
        let f = interior_density(&axis, seed ^ 0x5eed);
        let a = matrix_from_kernel(&eta, &axis).unwrap();
        let lhs = dft(&GridHistogram::from_contents(vec![axis], &a.apply_values(&f).unwrap()).unwrap()).unwrap();
        let fs = dft(&GridHistogram::from_contents(vec![axis], &f).unwrap()).unwrap();
        let ks = kernel_spectrum(&eta, axis.nbins());
        let peak = lhs.moduli().into_iter().fold(0.0, f64::max);
        for k in 0..axis.nbins() {
            let rhs = ks[k] * fs.values()[k];
            prop_assert!((lhs.values()[k] - rhs).norm() <= 1e-6 * peak);
        }
    }

    #[test]
    fn density_spectra_bounded_by_one(values in prop::collection::vec(0.0f64..1.0, 2..200)) {
        prop_assume!(values.iter().sum::<f64>() > 0.0);
        let axis = Axis::new(0.0, 1.0, values.len()).unwrap();
        let h = GridHistogram::new(vec![axis], values, HistKind::Counts).unwrap().normalize().unwrap();
        for m in dft(&h).unwrap().moduli() {
            prop_assert!(m <= 1.0 + 1e-9);
        }
    }

    #[test]
    fn double_kernel_always_admissible(seed in any::<u64>(), grid in 64usize..512) {
        let eta = random_mixture_kernel(0.1, &mut rng(seed));
        let d = diagnose_double_kernel(&eta, grid, DEFAULT_ZERO_TOL);
        prop_assert!(d.condition_holds, "max excursion {}", d.max_excursion);
    }

    #[test]
    fn autocorrelation_transform_is_real(samples in prop::collection::vec(0.0f64..1.0, 1..20usize).prop_filter("odd", |v| v.len() % 2 == 1)) {
        prop_assume!(samples.iter().sum::<f64>() > 0.0);
        let half = samples.len() / 2;
        let w = 0.25;
        let total: f64 = samples.iter().sum::<f64>() * w;
        let eta = KernelPdf::new(Axis::centered(w, half).unwrap(), samples.iter().map(|v| v / total).collect()).unwrap();
        let spec = kernel_spectrum(&eta.autocorrelation(), 4 * samples.len() + 1);
        let peak = spec.iter().map(|c| c.norm()).fold(0.0, f64::max);
        for c in &spec {
            prop_assert!(c.im.abs() < 1e-8 * peak);
            prop_assert!(c.re >= -1e-8 * peak);
        }
    }
}

#[test]
fn triangle_zeros_sit_at_multiples_of_pi() {
    let axis = Axis::new(-15.0, 15.0, 300).unwrap();
    let eta = series_unfold::shapes::triangle_kernel(2.0, axis.width(), 299).unwrap();
    let d = series_unfold::diagnose_kernel(&eta, axis.nbins(), DEFAULT_ZERO_TOL);
    assert!(!d.zero_set_bins.is_empty());
    for (&k, &omega) in d.zero_set_bins.iter().zip(&d.zero_set_frequencies) {
        assert!((omega - frequency(k, axis.nbins(), axis.width())).abs() < 1e-12);
        let ratio = omega / std::f64::consts::PI;
        assert!(
            (ratio - ratio.round()).abs() < 1e-9 && ratio.round() != 0.0,
            "omega {omega}"
        );
    }
}
