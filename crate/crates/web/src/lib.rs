//! Browser bindings for the unfolding library. Each entry point takes plain
//! numbers and strings and returns a JSON document for the page to plot.

use serde::Serialize;
use series_unfold::experiment::{run_deconvolve, DeconvolveSetup, KernelShape, TruthShape};
use series_unfold::pi0::{Pi0Experiment, PI0_MASS};
use series_unfold::spectral::{frequency, kernel_spectrum, DEFAULT_ZERO_TOL};
use series_unfold::{diagnose_double_kernel, diagnose_kernel, Axis, ErrorMode, Smoother, StopReason};
use wasm_bindgen::prelude::*;

const DEMO_GRID: (f64, f64, usize) = (-10.0, 10.0, 200);

type Res<T> = Result<T, String>;

fn err(e: impl std::fmt::Display) -> String {
    e.to_string()
}

fn js(r: Res<String>) -> Result<String, JsValue> {
    r.map_err(|e| JsValue::from_str(&e))
}

fn to_json(v: &impl Serialize) -> Res<String> {
    serde_json::to_string(v).map_err(err)
}

fn kernel_shape(kind: &str, param: f64) -> Res<KernelShape> {
    match kind {
        "gauss" => Ok(KernelShape::Gauss(param)),
        "triangle" => Ok(KernelShape::Triangle(param)),
        "uniform" => Ok(KernelShape::Uniform(param)),
        other => Err(err(format!("unknown kernel `{other}`"))),
    }
}

fn demo_axis() -> Res<Axis> {
    Axis::new(DEMO_GRID.0, DEMO_GRID.1, DEMO_GRID.2).map_err(err)
}

#[derive(Serialize)]
struct DeconvolveView {
    centers: Vec<f64>,
    truth: Vec<f64>,
    measured: Vec<f64>,
    recovered: Vec<f64>,
    l1_distance: f64,
    l1_by_iteration: Vec<f64>,
    noise_by_iteration: Vec<f64>,
    selected: usize,
    stop_reason: StopReason,
}

/// Folds a Cauchy truth with the chosen kernel, draws `counts` Poisson
/// entries (0 for exact data) and unfolds with at most `max_iters` terms.
#[wasm_bindgen]
pub fn deconvolve_demo(
    kernel: &str,
    param: f64,
    counts: f64,
    max_iters: u32,
    noise_threshold: f64,
    double_operator: bool,
    seed: u64,
) -> Result<String, JsValue> {
    js(deconvolve_view(
        kernel,
        param,
        counts,
        max_iters,
        noise_threshold,
        double_operator,
        seed,
    ))
}

fn deconvolve_view(
    kernel: &str,
    param: f64,
    counts: f64,
    max_iters: u32,
    noise_threshold: f64,
    double_operator: bool,
    seed: u64,
) -> Res<String> {
    let axis = demo_axis()?;
    let mut setup =
        DeconvolveSetup::from_shapes(axis, kernel_shape(kernel, param)?, TruthShape::Cauchy(1.0)).map_err(err)?;
    setup.counts = (counts > 0.0).then_some(counts);
    setup.seed = seed;
    setup.policy.max_iters = max_iters.max(1) as usize;
    setup.policy.noise_threshold = noise_threshold;
    setup.policy.error_mode = ErrorMode::Gaussian;
    if !double_operator {
        setup.smoother = Smoother::Identity;
    }
    let report = run_deconvolve(&setup).map_err(err)?;
    let width = axis.width();
    let per_unit = |h: &series_unfold::GridHistogram| h.values().to_vec();
    let scale = setup.counts.unwrap_or(1.0) * width;
    to_json(&DeconvolveView {
        centers: axis.centers(),
        truth: per_unit(&report.truth),
        measured: report.measured.bin_contents().iter().map(|v| v / scale).collect(),
        recovered: per_unit(&report.recovered),
        l1_distance: report.l1_distance,
        l1_by_iteration: report.l1_by_iteration,
        noise_by_iteration: report.unfold.trace.iter().map(|t| t.noise_content).collect(),
        selected: report.unfold.selected,
        stop_reason: report.unfold.stop_reason,
    })
}

#[derive(Serialize)]
struct DiagnoseView {
    omega: Vec<f64>,
    single: Vec<f64>,
    double: Vec<f64>,
    single_condition: bool,
    double_condition: bool,
    single_excursion: f64,
    double_excursion: f64,
    zero_frequencies: Vec<f64>,
}

/// Transform moduli of the kernel and of its double operator, ordered by
/// frequency, with the convergence verdicts.
#[wasm_bindgen]
pub fn diagnose_demo(kernel: &str, param: f64) -> Result<String, JsValue> {
    js(diagnose_view(kernel, param))
}

fn diagnose_view(kernel: &str, param: f64) -> Res<String> {
    let axis = demo_axis()?;
    let k = kernel_shape(kernel, param)?
        .build(axis.width(), axis.nbins() - 1)
        .map_err(err)?;
    let single = diagnose_kernel(&k, axis.nbins(), DEFAULT_ZERO_TOL);
    let double = diagnose_double_kernel(&k, axis.nbins(), DEFAULT_ZERO_TOL);
    let m = single.grid_bins;
    let fs = kernel_spectrum(&k, m);
    let ds = kernel_spectrum(&k.autocorrelation(), m);
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| frequency(a, m, axis.width()).total_cmp(&frequency(b, m, axis.width())));
    to_json(&DiagnoseView {
        omega: order.iter().map(|&i| frequency(i, m, axis.width())).collect(),
        single: order.iter().map(|&i| fs[i].re).collect(),
        double: order.iter().map(|&i| ds[i].re).collect(),
        single_condition: single.condition_holds,
        double_condition: double.condition_holds,
        single_excursion: single.max_excursion,
        double_excursion: double.max_excursion,
        zero_frequencies: single.zero_set_frequencies,
    })
}

#[derive(Serialize)]
struct Pi0View {
    eta_centers: Vec<f64>,
    pt_centers: Vec<f64>,
    /// Row-major over (eta, pt), normalized to unit sum.
    truth: Vec<f64>,
    measured: Vec<f64>,
    unfolded: Vec<f64>,
    cauchy: Vec<f64>,
    cauchy_saturation: f64,
    l1_distance: f64,
    selected: usize,
    stop_reason: StopReason,
}

fn unit_sum(v: &[f64]) -> Vec<f64> {
    let total: f64 = v.iter().sum();
    v.iter().map(|x| if total > 0.0 { x / total } else { 0.0 }).collect()
}

/// Simulates `n_events` neutral pion decays, builds the photon response with
/// `n_per_bin` decays per pion bin and unfolds the photon spectrum.
#[wasm_bindgen]
pub fn pi0_demo(n_events: u32, n_per_bin: u32, noise_threshold: f64, seed: u64) -> Result<String, JsValue> {
    js(pi0_view(n_events, n_per_bin, noise_threshold, seed))
}

fn pi0_view(n_events: u32, n_per_bin: u32, noise_threshold: f64, seed: u64) -> Res<String> {
    let mut exp = Pi0Experiment {
        n_events: u64::from(n_events),
        n_per_bin: u64::from(n_per_bin),
        ..Pi0Experiment::default()
    };
    exp.decay.seed = seed;
    exp.policy.noise_threshold = noise_threshold;
    let report = series_unfold::pi0::run_pi0_experiment(&exp).map_err(err)?;
    to_json(&Pi0View {
        eta_centers: exp.binning.eta.centers(),
        pt_centers: exp.binning.pt.centers(),
        truth: unit_sum(report.truth.values()),
        measured: unit_sum(report.measured.values()),
        unfolded: unit_sum(&report.unfolded.bin_contents()),
        cauchy: report.cauchy.indices,
        cauchy_saturation: report.cauchy.saturation,
        l1_distance: report.l1_distance,
        selected: report.unfold.selected,
        stop_reason: report.unfold.stop_reason,
    })
}

/// Pion mass used by the simulation, GeV.
#[wasm_bindgen]
pub fn pion_mass() -> f64 {
    PI0_MASS
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(s: Res<String>) -> serde_json::Value {
        serde_json::from_str(&s.unwrap()).unwrap()
    }

    #[test]
    fn deconvolve_view_has_grid_sized_curves() {
        let v = parse(deconvolve_view("gauss", 1.0, 1e5, 50, 0.3, true, 1));
        for key in ["centers", "truth", "measured", "recovered"] {
            assert_eq!(v[key].as_array().unwrap().len(), DEMO_GRID.2, "{key}");
        }
        assert!(v["l1_distance"].as_f64().unwrap() < 0.5);
    }

    #[test]
    fn uniform_kernel_fails_single_but_not_double_condition() {
        let v = parse(diagnose_view("uniform", 1.0));
        assert_eq!(v["single_condition"], false);
        assert_eq!(v["double_condition"], true);
        let omega: Vec<f64> = serde_json::from_value(v["omega"].clone()).unwrap();
        assert!(omega.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn pi0_view_is_normalized() {
        let v = parse(pi0_view(5000, 300, 0.05, 3));
        let truth: Vec<f64> = serde_json::from_value(v["truth"].clone()).unwrap();
        assert!((truth.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!(!v["cauchy"].as_array().unwrap().is_empty());
    }

    #[test]
    fn unknown_kernel_is_reported() {
        assert!(kernel_shape("lorentz", 1.0).is_err());
    }
}
