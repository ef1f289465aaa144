use std::fs;
use std::path::{Path, PathBuf};

use serde_json::json;
use series_unfold::experiment::{DeconvolveSetup, KernelShape, TruthShape};
use series_unfold::folding::GaussianCpdf;
use series_unfold::pi0::{
    build_gamma_response, derive_seed, generate_events, run_pi0_experiment, DecayConfig, MomentumBinning,
    Pi0Experiment, ResolutionModel,
};
use series_unfold::spectral::kernel_spectrum;
use series_unfold::unfold::{cauchy_trace, verify_condition};
use series_unfold::{
    diagnose_double_kernel, diagnose_kernel, matrix_from_cpdf, matrix_from_kernel, run_unfold, Axis, Error,
    FoldingMatrix, GridHistogram, KernelPdf, Smoother, StopReason, UnfoldReport,
};

use crate::config::{self, PolicyKeys, RunConfig};
use crate::CliError;

/// Output directory writer.
pub struct Output {
    dir: PathBuf,
}

impl Output {
    pub fn create(dir: &Path) -> Result<Self, CliError> {
        fs::create_dir_all(dir).map_err(Error::from)?;
        Ok(Self { dir: dir.to_path_buf() })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }

    pub fn text(&self, name: &str, contents: &str) -> Result<(), CliError> {
        fs::write(self.path(name), contents).map_err(Error::from)?;
        Ok(())
    }

    pub fn histogram(&self, name: &str, h: &GridHistogram) -> Result<(), CliError> {
        self.text(name, &h.to_csv_string())
    }

    pub fn json(&self, name: &str, value: &impl serde::Serialize) -> Result<(), CliError> {
        let mut s = serde_json::to_string_pretty(value).map_err(Error::from)?;
        s.push('\n');
        self.text(name, &s)
    }

    pub fn matrix(&self, name: &str, a: &FoldingMatrix) -> Result<(), CliError> {
        a.save(&self.path(name))?;
        Ok(())
    }

    pub fn report(&self, name: &str, report: &UnfoldReport, estimate_ref: &str) -> Result<(), CliError> {
        let mut s = report.to_json(estimate_ref)?;
        s.push('\n');
        self.text(name, &s)
    }
}

/// Turns a Cauchy stop into the divergence exit status once the artifacts
/// are on disk.
fn finish(report: &UnfoldReport) -> Result<(), CliError> {
    match report.stop_reason {
        StopReason::CauchyViolation => Err(CliError::Diverged(format!(
            "Cauchy index reached the limit at iteration {}",
            report.trace.last().map_or(0, |t| t.n)
        ))),
        _ => Ok(()),
    }
}

fn read_histogram(path: &str) -> Result<GridHistogram, CliError> {
    let file = fs::File::open(path).map_err(|e| CliError::Io(format!("{path}: {e}")))?;
    Ok(GridHistogram::read_csv(std::io::BufReader::new(file))?)
}

fn load_matrix(path: &str) -> Result<FoldingMatrix, CliError> {
    if !Path::new(path).exists() {
        return Err(CliError::Io(format!("{path}: file not found")));
    }
    Ok(FoldingMatrix::load(Path::new(path))?)
}

fn file_ref(spec: &str) -> Option<&str> {
    spec.strip_prefix("file:").map(str::trim)
}

fn kernel_from_spec(spec: &str, axis: &Axis) -> Result<KernelPdf, CliError> {
    if let Some(path) = file_ref(spec) {
        let h = read_histogram(path)?;
        let [k_axis] = h.axes() else {
            return Err(CliError::Config(format!("kernel file {path} must be 1-D")));
        };
        return Ok(KernelPdf::new(*k_axis, h.normalize()?.into_values())?);
    }
    let shape: KernelShape = spec.parse()?;
    Ok(shape.build(axis.width(), axis.nbins().saturating_sub(1))?)
}

fn truth_from_spec(spec: &str, axis: &Axis) -> Result<Vec<f64>, CliError> {
    if let Some(path) = file_ref(spec) {
        let h = read_histogram(path)?;
        if h.axes() != [*axis] {
            return Err(Error::DimensionMismatch {
                expected: format!("truth on {axis:?}"),
                found: format!("{:?}", h.axes()),
            }
            .into());
        }
        let contents = h.bin_contents();
        let total: f64 = contents.iter().sum();
        return Ok(contents.iter().map(|v| v / total).collect());
    }
    let shape: TruthShape = spec.parse()?;
    Ok(shape.bin_masses(axis)?)
}

/// Parses `identity`, `parity` or `gaussian:SIGMA`. `parity` mirrors the
/// kernel when one is known and falls back to the transposed response.
pub fn smoother_from_spec(spec: &str, kernel: Option<&KernelPdf>) -> Result<Smoother, CliError> {
    match spec.trim() {
        "identity" => Ok(Smoother::Identity),
        "parity" => Ok(kernel.map_or(Smoother::Adjoint, |k| Smoother::ParityKernel(k.clone()))),
        other => {
            let sigma = other
                .strip_prefix("gaussian:")
                .and_then(|s| s.trim().parse::<f64>().ok())
                .ok_or_else(|| {
                    CliError::Config(format!(
                        "unknown smoother `{other}` (identity, parity or gaussian:SIGMA)"
                    ))
                })?;
            Ok(Smoother::Gaussian(sigma))
        }
    }
}

pub fn deconvolve(cfg: &config::Deconvolve, out: &Output) -> Result<(), CliError> {
    let axis = cfg.grid.axis()?;
    let kernel = kernel_from_spec(&cfg.kernel, &axis)?;
    let smoother = smoother_from_spec(&cfg.smoother, Some(&kernel))?;
    let setup = DeconvolveSetup {
        axis,
        truth: truth_from_spec(&cfg.truth, &axis)?,
        kernel,
        counts: (!cfg.noiseless).then_some(cfg.counts),
        seed: cfg.seed,
        smoother,
        policy: cfg.stopping(),
    };
    let report = series_unfold::experiment::run_deconvolve(&setup)?;
    out.histogram("truth.csv", &report.truth)?;
    out.histogram("measured.csv", &report.measured)?;
    out.histogram("recovered.csv", &report.recovered)?;
    out.histogram("estimate.csv", &report.unfold.estimate_histogram()?)?;
    out.matrix("response.csv", &report.response)?;
    out.report("report.json", &report.unfold, "estimate.csv")?;
    out.json(
        "summary.json",
        &json!({
            "stop_reason": report.unfold.stop_reason,
            "selected_iteration": report.unfold.selected,
            "l1_distance": report.l1_distance,
            "l1_by_iteration": report.l1_by_iteration,
        }),
    )?;
    finish(&report.unfold)
}

pub fn unfold(cfg: &config::Unfold, out: &Output) -> Result<(), CliError> {
    let measured = read_histogram(&cfg.measured)?;
    let response = match cfg.response.strip_prefix("cpdf:") {
        Some(spec) => {
            let sigma = match spec.parse::<KernelShape>()? {
                KernelShape::Gauss(s) => s,
                other => {
                    return Err(CliError::Config(format!(
                        "cpdf response supports gauss(SIGMA) only, got {other}"
                    )))
                }
            };
            let [axis] = measured.axes() else {
                return Err(CliError::Config("cpdf responses need a 1-D measured histogram".into()));
            };
            matrix_from_cpdf(&GaussianCpdf { sigma }, axis, axis, cfg.quadrature_order)?
        }
        None => load_matrix(&cfg.response)?,
    };
    let smoother = smoother_from_spec(&cfg.smoother, None)?;
    let report = run_unfold(&measured, &response, &smoother, &cfg.stopping())?;
    out.histogram("estimate.csv", &report.estimate_histogram()?)?;
    out.report("report.json", &report, "estimate.csv")?;
    finish(&report)
}

pub fn diagnose(cfg: &config::Diagnose, out: &Output) -> Result<(), CliError> {
    let axis = cfg.grid.axis()?;
    let kernel = kernel_from_spec(&cfg.kernel, &axis)?;
    let single = diagnose_kernel(&kernel, axis.nbins(), cfg.zero_tol);
    let double = diagnose_double_kernel(&kernel, axis.nbins(), cfg.zero_tol);
    let mut doc = serde_json::to_value(&single).map_err(Error::from)?;
    doc["double_kernel"] = serde_json::to_value(&double).map_err(Error::from)?;
    out.json("diagnosis.json", &doc)?;

    let m = double.grid_bins.max(single.grid_bins);
    let fs = kernel_spectrum(&kernel, m);
    let ds = kernel_spectrum(&kernel.autocorrelation(), m);
    let mut csv = String::from("k,omega,re,im,modulus,double_modulus\n");
    for k in 0..m {
        let omega = series_unfold::spectral::frequency(k, m, axis.width());
        csv.push_str(&format!(
            "{k},{},{},{},{},{}\n",
            fmt(omega),
            fmt(fs[k].re),
            fmt(fs[k].im),
            fmt(fs[k].norm()),
            fmt(ds[k].norm())
        ));
    }
    out.text("spectrum.csv", &csv)?;
    println!(
        "single kernel: condition {} (max |1-F| = {:.9}); double kernel: condition {} (max |1-F| = {:.9})",
        single.condition_holds, single.max_excursion, double.condition_holds, double.max_excursion
    );
    Ok(())
}

fn fmt(v: f64) -> String {
    series_unfold::histogram::fmt_f64(v)
}

fn pi0_setup(cfg: &config::SimulatePi0) -> Result<Pi0Experiment, CliError> {
    let on = |v: f64| (v > 0.0).then_some(v);
    Ok(Pi0Experiment {
        decay: DecayConfig {
            mass: cfg.mass,
            sigma_y: cfg.sigma_y,
            t_slope: cfg.t_slope,
            seed: cfg.seed,
        },
        n_events: cfg.n_events,
        binning: MomentumBinning {
            eta: Axis::new(cfg.eta_lo, cfg.eta_hi, cfg.eta_bins)?,
            pt: Axis::new(cfg.pt_lo, cfg.pt_hi, cfg.pt_bins)?,
        },
        resolution: ResolutionModel {
            energy: on(cfg.energy_resolution),
            angle: on(cfg.angle_resolution),
        },
        n_per_bin: cfg.n_per_bin,
        policy: cfg.stopping(),
        smoother: smoother_from_spec(&cfg.smoother, None)?,
        slices: cfg.slices.clone(),
        cauchy_orders: cfg.cauchy_orders,
    })
}

fn trace_csv(indices: &[f64]) -> String {
    let mut csv = String::from("n,cauchy_index\n");
    for (i, v) in indices.iter().enumerate() {
        csv.push_str(&format!("{},{}\n", i + 1, fmt(*v)));
    }
    csv
}

pub fn cauchy_test(cfg: &RunConfig, out: &Output) -> Result<(), CliError> {
    let c = &cfg.cauchy_test;
    let smoother = smoother_from_spec(&c.smoother, None)?;
    let (measured, response) = if c.measured.is_empty() {
        let exp = pi0_setup(&cfg.simulate_pi0)?;
        let (_, measured, _, _) = generate_events(&exp.decay, &exp.resolution, &exp.binning, exp.n_events)?;
        let response = build_gamma_response(
            &exp.binning,
            &exp.binning,
            exp.decay.mass,
            &exp.resolution,
            exp.n_per_bin,
            derive_seed(exp.decay.seed, 2),
        )?;
        (measured, response)
    } else {
        (read_histogram(&c.measured)?, load_matrix(&c.response)?)
    };
    let trace = cauchy_trace(&measured, &response, &smoother, c.orders)?;
    out.json("cauchy.json", &trace)?;
    out.text("cauchy.csv", &trace_csv(&trace.indices))?;
    println!(
        "Cauchy index saturation (median of last orders): {:.4}",
        trace.saturation
    );
    Ok(())
}

pub fn simulate_pi0(cfg: &config::SimulatePi0, out: &Output) -> Result<(), CliError> {
    let exp = pi0_setup(cfg)?;
    let report = run_pi0_experiment(&exp)?;
    out.histogram("truth.csv", &report.truth)?;
    out.histogram("measured.csv", &report.measured)?;
    out.histogram("unfolded.csv", &report.unfolded)?;
    out.matrix("response.bin", &report.response)?;
    out.report("report.json", &report.unfold, "unfolded.csv")?;
    out.text("cauchy.csv", &trace_csv(&report.cauchy.indices))?;
    for s in &report.slices {
        out.histogram(&format!("slice_truth_eta_{}.csv", s.eta), &s.truth)?;
        out.histogram(&format!("slice_unfolded_eta_{}.csv", s.eta), &s.unfolded)?;
    }
    out.json(
        "summary.json",
        &json!({
            "n_events": cfg.n_events,
            "stop_reason": report.unfold.stop_reason,
            "selected_iteration": report.unfold.selected,
            "l1_distance": report.l1_distance,
            "cauchy_saturation": report.cauchy.saturation,
            "pion_overflow": report.pion_overflow,
            "photon_overflow": report.photon_overflow,
        }),
    )?;
    println!(
        "{} events: stopped at iteration {} ({:?}), L1 distance {:.4}, Cauchy saturation {:.3}",
        cfg.n_events, report.unfold.selected, report.unfold.stop_reason, report.l1_distance, report.cauchy.saturation
    );
    finish(&report.unfold)
}

pub fn verify(cfg: &config::VerifyCondition, out: &Output) -> Result<(), CliError> {
    let (response, kernel) = if cfg.kernel.is_empty() {
        (load_matrix(&cfg.response)?, None)
    } else {
        let axis = cfg.grid.axis()?;
        let kernel = kernel_from_spec(&cfg.kernel, &axis)?;
        (matrix_from_kernel(&kernel, &axis)?, Some(kernel))
    };
    let smoother = smoother_from_spec(&cfg.smoother, kernel.as_ref())?;
    let sweep = verify_condition(&response, &smoother, cfg.max_order)?;
    out.json("condition.json", &sweep)?;
    let mut csv = String::from("n,max_abs_entry\n");
    for (i, v) in sweep.per_order.iter().enumerate() {
        csv.push_str(&format!("{},{}\n", i + 1, fmt(*v)));
    }
    out.text("condition.csv", &csv)?;
    println!(
        "largest entry of (I - A)^n over n <= {}: {:.6}",
        cfg.max_order, sweep.sup
    );
    Ok(())
}
