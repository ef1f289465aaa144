//! The series-expansion unfolding engine.
//!
//! With a response `A_Q`, a smoother `A_G` and measured contents `H`, the
//! engine forms `A = A_G A_Q`, `f_0 = A_G H` and iterates
//!
//! ```text
//! f_{N+1} = f_N + f_0 - A f_N
//! ```
//!
//! which is the partial sum `S_N f_0` with `S_N = sum_{n<=N} (I - A)^n`.
//! Statistical errors follow the same recursion. In exact mode the engine
//! tracks `C_hat_N = S_N A_G diag(H)`, from which the covariance of `f_N` is
//! `C_N = C_hat_N diag(H)^+ C_hat_N^T`. In Gaussian mode it propagates
//! per-bin standard deviations only.
//!
//! The iteration stops when the noise content `sum_i sqrt(C_ii) / sum_j H_j`
//! exceeds a threshold, when the Cauchy root index of the series terms stops
//! staying below its limit, or after a fixed number of terms, checked in
//! that order. The returned estimate is the last one still inside the noise
//! budget.

use serde::{Deserialize, Serialize};

use crate::error::{dim_mismatch, Error, Result};
use crate::folding::{compose, matrix_from_cpdf, matrix_from_kernel, FoldingMatrix, GaussianCpdf, KernelPdf};
use crate::histogram::{Axis, CovarianceMatrix, GridHistogram, HistKind};
use crate::matrix::DenseMatrix;

/// Number of consecutive Cauchy indices whose median decides a violation.
pub const CAUCHY_WINDOW: usize = 8;

/// How statistical errors are propagated through the iteration.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ErrorMode {
    /// Full covariance recursion (memory and time quadratic in bins per step
    /// on top of a matrix product).
    #[default]
    Exact,
    /// Per-bin standard deviations with quadrature sums.
    Gaussian,
}

impl std::str::FromStr for ErrorMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "exact" => Ok(ErrorMode::Exact),
            "gaussian" => Ok(ErrorMode::Gaussian),
            other => Err(Error::Config(format!("unknown error mode `{other}`"))),
        }
    }
}

/// When to stop the series.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StoppingPolicy {
    pub noise_threshold: f64,
    /// Maximum number of series terms, counting `f_0`.
    pub max_iters: usize,
    pub cauchy_limit: f64,
    pub error_mode: ErrorMode,
}

impl Default for StoppingPolicy {
    fn default() -> Self {
        Self {
            noise_threshold: 0.5,
            max_iters: 500,
            cauchy_limit: 1.0,
            error_mode: ErrorMode::Exact,
        }
    }
}

impl StoppingPolicy {
    pub fn validate(&self) -> Result<()> {
        if !(self.noise_threshold > 0.0) {
            return Err(Error::Config("noise_threshold must be positive".into()));
        }
        if self.max_iters == 0 {
            return Err(Error::Config("max_iters must be at least 1".into()));
        }
        if !(self.cauchy_limit > 0.0 && self.cauchy_limit <= 1.0) {
            return Err(Error::Config("cauchy_limit must lie in (0, 1]".into()));
        }
        Ok(())
    }
}

/// Choice of the operator applied to the data before iterating.
#[derive(Debug, Clone, PartialEq)]
pub enum Smoother {
    /// No smoothing: `A_G = I`.
    Identity,
    /// Convolution with the mirror image of the kernel, giving the double
    /// operator for translation-invariant responses.
    ParityKernel(KernelPdf),
    /// The adjoint of the response matrix.
    Adjoint,
    /// Gaussian smearing with the given standard deviation.
    Gaussian(f64),
    /// Any folding matrix from measured space to truth space.
    Custom(FoldingMatrix),
}

impl Smoother {
    /// Builds `A_G` for the given response.
    pub fn matrix(&self, response: &FoldingMatrix) -> Result<FoldingMatrix> {
        let single_axis = || -> Result<Axis> {
            match (response.in_axes(), response.out_axes()) {
                ([a], [b]) if a == b => Ok(*a),
                _ => Err(Error::Unsupported("this smoother needs a square 1-D response".into())),
            }
        };
        match self {
            Smoother::Identity => {
                if response.in_axes() != response.out_axes() {
                    return Err(dim_mismatch(
                        format!("measured grid equal to truth grid {:?}", response.in_axes()),
                        format!("{:?}", response.out_axes()),
                    ));
                }
                FoldingMatrix::identity(response.in_axes().to_vec())
            }
            Smoother::ParityKernel(eta) => matrix_from_kernel(&eta.parity_reflect(), &single_axis()?),
            Smoother::Adjoint => response.adjoint(),
            Smoother::Gaussian(sigma) => {
                if !(*sigma > 0.0) {
                    return Err(Error::Config("smoother sigma must be positive".into()));
                }
                let axis = single_axis()?;
                matrix_from_cpdf(&GaussianCpdf { sigma: *sigma }, &axis, &axis, 4)
            }
            Smoother::Custom(m) => Ok(m.clone()),
        }
    }
}

/// Why the iteration ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    NoiseThreshold,
    MaxIters,
    CauchyViolation,
}

/// Diagnostics recorded for each series term.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceEntry {
    pub n: usize,
    pub noise_content: f64,
    pub cauchy_index: Option<f64>,
    /// `sum_i |f_n - f_{n-1}|` relative to the measured total.
    pub l1_change: f64,
}

/// Iterate `f_N` with its error bookkeeping.
#[derive(Debug, Clone, PartialEq)]
pub struct IterationState {
    pub n: usize,
    /// Current estimate, in bin contents.
    pub estimate: Vec<f64>,
    /// `C_hat_N`, kept in exact mode for counts input.
    pub c_hat: Option<DenseMatrix>,
    /// Per-bin standard deviations, kept in Gaussian mode.
    pub sigma: Option<Vec<f64>>,
    /// Diagonal of the covariance of the estimate.
    pub variances: Vec<f64>,
    pub noise_content: f64,
    pub cauchy_index: Option<f64>,
    /// The current series term applied to the normalized data.
    pub residual: Vec<f64>,
}

/// Prepared operators for one unfolding problem.
#[derive(Debug, Clone)]
pub struct Unfolder {
    a: DenseMatrix,
    f0: Vec<f64>,
    c_hat0: Option<DenseMatrix>,
    sigma0: Option<Vec<f64>>,
    /// Squared entries of `I - A`, for Gaussian mode.
    step_sq: Option<DenseMatrix>,
    inv_counts: Vec<f64>,
    total: f64,
    truth_axes: Vec<Axis>,
}

/// Noise content `(1/total) sum_i sqrt(max(C_ii, 0))`.
pub fn noise_content(cov: &CovarianceMatrix, total: f64) -> f64 {
    noise_from_variances(&cov.variances(), total)
}

pub fn noise_from_variances(variances: &[f64], total: f64) -> f64 {
    variances.iter().map(|v| v.max(0.0).sqrt()).sum::<f64>() / total
}

/// One Gaussian propagation step through `A`: `sqrt(sum_j A_ij^2 sigma_j^2)`.
pub fn gaussian_error_step(sigma: &[f64], a: &DenseMatrix) -> Result<Vec<f64>> {
    let sq: Vec<f64> = sigma.iter().map(|s| s * s).collect();
    Ok(a.map(|v| v * v).matvec(&sq)?.iter().map(|v| v.sqrt()).collect())
}

/// Cauchy root index `(max_i |residual_i|)^(1/n)`.
pub fn cauchy_index(residual: &[f64], n: usize) -> f64 {
    let sup = residual.iter().map(|v| v.abs()).fold(0.0, f64::max);
    if sup == 0.0 {
        0.0
    } else {
        sup.powf(1.0 / n.max(1) as f64)
    }
}

fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// True when the median of the last [`CAUCHY_WINDOW`] indices has reached
/// `limit`.
pub fn cauchy_violated(trace: &[TraceEntry], limit: f64) -> bool {
    let recent: Vec<f64> = trace
        .iter()
        .rev()
        .filter_map(|t| t.cauchy_index)
        .take(CAUCHY_WINDOW)
        .collect();
    recent.len() == CAUCHY_WINDOW && median(&recent) >= limit
}

impl Unfolder {
    /// Prepares the iteration for measured data `h`, response `a_q` (truth
    /// to measured) and smoother `a_g` (measured to truth).
    pub fn new(h: &GridHistogram, a_q: &FoldingMatrix, a_g: &FoldingMatrix, mode: ErrorMode) -> Result<Self> {
        if h.axes() != a_q.out_axes() {
            return Err(dim_mismatch(
                format!("measured grid {:?}", a_q.out_axes()),
                format!("{:?}", h.axes()),
            ));
        }
        if a_g.in_axes() != a_q.out_axes() || a_g.out_axes() != a_q.in_axes() {
            return Err(dim_mismatch(
                format!("smoother {}x{}", a_q.shape().1, a_q.shape().0),
                format!("{}x{}", a_g.shape().0, a_g.shape().1),
            ));
        }
        let contents = h.bin_contents();
        let total: f64 = contents.iter().sum();
        if !(total > 0.0) || !total.is_finite() {
            return Err(Error::DegenerateInput(format!("measured total is {total}")));
        }
        let a = compose(a_g, a_q)?.entries().clone();
        let g = a_g.entries();
        let f0 = g.matvec(&contents)?;
        let counts = h.kind() == HistKind::Counts;
        let inv_counts = contents
            .iter()
            .map(|&c| if counts && c > 0.0 { 1.0 / c } else { 0.0 })
            .collect();
        let (c_hat0, sigma0, step_sq) = match (counts, mode) {
            (false, _) => (None, None, None),
            (true, ErrorMode::Exact) => {
                let mut c = g.clone();
                for r in 0..c.rows() {
                    for (v, h) in c.as_mut_slice()[r * g.cols()..(r + 1) * g.cols()]
                        .iter_mut()
                        .zip(&contents)
                    {
                        *v *= h;
                    }
                }
                (Some(c), None, None)
            }
            (true, ErrorMode::Gaussian) => {
                let root: Vec<f64> = contents.iter().map(|c| c.sqrt()).collect();
                let sigma0 = gaussian_error_step(&root, g)?;
                let step = DenseMatrix::identity(a.rows()).add_scaled(-1.0, &a)?;
                (None, Some(sigma0), Some(step.map(|v| v * v)))
            }
        };
        Ok(Self {
            a,
            f0,
            c_hat0,
            sigma0,
            step_sq,
            inv_counts,
            total,
            truth_axes: a_q.in_axes().to_vec(),
        })
    }

    /// The composed operator `A = A_G A_Q`.
    pub fn operator(&self) -> &DenseMatrix {
        &self.a
    }

    pub fn total(&self) -> f64 {
        self.total
    }

    pub fn truth_axes(&self) -> &[Axis] {
        &self.truth_axes
    }

    fn variances_of(&self, c_hat: Option<&DenseMatrix>, sigma: Option<&[f64]>) -> Vec<f64> {
        if let Some(c) = c_hat {
            (0..c.rows())
                .map(|i| c.row(i).iter().zip(&self.inv_counts).map(|(v, w)| v * v * w).sum())
                .collect()
        } else if let Some(s) = sigma {
            s.iter().map(|v| v * v).collect()
        } else {
            vec![0.0; self.f0.len()]
        }
    }

    fn finish_state(
        &self,
        n: usize,
        estimate: Vec<f64>,
        c_hat: Option<DenseMatrix>,
        sigma: Option<Vec<f64>>,
        residual: Vec<f64>,
    ) -> IterationState {
        let variances = self.variances_of(c_hat.as_ref(), sigma.as_deref());
        let noise_content = noise_from_variances(&variances, self.total);
        let cauchy_index = (n > 0).then(|| cauchy_index(&residual, n));
        IterationState {
            n,
            estimate,
            c_hat,
            sigma,
            variances,
            noise_content,
            cauchy_index,
            residual,
        }
    }

    /// The zeroth term `f_0 = A_G H`.
    pub fn init_state(&self) -> IterationState {
        let residual = self.f0.iter().map(|v| v / self.total).collect();
        self.finish_state(0, self.f0.clone(), self.c_hat0.clone(), self.sigma0.clone(), residual)
    }

    /// Adds the next series term.
    pub fn step(&self, s: &IterationState) -> Result<IterationState> {
        let af = self.a.matvec(&s.estimate)?;
        let estimate: Vec<f64> = s
            .estimate
            .iter()
            .zip(&self.f0)
            .zip(&af)
            .map(|((f, f0), a)| f + f0 - a)
            .collect();
        let ar = self.a.matvec(&s.residual)?;
        let residual: Vec<f64> = s.residual.iter().zip(&ar).map(|(r, a)| r - a).collect();
        let c_hat = match (&s.c_hat, &self.c_hat0) {
            (Some(c), Some(c0)) => Some(c.add_scaled(1.0, c0)?.add_scaled(-1.0, &self.a.matmul(c)?)?),
            _ => None,
        };
        let sigma = match (&s.sigma, &self.sigma0, &self.step_sq) {
            (Some(sig), Some(sig0), Some(step_sq)) => {
                let sq: Vec<f64> = sig.iter().map(|v| v * v).collect();
                let prop = step_sq.matvec(&sq)?;
                Some(prop.iter().zip(sig0).map(|(p, s0)| (p + s0 * s0).sqrt()).collect())
            }
            _ => None,
        };
        let finite = estimate.iter().all(|v| v.is_finite())
            && c_hat.as_ref().is_none_or(DenseMatrix::all_finite)
            && sigma
                .as_ref()
                .is_none_or(|v: &Vec<f64>| v.iter().all(|x| x.is_finite()));
        if !finite {
            return Err(Error::Divergence {
                iteration: s.n + 1,
                trace: Vec::new(),
            });
        }
        Ok(self.finish_state(s.n + 1, estimate, c_hat, sigma, residual))
    }

    /// Full covariance `C_N` of a state's estimate, when tracked.
    pub fn covariance(&self, s: &IterationState) -> Result<Option<CovarianceMatrix>> {
        if let Some(c) = &s.c_hat {
            let mut scaled = c.clone();
            let cols = c.cols();
            for r in 0..c.rows() {
                for (v, w) in scaled.as_mut_slice()[r * cols..(r + 1) * cols]
                    .iter_mut()
                    .zip(&self.inv_counts)
                {
                    *v *= w;
                }
            }
            let full = scaled.matmul(&c.transpose())?;
            let sym = full.add_scaled(1.0, &full.transpose())?.map(|v| 0.5 * v);
            return CovarianceMatrix::new(sym).map(Some);
        }
        if let Some(sig) = &s.sigma {
            let var: Vec<f64> = sig.iter().map(|v| v * v).collect();
            return CovarianceMatrix::diagonal(&var).map(Some);
        }
        Ok(None)
    }

    fn trace_entry(&self, s: &IterationState, prev: Option<&[f64]>) -> TraceEntry {
        let l1_change = prev.map_or(0.0, |p| {
            p.iter().zip(&s.estimate).map(|(a, b)| (a - b).abs()).sum::<f64>() / self.total
        });
        TraceEntry {
            n: s.n,
            noise_content: s.noise_content,
            cauchy_index: s.cauchy_index,
            l1_change,
        }
    }
}

/// Result of an unfolding run.
#[derive(Debug, Clone, PartialEq)]
pub struct UnfoldReport {
    pub stop_reason: StopReason,
    pub trace: Vec<TraceEntry>,
    /// Index of the returned series term.
    pub selected: usize,
    /// Returned estimate, in bin contents on the truth grid.
    pub estimate: Vec<f64>,
    /// Variances of the returned estimate (zero when errors are not tracked).
    pub variances: Vec<f64>,
    pub truth_axes: Vec<Axis>,
}

#[derive(Serialize)]
struct ReportJson<'a> {
    stop_reason: StopReason,
    selected_iteration: usize,
    iterations: &'a [TraceEntry],
    estimate: &'a str,
}

impl UnfoldReport {
    /// Estimate as a density histogram (contents per unit bin volume).
    pub fn estimate_histogram(&self) -> Result<GridHistogram> {
        GridHistogram::from_contents(self.truth_axes.clone(), &self.estimate)
    }

    /// JSON summary; `estimate_ref` names the file holding the estimate.
    pub fn to_json(&self, estimate_ref: &str) -> Result<String> {
        Ok(serde_json::to_string_pretty(&ReportJson {
            stop_reason: self.stop_reason,
            selected_iteration: self.selected,
            iterations: &self.trace,
            estimate: estimate_ref,
        })?)
    }
}

/// Runs the series with the given stopping policy.
pub fn run_unfold(
    h: &GridHistogram,
    a_q: &FoldingMatrix,
    smoother: &Smoother,
    policy: &StoppingPolicy,
) -> Result<UnfoldReport> {
    run_unfold_observed(h, a_q, smoother, policy, |_| {})
}

/// Like [`run_unfold`], calling `observer` on every computed state.
pub fn run_unfold_observed(
    h: &GridHistogram,
    a_q: &FoldingMatrix,
    smoother: &Smoother,
    policy: &StoppingPolicy,
    mut observer: impl FnMut(&IterationState),
) -> Result<UnfoldReport> {
    policy.validate()?;
    let a_g = smoother.matrix(a_q)?;
    let engine = Unfolder::new(h, a_q, &a_g, policy.error_mode)?;
    let mut state = engine.init_state();
    observer(&state);
    let mut trace = vec![engine.trace_entry(&state, None)];
    let report = |reason, s: &IterationState, trace: Vec<TraceEntry>| UnfoldReport {
        stop_reason: reason,
        trace,
        selected: s.n,
        estimate: s.estimate.clone(),
        variances: s.variances.clone(),
        truth_axes: engine.truth_axes.clone(),
    };
    if state.noise_content > policy.noise_threshold {
        return Ok(report(StopReason::NoiseThreshold, &state, trace));
    }
    loop {
        if cauchy_violated(&trace, policy.cauchy_limit) {
            return Ok(report(StopReason::CauchyViolation, &state, trace));
        }
        if state.n + 1 >= policy.max_iters {
            return Ok(report(StopReason::MaxIters, &state, trace));
        }
        let next = match engine.step(&state) {
            Ok(s) => s,
            Err(Error::Divergence { iteration, .. }) => return Err(Error::Divergence { iteration, trace }),
            Err(e) => return Err(e),
        };
        observer(&next);
        trace.push(engine.trace_entry(&next, Some(&state.estimate)));
        if next.noise_content > policy.noise_threshold {
            return Ok(report(StopReason::NoiseThreshold, &state, trace));
        }
        state = next;
    }
}

/// Cauchy indices for orders `1..=orders`, ignoring noise.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CauchyTrace {
    pub indices: Vec<f64>,
    /// Median of the last [`CAUCHY_WINDOW`] indices.
    pub saturation: f64,
}

pub fn cauchy_trace(h: &GridHistogram, a_q: &FoldingMatrix, smoother: &Smoother, orders: usize) -> Result<CauchyTrace> {
    if orders == 0 {
        return Err(Error::Config("cauchy trace needs at least one order".into()));
    }
    let a_g = smoother.matrix(a_q)?;
    let density = GridHistogram::new(h.axes().to_vec(), h.values().to_vec(), HistKind::Density)?;
    let engine = Unfolder::new(&density, a_q, &a_g, ErrorMode::Exact)?;
    let mut residual: Vec<f64> = engine.f0.iter().map(|v| v / engine.total).collect();
    let mut indices = Vec::with_capacity(orders);
    for n in 1..=orders {
        let ar = engine.a.matvec(&residual)?;
        residual.iter_mut().zip(&ar).for_each(|(r, a)| *r -= a);
        indices.push(cauchy_index(&residual, n));
    }
    let tail = &indices[indices.len().saturating_sub(CAUCHY_WINDOW)..];
    Ok(CauchyTrace {
        saturation: median(tail),
        indices,
    })
}

/// Grid version of the uniform boundedness condition: the largest entry of
/// `(I - A)^n` for `n = 1..=max_order`, i.e. the sup over unit inputs and
/// bins of the iterated point responses.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConditionSweep {
    pub per_order: Vec<f64>,
    pub sup: f64,
}

pub fn verify_condition(a_q: &FoldingMatrix, smoother: &Smoother, max_order: usize) -> Result<ConditionSweep> {
    let a_g = smoother.matrix(a_q)?;
    let a = compose(&a_g, a_q)?.entries().clone();
    let step = DenseMatrix::identity(a.rows()).add_scaled(-1.0, &a)?;
    let mut power = step.clone();
    let mut per_order = Vec::with_capacity(max_order);
    for n in 1..=max_order {
        if n > 1 {
            power = step.matmul(&power)?;
        }
        per_order.push(power.max_abs());
    }
    let sup = per_order.iter().copied().fold(0.0, f64::max);
    Ok(ConditionSweep { per_order, sup })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn axis2() -> Axis {
        Axis::new(0.0, 2.0, 2).unwrap()
    }

    fn mix() -> FoldingMatrix {
        let m = DenseMatrix::from_rows(&[vec![0.75, 0.25], vec![0.25, 0.75]]).unwrap();
        FoldingMatrix::new(m, vec![axis2()], vec![axis2()], vec![0.0; 2]).unwrap()
    }

    fn counts(v: &[f64]) -> GridHistogram {
        GridHistogram::new(vec![axis2()], v.to_vec(), HistKind::Counts).unwrap()
    }

    #[test]
    fn init_with_identity_smoother() {
        let id = FoldingMatrix::identity(vec![axis2()]).unwrap();
        let u = Unfolder::new(&counts(&[4.0, 9.0]), &id, &id, ErrorMode::Exact).unwrap();
        let s = u.init_state();
        assert_eq!(s.estimate, vec![4.0, 9.0]);
        let c = u.covariance(&s).unwrap().unwrap();
        assert_eq!(c.entries().as_slice(), &[4.0, 0.0, 0.0, 9.0]);
    }

    #[test]
    fn init_with_mixing_smoother() {
        let id = FoldingMatrix::identity(vec![axis2()]).unwrap();
        let u = Unfolder::new(&counts(&[100.0, 0.0]), &id, &mix(), ErrorMode::Exact).unwrap();
        let s = u.init_state();
        assert_eq!(s.estimate, vec![75.0, 25.0]);
        let c = u.covariance(&s).unwrap().unwrap();
        let expected = [56.25, 18.75, 18.75, 6.25];
        for (a, b) in c.entries().as_slice().iter().zip(expected) {
            assert!((a - b).abs() < 1e-12);
        }
        assert!((s.noise_content - 0.10).abs() < 1e-12);
    }

    #[test]
    fn identity_operator_terminates_at_f0() {
        let id = FoldingMatrix::identity(vec![axis2()]).unwrap();
        let u = Unfolder::new(&counts(&[3.0, 5.0]), &id, &id, ErrorMode::Exact).unwrap();
        let mut s = u.init_state();
        for _ in 0..5 {
            s = u.step(&s).unwrap();
            assert_eq!(s.estimate, vec![3.0, 5.0]);
        }
    }

    #[test]
    fn first_step_on_two_bin_system() {
        let a = mix();
        let h = GridHistogram::new(vec![axis2()], vec![0.75, 0.25], HistKind::Density).unwrap();
        let id = FoldingMatrix::identity(vec![axis2()]).unwrap();
        let u = Unfolder::new(&h, &a, &id, ErrorMode::Exact).unwrap();
        let s1 = u.step(&u.init_state()).unwrap();
        // density values times bin width 1
        assert!((s1.estimate[0] - 0.875).abs() < 1e-15);
        assert!((s1.estimate[1] - 0.125).abs() < 1e-15);
        let mut s = s1;
        for _ in 0..60 {
            s = u.step(&s).unwrap();
        }
        assert!((s.estimate[0] - 1.0).abs() < 1e-15 && s.estimate[1].abs() < 1e-15);
    }

    #[test]
    fn noise_content_examples() {
        let c = CovarianceMatrix::diagonal(&[4.0, 9.0]).unwrap();
        assert!((noise_content(&c, 100.0) - 0.05).abs() < 1e-15);
        let z = CovarianceMatrix::diagonal(&[0.0, 0.0]).unwrap();
        assert_eq!(noise_content(&z, 100.0), 0.0);
        let c = CovarianceMatrix::diagonal(&[100.0, 0.0]).unwrap();
        assert!((noise_content(&c, 100.0) - 0.10).abs() < 1e-15);
    }

    #[test]
    fn gaussian_step_examples() {
        let id = DenseMatrix::identity(3);
        assert_eq!(gaussian_error_step(&[1.0, 2.0, 3.0], &id).unwrap(), vec![1.0, 2.0, 3.0]);
        let row = DenseMatrix::from_rows(&[vec![0.5, 0.5]]).unwrap();
        let out = gaussian_error_step(&[2.0, 2.0], &row).unwrap();
        assert!((out[0] - std::f64::consts::SQRT_2).abs() < 1e-15);
    }

    #[test]
    fn cauchy_index_examples() {
        assert_eq!(cauchy_index(&[0.0, 0.0], 3), 0.0);
        // residual_2 = 0.25 * 0.5^2 * (1, -1)
        assert!((cauchy_index(&[0.0625, -0.0625], 2) - 0.25).abs() < 1e-15);
    }

    #[test]
    fn cauchy_window_needs_a_sustained_median() {
        let entry = |n, c| TraceEntry {
            n,
            noise_content: 0.0,
            cauchy_index: Some(c),
            l1_change: 0.0,
        };
        let mut t: Vec<TraceEntry> = (1..=7).map(|n| entry(n, 0.5)).collect();
        t.push(entry(8, 5.0));
        assert!(!cauchy_violated(&t, 1.0));
        let t: Vec<TraceEntry> = (1..=8)
            .map(|n| entry(n, if n.is_multiple_of(2) { 1.2 } else { 0.9 }))
            .collect();
        assert!(cauchy_violated(&t, 1.0));
        assert!(!cauchy_violated(&t[..7], 1.0));
    }

    #[test]
    fn max_iters_edge_cases() {
        let a = mix();
        let h = counts(&[75.0, 25.0]);
        let zero = StoppingPolicy {
            max_iters: 0,
            ..Default::default()
        };
        assert!(matches!(
            run_unfold(&h, &a, &Smoother::Identity, &zero),
            Err(Error::Config(_))
        ));
        let one = StoppingPolicy {
            max_iters: 1,
            noise_threshold: 10.0,
            ..Default::default()
        };
        let r = run_unfold(&h, &a, &Smoother::Identity, &one).unwrap();
        assert_eq!(r.stop_reason, StopReason::MaxIters);
        assert_eq!(r.selected, 0);
        assert_eq!(r.estimate, vec![75.0, 25.0]);
        assert_eq!(r.trace.len(), 1);
    }

    #[test]
    fn returns_last_iterate_below_threshold() {
        let a = mix();
        let h = counts(&[75.0, 25.0]);
        let policy = StoppingPolicy {
            noise_threshold: 0.2,
            max_iters: 1000,
            ..Default::default()
        };
        let r = run_unfold(&h, &a, &Smoother::Identity, &policy).unwrap();
        assert_eq!(r.stop_reason, StopReason::NoiseThreshold);
        let last = r.trace.last().unwrap();
        assert!(last.noise_content > 0.2);
        assert_eq!(r.selected + 1, last.n);
        assert!(r.trace[r.selected].noise_content <= 0.2);
    }

    #[test]
    fn degenerate_data_rejected() {
        let r = run_unfold(
            &counts(&[0.0, 0.0]),
            &mix(),
            &Smoother::Identity,
            &StoppingPolicy::default(),
        );
        assert!(matches!(r, Err(Error::DegenerateInput(_))));
    }

    #[test]
    fn condition_sweep_on_two_bins() {
        let sweep = verify_condition(&mix(), &Smoother::Identity, 5).unwrap();
        // (I - A)^n has entries 0.25 * 0.5^(n-1)
        assert!((sweep.per_order[0] - 0.25).abs() < 1e-15);
        assert!((sweep.per_order[4] - 0.25 / 16.0).abs() < 1e-15);
        assert_eq!(sweep.sup, sweep.per_order[0]);
    }
}
