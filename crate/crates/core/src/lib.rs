//! Iterative series-expansion unfolding of binned densities.
//!
//! A measured histogram `H` is modelled as a folding `A_Q f` of an unknown
//! truth `f`. The engine in [`unfold`] recovers `f` by summing the Neumann
//! series of `(A_G A_Q)^-1 A_G H` term by term, stopping before statistical
//! noise dominates. Supporting modules provide the grids ([`histogram`]),
//! operators ([`folding`]), Fourier diagnostics ([`spectral`]) and a
//! two-photon decay simulation ([`pi0`]) used as a realistic test bed.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod error;
pub mod experiment;
pub mod folding;
pub mod histogram;
pub mod matrix;
pub mod pi0;
pub mod shapes;
pub mod spectral;
pub mod unfold;

pub use error::{Error, Result};
pub use folding::{
    apply, compose, matrix_from_cpdf, matrix_from_kernel, mc_estimate_matrix, FoldingMatrix, KernelPdf, ResponseSampler,
};
pub use histogram::{poisson_covariance, Axis, CovarianceMatrix, GridHistogram, HistKind};
pub use matrix::DenseMatrix;
pub use spectral::{diagnose_double_kernel, diagnose_kernel, naive_deconvolve, KernelDiagnosis, Regulator};
pub use unfold::{run_unfold, ErrorMode, Smoother, StopReason, StoppingPolicy, UnfoldReport};
