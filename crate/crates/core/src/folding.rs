//! Discrete folding operators.
//!
//! A [`FoldingMatrix`] maps bin contents on an input grid to bin contents on
//! an output grid. Column `j` is the probability distribution of the output
//! bin given an input in bin `j`; whatever falls outside the output grid is
//! booked as leakage, so every column sum plus its leakage is one.

use std::io::{BufRead, Read, Write};

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
#[cfg(feature = "parallel")]
use rayon::prelude::*;

use crate::error::{dim_mismatch, Error, Result};
use crate::histogram::{fmt_f64, parse_f64, parse_usize, Axis, GridHistogram};
use crate::matrix::DenseMatrix;

/// Tolerance for the column-sum plus leakage invariant.
pub const STOCHASTIC_TOL: f64 = 1e-6;

/// Where a matrix came from; stored in the matrix file header.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Provenance {
    pub seed: Option<u64>,
    pub n_per_bin: Option<u64>,
}

/// Dense column-stochastic folding operator with leakage bookkeeping.
#[derive(Debug, Clone, PartialEq)]
pub struct FoldingMatrix {
    entries: DenseMatrix,
    in_axes: Vec<Axis>,
    out_axes: Vec<Axis>,
    leakage: Vec<f64>,
    provenance: Provenance,
}

fn grid_len(axes: &[Axis]) -> usize {
    axes.iter().map(Axis::nbins).product()
}

impl FoldingMatrix {
    /// Validating constructor.
    pub fn new(entries: DenseMatrix, in_axes: Vec<Axis>, out_axes: Vec<Axis>, leakage: Vec<f64>) -> Result<Self> {
        if in_axes.is_empty() || out_axes.is_empty() {
            return Err(Error::Config("folding matrix needs input and output axes".into()));
        }
        let shape = (grid_len(&out_axes), grid_len(&in_axes));
        if entries.shape() != shape {
            return Err(dim_mismatch(
                format!("{}x{}", shape.0, shape.1),
                format!("{}x{}", entries.rows(), entries.cols()),
            ));
        }
        if leakage.len() != shape.1 {
            return Err(dim_mismatch(shape.1, leakage.len()));
        }
        if let Some(v) = entries.as_slice().iter().find(|v| !(**v >= 0.0) || !v.is_finite()) {
            return Err(Error::InvalidCpdf(format!(
                "matrix entry {v} is not a finite nonnegative number"
            )));
        }
        let sums = entries.column_sums();
        for (j, (s, l)) in sums.iter().zip(&leakage).enumerate() {
            if !(*l >= -STOCHASTIC_TOL && *l <= 1.0 + STOCHASTIC_TOL) || (s + l - 1.0).abs() > STOCHASTIC_TOL {
                return Err(Error::InvalidCpdf(format!(
                    "column {j}: sum {s} plus leakage {l} differs from 1"
                )));
            }
        }
        Ok(Self {
            entries,
            in_axes,
            out_axes,
            leakage,
            provenance: Provenance::default(),
        })
    }

    /// Builds a matrix whose leakage is whatever its columns are missing.
    /// Columns holding more than unit mass are rejected.
    pub fn from_entries(entries: DenseMatrix, in_axes: Vec<Axis>, out_axes: Vec<Axis>) -> Result<Self> {
        let leakage = entries.column_sums().iter().map(|s| (1.0 - s).max(0.0)).collect();
        Self::new(entries, in_axes, out_axes, leakage)
    }

    pub fn identity(axes: Vec<Axis>) -> Result<Self> {
        let n = grid_len(&axes);
        Self::new(DenseMatrix::identity(n), axes.clone(), axes, vec![0.0; n])
    }

    pub fn with_provenance(mut self, provenance: Provenance) -> Self {
        self.provenance = provenance;
        self
    }

    pub fn entries(&self) -> &DenseMatrix {
        &self.entries
    }

    pub fn in_axes(&self) -> &[Axis] {
        &self.in_axes
    }

    pub fn out_axes(&self) -> &[Axis] {
        &self.out_axes
    }

    pub fn leakage(&self) -> &[f64] {
        &self.leakage
    }

    pub fn provenance(&self) -> Provenance {
        self.provenance
    }

    pub fn shape(&self) -> (usize, usize) {
        self.entries.shape()
    }

    /// The adjoint operator, with any column carrying more than unit mass
    /// scaled down to unit mass.
    pub fn adjoint(&self) -> Result<Self> {
        let mut t = self.entries.transpose();
        let sums = t.column_sums();
        for (j, &s) in sums.iter().enumerate() {
            if s > 1.0 + STOCHASTIC_TOL {
                let col: Vec<f64> = t.column(j).iter().map(|v| v / s).collect();
                t.set_column(j, &col);
            }
        }
        Self::from_entries(t, self.out_axes.clone(), self.in_axes.clone())
    }

    /// Applies the operator to raw bin contents.
    pub fn apply_values(&self, v: &[f64]) -> Result<Vec<f64>> {
        self.entries.matvec(v)
    }
}

/// Folds a histogram: `A * h`, keeping the histogram kind.
pub fn apply(a: &FoldingMatrix, h: &GridHistogram) -> Result<GridHistogram> {
    if h.len() != a.shape().1 {
        return Err(dim_mismatch(a.shape().1, h.len()));
    }
    let out = a.apply_values(h.values())?;
    GridHistogram::new(a.out_axes.clone(), out, h.kind())
}

/// The operator product `a * b` (apply `b` first).
pub fn compose(a: &FoldingMatrix, b: &FoldingMatrix) -> Result<FoldingMatrix> {
    if a.in_axes != b.out_axes {
        return Err(dim_mismatch(
            format!("inner grid {:?}", a.in_axes),
            format!("{:?}", b.out_axes),
        ));
    }
    let entries = a.entries.matmul(&b.entries)?;
    let leakage = entries
        .column_sums()
        .iter()
        .map(|s| (1.0 - s).clamp(0.0, 1.0))
        .collect();
    FoldingMatrix::new(entries, b.in_axes.clone(), a.out_axes.clone(), leakage)
}

/// A translation-invariant kernel sampled on a grid centred on zero.
///
/// The axis has an odd number of bins and its middle bin is centred on zero,
/// so that sample `k` sits at offset `(k - half) * width`.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelPdf {
    axis: Axis,
    samples: Vec<f64>,
}

impl KernelPdf {
    pub fn new(axis: Axis, samples: Vec<f64>) -> Result<Self> {
        if axis.nbins().is_multiple_of(2) || !axis.is_symmetric() {
            return Err(Error::Config(
                "kernel axis must be symmetric with an odd number of bins".into(),
            ));
        }
        if samples.len() != axis.nbins() {
            return Err(dim_mismatch(axis.nbins(), samples.len()));
        }
        if samples.iter().any(|v| !(*v >= 0.0) || !v.is_finite()) {
            return Err(Error::InvalidCpdf(
                "kernel samples must be finite and nonnegative".into(),
            ));
        }
        let mass: f64 = samples.iter().sum::<f64>() * axis.width();
        if (mass - 1.0).abs() > STOCHASTIC_TOL {
            return Err(Error::InvalidCpdf(format!("kernel integrates to {mass}, not 1")));
        }
        Ok(Self { axis, samples })
    }

    /// Samples `density` at bin centres of a `2 * half_bins + 1` bin axis of
    /// the given width and rescales to unit mass.
    pub fn from_fn(width: f64, half_bins: usize, density: impl Fn(f64) -> f64) -> Result<Self> {
        let axis = Axis::centered(width, half_bins)?;
        let half = half_bins as f64;
        let raw: Vec<f64> = (0..axis.nbins()).map(|k| density((k as f64 - half) * width)).collect();
        if raw.iter().any(|v| !(*v >= 0.0) || !v.is_finite()) {
            return Err(Error::InvalidCpdf(
                "kernel density must be finite and nonnegative".into(),
            ));
        }
        let mass: f64 = raw.iter().sum::<f64>() * width;
        if !(mass > 0.0) {
            return Err(Error::DegenerateInput("kernel has no mass on its grid".into()));
        }
        Self::new(axis, raw.iter().map(|v| v / mass).collect())
    }

    pub fn axis(&self) -> &Axis {
        &self.axis
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn width(&self) -> f64 {
        self.axis.width()
    }

    pub fn half_bins(&self) -> usize {
        self.samples.len() / 2
    }

    /// Density at integer offset `d` bins from the origin (zero outside).
    pub fn at_offset(&self, d: isize) -> f64 {
        let k = self.half_bins() as isize + d;
        if k < 0 || k as usize >= self.samples.len() {
            0.0
        } else {
            self.samples[k as usize]
        }
    }

    /// The mirror kernel `x -> eta(-x)`.
    pub fn parity_reflect(&self) -> KernelPdf {
        let mut samples = self.samples.clone();
        samples.reverse();
        KernelPdf {
            axis: self.axis,
            samples,
        }
    }

    /// Autocorrelation `c(d) = w * sum_t eta(t - d) eta(t)`, the kernel of the
    /// double operator built from the mirror kernel and the kernel itself.
    pub fn autocorrelation(&self) -> KernelPdf {
        let half = self.half_bins();
        let w = self.width();
        let out_half = 2 * half;
        let mut out = vec![0.0; 2 * out_half + 1];
        for (a, &ea) in self.samples.iter().enumerate() {
            if ea == 0.0 {
                continue;
            }
            for (b, &eb) in self.samples.iter().enumerate() {
                out[out_half + b - a] += w * ea * eb;
            }
        }
        let axis = Axis::centered(w, out_half).expect("valid widened kernel axis");
        let mass: f64 = out.iter().sum::<f64>() * w;
        KernelPdf {
            axis,
            samples: out.iter().map(|v| v / mass).collect(),
        }
    }
}

fn same_width(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-9 * a.abs().max(b.abs())
}

/// Toeplitz convolution matrix: entry `(i, j) = eta((i - j) w) * w`.
///
/// Kernel mass that would land outside the grid is recorded as leakage.
pub fn matrix_from_kernel(eta: &KernelPdf, axis: &Axis) -> Result<FoldingMatrix> {
    if !same_width(eta.width(), axis.width()) {
        return Err(Error::Config(format!(
            "kernel bin width {} differs from grid bin width {}",
            eta.width(),
            axis.width()
        )));
    }
    let m = axis.nbins();
    let w = eta.width();
    let half = eta.half_bins() as isize;
    let mut entries = DenseMatrix::zeros(m, m);
    let mut leakage = vec![0.0; m];
    for j in 0..m {
        for d in -half..=half {
            let mass = eta.at_offset(d) * w;
            let i = j as isize + d;
            if i >= 0 && (i as usize) < m {
                entries[(i as usize, j)] = mass;
            } else {
                leakage[j] += mass;
            }
        }
    }
    FoldingMatrix::new(entries, vec![*axis], vec![*axis], leakage)
}

/// A conditional density `rho(y | x)` on one-dimensional grids.
pub trait Cpdf: Sync {
    fn density(&self, y: f64, x: f64) -> f64;

    /// Exact mass of `[lo, hi)` given `x`, when known in closed form.
    fn bin_mass(&self, _lo: f64, _hi: f64, _x: f64) -> Option<f64> {
        None
    }
}

/// Closure-backed cpdf integrated by quadrature.
pub struct FnCpdf<F>(pub F);

impl<F: Fn(f64, f64) -> f64 + Sync> Cpdf for FnCpdf<F> {
    fn density(&self, y: f64, x: f64) -> f64 {
        (self.0)(y, x)
    }
}

/// Gaussian smearing `y ~ Normal(x, sigma)`.
#[derive(Debug, Clone, Copy)]
pub struct GaussianCpdf {
    pub sigma: f64,
}

impl Cpdf for GaussianCpdf {
    fn density(&self, y: f64, x: f64) -> f64 {
        let z = (y - x) / self.sigma;
        (-0.5 * z * z).exp() / (self.sigma * (2.0 * std::f64::consts::PI).sqrt())
    }

    fn bin_mass(&self, lo: f64, hi: f64, x: f64) -> Option<f64> {
        let s = self.sigma * std::f64::consts::SQRT_2;
        let a = (lo - x) / s;
        let b = (hi - x) / s;
        // use the tail that avoids cancellation
        let mass = if a >= 0.0 {
            0.5 * (libm::erfc(a) - libm::erfc(b))
        } else if b <= 0.0 {
            0.5 * (libm::erfc(-b) - libm::erfc(-a))
        } else {
            0.5 * (libm::erf(b) - libm::erf(a))
        };
        Some(mass.max(0.0))
    }
}

/// Folding matrix of a conditional density, averaging over `quadrature_order`
/// midpoint nodes per input bin. Output-bin integrals use the closed form
/// when the cpdf offers one and the same midpoint rule otherwise.
pub fn matrix_from_cpdf(
    rho: &dyn Cpdf,
    in_axis: &Axis,
    out_axis: &Axis,
    quadrature_order: usize,
) -> Result<FoldingMatrix> {
    if quadrature_order == 0 {
        return Err(Error::Config("quadrature order must be at least 1".into()));
    }
    let q = quadrature_order;
    let (n_in, n_out) = (in_axis.nbins(), out_axis.nbins());
    let mut entries = DenseMatrix::zeros(n_out, n_in);
    let mut leakage = vec![0.0; n_in];
    for j in 0..n_in {
        let (xl, xh) = (in_axis.edge(j), in_axis.edge(j + 1));
        let mut col = vec![0.0; n_out];
        for s in 0..q {
            let x = xl + (s as f64 + 0.5) / q as f64 * (xh - xl);
            for (i, c) in col.iter_mut().enumerate() {
                let (yl, yh) = (out_axis.edge(i), out_axis.edge(i + 1));
                let mut quad = 0.0;
                for t in 0..q {
                    let y = yl + (t as f64 + 0.5) / q as f64 * (yh - yl);
                    let d = rho.density(y, x);
                    if !(d >= 0.0) || !d.is_finite() {
                        return Err(Error::InvalidCpdf(format!("rho({y}|{x}) = {d}")));
                    }
                    quad += d;
                }
                let mass = rho.bin_mass(yl, yh, x).unwrap_or(quad * (yh - yl) / q as f64);
                if !(mass >= 0.0) {
                    return Err(Error::InvalidCpdf(format!("negative bin mass {mass} at x = {x}")));
                }
                *c += mass / q as f64;
            }
        }
        let sum: f64 = col.iter().sum();
        if sum > 1.0 {
            col.iter_mut().for_each(|c| *c /= sum);
        } else {
            leakage[j] = 1.0 - sum;
        }
        entries.set_column(j, &col);
    }
    FoldingMatrix::new(entries, vec![*in_axis], vec![*out_axis], leakage)
}

/// Stochastic model of the detector: turns a true point into zero or more
/// observed points.
pub trait ResponseSampler: Sync {
    /// Number of observed points emitted per input (for normalization).
    fn multiplicity(&self) -> usize {
        1
    }

    /// Draws the observed points for input `x`, passing each to `emit`.
    /// Points the detector loses are simply not emitted.
    fn sample(&self, x: &[f64], rng: &mut ChaCha8Rng, emit: &mut dyn FnMut(&[f64]));
}

/// Uniform draw inside bin `i` of `axis`, never leaving that bin.
pub fn uniform_in_bin(axis: &Axis, i: usize, rng: &mut impl Rng) -> f64 {
    let (lo, hi) = (axis.edge(i), axis.edge(i + 1));
    let x = lo + rng.random::<f64>() * (hi - lo);
    if x >= hi && i + 1 < axis.nbins() {
        hi.next_down()
    } else {
        x.min(hi)
    }
}

/// Random stream for column or chunk `index` of a run seeded by `seed`.
pub fn substream(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Monte Carlo estimate of the response: `n_per_bin` inputs drawn uniformly
/// in each input bin, outputs histogrammed on the output grid. Each column
/// uses its own substream, so the result is independent of thread count.
pub fn mc_estimate_matrix(
    sampler: &dyn ResponseSampler,
    in_axes: &[Axis],
    out_axes: &[Axis],
    n_per_bin: u64,
    seed: u64,
) -> Result<FoldingMatrix> {
    if n_per_bin == 0 {
        return Err(Error::Config("n_per_bin must be at least 1".into()));
    }
    let template = GridHistogram::zeros(in_axes.to_vec(), crate::histogram::HistKind::Counts)?;
    let out_template = GridHistogram::zeros(out_axes.to_vec(), crate::histogram::HistKind::Counts)?;
    let n_in = template.len();
    let n_out = out_template.len();
    let norm = n_per_bin as f64 * sampler.multiplicity() as f64;

    let column = |j: usize| -> Vec<f64> {
        let mut rng = substream(seed, j as u64);
        let bins = template.unflatten(j);
        let mut counts = vec![0u64; n_out];
        let mut x = vec![0.0; in_axes.len()];
        for _ in 0..n_per_bin {
            for (d, axis) in in_axes.iter().enumerate() {
                x[d] = uniform_in_bin(axis, bins[d], &mut rng);
            }
            sampler.sample(&x, &mut rng, &mut |y| {
                if let Some(i) = out_template.flat_index(y) {
                    counts[i] += 1;
                }
            });
        }
        counts.iter().map(|&c| c as f64 / norm).collect()
    };

    #[cfg(feature = "parallel")]
    let columns: Vec<Vec<f64>> = (0..n_in).into_par_iter().map(column).collect();
    #[cfg(not(feature = "parallel"))]
    let columns: Vec<Vec<f64>> = (0..n_in).map(column).collect();

    let mut entries = DenseMatrix::zeros(n_out, n_in);
    let mut leakage = Vec::with_capacity(n_in);
    for (j, col) in columns.iter().enumerate() {
        entries.set_column(j, col);
        leakage.push((1.0 - col.iter().sum::<f64>()).max(0.0));
    }
    Ok(
        FoldingMatrix::new(entries, in_axes.to_vec(), out_axes.to_vec(), leakage)?.with_provenance(Provenance {
            seed: Some(seed),
            n_per_bin: Some(n_per_bin),
        }),
    )
}

const BINARY_MAGIC: &[u8; 8] = b"SUFMAT01";

fn axes_header(tag: &str, axes: &[Axis]) -> String {
    let mut s = format!("# {tag}");
    for (d, a) in axes.iter().enumerate() {
        s += &format!(" axis{d} {} {} {}", fmt_f64(a.lo()), fmt_f64(a.hi()), a.nbins());
    }
    s
}

fn opt_str(v: Option<u64>) -> String {
    v.map_or_else(|| "none".to_string(), |v| v.to_string())
}

impl FoldingMatrix {
    fn header_text(&self) -> String {
        format!(
            "# folding-matrix rows {} cols {}\n{}\n{}\n# seed {} n_per_bin {}\n",
            self.entries.rows(),
            self.entries.cols(),
            axes_header("in", &self.in_axes),
            axes_header("out", &self.out_axes),
            opt_str(self.provenance.seed),
            opt_str(self.provenance.n_per_bin),
        )
    }

    /// CSV dump: header comments, a leakage line, then one line per row.
    pub fn write_csv(&self, mut w: impl Write) -> Result<()> {
        let mut s = self.header_text();
        s += "# leakage ";
        s += &join(&self.leakage);
        s.push('\n');
        for r in 0..self.entries.rows() {
            s += &join(self.entries.row(r));
            s.push('\n');
        }
        w.write_all(s.as_bytes())?;
        Ok(())
    }

    pub fn read_csv(r: impl BufRead) -> Result<Self> {
        let mut lines = r.lines();
        let mut header = Vec::new();
        for _ in 0..4 {
            header.push(
                lines
                    .next()
                    .ok_or_else(|| Error::Parse("truncated matrix header".into()))??,
            );
        }
        let (rows, cols, in_axes, out_axes, provenance) = parse_header(&header)?;
        let leak_line = lines
            .next()
            .ok_or_else(|| Error::Parse("missing leakage line".into()))??;
        let leakage = parse_row(
            leak_line
                .strip_prefix("# leakage ")
                .ok_or_else(|| Error::Parse("missing leakage line".into()))?,
            cols,
        )?;
        let mut data = Vec::with_capacity(rows * cols);
        for line in lines {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            data.extend(parse_row(&line, cols)?);
        }
        if data.len() != rows * cols {
            return Err(Error::Parse(format!(
                "expected {} matrix entries, found {}",
                rows * cols,
                data.len()
            )));
        }
        let entries = DenseMatrix::from_row_major(rows, cols, data)?;
        Ok(Self::new(entries, in_axes, out_axes, leakage)?.with_provenance(provenance))
    }

    /// Binary dump: magic, header text length and text, then entries and
    /// leakage as little-endian doubles.
    pub fn write_binary(&self, mut w: impl Write) -> Result<()> {
        let header = self.header_text();
        w.write_all(BINARY_MAGIC)?;
        w.write_all(&(header.len() as u64).to_le_bytes())?;
        w.write_all(header.as_bytes())?;
        for v in self.entries.as_slice().iter().chain(&self.leakage) {
            w.write_all(&v.to_le_bytes())?;
        }
        Ok(())
    }

    pub fn read_binary(mut r: impl Read) -> Result<Self> {
        let mut magic = [0u8; 8];
        r.read_exact(&mut magic)?;
        if &magic != BINARY_MAGIC {
            return Err(Error::Parse("not a binary folding-matrix file".into()));
        }
        let mut len = [0u8; 8];
        r.read_exact(&mut len)?;
        let len = u64::from_le_bytes(len) as usize;
        if len > 1 << 20 {
            return Err(Error::Parse("implausible matrix header length".into()));
        }
        let mut text = vec![0u8; len];
        r.read_exact(&mut text)?;
        let text = String::from_utf8(text).map_err(|e| Error::Parse(e.to_string()))?;
        let header: Vec<String> = text.lines().map(str::to_string).collect();
        if header.len() != 4 {
            return Err(Error::Parse("malformed binary matrix header".into()));
        }
        let (rows, cols, in_axes, out_axes, provenance) = parse_header(&header)?;
        let mut read_f64s = |n: usize| -> Result<Vec<f64>> {
            let mut buf = vec![0u8; n * 8];
            r.read_exact(&mut buf)?;
            Ok(buf
                .chunks_exact(8)
                .map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")))
                .collect())
        };
        let data = read_f64s(rows * cols)?;
        let leakage = read_f64s(cols)?;
        let entries = DenseMatrix::from_row_major(rows, cols, data)?;
        Ok(Self::new(entries, in_axes, out_axes, leakage)?.with_provenance(provenance))
    }

    /// Saves as binary when the path ends in `.bin`, CSV otherwise.
    pub fn save(&self, path: &std::path::Path) -> Result<()> {
        let file = std::io::BufWriter::new(std::fs::File::create(path)?);
        if path.extension().is_some_and(|e| e == "bin") {
            self.write_binary(file)
        } else {
            self.write_csv(file)
        }
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        let file = std::io::BufReader::new(std::fs::File::open(path)?);
        if path.extension().is_some_and(|e| e == "bin") {
            Self::read_binary(file)
        } else {
            Self::read_csv(file)
        }
    }
}

fn join(values: &[f64]) -> String {
    values.iter().map(|v| fmt_f64(*v)).collect::<Vec<_>>().join(",")
}

fn parse_row(line: &str, cols: usize) -> Result<Vec<f64>> {
    let row = line.split(',').map(parse_f64).collect::<Result<Vec<_>>>()?;
    if row.len() != cols {
        return Err(Error::Parse(format!(
            "expected {cols} values per row, found {}",
            row.len()
        )));
    }
    Ok(row)
}

fn parse_axes(line: &str, tag: &str) -> Result<Vec<Axis>> {
    let rest = line
        .strip_prefix(&format!("# {tag}"))
        .ok_or_else(|| Error::Parse(format!("expected `# {tag}` header line")))?;
    let tokens: Vec<&str> = rest.split_whitespace().collect();
    if tokens.is_empty() || !tokens.len().is_multiple_of(4) {
        return Err(Error::Parse(format!("malformed axis header `{line}`")));
    }
    tokens
        .chunks(4)
        .map(|c| Axis::new(parse_f64(c[1])?, parse_f64(c[2])?, parse_usize(c[3])?))
        .collect()
}

type Header = (usize, usize, Vec<Axis>, Vec<Axis>, Provenance);

fn parse_header(lines: &[String]) -> Result<Header> {
    let dims: Vec<&str> = lines[0].split_whitespace().collect();
    if dims.len() != 6 || dims[1] != "folding-matrix" || dims[2] != "rows" || dims[4] != "cols" {
        return Err(Error::Parse(format!("bad matrix header `{}`", lines[0])));
    }
    let rows = parse_usize(dims[3])?;
    let cols = parse_usize(dims[5])?;
    let in_axes = parse_axes(&lines[1], "in")?;
    let out_axes = parse_axes(&lines[2], "out")?;
    let prov: Vec<&str> = lines[3].split_whitespace().collect();
    if prov.len() != 5 || prov[1] != "seed" || prov[3] != "n_per_bin" {
        return Err(Error::Parse(format!("bad provenance line `{}`", lines[3])));
    }
    let opt = |s: &str| -> Result<Option<u64>> {
        if s == "none" {
            Ok(None)
        } else {
            s.parse()
                .map(Some)
                .map_err(|e| Error::Parse(format!("bad integer `{s}`: {e}")))
        }
    };
    let provenance = Provenance {
        seed: opt(prov[2])?,
        n_per_bin: opt(prov[4])?,
    };
    Ok((rows, cols, in_axes, out_axes, provenance))
}
