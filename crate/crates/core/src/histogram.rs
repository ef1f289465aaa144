//! Uniformly binned 1-D and 2-D histograms, Poisson covariances and the
//! histogram CSV/JSON formats.
//!
//! Bins are right-open, `[lo + i*w, lo + (i+1)*w)`, except that the upper
//! edge `hi` itself belongs to the last bin. Two-dimensional histograms are
//! stored row-major with axis 0 varying slowest.

use std::fmt::Write as _;
use std::io::{BufRead, Write};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{dim_mismatch, Error, Result};
use crate::matrix::DenseMatrix;

/// A uniformly binned axis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Axis {
    lo: f64,
    hi: f64,
    nbins: usize,
}

impl Axis {
    pub fn new(lo: f64, hi: f64, nbins: usize) -> Result<Self> {
        if !(lo.is_finite() && hi.is_finite()) || lo >= hi {
            return Err(Error::Config(format!("axis needs finite lo < hi, got [{lo}, {hi}]")));
        }
        if nbins == 0 {
            return Err(Error::Config("axis needs at least one bin".into()));
        }
        Ok(Self { lo, hi, nbins })
    }

    /// Axis of `2 * half_bins + 1` bins of width `width` whose middle bin is
    /// centred on zero.
    pub fn centered(width: f64, half_bins: usize) -> Result<Self> {
        let half = (half_bins as f64 + 0.5) * width;
        Self::new(-half, half, 2 * half_bins + 1)
    }

    pub fn lo(&self) -> f64 {
        self.lo
    }

    pub fn hi(&self) -> f64 {
        self.hi
    }

    pub fn nbins(&self) -> usize {
        self.nbins
    }

    pub fn width(&self) -> f64 {
        (self.hi - self.lo) / self.nbins as f64
    }

    /// Lower edge of bin `i`; `edge(nbins) == hi` exactly.
    pub fn edge(&self, i: usize) -> f64 {
        if i >= self.nbins {
            self.hi
        } else {
            self.lo + i as f64 * self.width()
        }
    }

    pub fn center(&self, i: usize) -> f64 {
        0.5 * (self.edge(i) + self.edge(i + 1))
    }

    pub fn centers(&self) -> Vec<f64> {
        (0..self.nbins).map(|i| self.center(i)).collect()
    }

    /// Bin containing `x`, consistent with [`Axis::edge`] even where the
    /// floating-point division rounds across an edge.
    pub fn index(&self, x: f64) -> Option<usize> {
        if !(x >= self.lo && x <= self.hi) {
            return None;
        }
        let guess = ((x - self.lo) / self.width()).floor();
        let mut i = if guess < 0.0 {
            0
        } else {
            (guess as usize).min(self.nbins - 1)
        };
        if x < self.edge(i) && i > 0 {
            i -= 1;
        } else if i + 1 < self.nbins && x >= self.edge(i + 1) {
            i += 1;
        }
        Some(i)
    }

    /// True when the axis is symmetric about zero.
    pub fn is_symmetric(&self) -> bool {
        (self.lo + self.hi).abs() <= 1e-12 * self.hi.abs().max(1.0)
    }
}

/// What the values of a histogram mean.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum HistKind {
    /// Bin contents (entries per bin), nonnegative.
    Counts,
    /// Density per unit bin volume.
    Density,
}

impl HistKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            HistKind::Counts => "counts",
            HistKind::Density => "density",
        }
    }
}

impl FromStr for HistKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "counts" => Ok(HistKind::Counts),
            "density" => Ok(HistKind::Density),
            other => Err(Error::Parse(format!("unknown histogram kind `{other}`"))),
        }
    }
}

/// Binned values over one or two uniform axes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridHistogram {
    axes: Vec<Axis>,
    kind: HistKind,
    values: Vec<f64>,
}

fn check_axes(axes: &[Axis]) -> Result<usize> {
    match axes.len() {
        0 => Err(Error::Config("histogram needs at least one axis".into())),
        1 | 2 => Ok(axes.iter().map(Axis::nbins).product()),
        n => Err(Error::Unsupported(format!("{n}-dimensional histograms"))),
    }
}

impl GridHistogram {
    pub fn new(axes: Vec<Axis>, values: Vec<f64>, kind: HistKind) -> Result<Self> {
        let len = check_axes(&axes)?;
        if values.len() != len {
            return Err(dim_mismatch(len, values.len()));
        }
        if kind == HistKind::Counts && values.iter().any(|&v| !(v >= 0.0)) {
            return Err(Error::DegenerateInput("counts must be nonnegative".into()));
        }
        Ok(Self { axes, kind, values })
    }

    pub fn zeros(axes: Vec<Axis>, kind: HistKind) -> Result<Self> {
        let len = check_axes(&axes)?;
        Ok(Self {
            axes,
            kind,
            values: vec![0.0; len],
        })
    }

    /// Histograms sample points; returns the counts and the number of
    /// samples that fell outside the grid.
    pub fn from_samples<P: AsRef<[f64]>>(samples: impl IntoIterator<Item = P>, axes: Vec<Axis>) -> Result<(Self, u64)> {
        let mut h = Self::zeros(axes, HistKind::Counts)?;
        let mut overflow = 0;
        for p in samples {
            let p = p.as_ref();
            if p.len() != h.axes.len() {
                return Err(dim_mismatch(h.axes.len(), p.len()));
            }
            if p.iter().any(|v| !v.is_finite()) {
                return Err(Error::DegenerateInput("non-finite sample".into()));
            }
            if !h.fill(p) {
                overflow += 1;
            }
        }
        Ok((h, overflow))
    }

    /// Adds one entry at `point`; returns false if it lies outside the grid.
    pub fn fill(&mut self, point: &[f64]) -> bool {
        match self.flat_index(point) {
            Some(i) => {
                self.values[i] += 1.0;
                true
            }
            None => false,
        }
    }

    pub fn flat_index(&self, point: &[f64]) -> Option<usize> {
        let mut idx = 0;
        for (axis, &x) in self.axes.iter().zip(point) {
            idx = idx * axis.nbins() + axis.index(x)?;
        }
        Some(idx)
    }

    /// Per-axis bin indices of a flat index.
    pub fn unflatten(&self, mut flat: usize) -> Vec<usize> {
        let mut out = vec![0; self.axes.len()];
        for (d, axis) in self.axes.iter().enumerate().rev() {
            out[d] = flat % axis.nbins();
            flat /= axis.nbins();
        }
        out
    }

    pub fn bin_center(&self, flat: usize) -> Vec<f64> {
        self.unflatten(flat)
            .iter()
            .zip(&self.axes)
            .map(|(&i, a)| a.center(i))
            .collect()
    }

    pub fn axes(&self) -> &[Axis] {
        &self.axes
    }

    pub fn kind(&self) -> HistKind {
        self.kind
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn dims(&self) -> usize {
        self.axes.len()
    }

    pub fn bin_volume(&self) -> f64 {
        self.axes.iter().map(Axis::width).product()
    }

    /// Content per bin: counts as-is, densities times the bin volume.
    pub fn bin_contents(&self) -> Vec<f64> {
        match self.kind {
            HistKind::Counts => self.values.clone(),
            HistKind::Density => {
                let vol = self.bin_volume();
                self.values.iter().map(|v| v * vol).collect()
            }
        }
    }

    /// Integral over the grid (sum of bin contents).
    pub fn total(&self) -> f64 {
        self.bin_contents().iter().sum()
    }

    /// Density kind with unit integral over the grid.
    pub fn normalize(&self) -> Result<Self> {
        let total = self.total();
        if !(total > 0.0) || !total.is_finite() {
            return Err(Error::DegenerateInput(format!(
                "cannot normalize a histogram with total {total}"
            )));
        }
        let vol = self.bin_volume();
        let values = match self.kind {
            HistKind::Counts => self.values.iter().map(|v| v / (total * vol)).collect(),
            HistKind::Density => self.values.iter().map(|v| v / total).collect(),
        };
        Ok(Self {
            axes: self.axes.clone(),
            kind: HistKind::Density,
            values,
        })
    }

    /// Density-kind histogram from bin contents.
    pub fn from_contents(axes: Vec<Axis>, contents: &[f64]) -> Result<Self> {
        let vol: f64 = axes.iter().map(Axis::width).product();
        Self::new(axes, contents.iter().map(|c| c / vol).collect(), HistKind::Density)
    }

    /// 1-D section of a 2-D histogram along axis 1, at the axis-0 bin that
    /// contains `x0`.
    pub fn slice_axis0(&self, x0: f64) -> Result<Self> {
        if self.axes.len() != 2 {
            return Err(Error::Unsupported("slices need a 2-D histogram".into()));
        }
        let i = self.axes[0]
            .index(x0)
            .ok_or_else(|| Error::Config(format!("slice position {x0} outside axis-0 range")))?;
        let n1 = self.axes[1].nbins();
        let values = self.values[i * n1..(i + 1) * n1].to_vec();
        Self::new(vec![self.axes[1]], values, self.kind)
    }

    pub fn to_csv_string(&self) -> String {
        let mut s = String::from("#");
        for (d, a) in self.axes.iter().enumerate() {
            let _ = write!(s, " axis{d} {} {} {}", fmt_f64(a.lo), fmt_f64(a.hi), a.nbins);
        }
        let _ = writeln!(s, " kind={}", self.kind.as_str());
        for (i, v) in self.values.iter().enumerate() {
            let _ = write!(s, "{i}");
            for c in self.bin_center(i) {
                let _ = write!(s, ",{}", fmt_f64(c));
            }
            let _ = writeln!(s, ",{}", fmt_f64(*v));
        }
        s
    }

    pub fn write_csv(&self, mut w: impl Write) -> Result<()> {
        w.write_all(self.to_csv_string().as_bytes())?;
        Ok(())
    }

    pub fn read_csv(r: impl BufRead) -> Result<Self> {
        let mut lines = r.lines();
        let header = lines
            .next()
            .ok_or_else(|| Error::Parse("empty histogram file".into()))??;
        let tokens: Vec<&str> = header
            .strip_prefix('#')
            .ok_or_else(|| Error::Parse("histogram header must start with `#`".into()))?
            .split_whitespace()
            .collect();
        let mut axes = Vec::new();
        let mut kind = None;
        let mut t = 0;
        while t < tokens.len() {
            let tok = tokens[t];
            if let Some(k) = tok.strip_prefix("kind=") {
                kind = Some(k.parse::<HistKind>()?);
                t += 1;
            } else if tok.starts_with("axis") {
                if t + 3 >= tokens.len() {
                    return Err(Error::Parse(format!("truncated axis spec `{header}`")));
                }
                axes.push(Axis::new(
                    parse_f64(tokens[t + 1])?,
                    parse_f64(tokens[t + 2])?,
                    parse_usize(tokens[t + 3])?,
                )?);
                t += 4;
            } else {
                return Err(Error::Parse(format!("unexpected header token `{tok}`")));
            }
        }
        let kind = kind.ok_or_else(|| Error::Parse("missing kind= in header".into()))?;
        let len = check_axes(&axes)?;
        let mut values = Vec::with_capacity(len);
        for line in lines {
            let line = line?;
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != axes.len() + 2 {
                return Err(Error::Parse(format!("malformed histogram row `{line}`")));
            }
            let idx = parse_usize(fields[0])?;
            if idx != values.len() {
                return Err(Error::Parse(format!(
                    "expected bin index {}, found {idx}",
                    values.len()
                )));
            }
            values.push(parse_f64(fields[fields.len() - 1])?);
        }
        Self::new(axes, values, kind)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let raw: GridHistogram = serde_json::from_str(s)?;
        Self::new(raw.axes, raw.values, raw.kind)
    }
}

/// Symmetric positive-semidefinite covariance of bin contents.
#[derive(Debug, Clone, PartialEq)]
pub struct CovarianceMatrix {
    entries: DenseMatrix,
}

impl CovarianceMatrix {
    pub fn new(entries: DenseMatrix) -> Result<Self> {
        if !entries.is_square() {
            return Err(dim_mismatch("square matrix", format!("{:?}", entries.shape())));
        }
        let n = entries.rows();
        let scale = entries.max_abs().max(f64::MIN_POSITIVE);
        for i in 0..n {
            if entries[(i, i)] < -1e-12 * scale {
                return Err(Error::DegenerateInput(format!(
                    "negative variance {} in bin {i}",
                    entries[(i, i)]
                )));
            }
            for j in 0..i {
                if (entries[(i, j)] - entries[(j, i)]).abs() > 1e-12 * scale {
                    return Err(Error::DegenerateInput(format!("covariance not symmetric at ({i},{j})")));
                }
            }
        }
        Ok(Self { entries })
    }

    pub fn diagonal(diag: &[f64]) -> Result<Self> {
        Self::new(DenseMatrix::from_diagonal(diag))
    }

    pub fn entries(&self) -> &DenseMatrix {
        &self.entries
    }

    pub fn variances(&self) -> Vec<f64> {
        self.entries.diagonal()
    }

    pub fn dim(&self) -> usize {
        self.entries.rows()
    }
}

/// Independent-Poisson covariance of a counts histogram: `diag(N_1, ..., N_M)`.
pub fn poisson_covariance(h: &GridHistogram) -> Result<CovarianceMatrix> {
    if h.kind() != HistKind::Counts {
        return Err(Error::KindMismatch {
            expected: "counts",
            found: h.kind().as_str(),
        });
    }
    CovarianceMatrix::diagonal(h.values())
}

/// Decimal with 17 significant digits; parses back to the same bits.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

pub(crate) fn parse_f64(s: &str) -> Result<f64> {
    s.trim()
        .parse::<f64>()
        .map_err(|e| Error::Parse(format!("bad number `{s}`: {e}")))
}

pub(crate) fn parse_usize(s: &str) -> Result<usize> {
    s.trim()
        .parse::<usize>()
        .map_err(|e| Error::Parse(format!("bad integer `{s}`: {e}")))
}
