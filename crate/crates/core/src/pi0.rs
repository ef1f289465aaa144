//! Neutral-pion two-photon decay simulation.
//!
//! Pions are generated from a toy spectrum that is Gaussian in rapidity and
//! exponential in transverse energy, decayed isotropically in their rest
//! frame, and the photons are histogrammed in pseudorapidity and transverse
//! momentum. The same machinery estimates the photon response matrix, which
//! the unfolding engine then inverts to recover the pion spectrum.

use std::f64::consts::PI;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp, Normal};
#[cfg(feature = "parallel")]
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::folding::{mc_estimate_matrix, substream, FoldingMatrix, ResponseSampler};
use crate::histogram::{Axis, GridHistogram, HistKind};
use crate::unfold::{cauchy_trace, run_unfold, CauchyTrace, Smoother, StoppingPolicy, UnfoldReport};

/// Neutral pion mass in GeV.
pub const PI0_MASS: f64 = 0.1349766;

/// Relative tolerance of the mass-shell checks.
pub const SHELL_TOL: f64 = 1e-9;

/// Lorentz four-vector `(e, px, py, pz)` in GeV.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FourMomentum {
    pub e: f64,
    pub px: f64,
    pub py: f64,
    pub pz: f64,
}

impl FourMomentum {
    pub fn new(e: f64, px: f64, py: f64, pz: f64) -> Self {
        Self { e, px, py, pz }
    }

    pub fn p2(&self) -> f64 {
        self.px * self.px + self.py * self.py + self.pz * self.pz
    }

    pub fn p(&self) -> f64 {
        self.p2().sqrt()
    }

    pub fn mass2(&self) -> f64 {
        self.e * self.e - self.p2()
    }

    pub fn pt(&self) -> f64 {
        self.px.hypot(self.py)
    }

    /// Transverse energy `sqrt(m^2 + pt^2)`.
    pub fn et(&self) -> f64 {
        (self.e * self.e - self.pz * self.pz).max(0.0).sqrt()
    }

    pub fn rapidity(&self) -> f64 {
        0.5 * ((self.e + self.pz) / (self.e - self.pz)).ln()
    }

    pub fn add(&self, o: &FourMomentum) -> FourMomentum {
        FourMomentum::new(self.e + o.e, self.px + o.px, self.py + o.py, self.pz + o.pz)
    }
}

/// Toy pion spectrum parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DecayConfig {
    pub mass: f64,
    pub sigma_y: f64,
    /// Inverse slope of the transverse-energy exponential, GeV.
    pub t_slope: f64,
    pub seed: u64,
}

impl Default for DecayConfig {
    fn default() -> Self {
        Self {
            mass: PI0_MASS,
            sigma_y: 0.5,
            t_slope: 0.5,
            seed: 1,
        }
    }
}

impl DecayConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.mass > 0.0 && self.sigma_y > 0.0 && self.t_slope > 0.0) {
            return Err(Error::Config("mass, sigma_y and t_slope must be positive".into()));
        }
        Ok(())
    }
}

/// Pion built from rapidity, transverse energy and azimuth.
pub fn pi0_from_coordinates(mass: f64, y: f64, et: f64, phi: f64) -> Result<FourMomentum> {
    if !(et >= mass) {
        return Err(Error::Kinematics(format!("transverse energy {et} below mass {mass}")));
    }
    let pt = ((et - mass) * (et + mass)).sqrt();
    Ok(FourMomentum::new(
        et * y.cosh(),
        pt * phi.cos(),
        pt * phi.sin(),
        et * y.sinh(),
    ))
}

/// Draws one pion: `y ~ N(0, sigma_y)`, `E_T = m + Exp(mean t_slope)`,
/// azimuth uniform.
pub fn sample_pi0(cfg: &DecayConfig, rng: &mut impl Rng) -> FourMomentum {
    let y = Normal::new(0.0, cfg.sigma_y).expect("positive sigma").sample(rng);
    let et = cfg.mass + Exp::new(1.0 / cfg.t_slope).expect("positive slope").sample(rng);
    let phi = 2.0 * PI * rng.random::<f64>();
    pi0_from_coordinates(cfg.mass, y, et, phi).expect("et >= mass by construction")
}

fn on_shell(p: &FourMomentum, mass: f64) -> bool {
    (p.mass2() - mass * mass).abs() <= SHELL_TOL * p.e.max(mass).powi(2)
}

/// Boosts `k` from the rest frame of a particle with four-momentum `p` and
/// mass `mass` into the lab frame.
pub fn boost(k: &FourMomentum, p: &FourMomentum, mass: f64) -> FourMomentum {
    let gamma = p.e / mass;
    let (bx, by, bz) = (p.px / p.e, p.py / p.e, p.pz / p.e);
    let bk = bx * k.px + by * k.py + bz * k.pz;
    let coef = gamma * gamma / (gamma + 1.0) * bk + gamma * k.e;
    FourMomentum::new(gamma * (k.e + bk), k.px + coef * bx, k.py + coef * by, k.pz + coef * bz)
}

/// Decays `p` into two photons along the given unit axis (rest frame).
pub fn decay_along(p: &FourMomentum, mass: f64, axis: [f64; 3]) -> Result<(FourMomentum, FourMomentum)> {
    if !on_shell(p, mass) {
        return Err(Error::Kinematics(format!(
            "momentum off the mass shell: m^2 = {}, expected {}",
            p.mass2(),
            mass * mass
        )));
    }
    let h = 0.5 * mass;
    let k1 = FourMomentum::new(h, h * axis[0], h * axis[1], h * axis[2]);
    let k2 = FourMomentum::new(h, -h * axis[0], -h * axis[1], -h * axis[2]);
    Ok((boost(&k1, p, mass), boost(&k2, p, mass)))
}

/// Uniformly distributed unit vector.
pub fn random_axis(rng: &mut impl Rng) -> [f64; 3] {
    let cz = 2.0 * rng.random::<f64>() - 1.0;
    let phi = 2.0 * PI * rng.random::<f64>();
    let sz = (1.0 - cz * cz).max(0.0).sqrt();
    [sz * phi.cos(), sz * phi.sin(), cz]
}

/// Isotropic two-photon decay of `p`.
pub fn decay_to_gammas(p: &FourMomentum, mass: f64, rng: &mut impl Rng) -> Result<(FourMomentum, FourMomentum)> {
    let axis = random_axis(rng);
    decay_along(p, mass, axis)
}

/// Pseudorapidity and transverse momentum of a photon.
pub fn to_eta_pt(k: &FourMomentum) -> Result<(f64, f64)> {
    let pt = k.pt();
    if !(pt > 0.0) {
        return Err(Error::Kinematics(
            "pseudorapidity undefined for zero transverse momentum".into(),
        ));
    }
    Ok(((k.pz / pt).asinh(), pt))
}

/// Pion and photon grid in `(eta, p_T)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MomentumBinning {
    pub eta: Axis,
    pub pt: Axis,
}

impl Default for MomentumBinning {
    fn default() -> Self {
        Self {
            eta: Axis::new(-3.0, 3.0, 20).expect("valid axis"),
            pt: Axis::new(0.0, 3.0, 20).expect("valid axis"),
        }
    }
}

impl MomentumBinning {
    pub fn axes(&self) -> Vec<Axis> {
        vec![self.eta, self.pt]
    }
}

/// Optional Gaussian photon smearing.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ResolutionModel {
    /// Relative energy resolution `sigma_E / E`.
    pub energy: Option<f64>,
    /// Angular resolution in radians.
    pub angle: Option<f64>,
}

impl ResolutionModel {
    pub fn is_off(&self) -> bool {
        self.energy.is_none() && self.angle.is_none()
    }

    pub fn validate(&self) -> Result<()> {
        if self.energy.is_some_and(|v| !(v >= 0.0)) || self.angle.is_some_and(|v| !(v >= 0.0)) {
            return Err(Error::Config("resolution parameters must be nonnegative".into()));
        }
        Ok(())
    }

    /// Smears energy by `N(1, sigma_E/E)` (redrawn until positive) and tilts
    /// the direction by `N(0, sigma_theta)` about a random transverse axis.
    pub fn smear(&self, k: &FourMomentum, rng: &mut impl Rng) -> FourMomentum {
        if self.is_off() {
            return *k;
        }
        let p = k.p();
        let mut dir = [k.px / p, k.py / p, k.pz / p];
        let mut e = k.e;
        if let Some(s) = self.energy.filter(|s| *s > 0.0) {
            let dist = Normal::new(1.0, s).expect("positive width");
            let scale = loop {
                let v = dist.sample(rng);
                if v > 0.0 {
                    break v;
                }
            };
            e *= scale;
        }
        if let Some(s) = self.angle.filter(|s| *s > 0.0) {
            let alpha = Normal::new(0.0, s).expect("positive width").sample(rng);
            let psi = 2.0 * PI * rng.random::<f64>();
            let (a, b) = orthonormal_pair(dir);
            let n = [
                psi.cos() * a[0] + psi.sin() * b[0],
                psi.cos() * a[1] + psi.sin() * b[1],
                psi.cos() * a[2] + psi.sin() * b[2],
            ];
            let c = cross(n, dir);
            for i in 0..3 {
                dir[i] = dir[i] * alpha.cos() + c[i] * alpha.sin();
            }
        }
        FourMomentum::new(e, e * dir[0], e * dir[1], e * dir[2])
    }
}

fn cross(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

fn orthonormal_pair(u: [f64; 3]) -> ([f64; 3], [f64; 3]) {
    let helper = if u[0].abs() < 0.9 {
        [1.0, 0.0, 0.0]
    } else {
        [0.0, 1.0, 0.0]
    };
    let a = cross(u, helper);
    let na = (a[0] * a[0] + a[1] * a[1] + a[2] * a[2]).sqrt();
    let a = [a[0] / na, a[1] / na, a[2] / na];
    (a, cross(u, a))
}

/// Photon response: a pion at `(eta, p_T)` with random azimuth, decayed and
/// optionally smeared, emitting both photons in `(eta, p_T)`.
#[derive(Debug, Clone, Copy)]
pub struct PhotonResponse {
    pub mass: f64,
    pub resolution: ResolutionModel,
}

impl ResponseSampler for PhotonResponse {
    fn multiplicity(&self) -> usize {
        2
    }

    fn sample(&self, x: &[f64], rng: &mut ChaCha8Rng, emit: &mut dyn FnMut(&[f64])) {
        let (eta, pt) = (x[0], x[1]);
        let phi = 2.0 * PI * rng.random::<f64>();
        let p = FourMomentum::new(
            (self.mass * self.mass + (pt * eta.cosh()).powi(2)).sqrt(),
            pt * phi.cos(),
            pt * phi.sin(),
            pt * eta.sinh(),
        );
        let Ok((k1, k2)) = decay_to_gammas(&p, self.mass, rng) else {
            return;
        };
        for k in [k1, k2] {
            let k = self.resolution.smear(&k, rng);
            if let Ok((eta, pt)) = to_eta_pt(&k) {
                emit(&[eta, pt]);
            }
        }
    }
}

/// Monte Carlo photon response on the given pion and photon grids; columns
/// are per-photon probabilities.
pub fn build_gamma_response(
    pion_binning: &MomentumBinning,
    photon_binning: &MomentumBinning,
    mass: f64,
    resolution: &ResolutionModel,
    n_per_bin: u64,
    seed: u64,
) -> Result<FoldingMatrix> {
    resolution.validate()?;
    let sampler = PhotonResponse {
        mass,
        resolution: *resolution,
    };
    mc_estimate_matrix(&sampler, &pion_binning.axes(), &photon_binning.axes(), n_per_bin, seed)
}

/// Everything needed for a full simulate-and-unfold run.
#[derive(Debug, Clone, PartialEq)]
pub struct Pi0Experiment {
    pub decay: DecayConfig,
    pub n_events: u64,
    pub binning: MomentumBinning,
    pub resolution: ResolutionModel,
    pub n_per_bin: u64,
    pub policy: StoppingPolicy,
    pub smoother: Smoother,
    pub slices: Vec<f64>,
    pub cauchy_orders: usize,
}

impl Default for Pi0Experiment {
    fn default() -> Self {
        Self {
            decay: DecayConfig::default(),
            n_events: 1_000_000,
            binning: MomentumBinning::default(),
            resolution: ResolutionModel::default(),
            n_per_bin: 10_000,
            policy: StoppingPolicy {
                noise_threshold: 0.05,
                ..StoppingPolicy::default()
            },
            smoother: Smoother::Identity,
            slices: vec![0.0, 0.4],
            cauchy_orders: 50,
        }
    }
}

/// A slice at fixed pseudorapidity through the truth and unfolded spectra.
#[derive(Debug, Clone, PartialEq)]
pub struct EtaSlice {
    pub eta: f64,
    pub truth: GridHistogram,
    pub unfolded: GridHistogram,
}

/// Outputs of [`run_pi0_experiment`].
#[derive(Debug, Clone, PartialEq)]
pub struct Pi0Report {
    /// Generated pions inside the grid.
    pub truth: GridHistogram,
    /// Photons inside the grid (two per decay).
    pub measured: GridHistogram,
    /// Unfolded pion spectrum, pion counts per unit `(eta, p_T)` area.
    pub unfolded: GridHistogram,
    pub response: FoldingMatrix,
    pub unfold: UnfoldReport,
    pub cauchy: CauchyTrace,
    pub slices: Vec<EtaSlice>,
    /// L1 distance between the normalized unfolded and truth spectra.
    pub l1_distance: f64,
    pub pion_overflow: u64,
    pub photon_overflow: u64,
}

const EVENT_CHUNK: u64 = 8192;

/// Seed for an independent purpose derived from a user seed.
pub fn derive_seed(seed: u64, salt: u64) -> u64 {
    let mut z = seed ^ salt.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

struct EventTally {
    truth: Vec<u64>,
    measured: Vec<u64>,
    pion_overflow: u64,
    photon_overflow: u64,
}

fn generate_chunk(
    cfg: &DecayConfig,
    res: &ResolutionModel,
    grid: &GridHistogram,
    seed: u64,
    chunk: u64,
    n: u64,
) -> EventTally {
    let mut rng = substream(seed, chunk);
    let mut t = EventTally {
        truth: vec![0; grid.len()],
        measured: vec![0; grid.len()],
        pion_overflow: 0,
        photon_overflow: 0,
    };
    for _ in 0..n {
        let p = sample_pi0(cfg, &mut rng);
        match to_eta_pt(&p).ok().and_then(|(e, pt)| grid.flat_index(&[e, pt])) {
            Some(i) => t.truth[i] += 1,
            None => t.pion_overflow += 1,
        }
        let (k1, k2) = decay_to_gammas(&p, cfg.mass, &mut rng).expect("generated pions are on shell");
        for k in [k1, k2] {
            let k = res.smear(&k, &mut rng);
            match to_eta_pt(&k).ok().and_then(|(e, pt)| grid.flat_index(&[e, pt])) {
                Some(i) => t.measured[i] += 1,
                None => t.photon_overflow += 1,
            }
        }
    }
    t
}

/// Generates pion and photon histograms for `n_events` decays. Events are
/// produced in fixed-size chunks with their own substreams, so the result
/// does not depend on the number of threads.
pub fn generate_events(
    cfg: &DecayConfig,
    res: &ResolutionModel,
    binning: &MomentumBinning,
    n_events: u64,
) -> Result<(GridHistogram, GridHistogram, u64, u64)> {
    cfg.validate()?;
    res.validate()?;
    let grid = GridHistogram::zeros(binning.axes(), HistKind::Counts)?;
    let seed = derive_seed(cfg.seed, 1);
    let chunks = n_events.div_ceil(EVENT_CHUNK);
    let run = |c: u64| {
        let n = EVENT_CHUNK.min(n_events - c * EVENT_CHUNK);
        generate_chunk(cfg, res, &grid, seed, c, n)
    };
    #[cfg(feature = "parallel")]
    let tallies: Vec<EventTally> = (0..chunks).into_par_iter().map(run).collect();
    #[cfg(not(feature = "parallel"))]
    let tallies: Vec<EventTally> = (0..chunks).map(run).collect();

    let mut truth = vec![0u64; grid.len()];
    let mut measured = vec![0u64; grid.len()];
    let (mut po, mut go) = (0, 0);
    for t in tallies {
        truth.iter_mut().zip(&t.truth).for_each(|(a, b)| *a += b);
        measured.iter_mut().zip(&t.measured).for_each(|(a, b)| *a += b);
        po += t.pion_overflow;
        go += t.photon_overflow;
    }
    let to_hist = |v: Vec<u64>| {
        GridHistogram::new(
            binning.axes(),
            v.into_iter().map(|c| c as f64).collect(),
            HistKind::Counts,
        )
    };
    Ok((to_hist(truth)?, to_hist(measured)?, po, go))
}

/// L1 distance between two spectra after normalizing each to unit sum.
pub fn normalized_l1(a: &[f64], b: &[f64]) -> f64 {
    let sa: f64 = a.iter().sum();
    let sb: f64 = b.iter().sum();
    a.iter().zip(b).map(|(x, y)| (x / sa - y / sb).abs()).sum()
}

/// Generates events, builds the response, unfolds the photon spectrum and
/// compares against the generated pions.
pub fn run_pi0_experiment(exp: &Pi0Experiment) -> Result<Pi0Report> {
    if exp.n_events == 0 {
        return Err(Error::Config("n_events must be at least 1".into()));
    }
    let (truth, measured, pion_overflow, photon_overflow) =
        generate_events(&exp.decay, &exp.resolution, &exp.binning, exp.n_events)?;
    let response = build_gamma_response(
        &exp.binning,
        &exp.binning,
        exp.decay.mass,
        &exp.resolution,
        exp.n_per_bin,
        derive_seed(exp.decay.seed, 2),
    )?;
    let unfold = run_unfold(&measured, &response, &exp.smoother, &exp.policy)?;
    let cauchy = cauchy_trace(&measured, &response, &exp.smoother, exp.cauchy_orders)?;

    let pions: Vec<f64> = unfold.estimate.iter().map(|v| v / 2.0).collect();
    let unfolded = GridHistogram::from_contents(exp.binning.axes(), &pions)?;
    let l1_distance = normalized_l1(&pions, truth.values());
    let truth_density = GridHistogram::from_contents(exp.binning.axes(), truth.values())?;
    let slices = exp
        .slices
        .iter()
        .map(|&eta| {
            Ok(EtaSlice {
                eta,
                truth: truth_density.slice_axis0(eta)?,
                unfolded: unfolded.slice_axis0(eta)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Pi0Report {
        truth,
        measured,
        unfolded,
        response,
        unfold,
        cauchy,
        slices,
        l1_distance,
        pion_overflow,
        photon_overflow,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand_chacha::rand_core::SeedableRng;

    fn rng() -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(11)
    }

    #[test]
    fn pion_at_rest() {
        let p = pi0_from_coordinates(PI0_MASS, 0.0, PI0_MASS, 1.3).unwrap();
        assert_eq!(p, FourMomentum::new(PI0_MASS, 0.0, 0.0, 0.0));
    }

    #[test]
    fn rest_decay_is_back_to_back() {
        let p = FourMomentum::new(PI0_MASS, 0.0, 0.0, 0.0);
        let (k1, k2) = decay_to_gammas(&p, PI0_MASS, &mut rng()).unwrap();
        assert!((k1.e - PI0_MASS / 2.0).abs() < 1e-15);
        assert!((k2.e - PI0_MASS / 2.0).abs() < 1e-15);
        assert!((k1.px + k2.px).abs() < 1e-15 && (k1.pz + k2.pz).abs() < 1e-15);
    }

    #[test]
    fn photon_energies_bounded_by_boost() {
        let p = pi0_from_coordinates(PI0_MASS, 0.7, 1.2, 0.4).unwrap();
        let (lo, hi) = ((p.e - p.p()) / 2.0, (p.e + p.p()) / 2.0);
        let mut r = rng();
        for _ in 0..1000 {
            let (k1, _) = decay_to_gammas(&p, PI0_MASS, &mut r).unwrap();
            assert!(k1.e >= lo * (1.0 - 1e-12) && k1.e <= hi * (1.0 + 1e-12));
        }
        let dir = [p.px / p.p(), p.py / p.p(), p.pz / p.p()];
        let (k1, k2) = decay_along(&p, PI0_MASS, dir).unwrap();
        assert!((k1.e - hi).abs() < 1e-12 * hi && (k2.e - lo).abs() < 1e-9 * hi);
    }

    #[test]
    fn off_shell_rejected() {
        let p = FourMomentum::new(1.0, 0.0, 0.0, 0.5);
        assert!(matches!(
            decay_to_gammas(&p, PI0_MASS, &mut rng()),
            Err(Error::Kinematics(_))
        ));
    }

    #[test]
    fn eta_pt_examples() {
        assert_eq!(to_eta_pt(&FourMomentum::new(1.0, 1.0, 0.0, 0.0)).unwrap(), (0.0, 1.0));
        let (eta, pt) = to_eta_pt(&FourMomentum::new(2f64.sqrt(), 1.0, 0.0, 1.0)).unwrap();
        assert!((eta - 0.881_373_587_019_543).abs() < 1e-14 && pt == 1.0);
        let (a, _) = to_eta_pt(&FourMomentum::new(3.0, 0.3, 0.4, 2.0)).unwrap();
        let (b, _) = to_eta_pt(&FourMomentum::new(3.0, 0.3, 0.4, -2.0)).unwrap();
        assert_eq!(a, -b);
        assert!(to_eta_pt(&FourMomentum::new(1.0, 0.0, 0.0, 1.0)).is_err());
    }

    #[test]
    fn smearing_keeps_photons_massless() {
        let res = ResolutionModel {
            energy: Some(0.05),
            angle: Some(0.01),
        };
        let k = FourMomentum::new(2.0, 1.2, -0.4, 1.549_193_338_482_966_6);
        let mut r = rng();
        for _ in 0..100 {
            let s = res.smear(&k, &mut r);
            assert!(s.mass2().abs() <= 1e-9 * s.e * s.e);
        }
        assert_eq!(ResolutionModel::default().smear(&k, &mut r), k);
    }

    #[test]
    fn response_is_reproducible() {
        let b = MomentumBinning {
            eta: Axis::new(-1.0, 1.0, 4).unwrap(),
            pt: Axis::new(0.0, 2.0, 4).unwrap(),
        };
        let res = ResolutionModel::default();
        let a = build_gamma_response(&b, &b, PI0_MASS, &res, 500, 9).unwrap();
        let a2 = build_gamma_response(&b, &b, PI0_MASS, &res, 500, 9).unwrap();
        assert_eq!(a, a2);
        for (s, l) in a.entries().column_sums().iter().zip(a.leakage()) {
            assert!((s + l - 1.0).abs() < 1e-6);
        }
    }
}
