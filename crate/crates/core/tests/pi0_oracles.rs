mod common;

use common::*;
use rand::Rng;
use series_unfold::pi0::{
    build_gamma_response, decay_along, decay_to_gammas, random_axis, run_pi0_experiment, sample_pi0, to_eta_pt,
    DecayConfig, FourMomentum, MomentumBinning, Pi0Experiment, ResolutionModel, PI0_MASS,
};
use series_unfold::{Axis, GridHistogram};

const M: f64 = PI0_MASS;

fn random_pion(r: &mut impl Rng) -> FourMomentum {
    let p = [
        r.random_range(-5.0..5.0),
        r.random_range(-5.0..5.0),
        r.random_range(-20.0..20.0),
    ];
    let e = (M * M + p[0] * p[0] + p[1] * p[1] + p[2] * p[2]).sqrt();
    FourMomentum::new(e, p[0], p[1], p[2])
}

#[test]
fn decays_conserve_momentum_and_stay_on_shell() {
    let mut r = rng(8);
    let cfg = DecayConfig::default();
    for i in 0..200_000u32 {
        let p = if i.is_multiple_of(2) {
            sample_pi0(&cfg, &mut r)
        } else {
            random_pion(&mut r)
        };
        assert!(
            (p.mass2() - M * M).abs() <= 1e-9 * p.e.max(1.0),
            "pion m^2 {}",
            p.mass2()
        );
        let (k1, k2) = decay_to_gammas(&p, M, &mut r).unwrap();
        for k in [k1, k2] {
            assert!(k.e > 0.0);
            assert!((k.e - k.p()).abs() <= 1e-9 * k.e, "photon not null: {k:?}");
        }
        let sum = k1.add(&k2);
        for (a, b) in [(sum.e, p.e), (sum.px, p.px), (sum.py, p.py), (sum.pz, p.pz)] {
            assert!((a - b).abs() <= 1e-9 * p.e);
        }
    }
}

#[test]
fn rest_decay_is_back_to_back_at_half_mass() {
    let p = FourMomentum::new(M, 0.0, 0.0, 0.0);
    let mut r = rng(1);
    for _ in 0..100 {
        let (k1, k2) = decay_to_gammas(&p, M, &mut r).unwrap();
        assert!((k1.e - M / 2.0).abs() < 1e-15 && (k2.e - M / 2.0).abs() < 1e-15);
        assert!((k1.px + k2.px).abs() < 1e-15 && (k1.pz + k2.pz).abs() < 1e-15);
    }
}

#[test]
fn boosted_photon_energies_span_closed_form_range() {
    let mut r = rng(2);
    for _ in 0..1000 {
        let p = random_pion(&mut r);
        let (lo, hi) = ((p.e - p.p()) / 2.0, (p.e + p.p()) / 2.0);
        let dir = [p.px / p.p(), p.py / p.p(), p.pz / p.p()];
        let (fwd, back) = decay_along(&p, M, dir).unwrap();
        assert!((fwd.e - hi).abs() <= 1e-9 * p.e && (back.e - lo).abs() <= 1e-9 * p.e);
        let (k1, k2) = decay_to_gammas(&p, M, &mut r).unwrap();
        for k in [k1, k2] {
            assert!(k.e >= lo - 1e-9 * p.e && k.e <= hi + 1e-9 * p.e);
        }
    }
}

#[test]
fn off_shell_input_is_rejected() {
    let p = FourMomentum::new(1.0, 0.0, 0.0, 0.5);
    assert!(decay_to_gammas(&p, M, &mut rng(0)).is_err());
}

#[test]
fn decay_axes_are_isotropic() {
    let mut r = rng(99);
    let n = 1_000_000;
    let mut z: Vec<f64> = (0..n).map(|_| random_axis(&mut r)[2]).collect();
    z.sort_by(f64::total_cmp);
    let ks = z
        .iter()
        .enumerate()
        .map(|(i, &v)| {
            let cdf = (v + 1.0) / 2.0;
            (cdf - i as f64 / n as f64)
                .abs()
                .max(((i + 1) as f64 / n as f64 - cdf).abs())
        })
        .fold(0.0, f64::max);
    let critical = 1.6276 / (n as f64).sqrt();
    assert!(ks < critical, "KS statistic {ks} above {critical}");
}

#[test]
fn generator_moments_match_configuration() {
    let cfg = DecayConfig::default();
    let mut r = rng(3);
    let n = 1_000_000;
    let (mut sy, mut syy, mut set) = (0.0, 0.0, 0.0);
    for _ in 0..n {
        let p = sample_pi0(&cfg, &mut r);
        let y = p.rapidity();
        sy += y;
        syy += y * y;
        set += p.et() - cfg.mass;
    }
    let nf = n as f64;
    let sd = (syy / nf - (sy / nf).powi(2)).sqrt();
    assert!((sd - cfg.sigma_y).abs() < 0.002, "rapidity sd {sd}");
    assert!((set / nf - cfg.t_slope).abs() < 0.002, "E_T - m mean {}", set / nf);
}

#[test]
fn eta_pt_examples() {
    assert_eq!(to_eta_pt(&FourMomentum::new(1.0, 1.0, 0.0, 0.0)).unwrap(), (0.0, 1.0));
    let (eta, pt) = to_eta_pt(&FourMomentum::new(2f64.sqrt(), 1.0, 0.0, 1.0)).unwrap();
    assert!((eta - 0.881_373_587_019_543).abs() < 1e-12 && pt == 1.0);
    let (a, _) = to_eta_pt(&FourMomentum::new(3.0, 0.3, 0.4, 2.0)).unwrap();
    let (b, _) = to_eta_pt(&FourMomentum::new(3.0, 0.3, 0.4, -2.0)).unwrap();
    assert_eq!(a, -b);
    assert!(to_eta_pt(&FourMomentum::new(1.0, 0.0, 0.0, 1.0)).is_err());
}

/// Lab photon from a rest-frame photon along `n`, using the parallel and
/// perpendicular split of the boost.
fn lab_photon(p: &FourMomentum, n: [f64; 3]) -> (f64, f64) {
    let (e_star, gamma) = (M / 2.0, p.e / M);
    let beta = p.p() / p.e;
    let u = [p.px / p.p(), p.py / p.p(), p.pz / p.p()];
    let k_par = e_star * (n[0] * u[0] + n[1] * u[1] + n[2] * u[2]);
    let perp: Vec<f64> = (0..3).map(|i| e_star * n[i] - k_par * u[i]).collect();
    let par_lab = gamma * (k_par + beta * e_star);
    let k: Vec<f64> = (0..3).map(|i| perp[i] + par_lab * u[i]).collect();
    let pt = k[0].hypot(k[1]);
    ((k[2] / pt).asinh(), pt)
}

#[test]
fn low_momentum_column_matches_direct_histogram() {
    let pion = MomentumBinning {
        eta: Axis::new(0.0, 0.3, 1).unwrap(),
        pt: Axis::new(0.0, 0.15, 1).unwrap(),
    };
    let photon = MomentumBinning::default();
    let n = 400_000u64;
    let a = build_gamma_response(&pion, &photon, M, &ResolutionModel::default(), n, 17).unwrap();
    let column = a.entries().column(0);

    let mut r = rng(4242);
    let mut points = Vec::with_capacity(2 * n as usize);
    for _ in 0..n {
        let eta: f64 = r.random_range(0.0..0.3);
        let pt: f64 = r.random_range(0.0..0.15);
        let phi: f64 = r.random_range(0.0..std::f64::consts::TAU);
        let p = FourMomentum::new(
            (M * M + (pt * eta.cosh()).powi(2)).sqrt(),
            pt * phi.cos(),
            pt * phi.sin(),
            pt * eta.sinh(),
        );
        let cz: f64 = r.random_range(-1.0..1.0);
        let az: f64 = r.random_range(0.0..std::f64::consts::TAU);
        let s = (1.0 - cz * cz).sqrt();
        let axis = [s * az.cos(), s * az.sin(), cz];
        for sign in [1.0, -1.0] {
            let (e, q) = lab_photon(&p, axis.map(|v| sign * v));
            points.push([e, q]);
        }
    }
    let (direct, _) = GridHistogram::from_samples(points, photon.axes()).unwrap();
    let total = 2.0 * n as f64;
    let mut mass_near_ring = 0.0;
    for (i, (&c, &d)) in column.iter().zip(direct.values()).enumerate() {
        let q = d / total;
        let sigma = (4.0 * q.max(1.0 / total) * (1.0 - q) / total).sqrt();
        assert!((c - q).abs() < 5.0 * sigma, "bin {i}: {c} vs {q}");
        let pt = direct.bin_center(i)[1];
        if pt < 0.15 {
            mass_near_ring += c;
        }
    }
    assert!(
        mass_near_ring > 0.9,
        "only {mass_near_ring} of the photons below 0.15 GeV"
    );
    assert!((column.iter().sum::<f64>() + a.leakage()[0] - 1.0).abs() < 1e-6);
}

#[test]
fn single_event_run_completes() {
    let exp = Pi0Experiment {
        n_events: 1,
        n_per_bin: 200,
        ..Pi0Experiment::default()
    };
    let report = run_pi0_experiment(&exp).unwrap();
    assert!(
        report.unfold.trace.len() <= 2,
        "{} iterations",
        report.unfold.trace.len()
    );
}

#[test]
fn hundred_thousand_event_run_within_tenth_of_truth() {
    let exp = Pi0Experiment {
        n_events: 100_000,
        ..Pi0Experiment::default()
    };
    let report = run_pi0_experiment(&exp).unwrap();
    assert!(
        report.l1_distance < 0.1,
        "L1 {} at iteration {}",
        report.l1_distance,
        report.unfold.selected
    );
    assert!(
        (0.65..=0.95).contains(&report.cauchy.saturation),
        "saturation {}",
        report.cauchy.saturation
    );
}
