use std::f64::consts::{FRAC_PI_2, PI};

use proptest::prelude::*;

use curvlab::bending::{
    bend_ratio, build_bent_curve, classify, curve_from_kappa, curve_from_theta, flat_model_check, initial_bend,
    model_constants, step_bound, total_turning, Ambient, BendParams, ClassTag, Isotopy, Role,
};
use curvlab::conditions::{Condition, ConditionKind, ConeOptions};
use curvlab::numeric::linspace;
use curvlab::warped_metrics::{torpedo_profile, TorpedoMode, TorpedoParams};

fn params() -> impl Strategy<Value = BendParams> {
    (0.2f64..2.0, 0.5f64..2.0, 0.05f64..0.6, 0.5f64..2.0)
        .prop_map(|(rho, c2, theta0, rbar)| BendParams::new(rho, c2, theta0, rbar, 0.05 * rbar).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn bent_curves_certify_the_bending_inequality(p in params()) {
        let bent = build_bent_curve(&p).unwrap();
        let rep = &bent.report;
        prop_assert!(rep.steps <= step_bound(p.rho, p.c2, p.theta0));
        prop_assert!(rep.min_radius_ratio >= 0.5);
        // θ' ≤ (ρ/4C₂) sin θ / r, half the allowed bound
        let knots = bent.curve.knots(32);
        prop_assert!(bend_ratio(&bent.curve, &p, &knots) <= 0.5 + 1e-9);

        let c = bent.curve.sample(&knots);
        prop_assert!(c.r.windows(2).all(|w| w[1] <= w[0] + 1e-12));
        prop_assert!(c.t.windows(2).all(|w| w[1] >= w[0] - 1e-12));
        prop_assert!(c.theta.iter().all(|&th| (-1e-12..=FRAC_PI_2 + 1e-12).contains(&th)));
        let class = classify(&c);
        prop_assert_eq!(class.tag, ClassTag::GammaTildeB);
        prop_assert!(class.partition.is_some());
        prop_assert!(total_turning(&bent.curve).abs() <= 1e-12);
    }

    #[test]
    fn axis_hit_moves_linearly_with_the_angle(amp in 0.1f64..0.8) {
        // θ = a·sin²(πs/2) on [0, 2], then 0: hits the axis perpendicular
        let h = 1e-3;
        let b = |a: f64| {
            let theta: Vec<f64> = (0..=4000)
                .map(|i| {
                    let s = i as f64 * h;
                    if s < 2.0 { a * (PI * s / 2.0).sin().powi(2) } else { 0.0 }
                })
                .collect();
            classify(&curve_from_theta(&theta, h, 3.0).unwrap()).b.unwrap()
        };
        let b0 = b(amp);
        let d3 = (b(amp + 1e-3) - b0).abs();
        let d4 = (b(amp + 1e-4) - b0).abs();
        prop_assert!(d3 <= 10.0 * 1e-3);
        let ratio = d3 / d4;
        prop_assert!((8.0..=12.0).contains(&ratio), "ratio {ratio}");
    }
}

#[test]
fn reconstruction_from_angles() {
    let h = 1.0 / 512.0;
    let zero = curve_from_theta(&vec![0.0; 513], h, 1.0).unwrap();
    for i in 0..zero.len() {
        assert!((zero.r[i] - (1.0 - zero.s[i])).abs() <= 1e-14 && zero.t[i] == 0.0);
    }
    let vertical = curve_from_theta(&vec![FRAC_PI_2; 513], h, 1.0).unwrap();
    for i in 0..vertical.len() {
        assert!((vertical.r[i] - 1.0).abs() <= 1e-14 && (vertical.t[i] - vertical.s[i]).abs() <= 1e-14);
    }
    assert_eq!(classify(&vertical).tag, ClassTag::None);

    // θ = (π/2)·min(s, 1) against its closed-form integrals
    let h = 1.0 / 1024.0;
    let theta: Vec<f64> = (0..=2048).map(|i| FRAC_PI_2 * (i as f64 * h).min(1.0)).collect();
    let c = curve_from_theta(&theta, h, 2.0).unwrap();
    for i in 0..c.len() {
        let s = c.s[i];
        let (r, t) = if s <= 1.0 {
            (2.0 - (FRAC_PI_2 * s).sin() / FRAC_PI_2, (1.0 - (FRAC_PI_2 * s).cos()) / FRAC_PI_2)
        } else {
            (2.0 - 1.0 / FRAC_PI_2, 1.0 / FRAC_PI_2 + (s - 1.0))
        };
        assert!((c.r[i] - r).abs() <= 1e-9 && (c.t[i] - t).abs() <= 1e-9, "s={s}");
    }
}

#[test]
fn curvature_round_trip() {
    // smooth θ; a kink would make the differenced κ overshoot π/2
    let h = 1.0 / 1024.0;
    let theta: Vec<f64> = (0..=2048).map(|i| 1.2 * (i as f64 * h / 2.0 * FRAC_PI_2).sin().powi(2)).collect();
    let c = curve_from_theta(&theta, h, 2.0).unwrap();
    let back = curve_from_kappa(&c.kappa, h, 2.0).unwrap();
    for i in 0..c.len() {
        assert!((back.r[i] - c.r[i]).abs() <= 1e-6 && (back.t[i] - c.t[i]).abs() <= 1e-6, "s={}", c.s[i]);
    }
}

#[test]
fn straight_curve_is_gamma_b() {
    let c = curve_from_theta(&vec![0.0; 1025], 1.0 / 1024.0, 1.0).unwrap();
    let class = classify(&c);
    assert_eq!(class.tag, ClassTag::GammaB);
    assert!((class.b.unwrap() - 1.0).abs() <= 1e-12);
}

#[test]
fn segment_sampling_matches_simpson_reconstruction() {
    let p = BendParams::new(1.0, 1.0, 0.3, 1.0, 0.1).unwrap();
    let bent = build_bent_curve(&p).unwrap();
    let n = 16385;
    let c = bent.curve.sample_uniform(bent.curve.length(), n);
    let h = c.s[1] - c.s[0];
    let oracle = curve_from_theta(&c.theta, h, p.rbar).unwrap();
    // the final turn near the axis has κ in the thousands; a uniform grid
    // cannot resolve it, and the cumulative error carries past it
    let resolved = c.kappa.iter().position(|k| k.abs() * h > 1e-3).unwrap_or(n);
    assert!(c.s[resolved.min(n - 1)] >= 0.9 * bent.curve.length());
    for i in 0..resolved {
        assert!((c.r[i] - oracle.r[i]).abs() <= 1e-8 && (c.t[i] - oracle.t[i]).abs() <= 1e-8, "s={}", c.s[i]);
    }
}

#[test]
fn initial_bend_is_monotone_and_flat_at_the_ends() {
    let p = BendParams::new(0.5, 1.0, 0.1, 1.0, 0.05).unwrap();
    let c = initial_bend(&p).unwrap();
    assert_eq!(c.kappa_at(0.0), 0.0);
    assert_eq!(c.kappa_at(p.s2), 0.0);
    let th: Vec<f64> = linspace(0.0, p.s2, 1001).into_iter().map(|s| c.theta_at(s)).collect();
    assert!(th.windows(2).all(|w| w[1] >= w[0]));
    assert!((th[1000] - 0.1).abs() <= 1e-15 && th[0] == 0.0);

    let flat = initial_bend(&BendParams::new(0.5, 1.0, 0.0, 1.0, 0.05).unwrap()).unwrap();
    assert!(linspace(0.0, p.s2, 101).into_iter().all(|s| flat.theta_at(s) == 0.0));
}

#[test]
fn closed_curve_partition_matches_construction() {
    let p = BendParams::new(8.0, 1.0, 1.0, 1.0, 1.0).unwrap();
    let bent = build_bent_curve(&p).unwrap();
    let knots = bent.curve.knots(257);
    let c = bent.curve.sample(&knots);
    let class = classify(&c);
    let part = class.partition.expect("tilde class");
    let m = &bent.curve.marks;
    let spacing = bent.curve.segments.iter().map(|s| s.len / 256.0).fold(0.0, f64::max);
    for (got, want) in part[1..].iter().zip([m.s1, m.s2, m.s3, m.s4, m.s5, m.b]) {
        let want = want.expect("construction records every knot");
        assert!((got - want).abs() <= spacing, "detected {got}, built {want}");
    }
    // straight final run: perpendicular hit, t frozen
    let last = bent.curve.segments.last().unwrap();
    assert_eq!(last.role, Role::Run);
    let n = c.len();
    assert!(c.theta[n - 1].abs() <= 1e-12);
    let run_start = knots.iter().position(|&(i, _)| i == bent.curve.segments.len() - 1).unwrap();
    assert!(c.t[run_start..].iter().all(|&t| (t - c.t[n - 1]).abs() <= 1e-15));
}

#[test]
fn isotopy_keeps_total_turning_zero() {
    let p = BendParams::new(8.0, 1.0, 1.0, 1.0, 1.0).unwrap();
    let bent = build_bent_curve(&p).unwrap();
    let iso = Isotopy::new(&bent.curve, &p).unwrap();
    for t in linspace(0.0, 1.0, 11) {
        let (c, _) = iso.curve(t).unwrap();
        assert!(total_turning(&c).abs() <= 1e-8, "t={t}");
    }
}

#[test]
fn torpedo_ambient_bend_stays_in_psc() {
    let c = Condition::new(ConditionKind::Psc, 7).unwrap();
    let (rho, c2) = model_constants(&c, 4, &ConeOptions::default()).unwrap();
    assert!((rho - 6.0 / (2.0 * 21f64.sqrt())).abs() <= 1e-12);
    assert!((c2 - 3f64.sqrt()).abs() <= 1e-12);
    let p = BendParams::new(rho, c2, 0.1, 1.0, 0.05).unwrap();
    let bent = build_bent_curve(&p).unwrap();
    let beta = torpedo_profile(TorpedoParams::new(1.0, 2.0).unwrap(), TorpedoMode::Mollified).unwrap();
    let rep = flat_model_check(&bent.curve, 3, 4, &c, &Ambient::Profile(beta), 16).unwrap();
    assert!(rep.min_margin > 0.0, "margin {} at s={}", rep.min_margin, rep.argmin_s);
    assert_eq!(classify(&bent.curve.sample(&bent.curve.knots(16))).tag, ClassTag::GammaTildeB);
}

#[test]
fn flat_ambient_identity() {
    let p = BendParams::new(8.0, 1.0, 1.0, 1.0, 1.0).unwrap();
    let bent = build_bent_curve(&p).unwrap();
    let c = Condition::new(ConditionKind::Psc, 7).unwrap();
    let rep = flat_model_check(&bent.curve, 3, 4, &c, &Ambient::Flat, 64).unwrap();
    assert!(rep.e_identity.unwrap() <= 1e-10);
}
