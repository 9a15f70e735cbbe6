mod common;

use common::{brute_force_best, drift_direct, prob, tail_direct, utility_direct};
use complexity_trap::meanfield::{drift, integrate, phase_portrait, trap_basin, DriftSign, Policy};
use complexity_trap::numerics::{binomial_tail, lambert_w0, student_t_sf};
use complexity_trap::strategy::{best_response, candidate_set, utility};
use complexity_trap::{ModelParams, Probability, Strategy};
use proptest::prelude::*;

const INV_E: f64 = 0.367_879_441_171_442_33;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn tail_monotone_in_f(m in 1u32..200, t in 0u32..200, a in 0.0f64..1.0, b in 0.0f64..1.0) {
        let tau = t.min(m);
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        prop_assert!(binomial_tail(m, tau, prob(lo)).value() <= binomial_tail(m, tau, prob(hi)).value() + 1e-15);
    }

    #[test]
    fn tail_monotone_in_m_and_tau(m in 1u32..200, t in 1u32..200, f in 0.0f64..1.0) {
        let tau = t.min(m);
        let p = prob(f);
        let here = binomial_tail(m, tau, p).value();
        prop_assert!(here <= binomial_tail(m + 1, tau, p).value() + 1e-15);
        if tau < m {
            prop_assert!(binomial_tail(m, tau + 1, p).value() <= here + 1e-15);
        }
    }

    #[test]
    fn tail_matches_enumeration(m in 0u32..=12, t in 0u32..=13, f in 0.0f64..=1.0) {
        let mut direct = 0.0;
        for outcome in 0u32..(1 << m) {
            let k = outcome.count_ones();
            if k >= t {
                direct += f.powi(k as i32) * (1.0 - f).powi((m - k) as i32);
            }
        }
        let v = binomial_tail(m, t, prob(f)).value();
        prop_assert!((v - direct).abs() <= 1e-12, "{} vs {}", v, direct);
    }

    #[test]
    fn lambert_round_trip(u in 0.0f64..1.0) {
        // Log-spaced over [-1/e + 1e-6, 1e6], with the negative branch covered densely.
        let x = if u < 0.3 {
            -INV_E + 1e-6 + (INV_E - 1e-6) * (u / 0.3)
        } else {
            10f64.powf(-8.0 + 14.0 * (u - 0.3) / 0.7)
        };
        let w = lambert_w0(x).unwrap();
        prop_assert!((w * w.exp() - x).abs() <= 1e-10 * x.abs().max(1.0), "x = {}", x);
        prop_assert!(w >= -1.0);
    }

    #[test]
    fn t_tails_sum_to_one(t in -50.0f64..50.0, dof in 1u32..200) {
        let s = student_t_sf(t, dof).unwrap().value() + student_t_sf(-t, dof).unwrap().value();
        prop_assert!((s - 1.0).abs() <= 1e-10);
    }

    #[test]
    fn utility_matches_definition(m in 0u32..40, t in 0u32..40, f in 0.0f64..1.0, alpha in 0.01f64..1.0, beta in 0.05f64..0.95) {
        let tau = t.min(m);
        let params = ModelParams::new(alpha, beta, 0.0).unwrap();
        let u = utility(Strategy::new(m, tau), prob(f), &params);
        prop_assert!((u - utility_direct(m, tau, f, alpha, beta)).abs() <= 1e-11);
    }

    #[test]
    fn utility_monotone_in_f(m in 1u32..60, t in 1u32..60, a in 0.0f64..1.0, b in 0.0f64..1.0, alpha in 0.01f64..1.0, beta in 0.05f64..0.95) {
        let tau = t.min(m);
        let params = ModelParams::new(alpha, beta, 0.0).unwrap();
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        let s = Strategy::new(m, tau);
        prop_assert!(utility(s, prob(lo), &params) <= utility(s, prob(hi), &params) + 1e-12);
    }

    #[test]
    fn best_response_is_brute_force_argmax(alpha in 0.02f64..0.9, beta in 0.1f64..0.9, f in 0.0f64..=1.0) {
        let params = ModelParams::new(alpha, beta, 0.001).unwrap();
        prop_assume!(params.max_inputs() <= 80.0);
        let p = prob(f);
        let (oracle, _) = brute_force_best(&params, p);
        let br = best_response(&params, p);
        prop_assert_eq!(br, oracle);
        prop_assert!(candidate_set(&params, p).contains(&oracle));
        prop_assert_eq!(br.m == 0, br == Strategy::WITHDRAW);
    }

    #[test]
    fn drift_matches_definition(m in 0u32..30, t in 0u32..30, f in 0.0f64..=1.0, eps in 0.0f64..0.01) {
        let s = Strategy::new(m, t.min(m));
        let d = drift(s, prob(f), eps);
        prop_assert!((d - drift_direct(s, f, eps)).abs() <= 1e-12);
    }

    #[test]
    fn trajectories_stay_in_unit_interval(f0 in 0.0f64..=1.0, dt in 1e-3f64..0.01, kind in 0u8..4, commit in 0.0f64..3.0) {
        let params = ModelParams::new(0.1, 0.4, 0.001).unwrap();
        let policy = match kind {
            0 => Policy::INSTANT_BEST_RESPONSE,
            1 => Policy::BestResponse { commit },
            2 => Policy::Overshoot { s: 2 },
            _ => Policy::Fixed { strategy: Strategy::new(4, 1) },
        };
        let traj = integrate(&params, prob(f0), policy, 5.0, dt).unwrap();
        prop_assert!(traj.f_values.iter().all(|f| (0.0..=1.0).contains(&f.value())));
    }
}

#[test]
fn portrait_signs_match_interior_drift() {
    for (alpha, eps) in [(0.1, 0.001), (0.05, 0.0), (0.2, 0.001), (0.15, 1e-4)] {
        let params = ModelParams::new(alpha, 0.4, eps).unwrap();
        let portrait = phase_portrait(&params, 500).unwrap();
        for seg in &portrait.segments {
            let (lo, hi) = (seg.f_lo.value(), seg.f_hi.value());
            for k in 1..=10 {
                let f = lo + (hi - lo) * k as f64 / 11.0;
                let d = drift_direct(seg.strategy, f, eps);
                match seg.drift_sign {
                    DriftSign::Positive => assert!(d > 0.0, "alpha {alpha}: {seg:?} at {f}: {d}"),
                    DriftSign::Negative => assert!(d < 0.0, "alpha {alpha}: {seg:?} at {f}: {d}"),
                    DriftSign::Zero => assert_eq!(d, 0.0),
                    DriftSign::Mixed => {}
                }
            }
        }
    }
}

#[test]
fn rich_economies_are_unstable_below_full_reliability() {
    for beta in [0.3, 0.4, 0.5] {
        for alpha in [0.05, 0.1] {
            if alpha >= 2f64.powf(beta) - 1.0 {
                continue;
            }
            let params = ModelParams::new(alpha, beta, 0.0).unwrap();
            // At 1 - 1e-3 a one-input buffer can still pay for small alpha;
            // the library must agree with brute force there.
            let near = prob(1.0 - 1e-3);
            assert_eq!(best_response(&params, near), brute_force_best(&params, near).0);
            let f = prob(1.0 - 1e-6);
            let s = best_response(&params, f);
            assert!(drift_direct(s, f.value(), 0.0) < 0.0, "({alpha}, {beta}): {s}");
            assert!(s.m == s.tau && s.tau >= 2, "({alpha}, {beta}): {s}");
            let top = best_response(&params, Probability::ONE);
            assert_eq!(drift(top, Probability::ONE, 0.0), 0.0);
        }
    }
}

#[test]
fn zero_overshoot_is_best_response() {
    let params = ModelParams::new(0.1, 0.4, 0.001).unwrap();
    for f0 in [0.05, 0.3, 0.5, 0.9] {
        let a = integrate(&params, prob(f0), Policy::Overshoot { s: 0 }, 30.0, 1e-3).unwrap();
        let b = integrate(&params, prob(f0), Policy::INSTANT_BEST_RESPONSE, 30.0, 1e-3).unwrap();
        assert_eq!(a.f_values, b.f_values);
        assert_eq!(a.times, b.times);
    }
}

#[test]
fn trap_basin_grows_with_cost() {
    let mut prev = 0.0;
    for i in 1..=30 {
        let alpha = 0.04 * i as f64;
        let params = ModelParams::new(alpha, 0.4, 0.001).unwrap();
        let basin = trap_basin(&params, 400).unwrap().f_star.value();
        assert!(basin >= prev - 1e-9, "alpha {alpha}: {basin} < {prev}");
        if alpha >= 1.0 {
            assert_eq!(basin, 1.0);
        }
        prev = basin;
    }
}

#[test]
fn direct_tail_reference_is_sane() {
    assert!((tail_direct(5, 2, 0.5) - 26.0 / 32.0).abs() < 1e-15);
    assert_eq!(tail_direct(3, 0, 0.2), 1.0);
}
