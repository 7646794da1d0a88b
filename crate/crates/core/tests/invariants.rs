use geoblock_core::connect::{join_in_strip, HomologyClass, StripOptions};
use geoblock_core::flow::{clairaut, integrate, FlowConfig, PhaseState};
use geoblock_core::metric::{circle_dist, signed_circle_diff, wrap01};
use geoblock_core::security::{intersection_count, Involution};
use geoblock_core::{CoverPoint, MetricProfile, TorusPoint};
use proptest::prelude::*;

fn round() -> MetricProfile {
    MetricProfile::round(1.0, 2.0).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn wrap_lands_in_the_unit_interval(v in -1e6f64..1e6) {
        let w = wrap01(v);
        prop_assert!((0.0..1.0).contains(&w));
        prop_assert!(circle_dist(w, v) < 1e-9);
    }

    #[test]
    fn circle_difference_is_antisymmetric(a in -3.0f64..3.0, b in -3.0f64..3.0) {
        let d = signed_circle_diff(a, b);
        prop_assert!(d.abs() <= 0.5 + 1e-12);
        prop_assert!((d + signed_circle_diff(b, a)).abs() < 1e-12 || (d.abs() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn prime_classes_have_unimodular_transversals(m in -40i64..40, n in -40i64..40) {
        let h = HomologyClass::new(m, n);
        match h.transversal() {
            Some(g) => prop_assert_eq!(h.dot(&g), 1),
            None => prop_assert!(!h.is_prime()),
        }
    }

    #[test]
    fn fourier_profiles_conserve_clairaut(
        c1 in -0.5f64..0.5, s1 in -0.5f64..0.5, c2 in -0.3f64..0.3,
        x in 0.0f64..1.0, y in 0.0f64..1.0, turns in 0.0f64..1.0,
    ) {
        let p = MetricProfile::fourier(2.0, vec![c1, c2], vec![s1]).unwrap();
        let s = PhaseState::from_turns(&p, CoverPoint::new(x, y), turns);
        let tr = integrate(&p, s, 20.0, &FlowConfig::default()).unwrap();
        let c0 = clairaut(&p, &s);
        for q in tr.samples() {
            prop_assert!((clairaut(&p, &q.state) - c0).abs() < 1e-9);
        }
    }

    #[test]
    fn geodesics_retrace_when_reversed(x in 0.0f64..1.0, y in 0.0f64..1.0, turns in 0.0f64..1.0) {
        let p = round();
        let cfg = FlowConfig::default();
        let fwd = integrate(&p, PhaseState::from_turns(&p, CoverPoint::new(x, y), turns), 3.0, &cfg).unwrap();
        let back = integrate(&p, fwd.end().reversed(), 3.0, &cfg).unwrap();
        prop_assert!(back.end().pos.euclid(CoverPoint::new(x, y)) < 1e-8);
    }

    #[test]
    fn involution_squares_to_identity(r in 0.0f64..1.0, x in 0.0f64..1.0, y in 0.0f64..1.0) {
        let inv = Involution::new(r, 0.0);
        let u = TorusPoint::new(x, y);
        let back = inv.apply(inv.apply(u));
        prop_assert!(circle_dist(back.x, u.x) < 1e-12 && circle_dist(back.y, u.y) < 1e-12);
        for f in inv.fixed_points {
            let g = inv.apply(f);
            prop_assert!(circle_dist(g.x, f.x) < 1e-12 && circle_dist(g.y, f.y) < 1e-12);
        }
    }

    #[test]
    fn strip_geodesics_hit_and_are_not_shorter_than_the_floor(y0 in 0.05f64..0.95, y1 in 0.05f64..0.95, dx in 0.5f64..6.0) {
        let p = round();
        let from = CoverPoint::new(0.0, y0);
        let to = CoverPoint::new(dx, y1);
        let g = join_in_strip(&p, from, to, (0.0, 1.0), &StripOptions::default()).unwrap();
        prop_assert!(g.hit_error < 1e-8);
        prop_assert!(g.length() >= p.min_value() * dx - 1e-9);
        prop_assert!(g.trace.positions().all(|q| q.y >= -1e-12 && q.y <= 1.0 + 1e-12));
    }
}

#[test]
fn flat_latitude_meets_slanted_loops_by_determinant() {
    let flat = MetricProfile::flat();
    let cfg = FlowConfig::default();
    let lat = integrate(&flat, PhaseState::from_turns(&flat, CoverPoint::new(0.0, 0.31), 0.0), 1.0, &cfg).unwrap();
    for n in 1..=3i64 {
        let len = (1.0 + (n * n) as f64).sqrt();
        let loop_ = integrate(&flat, PhaseState::from_angle(&flat, CoverPoint::new(0.13, 0.0), (n as f64).atan2(1.0)), len, &cfg).unwrap();
        let c = intersection_count(&flat, &lat, &loop_, &cfg).unwrap();
        assert_eq!(c.count as i64, n);
        assert_eq!(c.signed_sum.abs(), n);
    }
}
