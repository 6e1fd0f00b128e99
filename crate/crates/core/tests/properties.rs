//! Invariants checked over random states, geometries and detector positions.

use proptest::prelude::*;

use qdiffract::correlator::{matrix_elements, p2, Order, PhaseAverage};
use qdiffract::mc::{simulate, DetectionRun};
use qdiffract::pattern::{catalog_pattern, g1, g2, DetectionScheme, Evaluator, Point, SlitGeometry};
use qdiffract::states::{coefficient_distribution, DistributionKind, StateSpec};

fn any_state() -> impl Strategy<Value = StateSpec> {
    prop_oneof![
        (0.1f64..4.0).prop_map(StateSpec::coherent),
        (0.1f64..4.0).prop_map(StateSpec::phase_diffused),
        (0.1f64..2.0).prop_map(StateSpec::chaotic),
        (1usize..7).prop_map(StateSpec::coherent_substate),
        (1usize..7).prop_map(StateSpec::phase_diffused_substate),
        (1usize..7).prop_map(StateSpec::chaotic_substate),
        (2usize..7).prop_map(StateSpec::noon),
        (1usize..4).prop_map(|h| StateSpec::number(2 * h)),
    ]
}

fn engine(spec: &StateSpec, order: Order) -> Evaluator {
    Evaluator::engine(spec, order, &PhaseAverage::default_for(spec).unwrap(), None).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn engine_tables_are_hermitian(spec in any_state(), second in any::<bool>()) {
        let order = if second { Order::Second } else { Order::First };
        let t = matrix_elements(&spec, order, &PhaseAverage::default_for(&spec).unwrap()).unwrap();
        prop_assert!(t.symmetry_residual() < 1e-9);
    }

    #[test]
    fn coincidence_probability_is_non_negative(spec in any_state(), u1 in -10.0f64..10.0, u2 in -10.0f64..10.0) {
        let t = matrix_elements(&spec, Order::Second, &PhaseAverage::default_for(&spec).unwrap()).unwrap();
        prop_assert!(p2(&t, u1, u2).unwrap() >= -1e-9 * t.scale().max(1.0));
    }

    #[test]
    fn catalog_and_engine_agree_at_random_points(
        spec in any_state(), ratio in 2.0f64..9.0, r1 in -0.02f64..0.02, r2 in -0.02f64..0.02, second in any::<bool>()
    ) {
        let order = if second { Order::Second } else { Order::First };
        let geom = SlitGeometry::with_ratio(ratio).unwrap();
        let (Ok(c), e) = (Evaluator::catalog(&spec, order), engine(&spec, order)) else { return Ok(()) };
        let p = Point::at(&geom, r1, r2);
        let tol = 1e-9 * c.scale().max(1.0);
        prop_assert!((c.value(&p).unwrap() - e.value(&p).unwrap()).abs() < tol);
    }

    #[test]
    fn coherent_family_factorizes(m in 0.1f64..5.0, n in 1usize..6, r1 in -0.02f64..0.02, r2 in -0.02f64..0.02) {
        let geom = SlitGeometry::with_ratio(4.0).unwrap();
        for spec in [StateSpec::coherent(m), StateSpec::coherent_substate(n)] {
            for order in [Order::First, Order::Second] {
                let c = Evaluator::catalog(&spec, order).unwrap();
                let f = |a: f64, b: f64| c.value(&Point::at(&geom, a, b)).unwrap();
                let lhs = f(r1, r2) * f(0.0, 0.0);
                let rhs = f(r1, 0.0) * f(0.0, r2);
                prop_assert!((lhs - rhs).abs() <= 1e-9 * f(0.0, 0.0).powi(2));
            }
        }
    }

    #[test]
    fn first_order_coherence_is_bounded(spec in any_state(), rho in -0.02f64..0.02) {
        let geom = SlitGeometry::with_ratio(4.0).unwrap();
        let s = g1(&spec, &[rho], &geom).unwrap();
        prop_assume!(s.defined[0]);
        prop_assert!(s.values[0].abs() <= 1.0 + 1e-9);
    }

    #[test]
    fn chaotic_bunching_between_one_and_two(m in 0.1f64..3.0, rho in -0.02f64..0.02) {
        let geom = SlitGeometry::with_ratio(4.0).unwrap();
        let s = g2(&StateSpec::chaotic(m), &[rho], &geom).unwrap();
        prop_assume!(s.defined[0]);
        prop_assert!(s.values[0] >= 1.0 - 1e-9 && s.values[0] <= 2.0 + 1e-9);
    }

    #[test]
    fn coherent_schemes_coincide(m in 0.1f64..5.0, ratio in 2.0f64..9.0, second in any::<bool>()) {
        let order = if second { Order::Second } else { Order::First };
        let geom = SlitGeometry::with_ratio(ratio).unwrap();
        let grid = geom.grid_in_u(-5.0, 5.0, 41);
        let spec = StateSpec::coherent(m);
        let a = catalog_pattern(&spec, order, DetectionScheme::SamePoint, &grid, &geom).unwrap();
        let b = catalog_pattern(&spec, order, DetectionScheme::Opposite, &grid, &geom).unwrap();
        prop_assert!(a.max_abs_deviation(&b) < 1e-12 * a.scale_factor.max(1.0));
    }

    #[test]
    fn weights_and_tail_sum_to_one(m in 0.05f64..9.0, cut in 0usize..60, bose in any::<bool>()) {
        let kind = if bose { DistributionKind::BoseEinstein } else { DistributionKind::Poisson };
        let d = coefficient_distribution(kind, m, cut);
        let total: f64 = d.weights.iter().sum::<f64>() + d.tail;
        prop_assert!((total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn histograms_hold_every_event(
        law in prop::collection::vec(0.0f64..3.0, 3..40), events in 1u64..5000, bins in 1usize..25, seed in any::<u64>()
    ) {
        prop_assume!(law.iter().sum::<f64>() > 0.1);
        let grid: Vec<f64> = (0..law.len()).map(|i| i as f64).collect();
        let run = simulate(&DetectionRun::from_law(grid, law, events, seed, bins).unwrap()).unwrap();
        prop_assert_eq!(run.histogram.iter().sum::<u64>(), events);
        prop_assert!((run.expected.iter().sum::<f64>() - events as f64).abs() < 1e-9 * events as f64);
    }
}
