mod common;

use proptest::prelude::*;
use tel_core::semigroup::{
    inf_convolution, inf_convolution_with, midpoint_defect, semiconvexity_defect, sup_convolution, Engine,
};
use tel_core::verify::inf_convolution_gap_check;
use tel_core::{AlphaCost, Grid1D, GridFunction, SeparableCost};

fn grid() -> Grid1D {
    Grid1D::new(-3.0, 3.0, 121).unwrap()
}

fn cost(k: usize) -> SeparableCost {
    let alpha = match k {
        0 => AlphaCost::quadratic(),
        1 => AlphaCost::power_smooth(1.5).unwrap(),
        _ => AlphaCost::alpha21(),
    };
    SeparableCost::scalar(alpha)
}

/// `min_y f(y) + λc(x − y)` by direct double loop.
fn brute_inf_convolution(f: &GridFunction, lambda: f64, cost: &SeparableCost) -> Vec<f64> {
    let g = f.grid();
    (0..g.len())
        .map(|i| {
            (0..g.len())
                .map(|j| f.values()[j] + lambda * cost.alpha().eval(g.point(i) - g.point(j)))
                .fold(f64::INFINITY, f64::min)
        })
        .collect()
}

fn smooth_function() -> impl Strategy<Value = GridFunction> {
    (-1.0..1.0f64, -0.3..0.3f64, -1.0..1.0f64, 0.3..3.0f64, 0.0..6.3f64).prop_map(|(b, c, a, w, p)| {
        GridFunction::from_fn(grid(), move |x| b * x + c * x * x + a * (w * x + p).sin()).unwrap()
    })
}

fn rough_function() -> impl Strategy<Value = GridFunction> {
    prop::collection::vec(-1.0..1.0f64, 121).prop_map(|v| GridFunction::new(grid(), v).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn inf_convolution_matches_direct_minimization(f in rough_function(), lambda in 0.05..5.0f64, k in 0usize..3) {
        let cost = cost(k);
        let fast = inf_convolution(&f, lambda, &cost).unwrap();
        let slow = brute_inf_convolution(&f, lambda, &cost);
        for (a, b) in fast.values().iter().zip(&slow) {
            prop_assert!((a - b).abs() <= 1e-12 * (1.0 + b.abs()));
        }
        let brute = inf_convolution_with(&f, lambda, &cost, Engine::Brute).unwrap();
        prop_assert_eq!(brute.function.values(), fast.values());
    }

    #[test]
    fn sup_convolution_is_monotone(f in rough_function(), bump in prop::collection::vec(0.0..1.0f64, 121), t in 0.05..3.0f64, k in 0usize..3) {
        let cost = cost(k);
        let g = GridFunction::new(grid(), f.values().iter().zip(&bump).map(|(a, b)| a + b).collect()).unwrap();
        let pf = sup_convolution(&f, t, &cost).unwrap();
        let pg = sup_convolution(&g, t, &cost).unwrap();
        for (a, b) in pf.values().iter().zip(pg.values()) {
            prop_assert!(a <= b);
        }
        for (a, b) in pf.values().iter().zip(f.values()) {
            prop_assert!(a >= b);
        }
    }

    #[test]
    fn sup_and_inf_convolution_are_dual_for_quadratic_cost(f in rough_function(), t in 0.05..5.0f64) {
        // −P_t(−f) = Q^{1/t} f, since t·(z/t)²/2 = (1/t)·z²/2.
        let cost = cost(0);
        let lhs = sup_convolution(&f.neg(), t, &cost).unwrap().neg();
        let rhs = inf_convolution(&f, 1.0 / t, &cost).unwrap();
        for (a, b) in lhs.values().iter().zip(rhs.values()) {
            prop_assert!((a - b).abs() <= 1e-12 * (1.0 + b.abs()), "{a} vs {b}");
        }
    }

    #[test]
    fn semi_convex_gap_is_bounded_by_the_dual_cost(f in smooth_function(), extra in 0.0..1.0f64, eta in 0.1..2.0f64) {
        let cost = cost(0);
        let k = semiconvexity_defect(&f, &cost).unwrap().k_min + extra;
        let r = inf_convolution_gap_check(&f, k, eta, &cost).unwrap();
        prop_assert!(r.pass, "{:?}", r);
    }

    #[test]
    fn midpoint_defect_is_closed_under_max(f in smooth_function(), g in smooth_function()) {
        let cost = cost(0);
        let kf = midpoint_defect(&f, &cost, 20).unwrap().k_min;
        let kg = midpoint_defect(&g, &cost, 20).unwrap().k_min;
        let h = GridFunction::new(grid(), f.values().iter().zip(g.values()).map(|(a, b)| a.max(*b)).collect()).unwrap();
        let kh = midpoint_defect(&h, &cost, 20).unwrap().k_min;
        prop_assert!(kh <= kf.max(kg) * (1.0 + 1e-9) + 1e-9, "{kh} > max({kf}, {kg})");
    }

    #[test]
    fn sup_convolution_defect_is_at_most_one_over_t(f in rough_function(), t in 0.1..3.0f64) {
        let cost = cost(0);
        let pf = sup_convolution(&f, t, &cost).unwrap();
        let k = semiconvexity_defect(&pf, &cost).unwrap().k_min;
        prop_assert!(k <= (1.0 / t) * (1.0 + 1e-9), "{k} > {}", 1.0 / t);
    }
}
