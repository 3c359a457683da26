mod common;

use common::{quad, std_gaussian, std_grid};
use proptest::prelude::*;
use tel_core::constants::{ell_at_t, g_of_v, run_chain};
use tel_core::semigroup::{semiconvexity_defect, sup_convolution};
use tel_core::verify::verify_rmlsi;
use tel_core::TestFamily;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn ell_at_peak_is_g_for_eta_one_minus_v_over_c(v in 0.01..0.99f64, c in 0.1..10.0f64) {
        let lhs = c * ell_at_t((1.0 - v) / c, v);
        prop_assert!((lhs - g_of_v(v)).abs() <= 1e-12, "{lhs} vs {}", g_of_v(v));
    }

    #[test]
    fn rmlsi_bound_grows_with_k(i in 0usize..50, t in 0.5..2.0f64, eta in 0.05..0.4f64) {
        let mu = std_gaussian();
        let f = sup_convolution(&TestFamily::new(4).function(i, std_grid()).unwrap(), t, &quad()).unwrap();
        let k0 = semiconvexity_defect(&f, &quad()).unwrap().k_min;
        prop_assume!(k0 + eta < 0.9);
        let ks: Vec<f64> = (0..5).map(|j| k0 + (0.95 - k0 - eta) * j as f64 / 4.0).collect();
        let rhs: Vec<f64> = ks
            .iter()
            .map(|&k| verify_rmlsi(&mu, 1.0, &quad(), k, eta, &f).unwrap().rhs)
            .collect();
        prop_assert!(rhs.windows(2).all(|w| w[1] >= w[0]), "{rhs:?}");
    }
}

#[test]
fn chain_on_the_standard_gaussian() {
    let report = run_chain(&std_gaussian(), &quad(), 1.0, 0).unwrap();
    assert!(
        report.tc.all_pass() && report.iclsi.all_pass() && report.rmlsi.all_pass(),
        "{report:?}"
    );
    // Translates attain the constant; the excess over 1 is roundoff.
    assert!(
        report.c_hat_tc >= 0.99 && report.c_hat_tc <= 1.0 + 1e-9,
        "{}",
        report.c_hat_tc
    );
    assert!(report.c_hat_iclsi <= 1.0 && report.c_hat_rmlsi <= 1.0);
    assert_eq!(report.eight_c_covers_tc, Some(true));
}
