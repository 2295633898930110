use mlcons::quasipoly::{imag_axis_crossings, rightmost_abscissa};
use mlcons::{CharInstance, Complex64, DelayPair};
use proptest::prelude::*;

proptest! {
    #[test]
    fn conjugate_mu_conjugates_f(
        lambda in 0.2f64..8.0,
        (re, im) in (-0.95f64..0.95, -0.95f64..0.95),
        (t1, t2) in (0.0f64..2.0, 0.0f64..2.0),
        (x, y) in (-5.0f64..5.0, -20.0f64..20.0),
    ) {
        let d = DelayPair::new(t1, t2).unwrap();
        let mu = Complex64::new(re, im);
        let a = CharInstance::new(lambda, mu, d).unwrap();
        let b = CharInstance::new(lambda, mu.conj(), d).unwrap();
        let s = Complex64::new(x, y);
        let diff = (b.value(s.conj()) - a.value(s).conj()).norm();
        prop_assert!(diff <= 1e-12 * (1.0 + a.value(s).norm()));
    }

    #[test]
    fn real_mu_crossings_are_symmetric(
        lambda in 0.5f64..6.0,
        mu in -0.9f64..0.9,
        tau in 0.05f64..1.0,
    ) {
        let inst = CharInstance::new(lambda, Complex64::new(mu, 0.0), DelayPair::new(tau, tau).unwrap()).unwrap();
        let scan = imag_axis_crossings(&inst, inst.omega_bound()).unwrap();
        let c = &scan.crossings;
        for (lo, hi) in c.iter().zip(c.iter().rev()) {
            prop_assert!((lo + hi).abs() < 1e-6, "{c:?}");
        }
        for &w in c {
            prop_assert!(inst.value(Complex64::new(0.0, w)).norm() < 1e-8);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn conjugate_mu_gives_same_abscissa(
        lambda in 0.5f64..6.0,
        (re, im) in (-0.9f64..0.9, 0.05f64..0.9),
        (t1, t2) in (0.0f64..1.0, 0.0f64..1.0),
    ) {
        let d = DelayPair::new(t1, t2).unwrap();
        let mu = Complex64::new(re, im);
        let a = rightmost_abscissa(&CharInstance::new(lambda, mu, d).unwrap(), None).unwrap();
        let b = rightmost_abscissa(&CharInstance::new(lambda, mu.conj(), d).unwrap(), None).unwrap();
        prop_assert!(a.is_finite() && (a - b).abs() < 1e-7, "{a} vs {b}");
    }
}
