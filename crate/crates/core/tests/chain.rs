use dropqed::chain1d::{chain_rates, chain_rates_analytic};
use dropqed::drop::{match_spectra, Method, Spectrum};
use nalgebra::DMatrix;
use num_complex::Complex64;
use proptest::prelude::*;
use std::f64::consts::PI;

fn green(n: usize, theta: f64) -> Spectrum {
    let g = DMatrix::from_fn(n, n, |j, k| Complex64::from_polar(1.0, theta * (j as f64 - k as f64).abs()));
    Spectrum::new(g.schur().eigenvalues().unwrap().iter().copied().collect(), Method::Chain)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn matches_green_matrix(n in 1usize..24, t in 0.01f64..0.99) {
        let theta = t * PI;
        let chain = chain_rates(n, theta).unwrap();
        let got = Spectrum::new(chain.z.clone(), Method::Chain);
        let report = match_spectra(&got, &green(n, theta), 1e-8).unwrap();
        prop_assert!(report.passed, "n={n} theta/pi={t} err={}", report.max_abs_error);
    }

    #[test]
    fn rates_sum_to_chain_length(n in 1usize..40, t in 0.01f64..1.99) {
        let z = chain_rates(n, t * PI).unwrap().z;
        let sum: Complex64 = z.iter().sum();
        prop_assert!((sum - n as f64).norm() < 1e-9 * n as f64);
    }

    #[test]
    fn mirrored_phase_conjugates(n in 1usize..30, t in 0.01f64..0.99) {
        let a = Spectrum::new(chain_rates(n, t * PI).unwrap().z, Method::Chain);
        let conj = chain_rates(n, -t * PI).unwrap().z.iter().map(|z| z.conj()).collect();
        let report = match_spectra(&a, &Spectrum::new(conj, Method::Chain), 1e-9).unwrap();
        prop_assert!(report.passed);
    }

    #[test]
    fn rates_are_passive(n in 1usize..40, t in 0.0f64..2.0) {
        for z in chain_rates(n, t * PI).unwrap().z {
            prop_assert!(z.re > -1e-9);
        }
    }
}

#[test]
fn analytic_route_agrees_for_small_chains() {
    for n in 2..=3 {
        for k in 1..20 {
            let theta = k as f64 * PI / 20.0;
            let a = Spectrum::new(chain_rates(n, theta).unwrap().z, Method::Chain);
            let b = Spectrum::new(chain_rates_analytic(n, theta).unwrap().z, Method::Chain);
            assert!(match_spectra(&a, &b, 1e-10).unwrap().passed, "n={n} k={k}");
        }
    }
}

#[test]
fn zero_length_chain_is_rejected() {
    assert!(chain_rates(0, 0.3).is_err());
}
