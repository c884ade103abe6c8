//! Weighted least-squares invariants, checked against an SVD pseudo-inverse
//! oracle.

use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use tfot::polyfit::{wls_fit, FitSample};

/// Coefficients about `epoch` by the weighted pseudo-inverse
/// (W^½A)⁺ W^½y, computed independently of the library.
fn oracle(samples: &[FitSample], gamma: usize, epoch: f64) -> Vec<f64> {
    let n = samples.len();
    let a = DMatrix::from_fn(n, gamma + 1, |i, j| {
        samples[i].weight.sqrt() * (samples[i].t - epoch).powi(j as i32)
    });
    let y = DVector::from_fn(n, |i, _| samples[i].weight.sqrt() * samples[i].value);
    let pinv = a.pseudo_inverse(1e-12).unwrap();
    (pinv * y).iter().copied().collect()
}

fn samples_strategy() -> impl Strategy<Value = (usize, Vec<FitSample>)> {
    (1usize..=3).prop_flat_map(|gamma| {
        let n = gamma + 1..=gamma + 9;
        (
            Just(gamma),
            proptest::collection::vec((-500.0f64..500.0, 0.01f64..10.0), n).prop_map(|vals| {
                vals.into_iter()
                    .enumerate()
                    .map(|(i, (v, w))| FitSample::new(i as f64, v, w))
                    .collect()
            }),
        )
    })
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * (1.0 + a.abs().max(b.abs()))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn matches_pseudo_inverse((gamma, s) in samples_strategy()) {
        let epoch = s[0].t;
        let fit = wls_fit(&s, gamma, epoch).unwrap();
        let want = oracle(&s, gamma, epoch);
        for (a, b) in fit.poly.coeffs.iter().zip(&want) {
            prop_assert!(close(*a, *b, 1e-8), "{:?} vs {:?}", fit.poly.coeffs, want);
        }
    }

    #[test]
    fn epoch_does_not_change_the_curve((gamma, s) in samples_strategy(), frac in 0.0f64..1.0) {
        // Any epoch inside the sampled span gives the same curve.
        let span = s[s.len() - 1].t - s[0].t;
        let a = wls_fit(&s, gamma, s[0].t).unwrap();
        let b = wls_fit(&s, gamma, s[0].t + frac * span).unwrap();
        for t in [0.0, 3.5, 7.0, 12.0] {
            prop_assert!(close(a.poly.evaluate(t), b.poly.evaluate(t), 1e-7));
        }
    }

    #[test]
    fn uniform_weight_scaling((gamma, s) in samples_strategy(), scale in 0.01f64..100.0) {
        let a = wls_fit(&s, gamma, 0.0).unwrap();
        let scaled: Vec<FitSample> = s.iter().map(|x| FitSample::new(x.t, x.value, x.weight * scale)).collect();
        let b = wls_fit(&scaled, gamma, 0.0).unwrap();
        for (x, y) in a.poly.coeffs.iter().zip(&b.poly.coeffs) {
            prop_assert!(close(*x, *y, 1e-8));
        }
        for i in 0..=gamma {
            for j in 0..=gamma {
                prop_assert!(close(a.cov[i][j], b.cov[i][j] * scale, 1e-7));
            }
        }
    }

    #[test]
    fn no_perturbation_lowers_the_cost(
        (gamma, s) in samples_strategy(),
        dirs in proptest::collection::vec(proptest::collection::vec(-1.0f64..1.0, 4), 8),
    ) {
        let fit = wls_fit(&s, gamma, 0.0).unwrap();
        let best = fit.poly.cost(&s);
        for d in &dirs {
            for eps in [1e-3, 1e-1, 10.0] {
                let mut p = fit.poly.clone();
                for (c, di) in p.coeffs.iter_mut().zip(d) {
                    *c += eps * di / 10f64.powi(2);
                }
                prop_assert!(p.cost(&s) >= best - 1e-9 * (1.0 + best));
            }
        }
    }

    #[test]
    fn exact_data_is_recovered(gamma in 1usize..=3, coeffs in proptest::collection::vec(-50.0f64..50.0, 4)) {
        let truth = &coeffs[..=gamma];
        let s: Vec<FitSample> = (0..10)
            .map(|t| {
                let t = t as f64;
                let v = truth.iter().enumerate().map(|(j, c)| c * t.powi(j as i32)).sum();
                FitSample::new(t, v, 1.0)
            })
            .collect();
        let fit = wls_fit(&s, gamma, 0.0).unwrap();
        for (a, b) in fit.poly.coeffs.iter().zip(truth) {
            prop_assert!(close(*a, *b, 1e-8));
        }
    }
}
