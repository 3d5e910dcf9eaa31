//! Correlation coefficient, RMSE and MAE between observed and predicted scour.
//!
//! The correlation is Pearson's product-moment coefficient. A constant input
//! makes it undefined, which is reported as an error rather than NaN.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricsReport {
    pub cc: f64,
    /// Meters.
    pub rmse: f64,
    /// Meters.
    pub mae: f64,
    pub n: usize,
}

fn check_pairs(actual: &[f64], predicted: &[f64], min_len: usize) -> Result<()> {
    if actual.len() != predicted.len() {
        return Err(Error::Domain(format!(
            "length mismatch: {} actual vs {} predicted",
            actual.len(),
            predicted.len()
        )));
    }
    if actual.len() < min_len {
        return Err(Error::Domain(format!(
            "need at least {min_len} pairs, got {}",
            actual.len()
        )));
    }
    Ok(())
}

pub fn rmse(actual: &[f64], predicted: &[f64]) -> Result<f64> {
    check_pairs(actual, predicted, 1)?;
    let sse: f64 = actual
        .iter()
        .zip(predicted)
        .map(|(a, p)| (a - p) * (a - p))
        .sum();
    Ok((sse / actual.len() as f64).sqrt())
}

pub fn mae(actual: &[f64], predicted: &[f64]) -> Result<f64> {
    check_pairs(actual, predicted, 1)?;
    let sae: f64 = actual
        .iter()
        .zip(predicted)
        .map(|(a, p)| (a - p).abs())
        .sum();
    Ok(sae / actual.len() as f64)
}

pub fn correlation(actual: &[f64], predicted: &[f64]) -> Result<f64> {
    check_pairs(actual, predicted, 2)?;
    let n = actual.len() as f64;
    let mean_a = actual.iter().sum::<f64>() / n;
    let mean_p = predicted.iter().sum::<f64>() / n;
    let (mut sap, mut saa, mut spp) = (0.0, 0.0, 0.0);
    for (a, p) in actual.iter().zip(predicted) {
        let (da, dp) = (a - mean_a, p - mean_p);
        sap += da * dp;
        saa += da * da;
        spp += dp * dp;
    }
    if saa == 0.0 {
        return Err(Error::UndefinedCorrelation("actual"));
    }
    if spp == 0.0 {
        return Err(Error::UndefinedCorrelation("predicted"));
    }
    Ok((sap / (saa.sqrt() * spp.sqrt())).clamp(-1.0, 1.0))
}

pub fn report(actual: &[f64], predicted: &[f64]) -> Result<MetricsReport> {
    Ok(MetricsReport {
        cc: correlation(actual, predicted)?,
        rmse: rmse(actual, predicted)?,
        mae: mae(actual, predicted)?,
        n: actual.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn identical_vectors() {
        let a = [0.3, 1.2, 4.5, 2.0];
        assert_eq!(rmse(&a, &a).unwrap(), 0.0);
        assert_eq!(mae(&a, &a).unwrap(), 0.0);
        let r = report(&a, &a).unwrap();
        assert!((r.cc - 1.0).abs() < 1e-15);
        assert_eq!((r.rmse, r.mae, r.n), (0.0, 0.0, 4));
    }

    #[test]
    fn hand_arithmetic() {
        assert!((rmse(&[3.0, 4.0], &[0.0, 0.0]).unwrap() - 12.5f64.sqrt()).abs() < 1e-15);
        assert!((rmse(&[3.0, 4.0], &[0.0, 0.0]).unwrap() - 3.535534).abs() < 1e-6);
        assert_eq!(mae(&[3.0, 4.0], &[0.0, 0.0]).unwrap(), 3.5);
        assert_eq!(rmse(&[2.0], &[5.0]).unwrap(), 3.0);
    }

    #[test]
    fn mae_ignores_error_sign() {
        let a = [1.0, 2.0, 3.0];
        let over = [1.5, 2.75, 2.0];
        let under: Vec<f64> = a.iter().zip(&over).map(|(a, p)| 2.0 * a - p).collect();
        assert!((mae(&a, &over).unwrap() - mae(&a, &under).unwrap()).abs() < 1e-15);
    }

    #[test]
    fn correlation_of_affine_maps() {
        let a = [0.2, 1.1, 3.5, 0.7, 2.2];
        let up: Vec<f64> = a.iter().map(|x| 2.0 * x + 1.0).collect();
        let down: Vec<f64> = a.iter().map(|x| -x).collect();
        assert!((correlation(&a, &up).unwrap() - 1.0).abs() < 1e-15);
        assert!((correlation(&a, &down).unwrap() + 1.0).abs() < 1e-15);
    }

    #[test]
    fn constant_predictions_are_an_error() {
        let err = correlation(&[1.0, 2.0, 3.0], &[0.5, 0.5, 0.5]).unwrap_err();
        assert!(matches!(err, Error::UndefinedCorrelation("predicted")));
        assert!(report(&[1.0, 1.0], &[0.0, 2.0]).is_err());
    }

    #[test]
    fn length_errors() {
        assert!(matches!(rmse(&[], &[]), Err(Error::Domain(_))));
        assert!(matches!(mae(&[1.0], &[1.0, 2.0]), Err(Error::Domain(_))));
        assert!(matches!(correlation(&[1.0], &[1.0]), Err(Error::Domain(_))));
    }

    fn pairs() -> impl Strategy<Value = (Vec<f64>, Vec<f64>)> {
        (2usize..60).prop_flat_map(|n| {
            (
                prop::collection::vec(-50.0f64..50.0, n),
                prop::collection::vec(-50.0f64..50.0, n),
            )
        })
    }

    proptest! {
        #[test]
        fn mae_never_exceeds_rmse((a, p) in pairs()) {
            prop_assert!(mae(&a, &p).unwrap() <= rmse(&a, &p).unwrap() * (1.0 + 1e-12));
        }

        #[test]
        fn metrics_are_symmetric((a, p) in pairs()) {
            prop_assert!((rmse(&a, &p).unwrap() - rmse(&p, &a).unwrap()).abs() < 1e-12);
            prop_assert!((mae(&a, &p).unwrap() - mae(&p, &a).unwrap()).abs() < 1e-12);
            prop_assert!((correlation(&a, &p).unwrap() - correlation(&p, &a).unwrap()).abs() < 1e-12);
        }

        #[test]
        fn correlation_ignores_positive_affine_maps((a, p) in pairs(), scale in 0.1f64..10.0, shift in -5.0f64..5.0) {
            let mapped: Vec<f64> = p.iter().map(|x| scale * x + shift).collect();
            let r0 = correlation(&a, &p).unwrap();
            let r1 = correlation(&a, &mapped).unwrap();
            prop_assert!((r0 - r1).abs() < 1e-12);
        }

        #[test]
        fn shared_permutation_changes_nothing((a, p) in pairs(), seed in any::<u64>()) {
            use rand::seq::SliceRandom;
            let mut idx: Vec<usize> = (0..a.len()).collect();
            idx.shuffle(&mut crate::rng::seeded(seed));
            let a2: Vec<f64> = idx.iter().map(|&i| a[i]).collect();
            let p2: Vec<f64> = idx.iter().map(|&i| p[i]).collect();
            let r1 = report(&a, &p).unwrap();
            let r2 = report(&a2, &p2).unwrap();
            prop_assert!((r1.cc - r2.cc).abs() < 1e-12);
            prop_assert!((r1.rmse - r2.rmse).abs() < 1e-12);
            prop_assert!((r1.mae - r2.mae).abs() < 1e-12);
        }
    }
}
