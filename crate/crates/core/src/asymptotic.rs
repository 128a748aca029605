//! Two-parameter `(b, p1)` test with the `½χ²₀ + ½χ²₁` reference distribution.
//!
//! Only data observed up to day `S` enter: later onsets are dropped from the
//! case set and those persons count as escapes through `S`.

use std::sync::Arc;

use statrs::function::erf::erfc;

use crate::error::{Error, Result};
use crate::likelihood::{Alternative, LogLikelihood, Lrt};
use crate::model::{Outbreak, StudyConfig};
use crate::resampling::{check_admissibility, TestMethod, TestResult};

/// Restrict an outbreak to what was observable on day `S`.
pub fn truncate_to_exposure(outbreak: &Outbreak) -> Outbreak {
    let config = outbreak.config();
    let s = config.exposure_days;
    let truncated = StudyConfig {
        exposure_days: s,
        horizon: s,
        latent: config.latent.clone(),
        infectious: config.infectious.clone(),
        censor_uninfected: false,
    };
    let onsets = outbreak
        .onsets()
        .iter()
        .map(|o| o.filter(|&d| d <= s))
        .collect();
    Outbreak::new(Arc::clone(outbreak.population_arc()), Arc::new(truncated), onsets)
        .expect("truncation keeps onsets inside the study window")
}

/// Likelihood ratio for `p1 = 0` against `(b, p1)` with `p2 = 0`, on data
/// already truncated at `S`.
pub fn lrt_two_param(outbreak: &Outbreak) -> Result<Lrt> {
    let s = outbreak.config().exposure_days;
    if outbreak.max_onset().is_some_and(|m| m > s) {
        return Err(Error::Outbreak(format!(
            "onsets after day {s} present; truncate the data before the two-parameter test"
        )));
    }
    LogLikelihood::new(outbreak).lrt(Alternative::HouseholdOnly)
}

/// Upper tail of `½χ²₀ + ½χ²₁`. The point mass at zero makes `λ = 0` the
/// least extreme value, so it gets `p = 1`.
pub fn asymptotic_p_value(lambda: f64) -> f64 {
    if lambda <= 0.0 {
        return 1.0;
    }
    // Pr(χ²₁ ≥ x) = 2Φ(-√x) = erfc(√(x/2))
    0.5 * erfc((lambda / 2.0).sqrt())
}

/// Truncate, fit and refer the statistic to the asymptotic mixture.
pub fn asymptotic_test(outbreak: &Outbreak) -> Result<TestResult> {
    let truncated = truncate_to_exposure(outbreak);
    let admissibility = check_admissibility(&truncated, Alternative::HouseholdOnly);
    let lrt = lrt_two_param(&truncated)?;
    Ok(TestResult {
        lambda_obs: Some(lrt.lambda),
        p_value: asymptotic_p_value(lrt.lambda),
        method: TestMethod::Asymptotic,
        admissibility,
        replicates: 0,
        exceedances: 0,
        failed_replicates: 0,
        seed: 0,
        null_fit: Some(lrt.null),
        full_fit: Some(lrt.full),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{PeriodDistribution, Population};

    fn normal_tail(z: f64) -> f64 {
        // Abramowitz-Stegun 26.2.17, |error| < 7.5e-8
        let t = 1.0 / (1.0 + 0.2316419 * z);
        let poly = t * (0.319381530 + t * (-0.356563782 + t * (1.781477937 + t * (-1.821255978 + t * 1.330274429))));
        (-z * z / 2.0).exp() / (2.0 * std::f64::consts::PI).sqrt() * poly
    }

    #[test]
    fn tail_values() {
        assert_eq!(asymptotic_p_value(0.0), 1.0);
        assert!((asymptotic_p_value(2.706) - 0.05).abs() < 1e-3);
        assert!((asymptotic_p_value(3.841) - 0.025).abs() < 1e-3);
        for x in [0.1, 1.0, 2.706, 3.841, 9.0, 20.0] {
            assert!((asymptotic_p_value(x) - normal_tail(x.sqrt())).abs() < 1e-7);
        }
    }

    #[test]
    fn decreasing_with_half_limit() {
        assert!((asymptotic_p_value(1e-14) - 0.5).abs() < 1e-6);
        let mut prev = 0.5;
        for k in 1..200 {
            let p = asymptotic_p_value(k as f64 * 0.1);
            assert!(p < prev);
            prev = p;
        }
    }

    fn outbreak(onsets: Vec<Option<u32>>) -> Outbreak {
        let pop = Arc::new(Population::uniform(onsets.len() / 5, 5).unwrap());
        let cfg = StudyConfig::new(
            10,
            20,
            PeriodDistribution::uniform(1, 3).unwrap(),
            PeriodDistribution::uniform(3, 5).unwrap(),
        )
        .unwrap();
        Outbreak::new(pop, Arc::new(cfg), onsets).unwrap()
    }

    #[test]
    fn truncation_drops_late_onsets() {
        let mut onsets = vec![None; 10];
        onsets[0] = Some(4);
        onsets[1] = Some(12);
        onsets[6] = Some(10);
        let t = truncate_to_exposure(&outbreak(onsets));
        assert_eq!(t.config().horizon, 10);
        assert_eq!(t.config().uninfected_horizon(), 10);
        assert_eq!(t.onset(0), Some(4));
        assert_eq!(t.onset(1), None);
        assert_eq!(t.onset(6), Some(10));
    }

    #[test]
    fn untruncated_input_is_rejected() {
        let mut onsets = vec![None; 10];
        onsets[0] = Some(12);
        assert!(lrt_two_param(&outbreak(onsets)).is_err());
    }

    #[test]
    fn no_cases_gives_zero() {
        let t = truncate_to_exposure(&outbreak(vec![None; 10]));
        assert_eq!(lrt_two_param(&t).unwrap().lambda, 0.0);
        assert_eq!(asymptotic_test(&outbreak(vec![None; 10])).unwrap().p_value, 1.0);
    }
}
