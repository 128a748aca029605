//! Chain-binomial household likelihood.
//!
//! A susceptible person `i` escapes infection on day `t` with probability
//!
//! ```text
//! e_i(t) = (1 - b)^[t <= S] * prod_{j != i} (1 - p_ji(t))
//! p_ji(t) = (p1 if j shares i's household else p2) * Pr(eta_j > t - onset_j)
//! ```
//!
//! Never-symptomatic persons contribute the product of escapes through the
//! uninfected horizon; cases contribute a sum over possible infection days
//! weighted by the latent period distribution.
//!
//! The functions in this module evaluate those formulas literally, person by
//! person. [`LogLikelihood`] precomputes the data-dependent counts once so
//! that repeated evaluation during model fitting costs a few dot products per
//! case.

mod compiled;
mod fit;

pub use compiled::LogLikelihood;
pub(crate) use fit::lambda;
pub use fit::{lrt_statistic, mle_full, mle_null, Alternative, FitResult, Lrt};

use crate::model::{infectious_weight, Day, Outbreak, TransmissionParams};

/// Probability that `infector` transmits to `target` on `day`, given the
/// target is still susceptible.
pub fn pairwise_daily_prob(
    outbreak: &Outbreak,
    infector: usize,
    target: usize,
    day: Day,
    params: &TransmissionParams,
) -> f64 {
    let Some(onset) = outbreak.onset(infector) else {
        return 0.0;
    };
    let lag = day as i64 - onset as i64;
    if lag < 0 {
        return 0.0;
    }
    let p = if outbreak.population().same_household(infector, target) {
        params.p1
    } else {
        params.p2
    };
    p * infectious_weight(lag, &outbreak.config().infectious)
}

/// Probability that `person` escapes infection from every source on `day`.
pub fn escape_prob(outbreak: &Outbreak, person: usize, day: Day, params: &TransmissionParams) -> f64 {
    log_escape(outbreak, person, day, params).exp()
}

fn log_escape(outbreak: &Outbreak, person: usize, day: Day, params: &TransmissionParams) -> f64 {
    let mut acc = if day <= outbreak.config().exposure_days {
        f64::ln_1p(-params.b)
    } else {
        0.0
    };
    for j in outbreak.cases() {
        if j != person {
            acc += f64::ln_1p(-pairwise_daily_prob(outbreak, j, person, day, params));
        }
    }
    acc
}

/// Log-likelihood contribution of one person; `-inf` when a case has no
/// infection day of positive probability.
pub fn person_log_lik(outbreak: &Outbreak, person: usize, params: &TransmissionParams) -> f64 {
    let config = outbreak.config();
    match outbreak.onset(person) {
        None => (1..=config.uninfected_horizon())
            .map(|t| log_escape(outbreak, person, t, params))
            .sum(),
        Some(onset) => {
            let latent = &config.latent;
            let hi = onset as i64 - latent.min_days() as i64;
            let lo = (onset as i64 - latent.max_days() as i64).max(1);
            if hi < lo {
                return f64::NEG_INFINITY;
            }
            let mut before = 0.0;
            for t in 1..lo {
                before += log_escape(outbreak, person, t as Day, params);
            }
            let mut terms = Vec::new();
            for t in lo..=hi {
                let le = log_escape(outbreak, person, t as Day, params);
                let g = latent.pmf(onset as i64 - t);
                let infect = -f64::exp_m1(le);
                if g > 0.0 && infect > 0.0 {
                    terms.push(g.ln() + infect.ln() + before);
                }
                before += le;
            }
            log_sum_exp(&terms)
        }
    }
}

pub fn total_log_lik(outbreak: &Outbreak, params: &TransmissionParams) -> f64 {
    (0..outbreak.len()).map(|i| person_log_lik(outbreak, i, params)).sum()
}

pub(crate) fn log_sum_exp(terms: &[f64]) -> f64 {
    let max = terms.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    max + terms.iter().map(|t| (t - max).exp()).sum::<f64>().ln()
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::model::{PeriodDistribution, Population, StudyConfig};

    fn outbreak(households: Vec<Vec<usize>>, onsets: Vec<Option<Day>>, s: Day, t: Day) -> Outbreak {
        let pop = Arc::new(Population::from_households(households).unwrap());
        let cfg = StudyConfig::new(
            s,
            t,
            PeriodDistribution::uniform(1, 3).unwrap(),
            PeriodDistribution::uniform(3, 5).unwrap(),
        )
        .unwrap();
        Outbreak::new(pop, Arc::new(cfg), onsets).unwrap()
    }

    #[test]
    fn pairwise_examples() {
        let ob = outbreak(vec![vec![0, 1], vec![2]], vec![Some(5), None, None], 10, 20);
        let params = TransmissionParams::new(0.01, 0.05, 0.00005).unwrap();
        assert_eq!(pairwise_daily_prob(&ob, 1, 0, 6, &params), 0.0);
        assert_eq!(pairwise_daily_prob(&ob, 0, 1, 4, &params), 0.0);
        assert_eq!(pairwise_daily_prob(&ob, 0, 1, 6, &params), 0.05);
        let between = pairwise_daily_prob(&ob, 0, 2, 9, &params);
        assert!((between - 0.00005 / 3.0).abs() < 1e-18);
    }

    #[test]
    fn escape_examples() {
        let none = outbreak(vec![vec![0, 1]], vec![None, None], 10, 20);
        let params = TransmissionParams::new(0.01, 0.05, 0.0).unwrap();
        assert!((escape_prob(&none, 0, 3, &params) - 0.99).abs() < 1e-15);
        assert_eq!(escape_prob(&none, 0, 11, &params), 1.0);

        let one = outbreak(vec![vec![0, 1]], vec![Some(5), None], 10, 20);
        let expected = 0.99 * (1.0 - 0.05 * 2.0 / 3.0);
        assert!((escape_prob(&one, 1, 8, &params) - expected).abs() < 1e-15);
    }

    #[test]
    fn person_examples() {
        // uninfected, null, S = T' = 30
        let ob = outbreak(vec![vec![0]], vec![None], 30, 33);
        let params = TransmissionParams::null(0.01);
        assert!((person_log_lik(&ob, 0, &params) - 30.0 * 0.99f64.ln()).abs() < 1e-12);

        // degenerate latent l0 = 2: one term (1-b)^(onset - l0 - 1) b
        let pop = Arc::new(Population::uniform(1, 1).unwrap());
        let cfg = StudyConfig::new(
            10,
            20,
            PeriodDistribution::degenerate(2).unwrap(),
            PeriodDistribution::uniform(3, 5).unwrap(),
        )
        .unwrap();
        let ob = Outbreak::new(pop, Arc::new(cfg), vec![Some(7)]).unwrap();
        let b: f64 = 0.03;
        let expected = 4.0 * (1.0 - b).ln() + b.ln();
        assert!((person_log_lik(&ob, 0, &TransmissionParams::null(b)) - expected).abs() < 1e-12);
    }

    #[test]
    fn total_examples() {
        let empty = outbreak(vec![], vec![], 10, 20);
        assert_eq!(total_log_lik(&empty, &TransmissionParams::null(0.1)), 0.0);
        let quiet = outbreak(vec![vec![0, 1], vec![2]], vec![None; 3], 10, 20);
        assert_eq!(total_log_lik(&quiet, &TransmissionParams::new(0.0, 0.3, 0.1).unwrap()), 0.0);
    }

    #[test]
    fn late_case_has_zero_null_likelihood() {
        // onset 20 needs infection on day 17..19 > S
        let ob = outbreak(vec![vec![0]], vec![Some(20)], 10, 25);
        assert_eq!(person_log_lik(&ob, 0, &TransmissionParams::null(0.2)), f64::NEG_INFINITY);
    }
}
