use crate::model::{infectious_weight, Outbreak, TransmissionParams};

/// Log-likelihood of one outbreak, reduced to integer exposure counts.
///
/// Every `log e_i(t)` is a linear combination of `log(1 - b)`,
/// `log(1 - p1 w_d)` and `log(1 - p2 w_d)` over infectiousness lags `d`,
/// with coefficients that depend only on the data. Those coefficients are
/// accumulated here once per outbreak.
#[derive(Debug, Clone)]
pub struct LogLikelihood {
    weights: Vec<f64>,
    /// Coefficients summed over every never-symptomatic person.
    uninfected: Vec<f64>,
    cases: Vec<CaseTerms>,
    /// Per case: cumulative coefficients before the window, then one row per window day.
    rows: Vec<f64>,
    log_latent: Vec<f64>,
    /// Some case has no possible infection day.
    impossible: bool,
}

#[derive(Debug, Clone, Copy)]
struct CaseTerms {
    row: usize,
    days: usize,
}

impl LogLikelihood {
    pub fn new(outbreak: &Outbreak) -> Self {
        let config = outbreak.config();
        let population = outbreak.population();
        let width = config.infectious.max_days() as usize;
        let k = 1 + 2 * width;
        let weights: Vec<f64> =
            (0..width).map(|d| infectious_weight(d as i64, &config.infectious)).collect();
        let exposure = config.exposure_days as usize;
        let uninfected_horizon = config.uninfected_horizon() as usize;
        let latent_min = config.latent.min_days() as i64;
        let latent_max = config.latent.max_days() as i64;

        let last_day = outbreak
            .onsets()
            .iter()
            .flatten()
            .map(|&o| (o as i64 - latent_min).max(0) as usize)
            .max()
            .unwrap_or(0)
            .max(uninfected_horizon);
        let days = last_day + 1;

        // infectious case counts by (day, lag), overall and per household with cases
        let mut all = vec![0u32; days * width];
        let mut slot_of = vec![usize::MAX; population.num_households()];
        let mut slots: Vec<usize> = Vec::new();
        for case in outbreak.cases() {
            let h = population.household_of(case);
            if slot_of[h] == usize::MAX {
                slot_of[h] = slots.len();
                slots.push(h);
            }
        }
        let mut by_household = vec![0u32; slots.len() * days * width];
        for case in outbreak.cases() {
            let onset = outbreak.onset(case).unwrap() as usize;
            let slot = slot_of[population.household_of(case)];
            for d in 0..width {
                let t = onset + d;
                if t >= days {
                    break;
                }
                all[t * width + d] += 1;
                by_household[(slot * days + t) * width + d] += 1;
            }
        }

        let day_row = |slot: Option<usize>, t: usize, out: &mut [f64]| {
            out[0] = if t <= exposure { 1.0 } else { 0.0 };
            for d in 0..width {
                let total = all[t * width + d] as f64;
                let within = slot.map_or(0.0, |s| by_household[(s * days + t) * width + d] as f64);
                out[1 + d] = within;
                out[1 + width + d] = total - within;
            }
        };

        let mut uninfected = vec![0.0; k];
        let mut row = vec![0.0; k];

        // households without cases share one exposure history
        let quiet: usize = population
            .households()
            .iter()
            .enumerate()
            .filter(|(h, _)| slot_of[*h] == usize::MAX)
            .map(|(_, members)| members.len())
            .sum();
        if quiet > 0 {
            for t in 1..=uninfected_horizon {
                day_row(None, t, &mut row);
                for (u, r) in uninfected.iter_mut().zip(&row) {
                    *u += quiet as f64 * r;
                }
            }
        }

        let mut cases = Vec::new();
        let mut rows = Vec::new();
        let mut log_latent = Vec::new();
        let mut impossible = false;
        let mut prefix = vec![0.0; days * k];
        for (slot, &h) in slots.iter().enumerate() {
            // prefix[t] = sum of day rows over 1..=t
            for t in 1..days {
                day_row(Some(slot), t, &mut row);
                for j in 0..k {
                    prefix[t * k + j] = prefix[(t - 1) * k + j] + row[j];
                }
            }
            let members = &population.households()[h];
            let escapes = members.iter().filter(|&&i| outbreak.onset(i).is_none()).count();
            if escapes > 0 {
                for j in 0..k {
                    uninfected[j] += escapes as f64 * prefix[uninfected_horizon * k + j];
                }
            }
            for &i in members {
                let Some(onset) = outbreak.onset(i) else { continue };
                let hi = onset as i64 - latent_min;
                let lo = (onset as i64 - latent_max).max(1);
                if hi < lo {
                    impossible = true;
                    continue;
                }
                let (lo, hi) = (lo as usize, hi as usize);
                let start = rows.len();
                rows.extend_from_slice(&prefix[(lo - 1) * k..lo * k]);
                for t in lo..=hi {
                    for j in 0..k {
                        rows.push(prefix[t * k + j] - prefix[(t - 1) * k + j]);
                    }
                    log_latent.push(config.latent.pmf(onset as i64 - t as i64).ln());
                }
                cases.push(CaseTerms { row: start, days: hi - lo + 1 });
            }
        }

        Self { weights, uninfected, cases, rows, log_latent, impossible }
    }

    fn width(&self) -> usize {
        self.weights.len()
    }

    pub fn num_cases(&self) -> usize {
        self.cases.len()
    }

    /// Log-likelihood at `params`; `-inf` where the data are impossible.
    pub fn eval(&self, params: &TransmissionParams) -> f64 {
        if self.impossible {
            return f64::NEG_INFINITY;
        }
        let width = self.width();
        let k = 1 + 2 * width;
        let mut phi = [0.0f64; 64];
        let phi = if k <= phi.len() { &mut phi[..k] } else { return self.eval_alloc(params) };
        self.fill_phi(params, phi);
        self.eval_with(phi)
    }

    fn eval_alloc(&self, params: &TransmissionParams) -> f64 {
        let mut phi = vec![0.0; 1 + 2 * self.width()];
        self.fill_phi(params, &mut phi);
        self.eval_with(&phi)
    }

    fn fill_phi(&self, params: &TransmissionParams, phi: &mut [f64]) {
        let width = self.width();
        phi[0] = f64::ln_1p(-params.b);
        for (d, w) in self.weights.iter().enumerate() {
            phi[1 + d] = f64::ln_1p(-params.p1 * w);
            phi[1 + width + d] = f64::ln_1p(-params.p2 * w);
        }
    }

    fn eval_with(&self, phi: &[f64]) -> f64 {
        let k = phi.len();
        let dot = |row: &[f64]| row.iter().zip(phi).map(|(a, b)| a * b).sum::<f64>();
        let mut total = dot(&self.uninfected);
        let mut g_index = 0;
        for case in &self.cases {
            let base = &self.rows[case.row..case.row + (case.days + 1) * k];
            let before = dot(&base[..k]);
            // sum_t g_t (1 - e_t) prod_{tau < t} e_tau, scaled by exp(before)
            let mut acc = 0.0;
            let mut survive = 0.0;
            for t in 0..case.days {
                let log_e = dot(&base[(t + 1) * k..(t + 2) * k]);
                let log_g = self.log_latent[g_index + t];
                let infect = -f64::exp_m1(log_e);
                if infect > 0.0 && log_g > f64::NEG_INFINITY {
                    acc += (log_g + survive).exp() * infect;
                }
                survive += log_e;
            }
            g_index += case.days;
            if acc <= 0.0 {
                return f64::NEG_INFINITY;
            }
            total += before + acc.ln();
        }
        total
    }
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::likelihood::total_log_lik;
    use crate::model::{PeriodDistribution, Population, StudyConfig};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn matches_direct_evaluation() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for trial in 0..40 {
            let n_hh = rng.random_range(1..6);
            let size = rng.random_range(1..4);
            let pop = Arc::new(Population::uniform(n_hh, size).unwrap());
            let s = rng.random_range(3..12);
            let t = s + rng.random_range(3..10);
            let cfg = StudyConfig::new(
                s,
                t,
                PeriodDistribution::uniform(1, rng.random_range(1..4)).unwrap(),
                PeriodDistribution::uniform(rng.random_range(1..3), rng.random_range(3..6)).unwrap(),
            )
            .unwrap()
            .with_censoring(trial % 2 == 0);
            let earliest = cfg.latent.min_days() + 1;
            let onsets = (0..pop.len())
                .map(|_| rng.random_bool(0.4).then(|| rng.random_range(earliest..=t)))
                .collect();
            let ob = Outbreak::new(pop, Arc::new(cfg), onsets).unwrap();
            let ll = LogLikelihood::new(&ob);
            for _ in 0..5 {
                let params = TransmissionParams::new(
                    rng.random_range(0.0..0.3),
                    rng.random_range(0.0..0.5),
                    rng.random_range(0.0..0.1),
                )
                .unwrap();
                let direct = total_log_lik(&ob, &params);
                let fast = ll.eval(&params);
                if direct.is_finite() {
                    assert!((direct - fast).abs() < 1e-9 * direct.abs().max(1.0), "{direct} vs {fast}");
                } else {
                    assert_eq!(fast, f64::NEG_INFINITY);
                }
            }
        }
    }

    #[test]
    fn empty_window_is_impossible() {
        let pop = Arc::new(Population::uniform(1, 2).unwrap());
        let cfg = StudyConfig::new(
            10,
            20,
            PeriodDistribution::uniform(2, 3).unwrap(),
            PeriodDistribution::uniform(3, 5).unwrap(),
        )
        .unwrap();
        let ob = Outbreak::new(pop, Arc::new(cfg), vec![None, None]).unwrap();
        let bad = ob.with_onsets_unchecked(vec![Some(2), None]);
        let params = TransmissionParams::new(0.1, 0.1, 0.1).unwrap();
        assert_eq!(LogLikelihood::new(&bad).eval(&params), f64::NEG_INFINITY);
        assert_eq!(crate::likelihood::person_log_lik(&bad, 0, &params), f64::NEG_INFINITY);
    }
}
