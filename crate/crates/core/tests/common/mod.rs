#![allow(dead_code)]

use std::sync::Arc;

use hhtx::model::{Day, Outbreak, PeriodDistribution, Population, StudyConfig};

pub fn uniform(lo: Day, hi: Day) -> PeriodDistribution {
    PeriodDistribution::uniform(lo, hi).unwrap()
}

pub fn outbreak(
    households: Vec<Vec<usize>>,
    onsets: Vec<Option<Day>>,
    s: Day,
    t: Day,
    latent: PeriodDistribution,
    infectious: PeriodDistribution,
) -> Outbreak {
    let pop = Arc::new(Population::from_households(households).unwrap());
    let cfg = StudyConfig::new(s, t, latent, infectious).unwrap();
    Outbreak::new(pop, Arc::new(cfg), onsets).unwrap()
}

/// Households of `size` with cases at `(person, onset)`.
pub fn with_cases(n_households: usize, size: usize, cases: &[(usize, Day)], s: Day, t: Day) -> Outbreak {
    let mut onsets = vec![None; n_households * size];
    for &(i, d) in cases {
        onsets[i] = Some(d);
    }
    let households = (0..n_households).map(|h| (h * size..(h + 1) * size).collect()).collect();
    outbreak(households, onsets, s, t, uniform(1, 3), uniform(3, 5))
}

/// Likelihood evaluated straight from the model definition in probability
/// space, sharing no code with the library.
pub fn brute_force_lik(ob: &Outbreak, b: f64, p1: f64, p2: f64) -> f64 {
    let cfg = ob.config();
    let pop = ob.population();
    let g = |d: i64| -> f64 {
        cfg.latent.iter().find(|&(k, _)| k as i64 == d).map_or(0.0, |(_, p)| p)
    };
    // Pr(eta >= d + 1)
    let w = |d: i64| -> f64 {
        if d < 0 {
            return 0.0;
        }
        cfg.infectious.iter().filter(|&(k, _)| k as i64 >= d + 1).map(|(_, p)| p).sum()
    };
    let escape = |i: usize, t: i64| -> f64 {
        let mut e = if t <= cfg.exposure_days as i64 { 1.0 - b } else { 1.0 };
        for j in 0..ob.len() {
            if j == i {
                continue;
            }
            if let Some(oj) = ob.onset(j) {
                let p = if pop.household_of(j) == pop.household_of(i) { p1 } else { p2 };
                e *= 1.0 - p * w(t - oj as i64);
            }
        }
        e
    };
    let t_prime = if cfg.censor_uninfected { cfg.horizon - cfg.latent.max_days() } else { cfg.horizon } as i64;
    let mut total = 1.0;
    for i in 0..ob.len() {
        match ob.onset(i) {
            None => {
                for t in 1..=t_prime {
                    total *= escape(i, t);
                }
            }
            Some(o) => {
                let mut sum = 0.0;
                for t in 1..o as i64 {
                    let weight = g(o as i64 - t);
                    if weight == 0.0 {
                        continue;
                    }
                    let mut survive = 1.0;
                    for tau in 1..t {
                        survive *= escape(i, tau);
                    }
                    sum += weight * (1.0 - escape(i, t)) * survive;
                }
                total *= sum;
            }
        }
    }
    total
}

/// Maximise `f` over a box by repeated grid zooming; returns `(argmax, max)`.
pub fn grid_max<const D: usize>(f: impl Fn([f64; D]) -> f64, lo: [f64; D], hi: [f64; D], points: usize, rounds: usize) -> ([f64; D], f64) {
    let (mut lo_r, mut hi_r) = (lo, hi);
    let mut best = ([0.0; D], f64::NEG_INFINITY);
    for _ in 0..rounds {
        let total = points.pow(D as u32);
        for idx in 0..total {
            let mut x = [0.0; D];
            let mut rem = idx;
            for d in 0..D {
                let k = rem % points;
                rem /= points;
                x[d] = lo_r[d] + (hi_r[d] - lo_r[d]) * k as f64 / (points - 1) as f64;
            }
            let v = f(x);
            if v > best.1 {
                best = (x, v);
            }
        }
        for d in 0..D {
            let step = (hi_r[d] - lo_r[d]) / (points - 1) as f64;
            lo_r[d] = (best.0[d] - 2.0 * step).max(lo[d]);
            hi_r[d] = (best.0[d] + 2.0 * step).min(hi[d]);
        }
    }
    best
}

/// Upper tail of the chi-square distribution, via the regularized gamma.
pub fn chi_square_p(statistic: f64, df: usize) -> f64 {
    use statrs::distribution::{ChiSquared, ContinuousCDF};
    1.0 - ChiSquared::new(df as f64).unwrap().cdf(statistic)
}

/// Every bounded composition of `n` into `m` parts of at most `v`, in
/// lexicographic order, by odometer enumeration of `{0..=v}^m`.
pub fn enumerate_compositions(n: u64, m: usize, v: u64) -> Vec<Vec<u64>> {
    let mut out = Vec::new();
    let mut digits = vec![0u64; m];
    loop {
        if digits.iter().sum::<u64>() == n {
            out.push(digits.clone());
        }
        let mut k = m;
        loop {
            if k == 0 {
                return out;
            }
            k -= 1;
            if digits[k] < v {
                digits[k] += 1;
                digits[k + 1..].iter_mut().for_each(|d| *d = 0);
                break;
            }
        }
    }
}

/// Pearson goodness-of-fit p-value of `draws` against the uniform law on
/// the enumerated compositions.
pub fn uniformity_p_value<R: rand::RngCore>(n: u64, m: usize, v: u64, draws: usize, rng: &mut R) -> f64 {
    use std::collections::HashMap;
    let support = enumerate_compositions(n, m, v);
    let index: HashMap<Vec<u64>, usize> = support.iter().cloned().enumerate().map(|(i, c)| (c, i)).collect();
    let table = hhtx::arrangements::ArrangementTable::new(hhtx::arrangements::ArrangementSpec::new(n, m, v));
    let mut counts = vec![0usize; support.len()];
    for _ in 0..draws {
        counts[index[&table.sample(rng).unwrap()]] += 1;
    }
    let expected = draws as f64 / support.len() as f64;
    let stat: f64 = counts.iter().map(|&c| (c as f64 - expected).powi(2) / expected).sum();
    chi_square_p(stat, support.len() - 1)
}

/// One outbreak in the 100 households of 5, S = 30 setting.
pub fn table1_outbreak(b: f64, p1: f64, p2: f64, seed: u64) -> hhtx::simulator::SimOutcome {
    let pop = Arc::new(Population::uniform(100, 5).unwrap());
    let sim = hhtx::simulator::SimConfig::new(30, uniform(1, 3), uniform(3, 5));
    let params = hhtx::model::TransmissionParams::new(b, p1, p2).unwrap();
    hhtx::simulator::simulate_epidemic(&pop, &sim, &params, &mut hhtx::streams::stream(seed, &[])).unwrap()
}

/// Largest deviation of the maximised null log-likelihood over `replicates`
/// refined permutations of `ob`.
pub fn max_null_deviation(ob: &Outbreak, replicates: u64, seed: u64) -> f64 {
    use hhtx::likelihood::mle_null;
    use hhtx::resampling::{permute_outbreak, Refiner};
    use rayon::prelude::*;
    let observed = mle_null(ob).unwrap().log_lik;
    let refiner = Refiner::new(ob);
    (0..replicates)
        .into_par_iter()
        .map(|k| {
            let mut rng = hhtx::streams::stream(seed, &[k]);
            let replicate = refiner.refine(&permute_outbreak(ob, &mut rng), &mut rng).unwrap();
            (mle_null(&replicate).unwrap().log_lik - observed).abs()
        })
        .reduce(|| 0.0, f64::max)
}
