//! Permutation null distributions for the likelihood-ratio statistic.
//!
//! Under the null model every rearrangement of the observed onsets across
//! persons has the same likelihood, so the statistic recomputed on permuted
//! data traces out its null distribution (the simple test). The refined test
//! additionally redraws, uniformly, the onset days of cases whose null
//! likelihood depends on their onset only through the sum of onsets.

use rand::seq::SliceRandom;
use rand::RngCore;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::arrangements::{ArrangementSpec, ArrangementTable};
use crate::error::{Error, Result};
use crate::likelihood::{Alternative, FitResult, LogLikelihood};
use crate::model::{infectious_weight, Day, Outbreak};
use crate::streams;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Admissibility {
    /// No case can be attributed to another case.
    NullOnly,
    /// Some onset is too late to have come from the common source.
    FullOnly,
    Both,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ResampleMethod {
    Simple,
    Refined,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TestMethod {
    Simple,
    Refined,
    Asymptotic,
    /// p-value fixed by admissibility, nothing resampled.
    Degenerate,
}

impl From<ResampleMethod> for TestMethod {
    fn from(m: ResampleMethod) -> Self {
        match m {
            ResampleMethod::Simple => TestMethod::Simple,
            ResampleMethod::Refined => TestMethod::Refined,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TestResult {
    /// Observed statistic; `None` when the null model cannot be fitted.
    pub lambda_obs: Option<f64>,
    pub p_value: f64,
    pub method: TestMethod,
    pub admissibility: Admissibility,
    /// Replicates that entered the p-value.
    pub replicates: usize,
    pub exceedances: usize,
    pub failed_replicates: usize,
    pub seed: u64,
    pub null_fit: Option<FitResult>,
    pub full_fit: Option<FitResult>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PermutationOptions {
    pub method: ResampleMethod,
    pub replicates: usize,
    pub seed: u64,
    pub alternative: Alternative,
    /// Report `(1 + count) / (1 + M)` instead of `count / M`.
    pub add_one: bool,
}

impl PermutationOptions {
    pub fn new(method: ResampleMethod, replicates: usize, seed: u64) -> Self {
        Self { method, replicates, seed, alternative: Alternative::Full, add_one: false }
    }

    pub fn with_alternative(mut self, alternative: Alternative) -> Self {
        self.alternative = alternative;
        self
    }
}

/// Largest tolerated share of failed replicates.
const MAX_FAILURE_RATE: f64 = 0.01;

pub fn check_admissibility(outbreak: &Outbreak, alternative: Alternative) -> Admissibility {
    let config = outbreak.config();
    let bound = config.null_onset_bound();
    if outbreak.onsets().iter().flatten().any(|&o| o > bound) {
        return Admissibility::FullOnly;
    }
    let population = outbreak.population();
    let cases: Vec<(usize, Day)> =
        outbreak.onsets().iter().enumerate().filter_map(|(i, o)| o.map(|o| (i, o))).collect();
    let latent_min = config.latent.min_days() as i64;
    let latent_max = config.latent.max_days() as i64;
    for &(i, onset) in &cases {
        let hi = onset as i64 - latent_min;
        let lo = (onset as i64 - latent_max).max(1);
        for &(j, other) in &cases {
            if j == i {
                continue;
            }
            if alternative == Alternative::HouseholdOnly && !population.same_household(i, j) {
                continue;
            }
            if (lo..=hi).any(|t| infectious_weight(t - other as i64, &config.infectious) > 0.0) {
                return Admissibility::Both;
            }
        }
    }
    Admissibility::NullOnly
}

/// Randomly reassign the observed onsets (and with them infection status)
/// to persons. Household structure is untouched.
pub fn permute_outbreak<R: RngCore + ?Sized>(outbreak: &Outbreak, rng: &mut R) -> Outbreak {
    let mut onsets = outbreak.onsets().to_vec();
    onsets.shuffle(rng);
    outbreak.with_onsets_unchecked(onsets)
}

/// Uniform redraw of onset days of eligible cases, preserving their sum.
///
/// Eligible cases have onset in `[latent.max + 1, min(S + latent.min, T)]`:
/// their whole infection window lies inside the exposure period, so their
/// null likelihood depends on the onset only through `(1 - b)^onset`.
/// The arrangement table depends only on the multiset of onsets, so one
/// refiner serves every permutation of the same data.
#[derive(Debug, Clone)]
pub struct Refiner {
    first: Day,
    last: Day,
    table: Option<ArrangementTable>,
}

impl Refiner {
    pub fn new(outbreak: &Outbreak) -> Self {
        let config = outbreak.config();
        let first = config.latent.max_days() + 1;
        let last = (config.exposure_days + config.latent.min_days()).min(config.horizon);
        let mut refiner = Self { first, last, table: None };
        if last <= first {
            return refiner;
        }
        let eligible: Vec<Day> =
            outbreak.onsets().iter().flatten().copied().filter(|&o| refiner.is_eligible(o)).collect();
        if eligible.len() <= 1 {
            return refiner;
        }
        let balls: u64 = eligible.iter().map(|&o| (o - first) as u64).sum();
        let spec = ArrangementSpec::new(balls, eligible.len(), (last - first) as u64);
        refiner.table = Some(ArrangementTable::new(spec));
        refiner
    }

    fn is_eligible(&self, onset: Day) -> bool {
        onset >= self.first && onset <= self.last
    }

    /// `(n, m, v)` of the underlying arrangement problem, if refinement does anything.
    pub fn spec(&self) -> Option<ArrangementSpec> {
        self.table.as_ref().map(ArrangementTable::spec)
    }

    pub fn refine<R: RngCore + ?Sized>(&self, outbreak: &Outbreak, rng: &mut R) -> Result<Outbreak> {
        let Some(table) = &self.table else {
            return Ok(outbreak.clone());
        };
        let slots: Vec<usize> = outbreak
            .onsets()
            .iter()
            .enumerate()
            .filter(|(_, o)| o.is_some_and(|o| self.is_eligible(o)))
            .map(|(i, _)| i)
            .collect();
        let spec = table.spec();
        let balls: u64 = slots.iter().map(|&i| (outbreak.onset(i).unwrap() - self.first) as u64).sum();
        if slots.len() != spec.boxes || balls != spec.balls {
            return Err(Error::Invalid(
                "outbreak is not a rearrangement of the data this refiner was built for".into(),
            ));
        }
        let draw = table.sample(rng)?;
        let mut onsets = outbreak.onsets().to_vec();
        for (&i, &x) in slots.iter().zip(&draw) {
            onsets[i] = Some(self.first + x as Day);
        }
        Ok(outbreak.with_onsets_unchecked(onsets))
    }
}

pub fn refine_onsets<R: RngCore + ?Sized>(outbreak: &Outbreak, rng: &mut R) -> Result<Outbreak> {
    Refiner::new(outbreak).refine(outbreak, rng)
}

pub fn permutation_test(outbreak: &Outbreak, options: &PermutationOptions) -> Result<TestResult> {
    if options.replicates < 1 {
        return Err(Error::Invalid("at least one replicate is required".into()));
    }
    let admissibility = check_admissibility(outbreak, options.alternative);
    let ll = LogLikelihood::new(outbreak);
    let null = ll.fit_null();
    let null_ok = null.log_lik.is_finite();
    let full = ll.fit_full(options.alternative, null_ok.then_some(&null));

    let degenerate = |p_value: f64, lambda_obs: Option<f64>| TestResult {
        lambda_obs,
        p_value,
        method: TestMethod::Degenerate,
        admissibility,
        replicates: 0,
        exceedances: 0,
        failed_replicates: 0,
        seed: options.seed,
        null_fit: null_ok.then_some(null),
        full_fit: full.log_lik.is_finite().then_some(full),
    };
    match admissibility {
        Admissibility::NullOnly => {
            let lambda = null_ok.then(|| crate::likelihood::lambda(null.log_lik, full.log_lik));
            return Ok(degenerate(1.0, lambda));
        }
        Admissibility::FullOnly if full.log_lik.is_finite() => return Ok(degenerate(0.0, None)),
        Admissibility::FullOnly | Admissibility::Both => {}
    }
    if !full.log_lik.is_finite() {
        return Err(Error::FitFailed("unrestricted likelihood is zero everywhere".into()));
    }
    if !null_ok {
        return Err(Error::NullInadmissible);
    }
    let lambda_obs = crate::likelihood::lambda(null.log_lik, full.log_lik);

    let refiner = match options.method {
        ResampleMethod::Refined => Some(Refiner::new(outbreak)),
        ResampleMethod::Simple => None,
    };
    let stats: Vec<Option<f64>> = (0..options.replicates as u64)
        .into_par_iter()
        .map(|k| {
            let mut rng = streams::stream(options.seed, &[k]);
            replicate_statistic(outbreak, refiner.as_ref(), options.alternative, &mut rng)
        })
        .collect();

    let failed = stats.iter().filter(|s| s.is_none()).count();
    if failed as f64 > MAX_FAILURE_RATE * options.replicates as f64 {
        return Err(Error::ReplicateFailures { failed, total: options.replicates });
    }
    let valid = options.replicates - failed;
    let exceedances = stats.iter().flatten().filter(|&&l| l >= lambda_obs).count();
    let p_value = if options.add_one {
        (1 + exceedances) as f64 / (1 + valid) as f64
    } else {
        exceedances as f64 / valid as f64
    };

    Ok(TestResult {
        lambda_obs: Some(lambda_obs),
        p_value,
        method: options.method.into(),
        admissibility,
        replicates: valid,
        exceedances,
        failed_replicates: failed,
        seed: options.seed,
        null_fit: Some(null),
        full_fit: Some(full),
    })
}

fn replicate_statistic<R: RngCore>(
    outbreak: &Outbreak,
    refiner: Option<&Refiner>,
    alternative: Alternative,
    rng: &mut R,
) -> Option<f64> {
    let mut replicate = permute_outbreak(outbreak, rng);
    if let Some(refiner) = refiner {
        replicate = refiner.refine(&replicate, rng).ok()?;
    }
    if check_admissibility(&replicate, alternative) == Admissibility::NullOnly {
        return Some(0.0);
    }
    LogLikelihood::new(&replicate).lrt(alternative).ok().map(|l| l.lambda)
}
