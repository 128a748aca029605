//! Domain types shared across the crate and the closed-form epidemiological
//! measures derived from the transmission parameters.
//!
//! Days are 1-based. A person infected on day `t` with latent period `l`
//! becomes symptomatic, and infectious, on day `t + l`.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Day = u32;

const PMF_SUM_TOLERANCE: f64 = 1e-12;

/// Upper margin kept between every probability parameter and 1.
pub const PARAM_EPSILON: f64 = 1e-9;

/// Discrete distribution of a period length in days, supported on
/// `min_days..=max_days`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PeriodDistribution {
    min_days: Day,
    pmf: Vec<f64>,
}

impl PeriodDistribution {
    pub fn new(min_days: Day, max_days: Day, pmf: Vec<f64>) -> Result<Self> {
        if min_days < 1 {
            return Err(Error::Distribution("minimum duration must be at least 1 day".into()));
        }
        if max_days < min_days {
            return Err(Error::Distribution(format!(
                "maximum duration {max_days} is below minimum {min_days}"
            )));
        }
        let len = (max_days - min_days + 1) as usize;
        if pmf.len() != len {
            return Err(Error::Distribution(format!(
                "expected {len} probabilities for {min_days}..={max_days}, got {}",
                pmf.len()
            )));
        }
        if let Some(bad) = pmf.iter().find(|p| !p.is_finite() || **p < 0.0) {
            return Err(Error::Distribution(format!("invalid probability {bad}")));
        }
        let total: f64 = pmf.iter().sum();
        if (total - 1.0).abs() > PMF_SUM_TOLERANCE {
            return Err(Error::Distribution(format!("probabilities sum to {total}, not 1")));
        }
        Ok(Self { min_days, pmf })
    }

    pub fn uniform(min_days: Day, max_days: Day) -> Result<Self> {
        if max_days < min_days {
            return Err(Error::Distribution(format!(
                "maximum duration {max_days} is below minimum {min_days}"
            )));
        }
        let len = (max_days - min_days + 1) as usize;
        Self::new(min_days, max_days, vec![1.0 / len as f64; len])
    }

    /// Point mass at `days`.
    pub fn degenerate(days: Day) -> Result<Self> {
        Self::new(days, days, vec![1.0])
    }

    pub fn min_days(&self) -> Day {
        self.min_days
    }

    pub fn max_days(&self) -> Day {
        self.min_days + self.pmf.len() as Day - 1
    }

    pub fn probabilities(&self) -> &[f64] {
        &self.pmf
    }

    /// `Pr(X = days)`.
    pub fn pmf(&self, days: i64) -> f64 {
        let offset = days - self.min_days as i64;
        if offset < 0 {
            return 0.0;
        }
        self.pmf.get(offset as usize).copied().unwrap_or(0.0)
    }

    /// `Pr(X >= days)`.
    pub fn survival(&self, days: i64) -> f64 {
        if days <= self.min_days as i64 {
            return 1.0;
        }
        let offset = (days - self.min_days as i64) as usize;
        if offset >= self.pmf.len() {
            return 0.0;
        }
        // Sum the tail directly so the result is exact for the support's upper end.
        self.pmf[offset..].iter().sum()
    }

    pub fn mean(&self) -> f64 {
        self.pmf
            .iter()
            .enumerate()
            .map(|(k, p)| p * (self.min_days as f64 + k as f64))
            .sum()
    }

    /// Iterate `(duration, probability)` over the support.
    pub fn iter(&self) -> impl Iterator<Item = (Day, f64)> + '_ {
        self.pmf
            .iter()
            .enumerate()
            .map(move |(k, &p)| (self.min_days + k as Day, p))
    }

    /// Draw a duration given a uniform variate in `[0, 1)`.
    pub(crate) fn quantile(&self, u: f64) -> Day {
        let mut acc = 0.0;
        for (days, p) in self.iter() {
            acc += p;
            if u < acc {
                return days;
            }
        }
        // Rounding left the cumulative sum a hair under 1.
        self.iter()
            .filter(|(_, p)| *p > 0.0)
            .map(|(d, _)| d)
            .last()
            .unwrap_or(self.min_days)
    }
}

/// Households of persons `0..len()`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Population {
    households: Vec<Vec<usize>>,
    household_of: Vec<usize>,
}

impl Population {
    /// Build from explicit household member lists. Persons must be exactly
    /// `0..N` with each appearing in one household.
    pub fn from_households(households: Vec<Vec<usize>>) -> Result<Self> {
        let total: usize = households.iter().map(Vec::len).sum();
        let mut household_of = vec![usize::MAX; total];
        for (h, members) in households.iter().enumerate() {
            if members.is_empty() {
                return Err(Error::Population(format!("household {h} is empty")));
            }
            for &person in members {
                if person >= total {
                    return Err(Error::Population(format!(
                        "person {person} out of range for {total} persons"
                    )));
                }
                if household_of[person] != usize::MAX {
                    return Err(Error::Population(format!(
                        "person {person} belongs to more than one household"
                    )));
                }
                household_of[person] = h;
            }
        }
        Ok(Self { households, household_of })
    }

    /// `n_households` households of `size` persons, numbered consecutively.
    pub fn uniform(n_households: usize, size: usize) -> Result<Self> {
        if size == 0 {
            return Err(Error::Population("household size must be positive".into()));
        }
        let households = (0..n_households)
            .map(|h| (h * size..(h + 1) * size).collect())
            .collect();
        Self::from_households(households)
    }

    pub fn len(&self) -> usize {
        self.household_of.len()
    }

    pub fn is_empty(&self) -> bool {
        self.household_of.is_empty()
    }

    pub fn num_households(&self) -> usize {
        self.households.len()
    }

    pub fn households(&self) -> &[Vec<usize>] {
        &self.households
    }

    pub fn household_of(&self, person: usize) -> usize {
        self.household_of[person]
    }

    pub fn same_household(&self, a: usize, b: usize) -> bool {
        self.household_of[a] == self.household_of[b]
    }

    /// The common household size, if all households have the same size.
    pub fn uniform_household_size(&self) -> Option<usize> {
        let first = self.households.first()?.len();
        self.households.iter().all(|h| h.len() == first).then_some(first)
    }

    pub fn mean_household_size(&self) -> f64 {
        if self.households.is_empty() {
            0.0
        } else {
            self.len() as f64 / self.households.len() as f64
        }
    }
}

/// Study design and natural history assumptions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyConfig {
    /// Days `1..=S` of exposure to the common source.
    pub exposure_days: Day,
    /// Observation horizon `T`.
    pub horizon: Day,
    pub latent: PeriodDistribution,
    pub infectious: PeriodDistribution,
    /// Count escapes of never-symptomatic persons only through `T - latent.max`.
    pub censor_uninfected: bool,
}

impl StudyConfig {
    pub fn new(
        exposure_days: Day,
        horizon: Day,
        latent: PeriodDistribution,
        infectious: PeriodDistribution,
    ) -> Result<Self> {
        let config = Self { exposure_days, horizon, latent, infectious, censor_uninfected: true };
        config.validate()?;
        Ok(config)
    }

    pub fn with_censoring(mut self, censor_uninfected: bool) -> Self {
        self.censor_uninfected = censor_uninfected;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.exposure_days < 1 {
            return Err(Error::Config("exposure must last at least one day".into()));
        }
        if self.horizon < self.exposure_days {
            return Err(Error::Config(format!(
                "horizon {} is shorter than exposure {}",
                self.horizon, self.exposure_days
            )));
        }
        Ok(())
    }

    /// Last day on which a never-symptomatic person is counted as escaping.
    pub fn uninfected_horizon(&self) -> Day {
        if self.censor_uninfected {
            self.horizon.saturating_sub(self.latent.max_days())
        } else {
            self.horizon
        }
    }

    /// Latest onset day the null model can produce.
    pub fn null_onset_bound(&self) -> Day {
        self.exposure_days + self.latent.max_days()
    }
}

/// A line list: symptom onset day, or `None` for never symptomatic, per person.
#[derive(Debug, Clone, PartialEq)]
pub struct Outbreak {
    population: Arc<Population>,
    config: Arc<StudyConfig>,
    onsets: Vec<Option<Day>>,
}

impl Outbreak {
    pub fn new(
        population: Arc<Population>,
        config: Arc<StudyConfig>,
        onsets: Vec<Option<Day>>,
    ) -> Result<Self> {
        config.validate()?;
        if onsets.len() != population.len() {
            return Err(Error::Outbreak(format!(
                "{} onsets for {} persons",
                onsets.len(),
                population.len()
            )));
        }
        let earliest = config.latent.min_days() + 1;
        for (person, onset) in onsets.iter().enumerate() {
            if let Some(day) = *onset {
                if day < earliest {
                    return Err(Error::Outbreak(format!(
                        "person {person}: onset day {day} precedes earliest possible onset {earliest}"
                    )));
                }
                if day > config.horizon {
                    return Err(Error::Outbreak(format!(
                        "person {person}: onset day {day} is after horizon {}",
                        config.horizon
                    )));
                }
            }
        }
        Ok(Self { population, config, onsets })
    }

    /// Same population and configuration with different onsets. Callers
    /// guarantee the onsets are a rearrangement that keeps every invariant.
    pub(crate) fn with_onsets_unchecked(&self, onsets: Vec<Option<Day>>) -> Self {
        debug_assert_eq!(onsets.len(), self.onsets.len());
        Self { population: Arc::clone(&self.population), config: Arc::clone(&self.config), onsets }
    }

    pub fn with_config(&self, config: StudyConfig) -> Result<Self> {
        Self::new(Arc::clone(&self.population), Arc::new(config), self.onsets.clone())
    }

    pub fn population(&self) -> &Population {
        &self.population
    }

    pub fn population_arc(&self) -> &Arc<Population> {
        &self.population
    }

    pub fn config(&self) -> &StudyConfig {
        &self.config
    }

    pub fn onsets(&self) -> &[Option<Day>] {
        &self.onsets
    }

    pub fn onset(&self, person: usize) -> Option<Day> {
        self.onsets[person]
    }

    pub fn len(&self) -> usize {
        self.onsets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.onsets.is_empty()
    }

    /// Indices of symptomatic persons.
    pub fn cases(&self) -> impl Iterator<Item = usize> + '_ {
        self.onsets.iter().enumerate().filter_map(|(i, o)| o.map(|_| i))
    }

    pub fn num_cases(&self) -> usize {
        self.onsets.iter().filter(|o| o.is_some()).count()
    }

    pub fn max_onset(&self) -> Option<Day> {
        self.onsets.iter().flatten().copied().max()
    }
}

/// `(b, p1, p2)`: daily common-source, within-household and
/// between-household transmission probabilities.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct TransmissionParams {
    pub b: f64,
    pub p1: f64,
    pub p2: f64,
}

impl TransmissionParams {
    pub fn new(b: f64, p1: f64, p2: f64) -> Result<Self> {
        for (name, v) in [("b", b), ("p1", p1), ("p2", p2)] {
            if !(0.0..1.0).contains(&v) {
                return Err(Error::Params(format!("{name} = {v} is outside [0, 1)")));
            }
        }
        Ok(Self { b, p1, p2 })
    }

    pub fn null(b: f64) -> Self {
        Self { b, p1: 0.0, p2: 0.0 }
    }

    pub fn as_array(&self) -> [f64; 3] {
        [self.b, self.p1, self.p2]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DerivedMeasures {
    pub cpi: f64,
    pub sar1: f64,
    pub sar2: f64,
    pub local_r: f64,
}

impl DerivedMeasures {
    /// For populations with unequal households the mean household size
    /// stands in for `M`.
    pub fn new(
        params: &TransmissionParams,
        exposure_days: Day,
        infectious: &PeriodDistribution,
        population: &Population,
    ) -> Self {
        let sar1 = sar(params.p1, infectious);
        let sar2 = sar(params.p2, infectious);
        let m = population
            .uniform_household_size()
            .map(|m| m as f64)
            .unwrap_or_else(|| population.mean_household_size());
        Self {
            cpi: cpi(params.b, exposure_days),
            sar1,
            sar2,
            local_r: local_r(sar1, sar2, m, population.len() as f64),
        }
    }
}

/// Community probability of infection, `1 - (1 - b)^S`.
pub fn cpi(b: f64, exposure_days: Day) -> f64 {
    -f64::exp_m1(exposure_days as f64 * f64::ln_1p(-b))
}

/// Secondary attack rate for daily transmission probability `p` over an
/// infectious period distributed as `infectious`.
pub fn sar(p: f64, infectious: &PeriodDistribution) -> f64 {
    let log_escape = f64::ln_1p(-p);
    infectious
        .iter()
        .map(|(days, f)| f * -f64::exp_m1(days as f64 * log_escape))
        .sum()
}

/// Local reproductive number `(M - 1) SAR1 + (N - M) SAR2`, with `N` the
/// total number of persons.
pub fn local_r(sar1: f64, sar2: f64, household_size: f64, n_persons: f64) -> f64 {
    (household_size - 1.0) * sar1 + (n_persons - household_size) * sar2
}

/// Probability that a case is still infectious `lag` days after onset.
/// Infectiousness starts on the onset day (`lag = 0`) and lasts `η` days.
pub fn infectious_weight(lag: i64, infectious: &PeriodDistribution) -> f64 {
    if lag < 0 {
        0.0
    } else {
        infectious.survival(lag + 1)
    }
}
