//! Day-by-day stochastic household epidemic driven by a common source.

use std::sync::Arc;

use rand::Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{Day, Outbreak, PeriodDistribution, Population, StudyConfig, TransmissionParams};

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub exposure_days: Day,
    pub latent: PeriodDistribution,
    pub infectious: PeriodDistribution,
    /// Attempts allowed before giving up on getting at least one infection.
    pub max_redraws: u64,
}

impl SimConfig {
    pub fn new(exposure_days: Day, latent: PeriodDistribution, infectious: PeriodDistribution) -> Self {
        Self { exposure_days, latent, infectious, max_redraws: 1_000_000 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimOutcome {
    pub outbreak: Outbreak,
    /// Persons infected by the common source.
    pub n_index: usize,
    pub n_total: usize,
    /// Households with at least one infection.
    pub affected_households: usize,
    /// Last day on which anybody was latent or infectious.
    pub exhaustion_day: Day,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Source {
    Common,
    Household,
    Community,
}

#[derive(Debug, Clone, Copy)]
struct Infection {
    onset: Day,
    /// Last infectious day.
    end: Day,
    source: Source,
}

pub fn simulate_epidemic<R: Rng + ?Sized>(
    population: &Arc<Population>,
    sim: &SimConfig,
    params: &TransmissionParams,
    rng: &mut R,
) -> Result<SimOutcome> {
    if params.b <= 0.0 {
        return Err(Error::Params("b must be positive for an epidemic to start".into()));
    }
    TransmissionParams::new(params.b, params.p1, params.p2)?;
    for _ in 0..sim.max_redraws.max(1) {
        let infections = run_once(population, sim, params, rng);
        if infections.iter().any(Option::is_some) {
            return Ok(finish(population, sim, infections));
        }
    }
    Err(Error::NoInfections(sim.max_redraws))
}

fn run_once<R: Rng + ?Sized>(
    population: &Population,
    sim: &SimConfig,
    params: &TransmissionParams,
    rng: &mut R,
) -> Vec<Option<Infection>> {
    let n = population.len();
    let log_b = f64::ln_1p(-params.b);
    let log_p1 = f64::ln_1p(-params.p1);
    let log_p2 = f64::ln_1p(-params.p2);
    let mut state: Vec<Option<Infection>> = vec![None; n];
    let mut infected: Vec<usize> = Vec::new();
    let mut per_household = vec![0u32; population.num_households()];
    let mut touched: Vec<usize> = Vec::new();
    let mut last_active: Day = 0;
    let mut newly: Vec<(usize, Source)> = Vec::new();

    let mut t: Day = 1;
    loop {
        if t > sim.exposure_days && t > last_active {
            break;
        }
        for &h in &touched {
            per_household[h] = 0;
        }
        touched.clear();
        let mut infectious_total = 0u32;
        for &j in &infected {
            let inf = state[j].unwrap();
            if inf.onset <= t && t <= inf.end {
                let h = population.household_of(j);
                if per_household[h] == 0 {
                    touched.push(h);
                }
                per_household[h] += 1;
                infectious_total += 1;
            }
        }

        let common = if t <= sim.exposure_days { -log_b } else { 0.0 };
        newly.clear();
        for i in 0..n {
            if state[i].is_some() {
                continue;
            }
            let within = per_household[population.household_of(i)] as f64;
            let between = infectious_total as f64 - within;
            let hazard_h = -within * log_p1;
            let hazard_c = -between * log_p2;
            let hazard = common + hazard_h + hazard_c;
            if hazard <= 0.0 {
                continue;
            }
            // 1 - escape, with escape = exp(-hazard)
            if rng.random::<f64>() < -f64::exp_m1(-hazard) {
                let pick = rng.random::<f64>() * hazard;
                let source = if pick < common {
                    Source::Common
                } else if pick < common + hazard_h {
                    Source::Household
                } else {
                    Source::Community
                };
                newly.push((i, source));
            }
        }
        for &(i, source) in &newly {
            let onset = t + sim.latent.quantile(rng.random());
            let end = onset + sim.infectious.quantile(rng.random()) - 1;
            state[i] = Some(Infection { onset, end, source });
            infected.push(i);
            last_active = last_active.max(end);
        }
        t += 1;
    }
    state
}

fn finish(population: &Arc<Population>, sim: &SimConfig, infections: Vec<Option<Infection>>) -> SimOutcome {
    let exhaustion_day = infections.iter().flatten().map(|i| i.end).max().unwrap_or(0);
    let horizon = exhaustion_day.max(sim.exposure_days) + sim.latent.max_days();
    let config = StudyConfig {
        exposure_days: sim.exposure_days,
        horizon,
        latent: sim.latent.clone(),
        infectious: sim.infectious.clone(),
        censor_uninfected: true,
    };
    let onsets = infections.iter().map(|i| i.map(|i| i.onset)).collect();
    let n_index = infections.iter().flatten().filter(|i| i.source == Source::Common).count();
    let n_total = infections.iter().flatten().count();
    let affected_households = population
        .households()
        .iter()
        .filter(|members| members.iter().any(|&i| infections[i].is_some()))
        .count();
    let outbreak = Outbreak::new(Arc::clone(population), Arc::new(config), onsets)
        .expect("simulated onsets respect the study bounds");
    SimOutcome { outbreak, n_index, n_total, affected_households, exhaustion_day }
}
