//! Monte Carlo power studies over a grid of transmission parameters.

use std::io::Write;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::asymptotic::{asymptotic_test, truncate_to_exposure};
use crate::error::{Error, Result};
use crate::likelihood::Alternative;
use crate::model::{DerivedMeasures, Population, TransmissionParams};
use crate::resampling::{permutation_test, PermutationOptions, ResampleMethod};
use crate::simulator::{simulate_epidemic, SimConfig};
use crate::streams::{derive_seed, stream};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PowerMethod {
    Simple,
    Refined,
    Asymptotic,
}

impl PowerMethod {
    pub fn as_str(self) -> &'static str {
        match self {
            PowerMethod::Simple => "simple",
            PowerMethod::Refined => "refined",
            PowerMethod::Asymptotic => "asymptotic",
        }
    }
}

impl std::str::FromStr for PowerMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "simple" => Ok(PowerMethod::Simple),
            "refined" => Ok(PowerMethod::Refined),
            "asymptotic" => Ok(PowerMethod::Asymptotic),
            other => Err(Error::Config(format!("unknown method `{other}`"))),
        }
    }
}

#[derive(Debug, Clone)]
pub struct PowerStudy {
    pub population: Arc<Population>,
    pub sim: SimConfig,
    pub grid: Vec<TransmissionParams>,
    pub n_sims: usize,
    pub n_perms: usize,
    pub alpha: f64,
    pub method: PowerMethod,
    /// `HouseholdOnly` fixes `p2 = 0` in the fitted alternative.
    pub alternative: Alternative,
    /// Analyse only data observed up to day `S`.
    pub truncate: bool,
    pub add_one: bool,
    pub seed: u64,
}

impl PowerStudy {
    pub fn new(population: Arc<Population>, sim: SimConfig, grid: Vec<TransmissionParams>, method: PowerMethod) -> Self {
        Self {
            population,
            sim,
            grid,
            n_sims: 2000,
            n_perms: 2000,
            alpha: 0.05,
            method,
            alternative: Alternative::Full,
            truncate: false,
            add_one: false,
            seed: 0,
        }
    }

    /// The two-parameter small-sample setting: `p2 = 0` and data cut at `S`.
    pub fn two_parameter(mut self) -> Self {
        self.alternative = Alternative::HouseholdOnly;
        self.truncate = true;
        self
    }

    fn validate(&self) -> Result<()> {
        if self.grid.is_empty() {
            return Err(Error::Config("parameter grid is empty".into()));
        }
        if self.n_sims == 0 {
            return Err(Error::Config("n_sims must be at least 1".into()));
        }
        if self.method != PowerMethod::Asymptotic && self.n_perms == 0 {
            return Err(Error::Config("n_perms must be at least 1".into()));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::Config(format!("alpha must lie in (0, 1), got {}", self.alpha)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PowerCell {
    pub b: f64,
    pub p1: f64,
    pub p2: f64,
    pub cpi: f64,
    pub sar1: f64,
    pub sar2: f64,
    pub local_r: f64,
    pub power: f64,
    pub mc_stderr: f64,
    pub mean_n_index: f64,
    pub mean_n_total: f64,
    pub n_sims: usize,
    pub n_perms: usize,
    pub alpha: f64,
    pub method: PowerMethod,
    /// Runs whose test errored; excluded from `power`.
    #[serde(skip)]
    pub failed_runs: usize,
}

impl PowerCell {
    /// `p1 = p2 = 0`: the rejection rate estimates the type I error.
    pub fn is_type_one(&self) -> bool {
        self.p1 == 0.0 && self.p2 == 0.0
    }
}

pub const CSV_COLUMNS: [&str; 15] = [
    "b", "p1", "p2", "cpi", "sar1", "sar2", "local_r", "power", "mc_stderr", "mean_n_index", "mean_n_total", "n_sims",
    "n_perms", "alpha", "method",
];

struct Run {
    n_index: usize,
    n_total: usize,
    rejected: Option<bool>,
}

/// Cells in grid order. `progress(done, total)` fires after each cell.
pub fn power_study<F>(study: &PowerStudy, progress: F) -> Result<Vec<PowerCell>>
where
    F: Fn(usize, usize),
{
    study.validate()?;
    let total = study.grid.len();
    let mut cells = Vec::with_capacity(total);
    for (index, params) in study.grid.iter().enumerate() {
        cells.push(power_cell(study, index as u64, params)?);
        progress(index + 1, total);
    }
    Ok(cells)
}

fn power_cell(study: &PowerStudy, cell: u64, params: &TransmissionParams) -> Result<PowerCell> {
    let runs: Vec<Run> = (0..study.n_sims as u64)
        .into_par_iter()
        .map(|k| one_run(study, cell, k, params))
        .collect::<Result<_>>()?;
    let tested: Vec<bool> = runs.iter().filter_map(|r| r.rejected).collect();
    let failed_runs = runs.len() - tested.len();
    let power = if tested.is_empty() {
        f64::NAN
    } else {
        tested.iter().filter(|&&r| r).count() as f64 / tested.len() as f64
    };
    let n = runs.len() as f64;
    let derived = DerivedMeasures::new(params, study.sim.exposure_days, &study.sim.infectious, &study.population);
    Ok(PowerCell {
        b: params.b,
        p1: params.p1,
        p2: params.p2,
        cpi: derived.cpi,
        sar1: derived.sar1,
        sar2: derived.sar2,
        local_r: derived.local_r,
        power,
        mc_stderr: (power * (1.0 - power) / tested.len().max(1) as f64).sqrt(),
        mean_n_index: runs.iter().map(|r| r.n_index as f64).sum::<f64>() / n,
        mean_n_total: runs.iter().map(|r| r.n_total as f64).sum::<f64>() / n,
        n_sims: study.n_sims,
        n_perms: if study.method == PowerMethod::Asymptotic { 0 } else { study.n_perms },
        alpha: study.alpha,
        method: study.method,
        failed_runs,
    })
}

fn one_run(study: &PowerStudy, cell: u64, run: u64, params: &TransmissionParams) -> Result<Run> {
    let mut rng = stream(study.seed, &[cell, run, 0]);
    let outcome = simulate_epidemic(&study.population, &study.sim, params, &mut rng)?;
    let test_seed = derive_seed(derive_seed(derive_seed(study.seed, cell), run), 1);
    let result = match study.method {
        PowerMethod::Asymptotic => asymptotic_test(&outcome.outbreak),
        PowerMethod::Simple | PowerMethod::Refined => {
            let data = if study.truncate { truncate_to_exposure(&outcome.outbreak) } else { outcome.outbreak.clone() };
            let method = if study.method == PowerMethod::Simple { ResampleMethod::Simple } else { ResampleMethod::Refined };
            let mut options = PermutationOptions::new(method, study.n_perms, test_seed).with_alternative(study.alternative);
            options.add_one = study.add_one;
            permutation_test(&data, &options)
        }
    };
    Ok(Run {
        n_index: outcome.n_index,
        n_total: outcome.n_total,
        rejected: result.ok().map(|r| r.p_value <= study.alpha),
    })
}

pub fn write_power_csv<W: Write>(cells: &[PowerCell], out: W) -> Result<()> {
    let mut writer = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
    writer.write_record(CSV_COLUMNS)?;
    for c in cells {
        writer.write_record([
            c.b.to_string(),
            c.p1.to_string(),
            c.p2.to_string(),
            c.cpi.to_string(),
            c.sar1.to_string(),
            c.sar2.to_string(),
            c.local_r.to_string(),
            c.power.to_string(),
            c.mc_stderr.to_string(),
            c.mean_n_index.to_string(),
            c.mean_n_total.to_string(),
            c.n_sims.to_string(),
            c.n_perms.to_string(),
            c.alpha.to_string(),
            c.method.as_str().to_string(),
        ])?;
    }
    writer.flush()?;
    Ok(())
}

/// Empirical complementary log-log power curve in the mean numbers of index
/// cases and total cases, fitted to the 100-household, 30-day setting.
pub fn eval_power_formula(n_index: f64, n_total: f64) -> Result<f64> {
    if !(n_index > 0.0) {
        return Err(Error::Invalid(format!("n_index must be positive, got {n_index}")));
    }
    if !(n_total >= n_index) {
        return Err(Error::Invalid(format!("n_total ({n_total}) must be at least n_index ({n_index})")));
    }
    let eta = 1.29 + 0.75 * n_index - 0.55 * n_total - 1.40 * n_index.ln();
    Ok((-eta.exp()).exp())
}
