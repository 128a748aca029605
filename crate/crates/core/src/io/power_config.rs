use std::sync::Arc;

use crate::error::{Error, Result};
use crate::model::{Day, PeriodDistribution, Population, TransmissionParams};
use crate::power::{PowerMethod, PowerStudy};
use crate::simulator::SimConfig;

use super::parse_distribution;

/// A power grid read from `key = value` lines. `#` starts a comment; list
/// values are comma-separated and the grid is their cartesian product.
///
/// ```text
/// households = 100
/// household_size = 5
/// s_days = 30
/// latent = 1:3
/// infectious = 3:5
/// b = 0.001, 0.002
/// p1 = 0, 0.006
/// p2 = 0.00005
/// n_sims = 400
/// n_perms = 500
/// alpha = 0.05
/// method = refined
/// seed = 1
/// ```
#[derive(Debug, Clone, PartialEq)]
pub struct PowerConfig {
    pub households: usize,
    pub household_size: usize,
    pub s_days: Day,
    pub latent: PeriodDistribution,
    pub infectious: PeriodDistribution,
    pub b: Vec<f64>,
    pub p1: Vec<f64>,
    pub p2: Vec<f64>,
    pub n_sims: usize,
    pub n_perms: usize,
    pub alpha: f64,
    pub method: PowerMethod,
    /// `household` fixes `p2 = 0` and truncates at `S`.
    pub two_parameter: bool,
    pub add_one: bool,
    pub seed: u64,
    pub workers: Option<usize>,
}

impl Default for PowerConfig {
    fn default() -> Self {
        Self {
            households: 100,
            household_size: 5,
            s_days: 30,
            latent: PeriodDistribution::uniform(1, 3).expect("valid"),
            infectious: PeriodDistribution::uniform(3, 5).expect("valid"),
            b: Vec::new(),
            p1: vec![0.0],
            p2: vec![0.0],
            n_sims: 2000,
            n_perms: 2000,
            alpha: 0.05,
            method: PowerMethod::Refined,
            two_parameter: false,
            add_one: false,
            seed: 0,
            workers: None,
        }
    }
}

fn parse_num<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
    value.trim().parse().map_err(|_| Error::Config(format!("`{key}`: cannot parse `{value}`")))
}

fn parse_list(key: &str, value: &str) -> Result<Vec<f64>> {
    value.split(',').map(|v| parse_num(key, v)).collect()
}

fn parse_bool(key: &str, value: &str) -> Result<bool> {
    match value.trim() {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        other => Err(Error::Config(format!("`{key}`: expected true or false, found `{other}`"))),
    }
}

impl PowerConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let mut config = Self::default();
        for (number, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected key = value", number + 1)))?;
            config.set(key.trim(), value.trim())?;
        }
        Ok(config)
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        match key {
            "households" => self.households = parse_num(key, value)?,
            "household_size" => self.household_size = parse_num(key, value)?,
            "s_days" => self.s_days = parse_num(key, value)?,
            "latent" => self.latent = parse_distribution(value)?,
            "infectious" => self.infectious = parse_distribution(value)?,
            "b" => self.b = parse_list(key, value)?,
            "p1" => self.p1 = parse_list(key, value)?,
            "p2" => self.p2 = parse_list(key, value)?,
            "n_sims" => self.n_sims = parse_num(key, value)?,
            "n_perms" => self.n_perms = parse_num(key, value)?,
            "alpha" => self.alpha = parse_num(key, value)?,
            "method" => self.method = value.parse()?,
            "model" => {
                self.two_parameter = match value {
                    "full" => false,
                    "household" => true,
                    other => return Err(Error::Config(format!("`model`: expected full or household, found `{other}`"))),
                }
            }
            "addone_pvalue" => self.add_one = parse_bool(key, value)?,
            "seed" => self.seed = parse_num(key, value)?,
            "workers" => self.workers = Some(parse_num(key, value)?),
            other => return Err(Error::Config(format!("unknown key `{other}`"))),
        }
        Ok(())
    }

    pub fn grid(&self) -> Result<Vec<TransmissionParams>> {
        let mut grid = Vec::new();
        for &b in &self.b {
            for &p1 in &self.p1 {
                for &p2 in &self.p2 {
                    grid.push(TransmissionParams::new(b, p1, p2)?);
                }
            }
        }
        if grid.is_empty() {
            return Err(Error::Config("parameter grid is empty".into()));
        }
        Ok(grid)
    }

    pub fn study(&self) -> Result<PowerStudy> {
        if self.two_parameter && self.p2.iter().any(|&p| p != 0.0) {
            return Err(Error::Config("the household model requires p2 = 0".into()));
        }
        let population = Arc::new(Population::uniform(self.households, self.household_size)?);
        let sim = SimConfig::new(self.s_days, self.latent.clone(), self.infectious.clone());
        let mut study = PowerStudy::new(population, sim, self.grid()?, self.method);
        if self.two_parameter {
            study = study.two_parameter();
        }
        study.n_sims = self.n_sims;
        study.n_perms = self.n_perms;
        study.alpha = self.alpha;
        study.add_one = self.add_one;
        study.seed = self.seed;
        Ok(study)
    }
}
