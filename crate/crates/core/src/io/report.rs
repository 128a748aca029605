use serde::Serialize;

use crate::likelihood::{Alternative, FitResult};
use crate::model::{Day, DerivedMeasures, Outbreak, PeriodDistribution, TransmissionParams};
use crate::resampling::{Admissibility, TestMethod, TestResult};

/// Bumped whenever a report field is renamed, removed or changes meaning.
pub const SCHEMA_VERSION: &str = "1.0";

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DistributionEcho {
    pub min_days: Day,
    pub max_days: Day,
    pub pmf: Vec<f64>,
}

impl From<&PeriodDistribution> for DistributionEcho {
    fn from(d: &PeriodDistribution) -> Self {
        Self { min_days: d.min_days(), max_days: d.max_days(), pmf: d.probabilities().to_vec() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FitEcho {
    pub b: f64,
    pub p1: f64,
    pub p2: f64,
    pub log_lik: Option<f64>,
    pub converged: bool,
}

impl From<&FitResult> for FitEcho {
    fn from(f: &FitResult) -> Self {
        Self {
            b: f.params.b,
            p1: f.params.p1,
            p2: f.params.p2,
            log_lik: f.log_lik.is_finite().then_some(f.log_lik),
            converged: f.converged,
        }
    }
}

/// Every setting that influenced the result, worker count excluded.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TestConfigEcho {
    pub input: String,
    pub method: String,
    pub model: Alternative,
    pub permutations: usize,
    pub exposure_days: Day,
    pub horizon: Day,
    pub latent: DistributionEcho,
    pub infectious: DistributionEcho,
    pub censor_full_horizon: bool,
    pub truncate_at_s: bool,
    pub alpha: f64,
    pub addone_pvalue: bool,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TestReport {
    pub schema_version: &'static str,
    pub lambda: Option<f64>,
    pub p_value: f64,
    pub reject: bool,
    pub method: TestMethod,
    pub admissibility: Admissibility,
    pub replicates: usize,
    pub exceedances: usize,
    pub failed_replicates: usize,
    pub seed: u64,
    pub n_persons: usize,
    pub n_households: usize,
    pub n_cases: usize,
    pub null_mle: Option<FitEcho>,
    pub mle: Option<FitEcho>,
    /// Closed-form measures at the unrestricted estimates.
    pub derived: Option<DerivedMeasures>,
    pub config: TestConfigEcho,
}

impl TestReport {
    pub fn new(result: &TestResult, outbreak: &Outbreak, config: TestConfigEcho) -> Self {
        let derived = result.full_fit.as_ref().map(|f| {
            DerivedMeasures::new(
                &f.params,
                outbreak.config().exposure_days,
                &outbreak.config().infectious,
                outbreak.population(),
            )
        });
        Self {
            schema_version: SCHEMA_VERSION,
            lambda: result.lambda_obs,
            p_value: result.p_value,
            reject: result.p_value <= config.alpha,
            method: result.method,
            admissibility: result.admissibility,
            replicates: result.replicates,
            exceedances: result.exceedances,
            failed_replicates: result.failed_replicates,
            seed: result.seed,
            n_persons: outbreak.len(),
            n_households: outbreak.population().num_households(),
            n_cases: outbreak.num_cases(),
            null_mle: result.null_fit.as_ref().map(FitEcho::from),
            mle: result.full_fit.as_ref().map(FitEcho::from),
            derived,
            config,
        }
    }
}

/// Sidecar describing how a simulated line list was generated.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimulationTruth {
    pub schema_version: &'static str,
    pub run: u64,
    pub seed: u64,
    pub params: TransmissionParams,
    pub derived: DerivedMeasures,
    pub n_index: usize,
    pub n_total: usize,
    pub affected_households: usize,
    pub exhaustion_day: Day,
    pub exposure_days: Day,
    pub horizon: Day,
    pub households: usize,
    pub household_size: usize,
    pub latent: DistributionEcho,
    pub infectious: DistributionEcho,
}
