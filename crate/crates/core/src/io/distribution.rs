use crate::error::{Error, Result};
use crate::model::{Day, PeriodDistribution};

/// Parse `MIN:MAX` (uniform) or `MIN:MAX:w1,w2,...` (one weight per day).
pub fn parse_distribution(spec: &str) -> Result<PeriodDistribution> {
    let bad = |why: &str| Error::Distribution(format!("`{spec}`: {why}"));
    let mut parts = spec.trim().splitn(3, ':');
    let day = |s: Option<&str>| -> Result<Day> {
        s.ok_or_else(|| bad("expected MIN:MAX[:weights]"))?
            .trim()
            .parse()
            .map_err(|_| bad("bounds must be non-negative integers"))
    };
    let min = day(parts.next())?;
    let max = day(parts.next())?;
    match parts.next() {
        None => PeriodDistribution::uniform(min, max),
        Some(weights) => {
            let pmf = weights
                .split(',')
                .map(|w| w.trim().parse::<f64>().map_err(|_| bad("weights must be numbers")))
                .collect::<Result<Vec<_>>>()?;
            PeriodDistribution::new(min, max, pmf)
        }
    }
}

/// Inverse of [`parse_distribution`]; weights are written out in full.
pub fn format_distribution(dist: &PeriodDistribution) -> String {
    let weights: Vec<String> = dist.probabilities().iter().map(|p| p.to_string()).collect();
    format!("{}:{}:{}", dist.min_days(), dist.max_days(), weights.join(","))
}
