use serde::{Deserialize, Serialize};

use super::LogLikelihood;
use crate::error::{Error, Result};
use crate::model::{Outbreak, TransmissionParams, PARAM_EPSILON};
use crate::optim::{brent_bounded, nelder_mead, NelderMeadOptions};

/// Which transmission routes the unrestricted model may use.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Alternative {
    /// `(b, p1, p2)` all free.
    #[default]
    Full,
    /// `(b, p1)` free, `p2` fixed at 0.
    HouseholdOnly,
}

impl Alternative {
    fn free_transmission(self) -> &'static [usize] {
        match self {
            Alternative::Full => &[1, 2],
            Alternative::HouseholdOnly => &[1],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FitResult {
    pub params: TransmissionParams,
    pub log_lik: f64,
    pub converged: bool,
    pub n_evals: usize,
    /// `(b, p1, p2)` sitting on the lower or upper edge of the box.
    pub at_boundary: [bool; 3],
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Lrt {
    pub lambda: f64,
    pub null: FitResult,
    pub full: FitResult,
}

const UPPER: f64 = 1.0 - PARAM_EPSILON;
const B_TOL: f64 = 1e-10;
const LOG_LIK_TOL: f64 = 1e-8;
/// Differences in log-likelihood below this are optimizer noise.
const LAMBDA_NOISE: f64 = 1e-6;
const STARTS: [f64; 3] = [1e-4, 1e-2, 1e-1];

fn boundary_flags(p: &TransmissionParams) -> [bool; 3] {
    p.as_array().map(|v| v <= 0.0 || v >= UPPER)
}

fn to_unit(x: f64) -> f64 {
    UPPER / (1.0 + (-x).exp())
}

fn from_unit(p: f64) -> f64 {
    let q = (p / UPPER).clamp(1e-300, 1.0 - 1e-16);
    (q / (1.0 - q)).ln()
}

impl LogLikelihood {
    /// Maximize over `b` with `p1 = p2 = 0`.
    pub fn fit_null(&self) -> FitResult {
        let f = |b: f64| self.eval(&TransmissionParams::null(b));
        if self.num_cases() == 0 {
            let params = TransmissionParams::null(0.0);
            return FitResult {
                params,
                log_lik: f(0.0),
                converged: true,
                n_evals: 1,
                at_boundary: boundary_flags(&params),
            };
        }

        // coarse scan on the logit scale to bracket the mode, then Brent
        let mut grid: Vec<f64> = (-40..=40).map(|k| to_unit(k as f64 * 0.5)).collect();
        grid.insert(0, 0.0);
        grid.push(UPPER);
        let values: Vec<f64> = grid.iter().map(|&b| f(b)).collect();
        let mut evals = values.len();
        let best = (0..grid.len())
            .max_by(|&a, &b| values[a].total_cmp(&values[b]))
            .unwrap();
        if values[best] == f64::NEG_INFINITY {
            return FitResult {
                params: TransmissionParams::null(grid[best]),
                log_lik: f64::NEG_INFINITY,
                converged: false,
                n_evals: evals,
                at_boundary: [false; 3],
            };
        }
        let lo = grid[best.saturating_sub(1)];
        let hi = grid[(best + 1).min(grid.len() - 1)];
        let m = brent_bounded(|b| -f(b), lo, hi, B_TOL, 200);
        evals += m.evals;
        let (b, log_lik) = if -m.f >= values[best] { (m.x[0], -m.f) } else { (grid[best], values[best]) };
        let params = TransmissionParams::null(b);
        FitResult { params, log_lik, converged: m.converged, n_evals: evals, at_boundary: boundary_flags(&params) }
    }

    /// Maximize over the free parameters of `alternative`. `null` seeds one
    /// of the starts and is kept as a candidate, so the result never falls
    /// below the null supremum.
    pub fn fit_full(&self, alternative: Alternative, null: Option<&FitResult>) -> FitResult {
        let free = alternative.free_transmission();
        let dims = 1 + free.len();
        let unpack = |x: &[f64]| {
            let mut p = [0.0; 3];
            p[0] = to_unit(x[0]);
            for (slot, &idx) in free.iter().enumerate() {
                p[idx] = to_unit(x[1 + slot]);
            }
            TransmissionParams { b: p[0], p1: p[1], p2: p[2] }
        };
        let objective = |x: &[f64]| {
            let v = self.eval(&unpack(x));
            if v.is_nan() {
                f64::INFINITY
            } else {
                -v
            }
        };

        let mut starts: Vec<Vec<f64>> = STARTS.iter().map(|&s| vec![from_unit(s); dims]).collect();
        if let Some(n) = null.filter(|n| n.log_lik.is_finite()) {
            let mut x = vec![from_unit(1e-3); dims];
            x[0] = from_unit(n.params.b.max(1e-12));
            starts.push(x);
        }

        let opts = NelderMeadOptions { f_tol: LOG_LIK_TOL, max_evals: 3000 };
        let mut evals = 0;
        let mut best: Option<(Vec<f64>, f64)> = None;
        let mut converged = false;
        for x0 in &starts {
            let first = nelder_mead(objective, x0, 1.0, opts);
            // restart once from the end point to shake off a collapsed simplex
            let polished = nelder_mead(objective, &first.x, 0.5, opts);
            evals += first.evals + polished.evals;
            let (x, f, ok) = if polished.f <= first.f {
                (polished.x, polished.f, polished.converged)
            } else {
                (first.x, first.f, first.converged)
            };
            if best.as_ref().is_none_or(|(_, bf)| f < *bf) {
                best = Some((x, f));
                converged = ok;
            }
        }
        let (x, f) = best.expect("at least one start");
        let mut params = unpack(&x);
        let mut log_lik = -f;

        // transmission estimates that sit numerically on zero are put exactly there
        for &idx in free {
            let mut trial = params;
            match idx {
                1 => trial.p1 = 0.0,
                _ => trial.p2 = 0.0,
            }
            let v = self.eval(&trial);
            evals += 1;
            if v >= log_lik - 1e-9 {
                params = trial;
                log_lik = v.max(log_lik);
            }
        }

        if let Some(n) = null {
            if n.log_lik > log_lik {
                params = n.params;
                log_lik = n.log_lik;
            }
        }

        FitResult {
            params,
            log_lik,
            converged: converged && log_lik.is_finite(),
            n_evals: evals,
            at_boundary: boundary_flags(&params),
        }
    }

    pub fn lrt(&self, alternative: Alternative) -> Result<Lrt> {
        let null = self.fit_null();
        if !null.log_lik.is_finite() {
            return Err(Error::NullInadmissible);
        }
        let full = self.fit_full(alternative, Some(&null));
        if !full.log_lik.is_finite() {
            return Err(Error::FitFailed("unrestricted likelihood is zero everywhere".into()));
        }
        Ok(Lrt { lambda: lambda(null.log_lik, full.log_lik), null, full })
    }
}

/// `-2 (log L0 - log L)`, with optimizer noise around zero clamped away.
pub(crate) fn lambda(null: f64, full: f64) -> f64 {
    let l = 2.0 * (full - null);
    if l.abs() < LAMBDA_NOISE {
        0.0
    } else {
        l.max(0.0)
    }
}

pub fn mle_null(outbreak: &Outbreak) -> Result<FitResult> {
    let fit = LogLikelihood::new(outbreak).fit_null();
    if fit.log_lik.is_finite() {
        Ok(fit)
    } else {
        Err(Error::NullInadmissible)
    }
}

pub fn mle_full(outbreak: &Outbreak, alternative: Alternative) -> Result<FitResult> {
    let ll = LogLikelihood::new(outbreak);
    let null = ll.fit_null();
    let fit = ll.fit_full(alternative, null.log_lik.is_finite().then_some(&null));
    if fit.log_lik.is_finite() {
        Ok(fit)
    } else {
        Err(Error::FitFailed("unrestricted likelihood is zero everywhere".into()))
    }
}

pub fn lrt_statistic(outbreak: &Outbreak, alternative: Alternative) -> Result<Lrt> {
    LogLikelihood::new(outbreak).lrt(alternative)
}
