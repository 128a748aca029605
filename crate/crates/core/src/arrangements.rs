//! Exact counting and uniform sampling of bounded compositions: ordered
//! placements of `n` indistinguishable balls into `m` labelled boxes holding
//! at most `v` balls each.
//!
//! `W(n, m, v) = sum_{k=0}^{min(n, v)} W(n - k, m - 1, v)` with
//! `W(0, m, v) = 1`, `W(n > 0, 0, v) = 0` and `W(n, 1, v) = [n <= v]`.

use num_bigint::BigUint;
use num_traits::{One, ToPrimitive, Zero};
use rand::{Rng, RngCore};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ArrangementSpec {
    /// Total number of balls `n`.
    pub balls: u64,
    /// Number of boxes `m`.
    pub boxes: usize,
    /// Capacity `v` of every box.
    pub capacity: u64,
}

impl ArrangementSpec {
    pub fn new(balls: u64, boxes: usize, capacity: u64) -> Self {
        Self { balls, boxes, capacity }
    }

    pub fn is_feasible(&self) -> bool {
        (self.boxes as u128) * (self.capacity as u128) >= self.balls as u128
    }

    fn infeasible(&self) -> Error {
        Error::InfeasibleArrangement { balls: self.balls, boxes: self.boxes, capacity: self.capacity }
    }
}

/// `W(n', j, v)` for every `n' <= n` and `j <= m`, built bottom-up.
#[derive(Debug, Clone)]
pub struct ArrangementTable {
    spec: ArrangementSpec,
    /// `counts[j][n']`
    counts: Vec<Vec<BigUint>>,
}

impl ArrangementTable {
    pub fn new(spec: ArrangementSpec) -> Self {
        let n = spec.balls as usize;
        let v = spec.capacity as usize;
        let mut counts: Vec<Vec<BigUint>> = Vec::with_capacity(spec.boxes + 1);
        let mut empty = vec![BigUint::zero(); n + 1];
        empty[0] = BigUint::one();
        counts.push(empty);
        for j in 1..=spec.boxes {
            let prev = &counts[j - 1];
            let mut row = Vec::with_capacity(n + 1);
            if j == 1 {
                row.extend((0..=n).map(|k| if k <= v { BigUint::one() } else { BigUint::zero() }));
            } else {
                // running window sum over prev[k - v ..= k]
                let mut window = BigUint::zero();
                for k in 0..=n {
                    window += &prev[k];
                    if k > v {
                        window -= &prev[k - v - 1];
                    }
                    row.push(window.clone());
                }
            }
            counts.push(row);
        }
        Self { spec, counts }
    }

    pub fn spec(&self) -> ArrangementSpec {
        self.spec
    }

    /// `W(balls, boxes, v)` for `balls <= spec.balls`, `boxes <= spec.boxes`.
    pub fn count(&self, balls: u64, boxes: usize) -> &BigUint {
        &self.counts[boxes][balls as usize]
    }

    pub fn total(&self) -> &BigUint {
        self.count(self.spec.balls, self.spec.boxes)
    }

    /// Draw one arrangement uniformly: box by box, choose its content `k`
    /// with weight `W(remaining - k, boxes_left, v)`; the last box takes
    /// whatever remains.
    pub fn sample<R: RngCore + ?Sized>(&self, rng: &mut R) -> Result<Vec<u64>> {
        let ArrangementSpec { balls, boxes, capacity } = self.spec;
        if self.total().is_zero() {
            return Err(self.spec.infeasible());
        }
        let mut out = Vec::with_capacity(boxes);
        let mut remaining = balls;
        for i in 0..boxes.saturating_sub(1) {
            let boxes_left = boxes - i - 1;
            let total = self.count(remaining, boxes_left + 1);
            let mut r = uniform_below(total, rng);
            let top = remaining.min(capacity);
            let mut chosen = top;
            for k in 0..=top {
                let w = self.count(remaining - k, boxes_left);
                if r < *w {
                    chosen = k;
                    break;
                }
                r -= w;
            }
            out.push(chosen);
            remaining -= chosen;
        }
        if boxes > 0 {
            debug_assert!(remaining <= capacity);
            out.push(remaining);
        }
        Ok(out)
    }
}

pub fn count_arrangements(spec: ArrangementSpec) -> BigUint {
    ArrangementTable::new(spec).total().clone()
}

pub fn sample_arrangement<R: RngCore + ?Sized>(spec: ArrangementSpec, rng: &mut R) -> Result<Vec<u64>> {
    if !spec.is_feasible() {
        return Err(spec.infeasible());
    }
    ArrangementTable::new(spec).sample(rng)
}

/// Uniform integer in `[0, bound)`, by rejection on the bit length.
pub(crate) fn uniform_below<R: RngCore + ?Sized>(bound: &BigUint, rng: &mut R) -> BigUint {
    assert!(!bound.is_zero(), "empty range");
    if let Some(b) = bound.to_u64() {
        return BigUint::from(rng.random_range(0..b));
    }
    let bits = bound.bits();
    let digits = bits.div_ceil(32) as usize;
    let top_bits = bits - 32 * (digits as u64 - 1);
    let mask = if top_bits == 32 { u32::MAX } else { (1u32 << top_bits) - 1 };
    loop {
        let mut words: Vec<u32> = (0..digits).map(|_| rng.next_u32()).collect();
        words[digits - 1] &= mask;
        let candidate = BigUint::new(words);
        if candidate < *bound {
            return candidate;
        }
    }
}
