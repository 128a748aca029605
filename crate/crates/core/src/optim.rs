//! Derivative-free minimizers used by the likelihood fits.

#[derive(Debug, Clone)]
pub struct Minimum {
    pub x: Vec<f64>,
    pub f: f64,
    pub evals: usize,
    pub converged: bool,
}

#[derive(Debug, Clone, Copy)]
pub struct NelderMeadOptions {
    /// Stop once the spread of objective values across the simplex drops below this.
    pub f_tol: f64,
    pub max_evals: usize,
}

impl Default for NelderMeadOptions {
    fn default() -> Self {
        Self { f_tol: 1e-8, max_evals: 4000 }
    }
}

/// Unconstrained Nelder-Mead simplex search. `f` may return `+inf` for
/// infeasible points; those vertices are simply never accepted as improvements.
pub fn nelder_mead<F>(mut f: F, x0: &[f64], step: f64, opts: NelderMeadOptions) -> Minimum
where
    F: FnMut(&[f64]) -> f64,
{
    const REFLECT: f64 = 1.0;
    const EXPAND: f64 = 2.0;
    const CONTRACT: f64 = 0.5;
    const SHRINK: f64 = 0.5;

    let n = x0.len();
    let mut simplex: Vec<Vec<f64>> = Vec::with_capacity(n + 1);
    simplex.push(x0.to_vec());
    for i in 0..n {
        let mut v = x0.to_vec();
        v[i] += step;
        simplex.push(v);
    }
    let mut values: Vec<f64> = simplex.iter().map(|v| f(v)).collect();
    let mut evals = n + 1;
    let mut order: Vec<usize> = (0..=n).collect();
    let mut centroid = vec![0.0; n];
    let mut trial = vec![0.0; n];
    let mut trial2 = vec![0.0; n];
    let mut converged = false;

    loop {
        order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
        let best = order[0];
        let worst = order[n];
        let second_worst = order[n.saturating_sub(1)];

        let spread = values[worst] - values[best];
        if spread.is_finite() && spread <= opts.f_tol {
            converged = true;
            break;
        }
        if evals >= opts.max_evals {
            break;
        }

        centroid.iter_mut().for_each(|c| *c = 0.0);
        for &k in &order[..n] {
            for (c, x) in centroid.iter_mut().zip(&simplex[k]) {
                *c += x / n as f64;
            }
        }

        for j in 0..n {
            trial[j] = centroid[j] + REFLECT * (centroid[j] - simplex[worst][j]);
        }
        let f_reflect = f(&trial);
        evals += 1;

        if f_reflect < values[best] {
            for j in 0..n {
                trial2[j] = centroid[j] + EXPAND * (trial[j] - centroid[j]);
            }
            let f_expand = f(&trial2);
            evals += 1;
            if f_expand < f_reflect {
                simplex[worst].copy_from_slice(&trial2);
                values[worst] = f_expand;
            } else {
                simplex[worst].copy_from_slice(&trial);
                values[worst] = f_reflect;
            }
            continue;
        }
        if f_reflect < values[second_worst] {
            simplex[worst].copy_from_slice(&trial);
            values[worst] = f_reflect;
            continue;
        }

        // contraction, outside if the reflection helped at all
        let outside = f_reflect < values[worst];
        for j in 0..n {
            trial2[j] = if outside {
                centroid[j] + CONTRACT * (trial[j] - centroid[j])
            } else {
                centroid[j] + CONTRACT * (simplex[worst][j] - centroid[j])
            };
        }
        let f_contract = f(&trial2);
        evals += 1;
        let threshold = if outside { f_reflect } else { values[worst] };
        if f_contract < threshold {
            simplex[worst].copy_from_slice(&trial2);
            values[worst] = f_contract;
            continue;
        }

        let anchor = simplex[best].clone();
        for &k in &order[1..] {
            for j in 0..n {
                simplex[k][j] = anchor[j] + SHRINK * (simplex[k][j] - anchor[j]);
            }
            values[k] = f(&simplex[k]);
            evals += 1;
        }
    }

    let best = (0..=n).min_by(|&a, &b| values[a].total_cmp(&values[b])).unwrap();
    Minimum { x: simplex[best].clone(), f: values[best], evals, converged }
}

/// Bounded scalar minimization on `[lo, hi]` by Brent's method
/// (golden section with parabolic steps).
pub fn brent_bounded<F>(mut f: F, lo: f64, hi: f64, x_tol: f64, max_iter: usize) -> Minimum
where
    F: FnMut(f64) -> f64,
{
    const GOLDEN: f64 = 0.381_966_011_250_105_1;
    let (mut a, mut b) = (lo, hi);
    let mut x = a + GOLDEN * (b - a);
    let (mut w, mut v) = (x, x);
    let mut fx = f(x);
    let (mut fw, mut fv) = (fx, fx);
    let mut d: f64 = 0.0;
    let mut e: f64 = 0.0;
    let mut evals = 1;
    let mut converged = false;

    for _ in 0..max_iter {
        let mid = 0.5 * (a + b);
        let tol1 = 1e-12 * x.abs() + x_tol / 3.0;
        let tol2 = 2.0 * tol1;
        if (x - mid).abs() <= tol2 - 0.5 * (b - a) {
            converged = true;
            break;
        }
        let mut golden = true;
        if e.abs() > tol1 {
            let r = (x - w) * (fx - fv);
            let mut q = (x - v) * (fx - fw);
            let mut p = (x - v) * q - (x - w) * r;
            q = 2.0 * (q - r);
            if q > 0.0 {
                p = -p;
            }
            q = q.abs();
            let e_prev = e;
            e = d;
            if p.is_finite()
                && q.is_finite()
                && p.abs() < (0.5 * q * e_prev).abs()
                && p > q * (a - x)
                && p < q * (b - x)
            {
                d = p / q;
                let u = x + d;
                if u - a < tol2 || b - u < tol2 {
                    d = if mid >= x { tol1 } else { -tol1 };
                }
                golden = false;
            }
        }
        if golden {
            e = if x >= mid { a - x } else { b - x };
            d = GOLDEN * e;
        }
        let u = if d.abs() >= tol1 { x + d } else if d > 0.0 { x + tol1 } else { x - tol1 };
        let fu = f(u);
        evals += 1;

        if fu <= fx {
            if u >= x {
                a = x;
            } else {
                b = x;
            }
            v = w;
            fv = fw;
            w = x;
            fw = fx;
            x = u;
            fx = fu;
        } else {
            if u < x {
                a = u;
            } else {
                b = u;
            }
            if fu <= fw || w == x {
                v = w;
                fv = fw;
                w = u;
                fw = fu;
            } else if fu <= fv || v == x || v == w {
                v = u;
                fv = fu;
            }
        }
    }
    Minimum { x: vec![x], f: fx, evals, converged }
}
