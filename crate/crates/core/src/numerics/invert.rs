//! Generalized inverse of a monotone CDF by safeguarded root finding.

use crate::error::{Error, Result};

/// Target accuracy `|cdf(x) - u|` of [`invert_cdf`].
pub const INVERT_TOL: f64 = 1e-12;

const MAX_ITER: usize = 400;

/// Smallest `x` in `[lo, hi]` with `cdf(x) >= u`, up to [`INVERT_TOL`].
///
/// Regula falsi (Illinois variant) with a bisection fallback, followed by a
/// left-edge search when the CDF is flat around the solution.
pub fn invert_cdf<F>(cdf: F, u: f64, lo: f64, hi: f64) -> Result<f64>
where
    F: Fn(f64) -> f64,
{
    invert_cdf_tol(cdf, u, lo, hi, INVERT_TOL)
}

pub fn invert_cdf_tol<F>(cdf: F, u: f64, lo: f64, hi: f64, tol: f64) -> Result<f64>
where
    F: Fn(f64) -> f64,
{
    if !(u > 0.0 && u < 1.0) {
        return Err(Error::Domain(format!("probability {u} not in (0, 1)")));
    }
    if !(lo < hi) {
        return Err(Error::Bracket { u, lo, hi });
    }
    let g = |x: f64| cdf(x) - u;
    let (mut a, mut b) = (lo, hi);
    let (mut ga, mut gb) = (g(a), g(b));
    if ga > tol || gb < -tol || ga.is_nan() || gb.is_nan() {
        return Err(Error::Bracket { u, lo, hi });
    }
    if gb.abs() <= tol && ga < -tol {
        // fall through to the search: the left edge may still be further left
    } else if ga.abs() <= tol {
        return Ok(a);
    }

    let width0 = b - a;
    let mut side = 0i8;
    let mut x = 0.5 * (a + b);
    let mut found = false;
    for it in 0..MAX_ITER {
        // secant step, except every third iteration or when it leaves the bracket
        let mut cand = if it % 3 == 2 || gb == ga {
            0.5 * (a + b)
        } else {
            b - gb * (b - a) / (gb - ga)
        };
        if !(cand > a && cand < b) {
            cand = 0.5 * (a + b);
        }
        if cand <= a || cand >= b {
            // a and b are adjacent floats
            x = b;
            found = true;
            break;
        }
        x = cand;
        let gx = g(x);
        if gx.abs() <= tol {
            found = true;
            break;
        }
        if gx < 0.0 {
            a = x;
            ga = gx;
            if side == -1 {
                gb *= 0.5;
            }
            side = -1;
        } else {
            b = x;
            gb = gx;
            if side == 1 {
                ga *= 0.5;
            }
            side = 1;
        }
    }
    if !found {
        x = b;
    }

    // Flat stretch: walk to its left edge so ties resolve to the smallest x.
    let probe = x - 1e-9 * width0;
    if probe > a && g(probe).abs() <= tol {
        let (mut l, mut r) = (a, x);
        for _ in 0..200 {
            let m = 0.5 * (l + r);
            if m <= l || m >= r {
                break;
            }
            if g(m) >= -tol {
                r = m;
            } else {
                l = m;
            }
        }
        x = r;
    }
    Ok(x)
}
