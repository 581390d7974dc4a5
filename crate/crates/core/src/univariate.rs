//! Univariate laws consumed by the dependency models: sampling, CDF and
//! generalized-inverse quantile for each.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use rand_distr::{Distribution, Gamma, StandardNormal, StudentT};

use crate::error::{invalid, Error, Result};
use crate::numerics::special::{
    reg_inc_beta, reg_inc_gamma_lower, reg_inc_gamma_upper, std_normal_cdf, std_normal_quantile,
};
use crate::numerics::{invert_cdf, RngStream};

/// A univariate law.
///
/// The composite variants (`Signed`, `Affine`, `QuantileMap`) describe the
/// pivot laws that arise when a dependency model transforms a base draw.
#[derive(Clone, Debug, PartialEq)]
pub enum DistributionSpec {
    /// Normal with mean and variance.
    Normal {
        mean: f64,
        var: f64,
    },
    /// Location-scale Student t with `nu` degrees of freedom.
    StudentT {
        nu: f64,
        loc: f64,
        scale: f64,
    },
    Cauchy {
        loc: f64,
        scale: f64,
    },
    Beta {
        a: f64,
        b: f64,
    },
    /// Beta of the first kind on `(0, c)`: `c · Beta(a, b)`.
    B1 {
        c: f64,
        a: f64,
        b: f64,
    },
    /// Generalized beta of the first kind: `r · Beta(a, b)^(1/p)`.
    Gb1 {
        p: f64,
        r: f64,
        a: f64,
        b: f64,
    },
    /// Gamma with shape and rate.
    Gamma {
        shape: f64,
        rate: f64,
    },
    /// Inverse gamma with shape and scale: `scale / Gamma(shape, 1)`.
    InverseGamma {
        shape: f64,
        scale: f64,
    },
    Uniform {
        lo: f64,
        hi: f64,
    },
    /// ±1 with probability 1/2 each.
    Rademacher,
    /// Flat density `2/(2-β)` on `[0, 1-β]`, then linear down to 0 at 1.
    Trapezoidal {
        beta: f64,
    },
    /// Density `2(1-βx)/(2-β)` on `[0, 1]`.
    TruncB1 {
        beta: f64,
    },
    /// `R · Y` with `R` Rademacher and `Y >= 0` drawn from the inner law.
    Signed(Box<DistributionSpec>),
    /// `shift + scale · Y`.
    Affine {
        base: Box<DistributionSpec>,
        scale: f64,
        shift: f64,
    },
    /// `to⁻¹(from(Y))` with `Y` drawn from `base`.
    QuantileMap {
        base: Box<DistributionSpec>,
        from: Box<DistributionSpec>,
        to: Box<DistributionSpec>,
    },
}

use DistributionSpec as D;

impl DistributionSpec {
    pub fn normal(mean: f64, var: f64) -> Self {
        D::Normal { mean, var }
    }
    pub fn std_normal() -> Self {
        D::Normal { mean: 0.0, var: 1.0 }
    }
    pub fn student_t(nu: f64) -> Self {
        D::StudentT {
            nu,
            loc: 0.0,
            scale: 1.0,
        }
    }
    pub fn beta(a: f64, b: f64) -> Self {
        D::Beta { a, b }
    }
    pub fn b1(c: f64, a: f64, b: f64) -> Self {
        D::B1 { c, a, b }
    }
    pub fn gb1(p: f64, r: f64, a: f64, b: f64) -> Self {
        D::Gb1 { p, r, a, b }
    }
    pub fn gamma(shape: f64, rate: f64) -> Self {
        D::Gamma { shape, rate }
    }
    pub fn uniform(lo: f64, hi: f64) -> Self {
        D::Uniform { lo, hi }
    }
    pub fn signed(inner: DistributionSpec) -> Self {
        D::Signed(Box::new(inner))
    }
    /// `shift + scale · base`, folded into the base family when it is closed
    /// under affine maps.
    pub fn affine(base: DistributionSpec, scale: f64, shift: f64) -> Self {
        if scale == 1.0 && shift == 0.0 {
            return base;
        }
        match base {
            D::Normal { mean, var } => {
                return D::Normal {
                    mean: shift + scale * mean,
                    var: scale * scale * var,
                }
            }
            D::StudentT { nu, loc, scale: s } if scale > 0.0 => {
                return D::StudentT {
                    nu,
                    loc: shift + scale * loc,
                    scale: scale * s,
                }
            }
            D::Cauchy { loc, scale: s } if scale > 0.0 => {
                return D::Cauchy {
                    loc: shift + scale * loc,
                    scale: scale * s,
                }
            }
            _ => {}
        }
        D::Affine {
            base: Box::new(base),
            scale,
            shift,
        }
    }
    pub fn quantile_map(base: DistributionSpec, from: DistributionSpec, to: DistributionSpec) -> Self {
        D::QuantileMap {
            base: Box::new(base),
            from: Box::new(from),
            to: Box::new(to),
        }
    }

    /// Checks every parameter constraint of the family.
    pub fn validate(&self) -> Result<()> {
        fn pos(name: &str, v: f64) -> Result<()> {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(invalid(format!("{name} must be positive and finite, got {v}")))
            }
        }
        fn finite(name: &str, v: f64) -> Result<()> {
            if v.is_finite() {
                Ok(())
            } else {
                Err(invalid(format!("{name} must be finite, got {v}")))
            }
        }
        match self {
            D::Normal { mean, var } => {
                finite("mean", *mean)?;
                pos("variance", *var)
            }
            D::StudentT { nu, loc, scale } => {
                pos("nu", *nu)?;
                finite("loc", *loc)?;
                pos("scale", *scale)
            }
            D::Cauchy { loc, scale } => {
                finite("loc", *loc)?;
                pos("scale", *scale)
            }
            D::Beta { a, b } => {
                pos("a", *a)?;
                pos("b", *b)
            }
            D::B1 { c, a, b } => {
                pos("c", *c)?;
                pos("a", *a)?;
                pos("b", *b)
            }
            D::Gb1 { p, r, a, b } => {
                pos("p", *p)?;
                pos("r", *r)?;
                pos("a", *a)?;
                pos("b", *b)
            }
            D::Gamma { shape, rate } => {
                pos("shape", *shape)?;
                pos("rate", *rate)
            }
            D::InverseGamma { shape, scale } => {
                pos("shape", *shape)?;
                pos("scale", *scale)
            }
            D::Uniform { lo, hi } => {
                finite("lo", *lo)?;
                finite("hi", *hi)?;
                if lo < hi {
                    Ok(())
                } else {
                    Err(invalid(format!("uniform needs lo < hi, got [{lo}, {hi}]")))
                }
            }
            D::Rademacher => Ok(()),
            D::Trapezoidal { beta } | D::TruncB1 { beta } => {
                if *beta > 0.0 && *beta <= 1.0 {
                    Ok(())
                } else {
                    Err(invalid(format!("beta must lie in (0, 1], got {beta}")))
                }
            }
            D::Signed(inner) => {
                inner.validate()?;
                if inner.support().0 < 0.0 {
                    Err(invalid("signed law needs a nonnegative inner law"))
                } else {
                    Ok(())
                }
            }
            D::Affine { base, scale, shift } => {
                base.validate()?;
                finite("shift", *shift)?;
                if *scale != 0.0 && scale.is_finite() {
                    Ok(())
                } else {
                    Err(invalid("affine scale must be finite and nonzero"))
                }
            }
            D::QuantileMap { base, from, to } => {
                base.validate()?;
                from.validate()?;
                to.validate()?;
                if from.is_discrete() || to.is_discrete() {
                    return Err(invalid("quantile map needs continuous laws"));
                }
                Ok(())
            }
        }
    }

    pub fn is_discrete(&self) -> bool {
        match self {
            D::Rademacher => true,
            D::Affine { base, .. } => base.is_discrete(),
            D::Signed(inner) => inner.is_discrete(),
            _ => false,
        }
    }

    /// Closure of the support, as `(lower, upper)`.
    pub fn support(&self) -> (f64, f64) {
        match self {
            D::Normal { .. } | D::StudentT { .. } | D::Cauchy { .. } => (f64::NEG_INFINITY, f64::INFINITY),
            D::Beta { .. } | D::Trapezoidal { .. } | D::TruncB1 { .. } => (0.0, 1.0),
            D::B1 { c, .. } => (0.0, *c),
            D::Gb1 { r, .. } => (0.0, *r),
            D::Gamma { .. } | D::InverseGamma { .. } => (0.0, f64::INFINITY),
            D::Uniform { lo, hi } => (*lo, *hi),
            D::Rademacher => (-1.0, 1.0),
            D::Signed(inner) => {
                let hi = inner.support().1;
                (-hi, hi)
            }
            D::Affine { base, scale, shift } => {
                let (l, h) = base.support();
                let (a, b) = (shift + scale * l, shift + scale * h);
                if a <= b {
                    (a, b)
                } else {
                    (b, a)
                }
            }
            D::QuantileMap { to, .. } => to.support(),
        }
    }

    /// True when `x` lies strictly inside the support (or is an atom of a
    /// discrete law).
    pub fn in_open_support(&self, x: f64) -> bool {
        match self {
            D::Rademacher => x == -1.0 || x == 1.0,
            D::Affine { base, scale, shift } if base.is_discrete() => base.in_open_support((x - shift) / scale),
            _ => {
                let (l, h) = self.support();
                x > l && x < h
            }
        }
    }

    pub fn has_finite_variance(&self) -> bool {
        match self {
            D::StudentT { nu, .. } => *nu > 2.0,
            D::Cauchy { .. } => false,
            D::InverseGamma { shape, .. } => *shape > 2.0,
            D::Signed(inner) => inner.has_finite_variance(),
            D::Affine { base, .. } => base.has_finite_variance(),
            D::QuantileMap { to, .. } => to.has_finite_variance(),
            _ => true,
        }
    }

    /// Mean, when finite and available in closed form.
    pub fn mean(&self) -> Option<f64> {
        match self {
            D::Normal { mean, .. } => Some(*mean),
            D::StudentT { nu, loc, .. } if *nu > 1.0 => Some(*loc),
            D::Beta { a, b } => Some(a / (a + b)),
            D::B1 { c, a, b } => Some(c * a / (a + b)),
            D::Gamma { shape, rate } => Some(shape / rate),
            D::InverseGamma { shape, scale } if *shape > 1.0 => Some(scale / (shape - 1.0)),
            D::Uniform { lo, hi } => Some(0.5 * (lo + hi)),
            D::Rademacher => Some(0.0),
            D::TruncB1 { beta } => Some((3.0 - 2.0 * beta) / (3.0 * (2.0 - beta))),
            D::Signed(inner) if inner.mean().is_some() => Some(0.0),
            D::Affine { base, scale, shift } => base.mean().map(|m| shift + scale * m),
            _ => None,
        }
    }

    /// Variance, when finite and available in closed form.
    pub fn variance(&self) -> Option<f64> {
        match self {
            D::Normal { var, .. } => Some(*var),
            D::StudentT { nu, scale, .. } if *nu > 2.0 => Some(scale * scale * nu / (nu - 2.0)),
            D::Beta { a, b } => Some(a * b / ((a + b) * (a + b) * (a + b + 1.0))),
            D::B1 { c, a, b } => Some(c * c * a * b / ((a + b) * (a + b) * (a + b + 1.0))),
            D::Gamma { shape, rate } => Some(shape / (rate * rate)),
            D::InverseGamma { shape, scale } if *shape > 2.0 => {
                Some(scale * scale / ((shape - 1.0).powi(2) * (shape - 2.0)))
            }
            D::Uniform { lo, hi } => Some((hi - lo).powi(2) / 12.0),
            D::Rademacher => Some(1.0),
            D::Affine { base, scale, .. } => base.variance().map(|v| scale * scale * v),
            _ => None,
        }
    }

    /// One draw. Fails only when a quantile map hits the edge of its domain.
    pub fn sample(&self, rng: &mut RngStream) -> Result<f64> {
        Ok(match self {
            D::Normal { mean, var } => {
                let z: f64 = StandardNormal.sample(rng);
                mean + var.sqrt() * z
            }
            D::StudentT { nu, loc, scale } => {
                let t = StudentT::new(*nu).map_err(|e| invalid(e.to_string()))?;
                loc + scale * t.sample(rng)
            }
            D::Cauchy { loc, scale } => loc + scale * (PI * (rng.open01() - 0.5)).tan(),
            D::Beta { a, b } => sample_beta(*a, *b, rng)?,
            D::B1 { c, a, b } => c * sample_beta(*a, *b, rng)?,
            D::Gb1 { p, r, a, b } => r * sample_beta(*a, *b, rng)?.powf(1.0 / p),
            D::Gamma { shape, rate } => sample_gamma(*shape, rng)? / rate,
            D::InverseGamma { shape, scale } => scale / sample_gamma(*shape, rng)?,
            D::Uniform { lo, hi } => lo + (hi - lo) * rng.open01(),
            D::Rademacher => rng.sign(),
            D::Trapezoidal { .. } | D::TruncB1 { .. } => self.quantile(rng.open01())?,
            D::Signed(inner) => {
                let s = rng.sign();
                s * inner.sample(rng)?
            }
            D::Affine { base, scale, shift } => shift + scale * base.sample(rng)?,
            D::QuantileMap { base, from, to } => {
                let y = base.sample(rng)?;
                to.quantile(from.cdf(y))?
            }
        })
    }

    /// `n` i.i.d. draws after validating the parameters.
    pub fn sample_n(&self, n: usize, rng: &mut RngStream) -> Result<Vec<f64>> {
        self.validate()?;
        (0..n).map(|_| self.sample(rng)).collect()
    }

    /// Right-continuous CDF.
    pub fn cdf(&self, x: f64) -> f64 {
        if x.is_nan() {
            return f64::NAN;
        }
        match self {
            D::Normal { mean, var } => std_normal_cdf((x - mean) / var.sqrt()),
            D::StudentT { nu, loc, scale } => student_t_cdf(*nu, (x - loc) / scale),
            D::Cauchy { loc, scale } => 0.5 + ((x - loc) / scale).atan() / PI,
            D::Beta { a, b } => beta_cdf(*a, *b, x),
            D::B1 { c, a, b } => beta_cdf(*a, *b, x / c),
            D::Gb1 { p, r, a, b } => {
                if x <= 0.0 {
                    0.0
                } else {
                    beta_cdf(*a, *b, (x / r).powf(*p))
                }
            }
            D::Gamma { shape, rate } => {
                if x <= 0.0 {
                    0.0
                } else {
                    reg_inc_gamma_lower(*shape, rate * x).unwrap_or(f64::NAN)
                }
            }
            D::InverseGamma { shape, scale } => {
                if x <= 0.0 {
                    0.0
                } else {
                    reg_inc_gamma_upper(*shape, scale / x).unwrap_or(f64::NAN)
                }
            }
            D::Uniform { lo, hi } => ((x - lo) / (hi - lo)).clamp(0.0, 1.0),
            D::Rademacher => {
                if x < -1.0 {
                    0.0
                } else if x < 1.0 {
                    0.5
                } else {
                    1.0
                }
            }
            D::Trapezoidal { beta } => {
                if x <= 0.0 {
                    0.0
                } else if x <= 1.0 - beta {
                    2.0 * x / (2.0 - beta)
                } else if x < 1.0 {
                    1.0 - (1.0 - x) * (1.0 - x) / (beta * (2.0 - beta))
                } else {
                    1.0
                }
            }
            D::TruncB1 { beta } => {
                if x <= 0.0 {
                    0.0
                } else if x < 1.0 {
                    (2.0 * x - beta * x * x) / (2.0 - beta)
                } else {
                    1.0
                }
            }
            D::Signed(inner) => {
                if x >= 0.0 {
                    0.5 + 0.5 * inner.cdf(x)
                } else {
                    0.5 * (1.0 - inner.cdf(-x))
                }
            }
            D::Affine { base, scale, shift } => {
                let y = (x - shift) / scale;
                if *scale > 0.0 {
                    base.cdf(y)
                } else {
                    1.0 - base.cdf(y)
                }
            }
            D::QuantileMap { base, from, to } => {
                let p = to.cdf(x);
                if p <= 0.0 {
                    0.0
                } else if p >= 1.0 {
                    1.0
                } else {
                    from.quantile(p).map(|y| base.cdf(y)).unwrap_or(f64::NAN)
                }
            }
        }
    }

    /// Generalized inverse `inf { x : F(x) >= u }` for `u` in (0, 1).
    pub fn quantile(&self, u: f64) -> Result<f64> {
        if !(u > 0.0 && u < 1.0) {
            return Err(Error::Domain(format!("quantile level {u} not in (0, 1)")));
        }
        Ok(match self {
            D::Normal { mean, var } => mean + var.sqrt() * std_normal_quantile(u),
            D::StudentT { nu, loc, scale } => loc + scale * student_t_quantile(*nu, u)?,
            D::Cauchy { loc, scale } => loc + scale * (PI * (u - 0.5)).tan(),
            D::Beta { a, b } => beta_quantile(*a, *b, u)?,
            D::B1 { c, a, b } => c * beta_quantile(*a, *b, u)?,
            D::Gb1 { p, r, a, b } => r * beta_quantile(*a, *b, u)?.powf(1.0 / p),
            D::Gamma { shape, rate } => gamma_quantile(*shape, u)? / rate,
            D::InverseGamma { shape, scale } => scale / gamma_quantile(*shape, 1.0 - u)?,
            D::Uniform { lo, hi } => lo + (hi - lo) * u,
            D::Rademacher => {
                if u <= 0.5 {
                    -1.0
                } else {
                    1.0
                }
            }
            D::Trapezoidal { beta } => {
                let knee = 2.0 * (1.0 - beta) / (2.0 - beta);
                if u <= knee {
                    u * (2.0 - beta) / 2.0
                } else {
                    1.0 - ((1.0 - u) * beta * (2.0 - beta)).sqrt()
                }
            }
            D::TruncB1 { beta } => {
                // root of βx² − 2x + u(2−β) = 0 in [0, 1], cancellation-free form
                let k = u * (2.0 - beta);
                k / (1.0 + (1.0 - beta * k).max(0.0).sqrt())
            }
            D::Signed(inner) => {
                if u > 0.5 {
                    inner.quantile(2.0 * u - 1.0)?
                } else if u < 0.5 {
                    -inner.quantile(1.0 - 2.0 * u)?
                } else {
                    0.0
                }
            }
            D::Affine { base, scale, shift } => {
                if *scale > 0.0 {
                    shift + scale * base.quantile(u)?
                } else {
                    shift + scale * base.quantile(1.0 - u)?
                }
            }
            D::QuantileMap { base, from, to } => to.quantile(from.cdf(base.quantile(u)?))?,
        })
    }
}

fn sample_gamma(shape: f64, rng: &mut RngStream) -> Result<f64> {
    // Marsaglia–Tsang squeeze, with the u^(1/a) boost for shape < 1.
    let g = Gamma::new(shape, 1.0).map_err(|e| invalid(e.to_string()))?;
    Ok(g.sample(rng))
}

/// Beta as a ratio of two gammas.
fn sample_beta(a: f64, b: f64, rng: &mut RngStream) -> Result<f64> {
    loop {
        let x = sample_gamma(a, rng)?;
        let y = sample_gamma(b, rng)?;
        let s = x + y;
        // both gammas can underflow when a and b are tiny
        if s > 0.0 {
            return Ok(x / s);
        }
    }
}

fn beta_cdf(a: f64, b: f64, x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else if x >= 1.0 {
        1.0
    } else {
        reg_inc_beta(a, b, x).unwrap_or(f64::NAN)
    }
}

fn beta_quantile(a: f64, b: f64, u: f64) -> Result<f64> {
    if a == 1.0 && b == 1.0 {
        return Ok(u);
    }
    if a == 1.0 {
        return Ok(-((-u).ln_1p() / b).exp_m1());
    }
    if b == 1.0 {
        return Ok((u.ln() / a).exp());
    }
    invert_cdf(|x| beta_cdf(a, b, x), u, 0.0, 1.0)
}

fn gamma_quantile(shape: f64, u: f64) -> Result<f64> {
    let cdf = |x: f64| {
        if x <= 0.0 {
            0.0
        } else {
            reg_inc_gamma_lower(shape, x).unwrap_or(f64::NAN)
        }
    };
    let mut hi = shape + 10.0 * shape.sqrt() + 10.0;
    while cdf(hi) < u {
        hi *= 2.0;
        if !hi.is_finite() {
            return Err(Error::Bracket { u, lo: 0.0, hi });
        }
    }
    invert_cdf(cdf, u, 0.0, hi)
}

fn student_t_cdf(nu: f64, t: f64) -> f64 {
    if t.is_infinite() {
        return if t > 0.0 { 1.0 } else { 0.0 };
    }
    let t2 = t * t;
    let tail = if t2 < nu {
        // small |t|: central mass via I_{t²/(ν+t²)}(1/2, ν/2)
        let central = reg_inc_beta(0.5, 0.5 * nu, t2 / (nu + t2)).unwrap_or(f64::NAN);
        0.5 * (1.0 - central)
    } else {
        0.5 * reg_inc_beta(0.5 * nu, 0.5, nu / (nu + t2)).unwrap_or(f64::NAN)
    };
    if t >= 0.0 {
        1.0 - tail
    } else {
        tail
    }
}

fn student_t_quantile(nu: f64, u: f64) -> Result<f64> {
    if nu == 1.0 {
        return Ok((PI * (u - 0.5)).tan());
    }
    if nu == 2.0 {
        return Ok((2.0 * u - 1.0) / (2.0 * u * (1.0 - u)).sqrt());
    }
    if u == 0.5 {
        return Ok(0.0);
    }
    let (p, sign) = if u > 0.5 { (u, 1.0) } else { (1.0 - u, -1.0) };
    let cdf = |t: f64| student_t_cdf(nu, t);
    let mut hi = 4.0;
    while cdf(hi) < p {
        hi *= 4.0;
        if !hi.is_finite() {
            return Err(Error::Bracket { u, lo: 0.0, hi });
        }
    }
    Ok(sign * invert_cdf(cdf, p, 0.0, hi)?)
}

impl fmt::Display for DistributionSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            D::Normal { mean, var } => write!(f, "normal({mean}, {var})"),
            D::StudentT { nu, loc, scale } => {
                if *loc == 0.0 && *scale == 1.0 {
                    write!(f, "student_t({nu})")
                } else {
                    write!(f, "student_t({nu}, {loc}, {scale})")
                }
            }
            D::Cauchy { loc, scale } => write!(f, "cauchy({loc}, {scale})"),
            D::Beta { a, b } => write!(f, "beta({a}, {b})"),
            D::B1 { c, a, b } => write!(f, "b1({c}, {a}, {b})"),
            D::Gb1 { p, r, a, b } => write!(f, "gb1({p}, {r}, {a}, {b})"),
            D::Gamma { shape, rate } => write!(f, "gamma({shape}, {rate})"),
            D::InverseGamma { shape, scale } => write!(f, "inverse_gamma({shape}, {scale})"),
            D::Uniform { lo, hi } => write!(f, "uniform({lo}, {hi})"),
            D::Rademacher => write!(f, "rademacher"),
            D::Trapezoidal { beta } => write!(f, "trapezoidal({beta})"),
            D::TruncB1 { beta } => write!(f, "trunc_b1({beta})"),
            D::Signed(inner) => write!(f, "signed({inner})"),
            D::Affine { base, scale, shift } => write!(f, "affine({base}, {scale}, {shift})"),
            D::QuantileMap { base, from, to } => write!(f, "quantile_map({base}, {from}, {to})"),
        }
    }
}

/// Splits `s` on commas that are not nested inside parentheses.
fn split_top_level(s: &str) -> Vec<&str> {
    let mut out = Vec::new();
    let mut depth = 0i32;
    let mut start = 0;
    for (i, ch) in s.char_indices() {
        match ch {
            '(' => depth += 1,
            ')' => depth -= 1,
            ',' if depth == 0 => {
                out.push(s[start..i].trim());
                start = i + 1;
            }
            _ => {}
        }
    }
    out.push(s[start..].trim());
    out
}

impl FromStr for DistributionSpec {
    type Err = Error;

    /// Parses the notation produced by `Display`, e.g. `beta(2, 3)`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let bad = |msg: &str| Error::SpecParse {
            field: "distribution".into(),
            message: format!("{msg} in `{s}`"),
        };
        let (name, args) = match s.find('(') {
            Some(open) => {
                if !s.ends_with(')') {
                    return Err(bad("missing closing parenthesis"));
                }
                (s[..open].trim(), split_top_level(&s[open + 1..s.len() - 1]))
            }
            None => (s, Vec::new()),
        };
        let nums = |want: usize| -> Result<Vec<f64>> {
            if args.len() != want {
                return Err(bad(&format!("expected {want} arguments")));
            }
            args.iter()
                .map(|a| a.parse::<f64>().map_err(|_| bad(&format!("`{a}` is not a number"))))
                .collect()
        };
        let spec = match name {
            "normal" => {
                let v = nums(2)?;
                D::Normal { mean: v[0], var: v[1] }
            }
            "student_t" => match args.len() {
                1 => D::student_t(nums(1)?[0]),
                _ => {
                    let v = nums(3)?;
                    D::StudentT {
                        nu: v[0],
                        loc: v[1],
                        scale: v[2],
                    }
                }
            },
            "cauchy" => {
                let v = nums(2)?;
                D::Cauchy { loc: v[0], scale: v[1] }
            }
            "beta" => {
                let v = nums(2)?;
                D::Beta { a: v[0], b: v[1] }
            }
            "b1" => {
                let v = nums(3)?;
                D::B1 {
                    c: v[0],
                    a: v[1],
                    b: v[2],
                }
            }
            "gb1" => {
                let v = nums(4)?;
                D::Gb1 {
                    p: v[0],
                    r: v[1],
                    a: v[2],
                    b: v[3],
                }
            }
            "gamma" => {
                let v = nums(2)?;
                D::Gamma {
                    shape: v[0],
                    rate: v[1],
                }
            }
            "exponential" => {
                let v = nums(1)?;
                D::Gamma { shape: 1.0, rate: v[0] }
            }
            "inverse_gamma" => {
                let v = nums(2)?;
                D::InverseGamma {
                    shape: v[0],
                    scale: v[1],
                }
            }
            "uniform" => {
                let v = nums(2)?;
                D::Uniform { lo: v[0], hi: v[1] }
            }
            "rademacher" if args.is_empty() => D::Rademacher,
            "trapezoidal" => D::Trapezoidal { beta: nums(1)?[0] },
            "trunc_b1" => D::TruncB1 { beta: nums(1)?[0] },
            "signed" if args.len() == 1 => D::signed(args[0].parse()?),
            "affine" if args.len() == 3 => {
                let scale = args[1].parse().map_err(|_| bad("bad affine scale"))?;
                let shift = args[2].parse().map_err(|_| bad("bad affine shift"))?;
                D::Affine {
                    base: Box::new(args[0].parse()?),
                    scale,
                    shift,
                }
            }
            "quantile_map" if args.len() == 3 => D::quantile_map(args[0].parse()?, args[1].parse()?, args[2].parse()?),
            _ => return Err(bad("unknown distribution")),
        };
        spec.validate().map_err(|e| bad(&e.to_string()))?;
        Ok(spec)
    }
}
