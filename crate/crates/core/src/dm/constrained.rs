//! Independent gamma and Gaussian variables under sum and quadratic
//! constraints, their arbitrary-marginal variants, the elliptical shell and
//! the two-dimensional trapezoid.
//!
//! Equality constraints are closed by subtraction on the last output.

use std::sync::Arc;

use nalgebra::DMatrix;

use super::spec::{QuadMode, SumMode};
use super::{check_order, lift_by_covariance, DependencyFn, DependencyModel};
use crate::error::{invalid, Result};
use crate::numerics::CovarianceMatrix;
use crate::univariate::DistributionSpec;

fn positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(invalid(format!("{name} must be positive and finite, got {v}")))
    }
}

fn check_marginals(marginals: &[DistributionSpec], d: usize) -> Result<()> {
    if marginals.len() != d {
        return Err(invalid(format!("need {d} marginals, got {}", marginals.len())));
    }
    for m in marginals {
        m.validate()?;
        if m.is_discrete() {
            return Err(invalid(format!("marginal {m} is not continuous")));
        }
    }
    Ok(())
}

/// Rewrites a model on a reference scale into one with marginals `F_i`:
/// `x_i = F_i⁻¹(R_i(y_i))`, where `R_i` is the reference law of coordinate `i`.
fn transform_marginals(
    base: DependencyModel,
    family: &str,
    reference: Vec<DistributionSpec>,
    marginals: Vec<DistributionSpec>,
) -> Result<DependencyModel> {
    let pivot = base.pivot();
    let perm = base.perm().to_vec();
    let pivot_law = DistributionSpec::quantile_map(
        base.pivot_law().clone(),
        reference[pivot].clone(),
        marginals[pivot].clone(),
    );
    let latents = base.latent_laws().to_vec();
    let order = perm.clone();
    let map: DependencyFn = Arc::new(move |x_j, z, out| {
        let y_j = reference[pivot].quantile(marginals[pivot].cdf(x_j))?;
        base.evaluate(y_j, z, out)?;
        for (k, &w) in order.iter().enumerate() {
            out[k] = marginals[w].quantile(reference[w].cdf(out[k]))?;
        }
        Ok(())
    });
    DependencyModel::new(family, pivot, perm, pivot_law, latents, map)
}

/// Independent `Gamma(a_i, β)` conditioned on `Σ x = c` (eq) or `Σ x < c` (lt).
///
/// The conditional law of the equality case does not depend on the rate.
pub fn gamma_sum_dm(
    a: &[f64],
    rate: f64,
    c: f64,
    mode: SumMode,
    pivot: usize,
    perm: Vec<usize>,
) -> Result<DependencyModel> {
    let d = a.len();
    if d < 2 {
        return Err(invalid("sum constraints need d ≥ 2"));
    }
    check_order(d, pivot, &perm)?;
    for &v in a {
        positive("shape", v)?;
    }
    positive("rate", rate)?;
    positive("c", c)?;
    let extra = match mode {
        SumMode::Eq => 0.0,
        SumMode::Lt => 1.0,
    };
    let tail = |from: usize| perm[from..].iter().map(|&w| a[w]).sum::<f64>();
    let pivot_law = DistributionSpec::b1(c, a[pivot], tail(0) + extra);
    let breaks = match mode {
        SumMode::Eq => d - 2,
        SumMode::Lt => d - 1,
    };
    let latents = (0..breaks)
        .map(|i| DistributionSpec::beta(a[perm[i]], tail(i + 1) + extra))
        .collect();
    let closed = mode == SumMode::Eq;
    let map: DependencyFn = Arc::new(move |x_j, z, out| {
        let mut rem = c - x_j;
        for i in 0..breaks {
            out[i] = z[i] * rem;
            rem *= 1.0 - z[i];
        }
        if closed {
            out[breaks] = c - x_j - out[..breaks].iter().sum::<f64>();
        }
        Ok(())
    });
    DependencyModel::new("gamma_sum", pivot, perm, pivot_law, latents, map)
}

/// Continuous marginals `F_i` with `Σ G_i⁻¹(F_i(X_i)) = c` (or `< c`), where
/// `G_i` is the `Gamma(a_i, β)` CDF.
pub fn general_sum_dm(
    marginals: Vec<DistributionSpec>,
    a: &[f64],
    rate: f64,
    c: f64,
    mode: SumMode,
    pivot: usize,
    perm: Vec<usize>,
) -> Result<DependencyModel> {
    check_marginals(&marginals, a.len())?;
    let base = gamma_sum_dm(a, rate, c, mode, pivot, perm)?;
    let reference = a.iter().map(|&s| DistributionSpec::gamma(s, rate)).collect();
    transform_marginals(base, "general_sum", reference, marginals)
}

/// Conditional law of `X_i ~ N(0, σ_i²)` given `Σ X = c`, restricted to the
/// coordinates `(j, w_1, …, w_{d-2})`.
#[derive(Clone, Debug, PartialEq)]
pub struct SigmaC {
    /// Conditional means `c σ_i² / Σσ²`, in the order above.
    pub mean: Vec<f64>,
    pub cov: CovarianceMatrix,
}

/// `Σ^c_{iℓ} = σ_i² δ_{iℓ} − σ_i² σ_ℓ² / Σ_k σ_k²` over `(j, w_1, …, w_{d-2})`.
pub fn sigma_c(sigmas: &[f64], c: f64, pivot: usize, perm: &[usize]) -> Result<SigmaC> {
    let d = sigmas.len();
    if d < 2 {
        return Err(invalid("linear constraints need d ≥ 2"));
    }
    check_order(d, pivot, perm)?;
    for &s in sigmas {
        positive("sigma", s)?;
    }
    if !c.is_finite() {
        return Err(invalid("c must be finite"));
    }
    let total: f64 = sigmas.iter().map(|s| s * s).sum();
    let idx: Vec<usize> = std::iter::once(pivot).chain(perm[..d - 2].iter().copied()).collect();
    let var = |i: usize| sigmas[i] * sigmas[i];
    let mean = idx.iter().map(|&i| c * var(i) / total).collect();
    let m = idx.len();
    let cov = DMatrix::from_fn(m, m, |r, s| {
        let (i, l) = (idx[r], idx[s]);
        let delta = if r == s { var(i) } else { 0.0 };
        delta - var(i) * var(l) / total
    });
    Ok(SigmaC {
        mean,
        cov: CovarianceMatrix::new(cov)?,
    })
}

/// Independent `N(0, σ_i²)` conditioned on `Σ X = c`.
pub fn gaussian_linsum_dm(sigmas: &[f64], c: f64, pivot: usize, perm: Vec<usize>) -> Result<DependencyModel> {
    let sc = sigma_c(sigmas, c, pivot, &perm)?;
    let l = sc.cov.chol().clone();
    let mean = sc.mean.clone();
    let m = mean.len();
    let pivot_law = DistributionSpec::normal(mean[0], sc.cov.get(0, 0));
    let latents = vec![DistributionSpec::std_normal(); m - 1];
    let map: DependencyFn = Arc::new(move |x_j, z, out| {
        let s0 = (x_j - mean[0]) / l[(0, 0)];
        for i in 1..m {
            let mut y = l[(i, 0)] * s0;
            for k in 1..=i {
                y += l[(i, k)] * z[k - 1];
            }
            out[i - 1] = y + mean[i];
        }
        out[m - 1] = c - x_j - out[..m - 1].iter().sum::<f64>();
        Ok(())
    });
    DependencyModel::new("gaussian_linsum", pivot, perm, pivot_law, latents, map)
}

/// Continuous marginals `F_i` with `Σ σ_i Φ⁻¹(F_i(X_i)) = c`.
pub fn general_linsum_dm(
    marginals: Vec<DistributionSpec>,
    sigmas: &[f64],
    c: f64,
    pivot: usize,
    perm: Vec<usize>,
) -> Result<DependencyModel> {
    check_marginals(&marginals, sigmas.len())?;
    let base = gaussian_linsum_dm(sigmas, c, pivot, perm)?;
    let reference = sigmas.iter().map(|&s| DistributionSpec::normal(0.0, s * s)).collect();
    transform_marginals(base, "general_linsum", reference, marginals)
}

/// Independent standard normals conditioned on `Σ x² = c` (on the sphere)
/// or `Σ x² < c` (in the ball); both give the uniform law there.
pub fn gaussian_quad_dm(d: usize, c: f64, mode: QuadMode, pivot: usize, perm: Vec<usize>) -> Result<DependencyModel> {
    if d < 2 {
        return Err(invalid("quadratic constraints need d ≥ 2"));
    }
    check_order(d, pivot, &perm)?;
    positive("c", c)?;
    let df = d as f64;
    let gb = |r: f64, b: f64| DistributionSpec::signed(DistributionSpec::gb1(2.0, r, 0.5, b));
    let (pivot_law, mut latents, breaks) = match mode {
        QuadMode::On => (
            gb(c.sqrt(), (df - 1.0) / 2.0),
            (1..d - 1)
                .map(|i| gb(1.0, (df - i as f64 - 1.0) / 2.0))
                .collect::<Vec<_>>(),
            d - 2,
        ),
        QuadMode::In => (
            gb(c.sqrt(), (df + 1.0) / 2.0),
            (1..d).map(|i| gb(1.0, (df - i as f64 + 1.0) / 2.0)).collect(),
            d - 1,
        ),
    };
    let closed = mode == QuadMode::On;
    if closed {
        latents.push(DistributionSpec::Rademacher);
    }
    let map: DependencyFn = Arc::new(move |x_j, z, out| {
        let mut rem = c - x_j * x_j;
        for i in 0..breaks {
            out[i] = z[i] * rem.sqrt();
            rem *= 1.0 - z[i] * z[i];
        }
        if closed {
            let used = x_j * x_j + out[..breaks].iter().map(|x| x * x).sum::<f64>();
            out[breaks] = z[breaks] * (c - used).max(0.0).sqrt();
        }
        Ok(())
    });
    DependencyModel::new("gaussian_quad", pivot, perm, pivot_law, latents, map)
}

/// Continuous marginals `F_i` with `Σ [Φ⁻¹(F_i(X_i))]² = c` (or `< c`).
pub fn general_quad_dm(
    marginals: Vec<DistributionSpec>,
    c: f64,
    mode: QuadMode,
    pivot: usize,
    perm: Vec<usize>,
) -> Result<DependencyModel> {
    let d = marginals.len();
    check_marginals(&marginals, d)?;
    let base = gaussian_quad_dm(d, c, mode, pivot, perm)?;
    let reference = vec![DistributionSpec::std_normal(); d];
    transform_marginals(base, "general_quad", reference, marginals)
}

/// Shell `yᵀ Σ⁻¹ y = c`: the on-sphere model lifted by the Cholesky factor
/// of `Σ` in model order.
pub fn elliptical_shell_dm(
    sigma: &CovarianceMatrix,
    c: f64,
    pivot: usize,
    perm: Vec<usize>,
) -> Result<DependencyModel> {
    let d = sigma.dim();
    let standard = gaussian_quad_dm(d, c, QuadMode::On, pivot, perm)?;
    let mut m = lift_by_covariance(&standard, sigma, &vec![0.0; d])?;
    m.family = "elliptical_shell".into();
    Ok(m)
}

/// Uniform law on `{x ∈ [0,1]² : 1 − βx_1 − x_2 ≥ 0}`.
///
/// Pivot 0: `X_1 ~ TruncB1(β)`, `X_2 = Z(1 − βX_1)`.
/// Pivot 1: `X_2 ~ Trapezoidal(β)`, `X_1 = Z min((1 − X_2)/β, 1)`.
pub fn trapezoid_dm(beta: f64, pivot: usize) -> Result<DependencyModel> {
    if !(beta > 0.0 && beta <= 1.0) {
        return Err(invalid(format!("beta must lie in (0, 1], got {beta}")));
    }
    let u = DistributionSpec::uniform(0.0, 1.0);
    let (pivot_law, map): (DistributionSpec, DependencyFn) = match pivot {
        0 => (
            DistributionSpec::TruncB1 { beta },
            Arc::new(move |x1, z, out| {
                out[0] = z[0] * (1.0 - beta * x1);
                Ok(())
            }),
        ),
        1 => (
            DistributionSpec::Trapezoidal { beta },
            Arc::new(move |x2, z, out| {
                out[0] = z[0] * ((1.0 - x2) / beta).min(1.0);
                Ok(())
            }),
        ),
        _ => return Err(invalid(format!("trapezoid pivot must be 1 or 2, got {}", pivot + 1))),
    };
    DependencyModel::new("trapezoid", pivot, vec![1 - pivot], pivot_law, vec![u], map)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dm::{chain_from_conditionals, default_perm, ConditionalQuantile};
    use crate::numerics::special::std_normal_quantile;

    #[test]
    fn two_exponentials_on_a_segment() {
        let m = gamma_sum_dm(&[1.0, 1.0], 1.0, 1.0, SumMode::Eq, 0, vec![1]).unwrap();
        assert_eq!(m.pivot_law(), &DistributionSpec::b1(1.0, 1.0, 1.0));
        assert!(m.latent_laws().is_empty());
        assert_eq!(m.push_forward(0.3, &[]).unwrap(), vec![0.7]);
    }

    #[test]
    fn gamma_sum_parameters() {
        let a = [0.5, 2.0, 1.5, 3.0];
        let m = gamma_sum_dm(&a, 2.0, 4.0, SumMode::Eq, 2, vec![3, 0, 1]).unwrap();
        assert_eq!(m.pivot_law(), &DistributionSpec::b1(4.0, 1.5, 5.5));
        assert_eq!(
            m.latent_laws(),
            &[DistributionSpec::beta(3.0, 2.5), DistributionSpec::beta(0.5, 2.0)]
        );
        let lt = gamma_sum_dm(&a, 2.0, 4.0, SumMode::Lt, 2, vec![3, 0, 1]).unwrap();
        assert_eq!(lt.pivot_law(), &DistributionSpec::b1(4.0, 1.5, 6.5));
        assert_eq!(lt.latent_laws().len(), 3);
        assert_eq!(lt.latent_laws()[2], DistributionSpec::beta(2.0, 1.0));
    }

    #[test]
    fn gamma_sum_constraints_hold() {
        let a = [0.7, 1.0, 2.5, 0.3];
        let c = 3.0;
        let eq = gamma_sum_dm(&a, 1.0, c, SumMode::Eq, 1, vec![0, 3, 2]).unwrap();
        for r in eq.sample_batch(20_000, 1).unwrap().rows() {
            assert!((r.iter().sum::<f64>() - c).abs() <= 1e-9 * c);
        }
        let lt = gamma_sum_dm(&a, 1.0, c, SumMode::Lt, 1, vec![0, 3, 2]).unwrap();
        for r in lt.sample_batch(20_000, 1).unwrap().rows() {
            assert!(r.iter().sum::<f64>() < c);
            assert!(r.iter().all(|&x| x >= 0.0));
        }
    }

    #[test]
    fn general_sum_with_gamma_marginals_reduces() {
        let a = [1.5, 0.8, 2.0];
        let rate = 0.5;
        let base = gamma_sum_dm(&a, rate, 2.0, SumMode::Eq, 0, vec![2, 1]).unwrap();
        let margins = a.iter().map(|&s| DistributionSpec::gamma(s, rate)).collect();
        let gen = general_sum_dm(margins, &a, rate, 2.0, SumMode::Eq, 0, vec![2, 1]).unwrap();
        let (x, z) = (0.6, [0.35]);
        let want = base.push_forward(x, &z).unwrap();
        let got = gen.push_forward(x, &z).unwrap();
        for (g, w) in got.iter().zip(&want) {
            assert!((g - w).abs() < 1e-9, "{g} vs {w}");
        }
    }

    #[test]
    fn general_sum_transformed_residual() {
        let a = [1.0, 2.0, 0.5];
        let (rate, c) = (1.0, 2.5);
        let margins = vec![
            DistributionSpec::uniform(0.0, 1.0),
            DistributionSpec::beta(2.0, 5.0),
            DistributionSpec::normal(1.0, 4.0),
        ];
        let m = general_sum_dm(margins.clone(), &a, rate, c, SumMode::Eq, 1, vec![2, 0]).unwrap();
        for r in m.sample_batch(2000, 3).unwrap().rows() {
            let s: f64 = (0..3)
                .map(|i| {
                    DistributionSpec::gamma(a[i], rate)
                        .quantile(margins[i].cdf(r[i]))
                        .unwrap()
                })
                .sum();
            assert!((s - c).abs() <= 1e-8 * c, "{s}");
            assert!(r[0] > 0.0 && r[0] < 1.0 && r[1] > 0.0 && r[1] < 1.0);
        }
    }

    #[test]
    fn sigma_c_values() {
        let s = sigma_c(&[1.0, 1.0], 3.0, 0, &[1]).unwrap();
        assert_eq!(s.cov.get(0, 0), 0.5);
        assert_eq!(s.mean, vec![1.5]);
        let s = sigma_c(&[3.0, 5.0, 4.0], 2.0, 0, &[1, 2]).unwrap();
        assert!((s.cov.get(0, 0) - 7.38).abs() < 1e-14);
        assert!((s.cov.get(0, 1) + 4.5).abs() < 1e-14);
        assert!((s.cov.get(1, 1) - 12.5).abs() < 1e-14);
        assert!((s.mean[0] - 9.0 * 2.0 / 50.0).abs() < 1e-15);
        assert!((s.mean[1] - 25.0 * 2.0 / 50.0).abs() < 1e-15);
    }

    #[test]
    fn antithetic_pair() {
        let m = gaussian_linsum_dm(&[1.0, 1.0], 0.0, 0, vec![1]).unwrap();
        assert_eq!(m.pivot_law(), &DistributionSpec::normal(0.0, 0.5));
        assert_eq!(m.push_forward(0.8, &[]).unwrap(), vec![-0.8]);
    }

    #[test]
    fn linsum_closure_and_pivot_mean() {
        let m = gaussian_linsum_dm(&[3.0, 5.0, 4.0], 6.0, 0, vec![1, 2]).unwrap();
        let n = 200_000;
        let b = m.sample_batch(n, 5).unwrap();
        for r in b.rows() {
            assert!((r.iter().sum::<f64>() - 6.0).abs() <= 1e-9 * 6.0);
        }
        let mean = b.mean()[0];
        let se = (7.38 / n as f64).sqrt();
        assert!((mean - 1.08).abs() < 3.0 * se, "{mean}");
    }

    #[test]
    fn linsum_covariance_matches_sigma_c() {
        let sig = [1.0, 2.0, 0.5, 1.5];
        let perm = vec![3, 0, 2];
        let m = gaussian_linsum_dm(&sig, 1.0, 1, perm.clone()).unwrap();
        let b = m.sample_batch(200_000, 8).unwrap();
        let cov = b.covariance();
        let sc = sigma_c(&sig, 1.0, 1, &perm).unwrap();
        let idx = [1usize, 3, 0];
        for r in 0..3 {
            for s in 0..3 {
                let diff = cov[(idx[r], idx[s])] - sc.cov.get(r, s);
                assert!(diff.abs() < 0.05, "({r}, {s}): {diff}");
            }
        }
    }

    #[test]
    fn general_linsum_residual_and_monotone_pair() {
        let sig = [1.0, 2.0, 0.7];
        let margins = vec![
            DistributionSpec::gamma(2.0, 1.0),
            DistributionSpec::uniform(-1.0, 1.0),
            DistributionSpec::beta(0.5, 0.5),
        ];
        let m = general_linsum_dm(margins.clone(), &sig, 0.3, 2, vec![0, 1]).unwrap();
        for r in m.sample_batch(2000, 2).unwrap().rows() {
            let s: f64 = (0..3).map(|i| sig[i] * std_normal_quantile(margins[i].cdf(r[i]))).sum();
            assert!((s - 0.3).abs() <= 1e-8, "{s}");
        }
        let u = DistributionSpec::uniform(0.0, 1.0);
        let two = general_linsum_dm(vec![u.clone(), u], &[1.0, 1.0], 0.0, 0, vec![1]).unwrap();
        let a = two.push_forward(0.2, &[]).unwrap()[0];
        let b = two.push_forward(0.6, &[]).unwrap()[0];
        assert!(b < a);
    }

    #[test]
    fn quad_circle_closure() {
        let m = gaussian_quad_dm(2, 1.0, QuadMode::On, 0, vec![1]).unwrap();
        for r in m.sample_batch(5000, 1).unwrap().rows() {
            assert!((r[0] * r[0] + r[1] * r[1] - 1.0).abs() <= 1e-12);
        }
    }

    #[test]
    fn quad_ball_radial_law() {
        let m = gaussian_quad_dm(3, 1.0, QuadMode::In, 1, vec![2, 0]).unwrap();
        let n = 200_000;
        let b = m.sample_batch(n, 4).unwrap();
        for &r in &[0.3, 0.6, 0.9] {
            let frac = b
                .rows()
                .filter(|x| x.iter().map(|v| v * v).sum::<f64>().sqrt() <= r)
                .count() as f64
                / n as f64;
            let p: f64 = r * r * r;
            assert!(
                (frac - p).abs() < 3.0 * (p * (1.0 - p) / n as f64).sqrt(),
                "r = {r}: {frac}"
            );
        }
        for x in b.rows() {
            assert!(x.iter().map(|v| v * v).sum::<f64>() < 1.0);
        }
    }

    #[test]
    fn general_quad_identity_transform() {
        let base = gaussian_quad_dm(3, 2.0, QuadMode::On, 0, vec![1, 2]).unwrap();
        let gen = general_quad_dm(
            vec![DistributionSpec::std_normal(); 3],
            2.0,
            QuadMode::On,
            0,
            vec![1, 2],
        )
        .unwrap();
        let (x, z) = (0.4, [-0.3, 1.0]);
        let want = base.push_forward(x, &z).unwrap();
        let got = gen.push_forward(x, &z).unwrap();
        for (g, w) in got.iter().zip(&want) {
            assert!((g - w).abs() < 1e-10);
        }
    }

    #[test]
    fn shell_quadratic_form() {
        let corr = DMatrix::from_row_slice(3, 3, &[1.0, 0.25, 0.5, 0.25, 1.0, 0.75, 0.5, 0.75, 1.0]);
        let sigma = CovarianceMatrix::from_std_corr(&[3.0, 5.0, 4.0], &corr).unwrap();
        let m = elliptical_shell_dm(&sigma, 2.0, 1, vec![2, 0]).unwrap();
        for r in m.sample_batch(5000, 1).unwrap().rows() {
            let q = sigma.quad_form_inv(r);
            assert!((q - 2.0).abs() <= 1e-8 * 2.0, "{q}");
        }
        let id = elliptical_shell_dm(&CovarianceMatrix::identity(3), 1.0, 0, vec![1, 2]).unwrap();
        let quad = gaussian_quad_dm(3, 1.0, QuadMode::On, 0, vec![1, 2]).unwrap();
        let z = [0.5, -1.0];
        assert_eq!(id.push_forward(0.3, &z).unwrap(), quad.push_forward(0.3, &z).unwrap());
    }

    #[test]
    fn trapezoid_models_stay_inside() {
        for pivot in 0..2 {
            let m = trapezoid_dm(0.5, pivot).unwrap();
            for r in m.sample_batch(10_000, 1).unwrap().rows() {
                assert!(1.0 - 0.5 * r[0] - r[1] >= -1e-15);
                assert!(r.iter().all(|&x| (0.0..=1.0).contains(&x)));
            }
        }
    }

    #[test]
    fn trapezoid_chain_matches_closed_form() {
        let beta = 0.4;
        // X_1 | X_2 is uniform on [0, min((1 − x_2)/β, 1)]
        let q: ConditionalQuantile = Arc::new(move |u, h| Ok(u * ((1.0 - h[0]) / beta).min(1.0)));
        let chain = chain_from_conditionals(1, vec![0], DistributionSpec::Trapezoidal { beta }, vec![q]).unwrap();
        let closed = trapezoid_dm(beta, 1).unwrap();
        for &(x2, z) in &[(0.1, 0.3), (0.7, 0.9), (0.95, 0.5)] {
            assert_eq!(
                chain.push_forward(x2, &[z]).unwrap(),
                closed.push_forward(x2, &[z]).unwrap()
            );
        }
    }

    #[test]
    fn triangularity_for_constrained_families() {
        let models = vec![
            gamma_sum_dm(&[1.0, 2.0, 3.0, 0.5], 1.0, 1.0, SumMode::Lt, 0, default_perm(4, 0)).unwrap(),
            gaussian_quad_dm(4, 1.0, QuadMode::In, 2, default_perm(4, 2)).unwrap(),
            gaussian_linsum_dm(&[1.0, 2.0, 3.0, 4.0], 0.0, 3, default_perm(4, 3)).unwrap(),
        ];
        for m in models {
            let k = m.latent_laws().len();
            let z: Vec<f64> = (0..k).map(|i| 0.2 + 0.1 * i as f64).collect();
            let x_j = m.pivot_law().quantile(0.3).unwrap();
            let base = m.push_forward(x_j, &z).unwrap();
            let mut z2 = z.clone();
            z2[k - 1] += 0.05;
            let moved = m.push_forward(x_j, &z2).unwrap();
            assert_eq!(base[..k - 1], moved[..k - 1], "{}", m.family());
        }
    }

    #[test]
    fn rejects_invalid() {
        assert!(gamma_sum_dm(&[1.0], 1.0, 1.0, SumMode::Eq, 0, vec![]).is_err());
        assert!(gamma_sum_dm(&[1.0, 1.0], 1.0, -1.0, SumMode::Eq, 0, vec![1]).is_err());
        assert!(gaussian_linsum_dm(&[1.0, 0.0], 1.0, 0, vec![1]).is_err());
        assert!(gaussian_quad_dm(3, 0.0, QuadMode::On, 0, vec![1, 2]).is_err());
        assert!(trapezoid_dm(1.5, 0).is_err());
        assert!(trapezoid_dm(0.5, 2).is_err());
        let r = general_sum_dm(
            vec![DistributionSpec::Rademacher; 2],
            &[1.0, 1.0],
            1.0,
            1.0,
            SumMode::Eq,
            0,
            vec![1],
        );
        assert!(r.is_err());
    }
}
