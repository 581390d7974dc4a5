//! Gaussian, Student-t and Cauchy models, each a linear lift of a standard
//! model by the Cholesky factor of the reordered scale matrix.

use std::sync::Arc;

use super::{check_order, lift_by_covariance, DependencyFn, DependencyModel};
use crate::error::{invalid, Result};
use crate::numerics::CovarianceMatrix;
use crate::univariate::DistributionSpec;

fn check_dims(mu: &[f64], sigma: &CovarianceMatrix) -> Result<()> {
    if mu.len() != sigma.dim() {
        return Err(invalid(format!(
            "mean has {} entries but the scale matrix is {}×{}",
            mu.len(),
            sigma.dim(),
            sigma.dim()
        )));
    }
    if mu.iter().any(|m| !m.is_finite()) {
        return Err(invalid("mean entries must be finite"));
    }
    Ok(())
}

/// `N(μ, Σ)`. Latents are `Z_{w_i} ~ N(μ_{w_i}, Σ_{w_i w_i})`, standardized
/// before the lift.
pub fn gaussian_dm(mu: &[f64], sigma: &CovarianceMatrix, pivot: usize, perm: Vec<usize>) -> Result<DependencyModel> {
    check_dims(mu, sigma)?;
    check_order(sigma.dim(), pivot, &perm)?;
    let loc: Vec<f64> = perm.iter().map(|&w| mu[w]).collect();
    let sd: Vec<f64> = perm.iter().map(|&w| sigma.get(w, w).sqrt()).collect();
    let latents = perm
        .iter()
        .map(|&w| DistributionSpec::normal(mu[w], sigma.get(w, w)))
        .collect();
    let map: DependencyFn = Arc::new(move |_, z, out| {
        for k in 0..out.len() {
            out[k] = (z[k] - loc[k]) / sd[k];
        }
        Ok(())
    });
    let standard = DependencyModel::new("gaussian", pivot, perm, DistributionSpec::std_normal(), latents, map)?;
    lift_by_covariance(&standard, sigma, mu)
}

/// Standard `t_d(ν, 0, I)` map: `y_{w_k} = s_k z_k`, `z_k ~ t(ν + k)`, with
/// `s_k² = (ν + y_j²) Π_{i<k}(ν + i + z_i²) / Π_{i≤k}(ν + i)`.
fn standard_t_map(nu: f64) -> DependencyFn {
    Arc::new(move |y_j, z, out| {
        let mut s2 = nu + y_j * y_j;
        for k in 0..out.len() {
            let dof = nu + (k + 1) as f64;
            s2 /= dof;
            out[k] = s2.sqrt() * z[k];
            s2 *= dof + z[k] * z[k];
        }
        Ok(())
    })
}

/// Scale factors `s_k` of the standard t map along one path.
pub fn t_scale_factors(nu: f64, y_j: f64, z: &[f64]) -> Vec<f64> {
    let mut s2 = nu + y_j * y_j;
    let mut out = Vec::with_capacity(z.len());
    for (k, zk) in z.iter().enumerate() {
        let dof = nu + (k + 1) as f64;
        s2 /= dof;
        out.push(s2.sqrt());
        s2 *= dof + zk * zk;
    }
    out
}

fn t_latents(nu: f64, m: usize) -> Vec<DistributionSpec> {
    (1..=m).map(|i| DistributionSpec::student_t(nu + i as f64)).collect()
}

/// `t_d(ν, μ, Σ)` for any `ν > 0`.
pub fn student_t_dm(
    nu: f64,
    mu: &[f64],
    sigma: &CovarianceMatrix,
    pivot: usize,
    perm: Vec<usize>,
) -> Result<DependencyModel> {
    if !(nu > 0.0 && nu.is_finite()) {
        return Err(invalid(format!("degrees of freedom must be positive, got {nu}")));
    }
    check_dims(mu, sigma)?;
    check_order(sigma.dim(), pivot, &perm)?;
    let m = perm.len();
    let standard = DependencyModel::new(
        "student_t",
        pivot,
        perm,
        DistributionSpec::student_t(nu),
        t_latents(nu, m),
        standard_t_map(nu),
    )?;
    lift_by_covariance(&standard, sigma, mu)
}

/// `C_d(μ, Σ)`: the `ν = 1` map, whose scales reduce to the recursion
/// `h_1 = √(1 + x_j²)`, `h_{k+1} = h_k √(1 + z_k²/(k+1))`, `x_{w_k} = h_k z_k / √(k+1)`.
pub fn cauchy_dm(mu: &[f64], sigma: &CovarianceMatrix, pivot: usize, perm: Vec<usize>) -> Result<DependencyModel> {
    check_dims(mu, sigma)?;
    check_order(sigma.dim(), pivot, &perm)?;
    let m = perm.len();
    let standard = DependencyModel::new(
        "cauchy",
        pivot,
        perm,
        DistributionSpec::Cauchy { loc: 0.0, scale: 1.0 },
        t_latents(1.0, m),
        standard_t_map(1.0),
    )?;
    lift_by_covariance(&standard, sigma, mu)
}
