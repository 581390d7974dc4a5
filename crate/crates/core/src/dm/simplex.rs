//! Stick-breaking models: generalized and p-generalized Dirichlet laws, and
//! uniform laws on p-balls, p-spheres and simplices.
//!
//! Parameters `a`, `b` are indexed by natural coordinate. The generalized
//! Dirichlet law depends on the order in which the sticks are broken, so
//! the pivot and permutation select which GD law is produced; for the
//! Dirichlet and uniform families all orders give the same law.

use std::sync::Arc;

use super::spec::Orthant;
use super::{check_order, DependencyFn, DependencyModel};
use crate::error::{invalid, Result};
use crate::univariate::DistributionSpec;

/// Second Beta parameters along the chain: the pivot's, then one per latent.
fn chain_b(a: &[f64], b: &[f64], pivot: usize, perm: &[usize], len: usize) -> Result<(f64, Vec<f64>)> {
    let excess = |k: usize| a[perm[k]] + b[perm[k]] - 1.0;
    let tail = |from: usize| (from..len).map(excess).sum::<f64>();
    let pivot_b = b[pivot] + tail(0);
    let latent_b: Vec<f64> = (0..len).map(|i| b[perm[i]] + tail(i + 1)).collect();
    if pivot_b <= 0.0 || latent_b.iter().any(|&v| v <= 0.0) {
        return Err(invalid(
            "the chain Beta parameters b_k + Σ(a + b − 1) must stay positive",
        ));
    }
    Ok((pivot_b, latent_b))
}

fn check_ab(a: &[f64], b: &[f64], d: usize) -> Result<()> {
    if a.len() != d || b.len() != d {
        return Err(invalid(format!("need {d} values of a and b")));
    }
    if a.iter().chain(b).any(|&v| !(v > 0.0 && v.is_finite())) {
        return Err(invalid("a and b must be positive"));
    }
    Ok(())
}

struct Chain {
    family: &'static str,
    p: f64,
    orthant: Orthant,
    /// Close the chain on the boundary `Σ|x|^p = 1`.
    sphere: bool,
}

impl Chain {
    fn build(
        &self,
        a: &[f64],
        pivot_b: f64,
        latent_b: &[f64],
        pivot: usize,
        perm: Vec<usize>,
    ) -> Result<DependencyModel> {
        let (p, signed, sphere) = (self.p, self.orthant == Orthant::Signed, self.sphere);
        if !(p > 0.0 && p.is_finite()) {
            return Err(invalid(format!("p must be positive, got {p}")));
        }
        let wrap = |law: DistributionSpec| {
            if signed {
                DistributionSpec::signed(law)
            } else {
                law
            }
        };
        let pivot_law = wrap(if p == 1.0 {
            DistributionSpec::beta(a[pivot], pivot_b)
        } else {
            DistributionSpec::gb1(p, 1.0, a[pivot], pivot_b)
        });
        // a signed latent carries its Rademacher factor: Z = |S|, R = sign(S)
        let mut latents: Vec<DistributionSpec> = latent_b
            .iter()
            .enumerate()
            .map(|(i, &bi)| wrap(DistributionSpec::beta(a[perm[i]], bi)))
            .collect();
        if sphere && signed {
            latents.push(DistributionSpec::Rademacher);
        }
        let len = latent_b.len();
        let root = move |v: f64| if p == 1.0 { v } else { v.powf(1.0 / p) };
        let power = move |x: f64| if p == 1.0 { x.abs() } else { x.abs().powf(p) };
        let map: DependencyFn = Arc::new(move |x_j, z, out| {
            let mut rem = 1.0 - power(x_j);
            for i in 0..len {
                let zi = z[i].abs();
                let mag = root(zi * rem);
                out[i] = if z[i] < 0.0 { -mag } else { mag };
                rem *= 1.0 - zi;
            }
            if sphere {
                let used = power(x_j) + out[..len].iter().map(|&x| power(x)).sum::<f64>();
                let mag = root((1.0 - used).max(0.0));
                out[len] = if signed { z[len] * mag } else { mag };
            }
            Ok(())
        });
        DependencyModel::new(self.family, pivot, perm, pivot_law, latents, map)
    }
}

/// Generalized Dirichlet `GD(a, b)` on the open simplex.
pub fn gd_dm(a: &[f64], b: &[f64], pivot: usize, perm: Vec<usize>) -> Result<DependencyModel> {
    let d = perm.len() + 1;
    check_order(d, pivot, &perm)?;
    check_ab(a, b, d)?;
    let (pb, lb) = chain_b(a, b, pivot, &perm, d - 1)?;
    Chain {
        family: "gd",
        p: 1.0,
        orthant: Orthant::Positive,
        sphere: false,
    }
    .build(a, pb, &lb, pivot, perm)
}

/// Dirichlet `D(α_1, …, α_d; α_{d+1})` on the open simplex.
pub fn dirichlet_dm(alpha: &[f64], pivot: usize, perm: Vec<usize>) -> Result<DependencyModel> {
    let d = perm.len() + 1;
    check_order(d, pivot, &perm)?;
    if alpha.len() != d + 1 || alpha.iter().any(|&v| !(v > 0.0 && v.is_finite())) {
        return Err(invalid(format!("dirichlet needs {} positive parameters", d + 1)));
    }
    let a = &alpha[..d];
    let rest = alpha[d];
    let tail = |from: usize| perm[from..].iter().map(|&w| a[w]).sum::<f64>() + rest;
    let pivot_b = tail(0);
    let latent_b: Vec<f64> = (0..d - 1).map(|i| tail(i + 1)).collect();
    let mut m = Chain {
        family: "dirichlet",
        p: 1.0,
        orthant: Orthant::Positive,
        sphere: false,
    }
    .build(a, pivot_b, &latent_b, pivot, perm)?;
    m.family = "dirichlet".into();
    Ok(m)
}

/// p-generalized Dirichlet on the open p-ball.
pub fn pgd_dm(
    p: f64,
    a: &[f64],
    b: &[f64],
    pivot: usize,
    perm: Vec<usize>,
    orthant: Orthant,
) -> Result<DependencyModel> {
    let d = perm.len() + 1;
    check_order(d, pivot, &perm)?;
    check_ab(a, b, d)?;
    let (pb, lb) = chain_b(a, b, pivot, &perm, d - 1)?;
    Chain {
        family: "pgd",
        p,
        orthant,
        sphere: false,
    }
    .build(a, pb, &lb, pivot, perm)
}

/// p-generalized Dirichlet on the p-sphere: a chain over `d − 2` latents
/// closed by `|x_{w_{d-1}}|^p = 1 − Σ|x_i|^p`. The parameters of the
/// closing coordinate do not enter the law.
pub fn pgd_sphere_dm(
    p: f64,
    a: &[f64],
    b: &[f64],
    pivot: usize,
    perm: Vec<usize>,
    orthant: Orthant,
) -> Result<DependencyModel> {
    let d = perm.len() + 1;
    if d < 2 {
        return Err(invalid("sphere models need d ≥ 2"));
    }
    check_order(d, pivot, &perm)?;
    check_ab(a, b, d)?;
    let (pb, lb) = chain_b(a, b, pivot, &perm, d - 2)?;
    Chain {
        family: "pgd_sphere",
        p,
        orthant,
        sphere: true,
    }
    .build(a, pb, &lb, pivot, perm)
}

/// Uniform law in the unit p-ball (or its positive orthant).
pub fn uniform_pball_dm(p: f64, pivot: usize, perm: Vec<usize>, orthant: Orthant) -> Result<DependencyModel> {
    let d = perm.len() + 1;
    if !(p > 0.0 && p.is_finite()) {
        return Err(invalid(format!("p must be positive, got {p}")));
    }
    let mut m = pgd_dm(p, &vec![1.0 / p; d], &vec![1.0; d], pivot, perm, orthant)?;
    m.family = "uniform_pball".into();
    Ok(m)
}

/// p-GD(1/p, 1) law on the p-sphere; for `p = 1` and the positive orthant
/// this is the flat Dirichlet on the simplex.
pub fn uniform_psphere_dm(p: f64, pivot: usize, perm: Vec<usize>, orthant: Orthant) -> Result<DependencyModel> {
    let d = perm.len() + 1;
    if !(p > 0.0 && p.is_finite()) {
        return Err(invalid(format!("p must be positive, got {p}")));
    }
    let mut m = pgd_sphere_dm(p, &vec![1.0 / p; d], &vec![1.0; d], pivot, perm, orthant)?;
    m.family = "uniform_psphere".into();
    Ok(m)
}
