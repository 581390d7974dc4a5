//! Dependency models `X_{∼j} = r_j(X_j, Z)`.
//!
//! A model draws the pivot `X_j` from its marginal law, draws independent
//! latents `Z`, and evaluates a deterministic map whose `k`-th output (in
//! model order `w_1, …, w_{d-1}`) depends on the pivot and the first `k`
//! latents only.

pub mod constrained;
pub mod elliptical;
pub mod simplex;
pub mod spec;

use std::fmt;
use std::sync::Arc;

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::error::{invalid, Error, Result};
use crate::numerics::{CovarianceMatrix, RngStream};
use crate::univariate::DistributionSpec;

pub use spec::{build_dm, DmSpec, Family, Orthant, QuadMode, SumMode};

/// Deterministic part of a model: `(pivot, latents, outputs in model order)`.
pub type DependencyFn = Arc<dyn Fn(f64, &[f64], &mut [f64]) -> Result<()> + Send + Sync>;

/// Conditional quantile `u ↦ F⁻¹(u | history)`; `history` holds the pivot
/// followed by the outputs produced so far.
pub type ConditionalQuantile = Arc<dyn Fn(f64, &[f64]) -> Result<f64> + Send + Sync>;

/// Stream id used for batch sampling; rows read from its substreams.
const SAMPLE_STREAM: u64 = 0x5A4D_504C_4500_0001;

/// An executable dependency model.
#[derive(Clone)]
pub struct DependencyModel {
    family: String,
    pivot: usize,
    perm: Vec<usize>,
    pivot_law: DistributionSpec,
    latent_laws: Vec<DistributionSpec>,
    map: DependencyFn,
    digest: Option<String>,
}

impl fmt::Debug for DependencyModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("DependencyModel")
            .field("family", &self.family)
            .field("pivot", &self.pivot)
            .field("perm", &self.perm)
            .field("pivot_law", &self.pivot_law)
            .field("latent_laws", &self.latent_laws)
            .finish_non_exhaustive()
    }
}

/// Checks that `perm` lists every index of `0..d` except `pivot` exactly once.
pub fn check_order(d: usize, pivot: usize, perm: &[usize]) -> Result<()> {
    if pivot >= d {
        return Err(invalid(format!("pivot {} outside 1..={d}", pivot + 1)));
    }
    if perm.len() + 1 != d {
        return Err(invalid(format!(
            "permutation has {} entries, expected {}",
            perm.len(),
            d - 1
        )));
    }
    let mut seen = vec![false; d];
    seen[pivot] = true;
    for &w in perm {
        if w >= d || seen[w] {
            return Err(invalid(format!(
                "permutation entry {} is repeated, out of range or equal to the pivot",
                w + 1
            )));
        }
        seen[w] = true;
    }
    Ok(())
}

/// The remaining indices in increasing order.
pub fn default_perm(d: usize, pivot: usize) -> Vec<usize> {
    (0..d).filter(|&i| i != pivot).collect()
}

impl DependencyModel {
    /// Assembles a model. Indices are 0-based; `latent_laws` may be shorter
    /// than `d - 1` when trailing outputs are closures of earlier ones.
    pub fn new(
        family: impl Into<String>,
        pivot: usize,
        perm: Vec<usize>,
        pivot_law: DistributionSpec,
        latent_laws: Vec<DistributionSpec>,
        map: DependencyFn,
    ) -> Result<Self> {
        let d = perm.len() + 1;
        check_order(d, pivot, &perm)?;
        if latent_laws.len() > d - 1 {
            return Err(invalid("more latents than outputs"));
        }
        pivot_law.validate()?;
        for law in &latent_laws {
            law.validate()?;
        }
        Ok(Self {
            family: family.into(),
            pivot,
            perm,
            pivot_law,
            latent_laws,
            map,
            digest: None,
        })
    }

    pub fn family(&self) -> &str {
        &self.family
    }
    pub fn dim(&self) -> usize {
        self.perm.len() + 1
    }
    /// 0-based pivot index.
    pub fn pivot(&self) -> usize {
        self.pivot
    }
    /// 0-based output order `w`.
    pub fn perm(&self) -> &[usize] {
        &self.perm
    }
    pub fn pivot_law(&self) -> &DistributionSpec {
        &self.pivot_law
    }
    pub fn latent_laws(&self) -> &[DistributionSpec] {
        &self.latent_laws
    }
    pub fn digest(&self) -> Option<&str> {
        self.digest.as_deref()
    }
    pub(crate) fn with_digest(mut self, digest: String) -> Self {
        self.digest = Some(digest);
        self
    }

    /// Pivot followed by the latents: the independent inputs of the map.
    pub fn input_laws(&self) -> Vec<DistributionSpec> {
        std::iter::once(self.pivot_law.clone())
            .chain(self.latent_laws.iter().cloned())
            .collect()
    }

    /// Evaluates the map without support checks. `out` is in model order.
    pub fn evaluate(&self, x_j: f64, z: &[f64], out: &mut [f64]) -> Result<()> {
        (self.map)(x_j, z, out)
    }

    /// Outputs `(x_{w_1}, …, x_{w_{d-1}})` for a pivot value and latents.
    pub fn push_forward(&self, x_j: f64, z: &[f64]) -> Result<Vec<f64>> {
        if !self.pivot_law.in_open_support(x_j) {
            return Err(Error::Domain(format!(
                "pivot value {x_j} outside the support of {}",
                self.pivot_law
            )));
        }
        if z.len() != self.latent_laws.len() {
            return Err(invalid(format!(
                "expected {} latents, got {}",
                self.latent_laws.len(),
                z.len()
            )));
        }
        let mut out = vec![0.0; self.dim() - 1];
        self.evaluate(x_j, z, &mut out)?;
        Ok(out)
    }

    /// Draws one row into `row` (natural column order). `scratch` needs
    /// room for the latents and the outputs.
    fn sample_row(&self, rng: &mut RngStream, row: &mut [f64], scratch: &mut Vec<f64>) -> Result<()> {
        let m = self.latent_laws.len();
        scratch.clear();
        let x_j = self.pivot_law.sample(rng)?;
        for law in &self.latent_laws {
            scratch.push(law.sample(rng)?);
        }
        scratch.resize(m + self.perm.len(), 0.0);
        let (z, out) = scratch.split_at_mut(m);
        (self.map)(x_j, z, out)?;
        row[self.pivot] = x_j;
        for (k, &w) in self.perm.iter().enumerate() {
            row[w] = out[k];
        }
        Ok(())
    }

    /// `n` i.i.d. rows. Row `i` reads only from substream `i` of the seed,
    /// so the result does not depend on the number of worker threads.
    pub fn sample_batch(&self, n: usize, seed: u64) -> Result<SampleBatch> {
        if n == 0 {
            return Err(invalid("sample size must be at least 1"));
        }
        let d = self.dim();
        let root = RngStream::new(seed, SAMPLE_STREAM);
        let mut values = vec![0.0; n * d];
        values
            .par_chunks_mut(d)
            .enumerate()
            .try_for_each_init(Vec::new, |scratch, (i, row)| {
                let mut rng = root.substream(i as u64);
                self.sample_row(&mut rng, row, scratch)
            })?;
        Ok(SampleBatch {
            n,
            d,
            values,
            seed,
            digest: self.digest.clone().unwrap_or_default(),
        })
    }
}

/// `n × d` realizations in natural column order.
#[derive(Clone, Debug, PartialEq)]
pub struct SampleBatch {
    pub n: usize,
    pub d: usize,
    /// Row-major values.
    pub values: Vec<f64>,
    pub seed: u64,
    pub digest: String,
}

impl SampleBatch {
    pub fn from_rows(d: usize, values: Vec<f64>, seed: u64) -> Self {
        assert_eq!(values.len() % d, 0, "ragged sample");
        Self {
            n: values.len() / d,
            d,
            values,
            seed,
            digest: String::new(),
        }
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.d..(i + 1) * self.d]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.values.chunks_exact(self.d)
    }

    pub fn column(&self, k: usize) -> Vec<f64> {
        self.rows().map(|r| r[k]).collect()
    }

    /// Same batch with `f` applied to every entry.
    pub fn map_values(&self, f: impl Fn(f64) -> f64) -> Self {
        Self {
            values: self.values.iter().map(|&x| f(x)).collect(),
            ..self.clone()
        }
    }

    pub fn mean(&self) -> Vec<f64> {
        let mut m = vec![0.0; self.d];
        for r in self.rows() {
            for (a, x) in m.iter_mut().zip(r) {
                *a += x;
            }
        }
        m.iter().map(|a| a / self.n as f64).collect()
    }

    /// Unbiased sample covariance.
    pub fn covariance(&self) -> DMatrix<f64> {
        let m = self.mean();
        let mut c = DMatrix::zeros(self.d, self.d);
        for r in self.rows() {
            for a in 0..self.d {
                for b in 0..=a {
                    c[(a, b)] += (r[a] - m[a]) * (r[b] - m[b]);
                }
            }
        }
        for a in 0..self.d {
            for b in 0..=a {
                let v = c[(a, b)] / (self.n as f64 - 1.0);
                c[(a, b)] = v;
                c[(b, a)] = v;
            }
        }
        c
    }
}

/// Model of `Y = L X + μ`, with `L` lower triangular in model order
/// (pivot first, then `w`) and `μ` in natural order.
pub fn linear_lift(model: &DependencyModel, l: &DMatrix<f64>, mu: &[f64]) -> Result<DependencyModel> {
    let d = model.dim();
    if l.nrows() != d || l.ncols() != d || mu.len() != d {
        return Err(invalid(format!("lift needs a {d}×{d} matrix and {d} shifts")));
    }
    for r in 0..d {
        for c in r + 1..d {
            if l[(r, c)] != 0.0 {
                return Err(Error::NotLowerTriangular { row: r, col: c });
            }
        }
    }
    let l00 = l[(0, 0)];
    if l00 == 0.0 || !l00.is_finite() {
        return Err(Error::SingularLift { index: model.pivot + 1 });
    }
    let mu_model: Vec<f64> = std::iter::once(mu[model.pivot])
        .chain(model.perm.iter().map(|&w| mu[w]))
        .collect();
    let inner = model.map.clone();
    let lm = l.clone();
    let map: DependencyFn = Arc::new(move |y_j, z, out| {
        let x0 = (y_j - mu_model[0]) / l00;
        inner(x0, z, out)?;
        // row k uses inner outputs 0..=k, so fill from the bottom up in place
        for k in (0..out.len()).rev() {
            let mut acc = mu_model[k + 1] + lm[(k + 1, 0)] * x0;
            for i in 0..=k {
                acc += lm[(k + 1, i + 1)] * out[i];
            }
            out[k] = acc;
        }
        Ok(())
    });
    DependencyModel::new(
        model.family.clone(),
        model.pivot,
        model.perm.clone(),
        DistributionSpec::affine(model.pivot_law.clone(), l00, mu[model.pivot]),
        model.latent_laws.clone(),
        map,
    )
}

/// Lifts by the Cholesky factor of `sigma` reordered to the model order.
pub fn lift_by_covariance(model: &DependencyModel, sigma: &CovarianceMatrix, mu: &[f64]) -> Result<DependencyModel> {
    let order = model_order(model.pivot, &model.perm);
    let reordered = sigma.reordered(&order)?;
    linear_lift(model, reordered.chol(), mu)
}

/// `(pivot, w_1, …, w_{d-1})`.
pub fn model_order(pivot: usize, perm: &[usize]) -> Vec<usize> {
    std::iter::once(pivot).chain(perm.iter().copied()).collect()
}

/// Nested conditional-quantile chain with uniform latents:
/// `x_{w_k} = F⁻¹_{w_k | j, w_1..w_{k-1}}(z_k | history)`.
pub fn chain_from_conditionals(
    pivot: usize,
    perm: Vec<usize>,
    pivot_law: DistributionSpec,
    conditionals: Vec<ConditionalQuantile>,
) -> Result<DependencyModel> {
    if conditionals.len() != perm.len() {
        return Err(invalid("need one conditional quantile per output"));
    }
    spot_check_monotone(&pivot_law, &conditionals)?;
    let conds = conditionals.clone();
    let map: DependencyFn = Arc::new(move |x_j, z, out| {
        let mut history = Vec::with_capacity(conds.len() + 1);
        history.push(x_j);
        for (k, q) in conds.iter().enumerate() {
            let x = q(z[k], &history)?;
            out[k] = x;
            history.push(x);
        }
        Ok(())
    });
    let latents = vec![DistributionSpec::uniform(0.0, 1.0); perm.len()];
    DependencyModel::new("chain", pivot, perm, pivot_law, latents, map)
}

/// Evaluates every stage on a grid of probabilities along a few histories
/// and rejects any stage whose quantile decreases.
fn spot_check_monotone(pivot_law: &DistributionSpec, conds: &[ConditionalQuantile]) -> Result<()> {
    const GRID: [f64; 9] = [0.05, 0.15, 0.25, 0.4, 0.5, 0.6, 0.75, 0.85, 0.95];
    for &pu in &[0.2, 0.5, 0.8] {
        let mut history = vec![pivot_law.quantile(pu)?];
        for (stage, q) in conds.iter().enumerate() {
            let mut prev = f64::NEG_INFINITY;
            for &u in &GRID {
                let x = q(u, &history)?;
                if x < prev {
                    return Err(Error::MonotonicityViolation { stage: stage + 1 });
                }
                prev = x;
            }
            history.push(q(0.5, &history)?);
        }
    }
    Ok(())
}
