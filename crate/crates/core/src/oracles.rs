//! Brute-force reference samplers and two-sample tests used to validate the
//! closed-form models.

use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::dm::{QuadMode, SampleBatch};
use crate::error::{invalid, Error, Result};
use crate::numerics::{CovarianceMatrix, RngStream};
use crate::univariate::DistributionSpec;

const REJECTION_STREAM: u64 = 0x4F52_4143_4C45_0001;
const MIXTURE_STREAM: u64 = 0x4F52_4143_4C45_0002;
const SPHERE_STREAM: u64 = 0x4F52_4143_4C45_0003;
const DIRICHLET_STREAM: u64 = 0x4F52_4143_4C45_0004;
const RATIO_STREAM: u64 = 0x4F52_4143_4C45_0005;
const ENERGY_STREAM: u64 = 0x4F52_4143_4C45_0006;

/// Smallest acceptance rate tolerated by the rejection sampler.
pub const MIN_ACCEPTANCE: f64 = 1e-6;
const MIN_TRIALS_BEFORE_ABORT: usize = 1_000_000;
const TRIAL_CHUNK: usize = 1 << 14;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ConstraintKind {
    /// `|Σ w_i x_i − c| ≤ ε`
    SumEq,
    /// `Σ w_i x_i < c`
    SumLt,
    /// `|Σ w_i x_i² − c| ≤ ε`
    QuadEq,
    /// `Σ w_i x_i² < c`
    QuadLt,
}

/// A single constraint on `Σ w_i x_i` or `Σ w_i x_i²`; unit weights when
/// `weights` is `None`.
#[derive(Clone, Debug, PartialEq)]
pub struct ConstraintSpec {
    pub kind: ConstraintKind,
    pub c: f64,
    pub weights: Option<Vec<f64>>,
}

impl ConstraintSpec {
    pub fn new(kind: ConstraintKind, c: f64) -> Self {
        Self { kind, c, weights: None }
    }

    pub fn weighted(kind: ConstraintKind, c: f64, weights: Vec<f64>) -> Self {
        Self {
            kind,
            c,
            weights: Some(weights),
        }
    }

    /// Left-hand side `Σ w_i x_i` or `Σ w_i x_i²`.
    pub fn lhs(&self, x: &[f64]) -> f64 {
        let w = |i: usize| self.weights.as_ref().map_or(1.0, |w| w[i]);
        match self.kind {
            ConstraintKind::SumEq | ConstraintKind::SumLt => x.iter().enumerate().map(|(i, v)| w(i) * v).sum(),
            ConstraintKind::QuadEq | ConstraintKind::QuadLt => x.iter().enumerate().map(|(i, v)| w(i) * v * v).sum(),
        }
    }

    pub fn accepts(&self, x: &[f64], band_eps: f64) -> bool {
        let s = self.lhs(x);
        match self.kind {
            ConstraintKind::SumEq | ConstraintKind::QuadEq => (s - self.c).abs() <= band_eps,
            ConstraintKind::SumLt | ConstraintKind::QuadLt => s < self.c,
        }
    }
}

/// Result of a rejection run.
#[derive(Clone, Debug, PartialEq)]
pub struct RejectionBatch {
    pub batch: SampleBatch,
    pub trials: usize,
}

impl RejectionBatch {
    pub fn acceptance_rate(&self) -> f64 {
        self.batch.n as f64 / self.trials as f64
    }
}

/// `n` rows of independent draws from `base` that satisfy `constraint`
/// (equality kinds within the band `band_eps`). Trial `i` reads substream `i`.
pub fn rejection_sample(
    base: &[DistributionSpec],
    constraint: &ConstraintSpec,
    band_eps: f64,
    n: usize,
    seed: u64,
) -> Result<RejectionBatch> {
    let d = base.len();
    if d == 0 || n == 0 {
        return Err(invalid("need at least one coordinate and one row"));
    }
    if constraint.weights.as_ref().is_some_and(|w| w.len() != d) {
        return Err(invalid("one weight per coordinate"));
    }
    for law in base {
        law.validate()?;
    }
    let root = RngStream::new(seed, REJECTION_STREAM);
    let wave = rayon::current_num_threads().max(1) * 4;
    let mut values = Vec::with_capacity(n * d);
    let mut trials = 0usize;
    let mut chunk = 0usize;
    while values.len() < n * d {
        // accepted rows of each chunk, tagged with their global trial index
        let found: Vec<Vec<(usize, Vec<f64>)>> = (chunk..chunk + wave)
            .into_par_iter()
            .map(|c| {
                let mut acc = Vec::new();
                for t in c * TRIAL_CHUNK..(c + 1) * TRIAL_CHUNK {
                    let mut rng = root.substream(t as u64);
                    let x = base
                        .iter()
                        .map(|law| law.sample(&mut rng))
                        .collect::<Result<Vec<_>>>()?;
                    if constraint.accepts(&x, band_eps) {
                        acc.push((t, x));
                        if acc.len() == n {
                            break;
                        }
                    }
                }
                Ok(acc)
            })
            .collect::<Result<_>>()?;
        chunk += wave;
        trials = chunk * TRIAL_CHUNK;
        'fill: for rows in found {
            for (t, x) in rows {
                values.extend_from_slice(&x);
                if values.len() == n * d {
                    trials = t + 1;
                    break 'fill;
                }
            }
        }
        let rate = values.len() as f64 / d as f64 / trials as f64;
        if values.len() < n * d && trials >= MIN_TRIALS_BEFORE_ABORT && rate < MIN_ACCEPTANCE {
            return Err(Error::AcceptanceTooLow {
                rate,
                min: MIN_ACCEPTANCE,
            });
        }
    }
    Ok(RejectionBatch {
        batch: SampleBatch::from_rows(d, values, seed),
        trials,
    })
}

fn per_row<F>(n: usize, d: usize, seed: u64, stream: u64, f: F) -> Result<SampleBatch>
where
    F: Fn(&mut RngStream, &mut [f64]) -> Result<()> + Sync,
{
    if n == 0 || d == 0 {
        return Err(invalid("need at least one row and one coordinate"));
    }
    let root = RngStream::new(seed, stream);
    let mut values = vec![0.0; n * d];
    values
        .par_chunks_mut(d)
        .enumerate()
        .try_for_each(|(i, row)| f(&mut root.substream(i as u64), row))?;
    Ok(SampleBatch::from_rows(d, values, seed))
}

fn normals(rng: &mut RngStream, out: &mut [f64]) {
    for x in out.iter_mut() {
        *x = StandardNormal.sample(rng);
    }
}

/// `t_d(ν, μ, Σ)` as the normal variance mixture `√W L ξ + μ`,
/// `W ~ InvGamma(ν/2, ν/2)`.
pub fn mixture_t_sample(nu: f64, mu: &[f64], sigma: &CovarianceMatrix, n: usize, seed: u64) -> Result<SampleBatch> {
    let d = sigma.dim();
    if mu.len() != d {
        return Err(invalid("mean and scale dimensions differ"));
    }
    let w_law = DistributionSpec::InverseGamma {
        shape: nu / 2.0,
        scale: nu / 2.0,
    };
    w_law.validate()?;
    let l = sigma.chol().clone();
    per_row(n, d, seed, MIXTURE_STREAM, |rng, row| {
        let w = w_law.sample(rng)?;
        let mut xi = vec![0.0; d];
        normals(rng, &mut xi);
        for i in 0..d {
            let s: f64 = (0..=i).map(|k| l[(i, k)] * xi[k]).sum();
            row[i] = mu[i] + w.sqrt() * s;
        }
        Ok(())
    })
}

/// Uniform rows on (`On`) or in (`In`) the sphere of radius `√c`.
pub fn sphere_oracle(d: usize, c: f64, mode: QuadMode, n: usize, seed: u64) -> Result<SampleBatch> {
    if d < 2 || !(c > 0.0) {
        return Err(invalid("sphere oracle needs d ≥ 2 and c > 0"));
    }
    per_row(n, d, seed, SPHERE_STREAM, |rng, row| {
        normals(rng, row);
        let norm = row.iter().map(|x| x * x).sum::<f64>().sqrt();
        let mut r = c.sqrt() / norm;
        if mode == QuadMode::In {
            r *= rng.open01().powf(1.0 / d as f64);
        }
        for x in row.iter_mut() {
            *x *= r;
        }
        Ok(())
    })
}

/// Dirichlet(α) on the full simplex by gamma normalization; every row has
/// `alpha.len()` coordinates summing to 1.
pub fn dirichlet_oracle(alpha: &[f64], n: usize, seed: u64) -> Result<SampleBatch> {
    let laws: Vec<DistributionSpec> = alpha.iter().map(|&a| DistributionSpec::gamma(a, 1.0)).collect();
    for l in &laws {
        l.validate()?;
    }
    per_row(n, alpha.len(), seed, DIRICHLET_STREAM, |rng, row| {
        for (x, l) in row.iter_mut().zip(&laws) {
            *x = l.sample(rng)?;
        }
        let s: f64 = row.iter().sum();
        for x in row.iter_mut() {
            *x /= s;
        }
        Ok(())
    })
}

/// Standard multivariate Cauchy `C_d(0, I)` as `ξ / |η|`, with `ξ ~ N(0, I_d)`
/// and `η ~ N(0, 1)` independent.
pub fn cauchy_ratio_oracle(d: usize, n: usize, seed: u64) -> Result<SampleBatch> {
    per_row(n, d, seed, RATIO_STREAM, |rng, row| {
        normals(rng, row);
        let eta: f64 = StandardNormal.sample(rng);
        for x in row.iter_mut() {
            *x /= eta.abs();
        }
        Ok(())
    })
}

/// Outcome of a hypothesis test; `reject` iff `statistic > critical_value`.
#[derive(Clone, Debug, PartialEq)]
pub struct TestOutcome {
    pub statistic: f64,
    pub critical_value: f64,
    pub level: f64,
    pub reject: bool,
    pub n_a: usize,
    pub n_b: usize,
}

const MIN_TEST_SAMPLES: usize = 100;
/// Smallest permutation count accepted by [`energy_test`].
pub const MIN_PERMUTATIONS: usize = 200;

fn check_level(level: f64) -> Result<()> {
    if level > 0.0 && level < 1.0 {
        Ok(())
    } else {
        Err(invalid(format!("level must lie in (0, 1), got {level}")))
    }
}

/// Asymptotic Kolmogorov critical constant `√(−½ ln(α/2))`.
pub fn ks_critical_constant(level: f64) -> f64 {
    (-0.5 * (level / 2.0).ln()).sqrt()
}

fn sorted(x: &[f64]) -> Vec<f64> {
    let mut v = x.to_vec();
    v.sort_by(|a, b| a.total_cmp(b));
    v
}

/// One-sample Kolmogorov–Smirnov test against a continuous CDF.
pub fn ks_test(samples: &[f64], cdf: impl Fn(f64) -> f64, level: f64) -> Result<TestOutcome> {
    check_level(level)?;
    let n = samples.len();
    if n < MIN_TEST_SAMPLES {
        return Err(Error::TooFewSamples {
            min: MIN_TEST_SAMPLES,
            got: n,
        });
    }
    let xs = sorted(samples);
    let nf = n as f64;
    let d = xs
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            (f - i as f64 / nf).max((i + 1) as f64 / nf - f)
        })
        .fold(0.0, f64::max);
    let crit = ks_critical_constant(level) / nf.sqrt();
    Ok(TestOutcome {
        statistic: d,
        critical_value: crit,
        level,
        reject: d > crit,
        n_a: n,
        n_b: 0,
    })
}

/// One-sample KS test against a law.
pub fn ks_test_law(samples: &[f64], law: &DistributionSpec, level: f64) -> Result<TestOutcome> {
    ks_test(samples, |x| law.cdf(x), level)
}

/// Two-sample Kolmogorov–Smirnov test.
pub fn ks_two_sample(a: &[f64], b: &[f64], level: f64) -> Result<TestOutcome> {
    check_level(level)?;
    let (n, m) = (a.len(), b.len());
    if n.min(m) < MIN_TEST_SAMPLES {
        return Err(Error::TooFewSamples {
            min: MIN_TEST_SAMPLES,
            got: n.min(m),
        });
    }
    let (xa, xb) = (sorted(a), sorted(b));
    let (mut i, mut j, mut d) = (0, 0, 0.0f64);
    while i < n && j < m {
        let x = xa[i].min(xb[j]);
        while i < n && xa[i] <= x {
            i += 1;
        }
        while j < m && xb[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / n as f64 - j as f64 / m as f64).abs());
    }
    let (nf, mf) = (n as f64, m as f64);
    let crit = ks_critical_constant(level) / (nf * mf / (nf + mf)).sqrt();
    Ok(TestOutcome {
        statistic: d,
        critical_value: crit,
        level,
        reject: d > crit,
        n_a: n,
        n_b: m,
    })
}

const ENERGY_TILE: usize = 256;

/// Energy-distance two-sample test with a label-permutation null.
///
/// The statistic is `nm/(n+m) (2 E|A−B| − E|A−A'| − E|B−B'|)` in V-statistic
/// form. For every labelling `π` (observed first) the within-group sum
/// `πᵀ D π` is accumulated over row tiles of the pooled distance matrix `D`,
/// so `D` is never stored.
pub fn energy_test(
    a: &SampleBatch,
    b: &SampleBatch,
    level: f64,
    n_permutations: usize,
    seed: u64,
) -> Result<TestOutcome> {
    check_level(level)?;
    if a.d != b.d {
        return Err(invalid("samples have different dimensions"));
    }
    let (n, m) = (a.n, b.n);
    if n.min(m) < MIN_TEST_SAMPLES {
        return Err(Error::TooFewSamples {
            min: MIN_TEST_SAMPLES,
            got: n.min(m),
        });
    }
    if n_permutations < MIN_PERMUTATIONS {
        return Err(Error::TooFewSamples {
            min: MIN_PERMUTATIONS,
            got: n_permutations,
        });
    }
    let d = a.d;
    let total = n + m;
    let pooled: Vec<f64> = a.values.iter().chain(&b.values).copied().collect();
    let cols = n_permutations + 1;
    let root = RngStream::new(seed, ENERGY_STREAM);
    // column k holds the indicator of group A under labelling k
    let mut labels = DMatrix::<f64>::zeros(total, cols);
    let mut idx: Vec<usize> = (0..total).collect();
    for k in 0..cols {
        if k > 0 {
            idx = (0..total).collect();
            idx.shuffle(&mut root.substream(k as u64));
        }
        for &i in &idx[..n] {
            labels[(i, k)] = 1.0;
        }
    }
    let tiles: Vec<(Vec<f64>, f64, Vec<f64>)> = (0..total.div_ceil(ENERGY_TILE))
        .into_par_iter()
        .map(|t| {
            let lo = t * ENERGY_TILE;
            let hi = (lo + ENERGY_TILE).min(total);
            let rows = hi - lo;
            let mut dist = DMatrix::<f64>::zeros(rows, total);
            for r in 0..rows {
                let x = &pooled[(lo + r) * d..(lo + r + 1) * d];
                for c in 0..total {
                    let y = &pooled[c * d..(c + 1) * d];
                    let s: f64 = x.iter().zip(y).map(|(p, q)| (p - q) * (p - q)).sum();
                    dist[(r, c)] = s.sqrt();
                }
            }
            let row_sums: Vec<f64> = (0..rows).map(|r| dist.row(r).sum()).collect();
            let dp = &dist * &labels;
            let mut q = vec![0.0; cols];
            for (k, qk) in q.iter_mut().enumerate() {
                for r in 0..rows {
                    *qk += labels[(lo + r, k)] * dp[(r, k)];
                }
            }
            (q, row_sums.iter().sum(), row_sums)
        })
        .collect();
    let mut q = vec![0.0; cols];
    let mut grand = 0.0;
    let mut row_sums = Vec::with_capacity(total);
    for (tq, ts, rs) in tiles {
        for (a, b) in q.iter_mut().zip(tq) {
            *a += b;
        }
        grand += ts;
        row_sums.extend(rs);
    }
    let (nf, mf) = (n as f64, m as f64);
    let stats: Vec<f64> = (0..cols)
        .map(|k| {
            let s_aa = q[k];
            let pr: f64 = (0..total).map(|i| labels[(i, k)] * row_sums[i]).sum();
            let s_ab = pr - s_aa;
            let s_bb = grand - s_aa - 2.0 * s_ab;
            nf * mf / (nf + mf) * (2.0 * s_ab / (nf * mf) - s_aa / (nf * nf) - s_bb / (mf * mf))
        })
        .collect();
    let mut null = stats[1..].to_vec();
    null.sort_by(|x, y| x.total_cmp(y));
    let pos = ((1.0 - level) * n_permutations as f64).ceil() as usize;
    let crit = null[pos.clamp(1, n_permutations) - 1];
    Ok(TestOutcome {
        statistic: stats[0],
        critical_value: crit,
        level,
        reject: stats[0] > crit,
        n_a: n,
        n_b: m,
    })
}
