//! Generalized sensitivity indices of a model's inputs on its vector output,
//! and the selection of the most efficient dependency model.
//!
//! For an input group `u` with first-order matrix `D_u`, total matrix
//! `D_u^tot` and output covariance `Σ`:
//! first type `tr(D)/tr(Σ)`, second type `‖D‖_F/‖Σ‖_F`.

use std::fmt;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::dm::{DependencyModel, DmSpec, Family};
use crate::error::{invalid, Error, Result};
use crate::numerics::quadrature::integrate_with_breaks;
use crate::numerics::{order_free_sum, CovarianceMatrix, RngStream};
use crate::univariate::DistributionSpec;

/// Replicate batches used for standard errors.
pub const BATCHES: usize = 16;
/// Default tie tolerance for Monte Carlo reports.
pub const TIE_TOL_MC: f64 = 1e-3;
/// Default tie tolerance for analytic reports.
pub const TIE_TOL_ANALYTIC: f64 = 1e-12;

const STREAM_A: u64 = 0x4753_495F_4100_0001;
const STREAM_B: u64 = 0x4753_495F_4200_0002;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Method {
    Analytic,
    PickFreeze,
}

impl Method {
    pub fn default_tol(self) -> f64 {
        match self {
            Method::Analytic => TIE_TOL_ANALYTIC,
            Method::PickFreeze => TIE_TOL_MC,
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::Analytic => "analytic",
            Method::PickFreeze => "pick_freeze",
        })
    }
}

impl std::str::FromStr for Method {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "analytic" => Ok(Method::Analytic),
            "pick_freeze" => Ok(Method::PickFreeze),
            _ => Err(invalid(format!("unknown method `{s}`"))),
        }
    }
}

/// The four indices of one pivot, with standard errors (zero for analytic
/// reports). `pivot` is 0-based.
#[derive(Clone, Debug, PartialEq)]
pub struct GsiReport {
    pub pivot: usize,
    pub method: Method,
    pub n: usize,
    pub seed: u64,
    pub fo_trace: f64,
    pub tot_trace: f64,
    pub fo_frob: f64,
    pub tot_frob: f64,
    pub se_fo_trace: f64,
    pub se_tot_trace: f64,
    pub se_fo_frob: f64,
    pub se_tot_frob: f64,
}

const FIELDS: [&str; 12] = [
    "pivot",
    "method",
    "n",
    "seed",
    "gsi_fo_trace",
    "gsi_tot_trace",
    "gsi_fo_frob",
    "gsi_tot_frob",
    "stderr_fo_trace",
    "stderr_tot_trace",
    "stderr_fo_frob",
    "stderr_tot_frob",
];

impl GsiReport {
    fn values(&self) -> [String; 12] {
        let num = |x: f64| format!("{x:.16e}");
        [
            (self.pivot + 1).to_string(),
            self.method.to_string(),
            self.n.to_string(),
            self.seed.to_string(),
            num(self.fo_trace),
            num(self.tot_trace),
            num(self.fo_frob),
            num(self.tot_frob),
            num(self.se_fo_trace),
            num(self.se_tot_trace),
            num(self.se_fo_frob),
            num(self.se_tot_frob),
        ]
    }

    /// `key=value` lines, pivot 1-based.
    pub fn to_kv(&self) -> String {
        FIELDS
            .iter()
            .zip(self.values())
            .map(|(k, v)| format!("{k}={v}\n"))
            .collect()
    }

    pub fn csv_header() -> String {
        FIELDS.join(",")
    }

    pub fn to_csv_row(&self) -> String {
        self.values().join(",")
    }
}

/// A function of independent inputs, as seen by the estimators.
pub trait SensitivityModel: Sync {
    fn input_laws(&self) -> Vec<DistributionSpec>;
    fn output_dim(&self) -> usize;
    fn eval(&self, inputs: &[f64], out: &mut [f64]) -> Result<()>;
}

/// Inputs are the pivot followed by the latents; outputs are in model order.
impl SensitivityModel for DependencyModel {
    fn input_laws(&self) -> Vec<DistributionSpec> {
        DependencyModel::input_laws(self)
    }
    fn output_dim(&self) -> usize {
        self.dim() - 1
    }
    fn eval(&self, inputs: &[f64], out: &mut [f64]) -> Result<()> {
        self.evaluate(inputs[0], &inputs[1..], out)
    }
}

/// Estimated sensitivity matrices of one input group.
#[derive(Clone, Debug, PartialEq)]
pub struct SfMatrices {
    pub first_order: DMatrix<f64>,
    pub total: DMatrix<f64>,
    pub sigma: DMatrix<f64>,
}

#[derive(Clone, Copy, Debug)]
struct Indices([f64; 4]);

fn trace(m: &DMatrix<f64>) -> f64 {
    let mut d: Vec<f64> = m.diagonal().iter().copied().collect();
    order_free_sum(&mut d)
}

fn frobenius(m: &DMatrix<f64>) -> f64 {
    let mut sq: Vec<f64> = m.iter().map(|x| x * x).collect();
    order_free_sum(&mut sq).sqrt()
}

impl SfMatrices {
    fn indices(&self) -> Result<Indices> {
        let ts = trace(&self.sigma);
        if !(ts > 1e-14) {
            return Err(Error::DegenerateOutput);
        }
        let fs = frobenius(&self.sigma);
        Ok(Indices([
            trace(&self.first_order) / ts,
            trace(&self.total) / ts,
            frobenius(&self.first_order) / fs,
            frobenius(&self.total) / fs,
        ]))
    }
}

/// Per-batch sums of the pick-freeze design.
#[derive(Clone)]
struct Acc {
    n: usize,
    s_a: DVector<f64>,
    s_b: DVector<f64>,
    s_aa: DMatrix<f64>,
    s_bb: DMatrix<f64>,
    /// Σ f(A) (f(C) − f(B))ᵀ
    s_acb: DMatrix<f64>,
    /// Σ (f(C) − f(B))
    s_cb: DVector<f64>,
    /// Σ (f(A) − f(C')) (f(A) − f(C'))ᵀ
    s_tot: DMatrix<f64>,
}

impl Acc {
    fn new(q: usize) -> Self {
        Self {
            n: 0,
            s_a: DVector::zeros(q),
            s_b: DVector::zeros(q),
            s_aa: DMatrix::zeros(q, q),
            s_bb: DMatrix::zeros(q, q),
            s_acb: DMatrix::zeros(q, q),
            s_cb: DVector::zeros(q),
            s_tot: DMatrix::zeros(q, q),
        }
    }

    fn add(&mut self, o: &Acc) {
        self.n += o.n;
        self.s_a += &o.s_a;
        self.s_b += &o.s_b;
        self.s_aa += &o.s_aa;
        self.s_bb += &o.s_bb;
        self.s_acb += &o.s_acb;
        self.s_cb += &o.s_cb;
        self.s_tot += &o.s_tot;
    }

    fn matrices(&self) -> SfMatrices {
        let n = self.n as f64;
        let ma = &self.s_a / n;
        let mb = &self.s_b / n;
        let fo = (&self.s_acb - &ma * self.s_cb.transpose()) / n;
        let fo = (&fo + fo.transpose()) * 0.5;
        let sigma = (&self.s_aa - &ma * ma.transpose() * n + &self.s_bb - &mb * mb.transpose() * n) / (2.0 * (n - 1.0));
        SfMatrices {
            first_order: fo,
            total: &self.s_tot / (2.0 * n),
            sigma,
        }
    }
}

fn draw(laws: &[DistributionSpec], rng: &mut RngStream, out: &mut [f64]) -> Result<()> {
    for (x, law) in out.iter_mut().zip(laws) {
        *x = law.sample(rng)?;
    }
    Ok(())
}

fn run_batch<M: SensitivityModel + ?Sized>(
    model: &M,
    laws: &[DistributionSpec],
    in_u: &[bool],
    rows: std::ops::Range<usize>,
    seed: u64,
) -> Result<Acc> {
    let (p, q) = (laws.len(), model.output_dim());
    let root_a = RngStream::new(seed, STREAM_A);
    let root_b = RngStream::new(seed, STREAM_B);
    let mut acc = Acc::new(q);
    let (mut a, mut b, mut c, mut c2) = (vec![0.0; p], vec![0.0; p], vec![0.0; p], vec![0.0; p]);
    let mut fa = DVector::zeros(q);
    let mut fb = DVector::zeros(q);
    let mut fc = DVector::zeros(q);
    let mut fc2 = DVector::zeros(q);
    for i in rows {
        draw(laws, &mut root_a.substream(i as u64), &mut a)?;
        draw(laws, &mut root_b.substream(i as u64), &mut b)?;
        for k in 0..p {
            (c[k], c2[k]) = if in_u[k] { (a[k], b[k]) } else { (b[k], a[k]) };
        }
        model.eval(&a, fa.as_mut_slice())?;
        model.eval(&b, fb.as_mut_slice())?;
        model.eval(&c, fc.as_mut_slice())?;
        model.eval(&c2, fc2.as_mut_slice())?;
        let cb = &fc - &fb;
        let ac = &fa - &fc2;
        acc.n += 1;
        acc.s_a += &fa;
        acc.s_b += &fb;
        acc.s_aa.ger(1.0, &fa, &fa, 1.0);
        acc.s_bb.ger(1.0, &fb, &fb, 1.0);
        acc.s_acb.ger(1.0, &fa, &cb, 1.0);
        acc.s_cb += &cb;
        acc.s_tot.ger(1.0, &ac, &ac, 1.0);
    }
    Ok(acc)
}

fn check_inputs(laws: &[DistributionSpec]) -> Result<()> {
    match laws.iter().position(|l| !l.has_finite_variance()) {
        Some(i) => Err(Error::InfiniteVariance { input: i + 1 }),
        None => Ok(()),
    }
}

/// Pick-freeze estimates of `D_u`, `D_u^tot` and `Σ`, overall and per
/// replicate batch. `u` indexes the model inputs (0-based).
fn pick_freeze_batches<M: SensitivityModel + ?Sized>(
    model: &M,
    u: &[usize],
    n: usize,
    seed: u64,
) -> Result<(SfMatrices, Vec<SfMatrices>)> {
    let laws = model.input_laws();
    check_inputs(&laws)?;
    if u.is_empty() || u.iter().any(|&k| k >= laws.len()) {
        return Err(invalid("input group must be a nonempty set of input indices"));
    }
    if n < 2 * BATCHES {
        return Err(Error::TooFewSamples {
            min: 2 * BATCHES,
            got: n,
        });
    }
    let mut in_u = vec![false; laws.len()];
    for &k in u {
        in_u[k] = true;
    }
    let accs: Vec<Acc> = (0..BATCHES)
        .into_par_iter()
        .map(|b| run_batch(model, &laws, &in_u, b * n / BATCHES..(b + 1) * n / BATCHES, seed))
        .collect::<Result<_>>()?;
    let mut total = Acc::new(model.output_dim());
    for a in &accs {
        total.add(a);
    }
    Ok((total.matrices(), accs.iter().map(Acc::matrices).collect()))
}

/// Pick-freeze estimates of the sensitivity matrices of input group `u`.
pub fn pick_freeze_matrices<M: SensitivityModel + ?Sized>(
    model: &M,
    u: &[usize],
    n: usize,
    seed: u64,
) -> Result<SfMatrices> {
    Ok(pick_freeze_batches(model, u, n, seed)?.0)
}

/// Monte Carlo indices of input group `u` with `n` base rows. The report's
/// `pivot` is the first index of `u`.
pub fn gsi_pick_freeze<M: SensitivityModel + ?Sized>(model: &M, u: &[usize], n: usize, seed: u64) -> Result<GsiReport> {
    let (all, batches) = pick_freeze_batches(model, u, n, seed)?;
    let est = all.indices()?.0;
    let per: Vec<[f64; 4]> = batches
        .iter()
        .map(|m| m.indices().map(|i| i.0))
        .collect::<Result<_>>()?;
    let se = |k: usize| {
        let mut v: Vec<f64> = per.iter().map(|r| r[k]).collect();
        let mean = order_free_sum(&mut v.clone()) / BATCHES as f64;
        for x in v.iter_mut() {
            *x = (*x - mean).powi(2);
        }
        (order_free_sum(&mut v) / (BATCHES as f64 - 1.0) / BATCHES as f64).sqrt()
    };
    Ok(GsiReport {
        pivot: u[0],
        method: Method::PickFreeze,
        n,
        seed,
        fo_trace: est[0].max(0.0),
        tot_trace: est[1].max(0.0),
        fo_frob: est[2].max(0.0),
        tot_frob: est[3].max(0.0),
        se_fo_trace: se(0),
        se_tot_trace: se(1),
        se_fo_frob: se(2),
        se_tot_frob: se(3),
    })
}

/// Monte Carlo indices of a dependency model's pivot.
pub fn gsi_dm_pick_freeze(model: &DependencyModel, n: usize, seed: u64) -> Result<GsiReport> {
    let mut r = gsi_pick_freeze(model, &[0], n, seed)?;
    r.pivot = model.pivot();
    Ok(r)
}

fn analytic(pivot: usize, fo: [f64; 2], tot: [f64; 2]) -> GsiReport {
    GsiReport {
        pivot,
        method: Method::Analytic,
        n: 0,
        seed: 0,
        fo_trace: fo[0],
        tot_trace: tot[0],
        fo_frob: fo[1],
        tot_frob: tot[1],
        se_fo_trace: 0.0,
        se_tot_trace: 0.0,
        se_fo_frob: 0.0,
        se_tot_frob: 0.0,
    }
}

/// Exact indices of the Gaussian model with pivot `j`: the map is affine, so
/// `D = D^tot = Σ_{w,j} Σ_{j,w} / Σ_jj` and the output covariance is `Σ_{w,w}`.
pub fn gsi_gaussian_analytic(sigma: &CovarianceMatrix, pivot: usize, perm: &[usize]) -> Result<GsiReport> {
    let d = sigma.dim();
    if d < 2 {
        return Err(invalid("need at least two coordinates"));
    }
    crate::dm::check_order(d, pivot, perm)?;
    let q = d - 1;
    let sjj = sigma.get(pivot, pivot);
    let c: Vec<f64> = perm.iter().map(|&w| sigma.get(w, pivot)).collect();
    let dmat = DMatrix::from_fn(q, q, |a, b| (c[a] * c[b]) / sjj);
    let out = DMatrix::from_fn(q, q, |a, b| sigma.get(perm[a], perm[b]));
    let idx = SfMatrices {
        first_order: dmat.clone(),
        total: dmat,
        sigma: out,
    }
    .indices()?
    .0;
    let r = analytic(pivot, [idx[0], idx[2]], [idx[1], idx[3]]);
    Ok(r)
}

/// Indices of the trapezoid model with pivot 0 or 1 by quadrature.
///
/// The single output is `Z g(X)` with `Z ~ U(0,1)` independent of the pivot
/// `X`, so `Var = E[g²]/3 − E[g]²/4`, `D = Var(g)/4` and `D^tot = Var(g)/3`.
pub fn gsi_trapezoid_analytic(beta: f64, pivot: usize) -> Result<GsiReport> {
    let model = crate::dm::constrained::trapezoid_dm(beta, pivot)?;
    let law = model.pivot_law().clone();
    let density = move |x: f64| match law {
        DistributionSpec::TruncB1 { beta } => 2.0 * (1.0 - beta * x) / (2.0 - beta),
        DistributionSpec::Trapezoidal { beta } if x <= 1.0 - beta => 2.0 / (2.0 - beta),
        DistributionSpec::Trapezoidal { beta } => 2.0 * (1.0 - x) / (beta * (2.0 - beta)),
        _ => unreachable!("trapezoid pivots are TruncB1 or Trapezoidal"),
    };
    let g = |x: f64| -> f64 {
        let mut out = [0.0];
        model.evaluate(x, &[1.0], &mut out).expect("trapezoid map is total");
        out[0]
    };
    let breaks = [1.0 - beta];
    let tol = 1e-12;
    let m1 = integrate_with_breaks(|x| g(x) * density(x), 0.0, 1.0, &breaks, tol).0;
    let m2 = integrate_with_breaks(|x| g(x).powi(2) * density(x), 0.0, 1.0, &breaks, tol).0;
    let var_g = m2 - m1 * m1;
    let var = m2 / 3.0 - m1 * m1 / 4.0;
    let fo = var_g / 4.0 / var;
    let tot = var_g / 3.0 / var;
    Ok(analytic(pivot, [fo, fo], [tot, tot]))
}

/// Analytic report for the spec's pivot, when the family has one.
pub fn analytic_report(spec: &DmSpec) -> Result<GsiReport> {
    match &spec.family {
        Family::Gaussian { sigma, .. } => gsi_gaussian_analytic(sigma, spec.pivot, &spec.perm),
        Family::Trapezoid { beta } => gsi_trapezoid_analytic(*beta, spec.pivot),
        other => Err(Error::UnsupportedAnalytic(other.name().to_string())),
    }
}

/// Which criterion decided the selection.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TieResolution {
    SecondTypeTotal,
    FirstTypeTotal,
    FirstOrder,
    Equivalent,
}

impl fmt::Display for TieResolution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TieResolution::SecondTypeTotal => "second_type_total",
            TieResolution::FirstTypeTotal => "first_type_total",
            TieResolution::FirstOrder => "first_order",
            TieResolution::Equivalent => "equivalent",
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SelectionResult {
    /// 0-based index of the selected pivot.
    pub j_star: usize,
    pub ranking: Vec<GsiReport>,
    /// Whether the top second-type totals were within tolerance.
    pub tie: bool,
    pub tie_resolution: TieResolution,
}

/// Picks the pivot with the largest second-type total index. Candidates
/// within `tol` of the best go on to the first-type total, then the
/// first-order indices; a tie that survives all of them is reported as
/// equivalent with the smallest pivot.
/// A tie-breaking key and the resolution it records.
type Stage = (fn(&GsiReport) -> f64, TieResolution);

pub fn select_efficient_dm(reports: &[GsiReport], tol: f64) -> Result<SelectionResult> {
    let first = reports.first().ok_or_else(|| invalid("no reports to select from"))?;
    for r in reports {
        if r.method != first.method || r.n != first.n || r.seed != first.seed {
            return Err(Error::MixedMethods(format!(
                "pivot {} ({}, n = {}) vs pivot {} ({}, n = {})",
                first.pivot + 1,
                first.method,
                first.n,
                r.pivot + 1,
                r.method,
                r.n
            )));
        }
    }
    let mut ranking = reports.to_vec();
    ranking.sort_by_key(|r| r.pivot);
    let stages: [Stage; 4] = [
        (|r| r.tot_frob, TieResolution::SecondTypeTotal),
        (|r| r.tot_trace, TieResolution::FirstTypeTotal),
        (|r| r.fo_frob, TieResolution::FirstOrder),
        (|r| r.fo_trace, TieResolution::FirstOrder),
    ];
    let mut cands: Vec<usize> = (0..ranking.len()).collect();
    let mut tie = false;
    for (stage, (key, resolution)) in stages.iter().enumerate() {
        let best = cands
            .iter()
            .map(|&i| key(&ranking[i]))
            .fold(f64::NEG_INFINITY, f64::max);
        cands.retain(|&i| key(&ranking[i]) >= best - tol);
        if stage == 0 {
            tie = cands.len() > 1;
        }
        if cands.len() == 1 {
            return Ok(SelectionResult {
                j_star: ranking[cands[0]].pivot,
                ranking,
                tie,
                tie_resolution: *resolution,
            });
        }
    }
    Ok(SelectionResult {
        j_star: ranking[cands[0]].pivot,
        ranking,
        tie,
        tie_resolution: TieResolution::Equivalent,
    })
}
