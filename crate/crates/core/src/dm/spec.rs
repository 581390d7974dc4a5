//! Model specifications and their TOML file format.
//!
//! ```toml
//! version = 1
//! family = "gaussian"
//! pivot = 1          # 1-based, default 1
//! perm = [3, 2]      # 1-based, default: remaining indices ascending
//! seed = 42          # optional
//!
//! [params]
//! mu = [0, 0, 0]
//! std = [3, 5, 4]
//! corr = [[1, 0.25, 0.5], [0.25, 1, 0.75], [0.5, 0.75, 1]]
//! ```
//!
//! Parameters per family (vectors have one entry per coordinate):
//!
//! | family | params |
//! |---|---|
//! | `gaussian`, `cauchy` | `mu`, and `cov` or `std` + `corr` |
//! | `student_t` | `nu`, `mu`, and `cov` or `std` + `corr` |
//! | `gd` | `a`, `b` |
//! | `dirichlet` | `alpha` (d + 1 entries) |
//! | `pgd`, `pgd_sphere` | `p`, `a`, `b`, `orthant` |
//! | `uniform_pball`, `uniform_psphere` | `p`, `d`, `orthant` |
//! | `gamma_sum` | `a`, `rate`, `c`, `mode` (`eq`/`lt`) |
//! | `general_sum` | `marginals`, `a`, `rate`, `c`, `mode` |
//! | `gaussian_linsum` | `sigmas`, `c` |
//! | `general_linsum` | `marginals`, `sigmas`, `c` |
//! | `gaussian_quad` | `d`, `c`, `mode` (`on`/`in`) |
//! | `general_quad` | `marginals`, `c`, `mode` |
//! | `elliptical_shell` | `c`, and `cov` or `std` + `corr` |
//! | `trapezoid` | `beta` |
//!
//! `orthant` is `signed` (default) or `positive`; `rate` defaults to 1.
//! Marginals are distribution strings such as `"beta(2, 3)"`.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::path::Path;

use nalgebra::DMatrix;
use sha2::{Digest, Sha256};
use toml::{Table, Value};

use super::{check_order, constrained, default_perm, elliptical, simplex, DependencyModel};
use crate::error::{Error, Result};
use crate::numerics::CovarianceMatrix;
use crate::univariate::DistributionSpec;

/// Spec file schema version.
pub const SPEC_VERSION: i64 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Orthant {
    Signed,
    Positive,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SumMode {
    Eq,
    Lt,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum QuadMode {
    On,
    In,
}

/// A family with its parameters. Coordinates are 0-based.
#[derive(Clone, Debug, PartialEq)]
pub enum Family {
    Gaussian {
        mu: Vec<f64>,
        sigma: CovarianceMatrix,
    },
    StudentT {
        nu: f64,
        mu: Vec<f64>,
        sigma: CovarianceMatrix,
    },
    Cauchy {
        mu: Vec<f64>,
        sigma: CovarianceMatrix,
    },
    Gd {
        a: Vec<f64>,
        b: Vec<f64>,
    },
    Dirichlet {
        alpha: Vec<f64>,
    },
    Pgd {
        p: f64,
        a: Vec<f64>,
        b: Vec<f64>,
        orthant: Orthant,
    },
    PgdSphere {
        p: f64,
        a: Vec<f64>,
        b: Vec<f64>,
        orthant: Orthant,
    },
    UniformPball {
        p: f64,
        d: usize,
        orthant: Orthant,
    },
    UniformPsphere {
        p: f64,
        d: usize,
        orthant: Orthant,
    },
    GammaSum {
        a: Vec<f64>,
        rate: f64,
        c: f64,
        mode: SumMode,
    },
    GeneralSum {
        marginals: Vec<DistributionSpec>,
        a: Vec<f64>,
        rate: f64,
        c: f64,
        mode: SumMode,
    },
    GaussianLinsum {
        sigmas: Vec<f64>,
        c: f64,
    },
    GeneralLinsum {
        marginals: Vec<DistributionSpec>,
        sigmas: Vec<f64>,
        c: f64,
    },
    GaussianQuad {
        d: usize,
        c: f64,
        mode: QuadMode,
    },
    GeneralQuad {
        marginals: Vec<DistributionSpec>,
        c: f64,
        mode: QuadMode,
    },
    EllipticalShell {
        sigma: CovarianceMatrix,
        c: f64,
    },
    Trapezoid {
        beta: f64,
    },
}

impl Family {
    pub fn name(&self) -> &'static str {
        match self {
            Family::Gaussian { .. } => "gaussian",
            Family::StudentT { .. } => "student_t",
            Family::Cauchy { .. } => "cauchy",
            Family::Gd { .. } => "gd",
            Family::Dirichlet { .. } => "dirichlet",
            Family::Pgd { .. } => "pgd",
            Family::PgdSphere { .. } => "pgd_sphere",
            Family::UniformPball { .. } => "uniform_pball",
            Family::UniformPsphere { .. } => "uniform_psphere",
            Family::GammaSum { .. } => "gamma_sum",
            Family::GeneralSum { .. } => "general_sum",
            Family::GaussianLinsum { .. } => "gaussian_linsum",
            Family::GeneralLinsum { .. } => "general_linsum",
            Family::GaussianQuad { .. } => "gaussian_quad",
            Family::GeneralQuad { .. } => "general_quad",
            Family::EllipticalShell { .. } => "elliptical_shell",
            Family::Trapezoid { .. } => "trapezoid",
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            Family::Gaussian { mu, .. } | Family::StudentT { mu, .. } | Family::Cauchy { mu, .. } => mu.len(),
            Family::Gd { a, .. } | Family::Pgd { a, .. } | Family::PgdSphere { a, .. } => a.len(),
            Family::GammaSum { a, .. } | Family::GeneralSum { a, .. } => a.len(),
            Family::Dirichlet { alpha } => alpha.len().saturating_sub(1),
            Family::UniformPball { d, .. } | Family::UniformPsphere { d, .. } | Family::GaussianQuad { d, .. } => *d,
            Family::GaussianLinsum { sigmas, .. } | Family::GeneralLinsum { sigmas, .. } => sigmas.len(),
            Family::GeneralQuad { marginals, .. } => marginals.len(),
            Family::EllipticalShell { sigma, .. } => sigma.dim(),
            Family::Trapezoid { .. } => 2,
        }
    }
}

/// Family, pivot and output order (0-based), plus an optional seed.
#[derive(Clone, Debug, PartialEq)]
pub struct DmSpec {
    pub family: Family,
    pub pivot: usize,
    pub perm: Vec<usize>,
    pub seed: Option<u64>,
}

impl DmSpec {
    /// Spec with the default output order for `pivot`.
    pub fn new(family: Family, pivot: usize) -> Result<Self> {
        let d = family.dim();
        let spec = Self {
            family,
            pivot,
            perm: default_perm(d, pivot.min(d)),
            seed: None,
        };
        check_order(d, pivot, &spec.perm)?;
        Ok(spec)
    }

    pub fn dim(&self) -> usize {
        self.family.dim()
    }

    pub fn name(&self) -> &'static str {
        self.family.name()
    }

    /// Same family with another pivot and the default output order.
    pub fn with_pivot(&self, pivot: usize) -> Result<Self> {
        Ok(Self {
            seed: self.seed,
            ..Self::new(self.family.clone(), pivot)?
        })
    }

    /// First 16 hex digits of the SHA-256 of the canonical spec text
    /// (family, parameters, pivot and order; the seed is excluded).
    pub fn digest(&self) -> String {
        let text = format!("{:?}|{}|{:?}", self.family, self.pivot, self.perm);
        let hash = Sha256::digest(text.as_bytes());
        let mut out = String::with_capacity(16);
        for byte in &hash[..8] {
            write!(out, "{byte:02x}").expect("writing to a String");
        }
        out
    }

    pub fn from_path(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::SpecParse {
            field: "file".into(),
            message: format!("cannot read {}: {e}", path.display()),
        })?;
        text.parse()
    }

    pub fn build(&self) -> Result<DependencyModel> {
        build_dm(self)
    }
}

/// Builds the executable model for a spec.
pub fn build_dm(spec: &DmSpec) -> Result<DependencyModel> {
    let (j, w) = (spec.pivot, spec.perm.clone());
    let model = match &spec.family {
        Family::Gaussian { mu, sigma } => elliptical::gaussian_dm(mu, sigma, j, w),
        Family::StudentT { nu, mu, sigma } => elliptical::student_t_dm(*nu, mu, sigma, j, w),
        Family::Cauchy { mu, sigma } => elliptical::cauchy_dm(mu, sigma, j, w),
        Family::Gd { a, b } => simplex::gd_dm(a, b, j, w),
        Family::Dirichlet { alpha } => simplex::dirichlet_dm(alpha, j, w),
        Family::Pgd { p, a, b, orthant } => simplex::pgd_dm(*p, a, b, j, w, *orthant),
        Family::PgdSphere { p, a, b, orthant } => simplex::pgd_sphere_dm(*p, a, b, j, w, *orthant),
        Family::UniformPball { p, orthant, .. } => simplex::uniform_pball_dm(*p, j, w, *orthant),
        Family::UniformPsphere { p, orthant, .. } => simplex::uniform_psphere_dm(*p, j, w, *orthant),
        Family::GammaSum { a, rate, c, mode } => constrained::gamma_sum_dm(a, *rate, *c, *mode, j, w),
        Family::GeneralSum {
            marginals,
            a,
            rate,
            c,
            mode,
        } => constrained::general_sum_dm(marginals.clone(), a, *rate, *c, *mode, j, w),
        Family::GaussianLinsum { sigmas, c } => constrained::gaussian_linsum_dm(sigmas, *c, j, w),
        Family::GeneralLinsum { marginals, sigmas, c } => {
            constrained::general_linsum_dm(marginals.clone(), sigmas, *c, j, w)
        }
        Family::GaussianQuad { d, c, mode } => constrained::gaussian_quad_dm(*d, *c, *mode, j, w),
        Family::GeneralQuad { marginals, c, mode } => constrained::general_quad_dm(marginals.clone(), *c, *mode, j, w),
        Family::EllipticalShell { sigma, c } => constrained::elliptical_shell_dm(sigma, *c, j, w),
        Family::Trapezoid { beta } => constrained::trapezoid_dm(*beta, j),
    }?;
    Ok(model.with_digest(spec.digest()))
}

fn parse_err(field: &str, message: impl Into<String>) -> Error {
    Error::SpecParse {
        field: field.into(),
        message: message.into(),
    }
}

/// A TOML table whose keys are consumed as they are read, so leftovers can
/// be reported as unknown fields.
struct Fields {
    prefix: &'static str,
    table: Table,
    seen: BTreeSet<String>,
}

impl Fields {
    fn new(prefix: &'static str, table: Table) -> Self {
        Self {
            prefix,
            table,
            seen: BTreeSet::new(),
        }
    }

    fn path(&self, key: &str) -> String {
        format!("{}{key}", self.prefix)
    }

    fn take(&mut self, key: &str) -> Option<Value> {
        self.seen.insert(key.to_string());
        self.table.get(key).cloned()
    }

    fn require(&mut self, key: &str) -> Result<Value> {
        self.take(key).ok_or_else(|| parse_err(&self.path(key), "missing"))
    }

    fn number(&self, key: &str, v: &Value) -> Result<f64> {
        match v {
            Value::Float(x) => Ok(*x),
            Value::Integer(i) => Ok(*i as f64),
            _ => Err(parse_err(&self.path(key), "expected a number")),
        }
    }

    fn f64(&mut self, key: &str) -> Result<f64> {
        let v = self.require(key)?;
        self.number(key, &v)
    }

    fn f64_or(&mut self, key: &str, default: f64) -> Result<f64> {
        match self.take(key) {
            Some(v) => self.number(key, &v),
            None => Ok(default),
        }
    }

    fn count(&mut self, key: &str) -> Result<usize> {
        match self.require(key)? {
            Value::Integer(i) if i >= 1 => Ok(i as usize),
            _ => Err(parse_err(&self.path(key), "expected a positive integer")),
        }
    }

    fn vec(&mut self, key: &str) -> Result<Vec<f64>> {
        let v = self.require(key)?;
        self.vec_of(key, &v)
    }

    fn vec_of(&self, key: &str, v: &Value) -> Result<Vec<f64>> {
        match v {
            Value::Array(items) => items.iter().map(|x| self.number(key, x)).collect(),
            _ => Err(parse_err(&self.path(key), "expected an array of numbers")),
        }
    }

    fn matrix(&mut self, key: &str) -> Result<DMatrix<f64>> {
        let v = self.require(key)?;
        let rows = match &v {
            Value::Array(rows) => rows.iter().map(|r| self.vec_of(key, r)).collect::<Result<Vec<_>>>()?,
            _ => return Err(parse_err(&self.path(key), "expected an array of rows")),
        };
        let n = rows.len();
        if n == 0 || rows.iter().any(|r| r.len() != n) {
            return Err(parse_err(&self.path(key), "expected a square matrix"));
        }
        Ok(DMatrix::from_fn(n, n, |i, k| rows[i][k]))
    }

    fn string(&mut self, key: &str) -> Result<Option<String>> {
        match self.take(key) {
            None => Ok(None),
            Some(Value::String(s)) => Ok(Some(s)),
            Some(_) => Err(parse_err(&self.path(key), "expected a string")),
        }
    }

    fn marginals(&mut self, key: &str) -> Result<Vec<DistributionSpec>> {
        let path = self.path(key);
        match self.require(key)? {
            Value::Array(items) => items
                .iter()
                .map(|x| match x {
                    Value::String(s) => s.parse().map_err(|e: Error| parse_err(&path, e.to_string())),
                    _ => Err(parse_err(&path, "expected distribution strings")),
                })
                .collect(),
            _ => Err(parse_err(&path, "expected an array of distribution strings")),
        }
    }

    fn orthant(&mut self) -> Result<Orthant> {
        match self.string("orthant")?.as_deref() {
            None | Some("signed") => Ok(Orthant::Signed),
            Some("positive") => Ok(Orthant::Positive),
            Some(other) => Err(parse_err(&self.path("orthant"), format!("unknown orthant `{other}`"))),
        }
    }

    fn sum_mode(&mut self) -> Result<SumMode> {
        match self.string("mode")?.as_deref() {
            None | Some("eq") => Ok(SumMode::Eq),
            Some("lt") => Ok(SumMode::Lt),
            Some(other) => Err(parse_err(
                &self.path("mode"),
                format!("expected `eq` or `lt`, got `{other}`"),
            )),
        }
    }

    fn quad_mode(&mut self) -> Result<QuadMode> {
        match self.string("mode")?.as_deref() {
            None | Some("on") => Ok(QuadMode::On),
            Some("in") => Ok(QuadMode::In),
            Some(other) => Err(parse_err(
                &self.path("mode"),
                format!("expected `on` or `in`, got `{other}`"),
            )),
        }
    }

    /// `cov`, or `std` with `corr`.
    fn covariance(&mut self) -> Result<CovarianceMatrix> {
        let has_cov = self.table.contains_key("cov");
        let wrap = |field: String| move |e: Error| parse_err(&field, e.to_string());
        if has_cov {
            if self.table.contains_key("std") || self.table.contains_key("corr") {
                return Err(parse_err(&self.path("cov"), "give either cov or std + corr, not both"));
            }
            let m = self.matrix("cov")?;
            CovarianceMatrix::new(m).map_err(wrap(self.path("cov")))
        } else {
            let std = self.vec("std")?;
            let corr = self.matrix("corr")?;
            if corr.nrows() != std.len() {
                return Err(parse_err(&self.path("corr"), "size does not match std"));
            }
            CovarianceMatrix::from_std_corr(&std, &corr).map_err(wrap(self.path("corr")))
        }
    }

    fn finish(self) -> Result<()> {
        match self.table.keys().find(|k| !self.seen.contains(*k)) {
            Some(k) => Err(parse_err(&self.path(k), "unknown field")),
            None => Ok(()),
        }
    }
}

fn parse_family(name: &str, p: &mut Fields) -> Result<Family> {
    Ok(match name {
        "gaussian" => Family::Gaussian {
            mu: p.vec("mu")?,
            sigma: p.covariance()?,
        },
        "student_t" => Family::StudentT {
            nu: p.f64("nu")?,
            mu: p.vec("mu")?,
            sigma: p.covariance()?,
        },
        "cauchy" => Family::Cauchy {
            mu: p.vec("mu")?,
            sigma: p.covariance()?,
        },
        "gd" => Family::Gd {
            a: p.vec("a")?,
            b: p.vec("b")?,
        },
        "dirichlet" => Family::Dirichlet { alpha: p.vec("alpha")? },
        "pgd" | "pgd_sphere" => {
            let (pp, a, b, orthant) = (p.f64("p")?, p.vec("a")?, p.vec("b")?, p.orthant()?);
            if name == "pgd" {
                Family::Pgd { p: pp, a, b, orthant }
            } else {
                Family::PgdSphere { p: pp, a, b, orthant }
            }
        }
        "uniform_pball" | "uniform_psphere" => {
            let (pp, d, orthant) = (p.f64("p")?, p.count("d")?, p.orthant()?);
            if name == "uniform_pball" {
                Family::UniformPball { p: pp, d, orthant }
            } else {
                Family::UniformPsphere { p: pp, d, orthant }
            }
        }
        "gamma_sum" => Family::GammaSum {
            a: p.vec("a")?,
            rate: p.f64_or("rate", 1.0)?,
            c: p.f64("c")?,
            mode: p.sum_mode()?,
        },
        "general_sum" => Family::GeneralSum {
            marginals: p.marginals("marginals")?,
            a: p.vec("a")?,
            rate: p.f64_or("rate", 1.0)?,
            c: p.f64("c")?,
            mode: p.sum_mode()?,
        },
        "gaussian_linsum" => Family::GaussianLinsum {
            sigmas: p.vec("sigmas")?,
            c: p.f64("c")?,
        },
        "general_linsum" => Family::GeneralLinsum {
            marginals: p.marginals("marginals")?,
            sigmas: p.vec("sigmas")?,
            c: p.f64("c")?,
        },
        "gaussian_quad" => Family::GaussianQuad {
            d: p.count("d")?,
            c: p.f64("c")?,
            mode: p.quad_mode()?,
        },
        "general_quad" => Family::GeneralQuad {
            marginals: p.marginals("marginals")?,
            c: p.f64("c")?,
            mode: p.quad_mode()?,
        },
        "elliptical_shell" => Family::EllipticalShell {
            sigma: p.covariance()?,
            c: p.f64("c")?,
        },
        "trapezoid" => Family::Trapezoid { beta: p.f64("beta")? },
        other => return Err(Error::UnsupportedFamily(other.to_string())),
    })
}

impl std::str::FromStr for DmSpec {
    type Err = Error;

    fn from_str(text: &str) -> Result<Self> {
        let table: Table = text
            .parse()
            .map_err(|e: toml::de::Error| parse_err("file", e.message()))?;
        let mut top = Fields::new("", table);
        match top.require("version")? {
            Value::Integer(SPEC_VERSION) => {}
            _ => return Err(parse_err("version", format!("expected {SPEC_VERSION}"))),
        }
        let name = top.string("family")?.ok_or_else(|| parse_err("family", "missing"))?;
        let params = match top.take("params") {
            Some(Value::Table(t)) => t,
            Some(_) => return Err(parse_err("params", "expected a table")),
            None => Table::new(),
        };
        let mut p = Fields::new("params.", params);
        let family = match parse_family(&name, &mut p) {
            Err(Error::UnsupportedFamily(f)) => return Err(parse_err("family", format!("unknown family `{f}`"))),
            other => other?,
        };
        p.finish()?;
        let d = family.dim();
        let pivot = match top.take("pivot") {
            None => 0,
            Some(Value::Integer(i)) if i >= 1 && (i as usize) <= d => i as usize - 1,
            Some(_) => return Err(parse_err("pivot", format!("expected an integer in 1..={d}"))),
        };
        let perm = match top.take("perm") {
            None => default_perm(d, pivot),
            Some(Value::Array(items)) => items
                .iter()
                .map(|x| match x {
                    Value::Integer(i) if *i >= 1 => Ok(*i as usize - 1),
                    _ => Err(parse_err("perm", "expected positive integers")),
                })
                .collect::<Result<Vec<_>>>()?,
            Some(_) => return Err(parse_err("perm", "expected an array")),
        };
        check_order(d, pivot, &perm).map_err(|e| parse_err("perm", e.to_string()))?;
        let seed = match top.take("seed") {
            None => None,
            Some(Value::Integer(i)) if i >= 0 => Some(i as u64),
            Some(_) => return Err(parse_err("seed", "expected a nonnegative integer")),
        };
        top.finish()?;
        Ok(DmSpec {
            family,
            pivot,
            perm,
            seed,
        })
    }
}
