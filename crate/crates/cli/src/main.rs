use std::fmt::Write as _;
use std::fs;
use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use depmod_core::dm::default_perm;
use depmod_core::gsi::{
    analytic_report, gsi_dm_pick_freeze, gsi_gaussian_analytic, gsi_trapezoid_analytic, select_efficient_dm,
    TieResolution,
};
use depmod_core::{build_dm, CovarianceMatrix, DmSpec, GsiReport, Method};

/// Correlation sets (rho12, rho13, rho23) for the d = 3 Gaussian table.
const GAUSSIAN_SETS: [(&str, [f64; 3]); 7] = [
    ("S1", [-0.999, 0.999, -0.999]),
    ("S2", [0.25, 0.5, 0.75]),
    ("S3", [0.6, 0.0, 0.0]),
    ("S4", [0.0, 0.0, 0.0]),
    ("S5", [0.25, 0.8, 0.5]),
    ("S6", [0.0, 0.75, 0.45]),
    ("S7", [-0.5, 0.5, -0.5]),
];
const GAUSSIAN_STD: [f64; 3] = [3.0, 5.0, 4.0];
const TRAPEZOID_BETAS: [f64; 9] = [0.0001, 0.125, 0.25, 0.375, 0.5, 0.625, 0.75, 0.875, 1.0];

#[derive(Parser)]
#[command(
    name = "depmod",
    version,
    about = "Sample dependency models and rank them by sensitivity indices"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Draw samples from a model spec as CSV.
    Sample {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 1000, value_parser = clap::value_parser!(u64).range(1..))]
        n: u64,
    },
    /// Sensitivity indices for every pivot of a spec.
    Gsi {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        est: Estimation,
        #[arg(long, value_enum, default_value_t = Format::Csv)]
        format: Format,
    },
    /// Select the most efficient pivot.
    Select {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        est: Estimation,
        /// Tie tolerance; defaults to 1e-12 (analytic) or 1e-3 (pick_freeze).
        #[arg(long)]
        tol: Option<f64>,
    },
    /// Regenerate a reference table.
    Reproduce {
        #[arg(long, value_enum)]
        target: Target,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct Common {
    #[arg(long)]
    spec: PathBuf,
    /// Overrides the spec's seed; 0 if neither is set.
    #[arg(long)]
    seed: Option<u64>,
    /// Output file; standard output if omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct Estimation {
    #[arg(long, value_enum, default_value_t = MethodArg::Analytic)]
    method: MethodArg,
    /// Sample size for pick_freeze.
    #[arg(long, default_value_t = 1 << 14, value_parser = clap::value_parser!(u64).range(1..))]
    n: u64,
}

#[derive(Clone, Copy, ValueEnum)]
enum MethodArg {
    Analytic,
    #[value(name = "pick_freeze")]
    PickFreeze,
}

impl From<MethodArg> for Method {
    fn from(m: MethodArg) -> Self {
        match m {
            MethodArg::Analytic => Method::Analytic,
            MethodArg::PickFreeze => Method::PickFreeze,
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Kv,
}

#[derive(Clone, Copy, ValueEnum)]
enum Target {
    #[value(name = "gaussian_d3")]
    GaussianD3,
    Trapezoid,
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    configure_threads()?;
    match cli.command {
        Command::Sample { common, n } => {
            let spec = load(&common)?;
            let seed = seed_of(&common, &spec);
            emit(common.out.as_ref(), &cmd_sample(&spec, n as usize, seed)?)
        }
        Command::Gsi { common, est, format } => {
            let spec = load(&common)?;
            let reports = reports_for(&spec, est.method.into(), est.n as usize, seed_of(&common, &spec))?;
            emit(common.out.as_ref(), &format_reports(&reports, format))
        }
        Command::Select { common, est, tol } => {
            let spec = load(&common)?;
            let method: Method = est.method.into();
            let reports = reports_for(&spec, method, est.n as usize, seed_of(&common, &spec))?;
            let sel = select_efficient_dm(&reports, tol.unwrap_or(method.default_tol()))?;
            let mut text = String::new();
            writeln!(text, "family={}", spec.name())?;
            writeln!(text, "method={method}")?;
            writeln!(text, "j_star={}", sel.j_star + 1)?;
            writeln!(text, "tie={}", sel.tie)?;
            writeln!(text, "tie_resolution={}", sel.tie_resolution)?;
            let verdict = if sel.tie_resolution == TieResolution::Equivalent {
                "equivalent"
            } else {
                "selected"
            };
            writeln!(text, "verdict={verdict}")?;
            text.push('\n');
            text.push_str(&format_reports(&sel.ranking, Format::Csv));
            emit(common.out.as_ref(), &text)
        }
        Command::Reproduce { target, seed, out } => {
            let table = match target {
                Target::GaussianD3 => reproduce_gaussian(seed)?,
                Target::Trapezoid => reproduce_trapezoid(seed)?,
            };
            emit(out.as_ref(), &table)
        }
    }
}

/// Worker count from `DEPMOD_THREADS`; results never depend on it.
fn configure_threads() -> Result<()> {
    let Ok(raw) = std::env::var("DEPMOD_THREADS") else {
        return Ok(());
    };
    let threads: usize = raw
        .trim()
        .parse()
        .with_context(|| format!("DEPMOD_THREADS must be a positive integer, got `{raw}`"))?;
    if threads == 0 {
        bail!("DEPMOD_THREADS must be a positive integer, got `{raw}`");
    }
    rayon::ThreadPoolBuilder::new().num_threads(threads).build_global()?;
    Ok(())
}

fn load(common: &Common) -> Result<DmSpec> {
    DmSpec::from_path(&common.spec).with_context(|| format!("loading {}", common.spec.display()))
}

fn seed_of(common: &Common, spec: &DmSpec) -> u64 {
    common.seed.or(spec.seed).unwrap_or(0)
}

fn emit(out: Option<&PathBuf>, text: &str) -> Result<()> {
    match out {
        Some(path) => fs::write(path, text).with_context(|| format!("writing {}", path.display())),
        None => {
            let mut stdout = io::stdout().lock();
            stdout.write_all(text.as_bytes())?;
            stdout.flush()?;
            Ok(())
        }
    }
}

fn num(x: f64) -> String {
    format!("{x:.16e}")
}

fn cmd_sample(spec: &DmSpec, n: usize, seed: u64) -> Result<String> {
    let model = build_dm(spec)?;
    let batch = model.sample_batch(n, seed)?;
    let mut text = String::new();
    writeln!(text, "# family={}", spec.name())?;
    writeln!(text, "# seed={seed}")?;
    writeln!(text, "# spec-digest={}", spec.digest())?;
    let header: Vec<String> = (1..=batch.d).map(|k| format!("x{k}")).collect();
    writeln!(text, "{}", header.join(","))?;
    for row in batch.rows() {
        let cells: Vec<String> = row.iter().map(|&x| num(x)).collect();
        writeln!(text, "{}", cells.join(","))?;
    }
    Ok(text)
}

/// One report per pivot, each with the default output order.
fn reports_for(spec: &DmSpec, method: Method, n: usize, seed: u64) -> Result<Vec<GsiReport>> {
    (0..spec.dim())
        .map(|j| {
            let s = spec.with_pivot(j)?;
            let report = match method {
                Method::Analytic => analytic_report(&s)?,
                Method::PickFreeze => gsi_dm_pick_freeze(&build_dm(&s)?, n, seed)?,
            };
            Ok(report)
        })
        .collect()
}

fn format_reports(reports: &[GsiReport], format: Format) -> String {
    let mut text = String::new();
    match format {
        Format::Csv => {
            text.push_str(&GsiReport::csv_header());
            text.push('\n');
            for r in reports {
                text.push_str(&r.to_csv_row());
                text.push('\n');
            }
        }
        Format::Kv => {
            for (i, r) in reports.iter().enumerate() {
                if i > 0 {
                    text.push('\n');
                }
                text.push_str(&r.to_kv());
            }
        }
    }
    text
}

fn reproduce_gaussian(seed: u64) -> Result<String> {
    let mut text = String::new();
    writeln!(text, "# target=gaussian_d3")?;
    writeln!(text, "# seed={seed}")?;
    writeln!(
        text,
        "# std={},{},{}",
        GAUSSIAN_STD[0], GAUSSIAN_STD[1], GAUSSIAN_STD[2]
    )?;
    writeln!(text, "set,rho12,rho13,rho23,pivot,gsi_tot_trace,gsi_tot_frob")?;
    for (name, [r12, r13, r23]) in GAUSSIAN_SETS {
        let sigma = gaussian_cov(r12, r13, r23)?;
        for j in 0..3 {
            let r = gsi_gaussian_analytic(&sigma, j, &default_perm(3, j))?;
            writeln!(
                text,
                "{name},{r12},{r13},{r23},{},{},{}",
                j + 1,
                num(r.tot_trace),
                num(r.tot_frob)
            )?;
        }
    }
    Ok(text)
}

fn gaussian_cov(r12: f64, r13: f64, r23: f64) -> Result<CovarianceMatrix> {
    let corr = [[1.0, r12, r13], [r12, 1.0, r23], [r13, r23, 1.0]];
    let rows: Vec<Vec<f64>> = (0..3)
        .map(|i| (0..3).map(|k| GAUSSIAN_STD[i] * GAUSSIAN_STD[k] * corr[i][k]).collect())
        .collect();
    Ok(CovarianceMatrix::from_rows(&rows)?)
}

fn reproduce_trapezoid(seed: u64) -> Result<String> {
    let mut text = String::new();
    writeln!(text, "# target=trapezoid")?;
    writeln!(text, "# seed={seed}")?;
    writeln!(text, "beta,model,first_order,total")?;
    for beta in TRAPEZOID_BETAS {
        for j in 0..2 {
            let r = gsi_trapezoid_analytic(beta, j)?;
            writeln!(text, "{beta},r{},{},{}", j + 1, num(r.fo_frob), num(r.tot_frob))?;
        }
    }
    Ok(text)
}
