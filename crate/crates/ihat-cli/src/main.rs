use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use ihat_core::{
    ihat_eval_report, ks_compare_table, make_base_dist, mellin_ihat, mellin_ihat_quadrature,
    pointwise_oracle_report, product_dist, quotient_dist, sample_table, tabulate_cdf, BaseParams,
    Contour, IhatDensity, IhatError, IhatSpec, MergeOp, ScaledIhat, DEFAULT_GRID,
};
use num_complex::Complex64;

#[derive(Parser)]
#[command(name = "ihat", version, about = "Evaluate H-type kernels with powered gamma factors and the distributions built on them")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
    /// Absolute tolerance for contour evaluations (default: IHAT_TOL env var, else 1e-10)
    #[arg(long, global = true)]
    tol: Option<f64>,
    /// Row output format
    #[arg(long, global = true, value_enum, default_value_t = Out::Csv)]
    out: Out,
}

#[derive(Clone, Copy, ValueEnum)]
enum Out {
    Csv,
    Json,
}

#[derive(Clone, Copy, ValueEnum)]
enum Op {
    Product,
    Quotient,
}

#[derive(Subcommand)]
enum Cmd {
    /// Evaluate the kernel at one or more arguments
    Eval {
        /// Kernel file (spec or scaled-kernel JSON)
        #[arg(long)]
        spec: PathBuf,
        /// Argument grid: a single value or lo:hi:n (log-spaced)
        #[arg(long)]
        z: String,
        /// Contour shift override (must lie inside the strip)
        #[arg(long)]
        shift: Option<f64>,
    },
    /// Closed-form Mellin transform with a quadrature cross-check
    Mellin {
        /// Kernel file (spec or scaled-kernel JSON)
        #[arg(long)]
        spec: PathBuf,
        /// Transform points: comma-separated reals
        #[arg(long)]
        s: String,
        /// Absolute tolerance for the quadrature cross-check
        #[arg(long, default_value_t = 1e-8)]
        oracle_tol: f64,
    },
    /// Build a base density and optionally tabulate its pdf
    Dist {
        /// Base-parameter file
        #[arg(long)]
        spec: PathBuf,
        /// Optional pdf grid: a single value or lo:hi:n (log-spaced)
        #[arg(long)]
        y: Option<String>,
    },
    /// Build the density of a product of two independent base variables
    Product {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long)]
        spec2: PathBuf,
        #[arg(long)]
        y: Option<String>,
    },
    /// Build the density of a quotient of two independent base variables
    Quotient {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long)]
        spec2: PathBuf,
        #[arg(long)]
        y: Option<String>,
    },
    /// Draw samples from a density by inverse-CDF on a tabulated grid
    Sample {
        /// Density file (base parameters or a built density)
        #[arg(long)]
        spec: PathBuf,
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 42)]
        seed: u64,
    },
    /// Build a merged density and verify it against oracles and Monte Carlo
    Verify {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long)]
        spec2: PathBuf,
        #[arg(long, value_enum)]
        op: Op,
        /// Monte Carlo sample count
        #[arg(long, default_value_t = 100_000)]
        n: usize,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        /// Pointwise oracle grid size
        #[arg(long, default_value_t = 25)]
        points: usize,
    },
}

struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn io(path: &Path, err: impl std::fmt::Display) -> Self {
        Failure { code: 3, message: format!("{}: {err}", path.display()) }
    }
}

impl From<IhatError> for Failure {
    fn from(e: IhatError) -> Self {
        let code = match &e {
            IhatError::Pole(_) | IhatError::BranchCut(_) | IhatError::Convergence(_) => 2,
            IhatError::Domain(_) | IhatError::Strip(_) => 3,
            IhatError::Validation(_) => 4,
        };
        Failure { code, message: e.to_string() }
    }
}

enum Input {
    Spec(IhatSpec),
    Scaled(ScaledIhat),
    Base(BaseParams),
    Density(IhatDensity),
}

/// Loads any of the four JSON shapes, telling them apart by their keys:
/// a bare spec has "m"/"n" at top level, the wrappers all nest one under
/// "spec" and differ in their own fields.
fn load(path: &Path) -> Result<Input, Failure> {
    let text = std::fs::read_to_string(path).map_err(|e| Failure::io(path, e))?;
    let value: serde_json::Value =
        serde_json::from_str(&text).map_err(|e| Failure::io(path, e))?;
    let obj = value
        .as_object()
        .ok_or_else(|| Failure::io(path, "expected a JSON object"))?;
    let parsed = if obj.contains_key("spec") {
        if obj.contains_key("power") {
            serde_json::from_value::<ScaledIhat>(value).map(Input::Scaled)
        } else if obj.contains_key("sigma") {
            serde_json::from_value::<BaseParams>(value).map(Input::Base)
        } else if obj.contains_key("P") {
            serde_json::from_value::<IhatDensity>(value).map(Input::Density)
        } else {
            return Err(Failure::io(
                path,
                "object with \"spec\" is none of: scaled kernel (power), base (sigma, s1), density (Z, P)",
            ));
        }
    } else if obj.contains_key("m") && obj.contains_key("n") {
        serde_json::from_value::<IhatSpec>(value).map(Input::Spec)
    } else {
        return Err(Failure::io(path, "unrecognized JSON shape"));
    };
    parsed.map_err(|e| Failure::io(path, e))
}

fn load_scaled(path: &Path) -> Result<ScaledIhat, Failure> {
    match load(path)? {
        Input::Scaled(f) => Ok(f),
        Input::Spec(spec) => Ok(ScaledIhat::new(spec, 1.0, 1.0)?),
        _ => Err(Failure::io(path, "expected a spec or scaled kernel")),
    }
}

fn load_base(path: &Path) -> Result<BaseParams, Failure> {
    match load(path)? {
        Input::Base(b) => Ok(b),
        _ => Err(Failure::io(path, "expected base parameters (spec, z, sigma, s1)")),
    }
}

fn load_density(path: &Path) -> Result<IhatDensity, Failure> {
    match load(path)? {
        Input::Density(d) => Ok(d),
        Input::Base(b) => Ok(make_base_dist(&b)?),
        _ => Err(Failure::io(path, "expected a density or base parameters")),
    }
}

/// "lo:hi:n" is an inclusive log-spaced grid; a bare number is one point.
fn parse_grid(text: &str) -> Result<Vec<f64>, Failure> {
    let bad = |msg: &str| Failure { code: 3, message: format!("grid '{text}': {msg}") };
    let parts: Vec<&str> = text.split(':').collect();
    match parts.as_slice() {
        [one] => {
            let v: f64 = one.parse().map_err(|_| bad("not a number"))?;
            Ok(vec![v])
        }
        [lo, hi, n] => {
            let lo: f64 = lo.parse().map_err(|_| bad("bad lower bound"))?;
            let hi: f64 = hi.parse().map_err(|_| bad("bad upper bound"))?;
            let n: usize = n.parse().map_err(|_| bad("bad point count"))?;
            if !(lo > 0.0 && hi > lo) || n < 2 {
                return Err(bad("need 0 < lo < hi and n >= 2"));
            }
            let step = (hi / lo).ln() / (n - 1) as f64;
            Ok((0..n).map(|i| lo * (step * i as f64).exp()).collect())
        }
        _ => Err(bad("expected a number or lo:hi:n")),
    }
}

fn emit_rows(out: Out, header: &[&str], rows: &[Vec<f64>]) {
    match out {
        Out::Csv => {
            println!("{}", header.join(","));
            for row in rows {
                let cells: Vec<String> = row.iter().map(|v| format!("{v:.16e}")).collect();
                println!("{}", cells.join(","));
            }
        }
        Out::Json => {
            let items: Vec<serde_json::Value> = rows
                .iter()
                .map(|row| {
                    header
                        .iter()
                        .zip(row.iter())
                        .map(|(k, v)| (k.to_string(), serde_json::json!(v)))
                        .collect::<serde_json::Map<_, _>>()
                        .into()
                })
                .collect();
            println!("{}", serde_json::to_string_pretty(&items).unwrap());
        }
    }
}

fn default_tol(tol: Option<f64>) -> f64 {
    tol.or_else(|| std::env::var("IHAT_TOL").ok().and_then(|s| s.parse().ok()))
        .unwrap_or(1e-10)
}

fn pdf_rows(d: &IhatDensity, grid: &str, tol: f64, out: Out) -> Result<(), Failure> {
    let mut rows = Vec::new();
    for y in parse_grid(grid)? {
        rows.push(vec![y, d.pdf_with_tol(y, tol)?]);
    }
    emit_rows(out, &["y", "pdf"], &rows);
    Ok(())
}

fn emit_density(d: &IhatDensity, y: Option<&str>, tol: f64, out: Out) -> Result<(), Failure> {
    match y {
        Some(grid) => pdf_rows(d, grid, tol, out)?,
        None => println!("{}", serde_json::to_string_pretty(d).unwrap()),
    }
    Ok(())
}

fn report_json(r: &ihat_core::VerificationReport) -> serde_json::Value {
    serde_json::json!({
        "kind": match r.kind {
            ihat_core::ReportKind::Pointwise => "pointwise",
            ihat_core::ReportKind::Ks => "ks",
            ihat_core::ReportKind::Moments => "moments",
        },
        "statistic": r.statistic,
        "threshold": r.threshold,
        "passed": r.passed,
        "seed": r.seed,
        "n": r.n,
    })
}

fn run(cli: Cli) -> Result<(), Failure> {
    let tol = default_tol(cli.tol);
    let out = cli.out;
    match cli.cmd {
        Cmd::Eval { spec, z, shift } => {
            let f = load_scaled(&spec)?;
            let contour = Contour { shift, abs_tol: tol, ..Contour::default() };
            let mut rows = Vec::new();
            for x in parse_grid(&z)? {
                let arg = f.z() * x.powf(f.power());
                let r = ihat_eval_report(f.spec(), arg, &contour)?;
                rows.push(vec![x, r.value, r.est_error]);
            }
            emit_rows(out, &["z", "value", "est_error"], &rows);
            Ok(())
        }
        Cmd::Mellin { spec, s, oracle_tol } => {
            let f = load_scaled(&spec)?;
            let mut rows = Vec::new();
            for part in s.split(',') {
                let s: f64 = part.trim().parse().map_err(|_| Failure {
                    code: 3,
                    message: format!("bad mellin point '{part}'"),
                })?;
                let closed = mellin_ihat(&f, Complex64::new(s, 0.0))?.re;
                let quad = mellin_ihat_quadrature(&f, s, oracle_tol)?;
                let rel = (closed - quad).abs() / quad.abs().max(1e-300);
                rows.push(vec![s, closed, quad, rel]);
            }
            emit_rows(out, &["s", "closed_form", "quadrature_oracle", "rel_err"], &rows);
            Ok(())
        }
        Cmd::Dist { spec, y } => {
            let d = make_base_dist(&load_base(&spec)?)?;
            emit_density(&d, y.as_deref(), tol, out)
        }
        Cmd::Product { spec, spec2, y } => {
            let d = product_dist(&load_base(&spec)?, &load_base(&spec2)?)?;
            emit_density(&d, y.as_deref(), tol, out)
        }
        Cmd::Quotient { spec, spec2, y } => {
            let d = quotient_dist(&load_base(&spec)?, &load_base(&spec2)?)?;
            emit_density(&d, y.as_deref(), tol, out)
        }
        Cmd::Sample { spec, n, seed } => {
            let d = load_density(&spec)?;
            let table = tabulate_cdf(&d, DEFAULT_GRID)?;
            let batch = sample_table(&table, n, seed);
            emit_rows(out, &["value"], &batch.values.iter().map(|v| vec![*v]).collect::<Vec<_>>());
            Ok(())
        }
        Cmd::Verify { spec, spec2, op, n, seed, points } => {
            let b1 = load_base(&spec)?;
            let b2 = load_base(&spec2)?;
            let d1 = make_base_dist(&b1)?;
            let d2 = make_base_dist(&b2)?;
            let (merged, merge_op, op_name) = match op {
                Op::Product => (product_dist(&b1, &b2)?, MergeOp::Product, "product"),
                Op::Quotient => (quotient_dist(&b1, &b2)?, MergeOp::Quotient, "quotient"),
            };
            let pointwise = pointwise_oracle_report(merge_op, &merged, &d1, &d2, points, 1e-4)?;
            // Monte Carlo end to end: draw from the factor tables, combine
            // pairwise, compare against the merged table
            let t1 = tabulate_cdf(&d1, DEFAULT_GRID)?;
            let t2 = tabulate_cdf(&d2, DEFAULT_GRID)?;
            let tm = tabulate_cdf(&merged, DEFAULT_GRID)?;
            let x1 = sample_table(&t1, n, seed);
            let x2 = sample_table(&t2, n, seed ^ 0x9e37_79b9_7f4a_7c15);
            let combined: Vec<f64> = x1
                .values
                .iter()
                .zip(x2.values.iter())
                .map(|(a, b)| match op {
                    Op::Product => a * b,
                    Op::Quotient => a / b,
                })
                .collect();
            let batch = ihat_core::SampleBatch { values: combined, seed, n };
            let ks = ks_compare_table(&tm, &batch)?;
            let passed = pointwise.passed && ks.passed;
            let doc = serde_json::json!({
                "op": op_name,
                "density": serde_json::to_value(&merged).unwrap(),
                "reports": [report_json(&pointwise), report_json(&ks)],
                "passed": passed,
            });
            println!("{}", serde_json::to_string_pretty(&doc).unwrap());
            if !passed {
                return Err(Failure { code: 4, message: "verification failed".into() });
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
