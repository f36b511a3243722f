//! The `permdiv` command line.
//!
//! Exit codes: 0 on success, 1 when a computation fails (capacity limits,
//! oracle preconditions, unwritable output), 2 for usage errors. Flag values
//! are checked before any work starts and a usage error names the flag.
//!
//! `PERMDIV_THREADS` caps the number of worker threads. Results never depend
//! on it.

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use serde_json::json;

use crate::divproc::Weight;
use crate::enumexact::{
    exact_mean_lattice, free_probability, friable_probability, second_moment_identity,
    sup_distance_to_cdf,
};
use crate::error::Error;
use crate::oracles::{buchstab_omega, dickman_rho, regularized_incomplete_beta};
use crate::report::{format_real, metadata_table, report_tables, tables_to_csv, to_json, Format, Table};
use crate::rng::DEFAULT_SEED;
use crate::sampler::{MeasureSpec, SamplerRegistry};
use crate::stats::{
    increment_atom_study, modulus_scaling_study, run_ensemble, verify_joint_moments,
    EnsembleConfig, ReportMetadata,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_RUNTIME: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

/// Environment variable capping the worker count.
pub const THREADS_ENV: &str = "PERMDIV_THREADS";

#[derive(Parser, Debug)]
#[command(
    name = "permdiv",
    version,
    about = "Divisor process of random permutations",
    allow_negative_numbers = true
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Full ensemble report: mean curve, moments, modulus table, increments.
    Simulate {
        #[command(flatten)]
        ens: EnsembleArgs,
        /// Times of one product moment to estimate, e.g. 0.3,0.6.
        #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
        tvec: Option<Vec<f64>>,
        #[arg(long = "a-list", value_delimiter = ',', default_value = "0.2,0.1,0.05,0.02", allow_negative_numbers = true)]
        a_list: Vec<f64>,
        #[arg(long, default_value_t = 0.3, allow_negative_numbers = true)]
        s: f64,
        #[arg(long, default_value_t = 0.7, allow_negative_numbers = true)]
        t: f64,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Ensemble mean curve and its distance to the beta law.
    MeanCurve {
        #[command(flatten)]
        ens: EnsembleArgs,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Ensemble product moment against the Dirichlet oracle.
    Moments {
        #[command(flatten)]
        ens: EnsembleArgs,
        #[arg(long)]
        l: usize,
        #[arg(long, value_delimiter = ',', required = true, allow_negative_numbers = true)]
        tvec: Vec<f64>,
        /// Dirichlet draws for the oracle.
        #[arg(long = "oracle-samples", default_value_t = 1_000_000)]
        oracle_samples: usize,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Mean modulus of continuity for a list of window lengths.
    Modulus {
        #[command(flatten)]
        ens: EnsembleArgs,
        #[arg(long = "a-list", value_delimiter = ',', default_value = "0.2,0.1,0.05,0.02", allow_negative_numbers = true)]
        a_list: Vec<f64>,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Histogram of X(t) - X(s) and its largest atoms.
    Increments {
        #[command(flatten)]
        ens: EnsembleArgs,
        #[arg(long, default_value_t = 0.3, allow_negative_numbers = true)]
        s: f64,
        #[arg(long, default_value_t = 0.7, allow_negative_numbers = true)]
        t: f64,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Regularized incomplete beta function B(t; a, b).
    Beta {
        #[arg(long, allow_negative_numbers = true)]
        t: f64,
        #[arg(long, allow_negative_numbers = true)]
        a: f64,
        #[arg(long, allow_negative_numbers = true)]
        b: f64,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Dickman's function rho(u).
    Dickman {
        #[arg(long, allow_negative_numbers = true)]
        u: f64,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Buchstab's function omega(u).
    Buchstab {
        #[arg(long, allow_negative_numbers = true)]
        u: f64,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Probability that a uniform permutation of size m has no cycle longer than r.
    Friable {
        #[arg(long)]
        m: usize,
        #[arg(long)]
        r: usize,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Probability that a uniform permutation of size m has no cycle of length at most r.
    Free {
        #[arg(long)]
        m: usize,
        #[arg(long)]
        r: usize,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Both sides of the second-moment identity for cycles longer than r.
    KmIdentity {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        r: usize,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Exact mean trajectory E X_n(k/n) by enumerating cycle types (n <= 60).
    ExactMean {
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
        theta: f64,
        #[command(flatten)]
        out: OutputArgs,
    },
}

#[derive(Args, Debug)]
struct EnsembleArgs {
    #[arg(long, default_value_t = 1000)]
    n: usize,
    #[arg(long, default_value_t = 10_000)]
    samples: usize,
    #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
    theta: f64,
    /// Integer seed or `random` (default 20240917).
    #[arg(long, value_parser = parse_seed)]
    seed: Option<u64>,
    #[arg(long, default_value_t = 200)]
    grid: usize,
    /// `uniform` or `ewens:<param>`.
    #[arg(long, default_value = "uniform")]
    measure: String,
}

#[derive(Args, Debug)]
struct OutputArgs {
    /// Write results to this file instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    /// `csv` or `json`; scalar results default to a plain decimal.
    #[arg(long)]
    format: Option<String>,
}

fn parse_seed(s: &str) -> std::result::Result<u64, String> {
    if s == "random" {
        return Ok(rand::random());
    }
    s.parse()
        .map_err(|_| format!("expected a nonnegative integer or `random`, got `{s}`"))
}

/// How a command failed.
#[derive(Debug)]
enum Failure {
    Usage(String),
    Runtime(String),
}

impl Failure {
    fn flag(name: &str, reason: impl std::fmt::Display) -> Self {
        Failure::Usage(format!("invalid value for --{name}: {reason}"))
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Runtime(e.to_string())
    }
}

/// Maps precondition errors from config validation onto the flag they name;
/// capacity errors stay runtime errors.
fn validation(e: Error) -> Failure {
    match e {
        // ensemble window lengths arrive through --a-list
        Error::InvalidArgument { name: "a", reason } => Failure::flag("a-list", reason),
        Error::InvalidArgument { name, reason } => Failure::flag(name, reason),
        Error::UnknownMeasure(m) => Failure::flag("measure", format!("unknown measure `{m}`")),
        other => Failure::Runtime(other.to_string()),
    }
}

/// Rendered output of one command.
struct Rendered {
    csv: String,
    json: serde_json::Value,
    scalar: bool,
}

impl Rendered {
    fn scalar(name: &str, value: f64) -> Self {
        Rendered {
            csv: format!("{}\n", format_real(value)),
            json: json!({ name: value }),
            scalar: true,
        }
    }

    fn tables(tables: &[Table], json: impl Serialize) -> Self {
        Rendered {
            csv: tables_to_csv(tables),
            json: serde_json::to_value(json).expect("results always serialise"),
            scalar: false,
        }
    }
}

/// Runs the command line `argv` (program name first) and returns the exit code.
pub fn dispatch<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    let pool = match thread_pool() {
        Ok(p) => p,
        Err(f) => return report_failure(f),
    };
    match pool.install(|| run(cli.command)) {
        Ok(()) => EXIT_OK,
        Err(f) => report_failure(f),
    }
}

fn report_failure(f: Failure) -> i32 {
    match f {
        Failure::Usage(msg) => {
            eprintln!("error: {msg}");
            EXIT_USAGE
        }
        Failure::Runtime(msg) => {
            eprintln!("error: {msg}");
            EXIT_RUNTIME
        }
    }
}

fn thread_pool() -> Result<rayon::ThreadPool, Failure> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Ok(v) = std::env::var(THREADS_ENV) {
        let k: usize = v
            .trim()
            .parse()
            .ok()
            .filter(|&k| k > 0)
            .ok_or_else(|| Failure::Usage(format!("{THREADS_ENV} must be a positive integer, got `{v}`")))?;
        builder = builder.num_threads(k);
    }
    builder
        .build()
        .map_err(|e| Failure::Runtime(format!("cannot start worker threads: {e}")))
}

fn ensemble_config(a: &EnsembleArgs) -> Result<EnsembleConfig, Failure> {
    let measure: MeasureSpec = a.measure.parse().map_err(validation)?;
    SamplerRegistry::with_builtins()
        .build(&measure)
        .map_err(|e| Failure::flag("measure", e))?;
    Ok(EnsembleConfig {
        n: a.n,
        samples: a.samples,
        theta: a.theta,
        seed: a.seed.unwrap_or(DEFAULT_SEED),
        grid: a.grid,
        measure,
        moments: Vec::new(),
        windows: Vec::new(),
        increment: None,
        ..EnsembleConfig::default()
    })
}

fn checked(cfg: EnsembleConfig) -> Result<EnsembleConfig, Failure> {
    match cfg.validate() {
        Ok(()) => Ok(cfg),
        Err(e) => Err(validation(e)),
    }
}

fn run(command: Command) -> Result<(), Failure> {
    let (rendered, out) = match command {
        Command::Simulate {
            ens,
            tvec,
            a_list,
            s,
            t,
            out,
        } => {
            let cfg = checked(EnsembleConfig {
                moments: tvec.into_iter().collect(),
                windows: a_list,
                increment: Some((s, t)),
                ..ensemble_config(&ens)?
            })?;
            let format = output_format(&out)?;
            let report = run_ensemble(&cfg)?;
            (Rendered::tables(&report_tables(&report), &report), (out, format))
        }
        Command::MeanCurve { ens, out } => {
            let cfg = checked(ensemble_config(&ens)?)?;
            let format = output_format(&out)?;
            let report = run_ensemble(&cfg)?;
            (Rendered::tables(&report_tables(&report), &report), (out, format))
        }
        Command::Moments {
            ens,
            l,
            tvec,
            oracle_samples,
            out,
        } => {
            if !(1..=4).contains(&l) {
                return Err(Failure::flag("l", "must lie in 1..=4"));
            }
            if tvec.len() != l {
                return Err(Failure::flag("tvec", format!("expected {l} times, got {}", tvec.len())));
            }
            let cfg = checked(EnsembleConfig {
                moments: vec![tvec.clone()],
                oracle_samples,
                ..ensemble_config(&ens)?
            })?;
            let format = output_format(&out)?;
            let check = verify_joint_moments(&cfg, l, &tvec)?;
            let mut table = Table::new(
                "joint_moment",
                &["l", "tvec", "empirical", "empirical_se", "oracle", "oracle_se", "z_score"],
            );
            table.push(vec![
                l.to_string(),
                tvec.iter().map(|&x| format_real(x)).collect::<Vec<_>>().join(";"),
                format_real(check.empirical),
                format_real(check.empirical_se),
                format_real(check.oracle),
                format_real(check.oracle_se),
                format_real(check.z_score),
            ]);
            let meta = ReportMetadata::from_config(&cfg);
            let tables = [metadata_table(&meta), table];
            let json = json!({ "metadata": meta, "joint_moment": check });
            (Rendered::tables(&tables, json), (out, format))
        }
        Command::Modulus { ens, a_list, out } => {
            let cfg = checked(EnsembleConfig {
                windows: a_list.clone(),
                ..ensemble_config(&ens)?
            })?;
            if a_list.is_empty() {
                return Err(Failure::flag("a-list", "need at least one window length"));
            }
            let format = output_format(&out)?;
            let rows = modulus_scaling_study(&cfg, &a_list)?;
            let mut table = Table::new("modulus_scaling", &["a", "mean_q", "std_error", "ratio"]);
            for r in &rows {
                table.push(vec![
                    format_real(r.a),
                    format_real(r.mean_q),
                    format_real(r.std_error),
                    format_real(r.ratio),
                ]);
            }
            let meta = ReportMetadata::from_config(&cfg);
            let tables = [metadata_table(&meta), table];
            let json = json!({ "metadata": meta, "modulus_scaling": rows });
            (Rendered::tables(&tables, json), (out, format))
        }
        Command::Increments { ens, s, t, out } => {
            let cfg = checked(EnsembleConfig {
                increment: Some((s, t)),
                ..ensemble_config(&ens)?
            })?;
            let format = output_format(&out)?;
            let study = increment_atom_study(&cfg, s, t)?;
            let mut hist = Table::new("increment_histogram", &["value", "count", "frequency"]);
            for b in &study.histogram.bins {
                hist.push(vec![format_real(b.value), b.count.to_string(), format_real(b.frequency)]);
            }
            let mut top = Table::new("top_atoms", &["value", "count", "frequency"]);
            for b in &study.top_atoms {
                top.push(vec![format_real(b.value), b.count.to_string(), format_real(b.frequency)]);
            }
            let mut summary = Table::new("summary", &["key", "value"]);
            summary.push(vec!["top_atom_mass".into(), format_real(study.top_atom_mass)]);
            if let Some(d) = &study.histogram.dyadic {
                summary.push(vec!["dyadic_checked".into(), d.checked.to_string()]);
                summary.push(vec!["dyadic_failures".into(), d.failures.to_string()]);
            }
            let meta = ReportMetadata::from_config(&cfg);
            let tables = [metadata_table(&meta), hist, top, summary];
            let json = json!({ "metadata": meta, "increments": study });
            (Rendered::tables(&tables, json), (out, format))
        }
        Command::Beta { t, a, b, out } => {
            if !(0.0..=1.0).contains(&t) {
                return Err(Failure::flag("t", "must lie in [0, 1]"));
            }
            if !(a > 0.0 && a.is_finite()) {
                return Err(Failure::flag("a", "must be positive"));
            }
            if !(b > 0.0 && b.is_finite()) {
                return Err(Failure::flag("b", "must be positive"));
            }
            let format = output_format(&out)?;
            let v = regularized_incomplete_beta(t, a, b)?;
            (Rendered::scalar("beta", v), (out, format))
        }
        Command::Dickman { u, out } => {
            if !(u >= 0.0) {
                return Err(Failure::flag("u", "must be nonnegative"));
            }
            let format = output_format(&out)?;
            (Rendered::scalar("rho", dickman_rho(u)?), (out, format))
        }
        Command::Buchstab { u, out } => {
            if !(u >= 1.0) {
                return Err(Failure::flag("u", "must be at least 1"));
            }
            let format = output_format(&out)?;
            (Rendered::scalar("omega", buchstab_omega(u)?), (out, format))
        }
        Command::Friable { m, r, out } => {
            if r == 0 {
                return Err(Failure::flag("r", "must be at least 1"));
            }
            let format = output_format(&out)?;
            (Rendered::scalar("friable", friable_probability(m, r)?), (out, format))
        }
        Command::Free { m, r, out } => {
            let format = output_format(&out)?;
            (Rendered::scalar("free", free_probability(m, r)?), (out, format))
        }
        Command::KmIdentity { n, r, out } => {
            if n == 0 {
                return Err(Failure::flag("n", "must be at least 1"));
            }
            let format = output_format(&out)?;
            let (lhs, rhs) = second_moment_identity(n, r)?;
            let mut table = Table::new("km_identity", &["n", "r", "lhs", "rhs", "difference"]);
            table.push(vec![
                n.to_string(),
                r.to_string(),
                format_real(lhs),
                format_real(rhs),
                format_real(lhs - rhs),
            ]);
            let json = json!({ "n": n, "r": r, "lhs": lhs, "rhs": rhs, "difference": lhs - rhs });
            (Rendered::tables(&[table], json), (out, format))
        }
        Command::ExactMean { n, theta, out } => {
            if n == 0 {
                return Err(Failure::flag("n", "must be at least 1"));
            }
            let weight = Weight::new(theta).map_err(validation)?;
            let format = output_format(&out)?;
            let means = exact_mean_lattice(n, weight)?;
            let a = weight.limit_param();
            let cdf = |t: f64| regularized_incomplete_beta(t, a, 1.0 - a).unwrap_or(f64::NAN);
            let mut table = Table::new("exact_mean", &["k", "t", "mean", "beta"]);
            for (k, &m) in means.iter().enumerate() {
                let t = k as f64 / n as f64;
                table.push(vec![k.to_string(), format_real(t), format_real(m), format_real(cdf(t))]);
            }
            let sup = sup_distance_to_cdf(&means, cdf);
            let mut dist = Table::new("oracle_distances", &["name", "value"]);
            dist.push(vec!["sup_vs_beta".into(), format_real(sup)]);
            let json = json!({ "n": n, "theta": theta, "mean": means, "sup_vs_beta": sup });
            (Rendered::tables(&[table, dist], json), (out, format))
        }
    };
    emit(&rendered, &out.0.out, out.1)
}

fn output_format(out: &OutputArgs) -> Result<Option<Format>, Failure> {
    out.format
        .as_deref()
        .map(|f| f.parse::<Format>().map_err(validation))
        .transpose()
}

fn emit(r: &Rendered, path: &Option<PathBuf>, format: Option<Format>) -> Result<(), Failure> {
    let text = match format {
        Some(Format::Json) => to_json(&r.json),
        Some(Format::Csv) if r.scalar => {
            let key = r.json.as_object().and_then(|o| o.keys().next()).cloned().unwrap_or_default();
            format!("{key}\n{}", r.csv)
        }
        _ => r.csv.clone(),
    };
    match path {
        Some(p) => std::fs::write(p, text)
            .map_err(|e| Failure::Runtime(format!("cannot write {}: {e}", p.display()))),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout
                .write_all(text.as_bytes())
                .and_then(|_| stdout.flush())
                .map_err(|e| Failure::Runtime(format!("cannot write to stdout: {e}")))
        }
    }
}
