//! Command-line front end. Exit codes: 0 every invariant passed, 1 an
//! invariant failed or the run aborted, 2 usage or configuration error.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::config::{Config, Experiment};
use crate::error::{Error, Result};
use crate::harness::{self, Table};
use crate::kernel;
use crate::noise::NoiseStream;
use crate::solver::RaySolver;

pub const EXIT_PASS: i32 = 0;
pub const EXIT_FAIL: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "pamlab", version, about = "Monte Carlo laboratory for the parabolic Anderson model")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check the heat-kernel identities at random inputs.
    Identities(IdentityArgs),
    /// Field ensemble: mean one, stationarity, moments.
    Simulate(RunArgs),
    /// Upper-tail coefficient of log U(t,0).
    Tail(RunArgs),
    /// Covariance decay of log U.
    Cov(RunArgs),
    /// CDF gap and monotone-functional association.
    Gap(RunArgs),
    /// Density bound and tail shape of log U(t,0).
    Density(RunArgs),
    /// Spatial maximum over growing windows.
    Maxscan(RunArgs),
    /// Blocking probabilities over growing radii.
    Blocking(RunArgs),
}

#[derive(Debug, Args)]
pub struct IdentityArgs {
    #[arg(long, default_value_t = 10_000)]
    pub samples: usize,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(long, default_value_t = 1e-12)]
    pub tol: f64,
    /// Write identities.json here.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Replace the kernel by a slightly wrong one; the check must fail.
    #[arg(long, hide = true)]
    pub perturb_kernel: bool,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    /// TOML file layered over the experiment preset.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub replicas: Option<u64>,
    #[arg(long)]
    pub t: Option<f64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Worker threads, 0 for all cores.
    #[arg(long, env = "PAMLAB_THREADS", default_value_t = 0)]
    pub threads: usize,
    /// Output grid spacing.
    #[arg(long)]
    pub spacing: Option<f64>,
    /// Comma-separated observation points.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    pub points: Option<Vec<f64>>,
    /// Comma-separated tail thresholds.
    #[arg(long, value_delimiter = ',')]
    pub theta: Option<Vec<f64>>,
    /// Comma-separated radii (maxscan or blocking).
    #[arg(long, value_delimiter = ',')]
    pub radii: Option<Vec<f64>>,
    /// Comma-separated separations for the covariance table.
    #[arg(long, value_delimiter = ',')]
    pub cov_x: Option<Vec<f64>>,
    #[arg(long)]
    pub gap_x: Option<f64>,
    /// Blocking point exponent.
    #[arg(long)]
    pub a: Option<f64>,
    /// Blocking level constant.
    #[arg(long)]
    pub beta: Option<f64>,
    /// KDE bandwidth, 0 for Silverman.
    #[arg(long)]
    pub bandwidth: Option<f64>,
    /// Any configuration field, as section.key=value.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub set: Vec<String>,
    /// Also write partial.json for later resumption.
    #[arg(long)]
    pub checkpoint: bool,
    /// Resume from a partial.json written by an earlier run.
    #[arg(long)]
    pub resume: Option<PathBuf>,
    /// Print the resolved configuration as TOML and exit.
    #[arg(long)]
    pub print_config: bool,
}

fn list(v: &[f64]) -> String {
    format!("[{}]", v.iter().map(|x| format!("{x:?}")).collect::<Vec<_>>().join(", "))
}

impl RunArgs {
    fn overrides(&self, experiment: Experiment) -> Vec<String> {
        let mut o = Vec::new();
        let mut put = |k: &str, v: String| o.push(format!("{k}={v}"));
        if let Some(v) = self.seed {
            put("seed", v.to_string());
        }
        if let Some(v) = self.replicas {
            put("replicas", v.to_string());
        }
        if let Some(v) = self.t {
            put("t", format!("{v:?}"));
        }
        if let Some(v) = &self.out {
            put("out", format!("{:?}", v.display().to_string()));
        }
        if let Some(v) = self.spacing {
            put("grid.spacing", format!("{v:?}"));
        }
        if let Some(v) = &self.points {
            put("points", list(v));
        }
        if let Some(v) = &self.theta {
            put("tail.theta", list(v));
        }
        if let Some(v) = &self.radii {
            let section = if experiment == Experiment::Blocking { "blocking" } else { "maxscan" };
            put(&format!("{section}.radii"), list(v));
        }
        if let Some(v) = &self.cov_x {
            put("cov.x", list(v));
        }
        if let Some(v) = self.gap_x {
            put("gap.x", format!("{v:?}"));
        }
        if let Some(v) = self.a {
            put("blocking.a", format!("{v:?}"));
        }
        if let Some(v) = self.beta {
            put("blocking.beta", format!("{v:?}"));
        }
        if let Some(v) = self.bandwidth {
            put("density.bandwidth", format!("{v:?}"));
        }
        o.extend(self.set.iter().cloned());
        o
    }
}

fn is_usage(e: &Error) -> bool {
    matches!(e, Error::Config(_) | Error::Parse(_) | Error::Domain(_))
}

/// Parses `args` (including the program name) and runs; returns the exit code.
pub fn run_from<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_PASS };
            let _ = e.print();
            return code;
        }
    };
    match execute(cli.command) {
        Ok(true) => EXIT_PASS,
        Ok(false) => EXIT_FAIL,
        Err(e) => {
            eprintln!("pamlab: {e}");
            if is_usage(&e) {
                EXIT_USAGE
            } else {
                EXIT_FAIL
            }
        }
    }
}

/// Runs one command; `Ok(false)` when an invariant failed.
pub fn execute(command: Command) -> Result<bool> {
    let (experiment, args) = match command {
        Command::Identities(a) => return identities(&a),
        Command::Simulate(a) => (Experiment::Simulate, a),
        Command::Tail(a) => (Experiment::Tail, a),
        Command::Cov(a) => (Experiment::Cov, a),
        Command::Gap(a) => (Experiment::Gap, a),
        Command::Density(a) => (Experiment::Density, a),
        Command::Maxscan(a) => (Experiment::Maxscan, a),
        Command::Blocking(a) => (Experiment::Blocking, a),
    };
    let cfg = Config::load(experiment, args.config.as_deref(), &args.overrides(experiment))?;
    if args.print_config {
        print!("{}", cfg.to_toml());
        return Ok(true);
    }
    let started = chrono::Utc::now();
    let resume = args.resume.as_deref().map(harness::Partial::load).transpose()?;
    let partial = harness::run_partial(&cfg, args.threads, resume.as_ref())?;
    harness::check_abort_budget(&partial)?;
    let mut report = harness::evaluate(&cfg, &partial)?;
    if experiment == Experiment::Simulate {
        report.tables.push(snapshot(&cfg)?);
    }
    let files = harness::write_outputs(&cfg, &partial, &report, args.threads, started)?;
    if args.checkpoint {
        partial.save(&files.dir.join("partial.json"))?;
    }
    for c in &report.checks {
        println!("{} {}: {}", if c.pass { "PASS" } else { "FAIL" }, c.name, c.detail);
    }
    println!("wrote {}", files.summary.display());
    Ok(report.pass())
}

/// Replica 0 on the simulated window: `x, U, log U, log u`.
fn snapshot(cfg: &Config) -> Result<Table> {
    let (center, half) = cfg.window()?;
    let ratio = RaySolver::new(&cfg.ray_grid(center, half)?)?.run(Some(&NoiseStream::new(cfg.seed, 0)))?;
    let rows = (0..ratio.len())
        .map(|i| {
            let x = ratio.x(i);
            let u = ratio.values[i];
            let log_u = u.ln() + kernel::log_heat_kernel(cfg.t, x)?;
            Ok(vec![format!("{x}"), format!("{u}"), format!("{}", u.ln()), format!("{log_u}")])
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Table::new("snapshot", &["x", "U", "logU", "log_u"], rows))
}

fn perturbed_kernel(t: f64, x: f64) -> f64 {
    (-x * x / (2.0 * t)).exp() / (2.0 * std::f64::consts::PI * t).sqrt() * (1.0 + 1e-6 * x * x)
}

fn identities(a: &IdentityArgs) -> Result<bool> {
    let rep = if a.perturb_kernel {
        kernel::identity_suite_with(perturbed_kernel, a.samples, a.seed)
    } else {
        kernel::identity_suite(a.samples, a.seed)
    };
    let pass = rep.passes(a.tol);
    println!(
        "{} identities: max relative error {:.3e} (ratio {:.3e}, product {:.3e}, scaling {:.3e}), tolerance {:.0e}",
        if pass { "PASS" } else { "FAIL" },
        rep.max_rel_err(),
        rep.ratio_max_rel_err,
        rep.product_max_rel_err,
        rep.scaling_max_rel_err,
        a.tol
    );
    if let Some(dir) = &a.out {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let path = dir.join("identities.json");
        let v = serde_json::json!({ "pass": pass, "tolerance": a.tol, "report": rep });
        std::fs::write(&path, serde_json::to_string_pretty(&v).expect("serializable") + "\n")
            .map_err(|e| Error::io(&path, e))?;
    }
    Ok(pass)
}
