use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::output::Table;
use super::Partial;
use crate::config::{Config, Experiment};
use crate::error::{Error, Result};
use crate::estimator::stats::{ks_two_sample, MeanEstimate};
use crate::estimator::{blocking, covariance, density, gap, maxscan::MaxScan, tail, SampleSet};
use crate::kernel;

/// One pass/fail invariant of an experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

impl Check {
    fn new(name: &str, pass: bool, detail: String) -> Self {
        Self {
            name: name.into(),
            pass,
            detail,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    pub experiment: Experiment,
    pub checks: Vec<Check>,
    pub results: Value,
    pub tables: Vec<Table>,
}

impl Report {
    pub fn pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }
}

fn f(x: f64) -> String {
    format!("{x}")
}

/// Estimators and invariants of `cfg.experiment` on gathered observations.
pub fn evaluate(cfg: &Config, partial: &Partial) -> Result<Report> {
    let s = &partial.samples;
    if s.len() < 3 {
        return Err(Error::InsufficientData(format!("{} usable replicas", s.len())));
    }
    let (checks, results, tables) = match cfg.experiment {
        Experiment::Simulate => simulate(cfg, s)?,
        Experiment::Tail => tail_report(cfg, s)?,
        Experiment::Cov => cov(cfg, s)?,
        Experiment::Gap => gap_report(cfg, s)?,
        Experiment::Density => density_report(cfg, s)?,
        Experiment::Maxscan => maxscan_report(cfg, s)?,
        Experiment::Blocking => blocking_report(cfg, s)?,
    };
    let checks = if cfg.enabled.is_empty() {
        checks
    } else {
        if let Some(name) = cfg.enabled.iter().find(|n| !checks.iter().any(|c| &c.name == *n)) {
            return Err(Error::Config(format!(
                "enabled check {name:?} does not exist for {}",
                cfg.experiment.name()
            )));
        }
        checks.into_iter().filter(|c| cfg.enabled.contains(&c.name)).collect()
    };
    Ok(Report {
        experiment: cfg.experiment,
        checks,
        results,
        tables,
    })
}

type Parts = (Vec<Check>, Value, Vec<Table>);

fn simulate(cfg: &Config, s: &SampleSet) -> Result<Parts> {
    let m = cfg.simulate.mean_one_replicas;
    let first = s.filter_replicas(|r| r < m);
    let second = s.filter_replicas(|r| r >= m && r < 2 * m);
    let labels = s.labels().to_vec();

    let mut mean_rows = Vec::new();
    let mut worst_z: f64 = 0.0;
    for &x in &labels {
        let u: Vec<f64> = first.column_at(x)?.iter().map(|v| v.exp()).collect();
        let e = MeanEstimate::of(&u)?;
        worst_z = worst_z.max(e.z(1.0).abs());
        mean_rows.push(vec![f(x), e.n.to_string(), f(e.mean), f(e.standard_error), f(e.z(1.0))]);
    }
    let mut checks = vec![Check::new(
        "mean_one",
        worst_z <= cfg.simulate.mean_one_z,
        format!("max |z| = {worst_z:.3} over {} points", labels.len()),
    )];

    let mut ks_rows = Vec::new();
    let mut min_p = 1.0f64;
    if second.len() >= 2 {
        let a = first.column_at(0.0)?;
        for &x in labels.iter().filter(|&&x| x != 0.0) {
            let r = ks_two_sample(&a, &second.column_at(x)?)?;
            min_p = min_p.min(r.p_value);
            ks_rows.push(vec![f(x), r.n1.to_string(), r.n2.to_string(), f(r.statistic), f(r.p_value)]);
        }
        checks.push(Check::new(
            "stationarity",
            min_p >= cfg.simulate.ks_alpha,
            format!("min KS p = {min_p:.4} against x = 0 on disjoint replicas"),
        ));
    }

    // Second moment at each point against x = 0, paired on the same replicas.
    let base: Vec<f64> = s.column_at(0.0)?.iter().map(|v| (2.0 * v).exp()).collect();
    let mut moment_rows = Vec::new();
    let mut worst_mz: f64 = 0.0;
    for &x in &labels {
        let col = s.column_at(x)?;
        let m2: Vec<f64> = col.iter().map(|v| (2.0 * v).exp()).collect();
        let m4: Vec<f64> = col.iter().map(|v| (4.0 * v).exp()).collect();
        let e2 = MeanEstimate::of(&m2)?;
        let e4 = MeanEstimate::of(&m4)?;
        let d: Vec<f64> = m2.iter().zip(&base).map(|(a, b)| a - b).collect();
        let z = if x == 0.0 { 0.0 } else { MeanEstimate::of(&d)?.z(0.0) };
        worst_mz = worst_mz.max(z.abs());
        moment_rows.push(vec![
            f(x),
            f(e2.mean),
            f(e2.standard_error),
            f(e4.mean),
            f(e4.standard_error),
            f(z),
        ]);
    }
    checks.push(Check::new(
        "moment_envelope",
        worst_mz <= cfg.simulate.moment_z && moment_rows.iter().all(|r| r[3].parse::<f64>().is_ok_and(f64::is_finite)),
        format!("max paired |z| of E U^2 against x = 0: {worst_mz:.3}"),
    ));

    let mut sample_header = vec!["replica".to_string()];
    sample_header.extend(labels.iter().map(|x| format!("logU({x})")));
    let sample_rows = s
        .replicas()
        .iter()
        .zip(s.rows())
        .map(|(id, row)| std::iter::once(id.to_string()).chain(row.iter().map(|v| f(*v))).collect())
        .collect();

    let results = json!({
        "points": labels,
        "mean_one_max_abs_z": worst_z,
        "ks_min_p": min_p,
        "moment_max_abs_z": worst_mz,
    });
    let tables = vec![
        Table::new("samples", &sample_header.iter().map(String::as_str).collect::<Vec<_>>(), sample_rows),
        Table::new("mean_one", &["x", "n", "mean_U", "standard_error", "z"], mean_rows),
        Table::new("stationarity", &["x", "n_origin", "n_x", "ks_statistic", "p_value"], ks_rows),
        Table::new(
            "moments",
            &["x", "mean_U2", "se_U2", "mean_U4", "se_U4", "paired_z_U2"],
            moment_rows,
        ),
    ];
    Ok((checks, results, tables))
}

fn tail_report(cfg: &Config, s: &SampleSet) -> Result<Parts> {
    let target = kernel::theory_constants(cfg.t)?.tail_coefficient;
    let opts = tail::TailOptions {
        min_count: cfg.tail.min_count,
        min_replicas: cfg.tail.min_replicas,
        bootstrap: cfg.tail.bootstrap,
        seed: cfg.seed,
    };
    let calib_samples = tail::stretched_exponential_samples(cfg.tail.calibration_replicas, cfg.seed ^ 0xca11);
    let calib_opts = tail::TailOptions {
        min_replicas: 0,
        bootstrap: 0,
        ..opts
    };
    let calib = tail::tail_fit(&calib_samples, &cfg.tail.theta, &calib_opts)?;
    let fit = tail::tail_fit(&s.column_at(0.0)?, &cfg.tail.theta, &opts)?;
    let dev = fit.relative_deviation(target);
    let checks = vec![
        Check::new(
            "calibration",
            (calib.coefficient - 1.0).abs() <= cfg.tail.calibration_tolerance,
            format!("synthetic coefficient {:.4} (exact 1)", calib.coefficient),
        ),
        Check::new(
            "tail_coefficient",
            dev.abs() <= cfg.tail.tolerance,
            format!(
                "coefficient {:.4} [{:.4}, {:.4}] vs target {:.4}, relative deviation {:+.3}",
                fit.coefficient, fit.ci_low, fit.ci_high, target, dev
            ),
        ),
    ];
    let rows = (0..fit.thresholds.len())
        .map(|k| {
            vec![
                f(fit.thresholds[k]),
                fit.counts[k].to_string(),
                f(fit.survival[k]),
                f(fit.survival[k].ln()),
                fit.usable[k].to_string(),
            ]
        })
        .collect();
    let results = json!({
        "n": fit.n,
        "coefficient": fit.coefficient,
        "intercept": fit.intercept,
        "ci_low": fit.ci_low,
        "ci_high": fit.ci_high,
        "target": target,
        "relative_deviation": dev,
        "usable_thresholds": fit.usable_count(),
        "calibration_coefficient": calib.coefficient,
    });
    Ok((
        checks,
        results,
        vec![Table::new("tail", &["theta", "count", "survival", "log_survival", "usable"], rows)],
    ))
}

fn cov(cfg: &Config, s: &SampleSet) -> Result<Parts> {
    let ests = cfg
        .cov
        .x
        .iter()
        .map(|&x| Ok((x, covariance::log_covariance(s, 0.0, x)?)))
        .collect::<Result<Vec<_>>>()?;
    let rep = covariance::covariance_decay(cfg.t, &ests, cfg.cov.bound_factor)?;
    let chaos = (cfg.t / (4.0 * std::f64::consts::PI)).sqrt();
    let rows = rep
        .rows
        .iter()
        .map(|r| {
            vec![
                f(r.x),
                f(r.covariance),
                f(r.standard_error),
                f(r.product),
                f(r.product_se),
                f(r.integral_bound),
                f(chaos * r.integral_bound),
            ]
        })
        .collect();
    let checks = vec![
        Check::new(
            "non_increasing",
            rep.non_increasing,
            format!(
                "|cov|*|x| {}",
                if rep.non_increasing {
                    "never rises by more than 2 SE"
                } else {
                    "rises by more than 2 SE somewhere"
                }
            ),
        ),
        Check::new(
            "bounded",
            rep.bounded,
            format!(
                "max |cov|*|x| / first = {:.3} (limit {})",
                rep.max_ratio_to_first, rep.bound_factor
            ),
        ),
    ];
    let results = json!({
        "n": s.len(),
        "fitted_c": rep.fitted_c,
        "max_ratio_to_first": rep.max_ratio_to_first,
        "bound_factor": rep.bound_factor,
    });
    Ok((
        checks,
        results,
        vec![Table::new(
            "cov",
            &[
                "x",
                "covariance",
                "standard_error",
                "abs_cov_times_x",
                "product_se",
                "integral_bound",
                "first_order_prediction",
            ],
            rows,
        )],
    ))
}

fn gap_report(cfg: &Config, s: &SampleSet) -> Result<Parts> {
    let a = s.column_at(0.0)?;
    let b = s.column_at(cfg.gap.x)?;
    let rep = gap::cdf_gap_test(&a, &b, &gap::quantile_levels(cfg.gap.levels))?;
    let assoc = gap::association_library(s.labels())?
        .iter()
        .map(|(h1, h2)| gap::association_test(s, h1, h2))
        .collect::<Result<Vec<_>>>()?;
    let failing = assoc.iter().filter(|r| !r.pass).count();
    let checks = vec![
        Check::new(
            "cdf_gap",
            rep.violations == 0,
            format!("{} of {} cells below -3 SE, min z {:.3}", rep.violations, rep.cells.len(), rep.min_z),
        ),
        Check::new(
            "association",
            failing == 0 && !rep.association_anomaly,
            format!("{failing} of {} monotone pairs below -3 SE", assoc.len()),
        ),
    ];
    let cells = rep
        .cells
        .iter()
        .map(|c| vec![f(c.a), f(c.b), f(c.joint), f(c.product), f(c.gap), f(c.standard_error)])
        .collect();
    let pairs = assoc
        .iter()
        .map(|r| {
            vec![
                r.h1.clone(),
                r.h2.clone(),
                f(r.estimate.covariance),
                f(r.estimate.standard_error),
                r.pass.to_string(),
            ]
        })
        .collect();
    let results = json!({
        "n": rep.n,
        "x": cfg.gap.x,
        "max_gap": rep.max_gap,
        "min_z": rep.min_z,
        "violations": rep.violations,
        "covariance": rep.covariance.covariance,
        "covariance_se": rep.covariance.standard_error,
        "gap_to_cov_cube_root": rep.ratio,
        "association_failures": failing,
    });
    Ok((
        checks,
        results,
        vec![
            Table::new("gap", &["a", "b", "joint", "product", "gap", "standard_error"], cells),
            Table::new("association", &["h1", "h2", "covariance", "standard_error", "pass"], pairs),
        ],
    ))
}

fn density_report(cfg: &Config, s: &SampleSet) -> Result<Parts> {
    let d = &cfg.density;
    let x = if d.replicas > 0 {
        s.filter_replicas(|r| r < d.replicas).column_at(0.0)?
    } else {
        s.column_at(0.0)?
    };
    let bw = (d.bandwidth > 0.0).then_some(d.bandwidth);
    let rep = density::density_boundedness(&x, bw, d.min_count)?;
    let kappa = rep.tail.as_ref().map(|t| t.exponent);
    let checks = vec![
        Check::new(
            "sup_stable",
            rep.stable_within(d.stability),
            format!("sup {:.4}, at half bandwidth {:.4}, change {:.3}", rep.sup, rep.sup_half, rep.stability),
        ),
        Check::new(
            "tail_exponent",
            kappa.is_some_and(|k| k >= d.exponent_low && k <= d.exponent_high),
            match kappa {
                Some(k) => format!("fitted exponent {k:.3}, accepted [{}, {}]", d.exponent_low, d.exponent_high),
                None => "tail window too small to fit".into(),
            },
        ),
    ];
    let curve = (0..rep.points.len())
        .map(|i| vec![f(rep.points[i]), f(rep.density[i]), f(rep.density_half[i])])
        .collect();
    let tail_rows = rep
        .tail
        .as_ref()
        .map(|t| {
            (0..t.thresholds.len())
                .map(|i| vec![f(t.thresholds[i]), f(t.survival[i]), f(-t.survival[i].ln())])
                .collect()
        })
        .unwrap_or_default();
    let results = json!({
        "n": rep.n,
        "bandwidth": rep.bandwidth,
        "sup": rep.sup,
        "argsup": rep.argsup,
        "sup_half_bandwidth": rep.sup_half,
        "stability": rep.stability,
        "tail_exponent": kappa,
        "tail_coefficient": rep.tail.as_ref().map(|t| t.coefficient),
        "tail_log_prefactor": rep.tail.as_ref().map(|t| t.log_prefactor),
    });
    Ok((
        checks,
        results,
        vec![
            Table::new("density", &["y", "density", "density_half_bandwidth"], curve),
            Table::new("density_tail", &["y", "survival", "neg_log_survival"], tail_rows),
        ],
    ))
}

fn maxscan_report(cfg: &Config, s: &SampleSet) -> Result<Parts> {
    let profiles: Vec<Vec<f64>> = s.rows().map(<[f64]>::to_vec).collect();
    let scan = MaxScan::from_profiles(cfg.t, s.labels(), profiles)?;
    let m = &cfg.maxscan;
    let checks = vec![
        Check::new(
            "monotone_profiles",
            scan.profiles_monotone(),
            "M(R) non-decreasing in R for every replica".into(),
        ),
        Check::new(
            "envelope",
            scan.within(m.envelope_low, m.envelope_high),
            format!(
                "median ratios {:?} vs [{}, {}]",
                scan.ratio_median.iter().map(|v| (v * 1e4).round() / 1e4).collect::<Vec<_>>(),
                m.envelope_low,
                m.envelope_high
            ),
        ),
    ];
    let rows = (0..scan.radii.len())
        .map(|k| {
            vec![
                f(scan.radii[k]),
                f(scan.median_max[k]),
                f(scan.ratio_q10[k]),
                f(scan.ratio_median[k]),
                f(scan.ratio_q90[k]),
                f(scan.lower_const),
                f(scan.upper_const),
            ]
        })
        .collect();
    let results = json!({
        "n": s.len(),
        "radii": scan.radii,
        "offset": scan.offset,
        "ratio_median": scan.ratio_median,
        "trend_non_decreasing": scan.ratio_median.windows(2).all(|w| w[1] >= w[0]),
        "bracket": [scan.lower_const, scan.upper_const],
    });
    Ok((
        checks,
        results,
        vec![Table::new(
            "maxscan",
            &["R", "median_max", "ratio_q10", "ratio_median", "ratio_q90", "lower_const", "upper_const"],
            rows,
        )],
    ))
}

fn blocking_report(cfg: &Config, s: &SampleSet) -> Result<Parts> {
    let b = &cfg.blocking;
    let rep = blocking::blocking_scan(s, cfg.t, &b.radii, b.a, b.beta)?;
    let checks = vec![Check::new(
        "non_increasing",
        rep.non_increasing,
        format!(
            "probabilities {:?}",
            rep.rows.iter().map(|r| (r.probability * 1e4).round() / 1e4).collect::<Vec<_>>()
        ),
    )];
    let opt = |v: Option<f64>| v.map(f).unwrap_or_default();
    let rows = rep
        .rows
        .iter()
        .map(|r| {
            vec![
                f(r.r),
                r.points.len().to_string(),
                f(r.level),
                r.n.to_string(),
                f(r.probability),
                f(r.standard_error),
                opt(r.change),
                opt(r.change_se),
            ]
        })
        .collect();
    let results = json!({
        "n": s.len(),
        "a": rep.a,
        "beta": rep.beta,
        "probabilities": rep.rows.iter().map(|r| r.probability).collect::<Vec<_>>(),
        "warnings": rep.warnings,
    });
    Ok((
        checks,
        results,
        vec![Table::new(
            "blocking",
            &["R", "points", "level", "n", "probability", "standard_error", "change", "change_se"],
            rows,
        )],
    ))
}
