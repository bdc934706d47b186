use std::path::Path;
use std::sync::Arc;

use anyhow::{bail, Context, Result};
use serde::Serialize;

use carleman_lab::extension::{cs_extend, homogeneous_field, DtnMap};
use carleman_lab::inequalities::{
    carleman_battery, doubling_reports, herbst_battery, three_balls_exponent, trace_battery, ChartResolution, Family,
    TestFunctionSpec, BALL_RESOLUTION, INDICES, SEEDS, SUPPORTS,
};
use carleman_lab::spectrum::{explicit_eigenvalue, lambda_from_sturm_liouville, sturm_liouville_spectrum};
use carleman_lab::verify::{self, maxima_by_tau, Mode, REFINEMENT_TOLERANCE};
use carleman_lab::{FractionalParams, HalfPlaneGrid, InequalityReport, SpectralBoundaryData};

use crate::config::{FamilyChoice, RunConfig};
use crate::output::{num, opt, OutputDir};

/// Artifacts written and assertions that failed.
#[derive(Default)]
pub struct Outcome {
    pub artifacts: Vec<String>,
    pub failures: Vec<String>,
    pub extra: Option<serde_json::Value>,
}

impl Outcome {
    fn wrote(&mut self, path: &Path) {
        self.artifacts.push(path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default());
    }
}

pub fn run(cfg: &RunConfig, out: &OutputDir) -> Result<Outcome> {
    use crate::config::Command::*;
    match cfg.command {
        Spectrum => spectrum(cfg, out),
        Extend => extend(cfg, out),
        Carleman => carleman(cfg, out),
        Trace => trace(cfg, out),
        Doubling => doubling(cfg, out),
        Verify => run_verify(cfg, out),
    }
}

/// Tolerance of the eigenvalue cross-validation.
const SPECTRUM_TOLERANCE: f64 = 1e-3;

fn spectrum(cfg: &RunConfig, out: &OutputDir) -> Result<Outcome> {
    let mut outcome = Outcome::default();
    let cells = cfg.grid_size.unwrap_or(4000);
    let mut rows = Vec::new();
    for &s in &cfg.s {
        let numeric = sturm_liouville_spectrum(s, cfg.k_max, cells)?;
        for (k, big) in numeric.iter().enumerate() {
            let exact = explicit_eigenvalue(k, s);
            let err = (lambda_from_sturm_liouville(*big, s) - exact).abs() / exact.abs().max(1.0);
            if err > SPECTRUM_TOLERANCE {
                outcome.failures.push(format!("s={s} k={k}: relative error {err:e}"));
            }
            rows.push(vec![num(s), k.to_string(), num(exact), num(*big), num(err)]);
        }
    }
    let p = out.write_csv("spectrum.csv", &["s", "k", "lambda_explicit", "Lambda_numeric", "rel_err"], &rows)?;
    outcome.wrote(&p);
    Ok(outcome)
}

/// Uniform boundary samples read from a `y1,value` CSV.
struct Samples {
    start: f64,
    spacing: f64,
    values: Vec<f64>,
}

fn read_samples(path: &Path) -> Result<Samples> {
    let mut reader = csv::Reader::from_path(path).with_context(|| format!("cannot read {}", path.display()))?;
    let mut y = Vec::new();
    let mut values = Vec::new();
    for row in reader.records() {
        let row = row?;
        if row.len() != 2 {
            bail!(crate::config::ConfigError(format!("{}: expected two columns y1,value", path.display())));
        }
        let parse = |i: usize| -> Result<f64> {
            row[i].trim().parse::<f64>().map_err(|e| crate::config::ConfigError(format!("{}: {e}", path.display())).into())
        };
        y.push(parse(0)?);
        values.push(parse(1)?);
    }
    if y.len() < 4 {
        bail!(crate::config::ConfigError("extend needs at least four samples".into()));
    }
    let spacing = (y[y.len() - 1] - y[0]) / (y.len() - 1) as f64;
    let uniform = spacing > 0.0 && y.windows(2).all(|w| ((w[1] - w[0]) / spacing - 1.0).abs() < 1e-6);
    if !uniform {
        bail!(crate::config::ConfigError("samples must be uniformly spaced and increasing in y1".into()));
    }
    Ok(Samples { start: y[0], spacing, values })
}

#[derive(Serialize)]
struct ExtensionHeader {
    s: f64,
    d_s: f64,
    samples: usize,
    spacing: f64,
    period: f64,
    grid: [usize; 2],
    height: f64,
    trace_error: f64,
}

fn extend(cfg: &RunConfig, out: &OutputDir) -> Result<Outcome> {
    let mut outcome = Outcome::default();
    let samples = read_samples(cfg.input.as_deref().expect("validated"))?;
    let n = samples.values.len();
    let period = n as f64 * samples.spacing;
    // grid coordinate 0 is the centre of the sampled window
    let centre = samples.start + 0.5 * (n - 1) as f64 * samples.spacing;
    let data = SpectralBoundaryData::from_samples(&samples.values, samples.spacing)?.translated(centre - samples.start);
    let n2 = cfg.grid_size.unwrap_or(64);
    let mut headers = Vec::new();
    for &s in &cfg.s {
        let params = FractionalParams::new(s)?;
        let grid = Arc::new(HalfPlaneGrid::boxed(0.5 * period, period, 2 * n, n2, &params)?);
        let w = cs_extend(&data, &params, grid.clone())?;
        // samples sit on every other tangential node
        let mut trace_error: f64 = 0.0;
        let scale = samples.values.iter().fold(0.0_f64, |m, v| m.max(v.abs())).max(1e-300);
        for (j, v) in samples.values.iter().enumerate() {
            trace_error = trace_error.max((w.values()[[2 * j + 1, 0]] - v).abs() / scale);
        }
        if trace_error > 1e-8 {
            outcome.failures.push(format!("s={s}: extension trace differs from the samples by {trace_error:e}"));
        }
        let (n0, n1) = w.shape();
        let mut rows = Vec::with_capacity(n0 * n1);
        for i in 0..n0 {
            for j in 0..n1 {
                let (y1, y2) = w.node_position(i, j);
                rows.push(vec![num(y1 + centre), num(y2), num(w.values()[[i, j]])]);
            }
        }
        let p = out.write_csv(&format!("extension-s{s}.csv"), &["y1", "y2", "value"], &rows)?;
        outcome.wrote(&p);
        headers.push(ExtensionHeader {
            s,
            d_s: DtnMap::new(s)?.d_s,
            samples: n,
            spacing: samples.spacing,
            period,
            grid: [2 * n, n2],
            height: period,
            trace_error,
        });
    }
    let p = out.write_json("extension.json", &headers)?;
    outcome.wrote(&p);
    Ok(outcome)
}

fn families(choice: FamilyChoice) -> Vec<Family> {
    match choice {
        FamilyChoice::Battery(f) => vec![f],
        _ => Family::ALL.to_vec(),
    }
}

/// The battery with its seeds offset by `--seed`; `--quick` keeps one seed.
fn battery(cfg: &RunConfig) -> Result<Vec<TestFunctionSpec>> {
    let seeds: &[u64] = if cfg.quick { &SEEDS[..1] } else { &SEEDS };
    let mut specs = Vec::new();
    for family in families(cfg.family) {
        for &(inner, outer) in &SUPPORTS {
            for index in INDICES {
                for &seed in seeds {
                    specs.push(TestFunctionSpec::new(family, inner, outer, index, seed + cfg.seed)?);
                }
            }
        }
    }
    Ok(specs)
}

fn resolution(cfg: &RunConfig) -> ChartResolution {
    let base = if cfg.quick { ChartResolution::coarse() } else { ChartResolution::default() };
    match cfg.grid_size {
        Some(n) => ChartResolution { steps_per_octave: n.div_ceil(2) * 3, ntheta: n },
        None => base,
    }
}

fn report_rows(reports: &[InequalityReport]) -> Vec<Vec<String>> {
    reports
        .iter()
        .map(|r| {
            vec![
                r.inequality.clone(),
                r.spec_id.clone().unwrap_or_default(),
                num(r.params.s),
                opt(r.params.tau),
                num(r.lhs()),
                num(r.rhs()),
                opt(r.ratio),
            ]
        })
        .collect()
}

const REPORT_HEADER: [&str; 7] = ["inequality", "spec_id", "s", "tau", "lhs", "rhs", "ratio"];

fn write_reports(out: &OutputDir, outcome: &mut Outcome, stem: &str, reports: &[InequalityReport]) -> Result<()> {
    let p = out.write_json(&format!("{stem}.json"), &reports)?;
    outcome.wrote(&p);
    let p = out.write_csv(&format!("{stem}.csv"), &REPORT_HEADER, &report_rows(reports))?;
    outcome.wrote(&p);
    Ok(())
}

fn of_family(reports: &[InequalityReport], family: Family) -> impl Iterator<Item = &InequalityReport> {
    let prefix = format!("{}-", family.name());
    reports.iter().filter(move |r| r.spec_id.as_deref().is_some_and(|id| id.starts_with(&prefix)))
}

fn non_finite(reports: &[InequalityReport]) -> usize {
    reports.iter().filter(|r| !r.ratio.is_some_and(f64::is_finite)).count()
}

fn carleman(cfg: &RunConfig, out: &OutputDir) -> Result<Outcome> {
    let mut outcome = Outcome::default();
    let specs = battery(cfg)?;
    let res = resolution(cfg);
    let mut all = Vec::new();
    for &s in &cfg.s {
        let params = FractionalParams::new(s)?;
        let reports = carleman_battery(&specs, &cfg.tau, &params, res)?;
        for family in families(cfg.family) {
            let fam: Vec<InequalityReport> = of_family(&reports, family).cloned().collect();
            let bad = non_finite(&fam);
            if bad > 0 {
                outcome.failures.push(format!("s={s} {}: {bad} non-finite ratios", family.name()));
            }
            let maxima = maxima_by_tau(&fam, &cfg.tau);
            for i in 1..cfg.tau.len() {
                // stability is asserted across doublings of tau
                if (cfg.tau[i] / cfg.tau[i - 1] - 2.0).abs() > 1e-12 {
                    continue;
                }
                let change = (maxima[i] / maxima[i - 1]).max(maxima[i - 1] / maxima[i]);
                if !(change < 2.0) {
                    outcome.failures.push(format!(
                        "s={s} {}: maximum ratio changed {change:.3}x from tau {} to {}",
                        family.name(),
                        cfg.tau[i - 1],
                        cfg.tau[i]
                    ));
                }
            }
        }
        all.extend(reports);
    }
    write_reports(out, &mut outcome, "carleman", &all)?;
    Ok(outcome)
}

fn worst_change(a: &[InequalityReport], b: &[InequalityReport]) -> f64 {
    a.iter()
        .zip(b)
        .filter_map(|(x, y)| match (x.ratio, y.ratio) {
            (Some(p), Some(q)) if p > 1e-12 => Some((q / p - 1.0).abs()),
            _ => None,
        })
        .fold(0.0, f64::max)
}

fn trace(cfg: &RunConfig, out: &OutputDir) -> Result<Outcome> {
    let mut outcome = Outcome::default();
    let specs = battery(cfg)?;
    let ntheta = cfg.grid_size.unwrap_or(if cfg.quick { 32 } else { 64 });
    let res = if cfg.quick { ChartResolution::coarse() } else { ChartResolution::default() };
    let mut all = Vec::new();
    for &s in &cfg.s {
        let params = FractionalParams::new(s)?;
        let t1 = trace_battery(&specs, &cfg.tau, &params, ntheta)?;
        let t2 = trace_battery(&specs, &cfg.tau, &params, 2 * ntheta)?;
        let h1 = herbst_battery(&specs, &params, res)?;
        let h2 = herbst_battery(&specs, &params, res.refined())?;
        for (label, a, b) in [("trace", &t1, &t2), ("herbst", &h1, &h2)] {
            let bad = non_finite(a);
            if bad > 0 {
                outcome.failures.push(format!("s={s} {label}: {bad} non-finite ratios"));
            }
            let change = worst_change(a, b);
            if !(change < REFINEMENT_TOLERANCE) {
                outcome.failures.push(format!("s={s} {label}: refinement changes a ratio by {change:.3}"));
            }
        }
        all.extend(t1);
        all.extend(h1);
    }
    write_reports(out, &mut outcome, "trace", &all)?;
    Ok(outcome)
}

#[derive(Serialize)]
struct ThreeBallsRow {
    s: f64,
    r: f64,
    alpha: f64,
    log_convex: bool,
}

/// Relative tolerance of the homogeneous doubling ratio.
const DOUBLING_TOLERANCE: f64 = 1e-3;

fn doubling(cfg: &RunConfig, out: &OutputDir) -> Result<Outcome> {
    let mut outcome = Outcome::default();
    let mut all = Vec::new();
    let mut balls = Vec::new();
    for &s in &cfg.s {
        let params = FractionalParams::new(s)?;
        match cfg.family {
            FamilyChoice::Homogeneous => {
                let w = homogeneous_field(cfg.k, s)?;
                let exact = 2f64.powf(cfg.k as f64 + (3.0 - 2.0 * s) / 2.0);
                let reports = doubling_reports(&w, &cfg.radii, &params, BALL_RESOLUTION)?
                    .into_iter()
                    .map(|r| r.with_spec(format!("homogeneous-k{}", cfg.k)))
                    .collect::<Vec<_>>();
                for r in &reports {
                    let err = r.ratio.map_or(f64::INFINITY, |v| (v / exact - 1.0).abs());
                    if !(err <= DOUBLING_TOLERANCE) {
                        outcome.failures.push(format!("s={s} r={:?}: ratio {:?} against {exact}", r.params.radii, r.ratio));
                    }
                }
                for &r in &cfg.radii {
                    let tb = three_balls_exponent(&w, r, 0.0, &params, BALL_RESOLUTION)?;
                    balls.push(ThreeBallsRow { s, r, alpha: tb.alpha, log_convex: tb.log_convex });
                }
                all.extend(reports);
            }
            choice => {
                let (inner, outer) = SUPPORTS[0];
                for family in families(choice) {
                    let spec = TestFunctionSpec::new(family, inner, outer, cfg.k, cfg.seed)?;
                    let w = spec.build(&params)?;
                    let reports = doubling_reports(&w, &cfg.radii, &params, BALL_RESOLUTION)?;
                    all.extend(reports.into_iter().map(|r| r.with_spec(spec.id())));
                }
            }
        }
    }
    write_reports(out, &mut outcome, "doubling", &all)?;
    if !balls.is_empty() {
        let p = out.write_json("three_balls.json", &balls)?;
        outcome.wrote(&p);
    }
    Ok(outcome)
}

fn run_verify(cfg: &RunConfig, out: &OutputDir) -> Result<Outcome> {
    let mut outcome = Outcome::default();
    let mode = if cfg.quick { Mode::Quick } else { Mode::Full };
    let (report, timings) = verify::run(mode, cfg.seed);
    for line in report.summary_lines() {
        println!("{line}");
    }
    for c in report.criteria.iter().filter(|c| !c.passed) {
        outcome.failures.push(format!("criterion {} ({})", c.id, c.name));
    }
    let p = out.write_json("verify.json", &report)?;
    outcome.wrote(&p);
    outcome.extra = Some(serde_json::to_value(timings)?);
    Ok(outcome)
}
