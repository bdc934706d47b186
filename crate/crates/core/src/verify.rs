//! The acceptance suite as a library: every criterion is evaluated against
//! closed forms and reported as a machine-readable pass/fail record.
//!
//! Reports are deterministic for a given mode and seed. Wall-clock timings
//! are returned separately so that reports can be compared byte for byte.

use std::collections::BTreeMap;
use std::sync::Arc;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::coords::{apply_cartesian_operator, neumann_trace, normalized_residual, roundoff_floor};
use crate::error::Result;
use crate::extension::{blow_up, homogeneous_field, homogeneous_solution, DtnMap, ExtensionProfile};
use crate::grid::{FractionalParams, HalfPlaneGrid, PolarResolution};
use crate::inequalities::{
    ball_norm, carleman_battery, family_battery, herbst_battery, max_ratio, trace_battery, ChartResolution, Family,
    InequalityReport, TestFunctionSpec, BALL_RESOLUTION,
};
use crate::quadrature::GaussJacobi;
use crate::spectrum::{
    explicit_eigenvalue, kernel_bound_constant, kernel_delta_pairing, lambda_from_sturm_liouville, sturm_liouville_spectrum,
    EigenPair,
};
use crate::weights::{phi_double_prime, phi_prime, turning_point, SLOPE_SPREAD};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Quick,
    Full,
}

/// Outcome of one criterion.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriterionResult {
    pub id: u8,
    pub name: String,
    pub passed: bool,
    pub metrics: BTreeMap<String, f64>,
    pub detail: String,
}

impl CriterionResult {
    fn new(id: u8, name: &str) -> Self {
        Self { id, name: name.into(), passed: true, metrics: BTreeMap::new(), detail: String::new() }
    }

    fn metric(&mut self, key: impl Into<String>, value: f64) {
        self.metrics.insert(key.into(), value);
    }

    fn require(&mut self, ok: bool, why: impl FnOnce() -> String) {
        if !ok {
            self.passed = false;
            if !self.detail.is_empty() {
                self.detail.push_str("; ");
            }
            self.detail.push_str(&why());
        }
    }

    fn failed_with(mut self, err: impl std::fmt::Display) -> Self {
        self.passed = false;
        self.detail = format!("error: {err}");
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub mode: Mode,
    pub seed: u64,
    pub criteria: Vec<CriterionResult>,
    pub all_passed: bool,
}

/// Wall-clock time per criterion id.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Timings {
    pub seconds: BTreeMap<u8, f64>,
}

/// Runtime limits of the spectrum and Carleman criteria.
pub const SPECTRUM_TIME_LIMIT: Duration = Duration::from_secs(30);
pub const CARLEMAN_TIME_LIMIT: Duration = Duration::from_secs(300);

fn guarded(id: u8, name: &str, f: impl FnOnce(&mut CriterionResult) -> Result<()>) -> CriterionResult {
    let mut c = CriterionResult::new(id, name);
    match f(&mut c) {
        Ok(()) => c,
        Err(e) => c.failed_with(e),
    }
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1.0)
}

pub fn spectrum(_mode: Mode) -> CriterionResult {
    guarded(1, "spectrum", |c| {
        let start = Instant::now();
        let mut worst: f64 = 0.0;
        for s in [0.3, 0.5, 0.75] {
            let numeric = sturm_liouville_spectrum(s, 6, 4000)?;
            for (k, big) in numeric.iter().enumerate() {
                let err = rel(lambda_from_sturm_liouville(*big, s), explicit_eigenvalue(k, s));
                worst = worst.max(err);
            }
        }
        let elapsed = start.elapsed();
        c.metric("max_relative_error", worst);
        c.require(worst <= 1e-3, || format!("relative error {worst:e} > 1e-3"));
        for k in 0..=6 {
            let v = explicit_eigenvalue(k, 0.5);
            let exact = -((k * k) as f64);
            c.require(v == exact, || format!("explicit eigenvalue {k} at s = 1/2 is {v}, not {exact}"));
        }
        c.require(elapsed <= SPECTRUM_TIME_LIMIT, || format!("took {elapsed:?}"));
        Ok(())
    })
}

pub fn eigenfunctions(_mode: Mode) -> CriterionResult {
    guarded(2, "eigenfunctions", |c| {
        let mut worst: f64 = 0.0;
        let mut shape: f64 = 0.0;
        for s in [0.3, 0.5, 0.75] {
            let pairs: Vec<EigenPair> = (0..=5).map(|k| EigenPair::new(k, s)).collect::<Result<_>>()?;
            let mu = s;
            shape = shape.max((pairs[0].coeffs.len() as f64 - 1.0).abs());
            shape = shape.max(pairs[1].coeffs[0].abs() + pairs[1].coeffs.get(2).map_or(0.0, |v| v.abs()));
            let p2 = &pairs[2].coeffs;
            shape = shape.max((p2[2] / p2[0] - (2.0 * mu - 3.0)).abs()).max(p2[1].abs());
            let rule = GaussJacobi::new(16, -mu, -mu)?;
            for j in 0..=5 {
                for k in 0..=5 {
                    let ip = rule.integrate(|x| pairs[j].polynomial(x) * pairs[k].polynomial(x));
                    let target = if j == k { 1.0 } else { 0.0 };
                    worst = worst.max((ip - target).abs());
                }
            }
        }
        c.metric("orthonormality_error", worst);
        c.metric("low_degree_shape_error", shape);
        c.require(worst <= 1e-6, || format!("orthonormality error {worst:e}"));
        c.require(shape <= 1e-12, || format!("P_0, P_1, P_2 shape error {shape:e}"));
        Ok(())
    })
}

pub fn weight(_mode: Mode) -> CriterionResult {
    guarded(3, "weight", |c| {
        let h = 1e-4;
        let mut worst: f64 = 0.0;
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for i in 0..=4000 {
            let t = -20.0 + 40.0 * i as f64 / 4000.0;
            let fd = (phi_prime(t + h) - phi_prime(t - h)) / (2.0 * h);
            worst = worst.max((fd - phi_double_prime(t)).abs());
            lo = lo.min(-phi_prime(t));
            hi = hi.max(-phi_prime(t));
        }
        c.metric("second_derivative_error", worst);
        c.metric("min_slope", lo);
        c.metric("max_slope", hi);
        c.require(worst <= 1e-6, || format!("phi'' mismatch {worst:e}"));
        c.require(lo >= 1.0 - SLOPE_SPREAD && hi <= 1.0 + SLOPE_SPREAD, || format!("-phi' range [{lo}, {hi}]"));
        c.require(lo >= 0.75 && hi <= 2.0, || "gradient outside [3/4, 2] tau".into());
        Ok(())
    })
}

pub fn dtn(mode: Mode) -> CriterionResult {
    guarded(4, "dtn", |c| {
        let samples = if mode == Mode::Quick { 16 } else { 61 };
        let mut worst: f64 = 0.0;
        for s in [0.25, 0.5, 0.75] {
            let map = DtnMap::new(s)?;
            for i in 0..samples {
                let xi = 0.5 + 7.5 * i as f64 / (samples - 1) as f64;
                worst = worst.max((map.normalized(xi)? / xi.powf(2.0 * s) - 1.0).abs());
            }
        }
        let d_half = DtnMap::new(0.5)?.d_s;
        let mut profile: f64 = 0.0;
        for xi in [0.5, 1.0, 2.0, 4.0, 8.0] {
            let p = ExtensionProfile::new(xi, 0.5)?;
            for j in 0..=50 {
                let y = 4.0 * j as f64 / 50.0 / xi;
                profile = profile.max((p.value(y) - (-xi * y).exp()).abs());
            }
        }
        c.metric("normalized_symbol_error", worst);
        c.metric("d_half", d_half);
        c.metric("half_order_profile_error", profile);
        c.require(worst <= 1e-3, || format!("normalized symbol error {worst:e}"));
        c.require((d_half - 1.0).abs() <= 1e-6, || format!("d_1/2 = {d_half}"));
        c.require(profile <= 1e-8, || format!("profile error {profile:e}"));
        Ok(())
    })
}

/// Refinement levels `n2` of the homogeneous-solution check; `n1 = 2 n2`.
pub const HOMOGENEOUS_LEVELS: [usize; 3] = [16, 32, 64];
/// Minimum decay factor per refinement.
pub const DECAY_FACTOR: f64 = 3.0;

/// Residual and trace of `w_k` at one level, with their rounding floors.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HomogeneousLevel {
    pub n: usize,
    pub residual: f64,
    pub trace: f64,
    pub residual_floor: f64,
    pub trace_floor: f64,
}

pub fn homogeneous_levels(k: usize, s: f64, levels: &[usize]) -> Result<Vec<HomogeneousLevel>> {
    let params = FractionalParams::new(s)?;
    levels
        .iter()
        .map(|&n| {
            let grid = Arc::new(HalfPlaneGrid::half_ball(1.0, 2 * n, n, &params)?);
            let w = homogeneous_solution(k, &params, grid)?;
            let lw = apply_cartesian_operator(&w, &params)?;
            let trace = neumann_trace(&w, &params)?;
            let floor = roundoff_floor(&w, &params)?;
            Ok(HomogeneousLevel {
                n,
                residual: normalized_residual(&lw, &params)?,
                trace: trace.values().iter().fold(0.0, |m, v| m.max(v.abs())),
                residual_floor: floor.residual,
                trace_floor: floor.trace,
            })
        })
        .collect()
}

/// A refinement passes when the error drops by the factor or the finer value
/// is already at the rounding floor.
pub fn decays(coarse: f64, fine: f64, floor: f64) -> bool {
    fine <= floor || coarse >= DECAY_FACTOR * fine
}

pub fn homogeneous(_mode: Mode) -> CriterionResult {
    guarded(5, "homogeneous_solutions", |c| {
        let mut worst_ratio: f64 = 0.0;
        for s in [0.3, 0.5, 0.75] {
            let params = FractionalParams::new(s)?;
            for k in 0..=4 {
                let levels = homogeneous_levels(k, s, &HOMOGENEOUS_LEVELS)?;
                for pair in levels.windows(2) {
                    let (a, b) = (pair[0], pair[1]);
                    c.require(decays(a.residual, b.residual, b.residual_floor), || {
                        format!("s={s} k={k}: residual {:e} -> {:e}", a.residual, b.residual)
                    });
                    c.require(decays(a.trace, b.trace, b.trace_floor), || {
                        format!("s={s} k={k}: trace {:e} -> {:e}", a.trace, b.trace)
                    });
                }
                let last = levels[levels.len() - 1];
                c.metric(format!("s{s}_k{k}_residual"), last.residual);
                c.metric(format!("s{s}_k{k}_trace"), last.trace);
                let w = homogeneous_field(k, s)?;
                let exact = 2f64.powf(k as f64 + 1.5 - s);
                for r in [0.125, 0.25, 0.5] {
                    let ratio = ball_norm(&w, 2.0 * r, &params, BALL_RESOLUTION)? / ball_norm(&w, r, &params, BALL_RESOLUTION)?;
                    worst_ratio = worst_ratio.max((ratio / exact - 1.0).abs());
                }
            }
        }
        c.metric("doubling_relative_error", worst_ratio);
        c.require(worst_ratio <= 1e-3, || format!("doubling ratio error {worst_ratio:e}"));
        Ok(())
    })
}

/// `tau` values of the Carleman criterion.
pub const CARLEMAN_TAUS: [f64; 5] = [2.0, 4.0, 8.0, 16.0, 32.0];
pub const INEQUALITY_S: [f64; 3] = [0.25, 0.5, 0.75];

fn battery_for(mode: Mode, family: Family) -> Vec<TestFunctionSpec> {
    let all = family_battery(family);
    match mode {
        Mode::Full => all,
        // one seed, every support and index
        Mode::Quick => all.into_iter().filter(|s| s.seed == 0).collect(),
    }
}

fn resolution_for(mode: Mode) -> ChartResolution {
    match mode {
        Mode::Full => ChartResolution::default(),
        Mode::Quick => ChartResolution::coarse(),
    }
}

/// Per-`tau` maxima of a Carleman sweep.
pub fn maxima_by_tau(reports: &[InequalityReport], taus: &[f64]) -> Vec<f64> {
    taus.iter()
        .map(|&t| {
            let subset: Vec<InequalityReport> = reports.iter().filter(|r| r.params.tau == Some(t)).cloned().collect();
            max_ratio(&subset).unwrap_or(f64::NAN)
        })
        .collect()
}

pub fn carleman(mode: Mode) -> CriterionResult {
    guarded(6, "carleman_ratio_stability", |c| {
        let start = Instant::now();
        let res = resolution_for(mode);
        for s in INEQUALITY_S {
            let params = FractionalParams::new(s)?;
            for family in Family::ALL {
                let reports = carleman_battery(&battery_for(mode, family), &CARLEMAN_TAUS, &params, res)?;
                let bad = reports.iter().filter(|r| !r.ratio.is_some_and(f64::is_finite)).count();
                c.require(bad == 0, || format!("s={s} {}: {bad} non-finite ratios", family.name()));
                let maxima = maxima_by_tau(&reports, &CARLEMAN_TAUS);
                for (i, m) in maxima.iter().enumerate() {
                    c.metric(format!("s{s}_{}_tau{}", family.name(), CARLEMAN_TAUS[i]), *m);
                }
                for pair in maxima.windows(2) {
                    let change = (pair[1] / pair[0]).max(pair[0] / pair[1]);
                    c.require(change < 2.0, || {
                        format!("s={s} {}: maximum changed {change:.3}x ({:.4} -> {:.4})", family.name(), pair[0], pair[1])
                    });
                }
            }
        }
        let elapsed = start.elapsed();
        c.require(elapsed <= CARLEMAN_TIME_LIMIT, || format!("took {elapsed:?}"));
        Ok(())
    })
}

/// `tau` values of the trace-interpolation sweep.
pub const TRACE_TAUS: [f64; 6] = [2.0, 4.0, 8.0, 16.0, 32.0, 64.0];
/// Refinement stability bound of the trace and Herbst ratios.
pub const REFINEMENT_TOLERANCE: f64 = 0.05;

fn relative_changes(a: &[InequalityReport], b: &[InequalityReport]) -> f64 {
    a.iter()
        .zip(b)
        .filter_map(|(x, y)| match (x.ratio, y.ratio) {
            (Some(p), Some(q)) if p > 1e-12 => Some((q / p - 1.0).abs()),
            _ => None,
        })
        .fold(0.0, f64::max)
}

pub fn trace_and_herbst(mode: Mode) -> CriterionResult {
    guarded(7, "trace_and_herbst", |c| {
        let res = resolution_for(mode);
        let ntheta = if mode == Mode::Quick { 32 } else { 64 };
        for s in INEQUALITY_S {
            let params = FractionalParams::new(s)?;
            for family in Family::ALL {
                let specs = battery_for(mode, family);
                let h1 = herbst_battery(&specs, &params, res)?;
                let h2 = herbst_battery(&specs, &params, res.refined())?;
                let t1 = trace_battery(&specs, &TRACE_TAUS, &params, ntheta)?;
                let t2 = trace_battery(&specs, &TRACE_TAUS, &params, 2 * ntheta)?;
                let name = family.name();
                for (label, a, b) in [("herbst", &h1, &h2), ("trace", &t1, &t2)] {
                    let max = max_ratio(a).unwrap_or(f64::NAN);
                    let change = relative_changes(a, b);
                    c.metric(format!("s{s}_{name}_{label}_max"), max);
                    c.metric(format!("s{s}_{name}_{label}_refinement"), change);
                    c.require(max.is_finite(), || format!("s={s} {name} {label}: unbounded"));
                    c.require(change < REFINEMENT_TOLERANCE, || {
                        format!("s={s} {name} {label}: refinement change {change:.3}")
                    });
                }
            }
        }
        Ok(())
    })
}

/// Largest admissible kernel constant.
pub const KERNEL_CONSTANT_LIMIT: f64 = 10.0;

pub fn kernel(mode: Mode) -> CriterionResult {
    guarded(8, "parametrix_kernel", |c| {
        let n = 200;
        let taus: &[f64] = if mode == Mode::Quick { &[8.0, 32.0] } else { &[4.0, 8.0, 16.0, 32.0] };
        let mut worst: f64 = 0.0;
        for &tau in taus {
            // mu / tau across the critical window 1 +- pi/20
            for frac in [0.9, 0.95, 1.0, 1.05, 1.1] {
                let mu = frac * tau;
                let turn = turning_point(mu, tau)?;
                let ts: Vec<f64> = (0..n).map(|i| turn - 4.0 + 8.0 * i as f64 / (n - 1) as f64).collect();
                worst = worst.max(kernel_bound_constant(mu, tau, &ts)?);
            }
        }
        c.metric("kernel_constant", worst);
        c.require(worst <= KERNEL_CONSTANT_LIMIT, || format!("kernel constant {worst}"));
        let mut delta: f64 = 0.0;
        let tests: [fn(f64) -> f64; 3] = [|_| 1.0, |t| t.cos(), |t| (-(t * t) / 8.0).exp()];
        for (mu, tau) in [(4.0, 4.2), (8.0, 7.6), (16.0, 16.5)] {
            let turn = turning_point(mu, tau)?;
            for s0 in [turn - 1.5, turn + 1.5] {
                for g in tests {
                    let v = kernel_delta_pairing(mu, tau, s0, 1e-4, 0.5, g)?;
                    delta = delta.max((v - g(s0)).abs() / g(s0).abs().max(1e-3));
                }
            }
        }
        c.metric("delta_pairing_error", delta);
        c.require(delta <= 1e-2, || format!("delta pairing error {delta:e}"));
        Ok(())
    })
}

/// Seeded smooth field for the blow-up criterion: a polynomial times a
/// Gaussian, plus a homogeneous solution.
#[derive(Debug, Clone)]
pub struct RandomField {
    coeffs: Vec<(i32, i32, f64)>,
    width: f64,
    homogeneous: (EigenPair, f64),
}

impl RandomField {
    pub fn new(rng: &mut ChaCha8Rng, s: f64) -> Result<Self> {
        let coeffs = (0..6)
            .map(|_| (rng.random_range(0..4), 2 * rng.random_range(0..2), rng.random_range(-1.0..1.0)))
            .collect();
        let k = rng.random_range(0..=4);
        Ok(Self {
            coeffs,
            width: rng.random_range(0.5..2.0),
            homogeneous: (EigenPair::new(k, s)?, rng.random_range(-0.5..0.5)),
        })
    }
}

impl crate::grid::Field for RandomField {
    fn value(&self, y1: f64, y2: f64) -> f64 {
        let poly: f64 = self.coeffs.iter().map(|&(i, j, c)| c * y1.powi(i) * y2.powi(j)).sum();
        let g = (-(y1 * y1 + y2 * y2) / (self.width * self.width)).exp();
        poly * g + self.homogeneous.1 * self.homogeneous.0.homogeneous(y1, y2)
    }
}

/// Finer quadrature used to estimate the quadrature error of the blow-up norm.
pub const BLOW_UP_CHECK_RESOLUTION: PolarResolution = PolarResolution { radial: 48, angular: 96, panels: 8 };

pub fn blow_up_norm(seed: u64) -> CriterionResult {
    guarded(9, "blow_up_rescaling", |c| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut worst: f64 = 0.0;
        for i in 0..20 {
            let s = [0.25, 0.5, 0.75][i % 3];
            let params = FractionalParams::new(s)?;
            let field = RandomField::new(&mut rng, s)?;
            let sigma = rng.random_range(0.2..2.0);
            let rescaled = blow_up(&field, sigma, &params)?;
            let norm = ball_norm(&rescaled, 1.0, &params, BLOW_UP_CHECK_RESOLUTION)?;
            let quad = (norm - ball_norm(&rescaled, 1.0, &params, BALL_RESOLUTION)?).abs();
            let excess = (norm - 1.0).abs() - quad;
            worst = worst.max(excess);
            c.require(excess <= 1e-6, || format!("input {i}: norm {norm}, quadrature estimate {quad:e}"));
        }
        c.metric("max_excess", worst.max(0.0));
        Ok(())
    })
}

/// Runs a cheap deterministic slice of the suite twice and compares the
/// serialised outputs.
pub fn determinism(seed: u64) -> CriterionResult {
    guarded(10, "determinism", |c| {
        let once = || -> Result<String> {
            let params = FractionalParams::new(0.5)?;
            let specs: Vec<TestFunctionSpec> = family_battery(Family::RandomBump).into_iter().step_by(10).collect();
            let reports = carleman_battery(&specs, &[2.0, 8.0], &params, ChartResolution::coarse())?;
            let blow = blow_up_norm(seed);
            Ok(serde_json::to_string(&(reports, blow))?)
        };
        let (a, b) = (once()?, once()?);
        c.metric("bytes", a.len() as f64);
        c.require(a == b, || "repeated runs differ".into());
        Ok(())
    })
}

/// Runs every criterion.
pub fn run(mode: Mode, seed: u64) -> (VerifyReport, Timings) {
    let mut timings = Timings::default();
    let mut criteria = Vec::with_capacity(10);
    let mut timed = |id: u8, f: &dyn Fn() -> CriterionResult| {
        let start = Instant::now();
        let r = f();
        timings.seconds.insert(id, start.elapsed().as_secs_f64());
        criteria.push(r);
    };
    timed(1, &|| spectrum(mode));
    timed(2, &|| eigenfunctions(mode));
    timed(3, &|| weight(mode));
    timed(4, &|| dtn(mode));
    timed(5, &|| homogeneous(mode));
    timed(6, &|| carleman(mode));
    timed(7, &|| trace_and_herbst(mode));
    timed(8, &|| kernel(mode));
    timed(9, &|| blow_up_norm(seed));
    timed(10, &|| determinism(seed));
    let all_passed = criteria.iter().all(|c| c.passed);
    (VerifyReport { mode, seed, criteria, all_passed }, timings)
}

impl VerifyReport {
    /// One `PASS`/`FAIL` line per criterion.
    pub fn summary_lines(&self) -> Vec<String> {
        self.criteria
            .iter()
            .map(|c| {
                let status = if c.passed { "PASS" } else { "FAIL" };
                if c.detail.is_empty() {
                    format!("[{status}] {:>2} {}", c.id, c.name)
                } else {
                    format!("[{status}] {:>2} {}: {}", c.id, c.name, c.detail)
                }
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn decay_rule() {
        assert!(decays(1.0, 0.3, 0.0));
        assert!(!decays(1.0, 0.5, 0.0));
        assert!(decays(1e-15, 2e-15, 1e-14));
    }

    #[test]
    fn weight_criterion_passes() {
        assert!(weight(Mode::Quick).passed);
    }

    #[test]
    fn random_fields_are_seeded() {
        use crate::grid::Field;
        let a = RandomField::new(&mut ChaCha8Rng::seed_from_u64(7), 0.5).unwrap();
        let b = RandomField::new(&mut ChaCha8Rng::seed_from_u64(7), 0.5).unwrap();
        assert_eq!(a.value(0.3, 0.2), b.value(0.3, 0.2));
    }

    #[test]
    fn failing_criteria_are_listed() {
        let mut c = CriterionResult::new(1, "x");
        c.require(false, || "first".into());
        c.require(false, || "second".into());
        assert!(!c.passed);
        assert_eq!(c.detail, "first; second");
        let r = VerifyReport { mode: Mode::Quick, seed: 0, criteria: vec![c], all_passed: false };
        assert_eq!(r.summary_lines(), vec!["[FAIL]  1 x: first; second".to_string()]);
    }
}
