//! Two-sided evaluators for the weighted inequalities around the Carleman
//! estimate, and the test-function battery they are swept over.
//!
//! Every bulk norm is computed on a conformal chart `y = e^t (cos theta,
//! sin theta)`. There `e^{tau phi}` is a smooth exponential in `t` and a
//! uniform `t` mesh resolves it for any `tau`. Angular derivatives enter
//! through the bounded flux `sin^{1-2s} d_theta w` and the operator output
//! through `f / sin^{1-2s}`, so every integrand carries an integrable power
//! of `sin(theta)` that the angular weights absorb exactly.

use std::collections::BTreeMap;
use std::f64::consts::{LN_2, PI};
use std::sync::Arc;

use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::coords::{angular_weights, apply_polar_operator, conformal_neumann_trace, graded_angles, ConformalChart, DegenerateWeight, FluxStencil};
use crate::error::{invalid, Error, Result};
use crate::grid::{integrate_field, Field, FractionalParams, GridFunction, PolarResolution, Region};
use crate::spectrum::EigenPair;
use crate::weights::phi;

/// Default `tau_0`.
pub const TAU_ZERO: f64 = 1.0;
/// Annulus factor `c` of the antisymmetric bound.
pub const ANNULUS_FACTOR: f64 = 2.0;
/// Largest admissible Neumann trace, relative to the largest angular flux,
/// for the antisymmetric bound.
pub const ANTISYMMETRIC_TRACE_TOLERANCE: f64 = 1e-3;

/// Support annuli `[delta, R]` of the standard battery.
pub const SUPPORTS: [(f64, f64); 5] = [(0.1, 0.8), (0.125, 0.9), (0.15, 0.6), (0.2, 0.95), (0.25, 0.75)];
/// Angular indices of the standard battery.
pub const INDICES: [usize; 5] = [0, 1, 2, 3, 4];
/// Seeds of the standard battery.
pub const SEEDS: [u64; 4] = [0, 1, 2, 3];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    /// `psi(|y|) cos(k theta)`.
    AnnularHarmonic,
    /// `psi(|y|) |y|^k P_k(cos theta)`.
    HomogeneousCutoff,
    /// Seeded combination of harmonics plus a `y2^{2s}` component.
    RandomBump,
}

impl Family {
    pub const ALL: [Family; 3] = [Family::AnnularHarmonic, Family::HomogeneousCutoff, Family::RandomBump];

    pub fn name(&self) -> &'static str {
        match self {
            Family::AnnularHarmonic => "annular_harmonic",
            Family::HomogeneousCutoff => "homogeneous_cutoff",
            Family::RandomBump => "random_bump",
        }
    }

    pub fn parse(name: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|f| f.name() == name)
            .ok_or_else(|| invalid(format!("unknown family {name:?}")))
    }
}

/// Quintic smoothstep, `C^2` with zero first and second derivatives at both ends.
fn smoothstep(x: f64) -> f64 {
    let x = x.clamp(0.0, 1.0);
    x * x * x * (10.0 - 15.0 * x + 6.0 * x * x)
}

fn smoothstep_slope(x: f64) -> f64 {
    if !(0.0..=1.0).contains(&x) {
        return 0.0;
    }
    30.0 * x * x * (1.0 - x) * (1.0 - x)
}

/// Radial `C^2` cutoff: zero outside `[a, d]`, one on `[b, c]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RadialCutoff {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
}

impl RadialCutoff {
    pub fn new(a: f64, b: f64, c: f64, d: f64) -> Result<Self> {
        if !(0.0 <= a && a < b && b <= c && c < d && d.is_finite()) {
            return Err(invalid(format!("cutoff breakpoints must increase: {a}, {b}, {c}, {d}")));
        }
        Ok(Self { a, b, c, d })
    }

    /// Plateau `[delta q, R / q]` with `q = (R / delta)^{1/4}`.
    pub fn for_support(delta: f64, outer: f64) -> Result<Self> {
        let q = (outer / delta).powf(0.25);
        Self::new(delta, delta * q, outer / q, outer)
    }

    pub fn value(&self, r: f64) -> f64 {
        if r <= self.a || r >= self.d {
            0.0
        } else if r < self.b {
            smoothstep((r - self.a) / (self.b - self.a))
        } else if r <= self.c {
            1.0
        } else {
            1.0 - smoothstep((r - self.c) / (self.d - self.c))
        }
    }

    pub fn derivative(&self, r: f64) -> f64 {
        if r < self.b {
            smoothstep_slope((r - self.a) / (self.b - self.a)) / (self.b - self.a)
        } else if r <= self.c {
            0.0
        } else {
            -smoothstep_slope((r - self.c) / (self.d - self.c)) / (self.d - self.c)
        }
    }

    /// `sup |psi'|` scaled by the inner radius `a_ref`, i.e. the constant `C` in
    /// `|psi'| <= C / a_ref`.
    pub fn gradient_constant(&self, a_ref: f64) -> f64 {
        let inner = 1.875 / (self.b - self.a);
        let outer = 1.875 / (self.d - self.c);
        a_ref * inner.max(outer)
    }
}

/// One member of the battery.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TestFunctionSpec {
    pub family: Family,
    pub inner: f64,
    pub outer: f64,
    pub index: usize,
    pub seed: u64,
}

impl TestFunctionSpec {
    pub fn new(family: Family, inner: f64, outer: f64, index: usize, seed: u64) -> Result<Self> {
        if !(inner > 0.0 && outer > inner && outer.is_finite()) {
            return Err(invalid("support must satisfy 0 < inner < outer"));
        }
        if family == Family::HomogeneousCutoff && index + 1 > crate::extension::MAX_HOMOGENEOUS_DEGREE {
            return Err(invalid("homogeneous index too large"));
        }
        Ok(Self { family, inner, outer, index, seed })
    }

    pub fn id(&self) -> String {
        format!("{}-d{}-R{}-k{}-seed{}", self.family.name(), self.inner, self.outer, self.index, self.seed)
    }

    pub fn cutoff(&self) -> RadialCutoff {
        RadialCutoff::for_support(self.inner, self.outer).expect("validated support")
    }

    pub fn build(&self, params: &FractionalParams) -> Result<TestFunction> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed ^ (self.index as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15));
        let mix = if self.seed == 0 { 0.0 } else { rng.random_range(-0.25..0.25) };
        let shape = match self.family {
            Family::AnnularHarmonic => Shape::Harmonic { k: self.index, mix },
            Family::HomogeneousCutoff => Shape::Homogeneous {
                low: EigenPair::new(self.index, params.s())?,
                high: EigenPair::new(self.index + 1, params.s())?,
                mix,
            },
            Family::RandomBump => {
                let a = (0..=self.index + 1).map(|_| rng.random_range(-1.0..1.0)).collect();
                let b = (0..=self.index).map(|_| rng.random_range(-1.0..1.0)).collect();
                Shape::Random { a, b, wobble: rng.random_range(-0.5..0.5), two_s: 2.0 * params.s() }
            }
        };
        Ok(TestFunction { spec: *self, cutoff: self.cutoff(), shape })
    }
}

#[derive(Debug, Clone)]
enum Shape {
    Harmonic { k: usize, mix: f64 },
    Homogeneous { low: EigenPair, high: EigenPair, mix: f64 },
    Random { a: Vec<f64>, b: Vec<f64>, wobble: f64, two_s: f64 },
}

/// A battery member as a field. Every member is even in `y2` up to an
/// explicit `y2^{2s}` component, so the weighted flux has a finite trace.
#[derive(Debug, Clone)]
pub struct TestFunction {
    spec: TestFunctionSpec,
    cutoff: RadialCutoff,
    shape: Shape,
}

impl TestFunction {
    pub fn spec(&self) -> &TestFunctionSpec {
        &self.spec
    }

    /// Angular slice at the geometric middle of the plateau.
    pub fn plateau_radius(&self) -> f64 {
        (self.cutoff.b * self.cutoff.c).sqrt()
    }
}

impl Field for TestFunction {
    fn value(&self, y1: f64, y2: f64) -> f64 {
        let r = y1.hypot(y2);
        let psi = self.cutoff.value(r);
        if psi == 0.0 {
            return 0.0;
        }
        let th = y2.atan2(y1);
        let core = match &self.shape {
            Shape::Harmonic { k, mix } => (*k as f64 * th).cos() + mix * ((*k + 1) as f64 * th).cos(),
            Shape::Homogeneous { low, high, mix } => low.homogeneous(y1, y2) + mix * high.homogeneous(y1, y2),
            Shape::Random { a, b, wobble, two_s } => {
                let x = (r - self.cutoff.a) / (self.cutoff.d - self.cutoff.a);
                let even: f64 = a.iter().enumerate().map(|(j, c)| c * (j as f64 * th).cos()).sum();
                let odd: f64 = b.iter().enumerate().map(|(j, c)| c * (j as f64 * th).cos()).sum();
                (1.0 + wobble * (2.0 * PI * x).sin()) * even + y2.max(0.0).powf(*two_s) * odd
            }
        };
        psi * core
    }
}

/// The full battery: every family, support, index and seed.
pub fn standard_battery() -> Vec<TestFunctionSpec> {
    Family::ALL.into_iter().flat_map(family_battery).collect()
}

/// The 100 members of one family.
pub fn family_battery(family: Family) -> Vec<TestFunctionSpec> {
    let mut out = Vec::with_capacity(SUPPORTS.len() * INDICES.len() * SEEDS.len());
    for &(inner, outer) in &SUPPORTS {
        for &index in &INDICES {
            for &seed in &SEEDS {
                out.push(TestFunctionSpec::new(family, inner, outer, index, seed).expect("battery specs are valid"));
            }
        }
    }
    out
}

/// Chart resolution for the bulk norms.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChartResolution {
    /// Uniform `t` steps per factor two in radius.
    pub steps_per_octave: usize,
    pub ntheta: usize,
}

impl Default for ChartResolution {
    fn default() -> Self {
        Self { steps_per_octave: 96, ntheta: 64 }
    }
}

impl ChartResolution {
    pub fn refined(&self) -> Self {
        Self { steps_per_octave: 2 * self.steps_per_octave, ntheta: 2 * self.ntheta }
    }

    pub fn coarse() -> Self {
        Self { steps_per_octave: 48, ntheta: 32 }
    }
}

/// Grid metadata recorded in reports.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridMeta {
    pub chart: String,
    pub nt: usize,
    pub ntheta: usize,
    pub t_range: (f64, f64),
}

/// A field sampled on a conformal chart together with everything the
/// evaluators need: `d_t w`, the angular flux, the operator output, and the
/// Dirichlet and Neumann traces on both rays.
#[derive(Debug, Clone)]
pub struct ChartData {
    chart: Arc<ConformalChart>,
    params: FractionalParams,
    w: Array2<f64>,
    wt: Array2<f64>,
    flux: Array2<f64>,
    /// `f / sin^{1-2s}` with `f` the Cartesian operator output.
    source: Array2<f64>,
    raw_source: GridFunction,
    dirichlet: (Vec<f64>, Vec<f64>),
    neumann: (Vec<f64>, Vec<f64>),
    t_weights: Vec<f64>,
    theta_mass: Vec<f64>,
    theta_flux: Vec<f64>,
}

impl ChartData {
    /// Samples `w` on the half-annulus `inner <= |y| <= outer`. The `t`
    /// step is `ln 2 / steps_per_octave`, so every `ln(2^m inner)` is a node.
    pub fn from_field(w: &dyn Field, inner: f64, outer: f64, params: &FractionalParams, res: ChartResolution) -> Result<Self> {
        if !(inner > 0.0 && outer > inner) {
            return Err(invalid("chart radii must satisfy 0 < inner < outer"));
        }
        if !w.covers_radius(outer) {
            return Err(Error::RegionOutsideGrid(format!("half-annulus up to {outer}")));
        }
        let ht = LN_2 / res.steps_per_octave as f64;
        let nt = ((outer / inner).ln() / ht - 1e-9).ceil().max(4.0) as usize;
        let t0 = inner.ln();
        let chart = Arc::new(ConformalChart::new(t0, t0 + nt as f64 * ht, nt, res.ntheta, params)?);
        let sampled = chart.sample(w)?;
        Self::from_samples(sampled, params)
    }

    /// Builds the data from a `w`-form chart function; the operator and
    /// traces come from the `coords` discretisations.
    pub fn from_samples(w: GridFunction, params: &FractionalParams) -> Result<Self> {
        let chart = w
            .conformal_chart()
            .cloned()
            .ok_or_else(|| invalid("chart data needs a conformal grid function"))?;
        let lw = apply_polar_operator(&w, params)?;
        let neumann = conformal_neumann_trace(&w, params)?;
        let (nt, nth) = chart.shape();
        let vals = w.values().clone();
        let ht = chart.ht();
        let wt = Array2::from_shape_fn((nt, nth), |(i, j)| {
            if i == 0 {
                (vals[[1, j]] - vals[[0, j]]) / ht
            } else if i == nt - 1 {
                (vals[[i, j]] - vals[[i - 1, j]]) / ht
            } else {
                (vals[[i + 1, j]] - vals[[i - 1, j]]) / (2.0 * ht)
            }
        });
        let stencil = FluxStencil::new(chart.theta(), DegenerateWeight::Sine(params.weight_exponent()));
        let mut flux = Array2::zeros((nt, nth));
        for i in 0..nt {
            let row = vals.row(i).to_vec();
            for (j, f) in stencil.node_fluxes(&row).into_iter().enumerate() {
                flux[[i, j]] = f;
            }
        }
        let dirichlet = ((0..nt).map(|i| vals[[i, 0]]).collect(), (0..nt).map(|i| vals[[i, nth - 1]]).collect());
        let mut data = Self {
            chart: chart.clone(),
            params: *params,
            w: vals,
            wt,
            flux,
            source: Array2::zeros((nt, nth)),
            raw_source: lw.clone(),
            dirichlet,
            neumann,
            t_weights: chart.t_weights(),
            theta_mass: chart.theta_weights(params.weight_exponent())?,
            theta_flux: chart.theta_weights(-params.weight_exponent())?,
        };
        data.set_source(lw)?;
        Ok(data)
    }

    /// Replaces the operator output `f` (Cartesian operator values on the
    /// same chart, `w`-form) and leaves every other term untouched.
    pub fn with_source(&self, f: GridFunction) -> Result<Self> {
        let mut out = self.clone();
        out.set_source(f)?;
        Ok(out)
    }

    fn set_source(&mut self, f: GridFunction) -> Result<()> {
        if f.shape() != self.chart.shape() {
            return Err(invalid("source lives on a different chart"));
        }
        let stencil = FluxStencil::new(self.chart.theta(), DegenerateWeight::Sine(self.params.weight_exponent()));
        let (nt, nth) = self.chart.shape();
        let th = self.chart.theta();
        let mut g = Array2::zeros((nt, nth));
        for i in 1..nt - 1 {
            for j in 1..nth - 1 {
                g[[i, j]] = f.values()[[i, j]] / stencil.mean_weight(j);
            }
            // The end layers carry no operator value; continue linearly.
            let slope = (g[[i, 2]] - g[[i, 1]]) / (th[2] - th[1]);
            g[[i, 0]] = g[[i, 1]] - slope * (th[1] - th[0]);
            let m = nth - 1;
            let slope = (g[[i, m - 1]] - g[[i, m - 2]]) / (th[m - 1] - th[m - 2]);
            g[[i, m]] = g[[i, m - 1]] + slope * (th[m] - th[m - 1]);
        }
        self.source = g;
        self.raw_source = f;
        Ok(())
    }

    pub fn chart(&self) -> &Arc<ConformalChart> {
        &self.chart
    }

    /// Operator output used for the source term.
    pub fn source(&self) -> &GridFunction {
        &self.raw_source
    }

    /// `lim y2^{1-2s} d_2 w` on the positive and negative rays.
    pub fn neumann(&self) -> (&[f64], &[f64]) {
        (&self.neumann.0, &self.neumann.1)
    }

    /// `w` on the positive and negative rays.
    pub fn dirichlet(&self) -> (&[f64], &[f64]) {
        (&self.dirichlet.0, &self.dirichlet.1)
    }

    pub fn meta(&self) -> GridMeta {
        let (nt, nth) = self.chart.shape();
        let t = self.chart.t();
        GridMeta { chart: "conformal".into(), nt, ntheta: nth, t_range: (t[0], t[nt - 1]) }
    }

    /// `sum_i wt_i rho(t_i) sum_j wth_j v_ij^2`, restricted to `t <= t_max`.
    fn bulk(&self, values: &Array2<f64>, angular: &[f64], t_max: f64, rho: impl Fn(f64) -> f64) -> f64 {
        let t = self.chart.t();
        let mut total = 0.0;
        let last = t.iter().rposition(|&x| x <= t_max + 1e-12).unwrap_or(0);
        let mut weights = self.t_weights.clone();
        if last + 1 < t.len() {
            // trapezoid on the truncated range
            weights = crate::grid::trapezoid_1d(&t[..=last]);
        }
        for i in 0..=last {
            let r = rho(t[i]);
            if r == 0.0 {
                continue;
            }
            let row: f64 = angular.iter().enumerate().map(|(j, a)| a * values[[i, j]].powi(2)).sum();
            total += weights[i] * r * row;
        }
        total
    }

    /// `sum_i wt_i rho(t_i) (a_i^2 + b_i^2)` over both rays.
    fn rays(&self, pair: &(Vec<f64>, Vec<f64>), rho: impl Fn(f64) -> f64) -> f64 {
        self.chart
            .t()
            .iter()
            .enumerate()
            .map(|(i, &t)| self.t_weights[i] * rho(t) * (pair.0[i].powi(2) + pair.1[i].powi(2)))
            .sum()
    }

    fn full(&self) -> f64 {
        f64::INFINITY
    }

    /// `int y2^{1-2s} rho(|y|) |grad w|^2 dy`.
    fn gradient_sq(&self, t_max: f64, rho: impl Fn(f64) -> f64 + Copy) -> f64 {
        let p = self.params.weight_exponent();
        let radial = move |t: f64| rho(t) * (p * t).exp();
        self.bulk(&self.wt, &self.theta_mass, t_max, radial) + self.bulk(&self.flux, &self.theta_flux, t_max, radial)
    }

    /// `int y2^{1-2s} rho(|y|) w^2 dy`.
    fn mass_sq(&self, t_max: f64, rho: impl Fn(f64) -> f64) -> f64 {
        let p = self.params.weight_exponent();
        self.bulk(&self.w, &self.theta_mass, t_max, |t| rho(t) * ((2.0 + p) * t).exp())
    }

    /// `int y2^{2s-1} rho(|y|) f^2 dy`.
    fn source_sq(&self, rho: impl Fn(f64) -> f64) -> f64 {
        let s = self.params.s();
        self.bulk(&self.source, &self.theta_mass, self.full(), |t| rho(t) * ((2.0 * s + 1.0) * t).exp())
    }

    /// `int_{y2 = 0} rho(|y1|) w^2 dy1`.
    fn boundary_sq(&self, rho: impl Fn(f64) -> f64) -> f64 {
        self.rays(&self.dirichlet, |t| rho(t) * t.exp())
    }

    /// `int_{y2 = 0} rho(|y1|) h^2 dy1`.
    fn neumann_sq(&self, rho: impl Fn(f64) -> f64) -> f64 {
        self.rays(&self.neumann, |t| rho(t) * t.exp())
    }

    fn max_abs(a: &Array2<f64>) -> f64 {
        a.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

/// Parameters recorded in a report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportParams {
    pub s: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tau: Option<f64>,
    pub radii: Vec<f64>,
}

/// Both sides of one inequality.
///
/// Term names are prefixed `lhs:` or `rhs:`. The ratio is `sum lhs / sum rhs`,
/// `0` when both sides vanish and absent when only the right side does.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InequalityReport {
    pub inequality: String,
    pub params: ReportParams,
    pub terms: BTreeMap<String, f64>,
    pub ratio: Option<f64>,
    pub grid: GridMeta,
    pub spec_id: Option<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub flags: Vec<String>,
}

/// Flag set when the right side vanishes but the left does not.
pub const EXACT_SOLUTION_FLAG: &str = "exact-solution input";

impl InequalityReport {
    fn new(inequality: &str, params: ReportParams, lhs: &[(&str, f64)], rhs: &[(&str, f64)], grid: GridMeta) -> Self {
        let mut terms = BTreeMap::new();
        for (k, v) in lhs {
            terms.insert(format!("lhs:{k}"), *v);
        }
        for (k, v) in rhs {
            terms.insert(format!("rhs:{k}"), *v);
        }
        let l: f64 = lhs.iter().map(|(_, v)| v).sum();
        let r: f64 = rhs.iter().map(|(_, v)| v).sum();
        let mut flags = Vec::new();
        let ratio = if r > 0.0 {
            Some(l / r)
        } else if l == 0.0 {
            Some(0.0)
        } else {
            flags.push(EXACT_SOLUTION_FLAG.to_string());
            None
        };
        Self { inequality: inequality.into(), params, terms, ratio, grid, spec_id: None, flags }
    }

    pub fn with_spec(mut self, id: impl Into<String>) -> Self {
        self.spec_id = Some(id.into());
        self
    }

    pub fn lhs(&self) -> f64 {
        self.side("lhs:")
    }

    pub fn rhs(&self) -> f64 {
        self.side("rhs:")
    }

    fn side(&self, prefix: &str) -> f64 {
        self.terms.iter().filter(|(k, _)| k.starts_with(prefix)).map(|(_, v)| v).sum()
    }

    pub fn term(&self, name: &str) -> Option<f64> {
        self.terms.get(name).copied()
    }
}

fn check_tau(tau: f64, minimum: f64) -> Result<()> {
    if !(tau >= minimum && tau.is_finite()) {
        return Err(invalid(format!("tau must be finite and at least {minimum}, got {tau}")));
    }
    Ok(())
}

/// Weighted Carleman norms. Every term is reported relative to the common
/// factor `e^{tau phi(ln r_ref)}` with `r_ref` the chart's inner radius, which
/// leaves the ratio unchanged and keeps the numbers finite.
pub fn carleman_sides(data: &ChartData, tau: f64, params: &FractionalParams) -> Result<InequalityReport> {
    check_tau(tau, TAU_ZERO)?;
    let s = params.s();
    if !(0.25..1.0).contains(&s) {
        return Err(Error::OutOfRegime(format!("the symmetric estimate is stated for s in [1/4, 1), got {s}")));
    }
    if data.params != *params {
        return Err(invalid("chart data was built for different parameters"));
    }
    let t_ref = data.chart.t()[0];
    let e2 = move |t: f64| (2.0 * tau * (phi(t) - phi(t_ref))).exp();
    let log_damp = move |t: f64| e2(t) / (1.0 + t * t);
    let full = data.full();
    let l1 = data.gradient_sq(full, log_damp).sqrt();
    let l2 = tau * data.mass_sq(full, move |t| log_damp(t) * (-2.0 * t).exp()).sqrt();
    let l3 = tau.powf(s) * data.boundary_sq(move |t| log_damp(t) * (-2.0 * s * t).exp()).sqrt();
    let r1 = tau.powf(-0.5) * data.source_sq(move |t| e2(t) * (2.0 * t).exp()).sqrt();
    let r2 = tau.powf(0.5 - s) * data.neumann_sq(move |t| e2(t) * (2.0 * s * t).exp()).sqrt();
    let (inner, outer) = data.chart.radial_extent();
    Ok(InequalityReport::new(
        "carleman",
        ReportParams { s, tau: Some(tau), radii: vec![inner, outer] },
        &[("gradient", l1), ("bulk", l2), ("boundary", l3)],
        &[("source", r1), ("neumann", r2)],
        data.meta(),
    ))
}

/// `||y2^{(1-2s)/2} grad w||` against `||y1|^{-s} w(., 0)||`.
pub fn herbst_sides(data: &ChartData, params: &FractionalParams) -> Result<InequalityReport> {
    let s = params.s();
    let lhs = data.boundary_sq(|t| (-2.0 * s * t).exp()).sqrt();
    let rhs = data.gradient_sq(data.full(), |_| 1.0).sqrt();
    let (inner, outer) = data.chart.radial_extent();
    Ok(InequalityReport::new(
        "herbst",
        ReportParams { s, tau: None, radii: vec![inner, outer] },
        &[("boundary", lhs)],
        &[("gradient", rhs)],
        data.meta(),
    ))
}

/// Trace interpolation on the half circle: the two endpoint values against
/// `tau^{1-s} ||sin^{(1-2s)/2} u||` and `tau^{-s} ||sin^{(1-2s)/2} u'||`.
pub fn trace_interpolation_sides(u: &dyn Fn(f64) -> f64, tau: f64, params: &FractionalParams, ntheta: usize) -> Result<InequalityReport> {
    if !(tau > 1.0 && tau.is_finite()) {
        return Err(invalid(format!("trace interpolation needs tau > 1, got {tau}")));
    }
    if ntheta < 4 {
        return Err(invalid("need at least four angular intervals"));
    }
    let s = params.s();
    let p = params.weight_exponent();
    let theta = graded_angles(ntheta, params.grading_exponent());
    let vals: Vec<f64> = theta.iter().map(|&th| u(th)).collect();
    if vals.iter().any(|v| !v.is_finite()) {
        return Err(invalid("u must be finite on [0, pi]"));
    }
    let flux = FluxStencil::new(&theta, DegenerateWeight::Sine(p)).node_fluxes(&vals);
    let wm = angular_weights(&theta, p)?;
    let wf = angular_weights(&theta, -p)?;
    let mass: f64 = wm.iter().zip(&vals).map(|(w, v)| w * v * v).sum();
    let grad: f64 = wf.iter().zip(&flux).map(|(w, f)| w * f * f).sum();
    let ends = (vals[0].powi(2) + vals[ntheta].powi(2)).sqrt();
    Ok(InequalityReport::new(
        "trace_interpolation",
        ReportParams { s, tau: Some(tau), radii: vec![] },
        &[("endpoints", ends)],
        &[("mass", tau.powf(1.0 - s) * mass.sqrt()), ("gradient", tau.powf(-s) * grad.sqrt())],
        GridMeta { chart: "half_circle".into(), nt: 1, ntheta: ntheta + 1, t_range: (0.0, 0.0) },
    ))
}

/// Caccioppoli estimate with a cutoff `psi` equal to one on `[r0, r1]` and
/// supported in `[r0/2, 2 r1]`, all in squared norms:
/// `||y2^{(1-2s)/2} grad(psi w)||^2` against
/// `r0^{-2} ||y2^{(1-2s)/2} w||^2 + |int psi w lim y2^{1-2s} d_2(psi w)|`.
pub fn caccioppoli_sides(w: &dyn Field, r0: f64, r1: f64, params: &FractionalParams, res: ChartResolution) -> Result<InequalityReport> {
    if !(r0 > 0.0 && r1 > r0) {
        return Err(invalid("radii must satisfy 0 < r0 < r1"));
    }
    let cutoff = RadialCutoff::new(0.5 * r0, r0, r1, 2.0 * r1)?;
    let cut = |y1: f64, y2: f64| cutoff.value(y1.hypot(y2)) * w.value(y1, y2);
    if !w.covers_radius(2.0 * r1) {
        return Err(Error::RegionOutsideGrid(format!("half-annulus up to {}", 2.0 * r1)));
    }
    let product = ChartData::from_field(&cut, 0.5 * r0, 2.0 * r1, params, res)?;
    let plain = ChartData::from_field(&|y1: f64, y2: f64| w.value(y1, y2), 0.5 * r0, 2.0 * r1, params, res)?;
    let t_max = (2.0 * r1).ln();
    let lhs = product.gradient_sq(t_max, |_| 1.0);
    let mass = r0.powi(-2) * plain.mass_sq(t_max, |_| 1.0);
    let t = product.chart.t();
    let (h_pos, h_neg) = product.neumann();
    let (d_pos, d_neg) = product.dirichlet();
    let boundary: f64 = (0..t.len())
        .filter(|&i| t[i] <= t_max + 1e-12)
        .map(|i| product.t_weights[i] * t[i].exp() * (d_pos[i] * h_pos[i] + d_neg[i] * h_neg[i]))
        .sum::<f64>()
        .abs();
    let mut report = InequalityReport::new(
        "caccioppoli",
        ReportParams { s: params.s(), tau: None, radii: vec![r0, r1] },
        &[("gradient_sq", lhs)],
        &[("mass_sq", mass), ("boundary", boundary)],
        product.meta(),
    );
    report.terms.insert("cutoff_constant".into(), cutoff.gradient_constant(r0));
    Ok(report)
}

/// Lower bound for the antisymmetric part with `h = 0`, squared norms:
/// `tau^2 delta^{-2} ||e^{tau phi} y2^{(1-2s)/2} w||^2_{B_{2 delta} \ B_delta}`
/// against `||e^{tau phi} y2^{(2s-1)/2} |y| f||^2_{B_R \ B_delta}`.
///
/// `data` must be built on the annulus `[delta, R]` by [`ChartData::from_field`].
pub fn antisymmetric_lower_bound_sides(data: &ChartData, delta: f64, tau: f64, params: &FractionalParams) -> Result<InequalityReport> {
    check_tau(tau, TAU_ZERO)?;
    let t0 = data.chart.t()[0];
    if (t0 - delta.ln()).abs() > 1e-9 {
        return Err(invalid("chart data must start at delta"));
    }
    let (_, outer) = data.chart.radial_extent();
    let (h_pos, h_neg) = data.neumann();
    let h_max = h_pos.iter().chain(h_neg).fold(0.0_f64, |m, v| m.max(v.abs()));
    let scale = ChartData::max_abs(&data.flux);
    if h_max > ANTISYMMETRIC_TRACE_TOLERANCE * scale {
        return Err(Error::OutOfRegime(format!(
            "Neumann trace {h_max:e} exceeds the h = 0 tolerance ({:e} relative)",
            ANTISYMMETRIC_TRACE_TOLERANCE
        )));
    }
    let e2 = move |t: f64| (2.0 * tau * (phi(t) - phi(t0))).exp();
    let lhs = tau * tau * delta.powi(-2) * data.mass_sq((ANNULUS_FACTOR * delta).ln(), e2);
    let rhs = data.source_sq(move |t| e2(t) * (2.0 * t).exp());
    Ok(InequalityReport::new(
        "antisymmetric",
        ReportParams { s: params.s(), tau: Some(tau), radii: vec![delta, ANNULUS_FACTOR * delta, outer] },
        &[("annulus_mass_sq", lhs)],
        &[("source_sq", rhs)],
        data.meta(),
    ))
}

/// Quadrature used for ball norms of fields.
pub const BALL_RESOLUTION: PolarResolution = PolarResolution { radial: 32, angular: 64, panels: 4 };

/// `||y2^{(1-2s)/2} w||_{L^2(B_r^+)}` for a field centred at the origin.
pub fn ball_norm(w: &dyn Field, r: f64, params: &FractionalParams, res: PolarResolution) -> Result<f64> {
    integrate_field(&|y1: f64, y2: f64| w.value(y1, y2).powi(2), Region::HalfBall { radius: r }, params.weight_exponent(), res)
        .map(f64::sqrt)
        .and_then(|v| if w.covers_radius(r) { Ok(v) } else { Err(Error::RegionOutsideGrid(format!("half-ball of radius {r}"))) })
}

/// `(r, ||w||_{B_{2r}^+} / ||w||_{B_r^+})` for every radius.
pub fn doubling_ratios(w: &dyn Field, radii: &[f64], params: &FractionalParams, res: PolarResolution) -> Result<Vec<(f64, f64)>> {
    radii
        .iter()
        .map(|&r| {
            if !(r > 0.0) {
                return Err(invalid("radii must be positive"));
            }
            let small = ball_norm(w, r, params, res)?;
            if small == 0.0 {
                return Err(Error::ZeroNorm);
            }
            Ok((r, ball_norm(w, 2.0 * r, params, res)? / small))
        })
        .collect()
}

/// Doubling ratios as reports.
pub fn doubling_reports(w: &dyn Field, radii: &[f64], params: &FractionalParams, res: PolarResolution) -> Result<Vec<InequalityReport>> {
    radii
        .iter()
        .map(|&r| {
            let small = ball_norm(w, r, params, res)?;
            let big = ball_norm(w, 2.0 * r, params, res)?;
            if small == 0.0 {
                return Err(Error::ZeroNorm);
            }
            Ok(InequalityReport::new(
                "doubling",
                ReportParams { s: params.s(), tau: None, radii: vec![r, 2.0 * r] },
                &[("norm_2r", big)],
                &[("norm_r", small)],
                GridMeta { chart: "polar".into(), nt: res.radial * res.panels, ntheta: res.angular, t_range: (0.0, 0.0) },
            ))
        })
        .collect()
}

/// Measured three-balls exponent.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThreeBalls {
    pub alpha: f64,
    /// Norms on `B_{r/2}`, `B_r`, `B_{2r}`.
    pub norms: [f64; 3],
    /// Whether `alpha` lies in `[0, 1]`.
    pub log_convex: bool,
}

/// `alpha = ln(N(2r)/N(r)) / ln(N(2r)/N(r/2))` for balls centred at the
/// boundary point `(y0, 0)`.
pub fn three_balls_exponent(w: &dyn Field, r: f64, y0: f64, params: &FractionalParams, res: PolarResolution) -> Result<ThreeBalls> {
    if !(r > 0.0) {
        return Err(invalid("radius must be positive"));
    }
    let shifted = |y1: f64, y2: f64| w.value(y1 + y0, y2);
    if !w.covers_radius(2.0 * r + y0.abs()) {
        return Err(Error::RegionOutsideGrid(format!("half-ball of radius {} around {y0}", 2.0 * r)));
    }
    let norms = [
        ball_norm(&shifted, 0.5 * r, params, res)?,
        ball_norm(&shifted, r, params, res)?,
        ball_norm(&shifted, 2.0 * r, params, res)?,
    ];
    three_balls_from_norms(norms)
}

/// The three-balls exponent of a given norm profile.
pub fn three_balls_from_norms(norms: [f64; 3]) -> Result<ThreeBalls> {
    let [a, b, c] = norms;
    if !(a > 0.0 && b > 0.0 && c > 0.0) {
        return Err(Error::ZeroNorm);
    }
    let denom = (c / a).ln();
    if denom.abs() <= 1e-14 {
        return Err(Error::Degenerate("norms on B_{r/2} and B_{2r} coincide".into()));
    }
    let alpha = (c / b).ln() / denom;
    Ok(ThreeBalls { alpha, norms, log_convex: (0.0..=1.0).contains(&alpha) })
}

/// Carleman reports for one spec over a list of `tau`.
pub fn carleman_sweep(spec: &TestFunctionSpec, taus: &[f64], params: &FractionalParams, res: ChartResolution) -> Result<Vec<InequalityReport>> {
    let w = spec.build(params)?;
    let data = ChartData::from_field(&w, spec.inner, spec.outer, params, res)?;
    taus.iter()
        .map(|&tau| carleman_sides(&data, tau, params).map(|r| r.with_spec(spec.id())))
        .collect()
}

/// Carleman sweep over many specs in parallel; output order follows `specs`.
pub fn carleman_battery(specs: &[TestFunctionSpec], taus: &[f64], params: &FractionalParams, res: ChartResolution) -> Result<Vec<InequalityReport>> {
    let nested: Vec<Vec<InequalityReport>> = specs
        .par_iter()
        .map(|spec| carleman_sweep(spec, taus, params, res))
        .collect::<Result<_>>()?;
    Ok(nested.into_iter().flatten().collect())
}

/// Herbst reports for many specs in parallel.
pub fn herbst_battery(specs: &[TestFunctionSpec], params: &FractionalParams, res: ChartResolution) -> Result<Vec<InequalityReport>> {
    specs
        .par_iter()
        .map(|spec| {
            let w = spec.build(params)?;
            let data = ChartData::from_field(&w, spec.inner, spec.outer, params, res)?;
            herbst_sides(&data, params).map(|r| r.with_spec(spec.id()))
        })
        .collect()
}

/// Trace-interpolation reports for the angular slice of each spec at its
/// plateau radius.
pub fn trace_battery(specs: &[TestFunctionSpec], taus: &[f64], params: &FractionalParams, ntheta: usize) -> Result<Vec<InequalityReport>> {
    let nested: Vec<Vec<InequalityReport>> = specs
        .par_iter()
        .map(|spec| {
            let w = spec.build(params)?;
            let r = w.plateau_radius();
            let slice = |th: f64| w.value(r * th.cos(), r * th.sin());
            taus.iter()
                .map(|&tau| trace_interpolation_sides(&slice, tau, params, ntheta).map(|rep| rep.with_spec(spec.id())))
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<_>>()?;
    Ok(nested.into_iter().flatten().collect())
}

/// Largest finite ratio in a set of reports.
pub fn max_ratio(reports: &[InequalityReport]) -> Option<f64> {
    reports.iter().filter_map(|r| r.ratio).filter(|r| r.is_finite()).fold(None, |m, r| Some(m.map_or(r, |m: f64| m.max(r))))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn params(s: f64) -> FractionalParams {
        FractionalParams::new(s).unwrap()
    }

    #[test]
    fn cutoff_is_c2_with_plateau() {
        let c = RadialCutoff::new(0.1, 0.2, 0.5, 0.8).unwrap();
        assert_eq!(c.value(0.05), 0.0);
        assert_eq!(c.value(0.3), 1.0);
        assert_eq!(c.value(0.9), 0.0);
        let h = 1e-6;
        for r in [0.13, 0.19, 0.6, 0.75] {
            let fd = (c.value(r + h) - c.value(r - h)) / (2.0 * h);
            assert_abs_diff_eq!(fd, c.derivative(r), epsilon = 1e-6);
        }
        assert_abs_diff_eq!(c.gradient_constant(0.1), 1.875, epsilon = 1e-12);
    }

    #[test]
    fn battery_has_hundred_per_family() {
        assert_eq!(family_battery(Family::RandomBump).len(), 100);
        assert_eq!(standard_battery().len(), 300);
        let ids: std::collections::BTreeSet<String> = standard_battery().iter().map(|s| s.id()).collect();
        assert_eq!(ids.len(), 300);
    }

    #[test]
    fn test_functions_are_supported_in_their_annulus() {
        let p = params(0.4);
        for spec in family_battery(Family::RandomBump).iter().step_by(7) {
            let w = spec.build(&p).unwrap();
            assert_eq!(w.value(0.99 * spec.inner, 0.0), 0.0);
            assert_eq!(w.value(0.0, 1.01 * spec.outer), 0.0);
        }
    }

    #[test]
    fn zero_function_gives_zero_reports() {
        let p = params(0.5);
        let zero = |_: f64, _: f64| 0.0;
        let data = ChartData::from_field(&zero, 0.2, 0.8, &p, ChartResolution::coarse()).unwrap();
        let c = carleman_sides(&data, 4.0, &p).unwrap();
        assert!(c.terms.values().all(|&v| v == 0.0));
        assert_eq!(c.ratio, Some(0.0));
        let h = herbst_sides(&data, &p).unwrap();
        assert_eq!(h.ratio, Some(0.0));
    }

    #[test]
    fn constant_trace_interpolation_is_explicit() {
        let p = params(0.5);
        let r = trace_interpolation_sides(&|_| 1.0, 2.0, &p, 64).unwrap();
        assert_abs_diff_eq!(r.term("lhs:endpoints").unwrap(), 2f64.sqrt(), epsilon = 1e-14);
        assert_abs_diff_eq!(r.term("rhs:mass").unwrap(), (2.0 * PI).sqrt(), epsilon = 1e-10);
        assert_abs_diff_eq!(r.term("rhs:gradient").unwrap(), 0.0, epsilon = 1e-10);
        let vanishing = trace_interpolation_sides(&|th: f64| th.sin(), 2.0, &p, 64).unwrap();
        assert!(vanishing.ratio.unwrap() < 1e-15);
    }

    #[test]
    fn three_balls_flags_non_log_convex_profiles() {
        let geometric = three_balls_from_norms([1.0, 2.0, 4.0]).unwrap();
        assert_abs_diff_eq!(geometric.alpha, 0.5, epsilon = 1e-15);
        assert!(geometric.log_convex);
        let bad = three_balls_from_norms([1.0, 5.0, 4.0]).unwrap();
        assert!(!bad.log_convex);
        assert!(three_balls_from_norms([2.0, 3.0, 2.0]).is_err());
    }

    #[test]
    fn constant_doubling_at_half() {
        let p = params(0.5);
        let one = |_: f64, _: f64| 1.0;
        for (_, ratio) in doubling_ratios(&one, &[0.1, 0.3], &p, BALL_RESOLUTION).unwrap() {
            assert_abs_diff_eq!(ratio, 2.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn caccioppoli_constant_obeys_cutoff_bound() {
        for s in [0.3, 0.7] {
            let p = params(s);
            let one = |_: f64, _: f64| 1.0;
            let r = caccioppoli_sides(&one, 0.2, 0.5, &p, ChartResolution::default()).unwrap();
            let c = r.term("cutoff_constant").unwrap();
            assert!(r.term("rhs:boundary").unwrap() < 1e-10 * r.term("rhs:mass_sq").unwrap());
            assert!(r.ratio.unwrap() <= c * c, "{s}: {:?}", r);
        }
    }

    #[test]
    fn source_perturbation_only_moves_source_term() {
        let p = params(0.5);
        let spec = TestFunctionSpec::new(Family::AnnularHarmonic, 0.2, 0.8, 2, 0).unwrap();
        let w = spec.build(&p).unwrap();
        let data = ChartData::from_field(&w, 0.2, 0.8, &p, ChartResolution::coarse()).unwrap();
        let base = carleman_sides(&data, 4.0, &p).unwrap();
        let bumped = data.source().scaled(1.5);
        let moved = carleman_sides(&data.with_source(bumped).unwrap(), 4.0, &p).unwrap();
        for (k, v) in &base.terms {
            let m = moved.terms[k];
            if k == "rhs:source" {
                assert_abs_diff_eq!(m, 1.5 * v, epsilon = 1e-12 * v.abs());
            } else {
                assert_eq!(m, *v);
            }
        }
    }

    #[test]
    fn antisymmetric_refuses_nonzero_trace() {
        let p = params(0.5);
        let spec = TestFunctionSpec::new(Family::RandomBump, 0.2, 0.8, 2, 1).unwrap();
        let w = spec.build(&p).unwrap();
        let data = ChartData::from_field(&w, 0.2, 0.8, &p, ChartResolution::coarse()).unwrap();
        assert!(matches!(antisymmetric_lower_bound_sides(&data, 0.2, 4.0, &p), Err(Error::OutOfRegime(_))));
    }
}
