//! Tensor grids on the upper half-plane, weighted quadrature and
//! vanishing-order estimation.
//!
//! Cartesian grids are uniform in the tangential variable `y1` and graded
//! towards `y2 = 0` as `y2_j = H (j / J)^gamma`, which resolves the degenerate
//! weight `y2^{1-2s}` without special cells.

use std::io::Write;
use std::sync::Arc;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::coords::{ConformalChart, Form};
use crate::error::{invalid, Error, Result};
use crate::quadrature::{power_moment, GaussJacobi, PolarRegion, PolarRule};

/// Order `s` of the fractional Laplacian and boundary dimension `n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FractionalParams {
    s: f64,
    n: usize,
}

impl FractionalParams {
    /// One boundary dimension, the only case with shipped discretisations.
    pub fn new(s: f64) -> Result<Self> {
        Self::with_dimension(s, 1)
    }

    pub fn with_dimension(s: f64, n: usize) -> Result<Self> {
        if !(s > 0.0 && s < 1.0) {
            return Err(invalid(format!("s must lie in (0, 1), got {s}")));
        }
        if n == 0 {
            return Err(invalid("boundary dimension must be positive"));
        }
        Ok(Self { s, n })
    }

    pub fn s(&self) -> f64 {
        self.s
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// `1 - 2s`, the exponent of the bulk weight.
    pub fn weight_exponent(&self) -> f64 {
        1.0 - 2.0 * self.s
    }

    /// `(n - 2s) / 2`, the conformal conjugation exponent.
    pub fn conjugation_exponent(&self) -> f64 {
        0.5 * (self.n as f64 - 2.0 * self.s)
    }

    /// Mesh grading exponent `2 / (2 - 2s)` clamped to `[1, 3]`.
    pub fn grading_exponent(&self) -> f64 {
        (1.0 / (1.0 - self.s)).clamp(1.0, 3.0)
    }
}

/// Anything that can be evaluated at a point of the closed upper half-plane.
pub trait Field: Sync {
    fn value(&self, y1: f64, y2: f64) -> f64;

    /// Whether the field is defined on all of `B_r^+`.
    fn covers_radius(&self, _radius: f64) -> bool {
        true
    }
}

impl<F> Field for F
where
    F: Fn(f64, f64) -> f64 + Sync,
{
    fn value(&self, y1: f64, y2: f64) -> f64 {
        self(y1, y2)
    }
}

/// Shape the grid was built for.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GridRegion {
    HalfBall { radius: f64 },
    HalfAnnulus { inner: f64, outer: f64 },
    Box { half_width: f64, height: f64 },
}

/// Integration region.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Region {
    /// The full extent of the grid the function lives on.
    Domain,
    HalfBall { radius: f64 },
    HalfAnnulus { inner: f64, outer: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct HalfPlaneGrid {
    y1: Vec<f64>,
    y2: Vec<f64>,
    grading: f64,
    region: GridRegion,
}

/// `height * (j / n)^gamma` for `j = 0..=n`.
pub fn graded_nodes(height: f64, n: usize, gamma: f64) -> Vec<f64> {
    (0..=n)
        .map(|j| height * (j as f64 / n as f64).powf(gamma))
        .collect()
}

impl HalfPlaneGrid {
    /// Rectangle `[-half_width, half_width] x [0, height]` with `n1` and `n2`
    /// intervals.
    pub fn boxed(half_width: f64, height: f64, n1: usize, n2: usize, params: &FractionalParams) -> Result<Self> {
        Self::with_grading(half_width, height, n1, n2, params.grading_exponent())
            .map(|g| Self { region: GridRegion::Box { half_width, height }, ..g })
    }

    /// Smallest rectangle containing `B_radius^+`.
    pub fn half_ball(radius: f64, n1: usize, n2: usize, params: &FractionalParams) -> Result<Self> {
        Self::with_grading(radius, radius, n1, n2, params.grading_exponent())
            .map(|g| Self { region: GridRegion::HalfBall { radius }, ..g })
    }

    pub fn half_annulus(inner: f64, outer: f64, n1: usize, n2: usize, params: &FractionalParams) -> Result<Self> {
        if !(inner > 0.0 && outer > inner) {
            return Err(invalid("annulus radii must satisfy 0 < inner < outer"));
        }
        Self::with_grading(outer, outer, n1, n2, params.grading_exponent())
            .map(|g| Self { region: GridRegion::HalfAnnulus { inner, outer }, ..g })
    }

    pub fn with_grading(half_width: f64, height: f64, n1: usize, n2: usize, gamma: f64) -> Result<Self> {
        if !(half_width > 0.0 && height > 0.0 && half_width.is_finite() && height.is_finite()) {
            return Err(invalid("grid extents must be positive and finite"));
        }
        if n1 < 2 || n2 < 2 {
            return Err(invalid("grids need at least two intervals per axis"));
        }
        if !(gamma >= 1.0) {
            return Err(invalid(format!("grading exponent must be >= 1, got {gamma}")));
        }
        let y1 = (0..=n1)
            .map(|i| -half_width + 2.0 * half_width * i as f64 / n1 as f64)
            .collect();
        let y2 = graded_nodes(height, n2, gamma);
        Ok(Self {
            y1,
            y2,
            grading: gamma,
            region: GridRegion::Box { half_width, height },
        })
    }

    pub fn y1(&self) -> &[f64] {
        &self.y1
    }

    pub fn y2(&self) -> &[f64] {
        &self.y2
    }

    pub fn grading(&self) -> f64 {
        self.grading
    }

    pub fn region(&self) -> GridRegion {
        self.region
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.y1.len(), self.y2.len())
    }

    pub fn half_width(&self) -> f64 {
        *self.y1.last().unwrap()
    }

    pub fn height(&self) -> f64 {
        *self.y2.last().unwrap()
    }

    pub fn h1(&self) -> f64 {
        self.y1[1] - self.y1[0]
    }

    pub fn covers_radius(&self, radius: f64) -> bool {
        let eps = 1e-12 * radius.max(1.0);
        radius <= self.half_width() + eps && radius <= self.height() + eps
    }

    /// Same node pattern with every coordinate multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        let scale_region = |r: GridRegion| match r {
            GridRegion::HalfBall { radius } => GridRegion::HalfBall { radius: radius * factor },
            GridRegion::HalfAnnulus { inner, outer } => GridRegion::HalfAnnulus {
                inner: inner * factor,
                outer: outer * factor,
            },
            GridRegion::Box { half_width, height } => GridRegion::Box {
                half_width: half_width * factor,
                height: height * factor,
            },
        };
        Self {
            y1: self.y1.iter().map(|v| v * factor).collect(),
            y2: self.y2.iter().map(|v| v * factor).collect(),
            grading: self.grading,
            region: scale_region(self.region),
        }
    }

    /// Bilinear interpolation of nodal values; `None` outside the grid.
    pub fn interpolate(&self, values: &Array2<f64>, y1: f64, y2: f64) -> Option<f64> {
        let (i, a) = locate(&self.y1, y1)?;
        let (j, b) = locate(&self.y2, y2)?;
        Some(bilinear(values, i, j, a, b))
    }

    /// Nodal weights of the weighted trapezoid rule for `int f y2^p dy` over
    /// the whole grid. Exact for functions that are linear in each axis on
    /// every cell.
    pub fn trapezoid_weights(&self, power: f64) -> Result<Array2<f64>> {
        if power <= -1.0 {
            return Err(Error::NonIntegrableWeight(power));
        }
        let w1 = trapezoid_1d(&self.y1);
        let w2 = weighted_linear_weights(&self.y2, power);
        Ok(Array2::from_shape_fn((w1.len(), w2.len()), |(i, j)| w1[i] * w2[j]))
    }
}

/// Trapezoid weights for arbitrary increasing nodes.
pub fn trapezoid_1d(x: &[f64]) -> Vec<f64> {
    let mut w = vec![0.0; x.len()];
    for k in 0..x.len() - 1 {
        let h = x[k + 1] - x[k];
        w[k] += 0.5 * h;
        w[k + 1] += 0.5 * h;
    }
    w
}

/// Weights of `int f(y) y^p dy` with `f` linear on each cell and the weight
/// moments taken exactly. Requires `y[0] >= 0`.
pub fn weighted_linear_weights(y: &[f64], p: f64) -> Vec<f64> {
    let mut w = vec![0.0; y.len()];
    for k in 0..y.len() - 1 {
        let (a, b) = (y[k], y[k + 1]);
        let h = b - a;
        let m0 = power_moment(p, a, b);
        let m1 = power_moment(p + 1.0, a, b);
        w[k] += (b * m0 - m1) / h;
        w[k + 1] += (m1 - a * m0) / h;
    }
    w
}

/// Cell index and local coordinate in `[0, 1]` for a point in sorted nodes.
pub(crate) fn locate(nodes: &[f64], x: f64) -> Option<(usize, f64)> {
    let n = nodes.len();
    let (first, last) = (nodes[0], nodes[n - 1]);
    let tol = 1e-12 * (last - first).abs().max(1e-300);
    if !(x >= first - tol && x <= last + tol) {
        return None;
    }
    let x = x.clamp(first, last);
    let idx = nodes.partition_point(|&v| v <= x);
    let i = idx.saturating_sub(1).min(n - 2);
    let h = nodes[i + 1] - nodes[i];
    Some((i, ((x - nodes[i]) / h).clamp(0.0, 1.0)))
}

pub(crate) fn bilinear(values: &Array2<f64>, i: usize, j: usize, a: f64, b: f64) -> f64 {
    let v00 = values[[i, j]];
    let v10 = values[[i + 1, j]];
    let v01 = values[[i, j + 1]];
    let v11 = values[[i + 1, j + 1]];
    (1.0 - a) * ((1.0 - b) * v00 + b * v01) + a * ((1.0 - b) * v10 + b * v11)
}

/// Coordinate chart of a [`GridFunction`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Chart {
    Cartesian,
    /// Conformal-polar `(t, theta)` with `r = e^t`; the form records which
    /// substitution the values carry.
    Conformal(Form),
}

#[derive(Debug, Clone)]
enum Axes {
    Cartesian(Arc<HalfPlaneGrid>),
    Conformal(Arc<ConformalChart>, Form),
}

/// Sampled scalar field on a tensor grid.
///
/// Values are indexed `[axis0, axis1]`: `(y1, y2)` on Cartesian grids and
/// `(t, theta)` on conformal charts.
#[derive(Debug, Clone)]
pub struct GridFunction {
    axes: Axes,
    values: Array2<f64>,
}

fn check_values(values: &Array2<f64>, shape: (usize, usize)) -> Result<()> {
    if values.dim() != shape {
        return Err(invalid(format!(
            "value array has shape {:?}, grid has {:?}",
            values.dim(),
            shape
        )));
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(invalid("grid function values must be finite"));
    }
    Ok(())
}

impl GridFunction {
    pub fn cartesian(grid: Arc<HalfPlaneGrid>, values: Array2<f64>) -> Result<Self> {
        check_values(&values, grid.shape())?;
        Ok(Self { axes: Axes::Cartesian(grid), values })
    }

    pub fn conformal(chart: Arc<ConformalChart>, form: Form, values: Array2<f64>) -> Result<Self> {
        check_values(&values, chart.shape())?;
        Ok(Self { axes: Axes::Conformal(chart, form), values })
    }

    /// Samples a field at every Cartesian node.
    pub fn sample(grid: Arc<HalfPlaneGrid>, field: &dyn Field) -> Result<Self> {
        let values = Array2::from_shape_fn(grid.shape(), |(i, j)| field.value(grid.y1[i], grid.y2[j]));
        Self::cartesian(grid, values)
    }

    pub fn chart(&self) -> Chart {
        match &self.axes {
            Axes::Cartesian(_) => Chart::Cartesian,
            Axes::Conformal(_, form) => Chart::Conformal(*form),
        }
    }

    pub fn values(&self) -> &Array2<f64> {
        &self.values
    }

    pub fn shape(&self) -> (usize, usize) {
        self.values.dim()
    }

    pub fn cartesian_grid(&self) -> Option<&Arc<HalfPlaneGrid>> {
        match &self.axes {
            Axes::Cartesian(g) => Some(g),
            Axes::Conformal(..) => None,
        }
    }

    pub fn conformal_chart(&self) -> Option<&Arc<ConformalChart>> {
        match &self.axes {
            Axes::Conformal(c, _) => Some(c),
            Axes::Cartesian(_) => None,
        }
    }

    /// Same grid and chart, new values.
    pub fn with_values(&self, values: Array2<f64>) -> Result<Self> {
        check_values(&values, self.shape())?;
        Ok(Self { axes: self.axes.clone(), values })
    }

    pub(crate) fn with_form(&self, form: Form, values: Array2<f64>) -> Result<Self> {
        match &self.axes {
            Axes::Conformal(c, _) => Self::conformal(c.clone(), form, values),
            Axes::Cartesian(_) => Err(invalid("form tags apply to conformal charts only")),
        }
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self { axes: self.axes.clone(), values: &self.values * factor }
    }

    /// Pointwise sum; both operands must share the same grid.
    pub fn add(&self, other: &Self) -> Result<Self> {
        if self.shape() != other.shape() || self.chart() != other.chart() {
            return Err(invalid("grid functions live on different grids"));
        }
        self.with_values(&self.values + &other.values)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Physical coordinates `(y1, y2)` of node `(i, j)`.
    pub fn node_position(&self, i: usize, j: usize) -> (f64, f64) {
        match &self.axes {
            Axes::Cartesian(g) => (g.y1[i], g.y2[j]),
            Axes::Conformal(c, _) => {
                let r = c.t()[i].exp();
                let th = c.theta()[j];
                (r * th.cos(), r * th.sin())
            }
        }
    }

    /// Values on the `y2 = 0` layer of a Cartesian function.
    pub fn boundary_trace(&self) -> Result<BoundaryTrace> {
        match &self.axes {
            Axes::Cartesian(g) => BoundaryTrace::new(g.y1.clone(), self.values.column(0).to_vec()),
            Axes::Conformal(c, form) => {
                if *form != Form::W {
                    return Err(invalid("boundary traces of conformal functions need the w-form"));
                }
                let nth = c.theta().len();
                let mut pts: Vec<(f64, f64)> = Vec::with_capacity(2 * c.t().len());
                for (i, &t) in c.t().iter().enumerate() {
                    let r = t.exp();
                    pts.push((r, self.values[[i, 0]]));
                    pts.push((-r, self.values[[i, nth - 1]]));
                }
                pts.sort_by(|a, b| a.0.total_cmp(&b.0));
                let (x, v) = pts.into_iter().unzip();
                BoundaryTrace::new(x, v)
            }
        }
    }

    /// Writes `y1,y2,value` rows.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["y1", "y2", "value"])?;
        let (n0, n1) = self.shape();
        for i in 0..n0 {
            for j in 0..n1 {
                let (y1, y2) = self.node_position(i, j);
                w.write_record(&[fmt_num(y1), fmt_num(y2), fmt_num(self.values[[i, j]])])?;
            }
        }
        w.flush()?;
        Ok(())
    }
}

pub(crate) fn fmt_num(v: f64) -> String {
    format!("{v:.12e}")
}

impl Field for GridFunction {
    fn value(&self, y1: f64, y2: f64) -> f64 {
        match &self.axes {
            Axes::Cartesian(g) => g.interpolate(&self.values, y1, y2).unwrap_or(f64::NAN),
            Axes::Conformal(c, Form::W) => {
                let r = y1.hypot(y2);
                if r <= 0.0 {
                    return f64::NAN;
                }
                let th = y2.atan2(y1);
                c.interpolate(&self.values, r.ln(), th).unwrap_or(f64::NAN)
            }
            Axes::Conformal(..) => f64::NAN,
        }
    }

    fn covers_radius(&self, radius: f64) -> bool {
        match &self.axes {
            Axes::Cartesian(g) => g.covers_radius(radius),
            Axes::Conformal(..) => false,
        }
    }
}

/// Function sampled on the boundary line `y2 = 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundaryTrace {
    positions: Vec<f64>,
    values: Vec<f64>,
}

impl BoundaryTrace {
    pub fn new(positions: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if positions.len() != values.len() || positions.len() < 2 {
            return Err(invalid("boundary trace needs matching positions and values (at least two)"));
        }
        if positions.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(invalid("boundary positions must be strictly increasing"));
        }
        Ok(Self { positions, values })
    }

    pub fn positions(&self) -> &[f64] {
        &self.positions
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn value_at(&self, x: f64) -> Option<f64> {
        let (i, a) = locate(&self.positions, x)?;
        Some((1.0 - a) * self.values[i] + a * self.values[i + 1])
    }

    pub fn map(&self, f: impl Fn(f64, f64) -> f64) -> Self {
        let values = self.positions.iter().zip(&self.values).map(|(&x, &v)| f(x, v)).collect();
        Self { positions: self.positions.clone(), values }
    }
}

/// Trapezoid integral of a boundary trace over `[a, b]`.
pub fn boundary_integral(trace: &BoundaryTrace, a: f64, b: f64) -> Result<f64> {
    let x = trace.positions();
    if !(a < b) {
        return Err(invalid("segment must satisfy a < b"));
    }
    let tol = 1e-12 * (x[x.len() - 1] - x[0]);
    if a < x[0] - tol || b > x[x.len() - 1] + tol {
        return Err(Error::RegionOutsideGrid(format!("segment [{a}, {b}]")));
    }
    let fa = trace.value_at(a).unwrap();
    let fb = trace.value_at(b).unwrap();
    let mut pts = vec![(a, fa)];
    pts.extend(
        x.iter()
            .zip(trace.values())
            .filter(|(&p, _)| p > a && p < b)
            .map(|(&p, &v)| (p, v)),
    );
    pts.push((b, fb));
    Ok(pts.windows(2).map(|w| 0.5 * (w[1].0 - w[0].0) * (w[0].1 + w[1].1)).sum())
}

/// Integration resolution for [`integrate_field`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PolarResolution {
    pub radial: usize,
    pub angular: usize,
    pub panels: usize,
}

impl Default for PolarResolution {
    fn default() -> Self {
        Self { radial: 24, angular: 48, panels: 4 }
    }
}

impl PolarResolution {
    /// Enough nodes to follow a bilinear interpolant on `grid`.
    pub fn for_grid(grid: &HalfPlaneGrid) -> Self {
        let (n1, n2) = grid.shape();
        let cells = n1.max(n2);
        Self {
            radial: 16,
            angular: cells.clamp(48, 256),
            panels: (cells / 8).clamp(4, 128),
        }
    }
}

fn polar_region(region: Region) -> Result<PolarRegion> {
    match region {
        Region::HalfBall { radius } if radius > 0.0 => Ok(PolarRegion::HalfDisc { radius }),
        Region::HalfAnnulus { inner, outer } if inner > 0.0 && outer > inner => {
            Ok(PolarRegion::HalfAnnulus { inner, outer })
        }
        Region::Domain => Err(invalid("the whole-domain region has no polar rule")),
        other => Err(invalid(format!("invalid region {other:?}"))),
    }
}

fn outer_radius(region: Region) -> f64 {
    match region {
        Region::HalfBall { radius } => radius,
        Region::HalfAnnulus { outer, .. } => outer,
        Region::Domain => f64::INFINITY,
    }
}

/// `int_region F(y) y2^p dy` for a field given pointwise.
pub fn integrate_field(field: &dyn Field, region: Region, power: f64, resolution: PolarResolution) -> Result<f64> {
    if power <= -1.0 {
        return Err(Error::NonIntegrableWeight(power));
    }
    let polar = polar_region(region)?;
    if !field.covers_radius(outer_radius(region)) {
        return Err(Error::RegionOutsideGrid(format!("{region:?}")));
    }
    let rule = PolarRule::new(polar, power, resolution.radial, resolution.angular, resolution.panels)?;
    Ok(rule.integrate(|y1, y2| field.value(y1, y2)))
}

/// Weighted integral `int_region f y2^power dy` of a grid function.
///
/// The whole grid is integrated with the weighted trapezoid rule; half-balls and
/// half-annuli use a polar product rule applied to the bilinear interpolant.
pub fn weighted_integral(f: &GridFunction, region: Region, power: f64) -> Result<f64> {
    if power <= -1.0 {
        return Err(Error::NonIntegrableWeight(power));
    }
    match (&f.axes, region) {
        (Axes::Cartesian(g), Region::Domain) => {
            let w = g.trapezoid_weights(power)?;
            Ok((&w * &f.values).sum())
        }
        (Axes::Conformal(c, Form::W), Region::Domain) => c.integrate_cartesian_measure(&f.values, power),
        (Axes::Cartesian(g), _) => {
            if !g.covers_radius(outer_radius(region)) {
                return Err(Error::RegionOutsideGrid(format!("{region:?}")));
            }
            integrate_field(f, region, power, PolarResolution::for_grid(g))
        }
        (Axes::Conformal(c, Form::W), _) => {
            let (r0, r1) = c.radial_extent();
            match region {
                Region::HalfAnnulus { inner, outer } if inner >= r0 * (1.0 - 1e-12) && outer <= r1 * (1.0 + 1e-12) => {
                    let polar = polar_region(region)?;
                    let n = c.t().len().max(c.theta().len());
                    let rule = PolarRule::new(polar, power, 16, n.clamp(48, 256), (n / 8).clamp(4, 128))?;
                    Ok(rule.integrate(|y1, y2| {
                        let r = y1.hypot(y2);
                        c.interpolate(&f.values, r.ln(), y2.atan2(y1)).unwrap_or(0.0)
                    }))
                }
                _ => Err(Error::RegionOutsideGrid(format!("{region:?}"))),
            }
        }
        (Axes::Conformal(..), _) => Err(invalid("weighted integrals of conformal data need the w-form")),
    }
}

/// Which integral a vanishing-order fit uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VanishingMode {
    /// `int_{B_r^+} y2^{1-2s} f^2`
    Bulk,
    /// `int_{-r}^{r} f(y1, 0)^2`
    Boundary,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VanishingOrder {
    /// Least-squares slope of `log I(r)` against `log r`.
    pub order: f64,
    pub intercept: f64,
    /// Root-mean-square residual of the log-log fit.
    pub residual: f64,
    pub radii: Vec<f64>,
    pub integrals: Vec<f64>,
}

/// Fits the decay exponent of the (weighted) `L^2` mass on shrinking balls.
///
/// Radii must be strictly decreasing, at least four, spanning at least one
/// decade. A sequence of integrals that stops decreasing is reported as
/// [`Error::NoiseFloor`] instead of being fitted.
pub fn vanishing_order(f: &dyn Field, radii: &[f64], mode: VanishingMode, params: &FractionalParams) -> Result<VanishingOrder> {
    if radii.len() < 4 {
        return Err(invalid("vanishing-order fits need at least four radii"));
    }
    if radii.windows(2).any(|w| !(w[1] < w[0])) || radii[radii.len() - 1] <= 0.0 {
        return Err(invalid("radii must be positive and strictly decreasing"));
    }
    if radii[0] / radii[radii.len() - 1] < 10.0 * (1.0 - 1e-12) {
        return Err(invalid("radii must span at least one decade"));
    }
    if !f.covers_radius(radii[0]) {
        return Err(Error::RegionOutsideGrid(format!("half-ball of radius {}", radii[0])));
    }
    let p = params.weight_exponent();
    let gl = GaussJacobi::legendre(32);
    let integrals: Vec<f64> = radii
        .iter()
        .map(|&r| match mode {
            VanishingMode::Bulk => integrate_field(
                &|y1: f64, y2: f64| f.value(y1, y2).powi(2),
                Region::HalfBall { radius: r },
                p,
                PolarResolution { radial: 32, angular: 48, panels: 4 },
            ),
            VanishingMode::Boundary => {
                let panels = 8;
                let w = 2.0 * r / panels as f64;
                Ok((0..panels)
                    .map(|k| {
                        let a = -r + w * k as f64;
                        gl.integrate_interval(a, a + w, |x| f.value(x, 0.0).powi(2))
                    })
                    .sum())
            }
        })
        .collect::<Result<_>>()?;

    for (k, pair) in integrals.windows(2).enumerate() {
        if !(pair[1] < pair[0]) || !(pair[1] > 0.0) || !pair[1].is_finite() {
            return Err(Error::NoiseFloor { radius: radii[k + 1] });
        }
    }
    let xs: Vec<f64> = radii.iter().map(|r| r.ln()).collect();
    let ys: Vec<f64> = integrals.iter().map(|v| v.ln()).collect();
    let (order, intercept, residual) = least_squares_line(&xs, &ys);
    Ok(VanishingOrder { order, intercept, residual, radii: radii.to_vec(), integrals })
}

/// Ordinary least squares `y = a x + b`; returns `(a, b, rms residual)`.
pub fn least_squares_line(xs: &[f64], ys: &[f64]) -> (f64, f64, f64) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let rms = (xs
        .iter()
        .zip(ys)
        .map(|(x, y)| (y - slope * x - intercept).powi(2))
        .sum::<f64>()
        / n)
        .sqrt();
    (slope, intercept, rms)
}

/// Grid summary attached to reports.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridInfo {
    pub kind: String,
    pub shape: (usize, usize),
    pub extent: (f64, f64),
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use statrs::function::beta::beta;
    use std::f64::consts::PI;

    fn params(s: f64) -> FractionalParams {
        FractionalParams::new(s).unwrap()
    }

    #[test]
    fn params_validation() {
        assert!(FractionalParams::new(0.0).is_err());
        assert!(FractionalParams::new(1.0).is_err());
        let p = params(0.75);
        assert_eq!(p.grading_exponent(), 3.0);
        assert_eq!(params(0.5).grading_exponent(), 2.0);
        assert!((p.weight_exponent() + 0.5).abs() < 1e-15);
    }

    #[test]
    fn grid_invariants() {
        let g = HalfPlaneGrid::half_ball(1.0, 20, 10, &params(0.3)).unwrap();
        assert!(g.y1().windows(2).all(|w| w[1] > w[0]));
        assert!(g.y2().windows(2).all(|w| w[1] > w[0]));
        assert_eq!(g.y2()[0], 0.0);
        assert!(g.y2()[1..].iter().all(|&v| v > 0.0));
    }

    #[test]
    fn trapezoid_is_exact_for_bilinear() {
        let p = params(0.7);
        let g = Arc::new(HalfPlaneGrid::boxed(1.0, 2.0, 7, 9, &p).unwrap());
        let f = GridFunction::sample(g.clone(), &|y1: f64, y2: f64| 1.0 + 2.0 * y1 - 3.0 * y2 + y1 * y2).unwrap();
        let q = p.weight_exponent();
        let got = weighted_integral(&f, Region::Domain, q).unwrap();
        // int_{-1}^{1} int_0^2 (1 + 2y1 - 3y2 + y1 y2) y2^q
        let exact = 2.0 * (power_moment(q, 0.0, 2.0) - 3.0 * power_moment(q + 1.0, 0.0, 2.0));
        assert_relative_eq!(got, exact, max_relative = 1e-13);
    }

    #[test]
    fn half_disc_of_ones() {
        let g = Arc::new(HalfPlaneGrid::half_ball(1.0, 40, 20, &params(0.5)).unwrap());
        let f = GridFunction::sample(g, &|_: f64, _: f64| 1.0).unwrap();
        assert_relative_eq!(weighted_integral(&f, Region::HalfBall { radius: 1.0 }, 0.0).unwrap(), PI / 2.0, max_relative = 1e-10);
        for s in [0.25, 0.6] {
            let g = Arc::new(HalfPlaneGrid::half_ball(1.0, 40, 20, &params(s)).unwrap());
            let f = GridFunction::sample(g, &|_: f64, _: f64| 1.0).unwrap();
            let exact = beta(1.0 - s, 0.5) / (3.0 - 2.0 * s);
            let got = weighted_integral(&f, Region::HalfBall { radius: 1.0 }, 1.0 - 2.0 * s).unwrap();
            assert_relative_eq!(got, exact, max_relative = 1e-10);
        }
    }

    #[test]
    fn integral_errors() {
        let g = Arc::new(HalfPlaneGrid::half_ball(1.0, 8, 8, &params(0.5)).unwrap());
        let f = GridFunction::sample(g, &|_: f64, _: f64| 1.0).unwrap();
        assert!(matches!(weighted_integral(&f, Region::Domain, -1.0), Err(Error::NonIntegrableWeight(_))));
        assert!(matches!(
            weighted_integral(&f, Region::HalfBall { radius: 2.0 }, 0.0),
            Err(Error::RegionOutsideGrid(_))
        ));
    }

    #[test]
    fn boundary_integrals() {
        let x: Vec<f64> = (0..=200).map(|i| -1.0 + 0.01 * i as f64).collect();
        let ones = BoundaryTrace::new(x.clone(), vec![1.0; x.len()]).unwrap();
        assert_relative_eq!(boundary_integral(&ones, -1.0, 1.0).unwrap(), 2.0, max_relative = 1e-14);
        let sq = ones.map(|x, _| x * x);
        assert_relative_eq!(boundary_integral(&sq, 0.0, 1.0).unwrap(), 1.0 / 3.0, max_relative = 1e-4);
        assert!(boundary_integral(&sq, 0.0, 1.5).is_err());
    }

    #[test]
    fn constant_function_has_area_scaling() {
        let p = params(0.5);
        let fit = vanishing_order(&|_: f64, _: f64| 1.0, &[1.0, 0.5, 0.25, 0.1], VanishingMode::Bulk, &p).unwrap();
        assert!((fit.order - 2.0).abs() < 1e-10);
        let fit = vanishing_order(&|_: f64, _: f64| 1.0, &[1.0, 0.5, 0.25, 0.1], VanishingMode::Boundary, &p).unwrap();
        assert!((fit.order - 1.0).abs() < 1e-10);
    }

    #[test]
    fn noise_floor_is_flagged() {
        let p = params(0.5);
        let f = |y1: f64, y2: f64| if y1.hypot(y2) < 0.3 { 0.0 } else { 1.0 };
        assert!(matches!(
            vanishing_order(&f, &[1.0, 0.5, 0.2, 0.1], VanishingMode::Bulk, &p),
            Err(Error::NoiseFloor { .. })
        ));
    }
}
