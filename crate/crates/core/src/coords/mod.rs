//! Conformal-polar coordinates `y = e^t (cos theta, sin theta)` and the
//! discrete extension operators.
//!
//! Three representations of the same function live on a [`ConformalChart`]:
//!
//! * `w`, the Cartesian field read in polar coordinates,
//! * `u = e^{(n-2s) t / 2} w`,
//! * `v = sin(theta)^{(1-2s)/2} u`.
//!
//! In `u` the bulk operator becomes
//! `sin^{1-2s}(d_t^2 - (n-2s)^2 / 4) u + d_theta(sin^{1-2s} d_theta u)`,
//! which equals `e^{((n-2s)/2 + 1 + 2s) t}` times the Cartesian operator.

mod flux;

use std::f64::consts::PI;
use std::sync::Arc;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

pub(crate) use flux::{DegenerateWeight, FluxStencil};

use crate::error::{invalid, Error, Result};
use crate::grid::{
    bilinear, locate, trapezoid_1d, BoundaryTrace, Field, FractionalParams, GridFunction, HalfPlaneGrid,
};
use crate::quadrature::GaussJacobi;

/// Which substitution a conformal grid function carries.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Form {
    W,
    U,
    V,
}

/// Tensor grid in `(t, theta)`: uniform in `t`, graded towards both ends of
/// `[0, pi]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConformalChart {
    t: Vec<f64>,
    theta: Vec<f64>,
    grading: f64,
}

/// Symmetric grading map of `[0, 1]` onto `[0, pi]`.
pub fn graded_angles(n: usize, gamma: f64) -> Vec<f64> {
    (0..=n)
        .map(|j| {
            let x = j as f64 / n as f64;
            let a = x.powf(gamma);
            let b = (1.0 - x).powf(gamma);
            PI * a / (a + b)
        })
        .collect()
}

impl ConformalChart {
    /// `nt` intervals on `[t0, t1]` and `ntheta` on `[0, pi]`.
    pub fn new(t0: f64, t1: f64, nt: usize, ntheta: usize, params: &FractionalParams) -> Result<Self> {
        if !(t0.is_finite() && t1.is_finite() && t1 > t0) {
            return Err(invalid("chart needs finite t0 < t1"));
        }
        if nt < 4 || ntheta < 4 {
            return Err(invalid("charts need at least four intervals per axis"));
        }
        let gamma = params.grading_exponent();
        let t = (0..=nt).map(|i| t0 + (t1 - t0) * i as f64 / nt as f64).collect();
        Ok(Self { t, theta: graded_angles(ntheta, gamma), grading: gamma })
    }

    /// Chart covering the half-annulus `inner <= |y| <= outer`.
    pub fn annulus(inner: f64, outer: f64, nt: usize, ntheta: usize, params: &FractionalParams) -> Result<Self> {
        if !(inner > 0.0 && outer > inner) {
            return Err(invalid("annulus radii must satisfy 0 < inner < outer"));
        }
        Self::new(inner.ln(), outer.ln(), nt, ntheta, params)
    }

    pub fn t(&self) -> &[f64] {
        &self.t
    }

    pub fn theta(&self) -> &[f64] {
        &self.theta
    }

    pub fn grading(&self) -> f64 {
        self.grading
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.t.len(), self.theta.len())
    }

    pub fn ht(&self) -> f64 {
        self.t[1] - self.t[0]
    }

    /// `(e^{t0}, e^{t1})`.
    pub fn radial_extent(&self) -> (f64, f64) {
        (self.t[0].exp(), self.t[self.t.len() - 1].exp())
    }

    pub fn interpolate(&self, values: &Array2<f64>, t: f64, theta: f64) -> Option<f64> {
        let (i, a) = locate(&self.t, t)?;
        let (j, b) = locate(&self.theta, theta)?;
        Some(bilinear(values, i, j, a, b))
    }

    /// Samples a Cartesian field as a `w`-form function.
    pub fn sample(self: &Arc<Self>, field: &dyn Field) -> Result<GridFunction> {
        let values = Array2::from_shape_fn(self.shape(), |(i, j)| {
            let r = self.t[i].exp();
            let th = self.theta[j];
            field.value(r * th.cos(), r * th.sin())
        });
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::RegionOutsideGrid("chart image is not inside the field's domain".into()));
        }
        GridFunction::conformal(self.clone(), Form::W, values)
    }

    /// Angular weights of `int g(theta) sin^p(theta) dtheta`; see [`angular_weights`].
    pub fn theta_weights(&self, p: f64) -> Result<Vec<f64>> {
        angular_weights(&self.theta, p)
    }

    /// Trapezoid weights in `t`.
    pub fn t_weights(&self) -> Vec<f64> {
        trapezoid_1d(&self.t)
    }

    /// `int f y2^p dy` over the chart's half-annulus for a `w`-form array,
    /// i.e. `int int f e^{(2+p) t} sin^p(theta) dt dtheta`.
    pub fn integrate_cartesian_measure(&self, values: &Array2<f64>, p: f64) -> Result<f64> {
        let wt = self.t_weights();
        let wth = self.theta_weights(p)?;
        let mut total = 0.0;
        for (i, &t) in self.t.iter().enumerate() {
            let radial = wt[i] * ((2.0 + p) * t).exp();
            let row: f64 = wth.iter().enumerate().map(|(j, w)| w * values[[i, j]]).sum();
            total += radial * row;
        }
        Ok(total)
    }

    pub(crate) fn theta_stencil(&self, params: &FractionalParams) -> FluxStencil {
        FluxStencil::new(&self.theta, DegenerateWeight::Sine(params.weight_exponent()))
    }
}

/// Weights of `int g(theta) sin^p(theta) dtheta` over `[0, pi]` for
/// piecewise linear `g` on `theta`, with the endpoint singularity absorbed
/// by Gauss–Jacobi.
pub fn angular_weights(theta: &[f64], p: f64) -> Result<Vec<f64>> {
    if p <= -1.0 {
        return Err(Error::NonIntegrableWeight(p));
    }
    let th = theta;
    let n = th.len();
    if n < 3 || th[0] != 0.0 || (th[n - 1] - PI).abs() > 1e-12 {
        return Err(invalid("angular nodes must span [0, pi] with at least two cells"));
    }
    let gl = GaussJacobi::legendre(16);
    let gj = GaussJacobi::new(16, 0.0, p)?;
    let mut w = vec![0.0; n];
    for c in 0..n - 1 {
        let (a, b) = (th[c], th[c + 1]);
        let h = b - a;
        let (mut wa, mut wb) = (0.0, 0.0);
        if c == 0 {
            // weight (theta - 0)^p, smooth remainder (sin / theta)^p
            for (&x, &wt) in gj.nodes().iter().zip(gj.weights()) {
                let th_ = 0.5 * h * (1.0 + x);
                let rem = if th_ > 0.0 { (th_.sin() / th_).powf(p) } else { 1.0 };
                let f = wt * (0.5 * h).powf(1.0 + p) * rem;
                wa += f * (b - th_) / h;
                wb += f * (th_ - a) / h;
            }
        } else if c == n - 2 {
            for (&x, &wt) in gj.nodes().iter().zip(gj.weights()) {
                let d = 0.5 * h * (1.0 + x);
                let th_ = PI - d;
                let rem = if d > 0.0 { (d.sin() / d).powf(p) } else { 1.0 };
                let f = wt * (0.5 * h).powf(1.0 + p) * rem;
                wa += f * (b - th_) / h;
                wb += f * (th_ - a) / h;
            }
        } else {
            for (&x, &wt) in gl.nodes().iter().zip(gl.weights()) {
                let th_ = a + 0.5 * h * (1.0 + x);
                let f = wt * 0.5 * h * th_.sin().powf(p);
                wa += f * (b - th_) / h;
                wb += f * (th_ - a) / h;
            }
        }
        w[c] += wa;
        w[c + 1] += wb;
    }
    Ok(w)
}

fn require_form(f: &GridFunction, form: Form) -> Result<Arc<ConformalChart>> {
    match (f.chart(), f.conformal_chart()) {
        (crate::grid::Chart::Conformal(actual), Some(c)) if actual == form => Ok(c.clone()),
        (other, _) => Err(invalid(format!("expected a conformal {form:?}-form function, got {other:?}"))),
    }
}

/// `u(t, theta) = e^{(n-2s) t / 2} w(e^t cos theta, e^t sin theta)`, resampled
/// bilinearly from a Cartesian grid function.
pub fn to_conformal(w: &GridFunction, chart: Arc<ConformalChart>, params: &FractionalParams) -> Result<GridFunction> {
    let grid = w
        .cartesian_grid()
        .ok_or_else(|| invalid("to_conformal expects a Cartesian grid function"))?;
    let (_, outer) = chart.radial_extent();
    if !grid.covers_radius(outer) {
        return Err(Error::RegionOutsideGrid(format!("chart of outer radius {outer}")));
    }
    let a = params.conjugation_exponent();
    let values = Array2::from_shape_fn(chart.shape(), |(i, j)| {
        let t = chart.t()[i];
        let r = t.exp();
        let th = chart.theta()[j];
        let v = grid
            .interpolate(w.values(), r * th.cos(), r * th.sin())
            .unwrap_or(0.0);
        (a * t).exp() * v
    });
    GridFunction::conformal(chart, Form::U, values)
}

/// Converts a conformal function of any form to the `w`-form.
pub fn to_w_form(f: &GridFunction, params: &FractionalParams) -> Result<GridFunction> {
    match f.chart() {
        crate::grid::Chart::Conformal(Form::W) => Ok(f.clone()),
        crate::grid::Chart::Conformal(Form::U) => {
            let c = require_form(f, Form::U)?;
            let a = params.conjugation_exponent();
            let values = Array2::from_shape_fn(c.shape(), |(i, j)| (-a * c.t()[i]).exp() * f.values()[[i, j]]);
            f.with_form(Form::W, values)
        }
        crate::grid::Chart::Conformal(Form::V) => to_w_form(&v_to_u(f, params)?.0, params),
        crate::grid::Chart::Cartesian => Err(invalid("expected a conformal grid function")),
    }
}

/// Converts a `w`-form conformal function to the `u`-form.
pub fn w_to_u(w: &GridFunction, params: &FractionalParams) -> Result<GridFunction> {
    let c = require_form(w, Form::W)?;
    let a = params.conjugation_exponent();
    let values = Array2::from_shape_fn(c.shape(), |(i, j)| (a * c.t()[i]).exp() * w.values()[[i, j]]);
    w.with_form(Form::U, values)
}

/// Evaluates a conformal function of any form as `w` at a Cartesian point.
pub fn from_conformal_at(f: &GridFunction, params: &FractionalParams, y1: f64, y2: f64) -> Option<f64> {
    let c = f.conformal_chart()?;
    let r = y1.hypot(y2);
    if r <= 0.0 {
        return None;
    }
    let t = r.ln();
    let th = y2.atan2(y1);
    let raw = c.interpolate(f.values(), t, th)?;
    let a = params.conjugation_exponent();
    let b = 0.5 * params.weight_exponent();
    match f.chart() {
        crate::grid::Chart::Conformal(Form::W) => Some(raw),
        crate::grid::Chart::Conformal(Form::U) => Some((-a * t).exp() * raw),
        crate::grid::Chart::Conformal(Form::V) => {
            let sn = th.sin();
            (sn > 0.0).then(|| (-a * t).exp() * raw * sn.powf(-b))
        }
        crate::grid::Chart::Cartesian => None,
    }
}

/// `v = sin(theta)^{(1-2s)/2} u`.
pub fn u_to_v(u: &GridFunction, params: &FractionalParams) -> Result<GridFunction> {
    let c = require_form(u, Form::U)?;
    let b = 0.5 * params.weight_exponent();
    let factors: Vec<f64> = c.theta().iter().map(|th| th.sin().max(0.0).powf(b)).collect();
    let values = Array2::from_shape_fn(c.shape(), |(i, j)| {
        let f = factors[j];
        // sin^b at the endpoints is 0 for b > 0 and undefined for b < 0
        let f = if f.is_finite() { f } else { 0.0 };
        f * u.values()[[i, j]]
    });
    u.with_form(Form::V, values)
}

/// Inverse of [`u_to_v`]. Endpoint rows, where the factor degenerates, are
/// linearly extrapolated from the interior; their angular indices are
/// returned as low-confidence rows.
pub fn v_to_u(v: &GridFunction, params: &FractionalParams) -> Result<(GridFunction, Vec<usize>)> {
    let c = require_form(v, Form::V)?;
    let b = 0.5 * params.weight_exponent();
    let (nt, nth) = c.shape();
    let th = c.theta();
    let mut values = Array2::zeros((nt, nth));
    for i in 0..nt {
        for j in 1..nth - 1 {
            values[[i, j]] = v.values()[[i, j]] * th[j].sin().powf(-b);
        }
    }
    let low = if b == 0.0 {
        for i in 0..nt {
            values[[i, 0]] = v.values()[[i, 0]];
            values[[i, nth - 1]] = v.values()[[i, nth - 1]];
        }
        Vec::new()
    } else {
        for i in 0..nt {
            let slope = (values[[i, 2]] - values[[i, 1]]) / (th[2] - th[1]);
            values[[i, 0]] = values[[i, 1]] - slope * (th[1] - th[0]);
            let m = nth - 1;
            let slope = (values[[i, m - 1]] - values[[i, m - 2]]) / (th[m - 1] - th[m - 2]);
            values[[i, m]] = values[[i, m - 1]] + slope * (th[m] - th[m - 1]);
        }
        vec![0, nth - 1]
    };
    Ok((v.with_form(Form::U, values)?, low))
}

/// Discrete `sin^{1-2s}(d_t^2 - (n-2s)^2/4) u + d_theta(sin^{1-2s} d_theta u)`
/// on a `u`-form function. Values on the outermost layers in `t` and
/// `theta` are set to zero.
///
/// The angular part is a control-volume average of the flux divergence; the
/// `t` part uses the `sin^{1-2s}` mean over the same control volume.
pub fn apply_conformal_operator(u: &GridFunction, params: &FractionalParams) -> Result<GridFunction> {
    let c = require_form(u, Form::U)?;
    let a2 = params.conjugation_exponent().powi(2);
    let (nt, nth) = c.shape();
    let stencil = c.theta_stencil(params);
    let ht = c.ht();
    let vals = u.values();
    let mut out = Array2::zeros((nt, nth));
    for i in 1..nt - 1 {
        let row: Vec<f64> = vals.row(i).to_vec();
        let div = stencil.divergence(&row);
        for j in 1..nth - 1 {
            let dtt = (vals[[i + 1, j]] - 2.0 * vals[[i, j]] + vals[[i - 1, j]]) / (ht * ht);
            out[[i, j]] = div[j] + stencil.mean_weight(j) * (dtt - a2 * vals[[i, j]]);
        }
    }
    u.with_values(out)
}

/// Cartesian operator `div(y2^{1-2s} grad w)` in polar form, evaluated on a
/// `w`-form chart function: the conformal operator of `u = e^{(n-2s)t/2} w`
/// multiplied by `e^{-((n-2s)/2 + 1 + 2s) t}`.
pub fn apply_polar_operator(w: &GridFunction, params: &FractionalParams) -> Result<GridFunction> {
    let u = w_to_u(w, params)?;
    let lu = apply_conformal_operator(&u, params)?;
    let c = require_form(w, Form::W)?;
    let e = params.conjugation_exponent() + 1.0 + 2.0 * params.s();
    let values = Array2::from_shape_fn(c.shape(), |(i, j)| (-e * c.t()[i]).exp() * lu.values()[[i, j]]);
    w.with_form(Form::W, values)
}

/// Discrete `div(y2^{1-2s} grad w)` on a Cartesian grid function.
///
/// Normal direction: control-volume flux divergence with the flux fitted in
/// `span{1, y2^{2-2s}}` from neighbouring cells. Tangential direction: the
/// three-point second difference times the `y2^{1-2s}` mean over the control
/// volume. The boundary layer `y2 = 0` and the outer rim are set to zero.
pub fn apply_cartesian_operator(w: &GridFunction, params: &FractionalParams) -> Result<GridFunction> {
    let grid = w
        .cartesian_grid()
        .ok_or_else(|| invalid("apply_cartesian_operator expects a Cartesian grid function"))?;
    let (n1, n2) = grid.shape();
    if n2 < 4 {
        return Err(invalid("the normal direction needs at least three cells"));
    }
    let stencil = FluxStencil::new(grid.y2(), DegenerateWeight::Power(params.weight_exponent()));
    let h1 = grid.h1();
    let vals = w.values();
    let mut out = Array2::zeros((n1, n2));
    for i in 1..n1 - 1 {
        let col: Vec<f64> = vals.row(i).to_vec();
        let div = stencil.divergence(&col);
        for j in 1..n2 - 1 {
            let d11 = (vals[[i + 1, j]] - 2.0 * vals[[i, j]] + vals[[i - 1, j]]) / (h1 * h1);
            out[[i, j]] = div[j] + stencil.mean_weight(j) * d11;
        }
    }
    w.with_values(out)
}

/// Sup norm of `y2^{2s-1} div(y2^{1-2s} grad w)` over the interior rows of an
/// output of [`apply_cartesian_operator`], using the control-volume mean of
/// `y2^{1-2s}`.
pub fn normalized_residual(lw: &GridFunction, params: &FractionalParams) -> Result<f64> {
    let grid = lw
        .cartesian_grid()
        .ok_or_else(|| invalid("normalized_residual expects a Cartesian grid function"))?;
    let stencil = FluxStencil::new(grid.y2(), DegenerateWeight::Power(params.weight_exponent()));
    let (n1, n2) = grid.shape();
    let mut worst: f64 = 0.0;
    for i in 1..n1 - 1 {
        for j in 1..n2 - 1 {
            worst = worst.max(lw.values()[[i, j]].abs() / stencil.mean_weight(j));
        }
    }
    Ok(worst)
}

/// Levels below which [`normalized_residual`] and [`neumann_trace`] carry no
/// information beyond rounding of the nodal data.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RoundoffFloor {
    pub residual: f64,
    pub trace: f64,
}

/// Rounding amplification of the Cartesian stencils for data of the size of
/// `w`, with a safety factor of 16.
pub fn roundoff_floor(w: &GridFunction, params: &FractionalParams) -> Result<RoundoffFloor> {
    let grid = w
        .cartesian_grid()
        .ok_or_else(|| invalid("roundoff_floor expects a Cartesian grid function"))?;
    let stencil = FluxStencil::new(grid.y2(), DegenerateWeight::Power(params.weight_exponent()));
    let m0 = stencil.cell_inverse_mass();
    let mass = stencil.cv_mass();
    let mut amp: f64 = 4.0 / grid.h1().powi(2);
    for j in 1..grid.y2().len() - 1 {
        amp = amp.max(2.0 / (m0[j - 1].min(m0[j]) * mass[j]));
    }
    let size = 16.0 * f64::EPSILON * w.max_abs();
    Ok(RoundoffFloor { residual: size * amp, trace: size * 4.0 / m0[0] })
}

/// Relative disagreement above which the two boundary-layer flux estimates
/// are treated as non-convergent.
const TRACE_AGREEMENT: f64 = 0.25;
/// Disagreements below this fraction of the column's largest cell flux are
/// accepted regardless of their relative size.
const TRACE_FLOOR: f64 = 1e-3;

/// `lim_{y2 -> 0} y2^{1-2s} d_2 w` along the boundary of a Cartesian grid
/// function.
///
/// The flux line fitted through the two innermost cells is evaluated at
/// `y2 = 0`. The same line fitted one layer further out serves as a
/// convergence check: if the two disagree by more than a quarter of their
/// size, and by more than a small fraction of the column's flux scale, the
/// position is reported.
pub fn neumann_trace(w: &GridFunction, params: &FractionalParams) -> Result<BoundaryTrace> {
    let grid = w
        .cartesian_grid()
        .ok_or_else(|| invalid("neumann_trace expects a Cartesian grid function"))?;
    let stencil = FluxStencil::new(grid.y2(), DegenerateWeight::Power(params.weight_exponent()));
    let mut values = Vec::with_capacity(grid.y1().len());
    for (i, &y1) in grid.y1().iter().enumerate() {
        let col: Vec<f64> = w.values().row(i).to_vec();
        let (left, _) = stencil.end_fluxes(&col);
        let scale = stencil.max_cell_flux(&col);
        let gap = (left.inner - left.outer).abs();
        if gap > TRACE_FLOOR * scale && gap > TRACE_AGREEMENT * left.inner.abs().max(left.outer.abs()) {
            return Err(Error::NonConvergentTrace { position: y1 });
        }
        values.push(left.inner);
    }
    BoundaryTrace::new(grid.y1().to_vec(), values)
}

/// Weighted angular fluxes `sin^{1-2s} d_theta w` at `theta = 0` and
/// `theta = pi` for every `t` row of a `w`-form chart function.
pub fn ray_fluxes(w: &GridFunction, params: &FractionalParams) -> Result<(Vec<f64>, Vec<f64>)> {
    let c = require_form(w, Form::W)?;
    let stencil = c.theta_stencil(params);
    let mut right = Vec::with_capacity(c.t().len());
    let mut left = Vec::with_capacity(c.t().len());
    for i in 0..c.t().len() {
        let row: Vec<f64> = w.values().row(i).to_vec();
        let (at0, at_pi) = stencil.end_fluxes(&row);
        right.push(at0.inner);
        left.push(at_pi.inner);
    }
    Ok((right, left))
}

/// Weighted Neumann data on the boundary rays of a `w`-form chart function:
/// `h(e^t) = e^{-2st} F(0)` on the positive axis and `h(-e^t) = -e^{-2st} F(pi)`.
pub fn conformal_neumann_trace(w: &GridFunction, params: &FractionalParams) -> Result<(Vec<f64>, Vec<f64>)> {
    let c = require_form(w, Form::W)?;
    let (f0, fpi) = ray_fluxes(w, params)?;
    let s2 = 2.0 * params.s();
    let pos = c.t().iter().zip(&f0).map(|(t, f)| (-s2 * t).exp() * f).collect();
    let neg = c.t().iter().zip(&fpi).map(|(t, f)| -(-s2 * t).exp() * f).collect();
    Ok((pos, neg))
}

/// Resamples a Cartesian function onto a chart and applies the Cartesian
/// operator first; used to compare the two discretisations.
pub fn resample_cartesian(values: &GridFunction, chart: &Arc<ConformalChart>, grid: &HalfPlaneGrid) -> Result<Array2<f64>> {
    let out = Array2::from_shape_fn(chart.shape(), |(i, j)| {
        let r = chart.t()[i].exp();
        let th = chart.theta()[j];
        grid.interpolate(values.values(), r * th.cos(), r * th.sin())
            .unwrap_or(f64::NAN)
    });
    if out.iter().any(|v| !v.is_finite()) {
        return Err(Error::RegionOutsideGrid("chart image exceeds the Cartesian grid".into()));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn params(s: f64) -> FractionalParams {
        FractionalParams::new(s).unwrap()
    }

    fn chart(s: f64, nt: usize, nth: usize) -> Arc<ConformalChart> {
        Arc::new(ConformalChart::annulus(0.5, 2.0, nt, nth, &params(s)).unwrap())
    }

    #[test]
    fn angles_are_graded_and_symmetric() {
        let th = graded_angles(20, 2.0);
        assert_eq!(th[0], 0.0);
        assert!((th[20] - PI).abs() < 1e-15);
        for j in 0..=20 {
            assert!((th[j] + th[20 - j] - PI).abs() < 1e-13);
        }
        assert!(th[1] < PI / 20.0);
    }

    #[test]
    fn constant_maps_to_constant_for_half() {
        let p = params(0.5);
        let g = Arc::new(HalfPlaneGrid::half_ball(3.0, 40, 20, &p).unwrap());
        let w = GridFunction::sample(g, &|_: f64, _: f64| 1.0).unwrap();
        let u = to_conformal(&w, chart(0.5, 8, 8), &p).unwrap();
        assert!(u.values().iter().all(|v| (v - 1.0).abs() < 1e-14));
    }

    #[test]
    fn u_v_round_trip() {
        let p = params(0.25);
        let c = chart(0.25, 8, 12);
        let w = c.sample(&|y1: f64, y2: f64| 1.0 + y1 + y2 * y2).unwrap();
        let u = w_to_u(&w, &p).unwrap();
        let v = u_to_v(&u, &p).unwrap();
        let (back, low) = v_to_u(&v, &p).unwrap();
        assert_eq!(low, vec![0, 12]);
        for i in 0..9 {
            for j in 1..12 {
                assert_abs_diff_eq!(back.values()[[i, j]], u.values()[[i, j]], epsilon = 1e-12);
            }
        }
        let th = c.theta()[3];
        assert_abs_diff_eq!(v.values()[[2, 3]], th.sin().powf(0.25) * u.values()[[2, 3]], epsilon = 1e-14);
    }

    #[test]
    fn separated_exponential_in_t() {
        // u = sin(t): operator gives -(1 + a^2) sin^{1-2s} sin(t) in the continuum
        let s = 0.3;
        let p = params(s);
        let c = chart(s, 64, 16);
        let vals = Array2::from_shape_fn(c.shape(), |(i, _)| c.t()[i].sin());
        let u = GridFunction::conformal(c.clone(), Form::U, vals).unwrap();
        let lu = apply_conformal_operator(&u, &p).unwrap();
        let a2 = p.conjugation_exponent().powi(2);
        let stencil = c.theta_stencil(&p);
        for i in [10, 30, 50] {
            for j in [3, 8, 12] {
                let exact = -(1.0 + a2) * stencil.mean_weight(j) * c.t()[i].sin();
                assert!((lu.values()[[i, j]] - exact).abs() < 1e-3);
            }
        }
    }

    #[test]
    fn neumann_examples() {
        let s = 0.3;
        let p = params(s);
        let g = Arc::new(HalfPlaneGrid::boxed(1.0, 1.0, 20, 40, &p).unwrap());
        let w = GridFunction::sample(g.clone(), &|_: f64, y2: f64| y2.powf(2.0 * s) / (2.0 * s)).unwrap();
        let h = neumann_trace(&w, &p).unwrap();
        assert!(h.values().iter().all(|v| (v - 1.0).abs() < 1e-9));
        let w = GridFunction::sample(g, &|y1: f64, y2: f64| y1 * y2.powf(2.0 * s) / (2.0 * s)).unwrap();
        let h = neumann_trace(&w, &p).unwrap();
        for (x, v) in h.positions().iter().zip(h.values()) {
            assert_abs_diff_eq!(*v, *x, epsilon = 1e-9);
        }
    }

    #[test]
    fn oscillating_layer_is_flagged() {
        let p = params(0.5);
        let g = Arc::new(HalfPlaneGrid::boxed(1.0, 1.0, 8, 16, &p).unwrap());
        let y2 = g.y2().to_vec();
        let w = GridFunction::sample(g, &|_: f64, y: f64| {
            let j = y2.iter().position(|v| (v - y).abs() < 1e-14).unwrap_or(0);
            if j % 2 == 1 { 1.0 } else { 0.0 }
        })
        .unwrap();
        assert!(matches!(neumann_trace(&w, &p), Err(Error::NonConvergentTrace { .. })));
    }
}
