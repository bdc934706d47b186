//! Extension profiles, the Dirichlet-to-Neumann symbol, extensions of
//! boundary data, explicit homogeneous solutions and blow-up rescaling.
//!
//! For a frequency `xi` the extension of `e^{i xi y1}` is `e^{i xi y1} Theta(y2)`
//! where `Theta'' + (1-2s)/y Theta' - xi^2 Theta = 0`, `Theta(0) = 1` and
//! `Theta` decays. Near `y = 0` every solution is `A phi_1 + B phi_2` with
//!
//! ```text
//! phi_1 = 1 + xi^2 y^2 / (4 (1 - s)) + ...
//! phi_2 = y^{2s} (1 + xi^2 y^2 / (4 (1 + s)) + ...)
//! ```
//!
//! so `Theta = theta / A` and `m(xi) = -lim y^{1-2s} Theta' = -2 s B / A`.

use std::f64::consts::PI;
use std::sync::Arc;

use ndarray::Array2;
use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::grid::{integrate_field, Field, FractionalParams, GridFunction, HalfPlaneGrid, PolarResolution, Region};
use crate::spectrum::EigenPair;

/// Point where the Frobenius expansion is matched to the integrated solution.
pub const FROBENIUS_START: f64 = 1e-6;
/// `|xi| y` at which the decaying asymptotics start the backward integration.
const DECAY_START: f64 = 36.0;
/// Base step in `ln y`.
const STEP: f64 = 0.004;
/// Largest supported degree of homogeneous solutions.
pub const MAX_HOMOGENEOUS_DEGREE: usize = 6;

/// Decaying, normalised solution of the profile equation for one frequency.
#[derive(Debug, Clone)]
pub struct ExtensionProfile {
    xi: f64,
    s: f64,
    /// `B / A` of the Frobenius match.
    ratio: f64,
    x: Vec<f64>,
    theta: Vec<f64>,
    flux: Vec<f64>,
}

impl ExtensionProfile {
    pub fn new(xi: f64, s: f64) -> Result<Self> {
        if !(s > 0.0 && s < 1.0) {
            return Err(invalid(format!("s must lie in (0, 1), got {s}")));
        }
        if !xi.is_finite() {
            return Err(invalid("frequency must be finite"));
        }
        let k = xi.abs();
        if k == 0.0 {
            return Ok(Self { xi, s, ratio: 0.0, x: Vec::new(), theta: Vec::new(), flux: Vec::new() });
        }
        let y_max = DECAY_START / k;
        let x_max = y_max.ln();
        let x_min = FROBENIUS_START.ln();
        if x_max <= x_min {
            return Err(Error::Shooting(format!("frequency {xi} is too large to resolve above y = {FROBENIUS_START}")));
        }
        let k2 = k * k;
        let rhs = |x: f64, th: f64, p: f64| {
            let y = x.exp();
            (y.powf(2.0 * s) * p, k2 * y.powf(2.0 - 2.0 * s) * th)
        };

        // Start on the decaying branch and integrate towards y = 0.
        let th0 = 1.0;
        let dth = th0 * (-k + (s - 0.5) / y_max);
        let mut state = (x_max, th0, y_max.powf(1.0 - 2.0 * s) * dth);
        let mut xs = vec![state.0];
        let mut ths = vec![state.1];
        let mut ps = vec![state.2];
        while state.0 > x_min {
            let y = state.0.exp();
            let h = (STEP / (1.0 + k * y)).min(state.0 - x_min);
            let (x, th, p) = state;
            let (a1, b1) = rhs(x, th, p);
            let (a2, b2) = rhs(x - 0.5 * h, th - 0.5 * h * a1, p - 0.5 * h * b1);
            let (a3, b3) = rhs(x - 0.5 * h, th - 0.5 * h * a2, p - 0.5 * h * b2);
            let (a4, b4) = rhs(x - h, th - h * a3, p - h * b3);
            let next_x = if state.0 - h <= x_min { x_min } else { x - h };
            state = (
                next_x,
                th - h / 6.0 * (a1 + 2.0 * a2 + 2.0 * a3 + a4),
                p - h / 6.0 * (b1 + 2.0 * b2 + 2.0 * b3 + b4),
            );
            if !(state.1.is_finite() && state.2.is_finite()) {
                return Err(Error::Shooting(format!("profile overflowed at y = {:e}", state.0.exp())));
            }
            xs.push(state.0);
            ths.push(state.1);
            ps.push(state.2);
        }

        // Match theta = A phi_1 + B phi_2 and its flux at y0.
        let y0 = FROBENIUS_START;
        let phi1 = 1.0 + k2 * y0 * y0 / (4.0 * (1.0 - s));
        let dphi1 = k2 * y0.powf(2.0 - 2.0 * s) / (2.0 * (1.0 - s));
        let phi2 = y0.powf(2.0 * s) * (1.0 + k2 * y0 * y0 / (4.0 * (1.0 + s)));
        let dphi2 = 2.0 * s + k2 * y0 * y0 / 2.0;
        let (th, p) = (*ths.last().unwrap(), *ps.last().unwrap());
        let det = phi1 * dphi2 - phi2 * dphi1;
        let a = (th * dphi2 - phi2 * p) / det;
        let b = (phi1 * p - dphi1 * th) / det;
        if !(a > 0.0) || !a.is_finite() {
            return Err(Error::Shooting(format!("non-decaying shot for xi = {xi}: A = {a:e}")));
        }
        let ratio = b / a;
        xs.reverse();
        ths.reverse();
        ps.reverse();
        let theta = ths.into_iter().map(|v| v / a).collect::<Vec<_>>();
        let flux = ps.into_iter().map(|v| v / a).collect::<Vec<_>>();
        if theta.windows(2).any(|w| w[1] > w[0] * (1.0 + 1e-12)) {
            return Err(Error::Shooting(format!("profile for xi = {xi} is not monotone")));
        }
        Ok(Self { xi, s, ratio, x: xs, theta, flux })
    }

    pub fn xi(&self) -> f64 {
        self.xi
    }

    pub fn s(&self) -> f64 {
        self.s
    }

    /// `m(xi) = -lim_{y -> 0} y^{1-2s} Theta'(y)`.
    pub fn dtn(&self) -> f64 {
        -2.0 * self.s * self.ratio
    }

    /// `Theta(y2)` for `y2 >= 0`.
    pub fn value(&self, y2: f64) -> f64 {
        self.value_and_flux(y2).0
    }

    /// `(Theta(y2), y2^{1-2s} Theta'(y2))`.
    pub fn value_and_flux(&self, y2: f64) -> (f64, f64) {
        let s = self.s;
        if self.x.is_empty() {
            return (1.0, 0.0);
        }
        let k2 = self.xi * self.xi;
        let y = y2.max(0.0);
        if y <= FROBENIUS_START {
            let th = 1.0 + k2 * y * y / (4.0 * (1.0 - s))
                + self.ratio * y.powf(2.0 * s) * (1.0 + k2 * y * y / (4.0 * (1.0 + s)));
            let p = k2 * y.powf(2.0 - 2.0 * s) / (2.0 * (1.0 - s)) + self.ratio * (2.0 * s + k2 * y * y / 2.0);
            return (th, p);
        }
        let x = y.ln();
        let n = self.x.len();
        if x >= self.x[n - 1] {
            let (y_end, th_end) = (self.x[n - 1].exp(), self.theta[n - 1]);
            let k = self.xi.abs();
            let th = th_end * (y / y_end).powf(s - 0.5) * (-k * (y - y_end)).exp();
            let dth = th * (-k + (s - 0.5) / y);
            return (th, y.powf(1.0 - 2.0 * s) * dth);
        }
        let i = self.x.partition_point(|&v| v <= x).clamp(1, n - 1) - 1;
        let (x0, x1) = (self.x[i], self.x[i + 1]);
        let h = x1 - x0;
        let t = (x - x0) / h;
        let d = |j: usize| self.x[j].exp().powf(2.0 * s) * self.flux[j];
        let e = |j: usize| k2 * self.x[j].exp().powf(2.0 - 2.0 * s) * self.theta[j];
        let th = hermite(t, h, self.theta[i], self.theta[i + 1], d(i), d(i + 1));
        let p = hermite(t, h, self.flux[i], self.flux[i + 1], e(i), e(i + 1));
        (th, p)
    }
}

fn hermite(t: f64, h: f64, f0: f64, f1: f64, d0: f64, d1: f64) -> f64 {
    let t2 = t * t;
    let t3 = t2 * t;
    (2.0 * t3 - 3.0 * t2 + 1.0) * f0 + (t3 - 2.0 * t2 + t) * h * d0 + (-2.0 * t3 + 3.0 * t2) * f1 + (t3 - t2) * h * d1
}

/// `Theta(y2)` for frequency `xi`.
pub fn extension_profile(xi: f64, s: f64, y2: f64) -> Result<f64> {
    if xi == 0.0 {
        return Err(invalid("the profile is defined for nonzero frequencies"));
    }
    if !(y2 > 0.0) {
        return Err(invalid("profiles are evaluated at positive y2"));
    }
    Ok(ExtensionProfile::new(xi, s)?.value(y2))
}

/// Unnormalised symbol `m(xi)` of the Dirichlet-to-Neumann map.
pub fn dtn_symbol(xi: f64, s: f64) -> Result<f64> {
    if xi == 0.0 {
        return Err(invalid("the symbol is evaluated at nonzero frequencies"));
    }
    Ok(ExtensionProfile::new(xi, s)?.dtn())
}

/// Dirichlet-to-Neumann map normalised by its measured constant
/// `d_s = m(1)`, so that `normalized(xi) = |xi|^{2s}` in the continuum.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DtnMap {
    pub s: f64,
    pub d_s: f64,
}

impl DtnMap {
    pub fn new(s: f64) -> Result<Self> {
        Ok(Self { s, d_s: dtn_symbol(1.0, s)? })
    }

    pub fn normalized(&self, xi: f64) -> Result<f64> {
        Ok(dtn_symbol(xi, self.s)? / self.d_s)
    }
}

/// `normalized_dtn(xi) = m(xi) / m(1)`.
pub fn normalized_dtn(xi: f64, s: f64) -> Result<f64> {
    DtnMap::new(s)?.normalized(xi)
}

/// Real boundary data given by its Fourier amplitudes,
/// `u(y1) = sum_xi a(xi) e^{i xi y1}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralBoundaryData {
    frequencies: Vec<f64>,
    amplitudes: Vec<Complex64>,
}

impl SpectralBoundaryData {
    /// Checks Hermitian symmetry `a(-xi) = conj(a(xi))`.
    pub fn new(frequencies: Vec<f64>, amplitudes: Vec<Complex64>) -> Result<Self> {
        if frequencies.len() != amplitudes.len() {
            return Err(invalid("frequencies and amplitudes differ in length"));
        }
        if frequencies.iter().any(|x| !x.is_finite()) || amplitudes.iter().any(|a| !(a.re.is_finite() && a.im.is_finite())) {
            return Err(invalid("spectral data must be finite"));
        }
        let scale = amplitudes.iter().fold(0.0_f64, |m, a| m.max(a.norm())).max(1e-300);
        for (xi, a) in frequencies.iter().zip(&amplitudes) {
            let partner = frequencies
                .iter()
                .zip(&amplitudes)
                .filter(|(x, _)| (**x + xi).abs() <= 1e-12 * xi.abs().max(1.0))
                .map(|(_, b)| *b)
                .fold(Complex64::new(0.0, 0.0), |acc, b| acc + b);
            let own = frequencies
                .iter()
                .zip(&amplitudes)
                .filter(|(x, _)| (**x - xi).abs() <= 1e-12 * xi.abs().max(1.0))
                .map(|(_, b)| *b)
                .fold(Complex64::new(0.0, 0.0), |acc, b| acc + b);
            if (partner - own.conj()).norm() > 1e-10 * scale {
                return Err(invalid(format!("amplitudes are not Hermitian at xi = {xi} ({a})")));
            }
        }
        Ok(Self { frequencies, amplitudes })
    }

    /// `cos(xi0 y1)`, i.e. amplitude `1/2` at `+-xi0`.
    pub fn cosine(xi0: f64) -> Result<Self> {
        let half = Complex64::new(0.5, 0.0);
        if xi0 == 0.0 {
            return Self::new(vec![0.0], vec![Complex64::new(1.0, 0.0)]);
        }
        Self::new(vec![xi0, -xi0], vec![half, half])
    }

    /// Discrete Fourier transform of samples on a uniform periodic grid of
    /// spacing `h`, frequencies in `(-pi/h, pi/h]`.
    pub fn from_samples(values: &[f64], h: f64) -> Result<Self> {
        let n = values.len();
        if n < 2 || !(h > 0.0) {
            return Err(invalid("need at least two samples and a positive spacing"));
        }
        let mut buf: Vec<Complex64> = values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        FftPlanner::new().plan_fft_forward(n).process(&mut buf);
        let period = n as f64 * h;
        let mut frequencies = Vec::with_capacity(n);
        let mut amplitudes = Vec::with_capacity(n);
        for (m, c) in buf.into_iter().enumerate() {
            let signed = if 2 * m > n { m as i64 - n as i64 } else { m as i64 };
            let a = c / n as f64;
            if 2 * m == n {
                // Nyquist mode: split between +-pi/h as a cosine.
                let xi = 2.0 * PI * signed as f64 / period;
                frequencies.push(xi);
                amplitudes.push(a * 0.5);
                frequencies.push(-xi);
                amplitudes.push((a * 0.5).conj());
            } else {
                frequencies.push(2.0 * PI * signed as f64 / period);
                amplitudes.push(a);
            }
        }
        Self::new(frequencies, amplitudes)
    }

    /// Data whose synthesis at `y1` equals this data's at `y1 + shift`.
    pub fn translated(&self, shift: f64) -> Self {
        let amplitudes = self
            .frequencies
            .iter()
            .zip(&self.amplitudes)
            .map(|(&xi, a)| a * Complex64::from_polar(1.0, xi * shift))
            .collect();
        Self { frequencies: self.frequencies.clone(), amplitudes }
    }

    pub fn frequencies(&self) -> &[f64] {
        &self.frequencies
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn max_frequency(&self) -> f64 {
        self.frequencies.iter().fold(0.0, |m, x| m.max(x.abs()))
    }

    /// `sum a(xi) e^{i xi y1} g(xi)` (real part).
    pub fn synthesize(&self, y1: f64, g: impl Fn(f64) -> f64) -> f64 {
        self.frequencies
            .iter()
            .zip(&self.amplitudes)
            .map(|(&xi, a)| (a * Complex64::from_polar(1.0, xi * y1)).re * g(xi))
            .sum()
    }
}

fn unique_frequencies(data: &SpectralBoundaryData) -> Vec<f64> {
    let mut ks: Vec<f64> = data.frequencies().iter().map(|x| x.abs()).collect();
    ks.sort_by(f64::total_cmp);
    ks.dedup_by(|a, b| (*a - *b).abs() <= 1e-12 * a.abs().max(1.0));
    ks
}

fn profiles_for(data: &SpectralBoundaryData, s: f64) -> Result<Vec<(f64, ExtensionProfile)>> {
    unique_frequencies(data)
        .into_par_iter()
        .map(|k| ExtensionProfile::new(k, s).map(|p| (k, p)))
        .collect()
}

fn lookup_index(profiles: &[(f64, ExtensionProfile)], xi: f64) -> usize {
    let k = xi.abs();
    profiles
        .partition_point(|(v, _)| *v < k * (1.0 - 1e-12) - 1e-300)
        .min(profiles.len() - 1)
}

fn lookup(profiles: &[(f64, ExtensionProfile)], xi: f64) -> &ExtensionProfile {
    &profiles[lookup_index(profiles, xi)].1
}

/// Extension `sum a(xi) e^{i xi y1} Theta_xi(y2)` sampled on a Cartesian grid.
pub fn cs_extend(data: &SpectralBoundaryData, params: &FractionalParams, grid: Arc<HalfPlaneGrid>) -> Result<GridFunction> {
    let nyquist = PI / grid.h1();
    let top = data.max_frequency();
    if top >= nyquist {
        return Err(Error::Aliasing { xi: top, nyquist });
    }
    let profiles = profiles_for(data, params.s())?;
    let (n1, n2) = grid.shape();
    let y1 = grid.y1();
    let y2 = grid.y2();
    // Profile tables per (frequency, y2) are shared across y1.
    let columns: Vec<Vec<f64>> = profiles
        .par_iter()
        .map(|(_, p)| y2.iter().map(|&y| p.value(y)).collect())
        .collect();
    let mut values = Array2::zeros((n1, n2));
    for (&xi, a) in data.frequencies().iter().zip(data.amplitudes()) {
        let col = &columns[lookup_index(&profiles, xi)];
        for i in 0..n1 {
            let phase = (a * Complex64::from_polar(1.0, xi * y1[i])).re;
            for j in 0..n2 {
                values[[i, j]] += phase * col[j];
            }
        }
    }
    GridFunction::cartesian(grid, values)
}

/// Pointwise weighted Neumann data of the extension, `-sum a(xi) m(xi) e^{i xi y1}`.
pub fn dtn_apply(data: &SpectralBoundaryData, params: &FractionalParams, y1: &[f64]) -> Result<Vec<f64>> {
    let profiles = profiles_for(data, params.s())?;
    Ok(y1
        .iter()
        .map(|&x| -data.synthesize(x, |xi| if xi == 0.0 { 0.0 } else { lookup(&profiles, xi).dtn() }))
        .collect())
}

/// `|y|^k P_k(cos theta)` sampled on the grid.
pub fn homogeneous_solution(k: usize, params: &FractionalParams, grid: Arc<HalfPlaneGrid>) -> Result<GridFunction> {
    if k > MAX_HOMOGENEOUS_DEGREE {
        return Err(invalid(format!("homogeneous solutions are supported up to degree {MAX_HOMOGENEOUS_DEGREE}")));
    }
    let pair = EigenPair::new(k, params.s())?;
    GridFunction::sample(grid, &|y1: f64, y2: f64| pair.homogeneous(y1, y2))
}

/// `|y|^k P_k(cos theta)` as a field.
pub fn homogeneous_field(k: usize, s: f64) -> Result<impl Field + Clone> {
    if k > MAX_HOMOGENEOUS_DEGREE {
        return Err(invalid(format!("homogeneous solutions are supported up to degree {MAX_HOMOGENEOUS_DEGREE}")));
    }
    let pair = EigenPair::new(k, s)?;
    Ok(move |y1: f64, y2: f64| pair.homogeneous(y1, y2))
}

/// `w_sigma(y) = w(sigma y) / (sigma^{-(n+1)/2} sigma^{-(1-2s)/2} ||y2^{(1-2s)/2} w||_{L^2(B_sigma^+)})`.
#[derive(Clone)]
pub struct BlowUp<'a> {
    field: &'a dyn Field,
    sigma: f64,
    scale: f64,
}

impl Field for BlowUp<'_> {
    fn value(&self, y1: f64, y2: f64) -> f64 {
        self.field.value(self.sigma * y1, self.sigma * y2) * self.scale
    }

    fn covers_radius(&self, radius: f64) -> bool {
        self.field.covers_radius(self.sigma * radius)
    }
}

impl BlowUp<'_> {
    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    /// Multiplier applied to `w(sigma y)`.
    pub fn scale(&self) -> f64 {
        self.scale
    }
}

/// Quadrature used for the blow-up normalisation.
pub const BLOW_UP_RESOLUTION: PolarResolution = PolarResolution { radial: 32, angular: 64, panels: 4 };

/// Rescaled field normalised to unit weighted `L^2` norm on `B_1^+`.
pub fn blow_up<'a>(w: &'a dyn Field, sigma: f64, params: &FractionalParams) -> Result<BlowUp<'a>> {
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(invalid("sigma must be positive and finite"));
    }
    if !w.covers_radius(sigma) {
        return Err(Error::RegionOutsideGrid(format!("half-ball of radius {sigma}")));
    }
    let p = params.weight_exponent();
    let mass = integrate_field(&|y1: f64, y2: f64| w.value(y1, y2).powi(2), Region::HalfBall { radius: sigma }, p, BLOW_UP_RESOLUTION)?;
    if !(mass > 0.0) || !mass.is_finite() {
        return Err(Error::ZeroNorm);
    }
    let n = params.n() as f64;
    let denom = sigma.powf(-(n + 1.0) / 2.0) * sigma.powf(-p / 2.0) * mass.sqrt();
    Ok(BlowUp { field: w, sigma, scale: 1.0 / denom })
}

/// [`blow_up`] sampled on a Cartesian grid covering `B_1^+`.
pub fn blow_up_rescale(w: &dyn Field, sigma: f64, params: &FractionalParams, grid: Arc<HalfPlaneGrid>) -> Result<GridFunction> {
    if !grid.covers_radius(1.0) {
        return Err(Error::RegionOutsideGrid("unit half-ball".into()));
    }
    let rescaled = blow_up(w, sigma, params)?;
    GridFunction::sample(grid, &rescaled)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn half_order_profile_is_exponential() {
        for xi in [0.5, 1.0, 3.0, -2.0] {
            let p = ExtensionProfile::new(xi, 0.5).unwrap();
            for y in [1e-7, 1e-3, 0.1, 0.7, 2.0, 5.0] {
                assert_abs_diff_eq!(p.value(y), (-xi.abs() * y).exp(), epsilon = 1e-8);
            }
            assert_abs_diff_eq!(p.dtn(), xi.abs(), epsilon = 1e-8);
        }
    }

    #[test]
    fn profile_is_monotone_and_starts_at_one() {
        for s in [0.2, 0.7] {
            let p = ExtensionProfile::new(2.0, s).unwrap();
            assert_eq!(p.value(0.0), 1.0);
            let y = 1e-9_f64;
            let leading = 1.0 - p.dtn() / (2.0 * s) * y.powf(2.0 * s);
            assert_abs_diff_eq!(p.value(y), leading, epsilon = 1e-12);
            let mut prev = 1.0 + 1e-12;
            for i in 1..200 {
                let v = p.value(i as f64 * 0.02);
                assert!(v < prev);
                prev = v;
            }
        }
    }

    #[test]
    fn zero_data_extends_to_zero() {
        let p = FractionalParams::new(0.3).unwrap();
        let g = Arc::new(HalfPlaneGrid::half_ball(1.0, 16, 8, &p).unwrap());
        let data = SpectralBoundaryData::new(vec![1.0, -1.0], vec![Complex64::new(0.0, 0.0); 2]).unwrap();
        let u = cs_extend(&data, &p, g).unwrap();
        assert_eq!(u.max_abs(), 0.0);
    }

    #[test]
    fn non_hermitian_data_is_rejected() {
        let bad = SpectralBoundaryData::new(vec![1.0, -1.0], vec![Complex64::new(1.0, 1.0), Complex64::new(1.0, 1.0)]);
        assert!(bad.is_err());
    }

    #[test]
    fn aliasing_is_rejected() {
        let p = FractionalParams::new(0.5).unwrap();
        let g = Arc::new(HalfPlaneGrid::half_ball(1.0, 8, 8, &p).unwrap());
        let data = SpectralBoundaryData::cosine(20.0).unwrap();
        assert!(matches!(cs_extend(&data, &p, g), Err(Error::Aliasing { .. })));
    }

    #[test]
    fn fft_round_trip() {
        let n = 16;
        let h = 0.25;
        let vals: Vec<f64> = (0..n).map(|i| (2.0 * PI * i as f64 / (n as f64 * h) * h).cos() + 0.3).collect();
        let data = SpectralBoundaryData::from_samples(&vals, h).unwrap();
        for (i, v) in vals.iter().enumerate() {
            assert_abs_diff_eq!(data.synthesize(i as f64 * h, |_| 1.0), *v, epsilon = 1e-12);
        }
        let moved = data.translated(0.7);
        for y in [-1.0, 0.2, 2.9] {
            assert_abs_diff_eq!(moved.synthesize(y, |_| 1.0), data.synthesize(y + 0.7, |_| 1.0), epsilon = 1e-12);
        }
    }

    #[test]
    fn homogeneous_degree_limit() {
        let p = FractionalParams::new(0.5).unwrap();
        let g = Arc::new(HalfPlaneGrid::half_ball(1.0, 8, 8, &p).unwrap());
        assert!(homogeneous_solution(7, &p, g.clone()).is_err());
        let w1 = homogeneous_solution(1, &p, g.clone()).unwrap();
        let c = w1.values()[[8, 3]] / g.y1()[8];
        for ((i, _), v) in w1.values().indexed_iter() {
            assert_abs_diff_eq!(*v, c * g.y1()[i], epsilon = 1e-12);
        }
    }
}
