//! Spectrum of the weighted spherical operator on the half-circle and the
//! radial parametrix.
//!
//! On `(0, pi)` the eigenproblem `-(sin^{1-2s} u')' = Lambda sin^{1-2s} u` with
//! vanishing weighted Neumann data has eigenvalues `Lambda_k = k (k + 1 - 2s)`
//! and polynomial eigenfunctions `P_k(cos theta)`. In the conjugated
//! convention the eigenvalues read
//! `lambda_k = -Lambda_k - (1-2s)^2/2 = -(1-2s)^2/4 - (k - s + 1/2)^2`, and the
//! radial exponents are `mu_k = k - s + 1/2`.
//!
//! With `x = cos theta` the polynomial `P_k` solves
//! `(1 - x^2) P'' - 2 (1 - s) x P' + Lambda_k P = 0`. Its coefficients obey
//! `(j+2)(j+1) a_{j+2} = (j(j-1) - 2j(s-1) - Lambda_k) a_j`.

use serde::{Deserialize, Serialize};
use statrs::function::beta::beta;

use crate::coords::Form;
use crate::coords::{graded_angles, DegenerateWeight, FluxStencil};
use crate::error::{invalid, Error, Result};
use crate::weights::{phi_double_prime, phi_prime, turning_point, CarlemanWeight};

fn check_s(s: f64) -> Result<()> {
    if !(s > 0.0 && s < 1.0) {
        return Err(invalid(format!("s must lie in (0, 1), got {s}")));
    }
    Ok(())
}

/// `lambda_k = -(1-2s)^2/4 - (k - s + 1/2)^2`.
pub fn explicit_eigenvalue(k: usize, s: f64) -> f64 {
    let a = 1.0 - 2.0 * s;
    let m = k as f64 - s + 0.5;
    -0.25 * a * a - m * m
}

/// `Lambda_k = k (k + 1 - 2s)`.
pub fn sturm_liouville_eigenvalue(k: usize, s: f64) -> f64 {
    let k = k as f64;
    k * (k + 1.0 - 2.0 * s)
}

/// `mu_k = k - s + 1/2`.
pub fn radial_exponent(k: usize, s: f64) -> f64 {
    k as f64 - s + 0.5
}

/// `lambda = -Lambda - (1-2s)^2/2`.
pub fn lambda_from_sturm_liouville(big_lambda: f64, s: f64) -> f64 {
    -big_lambda - 0.5 * (1.0 - 2.0 * s).powi(2)
}

/// `int_{-1}^{1} (1 - x^2)^{-mu} x^m dx`.
fn moment(m: usize, mu: f64) -> f64 {
    if m % 2 == 1 {
        0.0
    } else {
        beta((m as f64 + 1.0) / 2.0, 1.0 - mu)
    }
}

/// Coefficients `a_0..a_k` of `P_k(x) = sum a_j x^j`.
///
/// Normalised so that `int_{-1}^{1} (1-x^2)^{-mu} P_k^2 dx = 1` (equivalently
/// `int_0^pi sin^{1-2mu} P_k(cos)^2 = 1`) with a positive leading coefficient.
pub fn legendre_coeffs(k: usize, mu: f64) -> Result<Vec<f64>> {
    if !(mu > 0.0 && mu < 1.0) {
        return Err(invalid(format!("mu must lie in (0, 1), got {mu}")));
    }
    let kf = k as f64;
    let c = kf * kf - 2.0 * kf * mu + kf;
    let mut a = vec![0.0; k + 3];
    a[k % 2] = 1.0;
    let mut j = k % 2;
    while j + 2 < a.len() {
        let jf = j as f64;
        let factor = -jf * (jf - 1.0) + 2.0 * jf * (mu - 1.0) + c;
        a[j + 2] = -factor * a[j] / ((jf + 2.0) * (jf + 1.0));
        j += 2;
    }
    let tail = a[k + 1].abs().max(a[k + 2].abs());
    let scale = a.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    if tail > 1e-12 * scale {
        return Err(Error::InconsistentTruncation { k, residual: tail / scale });
    }
    a.truncate(k + 1);

    let mut norm2 = 0.0;
    for (i, ai) in a.iter().enumerate() {
        for (j, aj) in a.iter().enumerate() {
            norm2 += ai * aj * moment(i + j, mu);
        }
    }
    let sign = a[k].signum();
    let scale = sign / norm2.sqrt();
    Ok(a.into_iter().map(|v| v * scale).collect())
}

fn horner(coeffs: &[f64], x: f64) -> f64 {
    coeffs.iter().rev().fold(0.0, |acc, c| acc * x + c)
}

fn horner_derivative(coeffs: &[f64], x: f64) -> f64 {
    coeffs
        .iter()
        .enumerate()
        .skip(1)
        .rev()
        .fold(0.0, |acc, (j, c)| acc * x + j as f64 * c)
}

/// Index, eigenvalues and normalised eigenfunction of the spherical problem.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EigenPair {
    pub k: usize,
    pub s: f64,
    /// `lambda_k` in the conjugated convention.
    pub lambda_paper: f64,
    /// `Lambda_k` in the Sturm–Liouville convention.
    pub lambda_sturm_liouville: f64,
    pub mu: f64,
    pub coeffs: Vec<f64>,
}

impl EigenPair {
    pub fn new(k: usize, s: f64) -> Result<Self> {
        check_s(s)?;
        Ok(Self {
            k,
            s,
            lambda_paper: explicit_eigenvalue(k, s),
            lambda_sturm_liouville: sturm_liouville_eigenvalue(k, s),
            mu: radial_exponent(k, s),
            coeffs: legendre_coeffs(k, s)?,
        })
    }

    /// `P_k(x)`.
    pub fn polynomial(&self, x: f64) -> f64 {
        horner(&self.coeffs, x)
    }

    pub fn polynomial_derivative(&self, x: f64) -> f64 {
        horner_derivative(&self.coeffs, x)
    }

    /// `P_k(cos theta)` for the `u` and `w` forms, and
    /// `sin^{(1-2s)/2}(theta) P_k(cos theta)` for the `v` form.
    pub fn eval(&self, theta: f64, form: Form) -> f64 {
        let p = self.polynomial(theta.cos());
        match form {
            Form::U | Form::W => p,
            Form::V => theta.sin().max(0.0).powf(0.5 - self.s) * p,
        }
    }

    /// `sin^{1-2s}(theta) d_theta P_k(cos theta)`.
    pub fn weighted_flux(&self, theta: f64) -> f64 {
        let sn = theta.sin();
        -sn.max(0.0).powf(2.0 - 2.0 * self.s) * self.polynomial_derivative(theta.cos())
    }

    /// `|y|^k P_k(y1 / |y|)`, a homogeneous polynomial in `y1` and `y2^2`.
    pub fn homogeneous(&self, y1: f64, y2: f64) -> f64 {
        // r^k P(y1/r) = sum a_j y1^j r^{k-j}; k - j is even for nonzero a_j.
        let r2 = y1 * y1 + y2 * y2;
        self.coeffs
            .iter()
            .enumerate()
            .filter(|(_, a)| **a != 0.0)
            .map(|(j, a)| a * y1.powi(j as i32) * r2.powi(((self.k - j) / 2) as i32))
            .sum()
    }
}

/// Number of eigenvalues of the symmetric tridiagonal matrix below `x`
/// (Sturm count via the `LDL^T` pivots).
fn sturm_count(diag: &[f64], off: &[f64], x: f64) -> usize {
    let mut count = 0;
    let mut q = diag[0] - x;
    if q < 0.0 {
        count += 1;
    }
    for i in 1..diag.len() {
        let prev = if q == 0.0 { f64::EPSILON * (off[i - 1].abs() + 1.0) } else { q };
        q = diag[i] - x - off[i - 1] * off[i - 1] / prev;
        if q < 0.0 {
            count += 1;
        }
    }
    count
}

/// The `count` smallest eigenvalues of a symmetric tridiagonal matrix, by
/// bisection on the Sturm count.
pub fn tridiagonal_lowest_eigenvalues(diag: &[f64], off: &[f64], count: usize) -> Result<Vec<f64>> {
    let n = diag.len();
    if off.len() + 1 != n || count == 0 || count > n {
        return Err(Error::EigenSolver("inconsistent tridiagonal dimensions".into()));
    }
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for i in 0..n {
        let r = if i > 0 { off[i - 1].abs() } else { 0.0 } + if i + 1 < n { off[i].abs() } else { 0.0 };
        lo = lo.min(diag[i] - r);
        hi = hi.max(diag[i] + r);
    }
    if !(lo.is_finite() && hi.is_finite()) {
        return Err(Error::EigenSolver("non-finite matrix entries".into()));
    }
    let span = (hi - lo).max(f64::MIN_POSITIVE);
    (0..count)
        .map(|k| {
            let (mut a, mut b) = (lo - 1e-12 * span, hi + 1e-12 * span);
            for _ in 0..200 {
                let mid = 0.5 * (a + b);
                if b - a <= 4.0 * f64::EPSILON * mid.abs().max(1e-300) || mid <= a || mid >= b {
                    break;
                }
                if sturm_count(diag, off, mid) > k {
                    b = mid;
                } else {
                    a = mid;
                }
            }
            let v = 0.5 * (a + b);
            if v.is_finite() {
                Ok(v)
            } else {
                Err(Error::EigenSolver(format!("bisection failed for eigenvalue {k}")))
            }
        })
        .collect()
}

/// Eigenvalues `Lambda_0..Lambda_{k_max}` of the discretised weighted
/// Sturm–Liouville problem on `intervals` graded cells of `[0, pi]`.
///
/// Stiffness uses harmonic face coefficients `1 / int_cell sin^{2s-1}`, the
/// mass is the exact `sin^{1-2s}` integral over each control volume, and the
/// pencil is symmetrised as `M^{-1/2} A M^{-1/2}`.
pub fn sturm_liouville_spectrum(s: f64, k_max: usize, intervals: usize) -> Result<Vec<f64>> {
    sturm_liouville_spectrum_graded(s, k_max, intervals, SPECTRUM_GRADING)
}

/// Grading exponent of the eigensolver mesh.
pub const SPECTRUM_GRADING: f64 = 1.0;

/// [`sturm_liouville_spectrum`] on a mesh graded with exponent `gamma`.
pub fn sturm_liouville_spectrum_graded(s: f64, k_max: usize, intervals: usize, gamma: f64) -> Result<Vec<f64>> {
    check_s(s)?;
    if intervals < 4 * (k_max + 2) {
        return Err(invalid("too few intervals for the requested number of eigenvalues"));
    }
    if !(1.0..=3.0).contains(&gamma) {
        return Err(invalid(format!("grading exponent must lie in [1, 3], got {gamma}")));
    }
    let theta = graded_angles(intervals, gamma);
    let stencil = FluxStencil::new(&theta, DegenerateWeight::Sine(1.0 - 2.0 * s));
    let a: Vec<f64> = stencil.cell_inverse_mass().iter().map(|m| 1.0 / m).collect();
    let mass = stencil.cv_mass();
    let n = theta.len();
    let mut diag = vec![0.0; n];
    for (c, ac) in a.iter().enumerate() {
        diag[c] += ac;
        diag[c + 1] += ac;
    }
    let inv_sqrt: Vec<f64> = mass.iter().map(|m| m.sqrt().recip()).collect();
    for j in 0..n {
        diag[j] *= inv_sqrt[j] * inv_sqrt[j];
    }
    let off: Vec<f64> = (0..n - 1).map(|c| -a[c] * inv_sqrt[c] * inv_sqrt[c + 1]).collect();
    tridiagonal_lowest_eigenvalues(&diag, &off, k_max + 1)
}

/// `min_k |x - mu_k|`.
pub fn dist_to_spectrum(x: f64, s: f64) -> f64 {
    let mu0 = radial_exponent(0, s);
    if x <= mu0 {
        return mu0 - x;
    }
    let k = (x - mu0).round();
    (x - (mu0 + k)).abs()
}

/// Parametrix kernel of `e^{tau phi} (d_t^2 - mu^2) e^{-tau phi}`.
///
/// ```text
/// K(t, s) = e^{tau(phi(t) - phi(s))} * { -e^{-mu |t - s|} / (2 mu)   t > T
///                                      {  sinh(mu (t - s)) / mu      T > t > s
///                                      {  0                          otherwise
/// ```
///
/// with `T` the turning point of `mu`. Both nonzero branches are fundamental
/// solutions, so the kernel reproduces a unit delta away from `T`.
pub fn parametrix_kernel(mu: f64, tau: f64, t: f64, s_var: f64) -> Result<f64> {
    let turn = turning_point(mu, tau)?;
    let w = CarlemanWeight::new(tau)?;
    Ok(kernel_with_turn(&w, mu, turn, t, s_var))
}

fn kernel_with_turn(w: &CarlemanWeight, mu: f64, turn: f64, t: f64, s_var: f64) -> f64 {
    let branch = if t > turn {
        -(-mu * (t - s_var).abs()).exp() / (2.0 * mu)
    } else if t > s_var {
        (mu * (t - s_var)).sinh() / mu
    } else {
        return 0.0;
    };
    (w.value(t) - w.value(s_var)).exp() * branch
}

/// Largest `tau |K(t,s)| e^{dist(tau phi'(t), -mu) |t - s|}` over a tensor
/// grid of `(t, s)` points.
pub fn kernel_bound_constant(mu: f64, tau: f64, ts: &[f64]) -> Result<f64> {
    let turn = turning_point(mu, tau)?;
    let w = CarlemanWeight::new(tau)?;
    let mut worst: f64 = 0.0;
    for &t in ts {
        let dist = (w.first(t) + mu).abs();
        for &s_var in ts {
            let k = kernel_with_turn(&w, mu, turn, t, s_var);
            let scaled = tau * k.abs() * (dist * (t - s_var).abs()).exp();
            if scaled.is_finite() {
                worst = worst.max(scaled);
            }
        }
    }
    Ok(worst)
}

/// `sum_i (L K)(t_i, s0) g(t_i) h` over `[s0 - half_width, s0 + half_width]`,
/// where `L = d_t^2 + phi'^2 - mu^2 - 2 phi' d_t - phi''` is applied with
/// central differences of step `h`. Equals `g(s0)` up to `O(h)` when the
/// window avoids the turning point.
pub fn kernel_delta_pairing(
    mu: f64,
    tau: f64,
    s0: f64,
    h: f64,
    half_width: f64,
    g: impl Fn(f64) -> f64,
) -> Result<f64> {
    let turn = turning_point(mu, tau)?;
    if (turn - s0).abs() <= half_width + 2.0 * h {
        return Err(Error::OutOfRegime(format!(
            "window around {s0} contains the turning point {turn}"
        )));
    }
    let w = CarlemanWeight::new(tau)?;
    let m = (half_width / h).round() as i64;
    let k = |t: f64| kernel_with_turn(&w, mu, turn, t, s0);
    let mut sum = 0.0;
    for i in -m..=m {
        let t = s0 + i as f64 * h;
        let (km, k0, kp) = (k(t - h), k(t), k(t + h));
        let d1 = (kp - km) / (2.0 * h);
        let d2 = (kp - 2.0 * k0 + km) / (h * h);
        let p1 = tau * phi_prime(t);
        let lk = d2 + (p1 * p1 - mu * mu) * k0 - 2.0 * p1 * d1 - tau * phi_double_prime(t) * k0;
        let weight = if i.abs() == m { 0.5 } else { 1.0 };
        sum += weight * h * lk * g(t);
    }
    Ok(sum)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn closed_forms() {
        for k in 0..8 {
            assert_abs_diff_eq!(explicit_eigenvalue(k, 0.5), -((k * k) as f64), epsilon = 1e-14);
            for s in [0.2, 0.5, 0.9] {
                assert_abs_diff_eq!(
                    lambda_from_sturm_liouville(sturm_liouville_eigenvalue(k, s), s),
                    explicit_eigenvalue(k, s),
                    epsilon = 1e-12
                );
                assert_abs_diff_eq!(radial_exponent(k + 1, s) - radial_exponent(k, s), 1.0, epsilon = 1e-14);
            }
        }
        assert_abs_diff_eq!(explicit_eigenvalue(0, 0.25), -0.125, epsilon = 1e-15);
    }

    #[test]
    fn low_degree_polynomials() {
        let mu = 0.3;
        let p0 = legendre_coeffs(0, mu).unwrap();
        assert_eq!(p0.len(), 1);
        let p1 = legendre_coeffs(1, mu).unwrap();
        assert_eq!(p1[0], 0.0);
        assert!(p1[1] > 0.0);
        let p2 = legendre_coeffs(2, mu).unwrap();
        assert_abs_diff_eq!(p2[2] / p2[0], 2.0 * mu - 3.0, epsilon = 1e-13);
        assert_eq!(p2[1], 0.0);
        assert!(legendre_coeffs(2, 1.0).is_err());
    }

    #[test]
    fn sturm_count_on_diagonal() {
        let d = [1.0, 2.0, 3.0];
        let e = [0.0, 0.0];
        let v = tridiagonal_lowest_eigenvalues(&d, &e, 3).unwrap();
        for (a, b) in v.iter().zip(d) {
            assert_abs_diff_eq!(*a, b, epsilon = 1e-12);
        }
        // [[2,-1],[-1,2]] has eigenvalues 1, 3
        let v = tridiagonal_lowest_eigenvalues(&[2.0, 2.0], &[-1.0], 2).unwrap();
        assert_abs_diff_eq!(v[0], 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(v[1], 3.0, epsilon = 1e-12);
    }

    #[test]
    fn half_order_spectrum_is_neumann() {
        let v = sturm_liouville_spectrum(0.5, 4, 400).unwrap();
        assert!(v[0].abs() < 1e-10);
        for (k, l) in v.iter().enumerate().skip(1) {
            let exact = (k * k) as f64;
            assert!((l - exact).abs() / exact < 1e-3, "{k}: {l}");
        }
    }

    #[test]
    fn distances() {
        assert_abs_diff_eq!(dist_to_spectrum(0.0, 0.3), 0.2, epsilon = 1e-14);
        assert_abs_diff_eq!(dist_to_spectrum(radial_exponent(3, 0.4), 0.4), 0.0, epsilon = 1e-14);
        assert_abs_diff_eq!(dist_to_spectrum(radial_exponent(2, 0.4) + 0.5, 0.4), 0.5, epsilon = 1e-14);
    }

    #[test]
    fn kernel_branches() {
        let (mu, tau) = (3.0, 3.0);
        // T = 0
        assert_abs_diff_eq!(parametrix_kernel(mu, tau, 1.0, 1.0).unwrap(), -1.0 / (2.0 * mu), epsilon = 1e-14);
        assert_eq!(parametrix_kernel(mu, tau, -2.0, -1.0).unwrap(), 0.0);
        assert!(parametrix_kernel(mu, tau, -1.0, -2.0).unwrap() > 0.0);
    }

    #[test]
    fn kernel_reproduces_delta() {
        let (mu, tau) = (4.0, 4.2);
        let turn = turning_point(mu, tau).unwrap();
        for s0 in [turn + 1.5, turn - 1.5] {
            let v = kernel_delta_pairing(mu, tau, s0, 1e-4, 0.5, |_| 1.0).unwrap();
            assert!((v - 1.0).abs() < 1e-2, "{s0}: {v}");
        }
    }
}
