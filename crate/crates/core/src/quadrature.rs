//! Quadrature rules for integrands carrying the degenerate weight.
//!
//! * [`GaussJacobi`] nodes and weights from the Golub–Welsch eigenproblem.
//! * Closed-form moments of `y^p` and `sin(theta)^p` on subintervals.
//! * [`PolarRule`], a product rule for half-discs and half-annuli that integrates
//!   `F(y) * y2^p` with the weight absorbed exactly.

use std::f64::consts::PI;

use nalgebra::{DMatrix, SymmetricEigen};
use statrs::function::beta::{beta, beta_reg};
use statrs::function::gamma::ln_gamma;

use crate::error::{invalid, Error, Result};

/// Gauss–Jacobi rule on `[-1, 1]` for the weight `(1 - x)^alpha (1 + x)^beta`.
#[derive(Debug, Clone)]
pub struct GaussJacobi {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussJacobi {
    pub fn new(n: usize, alpha: f64, beta: f64) -> Result<Self> {
        if n == 0 {
            return Err(invalid("Gauss-Jacobi rule needs at least one node"));
        }
        if !(alpha > -1.0 && beta > -1.0) {
            return Err(Error::NonIntegrableWeight(alpha.min(beta)));
        }
        let ab = alpha + beta;
        let mut jacobi = DMatrix::<f64>::zeros(n, n);
        for k in 0..n {
            let kf = k as f64;
            let diag = if k == 0 {
                (beta - alpha) / (ab + 2.0)
            } else {
                (beta * beta - alpha * alpha) / ((2.0 * kf + ab) * (2.0 * kf + ab + 2.0))
            };
            jacobi[(k, k)] = diag;
            if k + 1 < n {
                let m = kf + 1.0;
                let off_sq = if k == 0 {
                    4.0 * (1.0 + alpha) * (1.0 + beta) / ((2.0 + ab).powi(2) * (3.0 + ab))
                } else {
                    let d = 2.0 * m + ab;
                    4.0 * m * (m + alpha) * (m + beta) * (m + ab) / (d * d * (d + 1.0) * (d - 1.0))
                };
                let off = off_sq.sqrt();
                jacobi[(k, k + 1)] = off;
                jacobi[(k + 1, k)] = off;
            }
        }
        let log_mu0 = (ab + 1.0) * 2f64.ln() + ln_gamma(alpha + 1.0) + ln_gamma(beta + 1.0)
            - ln_gamma(ab + 2.0);
        let mu0 = log_mu0.exp();
        let eig = SymmetricEigen::new(jacobi);
        let mut pairs: Vec<(f64, f64)> = (0..n)
            .map(|i| {
                let v0 = eig.eigenvectors[(0, i)];
                (eig.eigenvalues[i], mu0 * v0 * v0)
            })
            .collect();
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        let (nodes, weights) = pairs.into_iter().unzip();
        Ok(Self { nodes, weights })
    }

    pub fn legendre(n: usize) -> Self {
        Self::new(n, 0.0, 0.0).expect("Legendre parameters are admissible")
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Integrates `f` against the Jacobi weight on `[-1, 1]`.
    pub fn integrate(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.nodes.iter().zip(&self.weights).map(|(&x, &w)| w * f(x)).sum()
    }

    /// Plain Gauss–Legendre integral of `f` over `[a, b]` (only meaningful for
    /// the Legendre rule).
    pub fn integrate_interval(&self, a: f64, b: f64, f: impl Fn(f64) -> f64) -> f64 {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        half * self.integrate(|x| f(mid + half * x))
    }
}

/// `int_a^b y^p dy` for `0 <= a <= b`, `p > -1`.
pub fn power_moment(p: f64, a: f64, b: f64) -> f64 {
    (b.powf(p + 1.0) - a.powf(p + 1.0)) / (p + 1.0)
}

/// `int_0^x sin(theta)^p dtheta` for `x` in `[0, pi]`, `p > -1`.
///
/// With `u = sin^2(theta/2)` the integral is `2^p B(u; (p+1)/2, (p+1)/2)`.
pub fn sine_primitive(p: f64, x: f64) -> f64 {
    let x = x.clamp(0.0, PI);
    let a = 0.5 * (p + 1.0);
    let total = 2f64.powf(p) * beta(a, a);
    if x <= 0.0 {
        return 0.0;
    }
    if x >= PI {
        return total;
    }
    let half = 0.5 * x;
    // Evaluate on the nearer side of pi/2 to keep the incomplete beta well conditioned.
    if x <= 0.5 * PI {
        let u = half.sin().powi(2);
        total * beta_reg(a, a, u)
    } else {
        let u = half.cos().powi(2);
        total * (1.0 - beta_reg(a, a, u))
    }
}

/// `int_a^b sin(theta)^p dtheta` for `0 <= a <= b <= pi`.
pub fn sine_moment(p: f64, a: f64, b: f64) -> f64 {
    if p == 0.0 {
        return b - a;
    }
    // Differences of primitives lose accuracy for short intervals far from the
    // endpoints; use Gauss–Legendre there, where the integrand is smooth.
    let left = a.min(PI - b);
    if left > 4.0 * (b - a) {
        let gl = gauss_legendre_16();
        return gl.integrate_interval(a, b, |x| x.sin().powf(p));
    }
    if b <= 0.5 * PI {
        sine_primitive(p, b) - sine_primitive(p, a)
    } else if a >= 0.5 * PI {
        sine_primitive(p, PI - a) - sine_primitive(p, PI - b)
    } else {
        let mid = 0.5 * PI;
        (sine_primitive(p, mid) - sine_primitive(p, a))
            + (sine_primitive(p, PI - mid) - sine_primitive(p, PI - b))
    }
}

fn gauss_legendre_16() -> &'static GaussJacobi {
    use std::sync::OnceLock;
    static RULE: OnceLock<GaussJacobi> = OnceLock::new();
    RULE.get_or_init(|| GaussJacobi::legendre(16))
}

/// Region of integration for [`PolarRule`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PolarRegion {
    /// `B_R^+`
    HalfDisc { radius: f64 },
    /// `B_outer^+ \ B_inner^+`
    HalfAnnulus { inner: f64, outer: f64 },
}

/// Product rule for `int_region F(y) y2^p dy` in polar coordinates.
///
/// The angular factor `sin(theta)^p` is absorbed by a Gauss–Jacobi rule with
/// `alpha = beta = p` in the variable `theta = pi (1 + xi) / 2`; the radial
/// factor `r^{1+p}` is absorbed by Gauss–Jacobi on half-discs and integrated
/// explicitly on annuli. The radial interval is split into equal panels.
#[derive(Debug, Clone)]
pub struct PolarRule {
    points: Vec<(f64, f64)>,
    weights: Vec<f64>,
}

impl PolarRule {
    pub fn new(region: PolarRegion, power: f64, n_radial: usize, n_angular: usize, panels: usize) -> Result<Self> {
        if power <= -1.0 {
            return Err(Error::NonIntegrableWeight(power));
        }
        if n_radial == 0 || n_angular == 0 || panels == 0 {
            return Err(invalid("polar rule needs positive node counts"));
        }
        let (r0, r1) = match region {
            PolarRegion::HalfDisc { radius } => (0.0, radius),
            PolarRegion::HalfAnnulus { inner, outer } => (inner, outer),
        };
        if !(r0 >= 0.0 && r1 > r0 && r1.is_finite()) {
            return Err(invalid(format!("invalid polar region {region:?}")));
        }

        // Angular nodes: sin^p(theta) = (theta (pi - theta))^p * g(theta)^p.
        let ang = GaussJacobi::new(n_angular, power, power)?;
        let scale = 0.5 * PI * (0.25 * PI * PI).powf(power);
        let angular: Vec<(f64, f64)> = ang
            .nodes()
            .iter()
            .zip(ang.weights())
            .map(|(&xi, &w)| {
                let theta = 0.5 * PI * (1.0 + xi);
                let g = theta.sin() / (theta * (PI - theta));
                (theta, w * scale * g.powf(power))
            })
            .collect();

        // Radial nodes for int r^{1+p} H(r) dr.
        let mut radial = Vec::with_capacity(n_radial * panels);
        let width = (r1 - r0) / panels as f64;
        let gl = GaussJacobi::legendre(n_radial);
        for panel in 0..panels {
            let a = r0 + width * panel as f64;
            let b = a + width;
            if a == 0.0 {
                let gj = GaussJacobi::new(n_radial, 0.0, 1.0 + power)?;
                let half = 0.5 * b;
                let factor = half.powf(2.0 + power);
                for (&xi, &w) in gj.nodes().iter().zip(gj.weights()) {
                    radial.push((half * (1.0 + xi), w * factor));
                }
            } else {
                let half = 0.5 * (b - a);
                let mid = 0.5 * (a + b);
                for (&xi, &w) in gl.nodes().iter().zip(gl.weights()) {
                    let r = mid + half * xi;
                    radial.push((r, w * half * r.powf(1.0 + power)));
                }
            }
        }

        let mut points = Vec::with_capacity(radial.len() * angular.len());
        let mut weights = Vec::with_capacity(radial.len() * angular.len());
        for &(r, wr) in &radial {
            for &(theta, wt) in &angular {
                points.push((r * theta.cos(), r * theta.sin()));
                weights.push(wr * wt);
            }
        }
        Ok(Self { points, weights })
    }

    /// Sample points `(y1, y2)`.
    pub fn points(&self) -> &[(f64, f64)] {
        &self.points
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn integrate(&self, f: impl Fn(f64, f64) -> f64) -> f64 {
        self.points
            .iter()
            .zip(&self.weights)
            .map(|(&(y1, y2), &w)| w * f(y1, y2))
            .sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn legendre_integrates_polynomials_exactly() {
        let gl = GaussJacobi::legendre(6);
        assert_relative_eq!(gl.integrate(|x| x.powi(10)), 2.0 / 11.0, epsilon = 1e-14);
        assert_relative_eq!(gl.integrate_interval(0.0, 2.0, |x| x * x), 8.0 / 3.0, epsilon = 1e-14);
    }

    #[test]
    fn jacobi_moments() {
        // int (1-x)^a (1+x)^b x^2 dx against a brute-force substitution oracle
        for &(a, b) in &[(-0.5, -0.5), (0.4, -0.3), (0.0, 1.5), (-0.7, 0.2)] {
            let gj = GaussJacobi::new(12, a, b).unwrap();
            let total = gj.integrate(|_| 1.0);
            let exact = 2f64.powf(a + b + 1.0) * beta(a + 1.0, b + 1.0);
            assert_relative_eq!(total, exact, max_relative = 1e-12);
        }
        let cheb = GaussJacobi::new(8, -0.5, -0.5).unwrap();
        assert_relative_eq!(cheb.integrate(|x| x * x), PI / 2.0, max_relative = 1e-13);
    }

    #[test]
    fn sine_moments_match_closed_forms() {
        assert_relative_eq!(sine_moment(1.0, 0.0, PI), 2.0, max_relative = 1e-13);
        assert_relative_eq!(sine_moment(2.0, 0.0, PI), PI / 2.0, max_relative = 1e-13);
        assert_relative_eq!(sine_moment(1.0, 0.3, 2.0), 0.3f64.cos() - 2f64.cos(), max_relative = 1e-12);
        assert_relative_eq!(
            sine_moment(-0.5, 0.0, PI),
            beta(0.25, 0.5),
            max_relative = 1e-12
        );
        let mut acc = 0.0;
        let n = 37;
        for i in 0..n {
            let a = PI * i as f64 / n as f64;
            let b = PI * (i + 1) as f64 / n as f64;
            acc += sine_moment(-0.4, a, b);
        }
        assert_relative_eq!(acc, sine_moment(-0.4, 0.0, PI), max_relative = 1e-12);
    }

    #[test]
    fn half_disc_area_with_weight() {
        for s in [0.2, 0.5, 0.75, 0.9] {
            let p = 1.0 - 2.0 * s;
            let rule = PolarRule::new(PolarRegion::HalfDisc { radius: 1.0 }, p, 24, 24, 1).unwrap();
            let exact = beta(1.0 - s, 0.5) / (3.0 - 2.0 * s);
            assert_relative_eq!(rule.integrate(|_, _| 1.0), exact, max_relative = 1e-12);
        }
        let rule = PolarRule::new(PolarRegion::HalfAnnulus { inner: 1.0, outer: 2.0 }, 0.0, 8, 8, 2).unwrap();
        assert_relative_eq!(rule.integrate(|_, _| 1.0), 1.5 * PI, max_relative = 1e-13);
    }
}
