//! One-dimensional conservative stencils for `(rho u')'` with a degenerate
//! weight `rho`.
//!
//! On every cell the flux `F = rho u'` is modelled as `beta + gamma P` where
//! `P' = rho`. Integrating `u' = F / rho` over a cell gives
//! `u_{c+1} - u_c = m0_c (beta + gamma q_c)` with `m0_c = int_c rho^{-1}` and
//! `q_c` the `rho^{-1}`-weighted mean of `P`, so two neighbouring cells fix the
//! local flux line. The resulting stencil is exact whenever the flux lies in
//! `span{1, P}`.

use std::f64::consts::PI;
use std::sync::OnceLock;

use crate::quadrature::{power_moment, sine_moment, sine_primitive, GaussJacobi};

#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) enum DegenerateWeight {
    /// `rho(y) = y^p` on `[0, H]`.
    Power(f64),
    /// `rho(theta) = sin(theta)^p` on `[0, pi]`.
    Sine(f64),
}

fn gl8() -> &'static GaussJacobi {
    static RULE: OnceLock<GaussJacobi> = OnceLock::new();
    RULE.get_or_init(|| GaussJacobi::legendre(8))
}

impl DegenerateWeight {
    /// `P(x) = int_0^x rho`.
    pub(crate) fn primitive(&self, x: f64) -> f64 {
        match *self {
            Self::Power(p) => x.powf(1.0 + p) / (1.0 + p),
            Self::Sine(p) => sine_primitive(p, x),
        }
    }

    /// `int_a^b rho`.
    pub(crate) fn mass(&self, a: f64, b: f64) -> f64 {
        match *self {
            Self::Power(p) => power_moment(p, a, b),
            Self::Sine(p) => sine_moment(p, a, b),
        }
    }

    /// `int_a^b rho^{-1}`.
    pub(crate) fn inverse_mass(&self, a: f64, b: f64) -> f64 {
        match *self {
            Self::Power(p) => power_moment(-p, a, b),
            Self::Sine(p) => sine_moment(-p, a, b),
        }
    }

    /// `int_a^b P / rho`.
    fn primitive_moment(&self, a: f64, b: f64) -> f64 {
        match *self {
            Self::Power(p) => (b * b - a * a) / (2.0 * (1.0 + p)),
            Self::Sine(p) => {
                let half = 0.5 * PI;
                // P(theta) sin^{-p}(theta) = theta * smooth near 0; the right half
                // is reflected using P(pi - theta) = P(pi) - P(theta).
                let left = |a: f64, b: f64| {
                    gl8().integrate_interval(a, b, |x| sine_primitive(p, x) * x.sin().powf(-p))
                };
                let total = sine_primitive(p, PI);
                let right = |a: f64, b: f64| total * sine_moment(-p, a, b) - left(PI - b, PI - a);
                if b <= half {
                    left(a, b)
                } else if a >= half {
                    right(a, b)
                } else {
                    left(a, half) + right(half, b)
                }
            }
        }
    }
}

/// Precomputed cell and control-volume moments on a node set.
///
/// Control volumes are bounded by cell midpoints.
#[derive(Debug, Clone)]
pub(crate) struct FluxStencil {
    nodes: Vec<f64>,
    m0: Vec<f64>,
    q: Vec<f64>,
    p_face: Vec<f64>,
    p_node: Vec<f64>,
    cv_len: Vec<f64>,
    cv_mass: Vec<f64>,
}

/// Boundary flux estimates at the two ends of a column.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct EndFluxes {
    /// Fit from the two innermost cells.
    pub inner: f64,
    /// Fit from the next pair of cells, extrapolated to the end.
    pub outer: f64,
}

impl FluxStencil {
    pub(crate) fn new(nodes: &[f64], weight: DegenerateWeight) -> Self {
        let n = nodes.len();
        assert!(n >= 4, "flux stencils need at least three cells");
        let cells = n - 1;
        let mut m0 = Vec::with_capacity(cells);
        let mut q = Vec::with_capacity(cells);
        let mut p_face = Vec::with_capacity(cells);
        for c in 0..cells {
            let (a, b) = (nodes[c], nodes[c + 1]);
            let inv = weight.inverse_mass(a, b);
            m0.push(inv);
            q.push(weight.primitive_moment(a, b) / inv);
            p_face.push(weight.primitive(0.5 * (a + b)));
        }
        let mut cv_len = Vec::with_capacity(n);
        let mut cv_mass = Vec::with_capacity(n);
        for j in 0..n {
            let lo = if j == 0 { nodes[0] } else { 0.5 * (nodes[j - 1] + nodes[j]) };
            let hi = if j == n - 1 { nodes[n - 1] } else { 0.5 * (nodes[j] + nodes[j + 1]) };
            cv_len.push(hi - lo);
            cv_mass.push(weight.mass(lo, hi));
        }
        Self {
            nodes: nodes.to_vec(),
            m0,
            q,
            p_face,
            p_node: nodes.iter().map(|&x| weight.primitive(x)).collect(),
            cv_len,
            cv_mass,
        }
    }

    pub(crate) fn len(&self) -> usize {
        self.nodes.len()
    }

    pub(crate) fn cell_inverse_mass(&self) -> &[f64] {
        &self.m0
    }

    /// Largest `|u_{c+1} - u_c| / m0_c` over the cells.
    pub(crate) fn max_cell_flux(&self, u: &[f64]) -> f64 {
        self.cell_gradients(u).iter().fold(0.0, |m, g| m.max(g.abs()))
    }

    pub(crate) fn cv_mass(&self) -> &[f64] {
        &self.cv_mass
    }

    /// Flux line through cells `c` and `c + 1`, evaluated where `P = target`.
    fn fit(&self, g: &[f64], c: usize, target: f64) -> f64 {
        let (q0, q1) = (self.q[c], self.q[c + 1]);
        g[c] + (g[c + 1] - g[c]) * (target - q0) / (q1 - q0)
    }

    fn cell_gradients(&self, u: &[f64]) -> Vec<f64> {
        u.windows(2).zip(&self.m0).map(|(w, m)| (w[1] - w[0]) / m).collect()
    }

    /// Fluxes at the cell midpoints.
    pub(crate) fn face_fluxes(&self, u: &[f64]) -> Vec<f64> {
        let g = self.cell_gradients(u);
        let cells = g.len();
        (0..cells)
            .map(|c| {
                let target = self.p_face[c];
                let mut sum = 0.0;
                let mut count = 0.0;
                if c >= 1 {
                    sum += self.fit(&g, c - 1, target);
                    count += 1.0;
                }
                if c + 1 < cells {
                    sum += self.fit(&g, c, target);
                    count += 1.0;
                }
                sum / count
            })
            .collect()
    }

    /// Flux limits at the first and last node.
    pub(crate) fn end_fluxes(&self, u: &[f64]) -> (EndFluxes, EndFluxes) {
        let g = self.cell_gradients(u);
        let cells = g.len();
        let (p_left, p_right) = (self.p_node[0], self.p_node[cells]);
        let left = EndFluxes {
            inner: self.fit(&g, 0, p_left),
            outer: self.fit(&g, 1, p_left),
        };
        let right = EndFluxes {
            inner: self.fit(&g, cells - 2, p_right),
            outer: self.fit(&g, cells - 3, p_right),
        };
        (left, right)
    }

    /// Flux at every node from the line through the two adjacent cells; the
    /// end nodes use the innermost pair.
    pub(crate) fn node_fluxes(&self, u: &[f64]) -> Vec<f64> {
        let g = self.cell_gradients(u);
        let cells = g.len();
        (0..=cells)
            .map(|j| self.fit(&g, j.saturating_sub(1).min(cells - 2), self.p_node[j]))
            .collect()
    }

    /// Control-volume average of `(rho u')'` at interior nodes; the two end
    /// entries are zero.
    pub(crate) fn divergence(&self, u: &[f64]) -> Vec<f64> {
        let faces = self.face_fluxes(u);
        let n = self.len();
        let mut out = vec![0.0; n];
        for j in 1..n - 1 {
            out[j] = (faces[j] - faces[j - 1]) / self.cv_len[j];
        }
        out
    }

    /// `rho`-average over each control volume.
    pub(crate) fn mean_weight(&self, j: usize) -> f64 {
        self.cv_mass[j] / self.cv_len[j]
    }
}
