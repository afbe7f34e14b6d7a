//! Uniform radial grid with P1 hat functions in the measure `r^(n-1) dr`.
//!
//! The unknowns are the hats attached to nodes `0..N-1`; the hat at the outer
//! node is dropped, which is a homogeneous Dirichlet condition at `r = R`.

use crate::error::{FpError, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RadialMesh {
    n_intervals: usize,
    h: f64,
    dim: usize,
    radius: f64,
}

impl RadialMesh {
    /// Mesh of `[0, 1]` with `n_intervals` cells.
    pub fn new(n_intervals: usize, dim: usize) -> Result<Self> {
        Self::with_radius(n_intervals, dim, 1.0)
    }

    /// Mesh of `[0, radius]`.
    pub fn with_radius(n_intervals: usize, dim: usize, radius: f64) -> Result<Self> {
        if n_intervals < 2 {
            return Err(FpError::InvalidMesh(format!(
                "need at least 2 intervals, got {n_intervals}"
            )));
        }
        if dim < 1 {
            return Err(FpError::InvalidMesh("dimension must be at least 1".into()));
        }
        if !(radius.is_finite() && radius > 0.0) {
            return Err(FpError::InvalidMesh(format!("radius must be positive, got {radius}")));
        }
        Ok(Self {
            n_intervals,
            h: radius / n_intervals as f64,
            dim,
            radius,
        })
    }

    pub fn n_intervals(&self) -> usize {
        self.n_intervals
    }

    pub fn n_nodes(&self) -> usize {
        self.n_intervals + 1
    }

    /// Number of retained hats (nodes `0..N-1`).
    pub fn n_unknowns(&self) -> usize {
        self.n_intervals
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn node(&self, j: usize) -> f64 {
        if j == self.n_intervals {
            self.radius
        } else {
            j as f64 * self.h
        }
    }

    /// All `N + 1` node positions.
    pub fn nodes(&self) -> Vec<f64> {
        (0..self.n_nodes()).map(|j| self.node(j)).collect()
    }

    /// Positions of the unknown nodes.
    pub fn unknown_nodes(&self) -> Vec<f64> {
        (0..self.n_unknowns()).map(|j| self.node(j)).collect()
    }

    pub fn weight(&self, r: f64) -> f64 {
        r.powi(self.dim as i32 - 1)
    }

    pub fn hat(&self, j: usize) -> HatBasis {
        HatBasis { index: j, mesh: *self }
    }

    /// Number of nodes in `[0, r]`.
    pub fn nodes_within(&self, r: f64) -> usize {
        if r < 0.0 {
            return 0;
        }
        let last = (r / self.h * (1.0 + 1e-12)).floor() as usize;
        last.min(self.n_intervals) + 1
    }

    /// Exact weighted integrals over cell `c = [c h, (c + 1) h]`.
    pub(crate) fn cell(&self, c: usize) -> CellIntegrals {
        CellIntegrals::new(c as f64 * self.h, self.h, self.dim - 1)
    }

    /// `∫ r^(n-1) dr` over `[a, b]`.
    pub fn weighted_length(&self, a: f64, b: f64) -> f64 {
        let n = self.dim as i32;
        (b.powi(n) - a.powi(n)) / n as f64
    }
}

/// `fᵀ A g` with `A` the P1 mass matrix in the measure `r^(n-1) dr`.
///
/// Both vectors carry one value per unknown node.
pub fn weighted_inner_product(f: &[f64], g: &[f64], mesh: &RadialMesh) -> Result<f64> {
    let n = mesh.n_unknowns();
    for v in [f, g] {
        if v.len() != n {
            return Err(FpError::DimensionMismatch {
                expected: n,
                found: v.len(),
            });
        }
    }
    Ok(crate::assembly::mass_matrix(mesh).symmetric_form(f, g))
}

/// Hat function attached to one node; the node-0 hat is the half-hat on `[0, h]`.
#[derive(Debug, Clone, Copy)]
pub struct HatBasis {
    index: usize,
    mesh: RadialMesh,
}

impl HatBasis {
    pub fn index(&self) -> usize {
        self.index
    }

    pub fn support(&self) -> (f64, f64) {
        let lo = self.index.saturating_sub(1);
        let hi = (self.index + 1).min(self.mesh.n_intervals);
        (self.mesh.node(lo), self.mesh.node(hi))
    }

    /// Linear on each cell of the support, so nodal values are exactly 0 or 1.
    pub fn eval(&self, r: f64) -> f64 {
        let rj = self.mesh.node(self.index);
        let (lo, hi) = self.support();
        if r < lo || r > hi {
            0.0
        } else if r <= rj {
            if lo == rj {
                1.0
            } else {
                (r - lo) / (rj - lo)
            }
        } else {
            (hi - r) / (hi - rj)
        }
    }
}

/// Closed-form cell integrals of P1 products against `r^m`.
///
/// With `r = a + h t` the weight expands to `sum_k binom(m, k) a^(m-k) h^k t^k`,
/// a sum of non-negative terms, so every integral is evaluated without
/// cancellation.
#[derive(Debug, Clone)]
pub(crate) struct CellIntegrals {
    h: f64,
    coeffs: Vec<f64>,
}

impl CellIntegrals {
    pub(crate) fn new(a: f64, h: f64, m: usize) -> Self {
        let mut coeffs = Vec::with_capacity(m + 1);
        let mut binom = 1.0;
        for k in 0..=m {
            coeffs.push(binom * a.powi((m - k) as i32) * h.powi(k as i32));
            binom = binom * (m - k) as f64 / (k + 1) as f64;
        }
        Self { h, coeffs }
    }

    fn sum(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.h
            * self
                .coeffs
                .iter()
                .enumerate()
                .map(|(k, c)| c * f(k as f64))
                .sum::<f64>()
    }

    /// `∫ χ_left² w`.
    pub(crate) fn mass_ll(&self) -> f64 {
        self.sum(|k| 2.0 / ((k + 1.0) * (k + 2.0) * (k + 3.0)))
    }

    /// `∫ χ_left χ_right w`.
    pub(crate) fn mass_lr(&self) -> f64 {
        self.sum(|k| 1.0 / ((k + 2.0) * (k + 3.0)))
    }

    /// `∫ χ_right² w`.
    pub(crate) fn mass_rr(&self) -> f64 {
        self.sum(|k| 1.0 / (k + 3.0))
    }

    /// `∫ w` over the cell.
    pub(crate) fn weight_integral(&self) -> f64 {
        self.sum(|k| 1.0 / (k + 1.0))
    }

    /// `∫ χ'_i χ'_j w` magnitude: `(1/h²) ∫ w`.
    pub(crate) fn stiffness(&self) -> f64 {
        self.weight_integral() / (self.h * self.h)
    }

    /// `(∫ χ_left w, ∫ χ_right w)` over the sub-interval `t ∈ [ts, te]` of the
    /// reference cell.
    pub(crate) fn partial_hat_integrals(&self, ts: f64, te: f64) -> (f64, f64) {
        // ∫ (1 - t) t^k and ∫ t^(k+1) over [ts, te].
        let p = |e: f64| (te.powf(e) - ts.powf(e)) / e;
        let right = self.sum(|k| p(k + 2.0));
        let full = self.sum(|k| p(k + 1.0));
        (full - right, right)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builds_small_meshes() {
        let m = RadialMesh::new(10, 3).unwrap();
        assert_eq!(m.n_nodes(), 11);
        assert!((m.h() - 0.1).abs() < 1e-16);

        let m = RadialMesh::new(2, 1).unwrap();
        assert_eq!(m.nodes(), vec![0.0, 0.5, 1.0]);

        let m = RadialMesh::new(1000, 3).unwrap();
        assert!((m.h() - 0.001).abs() < 1e-18);
        assert_eq!(m.node(500), 0.5);
        assert_eq!(m.node(1000), 1.0);
    }

    #[test]
    fn rejects_degenerate_meshes() {
        assert!(RadialMesh::new(1, 3).is_err());
        assert!(RadialMesh::new(0, 3).is_err());
        assert!(RadialMesh::new(10, 0).is_err());
        assert!(RadialMesh::with_radius(10, 3, 0.0).is_err());
    }

    #[test]
    fn spacing_times_intervals_is_radius() {
        for n in [2, 3, 7, 10, 333, 2000] {
            let m = RadialMesh::new(n, 2).unwrap();
            assert!((m.h() * n as f64 - 1.0).abs() <= f64::EPSILON);
        }
    }

    #[test]
    fn hats_are_kronecker_at_nodes() {
        let m = RadialMesh::new(8, 3).unwrap();
        for j in 0..m.n_unknowns() {
            let hat = m.hat(j);
            for i in 0..m.n_nodes() {
                let expected = if i == j { 1.0 } else { 0.0 };
                assert_eq!(hat.eval(m.node(i)), expected, "chi_{j}(r_{i})");
            }
        }
        assert_eq!(m.hat(0).support(), (0.0, m.h()));
        assert!((m.hat(0).eval(0.5 * m.h()) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn partition_of_unity_on_retained_span() {
        let m = RadialMesh::new(16, 3).unwrap();
        let last = 1.0 - m.h();
        for s in 0..=200 {
            let r = last * s as f64 / 200.0;
            let total: f64 = (0..m.n_unknowns()).map(|j| m.hat(j).eval(r)).sum();
            assert!((total - 1.0).abs() < 1e-14, "sum at {r} = {total}");
        }
    }

    #[test]
    fn cell_integrals_for_constant_weight() {
        let c = CellIntegrals::new(0.3, 0.1, 0);
        assert!((c.mass_ll() - 0.1 / 3.0).abs() < 1e-16);
        assert!((c.mass_rr() - 0.1 / 3.0).abs() < 1e-16);
        assert!((c.mass_lr() - 0.1 / 6.0).abs() < 1e-16);
        assert!((c.stiffness() - 10.0).abs() < 1e-13);
    }

    #[test]
    fn nodes_within_counts_inclusive() {
        let m = RadialMesh::new(2000, 3).unwrap();
        assert_eq!(m.nodes_within(0.005), 11);
        assert_eq!(m.nodes_within(0.0), 1);
        assert_eq!(m.nodes_within(5.0), 2001);
    }
}
