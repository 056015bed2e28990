// SPDX-License-Identifier: Apache-2.0

//! Finite-dimensional model of `L²([0,1])`.
//!
//! A [`Grid`] fixes quadrature nodes and weights on `[0,1]`; a [`GridFunction`]
//! stores nodal values on a shared grid. Inner products are the weighted sums
//! `Σ_i w_i f(x_i) g(x_i)`, so every operation here is exact linear algebra on
//! the nodal vectors.
//!
//! [`GaussLegendre`] rules are also used for time integrals elsewhere in the
//! crate.

use std::f64::consts::PI;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Spatial quadrature family.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "rule")]
pub enum Rule {
    /// Composite trapezoid on uniform nodes (`panels + 1` nodes).
    Trapezoid,
    /// Composite Gauss–Legendre with `points` nodes per panel.
    GaussLegendre { points: usize },
}

/// A composite quadrature rule on `[0,1]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Quadrature {
    pub rule: Rule,
    pub panels: usize,
}

impl Quadrature {
    /// Composite trapezoid with `panels` uniform subintervals.
    pub fn trapezoid(panels: usize) -> Self {
        Quadrature { rule: Rule::Trapezoid, panels }
    }

    /// Composite Gauss–Legendre with `points` nodes on each of `panels` subintervals.
    pub fn gauss_legendre(panels: usize, points: usize) -> Self {
        Quadrature { rule: Rule::GaussLegendre { points }, panels }
    }

    /// Builds the node/weight table.
    pub fn grid(self) -> Result<Arc<Grid>> {
        Grid::new(self).map(Arc::new)
    }
}

impl Default for Quadrature {
    /// 256 trapezoid panels, i.e. 257 uniform nodes.
    fn default() -> Self {
        Quadrature::trapezoid(256)
    }
}

/// Nodes and weights of a [`Quadrature`] on `[0,1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    quadrature: Quadrature,
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl Grid {
    /// Tabulates the rule. Fails on zero panels or zero points.
    pub fn new(quadrature: Quadrature) -> Result<Self> {
        let panels = quadrature.panels;
        if panels == 0 {
            return Err(Error::input("quadrature needs at least one panel"));
        }
        let h = 1.0 / panels as f64;
        let (nodes, weights) = match quadrature.rule {
            Rule::Trapezoid => {
                let nodes: Vec<f64> = (0..=panels).map(|i| i as f64 * h).collect();
                let mut weights = vec![h; panels + 1];
                weights[0] = 0.5 * h;
                weights[panels] = 0.5 * h;
                (nodes, weights)
            }
            Rule::GaussLegendre { points } => {
                let gl = GaussLegendre::new(points)?;
                let mut nodes = Vec::with_capacity(panels * points);
                let mut weights = Vec::with_capacity(panels * points);
                for p in 0..panels {
                    let a = p as f64 * h;
                    for (x, w) in gl.nodes.iter().zip(&gl.weights) {
                        nodes.push(a + 0.5 * h * (x + 1.0));
                        weights.push(0.5 * h * w);
                    }
                }
                (nodes, weights)
            }
        };
        Ok(Grid { quadrature, nodes, weights })
    }

    /// The default 257-node trapezoid grid.
    pub fn standard() -> Arc<Grid> {
        Quadrature::default().grid().expect("default quadrature is valid")
    }

    pub fn quadrature(&self) -> Quadrature {
        self.quadrature
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

    /// Quadrature of nodal values.
    pub fn integrate(&self, values: &[f64]) -> f64 {
        self.weights.iter().zip(values).map(|(w, v)| w * v).sum()
    }
}

/// A vector of `L²([0,1])` represented by its values at the nodes of a grid.
///
/// Values are always finite; grids are shared through `Arc`.
#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction {
    grid: Arc<Grid>,
    values: Vec<f64>,
}

impl GridFunction {
    /// Wraps nodal values. Fails on a length mismatch or non-finite entries.
    pub fn new(grid: Arc<Grid>, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::Dimension { left: grid.len(), right: values.len() });
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::input(format!("grid value at node {i} is not finite")));
        }
        Ok(GridFunction { grid, values })
    }

    /// Samples `f` at the grid nodes.
    pub fn from_fn(grid: &Arc<Grid>, f: impl Fn(f64) -> f64) -> Result<Self> {
        let values = grid.nodes().iter().map(|&x| f(x)).collect();
        GridFunction::new(grid.clone(), values)
    }

    /// The zero vector.
    pub fn zeros(grid: &Arc<Grid>) -> Self {
        GridFunction { grid: grid.clone(), values: vec![0.0; grid.len()] }
    }

    /// The constant function `c`.
    pub fn constant(grid: &Arc<Grid>, c: f64) -> Self {
        GridFunction { grid: grid.clone(), values: vec![c; grid.len()] }
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Fails unless `self` and `other` live on the same discretization.
    pub fn check_compatible(&self, other: &GridFunction) -> Result<()> {
        if Arc::ptr_eq(&self.grid, &other.grid) || *self.grid == *other.grid {
            Ok(())
        } else {
            Err(Error::Dimension { left: self.len(), right: other.len() })
        }
    }

    /// Nodewise map.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> Result<Self> {
        GridFunction::new(self.grid.clone(), self.values.iter().map(|&v| f(v)).collect())
    }

    /// `c · self`.
    pub fn scale(&self, c: f64) -> Result<Self> {
        self.map(|v| c * v)
    }

    /// Nodewise combination with another function on the same grid.
    pub fn zip_with(&self, other: &GridFunction, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        self.check_compatible(other)?;
        let values = self.values.iter().zip(&other.values).map(|(&a, &b)| f(a, b)).collect();
        GridFunction::new(self.grid.clone(), values)
    }

    /// `self + other`.
    pub fn add(&self, other: &GridFunction) -> Result<Self> {
        self.zip_with(other, |a, b| a + b)
    }

    /// `self - other`.
    pub fn sub(&self, other: &GridFunction) -> Result<Self> {
        self.zip_with(other, |a, b| a - b)
    }

    /// Nodewise product `self(x) · other(x)`.
    pub fn mul(&self, other: &GridFunction) -> Result<Self> {
        self.zip_with(other, |a, b| a * b)
    }

    /// `‖self‖ = sqrt(⟨self, self⟩)`.
    pub fn norm(&self) -> f64 {
        let s: f64 = self.grid.weights.iter().zip(&self.values).map(|(w, v)| w * v * v).sum();
        s.sqrt()
    }

    /// Largest nodal magnitude.
    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

/// Quadrature inner product `⟨f, g⟩ ≈ ∫₀¹ f g dx`, exactly symmetric in floating point.
pub fn inner(f: &GridFunction, g: &GridFunction) -> Result<f64> {
    f.check_compatible(g)?;
    Ok(f.grid.weights.iter().zip(f.values.iter().zip(&g.values)).map(|(w, (a, b))| w * (a * b)).sum())
}

/// Composite trapezoid integral of tabulated samples `(t, v)` over
/// `[t_first, t_last]`.
pub fn integrate_time(samples: &[(f64, f64)]) -> Result<f64> {
    if samples.len() < 2 {
        return Err(Error::input("time integration needs at least two samples"));
    }
    let mut total = 0.0;
    for pair in samples.windows(2) {
        let ((t0, v0), (t1, v1)) = (pair[0], pair[1]);
        if !(t1 > t0) {
            return Err(Error::input(format!("sample times must increase strictly ({t0} then {t1})")));
        }
        total += 0.5 * (t1 - t0) * (v0 + v1);
    }
    Ok(total)
}

/// Gauss–Legendre nodes and weights on `[-1, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussLegendre {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussLegendre {
    /// `n`-point rule computed by Newton iteration on the Legendre recurrence.
    pub fn new(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::input("Gauss-Legendre rule needs at least one point"));
        }
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let m = n.div_ceil(2);
        for i in 0..m {
            let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre_with_derivative(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() <= 1e-16 * x.abs().max(1.0) {
                    break;
                }
            }
            let (_, d) = legendre_with_derivative(n, x);
            if d != 0.0 {
                dp = d;
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        if n % 2 == 1 {
            nodes[n / 2] = 0.0;
        }
        Ok(GaussLegendre { nodes, weights })
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

    /// Nodes and weights mapped to `[a, b]`.
    pub fn mapped(&self, a: f64, b: f64) -> impl Iterator<Item = (f64, f64)> + '_ {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        self.nodes.iter().zip(&self.weights).map(move |(x, w)| (mid + half * x, half * w))
    }

    /// `∫_a^b f(t) dt` with one panel.
    pub fn integrate(&self, a: f64, b: f64, f: impl Fn(f64) -> f64) -> f64 {
        self.mapped(a, b).map(|(t, w)| w * f(t)).sum()
    }

    /// `∫_a^b f(t) dt` with `panels` equal panels.
    pub fn integrate_composite(&self, a: f64, b: f64, panels: usize, f: impl Fn(f64) -> f64) -> f64 {
        let panels = panels.max(1);
        let h = (b - a) / panels as f64;
        (0..panels)
            .map(|p| {
                let lo = a + p as f64 * h;
                let hi = if p + 1 == panels { b } else { lo + h };
                self.integrate(lo, hi, &f)
            })
            .sum()
    }
}

/// `(P_n(x), P_n'(x))` by the three-term recurrence.
fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let nf = n as f64;
    let dp = nf * (x * p1 - p0) / (x * x - 1.0);
    (p1, dp)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn standard_grid_has_257_uniform_nodes() {
        let grid = Grid::standard();
        assert_eq!(grid.len(), 257);
        assert_eq!(grid.nodes()[128], 0.5);
        assert_eq!(grid.integrate(&vec![1.0; 257]), 1.0);
    }

    #[test]
    fn gauss_legendre_integrates_polynomials_exactly() {
        for n in 1..=40 {
            let gl = GaussLegendre::new(n).unwrap();
            let degree = 2 * n - 1;
            let exact = if degree % 2 == 0 { 2.0 / (degree as f64 + 1.0) } else { 0.0 };
            let approx = gl.integrate(-1.0, 1.0, |x| x.powi(degree as i32));
            assert!((approx - exact).abs() < 1e-13, "n={n}: {approx} vs {exact}");
            let total: f64 = gl.weights().iter().sum();
            assert!((total - 2.0).abs() < 1e-14);
        }
    }

    #[test]
    fn gauss_legendre_constant_one_on_unit_interval() {
        let grid = Quadrature::gauss_legendre(8, 4).grid().unwrap();
        let total = grid.integrate(&vec![1.0; grid.len()]);
        assert!((total - 1.0).abs() < 1e-14);
    }

    #[test]
    fn composite_gauss_matches_exponential() {
        let gl = GaussLegendre::new(8).unwrap();
        let v = gl.integrate_composite(0.0, 1.0, 4, f64::exp);
        assert_relative_eq!(v, std::f64::consts::E - 1.0, max_relative = 1e-15);
    }

    #[test]
    fn integrate_time_rejects_short_or_unsorted_input() {
        assert!(integrate_time(&[(0.0, 1.0)]).is_err());
        assert!(integrate_time(&[(0.0, 1.0), (0.0, 2.0)]).is_err());
    }

    #[test]
    fn mismatched_grids_are_rejected() {
        let a = GridFunction::zeros(&Quadrature::trapezoid(4).grid().unwrap());
        let b = GridFunction::zeros(&Quadrature::trapezoid(8).grid().unwrap());
        assert_eq!(inner(&a, &b), Err(Error::Dimension { left: 5, right: 9 }));
    }

    #[test]
    fn non_finite_values_are_rejected() {
        let grid = Quadrature::trapezoid(2).grid().unwrap();
        assert!(GridFunction::new(grid, vec![0.0, f64::NAN, 1.0]).is_err());
    }
}
