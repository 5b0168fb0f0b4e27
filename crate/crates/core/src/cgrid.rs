//! Uniform grids in the conformal parameter z = s + i t, fields sampled on
//! them, Wirtinger finite differences, interpolation and path integration.
//!
//! Nodes are indexed `(i, j)` with `i` along s and `j` along t; storage is
//! row-major with rows of constant t, so the flat index is `j * n_s + i`.

use std::ops::{Add, Mul, Sub};

use num_complex::Complex64;
use rayon::prelude::*;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Node, Result};
use crate::lorentz::{CVecL3, CVecL4, VecL3, VecL4};

const I: Complex64 = Complex64::new(0.0, 1.0);

/// Rectangular discretization of a domain of the z-plane.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConformalGrid {
    pub s_min: f64,
    pub s_max: f64,
    pub t_min: f64,
    pub t_max: f64,
    pub n_s: usize,
    pub n_t: usize,
}

impl ConformalGrid {
    pub fn new(s_min: f64, s_max: f64, t_min: f64, t_max: f64, n_s: usize, n_t: usize) -> Result<Self> {
        let g = Self { s_min, s_max, t_min, t_max, n_s, n_t };
        g.validate()?;
        Ok(g)
    }

    /// Square grid `[-r, r]²` with `n` nodes per side.
    pub fn square(r: f64, n: usize) -> Result<Self> {
        Self::new(-r, r, -r, r, n, n)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_s < 5 || self.n_t < 5 {
            return Err(Error::InvalidGrid(format!(
                "need at least 5 nodes per axis, got {}x{}",
                self.n_s, self.n_t
            )));
        }
        let finite = [self.s_min, self.s_max, self.t_min, self.t_max]
            .iter()
            .all(|x| x.is_finite());
        if !finite || !(self.s_max > self.s_min) || !(self.t_max > self.t_min) {
            return Err(Error::InvalidGrid(format!(
                "degenerate rectangle [{}, {}] x [{}, {}]",
                self.s_min, self.s_max, self.t_min, self.t_max
            )));
        }
        Ok(())
    }

    pub fn hs(&self) -> f64 {
        (self.s_max - self.s_min) / (self.n_s - 1) as f64
    }

    pub fn ht(&self) -> f64 {
        (self.t_max - self.t_min) / (self.n_t - 1) as f64
    }

    pub fn h_max(&self) -> f64 {
        self.hs().max(self.ht())
    }

    pub fn s(&self, i: usize) -> f64 {
        if i + 1 == self.n_s {
            self.s_max
        } else {
            self.s_min + i as f64 * self.hs()
        }
    }

    pub fn t(&self, j: usize) -> f64 {
        if j + 1 == self.n_t {
            self.t_max
        } else {
            self.t_min + j as f64 * self.ht()
        }
    }

    pub fn z(&self, i: usize, j: usize) -> Complex64 {
        Complex64::new(self.s(i), self.t(j))
    }

    pub fn len(&self) -> usize {
        self.n_s * self.n_t
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn idx(&self, i: usize, j: usize) -> usize {
        j * self.n_s + i
    }

    pub fn node_of(&self, k: usize) -> Node {
        (k % self.n_s, k / self.n_s)
    }

    /// Whether the node is at least `layers` nodes away from every edge.
    pub fn is_interior(&self, i: usize, j: usize, layers: usize) -> bool {
        i >= layers && j >= layers && i + layers < self.n_s && j + layers < self.n_t
    }

    pub fn nodes(&self) -> impl Iterator<Item = Node> + '_ {
        (0..self.n_t).flat_map(move |j| (0..self.n_s).map(move |i| (i, j)))
    }

    pub fn interior_nodes(&self, layers: usize) -> impl Iterator<Item = Node> + '_ {
        self.nodes().filter(move |&(i, j)| self.is_interior(i, j, layers))
    }

    pub fn contains(&self, s: f64, t: f64) -> bool {
        s >= self.s_min && s <= self.s_max && t >= self.t_min && t <= self.t_max
    }

    pub fn check_node(&self, node: Node) -> Result<()> {
        if node.0 < self.n_s && node.1 < self.n_t {
            Ok(())
        } else {
            Err(Error::Domain(format!(
                "node {node:?} outside a {}x{} grid",
                self.n_s, self.n_t
            )))
        }
    }

    /// Node closest to `(s, t)`.
    pub fn nearest_node(&self, s: f64, t: f64) -> Result<Node> {
        if !self.contains(s, t) {
            return Err(Error::Domain(format!("({s}, {t}) outside the grid rectangle")));
        }
        let i = ((s - self.s_min) / self.hs()).round() as usize;
        let j = ((t - self.t_min) / self.ht()).round() as usize;
        Ok((i.min(self.n_s - 1), j.min(self.n_t - 1)))
    }

    /// Same rectangle with a different resolution.
    pub fn with_resolution(&self, n_s: usize, n_t: usize) -> Result<Self> {
        Self::new(self.s_min, self.s_max, self.t_min, self.t_max, n_s, n_t)
    }
}

/// Values that can live on a grid and be differentiated.
pub trait FieldValue:
    Copy + Send + Sync + Add<Output = Self> + Sub<Output = Self> + Mul<f64, Output = Self> + 'static
{
    /// Type of the Wirtinger derivatives.
    type Cx: FieldValue;

    fn zero() -> Self;

    /// `((ds − i dt)/2, (ds + i dt)/2)`.
    fn wirtinger(ds: Self, dt: Self) -> (Self::Cx, Self::Cx);

    fn magnitude(&self) -> f64;
}

impl FieldValue for f64 {
    type Cx = Complex64;
    fn zero() -> Self {
        0.0
    }
    fn wirtinger(ds: f64, dt: f64) -> (Complex64, Complex64) {
        (Complex64::new(ds, -dt) * 0.5, Complex64::new(ds, dt) * 0.5)
    }
    fn magnitude(&self) -> f64 {
        self.abs()
    }
}

impl FieldValue for Complex64 {
    type Cx = Complex64;
    fn zero() -> Self {
        Complex64::new(0.0, 0.0)
    }
    fn wirtinger(ds: Self, dt: Self) -> (Self, Self) {
        ((ds - I * dt) * 0.5, (ds + I * dt) * 0.5)
    }
    fn magnitude(&self) -> f64 {
        self.norm()
    }
}

macro_rules! vector_field_value {
    ($real:ty, $cx:ty) => {
        impl FieldValue for $real {
            type Cx = $cx;
            fn zero() -> Self {
                <$real>::zero()
            }
            fn wirtinger(ds: Self, dt: Self) -> ($cx, $cx) {
                (
                    <$cx>::from_parts(ds * 0.5, dt * -0.5),
                    <$cx>::from_parts(ds * 0.5, dt * 0.5),
                )
            }
            fn magnitude(&self) -> f64 {
                self.max_abs()
            }
        }

        impl FieldValue for $cx {
            type Cx = $cx;
            fn zero() -> Self {
                <$cx>::zero()
            }
            fn wirtinger(ds: Self, dt: Self) -> (Self, Self) {
                ((ds - dt * I) * 0.5, (ds + dt * I) * 0.5)
            }
            fn magnitude(&self) -> f64 {
                self.max_abs()
            }
        }
    };
}

vector_field_value!(VecL3, CVecL3);
vector_field_value!(VecL4, CVecL4);

/// A field sampled at every node of a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct GridField<T> {
    grid: ConformalGrid,
    values: Vec<T>,
}

impl<T: FieldValue> GridField<T> {
    pub fn new(grid: ConformalGrid, values: Vec<T>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::Format(format!(
                "field has {} values, grid needs {}",
                values.len(),
                grid.len()
            )));
        }
        Ok(Self { grid, values })
    }

    pub fn constant(grid: ConformalGrid, v: T) -> Self {
        Self { grid, values: vec![v; grid.len()] }
    }

    /// Evaluates `f(s, t)` at every node.
    pub fn from_fn(grid: ConformalGrid, f: impl Fn(f64, f64) -> T) -> Self {
        let values = grid.nodes().map(|(i, j)| f(grid.s(i), grid.t(j))).collect();
        Self { grid, values }
    }

    /// Evaluates `f(i, j)` at every node.
    pub fn from_nodes(grid: ConformalGrid, f: impl Fn(usize, usize) -> T) -> Self {
        let values = grid.nodes().map(|(i, j)| f(i, j)).collect();
        Self { grid, values }
    }

    pub fn try_from_nodes(grid: ConformalGrid, f: impl Fn(usize, usize) -> Result<T>) -> Result<Self> {
        let values = grid.nodes().map(|(i, j)| f(i, j)).collect::<Result<Vec<_>>>()?;
        Ok(Self { grid, values })
    }

    pub fn grid(&self) -> &ConformalGrid {
        &self.grid
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn into_values(self) -> Vec<T> {
        self.values
    }

    pub fn at(&self, i: usize, j: usize) -> T {
        self.values[self.grid.idx(i, j)]
    }

    pub fn at_node(&self, n: Node) -> T {
        self.at(n.0, n.1)
    }

    pub fn set(&mut self, i: usize, j: usize, v: T) {
        let k = self.grid.idx(i, j);
        self.values[k] = v;
    }

    pub fn map<U: FieldValue>(&self, f: impl Fn(T) -> U) -> GridField<U> {
        GridField { grid: self.grid, values: self.values.iter().map(|&v| f(v)).collect() }
    }

    pub fn zip_map<U: FieldValue, V: FieldValue>(&self, other: &GridField<U>, f: impl Fn(T, U) -> V) -> GridField<V> {
        debug_assert_eq!(self.grid, other.grid);
        GridField {
            grid: self.grid,
            values: self.values.iter().zip(&other.values).map(|(&a, &b)| f(a, b)).collect(),
        }
    }

    /// Largest magnitude over the nodes selected by `layers` (0 = all).
    pub fn max_magnitude(&self, layers: usize) -> f64 {
        self.grid
            .interior_nodes(layers)
            .map(|(i, j)| self.at(i, j).magnitude())
            .fold(0.0, f64::max)
    }

    /// Largest pointwise distance to another field on the same grid.
    pub fn max_distance(&self, other: &Self, layers: usize) -> f64 {
        self.grid
            .interior_nodes(layers)
            .map(|(i, j)| (self.at(i, j) - other.at(i, j)).magnitude())
            .fold(0.0, f64::max)
    }

    /// Value at the probe location; midpoints use 4-point Lagrange
    /// interpolation along the grid line (one-sided at the ends).
    pub fn probe(&self, p: Probe) -> T {
        match p {
            Probe::Node(i, j) => self.at(i, j),
            Probe::Mid(Axis::S, i, j) => {
                let n = self.grid.n_s;
                line_midpoint(|k| self.at(k, j), i, n)
            }
            Probe::Mid(Axis::T, i, j) => {
                let n = self.grid.n_t;
                line_midpoint(|k| self.at(i, k), j, n)
            }
        }
    }
}

impl GridField<f64> {
    pub fn min_value(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }
}

/// Derivative stencil family. All use central differences in the interior
/// and one-sided stencils of the same order at the edges.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Stencil {
    #[default]
    Second,
    Fourth,
    Sixth,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    S,
    T,
}

/// A location where propagators evaluate data: a node, or the midpoint of
/// the edge from `(i, j)` to the next node along `axis`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Probe {
    Node(usize, usize),
    Mid(Axis, usize, usize),
}

fn line_midpoint<T: FieldValue>(f: impl Fn(usize) -> T, k: usize, n: usize) -> T {
    debug_assert!(k + 1 < n);
    if k == 0 {
        f(0) * (5.0 / 16.0) + f(1) * (15.0 / 16.0) - f(2) * (5.0 / 16.0) + f(3) * (1.0 / 16.0)
    } else if k + 2 == n {
        f(n - 1) * (5.0 / 16.0) + f(n - 2) * (15.0 / 16.0) - f(n - 3) * (5.0 / 16.0) + f(n - 4) * (1.0 / 16.0)
    } else {
        (f(k) + f(k + 1)) * (9.0 / 16.0) - (f(k - 1) + f(k + 2)) * (1.0 / 16.0)
    }
}

fn line_derivative<T: FieldValue>(f: impl Fn(usize) -> T, k: usize, n: usize, h: f64, stencil: Stencil) -> T {
    match stencil {
        Stencil::Second => {
            if k == 0 {
                (f(1) * 4.0 - f(0) * 3.0 - f(2)) * (0.5 / h)
            } else if k + 1 == n {
                (f(n - 1) * 3.0 - f(n - 2) * 4.0 + f(n - 3)) * (0.5 / h)
            } else {
                (f(k + 1) - f(k - 1)) * (0.5 / h)
            }
        }
        Stencil::Fourth => {
            let c = 1.0 / (12.0 * h);
            if k == 0 {
                (f(1) * 48.0 + f(3) * 16.0 - f(0) * 25.0 - f(2) * 36.0 - f(4) * 3.0) * c
            } else if k == 1 {
                (f(2) * 18.0 + f(4) - f(0) * 3.0 - f(1) * 10.0 - f(3) * 6.0) * c
            } else if k + 1 == n {
                (f(n - 1) * 25.0 + f(n - 3) * 36.0 + f(n - 5) * 3.0 - f(n - 2) * 48.0 - f(n - 4) * 16.0) * c
            } else if k + 2 == n {
                (f(n - 1) * 3.0 + f(n - 2) * 10.0 + f(n - 4) * 6.0 - f(n - 3) * 18.0 - f(n - 5)) * c
            } else {
                (f(k - 2) + f(k + 1) * 8.0 - f(k - 1) * 8.0 - f(k + 2)) * c
            }
        }
        Stencil::Sixth if n < 7 => line_derivative(f, k, n, h, Stencil::Fourth),
        Stencil::Sixth => {
            let c = 1.0 / (60.0 * h);
            let dot = |w: &[f64; 7], at: &dyn Fn(usize) -> T| {
                w.iter().enumerate().fold(T::zero(), |acc, (m, &wm)| acc + at(m) * wm)
            };
            if k < 3 {
                dot(&SIXTH_EDGE[k], &|m| f(m)) * c
            } else if k + 3 >= n {
                dot(&SIXTH_EDGE[n - 1 - k], &|m| f(n - 1 - m)) * (-c)
            } else {
                dot(&SIXTH_CENTRAL, &|m| f(k + m - 3)) * c
            }
        }
    }
}

const SIXTH_CENTRAL: [f64; 7] = [-1.0, 9.0, -45.0, 0.0, 45.0, -9.0, 1.0];
const SIXTH_EDGE: [[f64; 7]; 3] = [
    [-147.0, 360.0, -450.0, 400.0, -225.0, 72.0, -10.0],
    [-10.0, -77.0, 150.0, -100.0, 50.0, -15.0, 2.0],
    [2.0, -24.0, -35.0, 80.0, -30.0, 8.0, -1.0],
];

/// ∂f/∂s at a node.
pub fn d_ds<T: FieldValue>(f: &GridField<T>, i: usize, j: usize, stencil: Stencil) -> T {
    let g = f.grid();
    line_derivative(|k| f.at(k, j), i, g.n_s, g.hs(), stencil)
}

/// ∂f/∂t at a node.
pub fn d_dt<T: FieldValue>(f: &GridField<T>, i: usize, j: usize, stencil: Stencil) -> T {
    let g = f.grid();
    line_derivative(|k| f.at(i, k), j, g.n_t, g.ht(), stencil)
}

/// Discrete `(f_z, f_zbar)` at a node with second-order stencils.
pub fn wirtinger<T: FieldValue>(f: &GridField<T>, i: usize, j: usize) -> (T::Cx, T::Cx) {
    wirtinger_with(f, i, j, Stencil::Second)
}

pub fn wirtinger_with<T: FieldValue>(f: &GridField<T>, i: usize, j: usize, stencil: Stencil) -> (T::Cx, T::Cx) {
    T::wirtinger(d_ds(f, i, j, stencil), d_dt(f, i, j, stencil))
}

/// Both Wirtinger derivative fields.
pub fn wirtinger_fields<T: FieldValue>(f: &GridField<T>, stencil: Stencil) -> (GridField<T::Cx>, GridField<T::Cx>) {
    let g = *f.grid();
    let pairs: Vec<(T::Cx, T::Cx)> = (0..g.len())
        .into_par_iter()
        .map(|k| {
            let (i, j) = g.node_of(k);
            wirtinger_with(f, i, j, stencil)
        })
        .collect();
    let (dz, dzb): (Vec<_>, Vec<_>) = pairs.into_iter().unzip();
    (GridField { grid: g, values: dz }, GridField { grid: g, values: dzb })
}

pub fn dz_field<T: FieldValue>(f: &GridField<T>, stencil: Stencil) -> GridField<T::Cx> {
    wirtinger_fields(f, stencil).0
}

pub fn dzbar_field<T: FieldValue>(f: &GridField<T>, stencil: Stencil) -> GridField<T::Cx> {
    wirtinger_fields(f, stencil).1
}

/// Five-point Laplacian at an interior node.
pub fn laplacian5<T: FieldValue>(f: &GridField<T>, i: usize, j: usize) -> T {
    let g = f.grid();
    let (hs2, ht2) = (g.hs() * g.hs(), g.ht() * g.ht());
    let c = f.at(i, j) * 2.0;
    (f.at(i + 1, j) + f.at(i - 1, j) - c) * (1.0 / hs2) + (f.at(i, j + 1) + f.at(i, j - 1) - c) * (1.0 / ht2)
}

/// max |f_zbar| over nodes not on the boundary (second-order stencils).
pub fn holomorphy_residual(f: &GridField<Complex64>) -> f64 {
    holomorphy_residual_with(f, Stencil::Second, 1)
}

pub fn holomorphy_residual_with(f: &GridField<Complex64>, stencil: Stencil, layers: usize) -> f64 {
    let g = *f.grid();
    g.interior_nodes(layers)
        .map(|(i, j)| wirtinger_with(f, i, j, stencil).1.norm())
        .fold(0.0, f64::max)
}

/// Bilinear interpolation inside the grid rectangle.
pub fn sample<T: FieldValue>(f: &GridField<T>, s: f64, t: f64) -> Result<T> {
    let g = f.grid();
    if !g.contains(s, t) {
        return Err(Error::Domain(format!("({s}, {t}) outside the grid rectangle")));
    }
    let x = (s - g.s_min) / g.hs();
    let y = (t - g.t_min) / g.ht();
    let i = (x.floor() as usize).min(g.n_s - 2);
    let j = (y.floor() as usize).min(g.n_t - 2);
    let (a, b) = (x - i as f64, y - j as f64);
    Ok(f.at(i, j) * ((1.0 - a) * (1.0 - b))
        + f.at(i + 1, j) * (a * (1.0 - b))
        + f.at(i, j + 1) * ((1.0 - a) * b)
        + f.at(i + 1, j + 1) * (a * b))
}

/// Quadrature used along grid lines by [`path_integrate`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Quadrature {
    /// Composite trapezoid rule.
    #[default]
    Trapezoid,
    /// Cumulative fourth-order rule: cubic through the four nearest nodes
    /// of each cell, one-sided at the ends.
    Fourth,
}

#[derive(Debug, Clone)]
pub struct PathIntegralResult {
    pub values: GridField<f64>,
    /// Largest closed-loop integral over the elementary plaquettes.
    pub period_residual: f64,
}

fn cumulative(g: &[f64], h: f64, rule: Quadrature) -> Vec<f64> {
    let n = g.len();
    let mut out = vec![0.0; n];
    for k in 0..n - 1 {
        let cell = match rule {
            Quadrature::Trapezoid => 0.5 * h * (g[k] + g[k + 1]),
            Quadrature::Fourth => {
                if k == 0 {
                    h / 24.0 * (9.0 * g[0] + 19.0 * g[1] - 5.0 * g[2] + g[3])
                } else if k + 2 == n {
                    h / 24.0 * (9.0 * g[n - 1] + 19.0 * g[n - 2] - 5.0 * g[n - 3] + g[n - 4])
                } else {
                    h / 24.0 * (13.0 * (g[k] + g[k + 1]) - g[k - 1] - g[k + 2])
                }
            }
        };
        out[k + 1] = out[k] + cell;
    }
    out
}

/// Components of the real form 2 Re(ω dz) = 2 Re ω ds − 2 Im ω dt.
fn form_components(omega: &GridField<Complex64>) -> (GridField<f64>, GridField<f64>) {
    (omega.map(|w| 2.0 * w.re), omega.map(|w| -2.0 * w.im))
}

fn plaquette_residual(gs: &GridField<f64>, gt: &GridField<f64>) -> f64 {
    let g = *gs.grid();
    let (hs, ht) = (g.hs(), g.ht());
    let mut worst = 0.0f64;
    for j in 0..g.n_t - 1 {
        for i in 0..g.n_s - 1 {
            let loop_integral = 0.5 * hs * (gs.at(i, j) + gs.at(i + 1, j))
                + 0.5 * ht * (gt.at(i + 1, j) + gt.at(i + 1, j + 1))
                - 0.5 * hs * (gs.at(i, j + 1) + gs.at(i + 1, j + 1))
                - 0.5 * ht * (gt.at(i, j) + gt.at(i, j + 1));
            worst = worst.max(loop_integral.abs());
        }
    }
    worst
}

/// Integrates the exact differential 2 Re(ω_z dz) from node (0,0): first
/// along the row t = t_min, then up every column.
pub fn path_integrate(omega_z: &GridField<Complex64>, rule: Quadrature) -> PathIntegralResult {
    let g = *omega_z.grid();
    let (gs, gt) = form_components(omega_z);
    let row: Vec<f64> = (0..g.n_s).map(|i| gs.at(i, 0)).collect();
    let base = cumulative(&row, g.hs(), rule);
    let mut values = GridField::constant(g, 0.0);
    for i in 0..g.n_s {
        let col: Vec<f64> = (0..g.n_t).map(|j| gt.at(i, j)).collect();
        for (j, v) in cumulative(&col, g.ht(), rule).into_iter().enumerate() {
            values.set(i, j, base[i] + v);
        }
    }
    PathIntegralResult { values, period_residual: plaquette_residual(&gs, &gt) }
}

/// Same integral accumulated along the first column, then along rows.
pub fn path_integrate_column_first(omega_z: &GridField<Complex64>, rule: Quadrature) -> PathIntegralResult {
    let g = *omega_z.grid();
    let (gs, gt) = form_components(omega_z);
    let col: Vec<f64> = (0..g.n_t).map(|j| gt.at(0, j)).collect();
    let base = cumulative(&col, g.ht(), rule);
    let mut values = GridField::constant(g, 0.0);
    for j in 0..g.n_t {
        let row: Vec<f64> = (0..g.n_s).map(|i| gs.at(i, j)).collect();
        for (i, v) in cumulative(&row, g.hs(), rule).into_iter().enumerate() {
            values.set(i, j, base[j] + v);
        }
    }
    PathIntegralResult { values, period_residual: plaquette_residual(&gs, &gt) }
}

/// Shifts a real field so that it takes `value` at `node`.
pub fn anchor(field: &GridField<f64>, node: Node, value: f64) -> GridField<f64> {
    let shift = value - field.at_node(node);
    field.map(|v| v + shift)
}

/// Which family of grid lines is walked first by [`propagate`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PathOrder {
    RowFirst,
    ColumnFirst,
}

fn rk4_step<Y, F>(y: Y, from: Node, axis: Axis, forward: bool, h: f64, rhs: &F) -> Result<Y>
where
    Y: Copy + Add<Output = Y> + Mul<f64, Output = Y>,
    F: Fn(&Y, Probe, Axis) -> Result<Y>,
{
    let (i, j) = from;
    let (to, mid) = match (axis, forward) {
        (Axis::S, true) => ((i + 1, j), Probe::Mid(Axis::S, i, j)),
        (Axis::S, false) => ((i - 1, j), Probe::Mid(Axis::S, i - 1, j)),
        (Axis::T, true) => ((i, j + 1), Probe::Mid(Axis::T, i, j)),
        (Axis::T, false) => ((i, j - 1), Probe::Mid(Axis::T, i, j - 1)),
    };
    let dh = if forward { h } else { -h };
    let k1 = rhs(&y, Probe::Node(i, j), axis)?;
    let k2 = rhs(&(y + k1 * (0.5 * dh)), mid, axis)?;
    let k3 = rhs(&(y + k2 * (0.5 * dh)), mid, axis)?;
    let k4 = rhs(&(y + k3 * dh), Probe::Node(to.0, to.1), axis)?;
    Ok(y + (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (dh / 6.0))
}

/// Walks a grid line from `start` in both directions with classical RK4
/// (step = grid spacing). Returns the states indexed along the line.
fn propagate_line<Y, F>(g: &ConformalGrid, start: Node, y0: Y, axis: Axis, rhs: &F) -> Result<Vec<Y>>
where
    Y: Copy + Add<Output = Y> + Mul<f64, Output = Y>,
    F: Fn(&Y, Probe, Axis) -> Result<Y>,
{
    let (n, k0, h) = match axis {
        Axis::S => (g.n_s, start.0, g.hs()),
        Axis::T => (g.n_t, start.1, g.ht()),
    };
    let node = |k: usize| match axis {
        Axis::S => (k, start.1),
        Axis::T => (start.0, k),
    };
    let mut out = vec![y0; n];
    let mut y = y0;
    for k in k0..n - 1 {
        y = rk4_step(y, node(k), axis, true, h, rhs)?;
        out[k + 1] = y;
    }
    y = y0;
    for k in (1..=k0).rev() {
        y = rk4_step(y, node(k), axis, false, h, rhs)?;
        out[k - 1] = y;
    }
    Ok(out)
}

/// Integrates a first-order system Y_s = F_s(Y), Y_t = F_t(Y) over the grid
/// from `anchor`. `rhs(y, probe, axis)` returns the derivative of `y` along
/// `axis` at `probe`. With [`PathOrder::RowFirst`] the anchor row is walked
/// first and every column is then walked from it (columns in parallel).
pub fn propagate<Y, F>(g: &ConformalGrid, anchor: Node, y0: Y, order: PathOrder, rhs: F) -> Result<Vec<Y>>
where
    Y: Copy + Send + Sync + Add<Output = Y> + Mul<f64, Output = Y>,
    F: Fn(&Y, Probe, Axis) -> Result<Y> + Sync,
{
    g.check_node(anchor)?;
    let (first, second) = match order {
        PathOrder::RowFirst => (Axis::S, Axis::T),
        PathOrder::ColumnFirst => (Axis::T, Axis::S),
    };
    let spine = propagate_line(g, anchor, y0, first, &rhs)?;
    let lines: Vec<Vec<Y>> = spine
        .par_iter()
        .enumerate()
        .map(|(k, &y)| {
            let start = match first {
                Axis::S => (k, anchor.1),
                Axis::T => (anchor.0, k),
            };
            propagate_line(g, start, y, second, &rhs)
        })
        .collect::<Result<_>>()?;
    let mut out = vec![y0; g.len()];
    for (k, line) in lines.into_iter().enumerate() {
        for (m, y) in line.into_iter().enumerate() {
            let (i, j) = match first {
                Axis::S => (k, m),
                Axis::T => (m, k),
            };
            out[g.idx(i, j)] = y;
        }
    }
    Ok(out)
}

/// Element types with a JSON representation in grid files.
pub trait SerialValue: FieldValue {
    const KIND: &'static str;
    type Repr: Serialize + DeserializeOwned;
    fn to_repr(&self) -> Self::Repr;
    fn from_repr(r: Self::Repr) -> Self;
}

impl SerialValue for f64 {
    const KIND: &'static str = "real";
    type Repr = f64;
    fn to_repr(&self) -> f64 {
        *self
    }
    fn from_repr(r: f64) -> Self {
        r
    }
}

impl SerialValue for Complex64 {
    const KIND: &'static str = "complex";
    type Repr = [f64; 2];
    fn to_repr(&self) -> [f64; 2] {
        [self.re, self.im]
    }
    fn from_repr(r: [f64; 2]) -> Self {
        Complex64::new(r[0], r[1])
    }
}

impl SerialValue for VecL3 {
    const KIND: &'static str = "vecl3";
    type Repr = [f64; 3];
    fn to_repr(&self) -> [f64; 3] {
        self.to_array()
    }
    fn from_repr(r: [f64; 3]) -> Self {
        VecL3::from_array(r)
    }
}

impl SerialValue for VecL4 {
    const KIND: &'static str = "vecl4";
    type Repr = [f64; 4];
    fn to_repr(&self) -> [f64; 4] {
        self.to_array()
    }
    fn from_repr(r: [f64; 4]) -> Self {
        VecL4::from_array(r)
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct FieldFile<R> {
    grid: ConformalGrid,
    kind: String,
    values: Vec<R>,
}

impl<T: SerialValue> GridField<T> {
    pub fn to_json_value(&self) -> serde_json::Value {
        let file = FieldFile {
            grid: self.grid,
            kind: T::KIND.to_string(),
            values: self.values.iter().map(T::to_repr).collect(),
        };
        serde_json::to_value(file).expect("grid fields always serialize")
    }

    pub fn to_json(&self) -> String {
        self.to_json_value().to_string()
    }

    pub fn from_json_value(v: serde_json::Value) -> Result<Self> {
        let file: FieldFile<T::Repr> = serde_json::from_value(v)?;
        if file.kind != T::KIND {
            return Err(Error::Format(format!("expected kind {:?}, found {:?}", T::KIND, file.kind)));
        }
        file.grid.validate()?;
        Self::new(file.grid, file.values.into_iter().map(T::from_repr).collect())
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Self::from_json_value(serde_json::from_str(s)?)
    }
}
