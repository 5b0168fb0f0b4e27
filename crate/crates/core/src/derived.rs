//! Closed-form families and transformations: screw-motion surfaces,
//! parallel and conformal-Gauss-map surfaces, Schwarz reflection and
//! minimal vertical graphs.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::cgrid::{
    d_dt, dz_field, holomorphy_residual_with, path_integrate, ConformalGrid, FieldValue, GridField, Quadrature,
    Stencil,
};
use crate::error::{Error, Result};
use crate::gaussmaps::{weierstrass_candidates_with, GaussMapField};
use crate::lorentz::{minkowski_dot, CVecL3, H2Point, VecL3, VecL4};
use crate::surface::{abresch_rosenberg, SurfaceGrid};

/// Parameters of the screw-motion family
/// h = √(1+y²) cosh(s+s₀) + y t + c.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SaEarpParams {
    pub y: f64,
    #[serde(default)]
    pub s0: f64,
    #[serde(default)]
    pub c: f64,
    /// Branch of N₂, +1 or −1.
    #[serde(default = "plus_one")]
    pub sign: i8,
}

fn plus_one() -> i8 {
    1
}

impl SaEarpParams {
    pub fn new(y: f64, s0: f64, c: f64, sign: i8) -> Result<Self> {
        let p = Self { y, s0, c, sign };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.y.is_finite() && self.s0.is_finite() && self.c.is_finite()) {
            return Err(Error::Domain(format!("non-finite screw-motion parameters {self:?}")));
        }
        if self.sign != 1 && self.sign != -1 {
            return Err(Error::Domain(format!("branch sign must be 1 or -1, got {}", self.sign)));
        }
        Ok(())
    }

    /// x(s) = √(1+y²) cosh(s+s₀).
    pub fn x(&self, s: f64) -> f64 {
        (1.0 + self.y * self.y).sqrt() * (s + self.s0).cosh()
    }

    pub fn height(&self, s: f64, t: f64) -> f64 {
        self.x(s) + self.y * t + self.c
    }

    /// Vertical projection. N₂ = sign·√(1+y²) sinh(s+s₀), the smooth branch
    /// of ±√(x² − y² − 1).
    pub fn projection(&self, s: f64, t: f64) -> VecL3 {
        let (x, y) = (self.x(s), self.y);
        let n2 = f64::from(self.sign) * (1.0 + y * y).sqrt() * (s + self.s0).sinh();
        VecL3::new(x * t.cosh() + y * t.sinh(), x * t.sinh() + y * t.cosh(), n2)
    }
}

pub fn sa_earp(params: SaEarpParams, grid: &ConformalGrid) -> Result<SurfaceGrid> {
    params.validate()?;
    grid.validate()?;
    let g = *grid;
    SurfaceGrid::from_parts(
        GridField::from_fn(g, |s, t| params.projection(s, t)),
        GridField::from_fn(g, |s, t| params.height(s, t)),
        Some(GridField::from_fn(g, |s, _| 1.0 / params.x(s))),
        Some(GridField::from_fn(g, |s, _| params.x(s).powi(2))),
        None,
    )
}

/// Smallest |Q| accepted by [`parallel_surface`].
pub const PARALLEL_MIN_Q: f64 = 1e-8;

/// ψ♯ = −ψ + (2/u)(G,1), with u♯ = u and λ♯ = 16|Q|²/(λu⁴).
pub fn parallel_surface(s: &SurfaceGrid, g: &GaussMapField) -> Result<SurfaceGrid> {
    let grid = *s.grid();
    if g.grid() != &grid {
        return Err(Error::Format("surface and Gauss map live on different grids".into()));
    }
    let q = abresch_rosenberg(s);
    for (k, v) in q.values().iter().enumerate() {
        if !s.mask[k] && v.norm() <= PARALLEL_MIN_Q {
            return Err(Error::VanishingQ { node: grid.node_of(k), value: v.norm() });
        }
    }
    let n = GridField::from_nodes(grid, |i, j| -s.n.at(i, j) + g.at(i, j) * (2.0 / s.u.at(i, j)));
    let h = GridField::from_nodes(grid, |i, j| -s.h.at(i, j) + 2.0 / s.u.at(i, j));
    let lambda = GridField::from_nodes(grid, |i, j| {
        let (l, u) = (s.lambda.at(i, j), s.u.at(i, j));
        16.0 * q.at(i, j).norm_sqr() / (l * u.powi(4))
    });
    SurfaceGrid::from_parts(n, h, Some(s.u.clone()), Some(lambda), Some(s.mask.clone()))
}

/// Relative bound on |Q₀|/μ for a Gauss map to count as conformal.
pub const CONFORMAL_TOL: f64 = 1e-6;

/// ψ = (−a, 0) − 2⟨a,G⟩(G,1) for a conformal G.
pub fn conformal_surface(g: &GaussMapField, a: &H2Point) -> Result<SurfaceGrid> {
    let grid = *g.grid();
    let cand = weierstrass_candidates_with(g, Stencil::Sixth)?;
    for (k, (q, m)) in cand.q0.values().iter().zip(cand.mu.values()).enumerate() {
        if !(*m > 0.0) {
            return Err(Error::Regularity { node: grid.node_of(k), value: *m });
        }
        if q.norm() > CONFORMAL_TOL * m {
            return Err(Error::Rejected(format!(
                "Gauss map is not conformal at node {:?}: |Q0| = {:e}, mu = {:e}",
                grid.node_of(k),
                q.norm(),
                m
            )));
        }
    }
    let a = a.vec();
    let gz = g.dz(Stencil::Sixth);
    let n = g.field().map(|gv| -a + gv * (-2.0 * minkowski_dot(&a, &gv)));
    let h = g.field().map(|gv| -2.0 * minkowski_dot(&a, &gv));
    // τ = τ₀/2, h_z = −2⟨a, G_z⟩, u = √(τ/(τ + 2|h_z|²)), λ = 2τ + 4|h_z|²
    let tau = cand.tau0_plus.map(|t| t / 2.0);
    let hz2 = gz.map(|d| (d.dot_real(&a) * 2.0).norm_sqr());
    let u = tau.zip_map(&hz2, |t, k| (t / (t + 2.0 * k)).sqrt());
    let lambda = tau.zip_map(&hz2, |t, k| 2.0 * t + 4.0 * k);
    SurfaceGrid::from_parts(n, h, Some(u), Some(lambda), None)
}

/// Reflection of H²×ℝ across the vertical plane x₂ = 0.
fn sigma3(v: VecL3) -> VecL3 {
    VecL3::new(v.x0, v.x1, -v.x2)
}

fn sigma3c(v: CVecL3) -> CVecL3 {
    let c = v.c;
    CVecL3::new([c[0], c[1], -c[2]])
}

/// Tolerances for the axis hypotheses of [`reflect_extend`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ReflectOptions {
    /// Bound on the x₂ component on the axis.
    pub tol_value: f64,
    /// Bound on the t-derivatives that must vanish on the axis.
    pub tol_derivative: f64,
}

impl Default for ReflectOptions {
    fn default() -> Self {
        Self { tol_value: 1e-8, tol_derivative: 1e-5 }
    }
}

/// Extended field with its matching residuals on the axis t = 0.
#[derive(Debug, Clone)]
pub struct Reflected<T> {
    pub field: T,
    /// Jump of the values across the axis.
    pub c0_residual: f64,
    /// Largest difference of one-sided t-derivatives across the axis.
    pub c1_residual: f64,
}

/// Fields that extend across t = 0 by reflection in x₂ = 0.
pub trait Reflectable: Sized {
    fn reflect_extend(&self, opts: &ReflectOptions) -> Result<Reflected<Self>>;
}

pub fn reflect_extend<T: Reflectable>(field: &T, opts: &ReflectOptions) -> Result<Reflected<T>> {
    field.reflect_extend(opts)
}

fn symmetric_grid(g: &ConformalGrid) -> Result<ConformalGrid> {
    if g.t_min.abs() > 1e-12 * g.t_max.abs().max(1.0) {
        return Err(Error::InvalidGrid(format!("reflection needs t_min = 0, got {}", g.t_min)));
    }
    ConformalGrid::new(g.s_min, g.s_max, -g.t_max, g.t_max, g.n_s, 2 * g.n_t - 1)
}

/// Maps half-grid values to the symmetric grid; `mirror` acts on the lower half.
fn extend_values<T: FieldValue>(half: &GridField<T>, full: ConformalGrid, mirror: impl Fn(T) -> T) -> GridField<T> {
    let m = half.grid().n_t - 1;
    GridField::from_nodes(full, |i, j| if j >= m { half.at(i, j - m) } else { mirror(half.at(i, m - j)) })
}

/// max over axis nodes of |∂⁺_t f − ∂⁻_t f| with one-sided second-order
/// differences on each side.
fn c1_jump<T: FieldValue>(full: &GridField<T>) -> f64 {
    let g = full.grid();
    let m = (g.n_t - 1) / 2;
    let h = g.ht();
    (0..g.n_s)
        .map(|i| {
            let up = (full.at(i, m + 1) * 4.0 - full.at(i, m) * 3.0 - full.at(i, m + 2)) * (0.5 / h);
            let down = (full.at(i, m) * 3.0 - full.at(i, m - 1) * 4.0 + full.at(i, m - 2)) * (0.5 / h);
            (up - down).magnitude()
        })
        .fold(0.0, f64::max)
}

fn axis_failures(n_s: usize, bad: impl Fn(usize) -> bool) -> Vec<usize> {
    (0..n_s).filter(|&i| bad(i)).collect()
}

impl Reflectable for GaussMapField {
    /// Hypotheses: G₂ = 0 and ∂_t G₀ = ∂_t G₁ = 0 on the axis.
    fn reflect_extend(&self, opts: &ReflectOptions) -> Result<Reflected<Self>> {
        let half = *self.grid();
        let full = symmetric_grid(&half)?;
        let off = axis_failures(half.n_s, |i| self.at(i, 0).x2.abs() > opts.tol_value);
        if !off.is_empty() {
            return Err(Error::AxisHypothesis { nodes: off, reason: "G2 does not vanish on the axis".into() });
        }
        let tang = axis_failures(half.n_s, |i| {
            let d = d_dt(self.field(), i, 0, Stencil::Sixth);
            d.x0.abs().max(d.x1.abs()) > opts.tol_derivative
        });
        if !tang.is_empty() {
            return Err(Error::AxisHypothesis {
                nodes: tang,
                reason: "normal derivative has a component along the axis geodesic".into(),
            });
        }
        let g = extend_values(self.field(), full, sigma3);
        let dz = self.analytic_dz().map(|d| extend_values(d, full, |v| sigma3c(v.conj())));
        let c0 = (0..half.n_s).map(|i| 2.0 * self.at(i, 0).x2.abs()).fold(0.0, f64::max);
        let c1 = c1_jump(&g);
        Ok(Reflected { field: GaussMapField::renormalized(g, dz)?, c0_residual: c0, c1_residual: c1 })
    }
}

impl Reflectable for SurfaceGrid {
    /// Hypotheses: ψ₂ = 0 on the axis, ∂_t ψ has only an x₂ component there,
    /// and η is tangent to the plane x₂ = 0.
    fn reflect_extend(&self, opts: &ReflectOptions) -> Result<Reflected<Self>> {
        let half = *self.grid();
        let full = symmetric_grid(&half)?;
        let off = axis_failures(half.n_s, |i| self.n.at(i, 0).x2.abs() > opts.tol_value);
        if !off.is_empty() {
            return Err(Error::AxisHypothesis { nodes: off, reason: "psi2 does not vanish on the axis".into() });
        }
        let psi = self.psi();
        let tang = axis_failures(half.n_s, |i| {
            let d = d_dt(&psi, i, 0, Stencil::Sixth);
            d.x0.abs().max(d.x1.abs()).max(d.x3.abs()) > opts.tol_derivative
        });
        if !tang.is_empty() {
            return Err(Error::AxisHypothesis { nodes: tang, reason: "psi_t is not normal to the plane".into() });
        }
        let tilt = axis_failures(half.n_s, |i| self.eta.at(i, 0).x2.abs() > opts.tol_derivative);
        if !tilt.is_empty() {
            return Err(Error::AxisHypothesis { nodes: tilt, reason: "surface does not meet the plane orthogonally".into() });
        }
        let n = extend_values(&self.n, full, sigma3);
        let h = extend_values(&self.h, full, |v| v);
        let u = extend_values(&self.u, full, |v| v);
        let lambda = extend_values(&self.lambda, full, |v| v);
        let m = half.n_t - 1;
        let mask = full
            .nodes()
            .map(|(i, j)| self.mask[half.idx(i, if j >= m { j - m } else { m - j })])
            .collect();
        let c0 = (0..half.n_s).map(|i| 2.0 * self.n.at(i, 0).x2.abs()).fold(0.0, f64::max);
        let c1 = c1_jump(&n.zip_map(&h, VecL4::from_parts));
        let field = SurfaceGrid::from_parts(n, h, Some(u), Some(lambda), Some(mask))?;
        Ok(Reflected { field, c0_residual: c0, c1_residual: c1 })
    }
}

/// The canonical 1-form ω = h_z dz of a minimal graph.
#[derive(Debug, Clone, PartialEq)]
pub struct CanonicalOneForm {
    pub omega_z: GridField<Complex64>,
}

impl CanonicalOneForm {
    pub fn new(omega_z: GridField<Complex64>) -> Self {
        Self { omega_z }
    }

    pub fn constant(grid: ConformalGrid, w: Complex64) -> Self {
        Self::new(GridField::constant(grid, w))
    }

    pub fn holomorphy_residual(&self) -> f64 {
        holomorphy_residual_with(&self.omega_z, Stencil::Sixth, 1)
    }
}

/// Tolerances for [`minimal_graph`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MinimalOptions {
    /// Admissibility bound relative to 1 + max|ω_z|².
    pub tol_adm: f64,
    /// Smallest accepted 2⟨N_z, N_z̄⟩.
    pub min_mu: f64,
    pub period_tol: f64,
}

impl Default for MinimalOptions {
    fn default() -> Self {
        Self { tol_adm: 1e-6, min_mu: 1e-10, period_tol: 1e-6 }
    }
}

pub fn minimal_graph(n: &GaussMapField, omega: &CanonicalOneForm, h0: f64) -> Result<SurfaceGrid> {
    minimal_graph_with(n, omega, h0, &MinimalOptions::default())
}

/// ψ = (N, 2 Re∫ω) for a harmonic N with Hopf differential −ω². The height
/// is anchored at node (0, 0).
pub fn minimal_graph_with(n: &GaussMapField, omega: &CanonicalOneForm, h0: f64, opts: &MinimalOptions) -> Result<SurfaceGrid> {
    let grid = *n.grid();
    if omega.omega_z.grid() != &grid {
        return Err(Error::Format("Gauss map and 1-form live on different grids".into()));
    }
    let nz = n.dz(Stencil::Sixth);
    let w = &omega.omega_z;
    let scale = 1.0 + w.values().iter().map(|v| v.norm_sqr()).fold(0.0, f64::max);
    let mut worst = (0.0f64, (0, 0));
    for (i, j) in grid.nodes() {
        let d = nz.at(i, j);
        let mu = 2.0 * d.dot(&d.conj()).re;
        if !(mu > opts.min_mu) {
            return Err(Error::Regularity { node: (i, j), value: mu });
        }
        let defect = (d.dot(&d) + w.at(i, j) * w.at(i, j)).norm();
        if defect > worst.0 {
            worst = (defect, (i, j));
        }
    }
    if worst.0 > opts.tol_adm * scale {
        return Err(Error::Rejected(format!(
            "Hopf differential of N differs from -omega^2 by {:e} at node {:?}",
            worst.0, worst.1
        )));
    }
    let integral = path_integrate(w, Quadrature::Fourth);
    if integral.period_residual > opts.period_tol {
        return Err(Error::Rejected(format!("1-form has period residual {:e}", integral.period_residual)));
    }
    let h = crate::cgrid::anchor(&integral.values, (0, 0), h0);
    // λ = 2⟨N_z, N_z̄⟩ + 2|h_z|², u² = 1 − 4|h_z|²/λ
    let lambda = GridField::from_nodes(grid, |i, j| {
        let d = nz.at(i, j);
        2.0 * d.dot(&d.conj()).re + 2.0 * w.at(i, j).norm_sqr()
    });
    let u = lambda.zip_map(w, |l, hz| (1.0 - 4.0 * hz.norm_sqr() / l).max(0.0).sqrt());
    SurfaceGrid::from_parts(n.field().clone(), h, Some(u), Some(lambda), None)
}

/// λ predicted from the candidate metric factor τ₀ of N:
/// (τ₀ + 4|h_z|²)² / (4τ₀).
pub fn minimal_lambda_identity(n: &GaussMapField, omega: &CanonicalOneForm) -> Result<GridField<f64>> {
    let cand = weierstrass_candidates_with(n, Stencil::Sixth)?;
    Ok(cand.tau0_plus.zip_map(&omega.omega_z, |t, w| (t + 4.0 * w.norm_sqr()).powi(2) / (4.0 * t)))
}

/// h_z of a surface from sixth-order differences.
pub fn height_derivative(s: &SurfaceGrid) -> GridField<Complex64> {
    dz_field(&s.h, Stencil::Sixth)
}
