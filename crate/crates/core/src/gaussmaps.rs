//! Harmonic maps into H², their Hopf differentials, Weierstrass data and
//! the Gauss equation
//!
//! ```text
//! (log τ₀)_{zz̄} = τ₀/8 − 2|Q₀|²/τ₀
//! ```
//!
//! which, for φ = log τ₀, is the semilinear Dirichlet problem
//! Δφ/4 = e^φ/8 − 2|Q₀|² e^{−φ} solved here by damped Newton iteration.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cgrid::{
    dz_field, laplacian5, propagate, wirtinger, wirtinger_with, Axis, ConformalGrid, GridField, PathOrder, Probe,
    Stencil,
};
use crate::error::{Error, Node, Result};
use crate::lorentz::{minkowski_dot, CVecL3, H2Point, VecL3};

const I: Complex64 = Complex64::new(0.0, 1.0);

/// Radicands of the candidate formula above `-RADICAND_CLIP` are clipped to 0.
pub const RADICAND_CLIP: f64 = 1e-8;

/// Candidates at or below this value are inadmissible metric factors.
pub const ADMISSIBLE_MIN: f64 = 1e-12;

/// Samples of a map into H², optionally with its exact z-derivative.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussMapField {
    g: GridField<VecL3>,
    analytic_dz: Option<GridField<CVecL3>>,
}

impl GaussMapField {
    /// Validates every sample against the hyperboloid.
    pub fn new(g: GridField<VecL3>, analytic_dz: Option<GridField<CVecL3>>) -> Result<Self> {
        for v in g.values() {
            H2Point::new(*v)?;
        }
        if let Some(d) = &analytic_dz {
            if d.grid() != g.grid() {
                return Err(Error::Format("derivative field lives on another grid".into()));
            }
        }
        Ok(Self { g, analytic_dz })
    }

    /// Projects numerically computed samples back onto the hyperboloid.
    pub fn renormalized(g: GridField<VecL3>, analytic_dz: Option<GridField<CVecL3>>) -> Result<Self> {
        let g = GridField::try_from_nodes(*g.grid(), |i, j| Ok(H2Point::renormalize(g.at(i, j))?.vec()))?;
        Self::new(g, analytic_dz)
    }

    /// Loads samples allowing a looser tolerance, then renormalizes.
    pub fn from_samples(g: GridField<VecL3>, tol: f64) -> Result<Self> {
        for v in g.values() {
            let norm = minkowski_dot(v, v);
            if (norm + 1.0).abs() > tol || v.x0 <= 0.0 {
                return Err(Error::NotOnHyperboloid { point: v.to_array(), norm });
            }
        }
        Self::renormalized(g, None)
    }

    pub fn grid(&self) -> &ConformalGrid {
        self.g.grid()
    }

    pub fn field(&self) -> &GridField<VecL3> {
        &self.g
    }

    pub fn at(&self, i: usize, j: usize) -> VecL3 {
        self.g.at(i, j)
    }

    pub fn analytic_dz(&self) -> Option<&GridField<CVecL3>> {
        self.analytic_dz.as_ref()
    }

    pub fn without_derivative(&self) -> Self {
        Self { g: self.g.clone(), analytic_dz: None }
    }

    /// G_z: the analytic derivative when present, else finite differences.
    pub fn dz(&self, stencil: Stencil) -> GridField<CVecL3> {
        match &self.analytic_dz {
            Some(d) => d.clone(),
            None => dz_field(&self.g, stencil),
        }
    }
}

/// Closed-form harmonic maps.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "snake_case", deny_unknown_fields)]
pub enum BuiltinMap {
    /// G(s, t) = (cosh t, sinh t, 0), singular everywhere.
    Geodesic,
    /// Lift of w = z from the Poincaré disk.
    DiskIdentity,
    /// Lift of w = e^{iθ}(z − a)/(1 − ā z).
    DiskMoebius { a: [f64; 2], theta: f64 },
}

/// Hyperboloid lift of a disk point and its derivative with respect to w.
fn disk_lift(w: Complex64) -> (VecL3, CVecL3) {
    let r2 = w.norm_sqr();
    let d = 1.0 - r2;
    let g = VecL3::new((1.0 + r2) / d, 2.0 * w.re / d, 2.0 * w.im / d);
    let wb = w.conj();
    let one = Complex64::new(1.0, 0.0);
    let dw = CVecL3::new([2.0 * wb, one + wb * wb, -I * (one - wb * wb)]) * (1.0 / (d * d));
    (g, dw)
}

pub fn builtin_map(map: BuiltinMap, grid: &ConformalGrid) -> Result<GaussMapField> {
    grid.validate()?;
    let (w, dw): (Box<dyn Fn(Complex64) -> Complex64>, Box<dyn Fn(Complex64) -> Complex64>) = match map {
        BuiltinMap::Geodesic => {
            let g = GridField::from_fn(*grid, |_, t| VecL3::new(t.cosh(), t.sinh(), 0.0));
            let dz = GridField::from_fn(*grid, |_, t| {
                CVecL3::from_real(VecL3::new(t.sinh(), t.cosh(), 0.0)) * Complex64::new(0.0, -0.5)
            });
            return GaussMapField::renormalized(g, Some(dz));
        }
        BuiltinMap::DiskIdentity => (Box::new(|z| z), Box::new(|_| Complex64::new(1.0, 0.0))),
        BuiltinMap::DiskMoebius { a, theta } => {
            let a = Complex64::new(a[0], a[1]);
            if !(a.norm() < 1.0) || !theta.is_finite() {
                return Err(Error::Domain(format!("Moebius parameter {a} must lie in the unit disk")));
            }
            let rot = Complex64::from_polar(1.0, theta);
            (
                Box::new(move |z| rot * (z - a) / (1.0 - a.conj() * z)),
                Box::new(move |z| rot * (1.0 - a.norm_sqr()) / (1.0 - a.conj() * z).powi(2)),
            )
        }
    };
    let corners = [
        (grid.s_min, grid.t_min),
        (grid.s_min, grid.t_max),
        (grid.s_max, grid.t_min),
        (grid.s_max, grid.t_max),
    ];
    if corners.iter().any(|&(s, t)| s * s + t * t >= 1.0) {
        return Err(Error::Domain("grid rectangle leaves the unit disk".into()));
    }
    let lifts: Vec<(VecL3, CVecL3)> = grid
        .nodes()
        .map(|(i, j)| {
            let z = grid.z(i, j);
            let (g, gw) = disk_lift(w(z));
            (g, gw * dw(z))
        })
        .collect();
    let (g, dz): (Vec<_>, Vec<_>) = lifts.into_iter().unzip();
    GaussMapField::renormalized(GridField::new(*grid, g)?, Some(GridField::new(*grid, dz)?))
}

/// Hopf differential Q₀ = ⟨G_z, G_z⟩.
#[derive(Debug, Clone, PartialEq)]
pub struct HopfField {
    pub q0: GridField<Complex64>,
}

impl HopfField {
    pub fn new(q0: GridField<Complex64>) -> Self {
        Self { q0 }
    }

    pub fn constant(grid: ConformalGrid, q0: Complex64) -> Self {
        Self { q0: GridField::constant(grid, q0) }
    }

    pub fn grid(&self) -> &ConformalGrid {
        self.q0.grid()
    }
}

/// ⟨G_z, G_z⟩ with second-order stencils when no analytic derivative exists.
pub fn hopf_differential(g: &GaussMapField) -> HopfField {
    hopf_differential_with(g, Stencil::Second)
}

pub fn hopf_differential_with(g: &GaussMapField, stencil: Stencil) -> HopfField {
    HopfField::new(g.dz(stencil).map(|d| d.dot(&d)))
}

/// max |G_{zz̄} + ⟨G_{zz̄}, G⟩ G| over interior nodes.
pub fn harmonicity_residual(g: &GaussMapField) -> f64 {
    let grid = *g.grid();
    grid.interior_nodes(1)
        .map(|(i, j)| {
            let lap = laplacian5(g.field(), i, j) * 0.25;
            let gv = g.at(i, j);
            (lap + gv * minkowski_dot(&lap, &gv)).max_abs()
        })
        .fold(0.0, f64::max)
}

/// The two roots of the metric decomposition for τ₀ at every node.
#[derive(Debug, Clone, PartialEq)]
pub struct WeierstrassCandidates {
    /// μ = 2⟨G_z, G_z̄⟩.
    pub mu: GridField<f64>,
    pub q0: GridField<Complex64>,
    /// 2(μ + √(μ² − 4|Q₀|²)).
    pub tau0_plus: GridField<f64>,
    /// 2(μ − √(μ² − 4|Q₀|²)).
    pub tau0_minus: GridField<f64>,
}

impl WeierstrassCandidates {
    pub fn plus_admissible(&self) -> bool {
        self.tau0_plus.min_value() > ADMISSIBLE_MIN
    }

    pub fn minus_admissible(&self) -> bool {
        self.tau0_minus.min_value() > ADMISSIBLE_MIN
    }

    /// Largest |candidate₊ − candidate₋| over the grid; zero when G is
    /// singular everywhere.
    pub fn max_gap(&self) -> f64 {
        self.tau0_plus.max_distance(&self.tau0_minus, 0)
    }
}

pub fn weierstrass_candidates(g: &GaussMapField) -> Result<WeierstrassCandidates> {
    weierstrass_candidates_with(g, Stencil::Second)
}

pub fn weierstrass_candidates_with(g: &GaussMapField, stencil: Stencil) -> Result<WeierstrassCandidates> {
    let grid = *g.grid();
    let dz = g.dz(stencil);
    let mut mu = Vec::with_capacity(grid.len());
    let mut plus = Vec::with_capacity(grid.len());
    let mut minus = Vec::with_capacity(grid.len());
    let mut q0 = Vec::with_capacity(grid.len());
    for (i, j) in grid.nodes() {
        let d = dz.at(i, j);
        let m = 2.0 * d.dot(&d.conj()).re;
        let q = d.dot(&d);
        let mut rad = m * m - 4.0 * q.norm_sqr();
        if rad < 0.0 {
            if rad < -RADICAND_CLIP * m.abs().max(1.0).powi(2) {
                return Err(Error::MetricCondition { node: (i, j), radicand: rad });
            }
            rad = 0.0;
        }
        let r = rad.sqrt();
        mu.push(m);
        q0.push(q);
        plus.push(2.0 * (m + r));
        minus.push(2.0 * (m - r));
    }
    Ok(WeierstrassCandidates {
        mu: GridField::new(grid, mu)?,
        q0: GridField::new(grid, q0)?,
        tau0_plus: GridField::new(grid, plus)?,
        tau0_minus: GridField::new(grid, minus)?,
    })
}

/// Weierstrass data in the Abresch–Rosenberg normalization: `q` is Q = −Q₀
/// and `tau` is τ with τ₀ = 2τ. `mu` = τ₀/4 + 4|Q|²/τ₀.
#[derive(Debug, Clone, PartialEq)]
pub struct WeierstrassData {
    q: GridField<Complex64>,
    tau: GridField<f64>,
    mu: GridField<f64>,
}

impl WeierstrassData {
    pub fn new(q: GridField<Complex64>, tau: GridField<f64>) -> Result<Self> {
        if q.grid() != tau.grid() {
            return Err(Error::Format("Q and tau live on different grids".into()));
        }
        let grid = *q.grid();
        for (i, j) in grid.nodes() {
            let t = tau.at(i, j);
            if !(t > 0.0) || !t.is_finite() || !q.at(i, j).is_finite() {
                return Err(Error::Data { node: (i, j), reason: format!("tau = {t} must be positive") });
            }
        }
        let mu = q.zip_map(&tau, |q, t| t / 2.0 + 2.0 * q.norm_sqr() / t);
        Ok(Self { q, tau, mu })
    }

    /// Builds data and checks a supplied μ against the stored relation.
    pub fn with_mu(q: GridField<Complex64>, tau: GridField<f64>, mu: &GridField<f64>) -> Result<Self> {
        let w = Self::new(q, tau)?;
        for (i, j) in w.grid().nodes() {
            let (a, b) = (w.mu.at(i, j), mu.at(i, j));
            if (a - b).abs() > 1e-8 * (1.0 + a.abs()) {
                return Err(Error::Data { node: (i, j), reason: format!("mu = {b} but data imply {a}") });
            }
        }
        Ok(w)
    }

    /// From a Hopf differential Q₀ and the factor τ₀.
    pub fn from_hopf(q0: &HopfField, tau0: &GridField<f64>) -> Result<Self> {
        Self::new(q0.q0.map(|q| -q), tau0.map(|t| t / 2.0))
    }

    /// Q = −Q₀ and τ₀ = the chosen candidate of `g`.
    pub fn from_gauss_map(g: &GaussMapField, plus: bool, stencil: Stencil) -> Result<Self> {
        let c = weierstrass_candidates_with(g, stencil)?;
        let tau0 = if plus { c.tau0_plus } else { c.tau0_minus };
        Self::from_hopf(&HopfField::new(c.q0), &tau0)
    }

    pub fn grid(&self) -> &ConformalGrid {
        self.q.grid()
    }

    pub fn q(&self) -> &GridField<Complex64> {
        &self.q
    }

    pub fn tau(&self) -> &GridField<f64> {
        &self.tau
    }

    pub fn mu(&self) -> &GridField<f64> {
        &self.mu
    }

    pub fn tau0(&self) -> GridField<f64> {
        self.tau.map(|t| 2.0 * t)
    }

    pub fn hopf(&self) -> HopfField {
        HopfField::new(self.q.map(|q| -q))
    }

    /// Same data with the height-independent singular set measure
    /// τ² − 4|Q|² at every node.
    pub fn singular_measure(&self) -> GridField<f64> {
        self.q.zip_map(&self.tau, |q, t| t * t - 4.0 * q.norm_sqr())
    }
}

/// Replaces τ₀ by 16|Q|²/τ₀, keeping Q and μ.
pub fn dual_data(w: &WeierstrassData) -> Result<WeierstrassData> {
    let grid = *w.grid();
    for (i, j) in grid.nodes() {
        let q = w.q.at(i, j).norm();
        if q <= 1e-10 {
            return Err(Error::VanishingQ { node: (i, j), value: q });
        }
    }
    let tau = w.q.zip_map(&w.tau, |q, t| 4.0 * q.norm_sqr() / t);
    WeierstrassData::new(w.q.clone(), tau)
}

/// Residual of the Gauss equation at one interior node.
fn gauss_defect(q0: &HopfField, log_tau0: &GridField<f64>, i: usize, j: usize) -> f64 {
    let t = log_tau0.at(i, j).exp();
    laplacian5(log_tau0, i, j) * 0.25 - t / 8.0 + 2.0 * q0.q0.at(i, j).norm_sqr() / t
}

/// max |(log τ₀)_{zz̄} − τ₀/8 + 2|Q₀|²/τ₀| over interior nodes.
pub fn gauss_equation_residual(q0: &HopfField, tau0: &GridField<f64>) -> f64 {
    let phi = tau0.map(f64::ln);
    let grid = *tau0.grid();
    grid.interior_nodes(1)
        .map(|(i, j)| gauss_defect(q0, &phi, i, j).abs())
        .fold(0.0, f64::max)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverOptions {
    pub max_newton_iters: usize,
    /// Initial step fraction; halved until the residual decreases.
    pub damping: f64,
    /// Target max-norm residual.
    pub abs_tol: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self { max_newton_iters: 50, damping: 1.0, abs_tol: 1e-10 }
    }
}

impl SolverOptions {
    pub fn validate(&self) -> Result<()> {
        if self.max_newton_iters == 0 || !(self.damping > 0.0 && self.damping <= 1.0) || !(self.abs_tol > 0.0) {
            return Err(Error::Domain(format!("invalid solver options {self:?}")));
        }
        Ok(())
    }
}

/// One line of the solver log.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IterLog {
    pub iter: usize,
    pub residual: f64,
    pub step_scale: f64,
}

#[derive(Debug, Clone)]
pub struct GaussSolution {
    pub tau0: GridField<f64>,
    /// Entry 0 is the harmonic initial guess.
    pub log: Vec<IterLog>,
}

impl GaussSolution {
    pub fn iterations(&self) -> usize {
        self.log.len() - 1
    }

    pub fn history(&self) -> Vec<f64> {
        self.log.iter().map(|l| l.residual).collect()
    }

    pub fn log_lines(&self) -> String {
        self.log
            .iter()
            .map(|l| serde_json::to_string(l).expect("log entries serialize") + "\n")
            .collect()
    }
}

/// Interior unknowns of a Dirichlet problem on the grid.
struct Interior {
    nx: usize,
    ny: usize,
    cs: f64,
    ct: f64,
}

impl Interior {
    fn new(g: &ConformalGrid) -> Self {
        Self { nx: g.n_s - 2, ny: g.n_t - 2, cs: 1.0 / (g.hs() * g.hs()), ct: 1.0 / (g.ht() * g.ht()) }
    }

    fn len(&self) -> usize {
        self.nx * self.ny
    }

    /// y = (−Δ/4 + diag(d)) x with homogeneous Dirichlet data.
    fn apply(&self, d: &[f64], x: &[f64], y: &mut [f64]) {
        let (nx, ny, cs, ct) = (self.nx, self.ny, self.cs, self.ct);
        y.par_chunks_mut(nx).enumerate().for_each(|(b, row)| {
            for (a, out) in row.iter_mut().enumerate() {
                let k = b * nx + a;
                let c = x[k];
                let w = if a > 0 { x[k - 1] } else { 0.0 };
                let e = if a + 1 < nx { x[k + 1] } else { 0.0 };
                let s = if b > 0 { x[k - nx] } else { 0.0 };
                let n = if b + 1 < ny { x[k + nx] } else { 0.0 };
                let lap = cs * (w + e - 2.0 * c) + ct * (s + n - 2.0 * c);
                *out = -0.25 * lap + d[k] * c;
            }
        });
    }

    fn diag(&self, d: &[f64]) -> Vec<f64> {
        d.iter().map(|&v| 0.5 * (self.cs + self.ct) + v).collect()
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Jacobi-preconditioned conjugate gradients for (−Δ/4 + diag(d)) x = b.
fn conjugate_gradient(op: &Interior, d: &[f64], b: &[f64]) -> Result<Vec<f64>> {
    let n = op.len();
    let m = op.diag(d);
    let bnorm = dot(b, b).sqrt();
    let mut x = vec![0.0; n];
    if bnorm == 0.0 {
        return Ok(x);
    }
    let mut r = b.to_vec();
    let mut z: Vec<f64> = r.iter().zip(&m).map(|(r, m)| r / m).collect();
    let mut p = z.clone();
    let mut ap = vec![0.0; n];
    let mut rz = dot(&r, &z);
    let max_iter = 20 * (op.nx + op.ny) + 1000;
    for _ in 0..max_iter {
        op.apply(d, &p, &mut ap);
        let alpha = rz / dot(&p, &ap);
        for k in 0..n {
            x[k] += alpha * p[k];
            r[k] -= alpha * ap[k];
        }
        if dot(&r, &r).sqrt() <= 1e-14 * bnorm {
            return Ok(x);
        }
        for k in 0..n {
            z[k] = r[k] / m[k];
        }
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for k in 0..n {
            p[k] = z[k] + beta * p[k];
        }
    }
    let rel = dot(&r, &r).sqrt() / bnorm;
    if rel <= 1e-10 {
        Ok(x)
    } else {
        Err(Error::LinearSolver(rel))
    }
}

fn scatter_interior(g: &ConformalGrid, field: &mut GridField<f64>, x: &[f64], base: Option<&GridField<f64>>) {
    let nx = g.n_s - 2;
    for j in 1..g.n_t - 1 {
        for i in 1..g.n_s - 1 {
            let v = x[(j - 1) * nx + (i - 1)];
            let b = base.map_or(0.0, |f| f.at(i, j));
            field.set(i, j, b + v);
        }
    }
}

/// Harmonic extension of the boundary values of `boundary`.
pub fn harmonic_extension(boundary: &GridField<f64>) -> Result<GridField<f64>> {
    let g = *boundary.grid();
    let op = Interior::new(&g);
    let mut phi = boundary.clone();
    for j in 1..g.n_t - 1 {
        for i in 1..g.n_s - 1 {
            phi.set(i, j, 0.0);
        }
    }
    // −Δφ_int/4 = Δ(boundary part)/4
    let rhs: Vec<f64> = (1..g.n_t - 1)
        .flat_map(|j| (1..g.n_s - 1).map(move |i| (i, j)))
        .map(|(i, j)| 0.25 * laplacian5(&phi, i, j))
        .collect();
    let x = conjugate_gradient(&op, &vec![0.0; op.len()], &rhs)?;
    scatter_interior(&g, &mut phi, &x, None);
    Ok(phi)
}

fn max_defect(q0: &HopfField, phi: &GridField<f64>) -> (Vec<f64>, f64) {
    let g = *phi.grid();
    let f: Vec<f64> = (1..g.n_t - 1)
        .flat_map(|j| (1..g.n_s - 1).map(move |i| (i, j)))
        .map(|(i, j)| gauss_defect(q0, phi, i, j))
        .collect();
    let m = f.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    (f, m)
}

/// Size of the rounding error in one evaluation of the discrete defect.
fn defect_floor(q0: &HopfField, phi: &GridField<f64>) -> f64 {
    let g = *phi.grid();
    let stiff = 1.0 / (g.hs() * g.hs()) + 1.0 / (g.ht() * g.ht());
    let m = g
        .nodes()
        .map(|(i, j)| {
            let p = phi.at(i, j);
            p.abs() * stiff + p.exp() / 8.0 + 2.0 * q0.q0.at(i, j).norm_sqr() * (-p).exp()
        })
        .fold(0.0, f64::max);
    16.0 * f64::EPSILON * m
}

/// Dirichlet problem for φ = log τ₀ with φ prescribed by the boundary nodes
/// of `boundary_log_tau`. Interior values of that field are ignored.
pub fn solve_gauss_equation(
    q0: &HopfField,
    boundary_log_tau: &GridField<f64>,
    opts: &SolverOptions,
) -> Result<GaussSolution> {
    opts.validate()?;
    let g = *boundary_log_tau.grid();
    if q0.grid() != &g {
        return Err(Error::Format("Hopf field and boundary data live on different grids".into()));
    }
    for (i, j) in g.nodes() {
        if !g.is_interior(i, j, 1) && !boundary_log_tau.at(i, j).is_finite() {
            return Err(Error::Data { node: (i, j), reason: "non-finite boundary value".into() });
        }
    }
    let op = Interior::new(&g);
    let qn: Vec<f64> = (1..g.n_t - 1)
        .flat_map(|j| (1..g.n_s - 1).map(move |i| (i, j)))
        .map(|(i, j)| 2.0 * q0.q0.at(i, j).norm_sqr())
        .collect();

    let mut phi = harmonic_extension(boundary_log_tau)?;
    let (mut f, mut res) = max_defect(q0, &phi);
    let mut log = vec![IterLog { iter: 0, residual: res, step_scale: 0.0 }];
    let mut history = vec![res];
    let mut iter = 0;
    while res > opts.abs_tol {
        if iter == opts.max_newton_iters {
            return Err(Error::SolverDiverged { iterations: iter, history });
        }
        iter += 1;
        // −J δ = F with −J = −Δ/4 + diag(e^φ/8 + 2|Q₀|²e^{−φ})
        let d: Vec<f64> = (1..g.n_t - 1)
            .flat_map(|j| (1..g.n_s - 1).map(move |i| (i, j)))
            .zip(&qn)
            .map(|((i, j), &q)| {
                let e = phi.at(i, j).exp();
                e / 8.0 + q / e
            })
            .collect();
        let delta = conjugate_gradient(&op, &d, &f)?;
        let mut scale = opts.damping;
        loop {
            let mut trial = phi.clone();
            let step: Vec<f64> = delta.iter().map(|v| v * scale).collect();
            scatter_interior(&g, &mut trial, &step, Some(&phi));
            let (tf, tres) = max_defect(q0, &trial);
            if tres < res {
                phi = trial;
                f = tf;
                res = tres;
                break;
            }
            scale *= 0.5;
            if scale < 1e-10 {
                if res <= defect_floor(q0, &phi) {
                    return Ok(GaussSolution { tau0: phi.map(f64::exp), log });
                }
                history.push(tres);
                return Err(Error::SolverDiverged { iterations: iter, history });
            }
        }
        history.push(res);
        log.push(IterLog { iter, residual: res, step_scale: scale });
    }
    Ok(GaussSolution { tau0: phi.map(f64::exp), log })
}

/// State of the spacelike CMC frame (f_z, f_z̄, G) in L³.
#[derive(Debug, Clone, Copy)]
struct L3Frame {
    fz: CVecL3,
    fzb: CVecL3,
    g: CVecL3,
}

impl std::ops::Add for L3Frame {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        Self { fz: self.fz + o.fz, fzb: self.fzb + o.fzb, g: self.g + o.g }
    }
}

impl std::ops::Mul<f64> for L3Frame {
    type Output = Self;
    fn mul(self, k: f64) -> Self {
        Self { fz: self.fz * k, fzb: self.fzb * k, g: self.g * k }
    }
}

/// Harmonic map with prescribed Hopf differential Q₀ and metric factor τ₀
/// (a solution of the Gauss equation), obtained as the Gauss map of the
/// associated spacelike surface in L³ with
///
/// ```text
/// f_zz = (log τ₀)_z f_z + Q₀ G,   f_zz̄ = (τ₀/4) G,
/// G_z  = f_z/2 + (2Q₀/τ₀) f_z̄.
/// ```
///
/// The frame starts at `z0` from G = (1,0,0), f_z = (√τ₀/2)(e₁ − i e₂).
/// The returned field carries G_z from the frame as its analytic derivative.
pub fn harmonic_map_from_data(q0: &HopfField, tau0: &GridField<f64>, z0: Node) -> Result<GaussMapField> {
    let grid = *tau0.grid();
    grid.check_node(z0)?;
    if let Some(k) = tau0.values().iter().position(|t| !(*t > 0.0)) {
        return Err(Error::Data { node: grid.node_of(k), reason: "tau0 must be positive".into() });
    }
    let log_dz = dz_field(&tau0.map(f64::ln), Stencil::Sixth);
    let q = &q0.q0;
    let deriv = |y: &L3Frame, p: Probe| -> (L3Frame, L3Frame) {
        let (t, a, q) = (tau0.probe(p), log_dz.probe(p), q.probe(p));
        let b = q * (2.0 / t);
        let gz = y.fz * 0.5 + y.fzb * b;
        let gzb = y.fzb * 0.5 + y.fz * b.conj();
        let dz = L3Frame { fz: y.fz * a + y.g * q, fzb: y.g * (t / 4.0), g: gz };
        let dzb = L3Frame { fz: y.g * (t / 4.0), fzb: y.fzb * a.conj() + y.g * q.conj(), g: gzb };
        (dz, dzb)
    };
    let root = tau0.at_node(z0).sqrt() / 2.0;
    let y0 = L3Frame {
        fz: CVecL3::new([Complex64::new(0.0, 0.0), Complex64::new(root, 0.0), Complex64::new(0.0, -root)]),
        fzb: CVecL3::new([Complex64::new(0.0, 0.0), Complex64::new(root, 0.0), Complex64::new(0.0, root)]),
        g: CVecL3::from_real(VecL3::new(1.0, 0.0, 0.0)),
    };
    let states = propagate(&grid, z0, y0, PathOrder::RowFirst, |y, p, axis| {
        let (dz, dzb) = deriv(y, p);
        Ok(match axis {
            Axis::S => dz + dzb,
            Axis::T => L3Frame {
                fz: (dz.fz - dzb.fz) * I,
                fzb: (dz.fzb - dzb.fzb) * I,
                g: (dz.g - dzb.g) * I,
            },
        })
    })?;
    let g = GridField::new(grid, states.iter().map(|y| y.g.re()).collect())?;
    let dz = GridField::new(
        grid,
        grid.nodes()
            .map(|(i, j)| {
                let y = states[grid.idx(i, j)];
                let b = q.at(i, j) * (2.0 / tau0.at(i, j));
                y.fz * 0.5 + y.fzb * b
            })
            .collect(),
    )?;
    for (k, v) in g.values().iter().enumerate() {
        let n = minkowski_dot(v, v);
        if !v.is_finite() || (n + 1.0).abs() > 1e-4 {
            return Err(Error::Data { node: grid.node_of(k), reason: format!("frame drift, <G,G> = {n}") });
        }
    }
    GaussMapField::renormalized(g, Some(dz))
}

/// Largest |G_z(analytic) − G_z(FD)| over interior nodes.
pub fn derivative_consistency(g: &GaussMapField, stencil: Stencil) -> Option<f64> {
    let d = g.analytic_dz()?;
    let grid = *g.grid();
    Some(
        grid.interior_nodes(1)
            .map(|(i, j)| (wirtinger_with(g.field(), i, j, stencil).0 - d.at(i, j)).max_abs())
            .fold(0.0, f64::max),
    )
}

/// |⟨G, G⟩ + 1| worst case, for diagnostics.
pub fn hyperboloid_defect(g: &GaussMapField) -> f64 {
    g.field()
        .values()
        .iter()
        .map(|v| (minkowski_dot(v, v) + 1.0).abs())
        .fold(0.0, f64::max)
}

/// G_z at a node with second-order stencils, ignoring any analytic field.
pub fn fd_dz(g: &GaussMapField, i: usize, j: usize) -> CVecL3 {
    wirtinger(g.field(), i, j).0
}
