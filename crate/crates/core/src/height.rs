//! The first-order system for ϑ = h_z,
//!
//! ```text
//! ϑ_z = (log τ)_z ϑ + Q √((τ + 2|ϑ|²)/τ)
//! ϑ_z̄ = ½ √(τ (τ + 2|ϑ|²))
//! ```
//!
//! and the height function h = 2 Re ∫ ϑ dz.

use num_complex::Complex64;

use crate::cgrid::{
    anchor, dz_field, path_integrate, propagate, Axis, ConformalGrid, GridField, PathOrder, Probe, Quadrature,
    Stencil,
};
use crate::error::{Error, Node, Result};
use crate::gaussmaps::{GaussMapField, WeierstrassData};
use crate::lorentz::H2Point;

const I: Complex64 = Complex64::new(0.0, 1.0);

/// Relative threshold on |τ² − 4|Q|²| below which a point is singular.
pub const EPS_SING: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InitialCondition {
    pub z0: Node,
    pub theta0: Complex64,
    pub h0: f64,
}

impl InitialCondition {
    pub fn new(z0: Node, theta0: Complex64, h0: f64) -> Self {
        Self { z0, theta0, h0 }
    }

    /// Anchors at the node nearest to `(s, t)`.
    pub fn at_point(grid: &ConformalGrid, s: f64, t: f64, theta0: Complex64, h0: f64) -> Result<Self> {
        Ok(Self { z0: grid.nearest_node(s, t)?, theta0, h0 })
    }
}

#[derive(Debug, Clone)]
pub struct HeightSolution {
    /// ϑ = h_z.
    pub theta: GridField<Complex64>,
    pub h: GridField<f64>,
    /// Largest node discrepancy between row-first and column-first
    /// propagation of ϑ.
    pub compatibility_residual: f64,
    pub period_residual: f64,
}

impl HeightSolution {
    /// Same ϑ with h shifted by `c`.
    pub fn shifted(&self, c: f64) -> Self {
        Self { h: self.h.map(|v| v + c), ..self.clone() }
    }
}

/// Data of the ϑ-system with (log τ)_z precomputed.
pub struct ThetaSystem<'a> {
    w: &'a WeierstrassData,
    log_tau_z: GridField<Complex64>,
}

impl<'a> ThetaSystem<'a> {
    pub fn new(w: &'a WeierstrassData) -> Self {
        Self { w, log_tau_z: dz_field(&w.tau().map(f64::ln), Stencil::Sixth) }
    }

    pub fn log_tau_z(&self) -> &GridField<Complex64> {
        &self.log_tau_z
    }

    /// (ϑ_z, ϑ_z̄) from data values.
    pub fn eval(theta: Complex64, tau: f64, q: Complex64, log_tau_z: Complex64) -> (Complex64, f64) {
        let rad = tau + 2.0 * theta.norm_sqr();
        (log_tau_z * theta + q * (rad / tau).sqrt(), 0.5 * (tau * rad).sqrt())
    }

    pub fn rhs_at_probe(&self, theta: Complex64, p: Probe) -> Result<(Complex64, f64)> {
        let tau = self.w.tau().probe(p);
        if !(tau > 0.0) {
            let node = match p {
                Probe::Node(i, j) | Probe::Mid(_, i, j) => (i, j),
            };
            return Err(Error::Data { node, reason: format!("tau = {tau} at {p:?}") });
        }
        Ok(Self::eval(theta, tau, self.w.q().probe(p), self.log_tau_z.probe(p)))
    }

    /// Right-hand sides at an arbitrary point, data sampled bilinearly.
    pub fn rhs_at(&self, theta: Complex64, s: f64, t: f64) -> Result<(Complex64, f64)> {
        let tau = crate::cgrid::sample(self.w.tau(), s, t)?;
        if !(tau > 0.0) {
            let node = self.w.grid().nearest_node(s, t)?;
            return Err(Error::Data { node, reason: format!("tau = {tau} at ({s}, {t})") });
        }
        let q = crate::cgrid::sample(self.w.q(), s, t)?;
        let a = crate::cgrid::sample(&self.log_tau_z, s, t)?;
        Ok(Self::eval(theta, tau, q, a))
    }

    fn real_derivative(&self, theta: Complex64, p: Probe, axis: Axis) -> Result<Complex64> {
        let (dz, dzb) = self.rhs_at_probe(theta, p)?;
        Ok(match axis {
            Axis::S => dz + dzb,
            Axis::T => I * (dz - dzb),
        })
    }

    pub fn propagate(&self, ic: &InitialCondition, order: PathOrder) -> Result<GridField<Complex64>> {
        let grid = *self.w.grid();
        let vals = propagate(&grid, ic.z0, ic.theta0, order, |y, p, axis| self.real_derivative(*y, p, axis))?;
        if let Some(k) = vals.iter().position(|v| !v.is_finite()) {
            return Err(Error::Data { node: grid.node_of(k), reason: "non-finite theta".into() });
        }
        GridField::new(grid, vals)
    }
}

/// Right-hand sides of the ϑ-system at `(s, t)`.
pub fn theta_rhs(theta: Complex64, s: f64, t: f64, w: &WeierstrassData) -> Result<(Complex64, f64)> {
    ThetaSystem::new(w).rhs_at(theta, s, t)
}

/// Integrates ϑ from `ic` (row first) and recovers h anchored at h(z₀) = h0.
pub fn integrate_theta(w: &WeierstrassData, ic: &InitialCondition) -> Result<HeightSolution> {
    let grid = *w.grid();
    grid.check_node(ic.z0)?;
    let sys = ThetaSystem::new(w);
    let theta = sys.propagate(ic, PathOrder::RowFirst)?;
    let transposed = sys.propagate(ic, PathOrder::ColumnFirst)?;
    let compatibility_residual = theta.max_distance(&transposed, 0);
    let integral = path_integrate(&theta, Quadrature::Fourth);
    Ok(HeightSolution {
        h: anchor(&integral.values, ic.z0, ic.h0),
        theta,
        compatibility_residual,
        period_residual: integral.period_residual,
    })
}

/// Solves α₀ = ϑ₀/2 − Q ϑ̄₀/τ for ϑ₀.
pub fn theta0_from_alpha(alpha0: Complex64, q: Complex64, tau: f64) -> Option<Complex64> {
    let den = tau * tau - 4.0 * q.norm_sqr();
    if den.abs() <= EPS_SING * tau * tau {
        return None;
    }
    Some((2.0 * alpha0 * tau * tau + 4.0 * tau * alpha0.conj() * q) / den)
}

/// ϑ₀ for a surface whose vertical projection passes through `n0` at `z0`.
pub fn theta_from_position(n0: &H2Point, g: &GaussMapField, w: &WeierstrassData, z0: Node) -> Result<Complex64> {
    g.grid().check_node(z0)?;
    let gz = g.dz(Stencil::Fourth).at_node(z0);
    let alpha0 = gz.dot_real(&n0.vec());
    let (q, tau) = (w.q().at_node(z0), w.tau().at_node(z0));
    theta0_from_alpha(alpha0, q, tau).ok_or(Error::SingularPoint {
        node: z0,
        value: (tau * tau - 4.0 * q.norm_sqr()).abs(),
    })
}
