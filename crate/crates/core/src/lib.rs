//! Numerical construction and verification of mean curvature 1/2 surfaces
//! in H²×ℝ from harmonic maps into the hyperbolic plane, and of minimal
//! vertical graphs from holomorphic 1-forms.
//!
//! Modules, bottom up:
//! - [`lorentz`]: Minkowski algebra in L³ and L⁴, the hyperboloid model.
//! - [`cgrid`]: grids in z = s + i t, Wirtinger stencils, path integration.
//! - [`gaussmaps`]: harmonic maps, Hopf differentials, Weierstrass data and
//!   the Gauss equation solver.
//! - [`height`]: the first-order system for h_z and the height function.
//! - [`surface`]: surface reconstruction, moving frames, residual reports.
//! - [`derived`]: closed-form families and transformations.

pub mod cgrid;
pub mod derived;
pub mod error;
pub mod gaussmaps;
pub mod height;
pub mod lorentz;
pub mod surface;

pub use error::{Error, Node, Result};
pub use num_complex::Complex64;
