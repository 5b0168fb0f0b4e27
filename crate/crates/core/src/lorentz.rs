//! Lorentzian linear algebra in L³ = (ℝ³, −dx0² + dx1² + dx2²) and
//! L⁴ = (ℝ⁴, −dx0² + dx1² + dx2² + dx3²).
//!
//! H² is the upper sheet of the hyperboloid ⟨x,x⟩ = −1, x0 > 0 in L³ and
//! H²×ℝ sits inside L⁴ as {(x, h) : x ∈ H²}. Complex vectors carry the
//! inner product extended complex-bilinearly, which is what Wirtinger
//! derivatives such as ⟨G_z, G_z⟩ need.

use std::ops::{Add, AddAssign, Mul, Neg, Sub};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance on ⟨v,v⟩ + 1 when validating hyperboloid points.
pub const H2_TOL: f64 = 1e-12;

/// Tolerance on mᵀ J m − J when validating isometries.
pub const ISOMETRY_TOL: f64 = 1e-12;

macro_rules! real_vector {
    ($name:ident, $n:expr, $($field:ident : $idx:expr),+) => {
        #[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
        pub struct $name {
            $(pub $field: f64,)+
        }

        impl $name {
            pub const fn new($($field: f64),+) -> Self {
                Self { $($field),+ }
            }

            pub fn from_array(a: [f64; $n]) -> Self {
                Self { $($field: a[$idx]),+ }
            }

            pub fn to_array(self) -> [f64; $n] {
                [$(self.$field),+]
            }

            pub fn zero() -> Self {
                Self::default()
            }

            pub fn is_finite(&self) -> bool {
                true $(&& self.$field.is_finite())+
            }

            /// Largest absolute component.
            pub fn max_abs(&self) -> f64 {
                0.0f64 $(.max(self.$field.abs()))+
            }
        }

        impl Add for $name {
            type Output = Self;
            fn add(self, rhs: Self) -> Self {
                Self { $($field: self.$field + rhs.$field),+ }
            }
        }

        impl AddAssign for $name {
            fn add_assign(&mut self, rhs: Self) {
                $(self.$field += rhs.$field;)+
            }
        }

        impl Sub for $name {
            type Output = Self;
            fn sub(self, rhs: Self) -> Self {
                Self { $($field: self.$field - rhs.$field),+ }
            }
        }

        impl Neg for $name {
            type Output = Self;
            fn neg(self) -> Self {
                Self { $($field: -self.$field),+ }
            }
        }

        impl Mul<f64> for $name {
            type Output = Self;
            fn mul(self, rhs: f64) -> Self {
                Self { $($field: self.$field * rhs),+ }
            }
        }

        impl Mul<$name> for f64 {
            type Output = $name;
            fn mul(self, rhs: $name) -> $name {
                rhs * self
            }
        }
    };
}

real_vector!(VecL3, 3, x0: 0, x1: 1, x2: 2);
real_vector!(VecL4, 4, x0: 0, x1: 1, x2: 2, x3: 3);

macro_rules! complex_vector {
    ($name:ident, $real:ident, $n:expr, $($field:ident : $idx:expr),+) => {
        /// Complexified vector; the inner product is complex-bilinear.
        #[derive(Debug, Clone, Copy, PartialEq, Default)]
        pub struct $name {
            pub c: [Complex64; $n],
        }

        impl $name {
            pub fn new(c: [Complex64; $n]) -> Self {
                Self { c }
            }

            pub fn zero() -> Self {
                Self::default()
            }

            pub fn from_real(v: $real) -> Self {
                Self { c: [$(Complex64::new(v.$field, 0.0)),+] }
            }

            /// `re + i·im`.
            pub fn from_parts(re: $real, im: $real) -> Self {
                Self { c: [$(Complex64::new(re.$field, im.$field)),+] }
            }

            pub fn re(&self) -> $real {
                $real { $($field: self.c[$idx].re),+ }
            }

            pub fn im(&self) -> $real {
                $real { $($field: self.c[$idx].im),+ }
            }

            pub fn conj(&self) -> Self {
                Self { c: self.c.map(|z| z.conj()) }
            }

            /// Complex-bilinear Minkowski product (no conjugation).
            pub fn dot(&self, other: &Self) -> Complex64 {
                let mut acc = -self.c[0] * other.c[0];
                for k in 1..$n {
                    acc += self.c[k] * other.c[k];
                }
                acc
            }

            /// Product with a real vector, extended bilinearly.
            pub fn dot_real(&self, other: &$real) -> Complex64 {
                self.dot(&Self::from_real(*other))
            }

            pub fn max_abs(&self) -> f64 {
                self.c.iter().fold(0.0f64, |m, z| m.max(z.norm()))
            }

            pub fn is_finite(&self) -> bool {
                self.c.iter().all(|z| z.re.is_finite() && z.im.is_finite())
            }
        }

        impl Add for $name {
            type Output = Self;
            fn add(self, rhs: Self) -> Self {
                let mut c = self.c;
                for k in 0..$n {
                    c[k] += rhs.c[k];
                }
                Self { c }
            }
        }

        impl AddAssign for $name {
            fn add_assign(&mut self, rhs: Self) {
                for k in 0..$n {
                    self.c[k] += rhs.c[k];
                }
            }
        }

        impl Sub for $name {
            type Output = Self;
            fn sub(self, rhs: Self) -> Self {
                let mut c = self.c;
                for k in 0..$n {
                    c[k] -= rhs.c[k];
                }
                Self { c }
            }
        }

        impl Neg for $name {
            type Output = Self;
            fn neg(self) -> Self {
                Self { c: self.c.map(|z| -z) }
            }
        }

        impl Mul<f64> for $name {
            type Output = Self;
            fn mul(self, rhs: f64) -> Self {
                Self { c: self.c.map(|z| z * rhs) }
            }
        }

        impl Mul<Complex64> for $name {
            type Output = Self;
            fn mul(self, rhs: Complex64) -> Self {
                Self { c: self.c.map(|z| z * rhs) }
            }
        }

        impl Mul<$name> for Complex64 {
            type Output = $name;
            fn mul(self, rhs: $name) -> $name {
                rhs * self
            }
        }
    };
}

complex_vector!(CVecL3, VecL3, 3, x0: 0, x1: 1, x2: 2);
complex_vector!(CVecL4, VecL4, 4, x0: 0, x1: 1, x2: 2, x3: 3);

/// Minkowski inner product with the first coordinate timelike.
pub trait Minkowski {
    fn mdot(&self, other: &Self) -> f64;
}

impl Minkowski for VecL3 {
    fn mdot(&self, o: &Self) -> f64 {
        -self.x0 * o.x0 + self.x1 * o.x1 + self.x2 * o.x2
    }
}

impl Minkowski for VecL4 {
    fn mdot(&self, o: &Self) -> f64 {
        -self.x0 * o.x0 + self.x1 * o.x1 + self.x2 * o.x2 + self.x3 * o.x3
    }
}

/// −a0·b0 + Σ ai·bi.
pub fn minkowski_dot<V: Minkowski>(a: &V, b: &V) -> f64 {
    a.mdot(b)
}

impl VecL4 {
    /// `(x, h)` with `x ∈ L³`.
    pub fn from_parts(x: VecL3, h: f64) -> Self {
        Self::new(x.x0, x.x1, x.x2, h)
    }

    pub fn spatial(&self) -> VecL3 {
        VecL3::new(self.x0, self.x1, self.x2)
    }
}

impl CVecL4 {
    pub fn from_cparts(x: CVecL3, h: Complex64) -> Self {
        Self::new([x.c[0], x.c[1], x.c[2], h])
    }

    pub fn spatial(&self) -> CVecL3 {
        CVecL3::new([self.c[0], self.c[1], self.c[2]])
    }
}

fn det3(m: [[f64; 3]; 3]) -> f64 {
    m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
        - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
        + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
}

/// Vector Minkowski-orthogonal to `a`, `b` and `c`.
///
/// Computed as the signed cofactor expansion of det(x; a; b; c) along the
/// first row, followed by J = diag(−1,1,1,1). The orientation is fixed so
/// that (e1, e2, e3) ↦ (−1, 0, 0, 0). Linearly dependent inputs give the
/// zero vector.
pub fn lorentz_cross4(a: &VecL4, b: &VecL4, c: &VecL4) -> VecL4 {
    let rows = [a.to_array(), b.to_array(), c.to_array()];
    let mut w = [0.0; 4];
    for (i, wi) in w.iter_mut().enumerate() {
        let mut minor = [[0.0; 3]; 3];
        for (r, row) in rows.iter().enumerate() {
            let mut k = 0;
            for (col, &v) in row.iter().enumerate() {
                if col != i {
                    minor[r][k] = v;
                    k += 1;
                }
            }
        }
        let sign = if i % 2 == 0 { 1.0 } else { -1.0 };
        *wi = sign * det3(minor);
    }
    VecL4::new(-w[0], w[1], w[2], w[3])
}

/// A point of the hyperbolic plane in the hyperboloid model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "VecL3", into = "VecL3")]
pub struct H2Point {
    v: VecL3,
}

impl H2Point {
    pub fn new(v: VecL3) -> Result<Self> {
        if !v.is_finite() || v.x0 <= 0.0 || (v.mdot(&v) + 1.0).abs() > H2_TOL {
            return Err(Error::NotOnHyperboloid {
                point: v.to_array(),
                norm: v.mdot(&v),
            });
        }
        Ok(Self { v })
    }

    /// Projects a timelike future-pointing vector back onto the sheet by
    /// dividing by √(−⟨v,v⟩).
    pub fn renormalize(v: VecL3) -> Result<Self> {
        let n2 = -v.mdot(&v);
        if !(n2 > 0.0) || v.x0 <= 0.0 || !v.is_finite() {
            return Err(Error::NotOnHyperboloid {
                point: v.to_array(),
                norm: -n2,
            });
        }
        Ok(Self { v: v * (1.0 / n2.sqrt()) })
    }

    pub fn apex() -> Self {
        Self { v: VecL3::new(1.0, 0.0, 0.0) }
    }

    pub fn vec(&self) -> VecL3 {
        self.v
    }

    /// Inverse of [`to_poincare`]: the lift of a disk point to the sheet.
    pub fn from_poincare(x: f64, y: f64) -> Result<Self> {
        let r2 = x * x + y * y;
        if !(r2 < 1.0) {
            return Err(Error::Domain(format!(
                "({x}, {y}) is not inside the unit disk"
            )));
        }
        let d = 1.0 - r2;
        Ok(Self {
            v: VecL3::new((1.0 + r2) / d, 2.0 * x / d, 2.0 * y / d),
        })
    }
}

impl TryFrom<VecL3> for H2Point {
    type Error = Error;
    fn try_from(v: VecL3) -> Result<Self> {
        H2Point::renormalize(v).and_then(|p| {
            if (v.mdot(&v) + 1.0).abs() > 1e-8 {
                Err(Error::NotOnHyperboloid {
                    point: v.to_array(),
                    norm: v.mdot(&v),
                })
            } else {
                Ok(p)
            }
        })
    }
}

impl From<H2Point> for VecL3 {
    fn from(p: H2Point) -> VecL3 {
        p.v
    }
}

/// Stereographic projection of the sheet onto the Poincaré disk.
pub fn to_poincare(p: &H2Point) -> (f64, f64) {
    let v = p.v;
    (v.x1 / (1.0 + v.x0), v.x2 / (1.0 + v.x0))
}

const J: [f64; 3] = [-1.0, 1.0, 1.0];

/// An isometry of H², i.e. an orthochronous element of O(1,2).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IsometryH2 {
    m: [[f64; 3]; 3],
}

impl IsometryH2 {
    pub fn new(m: [[f64; 3]; 3]) -> Result<Self> {
        let mut worst = 0.0f64;
        for i in 0..3 {
            for j in 0..3 {
                let mut acc = 0.0;
                for k in 0..3 {
                    acc += m[k][i] * J[k] * m[k][j];
                }
                let target = if i == j { J[i] } else { 0.0 };
                worst = worst.max((acc - target).abs());
            }
        }
        if !(worst <= ISOMETRY_TOL) || m[0][0] < 1.0 - ISOMETRY_TOL {
            return Err(Error::NotAnIsometry { defect: worst });
        }
        Ok(Self { m })
    }

    pub fn identity() -> Self {
        Self {
            m: [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]],
        }
    }

    /// Reflection across the geodesic x2 = 0.
    pub fn reflect_x2() -> Self {
        Self {
            m: [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, -1.0]],
        }
    }

    /// Exchanges x1 and x2; conjugates the geodesic x1 = 0 onto x2 = 0.
    pub fn swap_12() -> Self {
        Self {
            m: [[1.0, 0.0, 0.0], [0.0, 0.0, 1.0], [0.0, 1.0, 0.0]],
        }
    }

    /// Hyperbolic translation along the geodesic x2 = 0 by distance `d`.
    pub fn boost_x1(d: f64) -> Self {
        let (c, s) = (d.cosh(), d.sinh());
        Self {
            m: [[c, s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]],
        }
    }

    /// Rotation about the apex.
    pub fn rotation(theta: f64) -> Self {
        let (c, s) = (theta.cos(), theta.sin());
        Self {
            m: [[1.0, 0.0, 0.0], [0.0, c, -s], [0.0, s, c]],
        }
    }

    pub fn matrix(&self) -> [[f64; 3]; 3] {
        self.m
    }

    pub fn compose(&self, other: &Self) -> Self {
        let mut m = [[0.0; 3]; 3];
        for (i, row) in m.iter_mut().enumerate() {
            for (j, e) in row.iter_mut().enumerate() {
                *e = (0..3).map(|k| self.m[i][k] * other.m[k][j]).sum();
            }
        }
        Self { m }
    }

    /// J mᵀ J.
    pub fn inverse(&self) -> Self {
        let mut m = [[0.0; 3]; 3];
        for (i, row) in m.iter_mut().enumerate() {
            for (j, e) in row.iter_mut().enumerate() {
                *e = J[i] * self.m[j][i] * J[j];
            }
        }
        Self { m }
    }

    pub fn apply_vec(&self, v: &VecL3) -> VecL3 {
        let a = v.to_array();
        let r: [f64; 3] = std::array::from_fn(|i| (0..3).map(|k| self.m[i][k] * a[k]).sum());
        VecL3::from_array(r)
    }

    pub fn apply_cvec(&self, v: &CVecL3) -> CVecL3 {
        CVecL3::new(std::array::from_fn(|i| {
            (0..3).map(|k| v.c[k] * self.m[i][k]).sum()
        }))
    }

    /// Acts on H²×ℝ ⊂ L⁴ as (Ψ, Id).
    pub fn apply_l4(&self, v: &VecL4) -> VecL4 {
        VecL4::from_parts(self.apply_vec(&v.spatial()), v.x3)
    }
}

/// m·p; the result is renormalized onto the sheet to absorb rounding.
pub fn apply_isometry(m: &IsometryH2, p: &H2Point) -> Result<H2Point> {
    H2Point::renormalize(m.apply_vec(&p.vec()))
}
