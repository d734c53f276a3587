//! Uniform mesh on `[0, 1]` with homogeneous Dirichlet ends.
//!
//! Grid functions store interior nodes only. The stiffness operator is the
//! three-point negative Laplacian, and the Dirichlet energy is evaluated as
//! `h * <Lu, u>` so that every consumer (residual, Jacobian, energy) sees the
//! same discrete object.

use std::ops::Index;

use crate::error::{Error, Result};

/// Uniform grid with `n` interior nodes and spacing `h = 1 / (n + 1)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mesh {
    n: usize,
    h: f64,
}

impl Mesh {
    pub const MIN_NODES: usize = 3;

    pub fn new(n: usize) -> Result<Self> {
        if n < Self::MIN_NODES {
            return Err(Error::InvalidMesh(n));
        }
        Ok(Self {
            n,
            h: 1.0 / (n as f64 + 1.0),
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    /// Coordinate of interior node `i` (zero-based), i.e. `(i + 1) h`.
    pub fn node(&self, i: usize) -> f64 {
        (i as f64 + 1.0) * self.h
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.node(i)).collect()
    }

    /// Samples `func` at the interior nodes.
    pub fn sample(&self, func: impl Fn(f64) -> f64) -> Result<Field> {
        Field::new((0..self.n).map(|i| func(self.node(i))).collect())
    }

    pub fn check(&self, u: &Field) -> Result<()> {
        if u.len() != self.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                found: u.len(),
            });
        }
        Ok(())
    }
}

/// Real grid function on the interior nodes of a [`Mesh`].
#[derive(Debug, Clone, PartialEq)]
pub struct Field(Vec<f64>);

impl Field {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("field"));
        }
        Ok(Self(values))
    }

    pub fn zeros(n: usize) -> Self {
        Self(vec![0.0; n])
    }

    pub fn constant(n: usize, value: f64) -> Self {
        Self(vec![value; n])
    }

    /// Wraps values the caller has already checked.
    pub(crate) fn from_vec_unchecked(values: Vec<f64>) -> Self {
        debug_assert!(values.iter().all(|v| v.is_finite()));
        Self(values)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }

    pub fn iter(&self) -> std::slice::Iter<'_, f64> {
        self.0.iter()
    }

    pub fn scaled(&self, factor: f64) -> Field {
        Field(self.0.iter().map(|v| v * factor).collect())
    }

    pub fn sup_norm(&self) -> f64 {
        self.0.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn min_value(&self) -> f64 {
        self.0.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max_value(&self) -> f64 {
        self.0.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }
}

impl Index<usize> for Field {
    type Output = f64;

    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

impl AsRef<[f64]> for Field {
    fn as_ref(&self) -> &[f64] {
        &self.0
    }
}

/// Weight in a quadrature: either a constant or a grid function.
#[derive(Debug, Clone, Copy)]
pub enum Weight<'a> {
    Constant(f64),
    Field(&'a Field),
}

impl Weight<'_> {
    #[inline]
    pub(crate) fn at(&self, i: usize) -> f64 {
        match self {
            Weight::Constant(c) => *c,
            Weight::Field(w) => w.0[i],
        }
    }
}

impl From<f64> for Weight<'_> {
    fn from(c: f64) -> Self {
        Weight::Constant(c)
    }
}

impl<'a> From<&'a Field> for Weight<'a> {
    fn from(w: &'a Field) -> Self {
        Weight::Field(w)
    }
}

/// `|x|^q` with `|0|^q = 0`.
#[inline]
pub fn abs_pow(x: f64, q: f64) -> f64 {
    let a = x.abs();
    if a == 0.0 {
        0.0
    } else if q == 2.0 {
        a * a
    } else {
        (q * a.ln()).exp()
    }
}

/// `(Lu)_i = (-u_{i-1} + 2 u_i - u_{i+1}) / h^2` with zero boundary values.
pub(crate) fn apply_neg_laplacian(h: f64, u: &[f64], out: &mut [f64]) {
    let n = u.len();
    let inv_h2 = 1.0 / (h * h);
    for i in 0..n {
        let left = if i > 0 { u[i - 1] } else { 0.0 };
        let right = if i + 1 < n { u[i + 1] } else { 0.0 };
        out[i] = (2.0 * u[i] - left - right) * inv_h2;
    }
}

pub(crate) fn neg_laplacian_vec(h: f64, u: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; u.len()];
    apply_neg_laplacian(h, u, &mut out);
    out
}

/// Sum of squared jumps over `h`, including both boundary jumps.
pub(crate) fn stiffness_energy(h: f64, u: &[f64]) -> f64 {
    let n = u.len();
    let mut acc = u[0] * u[0] + u[n - 1] * u[n - 1];
    for i in 0..n - 1 {
        let d = u[i + 1] - u[i];
        acc += d * d;
    }
    acc / h
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Discrete negative Laplacian with Dirichlet zeros.
pub fn neg_laplacian(mesh: &Mesh, u: &Field) -> Result<Field> {
    mesh.check(u)?;
    Ok(Field(neg_laplacian_vec(mesh.h, &u.0)))
}

/// Dirichlet energy `K(u) = ∫ |u'|^2`, identical to `h <Lu, u>`.
pub fn dirichlet_energy(mesh: &Mesh, u: &Field) -> Result<f64> {
    mesh.check(u)?;
    Ok(stiffness_energy(mesh.h, &u.0))
}

/// Trapezoid approximation of `∫ w |u|^q dx`; endpoint terms vanish.
pub fn weighted_integral<'a>(
    mesh: &Mesh,
    weight: impl Into<Weight<'a>>,
    u: &Field,
    q: f64,
) -> Result<f64> {
    if !(q >= 1.0) {
        return Err(Error::InvalidExponent(q));
    }
    mesh.check(u)?;
    let weight = weight.into();
    if let Weight::Field(w) = weight {
        mesh.check(w)?;
    }
    Ok(weighted_power_sum(mesh.h, weight, &u.0, q))
}

pub(crate) fn weighted_power_sum(h: f64, weight: Weight<'_>, u: &[f64], q: f64) -> f64 {
    h * u
        .iter()
        .enumerate()
        .map(|(i, &v)| weight.at(i) * abs_pow(v, q))
        .sum::<f64>()
}
