//! Principal and second eigenvalues of `-u'' = λ f u` with Dirichlet data.
//!
//! Inverse power iteration on `L⁻¹ diag(f)`, which is self-adjoint in the
//! stiffness inner product `<x, y>_L = xᵀ L y`. When `f` changes sign a
//! positive shift keeps the principal (largest positive) eigenvalue of
//! `L⁻¹ diag(f)` dominant.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::grid::{dot, neg_laplacian_vec, Field, Mesh};
use crate::linalg::{Tridiagonal, TridiagonalLu};

const MAX_ITER: usize = 200_000;
const DEFAULT_TOL: f64 = 1e-10;
const STALL_WINDOW: usize = 200;
const STALL_SLACK: f64 = 100.0;

#[derive(Debug, Clone, PartialEq)]
pub struct EigenPair {
    pub lambda1: f64,
    /// Positive, `max phi1 = 1`.
    pub phi1: Field,
    pub lambda2: f64,
}

impl EigenPair {
    /// `phi1` rescaled so that `∫ f phi1² = 1`.
    pub fn weight_normalized(&self, mesh: &Mesh, f: &Field) -> Field {
        let h = mesh.h();
        let m: f64 = h * self
            .phi1
            .iter()
            .zip(f.iter())
            .map(|(u, w)| w * u * u)
            .sum::<f64>();
        self.phi1.scaled(1.0 / m.sqrt())
    }
}

struct Pencil<'a> {
    h: f64,
    f: &'a [f64],
    lu: TridiagonalLu,
    shift: f64,
}

impl<'a> Pencil<'a> {
    fn new(mesh: &Mesh, f: &'a Field) -> Result<Self> {
        mesh.check(f)?;
        if !f.iter().any(|&v| v > 0.0) {
            return Err(Error::InvalidParameter(
                "weight f must be positive somewhere on the grid".into(),
            ));
        }
        let n = mesh.n();
        let h = mesh.h();
        let lu = Tridiagonal::neg_laplacian(n, h, 1.0).factor()?;
        // Eigenvalues of L⁻¹F lie in [-|f⁻|/λ_L, |f⁺|/λ_L]; the shift makes
        // every shifted eigenvalue nonnegative.
        let neg = f.iter().fold(0.0f64, |m, &v| m.max(-v));
        let lambda_l = (2.0 - 2.0 * (PI * h).cos()) / (h * h);
        Ok(Self {
            h,
            f: f.as_slice(),
            lu,
            shift: neg / lambda_l,
        })
    }

    /// `(L⁻¹F + shift) x`.
    fn apply(&self, x: &[f64]) -> Vec<f64> {
        let fx: Vec<f64> = x.iter().zip(self.f).map(|(a, b)| a * b).collect();
        let mut y = self.lu.solve(&fx);
        if self.shift != 0.0 {
            for (yi, xi) in y.iter_mut().zip(x) {
                *yi += self.shift * xi;
            }
        }
        y
    }

    fn rayleigh(&self, x: &[f64]) -> f64 {
        let lx = neg_laplacian_vec(self.h, x);
        let fx: f64 = x.iter().zip(self.f).map(|(a, b)| b * a * a).sum();
        dot(x, &lx) / fx
    }

    fn residual(&self, lambda: f64, x: &[f64]) -> f64 {
        let lx = neg_laplacian_vec(self.h, x);
        lx.iter()
            .zip(x.iter().zip(self.f))
            .map(|(l, (u, w))| (l - lambda * w * u).abs())
            .fold(0.0, f64::max)
    }

    /// Residual floor from evaluating `Lx` in floating point.
    fn floor(&self, x: &[f64]) -> f64 {
        let sup = x.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        32.0 * f64::EPSILON * 4.0 / (self.h * self.h) * sup
    }

    fn iterate(
        &self,
        mut x: Vec<f64>,
        tol: f64,
        project: impl Fn(&mut [f64]),
    ) -> Result<(f64, Vec<f64>)> {
        project(&mut x);
        normalize_sup(&mut x)?;
        let (mut best, mut since_best) = (f64::INFINITY, 0usize);
        for _ in 0..MAX_ITER {
            let mut y = self.apply(&x);
            project(&mut y);
            normalize_sup(&mut y)?;
            x = y;
            let lambda = self.rayleigh(&x);
            let r = self.residual(lambda, &x);
            let target = tol.max(self.floor(&x));
            // Stagnation slightly above the target is rounding in the
            // deflation, not a failure to converge.
            let stalled = since_best > STALL_WINDOW && best <= STALL_SLACK * target;
            if r <= target || stalled {
                if !(lambda > 0.0) || !lambda.is_finite() {
                    break;
                }
                return Ok((lambda, x));
            }
            if r < 0.999 * best {
                best = r;
                since_best = 0;
            } else {
                since_best += 1;
            }
        }
        Err(Error::Convergence {
            what: "eigenvalue iteration",
            iterations: MAX_ITER,
        })
    }
}

fn normalize_sup(x: &mut [f64]) -> Result<()> {
    let (mut idx, mut best) = (0, 0.0f64);
    for (i, v) in x.iter().enumerate() {
        if v.abs() > best {
            best = v.abs();
            idx = i;
        }
    }
    if !(best > 0.0) || !best.is_finite() {
        return Err(Error::NonFinite("eigenvector iterate"));
    }
    let s = x[idx].signum() / best;
    x.iter_mut().for_each(|v| *v *= s);
    Ok(())
}

/// Principal eigenpair of the pencil `(L, diag f)`; also fills `lambda2`.
pub fn principal_eigenpair(mesh: &Mesh, f: &Field, tol: f64) -> Result<EigenPair> {
    if !(tol > 0.0) {
        return Err(Error::InvalidParameter(format!("tolerance {tol}")));
    }
    let pencil = Pencil::new(mesh, f)?;
    let start: Vec<f64> = mesh.nodes().iter().map(|&x| (PI * x).sin()).collect();
    let (lambda1, mut phi) = pencil.iterate(start, tol, |_| {})?;
    if phi.iter().any(|&v| v <= 0.0) {
        // The dominant mode was not the positive principal one.
        return Err(Error::Convergence {
            what: "principal eigenvector (lost positivity)",
            iterations: MAX_ITER,
        });
    }
    normalize_sup(&mut phi)?;
    let phi1 = Field::from_vec_unchecked(phi);
    let lambda2 = second_with(&pencil, mesh, &phi1, tol)?.0;
    Ok(EigenPair {
        lambda1,
        phi1,
        lambda2,
    })
}

/// Smallest positive eigenvalue on the stiffness-orthogonal complement of `phi1`.
pub fn second_eigenvalue(mesh: &Mesh, f: &Field, pair: &EigenPair) -> Result<f64> {
    second_eigenpair(mesh, f, pair).map(|(l, _)| l)
}

/// Like [`second_eigenvalue`], also returning the sup-normalized eigenvector.
pub fn second_eigenpair(mesh: &Mesh, f: &Field, pair: &EigenPair) -> Result<(f64, Field)> {
    mesh.check(&pair.phi1)?;
    let pencil = Pencil::new(mesh, f)?;
    let (l, v) = second_with(&pencil, mesh, &pair.phi1, DEFAULT_TOL)?;
    Ok((l, Field::from_vec_unchecked(v)))
}

fn second_with(
    pencil: &Pencil<'_>,
    mesh: &Mesh,
    phi1: &Field,
    tol: f64,
) -> Result<(f64, Vec<f64>)> {
    let phi = phi1.as_slice();
    let lphi = neg_laplacian_vec(mesh.h(), phi);
    let norm = dot(phi, &lphi);
    let project = |x: &mut [f64]| {
        let c = dot(x, &lphi) / norm;
        x.iter_mut().zip(phi).for_each(|(xi, pi)| *xi -= c * pi);
    };
    // sin(2πx) plus a small non-symmetric component so the start is never
    // accidentally orthogonal to the target mode.
    let start: Vec<f64> = mesh
        .nodes()
        .iter()
        .map(|&x| (2.0 * PI * x).sin() + 0.1 * (3.0 * PI * x).sin() + 0.05 * x)
        .collect();
    pencil.iterate(start, tol, project)
}
