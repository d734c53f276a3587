//! Structured linear solves: tridiagonal LU with partial pivoting, a symmetric
//! rank-one update handled by Sherman–Morrison, and a one-row/one-column
//! border handled by block elimination.
//!
//! Block elimination loses accuracy when the leading block is nearly
//! singular (folds of the semilinear problem). Every structured solve is
//! therefore followed by iterative refinement against the exact operator,
//! with a dense LU fallback when refinement stalls.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::grid::dot;

const REFINE_STEPS: usize = 4;
const BACKWARD_TOL: f64 = 1e-13;

/// Tridiagonal matrix stored by diagonals.
#[derive(Debug, Clone)]
pub struct Tridiagonal {
    pub lower: Vec<f64>,
    pub diag: Vec<f64>,
    pub upper: Vec<f64>,
}

impl Tridiagonal {
    pub fn new(lower: Vec<f64>, diag: Vec<f64>, upper: Vec<f64>) -> Self {
        let n = diag.len();
        assert!(n >= 1 && lower.len() + 1 == n && upper.len() + 1 == n);
        Self { lower, diag, upper }
    }

    /// `scale * L` for the Dirichlet negative Laplacian on `n` nodes.
    pub fn neg_laplacian(n: usize, h: f64, scale: f64) -> Self {
        let d = scale * 2.0 / (h * h);
        let o = -scale / (h * h);
        Self::new(vec![o; n - 1], vec![d; n], vec![o; n - 1])
    }

    pub fn n(&self) -> usize {
        self.diag.len()
    }

    pub fn apply(&self, x: &[f64], out: &mut [f64]) {
        let n = self.n();
        for i in 0..n {
            let mut v = self.diag[i] * x[i];
            if i > 0 {
                v += self.lower[i - 1] * x[i - 1];
            }
            if i + 1 < n {
                v += self.upper[i] * x[i + 1];
            }
            out[i] = v;
        }
    }

    fn inf_norm(&self) -> f64 {
        let n = self.n();
        (0..n)
            .map(|i| {
                let mut s = self.diag[i].abs();
                if i > 0 {
                    s += self.lower[i - 1].abs();
                }
                if i + 1 < n {
                    s += self.upper[i].abs();
                }
                s
            })
            .fold(0.0, f64::max)
    }

    fn to_dense(&self) -> DMatrix<f64> {
        let n = self.n();
        let mut m = DMatrix::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = self.diag[i];
            if i > 0 {
                m[(i, i - 1)] = self.lower[i - 1];
            }
            if i + 1 < n {
                m[(i, i + 1)] = self.upper[i];
            }
        }
        m
    }

    /// LU factorization with partial pivoting (row interchanges between
    /// neighbours only, producing one extra superdiagonal).
    pub fn factor(&self) -> Result<TridiagonalLu> {
        let n = self.n();
        let mut dl = self.lower.clone();
        let mut d = self.diag.clone();
        let mut du = self.upper.clone();
        let mut du2 = vec![0.0; n.saturating_sub(2)];
        let mut swapped = vec![false; n.saturating_sub(1)];

        for i in 0..n.saturating_sub(1) {
            if d[i].abs() >= dl[i].abs() {
                if d[i] != 0.0 {
                    let fact = dl[i] / d[i];
                    dl[i] = fact;
                    d[i + 1] -= fact * du[i];
                }
            } else {
                let fact = d[i] / dl[i];
                d[i] = dl[i];
                dl[i] = fact;
                let temp = du[i];
                du[i] = d[i + 1];
                d[i + 1] = temp - fact * d[i + 1];
                if i + 2 < n {
                    du2[i] = du[i + 1];
                    du[i + 1] *= -fact;
                }
                swapped[i] = true;
            }
        }
        if d.iter().any(|&v| v == 0.0 || !v.is_finite()) {
            return Err(Error::SingularSystem);
        }
        Ok(TridiagonalLu {
            dl,
            d,
            du,
            du2,
            swapped,
        })
    }
}

#[derive(Debug, Clone)]
pub struct TridiagonalLu {
    dl: Vec<f64>,
    d: Vec<f64>,
    du: Vec<f64>,
    du2: Vec<f64>,
    swapped: Vec<bool>,
}

impl TridiagonalLu {
    pub fn solve_in_place(&self, b: &mut [f64]) {
        let n = self.d.len();
        for i in 0..n.saturating_sub(1) {
            if self.swapped[i] {
                let temp = b[i] - self.dl[i] * b[i + 1];
                b[i] = b[i + 1];
                b[i + 1] = temp;
            } else {
                b[i + 1] -= self.dl[i] * b[i];
            }
        }
        b[n - 1] /= self.d[n - 1];
        if n > 1 {
            b[n - 2] = (b[n - 2] - self.du[n - 2] * b[n - 1]) / self.d[n - 2];
        }
        for i in (0..n.saturating_sub(2)).rev() {
            b[i] = (b[i] - self.du[i] * b[i + 1] - self.du2[i] * b[i + 2]) / self.d[i];
        }
    }

    pub fn solve(&self, rhs: &[f64]) -> Vec<f64> {
        let mut x = rhs.to_vec();
        self.solve_in_place(&mut x);
        x
    }
}

/// `T + sigma * w w^T`.
#[derive(Debug, Clone)]
pub struct RankOneUpdated {
    pub tri: Tridiagonal,
    pub sigma: f64,
    pub w: Vec<f64>,
}

impl RankOneUpdated {
    pub fn n(&self) -> usize {
        self.tri.n()
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; x.len()];
        self.tri.apply(x, &mut out);
        if self.sigma != 0.0 {
            let s = self.sigma * dot(&self.w, x);
            for (o, wi) in out.iter_mut().zip(&self.w) {
                *o += s * wi;
            }
        }
        out
    }

    fn inf_norm(&self) -> f64 {
        let wmax = self.w.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let w1: f64 = self.w.iter().map(|v| v.abs()).sum();
        self.tri.inf_norm() + self.sigma.abs() * wmax * w1
    }

    fn to_dense(&self) -> DMatrix<f64> {
        let mut m = self.tri.to_dense();
        let n = self.n();
        for i in 0..n {
            for j in 0..n {
                m[(i, j)] += self.sigma * self.w[i] * self.w[j];
            }
        }
        m
    }

    /// Factors the tridiagonal part and precomputes `T^{-1} w`.
    pub fn factor(&self) -> Option<RankOneFactors> {
        let lu = self.tri.factor().ok()?;
        let tw = lu.solve(&self.w);
        let denom = 1.0 + self.sigma * dot(&self.w, &tw);
        if !denom.is_finite() || denom.abs() < 1e-14 {
            return None;
        }
        Some(RankOneFactors { lu, tw, denom })
    }

    pub fn solve(&self, rhs: &[f64]) -> Result<Vec<f64>> {
        let factors = self.factor();
        refined_solve(
            rhs,
            self.inf_norm(),
            |x| self.apply(x),
            |r| factors.as_ref().map(|f| f.solve(self.sigma, &self.w, r)),
            || self.to_dense(),
        )
    }
}

#[derive(Debug, Clone)]
pub struct RankOneFactors {
    lu: TridiagonalLu,
    tw: Vec<f64>,
    denom: f64,
}

impl RankOneFactors {
    fn solve(&self, sigma: f64, w: &[f64], rhs: &[f64]) -> Vec<f64> {
        let mut x = self.lu.solve(rhs);
        let coef = sigma * dot(w, &x) / self.denom;
        for (xi, twi) in x.iter_mut().zip(&self.tw) {
            *xi -= coef * twi;
        }
        x
    }
}

/// `[A b; c^T d]` with `A` a rank-one-updated tridiagonal.
#[derive(Debug, Clone)]
pub struct Bordered<'a> {
    pub a: &'a RankOneUpdated,
    pub col: Vec<f64>,
    pub row: Vec<f64>,
    pub corner: f64,
}

impl Bordered<'_> {
    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let n = self.a.n();
        let (xu, xl) = (&x[..n], x[n]);
        let mut out = self.a.apply(xu);
        for (o, b) in out.iter_mut().zip(&self.col) {
            *o += b * xl;
        }
        out.push(dot(&self.row, xu) + self.corner * xl);
        out
    }

    fn inf_norm(&self) -> f64 {
        let colmax = self.col.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let rowsum: f64 = self.row.iter().map(|v| v.abs()).sum::<f64>() + self.corner.abs();
        (self.a.inf_norm() + colmax).max(rowsum)
    }

    fn to_dense(&self) -> DMatrix<f64> {
        let n = self.a.n();
        let mut m = DMatrix::zeros(n + 1, n + 1);
        m.view_mut((0, 0), (n, n)).copy_from(&self.a.to_dense());
        for i in 0..n {
            m[(i, n)] = self.col[i];
            m[(n, i)] = self.row[i];
        }
        m[(n, n)] = self.corner;
        m
    }

    /// Solves the bordered system; `rhs` has length `n + 1`.
    pub fn solve(&self, rhs: &[f64]) -> Result<Vec<f64>> {
        let n = self.a.n();
        let factors = self.a.factor();
        let a_inv_col = factors
            .as_ref()
            .map(|f| f.solve(self.a.sigma, &self.a.w, &self.col));
        let approx = |r: &[f64]| -> Option<Vec<f64>> {
            let f = factors.as_ref()?;
            let y = a_inv_col.as_ref()?;
            let x1 = f.solve(self.a.sigma, &self.a.w, &r[..n]);
            let schur = self.corner - dot(&self.row, y);
            if schur == 0.0 || !schur.is_finite() {
                return None;
            }
            let xl = (r[n] - dot(&self.row, &x1)) / schur;
            let mut x: Vec<f64> = x1.iter().zip(y).map(|(a, b)| a - xl * b).collect();
            x.push(xl);
            Some(x)
        };
        refined_solve(
            rhs,
            self.inf_norm(),
            |x| self.apply(x),
            approx,
            || self.to_dense(),
        )
    }
}

fn inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

fn backward_error(rhs: &[f64], residual: &[f64], op_norm: f64, x: &[f64]) -> f64 {
    let denom = op_norm * inf_norm(x) + inf_norm(rhs);
    if denom == 0.0 {
        0.0
    } else {
        inf_norm(residual) / denom
    }
}

fn refined_solve(
    rhs: &[f64],
    op_norm: f64,
    apply: impl Fn(&[f64]) -> Vec<f64>,
    approx: impl Fn(&[f64]) -> Option<Vec<f64>>,
    dense: impl Fn() -> DMatrix<f64>,
) -> Result<Vec<f64>> {
    if let Some(mut x) = approx(rhs) {
        for _ in 0..=REFINE_STEPS {
            if x.iter().any(|v| !v.is_finite()) {
                break;
            }
            let ax = apply(&x);
            let r: Vec<f64> = rhs.iter().zip(&ax).map(|(b, a)| b - a).collect();
            if backward_error(rhs, &r, op_norm, &x) <= BACKWARD_TOL {
                return Ok(x);
            }
            match approx(&r) {
                Some(dx) => x.iter_mut().zip(&dx).for_each(|(xi, d)| *xi += d),
                None => break,
            }
        }
    }
    dense_solve(dense(), rhs)
}

fn dense_solve(m: DMatrix<f64>, rhs: &[f64]) -> Result<Vec<f64>> {
    let lu = m.lu();
    let x = lu
        .solve(&DVector::from_column_slice(rhs))
        .ok_or(Error::SingularSystem)?;
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::SingularSystem);
    }
    Ok(x.iter().copied().collect())
}
