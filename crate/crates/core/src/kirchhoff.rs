//! Discrete Kirchhoff operator, its Jacobian, energy and Nehari functional.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::grid::{abs_pow, dot, neg_laplacian_vec, stiffness_energy, Field, Mesh};
use crate::linalg::{RankOneUpdated, Tridiagonal};

#[derive(Debug, Clone, PartialEq)]
pub struct ProblemSpec {
    pub a: f64,
    pub p: f64,
    pub lambda: f64,
    pub f: Field,
    pub g: Field,
    pub mesh: Mesh,
}

impl ProblemSpec {
    pub fn new(mesh: Mesh, a: f64, p: f64, lambda: f64, f: Field, g: Field) -> Result<Self> {
        if !(a >= 0.0) || !a.is_finite() {
            return Err(Error::InvalidParameter(format!("a = {a} must be >= 0")));
        }
        if !(p > 2.0) || !p.is_finite() {
            return Err(Error::InvalidExponent(p));
        }
        if !lambda.is_finite() {
            return Err(Error::NonFinite("lambda"));
        }
        mesh.check(&f)?;
        mesh.check(&g)?;
        if !f.iter().any(|&v| v > 0.0) {
            return Err(Error::InvalidParameter(
                "weight f must be positive somewhere on the grid".into(),
            ));
        }
        Ok(Self {
            a,
            p,
            lambda,
            f,
            g,
            mesh,
        })
    }

    pub fn with_lambda(&self, lambda: f64) -> Self {
        Self {
            lambda,
            ..self.clone()
        }
    }

    pub fn with_a(&self, a: f64) -> Self {
        Self { a, ..self.clone() }
    }

    /// `g |u|^{p-2} u` at node `i`.
    fn nonlinearity(&self, i: usize, u: f64) -> f64 {
        self.g[i] * abs_pow(u, self.p - 1.0) * u.signum()
    }
}

/// Shared pieces of an evaluation at one state.
pub(crate) struct Eval {
    pub lu: Vec<f64>,
    pub k: f64,
}

impl Eval {
    pub fn new(spec: &ProblemSpec, u: &[f64]) -> Self {
        let h = spec.mesh.h();
        Self {
            lu: neg_laplacian_vec(h, u),
            k: stiffness_energy(h, u),
        }
    }
}

pub(crate) fn residual_raw(spec: &ProblemSpec, lambda: f64, u: &[f64], ev: &Eval) -> Vec<f64> {
    let c = spec.a * ev.k + 1.0;
    (0..u.len())
        .map(|i| c * ev.lu[i] - lambda * spec.f[i] * u[i] - spec.nonlinearity(i, u[i]))
        .collect()
}

pub(crate) fn jacobian_raw(spec: &ProblemSpec, lambda: f64, u: &[f64], ev: &Eval) -> RankOneUpdated {
    let n = u.len();
    let h = spec.mesh.h();
    let c = spec.a * ev.k + 1.0;
    let mut tri = Tridiagonal::neg_laplacian(n, h, c);
    for i in 0..n {
        // (p-1)|u|^{p-2} is finite at u = 0 for every p > 2.
        tri.diag[i] -= lambda * spec.f[i] + (spec.p - 1.0) * spec.g[i] * abs_pow(u[i], spec.p - 2.0);
    }
    RankOneUpdated {
        tri,
        sigma: 2.0 * spec.a * h,
        w: ev.lu.clone(),
    }
}

/// `F(u) = (aK(u) + 1) Lu - λ f u - g |u|^{p-2} u`.
pub fn residual(spec: &ProblemSpec, u: &Field) -> Result<Field> {
    spec.mesh.check(u)?;
    let ev = Eval::new(spec, u.as_slice());
    Field::new(residual_raw(spec, spec.lambda, u.as_slice(), &ev))
}

/// Exact Jacobian `DF(u)`: tridiagonal plus the rank-one nonlocal term
/// `2ah (Lu)(Lu)ᵀ`.
#[derive(Debug, Clone)]
pub struct Jacobian {
    pub(crate) op: RankOneUpdated,
}

impl Jacobian {
    pub fn apply(&self, v: &Field) -> Result<Field> {
        if v.len() != self.op.n() {
            return Err(Error::DimensionMismatch {
                expected: self.op.n(),
                found: v.len(),
            });
        }
        Field::new(self.op.apply(v.as_slice()))
    }

    pub fn solve(&self, rhs: &Field) -> Result<Field> {
        if rhs.len() != self.op.n() {
            return Err(Error::DimensionMismatch {
                expected: self.op.n(),
                found: rhs.len(),
            });
        }
        Field::new(self.op.solve(rhs.as_slice())?)
    }

    pub fn tridiagonal(&self) -> &Tridiagonal {
        &self.op.tri
    }

    /// Coefficient and vector of the rank-one part.
    pub fn rank_one(&self) -> (f64, &[f64]) {
        (self.op.sigma, &self.op.w)
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let n = self.op.n();
        DMatrix::from_fn(n, n, |i, j| {
            let t = &self.op.tri;
            let tij = if i == j {
                t.diag[i]
            } else if i == j + 1 {
                t.lower[j]
            } else if j == i + 1 {
                t.upper[i]
            } else {
                0.0
            };
            tij + self.op.sigma * self.op.w[i] * self.op.w[j]
        })
    }
}

pub fn jacobian(spec: &ProblemSpec, u: &Field) -> Result<Jacobian> {
    spec.mesh.check(u)?;
    let ev = Eval::new(spec, u.as_slice());
    Ok(Jacobian {
        op: jacobian_raw(spec, spec.lambda, u.as_slice(), &ev),
    })
}

/// Quadratures entering `J` and `I_p`: `(K, ∫ f u², ∫ g |u|^p)`.
pub(crate) fn integrals(spec: &ProblemSpec, u: &[f64]) -> (f64, f64, f64) {
    let h = spec.mesh.h();
    let k = stiffness_energy(h, u);
    let mut m = 0.0;
    let mut nl = 0.0;
    for (i, &v) in u.iter().enumerate() {
        m += spec.f[i] * v * v;
        nl += spec.g[i] * abs_pow(v, spec.p);
    }
    (k, h * m, h * nl)
}

pub(crate) fn energy_raw(spec: &ProblemSpec, lambda: f64, u: &[f64]) -> f64 {
    let (k, m, nl) = integrals(spec, u);
    0.25 * spec.a * k * k + 0.5 * k - 0.5 * lambda * m - nl / spec.p
}

pub(crate) fn nehari_raw(spec: &ProblemSpec, lambda: f64, u: &[f64]) -> f64 {
    let (k, m, nl) = integrals(spec, u);
    spec.a * k * k + k - lambda * m - nl
}

/// `J(u) = (a/4)K² + K/2 - (λ/2)∫ f u² - (1/p)∫ g |u|^p`.
pub fn energy(spec: &ProblemSpec, u: &Field) -> Result<f64> {
    spec.mesh.check(u)?;
    Ok(energy_raw(spec, spec.lambda, u.as_slice()))
}

/// `<J'(u), v>`.
pub fn energy_directional(spec: &ProblemSpec, u: &Field, v: &Field) -> Result<f64> {
    spec.mesh.check(u)?;
    spec.mesh.check(v)?;
    let h = spec.mesh.h();
    let ev = Eval::new(spec, u.as_slice());
    let mut local = 0.0;
    for (i, (&ui, &vi)) in u.iter().zip(v.iter()).enumerate() {
        local += (spec.lambda * spec.f[i] * ui + spec.nonlinearity(i, ui)) * vi;
    }
    Ok((spec.a * ev.k + 1.0) * h * dot(&ev.lu, v.as_slice()) - h * local)
}

/// `I_p(u) = aK² + K - λ∫ f u² - ∫ g |u|^p`.
pub fn nehari_value(spec: &ProblemSpec, u: &Field) -> Result<f64> {
    spec.mesh.check(u)?;
    Ok(nehari_raw(spec, spec.lambda, u.as_slice()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eigen::principal_eigenpair;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn spec(n: usize, a: f64, p: f64, lambda: f64, g: impl Fn(f64) -> f64) -> ProblemSpec {
        let mesh = Mesh::new(n).unwrap();
        let f = mesh.sample(|x| 1.0 + 0.5 * x).unwrap();
        let g = mesh.sample(g).unwrap();
        ProblemSpec::new(mesh, a, p, lambda, f, g).unwrap()
    }

    fn random_field(n: usize, rng: &mut ChaCha8Rng, amp: f64) -> Field {
        Field::new((0..n).map(|_| amp * rng.gen_range(-1.0..1.0)).collect()).unwrap()
    }

    fn sup(v: &[f64]) -> f64 {
        v.iter().fold(0.0, |m, x| m.max(x.abs()))
    }

    #[test]
    fn zero_state_is_a_root_with_zero_energy() {
        let s = spec(20, 0.3, 3.5, 5.0, |x| (3.0 * PI * x).sin());
        let z = Field::zeros(20);
        assert!(residual(&s, &z).unwrap().iter().all(|&v| v == 0.0));
        assert_eq!(energy(&s, &z).unwrap(), 0.0);
        assert_eq!(nehari_value(&s, &z).unwrap(), 0.0);
    }

    #[test]
    fn linear_eigenbranch_is_a_root() {
        let mesh = Mesh::new(99).unwrap();
        let f = Field::constant(99, 1.0);
        let pair = principal_eigenpair(&mesh, &f, 1e-11).unwrap();
        let a = 0.7;
        let t = 1.3;
        let u = pair.phi1.scaled(t);
        let k = crate::grid::dirichlet_energy(&mesh, &u).unwrap();
        let lambda = pair.lambda1 * (1.0 + a * k);
        let s = ProblemSpec::new(mesh, a, 4.0, lambda, f, Field::zeros(99)).unwrap();
        let r = residual(&s, &u).unwrap();
        assert!(r.sup_norm() < 1e-7 * lambda, "{}", r.sup_norm());
        let m = crate::grid::weighted_integral(&mesh, 1.0, &pair.phi1, 2.0).unwrap();
        let k1 = k / (t * t);
        let j = a / 4.0 * t.powi(4) * k1 * k1 + t * t / 2.0 * (k1 - lambda * m);
        assert!((energy(&s, &u).unwrap() - j).abs() < 1e-9);
    }

    #[test]
    fn sine_is_not_a_solution_of_the_local_problem() {
        let mesh = Mesh::new(50).unwrap();
        let s = ProblemSpec::new(
            mesh,
            0.0,
            4.0,
            PI * PI,
            Field::constant(50, 1.0),
            Field::constant(50, 1.0),
        )
        .unwrap();
        let u = mesh.sample(|x| 0.5 * (PI * x).sin()).unwrap();
        assert!(residual(&s, &u).unwrap().sup_norm() > 1e-3);
    }

    #[test]
    fn local_and_zero_state_jacobians() {
        let s = spec(12, 0.0, 3.0, 4.0, |x| x - 0.3);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let u = random_field(12, &mut rng, 1.0);
        let jac = jacobian(&s, &u).unwrap();
        assert_eq!(jac.rank_one().0, 0.0);
        let s4 = spec(12, 2.0, 4.5, 4.0, |x| x - 0.3);
        let j0 = jacobian(&s4, &Field::zeros(12)).unwrap().to_dense();
        let h = s4.mesh.h();
        for i in 0..12 {
            let want = 2.0 / (h * h) - 4.0 * s4.f[i];
            assert!((j0[(i, i)] - want).abs() < 1e-9);
        }
    }

    fn fd_check(s: &ProblemSpec, u: &Field, v: &Field) -> f64 {
        let eps = 1e-6 * u.sup_norm().max(1e-3);
        let plus: Vec<f64> = u.iter().zip(v.iter()).map(|(a, b)| a + eps * b).collect();
        let minus: Vec<f64> = u.iter().zip(v.iter()).map(|(a, b)| a - eps * b).collect();
        let fp = residual(s, &Field::new(plus).unwrap()).unwrap();
        let fm = residual(s, &Field::new(minus).unwrap()).unwrap();
        let fd: Vec<f64> = fp.iter().zip(fm.iter()).map(|(a, b)| (a - b) / (2.0 * eps)).collect();
        let jv = jacobian(s, u).unwrap().apply(v).unwrap();
        let diff: Vec<f64> = fd.iter().zip(jv.iter()).map(|(a, b)| a - b).collect();
        sup(&diff) / sup(jv.as_slice())
    }

    #[test]
    fn jacobian_matches_central_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        for &(a, p) in &[(0.0, 4.0), (0.5, 3.0), (2.0, 5.5), (0.01, 2.5)] {
            let s = spec(50, a, p, 12.0, |x| (3.0 * PI * x).sin());
            let u = random_field(50, &mut rng, 2.0);
            let v = random_field(50, &mut rng, 1.0);
            let rel = fd_check(&s, &u, &v);
            assert!(rel < 1e-6, "a={a} p={p} rel={rel}");
        }
    }

    #[test]
    fn jacobian_dense_assembly_matches_apply() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let s = spec(30, 1.2, 3.7, 9.0, |x| 1.0 - 2.0 * x);
        let u = random_field(30, &mut rng, 1.0);
        let v = random_field(30, &mut rng, 1.0);
        let jac = jacobian(&s, &u).unwrap();
        let dense = jac.to_dense() * nalgebra::DVector::from_column_slice(v.as_slice());
        let jv = jac.apply(&v).unwrap();
        for i in 0..30 {
            assert!((dense[i] - jv[i]).abs() < 1e-9 * (1.0 + jv[i].abs()));
        }
        let x = jac.solve(&v).unwrap();
        let back = jac.apply(&x).unwrap();
        for i in 0..30 {
            assert!((back[i] - v[i]).abs() < 1e-9);
        }
    }

    #[test]
    fn energy_directional_matches_central_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let s = spec(60, 0.4, 3.2, 7.0, |x| (PI * x).cos());
        let u = random_field(60, &mut rng, 1.5);
        let v = random_field(60, &mut rng, 1.0);
        let eps = 1e-5;
        let shift = |sgn: f64| {
            Field::new(u.iter().zip(v.iter()).map(|(a, b)| a + sgn * eps * b).collect()).unwrap()
        };
        let fd = (energy(&s, &shift(1.0)).unwrap() - energy(&s, &shift(-1.0)).unwrap()) / (2.0 * eps);
        let d = energy_directional(&s, &u, &v).unwrap();
        assert!((fd - d).abs() < 1e-6 * d.abs().max(1.0), "{fd} vs {d}");
    }

    #[test]
    fn mesh_mismatch_is_an_error() {
        let s = spec(20, 0.1, 3.0, 1.0, |_| 1.0);
        let u = Field::zeros(21);
        assert!(matches!(residual(&s, &u), Err(Error::DimensionMismatch { .. })));
        assert!(energy(&s, &u).is_err());
        assert!(jacobian(&s, &u).is_err());
    }

    #[test]
    fn invalid_parameters_rejected() {
        let mesh = Mesh::new(5).unwrap();
        let one = Field::constant(5, 1.0);
        assert!(ProblemSpec::new(mesh, -0.1, 3.0, 1.0, one.clone(), one.clone()).is_err());
        assert!(ProblemSpec::new(mesh, 0.1, 2.0, 1.0, one.clone(), one.clone()).is_err());
        assert!(ProblemSpec::new(mesh, 0.1, 3.0, 1.0, Field::constant(5, -1.0), one).is_err());
    }

    fn state_strategy(n: usize) -> impl Strategy<Value = Vec<f64>> {
        proptest::collection::vec(-3.0f64..3.0, n)
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn weak_form_identity(
            u in state_strategy(24),
            v in state_strategy(24),
            a in 0.0f64..3.0,
            p in 2.1f64..6.0,
            lambda in 0.0f64..60.0,
        ) {
            let s = spec(24, a, p, lambda, |x| (2.5 * PI * x).sin());
            let u = Field::new(u).unwrap();
            let v = Field::new(v).unwrap();
            let lhs = energy_directional(&s, &u, &v).unwrap();
            let r = residual(&s, &u).unwrap();
            let rhs = s.mesh.h() * dot(r.as_slice(), v.as_slice());
            let scale = 1.0 + lhs.abs() + s.mesh.h() * r.sup_norm() * v.sup_norm() * 24.0;
            prop_assert!((lhs - rhs).abs() <= 1e-12 * scale);
        }

        #[test]
        fn nehari_is_directional_derivative_along_u(
            u in state_strategy(24),
            a in 0.0f64..3.0,
            p in 2.1f64..6.0,
            lambda in 0.0f64..60.0,
        ) {
            let s = spec(24, a, p, lambda, |x| 1.0 - x);
            let u = Field::new(u).unwrap();
            let i = nehari_value(&s, &u).unwrap();
            let d = energy_directional(&s, &u, &u).unwrap();
            prop_assert!((i - d).abs() <= 1e-12 * (1.0 + i.abs() + d.abs()));
        }

        #[test]
        fn solution_energy_identity_on_linear_branch(
            a in 0.0f64..5.0,
            t in 0.01f64..3.0,
            p in 2.1f64..7.0,
        ) {
            let mesh = Mesh::new(40).unwrap();
            let f = Field::constant(40, 1.0);
            let pair = principal_eigenpair(&mesh, &f, 1e-11).unwrap();
            let u = pair.phi1.scaled(t);
            let (k, m, _) = {
                let s0 = ProblemSpec::new(mesh, a, p, 1.0, f.clone(), Field::zeros(40)).unwrap();
                integrals(&s0, u.as_slice())
            };
            let lambda = pair.lambda1 * (1.0 + a * k);
            let s = ProblemSpec::new(mesh, a, p, lambda, f, Field::zeros(40)).unwrap();
            let tol = residual(&s, &u).unwrap().sup_norm();
            let j = energy(&s, &u).unwrap();
            let closed = (0.25 - 1.0 / p) * a * k * k + (0.5 - 1.0 / p) * (k - lambda * m);
            prop_assert!((j - closed).abs() <= 1e-9 * (1.0 + k * k * a + k) + tol);
        }

        #[test]
        fn local_energy_scales_quadratically_without_nonlinearity(
            t in 0.1f64..4.0,
            u in state_strategy(16),
        ) {
            let s = spec(16, 0.0, 3.0, 5.0, |_| 0.0);
            let u = Field::new(u).unwrap();
            let j1 = energy(&s, &u).unwrap();
            let jt = energy(&s, &u.scaled(t)).unwrap();
            prop_assert!((jt - t * t * j1).abs() <= 1e-10 * (1.0 + jt.abs()));
        }
    }
}
