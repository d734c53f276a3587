//! Damped Newton with the exact Jacobian, and the fixed-point seed used to
//! find a first nontrivial solution.

use crate::eigen::principal_eigenpair;
use crate::error::{Error, Result};
use crate::grid::{dot, Field};
use crate::kirchhoff::{energy_raw, jacobian_raw, nehari_raw, residual_raw, Eval, ProblemSpec};
use crate::linalg::Tridiagonal;

const MAX_HALVINGS: usize = 20;
const SEED_ITERS: usize = 2000;

#[derive(Debug, Clone)]
pub struct NewtonReport {
    pub u: Field,
    pub iterations: usize,
    /// `‖F‖∞` after each iteration, starting with the initial residual.
    pub history: Vec<f64>,
}

fn sup(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// Magnitude against which `‖F‖∞` is compared: the stiffness term dominates
/// the residual's rounding error on fine meshes.
pub(crate) fn residual_scale(spec: &ProblemSpec, ev: &Eval) -> f64 {
    1.0 + (spec.a * ev.k + 1.0) * sup(&ev.lu)
}

/// Rounding floor of `F` at this state.
fn rounding_floor(spec: &ProblemSpec, u: &[f64], ev: &Eval) -> f64 {
    let h = spec.mesh.h();
    256.0 * f64::EPSILON * (spec.a * ev.k + 1.0) * 4.0 / (h * h) * sup(u).max(1e-300)
}

/// Solves `F(u) = 0` from `u0`. Converged when
/// `‖F‖∞ ≤ tol · (1 + ‖(aK + 1) Lu‖∞)`.
pub fn newton_solve(spec: &ProblemSpec, u0: &Field, tol: f64, max_iter: usize) -> Result<Field> {
    newton_solve_report(spec, u0, tol, max_iter).map(|r| r.u)
}

pub fn newton_solve_report(
    spec: &ProblemSpec,
    u0: &Field,
    tol: f64,
    max_iter: usize,
) -> Result<NewtonReport> {
    spec.mesh.check(u0)?;
    if !(tol > 0.0) {
        return Err(Error::InvalidParameter(format!("tolerance {tol}")));
    }
    let lambda = spec.lambda;
    let mut u = u0.as_slice().to_vec();
    let mut ev = Eval::new(spec, &u);
    let mut f = residual_raw(spec, lambda, &u, &ev);
    let mut norm = sup(&f);
    let mut history = vec![norm];
    for it in 0..=max_iter {
        if norm <= tol * residual_scale(spec, &ev) {
            return Ok(NewtonReport {
                u: Field::new(u)?,
                iterations: it,
                history,
            });
        }
        if it == max_iter {
            break;
        }
        let jac = jacobian_raw(spec, lambda, &u, &ev);
        let delta = jac.solve(&f)?;
        let mut theta = 1.0;
        let mut accepted = None;
        for _ in 0..=MAX_HALVINGS {
            let trial: Vec<f64> = u.iter().zip(&delta).map(|(a, d)| a - theta * d).collect();
            if trial.iter().all(|v| v.is_finite()) {
                let tev = Eval::new(spec, &trial);
                let tf = residual_raw(spec, lambda, &trial, &tev);
                let tn = sup(&tf);
                if tn < (1.0 - 1e-4 * theta) * norm {
                    accepted = Some((trial, tev, tf, tn));
                    break;
                }
            }
            theta *= 0.5;
        }
        match accepted {
            Some((nu, nev, nf, nn)) => {
                u = nu;
                ev = nev;
                f = nf;
                norm = nn;
                history.push(norm);
            }
            None => {
                // No descent left: accept if we are at the rounding floor.
                if norm <= rounding_floor(spec, &u, &ev) {
                    return Ok(NewtonReport {
                        u: Field::new(u)?,
                        iterations: it,
                        history,
                    });
                }
                return Err(Error::NoConvergence {
                    iterations: it + 1,
                    residual: norm,
                });
            }
        }
    }
    Err(Error::NoConvergence {
        iterations: max_iter,
        residual: norm,
    })
}

/// Builds a Newton start on the Nehari set.
///
/// Runs `u ← [(aK(u) + 1) L]⁻¹ (λ f u + g |u|^{p-2} u)` from `scale · φ₁`,
/// renormalizing to sup-norm `scale` each step, then moves along the final
/// direction to the point where `I_p` changes sign.
pub fn fixed_point_seed(spec: &ProblemSpec, scale: f64) -> Result<Field> {
    if !(scale > 0.0) || !scale.is_finite() {
        return Err(Error::InvalidParameter(format!("seed scale {scale}")));
    }
    let mesh = &spec.mesh;
    let n = mesh.n();
    let h = mesh.h();
    let pair = principal_eigenpair(mesh, &spec.f, 1e-10)?;
    let phi = pair.phi1.as_slice();
    let lu = Tridiagonal::neg_laplacian(n, h, 1.0).factor()?;

    let mut u: Vec<f64> = phi.iter().map(|v| scale * v).collect();
    for _ in 0..SEED_ITERS {
        let ev = Eval::new(spec, &u);
        let c = spec.a * ev.k + 1.0;
        let rhs: Vec<f64> = (0..n)
            .map(|i| {
                spec.lambda * spec.f[i] * u[i]
                    + spec.g[i] * crate::grid::abs_pow(u[i], spec.p - 1.0) * u[i].signum()
            })
            .collect();
        let mut v = lu.solve(&rhs);
        v.iter_mut().for_each(|x| *x /= c);
        let m = sup(&v);
        if !(m > 1e-300) || !m.is_finite() {
            return Err(Error::SeedFailure("fixed-point iterate collapsed".into()));
        }
        let sign = if dot(&v, phi) < 0.0 { -1.0 } else { 1.0 };
        v.iter_mut().for_each(|x| *x *= sign * scale / m);
        let change = u.iter().zip(&v).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        u = v;
        if change <= 1e-9 * scale {
            break;
        }
    }

    let dir: Vec<f64> = u.iter().map(|v| v / scale).collect();
    let t = nehari_ray_roots(spec, &dir, scale)
        .into_iter()
        .min_by(|a, b| (a / scale).ln().abs().total_cmp(&(b / scale).ln().abs()))
        .ok_or_else(|| Error::SeedFailure("no Nehari sign change along the seed ray".into()))?;
    Field::new(dir.iter().map(|v| t * v).collect())
}

/// Lowest-energy Nehari point on the ray through `profile`.
///
/// Useful for reaching solutions that are not connected to the bifurcation
/// from zero, e.g. minimizers concentrated where `g > 0`.
pub fn ray_minimizer_seed(spec: &ProblemSpec, profile: &Field) -> Result<Field> {
    spec.mesh.check(profile)?;
    let scale = profile.sup_norm();
    if !(scale > 0.0) || !scale.is_finite() {
        return Err(Error::InvalidParameter("zero seed profile".into()));
    }
    let dir: Vec<f64> = profile.iter().map(|v| v / scale).collect();
    let energy_at = |t: f64| {
        let u: Vec<f64> = dir.iter().map(|v| t * v).collect();
        energy_raw(spec, spec.lambda, &u)
    };
    let t = nehari_ray_roots(spec, &dir, 1.0)
        .into_iter()
        .min_by(|a, b| energy_at(*a).total_cmp(&energy_at(*b)))
        .ok_or_else(|| Error::SeedFailure("no Nehari point along the profile ray".into()))?;
    Field::new(dir.iter().map(|v| t * v).collect())
}

/// Positive `t` with `I_p(t·dir) = 0`, scanning `near · 2^{±30}`.
fn nehari_ray_roots(spec: &ProblemSpec, dir: &[f64], near: f64) -> Vec<f64> {
    // Fiber function I_p(t d) / t², whose positive roots are the nontrivial
    // Nehari points on the ray.
    let fiber = |t: f64| {
        let u: Vec<f64> = dir.iter().map(|v| t * v).collect();
        nehari_raw(spec, spec.lambda, &u) / (t * t)
    };
    let ts: Vec<f64> = (-120..=120).map(|k| near * 2f64.powf(k as f64 / 4.0)).collect();
    let vals: Vec<f64> = ts.iter().map(|&t| fiber(t)).collect();
    let mut roots = Vec::new();
    for k in 0..ts.len() - 1 {
        if !vals[k].is_finite() || !vals[k + 1].is_finite() {
            continue;
        }
        if vals[k] == 0.0 || vals[k].signum() != vals[k + 1].signum() {
            let (mut lo, mut hi) = (ts[k], ts[k + 1]);
            let mut flo = vals[k];
            for _ in 0..100 {
                let mid = (lo * hi).sqrt();
                let fm = fiber(mid);
                if fm == 0.0 {
                    lo = mid;
                    hi = mid;
                    break;
                }
                if fm.signum() == flo.signum() {
                    lo = mid;
                    flo = fm;
                } else {
                    hi = mid;
                }
            }
            roots.push((lo * hi).sqrt());
        }
    }
    roots
}

/// `fixed_point_seed` followed by `newton_solve`.
pub fn seed_and_solve(spec: &ProblemSpec, scale: f64, tol: f64, max_iter: usize) -> Result<Field> {
    let seed = fixed_point_seed(spec, scale)?;
    newton_solve(spec, &seed, tol, max_iter)
}
