//! Pseudo-arclength continuation in `(u, λ)`.
//!
//! Arclength is measured in `h uᵀv + w λμ` with `w = 1/λ_s²`, where `λ_s` is a
//! reference eigenvalue scale, so `u` and `λ` steps are comparable.

use std::fmt;

use crate::eigen::EigenPair;
use crate::error::{Error, Result};
use crate::grid::{dot, neg_laplacian_vec, stiffness_energy, Field, Mesh};
use crate::kirchhoff::{energy_raw, jacobian_raw, nehari_raw, residual_raw, Eval, ProblemSpec};
use crate::linalg::Bordered;
use crate::solver::{fixed_point_seed, newton_solve};

#[derive(Debug, Clone, PartialEq)]
pub struct BranchPoint {
    pub lambda: f64,
    pub u: Field,
    /// `∫ |u'|²`.
    pub k: f64,
    pub l2_norm: f64,
    pub sup_norm: f64,
    pub energy: f64,
    pub nehari: f64,
    pub min_value: f64,
    pub is_turning: bool,
    /// Signed arclength from the branch start.
    pub arclength: f64,
    /// `dλ/ds` of the unit tangent; NaN when unknown.
    pub tangent_lambda: f64,
}

impl BranchPoint {
    /// Diagnostics for `u` at parameter `lambda`; does not check the residual.
    pub fn new(spec: &ProblemSpec, lambda: f64, u: Field) -> Self {
        let h = spec.mesh.h();
        let s = u.as_slice();
        let l2 = (h * dot(s, s)).sqrt();
        Self {
            lambda,
            k: stiffness_energy(h, s),
            l2_norm: l2,
            sup_norm: u.sup_norm(),
            energy: energy_raw(spec, lambda, s),
            nehari: nehari_raw(spec, lambda, s),
            min_value: u.min_value(),
            is_turning: false,
            arclength: 0.0,
            tangent_lambda: f64::NAN,
            u,
        }
    }

    /// Newton-solves at `spec.lambda` from `u0` and wraps the result.
    pub fn solved(spec: &ProblemSpec, u0: &Field, tol: f64) -> Result<Self> {
        let u = newton_solve(spec, u0, tol, 50)?;
        Ok(Self::new(spec, spec.lambda, u))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BranchOrigin {
    Bifurcation { lambda1: f64 },
    Seeded { lambda: f64 },
}

impl fmt::Display for BranchOrigin {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BranchOrigin::Bifurcation { lambda1 } => write!(f, "bifurcation from zero at {lambda1:.10e}"),
            BranchOrigin::Seeded { lambda } => write!(f, "seeded at {lambda:.10e}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopReason {
    WindowExit,
    NormFloor,
    NormMax,
    MaxPoints,
    PositivityLost,
    SolverFailure,
}

impl fmt::Display for StopReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            StopReason::WindowExit => "window-exit",
            StopReason::NormFloor => "norm-floor",
            StopReason::NormMax => "norm-max",
            StopReason::MaxPoints => "max-points",
            StopReason::PositivityLost => "positivity-lost",
            StopReason::SolverFailure => "solver-failure",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone)]
pub struct Branch {
    pub points: Vec<BranchPoint>,
    pub turning_lambdas: Vec<f64>,
    pub origin: BranchOrigin,
    pub mesh: Mesh,
    /// Why tracing stopped towards decreasing / increasing arclength.
    pub stops: [StopReason; 2],
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Left,
    Right,
}

#[derive(Debug, Clone)]
pub struct ContinuationSettings {
    pub step: f64,
    pub min_step: f64,
    pub max_step: f64,
    /// Per direction.
    pub max_points: usize,
    /// The first point outside the window is kept as the branch end, so
    /// every in-window λ the branch passes through is bracketed.
    pub lambda_window: (f64, f64),
    /// Relative residual tolerance of the corrector.
    pub tol: f64,
    pub max_corrector_iter: usize,
    /// Stop once the sup-norm drops below this.
    pub norm_floor: f64,
    pub norm_max: f64,
    pub require_positive: bool,
    /// `λ_s` in the arclength metric; defaults to the start λ.
    pub lambda_scale: Option<f64>,
}

impl Default for ContinuationSettings {
    fn default() -> Self {
        Self {
            step: 0.01,
            min_step: 1e-5,
            max_step: 0.1,
            max_points: 2000,
            lambda_window: (0.0, f64::INFINITY),
            tol: 1e-10,
            max_corrector_iter: 8,
            norm_floor: 1e-4,
            norm_max: 1e3,
            require_positive: true,
            lambda_scale: None,
        }
    }
}

impl ContinuationSettings {
    fn validate(&self) -> Result<()> {
        let ok = self.step > 0.0
            && self.min_step > 0.0
            && self.min_step <= self.step
            && self.step <= self.max_step
            && self.tol > 0.0
            && self.max_corrector_iter > 0
            && self.norm_floor >= 0.0
            && self.norm_max > self.norm_floor
            && self.lambda_window.0 < self.lambda_window.1;
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidParameter(format!("continuation settings {self:?}")))
        }
    }
}

const EASY_ITERS: usize = 3;
const GROW_AFTER: usize = 4;

struct Tracer<'a> {
    spec: &'a ProblemSpec,
    set: &'a ContinuationSettings,
    h: f64,
    w: f64,
}

fn sup(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

impl<'a> Tracer<'a> {
    fn new(spec: &'a ProblemSpec, set: &'a ContinuationSettings, lambda_ref: f64) -> Self {
        let ls = set.lambda_scale.unwrap_or(lambda_ref.abs()).max(1e-12);
        Self {
            spec,
            set,
            h: spec.mesh.h(),
            w: 1.0 / (ls * ls),
        }
    }

    fn inner(&self, au: &[f64], al: f64, bu: &[f64], bl: f64) -> f64 {
        self.h * dot(au, bu) + self.w * al * bl
    }

    fn normalize(&self, u: &mut [f64], l: &mut f64) {
        let n = self.inner(u, *l, u, *l).sqrt();
        u.iter_mut().for_each(|x| *x /= n);
        *l /= n;
    }

    fn f_lambda(&self, u: &[f64]) -> Vec<f64> {
        u.iter().enumerate().map(|(i, v)| -self.spec.f[i] * v).collect()
    }

    /// Solves the bordered system with constraint row `(h τ_u, w τ_λ)`.
    fn bordered_solve(
        &self,
        u: &[f64],
        lambda: f64,
        ev: &Eval,
        tu: &[f64],
        tl: f64,
        rhs_u: &[f64],
        rhs_c: f64,
    ) -> Result<(Vec<f64>, f64)> {
        let jac = jacobian_raw(self.spec, lambda, u, ev);
        let mut row: Vec<f64> = tu.iter().map(|v| self.h * v).collect();
        let mut corner = self.w * tl;
        // Scale the constraint row to the size of the Jacobian rows.
        let jn = (jac.tri.diag.iter().fold(0.0f64, |m, v| m.max(v.abs()))).max(1.0);
        let rn = sup(&row).max(corner.abs()).max(1e-300);
        let sc = jn / rn;
        row.iter_mut().for_each(|v| *v *= sc);
        corner *= sc;
        let sys = Bordered {
            a: &jac,
            col: self.f_lambda(u),
            row,
            corner,
        };
        let mut rhs = rhs_u.to_vec();
        rhs.push(rhs_c * sc);
        let mut x = sys.solve(&rhs)?;
        let dl = x.pop().unwrap_or(0.0);
        Ok((x, dl))
    }

    /// Unit tangent at `(u, λ)` oriented to have positive inner product with
    /// the reference direction.
    fn tangent(&self, u: &[f64], lambda: f64, ru: &[f64], rl: f64) -> Result<(Vec<f64>, f64)> {
        let ev = Eval::new(self.spec, u);
        let zeros = vec![0.0; u.len()];
        let (mut tu, mut tl) = self.bordered_solve(u, lambda, &ev, ru, rl, &zeros, 1.0)?;
        // The system gives DF z + F_λ ζ = 0; solve returned the negated update.
        tu.iter_mut().for_each(|v| *v = -*v);
        tl = -tl;
        if !tl.is_finite() || tu.iter().any(|v| !v.is_finite()) {
            return Err(Error::SingularSystem);
        }
        self.normalize(&mut tu, &mut tl);
        if self.inner(&tu, tl, ru, rl) < 0.0 {
            tu.iter_mut().for_each(|v| *v = -*v);
            tl = -tl;
        }
        Ok((tu, tl))
    }

    fn residual_ok(&self, lambda: f64, u: &[f64], ev: &Eval, f: &[f64]) -> bool {
        let scale = (self.spec.a * ev.k + 1.0) * sup(&ev.lu);
        let floor = 32.0 * f64::EPSILON * (self.spec.a * ev.k + 1.0) * 4.0 / (self.h * self.h) * sup(u);
        let _ = lambda;
        sup(f) <= (self.set.tol * scale).max(floor)
    }

    /// Newton on `F = 0` plus the hyperplane through the predictor
    /// orthogonal to `(tu, tl)`. Returns the corrected state and iterations.
    fn correct(
        &self,
        mut u: Vec<f64>,
        mut lambda: f64,
        tu: &[f64],
        tl: f64,
    ) -> Result<(Vec<f64>, f64, usize)> {
        let (u_pred, l_pred) = (u.clone(), lambda);
        for it in 0..=self.set.max_corrector_iter {
            let ev = Eval::new(self.spec, &u);
            let f = residual_raw(self.spec, lambda, &u, &ev);
            let du: Vec<f64> = u.iter().zip(&u_pred).map(|(a, b)| a - b).collect();
            let c = self.inner(&du, lambda - l_pred, tu, tl);
            if it > 0 && self.residual_ok(lambda, &u, &ev, &f) {
                return Ok((u, lambda, it));
            }
            if it == self.set.max_corrector_iter {
                break;
            }
            let (xu, xl) = self.bordered_solve(&u, lambda, &ev, tu, tl, &f, c)?;
            u.iter_mut().zip(&xu).for_each(|(a, d)| *a -= d);
            lambda -= xl;
            if !lambda.is_finite() || u.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite("corrector"));
            }
        }
        Err(Error::Convergence {
            what: "arclength corrector",
            iterations: self.set.max_corrector_iter,
        })
    }

    fn point_valid(&self, lambda: f64, u: &[f64]) -> bool {
        let ev = Eval::new(self.spec, u);
        let f = residual_raw(self.spec, lambda, u, &ev);
        if !self.residual_ok(lambda, u, &ev, &f) {
            return false;
        }
        // I_p(u) = h <F(u), u>, so it is bounded by the residual.
        let nehari = nehari_raw(self.spec, lambda, u);
        let bound = self.h * f.iter().zip(u).map(|(a, b)| (a * b).abs()).sum::<f64>();
        nehari.abs() <= 10.0 * bound + 1e-12 * (1.0 + ev.k * (1.0 + self.spec.a * ev.k))
    }

    /// Traces from `start` in one direction; returns the new points in order
    /// of increasing distance from the start.
    fn run(
        &self,
        start: &BranchPoint,
        t0u: &[f64],
        t0l: f64,
    ) -> (Vec<BranchPoint>, StopReason) {
        let set = self.set;
        let mut out = Vec::new();
        let mut prev_u = start.u.as_slice().to_vec();
        let mut prev_l = start.lambda;
        let (mut tan_u, mut tan_l) = (t0u.to_vec(), t0l);
        let mut dir_u = tan_u.clone();
        let mut dir_l = tan_l;
        let mut ds = set.step;
        let mut easy = 0usize;
        let mut s_acc = 0.0;
        let mut last_failure = StopReason::SolverFailure;

        while out.len() < set.max_points {
            let pred_u: Vec<f64> = prev_u.iter().zip(&dir_u).map(|(a, d)| a + ds * d).collect();
            let pred_l = prev_l + ds * dir_l;
            let attempt = self.correct(pred_u, pred_l, &dir_u, dir_l).and_then(|(u, l, it)| {
                let du: Vec<f64> = u.iter().zip(&prev_u).map(|(a, b)| a - b).collect();
                let dl = l - prev_l;
                let dist = self.inner(&du, dl, &du, dl).sqrt();
                if dist > 2.0 * ds || self.inner(&du, dl, &dir_u, dir_l) <= 0.0 {
                    return Err(Error::Convergence {
                        what: "arclength step (jumped)",
                        iterations: it,
                    });
                }
                if !self.point_valid(l, &u) {
                    return Err(Error::NoConvergence {
                        iterations: it,
                        residual: f64::NAN,
                    });
                }
                if set.require_positive && u.iter().any(|&v| v <= 0.0) {
                    return Err(Error::Infeasible("positivity".into()));
                }
                let (tu, tl) = self.tangent(&u, l, &du, dl)?;
                if self.inner(&tu, tl, &tan_u, tan_l) <= 0.0 {
                    return Err(Error::Convergence {
                        what: "tangent reversal",
                        iterations: it,
                    });
                }
                Ok((u, l, it, du, dl, dist, tu, tl))
            });
            match attempt {
                Err(e) => {
                    last_failure = if matches!(e, Error::Infeasible(_)) {
                        StopReason::PositivityLost
                    } else {
                        StopReason::SolverFailure
                    };
                    ds *= 0.5;
                    easy = 0;
                    if ds < set.min_step {
                        return (out, last_failure);
                    }
                }
                Ok((u, l, it, mut du, mut dl, dist, tu, tl)) => {
                    let outside = l < set.lambda_window.0 || l > set.lambda_window.1;
                    s_acc += dist;
                    let field = Field::from_vec_unchecked(u);
                    let mut pt = BranchPoint::new(self.spec, l, field);
                    pt.arclength = s_acc;
                    pt.tangent_lambda = tl;
                    let sup_norm = pt.sup_norm;
                    prev_u = pt.u.as_slice().to_vec();
                    prev_l = l;
                    out.push(pt);
                    if outside {
                        return (out, StopReason::WindowExit);
                    }
                    if sup_norm < set.norm_floor {
                        return (out, StopReason::NormFloor);
                    }
                    if sup_norm > set.norm_max {
                        return (out, StopReason::NormMax);
                    }
                    self.normalize(&mut du, &mut dl);
                    dir_u = du;
                    dir_l = dl;
                    tan_u = tu;
                    tan_l = tl;
                    if it <= EASY_ITERS {
                        easy += 1;
                        if easy >= GROW_AFTER {
                            ds = (2.0 * ds).min(set.max_step);
                            easy = 0;
                        }
                    } else {
                        easy = 0;
                    }
                }
            }
        }
        let _ = last_failure;
        (out, StopReason::MaxPoints)
    }
}

/// Traces the solution branch through `start` in both directions.
///
/// The forward direction is the one along which `h <u, τ_u>` grows, i.e.
/// away from the trivial solution. Points are ordered by arclength.
pub fn trace_branch(
    family: &ProblemSpec,
    start: &BranchPoint,
    settings: &ContinuationSettings,
) -> Result<Branch> {
    trace_branch_with_origin(
        family,
        start,
        settings,
        BranchOrigin::Seeded {
            lambda: start.lambda,
        },
    )
}

pub fn trace_branch_with_origin(
    family: &ProblemSpec,
    start: &BranchPoint,
    settings: &ContinuationSettings,
    origin: BranchOrigin,
) -> Result<Branch> {
    settings.validate()?;
    family.mesh.check(&start.u)?;
    let tracer = Tracer::new(family, settings, start.lambda);
    let u0 = start.u.as_slice();
    let ev = Eval::new(family, u0);
    let f = residual_raw(family, start.lambda, u0, &ev);
    if !tracer.residual_ok(start.lambda, u0, &ev, &f) {
        return Err(Error::InvalidParameter(
            "branch start does not satisfy the residual tolerance".into(),
        ));
    }
    let norm_u = (family.mesh.h() * dot(u0, u0)).sqrt().max(1e-300);
    let ref_u: Vec<f64> = u0.iter().map(|v| v / norm_u).collect();
    let (tu, tl) = match tracer.tangent(u0, start.lambda, &ref_u, 0.0) {
        Ok(t) => t,
        Err(_) => tracer.tangent(u0, start.lambda, &vec![0.0; u0.len()], 1.0)?,
    };
    let (mut tu, mut tl) = (tu, tl);
    if family.mesh.h() * dot(&tu, u0) < 0.0 {
        tu.iter_mut().for_each(|v| *v = -*v);
        tl = -tl;
    }
    let neg_u: Vec<f64> = tu.iter().map(|v| -v).collect();
    let (back, stop_back) = tracer.run(start, &neg_u, -tl);
    let (fwd, stop_fwd) = tracer.run(start, &tu, tl);

    let mut points: Vec<BranchPoint> = back
        .into_iter()
        .rev()
        .map(|mut p| {
            p.arclength = -p.arclength;
            p.tangent_lambda = -p.tangent_lambda;
            p
        })
        .collect();
    let mut first = start.clone();
    first.arclength = 0.0;
    first.tangent_lambda = tl;
    first.is_turning = false;
    points.push(first);
    points.extend(fwd);

    let mut branch = Branch {
        points,
        turning_lambdas: Vec::new(),
        origin,
        mesh: family.mesh,
        stops: [stop_back, stop_fwd],
    };
    mark_turning_points(&mut branch);
    Ok(branch)
}

/// Newton-corrected point near `(λ₁, amplitude φ₁)`.
///
/// λ is predicted as the value that puts `amplitude φ₁` on the Nehari set,
/// then `(u, λ)` is corrected with the φ₁-component of `u` held fixed. If
/// that fails, a fixed-point seed is tried at λ slightly on `side` of λ₁.
pub fn bifurcation_start(
    family: &ProblemSpec,
    eigenpair: &EigenPair,
    amplitude: f64,
    side: Side,
) -> Result<BranchPoint> {
    if !(amplitude > 0.0) || !amplitude.is_finite() {
        return Err(Error::InvalidParameter(format!("amplitude {amplitude}")));
    }
    family.mesh.check(&eigenpair.phi1)?;
    let h = family.mesh.h();
    let u0: Vec<f64> = eigenpair.phi1.iter().map(|v| amplitude * v).collect();
    let (k, m, nl) = crate::kirchhoff::integrals(family, &u0);
    let lambda_pred = (family.a * k * k + k - nl) / m;

    let settings = ContinuationSettings {
        tol: 1e-11,
        max_corrector_iter: 30,
        ..ContinuationSettings::default()
    };
    let tracer = Tracer::new(family, &settings, eigenpair.lambda1);
    let pn = (h * dot(eigenpair.phi1.as_slice(), eigenpair.phi1.as_slice())).sqrt();
    let tu: Vec<f64> = eigenpair.phi1.iter().map(|v| v / pn).collect();
    if let Ok((u, l, _)) = tracer.correct(u0.clone(), lambda_pred, &tu, 0.0) {
        if tracer.point_valid(l, &u) && u.iter().all(|&v| v > 0.0) {
            return Ok(BranchPoint::new(family, l, Field::from_vec_unchecked(u)));
        }
    }

    let offset = (lambda_pred - eigenpair.lambda1).abs().max(1e-6 * eigenpair.lambda1);
    let lambda = match side {
        Side::Left => eigenpair.lambda1 - offset,
        Side::Right => eigenpair.lambda1 + offset,
    };
    let spec = family.with_lambda(lambda);
    let seed = fixed_point_seed(&spec, amplitude)
        .map_err(|e| Error::SeedFailure(format!("bifurcation start: {e}")))?;
    let pt = BranchPoint::solved(&spec, &seed, 1e-11)
        .map_err(|e| Error::SeedFailure(format!("bifurcation start: {e}")))?;
    if pt.min_value <= 0.0 {
        return Err(Error::SeedFailure("bifurcation start is not positive".into()));
    }
    Ok(pt)
}

/// Bifurcation start followed by a two-sided trace.
pub fn trace_from_bifurcation(
    family: &ProblemSpec,
    eigenpair: &EigenPair,
    amplitude: f64,
    side: Side,
    settings: &ContinuationSettings,
) -> Result<Branch> {
    let start = bifurcation_start(family, eigenpair, amplitude, side)?;
    let settings = ContinuationSettings {
        lambda_scale: settings.lambda_scale.or(Some(eigenpair.lambda1)),
        ..settings.clone()
    };
    trace_branch_with_origin(
        family,
        &start,
        &settings,
        BranchOrigin::Bifurcation {
            lambda1: eigenpair.lambda1,
        },
    )
}

/// Refined turning-point λ values: where consecutive `Δλ` change sign and
/// the stored tangent λ-components agree.
pub fn detect_turning_points(branch: &Branch) -> Vec<f64> {
    turning_indices(branch).into_iter().map(|(_, l)| l).collect()
}

fn mark_turning_points(branch: &mut Branch) {
    let found = turning_indices(branch);
    for (i, _) in &found {
        branch.points[*i].is_turning = true;
    }
    branch.turning_lambdas = found.into_iter().map(|(_, l)| l).collect();
}

fn turning_indices(branch: &Branch) -> Vec<(usize, f64)> {
    let pts = &branch.points;
    let mut out = Vec::new();
    if pts.len() < 3 {
        return out;
    }
    for i in 1..pts.len() - 1 {
        let d0 = pts[i].lambda - pts[i - 1].lambda;
        let d1 = pts[i + 1].lambda - pts[i].lambda;
        if !(d0 * d1 < 0.0) {
            continue;
        }
        let t = [
            pts[i - 1].tangent_lambda,
            pts[i].tangent_lambda,
            pts[i + 1].tangent_lambda,
        ];
        let have_tangents = t.iter().all(|v| v.is_finite());
        if have_tangents && !(t[0] * t[2] < 0.0 || t[1] == 0.0) {
            // Δλ flipped without the tangent following: rounding noise.
            continue;
        }
        let lam = if have_tangents {
            let j = if t[0] * t[1] <= 0.0 { i - 1 } else { i };
            hermite_extremum(&pts[j], &pts[j + 1])
        } else {
            parabola_extremum(&pts[i - 1], &pts[i], &pts[i + 1])
        };
        out.push((i, lam));
    }
    out
}

/// Extremal λ of the cubic Hermite interpolant of λ(s) on one segment.
fn hermite_extremum(p0: &BranchPoint, p1: &BranchPoint) -> f64 {
    let len = p1.arclength - p0.arclength;
    if !(len.abs() > 0.0) {
        return p0.lambda;
    }
    let (y0, y1) = (p0.lambda, p1.lambda);
    let (m0, m1) = (p0.tangent_lambda * len, p1.tangent_lambda * len);
    let value = |t: f64| {
        let t2 = t * t;
        let t3 = t2 * t;
        (2.0 * t3 - 3.0 * t2 + 1.0) * y0
            + (t3 - 2.0 * t2 + t) * m0
            + (-2.0 * t3 + 3.0 * t2) * y1
            + (t3 - t2) * m1
    };
    let deriv = |t: f64| {
        let t2 = t * t;
        (6.0 * t2 - 6.0 * t) * y0
            + (3.0 * t2 - 4.0 * t + 1.0) * m0
            + (-6.0 * t2 + 6.0 * t) * y1
            + (3.0 * t2 - 2.0 * t) * m1
    };
    let (mut lo, mut hi) = (0.0, 1.0);
    let dlo = deriv(lo);
    if dlo * deriv(hi) > 0.0 {
        return if (y0 - y1).abs() > 0.0 && (y0 > y1) == (dlo > 0.0) {
            y0.max(y1)
        } else {
            y0.min(y1)
        };
    }
    for _ in 0..80 {
        let mid = 0.5 * (lo + hi);
        if deriv(mid) * dlo > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    value(0.5 * (lo + hi))
}

fn parabola_extremum(a: &BranchPoint, b: &BranchPoint, c: &BranchPoint) -> f64 {
    let (s0, s1, s2) = (a.arclength, b.arclength, c.arclength);
    let (l0, l1, l2) = (a.lambda, b.lambda, c.lambda);
    let d1 = (l1 - l0) / (s1 - s0);
    let d2 = (l2 - l1) / (s2 - s1);
    let curv = (d2 - d1) / (s2 - s0);
    if !(curv.abs() > 0.0) || !curv.is_finite() {
        return l1;
    }
    // λ(s) = l1 + slope (s - s1) + curv (s - s1)², slope at s1:
    let slope = d1 + curv * (s1 - s0);
    l1 - slope * slope / (4.0 * curv)
}

/// Interpolated branch states at `lambda`, deduplicated by L2 distance.
fn crossings(branches: &[Branch], lambda: f64, distinct_tol: f64) -> Vec<(Vec<f64>, f64, usize, usize)> {
    let mut found: Vec<(Vec<f64>, f64, usize, usize)> = Vec::new();
    for (bi, br) in branches.iter().enumerate() {
        let h = br.mesh.h();
        for (i, w) in br.points.windows(2).enumerate() {
            let (p, q) = (&w[0], &w[1]);
            if (p.lambda <= lambda) == (q.lambda <= lambda) {
                continue;
            }
            let theta = (lambda - p.lambda) / (q.lambda - p.lambda);
            let u: Vec<f64> = p
                .u
                .iter()
                .zip(q.u.iter())
                .map(|(a, b)| a + theta * (b - a))
                .collect();
            let dup = found.iter().any(|(v, hv, _, _)| {
                *hv == h
                    && v.len() == u.len()
                    && (h * v.iter().zip(&u).map(|(a, b)| (a - b) * (a - b)).sum::<f64>()).sqrt()
                        <= distinct_tol
            });
            if !dup {
                found.push((u, h, bi, i));
            }
        }
    }
    found
}

/// Number of distinct branch crossings of `lambda`.
pub fn count_solutions(branches: &[Branch], lambda: f64, distinct_tol: f64) -> usize {
    crossings(branches, lambda, distinct_tol).len()
}

/// Branch crossings of `spec.lambda`, each polished by Newton. Crossings
/// whose polish fails are returned unpolished.
pub fn solutions_at(
    spec: &ProblemSpec,
    branches: &[Branch],
    distinct_tol: f64,
    tol: f64,
) -> Vec<BranchPoint> {
    crossings(branches, spec.lambda, distinct_tol)
        .into_iter()
        .filter(|(u, ..)| u.len() == spec.mesh.n())
        .map(|(u, ..)| {
            let guess = Field::from_vec_unchecked(u);
            match BranchPoint::solved(spec, &guess, tol) {
                Ok(p) => p,
                Err(_) => BranchPoint::new(spec, spec.lambda, guess),
            }
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AsymptoticSample {
    pub lambda: f64,
    /// `‖u‖ = (∫ |u'|²)^{1/2}`.
    pub norm: f64,
    /// `1 - cos` of the stiffness-inner-product angle between `u` and φ₁.
    pub angle: f64,
}

pub fn asymptotic_diagnostics(branch: &Branch, pair: &EigenPair) -> Vec<AsymptoticSample> {
    let h = branch.mesh.h();
    let phi = pair.phi1.as_slice();
    let lphi = neg_laplacian_vec(h, phi);
    let kphi = stiffness_energy(h, phi);
    branch
        .points
        .iter()
        .map(|p| {
            let cross = h * dot(p.u.as_slice(), &lphi);
            let cos = if p.k > 0.0 {
                (cross / (p.k * kphi).sqrt()).clamp(-1.0, 1.0)
            } else {
                1.0
            };
            AsymptoticSample {
                lambda: p.lambda,
                norm: p.k.sqrt(),
                angle: 1.0 - cos,
            }
        })
        .collect()
}

fn close(u: &Field, v: &Field) -> bool {
    let d = u.iter().zip(v.iter()).fold(0.0, |m: f64, (a, b)| m.max((a - b).abs()));
    d <= 0.5 * u.sup_norm()
}

/// Natural continuation in `a` at fixed λ: Newton at each target value,
/// starting from the previous solution and subdividing the increment on
/// failure or when the state moves by more than half its sup-norm.
pub fn sweep_a(
    spec: &ProblemSpec,
    u0: &Field,
    a_targets: &[f64],
    tol: f64,
) -> Result<Vec<(f64, Field)>> {
    let mut out = Vec::with_capacity(a_targets.len());
    let mut a_cur = spec.a;
    let mut u = u0.clone();
    for &target in a_targets {
        let mut step = target - a_cur;
        let mut halvings = 0;
        while a_cur != target {
            let next = if (target - a_cur).abs() <= step.abs() {
                target
            } else {
                a_cur + step
            };
            match newton_solve(&spec.with_a(next), &u, tol, 50) {
                Ok(v) if v.min_value() > 0.0 && close(&u, &v) => {
                    u = v;
                    a_cur = next;
                }
                _ => {
                    step *= 0.5;
                    halvings += 1;
                    if halvings > 30 {
                        return Err(Error::Convergence {
                            what: "parameter sweep in a",
                            iterations: halvings,
                        });
                    }
                }
            }
        }
        out.push((target, u.clone()));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eigen::principal_eigenpair;
    use std::f64::consts::PI;

    fn family(n: usize, a: f64, p: f64, g: impl Fn(f64) -> f64) -> (ProblemSpec, EigenPair) {
        let mesh = Mesh::new(n).unwrap();
        let f = Field::constant(n, 1.0);
        let g = mesh.sample(g).unwrap();
        let pair = principal_eigenpair(&mesh, &f, 1e-11).unwrap();
        let spec = ProblemSpec::new(mesh, a, p, pair.lambda1, f, g).unwrap();
        (spec, pair)
    }

    #[test]
    fn linear_branch_follows_closed_form() {
        let (spec, pair) = family(99, 1.0, 4.0, |_| 0.0);
        let settings = ContinuationSettings {
            lambda_window: (0.0, 4.0 * pair.lambda1),
            max_step: 0.01,
            ..Default::default()
        };
        let br = trace_from_bifurcation(&spec, &pair, 0.01, Side::Right, &settings).unwrap();
        assert!(br.points.len() > 50, "{} {:?}", br.points.len(), br.stops);
        for p in &br.points {
            let want = pair.lambda1 * (1.0 + spec.a * p.k);
            assert!((p.lambda / want - 1.0).abs() < 1e-8);
        }
        assert!(detect_turning_points(&br).is_empty());
        for s in asymptotic_diagnostics(&br, &pair) {
            assert!(s.angle < 1e-10);
        }
    }

    #[test]
    fn window_exit_keeps_one_point_outside() {
        let (spec, pair) = family(99, 1.0, 4.0, |_| 0.0);
        let hi = 1.5 * pair.lambda1;
        let settings = ContinuationSettings {
            lambda_window: (0.0, hi),
            max_step: 0.05,
            ..Default::default()
        };
        let br = trace_from_bifurcation(&spec, &pair, 0.01, Side::Right, &settings).unwrap();
        assert_eq!(br.stops[1], StopReason::WindowExit);
        let n = br.points.len();
        assert!(br.points[n - 1].lambda > hi);
        assert!(br.points[..n - 1].iter().all(|p| p.lambda <= hi));
    }

    #[test]
    fn bifurcation_direction_follows_sign_of_nonlinear_moment() {
        let (left, pair) = family(199, 0.0, 4.0, |x| -(3.0 * PI * x).sin());
        let pt = bifurcation_start(&left, &pair, 0.01, Side::Left).unwrap();
        assert!(pt.lambda < pair.lambda1);
        let (right, pair) = family(199, 0.0, 4.0, |x| -(1.8 * PI * x).sin());
        let pt = bifurcation_start(&right, &pair, 0.01, Side::Right).unwrap();
        assert!(pt.lambda > pair.lambda1);
    }

    #[test]
    fn rightward_branch_turns_once() {
        let (spec, pair) = family(199, 0.0, 4.0, |x| -(1.8 * PI * x).sin());
        let settings = ContinuationSettings {
            lambda_window: (0.2 * pair.lambda1, 2.0 * pair.lambda1),
            norm_max: 50.0,
            ..Default::default()
        };
        let br = trace_from_bifurcation(&spec, &pair, 0.01, Side::Right, &settings).unwrap();
        let turns = detect_turning_points(&br);
        assert_eq!(turns.len(), 1, "{turns:?}");
        let lstar = turns[0];
        assert!(lstar > pair.lambda1);
        let mid = 0.5 * (pair.lambda1 + lstar);
        assert_eq!(count_solutions(std::slice::from_ref(&br), mid, 1e-6), 2);
        // Energy partition at a common λ.
        let sols = solutions_at(&spec.with_lambda(mid), &[br], 1e-6, 1e-11);
        let mut e: Vec<f64> = sols.iter().map(|p| p.energy).collect();
        e.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert!(e[0] < 0.0 && e[1] > 0.0, "{e:?}");
    }

    #[test]
    fn hermite_extremum_of_parabola() {
        let mk = |s: f64| {
            let mut p = BranchPoint::new(
                &family(5, 0.0, 3.0, |_| 0.0).0,
                1.0 - (s - 0.3) * (s - 0.3),
                Field::zeros(5),
            );
            p.arclength = s;
            p.tangent_lambda = -2.0 * (s - 0.3);
            p
        };
        let l = hermite_extremum(&mk(0.0), &mk(1.0));
        assert!((l - 1.0).abs() < 1e-12);
        let l = parabola_extremum(&mk(0.0), &mk(0.5), &mk(1.0));
        assert!((l - 1.0).abs() < 1e-12);
    }

    #[test]
    fn sweep_in_a_tracks_solution() {
        let (spec, pair) = family(99, 0.0, 4.0, |x| -(3.0 * PI * x).sin());
        let spec = spec.with_lambda(0.8 * pair.lambda1);
        let u0 = crate::solver::seed_and_solve(&spec, 1.0, 1e-11, 50).unwrap();
        let out = sweep_a(&spec, &u0, &[1e-3, 2e-3], 1e-11).unwrap();
        assert_eq!(out.len(), 2);
        assert!(out[1].1.sup_norm() > out[0].1.sup_norm());
    }
}
