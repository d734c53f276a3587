use std::f64::consts::PI;

use kirchhoff_core::continuation::{
    solutions_at, trace_branch, trace_from_bifurcation, BranchPoint, ContinuationSettings, Side,
};
use kirchhoff_core::eigen::principal_eigenpair;
use kirchhoff_core::kirchhoff::{residual, ProblemSpec};
use kirchhoff_core::solver::{newton_solve, ray_minimizer_seed};
use kirchhoff_core::thresholds::{lambda_a_minus, sobolev_constant, OptimizerSettings};
use kirchhoff_core::{Field, Mesh};

fn reflected(u: &Field) -> Field {
    Field::new(u.iter().rev().copied().collect()).unwrap()
}

fn sup_diff(u: &Field, v: &Field) -> f64 {
    u.iter().zip(v.iter()).fold(0.0, |m: f64, (a, b)| m.max((a - b).abs()))
}

/// g = sin 3πx is symmetric about x = 1/2, so reflecting a solution gives a
/// solution. The minimizer behind λ_a⁻ sits where g > 0, off centre, and
/// seeds a negative-energy solution the symmetric bifurcating branch lacks.
#[test]
fn concentrated_minimizer_seeds_asymmetric_negative_energy_solution() {
    let n = 400;
    let (a, p) = (1.1e-5, 3.0);
    let mesh = Mesh::new(n).unwrap();
    let f = Field::constant(n, 1.0);
    let g = mesh.sample(|x| (3.0 * PI * x).sin()).unwrap();
    let pair = principal_eigenpair(&mesh, &f, 1e-11).unwrap();
    let lm = lambda_a_minus(&mesh, &f, &g, p, a, &OptimizerSettings::default()).unwrap();
    assert!(lm.converged && lm.value > 0.0 && lm.value < pair.lambda1, "{}", lm.value);

    let lambda = 0.5 * (lm.value + pair.lambda1);
    let spec = ProblemSpec::new(mesh, a, p, lambda, f.clone(), g.clone()).unwrap();
    let seed = ray_minimizer_seed(&spec, &lm.argument).unwrap();
    let u = newton_solve(&spec, &seed, 1e-11, 50).unwrap();
    let pt = BranchPoint::new(&spec, lambda, u.clone());
    assert!(pt.min_value > 0.0);
    assert!(pt.energy < 0.0, "{}", pt.energy);
    let asym = sup_diff(&u, &reflected(&u));
    assert!(asym > 0.1 * u.sup_norm(), "{asym}");

    let mirror = reflected(&u);
    let r = residual(&spec, &mirror).unwrap();
    let r0 = residual(&spec, &u).unwrap();
    assert!(r.sup_norm() <= 10.0 * r0.sup_norm() + 1e-8, "{}", r.sup_norm());

    let settings = ContinuationSettings {
        lambda_window: (-5.0 * pair.lambda1, 5.0 * pair.lambda1),
        max_step: 1.0,
        norm_max: 1e4,
        max_points: 3000,
        lambda_scale: Some(pair.lambda1),
        ..Default::default()
    };
    let family = spec.with_lambda(pair.lambda1);
    let symmetric = trace_from_bifurcation(&family, &pair, 0.01, Side::Right, &settings).unwrap();
    let on_symmetric = solutions_at(&spec, &[symmetric], 1e-6, 1e-11);
    assert!(on_symmetric.iter().all(|q| q.energy > 0.0), "{:?}", on_symmetric.iter().map(|q| q.energy).collect::<Vec<_>>());

    // The seeded branch passes through the mirror image as well.
    let seeded = trace_branch(&family, &pt, &settings).unwrap();
    let found = solutions_at(&spec, &[seeded], 1e-6, 1e-11);
    let scale = u.sup_norm();
    assert!(found.iter().any(|q| sup_diff(&q.u, &u) < 1e-6 * scale));
    assert!(found.iter().any(|q| sup_diff(&q.u, &mirror) < 1e-6 * scale));
}

#[test]
fn sobolev_constant_converges_under_refinement() {
    let set = OptimizerSettings::default();
    let s: Vec<f64> = [100, 200, 400]
        .iter()
        .map(|&n| sobolev_constant(&Mesh::new(n).unwrap(), 3.0, &set).unwrap().value)
        .collect();
    let (d1, d2) = ((s[1] - s[0]).abs(), (s[2] - s[1]).abs());
    assert!(d2 < 0.5 * d1, "{s:?}");
    assert!(d2 / s[2] < 1e-4, "{s:?}");
}
