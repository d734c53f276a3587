//! Runs one scenario: eigenpair, then per `a` the threshold report, the traced
//! branches and the checks; writes the artifacts.

use std::path::{Path, PathBuf};

use kirchhoff_core::continuation::{
    solutions_at, trace_branch, trace_from_bifurcation, Branch, BranchOrigin, BranchPoint, ContinuationSettings,
    Side,
};
use kirchhoff_core::eigen::{principal_eigenpair, EigenPair};
use kirchhoff_core::kirchhoff::ProblemSpec;
use kirchhoff_core::solver::ray_minimizer_seed;
use kirchhoff_core::thresholds::{threshold_report_with, OptimizerSettings, ThresholdReport};
use kirchhoff_core::{Field, Mesh};
use rayon::prelude::*;
use thiserror::Error;

use crate::checks::{evaluate, TheoremCheck, Verdict};
use crate::config::{ConfigError, ScenarioConfig};
use crate::report::{diagram_rows, emit_diagram, format_checks, format_thresholds, ReportError};

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("{0}")]
    Solver(#[from] kirchhoff_core::Error),
    #[error("writing {path}: {source}")]
    Output { path: PathBuf, source: ReportError },
}

/// Results for one value of `a`.
#[derive(Debug, Clone)]
pub struct ItemOutcome {
    pub a: f64,
    pub report: Option<ThresholdReport>,
    /// The branch through the bifurcation from zero comes first when it was
    /// traced; further branches are seeded away from it.
    pub branches: Vec<Branch>,
    pub errors: Vec<String>,
    pub checks: Vec<TheoremCheck>,
}

impl ItemOutcome {
    /// True when no branch through the bifurcation point could be traced.
    pub fn hard_failure(&self) -> bool {
        !self
            .branches
            .iter()
            .any(|b| matches!(b.origin, BranchOrigin::Bifurcation { .. }))
    }
}

#[derive(Debug, Clone)]
pub struct ScenarioOutcome {
    pub config: ScenarioConfig,
    pub eigenpair: EigenPair,
    pub items: Vec<ItemOutcome>,
}

impl ScenarioOutcome {
    pub fn any_failed_check(&self) -> bool {
        self.items
            .iter()
            .flat_map(|i| &i.checks)
            .any(|c| c.verdict == Verdict::Fail)
    }

    pub fn any_hard_failure(&self) -> bool {
        self.items.iter().any(ItemOutcome::hard_failure)
    }
}

pub fn continuation_settings(cfg: &ScenarioConfig) -> ContinuationSettings {
    ContinuationSettings {
        step: cfg.step,
        min_step: cfg.min_step,
        max_step: cfg.max_step,
        max_points: cfg.max_points,
        lambda_window: cfg.lambda_window,
        tol: cfg.tol,
        norm_floor: cfg.norm_floor,
        norm_max: cfg.norm_max,
        ..ContinuationSettings::default()
    }
}

pub fn optimizer_settings(cfg: &ScenarioConfig) -> OptimizerSettings {
    OptimizerSettings {
        starts: cfg.starts,
        max_iter: cfg.optimizer_max_iter,
        tol: cfg.optimizer_tol,
        seed: cfg.seed,
    }
}

/// Branch through the `λ_a⁻` minimizer, which can be concentrated where
/// `g > 0` and missed by the bifurcating branch. Traced at the midpoint of
/// `(λ_a⁻, λ₁)` when it is not already on `known`.
fn seeded_branch(
    family: &ProblemSpec,
    report: &ThresholdReport,
    known: &[Branch],
    cfg: &ScenarioConfig,
    settings: &ContinuationSettings,
) -> Option<kirchhoff_core::Result<Branch>> {
    let lm = report.lambda_a_minus.as_ref()?;
    if !(lm.value < report.lambda1) || !lm.feasible {
        return None;
    }
    let lambda = 0.5 * (lm.value + report.lambda1);
    let spec = family.with_lambda(lambda);
    let run = || -> kirchhoff_core::Result<Option<Branch>> {
        let seed = ray_minimizer_seed(&spec, &lm.argument)?;
        let start = BranchPoint::solved(&spec, &seed, cfg.tol)?;
        if start.min_value <= 0.0 {
            return Ok(None);
        }
        if on_known_branch(&spec, known, &start, cfg.tol) {
            return Ok(None);
        }
        let settings = ContinuationSettings {
            lambda_scale: Some(report.lambda1),
            ..settings.clone()
        };
        trace_branch(family, &start, &settings).map(Some)
    };
    match run() {
        Ok(Some(b)) => Some(Ok(b)),
        Ok(None) => None,
        Err(e) => Some(Err(e)),
    }
}

/// Whether `pt` equals a Newton-polished crossing of a known branch.
fn on_known_branch(spec: &ProblemSpec, known: &[Branch], pt: &BranchPoint, tol: f64) -> bool {
    let h = spec.mesh.h();
    let norm = pt.l2_norm;
    solutions_at(spec, known, 0.0, tol).iter().any(|q| {
        let d2: f64 = q.u.iter().zip(pt.u.iter()).map(|(a, b)| (a - b) * (a - b)).sum();
        (h * d2).sqrt() <= 1e-6 * (1.0 + norm)
    })
}

fn run_item(
    cfg: &ScenarioConfig,
    mesh: &Mesh,
    f: &Field,
    g: &Field,
    pair: &EigenPair,
    a: f64,
) -> ItemOutcome {
    let mut out = ItemOutcome {
        a,
        report: None,
        branches: Vec::new(),
        errors: Vec::new(),
        checks: Vec::new(),
    };
    match threshold_report_with(mesh, f, g, cfg.p, a, pair, &optimizer_settings(cfg)) {
        Ok(r) => out.report = Some(r),
        Err(e) => out.errors.push(format!("thresholds: {e}")),
    }
    let family = match ProblemSpec::new(*mesh, a, cfg.p, pair.lambda1, f.clone(), g.clone()) {
        Ok(s) => s,
        Err(e) => {
            out.errors.push(format!("problem: {e}"));
            return out;
        }
    };
    let settings = continuation_settings(cfg);
    // Only used if the direct bifurcation start fails.
    let side = match &out.report {
        Some(r) if r.g_phi1_p > 0.0 => Side::Left,
        _ => Side::Right,
    };
    match trace_from_bifurcation(&family, pair, cfg.amplitude, side, &settings) {
        Ok(b) => out.branches.push(b),
        Err(e) => out.errors.push(format!("branch 0 (bifurcation): {e}")),
    }
    if let Some(r) = &out.report {
        match seeded_branch(&family, r, &out.branches, cfg, &settings) {
            Some(Ok(b)) => out.branches.push(b),
            Some(Err(e)) => out
                .errors
                .push(format!("branch {} (seeded): {e}", out.branches.len())),
            None => {}
        }
    }
    if cfg.checks {
        if let Some(r) = &out.report {
            let scenario = format!("{} a={a}", cfg.name);
            out.checks = evaluate(&scenario, r, &diagram_rows(&out.branches));
        }
    }
    out
}

/// Computes everything for `cfg`; relative sample-file paths resolve against
/// `base_dir`. Per-item errors are recorded, not returned.
pub fn run_scenario(cfg: &ScenarioConfig, base_dir: &Path) -> Result<ScenarioOutcome, ScenarioError> {
    cfg.validate()?;
    let mesh = Mesh::new(cfg.mesh_n)?;
    let f = cfg.f.sample(&mesh, base_dir)?;
    let g = cfg.g.sample(&mesh, base_dir)?;
    let pair = principal_eigenpair(&mesh, &f, 1e-10)?;
    let items = cfg
        .a_values
        .par_iter()
        .map(|&a| run_item(cfg, &mesh, &f, &g, &pair, a))
        .collect();
    Ok(ScenarioOutcome {
        config: cfg.clone(),
        eigenpair: pair,
        items,
    })
}

pub fn diagram_path(out_dir: &Path, name: &str, item: usize) -> PathBuf {
    out_dir.join(format!("{name}_a{item}.csv"))
}

/// Writes `<name>_a<i>.csv` per item, `thresholds.txt` and `checks.txt`.
pub fn write_artifacts(outcome: &ScenarioOutcome, out_dir: &Path) -> Result<(), ScenarioError> {
    let io_err = |path: &Path, e: std::io::Error| ScenarioError::Output {
        path: path.to_path_buf(),
        source: ReportError::Io(e),
    };
    std::fs::create_dir_all(out_dir).map_err(|e| io_err(out_dir, e))?;
    let name = &outcome.config.name;
    let mut thresholds = String::new();
    let mut checks = String::new();
    for (i, item) in outcome.items.iter().enumerate() {
        if !item.branches.is_empty() {
            let path = diagram_path(out_dir, name, i);
            emit_diagram(&item.branches, &path).map_err(|source| ScenarioError::Output { path, source })?;
        }
        match &item.report {
            Some(r) => thresholds += &format_thresholds(i, r),
            None => thresholds += &format!("[item {i}]\na = {:.16e}\nunavailable = true\n", item.a),
        }
        thresholds.push('\n');
        checks += &format_checks(i, item.a, &item.branches, &item.checks, &item.errors);
        checks.push('\n');
    }
    for (file, text) in [("thresholds.txt", thresholds), ("checks.txt", checks)] {
        let path = out_dir.join(file);
        std::fs::write(&path, text).map_err(|e| io_err(&path, e))?;
    }
    Ok(())
}
