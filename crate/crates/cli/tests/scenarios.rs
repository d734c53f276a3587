use std::path::Path;

use kirchhoff_cli::checks::evaluate;
use kirchhoff_cli::presets;
use kirchhoff_cli::report::{crossings, parse_diagram};
use kirchhoff_cli::scenario::{diagram_path, run_scenario, write_artifacts};
use kirchhoff_core::continuation::count_solutions;

#[test]
fn csv_crossings_agree_with_branch_counts() {
    let cfg = presets::load("fig2a").unwrap();
    let outcome = run_scenario(&cfg, Path::new(".")).unwrap();
    let dir = tempfile::tempdir().unwrap();
    write_artifacts(&outcome, dir.path()).unwrap();
    let l1 = outcome.eigenpair.lambda1;
    for (i, item) in outcome.items.iter().enumerate() {
        let text = std::fs::read_to_string(diagram_path(dir.path(), &cfg.name, i)).unwrap();
        let rows = parse_diagram(&text).unwrap();
        for k in 1..40 {
            let lambda = l1 * (0.3 + 0.05 * k as f64);
            assert_eq!(
                crossings(&rows, lambda).len(),
                count_solutions(&item.branches, lambda, cfg.distinct_tol),
                "a = {}, lambda = {lambda}",
                item.a
            );
        }
    }
}

#[test]
fn verdicts_recompute_from_emitted_diagrams() {
    let dir = tempfile::tempdir().unwrap();
    for name in ["fig1b", "fig3c", "fig5b", "fig6b"] {
        let cfg = presets::load(name).unwrap();
        let outcome = run_scenario(&cfg, Path::new(".")).unwrap();
        let out = dir.path().join(name);
        write_artifacts(&outcome, &out).unwrap();
        for (i, item) in outcome.items.iter().enumerate() {
            let text = std::fs::read_to_string(diagram_path(&out, name, i)).unwrap();
            let rows = parse_diagram(&text).unwrap();
            let scenario = format!("{} a={}", cfg.name, item.a);
            let again = evaluate(&scenario, item.report.as_ref().unwrap(), &rows);
            // Debug text compares NaN measurements as equal.
            assert_eq!(format!("{again:?}"), format!("{:?}", item.checks), "{name} item {i}");
        }
        let checks = std::fs::read_to_string(out.join("checks.txt")).unwrap();
        assert!(checks.contains("| pass |"));
    }
}

#[test]
fn every_preset_passes_its_checks() {
    for name in presets::names() {
        let cfg = presets::load(name).unwrap();
        let outcome = run_scenario(&cfg, Path::new(".")).unwrap();
        assert!(!outcome.any_hard_failure(), "{name}");
        for item in &outcome.items {
            assert!(!item.checks.is_empty(), "{name} a={}", item.a);
            for c in &item.checks {
                assert_eq!(c.verdict.to_string(), "pass", "{name}: {c:?}");
            }
        }
    }
}
