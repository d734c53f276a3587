//! Solution-count, energy-sign and threshold assertions for one value of `a`.
//!
//! Every check reads only diagram rows and threshold-report values, so its
//! verdict can be recomputed from the emitted files.

use std::fmt;

use kirchhoff_core::thresholds::ThresholdReport;

use crate::report::{crossings, DiagramRow};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Pass,
    Fail,
    /// A constant the assertion depends on was flagged as unconverged.
    Inconclusive,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Pass => "pass",
            Verdict::Fail => "fail",
            Verdict::Inconclusive => "inconclusive",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TheoremCheck {
    pub id: &'static str,
    pub scenario: String,
    pub assertion: String,
    pub verdict: Verdict,
    pub measured: Vec<(String, f64)>,
}

/// Solutions at one λ, split by energy sign.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SignedCount {
    pub lambda: f64,
    pub total: usize,
    pub negative: usize,
    pub positive: usize,
}

impl SignedCount {
    pub fn at(rows: &[DiagramRow], lambda: f64) -> Self {
        let c = crossings(rows, lambda);
        Self {
            lambda,
            total: c.len(),
            negative: c.iter().filter(|x| x.energy < 0.0).count(),
            positive: c.iter().filter(|x| x.energy > 0.0).count(),
        }
    }

    fn measured(&self) -> Vec<(String, f64)> {
        vec![
            ("lambda".into(), self.lambda),
            ("count".into(), self.total as f64),
            ("negative_energy".into(), self.negative as f64),
            ("positive_energy".into(), self.positive as f64),
        ]
    }
}

/// Smallest fold-row λ above `above` on branch 0 (the bifurcating one).
pub fn first_fold_above(rows: &[DiagramRow], above: f64) -> Option<f64> {
    rows.iter()
        .filter(|r| r.branch_id == 0 && r.is_turning && r.lambda > above)
        .map(|r| r.lambda)
        .min_by(f64::total_cmp)
}

struct Checks<'a> {
    scenario: &'a str,
    rows: &'a [DiagramRow],
    out: Vec<TheoremCheck>,
}

impl Checks<'_> {
    fn push(
        &mut self,
        id: &'static str,
        assertion: String,
        ok: bool,
        flagged: bool,
        measured: Vec<(String, f64)>,
    ) {
        let verdict = match (flagged, ok) {
            (true, _) => Verdict::Inconclusive,
            (false, true) => Verdict::Pass,
            (false, false) => Verdict::Fail,
        };
        self.out.push(TheoremCheck {
            id,
            scenario: self.scenario.to_string(),
            assertion,
            verdict,
            measured,
        });
    }

    fn at_least(&mut self, id: &'static str, lambda: f64, total: usize, neg: usize, pos: usize, flagged: bool) {
        let c = SignedCount::at(self.rows, lambda);
        let ok = c.total >= total && c.negative >= neg && c.positive >= pos;
        let mut text = format!("at lambda = {lambda:.6e}: >= {total} solutions");
        if neg > 0 {
            text += &format!(", >= {neg} with J < 0");
        }
        if pos > 0 {
            text += &format!(", >= {pos} with J > 0");
        }
        self.push(id, text, ok, flagged, c.measured());
    }

    fn exactly(&mut self, id: &'static str, lambda: f64, total: usize) {
        let c = SignedCount::at(self.rows, lambda);
        self.push(
            id,
            format!("at lambda = {lambda:.6e}: exactly {total} solutions"),
            c.total == total,
            false,
            c.measured(),
        );
    }

    /// No branch point with `lo < λ < hi`.
    fn none_between(&mut self, id: &'static str, lo: f64, hi: f64, flagged: bool) {
        let bad = self
            .rows
            .iter()
            .filter(|r| r.lambda > lo && r.lambda < hi)
            .map(|r| r.lambda)
            .min_by(f64::total_cmp);
        let mut measured = vec![
            ("lower".into(), lo),
            ("upper".into(), hi),
            ("violations".into(), self.rows.iter().filter(|r| r.lambda > lo && r.lambda < hi).count() as f64),
        ];
        if let Some(b) = bad {
            measured.push(("first_violation".into(), b));
        }
        self.push(
            id,
            format!("no solution with {lo:.6e} < lambda < {hi:.6e}"),
            bad.is_none(),
            flagged,
            measured,
        );
    }

    /// Two solutions of opposite energy sign between λ₁ and the first fold.
    fn two_right_of(&mut self, id: &'static str, l1: f64) {
        match first_fold_above(self.rows, l1) {
            Some(fold) => self.at_least(id, 0.5 * (l1 + fold), 2, 1, 1, false),
            None => self.push(
                id,
                "a fold right of lambda1 bounds a two-solution window".into(),
                false,
                false,
                vec![("lambda1".into(), l1)],
            ),
        }
    }
}

/// Assertions that apply to the regime of `report` (sign of `∫gφ₁^p`, `p`, `a`).
pub fn evaluate(scenario: &str, report: &ThresholdReport, rows: &[DiagramRow]) -> Vec<TheoremCheck> {
    let mut c = Checks {
        scenario,
        rows,
        out: Vec::new(),
    };
    let (a, p, l1, gp) = (report.a, report.p, report.lambda1, report.g_phi1_p);
    let cl = &report.closed;
    let sp_flag = !report.s_p.converged;
    let gp_flag = report.gamma_p.as_ref().is_some_and(|v| !v.converged);

    if a == 0.0 {
        c.at_least("semilinear.exists-left", 0.5 * l1, 1, 0, 0, false);
        if gp > 0.0 {
            c.exactly("semilinear.none-right", 1.2 * l1, 0);
        } else if gp < 0.0 {
            c.two_right_of("semilinear.two-right", l1);
            let folds = rows.iter().filter(|r| r.is_turning).count();
            c.push(
                "semilinear.single-fold",
                "exactly one fold".into(),
                folds == 1,
                false,
                vec![("folds".into(), folds as f64)],
            );
        }
        return c.out;
    }

    if p > 4.0 {
        c.at_least("supercritical.positive-energy-left", 0.5 * l1, 1, 0, 1, false);
        match cl.delta_a_plus {
            Some(d) if gp >= 0.0 => {
                c.at_least("supercritical.two-right", l1 + 0.5 * d, 2, 1, 1, sp_flag);
                let fold = first_fold_above(rows, l1);
                c.push(
                    "supercritical.fold-beyond-delta",
                    format!("first fold right of lambda1 at or beyond lambda1 + {d:.6e}"),
                    fold.is_some_and(|f| f >= l1 + d - 1e-6),
                    sp_flag,
                    vec![
                        ("delta_a_plus".into(), d),
                        ("fold".into(), fold.unwrap_or(f64::NAN)),
                    ],
                );
            }
            _ => c.two_right_of("supercritical.two-right", l1),
        }
    } else if p == 4.0 {
        let Some(g0) = report.gamma0.as_ref() else {
            return c.out;
        };
        let flag = !g0.converged;
        if a < g0.value {
            c.at_least("quartic.positive-energy-left", 0.5 * l1, 1, 0, 1, flag);
            if gp <= 0.0 || a > gp / (l1 * l1) {
                c.two_right_of("quartic.two-right", l1);
            }
        } else if a >= 1.2 * g0.value {
            c.none_between("quartic.none-left", 0.0, l1 - 1e-9, flag);
            c.at_least("quartic.negative-energy-right", 1.2 * l1, 1, 1, 0, flag);
            let fold = rows.iter().find(|r| r.is_turning && r.lambda <= 1.5 * l1);
            c.push(
                "quartic.no-fold",
                "no fold with lambda <= 1.5 lambda1".into(),
                fold.is_none(),
                flag,
                vec![("fold".into(), fold.map_or(f64::NAN, |r| r.lambda))],
            );
        }
    } else if gp > 0.0 {
        let lo = cl.lambda_a_plus.map_or(0.0, |v| v.max(0.0));
        c.at_least("subquartic.two-left", 0.5 * (lo + l1), 2, 1, 1, false);
        c.at_least("subquartic.negative-energy-right", 1.2 * l1, 1, 1, 0, false);
        if let (Some(thr), Some(big)) = (cl.a_nonexistence, cl.big_lambda_a_plus) {
            if a > thr {
                c.none_between("subquartic.none-below-Lambda", 0.0, big - 1e-9, sp_flag);
            }
        }
    } else if gp < 0.0 {
        c.at_least("subquartic.negative-energy-right", 1.2 * l1, 1, 1, 0, false);
        if let Some(a0) = cl.a0_p {
            if a < a0 {
                c.at_least("subquartic.two-left", 0.5 * l1, 2, 1, 1, gp_flag);
                if let Some(d) = cl.delta_bar_a {
                    c.at_least("subquartic.three-right", l1 + 0.5 * d, 3, 2, 1, gp_flag);
                }
            } else if let Some(lm) = report.lambda_a_minus.as_ref() {
                if lm.value < l1 {
                    let flag = !lm.converged || gp_flag;
                    c.at_least("subquartic.two-above-lambda-minus", 0.5 * (lm.value + l1), 2, 1, 1, flag);
                    let best = [1e-1, 1e-2, 1e-3, 1e-4, 1e-5]
                        .iter()
                        .map(|e| SignedCount::at(rows, l1 * (1.0 + e)))
                        .find(|s| s.total >= 3 && s.negative >= 2 && s.positive >= 1)
                        .unwrap_or_else(|| SignedCount::at(rows, l1 * 1.001));
                    c.push(
                        "subquartic.three-right",
                        "some lambda just right of lambda1 has >= 3 solutions, 2 with J < 0, 1 with J > 0".into(),
                        best.total >= 3 && best.negative >= 2 && best.positive >= 1,
                        flag,
                        best.measured(),
                    );
                }
            }
        }
        if let (Some(astar), Some(big)) = (cl.a_star_p, cl.big_lambda_a_minus) {
            if a > astar {
                c.none_between("subquartic.none-left", 0.0, big.min(l1) + 1e-12, gp_flag || sp_flag);
            }
        }
    }
    c.out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rows(path: &[(f64, f64)], turning: &[usize]) -> Vec<DiagramRow> {
        path.iter()
            .enumerate()
            .map(|(i, &(lambda, energy))| DiagramRow {
                branch_id: 0,
                point_index: i,
                lambda,
                l2_norm: i as f64,
                sup_norm: i as f64,
                k: 1.0,
                energy,
                nehari: 0.0,
                min_value: 0.1,
                is_turning: turning.contains(&i),
            })
            .collect()
    }

    #[test]
    fn signed_count_interpolates_energy() {
        let r = rows(&[(1.0, -1.0), (3.0, -3.0), (2.0, 5.0), (0.0, 5.0)], &[1]);
        let c = SignedCount::at(&r, 2.5);
        assert_eq!((c.total, c.negative, c.positive), (2, 1, 1));
        assert_eq!(first_fold_above(&r, 1.0), Some(3.0));
        assert_eq!(first_fold_above(&r, 3.0), None);
    }

    #[test]
    fn flagged_inputs_never_pass_or_fail() {
        let r = rows(&[(1.0, 1.0), (2.0, 1.0)], &[]);
        let mut c = Checks {
            scenario: "t",
            rows: &r,
            out: Vec::new(),
        };
        c.at_least("x", 1.5, 1, 0, 0, true);
        c.at_least("y", 1.5, 1, 0, 0, false);
        c.at_least("z", 1.5, 2, 0, 0, false);
        c.none_between("w", 0.0, 1.5, false);
        let v: Vec<Verdict> = c.out.iter().map(|t| t.verdict).collect();
        assert_eq!(
            v,
            [Verdict::Inconclusive, Verdict::Pass, Verdict::Fail, Verdict::Fail]
        );
    }
}
