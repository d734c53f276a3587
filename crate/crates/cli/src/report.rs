//! Diagram CSVs and the structured-text reports.

use std::fmt::Write as _;
use std::io::{self, Write};
use std::path::Path;

use kirchhoff_core::continuation::Branch;
use kirchhoff_core::thresholds::{ThresholdReport, VariationalValue};
use thiserror::Error;

use crate::checks::TheoremCheck;

pub const DIAGRAM_HEADER: &str =
    "branch_id,point_index,lambda,l2_norm,sup_norm,K,energy,nehari,min_value,is_turning";

#[derive(Debug, Error)]
pub enum ReportError {
    #[error("no branches to write")]
    Empty,
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error("diagram line {line}: {msg}")]
    Parse { line: usize, msg: String },
}

/// One CSV row: a branch point without its state vector.
#[derive(Debug, Clone, PartialEq)]
pub struct DiagramRow {
    pub branch_id: usize,
    pub point_index: usize,
    pub lambda: f64,
    pub l2_norm: f64,
    pub sup_norm: f64,
    pub k: f64,
    pub energy: f64,
    pub nehari: f64,
    pub min_value: f64,
    pub is_turning: bool,
}

pub fn diagram_rows(branches: &[Branch]) -> Vec<DiagramRow> {
    branches
        .iter()
        .enumerate()
        .flat_map(|(b, br)| {
            br.points.iter().enumerate().map(move |(i, p)| DiagramRow {
                branch_id: b,
                point_index: i,
                lambda: p.lambda,
                l2_norm: p.l2_norm,
                sup_norm: p.sup_norm,
                k: p.k,
                energy: p.energy,
                nehari: p.nehari,
                min_value: p.min_value,
                is_turning: p.is_turning,
            })
        })
        .collect()
}

// 17 significant digits: parsing the text back gives the same f64.
fn num(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn write_diagram(rows: &[DiagramRow], mut out: impl Write) -> io::Result<()> {
    writeln!(out, "{DIAGRAM_HEADER}")?;
    for r in rows {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{}",
            r.branch_id,
            r.point_index,
            num(r.lambda),
            num(r.l2_norm),
            num(r.sup_norm),
            num(r.k),
            num(r.energy),
            num(r.nehari),
            num(r.min_value),
            r.is_turning
        )?;
    }
    Ok(())
}

/// Writes the branches to `path` as CSV.
pub fn emit_diagram(branches: &[Branch], path: &Path) -> Result<(), ReportError> {
    if branches.is_empty() {
        return Err(ReportError::Empty);
    }
    let mut buf = Vec::new();
    write_diagram(&diagram_rows(branches), &mut buf)?;
    std::fs::write(path, buf)?;
    Ok(())
}

pub fn parse_diagram(text: &str) -> Result<Vec<DiagramRow>, ReportError> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h == DIAGRAM_HEADER => {}
        _ => {
            return Err(ReportError::Parse {
                line: 1,
                msg: "missing header".into(),
            })
        }
    }
    let mut rows = Vec::new();
    for (idx, line) in lines {
        let err = |msg: &str| ReportError::Parse {
            line: idx + 1,
            msg: msg.into(),
        };
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 10 {
            return Err(err("expected 10 fields"));
        }
        let int = |s: &str| s.parse::<usize>().map_err(|_| err("bad integer"));
        let float = |s: &str| s.parse::<f64>().map_err(|_| err("bad number"));
        rows.push(DiagramRow {
            branch_id: int(f[0])?,
            point_index: int(f[1])?,
            lambda: float(f[2])?,
            l2_norm: float(f[3])?,
            sup_norm: float(f[4])?,
            k: float(f[5])?,
            energy: float(f[6])?,
            nehari: float(f[7])?,
            min_value: float(f[8])?,
            is_turning: f[9].parse().map_err(|_| err("bad boolean"))?,
        });
    }
    Ok(rows)
}

/// A branch segment crossing a given λ, with linearly interpolated columns.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Crossing {
    pub branch_id: usize,
    pub point_index: usize,
    pub energy: f64,
    pub l2_norm: f64,
}

/// Segments between consecutive rows of one branch that cross `lambda`.
pub fn crossings(rows: &[DiagramRow], lambda: f64) -> Vec<Crossing> {
    rows.windows(2)
        .filter(|w| w[0].branch_id == w[1].branch_id)
        .filter(|w| (w[0].lambda <= lambda) != (w[1].lambda <= lambda))
        .map(|w| {
            let t = (lambda - w[0].lambda) / (w[1].lambda - w[0].lambda);
            Crossing {
                branch_id: w[0].branch_id,
                point_index: w[0].point_index,
                energy: w[0].energy + t * (w[1].energy - w[0].energy),
                l2_norm: w[0].l2_norm + t * (w[1].l2_norm - w[0].l2_norm),
            }
        })
        .collect()
}

fn opt(x: Option<f64>) -> String {
    x.map_or_else(|| "n/a".to_string(), num)
}

fn variational(out: &mut String, key: &str, v: Option<&VariationalValue>) {
    match v {
        None => {
            let _ = writeln!(out, "{key} = n/a");
        }
        Some(v) => {
            let _ = writeln!(out, "{key} = {}", num(v.value));
            let _ = writeln!(out, "{key}.converged = {}", v.converged);
            let _ = writeln!(out, "{key}.feasible = {}", v.feasible);
            let _ = writeln!(out, "{key}.at_boundary = {}", v.at_boundary);
            let _ = writeln!(out, "{key}.stationarity = {}", num(v.stationarity));
        }
    }
}

/// One `[item N]` section of `thresholds.txt`.
pub fn format_thresholds(item: usize, r: &ThresholdReport) -> String {
    let mut s = String::new();
    let c = &r.closed;
    let _ = writeln!(s, "[item {item}]");
    for (k, v) in [
        ("a", r.a),
        ("p", r.p),
        ("lambda1", r.lambda1),
        ("lambda2", r.lambda2),
        ("g_sup", r.g_sup),
        ("g_phi1_p", r.g_phi1_p),
        ("phi1_p_norm_p", r.phi1_p_norm_p),
    ] {
        let _ = writeln!(s, "{k} = {}", num(v));
    }
    variational(&mut s, "S_p", Some(&r.s_p));
    variational(&mut s, "gamma0", r.gamma0.as_ref());
    variational(&mut s, "gamma_p", r.gamma_p.as_ref());
    variational(&mut s, "lambda_a_minus", r.lambda_a_minus.as_ref());
    for (k, v) in [
        ("B", c.b),
        ("delta_a_plus", c.delta_a_plus),
        ("rho_a", c.rho_a),
        ("lambda_a_plus", c.lambda_a_plus),
        ("Lambda_a_plus", c.big_lambda_a_plus),
        ("Lambda_a_minus", c.big_lambda_a_minus),
        ("a0_p", c.a0_p),
        ("a_star_p", c.a_star_p),
        ("t0", c.t0),
        ("delta_bar_a", c.delta_bar_a),
        ("rho0", c.rho0),
        ("rho1_a", c.rho1_a),
        ("a_nonexistence", c.a_nonexistence),
    ] {
        let _ = writeln!(s, "{k} = {}", opt(v));
    }
    s
}

pub fn format_checks(
    item: usize,
    a: f64,
    branches: &[Branch],
    checks: &[TheoremCheck],
    errors: &[String],
) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "[item {item}]");
    let _ = writeln!(s, "a = {}", num(a));
    for (i, b) in branches.iter().enumerate() {
        let _ = writeln!(
            s,
            "branch = {i} | {} | {} points | stopped: {}, {}",
            b.origin,
            b.points.len(),
            b.stops[0],
            b.stops[1]
        );
    }
    for e in errors {
        let _ = writeln!(s, "error = {}", e.replace('\n', " "));
    }
    for c in checks {
        let _ = writeln!(s, "check = {} | {} | {}", c.id, c.verdict, c.assertion);
        for (k, v) in &c.measured {
            let _ = writeln!(s, "  {k} = {}", num(*v));
        }
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(b: usize, i: usize, lambda: f64, energy: f64) -> DiagramRow {
        DiagramRow {
            branch_id: b,
            point_index: i,
            lambda,
            l2_norm: lambda.abs(),
            sup_norm: 1.0,
            k: 2.0,
            energy,
            nehari: 0.0,
            min_value: 1e-3,
            is_turning: i == 1,
        }
    }

    #[test]
    fn csv_round_trips_bit_for_bit() {
        let rows = vec![
            row(0, 0, std::f64::consts::PI, -1e-300),
            row(0, 1, 1.0 / 3.0, 5e300),
            row(1, 0, -0.0, 0.1 + 0.2),
        ];
        let mut buf = Vec::new();
        write_diagram(&rows, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with(DIAGRAM_HEADER));
        assert!(text.ends_with('\n') && !text.contains('\r'));
        assert_eq!(parse_diagram(&text).unwrap(), rows);
    }

    #[test]
    fn crossings_do_not_join_branches() {
        let rows = vec![
            row(0, 0, 0.0, -1.0),
            row(0, 1, 2.0, 1.0),
            row(0, 2, 0.5, 0.0),
            row(1, 0, 3.0, 0.0),
        ];
        let c = crossings(&rows, 1.0);
        assert_eq!(c.len(), 2);
        assert_eq!(c[0].energy, 0.0);
        // The jump from branch 0 to branch 1 is not a segment.
        assert!(crossings(&rows, 2.5).is_empty());
    }

    #[test]
    fn empty_branch_list_is_an_error() {
        let dir = tempfile::tempdir().unwrap();
        assert!(matches!(
            emit_diagram(&[], &dir.path().join("x.csv")),
            Err(ReportError::Empty)
        ));
    }

    #[test]
    fn malformed_diagram() {
        assert!(parse_diagram("").is_err());
        assert!(parse_diagram(&format!("{DIAGRAM_HEADER}\n1,2,3\n")).is_err());
    }
}
