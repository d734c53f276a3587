//! Flat `key = value` scenario files and `x y` sample files.
//!
//! ```text
//! # comment
//! p = 3
//! a_values = 1e-3, 1e-2
//! g = sine -1 3          # g(x) = -sin(3πx)
//! f = constant 1
//! lambda_window = 0.5, 40
//! ```
//!
//! A `preset = NAME` line starts from that preset; the file's other keys
//! override it.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};

use kirchhoff_core::{Field, Mesh};
use thiserror::Error;

use crate::presets;

#[derive(Debug, Error, PartialEq)]
pub enum ConfigError {
    #[error("line {line}: {msg}")]
    Syntax { line: usize, msg: String },
    #[error("line {line}: unknown key `{key}`")]
    UnknownKey { line: usize, key: String },
    #[error("line {line}: `{key}` given twice")]
    Duplicate { line: usize, key: String },
    #[error("`{key}`: {msg}")]
    Invalid { key: &'static str, msg: String },
    #[error("missing required key `{0}`")]
    Missing(&'static str),
    #[error("unknown preset `{0}`")]
    UnknownPreset(String),
    #[error("sample file {path}: {msg}")]
    Samples { path: String, msg: String },
}

/// A coefficient function on `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub enum FunctionSpec {
    Constant(f64),
    /// `amplitude · sin(frequency · π x)`.
    Sine { amplitude: f64, frequency: f64 },
    /// Linearly interpolated `x y` samples.
    File(PathBuf),
}

impl fmt::Display for FunctionSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FunctionSpec::Constant(c) => write!(f, "constant {c}"),
            FunctionSpec::Sine {
                amplitude,
                frequency,
            } => write!(f, "sine {amplitude} {frequency}"),
            FunctionSpec::File(p) => write!(f, "file {}", p.display()),
        }
    }
}

impl FunctionSpec {
    /// Samples on the mesh nodes; relative file paths resolve against `base`.
    pub fn sample(&self, mesh: &Mesh, base: &Path) -> Result<Field, ConfigError> {
        let values = match self {
            FunctionSpec::Constant(c) => vec![*c; mesh.n()],
            FunctionSpec::Sine {
                amplitude,
                frequency,
            } => mesh
                .nodes()
                .into_iter()
                .map(|x| amplitude * (frequency * std::f64::consts::PI * x).sin())
                .collect(),
            FunctionSpec::File(p) => {
                let path = if p.is_absolute() { p.clone() } else { base.join(p) };
                let text = std::fs::read_to_string(&path).map_err(|e| ConfigError::Samples {
                    path: path.display().to_string(),
                    msg: e.to_string(),
                })?;
                let s = parse_samples(&text).map_err(|e| ConfigError::Samples {
                    path: path.display().to_string(),
                    msg: e.to_string(),
                })?;
                mesh.nodes().into_iter().map(|x| s.at(x)).collect()
            }
        };
        Field::new(values).map_err(|e| ConfigError::Invalid {
            key: "f/g",
            msg: e.to_string(),
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub name: String,
    pub mesh_n: usize,
    pub p: f64,
    pub a_values: Vec<f64>,
    pub g: FunctionSpec,
    pub f: FunctionSpec,
    pub lambda_window: (f64, f64),
    pub step: f64,
    pub min_step: f64,
    pub max_step: f64,
    pub max_points: usize,
    /// Corrector tolerance.
    pub tol: f64,
    pub norm_floor: f64,
    pub norm_max: f64,
    /// Sup-norm of the first point off the trivial branch.
    pub amplitude: f64,
    /// Two interpolated states closer than this (L2) count as one solution.
    pub distinct_tol: f64,
    pub seed: u64,
    pub starts: usize,
    pub optimizer_tol: f64,
    pub optimizer_max_iter: usize,
    pub out_dir: PathBuf,
    pub checks: bool,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            name: "custom".into(),
            mesh_n: 400,
            p: 4.0,
            a_values: Vec::new(),
            g: FunctionSpec::Constant(0.0),
            f: FunctionSpec::Constant(1.0),
            lambda_window: (0.1, 40.0),
            step: 0.01,
            min_step: 1e-5,
            max_step: 1.0,
            max_points: 2000,
            tol: 1e-10,
            norm_floor: 1e-4,
            norm_max: 1e4,
            amplitude: 0.01,
            distinct_tol: 1e-6,
            seed: 0x5eed,
            starts: 16,
            optimizer_tol: 1e-8,
            optimizer_max_iter: 20_000,
            out_dir: PathBuf::from("out"),
            checks: true,
        }
    }
}

const KEYS: &[&str] = &[
    "preset",
    "name",
    "mesh_n",
    "p",
    "a_values",
    "g",
    "f",
    "lambda_window",
    "step",
    "min_step",
    "max_step",
    "max_points",
    "tol",
    "norm_floor",
    "norm_max",
    "amplitude",
    "distinct_tol",
    "seed",
    "starts",
    "optimizer_tol",
    "optimizer_max_iter",
    "out_dir",
    "checks",
];

/// `key -> (line, value)`.
type Entries = BTreeMap<String, (usize, String)>;

fn entries(text: &str) -> Result<Entries, ConfigError> {
    let mut out = Entries::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let body = raw.split('#').next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        let (key, value) = body.split_once('=').ok_or_else(|| ConfigError::Syntax {
            line,
            msg: "expected `key = value`".into(),
        })?;
        let key = key.trim();
        let value = value.trim();
        if !KEYS.contains(&key) {
            return Err(ConfigError::UnknownKey {
                line,
                key: key.into(),
            });
        }
        if value.is_empty() {
            return Err(ConfigError::Syntax {
                line,
                msg: format!("empty value for `{key}`"),
            });
        }
        if out.insert(key.to_string(), (line, value.to_string())).is_some() {
            return Err(ConfigError::Duplicate {
                line,
                key: key.into(),
            });
        }
    }
    Ok(out)
}

fn invalid(key: &'static str, msg: impl Into<String>) -> ConfigError {
    ConfigError::Invalid {
        key,
        msg: msg.into(),
    }
}

fn scalar(key: &'static str, v: &str) -> Result<f64, ConfigError> {
    let x: f64 = v
        .parse()
        .map_err(|_| invalid(key, format!("`{v}` is not a number")))?;
    if !x.is_finite() {
        return Err(invalid(key, "must be finite"));
    }
    Ok(x)
}

fn integer<T: std::str::FromStr>(key: &'static str, v: &str) -> Result<T, ConfigError> {
    v.parse()
        .map_err(|_| invalid(key, format!("`{v}` is not a nonnegative integer")))
}

fn list(key: &'static str, v: &str) -> Result<Vec<f64>, ConfigError> {
    v.split(',').map(|s| scalar(key, s.trim())).collect()
}

fn function(key: &'static str, v: &str) -> Result<FunctionSpec, ConfigError> {
    let mut parts = v.split_whitespace();
    let kind = parts.next().unwrap_or("");
    let rest: Vec<&str> = parts.collect();
    match (kind, rest.as_slice()) {
        ("constant", [c]) => Ok(FunctionSpec::Constant(scalar(key, c)?)),
        ("sine", [c, k]) => Ok(FunctionSpec::Sine {
            amplitude: scalar(key, c)?,
            frequency: scalar(key, k)?,
        }),
        ("file", [_, ..]) => {
            let path = v["file".len()..].trim();
            Ok(FunctionSpec::File(PathBuf::from(path)))
        }
        _ => Err(invalid(
            key,
            "expected `constant C`, `sine AMPLITUDE FREQUENCY` or `file PATH`",
        )),
    }
}

fn apply(cfg: &mut ScenarioConfig, key: &str, v: &str) -> Result<(), ConfigError> {
    match key {
        "name" => cfg.name = v.to_string(),
        "mesh_n" => cfg.mesh_n = integer("mesh_n", v)?,
        "p" => cfg.p = scalar("p", v)?,
        "a_values" => cfg.a_values = list("a_values", v)?,
        "g" => cfg.g = function("g", v)?,
        "f" => cfg.f = function("f", v)?,
        "lambda_window" => match list("lambda_window", v)?.as_slice() {
            [lo, hi] => cfg.lambda_window = (*lo, *hi),
            _ => return Err(invalid("lambda_window", "expected `LOW, HIGH`")),
        },
        "step" => cfg.step = scalar("step", v)?,
        "min_step" => cfg.min_step = scalar("min_step", v)?,
        "max_step" => cfg.max_step = scalar("max_step", v)?,
        "max_points" => cfg.max_points = integer("max_points", v)?,
        "tol" => cfg.tol = scalar("tol", v)?,
        "norm_floor" => cfg.norm_floor = scalar("norm_floor", v)?,
        "norm_max" => cfg.norm_max = scalar("norm_max", v)?,
        "amplitude" => cfg.amplitude = scalar("amplitude", v)?,
        "distinct_tol" => cfg.distinct_tol = scalar("distinct_tol", v)?,
        "seed" => cfg.seed = integer("seed", v)?,
        "starts" => cfg.starts = integer("starts", v)?,
        "optimizer_tol" => cfg.optimizer_tol = scalar("optimizer_tol", v)?,
        "optimizer_max_iter" => cfg.optimizer_max_iter = integer("optimizer_max_iter", v)?,
        "out_dir" => cfg.out_dir = PathBuf::from(v),
        "checks" => {
            cfg.checks = match v {
                "on" => true,
                "off" => false,
                _ => return Err(invalid("checks", "expected `on` or `off`")),
            }
        }
        _ => unreachable!("key list and match arms out of sync: {key}"),
    }
    Ok(())
}

impl ScenarioConfig {
    /// Parses and validates a scenario file.
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let own = entries(text)?;
        let mut cfg = ScenarioConfig::default();
        let mut required_seen = Vec::new();
        if let Some((_, name)) = own.get("preset") {
            let base = presets::text(name).ok_or_else(|| ConfigError::UnknownPreset(name.clone()))?;
            let base = entries(base)?;
            if base.contains_key("preset") {
                return Err(invalid("preset", "presets cannot be nested"));
            }
            for (k, (_, v)) in &base {
                apply(&mut cfg, k, v)?;
                required_seen.push(k.clone());
            }
        }
        for (k, (_, v)) in &own {
            if k != "preset" {
                apply(&mut cfg, k, v)?;
                required_seen.push(k.clone());
            }
        }
        for key in ["p", "a_values", "g"] {
            if !required_seen.iter().any(|k| k == key) {
                return Err(ConfigError::Missing(key));
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.name.is_empty() || self.name.chars().any(|c| c.is_whitespace() || c == '#') {
            return Err(invalid("name", "must be a single word"));
        }
        if !(3..=1_000_000).contains(&self.mesh_n) {
            return Err(invalid("mesh_n", "must lie in [3, 1000000]"));
        }
        if !(self.p > 2.0) || !self.p.is_finite() {
            return Err(invalid("p", "must exceed 2"));
        }
        if self.a_values.is_empty() {
            return Err(invalid("a_values", "needs at least one value"));
        }
        if self.a_values.iter().any(|a| !(*a >= 0.0) || !a.is_finite()) {
            return Err(invalid("a_values", "values must be finite and nonnegative"));
        }
        let (lo, hi) = self.lambda_window;
        if !(lo < hi) {
            return Err(invalid("lambda_window", "needs LOW < HIGH"));
        }
        if !(self.min_step > 0.0 && self.min_step <= self.step && self.step <= self.max_step) {
            return Err(invalid("step", "needs 0 < min_step <= step <= max_step"));
        }
        if self.max_points == 0 {
            return Err(invalid("max_points", "must be positive"));
        }
        for (key, v) in [
            ("tol", self.tol),
            ("norm_floor", self.norm_floor),
            ("amplitude", self.amplitude),
            ("distinct_tol", self.distinct_tol),
            ("optimizer_tol", self.optimizer_tol),
        ] {
            if !(v > 0.0) {
                return Err(invalid(key, "must be positive"));
            }
        }
        if !(self.norm_max > self.norm_floor) {
            return Err(invalid("norm_max", "must exceed norm_floor"));
        }
        if self.starts == 0 || self.optimizer_max_iter == 0 {
            return Err(invalid("starts", "optimizer budget must be positive"));
        }
        if let FunctionSpec::File(p) = &self.g {
            if p.as_os_str().is_empty() {
                return Err(invalid("g", "empty path"));
            }
        }
        Ok(())
    }
}

fn join(v: &[f64]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(", ")
}

/// Writes every field; `parse` of the output yields the same config.
impl fmt::Display for ScenarioConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "name = {}", self.name)?;
        writeln!(f, "mesh_n = {}", self.mesh_n)?;
        writeln!(f, "p = {}", self.p)?;
        writeln!(f, "a_values = {}", join(&self.a_values))?;
        writeln!(f, "g = {}", self.g)?;
        writeln!(f, "f = {}", self.f)?;
        writeln!(f, "lambda_window = {}, {}", self.lambda_window.0, self.lambda_window.1)?;
        writeln!(f, "step = {}", self.step)?;
        writeln!(f, "min_step = {}", self.min_step)?;
        writeln!(f, "max_step = {}", self.max_step)?;
        writeln!(f, "max_points = {}", self.max_points)?;
        writeln!(f, "tol = {}", self.tol)?;
        writeln!(f, "norm_floor = {}", self.norm_floor)?;
        writeln!(f, "norm_max = {}", self.norm_max)?;
        writeln!(f, "amplitude = {}", self.amplitude)?;
        writeln!(f, "distinct_tol = {}", self.distinct_tol)?;
        writeln!(f, "seed = {}", self.seed)?;
        writeln!(f, "starts = {}", self.starts)?;
        writeln!(f, "optimizer_tol = {}", self.optimizer_tol)?;
        writeln!(f, "optimizer_max_iter = {}", self.optimizer_max_iter)?;
        writeln!(f, "out_dir = {}", self.out_dir.display())?;
        writeln!(f, "checks = {}", if self.checks { "on" } else { "off" })
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum SampleError {
    #[error("line {line}: {msg}")]
    Line { line: usize, msg: String },
    #[error("need at least two samples")]
    TooFew,
}

/// Piecewise-linear function from `x y` rows.
#[derive(Debug, Clone, PartialEq)]
pub struct Samples {
    xs: Vec<f64>,
    ys: Vec<f64>,
}

impl Samples {
    pub fn xs(&self) -> &[f64] {
        &self.xs
    }

    pub fn ys(&self) -> &[f64] {
        &self.ys
    }

    /// Linear interpolation, constant beyond the first and last sample.
    pub fn at(&self, x: f64) -> f64 {
        let n = self.xs.len();
        if x <= self.xs[0] {
            return self.ys[0];
        }
        if x >= self.xs[n - 1] {
            return self.ys[n - 1];
        }
        let j = self.xs.partition_point(|&v| v <= x);
        let (x0, x1) = (self.xs[j - 1], self.xs[j]);
        let t = (x - x0) / (x1 - x0);
        self.ys[j - 1] + t * (self.ys[j] - self.ys[j - 1])
    }
}

/// Parses rows `x y` (whitespace or comma separated, `#` comments) with
/// `x` strictly increasing inside `[0, 1]`.
pub fn parse_samples(text: &str) -> Result<Samples, SampleError> {
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let body = raw.split('#').next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        let fields: Vec<&str> = body
            .split(|c: char| c == ',' || c.is_whitespace())
            .filter(|s| !s.is_empty())
            .collect();
        let [x, y] = fields.as_slice() else {
            return Err(SampleError::Line {
                line,
                msg: format!("expected two numbers, found {}", fields.len()),
            });
        };
        let parse = |s: &str| -> Result<f64, SampleError> {
            s.parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| SampleError::Line {
                    line,
                    msg: format!("`{s}` is not a finite number"),
                })
        };
        let (x, y) = (parse(x)?, parse(y)?);
        if !(0.0..=1.0).contains(&x) {
            return Err(SampleError::Line {
                line,
                msg: format!("x = {x} outside [0, 1]"),
            });
        }
        if xs.last().is_some_and(|&prev| x <= prev) {
            return Err(SampleError::Line {
                line,
                msg: "x must be strictly increasing".into(),
            });
        }
        xs.push(x);
        ys.push(y);
    }
    if xs.len() < 2 {
        return Err(SampleError::TooFew);
    }
    Ok(Samples { xs, ys })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const MINIMAL: &str = "p = 3\na_values = 0.001\ng = sine -1 3\n";

    #[test]
    fn minimal_file_takes_defaults() {
        let c = ScenarioConfig::parse(MINIMAL).unwrap();
        assert_eq!(c.p, 3.0);
        assert_eq!(c.a_values, vec![1e-3]);
        assert_eq!(
            c.g,
            FunctionSpec::Sine {
                amplitude: -1.0,
                frequency: 3.0
            }
        );
        assert_eq!(c.f, FunctionSpec::Constant(1.0));
        assert_eq!(c.mesh_n, 400);
    }

    #[test]
    fn comments_and_blank_lines() {
        let text = "# header\n\np = 4 # trailing\na_values = 0, 1e-4\n  g = constant 2  \n";
        let c = ScenarioConfig::parse(text).unwrap();
        assert_eq!(c.a_values, vec![0.0, 1e-4]);
        assert_eq!(c.g, FunctionSpec::Constant(2.0));
    }

    #[test]
    fn errors_carry_line_numbers() {
        assert_eq!(
            ScenarioConfig::parse("p = 3\nbogus = 1\n"),
            Err(ConfigError::UnknownKey {
                line: 2,
                key: "bogus".into()
            })
        );
        assert_eq!(
            ScenarioConfig::parse("p = 3\np = 4\n"),
            Err(ConfigError::Duplicate {
                line: 2,
                key: "p".into()
            })
        );
        assert!(matches!(
            ScenarioConfig::parse("p 3\n"),
            Err(ConfigError::Syntax { line: 1, .. })
        ));
        assert_eq!(
            ScenarioConfig::parse("p = 3\ng = constant 1\n"),
            Err(ConfigError::Missing("a_values"))
        );
    }

    #[test]
    fn rejects_invalid_values() {
        for bad in [
            "p = 2\na_values = 1\ng = constant 1\n",
            "p = 3\na_values = -1\ng = constant 1\n",
            "p = 3\na_values = 1\ng = sine 1\n",
            "p = 3\na_values = 1\ng = constant 1\nlambda_window = 5, 1\n",
            "p = 3\na_values = 1\ng = constant 1\nstep = 10\n",
            "p = 3\na_values = 1\ng = constant 1\nchecks = maybe\n",
            "p = 3\na_values = 1\ng = constant 1\nmesh_n = 2\n",
            "p = nan\na_values = 1\ng = constant 1\n",
        ] {
            assert!(
                matches!(ScenarioConfig::parse(bad), Err(ConfigError::Invalid { .. })),
                "{bad}"
            );
        }
    }

    #[test]
    fn preset_keys_are_overridable() {
        let c = ScenarioConfig::parse("preset = fig3b\nmesh_n = 100\n").unwrap();
        assert_eq!(c.name, "fig3b");
        assert_eq!(c.mesh_n, 100);
        assert_eq!(c.a_values, vec![0.008]);
        assert_eq!(
            ScenarioConfig::parse("preset = nope\n"),
            Err(ConfigError::UnknownPreset("nope".into()))
        );
    }

    #[test]
    fn file_paths_keep_spaces() {
        let c = ScenarioConfig::parse("p = 3\na_values = 1\ng = file data/my g.txt\n").unwrap();
        assert_eq!(c.g, FunctionSpec::File(PathBuf::from("data/my g.txt")));
    }

    #[test]
    fn samples_interpolate_linearly() {
        let s = parse_samples("0 0\n0.5, 1 # peak\n1 0\n").unwrap();
        assert_eq!(s.at(0.25), 0.5);
        assert_eq!(s.at(0.5), 1.0);
        assert_eq!(s.at(0.75), 0.5);
        assert_eq!(s.at(-1.0), 0.0);
    }

    #[test]
    fn sample_errors() {
        assert_eq!(parse_samples("0 1\n"), Err(SampleError::TooFew));
        assert!(matches!(parse_samples("0 1\n0 2\n"), Err(SampleError::Line { line: 2, .. })));
        assert!(matches!(parse_samples("0 1\n2 2\n"), Err(SampleError::Line { line: 2, .. })));
        assert!(matches!(parse_samples("0 1 3\n"), Err(SampleError::Line { line: 1, .. })));
        assert!(matches!(parse_samples("0 inf\n1 0\n"), Err(SampleError::Line { line: 1, .. })));
    }

    #[test]
    fn sampled_file_matches_sine() {
        let dir = tempfile::tempdir().unwrap();
        let rows: String = (0..=1000)
            .map(|i| {
                let x = i as f64 / 1000.0;
                format!("{x} {}\n", (std::f64::consts::PI * x).sin())
            })
            .collect();
        std::fs::write(dir.path().join("g.txt"), rows).unwrap();
        let mesh = Mesh::new(99).unwrap();
        let from_file = FunctionSpec::File("g.txt".into()).sample(&mesh, dir.path()).unwrap();
        let exact = FunctionSpec::Sine {
            amplitude: 1.0,
            frequency: 1.0,
        }
        .sample(&mesh, dir.path())
        .unwrap();
        for (a, b) in from_file.iter().zip(exact.iter()) {
            assert!((a - b).abs() < 1e-5);
        }
    }

    fn finite() -> impl Strategy<Value = f64> {
        prop_oneof![-1e6..1e6f64, 1e-12..1e-3f64]
    }

    proptest! {
        #[test]
        fn display_round_trips(
            n in 3usize..5000,
            p in 2.01..8.0f64,
            a in proptest::collection::vec(0.0..10.0f64, 1..5),
            c in finite(),
            k in finite(),
            lo in -100.0..0.0f64,
            width in 0.1..1000.0f64,
            seed in any::<u64>(),
            checks in any::<bool>(),
        ) {
            let cfg = ScenarioConfig {
                mesh_n: n,
                p,
                a_values: a,
                g: FunctionSpec::Sine { amplitude: c, frequency: k },
                lambda_window: (lo, lo + width),
                seed,
                checks,
                ..ScenarioConfig::default()
            };
            prop_assert_eq!(ScenarioConfig::parse(&cfg.to_string()).unwrap(), cfg);
        }

        #[test]
        fn parse_never_panics(text in "\\PC{0,200}") {
            let _ = ScenarioConfig::parse(&text);
            let _ = parse_samples(&text);
        }
    }
}
