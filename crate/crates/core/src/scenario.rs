//! Scenario files, built-in examples, and deterministic run output.
//!
//! A scenario bundles a family, a target submanifold, a sampling plan, and
//! a backend choice. The on-disk format is line oriented: `[section]`
//! headers, `key = value` lines, `#` starts a comment. Rationals stay
//! exact ("1/2", "-3/100"); expression values use the expression grammar;
//! intervals look like `(-1, 1)` with `-inf`/`inf` for missing endpoints.
//!
//! ```text
//! [scenario]   name
//! [dims]       n, m, ell, r (positive integer or "inf")
//! [family]     F1 .. Fell
//! [domain]     interval1 .. interval{n+m}; predicate (repeatable)
//! [z]          kind = slice | levelset; zeroed; g and constraints (repeatable)
//! [plan]       seed, mode, x_box1.., a_box1.., x_count, a_count, eps_alpha, eps_beta
//! [backend]    kind = exact | float; rank_tol, membership_tol (float only)
//! ```
//!
//! Serialization is canonical: fixed section and key order with fully
//! parenthesized expressions. The content hash is the SHA-256 of that
//! canonical form, so whitespace-only edits do not change it. Run files
//! carry no wall-clock data and use a fixed field order, so re-running an
//! identical scenario overwrites its run directory byte for byte.

use crate::defect::DefectReport;
use crate::expr::{self, Expr};
use crate::genericity::{GenericityReport, SamplingMode, SamplingPlan};
use crate::geometry::{
    DomainSpec, Interval, ParamFamily, Smoothness, SubmanifoldKind, SubmanifoldSpec,
};
use crate::linalg::{Rat, ScalarBackend};
use crate::local_model::{LocalModel, PropertyCheck, VerificationRecord};
use sha2::{Digest, Sha256};
use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ScenarioError {
    #[error("{path}: {message}")]
    Io { path: String, message: String },
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("{field}: {message}")]
    Validation { field: String, message: String },
    #[error("unknown built-in scenario {name:?} (known: example1, example2, example3, parabola)")]
    UnknownBuiltin { name: String },
}

fn parse_err(line: usize, message: impl Into<String>) -> ScenarioError {
    ScenarioError::Parse {
        line,
        message: message.into(),
    }
}

fn invalid(field: impl Into<String>, message: impl Into<String>) -> ScenarioError {
    ScenarioError::Validation {
        field: field.into(),
        message: message.into(),
    }
}

fn io_err(path: &Path, e: &std::io::Error) -> ScenarioError {
    ScenarioError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    }
}

/// A fully validated problem statement: what to compute and how.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub name: String,
    pub family: ParamFamily,
    pub z: SubmanifoldSpec,
    pub plan: SamplingPlan,
    pub backend: ScalarBackend,
}

impl Scenario {
    /// Cross-validates the pieces. The target must have positive
    /// codimension here: a slice with nothing zeroed is legitimate as a
    /// local model but meaningless as the surface a scenario studies.
    pub fn new(
        name: String,
        family: ParamFamily,
        z: SubmanifoldSpec,
        plan: SamplingPlan,
        backend: ScalarBackend,
    ) -> Result<Self, ScenarioError> {
        if name.trim().is_empty() {
            return Err(invalid("scenario.name", "must not be empty"));
        }
        if z.ambient_dim != family.ell() {
            return Err(invalid(
                "z",
                format!(
                    "ambient dimension {} does not match ell = {}",
                    z.ambient_dim,
                    family.ell()
                ),
            ));
        }
        if let SubmanifoldKind::Slice { zeroed } = &z.kind {
            if zeroed.is_empty() {
                return Err(invalid(
                    "z.zeroed",
                    "a scenario target needs positive codimension; zero out at least one coordinate",
                ));
            }
        }
        plan.validate(&family)
            .map_err(|e| invalid(format!("plan.{}", e.field), e.message))?;
        backend
            .validate()
            .map_err(|e| invalid("backend", e.to_string()))?;
        Ok(Scenario {
            name,
            family,
            z,
            plan,
            backend,
        })
    }
}

#[derive(Clone, Copy, PartialEq)]
enum Section {
    Scenario,
    Dims,
    Family,
    Domain,
    Z,
    Plan,
    Backend,
}

#[derive(Default)]
struct Raw {
    name: Option<String>,
    n: Option<usize>,
    m: Option<usize>,
    ell: Option<usize>,
    r: Option<Smoothness>,
    family: BTreeMap<usize, Expr>,
    intervals: BTreeMap<usize, Interval>,
    predicates: Vec<Expr>,
    z_kind: Option<String>,
    zeroed: Option<Vec<usize>>,
    g: Vec<Expr>,
    constraints: Vec<Expr>,
    seed: Option<u64>,
    mode: Option<SamplingMode>,
    x_boxes: BTreeMap<usize, Interval>,
    a_boxes: BTreeMap<usize, Interval>,
    x_count: Option<usize>,
    a_count: Option<usize>,
    eps_alpha: Option<Rat>,
    eps_beta: Option<Rat>,
    backend_kind: Option<String>,
    rank_tol: Option<f64>,
    membership_tol: Option<f64>,
}

fn set_once<T>(slot: &mut Option<T>, value: T, key: &str, line: usize) -> Result<(), ScenarioError> {
    if slot.is_some() {
        return Err(parse_err(line, format!("duplicate key {key:?}")));
    }
    *slot = Some(value);
    Ok(())
}

fn expr_at(value: &str, line: usize) -> Result<Expr, ScenarioError> {
    expr::parse(value).map_err(|e| parse_err(line, e.to_string()))
}

fn rat_at(value: &str, line: usize) -> Result<Rat, ScenarioError> {
    expr::parse_rational(value).map_err(|e| parse_err(line, e.to_string()))
}

fn int_at<T: std::str::FromStr>(value: &str, line: usize, what: &str) -> Result<T, ScenarioError> {
    value
        .parse::<T>()
        .map_err(|_| parse_err(line, format!("expected {what}, found {value:?}")))
}

fn interval_at(value: &str, line: usize) -> Result<Interval, ScenarioError> {
    let inner = value
        .strip_prefix('(')
        .and_then(|v| v.strip_suffix(')'))
        .ok_or_else(|| parse_err(line, "interval must look like (lo, hi)"))?;
    let (lo, hi) = inner
        .split_once(',')
        .ok_or_else(|| parse_err(line, "interval needs two comma-separated endpoints"))?;
    let lower = match lo.trim() {
        "-inf" => None,
        text => Some(rat_at(text, line)?),
    };
    let upper = match hi.trim() {
        "inf" => None,
        text => Some(rat_at(text, line)?),
    };
    Interval::new(lower, upper).map_err(|e| parse_err(line, e.to_string()))
}

fn index_list_at(value: &str, line: usize) -> Result<Vec<usize>, ScenarioError> {
    value
        .split(',')
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .map(|t| {
            let k: usize = int_at(t, line, "a positive coordinate index")?;
            if k == 0 {
                return Err(parse_err(line, "coordinate indices start at 1"));
            }
            Ok(k)
        })
        .collect()
}

/// Key of the form `{prefix}{index}` with a 1-based index.
fn indexed_key(key: &str, prefix: &str, line: usize) -> Result<Option<usize>, ScenarioError> {
    let Some(rest) = key.strip_prefix(prefix) else {
        return Ok(None);
    };
    if rest.is_empty() || !rest.bytes().all(|b| b.is_ascii_digit()) {
        return Ok(None);
    }
    let index: usize = int_at(rest, line, "an index")?;
    if index == 0 {
        return Err(parse_err(line, format!("{prefix} indices start at 1")));
    }
    Ok(Some(index))
}

fn insert_indexed(
    map: &mut BTreeMap<usize, Interval>,
    index: usize,
    value: Interval,
    key: &str,
    line: usize,
) -> Result<(), ScenarioError> {
    if map.insert(index, value).is_some() {
        return Err(parse_err(line, format!("duplicate key {key:?}")));
    }
    Ok(())
}

impl Raw {
    fn handle(
        &mut self,
        section: Section,
        key: &str,
        value: &str,
        line: usize,
    ) -> Result<(), ScenarioError> {
        match section {
            Section::Scenario => match key {
                "name" => set_once(&mut self.name, value.to_string(), key, line),
                _ => Err(parse_err(line, format!("unknown key {key:?} in [scenario]"))),
            },
            Section::Dims => match key {
                "n" => set_once(&mut self.n, int_at(value, line, "a dimension")?, key, line),
                "m" => set_once(&mut self.m, int_at(value, line, "a dimension")?, key, line),
                "ell" => set_once(&mut self.ell, int_at(value, line, "a dimension")?, key, line),
                "r" => {
                    let r = if value == "inf" {
                        Smoothness::Infinite
                    } else {
                        Smoothness::Finite(int_at(value, line, "a positive integer or inf")?)
                    };
                    set_once(&mut self.r, r, key, line)
                }
                _ => Err(parse_err(line, format!("unknown key {key:?} in [dims]"))),
            },
            Section::Family => {
                if let Some(i) = indexed_key(key, "F", line)? {
                    if self.family.insert(i, expr_at(value, line)?).is_some() {
                        return Err(parse_err(line, format!("duplicate key {key:?}")));
                    }
                    Ok(())
                } else {
                    Err(parse_err(
                        line,
                        format!("unknown key {key:?} in [family], expected F1, F2, ..."),
                    ))
                }
            }
            Section::Domain => {
                if let Some(i) = indexed_key(key, "interval", line)? {
                    let iv = interval_at(value, line)?;
                    insert_indexed(&mut self.intervals, i, iv, key, line)
                } else if key == "predicate" {
                    self.predicates.push(expr_at(value, line)?);
                    Ok(())
                } else {
                    Err(parse_err(line, format!("unknown key {key:?} in [domain]")))
                }
            }
            Section::Z => match key {
                "kind" => set_once(&mut self.z_kind, value.to_string(), key, line),
                "zeroed" => set_once(&mut self.zeroed, index_list_at(value, line)?, key, line),
                "g" => {
                    self.g.push(expr_at(value, line)?);
                    Ok(())
                }
                "constraints" => {
                    self.constraints.push(expr_at(value, line)?);
                    Ok(())
                }
                _ => Err(parse_err(line, format!("unknown key {key:?} in [z]"))),
            },
            Section::Plan => {
                if let Some(i) = indexed_key(key, "x_box", line)? {
                    let iv = interval_at(value, line)?;
                    insert_indexed(&mut self.x_boxes, i, iv, key, line)
                } else if let Some(i) = indexed_key(key, "a_box", line)? {
                    let iv = interval_at(value, line)?;
                    insert_indexed(&mut self.a_boxes, i, iv, key, line)
                } else {
                    match key {
                        "seed" => set_once(&mut self.seed, int_at(value, line, "a seed")?, key, line),
                        "mode" => {
                            let mode = match value {
                                "grid" => SamplingMode::Grid,
                                "monte_carlo" => SamplingMode::MonteCarlo,
                                _ => {
                                    return Err(parse_err(
                                        line,
                                        "mode must be grid or monte_carlo",
                                    ))
                                }
                            };
                            set_once(&mut self.mode, mode, key, line)
                        }
                        "x_count" => {
                            set_once(&mut self.x_count, int_at(value, line, "a count")?, key, line)
                        }
                        "a_count" => {
                            set_once(&mut self.a_count, int_at(value, line, "a count")?, key, line)
                        }
                        "eps_alpha" => {
                            set_once(&mut self.eps_alpha, rat_at(value, line)?, key, line)
                        }
                        "eps_beta" => set_once(&mut self.eps_beta, rat_at(value, line)?, key, line),
                        _ => Err(parse_err(line, format!("unknown key {key:?} in [plan]"))),
                    }
                }
            }
            Section::Backend => match key {
                "kind" => set_once(&mut self.backend_kind, value.to_string(), key, line),
                "rank_tol" => set_once(
                    &mut self.rank_tol,
                    int_at::<f64>(value, line, "a tolerance")?,
                    key,
                    line,
                ),
                "membership_tol" => set_once(
                    &mut self.membership_tol,
                    int_at::<f64>(value, line, "a tolerance")?,
                    key,
                    line,
                ),
                _ => Err(parse_err(line, format!("unknown key {key:?} in [backend]"))),
            },
        }
    }

    fn assemble(self) -> Result<Scenario, ScenarioError> {
        fn require<T>(slot: Option<T>, field: &str) -> Result<T, ScenarioError> {
            slot.ok_or_else(|| invalid(field, "missing required key"))
        }

        let name = require(self.name, "scenario.name")?;
        let n = require(self.n, "dims.n")?;
        let m = require(self.m, "dims.m")?;
        let ell = require(self.ell, "dims.ell")?;
        let r = require(self.r, "dims.r")?;

        let mut components = Vec::with_capacity(ell);
        for i in 1..=ell {
            match self.family.get(&i) {
                Some(e) => components.push(e.clone()),
                None => return Err(invalid(format!("family.F{i}"), "missing component")),
            }
        }
        if let Some((&extra, _)) = self.family.iter().find(|(&i, _)| i > ell) {
            return Err(invalid(
                format!("family.F{extra}"),
                format!("component index exceeds ell = {ell}"),
            ));
        }

        let mut intervals = Vec::with_capacity(n + m);
        for i in 1..=n + m {
            match self.intervals.get(&i) {
                Some(iv) => intervals.push(iv.clone()),
                None => return Err(invalid(format!("domain.interval{i}"), "missing interval")),
            }
        }
        if let Some((&extra, _)) = self.intervals.iter().find(|(&i, _)| i > n + m) {
            return Err(invalid(
                format!("domain.interval{extra}"),
                format!("index exceeds n + m = {}", n + m),
            ));
        }
        let domain = DomainSpec {
            intervals,
            predicates: self.predicates,
        };

        let family = ParamFamily::new(n, m, ell, components, domain, r)
            .map_err(|e| invalid("family", e.to_string()))?;

        let z_kind = require(self.z_kind, "z.kind")?;
        let z = match z_kind.as_str() {
            "slice" => {
                if !self.g.is_empty() {
                    return Err(invalid("z.g", "g only applies to level sets"));
                }
                let zeroed = require(self.zeroed, "z.zeroed")?;
                SubmanifoldSpec::slice(ell, zeroed, self.constraints)
                    .map_err(|e| invalid("z", e.to_string()))?
            }
            "levelset" => {
                if self.zeroed.is_some() {
                    return Err(invalid("z.zeroed", "zeroed only applies to slices"));
                }
                if self.g.is_empty() {
                    return Err(invalid(
                        "z.g",
                        "level sets need at least one defining equation",
                    ));
                }
                SubmanifoldSpec::level_set(ell, self.g, self.constraints)
                    .map_err(|e| invalid("z", e.to_string()))?
            }
            other => {
                return Err(invalid(
                    "z.kind",
                    format!("expected slice or levelset, found {other:?}"),
                ))
            }
        };

        let mut x_box = Vec::with_capacity(n);
        for i in 1..=n {
            match self.x_boxes.get(&i) {
                Some(iv) => x_box.push(iv.clone()),
                None => return Err(invalid(format!("plan.x_box{i}"), "missing interval")),
            }
        }
        let mut a_box = Vec::with_capacity(m);
        for i in 1..=m {
            match self.a_boxes.get(&i) {
                Some(iv) => a_box.push(iv.clone()),
                None => return Err(invalid(format!("plan.a_box{i}"), "missing interval")),
            }
        }
        if self.x_boxes.len() > n || self.a_boxes.len() > m {
            return Err(invalid("plan", "more box axes than declared dimensions"));
        }
        let plan = SamplingPlan {
            seed: require(self.seed, "plan.seed")?,
            mode: require(self.mode, "plan.mode")?,
            x_box,
            a_box,
            x_count: require(self.x_count, "plan.x_count")?,
            a_count: require(self.a_count, "plan.a_count")?,
            eps_alpha: require(self.eps_alpha, "plan.eps_alpha")?,
            eps_beta: require(self.eps_beta, "plan.eps_beta")?,
        };

        let backend_kind = require(self.backend_kind, "backend.kind")?;
        let backend = match backend_kind.as_str() {
            "exact" => {
                if self.rank_tol.is_some() || self.membership_tol.is_some() {
                    return Err(invalid(
                        "backend",
                        "tolerances only apply to the float backend",
                    ));
                }
                ScalarBackend::ExactRational
            }
            "float" => ScalarBackend::Float {
                rank_tol: self.rank_tol.unwrap_or(1e-10),
                membership_tol: self.membership_tol.unwrap_or(1e-9),
            },
            other => {
                return Err(invalid(
                    "backend.kind",
                    format!("expected exact or float, found {other:?}"),
                ))
            }
        };

        Scenario::new(name, family, z, plan, backend)
    }
}

fn strip_comment(line: &str) -> &str {
    match line.find('#') {
        Some(i) => &line[..i],
        None => line,
    }
}

/// Parse scenario text. Errors carry 1-based line numbers for syntax
/// problems and field paths for semantic ones.
pub fn parse_scenario(src: &str) -> Result<Scenario, ScenarioError> {
    let mut raw = Raw::default();
    let mut section: Option<Section> = None;
    for (idx, raw_line) in src.lines().enumerate() {
        let line_no = idx + 1;
        let line = strip_comment(raw_line).trim();
        if line.is_empty() {
            continue;
        }
        if let Some(header) = line.strip_prefix('[') {
            let name = header
                .strip_suffix(']')
                .ok_or_else(|| parse_err(line_no, "unterminated section header"))?;
            section = Some(match name {
                "scenario" => Section::Scenario,
                "dims" => Section::Dims,
                "family" => Section::Family,
                "domain" => Section::Domain,
                "z" => Section::Z,
                "plan" => Section::Plan,
                "backend" => Section::Backend,
                other => return Err(parse_err(line_no, format!("unknown section [{other}]"))),
            });
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(parse_err(line_no, "expected key = value"));
        };
        let Some(section) = section else {
            return Err(parse_err(line_no, "key appears before any [section]"));
        };
        raw.handle(section, key.trim(), value.trim(), line_no)?;
    }
    raw.assemble()
}

pub fn load_scenario(path: &Path) -> Result<Scenario, ScenarioError> {
    let src = fs::read_to_string(path).map_err(|e| io_err(path, &e))?;
    parse_scenario(&src)
}

fn write_interval(out: &mut String, key: &str, iv: &Interval) {
    writeln!(out, "{key} = {iv}").unwrap();
}

/// Canonical text form: fixed section and key order, expressions printed
/// fully parenthesized. `parse_scenario` of the output reproduces the
/// scenario structurally.
pub fn serialize_scenario(s: &Scenario) -> String {
    let mut out = String::new();
    writeln!(out, "[scenario]").unwrap();
    writeln!(out, "name = {}", s.name).unwrap();
    writeln!(out).unwrap();

    writeln!(out, "[dims]").unwrap();
    writeln!(out, "n = {}", s.family.n()).unwrap();
    writeln!(out, "m = {}", s.family.m()).unwrap();
    writeln!(out, "ell = {}", s.family.ell()).unwrap();
    writeln!(out, "r = {}", s.family.declared_r).unwrap();
    writeln!(out).unwrap();

    writeln!(out, "[family]").unwrap();
    for (i, c) in s.family.components().iter().enumerate() {
        writeln!(out, "F{} = {}", i + 1, c).unwrap();
    }
    writeln!(out).unwrap();

    writeln!(out, "[domain]").unwrap();
    for (i, iv) in s.family.domain.intervals.iter().enumerate() {
        write_interval(&mut out, &format!("interval{}", i + 1), iv);
    }
    for p in &s.family.domain.predicates {
        writeln!(out, "predicate = {p}").unwrap();
    }
    writeln!(out).unwrap();

    writeln!(out, "[z]").unwrap();
    match &s.z.kind {
        SubmanifoldKind::Slice { zeroed } => {
            writeln!(out, "kind = slice").unwrap();
            let list: Vec<String> = zeroed.iter().map(|k| k.to_string()).collect();
            writeln!(out, "zeroed = {}", list.join(", ")).unwrap();
        }
        SubmanifoldKind::LevelSet { equations } => {
            writeln!(out, "kind = levelset").unwrap();
            for g in equations {
                writeln!(out, "g = {g}").unwrap();
            }
        }
    }
    for c in &s.z.open_constraints {
        writeln!(out, "constraints = {c}").unwrap();
    }
    writeln!(out).unwrap();

    writeln!(out, "[plan]").unwrap();
    writeln!(out, "seed = {}", s.plan.seed).unwrap();
    writeln!(out, "mode = {}", s.plan.mode).unwrap();
    for (i, iv) in s.plan.x_box.iter().enumerate() {
        write_interval(&mut out, &format!("x_box{}", i + 1), iv);
    }
    for (i, iv) in s.plan.a_box.iter().enumerate() {
        write_interval(&mut out, &format!("a_box{}", i + 1), iv);
    }
    writeln!(out, "x_count = {}", s.plan.x_count).unwrap();
    writeln!(out, "a_count = {}", s.plan.a_count).unwrap();
    writeln!(out, "eps_alpha = {}", expr::format_rat(&s.plan.eps_alpha)).unwrap();
    writeln!(out, "eps_beta = {}", expr::format_rat(&s.plan.eps_beta)).unwrap();
    writeln!(out).unwrap();

    writeln!(out, "[backend]").unwrap();
    writeln!(out, "kind = {}", s.backend.label()).unwrap();
    if let ScalarBackend::Float {
        rank_tol,
        membership_tol,
    } = s.backend
    {
        writeln!(out, "rank_tol = {rank_tol}").unwrap();
        writeln!(out, "membership_tol = {membership_tol}").unwrap();
    }
    out
}

/// SHA-256 of the canonical serialization, as lowercase hex.
pub fn content_hash(s: &Scenario) -> String {
    let digest = Sha256::digest(serialize_scenario(s).as_bytes());
    let mut out = String::with_capacity(64);
    for byte in digest {
        write!(out, "{byte:02x}").unwrap();
    }
    out
}

pub const BUILTIN_NAMES: [&str; 4] = ["example1", "example2", "example3", "parabola"];

/// Built-in scenarios, parsed from their bundled sources through the same
/// loader as user files.
pub fn builtin(name: &str) -> Result<Scenario, ScenarioError> {
    let src = builtin_source(name).ok_or_else(|| ScenarioError::UnknownBuiltin {
        name: name.to_string(),
    })?;
    parse_scenario(src)
}

pub fn builtin_source(name: &str) -> Option<&'static str> {
    match name {
        "example1" => Some(include_str!("../scenarios/example1.scn")),
        "example2" => Some(include_str!("../scenarios/example2.scn")),
        "example3" => Some(include_str!("../scenarios/example3.scn")),
        "parabola" => Some(include_str!("../scenarios/parabola.scn")),
        _ => None,
    }
}

/// Everything one invocation produced. The optional timestamp is for
/// interactive display only; it is never written to disk, which keeps
/// identical runs byte-identical.
#[derive(Debug, Clone, PartialEq)]
pub struct RunRecord {
    pub scenario_name: String,
    pub content_hash: String,
    pub tool_version: String,
    pub timestamp: Option<String>,
    pub backend_label: String,
    pub genericity: Option<GenericityReport>,
    pub defect_table: Vec<DefectReport>,
    pub local_model: Option<LocalModelReport>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LocalModelReport {
    pub model: LocalModel,
    pub verification: Option<VerificationRecord>,
}

impl RunRecord {
    pub fn for_scenario(s: &Scenario) -> RunRecord {
        RunRecord {
            scenario_name: s.name.clone(),
            content_hash: content_hash(s),
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            timestamp: None,
            backend_label: s.backend.label().to_string(),
            genericity: None,
            defect_table: Vec::new(),
            local_model: None,
        }
    }
}

/// Fixed-field-order text form of a genericity report.
pub fn render_genericity(report: &GenericityReport) -> String {
    let mut out = String::new();
    writeln!(out, "a_samples = {}", report.a_sample_count).unwrap();
    writeln!(out, "x_samples = {}", report.x_sample_count).unwrap();
    writeln!(out, "classified = {}", report.classified_points).unwrap();
    writeln!(out, "skipped = {}", report.skipped_points).unwrap();
    writeln!(out, "flagged_w_count = {}", report.flagged_w.len()).unwrap();
    writeln!(out, "flagged_wtilde_count = {}", report.flagged_wtilde.len()).unwrap();
    writeln!(
        out,
        "flagged_nontransverse_count = {}",
        report.flagged_nontransverse.len()
    )
    .unwrap();
    writeln!(out, "freq_w = {}", report.freq_w).unwrap();
    writeln!(out, "freq_wtilde = {}", report.freq_wtilde).unwrap();
    writeln!(out, "freq_nontransverse = {}", report.freq_nontransverse).unwrap();
    writeln!(out, "delta_sup_estimate = {}", report.delta_sup_estimate).unwrap();
    writeln!(out, "r_bound = {}", report.r_condition.bound).unwrap();
    writeln!(out, "r_declared = {}", report.r_condition.declared).unwrap();
    writeln!(
        out,
        "r_condition_satisfied = {}",
        report.r_condition.satisfied
    )
    .unwrap();
    writeln!(out, "verdict_alpha = {} (empirical)", report.verdict_alpha).unwrap();
    writeln!(out, "verdict_beta = {} (empirical)", report.verdict_beta).unwrap();
    writeln!(out, "agreement = {}", report.agreement).unwrap();
    out
}

/// CSV form of a classification table: coordinates, membership,
/// defects, stratum. Must not be called on an empty table.
pub fn render_defect_table(rows: &[DefectReport]) -> String {
    let mut out = String::new();
    let first = &rows[0].point;
    let mut header: Vec<String> = (1..=first.x.len()).map(|i| format!("x{i}")).collect();
    header.extend((1..=first.a.len()).map(|i| format!("a{i}")));
    header.extend(
        ["on_Z", "delta_family", "delta_slice", "stratum"]
            .iter()
            .map(|s| s.to_string()),
    );
    writeln!(out, "{}", header.join(",")).unwrap();
    for row in rows {
        let mut cells: Vec<String> = row.point.x.iter().map(expr::format_rat).collect();
        cells.extend(row.point.a.iter().map(expr::format_rat));
        cells.push(row.on_z.to_string());
        cells.push(row.delta_family.to_string());
        cells.push(row.delta_slice.to_string());
        cells.push(row.stratum.to_string());
        writeln!(out, "{}", cells.join(",")).unwrap();
    }
    out
}

fn check_line(out: &mut String, name: &str, check: &PropertyCheck) {
    match (&check.passed, &check.first_counterexample) {
        (true, _) => writeln!(out, "{name} = pass ({} samples)", check.samples_checked).unwrap(),
        (false, Some(p)) => writeln!(
            out,
            "{name} = fail at {p} ({} samples)",
            check.samples_checked
        )
        .unwrap(),
        (false, None) => writeln!(out, "{name} = fail ({} samples)", check.samples_checked).unwrap(),
    }
}

/// Fixed-field-order text form of a local model and its verification.
pub fn render_local_model(report: &LocalModelReport) -> String {
    let model = &report.model;
    let mut out = String::new();
    writeln!(out, "base = {}", model.base).unwrap();
    writeln!(out, "case = {}", model.case_tag).unwrap();
    writeln!(out, "rho = {}", model.rho).unwrap();
    writeln!(out, "q = {}", model.q).unwrap();
    let perm: Vec<String> = model.row_permutation.iter().map(|k| k.to_string()).collect();
    writeln!(out, "row_permutation = {}", perm.join(", ")).unwrap();
    if let SubmanifoldKind::Slice { zeroed } = &model.ztilde.kind {
        if zeroed.is_empty() {
            writeln!(out, "ztilde_zeroed = none").unwrap();
        } else {
            let list: Vec<String> = zeroed.iter().map(|k| k.to_string()).collect();
            writeln!(out, "ztilde_zeroed = {}", list.join(", ")).unwrap();
        }
    }
    writeln!(out, "ztilde_dim = {}", model.ztilde.q()).unwrap();
    let axes: Vec<String> = model
        .utilde
        .intervals
        .iter()
        .map(|iv| iv.to_string())
        .collect();
    writeln!(out, "utilde = {}", axes.join(" x ")).unwrap();
    writeln!(out, "utilde_predicates = {}", model.utilde.predicates.len()).unwrap();
    writeln!(out, "shrink_iterations = {}", model.shrink_iterations).unwrap();
    match &report.verification {
        None => writeln!(out, "verification = not run").unwrap(),
        Some(v) => {
            writeln!(
                out,
                "dim_check = {}",
                if v.dim_ztilde_ok { "pass" } else { "fail" }
            )
            .unwrap();
            check_line(&mut out, "containment", &v.containment);
            check_line(&mut out, "transversality", &v.transversality);
            check_line(&mut out, "defect_drop", &v.defect_drop);
            if let Some(block) = &v.block_identity {
                check_line(&mut out, "block_identity", block);
            }
            writeln!(out, "all_passed = {}", v.all_passed()).unwrap();
        }
    }
    out
}

/// Write the run into `out_dir` (created if missing) and return the
/// manifest path. Identical records produce identical bytes.
pub fn write_run(record: &RunRecord, out_dir: &Path) -> Result<PathBuf, ScenarioError> {
    fs::create_dir_all(out_dir).map_err(|e| io_err(out_dir, &e))?;
    let mut reports: Vec<(&str, String)> = Vec::new();
    if let Some(g) = &record.genericity {
        reports.push(("genericity.txt", render_genericity(g)));
    }
    if !record.defect_table.is_empty() {
        reports.push(("defect_table.csv", render_defect_table(&record.defect_table)));
    }
    if let Some(lm) = &record.local_model {
        reports.push(("local_model.txt", render_local_model(lm)));
    }

    let mut manifest = String::new();
    writeln!(manifest, "tool = transversal {}", record.tool_version).unwrap();
    writeln!(manifest, "scenario = {}", record.scenario_name).unwrap();
    writeln!(manifest, "content_hash = {}", record.content_hash).unwrap();
    writeln!(manifest, "backend = {}", record.backend_label).unwrap();
    for (file, _) in &reports {
        writeln!(manifest, "report = {file}").unwrap();
    }

    for (file, body) in &reports {
        let path = out_dir.join(file);
        fs::write(&path, body).map_err(|e| io_err(&path, &e))?;
    }
    let manifest_path = out_dir.join("manifest.txt");
    fs::write(&manifest_path, manifest).map_err(|e| io_err(&manifest_path, &e))?;
    Ok(manifest_path)
}
