//! JSON run configuration: the raw serde shape, validation into engine
//! types with field-path diagnostics, and the normalized echo.
//!
//! ```json
//! {
//!   "procedure": "sequential",
//!   "alpha": 0.025,
//!   "families": [
//!     { "label": "F1", "hypotheses": ["H11", "H12"], "initial_level": "alpha/2" },
//!     { "size": 2, "initial_level": "alpha/2" }
//!   ],
//!   "transition": [[0, 1], [1, 0]],
//!   "p_values": { "H11": 0.0092, "H12": 0.0105, "H21": 0.0059, "H22": 0.0044 },
//!   "options": { "stage_cap": 10 }
//! }
//! ```
//!
//! Two-layer configs replace `families`/`transition` with `layer1`, `layer2`,
//! `layer1_to_layer2` (one row per first-layer family) and
//! `layer2_to_layer1`. The oracle procedures take singleton `families` and
//! no transition; `fixed-sequence-oracle` also takes no levels.
//!
//! Levels, alpha and matrix entries may be numbers or exact expressions
//! such as `"alpha/3"`. Paths in diagnostics follow JSON indexing, from 0.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::path::Path;

use gatekeeping::{
    layered_family, EngineOptions, FamilyKey, FamilySpec, GatekeepingError, GatekeepingProblem,
    Layer, PValueSet, TransitionMatrix, TwoLayerProblem,
};
use num_rational::BigRational;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};
use crate::expr;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ProcedureKind {
    Sequential,
    TwoLayer,
    FallbackOracle,
    FixedSequenceOracle,
}

impl fmt::Display for ProcedureKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ProcedureKind::Sequential => "sequential",
            ProcedureKind::TwoLayer => "two-layer",
            ProcedureKind::FallbackOracle => "fallback-oracle",
            ProcedureKind::FixedSequenceOracle => "fixed-sequence-oracle",
        })
    }
}

/// A number, or an expression string evaluated exactly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Quantity {
    Number(f64),
    Expression(String),
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawFamily {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hypotheses: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub size: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial_level: Option<Quantity>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawOptions {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stage_cap: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawConfig {
    pub procedure: ProcedureKind,
    pub alpha: Quantity,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub families: Option<Vec<RawFamily>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub transition: Option<Vec<Vec<Quantity>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub layer1: Option<Vec<RawFamily>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub layer2: Option<Vec<RawFamily>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub layer1_to_layer2: Option<Vec<Vec<Quantity>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub layer2_to_layer1: Option<Vec<Vec<Quantity>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p_values: Option<BTreeMap<String, f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub options: Option<RawOptions>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Problem {
    Sequential(GatekeepingProblem),
    TwoLayer(TwoLayerProblem),
    /// Singleton families; the upper-shift matrix carries the fallback chain.
    FallbackOracle(GatekeepingProblem),
    /// Singleton families, all level on the first.
    FixedSequenceOracle(GatekeepingProblem),
}

/// A validated configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct Config {
    pub problem: Problem,
    pub p_values: Option<PValueSet>,
    pub options: EngineOptions,
}

pub fn load_config(path: &Path) -> Result<Config> {
    let text = std::fs::read_to_string(path).map_err(|source| CliError::Io {
        action: "read",
        path: path.to_path_buf(),
        source,
    })?;
    parse_config(&text)
}

pub fn parse_config(text: &str) -> Result<Config> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let raw: RawConfig = serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        let path = if path == "." || path == "?" {
            "config".to_string()
        } else {
            path
        };
        CliError::invalid(path, e.into_inner())
    })?;
    Config::from_raw(&raw)
}

fn forbid<T>(field: &Option<T>, name: &str, kind: ProcedureKind) -> Result<()> {
    match field {
        Some(_) => Err(CliError::invalid(
            name,
            format!("not used by the {kind} procedure"),
        )),
        None => Ok(()),
    }
}

fn require<'a, T>(field: &'a Option<T>, name: &str) -> Result<&'a T> {
    field
        .as_ref()
        .ok_or_else(|| CliError::invalid(name, "missing required field"))
}

fn exact(q: &Quantity, alpha: Option<&BigRational>, path: &str) -> Result<BigRational> {
    match q {
        Quantity::Number(x) => BigRational::from_float(*x)
            .ok_or_else(|| CliError::invalid(path, format!("{x} is not a finite number"))),
        Quantity::Expression(s) => expr::evaluate(s, alpha).map_err(|e| CliError::invalid(path, e)),
    }
}

fn value(q: &Quantity, alpha: Option<&BigRational>, path: &str) -> Result<f64> {
    match q {
        Quantity::Number(x) => Ok(*x),
        Quantity::Expression(_) => {
            expr::to_f64(&exact(q, alpha, path)?).map_err(|e| CliError::invalid(path, e))
        }
    }
}

fn matrix(rows: &[Vec<Quantity>], path: &str) -> Result<Vec<Vec<f64>>> {
    rows.iter()
        .enumerate()
        .map(|(r, row)| {
            row.iter()
                .enumerate()
                .map(|(c, q)| value(q, None, &format!("{path}[{r}][{c}]")))
                .collect()
        })
        .collect()
}

/// How default labels are generated for a list of families.
#[derive(Clone, Copy)]
enum Naming {
    Ordered,
    Layered(Layer),
}

fn build_families(
    raw: &[RawFamily],
    path: &str,
    alpha: &BigRational,
    naming: Naming,
    seen: &mut HashMap<String, String>,
) -> Result<Vec<FamilySpec>> {
    let mut out = Vec::with_capacity(raw.len());
    for (i, f) in raw.iter().enumerate() {
        let here = format!("{path}[{i}]");
        let level = match &f.initial_level {
            Some(q) => value(q, Some(alpha), &format!("{here}.initial_level"))?,
            None => {
                return Err(CliError::invalid(
                    format!("{here}.initial_level"),
                    "missing required field",
                ))
            }
        };
        let template = |size: usize| match naming {
            Naming::Ordered => FamilySpec::numbered(i + 1, size, 0.0),
            Naming::Layered(layer) => layered_family(layer, i, size, 0.0),
        };
        let hypotheses = match (&f.hypotheses, f.size) {
            (Some(h), None) => h.clone(),
            (None, Some(n)) => template(n)
                .map_err(|e| CliError::invalid(format!("{here}.size"), e))?
                .hypotheses()
                .to_vec(),
            (Some(_), Some(_)) => {
                return Err(CliError::invalid(
                    &here,
                    "give either hypotheses or size, not both",
                ))
            }
            (None, None) => return Err(CliError::invalid(&here, "missing hypotheses (or size)")),
        };
        for (j, h) in hypotheses.iter().enumerate() {
            let at = format!("{here}.hypotheses[{j}]");
            if let Some(first) = seen.insert(h.clone(), at.clone()) {
                return Err(CliError::invalid(
                    at,
                    format!("hypothesis label {h:?} is already used at {first}"),
                ));
            }
        }
        let label = match &f.label {
            Some(l) => l.clone(),
            None => template(1)
                .expect("one hypothesis is a valid family")
                .label()
                .to_string(),
        };
        let spec = FamilySpec::new(i + 1, label, hypotheses, level).map_err(|e| {
            let field = match e {
                GatekeepingError::EmptyFamily { .. } => "hypotheses",
                _ => "initial_level",
            };
            CliError::invalid(format!("{here}.{field}"), e)
        })?;
        out.push(spec);
    }
    Ok(out)
}

/// Attaches a field path to an error from the core constructors.
fn locate_matrix(e: GatekeepingError, path: &str) -> CliError {
    let at = match &e {
        GatekeepingError::NonZeroDiagonal { row, .. } => {
            format!("{path}[{}][{}]", row - 1, row - 1)
        }
        GatekeepingError::RowSumNotOne { row, .. } => format!("{path}[{}]", row - 1),
        GatekeepingError::EntryOutOfRange { row, col, .. } => {
            format!("{path}[{}][{}]", row - 1, col - 1)
        }
        _ => path.to_string(),
    };
    CliError::invalid(at, e)
}

/// `family` is the 1-based position over `groups` taken in order.
fn locate_levels(e: GatekeepingError, groups: &[(&str, usize)]) -> CliError {
    let at = match &e {
        GatekeepingError::InvalidAlpha(_) => "alpha".to_string(),
        GatekeepingError::LevelOutOfRange { family, .. } => {
            let mut index = family - 1;
            let mut at = groups[0].0.to_string();
            for &(name, len) in groups {
                if index < len {
                    at = format!("{name}[{index}].initial_level");
                    break;
                }
                index -= len;
            }
            at
        }
        GatekeepingError::LevelSumMismatch { .. } => groups
            .iter()
            .map(|(name, _)| format!("{name}[*].initial_level"))
            .collect::<Vec<_>>()
            .join(" + "),
        _ => groups[0].0.to_string(),
    };
    CliError::invalid(at, e)
}

fn locate_two_layer(e: GatekeepingError, m1: usize, m2: usize) -> CliError {
    let source = |name: &str| -> Option<(Layer, usize)> {
        [(Layer::First, m1), (Layer::Second, m2)]
            .into_iter()
            .find_map(|(layer, m)| {
                (0..m)
                    .find(|&index| FamilyKey::Layered { layer, index }.to_string() == name)
                    .map(|i| (layer, i))
            })
    };
    let matrix_of = |layer: Layer| match layer {
        Layer::First => "layer1_to_layer2",
        Layer::Second => "layer2_to_layer1",
    };
    let at = match &e {
        GatekeepingError::CoefficientRowSum { family, .. } => {
            source(family).map(|(layer, i)| format!("{}[{i}]", matrix_of(layer)))
        }
        GatekeepingError::CoefficientOutOfRange { from, to, .. } => {
            match (source(from), source(to)) {
                (Some((layer, i)), Some((_, j))) => Some(format!("{}[{i}][{j}]", matrix_of(layer))),
                _ => None,
            }
        }
        GatekeepingError::DimensionMismatch { what, .. } if what.starts_with("first") => {
            Some("layer1_to_layer2".to_string())
        }
        GatekeepingError::DimensionMismatch { what, .. } if what.starts_with("second") => {
            Some("layer2_to_layer1".to_string())
        }
        _ => None,
    };
    match at {
        Some(at) => CliError::invalid(at, e),
        None => locate_levels(e, &[("layer1", m1), ("layer2", m2)]),
    }
}

fn singletons(raw: &[RawFamily], kind: ProcedureKind) -> Result<()> {
    for (i, f) in raw.iter().enumerate() {
        let size = f.hypotheses.as_ref().map(Vec::len).or(f.size);
        if size.is_some_and(|n| n != 1) {
            return Err(CliError::invalid(
                format!("families[{i}]"),
                format!("the {kind} procedure takes exactly one hypothesis per family"),
            ));
        }
    }
    Ok(())
}

impl Config {
    pub fn from_raw(raw: &RawConfig) -> Result<Self> {
        let kind = raw.procedure;
        let alpha_exact = exact(&raw.alpha, None, "alpha")?;
        let alpha = expr::to_f64(&alpha_exact).map_err(|e| CliError::invalid("alpha", e))?;
        let mut seen = HashMap::new();

        let problem = match kind {
            ProcedureKind::TwoLayer => {
                forbid(&raw.families, "families", kind)?;
                forbid(&raw.transition, "transition", kind)?;
                let first = build_families(
                    require(&raw.layer1, "layer1")?,
                    "layer1",
                    &alpha_exact,
                    Naming::Layered(Layer::First),
                    &mut seen,
                )?;
                let second = build_families(
                    require(&raw.layer2, "layer2")?,
                    "layer2",
                    &alpha_exact,
                    Naming::Layered(Layer::Second),
                    &mut seen,
                )?;
                let down = matrix(
                    require(&raw.layer1_to_layer2, "layer1_to_layer2")?,
                    "layer1_to_layer2",
                )?;
                let up = matrix(
                    require(&raw.layer2_to_layer1, "layer2_to_layer1")?,
                    "layer2_to_layer1",
                )?;
                let (m1, m2) = (first.len(), second.len());
                let problem = TwoLayerProblem::new(first, second, down, up, alpha)
                    .map_err(|e| locate_two_layer(e, m1, m2))?;
                Problem::TwoLayer(problem)
            }
            _ => {
                forbid(&raw.layer1, "layer1", kind)?;
                forbid(&raw.layer2, "layer2", kind)?;
                forbid(&raw.layer1_to_layer2, "layer1_to_layer2", kind)?;
                forbid(&raw.layer2_to_layer1, "layer2_to_layer1", kind)?;
                let raw_families = require(&raw.families, "families")?;
                let m = raw_families.len();
                let (families, transition) = match kind {
                    ProcedureKind::Sequential => {
                        let families = build_families(
                            raw_families,
                            "families",
                            &alpha_exact,
                            Naming::Ordered,
                            &mut seen,
                        )?;
                        let rows = matrix(require(&raw.transition, "transition")?, "transition")?;
                        let g = TransitionMatrix::new(rows)
                            .map_err(|e| locate_matrix(e, "transition"))?;
                        (families, g)
                    }
                    ProcedureKind::FallbackOracle => {
                        forbid(&raw.transition, "transition", kind)?;
                        singletons(raw_families, kind)?;
                        let families = build_families(
                            raw_families,
                            "families",
                            &alpha_exact,
                            Naming::Ordered,
                            &mut seen,
                        )?;
                        let g = TransitionMatrix::upper_shift(m)
                            .map_err(|e| CliError::invalid("families", e))?;
                        (families, g)
                    }
                    _ => {
                        forbid(&raw.transition, "transition", kind)?;
                        singletons(raw_families, kind)?;
                        let mut filled = raw_families.clone();
                        for (i, f) in filled.iter_mut().enumerate() {
                            if f.initial_level.is_some() {
                                return Err(CliError::invalid(
                                    format!("families[{i}].initial_level"),
                                    format!("not used by the {kind} procedure; the first hypothesis gets alpha"),
                                ));
                            }
                            f.initial_level =
                                Some(Quantity::Number(if i == 0 { alpha } else { 0.0 }));
                        }
                        let families = build_families(
                            &filled,
                            "families",
                            &alpha_exact,
                            Naming::Ordered,
                            &mut seen,
                        )?;
                        let g = TransitionMatrix::cyclic_shift(m)
                            .map_err(|e| CliError::invalid("families", e))?;
                        (families, g)
                    }
                };
                let m = families.len();
                let problem = GatekeepingProblem::new(families, transition, alpha)
                    .map_err(|e| locate_levels(e, &[("families", m)]))?;
                match kind {
                    ProcedureKind::Sequential => Problem::Sequential(problem),
                    ProcedureKind::FallbackOracle => Problem::FallbackOracle(problem),
                    _ => Problem::FixedSequenceOracle(problem),
                }
            }
        };

        let mut config = Config {
            problem,
            p_values: None,
            options: EngineOptions::default(),
        };
        if let Some(cap) = raw.options.as_ref().and_then(|o| o.stage_cap) {
            if cap == 0 {
                return Err(CliError::invalid(
                    "options.stage_cap",
                    GatekeepingError::InvalidStageCap,
                ));
            }
            config.options = config.options.with_stage_cap(cap);
        }
        if let Some(map) = &raw.p_values {
            config.p_values = Some(config.collect_p_values(map)?);
        }
        Ok(config)
    }

    fn collect_p_values(&self, map: &BTreeMap<String, f64>) -> Result<PValueSet> {
        let families = self.families();
        let mut used = 0;
        let mut values = Vec::with_capacity(families.len());
        for f in &families {
            let mut row = Vec::with_capacity(f.size());
            for h in f.hypotheses() {
                let p = *map.get(h).ok_or_else(|| {
                    CliError::invalid("p_values", format!("missing p-value for hypothesis {h}"))
                })?;
                if !(0.0..=1.0).contains(&p) {
                    return Err(CliError::invalid(
                        format!("p_values.{h}"),
                        format!("p-value {p} is outside [0, 1]"),
                    ));
                }
                row.push(p);
                used += 1;
            }
            values.push(row);
        }
        if used != map.len() {
            let declared: std::collections::HashSet<&str> = families
                .iter()
                .flat_map(|f| f.hypotheses())
                .map(String::as_str)
                .collect();
            let extra = map
                .keys()
                .find(|k| !declared.contains(k.as_str()))
                .expect("an undeclared label exists");
            return Err(CliError::invalid(
                format!("p_values.{extra}"),
                "no declared hypothesis has this label",
            ));
        }
        PValueSet::new(values).map_err(|e| CliError::invalid("p_values", e))
    }

    pub fn kind(&self) -> ProcedureKind {
        match self.problem {
            Problem::Sequential(_) => ProcedureKind::Sequential,
            Problem::TwoLayer(_) => ProcedureKind::TwoLayer,
            Problem::FallbackOracle(_) => ProcedureKind::FallbackOracle,
            Problem::FixedSequenceOracle(_) => ProcedureKind::FixedSequenceOracle,
        }
    }

    pub fn alpha(&self) -> f64 {
        match &self.problem {
            Problem::TwoLayer(p) => p.alpha(),
            Problem::Sequential(p)
            | Problem::FallbackOracle(p)
            | Problem::FixedSequenceOracle(p) => p.alpha(),
        }
    }

    /// All families in testing order; for two layers, layer 1 then layer 2.
    pub fn families(&self) -> Vec<&FamilySpec> {
        match &self.problem {
            Problem::TwoLayer(p) => p.families().collect(),
            Problem::Sequential(p)
            | Problem::FallbackOracle(p)
            | Problem::FixedSequenceOracle(p) => p.families().iter().collect(),
        }
    }

    pub fn sizes(&self) -> Vec<usize> {
        self.families().iter().map(|f| f.size()).collect()
    }

    /// 0-based `(family, hypothesis)` position of a hypothesis label.
    pub fn position(&self, label: &str) -> Option<(usize, usize)> {
        self.families().iter().enumerate().find_map(|(i, f)| {
            f.hypotheses()
                .iter()
                .position(|h| h == label)
                .map(|j| (i, j))
        })
    }

    /// The normalized form: every label, hypothesis and level spelled out
    /// as plain numbers. Ingesting it again yields an identical `Config`.
    pub fn to_raw(&self) -> RawConfig {
        let raw_family = |f: &FamilySpec, with_level: bool| RawFamily {
            label: Some(f.label().to_string()),
            hypotheses: Some(f.hypotheses().to_vec()),
            size: None,
            initial_level: with_level.then(|| Quantity::Number(f.initial_level())),
        };
        let numbers = |rows: &[Vec<f64>]| -> Vec<Vec<Quantity>> {
            rows.iter()
                .map(|r| r.iter().map(|&x| Quantity::Number(x)).collect())
                .collect()
        };
        let mut raw = RawConfig {
            procedure: self.kind(),
            alpha: Quantity::Number(self.alpha()),
            families: None,
            transition: None,
            layer1: None,
            layer2: None,
            layer1_to_layer2: None,
            layer2_to_layer1: None,
            p_values: None,
            options: self.options.stage_cap.map(|cap| RawOptions {
                stage_cap: Some(cap),
            }),
        };
        match &self.problem {
            Problem::Sequential(p) => {
                raw.families = Some(p.families().iter().map(|f| raw_family(f, true)).collect());
                raw.transition = Some(numbers(p.transition().rows()));
            }
            Problem::FallbackOracle(p) => {
                raw.families = Some(p.families().iter().map(|f| raw_family(f, true)).collect());
            }
            Problem::FixedSequenceOracle(p) => {
                raw.families = Some(p.families().iter().map(|f| raw_family(f, false)).collect());
            }
            Problem::TwoLayer(p) => {
                raw.layer1 = Some(p.first().iter().map(|f| raw_family(f, true)).collect());
                raw.layer2 = Some(p.second().iter().map(|f| raw_family(f, true)).collect());
                raw.layer1_to_layer2 = Some(numbers(p.down_rows()));
                raw.layer2_to_layer1 = Some(numbers(p.up_rows()));
            }
        }
        if let Some(p) = &self.p_values {
            let map = self
                .families()
                .iter()
                .zip(p.families())
                .flat_map(|(f, row)| f.hypotheses().iter().cloned().zip(row.iter().copied()))
                .collect();
            raw.p_values = Some(map);
        }
        raw
    }
}
