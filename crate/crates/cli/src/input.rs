//! Parsing of command-line values and JSON documents into core types.

use std::fmt;
use std::path::Path;

use credal_core::belief::MassFunction;
use credal_core::credal::CredalSet;
use credal_core::measure::{Event, Measure, MeasureSpace, RepShift};
use credal_core::rational::{parse_rational, Rational};
use credal_core::rules::RuleId;
use serde_json::Value;

/// Where a value came from: a flag or a file.
#[derive(Clone, Debug)]
pub enum Origin {
    Flag(&'static str),
    File(String),
}

impl fmt::Display for Origin {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Origin::Flag(name) => write!(f, "--{name}"),
            Origin::File(path) => f.write_str(path),
        }
    }
}

/// A rejected input, anchored to a line (and column when known).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct InputError {
    pub message: String,
}

impl InputError {
    pub fn at(origin: &Origin, line: usize, column: Option<usize>, what: impl fmt::Display) -> Self {
        let message = match column {
            Some(c) => format!("{origin}:{line}:{c}: {what}"),
            None => format!("{origin}:{line}: {what}"),
        };
        Self { message }
    }

    /// Errors in single-line flag values sit on line 1.
    pub fn flag(name: &'static str, what: impl fmt::Display) -> Self {
        Self::at(&Origin::Flag(name), 1, None, what)
    }
}

impl fmt::Display for InputError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl std::error::Error for InputError {}

pub type Parsed<T> = std::result::Result<T, InputError>;

pub fn json(origin: &Origin, text: &str) -> Parsed<Value> {
    serde_json::from_str(text).map_err(|e| InputError::at(origin, e.line(), Some(e.column()), e))
}

pub fn json_flag(name: &'static str, text: &str) -> Parsed<Value> {
    json(&Origin::Flag(name), text)
}

pub fn read_json(path: &Path) -> Parsed<Value> {
    let origin = Origin::File(path.display().to_string());
    let text = std::fs::read_to_string(path).map_err(|e| InputError::at(&origin, 1, None, e))?;
    json(&origin, &text)
}

/// A JSON array of labels, or an atom count `n` for labels `1..n`.
pub fn space(text: &str) -> Parsed<MeasureSpace> {
    let text = text.trim();
    if let Ok(n) = text.parse::<usize>() {
        if n == 0 {
            return Err(InputError::flag("space", "a space needs at least one atom"));
        }
        return Ok(MeasureSpace::numbered(n));
    }
    let v = json_flag("space", text)?;
    MeasureSpace::from_json(&v).map_err(|e| InputError::flag("space", e))
}

pub fn event(name: &'static str, space: &MeasureSpace, text: &str) -> Parsed<Event> {
    let v = json_flag(name, text)?;
    Event::from_json(space, &v).map_err(|e| InputError::flag(name, e))
}

/// `uniform`, a tuple `(p1, p2, ...)` in atom order, or a JSON object `{label: "p/q"}`.
pub fn measure(name: &'static str, space: &MeasureSpace, text: &str) -> Parsed<Measure> {
    let text = text.trim();
    if text == "uniform" {
        return Ok(Measure::uniform(space));
    }
    if let Some(inner) = text.strip_prefix('(').and_then(|t| t.strip_suffix(')')) {
        let weights = inner
            .split(',')
            .map(|w| parse_rational(w).map_err(|e| InputError::flag(name, e)))
            .collect::<Parsed<Vec<Rational>>>()?;
        if weights.len() != space.size() {
            let msg = format!("tuple has {} weights for {} atoms", weights.len(), space.size());
            return Err(InputError::flag(name, msg));
        }
        return Measure::new(space, weights).map_err(|e| InputError::flag(name, e));
    }
    let v = json_flag(name, text)?;
    Measure::from_json(space, &v).map_err(|e| InputError::flag(name, e))
}

pub fn credal_set(space: &MeasureSpace, text: &str) -> Parsed<CredalSet> {
    let v = json_flag("x", text)?;
    CredalSet::from_json(space, &v).map_err(|e| InputError::flag("x", e))
}

pub fn shift(name: &'static str, source: &MeasureSpace, text: &str) -> Parsed<RepShift> {
    let v = json_flag(name, text)?;
    let f = RepShift::from_json(&v).map_err(|e| InputError::flag(name, e))?;
    if f.source() != source {
        return Err(InputError::flag(name, "shift source differs from --space"));
    }
    Ok(f)
}

pub fn mass(space: &MeasureSpace, text: &str) -> Parsed<MassFunction> {
    let v = json_flag("mass", text)?;
    MassFunction::from_json(space, &v).map_err(|e| InputError::flag("mass", e))
}

pub fn rule(text: &str) -> Parsed<RuleId> {
    RuleId::parse(text.trim()).map_err(|e| InputError::flag("rule", e))
}

/// `all` or a comma-separated list of rule names.
pub fn rules(text: &str) -> Parsed<Vec<RuleId>> {
    if text.trim() == "all" {
        return Ok(RuleId::ALL.to_vec());
    }
    text.split(',').map(|r| RuleId::parse(r.trim()).map_err(|e| InputError::flag("rules", e))).collect()
}

/// `N` for denominators `1..=N`, or an explicit comma-separated list.
pub fn grid(text: &str) -> Parsed<Vec<u32>> {
    let bad = |t: &str| InputError::flag("grid", format!("`{t}` is not a positive integer"));
    let parse = |t: &str| t.trim().parse::<u32>().ok().filter(|&d| d > 0).ok_or_else(|| bad(t));
    if text.contains(',') {
        return text.split(',').map(parse).collect();
    }
    Ok((1..=parse(text)?).collect())
}

pub fn rational(name: &'static str, text: &str) -> Parsed<Rational> {
    parse_rational(text).map_err(|e| InputError::flag(name, e))
}
