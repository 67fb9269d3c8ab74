//! Interval-valued Markov chains and the concrete chains they induce.
//!
//! An [`Imc`] assigns every ordered pair of states an interval
//! `[lower, upper]` of admissible transition probabilities. A row-stochastic
//! matrix whose entries fall inside those intervals is an *induced* chain
//! ([`Mc`]). Values are validated on construction and immutable afterwards.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::intervals::{covers_unit_mass, within_unit_mass, IntervalMatrix, SUM_TOLERANCE};
use crate::letter::{Letter, MAX_PROPS};

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("line {line}, column {col}: {message}")]
    Syntax {
        line: usize,
        col: usize,
        message: String,
    },
    #[error("duplicate state `{0}`")]
    DuplicateState(String),
    #[error("duplicate proposition `{0}`")]
    DuplicateProp(String),
    #[error("label of state `{state}` uses undeclared proposition `{prop}`")]
    UnknownProp { state: String, prop: String },
    #[error("unknown state `{0}`")]
    UnknownState(String),
    #[error("at most {MAX_PROPS} atomic propositions are supported, got {0}")]
    TooManyProps(usize),
    #[error("{0}")]
    Shape(String),
    #[error("invalid model: {}", join_violations(.0))]
    Invalid(Vec<Violation>),
    #[error("malformed JSON model: {0}")]
    Json(#[from] serde_json::Error),
    #[error("cannot read `{path}`: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

fn join_violations(v: &[Violation]) -> String {
    v.iter().map(Violation::to_string).collect::<Vec<_>>().join("; ")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Bound {
    Lower,
    Upper,
}

impl fmt::Display for Bound {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Bound::Lower => "lower",
            Bound::Upper => "upper",
        })
    }
}

/// A violated model invariant, with the coordinates it was found at.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Violation {
    Shape {
        message: String,
    },
    OutOfRange {
        bound: Bound,
        from: String,
        to: String,
        value: f64,
    },
    Inverted {
        from: String,
        to: String,
    },
    LowerSumAboveOne {
        state: String,
        sum: f64,
    },
    UpperSumBelowOne {
        state: String,
        sum: f64,
    },
    UnknownProp {
        state: String,
        prop: String,
    },
    UnknownLabelState {
        state: String,
    },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::Shape { message } => f.write_str(message),
            Violation::OutOfRange {
                bound,
                from,
                to,
                value,
            } => write!(f, "{bound} bound {value} at ({from},{to}) outside [0,1]"),
            Violation::Inverted { from, to } => write!(f, "interval inverted at ({from},{to})"),
            Violation::LowerSumAboveOne { state, sum } => {
                write!(f, "lower bounds of row {state} sum to {sum} > 1")
            }
            Violation::UpperSumBelowOne { state, sum } => {
                write!(f, "upper bounds of row {state} sum to {sum} < 1")
            }
            Violation::UnknownProp { state, prop } => {
                write!(f, "label of {state} uses undeclared proposition {prop}")
            }
            Violation::UnknownLabelState { state } => write!(f, "label for unknown state {state}"),
        }
    }
}

/// Unvalidated model data as read from a file. Mirrors the JSON model format.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawImc {
    pub states: Vec<String>,
    #[serde(default)]
    pub props: Vec<String>,
    #[serde(default)]
    pub labels: BTreeMap<String, Vec<String>>,
    pub lower: Vec<Vec<f64>>,
    pub upper: Vec<Vec<f64>>,
}

/// Lists every violated invariant of `raw`; empty iff the data forms a valid IMC.
pub fn validate_imc(raw: &RawImc) -> Vec<Violation> {
    let n = raw.states.len();
    let mut out = Vec::new();
    for (name, m) in [("lower", &raw.lower), ("upper", &raw.upper)] {
        if m.len() != n || m.iter().any(|r| r.len() != n) {
            out.push(Violation::Shape {
                message: format!("{name} matrix is not {n}x{n}"),
            });
        }
    }
    if !out.is_empty() {
        return out;
    }
    for (state, props) in &raw.labels {
        if !raw.states.contains(state) {
            out.push(Violation::UnknownLabelState {
                state: state.clone(),
            });
        }
        for p in props {
            if !raw.props.contains(p) {
                out.push(Violation::UnknownProp {
                    state: state.clone(),
                    prop: p.clone(),
                });
            }
        }
    }
    for (j, from) in raw.states.iter().enumerate() {
        for (l, to) in raw.states.iter().enumerate() {
            let (lo, hi) = (raw.lower[j][l], raw.upper[j][l]);
            let mut in_range = true;
            for (bound, value) in [(Bound::Lower, lo), (Bound::Upper, hi)] {
                if !(0.0..=1.0).contains(&value) {
                    in_range = false;
                    out.push(Violation::OutOfRange {
                        bound,
                        from: from.clone(),
                        to: to.clone(),
                        value,
                    });
                }
            }
            if in_range && lo > hi {
                out.push(Violation::Inverted {
                    from: from.clone(),
                    to: to.clone(),
                });
            }
        }
        let lo_sum: f64 = raw.lower[j].iter().sum();
        let hi_sum: f64 = raw.upper[j].iter().sum();
        if !within_unit_mass(lo_sum) {
            out.push(Violation::LowerSumAboveOne {
                state: from.clone(),
                sum: lo_sum,
            });
        }
        if !covers_unit_mass(hi_sum) {
            out.push(Violation::UpperSumBelowOne {
                state: from.clone(),
                sum: hi_sum,
            });
        }
    }
    out
}

impl RawImc {
    pub fn into_imc(self) -> Result<Imc, ModelError> {
        let mut seen = BTreeSet::new();
        for s in &self.states {
            if !seen.insert(s.as_str()) {
                return Err(ModelError::DuplicateState(s.clone()));
            }
        }
        let mut seen = BTreeSet::new();
        for p in &self.props {
            if !seen.insert(p.as_str()) {
                return Err(ModelError::DuplicateProp(p.clone()));
            }
        }
        if self.props.len() > MAX_PROPS {
            return Err(ModelError::TooManyProps(self.props.len()));
        }
        let violations = validate_imc(&self);
        if !violations.is_empty() {
            return Err(ModelError::Invalid(violations));
        }
        let mut labels = vec![Letter::EMPTY; self.states.len()];
        for (state, props) in &self.labels {
            let idx = self.states.iter().position(|s| s == state).expect("validated");
            labels[idx] = Letter::from_names(&self.props, props.iter().map(String::as_str))
                .expect("validated");
        }
        let intervals = IntervalMatrix::from_dense(&self.lower, &self.upper);
        Ok(Imc {
            states: self.states,
            props: self.props,
            labels,
            lower: self.lower,
            upper: self.upper,
            intervals,
        })
    }
}

/// A validated interval-valued Markov chain.
#[derive(Debug, Clone, PartialEq)]
pub struct Imc {
    states: Vec<String>,
    props: Vec<String>,
    labels: Vec<Letter>,
    lower: Vec<Vec<f64>>,
    upper: Vec<Vec<f64>>,
    intervals: IntervalMatrix,
}

impl Imc {
    pub fn states(&self) -> &[String] {
        &self.states
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn props(&self) -> &[String] {
        &self.props
    }

    pub fn label(&self, state: usize) -> Letter {
        self.labels[state]
    }

    pub fn labels(&self) -> &[Letter] {
        &self.labels
    }

    pub fn lower(&self) -> &[Vec<f64>] {
        &self.lower
    }

    pub fn upper(&self) -> &[Vec<f64>] {
        &self.upper
    }

    pub fn intervals(&self) -> &IntervalMatrix {
        &self.intervals
    }

    pub fn state_index(&self, id: &str) -> Option<usize> {
        self.states.iter().position(|s| s == id)
    }

    /// `true` iff `row` is a distribution that lies inside the intervals of `state`.
    pub fn contains_distribution(&self, state: &str, row: &[f64]) -> Result<bool, ModelError> {
        let idx = self
            .state_index(state)
            .ok_or_else(|| ModelError::UnknownState(state.to_string()))?;
        Ok(self.admits(idx, row))
    }

    pub fn admits(&self, state: usize, row: &[f64]) -> bool {
        if row.len() != self.len() {
            return false;
        }
        let sum: f64 = row.iter().sum();
        (sum - 1.0).abs() <= SUM_TOLERANCE
            && row
                .iter()
                .zip(&self.lower[state])
                .zip(&self.upper[state])
                .all(|((&p, &lo), &hi)| lo <= p && p <= hi)
    }

    /// The chain obtained by installing `rows` as transition function, provided
    /// every row is admitted by this IMC.
    pub fn induce(&self, rows: Vec<Vec<f64>>) -> Result<Mc, ModelError> {
        if rows.len() != self.len() {
            return Err(ModelError::Shape(format!(
                "expected {} rows, got {}",
                self.len(),
                rows.len()
            )));
        }
        for (j, row) in rows.iter().enumerate() {
            if !self.admits(j, row) {
                return Err(ModelError::Shape(format!(
                    "row of {} is not admitted by the model intervals",
                    self.states[j]
                )));
            }
        }
        Ok(Mc {
            states: self.states.clone(),
            props: self.props.clone(),
            labels: self.labels.clone(),
            trans: rows,
        })
    }

    /// Point-interval encoding of a concrete chain.
    pub fn from_mc(mc: &Mc) -> Imc {
        mc.to_raw_imc().into_imc().expect("a valid chain is a valid point-interval IMC")
    }

    pub fn to_raw(&self) -> RawImc {
        let labels = self
            .states
            .iter()
            .zip(&self.labels)
            .filter(|(_, l)| **l != Letter::EMPTY)
            .map(|(s, l)| {
                (
                    s.clone(),
                    l.names(&self.props).into_iter().map(str::to_string).collect(),
                )
            })
            .collect();
        RawImc {
            states: self.states.clone(),
            props: self.props.clone(),
            labels,
            lower: self.lower.clone(),
            upper: self.upper.clone(),
        }
    }

    /// Renders the model in the line-oriented text format read by [`parse_imc`].
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!("states: {}\n", self.states.join(" ")));
        out.push_str(&format!("props: {}\n", self.props.join(" ")));
        for (s, l) in self.states.iter().zip(&self.labels) {
            if *l != Letter::EMPTY {
                out.push_str(&format!("label {s}: {}\n", l.names(&self.props).join(" ")));
            }
        }
        for (name, m) in [("lower", &self.lower), ("upper", &self.upper)] {
            out.push_str(name);
            out.push_str(":\n");
            for row in m {
                let cells: Vec<String> = row.iter().map(|v| format!("{v}")).collect();
                out.push_str(&cells.join(" "));
                out.push('\n');
            }
        }
        out
    }
}

/// A concrete Markov chain with a row-stochastic transition matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Mc {
    states: Vec<String>,
    props: Vec<String>,
    labels: Vec<Letter>,
    trans: Vec<Vec<f64>>,
}

impl Mc {
    pub fn new(
        states: Vec<String>,
        props: Vec<String>,
        labels: Vec<Letter>,
        trans: Vec<Vec<f64>>,
    ) -> Result<Mc, ModelError> {
        let n = states.len();
        if labels.len() != n || trans.len() != n || trans.iter().any(|r| r.len() != n) {
            return Err(ModelError::Shape(format!("transition matrix is not {n}x{n}")));
        }
        for (j, row) in trans.iter().enumerate() {
            if row.iter().any(|p| !(0.0..=1.0).contains(p)) {
                return Err(ModelError::Shape(format!(
                    "row of {} has an entry outside [0,1]",
                    states[j]
                )));
            }
            let sum: f64 = row.iter().sum();
            if (sum - 1.0).abs() > SUM_TOLERANCE {
                return Err(ModelError::Shape(format!(
                    "row of {} sums to {sum}, not 1",
                    states[j]
                )));
            }
        }
        Ok(Mc {
            states,
            props,
            labels,
            trans,
        })
    }

    pub fn states(&self) -> &[String] {
        &self.states
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn props(&self) -> &[String] {
        &self.props
    }

    pub fn labels(&self) -> &[Letter] {
        &self.labels
    }

    pub fn trans(&self) -> &[Vec<f64>] {
        &self.trans
    }

    pub fn prob(&self, from: usize, to: usize) -> f64 {
        self.trans[from][to]
    }

    fn to_raw_imc(&self) -> RawImc {
        let labels = self
            .states
            .iter()
            .zip(&self.labels)
            .filter(|(_, l)| **l != Letter::EMPTY)
            .map(|(s, l)| {
                (
                    s.clone(),
                    l.names(&self.props).into_iter().map(str::to_string).collect(),
                )
            })
            .collect();
        RawImc {
            states: self.states.clone(),
            props: self.props.clone(),
            labels,
            lower: self.trans.clone(),
            upper: self.trans.clone(),
        }
    }
}

/// Parses the line-oriented model format:
///
/// ```text
/// states: q0 q1
/// props: a b
/// label q0: a
/// lower:
/// 0 1
/// 0 1
/// upper:
/// 0.5 1
/// 0 1
/// ```
///
/// `#` starts a comment that runs to the end of the line.
pub fn parse_imc(text: &str) -> Result<Imc, ModelError> {
    parse_raw_imc(text)?.into_imc()
}

pub fn parse_imc_json(text: &str) -> Result<Imc, ModelError> {
    let raw: RawImc = serde_json::from_str(text)?;
    raw.into_imc()
}

/// Reads a model file, choosing the JSON mirror for `.json` paths.
pub fn load_imc(path: &Path) -> Result<Imc, ModelError> {
    let text = std::fs::read_to_string(path).map_err(|source| ModelError::Io {
        path: path.display().to_string(),
        source,
    })?;
    if path.extension().is_some_and(|e| e == "json") {
        parse_imc_json(&text)
    } else {
        parse_imc(&text)
    }
}

struct Tok<'a> {
    text: &'a str,
    col: usize,
}

fn tokens(line: &str) -> Vec<Tok<'_>> {
    let mut out = Vec::new();
    let mut start = None;
    for (i, c) in line.char_indices() {
        if c.is_whitespace() {
            if let Some(s) = start.take() {
                out.push(Tok {
                    text: &line[s..i],
                    col: s + 1,
                });
            }
        } else if start.is_none() {
            start = Some(i);
        }
    }
    if let Some(s) = start {
        out.push(Tok {
            text: &line[s..],
            col: s + 1,
        });
    }
    out
}

#[derive(Clone, Copy, PartialEq)]
enum Section {
    Header,
    Lower,
    Upper,
}

fn syntax(line: usize, col: usize, message: impl Into<String>) -> ModelError {
    ModelError::Syntax {
        line,
        col,
        message: message.into(),
    }
}

pub fn parse_raw_imc(text: &str) -> Result<RawImc, ModelError> {
    let mut raw = RawImc::default();
    let mut have_states = false;
    let mut section = Section::Header;
    let mut labelled = BTreeSet::new();

    for (ln, full) in text.lines().enumerate() {
        let ln = ln + 1;
        let line = full.split('#').next().unwrap_or("");
        let toks = tokens(line);
        let Some(first) = toks.first() else {
            continue;
        };
        match first.text {
            "states:" => {
                if have_states {
                    return Err(syntax(ln, first.col, "`states:` declared twice"));
                }
                have_states = true;
                for t in &toks[1..] {
                    if raw.states.iter().any(|s| s == t.text) {
                        return Err(ModelError::DuplicateState(t.text.to_string()));
                    }
                    raw.states.push(t.text.to_string());
                }
                if raw.states.is_empty() {
                    return Err(syntax(ln, first.col, "no states declared"));
                }
                section = Section::Header;
            }
            "props:" => {
                for t in &toks[1..] {
                    if raw.props.iter().any(|p| p == t.text) {
                        return Err(ModelError::DuplicateProp(t.text.to_string()));
                    }
                    raw.props.push(t.text.to_string());
                }
                section = Section::Header;
            }
            "label" => {
                let Some(name) = toks.get(1) else {
                    return Err(syntax(ln, first.col, "expected `label <state>: <props>`"));
                };
                let Some(state) = name.text.strip_suffix(':') else {
                    return Err(syntax(ln, name.col, "expected `:` after state name"));
                };
                if !raw.states.iter().any(|s| s == state) {
                    return Err(ModelError::UnknownState(state.to_string()));
                }
                if !labelled.insert(state.to_string()) {
                    return Err(syntax(ln, name.col, format!("state `{state}` labelled twice")));
                }
                let mut props = Vec::new();
                for t in &toks[2..] {
                    if !raw.props.iter().any(|p| p == t.text) {
                        return Err(ModelError::UnknownProp {
                            state: state.to_string(),
                            prop: t.text.to_string(),
                        });
                    }
                    props.push(t.text.to_string());
                }
                raw.labels.insert(state.to_string(), props);
                section = Section::Header;
            }
            "lower:" | "upper:" => {
                if !have_states {
                    return Err(syntax(ln, first.col, "matrix given before `states:`"));
                }
                if toks.len() > 1 {
                    return Err(syntax(ln, toks[1].col, "matrix rows start on the next line"));
                }
                section = if first.text == "lower:" {
                    if !raw.lower.is_empty() {
                        return Err(syntax(ln, first.col, "`lower:` declared twice"));
                    }
                    Section::Lower
                } else {
                    if !raw.upper.is_empty() {
                        return Err(syntax(ln, first.col, "`upper:` declared twice"));
                    }
                    Section::Upper
                };
            }
            _ => {
                let target = match section {
                    Section::Lower => &mut raw.lower,
                    Section::Upper => &mut raw.upper,
                    Section::Header => {
                        return Err(syntax(
                            ln,
                            first.col,
                            format!("unexpected `{}`", first.text),
                        ))
                    }
                };
                let n = raw.states.len();
                if target.len() == n {
                    return Err(syntax(ln, first.col, format!("more than {n} matrix rows")));
                }
                if toks.len() != n {
                    return Err(syntax(
                        ln,
                        first.col,
                        format!("expected {n} entries, found {}", toks.len()),
                    ));
                }
                let mut row = Vec::with_capacity(n);
                for t in &toks {
                    let v: f64 = t
                        .text
                        .parse()
                        .map_err(|_| syntax(ln, t.col, format!("not a number: `{}`", t.text)))?;
                    row.push(v);
                }
                target.push(row);
            }
        }
    }
    let n = raw.states.len();
    if !have_states {
        return Err(syntax(1, 1, "missing `states:` header"));
    }
    let last = text.lines().count().max(1);
    for (name, m) in [("lower", &raw.lower), ("upper", &raw.upper)] {
        if m.len() != n {
            return Err(syntax(
                last,
                1,
                format!("`{name}:` needs {n} rows, found {}", m.len()),
            ));
        }
    }
    Ok(raw)
}
