//! Deterministic Rabin automata over the alphabet `2^props`.
//!
//! Automata are read from a subset of the Hanoi Omega-Automata format
//! ([`parse_dra`]) or from a small native JSON format ([`parse_dra_json`]).
//! The transition function is stored as an explicit table indexed by
//! [`Letter`], one row per automaton state.

mod hoa;
mod json;

use std::collections::BTreeSet;
use std::path::Path;

use thiserror::Error;

use crate::letter::Letter;

pub use hoa::parse_dra;
pub use json::{parse_dra_json, JsonAutomaton, JsonEdge, JsonPair};

/// Largest proposition count for which letters are expanded eagerly.
pub const MAX_AUTOMATON_PROPS: usize = 8;

#[derive(Debug, Error)]
pub enum AutomatonError {
    #[error("line {line}, column {col}: {message}")]
    Syntax {
        line: usize,
        col: usize,
        message: String,
    },
    #[error("state `{state}` has several successors on letter {letter}")]
    NonDeterministic { state: String, letter: String },
    #[error("state `{state}` has no transition on letter {letter}")]
    Incomplete { state: String, letter: String },
    #[error("acceptance condition is not a Rabin condition: {0}")]
    NotRabin(String),
    #[error("automaton proposition `{0}` is not declared by the model")]
    PropMismatch(String),
    #[error("at most {MAX_AUTOMATON_PROPS} propositions are supported, got {0}")]
    TooManyProps(usize),
    #[error("unsupported automaton feature: {0}")]
    Unsupported(String),
    #[error("unknown automaton state `{0}`")]
    UnknownState(String),
    #[error("duplicate automaton state `{0}`")]
    DuplicateState(String),
    #[error("automaton has no Rabin pairs")]
    NoPairs,
    #[error("{0}")]
    Invalid(String),
    #[error("malformed JSON automaton: {0}")]
    Json(#[from] serde_json::Error),
    #[error("cannot read `{path}`: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

/// One acceptance pair: a run is accepted by the pair if it visits `fin`
/// finitely often and `inf` infinitely often.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct RabinPair {
    pub fin: BTreeSet<usize>,
    pub inf: BTreeSet<usize>,
}

impl RabinPair {
    pub fn new(fin: impl IntoIterator<Item = usize>, inf: impl IntoIterator<Item = usize>) -> Self {
        RabinPair {
            fin: fin.into_iter().collect(),
            inf: inf.into_iter().collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RabinAutomaton {
    states: Vec<String>,
    props: Vec<String>,
    delta: Vec<Vec<usize>>,
    initial: usize,
    pairs: Vec<RabinPair>,
}

impl RabinAutomaton {
    /// `delta[s][letter]` is the successor of `s` on `letter`; every row must
    /// cover all `2^props.len()` letters.
    pub fn new(
        states: Vec<String>,
        props: Vec<String>,
        delta: Vec<Vec<usize>>,
        initial: usize,
        pairs: Vec<RabinPair>,
    ) -> Result<Self, AutomatonError> {
        if props.len() > MAX_AUTOMATON_PROPS {
            return Err(AutomatonError::TooManyProps(props.len()));
        }
        let n = states.len();
        if n == 0 {
            return Err(AutomatonError::Invalid("automaton has no states".into()));
        }
        let mut seen = BTreeSet::new();
        for s in &states {
            if !seen.insert(s) {
                return Err(AutomatonError::DuplicateState(s.clone()));
            }
        }
        if initial >= n {
            return Err(AutomatonError::Invalid(format!("initial state {initial} out of range")));
        }
        if delta.len() != n {
            return Err(AutomatonError::Invalid(format!(
                "transition table has {} rows for {n} states",
                delta.len()
            )));
        }
        let letters = 1usize << props.len();
        for (s, row) in delta.iter().enumerate() {
            if row.len() != letters {
                let letter = Letter(row.len().min(letters) as u32);
                return Err(AutomatonError::Incomplete {
                    state: states[s].clone(),
                    letter: letter_names(&props, letter),
                });
            }
            if let Some(&bad) = row.iter().find(|&&t| t >= n) {
                return Err(AutomatonError::Invalid(format!("successor {bad} out of range")));
            }
        }
        if pairs.is_empty() {
            return Err(AutomatonError::NoPairs);
        }
        for p in &pairs {
            if p.fin.iter().chain(&p.inf).any(|&s| s >= n) {
                return Err(AutomatonError::Invalid("Rabin pair names an unknown state".into()));
            }
        }
        Ok(RabinAutomaton {
            states,
            props,
            delta,
            initial,
            pairs,
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

    pub fn initial(&self) -> usize {
        self.initial
    }

    pub fn pairs(&self) -> &[RabinPair] {
        &self.pairs
    }

    pub fn pair_count(&self) -> usize {
        self.pairs.len()
    }

    pub fn step(&self, state: usize, letter: Letter) -> usize {
        self.delta[state][letter.index()]
    }

    pub fn delta(&self) -> &[Vec<usize>] {
        &self.delta
    }

    pub fn state_index(&self, id: &str) -> Option<usize> {
        self.states.iter().position(|s| s == id)
    }

    /// Decides acceptance of the ultimately periodic word `prefix · cycle^ω`.
    pub fn accepts_lasso(&self, prefix: &[Letter], cycle: &[Letter]) -> bool {
        assert!(!cycle.is_empty(), "lasso cycle must be non-empty");
        let mut s = self.initial;
        for &l in prefix {
            s = self.step(s, l);
        }
        // Iterate over whole cycles until the state at the cycle boundary repeats.
        let mut boundary = vec![usize::MAX; self.len()];
        let mut visits: Vec<usize> = Vec::new();
        let mut round = 0;
        while boundary[s] == usize::MAX {
            boundary[s] = round;
            for &l in cycle {
                s = self.step(s, l);
                visits.push(s);
            }
            round += 1;
        }
        let recurring: BTreeSet<usize> = visits[boundary[s] * cycle.len()..].iter().copied().collect();
        self.pairs
            .iter()
            .any(|p| recurring.is_disjoint(&p.fin) && !recurring.is_disjoint(&p.inf))
    }

    /// Renders the automaton as HOA with explicit per-letter edges.
    pub fn to_hoa(&self) -> String {
        hoa::write_hoa(self)
    }

    pub fn to_json(&self) -> JsonAutomaton {
        json::to_json(self)
    }
}

pub(crate) fn letter_names(props: &[String], letter: Letter) -> String {
    format!("{{{}}}", letter.names(props).join(","))
}

/// Maps automaton propositions onto positions in the model's proposition list.
pub(crate) fn map_props(aut_props: &[String], model_props: &[String]) -> Result<Vec<usize>, AutomatonError> {
    if model_props.len() > MAX_AUTOMATON_PROPS {
        return Err(AutomatonError::TooManyProps(model_props.len()));
    }
    let mut seen = BTreeSet::new();
    aut_props
        .iter()
        .map(|p| {
            if !seen.insert(p) {
                return Err(AutomatonError::Invalid(format!("proposition `{p}` declared twice")));
            }
            model_props
                .iter()
                .position(|m| m == p)
                .ok_or_else(|| AutomatonError::PropMismatch(p.clone()))
        })
        .collect()
}

/// Reads an automaton file: `.json` uses the native format, anything else HOA.
pub fn load_dra(path: &Path, props: &[String]) -> Result<RabinAutomaton, AutomatonError> {
    let text = std::fs::read_to_string(path).map_err(|source| AutomatonError::Io {
        path: path.display().to_string(),
        source,
    })?;
    if path.extension().is_some_and(|e| e == "json") {
        parse_dra_json(&text, props)
    } else {
        parse_dra(&text, props)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn props() -> Vec<String> {
        ["W", "G", "R"].iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn universal_and_empty_automata() {
        let u = parse_dra(include_str!("../../../../fixtures/universal.hoa"), &props()).unwrap();
        assert_eq!(u.len(), 1);
        assert_eq!(u.pair_count(), 1);
        assert_eq!(u.pairs()[0], RabinPair::new([], [0]));
        assert!(u.accepts_lasso(&[], &[Letter(0)]));
        let e = parse_dra(include_str!("../../../../fixtures/empty.hoa"), &props()).unwrap();
        assert_eq!(e.pairs()[0], RabinPair::new([0], []));
        assert!(!e.accepts_lasso(&[], &[Letter(0)]));
    }

    #[test]
    fn case_study_automata() {
        let a1 = parse_dra(include_str!("../../../../fixtures/phi1.hoa"), &props()).unwrap();
        assert_eq!(a1.len(), 3);
        assert_eq!(a1.pair_count(), 1);
        assert_eq!(a1.pairs()[0], RabinPair::new([0], [1]));
        let a2 = parse_dra(include_str!("../../../../fixtures/phi2.hoa"), &props()).unwrap();
        assert_eq!(a2.pair_count(), 2);
        assert_eq!(a2.pairs()[0], RabinPair::new([], [1]));
        assert_eq!(a2.pairs()[1], RabinPair::new([0, 1], [2]));
        assert_eq!(a1.delta(), a2.delta());
    }

    #[test]
    fn lasso_acceptance() {
        let p = props();
        let a1 = parse_dra(include_str!("../../../../fixtures/phi1.hoa"), &p).unwrap();
        let w = Letter::from_names(&p, ["W"]).unwrap();
        let g = Letter::from_names(&p, ["G"]).unwrap();
        let r = Letter::from_names(&p, ["R"]).unwrap();
        assert!(a1.accepts_lasso(&[r, r], &[w, g]));
        assert!(!a1.accepts_lasso(&[], &[g, r]));
        assert!(!a1.accepts_lasso(&[g], &[w]));
    }

    #[test]
    fn incomplete_table_is_rejected() {
        let err = RabinAutomaton::new(
            vec!["s0".into()],
            vec!["a".into()],
            vec![vec![0]],
            0,
            vec![RabinPair::new([], [0])],
        )
        .unwrap_err();
        assert!(matches!(err, AutomatonError::Incomplete { .. }));
    }
}
