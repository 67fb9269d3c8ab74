use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::{letter_names, map_props, AutomatonError, RabinAutomaton, RabinPair};
use crate::letter::Letter;

/// Native JSON automaton format. Each edge carries one explicit letter,
/// listed as the propositions that hold.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JsonAutomaton {
    pub states: Vec<String>,
    pub initial: String,
    #[serde(default)]
    pub props: Vec<String>,
    pub edges: Vec<JsonEdge>,
    pub pairs: Vec<JsonPair>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JsonEdge {
    pub from: String,
    pub letter: Vec<String>,
    pub to: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JsonPair {
    #[serde(rename = "E")]
    pub e: Vec<String>,
    #[serde(rename = "F")]
    pub f: Vec<String>,
}

pub fn parse_dra_json(text: &str, props: &[String]) -> Result<RabinAutomaton, AutomatonError> {
    let doc: JsonAutomaton = serde_json::from_str(text)?;
    from_json(&doc, props)
}

pub(super) fn from_json(doc: &JsonAutomaton, props: &[String]) -> Result<RabinAutomaton, AutomatonError> {
    let bits = map_props(&doc.props, props)?;
    let index = |name: &str| {
        doc.states
            .iter()
            .position(|s| s == name)
            .ok_or_else(|| AutomatonError::UnknownState(name.to_string()))
    };
    let n = doc.states.len();
    let own_letters = 1usize << doc.props.len();
    // Table over the automaton's own propositions, then projected onto the model's.
    let mut own = vec![vec![None; own_letters]; n];
    for e in &doc.edges {
        let from = index(&e.from)?;
        let to = index(&e.to)?;
        let letter = Letter::from_names(&doc.props, e.letter.iter().map(String::as_str))
            .map_err(AutomatonError::PropMismatch)?;
        match own[from][letter.index()] {
            Some(prev) if prev != to => {
                return Err(AutomatonError::NonDeterministic {
                    state: e.from.clone(),
                    letter: letter_names(&doc.props, letter),
                })
            }
            _ => own[from][letter.index()] = Some(to),
        }
    }
    let mut delta = vec![vec![0; 1 << props.len()]; n];
    for s in 0..n {
        for letter in Letter::all(props.len()) {
            let projected = bits
                .iter()
                .enumerate()
                .filter(|(_, &b)| letter.contains(b))
                .fold(Letter::EMPTY, |acc, (i, _)| acc.with(i));
            delta[s][letter.index()] = own[s][projected.index()].ok_or_else(|| {
                AutomatonError::Incomplete {
                    state: doc.states[s].clone(),
                    letter: letter_names(&doc.props, projected),
                }
            })?;
        }
    }
    let set = |names: &[String]| -> Result<BTreeSet<usize>, AutomatonError> {
        names.iter().map(|s| index(s)).collect()
    };
    let pairs = doc
        .pairs
        .iter()
        .map(|p| {
            Ok(RabinPair {
                fin: set(&p.e)?,
                inf: set(&p.f)?,
            })
        })
        .collect::<Result<Vec<_>, AutomatonError>>()?;
    let initial = index(&doc.initial)?;
    RabinAutomaton::new(doc.states.clone(), props.to_vec(), delta, initial, pairs)
}

pub(super) fn to_json(a: &RabinAutomaton) -> JsonAutomaton {
    let names = |set: &BTreeSet<usize>| set.iter().map(|&s| a.states()[s].clone()).collect();
    let mut edges = Vec::new();
    for (s, from) in a.states().iter().enumerate() {
        for letter in Letter::all(a.props().len()) {
            edges.push(JsonEdge {
                from: from.clone(),
                letter: letter.names(a.props()).into_iter().map(str::to_string).collect(),
                to: a.states()[a.step(s, letter)].clone(),
            });
        }
    }
    JsonAutomaton {
        states: a.states().to_vec(),
        initial: a.states()[a.initial()].clone(),
        props: a.props().to_vec(),
        edges,
        pairs: a
            .pairs()
            .iter()
            .map(|p| JsonPair {
                e: names(&p.fin),
                f: names(&p.inf),
            })
            .collect(),
    }
}
