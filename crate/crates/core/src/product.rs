//! Synchronous product of an interval chain with a Rabin automaton.
//!
//! Product state `<q, s>` moves to `<q', s'>` with the model's interval for
//! `q -> q'` exactly when `s' = delta(s, L(q'))`, i.e. the automaton reads the
//! label of the destination. Every product state carries the acceptance
//! propositions `E_i` / `F_i` of the pairs its automaton component belongs to.

use std::collections::{BTreeMap, VecDeque};
use std::fmt;

use serde::Serialize;
use thiserror::Error;

use crate::imc::Imc;
use crate::intervals::{IntervalEntry, IntervalMatrix};
use crate::rabin::{RabinAutomaton, RabinPair};

#[derive(Debug, Error)]
pub enum ProductError {
    #[error("automaton propositions {automaton:?} do not match model propositions {model:?}")]
    PropMismatch {
        model: Vec<String>,
        automaton: Vec<String>,
    },
}

/// Acceptance proposition of a product state: `E_i` or `F_i` for pair `i`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum AccProp {
    Fin(usize),
    Inf(usize),
}

impl fmt::Display for AccProp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AccProp::Fin(i) => write!(f, "E{}", i + 1),
            AccProp::Inf(i) => write!(f, "F{}", i + 1),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProductImc {
    model_states: Vec<String>,
    aut_states: Vec<String>,
    pairs: Vec<RabinPair>,
    intervals: IntervalMatrix,
    initial_of: Vec<usize>,
    reachable: Vec<bool>,
}

pub fn build_product(m: &Imc, a: &RabinAutomaton) -> Result<ProductImc, ProductError> {
    if m.props() != a.props() {
        return Err(ProductError::PropMismatch {
            model: m.props().to_vec(),
            automaton: a.props().to_vec(),
        });
    }
    let n_aut = a.len();
    let mut rows = Vec::with_capacity(m.len() * n_aut);
    for j in 0..m.len() {
        for s in 0..n_aut {
            let row = m
                .intervals()
                .row(j)
                .iter()
                .map(|e| IntervalEntry {
                    to: e.to * n_aut + a.step(s, m.label(e.to)),
                    lower: e.lower,
                    upper: e.upper,
                })
                .collect();
            rows.push(row);
        }
    }
    let intervals = IntervalMatrix::from_rows(rows);
    let initial_of: Vec<usize> = (0..m.len()).map(|j| j * n_aut + a.initial()).collect();
    let reachable = reachable_from(&intervals, &initial_of);
    Ok(ProductImc {
        model_states: m.states().to_vec(),
        aut_states: a.states().to_vec(),
        pairs: a.pairs().to_vec(),
        intervals,
        initial_of,
        reachable,
    })
}

fn reachable_from(intervals: &IntervalMatrix, roots: &[usize]) -> Vec<bool> {
    let mut seen = vec![false; intervals.len()];
    let mut queue: VecDeque<usize> = VecDeque::new();
    for &r in roots {
        if !seen[r] {
            seen[r] = true;
            queue.push_back(r);
        }
    }
    while let Some(u) = queue.pop_front() {
        for e in intervals.support(u) {
            if !seen[e.to] {
                seen[e.to] = true;
                queue.push_back(e.to);
            }
        }
    }
    seen
}

impl ProductImc {
    /// Number of product states, `|Q| * |S|`.
    pub fn len(&self) -> usize {
        self.intervals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.intervals.is_empty()
    }

    pub fn aut_len(&self) -> usize {
        self.aut_states.len()
    }

    pub fn model_len(&self) -> usize {
        self.model_states.len()
    }

    pub fn intervals(&self) -> &IntervalMatrix {
        &self.intervals
    }

    pub fn pair_count(&self) -> usize {
        self.pairs.len()
    }

    pub fn pairs(&self) -> &[RabinPair] {
        &self.pairs
    }

    /// `(model state, automaton state)` of a product state.
    pub fn components(&self, p: usize) -> (usize, usize) {
        (p / self.aut_len(), p % self.aut_len())
    }

    pub fn index_of(&self, model_state: usize, aut_state: usize) -> usize {
        model_state * self.aut_len() + aut_state
    }

    pub fn name(&self, p: usize) -> String {
        let (j, s) = self.components(p);
        format!("({},{})", self.model_states[j], self.aut_states[s])
    }

    pub fn model_states(&self) -> &[String] {
        &self.model_states
    }

    pub fn aut_states(&self) -> &[String] {
        &self.aut_states
    }

    /// The product state `<Q_i, s_0>` for every model state `Q_i`.
    pub fn initial_of(&self) -> &[usize] {
        &self.initial_of
    }

    /// States reachable from some `<Q_i, s_0>` when every usable edge is on.
    pub fn reachable(&self) -> &[bool] {
        &self.reachable
    }

    pub fn is_reachable(&self, p: usize) -> bool {
        self.reachable[p]
    }

    /// `true` iff `p` carries proposition `E_pair`.
    pub fn in_fin(&self, pair: usize, p: usize) -> bool {
        self.pairs[pair].fin.contains(&self.components(p).1)
    }

    /// `true` iff `p` carries proposition `F_pair`.
    pub fn in_inf(&self, pair: usize, p: usize) -> bool {
        self.pairs[pair].inf.contains(&self.components(p).1)
    }

    pub fn labels(&self, p: usize) -> Vec<AccProp> {
        let mut out = Vec::new();
        for i in 0..self.pair_count() {
            if self.in_fin(i, p) {
                out.push(AccProp::Fin(i));
            }
            if self.in_inf(i, p) {
                out.push(AccProp::Inf(i));
            }
        }
        out
    }

    pub fn acc_props(&self) -> Vec<AccProp> {
        let fin = (0..self.pair_count()).map(AccProp::Fin);
        let inf = (0..self.pair_count()).map(AccProp::Inf);
        fin.chain(inf).collect()
    }

    pub fn dump(&self) -> ProductDump {
        let n = self.len();
        let mut lower = vec![vec![0.0; n]; n];
        let mut upper = vec![vec![0.0; n]; n];
        for (u, row) in self.intervals.rows().enumerate() {
            for e in row {
                lower[u][e.to] = e.lower;
                upper[u][e.to] = e.upper;
            }
        }
        let labels = (0..n)
            .filter_map(|p| {
                let l = self.labels(p);
                (!l.is_empty()).then(|| (self.name(p), l.iter().map(AccProp::to_string).collect()))
            })
            .collect();
        ProductDump {
            states: (0..n).map(|p| self.name(p)).collect(),
            props: self.acc_props().iter().map(AccProp::to_string).collect(),
            labels,
            lower,
            upper,
            initial: self
                .model_states
                .iter()
                .zip(&self.initial_of)
                .map(|(q, &p)| (q.clone(), self.name(p)))
                .collect(),
            reachable: (0..n).filter(|&p| self.reachable[p]).map(|p| self.name(p)).collect(),
        }
    }
}

/// JSON view of a product: the model JSON fields plus the initial-state map
/// and the reachable part.
#[derive(Debug, Clone, Serialize)]
pub struct ProductDump {
    pub states: Vec<String>,
    pub props: Vec<String>,
    pub labels: BTreeMap<String, Vec<String>>,
    pub lower: Vec<Vec<f64>>,
    pub upper: Vec<Vec<f64>>,
    pub initial: BTreeMap<String, String>,
    pub reachable: Vec<String>,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::imc::{parse_imc, validate_imc, RawImc};
    use crate::letter::Letter;
    use crate::rabin::parse_dra;

    fn case_study() -> Imc {
        parse_imc(include_str!("../../../fixtures/case_study.imc")).unwrap()
    }

    #[test]
    fn case_study_times_phi1() {
        let m = case_study();
        let a = parse_dra(include_str!("../../../fixtures/phi1.hoa"), m.props()).unwrap();
        let p = build_product(&m, &a).unwrap();
        assert_eq!(p.len(), 18);
        let r = Letter::from_names(m.props(), ["R"]).unwrap();
        for s in 0..3 {
            let row = p.intervals().row(p.index_of(3, s));
            assert_eq!(row.len(), 1);
            assert_eq!(row[0].to, p.index_of(3, a.step(s, r)));
            assert_eq!((row[0].lower, row[0].upper), (1.0, 1.0));
        }
    }

    #[test]
    fn universal_product_mirrors_the_model() {
        let m = case_study();
        let a = parse_dra(include_str!("../../../fixtures/universal.hoa"), m.props()).unwrap();
        let p = build_product(&m, &a).unwrap();
        assert_eq!(p.len(), m.len());
        assert_eq!(p.intervals(), m.intervals());
        for s in 0..p.len() {
            assert_eq!(p.labels(s), vec![AccProp::Inf(0)]);
        }
    }

    #[test]
    fn product_rows_stay_valid() {
        let m = case_study();
        for fixture in [
            include_str!("../../../fixtures/phi1.hoa"),
            include_str!("../../../fixtures/phi2.hoa"),
            include_str!("../../../fixtures/not_phi2.hoa"),
        ] {
            let a = parse_dra(fixture, m.props()).unwrap();
            let d = build_product(&m, &a).unwrap().dump();
            let raw = RawImc {
                states: d.states,
                props: d.props,
                labels: d.labels,
                lower: d.lower,
                upper: d.upper,
            };
            assert!(validate_imc(&raw).is_empty());
        }
    }

    #[test]
    fn prop_mismatch() {
        let m = case_study();
        let a = parse_dra(include_str!("../../../fixtures/universal.hoa"), &[]).unwrap();
        assert!(matches!(build_product(&m, &a), Err(ProductError::PropMismatch { .. })));
    }
}
