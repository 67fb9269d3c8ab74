//! Graph search for the largest sets of non-accepting and accepting states
//! that some resolution of a product's intervals can produce.
//!
//! Every edge with a positive upper bound starts out "on". Candidate SCCs are
//! refined by discarding *leaky* states, i.e. states that cannot keep all of
//! their probability mass inside the candidate under any admissible
//! distribution. A leak-free SCC is a BSCC of some induced chain; it is then
//! classified against the Rabin pairs, and states that prevent the wanted
//! classification are treated as leaky in turn.

use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;
use thiserror::Error;

use crate::intervals::{covers_unit_mass, IntervalMatrix};
use crate::product::ProductImc;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum SearchError {
    #[error("the accepting-set search needs exactly one Rabin pair, automaton has {found}")]
    PairCount { found: usize },
}

/// Support graph of an interval matrix: `u -> v` whenever some admissible
/// distribution gives the edge positive mass; the edge is *forced* when its
/// lower bound is positive.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct EdgeGraph {
    succ: Vec<Vec<usize>>,
    forced: Vec<Vec<usize>>,
}

impl EdgeGraph {
    pub fn from_intervals(m: &IntervalMatrix) -> Self {
        let succ = (0..m.len()).map(|s| m.support(s).map(|e| e.to).collect()).collect();
        let forced = m
            .rows()
            .map(|r| r.iter().filter(|e| e.is_forced()).map(|e| e.to).collect())
            .collect();
        EdgeGraph { succ, forced }
    }

    /// Graph with the given adjacency and no forced edges.
    pub fn from_adjacency(succ: Vec<Vec<usize>>) -> Self {
        let forced = vec![Vec::new(); succ.len()];
        EdgeGraph { succ, forced }
    }

    pub fn len(&self) -> usize {
        self.succ.len()
    }

    pub fn is_empty(&self) -> bool {
        self.succ.is_empty()
    }

    pub fn successors(&self, v: usize) -> &[usize] {
        &self.succ[v]
    }

    pub fn forced(&self, v: usize) -> &[usize] {
        &self.forced[v]
    }
}

/// Maximal strongly connected components of `g`, restricted to the vertices
/// flagged in `restrict` when given. Components are sorted internally and
/// ordered by their smallest vertex. Trivial singletons are included.
pub fn strongly_connected_components(g: &EdgeGraph, restrict: Option<&[bool]>) -> Vec<Vec<usize>> {
    let n = g.len();
    let allowed = |v: usize| restrict.is_none_or(|r| r[v]);
    const UNSEEN: usize = usize::MAX;
    let mut index = vec![UNSEEN; n];
    let mut low = vec![0; n];
    let mut on_stack = vec![false; n];
    let mut stack = Vec::new();
    let mut comps = Vec::new();
    let mut counter = 0;
    // Explicit DFS stack of (vertex, next successor position).
    let mut call: Vec<(usize, usize)> = Vec::new();

    for root in 0..n {
        if index[root] != UNSEEN || !allowed(root) {
            continue;
        }
        call.push((root, 0));
        index[root] = counter;
        low[root] = counter;
        counter += 1;
        stack.push(root);
        on_stack[root] = true;

        while let Some(&mut (v, ref mut pos)) = call.last_mut() {
            if let Some(&w) = g.succ[v].get(*pos) {
                *pos += 1;
                if !allowed(w) {
                    continue;
                }
                if index[w] == UNSEEN {
                    index[w] = counter;
                    low[w] = counter;
                    counter += 1;
                    stack.push(w);
                    on_stack[w] = true;
                    call.push((w, 0));
                } else if on_stack[w] {
                    low[v] = low[v].min(index[w]);
                }
            } else {
                call.pop();
                if let Some(&(parent, _)) = call.last() {
                    low[parent] = low[parent].min(low[v]);
                }
                if low[v] == index[v] {
                    let mut comp = Vec::new();
                    loop {
                        let w = stack.pop().expect("tarjan stack");
                        on_stack[w] = false;
                        comp.push(w);
                        if w == v {
                            break;
                        }
                    }
                    comp.sort_unstable();
                    comps.push(comp);
                }
            }
        }
    }
    comps.sort_by_key(|c| c[0]);
    comps
}

/// States of `candidate` that must leak mass outside the candidate under every
/// admissible distribution, closed under propagation: a state is leaky if it
/// has a forced edge leaving the non-leaky part, or if the upper bounds into
/// the non-leaky part sum to less than 1. `seeds` are leaky by fiat.
pub fn find_leaky(candidate: &[usize], m: &IntervalMatrix, seeds: &[usize]) -> BTreeSet<usize> {
    let mut inside = vec![false; m.len()];
    for &v in candidate {
        inside[v] = true;
    }
    let mut leaky = vec![false; m.len()];
    for &s in seeds {
        if inside[s] {
            leaky[s] = true;
        }
    }
    loop {
        let mut changed = false;
        for &v in candidate {
            if leaky[v] {
                continue;
            }
            let mut retained = 0.0;
            let mut forced_out = false;
            for e in m.row(v) {
                if inside[e.to] && !leaky[e.to] {
                    retained += e.upper;
                } else if e.is_forced() {
                    forced_out = true;
                    break;
                }
            }
            if forced_out || !covers_unit_mass(retained) {
                leaky[v] = true;
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }
    candidate.iter().copied().filter(|&v| leaky[v]).collect()
}

/// Why a retained BSCC was classified the way it was.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Justification {
    /// Every pair whose `F` occurs in the component is blocked by an `E` state.
    NonAccepting { blocked: Vec<(usize, usize)> },
    /// `pair` sees its `F` at `inf_state` and no `E` state.
    Accepting { pair: usize, inf_state: usize },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Witness {
    pub states: Vec<usize>,
    pub justification: Justification,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ClassifiedSets {
    pub non_accepting: BTreeSet<usize>,
    /// Only computed by the single-pair accepting search.
    pub accepting: Option<BTreeSet<usize>>,
    pub witnesses: Vec<Witness>,
    /// Number of SCC decompositions performed.
    pub scc_passes: usize,
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Goal {
    NonAccepting,
    Accepting,
}

/// What to do with a leak-free candidate.
enum Verdict {
    Retain(Justification),
    Eliminate(Vec<usize>),
    Discard,
}

fn classify(p: &ProductImc, comp: &[usize], goal: Goal) -> Verdict {
    match goal {
        Goal::NonAccepting => {
            let mut blocked = Vec::new();
            let mut unmatched = Vec::new();
            for pair in 0..p.pair_count() {
                if !comp.iter().any(|&v| p.in_inf(pair, v)) {
                    continue;
                }
                match comp.iter().find(|&&v| p.in_fin(pair, v)) {
                    Some(&e) => blocked.push((pair, e)),
                    None => unmatched.push(pair),
                }
            }
            if unmatched.is_empty() {
                Verdict::Retain(Justification::NonAccepting { blocked })
            } else {
                let seeds = comp
                    .iter()
                    .copied()
                    .filter(|&v| unmatched.iter().any(|&i| p.in_inf(i, v)))
                    .collect();
                Verdict::Eliminate(seeds)
            }
        }
        Goal::Accepting => {
            let fin: Vec<usize> = comp.iter().copied().filter(|&v| p.in_fin(0, v)).collect();
            if !fin.is_empty() {
                return Verdict::Eliminate(fin);
            }
            match comp.iter().find(|&&v| p.in_inf(0, v)) {
                Some(&f) => Verdict::Retain(Justification::Accepting {
                    pair: 0,
                    inf_state: f,
                }),
                None => Verdict::Discard,
            }
        }
    }
}

fn search(p: &ProductImc, goal: Goal) -> ClassifiedSets {
    let m = p.intervals();
    let g = EdgeGraph::from_intervals(m);
    let mut out = ClassifiedSets::default();
    let mut retained = BTreeSet::new();

    // Candidates are pairwise disjoint, so keying by the smallest member is unique.
    let mut work: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    let push_sccs = |work: &mut BTreeMap<usize, Vec<usize>>, mask: &[bool], passes: &mut usize| {
        *passes += 1;
        for comp in strongly_connected_components(&g, Some(mask)) {
            let trivial = comp.len() == 1 && !g.successors(comp[0]).contains(&comp[0]);
            if !trivial {
                work.insert(comp[0], comp);
            }
        }
    };
    push_sccs(&mut work, p.reachable(), &mut out.scc_passes);

    let mut mask = vec![false; m.len()];
    while let Some((_, comp)) = work.pop_first() {
        let mut leaky = find_leaky(&comp, m, &[]);
        if leaky.is_empty() {
            match classify(p, &comp, goal) {
                Verdict::Retain(justification) => {
                    retained.extend(comp.iter().copied());
                    out.witnesses.push(Witness {
                        states: comp,
                        justification,
                    });
                    continue;
                }
                Verdict::Discard => continue,
                Verdict::Eliminate(seeds) => leaky = find_leaky(&comp, m, &seeds),
            }
        }
        let mut any = false;
        for &v in &comp {
            mask[v] = !leaky.contains(&v);
            any |= mask[v];
        }
        if any {
            push_sccs(&mut work, &mask, &mut out.scc_passes);
        }
        for &v in &comp {
            mask[v] = false;
        }
    }

    match goal {
        Goal::NonAccepting => out.non_accepting = retained,
        Goal::Accepting => out.accepting = Some(retained),
    }
    out
}

/// Union of all BSCCs that some interval resolution renders non-accepting,
/// over the reachable part of the product.
pub fn find_largest_nonaccepting(p: &ProductImc) -> ClassifiedSets {
    search(p, Goal::NonAccepting)
}

/// Union of all BSCCs that some resolution renders accepting. Defined only for
/// automata with a single Rabin pair.
pub fn find_largest_accepting_single_pair(p: &ProductImc) -> Result<ClassifiedSets, SearchError> {
    if p.pair_count() != 1 {
        return Err(SearchError::PairCount {
            found: p.pair_count(),
        });
    }
    Ok(search(p, Goal::Accepting))
}

/// JSON view of a search result with product state names.
#[derive(Debug, Clone, Serialize)]
pub struct SetsDump {
    pub non_accepting: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub accepting: Option<Vec<String>>,
    pub witnesses: Vec<WitnessDump>,
}

#[derive(Debug, Clone, Serialize)]
pub struct WitnessDump {
    pub states: Vec<String>,
    pub classification: &'static str,
    /// Pair index (1-based) justifying the classification, with the state that
    /// carries the deciding proposition.
    pub evidence: Vec<(usize, String)>,
}

impl ClassifiedSets {
    pub fn dump(&self, p: &ProductImc) -> SetsDump {
        let names = |s: &BTreeSet<usize>| s.iter().map(|&v| p.name(v)).collect();
        SetsDump {
            non_accepting: names(&self.non_accepting),
            accepting: self.accepting.as_ref().map(names),
            witnesses: self
                .witnesses
                .iter()
                .map(|w| {
                    let (classification, evidence) = match &w.justification {
                        Justification::NonAccepting { blocked } => (
                            "non_accepting",
                            blocked.iter().map(|&(i, e)| (i + 1, p.name(e))).collect(),
                        ),
                        Justification::Accepting { pair, inf_state } => {
                            ("accepting", vec![(pair + 1, p.name(*inf_state))])
                        }
                    };
                    WitnessDump {
                        states: w.states.iter().map(|&v| p.name(v)).collect(),
                        classification,
                        evidence,
                    }
                })
                .collect(),
        }
    }
}
