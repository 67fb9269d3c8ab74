//! Brute-force reference implementations for tests and benchmarks.
//!
//! Nothing here shares code with the search or the value iteration beyond the
//! input types: resolutions are enumerated edge by edge, components come from
//! a transitive closure, and chain reachability is a dense linear solve.

use std::collections::BTreeSet;

use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::imc::{Imc, Mc, ModelError, RawImc};
use crate::intervals::{covers_unit_mass, IntervalMatrix};
use crate::letter::{Letter, MAX_PROPS};
use crate::product::{build_product, ProductImc};
use crate::rabin::{RabinAutomaton, RabinPair};
use crate::reach::pour_row;

/// Optional-edge budget of the exhaustive enumeration.
pub const DEFAULT_CAP: usize = 14;

#[derive(Debug, Error)]
pub enum OracleError {
    #[error("{found} optional edges exceed the enumeration cap of {cap}")]
    CapExceeded { found: usize, cap: usize },
    #[error("singular reachability system")]
    Singular,
    #[error(transparent)]
    Model(#[from] ModelError),
}

pub fn seeded_rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Dense transitive closure; `reach[u][v]` iff `v` is reachable from `u` in at
/// least zero steps.
fn closure(adj: &[Vec<usize>]) -> Vec<Vec<u64>> {
    let n = adj.len();
    let words = n.div_ceil(64).max(1);
    let mut reach = vec![vec![0u64; words]; n];
    for (u, succ) in adj.iter().enumerate() {
        reach[u][u / 64] |= 1 << (u % 64);
        for &v in succ {
            reach[u][v / 64] |= 1 << (v % 64);
        }
    }
    for k in 0..n {
        let row_k = reach[k].clone();
        for row in reach.iter_mut() {
            if row[k / 64] >> (k % 64) & 1 == 1 {
                for (w, bits) in row.iter_mut().zip(&row_k) {
                    *w |= bits;
                }
            }
        }
    }
    reach
}

fn bit(set: &[u64], v: usize) -> bool {
    set[v / 64] >> (v % 64) & 1 == 1
}

/// Bottom strongly connected components among the vertices flagged in
/// `within`, which must be closed under `adj`.
pub fn bottom_components(adj: &[Vec<usize>], within: &[bool]) -> Vec<Vec<usize>> {
    let n = adj.len();
    let reach = closure(adj);
    let mut done = vec![false; n];
    let mut out = Vec::new();
    for u in 0..n {
        if !within[u] || done[u] {
            continue;
        }
        let comp: Vec<usize> = (0..n).filter(|&v| bit(&reach[u], v) && bit(&reach[v], u)).collect();
        for &v in &comp {
            done[v] = true;
        }
        let bottom = (0..n).all(|v| !bit(&reach[u], v) || comp.contains(&v));
        if bottom {
            out.push(comp);
        }
    }
    out
}

/// Rabin acceptance of a bottom component given per-state `E_i` / `F_i` tests.
fn accepts(comp: &[usize], pairs: usize, fin: impl Fn(usize, usize) -> bool, inf: impl Fn(usize, usize) -> bool) -> bool {
    (0..pairs).any(|i| comp.iter().any(|&v| inf(i, v)) && !comp.iter().any(|&v| fin(i, v)))
}

/// On/off choice for every usable optional edge of the reachable product.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct EdgeResolution {
    pub on: BTreeSet<(usize, usize)>,
}

impl EdgeResolution {
    pub fn is_on(&self, from: usize, to: usize) -> bool {
        self.on.contains(&(from, to))
    }

    /// Kept successors of every row in `within`; other rows are empty.
    pub fn graph(&self, m: &IntervalMatrix, within: &[bool]) -> Vec<Vec<usize>> {
        (0..m.len())
            .map(|s| {
                if !within[s] {
                    return Vec::new();
                }
                m.support(s)
                    .filter(|e| e.is_forced() || self.is_on(s, e.to))
                    .map(|e| e.to)
                    .collect()
            })
            .collect()
    }

    /// A row is realisable iff the kept upper bounds can absorb all mass.
    /// Kept optional edges are usable, so the row has slack to make them positive.
    pub fn row_feasible(&self, m: &IntervalMatrix, s: usize) -> bool {
        let kept: f64 = m
            .support(s)
            .filter(|e| e.is_forced() || self.is_on(s, e.to))
            .map(|e| e.upper)
            .sum();
        covers_unit_mass(kept)
    }

    pub fn is_feasible(&self, m: &IntervalMatrix, within: &[bool]) -> bool {
        (0..m.len()).all(|s| !within[s] || self.row_feasible(m, s))
    }
}

pub fn optional_edges(p: &ProductImc) -> Vec<(usize, usize)> {
    let m = p.intervals();
    (0..m.len())
        .filter(|&s| p.is_reachable(s))
        .flat_map(|s| m.support(s).filter(|e| e.is_optional()).map(move |e| (s, e.to)))
        .collect()
}

/// Accepting and non-accepting states of one resolution, from its bottom components.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Classification {
    pub accepting: BTreeSet<usize>,
    pub non_accepting: BTreeSet<usize>,
    pub bottom: Vec<Vec<usize>>,
}

pub fn classify(p: &ProductImc, r: &EdgeResolution) -> Classification {
    let adj = r.graph(p.intervals(), p.reachable());
    let mut out = Classification::default();
    for comp in bottom_components(&adj, p.reachable()) {
        let acc = accepts(&comp, p.pair_count(), |i, v| p.in_fin(i, v), |i, v| p.in_inf(i, v));
        let set = if acc { &mut out.accepting } else { &mut out.non_accepting };
        set.extend(comp.iter().copied());
        out.bottom.push(comp);
    }
    out
}

/// Calls `f` for every feasible resolution of the reachable product.
pub fn for_each_resolution(
    p: &ProductImc,
    cap: usize,
    mut f: impl FnMut(&EdgeResolution, &Classification),
) -> Result<usize, OracleError> {
    let edges = optional_edges(p);
    if edges.len() > cap {
        return Err(OracleError::CapExceeded { found: edges.len(), cap });
    }
    let mut feasible = 0;
    for mask in 0u64..(1 << edges.len()) {
        let r = EdgeResolution {
            on: edges
                .iter()
                .enumerate()
                .filter(|(k, _)| mask >> k & 1 == 1)
                .map(|(_, &e)| e)
                .collect(),
        };
        if !r.is_feasible(p.intervals(), p.reachable()) {
            continue;
        }
        feasible += 1;
        f(&r, &classify(p, &r));
    }
    Ok(feasible)
}

pub fn enumerate_nonaccepting_union(p: &ProductImc, cap: usize) -> Result<BTreeSet<usize>, OracleError> {
    let mut union = BTreeSet::new();
    for_each_resolution(p, cap, |_, c| union.extend(c.non_accepting.iter().copied()))?;
    Ok(union)
}

pub fn enumerate_accepting_union(p: &ProductImc, cap: usize) -> Result<BTreeSet<usize>, OracleError> {
    let mut union = BTreeSet::new();
    for_each_resolution(p, cap, |_, c| union.extend(c.accepting.iter().copied()))?;
    Ok(union)
}

/// Resolution combining two others: rows of states non-accepting under only
/// one of them follow that one, every other row keeps the edges on in either.
pub fn merge_resolutions(
    p: &ProductImc,
    r1: &EdgeResolution,
    n1: &BTreeSet<usize>,
    r2: &EdgeResolution,
    n2: &BTreeSet<usize>,
) -> EdgeResolution {
    let on = optional_edges(p)
        .into_iter()
        .filter(|&(s, t)| match (n1.contains(&s), n2.contains(&s)) {
            (true, false) => r1.is_on(s, t),
            (false, true) => r2.is_on(s, t),
            _ => r1.is_on(s, t) || r2.is_on(s, t),
        })
        .collect();
    EdgeResolution { on }
}

/// Exact probability of eventually reaching `target` from every state.
pub fn mc_reach_exact(mc: &Mc, target: &BTreeSet<usize>) -> Result<Vec<f64>, OracleError> {
    reach_exact_dense(mc.trans(), target)
}

fn reach_exact_dense(trans: &[Vec<f64>], target: &BTreeSet<usize>) -> Result<Vec<f64>, OracleError> {
    let n = trans.len();
    let adj: Vec<Vec<usize>> = trans
        .iter()
        .map(|row| (0..n).filter(|&v| row[v] > 0.0).collect())
        .collect();
    let reach = closure(&adj);
    let hits = |u: usize| target.iter().any(|&t| bit(&reach[u], t));
    let unknown: Vec<usize> = (0..n).filter(|&u| !target.contains(&u) && hits(u)).collect();
    let mut out = vec![0.0; n];
    for &t in target {
        out[t] = 1.0;
    }
    if unknown.is_empty() {
        return Ok(out);
    }
    let k = unknown.len();
    let a = DMatrix::from_fn(k, k, |i, j| {
        let delta = if i == j { 1.0 } else { 0.0 };
        delta - trans[unknown[i]][unknown[j]]
    });
    let b = DVector::from_fn(k, |i, _| target.iter().map(|&t| trans[unknown[i]][t]).sum());
    let x = a.lu().solve(&b).ok_or(OracleError::Singular)?;
    for (i, &u) in unknown.iter().enumerate() {
        out[u] = x[i].clamp(0.0, 1.0);
    }
    Ok(out)
}

/// Memoryless vertex adversary: every row takes the extremal distribution of a
/// random successor ordering. States of the returned chain are product states,
/// labelled with their acceptance propositions `E1..Ek F1..Fk`.
pub fn sample_vertex_adversary<R: Rng + ?Sized>(p: &ProductImc, rng: &mut R) -> Mc {
    assert!(2 * p.pair_count() <= MAX_PROPS, "too many pairs to label a chain");
    let m = p.intervals();
    let n = p.len();
    let mut trans = Vec::with_capacity(n);
    let mut d = Vec::new();
    for s in 0..n {
        let row = m.row(s);
        let mut order: Vec<usize> = (0..row.len()).collect();
        order.shuffle(rng);
        pour_row(row, &order, &mut d);
        let mut dense = vec![0.0; n];
        for (e, &q) in row.iter().zip(&d) {
            dense[e.to] = q;
        }
        trans.push(dense);
    }
    let k = p.pair_count();
    let labels = (0..n)
        .map(|s| {
            (0..k).fold(Letter::EMPTY, |l, i| {
                let l = if p.in_fin(i, s) { l.with(i) } else { l };
                if p.in_inf(i, s) {
                    l.with(k + i)
                } else {
                    l
                }
            })
        })
        .collect();
    let props = p.acc_props().iter().map(ToString::to_string).collect();
    let states = (0..n).map(|s| p.name(s)).collect();
    Mc::new(states, props, labels, trans).expect("vertex rows are distributions")
}

/// Bottom components of a chain.
pub fn mc_bottom_components(mc: &Mc) -> Vec<Vec<usize>> {
    let n = mc.len();
    let adj: Vec<Vec<usize>> = mc
        .trans()
        .iter()
        .map(|row| (0..n).filter(|&v| row[v] > 0.0).collect())
        .collect();
    bottom_components(&adj, &vec![true; n])
}

/// Accepting and non-accepting states of a chain labelled `E1..Ek F1..Fk`.
pub fn mc_classify(mc: &Mc) -> (BTreeSet<usize>, BTreeSet<usize>) {
    let k = mc.props().len() / 2;
    let labels = mc.labels();
    let mut acc = BTreeSet::new();
    let mut non = BTreeSet::new();
    for comp in mc_bottom_components(mc) {
        let a = accepts(&comp, k, |i, v| labels[v].contains(i), |i, v| labels[v].contains(k + i));
        let set = if a { &mut acc } else { &mut non };
        set.extend(comp.iter().copied());
    }
    (acc, non)
}

/// Exact satisfaction probability of every model state under a sampled chain
/// of the product.
pub fn exact_satisfaction(p: &ProductImc, mc: &Mc) -> Result<Vec<f64>, OracleError> {
    let (acc, _) = mc_classify(mc);
    let values = mc_reach_exact(mc, &acc)?;
    Ok(p.initial_of().iter().map(|&s| values[s]).collect())
}

fn step<R: Rng + ?Sized>(row: &[f64], rng: &mut R) -> usize {
    let mut u: f64 = rng.random();
    for (v, &q) in row.iter().enumerate() {
        if u < q {
            return v;
        }
        u -= q;
    }
    row.iter().rposition(|&q| q > 0.0).expect("row has mass")
}

/// Monte Carlo estimate of reaching `target` from `start`; runs are cut after
/// `max_steps` steps.
pub fn monte_carlo_reach<R: Rng + ?Sized>(
    mc: &Mc,
    start: usize,
    target: &BTreeSet<usize>,
    runs: usize,
    max_steps: usize,
    rng: &mut R,
) -> f64 {
    let mut hits = 0usize;
    for _ in 0..runs {
        let mut s = start;
        for _ in 0..=max_steps {
            if target.contains(&s) {
                hits += 1;
                break;
            }
            s = step(&mc.trans()[s], rng);
        }
    }
    hits as f64 / runs as f64
}

/// Step at which a simulated path first enters a bottom component, if within `max_steps`.
pub fn steps_until_bottom<R: Rng + ?Sized>(mc: &Mc, start: usize, max_steps: usize, rng: &mut R) -> Option<usize> {
    let bottom: BTreeSet<usize> = mc_bottom_components(mc).into_iter().flatten().collect();
    let mut s = start;
    for k in 0..=max_steps {
        if bottom.contains(&s) {
            return Some(k);
        }
        s = step(&mc.trans()[s], rng);
    }
    None
}

fn names(prefix: &str, n: usize) -> Vec<String> {
    (0..n).map(|i| format!("{prefix}{i}")).collect()
}

fn floor2(x: f64) -> f64 {
    (x * 100.0).floor() / 100.0
}

fn ceil2(x: f64) -> f64 {
    ((x * 100.0).ceil() / 100.0).min(1.0)
}

fn random_distribution<R: Rng + ?Sized>(rng: &mut R, n: usize, max_support: usize) -> Vec<f64> {
    let k = rng.random_range(1..=max_support.min(n));
    let mut succ: Vec<usize> = (0..n).collect();
    succ.shuffle(rng);
    let weights: Vec<f64> = (0..k).map(|_| rng.random_range(0.05..1.0)).collect();
    let total: f64 = weights.iter().sum();
    let mut row = vec![0.0; n];
    for (&v, w) in succ.iter().zip(&weights) {
        row[v] = w / total;
    }
    row
}

fn random_labels<R: Rng + ?Sized>(rng: &mut R, n: usize, props: usize) -> Vec<Letter> {
    (0..n).map(|_| Letter(rng.random_range(0..1u32 << props))).collect()
}

/// Shape of random interval chains.
#[derive(Debug, Clone, Copy)]
pub struct ImcShape {
    pub states: usize,
    pub props: usize,
    pub max_support: usize,
    /// Chance that an edge of the underlying chain gets a zero lower bound.
    pub optional: f64,
    /// Chance that a row gains an extra edge absent from the underlying chain.
    pub extra: f64,
    /// Chance that a state is absorbing.
    pub absorbing: f64,
}

impl ImcShape {
    pub fn new(states: usize, props: usize) -> Self {
        ImcShape {
            states,
            props,
            max_support: 3,
            optional: 0.3,
            extra: 0.2,
            absorbing: 0.0,
        }
    }
}

/// Random interval chain built around a random concrete chain, with lower
/// bounds rounded down and upper bounds rounded up to two decimals.
pub fn random_imc<R: Rng + ?Sized>(rng: &mut R, shape: ImcShape) -> Imc {
    let n = shape.states;
    let mut lower = vec![vec![0.0; n]; n];
    let mut upper = vec![vec![0.0; n]; n];
    for j in 0..n {
        if rng.random_bool(shape.absorbing) {
            lower[j][j] = 1.0;
            upper[j][j] = 1.0;
            continue;
        }
        let base = random_distribution(rng, n, shape.max_support);
        for v in 0..n {
            let q = base[v];
            if q > 0.0 {
                if !rng.random_bool(shape.optional) {
                    lower[j][v] = floor2(q * rng.random_range(0.3..1.0));
                }
                upper[j][v] = ceil2(q + rng.random_range(0.0..0.4));
            }
        }
        if rng.random_bool(shape.extra) {
            let v = rng.random_range(0..n);
            if base[v] == 0.0 {
                upper[j][v] = ceil2(rng.random_range(0.05..0.5));
            }
        }
    }
    let labels = random_labels(rng, n, shape.props);
    raw_from_parts(n, shape.props, &labels, lower, upper)
        .into_imc()
        .expect("random intervals contain their base chain")
}

fn raw_from_parts(n: usize, props: usize, labels: &[Letter], lower: Vec<Vec<f64>>, upper: Vec<Vec<f64>>) -> RawImc {
    let prop_names = names("p", props);
    let states = names("q", n);
    let labels = states
        .iter()
        .zip(labels)
        .filter(|(_, l)| **l != Letter::EMPTY)
        .map(|(s, l)| (s.clone(), l.names(&prop_names).into_iter().map(str::to_string).collect()))
        .collect();
    RawImc {
        states,
        props: prop_names,
        labels,
        lower,
        upper,
    }
}

/// Random concrete chain with the naming of [`random_imc`].
pub fn random_mc<R: Rng + ?Sized>(rng: &mut R, states: usize, props: usize) -> Mc {
    let trans: Vec<Vec<f64>> = (0..states).map(|_| random_distribution(rng, states, 3)).collect();
    let labels = random_labels(rng, states, props);
    Mc::new(names("q", states), names("p", props), labels, trans).expect("rows are distributions")
}

/// Random complete deterministic automaton with `pairs` random Rabin pairs.
/// Every pair has a non-empty `F`, and a pair without `E` never covers all states.
pub fn random_dra<R: Rng + ?Sized>(rng: &mut R, states: usize, props: &[String], pairs: usize) -> RabinAutomaton {
    let letters = 1usize << props.len();
    let delta = (0..states)
        .map(|_| (0..letters).map(|_| rng.random_range(0..states)).collect())
        .collect();
    let mut pair_list = Vec::with_capacity(pairs);
    for _ in 0..pairs {
        let fin: BTreeSet<usize> = (0..states).filter(|_| rng.random_bool(0.3)).collect();
        let mut inf: BTreeSet<usize> = (0..states).filter(|_| rng.random_bool(0.5)).collect();
        if inf.is_empty() {
            inf.insert(rng.random_range(0..states));
        }
        if states > 1 && fin.is_empty() && inf.len() == states {
            inf.remove(&rng.random_range(0..states));
        }
        pair_list.push(RabinPair { fin, inf });
    }
    RabinAutomaton::new(names("s", states), props.to_vec(), delta, 0, pair_list).expect("random automaton is well formed")
}

/// Automaton on the same transition structure accepting exactly the words a
/// one-pair automaton `(E, F)` rejects: `(∅, E)` or `(F, S)`.
pub fn complement_single_pair(a: &RabinAutomaton) -> RabinAutomaton {
    assert_eq!(a.pair_count(), 1, "only one-pair automata are complemented");
    let RabinPair { fin, inf } = a.pairs()[0].clone();
    let pairs = vec![RabinPair::new([], fin), RabinPair::new(inf, 0..a.len())];
    RabinAutomaton::new(a.states().to_vec(), a.props().to_vec(), a.delta().to_vec(), a.initial(), pairs)
        .expect("same structure as a valid automaton")
}

/// A random chain and automaton whose reachable product has at most `cap`
/// optional edges.
pub fn random_instance<R: Rng + ?Sized>(
    rng: &mut R,
    max_states: usize,
    max_aut_states: usize,
    pairs: usize,
    cap: usize,
) -> (Imc, RabinAutomaton) {
    loop {
        let mut shape = ImcShape::new(rng.random_range(2..=max_states), rng.random_range(1..=2));
        shape.optional = rng.random_range(0.0..0.4);
        shape.extra = rng.random_range(0.0..0.3);
        shape.absorbing = rng.random_range(0.0..0.4);
        let m = random_imc(rng, shape);
        let aut_states = rng.random_range(max_aut_states.min(2)..=max_aut_states);
        let a = random_dra(rng, aut_states, m.props(), pairs);
        let p = build_product(&m, &a).expect("shared propositions");
        if optional_edges(&p).len() <= cap {
            return (m, a);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::imc::parse_imc;
    use crate::rabin::parse_dra;

    const CASE: &str = include_str!("../../../fixtures/case_study.imc");

    #[test]
    fn closure_bottom_components() {
        let adj = vec![vec![1], vec![0, 2], vec![2], vec![3, 0]];
        let comps = bottom_components(&adj, &[true; 4]);
        assert_eq!(comps, vec![vec![2]]);
    }

    #[test]
    fn empty_language_union_over_case_study() {
        let m = parse_imc(CASE).unwrap();
        let a = parse_dra(include_str!("../../../fixtures/empty.hoa"), m.props()).unwrap();
        let p = build_product(&m, &a).unwrap();
        let union = enumerate_nonaccepting_union(&p, DEFAULT_CAP).unwrap();
        let projected: BTreeSet<usize> = union.iter().map(|&s| p.components(s).0).collect();
        assert_eq!(projected, [2, 3, 4].into());
    }

    #[test]
    fn point_product_has_one_resolution() {
        let m = parse_imc("states: a b\nprops: x\nlabel b: x\nlower:\n0.5 0.5\n0 1\nupper:\n0.5 0.5\n0 1\n").unwrap();
        let a = parse_dra(include_str!("../../../fixtures/universal.hoa"), m.props()).unwrap();
        let p = build_product(&m, &a).unwrap();
        let mut seen = Vec::new();
        let count = for_each_resolution(&p, DEFAULT_CAP, |_, c| seen.push(c.clone())).unwrap();
        assert_eq!(count, 1);
        assert_eq!(seen[0].accepting, [1].into());
    }

    #[test]
    fn cap_is_enforced() {
        let m = parse_imc(CASE).unwrap();
        let a = parse_dra(include_str!("../../../fixtures/universal.hoa"), m.props()).unwrap();
        let p = build_product(&m, &a).unwrap();
        assert!(matches!(
            enumerate_nonaccepting_union(&p, 0),
            Err(OracleError::CapExceeded { found: 4, cap: 0 })
        ));
    }

    #[test]
    fn exact_reachability_small_chains() {
        let mc = Mc::new(names("q", 1), vec![], vec![Letter::EMPTY], vec![vec![1.0]]).unwrap();
        assert_eq!(mc_reach_exact(&mc, &[0].into()).unwrap(), vec![1.0]);
        let mc = Mc::new(
            names("q", 2),
            vec![],
            vec![Letter::EMPTY; 2],
            vec![vec![0.5, 0.5], vec![0.0, 1.0]],
        )
        .unwrap();
        let v = mc_reach_exact(&mc, &[1].into()).unwrap();
        assert!((v[0] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn vertex_rows_lie_inside_the_intervals() {
        let m = parse_imc(CASE).unwrap();
        let a = parse_dra(include_str!("../../../fixtures/universal.hoa"), m.props()).unwrap();
        let p = build_product(&m, &a).unwrap();
        let mut rng = seeded_rng(7);
        for _ in 0..20 {
            let mc = sample_vertex_adversary(&p, &mut rng);
            for (s, q) in m.states().iter().enumerate() {
                assert!(m.contains_distribution(q, &mc.trans()[s]).unwrap());
            }
        }
    }

    #[test]
    fn complement_swaps_acceptance() {
        let m = parse_imc(CASE).unwrap();
        let a = parse_dra(include_str!("../../../fixtures/phi1.hoa"), m.props()).unwrap();
        let c = complement_single_pair(&a);
        let r = Letter::from_names(m.props(), ["R"]).unwrap();
        let g = Letter::from_names(m.props(), ["G"]).unwrap();
        for (prefix, cycle) in [(vec![], vec![r]), (vec![r], vec![g]), (vec![g], vec![g, r])] {
            assert_ne!(a.accepts_lasso(&prefix, &cycle), c.accepts_lasso(&prefix, &cycle));
        }
    }

    #[test]
    fn random_instances_respect_the_cap() {
        let mut rng = seeded_rng(1);
        for _ in 0..20 {
            let (m, a) = random_instance(&mut rng, 6, 3, 1, 8);
            let p = build_product(&m, &a).unwrap();
            assert!(optional_edges(&p).len() <= 8);
        }
    }
}
