//! Lower and upper satisfaction bounds of a Rabin property on an interval chain.
//!
//! The lower bound is one minus the maximal probability of reaching the largest
//! non-accepting set of the product. The upper bound is the maximal
//! probability of reaching the largest accepting set (one Rabin pair), or of
//! reaching the largest non-accepting set of the product with a complement
//! automaton. Reachability always runs on the product's own intervals.

use std::collections::BTreeSet;

use serde::Serialize;
use thiserror::Error;

use crate::bscc::{find_largest_accepting_single_pair, find_largest_nonaccepting, ClassifiedSets, SearchError};
use crate::imc::Imc;
use crate::product::{build_product, ProductError, ProductImc};
use crate::rabin::RabinAutomaton;
use crate::reach::{reach_probability, Objective, ReachError, ReachQuery, ReachResult, DEFAULT_EPSILON, DEFAULT_MAX_ITERS};

#[derive(Debug, Error)]
pub enum VerifyError {
    #[error(transparent)]
    Product(#[from] ProductError),
    #[error(transparent)]
    Search(#[from] SearchError),
    #[error(transparent)]
    Reach(#[from] ReachError),
    #[error("complement automaton required: the automaton has {pairs} Rabin pairs")]
    ComplementRequired { pairs: usize },
}

impl VerifyError {
    /// Errors caused by calling a route outside its contract rather than by bad input.
    pub fn is_contract(&self) -> bool {
        matches!(self, VerifyError::ComplementRequired { .. } | VerifyError::Search(_))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VerifyOptions {
    pub epsilon: f64,
    pub max_iters: usize,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        VerifyOptions {
            epsilon: DEFAULT_EPSILON,
            max_iters: DEFAULT_MAX_ITERS,
        }
    }
}

/// How the upper bound was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Route {
    SinglePair,
    Complement,
}

/// One bound computation: the product, the searched set, and the reachability run.
#[derive(Debug, Clone)]
pub struct Stage {
    pub product: ProductImc,
    pub sets: ClassifiedSets,
    pub target: BTreeSet<usize>,
    pub reach: ReachResult,
    /// Bound per model state, in model order.
    pub per_state: Vec<f64>,
}

fn max_reach(
    product: ProductImc,
    sets: ClassifiedSets,
    target: BTreeSet<usize>,
    opts: &VerifyOptions,
    complement: bool,
) -> Result<Stage, VerifyError> {
    let query = ReachQuery {
        intervals: product.intervals(),
        target: &target,
        objective: Objective::Maximize,
        epsilon: opts.epsilon,
        max_iters: opts.max_iters,
    };
    let reach = reach_probability(&query)?;
    let per_state = product
        .initial_of()
        .iter()
        .map(|&p| if complement { 1.0 - reach.values[p] } else { reach.values[p] })
        .collect();
    Ok(Stage {
        product,
        sets,
        target,
        reach,
        per_state,
    })
}

pub fn lower_bounds(m: &Imc, a: &RabinAutomaton, opts: &VerifyOptions) -> Result<Stage, VerifyError> {
    let product = build_product(m, a)?;
    let sets = find_largest_nonaccepting(&product);
    let target = sets.non_accepting.clone();
    max_reach(product, sets, target, opts, true)
}

pub fn upper_bounds_single_pair(m: &Imc, a: &RabinAutomaton, opts: &VerifyOptions) -> Result<Stage, VerifyError> {
    let product = build_product(m, a)?;
    let sets = find_largest_accepting_single_pair(&product)?;
    let target = sets.accepting.clone().unwrap_or_default();
    max_reach(product, sets, target, opts, false)
}

/// Upper bounds from an automaton for the negated property. The complement is
/// trusted; nothing checks that it really accepts the complement language.
pub fn upper_bounds_via_complement(
    m: &Imc,
    complement: &RabinAutomaton,
    opts: &VerifyOptions,
) -> Result<Stage, VerifyError> {
    let product = build_product(m, complement)?;
    let sets = find_largest_nonaccepting(&product);
    let target = sets.non_accepting.clone();
    max_reach(product, sets, target, opts, false)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StateBounds {
    pub state: String,
    pub lower: f64,
    pub upper: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StageMeta {
    pub product_states: usize,
    pub reachable_product_states: usize,
    pub target_states: usize,
    pub iterations: usize,
    pub residual: f64,
    pub converged: bool,
    pub scc_passes: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundMeta {
    pub route: Route,
    pub pair_count: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub complement_pair_count: Option<usize>,
    /// Set when the upper bound relies on an unchecked complement automaton.
    pub complement_assumed: bool,
    pub epsilon: f64,
    pub max_iters: usize,
    pub lower: StageMeta,
    pub upper: StageMeta,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundResult {
    pub per_state: Vec<StateBounds>,
    pub meta: BoundMeta,
}

impl BoundResult {
    pub fn lower(&self) -> Vec<f64> {
        self.per_state.iter().map(|b| b.lower).collect()
    }

    pub fn upper(&self) -> Vec<f64> {
        self.per_state.iter().map(|b| b.upper).collect()
    }
}

/// Both stages of a run together with the assembled result.
#[derive(Debug, Clone)]
pub struct Verification {
    pub lower: Stage,
    pub upper: Stage,
    pub route: Route,
    pub result: BoundResult,
}

fn stage_meta(s: &Stage) -> StageMeta {
    StageMeta {
        product_states: s.product.len(),
        reachable_product_states: s.product.reachable().iter().filter(|&&r| r).count(),
        target_states: s.target.len(),
        iterations: s.reach.iterations,
        residual: s.reach.residual,
        converged: s.reach.converged,
        scc_passes: s.sets.scc_passes,
    }
}

pub fn verify_detailed(
    m: &Imc,
    a: &RabinAutomaton,
    complement: Option<&RabinAutomaton>,
    opts: &VerifyOptions,
) -> Result<Verification, VerifyError> {
    let (route, upper) = match (a.pair_count(), complement) {
        (1, _) => (Route::SinglePair, upper_bounds_single_pair(m, a, opts)?),
        (_, Some(c)) => (Route::Complement, upper_bounds_via_complement(m, c, opts)?),
        (pairs, None) => return Err(VerifyError::ComplementRequired { pairs }),
    };
    let lower = lower_bounds(m, a, opts)?;
    let per_state = m
        .states()
        .iter()
        .zip(lower.per_state.iter().zip(&upper.per_state))
        .map(|(q, (&lo, &hi))| StateBounds {
            state: q.clone(),
            lower: lo,
            upper: hi,
        })
        .collect();
    let result = BoundResult {
        per_state,
        meta: BoundMeta {
            route,
            pair_count: a.pair_count(),
            complement_pair_count: (route == Route::Complement).then(|| upper.product.pair_count()),
            complement_assumed: route == Route::Complement,
            epsilon: opts.epsilon,
            max_iters: opts.max_iters,
            lower: stage_meta(&lower),
            upper: stage_meta(&upper),
        },
    };
    Ok(Verification {
        lower,
        upper,
        route,
        result,
    })
}

pub fn verify(
    m: &Imc,
    a: &RabinAutomaton,
    complement: Option<&RabinAutomaton>,
    opts: &VerifyOptions,
) -> Result<BoundResult, VerifyError> {
    verify_detailed(m, a, complement, opts).map(|v| v.result)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::imc::parse_imc;
    use crate::rabin::parse_dra;

    fn case_study() -> Imc {
        parse_imc(include_str!("../../../fixtures/case_study.imc")).unwrap()
    }

    fn dra(m: &Imc, text: &str) -> RabinAutomaton {
        parse_dra(text, m.props()).unwrap()
    }

    fn close(got: &[f64], want: &[f64], tol: f64) -> bool {
        got.len() == want.len() && got.iter().zip(want).all(|(a, b)| (a - b).abs() <= tol)
    }

    #[test]
    fn phi1_bounds_are_exact_zeros() {
        let m = case_study();
        let a = dra(&m, include_str!("../../../fixtures/phi1.hoa"));
        let r = verify(&m, &a, None, &VerifyOptions::default()).unwrap();
        assert_eq!(r.lower(), vec![0.0; 6]);
        assert_eq!(r.upper(), vec![0.0; 6]);
        assert_eq!(r.meta.route, Route::SinglePair);
    }

    #[test]
    fn phi2_bounds() {
        let m = case_study();
        let a = dra(&m, include_str!("../../../fixtures/phi2.hoa"));
        let c = dra(&m, include_str!("../../../fixtures/not_phi2.hoa"));
        let r = verify(&m, &a, Some(&c), &VerifyOptions::default()).unwrap();
        assert!(close(&r.lower(), &[0.274, 0.368, 1.0, 0.0, 1.0, 0.684], 1e-3), "{:?}", r.lower());
        assert!(close(&r.upper(), &[0.7, 1.0, 1.0, 0.0, 1.0, 1.0], 1e-3), "{:?}", r.upper());
        assert_eq!(r.meta.route, Route::Complement);
        assert!(r.meta.complement_assumed);
    }

    #[test]
    fn multi_pair_without_complement_is_a_contract_error() {
        let m = case_study();
        let a = dra(&m, include_str!("../../../fixtures/phi2.hoa"));
        let err = verify(&m, &a, None, &VerifyOptions::default()).unwrap_err();
        assert!(err.is_contract());
        assert!(err.to_string().contains("complement automaton required"));
    }

    #[test]
    fn universal_automaton() {
        let m = case_study();
        let u = dra(&m, include_str!("../../../fixtures/universal.hoa"));
        let opts = VerifyOptions::default();
        assert_eq!(lower_bounds(&m, &u, &opts).unwrap().per_state, vec![1.0; 6]);
        let e = dra(&m, include_str!("../../../fixtures/empty.hoa"));
        assert_eq!(upper_bounds_via_complement(&m, &e, &opts).unwrap().per_state, vec![1.0; 6]);
        assert_eq!(upper_bounds_single_pair(&m, &e, &opts).unwrap().per_state, vec![0.0; 6]);
    }

    #[test]
    fn routes_agree_on_phi1() {
        let m = case_study();
        let a = dra(&m, include_str!("../../../fixtures/phi1.hoa"));
        let c = dra(&m, include_str!("../../../fixtures/not_phi1.hoa"));
        let opts = VerifyOptions::default();
        let single = upper_bounds_single_pair(&m, &a, &opts).unwrap().per_state;
        let via = upper_bounds_via_complement(&m, &c, &opts).unwrap().per_state;
        assert!(close(&single, &via, 2e-6));
    }

    const INF_A: &str = "HOA: v1\nStates: 2\nStart: 0\nAP: 1 \"a\"\nAcceptance: 2 Fin(0) & Inf(1)\n--BODY--\n\
        State: 0\n[0] 1\n[!0] 0\nState: 1 {1}\n[0] 1\n[!0] 0\n--END--\n";

    #[test]
    fn one_step_accepting_sink() {
        let m = parse_imc(
            "states: s a r\nprops: a\nlabel a: a\nlower:\n0 0.3 0.3\n0 1 0\n0 0 1\nupper:\n0 0.7 0.7\n0 1 0\n0 0 1\n",
        )
        .unwrap();
        let a = dra(&m, INF_A);
        let up = upper_bounds_single_pair(&m, &a, &VerifyOptions::default()).unwrap();
        assert!((up.per_state[0] - 0.7).abs() < 1e-12);
        let lo = lower_bounds(&m, &a, &VerifyOptions::default()).unwrap();
        assert!((lo.per_state[0] - 0.3).abs() < 1e-12);
    }

    #[test]
    fn point_intervals_collapse_the_bounds() {
        let m = parse_imc(
            "states: x y z\nprops: a\nlabel y: a\nlower:\n0.2 0.4 0.4\n0 1 0\n0 0 1\nupper:\n0.2 0.4 0.4\n0 1 0\n0 0 1\n",
        )
        .unwrap();
        let r = verify(&m, &dra(&m, INF_A), None, &VerifyOptions::default()).unwrap();
        for b in &r.per_state {
            assert!((b.upper - b.lower).abs() < 2e-6);
        }
        assert!((r.per_state[0].lower - 0.5).abs() < 2e-6);
    }
}
