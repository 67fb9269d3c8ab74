//! Benchmark workloads.

use std::collections::BTreeSet;

use imcheck_core::oracle::{complement_single_pair, random_dra, random_imc, seeded_rng, ImcShape};
use imcheck_core::{build_product, parse_dra, parse_imc, Imc, ProductImc, RabinAutomaton};

/// Model and property, with a complement when the property has several pairs.
#[derive(Debug, Clone)]
pub struct Workload {
    pub name: String,
    pub model: Imc,
    pub automaton: RabinAutomaton,
    pub complement: Option<RabinAutomaton>,
}

impl Workload {
    pub fn product(&self) -> ProductImc {
        build_product(&self.model, &self.automaton).expect("workload automaton matches the model")
    }
}

/// Six-state case study with the two-pair property and its complement.
pub fn case_study() -> Workload {
    let model = parse_imc(include_str!("../../../fixtures/case_study.imc")).expect("fixture parses");
    let automaton = parse_dra(include_str!("../../../fixtures/phi2.hoa"), model.props()).expect("fixture parses");
    let complement = parse_dra(include_str!("../../../fixtures/not_phi2.hoa"), model.props()).expect("fixture parses");
    Workload {
        name: "case_study".into(),
        model,
        automaton,
        complement: Some(complement),
    }
}

/// Random chain of `states` states over two propositions, with a one-pair
/// automaton of `aut_states` states and its complement.
pub fn random_workload(seed: u64, states: usize, aut_states: usize) -> Workload {
    let mut rng = seeded_rng(seed);
    let mut shape = ImcShape::new(states, 2);
    shape.max_support = 4;
    shape.absorbing = 0.05;
    let model = random_imc(&mut rng, shape);
    let automaton = random_dra(&mut rng, aut_states, model.props(), 1);
    let complement = complement_single_pair(&automaton);
    Workload {
        name: format!("random_{states}x{aut_states}"),
        model,
        automaton,
        complement: Some(complement),
    }
}

/// Workloads of growing model size.
pub fn scaling(sizes: &[usize], aut_states: usize) -> Vec<Workload> {
    sizes.iter().map(|&n| random_workload(n as u64, n, aut_states)).collect()
}

/// Every third product state, as a reachability target.
pub fn spread_target(p: &ProductImc) -> BTreeSet<usize> {
    (0..p.len()).step_by(3).collect()
}
