use std::collections::BTreeSet;
use std::path::PathBuf;

use imcheck_core::oracle::{enumerate_accepting_union, enumerate_nonaccepting_union, for_each_resolution, DEFAULT_CAP};
use imcheck_core::{
    build_product, find_largest_accepting_single_pair, find_largest_nonaccepting, load_dra, load_imc, verify,
    ProductImc, Route, VerifyOptions,
};

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures").join(name)
}

fn project(p: &ProductImc, set: &BTreeSet<usize>) -> BTreeSet<String> {
    set.iter().map(|&s| p.model_states()[p.components(s).0].clone()).collect()
}

fn names(v: &[&str]) -> BTreeSet<String> {
    v.iter().map(|s| s.to_string()).collect()
}

#[test]
fn text_and_json_models_agree() {
    assert_eq!(
        load_imc(&fixture("case_study.imc")).unwrap(),
        load_imc(&fixture("case_study.json")).unwrap()
    );
}

#[test]
fn every_automaton_fixture_loads() {
    let m = load_imc(&fixture("case_study.imc")).unwrap();
    for (name, pairs) in [
        ("phi1.hoa", 1),
        ("not_phi1.hoa", 2),
        ("phi2.hoa", 2),
        ("not_phi2.hoa", 1),
        ("universal.hoa", 1),
        ("empty.hoa", 1),
    ] {
        let a = load_dra(&fixture(name), m.props()).unwrap();
        assert_eq!(a.pair_count(), pairs, "{name}");
    }
}

#[test]
fn optional_edge_switches_the_accepting_cycle() {
    let m = load_imc(&fixture("optional_cycle.imc")).unwrap();
    let a = load_dra(&fixture("phi1.hoa"), m.props()).unwrap();
    let p = build_product(&m, &a).unwrap();

    let non = find_largest_nonaccepting(&p).non_accepting;
    let acc = find_largest_accepting_single_pair(&p).unwrap().accepting.unwrap();
    assert_eq!(project(&p, &non), names(&["q3"]));
    assert_eq!(project(&p, &acc), names(&["q0", "q1", "q2"]));
    assert_eq!(non, enumerate_nonaccepting_union(&p, DEFAULT_CAP).unwrap());
    assert_eq!(acc, enumerate_accepting_union(&p, DEFAULT_CAP).unwrap());

    let mut seen = BTreeSet::new();
    for_each_resolution(&p, DEFAULT_CAP, |_, c| {
        seen.insert(project(&p, &c.accepting));
    })
    .unwrap();
    assert_eq!(seen, [BTreeSet::new(), names(&["q0", "q1", "q2"])].into());

    let r = verify(&m, &a, None, &VerifyOptions::default()).unwrap();
    assert_eq!(r.meta.route, Route::SinglePair);
    assert_eq!(r.upper(), vec![1.0, 1.0, 1.0, 0.0]);
    assert_eq!(r.lower(), vec![0.0, 0.0, 0.0, 0.0]);
}

#[test]
fn either_return_edge_alone_gives_an_accepting_pair_of_states() {
    let m = load_imc(&fixture("twin_cycles.imc")).unwrap();
    let a = load_dra(&fixture("twin_cycles.hoa"), m.props()).unwrap();
    let p = build_product(&m, &a).unwrap();
    let mut accepting = Vec::new();
    for_each_resolution(&p, DEFAULT_CAP, |_, c| accepting.push(project(&p, &c.accepting))).unwrap();
    accepting.sort();
    assert_eq!(accepting, vec![BTreeSet::new(), names(&["q0", "q1"]), names(&["q1", "q2"])]);
    assert_eq!(project(&p, &find_largest_nonaccepting(&p).non_accepting), names(&["q0", "q1", "q2"]));
}

#[test]
fn missing_file_is_reported() {
    let err = load_imc(&fixture("no_such_model.imc")).unwrap_err();
    assert!(err.to_string().contains("no_such_model.imc"));
}
