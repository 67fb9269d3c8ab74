//! Acceptance criteria. Prints one PASS/FAIL line per criterion and exits
//! non-zero when any criterion fails.

use std::collections::BTreeSet;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use imcheck_core::engine::{verify_detailed, Stage, Verification};
use imcheck_core::oracle::{
    classify, complement_single_pair, enumerate_accepting_union, enumerate_nonaccepting_union, exact_satisfaction,
    for_each_resolution, random_dra, random_instance, random_mc, sample_vertex_adversary, seeded_rng, DEFAULT_CAP,
};
use imcheck_core::reach::reach_probability_observed;
use imcheck_core::{
    build_product, find_largest_accepting_single_pair, find_largest_nonaccepting, parse_dra, parse_imc, Imc,
    Objective, RabinAutomaton, ReachQuery, VerifyOptions,
};

const CASE: &str = include_str!("../../../fixtures/case_study.imc");
const PHI1: &str = include_str!("../../../fixtures/phi1.hoa");
const NOT_PHI1: &str = include_str!("../../../fixtures/not_phi1.hoa");
const PHI2: &str = include_str!("../../../fixtures/phi2.hoa");
const NOT_PHI2: &str = include_str!("../../../fixtures/not_phi2.hoa");
const TWIN_IMC: &str = include_str!("../../../fixtures/twin_cycles.imc");
const TWIN_HOA: &str = include_str!("../../../fixtures/twin_cycles.hoa");

const TABLE_TOL: f64 = 1e-3;
const ENVELOPE_TOL: f64 = 1e-6;
const SUM_TOL: f64 = 2e-6;
const POINT_TOL: f64 = 1e-6;

/// Value iteration threshold for the randomised criteria, well below their tolerances.
const TIGHT: VerifyOptions = VerifyOptions {
    epsilon: 1e-10,
    max_iters: 1_000_000,
};

type Outcome = Result<String, String>;

/// Stages collected from every run, replayed for the monotonicity criterion.
#[derive(Default)]
struct Runs {
    stages: Vec<(Stage, VerifyOptions)>,
}

impl Runs {
    fn verify(
        &mut self,
        m: &Imc,
        a: &RabinAutomaton,
        c: Option<&RabinAutomaton>,
        opts: &VerifyOptions,
    ) -> Result<Verification, String> {
        let v = verify_detailed(m, a, c, opts).map_err(|e| e.to_string())?;
        self.stages.push((v.lower.clone(), *opts));
        self.stages.push((v.upper.clone(), *opts));
        Ok(v)
    }
}

fn dra(m: &Imc, text: &str) -> RabinAutomaton {
    parse_dra(text, m.props()).expect("fixture automaton")
}

fn max_dev(got: &[f64], want: &[f64]) -> f64 {
    got.iter().zip(want).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
}

fn criterion_1(runs: &mut Runs) -> Outcome {
    let start = Instant::now();
    let m = parse_imc(CASE).map_err(|e| e.to_string())?;
    let v = runs.verify(&m, &dra(&m, PHI1), None, &VerifyOptions::default())?;
    let elapsed = start.elapsed();
    let (lo, hi) = (v.result.lower(), v.result.upper());
    if lo.iter().chain(&hi).any(|&x| x != 0.0) {
        return Err(format!("expected exact zeros, lower {lo:?} upper {hi:?}"));
    }
    if elapsed >= Duration::from_secs(1) {
        return Err(format!("took {elapsed:?}"));
    }
    Ok(format!("all twelve bounds exactly 0 in {elapsed:?}"))
}

fn criterion_2(runs: &mut Runs) -> Outcome {
    let start = Instant::now();
    let m = parse_imc(CASE).map_err(|e| e.to_string())?;
    let v = runs.verify(&m, &dra(&m, PHI2), Some(&dra(&m, NOT_PHI2)), &VerifyOptions::default())?;
    let elapsed = start.elapsed();
    let want_lo = [0.274, 0.368, 1.0, 0.0, 1.0, 0.684];
    let want_hi = [0.7, 1.0, 1.0, 0.0, 1.0, 1.0];
    let (lo, hi) = (v.result.lower(), v.result.upper());
    let dev = max_dev(&lo, &want_lo).max(max_dev(&hi, &want_hi));
    if dev > TABLE_TOL {
        return Err(format!("lower {lo:?} upper {hi:?}, deviation {dev:.2e}"));
    }
    if elapsed >= Duration::from_secs(5) {
        return Err(format!("took {elapsed:?}"));
    }
    Ok(format!("max deviation {dev:.2e} in {elapsed:?}"))
}

fn criterion_3() -> Outcome {
    const SEED: u64 = 3;
    const INSTANCES: usize = 200;
    let mut rng = seeded_rng(SEED);
    let mut mismatches = Vec::new();
    let mut single = 0;
    let mut nonempty = 0;
    for k in 0..INSTANCES {
        let pairs = 1 + k % 2;
        let (m, a) = random_instance(&mut rng, 10, 3, pairs, DEFAULT_CAP);
        let p = build_product(&m, &a).map_err(|e| e.to_string())?;
        let search = find_largest_nonaccepting(&p).non_accepting;
        let oracle = enumerate_nonaccepting_union(&p, DEFAULT_CAP).map_err(|e| e.to_string())?;
        nonempty += usize::from(!oracle.is_empty());
        if search != oracle {
            mismatches.push(format!("#{k} non-accepting: search {search:?} oracle {oracle:?}"));
        }
        if pairs == 1 {
            single += 1;
            let search = find_largest_accepting_single_pair(&p).map_err(|e| e.to_string())?.accepting;
            let oracle = enumerate_accepting_union(&p, DEFAULT_CAP).map_err(|e| e.to_string())?;
            nonempty += usize::from(!oracle.is_empty());
            if search.as_ref() != Some(&oracle) {
                mismatches.push(format!("#{k} accepting: search {search:?} oracle {oracle:?}"));
            }
        }
    }
    if mismatches.is_empty() {
        Ok(format!(
            "{INSTANCES} products ({single} one-pair), {nonempty} non-empty sets compared, 0 mismatches, seed {SEED}"
        ))
    } else {
        Err(format!("{} mismatches, seed {SEED}: {}", mismatches.len(), mismatches.join("; ")))
    }
}

/// Random one-pair automaton together with its two-pair complement.
fn instance_with_complement(rng: &mut impl rand::Rng) -> (Imc, RabinAutomaton, RabinAutomaton) {
    let (m, a) = random_instance(rng, 10, 3, 1, usize::MAX);
    let c = complement_single_pair(&a);
    (m, a, c)
}

fn criterion_4(runs: &mut Runs) -> Outcome {
    const SEED: u64 = 4;
    const INSTANCES: usize = 50;
    const ADVERSARIES: usize = 100;
    let mut rng = seeded_rng(SEED);
    let mut checks = 0;
    let mut open = 0;
    let mut violations = Vec::new();
    for k in 0..INSTANCES {
        let (m, a, c) = instance_with_complement(&mut rng);
        for (name, aut, comp) in [("A", &a, None), ("not A", &c, Some(&a))] {
            let v = runs.verify(&m, aut, comp, &TIGHT)?;
            let p = &v.lower.product;
            open += v.result.per_state.iter().filter(|b| b.upper - b.lower > 1e-3).count();
            for _ in 0..ADVERSARIES {
                let mc = sample_vertex_adversary(p, &mut rng);
                let sat = exact_satisfaction(p, &mc).map_err(|e| e.to_string())?;
                for (q, b) in v.result.per_state.iter().enumerate() {
                    checks += 1;
                    if sat[q] < b.lower - ENVELOPE_TOL || sat[q] > b.upper + ENVELOPE_TOL {
                        violations.push(format!(
                            "#{k} {name} {}: {} outside [{}, {}]",
                            b.state, sat[q], b.lower, b.upper
                        ));
                    }
                }
            }
        }
    }
    if violations.is_empty() {
        Ok(format!(
            "{checks} state checks over {INSTANCES} instances ({open} states with a gap above 1e-3), 0 violations, seed {SEED}"
        ))
    } else {
        Err(format!("{} violations, seed {SEED}: {}", violations.len(), violations.join("; ")))
    }
}

fn criterion_5(runs: &mut Runs) -> Outcome {
    const SEED: u64 = 5;
    const INSTANCES: usize = 100;
    let mut worst: f64 = 0.0;
    let mut failures = Vec::new();
    let mut check = |label: String, lower: &[f64], upper_neg: &[f64]| {
        for (lo, hi) in lower.iter().zip(upper_neg) {
            let dev = (lo + hi - 1.0).abs();
            worst = worst.max(dev);
            if dev > SUM_TOL {
                failures.push(format!("{label}: {lo} + {hi}"));
            }
        }
    };

    let m = parse_imc(CASE).map_err(|e| e.to_string())?;
    for (phi, neg, name) in [(PHI1, NOT_PHI1, "phi1"), (PHI2, NOT_PHI2, "phi2")] {
        let (a, c) = (dra(&m, phi), dra(&m, neg));
        let pos = runs.verify(&m, &a, Some(&c), &VerifyOptions::default())?.result;
        let negr = runs.verify(&m, &c, Some(&a), &VerifyOptions::default())?.result;
        check(format!("{name} lower + not-{name} upper"), &pos.lower(), &negr.upper());
        check(format!("not-{name} lower + {name} upper"), &negr.lower(), &pos.upper());
    }

    let mut rng = seeded_rng(SEED);
    for k in 0..INSTANCES {
        let (m, a, c) = instance_with_complement(&mut rng);
        let pos = runs.verify(&m, &a, None, &TIGHT)?.result;
        let negr = runs.verify(&m, &c, Some(&a), &TIGHT)?.result;
        check(format!("#{k} not-A lower + A upper"), &negr.lower(), &pos.upper());
        check(format!("#{k} A lower + not-A upper"), &pos.lower(), &negr.upper());
    }
    if failures.is_empty() {
        Ok(format!("case study and {INSTANCES} random pairs, worst |sum - 1| {worst:.2e}, seed {SEED}"))
    } else {
        Err(format!("{} failures, seed {SEED}: {}", failures.len(), failures.join("; ")))
    }
}

fn criterion_6(runs: &mut Runs) -> Outcome {
    const SEED: u64 = 6;
    const CHAINS: usize = 50;
    let mut rng = seeded_rng(SEED);
    let mut failures = Vec::new();
    for k in 0..CHAINS {
        let states = 2 + k % 9;
        let mc = random_mc(&mut rng, states, 2);
        let m = Imc::from_mc(&mc);
        let aut_states = 1 + k % 3;
        let a = random_dra(&mut rng, aut_states, m.props(), 1);
        let c = complement_single_pair(&a);
        for (name, aut, comp) in [("A", &a, None), ("not A", &c, Some(&a))] {
            let v = runs.verify(&m, aut, comp, &TIGHT)?;
            let p = &v.lower.product;
            let induced = sample_vertex_adversary(p, &mut rng);
            let sat = exact_satisfaction(p, &induced).map_err(|e| e.to_string())?;
            for (q, b) in v.result.per_state.iter().enumerate() {
                if (b.upper - b.lower).abs() > SUM_TOL
                    || (b.lower - sat[q]).abs() > POINT_TOL
                    || (b.upper - sat[q]).abs() > POINT_TOL
                {
                    failures.push(format!("#{k} {name} {}: [{}, {}] vs exact {}", b.state, b.lower, b.upper, sat[q]));
                }
            }
        }
    }
    if failures.is_empty() {
        Ok(format!("{CHAINS} chains, bounds collapse onto the exact value, seed {SEED}"))
    } else {
        Err(format!("{} failures, seed {SEED}: {}", failures.len(), failures.join("; ")))
    }
}

fn criterion_7() -> Outcome {
    let m = parse_imc(TWIN_IMC).map_err(|e| e.to_string())?;
    let a = dra(&m, TWIN_HOA);
    let p = build_product(&m, &a).map_err(|e| e.to_string())?;
    let everything: BTreeSet<usize> = (0..m.len()).collect();
    let project = |s: &BTreeSet<usize>| -> BTreeSet<usize> { s.iter().map(|&v| p.components(v).0).collect() };

    let mut resolutions = Vec::new();
    for_each_resolution(&p, DEFAULT_CAP, |r, c| resolutions.push((r.clone(), c.clone()))).map_err(|e| e.to_string())?;
    let acc_union: BTreeSet<usize> = resolutions.iter().flat_map(|(_, c)| c.accepting.iter().copied()).collect();
    let non_union: BTreeSet<usize> = resolutions.iter().flat_map(|(_, c)| c.non_accepting.iter().copied()).collect();

    if project(&acc_union) != everything {
        return Err(format!("accepting union covers only {:?}", project(&acc_union)));
    }
    if let Some((r, _)) = resolutions.iter().find(|(_, c)| c.accepting.is_superset(&acc_union)) {
        return Err(format!("resolution {:?} makes all accepting states accepting at once", r.on));
    }
    let witness = resolutions.iter().find(|(_, c)| c.non_accepting.is_superset(&non_union));
    let Some((r, _)) = witness else {
        return Err("no single resolution realises the non-accepting union".into());
    };
    if project(&non_union) != everything {
        return Err(format!("non-accepting union covers only {:?}", project(&non_union)));
    }
    let search = find_largest_nonaccepting(&p).non_accepting;
    if search != non_union || classify(&p, r).non_accepting != non_union {
        return Err(format!("search found {search:?}, oracle {non_union:?}"));
    }
    Ok(format!(
        "{} feasible resolutions; accepting union {:?} never realised at once; non-accepting union realised by {:?}",
        resolutions.len(),
        project(&acc_union),
        r.on
    ))
}

fn criterion_8(runs: &Runs) -> Outcome {
    let mut failures = Vec::new();
    let mut sweeps = 0usize;
    for (k, (stage, opts)) in runs.stages.iter().enumerate() {
        let query = ReachQuery {
            intervals: stage.product.intervals(),
            target: &stage.target,
            objective: Objective::Maximize,
            epsilon: opts.epsilon,
            max_iters: opts.max_iters,
        };
        let mut prev: Option<Vec<f64>> = None;
        let mut bad = None;
        let r = reach_probability_observed(&query, |i, v| {
            if bad.is_some() {
                return;
            }
            if v.iter().any(|x| !(0.0..=1.0).contains(x)) {
                bad = Some(format!("iterate {i} leaves [0,1]"));
            } else if let Some(p) = &prev {
                if let Some(s) = (0..v.len()).find(|&s| v[s] < p[s]) {
                    bad = Some(format!("iterate {i} decreases at state {s}: {} -> {}", p[s], v[s]));
                }
            }
            prev = Some(v.to_vec());
        })
        .map_err(|e| e.to_string())?;
        sweeps += r.iterations;
        if let Some(b) = bad {
            failures.push(format!("run {k}: {b}"));
        }
        if r.converged == (r.residual >= opts.epsilon) {
            failures.push(format!("run {k}: residual {} with converged = {}", r.residual, r.converged));
        }
        if r != stage.reach {
            failures.push(format!("run {k}: replay differs from the recorded run"));
        }
    }
    if failures.is_empty() {
        Ok(format!("{} runs, {sweeps} sweeps, all monotone within [0,1]", runs.stages.len()))
    } else {
        Err(format!("{} failures: {}", failures.len(), failures.join("; ")))
    }
}

fn main() -> ExitCode {
    let mut runs = Runs::default();
    let mut results: Vec<(&str, Outcome)> = vec![
        ("1 phi1 bounds are exact zeros", criterion_1(&mut runs)),
        ("2 phi2 bounds match the reference table", criterion_2(&mut runs)),
        ("3 set search equals exhaustive enumeration", criterion_3()),
        ("4 sampled adversaries stay inside the bounds", criterion_4(&mut runs)),
        ("5 property and complement bounds sum to one", criterion_5(&mut runs)),
        ("6 point intervals collapse the bounds", criterion_6(&mut runs)),
        ("7 accepting sets do not merge, non-accepting sets do", criterion_7()),
    ];
    results.push(("8 value iteration is monotone", criterion_8(&runs)));
    let mut failed = 0;
    for (name, outcome) in &results {
        match outcome {
            Ok(detail) => println!("PASS criterion {name}: {detail}"),
            Err(detail) => {
                failed += 1;
                println!("FAIL criterion {name}: {detail}");
            }
        }
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failed} criteria failed");
        ExitCode::FAILURE
    }
}
