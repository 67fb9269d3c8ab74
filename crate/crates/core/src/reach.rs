//! Extremal reachability in an interval chain under the adversarial (IMDP)
//! reading: at every step the adversary picks any distribution inside the
//! intervals. Values are computed by Jacobi value iteration where each state's
//! inner optimisation is solved by sorting successors by their current value.

use std::cmp::Ordering;
use std::collections::BTreeSet;

use thiserror::Error;

use crate::intervals::{covers_unit_mass, within_unit_mass, IntervalEntry, IntervalMatrix, SUM_TOLERANCE};

pub const DEFAULT_EPSILON: f64 = 1e-6;
pub const DEFAULT_MAX_ITERS: usize = 100_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Objective {
    Maximize,
    Minimize,
}

#[derive(Debug, Error, PartialEq)]
pub enum ReachError {
    #[error("epsilon must be positive, got {0}")]
    Epsilon(f64),
    #[error("max_iters must be positive")]
    MaxIters,
    #[error("target state {0} is out of range")]
    TargetOutOfRange(usize),
    #[error("infeasible interval row{}: {reason}", state.map(|s| format!(" at state {s}")).unwrap_or_default())]
    Infeasible {
        state: Option<usize>,
        reason: String,
    },
}

#[derive(Debug, Clone)]
pub struct ReachQuery<'a> {
    pub intervals: &'a IntervalMatrix,
    pub target: &'a BTreeSet<usize>,
    pub objective: Objective,
    pub epsilon: f64,
    pub max_iters: usize,
}

impl<'a> ReachQuery<'a> {
    pub fn new(intervals: &'a IntervalMatrix, target: &'a BTreeSet<usize>, objective: Objective) -> Self {
        ReachQuery {
            intervals,
            target,
            objective,
            epsilon: DEFAULT_EPSILON,
            max_iters: DEFAULT_MAX_ITERS,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReachResult {
    pub values: Vec<f64>,
    /// Number of sweeps performed.
    pub iterations: usize,
    /// Sup-norm change of the last sweep.
    pub residual: f64,
    pub converged: bool,
    /// States with value exactly 0, fixed before iterating.
    pub zero_states: BTreeSet<usize>,
    /// States with value exactly 1, fixed before iterating.
    pub one_states: BTreeSet<usize>,
}

/// States with no path to `target` when every usable edge is on.
pub fn qualitative_zero_states(m: &IntervalMatrix, target: &BTreeSet<usize>) -> BTreeSet<usize> {
    let n = m.len();
    let mut pred: Vec<Vec<usize>> = vec![Vec::new(); n];
    for u in 0..n {
        for e in m.support(u) {
            pred[e.to].push(u);
        }
    }
    let mut seen = vec![false; n];
    let mut stack: Vec<usize> = target.iter().copied().filter(|&t| t < n).collect();
    for &t in &stack {
        seen[t] = true;
    }
    while let Some(v) = stack.pop() {
        for &u in &pred[v] {
            if !seen[u] {
                seen[u] = true;
                stack.push(u);
            }
        }
    }
    (0..n).filter(|&s| !seen[s]).collect()
}

/// States from which some adversary reaches `target` with probability 1.
///
/// Greatest fixpoint over `Y` of the states that reach the target with
/// positive probability while choosing only distributions supported in `Y`.
pub fn qualitative_one_states(m: &IntervalMatrix, target: &BTreeSet<usize>) -> BTreeSet<usize> {
    let n = m.len();
    let mut is_target = vec![false; n];
    for &t in target.iter().filter(|&&t| t < n) {
        is_target[t] = true;
    }
    let mut keep = vec![true; n];
    loop {
        let can_stay: Vec<bool> = (0..n)
            .map(|s| {
                let row = m.row(s);
                row.iter().all(|e| !e.is_forced() || keep[e.to])
                    && covers_unit_mass(row.iter().filter(|e| keep[e.to]).map(|e| e.upper).sum())
            })
            .collect();
        let mut reach = is_target.clone();
        loop {
            let mut changed = false;
            for s in 0..n {
                if reach[s] || !keep[s] || !can_stay[s] {
                    continue;
                }
                let row = m.row(s);
                let lows: f64 = row.iter().map(|e| e.lower).sum();
                let slack = lows < 1.0 - SUM_TOLERANCE;
                if row.iter().any(|e| keep[e.to] && reach[e.to] && (e.is_forced() || slack)) {
                    reach[s] = true;
                    changed = true;
                }
            }
            if !changed {
                break;
            }
        }
        if reach == keep {
            break;
        }
        keep = reach;
    }
    (0..n).filter(|&s| keep[s]).collect()
}

fn check_feasible(lows: f64, highs: f64) -> Result<(), String> {
    if !within_unit_mass(lows) {
        return Err(format!("lower bounds sum to {lows} > 1"));
    }
    if !covers_unit_mass(highs) {
        return Err(format!("upper bounds sum to {highs} < 1"));
    }
    Ok(())
}

/// Distribution within `[lows, highs]` that maximises (or minimises) the
/// expectation of `values`: every successor gets its low, and the remaining
/// mass is poured into successors in order of preference up to their high.
pub fn extremal_distribution(
    lows: &[f64],
    highs: &[f64],
    values: &[f64],
    objective: Objective,
) -> Result<Vec<f64>, ReachError> {
    let infeasible = |reason: String| ReachError::Infeasible { state: None, reason };
    if lows.len() != highs.len() || lows.len() != values.len() {
        return Err(infeasible("vector lengths differ".into()));
    }
    if let Some(i) = (0..lows.len()).find(|&i| !(0.0..=highs[i]).contains(&lows[i]) || highs[i] > 1.0) {
        return Err(infeasible(format!("bad interval [{}, {}] at index {i}", lows[i], highs[i])));
    }
    check_feasible(lows.iter().sum(), highs.iter().sum()).map_err(infeasible)?;
    let mut order: Vec<usize> = (0..lows.len()).collect();
    sort_by_preference(&mut order, |i| values[i], objective);
    let mut d = lows.to_vec();
    let mut rest = 1.0 - lows.iter().sum::<f64>();
    for i in order {
        if rest <= 0.0 {
            break;
        }
        let room = highs[i] - lows[i];
        let add = room.min(rest);
        d[i] = if add == room { highs[i] } else { d[i] + add };
        rest -= add;
    }
    Ok(d)
}

fn sort_by_preference(order: &mut [usize], value: impl Fn(usize) -> f64, objective: Objective) {
    order.sort_by(|&a, &b| {
        let by_value = value(a).partial_cmp(&value(b)).unwrap_or(Ordering::Equal);
        let by_value = match objective {
            Objective::Maximize => by_value.reverse(),
            Objective::Minimize => by_value,
        };
        by_value.then(a.cmp(&b))
    });
}

/// Distribution over `row` that follows the successor preference `order`
/// (positions into `row`). Written into `out`, indexed like `row`.
pub(crate) fn pour_row(row: &[IntervalEntry], order: &[usize], out: &mut Vec<f64>) {
    out.clear();
    out.extend(row.iter().map(|e| e.lower));
    let mut rest = 1.0 - out.iter().sum::<f64>();
    for &k in order {
        if rest <= 0.0 {
            break;
        }
        let room = row[k].upper - row[k].lower;
        let add = room.min(rest);
        out[k] = if add == room { row[k].upper } else { out[k] + add };
        rest -= add;
    }
}

fn optimise_row(row: &[IntervalEntry], values: &[f64], objective: Objective, order: &mut Vec<usize>, d: &mut Vec<f64>) -> f64 {
    order.clear();
    order.extend(0..row.len());
    sort_by_preference(order, |k| values[row[k].to], objective);
    pour_row(row, order, d);
    row.iter().zip(d.iter()).map(|(e, p)| p * values[e.to]).sum()
}

pub fn reach_probability(q: &ReachQuery<'_>) -> Result<ReachResult, ReachError> {
    reach_probability_observed(q, |_, _| {})
}

/// As [`reach_probability`], calling `observe(k, v)` with every iterate,
/// starting from `k = 0`.
pub fn reach_probability_observed(
    q: &ReachQuery<'_>,
    mut observe: impl FnMut(usize, &[f64]),
) -> Result<ReachResult, ReachError> {
    if q.epsilon.is_nan() || q.epsilon <= 0.0 {
        return Err(ReachError::Epsilon(q.epsilon));
    }
    if q.max_iters == 0 {
        return Err(ReachError::MaxIters);
    }
    let m = q.intervals;
    let n = m.len();
    if let Some(&t) = q.target.iter().find(|&&t| t >= n) {
        return Err(ReachError::TargetOutOfRange(t));
    }
    for (s, row) in m.rows().enumerate() {
        check_feasible(row.iter().map(|e| e.lower).sum(), row.iter().map(|e| e.upper).sum())
            .map_err(|reason| ReachError::Infeasible { state: Some(s), reason })?;
    }

    let (zero_states, one_states) = match q.objective {
        Objective::Maximize => {
            let zero = qualitative_zero_states(m, q.target);
            let one = qualitative_one_states(m, q.target);
            (zero, one.difference(q.target).copied().collect())
        }
        Objective::Minimize => (BTreeSet::new(), BTreeSet::new()),
    };

    let mut values = vec![0.0; n];
    let mut free = Vec::new();
    for (s, v) in values.iter_mut().enumerate() {
        if q.target.contains(&s) || one_states.contains(&s) {
            *v = 1.0;
        } else if !zero_states.contains(&s) {
            free.push(s);
        }
    }
    observe(0, &values);

    let mut next = values.clone();
    let mut order = Vec::new();
    let mut d = Vec::new();
    let mut iterations = 0;
    let mut residual = 0.0;
    let mut converged = free.is_empty();
    while !converged && iterations < q.max_iters {
        residual = 0.0_f64;
        for &s in &free {
            let v = optimise_row(m.row(s), &values, q.objective, &mut order, &mut d).clamp(0.0, 1.0);
            residual = residual.max((v - values[s]).abs());
            next[s] = v;
        }
        std::mem::swap(&mut values, &mut next);
        iterations += 1;
        observe(iterations, &values);
        converged = residual < q.epsilon;
    }

    Ok(ReachResult {
        values,
        iterations,
        residual,
        converged,
        zero_states,
        one_states,
    })
}
