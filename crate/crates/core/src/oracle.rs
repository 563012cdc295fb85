//! Ground truth by depth-first path enumeration.
//!
//! Nothing here goes through [`crate::machine::Stepper`] or the executor: rule
//! matching is redone directly on the spec so the two can be compared.

use std::sync::atomic::{AtomicU64, Ordering};

use rustc_hash::FxHashMap;
use serde::Serialize;

use crate::error::MachineError;
use crate::executor::{Exhaustion, RunBudget, Verdict};
use crate::families::PromiseFamily;
use crate::machine::{
    Configuration, CounterOp, MachineSpec, StackOp, TapeSymbol, BOTTOM, LEFT_END, RIGHT_END,
};

fn tape_of(m: &MachineSpec, x: &str) -> Result<Vec<char>, MachineError> {
    let mut t = vec![LEFT_END];
    for c in x.chars() {
        if !m.alphabet.contains(&c) {
            return Err(MachineError::InputSymbol(c));
        }
        t.push(c);
    }
    t.push(RIGHT_END);
    Ok(t)
}

fn start(m: &MachineSpec) -> Configuration {
    Configuration {
        state: m.initial,
        head: 0,
        counters: std::iter::repeat_n(0, m.counters).collect(),
        stack: if m.stack.is_some() {
            std::iter::once(BOTTOM).collect()
        } else {
            Default::default()
        },
    }
}

/// Successors in rule-declaration order, computed by scanning every rule.
pub fn successors(m: &MachineSpec, tape: &[char], c: &Configuration) -> Vec<Configuration> {
    if m.accepting.contains(&c.state) || m.rejecting.contains(&c.state) {
        return Vec::new();
    }
    let read = tape[c.head];
    let mut out = Vec::new();
    for r in &m.transitions {
        if r.from != c.state || r.read != TapeSymbol::from_char(read) {
            continue;
        }
        let guards_ok = r
            .guards
            .iter()
            .zip(c.counters.iter())
            .all(|(g, &v)| g.admits(v));
        if !guards_ok {
            continue;
        }
        if let Some(t) = r.stack_top {
            if c.stack.last() != Some(&t) {
                continue;
            }
        }
        let mut d = c.clone();
        d.state = r.to;
        d.head = (c.head as i64 + r.movement.delta()) as usize;
        for (v, op) in d.counters.iter_mut().zip(&r.counter_ops) {
            match op {
                CounterOp::Inc => *v += 1,
                CounterOp::Dec => *v -= 1,
                CounterOp::Noop => (),
            }
        }
        match &r.stack_op {
            StackOp::None => (),
            StackOp::Pop => {
                d.stack.pop();
            }
            StackOp::Push(w) => d.stack.extend(w.iter().copied()),
        }
        out.push(d);
    }
    out
}

/// Decides acceptance by depth-first search over paths of length at most
/// `budget.step_cap`. A configuration is re-expanded only when reached by a
/// strictly shorter path, which prunes exact repeats.
pub fn brute_force_decide(
    m: &MachineSpec,
    x: &str,
    budget: RunBudget,
) -> Result<Verdict, MachineError> {
    let tape = tape_of(m, x)?;
    let root = start(m);
    if m.accepting.contains(&root.state) {
        return Ok(Verdict::Accept {
            witness: vec![root],
        });
    }
    let mut best: FxHashMap<Configuration, u64> = FxHashMap::default();
    let mut truncated = false;
    // Each frame: configuration, its pending successors.
    let mut path: Vec<(Configuration, std::vec::IntoIter<Configuration>)> = Vec::new();
    best.insert(root.clone(), 0);
    let succ = successors(m, &tape, &root);
    path.push((root, succ.into_iter()));
    while let Some((_, pending)) = path.last_mut() {
        let Some(next) = pending.next() else {
            path.pop();
            continue;
        };
        let depth = path.len() as u64;
        if depth > budget.step_cap {
            truncated |= !best.contains_key(&next);
            continue;
        }
        if best.get(&next).is_some_and(|&d| d <= depth) {
            continue;
        }
        if best.len() >= budget.config_cap && !best.contains_key(&next) {
            return Ok(Verdict::Unknown {
                exhausted: Exhaustion::ConfigCap,
            });
        }
        best.insert(next.clone(), depth);
        if m.accepting.contains(&next.state) {
            let mut witness: Vec<Configuration> = path.iter().map(|(c, _)| c.clone()).collect();
            witness.push(next);
            return Ok(Verdict::Accept { witness });
        }
        let succ = successors(m, &tape, &next);
        path.push((next, succ.into_iter()));
    }
    Ok(if truncated {
        Verdict::Unknown {
            exhausted: Exhaustion::StepCap,
        }
    } else {
        Verdict::Reject
    })
}

/// Checks that a witness is a genuine accepting path.
pub fn validate_witness(m: &MachineSpec, x: &str, path: &[Configuration]) -> bool {
    let Ok(tape) = tape_of(m, x) else {
        return false;
    };
    let Some(first) = path.first() else {
        return false;
    };
    *first == start(m)
        && path
            .windows(2)
            .all(|w| successors(m, &tape, &w[0]).contains(&w[1]))
        && m.accepting.contains(&path.last().unwrap().state)
}

static CHECKS: AtomicU64 = AtomicU64::new(0);
static CONTRADICTIONS: AtomicU64 = AtomicU64::new(0);

/// Number of (definite, definite) comparisons made by [`cross_check`] in this
/// process, and how many of them disagreed.
pub fn coherence_tally() -> (u64, u64) {
    (
        CHECKS.load(Ordering::Relaxed),
        CONTRADICTIONS.load(Ordering::Relaxed),
    )
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Contradiction {
    pub input: String,
    pub executor: &'static str,
    pub oracle: &'static str,
}

impl std::fmt::Display for Contradiction {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "executor says {} but oracle says {} on {:?}",
            self.executor, self.oracle, self.input
        )
    }
}

/// Runs the executor and the oracle and returns the executor's verdict,
/// failing on any contradiction between two definite verdicts.
pub fn cross_check(
    m: &MachineSpec,
    x: &str,
    budget: RunBudget,
) -> Result<Result<Verdict, Contradiction>, MachineError> {
    let exec = crate::executor::decide(m, x, budget)?;
    let oracle = brute_force_decide(m, x, budget)?;
    if let (Some(a), Some(b)) = (exec.as_bool(), oracle.as_bool()) {
        CHECKS.fetch_add(1, Ordering::Relaxed);
        if a != b {
            CONTRADICTIONS.fetch_add(1, Ordering::Relaxed);
            return Ok(Err(Contradiction {
                input: x.to_string(),
                executor: exec.label(),
                oracle: oracle.label(),
            }));
        }
    }
    Ok(Ok(if exec.is_definite() { exec } else { oracle }))
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Disagreement {
    pub input: String,
    pub first: &'static str,
    pub second: &'static str,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct UnknownCase {
    pub input: String,
    /// Which machine (1 or 2) had no definite verdict.
    pub machines: Vec<u8>,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct EquivalenceReport {
    pub inputs: usize,
    pub agreements: usize,
    pub disagreements: Vec<Disagreement>,
    pub unknown: Vec<UnknownCase>,
}

impl EquivalenceReport {
    pub fn equivalent(&self) -> bool {
        self.disagreements.is_empty() && self.unknown.is_empty()
    }
}

/// Compares two machines input by input. Unknown verdicts are listed
/// separately and never counted as agreement.
pub fn check_equivalence<'a>(
    m1: &MachineSpec,
    m2: &MachineSpec,
    inputs: impl IntoIterator<Item = &'a str>,
    budget1: RunBudget,
    budget2: RunBudget,
) -> Result<EquivalenceReport, MachineError> {
    let mut report = EquivalenceReport::default();
    for x in inputs {
        report.inputs += 1;
        let v1 = brute_force_decide(m1, x, budget1)?;
        let v2 = brute_force_decide(m2, x, budget2)?;
        match (v1.as_bool(), v2.as_bool()) {
            (Some(a), Some(b)) if a == b => report.agreements += 1,
            (Some(_), Some(_)) => report.disagreements.push(Disagreement {
                input: x.to_string(),
                first: v1.label(),
                second: v2.label(),
            }),
            (a, b) => report.unknown.push(UnknownCase {
                input: x.to_string(),
                machines: [(1u8, a), (2u8, b)]
                    .into_iter()
                    .filter(|(_, v)| v.is_none())
                    .map(|(i, _)| i)
                    .collect(),
            }),
        }
    }
    Ok(report)
}

/// All strings over `alphabet` of length at most `max_len`, length-lexicographic.
pub fn strings_up_to(alphabet: &[char], max_len: usize) -> Vec<String> {
    let mut out = vec![String::new()];
    let mut layer = vec![String::new()];
    for _ in 0..max_len {
        let mut next = Vec::with_capacity(layer.len() * alphabet.len());
        for s in &layer {
            for &c in alphabet {
                let mut t = s.clone();
                t.push(c);
                next.push(t);
            }
        }
        out.extend(next.iter().cloned());
        layer = next;
    }
    out
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct AmbiguityWitness {
    pub input: String,
    pub paths: [Vec<Configuration>; 2],
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct UnambiguityReport {
    pub unambiguous: bool,
    /// False when some enumeration ran out of budget before finding two paths.
    pub complete: bool,
    pub witness: Option<AmbiguityWitness>,
}

/// Up to `limit` accepting paths of length at most the step cap, in
/// rule-declaration order. The flag is false when the visit budget ran out.
pub fn accepting_paths(
    m: &MachineSpec,
    x: &str,
    budget: RunBudget,
    limit: usize,
) -> Result<(Vec<Vec<Configuration>>, bool), MachineError> {
    let tape = tape_of(m, x)?;
    let mut found = Vec::new();
    let mut visits = 0usize;
    let root = start(m);
    let mut path: Vec<(Configuration, std::vec::IntoIter<Configuration>)> = Vec::new();
    if m.accepting.contains(&root.state) {
        return Ok((vec![vec![root]], true));
    }
    let succ = successors(m, &tape, &root);
    path.push((root, succ.into_iter()));
    while let Some((_, pending)) = path.last_mut() {
        let Some(next) = pending.next() else {
            path.pop();
            continue;
        };
        visits += 1;
        if visits > budget.config_cap {
            return Ok((found, false));
        }
        if m.accepting.contains(&next.state) {
            let mut p: Vec<Configuration> = path.iter().map(|(c, _)| c.clone()).collect();
            p.push(next);
            found.push(p);
            if found.len() >= limit {
                return Ok((found, true));
            }
            continue;
        }
        if path.len() as u64 >= budget.step_cap {
            continue;
        }
        let succ = successors(m, &tape, &next);
        path.push((next, succ.into_iter()));
    }
    Ok((found, true))
}

/// Checks that every promised string of index `n` up to length `max_len` has
/// at most one accepting path.
pub fn check_unambiguous(
    m: &MachineSpec,
    family: &dyn PromiseFamily,
    n: usize,
    max_len: usize,
    budget: RunBudget,
) -> Result<UnambiguityReport, MachineError> {
    let mut complete = true;
    for x in family.promised(n, max_len) {
        let (paths, done) = accepting_paths(m, &x, budget, 2)?;
        complete &= done;
        if paths.len() >= 2 {
            let mut it = paths.into_iter();
            return Ok(UnambiguityReport {
                unambiguous: false,
                complete: true,
                witness: Some(AmbiguityWitness {
                    input: x,
                    paths: [it.next().unwrap(), it.next().unwrap()],
                }),
            });
        }
    }
    Ok(UnambiguityReport {
        unambiguous: true,
        complete,
        witness: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::machine::parse_machine;

    fn single(accept: bool) -> MachineSpec {
        let set = if accept { "accepting" } else { "rejecting" };
        let other = if accept { "rejecting" } else { "accepting" };
        parse_machine(&format!(
            r#"{{"name": "one", "mode": "deterministic", "states": ["q0"], "alphabet": ["a"],
            "counters": 0, "stack": null, "initial": "q0", "{set}": ["q0"],
            "{other}": [], "transitions": []}}"#
        ))
        .unwrap()
    }

    #[test]
    fn trivial_verdicts() {
        let b = RunBudget::with_steps(5);
        assert!(brute_force_decide(&single(true), "", b)
            .unwrap()
            .is_accept());
        assert!(brute_force_decide(&single(false), "", b)
            .unwrap()
            .is_reject());
    }

    #[test]
    fn acceptor_vs_rejector() {
        let b = RunBudget::with_steps(5);
        let r = check_equivalence(&single(true), &single(false), [""], b, b).unwrap();
        assert_eq!(r.disagreements.len(), 1);
        let r = check_equivalence(&single(true), &single(true), ["", "a"], b, b).unwrap();
        assert!(r.equivalent());
    }

    #[test]
    fn strings_in_length_lex_order() {
        assert_eq!(
            strings_up_to(&['0', '1'], 2),
            vec!["", "0", "1", "00", "01", "10", "11"]
        );
    }
}
