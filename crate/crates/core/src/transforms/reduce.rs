//! Reduction to four counters (three with a stack).
//!
//! The first `k − 2` counters are packed into one counter as the digits of
//! a base-`p` number whose top digit is unbounded. Before a move that looks
//! at a packed counter, the number is moved into a scratch (a counter, or
//! unit symbols above a separator on the stack) and back, while the finite
//! control tracks its value modulo `p^(g−1)`. That yields every digit's
//! zero test; the update then adds or subtracts the matching powers of `p`.

use rustc_hash::FxHashMap;
use serde::{Deserialize, Serialize};

use super::lower::Builder;
use crate::error::TransformError;
use crate::machine::{
    fresh_symbol, CounterOp, Guard, MachineSpec, Provenance, StackOp, StateId, TransitionRule,
};

/// Finite-control states per scan are capped at this many.
const MAX_SCAN_STATES: u64 = 1 << 20;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReduceParams {
    pub modulus: u64,
    /// Original counters packed into counter 0, lowest digit first.
    pub packed: Vec<usize>,
    /// Original counters kept as counters 1 and 2.
    pub kept: Vec<usize>,
    /// Index of the scratch counter, or `None` when the stack serves.
    pub scratch: Option<usize>,
    /// Stack separator and unit symbols when the stack serves.
    pub stack_symbols: Option<(char, char)>,
}

/// Reduces a machine with `k ≥ 4` counters to exactly four. Lower packed
/// counters must stay below `p`; an increment past that rejects.
pub fn reduce_counters(m: &MachineSpec, p: u64) -> Result<MachineSpec, TransformError> {
    if m.counters < 4 {
        return Err(TransformError::Precondition(format!(
            "reduce_counters needs at least 4 counters, got {}",
            m.counters
        )));
    }
    reduce(m, p, false)
}

/// Reduces a counter pushdown machine with `k ≥ 3` counters to exactly
/// three, using the stack as the scratch counter.
pub fn reduce_counters_pd(m: &MachineSpec, p: u64) -> Result<MachineSpec, TransformError> {
    if !m.has_stack() {
        return Err(crate::error::MachineError::NoStack.into());
    }
    if m.counters < 3 {
        return Err(TransformError::Precondition(format!(
            "reduce_counters_pd needs at least 3 counters, got {}",
            m.counters
        )));
    }
    reduce(m, p, true)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
enum Digit {
    Zero,
    Mid,
    Max,
}

fn reduce(m: &MachineSpec, p: u64, on_stack: bool) -> Result<MachineSpec, TransformError> {
    m.validate()?;
    if p < 2 {
        return Err(TransformError::Precondition(
            "modulus must be at least 2".into(),
        ));
    }
    let k = m.counters;
    let target = if on_stack { 3 } else { 4 };
    let transform = if on_stack {
        "reduce_counters_pd"
    } else {
        "reduce_counters"
    };
    let g = k - 2;
    let packed: Vec<usize> = (0..g).collect();
    let kept = vec![g, g + 1];
    if k == target {
        let mut out = m.clone();
        out.provenance = Some(Provenance {
            derived_from: m.name.clone(),
            transform: transform.into(),
            parameters: serde_json::json!({"identity": true, "modulus": p}),
        });
        return Ok(out);
    }
    let low = p
        .checked_pow(g as u32 - 1)
        .filter(|&v| v <= MAX_SCAN_STATES)
        .ok_or_else(|| {
            TransformError::Precondition(format!("p^{} exceeds the scan limit", g - 1))
        })?;

    let mut gamma: Vec<char> = m
        .stack
        .as_ref()
        .map(|s| s.alphabet.clone())
        .unwrap_or_default();
    let stack_symbols = on_stack.then(|| {
        let sep = fresh_symbol(&gamma);
        gamma.push(sep);
        let unit = fresh_symbol(&gamma);
        gamma.push(unit);
        (sep, unit)
    });
    const E: usize = 0;
    const T: usize = 3;
    let mut bld = Builder::new(&m.states, m, target, gamma.clone());

    let map_rule = |r: &TransitionRule, from: StateId, to: StateId| {
        let mut guards = vec![Guard::Any; target];
        let mut ops = vec![CounterOp::Noop; target];
        for (j, &i) in kept.iter().enumerate() {
            guards[j + 1] = r.guards[i];
            ops[j + 1] = r.counter_ops[i];
        }
        TransitionRule {
            from,
            to,
            guards,
            counter_ops: ops,
            ..r.clone()
        }
    };
    let touches = |r: &TransitionRule| {
        packed
            .iter()
            .any(|&i| r.guards[i] != Guard::Any || r.counter_ops[i] != CounterOp::Noop)
    };
    let classes = |v: u64, top: bool| -> Vec<Digit> {
        let mut out = Vec::with_capacity(g);
        let mut rest = v;
        for _ in 0..g - 1 {
            let d = rest % p;
            rest /= p;
            out.push(if d == 0 {
                Digit::Zero
            } else if d == p - 1 {
                Digit::Max
            } else {
                Digit::Mid
            });
        }
        out.push(if top { Digit::Mid } else { Digit::Zero });
        out
    };
    let label = |cls: &[Digit]| -> String {
        cls.iter()
            .map(|d| match d {
                Digit::Zero => '0',
                Digit::Mid => '+',
                Digit::Max => 'M',
            })
            .collect()
    };

    let mut by_state: Vec<Vec<&TransitionRule>> = vec![Vec::new(); m.states.len()];
    for r in &m.transitions {
        if !m.is_halting(r.from) {
            by_state[r.from as usize].push(r);
        }
    }
    let mut chains: FxHashMap<(StateId, i64), StateId> = FxHashMap::default();
    for (q, rules) in by_state.iter().enumerate() {
        let q = q as StateId;
        if !rules.iter().any(|r| touches(r)) {
            for r in rules {
                bld.push_rule(map_rule(r, q, r.to));
            }
            continue;
        }
        let qn = m.state_name(q).to_string();
        let mut restore: FxHashMap<Vec<Digit>, StateId> = FxHashMap::default();
        let scan: Vec<[StateId; 2]> = (0..low)
            .map(|v| {
                [false, true].map(|top| {
                    if v == 0 && !top && !on_stack {
                        q
                    } else {
                        bld.state(&format!("{qn}~s{v}{}", if top { "+" } else { "" }))
                    }
                })
            })
            .collect();
        if let Some((sep, _)) = stack_symbols {
            let (any, noop) = (bld.any(), bld.noop());
            bld.everywhere(q, &any, None, scan[0][0], &noop, StackOp::Push(vec![sep]));
        }
        for v in 0..low {
            for top in [false, true] {
                let here = scan[v as usize][top as usize];
                let cls = classes(v, top);
                let back = match restore.get(&cls) {
                    Some(&s) => s,
                    None => {
                        let s = bld.state(&format!("{qn}~r{}", label(&cls)));
                        restore.insert(cls.clone(), s);
                        s
                    }
                };
                let (nv, ntop) = if v + 1 == low {
                    (0, true)
                } else {
                    (v + 1, top)
                };
                let next = scan[nv as usize][ntop as usize];
                let (mut gz, mut gn, mut ops) = (bld.any(), bld.any(), bld.noop());
                gz[E] = Guard::Zero;
                gn[E] = Guard::Nonzero;
                ops[E] = CounterOp::Dec;
                let noop = bld.noop();
                bld.everywhere(here, &gz, None, back, &noop, StackOp::None);
                match stack_symbols {
                    Some((_, unit)) => {
                        bld.everywhere(here, &gn, None, next, &ops, StackOp::Push(vec![unit]))
                    }
                    None => {
                        ops[T] = CounterOp::Inc;
                        bld.everywhere(here, &gn, None, next, &ops, StackOp::None);
                    }
                }
            }
        }
        let mut restores: Vec<(Vec<Digit>, StateId)> = restore.into_iter().collect();
        restores.sort_by_key(|(_, s)| *s);
        for (cls, back) in restores {
            let done = bld.state(&format!("{qn}~f{}", label(&cls)));
            let any = bld.any();
            let noop = bld.noop();
            let mut inc = bld.noop();
            inc[E] = CounterOp::Inc;
            match stack_symbols {
                Some((sep, unit)) => {
                    bld.everywhere(back, &any, Some(unit), back, &inc, StackOp::Pop);
                    bld.everywhere(back, &any, Some(sep), done, &noop, StackOp::Pop);
                }
                None => {
                    let (mut gz, mut gn) = (bld.any(), bld.any());
                    gz[T] = Guard::Zero;
                    gn[T] = Guard::Nonzero;
                    inc[T] = CounterOp::Dec;
                    bld.everywhere(back, &gn, None, back, &inc, StackOp::None);
                    bld.everywhere(back, &gz, None, done, &noop, StackOp::None);
                }
            }
            for r in rules {
                let fits = packed
                    .iter()
                    .all(|&i| r.guards[i].admits(if cls[i] == Digit::Zero { 0 } else { 1 }));
                if !fits {
                    continue;
                }
                let overflow = packed.iter().any(|&i| {
                    i + 1 < g && cls[i] == Digit::Max && r.counter_ops[i] == CounterOp::Inc
                });
                let to = if overflow {
                    bld.sink()
                } else {
                    let delta: i64 = packed
                        .iter()
                        .map(|&i| {
                            let w = (p as i64).pow(i as u32);
                            match r.counter_ops[i] {
                                CounterOp::Inc => w,
                                CounterOp::Dec => -w,
                                CounterOp::Noop => 0,
                            }
                        })
                        .sum();
                    chain(&mut bld, m, &mut chains, r.to, delta)
                };
                bld.push_rule(map_rule(r, done, to));
            }
        }
    }

    let params = ReduceParams {
        modulus: p,
        packed: packed.clone(),
        kept: kept.clone(),
        scratch: (!on_stack).then_some(T),
        stack_symbols,
    };
    bld.finish(
        m,
        format!("{}.reduced{target}", m.name),
        m.initial,
        m.accepting.clone(),
        m.rejecting.clone(),
        on_stack.then_some(gamma),
        Provenance {
            derived_from: m.name.clone(),
            transform: transform.into(),
            parameters: serde_json::to_value(params).expect("serializable"),
        },
    )
}

/// States adding `delta` to the packed counter, then entering `to`.
fn chain(
    bld: &mut Builder,
    m: &MachineSpec,
    memo: &mut FxHashMap<(StateId, i64), StateId>,
    to: StateId,
    delta: i64,
) -> StateId {
    if delta == 0 {
        return to;
    }
    if let Some(&s) = memo.get(&(to, delta)) {
        return s;
    }
    let op = if delta > 0 {
        CounterOp::Inc
    } else {
        CounterOp::Dec
    };
    let name = m.state_name(to).to_string();
    let mut next = to;
    for i in (0..delta.unsigned_abs()).rev() {
        let s = bld.state(&format!("{name}^{delta:+}.{i}"));
        bld.bump(s, 0, op, next);
        next = s;
    }
    memo.insert((to, delta), next);
    next
}
