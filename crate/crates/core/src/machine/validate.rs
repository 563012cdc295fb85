use rustc_hash::FxHashSet;

use super::{
    CounterOp, Guard, MachineSpec, Mode, Move, StackOp, TapeSymbol, BOTTOM, LEFT_END, RIGHT_END,
};
use crate::error::MachineError;

pub(super) fn validate(m: &MachineSpec) -> Result<(), MachineError> {
    let mut seen = FxHashSet::default();
    for s in &m.states {
        if !seen.insert(s.as_str()) {
            return Err(MachineError::Duplicate {
                what: "state",
                name: s.clone(),
            });
        }
    }
    let mut seen = FxHashSet::default();
    for &c in &m.alphabet {
        if c == LEFT_END || c == RIGHT_END {
            return Err(MachineError::Malformed {
                context: "alphabet".into(),
                reason: format!("endmarker '{c}' cannot be an input symbol"),
            });
        }
        if !seen.insert(c) {
            return Err(MachineError::Duplicate {
                what: "symbol",
                name: c.to_string(),
            });
        }
    }

    let nstates = m.states.len() as u32;
    let check_state = |q: u32, context: &str| {
        if q >= nstates {
            Err(MachineError::UndeclaredState {
                context: context.to_string(),
                state: format!("#{q}"),
            })
        } else {
            Ok(())
        }
    };
    check_state(m.initial, "initial")?;
    for &q in m.accepting.iter().chain(&m.rejecting) {
        check_state(q, "halting set")?;
    }
    if let Some(&q) = m.accepting.iter().find(|q| m.rejecting.contains(q)) {
        return Err(MachineError::OverlappingHaltSets(
            m.state_name(q).to_string(),
        ));
    }

    if let Some(stack) = &m.stack {
        if !stack.alphabet.contains(&BOTTOM) {
            return Err(MachineError::Malformed {
                context: "stack".into(),
                reason: format!("stack alphabet must contain the bottom marker {BOTTOM}"),
            });
        }
        if stack.push_size == 0 {
            return Err(MachineError::Malformed {
                context: "stack".into(),
                reason: "push size must be positive".into(),
            });
        }
        let mut seen = FxHashSet::default();
        for &c in &stack.alphabet {
            if !seen.insert(c) {
                return Err(MachineError::Duplicate {
                    what: "stack symbol",
                    name: c.to_string(),
                });
            }
        }
    }

    for (i, r) in m.transitions.iter().enumerate() {
        let ctx = || format!("rule #{i}");
        check_state(r.from, &ctx())?;
        check_state(r.to, &ctx())?;
        let ctx = || m.describe_rule(i);
        let malformed = |reason: String| MachineError::Malformed {
            context: ctx(),
            reason,
        };
        if let TapeSymbol::Sym(c) = r.read {
            if !m.alphabet.contains(&c) {
                return Err(MachineError::UndeclaredSymbol {
                    context: ctx(),
                    symbol: c.to_string(),
                });
            }
        }
        if r.guards.len() != m.counters || r.counter_ops.len() != m.counters {
            return Err(malformed(format!(
                "expected {} counter guards and operations",
                m.counters
            )));
        }
        for (j, (g, op)) in r.guards.iter().zip(&r.counter_ops).enumerate() {
            if *op == CounterOp::Dec && *g != Guard::Nonzero {
                return Err(malformed(format!(
                    "counter {j} is decremented without a nonzero guard"
                )));
            }
        }
        match (r.read, r.movement) {
            (TapeSymbol::LeftEnd, Move::Left) => {
                return Err(malformed("moves left of the left endmarker".into()))
            }
            (TapeSymbol::RightEnd, Move::Right) => {
                return Err(malformed("moves right of the right endmarker".into()))
            }
            _ => {}
        }
        match &m.stack {
            None => {
                if r.stack_top.is_some() || r.stack_op != StackOp::None {
                    return Err(malformed(
                        "stack operation on a machine without stack".into(),
                    ));
                }
            }
            Some(stack) => {
                if let Some(top) = r.stack_top {
                    if !stack.alphabet.contains(&top) {
                        return Err(MachineError::UndeclaredSymbol {
                            context: ctx(),
                            symbol: top.to_string(),
                        });
                    }
                }
                match &r.stack_op {
                    StackOp::None => {}
                    StackOp::Pop => match r.stack_top {
                        Some(top) if top != BOTTOM => {}
                        _ => {
                            return Err(malformed(
                                "pop must be guarded by a non-bottom stack top".into(),
                            ))
                        }
                    },
                    StackOp::Push(w) => {
                        if w.is_empty() || w.len() > stack.push_size {
                            return Err(malformed(format!(
                                "pushed word length {} outside 1..={}",
                                w.len(),
                                stack.push_size
                            )));
                        }
                        for &c in w {
                            if c == BOTTOM {
                                return Err(malformed("pushes the bottom marker".into()));
                            }
                            if !stack.alphabet.contains(&c) {
                                return Err(MachineError::UndeclaredSymbol {
                                    context: ctx(),
                                    symbol: c.to_string(),
                                });
                            }
                        }
                    }
                }
            }
        }
    }

    if m.mode == Mode::Deterministic {
        check_determinism(m)?;
    }
    Ok(())
}

fn check_determinism(m: &MachineSpec) -> Result<(), MachineError> {
    let mut buckets: rustc_hash::FxHashMap<(u32, TapeSymbol), Vec<usize>> = Default::default();
    for (i, r) in m.transitions.iter().enumerate() {
        buckets.entry((r.from, r.read)).or_default().push(i);
    }
    let mut keys: Vec<_> = buckets.keys().copied().collect();
    keys.sort();
    for key in keys {
        let rules = &buckets[&key];
        for (a, &i) in rules.iter().enumerate() {
            for &j in &rules[a + 1..] {
                let (ri, rj) = (&m.transitions[i], &m.transitions[j]);
                let guards = ri
                    .guards
                    .iter()
                    .zip(&rj.guards)
                    .all(|(g, h)| g.overlaps(*h));
                let tops = match (ri.stack_top, rj.stack_top) {
                    (Some(a), Some(b)) => a == b,
                    _ => true,
                };
                if guards && tops {
                    return Err(MachineError::DeterminismConflict {
                        first: m.describe_rule(i),
                        second: m.describe_rule(j),
                    });
                }
            }
        }
    }
    Ok(())
}
