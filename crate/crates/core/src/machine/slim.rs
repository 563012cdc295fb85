//! Slim normal form for counter pushdown machines: push size one, a dummy
//! bottom symbol that is never removed mid-run, and halting only after the
//! stack and counters are emptied with the head parked on the left endmarker.

use serde_json::json;

use super::{
    fresh_symbol, CounterOp, Guard, MachineSpec, Move, Provenance, StackOp, StackSpec, StateTable,
    TapeSymbol, TransitionRule, BOTTOM,
};
use crate::error::MachineError;

const TRANSFORM: &str = "normalize_slim";

pub fn normalize_slim(n: &MachineSpec) -> Result<MachineSpec, MachineError> {
    let stack = n.stack.as_ref().ok_or(MachineError::NoStack)?;
    if n.provenance
        .as_ref()
        .is_some_and(|p| p.transform == TRANSFORM)
    {
        return Ok(n.clone());
    }
    let k = n.counters;
    let dummy = fresh_symbol(&stack.alphabet);
    let mut gamma = stack.alphabet.clone();
    gamma.push(dummy);

    let mut table = StateTable::from_names(&n.states);
    let init = table.fresh("init");
    let mut rules = Vec::new();
    let rule = |from, read, guards: Vec<Guard>, top, to, movement, ops, op| TransitionRule {
        from,
        read,
        guards,
        stack_top: top,
        to,
        movement,
        counter_ops: ops,
        stack_op: op,
    };
    let any = || vec![Guard::Any; k];
    let noop = || vec![CounterOp::Noop; k];
    let tape = n.tape_symbols();

    rules.push(rule(
        init,
        TapeSymbol::LeftEnd,
        any(),
        Some(BOTTOM),
        n.initial,
        Move::Stay,
        noop(),
        StackOp::Push(vec![dummy]),
    ));

    for (i, r) in n.transitions.iter().enumerate() {
        if n.is_halting(r.from) {
            continue;
        }
        let top = r.stack_top.map(|t| if t == BOTTOM { dummy } else { t });
        match &r.stack_op {
            StackOp::Push(w) if w.len() > 1 => {
                let mut from = r.from;
                for (j, &c) in w.iter().enumerate() {
                    let last = j + 1 == w.len();
                    let to = if last {
                        r.to
                    } else {
                        table.fresh(&format!("push{i}.{}", j + 1))
                    };
                    let first = j == 0;
                    rules.push(rule(
                        from,
                        r.read,
                        if first { r.guards.clone() } else { any() },
                        if first { top } else { None },
                        to,
                        if last { r.movement } else { Move::Stay },
                        if first { r.counter_ops.clone() } else { noop() },
                        StackOp::Push(vec![c]),
                    ));
                    from = to;
                }
            }
            _ => {
                let mut r = r.clone();
                r.stack_top = top;
                rules.push(r);
            }
        }
    }

    let mut accepting = Vec::new();
    let mut rejecting = Vec::new();
    for (outcome, halts) in [("acc", &n.accepting), ("rej", &n.rejecting)] {
        if halts.is_empty() {
            continue;
        }
        let drain = table.fresh(&format!("drain_{outcome}"));
        let zero = table.fresh(&format!("zero_{outcome}"));
        let park = table.fresh(&format!("park_{outcome}"));
        let fin = table.fresh(&outcome);
        if outcome == "acc" {
            accepting.push(fin);
        } else {
            rejecting.push(fin);
        }
        for &q in halts.iter() {
            for &a in &tape {
                rules.push(rule(
                    q,
                    a,
                    any(),
                    None,
                    drain,
                    Move::Stay,
                    noop(),
                    StackOp::None,
                ));
            }
        }
        for &a in &tape {
            for &g in &stack.alphabet {
                if g != BOTTOM {
                    rules.push(rule(
                        drain,
                        a,
                        any(),
                        Some(g),
                        drain,
                        Move::Stay,
                        noop(),
                        StackOp::Pop,
                    ));
                }
            }
            rules.push(rule(
                drain,
                a,
                any(),
                Some(dummy),
                zero,
                Move::Stay,
                noop(),
                StackOp::None,
            ));
            for j in 0..k {
                let mut guards = any();
                for g in guards.iter_mut().take(j) {
                    *g = Guard::Zero;
                }
                guards[j] = Guard::Nonzero;
                let mut ops = noop();
                ops[j] = CounterOp::Dec;
                rules.push(rule(
                    zero,
                    a,
                    guards,
                    None,
                    zero,
                    Move::Stay,
                    ops,
                    StackOp::None,
                ));
            }
            rules.push(rule(
                zero,
                a,
                vec![Guard::Zero; k],
                None,
                park,
                Move::Stay,
                noop(),
                StackOp::None,
            ));
            if a == TapeSymbol::LeftEnd {
                rules.push(rule(
                    park,
                    a,
                    any(),
                    Some(dummy),
                    fin,
                    Move::Stay,
                    noop(),
                    StackOp::Pop,
                ));
            } else {
                rules.push(rule(
                    park,
                    a,
                    any(),
                    None,
                    park,
                    Move::Left,
                    noop(),
                    StackOp::None,
                ));
            }
        }
    }

    let states = table.into_names();
    let out = MachineSpec {
        name: format!("{}_slim", n.name),
        mode: n.mode,
        states,
        alphabet: n.alphabet.clone(),
        counters: k,
        stack: Some(StackSpec {
            alphabet: gamma,
            push_size: 1,
        }),
        initial: init,
        accepting,
        rejecting,
        transitions: rules,
        provenance: Some(Provenance {
            derived_from: n.name.clone(),
            transform: TRANSFORM.into(),
            parameters: json!({ "dummy_bottom": dummy.to_string() }),
        }),
    };
    debug_assert!(out.validate().is_ok(), "{:?}", out.validate());
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::machine::parse_machine;

    fn pusher() -> MachineSpec {
        parse_machine(
            r#"{
            "name": "pusher", "mode": "deterministic", "states": ["p", "q", "acc"],
            "alphabet": ["a"], "counters": 1, "stack": {"alphabet": ["⊥", "x", "y"], "push_size": 2},
            "initial": "p", "accepting": ["acc"], "rejecting": [],
            "transitions": [
              {"from": "p", "read": ">", "guards": ["any"], "stack_top": "⊥", "to": "q",
               "move": 1, "counter_ops": ["inc"], "stack_op": {"push": "xy"}},
              {"from": "q", "read": "a", "guards": ["nonzero"], "stack_top": "y", "to": "acc",
               "move": 1, "counter_ops": ["noop"], "stack_op": "none"}
            ]}"#,
        )
        .unwrap()
    }

    #[test]
    fn push_size_becomes_one() {
        let s = normalize_slim(&pusher()).unwrap();
        assert_eq!(s.stack.as_ref().unwrap().push_size, 1);
        s.validate().unwrap();
        assert_eq!(s.accepting.len(), 1);
    }

    #[test]
    fn idempotent() {
        let s = normalize_slim(&pusher()).unwrap();
        assert_eq!(normalize_slim(&s).unwrap(), s);
    }

    #[test]
    fn needs_a_stack() {
        let mut m = pusher();
        m.stack = None;
        m.transitions.clear();
        assert_eq!(normalize_slim(&m).unwrap_err(), MachineError::NoStack);
    }
}
