//! JSON machine documents.

use serde::{Deserialize, Serialize};

use super::{
    CounterOp, Guard, MachineSpec, Mode, Move, Provenance, StackOp, StackSpec, StateId, TapeSymbol,
    TransitionRule,
};
use crate::error::MachineError;

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct MachineDoc {
    name: String,
    mode: Mode,
    states: Vec<String>,
    alphabet: Vec<String>,
    counters: usize,
    stack: Option<StackDoc>,
    initial: String,
    accepting: Vec<String>,
    rejecting: Vec<String>,
    transitions: Vec<RuleDoc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    provenance: Option<Provenance>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct StackDoc {
    alphabet: Vec<String>,
    push_size: usize,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RuleDoc {
    from: String,
    read: String,
    guards: Vec<Guard>,
    stack_top: Option<String>,
    to: String,
    #[serde(rename = "move")]
    movement: i64,
    counter_ops: Vec<CounterOp>,
    stack_op: StackOpDoc,
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum StackOpDoc {
    Push { push: String },
    Simple(SimpleOp),
}

#[derive(Serialize, Deserialize, PartialEq)]
#[serde(rename_all = "lowercase")]
enum SimpleOp {
    None,
    Pop,
}

fn single_char(s: &str, context: &str) -> Result<char, MachineError> {
    let mut it = s.chars();
    match (it.next(), it.next()) {
        (Some(c), None) => Ok(c),
        _ => Err(MachineError::Malformed {
            context: context.to_string(),
            reason: format!("\"{s}\" is not a single character"),
        }),
    }
}

/// Parses and validates a machine document.
pub fn parse_machine(doc: &str) -> Result<MachineSpec, MachineError> {
    let d: MachineDoc = serde_json::from_str(doc).map_err(|e| MachineError::Syntax {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    let spec = from_doc(d)?;
    spec.validate()?;
    Ok(spec)
}

fn from_doc(d: MachineDoc) -> Result<MachineSpec, MachineError> {
    let mut seen = rustc_hash::FxHashSet::default();
    for s in &d.states {
        if !seen.insert(s.as_str()) {
            return Err(MachineError::Duplicate {
                what: "state",
                name: s.clone(),
            });
        }
    }
    let lookup = |name: &str, context: &str| -> Result<StateId, MachineError> {
        d.states
            .iter()
            .position(|s| s == name)
            .map(|i| i as StateId)
            .ok_or_else(|| MachineError::UndeclaredState {
                context: context.to_string(),
                state: name.to_string(),
            })
    };
    let alphabet = d
        .alphabet
        .iter()
        .map(|s| single_char(s, "alphabet"))
        .collect::<Result<Vec<_>, _>>()?;
    let stack = d
        .stack
        .as_ref()
        .map(|s| -> Result<StackSpec, MachineError> {
            Ok(StackSpec {
                alphabet: s
                    .alphabet
                    .iter()
                    .map(|c| single_char(c, "stack alphabet"))
                    .collect::<Result<_, _>>()?,
                push_size: s.push_size,
            })
        })
        .transpose()?;
    let initial = lookup(&d.initial, "initial")?;
    let accepting = d
        .accepting
        .iter()
        .map(|s| lookup(s, "accepting"))
        .collect::<Result<Vec<_>, _>>()?;
    let rejecting = d
        .rejecting
        .iter()
        .map(|s| lookup(s, "rejecting"))
        .collect::<Result<Vec<_>, _>>()?;

    let mut transitions = Vec::with_capacity(d.transitions.len());
    for (i, r) in d.transitions.iter().enumerate() {
        let ctx = format!("rule #{i} ({} --{}--> {})", r.from, r.read, r.to);
        let from = lookup(&r.from, &ctx)?;
        let to = lookup(&r.to, &ctx)?;
        let read = TapeSymbol::from_char(single_char(&r.read, &ctx)?);
        let movement = Move::from_delta(r.movement).ok_or_else(|| MachineError::Malformed {
            context: ctx.clone(),
            reason: format!("head move {} is not -1, 0 or 1", r.movement),
        })?;
        let stack_top = r
            .stack_top
            .as_deref()
            .map(|s| single_char(s, &ctx))
            .transpose()?;
        let stack_op = match &r.stack_op {
            StackOpDoc::Simple(SimpleOp::None) => StackOp::None,
            StackOpDoc::Simple(SimpleOp::Pop) => StackOp::Pop,
            StackOpDoc::Push { push } => StackOp::Push(push.chars().collect()),
        };
        transitions.push(TransitionRule {
            from,
            read,
            guards: r.guards.clone(),
            stack_top,
            to,
            movement,
            counter_ops: r.counter_ops.clone(),
            stack_op,
        });
    }

    Ok(MachineSpec {
        name: d.name,
        mode: d.mode,
        states: d.states,
        alphabet,
        counters: d.counters,
        stack,
        initial,
        accepting,
        rejecting,
        transitions,
        provenance: d.provenance,
    })
}

fn to_doc(m: &MachineSpec) -> MachineDoc {
    let name = |q: StateId| m.state_name(q).to_string();
    MachineDoc {
        name: m.name.clone(),
        mode: m.mode,
        states: m.states.clone(),
        alphabet: m.alphabet.iter().map(|c| c.to_string()).collect(),
        counters: m.counters,
        stack: m.stack.as_ref().map(|s| StackDoc {
            alphabet: s.alphabet.iter().map(|c| c.to_string()).collect(),
            push_size: s.push_size,
        }),
        initial: name(m.initial),
        accepting: m.accepting.iter().map(|&q| name(q)).collect(),
        rejecting: m.rejecting.iter().map(|&q| name(q)).collect(),
        transitions: m
            .transitions
            .iter()
            .map(|r| RuleDoc {
                from: name(r.from),
                read: r.read.as_char().to_string(),
                guards: r.guards.clone(),
                stack_top: r.stack_top.map(|c| c.to_string()),
                to: name(r.to),
                movement: r.movement.delta(),
                counter_ops: r.counter_ops.clone(),
                stack_op: match &r.stack_op {
                    StackOp::None => StackOpDoc::Simple(SimpleOp::None),
                    StackOp::Pop => StackOpDoc::Simple(SimpleOp::Pop),
                    StackOp::Push(w) => StackOpDoc::Push {
                        push: w.iter().collect(),
                    },
                },
            })
            .collect(),
        provenance: m.provenance.clone(),
    }
}

/// Serializes a spec as a pretty-printed machine document.
pub fn to_json(m: &MachineSpec) -> String {
    serde_json::to_string_pretty(&to_doc(m)).expect("machine documents always serialize")
}

#[cfg(test)]
mod tests {
    use super::*;

    const ACCEPTOR: &str = r#"{
        "name": "one", "mode": "deterministic", "states": ["q0"], "alphabet": ["a"],
        "counters": 0, "stack": null, "initial": "q0", "accepting": ["q0"],
        "rejecting": [], "transitions": []
    }"#;

    #[test]
    fn one_state_acceptor() {
        let m = parse_machine(ACCEPTOR).unwrap();
        assert_eq!(m.states.len(), 1);
        assert_eq!(m.counters, 0);
    }

    #[test]
    fn syntax_error_has_position() {
        let err = parse_machine("{\n  \"name\": }").unwrap_err();
        match err {
            MachineError::Syntax { line, .. } => assert_eq!(line, 2),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn undeclared_target_is_named() {
        let doc = r#"{
            "name": "bad", "mode": "nondeterministic", "states": ["q0"], "alphabet": ["a"],
            "counters": 0, "stack": null, "initial": "q0", "accepting": [], "rejecting": [],
            "transitions": [{"from": "q0", "read": ">", "guards": [], "stack_top": null,
              "to": "qX", "move": 1, "counter_ops": [], "stack_op": "none"}]
        }"#;
        let err = parse_machine(doc).unwrap_err();
        assert!(err.to_string().contains("qX"), "{err}");
        assert!(err.to_string().contains("rule #0"), "{err}");
    }

    #[test]
    fn duplicate_state_rejected() {
        let doc = ACCEPTOR.replace(r#"["q0"], "alphabet""#, r#"["q0", "q0"], "alphabet""#);
        assert!(matches!(
            parse_machine(&doc),
            Err(MachineError::Duplicate { what: "state", .. })
        ));
    }

    #[test]
    fn push_and_pop_round_trip() {
        let doc = r#"{
            "name": "pd", "mode": "nondeterministic", "states": ["p", "q"], "alphabet": ["a"],
            "counters": 1, "stack": {"alphabet": ["⊥", "x"], "push_size": 2},
            "initial": "p", "accepting": ["q"], "rejecting": [],
            "transitions": [
              {"from": "p", "read": ">", "guards": ["any"], "stack_top": null, "to": "p",
               "move": 1, "counter_ops": ["inc"], "stack_op": {"push": "xx"}},
              {"from": "p", "read": "a", "guards": ["nonzero"], "stack_top": "x", "to": "q",
               "move": 0, "counter_ops": ["dec"], "stack_op": "pop"}
            ]
        }"#;
        let m = parse_machine(doc).unwrap();
        assert_eq!(m.transitions[0].stack_op, StackOp::Push(vec!['x', 'x']));
        let again = parse_machine(&to_json(&m)).unwrap();
        assert_eq!(m, again);
    }

    #[test]
    fn popping_bottom_is_rejected() {
        let doc = r#"{
            "name": "pd", "mode": "nondeterministic", "states": ["p"], "alphabet": ["a"],
            "counters": 0, "stack": {"alphabet": ["⊥"], "push_size": 1},
            "initial": "p", "accepting": [], "rejecting": [],
            "transitions": [
              {"from": "p", "read": ">", "guards": [], "stack_top": "⊥", "to": "p",
               "move": 1, "counter_ops": [], "stack_op": "pop"}
            ]
        }"#;
        let err = parse_machine(doc).unwrap_err();
        assert!(err.to_string().contains("rule #0"), "{err}");
    }

    #[test]
    fn determinism_conflict_names_both_rules() {
        let doc = r#"{
            "name": "d", "mode": "deterministic", "states": ["p", "q"], "alphabet": ["a"],
            "counters": 1, "stack": null, "initial": "p", "accepting": ["q"], "rejecting": [],
            "transitions": [
              {"from": "p", "read": "a", "guards": ["any"], "stack_top": null, "to": "q",
               "move": 1, "counter_ops": ["noop"], "stack_op": "none"},
              {"from": "p", "read": "a", "guards": ["zero"], "stack_top": null, "to": "p",
               "move": 1, "counter_ops": ["noop"], "stack_op": "none"}
            ]
        }"#;
        let err = parse_machine(doc).unwrap_err().to_string();
        assert!(err.contains("rule #0") && err.contains("rule #1"), "{err}");
    }
}
