//! Fusing two counters into one paired counter with three shared scratch
//! counters.

use rustc_hash::FxHashMap;
use serde::{Deserialize, Serialize};

use super::lower::{Builder, Exits};
use crate::counterprog::{
    produce_p_program, update_program, zero_test_program, CounterProgram, Emitter, Instr, Update,
    CT1, CT2, CT3, CT4, END, ZERO_EXITS,
};
use crate::error::TransformError;
use crate::machine::{CounterOp, Guard, MachineSpec, Provenance, StateId, TransitionRule};

pub const TRANSFORM: &str = "pair_counters";

/// How the pairing modulus `p` is put into CT2 at start-up.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Modulus {
    /// A constant `p`, loaded by a chain of increments.
    Fixed(u64),
    /// `p = (n·|x|)^t + 1`, computed from the input by procedure (a).
    Sweep { n: usize, t: u32 },
}

/// Provenance parameters of a paired machine.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PairParams {
    /// Every pair fused so far, as indices into the machine it was fused in.
    pub pairs: Vec<[usize; 2]>,
    pub modulus: Modulus,
    /// Counters holding encoded pairs, in the current machine.
    pub encoded: Vec<usize>,
    /// The shared CT1, CT2 (holds `p`) and CT4, in the current machine.
    pub scratch: [usize; 3],
}

impl PairParams {
    pub fn of(m: &MachineSpec) -> Option<PairParams> {
        let p = m.provenance.as_ref()?;
        if p.transform != TRANSFORM {
            return None;
        }
        serde_json::from_value(p.parameters.clone()).ok()
    }
}

fn startup(modulus: &Modulus) -> CounterProgram {
    match *modulus {
        Modulus::Fixed(p) => {
            let mut e = Emitter::new();
            for _ in 0..p {
                e.inc(CT2);
            }
            e.finish()
        }
        Modulus::Sweep { n, t } => {
            let mut prog = produce_p_program(n, t);
            prog.code.push(Instr::Inc { reg: CT2.into() });
            prog
        }
    }
}

/// Fuses counters `a` and `b` into the single counter `⟨c_a, c_b⟩_p`, where
/// `c_a` is unbounded and `c_b` must stay below `p`. Every rule of a state
/// that looks at either counter is preceded by the zero test and followed by
/// the update procedures. Increments that push `c_b` to `p` end in a
/// rejecting overflow state.
///
/// On a machine that is itself the result of `pair_counters`, the existing
/// scratch counters and modulus are reused and `modulus` is ignored.
pub fn pair_counters(
    m: &MachineSpec,
    a: usize,
    b: usize,
    modulus: Modulus,
) -> Result<MachineSpec, TransformError> {
    m.validate()?;
    let k = m.counters;
    for i in [a, b] {
        if i >= k {
            return Err(TransformError::CounterIndex {
                index: i,
                counters: k,
            });
        }
    }
    if a == b {
        return Err(TransformError::Precondition(
            "cannot pair a counter with itself".into(),
        ));
    }
    let prev = PairParams::of(m);
    if let Some(prev) = &prev {
        for i in [a, b] {
            if prev.encoded.contains(&i) || prev.scratch.contains(&i) {
                return Err(TransformError::NotPlain(i));
            }
        }
    }
    if let Modulus::Fixed(0) = modulus {
        return Err(TransformError::Precondition(
            "modulus must be positive".into(),
        ));
    }
    let new = |i: usize| if i > b { i - 1 } else { i };
    let (kn, scratch, modulus) = match &prev {
        Some(p) => (k - 1, p.scratch.map(new), p.modulus.clone()),
        None => (k + 2, [k - 1, k, k + 1], modulus),
    };
    let e = new(a);
    let regs = move |r: &str| match r {
        CT1 => scratch[0],
        CT2 => scratch[1],
        CT4 => scratch[2],
        CT3 => e,
        other => unreachable!("register {other}"),
    };

    let mut bld = Builder::new(&m.states, m, kn, stack_gamma(m));
    let initial = match prev {
        Some(_) => m.initial,
        None => {
            let init = bld.state("init");
            let q0 = m.initial;
            bld.lower(
                &startup(&modulus),
                "init",
                init,
                &regs,
                &Exits {
                    named: &move |_| q0,
                    accept: None,
                    reject: None,
                },
            )?;
            init
        }
    };

    let map_rule = |r: &TransitionRule, from: StateId, to: StateId| {
        let mut guards = vec![Guard::Any; kn];
        let mut ops = vec![CounterOp::Noop; kn];
        for i in (0..k).filter(|&i| i != a && i != b) {
            guards[new(i)] = r.guards[i];
            ops[new(i)] = r.counter_ops[i];
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
        [a, b]
            .iter()
            .any(|&i| r.guards[i] != Guard::Any || r.counter_ops[i] != CounterOp::Noop)
    };

    let mut by_state: Vec<Vec<&TransitionRule>> = vec![Vec::new(); m.states.len()];
    for r in &m.transitions {
        if !m.is_halting(r.from) {
            by_state[r.from as usize].push(r);
        }
    }
    let mut conts: FxHashMap<(StateId, CounterOp, CounterOp), StateId> = FxHashMap::default();
    for (q, rules) in by_state.iter().enumerate() {
        let q = q as StateId;
        if !rules.iter().any(|r| touches(r)) {
            for r in rules {
                bld.push_rule(map_rule(r, q, r.to));
            }
            continue;
        }
        let qn = m.state_name(q).to_string();
        let flagged: Vec<StateId> = ZERO_EXITS
            .iter()
            .map(|(f, _, _)| bld.state(&format!("{qn}#{f}")))
            .collect();
        let exit_state = |name: &str| {
            let i = ZERO_EXITS.iter().position(|(f, _, _)| *f == name);
            flagged[i.unwrap_or_else(|| unreachable!("zero test exit {name}"))]
        };
        bld.lower(
            &zero_test_program(),
            &format!("{qn}?"),
            q,
            &regs,
            &Exits {
                named: &exit_state,
                accept: None,
                reject: None,
            },
        )?;
        for (fi, &(_, za, zb)) in ZERO_EXITS.iter().enumerate() {
            let value = |zero: bool| if zero { 0 } else { 1 };
            for r in rules {
                if !(r.guards[a].admits(value(za)) && r.guards[b].admits(value(zb))) {
                    continue;
                }
                let key = (r.to, r.counter_ops[a], r.counter_ops[b]);
                let to = match conts.get(&key) {
                    Some(&s) => s,
                    None => {
                        let s = continuation(&mut bld, m, key, &regs)?;
                        conts.insert(key, s);
                        s
                    }
                };
                bld.push_rule(map_rule(r, flagged[fi], to));
            }
        }
    }

    let mut encoded: Vec<usize> = prev
        .as_ref()
        .map(|p| p.encoded.iter().map(|&i| new(i)).collect())
        .unwrap_or_default();
    encoded.push(e);
    let mut pairs = prev.as_ref().map(|p| p.pairs.clone()).unwrap_or_default();
    pairs.push([a, b]);
    let params = PairParams {
        pairs,
        modulus,
        encoded,
        scratch,
    };
    bld.finish(
        m,
        format!("{}.pair{a}{b}", m.name),
        initial,
        m.accepting.clone(),
        m.rejecting.clone(),
        None,
        Provenance {
            derived_from: m.name.clone(),
            transform: TRANSFORM.into(),
            parameters: serde_json::to_value(params).expect("serializable"),
        },
    )
}

fn stack_gamma(m: &MachineSpec) -> Vec<char> {
    m.stack
        .as_ref()
        .map(|s| s.alphabet.clone())
        .unwrap_or_default()
}

fn update_of(op: CounterOp) -> Option<Update> {
    match op {
        CounterOp::Inc => Some(Update::Inc),
        CounterOp::Dec => Some(Update::Dec),
        CounterOp::Noop => None,
    }
}

/// States applying the updates on both components, then entering `to`.
fn continuation(
    bld: &mut Builder,
    m: &MachineSpec,
    (to, op_a, op_b): (StateId, CounterOp, CounterOp),
    regs: &dyn Fn(&str) -> usize,
) -> Result<StateId, TransformError> {
    if op_a == CounterOp::Noop && op_b == CounterOp::Noop {
        return Ok(to);
    }
    let sign = |op| match op {
        CounterOp::Inc => "+",
        CounterOp::Dec => "-",
        CounterOp::Noop => "",
    };
    let stem = format!("{}^{}{}", m.state_name(to), sign(op_a), sign(op_b));
    let sink = bld.sink();
    let mut stages: Vec<(CounterProgram, bool)> = Vec::new();
    if let Some(u) = update_of(op_a) {
        stages.push((update_program(1, u), false));
    }
    if let Some(u) = update_of(op_b) {
        stages.push((update_program(2, u), false));
        if u == Update::Inc {
            // i2 wrapped to zero: the increment reached p.
            stages.push((zero_test_program(), true));
        }
    }
    let entry = bld.state(&stem);
    let mut here = entry;
    for (i, (prog, check)) in stages.iter().enumerate() {
        let next = if i + 1 == stages.len() {
            to
        } else {
            bld.state(&format!("{stem}.{}", i + 1))
        };
        let route = |name: &str| match name {
            "ok" | END => next,
            "corrupt" => sink,
            zt if *check => match zt {
                "zz" | "nz" => sink,
                _ => next,
            },
            other => unreachable!("update exit {other}"),
        };
        bld.lower(
            prog,
            &format!("{stem}.{i}"),
            here,
            regs,
            &Exits {
                named: &route,
                accept: None,
                reject: None,
            },
        )?;
        here = next;
    }
    Ok(entry)
}
