//! Counter elimination under a ceiling on counter values.

use crate::machine::{CounterOp, MachineSpec, Provenance, StateId, TransitionRule};

/// Folds the counters into the finite control: the state set becomes
/// `Q × [0, r]^k`, named `q[v1,...,vk]`. A move that would lift a counter
/// above `r` enters a rejecting `overflow` state instead, which is added
/// only when some move needs it.
pub fn eliminate_counters(m: &MachineSpec, r: u32) -> MachineSpec {
    let k = m.counters;
    let base = r as usize + 1;
    let vectors = base.pow(k as u32);
    let nq = m.states.len();
    let encode = |q: StateId, v: &[u32]| -> StateId {
        let idx = v.iter().fold(0usize, |acc, &d| acc * base + d as usize);
        (q as usize * vectors + idx) as StateId
    };
    let decode = |mut idx: usize| -> Vec<u32> {
        let mut v = vec![0u32; k];
        for slot in v.iter_mut().rev() {
            *slot = (idx % base) as u32;
            idx /= base;
        }
        v
    };

    let mut states = Vec::with_capacity(nq * vectors + 1);
    for name in &m.states {
        for i in 0..vectors {
            if k == 0 {
                states.push(name.clone());
            } else {
                let v: Vec<String> = decode(i).iter().map(u32::to_string).collect();
                states.push(format!("{name}[{}]", v.join(",")));
            }
        }
    }
    let sink_name = {
        let mut s = "overflow".to_string();
        while states.contains(&s) {
            s.push('\'');
        }
        s
    };
    let sink = states.len() as StateId;
    let mut needs_sink = false;

    let mut transitions = Vec::new();
    for rule in &m.transitions {
        if m.is_halting(rule.from) {
            continue;
        }
        for i in 0..vectors {
            let v = decode(i);
            if !rule.guards.iter().zip(&v).all(|(g, &x)| g.admits(x)) {
                continue;
            }
            let mut w = v.clone();
            let mut overflow = false;
            for (x, op) in w.iter_mut().zip(&rule.counter_ops) {
                match op {
                    CounterOp::Inc if *x == r => overflow = true,
                    CounterOp::Inc => *x += 1,
                    CounterOp::Dec => *x -= 1,
                    CounterOp::Noop => {}
                }
            }
            let to = if overflow {
                needs_sink = true;
                sink
            } else {
                encode(rule.to, &w)
            };
            transitions.push(TransitionRule {
                from: encode(rule.from, &v),
                to,
                guards: Vec::new(),
                counter_ops: Vec::new(),
                ..rule.clone()
            });
        }
    }
    let mut rejecting: Vec<StateId> = Vec::new();
    let lift = |set: &[StateId], out: &mut Vec<StateId>| {
        for &q in set {
            out.extend((0..vectors).map(|i| (q as usize * vectors + i) as StateId));
        }
    };
    let mut accepting = Vec::new();
    lift(&m.accepting, &mut accepting);
    lift(&m.rejecting, &mut rejecting);
    if needs_sink {
        states.push(sink_name);
        rejecting.push(sink);
    }
    MachineSpec {
        name: format!("{}.flat{r}", m.name),
        mode: m.mode,
        states,
        alphabet: m.alphabet.clone(),
        counters: 0,
        stack: m.stack.clone(),
        initial: encode(m.initial, &vec![0; k]),
        accepting,
        rejecting,
        transitions,
        provenance: Some(Provenance {
            derived_from: m.name.clone(),
            transform: "eliminate_counters".into(),
            parameters: serde_json::json!({ "ceiling": r }),
        }),
    }
}
