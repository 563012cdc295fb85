use std::collections::BTreeSet;

use rustc_hash::FxHashMap;
use serde::Serialize;
use smallvec::SmallVec;

use super::{CounterOp, MachineSpec, StackOp, StateId, TapeSymbol, BOTTOM, LEFT_END, RIGHT_END};
use crate::error::MachineError;

pub type Counters = SmallVec<[u32; 6]>;
pub type Stack = SmallVec<[char; 8]>;

/// A node of the computation graph. The derived ordering is lexicographic
/// over (state, head, counters, stack).
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct Configuration {
    pub state: StateId,
    pub head: usize,
    pub counters: Counters,
    /// Bottom first; empty for machines without a stack.
    pub stack: Stack,
}

impl Configuration {
    pub fn initial(m: &MachineSpec) -> Self {
        let mut stack = Stack::new();
        if m.has_stack() {
            stack.push(BOTTOM);
        }
        Configuration {
            state: m.initial,
            head: 0,
            counters: SmallVec::from_elem(0, m.counters),
            stack,
        }
    }

    pub fn top(&self) -> Option<char> {
        self.stack.last().copied()
    }

    pub fn surface(&self) -> SurfaceView {
        SurfaceView {
            state: self.state,
            head: self.head,
            nonzero: self.counters.iter().map(|&v| v != 0).collect(),
            top: self.top(),
        }
    }

    /// Checks the configuration invariants against a machine and tape.
    pub fn is_valid_for(&self, m: &MachineSpec, tape: &Tape) -> bool {
        let stack_ok = if m.has_stack() {
            self.stack.first() == Some(&BOTTOM) && self.stack[1..].iter().all(|&c| c != BOTTOM)
        } else {
            self.stack.is_empty()
        };
        (self.state as usize) < m.states.len()
            && self.head < tape.len()
            && self.counters.len() == m.counters
            && stack_ok
    }

    pub fn render(&self, m: &MachineSpec) -> String {
        let counters: Vec<String> = self.counters.iter().map(u32::to_string).collect();
        let mut s = format!(
            "({}, {}, [{}]",
            m.state_name(self.state),
            self.head,
            counters.join(",")
        );
        if m.has_stack() {
            s.push_str(", ");
            s.extend(self.stack.iter());
        }
        s.push(')');
        s
    }
}

/// Projection of a configuration that keeps only zero tests and the stack top.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SurfaceView {
    pub state: StateId,
    pub head: usize,
    pub nonzero: SmallVec<[bool; 6]>,
    pub top: Option<char>,
}

/// The tape `▷ x ◁`, stored as indices into the machine's symbol table.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Tape {
    cells: Vec<u16>,
    symbols: Vec<TapeSymbol>,
}

impl Tape {
    pub fn new(m: &MachineSpec, x: &str) -> Result<Self, MachineError> {
        let symbols = m.tape_symbols();
        let mut cells = Vec::with_capacity(x.chars().count() + 2);
        cells.push(0);
        for c in x.chars() {
            let idx = m
                .alphabet
                .iter()
                .position(|&a| a == c)
                .ok_or(MachineError::InputSymbol(c))?;
            cells.push(idx as u16 + 2);
        }
        cells.push(1);
        Ok(Tape { cells, symbols })
    }

    /// Number of cells including both endmarkers.
    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Length of the input word.
    pub fn input_len(&self) -> usize {
        self.cells.len() - 2
    }

    pub fn symbol(&self, cell: usize) -> TapeSymbol {
        self.symbols[self.cells[cell] as usize]
    }

    fn index(&self, cell: usize) -> usize {
        self.cells[cell] as usize
    }
}

/// Rule lookup table for fast successor generation.
#[derive(Clone, Debug)]
pub struct Stepper<'m> {
    machine: &'m MachineSpec,
    nsym: usize,
    rules: Vec<Vec<usize>>,
    halting: Vec<bool>,
}

impl<'m> Stepper<'m> {
    pub fn new(machine: &'m MachineSpec) -> Self {
        let nsym = machine.alphabet.len() + 2;
        let sym_index: FxHashMap<char, usize> = machine
            .alphabet
            .iter()
            .enumerate()
            .map(|(i, &c)| (c, i + 2))
            .chain([(LEFT_END, 0), (RIGHT_END, 1)])
            .collect();
        let mut rules = vec![Vec::new(); machine.states.len() * nsym];
        for (i, r) in machine.transitions.iter().enumerate() {
            let s = sym_index[&r.read.as_char()];
            rules[r.from as usize * nsym + s].push(i);
        }
        let halting = (0..machine.states.len())
            .map(|q| machine.is_halting(q as StateId))
            .collect();
        Stepper {
            machine,
            nsym,
            rules,
            halting,
        }
    }

    pub fn machine(&self) -> &'m MachineSpec {
        self.machine
    }

    pub fn tape(&self, x: &str) -> Result<Tape, MachineError> {
        Tape::new(self.machine, x)
    }

    pub fn is_halting(&self, c: &Configuration) -> bool {
        self.halting[c.state as usize]
    }

    /// Indices of the rules applicable to `c`.
    pub fn applicable<'a>(
        &'a self,
        tape: &Tape,
        c: &'a Configuration,
    ) -> impl Iterator<Item = usize> + 'a {
        let bucket: &[usize] = if self.halting[c.state as usize] {
            &[]
        } else {
            &self.rules[c.state as usize * self.nsym + tape.index(c.head)]
        };
        let top = c.top();
        bucket.iter().copied().filter(move |&i| {
            let r = &self.machine.transitions[i];
            r.guards.iter().zip(&c.counters).all(|(g, &v)| g.admits(v))
                && r.stack_top.is_none_or(|t| Some(t) == top)
        })
    }

    /// Applies rule `i` to `c`. The rule must be applicable.
    pub fn apply(&self, c: &Configuration, i: usize) -> Configuration {
        let r = &self.machine.transitions[i];
        let mut counters = c.counters.clone();
        for (v, op) in counters.iter_mut().zip(&r.counter_ops) {
            match op {
                CounterOp::Inc => *v += 1,
                CounterOp::Dec => *v -= 1,
                CounterOp::Noop => {}
            }
        }
        let mut stack = c.stack.clone();
        match &r.stack_op {
            StackOp::None => {}
            StackOp::Pop => {
                stack.pop();
            }
            StackOp::Push(w) => stack.extend(w.iter().copied()),
        }
        Configuration {
            state: r.to,
            head: (c.head as i64 + r.movement.delta()) as usize,
            counters,
            stack,
        }
    }

    /// Appends the one-step successors of `c` to `out`, in rule order.
    pub fn successors_into(&self, tape: &Tape, c: &Configuration, out: &mut Vec<Configuration>) {
        for i in self.applicable(tape, c) {
            out.push(self.apply(c, i));
        }
    }

    pub fn successors(&self, tape: &Tape, c: &Configuration) -> Vec<Configuration> {
        let mut out = Vec::new();
        self.successors_into(tape, c, &mut out);
        out
    }
}

/// The set of one-step successors of `c` on input `x`.
pub fn step_relation(
    m: &MachineSpec,
    x: &str,
    c: &Configuration,
) -> Result<BTreeSet<Configuration>, MachineError> {
    let stepper = Stepper::new(m);
    let tape = stepper.tape(x)?;
    Ok(stepper.successors(&tape, c).into_iter().collect())
}
