//! Lowering of counter programs to transition rules.

use rustc_hash::FxHashMap;

use crate::counterprog::{CounterProgram, Op, END};
use crate::error::TransformError;
use crate::machine::{
    CounterOp, Guard, MachineSpec, Move, Provenance, StackOp, StateId, StateTable, TapeSymbol,
    TransitionRule, BOTTOM,
};

/// Accumulates states and rules for a derived machine.
pub(crate) struct Builder {
    table: StateTable,
    rules: Vec<TransitionRule>,
    k: usize,
    symbols: Vec<TapeSymbol>,
    gamma: Vec<char>,
    sink: Option<StateId>,
}

/// Where a program's exits lead.
pub(crate) struct Exits<'a> {
    pub named: &'a dyn Fn(&str) -> StateId,
    pub accept: Option<StateId>,
    pub reject: Option<StateId>,
}

enum Resolved {
    Op(usize),
    Halt(StateId),
}

impl Builder {
    pub fn new(names: &[String], m: &MachineSpec, k: usize, gamma: Vec<char>) -> Self {
        Builder {
            table: StateTable::from_names(names),
            rules: Vec::new(),
            k,
            symbols: m.tape_symbols(),
            gamma,
            sink: None,
        }
    }

    pub fn state(&mut self, name: &str) -> StateId {
        self.table.fresh(name)
    }

    /// The rejecting overflow state, created on first use.
    pub fn sink(&mut self) -> StateId {
        match self.sink {
            Some(s) => s,
            None => {
                let s = self.table.fresh("overflow");
                self.sink = Some(s);
                s
            }
        }
    }

    pub fn any(&self) -> Vec<Guard> {
        vec![Guard::Any; self.k]
    }

    pub fn noop(&self) -> Vec<CounterOp> {
        vec![CounterOp::Noop; self.k]
    }

    pub fn push_rule(&mut self, r: TransitionRule) {
        self.rules.push(r);
    }

    /// A stationary rule on every tape symbol.
    #[allow(clippy::too_many_arguments)]
    pub fn everywhere(
        &mut self,
        from: StateId,
        guards: &[Guard],
        top: Option<char>,
        to: StateId,
        ops: &[CounterOp],
        stack_op: StackOp,
    ) {
        for i in 0..self.symbols.len() {
            let read = self.symbols[i];
            self.rules.push(TransitionRule {
                from,
                read,
                guards: guards.to_vec(),
                stack_top: top,
                to,
                movement: Move::Stay,
                counter_ops: ops.to_vec(),
                stack_op: stack_op.clone(),
            });
        }
    }

    pub fn goto(&mut self, from: StateId, to: StateId) {
        let (g, o) = (self.any(), self.noop());
        self.everywhere(from, &g, None, to, &o, StackOp::None);
    }

    /// Stationary counter update `from → to` guarded as needed.
    pub fn bump(&mut self, from: StateId, reg: usize, op: CounterOp, to: StateId) {
        let mut g = self.any();
        let mut o = self.noop();
        if op == CounterOp::Dec {
            g[reg] = Guard::Nonzero;
        }
        o[reg] = op;
        self.everywhere(from, &g, None, to, &o, StackOp::None);
    }

    pub fn branch_zero(&mut self, from: StateId, reg: usize, zero: StateId, nonzero: StateId) {
        let o = self.noop();
        for (guard, to) in [(Guard::Zero, zero), (Guard::Nonzero, nonzero)] {
            let mut g = self.any();
            g[reg] = guard;
            self.everywhere(from, &g, None, to, &o, StackOp::None);
        }
    }

    /// Emits the rules of `prog` with its first instruction at `entry`.
    /// Registers are mapped through `regs`; `stem` prefixes fresh states.
    pub fn lower(
        &mut self,
        prog: &CounterProgram,
        stem: &str,
        entry: StateId,
        regs: &dyn Fn(&str) -> usize,
        exits: &Exits,
    ) -> Result<(), TransformError> {
        let c = prog.compile()?;
        let reg: Vec<usize> = c.registers.iter().map(|r| regs(r)).collect();
        let n = c.ops.len();
        let uses_stack = c
            .ops
            .iter()
            .any(|o| matches!(o, Op::Push(_) | Op::Pop(_) | Op::Top(..)));
        if uses_stack && self.gamma.is_empty() {
            return Err(TransformError::Precondition(
                "program uses a stack but the machine has none".into(),
            ));
        }
        let halt = |target: Option<StateId>, what: &str| {
            target.ok_or_else(|| TransformError::Precondition(format!("program {what}s")))
        };
        let resolve = |mut pc: usize, this: &mut Self| -> Result<Resolved, TransformError> {
            let mut hops = 0;
            loop {
                if pc >= n {
                    return Ok(Resolved::Halt((exits.named)(END)));
                }
                match &c.ops[pc] {
                    Op::Nop => pc += 1,
                    Op::Jump(t) => pc = *t,
                    Op::Exit(e) => return Ok(Resolved::Halt((exits.named)(&c.exits[*e]))),
                    Op::Accept => return Ok(Resolved::Halt(halt(exits.accept, "accept")?)),
                    Op::Reject => return Ok(Resolved::Halt(halt(exits.reject, "reject")?)),
                    _ => return Ok(Resolved::Op(pc)),
                }
                hops += 1;
                if hops > n {
                    // A jump-only cycle never moves: a state without rules.
                    return Ok(Resolved::Halt(this.state(&format!("{stem}.spin"))));
                }
            }
        };

        let mut state_of: FxHashMap<usize, StateId> = FxHashMap::default();
        let mut work = Vec::new();
        match resolve(0, self)? {
            Resolved::Halt(s) => {
                self.goto(entry, s);
                return Ok(());
            }
            Resolved::Op(pc) => {
                state_of.insert(pc, entry);
                work.push(pc);
            }
        }
        let mut target = |pc: usize, this: &mut Self, work: &mut Vec<usize>| {
            Ok::<_, TransformError>(match resolve(pc, this)? {
                Resolved::Halt(s) => s,
                Resolved::Op(p) => *state_of.entry(p).or_insert_with(|| {
                    work.push(p);
                    this.state(&format!("{stem}.{p}"))
                }),
            })
        };
        while let Some(pc) = work.pop() {
            let s = target(pc, self, &mut work)?;
            let next = target(pc + 1, self, &mut work)?;
            let (any, noop) = (self.any(), self.noop());
            match &c.ops[pc] {
                Op::Inc(r) => self.bump(s, reg[*r], CounterOp::Inc, next),
                Op::Dec(r) => self.bump(s, reg[*r], CounterOp::Dec, next),
                Op::Jz(r, t) => {
                    let t = target(*t, self, &mut work)?;
                    self.branch_zero(s, reg[*r], t, next);
                }
                Op::Left | Op::Right => {
                    let (blocked, movement) = if matches!(c.ops[pc], Op::Left) {
                        (TapeSymbol::LeftEnd, Move::Left)
                    } else {
                        (TapeSymbol::RightEnd, Move::Right)
                    };
                    for i in 0..self.symbols.len() {
                        let read = self.symbols[i];
                        if read != blocked {
                            self.rules.push(TransitionRule {
                                from: s,
                                read,
                                guards: any.clone(),
                                stack_top: None,
                                to: next,
                                movement,
                                counter_ops: noop.clone(),
                                stack_op: StackOp::None,
                            });
                        }
                    }
                }
                Op::Cell(sym, t) => {
                    let t = target(*t, self, &mut work)?;
                    for i in 0..self.symbols.len() {
                        let read = self.symbols[i];
                        self.rules.push(TransitionRule {
                            from: s,
                            read,
                            guards: any.clone(),
                            stack_top: None,
                            to: if read.as_char() == *sym { t } else { next },
                            movement: Move::Stay,
                            counter_ops: noop.clone(),
                            stack_op: StackOp::None,
                        });
                    }
                }
                Op::Choose(t) => {
                    let t = target(*t, self, &mut work)?;
                    self.goto(s, t);
                    self.goto(s, next);
                }
                Op::Push(sym) => {
                    if !self.gamma.contains(sym) || *sym == BOTTOM {
                        return Err(TransformError::Precondition(format!(
                            "program pushes undeclared stack symbol '{sym}'"
                        )));
                    }
                    self.everywhere(s, &any, None, next, &noop, StackOp::Push(vec![*sym]));
                }
                Op::Pop(guard) => {
                    for i in 0..self.gamma.len() {
                        let top = self.gamma[i];
                        if top != BOTTOM && Some(top) != *guard {
                            self.everywhere(s, &any, Some(top), next, &noop, StackOp::Pop);
                        }
                    }
                }
                Op::Top(sym, t) => {
                    let t = target(*t, self, &mut work)?;
                    for i in 0..self.gamma.len() {
                        let top = self.gamma[i];
                        let to = if top == *sym { t } else { next };
                        self.everywhere(s, &any, Some(top), to, &noop, StackOp::None);
                    }
                }
                Op::Nop | Op::Jump(_) | Op::Exit(_) | Op::Accept | Op::Reject => {
                    unreachable!("resolved away")
                }
            }
        }
        Ok(())
    }

    /// Assembles the machine; the sink, if any, is rejecting.
    pub fn finish(
        self,
        m: &MachineSpec,
        name: String,
        initial: StateId,
        accepting: Vec<StateId>,
        mut rejecting: Vec<StateId>,
        stack_alphabet: Option<Vec<char>>,
        provenance: Provenance,
    ) -> Result<MachineSpec, TransformError> {
        rejecting.extend(self.sink);
        let stack = m.stack.clone().map(|mut s| {
            if let Some(g) = stack_alphabet {
                s.alphabet = g;
            }
            s
        });
        let out = MachineSpec {
            name,
            mode: m.mode,
            states: self.table.into_names(),
            alphabet: m.alphabet.clone(),
            counters: self.k,
            stack,
            initial,
            accepting,
            rejecting,
            transitions: self.rules,
            provenance: Some(provenance),
        };
        out.validate()?;
        Ok(out)
    }
}
