//! A small register-machine IR over named counters, an input head and an
//! optional stack, plus the pairing procedures built from it.

use std::collections::{BTreeMap, BTreeSet};

use rustc_hash::FxHashMap;
use serde::{Deserialize, Serialize};

use crate::error::ProgramError;
use crate::machine::{LEFT_END, RIGHT_END};

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case")]
pub enum Instr {
    Inc {
        reg: String,
    },
    Dec {
        reg: String,
    },
    JumpIfZero {
        reg: String,
        label: String,
    },
    Jump {
        label: String,
    },
    Label {
        name: String,
    },
    HeadLeft,
    HeadRight,
    JumpIfCell {
        symbol: char,
        label: String,
    },
    /// Nondeterministically either jumps or falls through.
    Choose {
        label: String,
    },
    Accept,
    Reject,
    /// Leaves the program through a named exit.
    Exit {
        name: String,
    },
    Push {
        symbol: char,
    },
    /// Pops; fails on an empty stack or when the top is `guard`.
    Pop {
        guard: Option<char>,
    },
    JumpIfTop {
        symbol: char,
        label: String,
    },
}

/// A program is an instruction list; falling off the end is the exit `"end"`.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct CounterProgram {
    pub code: Vec<Instr>,
}

pub const END: &str = "end";

/// Helper for emitting code with unique labels.
#[derive(Debug, Default)]
pub struct Emitter {
    code: Vec<Instr>,
    next: usize,
}

impl Emitter {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn fresh(&mut self, stem: &str) -> String {
        self.next += 1;
        format!("{stem}.{}", self.next)
    }

    pub fn inc(&mut self, reg: &str) {
        self.code.push(Instr::Inc { reg: reg.into() });
    }

    pub fn dec(&mut self, reg: &str) {
        self.code.push(Instr::Dec { reg: reg.into() });
    }

    pub fn jz(&mut self, reg: &str, label: &str) {
        self.code.push(Instr::JumpIfZero {
            reg: reg.into(),
            label: label.into(),
        });
    }

    pub fn jump(&mut self, label: &str) {
        self.code.push(Instr::Jump {
            label: label.into(),
        });
    }

    pub fn label(&mut self, name: &str) {
        self.code.push(Instr::Label { name: name.into() });
    }

    pub fn exit(&mut self, name: &str) {
        self.code.push(Instr::Exit { name: name.into() });
    }

    pub fn push(&mut self, instr: Instr) {
        self.code.push(instr);
    }

    /// `while reg > 0 { reg -= 1; to += 1 for each to }`.
    pub fn transfer(&mut self, from: &str, to: &[&str]) {
        let top = self.fresh("mv");
        let done = self.fresh("mv_done");
        self.label(&top);
        self.jz(from, &done);
        self.dec(from);
        for t in to {
            self.inc(t);
        }
        self.jump(&top);
        self.label(&done);
    }

    /// Empties a register.
    pub fn clear(&mut self, reg: &str) {
        self.transfer(reg, &[]);
    }

    pub fn finish(self) -> CounterProgram {
        CounterProgram { code: self.code }
    }
}

#[derive(Clone, Debug)]
pub(crate) enum Op {
    Inc(usize),
    Dec(usize),
    Jz(usize, usize),
    Jump(usize),
    Nop,
    Left,
    Right,
    Cell(char, usize),
    Choose(usize),
    Accept,
    Reject,
    Exit(usize),
    Push(char),
    Pop(Option<char>),
    Top(char, usize),
}

/// A program with labels and registers resolved to indices.
#[derive(Clone, Debug)]
pub struct Compiled {
    pub registers: Vec<String>,
    pub exits: Vec<String>,
    pub(crate) ops: Vec<Op>,
}

impl CounterProgram {
    pub fn registers(&self) -> Vec<String> {
        let mut seen = BTreeSet::new();
        let mut out = Vec::new();
        for i in &self.code {
            if let Instr::Inc { reg } | Instr::Dec { reg } | Instr::JumpIfZero { reg, .. } = i {
                if seen.insert(reg.clone()) {
                    out.push(reg.clone());
                }
            }
        }
        out
    }

    /// Resolves labels and checks that every decrement is preceded, on every
    /// path, by a test showing the register nonzero.
    pub fn compile(&self) -> Result<Compiled, ProgramError> {
        let registers = self.registers();
        let reg_index: FxHashMap<&str, usize> = registers
            .iter()
            .enumerate()
            .map(|(i, r)| (r.as_str(), i))
            .collect();
        let mut labels: FxHashMap<&str, usize> = FxHashMap::default();
        for (pc, i) in self.code.iter().enumerate() {
            if let Instr::Label { name } = i {
                if labels.insert(name, pc).is_some() {
                    return Err(ProgramError::DuplicateLabel(name.clone()));
                }
            }
        }
        let target = |l: &String| {
            labels
                .get(l.as_str())
                .copied()
                .ok_or_else(|| ProgramError::UnresolvedLabel(l.clone()))
        };
        let mut exits: Vec<String> = vec![END.to_string()];
        let mut ops = Vec::with_capacity(self.code.len());
        for i in &self.code {
            ops.push(match i {
                Instr::Inc { reg } => Op::Inc(reg_index[reg.as_str()]),
                Instr::Dec { reg } => Op::Dec(reg_index[reg.as_str()]),
                Instr::JumpIfZero { reg, label } => Op::Jz(reg_index[reg.as_str()], target(label)?),
                Instr::Jump { label } => Op::Jump(target(label)?),
                Instr::Label { .. } => Op::Nop,
                Instr::HeadLeft => Op::Left,
                Instr::HeadRight => Op::Right,
                Instr::JumpIfCell { symbol, label } => Op::Cell(*symbol, target(label)?),
                Instr::Choose { label } => Op::Choose(target(label)?),
                Instr::Accept => Op::Accept,
                Instr::Reject => Op::Reject,
                Instr::Exit { name } => Op::Exit(match exits.iter().position(|e| e == name) {
                    Some(k) => k,
                    None => {
                        exits.push(name.clone());
                        exits.len() - 1
                    }
                }),
                Instr::Push { symbol } => Op::Push(*symbol),
                Instr::Pop { guard } => Op::Pop(*guard),
                Instr::JumpIfTop { symbol, label } => Op::Top(*symbol, target(label)?),
            });
        }
        let compiled = Compiled {
            registers,
            exits,
            ops,
        };
        compiled.check_guards()?;
        Ok(compiled)
    }
}

impl Compiled {
    pub fn len(&self) -> usize {
        self.ops.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ops.is_empty()
    }

    /// Forward must-analysis of registers known to be nonzero.
    fn check_guards(&self) -> Result<(), ProgramError> {
        let n = self.ops.len();
        if n == 0 {
            return Ok(());
        }
        let full: u128 = if self.registers.len() >= 128 {
            u128::MAX
        } else {
            (1u128 << self.registers.len()) - 1
        };
        let mut facts: Vec<Option<u128>> = vec![None; n + 1];
        facts[0] = Some(0);
        let mut work = vec![0usize];
        let meet = |slot: &mut Option<u128>, v: u128| -> bool {
            let new = slot.map_or(v, |old| old & v);
            let changed = *slot != Some(new);
            *slot = Some(new);
            changed
        };
        while let Some(pc) = work.pop() {
            if pc >= n {
                continue;
            }
            let s = facts[pc].unwrap();
            let mut out: Vec<(usize, u128)> = Vec::with_capacity(2);
            match &self.ops[pc] {
                Op::Inc(r) => out.push((pc + 1, s | 1 << r)),
                Op::Dec(r) => {
                    if s & (1 << r) == 0 {
                        return Err(ProgramError::UnguardedDecrement {
                            index: pc,
                            register: self.registers[*r].clone(),
                        });
                    }
                    out.push((pc + 1, s & !(1 << r) & full));
                }
                Op::Jz(r, t) => {
                    out.push((*t, s & !(1 << r)));
                    out.push((pc + 1, s | 1 << r));
                }
                Op::Jump(t) => out.push((*t, s)),
                Op::Cell(_, t) | Op::Choose(t) | Op::Top(_, t) => {
                    out.push((*t, s));
                    out.push((pc + 1, s));
                }
                Op::Accept | Op::Reject | Op::Exit(_) => {}
                Op::Nop | Op::Left | Op::Right | Op::Push(_) | Op::Pop(_) => out.push((pc + 1, s)),
            }
            for (t, v) in out {
                if meet(&mut facts[t], v) {
                    work.push(t);
                }
            }
        }
        Ok(())
    }
}

/// Register valuation, input tape and stack.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct CounterEnv {
    pub registers: BTreeMap<String, u64>,
    pub head: usize,
    /// `▷ x ◁`.
    pub tape: Vec<char>,
    pub stack: Vec<char>,
}

impl CounterEnv {
    pub fn new(x: &str) -> Self {
        let mut tape = vec![LEFT_END];
        tape.extend(x.chars());
        tape.push(RIGHT_END);
        CounterEnv {
            registers: BTreeMap::new(),
            head: 0,
            tape,
            stack: Vec::new(),
        }
    }

    pub fn with(mut self, reg: &str, value: u64) -> Self {
        self.registers.insert(reg.to_string(), value);
        self
    }

    pub fn get(&self, reg: &str) -> u64 {
        self.registers.get(reg).copied().unwrap_or(0)
    }

    pub fn input_len(&self) -> usize {
        self.tape.len() - 2
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "outcome", content = "exit", rename_all = "lowercase")]
pub enum Outcome {
    Exit(String),
    Accept,
    Reject,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct AuditReport {
    /// Registers touched by at least one executed instruction.
    pub registers_touched: Vec<String>,
    pub nonempty_at_exit: Vec<String>,
    pub instructions: u64,
    /// Largest stack height reached.
    pub max_stack: usize,
}

impl AuditReport {
    pub fn max_counters(&self) -> usize {
        self.registers_touched.len()
    }
}

struct Machine<'a> {
    prog: &'a Compiled,
    regs: Vec<u64>,
    touched: Vec<bool>,
}

impl<'a> Machine<'a> {
    fn load(prog: &'a Compiled, env: &CounterEnv) -> Self {
        Machine {
            regs: prog.registers.iter().map(|r| env.get(r)).collect(),
            touched: vec![false; prog.registers.len()],
            prog,
        }
    }

    fn store(&self, env: &mut CounterEnv) {
        for (r, &v) in self.prog.registers.iter().zip(&self.regs) {
            env.registers.insert(r.clone(), v);
        }
    }
}

fn finish_audit(
    prog: &Compiled,
    m: &Machine,
    env: &CounterEnv,
    instructions: u64,
    max_stack: usize,
) -> AuditReport {
    AuditReport {
        registers_touched: prog
            .registers
            .iter()
            .zip(&m.touched)
            .filter(|(_, &t)| t)
            .map(|(r, _)| r.clone())
            .collect(),
        nonempty_at_exit: env
            .registers
            .iter()
            .filter(|(_, &v)| v > 0)
            .map(|(r, _)| r.clone())
            .collect(),
        instructions,
        max_stack,
    }
}

/// One small step. Returns `Ok(Some(outcome))` when the program stops.
fn step(
    m: &mut Machine,
    env: &mut CounterEnv,
    pc: &mut usize,
    choice: Option<bool>,
) -> Result<Option<Outcome>, ProgramError> {
    let prog = m.prog;
    if *pc >= prog.ops.len() {
        return Ok(Some(Outcome::Exit(END.into())));
    }
    let here = *pc;
    *pc += 1;
    match &prog.ops[here] {
        Op::Inc(r) => {
            m.regs[*r] += 1;
            m.touched[*r] = true;
        }
        Op::Dec(r) => {
            m.touched[*r] = true;
            if m.regs[*r] == 0 {
                return Err(ProgramError::DecrementAtZero {
                    index: here,
                    register: prog.registers[*r].clone(),
                });
            }
            m.regs[*r] -= 1;
        }
        Op::Jz(r, t) => {
            m.touched[*r] = true;
            if m.regs[*r] == 0 {
                *pc = *t;
            }
        }
        Op::Jump(t) => *pc = *t,
        Op::Nop => {}
        Op::Left => {
            if env.head == 0 {
                return Err(ProgramError::HeadOutOfRange { index: here });
            }
            env.head -= 1;
        }
        Op::Right => {
            if env.head + 1 >= env.tape.len() {
                return Err(ProgramError::HeadOutOfRange { index: here });
            }
            env.head += 1;
        }
        Op::Cell(c, t) => {
            if env.tape[env.head] == *c {
                *pc = *t;
            }
        }
        Op::Choose(t) => match choice {
            Some(true) => *pc = *t,
            Some(false) => {}
            None => return Err(ProgramError::UnexpectedChoice { index: here }),
        },
        Op::Accept => return Ok(Some(Outcome::Accept)),
        Op::Reject => return Ok(Some(Outcome::Reject)),
        Op::Exit(k) => return Ok(Some(Outcome::Exit(prog.exits[*k].clone()))),
        Op::Push(c) => env.stack.push(*c),
        Op::Pop(guard) => match env.stack.last() {
            None => {
                return Err(ProgramError::Stack {
                    index: here,
                    reason: "pop from an empty stack".into(),
                })
            }
            Some(t) if Some(*t) == *guard => {
                return Err(ProgramError::Stack {
                    index: here,
                    reason: format!("pop below separator '{t}'"),
                })
            }
            Some(_) => {
                env.stack.pop();
            }
        },
        Op::Top(c, t) => {
            if env.stack.last() == Some(c) {
                *pc = *t;
            }
        }
    }
    Ok(None)
}

/// Runs a deterministic program to completion.
pub fn run_counter_program(
    prog: &CounterProgram,
    env: &CounterEnv,
    budget: u64,
) -> Result<(CounterEnv, Outcome, AuditReport), ProgramError> {
    let compiled = prog.compile()?;
    run_compiled(&compiled, env, budget)
}

pub fn run_compiled(
    prog: &Compiled,
    env: &CounterEnv,
    budget: u64,
) -> Result<(CounterEnv, Outcome, AuditReport), ProgramError> {
    let mut env = env.clone();
    let mut m = Machine::load(prog, &env);
    let mut pc = 0usize;
    let mut count = 0u64;
    let mut max_stack = env.stack.len();
    loop {
        if let Some(outcome) = step(&mut m, &mut env, &mut pc, None)? {
            m.store(&mut env);
            let audit = finish_audit(prog, &m, &env, count, max_stack);
            return Ok((env, outcome, audit));
        }
        count += 1;
        max_stack = max_stack.max(env.stack.len());
        if count > budget {
            return Err(ProgramError::Budget(budget));
        }
    }
}

/// Explores every resolution of the `Choose` instructions. Runs that hit a
/// guard violation are dropped; the budget bounds the total number of steps.
pub fn run_exhaustive(
    prog: &CounterProgram,
    env: &CounterEnv,
    budget: u64,
) -> Result<Vec<(CounterEnv, Outcome)>, ProgramError> {
    let compiled = prog.compile()?;
    let mut results = Vec::new();
    let mut pending = vec![(0usize, env.clone())];
    let mut total = 0u64;
    while let Some((mut pc, mut env)) = pending.pop() {
        let mut m = Machine::load(&compiled, &env);
        loop {
            total += 1;
            if total > budget {
                return Err(ProgramError::Budget(budget));
            }
            if let Some(Op::Choose(t)) = compiled.ops.get(pc) {
                m.store(&mut env);
                pending.push((*t, env.clone()));
                pc += 1;
                continue;
            }
            match step(&mut m, &mut env, &mut pc, Some(false)) {
                Ok(Some(outcome)) => {
                    m.store(&mut env);
                    results.push((env, outcome));
                    break;
                }
                Ok(None) => {}
                Err(_) => break,
            }
        }
    }
    Ok(results)
}

pub fn pair_encode(i1: u64, i2: u64, p: u64) -> Result<u64, ProgramError> {
    for c in [i1, i2] {
        if c >= p {
            return Err(ProgramError::PairRange {
                component: c,
                modulus: p,
            });
        }
    }
    Ok(i1 * p + i2)
}

pub fn pair_decode(v: u64, p: u64) -> Result<(u64, u64), ProgramError> {
    if p == 0 || v >= p.saturating_mul(p) {
        return Err(ProgramError::PairRange {
            component: v,
            modulus: p,
        });
    }
    Ok((v / p, v % p))
}

/// Register names used by the pairing procedures.
pub const CT1: &str = "CT1";
pub const CT2: &str = "CT2";
pub const CT3: &str = "CT3";
pub const CT4: &str = "CT4";

fn sweep_counting(e: &mut Emitter, n: usize, targets: &[&str]) {
    // From ▷: n sweeps to ◁ and back, bumping each target once per input cell.
    for _ in 0..n {
        let right = e.fresh("sweep_r");
        let left = e.fresh("sweep_l");
        let back = e.fresh("sweep_back");
        let home = e.fresh("sweep_home");
        e.push(Instr::HeadRight);
        e.label(&right);
        e.push(Instr::JumpIfCell {
            symbol: RIGHT_END,
            label: back.clone(),
        });
        for t in targets {
            e.inc(t);
        }
        e.push(Instr::HeadRight);
        e.jump(&right);
        e.label(&back);
        e.label(&left);
        e.push(Instr::JumpIfCell {
            symbol: LEFT_END,
            label: home.clone(),
        });
        e.push(Instr::HeadLeft);
        e.jump(&left);
        e.label(&home);
    }
}

/// Procedure (a): leaves `(n·|x|)^t` in CT2, restores the head, and empties
/// CT1 and CT4.
pub fn produce_p_program(n: usize, t: u32) -> CounterProgram {
    assert!(t >= 1, "exponent must be positive");
    let mut e = Emitter::new();
    // Save the head position in CT4 while walking to ▷.
    let save = e.fresh("save");
    let saved = e.fresh("saved");
    e.label(&save);
    e.push(Instr::JumpIfCell {
        symbol: LEFT_END,
        label: saved.clone(),
    });
    e.push(Instr::HeadLeft);
    e.inc(CT4);
    e.jump(&save);
    e.label(&saved);
    e.clear(CT1);
    e.clear(CT2);
    // (i) n·|x| in CT1.
    sweep_counting(&mut e, n, &[CT1]);
    if t == 1 {
        e.transfer(CT1, &[CT2]);
    }
    for round in 1..t {
        if round > 1 {
            e.transfer(CT2, &[CT1]);
        }
        // (ii)-(iii) CT2 += n·|x| once per unit of CT1.
        let top = e.fresh("mul");
        let done = e.fresh("mul_done");
        e.label(&top);
        e.jz(CT1, &done);
        sweep_counting(&mut e, n, &[CT2]);
        e.dec(CT1);
        e.jump(&top);
        e.label(&done);
    }
    // (iv) Return the head by emptying CT4.
    let back = e.fresh("restore");
    let done = e.fresh("restored");
    e.label(&back);
    e.jz(CT4, &done);
    e.dec(CT4);
    e.push(Instr::HeadRight);
    e.jump(&back);
    e.label(&done);
    e.finish()
}

pub fn proc_produce_p(
    n: usize,
    x: &str,
    t: u32,
) -> Result<(CounterEnv, AuditReport), ProgramError> {
    let env = CounterEnv::new(x);
    let (env, _, audit) = run_counter_program(&produce_p_program(n, t), &env, u64::MAX)?;
    Ok((env, audit))
}

/// Exit names of the zero test, as `(i1 = 0, i2 = 0)`.
pub const ZERO_EXITS: [(&str, bool, bool); 4] = [
    ("zz", true, true),
    ("zn", true, false),
    ("nz", false, true),
    ("nn", false, false),
];

pub fn exit_flags(name: &str) -> Option<(bool, bool)> {
    ZERO_EXITS
        .iter()
        .find(|(n, _, _)| *n == name)
        .map(|&(_, a, b)| (a, b))
}

/// Procedure (b): with `CT2 = p` and `CT3 = ⟨i1,i2⟩_p`, leaves through the
/// exit naming which components are zero, with CT2 and CT3 restored and CT1,
/// CT4 empty. `ct4` names the register playing CT4.
pub fn zero_test_program_with(ct4: &str) -> CounterProgram {
    let mut e = Emitter::new();
    e.jz(CT3, "exit_zz");
    let round = |e: &mut Emitter, stem: &str, full: &str, part: &str| {
        e.label(stem);
        e.jz(CT2, full);
        e.jz(CT3, part);
        e.dec(CT2);
        e.dec(CT3);
        e.inc(CT1);
        e.inc(ct4);
        e.jump(stem);
    };
    // First round: running out of CT3 here means i1 = 0.
    round(&mut e, "first", "first_full", "first_part");
    e.label("first_full");
    e.transfer(CT1, &[CT2]);
    round(&mut e, "later", "later_full", "later_part");
    e.label("later_full");
    e.transfer(CT1, &[CT2]);
    e.jump("later");

    let restore = |e: &mut Emitter, exit: &str| {
        e.transfer(CT1, &[CT2]);
        e.transfer(ct4, &[CT3]);
        e.exit(exit);
    };
    e.label("first_part");
    restore(&mut e, "zn");
    e.label("later_part");
    e.jz(CT1, "later_part_zero");
    restore(&mut e, "nn");
    e.label("later_part_zero");
    restore(&mut e, "nz");
    e.label("exit_zz");
    e.exit("zz");
    e.finish()
}

pub fn zero_test_program() -> CounterProgram {
    zero_test_program_with(CT4)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Update {
    Inc,
    Dec,
}

/// Procedure (c) for component `j ∈ {1, 2}`. Leaves through `"ok"`, or
/// through `"corrupt"` if a decrement finds CT3 empty.
pub fn update_program(j: u8, op: Update) -> CounterProgram {
    assert!(j == 1 || j == 2, "component must be 1 or 2");
    let mut e = Emitter::new();
    match (j, op) {
        (1, Update::Inc) => {
            e.transfer(CT2, &[CT3, CT1]);
            e.transfer(CT1, &[CT2]);
        }
        (2, Update::Inc) => e.inc(CT3),
        (1, Update::Dec) => {
            let top = e.fresh("sub");
            let done = e.fresh("sub_done");
            e.label(&top);
            e.jz(CT2, &done);
            e.jz(CT3, "corrupt");
            e.dec(CT2);
            e.dec(CT3);
            e.inc(CT1);
            e.jump(&top);
            e.label(&done);
            e.transfer(CT1, &[CT2]);
        }
        _ => {
            e.jz(CT3, "corrupt");
            e.dec(CT3);
        }
    }
    e.exit("ok");
    e.label("corrupt");
    e.exit("corrupt");
    e.finish()
}

/// Runs procedure (b) on `CT3 = ⟨i1,i2⟩_p`.
pub fn proc_zero_test(
    i1: u64,
    i2: u64,
    p: u64,
) -> Result<((bool, bool), CounterEnv), ProgramError> {
    let v = pair_encode(i1, i2, p)?;
    let env = CounterEnv::new("").with(CT2, p).with(CT3, v);
    let (env, outcome, _) = run_counter_program(&zero_test_program(), &env, u64::MAX)?;
    match outcome {
        Outcome::Exit(name) => Ok((exit_flags(&name).expect("zero test exit"), env)),
        other => unreachable!("zero test ended with {other:?}"),
    }
}

/// Runs procedure (c) on `CT3 = ⟨i1,i2⟩_p`, returning the new CT3.
pub fn proc_update(
    i1: u64,
    i2: u64,
    p: u64,
    j: u8,
    op: Update,
) -> Result<(u64, CounterEnv), ProgramError> {
    let v = pair_encode(i1, i2, p)?;
    let target = if j == 1 { i1 } else { i2 };
    match op {
        Update::Dec if target == 0 => return Err(ProgramError::PairUnderflow),
        Update::Inc if target + 1 >= p => {
            return Err(ProgramError::PairRange {
                component: target + 1,
                modulus: p,
            })
        }
        _ => {}
    }
    let env = CounterEnv::new("").with(CT2, p).with(CT3, v);
    let (env, outcome, _) = run_counter_program(&update_program(j, op), &env, u64::MAX)?;
    assert_eq!(outcome, Outcome::Exit("ok".into()));
    Ok((env.get(CT3), env))
}

pub const SEPARATOR: char = '#';
pub const UNIT: char = '1';

/// Procedure (d): rewrites every use of `reg` into stack operations above a
/// separator pushed on entry. The separator is popped again at every exit.
pub fn stack_as_counter(prog: &CounterProgram, reg: &str) -> CounterProgram {
    stack_as_counter_with(prog, reg, SEPARATOR, UNIT)
}

/// As [`stack_as_counter`] with explicit separator and unit symbols.
pub fn stack_as_counter_with(
    prog: &CounterProgram,
    reg: &str,
    separator: char,
    unit: char,
) -> CounterProgram {
    let mut code = vec![Instr::Push { symbol: separator }];
    let mut k = 0usize;
    let tail = Instr::Exit { name: END.into() };
    for i in prog.code.iter().chain(std::iter::once(&tail)) {
        match i {
            Instr::Inc { reg: r } if r == reg => code.push(Instr::Push { symbol: unit }),
            Instr::Dec { reg: r } if r == reg => code.push(Instr::Pop {
                guard: Some(separator),
            }),
            Instr::JumpIfZero { reg: r, label } if r == reg => code.push(Instr::JumpIfTop {
                symbol: separator,
                label: label.clone(),
            }),
            Instr::Exit { .. } | Instr::Accept | Instr::Reject => {
                k += 1;
                let top = format!("{reg}.drain.{k}");
                let done = format!("{reg}.drained.{k}");
                code.push(Instr::Label { name: top.clone() });
                code.push(Instr::JumpIfTop {
                    symbol: separator,
                    label: done.clone(),
                });
                code.push(Instr::Pop {
                    guard: Some(separator),
                });
                code.push(Instr::Jump { label: top });
                code.push(Instr::Label { name: done });
                code.push(Instr::Pop { guard: None });
                code.push(i.clone());
            }
            other => code.push(other.clone()),
        }
    }
    CounterProgram { code }
}

/// One operation on a single counter.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CounterCall {
    Inc,
    Dec,
    Zero,
}

/// Builds a program applying `ops` to register `reg`. Zero tests record
/// their result by incrementing `zero_hits` or `nonzero_hits`.
pub fn counter_script(ops: &[CounterCall], reg: &str) -> CounterProgram {
    let mut e = Emitter::new();
    for op in ops {
        match op {
            CounterCall::Inc => e.inc(reg),
            CounterCall::Dec => {
                e.jz(reg, "underflow");
                e.dec(reg);
            }
            CounterCall::Zero => {
                let z = e.fresh("z");
                let done = e.fresh("zdone");
                e.jz(reg, &z);
                e.inc("nonzero_hits");
                e.jump(&done);
                e.label(&z);
                e.inc("zero_hits");
                e.label(&done);
            }
        }
    }
    e.exit(END);
    e.label("underflow");
    e.exit("underflow");
    e.finish()
}

/// Runs `ops` on a stack-backed counter, returning the units above the
/// separator just before the exit and the zero-test results.
pub fn proc_stack_as_counter(ops: &[CounterCall]) -> Result<StackCounterRun, ProgramError> {
    let reg = "S";
    let script = counter_script(ops, reg);
    let mut code = stack_as_counter(&script, reg).code;
    // Record the depth before the exit drains it.
    for (i, instr) in code.iter().enumerate() {
        if let Instr::Label { name } = instr {
            if name.starts_with("S.drain.") {
                code.insert(
                    i,
                    Instr::Label {
                        name: "probe".into(),
                    },
                );
                break;
            }
        }
    }
    let prog = CounterProgram { code };
    let env = CounterEnv::new("");
    // Replay step by step to observe the height at the probe.
    let compiled = prog.compile()?;
    let mut depth_at_exit = None;
    let mut m = Machine::load(&compiled, &env);
    let mut env = env;
    let mut pc = 0usize;
    let mut separators_balanced = true;
    loop {
        if let Some(Instr::Label { name }) = prog.code.get(pc) {
            if name == "probe" && depth_at_exit.is_none() {
                depth_at_exit = Some(env.stack.iter().rev().take_while(|&&c| c == UNIT).count());
            }
        }
        match step(&mut m, &mut env, &mut pc, None)? {
            Some(outcome) => {
                m.store(&mut env);
                separators_balanced &= env.stack.is_empty();
                return Ok(StackCounterRun {
                    outcome,
                    depth: depth_at_exit.unwrap_or(0) as u64,
                    zero_hits: env.get("zero_hits"),
                    nonzero_hits: env.get("nonzero_hits"),
                    stack_restored: separators_balanced,
                });
            }
            None => {
                separators_balanced &= env.stack.iter().filter(|&&c| c == SEPARATOR).count() <= 1;
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct StackCounterRun {
    pub outcome: Outcome,
    pub depth: u64,
    pub zero_hits: u64,
    pub nonzero_hits: u64,
    /// The separator count never exceeded one and the stack ended empty.
    pub stack_restored: bool,
}

/// Simulates two counters in one encoded counter plus scratch, one operation
/// at a time: each step runs the zero test, then the update.
#[derive(Clone, Debug)]
pub struct PairedCounters {
    env: CounterEnv,
    zero: Compiled,
    updates: FxHashMap<(u8, Update), Compiled>,
    pub audit: AuditReport,
}

impl PairedCounters {
    /// With `use_stack`, the stack stands in for CT4.
    pub fn new(p: u64, use_stack: bool) -> Result<Self, ProgramError> {
        let wrap = |prog: CounterProgram| {
            if use_stack {
                stack_as_counter(&prog, CT4)
            } else {
                prog
            }
        };
        let zero = wrap(zero_test_program()).compile()?;
        let mut updates = FxHashMap::default();
        for j in [1u8, 2] {
            for op in [Update::Inc, Update::Dec] {
                updates.insert((j, op), wrap(update_program(j, op)).compile()?);
            }
        }
        Ok(PairedCounters {
            env: CounterEnv::new("").with(CT2, p),
            zero,
            updates,
            audit: AuditReport::default(),
        })
    }

    fn absorb(&mut self, audit: AuditReport) {
        let mut touched: BTreeSet<String> = self.audit.registers_touched.drain(..).collect();
        touched.extend(audit.registers_touched);
        self.audit.registers_touched = touched.into_iter().collect();
        self.audit.nonempty_at_exit = audit.nonempty_at_exit;
        self.audit.instructions += audit.instructions;
        self.audit.max_stack = self.audit.max_stack.max(audit.max_stack);
    }

    pub fn zero_flags(&mut self) -> Result<(bool, bool), ProgramError> {
        let (env, outcome, audit) = run_compiled(&self.zero, &self.env, u64::MAX)?;
        self.env = env;
        self.absorb(audit);
        match outcome {
            Outcome::Exit(name) => Ok(exit_flags(&name).expect("zero test exit")),
            other => unreachable!("zero test ended with {other:?}"),
        }
    }

    pub fn apply(&mut self, j: u8, op: Update) -> Result<(), ProgramError> {
        let (z1, z2) = self.zero_flags()?;
        let zero = if j == 1 { z1 } else { z2 };
        if op == Update::Dec && zero {
            return Err(ProgramError::PairUnderflow);
        }
        let prog = &self.updates[&(j, op)];
        let (env, outcome, audit) = run_compiled(prog, &self.env, u64::MAX)?;
        if outcome != Outcome::Exit("ok".into()) {
            return Err(ProgramError::PairUnderflow);
        }
        self.env = env;
        self.absorb(audit);
        Ok(())
    }

    pub fn encoded(&self) -> u64 {
        self.env.get(CT3)
    }

    pub fn env(&self) -> &CounterEnv {
        &self.env
    }

    /// True when every scratch register other than CT2 is empty and the
    /// stack is back to its initial height.
    pub fn scratch_clean(&self) -> bool {
        self.env.get(CT1) == 0 && self.env.get(CT4) == 0 && self.env.stack.is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pairing_examples() {
        assert_eq!(pair_encode(2, 3, 10).unwrap(), 23);
        assert_eq!(pair_encode(0, 0, 7).unwrap(), 0);
        assert_eq!(pair_decode(30, 10).unwrap(), (3, 0));
        assert!(pair_encode(10, 0, 10).is_err());
        assert!(pair_decode(100, 10).is_err());
    }

    #[test]
    fn produce_p_examples() {
        let (env, audit) = proc_produce_p(2, "abc", 1).unwrap();
        assert_eq!(env.get(CT2), 6);
        let (env2, audit2) = proc_produce_p(2, "abc", 2).unwrap();
        assert_eq!(env2.get(CT2), 36);
        assert_eq!(env2.get(CT1) + env2.get(CT4), 0);
        assert!(audit2.instructions > audit.instructions);
    }

    #[test]
    fn head_restored() {
        let mut env = CounterEnv::new("abcd");
        env.head = 3;
        let (out, _, _) = run_counter_program(&produce_p_program(1, 2), &env, u64::MAX).unwrap();
        assert_eq!(out.head, 3);
        assert_eq!(out.get(CT2), 16);
    }

    #[test]
    fn zero_test_examples() {
        assert_eq!(proc_zero_test(0, 0, 10).unwrap().0, (true, true));
        assert_eq!(proc_zero_test(0, 5, 10).unwrap().0, (true, false));
        assert_eq!(proc_zero_test(3, 0, 10).unwrap().0, (false, true));
        let (flags, env) = proc_zero_test(2, 3, 10).unwrap();
        assert_eq!(flags, (false, false));
        assert_eq!(env.get(CT3), 23);
        assert_eq!(env.get(CT2), 10);
    }

    #[test]
    fn update_examples() {
        assert_eq!(proc_update(2, 3, 10, 1, Update::Inc).unwrap().0, 33);
        assert_eq!(proc_update(2, 3, 10, 2, Update::Dec).unwrap().0, 22);
        assert_eq!(
            proc_update(0, 3, 10, 1, Update::Dec).unwrap_err(),
            ProgramError::PairUnderflow
        );
    }

    #[test]
    fn unguarded_decrement_rejected() {
        let prog = CounterProgram {
            code: vec![Instr::Dec { reg: "a".into() }],
        };
        assert!(matches!(
            prog.compile(),
            Err(ProgramError::UnguardedDecrement { index: 0, .. })
        ));
    }

    #[test]
    fn unresolved_label() {
        let prog = CounterProgram {
            code: vec![Instr::Jump {
                label: "nowhere".into(),
            }],
        };
        assert_eq!(
            prog.compile().unwrap_err(),
            ProgramError::UnresolvedLabel("nowhere".into())
        );
    }

    #[test]
    fn empty_program_leaves_env() {
        let env = CounterEnv::new("ab").with("x", 3);
        let (out, outcome, audit) =
            run_counter_program(&CounterProgram::default(), &env, 10).unwrap();
        assert_eq!(out, env);
        assert_eq!(outcome, Outcome::Exit(END.into()));
        assert_eq!(audit.instructions, 0);
    }

    #[test]
    fn stack_counter_examples() {
        use CounterCall::*;
        let run = proc_stack_as_counter(&[Inc, Inc, Dec]).unwrap();
        assert_eq!(run.depth, 1);
        let run = proc_stack_as_counter(&[Inc, Dec, Zero]).unwrap();
        assert_eq!((run.zero_hits, run.nonzero_hits), (1, 0));
        assert!(run.stack_restored);
    }

    #[test]
    fn program_json_is_an_array() {
        let json = serde_json::to_value(update_program(2, Update::Inc)).unwrap();
        assert!(json.is_array());
        let back: CounterProgram = serde_json::from_value(json).unwrap();
        assert_eq!(back, update_program(2, Update::Inc));
    }
}
