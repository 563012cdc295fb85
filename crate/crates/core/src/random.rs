//! Seeded random machines for differential testing.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::executor::{decide, RunBudget};
use crate::machine::{
    CounterOp, Guard, MachineSpec, Mode, Move, StackOp, StackSpec, TapeSymbol, TransitionRule,
    BOTTOM,
};
use crate::oracle::strings_up_to;

/// Shape of the machines drawn by [`random_machine`].
#[derive(Clone, Debug)]
pub struct Shape {
    /// Total states; the last one is accepting, and there is no explicit
    /// rejecting state (getting stuck rejects).
    pub states: usize,
    pub counters: usize,
    pub alphabet: Vec<char>,
    /// Probability that a (state, tape symbol) pair gets a rule; a second
    /// rule is added with half this probability.
    pub density: f64,
    /// Stack symbols besides `⊥`; `None` for stackless machines.
    pub stack: Option<Vec<char>>,
}

impl Shape {
    pub fn counter_machine(states: usize, counters: usize) -> Self {
        Shape {
            states,
            counters,
            alphabet: vec!['0', '1'],
            density: 0.8,
            stack: None,
        }
    }

    pub fn pushdown(states: usize, counters: usize) -> Self {
        Shape {
            stack: Some(vec!['A']),
            ..Shape::counter_machine(states, counters)
        }
    }
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn pick<T: Copy>(rng: &mut impl Rng, xs: &[T]) -> T {
    *xs.choose(rng).expect("nonempty")
}

/// Draws one nondeterministic machine of the given shape.
pub fn random_machine(shape: &Shape, rng: &mut impl Rng, name: &str) -> MachineSpec {
    let s = shape.states.max(2);
    let k = shape.counters;
    let mut symbols = vec![TapeSymbol::LeftEnd, TapeSymbol::RightEnd];
    symbols.extend(shape.alphabet.iter().map(|&c| TapeSymbol::Sym(c)));
    let gamma: Option<Vec<char>> = shape.stack.as_ref().map(|g| {
        let mut all = vec![BOTTOM];
        all.extend(g);
        all
    });
    let mut transitions = Vec::new();
    for from in 0..s as u32 - 1 {
        for &read in &symbols {
            let mut p = shape.density;
            while rng.gen_bool(p) {
                transitions.push(random_rule(rng, k, from, read, s, gamma.as_deref()));
                p /= 2.0;
            }
        }
    }
    let m = MachineSpec {
        name: name.to_string(),
        mode: Mode::Nondeterministic,
        states: (0..s - 1)
            .map(|i| format!("q{i}"))
            .chain(["acc".to_string()])
            .collect(),
        alphabet: shape.alphabet.clone(),
        counters: k,
        stack: gamma.map(|alphabet| StackSpec {
            alphabet,
            push_size: 1,
        }),
        initial: 0,
        accepting: vec![s as u32 - 1],
        rejecting: Vec::new(),
        transitions,
        provenance: None,
    };
    debug_assert_eq!(m.validate(), Ok(()));
    m
}

fn random_rule(
    rng: &mut impl Rng,
    k: usize,
    from: u32,
    read: TapeSymbol,
    states: usize,
    gamma: Option<&[char]>,
) -> TransitionRule {
    let mut guards = Vec::with_capacity(k);
    let mut ops = Vec::with_capacity(k);
    for _ in 0..k {
        let mut g = pick(rng, &[Guard::Zero, Guard::Nonzero, Guard::Any, Guard::Any]);
        let op = pick(
            rng,
            &[
                CounterOp::Inc,
                CounterOp::Dec,
                CounterOp::Noop,
                CounterOp::Noop,
            ],
        );
        if op == CounterOp::Dec {
            g = Guard::Nonzero;
        }
        guards.push(g);
        ops.push(op);
    }
    let moves: &[Move] = match read {
        TapeSymbol::LeftEnd => &[Move::Stay, Move::Right],
        TapeSymbol::RightEnd => &[Move::Left, Move::Stay],
        TapeSymbol::Sym(_) => &[Move::Left, Move::Stay, Move::Right],
    };
    let movement = pick(rng, moves);
    let (stack_top, stack_op) = match gamma {
        None => (None, StackOp::None),
        Some(g) => {
            let top = if rng.gen_bool(0.5) {
                None
            } else {
                Some(pick(rng, g))
            };
            let op = match rng.gen_range(0..3) {
                0 if top.is_some_and(|t| t != BOTTOM) => StackOp::Pop,
                1 => StackOp::Push(vec![pick(rng, &g[1..])]),
                _ => StackOp::None,
            };
            (top, op)
        }
    };
    TransitionRule {
        from,
        read,
        guards,
        stack_top,
        to: rng.gen_range(0..states) as u32,
        movement,
        counter_ops: ops,
        stack_op,
    }
}

/// Draws machines until one has a definite verdict on every input up to
/// `max_len` under `budget` and accepts some but not all of them. Returns
/// the machine and the number of draws that were discarded.
pub fn random_definite_machine(
    shape: &Shape,
    rng: &mut impl Rng,
    name: &str,
    max_len: usize,
    budget: RunBudget,
) -> (MachineSpec, usize) {
    let inputs = strings_up_to(&shape.alphabet, max_len);
    for discarded in 0.. {
        let m = random_machine(shape, rng, name);
        let verdicts: Option<Vec<bool>> = inputs
            .iter()
            .map(|x| decide(&m, x, budget).ok().and_then(|v| v.as_bool()))
            .collect();
        if verdicts.is_some_and(|v| v.contains(&true) && v.contains(&false)) {
            return (m, discarded);
        }
    }
    unreachable!()
}
