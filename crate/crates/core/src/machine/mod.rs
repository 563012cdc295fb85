//! Machine descriptions for two-way counter automata and counter pushdown
//! automata, together with their single-step semantics.
//!
//! A [`MachineSpec`] is immutable once validated. States are referred to by
//! dense indices ([`StateId`]); the textual names live in `states`.

mod format;
mod slim;
mod step;
mod validate;

pub use format::{parse_machine, to_json};
pub use slim::normalize_slim;
pub use step::{step_relation, Configuration, Counters, Stack, Stepper, SurfaceView, Tape};

use serde::{Deserialize, Serialize};

use crate::error::MachineError;

pub type StateId = u32;

/// Serialized form of the left endmarker.
pub const LEFT_END: char = '>';
/// Serialized form of the right endmarker.
pub const RIGHT_END: char = '<';
/// Stack bottom marker.
pub const BOTTOM: char = '⊥';

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum TapeSymbol {
    LeftEnd,
    RightEnd,
    Sym(char),
}

impl TapeSymbol {
    pub fn as_char(self) -> char {
        match self {
            TapeSymbol::LeftEnd => LEFT_END,
            TapeSymbol::RightEnd => RIGHT_END,
            TapeSymbol::Sym(c) => c,
        }
    }

    pub fn from_char(c: char) -> Self {
        match c {
            LEFT_END => TapeSymbol::LeftEnd,
            RIGHT_END => TapeSymbol::RightEnd,
            c => TapeSymbol::Sym(c),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    Deterministic,
    Nondeterministic,
    UnambiguousClaimed,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Guard {
    Zero,
    Nonzero,
    Any,
}

impl Guard {
    pub fn admits(self, value: u32) -> bool {
        match self {
            Guard::Zero => value == 0,
            Guard::Nonzero => value != 0,
            Guard::Any => true,
        }
    }

    /// Two guards can hold simultaneously for some counter value.
    pub fn overlaps(self, other: Guard) -> bool {
        !matches!(
            (self, other),
            (Guard::Zero, Guard::Nonzero) | (Guard::Nonzero, Guard::Zero)
        )
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CounterOp {
    Inc,
    Dec,
    Noop,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Move {
    Left,
    Stay,
    Right,
}

impl Move {
    pub fn delta(self) -> i64 {
        match self {
            Move::Left => -1,
            Move::Stay => 0,
            Move::Right => 1,
        }
    }

    pub fn from_delta(d: i64) -> Option<Self> {
        match d {
            -1 => Some(Move::Left),
            0 => Some(Move::Stay),
            1 => Some(Move::Right),
            _ => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum StackOp {
    None,
    Pop,
    /// Pushes the word left to right; its last symbol becomes the new top.
    Push(Vec<char>),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StackSpec {
    /// Stack alphabet, always containing [`BOTTOM`].
    pub alphabet: Vec<char>,
    pub push_size: usize,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct TransitionRule {
    pub from: StateId,
    pub read: TapeSymbol,
    pub guards: Vec<Guard>,
    pub stack_top: Option<char>,
    pub to: StateId,
    pub movement: Move,
    pub counter_ops: Vec<CounterOp>,
    pub stack_op: StackOp,
}

/// Where a transformed machine came from.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub derived_from: String,
    pub transform: String,
    #[serde(default)]
    pub parameters: serde_json::Value,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StateKind {
    Accepting,
    Rejecting,
    Running,
}

#[derive(Clone, Debug, PartialEq)]
pub struct MachineSpec {
    pub name: String,
    pub mode: Mode,
    pub states: Vec<String>,
    pub alphabet: Vec<char>,
    pub counters: usize,
    pub stack: Option<StackSpec>,
    pub initial: StateId,
    pub accepting: Vec<StateId>,
    pub rejecting: Vec<StateId>,
    pub transitions: Vec<TransitionRule>,
    pub provenance: Option<Provenance>,
}

impl MachineSpec {
    pub fn validate(&self) -> Result<(), MachineError> {
        validate::validate(self)
    }

    pub fn state_kind(&self, q: StateId) -> StateKind {
        if self.accepting.contains(&q) {
            StateKind::Accepting
        } else if self.rejecting.contains(&q) {
            StateKind::Rejecting
        } else {
            StateKind::Running
        }
    }

    pub fn is_halting(&self, q: StateId) -> bool {
        self.state_kind(q) != StateKind::Running
    }

    pub fn state_id(&self, name: &str) -> Option<StateId> {
        self.states
            .iter()
            .position(|s| s == name)
            .map(|i| i as StateId)
    }

    pub fn state_name(&self, q: StateId) -> &str {
        &self.states[q as usize]
    }

    pub fn has_stack(&self) -> bool {
        self.stack.is_some()
    }

    /// Every symbol a rule may read: both endmarkers, then the input alphabet.
    pub fn tape_symbols(&self) -> Vec<TapeSymbol> {
        let mut out = vec![TapeSymbol::LeftEnd, TapeSymbol::RightEnd];
        out.extend(self.alphabet.iter().map(|&c| TapeSymbol::Sym(c)));
        out
    }

    pub fn has_stationary_moves(&self) -> bool {
        self.transitions.iter().any(|r| r.movement == Move::Stay)
    }

    /// Human-readable label used in diagnostics.
    pub fn describe_rule(&self, index: usize) -> String {
        let r = &self.transitions[index];
        format!(
            "rule #{index} ({} --{}--> {})",
            self.state_name(r.from),
            r.read.as_char(),
            self.state_name(r.to)
        )
    }
}

/// `sc(M)`: the number of inner states.
pub fn state_complexity(m: &MachineSpec) -> usize {
    m.states.len()
}

/// `ssc(N) = |Q| * |Γ^{≤e}|`, counting the empty word.
pub fn stack_state_complexity(m: &MachineSpec) -> Result<u128, MachineError> {
    let stack = m.stack.as_ref().ok_or(MachineError::NoStack)?;
    let gamma = stack.alphabet.len() as u128;
    let mut words: u128 = 0;
    let mut power: u128 = 1;
    for _ in 0..=stack.push_size {
        words += power;
        power *= gamma;
    }
    Ok(m.states.len() as u128 * words)
}

/// Allocates state names that do not clash with an existing set.
#[derive(Debug, Default)]
pub struct StateTable {
    names: Vec<String>,
    index: rustc_hash::FxHashMap<String, StateId>,
}

impl StateTable {
    pub fn from_names(names: &[String]) -> Self {
        let mut t = StateTable::default();
        for n in names {
            t.fresh(n);
        }
        t
    }

    /// Adds a state named `base` (suffixed with primes when taken).
    pub fn fresh(&mut self, base: &str) -> StateId {
        let mut name = base.to_string();
        while self.index.contains_key(&name) {
            name.push('\'');
        }
        let id = self.names.len() as StateId;
        self.index.insert(name.clone(), id);
        self.names.push(name);
        id
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn into_names(self) -> Vec<String> {
        self.names
    }
}

/// A stack or tape symbol not present in `used`.
pub fn fresh_symbol(used: &[char]) -> char {
    ('\u{2460}'..='\u{24ff}')
        .chain('\u{3041}'..='\u{3096}')
        .find(|c| !used.contains(c))
        .expect("symbol pool exhausted")
}
