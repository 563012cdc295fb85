use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum MachineError {
    #[error("syntax error at line {line}, column {column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("{context}: undeclared state \"{state}\"")]
    UndeclaredState { context: String, state: String },
    #[error("{context}: undeclared symbol \"{symbol}\"")]
    UndeclaredSymbol { context: String, symbol: String },
    #[error("duplicate declaration of {what} \"{name}\"")]
    Duplicate { what: &'static str, name: String },
    #[error("state \"{0}\" is both accepting and rejecting")]
    OverlappingHaltSets(String),
    #[error("deterministic machine has conflicting rules: {first} and {second}")]
    DeterminismConflict { first: String, second: String },
    #[error("{context}: {reason}")]
    Malformed { context: String, reason: String },
    #[error("machine has no stack")]
    NoStack,
    #[error("input symbol '{0}' is not in the alphabet")]
    InputSymbol(char),
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ProgramError {
    #[error("unresolved label \"{0}\"")]
    UnresolvedLabel(String),
    #[error("duplicate label \"{0}\"")]
    DuplicateLabel(String),
    #[error("unknown register \"{0}\"")]
    UnknownRegister(String),
    #[error("instruction {index}: dec {register} is not dominated by a nonzero test")]
    UnguardedDecrement { index: usize, register: String },
    #[error("instruction {index}: decrement of empty register {register}")]
    DecrementAtZero { index: usize, register: String },
    #[error("instruction {index}: head moved off the tape")]
    HeadOutOfRange { index: usize },
    #[error("instruction {index}: {reason}")]
    Stack { index: usize, reason: String },
    #[error("instruction {index}: nondeterministic choice in a deterministic run")]
    UnexpectedChoice { index: usize },
    #[error("step budget of {0} instructions exhausted")]
    Budget(u64),
    #[error("pair component {component} out of range for modulus {modulus}")]
    PairRange { component: u64, modulus: u64 },
    #[error("cannot decrement a zero pair component")]
    PairUnderflow,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum TransformError {
    #[error("invalid counter index {index} (machine has {counters} counters)")]
    CounterIndex { index: usize, counters: usize },
    #[error("counter {0} is already an encoded or scratch counter")]
    NotPlain(usize),
    #[error("{0}")]
    Precondition(String),
    #[error(transparent)]
    Machine(#[from] MachineError),
    #[error(transparent)]
    Program(#[from] ProgramError),
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ExecError {
    #[error("configuration cap of {0} exceeded")]
    ConfigCap(usize),
    #[error(transparent)]
    Machine(#[from] MachineError),
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum IntervalError {
    #[error("interval index {index} out of range (space has {size} elements)")]
    IndexOutOfRange { index: u128, size: u128 },
    #[error("malformed interval: {0}")]
    Malformed(String),
    #[error("precondition violated: {0}")]
    Precondition(String),
}
