//! Simulation and transformation toolkit for two-way multi-counter automata
//! and counter pushdown automata.

pub mod counterprog;
pub mod error;
pub mod executor;
pub mod families;
pub mod icount;
pub mod machine;
pub mod oracle;
pub mod pdcomplement;
pub mod random;
pub mod transforms;

pub use error::{ExecError, IntervalError, MachineError, ProgramError, TransformError};
pub use executor::{decide, RunBudget, Verdict};
pub use machine::{
    normalize_slim, parse_machine, stack_state_complexity, state_complexity, step_relation,
    to_json, Configuration, MachineSpec, Stepper, SurfaceView, Tape,
};
