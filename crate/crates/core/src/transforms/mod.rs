//! Machine-to-machine transformations.

mod eliminate;
mod lower;
mod pair;
mod reduce;

pub use eliminate::eliminate_counters;
pub use pair::{pair_counters, Modulus, PairParams};
pub use reduce::{reduce_counters, reduce_counters_pd, ReduceParams};

use crate::machine::MachineSpec;

/// Counter indices reserved by earlier pairings; empty for plain machines.
pub fn reserved_counters(m: &MachineSpec) -> Vec<usize> {
    PairParams::of(m)
        .map(|p| p.encoded.iter().chain(&p.scratch).copied().collect())
        .unwrap_or_default()
}
