//! Breadth-first exploration of configuration graphs.

use indexmap::IndexSet;
use rustc_hash::{FxBuildHasher, FxHashMap};
use serde::Serialize;

use crate::error::{ExecError, MachineError};
use crate::machine::{Configuration, MachineSpec, StateKind, Stepper, Tape};

/// Default exponent for the polynomial step cap.
pub const DEFAULT_EXPONENT: u32 = 3;
pub const DEFAULT_CONFIG_CAP: usize = 4_000_000;

/// `(n·|x| + 2)^t`, saturating.
pub fn default_step_cap(n: usize, input_len: usize, t: u32) -> u64 {
    ((n as u64).saturating_mul(input_len as u64) + 2).saturating_pow(t)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct RunBudget {
    pub step_cap: u64,
    pub config_cap: usize,
}

impl RunBudget {
    pub fn new(step_cap: u64, config_cap: usize) -> Self {
        assert!(
            step_cap > 0 && config_cap > 0,
            "budget caps must be positive"
        );
        RunBudget {
            step_cap,
            config_cap,
        }
    }

    pub fn with_steps(step_cap: u64) -> Self {
        Self::new(step_cap, DEFAULT_CONFIG_CAP)
    }

    /// The polynomial default for index `n` and an input of length `input_len`.
    pub fn polynomial(n: usize, input_len: usize, t: u32) -> Self {
        Self::with_steps(default_step_cap(n, input_len, t))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Exhaustion {
    StepCap,
    ConfigCap,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "verdict", rename_all = "lowercase")]
pub enum Verdict {
    Accept { witness: Vec<Configuration> },
    Reject,
    Unknown { exhausted: Exhaustion },
}

impl Verdict {
    pub fn is_accept(&self) -> bool {
        matches!(self, Verdict::Accept { .. })
    }

    pub fn is_reject(&self) -> bool {
        matches!(self, Verdict::Reject)
    }

    pub fn is_definite(&self) -> bool {
        !matches!(self, Verdict::Unknown { .. })
    }

    /// `Some(true)` for accept, `Some(false)` for reject.
    pub fn as_bool(&self) -> Option<bool> {
        match self {
            Verdict::Accept { .. } => Some(true),
            Verdict::Reject => Some(false),
            Verdict::Unknown { .. } => None,
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            Verdict::Accept { .. } => "accept",
            Verdict::Reject => "reject",
            Verdict::Unknown { .. } => "unknown",
        }
    }
}

/// Outcome of a full exploration together with its size.
#[derive(Clone, Debug, Serialize)]
pub struct Exploration {
    pub verdict: Verdict,
    pub configurations: usize,
    pub depth: u64,
}

/// Accepts iff an accepting configuration is reachable within the step cap.
/// Rejects iff the reachable set closes without one.
pub fn decide(m: &MachineSpec, x: &str, budget: RunBudget) -> Result<Verdict, MachineError> {
    Ok(explore(m, x, budget)?.verdict)
}

pub fn explore(m: &MachineSpec, x: &str, budget: RunBudget) -> Result<Exploration, MachineError> {
    let stepper = Stepper::new(m);
    let tape = stepper.tape(x)?;
    Ok(explore_with(&stepper, &tape, budget))
}

pub fn explore_with(stepper: &Stepper, tape: &Tape, budget: RunBudget) -> Exploration {
    let m = stepper.machine();
    let mut seen: IndexSet<Configuration, FxBuildHasher> = IndexSet::default();
    let mut parent: Vec<u32> = Vec::new();
    let start = Configuration::initial(m);
    let witness = |seen: &IndexSet<Configuration, FxBuildHasher>, parent: &[u32], mut i: usize| {
        let mut path = vec![seen[i].clone()];
        while parent[i] as usize != i {
            i = parent[i] as usize;
            path.push(seen[i].clone());
        }
        path.reverse();
        path
    };
    if m.state_kind(start.state) == StateKind::Accepting {
        return Exploration {
            verdict: Verdict::Accept {
                witness: vec![start],
            },
            configurations: 1,
            depth: 0,
        };
    }
    seen.insert(start);
    parent.push(0);
    let (mut lo, mut hi) = (0usize, 1usize);
    let mut depth = 0u64;
    let mut buf = Vec::new();
    while lo < hi {
        for i in lo..hi {
            buf.clear();
            stepper.successors_into(tape, &seen[i], &mut buf);
            for c in buf.drain(..) {
                if seen.contains(&c) {
                    continue;
                }
                if depth == budget.step_cap {
                    return Exploration {
                        verdict: Verdict::Unknown {
                            exhausted: Exhaustion::StepCap,
                        },
                        configurations: seen.len(),
                        depth,
                    };
                }
                if seen.len() >= budget.config_cap {
                    return Exploration {
                        verdict: Verdict::Unknown {
                            exhausted: Exhaustion::ConfigCap,
                        },
                        configurations: seen.len(),
                        depth,
                    };
                }
                let accepting = m.state_kind(c.state) == StateKind::Accepting;
                let (j, _) = seen.insert_full(c);
                parent.push(i as u32);
                if accepting {
                    return Exploration {
                        verdict: Verdict::Accept {
                            witness: witness(&seen, &parent, j),
                        },
                        configurations: seen.len(),
                        depth: depth + 1,
                    };
                }
            }
        }
        lo = hi;
        hi = seen.len();
        if lo < hi {
            depth += 1;
        }
    }
    Exploration {
        verdict: Verdict::Reject,
        configurations: seen.len(),
        depth,
    }
}

/// Per-counter maxima that matter for the verdict: along the witness for an
/// accepted input, over the whole reachable set for a rejected one. `None`
/// when the verdict is unknown.
pub fn counter_peaks(
    m: &MachineSpec,
    x: &str,
    budget: RunBudget,
) -> Result<Option<Vec<u32>>, MachineError> {
    let stepper = Stepper::new(m);
    let tape = stepper.tape(x)?;
    let fold = |peaks: &mut Vec<u32>, c: &Configuration| {
        for (p, &v) in peaks.iter_mut().zip(&c.counters) {
            *p = (*p).max(v);
        }
    };
    let mut peaks = vec![0; m.counters];
    match explore_with(&stepper, &tape, budget).verdict {
        Verdict::Accept { witness } => witness.iter().for_each(|c| fold(&mut peaks, c)),
        Verdict::Reject => {
            // The reachable set is known to be finite here.
            let start = Configuration::initial(m);
            let mut seen: rustc_hash::FxHashSet<Configuration> = Default::default();
            let mut work = vec![start.clone()];
            seen.insert(start);
            while let Some(c) = work.pop() {
                fold(&mut peaks, &c);
                for d in stepper.successors(&tape, &c) {
                    if seen.insert(d.clone()) {
                        work.push(d);
                    }
                }
            }
        }
        Verdict::Unknown { .. } => return Ok(None),
    }
    Ok(Some(peaks))
}

/// Iterates the exact-step layers `V_0, V_1, ...`, each sorted.
pub struct Layers<'s, 'm> {
    stepper: &'s Stepper<'m>,
    tape: Tape,
    current: Option<Vec<Configuration>>,
    config_cap: usize,
}

impl<'s, 'm> Layers<'s, 'm> {
    pub fn new(stepper: &'s Stepper<'m>, tape: Tape, config_cap: usize) -> Self {
        Layers {
            current: Some(vec![Configuration::initial(stepper.machine())]),
            stepper,
            tape,
            config_cap,
        }
    }

    pub fn tape(&self) -> &Tape {
        &self.tape
    }

    /// Returns the current layer and advances.
    pub fn next_layer(&mut self) -> Result<Vec<Configuration>, ExecError> {
        let layer = self.current.take().unwrap_or_default();
        let next = image(self.stepper, &self.tape, &layer);
        if next.len() > self.config_cap {
            return Err(ExecError::ConfigCap(self.config_cap));
        }
        self.current = Some(next);
        Ok(layer)
    }
}

/// Sorted, deduplicated one-step image of a set of configurations.
pub fn image(stepper: &Stepper, tape: &Tape, layer: &[Configuration]) -> Vec<Configuration> {
    let mut next = Vec::new();
    for c in layer {
        stepper.successors_into(tape, c, &mut next);
    }
    next.sort_unstable();
    next.dedup();
    next
}

/// `V_i`: the configurations reachable in exactly `i` steps.
pub fn reachable_exact(
    m: &MachineSpec,
    x: &str,
    i: u64,
    config_cap: usize,
) -> Result<Vec<Configuration>, ExecError> {
    let stepper = Stepper::new(m);
    let tape = stepper.tape(x)?;
    let mut layers = Layers::new(&stepper, tape, config_cap);
    for _ in 0..i {
        if layers.next_layer()?.is_empty() {
            return Ok(Vec::new());
        }
    }
    layers.next_layer()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct PathCount {
    pub count: u64,
    /// False when the budget ran out or the count saturated, making `count`
    /// a lower bound.
    pub exact: bool,
}

/// Counts distinct accepting computation paths of length at most the step cap.
/// Paths are sequences of configurations.
pub fn count_accepting_paths(
    m: &MachineSpec,
    x: &str,
    budget: RunBudget,
    limit: u64,
) -> Result<PathCount, MachineError> {
    let stepper = Stepper::new(m);
    let tape = stepper.tape(x)?;
    let mut layer: FxHashMap<Configuration, u64> = FxHashMap::default();
    layer.insert(Configuration::initial(m), 1);
    let mut total = 0u64;
    let mut exact = true;
    let mut step = 0u64;
    let mut buf = Vec::new();
    while !layer.is_empty() {
        let mut next: FxHashMap<Configuration, u64> = FxHashMap::default();
        for (c, &paths) in &layer {
            match m.state_kind(c.state) {
                StateKind::Accepting => total = total.saturating_add(paths),
                StateKind::Rejecting => {}
                StateKind::Running => {
                    if step == budget.step_cap {
                        exact &= stepper.applicable(&tape, c).next().is_none();
                        continue;
                    }
                    buf.clear();
                    stepper.successors_into(&tape, c, &mut buf);
                    buf.sort_unstable();
                    buf.dedup();
                    for d in buf.drain(..) {
                        let e = next.entry(d).or_insert(0);
                        *e = e.saturating_add(paths);
                    }
                }
            }
        }
        if total >= limit {
            return Ok(PathCount {
                count: limit,
                exact: false,
            });
        }
        if next.len() > budget.config_cap {
            return Ok(PathCount {
                count: total,
                exact: false,
            });
        }
        layer = next;
        step += 1;
    }
    Ok(PathCount {
        count: total,
        exact,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "runtime", rename_all = "lowercase")]
pub enum Runtime {
    Finite { steps: u64 },
    Unknown { exhausted: Exhaustion },
}

impl Runtime {
    pub fn steps(self) -> Option<u64> {
        match self {
            Runtime::Finite { steps } => Some(steps),
            Runtime::Unknown { .. } => None,
        }
    }
}

/// `t_x`: the length of the longest halting or stuck path. Unknown when some
/// path is still running after the step cap.
pub fn runtime_max(m: &MachineSpec, x: &str, budget: RunBudget) -> Result<Runtime, MachineError> {
    let stepper = Stepper::new(m);
    let tape = stepper.tape(x)?;
    let mut layers = Layers::new(&stepper, tape, budget.config_cap);
    let mut longest = 0u64;
    for i in 0..=budget.step_cap {
        let layer = match layers.next_layer() {
            Ok(l) => l,
            Err(_) => {
                return Ok(Runtime::Unknown {
                    exhausted: Exhaustion::ConfigCap,
                })
            }
        };
        if layer.is_empty() {
            return Ok(Runtime::Finite { steps: longest });
        }
        let tape = layers.tape();
        if layer
            .iter()
            .any(|c| stepper.applicable(tape, c).next().is_none())
        {
            longest = i;
        }
    }
    if layers.next_layer().map(|l| l.is_empty()).unwrap_or(false) {
        Ok(Runtime::Finite { steps: longest })
    } else {
        Ok(Runtime::Unknown {
            exhausted: Exhaustion::StepCap,
        })
    }
}
