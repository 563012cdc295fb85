//! Complementation of counter automata by inductive counting.
//!
//! The exact mode computes every layer `V_i` by scanning candidate
//! configurations in lexicographic order and classifying each one through
//! process (a) (it is reached) or process (b) (none of the `N̂_{i−1}`
//! configurations of the previous layer leads to it). All bookkeeping goes
//! through a register file named after the proof's counters, so the peak
//! number of simultaneously used counters can be audited.

use std::collections::{BTreeMap, BTreeSet};

use rustc_hash::FxHashSet;
use serde::Serialize;

use crate::error::MachineError;
use crate::executor::{Exhaustion, RunBudget, Verdict};
use crate::machine::{Configuration, Counters, MachineSpec, StateKind, Stepper, Tape};

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct LayerCount {
    pub i: u64,
    /// `N̂_i`.
    pub count: u64,
    pub layer: Vec<Configuration>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ICAudit {
    pub counters: usize,
    /// Largest value each named register held.
    pub registers: BTreeMap<String, u64>,
    pub max_simultaneous: usize,
    /// `5k + 13`.
    pub bound: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct ICRun {
    pub verdict: Verdict,
    pub layers: Vec<LayerCount>,
    pub audit: ICAudit,
}

/// Upper bound on the registers of the procedure for `k` counters.
pub fn register_bound(k: usize) -> usize {
    5 * (k + 1) + 8
}

fn not_pushdown(m: &MachineSpec) -> Result<(), MachineError> {
    if m.has_stack() {
        return Err(MachineError::Malformed {
            context: m.name.clone(),
            reason: "inductive counting takes machines without a stack".into(),
        });
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Register file

/// Configuration-sized register groups.
#[derive(Clone, Copy)]
enum Group {
    /// CT5, eCT1..k: the candidate.
    Candidate,
    /// CT5', eCT1'..k': its working copy.
    Copy,
    /// CT5'', eCT1''..k'': the simulated configuration.
    Sim,
    /// CT6, fCT1..k: the element picked in process (b).
    Pick,
    /// CT7, gCT1..k: the enumeration position.
    Enum,
}

const SINGLES: [&str; 8] = ["CT1", "CT2", "CT3", "CT4", "CT1'", "CT2'", "CT10", "CT3'"];

struct Registers {
    k: usize,
    names: Vec<String>,
    values: Vec<Option<u64>>,
    highest: Vec<u64>,
    live: usize,
    peak: usize,
}

impl Registers {
    fn new(k: usize) -> Self {
        let mut names: Vec<String> = SINGLES.iter().map(|s| s.to_string()).collect();
        for (head, prefix, suffix) in [
            ("CT5", "eCT", ""),
            ("CT5'", "eCT", "'"),
            ("CT5''", "eCT", "''"),
            ("CT6", "fCT", ""),
            ("CT7", "gCT", ""),
        ] {
            names.push(head.to_string());
            names.extend((1..=k).map(|j| format!("{prefix}{j}{suffix}")));
        }
        let n = names.len();
        Registers {
            k,
            names,
            values: vec![None; n],
            highest: vec![0; n],
            live: 0,
            peak: 0,
        }
    }

    fn single(name: &str) -> usize {
        SINGLES.iter().position(|s| *s == name).expect("register")
    }

    fn set(&mut self, slot: usize, v: u64) {
        if self.values[slot].is_none() {
            self.live += 1;
            self.peak = self.peak.max(self.live);
        }
        self.values[slot] = Some(v);
        self.highest[slot] = self.highest[slot].max(v);
    }

    fn get(&self, slot: usize) -> u64 {
        self.values[slot].unwrap_or(0)
    }

    fn free(&mut self, slot: usize) {
        if self.values[slot].take().is_some() {
            self.live -= 1;
        }
    }

    fn put(&mut self, name: &str, v: u64) {
        self.set(Self::single(name), v);
    }

    fn read(&self, name: &str) -> u64 {
        self.get(Self::single(name))
    }

    fn drop_single(&mut self, name: &str) {
        self.free(Self::single(name));
    }

    fn group_base(&self, g: Group) -> usize {
        SINGLES.len() + g as usize * (self.k + 1)
    }

    /// Stores head and counter values; the state lives in finite control.
    fn load(&mut self, g: Group, c: &Configuration) {
        let base = self.group_base(g);
        self.set(base, c.head as u64);
        for (j, &v) in c.counters.iter().enumerate() {
            self.set(base + 1 + j, v as u64);
        }
    }

    fn unload(&mut self, g: Group) {
        let base = self.group_base(g);
        for slot in base..=base + self.k {
            self.free(slot);
        }
    }

    /// Copies the candidate, `i` and `N̂_{i−1}` through CT10.
    fn copy_in(&mut self, c: &Configuration) {
        let ct10 = Self::single("CT10");
        for name in ["CT1", "CT2"] {
            let v = self.read(name);
            self.set(ct10, v);
            self.put(&format!("{name}'"), v);
            self.free(ct10);
        }
        self.load(Group::Copy, c);
    }

    fn copy_out(&mut self) {
        self.drop_single("CT1'");
        self.drop_single("CT2'");
        self.unload(Group::Copy);
    }

    fn audit(&self) -> ICAudit {
        ICAudit {
            counters: self.k,
            registers: self
                .names
                .iter()
                .cloned()
                .zip(self.highest.iter().copied())
                .collect(),
            max_simultaneous: self.peak,
            bound: register_bound(self.k),
        }
    }
}

// ---------------------------------------------------------------------------
// Candidate enumeration

/// `Q × [0, |x|+1] × [0, bound]^k` in lexicographic order.
pub fn candidates(
    m: &MachineSpec,
    tape_len: usize,
    bound: u32,
) -> impl Iterator<Item = Configuration> + '_ {
    let k = m.counters;
    let base = bound as u64 + 1;
    let vectors = base.pow(k as u32);
    let per_state = tape_len as u64 * vectors;
    (0..m.states.len() as u64 * per_state).map(move |idx| {
        let state = (idx / per_state) as u32;
        let rest = idx % per_state;
        let head = (rest / vectors) as usize;
        let mut v = rest % vectors;
        let mut counters: Counters = smallvec::smallvec![0; k];
        for slot in counters.iter_mut().rev() {
            *slot = (v % base) as u32;
            v /= base;
        }
        Configuration {
            state,
            head,
            counters,
            stack: Default::default(),
        }
    })
}

fn window_size(m: &MachineSpec, tape_len: usize, bound: u32) -> u128 {
    m.states.len() as u128 * tape_len as u128 * (bound as u128 + 1).pow(m.counters as u32)
}

// ---------------------------------------------------------------------------
// Exact mode

enum Stop {
    /// Stop once the layers are empty or the union of layers is closed.
    Closure,
    /// Run exactly to layer `r`.
    Layer(u64),
}

fn image(stepper: &Stepper, tape: &Tape, layer: &[Configuration]) -> FxHashSet<Configuration> {
    let mut out = FxHashSet::default();
    let mut buf = Vec::new();
    for c in layer {
        buf.clear();
        stepper.successors_into(tape, c, &mut buf);
        out.extend(buf.drain(..));
    }
    out
}

fn exact(m: &MachineSpec, x: &str, stop: Stop, budget: RunBudget) -> Result<ICRun, MachineError> {
    not_pushdown(m)?;
    let stepper = Stepper::new(m);
    let tape = stepper.tape(x)?;
    let mut regs = Registers::new(m.counters);
    let start = Configuration::initial(m);
    let accepting = |c: &Configuration| m.state_kind(c.state) == StateKind::Accepting;

    let mut layers = vec![LayerCount {
        i: 0,
        count: 1,
        layer: vec![start.clone()],
    }];
    let finish = |verdict, layers, regs: &Registers| ICRun {
        verdict,
        layers,
        audit: regs.audit(),
    };
    regs.put("CT1", 0);
    regs.put("CT2", 1);
    if accepting(&start) {
        return Ok(finish(Verdict::Reject, layers, &regs));
    }
    let mut rejected = false;
    let mut union: FxHashSet<Configuration> = FxHashSet::default();
    union.insert(start);
    let last = match stop {
        // One layer past the cap tells whether the union is closed.
        Stop::Closure => budget.step_cap.saturating_add(1),
        Stop::Layer(r) => r,
    };
    for i in 1..=last {
        let prev = &layers.last().expect("layer").layer;
        let n_prev = layers.last().expect("layer").count;
        if window_size(m, tape.len(), i as u32) > budget.config_cap as u128 {
            return Ok(finish(
                Verdict::Unknown {
                    exhausted: Exhaustion::ConfigCap,
                },
                layers,
                &regs,
            ));
        }
        let reached = image(&stepper, &tape, prev);
        regs.put("CT1", i);
        regs.put("CT3", 0);
        let mut layer = Vec::new();
        for cand in candidates(m, tape.len(), i as u32) {
            regs.load(Group::Enum, &cand);
            regs.load(Group::Candidate, &cand);
            regs.copy_in(&cand);
            if reached.contains(&cand) {
                // (a) A path of length i ends here.
                regs.load(Group::Sim, &cand);
                regs.unload(Group::Sim);
                let c = regs.read("CT3");
                regs.put("CT3", c + 1);
                layer.push(cand);
            } else {
                // (b) Count the previous layer and see that none of it
                // leads here.
                regs.put("CT4", 0);
                for p in prev {
                    regs.load(Group::Pick, p);
                    regs.load(Group::Sim, p);
                    regs.unload(Group::Sim);
                    let d = regs.read("CT4");
                    regs.put("CT4", d + 1);
                }
                debug_assert_eq!(regs.read("CT4"), n_prev);
                regs.unload(Group::Pick);
                regs.drop_single("CT4");
            }
            regs.copy_out();
            regs.unload(Group::Candidate);
        }
        regs.unload(Group::Enum);
        let count = regs.read("CT3");
        regs.drop_single("CT3");
        regs.put("CT2", count);
        debug_assert_eq!(count as usize, reached.len());

        // (4) Recount the layer over non-accepting states only.
        regs.put("CT3'", count);
        let clean = layer.iter().filter(|c| !accepting(c)).count() as u64;
        let mismatch = clean != regs.read("CT3'");
        regs.drop_single("CT3'");
        let grew = layer
            .iter()
            .fold(false, |g, c| union.insert(c.clone()) || g);
        let empty = layer.is_empty();
        layers.push(LayerCount { i, count, layer });
        if matches!(stop, Stop::Closure) && i > budget.step_cap {
            let verdict = if empty || !grew {
                Verdict::Accept {
                    witness: Vec::new(),
                }
            } else {
                Verdict::Unknown {
                    exhausted: Exhaustion::StepCap,
                }
            };
            return Ok(finish(verdict, layers, &regs));
        }
        if mismatch {
            if let Stop::Closure = stop {
                return Ok(finish(Verdict::Reject, layers, &regs));
            }
            rejected = true;
        }
        if let Stop::Closure = stop {
            if empty || !grew {
                return Ok(finish(
                    Verdict::Accept {
                        witness: Vec::new(),
                    },
                    layers,
                    &regs,
                ));
            }
            if union.len() > budget.config_cap {
                return Ok(finish(
                    Verdict::Unknown {
                        exhausted: Exhaustion::ConfigCap,
                    },
                    layers,
                    &regs,
                ));
            }
        }
    }
    let verdict = match stop {
        Stop::Layer(_) if rejected => Verdict::Reject,
        Stop::Layer(_) => Verdict::Accept {
            witness: Vec::new(),
        },
        Stop::Closure => Verdict::Unknown {
            exhausted: Exhaustion::StepCap,
        },
    };
    Ok(finish(verdict, layers, &regs))
}

/// Accepts iff `m` rejects `x`. Layers are counted until they die out or
/// their union stops growing; a cap on the number of layers that is hit
/// first gives `Unknown`. Accepting verdicts carry no witness.
pub fn complement_decide_ic(
    m: &MachineSpec,
    x: &str,
    budget: RunBudget,
) -> Result<Verdict, MachineError> {
    Ok(complement_run_ic(m, x, budget)?.verdict)
}

/// As [`complement_decide_ic`], with the layers and the register audit.
pub fn complement_run_ic(
    m: &MachineSpec,
    x: &str,
    budget: RunBudget,
) -> Result<ICRun, MachineError> {
    exact(m, x, Stop::Closure, budget)
}

/// Layer counts `N̂_0..N̂_r`.
pub fn layer_counts(
    m: &MachineSpec,
    x: &str,
    r: u64,
    budget: RunBudget,
) -> Result<Vec<LayerCount>, MachineError> {
    let run = exact(m, x, Stop::Layer(r), budget)?;
    Ok(run.layers)
}

/// The verdict of the exact procedure run to layer `r` regardless of
/// closure: accept iff no layer up to `r` holds an accepting configuration.
pub fn complement_to_layer(
    m: &MachineSpec,
    x: &str,
    r: u64,
    budget: RunBudget,
) -> Result<Verdict, MachineError> {
    Ok(exact(m, x, Stop::Layer(r), budget)?.verdict)
}

pub fn audit_ic(m: &MachineSpec, x: &str, budget: RunBudget) -> Result<ICAudit, MachineError> {
    Ok(complement_run_ic(m, x, budget)?.audit)
}

// ---------------------------------------------------------------------------
// Guessing mode

/// A nondeterministic choice the procedure asks for.
#[derive(Debug)]
pub enum ChoicePoint<'a> {
    /// 0 runs process (a) on the candidate, 1 runs process (b). In the
    /// recount of phase (4), 1 skips the candidate.
    Process {
        layer: u64,
        candidate: &'a Configuration,
        recount: bool,
    },
    /// Pick the next configuration of a guessed path that should reach
    /// `target` after `remaining` more steps.
    Step {
        options: &'a [Configuration],
        target: &'a Configuration,
        remaining: u64,
    },
}

pub trait Chooser {
    fn choose(&mut self, point: ChoicePoint<'_>, arity: usize) -> usize;
}

/// Uniformly random choices from a seeded generator.
pub struct SeededChooser(rand_chacha::ChaCha8Rng);

impl SeededChooser {
    pub fn new(seed: u64) -> Self {
        use rand::SeedableRng;
        SeededChooser(rand_chacha::ChaCha8Rng::seed_from_u64(seed))
    }
}

impl Chooser for SeededChooser {
    fn choose(&mut self, _: ChoicePoint<'_>, arity: usize) -> usize {
        use rand::Rng;
        self.0.gen_range(0..arity)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "outcome", rename_all = "lowercase")]
pub enum GuessOutcome {
    /// Every layer was certified and none holds an accepting configuration.
    Accept,
    /// Every layer was certified and some layer holds an accepting one.
    Reject { layer: u64 },
    /// A check failed on this branch.
    Abort { layer: u64, reason: String },
}

/// Adds `delta` to `N̂_layer` as it is handed to the next layer.
#[derive(Clone, Copy, Debug)]
pub struct Corruption {
    pub layer: u64,
    pub delta: i64,
}

fn guess_path(
    stepper: &Stepper,
    tape: &Tape,
    start: &Configuration,
    target: &Configuration,
    steps: u64,
    chooser: &mut dyn Chooser,
) -> Option<Configuration> {
    let mut c = start.clone();
    for done in 0..steps {
        let options = stepper.successors(tape, &c);
        if options.is_empty() {
            return None;
        }
        let pick = chooser.choose(
            ChoicePoint::Step {
                options: &options,
                target,
                remaining: steps - done,
            },
            options.len(),
        );
        c = options[pick].clone();
    }
    Some(c)
}

/// One run of the nondeterministic procedure up to layer `r`, with every
/// choice delegated to `chooser`.
pub fn guessing_mode_run(
    m: &MachineSpec,
    x: &str,
    r: u64,
    chooser: &mut dyn Chooser,
    corruption: Option<Corruption>,
) -> Result<GuessOutcome, MachineError> {
    not_pushdown(m)?;
    let stepper = Stepper::new(m);
    let tape = stepper.tape(x)?;
    let start = Configuration::initial(m);
    let accepting = |c: &Configuration| m.state_kind(c.state) == StateKind::Accepting;
    if accepting(&start) {
        return Ok(GuessOutcome::Reject { layer: 0 });
    }
    let abort = |layer, reason: &str| {
        Ok(GuessOutcome::Abort {
            layer,
            reason: reason.to_string(),
        })
    };
    let mut n_prev: i64 = 1;
    for i in 1..=r {
        let mut c: i64 = 0;
        for cand in candidates(m, tape.len(), i as u32) {
            let point = ChoicePoint::Process {
                layer: i,
                candidate: &cand,
                recount: false,
            };
            if chooser.choose(point, 2) == 0 {
                match guess_path(&stepper, &tape, &start, &cand, i, chooser) {
                    Some(end) if end == cand => c += 1,
                    _ => return abort(i, "guessed path misses the candidate"),
                }
            } else {
                let mut d: i64 = 0;
                for p in candidates(m, tape.len(), i as u32 - 1) {
                    let end = guess_path(&stepper, &tape, &start, &p, i - 1, chooser);
                    if end.as_ref() == Some(&p) {
                        d += 1;
                        if stepper.successors(&tape, &p).contains(&cand) {
                            return abort(i, "candidate has a counted predecessor");
                        }
                    }
                }
                if d != n_prev {
                    return abort(i, "predecessor count differs from the previous layer");
                }
            }
        }
        // (4) Recount over non-accepting candidates with process (a) only.
        let mut clean: i64 = 0;
        for cand in candidates(m, tape.len(), i as u32).filter(|c| !accepting(c)) {
            let point = ChoicePoint::Process {
                layer: i,
                candidate: &cand,
                recount: true,
            };
            if chooser.choose(point, 2) == 0 {
                match guess_path(&stepper, &tape, &start, &cand, i, chooser) {
                    Some(end) if end == cand => clean += 1,
                    _ => return abort(i, "guessed path misses the candidate"),
                }
            }
        }
        if clean != c {
            return Ok(GuessOutcome::Reject { layer: i });
        }
        n_prev = c;
        if let Some(k) = corruption.filter(|k| k.layer == i) {
            n_prev += k.delta;
        }
    }
    Ok(GuessOutcome::Accept)
}

/// Result of enumerating every branch of the guessing procedure.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ExhaustiveSummary {
    /// Values `N̂_i` carried by some surviving branch, per layer.
    pub surviving: Vec<BTreeSet<u64>>,
    pub accepting_run: bool,
}

/// Enumerates all branches of [`guessing_mode_run`] up to layer `r`.
/// Branches that reach the same configuration, or the same partial count,
/// are merged, which keeps the enumeration finite without losing outcomes.
pub fn guessing_mode_exhaustive(
    m: &MachineSpec,
    x: &str,
    r: u64,
) -> Result<ExhaustiveSummary, MachineError> {
    not_pushdown(m)?;
    let stepper = Stepper::new(m);
    let tape = stepper.tape(x)?;
    let start = Configuration::initial(m);
    let accepting = |c: &Configuration| m.state_kind(c.state) == StateKind::Accepting;
    let mut surviving = vec![BTreeSet::from([1u64])];
    if accepting(&start) {
        return Ok(ExhaustiveSummary {
            surviving,
            accepting_run: false,
        });
    }
    // Endpoints of all paths of length j, and whether some path of length
    // j gets stuck before that.
    let mut ends: Vec<FxHashSet<Configuration>> = vec![FxHashSet::from_iter([start.clone()])];
    let mut stuck = vec![false];
    for j in 1..=r {
        let prev: Vec<Configuration> = ends[j as usize - 1].iter().cloned().collect();
        let died =
            stuck[j as usize - 1] || prev.iter().any(|c| stepper.successors(&tape, c).is_empty());
        ends.push(image(&stepper, &tape, &prev));
        stuck.push(died);
    }
    for i in 1..=r {
        let at_i = &ends[i as usize];
        let at_prev = &ends[i as usize - 1];
        let mut layer_values = BTreeSet::new();
        for &n_prev in surviving.last().expect("layer") {
            // Partial counts c reachable by surviving branches.
            let mut cs: BTreeSet<u64> = BTreeSet::from([0]);
            for cand in candidates(m, tape.len(), i as u32) {
                let via_a = at_i.contains(&cand);
                // Process (b): each p is confirmed or not; a confirmed p
                // that leads to the candidate kills the branch.
                let mut ds: BTreeSet<u64> = BTreeSet::from([0]);
                for p in candidates(m, tape.len(), i as u32 - 1) {
                    let can_confirm = at_prev.contains(&p);
                    let can_miss = stuck[i as usize - 1] || at_prev.iter().any(|e| *e != p);
                    let fatal = can_confirm && stepper.successors(&tape, &p).contains(&cand);
                    let mut next = BTreeSet::new();
                    for &d in &ds {
                        if can_miss {
                            next.insert(d);
                        }
                        if can_confirm && !fatal {
                            next.insert(d + 1);
                        }
                    }
                    ds = next;
                }
                let via_b = ds.contains(&n_prev);
                let mut next = BTreeSet::new();
                for &c in &cs {
                    if via_a {
                        next.insert(c + 1);
                    }
                    if via_b {
                        next.insert(c);
                    }
                }
                cs = next;
            }
            for c in cs {
                // (4) The recount can reach `c` iff enough non-accepting
                // candidates are reachable.
                let clean = at_i.iter().filter(|e| !accepting(e)).count() as u64;
                if clean >= c {
                    layer_values.insert(c);
                }
            }
        }
        surviving.push(layer_values);
    }
    let accepting_run = surviving.last().is_some_and(|s| !s.is_empty());
    Ok(ExhaustiveSummary {
        surviving,
        accepting_run,
    })
}
