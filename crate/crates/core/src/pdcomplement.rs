//! Complementation of slim counter pushdown automata through conf-intervals.
//!
//! A conf-interval `(C, s, C', l, r)` claims that the surface configuration
//! `C'` follows `C` after exactly `l` steps that never dip below the stack
//! height of `C`, end at that height again and touch it `s` times in between.
//! A claim is proved by peeling off its outer push and pop (CND1) or by
//! splitting it at its first return (CND2). The complement refutes the claim
//! that the initial configuration reaches the accepting one.

use std::collections::BTreeMap;
use std::rc::Rc;

use rustc_hash::{FxHashMap, FxHashSet};
use serde::Serialize;

use crate::error::{IntervalError, MachineError};
use crate::executor::{explore, Exhaustion, RunBudget, Verdict};
use crate::machine::{
    normalize_slim, Configuration, CounterOp, Counters, MachineSpec, Stack, StackOp, StateId,
    Stepper, Tape, BOTTOM,
};

/// State, head, stack top and counter values; the stack below the top is
/// not part of it.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize)]
pub struct Surface {
    pub state: StateId,
    pub head: usize,
    pub top: char,
    pub counters: Counters,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize)]
pub struct ConfInterval {
    pub from: Surface,
    pub s: u64,
    pub to: Surface,
    pub l: u64,
    /// Round; grows by one per peeled push.
    pub r: u64,
}

impl ConfInterval {
    pub fn is_basic(&self) -> bool {
        self.s == 0
    }
}

/// `CONF` and `A⁽¹⁾ = CONF × [0, t_x) × CONF × [0, t_x)²` for one machine
/// and input, with a lexicographic linear order on both.
pub struct IntervalSpace<'m> {
    stepper: Stepper<'m>,
    tape: Tape,
    gamma: Vec<char>,
    t_x: u64,
    heads: usize,
    confs: u64,
}

impl<'m> IntervalSpace<'m> {
    pub fn new(m: &'m MachineSpec, x: &str, t_x: u64) -> Result<Self, MachineError> {
        let gamma = m
            .stack
            .as_ref()
            .ok_or(MachineError::NoStack)?
            .alphabet
            .clone();
        let stepper = Stepper::new(m);
        let tape = stepper.tape(x)?;
        let heads = tape.len();
        let confs = m.states.len() as u64
            * heads as u64
            * gamma.len() as u64
            * (t_x + 1).pow(m.counters as u32);
        Ok(IntervalSpace {
            stepper,
            tape,
            gamma,
            t_x,
            heads,
            confs,
        })
    }

    pub fn machine(&self) -> &'m MachineSpec {
        self.stepper.machine()
    }

    pub fn t_x(&self) -> u64 {
        self.t_x
    }

    /// `|CONF|`.
    pub fn conf_count(&self) -> u64 {
        self.confs
    }

    /// `|A⁽¹⁾| = |CONF|² · t_x³`.
    pub fn len(&self) -> u128 {
        (self.confs as u128).pow(2) * (self.t_x as u128).pow(3)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn contains(&self, c: &Surface) -> bool {
        (c.state as usize) < self.machine().states.len()
            && c.head < self.heads
            && self.gamma.contains(&c.top)
            && c.counters.len() == self.machine().counters
            && c.counters.iter().all(|&v| v as u64 <= self.t_x)
    }

    pub fn conf_index(&self, c: &Surface) -> Option<u64> {
        if !self.contains(c) {
            return None;
        }
        let g = self.gamma.iter().position(|&t| t == c.top)? as u64;
        let mut i =
            (c.state as u64 * self.heads as u64 + c.head as u64) * self.gamma.len() as u64 + g;
        for &v in &c.counters {
            i = i * (self.t_x + 1) + v as u64;
        }
        Some(i)
    }

    pub fn conf_at(&self, mut i: u64) -> Option<Surface> {
        if i >= self.confs {
            return None;
        }
        let base = self.t_x + 1;
        let mut counters = Counters::from_elem(0, self.machine().counters);
        for slot in counters.iter_mut().rev() {
            *slot = (i % base) as u32;
            i /= base;
        }
        let g = self.gamma.len() as u64;
        let top = self.gamma[(i % g) as usize];
        i /= g;
        let head = (i % self.heads as u64) as usize;
        i /= self.heads as u64;
        Some(Surface {
            state: i as StateId,
            head,
            top,
            counters,
        })
    }

    fn conf_index_or(&self, c: &Surface, what: &str) -> Result<u64, IntervalError> {
        self.conf_index(c)
            .ok_or_else(|| IntervalError::Malformed(format!("{what} lies outside CONF")))
    }

    /// Position of `eta` in the order on `A⁽¹⁾`.
    pub fn index(&self, eta: &ConfInterval) -> Result<u128, IntervalError> {
        let c = self.conf_index_or(&eta.from, "left end")? as u128;
        let d = self.conf_index_or(&eta.to, "right end")? as u128;
        for (name, v) in [("s", eta.s), ("l", eta.l), ("r", eta.r)] {
            if v >= self.t_x {
                return Err(IntervalError::Malformed(format!(
                    "{name} = {v} is not below t_x = {}",
                    self.t_x
                )));
            }
        }
        let (t, n) = (self.t_x as u128, self.confs as u128);
        Ok((((c * t + eta.s as u128) * n + d) * t + eta.l as u128) * t + eta.r as u128)
    }

    /// The `i`-th element of `A⁽¹⁾`.
    pub fn at(&self, i: u128) -> Result<ConfInterval, IntervalError> {
        let size = self.len();
        if i >= size {
            return Err(IntervalError::IndexOutOfRange { index: i, size });
        }
        let (t, n) = (self.t_x as u128, self.confs as u128);
        let mut rest = i;
        let mut digit = |radix: u128| {
            let d = rest % radix;
            rest /= radix;
            d
        };
        let r = digit(t) as u64;
        let l = digit(t) as u64;
        let d = digit(n) as u64;
        let s = digit(t) as u64;
        let c = rest as u64;
        Ok(ConfInterval {
            from: self.conf_at(c).expect("in range"),
            s,
            to: self.conf_at(d).expect("in range"),
            l,
            r,
        })
    }

    /// The `i`-th and `j`-th elements, as a second pass of the enumerator.
    pub fn pair_at(&self, i: u128, j: u128) -> Result<(ConfInterval, ConfInterval), IntervalError> {
        Ok((self.at(i)?, self.at(j)?))
    }

    /// All of `A⁽¹⁾` in index order.
    pub fn iter(&self) -> impl Iterator<Item = ConfInterval> + '_ {
        (0..self.len()).map(|i| self.at(i).expect("in range"))
    }

    /// `C_0`: initial state, head on `▷`, empty stack and counters.
    pub fn initial(&self) -> Surface {
        self.resting(self.machine().initial)
    }

    /// `C_fin`, when the machine has an accepting state.
    pub fn accepting(&self) -> Option<Surface> {
        self.machine().accepting.first().map(|&q| self.resting(q))
    }

    fn resting(&self, state: StateId) -> Surface {
        Surface {
            state,
            head: 0,
            top: BOTTOM,
            counters: Counters::from_elem(0, self.machine().counters),
        }
    }

    /// A stack whose top is `top`; what lies below it never matters.
    fn own_stack(top: char) -> Stack {
        let mut s = Stack::new();
        s.push(BOTTOM);
        if top != BOTTOM {
            s.push(top);
        }
        s
    }

    fn step(&self, c: &Surface, stack: Stack) -> Vec<Configuration> {
        let conf = Configuration {
            state: c.state,
            head: c.head,
            counters: c.counters.clone(),
            stack,
        };
        self.stepper.successors(&self.tape, &conf)
    }

    fn lift(&self, c: Configuration) -> Option<Surface> {
        let s = Surface {
            state: c.state,
            head: c.head,
            top: *c.stack.last()?,
            counters: c.counters,
        };
        self.contains(&s).then_some(s)
    }

    fn sorted(&self, mut v: Vec<Surface>) -> Vec<Surface> {
        v.sort_by_key(|c| self.conf_index(c));
        v.dedup();
        v
    }

    /// Successors of `c` one stack cell higher.
    pub fn pushes(&self, c: &Surface) -> Vec<Surface> {
        let own = Self::own_stack(c.top);
        let out = self
            .step(c, own.clone())
            .into_iter()
            .filter(|n| n.stack.len() == own.len() + 1)
            .filter_map(|n| self.lift(n))
            .collect();
        self.sorted(out)
    }

    /// Successors of `c` at the same stack height.
    pub fn flats(&self, c: &Surface) -> Vec<Surface> {
        let own = Self::own_stack(c.top);
        let out = self
            .step(c, own.clone())
            .into_iter()
            .filter(|n| n.stack == own)
            .filter_map(|n| self.lift(n))
            .collect();
        self.sorted(out)
    }

    /// Successors of `c2`, standing one cell above `under`, that pop back to
    /// the height of `under`.
    pub fn pops_into(&self, c2: &Surface, under: &Surface) -> Vec<Surface> {
        if c2.top == BOTTOM {
            return Vec::new();
        }
        let own = Self::own_stack(under.top);
        let mut above = own.clone();
        above.push(c2.top);
        let out = self
            .step(c2, above)
            .into_iter()
            .filter(|n| n.stack == own)
            .filter_map(|n| self.lift(n))
            .collect();
        self.sorted(out)
    }

    /// All `C2` with `to ∈ pops_into(C2, under)`.
    pub fn pop_predecessors(&self, to: &Surface, under: &Surface) -> Vec<Surface> {
        if to.top != under.top {
            return Vec::new();
        }
        let m = self.machine();
        let mut out = Vec::new();
        for rule in &m.transitions {
            if rule.stack_op != StackOp::Pop || rule.to != to.state {
                continue;
            }
            let head = to.head as i64 - rule.movement.delta();
            if head < 0 || head as usize >= self.heads {
                continue;
            }
            let counters: Option<Counters> = to
                .counters
                .iter()
                .zip(&rule.counter_ops)
                .map(|(&v, op)| match op {
                    CounterOp::Inc => v.checked_sub(1),
                    CounterOp::Dec => Some(v + 1),
                    CounterOp::Noop => Some(v),
                })
                .collect();
            let Some(counters) = counters else { continue };
            let tops: Vec<char> = match rule.stack_top {
                Some(t) => vec![t],
                None => self
                    .gamma
                    .iter()
                    .copied()
                    .filter(|&t| t != BOTTOM)
                    .collect(),
            };
            for top in tops {
                let c2 = Surface {
                    state: rule.from,
                    head: head as usize,
                    top,
                    counters: counters.clone(),
                };
                if self.contains(&c2) && self.pops_into(&c2, under).contains(to) {
                    out.push(c2);
                }
            }
        }
        self.sorted(out)
    }

    fn check(&self, eta: &ConfInterval, what: &str) -> Result<(), IntervalError> {
        self.conf_index_or(&eta.from, what)?;
        self.conf_index_or(&eta.to, what)?;
        if eta.s.max(eta.l).max(eta.r) > self.t_x {
            return Err(IntervalError::Malformed(format!(
                "{what} has a component above t_x = {}",
                self.t_x
            )));
        }
        Ok(())
    }
}

/// `C ⊢ C1`, `C2 ⊢ C'` and `l1 = l − 2`, for `η = (C, 0, C', l, r)` with
/// `l ≥ 2` and `η1 = (C1, s1, C2, l1, r1)`. The steps are checked on
/// concrete stacks: `C1` one cell above `C`, and `C2` one cell above a stack
/// whose top is that of `C`.
pub fn cnd1(
    space: &IntervalSpace,
    eta: &ConfInterval,
    eta1: &ConfInterval,
) -> Result<bool, IntervalError> {
    space.check(eta, "η")?;
    space.check(eta1, "η1")?;
    if eta.s != 0 || eta.l < 2 {
        return Err(IntervalError::Precondition(
            "CND1 needs s = 0 and l ≥ 2".into(),
        ));
    }
    Ok(eta1.l + 2 == eta.l
        && space.pushes(&eta.from).contains(&eta1.from)
        && space.pops_into(&eta1.to, &eta.from).contains(&eta.to))
}

/// `C1 = C`, `C3 = C'`, `s1 = 0`, `s2 = s − 1` and `l = l1 + l2`, for
/// `η = (C, s, C', l, r)` with `s ≥ 1`, `l ≥ 2`. The two parts must also
/// meet in the same middle configuration.
pub fn cnd2(
    space: &IntervalSpace,
    eta: &ConfInterval,
    eta1: &ConfInterval,
    eta2: &ConfInterval,
) -> Result<bool, IntervalError> {
    space.check(eta, "η")?;
    space.check(eta1, "η1")?;
    space.check(eta2, "η2")?;
    if eta.s == 0 || eta.l < 2 {
        return Err(IntervalError::Precondition(
            "CND2 needs s ≥ 1 and l ≥ 2".into(),
        ));
    }
    Ok(eta1.from == eta.from
        && eta2.to == eta.to
        && eta1.to == eta2.from
        && eta1.s == 0
        && eta2.s + 1 == eta.s
        && eta1.l + eta2.l == eta.l)
}

/// Memoized truth of interval claims, over configuration indices.
///
/// `basic(c, l)` lists the right ends of realizable `(c, 0, ·, l)` and
/// `level(c, l)` maps each right end to the least realizable `s`. For
/// `l ≥ 2` the set of realizable `s` is closed upwards, because CND2 allows
/// an empty first or last part.
struct Realizer<'a, 'm> {
    space: &'a IntervalSpace<'m>,
    basic: FxHashMap<(u64, u64), Rc<Vec<u64>>>,
    level: FxHashMap<(u64, u64), Rc<BTreeMap<u64, u64>>>,
}

impl<'a, 'm> Realizer<'a, 'm> {
    fn new(space: &'a IntervalSpace<'m>) -> Self {
        Realizer {
            space,
            basic: FxHashMap::default(),
            level: FxHashMap::default(),
        }
    }

    fn entries(&self) -> usize {
        self.basic.len() + self.level.len()
    }

    fn idx(&self, c: &Surface) -> u64 {
        self.space.conf_index(c).expect("in CONF")
    }

    fn conf(&self, i: u64) -> Surface {
        self.space.conf_at(i).expect("in CONF")
    }

    fn basic(&mut self, c: u64, l: u64) -> Rc<Vec<u64>> {
        if let Some(v) = self.basic.get(&(c, l)) {
            return v.clone();
        }
        let cs = self.conf(c);
        let mut out = Vec::new();
        match l {
            0 => out.push(c),
            1 => out.extend(self.space.flats(&cs).iter().map(|d| self.idx(d))),
            _ => {
                for c1 in self.space.pushes(&cs) {
                    let inner = self.level(self.idx(&c1), l - 2);
                    for &c2 in inner.keys() {
                        let c2 = self.conf(c2);
                        out.extend(self.space.pops_into(&c2, &cs).iter().map(|d| self.idx(d)));
                    }
                }
            }
        }
        out.sort_unstable();
        out.dedup();
        let out = Rc::new(out);
        self.basic.insert((c, l), out.clone());
        out
    }

    fn level(&mut self, c: u64, l: u64) -> Rc<BTreeMap<u64, u64>> {
        if let Some(v) = self.level.get(&(c, l)) {
            return v.clone();
        }
        let mut mins: BTreeMap<u64, u64> = self.basic(c, l).iter().map(|&d| (d, 0)).collect();
        if l >= 2 {
            for l1 in 1..l {
                for &mid in self.basic(c, l1).iter() {
                    for (&d, &s) in self.level(mid, l - l1).iter() {
                        let v = mins.entry(d).or_insert(u64::MAX);
                        *v = (*v).min(s + 1);
                    }
                }
            }
        }
        let out = Rc::new(mins);
        self.level.insert((c, l), out.clone());
        out
    }

    fn holds(&mut self, c: u64, s: u64, d: u64, l: u64) -> bool {
        match (s, l) {
            (0, _) => self.basic(c, l).binary_search(&d).is_ok(),
            (_, 0 | 1) => false,
            _ => self.level(c, l).get(&d).is_some_and(|&m| m <= s),
        }
    }

    fn realizable(&mut self, eta: &ConfInterval) -> bool {
        let (c, d) = (self.idx(&eta.from), self.idx(&eta.to));
        self.holds(c, eta.s, d, eta.l)
    }
}

/// Whether `η` is realizable in the sense fixed by CND1, CND2 and the base
/// cases `l ≤ 1`. Shared by the decision procedure and the tests.
pub fn realizable(space: &IntervalSpace, eta: &ConfInterval) -> Result<bool, IntervalError> {
    space.check(eta, "η")?;
    Ok(Realizer::new(space).realizable(eta))
}

/// The slim form of `m` and the bound `t_x` used for it on `x`.
fn prepare(
    m: &MachineSpec,
    x: &str,
    budget: RunBudget,
) -> Result<Result<(MachineSpec, u64), Exhaustion>, MachineError> {
    let slim = normalize_slim(m)?;
    let e = explore(&slim, x, budget)?;
    Ok(match e.verdict {
        Verdict::Unknown { exhausted } => Err(exhausted),
        _ => Ok((slim, e.depth)),
    })
}

/// Accepts iff `m` rejects `x`. The machine is brought into slim form
/// first. Every claim `(C_0, 0, C_fin, l, 0)` with `l ≤ t_x` must be
/// refuted: a basic claim is refuted when all its CND1 children are, a
/// split claim when every CND2 pair has a refuted part. Choices are
/// explored exhaustively, sharing work between identical claims.
pub fn complement_decide_pd(
    m: &MachineSpec,
    x: &str,
    budget: RunBudget,
) -> Result<Verdict, MachineError> {
    let (slim, t_x) = match prepare(m, x, budget)? {
        Ok(p) => p,
        Err(exhausted) => return Ok(Verdict::Unknown { exhausted }),
    };
    let space = IntervalSpace::new(&slim, x, t_x)?;
    let Some(fin) = space.accepting() else {
        return Ok(Verdict::Accept {
            witness: Vec::new(),
        });
    };
    let mut re = Realizer::new(&space);
    let (c0, cf) = (re.idx(&space.initial()), re.idx(&fin));
    for l in 0..=t_x {
        if re.holds(c0, 0, cf, l) {
            return Ok(Verdict::Reject);
        }
        if re.entries() > budget.config_cap {
            return Ok(Verdict::Unknown {
                exhausted: Exhaustion::ConfigCap,
            });
        }
    }
    Ok(Verdict::Accept {
        witness: Vec::new(),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Phase {
    /// `(1′)`: a claim about the whole run.
    Seed,
    Pop,
    /// `(i′)`: every CND1 child is pushed.
    Universal,
    /// `(ii′)`: the chosen part of one CND2 pair is pushed.
    Choice,
    /// A base case or an impossible shape refutes the claim.
    Refuted,
    /// Covered by a claim refuted earlier.
    Repeat,
    /// A base case holds: this run cannot refute its claim.
    Failed,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct TraceEvent {
    pub phase: Phase,
    pub interval: ConfInterval,
    /// Stack height after the event.
    pub height: usize,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "outcome", rename_all = "lowercase")]
pub enum TraceOutcome {
    Accept,
    Reject { interval: ConfInterval },
    Unknown { exhausted: Exhaustion },
}

#[derive(Clone, Debug, Serialize)]
pub struct PdTrace {
    pub t_x: Option<u64>,
    pub conf_count: u64,
    pub outcome: TraceOutcome,
    pub event_count: u64,
    pub max_height: usize,
    /// Intervals with equal rounds sat next to each other after every push.
    pub consecutive: bool,
    /// Only filled when recording was requested.
    pub events: Vec<TraceEvent>,
}

impl PdTrace {
    pub fn verdict(&self) -> Verdict {
        match &self.outcome {
            TraceOutcome::Accept => Verdict::Accept {
                witness: Vec::new(),
            },
            TraceOutcome::Reject { .. } => Verdict::Reject,
            TraceOutcome::Unknown { exhausted } => Verdict::Unknown {
                exhausted: *exhausted,
            },
        }
    }

    /// One JSON object per event.
    pub fn jsonl(&self) -> String {
        self.events
            .iter()
            .map(|e| serde_json::to_string(e).expect("serializable") + "\n")
            .collect()
    }
}

/// Whether equal values form contiguous blocks.
pub fn rounds_consecutive(rounds: &[u64]) -> bool {
    let mut closed = FxHashSet::default();
    for w in rounds.windows(2) {
        if w[0] != w[1] && !closed.insert(w[0]) {
            return false;
        }
    }
    rounds.last().is_none_or(|r| !closed.contains(r))
}

struct WorkStack {
    items: Vec<ConfInterval>,
    per_round: FxHashMap<u64, usize>,
    consecutive: bool,
    max_height: usize,
}

impl WorkStack {
    fn push(&mut self, eta: ConfInterval) {
        let count = self.per_round.entry(eta.r).or_default();
        if *count > 0 && self.items.last().is_some_and(|t| t.r != eta.r) {
            self.consecutive = false;
        }
        *count += 1;
        self.items.push(eta);
        self.max_height = self.max_height.max(self.items.len());
    }

    fn pop(&mut self) -> Option<ConfInterval> {
        let eta = self.items.pop()?;
        *self.per_round.get_mut(&eta.r).expect("counted") -= 1;
        Some(eta)
    }
}

/// Runs the work-stack procedure literally: seed the claims about the whole
/// run, pop one claim at a time, push all CND1 children of a basic claim
/// and one part of every CND2 pair of a split claim. The part is chosen by
/// the same memoized evaluation that [`complement_decide_pd`] uses, so the
/// run succeeds exactly when some run does. At most `budget.config_cap`
/// stack operations are performed.
pub fn complement_trace_pd(
    m: &MachineSpec,
    x: &str,
    budget: RunBudget,
    record: bool,
) -> Result<PdTrace, MachineError> {
    let (slim, t_x) = match prepare(m, x, budget)? {
        Ok(p) => p,
        Err(exhausted) => {
            return Ok(PdTrace {
                t_x: None,
                conf_count: 0,
                outcome: TraceOutcome::Unknown { exhausted },
                event_count: 0,
                max_height: 0,
                consecutive: true,
                events: Vec::new(),
            })
        }
    };
    let space = IntervalSpace::new(&slim, x, t_x)?;
    let mut re = Realizer::new(&space);
    let mut stack = WorkStack {
        items: Vec::new(),
        per_round: FxHashMap::default(),
        consecutive: true,
        max_height: 0,
    };
    let mut events = Vec::new();
    let mut count = 0u64;
    // Largest refuted `s` per (C, C', l). For `l ≥ 2` realizability only
    // grows with `s`, so a refutation covers the claims with fewer visits.
    // A claim counts as refuted once the stack has shrunk back below its
    // children; claims still open are ancestors of the current one.
    let mut refuted: FxHashMap<(u64, u64, u64), u64> = FxHashMap::default();
    let mut open: Vec<((u64, u64, u64), u64, usize)> = Vec::new();
    let covers = |refuted: &FxHashMap<(u64, u64, u64), u64>, key, s: u64| {
        refuted
            .get(&key)
            .is_some_and(|&top| top == s || (key.2 >= 2 && s < top))
    };
    let mut log = |phase, eta: &ConfInterval, height, count: &mut u64| {
        *count += 1;
        if record {
            events.push(TraceEvent {
                phase,
                interval: eta.clone(),
                height,
            });
        }
    };

    if let Some(fin) = space.accepting() {
        for l in 0..=t_x {
            let eta = ConfInterval {
                from: space.initial(),
                s: 0,
                to: fin.clone(),
                l,
                r: 0,
            };
            stack.push(eta.clone());
            log(Phase::Seed, &eta, stack.items.len(), &mut count);
        }
    }

    let outcome = loop {
        if count > budget.config_cap as u64 {
            break TraceOutcome::Unknown {
                exhausted: Exhaustion::ConfigCap,
            };
        }
        while open.last().is_some_and(|o| o.2 >= stack.items.len()) {
            let (key, s, _) = open.pop().expect("nonempty");
            let top = refuted.entry(key).or_insert(s);
            *top = (*top).max(s);
        }
        let Some(eta) = stack.pop() else {
            break TraceOutcome::Accept;
        };
        log(Phase::Pop, &eta, stack.items.len(), &mut count);
        let (c, d) = (re.idx(&eta.from), re.idx(&eta.to));
        if covers(&refuted, (c, d, eta.l), eta.s) {
            log(Phase::Repeat, &eta, stack.items.len(), &mut count);
            continue;
        }
        open.push(((c, d, eta.l), eta.s, stack.items.len()));
        match (eta.s, eta.l) {
            (0, 0) | (0, 1) => {
                let holds = if eta.l == 0 {
                    eta.from == eta.to
                } else {
                    space.flats(&eta.from).contains(&eta.to)
                };
                if holds {
                    log(Phase::Failed, &eta, stack.items.len(), &mut count);
                    break TraceOutcome::Reject { interval: eta };
                }
                log(Phase::Refuted, &eta, stack.items.len(), &mut count);
            }
            (_, 0 | 1) => log(Phase::Refuted, &eta, stack.items.len(), &mut count),
            (0, l) => {
                let inner = space.pop_predecessors(&eta.to, &eta.from);
                for c1 in space.pushes(&eta.from) {
                    for s1 in 0..t_x {
                        for c2 in &inner {
                            let child = ConfInterval {
                                from: c1.clone(),
                                s: s1,
                                to: c2.clone(),
                                l: l - 2,
                                r: eta.r + 1,
                            };
                            debug_assert_eq!(cnd1(&space, &eta, &child), Ok(true));
                            stack.push(child.clone());
                            log(Phase::Universal, &child, stack.items.len(), &mut count);
                        }
                    }
                }
            }
            (s, l) => {
                for mid in 0..space.conf_count() {
                    let mid_conf = space.conf_at(mid).expect("in range");
                    for l1 in 0..=l {
                        let first = ConfInterval {
                            from: eta.from.clone(),
                            s: 0,
                            to: mid_conf.clone(),
                            l: l1,
                            r: eta.r,
                        };
                        let second = ConfInterval {
                            from: mid_conf.clone(),
                            s: s - 1,
                            to: eta.to.clone(),
                            l: l - l1,
                            r: eta.r,
                        };
                        // Push a part that can be refuted, preferring one
                        // whose refutation takes no further expansion.
                        let immediate = |eta: &ConfInterval, key| {
                            covers(&refuted, key, eta.s)
                                || eta.l < 2
                                || (eta.s == 0
                                    && space.pop_predecessors(&eta.to, &eta.from).is_empty())
                        };
                        let take_second = if re.holds(c, 0, mid, l1) {
                            true
                        } else if re.holds(mid, s - 1, d, l - l1) {
                            false
                        } else {
                            !immediate(&first, (c, mid, l1)) && immediate(&second, (mid, d, l - l1))
                        };
                        let chosen = if take_second { second } else { first };
                        stack.push(chosen.clone());
                        log(Phase::Choice, &chosen, stack.items.len(), &mut count);
                    }
                }
            }
        }
        if record {
            let rounds: Vec<u64> = stack.items.iter().map(|e| e.r).collect();
            stack.consecutive &= rounds_consecutive(&rounds);
        }
    };
    Ok(PdTrace {
        t_x: Some(t_x),
        conf_count: space.conf_count(),
        outcome,
        event_count: count,
        max_height: stack.max_height,
        consecutive: stack.consecutive,
        events,
    })
}
