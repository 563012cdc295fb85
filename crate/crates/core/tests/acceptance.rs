//! One PASS/FAIL line per acceptance criterion. Run with `--nocapture` to
//! see the lines; the test fails if any criterion fails.

use std::collections::{BTreeSet, VecDeque};
use std::io::Write;
use std::time::{Duration, Instant};

use counterlab::counterprog::{
    pair_decode, pair_encode, proc_produce_p, proc_update, proc_zero_test, Update, CT1, CT2, CT3,
    CT4,
};
use counterlab::executor::{counter_peaks, default_step_cap, explore_with, reachable_exact};
use counterlab::families::{build_leq_2dcta, leq_scaled, PromiseFamily};
use counterlab::icount::{audit_ic, complement_decide_ic, layer_counts, register_bound};
use counterlab::machine::{StackSpec, BOTTOM};
use counterlab::oracle::{coherence_tally, cross_check, strings_up_to, successors};
use counterlab::pdcomplement::{complement_decide_pd, complement_trace_pd, TraceOutcome};
use counterlab::random::{random_definite_machine, rng, Shape};
use counterlab::transforms::{eliminate_counters, pair_counters, Modulus};
use counterlab::{
    normalize_slim, stack_state_complexity, Configuration, MachineSpec, RunBudget, Stepper,
};

mod common;

use common::{check_run, fixture, random_slim};

/// The step cap every original machine runs under.
const CAP500: RunBudget = RunBudget {
    step_cap: 500,
    config_cap: 200_000,
};
/// Transformed machines take many steps per original step.
const DERIVED: RunBudget = RunBudget {
    step_cap: 2_000_000,
    config_cap: 2_000_000,
};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn pairing_round_trip() -> Outcome {
    let mut cases = 0u64;
    for p in 1..=50 {
        for i1 in 0..p {
            for i2 in 0..p {
                let v = pair_encode(i1, i2, p).unwrap();
                if pair_decode(v, p).unwrap() != (i1, i2) {
                    return outcome(false, format!("p={p} ({i1},{i2}) -> {v}"));
                }
                cases += 1;
            }
        }
    }
    outcome(true, format!("{cases} pairs"))
}

fn procedures() -> Outcome {
    let mut calls = 0;
    for n in 1..=4usize {
        for len in 0..=4 {
            let x = "a".repeat(len);
            for t in 1..=3u32 {
                let (env, _) = proc_produce_p(n, &x, t).unwrap();
                let want = ((n * len) as u64).pow(t);
                if env.get(CT2) != want || env.get(CT1) + env.get(CT4) != 0 {
                    return outcome(false, format!("produce_p n={n} |x|={len} t={t}"));
                }
                calls += 1;
            }
        }
    }
    let p = 20;
    let clean = |env: &counterlab::counterprog::CounterEnv| {
        env.get(CT1) == 0 && env.get(CT4) == 0 && env.get(CT2) == p
    };
    for i1 in 0..p {
        for i2 in 0..p {
            let v = i1 * p + i2;
            let (flags, env) = proc_zero_test(i1, i2, p).unwrap();
            if flags != (i1 == 0, i2 == 0) || env.get(CT3) != v || !clean(&env) {
                return outcome(false, format!("zero test ({i1},{i2})"));
            }
            calls += 1;
            for (j, op) in [
                (1, Update::Inc),
                (1, Update::Dec),
                (2, Update::Inc),
                (2, Update::Dec),
            ] {
                let (a, b) = match (j, op) {
                    (1, Update::Inc) => (i1 + 1, i2),
                    (1, Update::Dec) => (i1.wrapping_sub(1), i2),
                    (2, Update::Inc) => (i1, i2 + 1),
                    _ => (i1, i2.wrapping_sub(1)),
                };
                let legal = a < p && b < p;
                match proc_update(i1, i2, p, j, op) {
                    Ok((w, env)) if legal && w == a * p + b && clean(&env) => {}
                    Err(_) if !legal => {}
                    _ => return outcome(false, format!("update {j} {op:?} on ({i1},{i2})")),
                }
                calls += 1;
            }
        }
    }
    outcome(true, format!("{calls} calls"))
}

fn counter_fusion() -> Outcome {
    let (mut cases, mut unknown, mut discarded) = (0usize, 0usize, 0usize);
    let mut disagreements = Vec::new();
    for seed in 0..20 {
        let (m, d) = random_definite_machine(
            &Shape::counter_machine(3, 2),
            &mut rng(1000 + seed),
            "f",
            4,
            CAP500,
        );
        discarded += d;
        let inputs = strings_up_to(&m.alphabet, 4);
        let mut p = 2;
        for x in &inputs {
            p = p.max(counter_peaks(&m, x, CAP500).unwrap().unwrap()[1] as u64 + 1);
        }
        let f = pair_counters(&m, 0, 1, Modulus::Fixed(p)).unwrap();
        let stepper = Stepper::new(&f);
        for x in &inputs {
            cases += 1;
            let a = cross_check(&m, x, CAP500).unwrap().unwrap();
            let b = explore_with(&stepper, &stepper.tape(x).unwrap(), DERIVED).verdict;
            match b.as_bool() {
                None => unknown += 1,
                Some(v) if Some(v) != a.as_bool() => {
                    disagreements.push(format!("seed {seed} {x:?}"))
                }
                _ => {}
            }
        }
    }
    let pass = disagreements.is_empty() && unknown * 20 < cases;
    outcome(
        pass,
        format!(
            "20 machines, {cases} cases, {} disagreements, {unknown} unknown, {discarded} draws discarded",
            disagreements.len()
        ),
    )
}

fn inductive_counting() -> Outcome {
    let (mut cases, mut layers, mut worst) = (0usize, 0usize, i64::MIN);
    for seed in 0..50u64 {
        let k = 1 + (seed % 2) as usize;
        let m = random_definite_machine(
            &Shape::counter_machine(3, k),
            &mut rng(2000 + seed),
            "c",
            4,
            CAP500,
        )
        .0;
        for x in strings_up_to(&m.alphabet, 4) {
            let d = cross_check(&m, &x, CAP500).unwrap().unwrap();
            let c = complement_decide_ic(&m, &x, CAP500).unwrap();
            if c.as_bool() != d.as_bool().map(|b| !b) {
                return outcome(
                    false,
                    format!("seed {seed} on {x:?}: {} vs {}", c.label(), d.label()),
                );
            }
            cases += 1;
            for l in layer_counts(&m, &x, 8, CAP500).unwrap() {
                let v = reachable_exact(&m, &x, l.i, CAP500.config_cap).unwrap();
                if l.count as usize != v.len() {
                    return outcome(false, format!("seed {seed} on {x:?}: layer {}", l.i));
                }
                layers += 1;
            }
        }
        for x in ["", "01", "1100"] {
            let a = audit_ic(&m, x, CAP500).unwrap();
            if a.max_simultaneous > register_bound(k) {
                return outcome(
                    false,
                    format!(
                        "seed {seed}: {} counters > {}",
                        a.max_simultaneous,
                        register_bound(k)
                    ),
                );
            }
            worst = worst.max(a.max_simultaneous as i64 - 5 * k as i64);
        }
    }
    outcome(
        true,
        format!("50 machines, {cases} definite cases, {layers} layers, max audit 5k{worst:+}"),
    )
}

fn pushdown_complement() -> Outcome {
    let trace_cap = RunBudget {
        step_cap: 500,
        config_cap: 100_000,
    };
    let (mut cases, mut unknown, mut traces, mut finished) = (0usize, 0usize, 0usize, 0usize);
    for seed in 0..20 {
        let m = random_slim(seed);
        for x in strings_up_to(&m.alphabet, 3) {
            let d = cross_check(&m, &x, CAP500).unwrap().unwrap();
            let c = complement_decide_pd(&m, &x, CAP500).unwrap();
            if !(c.is_definite() && d.is_definite()) {
                unknown += 1;
                continue;
            }
            if c.as_bool() != d.as_bool().map(|b| !b) {
                return outcome(false, format!("seed {seed} on {x:?}"));
            }
            cases += 1;
            let t = complement_trace_pd(&m, &x, trace_cap, false).unwrap();
            if !t.consecutive {
                return outcome(false, format!("rounds split on seed {seed} {x:?}"));
            }
            traces += 1;
            if !matches!(t.outcome, TraceOutcome::Unknown { .. }) {
                finished += 1;
                if t.verdict().as_bool() != c.as_bool() {
                    return outcome(false, format!("trace verdict on seed {seed} {x:?}"));
                }
            }
        }
    }
    let balanced = normalize_slim(&fixture("pd_balanced")).unwrap();
    let two = normalize_slim(&fixture("two_rules")).unwrap();
    let mut checked = 0;
    for x in ["", "ab", "aabb", "aaabbb"] {
        checked += check_run(&balanced, x);
    }
    for x in ["a", "b", "ab", "ba"] {
        checked += check_run(&two, x);
    }
    outcome(
        unknown == 0,
        format!(
            "20 machines, {cases} definite, {unknown} unknown, {checked} decomposition checks, \
             {traces} traces consecutive ({finished} finished within {} events)",
            trace_cap.config_cap
        ),
    )
}

fn counter_elimination() -> Outcome {
    let m = build_leq_2dcta(3);
    let family = leq_scaled();
    let mut detail = Vec::new();
    for n in 0..=3usize {
        let len = 2 * n + 1;
        let r = default_step_cap(n, len, 3) as u32;
        let e = eliminate_counters(&m, r);
        let product = m.states.len() * (r as usize + 1);
        if e.counters != 0 || !(product..=product + 1).contains(&e.states.len()) {
            return outcome(
                false,
                format!("n={n}: {} states, want {product}", e.states.len()),
            );
        }
        let stepper = Stepper::new(&e);
        let budget = RunBudget::new(default_step_cap(n, len, 3), 1_000_000);
        for x in family.promised(n, len) {
            let a = cross_check(&m, &x, budget).unwrap().unwrap();
            let b = explore_with(&stepper, &stepper.tape(&x).unwrap(), budget).verdict;
            if a.as_bool().is_none() || a.as_bool() != b.as_bool() {
                return outcome(false, format!("n={n} on {x:?}"));
            }
        }
        detail.push(format!("n={n}: r={r}, {} states", e.states.len()));
    }
    outcome(true, detail.join("; "))
}

fn complement_collapse() -> Outcome {
    let family = leq_scaled();
    let mut cases = 0;
    for n in 0..=3usize {
        let m = build_leq_2dcta(n);
        let ceiling = (2 * n + 1) as u32;
        let e = eliminate_counters(&m, ceiling);
        for x in family.promised(n, 2 * n + 1) {
            let d = cross_check(&m, &x, CAP500).unwrap().unwrap();
            let c = complement_decide_ic(&e, &x, CAP500).unwrap();
            if d.as_bool().is_none() || c.as_bool() != d.as_bool().map(|b| !b) {
                return outcome(
                    false,
                    format!("n={n} on {x:?}: {} vs {}", c.label(), d.label()),
                );
            }
            cases += 1;
        }
    }
    outcome(true, format!("{cases} promised instances, n <= 3"))
}

/// Breadth-first over the oracle's successor function; true iff no
/// reachable configuration has two successors.
fn deterministic_everywhere(m: &MachineSpec, x: &str) -> bool {
    let tape: Vec<char> = format!(">{x}<").chars().collect();
    let start = Configuration::initial(m);
    let mut seen = BTreeSet::from([start.clone()]);
    let mut queue = VecDeque::from([start]);
    while let Some(c) = queue.pop_front() {
        let next = successors(m, &tape, &c);
        if next.len() > 1 {
            return false;
        }
        for d in next {
            if seen.insert(d.clone()) {
                queue.push_back(d);
            }
        }
    }
    true
}

fn leq_solver() -> Outcome {
    let family = leq_scaled();
    let mut detail = Vec::new();
    for n in 0..=3usize {
        let m = build_leq_2dcta(n);
        let len = 2 * n + 1;
        let strings = strings_up_to(&family.alphabet(), len);
        let strings: Vec<&String> = strings
            .iter()
            .filter(|x| x.chars().count() == len)
            .collect();
        let mut accepted = 0u64;
        for x in &strings {
            let v = cross_check(&m, x, CAP500).unwrap().unwrap();
            if v.as_bool() != Some(family.is_positive(n, x)) || !deterministic_everywhere(&m, x) {
                return outcome(false, format!("n={n} on {x:?}"));
            }
            accepted += u64::from(v.is_accept());
        }
        if strings.len() as u64 != 3u64.pow(len as u32) || accepted != 1 << n {
            return outcome(false, format!("n={n}: {accepted} accepted"));
        }
        detail.push(format!("n={n}: {accepted}/{}", strings.len()));
    }
    outcome(true, detail.join(", "))
}

/// `|Γ^{≤e}|` by listing the words.
fn words_up_to(gamma: &[char], e: usize) -> usize {
    let mut all = vec![String::new()];
    let mut layer = vec![String::new()];
    for _ in 0..e {
        layer = layer
            .iter()
            .flat_map(|w| gamma.iter().map(move |c| format!("{w}{c}")))
            .collect();
        all.extend(layer.iter().cloned());
    }
    all.len()
}

fn metrics() -> Outcome {
    let mut machines = vec![fixture("pd_balanced"), fixture("two_rules")];
    let mut wide = fixture("pd_balanced");
    wide.stack = Some(StackSpec {
        alphabet: vec![BOTTOM, 'A', 'B'],
        push_size: 3,
    });
    machines.push(wide);
    for m in &machines {
        let s = m.stack.as_ref().unwrap();
        let want = m.states.len() * words_up_to(&s.alphabet, s.push_size);
        if stack_state_complexity(m).unwrap() != want as u128 {
            return outcome(false, m.name.clone());
        }
    }
    outcome(true, format!("{} machines", machines.len()))
}

#[test]
fn acceptance() {
    type Criterion = (&'static str, Duration, fn() -> Outcome);
    let criteria: [Criterion; 9] = [
        (
            "pairing round-trip, p <= 50",
            Duration::from_secs(1),
            pairing_round_trip,
        ),
        ("counter procedures", Duration::from_secs(10), procedures),
        (
            "counter fusion agrees under cap 500",
            Duration::from_secs(300),
            counter_fusion,
        ),
        (
            "inductive counting",
            Duration::from_secs(300),
            inductive_counting,
        ),
        (
            "pushdown complementation",
            Duration::from_secs(600),
            pushdown_complement,
        ),
        (
            "counter elimination, r = cap",
            Duration::from_secs(60),
            counter_elimination,
        ),
        (
            "complement collapse, ceiling 2n+1",
            Duration::from_secs(120),
            complement_collapse,
        ),
        ("L_EQ solver, n <= 3", Duration::from_secs(60), leq_solver),
        ("ssc metric", Duration::from_secs(1), metrics),
    ];
    let mut failed = Vec::new();
    for (i, (name, limit, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let mut o = run();
        let took = start.elapsed();
        if took > *limit {
            o.pass = false;
            o.detail = format!("{} (over the {}s limit)", o.detail, limit.as_secs());
        }
        let tag = if o.pass { "PASS" } else { "FAIL" };
        report(format!(
            "{tag} {:>2} {name}: {} [{:.2}s]",
            i + 1,
            o.detail,
            took.as_secs_f64()
        ));
        if !o.pass {
            failed.push(i + 1);
        }
    }
    let (checks, contradictions) = coherence_tally();
    let pass = contradictions == 0 && checks > 0;
    let tag = if pass { "PASS" } else { "FAIL" };
    report(format!(
        "{tag} 10 oracle/executor coherence: {contradictions} contradictions in {checks} checks"
    ));
    if !pass {
        failed.push(10);
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}

// Straight to the stdout handle so the lines survive libtest's capture.
fn report(line: String) {
    let mut out = std::io::stdout().lock();
    writeln!(out, "{line}").unwrap();
    out.flush().unwrap();
}
