use std::collections::BTreeSet;

use counterlab::executor::{reachable_exact, runtime_max};
use counterlab::icount::{
    audit_ic, complement_decide_ic, complement_run_ic, complement_to_layer,
    guessing_mode_exhaustive, guessing_mode_run, layer_counts, register_bound, ChoicePoint,
    Chooser, Corruption, GuessOutcome, SeededChooser,
};
use counterlab::machine::{Configuration, MachineSpec, Stepper, Tape};
use counterlab::oracle::strings_up_to;
use counterlab::random::{random_definite_machine, rng, Shape};
use counterlab::{decide, parse_machine, RunBudget};

const BUDGET: RunBudget = RunBudget {
    step_cap: 500,
    config_cap: 1_000_000,
};

fn halting_start(accepting: bool) -> MachineSpec {
    let (acc, rej) = if accepting {
        (r#"["q"]"#, "[]")
    } else {
        ("[]", r#"["q"]"#)
    };
    parse_machine(&format!(
        r#"{{"name": "h", "mode": "deterministic", "states": ["q"], "alphabet": ["0"],
            "counters": 1, "stack": null, "initial": "q", "accepting": {acc},
            "rejecting": {rej}, "transitions": []}}"#
    ))
    .unwrap()
}

#[test]
fn halting_starts() {
    let rej = halting_start(false);
    let acc = halting_start(true);
    for x in ["", "0", "00"] {
        assert!(complement_decide_ic(&rej, x, BUDGET).unwrap().is_accept());
        assert!(complement_decide_ic(&acc, x, BUDGET).unwrap().is_reject());
    }
    let layers = layer_counts(&rej, "0", 4, BUDGET).unwrap();
    assert_eq!(layers[0].count, 1);
    assert!(layers[1..].iter().all(|l| l.count == 0));
}

#[test]
fn complement_matches_executor() {
    for (seed, k) in [(1, 1), (2, 1), (3, 2), (4, 2), (5, 1), (6, 2)] {
        let m = random_definite_machine(
            &Shape::counter_machine(3, k),
            &mut rng(seed),
            "m",
            3,
            BUDGET,
        )
        .0;
        for x in strings_up_to(&m.alphabet, 3) {
            let d = decide(&m, &x, BUDGET).unwrap();
            let c = complement_decide_ic(&m, &x, BUDGET).unwrap();
            assert!(c.is_definite());
            assert_eq!(d.as_bool(), c.as_bool().map(|b| !b), "seed {seed} on {x:?}");
        }
    }
}

#[test]
fn layers_match_reachable_exact() {
    let m = random_definite_machine(&Shape::counter_machine(3, 2), &mut rng(8), "m", 2, BUDGET).0;
    for x in strings_up_to(&m.alphabet, 2) {
        let layers = layer_counts(&m, &x, 8, BUDGET).unwrap();
        assert_eq!(layers.len(), 9);
        for l in &layers {
            let v = reachable_exact(&m, &x, l.i, BUDGET.config_cap).unwrap();
            assert_eq!(l.count as usize, v.len());
            assert_eq!(l.layer, v);
        }
    }
}

#[test]
fn audit_stays_under_bound() {
    assert_eq!(register_bound(1), 18);
    assert_eq!(register_bound(2), 23);
    for k in [1, 2] {
        let m = random_definite_machine(
            &Shape::counter_machine(3, k),
            &mut rng(20 + k as u64),
            "m",
            2,
            BUDGET,
        )
        .0;
        let a = audit_ic(&m, "01", BUDGET).unwrap();
        assert!(a.max_simultaneous <= register_bound(k));
        assert_eq!(a, audit_ic(&m, "01", BUDGET).unwrap());
        assert!(a.registers.contains_key("CT10"));
    }
}

/// Makes the choices that keep a run alive, from exact layers.
struct Guided<'m> {
    stepper: Stepper<'m>,
    tape: Tape,
    layers: Vec<BTreeSet<Configuration>>,
}

impl<'m> Guided<'m> {
    fn new(m: &'m MachineSpec, x: &str, r: u64) -> Self {
        let layers = (0..=r)
            .map(|i| {
                reachable_exact(m, x, i, BUDGET.config_cap)
                    .unwrap()
                    .into_iter()
                    .collect()
            })
            .collect();
        let stepper = Stepper::new(m);
        let tape = stepper.tape(x).unwrap();
        Guided {
            stepper,
            tape,
            layers,
        }
    }

    fn reaches(&self, from: &Configuration, target: &Configuration, steps: u64) -> bool {
        let mut layer = vec![from.clone()];
        for _ in 0..steps {
            let mut next: Vec<Configuration> = layer
                .iter()
                .flat_map(|c| self.stepper.successors(&self.tape, c))
                .collect();
            next.sort();
            next.dedup();
            layer = next;
        }
        layer.contains(target)
    }
}

impl Chooser for Guided<'_> {
    fn choose(&mut self, point: ChoicePoint<'_>, _arity: usize) -> usize {
        match point {
            ChoicePoint::Process {
                layer, candidate, ..
            } => usize::from(!self.layers[layer as usize].contains(candidate)),
            ChoicePoint::Step {
                options,
                target,
                remaining,
            } => options
                .iter()
                .position(|o| self.reaches(o, target, remaining - 1))
                .unwrap_or(0),
        }
    }
}

fn tiny_machines() -> Vec<MachineSpec> {
    (0..40)
        .map(|seed| {
            random_definite_machine(
                &Shape::counter_machine(2, 1),
                &mut rng(300 + seed),
                "t",
                1,
                BUDGET,
            )
            .0
        })
        .collect()
}

#[test]
fn guided_runs_match_exact_mode() {
    for m in tiny_machines().iter().take(10) {
        for x in ["", "0", "1"] {
            let r = 3;
            let exact = complement_to_layer(m, x, r, BUDGET).unwrap();
            let out = guessing_mode_run(m, x, r, &mut Guided::new(m, x, r), None).unwrap();
            match out {
                GuessOutcome::Accept => assert!(exact.is_accept()),
                GuessOutcome::Reject { .. } => assert!(exact.is_reject()),
                GuessOutcome::Abort { reason, .. } => panic!("guided run aborted: {reason}"),
            }
        }
    }
}

#[test]
fn corrupted_count_aborts() {
    let m = &tiny_machines()[0];
    let out = guessing_mode_run(
        m,
        "0",
        3,
        &mut Guided::new(m, "0", 3),
        Some(Corruption { layer: 1, delta: 1 }),
    )
    .unwrap();
    assert!(
        matches!(out, GuessOutcome::Abort { layer: 2, .. }),
        "{out:?}"
    );
}

#[test]
fn random_runs_are_sound() {
    for m in tiny_machines().iter().take(5) {
        for seed in 0..20 {
            let out = guessing_mode_run(m, "1", 2, &mut SeededChooser::new(seed), None).unwrap();
            let exact = complement_to_layer(m, "1", 2, BUDGET).unwrap();
            match out {
                GuessOutcome::Accept => assert!(exact.is_accept()),
                GuessOutcome::Reject { .. } => assert!(exact.is_reject()),
                GuessOutcome::Abort { .. } => {}
            }
        }
    }
}

#[test]
fn exhaustive_enumeration_finds_the_verdict() {
    let (mut checked, mut rejected) = (0, 0);
    for m in tiny_machines() {
        for x in ["", "0", "1"] {
            let r = match runtime_max(&m, x, BUDGET).unwrap().steps() {
                Some(t) if t <= 4 => t + 1,
                _ => continue,
            };
            let summary = guessing_mode_exhaustive(&m, x, r).unwrap();
            let rejects = decide(&m, x, BUDGET).unwrap().is_reject();
            assert_eq!(summary.accepting_run, rejects, "{x:?}");
            checked += 1;
            rejected += usize::from(rejects);
            if rejects {
                for (i, values) in summary.surviving.iter().enumerate() {
                    let n = reachable_exact(&m, x, i as u64, BUDGET.config_cap)
                        .unwrap()
                        .len();
                    assert_eq!(values, &BTreeSet::from([n as u64]));
                }
            }
        }
    }
    assert!(
        checked >= 30 && rejected >= 5,
        "{checked} checked, {rejected} rejected"
    );
}

#[test]
fn run_reports_layers() {
    let m = &tiny_machines()[1];
    let run = complement_run_ic(m, "01", BUDGET).unwrap();
    assert_eq!(run.layers[0].count, 1);
    assert!(run.layers.iter().all(|l| l.count as usize == l.layer.len()));
}
