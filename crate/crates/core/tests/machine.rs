use std::collections::BTreeSet;

use serde_json::Value;

use counterlab::executor::{count_accepting_paths, reachable_exact};
use counterlab::families::{
    build_leq_2dcta, induced_family, leq_scaled, PromiseFamily, SizeParameter,
};
use counterlab::machine::{Mode, BOTTOM};
use counterlab::oracle::{
    brute_force_decide, check_unambiguous, cross_check, strings_up_to, successors,
};
use counterlab::random::{random_machine, rng, Shape};
use counterlab::{
    decide, parse_machine, stack_state_complexity, state_complexity, step_relation, to_json,
    Configuration, MachineSpec, RunBudget,
};

const BUDGET: RunBudget = RunBudget {
    step_cap: 2_000,
    config_cap: 200_000,
};

fn fixture(name: &str) -> MachineSpec {
    let path = format!("{}/fixtures/{name}.machine", env!("CARGO_MANIFEST_DIR"));
    parse_machine(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn config(m: &MachineSpec, v: &Value) -> Configuration {
    Configuration {
        state: m.state_id(v["state"].as_str().unwrap()).unwrap(),
        head: v["head"].as_u64().unwrap() as usize,
        counters: v["counters"]
            .as_array()
            .unwrap()
            .iter()
            .map(|c| c.as_u64().unwrap() as u32)
            .collect(),
        stack: v["stack"]
            .as_array()
            .unwrap()
            .iter()
            .map(|c| c.as_str().unwrap().chars().next().unwrap())
            .collect(),
    }
}

#[test]
fn leq_fixture_is_the_builder_output() {
    let m = fixture("leq_2dcta");
    assert_eq!(m, build_leq_2dcta(1));
    assert_eq!(m.mode, Mode::Deterministic);
    assert_eq!(m.counters, 1);
    assert_eq!(m.alphabet, vec!['0', '1', '#']);
    let distinct: BTreeSet<&String> = m.states.iter().collect();
    assert_eq!(state_complexity(&m), distinct.len());
    assert_eq!(parse_machine(&to_json(&m)).unwrap(), m);
}

#[test]
fn leq_fixture_verdicts() {
    let m = fixture("leq_2dcta");
    assert!(decide(&m, "01#01", BUDGET).unwrap().is_accept());
    assert!(decide(&m, "01#00", BUDGET).unwrap().is_reject());
    assert!(decide(&m, "0#0", BUDGET).unwrap().is_accept());
    let family = leq_scaled();
    for n in 0..=2 {
        for x in family.promised(n, 5) {
            let v = cross_check(&m, &x, BUDGET).unwrap().unwrap();
            assert_eq!(v.as_bool(), Some(family.is_positive(n, &x)), "{x:?}");
        }
    }
}

#[test]
fn two_rule_fixture_forks() {
    let m = fixture("two_rules");
    let path = format!(
        "{}/fixtures/two_rules.expect.json",
        env!("CARGO_MANIFEST_DIR")
    );
    let expect: Value = serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap();
    let x = expect["input"].as_str().unwrap();
    let from = config(&m, &expect["from"]);
    assert_eq!(from, Configuration::initial(&m));
    let want: BTreeSet<Configuration> = expect["successors"]
        .as_array()
        .unwrap()
        .iter()
        .map(|v| config(&m, v))
        .collect();
    assert_eq!(want.len(), 2);
    assert_eq!(step_relation(&m, x, &from).unwrap(), want);

    let tape: Vec<char> = format!(">{x}<").chars().collect();
    let scanned: BTreeSet<Configuration> = successors(&m, &tape, &from).into_iter().collect();
    assert_eq!(scanned, want);
    let layer: BTreeSet<Configuration> = reachable_exact(&m, x, 1, 1000)
        .unwrap()
        .into_iter()
        .collect();
    assert_eq!(layer, want);
}

#[test]
fn ambiguity_is_found() {
    let family = induced_family(|x| !x.is_empty(), SizeParameter::length(), vec!['a']);
    let amb = fixture("ambiguous");
    let report = check_unambiguous(&amb, &family, 2, 2, BUDGET).unwrap();
    assert!(!report.unambiguous);
    let w = report.witness.unwrap();
    assert_eq!(w.input, "aa");
    assert_ne!(w.paths[0], w.paths[1]);

    let leq = fixture("leq_2dcta");
    for n in 0..=2 {
        assert!(
            check_unambiguous(&leq, &leq_scaled(), n, 5, BUDGET)
                .unwrap()
                .unambiguous
        );
        for x in leq_scaled().promised(n, 5) {
            let paths = count_accepting_paths(&leq, &x, BUDGET, 10).unwrap();
            assert!(paths.exact && paths.count <= 1);
        }
    }
}

#[test]
fn constant_fixtures() {
    let acc = fixture("accept_all");
    let rej = fixture("reject_all");
    for x in strings_up_to(&acc.alphabet, 3) {
        assert!(decide(&acc, &x, BUDGET).unwrap().is_accept());
        assert!(decide(&rej, &x, BUDGET).unwrap().is_reject());
    }
}

#[test]
fn ssc_of_fixtures() {
    for name in ["pd_balanced", "two_rules"] {
        let m = fixture(name);
        let gamma = &m.stack.as_ref().unwrap().alphabet;
        assert_eq!(gamma[0], BOTTOM);
        // Words of length 0 and 1 over Γ, listed one by one.
        let mut words = vec![String::new()];
        words.extend(gamma.iter().map(|c| c.to_string()));
        assert_eq!(
            stack_state_complexity(&m).unwrap(),
            (m.states.len() * words.len()) as u128
        );
    }
    assert!(stack_state_complexity(&fixture("leq_2dcta")).is_err());
}

#[test]
fn executor_agrees_with_oracle_on_random_machines() {
    for seed in 0..30 {
        let shape = if seed % 2 == 0 {
            Shape::counter_machine(3, 2)
        } else {
            Shape::pushdown(3, 1)
        };
        let m = random_machine(&shape, &mut rng(seed), "r");
        for x in strings_up_to(&m.alphabet, 3) {
            let exec = decide(&m, &x, BUDGET).unwrap();
            let oracle = brute_force_decide(&m, &x, BUDGET).unwrap();
            if let (Some(a), Some(b)) = (exec.as_bool(), oracle.as_bool()) {
                assert_eq!(a, b, "seed {seed} on {x:?}");
            }
        }
    }
}
