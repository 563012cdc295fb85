use counterlab::executor::counter_peaks;
use counterlab::machine::{CounterOp, Guard, Mode, Move, StackOp, TapeSymbol, TransitionRule};
use counterlab::oracle::{cross_check, strings_up_to};
use counterlab::random::{random_definite_machine, random_machine, rng, Shape};
use counterlab::transforms::{
    eliminate_counters, pair_counters, reduce_counters, reduce_counters_pd, Modulus, PairParams,
};
use counterlab::{decide, normalize_slim, MachineSpec, RunBudget, TransformError, Verdict};

const ORIGINAL: RunBudget = RunBudget {
    step_cap: 500,
    config_cap: 200_000,
};
const DERIVED: RunBudget = RunBudget {
    step_cap: 1_000_000,
    config_cap: 2_000_000,
};

/// One more than the largest value any counter in `idx` needs on `inputs`.
fn modulus_for(m: &MachineSpec, inputs: &[String], idx: &[usize]) -> u64 {
    let mut top = 1;
    for x in inputs {
        let peaks = counter_peaks(m, x, ORIGINAL).unwrap().expect("definite");
        for &i in idx {
            top = top.max(peaks[i] as u64 + 1);
        }
    }
    top
}

fn agree(m: &MachineSpec, t: &MachineSpec, inputs: &[String]) {
    for x in inputs {
        let a = decide(m, x, ORIGINAL).unwrap();
        let b = cross_check(t, x, DERIVED).unwrap().expect("coherent");
        assert!(b.is_definite(), "{}: unknown on {x:?}", t.name);
        assert_eq!(a.as_bool(), b.as_bool(), "{} on {x:?}", t.name);
    }
}

fn definite(shape: &Shape, seed: u64, max_len: usize) -> MachineSpec {
    random_definite_machine(
        shape,
        &mut rng(seed),
        &format!("r{seed}"),
        max_len,
        ORIGINAL,
    )
    .0
}

#[test]
fn untouched_pair_is_behavior_identical() {
    // A one-counter machine padded with two idle counters.
    let mut m = definite(&Shape::counter_machine(3, 1), 7, 4);
    m.counters = 3;
    for r in &mut m.transitions {
        r.guards.extend([Guard::Any, Guard::Any]);
        r.counter_ops.extend([CounterOp::Noop, CounterOp::Noop]);
    }
    let f = pair_counters(&m, 1, 2, Modulus::Fixed(3)).unwrap();
    assert_eq!(f.counters, 3 - 2 + 1 + 3);
    agree(&m, &f, &strings_up_to(&m.alphabet, 4));
}

#[test]
fn fusion_preserves_verdicts() {
    for seed in 0..6 {
        let m = definite(&Shape::counter_machine(3, 2), 100 + seed, 3);
        let inputs = strings_up_to(&m.alphabet, 3);
        let p = modulus_for(&m, &inputs, &[1]);
        let f = pair_counters(&m, 0, 1, Modulus::Fixed(p)).unwrap();
        assert_eq!(f.counters, 4);
        agree(&m, &f, &inputs);
    }
}

#[test]
fn sweep_modulus_matches_fixed() {
    let m = definite(&Shape::counter_machine(2, 2), 11, 2);
    let inputs = strings_up_to(&m.alphabet, 2);
    let f = pair_counters(&m, 1, 0, Modulus::Sweep { n: 3, t: 1 }).unwrap();
    for x in &inputs {
        let peak = counter_peaks(&m, x, ORIGINAL).unwrap().unwrap()[0] as usize;
        if peak < 3 * x.len() + 1 {
            assert_eq!(
                decide(&m, x, ORIGINAL).unwrap().as_bool(),
                decide(&f, x, DERIVED).unwrap().as_bool(),
                "{x:?}"
            );
        }
    }
}

#[test]
fn nested_pairs_share_scratch() {
    let m = definite(&Shape::counter_machine(2, 4), 21, 2);
    let inputs = strings_up_to(&m.alphabet, 2);
    let p = modulus_for(&m, &inputs, &[1, 3]);
    let once = pair_counters(&m, 0, 1, Modulus::Fixed(p)).unwrap();
    let first = PairParams::of(&once).unwrap();
    assert_eq!(once.counters, 6);
    // Original counters 2, 3 are now 1, 2.
    let twice = pair_counters(&once, 1, 2, Modulus::Fixed(999)).unwrap();
    let second = PairParams::of(&twice).unwrap();
    assert_eq!(twice.counters, 5);
    assert_eq!(second.scratch, first.scratch.map(|i| i - 1));
    assert_eq!(second.encoded, vec![0, 1]);
    assert_eq!(second.modulus, Modulus::Fixed(p));
    assert_eq!(
        pair_counters(&twice, 0, 1, Modulus::Fixed(p)).unwrap_err(),
        TransformError::NotPlain(0)
    );
    agree(&m, &twice, &inputs);
}

#[test]
fn pair_rejects_bad_indices() {
    let m = random_machine(&Shape::counter_machine(2, 2), &mut rng(1), "m");
    assert!(matches!(
        pair_counters(&m, 0, 2, Modulus::Fixed(4)),
        Err(TransformError::CounterIndex { index: 2, .. })
    ));
    assert!(pair_counters(&m, 1, 1, Modulus::Fixed(4)).is_err());
}

#[test]
fn overflow_rejects_instead_of_corrupting() {
    // Counts the input into counter 1 and accepts at ◁ only if it is nonzero.
    let m = counting_machine();
    let f = pair_counters(&m, 0, 1, Modulus::Fixed(3)).unwrap();
    assert!(decide(&f, "00", DERIVED).unwrap().is_accept());
    // Three increments reach p = 3: the run ends in the overflow state.
    assert!(decide(&f, "000", DERIVED).unwrap().is_reject());
    assert!(decide(&m, "000", ORIGINAL).unwrap().is_accept());
}

fn counting_machine() -> MachineSpec {
    let rule = |read, guards: [Guard; 2], to, movement, ops: [CounterOp; 2]| TransitionRule {
        from: 0,
        read,
        guards: guards.to_vec(),
        stack_top: None,
        to,
        movement,
        counter_ops: ops.to_vec(),
        stack_op: StackOp::None,
    };
    use CounterOp::*;
    use Guard::*;
    MachineSpec {
        name: "count".into(),
        mode: Mode::Deterministic,
        states: vec!["q".into(), "acc".into()],
        alphabet: vec!['0'],
        counters: 2,
        stack: None,
        initial: 0,
        accepting: vec![1],
        rejecting: vec![],
        transitions: vec![
            rule(
                TapeSymbol::LeftEnd,
                [Any, Any],
                0,
                Move::Right,
                [Noop, Noop],
            ),
            rule(
                TapeSymbol::Sym('0'),
                [Any, Any],
                0,
                Move::Right,
                [Noop, Inc],
            ),
            rule(
                TapeSymbol::RightEnd,
                [Any, Nonzero],
                1,
                Move::Stay,
                [Noop, Noop],
            ),
        ],
        provenance: None,
    }
}

#[test]
fn fused_machine_stays_deterministic() {
    let m = counting_machine();
    let f = pair_counters(&m, 1, 0, Modulus::Fixed(5)).unwrap();
    assert_eq!(f.mode, Mode::Deterministic);
    f.validate().unwrap();
}

#[test]
fn transforms_are_deterministic_functions() {
    let m = definite(&Shape::counter_machine(3, 2), 5, 2);
    let a = counterlab::to_json(&pair_counters(&m, 0, 1, Modulus::Fixed(4)).unwrap());
    let b = counterlab::to_json(&pair_counters(&m, 0, 1, Modulus::Fixed(4)).unwrap());
    assert_eq!(a, b);
    let m5 = random_machine(&Shape::counter_machine(3, 5), &mut rng(3), "m5");
    assert_eq!(
        counterlab::to_json(&reduce_counters(&m5, 3).unwrap()),
        counterlab::to_json(&reduce_counters(&m5, 3).unwrap())
    );
}

#[test]
fn reduce_four_is_identity() {
    let m = random_machine(&Shape::counter_machine(3, 4), &mut rng(9), "m4");
    let r = reduce_counters(&m, 5).unwrap();
    assert_eq!(r.transitions, m.transitions);
    assert_eq!(r.counters, 4);
    assert!(reduce_counters(
        &random_machine(&Shape::counter_machine(2, 3), &mut rng(9), "m3"),
        5
    )
    .is_err());
}

#[test]
fn reduce_five_and_six_counters() {
    for (k, seed) in [(5, 31), (5, 32), (6, 33)] {
        let m = definite(&Shape::counter_machine(3, k), seed, 3);
        let inputs = strings_up_to(&m.alphabet, 3);
        let p = modulus_for(&m, &inputs, &(0..k - 3).collect::<Vec<_>>()).max(2);
        let r = reduce_counters(&m, p).unwrap();
        assert_eq!(r.counters, 4);
        agree(&m, &r, &inputs);
    }
}

#[test]
fn reduce_pushdown_to_three() {
    let m3 = random_machine(&Shape::pushdown(2, 3), &mut rng(2), "pd3");
    assert_eq!(
        reduce_counters_pd(&m3, 4).unwrap().transitions,
        m3.transitions
    );
    for seed in [41, 42] {
        let raw = definite(&Shape::pushdown(3, 4), seed, 3);
        let m = normalize_slim(&raw).unwrap();
        let inputs = strings_up_to(&m.alphabet, 3);
        let p = modulus_for(&m, &inputs, &[0]).max(2);
        let r = reduce_counters_pd(&m, p).unwrap();
        assert_eq!(r.counters, 3);
        agree(&m, &r, &inputs);
    }
}

#[test]
fn pushdown_reduction_restores_the_stack() {
    // After every simulated move the separator and units are gone again:
    // on accepted inputs the witness passes only through stacks over the
    // original alphabet whenever it sits in an original state.
    let raw = definite(&Shape::pushdown(3, 4), 43, 2);
    let m = normalize_slim(&raw).unwrap();
    let inputs = strings_up_to(&m.alphabet, 2);
    let p = modulus_for(&m, &inputs, &[0]).max(2);
    let r = reduce_counters_pd(&m, p).unwrap();
    let original = &m.stack.as_ref().unwrap().alphabet;
    for x in &inputs {
        if let Verdict::Accept { witness } = decide(&r, x, DERIVED).unwrap() {
            for c in witness
                .iter()
                .filter(|c| (c.state as usize) < m.states.len())
            {
                assert!(c.stack.iter().all(|s| original.contains(s)));
            }
        }
    }
}

#[test]
fn elimination_product_size() {
    let mut m = random_machine(&Shape::counter_machine(2, 1), &mut rng(4), "two");
    let r = eliminate_counters(&m, 3);
    assert_eq!(r.counters, 0);
    let extra = r.states.len() - 8;
    assert!(extra <= 1);

    // No increments: r = 0 keeps the state count and the language.
    for rule in &mut m.transitions {
        if rule.counter_ops[0] == CounterOp::Inc {
            rule.counter_ops[0] = CounterOp::Noop;
        }
    }
    let flat = eliminate_counters(&m, 0);
    assert_eq!(flat.states.len(), m.states.len());
    for x in strings_up_to(&m.alphabet, 3) {
        assert_eq!(
            decide(&m, &x, ORIGINAL).unwrap().as_bool(),
            decide(&flat, &x, ORIGINAL).unwrap().as_bool()
        );
    }
}

#[test]
fn elimination_agrees_below_the_ceiling() {
    for seed in 50..56 {
        let m = definite(&Shape::counter_machine(3, 2), seed, 3);
        let inputs = strings_up_to(&m.alphabet, 3);
        let r = modulus_for(&m, &inputs, &[0, 1]) as u32 - 1;
        let flat = eliminate_counters(&m, r);
        agree(&m, &flat, &inputs);
    }
}
