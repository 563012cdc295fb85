#![allow(dead_code)]

use counterlab::machine::Configuration;
use counterlab::pdcomplement::{cnd1, cnd2, realizable, ConfInterval, IntervalSpace, Surface};
use counterlab::random::{random_definite_machine, rng, Shape};
use counterlab::{decide, parse_machine, MachineSpec, RunBudget, Verdict};

pub const BUDGET: RunBudget = RunBudget {
    step_cap: 500,
    config_cap: 200_000,
};

pub fn fixture(name: &str) -> MachineSpec {
    let path = format!("{}/fixtures/{name}.machine", env!("CARGO_MANIFEST_DIR"));
    parse_machine(&std::fs::read_to_string(path).unwrap()).unwrap()
}

pub fn surface(c: &Configuration) -> Surface {
    Surface {
        state: c.state,
        head: c.head,
        top: *c.stack.last().unwrap(),
        counters: c.counters.clone(),
    }
}

/// Level intervals read off a run: pairs of positions at one height with
/// nothing lower in between, and the visits to that height.
pub fn decompositions(path: &[Configuration]) -> Vec<(usize, usize, u64)> {
    let h: Vec<usize> = path.iter().map(|c| c.stack.len()).collect();
    let mut out = Vec::new();
    for a in 0..path.len() {
        let mut visits = 0;
        for b in a + 1..path.len() {
            if h[b] < h[a] {
                break;
            }
            if h[b] == h[a] {
                out.push((a, b, visits));
                visits += 1;
            }
        }
    }
    out
}

pub fn check_run(m: &MachineSpec, x: &str) -> usize {
    let Verdict::Accept { witness } = decide(m, x, BUDGET).unwrap() else {
        panic!("{x:?} should be accepted");
    };
    let t = witness.len() as u64 - 1;
    let space = IntervalSpace::new(m, x, t).unwrap();
    let h: Vec<usize> = witness.iter().map(|c| c.stack.len()).collect();
    let s = |i: usize| surface(&witness[i]);
    let mut checked = 0;
    for (a, b, visits) in decompositions(&witness) {
        let l = (b - a) as u64;
        let eta = ConfInterval {
            from: s(a),
            s: visits,
            to: s(b),
            l,
            r: 0,
        };
        assert!(realizable(&space, &eta).unwrap());
        if visits == 0 && l >= 2 {
            let inner = (a + 2..b - 1).filter(|&i| h[i] == h[a] + 1).count() as u64;
            let eta1 = ConfInterval {
                from: s(a + 1),
                s: inner,
                to: s(b - 1),
                l: l - 2,
                r: 1,
            };
            assert!(cnd1(&space, &eta, &eta1).unwrap());
            assert!(!cnd1(
                &space,
                &eta,
                &ConfInterval {
                    l: l - 1,
                    ..eta1.clone()
                }
            )
            .unwrap());
            if l == 2 {
                assert_eq!(eta1.l, 0);
            }
            checked += 1;
        }
        if visits >= 1 {
            let mid = (a + 1..b).find(|&i| h[i] == h[a]).unwrap();
            let eta1 = ConfInterval {
                from: s(a),
                s: 0,
                to: s(mid),
                l: (mid - a) as u64,
                r: 0,
            };
            let eta2 = ConfInterval {
                from: s(mid),
                s: visits - 1,
                to: s(b),
                l: (b - mid) as u64,
                r: 0,
            };
            assert!(cnd2(&space, &eta, &eta1, &eta2).unwrap());
            let off_s = ConfInterval {
                s: visits,
                ..eta2.clone()
            };
            assert!(!cnd2(&space, &eta, &eta1, &off_s).unwrap());
            let off_l = ConfInterval {
                l: eta2.l + 1,
                ..eta2.clone()
            };
            assert!(!cnd2(&space, &eta, &eta1, &off_l).unwrap());
            checked += 1;
        }
    }
    checked
}

pub fn random_slim(seed: u64) -> MachineSpec {
    let states = 2 + (seed % 2) as usize;
    random_definite_machine(
        &Shape::pushdown(states, 1),
        &mut rng(seed),
        &format!("pd{seed}"),
        3,
        BUDGET,
    )
    .0
}
