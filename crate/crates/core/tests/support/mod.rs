//! Shared fixtures for the integration tests: seeded random instances and a
//! brute-force optimum with no pruning at all.

#![allow(dead_code)]

use gbal_core::generate::{generate_general, generate_two_valued};
use gbal_core::model::{
    validate_indexed, IndexedInstance, Instance, JobSpec, MachineSpec, ModeHint, Rational, SolveMode,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Builds an instance from dedicated loads and `(weight, machines)` pairs.
/// Machines are `m1..`, jobs `j1..`.
pub fn build(loads: &[i64], jobs: &[(i64, &[usize])]) -> IndexedInstance {
    Instance {
        machines: loads
            .iter()
            .enumerate()
            .map(|(i, &l)| MachineSpec {
                id: format!("m{}", i + 1),
                dedicated_load: l,
            })
            .collect(),
        jobs: jobs
            .iter()
            .enumerate()
            .map(|(i, (w, el))| JobSpec {
                id: format!("j{}", i + 1),
                weight: *w,
                eligible: el.iter().map(|v| format!("m{}", v + 1)).collect(),
            })
            .collect(),
        mode_hint: ModeHint::Auto,
    }
    .indexed()
    .unwrap()
}

/// Gives roughly a third of the machines a dedicated load in `0..=max`.
pub fn sprinkle_dedicated(mut inst: Instance, max: i64, rng: &mut ChaCha8Rng) -> Instance {
    for m in &mut inst.machines {
        if rng.gen_ratio(1, 3) {
            m.dedicated_load = rng.gen_range(0..=max);
        }
    }
    inst
}

/// A two-valued instance with `m <= 6`, at most 12 jobs and `W <= 20`.
/// `improved` forces `W >= 2w`.
pub fn two_valued_case(seed: u64, improved: bool) -> (IndexedInstance, SolveMode) {
    let mut r = rng(seed);
    let m = r.gen_range(2..=6);
    let heavy = r.gen_range(2..=20);
    let light = if improved {
        r.gen_range(1..=heavy / 2)
    } else {
        r.gen_range(1..heavy)
    };
    let n = r.gen_range(2..=12);
    let n_heavy = r.gen_range(1..n);
    let degree = r.gen_range(2..=m);
    let inst = generate_two_valued(m, n_heavy, n - n_heavy, heavy, light, degree, r.gen()).unwrap();
    let inst = sprinkle_dedicated(inst, heavy, &mut r).indexed().unwrap();
    let mode = validate_indexed(&inst, ModeHint::TwoValued, None).into_mode().unwrap();
    assert_eq!(mode, SolveMode::TwoValued { heavy, light });
    (inst, mode)
}

/// A general instance with `m <= 6`, at most 12 jobs and weights up to 20.
pub fn general_case(seed: u64, beta: Rational) -> (IndexedInstance, SolveMode) {
    let mut r = rng(seed);
    let m = r.gen_range(2..=6);
    let n = r.gen_range(1..=12);
    let w_max = r.gen_range(2..=20);
    let inst = generate_general(m, n, beta, w_max, r.gen()).unwrap();
    let inst = sprinkle_dedicated(inst, w_max, &mut r).indexed().unwrap();
    let mode = validate_indexed(&inst, ModeHint::General, Some(beta))
        .into_mode()
        .unwrap();
    (inst, mode)
}

pub const BETAS: [(i64, i64); 4] = [(4, 7), (2, 3), (7, 10), (9, 10)];

/// Minimum makespan by enumerating every assignment.
pub fn brute_force_opt(inst: &IndexedInstance) -> i64 {
    fn go(inst: &IndexedInstance, i: usize, loads: &mut Vec<i64>) -> i64 {
        if i == inst.jobs.len() {
            return loads.iter().copied().max().unwrap_or(0);
        }
        let job = &inst.jobs[i];
        let mut best = i64::MAX;
        for &v in &job.eligible {
            loads[v] += job.weight;
            best = best.min(go(inst, i + 1, loads));
            loads[v] -= job.weight;
        }
        best
    }
    assert!(inst.jobs.len() <= 8, "brute force is for tiny instances");
    go(inst, 0, &mut inst.dedicated.clone())
}

/// Every pebble moved to a random eligible machine.
pub fn random_placement(eligible: &[Vec<usize>], rng: &mut ChaCha8Rng) -> Vec<usize> {
    eligible.iter().map(|el| el[rng.gen_range(0..el.len())]).collect()
}
