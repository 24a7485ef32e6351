//! Deterministic instance generators.
//!
//! Every generator is a pure function of its arguments. Randomness comes from
//! a ChaCha stream seeded with the given 64-bit seed, so output is identical
//! across platforms and runs.

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::ModelError;
use crate::model::{beta_in_range, Instance, JobSpec, MachineSpec, ModeHint, Rational};

fn machines(m: usize) -> Vec<MachineSpec> {
    (1..=m)
        .map(|i| MachineSpec {
            id: format!("m{i}"),
            dedicated_load: 0,
        })
        .collect()
}

fn pick_machines(rng: &mut ChaCha8Rng, m: usize, k: usize) -> Vec<String> {
    let mut idx: Vec<usize> = sample(rng, m, k).into_vec();
    idx.sort_unstable();
    idx.into_iter().map(|i| format!("m{}", i + 1)).collect()
}

/// Two job weights: `n_heavy` jobs of weight `heavy` on two random machines
/// each, `n_light` jobs of weight `light` on between 2 and
/// `max_light_degree` random machines.
pub fn generate_two_valued(
    m: usize,
    n_heavy: usize,
    n_light: usize,
    heavy: i64,
    light: i64,
    max_light_degree: usize,
    seed: u64,
) -> Result<Instance, ModelError> {
    if m < 2 {
        return Err(ModelError::Generator(format!("need at least 2 machines, got {m}")));
    }
    if light < 1 || light >= heavy {
        return Err(ModelError::Generator(format!(
            "need 1 <= w < W, got w={light}, W={heavy}"
        )));
    }
    if n_light > 0 && max_light_degree < 2 {
        return Err(ModelError::Generator("max_light_degree must be at least 2".into()));
    }
    let max_degree = max_light_degree.min(m);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut jobs = Vec::with_capacity(n_heavy + n_light);
    for i in 1..=n_heavy {
        jobs.push(JobSpec {
            id: format!("h{i}"),
            weight: heavy,
            eligible: pick_machines(&mut rng, m, 2),
        });
    }
    for i in 1..=n_light {
        let degree = rng.gen_range(2..=max_degree);
        jobs.push(JobSpec {
            id: format!("l{i}"),
            weight: light,
            eligible: pick_machines(&mut rng, m, degree),
        });
    }
    Ok(Instance {
        machines: machines(m),
        jobs,
        mode_hint: ModeHint::TwoValued,
    })
}

/// Arbitrary weights up to `w_max`. Heavy jobs (weight above `beta * w_max`)
/// get exactly two machines, light jobs any number from 2 to `m`. The first
/// job always has weight `w_max` so the instance's largest weight is pinned.
pub fn generate_general(m: usize, n: usize, beta: Rational, w_max: i64, seed: u64) -> Result<Instance, ModelError> {
    if !beta_in_range(beta) {
        return Err(ModelError::BetaOutOfRange(beta));
    }
    if m < 2 {
        return Err(ModelError::Generator(format!("need at least 2 machines, got {m}")));
    }
    let light_max = (beta * Rational::from_integer(w_max)).floor().to_integer();
    if light_max < 1 {
        return Err(ModelError::Generator(format!(
            "w_max={w_max} leaves no room for light jobs at beta={beta}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut jobs = Vec::with_capacity(n);
    for i in 1..=n {
        let heavy = i == 1 || rng.gen_bool(0.5);
        let (weight, degree) = if heavy {
            let w = if i == 1 {
                w_max
            } else {
                rng.gen_range(light_max + 1..=w_max)
            };
            (w, 2)
        } else {
            (rng.gen_range(1..=light_max), rng.gen_range(2..=m))
        };
        jobs.push(JobSpec {
            id: format!("j{i}"),
            weight,
            eligible: pick_machines(&mut rng, m, degree),
        });
    }
    Ok(Instance {
        machines: machines(m),
        jobs,
        mode_hint: ModeHint::General,
    })
}

/// A path of `k + 2` machines joined by `k + 1` heavy rocks. The first
/// machine carries load `scale`, the last `scale / 4`, the rest nothing.
/// Rock weight is `0.95 * scale + scale / 100` in integers. Meant to be
/// solved at `t = scale` with `beta = 7/10`.
pub fn generate_adversarial_path(k: usize, scale: i64) -> Result<Instance, ModelError> {
    if k < 1 {
        return Err(ModelError::Generator("k must be at least 1".into()));
    }
    if scale < 100 {
        return Err(ModelError::Generator(format!(
            "scale must be at least 100, got {scale}"
        )));
    }
    let rock = 95 * scale / 100 + (scale + 99) / 100;
    let n = k + 2;
    let machines = (0..n)
        .map(|i| MachineSpec {
            id: format!("p{i}"),
            dedicated_load: match i {
                0 => scale,
                i if i == n - 1 => scale / 4,
                _ => 0,
            },
        })
        .collect();
    let jobs = (0..n - 1)
        .map(|i| JobSpec {
            id: format!("r{}", i + 1),
            weight: rock,
            eligible: vec![format!("p{i}"), format!("p{}", i + 1)],
        })
        .collect();
    Ok(Instance {
        machines,
        jobs,
        mode_hint: ModeHint::General,
    })
}
