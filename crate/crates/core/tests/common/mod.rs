#![allow(dead_code)]

pub mod mutation;

use flexroute::exact::MAX_BRUTEFORCE_TASKS;
use flexroute::instances::{generate, GenConfig};
use flexroute::Instance;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// A random instance small enough for the exhaustive oracle: at most four
/// patients, two nurses, three services and eight tasks. With `integer`
/// every leg, duration and window bound is a whole number.
pub fn tiny(seed: u64, integer: bool) -> Instance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
    loop {
        let n = rng.gen_range(1..=4);
        let v = rng.gen_range(1..=2);
        let s = rng.gen_range(1..=3);
        let mut cfg = GenConfig::new(n, v, s, rng.gen());
        cfg.area_side = 30.0;
        cfg.demand_density = rng.gen_range(0.3..0.8);
        cfg.qualification_density = rng.gen_range(0.5..1.0);
        cfg.horizon = 200.0;
        cfg.window_width = rng.gen_range(40.0..200.0);
        cfg.min_duration = 1.0;
        cfg.max_duration = 10.0;
        cfg.start_req = (0..s).map(|_| rng.gen_bool(0.35) as u8).collect();
        cfg.end_req = (0..s).map(|_| rng.gen_bool(0.35) as u8).collect();
        let mut inst = generate(&cfg).expect("tiny config is valid");
        if inst.num_tasks() > MAX_BRUTEFORCE_TASKS {
            continue;
        }
        if integer {
            for row in inst.travel_time.iter_mut() {
                for t in row.iter_mut() {
                    *t = t.round();
                }
            }
            for row in inst.service_duration.iter_mut() {
                for d in row.iter_mut() {
                    *d = d.round();
                }
            }
            for x in inst.window_lo.iter_mut().chain(inst.window_hi.iter_mut()) {
                *x = x.round();
            }
        }
        inst.name = format!("tiny-{seed}{}", if integer { "-int" } else { "" });
        return inst;
    }
}

/// The fifty oracle instances: even seeds have whole-number data.
pub fn oracle_set() -> Vec<Instance> {
    (0..50).map(|i| tiny(1000 + i, i % 2 == 0)).collect()
}
