//! Register a batch of synthetic pairs and print landmark errors per mode.
//!
//! Usage: synthetic_benchmark [pairs] [config.toml]

use std::time::Instant;

use c2f_reg::engine::{finetune, register, EngineConfig};
use c2f_reg::evaluation::{mae, njd_count};
use c2f_reg::fields::warp_landmarks;
use c2f_reg::io::synth::{synth_pair, SynthSpec};
use c2f_reg::objectives::Mode;

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let pairs: u64 = args.get(1).map_or(4, |s| s.parse().expect("pair count"));
    let base = match args.get(2) {
        Some(path) => EngineConfig::from_toml(&std::fs::read_to_string(path).expect("config"))
            .expect("valid config"),
        None => EngineConfig::default(),
    };
    for seed in 0..pairs {
        let pair = synth_pair(&SynthSpec {
            dims: [36, 48, 40],
            max_disp: 5.0,
            landmarks: 20,
            seed,
        })
        .expect("synthetic pair");
        let lm = (&pair.fixed_landmarks, &pair.moving_landmarks);
        let pre = mae(lm.0, lm.1).unwrap();
        print!("pair {seed}: pre {pre:.3}");
        for mode in [Mode::Finetune, Mode::Train] {
            let mut cfg = base.clone();
            cfg.objective.mode = mode;
            let t = Instant::now();
            let r = register(&pair.fixed, &pair.moving, Some(lm), &cfg).unwrap();
            let after = mae(&warp_landmarks(&r.final_field, lm.0), lm.1).unwrap();
            let ft = finetune(&r, &pair.fixed, &pair.moving, Some(lm), &cfg).unwrap();
            let after_ft = mae(&warp_landmarks(&ft.final_field, lm.0), lm.1).unwrap();
            print!(
                " | {mode}: {after:.3} ({:.0}%) ft {after_ft:.3} njd {} {:.1}s",
                100.0 * after / pre,
                njd_count(&ft.final_field),
                t.elapsed().as_secs_f64()
            );
        }
        println!();
    }
}
