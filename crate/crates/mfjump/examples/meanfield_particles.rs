//! An N-particle run-and-tumble system and the decay of its mean weight.
//!
//! Run with `cargo run --release --example meanfield_particles`.

use mfjump::models::run_tumble::{pv, RunTumble, RunTumbleParams};
use mfjump::particles::{meanfield_system, simulate_system, SystemOptions};
use mfjump::rng::replicate;

fn main() -> mfjump::Result<()> {
    let model = RunTumble::new(RunTumbleParams::new(1.0, 2.0, 0.2))?;
    let v = model.lyapunov();
    let n = 50;
    let sys = meanfield_system(model, n)?;
    let x0: Vec<_> = (0..n).map(|i| pv(3.0 + 0.02 * i as f64, 1)).collect();
    let times = vec![0.0, 1.0, 2.0, 4.0, 8.0];
    let runs = replicate(200, 3, |_, rng| simulate_system(&sys, x0.clone(), 8.0, &SystemOptions::observing(times.clone()), rng))?;
    for (k, t) in times.iter().enumerate() {
        let mean: f64 = runs
            .iter()
            .map(|r| r.samples[k].1.iter().map(|s| v.eval(s)).sum::<f64>() / n as f64)
            .sum::<f64>()
            / runs.len() as f64;
        println!("t = {t:>3}: mean V over particles {mean:.3}");
    }
    Ok(())
}
