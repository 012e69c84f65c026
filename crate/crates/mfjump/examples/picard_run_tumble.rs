//! Picard iteration for mean-field run-and-tumble.
//!
//! Run with `cargo run --release --example picard_run_tumble`.

use mfjump::engine::{picard_solve, PicardConfig};
use mfjump::measure::EmpiricalMeasure;
use mfjump::models::run_tumble::{pv, RunTumble, RunTumbleParams};

fn main() -> mfjump::Result<()> {
    let model = RunTumble::new(RunTumbleParams::new(1.0, 2.0, 0.3))?;
    let m0 = EmpiricalMeasure::uniform(vec![pv(1.0, 1), pv(-0.5, -1), pv(2.0, -1)]);
    let mut cfg = PicardConfig::new(3.0, 0.25, 4_000);
    cfg.seed = 7;
    let out = picard_solve(&model, &m0, &cfg)?;
    for (k, gap) in out.gaps.iter().enumerate() {
        println!("iteration {:>2}: gap {gap:.5}", k + 1);
    }
    println!("converged: {} after {} iterations", out.converged, out.iterations);
    for (k, m) in out.flow.snapshots().iter().enumerate().step_by(4) {
        println!("t = {:.2}: barycentre {:+.4}", k as f64 * cfg.grid_step, RunTumble::barycentre(m));
    }
    Ok(())
}
