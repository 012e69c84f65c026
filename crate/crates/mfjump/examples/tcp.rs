//! Mean-field TCP windows with an unbounded, law-dependent loss rate.
//!
//! Run with `cargo run --release --example tcp`.

use mfjump::engine::{picard_solve, simulate_auto, PicardConfig, SimOptions};
use mfjump::measure::EmpiricalMeasure;
use mfjump::models::tcp::{Growth, Tcp, TcpParams};
use mfjump::rng::replicate;

fn main() -> mfjump::Result<()> {
    let model = Tcp::new(TcpParams::new(
        Growth::Linear { slope: 1.0 },
        Growth::Exponential { scale: 0.1, rate: 0.5 },
        0.1,
        0.5,
    ))?;
    println!("drift radius {:.3}, drift constant {:.3}", model.drift_radius(), model.drift_constant());
    let m0 = EmpiricalMeasure::dirac(1.0);
    let mut cfg = PicardConfig::new(10.0, 0.5, 1_000);
    cfg.seed = 4;
    cfg.max_iter = 6;
    let out = picard_solve(&model, &m0, &cfg)?;
    println!("picard gaps: {:?}", out.gaps.iter().map(|g| (g * 1e4).round() / 1e4).collect::<Vec<_>>());
    let v = model.lyapunov();
    let ends = replicate(5_000, 5, |_, rng| {
        Ok(simulate_auto(&model, &out.flow, 1.0, 10.0, &SimOptions::default().quiet(), rng)?.terminal)
    })?;
    let mean = ends.iter().sum::<f64>() / ends.len() as f64;
    let mean_v = ends.iter().map(|x| v.eval(x)).sum::<f64>() / ends.len() as f64;
    println!("at t=10: mean window {mean:.3}, mean V {mean_v:.3}");
    Ok(())
}
