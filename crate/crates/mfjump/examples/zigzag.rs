//! Zig-zag particles with a weak mean cosine interaction.
//!
//! Run with `cargo run --release --example zigzag`.

use mfjump::models::zigzag::{Confinement, Interaction, ZigZagParams, ZigZagSystem};
use mfjump::particles::{simulate_system, SystemOptions};
use mfjump::rng::replicate;
use mfjump::state::{PosVel, Velocity};

fn main() -> mfjump::Result<()> {
    let n = 10;
    let sys = ZigZagSystem::new(ZigZagParams {
        n,
        confinement: Confinement::Quadratic { stiffness: 1.0 },
        interaction: Interaction::MeanCosine { strength: 0.2 },
        theta: 0.2,
    })?;
    let v = sys.lyapunov();
    let x0: Vec<PosVel> = (0..n).map(|i| PosVel::new(2.0 + 0.1 * i as f64, Velocity::Pos)).collect();
    let times = vec![0.0, 2.0, 5.0, 10.0, 20.0];
    let runs = replicate(1_000, 6, |_, rng| simulate_system(&sys, x0.clone(), 20.0, &SystemOptions::observing(times.clone()), rng))?;
    for (k, t) in times.iter().enumerate() {
        let (mut second, mut weight) = (0.0, 0.0);
        for r in &runs {
            for s in &r.samples[k].1 {
                second += s.x * s.x;
                weight += v.eval(s);
            }
        }
        let m = (runs.len() * n) as f64;
        println!("t = {t:>4}: E[x^2] {:.3}, E[V] {:.3}", second / m, weight / m);
    }
    Ok(())
}
