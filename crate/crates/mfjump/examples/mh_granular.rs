//! Granular Metropolis particles on the circle against the self-consistent
//! equilibrium density.
//!
//! Run with `cargo run --release --example mh_granular`.

use std::f64::consts::TAU;

use mfjump::models::mh::{self_consistent_potential, CosineInteraction, CosinePotential, MhGranular, MhParams};
use mfjump::particles::{simulate_system, SystemOptions};
use mfjump::rng::replica_stream;
use mfjump::state::TorusPoint;

fn main() -> mfjump::Result<()> {
    let (beta, amp_u, amp_w, n) = (1.0, 1.0, 0.25, 64);
    let model = MhGranular::<1>::new(MhParams {
        beta,
        lambda_bar: 1.0,
        n,
        confinement: CosinePotential { amplitude: amp_u },
        interaction: CosineInteraction { amplitude: amp_w },
    })?;
    println!(
        "p* = {:.4}, contraction margin {:.4}, Lipschitz constant {:.4}",
        model.p_min(),
        model.contraction_margin(),
        model.lipschitz_theta()
    );
    let fixed = self_consistent_potential(
        |x| amp_u * (TAU * x).cos(),
        |x, z| amp_w * (TAU * (x - z)).cos(),
        beta,
        64,
        1e-10,
        1_000,
    )?;
    let target = fixed.density(beta);

    let mut rng = replica_stream(9, 0);
    let x0: Vec<TorusPoint<1>> = (0..n).map(|_| TorusPoint([rand::Rng::random::<f64>(&mut rng)])).collect();
    let observe: Vec<f64> = (20..=400).map(|k| k as f64).collect();
    let tr = simulate_system(&model, x0, 400.0, &SystemOptions::observing(observe), &mut rng)?;
    let bins = 8;
    let mut hist = vec![0.0; bins];
    let mut total = 0.0;
    for (_, x) in &tr.samples {
        for p in x {
            hist[((p.0[0] * bins as f64) as usize).min(bins - 1)] += 1.0;
            total += 1.0;
        }
    }
    println!("bin   simulated  self-consistent");
    for (b, count) in hist.iter().enumerate() {
        let want: f64 = target.iter().skip(b * 8).take(8).sum();
        println!("{b:>3}   {:.4}     {:.4}", count / total, want);
    }
    Ok(())
}
