//! Coupled selection/mutation systems with the dominating counter J.
//!
//! Run with `cargo run --release --example particle_coupling`.

use mfjump::coupling::{simulate_coupled_system, CoupledSystemOptions};
use mfjump::models::selection::SelectionMutation;
use mfjump::models::TorusRefresh;
use mfjump::rng::replicate;
use mfjump::state::TorusPoint;

fn main() -> mfjump::Result<()> {
    let n = 20;
    let sys = SelectionMutation::new(TorusRefresh::<1> { rate: 0.5 }, n, 0.3, |a: &TorusPoint<1>, b: &TorusPoint<1>| {
        let d = (a.0[0] - b.0[0]).abs();
        (-d.min(1.0 - d) / 0.2).exp()
    })?;
    let theta = sys.lipschitz_theta();
    let x0: Vec<TorusPoint<1>> = (0..n).map(|i| TorusPoint([i as f64 / n as f64])).collect();
    let mut y0 = x0.clone();
    for z in y0.iter_mut().take(5) {
        *z = TorusPoint::wrapped([z.0[0] + 0.5]);
    }
    let times = vec![0.0, 1.0, 2.0, 4.0, 8.0];
    let opts = CoupledSystemOptions {
        observe: times.clone(),
        ..Default::default()
    };
    let runs = replicate(2_000, 5, |_, rng| simulate_coupled_system(&sys, theta, x0.clone(), y0.clone(), 8.0, &opts, rng))?;
    let j0 = runs[0].j0;
    for t in times {
        let mean_j = runs.iter().map(|r| r.j_at(t).unwrap()).sum::<f64>() / runs.len() as f64;
        let unequal = runs
            .iter()
            .map(|r| {
                let s = r.samples.iter().find(|s| s.time == t).unwrap();
                s.x.iter().zip(&s.y).filter(|(a, b)| a != b).count() as f64
            })
            .sum::<f64>()
            / runs.len() as f64;
        println!("t = {t:>3}: E[J] {mean_j:.3} <= {:.3}, mean unequal coordinates {unequal:.3}", (theta * t).exp() * j0);
    }
    let violations: usize = runs.iter().map(|r| r.violations).sum();
    println!("domination violations: {violations}");
    Ok(())
}
