//! Global and local thinning on two models with closed-form answers.
//!
//! Run with `cargo run --release --example thinning`.

use mfjump::engine::{simulate_auto, SimOptions};
use mfjump::measure::{EmpiricalMeasure, MeasureFlow};
use mfjump::models::tcp::{Growth, Tcp, TcpParams};
use mfjump::models::toy::ConstantRate;
use mfjump::rng::replicate;

fn main() -> mfjump::Result<()> {
    let n = 50_000;

    // Constant rate 2 thinned under a ceiling of 5: mean count 2t.
    let toy = ConstantRate {
        rate: 2.0,
        ceiling: 5.0,
        drift: 0.0,
    };
    let frozen = MeasureFlow::constant(EmpiricalMeasure::dirac(0.0));
    let counts = replicate(n, 1, |_, rng| {
        Ok(simulate_auto(&toy, &frozen, 0.0, 3.0, &SimOptions::default().quiet(), rng)?.accepted as f64)
    })?;
    let mean = counts.iter().sum::<f64>() / n as f64;
    println!("constant rate: mean jumps by t=3 is {mean:.4} (exact 6)");

    // Rate 1 + x with x growing at unit speed has no global bound.
    let tcp = Tcp::new(TcpParams::new(Growth::Linear { slope: 1.0 }, Growth::Zero, 1.0, 0.5))?;
    let alive = replicate(n, 2, |_, rng| {
        let tr = simulate_auto(&tcp, &frozen, 0.0, 1.0, &SimOptions::default().quiet(), rng)?;
        Ok((tr.accepted == 0) as u8 as f64)
    })?;
    let p = alive.iter().sum::<f64>() / n as f64;
    println!("linear rate: survival to t=1 is {p:.4} (exact {:.4})", (-1.5f64).exp());
    Ok(())
}
