//! Empirical Doeblin constant from the telegraph meeting coupling.
//!
//! Run with `cargo run --release --example doeblin_estimate`.

use mfjump::certificates::nonlinear_certificate;
use mfjump::coupling::estimate_meeting;
use mfjump::models::run_tumble::{pv, RunTumble, RunTumbleParams};

fn main() -> mfjump::Result<()> {
    let model = RunTumble::new(RunTumbleParams::new(1.0, 2.0, 0.001))?;
    let starts = vec![
        (pv(0.5, 1), pv(-0.5, -1)),
        (pv(0.5, -1), pv(-0.5, 1)),
        (pv(1.0, 1), pv(-1.0, 1)),
        (pv(0.0, 1), pv(0.0, -1)),
    ];
    for t0 in [0.5, 1.0, 2.0, 4.0] {
        let est = estimate_meeting(&model, &starts, t0, 20_000, 17)?;
        let per: Vec<String> = est.per_pair.iter().map(|r| format!("{:.3}", r.p)).collect();
        println!("t0 = {t0}: alpha_hat {:.4} ({:.4}), per pair [{}]", est.alpha_hat, est.alpha_se, per.join(", "));
        let constants = model.constants().with_doeblin(est.alpha_hat, t0)?;
        match nonlinear_certificate(&constants) {
            Ok(c) => println!("    kappa {:.4}, kappa_tilde {:.3e}, contracts {}", c.kappa, c.kappa_tilde, c.contracts),
            Err(e) => println!("    no certificate: {e}"),
        }
    }
    Ok(())
}
