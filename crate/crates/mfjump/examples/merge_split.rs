//! Merge/split coupling of two run-and-tumble laws and the resulting bounds.
//!
//! Run with `cargo run --release --example merge_split`.

use mfjump::coupling::{merge_split_ensemble, MergeSplitOptions};
use mfjump::engine::{picard_solve, PicardConfig};
use mfjump::measure::EmpiricalMeasure;
use mfjump::metrics::{estimate_tv_bound, estimate_vnorm_bound};
use mfjump::models::run_tumble::{pv, RunTumble, RunTumbleParams};

fn main() -> mfjump::Result<()> {
    let model = RunTumble::new(RunTumbleParams::new(1.0, 2.0, 0.2))?;
    let m0 = EmpiricalMeasure::dirac(pv(0.5, 1));
    let h0 = EmpiricalMeasure::dirac(pv(-0.5, -1));
    let horizon = 4.0;
    let mut cfg = PicardConfig::new(horizon, 0.25, 2_000);
    cfg.seed = 11;
    let fx = picard_solve(&model, &m0, &cfg)?.flow;
    cfg.seed = 12;
    let fy = picard_solve(&model, &h0, &cfg)?.flow;
    let times: Vec<f64> = (0..=8).map(|k| 0.5 * k as f64).collect();
    let opts = MergeSplitOptions {
        observe: times.clone(),
        restart_every: Some(1.0),
    };
    let ens = merge_split_ensemble(&model, &fx, &fy, &m0, &h0, horizon, &opts, 5_000, 13)?;
    let v = model.lyapunov();
    println!("   t   tv_bound (se)     vnorm_bound (se)");
    for t in times {
        let tv = estimate_tv_bound(&ens, t)?;
        let vn = estimate_vnorm_bound(&ens, t, &v)?;
        println!("{t:4.1}   {:.4} ({:.4})   {:8.4} ({:.4})", tv.estimate, tv.se, vn.estimate, vn.se);
    }
    Ok(())
}
