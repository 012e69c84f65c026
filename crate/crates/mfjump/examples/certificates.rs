//! Contraction certificates from assumption constants.
//!
//! Run with `cargo run --release --example certificates`.

use mfjump::certificates::{lyapunov_bound, nonlinear_certificate, particle_certificate, AssumptionConstants, KappaVariant};

fn main() -> mfjump::Result<()> {
    let base = AssumptionConstants {
        lambda_star: 1.0,
        theta: 0.0,
        rho: 0.5,
        rho_star: 1.5,
        eta: 0.6,
        m: 3.0,
        gamma_star: 2.0,
        alpha: 0.4,
        t0: 1.0,
    };
    println!("theta      c_star    kappa  kt_nonlin  kt_literal  kt_corrected");
    for k in 0..6 {
        let c = AssumptionConstants {
            theta: 0.002 * k as f64,
            ..base
        };
        let nl = nonlinear_certificate(&c)?;
        let lit = particle_certificate(&c, KappaVariant::Literal)?;
        let cor = particle_certificate(&c, KappaVariant::Corrected)?;
        println!(
            "{:.3}  {:9.3e}  {:.4}  {:9.3e}  {:10.4}  {:12.4}",
            c.theta,
            nl.c_star.unwrap_or(f64::NAN),
            nl.kappa,
            nl.kappa_tilde,
            lit.kappa_tilde,
            cor.kappa_tilde
        );
    }
    for t in [0.0, 1.0, 5.0, 20.0] {
        println!("moment bound at t={t:>4}: {:.4}", lyapunov_bound(&base, 10.0, t));
    }
    Ok(())
}
