//! Model constants and laws checked against closed forms.

use mfjump::models::mh::{self_consistent_potential, CosineInteraction, CosinePotential, MhGranular, MhParams};
use mfjump::models::run_tumble::{pv, RunTumble, RunTumbleParams};
use mfjump::models::selection::SelectionMutation;
use mfjump::models::tcp::{Growth, Tcp, TcpParams};
use mfjump::models::zigzag::{Confinement, Interaction, ZigZagParams, ZigZagSystem};
use mfjump::models::TorusRefresh;
use mfjump::particles::{simulate_system, ParticleSystem, SystemOptions};
use mfjump::rng::{replica_stream, replicate};
use mfjump::state::TorusPoint;
use mfjump::stats::{ks_p_value, ks_statistic};
use mfjump::Error;
use statrs::distribution::{ContinuousCDF, Normal};

#[test]
fn run_tumble_weight_at_the_origin() {
    for (a, b) in [(1.0, 2.0), (0.5, 3.0), (2.0, 2.5)] {
        let m = RunTumble::new(RunTumbleParams::new(a, b, 0.1)).unwrap();
        let want = ((b - a) / 8.0f64).exp() * ((5.0 * a + 3.0 * b) / (2.0 * (b - a)) + 0.5);
        assert!((m.lyapunov_value(&pv(0.0, 1)) - want).abs() < 1e-12 * want);
        assert!((m.lyapunov_value(&pv(0.0, -1)) - want).abs() < 1e-12 * want);
    }
}

#[test]
fn run_tumble_rejects_bad_parameters() {
    for p in [
        RunTumbleParams::new(2.0, 1.0, 0.1),
        RunTumbleParams::new(0.0, 1.0, 0.1),
        RunTumbleParams::new(1.0, 2.0, 1.0),
        RunTumbleParams::new(1.0, 2.0, -0.1),
    ] {
        assert!(RunTumble::new(p).is_err());
    }
}

#[test]
fn tcp_drift_constant_for_linear_loss() {
    // g1(x) = x and rho = 1/2: the drift radius is 1.
    let m = Tcp::new(TcpParams::new(Growth::Linear { slope: 1.0 }, Growth::Zero, 1.0, 0.5)).unwrap();
    assert!((m.drift_radius() - 1.0).abs() < 1e-9);
    let want = 2.0 * (1.0 + 0.5f64.exp());
    assert!((m.drift_constant() - want).abs() < 1e-9);
    let flat = Tcp::new(TcpParams::new(Growth::Zero, Growth::Zero, 1.0, 0.5)).unwrap();
    assert!(flat.drift_radius().is_infinite());
}

#[test]
fn tcp_envelope_is_enforced() {
    let over = TcpParams::new(
        Growth::Linear { slope: 1.0 },
        Growth::Exponential { scale: 0.1, rate: 0.6 },
        0.1,
        0.5,
    );
    assert!(Tcp::new(over).is_err());
    let ok = TcpParams::new(
        Growth::Linear { slope: 1.0 },
        Growth::Exponential { scale: 0.1, rate: 0.5 },
        0.1,
        0.5,
    );
    assert!(Tcp::new(ok).is_ok());
}

fn chi_square_2x2(counts: [[f64; 2]; 2]) -> f64 {
    let n: f64 = counts.iter().flatten().sum();
    let rows = [counts[0][0] + counts[0][1], counts[1][0] + counts[1][1]];
    let cols = [counts[0][0] + counts[1][0], counts[0][1] + counts[1][1]];
    let mut chi = 0.0;
    for i in 0..2 {
        for j in 0..2 {
            let e = rows[i] * cols[j] / n;
            chi += (counts[i][j] - e).powi(2) / e;
        }
    }
    chi
}

#[test]
fn zigzag_without_interaction_is_a_product_of_gaussians() {
    let sys = ZigZagSystem::new(ZigZagParams {
        n: 2,
        confinement: Confinement::Quadratic { stiffness: 1.0 },
        interaction: Interaction::None,
        theta: 0.3,
    })
    .unwrap();
    let horizon = 30.0;
    let ends = replicate(20_000, 21, |_, rng| {
        let tr = simulate_system(&sys, vec![pv(0.0, 1), pv(0.0, 1)], horizon, &SystemOptions::default(), rng)?;
        Ok(tr.terminal)
    })
    .unwrap();
    let first: Vec<f64> = ends.iter().map(|x| x[0].x).collect();
    let std = Normal::new(0.0, 1.0).unwrap();
    let d = ks_statistic(&first, |z| std.cdf(z));
    assert!(ks_p_value(d, first.len() as f64) > 1e-3, "KS D = {d}");

    let mut counts = [[0.0; 2]; 2];
    for x in &ends {
        counts[(x[0].x > 0.0) as usize][(x[1].x > 0.0) as usize] += 1.0;
    }
    // 1 degree of freedom, level 0.001.
    assert!(chi_square_2x2(counts) < 10.83, "{counts:?}");
}

#[test]
fn zigzag_residual_rate_stays_in_band() {
    let sys = ZigZagSystem::new(ZigZagParams {
        n: 4,
        confinement: Confinement::Quadratic { stiffness: 2.0 },
        interaction: Interaction::MeanCosine { strength: 0.5 },
        theta: 0.5,
    })
    .unwrap();
    let mut rng = replica_stream(5, 0);
    let tr = simulate_system(
        &sys,
        vec![pv(0.3, 1), pv(-1.0, -1), pv(2.0, 1), pv(0.0, -1)],
        20.0,
        &SystemOptions::default(),
        &mut rng,
    );
    assert!(tr.is_ok());
    assert_eq!(sys.rate_ceiling(), 1.0);
}

#[test]
fn selection_with_invalid_probability_fails_at_first_use() {
    let sys = SelectionMutation::new(TorusRefresh::<1> { rate: 1.0 }, 3, 5.0, |_: &TorusPoint<1>, _: &TorusPoint<1>| 1.5)
        .unwrap();
    let x0 = vec![TorusPoint([0.1]), TorusPoint([0.5]), TorusPoint([0.9])];
    let err = simulate_system(&sys, x0, 10.0, &SystemOptions::default(), &mut replica_stream(0, 0)).unwrap_err();
    assert!(matches!(err, Error::Contract(_)), "{err:?}");
}

#[test]
fn selection_kernel_is_a_probability_law() {
    let sys = SelectionMutation::new(TorusRefresh::<1> { rate: 1.0 }, 4, 1.0, |a: &TorusPoint<1>, b: &TorusPoint<1>| {
        1.0 - (a.0[0] - b.0[0]).abs()
    })
    .unwrap();
    let x = vec![TorusPoint([0.1]), TorusPoint([0.4]), TorusPoint([0.4]), TorusPoint([0.8])];
    for i in 0..4 {
        let atoms = sys.kernel_atoms(i, &x).unwrap();
        let total: f64 = atoms.iter().map(|a| a.1).sum();
        assert!((total - 1.0).abs() < 1e-12);
        assert!(atoms.iter().all(|a| a.1 >= 0.0));
    }
}

#[test]
fn self_consistency_without_interaction_returns_the_confinement() {
    let u = |x: f64| (std::f64::consts::TAU * x).cos();
    let sol = self_consistent_potential(u, |_, _| 0.0, 2.0, 64, 1e-12, 10).unwrap();
    assert_eq!(sol.iterations, 1);
    for (x, v) in sol.grid.iter().zip(&sol.potential) {
        assert!((v - u(*x)).abs() < 1e-15);
    }
    let dens = sol.density(2.0);
    assert!((dens.iter().sum::<f64>() - 1.0).abs() < 1e-12);
}

#[test]
fn mh_floor_acceptance_from_oscillations() {
    let m = MhGranular::<1>::new(MhParams {
        beta: 0.5,
        lambda_bar: 2.0,
        n: 8,
        confinement: CosinePotential { amplitude: 1.0 },
        interaction: CosineInteraction { amplitude: 0.25 },
    })
    .unwrap();
    // Oscillations 2 and 0.5, so p* = exp(-0.5 * 2.5).
    assert!((m.p_min() - (-1.25f64).exp()).abs() < 1e-15);
    assert!((m.base.rate - 2.0 * m.p_min()).abs() < 1e-15);
    assert!((m.rate_ceiling() - 2.0 * (1.0 - m.p_min())).abs() < 1e-15);
}

#[test]
fn tcp_jump_frequency_settles() {
    let m = Tcp::new(TcpParams::new(
        Growth::Linear { slope: 1.0 },
        Growth::Exponential { scale: 0.1, rate: 0.5 },
        0.1,
        0.5,
    ))
    .unwrap();
    let flow = mfjump::measure::MeasureFlow::constant(mfjump::measure::EmpiricalMeasure::dirac(1.0));
    let per_unit = |horizon: f64, seed: u64| {
        let counts = replicate(2_000, seed, |_, rng| {
            let tr = mfjump::engine::simulate_auto(&m, &flow, 5.0, horizon, &mfjump::engine::SimOptions::default().quiet(), rng)?;
            Ok(tr.accepted as f64 / horizon)
        })
        .unwrap();
        counts.iter().sum::<f64>() / counts.len() as f64
    };
    let (short, long) = (per_unit(20.0, 61), per_unit(80.0, 62));
    assert!(short.is_finite() && long.is_finite());
    assert!((short - long).abs() < 0.05 * long, "{short} vs {long}");
}

#[test]
fn zigzag_flip_counts_are_independent_across_coordinates() {
    let sys = ZigZagSystem::new(ZigZagParams {
        n: 2,
        confinement: Confinement::Quadratic { stiffness: 1.0 },
        interaction: Interaction::None,
        theta: 0.5,
    })
    .unwrap();
    let flips = replicate(20_000, 63, |_, rng| {
        let tr = simulate_system(&sys, vec![pv(0.5, 1), pv(-0.5, 1)], 4.0, &SystemOptions::observing(vec![]), rng)?;
        let count = |i: usize| tr.events.iter().filter(|(_, e)| e.coord == i && e.changed).count();
        Ok((count(0), count(1)))
    })
    .unwrap();
    let mut table = [[0.0; 2]; 2];
    for (a, b) in &flips {
        table[a % 2][b % 2] += 1.0;
    }
    assert!(flips.iter().any(|(a, _)| *a > 0));
    assert!(chi_square_2x2(table) < 10.83, "{table:?}");
}
