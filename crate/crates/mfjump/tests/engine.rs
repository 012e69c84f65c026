//! Thinning simulators and the Picard scheme against closed forms.

use mfjump::engine::{
    flow_sample, grid_times, picard_solve, simulate_auto, simulate_nonlinear, simulate_nonlinear_unbounded,
    EventKind, NonlinearModel, PicardConfig, SimOptions,
};
use mfjump::measure::{EmpiricalMeasure, Histogram, MeasureFlow};
use mfjump::models::run_tumble::{pv, RunTumble, RunTumbleParams};
use mfjump::models::tcp::{Growth, Tcp, TcpParams};
use mfjump::models::toy::ConstantRate;
use mfjump::rng::{replica_stream, replicate};
use mfjump::Error;

fn frozen(x: f64) -> MeasureFlow<f64> {
    MeasureFlow::constant(EmpiricalMeasure::dirac(x))
}

#[test]
fn global_thinning_counts_are_poisson() {
    // Rate 1.5 under a ceiling of 4: accepted jumps by t = 3 are Poisson(4.5).
    let model = ConstantRate {
        rate: 1.5,
        ceiling: 4.0,
        drift: 0.0,
    };
    let n = 20_000;
    let counts = replicate(n, 11, |_, rng| {
        let tr = simulate_nonlinear(&model, &frozen(0.0), 0.0, 3.0, &SimOptions::default().quiet(), rng)?;
        assert_eq!(tr.terminal, tr.accepted as f64);
        Ok(tr.accepted as f64)
    })
    .unwrap();
    let mean = counts.iter().sum::<f64>() / n as f64;
    let var = counts.iter().map(|c| (c - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    assert!((mean - 4.5).abs() < 4.0 * (4.5f64 / n as f64).sqrt(), "mean {mean}");
    assert!((var - 4.5).abs() < 0.3, "variance {var}");
}

#[test]
fn rate_above_ceiling_is_reported() {
    let model = ConstantRate {
        rate: 3.0,
        ceiling: 2.0,
        drift: 0.0,
    };
    let err = simulate_nonlinear(&model, &frozen(0.0), 0.0, 50.0, &SimOptions::default(), &mut replica_stream(1, 0))
        .unwrap_err();
    assert!(matches!(err, Error::RateCeiling { .. }), "{err:?}");
}

#[test]
fn zero_length_flow_is_identity() {
    let model = RunTumble::new(RunTumbleParams::new(1.0, 2.0, 0.1)).unwrap();
    let mut rng = replica_stream(2, 0);
    let s = pv(0.7, -1);
    assert_eq!(flow_sample(&model, &s, 0.0, &mut rng).unwrap(), s);
    assert!(flow_sample(&model, &s, -1.0, &mut rng).is_err());
}

#[test]
fn observations_land_on_requested_times() {
    let model = ConstantRate {
        rate: 1.0,
        ceiling: 1.0,
        drift: 0.5,
    };
    let obs = vec![0.0, 0.25, 1.0, 2.0];
    let tr = simulate_nonlinear(&model, &frozen(0.0), 0.0, 2.0, &SimOptions::observing(obs.clone()), &mut replica_stream(3, 0))
        .unwrap();
    for t in obs {
        let x = *tr.sample_at(t).expect("observed");
        let jumps = tr.accepted_times().iter().filter(|&&s| s <= t).count();
        assert!((x - (0.5 * t + jumps as f64)).abs() < 1e-12);
    }
}

#[test]
fn local_thinning_matches_survival_of_linear_rate() {
    // Rate 1 + x along x(t) = t: survival to time 1 is exp(-1.5).
    let model = Tcp::new(TcpParams::new(Growth::Linear { slope: 1.0 }, Growth::Zero, 1.0, 0.5)).unwrap();
    let n = 100_000;
    let alive = replicate(n, 12, |_, rng| {
        let tr = simulate_nonlinear_unbounded(&model, &frozen(0.0), 0.0, 1.0, &SimOptions::default().quiet(), rng)?;
        Ok((tr.accepted == 0) as u32 as f64)
    })
    .unwrap();
    let p = alive.iter().sum::<f64>() / n as f64;
    let want = (-1.5f64).exp();
    let se = (want * (1.0 - want) / n as f64).sqrt();
    assert!((p - want).abs() < 4.0 * se, "{p} vs {want}");
}

#[test]
fn first_jump_halves_the_window() {
    let model = Tcp::new(TcpParams::new(Growth::Linear { slope: 1.0 }, Growth::Zero, 1.0, 0.5)).unwrap();
    let nu = EmpiricalMeasure::dirac(0.0);
    assert_eq!(model.jump(&4.0, &nu, 0.3), 2.0);
    let opts = SimOptions::default();
    for k in 0..50 {
        let tr = simulate_auto(&model, &frozen(0.0), 4.0, 3.0, &opts, &mut replica_stream(13, k)).unwrap();
        if let Some(t) = tr.accepted_times().first() {
            let before = 4.0 + t;
            let after = tr.events.iter().find(|e| e.time == *t && e.kind == EventKind::Accepted).unwrap().state;
            assert!((after - before / 2.0).abs() < 1e-9);
        }
    }
}

#[test]
fn unbounded_rate_needs_local_thinning() {
    let model = Tcp::new(TcpParams::new(Growth::Linear { slope: 1.0 }, Growth::Zero, 1.0, 0.5)).unwrap();
    let err = simulate_nonlinear(&model, &frozen(0.0), 0.0, 1.0, &SimOptions::default(), &mut replica_stream(0, 0));
    assert!(matches!(err, Err(Error::Unsupported(_))));
}

#[test]
fn picard_reproduces_measure_free_dynamics_in_one_step() {
    let model = ConstantRate::new(0.0);
    let cfg = PicardConfig::new(2.0, 0.5, 500);
    let out = picard_solve(&model, &EmpiricalMeasure::dirac(3.0), &cfg).unwrap();
    assert!(out.converged);
    assert_eq!(out.iterations, 1);
    assert_eq!(out.gaps, vec![0.0]);
    for m in out.flow.snapshots() {
        assert!(m.atoms().iter().all(|(x, _)| *x == 3.0));
    }
}

#[test]
fn picard_gaps_shrink_for_weak_interaction() {
    let model = RunTumble::new(RunTumbleParams::new(1.0, 2.0, 0.3)).unwrap();
    let m0 = EmpiricalMeasure::uniform(vec![pv(1.0, 1), pv(-0.5, -1)]);
    let mut cfg = PicardConfig::new(2.0, 0.5, 2_000);
    cfg.max_iter = 6;
    cfg.seed = 5;
    let out = picard_solve(&model, &m0, &cfg).unwrap();
    assert!(out.gaps.len() >= 2);
    assert!(out.gaps.last().unwrap() < &out.gaps[0]);
    assert_eq!(out.flow.snapshots().len(), grid_times(2.0, 0.5).len());
}

#[test]
fn grid_includes_the_horizon_once() {
    assert_eq!(grid_times(1.0, 0.25), vec![0.0, 0.25, 0.5, 0.75, 1.0]);
    assert_eq!(grid_times(1.1, 0.5), vec![0.0, 0.5, 1.0, 1.1]);
}

#[test]
fn same_stream_gives_identical_event_logs() {
    let model = RunTumble::new(RunTumbleParams::new(1.0, 2.0, 0.4)).unwrap();
    let flow = MeasureFlow::constant(EmpiricalMeasure::uniform(vec![pv(1.0, 1), pv(-2.0, 1)]));
    let opts = SimOptions::observing(vec![0.5, 1.5]);
    let a = simulate_nonlinear(&model, &flow, pv(0.3, -1), 5.0, &opts, &mut replica_stream(14, 2)).unwrap();
    let b = simulate_nonlinear(&model, &flow, pv(0.3, -1), 5.0, &opts, &mut replica_stream(14, 2)).unwrap();
    assert_eq!(a.events, b.events);
    assert!(!a.events.is_empty());
}

#[test]
fn rejections_leave_the_flowed_state_alone() {
    // Drift 1 and jumps of +1: between events the state only drifts.
    let model = ConstantRate {
        rate: 0.5,
        ceiling: 3.0,
        drift: 1.0,
    };
    let tr = simulate_nonlinear(&model, &frozen(0.0), 0.0, 20.0, &SimOptions::default(), &mut replica_stream(15, 0))
        .unwrap();
    let (mut t, mut x) = (0.0, 0.0);
    assert!(tr.rejected > 0 && tr.accepted > 0);
    for e in &tr.events {
        assert!(e.time > t && e.time <= 20.0);
        let flowed = x + (e.time - t);
        match e.kind {
            EventKind::Rejected => assert!((e.state - flowed).abs() < 1e-9),
            EventKind::Accepted => assert!((e.state - flowed - 1.0).abs() < 1e-9),
            EventKind::Sample => {}
        }
        (t, x) = (e.time, e.state);
    }
}

#[test]
fn halving_the_grid_moves_the_solution_less_than_the_noise() {
    let model = RunTumble::new(RunTumbleParams::new(1.0, 2.0, 0.5)).unwrap();
    let m0 = EmpiricalMeasure::uniform(vec![pv(1.0, 1), pv(2.0, -1)]);
    let terminal = |step: f64, seed: u64| {
        let mut cfg = PicardConfig::new(2.0, step, 4_000);
        cfg.seed = seed;
        cfg.max_iter = 8;
        picard_solve(&model, &m0, &cfg).unwrap().flow.snapshots().last().unwrap().clone()
    };
    let bins = model.binning();
    let tv = |a: &EmpiricalMeasure<_>, b: &EmpiricalMeasure<_>| {
        let ha = Histogram::from_measure(a, &bins).unwrap();
        ha.l1(&Histogram::from_measure(b, &bins).unwrap()) / 2.0
    };
    let coarse = terminal(0.5, 1);
    let fine = terminal(0.25, 2);
    let noise = tv(&terminal(0.25, 3), &fine);
    let shift = tv(&coarse, &fine);
    assert!(shift < 2.0 * noise, "grid shift {shift} vs noise {noise}");
}
