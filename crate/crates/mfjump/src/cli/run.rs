//! Executes one configured run and renders it as a table.

use std::path::{Path, PathBuf};

use log::info;
use serde::de::DeserializeOwned;

use crate::certificates::{nonlinear_certificate, particle_certificate, AssumptionConstants, KappaVariant};
use crate::cli::config::{parse_config, Config, InitialConfig, Kind, ModelConfig, RunConfig};
use crate::coupling::{
    estimate_meeting, merge_split_ensemble, simulate_coupled_system, CoupledParticleSystem, CoupledSystemOptions,
    MeetingCoupling, MergeSplitOptions, PairSampler,
};
use crate::engine::{grid_times, picard_solve, simulate_auto, EventKind, NonlinearModel, PicardConfig, SimOptions};
use crate::error::{Error, Result};
use crate::measure::{EmpiricalMeasure, MeasureFlow};
use crate::metrics::{dbar1, estimate_tv_bound, estimate_vnorm_bound, fraction_unequal, BoundEstimate, LyapunovFn};
use crate::models::mh::MhGranular;
use crate::models::refresh::TorusRefresh;
use crate::models::run_tumble::RunTumble;
use crate::models::selection::SelectionMutation;
use crate::models::tcp::Tcp;
use crate::models::zigzag::ZigZagSystem;
use crate::particles::{meanfield_system, simulate_system, ParticleSystem, SystemOptions};
use crate::rng::replicate;
use crate::state::State;

/// A rendered result: a header and rows of formatted cells.
#[derive(Clone, Debug, PartialEq)]
pub struct Table {
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<String>>,
}

fn num(x: f64) -> String {
    format!("{x}")
}

/// Exit code 2: the run was never started.
/// Exit code 3: the run failed.
#[derive(Debug)]
pub struct Failure {
    pub code: i32,
    pub error: Error,
}

impl Failure {
    fn config(error: Error) -> Self {
        Failure { code: 2, error }
    }
    fn runtime(error: Error) -> Self {
        Failure { code: 3, error }
    }

    /// One-line JSON report for stderr.
    pub fn report(&self) -> String {
        serde_json::json!({
            "error": self.error.kind(),
            "message": self.error.to_string(),
            "replica": self.error.replica(),
            "time": self.error.time(),
            "exit_code": self.code,
        })
        .to_string()
    }
}

#[derive(Clone, Debug)]
pub struct Invocation {
    pub kind: Kind,
    pub config: PathBuf,
    pub seed: Option<u64>,
    pub threads: Option<usize>,
    pub out: PathBuf,
}

struct Prepared<M, S> {
    model: M,
    m0: Option<EmpiricalMeasure<S>>,
    h0: Option<EmpiricalMeasure<S>>,
    starts: Vec<(S, S)>,
}

enum Built {
    RunTumble(Prepared<RunTumble, crate::state::PosVel>),
    Tcp(Prepared<Tcp, f64>),
    Mh(Prepared<MhGranular<1>, crate::state::TorusPoint<1>>),
    ZigZag(Prepared<ZigZagSystem, crate::state::PosVel>),
    Selection(Prepared<SelectionMutation<TorusRefresh<1>>, crate::state::TorusPoint<1>>),
}

fn prepare<M, S: State + DeserializeOwned>(model: M, cfg: &Config) -> Result<Prepared<M, S>> {
    let law = |c: &Option<InitialConfig>| c.as_ref().map(|i| i.measure::<S>()).transpose();
    Ok(Prepared {
        model,
        m0: law(&cfg.initial)?,
        h0: law(&cfg.initial_y)?,
        starts: cfg.run.starts()?,
    })
}

fn build(cfg: &Config) -> Result<Built> {
    Ok(match &cfg.model {
        ModelConfig::RunTumble(p) => Built::RunTumble(prepare(RunTumble::new(p.clone())?, cfg)?),
        ModelConfig::Tcp(p) => Built::Tcp(prepare(Tcp::new(p.clone())?, cfg)?),
        ModelConfig::MhGranular(p) => Built::Mh(prepare(MhGranular::new(p.clone())?, cfg)?),
        ModelConfig::Zigzag(p) => Built::ZigZag(prepare(ZigZagSystem::new(p.clone())?, cfg)?),
        ModelConfig::SelectionMutation(p) => Built::Selection(prepare(p.build()?, cfg)?),
    })
}

fn model_id(b: &Built) -> &'static str {
    match b {
        Built::RunTumble(_) => "run_tumble",
        Built::Tcp(_) => "tcp",
        Built::Mh(_) => "mh_granular",
        Built::ZigZag(_) => "zigzag",
        Built::Selection(_) => "selection_mutation",
    }
}

fn supported(kind: Kind, b: &Built) -> bool {
    use Kind::*;
    matches!(
        (kind, b),
        (Simulate | Picard, Built::RunTumble(_) | Built::Tcp(_))
            | (Particles, Built::RunTumble(_) | Built::Mh(_) | Built::ZigZag(_) | Built::Selection(_))
            | (Couple, Built::RunTumble(_))
            | (CoupleParticles, Built::RunTumble(_) | Built::Selection(_))
            | (Certify, Built::RunTumble(_))
            | (Estimate, Built::RunTumble(_) | Built::Mh(_) | Built::Selection(_))
    )
}

fn need<'a, S>(m: &'a Option<EmpiricalMeasure<S>>, field: &str) -> Result<&'a EmpiricalMeasure<S>> {
    m.as_ref().ok_or_else(|| Error::Config(format!("this run needs `{field}`")))
}

fn check_inputs<M, S>(kind: Kind, p: &Prepared<M, S>, run: &RunConfig) -> Result<()> {
    match kind {
        Kind::Simulate | Kind::Particles | Kind::Picard => {
            need(&p.m0, "initial")?;
        }
        Kind::Couple | Kind::CoupleParticles => {
            need(&p.m0, "initial")?;
            need(&p.h0, "initial_y")?;
        }
        Kind::Certify => {
            if run.constants.is_none() {
                if run.t0.is_none() {
                    return Err(Error::Config("certify needs `run.t0` or `run.constants`".into()));
                }
                if run.alpha.is_none() && p.starts.is_empty() {
                    return Err(Error::Config("certify needs `run.alpha` or `run.starts`".into()));
                }
            }
        }
        Kind::Estimate => {
            if p.starts.is_empty() {
                return Err(Error::Config("estimate needs `run.starts`".into()));
            }
            if run.t0s.is_empty() && run.t0.is_none() {
                return Err(Error::Config("estimate needs `run.t0s` or `run.t0`".into()));
            }
        }
    }
    Ok(())
}

/// Reads, validates and runs a configuration, returning the table.
pub fn execute(inv: &Invocation) -> std::result::Result<Table, Failure> {
    let text = std::fs::read_to_string(&inv.config)
        .map_err(|e| Failure::config(Error::Config(format!("{}: {e}", inv.config.display()))))?;
    let cfg = parse_config(&text).map_err(Failure::config)?;
    if let Some(k) = cfg.kind {
        if k != inv.kind {
            return Err(Failure::config(Error::Config(format!(
                "config is for `{}`, not `{}`",
                k.name(),
                inv.kind.name()
            ))));
        }
    }
    let built = build(&cfg).map_err(|e| {
        Failure::config(match e {
            Error::Config(_) => e,
            other => Error::Config(other.to_string()),
        })
    })?;
    if !supported(inv.kind, &built) {
        return Err(Failure::config(Error::Unsupported(format!(
            "`{}` is not available for model `{}`",
            inv.kind.name(),
            model_id(&built)
        ))));
    }
    let run = &cfg.run;
    let inputs = match &built {
        Built::RunTumble(p) => check_inputs(inv.kind, p, run),
        Built::Tcp(p) => check_inputs(inv.kind, p, run),
        Built::Mh(p) => check_inputs(inv.kind, p, run),
        Built::ZigZag(p) => check_inputs(inv.kind, p, run),
        Built::Selection(p) => check_inputs(inv.kind, p, run),
    };
    inputs.map_err(Failure::config)?;
    let seed = inv.seed.or(cfg.seed).unwrap_or(1);
    info!("running {} on {} with seed {seed}", inv.kind.name(), model_id(&built));

    let work = || dispatch(inv.kind, &built, run, seed);
    let table = match inv.threads {
        Some(k) if k > 0 => rayon::ThreadPoolBuilder::new()
            .num_threads(k)
            .build()
            .map_err(|e| Failure::config(Error::Config(format!("thread pool: {e}"))))?
            .install(work),
        _ => work(),
    };
    table.map_err(Failure::runtime)
}

/// Runs the configuration and writes `<out>/<kind>.csv` in one step.
pub fn run(inv: &Invocation) -> std::result::Result<PathBuf, Failure> {
    let table = execute(inv)?;
    write_table(&inv.out, inv.kind.name(), &table).map_err(Failure::runtime)
}

/// Writes the table through a temporary file renamed into place.
pub fn write_table(dir: &Path, name: &str, table: &Table) -> Result<PathBuf> {
    std::fs::create_dir_all(dir)?;
    let path = dir.join(format!("{name}.csv"));
    let tmp = dir.join(format!(".{name}.csv.tmp"));
    {
        let mut w = csv::Writer::from_path(&tmp).map_err(csv_error)?;
        w.write_record(&table.header).map_err(csv_error)?;
        for row in &table.rows {
            w.write_record(row).map_err(csv_error)?;
        }
        w.flush()?;
    }
    std::fs::rename(&tmp, &path)?;
    Ok(path)
}

fn csv_error(e: csv::Error) -> Error {
    Error::Io(std::io::Error::other(e.to_string()))
}

fn dispatch(kind: Kind, built: &Built, run: &RunConfig, seed: u64) -> Result<Table> {
    match (kind, built) {
        (Kind::Simulate, Built::RunTumble(p)) => simulate(p, &p.model.lyapunov(), run, seed),
        (Kind::Simulate, Built::Tcp(p)) => simulate(p, &p.model.lyapunov(), run, seed),
        (Kind::Picard, Built::RunTumble(p)) => picard(p, run, seed),
        (Kind::Picard, Built::Tcp(p)) => picard(p, run, seed),
        (Kind::Particles, Built::RunTumble(p)) => {
            let sys = meanfield_system(p.model.clone(), run.n_particles)?;
            particles(&sys, need(&p.m0, "initial")?, &p.model.lyapunov(), run, seed)
        }
        (Kind::Particles, Built::Mh(p)) => particles(&p.model, need(&p.m0, "initial")?, &LyapunovFn::unit(), run, seed),
        (Kind::Particles, Built::ZigZag(p)) => {
            particles(&p.model, need(&p.m0, "initial")?, &p.model.lyapunov(), run, seed)
        }
        (Kind::Particles, Built::Selection(p)) => {
            particles(&p.model, need(&p.m0, "initial")?, &LyapunovFn::unit(), run, seed)
        }
        (Kind::Couple, Built::RunTumble(p)) => couple(p, &p.model.lyapunov(), run, seed),
        (Kind::CoupleParticles, Built::RunTumble(p)) => {
            let sys = meanfield_system(p.model.clone(), run.n_particles)?;
            let theta = p.model.constants().theta;
            couple_particles(&sys, theta, p, run, seed)
        }
        (Kind::CoupleParticles, Built::Selection(p)) => {
            couple_particles(&p.model, p.model.lipschitz_theta(), p, run, seed)
        }
        (Kind::Certify, Built::RunTumble(p)) => certify(p, run, seed),
        (Kind::Estimate, Built::RunTumble(p)) => estimate(&p.model, &p.starts, run, seed),
        (Kind::Estimate, Built::Mh(p)) => estimate(&p.model.base, &p.starts, run, seed),
        (Kind::Estimate, Built::Selection(p)) => estimate(&p.model.base, &p.starts, run, seed),
        _ => Err(Error::Unsupported(format!("`{}` for `{}`", kind.name(), model_id(built)))),
    }
}

fn law_flow<M: NonlinearModel>(
    model: &M,
    m0: &EmpiricalMeasure<M::State>,
    run: &RunConfig,
    seed: u64,
) -> Result<MeasureFlow<M::State>> {
    match &run.picard {
        None => Ok(MeasureFlow::constant(m0.clone())),
        Some(p) => {
            let mut cfg = PicardConfig::new(run.horizon, run.grid_step, p.n_samples);
            cfg.tol = p.tol;
            cfg.max_iter = p.max_iter;
            cfg.seed = seed;
            cfg.max_flight = run.max_flight;
            let out = picard_solve(model, m0, &cfg)?;
            info!(
                "law flow after {} iterations, last gap {:?}, converged {}",
                out.iterations,
                out.gaps.last(),
                out.converged
            );
            Ok(out.flow)
        }
    }
}

fn simulate<M: NonlinearModel>(
    p: &Prepared<M, M::State>,
    v: &LyapunovFn<M::State>,
    run: &RunConfig,
    seed: u64,
) -> Result<Table> {
    let m0 = need(&p.m0, "initial")?;
    let flow = law_flow(&p.model, m0, run, seed ^ 0x5eed)?;
    let times = grid_times(run.horizon, run.grid_step);
    let opts = SimOptions {
        observe: times.clone(),
        record_events: true,
        max_flight: run.max_flight,
    };
    let per_path = replicate(run.replicas, seed, |_, rng| {
        let x0 = m0.sample(rng).clone();
        let tr = simulate_auto(&p.model, &flow, x0, run.horizon, &opts, rng)?;
        Ok(times
            .iter()
            .map(|&t| {
                let state = tr.sample_at(t).expect("observed");
                let count = |k: EventKind| tr.events.iter().filter(|e| e.kind == k && e.time <= t).count() as f64;
                (v.eval(state), count(EventKind::Accepted), count(EventKind::Rejected))
            })
            .collect::<Vec<_>>())
    })?;
    let n = per_path.len() as f64;
    let mut rows = Vec::new();
    for (k, &t) in times.iter().enumerate() {
        let vs: Vec<f64> = per_path.iter().map(|r| r[k].0).collect();
        let est = BoundEstimate::from_samples(&vs)?;
        let acc = per_path.iter().map(|r| r[k].1).sum::<f64>() / n;
        let rej = per_path.iter().map(|r| r[k].2).sum::<f64>() / n;
        rows.push(vec![num(t), num(est.estimate), num(est.se), num(acc), num(rej), per_path.len().to_string()]);
    }
    Ok(Table {
        header: vec!["t", "mean_v", "v_se", "mean_accepted", "mean_rejected", "n_replicas"],
        rows,
    })
}

fn picard<M: NonlinearModel>(p: &Prepared<M, M::State>, run: &RunConfig, seed: u64) -> Result<Table> {
    let m0 = need(&p.m0, "initial")?;
    let settings = run.picard.clone().unwrap_or_else(|| {
        serde_json::from_value(serde_json::json!({})).expect("defaults")
    });
    let mut cfg = PicardConfig::new(run.horizon, run.grid_step, settings.n_samples);
    cfg.tol = settings.tol;
    cfg.max_iter = settings.max_iter;
    cfg.seed = seed;
    cfg.max_flight = run.max_flight;
    let out = picard_solve(&p.model, m0, &cfg)?;
    let rows = out
        .gaps
        .iter()
        .enumerate()
        .map(|(k, g)| vec![(k + 1).to_string(), num(*g), (*g < cfg.tol).to_string()])
        .collect();
    Ok(Table {
        header: vec!["iteration", "gap", "converged"],
        rows,
    })
}

fn particles<P: ParticleSystem>(
    sys: &P,
    m0: &EmpiricalMeasure<P::State>,
    v: &LyapunovFn<P::State>,
    run: &RunConfig,
    seed: u64,
) -> Result<Table> {
    let times = grid_times(run.horizon, run.grid_step);
    let opts = SystemOptions::observing(times.clone());
    let n = sys.size();
    let per_path = replicate(run.replicas, seed, |_, rng| {
        let x0: Vec<P::State> = (0..n).map(|_| m0.sample(rng).clone()).collect();
        let tr = simulate_system(sys, x0, run.horizon, &opts, rng)?;
        Ok(times
            .iter()
            .map(|&t| {
                let x = tr.sample_at(t).expect("observed");
                let mean_v = x.iter().map(|s| v.eval(s)).sum::<f64>() / n as f64;
                let acc = tr.events.iter().filter(|(s, e)| e.accepted && *s <= t).count() as f64;
                (mean_v, acc)
            })
            .collect::<Vec<_>>())
    })?;
    let reps = per_path.len() as f64;
    let mut rows = Vec::new();
    for (k, &t) in times.iter().enumerate() {
        let vs: Vec<f64> = per_path.iter().map(|r| r[k].0).collect();
        let est = BoundEstimate::from_samples(&vs)?;
        let acc = per_path.iter().map(|r| r[k].1).sum::<f64>() / reps;
        rows.push(vec![num(t), num(est.estimate), num(est.se), num(acc), per_path.len().to_string()]);
    }
    Ok(Table {
        header: vec!["t", "mean_v", "v_se", "mean_accepted", "n_replicas"],
        rows,
    })
}

fn couple<M: NonlinearModel + MeetingCoupling>(
    p: &Prepared<M, M::State>,
    v: &LyapunovFn<M::State>,
    run: &RunConfig,
    seed: u64,
) -> Result<Table> {
    let (m0, h0) = (need(&p.m0, "initial")?, need(&p.h0, "initial_y")?);
    let flow_x = law_flow(&p.model, m0, run, seed ^ 0x5eed)?;
    let flow_y = law_flow(&p.model, h0, run, seed ^ 0x5eee)?;
    let times = grid_times(run.horizon, run.grid_step);
    let opts = MergeSplitOptions {
        observe: times.clone(),
        restart_every: run.restart_every,
    };
    let ens = merge_split_ensemble(&p.model, &flow_x, &flow_y, m0, h0, run.horizon, &opts, run.replicas, seed)?;
    let mut rows = Vec::new();
    for &t in &times {
        let tv = estimate_tv_bound(&ens, t)?;
        let vn = estimate_vnorm_bound(&ens, t, v)?;
        rows.push(vec![
            num(t),
            num(fraction_unequal(&ens, t)?),
            num(tv.estimate),
            num(tv.se),
            num(vn.estimate),
            num(vn.se),
            ens.len().to_string(),
        ]);
    }
    Ok(Table {
        header: vec!["t", "p_unequal", "tv_bound", "tv_se", "vnorm_bound", "vnorm_se", "n_replicas"],
        rows,
    })
}

fn couple_particles<P, M>(sys: &P, theta: f64, p: &Prepared<M, P::State>, run: &RunConfig, seed: u64) -> Result<Table>
where
    P: CoupledParticleSystem,
{
    let (m0, h0) = (need(&p.m0, "initial")?, need(&p.h0, "initial_y")?);
    let start = PairSampler::of_measures(m0, h0)?;
    let times = grid_times(run.horizon, run.grid_step);
    let opts = CoupledSystemOptions {
        observe: times.clone(),
        restart_every: run.restart_every,
        record_path: false,
    };
    let n = sys.size();
    let trs = replicate(run.replicas, seed, |_, rng| {
        let (x0, y0): (Vec<_>, Vec<_>) = (0..n).map(|_| start.sample(rng)).unzip();
        simulate_coupled_system(sys, theta, x0, y0, run.horizon, &opts, rng)
    })?;
    let violations: usize = trs.iter().map(|t| t.violations).sum();
    let mut rows = Vec::new();
    for (k, &t) in times.iter().enumerate() {
        let js: Vec<f64> = trs.iter().map(|tr| tr.samples[k].j).collect();
        let ds = trs
            .iter()
            .map(|tr| dbar1(&tr.samples[k].x, &tr.samples[k].y))
            .collect::<Result<Vec<f64>>>()?;
        let (j, d) = (BoundEstimate::from_samples(&js)?, BoundEstimate::from_samples(&ds)?);
        rows.push(vec![
            num(t),
            num(j.estimate),
            num(j.se),
            num(d.estimate),
            num(d.se),
            violations.to_string(),
            trs.len().to_string(),
        ]);
    }
    Ok(Table {
        header: vec!["t", "mean_j", "j_se", "mean_dbar1", "dbar1_se", "violations", "n_replicas"],
        rows,
    })
}

fn certify(p: &Prepared<RunTumble, crate::state::PosVel>, run: &RunConfig, seed: u64) -> Result<Table> {
    let (constants, estimated) = match run.constants {
        Some(c) => (c.validated()?, false),
        None => {
            let t0 = run.t0.expect("checked");
            let (alpha, estimated) = match run.alpha {
                Some(a) => (a, false),
                None => (estimate_meeting(&p.model, &p.starts, t0, run.replicas, seed)?.alpha_hat, true),
            };
            (p.model.constants().with_doeblin(alpha, t0)?, estimated)
        }
    };
    let thetas = run.thetas.clone().unwrap_or_else(|| vec![constants.theta]);
    let mut rows = Vec::new();
    for theta in thetas {
        let c = AssumptionConstants { theta, ..constants }.validated()?;
        let nl = nonlinear_certificate(&c)?.with_estimate_grade(estimated);
        rows.push(certificate_row(nl.beta, nl.c_star, nl.kappa, nl.kappa_tilde, nl.contracts, "literal", estimated));
        for variant in [KappaVariant::Literal, KappaVariant::Corrected] {
            let pc = particle_certificate(&c.for_particles(), variant)?;
            rows.push(certificate_row(
                pc.beta,
                None,
                pc.kappa,
                pc.kappa_tilde,
                pc.contracts,
                variant.label(),
                estimated,
            ));
        }
    }
    Ok(Table {
        header: vec!["beta", "c_star", "kappa", "kappa_tilde", "contracts", "variant", "estimate_grade"],
        rows,
    })
}

fn certificate_row(
    beta: f64,
    c_star: Option<f64>,
    kappa: f64,
    kappa_tilde: f64,
    contracts: bool,
    variant: &str,
    estimated: bool,
) -> Vec<String> {
    vec![
        num(beta),
        c_star.map(num).unwrap_or_default(),
        num(kappa),
        num(kappa_tilde),
        contracts.to_string(),
        variant.to_string(),
        estimated.to_string(),
    ]
}

fn estimate<M: MeetingCoupling>(model: &M, starts: &[(M::State, M::State)], run: &RunConfig, seed: u64) -> Result<Table> {
    let t0s = if run.t0s.is_empty() {
        vec![run.t0.expect("checked")]
    } else {
        run.t0s.clone()
    };
    let mut rows = Vec::new();
    for t0 in t0s {
        let e = estimate_meeting(model, starts, t0, run.replicas, seed)?;
        rows.push(vec![
            num(t0),
            num(e.alpha_hat),
            num(e.alpha_se),
            starts.len().to_string(),
            run.replicas.to_string(),
        ]);
    }
    Ok(Table {
        header: vec!["t0", "alpha_hat", "alpha_se", "n_pairs", "n_replicas"],
        rows,
    })
}
