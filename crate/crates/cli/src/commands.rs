//! The `analyze`, `simulate`, `sweep` and `spectrum` commands. Each writes
//! its data files into the output directory and returns a one-line summary
//! plus the process exit code.

use std::io::Write;
use std::path::PathBuf;

use anyhow::{Context, Result};
use mlcons::quasipoly::{axis_scan, network_stable_oracle};
use mlcons::sim::{classify_trajectory, consensus_value, disagreement_norm, random_initial_state, simulate};
use mlcons::stability::{classify, delay_free_consensus, two_layer_margins};
use mlcons::{
    CharInstance, Classification, Complex64, DelayPair, Exec, Graph, InteractionPattern, LaplacianSpectrum,
    MarginReport, OracleReport, PatternSpectrum, SimConfig, Trajectory, TwoLayerReport, Verdict,
};
use serde::Serialize;

use crate::config::RunConfig;
use crate::output::{create, round6, sig9, write_json};

pub const EXIT_OK: u8 = 0;
pub const EXIT_ERROR: u8 = 1;
pub const EXIT_UNSTABLE: u8 = 2;
pub const EXIT_UNDECIDED: u8 = 3;

/// Grid points evaluated between two flushes of the sweep CSV.
const SWEEP_CHUNK: usize = 16;

#[derive(Debug, Clone, Default)]
pub struct Options {
    pub out: Option<PathBuf>,
    pub oracle: bool,
    pub sim: bool,
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Outcome {
    pub summary: String,
    pub exit_code: u8,
}

pub fn verdict_exit_code(v: Verdict) -> u8 {
    match v {
        Verdict::ConsensusGuaranteed => EXIT_OK,
        Verdict::UnstableGuaranteed => EXIT_UNSTABLE,
        Verdict::MarginalBoundary | Verdict::OutsideTheory => EXIT_UNDECIDED,
    }
}

fn output_dir(cfg: &RunConfig, opts: &Options) -> Result<PathBuf> {
    let dir = opts
        .out
        .clone()
        .or_else(|| cfg.output.clone())
        .unwrap_or_else(|| PathBuf::from("out"));
    std::fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
    Ok(dir)
}

#[derive(Serialize)]
struct GraphReport<'a> {
    n: usize,
    /// 1-based.
    edges: Vec<[usize; 2]>,
    laplacian: &'a LaplacianSpectrum,
}

impl<'a> GraphReport<'a> {
    fn new(g: &Graph, laplacian: &'a LaplacianSpectrum) -> Self {
        Self {
            n: g.n(),
            edges: g.edges().iter().map(|&(i, j)| [i + 1, j + 1]).collect(),
            laplacian,
        }
    }
}

#[derive(Serialize)]
struct PatternReport<'a> {
    /// Rounded to 6 significant digits.
    rows: Vec<Vec<f64>>,
    cross_spectrum: &'a PatternSpectrum,
    hurwitz_delay_free: bool,
    gershgorin_bound: bool,
}

impl<'a> PatternReport<'a> {
    fn new(p: &InteractionPattern, s: &'a PatternSpectrum) -> Result<Self> {
        Ok(Self {
            rows: p.rows().into_iter().map(|r| r.into_iter().map(round6).collect()).collect(),
            cross_spectrum: s,
            hurwitz_delay_free: delay_free_consensus(p)?,
            gershgorin_bound: p.gershgorin_bound(),
        })
    }
}

struct Model {
    graph: Graph,
    pattern: InteractionPattern,
    laplacian: LaplacianSpectrum,
    spectrum: PatternSpectrum,
}

impl Model {
    fn build(cfg: &RunConfig) -> Result<Self> {
        let graph = cfg.build_graph()?;
        let pattern = cfg.build_pattern()?;
        let laplacian = graph.laplacian_spectrum()?;
        let spectrum = pattern.cross_spectrum()?;
        Ok(Self { graph, pattern, laplacian, spectrum })
    }

    fn two_layer(&self) -> Option<TwoLayerReport> {
        let a = self.pattern.matrix();
        (self.pattern.dim() == 2)
            .then(|| two_layer_margins(a[(0, 1)], a[(1, 0)], self.laplacian.lambda_max).ok())
            .flatten()
    }
}

#[derive(Serialize)]
struct OracleSection {
    stable: bool,
    rightmost: f64,
    critical_lambda: f64,
    critical_mu: Complex64,
    instances: usize,
    /// Whether the oracle confirms a guaranteed verdict; `null` when the
    /// theory makes no claim.
    agrees_with_theory: Option<bool>,
}

fn oracle_section(r: &OracleReport, margin: f64, verdict: Verdict) -> OracleSection {
    let stable = r.rightmost < -margin;
    let agrees_with_theory = match verdict {
        Verdict::ConsensusGuaranteed => Some(stable),
        Verdict::UnstableGuaranteed => Some(!stable),
        _ => None,
    };
    OracleSection {
        stable,
        rightmost: r.rightmost,
        critical_lambda: r.critical_lambda,
        critical_mu: r.critical_mu,
        instances: r.instances,
        agrees_with_theory,
    }
}

#[derive(Serialize)]
struct Analysis<'a> {
    name: &'a str,
    graph: GraphReport<'a>,
    pattern: PatternReport<'a>,
    margins: &'a MarginReport,
    two_layer: Option<TwoLayerReport>,
    oracle: Option<OracleSection>,
}

pub fn analyze(cfg: &RunConfig, opts: &Options) -> Result<Outcome> {
    let m = Model::build(cfg)?;
    let delays = cfg.delays()?;
    let report = classify(&m.laplacian, &m.spectrum, delays)?;
    let dir = output_dir(cfg, opts)?;

    let oracle = if opts.oracle {
        let r = network_stable_oracle(&m.laplacian, &m.spectrum, delays, Exec::default())?;
        let inst = CharInstance::new(r.critical_lambda, r.critical_mu, delays)?;
        let mut w = create(&dir.join("oracle_scan.csv"))?;
        writeln!(w, "omega,abs_f")?;
        for (omega, g) in axis_scan(&inst, inst.omega_bound(), 2000) {
            writeln!(w, "{},{}", sig9(omega), sig9(g))?;
        }
        w.flush()?;
        let section = oracle_section(&r, cfg.tolerances.oracle_margin, report.verdict);
        if section.agrees_with_theory == Some(false) {
            eprintln!(
                "warning: oracle (rightmost root {:.3e}) contradicts verdict {}",
                r.rightmost,
                report.verdict.as_str()
            );
        }
        Some(section)
    } else {
        None
    };

    let analysis = Analysis {
        name: cfg.display_name(),
        graph: GraphReport::new(&m.graph, &m.laplacian),
        pattern: PatternReport::new(&m.pattern, &m.spectrum)?,
        margins: &report,
        two_layer: m.two_layer(),
        oracle,
    };
    write_json(&dir.join("analysis.json"), &analysis)?;

    let mut summary = format!(
        "{}: {} ({}) at tau1={} tau2={}",
        cfg.display_name(),
        report.verdict.as_str(),
        report.justification.as_str(),
        sig9(delays.tau1),
        sig9(delays.tau2),
    );
    if let Some(t) = report.tau_max {
        summary.push_str(&format!(", tau_max={t:.6}"));
    }
    if let Some(o) = &analysis.oracle {
        summary.push_str(if o.stable { ", oracle stable" } else { ", oracle unstable" });
    }
    if let Some(note) = &report.note {
        summary.push_str(&format!(" [{note}]"));
    }
    Ok(Outcome { summary, exit_code: verdict_exit_code(report.verdict) })
}

fn sim_config(cfg: &RunConfig, m: &Model, delays: DelayPair, seed: Option<u64>) -> SimConfig {
    let s = &cfg.simulation;
    let x0 = match (cfg.x0(), seed) {
        (Some(x0), None) => x0,
        (_, seed) => random_initial_state(m.graph.n(), m.pattern.dim(), seed.unwrap_or(s.seed)),
    };
    SimConfig::new(m.graph.clone(), m.pattern.clone(), delays)
        .with_x0(x0)
        .with_horizon(s.horizon)
        .with_step(s.step)
        .with_history(s.history)
        .with_record_every(s.record_every)
}

fn warn_seed_override(cfg: &RunConfig, opts: &Options) {
    if cfg.x0().is_some() && opts.seed.is_some() {
        eprintln!("warning: --seed replaces the x0 given in the config");
    }
}

fn run_simulation(cfg: &RunConfig, sim: &SimConfig) -> Result<Trajectory> {
    let mut traj = simulate(sim)?;
    let t = &cfg.tolerances;
    traj.classification = classify_trajectory(&traj, t.convergence_eps, t.convergence_window);
    Ok(traj)
}

#[derive(Serialize)]
struct SimSummary<'a> {
    name: &'a str,
    n: usize,
    d: usize,
    delays: DelayPair,
    step: f64,
    horizon: f64,
    classification: &'a Classification,
    initial_average: Vec<f64>,
    final_mean: Vec<f64>,
    initial_disagreement: f64,
    final_disagreement: f64,
    /// Largest deviation of a per-layer sum from its initial value.
    layer_sum_drift: f64,
    aborted_at: Option<f64>,
    /// Angular frequency of agent 1, layer 1 about its layer mean over the
    /// final third of the run.
    oscillation_frequency: Option<f64>,
}

pub fn simulate_cmd(cfg: &RunConfig, opts: &Options) -> Result<Outcome> {
    let m = Model::build(cfg)?;
    let delays = cfg.delays()?;
    warn_seed_override(cfg, opts);
    let sim = sim_config(cfg, &m, delays, opts.seed);
    let traj = run_simulation(cfg, &sim)?;
    let dir = output_dir(cfg, opts)?;
    let (n, d) = (traj.n, traj.d);

    let mut w = create(&dir.join("trajectory.csv"))?;
    writeln!(w, "t,agent,layer,value")?;
    for (t, x) in traj.times.iter().zip(&traj.states) {
        let t = sig9(*t);
        for i in 0..n {
            for q in 0..d {
                writeln!(w, "{t},{},{},{}", i + 1, q + 1, sig9(x[i * d + q]))?;
            }
        }
    }
    w.flush()?;
    let mut w = create(&dir.join("disagreement.csv"))?;
    writeln!(w, "t,disagreement")?;
    for (t, e) in traj.times.iter().zip(&traj.disagreement) {
        writeln!(w, "{},{}", sig9(*t), sig9(*e))?;
    }
    w.flush()?;

    let t_end = *traj.times.last().expect("trajectory holds the initial state");
    let summary = SimSummary {
        name: cfg.display_name(),
        n,
        d,
        delays,
        step: traj.step,
        horizon: sim.horizon,
        classification: &traj.classification,
        initial_average: consensus_value(&sim.x0, n, d),
        final_mean: traj.final_mean(),
        initial_disagreement: disagreement_norm(&sim.x0, n, d),
        final_disagreement: traj.final_disagreement(),
        layer_sum_drift: traj.layer_sum_drift,
        aborted_at: traj.aborted_at,
        oscillation_frequency: traj.oscillation_frequency(0, 0, t_end * 2.0 / 3.0),
    };
    write_json(&dir.join("summary.json"), &summary)?;

    Ok(Outcome {
        summary: format!(
            "{}: {} at t={}, final disagreement {}, layer-sum drift {}",
            cfg.display_name(),
            traj.classification.label(),
            sig9(t_end),
            sig9(traj.final_disagreement()),
            sig9(traj.layer_sum_drift),
        ),
        exit_code: EXIT_OK,
    })
}

struct SweepRow {
    delays: DelayPair,
    theory: Verdict,
    oracle: Option<bool>,
    sim: Option<Classification>,
}

fn sweep_point(cfg: &RunConfig, m: &Model, opts: &Options, delays: DelayPair) -> Result<SweepRow> {
    let theory = classify(&m.laplacian, &m.spectrum, delays)?.verdict;
    let oracle = if opts.oracle {
        let r = network_stable_oracle(&m.laplacian, &m.spectrum, delays, Exec::Sequential)?;
        Some(r.rightmost < -cfg.tolerances.oracle_margin)
    } else {
        None
    };
    let sim = if opts.sim {
        let mut sc = sim_config(cfg, m, delays, opts.seed);
        // Grid points may sit below ten steps of delay; refine rather than fail.
        if let Some(tau) = delays.min_positive() {
            sc.step = sc.step.min(tau / 10.0);
        }
        Some(run_simulation(cfg, &sc)?.classification)
    } else {
        None
    };
    Ok(SweepRow { delays, theory, oracle, sim })
}

pub fn sweep(cfg: &RunConfig, opts: &Options) -> Result<Outcome> {
    let m = Model::build(cfg)?;
    if !m.laplacian.is_connected() {
        return Err(mlcons::Error::DisconnectedGraph(m.laplacian.lambda2).into());
    }
    let points = cfg.grid.context("field `grid`: required for sweep")?.points()?;
    if opts.sim {
        warn_seed_override(cfg, opts);
    }
    let dir = output_dir(cfg, opts)?;
    let mut w = create(&dir.join("sweep.csv"))?;
    writeln!(w, "tau1,tau2,theory,oracle,sim")?;

    let (mut guaranteed, mut warnings) = (0, 0);
    for chunk in points.chunks(SWEEP_CHUNK) {
        let rows = Exec::default().try_map(chunk, |&p| sweep_point(cfg, &m, opts, p))?;
        for r in rows {
            let oracle = r.oracle.map_or("", |s| if s { "stable" } else { "unstable" });
            let sim = r.sim.as_ref().map_or("", Classification::label);
            writeln!(w, "{},{},{},{oracle},{sim}", sig9(r.delays.tau1), sig9(r.delays.tau2), r.theory.as_str())?;
            if r.theory == Verdict::ConsensusGuaranteed {
                guaranteed += 1;
                match &r.sim {
                    Some(Classification::Diverged { .. }) => {
                        warnings += 1;
                        eprintln!(
                            "warning: tau1={} tau2={}: consensus guaranteed but simulation diverged",
                            sig9(r.delays.tau1),
                            sig9(r.delays.tau2)
                        );
                    }
                    Some(Classification::Bounded) => {
                        warnings += 1;
                        eprintln!(
                            "warning: tau1={} tau2={}: consensus guaranteed but simulation only Bounded; horizon may be too short",
                            sig9(r.delays.tau1),
                            sig9(r.delays.tau2)
                        );
                    }
                    _ => {}
                }
            }
        }
        w.flush()?;
    }

    Ok(Outcome {
        summary: format!(
            "{}: {} grid points, {guaranteed} consensus-guaranteed, {warnings} warnings",
            cfg.display_name(),
            points.len()
        ),
        exit_code: EXIT_OK,
    })
}

#[derive(Serialize)]
struct SpectrumReport<'a> {
    name: &'a str,
    graph: GraphReport<'a>,
    pattern: PatternReport<'a>,
}

pub fn spectrum(cfg: &RunConfig, opts: &Options) -> Result<Outcome> {
    let m = Model::build(cfg)?;
    let dir = output_dir(cfg, opts)?;
    let report = SpectrumReport {
        name: cfg.display_name(),
        graph: GraphReport::new(&m.graph, &m.laplacian),
        pattern: PatternReport::new(&m.pattern, &m.spectrum)?,
    };
    write_json(&dir.join("spectrum.json"), &report)?;
    Ok(Outcome {
        summary: format!(
            "{}: lambda_max={:.6} lambda2={:.6} max|mu|={:.6} c={:.6} zeta_max={:.6}",
            cfg.display_name(),
            m.laplacian.lambda_max,
            m.laplacian.lambda2,
            m.spectrum.mu_max_abs,
            m.spectrum.c,
            m.spectrum.zeta_max,
        ),
        exit_code: EXIT_OK,
    })
}
