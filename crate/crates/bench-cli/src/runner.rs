//! Sweeps over `(T, eps)` grids with seeded, parallel trials.

use std::io::Write;
use std::time::Instant;

use anyhow::{bail, Context};
use rayon::prelude::*;
use serde::Serialize;

use qdo_core::carleman::pipeline_carleman;
use qdo_core::dynamics::{QueryLedger, Scenario};
use qdo_core::estimators::rng::trial_seed;
use qdo_core::estimators::{
    pipeline_hadamard, pipeline_hs_ae, AeSchedule, AeVariant, EstimateReport, Pipeline, PipelineConfig, Prepared,
};
use qdo_core::historystate::pipeline_lode;
use qdo_core::Error;

use crate::scenarios;
use crate::schema::ScenarioDoc;

/// Largest state dimension accepted.
pub const MAX_DIM: usize = 8;
/// Largest quadrature node count accepted.
pub const MAX_NODES: usize = 512;
/// Largest lifted dimension `n² + 1` accepted by the Carleman pipeline.
pub const MAX_LIFTED: usize = 65;

/// Default master seed when neither a flag nor `QDO_SEED` is given.
pub const DEFAULT_SEED: u64 = 20240607;

#[derive(Debug, Clone, PartialEq)]
pub struct SweepConfig {
    /// Built-in label or path to a JSON scenario file.
    pub scenario: String,
    pub pipeline: Pipeline,
    pub t_values: Vec<f64>,
    pub eps_values: Vec<f64>,
    pub delta: f64,
    pub trials: usize,
    pub seed: u64,
    /// `c` in the per-segment point count.
    pub quad_c: f64,
    /// Multiplier on the Hadamard shot count.
    pub hadamard_c: f64,
    pub points_per_segment: Option<usize>,
    pub schedule: AeSchedule,
    /// Fixed `eps` for the T-axis fit.
    pub fit_eps: f64,
    /// Fixed `T` for the eps-axis fit.
    pub fit_t: f64,
    /// Record wall-clock time per trial; off by default so output is reproducible.
    pub timing: bool,
}

impl SweepConfig {
    pub fn new(scenario: impl Into<String>, pipeline: Pipeline) -> Self {
        Self {
            scenario: scenario.into(),
            pipeline,
            t_values: vec![2.0],
            eps_values: vec![0.1],
            delta: 0.1,
            trials: 1,
            seed: DEFAULT_SEED,
            quad_c: 1.0,
            hadamard_c: 1.0,
            points_per_segment: None,
            schedule: AeSchedule::Auto,
            fit_eps: 0.05,
            fit_t: 4.0,
            timing: false,
        }
    }

    pub fn validate(&self) -> anyhow::Result<()> {
        if self.trials == 0 {
            bail!("trials must be at least 1");
        }
        if self.t_values.is_empty() || self.eps_values.is_empty() {
            bail!("need at least one T value and one eps value");
        }
        if let Some(t) = self.t_values.iter().find(|t| !(**t > 0.0 && t.is_finite())) {
            bail!("T values must be positive, got {t}");
        }
        if let Some(e) = self.eps_values.iter().find(|e| !(**e > 0.0 && **e < 1.0)) {
            bail!("eps values must lie in (0, 1), got {e}");
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            bail!("delta must lie in (0, 1), got {}", self.delta);
        }
        Ok(())
    }

    pub fn pipeline_config(&self, eps: f64) -> anyhow::Result<PipelineConfig> {
        let mut cfg = PipelineConfig::new(eps, self.delta)?;
        cfg.quad_c = self.quad_c;
        cfg.hadamard_c = self.hadamard_c;
        cfg.points_per_segment = self.points_per_segment;
        cfg.schedule = self.schedule;
        Ok(cfg)
    }
}

/// One CSV row.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Row {
    pub pipeline: String,
    pub scenario: String,
    #[serde(rename = "T")]
    pub horizon: f64,
    pub eps: f64,
    pub delta: f64,
    pub seed: u64,
    pub estimate: f64,
    #[serde(rename = "true_J")]
    pub true_j: f64,
    pub abs_err: f64,
    pub h_queries: u64,
    pub sp_queries: u64,
    pub obs_queries: u64,
    pub depth: u64,
    pub wall_ms: f64,
    #[serde(skip)]
    pub trial: usize,
    #[serde(skip)]
    pub n_t: usize,
}

impl Row {
    fn from_report(r: &EstimateReport, trial: usize, wall_ms: f64) -> Self {
        Self {
            pipeline: r.pipeline.as_str().into(),
            scenario: r.scenario.clone(),
            horizon: r.horizon,
            eps: r.eps,
            delta: r.delta,
            seed: r.seed,
            estimate: r.estimate,
            true_j: r.true_value,
            abs_err: r.abs_error,
            h_queries: r.ledger.h_queries,
            sp_queries: r.ledger.sp_queries,
            obs_queries: r.ledger.obs_queries,
            depth: r.depth,
            wall_ms,
            trial,
            n_t: r.n_t,
        }
    }

    pub fn signed_err(&self) -> f64 {
        self.estimate - self.true_j
    }
}

/// Rejects inputs beyond the dense linear-algebra budget.
pub fn check_limits(scenario: &Scenario, prep: &Prepared, pipeline: Pipeline) -> qdo_core::Result<()> {
    let n = scenario.dim();
    if n > MAX_DIM {
        return Err(Error::TooLarge(format!("state dimension {n} exceeds {MAX_DIM}")));
    }
    let nodes = prep.rule.n_t();
    if nodes > MAX_NODES {
        return Err(Error::TooLarge(format!("{nodes} quadrature nodes exceed {MAX_NODES}")));
    }
    if pipeline == Pipeline::Carleman && n * n + 1 > MAX_LIFTED {
        return Err(Error::TooLarge(format!(
            "lifted dimension {} exceeds {MAX_LIFTED}",
            n * n + 1
        )));
    }
    Ok(())
}

fn check_combination(scenario: &Scenario, pipeline: Pipeline) -> anyhow::Result<()> {
    if pipeline == Pipeline::Carleman && (!scenario.is_time_independent() || scenario.modulation.is_active()) {
        bail!(
            "scenario `{}` is time-dependent: the Carleman padded amplitude-estimation pipeline is restricted to \
             time-independent Hamiltonians and observables",
            scenario.label
        );
    }
    Ok(())
}

/// Runs one pipeline once on prepared data.
pub fn dispatch(
    pipeline: Pipeline,
    prep: &Prepared,
    cfg: &PipelineConfig,
    seed: u64,
) -> qdo_core::Result<EstimateReport> {
    let mut ledger = QueryLedger::new();
    match pipeline {
        Pipeline::Hadamard => pipeline_hadamard(prep, cfg, seed, &mut ledger),
        Pipeline::AeBiased => pipeline_hs_ae(prep, cfg, AeVariant::Biased, seed, &mut ledger),
        Pipeline::AeUnbiased => pipeline_hs_ae(prep, cfg, AeVariant::Unbiased, seed, &mut ledger),
        Pipeline::Lode => pipeline_lode(prep, cfg, seed, &mut ledger),
        Pipeline::Carleman => pipeline_carleman(prep, cfg, seed, &mut ledger),
    }
}

/// Classical preparation for one grid point.
pub fn prepare(doc: &ScenarioDoc, horizon: f64, pipeline: Pipeline, cfg: &PipelineConfig) -> anyhow::Result<Prepared> {
    let mut doc = doc.clone();
    if doc.horizon != horizon {
        doc.horizon = horizon;
        doc.true_j = None;
    }
    let scenario = doc.to_scenario()?;
    check_combination(&scenario, pipeline)?;
    let prep = Prepared::new(&scenario, cfg).with_context(|| format!("preparing `{}` at T = {horizon}", doc.label))?;
    check_limits(&scenario, &prep, pipeline)?;
    Ok(prep)
}

/// Runs `trials` trials at each listed `(T, eps)` point; rows are ordered by
/// `(T, eps, trial)` regardless of scheduling.
pub fn run_points(cfg: &SweepConfig, points: &[(f64, f64)]) -> anyhow::Result<Vec<Row>> {
    cfg.validate()?;
    let doc = scenarios::resolve(&cfg.scenario, None)?;
    let mut rows = Vec::new();
    for &(t, eps) in points {
        let pcfg = cfg.pipeline_config(eps)?;
        let prep = prepare(&doc, t, cfg.pipeline, &pcfg)?;
        let point: Vec<Row> = (0..cfg.trials)
            .into_par_iter()
            .map(|trial| {
                let seed = trial_seed(cfg.seed, trial as u64);
                let start = Instant::now();
                let report = dispatch(cfg.pipeline, &prep, &pcfg, seed)?;
                let wall = if cfg.timing {
                    start.elapsed().as_secs_f64() * 1e3
                } else {
                    0.0
                };
                Ok(Row::from_report(&report, trial, wall))
            })
            .collect::<qdo_core::Result<_>>()?;
        rows.extend(point);
    }
    rows.sort_by(|a, b| {
        a.horizon
            .total_cmp(&b.horizon)
            .then(a.eps.total_cmp(&b.eps))
            .then(a.trial.cmp(&b.trial))
    });
    Ok(rows)
}

/// Full `T × eps` grid.
pub fn run(cfg: &SweepConfig) -> anyhow::Result<Vec<Row>> {
    let points: Vec<_> = cfg
        .t_values
        .iter()
        .flat_map(|&t| cfg.eps_values.iter().map(move |&e| (t, e)))
        .collect();
    run_points(cfg, &points)
}

pub fn write_csv<W: Write>(rows: &[Row], out: W) -> anyhow::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

/// Fraction of rows with `abs_err ≤ eps`.
pub fn success_rate(rows: &[Row]) -> f64 {
    if rows.is_empty() {
        return 0.0;
    }
    rows.iter().filter(|r| r.abs_err <= r.eps).count() as f64 / rows.len() as f64
}
