use log::warn;

use crate::dynamics::{
    realize_observables, reference_trajectory, true_j_on, QueryLedger, RealizedObservable, Scenario, Trajectory,
};
use crate::error::{invalid, Result};
use crate::estimators::ae::{ae_estimate, median_reps, r_for_precision, AeConfig, UnbiasedAe};
use crate::estimators::hadamard::shot_mean;
use crate::estimators::rng::{node_rng, RUN_STREAM};
use crate::estimators::{EstimateReport, Pipeline};
use crate::quadrature::QuadratureRule;

/// How amplitude-estimation grids are chosen.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum AeSchedule {
    /// Derived from `eps` and `delta`.
    #[default]
    Auto,
    /// Explicit grid `r` and repetition count, e.g. to compare pipelines at
    /// equal depth.
    Fixed { r: u64, reps: u64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AeVariant {
    Biased,
    Unbiased,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    pub eps: f64,
    pub delta: f64,
    /// `c` in `M = 2⌈c·log₂(1/ε)⌉`.
    pub quad_c: f64,
    /// Multiplier on the Hoeffding shot count.
    pub hadamard_c: f64,
    /// Overrides `M` when set.
    pub points_per_segment: Option<usize>,
    pub schedule: AeSchedule,
    /// Accuracy of the classical trajectory and ground-truth integrations.
    pub tol: f64,
}

impl PipelineConfig {
    pub fn new(eps: f64, delta: f64) -> Result<Self> {
        if !(eps > 0.0 && eps < 1.0) {
            return invalid(format!("eps must lie in (0, 1), got {eps}"));
        }
        if !(delta > 0.0 && delta < 1.0) {
            return invalid(format!("delta must lie in (0, 1), got {delta}"));
        }
        Ok(Self {
            eps,
            delta,
            quad_c: 1.0,
            hadamard_c: 1.0,
            points_per_segment: None,
            schedule: AeSchedule::Auto,
            tol: 1e-10,
        })
    }

    pub fn rule(&self, horizon: f64) -> Result<QuadratureRule> {
        match self.points_per_segment {
            Some(m) => QuadratureRule::with_points(horizon, m),
            None => QuadratureRule::composite_with(horizon, self.eps, self.quad_c),
        }
    }
}

/// Everything a per-node pipeline needs, computed once classically: the
/// rule, the trajectory at its nodes, the realized observables and the exact
/// per-node integrand values in rescaled units.
#[derive(Debug, Clone)]
pub struct Prepared {
    pub scenario: Scenario,
    pub rule: QuadratureRule,
    pub trajectory: Trajectory,
    pub realized: Vec<RealizedObservable>,
    pub values: Vec<f64>,
    pub true_j: f64,
}

impl Prepared {
    pub fn new(scenario: &Scenario, cfg: &PipelineConfig) -> Result<Self> {
        let rule = cfg.rule(scenario.horizon)?;
        let trajectory = reference_trajectory(scenario, &rule.nodes, cfg.tol)?;
        let realized = realize_observables(scenario, &trajectory);
        let values = realized
            .iter()
            .zip(&trajectory.states)
            .map(|(o, psi)| o.value(psi))
            .collect();
        let true_j = true_j_on(scenario, scenario.horizon, cfg.tol)?;
        Ok(Self {
            scenario: scenario.clone(),
            rule,
            trajectory,
            realized,
            values,
            true_j,
        })
    }

    pub fn scale(&self) -> f64 {
        self.scenario.observable.scale()
    }

    /// Target accuracy for the rescaled integrand.
    pub fn internal_eps(&self, eps: f64) -> f64 {
        eps * self.scale()
    }

    /// Rescaled quadrature sum back in user units plus the control penalty.
    pub fn finish(&self, rescaled: f64) -> f64 {
        rescaled / self.scale() + self.scenario.control_cost(0.0, self.scenario.horizon)
    }

    /// Noise-free quadrature value in user units.
    pub fn exact_quadrature(&self) -> f64 {
        self.finish(self.rule.apply(&self.values).expect("one value per node"))
    }

    #[allow(clippy::too_many_arguments)]
    pub fn report(
        &self,
        pipeline: Pipeline,
        cfg: &PipelineConfig,
        seed: u64,
        estimate: f64,
        ledger: QueryLedger,
        shots: u64,
        depth: u64,
    ) -> EstimateReport {
        EstimateReport {
            pipeline,
            scenario: self.scenario.label.clone(),
            horizon: self.scenario.horizon,
            eps: cfg.eps,
            delta: cfg.delta,
            seed,
            estimate,
            true_value: self.true_j,
            abs_error: (estimate - self.true_j).abs(),
            ledger,
            shots,
            depth,
            n_t: self.rule.n_t(),
        }
    }
}

/// `N_s = ⌈C·16·Σω²·ln(8/δ)/ε²⌉`.
pub fn hadamard_shots(weight_sq: f64, eps: f64, delta: f64, c: f64) -> u64 {
    (c * 16.0 * weight_sq * (8.0 / delta).ln() / (eps * eps))
        .ceil()
        .max(1.0) as u64
}

/// Dense output from Hadamard-test shots at every quadrature node.
pub fn pipeline_hadamard(
    prep: &Prepared,
    cfg: &PipelineConfig,
    seed: u64,
    ledger: &mut QueryLedger,
) -> Result<EstimateReport> {
    let eps = prep.internal_eps(cfg.eps);
    let shots = hadamard_shots(prep.rule.weight_sq_norm(), eps, cfg.delta, cfg.hadamard_c);
    let modulated = prep.scenario.modulation.is_active();
    let parts = if modulated { 2 } else { 1 };
    let norm_bound = prep.scenario.norm_bound();
    let mut run = QueryLedger::new();
    let mut total = 0.0;
    for (k, (obs, psi)) in prep.realized.iter().zip(&prep.trajectory.states).enumerate() {
        let mut rng = node_rng(seed, k as u64);
        let f = obs.expectation_complex(psi);
        let mut value = obs.coeff_re * shot_mean((1.0 + f.re) / 2.0, shots, &mut rng);
        if modulated {
            value += obs.coeff_im * shot_mean((1.0 + f.im) / 2.0, shots, &mut rng);
        }
        total += prep.rule.weights[k] * value;
        run.charge_propagation(norm_bound, obs.time, shots * parts);
        run.charge_observable(shots * parts);
    }
    ledger.merge(&run);
    Ok(prep.report(Pipeline::Hadamard, cfg, seed, prep.finish(total), run, shots, shots))
}

/// Grid and bias bound for the unbiased branch.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UnbiasedPlan {
    pub r: u64,
    pub eta: f64,
    pub passes: u64,
}

impl UnbiasedPlan {
    /// Budget `Var ≤ 9ε²/256` split between noise and bias terms, so two
    /// standard deviations plus the accumulated bias stay under `ε/2`.
    pub fn new(weight_sq: f64, eps: f64, delta: f64) -> Self {
        let eta = (9.0 * eps * eps / (2048.0 * weight_sq)).min(0.5);
        let r = ((20707.0 * weight_sq).sqrt() / eps).ceil().max(2.0) as u64;
        let passes = (8.0 * (1.0 / delta).ln()).ceil().max(1.0) as u64;
        Self { r, eta, passes }
    }
}

fn biased_config(prep: &Prepared, cfg: &PipelineConfig, eps: f64) -> Result<AeConfig> {
    match cfg.schedule {
        AeSchedule::Auto => {
            let horizon = prep.rule.horizon;
            let r = r_for_precision(eps / (4.0 * horizon))?;
            let eta = cfg.delta / prep.rule.n_t() as f64;
            AeConfig::with_reps(r, eta, median_reps(eta))
        }
        AeSchedule::Fixed { r, reps } => AeConfig::with_reps(r, cfg.delta, reps),
    }
}

/// Per-node amplitude estimation of `a_k = (1 + f_k)/2`.
pub fn pipeline_hs_ae(
    prep: &Prepared,
    cfg: &PipelineConfig,
    variant: AeVariant,
    seed: u64,
    ledger: &mut QueryLedger,
) -> Result<EstimateReport> {
    let eps = prep.internal_eps(cfg.eps);
    let norm_bound = prep.scenario.norm_bound();
    let mut run = QueryLedger::new();
    match variant {
        AeVariant::Biased => {
            let ae = biased_config(prep, cfg, eps)?;
            let mut total = 0.0;
            for (k, &f) in prep.values.iter().enumerate() {
                let mut rng = node_rng(seed, k as u64);
                let a = ((1.0 + f) / 2.0).clamp(0.0, 1.0);
                let estimate = 2.0 * ae_estimate(a, &ae, &mut rng) - 1.0;
                total += prep.rule.weights[k] * estimate;
                run.charge_propagation(norm_bound, prep.rule.nodes[k], ae.depth());
                run.charge_observable(ae.depth());
            }
            ledger.merge(&run);
            Ok(prep.report(
                Pipeline::AeBiased,
                cfg,
                seed,
                prep.finish(total),
                run,
                ae.reps,
                ae.depth(),
            ))
        }
        AeVariant::Unbiased => {
            let weight_sq = prep.rule.weight_sq_norm();
            let plan = match cfg.schedule {
                AeSchedule::Auto => UnbiasedPlan::new(weight_sq, eps, cfg.delta),
                AeSchedule::Fixed { r, reps } => UnbiasedPlan {
                    r,
                    eta: (9.0 * eps * eps / (2048.0 * weight_sq)).min(0.5),
                    passes: reps.max(1),
                },
            };
            let horizon = prep.rule.horizon;
            if eps / horizon > 0.1 {
                warn!("eps/T = {:.3} is not small; accumulated bias may matter", eps / horizon);
            }
            if 2.0 * horizon * plan.eta > eps / 8.0 {
                warn!(
                    "accumulated bias bound {:.3e} exceeds eps/8 = {:.3e}",
                    2.0 * horizon * plan.eta,
                    eps / 8.0
                );
            }
            let estimator = UnbiasedAe::new(plan.r, plan.eta, &mut node_rng(seed, RUN_STREAM))?;
            let depth = estimator.depth();
            let n_t = prep.values.len() as u64;
            let mut passes: Vec<f64> = Vec::with_capacity(plan.passes as usize);
            for pass in 0..plan.passes {
                let mut total = 0.0;
                for (k, &f) in prep.values.iter().enumerate() {
                    let mut rng = node_rng(seed, pass * n_t + k as u64);
                    let p = ((1.0 + f) / 2.0).clamp(0.0, 1.0);
                    total += prep.rule.weights[k] * (2.0 * estimator.sample(p, &mut rng) - 1.0);
                    run.charge_propagation(norm_bound, prep.rule.nodes[k], depth);
                    run.charge_observable(depth);
                }
                passes.push(total);
            }
            passes.sort_by(|a, b| a.total_cmp(b));
            let mid = passes.len() / 2;
            let median = if passes.len() % 2 == 1 {
                passes[mid]
            } else {
                0.5 * (passes[mid - 1] + passes[mid])
            };
            ledger.merge(&run);
            Ok(prep.report(
                Pipeline::AeUnbiased,
                cfg,
                seed,
                prep.finish(median),
                run,
                plan.passes,
                depth,
            ))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{
        propagation_cost, ClosedForm, HamiltonianSpec, ObservableKind, ObservableSpec, QuantumState, Weight,
    };
    use crate::linalg::CMatrix;

    fn rabi() -> HamiltonianSpec {
        HamiltonianSpec::closed_form(ClosedForm::Rabi {
            splitting: 2.0,
            drive: 1.0,
            frequency: 1.3,
        })
    }

    fn scenario_a(t: f64) -> Scenario {
        Scenario::new(
            "a",
            rabi(),
            ObservableSpec::new(ObservableKind::SelfFollowing, 2).unwrap(),
            QuantumState::basis(2, 0).unwrap(),
            t,
        )
        .unwrap()
    }

    fn scenario_b(t: f64) -> Scenario {
        let kind = ObservableKind::Modulated {
            base: Box::new(ObservableKind::SelfFollowing),
            weight: Weight::Cos(1.0),
        };
        Scenario::new(
            "b",
            rabi(),
            ObservableSpec::new(kind, 2).unwrap(),
            QuantumState::basis(2, 0).unwrap(),
            t,
        )
        .unwrap()
    }

    fn hits(cfg: &PipelineConfig, run: impl Fn(u64) -> EstimateReport) -> usize {
        (0..20u64).filter(|&s| run(s).abs_error <= cfg.eps).count()
    }

    #[test]
    fn hadamard_scenario_a() {
        let cfg = PipelineConfig::new(0.1, 0.1).unwrap();
        let prep = Prepared::new(&scenario_a(2.0), &cfg).unwrap();
        assert!((prep.true_j - 2.0).abs() < 1e-8);
        assert!((prep.exact_quadrature() - 2.0).abs() < 0.05);
        let ok = hits(&cfg, |s| {
            pipeline_hadamard(&prep, &cfg, s, &mut QueryLedger::new()).unwrap()
        });
        assert!(ok >= 18);
    }

    #[test]
    fn hadamard_ledger_replay() {
        let cfg = PipelineConfig::new(0.2, 0.1).unwrap();
        let prep = Prepared::new(&scenario_a(2.0), &cfg).unwrap();
        let mut ledger = QueryLedger::new();
        let rep = pipeline_hadamard(&prep, &cfg, 3, &mut ledger).unwrap();
        let expected: u64 = prep
            .rule
            .nodes
            .iter()
            .map(|&t| propagation_cost(2f64.sqrt(), t) * rep.shots)
            .sum();
        assert_eq!(ledger.h_queries, expected);
        assert_eq!(ledger.sp_queries, rep.shots * prep.rule.n_t() as u64);
        assert_eq!(ledger, rep.ledger);
    }

    #[test]
    fn zero_observable_gives_small_estimate() {
        let cfg = PipelineConfig::new(0.1, 0.1).unwrap();
        let sc = Scenario::new(
            "zero",
            rabi(),
            ObservableSpec::constant(CMatrix::zeros(2, 2)).unwrap(),
            QuantumState::basis(2, 0).unwrap(),
            1.0,
        )
        .unwrap();
        let prep = Prepared::new(&sc, &cfg).unwrap();
        let rep = pipeline_hadamard(&prep, &cfg, 0, &mut QueryLedger::new()).unwrap();
        assert!(rep.estimate.abs() <= cfg.eps);
    }

    #[test]
    fn biased_ae_scenario_b() {
        let cfg = PipelineConfig::new(0.05, 0.1).unwrap();
        let prep = Prepared::new(&scenario_b(std::f64::consts::FRAC_PI_2), &cfg).unwrap();
        assert!((prep.true_j - 1.0).abs() < 1e-8);
        let ok = hits(&cfg, |s| {
            pipeline_hs_ae(&prep, &cfg, AeVariant::Biased, s, &mut QueryLedger::new()).unwrap()
        });
        assert!(ok >= 18);
    }

    #[test]
    fn unbiased_ae_scenario_b() {
        let cfg = PipelineConfig::new(0.05, 0.1).unwrap();
        let prep = Prepared::new(&scenario_b(std::f64::consts::FRAC_PI_2), &cfg).unwrap();
        let ok = hits(&cfg, |s| {
            pipeline_hs_ae(&prep, &cfg, AeVariant::Unbiased, s, &mut QueryLedger::new()).unwrap()
        });
        assert!(ok >= 18);
    }

    #[test]
    fn fixed_schedule_is_respected() {
        let mut cfg = PipelineConfig::new(0.1, 0.1).unwrap();
        cfg.schedule = AeSchedule::Fixed { r: 40, reps: 1 };
        let prep = Prepared::new(&scenario_a(1.0), &cfg).unwrap();
        let rep = pipeline_hs_ae(&prep, &cfg, AeVariant::Biased, 0, &mut QueryLedger::new()).unwrap();
        assert_eq!((rep.depth, rep.shots), (40, 1));
        assert_eq!(rep.ledger.sp_queries, 40 * prep.rule.n_t() as u64);
    }

    #[test]
    fn unbiased_plan_budget() {
        let plan = UnbiasedPlan::new(0.5, 0.01, 0.05);
        let var = 4.0 * 0.5 * (91.0 / (plan.r * plan.r) as f64 + plan.eta);
        assert!(var <= 9.0 * 0.01f64.powi(2) / 256.0 * (1.0 + 1e-12));
        assert_eq!(plan.passes, 24);
        assert!(crate::estimators::unbiased_depth(plan.r, plan.eta) > plan.r);
    }
}
