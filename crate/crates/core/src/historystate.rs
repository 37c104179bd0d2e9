//! History-state relaxation: a block lower-bidiagonal system whose solution
//! stacks the trajectory at every quadrature node, a block-diagonal selection
//! observable, and a single global amplitude estimation of the dense output.

use std::io::Write;

use crate::dynamics::{propagation_cost, propagator, QueryLedger, RealizedObservable, Scenario};
use crate::error::{invalid, Error, Result};
use crate::estimators::rng::node_rng;
use crate::estimators::{
    ae_estimate, median_reps, r_for_precision, AeConfig, AeSchedule, EstimateReport, Pipeline, PipelineConfig, Prepared,
};
use crate::linalg::{hermitian_norm, CMatrix, CVector, C64};
use crate::quadrature::QuadratureRule;

/// `L|Ψ⟩ = |B⟩` with identity diagonal blocks and `−U_k` below the diagonal.
#[derive(Debug, Clone)]
pub struct HistorySystem {
    pub n: usize,
    /// `U_k` over `[t_{k−1}, t_k]` for `k = 1..=N_t−1` (node count minus one).
    pub propagators: Vec<CMatrix>,
    pub b: CVector,
    pub horizon: f64,
    pub norm_bound: f64,
}

impl HistorySystem {
    pub fn blocks(&self) -> usize {
        self.propagators.len() + 1
    }

    pub fn len(&self) -> usize {
        self.blocks() * self.n
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Dense `L`.
    pub fn matrix(&self) -> CMatrix {
        let n = self.n;
        let mut l = CMatrix::identity(self.len(), self.len());
        for (k, u) in self.propagators.iter().enumerate() {
            l.view_mut(((k + 1) * n, k * n), (n, n)).copy_from(&(-u));
        }
        l
    }

    /// `L·x` without forming `L`.
    pub fn apply(&self, x: &CVector) -> Result<CVector> {
        if x.len() != self.len() {
            return Err(Error::LengthMismatch {
                expected: self.len(),
                got: x.len(),
            });
        }
        let n = self.n;
        let mut out = x.clone();
        for (k, u) in self.propagators.iter().enumerate() {
            let prev = x.rows(k * n, n);
            let mut block = out.rows_mut((k + 1) * n, n);
            block -= u * prev;
        }
        Ok(out)
    }

    pub fn residual(&self, x: &CVector) -> Result<f64> {
        Ok((self.apply(x)? - &self.b).norm())
    }

    /// Nonzeros of `L` as `row,col,re,im` rows.
    pub fn write_triplets<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "row,col,re,im")?;
        let n = self.n;
        for i in 0..self.len() {
            writeln!(out, "{i},{i},1,0")?;
        }
        for (k, u) in self.propagators.iter().enumerate() {
            for i in 0..n {
                for j in 0..n {
                    let z = -u[(i, j)];
                    if z != C64::new(0.0, 0.0) {
                        writeln!(out, "{},{},{:e},{:e}", (k + 1) * n + i, k * n + j, z.re, z.im)?;
                    }
                }
            }
        }
        Ok(())
    }
}

/// Assembles `L` and `B = (ψ(t_0), 0, …, 0)` from exact one-step propagators.
pub fn build_system(scenario: &Scenario, rule: &QuadratureRule, tol: f64) -> Result<HistorySystem> {
    if rule.nodes.is_empty() || rule.horizon > scenario.horizon * (1.0 + 1e-12) {
        return invalid("quadrature rule must lie inside the scenario horizon");
    }
    let n = scenario.dim();
    let per_step = tol / rule.n_t() as f64;
    let t0 = rule.nodes[0];
    let psi0 = crate::dynamics::evolve(&scenario.hamiltonian, &scenario.psi_in, 0.0, t0, per_step)?;
    let propagators = rule
        .nodes
        .windows(2)
        .map(|w| propagator(&scenario.hamiltonian, w[0], w[1], per_step))
        .collect::<Result<Vec<_>>>()?;
    let mut b = CVector::zeros((propagators.len() + 1) * n);
    b.rows_mut(0, n).copy_from(psi0.amplitudes());
    Ok(HistorySystem {
        n,
        propagators,
        b,
        horizon: rule.horizon,
        norm_bound: scenario.norm_bound(),
    })
}

/// Normalized history state `(1/√(N_t+1)) Σ_k |k⟩|ψ(t_k)⟩`.
#[derive(Debug, Clone)]
pub struct HistoryState {
    pub vector: CVector,
    pub normalization: f64,
    pub n: usize,
}

impl HistoryState {
    pub fn block(&self, k: usize) -> CVector {
        self.vector.rows(k * self.n, self.n) * C64::from(self.normalization)
    }

    pub fn blocks(&self) -> usize {
        self.vector.len() / self.n
    }
}

/// Forward block substitution; charges one coherent preparation.
pub fn solve_unnormalized(system: &HistorySystem) -> CVector {
    let n = system.n;
    let mut x = system.b.clone();
    for (k, u) in system.propagators.iter().enumerate() {
        let next = u * x.rows(k * n, n);
        x.rows_mut((k + 1) * n, n).copy_from(&next);
    }
    x
}

pub fn solve_history(system: &HistorySystem, ledger: &mut QueryLedger) -> HistoryState {
    let x = solve_unnormalized(system);
    let normalization = (system.blocks() as f64).sqrt();
    debug_assert!((x.norm() - normalization).abs() < 1e-8 * normalization);
    ledger.charge_preparation(propagation_cost(system.norm_bound, system.horizon), 1);
    HistoryState {
        vector: x / C64::from(normalization),
        normalization,
        n: system.n,
    }
}

/// `Σ_k |k⟩⟨k| ⊗ (ω_k / w_max) O(t_k)`.
#[derive(Debug, Clone)]
pub struct SelectionObservable {
    pub blocks: Vec<CMatrix>,
    pub w_max: f64,
}

impl SelectionObservable {
    pub fn expectation(&self, state: &HistoryState) -> Result<f64> {
        if state.blocks() != self.blocks.len() {
            return Err(Error::LengthMismatch {
                expected: self.blocks.len(),
                got: state.blocks(),
            });
        }
        let n = state.n;
        Ok(self
            .blocks
            .iter()
            .enumerate()
            .map(|(k, o)| {
                let v = state.vector.rows(k * n, n);
                v.dotc(&(o * v)).re
            })
            .sum())
    }

    /// Largest block norm, which is the norm of the block-diagonal operator.
    pub fn norm(&self) -> f64 {
        self.blocks.iter().map(hermitian_norm).fold(0.0, f64::max)
    }

    pub fn matrix(&self) -> CMatrix {
        let n = self.blocks.first().map_or(0, |b| b.nrows());
        let mut m = CMatrix::zeros(n * self.blocks.len(), n * self.blocks.len());
        for (k, b) in self.blocks.iter().enumerate() {
            m.view_mut((k * n, k * n), (n, n)).copy_from(b);
        }
        m
    }
}

pub fn build_o_sel(rule: &QuadratureRule, realized: &[RealizedObservable]) -> Result<SelectionObservable> {
    if realized.len() != rule.n_t() {
        return Err(Error::LengthMismatch {
            expected: rule.n_t(),
            got: realized.len(),
        });
    }
    let w_max = rule.max_weight();
    let blocks = rule
        .weights
        .iter()
        .zip(realized)
        .map(|(w, o)| o.effective_matrix() * C64::from(w / w_max))
        .collect();
    Ok(SelectionObservable { blocks, w_max })
}

/// Dense output from one amplitude estimation of `(1 + ⟨Ψ|O_sel|Ψ⟩)/2`.
pub fn pipeline_lode(
    prep: &Prepared,
    cfg: &PipelineConfig,
    seed: u64,
    ledger: &mut QueryLedger,
) -> Result<EstimateReport> {
    let system = build_system(&prep.scenario, &prep.rule, cfg.tol)?;
    let mut prep_ledger = QueryLedger::new();
    let history = solve_history(&system, &mut prep_ledger);
    let o_sel = build_o_sel(&prep.rule, &prep.realized)?;
    let v = o_sel.expectation(&history)?;
    let blocks = history.blocks() as f64;
    let eps = prep.internal_eps(cfg.eps);
    let ae = match cfg.schedule {
        AeSchedule::Auto => AeConfig::with_reps(
            r_for_precision(eps / (4.0 * o_sel.w_max * blocks))?,
            cfg.delta,
            median_reps(cfg.delta),
        )?,
        AeSchedule::Fixed { r, reps } => AeConfig::with_reps(r, cfg.delta, reps)?,
    };
    let a = ((1.0 + v) / 2.0).clamp(0.0, 1.0);
    let mut rng = node_rng(seed, 0);
    let v_est = 2.0 * ae_estimate(a, &ae, &mut rng) - 1.0;
    let estimate = prep.finish(o_sel.w_max * blocks * v_est);

    let mut run = QueryLedger::new();
    run.charge_preparation(prep_ledger.h_queries, ae.depth());
    run.charge_observable(ae.depth());
    ledger.merge(&run);
    Ok(prep.report(Pipeline::Lode, cfg, seed, estimate, run, ae.reps, ae.depth()))
}
