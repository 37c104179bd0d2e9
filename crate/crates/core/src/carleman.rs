//! Exact linear lift of the dense-output dynamics: `x = [J; ψ⊗ψ*]` obeys
//! `ẋ = A x + b(t)` with `A = [[0, P], [0, Q]]`, together with the padded
//! history state and the amplitude-estimation pipeline built on it.

use std::io::Write;

use log::{debug, warn};

use crate::dynamics::{Control, QuantumState, QueryLedger, Scenario};
use crate::error::{invalid, Error, Result};
use crate::estimators::rng::node_rng;
use crate::estimators::{
    ae_estimate, median_reps, r_for_precision, AeConfig, AeSchedule, EstimateReport, Pipeline, PipelineConfig, Prepared,
};
use crate::linalg::{expm, hermitian_eigen, kron, spectral_norm, vec_outer, CMatrix, CVector, C64, I};

/// Eigenvalue differences below this are treated as exact degeneracies.
const DEGENERACY_TOL: f64 = 1e-12;

#[derive(Debug, Clone)]
pub struct CarlemanSystem {
    pub n: usize,
    /// Shifted Hamiltonian `H + shift·I`.
    pub hamiltonian: CMatrix,
    pub shift: f64,
    /// Row vector with `P_{(j,l)} = O_{lj}` for the rescaled observable.
    pub p: CVector,
    /// `(−iH)⊗I + I⊗(−iH)^*`.
    pub q: CMatrix,
    pub control: Control,
    /// `μ` multiplied by the observable rescale factor.
    pub mu: f64,
    pub scale: f64,
    eigenvalues: Vec<f64>,
    /// Eigenvectors of `H⊗I − I⊗H^*`, i.e. `W ⊗ W̄`.
    modes: CMatrix,
}

/// Adds `1 + max(0, −λ_min)` to `H` when its smallest eigenvalue is below 1.
pub fn energy_shift(h: &CMatrix) -> f64 {
    let (vals, _) = hermitian_eigen(h);
    let lo = vals.iter().copied().fold(f64::INFINITY, f64::min);
    if lo < 1.0 {
        1.0 + (-lo).max(0.0)
    } else {
        0.0
    }
}

pub fn build_carleman(scenario: &Scenario) -> Result<CarlemanSystem> {
    let h = scenario
        .hamiltonian
        .as_constant()
        .ok_or_else(|| Error::Unsupported("the lift requires a time-independent Hamiltonian".into()))?;
    let o = scenario
        .observable
        .as_constant()
        .ok_or_else(|| Error::Unsupported("the lift requires a time-independent observable".into()))?;
    if scenario.modulation.is_active() {
        return Err(Error::Unsupported(
            "the lift does not support spectral modulation".into(),
        ));
    }
    build_from_matrices(
        h,
        &o,
        scenario.control,
        scenario.mu * scenario.observable.scale(),
        scenario.observable.scale(),
    )
}

/// Lift for explicit `H` and (already normalized) `O`.
pub fn build_from_matrices(h: &CMatrix, o: &CMatrix, control: Control, mu: f64, scale: f64) -> Result<CarlemanSystem> {
    let n = h.nrows();
    if o.nrows() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: o.nrows(),
        });
    }
    let shift = energy_shift(h);
    if shift > 0.0 {
        debug!("shifting H by {shift} so that its spectrum lies above 1");
    }
    let hs = h + CMatrix::identity(n, n) * C64::from(shift);
    let id = CMatrix::identity(n, n);
    let gen = &hs * (-I);
    let q = kron(&gen, &id) + kron(&id, &gen.map(|z| z.conj()));
    let mut p = CVector::zeros(n * n);
    for j in 0..n {
        for l in 0..n {
            p[j * n + l] = o[(l, j)];
        }
    }
    let (lambda, w) = hermitian_eigen(&hs);
    let modes = kron(&w, &w.map(|z| z.conj()));
    let mut eigenvalues = Vec::with_capacity(n * n);
    for j in 0..n {
        for l in 0..n {
            eigenvalues.push(lambda[j] - lambda[l]);
        }
    }
    Ok(CarlemanSystem {
        n,
        hamiltonian: hs,
        shift,
        p,
        q,
        control,
        mu,
        scale,
        eigenvalues,
        modes,
    })
}

/// `(e^{−iωt} − 1)/(−iω)`, equal to `t` at `ω = 0`.
fn phi_scalar(omega: f64, t: f64) -> C64 {
    let x = 0.5 * omega * t;
    let sinc = if x.abs() < 1e-8 { 1.0 - x * x / 6.0 } else { x.sin() / x };
    C64::new(0.0, -x).exp() * (t * sinc)
}

impl CarlemanSystem {
    pub fn dim(&self) -> usize {
        self.n * self.n + 1
    }

    /// Dense `A`.
    pub fn a(&self) -> CMatrix {
        let m = self.n * self.n;
        let mut a = CMatrix::zeros(m + 1, m + 1);
        for i in 0..m {
            a[(0, i + 1)] = self.p[i];
        }
        a.view_mut((1, 1), (m, m)).copy_from(&self.q);
        a
    }

    /// `‖P‖₂`, the Hilbert–Schmidt norm of the observable.
    pub fn p_norm(&self) -> f64 {
        self.p.norm()
    }

    pub fn hamiltonian_norm(&self) -> f64 {
        spectral_norm(&self.hamiltonian)
    }

    /// Number of zero eigenvalues of `Q`; at least `n`, from the diagonal.
    pub fn kernel_dim(&self) -> usize {
        self.eigenvalues.iter().filter(|d| d.abs() < DEGENERACY_TOL).count()
    }

    /// `‖Q⁺‖`, the inverse of the smallest nonzero `|λ_j − λ_l|`.
    pub fn q_pinv_norm(&self) -> f64 {
        self.eigenvalues
            .iter()
            .map(|d| d.abs())
            .filter(|&d| d >= DEGENERACY_TOL)
            .fold(f64::INFINITY, f64::min)
            .recip()
            .min(f64::MAX)
    }

    fn spectral(&self, f: impl Fn(f64) -> C64) -> CMatrix {
        let diag = CVector::from_iterator(self.eigenvalues.len(), self.eigenvalues.iter().map(|&d| f(d)));
        &self.modes * CMatrix::from_diagonal(&diag) * self.modes.adjoint()
    }

    /// `e^{Qt}`.
    pub fn exp_q(&self, t: f64) -> CMatrix {
        self.spectral(|d| C64::new(0.0, -d * t).exp())
    }

    /// `Φ(t) = ∫_0^t e^{Qs} ds`.
    pub fn phi(&self, t: f64) -> CMatrix {
        self.spectral(|d| phi_scalar(d, t))
    }

    /// Bound `1 + 2‖P‖‖Q⁺‖ + t‖PΠ_ker‖` on `‖e^{At}‖`.
    pub fn exp_norm_bound(&self, t: f64) -> f64 {
        let kernel = self.spectral(|d| {
            if d.abs() < DEGENERACY_TOL {
                C64::from(1.0)
            } else {
                C64::from(0.0)
            }
        });
        let p_ker = kernel.transpose() * &self.p;
        let pinv = if self.kernel_dim() == self.eigenvalues.len() {
            0.0
        } else {
            self.q_pinv_norm()
        };
        1.0 + 2.0 * self.p_norm() * pinv + t * p_ker.norm()
    }

    /// `(μ/2)∫_{t0}^{t1} u²`, in rescaled units.
    pub fn drift_integral(&self, t0: f64, t1: f64) -> f64 {
        0.5 * self.mu * self.control.integral_sq(t0, t1)
    }

    /// Nonzeros of `A` as `row,col,re,im` rows.
    pub fn write_triplets<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "row,col,re,im")?;
        let a = self.a();
        for i in 0..a.nrows() {
            for j in 0..a.ncols() {
                let z = a[(i, j)];
                if z.norm() > 0.0 {
                    writeln!(out, "{i},{j},{:e},{:e}", z.re, z.im)?;
                }
            }
        }
        Ok(())
    }
}

/// `‖d/dt(ψ⊗ψ*) − Q(ψ⊗ψ*)‖` with the derivative from the product rule.
pub fn closure_residual(system: &CarlemanSystem, psi: &QuantumState) -> f64 {
    let v = psi.amplitudes();
    let dv = &system.hamiltonian * v * (-I);
    let n = v.len();
    let lhs = CVector::from_fn(n * n, |idx, _| {
        let (j, l) = (idx / n, idx % n);
        dv[j] * v[l].conj() + v[j] * dv[l].conj()
    });
    let rhs = &system.q * vec_outer(v);
    (lhs - rhs).norm()
}

/// `e^{At} = [[1, PΦ(t)], [0, e^{Qt}]]`.
pub fn expm_closed_form(system: &CarlemanSystem, t: f64) -> CMatrix {
    let m = system.n * system.n;
    if system.kernel_dim() > 0 {
        debug!(
            "Q has a {}-dimensional kernel; using Φ(t) = ∫e^(Qs)ds",
            system.kernel_dim()
        );
    }
    let mut e = CMatrix::zeros(m + 1, m + 1);
    e[(0, 0)] = C64::from(1.0);
    let top = system.p.transpose() * system.phi(t);
    for i in 0..m {
        e[(0, i + 1)] = top[i];
    }
    e.view_mut((1, 1), (m, m)).copy_from(&system.exp_q(t));
    e
}

/// `[J; ψ⊗ψ*]`.
#[derive(Debug, Clone, PartialEq)]
pub struct LiftedState {
    pub j: f64,
    pub phi: CVector,
}

impl LiftedState {
    pub fn from_state(psi: &QuantumState, j: f64) -> Self {
        Self {
            j,
            phi: vec_outer(psi.amplitudes()),
        }
    }

    pub fn from_vector(x: &CVector) -> Self {
        Self {
            j: x[0].re,
            phi: x.rows(1, x.len() - 1).into_owned(),
        }
    }

    pub fn to_vector(&self) -> CVector {
        let mut x = CVector::zeros(self.phi.len() + 1);
        x[0] = C64::from(self.j);
        x.rows_mut(1, self.phi.len()).copy_from(&self.phi);
        x
    }

    /// `ψψ†` reshaped from the `(j, l)` index.
    pub fn density(&self) -> CMatrix {
        let n = (self.phi.len() as f64).sqrt().round() as usize;
        CMatrix::from_fn(n, n, |j, l| self.phi[j * n + l])
    }

    pub fn trace(&self) -> f64 {
        let rho = self.density();
        (0..rho.nrows()).map(|i| rho[(i, i)].re).sum()
    }
}

/// Lifted state at `t1` from `x` at `t0`. `A e_0 = 0`, so the drift enters
/// only through `∫ b`; constant controls use the augmented exponential of
/// `[[A, b], [0, 0]]` instead.
pub fn evolve_lifted_between(system: &CarlemanSystem, x: &LiftedState, t0: f64, t1: f64) -> LiftedState {
    let dt = t1 - t0;
    if system.control.is_constant() {
        let d = system.dim();
        let mut aug = CMatrix::zeros(d + 1, d + 1);
        aug.view_mut((0, 0), (d, d)).copy_from(&(system.a() * C64::from(dt)));
        aug[(0, d)] = C64::from(0.5 * system.mu * system.control.value(t0).powi(2) * dt);
        let e = expm(&aug);
        let mut v = CVector::zeros(d + 1);
        v.rows_mut(0, d).copy_from(&x.to_vector());
        v[d] = C64::from(1.0);
        return LiftedState::from_vector(&(e * v).rows(0, d).into_owned());
    }
    let y = expm_closed_form(system, dt) * x.to_vector();
    let mut out = LiftedState::from_vector(&y);
    out.j += system.drift_integral(t0, t1);
    out
}

pub fn evolve_lifted(system: &CarlemanSystem, x0: &LiftedState, t: f64) -> LiftedState {
    evolve_lifted_between(system, x0, 0.0, t)
}

/// `Γ = (J² + 1)/|J|`.
pub fn gamma(j_t: f64) -> Result<f64> {
    if j_t == 0.0 || !j_t.is_finite() {
        return invalid("Γ is undefined for J(T) = 0");
    }
    Ok((j_t * j_t + 1.0) / j_t.abs())
}

/// Lifted trajectory at the nodes followed by `N_t + 1` copies of the final
/// block, normalized by `ν`.
#[derive(Debug, Clone)]
pub struct PaddedHistoryState {
    pub vector: CVector,
    pub nu: f64,
    /// Index of the last trajectory block (node count minus one).
    pub n_t: usize,
    pub block_len: usize,
    pub j_nodes: Vec<f64>,
}

impl PaddedHistoryState {
    pub fn j_final(&self) -> f64 {
        *self.j_nodes.last().expect("at least one node")
    }

    pub fn blocks(&self) -> usize {
        self.vector.len() / self.block_len
    }

    /// `(N_t+1)|J(T)|²/ν²`.
    pub fn amplitude(&self) -> f64 {
        (self.n_t as f64 + 1.0) * self.j_final().powi(2) / (self.nu * self.nu)
    }

    /// Weight of the `J` slot over the padding blocks, read from the vector.
    pub fn measured_amplitude(&self) -> f64 {
        (self.n_t + 1..self.blocks())
            .map(|k| self.vector[k * self.block_len].norm_sqr())
            .sum()
    }

    /// `(J²/(2(J²+1)), J²/(J²+1))`.
    pub fn sandwich_bounds(&self) -> (f64, f64) {
        let j2 = self.j_final().powi(2);
        (j2 / (2.0 * (j2 + 1.0)), j2 / (j2 + 1.0))
    }

    /// `ν√(ã/(N_t+1))`, positive root.
    pub fn invert(&self, a: f64) -> f64 {
        self.nu * (a.max(0.0) / (self.n_t as f64 + 1.0)).sqrt()
    }
}

/// Forward substitution through `L̂` with lifted one-step propagators at the
/// nodes, drift sources in `B̂`, and identity steps over the padding.
pub fn build_padded_history(
    system: &CarlemanSystem,
    psi_in: &QuantumState,
    nodes: &[f64],
) -> Result<PaddedHistoryState> {
    if nodes.is_empty() || nodes.windows(2).any(|w| w[1] < w[0]) || nodes[0] < 0.0 {
        return invalid("padded history needs sorted non-negative nodes");
    }
    let d = system.dim();
    let n_t = nodes.len() - 1;
    let blocks = 2 * (n_t + 1);
    let mut x = CVector::zeros(blocks * d);
    let start = evolve_lifted(system, &LiftedState::from_state(psi_in, 0.0), nodes[0]);
    x.rows_mut(0, d).copy_from(&start.to_vector());
    let mut j_nodes = vec![start.j];
    for k in 1..=n_t {
        let prev = LiftedState::from_vector(&x.rows((k - 1) * d, d).into_owned());
        let next = evolve_lifted_between(system, &prev, nodes[k - 1], nodes[k]);
        j_nodes.push(next.j);
        x.rows_mut(k * d, d).copy_from(&next.to_vector());
    }
    for k in n_t + 1..blocks {
        let prev = x.rows((k - 1) * d, d).into_owned();
        x.rows_mut(k * d, d).copy_from(&prev);
    }
    let j_t = j_nodes[n_t];
    if j_t <= 0.0 {
        return invalid(format!("J(T) = {j_t} must be positive"));
    }
    let slack = 1e-9 * j_t.max(1.0);
    if j_nodes.iter().any(|&j| j < -slack) || j_nodes.windows(2).any(|w| w[1] < w[0] - slack) {
        return invalid("J(t) must be non-negative and non-decreasing on the nodes");
    }
    let nu = x.norm();
    Ok(PaddedHistoryState {
        vector: x / C64::from(nu),
        nu,
        n_t,
        block_len: d,
        j_nodes,
    })
}

/// Per-preparation Hamiltonian charge `⌈max(1, ‖P‖)(‖H‖ + ‖P‖)T⌉`. The
/// first factor stands for `sup_t ‖e^{At}‖`, which is never below 1.
pub fn preparation_cost(system: &CarlemanSystem, horizon: f64) -> u64 {
    let p = system.p_norm();
    crate::dynamics::propagation_cost(p.max(1.0) * (system.hamiltonian_norm() + p), horizon)
}

/// `J(T)` from amplitude estimation on the padded history state.
pub fn pipeline_carleman(
    prep: &Prepared,
    cfg: &PipelineConfig,
    seed: u64,
    ledger: &mut QueryLedger,
) -> Result<EstimateReport> {
    let system = build_carleman(&prep.scenario)?;
    let padded = build_padded_history(&system, &prep.scenario.psi_in, &prep.rule.nodes)?;
    let eps = prep.internal_eps(cfg.eps);
    let j_t = padded.j_final();
    if eps > 0.1 * j_t {
        warn!("eps = {eps:.3e} is not small compared with J(T) = {j_t:.3e}");
    }
    let g = gamma(j_t)?;
    let ae = match cfg.schedule {
        AeSchedule::Auto => AeConfig::with_reps(r_for_precision(eps / (2.0 * g))?, cfg.delta, median_reps(cfg.delta))?,
        AeSchedule::Fixed { r, reps } => AeConfig::with_reps(r, cfg.delta, reps)?,
    };
    let a = padded.measured_amplitude().clamp(0.0, 1.0);
    let mut rng = node_rng(seed, 0);
    let a_est = ae_estimate(a, &ae, &mut rng);
    let estimate = padded.invert(a_est) / system.scale;

    let mut run = QueryLedger::new();
    run.charge_preparation(preparation_cost(&system, prep.scenario.horizon), ae.depth());
    run.charge_observable(ae.depth());
    ledger.merge(&run);
    Ok(prep.report(Pipeline::Carleman, cfg, seed, estimate, run, ae.reps, ae.depth()))
}
