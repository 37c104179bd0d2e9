//! Invariant checks runnable from the command line.

use std::f64::consts::PI;
use std::str::FromStr;

use anyhow::bail;
use rand::Rng;
use serde::Serialize;

use qdo_core::carleman::{
    build_carleman, build_from_matrices, build_padded_history, closure_residual, energy_shift, expm_closed_form, gamma,
    CarlemanSystem,
};
use qdo_core::dynamics::{
    evolve, realize_observables, reference_trajectory, true_j_on, Control, HamiltonianSpec, QuantumState,
};
use qdo_core::estimators::rng::node_rng;
use qdo_core::estimators::{ae_error_bound, ae_outcome, ae_sample, outcome_probability, Pipeline, UnbiasedAe};
use qdo_core::historystate::{build_o_sel, build_system, solve_history, solve_unnormalized};
use qdo_core::linalg::{c, expm, spectral_norm, vec_outer, CMatrix, CVector, C64};
use qdo_core::quadrature::{cc_single, single_segment_bound, QuadratureRule};

use crate::scenarios;
use crate::spectrum;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Suite {
    Quadrature,
    Estimators,
    History,
    Carleman,
    All,
}

impl FromStr for Suite {
    type Err = anyhow::Error;

    fn from_str(s: &str) -> anyhow::Result<Self> {
        Ok(match s {
            "quadrature" => Suite::Quadrature,
            "estimators" => Suite::Estimators,
            "history" => Suite::History,
            "carleman" => Suite::Carleman,
            "all" => Suite::All,
            other => bail!("unknown suite `{other}` (quadrature, estimators, history, carleman, all)"),
        })
    }
}

/// Deliberate corruption, used to confirm that checks can fail.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Mutation {
    /// Negates this weight of every composite rule under test.
    pub flip_weight: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub suite: &'static str,
    pub name: &'static str,
    pub passed: bool,
    /// Worst observed value of the checked quantity.
    pub value: f64,
    pub limit: f64,
}

impl Check {
    fn at_most(suite: &'static str, name: &'static str, value: f64, limit: f64) -> Self {
        Self {
            suite,
            name,
            passed: value <= limit,
            value,
            limit,
        }
    }

    fn at_least(suite: &'static str, name: &'static str, value: f64, limit: f64) -> Self {
        Self {
            suite,
            name,
            passed: value >= limit,
            value,
            limit,
        }
    }
}

pub fn run_suite(suite: Suite, mutation: Mutation) -> anyhow::Result<Vec<Check>> {
    let mut out = Vec::new();
    if matches!(suite, Suite::Quadrature | Suite::All) {
        out.extend(quadrature(mutation)?);
    }
    if matches!(suite, Suite::Estimators | Suite::All) {
        out.extend(estimators()?);
    }
    if matches!(suite, Suite::History | Suite::All) {
        out.extend(history()?);
    }
    if matches!(suite, Suite::Carleman | Suite::All) {
        out.extend(carleman()?);
    }
    Ok(out)
}

fn max_of(it: impl IntoIterator<Item = f64>) -> f64 {
    it.into_iter().fold(0.0, f64::max)
}

/// `∫_0^T e^{−t/4} cos(1.3t) dt`.
fn damped_cosine(t: f64) -> (impl Fn(f64) -> f64, f64) {
    let (a, b) = (0.25, 1.3);
    let exact = ((-a * t).exp() * (b * (b * t).sin() - a * (b * t).cos()) + a) / (a * a + b * b);
    (move |s: f64| (-a * s).exp() * (b * s).cos(), exact)
}

pub fn quadrature(mutation: Mutation) -> anyhow::Result<Vec<Check>> {
    const S: &str = "quadrature";
    let mut out = Vec::new();

    let (_, w) = cc_single(2)?;
    let dev = max_of(
        w.iter()
            .zip([1.0 / 3.0, 4.0 / 3.0, 1.0 / 3.0])
            .map(|(x, y)| (x - y).abs()),
    );
    out.push(Check::at_most(S, "m2-weights", dev, 1e-14));

    let mut worst_exact: f64 = 0.0;
    let mut worst_ratio: f64 = 0.0;
    for m in (2..=64).step_by(2) {
        let (x, w) = cc_single(m)?;
        if m <= 16 {
            for d in 0..=m {
                let exact = if d % 2 == 1 { 0.0 } else { 2.0 / (d as f64 + 1.0) };
                let got: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(d as i32)).sum();
                worst_exact = worst_exact.max((got - exact).abs());
            }
        }
        let sq: f64 = w.iter().map(|w| w * w).sum();
        worst_ratio = worst_ratio.max(sq / single_segment_bound(m));
    }
    out.push(Check::at_most(S, "polynomial-exactness", worst_exact, 1e-13));
    out.push(Check::at_most(S, "weight-sq-bound", worst_ratio, 1.0));

    let mut rules = Vec::new();
    let mut worst_err: f64 = 0.0;
    for eps in [1e-2, 1e-4, 1e-6] {
        let mut rule = QuadratureRule::composite(4.0, eps)?;
        mutate(&mut rule, mutation);
        let (f, exact) = damped_cosine(4.0);
        worst_err = worst_err.max((rule.integrate(f) - exact).abs() / (eps / 2.0));
        rules.push(rule);
    }
    out.push(Check::at_most(S, "composite-error", worst_err, 1.0));

    let min_w = rules
        .iter()
        .flat_map(|r| r.weights.iter().copied())
        .fold(f64::INFINITY, f64::min);
    out.push(Check {
        suite: S,
        name: "positivity",
        passed: min_w > 0.0,
        value: min_w,
        limit: 0.0,
    });
    let sum_dev = max_of(rules.iter().map(|r| (r.weights.iter().sum::<f64>() - r.horizon).abs()));
    out.push(Check::at_most(S, "weight-sum", sum_dev, 1e-12));
    let ordered = rules.iter().all(|r| r.nodes.windows(2).all(|p| p[0] < p[1]));
    out.push(Check {
        suite: S,
        name: "node-order",
        passed: ordered,
        value: if ordered { 0.0 } else { 1.0 },
        limit: 0.0,
    });
    Ok(out)
}

fn mutate(rule: &mut QuadratureRule, mutation: Mutation) {
    if let Some(k) = mutation.flip_weight {
        let k = k.min(rule.weights.len() - 1);
        rule.weights[k] = -rule.weights[k];
    }
}

pub fn estimators() -> anyhow::Result<Vec<Check>> {
    const S: &str = "estimators";
    let mut out = Vec::new();

    let mut worst_tv: f64 = 0.0;
    for &(a, r, seed) in &[(0.3, 32u64, 1u64), (0.7, 64, 2)] {
        let mut rng = node_rng(seed, 0);
        let n = 100_000;
        let mut counts = vec![0u64; r as usize];
        for _ in 0..n {
            counts[ae_outcome(a, r, &mut rng) as usize] += 1;
        }
        let tv = 0.5
            * (0..r)
                .map(|m| (counts[m as usize] as f64 / n as f64 - outcome_probability(a, r, m)).abs())
                .sum::<f64>();
        worst_tv = worst_tv.max(tv);
    }
    out.push(Check::at_most(S, "ae-law-tv", worst_tv, 0.01));

    let mut rng = node_rng(3, 0);
    let (a, r) = (0.3, 64);
    let bound = ae_error_bound(a, r);
    let n = 20_000;
    let hits = (0..n)
        .filter(|_| (ae_sample(a, r, &mut rng) - a).abs() <= bound)
        .count();
    out.push(Check::at_least(
        S,
        "ae-single-draw",
        hits as f64 / n as f64,
        8.0 / (PI * PI) - 0.02,
    ));

    let mut worst_bias: f64 = 0.0;
    let mut worst_var: f64 = 0.0;
    for (i, &p) in [0.1, 0.4, 0.9].iter().enumerate() {
        for (j, &r) in [20u64, 100, 400].iter().enumerate() {
            let eta = 1e-3;
            let mut rng = node_rng(40 + i as u64, j as u64);
            let est = UnbiasedAe::new(r, eta, &mut rng)?;
            let n = 20_000;
            let xs: Vec<f64> = (0..n).map(|_| est.sample(p, &mut rng)).collect();
            let mean = xs.iter().sum::<f64>() / n as f64;
            let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
            let vbound = 91.0 * p / (r * r) as f64 + eta;
            worst_var = worst_var.max(var / (vbound * (1.0 + 4.0 * (2.0 / n as f64).sqrt())));
            worst_bias = worst_bias.max((mean - p).abs() / (eta + 4.0 * (vbound / n as f64).sqrt()));
        }
    }
    out.push(Check::at_most(S, "unbiased-bias", worst_bias, 1.0));
    out.push(Check::at_most(S, "unbiased-variance", worst_var, 1.0));

    let spec = spectrum::recombine(Pipeline::Hadamard, 2.0, 0.1, 0.1, 7)?;
    out.push(Check::at_most(
        S,
        "spectrum-recombination",
        (spec.magnitude - spec.exact).abs(),
        spec.tolerance,
    ));
    Ok(out)
}

pub fn history() -> anyhow::Result<Vec<Check>> {
    const S: &str = "history";
    let tol = 1e-10;
    let mut residual: f64 = 0.0;
    let mut fidelity: f64 = 0.0;
    let mut identity: f64 = 0.0;
    let mut norm: f64 = 0.0;
    let mut unit: f64 = 0.0;
    for label in ["rabi-self", "rabi-cos", "follower", "spectro-cos"] {
        let sc = scenarios::find(label)?.scenario(2.0)?;
        let rule = QuadratureRule::with_points(2.0, 8)?;
        let system = build_system(&sc, &rule, tol)?;
        let x = solve_unnormalized(&system);
        residual = residual.max(system.residual(&x)? / system.b.norm());
        let traj = reference_trajectory(&sc, &rule.nodes, tol)?;
        let n = sc.dim();
        for (k, psi) in traj.states.iter().enumerate() {
            fidelity = fidelity.max((x.rows(k * n, n) - psi.amplitudes()).norm());
        }
        let state = solve_history(&system, &mut Default::default());
        unit = unit.max((state.vector.norm() - 1.0).abs());
        let realized = realize_observables(&sc, &traj);
        let o_sel = build_o_sel(&rule, &realized)?;
        norm = norm.max(o_sel.norm());
        let global = o_sel.expectation(&state)? * o_sel.w_max * state.blocks() as f64;
        let values: Vec<f64> = realized.iter().zip(&traj.states).map(|(o, p)| o.value(p)).collect();
        identity = identity.max((global - rule.apply(&values)?).abs());
    }
    Ok(vec![
        Check::at_most(S, "residual", residual, 1e-12),
        Check::at_most(S, "history-fidelity", fidelity, 10.0 * tol),
        Check::at_most(S, "unit-norm", unit, 1e-10),
        Check::at_most(S, "o-sel-norm", norm, 1.0 + 1e-12),
        Check::at_most(S, "global-amplitude-identity", identity, 1e-9),
    ])
}

fn random_hermitian<R: Rng>(n: usize, rng: &mut R) -> CMatrix {
    let mut h = CMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..=i {
            let z = if i == j {
                c(rng.random_range(-2.0..2.0), 0.0)
            } else {
                c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
            };
            h[(i, j)] = z;
            h[(j, i)] = z.conj();
        }
    }
    h
}

fn random_state<R: Rng>(n: usize, rng: &mut R) -> anyhow::Result<QuantumState> {
    let v = CVector::from_fn(n, |_, _| c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)));
    Ok(QuantumState::new(v)?)
}

fn random_system<R: Rng>(n: usize, rng: &mut R) -> anyhow::Result<CarlemanSystem> {
    let h = random_hermitian(n, rng);
    let o = random_hermitian(n, rng);
    let o = &o / c(spectral_norm(&o), 0.0);
    Ok(build_from_matrices(&h, &o, Control::Zero, 0.0, 1.0)?)
}

pub fn carleman() -> anyhow::Result<Vec<Check>> {
    const S: &str = "carleman";
    let mut rng = node_rng(91, 0);
    let mut closure: f64 = 0.0;
    let mut finite: f64 = 0.0;
    for i in 0..50 {
        let n = 2 + i % 3;
        let sys = random_system(n, &mut rng)?;
        let psi = random_state(n, &mut rng)?;
        closure = closure.max(closure_residual(&sys, &psi));
        if i < 9 {
            let spec = HamiltonianSpec::constant(sys.hamiltonian.clone())?;
            for t in [0.5, 1.0, 2.0] {
                let lifted = sys.exp_q(t) * vec_outer(psi.amplitudes());
                let direct = vec_outer(evolve(&spec, &psi, 0.0, t, 1e-13)?.amplitudes());
                finite = finite.max((lifted - direct).norm());
            }
        }
    }

    let mut closed: f64 = 0.0;
    let mut bound: f64 = 0.0;
    let mut shift_ok = true;
    for i in 0..20 {
        let sys = random_system(2 + i % 3, &mut rng)?;
        shift_ok &= sys.shift > 0.0 || energy_shift(&sys.hamiltonian) == 0.0;
        for t in [0.25, 1.0, 4.0] {
            let brute = expm(&(sys.a() * C64::from(t)));
            let form = expm_closed_form(&sys, t);
            closed = closed.max(max_of((&brute - &form).iter().map(|z| z.norm())));
        }
        for k in 0..=16 {
            let t = 4.0 * k as f64 / 16.0;
            bound = bound.max(spectral_norm(&expm_closed_form(&sys, t)) / sys.exp_norm_bound(t));
        }
    }

    let mut sandwich_ok = true;
    let mut transfer_ok = true;
    let mut gamma_dev: f64 = 0.0;
    for label in ["carleman-growing", "carleman-bounded"] {
        for t in [1.0, 2.0, 4.0, 8.0] {
            let sc = scenarios::find(label)?.scenario(t)?;
            let sys = build_carleman(&sc)?;
            let rule = QuadratureRule::with_points(t, 4)?;
            let padded = build_padded_history(&sys, &sc.psi_in, &rule.nodes)?;
            let (lo, hi) = padded.sandwich_bounds();
            let a = padded.amplitude();
            sandwich_ok &= lo <= a + 1e-15 && a <= hi + 1e-15;
            let j = padded.j_final();
            let g = gamma(j)?;
            gamma_dev = gamma_dev.max((g * j - (j * j + 1.0)).abs() / (j * j + 1.0));
            let eps = 0.05;
            for _ in 0..200 {
                let a_tilde = (a + rng.random_range(-1.0..1.0) * eps / (2.0 * g)).clamp(0.0, 1.0);
                transfer_ok &= (padded.invert(a_tilde) - j).abs() <= eps * (1.0 + 1e-12);
            }
            let oracle = true_j_on(&sc, t, 1e-11)? * sc.observable.scale();
            transfer_ok &= (j - oracle).abs() <= 1e-8;
        }
    }
    let flag = |ok: bool| if ok { 0.0 } else { 1.0 };
    Ok(vec![
        Check::at_most(S, "closure-residual", closure, 1e-12),
        Check::at_most(S, "finite-time-closure", finite, 1e-10),
        Check::at_most(S, "closed-form-exponential", closed, 1e-10),
        Check::at_most(S, "norm-bound", bound, 1.0 + 1e-9),
        Check::at_most(S, "energy-shift", flag(shift_ok), 0.0),
        Check::at_most(S, "amplitude-sandwich", flag(sandwich_ok), 0.0),
        Check::at_most(S, "error-transfer", flag(transfer_ok), 0.0),
        Check::at_most(S, "gamma-identity", gamma_dev, 1e-14),
    ])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quadrature_suite_passes() {
        let checks = run_suite(Suite::Quadrature, Mutation::default()).unwrap();
        assert!(checks.iter().all(|c| c.passed), "{checks:?}");
    }

    #[test]
    fn flipped_weight_fails_positivity() {
        let checks = run_suite(Suite::Quadrature, Mutation { flip_weight: Some(3) }).unwrap();
        let pos = checks.iter().find(|c| c.name == "positivity").unwrap();
        assert!(!pos.passed);
    }

    #[test]
    fn suite_names_parse() {
        assert_eq!("all".parse::<Suite>().unwrap(), Suite::All);
        assert!("bogus".parse::<Suite>().is_err());
    }
}
