use crate::dynamics::{QuantumState, QueryLedger, Scenario, TimeGenerator};
use crate::error::{invalid, Error, Result};
use crate::linalg::{expm, unitary_step, CMatrix, CVector, C64, I};

/// Upper limit on Magnus steps per call before giving up.
const MAX_STEPS: usize = 1 << 21;

const SQRT3: f64 = 1.732_050_807_568_877_2;
const CF4_ALPHA1: f64 = (3.0 - 2.0 * SQRT3) / 12.0;
const CF4_ALPHA2: f64 = (3.0 + 2.0 * SQRT3) / 12.0;
const CF4_C1: f64 = 0.5 - SQRT3 / 6.0;
const CF4_C2: f64 = 0.5 + SQRT3 / 6.0;

/// Exact propagation of a state through `[t0, t1]` under `gen`.
///
/// Constant generators use a single matrix exponential. Otherwise a
/// fourth-order commutator-free Magnus scheme is run with the step count
/// doubled until two successive results agree to `tol`.
pub fn evolve<G: TimeGenerator + ?Sized>(
    gen: &G,
    psi: &QuantumState,
    t0: f64,
    t1: f64,
    tol: f64,
) -> Result<QuantumState> {
    psi.check_dim(gen.dim())?;
    if tol.is_nan() || tol <= 0.0 {
        return invalid("propagation tolerance must be positive");
    }
    let dt = t1 - t0;
    if dt == 0.0 {
        return Ok(psi.clone());
    }
    if gen.is_constant() {
        let u = unitary_step(&gen.at(t0), dt);
        return Ok(QuantumState::from_unit(renormalize(u * psi.amplitudes())));
    }
    let mut steps = ((2.0 * gen.norm_bound() * dt.abs()).ceil() as usize).max(2);
    let mut coarse = magnus(gen, psi.amplitudes(), t0, dt, steps);
    loop {
        steps *= 2;
        if steps > MAX_STEPS {
            return Err(Error::StepOverflow {
                max_steps: MAX_STEPS,
                tol,
            });
        }
        let fine = magnus(gen, psi.amplitudes(), t0, dt, steps);
        let diff = (&fine - &coarse).norm();
        coarse = fine;
        if diff <= tol {
            break;
        }
    }
    Ok(QuantumState::from_unit(renormalize(coarse)))
}

/// Full propagator `U(t1, t0)`, one evolved basis vector per column.
pub fn propagator<G: TimeGenerator + ?Sized>(gen: &G, t0: f64, t1: f64, tol: f64) -> Result<CMatrix> {
    let n = gen.dim();
    if gen.is_constant() {
        return Ok(unitary_step(&gen.at(t0), t1 - t0));
    }
    let mut u = CMatrix::zeros(n, n);
    for j in 0..n {
        let e = QuantumState::basis(n, j)?;
        let col = evolve(gen, &e, t0, t1, tol / (n as f64).sqrt())?;
        u.set_column(j, col.amplitudes());
    }
    Ok(u)
}

fn renormalize(v: CVector) -> CVector {
    let n = v.norm();
    v / C64::from(n)
}

fn magnus<G: TimeGenerator + ?Sized>(gen: &G, psi: &CVector, t0: f64, dt: f64, steps: usize) -> CVector {
    let h = dt / steps as f64;
    let mut v = psi.clone();
    for k in 0..steps {
        let t = t0 + k as f64 * h;
        let a1: CMatrix = gen.at(t + CF4_C1 * h) * (-I);
        let a2: CMatrix = gen.at(t + CF4_C2 * h) * (-I);
        let first = expm(&((&a1 * C64::from(CF4_ALPHA2) + &a2 * C64::from(CF4_ALPHA1)) * C64::from(h)));
        let second = expm(&((&a1 * C64::from(CF4_ALPHA1) + &a2 * C64::from(CF4_ALPHA2)) * C64::from(h)));
        v = second * (first * v);
    }
    v
}

/// `ψ(t)` from the scenario's initial state. Charges one fresh state
/// preparation and `⌈‖H‖_max·t⌉` Hamiltonian queries.
pub fn propagate(scenario: &Scenario, t: f64, tol: f64, ledger: &mut QueryLedger) -> Result<QuantumState> {
    if t < 0.0 {
        return invalid("propagation time must be non-negative");
    }
    let out = evolve(&scenario.hamiltonian, &scenario.psi_in, 0.0, t, tol)?;
    ledger.charge_propagation(scenario.norm_bound(), t, 1);
    Ok(out)
}

/// Reference states `ψ(t_k)` (and follower targets `φ(t_k)`) on a sorted grid.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<QuantumState>,
    pub targets: Option<Vec<QuantumState>>,
}

/// Classical precomputation of the trajectory on `times`, not charged to any
/// ledger. Each interval is integrated to `tol / #intervals`.
pub fn reference_trajectory(scenario: &Scenario, times: &[f64], tol: f64) -> Result<Trajectory> {
    if times.iter().any(|&t| t < 0.0 || !t.is_finite()) {
        return invalid("trajectory times must be finite and non-negative");
    }
    if times.windows(2).any(|w| w[1] < w[0]) {
        return invalid("trajectory times must be sorted");
    }
    let per_interval = tol / times.len().max(1) as f64;
    let states = march(&scenario.hamiltonian, &scenario.psi_in, times, per_interval)?;
    let targets = match scenario.observable.kind().target() {
        Some((phi_in, generator)) => Some(march(generator, phi_in, times, per_interval)?),
        None => None,
    };
    Ok(Trajectory {
        times: times.to_vec(),
        states,
        targets,
    })
}

fn march<G: TimeGenerator + ?Sized>(
    gen: &G,
    start: &QuantumState,
    times: &[f64],
    tol: f64,
) -> Result<Vec<QuantumState>> {
    let mut out = Vec::with_capacity(times.len());
    let mut prev_t = 0.0;
    let mut cur = start.clone();
    for &t in times {
        cur = evolve(gen, &cur, prev_t, t, tol)?;
        prev_t = t;
        out.push(cur.clone());
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{ClosedForm, HamiltonianSpec};
    use crate::linalg::c;
    use proptest::prelude::*;

    fn rabi() -> HamiltonianSpec {
        HamiltonianSpec::closed_form(ClosedForm::Rabi {
            splitting: 2.0,
            drive: 1.0,
            frequency: 1.3,
        })
    }

    #[test]
    fn constant_path_matches_rotation() {
        let x = CMatrix::from_row_slice(2, 2, &[c(0.0, 0.0), c(1.0, 0.0), c(1.0, 0.0), c(0.0, 0.0)]);
        let h = HamiltonianSpec::constant(x).unwrap();
        let psi = QuantumState::basis(2, 0).unwrap();
        let out = evolve(&h, &psi, 0.0, 0.8, 1e-12).unwrap();
        assert!((out.amplitudes()[0] - c(0.8f64.cos(), 0.0)).norm() < 1e-14);
        assert!((out.amplitudes()[1] - c(0.0, -0.8f64.sin())).norm() < 1e-14);
    }

    #[test]
    fn magnus_is_fourth_order() {
        let h = rabi();
        let psi = QuantumState::basis(2, 0).unwrap();
        let reference = magnus(&h, psi.amplitudes(), 0.0, 2.0, 4096);
        let errs: Vec<f64> = [16, 32, 64]
            .iter()
            .map(|&n| (magnus(&h, psi.amplitudes(), 0.0, 2.0, n) - &reference).norm())
            .collect();
        for w in errs.windows(2) {
            let order = (w[0] / w[1]).log2();
            assert!(order > 3.7 && order < 4.4, "observed order {order}");
        }
    }

    #[test]
    fn piecewise_constant_sample_equals_constant() {
        let z = CMatrix::from_row_slice(2, 2, &[c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(-1.0, 0.0)]);
        let pw = HamiltonianSpec::piecewise(vec![0.0, 1.0], vec![z.clone(), z.clone()]).unwrap();
        let cst = HamiltonianSpec::constant(z).unwrap();
        let psi = QuantumState::from_real(&[0.6, 0.8]).unwrap();
        let a = evolve(&pw, &psi, 0.0, 1.5, 1e-12).unwrap();
        let b = evolve(&cst, &psi, 0.0, 1.5, 1e-12).unwrap();
        assert!(a.distance(&b) < 1e-11);
    }

    #[test]
    fn propagate_charges_ledger() {
        use crate::dynamics::ObservableSpec;
        let obs = ObservableSpec::constant(CMatrix::identity(2, 2)).unwrap();
        let sc = Scenario::new("r", rabi(), obs, QuantumState::basis(2, 0).unwrap(), 3.0).unwrap();
        let mut ledger = QueryLedger::new();
        propagate(&sc, 2.5, 1e-10, &mut ledger).unwrap();
        assert_eq!(ledger.sp_queries, 1);
        assert_eq!(ledger.h_queries, (2.0f64.sqrt() * 2.5).ceil() as u64);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn norm_preserved(t in 0.0f64..4.0, a in -1.0f64..1.0, b in -1.0f64..1.0) {
            prop_assume!(a.abs() + b.abs() > 1e-3);
            let psi = QuantumState::from_real(&[a, b]).unwrap();
            let out = evolve(&rabi(), &psi, 0.0, t, 1e-11).unwrap();
            prop_assert!((out.norm() - 1.0).abs() < 1e-12);
        }

        #[test]
        fn composition(s in 0.0f64..2.0, t in 0.0f64..2.0) {
            let psi = QuantumState::basis(2, 1).unwrap();
            let whole = evolve(&rabi(), &psi, 0.0, s + t, 1e-12).unwrap();
            let mid = evolve(&rabi(), &psi, 0.0, s, 1e-12).unwrap();
            let split = evolve(&rabi(), &mid, s, s + t, 1e-12).unwrap();
            prop_assert!(whole.distance(&split) < 1e-9);
        }

        #[test]
        fn time_reversal(t0 in 0.0f64..2.0, dt in 0.0f64..2.0) {
            let psi = QuantumState::from_real(&[0.3, -0.9]).unwrap();
            let fwd = evolve(&rabi(), &psi, t0, t0 + dt, 1e-12).unwrap();
            let back = evolve(&rabi(), &fwd, t0 + dt, t0, 1e-12).unwrap();
            prop_assert!(back.distance(&psi) < 1e-9);
        }
    }
}
