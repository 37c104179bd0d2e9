//! Ground-truth functional values from an adaptive Dormand–Prince 5(4)
//! integration of the augmented system `[ψ, φ, J]`. Shares nothing with the
//! exponential/Magnus propagators.

use crate::dynamics::{ObservableSpec, QuantumState, Scenario, TimeGenerator};
use crate::error::{invalid, Error, Result};
use crate::linalg::{CVector, C64, I};

const DEFAULT_TOL: f64 = 1e-10;
const MAX_STEPS: usize = 5_000_000;

const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [
        19372.0 / 6561.0,
        -25360.0 / 2187.0,
        64448.0 / 6561.0,
        -212.0 / 729.0,
        0.0,
        0.0,
    ],
    [
        9017.0 / 3168.0,
        -355.0 / 33.0,
        46732.0 / 5247.0,
        49.0 / 176.0,
        -5103.0 / 18656.0,
        0.0,
    ],
    [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
    ],
];
const B5: [f64; 7] = [
    35.0 / 384.0,
    0.0,
    500.0 / 1113.0,
    125.0 / 192.0,
    -2187.0 / 6784.0,
    11.0 / 84.0,
    0.0,
];
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

fn dp5<F>(rhs: F, y0: CVector, t0: f64, t1: f64, atol: f64, rtol: f64) -> Result<CVector>
where
    F: Fn(f64, &CVector) -> CVector,
{
    let span = t1 - t0;
    if span == 0.0 {
        return Ok(y0);
    }
    let dir = span.signum();
    let mut t = t0;
    let mut y = y0;
    let mut h = dir * (span.abs() / 100.0).min(0.05);
    let mut k0 = rhs(t, &y);
    for _ in 0..MAX_STEPS {
        if (t1 - t) * dir <= 0.0 {
            return Ok(y);
        }
        if (t + h - t1) * dir > 0.0 {
            h = t1 - t;
        }
        let mut k: Vec<CVector> = Vec::with_capacity(7);
        k.push(k0.clone());
        for s in 1..7 {
            let mut ys = y.clone();
            for (j, kj) in k.iter().enumerate().take(s) {
                if A[s][j] != 0.0 {
                    ys.axpy(C64::from(h * A[s][j]), kj, C64::from(1.0));
                }
            }
            k.push(rhs(t + C[s] * h, &ys));
        }
        let mut y_new = y.clone();
        let mut err = CVector::zeros(y.len());
        for s in 0..7 {
            if B5[s] != 0.0 {
                y_new.axpy(C64::from(h * B5[s]), &k[s], C64::from(1.0));
            }
            if E[s] != 0.0 {
                err.axpy(C64::from(h * E[s]), &k[s], C64::from(1.0));
            }
        }
        let err_norm = err
            .iter()
            .zip(y.iter().zip(y_new.iter()))
            .map(|(e, (a, b))| e.norm() / (atol + rtol * a.norm().max(b.norm())))
            .fold(0.0_f64, f64::max);
        if !err_norm.is_finite() {
            return Err(Error::OracleDiverged(format!("non-finite error estimate at t = {t}")));
        }
        if err_norm <= 1.0 {
            t += h;
            y = y_new;
            k0 = k.swap_remove(6);
        }
        let factor = if err_norm == 0.0 {
            5.0
        } else {
            (0.9 * err_norm.powf(-0.2)).clamp(0.2, 5.0)
        };
        h *= factor;
        if h.abs() < 1e-14 * t.abs().max(1.0) {
            return Err(Error::OracleDiverged(format!("step size underflow at t = {t}")));
        }
    }
    Err(Error::OracleDiverged(format!("exceeded {MAX_STEPS} steps")))
}

/// `∫_0^{t_end} e^{iωt}⟨ψ|O(t)|ψ⟩ dt` for the unscaled observable.
fn modulated_integral(scenario: &Scenario, omega: f64, t_end: f64, tol: f64) -> Result<C64> {
    if t_end.is_nan() || t_end < 0.0 {
        return invalid("integration end point must be non-negative");
    }
    if tol.is_nan() || tol <= 0.0 {
        return invalid("oracle tolerance must be positive");
    }
    let n = scenario.dim();
    let target = scenario.observable.kind().target();
    let has_target = target.is_some();
    let len = if has_target { 2 * n + 1 } else { n + 1 };
    let mut y0 = CVector::zeros(len);
    y0.rows_mut(0, n).copy_from(scenario.psi_in.amplitudes());
    if let Some((phi_in, _)) = target {
        y0.rows_mut(n, n).copy_from(phi_in.amplitudes());
    }
    let obs: &ObservableSpec = &scenario.observable;
    let inv_scale = 1.0 / obs.scale();
    let rhs = |t: f64, y: &CVector| -> CVector {
        let mut dy = CVector::zeros(len);
        let psi = y.rows(0, n).into_owned();
        dy.rows_mut(0, n).copy_from(&(scenario.hamiltonian.at(t) * &psi * (-I)));
        let phi = target.map(|(_, gen)| {
            let phi = y.rows(n, n).into_owned();
            dy.rows_mut(n, n).copy_from(&(gen.at(t) * &phi * (-I)));
            QuantumState::from_raw(phi)
        });
        let reference = QuantumState::from_raw(psi.clone());
        let o = obs.realize(t, &reference, phi.as_ref());
        let f = psi.dotc(&(o * &psi)) * inv_scale;
        dy[len - 1] = C64::new(0.0, omega * t).exp() * f;
        dy
    };
    let eps = (tol * 1e-3 / t_end.max(1.0)).max(1e-14);
    let y = dp5(rhs, y0, 0.0, t_end, eps, eps)?;
    Ok(y[len - 1])
}

/// `J(t_end)` including modulation and control penalty, to absolute accuracy
/// roughly `tol`.
pub fn true_j_on(scenario: &Scenario, t_end: f64, tol: f64) -> Result<f64> {
    use crate::dynamics::Modulation;
    let cost = scenario.control_cost(0.0, t_end);
    let value = match scenario.modulation {
        Modulation::None => modulated_integral(scenario, 0.0, t_end, tol)?.re,
        Modulation::Cos(omega) => modulated_integral(scenario, omega, t_end, tol)?.re,
        Modulation::Sin(omega) => modulated_integral(scenario, omega, t_end, tol)?.im,
    };
    Ok(value + cost)
}

/// `J(T)` at the scenario horizon.
pub fn true_j(scenario: &Scenario) -> Result<f64> {
    true_j_on(scenario, scenario.horizon, DEFAULT_TOL)
}

/// `∫_0^T e^{iωt}⟨O(t)⟩ dt` without control penalty or modulation flag.
pub fn true_spectrum(scenario: &Scenario, omega: f64) -> Result<C64> {
    modulated_integral(scenario, omega, scenario.horizon, DEFAULT_TOL)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{ClosedForm, Control, HamiltonianSpec, Modulation, ObservableKind};
    use crate::linalg::{c, CMatrix};

    fn pauli_z() -> CMatrix {
        CMatrix::from_row_slice(2, 2, &[c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(-1.0, 0.0)])
    }

    fn pauli_x() -> CMatrix {
        CMatrix::from_row_slice(2, 2, &[c(0.0, 0.0), c(1.0, 0.0), c(1.0, 0.0), c(0.0, 0.0)])
    }

    #[test]
    fn dp5_exponential_decay() {
        let y0 = CVector::from_element(1, c(1.0, 0.0));
        let y = dp5(|_, y| -y, y0, 0.0, 3.0, 1e-12, 1e-12).unwrap();
        assert!((y[0].re - (-3.0f64).exp()).abs() < 1e-11);
    }

    #[test]
    fn precession_of_x_under_z() {
        // H = Z, ψ = |+⟩, ⟨X⟩(t) = cos 2t so J = sin(2T)/2.
        let h = HamiltonianSpec::constant(pauli_z()).unwrap();
        let obs = ObservableSpec::constant(pauli_x()).unwrap();
        let plus = QuantumState::from_real(&[1.0, 1.0]).unwrap();
        let sc = Scenario::new("x", h, obs, plus, 2.3).unwrap();
        assert!((true_j(&sc).unwrap() - (4.6f64).sin() / 2.0).abs() < 1e-9);
    }

    #[test]
    fn self_following_and_modulated_closed_forms() {
        let h = HamiltonianSpec::closed_form(ClosedForm::Rabi {
            splitting: 2.0,
            drive: 1.0,
            frequency: 1.3,
        });
        let t = 4.0;
        let a = Scenario::new(
            "a",
            h.clone(),
            ObservableSpec::new(ObservableKind::SelfFollowing, 2).unwrap(),
            QuantumState::basis(2, 0).unwrap(),
            t,
        )
        .unwrap();
        assert!((true_j(&a).unwrap() - t).abs() < 1e-9);
        let b = Scenario::new(
            "b",
            h,
            ObservableSpec::new(
                ObservableKind::Modulated {
                    base: Box::new(ObservableKind::SelfFollowing),
                    weight: crate::dynamics::Weight::Cos(1.0),
                },
                2,
            )
            .unwrap(),
            QuantumState::basis(2, 0).unwrap(),
            t,
        )
        .unwrap();
        assert!((true_j(&b).unwrap() - t.sin()).abs() < 1e-9);
    }

    #[test]
    fn spectrum_matches_modulated_parts() {
        let h = HamiltonianSpec::constant(pauli_z()).unwrap();
        let obs = ObservableSpec::constant(pauli_x()).unwrap();
        let plus = QuantumState::from_real(&[1.0, 1.0]).unwrap();
        let sc = Scenario::new("x", h, obs, plus, 3.0).unwrap();
        let omega = 2.0;
        // ∫ e^{2it} cos 2t dt = T/2 + (e^{4iT} - 1)/(8i)
        let expected = c(1.5, 0.0) + (c(0.0, 12.0).exp() - c(1.0, 0.0)) / c(0.0, 8.0);
        let z = true_spectrum(&sc, omega).unwrap();
        assert!((z - expected).norm() < 1e-9);
        let cos = true_j(&sc.clone().with_modulation(Modulation::Cos(omega))).unwrap();
        let sin = true_j(&sc.with_modulation(Modulation::Sin(omega))).unwrap();
        assert!((cos - expected.re).abs() < 1e-9 && (sin - expected.im).abs() < 1e-9);
    }

    #[test]
    fn control_penalty_added() {
        let obs = ObservableSpec::constant(CMatrix::identity(2, 2)).unwrap();
        let sc = Scenario::new(
            "u",
            HamiltonianSpec::zero(2),
            obs,
            QuantumState::basis(2, 0).unwrap(),
            2.0,
        )
        .unwrap()
        .with_control(Control::Constant(3.0), 0.5)
        .unwrap();
        assert!((true_j(&sc).unwrap() - (2.0 + 0.25 * 9.0 * 2.0)).abs() < 1e-10);
    }

    #[test]
    fn rescaled_observable_reports_raw_value() {
        let h = HamiltonianSpec::zero(2);
        let obs = ObservableSpec::constant(pauli_z() * c(3.0, 0.0)).unwrap();
        let sc = Scenario::new("z", h, obs, QuantumState::basis(2, 0).unwrap(), 1.5).unwrap();
        assert!((true_j(&sc).unwrap() - 4.5).abs() < 1e-10);
    }
}
