use crate::dynamics::{
    reference_trajectory, HamiltonianSpec, ObservableSpec, QuantumState, RealizedObservable, TimeGenerator, Trajectory,
};
use crate::error::{invalid, Error, Result};

/// Scalar control `u(t)` entering the running cost as `(μ/2)·u²`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum Control {
    #[default]
    Zero,
    Constant(f64),
    /// `A·cos(ν t)`
    Cosine {
        amplitude: f64,
        frequency: f64,
    },
    /// `A·e^{-λ t}`
    Decay {
        amplitude: f64,
        rate: f64,
    },
}

impl Control {
    pub fn value(&self, t: f64) -> f64 {
        match *self {
            Control::Zero => 0.0,
            Control::Constant(v) => v,
            Control::Cosine { amplitude, frequency } => amplitude * (frequency * t).cos(),
            Control::Decay { amplitude, rate } => amplitude * (-rate * t).exp(),
        }
    }

    /// `∫_a^b u(t)² dt` in closed form.
    pub fn integral_sq(&self, a: f64, b: f64) -> f64 {
        match *self {
            Control::Zero => 0.0,
            Control::Constant(v) => v * v * (b - a),
            Control::Cosine { amplitude, frequency } => {
                if frequency == 0.0 {
                    return amplitude * amplitude * (b - a);
                }
                let anti = |t: f64| 0.5 * t + (2.0 * frequency * t).sin() / (4.0 * frequency);
                amplitude * amplitude * (anti(b) - anti(a))
            }
            Control::Decay { amplitude, rate } => {
                if rate == 0.0 {
                    return amplitude * amplitude * (b - a);
                }
                amplitude * amplitude * ((-2.0 * rate * a).exp() - (-2.0 * rate * b).exp()) / (2.0 * rate)
            }
        }
    }

    pub fn is_constant(&self) -> bool {
        matches!(self, Control::Zero | Control::Constant(_))
    }
}

/// Spectroscopic modulation: `Cos(ω)` selects `Re ∫e^{iωt}⟨O⟩dt`, `Sin(ω)`
/// selects the imaginary part.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum Modulation {
    #[default]
    None,
    Cos(f64),
    Sin(f64),
}

impl Modulation {
    /// Coefficients `(c_re, c_im)` with integrand `c_re·Re f + c_im·Im f`.
    pub fn coefficients(&self, t: f64) -> (f64, f64) {
        match *self {
            Modulation::None => (1.0, 0.0),
            Modulation::Cos(omega) => ((omega * t).cos(), -(omega * t).sin()),
            Modulation::Sin(omega) => ((omega * t).sin(), (omega * t).cos()),
        }
    }

    pub fn is_active(&self) -> bool {
        !matches!(self, Modulation::None)
    }
}

/// A complete dense-output problem instance.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub label: String,
    pub hamiltonian: HamiltonianSpec,
    pub observable: ObservableSpec,
    pub psi_in: QuantumState,
    pub horizon: f64,
    pub control: Control,
    pub mu: f64,
    pub modulation: Modulation,
}

impl Scenario {
    pub fn new(
        label: impl Into<String>,
        hamiltonian: HamiltonianSpec,
        observable: ObservableSpec,
        psi_in: QuantumState,
        horizon: f64,
    ) -> Result<Self> {
        let dim = hamiltonian.dim();
        psi_in.check_dim(dim)?;
        if observable.dim() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: observable.dim(),
            });
        }
        if !(horizon > 0.0 && horizon.is_finite()) {
            return invalid("horizon T must be positive");
        }
        Ok(Self {
            label: label.into(),
            hamiltonian,
            observable,
            psi_in,
            horizon,
            control: Control::Zero,
            mu: 0.0,
            modulation: Modulation::None,
        })
    }

    pub fn with_control(mut self, control: Control, mu: f64) -> Result<Self> {
        if mu.is_nan() || mu < 0.0 {
            return invalid("control penalty μ must be non-negative");
        }
        self.control = control;
        self.mu = mu;
        Ok(self)
    }

    pub fn with_modulation(mut self, modulation: Modulation) -> Self {
        self.modulation = modulation;
        self
    }

    pub fn with_horizon(mut self, horizon: f64) -> Result<Self> {
        if !(horizon > 0.0 && horizon.is_finite()) {
            return invalid("horizon T must be positive");
        }
        self.horizon = horizon;
        Ok(self)
    }

    pub fn dim(&self) -> usize {
        self.hamiltonian.dim()
    }

    pub fn norm_bound(&self) -> f64 {
        self.hamiltonian.norm_bound()
    }

    /// `(μ/2)∫_a^b u² dt`, evaluated classically.
    pub fn control_cost(&self, a: f64, b: f64) -> f64 {
        0.5 * self.mu * self.control.integral_sq(a, b)
    }

    /// Constant `H` and `O` with no modulation.
    pub fn is_time_independent(&self) -> bool {
        self.hamiltonian.is_constant() && self.observable.kind().is_constant() && !self.modulation.is_active()
    }
}

/// Realizes `O(t_k)` and the modulation coefficients at every trajectory node.
pub fn realize_observables(scenario: &Scenario, trajectory: &Trajectory) -> Vec<RealizedObservable> {
    trajectory
        .times
        .iter()
        .enumerate()
        .map(|(k, &t)| {
            let target = trajectory.targets.as_ref().map(|v| &v[k]);
            let (coeff_re, coeff_im) = scenario.modulation.coefficients(t);
            RealizedObservable {
                time: t,
                matrix: scenario.observable.realize(t, &trajectory.states[k], target),
                coeff_re,
                coeff_im,
            }
        })
        .collect()
}

/// `⟨ψ|O(t)|ψ⟩·w(t)` for the rescaled observable.
///
/// Trajectory-dependent observables are realized from a freshly computed
/// reference point, which is scenario construction and not charged.
pub fn expectation(state: &QuantumState, scenario: &Scenario, t: f64) -> Result<f64> {
    state.check_dim(scenario.dim())?;
    let trajectory = if scenario.observable.kind().is_constant() {
        Trajectory {
            times: vec![t],
            states: vec![state.clone()],
            targets: None,
        }
    } else {
        reference_trajectory(scenario, &[t], 1e-12)?
    };
    let realized = realize_observables(scenario, &trajectory);
    Ok(realized[0].value(state))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{ObservableKind, Weight};
    use crate::linalg::{c, CMatrix};

    fn projector0() -> CMatrix {
        CMatrix::from_row_slice(2, 2, &[c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)])
    }

    #[test]
    fn identity_observable_gives_one() {
        let obs = ObservableSpec::constant(CMatrix::identity(3, 3)).unwrap();
        let sc = Scenario::new(
            "id",
            HamiltonianSpec::zero(3),
            obs,
            QuantumState::basis(3, 2).unwrap(),
            1.0,
        )
        .unwrap();
        let psi = QuantumState::from_real(&[1.0, 2.0, -0.5]).unwrap();
        assert!((expectation(&psi, &sc, 0.3).unwrap() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn projector_overlap_half() {
        let obs = ObservableSpec::constant(projector0()).unwrap();
        let plus = QuantumState::from_real(&[1.0, 1.0]).unwrap();
        let sc = Scenario::new("p", HamiltonianSpec::zero(2), obs, plus.clone(), 1.0).unwrap();
        assert!((expectation(&plus, &sc, 0.0).unwrap() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn self_following_is_one_on_trajectory() {
        let h = HamiltonianSpec::closed_form(crate::dynamics::ClosedForm::Rabi {
            splitting: 2.0,
            drive: 1.0,
            frequency: 1.3,
        });
        let obs = ObservableSpec::new(ObservableKind::SelfFollowing, 2).unwrap();
        let sc = Scenario::new("a", h, obs, QuantumState::basis(2, 0).unwrap(), 3.0).unwrap();
        for &t in &[0.0, 0.4, 1.7, 3.0] {
            let psi_t = reference_trajectory(&sc, &[t], 1e-12).unwrap().states.remove(0);
            assert!((expectation(&psi_t, &sc, t).unwrap() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn dimension_mismatch_rejected() {
        let obs = ObservableSpec::constant(projector0()).unwrap();
        let err = Scenario::new(
            "bad",
            HamiltonianSpec::zero(3),
            obs,
            QuantumState::basis(3, 0).unwrap(),
            1.0,
        );
        assert!(matches!(err, Err(Error::DimensionMismatch { .. })));
        let obs = ObservableSpec::constant(projector0()).unwrap();
        let sc = Scenario::new(
            "ok",
            HamiltonianSpec::zero(2),
            obs,
            QuantumState::basis(2, 0).unwrap(),
            1.0,
        )
        .unwrap();
        let psi3 = QuantumState::basis(3, 0).unwrap();
        assert!(expectation(&psi3, &sc, 0.0).is_err());
    }

    #[test]
    fn modulation_coefficients_recombine_phase() {
        let t = 0.9;
        let omega = 1.7;
        let f = c(0.3, -0.2);
        let phase = c(0.0, omega * t).exp() * f;
        let (a, b) = Modulation::Cos(omega).coefficients(t);
        assert!((a * f.re + b * f.im - phase.re).abs() < 1e-15);
        let (a, b) = Modulation::Sin(omega).coefficients(t);
        assert!((a * f.re + b * f.im - phase.im).abs() < 1e-15);
        let w = Weight::Sin(2.0);
        assert!((w.value(0.25) - 0.5f64.sin()).abs() < 1e-15);
    }

    #[test]
    fn control_integrals_match_midpoint_sum() {
        let controls = [
            Control::Constant(1.5),
            Control::Cosine {
                amplitude: 0.7,
                frequency: 2.3,
            },
            Control::Decay {
                amplitude: 2.0,
                rate: 1.1,
            },
        ];
        for ctl in controls {
            let n = 200_000;
            let (a, b) = (0.3, 2.9);
            let h = (b - a) / n as f64;
            let brute: f64 = (0..n).map(|i| ctl.value(a + (i as f64 + 0.5) * h).powi(2) * h).sum();
            assert!((brute - ctl.integral_sq(a, b)).abs() < 1e-8, "{ctl:?}");
        }
    }
}
