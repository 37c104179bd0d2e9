//! Built-in scenarios with closed-form `J(T)`.

use std::path::Path;

use anyhow::{anyhow, bail};

use qdo_core::dynamics::{true_j_on, Scenario};

use crate::schema::{Complex, ControlDoc, HamiltonianDoc, ModulationDoc, ObservableDoc, ScenarioDoc, WeightDoc};

/// Amplitude of the `(I − X)` observable in the bounded-Γ scenario.
pub const BURST_KAPPA: f64 = 0.015;
/// Frequency used by the spectroscopy scenarios.
pub const SPECTRO_OMEGA: f64 = 1.5;

/// Tolerance for stored-versus-oracle agreement.
pub const STORED_TOL: f64 = 1e-8;

pub struct BuiltIn {
    pub label: &'static str,
    pub description: &'static str,
    pub default_t: f64,
    doc: fn(f64) -> ScenarioDoc,
    exact: fn(f64) -> f64,
}

impl BuiltIn {
    pub fn doc(&self, horizon: f64) -> ScenarioDoc {
        let mut d = (self.doc)(horizon);
        d.true_j = Some((self.exact)(horizon));
        d
    }

    pub fn scenario(&self, horizon: f64) -> anyhow::Result<Scenario> {
        self.doc(horizon).to_scenario()
    }

    pub fn exact(&self, horizon: f64) -> f64 {
        (self.exact)(horizon)
    }
}

const ZERO: Complex = [0.0, 0.0];
const ONE: Complex = [1.0, 0.0];

fn re(x: f64) -> Complex {
    [x, 0.0]
}

fn rabi() -> HamiltonianDoc {
    HamiltonianDoc::ClosedForm {
        name: "rabi".into(),
        params: vec![2.0, 1.0, 1.3],
    }
}

fn z_plus(shift: f64) -> HamiltonianDoc {
    HamiltonianDoc::Constant {
        matrix: vec![vec![re(1.0 + shift), ZERO], vec![ZERO, re(-1.0 + shift)]],
    }
}

fn plus() -> Vec<Complex> {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    vec![re(s), re(s)]
}

fn base(
    label: &str,
    hamiltonian: HamiltonianDoc,
    observable: ObservableDoc,
    psi_in: Vec<Complex>,
    t: f64,
) -> ScenarioDoc {
    ScenarioDoc {
        label: label.into(),
        dim: psi_in.len(),
        hamiltonian,
        norm_bound: None,
        observable,
        psi_in,
        horizon: t,
        mu: 0.0,
        control: None,
        modulation: None,
        true_j: None,
    }
}

fn rabi_self(t: f64) -> ScenarioDoc {
    base("rabi-self", rabi(), ObservableDoc::SelfFollowing, vec![ONE, ZERO], t)
}

fn rabi_cos(t: f64) -> ScenarioDoc {
    let obs = ObservableDoc::Modulated {
        base: Box::new(ObservableDoc::SelfFollowing),
        weight: WeightDoc::Cos { omega: 1.0 },
    };
    base("rabi-cos", rabi(), obs, vec![ONE, ZERO], t)
}

fn rabi_controlled(t: f64) -> ScenarioDoc {
    let mut d = base(
        "rabi-controlled",
        rabi(),
        ObservableDoc::SelfFollowing,
        vec![ONE, ZERO],
        t,
    );
    d.mu = 1.0;
    d.control = Some(ControlDoc {
        kind: "cosine".into(),
        params: vec![0.5, 1.0],
    });
    d
}

fn follower(t: f64) -> ScenarioDoc {
    let obs = ObservableDoc::Follower {
        target_in: plus(),
        generator: HamiltonianDoc::Constant {
            matrix: vec![vec![ZERO, ZERO], vec![ZERO, ZERO]],
        },
    };
    base("follower", z_plus(0.0), obs, plus(), t)
}

fn pauli_x() -> ObservableDoc {
    ObservableDoc::Constant {
        matrix: vec![vec![ZERO, ONE], vec![ONE, ZERO]],
    }
}

fn spectro(t: f64, kind: &str) -> ScenarioDoc {
    let mut d = base(&format!("spectro-{kind}"), z_plus(0.0), pauli_x(), plus(), t);
    d.modulation = Some(ModulationDoc {
        kind: kind.into(),
        omega: SPECTRO_OMEGA,
    });
    d
}

fn flat(t: f64) -> ScenarioDoc {
    let half = ObservableDoc::Constant {
        matrix: vec![vec![re(0.5), ZERO], vec![ZERO, re(0.5)]],
    };
    base("flat", z_plus(0.0), half, vec![ONE, ZERO], t)
}

fn carleman_growing(t: f64) -> ScenarioDoc {
    let proj = ObservableDoc::Constant {
        matrix: vec![vec![ONE, ZERO], vec![ZERO, ZERO]],
    };
    base("carleman-growing", z_plus(2.0), proj, vec![ONE, ZERO], t)
}

fn carleman_bounded(t: f64) -> ScenarioDoc {
    let k = BURST_KAPPA;
    let obs = ObservableDoc::Constant {
        matrix: vec![vec![re(k), re(-k)], vec![re(-k), re(k)]],
    };
    let mut d = base("carleman-bounded", z_plus(2.0), obs, plus(), t);
    d.mu = 1.0;
    d.control = Some(ControlDoc {
        kind: "decay".into(),
        params: vec![2.0 * std::f64::consts::SQRT_2, 2.0],
    });
    d
}

fn spectro_re(t: f64) -> f64 {
    let (a, b) = (SPECTRO_OMEGA - 2.0, SPECTRO_OMEGA + 2.0);
    (a * t).sin() / (2.0 * a) + (b * t).sin() / (2.0 * b)
}

fn spectro_im(t: f64) -> f64 {
    let (a, b) = (SPECTRO_OMEGA - 2.0, SPECTRO_OMEGA + 2.0);
    (1.0 - (b * t).cos()) / (2.0 * b) + (1.0 - (a * t).cos()) / (2.0 * a)
}

pub fn library() -> Vec<BuiltIn> {
    vec![
        BuiltIn {
            label: "rabi-self",
            description: "driven qubit, O(t) = |ψ(t)⟩⟨ψ(t)|; J = T",
            default_t: 2.0,
            doc: rabi_self,
            exact: |t| t,
        },
        BuiltIn {
            label: "rabi-cos",
            description: "driven qubit, O(t) = cos t·|ψ(t)⟩⟨ψ(t)|; J = sin T",
            default_t: 2.0,
            doc: rabi_cos,
            exact: f64::sin,
        },
        BuiltIn {
            label: "rabi-controlled",
            description: "rabi-self plus running cost (1/2)·(0.5 cos t)²",
            default_t: 2.0,
            doc: rabi_controlled,
            exact: |t| t + 0.125 * (0.5 * t + (2.0 * t).sin() / 4.0),
        },
        BuiltIn {
            label: "follower",
            description: "H = Z from |+⟩, target |+⟩ held fixed; J = T/2 + sin(2T)/4",
            default_t: 2.0,
            doc: follower,
            exact: |t| 0.5 * t + (2.0 * t).sin() / 4.0,
        },
        BuiltIn {
            label: "flat",
            description: "constant integrand ⟨O⟩ = 1/2 for bias studies; J = T/2",
            default_t: 3.0,
            doc: flat,
            exact: |t| 0.5 * t,
        },
        BuiltIn {
            label: "spectro-cos",
            description: "H = Z, O = X from |+⟩; Re ∫e^{1.5it}⟨X⟩dt",
            default_t: 2.0,
            doc: |t| spectro(t, "cos"),
            exact: spectro_re,
        },
        BuiltIn {
            label: "spectro-sin",
            description: "H = Z, O = X from |+⟩; Im ∫e^{1.5it}⟨X⟩dt",
            default_t: 2.0,
            doc: |t| spectro(t, "sin"),
            exact: spectro_im,
        },
        BuiltIn {
            label: "carleman-growing",
            description: "H = Z + 2I, O = |0⟩⟨0| from |0⟩; J = T, Γ = (T²+1)/T",
            default_t: 4.0,
            doc: carleman_growing,
            exact: |t| t,
        },
        BuiltIn {
            label: "carleman-bounded",
            description: "H = Z + 2I, O = κ(I − X) from |+⟩ with a decaying control; Γ ≈ 2",
            default_t: 4.0,
            doc: carleman_bounded,
            exact: |t| 1.0 - (-4.0 * t).exp() + BURST_KAPPA * (t - (2.0 * t).sin() / 2.0),
        },
    ]
}

pub fn find(label: &str) -> anyhow::Result<BuiltIn> {
    library().into_iter().find(|b| b.label == label).ok_or_else(|| {
        let known: Vec<_> = library().iter().map(|b| b.label).collect();
        anyhow!("unknown scenario `{label}` (known: {})", known.join(", "))
    })
}

/// Checks a stored value against the oracle at the document's horizon.
pub fn check_stored(doc: &ScenarioDoc) -> anyhow::Result<()> {
    let Some(stored) = doc.true_j else { return Ok(()) };
    let sc = doc.to_scenario()?;
    let oracle = true_j_on(&sc, sc.horizon, 1e-11)?;
    if (oracle - stored).abs() > STORED_TOL {
        bail!(
            "scenario `{}`: stored J(T) = {stored} disagrees with the oracle value {oracle}",
            doc.label
        );
    }
    Ok(())
}

/// A scenario by built-in label or JSON path, at horizon `t` when given.
/// Built-ins carry their closed-form `J(t)`; a file keeps its stored value
/// only at its own horizon.
pub fn resolve(name: &str, t: Option<f64>) -> anyhow::Result<ScenarioDoc> {
    let path = Path::new(name);
    if path.extension().is_some_and(|e| e == "json") || path.exists() {
        let mut doc = ScenarioDoc::load(path)?;
        check_stored(&doc)?;
        if let Some(t) = t.filter(|&t| t != doc.horizon) {
            doc.horizon = t;
            doc.true_j = None;
        }
        return Ok(doc);
    }
    let b = find(name)?;
    let doc = b.doc(t.unwrap_or(b.default_t));
    check_stored(&doc)?;
    Ok(doc)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stored_values_match_oracle() {
        for b in library() {
            for t in [b.default_t, 1.0, 3.5] {
                check_stored(&b.doc(t)).unwrap_or_else(|e| panic!("{}: {e}", b.label));
            }
        }
    }

    #[test]
    fn rabi_cos_at_pi_is_zero() {
        let doc = find("rabi-cos").unwrap().doc(std::f64::consts::PI);
        assert!(doc.true_j.unwrap().abs() < 1e-15);
        check_stored(&doc).unwrap();
    }

    #[test]
    fn bounded_gamma_stays_near_two() {
        let b = find("carleman-bounded").unwrap();
        for t in [1.0, 2.0, 3.0, 5.0, 7.0, 10.0, 13.0, 16.0] {
            let j = b.exact(t);
            assert!((j * j + 1.0) / j <= 2.1, "T={t}");
        }
    }

    #[test]
    fn unknown_label_lists_known() {
        let err = find("nope").err().unwrap().to_string();
        assert!(err.contains("rabi-self"));
    }

    #[test]
    fn resolve_rewrites_horizon_and_value() {
        let doc = resolve("carleman-growing", Some(8.0)).unwrap();
        assert_eq!(doc.horizon, 8.0);
        assert_eq!(doc.true_j, Some(8.0));
    }
}
