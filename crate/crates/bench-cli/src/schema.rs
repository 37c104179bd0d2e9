//! JSON scenario files.

use std::path::Path;

use anyhow::{bail, Context};
use serde::{Deserialize, Serialize};

use qdo_core::dynamics::{
    ClosedForm, Control, HamiltonianSpec, Modulation, ObservableKind, ObservableSpec, QuantumState, Scenario,
    TimeGenerator, Weight,
};
use qdo_core::linalg::{CMatrix, CVector, C64};

/// Complex number as `[re, im]`.
pub type Complex = [f64; 2];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum HamiltonianDoc {
    Constant {
        matrix: Vec<Vec<Complex>>,
    },
    Piecewise {
        times: Vec<f64>,
        matrices: Vec<Vec<Vec<Complex>>>,
    },
    ClosedForm {
        name: String,
        params: Vec<f64>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum WeightDoc {
    Cos { omega: f64 },
    Sin { omega: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ObservableDoc {
    Constant {
        matrix: Vec<Vec<Complex>>,
    },
    SelfFollowing,
    Follower {
        target_in: Vec<Complex>,
        generator: HamiltonianDoc,
    },
    Modulated {
        base: Box<ObservableDoc>,
        weight: WeightDoc,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct ControlDoc {
    pub kind: String,
    #[serde(default)]
    pub params: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct ModulationDoc {
    pub kind: String,
    #[serde(default)]
    pub omega: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioDoc {
    pub label: String,
    pub dim: usize,
    pub hamiltonian: HamiltonianDoc,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub norm_bound: Option<f64>,
    pub observable: ObservableDoc,
    pub psi_in: Vec<Complex>,
    #[serde(rename = "T")]
    pub horizon: f64,
    #[serde(default)]
    pub mu: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub control: Option<ControlDoc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub modulation: Option<ModulationDoc>,
    /// Stored reference value of `J(T)`, checked against the oracle on load.
    #[serde(default, rename = "true_J", skip_serializing_if = "Option::is_none")]
    pub true_j: Option<f64>,
}

fn matrix(rows: &[Vec<Complex>], dim: usize) -> anyhow::Result<CMatrix> {
    if rows.len() != dim || rows.iter().any(|r| r.len() != dim) {
        bail!("matrix must be {dim}×{dim}");
    }
    Ok(CMatrix::from_fn(dim, dim, |i, j| {
        C64::new(rows[i][j][0], rows[i][j][1])
    }))
}

fn vector(values: &[Complex], dim: usize) -> anyhow::Result<QuantumState> {
    if values.len() != dim {
        bail!("state must have {dim} amplitudes, got {}", values.len());
    }
    let v = CVector::from_iterator(dim, values.iter().map(|z| C64::new(z[0], z[1])));
    Ok(QuantumState::new(v)?)
}

fn hamiltonian(doc: &HamiltonianDoc, dim: usize) -> anyhow::Result<HamiltonianSpec> {
    let h = match doc {
        HamiltonianDoc::Constant { matrix: m } => HamiltonianSpec::constant(matrix(m, dim)?)?,
        HamiltonianDoc::Piecewise { times, matrices } => HamiltonianSpec::piecewise(
            times.clone(),
            matrices.iter().map(|m| matrix(m, dim)).collect::<anyhow::Result<_>>()?,
        )?,
        HamiltonianDoc::ClosedForm { name, params } => {
            HamiltonianSpec::closed_form(ClosedForm::from_identifier(name, params)?)
        }
    };
    if h.dim() != dim {
        bail!("Hamiltonian dimension {} does not match dim = {dim}", h.dim());
    }
    Ok(h)
}

fn observable(doc: &ObservableDoc, dim: usize) -> anyhow::Result<ObservableKind> {
    Ok(match doc {
        ObservableDoc::Constant { matrix: m } => ObservableKind::Constant(matrix(m, dim)?),
        ObservableDoc::SelfFollowing => ObservableKind::SelfFollowing,
        ObservableDoc::Follower { target_in, generator } => ObservableKind::Follower {
            target_in: vector(target_in, dim)?,
            generator: hamiltonian(generator, dim)?,
        },
        ObservableDoc::Modulated { base, weight } => ObservableKind::Modulated {
            base: Box::new(observable(base, dim)?),
            weight: match *weight {
                WeightDoc::Cos { omega } => Weight::Cos(omega),
                WeightDoc::Sin { omega } => Weight::Sin(omega),
            },
        },
    })
}

fn control(doc: Option<&ControlDoc>) -> anyhow::Result<Control> {
    let Some(doc) = doc else { return Ok(Control::Zero) };
    let p = &doc.params;
    let need = |k: usize| -> anyhow::Result<()> {
        if p.len() != k {
            bail!("control `{}` takes {k} parameters, got {}", doc.kind, p.len());
        }
        Ok(())
    };
    Ok(match doc.kind.as_str() {
        "zero" => Control::Zero,
        "constant" => {
            need(1)?;
            Control::Constant(p[0])
        }
        "cosine" => {
            need(2)?;
            Control::Cosine {
                amplitude: p[0],
                frequency: p[1],
            }
        }
        "decay" => {
            need(2)?;
            Control::Decay {
                amplitude: p[0],
                rate: p[1],
            }
        }
        other => bail!("unknown control kind `{other}`"),
    })
}

fn modulation(doc: Option<&ModulationDoc>) -> anyhow::Result<Modulation> {
    let Some(doc) = doc else { return Ok(Modulation::None) };
    Ok(match doc.kind.as_str() {
        "none" => Modulation::None,
        "cos" => Modulation::Cos(doc.omega),
        "sin" => Modulation::Sin(doc.omega),
        other => bail!("unknown modulation kind `{other}`"),
    })
}

impl ScenarioDoc {
    pub fn to_scenario(&self) -> anyhow::Result<Scenario> {
        let mut h = hamiltonian(&self.hamiltonian, self.dim)?;
        if let Some(bound) = self.norm_bound {
            h = h.with_norm_bound(bound)?;
        }
        let obs = ObservableSpec::new(observable(&self.observable, self.dim)?, self.dim)?;
        let sc = Scenario::new(
            self.label.clone(),
            h,
            obs,
            vector(&self.psi_in, self.dim)?,
            self.horizon,
        )?
        .with_control(control(self.control.as_ref())?, self.mu)?
        .with_modulation(modulation(self.modulation.as_ref())?);
        Ok(sc)
    }

    pub fn from_json(text: &str) -> anyhow::Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        Self::from_json(&text).with_context(|| format!("parsing {}", path.display()))
    }
}
