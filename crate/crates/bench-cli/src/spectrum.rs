//! Recombining cosine and sine runs into `|J(ω)|`.

use serde::Serialize;

use qdo_core::dynamics::true_spectrum;
use qdo_core::estimators::Pipeline;

use crate::runner::{dispatch, prepare, SweepConfig};
use crate::scenarios::{self, SPECTRO_OMEGA};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SpectrumCheck {
    pub omega: f64,
    pub re: f64,
    pub im: f64,
    pub magnitude: f64,
    pub exact: f64,
    pub tolerance: f64,
}

impl SpectrumCheck {
    pub fn passed(&self) -> bool {
        (self.magnitude - self.exact).abs() <= self.tolerance
    }
}

/// Estimates `Re` and `Im` of `∫e^{iωt}⟨X⟩dt` separately with `pipeline`.
pub fn recombine(pipeline: Pipeline, horizon: f64, eps: f64, delta: f64, seed: u64) -> anyhow::Result<SpectrumCheck> {
    let mut parts = [0.0; 2];
    for (slot, label) in parts.iter_mut().zip(["spectro-cos", "spectro-sin"]) {
        let mut cfg = SweepConfig::new(label, pipeline);
        cfg.delta = delta;
        let doc = scenarios::find(label)?.doc(horizon);
        let pcfg = cfg.pipeline_config(eps)?;
        let prep = prepare(&doc, horizon, pipeline, &pcfg)?;
        *slot = dispatch(pipeline, &prep, &pcfg, seed)?.estimate;
    }
    let sc = scenarios::find("spectro-cos")?.scenario(horizon)?;
    let exact = true_spectrum(&sc, SPECTRO_OMEGA)?.norm();
    Ok(SpectrumCheck {
        omega: SPECTRO_OMEGA,
        re: parts[0],
        im: parts[1],
        magnitude: parts[0].hypot(parts[1]),
        exact,
        tolerance: eps * std::f64::consts::SQRT_2,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn oracle_magnitude_matches_closed_form() {
        let c = recombine(Pipeline::Hadamard, 2.0, 0.1, 0.1, 5).unwrap();
        let b = |l| scenarios::find(l).unwrap().exact(2.0);
        let closed: f64 = f64::hypot(b("spectro-cos"), b("spectro-sin"));
        assert!((c.exact - closed).abs() < 1e-8);
    }

    #[test]
    fn hadamard_recombines_within_tolerance() {
        let hits = (0..10)
            .filter(|&s| recombine(Pipeline::Hadamard, 2.0, 0.1, 0.1, s).unwrap().passed())
            .count();
        assert!(hits >= 9, "{hits}/10");
    }
}
