use crate::dynamics::{HamiltonianSpec, QuantumState, TimeGenerator, HERMITIAN_TOL};
use crate::error::{Error, Result};
use crate::linalg::{ensure_hermitian, hermitian_norm, outer, CMatrix, C64};

/// Scalar weight multiplying an observable.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Weight {
    Cos(f64),
    Sin(f64),
}

impl Weight {
    pub fn value(&self, t: f64) -> f64 {
        match *self {
            Weight::Cos(omega) => (omega * t).cos(),
            Weight::Sin(omega) => (omega * t).sin(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ObservableKind {
    Constant(CMatrix),
    /// `O(t) = |ψ(t)⟩⟨ψ(t)|` along the scenario's own trajectory.
    SelfFollowing,
    /// `O(t) = |φ(t)⟩⟨φ(t)|` for a target evolved from `target_in` under
    /// `generator`.
    Follower {
        target_in: QuantumState,
        generator: HamiltonianSpec,
    },
    Modulated {
        base: Box<ObservableKind>,
        weight: Weight,
    },
}

impl ObservableKind {
    pub fn needs_target(&self) -> bool {
        match self {
            ObservableKind::Follower { .. } => true,
            ObservableKind::Modulated { base, .. } => base.needs_target(),
            _ => false,
        }
    }

    pub fn target(&self) -> Option<(&QuantumState, &HamiltonianSpec)> {
        match self {
            ObservableKind::Follower { target_in, generator } => Some((target_in, generator)),
            ObservableKind::Modulated { base, .. } => base.target(),
            _ => None,
        }
    }

    pub fn is_constant(&self) -> bool {
        matches!(self, ObservableKind::Constant(_))
    }

    /// Unscaled `O(t)` given the reference point `ψ(t)` and, for followers,
    /// the target point `φ(t)`.
    fn realize_raw(&self, t: f64, reference: &QuantumState, target: Option<&QuantumState>) -> CMatrix {
        match self {
            ObservableKind::Constant(m) => m.clone(),
            ObservableKind::SelfFollowing => outer(reference.amplitudes(), reference.amplitudes()),
            ObservableKind::Follower { .. } => {
                let phi = target.expect("follower observable realized without its target trajectory");
                outer(phi.amplitudes(), phi.amplitudes())
            }
            ObservableKind::Modulated { base, weight } => {
                base.realize_raw(t, reference, target) * C64::from(weight.value(t))
            }
        }
    }

    fn raw_norm_and_hs(&self) -> Result<(f64, f64)> {
        match self {
            ObservableKind::Constant(m) => {
                ensure_hermitian(m, HERMITIAN_TOL, "observable")?;
                let hs = m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
                Ok((hermitian_norm(m), hs))
            }
            ObservableKind::SelfFollowing | ObservableKind::Follower { .. } => Ok((1.0, 1.0)),
            ObservableKind::Modulated { base, .. } => base.raw_norm_and_hs(),
        }
    }
}

/// An observable family rescaled so that `‖O(t)‖ ≤ 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct ObservableSpec {
    kind: ObservableKind,
    dim: usize,
    scale: f64,
    hs_norm: f64,
}

impl ObservableSpec {
    /// Validates the observable and records the factor `1/max(1, ‖O‖)` that is applied
    /// to every realized matrix.
    pub fn new(kind: ObservableKind, dim: usize) -> Result<Self> {
        if let ObservableKind::Constant(m) = base_kind(&kind) {
            if m.nrows() != dim || m.ncols() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: m.nrows(),
                });
            }
        }
        if let Some((target, generator)) = kind.target() {
            target.check_dim(dim)?;
            if generator.dim() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: generator.dim(),
                });
            }
        }
        let (norm, raw_hs) = kind.raw_norm_and_hs()?;
        let scale = 1.0 / norm.max(1.0);
        Ok(Self {
            kind,
            dim,
            scale,
            hs_norm: raw_hs * scale,
        })
    }

    pub fn constant(m: CMatrix) -> Result<Self> {
        let dim = m.nrows();
        Self::new(ObservableKind::Constant(m), dim)
    }

    pub fn kind(&self) -> &ObservableKind {
        &self.kind
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Factor applied to the user matrix; reported values are divided by it.
    pub fn scale(&self) -> f64 {
        self.scale
    }

    /// `√Tr(O²)` of the rescaled observable.
    pub fn hs_norm(&self) -> f64 {
        self.hs_norm
    }

    /// Rescaled `O(t)`.
    pub fn realize(&self, t: f64, reference: &QuantumState, target: Option<&QuantumState>) -> CMatrix {
        self.kind.realize_raw(t, reference, target) * C64::from(self.scale)
    }

    /// Rescaled constant matrix for time-independent observables.
    pub fn as_constant(&self) -> Option<CMatrix> {
        match &self.kind {
            ObservableKind::Constant(m) => Some(m * C64::from(self.scale)),
            _ => None,
        }
    }
}

fn base_kind(kind: &ObservableKind) -> &ObservableKind {
    match kind {
        ObservableKind::Modulated { base, .. } => base_kind(base),
        other => other,
    }
}

/// `O(t_k)` at one node together with the real coefficients that turn the
/// complex expectation `f = ⟨ψ|O|ψ⟩` into the estimated integrand
/// `coeff_re·Re f + coeff_im·Im f`.
#[derive(Debug, Clone)]
pub struct RealizedObservable {
    pub time: f64,
    pub matrix: CMatrix,
    pub coeff_re: f64,
    pub coeff_im: f64,
}

impl RealizedObservable {
    pub fn expectation_complex(&self, state: &QuantumState) -> C64 {
        crate::linalg::sandwich(state.amplitudes(), &self.matrix)
    }

    /// Hermitian matrix `M` with `⟨ψ|M|ψ⟩ = coeff_re·Re f + coeff_im·Im f`.
    pub fn effective_matrix(&self) -> CMatrix {
        let adj = self.matrix.adjoint();
        let herm = (&self.matrix + &adj) * C64::from(0.5 * self.coeff_re);
        let anti = (&self.matrix - &adj) * C64::new(0.0, -0.5 * self.coeff_im);
        herm + anti
    }

    /// Weighted real integrand value at this node.
    pub fn value(&self, state: &QuantumState) -> f64 {
        let f = self.expectation_complex(state);
        self.coeff_re * f.re + self.coeff_im * f.im
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::c;

    #[test]
    fn oversized_observable_is_rescaled() {
        let m = CMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![c(4.0, 0.0), c(-1.0, 0.0)]));
        let spec = ObservableSpec::constant(m).unwrap();
        assert!((spec.scale() - 0.25).abs() < 1e-15);
        let realized = spec.as_constant().unwrap();
        assert!((hermitian_norm(&realized) - 1.0).abs() < 1e-14);
        assert!((spec.hs_norm() - (17.0f64).sqrt() / 4.0).abs() < 1e-14);
    }

    #[test]
    fn small_observable_untouched() {
        let m = CMatrix::from_diagonal_element(2, 2, c(0.5, 0.0));
        let spec = ObservableSpec::constant(m).unwrap();
        assert_eq!(spec.scale(), 1.0);
    }

    #[test]
    fn modulated_self_following_weight() {
        let spec = ObservableSpec::new(
            ObservableKind::Modulated {
                base: Box::new(ObservableKind::SelfFollowing),
                weight: Weight::Cos(1.0),
            },
            2,
        )
        .unwrap();
        let psi = QuantumState::basis(2, 1).unwrap();
        let o = spec.realize(0.7, &psi, None);
        assert!((o[(1, 1)].re - 0.7f64.cos()).abs() < 1e-15);
        assert!(o[(0, 0)].norm() < 1e-15);
    }
}
