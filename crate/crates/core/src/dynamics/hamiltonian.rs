use crate::dynamics::HERMITIAN_TOL;
use crate::error::{invalid, Error, Result};
use crate::linalg::{c, ensure_hermitian, hermitian_norm, CMatrix, C64};

/// Anything that yields a Hermitian generator `H(t)`.
pub trait TimeGenerator {
    fn dim(&self) -> usize;
    fn at(&self, t: f64) -> CMatrix;
    fn is_constant(&self) -> bool;
    /// Upper bound on `sup_t ‖H(t)‖`.
    fn norm_bound(&self) -> f64;
}

/// Closed-form time-dependent Hamiltonians.
#[derive(Debug, Clone, PartialEq)]
pub enum ClosedForm {
    /// Driven qubit `(ω₀/2)·Z + Ω·cos(ν t)·X`.
    Rabi { splitting: f64, drive: f64, frequency: f64 },
}

impl ClosedForm {
    /// Looks up a closed form by identifier, e.g. `("rabi", [ω₀, Ω, ν])`.
    pub fn from_identifier(name: &str, params: &[f64]) -> Result<Self> {
        match (name, params) {
            ("rabi", [splitting, drive, frequency]) => Ok(ClosedForm::Rabi {
                splitting: *splitting,
                drive: *drive,
                frequency: *frequency,
            }),
            ("rabi", _) => invalid("closed form 'rabi' takes 3 parameters [splitting, drive, frequency]"),
            _ => invalid(format!("unknown closed-form Hamiltonian '{name}'")),
        }
    }

    pub fn identifier(&self) -> (&'static str, Vec<f64>) {
        match self {
            ClosedForm::Rabi {
                splitting,
                drive,
                frequency,
            } => ("rabi", vec![*splitting, *drive, *frequency]),
        }
    }

    fn dim(&self) -> usize {
        match self {
            ClosedForm::Rabi { .. } => 2,
        }
    }

    fn at(&self, t: f64) -> CMatrix {
        match *self {
            ClosedForm::Rabi {
                splitting,
                drive,
                frequency,
            } => {
                let z = 0.5 * splitting;
                let x = drive * (frequency * t).cos();
                CMatrix::from_row_slice(2, 2, &[c(z, 0.0), c(x, 0.0), c(x, 0.0), c(-z, 0.0)])
            }
        }
    }

    fn norm_bound(&self) -> f64 {
        match *self {
            ClosedForm::Rabi { splitting, drive, .. } => (0.25 * splitting * splitting + drive * drive).sqrt(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum HamiltonianKind {
    Constant(CMatrix),
    /// Samples `H(t_i)` joined by linear interpolation; held constant outside
    /// the sampled range.
    PiecewiseSampled {
        times: Vec<f64>,
        matrices: Vec<CMatrix>,
    },
    ClosedForm(ClosedForm),
}

#[derive(Debug, Clone, PartialEq)]
pub struct HamiltonianSpec {
    kind: HamiltonianKind,
    dim: usize,
    norm_bound: f64,
}

impl HamiltonianSpec {
    pub fn constant(h: CMatrix) -> Result<Self> {
        ensure_hermitian(&h, HERMITIAN_TOL, "constant Hamiltonian")?;
        let norm_bound = hermitian_norm(&h);
        Ok(Self {
            dim: h.nrows(),
            kind: HamiltonianKind::Constant(h),
            norm_bound,
        })
    }

    pub fn zero(dim: usize) -> Self {
        Self {
            kind: HamiltonianKind::Constant(CMatrix::zeros(dim, dim)),
            dim,
            norm_bound: 0.0,
        }
    }

    pub fn piecewise(times: Vec<f64>, matrices: Vec<CMatrix>) -> Result<Self> {
        if times.is_empty() || times.len() != matrices.len() {
            return invalid("piecewise Hamiltonian needs one matrix per sample time");
        }
        if times.windows(2).any(|w| w[1] <= w[0]) {
            return invalid("piecewise Hamiltonian sample times must be strictly increasing");
        }
        let dim = matrices[0].nrows();
        let mut norm_bound = 0.0_f64;
        for (i, m) in matrices.iter().enumerate() {
            if m.nrows() != dim || m.ncols() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: m.nrows(),
                });
            }
            ensure_hermitian(m, HERMITIAN_TOL, &format!("sample {i}"))?;
            // Linear interpolation of Hermitian matrices cannot exceed the
            // largest endpoint norm.
            norm_bound = norm_bound.max(hermitian_norm(m));
        }
        Ok(Self {
            kind: HamiltonianKind::PiecewiseSampled { times, matrices },
            dim,
            norm_bound,
        })
    }

    pub fn closed_form(form: ClosedForm) -> Self {
        Self {
            dim: form.dim(),
            norm_bound: form.norm_bound(),
            kind: HamiltonianKind::ClosedForm(form),
        }
    }

    /// Replaces the norm bound with a looser user-declared one.
    pub fn with_norm_bound(mut self, bound: f64) -> Result<Self> {
        if bound < self.norm_bound * (1.0 - 1e-12) {
            return Err(Error::NormBoundViolated {
                norm: self.norm_bound,
                bound,
            });
        }
        self.norm_bound = bound;
        Ok(self)
    }

    pub fn kind(&self) -> &HamiltonianKind {
        &self.kind
    }

    /// Realizes `H(t)` and checks it against the Hermiticity and norm
    /// invariants.
    pub fn checked_at(&self, t: f64) -> Result<CMatrix> {
        let h = self.at(t);
        ensure_hermitian(&h, HERMITIAN_TOL, &format!("H({t})"))?;
        let norm = hermitian_norm(&h);
        if norm > self.norm_bound * (1.0 + 1e-9) + 1e-15 {
            return Err(Error::NormBoundViolated {
                norm,
                bound: self.norm_bound,
            });
        }
        Ok(h)
    }

    /// The matrix when the Hamiltonian is time-independent.
    pub fn as_constant(&self) -> Option<&CMatrix> {
        match &self.kind {
            HamiltonianKind::Constant(h) => Some(h),
            _ => None,
        }
    }
}

impl TimeGenerator for HamiltonianSpec {
    fn dim(&self) -> usize {
        self.dim
    }

    fn at(&self, t: f64) -> CMatrix {
        match &self.kind {
            HamiltonianKind::Constant(h) => h.clone(),
            HamiltonianKind::ClosedForm(form) => form.at(t),
            HamiltonianKind::PiecewiseSampled { times, matrices } => {
                let last = times.len() - 1;
                if t <= times[0] {
                    return matrices[0].clone();
                }
                if t >= times[last] {
                    return matrices[last].clone();
                }
                let hi = times.partition_point(|&s| s <= t);
                let lo = hi - 1;
                let frac = (t - times[lo]) / (times[hi] - times[lo]);
                &matrices[lo] * C64::from(1.0 - frac) + &matrices[hi] * C64::from(frac)
            }
        }
    }

    fn is_constant(&self) -> bool {
        match &self.kind {
            HamiltonianKind::Constant(_) => true,
            HamiltonianKind::PiecewiseSampled { matrices, .. } => matrices.len() == 1,
            HamiltonianKind::ClosedForm(ClosedForm::Rabi { drive, .. }) => *drive == 0.0,
        }
    }

    fn norm_bound(&self) -> f64 {
        self.norm_bound
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_non_hermitian() {
        let m = CMatrix::from_row_slice(2, 2, &[c(0.0, 0.0), c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)]);
        assert!(matches!(HamiltonianSpec::constant(m), Err(Error::NotHermitian { .. })));
    }

    #[test]
    fn rabi_norm_bound_is_tight_at_drive_peak() {
        let h = HamiltonianSpec::closed_form(ClosedForm::Rabi {
            splitting: 2.0,
            drive: 1.0,
            frequency: 1.3,
        });
        assert!((h.norm_bound() - 2f64.sqrt()).abs() < 1e-15);
        let peak = hermitian_norm(&h.at(0.0));
        assert!((peak - h.norm_bound()).abs() < 1e-12);
        for k in 0..50 {
            h.checked_at(0.1 * k as f64).unwrap();
        }
    }

    #[test]
    fn piecewise_interpolates() {
        let a = CMatrix::from_diagonal_element(2, 2, c(1.0, 0.0));
        let b = CMatrix::from_diagonal_element(2, 2, c(3.0, 0.0));
        let h = HamiltonianSpec::piecewise(vec![0.0, 2.0], vec![a, b]).unwrap();
        assert!((h.at(1.0)[(0, 0)].re - 2.0).abs() < 1e-15);
        assert!((h.at(5.0)[(1, 1)].re - 3.0).abs() < 1e-15);
        assert_eq!(h.norm_bound(), 3.0);
    }

    #[test]
    fn declared_bound_below_norm_rejected() {
        let h = HamiltonianSpec::constant(CMatrix::from_diagonal_element(2, 2, c(2.0, 0.0))).unwrap();
        assert!(h.clone().with_norm_bound(1.0).is_err());
        assert_eq!(h.with_norm_bound(4.0).unwrap().norm_bound(), 4.0);
    }
}
