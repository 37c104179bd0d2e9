use rand::Rng;
use rand_distr::{Binomial, Distribution};

use crate::dynamics::QuantumState;
use crate::error::{Error, Result};
use crate::linalg::{hermitian_norm, sandwich, CMatrix, C64};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Part {
    Re,
    Im,
}

fn part_of(z: C64, part: Part) -> f64 {
    match part {
        Part::Re => z.re,
        Part::Im => z.im,
    }
}

/// Probability of the `+1` outcome, `(1 + v)/2`.
pub fn shot_probability(state: &QuantumState, observable: &CMatrix, part: Part) -> f64 {
    let v = part_of(sandwich(state.amplitudes(), observable), part);
    ((1.0 + v) / 2.0).clamp(0.0, 1.0)
}

fn check_norm(observable: &CMatrix) -> Result<()> {
    let norm = if crate::linalg::hermitian_deviation(observable) <= crate::dynamics::HERMITIAN_TOL {
        hermitian_norm(observable)
    } else {
        crate::linalg::spectral_norm(observable)
    };
    if norm > 1.0 + 1e-12 {
        return Err(Error::ObservableNorm(norm));
    }
    Ok(())
}

/// One Hadamard-test outcome in `{+1, −1}` with mean `Re⟨ψ|O|ψ⟩` or
/// `Im⟨ψ|O|ψ⟩`.
pub fn hadamard_shot<R: Rng + ?Sized>(
    state: &QuantumState,
    observable: &CMatrix,
    part: Part,
    rng: &mut R,
) -> Result<i8> {
    check_norm(observable)?;
    let p = shot_probability(state, observable, part);
    Ok(if rng.random::<f64>() < p { 1 } else { -1 })
}

/// Mean of `shots` outcomes drawn with success probability `p`.
pub fn shot_mean<R: Rng + ?Sized>(p: f64, shots: u64, rng: &mut R) -> f64 {
    if shots == 0 {
        return 0.0;
    }
    let plus = Binomial::new(shots, p.clamp(0.0, 1.0))
        .expect("probability clamped to [0, 1]")
        .sample(rng);
    (2.0 * plus as f64 - shots as f64) / shots as f64
}

/// Mean of `shots` Hadamard-test outcomes.
pub fn hadamard_mean<R: Rng + ?Sized>(
    state: &QuantumState,
    observable: &CMatrix,
    part: Part,
    shots: u64,
    rng: &mut R,
) -> Result<f64> {
    check_norm(observable)?;
    Ok(shot_mean(shot_probability(state, observable, part), shots, rng))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::estimators::rng::node_rng;
    use crate::linalg::c;

    fn proj0() -> CMatrix {
        CMatrix::from_row_slice(2, 2, &[c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)])
    }

    #[test]
    fn identity_always_plus_one() {
        let mut rng = node_rng(1, 0);
        let psi = QuantumState::from_real(&[0.3, 0.4, 0.5]).unwrap();
        let id = CMatrix::identity(3, 3);
        for _ in 0..1000 {
            assert_eq!(hadamard_shot(&psi, &id, Part::Re, &mut rng).unwrap(), 1);
        }
    }

    #[test]
    fn projector_on_plus_state() {
        let mut rng = node_rng(2, 0);
        let psi = QuantumState::from_real(&[1.0, 1.0]).unwrap();
        assert!((shot_probability(&psi, &proj0(), Part::Re) - 0.75).abs() < 1e-15);
        let n = 40_000;
        let mean: f64 = (0..n)
            .map(|_| hadamard_shot(&psi, &proj0(), Part::Re, &mut rng).unwrap() as f64)
            .sum::<f64>()
            / n as f64;
        assert!((mean - 0.5).abs() < 4.0 / (n as f64).sqrt());
    }

    #[test]
    fn imaginary_part_of_hermitian_is_zero_mean() {
        let mut rng = node_rng(3, 0);
        let psi = QuantumState::new(crate::linalg::CVector::from_vec(vec![c(0.6, 0.1), c(-0.2, 0.7)])).unwrap();
        let o = CMatrix::from_row_slice(2, 2, &[c(0.2, 0.0), c(0.3, -0.4), c(0.3, 0.4), c(-0.5, 0.0)]);
        let n = 100_000;
        let mean = hadamard_mean(&psi, &o, Part::Im, n, &mut rng).unwrap();
        assert!(mean.abs() < 4.0 / (n as f64).sqrt());
    }

    #[test]
    fn oversized_observable_rejected() {
        let mut rng = node_rng(4, 0);
        let psi = QuantumState::basis(2, 0).unwrap();
        let o = proj0() * c(2.0, 0.0);
        assert!(matches!(
            hadamard_shot(&psi, &o, Part::Re, &mut rng),
            Err(Error::ObservableNorm(_))
        ));
    }

    #[test]
    fn chi_square_goodness_of_fit() {
        // Binomial count of +1 outcomes vs exact Bernoulli parameter for 10
        // random (ψ, O) pairs; χ² with one degree of freedom at 1e-3 is 10.83.
        use rand::Rng;
        let mut gen = node_rng(5, 99);
        for trial in 0..10 {
            let amps: Vec<_> = (0..3)
                .map(|_| c(gen.random_range(-1.0..1.0), gen.random_range(-1.0..1.0)))
                .collect();
            let psi = QuantumState::new(crate::linalg::CVector::from_vec(amps)).unwrap();
            let mut o = CMatrix::zeros(3, 3);
            for i in 0..3 {
                for j in 0..=i {
                    let z = if i == j {
                        c(gen.random_range(-1.0..1.0), 0.0)
                    } else {
                        c(gen.random_range(-1.0..1.0), gen.random_range(-1.0..1.0))
                    };
                    o[(i, j)] = z;
                    o[(j, i)] = z.conj();
                }
            }
            let o = &o / c(hermitian_norm(&o), 0.0);
            let p = shot_probability(&psi, &o, Part::Re);
            let n = 100_000u64;
            let mut rng = node_rng(6, trial);
            let plus = (0..n)
                .filter(|_| hadamard_shot(&psi, &o, Part::Re, &mut rng).unwrap() == 1)
                .count() as f64;
            let nf = n as f64;
            let chi2 = (plus - nf * p).powi(2) / (nf * p) + ((nf - plus) - nf * (1.0 - p)).powi(2) / (nf * (1.0 - p));
            assert!(chi2 < 10.83, "trial {trial}: χ² = {chi2}");
        }
    }
}
