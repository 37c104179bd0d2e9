use std::f64::consts::PI;

use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{invalid, Result};

/// Grid size, failure probability and median count for canonical amplitude
/// estimation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AeConfig {
    pub r: u64,
    pub eta: f64,
    pub reps: u64,
}

impl AeConfig {
    /// `reps = ⌈18 ln(2/η)⌉`.
    pub fn new(r: u64, eta: f64) -> Result<Self> {
        if !(eta > 0.0 && eta < 1.0) {
            return invalid(format!("failure probability must lie in (0, 1), got {eta}"));
        }
        Self::with_reps(r, eta, median_reps(eta))
    }

    pub fn with_reps(r: u64, eta: f64, reps: u64) -> Result<Self> {
        if r < 2 {
            return invalid(format!("amplitude estimation grid must be ≥ 2, got {r}"));
        }
        if reps == 0 {
            return invalid("at least one repetition is required");
        }
        Ok(Self { r, eta, reps })
    }

    /// Reflection uses per estimate, `r·reps`.
    pub fn depth(&self) -> u64 {
        self.r * self.reps
    }
}

pub fn median_reps(eta: f64) -> u64 {
    (18.0 * (2.0 / eta).ln()).ceil().max(1.0) as u64
}

/// Single-draw error bound `2π√(a(1−a))/r + π²/r²`.
pub fn ae_error_bound(a: f64, r: u64) -> f64 {
    let rf = r as f64;
    2.0 * PI * (a * (1.0 - a)).max(0.0).sqrt() / rf + PI * PI / (rf * rf)
}

/// Smallest `r ≥ 2` whose worst-case bound `π/r + π²/r²` is at most `prec`.
pub fn r_for_precision(prec: f64) -> Result<u64> {
    if !(prec > 0.0 && prec.is_finite()) {
        return invalid(format!("precision must be positive, got {prec}"));
    }
    let x = (-1.0 + (1.0 + 4.0 * prec).sqrt()) / 2.0;
    let mut r = ((PI / x).ceil() as u64).max(2);
    while r > 2 && ae_error_bound(0.5, r - 1) <= prec {
        r -= 1;
    }
    while ae_error_bound(0.5, r) > prec {
        r += 1;
    }
    Ok(r)
}

/// Probability of phase-estimation outcome `m` on grid `r` for `θ = arcsin√a`.
pub fn outcome_probability(a: f64, r: u64, m: u64) -> f64 {
    let theta = a.clamp(0.0, 1.0).sqrt().asin();
    let rf = r as f64;
    let delta = theta / PI - m as f64 / rf;
    let s = (delta * PI).sin();
    if s.abs() < 1e-15 {
        return 1.0;
    }
    let num = (rf * delta * PI).sin();
    (num * num) / (rf * rf * s * s)
}

/// One canonical amplitude-estimation outcome `sin²(πm/r)`.
///
/// Inverse-CDF sampling that visits outcomes in order of distance from the
/// peak `⌊θr/π⌋`, so the expected work is logarithmic in `r`.
pub fn ae_sample<R: Rng + ?Sized>(a: f64, r: u64, rng: &mut R) -> f64 {
    let m = ae_outcome(a, r, rng);
    (PI * m as f64 / r as f64).sin().powi(2)
}

/// Raw phase-estimation outcome `m ∈ [0, r)`.
pub fn ae_outcome<R: Rng + ?Sized>(a: f64, r: u64, rng: &mut R) -> u64 {
    let theta = a.clamp(0.0, 1.0).sqrt().asin();
    let peak = ((theta * r as f64 / PI).floor() as u64) % r;
    let u: f64 = rng.random();
    let mut acc = 0.0;
    let mut last = peak;
    for d in 0..r {
        // offsets 0, +1, −1, +2, −2, …
        let offset = if d % 2 == 1 { d.div_ceil(2) } else { r - d / 2 };
        let m = (peak + offset) % r;
        acc += outcome_probability(a, r, m);
        last = m;
        if u < acc {
            return m;
        }
    }
    last
}

fn median(values: &mut [f64]) -> f64 {
    values.sort_by(|a, b| a.total_cmp(b));
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}

/// Median of `cfg.reps` independent draws.
pub fn ae_estimate<R: Rng + ?Sized>(a: f64, cfg: &AeConfig, rng: &mut R) -> f64 {
    let mut draws: Vec<f64> = (0..cfg.reps).map(|_| ae_sample(a, cfg.r, rng)).collect();
    median(&mut draws)
}

/// Contract-level unbiased estimator: output `p + B + ξ` with a per-run bias
/// `B ~ U[−η, η]` and Gaussian `ξ` of variance `91p/r²`, clamped to `[−2π, 2π]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UnbiasedAe {
    pub r: u64,
    pub eta: f64,
    pub bias: f64,
}

impl UnbiasedAe {
    pub fn new<R: Rng + ?Sized>(r: u64, eta: f64, rng: &mut R) -> Result<Self> {
        if r < 2 {
            return invalid(format!("grid parameter must be ≥ 2, got {r}"));
        }
        if !(eta > 0.0 && eta < 1.0) {
            return invalid(format!("bias bound must lie in (0, 1), got {eta}"));
        }
        let bias = rng.random_range(-eta..=eta);
        Ok(Self { r, eta, bias })
    }

    pub fn sample<R: Rng + ?Sized>(&self, p: f64, rng: &mut R) -> f64 {
        let p = p.clamp(0.0, 1.0);
        let sd = (91.0 * p).sqrt() / self.r as f64;
        let noise = if sd > 0.0 {
            Normal::new(0.0, sd).expect("finite positive deviation").sample(rng)
        } else {
            0.0
        };
        (p + self.bias + noise).clamp(-2.0 * PI, 2.0 * PI)
    }

    /// `r·max(1, ⌈ln ln r⌉)·⌈ln(r/η)⌉` reflection uses per sample.
    pub fn depth(&self) -> u64 {
        unbiased_depth(self.r, self.eta)
    }
}

pub fn unbiased_depth(r: u64, eta: f64) -> u64 {
    let rf = r as f64;
    let loglog = (rf.ln().ln().ceil()).max(1.0) as u64;
    let log = ((rf / eta).ln().ceil()).max(1.0) as u64;
    r * loglog * log
}

/// One draw with a freshly sampled run bias.
pub fn unbiased_ae_sample<R: Rng + ?Sized>(p: f64, r: u64, eta: f64, rng: &mut R) -> Result<f64> {
    Ok(UnbiasedAe::new(r, eta, rng)?.sample(p, rng))
}
