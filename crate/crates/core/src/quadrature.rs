//! Composite Clenshaw–Curtis quadrature on `[0, T]`.

use std::f64::consts::PI;
use std::io::Write;

use crate::error::{invalid, Error, Result};

/// Nodes `cos(kπ/M)` (descending from 1 to −1) and weights on `[−1, 1]`.
pub fn cc_single(m: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    if m < 2 || !m.is_multiple_of(2) {
        return invalid(format!("Clenshaw–Curtis order must be even and ≥ 2, got {m}"));
    }
    let mf = m as f64;
    let half = m / 2;
    let mut nodes = Vec::with_capacity(m + 1);
    let mut weights = Vec::with_capacity(m + 1);
    for k in 0..=m {
        nodes.push((k as f64 * PI / mf).cos());
        let ck = if k == 0 || k == m { 1.0 } else { 2.0 };
        let mut sum = 0.0;
        for l in 0..=half {
            let bl = if l == 0 || l == half { 1.0 } else { 2.0 };
            let t2l = ((2 * l * k) as f64 * PI / mf).cos();
            sum += bl * t2l / (1.0 - 4.0 * (l * l) as f64);
        }
        weights.push(ck * sum / mf);
    }
    Ok((nodes, weights))
}

/// Per-segment bound `36(M+1)/M²` on `Σω²` for the rule on `[−1, 1]`.
pub fn single_segment_bound(m: usize) -> f64 {
    let mf = m as f64;
    36.0 * (mf + 1.0) / (mf * mf)
}

/// `M = 2⌈c·log₂(1/ε)⌉`, at least 2.
pub fn points_for(eps: f64, c: f64) -> usize {
    let m = 2 * (c * (1.0 / eps).log2()).ceil().max(1.0) as usize;
    m.max(2)
}

/// Flat rule on `[0, T]` with shared segment endpoints merged.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
    pub segments: usize,
    pub points_per_segment: usize,
    pub segment_length: f64,
    pub horizon: f64,
}

impl QuadratureRule {
    /// `I = ⌈T⌉` segments with `M = 2⌈log₂(1/ε)⌉` points each.
    pub fn composite(horizon: f64, eps: f64) -> Result<Self> {
        Self::composite_with(horizon, eps, 1.0)
    }

    pub fn composite_with(horizon: f64, eps: f64, c: f64) -> Result<Self> {
        if !(eps > 0.0 && eps < 1.0) {
            return invalid(format!("eps must lie in (0, 1), got {eps}"));
        }
        if !(c > 0.0 && c.is_finite()) {
            return invalid("node-count constant must be positive");
        }
        Self::with_points(horizon, points_for(eps, c))
    }

    /// Composite rule with an explicit per-segment order `M`.
    pub fn with_points(horizon: f64, m: usize) -> Result<Self> {
        if !(horizon > 0.0 && horizon.is_finite()) {
            return invalid(format!("horizon must be positive, got {horizon}"));
        }
        let (x, w) = cc_single(m)?;
        let segments = horizon.ceil() as usize;
        let dt = horizon / segments as f64;
        let half = 0.5 * dt;
        let mut nodes = Vec::with_capacity(segments * m + 1);
        let mut weights = Vec::with_capacity(segments * m + 1);
        for s in 0..segments {
            let a = s as f64 * dt;
            // Walk the Chebyshev points from −1 upwards so nodes increase in time.
            for k in (0..=m).rev() {
                let t = if s == segments - 1 && k == 0 {
                    horizon
                } else {
                    a + (x[k] + 1.0) * half
                };
                let wk = w[k] * half;
                if s > 0 && k == m {
                    *weights.last_mut().expect("previous segment present") += wk;
                } else {
                    nodes.push(t);
                    weights.push(wk);
                }
            }
        }
        Ok(Self {
            nodes,
            weights,
            segments,
            points_per_segment: m,
            segment_length: dt,
            horizon,
        })
    }

    /// Number of distinct nodes `I·M + 1`.
    pub fn n_t(&self) -> usize {
        self.nodes.len()
    }

    pub fn apply(&self, samples: &[f64]) -> Result<f64> {
        if samples.len() != self.weights.len() {
            return Err(Error::LengthMismatch {
                expected: self.weights.len(),
                got: samples.len(),
            });
        }
        Ok(self.weights.iter().zip(samples).map(|(w, f)| w * f).sum())
    }

    pub fn integrate<F: Fn(f64) -> f64>(&self, f: F) -> f64 {
        self.nodes.iter().zip(&self.weights).map(|(&t, w)| w * f(t)).sum()
    }

    pub fn weight_sq_norm(&self) -> f64 {
        self.weights.iter().map(|w| w * w).sum()
    }

    pub fn max_weight(&self) -> f64 {
        self.weights.iter().copied().fold(0.0, f64::max)
    }

    /// `9(M+1)Δt²·I/M²`, the single-segment bound mapped to `[0, T]`.
    pub fn weight_sq_bound(&self) -> f64 {
        let h = 0.5 * self.segment_length;
        single_segment_bound(self.points_per_segment) * h * h * self.segments as f64
    }

    /// Writes `node,weight` rows.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "node,weight")?;
        for (t, w) in self.nodes.iter().zip(&self.weights) {
            writeln!(out, "{t:.17e},{w:.17e}")?;
        }
        Ok(())
    }
}
