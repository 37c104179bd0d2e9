//! Log–log slope fits of query counts.

use std::io::Write;

use anyhow::bail;
use serde::Serialize;

use crate::runner::{run_points, Row, SweepConfig};

/// Fits with `r²` below this are flagged as degenerate.
pub const MIN_R_SQUARED: f64 = 0.9;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SlopeFit {
    pub x_name: String,
    pub y_name: String,
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub points: Vec<(f64, f64)>,
}

impl SlopeFit {
    /// Least squares of `log10 y` on `log10 x`.
    pub fn fit(x_name: &str, y_name: &str, points: Vec<(f64, f64)>) -> anyhow::Result<Self> {
        if points.len() < 2 {
            bail!("need at least two points to fit {y_name} against {x_name}");
        }
        if points.iter().any(|&(x, y)| !(x > 0.0 && y > 0.0)) {
            bail!("log–log fit needs positive data");
        }
        let lx: Vec<f64> = points.iter().map(|p| p.0.log10()).collect();
        let ly: Vec<f64> = points.iter().map(|p| p.1.log10()).collect();
        let n = lx.len() as f64;
        let mx = lx.iter().sum::<f64>() / n;
        let my = ly.iter().sum::<f64>() / n;
        let sxx: f64 = lx.iter().map(|x| (x - mx).powi(2)).sum();
        if sxx == 0.0 {
            bail!("all {x_name} values coincide");
        }
        let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
        let syy: f64 = ly.iter().map(|y| (y - my).powi(2)).sum();
        let slope = sxy / sxx;
        let r_squared = if syy == 0.0 {
            1.0
        } else {
            (sxy * sxy / (sxx * syy)).clamp(0.0, 1.0)
        };
        Ok(Self {
            x_name: x_name.into(),
            y_name: y_name.into(),
            slope,
            intercept: my - slope * mx,
            r_squared,
            points,
        })
    }

    pub fn degenerate(&self) -> bool {
        self.r_squared < MIN_R_SQUARED
    }

    pub fn within(&self, target: f64, tol: f64) -> bool {
        (self.slope - target).abs() <= tol && !self.degenerate()
    }
}

/// Mean of `h_queries` per distinct x value, in input order.
pub fn mean_queries(rows: &[Row], x: impl Fn(&Row) -> f64) -> Vec<(f64, f64)> {
    let mut out: Vec<(f64, f64, usize)> = Vec::new();
    for r in rows {
        let key = x(r);
        match out.iter_mut().find(|p| p.0 == key) {
            Some(p) => {
                p.1 += r.h_queries as f64;
                p.2 += 1;
            }
            None => out.push((key, r.h_queries as f64, 1)),
        }
    }
    out.into_iter().map(|(x, s, n)| (x, s / n as f64)).collect()
}

/// The two fits of one sweep, with the rows behind them.
#[derive(Debug, Clone)]
pub struct SweepFits {
    pub vs_t: SlopeFit,
    pub vs_eps: SlopeFit,
    pub rows: Vec<Row>,
}

/// Fits mean `h_queries` against `T` at `fit_eps` and against `eps` at `fit_t`.
pub fn sweep_and_fit(cfg: &SweepConfig) -> anyhow::Result<SweepFits> {
    if cfg.t_values.len() < 4 || cfg.eps_values.len() < 4 {
        bail!("slope fits need at least 4 T values and 4 eps values");
    }
    let t_points: Vec<_> = cfg.t_values.iter().map(|&t| (t, cfg.fit_eps)).collect();
    let e_points: Vec<_> = cfg.eps_values.iter().map(|&e| (cfg.fit_t, e)).collect();
    let t_rows = run_points(cfg, &t_points)?;
    let e_rows = run_points(cfg, &e_points)?;
    let vs_t = SlopeFit::fit("T", "h_queries", mean_queries(&t_rows, |r| r.horizon))?;
    let vs_eps = SlopeFit::fit("eps", "h_queries", mean_queries(&e_rows, |r| r.eps))?;
    let mut rows = t_rows;
    rows.extend(e_rows);
    Ok(SweepFits { vs_t, vs_eps, rows })
}

pub fn write_fit_table<W: Write>(fits: &[(&str, &SlopeFit)], out: W) -> anyhow::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["pipeline", "x", "y", "slope", "intercept", "r_squared", "flag"])?;
    for (pipeline, f) in fits {
        w.write_record([
            pipeline.to_string(),
            f.x_name.clone(),
            f.y_name.clone(),
            format!("{:.4}", f.slope),
            format!("{:.4}", f.intercept),
            format!("{:.4}", f.r_squared),
            if f.degenerate() {
                "degenerate".into()
            } else {
                String::new()
            },
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Python script that plots a sweep CSV on log–log axes.
pub fn plot_script(csv_path: &str) -> String {
    format!(
        r#"import csv
import collections
import matplotlib.pyplot as plt

rows = list(csv.DictReader(open({csv_path:?})))
fig, axes = plt.subplots(1, 2, figsize=(10, 4))
for ax, key, other in ((axes[0], "T", "eps"), (axes[1], "eps", "T")):
    groups = collections.defaultdict(list)
    for r in rows:
        groups[(r["pipeline"], r[other])].append((float(r[key]), float(r["h_queries"])))
    for (pipeline, fixed), pts in sorted(groups.items()):
        if len({{x for x, _ in pts}}) < 2:
            continue
        means = collections.defaultdict(list)
        for x, y in pts:
            means[x].append(y)
        xs = sorted(means)
        ax.loglog(xs, [sum(means[x]) / len(means[x]) for x in xs], "o-", label=f"{{pipeline}} ({{other}}={{fixed}})")
    ax.set_xlabel(key)
    ax.set_ylabel("h_queries")
    ax.legend(fontsize=7)
fig.tight_layout()
fig.savefig({png:?})
"#,
        png = format!("{}.png", csv_path.trim_end_matches(".csv"))
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn exact_power_law() {
        let pts = (1..6).map(|k| (k as f64, 3.0 * (k as f64).powf(2.5))).collect();
        let f = SlopeFit::fit("T", "y", pts).unwrap();
        assert!((f.slope - 2.5).abs() < 1e-12);
        assert!((f.intercept - 3f64.log10()).abs() < 1e-12);
        assert!((f.r_squared - 1.0).abs() < 1e-12);
    }

    #[test]
    fn noisy_data_is_flagged() {
        let pts = vec![(1.0, 5.0), (2.0, 1.0), (4.0, 6.0), (8.0, 1.5)];
        assert!(SlopeFit::fit("T", "y", pts).unwrap().degenerate());
    }

    #[test]
    fn rejects_nonpositive() {
        assert!(SlopeFit::fit("T", "y", vec![(1.0, 0.0), (2.0, 1.0)]).is_err());
        assert!(SlopeFit::fit("T", "y", vec![(1.0, 1.0), (1.0, 2.0)]).is_err());
    }

    #[test]
    fn plot_script_names_csv() {
        let s = plot_script("out/sweep.csv");
        assert!(s.contains("\"out/sweep.csv\""));
        assert!(s.contains("\"out/sweep.png\""));
    }

    proptest! {
        #[test]
        fn r_squared_in_unit_interval(ys in prop::collection::vec(0.01f64..100.0, 4..10)) {
            let pts = ys.iter().enumerate().map(|(k, &y)| ((k + 1) as f64, y)).collect();
            let f = SlopeFit::fit("x", "y", pts).unwrap();
            prop_assert!((0.0..=1.0).contains(&f.r_squared));
        }

        #[test]
        fn slope_invariant_under_scaling(c in 0.1f64..10.0, p in -3.0f64..3.0) {
            let pts: Vec<_> = (1..5).map(|k| (k as f64, c * (k as f64).powf(p))).collect();
            let f = SlopeFit::fit("x", "y", pts).unwrap();
            prop_assert!((f.slope - p).abs() < 1e-9);
        }
    }
}
