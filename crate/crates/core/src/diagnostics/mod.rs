//! Bound checks: measured functionals against the shapes they are bounded by.

mod lemmas;
mod necessary;
mod sufficiency;

use std::io::Write;

use serde::Serialize;

use crate::error::Result;
use crate::special::regression_slope;

pub use lemmas::{lemma21_check, lemma22_check, lemma23_check, lemma23_log_integral, Lemma23};
pub use necessary::{default_sigma_grid, necessary_condition_check, perturbed_profile};
pub use sufficiency::{default_t_grid, sufficiency_hypothesis_check, SufficiencyExtras};

/// Trend slopes above this count as growth of the ratio.
pub const SLOPE_TOL: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Verdict {
    #[serde(rename = "bounded")]
    Bounded,
    #[serde(rename = "unbounded-trend")]
    UnboundedTrend,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Component {
    pub name: String,
    pub values: Vec<f64>,
}

/// Measured values of a functional on a parameter grid, divided by the shape
/// of its bound.
///
/// `fitted_C` is the largest ratio. `slope` is the least-squares slope of
/// `ln ratio` against `ln(1/parameter)` over the smaller half of the grid, so
/// a ratio that grows as the parameter shrinks has positive slope.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundCheckReport {
    pub functional: String,
    pub parameter: String,
    pub grid: Vec<f64>,
    pub measured: Vec<f64>,
    pub bound: Vec<f64>,
    pub ratio: Vec<f64>,
    pub components: Vec<Component>,
    #[serde(rename = "fitted_C")]
    pub fitted_constant: f64,
    pub slope: f64,
    pub slope_tol: f64,
    pub verdict: Verdict,
    /// Growth rate when the functional is infinite on the grid.
    pub divergence_rate: Option<f64>,
    pub notes: Vec<String>,
}

impl BoundCheckReport {
    /// Assemble a report; `grid` must be increasing.
    pub fn new(
        functional: impl Into<String>,
        parameter: impl Into<String>,
        grid: Vec<f64>,
        measured: Vec<f64>,
        bound: Vec<f64>,
        components: Vec<Component>,
    ) -> Self {
        let ratio: Vec<f64> = measured
            .iter()
            .zip(&bound)
            .map(|(&m, &b)| if m == 0.0 { 0.0 } else { m / b })
            .collect();
        let fitted = ratio.iter().cloned().fold(0.0, f64::max);
        let slope = trend_slope(&grid, &ratio);
        let verdict = if slope > SLOPE_TOL || ratio.iter().any(|r| r.is_infinite()) {
            Verdict::UnboundedTrend
        } else {
            Verdict::Bounded
        };
        BoundCheckReport {
            functional: functional.into(),
            parameter: parameter.into(),
            grid,
            measured,
            bound,
            ratio,
            components,
            fitted_constant: fitted,
            slope,
            slope_tol: SLOPE_TOL,
            verdict,
            divergence_rate: None,
            notes: Vec::new(),
        }
    }

    /// A functional that is infinite at every grid point, growing at `rate`
    /// (in `ln` per unit of `ln(1/parameter)`) as it is truncated closer to the singularity.
    pub fn divergent(
        functional: impl Into<String>,
        parameter: impl Into<String>,
        grid: Vec<f64>,
        bound: Vec<f64>,
        rate: f64,
        note: impl Into<String>,
    ) -> Self {
        let n = grid.len();
        let mut r = BoundCheckReport::new(
            functional,
            parameter,
            grid,
            vec![f64::INFINITY; n],
            bound,
            Vec::new(),
        );
        r.slope = rate;
        r.fitted_constant = f64::INFINITY;
        r.verdict = Verdict::UnboundedTrend;
        r.divergence_rate = Some(rate);
        r.notes.push(note.into());
        r
    }

    pub fn is_bounded(&self) -> bool {
        self.verdict == Verdict::Bounded
    }

    pub fn write_json(&self, w: impl Write) -> Result<()> {
        serde_json::to_writer_pretty(w, self).map_err(|e| crate::Error::Io(e.into()))
    }

    /// One row per grid point: parameter, measured, bound, ratio, then components.
    pub fn write_csv(&self, mut w: impl Write) -> Result<()> {
        let mut header = vec![
            self.parameter.clone(),
            "measured".into(),
            "bound".into(),
            "ratio".into(),
        ];
        header.extend(self.components.iter().map(|c| c.name.clone()));
        writeln!(w, "{}", header.join(","))?;
        for i in 0..self.grid.len() {
            let mut row = vec![
                format!("{:e}", self.grid[i]),
                format!("{:e}", self.measured[i]),
                format!("{:e}", self.bound[i]),
                format!("{:e}", self.ratio[i]),
            ];
            row.extend(self.components.iter().map(|c| format!("{:e}", c.values[i])));
            writeln!(w, "{}", row.join(","))?;
        }
        Ok(())
    }
}

/// Slope of `ln ratio` against `ln(1/x)` over the smaller half of the grid.
fn trend_slope(grid: &[f64], ratio: &[f64]) -> f64 {
    let half = grid.len().div_ceil(2).max(2).min(grid.len());
    let (xs, ys): (Vec<f64>, Vec<f64>) = grid[..half]
        .iter()
        .zip(&ratio[..half])
        .filter(|(_, r)| **r > 0.0 && r.is_finite())
        .map(|(g, r)| (-g.ln(), r.ln()))
        .unzip();
    if xs.len() < 2 {
        return 0.0;
    }
    regression_slope(&xs, &ys)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn slope_orientation() {
        let grid = crate::special::logspace(1e-4, 1.0, 9);
        // ratio ~ x^{-0.5} grows as x shrinks
        let measured: Vec<f64> = grid.iter().map(|x| x.powf(-0.5)).collect();
        let r = BoundCheckReport::new("t", "sigma", grid.clone(), measured, vec![1.0; 9], vec![]);
        assert!((r.slope - 0.5).abs() < 1e-12);
        assert_eq!(r.verdict, Verdict::UnboundedTrend);
        let flat = BoundCheckReport::new("t", "sigma", grid, vec![2.0; 9], vec![4.0; 9], vec![]);
        assert_eq!(flat.verdict, Verdict::Bounded);
        assert_eq!(flat.fitted_constant, 0.5);
    }

    #[test]
    fn csv_has_one_row_per_point() {
        let grid = vec![0.1, 0.2];
        let r = BoundCheckReport::new(
            "x",
            "t",
            grid,
            vec![1.0, 2.0],
            vec![1.0, 1.0],
            vec![Component {
                name: "c".into(),
                values: vec![3.0, 4.0],
            }],
        );
        let mut buf = Vec::new();
        r.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 3);
        assert!(text.starts_with("t,measured,bound,ratio,c"));
    }
}
