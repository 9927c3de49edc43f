//! Graded time nodes and product-quadrature weights for Duhamel integrals.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum DuhamelRule {
    /// Piecewise-constant source, value taken at the left node of each gap.
    LeftEndpoint,
    /// Composite Simpson on node pairs (four-point rule for a trailing odd
    /// panel); panels with a negative weight fall back to the trapezoid rule.
    #[default]
    Simpson,
}

/// Nodes `0 < τ_0 < … < τ_{n-1} = t_end` whose gaps grow geometrically away
/// from both ends of the interval.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TimeGrid {
    pub t_end: f64,
    pub ratio: f64,
    pub nodes: Vec<f64>,
    /// Left-endpoint weights for `∫_0^{t_end}`; they sum to `t_end`.
    pub weights: Vec<f64>,
}

impl TimeGrid {
    pub fn new(t_end: f64, count: usize, ratio: f64) -> Result<Self> {
        if !(t_end.is_finite() && t_end > 0.0) {
            return Err(Error::InvalidParams(format!(
                "end time must be positive, got {t_end}"
            )));
        }
        if count < 2 {
            return Err(Error::InvalidParams(format!(
                "need at least two time nodes, got {count}"
            )));
        }
        if !(ratio > 1.0 && ratio <= 2.0) {
            return Err(Error::InvalidParams(format!(
                "grading ratio must lie in (1, 2], got {ratio}"
            )));
        }
        let gaps: Vec<f64> = (0..count)
            .map(|k| ratio.powi(k.min(count - 1 - k) as i32))
            .collect();
        let total: f64 = gaps.iter().sum();
        // accumulate the first half from 0 and the second from t_end so the
        // small gaps at both ends survive rounding
        let mut nodes = vec![0.0; count];
        let mut acc = 0.0;
        for k in 0..count / 2 {
            acc += gaps[k] / total * t_end;
            nodes[k] = acc;
        }
        let mut back = 0.0;
        for k in (count / 2..count).rev() {
            nodes[k] = t_end - back;
            back += gaps[k] / total * t_end;
        }
        if !(nodes[0] > 0.0 && nodes.windows(2).all(|w| w[1] > w[0])) {
            return Err(Error::InvalidParams(format!(
                "{count} nodes graded by {ratio} are too fine to represent on [0, {t_end}]"
            )));
        }
        let mut weights = vec![0.0; count];
        weights[0] = nodes[1];
        for j in 1..count - 1 {
            weights[j] = nodes[j + 1] - nodes[j];
        }
        Ok(TimeGrid {
            t_end,
            ratio,
            nodes,
            weights,
        })
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Indices of `count` log-spaced times in `(0, t_end]`, snapped to distinct nodes.
    pub fn checkpoints(&self, count: usize) -> Vec<usize> {
        let lo = (self.t_end / 64.0).max(self.nodes[0]);
        let mut out: Vec<usize> = Vec::new();
        for t in crate::special::logspace(lo, self.t_end, count) {
            let i = self
                .nodes
                .iter()
                .enumerate()
                .min_by(|a, b| (a.1 - t).abs().total_cmp(&(b.1 - t).abs()))
                .map(|(i, _)| i)
                .unwrap_or(0);
            if !out.contains(&i) {
                out.push(i);
            }
        }
        out.sort_unstable();
        out
    }

    /// Weights `W[i][j]`, `j ≤ i`, with `Σ_j W[i][j] g(τ_j) ≈ ∫_0^{τ_i} g(s) ds`.
    /// The first gap `[0, τ_0]` uses the value at `τ_0`.
    pub fn duhamel_weights(&self, rule: DuhamelRule) -> Vec<Vec<f64>> {
        let n = self.len();
        let x = &self.nodes;
        (0..n)
            .map(|i| {
                let mut w = vec![0.0; i + 1];
                w[0] += x[0];
                match rule {
                    DuhamelRule::LeftEndpoint => {
                        for j in 0..i {
                            w[j] += x[j + 1] - x[j];
                        }
                    }
                    DuhamelRule::Simpson => {
                        let intervals = i;
                        let mut j = 0;
                        let four_point_tail = intervals >= 3 && intervals % 2 == 1;
                        let pair_end = if four_point_tail {
                            intervals - 3
                        } else {
                            intervals - intervals % 2
                        };
                        while j + 2 <= pair_end {
                            add_panel(&mut w, x, j, 3);
                            j += 2;
                        }
                        if four_point_tail {
                            add_panel(&mut w, x, j, 4);
                        } else if intervals % 2 == 1 {
                            add_panel(&mut w, x, j, 2);
                        }
                    }
                }
                w
            })
            .collect()
    }
}

/// Add interpolatory weights over nodes `x[j..j+k]` for `∫_{x_j}^{x_{j+k-1}}`,
/// falling back to the trapezoid rule when any weight is negative.
fn add_panel(w: &mut [f64], x: &[f64], j: usize, k: usize) {
    let pts = &x[j..j + k];
    let panel = interpolatory_weights(pts);
    if panel.iter().all(|&v| v >= 0.0) {
        for (m, v) in panel.iter().enumerate() {
            w[j + m] += v;
        }
    } else {
        for m in 0..k - 1 {
            let g = pts[m + 1] - pts[m];
            w[j + m] += g / 2.0;
            w[j + m + 1] += g / 2.0;
        }
    }
}

/// Weights of the polynomial interpolation rule through `pts` on `[pts_0, pts_last]`.
pub fn interpolatory_weights(pts: &[f64]) -> Vec<f64> {
    let k = pts.len();
    let a = pts[0];
    let len = pts[k - 1] - a;
    // scaled abscissae in [0, 1]; moments ∫_0^1 y^m dy = 1/(m+1)
    let y: Vec<f64> = pts.iter().map(|p| (p - a) / len).collect();
    let mut mat = vec![vec![0.0; k + 1]; k];
    for (m, row) in mat.iter_mut().enumerate() {
        for c in 0..k {
            row[c] = y[c].powi(m as i32);
        }
        row[k] = 1.0 / (m as f64 + 1.0);
    }
    // Gaussian elimination with partial pivoting
    for col in 0..k {
        let piv = (col..k)
            .max_by(|&r1, &r2| mat[r1][col].abs().total_cmp(&mat[r2][col].abs()))
            .unwrap();
        mat.swap(col, piv);
        for r in 0..k {
            if r != col {
                let f = mat[r][col] / mat[col][col];
                for c in col..=k {
                    mat[r][c] -= f * mat[col][c];
                }
            }
        }
    }
    (0..k).map(|r| mat[r][k] / mat[r][r] * len).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_invariants() {
        let g = TimeGrid::new(0.7, 64, 1.15).unwrap();
        assert!(g.nodes[0] > 0.0);
        assert_eq!(*g.nodes.last().unwrap(), 0.7);
        assert!(g.nodes.windows(2).all(|w| w[1] > w[0]));
        let s: f64 = g.weights.iter().sum();
        assert!((s / 0.7 - 1.0).abs() < 1e-12);
        let gaps: Vec<f64> = std::iter::once(g.nodes[0])
            .chain(g.nodes.windows(2).map(|w| w[1] - w[0]))
            .collect();
        assert!((gaps[1] / gaps[0] - 1.15).abs() < 1e-9);
        assert!((gaps[62] / gaps[63] - 1.15).abs() < 1e-9);
        assert!(TimeGrid::new(1.0, 10, 2.5).is_err());
    }

    #[test]
    fn simpson_weights_integrate_quadratics() {
        let g = TimeGrid::new(1.0, 41, 1.15).unwrap();
        let w = g.duhamel_weights(DuhamelRule::Simpson);
        for i in [1, 2, 3, 4, 5, 17, 40] {
            // exact apart from the constant first gap, where s² is frozen at τ_0²
            let got: f64 = (0..=i).map(|j| w[i][j] * g.nodes[j].powi(2)).sum();
            let t0 = g.nodes[0];
            let exact = g.nodes[i].powi(3) / 3.0 - t0.powi(3) / 3.0 + t0.powi(3);
            if i >= 2 {
                assert!((got - exact).abs() < 1e-14, "i={i}: {got} vs {exact}");
            }
            assert!(w[i].iter().all(|&v| v >= 0.0));
        }
    }

    #[test]
    fn left_endpoint_weights_sum() {
        let g = TimeGrid::new(2.0, 16, 1.3).unwrap();
        let w = g.duhamel_weights(DuhamelRule::LeftEndpoint);
        for i in 0..16 {
            let s: f64 = w[i].iter().sum();
            assert!((s - g.nodes[i]).abs() < 1e-14);
        }
    }

    #[test]
    fn checkpoints_are_distinct_and_end_at_t() {
        let g = TimeGrid::new(1.0, 64, 1.15).unwrap();
        let c = g.checkpoints(8);
        assert_eq!(c.len(), 8);
        assert_eq!(*c.last().unwrap(), 63);
    }
}
