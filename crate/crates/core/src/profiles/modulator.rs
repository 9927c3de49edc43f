//! Slowly varying factors `h` on (0, 1] multiplying a power singularity.

use std::f64::consts::LN_2;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature::{half_line, Tail, Tolerance};

/// Monotone piecewise-linear table. Below the first node the table continues
/// as `h0 · (|log(r/2)| / |log(r0/2)|)^(-k)` with `k` fitted to the first two
/// nodes, so the extension stays positive and increasing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModTable {
    radii: Vec<f64>,
    values: Vec<f64>,
    tail_k: f64,
}

impl ModTable {
    pub fn new(radii: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if radii.len() != values.len() || radii.len() < 2 {
            return Err(Error::Modulator(
                "table needs at least two (radius, value) rows".into(),
            ));
        }
        for w in radii.windows(2) {
            if w[1] <= w[0] {
                return Err(Error::Modulator(format!(
                    "radii must be strictly increasing, got {} then {}",
                    w[0], w[1]
                )));
            }
        }
        if radii[0] <= 0.0 || *radii.last().unwrap() > 1.0 {
            return Err(Error::Modulator("radii must lie in (0, 1]".into()));
        }
        if values.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
            return Err(Error::Modulator(
                "values must be positive and finite".into(),
            ));
        }
        for (i, w) in values.windows(2).enumerate() {
            if w[1] < w[0] {
                return Err(Error::Modulator(format!(
                    "values must be nondecreasing in the radius, row {} has {} after {}",
                    i + 2,
                    w[1],
                    w[0]
                )));
            }
        }
        let l0 = (2.0 / radii[0]).ln();
        let l1 = (2.0 / radii[1]).ln();
        let tail_k = ((values[1] / values[0]).ln() / (l0 / l1).ln()).max(0.0);
        Ok(ModTable {
            radii,
            values,
            tail_k,
        })
    }

    /// Two whitespace- or comma-separated columns; `#` starts a comment.
    pub fn parse(text: &str) -> Result<Self> {
        let mut radii = Vec::new();
        let mut values = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let cols: Vec<&str> = line
                .split(|c: char| c.is_whitespace() || c == ',')
                .filter(|s| !s.is_empty())
                .collect();
            if cols.len() != 2 {
                return Err(Error::Modulator(format!(
                    "line {}: expected two columns",
                    lineno + 1
                )));
            }
            let parse = |s: &str| {
                s.parse::<f64>().map_err(|_| {
                    Error::Modulator(format!("line {}: cannot parse {s:?}", lineno + 1))
                })
            };
            radii.push(parse(cols[0])?);
            values.push(parse(cols[1])?);
        }
        Self::new(radii, values)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    /// Tabulate `h` on `n` log-spaced radii in `[r_min, 1]`.
    pub fn sample(h: impl Fn(f64) -> f64, r_min: f64, n: usize) -> Result<Self> {
        let radii = crate::special::logspace(r_min, 1.0, n);
        let values = radii.iter().map(|&r| h(r)).collect();
        Self::new(radii, values)
    }

    pub fn radii(&self) -> &[f64] {
        &self.radii
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn tail_exponent(&self) -> f64 {
        self.tail_k
    }

    fn eval(&self, r: f64) -> f64 {
        if r < self.radii[0] {
            return self.tail((1.0 / r).ln());
        }
        self.interp(r)
    }

    fn interp(&self, r: f64) -> f64 {
        let r = r.max(self.radii[0]);
        let last = self.radii.len() - 1;
        if r >= self.radii[last] {
            return self.values[last];
        }
        let i = self.radii.partition_point(|&x| x <= r) - 1;
        let (r0, r1) = (self.radii[i], self.radii[i + 1]);
        let w = (r - r0) / (r1 - r0);
        self.values[i] * (1.0 - w) + self.values[i + 1] * w
    }

    fn eval_log(&self, u: f64) -> f64 {
        let u0 = (1.0 / self.radii[0]).ln();
        if u <= u0 {
            return self.interp((-u).exp());
        }
        self.tail(u)
    }

    fn tail(&self, u: f64) -> f64 {
        let u0 = (1.0 / self.radii[0]).ln();
        self.values[0] * ((u + LN_2) / (u0 + LN_2)).powf(-self.tail_k)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Modulator {
    #[default]
    Identity,
    /// `h(r) = |log(r/2)|^(-k)`.
    LogDecay {
        k: f64,
    },
    Table(ModTable),
}

impl Modulator {
    pub fn log_decay(k: f64) -> Result<Self> {
        if !(k.is_finite() && k >= 0.0) {
            return Err(Error::Modulator(format!(
                "log-decay exponent must be nonnegative, got {k}"
            )));
        }
        Ok(Modulator::LogDecay { k })
    }

    pub fn is_identity(&self) -> bool {
        matches!(self, Modulator::Identity)
    }

    /// `h(r)` for `r ∈ (0, 1]`; radii above 1 use `h(1)`.
    pub fn eval(&self, r: f64) -> f64 {
        let r = r.min(1.0);
        match self {
            Modulator::Identity => 1.0,
            Modulator::LogDecay { k } => (2.0 / r).ln().powf(-k),
            Modulator::Table(t) => t.eval(r),
        }
    }

    /// `h(e^{-u})`, accurate for very large `u`.
    pub fn eval_log(&self, u: f64) -> f64 {
        let u = u.max(0.0);
        match self {
            Modulator::Identity => 1.0,
            Modulator::LogDecay { k } => (u + LN_2).powf(-k),
            Modulator::Table(t) => t.eval_log(u),
        }
    }

    /// `k` with `h(r) ~ |log r|^(-k)` as `r → 0`.
    pub fn tail_exponent(&self) -> f64 {
        match self {
            Modulator::Identity => 0.0,
            Modulator::LogDecay { k } => *k,
            Modulator::Table(t) => t.tail_exponent(),
        }
    }

    /// `∫_0^1 h(τ)^q τ^{-1} dτ`, the integrability condition on `h1`.
    pub fn h1_integral(&self, q: f64) -> Result<Tail> {
        Ok(half_line(
            |u| self.eval_log(u).powf(q),
            0.0,
            Tolerance::rel(1e-9),
        )?)
    }

    /// `∫_0^1 [∫_0^r h(τ) τ^{-1} dτ]^q r^{-1} dr`, the integrability condition on `h2`.
    pub fn h2_integral(&self, q: f64) -> Result<Tail> {
        let inner = |u0: f64| half_line(|u| self.eval_log(u), u0, Tolerance::rel(1e-9));
        if !inner(0.0)?.is_finite() {
            return Ok(Tail::Divergent {
                rate: 0.0,
                partials: Vec::new(),
            });
        }
        let mut failure = None;
        let outer = half_line(
            |u0| match inner(u0) {
                Ok(t) => t.value().powf(q),
                // far-out starting points give negligible, loosely resolved values
                Err(e) if e.estimate().is_some() && u0 > 1e6 => e.estimate().unwrap_or(0.0).powf(q),
                Err(e) => {
                    failure.get_or_insert(e);
                    f64::NAN
                }
            },
            0.0,
            Tolerance::rel(1e-7),
        );
        if let Some(e) = failure {
            return Err(e.into());
        }
        Ok(outer?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn table_interpolates_and_extends_monotonically() {
        let h = |r: f64| (2.0 / r).ln().powf(-0.5);
        let t = ModTable::sample(h, 1e-3, 40).unwrap();
        assert!((t.tail_exponent() - 0.5).abs() < 1e-3);
        let m = Modulator::Table(t);
        let mut prev = 0.0;
        for r in crate::special::logspace(1e-12, 1.0, 200) {
            let v = m.eval(r);
            assert!(v >= prev - 1e-15);
            assert!((v / h(r) - 1.0).abs() < 5e-3, "r={r}: {v} vs {}", h(r));
            prev = v;
        }
    }

    #[test]
    fn rejects_decreasing_tables() {
        assert!(ModTable::new(vec![0.1, 0.5, 1.0], vec![1.0, 0.5, 2.0]).is_err());
        assert!(ModTable::new(vec![0.5, 0.1], vec![1.0, 2.0]).is_err());
        assert!(ModTable::new(vec![0.5, 1.5], vec![1.0, 2.0]).is_err());
        assert!(ModTable::parse("0.1 1\n0.5 x\n").is_err());
    }

    #[test]
    fn parses_text_tables() {
        let t = ModTable::parse("# r h\n0.01, 0.2\n0.1 0.5\n1.0 1.0\n").unwrap();
        assert_eq!(t.radii(), &[0.01, 0.1, 1.0]);
    }

    #[test]
    fn integrability_conditions() {
        // ∫_0^∞ (u + ln 2)^{-kq} du = (ln 2)^{1-kq} / (kq - 1)
        let m = Modulator::log_decay(0.3).unwrap();
        match m.h1_integral(4.0).unwrap() {
            Tail::Finite(q) => {
                let exact = LN_2.powf(1.0 - 1.2) / 0.2;
                assert!(
                    (q.value / exact - 1.0).abs() < 1e-6,
                    "{} vs {exact}",
                    q.value
                );
            }
            t => panic!("{t:?}"),
        }
        assert!(!m.h1_integral(2.0).unwrap().is_finite());
        // inner integral (u + ln 2)^{1-k}/(k-1); outer needs q(k-1) > 1
        let m = Modulator::log_decay(2.0).unwrap();
        match m.h2_integral(2.0).unwrap() {
            Tail::Finite(q) => {
                let exact = LN_2.powf(-1.0);
                assert!(
                    (q.value / exact - 1.0).abs() < 1e-5,
                    "{} vs {exact}",
                    q.value
                );
            }
            t => panic!("{t:?}"),
        }
        assert!(!Modulator::log_decay(1.2)
            .unwrap()
            .h2_integral(2.0)
            .unwrap()
            .is_finite());
    }
}
