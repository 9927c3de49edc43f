//! System parameters, the six-way regime classification and derived exponents.

use std::fmt;
use std::str::FromStr;

use num_rational::Rational64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Relative tolerance used for the boundary equalities between regimes.
pub const EQ_TOL: f64 = 1e-12;

pub fn approx_eq(lhs: f64, rhs: f64) -> bool {
    (lhs - rhs).abs() <= EQ_TOL * 1f64.max(lhs.abs()).max(rhs.abs())
}

/// A nonlinearity power, either an exact rational or a float.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Power {
    Exact(Rational64),
    Real(f64),
}

impl Power {
    pub fn value(&self) -> f64 {
        match self {
            Power::Exact(r) => *r.numer() as f64 / *r.denom() as f64,
            Power::Real(x) => *x,
        }
    }

    pub fn exact(&self) -> Option<Rational64> {
        match self {
            Power::Exact(r) => Some(*r),
            Power::Real(_) => None,
        }
    }
}

impl From<f64> for Power {
    fn from(x: f64) -> Self {
        Power::Real(x)
    }
}

impl From<Rational64> for Power {
    fn from(r: Rational64) -> Self {
        Power::Exact(r)
    }
}

impl FromStr for Power {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if let Some((n, d)) = s.split_once('/') {
            let n: i64 = n
                .trim()
                .parse()
                .map_err(|_| Error::InvalidParams(format!("bad rational numerator in {s:?}")))?;
            let d: i64 = d
                .trim()
                .parse()
                .map_err(|_| Error::InvalidParams(format!("bad rational denominator in {s:?}")))?;
            if d == 0 {
                return Err(Error::InvalidParams(format!("zero denominator in {s:?}")));
            }
            return Ok(Power::Exact(Rational64::new(n, d)));
        }
        if let Ok(i) = s.parse::<i64>() {
            return Ok(Power::Exact(Rational64::from_integer(i)));
        }
        s.parse::<f64>()
            .map(Power::Real)
            .map_err(|_| Error::InvalidParams(format!("cannot parse power {s:?}")))
    }
}

impl fmt::Display for Power {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Power::Exact(r) if *r.denom() == 1 => write!(f, "{}", r.numer()),
            Power::Exact(r) => write!(f, "{}/{}", r.numer(), r.denom()),
            Power::Real(x) => write!(f, "{x}"),
        }
    }
}

impl Serialize for Power {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Power::Exact(r) if *r.denom() == 1 => s.serialize_i64(*r.numer()),
            Power::Exact(_) => s.serialize_str(&self.to_string()),
            Power::Real(x) => s.serialize_f64(*x),
        }
    }
}

impl<'de> Deserialize<'de> for Power {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Int(i64),
            Float(f64),
            Text(String),
        }
        match Raw::deserialize(d)? {
            Raw::Int(i) => Ok(Power::Exact(Rational64::from_integer(i))),
            Raw::Float(x) => Ok(Power::Real(x)),
            Raw::Text(s) => s.parse().map_err(serde::de::Error::custom),
        }
    }
}

/// `(N, p, q, D1, D2)` with `D = min(D1, D2)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SystemParams {
    pub n: usize,
    pub p: f64,
    pub q: f64,
    pub d1: f64,
    pub d2: f64,
    pub d: f64,
    #[serde(skip)]
    pub p_exact: Option<Rational64>,
    #[serde(skip)]
    pub q_exact: Option<Rational64>,
}

impl SystemParams {
    pub fn new(
        n: usize,
        p: impl Into<Power>,
        q: impl Into<Power>,
        d1: f64,
        d2: f64,
    ) -> Result<Self> {
        let (p, q) = (p.into(), q.into());
        let (pv, qv) = (p.value(), q.value());
        if n == 0 {
            return Err(Error::InvalidParams(
                "dimension N must be at least 1".into(),
            ));
        }
        if !(pv.is_finite() && qv.is_finite()) || pv <= 0.0 || qv <= 0.0 {
            return Err(Error::InvalidParams(format!(
                "powers must be positive and finite, got p = {p}, q = {q}"
            )));
        }
        if pv > qv {
            return Err(Error::InvalidParams(format!(
                "need p <= q, got p = {p}, q = {q}"
            )));
        }
        let pq_gt_one = match (p.exact(), q.exact()) {
            (Some(a), Some(b)) => a * b > Rational64::from_integer(1),
            _ => pv * qv > 1.0,
        };
        if !pq_gt_one {
            return Err(Error::InvalidParams(format!(
                "need pq > 1, got p = {p}, q = {q}"
            )));
        }
        if !(d1.is_finite() && d2.is_finite()) || d1 <= 0.0 || d2 <= 0.0 {
            return Err(Error::InvalidParams(format!(
                "diffusivities must be positive, got D1 = {d1}, D2 = {d2}"
            )));
        }
        Ok(SystemParams {
            n,
            p: pv,
            q: qv,
            d1,
            d2,
            d: d1.min(d2),
            p_exact: p.exact(),
            q_exact: q.exact(),
        })
    }

    /// Unit diffusivities.
    pub fn unit(n: usize, p: impl Into<Power>, q: impl Into<Power>) -> Result<Self> {
        Self::new(n, p, q, 1.0, 1.0)
    }

    pub fn with_diffusivities(&self, d1: f64, d2: f64) -> Result<Self> {
        let p = self
            .p_exact
            .map(Power::Exact)
            .unwrap_or(Power::Real(self.p));
        let q = self
            .q_exact
            .map(Power::Exact)
            .unwrap_or(Power::Real(self.q));
        Self::new(self.n, p, q, d1, d2)
    }

    pub fn pq1(&self) -> f64 {
        self.p * self.q - 1.0
    }

    /// `(q + 1) - (N/2)(pq - 1)`; zero exactly on the critical line.
    pub fn excess(&self) -> f64 {
        self.q + 1.0 - 0.5 * self.n as f64 * self.pq1()
    }

    fn exact_pair(&self) -> Option<(Rational64, Rational64)> {
        Some((self.p_exact?, self.q_exact?))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Case {
    A,
    B,
    C,
    D,
    E,
    F,
}

impl Case {
    pub const ALL: [Case; 6] = [Case::A, Case::B, Case::C, Case::D, Case::E, Case::F];

    /// Evaluate this case's defining condition in floating point.
    pub fn holds(&self, params: &SystemParams) -> bool {
        let ratio = (params.q + 1.0) / params.pq1();
        let half = params.n as f64 / 2.0;
        let qf = 1.0 + 2.0 / params.n as f64;
        let on_line = approx_eq(ratio, half);
        let p_eq_q = approx_eq(params.p, params.q);
        let q_eq_f = approx_eq(params.q, qf);
        match self {
            Case::A => !on_line && ratio < half,
            Case::B => on_line && !p_eq_q && params.p < params.q,
            Case::C => on_line && p_eq_q,
            Case::D => !on_line && ratio > half && !q_eq_f && params.q > qf,
            Case::E => !on_line && ratio > half && q_eq_f,
            Case::F => !on_line && ratio > half && !q_eq_f && params.q < qf,
        }
    }

    pub fn lower(&self) -> char {
        match self {
            Case::A => 'a',
            Case::B => 'b',
            Case::C => 'c',
            Case::D => 'd',
            Case::E => 'e',
            Case::F => 'f',
        }
    }
}

impl fmt::Display for Case {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", self)
    }
}

impl FromStr for Case {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "a" => Ok(Case::A),
            "b" => Ok(Case::B),
            "c" => Ok(Case::C),
            "d" => Ok(Case::D),
            "e" => Ok(Case::E),
            "f" => Ok(Case::F),
            other => Err(Error::InvalidParams(format!(
                "unknown case {other:?}, expected one of a..f"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CaseLabel {
    pub label: Case,
    pub ratio: f64,
    pub half_dim: f64,
    pub q_fujita: f64,
}

pub fn classify(params: &SystemParams) -> CaseLabel {
    let ratio = (params.q + 1.0) / params.pq1();
    let half_dim = params.n as f64 / 2.0;
    let q_fujita = 1.0 + 2.0 / params.n as f64;
    let label = match params.exact_pair() {
        Some((p, q)) => classify_exact(params.n, p, q),
        None => Case::ALL
            .into_iter()
            .find(|c| c.holds(params))
            .expect("the six conditions cover every admissible parameter set"),
    };
    CaseLabel {
        label,
        ratio,
        half_dim,
        q_fujita,
    }
}

fn classify_exact(n: usize, p: Rational64, q: Rational64) -> Case {
    let one = Rational64::from_integer(1);
    let ratio = (q + one) / (p * q - one);
    let half = Rational64::new(n as i64, 2);
    let qf = one + Rational64::new(2, n as i64);
    if ratio < half {
        Case::A
    } else if ratio == half {
        if p < q {
            Case::B
        } else {
            Case::C
        }
    } else if q > qf {
        Case::D
    } else if q == qf {
        Case::E
    } else {
        Case::F
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ExponentSet {
    pub lambda_mu: f64,
    pub lambda_nu: f64,
    pub r1_star: f64,
    pub r2_star: f64,
    pub scal_u: f64,
    pub scal_v: f64,
    pub d_over_q: f64,
}

pub fn derive_exponents(params: &SystemParams) -> ExponentSet {
    let (n, p, q) = (params.n as f64, params.p, params.q);
    let pq1 = params.pq1();
    ExponentSet {
        lambda_mu: 2.0 * (p + 1.0) / pq1,
        lambda_nu: 2.0 * (q + 1.0) / pq1,
        r1_star: 0.5 * n * pq1 / (p + 1.0),
        r2_star: 0.5 * n * pq1 / (q + 1.0),
        scal_u: (p + 1.0) / pq1,
        scal_v: (q + 1.0) / pq1,
        d_over_q: (n + 2.0) / q,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LebesgueIndices {
    pub p_index: f64,
    pub q_index: f64,
    pub within_criterion: bool,
}

/// `P = N(p/r2 − 1/r1)`, `Q = N(q/r1 − 1/r2)`; the criterion is `max{P, Q} ≤ 2`.
pub fn lebesgue_indices(params: &SystemParams, r1: f64, r2: f64) -> Result<LebesgueIndices> {
    if params.p < 1.0 {
        return Err(Error::HypothesisViolated(format!(
            "Lebesgue criterion needs p >= 1, got p = {}",
            params.p
        )));
    }
    if !(r1 > 1.0 && r2 > 1.0 && r1.is_finite() && r2.is_finite()) {
        return Err(Error::InvalidParams(format!(
            "need 1 < r1, r2 < inf, got r1 = {r1}, r2 = {r2}"
        )));
    }
    let n = params.n as f64;
    let p_index = n * (params.p / r2 - 1.0 / r1);
    let q_index = n * (params.q / r1 - 1.0 / r2);
    Ok(LebesgueIndices {
        p_index,
        q_index,
        within_criterion: p_index.max(q_index) <= 2.0,
    })
}
