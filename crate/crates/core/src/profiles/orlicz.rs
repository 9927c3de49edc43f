//! Functions of the form `s ↦ s [log(L + s)]^λ`.

use std::f64::consts::E;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum OrliczSpec {
    Phi { beta: f64 },
    Psi { alpha: f64 },
    Lambda { lambda: f64, base: f64 },
}

impl OrliczSpec {
    pub fn validate(&self) -> Result<()> {
        let (exp, base) = self.parts();
        if !(exp.is_finite() && exp > 0.0) {
            return Err(Error::InvalidParams(format!(
                "exponent must be positive, got {exp}"
            )));
        }
        if !(base.is_finite() && base >= E) {
            return Err(Error::InvalidParams(format!(
                "base must be at least e, got {base}"
            )));
        }
        Ok(())
    }

    /// `(exponent, base)`.
    pub fn parts(&self) -> (f64, f64) {
        match *self {
            OrliczSpec::Phi { beta } => (beta, E),
            OrliczSpec::Psi { alpha } => (alpha, E),
            OrliczSpec::Lambda { lambda, base } => (lambda, base),
        }
    }

    pub fn apply(&self, tau: f64) -> f64 {
        let (exp, base) = self.parts();
        tau * (base + tau).ln().powf(exp)
    }

    /// `ln Λ(e^x)`, usable when `e^x` overflows.
    pub fn ln_apply_exp(&self, x: f64) -> f64 {
        let (exp, base) = self.parts();
        x + exp * ln_log_base_plus_exp(base, x)
    }

    /// Solve `Λ(s) = y` to relative accuracy 1e-12.
    pub fn invert(&self, y: f64) -> Result<f64> {
        if !(y >= 0.0) {
            return Err(Error::Domain(format!(
                "cannot invert at negative or NaN value {y}"
            )));
        }
        if y == 0.0 {
            return Ok(0.0);
        }
        if y.is_infinite() {
            return Ok(f64::INFINITY);
        }
        let (exp, base) = self.parts();
        // Λ(s) ≥ s (ln base)^exp ≥ s, so the root lies below y.
        let mut lo = 0.0;
        let mut hi = y / base.ln().powf(exp);
        let mut s = hi / (base + hi).ln().powf(exp).max(1.0);
        s = s.clamp(lo, hi);
        for _ in 0..200 {
            let l = (base + s).ln();
            let f = s * l.powf(exp) - y;
            if f > 0.0 {
                hi = s;
            } else {
                lo = s;
            }
            let df = l.powf(exp) + exp * s * l.powf(exp - 1.0) / (base + s);
            let mut next = s - f / df;
            if !(next > lo && next < hi) {
                next = 0.5 * (lo + hi);
            }
            if (next - s).abs() <= 1e-15 * next.abs() || hi - lo <= 1e-15 * hi {
                return Ok(next);
            }
            s = next;
        }
        Ok(s)
    }
}

/// `ln ln(base + e^x)` computed without overflow.
pub fn ln_log_base_plus_exp(base: f64, x: f64) -> f64 {
    let l = if x > 30.0 {
        x + (base * (-x).exp()).ln_1p()
    } else {
        (base + x.exp()).ln()
    };
    l.ln()
}

/// Smallest base for which `s ↦ s [log(L + s)]^λ` is convex on `[0, ∞)` for every λ > 0.
///
/// The second derivative is a positive multiple of `log(L+s)(2L+s) + s(λ−1)`,
/// nonnegative for all s once `log L ≥ 1`.
pub const LAMBDA_CONVEX_BASE: f64 = E;

/// Constant `C` with `C⁻¹ Λ_L ≤ Λ ≤ C Λ_L`, where `Λ` uses base e.
pub fn lambda_sandwich_constant(lambda: f64, base: f64) -> f64 {
    base.ln().powf(lambda)
}

/// Smallest `L ≥ e` making `s ↦ s^a [log(L + s)]^{-b}` increasing on (0, 1),
/// i.e. `a (L+1) log(L+1) ≥ b`.
pub fn monotone_base(a: f64, b: f64) -> f64 {
    let ok = |l: f64| a * (l + 1.0) * (l + 1.0).ln() >= b;
    if ok(E) {
        return E;
    }
    let (mut lo, mut hi) = (E, 2.0 * E);
    while !ok(hi) {
        lo = hi;
        hi *= 2.0;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if ok(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
        if hi - lo <= 1e-14 * hi {
            break;
        }
    }
    hi
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn phi_example() {
        let t = E * E - E;
        let v = OrliczSpec::Phi { beta: 1.0 }.apply(t);
        assert!((v - 2.0 * t).abs() < 1e-12);
        assert!((v - 9.3415).abs() < 1e-4);
    }

    #[test]
    fn roundtrip() {
        let specs = [
            OrliczSpec::Phi { beta: 0.3 },
            OrliczSpec::Psi { alpha: 2.5 },
            OrliczSpec::Lambda {
                lambda: 0.7,
                base: 20.0,
            },
        ];
        for spec in specs {
            assert_eq!(spec.apply(0.0), 0.0);
            assert_eq!(spec.invert(0.0).unwrap(), 0.0);
            for tau in crate::special::logspace(1e-6, 1e6, 49) {
                let back = spec.invert(spec.apply(tau)).unwrap();
                assert!((back / tau - 1.0).abs() < 1e-10, "{spec:?} {tau} {back}");
            }
        }
        assert!(OrliczSpec::Phi { beta: 1.0 }.invert(-1.0).is_err());
    }

    #[test]
    fn ln_apply_exp_agrees() {
        let spec = OrliczSpec::Psi { alpha: 1.5 };
        for x in [-5.0, 0.0, 3.0, 25.0, 40.0] {
            assert!((spec.ln_apply_exp(x) - spec.apply(f64::exp(x)).ln()).abs() < 1e-12);
        }
    }

    #[test]
    fn monotone_base_threshold() {
        let l = monotone_base(0.1, 10.0);
        assert!((0.1 * (l + 1.0) * (l + 1.0).ln() - 10.0).abs() < 1e-9);
        assert_eq!(monotone_base(1.0, 0.5), E);
    }
}
