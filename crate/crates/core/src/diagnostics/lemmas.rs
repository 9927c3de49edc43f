//! Kernel estimates: smoothing of measures, annulus norms, log-weighted integrals.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::profiles::{sup_ball_measure, Modulator, RadialDensity, RadialProfile};
use crate::quadrature::{gauss_kronrod, half_line, Tail, Tolerance};
use crate::semigroup::{semigroup_radial_at, semigroup_radial_sup};
use crate::special::sphere_area;

use super::{BoundCheckReport, Component};

fn check_grid(t_grid: &[f64], upper: f64) -> Result<Vec<f64>> {
    let mut grid = t_grid.to_vec();
    grid.sort_by(|a, b| a.total_cmp(b));
    if grid.is_empty() || grid[0] <= 0.0 || !grid.iter().all(|t| t.is_finite() && *t < upper) {
        return Err(Error::InvalidParams(format!(
            "t grid must be nonempty and lie in (0, {upper})"
        )));
    }
    Ok(grid)
}

/// `t^{N/2} ‖S(t)μ‖_∞` against `sup_x μ(B(x, √t))`, with unit diffusivity.
pub fn lemma21_check(mu: &dyn RadialDensity, t_grid: &[f64]) -> Result<BoundCheckReport> {
    if !mu.locally_finite() {
        return Err(Error::InfiniteMass(
            "the measure is not locally finite".into(),
        ));
    }
    let grid = check_grid(t_grid, f64::INFINITY)?;
    let n = mu.dim() as f64;
    let mut measured = Vec::with_capacity(grid.len());
    let mut bound = Vec::with_capacity(grid.len());
    let mut peak = Vec::with_capacity(grid.len());
    for &t in &grid {
        let sup = if mu.is_zero() && mu.atom() == 0.0 {
            0.0
        } else {
            semigroup_radial_sup(mu, 1.0, t)?
        };
        peak.push(sup);
        measured.push(sup * t.powf(n / 2.0));
        bound.push(sup_ball_measure(mu, t.sqrt())?);
    }
    Ok(BoundCheckReport::new(
        "lemma21",
        "t",
        grid,
        measured,
        bound,
        vec![Component {
            name: "sup_norm".into(),
            values: peak,
        }],
    ))
}

fn log_tail(f: impl FnMut(f64) -> f64, from: f64, what: &str) -> Result<f64> {
    match half_line(f, from, Tolerance::rel(1e-10))? {
        Tail::Finite(q) => Ok(q.value),
        Tail::Divergent { .. } => Err(Error::HypothesisViolated(format!("{what} diverges"))),
    }
}

/// `‖S(t)μ‖_{L^{r*}(B(0,1) \ B(0,√t))}` for `μ = |x|^{-a} f(|x|)` on the unit
/// ball, against `t^{-(N/2)(a/N - 1/r*)} g(t)` where
///
/// ```text
/// g(t) = f(t^{1/6}) + t^{(a r* - N)/(4 r*)}                          a < N
/// g(t) = f(t^{1/6}) + t^{(N r* - N)/(4 r*)} + ∫_0^{√t} f(τ) dτ/τ      a = N
/// ```
///
/// `f = None` stands for `f ≡ 0`. The estimate is asymptotic in `t`; a note
/// records the ratio over `t ≤ 10^-3` next to the full grid.
pub fn lemma22_check(
    n: usize,
    a: f64,
    f: Option<&Modulator>,
    r_star: f64,
    t_grid: &[f64],
) -> Result<BoundCheckReport> {
    let nf = n as f64;
    if !(a > 0.0 && a <= nf * (1.0 + 1e-12)) {
        return Err(Error::InvalidParams(format!(
            "a must lie in (0, N], got {a}"
        )));
    }
    if !(r_star > nf / a) || !r_star.is_finite() {
        return Err(Error::HypothesisViolated(format!(
            "r* must exceed N/a = {}, got {r_star}",
            nf / a
        )));
    }
    let grid = check_grid(t_grid, 1.0)?;
    let borderline = (a - nf).abs() <= 1e-12 * nf;
    let mu = match f {
        Some(m) => RadialProfile::new(n, 1.0, a, 0.0, m.clone(), 1.0, 0.0)?,
        None => RadialProfile::zero(n),
    };
    if borderline && f.is_some() && !mu.locally_finite {
        return Err(Error::HypothesisViolated(
            "∫_0 f(τ) dτ/τ must be finite when a = N".into(),
        ));
    }
    let fval = |r: f64| f.map_or(0.0, |m| m.eval(r));
    let omega = sphere_area(n);
    let mut measured = Vec::with_capacity(grid.len());
    let mut bound = Vec::with_capacity(grid.len());
    let mut g_vals = Vec::with_capacity(grid.len());
    for &t in &grid {
        let g = if borderline {
            let int = match f {
                Some(m) => log_tail(|u| m.eval_log(u), -t.sqrt().ln(), "∫_0 f(τ) dτ/τ")?,
                None => 0.0,
            };
            fval(t.powf(1.0 / 6.0)) + t.powf((nf * r_star - nf) / (4.0 * r_star)) + int
        } else {
            fval(t.powf(1.0 / 6.0)) + t.powf((a * r_star - nf) / (4.0 * r_star))
        };
        g_vals.push(g);
        bound.push(t.powf(-(nf / 2.0) * (a / nf - 1.0 / r_star)) * g);
        if f.is_none() {
            measured.push(0.0);
            continue;
        }
        let mut failure = None;
        let q = gauss_kronrod(
            |s| {
                let r = s.exp();
                match semigroup_radial_at(&mu, 1.0, t, r) {
                    Ok(v) if v > 0.0 => r.powf(nf) * v.powf(r_star),
                    Ok(_) => 0.0,
                    Err(e) => {
                        failure.get_or_insert(e);
                        f64::NAN
                    }
                }
            },
            0.5 * t.ln(),
            0.0,
            Tolerance::rel(1e-8),
        );
        if let Some(e) = failure {
            return Err(e);
        }
        measured.push((omega * q?.value).powf(1.0 / r_star));
    }
    let mut report = BoundCheckReport::new(
        "lemma22",
        "t",
        grid,
        measured,
        bound,
        vec![Component {
            name: "g".into(),
            values: g_vals,
        }],
    );
    let small = report
        .grid
        .iter()
        .zip(&report.ratio)
        .filter(|(t, _)| **t <= 1e-3)
        .map(|(_, r)| *r)
        .fold(f64::NAN, f64::max);
    report.notes.push(format!(
        "max ratio over the whole grid {:e}; over t <= 1e-3 {:e}",
        report.fitted_constant, small
    ));
    Ok(report)
}

/// One evaluation of `∫_0^t s^a |log(s/2)|^b ds` against `t^{a+1} |log(t/2)|^b`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Lemma23 {
    pub a: f64,
    pub b: f64,
    pub t: f64,
    pub integral: f64,
    pub bound: f64,
    pub ratio: f64,
}

/// With `s = t e^{-v}` and `L = ln(2/t)` the ratio is
/// `∫_0^∞ e^{-(a+1)v} (1 + v/L)^b dv`, computed directly so that it stays
/// accurate when the integral and bound under- or overflow.
pub fn lemma23_log_integral(a: f64, b: f64, t: f64) -> Result<Lemma23> {
    if !(a > -1.0) || !a.is_finite() {
        return Err(Error::InvalidParams(format!("a must exceed -1, got {a}")));
    }
    if !(t > 0.0 && t < 1.0) || !b.is_finite() {
        return Err(Error::InvalidParams(format!(
            "need t in (0, 1) and finite b, got t = {t}, b = {b}"
        )));
    }
    let l = (2.0 / t).ln();
    let ratio = log_tail(
        |v| (-(a + 1.0) * v + b * (v / l).ln_1p()).exp(),
        0.0,
        "log-weighted integral",
    )?;
    let bound = t.powf(a + 1.0) * l.powf(b);
    Ok(Lemma23 {
        a,
        b,
        t,
        integral: ratio * bound,
        bound,
        ratio,
    })
}

/// [`lemma23_log_integral`] over a grid of `t`.
pub fn lemma23_check(a: f64, b: f64, t_grid: &[f64]) -> Result<BoundCheckReport> {
    let grid = check_grid(t_grid, 1.0)?;
    let rows = grid
        .iter()
        .map(|&t| lemma23_log_integral(a, b, t))
        .collect::<Result<Vec<_>>>()?;
    Ok(BoundCheckReport::new(
        format!("lemma23(a={a},b={b})"),
        "t",
        grid,
        rows.iter().map(|r| r.integral).collect(),
        rows.iter().map(|r| r.bound).collect(),
        Vec::new(),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diagnostics::Verdict;
    use crate::special::logspace;
    use std::f64::consts::PI;

    #[test]
    fn lemma21_point_mass_is_exact() {
        for n in 1..=3 {
            let d = RadialProfile::point_mass(n, 2.5).unwrap();
            let r = lemma21_check(&d, &logspace(1e-4, 10.0, 20)).unwrap();
            for x in &r.ratio {
                assert!((x - (4.0 * PI).powf(-(n as f64) / 2.0)).abs() < 1e-10);
            }
        }
        let z = RadialProfile::zero(2);
        let r = lemma21_check(&z, &[0.1, 1.0]).unwrap();
        assert_eq!(r.fitted_constant, 0.0);
    }

    #[test]
    fn lemma22_flat_case_is_bounded() {
        let r = lemma22_check(
            3,
            1.5,
            Some(&Modulator::Identity),
            3.0,
            &logspace(1e-5, 1e-2, 7),
        )
        .unwrap();
        assert_eq!(r.verdict, Verdict::Bounded, "{:?}", r.ratio);
        assert!(r.fitted_constant.is_finite() && r.fitted_constant > 0.0);
        let z = lemma22_check(3, 1.5, None, 3.0, &[1e-3]).unwrap();
        assert_eq!(z.measured, vec![0.0]);
        assert!(lemma22_check(3, 1.5, None, 2.0, &[1e-3]).is_err());
    }

    #[test]
    fn lemma22_borderline_branch() {
        let f = Modulator::log_decay(3.0).unwrap();
        let r = lemma22_check(2, 2.0, Some(&f), 2.0, &logspace(1e-5, 1e-2, 7)).unwrap();
        assert_eq!(r.verdict, Verdict::Bounded, "{:?}", r.ratio);
        // ∫_0^{√t} |log(τ/2)|^{-3} dτ/τ = |log(√t/2)|^{-2} / 2
        let t: f64 = 1e-4;
        let lead = (2.0 / t.powf(1.0 / 6.0)).ln().powf(-3.0) + t.powf(0.25);
        let expected = lead + 0.5 * (2.0 / t.sqrt()).ln().powi(-2);
        let r = lemma22_check(2, 2.0, Some(&f), 2.0, &[t]).unwrap();
        assert!((r.components[0].values[0] / expected - 1.0).abs() < 1e-8);
    }

    #[test]
    fn lemma23_examples() {
        let r = lemma23_log_integral(0.0, 0.0, 0.5).unwrap();
        assert!((r.integral - 0.5).abs() < 1e-12 && (r.ratio - 1.0).abs() < 1e-12);
        let r = lemma23_log_integral(1.0, -2.0, 0.3).unwrap();
        assert!(r.ratio <= 0.5);
        // b = 1: ratio = 1/(a+1) + 1/(L (a+1)^2)
        let r = lemma23_log_integral(1.0, 1.0, 0.5).unwrap();
        let l = 4f64.ln();
        assert!((r.ratio - (0.5 + 0.25 / l)).abs() < 1e-10);
        assert!((r.ratio - 0.68).abs() < 0.01);
        assert!(lemma23_log_integral(-1.0, 0.0, 0.5).is_err());
    }

    #[test]
    fn lemma23_direct_quadrature_agrees() {
        let (a, b, t): (f64, f64, f64) = (-0.5, 2.5, 0.2);
        let direct = gauss_kronrod(
            |x: f64| {
                let s = x.exp();
                s.powf(a + 1.0) * (s / 2.0).ln().abs().powf(b)
            },
            -60.0,
            t.ln(),
            Tolerance::rel(1e-12),
        )
        .unwrap()
        .value;
        let r = lemma23_log_integral(a, b, t).unwrap();
        assert!((r.integral / direct - 1.0).abs() < 1e-9);
    }
}
