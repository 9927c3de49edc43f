//! Smallness functionals whose boundedness guarantees local solvability.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exponents::{classify, Case, SystemParams};
use crate::profiles::{
    is_radially_nonincreasing, sup_ball_measure, Modulator, OrliczSpec, RadialDensity,
    RadialProfile, TransformedProfile,
};
use crate::quadrature::{gauss_kronrod_pieces, half_line, Tail, Tolerance};
use crate::semigroup::{semigroup_radial_at, semigroup_radial_sup};
use crate::special::{logspace, sphere_area};

use super::{BoundCheckReport, Component};

/// 33 log-spaced times on `[10^-4, 1]`.
pub fn default_t_grid() -> Vec<f64> {
    logspace(1e-4, 1.0, 33)
}

/// Case-dependent parameters of the smallness conditions.
///
/// - A: `alpha ∈ (1, (pq+q)/(q+1))`.
/// - B: `alpha > 0` (for `Ψ`), `beta ∈ (0, 1/(pq-1))` (for `Φ`), `r_star ∈ ((q+1)/(p+1), q)`.
/// - C: `beta > 0`.
/// - D, E: `r_star ∈ (Nq/(N+2), q)` and optionally `f` with `∫_0^1 f(τ) dτ/τ < ∞`.
///   Without `f`, `h^q` (D) or `(∫_0^τ h(s) ds/s)^q` (E) is used, `h` being the modulator of `μ`.
/// - F: nothing.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SufficiencyExtras {
    pub alpha: Option<f64>,
    pub beta: Option<f64>,
    pub r_star: Option<f64>,
    pub f: Option<Modulator>,
}

fn require(v: Option<f64>, name: &str, lo: f64, hi: f64) -> Result<f64> {
    let v = v.ok_or_else(|| Error::InvalidParams(format!("missing extra parameter {name}")))?;
    if !(v > lo && v < hi) {
        return Err(Error::HypothesisViolated(format!(
            "{name} = {v} must lie in ({lo}, {hi})"
        )));
    }
    Ok(v)
}

fn vanishes(d: &dyn RadialDensity) -> bool {
    d.is_zero() && d.atom() == 0.0
}

fn sup_norm(d: &dyn RadialDensity, t: f64) -> Result<f64> {
    if vanishes(d) {
        return Ok(0.0);
    }
    semigroup_radial_sup(d, 1.0, t)
}

/// `‖S(t)d‖_{L^r(B(0,1))}`, which is the uniformly local norm when `d` is
/// radially nonincreasing.
///
/// `S(t)d` varies on the scale `√t`, so the radial integral is split at
/// `√t 2^k`; the absolute tolerance is tied to the mass of the innermost piece.
fn origin_ball_norm(d: &dyn RadialDensity, t: f64, r: f64) -> Result<f64> {
    if vanishes(d) {
        return Ok(0.0);
    }
    let n = d.dim() as f64;
    let root = t.sqrt();
    let mut breaks = vec![0.0];
    let mut b = root / 4.0;
    while b < 1.0 {
        breaks.push(b);
        b *= 2.0;
    }
    breaks.push(1.0);
    let center = semigroup_radial_at(d, 1.0, t, 0.0)?;
    let scale = center.powf(r) * breaks[1].powf(n) / n;
    let mut failure = None;
    let q = gauss_kronrod_pieces(
        |x| match semigroup_radial_at(d, 1.0, t, x) {
            Ok(v) if v > 0.0 => x.powf(n - 1.0) * v.powf(r),
            Ok(_) => 0.0,
            Err(e) => {
                failure.get_or_insert(e);
                f64::NAN
            }
        },
        &breaks,
        Tolerance {
            abs: 1e-10 * scale,
            ..Tolerance::rel(1e-8)
        },
    );
    if let Some(e) = failure {
        return Err(e);
    }
    Ok((sphere_area(d.dim()) * q?.value).powf(1.0 / r))
}

fn log_half(t: f64) -> f64 {
    (2.0 / t).ln()
}

enum Shape {
    Given(Modulator),
    HPower(Modulator, f64),
    HIntegralPower(Modulator, f64),
    One,
}

impl Shape {
    fn eval(&self, tau: f64) -> Result<f64> {
        let u = -tau.min(1.0).ln();
        Ok(match self {
            Shape::Given(m) => m.eval(tau),
            Shape::HPower(h, q) => h.eval(tau).powf(*q),
            Shape::HIntegralPower(h, q) => {
                match half_line(|v| h.eval_log(v), u, Tolerance::rel(1e-10))? {
                    Tail::Finite(i) => i.value.powf(*q),
                    Tail::Divergent { .. } => f64::INFINITY,
                }
            }
            Shape::One => 1.0,
        })
    }

    /// `∫_0^1 f(τ) dτ/τ` is finite.
    fn integrable(&self) -> Result<bool> {
        Ok(match self {
            Shape::Given(m) => half_line(|u| m.eval_log(u), 0.0, Tolerance::rel(1e-9))?.is_finite(),
            Shape::HPower(h, q) => h.h1_integral(*q)?.is_finite(),
            Shape::HIntegralPower(h, q) => h.h2_integral(*q)?.is_finite(),
            Shape::One => false,
        })
    }
}

struct Setup<'a> {
    id: String,
    grid: Vec<f64>,
    bound: Vec<f64>,
    names: [&'static str; 2],
    eval: Box<dyn Fn(f64) -> Result<[f64; 2]> + Sync + 'a>,
    combine_max: bool,
    notes: Vec<String>,
}

fn divergent_report(
    id: String,
    grid: Vec<f64>,
    bound: Vec<f64>,
    d: &dyn RadialDensity,
    name: &str,
) -> BoundCheckReport {
    let rate = (d.origin_power() - d.dim() as f64).max(0.0);
    BoundCheckReport::divergent(
        id,
        "t",
        grid,
        bound,
        rate,
        format!("{name} is not locally integrable"),
    )
}

/// Evaluate the smallness functional of `case` over `t_grid ⊂ (0, 1]`, with
/// unit diffusivity. The report's `fitted_C` is the `γ` the data require.
///
/// - A: `‖S(t)μ^{α(q+1)/(p+1)}‖_∞ + ‖S(t)ν^α‖_∞` against `t^{-α(q+1)/(pq-1)}`.
/// - B: the larger of `|||S(t)Ψ(μ)|||_{r*} / (t^{-(N/2)((p+1)/(q+1)-1/r*)} |log(t/2)|^{-p/(pq-1)+α})`
///   and `‖S(t)Φ(ν)‖_∞ / (t^{-N/2} |log(t/2)|^{-1/(pq-1)+β})`, against 1.
/// - C: `‖S(t)Φ(μ)‖_∞ + ‖S(t)Φ(ν)‖_∞` against `t^{-N/2} |log(t/2)|^{-N/2+β}`.
/// - D, E: the larger of `|||S(t)μ|||_{r*} / (t^{-(N/2)((N+2)/(Nq)-1/r*)} f(√t)^{1/q})`
///   and `(sup_x ν(B(x,1)))^{1/q}`, against 1.
/// - F: `‖S(t)μ‖_∞ + ‖S(t)ν‖_∞` against `t^{-N/2}`.
///
/// `|||·|||_{r}` is evaluated on the unit ball at the origin, which is the
/// supremum over centers for radially nonincreasing data.
pub fn sufficiency_hypothesis_check(
    params: &SystemParams,
    case: Case,
    mu: &RadialProfile,
    nu: &RadialProfile,
    extras: &SufficiencyExtras,
    t_grid: &[f64],
) -> Result<BoundCheckReport> {
    let actual = classify(params).label;
    if actual != case {
        return Err(Error::CaseMismatch {
            requested: case.to_string(),
            actual: actual.to_string(),
        });
    }
    if mu.dim != params.n || nu.dim != params.n {
        return Err(Error::InvalidParams(
            "profile dimension differs from N".into(),
        ));
    }
    let mut grid = t_grid.to_vec();
    grid.sort_by(|a, b| a.total_cmp(b));
    if grid.is_empty() || !grid.iter().all(|t| *t > 0.0 && *t <= 1.0) {
        return Err(Error::InvalidParams(
            "t grid must be nonempty and lie in (0, 1]".into(),
        ));
    }
    let n = params.n as f64;
    let (p, q) = (params.p, params.q);
    let pq1 = params.pq1();
    let id = format!("sufficiency-{}", case.lower());
    let mut notes = Vec::new();
    if matches!(case, Case::B | Case::D | Case::E) && !(is_radially_nonincreasing(mu)) {
        notes.push("μ is not radially nonincreasing; the local norm is taken on the ball at the origin only".into());
    }

    let setup: Setup = match case {
        Case::A => {
            let alpha = require(extras.alpha, "alpha", 1.0, (p * q + q) / (q + 1.0))?;
            let tm = TransformedProfile::power(mu, alpha * (q + 1.0) / (p + 1.0))?;
            let tn = TransformedProfile::power(nu, alpha)?;
            let bound = grid
                .iter()
                .map(|t| t.powf(-alpha * (q + 1.0) / pq1))
                .collect();
            for (d, name) in [(&tm, "μ^{α(q+1)/(p+1)}"), (&tn, "ν^α")] {
                if !d.locally_finite() {
                    return Ok(divergent_report(id, grid, bound, d, name));
                }
            }
            Setup {
                id,
                grid,
                bound,
                names: ["mu_power_sup", "nu_power_sup"],
                eval: Box::new(move |t| Ok([sup_norm(&tm, t)?, sup_norm(&tn, t)?])),
                combine_max: false,
                notes,
            }
        }
        Case::B => {
            let alpha = require(extras.alpha, "alpha", 0.0, f64::INFINITY)?;
            let beta = require(extras.beta, "beta", 0.0, 1.0 / pq1)?;
            let r_star = require(extras.r_star, "r_star", (q + 1.0) / (p + 1.0), q)?;
            let psi = TransformedProfile::orlicz(mu, OrliczSpec::Psi { alpha }, 1.0)?;
            let phi = TransformedProfile::orlicz(nu, OrliczSpec::Phi { beta }, 1.0)?;
            let bound = vec![1.0; grid.len()];
            for (d, name) in [(&psi, "Ψ(μ)"), (&phi, "Φ(ν)")] {
                if !d.locally_finite() {
                    return Ok(divergent_report(id, grid, bound, d, name));
                }
            }
            Setup {
                id,
                grid,
                bound,
                names: ["psi_mu_ratio", "phi_nu_ratio"],
                eval: Box::new(move |t| {
                    let l = log_half(t);
                    let s1 = t.powf(-(n / 2.0) * ((p + 1.0) / (q + 1.0) - 1.0 / r_star))
                        * l.powf(-p / pq1 + alpha);
                    let s2 = t.powf(-n / 2.0) * l.powf(-1.0 / pq1 + beta);
                    Ok([
                        origin_ball_norm(&psi, t, r_star)? / s1,
                        sup_norm(&phi, t)? / s2,
                    ])
                }),
                combine_max: true,
                notes,
            }
        }
        Case::C => {
            let beta = require(extras.beta, "beta", 0.0, f64::INFINITY)?;
            let pm = TransformedProfile::orlicz(mu, OrliczSpec::Phi { beta }, 1.0)?;
            let pn = TransformedProfile::orlicz(nu, OrliczSpec::Phi { beta }, 1.0)?;
            let bound = grid
                .iter()
                .map(|&t| t.powf(-n / 2.0) * log_half(t).powf(-n / 2.0 + beta))
                .collect();
            for (d, name) in [(&pm, "Φ(μ)"), (&pn, "Φ(ν)")] {
                if !d.locally_finite() {
                    return Ok(divergent_report(id, grid, bound, d, name));
                }
            }
            Setup {
                id,
                grid,
                bound,
                names: ["phi_mu_sup", "phi_nu_sup"],
                eval: Box::new(move |t| Ok([sup_norm(&pm, t)?, sup_norm(&pn, t)?])),
                combine_max: false,
                notes,
            }
        }
        Case::D | Case::E => {
            let r_star = require(extras.r_star, "r_star", n * q / (n + 2.0), q)?;
            let shape = match (&extras.f, vanishes(mu)) {
                (Some(f), _) => Shape::Given(f.clone()),
                (None, true) => Shape::One,
                (None, false) if case == Case::D => Shape::HPower(mu.modulator.clone(), q),
                (None, false) => Shape::HIntegralPower(mu.modulator.clone(), q),
            };
            if !matches!(shape, Shape::One) && !shape.integrable()? {
                return Err(Error::HypothesisViolated(
                    "∫_0^1 f(τ) dτ/τ must be finite".into(),
                ));
            }
            if extras.f.is_none() {
                notes.push(match case {
                    Case::D => "f = h^q from the modulator of μ".into(),
                    _ => "f = (∫_0^τ h(s) ds/s)^q from the modulator of μ".into(),
                });
            }
            let bound = vec![1.0; grid.len()];
            if !mu.locally_finite {
                return Ok(divergent_report(id, grid, bound, mu, "μ"));
            }
            if !nu.locally_finite {
                return Ok(divergent_report(id, grid, bound, nu, "ν"));
            }
            let nu_part = sup_ball_measure(nu, 1.0)?.powf(1.0 / q);
            Setup {
                id,
                grid,
                bound,
                names: ["mu_local_ratio", "nu_unit_ball"],
                eval: Box::new(move |t| {
                    let s = t.powf(-(n / 2.0) * ((n + 2.0) / (n * q) - 1.0 / r_star))
                        * shape.eval(t.sqrt())?.powf(1.0 / q);
                    Ok([origin_ball_norm(mu, t, r_star)? / s, nu_part])
                }),
                combine_max: true,
                notes,
            }
        }
        Case::F => {
            let bound = grid.iter().map(|t| t.powf(-n / 2.0)).collect();
            for (d, name) in [(mu, "μ"), (nu, "ν")] {
                if !d.locally_finite {
                    return Ok(divergent_report(id, grid, bound, d, name));
                }
            }
            Setup {
                id,
                grid,
                bound,
                names: ["mu_sup", "nu_sup"],
                eval: Box::new(move |t| Ok([sup_norm(mu, t)?, sup_norm(nu, t)?])),
                combine_max: false,
                notes,
            }
        }
    };

    let parts = setup
        .grid
        .par_iter()
        .map(|&t| (setup.eval)(t))
        .collect::<Result<Vec<_>>>()?;
    let measured = parts
        .iter()
        .map(|[a, b]| if setup.combine_max { a.max(*b) } else { a + b })
        .collect();
    let components = (0..2)
        .map(|k| Component {
            name: setup.names[k].into(),
            values: parts.iter().map(|v| v[k]).collect(),
        })
        .collect();
    let mut report =
        BoundCheckReport::new(setup.id, "t", setup.grid, measured, setup.bound, components);
    report.notes = setup.notes;
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diagnostics::Verdict;
    use crate::profiles::make_optimal_profile;
    use std::f64::consts::PI;

    #[test]
    fn zero_data_need_no_gamma() {
        let sets = [
            (
                (3, 2.0, 3.0),
                Case::A,
                SufficiencyExtras {
                    alpha: Some(1.3),
                    ..Default::default()
                },
            ),
            (
                (2, 1.5, 4.0),
                Case::B,
                SufficiencyExtras {
                    alpha: Some(0.5),
                    beta: Some(0.1),
                    r_star: Some(2.5),
                    f: None,
                },
            ),
            (
                (2, 2.0, 2.0),
                Case::C,
                SufficiencyExtras {
                    beta: Some(0.5),
                    ..Default::default()
                },
            ),
            (
                (1, 1.0, 4.0),
                Case::D,
                SufficiencyExtras {
                    r_star: Some(2.0),
                    ..Default::default()
                },
            ),
            (
                (2, 1.0, 2.0),
                Case::E,
                SufficiencyExtras {
                    r_star: Some(1.5),
                    ..Default::default()
                },
            ),
            ((1, 1.0, 2.0), Case::F, SufficiencyExtras::default()),
        ];
        for ((n, p, q), case, extras) in sets {
            let params = SystemParams::unit(n, p, q).unwrap();
            let z = RadialProfile::zero(n);
            let r = sufficiency_hypothesis_check(&params, case, &z, &z, &extras, &[1e-3, 0.1, 1.0])
                .unwrap();
            assert_eq!(r.fitted_constant, 0.0, "case {case}");
        }
    }

    #[test]
    fn case_f_atom_peak_and_linearity() {
        let params = SystemParams::unit(1, 1.0, 2.0).unwrap();
        let z = RadialProfile::zero(1);
        let grid = default_t_grid();
        let m = 0.8;
        let mu = RadialProfile::point_mass(1, m).unwrap();
        let r = sufficiency_hypothesis_check(
            &params,
            Case::F,
            &mu,
            &z,
            &SufficiencyExtras::default(),
            &grid,
        )
        .unwrap();
        assert!((r.fitted_constant - m / (4.0 * PI).sqrt()).abs() < 1e-12);
        let mu2 = RadialProfile::point_mass(1, 2.0 * m).unwrap();
        let r2 = sufficiency_hypothesis_check(
            &params,
            Case::F,
            &mu2,
            &mu,
            &SufficiencyExtras::default(),
            &grid,
        )
        .unwrap();
        assert!((r2.fitted_constant - 3.0 * r.fitted_constant).abs() < 1e-10);
    }

    #[test]
    fn case_a_optimal_profile_needs_finite_gamma() {
        let params = SystemParams::unit(3, 2.0, 3.0).unwrap();
        let pair = make_optimal_profile(&params, Case::A, 1.0, 1.0, None).unwrap();
        let extras = SufficiencyExtras {
            alpha: Some(1.3),
            ..Default::default()
        };
        let r = sufficiency_hypothesis_check(
            &params,
            Case::A,
            &pair.mu,
            &pair.nu,
            &extras,
            &default_t_grid(),
        )
        .unwrap();
        assert!(r.fitted_constant.is_finite() && r.fitted_constant > 0.0);
        assert_eq!(r.verdict, Verdict::Bounded);
        assert!(r.slope.abs() < 0.05, "{}", r.slope);
    }

    #[test]
    fn extras_outside_their_intervals_are_rejected() {
        let params = SystemParams::unit(3, 2.0, 3.0).unwrap();
        let z = RadialProfile::zero(3);
        for alpha in [None, Some(1.0), Some(2.25)] {
            let extras = SufficiencyExtras {
                alpha,
                ..Default::default()
            };
            assert!(
                sufficiency_hypothesis_check(&params, Case::A, &z, &z, &extras, &[0.5]).is_err()
            );
        }
        let params = SystemParams::unit(2, 1.5, 4.0).unwrap();
        let z = RadialProfile::zero(2);
        let extras = SufficiencyExtras {
            alpha: Some(0.5),
            beta: Some(0.2),
            r_star: Some(2.5),
            f: None,
        };
        assert!(sufficiency_hypothesis_check(&params, Case::B, &z, &z, &extras, &[0.5]).is_err());
    }

    #[test]
    fn case_d_default_shape_is_bounded() {
        let params = SystemParams::unit(1, 1.0, 4.0).unwrap();
        let pair = make_optimal_profile(
            &params,
            Case::D,
            1.0,
            1.0,
            Some(Modulator::log_decay(0.3).unwrap()),
        )
        .unwrap();
        let extras = SufficiencyExtras {
            r_star: Some(2.0),
            ..Default::default()
        };
        let r = sufficiency_hypothesis_check(
            &params,
            Case::D,
            &pair.mu,
            &pair.nu,
            &extras,
            &default_t_grid(),
        )
        .unwrap();
        assert_eq!(r.verdict, Verdict::Bounded, "{:?}", r.ratio);
        assert!((r.components[1].values[0] - 1.0).abs() < 1e-12);
    }
}
