//! Pointwise check of the power-type supersolution for small data in case (A).
//!
//! With `D = min(D1, D2)`, `D' = max(D1, D2)`, `κ = (D'/D)^{N/2}` and
//! `S(t) = S(D' t)`, set
//!
//! ```text
//! w  = S(t)(κμ)^{α(q+1)/(p+1)} + S(t)(κν)^α,
//! ū  = 2 w^{(p+1)/(α(q+1))},   v̄ = 2 w^{1/α}.
//! ```
//!
//! The pair is a supersolution when
//! `S(t)κν + κ∫_0^t S(t-s) ū(s)^q ds ≤ v̄` and `S(t)κμ + κ∫_0^t S(t-s) v̄(s)^p ds ≤ ū`.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::exponents::{classify, Case, SystemParams};
use crate::profiles::{RadialDensity, RadialProfile, TransformedProfile};
use crate::semigroup::{semigroup_radial_at, semigroup_radial_sup, DuhamelRule, TimeGrid};
use crate::special::logspace;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SupersolutionSample {
    pub radius: f64,
    pub t: f64,
    pub w: f64,
    pub ubar: f64,
    pub vbar: f64,
    /// Left side of the `u` inequality (bounded by `ubar`).
    pub lhs_u: f64,
    /// Left side of the `v` inequality (bounded by `vbar`).
    pub lhs_v: f64,
    pub slack_u: f64,
    pub slack_v: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SupersolutionReport {
    pub params: SystemParams,
    pub alpha: f64,
    pub kappa: f64,
    /// `max_t t^{α(q+1)/(pq-1)} ‖w(t)‖_∞` over the sampled times.
    pub gamma_measured: f64,
    pub samples: Vec<SupersolutionSample>,
    pub verified: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SupersolutionOptions {
    /// Time nodes for each Duhamel integral.
    pub nodes: usize,
    pub ratio: f64,
    /// Radii in each tabulation of `w(·, s)`.
    pub table_points: usize,
}

impl Default for SupersolutionOptions {
    fn default() -> Self {
        SupersolutionOptions {
            nodes: 32,
            ratio: 1.3,
            table_points: 96,
        }
    }
}

/// Piecewise-linear radial function given on `0 = r_0 < r_1 < … < r_k`, zero beyond `r_k`.
#[derive(Debug, Clone)]
struct Tabulated {
    dim: usize,
    radii: Vec<f64>,
    values: Vec<f64>,
}

impl Tabulated {
    fn at(&self, r: f64) -> f64 {
        let k = self.radii.len();
        if r >= self.radii[k - 1] {
            return 0.0;
        }
        let i = self.radii.partition_point(|&x| x <= r).max(1);
        let (r0, r1) = (self.radii[i - 1], self.radii[i]);
        let s = (r - r0) / (r1 - r0);
        self.values[i - 1] * (1.0 - s) + self.values[i] * s
    }
}

impl RadialDensity for Tabulated {
    fn dim(&self) -> usize {
        self.dim
    }

    fn cutoff(&self) -> f64 {
        *self.radii.last().unwrap()
    }

    fn origin_power(&self) -> f64 {
        0.0
    }

    fn reduced_log(&self, u: f64) -> f64 {
        self.at((-u).exp())
    }

    fn log_tail_exponent(&self) -> f64 {
        0.0
    }

    fn is_zero(&self) -> bool {
        self.values.iter().all(|&v| v == 0.0)
    }
}

/// Check the two supersolution inequalities at `(radius, t)` samples with the
/// default quadrature settings.
pub fn verify_supersolution_case_a(
    params: &SystemParams,
    alpha: f64,
    mu: &RadialProfile,
    nu: &RadialProfile,
    samples: &[(f64, f64)],
) -> Result<SupersolutionReport> {
    verify_supersolution_case_a_with(
        params,
        alpha,
        mu,
        nu,
        samples,
        &SupersolutionOptions::default(),
    )
}

pub fn verify_supersolution_case_a_with(
    params: &SystemParams,
    alpha: f64,
    mu: &RadialProfile,
    nu: &RadialProfile,
    samples: &[(f64, f64)],
    options: &SupersolutionOptions,
) -> Result<SupersolutionReport> {
    let label = classify(params).label;
    if label != Case::A {
        return Err(Error::CaseMismatch {
            requested: Case::A.to_string(),
            actual: label.to_string(),
        });
    }
    let (p, q, n) = (params.p, params.q, params.n);
    let alpha_max = (p * q + q) / (q + 1.0);
    if !(alpha > 1.0 && alpha < alpha_max) {
        return Err(Error::InvalidParams(format!(
            "alpha must lie in (1, {alpha_max}), got {alpha}"
        )));
    }
    if mu.dim != n || nu.dim != n {
        return Err(Error::InvalidParams(
            "profile dimension differs from N".into(),
        ));
    }
    if samples
        .iter()
        .any(|&(r, t)| !(r >= 0.0 && t > 0.0 && t.is_finite()))
    {
        return Err(Error::InvalidParams(
            "samples need radius >= 0 and t > 0".into(),
        ));
    }
    let dprime = params.d1.max(params.d2);
    let kappa = (dprime / params.d).powf(n as f64 / 2.0);
    let beta_u = alpha * (q + 1.0) / (p + 1.0);
    let mu_d = mu.scaled_by(kappa)?;
    let nu_d = nu.scaled_by(kappa)?;
    let mu_pow = TransformedProfile::power(&mu_d, beta_u)?;
    let nu_pow = TransformedProfile::power(&nu_d, alpha)?;
    let exp_u = (p + 1.0) / (alpha * (q + 1.0));
    let exp_v = 1.0 / alpha;

    let w_at = |rho: f64, s: f64| -> Result<f64> {
        Ok(semigroup_radial_at(&mu_pow, dprime, s, rho)?
            + semigroup_radial_at(&nu_pow, dprime, s, rho)?)
    };
    let reach = mu.cutoff.max(nu.cutoff);
    let reach = if reach.is_finite() { reach } else { 20.0 };

    let mut times: Vec<f64> = samples.iter().map(|s| s.1).collect();
    times.sort_by(|a, b| a.total_cmp(b));
    times.dedup();

    let mut gamma = 0.0f64;
    let mut out = Vec::with_capacity(samples.len());
    for &t in &times {
        let radii: Vec<f64> = samples.iter().filter(|s| s.1 == t).map(|s| s.0).collect();
        let sup_w =
            semigroup_radial_sup(&mu_pow, dprime, t)? + semigroup_radial_sup(&nu_pow, dprime, t)?;
        gamma = gamma.max(t.powf(alpha * (q + 1.0) / params.pq1()) * sup_w);

        let grid = TimeGrid::new(t, options.nodes, options.ratio)?;
        let last = grid.len() - 1;
        let weights = grid.duhamel_weights(DuhamelRule::Simpson).swap_remove(last);
        // Σ_j W_j S(t - s_j) ū(s_j)^q and Σ_j W_j S(t - s_j) v̄(s_j)^p at each radius
        let contributions: Vec<Vec<(f64, f64)>> = grid
            .nodes
            .par_iter()
            .enumerate()
            .map(|(j, &s)| -> Result<Vec<(f64, f64)>> {
                let wj = weights[j];
                if wj == 0.0 {
                    return Ok(vec![(0.0, 0.0); radii.len()]);
                }
                if j == last {
                    return radii
                        .iter()
                        .map(|&rho| {
                            let w = w_at(rho, s)?;
                            let ub = 2.0 * w.powf(exp_u);
                            let vb = 2.0 * w.powf(exp_v);
                            Ok((wj * ub.powf(q), wj * vb.powf(p)))
                        })
                        .collect();
                }
                let width = (dprime * s).sqrt();
                let mut table_r = vec![0.0];
                table_r.extend(logspace(
                    width * 1e-3,
                    reach + 10.0 * width,
                    options.table_points,
                ));
                let w_tab = table_r
                    .iter()
                    .map(|&r| w_at(r, s))
                    .collect::<Result<Vec<f64>>>()?;
                let uq = Tabulated {
                    dim: n,
                    radii: table_r.clone(),
                    values: w_tab
                        .iter()
                        .map(|w| (2.0 * w.powf(exp_u)).powf(q))
                        .collect(),
                };
                let vp = Tabulated {
                    dim: n,
                    radii: table_r,
                    values: w_tab
                        .iter()
                        .map(|w| (2.0 * w.powf(exp_v)).powf(p))
                        .collect(),
                };
                radii
                    .iter()
                    .map(|&rho| {
                        let dt = t - s;
                        Ok((
                            wj * semigroup_radial_at(&uq, dprime, dt, rho)?,
                            wj * semigroup_radial_at(&vp, dprime, dt, rho)?,
                        ))
                    })
                    .collect()
            })
            .collect::<Result<_>>()?;

        for (k, &rho) in radii.iter().enumerate() {
            let (int_uq, int_vp) = contributions
                .iter()
                .fold((0.0, 0.0), |acc, c| (acc.0 + c[k].0, acc.1 + c[k].1));
            let w = w_at(rho, t)?;
            let ubar = 2.0 * w.powf(exp_u);
            let vbar = 2.0 * w.powf(exp_v);
            let lhs_v = semigroup_radial_at(&nu_d, dprime, t, rho)? + kappa * int_uq;
            let lhs_u = semigroup_radial_at(&mu_d, dprime, t, rho)? + kappa * int_vp;
            out.push(SupersolutionSample {
                radius: rho,
                t,
                w,
                ubar,
                vbar,
                lhs_u,
                lhs_v,
                slack_u: ubar - lhs_u,
                slack_v: vbar - lhs_v,
            });
        }
    }
    // restore the caller's sample order
    let ordered: Vec<SupersolutionSample> = samples
        .iter()
        .map(|&(r, t)| {
            out.iter()
                .find(|s| s.radius == r && s.t == t)
                .cloned()
                .expect("every sample was evaluated")
        })
        .collect();
    let verified = ordered.iter().all(|s| s.slack_u >= 0.0 && s.slack_v >= 0.0);
    Ok(SupersolutionReport {
        params: *params,
        alpha,
        kappa,
        gamma_measured: gamma,
        samples: ordered,
        verified,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::profiles::make_optimal_profile;

    fn grid_samples() -> Vec<(f64, f64)> {
        let mut s = Vec::new();
        for r in [0.0, 0.5, 1.0] {
            for t in [0.1, 0.5, 0.9] {
                s.push((r, t));
            }
        }
        s
    }

    #[test]
    fn zero_data_have_zero_slack() {
        let p = SystemParams::unit(3, 2.0, 3.0).unwrap();
        let z = RadialProfile::zero(3);
        let rep = verify_supersolution_case_a(&p, 1.3, &z, &z, &[(0.0, 0.5), (1.0, 0.1)]).unwrap();
        for s in &rep.samples {
            assert_eq!((s.lhs_u, s.lhs_v, s.ubar, s.vbar), (0.0, 0.0, 0.0, 0.0));
        }
        assert!(rep.verified);
    }

    #[test]
    fn definitional_relations_hold() {
        let p = SystemParams::unit(3, 2.0, 3.0).unwrap();
        let pair = make_optimal_profile(&p, Case::A, 1e-3, 1e-3, None).unwrap();
        let rep = verify_supersolution_case_a(&p, 1.3, &pair.mu, &pair.nu, &[(0.5, 0.5)]).unwrap();
        let s = &rep.samples[0];
        assert!((s.ubar - 2.0 * s.w.powf(3.0 / (1.3 * 4.0))).abs() < 1e-12 * s.ubar);
        assert!((s.vbar - 2.0 * s.w.powf(1.0 / 1.3)).abs() < 1e-12 * s.vbar);
    }

    #[test]
    fn alpha_and_case_are_validated() {
        let p = SystemParams::unit(3, 2.0, 3.0).unwrap();
        let z = RadialProfile::zero(3);
        assert!(verify_supersolution_case_a(&p, 1.0, &z, &z, &[(0.0, 0.5)]).is_err());
        assert!(verify_supersolution_case_a(&p, 2.25, &z, &z, &[(0.0, 0.5)]).is_err());
        let f = SystemParams::unit(1, 2.0, 3.0).unwrap();
        assert!(verify_supersolution_case_a(
            &f,
            1.3,
            &RadialProfile::zero(1),
            &RadialProfile::zero(1),
            &[(0.0, 0.5)]
        )
        .is_err());
    }

    #[test]
    fn small_data_verify_and_large_data_fail() {
        let p = SystemParams::unit(3, 2.0, 3.0).unwrap();
        let small = make_optimal_profile(&p, Case::A, 1e-3, 1e-3, None).unwrap();
        let rep =
            verify_supersolution_case_a(&p, 1.3, &small.mu, &small.nu, &grid_samples()).unwrap();
        assert!(rep.verified, "{:?}", rep.samples);
        let large = make_optimal_profile(&p, Case::A, 1e3, 1e3, None).unwrap();
        let rep =
            verify_supersolution_case_a(&p, 1.3, &large.mu, &large.nu, &grid_samples()).unwrap();
        assert!(rep
            .samples
            .iter()
            .any(|s| s.slack_u < 0.0 || s.slack_v < 0.0));
    }
}
