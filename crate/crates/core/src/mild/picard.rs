//! Monotone Picard iteration for the Duhamel form of the system.

use std::time::Instant;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exponents::{classify, Case, SystemParams};
use crate::semigroup::grid::{check_tail, enforce_positivity};
use crate::semigroup::{Domain, DuhamelRule, GridField, Spectral, TimeGrid};

/// Solver settings; every field has a default so configs may list only overrides.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PicardOptions {
    pub max_iter: usize,
    pub nodes: usize,
    pub ratio: f64,
    pub rule: DuhamelRule,
    /// Sup-norm beyond which an iterate counts as diverged.
    pub cap: f64,
    /// Sweep-to-sweep growth factor that counts as divergence from the third sweep on.
    pub growth_cap: f64,
    pub tol_conv: f64,
    pub monotonicity_tol: f64,
    pub checkpoints: usize,
    /// Drop both source terms, leaving two decoupled heat flows.
    pub coupling_off: bool,
    pub p_override: Option<f64>,
    pub q_override: Option<f64>,
    pub domain: Domain,
}

impl Default for PicardOptions {
    fn default() -> Self {
        PicardOptions {
            max_iter: 400,
            nodes: 64,
            ratio: 1.15,
            rule: DuhamelRule::default(),
            cap: 1e8,
            growth_cap: 10.0,
            tol_conv: 1e-8,
            monotonicity_tol: 1e-10,
            checkpoints: 8,
            coupling_off: false,
            p_override: None,
            q_override: None,
            domain: Domain::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RunStatus {
    Converged,
    Diverged,
    MaxIter,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IterationRecord {
    pub n: usize,
    /// Sup-norms of `u_n` and `v_n` at the checkpoint times.
    pub sup_u: Vec<f64>,
    pub sup_v: Vec<f64>,
    /// Relative successive difference against `(u_{n-1}, v_{n-1})`; zero for `n = 0`.
    pub diff: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GridInfo {
    pub dim: usize,
    #[serde(rename = "L")]
    pub halfwidth: f64,
    #[serde(rename = "M")]
    pub points: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TimeGridInfo {
    pub t_end: f64,
    pub nodes: usize,
    pub ratio: f64,
    pub rule: DuhamelRule,
    pub first_node: f64,
    pub checkpoint_times: Vec<f64>,
}

/// Levels at which the sampled initial data are cut off by the grid.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CapInfo {
    pub sup_mu: f64,
    pub sup_nu: f64,
    /// Relative change of the final checkpoint sup-norms under one refinement,
    /// filled in by callers that run the refined problem.
    pub refinement_change: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct MildRunReport {
    pub params: SystemParams,
    pub case: Case,
    pub grid: GridInfo,
    pub timegrid: TimeGridInfo,
    pub iterations: Vec<IterationRecord>,
    pub status: RunStatus,
    pub cap_info: CapInfo,
    pub warnings: Vec<String>,
    /// `u` and `v` of the last iterate at the checkpoint times.
    #[serde(skip)]
    pub u_final: Vec<GridField>,
    #[serde(skip)]
    pub v_final: Vec<GridField>,
    #[serde(skip)]
    pub wall_time: f64,
}

impl MildRunReport {
    pub fn sweeps(&self) -> usize {
        self.iterations.last().map(|r| r.n).unwrap_or(0)
    }

    pub fn last(&self) -> &IterationRecord {
        self.iterations
            .last()
            .expect("a report always holds the initial record")
    }
}

/// Solve `u = S(D1 t)μ + ∫ S(D1(t-s)) v^p ds`, `v = S(D2 t)ν + ∫ S(D2(t-s)) u^q ds`
/// by monotone Picard iteration on a graded time grid.
pub fn picard_evolve(
    params: &SystemParams,
    mu: &GridField,
    nu: &GridField,
    t_end: f64,
    max_iter: usize,
    options: &PicardOptions,
) -> Result<MildRunReport> {
    let start = Instant::now();
    if !mu.same_geometry(nu) {
        return Err(Error::GeometryMismatch(
            "initial data live on different grids".into(),
        ));
    }
    if mu
        .values
        .iter()
        .chain(&nu.values)
        .any(|v| !(v.is_finite() && *v >= 0.0))
    {
        return Err(Error::InvalidParams(
            "initial data must be finite and nonnegative".into(),
        ));
    }
    let grid = TimeGrid::new(t_end, options.nodes, options.ratio)?;
    let p = options.p_override.unwrap_or(params.p);
    let q = options.q_override.unwrap_or(params.q);
    if !(p > 0.0 && q > 0.0) {
        return Err(Error::InvalidParams(format!(
            "source powers must be positive, got p = {p}, q = {q}"
        )));
    }
    let mut warnings = Vec::new();
    let dmax = params.d1.max(params.d2);
    check_tail(mu, dmax * t_end, options.domain)?;
    check_tail(nu, dmax * t_end, options.domain)?;
    if options.domain == Domain::WholeSpace {
        let need = mu.support_radius().max(nu.support_radius()) + 6.0 * (dmax * t_end).sqrt();
        if mu.halfwidth < need {
            warnings.push(format!(
                "box half-width {} below support + 6 sqrt(D t_end) = {need:.4}",
                mu.halfwidth
            ));
        }
    }
    let h = mu.spacing();
    if params.d1.min(params.d2) * grid.nodes[0] < 4.0 * h * h {
        warnings.push(format!(
            "first time node {:.3e} is below the grid diffusion scale 4h²/D = {:.3e}",
            grid.nodes[0],
            4.0 * h * h / params.d1.min(params.d2)
        ));
    }

    let spec = Spectral::for_field(mu);
    let n_nodes = grid.len();
    let checkpoints = grid.checkpoints(options.checkpoints);
    let weights = grid.duhamel_weights(options.rule);
    let mu_hat = spec.forward(&mu.values);
    let nu_hat = spec.forward(&nu.values);

    let linear = |hat: &[Complex64], d: f64| -> Result<Vec<Vec<f64>>> {
        grid.nodes
            .par_iter()
            .map(|&t| {
                let mut s = hat.to_vec();
                spec.apply_multiplier(&mut s, d * t);
                let mut v = spec.inverse(s);
                enforce_positivity(&mut v)?;
                Ok(v)
            })
            .collect()
    };
    let u0 = linear(&mu_hat, params.d1)?;
    let v0 = linear(&nu_hat, params.d2)?;

    let sup = |f: &[f64]| f.iter().fold(0.0f64, |m, &v| m.max(v));
    let record = |n: usize, u: &[Vec<f64>], v: &[Vec<f64>], diff: f64| IterationRecord {
        n,
        sup_u: checkpoints.iter().map(|&i| sup(&u[i])).collect(),
        sup_v: checkpoints.iter().map(|&i| sup(&v[i])).collect(),
        diff,
    };

    let mut iterations = vec![record(0, &u0, &v0, 0.0)];
    let mut u = u0.clone();
    let mut v = v0.clone();
    let mut status = RunStatus::MaxIter;

    for sweep in 1..=max_iter {
        let (u_next, v_next) = if options.coupling_off {
            (u0.clone(), v0.clone())
        } else {
            let f_hat: Vec<Vec<Complex64>> =
                v.par_iter().map(|x| spec.forward(&powered(x, p))).collect();
            let g_hat: Vec<Vec<Complex64>> =
                u.par_iter().map(|x| spec.forward(&powered(x, q))).collect();
            let duhamel = |linear_hat: &[Complex64],
                           src: &[Vec<Complex64>],
                           d: f64|
             -> Result<Vec<Vec<f64>>> {
                (0..n_nodes)
                    .into_par_iter()
                    .map(|i| {
                        let mut acc = linear_hat.to_vec();
                        spec.apply_multiplier(&mut acc, d * grid.nodes[i]);
                        for (j, w) in weights[i].iter().enumerate() {
                            if *w == 0.0 {
                                continue;
                            }
                            let mut term = src[j].clone();
                            spec.apply_multiplier(&mut term, d * (grid.nodes[i] - grid.nodes[j]));
                            for (a, b) in acc.iter_mut().zip(term) {
                                *a += b * *w;
                            }
                        }
                        let mut out = spec.inverse(acc);
                        enforce_positivity(&mut out)?;
                        Ok(out)
                    })
                    .collect()
            };
            (
                duhamel(&mu_hat, &f_hat, params.d1)?,
                duhamel(&nu_hat, &g_hat, params.d2)?,
            )
        };

        // monotonicity of the iterates, node by node and point by point
        let mut excess = 0.0f64;
        for (new, old) in u_next.iter().zip(&u).chain(v_next.iter().zip(&v)) {
            let scale = sup(new).max(1.0);
            for (a, b) in new.iter().zip(old) {
                excess = excess.max((b - a) / scale);
            }
        }
        if excess > options.monotonicity_tol {
            return Err(Error::Monotonicity { sweep, excess });
        }

        let rel_diff = |new: &[Vec<f64>], old: &[Vec<f64>]| {
            new.iter()
                .zip(old)
                .map(|(a, b)| {
                    let s = sup(a);
                    if s == 0.0 {
                        return 0.0;
                    }
                    a.iter()
                        .zip(b)
                        .fold(0.0f64, |m, (x, y)| m.max((x - y).abs()))
                        / s
                })
                .fold(0.0f64, f64::max)
        };
        let diff = rel_diff(&u_next, &u).max(rel_diff(&v_next, &v));
        let growth = u_next
            .iter()
            .zip(&u)
            .chain(v_next.iter().zip(&v))
            .map(|(a, b)| {
                let (sa, sb) = (sup(a), sup(b));
                if sb > 0.0 {
                    sa / sb
                } else {
                    1.0
                }
            })
            .fold(0.0f64, f64::max);
        let peak = u_next
            .iter()
            .chain(&v_next)
            .map(|x| sup(x))
            .fold(0.0f64, f64::max);
        let finite = u_next
            .iter()
            .chain(&v_next)
            .all(|x| x.iter().all(|v| v.is_finite()));

        iterations.push(record(sweep, &u_next, &v_next, diff));
        u = u_next;
        v = v_next;
        if !finite || peak > options.cap || (sweep >= 3 && growth > options.growth_cap) {
            status = RunStatus::Diverged;
            break;
        }
        if diff < options.tol_conv {
            status = RunStatus::Converged;
            break;
        }
    }

    let geometry = mu.geometry();
    let field = |values: &Vec<f64>| GridField {
        dim: geometry.dim,
        points: geometry.points,
        halfwidth: geometry.halfwidth,
        values: values.clone(),
    };
    Ok(MildRunReport {
        params: *params,
        case: classify(params).label,
        grid: GridInfo {
            dim: mu.dim,
            halfwidth: mu.halfwidth,
            points: mu.points,
        },
        timegrid: TimeGridInfo {
            t_end,
            nodes: n_nodes,
            ratio: options.ratio,
            rule: options.rule,
            first_node: grid.nodes[0],
            checkpoint_times: checkpoints.iter().map(|&i| grid.nodes[i]).collect(),
        },
        iterations,
        status,
        cap_info: CapInfo {
            sup_mu: mu.sup(),
            sup_nu: nu.sup(),
            refinement_change: None,
        },
        warnings,
        u_final: checkpoints.iter().map(|&i| field(&u[i])).collect(),
        v_final: checkpoints.iter().map(|&i| field(&v[i])).collect(),
        wall_time: start.elapsed().as_secs_f64(),
    })
}

fn powered(x: &[f64], e: f64) -> Vec<f64> {
    x.iter()
        .map(|&v| if v > 0.0 { v.powf(e) } else { 0.0 })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::semigroup::apply_semigroup_grid;

    fn bump(dim: usize, m: usize, l: f64, a: f64) -> GridField {
        GridField::from_fn(dim, m, l, |x| {
            let r2: f64 = x.iter().map(|v| v * v).sum();
            a * (-4.0 * r2).exp()
        })
        .unwrap()
    }

    #[test]
    fn zero_data_converges_immediately() {
        let p = SystemParams::unit(1, 2.0, 3.0).unwrap();
        let z = GridField::zeros(1, 64, 4.0).unwrap();
        let r = picard_evolve(&p, &z, &z, 0.5, 10, &PicardOptions::default()).unwrap();
        assert_eq!(r.status, RunStatus::Converged);
        assert_eq!(r.sweeps(), 1);
        assert!(r.u_final.iter().chain(&r.v_final).all(|f| f.sup() == 0.0));
    }

    #[test]
    fn coupling_off_is_linear_heat_flow() {
        let p = SystemParams::new(1, 2.0, 3.0, 1.0, 0.5).unwrap();
        let mu = bump(1, 256, 8.0, 3.0);
        let opts = PicardOptions {
            coupling_off: true,
            ..Default::default()
        };
        let r = picard_evolve(&p, &mu, &mu, 1.0, 5, &opts).unwrap();
        assert_eq!(r.status, RunStatus::Converged);
        for (f, &t) in r.u_final.iter().zip(&r.timegrid.checkpoint_times) {
            let exact = apply_semigroup_grid(&mu, 1.0, t).unwrap();
            assert!(f.sup_diff(&exact) < 1e-12);
        }
    }

    #[test]
    fn small_data_converge_monotonically() {
        let p = SystemParams::unit(1, 2.0, 3.0).unwrap();
        let mu = bump(1, 128, 8.0, 0.1);
        let r = picard_evolve(&p, &mu, &mu, 1.0, 100, &PicardOptions::default()).unwrap();
        assert_eq!(r.status, RunStatus::Converged);
        for w in r.iterations.windows(2) {
            for (a, b) in w[0].sup_u.iter().zip(&w[1].sup_u) {
                assert!(b >= a);
            }
        }
    }

    #[test]
    fn large_data_diverge() {
        let p = SystemParams::unit(1, 2.0, 3.0).unwrap();
        let mu = bump(1, 128, 8.0, 50.0);
        let r = picard_evolve(&p, &mu, &mu, 1.0, 200, &PicardOptions::default()).unwrap();
        assert_eq!(r.status, RunStatus::Diverged);
    }

    #[test]
    fn geometry_mismatch_is_rejected() {
        let p = SystemParams::unit(1, 2.0, 3.0).unwrap();
        let a = GridField::zeros(1, 64, 4.0).unwrap();
        let b = GridField::zeros(1, 32, 4.0).unwrap();
        assert!(matches!(
            picard_evolve(&p, &a, &b, 1.0, 5, &PicardOptions::default()),
            Err(Error::GeometryMismatch(_))
        ));
    }
}
