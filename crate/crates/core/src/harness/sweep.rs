//! Bisection over an amplitude constant between converged and diverged evolutions.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::mild::{picard_evolve, RunStatus};
use crate::profiles::sample_to_grid;

use super::config::{RunConfig, SweepParam};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepPoint {
    pub amplitude: f64,
    pub c1: f64,
    pub c2: f64,
    pub status: RunStatus,
    pub sweeps: usize,
    /// Sup-norms at the last checkpoint of the last iterate.
    pub final_sup_u: f64,
    pub final_sup_v: f64,
    pub warnings: Vec<String>,
}

impl SweepPoint {
    /// Only a converged run counts as a solution; runs that hit the iteration
    /// limit are grouped with diverged ones.
    pub fn converged(&self) -> bool {
        self.status == RunStatus::Converged
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepResult {
    pub param: SweepParam,
    pub bracket_history: Vec<(f64, f64)>,
    /// Every run, in amplitude order.
    pub points: Vec<SweepPoint>,
    pub established: bool,
    pub threshold: Option<f64>,
    pub bracket_width: Option<f64>,
    /// Pairs (converged amplitude, diverged amplitude) in the wrong order.
    pub monotonicity_violations: Vec<(f64, f64)>,
    pub message: String,
}

/// Evolve the configured problem with the swept constant set to `x`.
pub fn run_point(cfg: &RunConfig, param: SweepParam, x: f64) -> Result<SweepPoint> {
    let (b1, b2) = (cfg.profile.c1, cfg.profile.c2);
    let (c1, c2) = match param {
        SweepParam::C1 => (x, b2),
        SweepParam::C2 => (b1, x),
        SweepParam::Joint => (x * b1, x * b2),
    };
    let params = cfg.system()?;
    let pair = cfg.profile_pair_with(c1, c2)?;
    let (l, m) = (cfg.grid.halfwidth, cfg.points());
    let mu = sample_to_grid(&pair.mu, l, m)?;
    let nu = sample_to_grid(&pair.nu, l, m)?;
    let options = cfg.picard_options();
    let report = picard_evolve(
        &params,
        &mu,
        &nu,
        cfg.time.t_end,
        options.max_iter,
        &options,
    )?;
    let last = report.last();
    Ok(SweepPoint {
        amplitude: x,
        c1,
        c2,
        status: report.status,
        sweeps: report.sweeps(),
        final_sup_u: last.sup_u.last().copied().unwrap_or(0.0),
        final_sup_v: last.sup_v.last().copied().unwrap_or(0.0),
        warnings: report.warnings.clone(),
    })
}

/// Find the amplitude separating converged from diverged runs.
///
/// Both ends are evaluated first. An end with the wrong verdict is moved
/// outward by `expand_factor`, at most `max_expansions` times. Once `lo`
/// converges and `hi` diverges the bracket is bisected `steps` times. A final
/// audit withdraws the threshold if any converged amplitude exceeds a diverged one.
pub fn sweep_threshold(
    cfg: &RunConfig,
    param: SweepParam,
    lo: f64,
    hi: f64,
    steps: usize,
) -> Result<SweepResult> {
    if !(lo > 0.0 && lo < hi && hi.is_finite()) {
        return Err(Error::InvalidParams(format!(
            "need 0 < lo < hi, got {lo}, {hi}"
        )));
    }
    let factor = cfg.sweep.expand_factor;
    let mut points = Vec::new();
    let (mut lo, mut hi) = (lo, hi);
    let (a, b) = rayon::join(|| run_point(cfg, param, lo), || run_point(cfg, param, hi));
    let (mut p_lo, mut p_hi) = (a?, b?);
    let mut history = vec![(lo, hi)];
    let mut expansions = 0;
    while !(p_lo.converged() && !p_hi.converged()) && expansions < cfg.sweep.max_expansions {
        expansions += 1;
        let move_lo = !p_lo.converged();
        let move_hi = p_hi.converged();
        let new_lo = if move_lo { lo / factor } else { lo };
        let new_hi = if move_hi { hi * factor } else { hi };
        let (a, b) = rayon::join(
            || move_lo.then(|| run_point(cfg, param, new_lo)).transpose(),
            || move_hi.then(|| run_point(cfg, param, new_hi)).transpose(),
        );
        if let Some(p) = a? {
            points.push(std::mem::replace(&mut p_lo, p));
            lo = new_lo;
        }
        if let Some(p) = b? {
            points.push(std::mem::replace(&mut p_hi, p));
            hi = new_hi;
        }
        history.push((lo, hi));
    }
    let established = p_lo.converged() && !p_hi.converged();
    points.push(p_lo);
    points.push(p_hi);
    let mut message = String::new();
    if established {
        for _ in 0..steps {
            let mid = 0.5 * (lo + hi);
            let p = run_point(cfg, param, mid)?;
            if p.converged() {
                lo = mid;
            } else {
                hi = mid;
            }
            points.push(p);
            history.push((lo, hi));
        }
    } else {
        let all_conv = points.iter().all(SweepPoint::converged);
        let all_div = points.iter().all(|p| !p.converged());
        message = if all_conv {
            "bracket not established, all converged".into()
        } else if all_div {
            "bracket not established, all diverged".into()
        } else {
            "bracket not established, verdicts are not monotone in the amplitude".into()
        };
    }
    points.sort_by(|a, b| a.amplitude.total_cmp(&b.amplitude));
    let mut violations = Vec::new();
    for (i, a) in points.iter().enumerate() {
        for b in &points[..i] {
            if a.converged() && !b.converged() && a.amplitude > b.amplitude {
                violations.push((a.amplitude, b.amplitude));
            }
        }
    }
    let claim = established && violations.is_empty();
    if established && !violations.is_empty() {
        message = format!(
            "threshold withdrawn: {} converged runs lie above diverged ones",
            violations.len()
        );
    } else if claim {
        message = format!("threshold in [{lo:e}, {hi:e}]");
    }
    Ok(SweepResult {
        param,
        bracket_history: history,
        points,
        established,
        threshold: claim.then_some(0.5 * (lo + hi)),
        bracket_width: claim.then_some(hi - lo),
        monotonicity_violations: violations,
        message,
    })
}
