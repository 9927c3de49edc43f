//! Configuration-driven runs: one task per config, artifacts in the output directory.
//!
//! Layout of an output directory:
//!
//! ```text
//! resolved-config.toml   the configuration with every default filled in
//! report.json            the task report
//! tables/*.csv           plot data
//! fields/*.bin           checkpoint fields of evolve runs
//! ```

pub mod config;
pub mod sweep;

use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::diagnostics::{
    lemma21_check, lemma22_check, lemma23_check, necessary_condition_check,
    sufficiency_hypothesis_check, BoundCheckReport,
};
use crate::error::{Error, Result};
use crate::exponents::{classify, derive_exponents, CaseLabel, ExponentSet, SystemParams};
use crate::mild::{picard_evolve, MildRunReport, RunStatus};
use crate::profiles::{sample_to_grid, sup_ball_measure, ProfilePair, RadialDensity};
use crate::special::logspace;

pub use config::{
    CheckKind, CheckSpec, DensitySpec, GridSpec, ModulatorSpec, ParamsSpec, ProfileKind,
    ProfileSpec, RunConfig, SolverSpec, SweepParam, SweepSpec, Task, TimeSpec,
};
pub use sweep::{run_point, sweep_threshold, SweepPoint, SweepResult};

/// Exit status of a completed run.
pub const EXIT_OK: i32 = 0;
/// Failures other than configuration errors.
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_INVALID_CONFIG: i32 = 2;
/// An evolve task ended with a diverged (or unconverged) iteration.
pub const EXIT_DIVERGED: i32 = 3;

/// Environment variable holding the number of sweep workers.
pub const WORKERS_ENV: &str = "PARASLAB_WORKERS";

#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub exit_code: i32,
    pub report: PathBuf,
    /// One-line human-readable result.
    pub summary: String,
}

/// Exit code for an error returned by [`run_config`].
pub fn exit_code_for(err: &Error) -> i32 {
    match err {
        Error::Config(_) => EXIT_INVALID_CONFIG,
        _ => EXIT_FAILURE,
    }
}

#[derive(Debug, Serialize)]
struct ClassifyReport<'a> {
    task: &'static str,
    params: &'a SystemParams,
    #[serde(flatten)]
    label: CaseLabel,
    exponents: ExponentSet,
}

#[derive(Debug, Serialize)]
struct ProfileReport<'a> {
    task: &'static str,
    params: &'a SystemParams,
    pair: &'a ProfilePair,
    sup_ball_mu: Vec<(f64, f64)>,
    sup_ball_nu: Vec<(f64, f64)>,
}

#[derive(Debug, Serialize)]
struct EvolveReport<'a> {
    task: &'static str,
    #[serde(flatten)]
    run: &'a MildRunReport,
}

#[derive(Debug, Serialize)]
struct CheckReport<'a> {
    task: &'static str,
    kind: CheckKind,
    #[serde(flatten)]
    report: &'a BoundCheckReport,
}

#[derive(Debug, Serialize)]
struct SweepReport<'a> {
    task: &'static str,
    #[serde(flatten)]
    result: &'a SweepResult,
}

struct Output {
    dir: PathBuf,
}

impl Output {
    fn create(dir: &Path) -> Result<Self> {
        fs::create_dir_all(dir)?;
        Ok(Output {
            dir: dir.to_path_buf(),
        })
    }

    fn json(&self, value: &impl Serialize) -> Result<PathBuf> {
        let path = self.dir.join("report.json");
        let mut w = BufWriter::new(fs::File::create(&path)?);
        serde_json::to_writer_pretty(&mut w, value).map_err(|e| Error::Io(e.into()))?;
        writeln!(w)?;
        w.flush()?;
        Ok(path)
    }

    fn table(
        &self,
        name: &str,
        header: &[&str],
        rows: impl IntoIterator<Item = Vec<f64>>,
    ) -> Result<()> {
        let dir = self.dir.join("tables");
        fs::create_dir_all(&dir)?;
        let mut w = BufWriter::new(fs::File::create(dir.join(format!("{name}.csv")))?);
        writeln!(w, "{}", header.join(","))?;
        for row in rows {
            let cells: Vec<String> = row.iter().map(|v| format!("{v:e}")).collect();
            writeln!(w, "{}", cells.join(","))?;
        }
        w.flush()?;
        Ok(())
    }

    fn writer(&self, sub: &str, name: &str) -> Result<BufWriter<fs::File>> {
        let dir = self.dir.join(sub);
        fs::create_dir_all(&dir)?;
        Ok(BufWriter::new(fs::File::create(dir.join(name))?))
    }
}

/// Validate, resolve and run a configuration, writing all artifacts.
///
/// Errors of kind [`Error::Config`] map to exit code 2 via [`exit_code_for`].
pub fn run_config(config: RunConfig) -> Result<Outcome> {
    let cfg = config.resolve()?;
    let out = Output::create(&cfg.output)?;
    fs::write(out.dir.join("resolved-config.toml"), cfg.to_toml()?)?;
    let params = cfg.system()?;
    match cfg.task {
        Task::Classify => {
            let label = classify(&params);
            let report = out.json(&ClassifyReport {
                task: "classify",
                params: &params,
                label: label.clone(),
                exponents: derive_exponents(&params),
            })?;
            Ok(Outcome {
                exit_code: EXIT_OK,
                report,
                summary: format!("case {}", label.label),
            })
        }
        Task::Profile => run_profile(&cfg, &params, &out),
        Task::Evolve => run_evolve(&cfg, &params, &out),
        Task::Check => run_check(&cfg, &params, &out),
        Task::Sweep => run_sweep(&cfg, &out),
    }
}

fn run_profile(cfg: &RunConfig, params: &SystemParams, out: &Output) -> Result<Outcome> {
    let pair = cfg.profile_pair()?;
    let radii = logspace(1e-4, 1.0, 41);
    let balls = |d: &dyn RadialDensity| -> Result<Vec<(f64, f64)>> {
        radii
            .iter()
            .map(|&s| {
                Ok((
                    s,
                    if d.locally_finite() {
                        sup_ball_measure(d, s)?
                    } else {
                        f64::INFINITY
                    },
                ))
            })
            .collect()
    };
    let (bm, bn) = (balls(&pair.mu)?, balls(&pair.nu)?);
    out.table(
        "profile",
        &["r", "mu", "nu", "sup_ball_mu", "sup_ball_nu"],
        radii
            .iter()
            .enumerate()
            .map(|(i, &r)| vec![r, pair.mu.value(r), pair.nu.value(r), bm[i].1, bn[i].1]),
    )?;
    let report = out.json(&ProfileReport {
        task: "profile",
        params,
        pair: &pair,
        sup_ball_mu: bm,
        sup_ball_nu: bn,
    })?;
    Ok(Outcome {
        exit_code: EXIT_OK,
        report,
        summary: format!("case {} profile written", pair.case),
    })
}

fn run_evolve(cfg: &RunConfig, params: &SystemParams, out: &Output) -> Result<Outcome> {
    let pair = cfg.profile_pair()?;
    let (l, m) = (cfg.grid.halfwidth, cfg.points());
    let mu = sample_to_grid(&pair.mu, l, m)?;
    let nu = sample_to_grid(&pair.nu, l, m)?;
    let options = cfg.picard_options();
    let run = picard_evolve(params, &mu, &nu, cfg.time.t_end, options.max_iter, &options)?;
    out.table(
        "iterations",
        &["n", "diff", "sup_u_end", "sup_v_end"],
        run.iterations.iter().map(|r| {
            vec![
                r.n as f64,
                r.diff,
                r.sup_u.last().copied().unwrap_or(0.0),
                r.sup_v.last().copied().unwrap_or(0.0),
            ]
        }),
    )?;
    let last = run.last();
    out.table(
        "checkpoints",
        &["t", "sup_u", "sup_v"],
        run.timegrid
            .checkpoint_times
            .iter()
            .enumerate()
            .map(|(k, &t)| vec![t, last.sup_u[k], last.sup_v[k]]),
    )?;
    if cfg.solver.write_fields {
        for (k, (u, v)) in run.u_final.iter().zip(&run.v_final).enumerate() {
            let mut w = out.writer("fields", &format!("u_{k:02}.bin"))?;
            u.write_bin(&mut w)?;
            w.flush()?;
            let mut w = out.writer("fields", &format!("v_{k:02}.bin"))?;
            v.write_bin(&mut w)?;
            w.flush()?;
        }
    }
    let report = out.json(&EvolveReport {
        task: "evolve",
        run: &run,
    })?;
    let code = if run.status == RunStatus::Converged {
        EXIT_OK
    } else {
        EXIT_DIVERGED
    };
    Ok(Outcome {
        exit_code: code,
        report,
        summary: format!("evolve {:?} after {} sweeps", run.status, run.sweeps()).to_lowercase(),
    })
}

fn run_check(cfg: &RunConfig, params: &SystemParams, out: &Output) -> Result<Outcome> {
    let spec = &cfg.check;
    let grid = spec.grid.clone().unwrap_or_else(|| spec.default_grid());
    let need = |v: Option<f64>, name: &str| {
        v.ok_or_else(|| Error::Config(format!("check.{name} is required for this check")))
    };
    let report = match spec.kind {
        CheckKind::Necessary => {
            let pair = cfg.profile_pair()?;
            necessary_condition_check(params, cfg.case()?, &pair.mu, &pair.nu, spec.horizon, &grid)?
        }
        CheckKind::Sufficient => {
            let pair = cfg.profile_pair()?;
            sufficiency_hypothesis_check(
                params,
                cfg.case()?,
                &pair.mu,
                &pair.nu,
                &spec.extras(&cfg.base_dir)?,
                &grid,
            )?
        }
        CheckKind::Lemma21 => lemma21_check(&cfg.profile_pair()?.mu, &grid)?,
        CheckKind::Lemma22 => {
            let f = spec
                .f
                .as_ref()
                .map(|f| f.build(&cfg.base_dir))
                .transpose()?;
            lemma22_check(
                params.n,
                need(spec.a, "a")?,
                f.as_ref(),
                need(spec.r_star, "r_star")?,
                &grid,
            )?
        }
        CheckKind::Lemma23 => lemma23_check(need(spec.a, "a")?, need(spec.b, "b")?, &grid)?,
    };
    let dir = out.dir.join("tables");
    fs::create_dir_all(&dir)?;
    let mut w = BufWriter::new(fs::File::create(dir.join("check.csv"))?);
    report.write_csv(&mut w)?;
    w.flush()?;
    let path = out.json(&CheckReport {
        task: "check",
        kind: spec.kind,
        report: &report,
    })?;
    Ok(Outcome {
        exit_code: EXIT_OK,
        report: path,
        summary: format!(
            "{}: fitted C {:e}, slope {:.4}, {}",
            report.functional,
            report.fitted_constant,
            report.slope,
            if report.is_bounded() {
                "bounded"
            } else {
                "unbounded-trend"
            }
        ),
    })
}

/// Worker count from the config, then the environment, then all cores.
pub fn worker_count(spec: &SweepSpec) -> Option<usize> {
    spec.workers
        .or_else(|| {
            std::env::var(WORKERS_ENV)
                .ok()
                .and_then(|v| v.trim().parse().ok())
        })
        .filter(|&w| w > 0)
}

fn run_sweep(cfg: &RunConfig, out: &Output) -> Result<Outcome> {
    let s = &cfg.sweep;
    let go = || sweep_threshold(cfg, s.param, s.lo, s.hi, s.steps);
    let result = match worker_count(s) {
        Some(w) => rayon::ThreadPoolBuilder::new()
            .num_threads(w)
            .build()
            .map_err(|e| Error::Config(format!("cannot start {w} workers: {e}")))?
            .install(go)?,
        None => go()?,
    };
    let status_code = |st: RunStatus| match st {
        RunStatus::Converged => 0.0,
        RunStatus::Diverged => 1.0,
        RunStatus::MaxIter => 2.0,
    };
    out.table(
        "sweep",
        &[
            "amplitude",
            "c1",
            "c2",
            "status",
            "sweeps",
            "sup_u_end",
            "sup_v_end",
        ],
        result.points.iter().map(|p| {
            vec![
                p.amplitude,
                p.c1,
                p.c2,
                status_code(p.status),
                p.sweeps as f64,
                p.final_sup_u,
                p.final_sup_v,
            ]
        }),
    )?;
    let report = out.json(&SweepReport {
        task: "sweep",
        result: &result,
    })?;
    Ok(Outcome {
        exit_code: EXIT_OK,
        report,
        summary: result.message.clone(),
    })
}
