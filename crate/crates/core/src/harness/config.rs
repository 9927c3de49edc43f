//! Run configuration: TOML with every default materialized on resolution.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::diagnostics::{
    default_sigma_grid, default_t_grid, perturbed_profile, SufficiencyExtras,
};
use crate::error::{Error, Result};
use crate::exponents::{classify, Case, Power, SystemParams};
use crate::mild::PicardOptions;
use crate::profiles::{make_optimal_profile, ModTable, Modulator, ProfilePair, RadialProfile};
use crate::semigroup::{Domain, DuhamelRule};
use crate::special::logspace;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Task {
    Classify,
    Profile,
    Evolve,
    Check,
    Sweep,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamsSpec {
    pub n: usize,
    pub p: Power,
    pub q: Power,
    #[serde(default = "one")]
    pub d1: f64,
    #[serde(default = "one")]
    pub d2: f64,
}

fn one() -> f64 {
    1.0
}

impl ParamsSpec {
    pub fn build(&self) -> Result<SystemParams> {
        SystemParams::new(self.n, self.p, self.q, self.d1, self.d2)
    }
}

/// A slowly varying factor: `identity`, `log_decay` with exponent `k`, or a
/// `table` given inline (`radii`, `values`) or as a two-column `file`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ModulatorSpec {
    Identity,
    LogDecay {
        k: f64,
    },
    Table {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        file: Option<PathBuf>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        radii: Option<Vec<f64>>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        values: Option<Vec<f64>>,
    },
}

impl ModulatorSpec {
    /// Relative table paths are taken relative to `base`.
    pub fn build(&self, base: &Path) -> Result<Modulator> {
        match self {
            ModulatorSpec::Identity => Ok(Modulator::Identity),
            ModulatorSpec::LogDecay { k } => Modulator::log_decay(*k),
            ModulatorSpec::Table {
                file,
                radii,
                values,
            } => match (file, radii, values) {
                (Some(f), None, None) => Ok(Modulator::Table(ModTable::load(&base.join(f))?)),
                (None, Some(r), Some(v)) => {
                    Ok(Modulator::Table(ModTable::new(r.clone(), v.clone())?))
                }
                _ => Err(Error::Config(
                    "a modulator table needs either `file` or both `radii` and `values`".into(),
                )),
            },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProfileKind {
    /// The borderline family of the case, amplitudes `c1`, `c2`.
    #[default]
    Optimal,
    /// `μ ≡ c1`, `ν ≡ c2` on the whole space.
    Constant,
    /// Densities given field by field in `mu` and `nu`, scaled by `c1` and `c2`.
    Custom,
    Zero,
}

/// `amplitude · r^{-power} · |log(r/2)|^{logpow} · h(r)` on `B(0, cutoff)`, plus `atom δ0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DensitySpec {
    #[serde(default)]
    pub amplitude: f64,
    #[serde(default)]
    pub power: f64,
    #[serde(default)]
    pub logpow: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub modulator: Option<ModulatorSpec>,
    #[serde(default = "one")]
    pub cutoff: f64,
    #[serde(default)]
    pub atom: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProfileSpec {
    pub kind: ProfileKind,
    /// Omitted means the case of the parameters.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub case: Option<Case>,
    pub c1: f64,
    pub c2: f64,
    /// `h` for cases D and E.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub modulator: Option<ModulatorSpec>,
    /// Replace `μ` by its over-singular perturbation.
    pub perturb: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mu: Option<DensitySpec>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub nu: Option<DensitySpec>,
}

impl Default for ProfileSpec {
    fn default() -> Self {
        ProfileSpec {
            kind: ProfileKind::Optimal,
            case: None,
            c1: 1.0,
            c2: 1.0,
            modulator: None,
            perturb: false,
            mu: None,
            nu: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridSpec {
    /// Half-width `L` of the box `[-L, L)^N`.
    pub halfwidth: f64,
    /// Points `M` per axis; omitted means a dimension-dependent default.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub points: Option<usize>,
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec {
            halfwidth: 8.0,
            points: None,
        }
    }
}

pub fn default_points(n: usize) -> usize {
    match n {
        1 => 1024,
        2 => 128,
        _ => 48,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TimeSpec {
    pub t_end: f64,
    pub nodes: usize,
    pub ratio: f64,
    pub rule: DuhamelRule,
}

impl Default for TimeSpec {
    fn default() -> Self {
        let o = PicardOptions::default();
        TimeSpec {
            t_end: 1.0,
            nodes: o.nodes,
            ratio: o.ratio,
            rule: o.rule,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverSpec {
    pub max_iter: usize,
    pub cap: f64,
    pub growth_cap: f64,
    pub tol_conv: f64,
    pub monotonicity_tol: f64,
    pub checkpoints: usize,
    pub coupling_off: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub p_override: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub q_override: Option<f64>,
    pub domain: Domain,
    /// Write the checkpoint fields of evolve runs.
    pub write_fields: bool,
}

impl Default for SolverSpec {
    fn default() -> Self {
        let o = PicardOptions::default();
        SolverSpec {
            max_iter: o.max_iter,
            cap: o.cap,
            growth_cap: o.growth_cap,
            tol_conv: o.tol_conv,
            monotonicity_tol: o.monotonicity_tol,
            checkpoints: o.checkpoints,
            coupling_off: o.coupling_off,
            p_override: None,
            q_override: None,
            domain: o.domain,
            write_fields: true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckKind {
    #[default]
    Necessary,
    Sufficient,
    Lemma21,
    Lemma22,
    Lemma23,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CheckSpec {
    pub kind: CheckKind,
    /// Horizon of the necessary conditions.
    #[serde(rename = "T")]
    pub horizon: f64,
    /// σ or t values; omitted means the default grid of the check.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub grid: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub beta: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub r_star: Option<f64>,
    /// `f` of the D/E sufficiency condition or of the annulus estimate.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub f: Option<ModulatorSpec>,
    /// Power `a` of the annulus estimate or the log-weighted integral.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub a: Option<f64>,
    /// Log exponent `b` of the log-weighted integral.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub b: Option<f64>,
}

impl Default for CheckSpec {
    fn default() -> Self {
        CheckSpec {
            kind: CheckKind::Necessary,
            horizon: 1.0,
            grid: None,
            alpha: None,
            beta: None,
            r_star: None,
            f: None,
            a: None,
            b: None,
        }
    }
}

impl CheckSpec {
    pub fn default_grid(&self) -> Vec<f64> {
        match self.kind {
            CheckKind::Necessary => default_sigma_grid(self.horizon),
            CheckKind::Sufficient => default_t_grid(),
            CheckKind::Lemma21 => logspace(1e-4, 1e-1, 20),
            CheckKind::Lemma22 => logspace(1e-5, 1e-2, 13),
            CheckKind::Lemma23 => logspace(1e-6, 0.9, 33),
        }
    }

    pub fn extras(&self, base: &Path) -> Result<SufficiencyExtras> {
        Ok(SufficiencyExtras {
            alpha: self.alpha,
            beta: self.beta,
            r_star: self.r_star,
            f: self.f.as_ref().map(|f| f.build(base)).transpose()?,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepParam {
    #[default]
    C1,
    C2,
    /// Both constants times a common factor.
    Joint,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepSpec {
    pub param: SweepParam,
    pub lo: f64,
    pub hi: f64,
    pub steps: usize,
    /// Factor by which a bracket end is moved when it has the wrong verdict.
    pub expand_factor: f64,
    pub max_expansions: usize,
    /// Worker threads; omitted means `PARASLAB_WORKERS` or all cores.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub workers: Option<usize>,
}

impl Default for SweepSpec {
    fn default() -> Self {
        SweepSpec {
            param: SweepParam::C1,
            lo: 1e-3,
            hi: 1e3,
            steps: 20,
            expand_factor: 4.0,
            max_expansions: 8,
            workers: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub task: Task,
    #[serde(default = "default_output")]
    pub output: PathBuf,
    pub params: ParamsSpec,
    #[serde(default)]
    pub profile: ProfileSpec,
    #[serde(default)]
    pub grid: GridSpec,
    #[serde(default)]
    pub time: TimeSpec,
    #[serde(default)]
    pub solver: SolverSpec,
    #[serde(default)]
    pub check: CheckSpec,
    #[serde(default)]
    pub sweep: SweepSpec,
    /// Directory that relative table paths refer to.
    #[serde(skip)]
    pub base_dir: PathBuf,
}

fn default_output() -> PathBuf {
    PathBuf::from("out")
}

fn config_error(e: impl std::fmt::Display) -> Error {
    Error::Config(e.to_string())
}

impl RunConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let table: toml::Table = text.parse().map_err(config_error)?;
        Self::from_table(table)
    }

    pub fn from_table(table: toml::Table) -> Result<Self> {
        let cfg: RunConfig = toml::Value::Table(table).try_into().map_err(config_error)?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        let mut cfg = Self::from_toml_str(&text)?;
        cfg.base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok(cfg)
    }

    /// Check cross-field constraints and fill in every derived default.
    pub fn resolve(mut self) -> Result<Self> {
        let params = self.params.build().map_err(config_error)?;
        let actual = classify(&params).label;
        match self.profile.case {
            Some(c) if c != actual => {
                return Err(Error::Config(format!(
                    "profile.case = {c} but the parameters are in case {actual}"
                )));
            }
            _ => self.profile.case = Some(actual),
        }
        if self.grid.points.is_none() {
            self.grid.points = Some(default_points(params.n));
        }
        if self.check.grid.is_none() {
            self.check.grid = Some(self.check.default_grid());
        }
        let needs_profile = matches!(self.task, Task::Profile | Task::Evolve | Task::Sweep)
            || self.task == Task::Check
                && matches!(
                    self.check.kind,
                    CheckKind::Necessary | CheckKind::Sufficient | CheckKind::Lemma21
                );
        if needs_profile
            && self.profile.kind == ProfileKind::Optimal
            && matches!(actual, Case::D | Case::E)
            && self.profile.modulator.is_none()
        {
            return Err(Error::Config(format!(
                "case {actual} needs profile.modulator (the factor h)"
            )));
        }
        if self.profile.kind == ProfileKind::Custom
            && (self.profile.mu.is_none() || self.profile.nu.is_none())
        {
            return Err(Error::Config(
                "profile.kind = \"custom\" needs both [profile.mu] and [profile.nu]".into(),
            ));
        }
        if self.task == Task::Sweep && !(self.sweep.lo > 0.0 && self.sweep.lo < self.sweep.hi) {
            return Err(Error::Config(format!(
                "sweep needs 0 < lo < hi, got {} and {}",
                self.sweep.lo, self.sweep.hi
            )));
        }
        if self.task == Task::Sweep && !(self.sweep.expand_factor > 1.0) {
            return Err(Error::Config("sweep.expand_factor must exceed 1".into()));
        }
        // modulator tables must load
        if let Some(m) = &self.profile.modulator {
            m.build(&self.base_dir).map_err(config_error)?;
        }
        Ok(self)
    }

    pub fn system(&self) -> Result<SystemParams> {
        self.params.build()
    }

    pub fn case(&self) -> Result<Case> {
        Ok(self.profile.case.unwrap_or(classify(&self.system()?).label))
    }

    pub fn points(&self) -> usize {
        self.grid.points.unwrap_or(default_points(self.params.n))
    }

    pub fn picard_options(&self) -> PicardOptions {
        PicardOptions {
            max_iter: self.solver.max_iter,
            nodes: self.time.nodes,
            ratio: self.time.ratio,
            rule: self.time.rule,
            cap: self.solver.cap,
            growth_cap: self.solver.growth_cap,
            tol_conv: self.solver.tol_conv,
            monotonicity_tol: self.solver.monotonicity_tol,
            checkpoints: self.solver.checkpoints,
            coupling_off: self.solver.coupling_off,
            p_override: self.solver.p_override,
            q_override: self.solver.q_override,
            domain: self.solver.domain,
        }
    }

    /// The initial pair with amplitudes `(c1, c2)` in place of the configured ones.
    pub fn profile_pair_with(&self, c1: f64, c2: f64) -> Result<ProfilePair> {
        let params = self.system()?;
        let case = self.case()?;
        let n = params.n;
        let spec = &self.profile;
        let pair = match spec.kind {
            ProfileKind::Optimal => {
                let h = spec
                    .modulator
                    .as_ref()
                    .map(|m| m.build(&self.base_dir))
                    .transpose()?;
                make_optimal_profile(&params, case, c1, c2, h)?
            }
            ProfileKind::Constant => ProfilePair {
                case,
                mu: RadialProfile::constant(n, c1)?,
                nu: RadialProfile::constant(n, c2)?,
            },
            ProfileKind::Zero => ProfilePair {
                case,
                mu: RadialProfile::zero(n),
                nu: RadialProfile::zero(n),
            },
            ProfileKind::Custom => {
                let build = |d: &DensitySpec, scale: f64| -> Result<RadialProfile> {
                    let m = d
                        .modulator
                        .as_ref()
                        .map(|m| m.build(&self.base_dir))
                        .transpose()?
                        .unwrap_or_default();
                    RadialProfile::new(
                        n,
                        scale * d.amplitude,
                        d.power,
                        d.logpow,
                        m,
                        d.cutoff,
                        scale * d.atom,
                    )
                };
                let (mu, nu) = (spec.mu.as_ref(), spec.nu.as_ref());
                let missing = || Error::Config("custom profile needs mu and nu".into());
                ProfilePair {
                    case,
                    mu: build(mu.ok_or_else(missing)?, c1)?,
                    nu: build(nu.ok_or_else(missing)?, c2)?,
                }
            }
        };
        if spec.perturb {
            perturbed_profile(&pair)
        } else {
            Ok(pair)
        }
    }

    pub fn profile_pair(&self) -> Result<ProfilePair> {
        self.profile_pair_with(self.profile.c1, self.profile.c2)
    }

    /// TOML text of the resolved configuration.
    pub fn to_toml(&self) -> Result<String> {
        toml::to_string_pretty(self).map_err(config_error)
    }
}
