use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use paraslab::harness::{exit_code_for, run_config, RunConfig, EXIT_INVALID_CONFIG};
use paraslab::Error;

/// Desk laboratory for u_t = D1 Δu + v^p, v_t = D2 Δv + u^q with singular initial data.
///
/// Every command accepts `--config FILE`; flags override the file. Outputs go
/// to the directory given by `--output` (default `out`).
#[derive(Parser, Debug)]
#[command(name = "paraslab", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Report the case of (N, p, q) and its critical exponents.
    Classify(Common),
    /// Tabulate the initial data and their ball masses.
    Profile(Common),
    /// Run the Picard iteration; exit code 3 when it does not converge.
    Evolve(Common),
    /// Evaluate a bound check.
    #[command(allow_negative_numbers = true)]
    Check {
        /// necessary | sufficient | lemma21 | lemma22 | lemma23
        kind: String,
        #[command(flatten)]
        check: CheckArgs,
        #[command(flatten)]
        common: Common,
    },
    /// Bisect an amplitude constant between converged and diverged runs.
    Sweep {
        #[command(flatten)]
        sweep: SweepArgs,
        #[command(flatten)]
        common: Common,
    },
}

#[derive(Args, Debug, Default)]
struct Common {
    /// TOML configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, short)]
    output: Option<PathBuf>,
    /// Dimension N.
    #[arg(long)]
    n: Option<i64>,
    /// Power p: integer, decimal or rational such as 5/3.
    #[arg(long)]
    p: Option<String>,
    #[arg(long)]
    q: Option<String>,
    #[arg(long)]
    d1: Option<f64>,
    #[arg(long)]
    d2: Option<f64>,
    /// Expected case letter; a mismatch is a configuration error.
    #[arg(long)]
    case: Option<String>,
    /// Profile kind: optimal | constant | custom | zero.
    #[arg(long)]
    profile: Option<String>,
    #[arg(long)]
    c1: Option<f64>,
    #[arg(long)]
    c2: Option<f64>,
    /// Log-decay exponent k of h(r) = |log(r/2)|^-k.
    #[arg(long)]
    k: Option<f64>,
    /// Two-column table file for h.
    #[arg(long)]
    h_table: Option<PathBuf>,
    /// Replace μ by its over-singular perturbation.
    #[arg(long)]
    perturb: bool,
    /// Box half-width L.
    #[arg(long)]
    halfwidth: Option<f64>,
    /// Points M per axis.
    #[arg(long)]
    points: Option<i64>,
    #[arg(long)]
    t_end: Option<f64>,
    #[arg(long)]
    nodes: Option<i64>,
    #[arg(long)]
    ratio: Option<f64>,
    #[arg(long)]
    max_iter: Option<i64>,
    /// whole_space | torus
    #[arg(long)]
    domain: Option<String>,
    #[arg(long)]
    coupling_off: bool,
    /// Arbitrary override `section.key=value` with a TOML value; repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

#[derive(Args, Debug)]
struct CheckArgs {
    /// Horizon T of the necessary conditions.
    #[arg(long = "T")]
    horizon: Option<f64>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    beta: Option<f64>,
    #[arg(long)]
    r_star: Option<f64>,
    #[arg(long)]
    a: Option<f64>,
    #[arg(long)]
    b: Option<f64>,
    /// Comma-separated σ or t values.
    #[arg(long, value_delimiter = ',')]
    grid: Option<Vec<f64>>,
}

#[derive(Args, Debug)]
struct SweepArgs {
    /// c1 | c2 | joint
    #[arg(long)]
    param: Option<String>,
    #[arg(long)]
    lo: Option<f64>,
    #[arg(long)]
    hi: Option<f64>,
    #[arg(long)]
    steps: Option<i64>,
    /// Worker threads (also PARASLAB_WORKERS).
    #[arg(long, env = "PARASLAB_WORKERS")]
    workers: Option<i64>,
}

struct Overrides(toml::Table);

impl Overrides {
    fn set(&mut self, path: &str, value: impl Into<toml::Value>) {
        let mut parts: Vec<&str> = path.split('.').collect();
        let last = parts.pop().unwrap_or(path);
        let mut table = &mut self.0;
        for p in parts {
            let entry = table
                .entry(p)
                .or_insert_with(|| toml::Value::Table(toml::Table::new()));
            if !entry.is_table() {
                *entry = toml::Value::Table(toml::Table::new());
            }
            table = entry.as_table_mut().expect("just made a table");
        }
        table.insert(last.to_string(), value.into());
    }

    fn opt(&mut self, path: &str, value: Option<impl Into<toml::Value>>) {
        if let Some(v) = value {
            self.set(path, v);
        }
    }
}

fn power_value(s: &str) -> toml::Value {
    match s.trim().parse::<i64>() {
        Ok(i) => toml::Value::Integer(i),
        Err(_) => match s.trim().parse::<f64>() {
            Ok(x) if !s.contains('/') => toml::Value::Float(x),
            _ => toml::Value::String(s.trim().to_string()),
        },
    }
}

fn parse_set(item: &str) -> Result<(String, toml::Value), Error> {
    let (key, raw) = item
        .split_once('=')
        .ok_or_else(|| Error::Config(format!("--set expects KEY=VALUE, got {item:?}")))?;
    let value = format!("v = {raw}")
        .parse::<toml::Table>()
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(raw.to_string()));
    Ok((key.trim().to_string(), value))
}

fn build_config(
    task: &str,
    common: &Common,
    extra: impl FnOnce(&mut Overrides),
) -> Result<RunConfig, Error> {
    let (table, base) = match &common.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
            let table: toml::Table = text
                .parse()
                .map_err(|e: toml::de::Error| Error::Config(e.to_string()))?;
            (table, path.parent().map(PathBuf::from).unwrap_or_default())
        }
        None => (toml::Table::new(), PathBuf::new()),
    };
    let mut o = Overrides(table);
    o.set("task", task);
    o.opt(
        "output",
        common.output.as_ref().map(|p| p.display().to_string()),
    );
    o.opt("params.n", common.n);
    o.opt("params.p", common.p.as_deref().map(power_value));
    o.opt("params.q", common.q.as_deref().map(power_value));
    o.opt("params.d1", common.d1);
    o.opt("params.d2", common.d2);
    o.opt(
        "profile.case",
        common.case.as_ref().map(|c| c.to_uppercase()),
    );
    o.opt("profile.kind", common.profile.clone());
    o.opt("profile.c1", common.c1);
    o.opt("profile.c2", common.c2);
    if let Some(k) = common.k {
        let mut t = toml::Table::new();
        t.insert("kind".into(), "log_decay".into());
        t.insert("k".into(), k.into());
        o.set("profile.modulator", t);
    }
    if let Some(f) = &common.h_table {
        let mut t = toml::Table::new();
        t.insert("kind".into(), "table".into());
        let f = std::path::absolute(f).unwrap_or_else(|_| f.clone());
        t.insert("file".into(), f.display().to_string().into());
        o.set("profile.modulator", t);
    }
    if common.perturb {
        o.set("profile.perturb", true);
    }
    o.opt("grid.halfwidth", common.halfwidth);
    o.opt("grid.points", common.points);
    o.opt("time.t_end", common.t_end);
    o.opt("time.nodes", common.nodes);
    o.opt("time.ratio", common.ratio);
    o.opt("solver.max_iter", common.max_iter);
    o.opt("solver.domain", common.domain.clone());
    if common.coupling_off {
        o.set("solver.coupling_off", true);
    }
    extra(&mut o);
    for item in &common.set {
        let (k, v) = parse_set(item)?;
        o.set(&k, v);
    }
    let mut cfg = RunConfig::from_table(o.0)?;
    cfg.base_dir = base;
    Ok(cfg)
}

fn config_from_cli(cli: Cli) -> Result<RunConfig, Error> {
    match cli.command {
        Command::Classify(c) => build_config("classify", &c, |_| {}),
        Command::Profile(c) => build_config("profile", &c, |_| {}),
        Command::Evolve(c) => build_config("evolve", &c, |_| {}),
        Command::Check {
            kind,
            check,
            common,
        } => build_config("check", &common, |o| {
            o.set("check.kind", kind.clone());
            o.opt("check.T", check.horizon);
            o.opt("check.alpha", check.alpha);
            o.opt("check.beta", check.beta);
            o.opt("check.r_star", check.r_star);
            o.opt("check.a", check.a);
            o.opt("check.b", check.b);
            o.opt("check.grid", check.grid.clone());
        }),
        Command::Sweep { sweep, common } => build_config("sweep", &common, |o| {
            o.opt("sweep.param", sweep.param.clone());
            o.opt("sweep.lo", sweep.lo);
            o.opt("sweep.hi", sweep.hi);
            o.opt("sweep.steps", sweep.steps);
            o.opt("sweep.workers", sweep.workers);
        }),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let cfg = match config_from_cli(cli) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_INVALID_CONFIG as u8);
        }
    };
    match run_config(cfg) {
        Ok(outcome) => {
            println!("{}", outcome.summary);
            println!("report: {}", outcome.report.display());
            ExitCode::from(outcome.exit_code as u8)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code_for(&e) as u8)
        }
    }
}
