//! `ccl`: run closed-loop episodes, parameter sweeps and standalone
//! discovery from the command line.
//!
//! Exit codes: 0 on success, 1 for configuration, usage and input-shape
//! errors, 2 for runtime failures.

mod manifest;

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{Context, Result};
use ccl_core::experiment::{
    aggregate, aggregate_csv, boxplot_csv, run_episodes, sweep, sweep_csv, EpisodeConfig, CONFIG_KEYS,
};
use ccl_core::graph::write_graph;
use ccl_core::idiscovery::discover_interventional;
use ccl_core::odiscovery::discover;
use ccl_core::{ConstraintList, Series};
use clap::{Args, Parser, Subcommand};

use manifest::{Manifest, Override, Phases};

/// Seed used when neither the config nor the flags set one.
const SEED_ENV: &str = "CCL_SEED";

#[derive(Parser, Debug)]
#[command(name = "ccl", version, about = "Causal control laboratory")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run seeded closed-loop episodes.
    Run {
        #[command(flatten)]
        common: Common,
        /// Number of episodes (overrides the `episodes` config key).
        #[arg(long)]
        episodes: Option<usize>,
    },
    /// Run the same episodes for every value of one parameter.
    Sweep {
        #[command(flatten)]
        common: Common,
        /// Parameter to vary.
        #[arg(long)]
        param: String,
        /// Comma-separated parameter values.
        #[arg(long)]
        values: String,
        /// Episodes per value.
        #[arg(long)]
        episodes: Option<usize>,
    },
    /// Discover a graph from a data CSV.
    Discover {
        /// Series CSV: `t,x0..x{n-1}` optionally followed by `do0..do{n-1}`.
        #[arg(long)]
        data: PathBuf,
        /// Constraint CSV to use instead of deriving one from the data.
        #[arg(long)]
        constraints: Option<PathBuf>,
        /// Output graph file.
        #[arg(long)]
        out: PathBuf,
        /// Where derived constraints go; defaults to `<out>.constraints.csv`.
        #[arg(long)]
        constraints_out: Option<PathBuf>,
        /// Config file for the discovery keys (`tau_max`, `alpha_obs`, ...).
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long = "set", value_name = "KEY=VALUE")]
        sets: Vec<String>,
    },
    /// Print the resolved config in the file format `--config` reads.
    Config {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long = "set", value_name = "KEY=VALUE")]
        sets: Vec<String>,
    },
    /// Re-run a manifest and check every artifact hash.
    Replay {
        #[arg(long)]
        manifest: PathBuf,
        /// Directory for the regenerated artifacts.
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 1)]
        jobs: usize,
    },
}

#[derive(Args, Debug)]
struct Common {
    /// Flat `key = value` config file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
    /// Base seed; episode `l` uses `seed + l`.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads. Outputs do not depend on it.
    #[arg(long, default_value_t = 1)]
    jobs: usize,
    /// Override one config key; repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    sets: Vec<String>,
}

/// Bad input from the user: exit code 1.
#[derive(Debug)]
struct UsageError(String);

impl fmt::Display for UsageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

fn usage(msg: impl Into<String>) -> anyhow::Error {
    UsageError(msg.into()).into()
}

fn exit_code(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if cause.is::<UsageError>() {
            return 1;
        }
        if let Some(e) = cause.downcast_ref::<ccl_core::Error>() {
            return match e {
                ccl_core::Error::Config { .. }
                | ccl_core::Error::Parse { .. }
                | ccl_core::Error::Shape(_)
                | ccl_core::Error::UnknownParam { .. } => 1,
                _ => 2,
            };
        }
    }
    2
}

/// Config after file, environment and flag overrides.
struct Resolved {
    cfg: EpisodeConfig,
    episodes: usize,
    overrides: Vec<Override>,
}

impl Resolved {
    fn apply(&mut self, key: &str, value: &str, source: &str) -> Result<()> {
        let value = value.trim();
        if key == "episodes" {
            self.episodes = value
                .parse()
                .map_err(|_| usage(format!("config key `episodes`: cannot parse `{value}`")))?;
        } else {
            self.cfg.set(key, value)?;
        }
        self.overrides.push(Override { key: key.to_string(), value: value.to_string(), source: source.to_string() });
        Ok(())
    }
}

/// Precedence, lowest first: defaults, `CCL_SEED`, config file, `--set`,
/// `--seed`.
fn resolve(config: Option<&Path>, sets: &[String], seed: Option<u64>) -> Result<Resolved> {
    let mut r = Resolved { cfg: EpisodeConfig::default(), episodes: 1, overrides: Vec::new() };
    if let Ok(v) = std::env::var(SEED_ENV) {
        r.apply("seed", &v, "env").map_err(|_| usage(format!("{SEED_ENV}: cannot parse `{v}` as a seed")))?;
    }
    if let Some(path) = config {
        let text = fs::read_to_string(path)
            .map_err(|e| usage(format!("cannot read config {}: {e}", path.display())))?;
        let source = format!("file:{}", path.display());
        for (n, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| usage(format!("{}:{}: expected `key = value`, got `{line}`", path.display(), n + 1)))?;
            r.apply(k.trim(), v, &source).with_context(|| format!("{}:{}", path.display(), n + 1))?;
        }
    }
    for s in sets {
        let (k, v) = s.split_once('=').ok_or_else(|| usage(format!("--set expects KEY=VALUE, got `{s}`")))?;
        r.apply(k.trim(), v, "set")?;
    }
    if let Some(seed) = seed {
        r.apply("seed", &seed.to_string(), "flag")?;
    }
    r.cfg.validate()?;
    if r.episodes == 0 {
        return Err(usage("config key `episodes`: must be at least 1"));
    }
    Ok(r)
}

fn check_jobs(jobs: usize) -> Result<()> {
    if jobs == 0 {
        return Err(usage("--jobs must be at least 1"));
    }
    Ok(())
}

fn episode_seeds(cfg: &EpisodeConfig, episodes: usize) -> Vec<u64> {
    (0..episodes as u64).map(|l| cfg.seed.wrapping_add(l)).collect()
}

fn cmd_run(r: Resolved, jobs: usize, out: &Path) -> Result<Manifest> {
    check_jobs(jobs)?;
    let mut phases = Phases::default();
    let t = Instant::now();
    let results = run_episodes(&r.cfg, r.episodes, jobs)?;
    let agg = aggregate(&results)?;
    phases.push("episodes", t);

    let t = Instant::now();
    let mut m = Manifest::new("run", &r.cfg, r.episodes, jobs, r.overrides);
    m.seeds = episode_seeds(&r.cfg, r.episodes);
    fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    for (l, e) in results.iter().enumerate() {
        m.write_artifact(out, &format!("episode_{l:04}.csv"), &e.to_csv())?;
    }
    m.write_artifact(out, "aggregate.csv", &aggregate_csv(&agg))?;
    phases.push("write", t);
    m.phases = phases;
    m.save(out)?;
    println!(
        "{} episodes: mean regret {:.4}, median {:.4}, optimal-variable fraction {:.4}",
        agg.episodes, agg.mean_avg_regret, agg.median, agg.mean_optimal_fraction
    );
    Ok(m)
}

fn cmd_sweep(r: Resolved, param: &str, values: &[String], jobs: usize, out: &Path) -> Result<Manifest> {
    check_jobs(jobs)?;
    if values.is_empty() || values.iter().any(|v| v.is_empty()) {
        return Err(usage("--values must be a comma-separated list of non-empty values"));
    }
    let mut phases = Phases::default();
    let t = Instant::now();
    let rows = sweep(&r.cfg, param, values, r.episodes, jobs)?;
    phases.push("episodes", t);

    let t = Instant::now();
    let mut m = Manifest::new("sweep", &r.cfg, r.episodes, jobs, r.overrides);
    m.param = Some(param.to_string());
    m.values = values.to_vec();
    m.seeds = episode_seeds(&r.cfg, r.episodes);
    fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    m.write_artifact(out, "sweep.csv", &sweep_csv(&rows))?;
    m.write_artifact(out, "boxplot.csv", &boxplot_csv(&rows))?;
    phases.push("write", t);
    m.phases = phases;
    m.save(out)?;
    for row in &rows {
        println!("{param}={}: mean regret {:.4}", row.value, row.aggregate.mean_avg_regret);
    }
    Ok(m)
}

fn split_values(values: &str) -> Vec<String> {
    values.split(',').map(|v| v.trim().to_string()).collect()
}

fn cmd_discover(
    data: &Path,
    constraints: Option<&Path>,
    out: &Path,
    constraints_out: Option<&Path>,
    r: Resolved,
) -> Result<()> {
    let text = fs::read_to_string(data).map_err(|e| usage(format!("cannot read {}: {e}", data.display())))?;
    let series = Series::from_csv(&text).with_context(|| format!("reading {}", data.display()))?;
    let list = match constraints {
        Some(path) => {
            let text =
                fs::read_to_string(path).map_err(|e| usage(format!("cannot read {}: {e}", path.display())))?;
            let list = ConstraintList::from_csv(&text).with_context(|| format!("reading {}", path.display()))?;
            check_constraints(&list, series.n_vars(), r.cfg.discovery.tau_max)?;
            list
        }
        None => {
            let list = discover_interventional(&series, &r.cfg.interventional)?;
            let path = constraints_out.map(Path::to_path_buf).unwrap_or_else(|| {
                let mut p = out.as_os_str().to_owned();
                p.push(".constraints.csv");
                PathBuf::from(p)
            });
            fs::write(&path, list.to_csv()).with_context(|| format!("writing {}", path.display()))?;
            list
        }
    };
    let found = discover(&series, &list, &r.cfg.discovery)?;
    fs::write(out, write_graph(&found.pag)).with_context(|| format!("writing {}", out.display()))?;
    println!(
        "{} links, {} constraints ({} dependencies), {} CI tests",
        found.pag.links().count(),
        list.deps.len() + list.indeps.len(),
        list.deps.len(),
        found.tests_run
    );
    Ok(())
}

fn check_constraints(list: &ConstraintList, n_vars: usize, tau_max: usize) -> Result<()> {
    for c in list.deps.iter().chain(&list.indeps) {
        if c.i >= n_vars || c.j >= n_vars || c.tau > tau_max {
            return Err(ccl_core::Error::Shape(format!(
                "constraint ({}, {}, tau {}) does not fit {n_vars} variables with tau_max {tau_max}",
                c.i, c.j, c.tau
            ))
            .into());
        }
    }
    Ok(())
}

fn cmd_replay(path: &Path, out: &Path, jobs: usize) -> Result<bool> {
    let text = fs::read_to_string(path).map_err(|e| usage(format!("cannot read {}: {e}", path.display())))?;
    let old = Manifest::load(&text).map_err(|e| usage(format!("{}: {e}", path.display())))?;
    let mut r = Resolved { cfg: EpisodeConfig::default(), episodes: old.episodes, overrides: Vec::new() };
    for key in CONFIG_KEYS {
        let v = old.config.get(*key).ok_or_else(|| usage(format!("manifest config lacks `{key}`")))?;
        r.apply(key, v, "manifest")?;
    }
    r.cfg.validate()?;
    let new = match old.command.as_str() {
        "run" => cmd_run(r, jobs, out)?,
        "sweep" => {
            let param = old.param.clone().ok_or_else(|| usage("sweep manifest lacks `param`"))?;
            cmd_sweep(r, &param, &old.values, jobs, out)?
        }
        other => return Err(usage(format!("cannot replay command `{other}`"))),
    };
    let mut ok = true;
    for a in &old.artifacts {
        let status = match new.artifacts.iter().find(|b| b.path == a.path) {
            Some(b) if b.sha256 == a.sha256 => "match",
            Some(_) => {
                ok = false;
                "DIFFERS"
            }
            None => {
                ok = false;
                "MISSING"
            }
        };
        println!("{status} {}", a.path);
    }
    Ok(ok)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Run { common, episodes } => resolve(common.config.as_deref(), &common.sets, common.seed)
            .and_then(|mut r| {
                if let Some(k) = episodes {
                    r.apply("episodes", &k.to_string(), "flag")?;
                    if k == 0 {
                        return Err(usage("--episodes must be at least 1"));
                    }
                }
                cmd_run(r, common.jobs, &common.out)
            })
            .map(|_| true),
        Command::Sweep { common, param, values, episodes } => {
            resolve(common.config.as_deref(), &common.sets, common.seed)
                .and_then(|mut r| {
                    if let Some(k) = episodes {
                        r.apply("episodes", &k.to_string(), "flag")?;
                        if k == 0 {
                            return Err(usage("--episodes must be at least 1"));
                        }
                    }
                    cmd_sweep(r, &param, &split_values(&values), common.jobs, &common.out)
                })
                .map(|_| true)
        }
        Command::Discover { data, constraints, out, constraints_out, config, sets } => {
            resolve(config.as_deref(), &sets, None)
                .and_then(|r| cmd_discover(&data, constraints.as_deref(), &out, constraints_out.as_deref(), r))
                .map(|_| true)
        }
        Command::Config { config, sets } => resolve(config.as_deref(), &sets, None).map(|r| {
            print!("{}episodes = {}\n", r.cfg.to_text(), r.episodes);
            true
        }),
        Command::Replay { manifest, out, jobs } => cmd_replay(&manifest, &out, jobs),
    };
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("error: replay produced different artifacts");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
