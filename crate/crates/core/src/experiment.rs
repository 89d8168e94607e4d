//! The closed loop: discover, plan, act and score regret against an oracle
//! twin, plus aggregation over episodes and parameter sweeps.

use std::fmt::Write as _;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::control::{
    build_menu, epsilon_at, find_optimal, select_value, simulate_outcome, ObjectiveMode, PlannerConfig,
};
use crate::graph::TsPag;
use crate::idiscovery::{discover_interventional, Constraint, ConstraintList, InterventionalConfig, PruneList};
use crate::odiscovery::{discover, DiscoveryConfig};
use crate::scm::{
    drop_latents, generate, sample_scm, stationary_std, warm_up_start, Intervention, SamplingConfig, Scm, Series,
    TargetRule,
};
use crate::stats::normal_quantile;
use crate::{Error, Result};

const SCM_STREAM: u64 = 0;
const ENV_STREAM: u64 = 1;
const POLICY_STREAM: u64 = 2;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    /// Observational discovery only, no constraints.
    Baseline,
    /// Constraints from interventional samples.
    Extended,
    /// Ground-truth ancestries as constraints.
    OracleConstraints,
    /// Never intervenes.
    ObservationalOnly,
}

impl Mode {
    pub const ALL: [Mode; 4] = [Mode::Baseline, Mode::Extended, Mode::OracleConstraints, Mode::ObservationalOnly];

    pub fn name(self) -> &'static str {
        match self {
            Mode::Baseline => "baseline",
            Mode::Extended => "extended",
            Mode::OracleConstraints => "oracle_constraints",
            Mode::ObservationalOnly => "observational_only",
        }
    }

    pub fn parse(s: &str) -> Option<Mode> {
        Mode::ALL.into_iter().find(|m| m.name() == s)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct EpisodeConfig {
    pub sampling: SamplingConfig,
    pub t_init: usize,
    pub t_max: usize,
    pub intervention_fraction: f64,
    pub eps0: f64,
    pub decay: f64,
    pub discovery: DiscoveryConfig,
    pub interventional: InterventionalConfig,
    pub mode: Mode,
    pub planner: PlannerConfig,
    /// Minimum number of steps between two discovery runs.
    pub discovery_stride: usize,
    pub seed: u64,
}

impl Default for EpisodeConfig {
    fn default() -> Self {
        EpisodeConfig {
            sampling: SamplingConfig::default(),
            t_init: 50,
            t_max: 200,
            intervention_fraction: 0.25,
            eps0: 0.5,
            decay: 0.99,
            discovery: DiscoveryConfig::default(),
            interventional: InterventionalConfig::default(),
            mode: Mode::Extended,
            planner: PlannerConfig::default(),
            discovery_stride: 1,
            seed: 0,
        }
    }
}

/// Keys accepted by [`EpisodeConfig::set`].
pub const CONFIG_KEYS: &[&str] = &[
    "n_total",
    "n_observed",
    "n_links",
    "frac_contemporaneous",
    "auto_min",
    "auto_max",
    "coeff_min",
    "coeff_max",
    "noise_min",
    "noise_max",
    "target_rule",
    "t_init",
    "t_max",
    "intervention_fraction",
    "eps0",
    "decay",
    "alpha_obs",
    "tau_max",
    "preliminary_rounds",
    "p_max",
    "alpha_dep",
    "alpha_indep",
    "prune_list",
    "mode",
    "horizon",
    "mag_cap",
    "objective_mode",
    "discovery_stride",
    "seed",
];

fn parse_num<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .trim()
        .parse()
        .map_err(|_| Error::config(key, format!("cannot parse `{value}`")))
}

impl EpisodeConfig {
    pub fn validate(&self) -> Result<()> {
        self.sampling.validate()?;
        self.discovery.validate()?;
        self.interventional.validate()?;
        if !(0.0..=1.0).contains(&self.intervention_fraction) {
            return Err(Error::config("intervention_fraction", "must lie in [0, 1]"));
        }
        if !(0.0..=1.0).contains(&self.eps0) {
            return Err(Error::config("eps0", "must lie in [0, 1]"));
        }
        if !(self.decay > 0.0 && self.decay <= 1.0) {
            return Err(Error::config("decay", "must lie in (0, 1]"));
        }
        if self.t_init == 0 {
            return Err(Error::config("t_init", "need at least one initial observation"));
        }
        if self.t_max == 0 {
            return Err(Error::config("t_max", "need at least one step"));
        }
        if self.planner.horizon == 0 {
            return Err(Error::config("horizon", "must be at least 1"));
        }
        if self.planner.mag_cap == 0 {
            return Err(Error::config("mag_cap", "must be at least 1"));
        }
        if self.discovery_stride == 0 {
            return Err(Error::config("discovery_stride", "must be at least 1"));
        }
        if self.discovery.tau_max != self.interventional.tau_max {
            return Err(Error::config("tau_max", "discovery and interventional tau_max differ"));
        }
        Ok(())
    }

    /// Sets one key from its text form.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let v = value.trim();
        match key {
            "n_total" => self.sampling.n_total = parse_num(key, v)?,
            "n_observed" => self.sampling.n_observed = parse_num(key, v)?,
            "n_links" => self.sampling.n_links = parse_num(key, v)?,
            "frac_contemporaneous" => self.sampling.frac_contemporaneous = parse_num(key, v)?,
            "auto_min" => self.sampling.auto_range.0 = parse_num(key, v)?,
            "auto_max" => self.sampling.auto_range.1 = parse_num(key, v)?,
            "coeff_min" => self.sampling.coeff_range.0 = parse_num(key, v)?,
            "coeff_max" => self.sampling.coeff_range.1 = parse_num(key, v)?,
            "noise_min" => self.sampling.noise_range.0 = parse_num(key, v)?,
            "noise_max" => self.sampling.noise_range.1 = parse_num(key, v)?,
            "target_rule" => {
                self.sampling.target_rule = match v {
                    "require_incoming" => TargetRule::RequireIncoming,
                    "any" => TargetRule::Any,
                    _ => return Err(Error::config(key, "expected `require_incoming` or `any`")),
                }
            }
            "t_init" => self.t_init = parse_num(key, v)?,
            "t_max" => self.t_max = parse_num(key, v)?,
            "intervention_fraction" => self.intervention_fraction = parse_num(key, v)?,
            "eps0" => self.eps0 = parse_num(key, v)?,
            "decay" => self.decay = parse_num(key, v)?,
            "alpha_obs" => self.discovery.alpha_obs = parse_num(key, v)?,
            "tau_max" => {
                let tau: usize = parse_num(key, v)?;
                self.discovery.tau_max = tau;
                self.interventional.tau_max = tau;
            }
            "preliminary_rounds" => self.discovery.preliminary_rounds = parse_num(key, v)?,
            "p_max" => self.discovery.p_max = parse_num(key, v)?,
            "alpha_dep" => self.interventional.alpha_dep = parse_num(key, v)?,
            "alpha_indep" => self.interventional.alpha_indep = parse_num(key, v)?,
            "prune_list" => {
                self.interventional.prune = match v {
                    "deps" => PruneList::Deps,
                    "indeps" => PruneList::Indeps,
                    _ => return Err(Error::config(key, "expected `deps` or `indeps`")),
                }
            }
            "mode" => {
                self.mode = Mode::parse(v).ok_or_else(|| {
                    Error::config(key, "expected baseline, extended, oracle_constraints or observational_only")
                })?
            }
            "horizon" => self.planner.horizon = parse_num(key, v)?,
            "mag_cap" => self.planner.mag_cap = parse_num(key, v)?,
            "objective_mode" => {
                self.planner.objective = match v {
                    "signed_max" => ObjectiveMode::SignedMax,
                    "magnitude" => ObjectiveMode::Magnitude,
                    _ => return Err(Error::config(key, "expected `signed_max` or `magnitude`")),
                }
            }
            "discovery_stride" => self.discovery_stride = parse_num(key, v)?,
            "seed" => self.seed = parse_num(key, v)?,
            _ => return Err(Error::config(key, "unknown key")),
        }
        Ok(())
    }

    /// Applies `key = value` lines; blank lines and `#` comments are skipped.
    pub fn apply_text(&mut self, text: &str) -> Result<()> {
        for (n, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| Error::parse(n + 1, "expected key = value"))?;
            self.set(k.trim(), v)?;
        }
        Ok(())
    }

    /// Every key in [`CONFIG_KEYS`] order, one `key = value` per line.
    pub fn to_text(&self) -> String {
        let s = &self.sampling;
        let rule = match s.target_rule {
            TargetRule::RequireIncoming => "require_incoming",
            TargetRule::Any => "any",
        };
        let prune = match self.interventional.prune {
            PruneList::Deps => "deps",
            PruneList::Indeps => "indeps",
        };
        let objective = match self.planner.objective {
            ObjectiveMode::SignedMax => "signed_max",
            ObjectiveMode::Magnitude => "magnitude",
        };
        let values: Vec<String> = vec![
            s.n_total.to_string(),
            s.n_observed.to_string(),
            s.n_links.to_string(),
            s.frac_contemporaneous.to_string(),
            s.auto_range.0.to_string(),
            s.auto_range.1.to_string(),
            s.coeff_range.0.to_string(),
            s.coeff_range.1.to_string(),
            s.noise_range.0.to_string(),
            s.noise_range.1.to_string(),
            rule.into(),
            self.t_init.to_string(),
            self.t_max.to_string(),
            self.intervention_fraction.to_string(),
            self.eps0.to_string(),
            self.decay.to_string(),
            self.discovery.alpha_obs.to_string(),
            self.discovery.tau_max.to_string(),
            self.discovery.preliminary_rounds.to_string(),
            self.discovery.p_max.to_string(),
            self.interventional.alpha_dep.to_string(),
            self.interventional.alpha_indep.to_string(),
            prune.into(),
            self.mode.name().into(),
            self.planner.horizon.to_string(),
            self.planner.mag_cap.to_string(),
            objective.into(),
            self.discovery_stride.to_string(),
            self.seed.to_string(),
        ];
        let mut out = String::new();
        for (k, v) in CONFIG_KEYS.iter().zip(values) {
            writeln!(out, "{k} = {v}").unwrap();
        }
        out
    }
}

/// Whether step `t` acts: `floor((t + 1) f) > floor(t f)`.
pub fn is_action_step(t: usize, fraction: f64) -> bool {
    ((t + 1) as f64 * fraction).floor() > (t as f64 * fraction).floor()
}

fn stream(seed: u64, id: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(id);
    rng
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StepRecord {
    pub t: usize,
    pub acted: bool,
    /// Intervened variable, as an index into all SCM variables.
    pub variable: Option<usize>,
    pub value: Option<f64>,
    pub was_alternative: bool,
    pub eps: f64,
    pub y_actual: f64,
    pub y_oracle: f64,
    pub regret_increment: f64,
    /// Number of constraints given to discovery for this step's plan.
    pub constraints: usize,
}

/// Constraint counts checked against the true SCM.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct ConstraintTally {
    pub deps_true: usize,
    pub deps_false: usize,
    pub indeps_true: usize,
    pub indeps_false: usize,
}

impl ConstraintTally {
    pub fn add(&mut self, other: &ConstraintTally) {
        self.deps_true += other.deps_true;
        self.deps_false += other.deps_false;
        self.indeps_true += other.indeps_true;
        self.indeps_false += other.indeps_false;
    }

    /// Fraction of dependency constraints that are true ancestries.
    pub fn dep_precision(&self) -> f64 {
        self.deps_true as f64 / (self.deps_true + self.deps_false) as f64
    }

    /// Fraction of independence constraints that are true non-ancestries.
    pub fn indep_precision(&self) -> f64 {
        self.indeps_true as f64 / (self.indeps_true + self.indeps_false) as f64
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct EpisodeResult {
    pub seed: u64,
    pub records: Vec<StepRecord>,
    pub avg_regret: f64,
    /// NaN when the episode never acted.
    pub optimal_variable_fraction: f64,
    /// The oracle's intervention, as an SCM variable index and value.
    pub oracle_action: Intervention,
    pub tally: ConstraintTally,
    /// Observed columns of the whole run, initial observations included.
    pub observed_data: Series,
}

pub const EPISODE_CSV_HEADER: &str = "t,acted,variable,value,was_alternative,eps,y_actual,y_oracle,regret_increment";

impl EpisodeResult {
    pub fn to_csv(&self) -> String {
        let mut out = String::from(EPISODE_CSV_HEADER);
        out.push('\n');
        for r in &self.records {
            let var = r.variable.map(|v| v.to_string()).unwrap_or_default();
            let val = r.value.map(|v| v.to_string()).unwrap_or_default();
            writeln!(
                out,
                "{},{},{},{},{},{},{},{},{}",
                r.t,
                u8::from(r.acted),
                var,
                val,
                u8::from(r.was_alternative),
                r.eps,
                r.y_actual,
                r.y_oracle,
                r.regret_increment
            )
            .unwrap();
        }
        out
    }
}

/// Ground-truth constraints over the observed variables: every tested
/// `(j, i, tau)` is a dependency iff `X^i_{t-tau}` is an ancestor of `X^j_t`.
pub fn oracle_constraints(scm: &Scm, tau_max: usize) -> ConstraintList {
    let obs = scm.observed();
    let mut list = ConstraintList::default();
    for tau in 0..=tau_max {
        for (i, &full_i) in obs.iter().enumerate() {
            for (j, &full_j) in obs.iter().enumerate() {
                if tau == 0 && i == j {
                    continue;
                }
                if scm.is_ancestor(full_i, tau, full_j) {
                    list.deps.push(Constraint { j, i, tau, p: 0.0 });
                } else {
                    list.indeps.push(Constraint { j, i, tau, p: 1.0 });
                }
            }
        }
    }
    list.sort();
    list
}

pub fn tally_constraints(scm: &Scm, list: &ConstraintList) -> ConstraintTally {
    let obs = scm.observed();
    let truth = |c: &Constraint| scm.is_ancestor(obs[c.i], c.tau, obs[c.j]);
    let mut t = ConstraintTally::default();
    for c in &list.deps {
        if truth(c) {
            t.deps_true += 1;
        } else {
            t.deps_false += 1;
        }
    }
    for c in &list.indeps {
        if truth(c) {
            t.indeps_false += 1;
        } else {
            t.indeps_true += 1;
        }
    }
    t
}

/// The true-SCM optimum over observed non-target variables set to their
/// stationary 5th or 95th percentile, by noise-free simulation from rest.
pub fn oracle_action(scm: &Scm, horizon: usize) -> Result<Intervention> {
    let n = scm.n_total();
    let quiet = Scm::new(
        scm.auto().to_vec(),
        scm.cross().to_vec(),
        vec![0.0; n],
        scm.observed().to_vec(),
        scm.target(),
    )?;
    let sd = stationary_std(scm)?;
    let z = normal_quantile(0.95);
    let start = vec![0.0; scm.tau_max() * n];
    let mut best: Option<(f64, Intervention)> = None;
    for &v in scm.observed().iter().filter(|&&v| v != scm.target()) {
        let mut values = vec![-z * sd[v], z * sd[v]];
        values.dedup();
        for value in values {
            let iv = Intervention { variable: v, value };
            let o = simulate_outcome(&quiet, iv, &start, horizon)?;
            // strict comparison keeps the lower variable and value on ties
            if best.is_none_or(|(b, _)| o > b) {
                best = Some((o, iv));
            }
        }
    }
    best.map(|(_, iv)| iv)
        .ok_or_else(|| Error::InvalidArgument("no observed variable besides the target".into()))
}

/// Samples the true SCM from the episode seed and runs the loop.
pub fn run_episode(cfg: &EpisodeConfig) -> Result<EpisodeResult> {
    cfg.validate()?;
    let scm = sample_scm(&cfg.sampling, &mut stream(cfg.seed, SCM_STREAM))?;
    run_episode_with_scm(cfg, &scm)
}

/// The loop on a given true SCM. The oracle twin shares every noise draw
/// with the actual trajectory and applies the oracle action at every step.
pub fn run_episode_with_scm(cfg: &EpisodeConfig, scm: &Scm) -> Result<EpisodeResult> {
    cfg.validate()?;
    let n = scm.n_total();
    let p = scm.tau_max();
    let observed = scm.observed();
    let target = scm.target();
    let target_obs = scm.target_observed();
    let mut env = stream(cfg.seed, ENV_STREAM);
    let mut policy = stream(cfg.seed, POLICY_STREAM);

    let start = warm_up_start(scm, &mut env);
    let mut data = generate(scm, None, &start, cfg.t_init, &mut env)?;
    let mut actual: Vec<f64> = start.iter().chain(data.values()).copied().collect();
    let mut twin = actual.clone();
    let oracle = oracle_action(scm, cfg.planner.horizon)?;
    let planner = PlannerConfig { restart_seed: cfg.seed, ..cfg.planner };

    let mut records = Vec::with_capacity(cfg.t_max);
    let mut tally = ConstraintTally::default();
    let mut last_plan: Option<(usize, TsPag, usize)> = None;
    let mut noise = vec![0.0; n];
    let mut row = vec![0.0; n];
    let mut twin_row = vec![0.0; n];
    let (mut acted_steps, mut optimal_steps) = (0usize, 0usize);

    for t in 0..cfg.t_max {
        let eps = epsilon_at(t, cfg.eps0, cfg.decay);
        let act = cfg.mode != Mode::ObservationalOnly && is_action_step(t, cfg.intervention_fraction);
        let mut record = StepRecord {
            t,
            acted: act,
            variable: None,
            value: None,
            was_alternative: false,
            eps,
            y_actual: 0.0,
            y_oracle: 0.0,
            regret_increment: 0.0,
            constraints: 0,
        };
        let mut iv = None;
        if act {
            let x = drop_latents(&data, observed)?;
            let stale = last_plan.as_ref().is_none_or(|(t0, _, _)| t - t0 >= cfg.discovery_stride);
            if stale {
                let constraints = match cfg.mode {
                    Mode::Extended => discover_interventional(&x, &cfg.interventional)?,
                    Mode::OracleConstraints => oracle_constraints(scm, cfg.interventional.tau_max),
                    Mode::Baseline | Mode::ObservationalOnly => ConstraintList::default(),
                };
                tally.add(&tally_constraints(scm, &constraints));
                let found = discover(&x, &constraints, &cfg.discovery)?;
                last_plan = Some((t, found.pag, constraints.deps.len() + constraints.indeps.len()));
            }
            let (_, pag, n_constraints) = last_plan.as_ref().expect("planned above");
            let menu = build_menu(&x, target_obs)?;
            let tau = cfg.discovery.tau_max;
            let recent = (x.len() >= tau).then(|| x.tail_rows(tau));
            let proposal = find_optimal(pag, &menu, target_obs, recent.as_deref(), &planner)?;
            let (value, alt) = select_value(&proposal, eps, &mut policy);
            let variable = observed[proposal.variable];
            iv = Some(Intervention { variable, value });
            record.variable = Some(variable);
            record.value = Some(value);
            record.was_alternative = alt;
            record.constraints = *n_constraints;
            acted_steps += 1;
            optimal_steps += usize::from(variable == oracle.variable);
        }

        scm.draw_noise(&mut env, &mut noise);
        scm.step(&actual[actual.len() - p * n..], iv, &noise, &mut row);
        scm.step(&twin[twin.len() - p * n..], Some(oracle), &noise, &mut twin_row);
        actual.extend_from_slice(&row);
        twin.extend_from_slice(&twin_row);
        let mut mask = vec![false; n];
        if let Some(iv) = iv {
            mask[iv.variable] = true;
        }
        data.push_row(&row, &mask)?;

        record.y_actual = row[target];
        record.y_oracle = twin_row[target];
        record.regret_increment = record.y_oracle - record.y_actual;
        records.push(record);
    }

    let avg_regret = records.iter().map(|r| r.regret_increment).sum::<f64>() / cfg.t_max as f64;
    let optimal_variable_fraction =
        if acted_steps == 0 { f64::NAN } else { optimal_steps as f64 / acted_steps as f64 };
    Ok(EpisodeResult {
        seed: cfg.seed,
        records,
        avg_regret,
        optimal_variable_fraction,
        oracle_action: oracle,
        tally,
        observed_data: drop_latents(&data, observed)?,
    })
}

/// Episode `l` runs with seed `cfg.seed + l`, on a pool of `jobs` workers.
pub fn run_episodes(cfg: &EpisodeConfig, episodes: usize, jobs: usize) -> Result<Vec<EpisodeResult>> {
    cfg.validate()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| Error::InvalidArgument(format!("thread pool: {e}")))?;
    pool.install(|| {
        (0..episodes)
            .into_par_iter()
            .map(|l| run_episode(&EpisodeConfig { seed: cfg.seed.wrapping_add(l as u64), ..cfg.clone() }))
            .collect()
    })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Aggregate {
    pub episodes: usize,
    pub mean_avg_regret: f64,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub min: f64,
    pub max: f64,
    /// Mean over the episodes that acted at least once; NaN if none did.
    pub mean_optimal_fraction: f64,
}

/// Linear-interpolation quantile of sorted data (`(n - 1) q` position).
fn quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = (sorted.len() - 1) as f64 * q;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

pub fn aggregate(results: &[EpisodeResult]) -> Result<Aggregate> {
    if results.is_empty() {
        return Err(Error::InvalidArgument("no episodes to aggregate".into()));
    }
    let mut r: Vec<f64> = results.iter().map(|e| e.avg_regret).collect();
    let mean = r.iter().sum::<f64>() / r.len() as f64;
    r.sort_by(f64::total_cmp);
    let fractions: Vec<f64> =
        results.iter().map(|e| e.optimal_variable_fraction).filter(|f| !f.is_nan()).collect();
    let mean_optimal_fraction =
        if fractions.is_empty() { f64::NAN } else { fractions.iter().sum::<f64>() / fractions.len() as f64 };
    Ok(Aggregate {
        episodes: results.len(),
        mean_avg_regret: mean,
        q1: quantile(&r, 0.25),
        median: quantile(&r, 0.5),
        q3: quantile(&r, 0.75),
        min: r[0],
        max: r[r.len() - 1],
        mean_optimal_fraction,
    })
}

pub const SWEEP_PARAMS: &[&str] =
    &["intervention_fraction", "t_init", "n_observed", "alpha_obs", "alpha_indep", "alpha_dep", "mode"];

#[derive(Clone, Debug, PartialEq)]
pub struct SweepRow {
    pub value: String,
    pub aggregate: Aggregate,
    pub results: Vec<EpisodeResult>,
}

/// Runs `episodes` seeded episodes per value of `param`. Every value uses
/// the same episode seeds.
pub fn sweep(
    base: &EpisodeConfig,
    param: &str,
    values: &[String],
    episodes: usize,
    jobs: usize,
) -> Result<Vec<SweepRow>> {
    if !SWEEP_PARAMS.contains(&param) {
        return Err(Error::UnknownParam { name: param.to_string(), valid: SWEEP_PARAMS.to_vec() });
    }
    let mut rows = Vec::with_capacity(values.len());
    for value in values {
        let mut cfg = base.clone();
        cfg.set(param, value)?;
        let results = run_episodes(&cfg, episodes, jobs)?;
        rows.push(SweepRow { value: value.trim().to_string(), aggregate: aggregate(&results)?, results });
    }
    Ok(rows)
}

pub const SWEEP_CSV_HEADER: &str = "param_value,episodes,mean_avg_regret,q1,median,q3,min,max,mean_optimal_fraction";

pub fn sweep_csv(rows: &[SweepRow]) -> String {
    let mut out = String::from(SWEEP_CSV_HEADER);
    out.push('\n');
    for row in rows {
        out.push_str(&aggregate_line(&row.value, &row.aggregate));
    }
    out
}

/// One sweep-format line for an aggregate labeled `label`.
pub fn aggregate_line(label: &str, a: &Aggregate) -> String {
    format!(
        "{label},{},{},{},{},{},{},{},{}\n",
        a.episodes, a.mean_avg_regret, a.q1, a.median, a.q3, a.min, a.max, a.mean_optimal_fraction
    )
}

pub const AGGREGATE_CSV_HEADER: &str = "episodes,mean_avg_regret,q1,median,q3,min,max,mean_optimal_fraction";

/// Header plus the single aggregate row of a run.
pub fn aggregate_csv(a: &Aggregate) -> String {
    let line = aggregate_line("", a);
    format!("{AGGREGATE_CSV_HEADER}\n{}", &line[1..])
}

/// One row per episode per value, for box plots.
pub fn boxplot_csv(rows: &[SweepRow]) -> String {
    let mut out = String::from("param_value,episode,seed,avg_regret,optimal_fraction\n");
    for row in rows {
        for (l, e) in row.results.iter().enumerate() {
            writeln!(out, "{},{l},{},{},{}", row.value, e.seed, e.avg_regret, e.optimal_variable_fraction).unwrap();
        }
    }
    out
}
