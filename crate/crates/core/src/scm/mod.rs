//! Linear time-series SCMs: sampling, stationarity, generation under hard
//! interventions.

mod sampling;
mod series;
mod stationarity;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::graph::topological_order;
use crate::{Error, Result};

pub use sampling::{sample_scm, SamplingConfig, TargetRule, MAX_ATTEMPTS};
pub use series::{drop_latents, Series};
pub use stationarity::{check_stationarity, spectral_radius, stationary_std};

/// Warm-up length before the first recorded sample.
pub const WARM_UP_STEPS: usize = 50;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Mechanism {
    pub source: usize,
    pub lag: usize,
    pub coeff: f64,
}

/// Hard intervention `do(X^variable = value)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Intervention {
    pub variable: usize,
    pub value: f64,
}

/// `X^j_t = a_j X^j_{t-1} + sum_m coeff_m X^{source_m}_{t-lag_m} + sigma_j eta^j_t`.
#[derive(Clone, Debug, PartialEq)]
pub struct Scm {
    auto: Vec<f64>,
    cross: Vec<Vec<Mechanism>>,
    noise_std: Vec<f64>,
    observed: Vec<usize>,
    target: usize,
    order: Vec<usize>,
    tau_max: usize,
}

impl Scm {
    /// `cross[j]` lists the mechanisms feeding variable `j`. `target` is an
    /// index into the full variable set and must be observed.
    pub fn new(
        auto: Vec<f64>,
        cross: Vec<Vec<Mechanism>>,
        noise_std: Vec<f64>,
        observed: Vec<usize>,
        target: usize,
    ) -> Result<Scm> {
        let n = auto.len();
        if n == 0 || cross.len() != n || noise_std.len() != n {
            return Err(Error::Shape(format!(
                "auto, cross and noise_std need equal nonzero lengths, got {}, {}, {}",
                n,
                cross.len(),
                noise_std.len()
            )));
        }
        if noise_std.iter().any(|s| !(*s >= 0.0)) {
            return Err(Error::InvalidArgument("noise_std must be nonnegative".into()));
        }
        if observed.windows(2).any(|w| w[0] >= w[1]) || observed.iter().any(|&o| o >= n) {
            return Err(Error::InvalidArgument("observed indices must be increasing and in range".into()));
        }
        if !observed.contains(&target) {
            return Err(Error::InvalidArgument(format!("target {target} is not observed")));
        }
        let mut contemporaneous = Vec::new();
        for (j, mechs) in cross.iter().enumerate() {
            for m in mechs {
                if m.source >= n {
                    return Err(Error::InvalidArgument(format!("mechanism source {} out of range", m.source)));
                }
                if m.lag == 0 {
                    if m.source == j {
                        return Err(Error::ContemporaneousCycle);
                    }
                    contemporaneous.push((m.source, j));
                }
            }
        }
        let order = topological_order(n, contemporaneous).ok_or(Error::ContemporaneousCycle)?;
        let lagged = cross.iter().flatten().map(|m| m.lag).max().unwrap_or(0);
        let auto_lag = usize::from(auto.iter().any(|&a| a != 0.0));
        Ok(Scm {
            tau_max: lagged.max(auto_lag),
            auto,
            cross,
            noise_std,
            observed,
            target,
            order,
        })
    }

    pub fn n_total(&self) -> usize {
        self.auto.len()
    }

    pub fn auto(&self) -> &[f64] {
        &self.auto
    }

    pub fn cross(&self) -> &[Vec<Mechanism>] {
        &self.cross
    }

    pub fn noise_std(&self) -> &[f64] {
        &self.noise_std
    }

    pub fn observed(&self) -> &[usize] {
        &self.observed
    }

    pub fn target(&self) -> usize {
        self.target
    }

    /// Position of the target within the observed columns.
    pub fn target_observed(&self) -> usize {
        self.observed.iter().position(|&o| o == self.target).unwrap_or(0)
    }

    /// Longest lag any nonzero term reaches.
    pub fn tau_max(&self) -> usize {
        self.tau_max
    }

    /// Evaluation order of the contemporaneous graph.
    pub fn order(&self) -> &[usize] {
        &self.order
    }

    /// Fills `noise` with one draw of `sigma_j * N(0, 1)` per variable, in
    /// index order.
    pub fn draw_noise<R: Rng + ?Sized>(&self, rng: &mut R, noise: &mut [f64]) {
        for (slot, sigma) in noise.iter_mut().zip(&self.noise_std) {
            let z: f64 = rng.sample(StandardNormal);
            *slot = sigma * z;
        }
    }

    /// Computes one time step into `out`. `history` holds previous rows,
    /// row-major, most recent last, at least `tau_max` of them.
    pub fn step(&self, history: &[f64], intervention: Option<Intervention>, noise: &[f64], out: &mut [f64]) {
        let n = self.n_total();
        let rows = history.len() / n;
        debug_assert!(rows >= self.tau_max);
        let lagged = |lag: usize, var: usize| history[(rows - lag) * n + var];
        for &j in &self.order {
            if let Some(iv) = intervention {
                if iv.variable == j {
                    out[j] = iv.value;
                    continue;
                }
            }
            let mut v = noise[j];
            if self.auto[j] != 0.0 {
                v += self.auto[j] * lagged(1, j);
            }
            for m in &self.cross[j] {
                v += m.coeff
                    * if m.lag == 0 { out[m.source] } else { lagged(m.lag, m.source) };
            }
            out[j] = v;
        }
    }

    /// Whether `X^i_{t-lag}` is an ancestor of `X^j_t` in the unrolled graph.
    pub fn is_ancestor(&self, i: usize, lag: usize, j: usize) -> bool {
        if i == j && lag == 0 {
            return false;
        }
        let n = self.n_total();
        let mut seen = vec![false; n * (lag + 1)];
        let mut stack = vec![(j, 0usize)];
        seen[j] = true;
        while let Some((v, s)) = stack.pop() {
            let mut visit = |src: usize, s2: usize, stack: &mut Vec<(usize, usize)>| {
                if s2 <= lag && !seen[s2 * n + src] {
                    seen[s2 * n + src] = true;
                    stack.push((src, s2));
                }
            };
            if self.auto[v] != 0.0 {
                visit(v, s + 1, &mut stack);
            }
            for m in &self.cross[v] {
                visit(m.source, s + m.lag, &mut stack);
            }
        }
        seen[lag * n + i]
    }

    pub fn to_json(&self) -> String {
        let dump = ScmDump {
            n_total: self.n_total(),
            auto: self.auto.clone(),
            cross: self
                .cross
                .iter()
                .enumerate()
                .flat_map(|(target, ms)| {
                    ms.iter().map(move |m| CrossDump {
                        source: m.source,
                        target,
                        lag: m.lag,
                        coeff: m.coeff,
                    })
                })
                .collect(),
            noise_std: self.noise_std.clone(),
            observed_idx: self.observed.clone(),
            target: self.target,
        };
        serde_json::to_string_pretty(&dump).expect("SCM dump serializes")
    }

    pub fn from_json(text: &str) -> Result<Scm> {
        let dump: ScmDump = serde_json::from_str(text)
            .map_err(|e| Error::parse(e.line(), e.to_string()))?;
        let mut cross = vec![Vec::new(); dump.n_total];
        for c in dump.cross {
            if c.target >= dump.n_total {
                return Err(Error::InvalidArgument(format!("mechanism target {} out of range", c.target)));
            }
            cross[c.target].push(Mechanism { source: c.source, lag: c.lag, coeff: c.coeff });
        }
        Scm::new(dump.auto, cross, dump.noise_std, dump.observed_idx, dump.target)
    }
}

#[derive(Serialize, Deserialize)]
struct CrossDump {
    source: usize,
    target: usize,
    lag: usize,
    coeff: f64,
}

#[derive(Serialize, Deserialize)]
struct ScmDump {
    n_total: usize,
    auto: Vec<f64>,
    cross: Vec<CrossDump>,
    noise_std: Vec<f64>,
    observed_idx: Vec<usize>,
    target: usize,
}

fn check_start(scm: &Scm, start: &[f64]) -> Result<()> {
    let n = scm.n_total();
    if start.len() % n != 0 || start.len() / n < scm.tau_max() {
        return Err(Error::Shape(format!(
            "start needs at least {} rows of {} values, got {} values",
            scm.tau_max(),
            n,
            start.len()
        )));
    }
    Ok(())
}

fn check_intervention(scm: &Scm, intervention: Option<Intervention>) -> Result<()> {
    match intervention {
        Some(iv) if iv.variable >= scm.n_total() => Err(Error::InvalidArgument(format!(
            "intervention on variable {} of {}",
            iv.variable,
            scm.n_total()
        ))),
        _ => Ok(()),
    }
}

fn run<F: FnMut(&mut [f64])>(
    scm: &Scm,
    intervention: Option<Intervention>,
    start: &[f64],
    t_gen: usize,
    mut noise_fn: F,
) -> Result<Series> {
    check_start(scm, start)?;
    check_intervention(scm, intervention)?;
    let n = scm.n_total();
    let p = scm.tau_max();
    let keep = p * n;
    let mut buf: Vec<f64> = start[start.len() - keep..].to_vec();
    buf.reserve(t_gen * n);
    let mut noise = vec![0.0; n];
    let mut row = vec![0.0; n];
    let mut mask = vec![false; n];
    if let Some(iv) = intervention {
        mask[iv.variable] = true;
    }
    let mut out = Series::new(n);
    for _ in 0..t_gen {
        noise_fn(&mut noise);
        scm.step(&buf[buf.len() - keep..], intervention, &noise, &mut row);
        buf.extend_from_slice(&row);
        out.push_row(&row, &mask)?;
    }
    Ok(out)
}

/// Generates `t_gen` steps after `start` (row-major rows, the last
/// `tau_max` are used). The intervened variable, if any, is held at its
/// value with the mask set at every step.
pub fn generate<R: Rng + ?Sized>(
    scm: &Scm,
    intervention: Option<Intervention>,
    start: &[f64],
    t_gen: usize,
    rng: &mut R,
) -> Result<Series> {
    run(scm, intervention, start, t_gen, |noise| scm.draw_noise(rng, noise))
}

/// Like [`generate`] with all noise set to zero; consumes no randomness.
pub fn generate_noiseless(
    scm: &Scm,
    intervention: Option<Intervention>,
    start: &[f64],
    t_gen: usize,
) -> Result<Series> {
    run(scm, intervention, start, t_gen, |noise| noise.fill(0.0))
}

/// Runs the SCM for [`WARM_UP_STEPS`] steps from a pure-noise start and
/// returns the last `tau_max` rows.
pub fn warm_up_start<R: Rng + ?Sized>(scm: &Scm, rng: &mut R) -> Vec<f64> {
    let n = scm.n_total();
    let p = scm.tau_max();
    if p == 0 {
        return Vec::new();
    }
    let mut start = vec![0.0; p * n];
    for row in start.chunks_mut(n) {
        scm.draw_noise(rng, row);
    }
    let series = generate(scm, None, &start, WARM_UP_STEPS, rng).expect("start has tau_max rows");
    series.tail_rows(p)
}
