//! Optimistic intervention planning over the MAGs a PAG admits.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::graph::{enumerate_mags, Edgemark, End, Mag, TsPag, DEFAULT_MAG_CAP};
use crate::scm::{generate_noiseless, Intervention, Mechanism, Scm, Series};
use crate::stats::{fit_gaussian, gaussian_percentile};
use crate::{Error, Result};

const LOWER_Q: f64 = 0.05;
const UPPER_Q: f64 = 0.95;

#[derive(Clone, Debug, PartialEq)]
pub struct MenuEntry {
    pub variable: usize,
    /// Boundary values of the fitted Gaussian, ascending, deduplicated.
    pub candidates: Vec<f64>,
    /// The fitted median, used for exploration.
    pub alternative: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct InterventionMenu {
    pub entries: Vec<MenuEntry>,
}

impl InterventionMenu {
    /// Entries for every variable except `target` with the given candidates
    /// and alternatives.
    pub fn from_bounds(target: usize, bounds: &[(f64, f64, f64)]) -> Self {
        let entries = bounds
            .iter()
            .enumerate()
            .filter(|(v, _)| *v != target)
            .map(|(variable, &(lo, hi, alternative))| {
                let candidates = if lo == hi { vec![lo] } else { vec![lo.min(hi), lo.max(hi)] };
                MenuEntry { variable, candidates, alternative }
            })
            .collect();
        InterventionMenu { entries }
    }

    pub fn entry(&self, variable: usize) -> Option<&MenuEntry> {
        self.entries.iter().find(|e| e.variable == variable)
    }
}

/// Candidates at the 5th and 95th percentile of a Gaussian fitted to each
/// non-target column.
pub fn build_menu(data: &Series, target: usize) -> Result<InterventionMenu> {
    if data.is_empty() {
        return Err(Error::InsufficientSamples { needed: 1, got: 0 });
    }
    let mut bounds = Vec::with_capacity(data.n_vars());
    for v in 0..data.n_vars() {
        let fit = fit_gaussian(&data.column(v))?;
        bounds.push((
            gaussian_percentile(fit, LOWER_Q),
            gaussian_percentile(fit, UPPER_Q),
            gaussian_percentile(fit, 0.5),
        ));
    }
    Ok(InterventionMenu::from_bounds(target, &bounds))
}

pub fn alternative_value(data: &Series, variable: usize) -> Result<f64> {
    if variable >= data.n_vars() {
        return Err(Error::InvalidArgument(format!("variable {variable} of {}", data.n_vars())));
    }
    Ok(gaussian_percentile(fit_gaussian(&data.column(variable))?, 0.5))
}

/// Noise-free linear SCM with one mechanism per directed link, weighted by
/// the link's effect size. Bidirected links add nothing.
pub fn reconstruct_scm(mag: &Mag, target: usize) -> Result<Scm> {
    let g = mag.graph();
    let n = g.n_vars();
    let mut auto = vec![0.0; n];
    let mut cross: Vec<Vec<Mechanism>> = vec![Vec::new(); n];
    for link in g.links() {
        let Some(src_end) = link.directed_source() else { continue };
        let effect = link.effect.ok_or_else(|| Error::MissingEffect(link.key.to_string()))?;
        if effect == 0.0 {
            continue;
        }
        let (source, target_var) = match src_end {
            End::From => (link.key.from, link.key.to),
            End::To => (link.key.to, link.key.from),
        };
        if source == target_var && link.key.lag == 1 {
            auto[source] = effect;
        } else {
            cross[target_var].push(Mechanism { source, lag: link.key.lag, coeff: effect });
        }
    }
    debug_assert!(g.links().all(|l| l.mark_from != Edgemark::Circle && l.mark_to != Edgemark::Circle));
    Scm::new(auto, cross, vec![0.0; n], (0..n).collect(), target)
}

/// Mean of the target over `horizon` noise-free steps with the
/// intervention applied at every step.
pub fn simulate_outcome(scm: &Scm, intervention: Intervention, start: &[f64], horizon: usize) -> Result<f64> {
    if horizon == 0 {
        return Err(Error::InvalidArgument("horizon must be at least 1".into()));
    }
    let series = generate_noiseless(scm, Some(intervention), start, horizon)?;
    let y = series.column(scm.target());
    Ok(y.iter().sum::<f64>() / horizon as f64)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ObjectiveMode {
    /// Largest simulated outcome.
    SignedMax,
    /// Largest absolute simulated outcome.
    Magnitude,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PlannerConfig {
    pub horizon: usize,
    pub mag_cap: usize,
    pub objective: ObjectiveMode,
    /// Random starts averaged when no recent measurements are given.
    pub restarts: usize,
    pub restart_seed: u64,
}

impl Default for PlannerConfig {
    fn default() -> Self {
        PlannerConfig {
            horizon: 20,
            mag_cap: DEFAULT_MAG_CAP,
            objective: ObjectiveMode::SignedMax,
            restarts: 10,
            restart_seed: 0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Proposal {
    pub variable: usize,
    pub value_opt: f64,
    pub value_alt: f64,
    pub expected_outcome: f64,
    /// Index of the winning MAG in enumeration order.
    pub source_mag: usize,
    pub mags_evaluated: usize,
    pub truncated: bool,
}

#[derive(Clone, Copy, Debug)]
struct Candidate {
    mag: usize,
    variable: usize,
    value: f64,
    outcome: f64,
}

fn score(mode: ObjectiveMode, outcome: f64) -> f64 {
    match mode {
        ObjectiveMode::SignedMax => outcome,
        ObjectiveMode::Magnitude => outcome.abs(),
    }
}

/// True if `a` beats `b`: higher score, then lower variable, value and MAG index.
fn better(mode: ObjectiveMode, a: &Candidate, b: &Candidate) -> bool {
    let (sa, sb) = (score(mode, a.outcome), score(mode, b.outcome));
    if sa != sb {
        return sa > sb;
    }
    (a.variable, a.value, a.mag) < (b.variable, b.value, b.mag)
}

/// Outcome of one intervention, averaging random starts when `start` is absent.
fn outcome(scm: &Scm, iv: Intervention, start: Option<&[f64]>, cfg: &PlannerConfig) -> Result<f64> {
    match start {
        Some(s) => simulate_outcome(scm, iv, s, cfg.horizon),
        None => {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.restart_seed);
            let rows = scm.tau_max() * scm.n_total();
            let restarts = cfg.restarts.max(1);
            let mut total = 0.0;
            for _ in 0..restarts {
                let s: Vec<f64> = (0..rows).map(|_| rng.sample(StandardNormal)).collect();
                total += simulate_outcome(scm, iv, &s, cfg.horizon)?;
            }
            Ok(total / restarts as f64)
        }
    }
}

/// Simulates every (MAG, variable, value) combination and returns the most
/// optimistic one.
pub fn find_optimal(
    pag: &TsPag,
    menu: &InterventionMenu,
    target: usize,
    start: Option<&[f64]>,
    cfg: &PlannerConfig,
) -> Result<Proposal> {
    if menu.entries.iter().all(|e| e.candidates.is_empty()) {
        return Err(Error::InvalidArgument("empty intervention menu".into()));
    }
    if menu.entries.iter().any(|e| e.variable == target) {
        return Err(Error::InvalidArgument("the target cannot be intervened on".into()));
    }
    let enumeration = enumerate_mags(pag, cfg.mag_cap);
    if enumeration.mags.is_empty() {
        return Err(Error::NoModel);
    }
    let per_mag: Vec<Result<Vec<Candidate>>> = enumeration
        .mags
        .par_iter()
        .enumerate()
        .map(|(mag_idx, mag)| {
            let scm = reconstruct_scm(mag, target)?;
            let mut out = Vec::new();
            for entry in &menu.entries {
                for &value in &entry.candidates {
                    let iv = Intervention { variable: entry.variable, value };
                    out.push(Candidate {
                        mag: mag_idx,
                        variable: entry.variable,
                        value,
                        outcome: outcome(&scm, iv, start, cfg)?,
                    });
                }
            }
            Ok(out)
        })
        .collect();
    let mut best: Option<Candidate> = None;
    for cands in per_mag {
        for c in cands? {
            if best.as_ref().is_none_or(|b| better(cfg.objective, &c, b)) {
                best = Some(c);
            }
        }
    }
    let best = best.expect("menu has at least one candidate");
    let alt = menu.entry(best.variable).map_or(best.value, |e| e.alternative);
    Ok(Proposal {
        variable: best.variable,
        value_opt: best.value,
        value_alt: alt,
        expected_outcome: best.outcome,
        source_mag: best.mag,
        mags_evaluated: enumeration.mags.len(),
        truncated: enumeration.truncated,
    })
}

/// `eps0 * decay^step`.
pub fn epsilon_at(step: usize, eps0: f64, decay: f64) -> f64 {
    eps0 * decay.powf(step as f64)
}

/// The optimistic value with probability `1 - eps`, else the alternative.
/// The flag is true when the alternative was taken.
pub fn select_value<R: Rng + ?Sized>(proposal: &Proposal, eps: f64, rng: &mut R) -> (f64, bool) {
    if rng.random_bool(eps.clamp(0.0, 1.0)) {
        (proposal.value_alt, true)
    } else {
        (proposal.value_opt, false)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{parse_graph, Link, LinkKey};

    fn mag(text: &str) -> Mag {
        Mag::try_new(parse_graph(text).unwrap()).unwrap()
    }

    fn menu_pm(vars: &[usize], value: f64) -> InterventionMenu {
        InterventionMenu {
            entries: vars
                .iter()
                .map(|&v| MenuEntry { variable: v, candidates: vec![-value, value], alternative: 0.0 })
                .collect(),
        }
    }

    #[test]
    fn menu_from_standard_normal_fit() {
        // a column with mean 0 and population sd 1
        let mut s = Series::new(2);
        for v in [-1.0, 1.0, -1.0, 1.0] {
            s.push_row(&[v, 5.0], &[false, false]).unwrap();
        }
        let menu = build_menu(&s, 1).unwrap();
        assert_eq!(menu.entries.len(), 1);
        let c = &menu.entries[0].candidates;
        assert!((c[0] + 1.6448536269514722).abs() < 1e-8 && (c[1] - 1.6448536269514722).abs() < 1e-8);

        let menu = build_menu(&s, 0).unwrap();
        assert_eq!(menu.entries[0].candidates, vec![5.0]);
        assert_eq!(menu.entries[0].alternative, 5.0);
    }

    #[test]
    fn alternative_is_the_fitted_mean() {
        use rand::SeedableRng;
        use rand_distr::{Distribution, Normal};
        let mut s = Series::new(2);
        s.push_row(&[0.0, 5.0], &[false; 2]).unwrap();
        s.push_row(&[2.0, 5.0], &[false; 2]).unwrap();
        assert_eq!(alternative_value(&s, 0).unwrap(), 1.0);
        assert_eq!(alternative_value(&s, 1).unwrap(), 5.0);

        // N(3, 2): the sample mean of 10^4 draws has sd 0.02
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(42);
        let dist = Normal::new(3.0, 2.0).unwrap();
        let mut s = Series::new(1);
        for _ in 0..10_000 {
            s.push_row(&[dist.sample(&mut rng)], &[false]).unwrap();
        }
        assert!((alternative_value(&s, 0).unwrap() - 3.0).abs() < 0.08);
        assert!(alternative_value(&s, 1).is_err());
    }

    #[test]
    fn menu_excludes_target() {
        let mut s = Series::new(5);
        s.push_row(&[1.0, 2.0, 3.0, 4.0, 5.0], &[false; 5]).unwrap();
        let menu = build_menu(&s, 0).unwrap();
        assert_eq!(menu.entries.iter().map(|e| e.variable).collect::<Vec<_>>(), vec![1, 2, 3, 4]);
    }

    #[test]
    fn reconstruction_examples() {
        let scm = reconstruct_scm(&mag("0 -> 1 @ 0 0.4\n"), 1).unwrap();
        assert_eq!(scm.cross()[1], vec![Mechanism { source: 0, lag: 0, coeff: 0.4 }]);
        assert!(scm.noise_std().iter().all(|&s| s == 0.0));

        let scm = reconstruct_scm(&mag("0 <> 1 @ 0 0.4\n"), 1).unwrap();
        assert!(scm.cross().iter().all(Vec::is_empty));

        let scm = reconstruct_scm(&mag("# n_vars=3 tau_max=1\n0 -> 1 @ 1 0.5\n1 -> 2 @ 0 0.3\n"), 2).unwrap();
        let y = simulate_outcome(&scm, Intervention { variable: 0, value: 1.0 }, &[0.0; 3], 50).unwrap();
        let steady = generate_noiseless(&scm, Some(Intervention { variable: 0, value: 1.0 }), &[0.0; 3], 5)
            .unwrap()
            .column(2);
        assert!((steady[4] - 0.15).abs() < 1e-15);
        assert!((y - 0.15 * 49.0 / 50.0).abs() < 1e-12);

        // reversed contemporaneous orientation and lagged autodependency
        let scm = reconstruct_scm(&mag("0 <- 1 @ 0 -0.2\n0 -> 0 @ 1 0.6\n"), 0).unwrap();
        assert_eq!(scm.cross()[0], vec![Mechanism { source: 1, lag: 0, coeff: -0.2 }]);
        assert_eq!(scm.auto()[0], 0.6);
    }

    #[test]
    fn missing_effect_is_an_error() {
        assert!(matches!(reconstruct_scm(&mag("0 -> 1 @ 0\n"), 1), Err(Error::MissingEffect(_))));
    }

    #[test]
    fn outcome_examples() {
        let scm = reconstruct_scm(&mag("# n_vars=3 tau_max=0\n0 -> 1 @ 0 0.4\n"), 2).unwrap();
        assert_eq!(simulate_outcome(&scm, Intervention { variable: 0, value: 2.0 }, &[], 7).unwrap(), 0.0);
        let scm = reconstruct_scm(&mag("0 -> 1 @ 0 0.4\n"), 1).unwrap();
        let o = simulate_outcome(&scm, Intervention { variable: 0, value: 2.0 }, &[], 9).unwrap();
        assert!((o - 0.8).abs() < 1e-15);
        let o = simulate_outcome(&scm, Intervention { variable: 1, value: -3.0 }, &[], 4).unwrap();
        assert_eq!(o, -3.0);
        let a = simulate_outcome(&scm, Intervention { variable: 0, value: 1.3 }, &[], 4).unwrap();
        let b = simulate_outcome(&scm, Intervention { variable: 0, value: 1.3 }, &[], 4).unwrap();
        assert_eq!(a.to_bits(), b.to_bits());
    }

    #[test]
    fn picks_positive_boundary_for_positive_effect() {
        let pag = parse_graph("0 -> 1 @ 0 0.4\n").unwrap();
        let p = find_optimal(&pag, &menu_pm(&[0], 1.64), 1, Some(&[]), &PlannerConfig::default()).unwrap();
        assert_eq!((p.variable, p.value_opt), (0, 1.64));
        assert!((p.expected_outcome - 0.656).abs() < 1e-12);
    }

    #[test]
    fn optimism_follows_the_best_mag() {
        // 1 -> y is certain (weak); 2 *-> y is 2 -> y (strong, enumerated first) or 2 <-> y
        let pag = parse_graph("# n_vars=3 tau_max=0\n0 <- 1 @ 0 0.1\n0 <o 2 @ 0 0.9\n").unwrap();
        let p = find_optimal(&pag, &menu_pm(&[1, 2], 1.0), 0, Some(&[]), &PlannerConfig::default()).unwrap();
        assert_eq!(p.variable, 2);
        assert_eq!(p.mags_evaluated, 2);
        assert_eq!(p.source_mag, 0);
        assert!((p.expected_outcome - 0.9).abs() < 1e-12);
    }

    #[test]
    fn objective_modes_on_negative_effect() {
        let pag = parse_graph("0 -> 1 @ 0 -0.4\n").unwrap();
        let menu = menu_pm(&[0], 1.64);
        let signed = find_optimal(&pag, &menu, 1, Some(&[]), &PlannerConfig::default()).unwrap();
        assert_eq!(signed.value_opt, -1.64);
        assert!((signed.expected_outcome - 0.656).abs() < 1e-12);
        let cfg = PlannerConfig { objective: ObjectiveMode::Magnitude, ..Default::default() };
        let magnitude = find_optimal(&pag, &menu, 1, Some(&[]), &cfg).unwrap();
        assert_eq!(magnitude.value_opt, -1.64);
    }

    #[test]
    fn all_equal_outcomes_break_ties_by_index() {
        let pag = parse_graph("# n_vars=3 tau_max=0\n").unwrap();
        let p = find_optimal(&pag, &menu_pm(&[2, 1], 1.0), 0, Some(&[]), &PlannerConfig::default()).unwrap();
        assert_eq!((p.variable, p.value_opt), (1, -1.0));
    }

    #[test]
    fn random_restarts_without_start() {
        let pag = parse_graph("0 -> 1 @ 1 0.5\n1 -> 1 @ 1 0.5\n").unwrap();
        let cfg = PlannerConfig::default();
        let a = find_optimal(&pag, &menu_pm(&[0], 1.0), 1, None, &cfg).unwrap();
        let b = find_optimal(&pag, &menu_pm(&[0], 1.0), 1, None, &cfg).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.value_opt, 1.0);
    }

    #[test]
    fn unsatisfiable_pag_has_no_model() {
        let mut pag = TsPag::empty(2, 0);
        pag.insert(Link {
            key: LinkKey::new(0, 0, 1).unwrap(),
            mark_from: Edgemark::Tail,
            mark_to: Edgemark::Tail,
            effect: Some(0.1),
        })
        .unwrap();
        let r = find_optimal(&pag, &menu_pm(&[0], 1.0), 1, Some(&[]), &PlannerConfig::default());
        assert!(matches!(r, Err(Error::NoModel)));
    }

    #[test]
    fn optimum_is_the_grid_maximum() {
        let pag = parse_graph(
            "# n_vars=4 tau_max=1\n0 o> 1 @ 0 0.3\n1 oo 2 @ 0 -0.5\n2 o> 3 @ 0 0.7\n0 o> 3 @ 1 -0.2\n3 o> 3 @ 1 0.4\n",
        )
        .unwrap();
        let menu = menu_pm(&[0, 1, 2], 1.5);
        let start = [0.3, -0.2, 0.1, 0.5, 0.0, 0.0, 0.0, 0.0];
        let p = find_optimal(&pag, &menu, 3, Some(&start), &PlannerConfig::default()).unwrap();
        let mut best = f64::NEG_INFINITY;
        for m in enumerate_mags(&pag, 256).mags {
            let scm = reconstruct_scm(&m, 3).unwrap();
            for e in &menu.entries {
                for &v in &e.candidates {
                    let o = simulate_outcome(&scm, Intervention { variable: e.variable, value: v }, &start, 20).unwrap();
                    best = best.max(o);
                }
            }
        }
        assert_eq!(p.expected_outcome, best);
        assert_ne!(p.variable, 3);
    }

    #[test]
    fn scaling_effects_keeps_the_argmax() {
        let text = |s: f64| format!("# n_vars=3 tau_max=0\n0 -> 2 @ 0 {}\n1 <> 2 @ 0 {}\n", 0.4 * s, -0.3 * s);
        let menu = menu_pm(&[0, 1], 1.0);
        let base = find_optimal(&parse_graph(&text(1.0)).unwrap(), &menu, 2, Some(&[]), &PlannerConfig::default()).unwrap();
        for lambda in [0.5, 2.0, 7.0] {
            let p = find_optimal(&parse_graph(&text(lambda)).unwrap(), &menu, 2, Some(&[]), &PlannerConfig::default())
                .unwrap();
            assert_eq!((p.variable, p.value_opt, p.source_mag), (base.variable, base.value_opt, base.source_mag));
            assert!((p.expected_outcome - lambda * base.expected_outcome).abs() < 1e-12);
        }
    }

    #[test]
    fn epsilon_schedule() {
        assert_eq!(epsilon_at(0, 0.5, 0.99), 0.5);
        assert!((epsilon_at(1, 0.5, 0.99) - 0.495).abs() < 1e-15);
        let e200 = epsilon_at(200, 0.5, 0.99);
        assert!((0.0668..=0.0670).contains(&e200), "{e200}");
        for s in 0..500 {
            assert!(epsilon_at(s + 1, 0.5, 0.99) < epsilon_at(s, 0.5, 0.99));
        }
    }

    #[test]
    fn value_selection_frequencies() {
        let p = Proposal {
            variable: 0,
            value_opt: 1.0,
            value_alt: 0.0,
            expected_outcome: 0.0,
            source_mag: 0,
            mags_evaluated: 1,
            truncated: false,
        };
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        assert!((0..1000).all(|_| select_value(&p, 0.0, &mut rng) == (1.0, false)));
        assert!((0..1000).all(|_| select_value(&p, 1.0, &mut rng) == (0.0, true)));
        let alt = (0..10_000).filter(|_| select_value(&p, 0.5, &mut rng).1).count();
        assert!((4800..=5200).contains(&alt), "{alt}");
    }
}
