//! Ancestry constraints from interventional samples.
//!
//! An intervened `X^i_{t-tau}` that still correlates with an observational
//! `X^j_t` is an ancestor of it; one that is clearly independent is not.

use std::fmt::Write as _;

use crate::scm::Series;
use crate::stats::pearson_test;
use crate::{Error, Result};

/// `X^i_{t-tau}` is (dep) or is not (indep) an ancestor of `X^j_t`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Constraint {
    pub j: usize,
    pub i: usize,
    pub tau: usize,
    pub p: f64,
}

impl Constraint {
    fn sort_key(&self) -> (usize, usize, usize) {
        (self.j, self.i, self.tau)
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct ConstraintList {
    pub deps: Vec<Constraint>,
    pub indeps: Vec<Constraint>,
}

/// Which list the contemporaneous cycle pruning runs on.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PruneList {
    Deps,
    Indeps,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct InterventionalConfig {
    pub tau_max: usize,
    pub alpha_dep: f64,
    pub alpha_indep: f64,
    pub prune: PruneList,
}

impl Default for InterventionalConfig {
    fn default() -> Self {
        InterventionalConfig { tau_max: 1, alpha_dep: 0.05, alpha_indep: 0.8, prune: PruneList::Deps }
    }
}

impl InterventionalConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.alpha_dep) {
            return Err(Error::config("alpha_dep", "must lie in [0, 1]"));
        }
        if !(0.0..=1.0).contains(&self.alpha_indep) {
            return Err(Error::config("alpha_indep", "must lie in [0, 1]"));
        }
        if self.alpha_dep >= self.alpha_indep {
            return Err(Error::config(
                "alpha_dep",
                format!("must be below alpha_indep ({} >= {})", self.alpha_dep, self.alpha_indep),
            ));
        }
        Ok(())
    }
}

impl ConstraintList {
    pub fn is_empty(&self) -> bool {
        self.deps.is_empty() && self.indeps.is_empty()
    }

    pub fn sort(&mut self) {
        self.deps.sort_by_key(Constraint::sort_key);
        self.indeps.sort_by_key(Constraint::sort_key);
    }

    /// `kind,j,i,tau,p`, deps first.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("kind,j,i,tau,p\n");
        for (kind, list) in [("dep", &self.deps), ("indep", &self.indeps)] {
            for c in list {
                let _ = writeln!(out, "{kind},{},{},{},{}", c.j, c.i, c.tau, c.p);
            }
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<ConstraintList> {
        let mut out = ConstraintList::default();
        let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
        match lines.next() {
            Some((_, h)) if h.trim() == "kind,j,i,tau,p" => {}
            Some((idx, _)) => return Err(Error::parse(idx + 1, "header must be `kind,j,i,tau,p`")),
            None => return Ok(out),
        }
        for (idx, line) in lines {
            let lineno = idx + 1;
            let f: Vec<&str> = line.split(',').map(str::trim).collect();
            if f.len() != 5 {
                return Err(Error::parse(lineno, format!("expected 5 fields, got {}", f.len())));
            }
            let int = |s: &str| -> Result<usize> {
                s.parse().map_err(|_| Error::parse(lineno, format!("bad index `{s}`")))
            };
            let c = Constraint {
                j: int(f[1])?,
                i: int(f[2])?,
                tau: int(f[3])?,
                p: f[4].parse().map_err(|_| Error::parse(lineno, format!("bad p-value `{}`", f[4])))?,
            };
            if c.i == c.j && c.tau == 0 {
                return Err(Error::parse(lineno, "contemporaneous self-constraint"));
            }
            match f[0] {
                "dep" => out.deps.push(c),
                "indep" => out.indeps.push(c),
                other => return Err(Error::parse(lineno, format!("unknown kind `{other}`"))),
            }
        }
        out.sort();
        Ok(out)
    }
}

/// Three samples give Fisher z no degrees of freedom (p is always 1), which
/// would read as a certain independence.
pub const MIN_SAMPLES: usize = 4;

/// Tests every `(i, j, tau)` except contemporaneous self-pairs, pairing
/// interventional cells of `i` at `t - tau` with observational cells of `j`
/// at `t` across all `t`. Pairs with fewer than [`MIN_SAMPLES`] usable
/// samples, or whose intervened values never vary, yield nothing.
pub fn discover_interventional(data: &Series, cfg: &InterventionalConfig) -> Result<ConstraintList> {
    cfg.validate()?;
    let n = data.n_vars();
    let len = data.len();
    let mut out = ConstraintList::default();
    if !data.has_interventions() {
        return Ok(out);
    }
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for tau in 0..=cfg.tau_max {
        for i in 0..n {
            for j in 0..n {
                if tau == 0 && i == j {
                    continue;
                }
                xs.clear();
                ys.clear();
                for t in tau..len {
                    if data.is_do(t - tau, i) && !data.is_do(t, j) {
                        xs.push(data.value(t - tau, i));
                        ys.push(data.value(t, j));
                    }
                }
                if xs.len() < MIN_SAMPLES {
                    continue;
                }
                let r = pearson_test(&xs, &ys)?;
                if r.degenerate {
                    continue;
                }
                let c = Constraint { j, i, tau, p: r.p_value };
                if r.p_value <= cfg.alpha_dep {
                    out.deps.push(c);
                } else if r.p_value >= cfg.alpha_indep {
                    out.indeps.push(c);
                }
            }
        }
    }
    match cfg.prune {
        PruneList::Deps => prune_contemporaneous_cycles(&mut out.deps, n),
        PruneList::Indeps => prune_contemporaneous_cycles(&mut out.indeps, n),
    }
    out.sort();
    Ok(out)
}

/// Repeatedly drops the highest-p contemporaneous constraint `i -> j` that
/// lies on a directed cycle, until none remains.
pub fn prune_contemporaneous_cycles(list: &mut Vec<Constraint>, n_vars: usize) {
    loop {
        let n = list
            .iter()
            .map(|c| c.i.max(c.j) + 1)
            .max()
            .unwrap_or(0)
            .max(n_vars);
        let mut reach = vec![false; n * n];
        for c in list.iter().filter(|c| c.tau == 0) {
            reach[c.i * n + c.j] = true;
        }
        for k in 0..n {
            for a in 0..n {
                if reach[a * n + k] {
                    for b in 0..n {
                        if reach[k * n + b] {
                            reach[a * n + b] = true;
                        }
                    }
                }
            }
        }
        // an edge i -> j closes a cycle iff j reaches i
        let worst = list
            .iter()
            .enumerate()
            .filter(|(_, c)| c.tau == 0 && reach[c.j * n + c.i])
            .max_by(|(_, a), (_, b)| a.p.total_cmp(&b.p).then(b.sort_key().cmp(&a.sort_key())))
            .map(|(idx, _)| idx);
        match worst {
            Some(idx) => {
                list.remove(idx);
            }
            None => return,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::topological_order;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::StandardNormal;

    fn cfg() -> InterventionalConfig {
        InterventionalConfig::default()
    }

    #[test]
    fn no_interventions_no_constraints() {
        let mut s = Series::new(2);
        for t in 0..50 {
            s.push_row(&[t as f64, (t * t) as f64], &[false, false]).unwrap();
        }
        assert!(discover_interventional(&s, &cfg()).unwrap().is_empty());
    }

    #[test]
    fn ramp_copied_into_observational_column_is_a_dependency() {
        let mut s = Series::new(2);
        for t in 0..30 {
            s.push_row(&[t as f64, t as f64], &[true, false]).unwrap();
        }
        let c = discover_interventional(&s, &cfg()).unwrap();
        let dep = c.deps.iter().find(|c| (c.j, c.i, c.tau) == (1, 0, 0)).unwrap();
        assert!(dep.p < 1e-12);
        assert!(c.deps.iter().chain(&c.indeps).all(|c| !(c.i == c.j && c.tau == 0)));
    }

    #[test]
    fn null_pairs_land_in_indeps_about_a_fifth_of_the_time() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let cfg = InterventionalConfig { tau_max: 0, ..cfg() };
        let trials = 2000;
        let mut hits = 0;
        for _ in 0..trials {
            let mut s = Series::new(2);
            for _ in 0..200 {
                let row = [rng.sample(StandardNormal), rng.sample(StandardNormal)];
                s.push_row(&row, &[true, false]).unwrap();
            }
            let c = discover_interventional(&s, &cfg).unwrap();
            hits += usize::from(c.indeps.iter().any(|c| (c.j, c.i) == (1, 0)));
        }
        let frac = hits as f64 / trials as f64;
        // binomial sd at p = 0.2 is about 0.009
        assert!((frac - 0.2).abs() < 0.035, "{frac}");
    }

    #[test]
    fn cellwise_pairing_uses_only_matching_cells() {
        // X0 is intervened on even steps only; X1 copies X0 with lag 1 on the
        // following (observational) step and is noise elsewhere
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut s = Series::new(2);
        let mut prev = 0.0;
        for t in 0..200 {
            let x0: f64 = rng.sample(StandardNormal);
            let x1 = if t % 2 == 1 { prev } else { rng.sample(StandardNormal) };
            s.push_row(&[x0, x1], &[t % 2 == 0, false]).unwrap();
            prev = x0;
        }
        let c = discover_interventional(&s, &cfg()).unwrap();
        assert!(c.deps.iter().any(|c| (c.j, c.i, c.tau) == (1, 0, 1)));
        assert!(!c.deps.iter().any(|c| (c.j, c.i, c.tau) == (1, 0, 0)));
    }

    #[test]
    fn too_few_samples_are_skipped() {
        let mut s = Series::new(2);
        s.push_row(&[1.0, 1.0], &[true, false]).unwrap();
        s.push_row(&[2.0, 2.0], &[true, false]).unwrap();
        assert!(discover_interventional(&s, &cfg()).unwrap().is_empty());
        // three samples carry no information under Fisher z
        s.push_row(&[3.0, -7.0], &[true, false]).unwrap();
        assert!(discover_interventional(&s, &cfg()).unwrap().is_empty());
        s.push_row(&[4.0, 4.0], &[true, false]).unwrap();
        assert!(!discover_interventional(&s, &cfg()).unwrap().is_empty());
    }

    #[test]
    fn cycle_pruning_removes_the_weakest_member() {
        let c = |i, j, tau, p| Constraint { j, i, tau, p };
        // cycle 0 -> 1 -> 2 -> 0; 2 -> 3 and the lagged 1 -> 0 sit outside it
        let mut list = vec![c(0, 1, 0, 0.01), c(1, 2, 0, 0.03), c(2, 0, 0, 0.02), c(2, 3, 0, 0.04), c(1, 0, 1, 0.049)];
        prune_contemporaneous_cycles(&mut list, 4);
        assert_eq!(list.len(), 4);
        assert!(!list.iter().any(|x| (x.i, x.j, x.tau) == (1, 2, 0)));
    }

    #[test]
    fn pruned_deps_are_acyclic() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..200 {
            let mut list = Vec::new();
            for i in 0..5 {
                for j in 0..5 {
                    if i != j && rng.random_bool(0.4) {
                        list.push(Constraint { j, i, tau: 0, p: rng.random::<f64>() * 0.05 });
                    }
                }
            }
            prune_contemporaneous_cycles(&mut list, 5);
            assert!(topological_order(5, list.iter().map(|c| (c.i, c.j))).is_some());
        }
    }

    #[test]
    fn literal_prune_switch_targets_indeps() {
        let mut s = Series::new(2);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for t in 0..400 {
            let row = [rng.sample(StandardNormal), rng.sample(StandardNormal)];
            let m = if t % 2 == 0 { [true, false] } else { [false, true] };
            s.push_row(&row, &m).unwrap();
        }
        let cfg_deps = InterventionalConfig { alpha_indep: 0.06, tau_max: 0, ..cfg() };
        let cfg_indeps = InterventionalConfig { prune: PruneList::Indeps, ..cfg_deps };
        let a = discover_interventional(&s, &cfg_deps).unwrap();
        let b = discover_interventional(&s, &cfg_indeps).unwrap();
        // with a wide indep band both directions are independent; only the
        // literal reading prunes one of them
        assert_eq!(a.indeps.len(), 2);
        assert_eq!(b.indeps.len(), 1);
    }

    #[test]
    fn bins_are_disjoint() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let mut s = Series::new(3);
        for t in 0..300 {
            let row: Vec<f64> = (0..3).map(|_| rng.sample(StandardNormal)).collect();
            let mut m = [false; 3];
            m[t % 3] = true;
            s.push_row(&row, &m).unwrap();
        }
        let c = discover_interventional(&s, &cfg()).unwrap();
        for d in &c.deps {
            assert!(!c.indeps.iter().any(|x| (x.j, x.i, x.tau) == (d.j, d.i, d.tau)));
        }
    }

    #[test]
    fn csv_round_trip() {
        let list = ConstraintList {
            deps: vec![Constraint { j: 1, i: 0, tau: 0, p: 0.0125 }],
            indeps: vec![Constraint { j: 0, i: 2, tau: 1, p: 0.93 }],
        };
        let text = list.to_csv();
        assert_eq!(text, "kind,j,i,tau,p\ndep,1,0,0,0.0125\nindep,0,2,1,0.93\n");
        assert_eq!(ConstraintList::from_csv(&text).unwrap(), list);
        assert!(ConstraintList::from_csv("kind,j,i,tau,p\nfoo,1,0,0,0.1\n").is_err());
    }
}
