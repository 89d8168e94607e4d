//! Constraint-seeded observational discovery.
//!
//! A PC/FCI-style skeleton search with collider orientation over a lag
//! window, run in rounds: each round starts from the complete graph, writes
//! the interventional constraints as frozen marks, then the ancestorships
//! found by the previous round, before removing and orienting links again.
//!
//! CI tests use only observational cells: a sample enters a test only if
//! every tested or conditioned cell in it is observational.

use std::cell::RefCell;
use std::collections::{BTreeMap, HashMap};

use crate::graph::{orient_colliders_in_place, Edgemark, End, Link, LinkKey, Node, OrientationConflict, Sepsets, TsPag};
use crate::idiscovery::{Constraint, ConstraintList};
use crate::scm::Series;
use crate::stats::{partial_corr_from_cov, TestResult};
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DiscoveryConfig {
    pub alpha_obs: f64,
    pub tau_max: usize,
    /// Preliminary rounds before the final one.
    pub preliminary_rounds: usize,
    /// Largest conditioning set size.
    pub p_max: usize,
}

impl Default for DiscoveryConfig {
    fn default() -> Self {
        DiscoveryConfig { alpha_obs: 0.05, tau_max: 1, preliminary_rounds: 1, p_max: 3 }
    }
}

impl DiscoveryConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha_obs > 0.0 && self.alpha_obs < 1.0) {
            return Err(Error::config("alpha_obs", "must lie in (0, 1)"));
        }
        Ok(())
    }
}

/// Separating sets of removed links and the minimum-magnitude statistic of
/// every tested link.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct SepsetStore {
    pub sepsets: Sepsets,
    pub effects: BTreeMap<LinkKey, f64>,
}

impl SepsetStore {
    /// Keeps the statistic if its magnitude is the smallest seen so far.
    pub fn record(&mut self, key: LinkKey, statistic: f64) {
        self.effects
            .entry(key)
            .and_modify(|e| {
                if statistic.abs() < e.abs() {
                    *e = statistic;
                }
            })
            .or_insert(statistic);
    }

    /// Effect of `X^i_{t-tau}` on `X^j_t`, if the pair was tested.
    pub fn effect_size(&self, i: usize, j: usize, tau: usize) -> Option<f64> {
        let (key, _) = LinkKey::between(Node::new(i, tau), Node::new(j, 0))?;
        self.effects.get(&key).copied()
    }
}

/// A constraint write that overrode or lost against another one.
#[derive(Clone, Debug, PartialEq)]
pub struct InjectionConflict {
    pub kept: Constraint,
    pub dropped: Constraint,
    pub kept_is_dep: bool,
}

fn constraint_end(c: &Constraint) -> Option<(LinkKey, End)> {
    LinkKey::between(Node::new(c.i, c.tau), Node::new(c.j, 0))
}

/// Writes dependencies as `i -> j` and independencies as an arrowhead at
/// `i`, freezing every written mark. Links are never added or removed.
///
/// A dependency and an independency on the same `(i, j, tau)` are resolved
/// in favour of the smaller p-value.
pub fn inject_constraints(pag: &mut TsPag, constraints: &ConstraintList) -> Vec<InjectionConflict> {
    let mut conflicts = Vec::new();
    let same = |a: &Constraint, b: &Constraint| (a.i, a.j, a.tau) == (b.i, b.j, b.tau);
    let mut deps: Vec<&Constraint> = Vec::new();
    for d in &constraints.deps {
        match constraints.indeps.iter().find(|x| same(x, d)) {
            Some(x) if x.p <= d.p => {
                conflicts.push(InjectionConflict { kept: *x, dropped: *d, kept_is_dep: false })
            }
            _ => deps.push(d),
        }
    }
    let mut indeps: Vec<&Constraint> = Vec::new();
    for x in &constraints.indeps {
        match constraints.deps.iter().find(|d| same(x, d)) {
            Some(d) if d.p < x.p => {
                conflicts.push(InjectionConflict { kept: *d, dropped: *x, kept_is_dep: true })
            }
            _ => indeps.push(x),
        }
    }

    for d in deps {
        let Some((key, end_i)) = constraint_end(d) else { continue };
        if !pag.contains(&key) || key.lag > pag.tau_max() {
            continue;
        }
        pag.set_mark(&key, end_i, Edgemark::Tail);
        pag.set_mark(&key, end_i.other(), Edgemark::Arrow);
        pag.freeze(&key, end_i);
        pag.freeze(&key, end_i.other());
    }
    for x in indeps {
        let Some((key, end_i)) = constraint_end(x) else { continue };
        if !pag.contains(&key) || key.lag > pag.tau_max() {
            continue;
        }
        pag.set_mark(&key, end_i, Edgemark::Arrow);
        pag.freeze(&key, end_i);
    }
    conflicts
}

/// Lagged view of a series: column `s * n + v` holds `X^v_{t-s}` for rows
/// `t = tau_max..T`.
struct CiData {
    n_vars: usize,
    rows: usize,
    columns: Vec<Vec<f64>>,
    /// Per row, the columns whose cell is interventional.
    row_do: Vec<u64>,
    dirty: u64,
    clean_cov: RefCell<Option<Vec<f64>>>,
    cache: RefCell<HashMap<u64, (Vec<f64>, usize)>>,
}

impl CiData {
    fn new(data: &Series, tau_max: usize) -> Result<CiData> {
        let n = data.n_vars();
        let width = n * (tau_max + 1);
        if width > 64 {
            return Err(Error::InvalidArgument(format!(
                "{n} variables over {} lags exceed the 64 lagged columns supported",
                tau_max + 1
            )));
        }
        let rows = data.len().saturating_sub(tau_max);
        let mut columns = vec![Vec::with_capacity(rows); width];
        let mut row_do = vec![0u64; rows];
        for r in 0..rows {
            let t = r + tau_max;
            for s in 0..=tau_max {
                for v in 0..n {
                    let c = s * n + v;
                    columns[c].push(data.value(t - s, v));
                    if data.is_do(t - s, v) {
                        row_do[r] |= 1 << c;
                    }
                }
            }
        }
        let dirty = row_do.iter().fold(0, |acc, b| acc | b);
        Ok(CiData {
            n_vars: n,
            rows,
            columns,
            row_do,
            dirty,
            clean_cov: RefCell::new(None),
            cache: RefCell::new(HashMap::new()),
        })
    }

    fn column_of(&self, node: Node) -> usize {
        node.lag * self.n_vars + node.var
    }

    /// Covariance of `cols` (ascending) over rows where none of `mask` is
    /// interventional.
    fn covariance(&self, cols: &[usize], mask: u64) -> (Vec<f64>, usize) {
        let usable: Vec<usize> = (0..self.rows).filter(|&r| self.row_do[r] & mask == 0).collect();
        let k = cols.len();
        let m = usable.len();
        let mut centered: Vec<Vec<f64>> = Vec::with_capacity(k);
        for &c in cols {
            let col = &self.columns[c];
            if m == 0 {
                centered.push(Vec::new());
                continue;
            }
            let first = col[usable[0]];
            if usable.iter().all(|&r| col[r] == first) {
                centered.push(vec![0.0; m]);
                continue;
            }
            let mean = usable.iter().map(|&r| col[r]).sum::<f64>() / m as f64;
            centered.push(usable.iter().map(|&r| col[r] - mean).collect());
        }
        let mut cov = vec![0.0; k * k];
        for a in 0..k {
            for b in a..k {
                let s: f64 = centered[a].iter().zip(&centered[b]).map(|(u, v)| u * v).sum();
                let v = if m == 0 { 0.0 } else { s / m as f64 };
                cov[a * k + b] = v;
                cov[b * k + a] = v;
            }
        }
        (cov, m)
    }

    /// Partial correlation test of `x` and `y` given `s`; `None` when too few
    /// usable samples remain.
    fn test(&self, x: Node, y: Node, s: &[Node]) -> Option<TestResult> {
        let nodes: Vec<usize> = [x, y].iter().chain(s).map(|&nd| self.column_of(nd)).collect();
        let involved = nodes.iter().fold(0u64, |acc, &c| acc | (1 << c));
        let k = nodes.len();
        let mut sub = vec![0.0; k * k];
        let n_rows;
        if involved & self.dirty == 0 {
            let mut clean = self.clean_cov.borrow_mut();
            let full = clean.get_or_insert_with(|| {
                let all: Vec<usize> = (0..self.columns.len()).collect();
                self.covariance(&all, 0).0
            });
            let w = self.columns.len();
            for a in 0..k {
                for b in 0..k {
                    sub[a * k + b] = full[nodes[a] * w + nodes[b]];
                }
            }
            n_rows = self.rows;
        } else {
            let mut cache = self.cache.borrow_mut();
            let (cov, m) = cache.entry(involved).or_insert_with(|| {
                let cols: Vec<usize> = (0..64).filter(|c| involved & (1 << c) != 0).collect();
                self.covariance(&cols, involved)
            });
            let pos = |c: usize| (involved & ((1u64 << c) - 1)).count_ones() as usize;
            let kk = involved.count_ones() as usize;
            for a in 0..k {
                for b in 0..k {
                    sub[a * k + b] = cov[pos(nodes[a]) * kk + pos(nodes[b])];
                }
            }
            n_rows = *m;
        }
        if n_rows < s.len() + 4 {
            return None;
        }
        Some(partial_corr_from_cov(&sub, k, n_rows))
    }
}

/// Output of [`discover`].
#[derive(Clone, Debug)]
pub struct Discovery {
    pub pag: TsPag,
    pub store: SepsetStore,
    pub injection_conflicts: Vec<InjectionConflict>,
    pub orientation_conflicts: Vec<OrientationConflict>,
    pub tests_run: usize,
}

/// Runs the preliminary rounds and the final round; surviving links carry
/// their minimum-magnitude statistic as effect size (0 if never tested).
pub fn discover(data: &Series, constraints: &ConstraintList, cfg: &DiscoveryConfig) -> Result<Discovery> {
    cfg.validate()?;
    let ci = CiData::new(data, cfg.tau_max)?;
    let n = data.n_vars();
    let mut tests_run = 0;

    let mut pag = TsPag::init_complete(n, cfg.tau_max);
    let injection_conflicts = inject_constraints(&mut pag, constraints);
    // A round is a pure function of its starting graph, so a round that
    // starts where the previous one did is not rerun.
    let mut last: Option<(TsPag, TsPag, SepsetStore, Vec<OrientationConflict>)> = None;
    let mut run_round = |start: TsPag, tests_run: &mut usize| {
        if let Some((prev_start, out, store, conflicts)) = &last {
            if *prev_start == start {
                return (out.clone(), store.clone(), conflicts.clone());
            }
        }
        let mut out = start.clone();
        let mut store = SepsetStore::default();
        *tests_run += removal_phase(&mut out, &ci, cfg, &mut store);
        let conflicts = orient_colliders_in_place(&mut out, &store.sepsets);
        last = Some((start, out.clone(), store.clone(), conflicts.clone()));
        (out, store, conflicts)
    };
    for _ in 0..cfg.preliminary_rounds {
        let (out, _, _) = run_round(pag, &mut tests_run);
        let harvested: Vec<(LinkKey, End)> = out
            .links()
            .filter_map(|l| l.directed_source().map(|e| (l.key, e)))
            .collect();
        pag = TsPag::init_complete(n, cfg.tau_max);
        inject_constraints(&mut pag, constraints);
        for (key, src) in harvested {
            for (end, mark) in [(src, Edgemark::Tail), (src.other(), Edgemark::Arrow)] {
                if !pag.is_fixed(&key, end) {
                    pag.set_mark(&key, end, mark);
                }
            }
        }
    }
    let (mut pag, store, orientation_conflicts) = run_round(pag, &mut tests_run);
    for key in pag.keys() {
        let effect = store.effects.get(&key).copied().unwrap_or(0.0);
        pag.set_effect(&key, Some(effect));
    }
    Ok(Discovery { pag, store, injection_conflicts, orientation_conflicts, tests_run })
}

/// Conditioning candidates for the link `x *-* y`, best first: known parents
/// of either endpoint, then by the strongest recorded association with an
/// endpoint. Nodes that are known non-ancestors of every endpoint they touch
/// are left out.
fn candidates(snapshot: &TsPag, store: &SepsetStore, x: Node, y: Node) -> Vec<Node> {
    let mut pool: Vec<Node> = snapshot.neighbors(x);
    for z in snapshot.neighbors(y) {
        if !pool.contains(&z) {
            pool.push(z);
        }
    }
    pool.retain(|&z| z != x && z != y);
    let mut scored: Vec<(bool, f64, Node)> = Vec::with_capacity(pool.len());
    for z in pool {
        let mut touches = 0;
        let mut arrows = 0;
        let mut parent = false;
        let mut score = 0.0f64;
        for e in [x, y] {
            let Some(mark_z) = snapshot.mark_at(z, e) else { continue };
            touches += 1;
            if mark_z == Edgemark::Arrow {
                arrows += 1;
            }
            if mark_z == Edgemark::Tail && snapshot.mark_at(e, z) == Some(Edgemark::Arrow) {
                parent = true;
            }
            if let Some((key, _)) = LinkKey::between(z, e) {
                if let Some(s) = store.effects.get(&key) {
                    score = score.max(s.abs());
                }
            }
        }
        if touches > 0 && arrows == touches {
            continue;
        }
        scored.push((parent, score, z));
    }
    scored.sort_by(|a, b| b.0.cmp(&a.0).then(b.1.total_cmp(&a.1)).then(a.2.cmp(&b.2)));
    scored.into_iter().map(|(_, _, z)| z).collect()
}

/// Calls `f` on each size-`c` subset of `items` in lexicographic index order
/// until it returns true.
fn for_each_subset<T: Copy>(items: &[T], c: usize, mut f: impl FnMut(&[T]) -> bool) {
    if c > items.len() {
        return;
    }
    let mut idx: Vec<usize> = (0..c).collect();
    let mut buf: Vec<T> = Vec::with_capacity(c);
    loop {
        buf.clear();
        buf.extend(idx.iter().map(|&i| items[i]));
        if f(&buf) {
            return;
        }
        // rightmost index that can still move right
        let mut pos = c;
        while pos > 0 && idx[pos - 1] == items.len() - c + pos - 1 {
            pos -= 1;
        }
        if pos == 0 {
            return;
        }
        idx[pos - 1] += 1;
        for k in pos..c {
            idx[k] = idx[k - 1] + 1;
        }
    }
}

/// Removes links whose endpoints test independent given some conditioning
/// set of size `0..=p_max`. Adjacencies are frozen per level. Returns the
/// number of tests run.
fn removal_phase(pag: &mut TsPag, ci: &CiData, cfg: &DiscoveryConfig, store: &mut SepsetStore) -> usize {
    let mut tests = 0;
    for c in 0..=cfg.p_max {
        let snapshot = pag.clone();
        let mut any_candidate_set = false;
        for key in snapshot.keys() {
            let (x, y) = key.nodes();
            let cands = candidates(&snapshot, store, x, y);
            if cands.len() < c {
                continue;
            }
            any_candidate_set = true;
            let mut removed_with: Option<Vec<Node>> = None;
            for_each_subset(&cands, c, |s| {
                let Some(r) = ci.test(x, y, s) else { return false };
                tests += 1;
                store.record(key, r.statistic);
                if r.p_value > cfg.alpha_obs {
                    removed_with = Some(s.to_vec());
                    true
                } else {
                    false
                }
            });
            if let Some(mut s) = removed_with {
                s.sort();
                pag.remove(&key);
                store.sepsets.insert(key, s);
            }
        }
        if !any_candidate_set {
            break;
        }
    }
    tests
}

/// Directed links `i -> j` of a PAG as `(i, tau, j)` triples.
pub fn directed_links(pag: &TsPag) -> Vec<(usize, usize, usize)> {
    pag.links()
        .filter_map(|l: Link| match l.directed_source()? {
            End::From => Some((l.key.from, l.key.lag, l.key.to)),
            End::To => Some((l.key.to, 0, l.key.from)),
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{DirectedEdge, Dag};
    use crate::scm::{generate, Intervention, Mechanism, Scm};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::StandardNormal;

    fn key(from: usize, lag: usize, to: usize) -> LinkKey {
        LinkKey::new(from, lag, to).unwrap()
    }

    fn iid(n_vars: usize, t: usize, seed: u64, f: impl Fn(&[f64]) -> Vec<f64>) -> Series {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut s = Series::new(n_vars);
        let mask = vec![false; n_vars];
        for _ in 0..t {
            let e: Vec<f64> = (0..n_vars).map(|_| rng.sample(StandardNormal)).collect();
            s.push_row(&f(&e), &mask).unwrap();
        }
        s
    }

    fn contemporaneous(tau_max: usize) -> DiscoveryConfig {
        DiscoveryConfig { tau_max, ..Default::default() }
    }

    #[test]
    fn subsets_are_lexicographic() {
        let mut seen = Vec::new();
        for_each_subset(&[1, 2, 3, 4], 2, |s| {
            seen.push(s.to_vec());
            false
        });
        assert_eq!(seen, vec![vec![1, 2], vec![1, 3], vec![1, 4], vec![2, 3], vec![2, 4], vec![3, 4]]);
        let mut count = 0;
        for_each_subset(&[1, 2, 3], 0, |s| {
            assert!(s.is_empty());
            count += 1;
            false
        });
        assert_eq!(count, 1);
        for_each_subset(&[1], 2, |_| panic!("no subsets"));
        let mut count = 0;
        for_each_subset(&[1, 2, 3], 3, |_| {
            count += 1;
            false
        });
        assert_eq!(count, 1);
    }

    #[test]
    fn empty_constraints_leave_the_graph() {
        let mut pag = TsPag::init_complete(3, 1);
        let before = pag.clone();
        assert!(inject_constraints(&mut pag, &ConstraintList::default()).is_empty());
        assert_eq!(pag, before);
    }

    #[test]
    fn dependency_is_written_and_frozen() {
        let mut pag = TsPag::init_complete(2, 0);
        let list = ConstraintList { deps: vec![Constraint { j: 1, i: 0, tau: 0, p: 0.01 }], indeps: vec![] };
        inject_constraints(&mut pag, &list);
        let k = key(0, 0, 1);
        assert_eq!(pag.mark(&k, End::From), Some(Edgemark::Tail));
        assert_eq!(pag.mark(&k, End::To), Some(Edgemark::Arrow));
        assert!(pag.is_fixed(&k, End::From) && pag.is_fixed(&k, End::To));
    }

    #[test]
    fn two_independencies_make_a_bidirected_link() {
        let mut pag = TsPag::init_complete(2, 0);
        let c = |j, i| Constraint { j, i, tau: 0, p: 0.9 };
        let list = ConstraintList { deps: vec![], indeps: vec![c(1, 0), c(0, 1)] };
        inject_constraints(&mut pag, &list);
        let k = key(0, 0, 1);
        assert_eq!(pag.mark(&k, End::From), Some(Edgemark::Arrow));
        assert_eq!(pag.mark(&k, End::To), Some(Edgemark::Arrow));
    }

    #[test]
    fn lagged_independency_marks_the_earlier_end() {
        let mut pag = TsPag::init_complete(2, 1);
        let list = ConstraintList { deps: vec![], indeps: vec![Constraint { j: 0, i: 1, tau: 1, p: 0.9 }] };
        inject_constraints(&mut pag, &list);
        assert_eq!(pag.mark(&key(1, 1, 0), End::From), Some(Edgemark::Arrow));
        assert!(pag.is_fixed(&key(1, 1, 0), End::From));
    }

    #[test]
    fn conflicting_constraints_keep_the_smaller_p() {
        let c = |p| Constraint { j: 1, i: 0, tau: 0, p };
        let mut pag = TsPag::init_complete(2, 0);
        let list = ConstraintList { deps: vec![c(0.01)], indeps: vec![c(0.9)] };
        let conflicts = inject_constraints(&mut pag, &list);
        assert_eq!(conflicts.len(), 1);
        assert!(conflicts[0].kept_is_dep);
        assert_eq!(pag.mark(&key(0, 0, 1), End::From), Some(Edgemark::Tail));

        let mut pag = TsPag::init_complete(2, 0);
        let list = ConstraintList { deps: vec![c(0.5)], indeps: vec![c(0.4)] };
        let conflicts = inject_constraints(&mut pag, &list);
        assert!(!conflicts[0].kept_is_dep);
        assert_eq!(pag.mark(&key(0, 0, 1), End::From), Some(Edgemark::Arrow));
        assert_eq!(pag.mark(&key(0, 0, 1), End::To), Some(Edgemark::Circle));
    }

    #[test]
    fn independent_pair_loses_its_link() {
        let data = iid(2, 5000, 1, |e| e.to_vec());
        let d = discover(&data, &ConstraintList::default(), &contemporaneous(0)).unwrap();
        assert!(d.pag.is_empty());
    }

    #[test]
    fn collider_is_recovered() {
        let mut hits = 0;
        for seed in 0..20 {
            let data = iid(3, 10_000, seed, |e| vec![e[0], e[1], 0.5 * e[0] + 0.5 * e[1] + e[2]]);
            let d = discover(&data, &ConstraintList::default(), &contemporaneous(0)).unwrap();
            let ok = d.pag.len() == 2
                && d.pag.mark(&key(0, 0, 2), End::To) == Some(Edgemark::Arrow)
                && d.pag.mark(&key(1, 0, 2), End::To) == Some(Edgemark::Arrow);
            hits += usize::from(ok);
        }
        assert!(hits >= 18, "{hits}");
    }

    #[test]
    fn independency_survives_on_an_unresolvable_link() {
        // X0 -> X4 alone cannot be oriented from observational data
        let data = iid(5, 3000, 2, |e| vec![e[0], e[1], e[2], e[3], 0.7 * e[0] + e[4]]);
        let list = ConstraintList { deps: vec![], indeps: vec![Constraint { j: 0, i: 4, tau: 0, p: 0.9 }] };
        let d = discover(&data, &list, &contemporaneous(0)).unwrap();
        assert!(d.pag.contains(&key(0, 0, 4)));
        assert_eq!(d.pag.mark(&key(0, 0, 4), End::To), Some(Edgemark::Arrow));
        assert!(d.pag.is_fixed(&key(0, 0, 4), End::To));
    }

    #[test]
    fn effect_size_keeps_sign_of_smallest_magnitude() {
        let mut store = SepsetStore::default();
        for s in [0.41, -0.07, 0.30] {
            store.record(key(0, 0, 1), s);
        }
        assert_eq!(store.effect_size(0, 1, 0), Some(-0.07));
        assert_eq!(store.effect_size(1, 0, 0), Some(-0.07));
        assert_eq!(store.effect_size(0, 1, 1), None);
    }

    #[test]
    fn fork_effect_shrinks_under_conditioning() {
        // X0 <- X1 -> X2
        let data = iid(3, 5000, 3, |e| vec![e[1] + e[0], e[1], e[1] + e[2]]);
        let d = discover(&data, &ConstraintList::default(), &contemporaneous(0)).unwrap();
        let raw = crate::stats::pearson_test(&data.column(0), &data.column(2)).unwrap().statistic;
        let eff = d.store.effect_size(0, 2, 0).unwrap();
        assert!(eff.abs() < raw.abs());
        assert!(!d.pag.contains(&key(0, 0, 2)));
    }

    #[test]
    fn interventional_cells_are_excluded() {
        // X1 copies X0 except at intervened rows, where X0 is set by do and
        // X1 is unrelated noise; only observational rows should be used
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let mut s = Series::new(2);
        for t in 0..2000 {
            let x0: f64 = rng.sample(StandardNormal);
            let intervened = t % 4 == 0;
            let x1 = if intervened { rng.sample(StandardNormal) } else { x0 + 0.1 * rng.sample::<f64, _>(StandardNormal) };
            s.push_row(&[x0, x1], &[intervened, false]).unwrap();
        }
        let d = discover(&s, &ConstraintList::default(), &contemporaneous(0)).unwrap();
        let e = d.pag.effect(&key(0, 0, 1)).unwrap();
        assert!(e > 0.99, "{e}");
    }

    #[test]
    fn too_short_data_keeps_everything() {
        let data = iid(2, 4, 5, |e| e.to_vec());
        let d = discover(&data, &ConstraintList::default(), &DiscoveryConfig::default()).unwrap();
        assert_eq!(d.pag.len(), TsPag::init_complete(2, 1).len());
        assert!(d.pag.links().all(|l| l.effect.is_some()));
    }

    fn random_three_var_scm(rng: &mut ChaCha8Rng) -> (Scm, Dag) {
        loop {
            let mut cross = vec![Vec::new(); 3];
            let mut edges = Vec::new();
            for s in 0..3 {
                for t in 0..3 {
                    if s != t && rng.random_bool(0.3) {
                        let lag = usize::from(rng.random_bool(0.4));
                        let coeff = if rng.random_bool(0.5) { 0.5 } else { -0.5 };
                        cross[t].push(Mechanism { source: s, lag, coeff });
                        edges.push(DirectedEdge { source: s, lag, target: t });
                    }
                }
            }
            let auto: Vec<f64> = (0..3).map(|_| rng.random_range(0.3..0.6)).collect();
            for (v, _) in auto.iter().enumerate() {
                edges.push(DirectedEdge { source: v, lag: 1, target: v });
            }
            let Ok(scm) = Scm::new(auto, cross, vec![1.0; 3], vec![0, 1, 2], 0) else { continue };
            if !crate::scm::check_stationarity(&scm) {
                continue;
            }
            let dag = Dag::new(3, 1, edges).unwrap();
            return (scm, dag);
        }
    }

    #[test]
    fn large_sample_skeleton_recovery() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let mut exact = 0;
        let runs = 50;
        for _ in 0..runs {
            let (scm, dag) = random_three_var_scm(&mut rng);
            let data = generate(&scm, None, &[0.0; 3], 10_000, &mut rng).unwrap();
            // each true independence survives a level-alpha test with
            // probability 1 - alpha, so the large-sample regime uses 0.01
            let cfg = DiscoveryConfig { alpha_obs: 0.01, ..Default::default() };
            let d = discover(&data, &ConstraintList::default(), &cfg).unwrap();
            // true window skeleton: adjacency iff no separating set exists;
            // without latents this is the set of direct links
            let mut truth = TsPag::empty(3, 1);
            for e in dag.edges() {
                let k = LinkKey::new(e.source, e.lag, e.target).unwrap();
                let mark_to = Edgemark::Arrow;
                truth
                    .insert(Link { key: k, mark_from: Edgemark::Tail, mark_to, effect: None })
                    .unwrap();
            }
            exact += usize::from(truth.keys() == d.pag.keys());
        }
        assert!(exact * 10 >= runs * 9, "{exact} of {runs}");
    }

    #[test]
    fn intervened_variable_does_not_create_spurious_links() {
        let scm = Scm::new(
            vec![0.5, 0.5],
            vec![vec![], vec![Mechanism { source: 0, lag: 0, coeff: 0.5 }]],
            vec![1.0, 1.0],
            vec![0, 1],
            1,
        )
        .unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let mut data = generate(&scm, None, &[0.0, 0.0], 300, &mut rng).unwrap();
        let start = data.tail_rows(1);
        let more = generate(&scm, Some(Intervention { variable: 1, value: 3.0 }), &start, 20, &mut rng).unwrap();
        data.append(&more).unwrap();
        let d = discover(&data, &ConstraintList::default(), &DiscoveryConfig::default()).unwrap();
        assert!(d.pag.contains(&key(0, 0, 1)));
    }
}
