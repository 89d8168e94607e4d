//! Time-series graphs over a finite lag window.
//!
//! A link `X^from_{t-lag} *-* X^to_t` is identified by its [`LinkKey`].
//! Contemporaneous links (`lag == 0`) are stored with `from < to`. Each end of
//! a link carries an [`Edgemark`]; an arrowhead at a node means that node is
//! not an ancestor of the node at the other end, a tail means it is.

mod dsep;
mod enumerate;
mod format;

use std::collections::BTreeMap;
use std::collections::BTreeSet;
use std::fmt;

use crate::{Error, Result};

pub use dsep::{d_separated, window_len};
pub use enumerate::{enumerate_mags, MagEnumeration, DEFAULT_MAG_CAP};
pub use format::{parse_graph, write_graph};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Edgemark {
    Tail,
    Arrow,
    Circle,
}

/// A variable at a time offset: `X^var_{t-lag}`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Node {
    pub var: usize,
    pub lag: usize,
}

impl Node {
    pub const fn new(var: usize, lag: usize) -> Self {
        Node { var, lag }
    }
}

impl fmt::Display for Node {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "X{}(t-{})", self.var, self.lag)
    }
}

/// Which end of a link.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum End {
    From,
    To,
}

impl End {
    pub fn other(self) -> End {
        match self {
            End::From => End::To,
            End::To => End::From,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct LinkKey {
    pub from: usize,
    pub lag: usize,
    pub to: usize,
}

impl LinkKey {
    /// Canonical key for `X^from_{t-lag} *-* X^to_t`. Contemporaneous pairs
    /// are reordered so that `from < to`; returns `None` for a
    /// contemporaneous self-pair.
    pub fn new(from: usize, lag: usize, to: usize) -> Option<Self> {
        match (lag, from.cmp(&to)) {
            (0, std::cmp::Ordering::Equal) => None,
            (0, std::cmp::Ordering::Greater) => Some(LinkKey { from: to, lag, to: from }),
            _ => Some(LinkKey { from, lag, to }),
        }
    }

    /// Key of the link between two window nodes, plus the end `a` sits on.
    pub fn between(a: Node, b: Node) -> Option<(LinkKey, End)> {
        use std::cmp::Ordering::*;
        match a.lag.cmp(&b.lag) {
            Greater => Some((
                LinkKey { from: a.var, lag: a.lag - b.lag, to: b.var },
                End::From,
            )),
            Less => Some((
                LinkKey { from: b.var, lag: b.lag - a.lag, to: a.var },
                End::To,
            )),
            Equal => match a.var.cmp(&b.var) {
                Equal => None,
                Less => Some((LinkKey { from: a.var, lag: 0, to: b.var }, End::From)),
                Greater => Some((LinkKey { from: b.var, lag: 0, to: a.var }, End::To)),
            },
        }
    }

    /// The two endpoints in the frame where `to` sits at lag 0.
    pub fn nodes(&self) -> (Node, Node) {
        (Node::new(self.from, self.lag), Node::new(self.to, 0))
    }

    pub fn node(&self, end: End) -> Node {
        match end {
            End::From => Node::new(self.from, self.lag),
            End::To => Node::new(self.to, 0),
        }
    }

    pub fn is_contemporaneous(&self) -> bool {
        self.lag == 0
    }
}

impl fmt::Display for LinkKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} - {} @ {}", self.from, self.to, self.lag)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Link {
    pub key: LinkKey,
    pub mark_from: Edgemark,
    pub mark_to: Edgemark,
    pub effect: Option<f64>,
}

impl Link {
    pub fn mark(&self, end: End) -> Edgemark {
        match end {
            End::From => self.mark_from,
            End::To => self.mark_to,
        }
    }

    /// `Some(end)` of the tail when the link is `tail -> arrow`.
    pub fn directed_source(&self) -> Option<End> {
        match (self.mark_from, self.mark_to) {
            (Edgemark::Tail, Edgemark::Arrow) => Some(End::From),
            (Edgemark::Arrow, Edgemark::Tail) => Some(End::To),
            _ => None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
struct Slot {
    mark_from: Edgemark,
    mark_to: Edgemark,
    fixed_from: bool,
    fixed_to: bool,
    effect: Option<f64>,
}

/// Time-series partial ancestral graph over lags `0..=tau_max`.
///
/// Storage is dense over `(from, lag, to)` so iteration order is the
/// canonical link order.
#[derive(Clone, Debug, PartialEq)]
pub struct TsPag {
    n_vars: usize,
    tau_max: usize,
    slots: Vec<Option<Slot>>,
}

impl TsPag {
    pub fn empty(n_vars: usize, tau_max: usize) -> Self {
        TsPag {
            n_vars,
            tau_max,
            slots: vec![None; n_vars * n_vars * (tau_max + 1)],
        }
    }

    /// Fully connected graph under time order: `o->` for lagged pairs
    /// (autodependencies included), `o-o` for contemporaneous pairs.
    pub fn init_complete(n_vars: usize, tau_max: usize) -> Self {
        let mut pag = TsPag::empty(n_vars, tau_max);
        for from in 0..n_vars {
            for lag in 0..=tau_max {
                for to in 0..n_vars {
                    if lag == 0 && from >= to {
                        continue;
                    }
                    let mark_to = if lag == 0 { Edgemark::Circle } else { Edgemark::Arrow };
                    let idx = pag.index(&LinkKey { from, lag, to });
                    pag.slots[idx] = Some(Slot {
                        mark_from: Edgemark::Circle,
                        mark_to,
                        fixed_from: false,
                        fixed_to: false,
                        effect: None,
                    });
                }
            }
        }
        pag
    }

    pub fn n_vars(&self) -> usize {
        self.n_vars
    }

    pub fn tau_max(&self) -> usize {
        self.tau_max
    }

    fn index(&self, key: &LinkKey) -> usize {
        (key.from * (self.tau_max + 1) + key.lag) * self.n_vars + key.to
    }

    fn in_range(&self, key: &LinkKey) -> bool {
        key.from < self.n_vars && key.to < self.n_vars && key.lag <= self.tau_max
    }

    fn slot(&self, key: &LinkKey) -> Option<&Slot> {
        if !self.in_range(key) {
            return None;
        }
        self.slots[self.index(key)].as_ref()
    }

    fn slot_mut(&mut self, key: &LinkKey) -> Option<&mut Slot> {
        if !self.in_range(key) {
            return None;
        }
        let idx = self.index(key);
        self.slots[idx].as_mut()
    }

    /// Links in canonical `(from, lag, to)` order.
    pub fn links(&self) -> impl Iterator<Item = Link> + '_ {
        let t = self.tau_max + 1;
        let n = self.n_vars;
        self.slots.iter().enumerate().filter_map(move |(idx, slot)| {
            slot.map(|s| Link {
                key: LinkKey {
                    from: idx / (t * n),
                    lag: (idx / n) % t,
                    to: idx % n,
                },
                mark_from: s.mark_from,
                mark_to: s.mark_to,
                effect: s.effect,
            })
        })
    }

    pub fn keys(&self) -> Vec<LinkKey> {
        self.links().map(|l| l.key).collect()
    }

    pub fn len(&self) -> usize {
        self.slots.iter().filter(|s| s.is_some()).count()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn link(&self, key: &LinkKey) -> Option<Link> {
        self.slot(key).map(|s| Link {
            key: *key,
            mark_from: s.mark_from,
            mark_to: s.mark_to,
            effect: s.effect,
        })
    }

    pub fn contains(&self, key: &LinkKey) -> bool {
        self.slot(key).is_some()
    }

    /// Adds or replaces a link. Fails on keys outside the window, non-canonical
    /// contemporaneous keys, or a lagged link without an arrowhead at the
    /// later end.
    pub fn insert(&mut self, link: Link) -> Result<()> {
        let key = link.key;
        if !self.in_range(&key) {
            return Err(Error::InvalidArgument(format!(
                "link {key} outside graph with {} variables and tau_max {}",
                self.n_vars, self.tau_max
            )));
        }
        if key.lag == 0 && key.from >= key.to {
            return Err(Error::InvalidArgument(format!(
                "contemporaneous link {key} must have from < to"
            )));
        }
        if key.lag > 0 && link.mark_to != Edgemark::Arrow {
            return Err(Error::InvalidArgument(format!(
                "lagged link {key} needs an arrowhead at the later end"
            )));
        }
        let idx = self.index(&key);
        self.slots[idx] = Some(Slot {
            mark_from: link.mark_from,
            mark_to: link.mark_to,
            fixed_from: false,
            fixed_to: false,
            effect: link.effect,
        });
        Ok(())
    }

    pub fn remove(&mut self, key: &LinkKey) -> bool {
        if !self.in_range(key) {
            return false;
        }
        let idx = self.index(key);
        self.slots[idx].take().is_some()
    }

    pub fn mark(&self, key: &LinkKey, end: End) -> Option<Edgemark> {
        self.slot(key).map(|s| match end {
            End::From => s.mark_from,
            End::To => s.mark_to,
        })
    }

    /// Writes a mark regardless of freezing. Returns false if the link is absent.
    pub fn set_mark(&mut self, key: &LinkKey, end: End, mark: Edgemark) -> bool {
        match self.slot_mut(key) {
            Some(s) => {
                match end {
                    End::From => s.mark_from = mark,
                    End::To => s.mark_to = mark,
                }
                true
            }
            None => false,
        }
    }

    pub fn freeze(&mut self, key: &LinkKey, end: End) -> bool {
        match self.slot_mut(key) {
            Some(s) => {
                match end {
                    End::From => s.fixed_from = true,
                    End::To => s.fixed_to = true,
                }
                true
            }
            None => false,
        }
    }

    pub fn is_fixed(&self, key: &LinkKey, end: End) -> bool {
        self.slot(key).is_some_and(|s| match end {
            End::From => s.fixed_from,
            End::To => s.fixed_to,
        })
    }

    /// Frozen link ends with their marks, canonical order.
    pub fn fixed_marks(&self) -> Vec<(LinkKey, End, Edgemark)> {
        let mut out = Vec::new();
        for link in self.links() {
            for end in [End::From, End::To] {
                if self.is_fixed(&link.key, end) {
                    out.push((link.key, end, link.mark(end)));
                }
            }
        }
        out
    }

    pub fn set_effect(&mut self, key: &LinkKey, effect: Option<f64>) -> bool {
        match self.slot_mut(key) {
            Some(s) => {
                s.effect = effect;
                true
            }
            None => false,
        }
    }

    pub fn effect(&self, key: &LinkKey) -> Option<f64> {
        self.slot(key).and_then(|s| s.effect)
    }

    fn node_in_window(&self, node: Node) -> bool {
        node.var < self.n_vars && node.lag <= self.tau_max
    }

    pub fn adjacent(&self, a: Node, b: Node) -> bool {
        match LinkKey::between(a, b) {
            Some((key, _)) => self.contains(&key),
            None => false,
        }
    }

    /// Mark at `a` on the link `a *-* b`.
    pub fn mark_at(&self, a: Node, b: Node) -> Option<Edgemark> {
        let (key, end) = LinkKey::between(a, b)?;
        self.mark(&key, end)
    }

    /// Window nodes adjacent to `node`, ordered by `(var, lag)`.
    pub fn neighbors(&self, node: Node) -> Vec<Node> {
        let mut out = Vec::new();
        if !self.node_in_window(node) {
            return out;
        }
        for var in 0..self.n_vars {
            for lag in 0..=self.tau_max {
                let other = Node::new(var, lag);
                if other != node && self.adjacent(node, other) {
                    out.push(other);
                }
            }
        }
        out
    }

    pub fn circle_count(&self) -> usize {
        self.links()
            .map(|l| {
                (l.mark_from == Edgemark::Circle) as usize + (l.mark_to == Edgemark::Circle) as usize
            })
            .sum()
    }

    /// The directed contemporaneous edges `(source, target)` among variables.
    pub fn contemporaneous_directed(&self) -> Vec<(usize, usize)> {
        self.links()
            .filter(|l| l.key.lag == 0)
            .filter_map(|l| match l.directed_source()? {
                End::From => Some((l.key.from, l.key.to)),
                End::To => Some((l.key.to, l.key.from)),
            })
            .collect()
    }
}

/// Conditioning sets that separated removed pairs. Nodes are expressed in
/// the frame of the key, where `key.to` sits at lag 0.
pub type Sepsets = BTreeMap<LinkKey, Vec<Node>>;

/// An orientation the collider rule wanted but could not write.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct OrientationConflict {
    pub key: LinkKey,
    pub end: End,
    pub existing: Edgemark,
    pub frozen: bool,
}

/// Orients every unshielded triple `A *-* B *-* C` whose middle node is
/// missing from `sepset(A, C)` into `A *-> B <-* C`.
///
/// Frozen marks and tails are left untouched and reported as conflicts.
pub fn orient_unshielded_colliders(
    pag: &TsPag,
    sepsets: &Sepsets,
) -> (TsPag, Vec<OrientationConflict>) {
    let mut out = pag.clone();
    let conflicts = orient_colliders_in_place(&mut out, sepsets);
    (out, conflicts)
}

pub fn orient_colliders_in_place(pag: &mut TsPag, sepsets: &Sepsets) -> Vec<OrientationConflict> {
    let tau_max = pag.tau_max();
    let mut wanted: BTreeSet<(LinkKey, End)> = BTreeSet::new();

    for b_var in 0..pag.n_vars() {
        for b_lag in 0..=tau_max {
            let b = Node::new(b_var, b_lag);
            let nbrs = pag.neighbors(b);
            for (ia, &a) in nbrs.iter().enumerate() {
                for &c in &nbrs[ia + 1..] {
                    if a.lag.abs_diff(c.lag) > tau_max || a == c || pag.adjacent(a, c) {
                        continue;
                    }
                    let Some((key_ac, _)) = LinkKey::between(a, c) else {
                        continue;
                    };
                    let Some(sepset) = sepsets.get(&key_ac) else {
                        continue;
                    };
                    let shift = a.lag.min(c.lag);
                    let in_sepset = b_lag >= shift
                        && sepset.contains(&Node::new(b_var, b_lag - shift));
                    if in_sepset {
                        continue;
                    }
                    for x in [a, c] {
                        if let Some((key, end)) = LinkKey::between(b, x) {
                            wanted.insert((key, end));
                        }
                    }
                }
            }
        }
    }

    let mut conflicts = Vec::new();
    for (key, end) in wanted {
        let Some(existing) = pag.mark(&key, end) else {
            continue;
        };
        if existing == Edgemark::Arrow {
            continue;
        }
        let frozen = pag.is_fixed(&key, end);
        if frozen || existing == Edgemark::Tail {
            conflicts.push(OrientationConflict { key, end, existing, frozen });
            continue;
        }
        pag.set_mark(&key, end, Edgemark::Arrow);
    }
    conflicts
}

/// Deterministic Kahn ordering (smallest ready index first). `None` on a cycle.
pub(crate) fn topological_order(
    n: usize,
    edges: impl IntoIterator<Item = (usize, usize)>,
) -> Option<Vec<usize>> {
    let mut indegree = vec![0usize; n];
    let mut children: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (s, t) in edges {
        children[s].push(t);
        indegree[t] += 1;
    }
    let mut ready: BTreeSet<usize> = (0..n).filter(|&v| indegree[v] == 0).collect();
    let mut order = Vec::with_capacity(n);
    while let Some(v) = ready.pop_first() {
        order.push(v);
        for &c in &children[v] {
            indegree[c] -= 1;
            if indegree[c] == 0 {
                ready.insert(c);
            }
        }
    }
    (order.len() == n).then_some(order)
}

/// A PAG without circle marks whose contemporaneous directed part is acyclic
/// and which has no tail-tail contemporaneous link.
#[derive(Clone, Debug, PartialEq)]
pub struct Mag(TsPag);

impl Mag {
    pub fn try_new(pag: TsPag) -> Result<Mag> {
        if pag.circle_count() > 0 {
            return Err(Error::InvalidArgument("a MAG has no circle marks".into()));
        }
        if pag
            .links()
            .any(|l| l.key.lag == 0 && l.mark_from == Edgemark::Tail && l.mark_to == Edgemark::Tail)
        {
            return Err(Error::InvalidArgument(
                "tail-tail link implies selection, which is not modelled".into(),
            ));
        }
        if topological_order(pag.n_vars(), pag.contemporaneous_directed()).is_none() {
            return Err(Error::ContemporaneousCycle);
        }
        Ok(Mag(pag))
    }

    pub fn graph(&self) -> &TsPag {
        &self.0
    }

    pub fn into_inner(self) -> TsPag {
        self.0
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct DirectedEdge {
    pub source: usize,
    pub lag: usize,
    pub target: usize,
}

/// Ground-truth time-series DAG: directed links only.
#[derive(Clone, Debug, PartialEq)]
pub struct Dag {
    n_vars: usize,
    tau_max: usize,
    edges: Vec<DirectedEdge>,
}

impl Dag {
    pub fn new(n_vars: usize, tau_max: usize, mut edges: Vec<DirectedEdge>) -> Result<Dag> {
        for e in &edges {
            if e.source >= n_vars || e.target >= n_vars || e.lag > tau_max {
                return Err(Error::InvalidArgument(format!("edge {e:?} outside the graph")));
            }
            if e.lag == 0 && e.source == e.target {
                return Err(Error::ContemporaneousCycle);
            }
        }
        edges.sort();
        edges.dedup();
        let contemporaneous = edges.iter().filter(|e| e.lag == 0).map(|e| (e.source, e.target));
        if topological_order(n_vars, contemporaneous).is_none() {
            return Err(Error::ContemporaneousCycle);
        }
        Ok(Dag { n_vars, tau_max, edges })
    }

    pub fn n_vars(&self) -> usize {
        self.n_vars
    }

    pub fn tau_max(&self) -> usize {
        self.tau_max
    }

    pub fn edges(&self) -> &[DirectedEdge] {
        &self.edges
    }
}
