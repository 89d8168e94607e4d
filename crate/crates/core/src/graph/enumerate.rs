use super::{topological_order, Edgemark, End, LinkKey, Mag, TsPag};

pub const DEFAULT_MAG_CAP: usize = 256;

#[derive(Clone, Debug)]
pub struct MagEnumeration {
    pub mags: Vec<Mag>,
    /// Set when at least one valid completion beyond the cap exists.
    pub truncated: bool,
}

/// Completes every circle mark with Tail or Arrow, depth first in canonical
/// order (links by `(from, lag, to)`, from-end before to-end, Tail before
/// Arrow). Completions with a contemporaneous directed cycle or a
/// contemporaneous tail-tail link are dropped.
pub fn enumerate_mags(pag: &TsPag, cap: usize) -> MagEnumeration {
    let cap = cap.max(1);
    let circles: Vec<(LinkKey, End)> = pag
        .links()
        .flat_map(|l| {
            [End::From, End::To]
                .into_iter()
                .filter(move |&e| l.mark(e) == Edgemark::Circle)
                .map(move |e| (l.key, e))
        })
        .collect();

    let mut out = MagEnumeration { mags: Vec::new(), truncated: false };
    let mut work = pag.clone();
    // Marks that are already decided must be consistent on their own.
    let fixed_ok = work.links().all(|l| {
        l.key.lag > 0
            || l.mark_from == Edgemark::Circle
            || l.mark_to == Edgemark::Circle
            || !(l.mark_from == Edgemark::Tail && l.mark_to == Edgemark::Tail)
    }) && topological_order(work.n_vars(), work.contemporaneous_directed()).is_some();
    if fixed_ok {
        let mut search = Search { circles: &circles, cap, out: &mut out };
        search.dfs(&mut work, 0);
    }
    out
}

struct Search<'a> {
    circles: &'a [(LinkKey, End)],
    cap: usize,
    out: &'a mut MagEnumeration,
}

impl Search<'_> {
    /// Returns false once the search should stop.
    fn dfs(&mut self, work: &mut TsPag, idx: usize) -> bool {
        if idx == self.circles.len() {
            if self.out.mags.len() == self.cap {
                self.out.truncated = true;
                return false;
            }
            self.out.mags.push(Mag(work.clone()));
            return true;
        }
        let (key, end) = self.circles[idx];
        for mark in [Edgemark::Tail, Edgemark::Arrow] {
            work.set_mark(&key, end, mark);
            if key.lag == 0 && !contemporaneous_ok(work, &key) {
                continue;
            }
            if !self.dfs(work, idx + 1) {
                work.set_mark(&key, end, Edgemark::Circle);
                return false;
            }
        }
        work.set_mark(&key, end, Edgemark::Circle);
        true
    }
}

/// Checks a contemporaneous link whose marks just changed.
fn contemporaneous_ok(work: &TsPag, key: &LinkKey) -> bool {
    let from = work.mark(key, End::From);
    let to = work.mark(key, End::To);
    match (from, to) {
        (Some(Edgemark::Tail), Some(Edgemark::Tail)) => false,
        (Some(Edgemark::Tail), Some(Edgemark::Arrow))
        | (Some(Edgemark::Arrow), Some(Edgemark::Tail)) => {
            topological_order(work.n_vars(), work.contemporaneous_directed()).is_some()
        }
        _ => true,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::Link;

    fn key(from: usize, lag: usize, to: usize) -> LinkKey {
        LinkKey::new(from, lag, to).unwrap()
    }

    #[test]
    fn no_circles_gives_the_input() {
        let mut pag = TsPag::empty(2, 1);
        pag.insert(Link { key: key(0, 1, 1), mark_from: Edgemark::Tail, mark_to: Edgemark::Arrow, effect: Some(0.2) })
            .unwrap();
        let e = enumerate_mags(&pag, 10);
        assert_eq!(e.mags.len(), 1);
        assert!(!e.truncated);
        assert_eq!(e.mags[0].graph(), &pag);
    }

    #[test]
    fn single_circle_gives_directed_and_bidirected() {
        let mut pag = TsPag::empty(2, 0);
        pag.insert(Link { key: key(0, 0, 1), mark_from: Edgemark::Circle, mark_to: Edgemark::Arrow, effect: None })
            .unwrap();
        let e = enumerate_mags(&pag, 10);
        let marks: Vec<_> = e
            .mags
            .iter()
            .map(|m| m.graph().mark(&key(0, 0, 1), End::From).unwrap())
            .collect();
        assert_eq!(marks, vec![Edgemark::Tail, Edgemark::Arrow]);
    }

    #[test]
    fn truncation_flag_only_when_more_exist() {
        let mut pag = TsPag::empty(2, 0);
        pag.insert(Link { key: key(0, 0, 1), mark_from: Edgemark::Circle, mark_to: Edgemark::Arrow, effect: None })
            .unwrap();
        let e = enumerate_mags(&pag, 2);
        assert_eq!(e.mags.len(), 2);
        assert!(!e.truncated);
        let e = enumerate_mags(&pag, 1);
        assert_eq!(e.mags.len(), 1);
        assert!(e.truncated);
    }

    #[test]
    fn triangle_matches_hand_count() {
        // 3 contemporaneous o-o links: each link has 3 selection-free
        // completions (->, <-, <->), 27 in total, minus the 2 directed cycles.
        let e = enumerate_mags(&TsPag::init_complete(3, 0), 1000);
        assert_eq!(e.mags.len(), 25);
    }

    #[test]
    fn cyclic_input_gives_nothing() {
        let mut pag = TsPag::empty(2, 0);
        pag.insert(Link { key: key(0, 0, 1), mark_from: Edgemark::Tail, mark_to: Edgemark::Tail, effect: None })
            .unwrap();
        assert!(enumerate_mags(&pag, 10).mags.is_empty());
    }
}
