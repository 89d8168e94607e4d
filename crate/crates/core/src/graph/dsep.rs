use std::collections::VecDeque;

use super::{Dag, Node};
use crate::{Error, Result};

/// Number of time slices in the unrolled window used for separation queries.
pub fn window_len(tau_max: usize) -> usize {
    2 * (tau_max + 1)
}

/// d-separation of `x` and `y` given `s` on the DAG unrolled over
/// [`window_len`] slices, via reachability of active trails (Bayes ball).
pub fn d_separated(dag: &Dag, x: Node, y: Node, s: &[Node]) -> Result<bool> {
    let n = dag.n_vars();
    let w = window_len(dag.tau_max());
    let id = |node: Node| node.lag * n + node.var;
    for node in [x, y].iter().chain(s) {
        if node.var >= n || node.lag >= w {
            return Err(Error::InvalidArgument(format!("{node} outside the unrolled window")));
        }
    }
    if x == y || s.contains(&x) || s.contains(&y) {
        return Err(Error::InvalidArgument(
            "x and y must differ and lie outside the conditioning set".into(),
        ));
    }

    let total = n * w;
    let mut parents: Vec<Vec<usize>> = vec![Vec::new(); total];
    let mut children: Vec<Vec<usize>> = vec![Vec::new(); total];
    for slice in 0..w {
        for e in dag.edges() {
            // e.source at slice + lag feeds e.target at slice
            if slice + e.lag < w {
                let src = (slice + e.lag) * n + e.source;
                let dst = slice * n + e.target;
                parents[dst].push(src);
                children[src].push(dst);
            }
        }
    }

    let mut in_s = vec![false; total];
    for &node in s {
        in_s[id(node)] = true;
    }
    // ancestors of the conditioning set, S included
    let mut anc = in_s.clone();
    let mut stack: Vec<usize> = (0..total).filter(|&v| in_s[v]).collect();
    while let Some(v) = stack.pop() {
        for &p in &parents[v] {
            if !anc[p] {
                anc[p] = true;
                stack.push(p);
            }
        }
    }

    // direction: 0 = arrived from a child (moving up), 1 = arrived from a parent
    let mut seen = vec![[false; 2]; total];
    let mut queue = VecDeque::new();
    queue.push_back((id(x), 0usize));
    let target = id(y);
    while let Some((v, dir)) = queue.pop_front() {
        if seen[v][dir] {
            continue;
        }
        seen[v][dir] = true;
        if v == target && !in_s[v] {
            return Ok(false);
        }
        if dir == 0 && !in_s[v] {
            for &p in &parents[v] {
                queue.push_back((p, 0));
            }
            for &c in &children[v] {
                queue.push_back((c, 1));
            }
        } else if dir == 1 {
            if !in_s[v] {
                for &c in &children[v] {
                    queue.push_back((c, 1));
                }
            }
            if anc[v] {
                for &p in &parents[v] {
                    queue.push_back((p, 0));
                }
            }
        }
    }
    Ok(true)
}
