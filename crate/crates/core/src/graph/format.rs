//! Line-oriented graph text: `i <mark><mark> j @ tau [effect]`.
//!
//! ```text
//! # n_vars=5 tau_max=1
//! 0 -> 2 @ 0 0.31
//! 1 o> 3 @ 1
//! ```

use std::fmt::Write as _;

use super::{Edgemark, Link, LinkKey, TsPag};
use crate::{Error, Result};

fn left_char(m: Edgemark) -> char {
    match m {
        Edgemark::Tail => '-',
        Edgemark::Arrow => '<',
        Edgemark::Circle => 'o',
    }
}

fn right_char(m: Edgemark) -> char {
    match m {
        Edgemark::Tail => '-',
        Edgemark::Arrow => '>',
        Edgemark::Circle => 'o',
    }
}

fn parse_left(c: char) -> Option<Edgemark> {
    match c {
        '-' => Some(Edgemark::Tail),
        '<' => Some(Edgemark::Arrow),
        'o' => Some(Edgemark::Circle),
        _ => None,
    }
}

fn parse_right(c: char) -> Option<Edgemark> {
    match c {
        '-' => Some(Edgemark::Tail),
        '>' => Some(Edgemark::Arrow),
        'o' => Some(Edgemark::Circle),
        _ => None,
    }
}

/// Canonical text: a size header, then links in `(from, lag, to)` order.
pub fn write_graph(pag: &TsPag) -> String {
    let mut out = format!("# n_vars={} tau_max={}\n", pag.n_vars(), pag.tau_max());
    for link in pag.links() {
        let k = link.key;
        let _ = write!(
            out,
            "{} {}{} {} @ {}",
            k.from,
            left_char(link.mark_from),
            right_char(link.mark_to),
            k.to,
            k.lag
        );
        if let Some(e) = link.effect {
            let _ = write!(out, " {e}");
        }
        out.push('\n');
    }
    out
}

struct Parsed {
    line: usize,
    link: Link,
}

/// Parses graph text. Without a header the size is inferred from the links.
/// Contemporaneous links may be written in either direction.
pub fn parse_graph(text: &str) -> Result<TsPag> {
    let mut n_vars: Option<usize> = None;
    let mut tau_max: Option<usize> = None;
    let mut parsed = Vec::new();

    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let trimmed = raw.trim();
        if trimmed.is_empty() {
            continue;
        }
        if let Some(comment) = trimmed.strip_prefix('#') {
            for tok in comment.split_whitespace() {
                if let Some(v) = tok.strip_prefix("n_vars=") {
                    n_vars = Some(v.parse().map_err(|_| Error::parse(line, "bad n_vars"))?);
                } else if let Some(v) = tok.strip_prefix("tau_max=") {
                    tau_max = Some(v.parse().map_err(|_| Error::parse(line, "bad tau_max"))?);
                }
            }
            continue;
        }
        parsed.push(Parsed { line, link: parse_link(line, trimmed)? });
    }

    let n_vars = n_vars.unwrap_or_else(|| {
        parsed.iter().map(|p| p.link.key.from.max(p.link.key.to) + 1).max().unwrap_or(0)
    });
    let tau_max = tau_max.unwrap_or_else(|| parsed.iter().map(|p| p.link.key.lag).max().unwrap_or(0));
    let mut pag = TsPag::empty(n_vars, tau_max);
    for p in parsed {
        if pag.contains(&p.link.key) {
            return Err(Error::parse(p.line, format!("duplicate link {}", p.link.key)));
        }
        pag.insert(p.link).map_err(|e| Error::parse(p.line, e.to_string()))?;
    }
    Ok(pag)
}

fn parse_link(line: usize, text: &str) -> Result<Link> {
    let toks: Vec<&str> = text.split_whitespace().collect();
    if !(5..=6).contains(&toks.len()) || toks[3] != "@" {
        return Err(Error::parse(line, "expected `i <mark><mark> j @ tau [effect]`"));
    }
    let index = |s: &str, what: &str| -> Result<usize> {
        s.parse().map_err(|_| Error::parse(line, format!("bad {what} `{s}`")))
    };
    let i = index(toks[0], "variable")?;
    let j = index(toks[2], "variable")?;
    let lag = index(toks[4], "lag")?;
    let chars: Vec<char> = toks[1].chars().collect();
    let (left, right) = match chars.as_slice() {
        [l, r] => (
            parse_left(*l).ok_or_else(|| Error::parse(line, format!("bad mark `{l}`")))?,
            parse_right(*r).ok_or_else(|| Error::parse(line, format!("bad mark `{r}`")))?,
        ),
        _ => return Err(Error::parse(line, format!("bad edge `{}`", toks[1]))),
    };
    let effect = match toks.get(5) {
        Some(s) => Some(
            s.parse::<f64>()
                .map_err(|_| Error::parse(line, format!("bad effect `{s}`")))?,
        ),
        None => None,
    };
    let key = LinkKey::new(i, lag, j)
        .ok_or_else(|| Error::parse(line, "contemporaneous self-link"))?;
    let (mark_from, mark_to) = if key.from == i { (left, right) } else { (right, left) };
    Ok(Link { key, mark_from, mark_to, effect })
}
