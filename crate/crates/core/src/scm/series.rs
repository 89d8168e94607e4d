use std::fmt::Write as _;

use crate::{Error, Result};

/// A `T x n` value matrix with a same-shape intervention mask; `true` marks a
/// cell set by the do-operator.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Series {
    n_vars: usize,
    values: Vec<f64>,
    do_mask: Vec<bool>,
}

impl Series {
    pub fn new(n_vars: usize) -> Self {
        Series { n_vars, values: Vec::new(), do_mask: Vec::new() }
    }

    /// Row-major values and mask.
    pub fn from_parts(n_vars: usize, values: Vec<f64>, do_mask: Vec<bool>) -> Result<Self> {
        if values.len() != do_mask.len() || (n_vars == 0 && !values.is_empty()) || (n_vars > 0 && values.len() % n_vars != 0) {
            return Err(Error::Shape(format!(
                "{} values and {} mask cells do not form rows of {n_vars}",
                values.len(),
                do_mask.len()
            )));
        }
        Ok(Series { n_vars, values, do_mask })
    }

    pub fn n_vars(&self) -> usize {
        self.n_vars
    }

    pub fn len(&self) -> usize {
        if self.n_vars == 0 {
            0
        } else {
            self.values.len() / self.n_vars
        }
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn do_mask(&self) -> &[bool] {
        &self.do_mask
    }

    pub fn value(&self, t: usize, j: usize) -> f64 {
        self.values[t * self.n_vars + j]
    }

    pub fn is_do(&self, t: usize, j: usize) -> bool {
        self.do_mask[t * self.n_vars + j]
    }

    pub fn row(&self, t: usize) -> &[f64] {
        &self.values[t * self.n_vars..(t + 1) * self.n_vars]
    }

    pub fn push_row(&mut self, values: &[f64], mask: &[bool]) -> Result<()> {
        if values.len() != self.n_vars || mask.len() != self.n_vars {
            return Err(Error::Shape(format!(
                "row of {} values and {} mask cells for {} columns",
                values.len(),
                mask.len(),
                self.n_vars
            )));
        }
        self.values.extend_from_slice(values);
        self.do_mask.extend_from_slice(mask);
        Ok(())
    }

    pub fn append(&mut self, other: &Series) -> Result<()> {
        if other.n_vars != self.n_vars {
            return Err(Error::Shape(format!("append {} columns to {}", other.n_vars, self.n_vars)));
        }
        self.values.extend_from_slice(&other.values);
        self.do_mask.extend_from_slice(&other.do_mask);
        Ok(())
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        self.values.iter().skip(j).step_by(self.n_vars.max(1)).copied().collect()
    }

    pub fn mask_column(&self, j: usize) -> Vec<bool> {
        self.do_mask.iter().skip(j).step_by(self.n_vars.max(1)).copied().collect()
    }

    /// The last `k` rows, row-major. Panics if fewer exist.
    pub fn tail_rows(&self, k: usize) -> Vec<f64> {
        self.values[self.values.len() - k * self.n_vars..].to_vec()
    }

    pub fn has_interventions(&self) -> bool {
        self.do_mask.iter().any(|&m| m)
    }

    /// Column subset in the given order.
    pub fn select_columns(&self, idx: &[usize]) -> Result<Series> {
        if let Some(&bad) = idx.iter().find(|&&i| i >= self.n_vars) {
            return Err(Error::InvalidArgument(format!("column {bad} of {}", self.n_vars)));
        }
        let mut out = Series::new(idx.len());
        out.values.reserve(self.len() * idx.len());
        for t in 0..self.len() {
            for &i in idx {
                out.values.push(self.value(t, i));
                out.do_mask.push(self.is_do(t, i));
            }
        }
        Ok(out)
    }

    /// `t,x0..x{n-1},do0..do{n-1}`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t");
        for j in 0..self.n_vars {
            let _ = write!(out, ",x{j}");
        }
        for j in 0..self.n_vars {
            let _ = write!(out, ",do{j}");
        }
        out.push('\n');
        for t in 0..self.len() {
            let _ = write!(out, "{t}");
            for v in self.row(t) {
                let _ = write!(out, ",{v}");
            }
            for j in 0..self.n_vars {
                out.push_str(if self.is_do(t, j) { ",1" } else { ",0" });
            }
            out.push('\n');
        }
        out
    }

    /// Reads the CSV layout of [`Series::to_csv`]. The do columns are
    /// optional; without them every cell is observational.
    pub fn from_csv(text: &str) -> Result<Series> {
        let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
        let (_, header) = lines.next().ok_or_else(|| Error::parse(1, "missing header"))?;
        let cols: Vec<&str> = header.split(',').map(str::trim).collect();
        if cols.first() != Some(&"t") {
            return Err(Error::parse(1, "header must start with `t`"));
        }
        let n_x = cols.iter().filter(|c| c.starts_with('x')).count();
        let n_do = cols.iter().filter(|c| c.starts_with("do")).count();
        let expected: Vec<String> = std::iter::once("t".to_string())
            .chain((0..n_x).map(|j| format!("x{j}")))
            .chain((0..n_do).map(|j| format!("do{j}")))
            .collect();
        if (n_do != 0 && n_do != n_x) || cols != expected {
            return Err(Error::Shape(format!(
                "header `{header}` must be t,x0..x{{n-1}} optionally followed by do0..do{{n-1}}"
            )));
        }
        let mut series = Series::new(n_x);
        let mut row = vec![0.0; n_x];
        let mut mask = vec![false; n_x];
        for (idx, line) in lines {
            let lineno = idx + 1;
            let fields: Vec<&str> = line.split(',').map(str::trim).collect();
            if fields.len() != cols.len() {
                return Err(Error::Shape(format!(
                    "line {lineno}: {} fields, header has {}",
                    fields.len(),
                    cols.len()
                )));
            }
            for j in 0..n_x {
                row[j] = fields[1 + j]
                    .parse()
                    .map_err(|_| Error::parse(lineno, format!("bad value `{}`", fields[1 + j])))?;
            }
            for j in 0..n_x {
                mask[j] = if n_do == 0 {
                    false
                } else {
                    match fields[1 + n_x + j] {
                        "0" => false,
                        "1" => true,
                        other => return Err(Error::parse(lineno, format!("bad do flag `{other}`"))),
                    }
                };
            }
            series.push_row(&row, &mask)?;
        }
        Ok(series)
    }
}

/// Keeps the observed columns, values and mask, in the given order.
pub fn drop_latents(series: &Series, observed_idx: &[usize]) -> Result<Series> {
    series.select_columns(observed_idx)
}
