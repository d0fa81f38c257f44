//! Periodic space-time grids and the functions sampled on them.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Result, WkamError};

/// Sentinel standing in for `+∞` in kernels and indicator columns.
pub const BIG: f64 = 1e12;

/// Values at or above this are reported as unreachable.
pub const UNREACHABLE: f64 = BIG / 2.0;

/// `N_q` positions `q_j = j/N_q` times `N_t` slices `t_k = k/N_t`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TorusGrid {
    pub n_q: usize,
    pub n_t: usize,
    /// Dimension of the configuration torus; only 1 is supported.
    #[serde(default = "one")]
    pub dim: usize,
}

fn one() -> usize {
    1
}

impl TorusGrid {
    pub const MIN_NQ: usize = 8;
    pub const MIN_NT: usize = 4;

    pub fn new(n_q: usize, n_t: usize) -> Result<Self> {
        if n_q < Self::MIN_NQ {
            return Err(WkamError::InvalidGrid(format!(
                "N_q = {n_q} < {}",
                Self::MIN_NQ
            )));
        }
        if n_t < Self::MIN_NT {
            return Err(WkamError::InvalidGrid(format!(
                "N_t = {n_t} < {}",
                Self::MIN_NT
            )));
        }
        Ok(Self { n_q, n_t, dim: 1 })
    }

    pub fn dq(&self) -> f64 {
        1.0 / self.n_q as f64
    }

    pub fn dt(&self) -> f64 {
        1.0 / self.n_t as f64
    }

    pub fn q(&self, j: usize) -> f64 {
        (j % self.n_q) as f64 / self.n_q as f64
    }

    /// Circle time of slice `k` (any non-negative count, wrapped).
    pub fn t(&self, k: usize) -> f64 {
        (k % self.n_t) as f64 / self.n_t as f64
    }

    pub fn wrap_q(&self, j: isize) -> usize {
        j.rem_euclid(self.n_q as isize) as usize
    }

    pub fn wrap_t(&self, k: isize) -> usize {
        k.rem_euclid(self.n_t as isize) as usize
    }

    /// Nearest node to a circle position.
    pub fn nearest_node(&self, q: f64) -> usize {
        ((q.rem_euclid(1.0) * self.n_q as f64).round() as usize) % self.n_q
    }

    pub fn nearest_slice(&self, t: f64) -> usize {
        ((t.rem_euclid(1.0) * self.n_t as f64).round() as usize) % self.n_t
    }
}

/// Distance on the unit circle.
pub fn circle_distance(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(1.0);
    d.min(1.0 - d)
}

/// Periodic piecewise-linear interpolation of node values `values[j] ≈ f(j/N)`.
pub fn interpolate_periodic(values: &[f64], q: f64) -> f64 {
    let n = values.len();
    let x = q.rem_euclid(1.0) * n as f64;
    let i = (x.floor() as usize).min(n - 1);
    let theta = x - i as f64;
    let a = values[i];
    if theta == 0.0 {
        return a;
    }
    let b = values[(i + 1) % n];
    a + theta * (b - a)
}

/// Periodic four-point cubic (Lagrange) interpolation; exact at nodes, not monotone.
pub fn interpolate_periodic_cubic(values: &[f64], q: f64) -> f64 {
    let n = values.len();
    let x = q.rem_euclid(1.0) * n as f64;
    let i = (x.floor() as usize).min(n - 1);
    let s = x - i as f64;
    if s == 0.0 {
        return values[i];
    }
    let at = |d: isize| values[(i as isize + d).rem_euclid(n as isize) as usize];
    let (f0, f1, f2, f3) = (at(-1), at(0), at(1), at(2));
    let w0 = -s * (s - 1.0) * (s - 2.0) / 6.0;
    let w1 = (s + 1.0) * (s - 1.0) * (s - 2.0) / 2.0;
    let w2 = -(s + 1.0) * s * (s - 2.0) / 2.0;
    let w3 = (s + 1.0) * s * (s - 1.0) / 6.0;
    w0 * f0 + w1 * f1 + w2 * f2 + w3 * f3
}

/// Real values on the position nodes of one time slice.
#[derive(Clone, Debug, PartialEq)]
pub struct GridFunction {
    pub grid: TorusGrid,
    pub slice: usize,
    pub values: Vec<f64>,
}

impl GridFunction {
    pub fn new(grid: TorusGrid, slice: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.n_q {
            return Err(WkamError::ShapeMismatch(format!(
                "{} values for N_q = {}",
                values.len(),
                grid.n_q
            )));
        }
        Ok(Self {
            grid,
            slice,
            values,
        })
    }

    pub fn constant(grid: TorusGrid, slice: usize, c: f64) -> Self {
        Self {
            grid,
            slice,
            values: vec![c; grid.n_q],
        }
    }

    /// Indicator column: 0 at `node`, [`BIG`] elsewhere.
    pub fn indicator(grid: TorusGrid, slice: usize, node: usize) -> Self {
        let mut values = vec![BIG; grid.n_q];
        values[node % grid.n_q] = 0.0;
        Self {
            grid,
            slice,
            values,
        }
    }

    pub fn interpolate(&self, q: f64) -> f64 {
        interpolate_periodic(&self.values, q)
    }

    pub fn shifted(&self, c: f64) -> Self {
        Self {
            values: self.values.iter().map(|v| v + c).collect(),
            ..self.clone()
        }
    }

    pub fn negated(&self) -> Self {
        Self {
            values: self.values.iter().map(|v| -v).collect(),
            ..self.clone()
        }
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }

    pub fn sup_distance(&self, other: &Self) -> Result<f64> {
        if self.grid.n_q != other.grid.n_q {
            return Err(WkamError::ShapeMismatch(format!(
                "N_q {} vs {}",
                self.grid.n_q, other.grid.n_q
            )));
        }
        Ok(max_abs_diff(&self.values, &other.values))
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        wr.write_record(["j", "q", "value"])?;
        for (j, v) in self.values.iter().enumerate() {
            wr.write_record([j.to_string(), fmt17(self.grid.q(j)), fmt17(*v)])?;
        }
        wr.flush()?;
        Ok(())
    }

    /// Reads `(j, q, value)` rows; `N_t` and the slice index are supplied by the caller.
    pub fn read_csv<R: Read>(r: R, n_t: usize, slice: usize) -> Result<Self> {
        let mut rd = csv::Reader::from_reader(r);
        check_header(rd.headers()?, &["j", "q", "value"])?;
        let mut rows: Vec<(usize, f64)> = Vec::new();
        for rec in rd.records() {
            let rec = rec?;
            rows.push((parse_field(&rec, 0)?, parse_field(&rec, 2)?));
        }
        let grid = TorusGrid::new(rows.len(), n_t)?;
        let mut values = vec![f64::NAN; rows.len()];
        for (j, v) in rows {
            *values.get_mut(j).ok_or_else(|| {
                WkamError::ShapeMismatch(format!("node index {j} out of range"))
            })? = v;
        }
        GridFunction::new(grid, slice, values)
    }
}

/// `value(k, j) ≈ φ(q_j, [t_k])` on all slices of one period.
#[derive(Clone, Debug, PartialEq)]
pub struct SpaceTimeFunction {
    pub grid: TorusGrid,
    values: Vec<f64>,
}

impl SpaceTimeFunction {
    pub fn zeros(grid: TorusGrid) -> Self {
        Self {
            grid,
            values: vec![0.0; grid.n_q * grid.n_t],
        }
    }

    pub fn from_fn(grid: TorusGrid, f: impl Fn(usize, usize) -> f64) -> Self {
        let mut out = Self::zeros(grid);
        for k in 0..grid.n_t {
            for j in 0..grid.n_q {
                out.values[k * grid.n_q + j] = f(k, j);
            }
        }
        out
    }

    pub fn from_slices(grid: TorusGrid, slices: &[GridFunction]) -> Result<Self> {
        if slices.len() != grid.n_t {
            return Err(WkamError::ShapeMismatch(format!(
                "{} slices for N_t = {}",
                slices.len(),
                grid.n_t
            )));
        }
        let mut values = Vec::with_capacity(grid.n_q * grid.n_t);
        for s in slices {
            if s.values.len() != grid.n_q {
                return Err(WkamError::ShapeMismatch("slice length".into()));
            }
            values.extend_from_slice(&s.values);
        }
        Ok(Self { grid, values })
    }

    pub fn get(&self, k: usize, j: usize) -> f64 {
        self.values[(k % self.grid.n_t) * self.grid.n_q + (j % self.grid.n_q)]
    }

    pub fn set(&mut self, k: usize, j: usize, v: f64) {
        let idx = (k % self.grid.n_t) * self.grid.n_q + (j % self.grid.n_q);
        self.values[idx] = v;
    }

    pub fn slice(&self, k: usize) -> GridFunction {
        let k = k % self.grid.n_t;
        let n = self.grid.n_q;
        GridFunction {
            grid: self.grid,
            slice: k,
            values: self.values[k * n..(k + 1) * n].to_vec(),
        }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self {
            grid: self.grid,
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn sup_distance(&self, other: &Self) -> Result<f64> {
        if self.grid != other.grid {
            return Err(WkamError::ShapeMismatch(format!(
                "grids {:?} vs {:?}",
                self.grid, other.grid
            )));
        }
        Ok(max_abs_diff(&self.values, &other.values))
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        wr.write_record(["k", "t", "j", "q", "value"])?;
        for k in 0..self.grid.n_t {
            for j in 0..self.grid.n_q {
                wr.write_record([
                    k.to_string(),
                    fmt17(self.grid.t(k)),
                    j.to_string(),
                    fmt17(self.grid.q(j)),
                    fmt17(self.get(k, j)),
                ])?;
            }
        }
        wr.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(r: R) -> Result<Self> {
        let mut rd = csv::Reader::from_reader(r);
        check_header(rd.headers()?, &["k", "t", "j", "q", "value"])?;
        let mut rows: Vec<(usize, usize, f64)> = Vec::new();
        for rec in rd.records() {
            let rec = rec?;
            rows.push((
                parse_field(&rec, 0)?,
                parse_field(&rec, 2)?,
                parse_field(&rec, 4)?,
            ));
        }
        let n_t = rows.iter().map(|r| r.0).max().map_or(0, |m| m + 1);
        let n_q = rows.iter().map(|r| r.1).max().map_or(0, |m| m + 1);
        if rows.len() != n_t * n_q {
            return Err(WkamError::ShapeMismatch(format!(
                "{} rows for {n_t} x {n_q}",
                rows.len()
            )));
        }
        let mut out = Self::zeros(TorusGrid::new(n_q, n_t)?);
        for (k, j, v) in rows {
            out.set(k, j, v);
        }
        Ok(out)
    }
}

/// Samples a closed-form field `f(q, t)` on slice `k`.
pub fn sample(f: impl Fn(f64, f64) -> f64, grid: TorusGrid, k: usize) -> GridFunction {
    let t = grid.t(k);
    GridFunction {
        grid,
        slice: k % grid.n_t,
        values: (0..grid.n_q).map(|j| f(grid.q(j), t)).collect(),
    }
}

pub(crate) fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

/// 17 significant digits.
pub(crate) fn fmt17(v: f64) -> String {
    format!("{v:.16e}")
}

fn check_header(h: &csv::StringRecord, expected: &[&str]) -> Result<()> {
    if h.iter().ne(expected.iter().copied()) {
        return Err(WkamError::ShapeMismatch(format!(
            "csv header {:?}, expected {:?}",
            h, expected
        )));
    }
    Ok(())
}

fn parse_field<T: std::str::FromStr>(rec: &csv::StringRecord, i: usize) -> Result<T> {
    rec.get(i)
        .and_then(|s| s.trim().parse().ok())
        .ok_or_else(|| WkamError::ShapeMismatch(format!("bad csv field {i} in {rec:?}")))
}
