//! Peierls barriers, Mañé potential, Aubry masks, quotient classes and extended lifts.
//!
//! Kernels are assembled from prefix kernels `Pre_b` (slice 0 to `b`), suffix
//! kernels `Suf_a` (slice `a` to `N_t`) and min-plus powers of the period
//! kernel `P`. A horizon of `(b − a) + n·N_t` steps factors as
//! `Suf_a ⊗ P^m ⊗ Pre_b`, so a window minimum over `n` is a window minimum
//! over powers, taken once and shared by every slice pair.

use serde::{Deserialize, Serialize};

use crate::error::{Result, WkamError};
use crate::grid::{circle_distance, fmt17, SpaceTimeFunction, TorusGrid, BIG, UNREACHABLE};
use crate::hamiltonian::HamiltonianModel;
use crate::lax_oleinik::Dynamics;
use crate::minplus::MinPlusMatrix;
use crate::weak_kam::WeakKamSolution;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BarrierConfig {
    /// Shortest horizon, in periods beyond the slice offset.
    pub n_min: usize,
    /// Longest horizon.
    pub n_max: usize,
    /// Largest tolerated change of the window minimum when its last horizon is dropped.
    pub settle_tol: f64,
}

impl Default for BarrierConfig {
    fn default() -> Self {
        Self {
            n_min: 8,
            n_max: 24,
            settle_tol: 1e-6,
        }
    }
}

impl BarrierConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_min < 1 || self.n_max <= self.n_min || !(self.settle_tol > 0.0) {
            return Err(WkamError::InvalidConfig(format!(
                "bad barrier window {self:?}"
            )));
        }
        Ok(())
    }
}

/// Precomputed pieces for every `h_{a→b}` on one grid.
#[derive(Clone, Debug)]
pub struct BarrierEngine {
    dynamics: Dynamics,
    cfg: BarrierConfig,
    pre: Vec<MinPlusMatrix>,
    suf: Vec<MinPlusMatrix>,
    /// `min_{m ∈ [n_min−1, n_max−1]} P^m` for `b ≥ a`.
    w_forward: MinPlusMatrix,
    /// `min_{m ∈ [n_min, n_max]} P^m` for `b < a`.
    w_wrap: MinPlusMatrix,
    /// `min_{m ∈ [0, n_max−1]} P^m`, used by the Mañé potential.
    mane_short: MinPlusMatrix,
    /// `min_{m ∈ [0, n_max]} P^m`.
    mane_long: MinPlusMatrix,
    mane_settled: bool,
    /// Change of the barrier window when the last power is dropped.
    pub window_change: f64,
}

fn finite_diff(a: &MinPlusMatrix, b: &MinPlusMatrix) -> f64 {
    a.data()
        .iter()
        .zip(b.data())
        .filter(|(x, y)| x.abs() < UNREACHABLE || y.abs() < UNREACHABLE)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

impl BarrierEngine {
    /// `dynamics` must carry `α_H(0)` as its shift.
    pub fn new(dynamics: &Dynamics, cfg: BarrierConfig) -> Result<Self> {
        cfg.validate()?;
        let grid = dynamics.grid();
        let (n, nt) = (grid.n_q, grid.n_t);
        let mut pre = Vec::with_capacity(nt + 1);
        pre.push(MinPlusMatrix::identity(n));
        for k in 0..nt {
            let next = dynamics.step_rows(&pre[k], k);
            pre.push(next);
        }
        let mut suf = vec![MinPlusMatrix::identity(n); nt + 1];
        for a in (0..nt).rev() {
            let one = dynamics.step_rows(&MinPlusMatrix::identity(n), a);
            suf[a] = one.mul(&suf[a + 1]);
        }
        let period = pre[nt].clone();
        let mut power = MinPlusMatrix::identity(n);
        let mut w_forward: Option<MinPlusMatrix> = None;
        let mut w_forward_short: Option<MinPlusMatrix> = None;
        let mut w_wrap: Option<MinPlusMatrix> = None;
        let mut mane_short = MinPlusMatrix::filled(n, BIG);
        let mut mane_long = MinPlusMatrix::filled(n, BIG);
        let mut mane_prev = mane_long.clone();
        for m in 0..=cfg.n_max {
            if m > 0 {
                power = power.mul(&period);
            }
            if m + 1 >= cfg.n_min && m < cfg.n_max {
                if m + 1 == cfg.n_max {
                    w_forward_short = Some(
                        w_forward
                            .clone()
                            .unwrap_or_else(|| MinPlusMatrix::filled(n, BIG)),
                    );
                }
                match w_forward.as_mut() {
                    Some(w) => w.min_with(&power),
                    None => w_forward = Some(power.clone()),
                }
            }
            if m >= cfg.n_min {
                match w_wrap.as_mut() {
                    Some(w) => w.min_with(&power),
                    None => w_wrap = Some(power.clone()),
                }
            }
            if m < cfg.n_max {
                mane_short.min_with(&power);
            }
            mane_prev = mane_long.clone();
            mane_long.min_with(&power);
        }
        let w_forward = w_forward.expect("window is nonempty");
        let window_change = finite_diff(
            &w_forward,
            &w_forward_short.expect("window has two horizons"),
        );
        let mane_settled = finite_diff(&mane_long, &mane_prev) <= cfg.settle_tol;
        Ok(Self {
            dynamics: dynamics.clone(),
            cfg,
            pre,
            suf,
            w_forward,
            w_wrap: w_wrap.expect("window is nonempty"),
            mane_short,
            mane_long,
            mane_settled,
            window_change,
        })
    }

    /// Fails with [`WkamError::WindowNotSettled`] if the window minimum still moves.
    pub fn require_settled(&self) -> Result<()> {
        if self.window_change > self.cfg.settle_tol {
            return Err(WkamError::WindowNotSettled {
                change: self.window_change,
                tol: self.cfg.settle_tol,
            });
        }
        Ok(())
    }

    pub fn is_settled(&self) -> bool {
        self.window_change <= self.cfg.settle_tol
    }

    pub fn dynamics(&self) -> &Dynamics {
        &self.dynamics
    }

    pub fn config(&self) -> &BarrierConfig {
        &self.cfg
    }

    fn window(&self, a: usize, b: usize) -> &MinPlusMatrix {
        if b >= a {
            &self.w_forward
        } else {
            &self.w_wrap
        }
    }

    /// Full `h_{a→b}` between slices `a` and `b` (both in `0..N_t`).
    pub fn h_matrix(&self, a: usize, b: usize) -> MinPlusMatrix {
        self.suf[a].mul(self.window(a, b)).mul(&self.pre[b])
    }

    /// Row `h((i, a), (·, b))` for every `b`.
    pub fn h_rows_from(&self, a: usize, i: usize) -> Vec<Vec<f64>> {
        let start = self.suf[a].row(i).to_vec();
        let fwd = self.w_forward.apply_backward(&start);
        let wrap = self.w_wrap.apply_backward(&start);
        (0..self.dynamics.grid().n_t)
            .map(|b| self.pre[b].apply_backward(if b >= a { &fwd } else { &wrap }))
            .collect()
    }

    /// Column `h((·, a), (j, b))` for every `a`.
    pub fn h_columns_to(&self, b: usize, j: usize) -> Vec<Vec<f64>> {
        let end = self.pre[b].column(j);
        let fwd = self.w_forward.apply_forward_min(&end);
        let wrap = self.w_wrap.apply_forward_min(&end);
        (0..self.dynamics.grid().n_t)
            .map(|a| self.suf[a].apply_forward_min(if b >= a { &fwd } else { &wrap }))
            .collect()
    }

    /// Single entry `h((i, a), (j, b))`.
    pub fn h_entry(&self, a: usize, i: usize, b: usize, j: usize) -> f64 {
        let start = self.suf[a].row(i).to_vec();
        let mid = self.window(a, b).apply_backward(&start);
        mid.iter()
            .zip(self.pre[b].column(j))
            .map(|(x, y)| x + y)
            .fold(BIG, f64::min)
    }

    /// First barrier `B(q_j, t_k) = h((j,k),(j,k))`.
    pub fn first_barrier(&self) -> SpaceTimeFunction {
        let grid = self.dynamics.grid();
        let mut out = SpaceTimeFunction::zeros(grid);
        for k in 0..grid.n_t {
            let left = self.suf[k].mul(&self.w_forward);
            for (j, v) in left.mul_diagonal(&self.pre[k]).into_iter().enumerate() {
                out.set(k, j, v);
            }
        }
        out
    }

    /// Mañé potential between slices `a` and `b`: minimum over every horizon `≡ b − a (mod N_t)`,
    /// at least one step, at most `n_max` extra periods.
    pub fn mane_matrix(&self, a: usize, b: usize) -> MinPlusMatrix {
        if b > a {
            let mut direct = self
                .dynamics
                .transfer_matrix(a, b - a)
                .expect("nodal scheme");
            let long = self.suf[a].mul(&self.mane_short).mul(&self.pre[b]);
            direct.min_with(&long);
            direct
        } else if b == a {
            self.suf[a].mul(&self.mane_short).mul(&self.pre[b])
        } else {
            self.suf[a].mul(&self.mane_long).mul(&self.pre[b])
        }
    }

    /// Whether the Mañé window stopped decreasing at `n_max`.
    pub fn mane_settled(&self) -> bool {
        self.mane_settled
    }
}

/// Barrier fields with the window used.
#[derive(Clone, Debug, PartialEq)]
pub struct BarrierField {
    pub first: SpaceTimeFunction,
    pub second: SpaceTimeFunction,
    pub n_min: usize,
    pub n_max: usize,
    pub settled: bool,
}

/// Aubry mask `{B ≤ ε}`.
#[derive(Clone, Debug, PartialEq)]
pub struct AubryMask {
    pub grid: TorusGrid,
    pub threshold: f64,
    /// Row-major `[k][j]`.
    pub cells: Vec<bool>,
}

impl AubryMask {
    pub fn contains(&self, k: usize, j: usize) -> bool {
        self.cells[k * self.grid.n_q + j]
    }

    pub fn count(&self) -> usize {
        self.cells.iter().filter(|&&c| c).count()
    }

    /// `(k, j)` of every masked node.
    pub fn nodes(&self) -> Vec<(usize, usize)> {
        let n = self.grid.n_q;
        self.cells
            .iter()
            .enumerate()
            .filter(|(_, &c)| c)
            .map(|(i, _)| (i / n, i % n))
            .collect()
    }

    /// Masked position nodes of slice `k`.
    pub fn column_nodes(&self, k: usize) -> Vec<usize> {
        (0..self.grid.n_q)
            .filter(|&j| self.contains(k, j))
            .collect()
    }
}

/// Mask threshold `c·Δq²/Δt`, the scale of the discrete barrier one node away from a stationary Aubry orbit.
pub fn default_threshold(grid: TorusGrid, c: f64) -> f64 {
    c * grid.dq() * grid.dq() / grid.dt()
}

/// Thresholds the first barrier.
pub fn aubry_mask(barrier: &SpaceTimeFunction, threshold: f64) -> Result<AubryMask> {
    let cells: Vec<bool> = barrier.values().iter().map(|&v| v <= threshold).collect();
    if !cells.iter().any(|&c| c) {
        return Err(WkamError::EmptyMask { threshold });
    }
    Ok(AubryMask {
        grid: barrier.grid,
        threshold,
        cells,
    })
}

/// Masks agree up to boundary cells: every cell in exactly one mask has a neighbour (space or time) in both.
pub fn symmetric_difference_is_boundary(a: &AubryMask, b: &AubryMask) -> (usize, bool) {
    let grid = a.grid;
    let mut count = 0;
    let mut ok = true;
    for k in 0..grid.n_t {
        for j in 0..grid.n_q {
            if a.contains(k, j) == b.contains(k, j) {
                continue;
            }
            count += 1;
            let neighbours = [
                (k, grid.wrap_q(j as isize - 1)),
                (k, grid.wrap_q(j as isize + 1)),
                (grid.wrap_t(k as isize - 1), j),
                (grid.wrap_t(k as isize + 1), j),
                (k, j),
            ];
            let adjacent = neighbours.iter().any(|&(kk, jj)| a.contains(kk, jj))
                && neighbours.iter().any(|&(kk, jj)| b.contains(kk, jj));
            ok &= adjacent;
        }
    }
    (count, ok)
}

/// `Suf_a ⊗ W` for both windows and every slice; any `h` entry then costs `O(N_q)`.
struct LeftProducts<'a> {
    engine: &'a BarrierEngine,
    forward: Vec<MinPlusMatrix>,
    wrap: Vec<MinPlusMatrix>,
}

impl<'a> LeftProducts<'a> {
    fn new(engine: &'a BarrierEngine) -> Self {
        let nt = engine.dynamics.grid().n_t;
        let forward = (0..nt)
            .map(|a| engine.suf[a].mul(&engine.w_forward))
            .collect();
        let wrap = (0..nt).map(|a| engine.suf[a].mul(&engine.w_wrap)).collect();
        Self {
            engine,
            forward,
            wrap,
        }
    }

    fn entry(&self, (a, i): (usize, usize), (b, j): (usize, usize)) -> f64 {
        let left = if b >= a {
            &self.forward[a]
        } else {
            &self.wrap[a]
        };
        let pre = &self.engine.pre[b];
        let n = left.n();
        (0..n)
            .map(|m| left.get(i, m) + pre.get(m, j))
            .fold(BIG, f64::min)
    }

    fn rho(&self, x: (usize, usize), y: (usize, usize)) -> f64 {
        self.entry(x, y) + self.entry(y, x)
    }
}

struct UnionFind(Vec<usize>);

impl UnionFind {
    fn find(&mut self, x: usize) -> usize {
        let mut r = x;
        while self.0[r] != r {
            r = self.0[r];
        }
        let mut y = x;
        while self.0[y] != r {
            let next = self.0[y];
            self.0[y] = r;
            y = next;
        }
        r
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            self.0[ra.max(rb)] = ra.min(rb);
        }
    }
}

/// Static classes of the Aubry mask under `ρ(x, y) = h(x, y) + h(y, x)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuotientMetric {
    /// Members `(k, j)` per class, sorted.
    pub classes: Vec<Vec<(usize, usize)>>,
    /// Up to four representatives per class; the first has the smallest barrier.
    pub representatives: Vec<Vec<(usize, usize)>>,
    /// Class-to-class `ρ` between first representatives.
    pub rho: Vec<Vec<f64>>,
    /// Largest `ρ` between a class's first representative and any member.
    pub diameters: Vec<f64>,
    /// Edge threshold used to link nodes.
    pub link_threshold: f64,
}

impl QuotientMetric {
    pub fn class_count(&self) -> usize {
        self.classes.len()
    }
}

/// Links masked nodes whose `ρ` is at most `2ε`: all pairs within a slice, position
/// neighbours across adjacent slices, then class representatives pairwise.
pub fn quotient_aubry(
    engine: &BarrierEngine,
    barrier: &SpaceTimeFunction,
    mask: &AubryMask,
) -> Result<QuotientMetric> {
    let nodes = mask.nodes();
    if nodes.is_empty() {
        return Err(WkamError::EmptyMask {
            threshold: mask.threshold,
        });
    }
    let grid = mask.grid;
    let link = 2.0 * mask.threshold;
    let left = LeftProducts::new(engine);
    let index = |k: usize, j: usize| k * grid.n_q + j;
    let mut uf = UnionFind((0..grid.n_q * grid.n_t).collect());
    for k in 0..grid.n_t {
        let col = mask.column_nodes(k);
        if col.is_empty() {
            continue;
        }
        let h = engine.h_matrix(k, k);
        for (x, &i) in col.iter().enumerate() {
            for &j in &col[x + 1..] {
                if h.get(i, j) + h.get(j, i) <= link {
                    uf.union(index(k, i), index(k, j));
                }
            }
        }
        let next = (k + 1) % grid.n_t;
        for &i in &col {
            for d in [-1isize, 0, 1] {
                let j = grid.wrap_q(i as isize + d);
                if mask.contains(next, j) && left.rho((k, i), (next, j)) <= link {
                    uf.union(index(k, i), index(next, j));
                }
            }
        }
    }
    let mut merged = true;
    let mut classes = group(&nodes, &mut uf, index);
    while merged {
        merged = false;
        let reps: Vec<(usize, usize)> = classes.iter().map(|c| best_node(c, barrier)).collect();
        'outer: for a in 0..reps.len() {
            for b in a + 1..reps.len() {
                if left.rho(reps[a], reps[b]) <= link {
                    uf.union(index(reps[a].0, reps[a].1), index(reps[b].0, reps[b].1));
                    merged = true;
                    break 'outer;
                }
            }
        }
        if merged {
            classes = group(&nodes, &mut uf, index);
        }
    }
    let representatives: Vec<Vec<(usize, usize)>> = classes
        .iter()
        .map(|c| pick_representatives(c, barrier))
        .collect();
    let rho = representatives
        .iter()
        .map(|a| {
            representatives
                .iter()
                .map(|b| {
                    if a[0] == b[0] {
                        0.0
                    } else {
                        left.rho(a[0], b[0])
                    }
                })
                .collect()
        })
        .collect();
    let diameters = classes
        .iter()
        .zip(&representatives)
        .map(|(c, r)| {
            c.iter()
                .map(|&x| if x == r[0] { 0.0 } else { left.rho(r[0], x) })
                .fold(0.0, f64::max)
        })
        .collect();
    Ok(QuotientMetric {
        classes,
        representatives,
        rho,
        diameters,
        link_threshold: link,
    })
}

fn group(
    nodes: &[(usize, usize)],
    uf: &mut UnionFind,
    index: impl Fn(usize, usize) -> usize,
) -> Vec<Vec<(usize, usize)>> {
    let mut roots: Vec<usize> = Vec::new();
    let mut classes: Vec<Vec<(usize, usize)>> = Vec::new();
    for &(k, j) in nodes {
        let r = uf.find(index(k, j));
        match roots.iter().position(|&x| x == r) {
            Some(p) => classes[p].push((k, j)),
            None => {
                roots.push(r);
                classes.push(vec![(k, j)]);
            }
        }
    }
    classes
}

fn best_node(class: &[(usize, usize)], barrier: &SpaceTimeFunction) -> (usize, usize) {
    *class
        .iter()
        .min_by(|x, y| barrier.get(x.0, x.1).total_cmp(&barrier.get(y.0, y.1)))
        .expect("class is nonempty")
}

fn pick_representatives(
    class: &[(usize, usize)],
    barrier: &SpaceTimeFunction,
) -> Vec<(usize, usize)> {
    let first = best_node(class, barrier);
    let mut reps = vec![first];
    for s in 1..4 {
        let x = class[s * class.len() / 4];
        if !reps.contains(&x) {
            reps.push(x);
        }
    }
    reps
}

/// `b(x) = min over representatives r, s of h(r, x) + h(x, s) − h(r, s)`, capped by `B(x)` on the mask.
pub fn second_barrier(
    engine: &BarrierEngine,
    barrier: &SpaceTimeFunction,
    mask: &AubryMask,
    quotient: &QuotientMetric,
) -> SpaceTimeFunction {
    let grid = mask.grid;
    let reps: Vec<(usize, usize)> = quotient.representatives.iter().flatten().copied().collect();
    let from: Vec<Vec<Vec<f64>>> = reps
        .iter()
        .map(|&(k, j)| engine.h_rows_from(k, j))
        .collect();
    let to: Vec<Vec<Vec<f64>>> = reps
        .iter()
        .map(|&(k, j)| engine.h_columns_to(k, j))
        .collect();
    let mut out = SpaceTimeFunction::from_fn(grid, |k, j| {
        if mask.contains(k, j) {
            barrier.get(k, j)
        } else {
            BIG
        }
    });
    for fr in &from {
        for (s, ts) in reps.iter().zip(&to) {
            let h_rs = fr[s.0][s.1];
            for k in 0..grid.n_t {
                for j in 0..grid.n_q {
                    let v = fr[k][j] + ts[k][j] - h_rs;
                    if v < out.get(k, j) {
                        out.set(k, j, v);
                    }
                }
            }
        }
    }
    out
}

/// Both barriers with the mask and quotient they were built from.
pub fn barrier_field(
    engine: &BarrierEngine,
    threshold: f64,
) -> Result<(BarrierField, AubryMask, QuotientMetric)> {
    engine.require_settled()?;
    let first = engine.first_barrier();
    let mask = aubry_mask(&first, threshold)?;
    let quotient = quotient_aubry(engine, &first, &mask)?;
    let second = second_barrier(engine, &first, &mask, &quotient);
    let field = BarrierField {
        first,
        second,
        n_min: engine.cfg.n_min,
        n_max: engine.cfg.n_max,
        settled: engine.is_settled(),
    };
    Ok((field, mask, quotient))
}

impl AubryMask {
    /// CSV with header `k,j,flag`.
    pub fn write_csv<W: std::io::Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        wr.write_record(["k", "j", "flag"])?;
        for k in 0..self.grid.n_t {
            for j in 0..self.grid.n_q {
                wr.write_record([
                    k.to_string(),
                    j.to_string(),
                    u8::from(self.contains(k, j)).to_string(),
                ])?;
            }
        }
        wr.flush()?;
        Ok(())
    }
}

/// Point `(q, p, t, κ)` of an extended lift.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LiftPoint {
    pub q: f64,
    pub p: f64,
    pub t: f64,
    pub kappa: f64,
}

impl LiftPoint {
    /// Product metric: circle distances in `q` and `t`, absolute differences in `p` and `κ`, combined by maximum.
    pub fn distance(&self, other: &LiftPoint) -> f64 {
        circle_distance(self.q, other.q)
            .max(circle_distance(self.t, other.t))
            .max((self.p - other.p).abs())
            .max((self.kappa - other.kappa).abs())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExtendedLift {
    pub points: Vec<LiftPoint>,
    pub alpha: f64,
}

impl ExtendedLift {
    /// Lifts masked nodes using the velocity of the calibrated step arriving at each node:
    /// `p = ∂L/∂v`, `κ = α − H(q, p, t)`.
    pub fn from_solution(
        dynamics: &Dynamics,
        solution: &WeakKamSolution,
        mask: &AubryMask,
    ) -> Result<Self> {
        let grid = dynamics.grid();
        let model = dynamics.model();
        let alpha = dynamics.alpha_shift();
        let mut points = Vec::with_capacity(mask.count());
        for k in 0..grid.n_t {
            let col = mask.column_nodes(k);
            if col.is_empty() {
                continue;
            }
            let prev = (k + grid.n_t - 1) % grid.n_t;
            let (_, arg) =
                dynamics.backward_step_from(solution.phi.slice(prev).values.as_slice(), prev);
            let t = grid.t(k);
            for j in col {
                let q = grid.q(j);
                let v = dynamics.lattice().velocity(arg[j]);
                let p = model.momentum_for_velocity(q, v, t)?;
                points.push(LiftPoint {
                    q,
                    p,
                    t,
                    kappa: alpha - model.value(q, p, t),
                });
            }
        }
        Ok(Self { points, alpha })
    }

    /// `max |κ + H − α|` over the lift.
    pub fn energy_defect(&self, model: &HamiltonianModel, alpha: f64) -> f64 {
        self.points
            .iter()
            .map(|x| (x.kappa + model.value(x.q, x.p, x.t) - alpha).abs())
            .fold(0.0, f64::max)
    }

    /// Distance from `x` to the nearest lifted point.
    pub fn distance_to(&self, x: &LiftPoint) -> f64 {
        self.points
            .iter()
            .map(|y| y.distance(x))
            .fold(f64::INFINITY, f64::min)
    }

    /// Symmetric Hausdorff distance.
    pub fn hausdorff(&self, other: &ExtendedLift) -> f64 {
        let one = self
            .points
            .iter()
            .map(|x| other.distance_to(x))
            .fold(0.0, f64::max);
        let two = other
            .points
            .iter()
            .map(|x| self.distance_to(x))
            .fold(0.0, f64::max);
        one.max(two)
    }

    /// CSV with header `q,p,t,kappa`.
    pub fn write_csv<W: std::io::Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        wr.write_record(["q", "p", "t", "kappa"])?;
        for x in &self.points {
            wr.write_record([fmt17(x.q), fmt17(x.p), fmt17(x.t), fmt17(x.kappa)])?;
        }
        wr.flush()?;
        Ok(())
    }
}
