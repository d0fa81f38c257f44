//! Discrete backward/forward Lax-Oleinik operators and finite-horizon action kernels.
//!
//! A step moves from slice `k` to slice `k+1` along straight segments with
//! velocities from a finite lattice. The action of a segment is integrated
//! with Simpson's rule on the closed-form Lagrangian. In the default
//! [`Scheme::Nodal`] every segment joins two grid nodes (velocities are
//! multiples of `Δq/Δt`), so a step is a genuine min-plus linear map and
//! operators coincide with kernel products up to summation order. The
//! [`Scheme::Linear`] and [`Scheme::Cubic`] semi-Lagrangian variants use an
//! arbitrary velocity lattice and interpolate at the departure point; they
//! stay monotone (linear only), non-expansive and constant-equivariant but are
//! not min-plus linear, so kernels are only defined for the nodal scheme.

use serde::{Deserialize, Serialize};

use crate::error::{Result, WkamError};
use crate::grid::{
    interpolate_periodic, interpolate_periodic_cubic, GridFunction, TorusGrid, BIG, UNREACHABLE,
};
use crate::hamiltonian::HamiltonianModel;
use crate::minplus::MinPlusMatrix;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    /// Node-to-node segments; exact min-plus linearity.
    #[default]
    Nodal,
    /// Semi-Lagrangian with periodic linear interpolation.
    Linear,
    /// Semi-Lagrangian with four-point cubic interpolation (accuracy studies only).
    Cubic,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OperatorConfig {
    /// Velocity bound.
    pub vmax: f64,
    /// Velocity count for the interpolating schemes; the nodal scheme derives its own.
    pub n_v: usize,
    /// Constant added to the Lagrangian (normally `α_H(0)`).
    pub alpha_shift: f64,
    pub scheme: Scheme,
}

impl Default for OperatorConfig {
    fn default() -> Self {
        Self {
            vmax: 3.0,
            n_v: 121,
            alpha_shift: 0.0,
            scheme: Scheme::Nodal,
        }
    }
}

impl OperatorConfig {
    pub fn with_alpha(self, alpha_shift: f64) -> Self {
        Self {
            alpha_shift,
            ..self
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.vmax > 0.0) || !self.vmax.is_finite() {
            return Err(WkamError::InvalidConfig(format!(
                "Vmax must be positive, got {}",
                self.vmax
            )));
        }
        if self.scheme != Scheme::Nodal && (self.n_v < 5 || self.n_v % 2 == 0) {
            return Err(WkamError::InvalidConfig(format!(
                "N_v must be odd and >= 5, got {}",
                self.n_v
            )));
        }
        if !self.alpha_shift.is_finite() {
            return Err(WkamError::InvalidConfig(
                "alpha_shift must be finite".into(),
            ));
        }
        Ok(())
    }
}

/// Velocity lattice: symmetric, contains 0, `v[c + m] = m·step` exactly.
#[derive(Clone, Debug, PartialEq)]
pub struct VelocityLattice {
    pub step: f64,
    pub half_width: usize,
}

impl VelocityLattice {
    pub fn for_config(grid: &TorusGrid, cfg: &OperatorConfig) -> Self {
        match cfg.scheme {
            Scheme::Nodal => {
                let step = grid.n_t as f64 / grid.n_q as f64;
                let m = ((cfg.vmax / step) - 1e-9).ceil().max(2.0) as usize;
                Self {
                    step,
                    half_width: m,
                }
            }
            Scheme::Linear | Scheme::Cubic => {
                let c = (cfg.n_v - 1) / 2;
                Self {
                    step: cfg.vmax / c as f64,
                    half_width: c,
                }
            }
        }
    }

    pub fn len(&self) -> usize {
        2 * self.half_width + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Signed lattice offset of index `l`.
    pub fn offset(&self, l: usize) -> isize {
        l as isize - self.half_width as isize
    }

    pub fn velocity(&self, l: usize) -> f64 {
        self.offset(l) as f64 * self.step
    }

    pub fn vmax(&self) -> f64 {
        self.half_width as f64 * self.step
    }

    pub fn is_boundary(&self, l: usize) -> bool {
        l == 0 || l + 1 == self.len()
    }
}

/// Model, grid and precomputed segment actions for one operator configuration.
#[derive(Clone, Debug)]
pub struct Dynamics {
    model: HamiltonianModel,
    grid: TorusGrid,
    cfg: OperatorConfig,
    lattice: VelocityLattice,
    /// Backward table `[k][l][j]`. Nodal: segment leaving node `j`. Interpolating: segment arriving at `j`.
    back_costs: Vec<f64>,
    /// Forward table `[k][l][i]` for the interpolating schemes: segment leaving node `i`.
    fwd_costs: Vec<f64>,
}

/// One backward step with its per-node argmin velocity.
#[derive(Clone, Debug, PartialEq)]
pub struct StepOutcome {
    pub values: GridFunction,
    pub argmin_velocity: Vec<f64>,
    /// Nodes whose optimal velocity sits on the lattice boundary (`|v| = Vmax`).
    pub boundary_hits: usize,
}

impl Dynamics {
    pub fn new(model: &HamiltonianModel, grid: TorusGrid, cfg: OperatorConfig) -> Result<Self> {
        cfg.validate()?;
        let lattice = VelocityLattice::for_config(&grid, &cfg);
        let kinetic: Vec<f64> = (0..lattice.len())
            .map(|l| model.kinetic(lattice.velocity(l)))
            .collect::<Result<_>>()?;
        let (nq, nt, nv) = (grid.n_q, grid.n_t, lattice.len());
        let dt = grid.dt();
        let mut back_costs = vec![0.0; nt * nv * nq];
        let mut fwd_costs = Vec::new();
        let segment = |x0: f64, l: usize, k: usize| {
            let v = lattice.velocity(l);
            let t0 = grid.t(k);
            let kin = kinetic[l];
            let a = model.lagrangian_with_kinetic(x0, v, t0, kin);
            let b = model.lagrangian_with_kinetic(x0 + 0.5 * v * dt, v, t0 + 0.5 * dt, kin);
            let c = model.lagrangian_with_kinetic(x0 + v * dt, v, t0 + dt, kin);
            dt * (a + 4.0 * b + c) / 6.0
        };
        match cfg.scheme {
            Scheme::Nodal => {
                for k in 0..nt {
                    for l in 0..nv {
                        for j in 0..nq {
                            back_costs[(k * nv + l) * nq + j] = segment(grid.q(j), l, k);
                        }
                    }
                }
            }
            Scheme::Linear | Scheme::Cubic => {
                fwd_costs = vec![0.0; nt * nv * nq];
                for k in 0..nt {
                    for l in 0..nv {
                        let v = lattice.velocity(l);
                        for j in 0..nq {
                            back_costs[(k * nv + l) * nq + j] = segment(grid.q(j) - v * dt, l, k);
                            fwd_costs[(k * nv + l) * nq + j] = segment(grid.q(j), l, k);
                        }
                    }
                }
            }
        }
        Ok(Self {
            model: model.clone(),
            grid,
            cfg,
            lattice,
            back_costs,
            fwd_costs,
        })
    }

    /// Same tables with a different `α_shift`.
    pub fn with_alpha(&self, alpha_shift: f64) -> Self {
        let mut out = self.clone();
        out.cfg.alpha_shift = alpha_shift;
        out
    }

    pub fn model(&self) -> &HamiltonianModel {
        &self.model
    }

    pub fn grid(&self) -> TorusGrid {
        self.grid
    }

    pub fn config(&self) -> &OperatorConfig {
        &self.cfg
    }

    pub fn lattice(&self) -> &VelocityLattice {
        &self.lattice
    }

    pub fn alpha_shift(&self) -> f64 {
        self.cfg.alpha_shift
    }

    /// Action (including `α_shift·Δt`) of the nodal segment leaving node `i` at slice `k` with lattice index `l`.
    #[inline]
    pub fn segment_cost(&self, k: usize, i: usize, l: usize) -> f64 {
        let (nq, nv) = (self.grid.n_q, self.lattice.len());
        self.back_costs[((k % self.grid.n_t) * nv + l) * nq + i]
            + self.cfg.alpha_shift * self.grid.dt()
    }

    fn check_grid(&self, u: &GridFunction) -> Result<()> {
        if u.values.len() != self.grid.n_q {
            return Err(WkamError::ShapeMismatch(format!(
                "function has {} nodes, operator grid has {}",
                u.values.len(),
                self.grid.n_q
            )));
        }
        Ok(())
    }

    /// One backward step from slice `k` (absolute count) to `k + 1`.
    pub fn backward_step_from(&self, u: &[f64], k: usize) -> (Vec<f64>, Vec<usize>) {
        let (nq, nv) = (self.grid.n_q, self.lattice.len());
        let kk = k % self.grid.n_t;
        let shift = self.cfg.alpha_shift * self.grid.dt();
        let mut out = vec![f64::INFINITY; nq];
        let mut arg = vec![0usize; nq];
        match self.cfg.scheme {
            Scheme::Nodal => {
                for l in 0..nv {
                    let m = self.lattice.offset(l).rem_euclid(nq as isize) as usize;
                    let costs = &self.back_costs[(kk * nv + l) * nq..(kk * nv + l + 1) * nq];
                    for j in 0..nq {
                        let i = if j >= m { j - m } else { j + nq - m };
                        let c = u[i] + (costs[i] + shift);
                        if c < out[j] {
                            out[j] = c;
                            arg[j] = l;
                        }
                    }
                }
                out.iter_mut().for_each(|o| *o = o.min(BIG));
            }
            Scheme::Linear | Scheme::Cubic => {
                let dt = self.grid.dt();
                let interp = if self.cfg.scheme == Scheme::Linear {
                    interpolate_periodic
                } else {
                    interpolate_periodic_cubic
                };
                for l in 0..nv {
                    let v = self.lattice.velocity(l);
                    let costs = &self.back_costs[(kk * nv + l) * nq..(kk * nv + l + 1) * nq];
                    for j in 0..nq {
                        let c = interp(u, self.grid.q(j) - v * dt) + (costs[j] + shift);
                        if c < out[j] {
                            out[j] = c;
                            arg[j] = l;
                        }
                    }
                }
            }
        }
        (out, arg)
    }

    /// One forward step from slice `k + 1` back to slice `k` (absolute counts).
    pub fn forward_step_to(&self, u: &[f64], k: usize) -> (Vec<f64>, Vec<usize>) {
        let (nq, nv) = (self.grid.n_q, self.lattice.len());
        let kk = k % self.grid.n_t;
        let shift = self.cfg.alpha_shift * self.grid.dt();
        let mut out = vec![f64::NEG_INFINITY; nq];
        let mut arg = vec![0usize; nq];
        match self.cfg.scheme {
            Scheme::Nodal => {
                for l in 0..nv {
                    let m = self.lattice.offset(l).rem_euclid(nq as isize) as usize;
                    let costs = &self.back_costs[(kk * nv + l) * nq..(kk * nv + l + 1) * nq];
                    for i in 0..nq {
                        let j = if i + m >= nq { i + m - nq } else { i + m };
                        let c = u[j] - (costs[i] + shift);
                        if c > out[i] {
                            out[i] = c;
                            arg[i] = l;
                        }
                    }
                }
                out.iter_mut().for_each(|o| *o = o.max(-BIG));
            }
            Scheme::Linear | Scheme::Cubic => {
                let dt = self.grid.dt();
                let interp = if self.cfg.scheme == Scheme::Linear {
                    interpolate_periodic
                } else {
                    interpolate_periodic_cubic
                };
                for l in 0..nv {
                    let v = self.lattice.velocity(l);
                    let costs = &self.fwd_costs[(kk * nv + l) * nq..(kk * nv + l + 1) * nq];
                    for i in 0..nq {
                        let c = interp(u, self.grid.q(i) + v * dt) - (costs[i] + shift);
                        if c > out[i] {
                            out[i] = c;
                            arg[i] = l;
                        }
                    }
                }
            }
        }
        (out, arg)
    }

    /// Backward step with argmin bookkeeping.
    pub fn backward_step(&self, u: &GridFunction) -> Result<StepOutcome> {
        self.check_grid(u)?;
        let (values, arg) = self.backward_step_from(&u.values, u.slice);
        Ok(self.outcome(values, arg, (u.slice + 1) % self.grid.n_t))
    }

    fn outcome(&self, values: Vec<f64>, arg: Vec<usize>, slice: usize) -> StepOutcome {
        let boundary_hits = arg
            .iter()
            .zip(&values)
            .filter(|(&l, &v)| v < UNREACHABLE && v > -UNREACHABLE && self.lattice.is_boundary(l))
            .count();
        StepOutcome {
            values: GridFunction {
                grid: self.grid,
                slice,
                values,
            },
            argmin_velocity: arg.iter().map(|&l| self.lattice.velocity(l)).collect(),
            boundary_hits,
        }
    }

    /// `T⁻` over `steps` slices starting at `u.slice`.
    pub fn backward_operator(&self, u: &GridFunction, steps: usize) -> Result<GridFunction> {
        self.check_grid(u)?;
        let mut cur = u.values.clone();
        for s in 0..steps {
            cur = self.backward_step_from(&cur, u.slice + s).0;
        }
        Ok(GridFunction {
            grid: self.grid,
            slice: (u.slice + steps) % self.grid.n_t,
            values: cur,
        })
    }

    /// Like [`Self::backward_operator`], returning the last step's argmin data.
    pub fn backward_operator_traced(&self, u: &GridFunction, steps: usize) -> Result<StepOutcome> {
        self.check_grid(u)?;
        if steps == 0 {
            return Ok(StepOutcome {
                values: u.clone(),
                argmin_velocity: vec![0.0; self.grid.n_q],
                boundary_hits: 0,
            });
        }
        let start = self.backward_operator(u, steps - 1)?;
        self.backward_step(&start)
    }

    /// `T⁺` over `steps` slices ending at `u.slice`: result lives at `u.slice − steps`.
    pub fn forward_operator(&self, u: &GridFunction, steps: usize) -> Result<GridFunction> {
        self.check_grid(u)?;
        let nt = self.grid.n_t;
        // Absolute end slice chosen as a multiple of N_t above `steps`, so counts stay non-negative.
        let end = u.slice + nt * (steps / nt + 1);
        let mut cur = u.values.clone();
        for s in 0..steps {
            cur = self.forward_step_to(&cur, end - s - 1).0;
        }
        Ok(GridFunction {
            grid: self.grid,
            slice: (end - steps) % nt,
            values: cur,
        })
    }

    /// Backward period map starting at slice 0.
    pub fn period_map(&self, u: &GridFunction) -> Result<GridFunction> {
        self.backward_operator(u, self.grid.n_t)
    }

    /// Forward period map ending at slice 0.
    pub fn forward_period_map(&self, u: &GridFunction) -> Result<GridFunction> {
        self.forward_operator(u, self.grid.n_t)
    }

    /// Kernel over `steps` slices from `start`, built by stepping every row of the identity.
    pub fn action_kernel(&self, start: usize, steps: usize) -> Result<ActionKernel> {
        if steps == 0 {
            return Err(WkamError::InvalidConfig(
                "kernel needs at least one step".into(),
            ));
        }
        let matrix = self.transfer_matrix(start, steps)?;
        Ok(ActionKernel {
            grid: self.grid,
            start: start % self.grid.n_t,
            steps,
            alpha_shift: self.cfg.alpha_shift,
            matrix,
        })
    }

    /// Kernel matrix over `steps ≥ 0` slices (identity for 0).
    pub fn transfer_matrix(&self, start: usize, steps: usize) -> Result<MinPlusMatrix> {
        if self.cfg.scheme != Scheme::Nodal {
            return Err(WkamError::InvalidConfig(
                "action kernels require the nodal scheme".into(),
            ));
        }
        let n = self.grid.n_q;
        let mut m = MinPlusMatrix::identity(n);
        for s in 0..steps {
            m = self.step_rows(&m, start + s);
        }
        Ok(m)
    }

    /// Applies one backward step to every row of a kernel.
    pub fn step_rows(&self, m: &MinPlusMatrix, k: usize) -> MinPlusMatrix {
        let n = self.grid.n_q;
        let mut out = MinPlusMatrix::filled(n, BIG);
        for i in 0..n {
            let row = m.row(i);
            if row.iter().all(|&v| v >= UNREACHABLE) {
                continue;
            }
            let (next, _) = self.backward_step_from(row, k);
            out.row_mut(i).copy_from_slice(&next);
        }
        out
    }
}

/// Matrix of minimal discrete actions between nodes over a fixed number of slices.
#[derive(Clone, Debug, PartialEq)]
pub struct ActionKernel {
    pub grid: TorusGrid,
    /// Start slice (wrapped).
    pub start: usize,
    /// Elapsed steps.
    pub steps: usize,
    pub alpha_shift: f64,
    pub matrix: MinPlusMatrix,
}

impl ActionKernel {
    pub fn end_slice(&self) -> usize {
        (self.start + self.steps) % self.grid.n_t
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.matrix.get(i, j)
    }

    /// `u ⊗ K`.
    pub fn apply(&self, u: &GridFunction) -> Result<GridFunction> {
        if u.values.len() != self.grid.n_q {
            return Err(WkamError::ShapeMismatch("kernel/function size".into()));
        }
        Ok(GridFunction {
            grid: self.grid,
            slice: self.end_slice(),
            values: self.matrix.apply_backward(&u.values),
        })
    }

    pub fn write_csv<W: std::io::Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        wr.write_record(["i", "j", "value"])?;
        let n = self.grid.n_q;
        for i in 0..n {
            for j in 0..n {
                wr.write_record([
                    i.to_string(),
                    j.to_string(),
                    crate::grid::fmt17(self.get(i, j)),
                ])?;
            }
        }
        wr.flush()?;
        Ok(())
    }

    pub fn sidecar(&self, cfg: &OperatorConfig, lattice: &VelocityLattice) -> serde_json::Value {
        serde_json::json!({
            "N_q": self.grid.n_q,
            "N_t": self.grid.n_t,
            "k1": self.start,
            "k2": self.start + self.steps,
            "m": self.steps,
            "alpha_shift": self.alpha_shift,
            "Vmax": lattice.vmax(),
            "N_v": lattice.len(),
            "scheme": cfg.scheme,
        })
    }
}

/// `(K1 ∘ K2)(i, j) = min_m K1(i, m) + K2(m, j)`; elapsed steps add.
pub fn minplus_compose(k1: &ActionKernel, k2: &ActionKernel) -> Result<ActionKernel> {
    if k1.grid != k2.grid {
        return Err(WkamError::ShapeMismatch(
            "kernels live on different grids".into(),
        ));
    }
    if k1.end_slice() != k2.start % k1.grid.n_t {
        return Err(WkamError::SliceMismatch {
            end: k1.end_slice(),
            start: k2.start,
        });
    }
    Ok(ActionKernel {
        grid: k1.grid,
        start: k1.start,
        steps: k1.steps + k2.steps,
        alpha_shift: k1.alpha_shift,
        matrix: k1.matrix.mul(&k2.matrix),
    })
}

/// Rebuilds the tables with growing velocity range until no optimal velocity sits on
/// the lattice boundary over one period from `probe` (at most four doublings).
pub fn refine_velocity_range(
    model: &HamiltonianModel,
    grid: TorusGrid,
    cfg: OperatorConfig,
    probe: &GridFunction,
) -> Result<Dynamics> {
    let mut cfg = cfg;
    let mut dynamics = Dynamics::new(model, grid, cfg)?;
    for _ in 0..4 {
        let mut u = probe.clone();
        let mut hits = 0;
        for _ in 0..grid.n_t {
            let out = dynamics.backward_step(&u)?;
            hits += out.boundary_hits;
            u = out.values;
        }
        if hits == 0 {
            break;
        }
        cfg.vmax *= 2.0;
        cfg.n_v = 2 * cfg.n_v - 1;
        dynamics = Dynamics::new(model, grid, cfg)?;
    }
    Ok(dynamics)
}
