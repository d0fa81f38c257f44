//! Weak KAM solutions as liminf fixed points of the normalized period map.

use serde::{Deserialize, Serialize};

use crate::error::{Result, WkamError};
use crate::grid::{GridFunction, SpaceTimeFunction};
use crate::lax_oleinik::Dynamics;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    Backward,
    Forward,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FixedPointConfig {
    /// Number of trailing iterates in the window extremum.
    pub window: usize,
    /// Periods discarded before the window starts.
    pub burn_in: usize,
    pub max_iters: usize,
    /// Fixed-point residual tolerance.
    pub tol: f64,
}

impl Default for FixedPointConfig {
    fn default() -> Self {
        Self {
            window: 10,
            burn_in: 50,
            max_iters: 2000,
            tol: 1e-9,
        }
    }
}

impl FixedPointConfig {
    pub fn validate(&self) -> Result<()> {
        if self.window == 0 || self.max_iters <= self.burn_in + self.window || !(self.tol > 0.0) {
            return Err(WkamError::InvalidConfig(format!(
                "bad fixed-point settings {self:?}"
            )));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct WeakKamSolution {
    pub phi: SpaceTimeFunction,
    pub alpha: f64,
    pub direction: Direction,
    /// `sup |T φ(·,0) − φ(·,0)|` for the normalized period map.
    pub residual: f64,
    /// Node of slice 0 where `φ = 0`.
    pub anchor: usize,
    /// Constant subtracted to anchor the raw limit.
    pub anchor_offset: f64,
    pub iterations: usize,
}

impl WeakKamSolution {
    pub fn slice0(&self) -> GridFunction {
        self.phi.slice(0)
    }
}

/// Raw window-extremum limit on slice 0 before anchoring.
#[derive(Clone, Debug)]
struct Limit {
    u: GridFunction,
    residual: f64,
    iterations: usize,
}

fn window_limit(
    u0: &GridFunction,
    cfg: &FixedPointConfig,
    period: impl Fn(&GridFunction) -> Result<GridFunction>,
    pick: fn(f64, f64) -> f64,
) -> Result<Limit> {
    cfg.validate()?;
    let mut u = u0.clone();
    let mut window: Vec<GridFunction> = Vec::with_capacity(cfg.window);
    let mut history = Vec::new();
    for it in 1..=cfg.max_iters {
        u = period(&u)?;
        if it <= cfg.burn_in {
            continue;
        }
        if window.len() == cfg.window {
            window.remove(0);
        }
        window.push(u.clone());
        if window.len() < cfg.window {
            continue;
        }
        let mut star = window[0].clone();
        for w in &window[1..] {
            for (s, &x) in star.values.iter_mut().zip(&w.values) {
                *s = pick(*s, x);
            }
        }
        let confirm = period(&star)?;
        let residual = confirm.sup_distance(&star)?;
        history.push(residual);
        if residual <= cfg.tol {
            return Ok(Limit {
                u: star,
                residual,
                iterations: it + 1,
            });
        }
    }
    Err(WkamError::NoConvergence {
        max_iters: cfg.max_iters,
        last_residual: history.last().copied().unwrap_or(f64::NAN),
        history,
    })
}

/// Backward weak KAM solution: window-min liminf of `T̂⁻ⁿ u0`, confirmed and extended in time.
///
/// `dynamics` must carry the critical value as its `α_shift`; `u0` must live on slice 0.
pub fn backward_fixed_point(
    dynamics: &Dynamics,
    u0: &GridFunction,
    cfg: &FixedPointConfig,
) -> Result<WeakKamSolution> {
    let limit = backward_limit(dynamics, u0, cfg)?;
    let offset = limit.u.values[0];
    let u = limit.u.shifted(-offset);
    let mut sol = extend_in_time(dynamics, &u, cfg.tol.max(limit.residual) * 2.0)?;
    sol.residual = limit.residual;
    sol.anchor_offset = offset;
    sol.iterations = limit.iterations;
    Ok(sol)
}

fn backward_limit(dynamics: &Dynamics, u0: &GridFunction, cfg: &FixedPointConfig) -> Result<Limit> {
    if u0.slice != 0 {
        return Err(WkamError::InvalidConfig(
            "initial data must live on slice 0".into(),
        ));
    }
    window_limit(u0, cfg, |u| dynamics.period_map(u), f64::min)
}

/// `φ(·, k) = T⁻_{0→k} u*`; fails with [`WkamError::WrapMismatch`] if slice `N_t` misses slice 0 by more than `tol`.
pub fn extend_in_time(dynamics: &Dynamics, u: &GridFunction, tol: f64) -> Result<WeakKamSolution> {
    let grid = dynamics.grid();
    let mut slices = Vec::with_capacity(grid.n_t);
    let mut cur = u.clone();
    for _ in 0..grid.n_t {
        slices.push(cur.clone());
        cur = dynamics.backward_operator(&cur, 1)?;
    }
    let defect = cur.sup_distance(u)?;
    if defect > tol {
        return Err(WkamError::WrapMismatch { defect });
    }
    Ok(WeakKamSolution {
        phi: SpaceTimeFunction::from_slices(grid, &slices)?,
        alpha: dynamics.alpha_shift(),
        direction: Direction::Backward,
        residual: defect,
        anchor: 0,
        anchor_offset: 0.0,
        iterations: 0,
    })
}

/// Forward slices `φ(·, k) = T⁺_{k→N_t} u` for `u` on slice 0.
fn extend_forward(dynamics: &Dynamics, u: &GridFunction, tol: f64) -> Result<SpaceTimeFunction> {
    let grid = dynamics.grid();
    let mut slices = vec![u.clone(); grid.n_t];
    let mut cur = u.clone();
    for k in (0..grid.n_t).rev() {
        cur = dynamics.forward_operator(&cur, 1)?;
        if k > 0 {
            slices[k] = cur.clone();
        }
    }
    let defect = cur.sup_distance(u)?;
    if defect > tol {
        return Err(WkamError::WrapMismatch { defect });
    }
    SpaceTimeFunction::from_slices(grid, &slices)
}

fn forward_limit(dynamics: &Dynamics, u0: &GridFunction, cfg: &FixedPointConfig) -> Result<Limit> {
    if u0.slice != 0 {
        return Err(WkamError::InvalidConfig(
            "initial data must live on slice 0".into(),
        ));
    }
    window_limit(u0, cfg, |u| dynamics.forward_period_map(u), f64::max)
}

/// Forward weak KAM solution: window-max limit of `T̂⁺ⁿ u0`, anchored at node 0 of slice 0.
pub fn forward_fixed_point(
    dynamics: &Dynamics,
    u0: &GridFunction,
    cfg: &FixedPointConfig,
) -> Result<WeakKamSolution> {
    let limit = forward_limit(dynamics, u0, cfg)?;
    let offset = limit.u.values[0];
    let u = limit.u.shifted(-offset);
    let phi = extend_forward(dynamics, &u, cfg.tol.max(limit.residual) * 2.0)?;
    Ok(WeakKamSolution {
        phi,
        alpha: dynamics.alpha_shift(),
        direction: Direction::Forward,
        residual: limit.residual,
        anchor: 0,
        anchor_offset: offset,
        iterations: limit.iterations,
    })
}

/// Result of iterating one period map and then another.
#[derive(Clone, Debug, PartialEq)]
pub struct CommonFixedPoint {
    pub u: GridFunction,
    pub residual_first: f64,
    pub residual_second: f64,
}

/// Normalized period-map residual `sup |T̂ u − u|` of a slice-0 function.
pub fn period_residual(dynamics: &Dynamics, u: &GridFunction) -> Result<f64> {
    dynamics.period_map(u)?.sup_distance(u)
}

/// Fixed point of the first period map, then the liminf of the second period map started there.
pub fn common_fixed_point(
    first: &Dynamics,
    second: &Dynamics,
    cfg: &FixedPointConfig,
) -> Result<CommonFixedPoint> {
    let grid = first.grid();
    let u1 = backward_limit(first, &GridFunction::constant(grid, 0, 0.0), cfg)?.u;
    let limit = backward_limit(second, &u1, cfg)?.u;
    let u = limit.shifted(-limit.values[0]);
    Ok(CommonFixedPoint {
        residual_first: period_residual(first, &u)?,
        residual_second: period_residual(second, &u)?,
        u,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConjugatePair {
    pub backward: WeakKamSolution,
    pub forward: WeakKamSolution,
    /// Row-major `[k][j]` mask of `|φ⁻ − φ⁺| ≤ eps`.
    pub equal: Vec<bool>,
    pub eps: f64,
}

impl ConjugatePair {
    pub fn equal_at(&self, k: usize, j: usize) -> bool {
        self.equal[k * self.backward.phi.grid.n_q + j]
    }

    /// Slice-0 nodes in the equality set.
    pub fn equality_nodes(&self) -> Vec<usize> {
        (0..self.backward.phi.grid.n_q)
            .filter(|&j| self.equal_at(0, j))
            .collect()
    }
}

/// Forward solution started from `φ⁻(·, 0)` without re-anchoring, plus the equality set.
pub fn conjugate_pair(
    dynamics: &Dynamics,
    backward: &WeakKamSolution,
    cfg: &FixedPointConfig,
    eps: f64,
) -> Result<ConjugatePair> {
    let limit = forward_limit(dynamics, &backward.slice0(), cfg)?;
    let phi = extend_forward(dynamics, &limit.u, cfg.tol.max(limit.residual) * 2.0)?;
    let equal = backward
        .phi
        .values()
        .iter()
        .zip(phi.values())
        .map(|(a, b)| (a - b).abs() <= eps)
        .collect();
    let forward = WeakKamSolution {
        phi,
        alpha: dynamics.alpha_shift(),
        direction: Direction::Forward,
        residual: limit.residual,
        anchor: 0,
        anchor_offset: 0.0,
        iterations: limit.iterations,
    };
    Ok(ConjugatePair {
        backward: backward.clone(),
        forward,
        equal,
        eps,
    })
}

/// `max_{a,b,i,j} φ(j,b) − φ(i,a) − K_{a→b}(i,j)` over start slices `a` in one period and up to one period of steps.
pub fn domination_residual(dynamics: &Dynamics, phi: &SpaceTimeFunction) -> Result<f64> {
    let grid = dynamics.grid();
    if phi.grid != grid {
        return Err(WkamError::ShapeMismatch(
            "function and operator grids differ".into(),
        ));
    }
    let mut worst = f64::NEG_INFINITY;
    for a in 0..grid.n_t {
        let mut cur = phi.slice(a);
        for s in 1..=grid.n_t {
            cur = dynamics.backward_operator(&cur, 1)?;
            let target = phi.slice((a + s) % grid.n_t);
            for (x, y) in target.values.iter().zip(&cur.values) {
                worst = worst.max(x - y);
            }
        }
    }
    Ok(worst)
}
