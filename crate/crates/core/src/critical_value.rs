//! Critical value `α_H(0)` from the one-period kernel (Karp) and from iterate growth.

use serde::{Deserialize, Serialize};

use crate::error::{Result, WkamError};
use crate::grid::{GridFunction, UNREACHABLE};
use crate::lax_oleinik::{ActionKernel, Dynamics};
use crate::minplus::MinPlusMatrix;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AlphaMethod {
    Growth,
    Karp,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AlphaDiagnostics {
    /// Period iterations (growth) or optimal cycle length (karp).
    pub iterations: usize,
    /// Slope disagreement (growth); zero for karp.
    pub residual: f64,
    /// Growth only: slope estimated from the per-iterate minimum instead of the mean.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub min_slope_value: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AlphaEstimate {
    pub value: f64,
    pub method: AlphaMethod,
    pub diagnostics: AlphaDiagnostics,
}

/// Minimum mean cycle weight `λ` of the complete digraph with weights `m`, plus a cycle length attaining it.
pub fn min_mean_cycle(m: &MinPlusMatrix) -> Result<(f64, usize)> {
    let bad = m.count_unreachable();
    if bad > 0 {
        return Err(WkamError::NonFiniteKernel { count: bad });
    }
    let n = m.n();
    // d[k][v]: least weight of a k-edge walk ending at v, from any start.
    let mut d = vec![0.0; (n + 1) * n];
    for k in 0..n {
        let (prev, next) = d.split_at_mut((k + 1) * n);
        let prev = &prev[k * n..];
        let next = &mut next[..n];
        next.fill(f64::INFINITY);
        for (i, &di) in prev.iter().enumerate() {
            for (o, &w) in next.iter_mut().zip(m.row(i)) {
                let c = di + w;
                if c < *o {
                    *o = c;
                }
            }
        }
    }
    let last = &d[n * n..];
    let mut best = f64::INFINITY;
    let mut best_len = 1;
    for v in 0..n {
        let mut worst = f64::NEG_INFINITY;
        let mut worst_len = 1;
        for k in 0..n {
            let r = (last[v] - d[k * n + v]) / (n - k) as f64;
            if r > worst {
                worst = r;
                worst_len = n - k;
            }
        }
        if worst < best {
            best = worst;
            best_len = worst_len;
        }
    }
    Ok((best, best_len))
}

/// Karp estimate `α = −λ` from a one-period kernel built with zero shift.
pub fn alpha_karp(kernel: &ActionKernel) -> Result<AlphaEstimate> {
    if kernel.steps != kernel.grid.n_t {
        return Err(WkamError::InvalidConfig(format!(
            "Karp needs a one-period kernel ({} steps), got {}",
            kernel.grid.n_t, kernel.steps
        )));
    }
    let (lambda, len) = min_mean_cycle(&kernel.matrix)?;
    let value = kernel.alpha_shift - lambda;
    Ok(AlphaEstimate {
        value,
        method: AlphaMethod::Karp,
        diagnostics: AlphaDiagnostics {
            iterations: len,
            residual: 0.0,
            min_slope_value: None,
        },
    })
}

/// Convenience: builds the period kernel from slice 0 and runs Karp.
pub fn alpha_karp_for(dynamics: &Dynamics) -> Result<AlphaEstimate> {
    let kernel = dynamics.action_kernel(0, dynamics.grid().n_t)?;
    alpha_karp(&kernel)
}

fn ls_slope(ys: &[f64]) -> f64 {
    let n = ys.len() as f64;
    let xm = (n - 1.0) / 2.0;
    let ym = ys.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for (i, y) in ys.iter().enumerate() {
        let dx = i as f64 - xm;
        sxy += dx * (y - ym);
        sxx += dx * dx;
    }
    sxy / sxx
}

/// Growth estimate: minus the least-squares slope of `k ↦ mean_q T⁻ᵏ0` over `k ∈ (burn_in, n_periods]`.
///
/// The slope over the whole window is compared with the slope over its second
/// half; a gap above `10·tol` is reported as [`WkamError::NonConvergence`].
pub fn alpha_growth(
    dynamics: &Dynamics,
    n_periods: usize,
    burn_in: usize,
    tol: f64,
) -> Result<AlphaEstimate> {
    if burn_in < 1 || n_periods <= burn_in + 2 {
        return Err(WkamError::InvalidConfig(format!(
            "need n_periods > burn_in + 2 and burn_in >= 1, got {n_periods} and {burn_in}"
        )));
    }
    let grid = dynamics.grid();
    let dynamics = dynamics.with_alpha(0.0);
    let mut u = GridFunction::constant(grid, 0, 0.0);
    let mut offset = 0.0;
    let mut means = Vec::with_capacity(n_periods - burn_in);
    let mut mins = Vec::with_capacity(n_periods - burn_in);
    for k in 1..=n_periods {
        u = dynamics.period_map(&u)?;
        if u.values
            .iter()
            .any(|v| !v.is_finite() || v.abs() >= UNREACHABLE)
        {
            return Err(WkamError::NonFiniteKernel {
                count: u.values.len(),
            });
        }
        // Renormalize to keep magnitudes small; the offset restores the unnormalized iterate.
        let lo = u.min();
        offset += lo;
        u = u.shifted(-lo);
        if k > burn_in {
            means.push(offset + u.mean());
            mins.push(offset);
        }
    }
    let whole = ls_slope(&means);
    let half = ls_slope(&means[means.len() / 2..]);
    if (whole - half).abs() > 10.0 * tol {
        return Err(WkamError::NonConvergence {
            previous: -whole,
            current: -half,
        });
    }
    Ok(AlphaEstimate {
        value: -whole,
        method: AlphaMethod::Growth,
        diagnostics: AlphaDiagnostics {
            iterations: n_periods,
            residual: (whole - half).abs(),
            min_slope_value: Some(-ls_slope(&mins)),
        },
    })
}
