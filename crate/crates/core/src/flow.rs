//! Extended autonomous flow of `H̃ = κ + H(q, p, t)` and its defect diagnostics.

use serde::{Deserialize, Serialize};

use crate::barriers::{ExtendedLift, LiftPoint};
use crate::error::{Result, WkamError};
use crate::grid::fmt17;
use crate::hamiltonian::HamiltonianModel;

/// Point of the extended phase space; `q` and `t` wrapped to `[0, 1)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExtendedState {
    pub q: f64,
    pub p: f64,
    pub t: f64,
    pub kappa: f64,
}

impl ExtendedState {
    pub fn new(q: f64, p: f64, t: f64, kappa: f64) -> Self {
        Self {
            q: q.rem_euclid(1.0),
            p,
            t: t.rem_euclid(1.0),
            kappa,
        }
    }

    fn as_lift(&self) -> LiftPoint {
        LiftPoint {
            q: self.q,
            p: self.p,
            t: self.t,
            kappa: self.kappa,
        }
    }

    /// Product metric shared with extended lifts.
    pub fn distance(&self, other: &ExtendedState) -> f64 {
        self.as_lift().distance(&other.as_lift())
    }

    /// `H̃ = κ + H(q, p, t)`.
    pub fn extended_energy(&self, model: &HamiltonianModel) -> f64 {
        self.kappa + model.value(self.q, self.p, self.t)
    }
}

impl From<LiftPoint> for ExtendedState {
    fn from(x: LiftPoint) -> Self {
        Self::new(x.q, x.p, x.t, x.kappa)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FlowConfig {
    pub step: f64,
    pub max_span: f64,
}

impl Default for FlowConfig {
    fn default() -> Self {
        Self {
            step: 1e-3,
            max_span: 4.0,
        }
    }
}

impl FlowConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.step > 0.0 && self.step <= 0.1) {
            return Err(WkamError::InvalidFlow(format!(
                "step must lie in (0, 0.1], got {}",
                self.step
            )));
        }
        if !(self.max_span > 0.0) {
            return Err(WkamError::InvalidFlow("max_span must be positive".into()));
        }
        Ok(())
    }
}

/// Sample of a trajectory at flow time `tau`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryPoint {
    pub tau: f64,
    pub state: ExtendedState,
}

fn vector_field(model: &HamiltonianModel, q: f64, p: f64, t: f64) -> (f64, f64) {
    let v = model.eval(q, p, t);
    (v.dp, -v.dq)
}

/// RK4 for `(q, p, t)` with `ṫ = 1`; `κ = κ0 + H(start) − H(current)` at every sample.
/// Negative spans integrate backward.
pub fn flow_extended(
    model: &HamiltonianModel,
    x0: ExtendedState,
    span: f64,
    cfg: &FlowConfig,
) -> Result<Vec<TrajectoryPoint>> {
    cfg.validate()?;
    if span.abs() > cfg.max_span || !span.is_finite() {
        return Err(WkamError::InvalidFlow(format!(
            "|span| = {} exceeds max_span {}",
            span.abs(),
            cfg.max_span
        )));
    }
    let h0 = model.value(x0.q, x0.p, x0.t);
    let mut out = vec![TrajectoryPoint {
        tau: 0.0,
        state: x0,
    }];
    if span == 0.0 {
        return Ok(out);
    }
    let n = (span.abs() / cfg.step).ceil() as usize;
    let h = span / n as f64;
    let (mut q, mut p, mut t) = (x0.q, x0.p, x0.t);
    for i in 1..=n {
        let (k1q, k1p) = vector_field(model, q, p, t);
        let (k2q, k2p) = vector_field(model, q + 0.5 * h * k1q, p + 0.5 * h * k1p, t + 0.5 * h);
        let (k3q, k3p) = vector_field(model, q + 0.5 * h * k2q, p + 0.5 * h * k2p, t + 0.5 * h);
        let (k4q, k4p) = vector_field(model, q + h * k3q, p + h * k3p, t + h);
        let dp = h / 6.0 * (k1p + 2.0 * k2p + 2.0 * k3p + k4p);
        if dp.abs() > 1.0 || !dp.is_finite() {
            return Err(WkamError::StepRejected { jump: dp.abs() });
        }
        q += h / 6.0 * (k1q + 2.0 * k2q + 2.0 * k3q + k4q);
        p += dp;
        t = x0.t + i as f64 * h;
        let kappa = x0.kappa + h0 - model.value(q, p, t);
        out.push(TrajectoryPoint {
            tau: i as f64 * h,
            state: ExtendedState::new(q, p, t, kappa),
        });
    }
    Ok(out)
}

/// End point of [`flow_extended`].
pub fn flow_to(
    model: &HamiltonianModel,
    x0: ExtendedState,
    span: f64,
    cfg: &FlowConfig,
) -> Result<ExtendedState> {
    Ok(flow_extended(model, x0, span, cfg)?
        .last()
        .expect("trajectory has a start")
        .state)
}

/// Distance between `φ^s_{H̃1} φ^r_{H̃2} x0` and `φ^r_{H̃2} φ^s_{H̃1} x0`.
pub fn commutation_defect(
    h1: &HamiltonianModel,
    h2: &HamiltonianModel,
    x0: ExtendedState,
    s: f64,
    r: f64,
    cfg: &FlowConfig,
) -> Result<f64> {
    let a = flow_to(h1, flow_to(h2, x0, r, cfg)?, s, cfg)?;
    let b = flow_to(h2, flow_to(h1, x0, s, cfg)?, r, cfg)?;
    Ok(a.distance(&b))
}

/// `max_τ |H̃2(x(τ)) − H̃2(x0)|` along the `H̃1` flow.
pub fn conservation_defect(
    h1: &HamiltonianModel,
    h2: &HamiltonianModel,
    x0: ExtendedState,
    s: f64,
    cfg: &FlowConfig,
) -> Result<f64> {
    let e0 = x0.extended_energy(h2);
    Ok(flow_extended(h1, x0, s, cfg)?
        .iter()
        .map(|x| (x.state.extended_energy(h2) - e0).abs())
        .fold(0.0, f64::max))
}

/// Pushes every lifted point by `φ^s_{H̃2}` and returns the largest distance to the lift.
pub fn aubry_invariance_check(
    h2: &HamiltonianModel,
    lift: &ExtendedLift,
    s: f64,
    cfg: &FlowConfig,
) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for &x in &lift.points {
        let y = flow_to(h2, ExtendedState::from(x), s, cfg)?;
        worst = worst.max(lift.distance_to(&y.as_lift()));
    }
    Ok(worst)
}

/// CSV with header `tau,q,p,t,kappa`.
pub fn write_trajectory_csv<W: std::io::Write>(trajectory: &[TrajectoryPoint], w: W) -> Result<()> {
    let mut wr = csv::Writer::from_writer(w);
    wr.write_record(["tau", "q", "p", "t", "kappa"])?;
    for x in trajectory {
        let s = x.state;
        wr.write_record([
            fmt17(x.tau),
            fmt17(s.q),
            fmt17(s.p),
            fmt17(s.t),
            fmt17(s.kappa),
        ])?;
    }
    wr.flush()?;
    Ok(())
}
