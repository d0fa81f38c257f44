//! Time-periodic Tonelli Hamiltonians on the circle.
//!
//! Every model has the form
//!
//! ```text
//! H(q, p, [t]) = h(p + ∂qS(q,[t])) + ∂tS(q,[t]) + g([t]) + V(q,[t])
//! ```
//!
//! with a strictly convex polynomial profile `h`, a generating field `S`,
//! a forcing `g` and a potential `V`, all finite Fourier series. The free
//! particle, pendulum and forced pendulum are special cases with `S = g = 0`;
//! the conjugated family has `V = 0` and is what commuting pairs are built
//! from. Because `S` only enters through a fiber translation by `dS`, the
//! Lagrangian has the closed form `L = h*(v) − v∂qS − ∂tS − g − V`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Result, WkamError};

const TWO_PI: f64 = 2.0 * PI;

/// Newton tolerance on the residual `h'(p) − v`.
pub const NEWTON_TOL: f64 = 1e-12;
/// Iteration cap for bracketed Newton solves.
pub const NEWTON_MAX_ITERS: usize = 60;

#[inline]
fn wrap_unit(x: f64) -> f64 {
    let w = x.rem_euclid(1.0);
    if w >= 1.0 {
        0.0
    } else {
        w
    }
}

/// d-th derivative of `cos(ωx)` (or `sin(ωx)`) given the precomputed cosine and sine.
#[inline]
fn trig_derivative(omega: f64, c: f64, s: f64, order: u32, is_sin: bool) -> f64 {
    let base = match (is_sin, order % 4) {
        (false, 0) => c,
        (false, 1) => -s,
        (false, 2) => -c,
        (false, _) => s,
        (true, 0) => s,
        (true, 1) => c,
        (true, 2) => -s,
        (true, _) => -c,
    };
    base * omega.powi(order as i32)
}

/// One mode of a real Fourier series in a single circle variable.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FourierMode {
    pub k: u32,
    #[serde(default)]
    pub cos: f64,
    #[serde(default)]
    pub sin: f64,
}

/// `f(x) = Σ cos_k·cos(2πkx) + sin_k·sin(2πkx)`.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct FourierSeries {
    pub modes: Vec<FourierMode>,
}

impl FourierSeries {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn new(modes: Vec<FourierMode>) -> Self {
        Self { modes }
    }

    pub fn constant(c: f64) -> Self {
        Self::new(vec![FourierMode {
            k: 0,
            cos: c,
            sin: 0.0,
        }])
    }

    pub fn is_zero(&self) -> bool {
        self.modes
            .iter()
            .all(|m| m.cos == 0.0 && (m.sin == 0.0 || m.k == 0))
    }

    /// Exact mean over one period: the constant coefficient.
    pub fn mean(&self) -> f64 {
        self.modes.iter().filter(|m| m.k == 0).map(|m| m.cos).sum()
    }

    pub fn derivative(&self, order: u32, x: f64) -> f64 {
        let mut acc = 0.0;
        for m in &self.modes {
            if m.k == 0 {
                if order == 0 {
                    acc += m.cos;
                }
                continue;
            }
            let omega = TWO_PI * m.k as f64;
            let (s, c) = (omega * x).sin_cos();
            acc += m.cos * trig_derivative(omega, c, s, order, false)
                + m.sin * trig_derivative(omega, c, s, order, true);
        }
        acc
    }

    pub fn value(&self, x: f64) -> f64 {
        self.derivative(0, x)
    }
}

/// One mode of a double Fourier series in `(q, t)`:
/// `cc·cos(2πmq)cos(2πnt) + cs·cos(2πmq)sin(2πnt) + sc·sin(2πmq)cos(2πnt) + ss·sin(2πmq)sin(2πnt)`.
#[derive(Clone, Debug, PartialEq, Default, Serialize, Deserialize)]
pub struct DoubleMode {
    pub m: u32,
    pub n: u32,
    #[serde(default)]
    pub cc: f64,
    #[serde(default)]
    pub cs: f64,
    #[serde(default)]
    pub sc: f64,
    #[serde(default)]
    pub ss: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct DoubleFourier {
    pub modes: Vec<DoubleMode>,
}

impl DoubleFourier {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn new(modes: Vec<DoubleMode>) -> Self {
        Self { modes }
    }

    pub fn is_zero(&self) -> bool {
        self.modes
            .iter()
            .all(|m| m.cc == 0.0 && m.cs == 0.0 && m.sc == 0.0 && m.ss == 0.0)
    }

    /// Mixed partial derivative `∂q^dq ∂t^dt` at `(q, t)`.
    pub fn derivative(&self, dq: u32, dt: u32, q: f64, t: f64) -> f64 {
        let mut acc = 0.0;
        for md in &self.modes {
            let wq = TWO_PI * md.m as f64;
            let wt = TWO_PI * md.n as f64;
            let (sq, cq) = (wq * q).sin_cos();
            let (st, ct) = (wt * t).sin_cos();
            let fq_c = trig_derivative(wq, cq, sq, dq, false);
            let fq_s = trig_derivative(wq, cq, sq, dq, true);
            let ft_c = trig_derivative(wt, ct, st, dt, false);
            let ft_s = trig_derivative(wt, ct, st, dt, true);
            acc += md.cc * fq_c * ft_c
                + md.cs * fq_c * ft_s
                + md.sc * fq_s * ft_c
                + md.ss * fq_s * ft_s;
        }
        acc
    }

    pub fn value(&self, q: f64, t: f64) -> f64 {
        self.derivative(0, 0, q, t)
    }
}

/// Strictly convex, superlinear polynomial profile `h(p) = Σ c_k p^k`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct ConvexProfile {
    coeffs: Vec<f64>,
}

impl TryFrom<Vec<f64>> for ConvexProfile {
    type Error = WkamError;
    fn try_from(v: Vec<f64>) -> Result<Self> {
        ConvexProfile::new(v)
    }
}

impl From<ConvexProfile> for Vec<f64> {
    fn from(p: ConvexProfile) -> Self {
        p.coeffs
    }
}

impl ConvexProfile {
    /// Half-width of the lattice on which strict convexity is sampled.
    pub const CHECK_RANGE: f64 = 10.0;
    pub const CHECK_SAMPLES: usize = 2001;

    pub fn new(mut coeffs: Vec<f64>) -> Result<Self> {
        while coeffs.last() == Some(&0.0) {
            coeffs.pop();
        }
        let degree = coeffs.len().saturating_sub(1);
        if degree < 2 || degree % 2 != 0 || coeffs[degree] <= 0.0 {
            return Err(WkamError::ProfileNotSuperlinear(format!(
                "polynomial of degree {degree} with leading coefficient {:?}",
                coeffs.last()
            )));
        }
        let profile = Self { coeffs };
        for i in 0..Self::CHECK_SAMPLES {
            let p = -Self::CHECK_RANGE
                + 2.0 * Self::CHECK_RANGE * i as f64 / (Self::CHECK_SAMPLES - 1) as f64;
            let second = profile.second_derivative(p);
            if second <= 0.0 {
                return Err(WkamError::ProfileNotConvex { at: p, second });
            }
        }
        Ok(profile)
    }

    /// `p²/2`
    pub fn quadratic() -> Self {
        Self {
            coeffs: vec![0.0, 0.0, 0.5],
        }
    }

    /// `p²/2 + p⁴/4`
    pub fn quadratic_quartic() -> Self {
        Self {
            coeffs: vec![0.0, 0.0, 0.5, 0.0, 0.25],
        }
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn value(&self, p: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, c| acc * p + c)
    }

    pub fn derivative(&self, p: f64) -> f64 {
        self.coeffs
            .iter()
            .enumerate()
            .skip(1)
            .rev()
            .fold(0.0, |acc, (k, c)| acc * p + k as f64 * c)
    }

    pub fn second_derivative(&self, p: f64) -> f64 {
        self.coeffs
            .iter()
            .enumerate()
            .skip(2)
            .rev()
            .fold(0.0, |acc, (k, c)| acc * p + (k * (k - 1)) as f64 * c)
    }

    /// Solves `h'(p) = v` by Newton's method safeguarded with bisection.
    pub fn inverse_derivative(&self, v: f64) -> Result<f64> {
        let fail = || WkamError::NewtonDivergence {
            target: v,
            iterations: NEWTON_MAX_ITERS,
        };
        let (mut lo, mut hi) = (-1.0_f64, 1.0_f64);
        let mut grow = 0;
        while self.derivative(hi) < v {
            hi *= 2.0;
            grow += 1;
            if grow > NEWTON_MAX_ITERS {
                return Err(fail());
            }
        }
        while self.derivative(lo) > v {
            lo *= 2.0;
            grow += 1;
            if grow > NEWTON_MAX_ITERS {
                return Err(fail());
            }
        }
        let scale = v.abs().max(1.0);
        let mut p = 0.0_f64.clamp(lo, hi);
        for _ in 0..NEWTON_MAX_ITERS {
            let f = self.derivative(p) - v;
            if f.abs() <= NEWTON_TOL * scale {
                return Ok(p);
            }
            if f > 0.0 {
                hi = p;
            } else {
                lo = p;
            }
            let step = p - f / self.second_derivative(p);
            p = if step > lo && step < hi {
                step
            } else {
                0.5 * (lo + hi)
            };
            if hi - lo <= f64::EPSILON * scale {
                return Ok(p);
            }
        }
        let f = self.derivative(p) - v;
        if f.abs() <= 1e3 * NEWTON_TOL * scale {
            Ok(p)
        } else {
            Err(fail())
        }
    }

    /// Convex conjugate `h*(v) = sup_p (p v − h(p))`.
    pub fn conjugate(&self, v: f64) -> Result<f64> {
        let p = self.inverse_derivative(v)?;
        Ok(p * v - self.value(p))
    }
}

/// Exact-form conjugation data: the generating field `S(q,[t])` and forcing `g([t])`.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct GeneratingField {
    #[serde(default)]
    pub generating: DoubleFourier,
    #[serde(default)]
    pub forcing: FourierSeries,
}

impl GeneratingField {
    pub fn zero() -> Self {
        Self::default()
    }

    /// `S = 0.05 sin(2πq) cos(2πt)`, `g = cos(2πt)`.
    pub fn pair_d1() -> Self {
        Self {
            generating: DoubleFourier::new(vec![DoubleMode {
                m: 1,
                n: 1,
                sc: 0.05,
                ..Default::default()
            }]),
            forcing: FourierSeries::new(vec![FourierMode {
                k: 1,
                cos: 1.0,
                sin: 0.0,
            }]),
        }
    }

    pub fn s(&self, q: f64, t: f64) -> f64 {
        self.generating.value(q, t)
    }

    pub fn forcing_mean(&self) -> f64 {
        self.forcing.mean()
    }
}

/// Which closed-form family a model came from.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Family {
    Free,
    Pendulum { amplitude: f64 },
    ForcedPendulum { amplitude: f64, epsilon: f64 },
    Conjugated,
    Custom,
}

/// Values returned by [`HamiltonianModel::eval`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HamiltonianValues {
    pub h: f64,
    pub dp: f64,
    pub dq: f64,
    pub dt: f64,
}

/// Result of a Legendre transform at a velocity.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LegendrePoint {
    pub lagrangian: f64,
    pub momentum: f64,
}

/// Sample lattice used for certification by sampling.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SampleLattice {
    pub n_q: usize,
    pub n_p: usize,
    pub n_t: usize,
    pub p_max: f64,
}

impl Default for SampleLattice {
    /// 10 × 10 × 10 points with `p ∈ [−2, 2]`.
    fn default() -> Self {
        Self {
            n_q: 10,
            n_p: 10,
            n_t: 10,
            p_max: 2.0,
        }
    }
}

impl SampleLattice {
    pub fn points(&self) -> impl Iterator<Item = (f64, f64, f64)> + '_ {
        let (nq, np, nt) = (self.n_q.max(1), self.n_p.max(2), self.n_t.max(1));
        (0..nq).flat_map(move |i| {
            (0..np).flat_map(move |j| {
                (0..nt).map(move |k| {
                    let q = (i as f64 + 0.37) / nq as f64;
                    let p = -self.p_max + 2.0 * self.p_max * j as f64 / (np - 1) as f64;
                    let t = (k as f64 + 0.11) / nt as f64;
                    (q, p, t)
                })
            })
        })
    }
}

/// An evaluable time-periodic Tonelli Hamiltonian on `T*S¹ × S¹`.
#[derive(Clone, Debug, PartialEq)]
pub struct HamiltonianModel {
    family: Family,
    profile: ConvexProfile,
    potential: DoubleFourier,
    field: GeneratingField,
    reversed: bool,
}

impl HamiltonianModel {
    pub fn new(
        family: Family,
        profile: ConvexProfile,
        potential: DoubleFourier,
        field: GeneratingField,
    ) -> Self {
        Self {
            family,
            profile,
            potential,
            field,
            reversed: false,
        }
    }

    /// `H = p²/2`
    pub fn free() -> Self {
        Self::new(
            Family::Free,
            ConvexProfile::quadratic(),
            DoubleFourier::zero(),
            GeneratingField::zero(),
        )
    }

    /// `H = p²/2 + A cos(2πq)`; the Aubry set sits at the potential maximum `q = 0`.
    pub fn pendulum(amplitude: f64) -> Self {
        let potential = DoubleFourier::new(vec![DoubleMode {
            m: 1,
            n: 0,
            cc: amplitude,
            ..Default::default()
        }]);
        Self::new(
            Family::Pendulum { amplitude },
            ConvexProfile::quadratic(),
            potential,
            GeneratingField::zero(),
        )
    }

    /// `H = p²/2 + A (1 + ε cos(2πt)) cos(2πq)`
    pub fn forced_pendulum(amplitude: f64, epsilon: f64) -> Self {
        let potential = DoubleFourier::new(vec![
            DoubleMode {
                m: 1,
                n: 0,
                cc: amplitude,
                ..Default::default()
            },
            DoubleMode {
                m: 1,
                n: 1,
                cc: amplitude * epsilon,
                ..Default::default()
            },
        ]);
        Self::new(
            Family::ForcedPendulum { amplitude, epsilon },
            ConvexProfile::quadratic(),
            potential,
            GeneratingField::zero(),
        )
    }

    /// `H = h(p + ∂qS) + ∂tS + g`
    pub fn conjugated(profile: ConvexProfile, field: GeneratingField) -> Self {
        Self::new(Family::Conjugated, profile, DoubleFourier::zero(), field)
    }

    pub fn family(&self) -> &Family {
        &self.family
    }

    pub fn profile(&self) -> &ConvexProfile {
        &self.profile
    }

    pub fn potential(&self) -> &DoubleFourier {
        &self.potential
    }

    pub fn field(&self) -> &GeneratingField {
        &self.field
    }

    pub fn is_reversed(&self) -> bool {
        self.reversed
    }

    /// True when no term depends on time.
    pub fn is_autonomous(&self) -> bool {
        self.potential
            .modes
            .iter()
            .all(|m| m.n == 0 || (m.cc == 0.0 && m.cs == 0.0 && m.sc == 0.0 && m.ss == 0.0))
            && self.field.generating.is_zero()
            && self
                .field
                .forcing
                .modes
                .iter()
                .all(|m| m.k == 0 || (m.cos == 0.0 && m.sin == 0.0))
    }

    /// The symmetric Hamiltonian `Ȟ(q, p, [t]) = H(q, −p, [−t])`.
    pub fn reversed(&self) -> Self {
        let mut out = self.clone();
        out.reversed = !self.reversed;
        out
    }

    fn eval_base(&self, q: f64, p: f64, t: f64) -> HamiltonianValues {
        let f = &self.field;
        let sq = f.generating.derivative(1, 0, q, t);
        let st = f.generating.derivative(0, 1, q, t);
        let sqq = f.generating.derivative(2, 0, q, t);
        let sqt = f.generating.derivative(1, 1, q, t);
        let stt = f.generating.derivative(0, 2, q, t);
        let big_p = p + sq;
        let hp = self.profile.derivative(big_p);
        let h = self.profile.value(big_p) + st + f.forcing.value(t) + self.potential.value(q, t);
        HamiltonianValues {
            h,
            dp: hp,
            dq: hp * sqq + sqt + self.potential.derivative(1, 0, q, t),
            dt: hp * sqt + stt + f.forcing.derivative(1, t) + self.potential.derivative(0, 1, q, t),
        }
    }

    /// `H`, `∂H/∂p`, `∂H/∂q`, `∂H/∂t` at `(q, p, [t])`.
    pub fn eval(&self, q: f64, p: f64, t: f64) -> HamiltonianValues {
        let q = wrap_unit(q);
        if self.reversed {
            let b = self.eval_base(q, -p, wrap_unit(-t));
            HamiltonianValues {
                h: b.h,
                dp: -b.dp,
                dq: b.dq,
                dt: -b.dt,
            }
        } else {
            self.eval_base(q, p, wrap_unit(t))
        }
    }

    pub fn value(&self, q: f64, p: f64, t: f64) -> f64 {
        self.eval(q, p, t).h
    }

    /// `∂²H/∂p²`, exact.
    pub fn fiber_hessian(&self, q: f64, p: f64, t: f64) -> f64 {
        let (p, t) = if self.reversed {
            (-p, wrap_unit(-t))
        } else {
            (p, wrap_unit(t))
        };
        let sq = self.field.generating.derivative(1, 0, wrap_unit(q), t);
        self.profile.second_derivative(p + sq)
    }

    /// Kinetic part `h*(v)` of the Lagrangian (`h*(−v)` for a reversed model).
    pub fn kinetic(&self, v: f64) -> Result<f64> {
        self.profile.conjugate(if self.reversed { -v } else { v })
    }

    /// `L(q, v, [t])` given the precomputed kinetic part from [`Self::kinetic`].
    pub fn lagrangian_with_kinetic(&self, q: f64, v: f64, t: f64, kinetic: f64) -> f64 {
        let q = wrap_unit(q);
        let (v, t) = if self.reversed {
            (-v, wrap_unit(-t))
        } else {
            (v, wrap_unit(t))
        };
        let f = &self.field;
        let sq = f.generating.derivative(1, 0, q, t);
        let st = f.generating.derivative(0, 1, q, t);
        kinetic - v * sq - st - f.forcing.value(t) - self.potential.value(q, t)
    }

    /// Closed-form Lagrangian `h*(v) − v∂qS − ∂tS − g − V`.
    pub fn lagrangian(&self, q: f64, v: f64, t: f64) -> Result<f64> {
        Ok(self.lagrangian_with_kinetic(q, v, t, self.kinetic(v)?))
    }

    /// Closed-form momentum `p = ∂L/∂v` at velocity `v`.
    pub fn momentum_for_velocity(&self, q: f64, v: f64, t: f64) -> Result<f64> {
        let q = wrap_unit(q);
        if self.reversed {
            let tt = wrap_unit(-t);
            let sq = self.field.generating.derivative(1, 0, q, tt);
            Ok(-(self.profile.inverse_derivative(-v)? - sq))
        } else {
            let sq = self.field.generating.derivative(1, 0, q, wrap_unit(t));
            Ok(self.profile.inverse_derivative(v)? - sq)
        }
    }

    /// Legendre transform by a bracketed Newton solve of `∂H/∂p(q, p, [t]) = v`.
    pub fn legendre(&self, q: f64, v: f64, t: f64) -> Result<LegendrePoint> {
        let fail = || WkamError::NewtonDivergence {
            target: v,
            iterations: NEWTON_MAX_ITERS,
        };
        let dp = |p: f64| self.eval(q, p, t).dp;
        let (mut lo, mut hi) = (-1.0_f64, 1.0_f64);
        let mut grow = 0;
        while dp(hi) < v {
            hi *= 2.0;
            grow += 1;
            if grow > NEWTON_MAX_ITERS {
                return Err(fail());
            }
        }
        while dp(lo) > v {
            lo *= 2.0;
            grow += 1;
            if grow > NEWTON_MAX_ITERS {
                return Err(fail());
            }
        }
        let scale = v.abs().max(1.0);
        let mut p = 0.5 * (lo + hi);
        let mut converged = false;
        for _ in 0..NEWTON_MAX_ITERS {
            let f = dp(p) - v;
            if f.abs() <= NEWTON_TOL * scale {
                converged = true;
                break;
            }
            if f > 0.0 {
                hi = p;
            } else {
                lo = p;
            }
            let step = p - f / self.fiber_hessian(q, p, t);
            p = if step > lo && step < hi {
                step
            } else {
                0.5 * (lo + hi)
            };
        }
        if !converged && (dp(p) - v).abs() > 1e3 * NEWTON_TOL * scale {
            return Err(fail());
        }
        Ok(LegendrePoint {
            lagrangian: p * v - self.value(q, p, t),
            momentum: p,
        })
    }

    /// Smallest `P` (from a doubling sequence) with `H(q, ±P, [t]) / P ≥ 2` on the lattice.
    pub fn superlinear_bound(&self, lattice: &SampleLattice) -> Result<f64> {
        let mut big_p = 1.0;
        for _ in 0..40 {
            let ok = lattice.points().all(|(q, _, t)| {
                self.value(q, big_p, t) / big_p >= 2.0 && self.value(q, -big_p, t) / big_p >= 2.0
            });
            if ok {
                return Ok(big_p);
            }
            big_p *= 2.0;
        }
        Err(WkamError::ProfileNotSuperlinear(format!(
            "H(q,±P,t)/P < 2 up to P = {big_p}"
        )))
    }

    /// Samples the Tonelli conditions: fiber convexity, superlinearity, periodicity.
    pub fn check_tonelli(&self, lattice: &SampleLattice) -> Result<()> {
        for (q, p, t) in lattice.points() {
            let second = self.fiber_hessian(q, p, t);
            if second <= 0.0 {
                return Err(WkamError::ProfileNotConvex { at: p, second });
            }
            let base = self.eval(q, p, t);
            for shifted in [self.eval(q + 1.0, p, t), self.eval(q, p, t + 1.0)] {
                let d = (shifted.h - base.h)
                    .abs()
                    .max((shifted.dp - base.dp).abs())
                    .max((shifted.dq - base.dq).abs())
                    .max((shifted.dt - base.dt).abs());
                if d > 1e-12 * (1.0 + base.h.abs() + base.dq.abs() + base.dt.abs()) {
                    return Err(WkamError::ConfigInvalid {
                        path: "model".into(),
                        message: format!("not 1-periodic at (q={q}, p={p}, t={t}): defect {d}"),
                    });
                }
            }
        }
        self.superlinear_bound(lattice)?;
        Ok(())
    }
}

/// Two Hamiltonians `H_i = h_i(p + ∂qS) + ∂tS + g` sharing `(S, g)`.
#[derive(Clone, Debug, PartialEq)]
pub struct CommutingPair {
    pub h1: HamiltonianModel,
    pub h2: HamiltonianModel,
    pub field: GeneratingField,
    pub profiles: (ConvexProfile, ConvexProfile),
}

impl CommutingPair {
    /// Analytic critical values `α_{H_i}(0) = h_i(0) + ḡ`.
    pub fn analytic_alphas(&self) -> (f64, f64) {
        let g = self.field.forcing_mean();
        (
            self.profiles.0.value(0.0) + g,
            self.profiles.1.value(0.0) + g,
        )
    }

    /// `(p²/2, p²/2 + p⁴/4)` with `S = 0.05 sin(2πq)cos(2πt)` and `g = cos(2πt)`.
    pub fn pair_d1() -> Self {
        make_conjugated_pair(
            ConvexProfile::quadratic(),
            ConvexProfile::quadratic_quartic(),
            GeneratingField::pair_d1(),
        )
        .expect("pair_d1 is a valid commuting pair")
    }
}

/// Builds a commuting pair by fiber translation with the exact form `dS`.
pub fn make_conjugated_pair(
    h1: ConvexProfile,
    h2: ConvexProfile,
    field: GeneratingField,
) -> Result<CommutingPair> {
    let h1 = ConvexProfile::new(h1.coeffs)?;
    let h2 = ConvexProfile::new(h2.coeffs)?;
    let m1 = HamiltonianModel::conjugated(h1.clone(), field.clone());
    let m2 = HamiltonianModel::conjugated(h2.clone(), field.clone());
    let lattice = SampleLattice::default();
    m1.check_tonelli(&lattice)?;
    m2.check_tonelli(&lattice)?;
    let defect = bracket_defect(&m1, &m2, &lattice);
    let scale = lattice
        .points()
        .map(|(q, p, t)| {
            let a = m1.eval(q, p, t);
            let b = m2.eval(q, p, t);
            (a.dp * b.dq).abs() + (a.dq * b.dp).abs() + a.dt.abs() + b.dt.abs()
        })
        .fold(1.0_f64, f64::max);
    if defect > 1e-10 * scale.max(1.0) {
        return Err(WkamError::ConfigInvalid {
            path: "pair".into(),
            message: format!("constructed pair has bracket defect {defect}"),
        });
    }
    Ok(CommutingPair {
        h1: m1,
        h2: m2,
        field,
        profiles: (h1, h2),
    })
}

/// `[H1, H2](q, p, [t]) = {H1, H2} + ∂tH1 − ∂tH2` with `{F, G} = ∂qF ∂pG − ∂pF ∂qG`.
pub fn bracket(h1: &HamiltonianModel, h2: &HamiltonianModel, q: f64, p: f64, t: f64) -> f64 {
    let a = h1.eval(q, p, t);
    let b = h2.eval(q, p, t);
    a.dq * b.dp - a.dp * b.dq + a.dt - b.dt
}

/// Max of `|[H1, H2]|` over the lattice.
pub fn bracket_defect(
    h1: &HamiltonianModel,
    h2: &HamiltonianModel,
    lattice: &SampleLattice,
) -> f64 {
    lattice
        .points()
        .map(|(q, p, t)| bracket(h1, h2, q, p, t).abs())
        .fold(0.0, f64::max)
}

/// Model block of a scenario configuration.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub family: String,
    #[serde(default)]
    pub params: ModelParams,
    #[serde(default)]
    pub fourier: FourierBlock,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub amplitude: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub profile: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub member: Option<u8>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct FourierBlock {
    #[serde(default)]
    pub potential: DoubleFourier,
    #[serde(default)]
    pub generating: DoubleFourier,
    #[serde(default)]
    pub forcing: FourierSeries,
}

impl ModelSpec {
    pub fn named(family: &str) -> Self {
        Self {
            family: family.to_string(),
            params: ModelParams::default(),
            fourier: FourierBlock::default(),
        }
    }

    pub fn build(&self) -> Result<HamiltonianModel> {
        let invalid = |path: &str, message: String| WkamError::ConfigInvalid {
            path: path.into(),
            message,
        };
        let amplitude = || {
            self.params
                .amplitude
                .ok_or_else(|| invalid("params.amplitude", "missing for this family".into()))
        };
        let profile = || match &self.params.profile {
            Some(c) => ConvexProfile::new(c.clone()),
            None => Ok(ConvexProfile::quadratic()),
        };
        let field = GeneratingField {
            generating: self.fourier.generating.clone(),
            forcing: self.fourier.forcing.clone(),
        };
        let model = match self.family.as_str() {
            "free" => HamiltonianModel::free(),
            "pendulum" => HamiltonianModel::pendulum(amplitude()?),
            "forced_pendulum" => {
                let eps = self.params.epsilon.ok_or_else(|| {
                    invalid("params.epsilon", "missing for forced_pendulum".into())
                })?;
                HamiltonianModel::forced_pendulum(amplitude()?, eps)
            }
            "conjugated" => HamiltonianModel::conjugated(profile()?, field),
            "custom" => HamiltonianModel::new(
                Family::Custom,
                profile()?,
                self.fourier.potential.clone(),
                field,
            ),
            "pair_d1" => {
                let pair = CommutingPair::pair_d1();
                match self.params.member.unwrap_or(1) {
                    1 => pair.h1,
                    2 => pair.h2,
                    m => {
                        return Err(invalid(
                            "params.member",
                            format!("expected 1 or 2, got {m}"),
                        ))
                    }
                }
            }
            other => return Err(invalid("family", format!("unknown family `{other}`"))),
        };
        model.check_tonelli(&SampleLattice::default())?;
        Ok(model)
    }
}
