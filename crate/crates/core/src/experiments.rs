//! Scenario configuration, verification drivers and machine-readable reports.
//!
//! A scenario is one JSON document with the blocks `models`, `grids`,
//! `operator`, `verification` and `tolerances`. Every verification runs on the
//! grid list in order, records per-grid metrics, and turns them into pass/fail
//! criteria that carry the measured value, the threshold and the grid.

use std::fs;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::barriers::{
    barrier_field, default_threshold, symmetric_difference_is_boundary, BarrierConfig,
    BarrierEngine, ExtendedLift,
};
use crate::critical_value::{alpha_growth, alpha_karp_for};
use crate::error::{Result, WkamError};
use crate::flow::{
    aubry_invariance_check, commutation_defect, conservation_defect, flow_extended,
    write_trajectory_csv, ExtendedState, FlowConfig,
};
use crate::grid::{GridFunction, SpaceTimeFunction, TorusGrid};
use crate::hamiltonian::{bracket, bracket_defect, HamiltonianModel, ModelSpec, SampleLattice};
use crate::lax_oleinik::{Dynamics, OperatorConfig};
use crate::weak_kam::{
    backward_fixed_point, common_fixed_point, domination_residual, forward_fixed_point,
    period_residual, FixedPointConfig,
};

/// Verification verbs understood by [`run_scenario`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verb {
    PairCheck,
    Alpha,
    WeakKam,
    Barrier,
    Aubry,
    Theorem1,
    Theorem2,
    Theorem3,
    Theorem4,
    FlowCheck,
}

impl Verb {
    pub const ALL: [Verb; 10] = [
        Verb::PairCheck,
        Verb::Alpha,
        Verb::WeakKam,
        Verb::Barrier,
        Verb::Aubry,
        Verb::Theorem1,
        Verb::Theorem2,
        Verb::Theorem3,
        Verb::Theorem4,
        Verb::FlowCheck,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Verb::PairCheck => "pair-check",
            Verb::Alpha => "alpha",
            Verb::WeakKam => "weak-kam",
            Verb::Barrier => "barrier",
            Verb::Aubry => "aubry",
            Verb::Theorem1 => "theorem1",
            Verb::Theorem2 => "theorem2",
            Verb::Theorem3 => "theorem3",
            Verb::Theorem4 => "theorem4",
            Verb::FlowCheck => "flow-check",
        }
    }

    pub fn parse(s: &str) -> Option<Verb> {
        Verb::ALL.into_iter().find(|v| v.name() == s)
    }
}

/// The models under test and an optional control pair that should fail the check.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelsBlock {
    pub primary: Vec<ModelSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub control: Option<Vec<ModelSpec>>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub n_q: usize,
    pub n_t: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerificationBlock {
    pub kind: Verb,
    /// Evaluation times `(t0, t1, t2, t3)` for the semigroup check.
    #[serde(default = "default_times")]
    pub times: [f64; 4],
    /// Number of random Fourier probes besides the zero function.
    #[serde(default = "default_probes")]
    pub probes: usize,
    #[serde(default)]
    pub fixed_point: FixedPointConfig,
    #[serde(default)]
    pub barrier: BarrierConfig,
    #[serde(default)]
    pub flow: FlowConfig,
    /// Aubry threshold constant `c` in `ε = c·Δq²/Δt`.
    #[serde(default = "default_threshold_constant")]
    pub threshold_constant: f64,
    /// Flow times for the invariance check.
    #[serde(default = "default_flow_times")]
    pub flow_times: Vec<f64>,
    /// Optional known critical values, one per primary model.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub expected_alpha: Option<Vec<f64>>,
}

fn default_times() -> [f64; 4] {
    [0.0, 1.0, 1.0, 2.0]
}

fn default_probes() -> usize {
    5
}

fn default_threshold_constant() -> f64 {
    1.5
}

fn default_flow_times() -> Vec<f64> {
    vec![0.5, 1.0, 2.0]
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tolerances {
    /// `C` in the grid tolerance `C·(Δq + Δt)`.
    #[serde(default = "default_grid_constant")]
    pub grid_constant: f64,
    /// Smallest accepted ratio between successive grids.
    #[serde(default = "default_ratio")]
    pub ratio: f64,
    /// Values below this floor count as converged regardless of the ratio.
    #[serde(default = "default_floor")]
    pub floor: f64,
    /// Largest ratio a non-commuting control may show.
    #[serde(default = "default_control_ratio")]
    pub control_ratio: f64,
    /// Required factor between control and primary defects.
    #[serde(default = "default_control_factor")]
    pub control_factor: f64,
    /// Karp versus growth agreement.
    #[serde(default = "default_alpha_agreement")]
    pub alpha_agreement: f64,
    /// Bracket defect accepted as zero.
    #[serde(default = "default_bracket")]
    pub bracket: f64,
    /// Flow commutation and conservation.
    #[serde(default = "default_flow")]
    pub flow: f64,
    /// Lower bound on the barrier gap of a control pair.
    #[serde(default = "default_barrier_gap")]
    pub barrier_gap: f64,
}

fn default_grid_constant() -> f64 {
    0.01
}
fn default_ratio() -> f64 {
    1.5
}
fn default_floor() -> f64 {
    1e-10
}
fn default_control_ratio() -> f64 {
    1.2
}
fn default_control_factor() -> f64 {
    10.0
}
fn default_alpha_agreement() -> f64 {
    1e-3
}
fn default_bracket() -> f64 {
    1e-10
}
fn default_flow() -> f64 {
    1e-8
}
fn default_barrier_gap() -> f64 {
    0.15
}

impl Default for Tolerances {
    fn default() -> Self {
        serde_json::from_str("{}").expect("all tolerance fields have defaults")
    }
}

impl Tolerances {
    /// `C·(Δq + Δt)`.
    pub fn grid(&self, grid: TorusGrid) -> f64 {
        self.grid_constant * (grid.dq() + grid.dt())
    }
}

/// A full scenario document.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub models: ModelsBlock,
    pub grids: Vec<GridSpec>,
    #[serde(default)]
    pub operator: OperatorConfig,
    pub verification: VerificationBlock,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub seed: u64,
}

fn invalid(path: &str, message: impl Into<String>) -> WkamError {
    WkamError::ConfigInvalid {
        path: path.into(),
        message: message.into(),
    }
}

impl Scenario {
    pub fn from_json(text: &str) -> Result<Self> {
        Self::from_json_as(text, None)
    }

    /// Parses and validates; `verb` replaces the document's verification kind first.
    pub fn from_json_as(text: &str, verb: Option<Verb>) -> Result<Self> {
        let mut scenario: Scenario =
            serde_json::from_str(text).map_err(|e| invalid(&json_error_path(&e), e.to_string()))?;
        if let Some(v) = verb {
            scenario.verification.kind = v;
        }
        scenario.validate()?;
        Ok(scenario)
    }

    pub fn load(path: &Path, verb: Option<Verb>) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| invalid("<file>", format!("{}: {e}", path.display())))?;
        Self::from_json_as(&text, verb)
    }

    /// Checks shapes and ranges that serde cannot express.
    pub fn validate(&self) -> Result<()> {
        let needed = match self.verification.kind {
            Verb::Alpha | Verb::WeakKam | Verb::Barrier | Verb::Aubry => 1,
            _ => 2,
        };
        if self.models.primary.len() < needed {
            return Err(invalid(
                "models.primary",
                format!(
                    "{} needs {needed} model(s), got {}",
                    self.verification.kind.name(),
                    self.models.primary.len()
                ),
            ));
        }
        if let Some(control) = &self.models.control {
            if control.len() != 2 {
                return Err(invalid(
                    "models.control",
                    format!("expected 2 models, got {}", control.len()),
                ));
            }
        }
        if self.grids.is_empty() {
            return Err(invalid("grids", "at least one grid is required"));
        }
        for (i, g) in self.grids.iter().enumerate() {
            TorusGrid::new(g.n_q, g.n_t)
                .map_err(|e| invalid(&format!("grids[{i}]"), e.to_string()))?;
        }
        for (i, w) in self.grids.windows(2).enumerate() {
            let grows = w[1].n_q >= w[0].n_q
                && w[1].n_t >= w[0].n_t
                && (w[1].n_q, w[1].n_t) != (w[0].n_q, w[0].n_t);
            if !grows {
                return Err(invalid(
                    &format!("grids[{}]", i + 1),
                    "grid list must be strictly increasing",
                ));
            }
        }
        self.operator
            .validate()
            .map_err(|e| invalid("operator", e.to_string()))?;
        let v = &self.verification;
        v.fixed_point
            .validate()
            .map_err(|e| invalid("verification.fixed_point", e.to_string()))?;
        v.barrier
            .validate()
            .map_err(|e| invalid("verification.barrier", e.to_string()))?;
        v.flow
            .validate()
            .map_err(|e| invalid("verification.flow", e.to_string()))?;
        if !(v.threshold_constant > 0.0) {
            return Err(invalid(
                "verification.threshold_constant",
                "must be positive",
            ));
        }
        let [t0, t1, t2, t3] = v.times;
        if !(t0 <= t1 && t1 <= t3 && t0 <= t2 && t2 <= t3) || ((t3 - t1) - (t2 - t0)).abs() > 1e-12
        {
            return Err(invalid(
                "verification.times",
                "need t0 ≤ t1, t2 ≤ t3 and t3 − t1 = t2 − t0",
            ));
        }
        if let Some(expected) = &v.expected_alpha {
            if expected.len() != self.models.primary.len() {
                return Err(invalid(
                    "verification.expected_alpha",
                    "one value per primary model",
                ));
            }
        }
        let t = &self.tolerances;
        for (name, value) in [
            ("grid_constant", t.grid_constant),
            ("ratio", t.ratio),
            ("floor", t.floor),
            ("control_ratio", t.control_ratio),
            ("control_factor", t.control_factor),
            ("alpha_agreement", t.alpha_agreement),
            ("bracket", t.bracket),
            ("flow", t.flow),
            ("barrier_gap", t.barrier_gap),
        ] {
            if !(value > 0.0 && value.is_finite()) {
                return Err(invalid(
                    &format!("tolerances.{name}"),
                    "must be positive and finite",
                ));
            }
        }
        for (i, spec) in self.models.primary.iter().enumerate() {
            spec.build()
                .map_err(|e| prefix_model_error(e, &format!("models.primary[{i}]")))?;
        }
        for (i, spec) in self.models.control.iter().flatten().enumerate() {
            spec.build()
                .map_err(|e| prefix_model_error(e, &format!("models.control[{i}]")))?;
        }
        Ok(())
    }

    pub fn torus_grids(&self) -> Vec<TorusGrid> {
        self.grids
            .iter()
            .map(|g| TorusGrid::new(g.n_q, g.n_t).expect("validated"))
            .collect()
    }

    /// SHA-256 of the canonical JSON form.
    pub fn hash(&self) -> String {
        let canonical = serde_json::to_vec(self).expect("scenario serializes");
        let digest = Sha256::digest(&canonical);
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }
}

fn prefix_model_error(e: WkamError, prefix: &str) -> WkamError {
    match e {
        WkamError::ConfigInvalid { path, message } => invalid(&format!("{prefix}.{path}"), message),
        other => invalid(prefix, other.to_string()),
    }
}

/// Best-effort key path from a serde error message (`missing field `x``, `unknown field `x``).
fn json_error_path(e: &serde_json::Error) -> String {
    let msg = e.to_string();
    msg.split('`')
        .nth(1)
        .map(str::to_string)
        .unwrap_or_else(|| "<root>".into())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Comparison {
    /// Passes when `measured ≤ threshold`.
    AtMost,
    /// Passes when `measured ≥ threshold`.
    AtLeast,
}

/// One pass/fail line.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Criterion {
    pub name: String,
    pub passed: bool,
    pub measured: Option<f64>,
    pub threshold: f64,
    pub comparison: Comparison,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub grid: Option<GridSpec>,
}

impl Criterion {
    /// `PASS name: measured <= threshold @ 64x8`.
    pub fn line(&self) -> String {
        let op = match self.comparison {
            Comparison::AtMost => "<=",
            Comparison::AtLeast => ">=",
        };
        let measured = self
            .measured
            .map_or("undefined".to_string(), |m| format!("{m:.6e}"));
        let grid = self
            .grid
            .map_or(String::new(), |g| format!(" @ {}x{}", g.n_q, g.n_t));
        let tag = if self.passed { "PASS" } else { "FAIL" };
        format!(
            "{tag} {}: {measured} {op} {:.6e}{grid}",
            self.name, self.threshold
        )
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridMetrics {
    pub grid: GridSpec,
    pub metrics: std::collections::BTreeMap<String, f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub config_hash: String,
    pub version: String,
    pub seed: u64,
    pub threads: usize,
}

/// Machine-readable outcome of one scenario.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub verification: Verb,
    pub passed: bool,
    pub criteria: Vec<Criterion>,
    pub grids: Vec<GridMetrics>,
    /// Coarse-to-fine ratios per refined metric; `None` where the finer value is zero.
    pub ratios: std::collections::BTreeMap<String, Vec<Option<f64>>>,
    pub artifacts: Vec<String>,
    /// Tolerances in force, including the grid constant `C`.
    pub tolerances: Tolerances,
    pub provenance: Provenance,
}

impl Report {
    pub fn new(scenario: &Scenario, seed: u64, threads: usize) -> Self {
        Self {
            verification: scenario.verification.kind,
            passed: true,
            criteria: Vec::new(),
            grids: scenario
                .grids
                .iter()
                .map(|&grid| GridMetrics {
                    grid,
                    metrics: Default::default(),
                })
                .collect(),
            ratios: Default::default(),
            artifacts: Vec::new(),
            tolerances: scenario.tolerances,
            provenance: Provenance {
                config_hash: scenario.hash(),
                version: env!("CARGO_PKG_VERSION").to_string(),
                seed,
                threads,
            },
        }
    }

    pub fn record(&mut self, grid: TorusGrid, name: &str, value: f64) {
        if let Some(g) = self
            .grids
            .iter_mut()
            .find(|g| g.grid.n_q == grid.n_q && g.grid.n_t == grid.n_t)
        {
            g.metrics.insert(name.to_string(), value);
        }
    }

    pub fn metric(&self, index: usize, name: &str) -> Option<f64> {
        self.grids.get(index)?.metrics.get(name).copied()
    }

    fn push(
        &mut self,
        name: &str,
        measured: Option<f64>,
        threshold: f64,
        comparison: Comparison,
        grid: Option<TorusGrid>,
    ) -> bool {
        let passed = match (measured, comparison) {
            (Some(m), Comparison::AtMost) => m <= threshold,
            (Some(m), Comparison::AtLeast) => m >= threshold,
            (None, _) => false,
        };
        self.passed &= passed;
        self.criteria.push(Criterion {
            name: name.to_string(),
            passed,
            measured,
            threshold,
            comparison,
            grid: grid.map(|g| GridSpec {
                n_q: g.n_q,
                n_t: g.n_t,
            }),
        });
        passed
    }

    pub fn at_most(
        &mut self,
        name: &str,
        measured: f64,
        threshold: f64,
        grid: Option<TorusGrid>,
    ) -> bool {
        self.push(
            name,
            Some(measured).filter(|m| !m.is_nan()),
            threshold,
            Comparison::AtMost,
            grid,
        )
    }

    pub fn at_least(
        &mut self,
        name: &str,
        measured: f64,
        threshold: f64,
        grid: Option<TorusGrid>,
    ) -> bool {
        self.push(
            name,
            Some(measured).filter(|m| !m.is_nan()),
            threshold,
            Comparison::AtLeast,
            grid,
        )
    }

    /// Stores coarse/fine ratios of `values` (one per grid) under `name`.
    pub fn store_ratios(&mut self, name: &str, values: &[f64]) -> Vec<Option<f64>> {
        let ratios: Vec<Option<f64>> = values
            .windows(2)
            .map(|w| if w[1] > 0.0 { Some(w[0] / w[1]) } else { None })
            .collect();
        self.ratios.insert(name.to_string(), ratios.clone());
        ratios
    }

    /// Convergence criterion per refinement step: ratio `≥ tol.ratio`, or the finer value below `tol.floor`.
    pub fn converges(&mut self, name: &str, values: &[f64], grids: &[TorusGrid], tol: &Tolerances) {
        let ratios = self.store_ratios(name, values);
        for (i, r) in ratios.iter().enumerate() {
            let fine = values[i + 1];
            let label = format!("{name} refinement ratio");
            if fine <= tol.floor {
                self.at_most(
                    &format!("{name} below floor"),
                    fine,
                    tol.floor,
                    Some(grids[i + 1]),
                );
            } else {
                self.push(
                    &label,
                    *r,
                    tol.ratio,
                    Comparison::AtLeast,
                    Some(grids[i + 1]),
                );
            }
        }
    }

    pub fn summary_lines(&self) -> Vec<String> {
        self.criteria.iter().map(Criterion::line).collect()
    }

    pub fn exit_code(&self) -> i32 {
        if self.passed {
            0
        } else {
            1
        }
    }
}

/// Process exit code for an error: 2 for configuration problems, 3 for solver failures.
pub fn exit_code_for(e: &WkamError) -> i32 {
    match e {
        WkamError::ConfigInvalid { .. }
        | WkamError::InvalidConfig(_)
        | WkamError::InvalidGrid(_)
        | WkamError::InvalidFlow(_)
        | WkamError::ProfileNotConvex { .. }
        | WkamError::ProfileNotSuperlinear { .. }
        | WkamError::Json(_) => 2,
        _ => 3,
    }
}

/// Fourier coefficients `(a_k, b_k)`, `k = 1..=4`, of one probe.
pub type ProbeCoefficients = [(f64, f64); 4];

/// `count` probes with coefficients uniform in `[−1, 1]`, reproducible from `seed`.
pub fn probe_coefficients(seed: u64, count: usize) -> Vec<ProbeCoefficients> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| std::array::from_fn(|_| (rng.gen_range(-1.0..=1.0), rng.gen_range(-1.0..=1.0))))
        .collect()
}

/// `u(q) = Σ a_k cos 2πkq + b_k sin 2πkq` sampled on `slice`.
pub fn sample_probe(c: &ProbeCoefficients, grid: TorusGrid, slice: usize) -> GridFunction {
    let tau = std::f64::consts::TAU;
    let values = (0..grid.n_q)
        .map(|j| {
            let q = grid.q(j);
            c.iter()
                .enumerate()
                .map(|(k, (a, b))| {
                    let w = tau * (k + 1) as f64 * q;
                    a * w.cos() + b * w.sin()
                })
                .sum()
        })
        .collect();
    GridFunction::new(grid, slice, values).expect("probe has n_q values")
}

/// Zero function followed by the seeded probes.
pub fn probes(coeffs: &[ProbeCoefficients], grid: TorusGrid, slice: usize) -> Vec<GridFunction> {
    let mut out = vec![GridFunction::constant(grid, slice, 0.0)];
    out.extend(coeffs.iter().map(|c| sample_probe(c, grid, slice)));
    out
}

/// Optional output directory that remembers what it wrote.
struct Artifacts {
    dir: Option<PathBuf>,
    written: Vec<String>,
}

impl Artifacts {
    fn new(dir: Option<&Path>) -> Result<Self> {
        if let Some(d) = dir {
            fs::create_dir_all(d)?;
        }
        Ok(Self {
            dir: dir.map(Path::to_path_buf),
            written: Vec::new(),
        })
    }

    fn write(&mut self, name: &str, body: impl FnOnce(fs::File) -> Result<()>) -> Result<()> {
        if let Some(d) = &self.dir {
            body(fs::File::create(d.join(name))?)?;
            self.written.push(name.to_string());
        }
        Ok(())
    }
}

fn grid_tag(grid: TorusGrid) -> String {
    format!("{}x{}", grid.n_q, grid.n_t)
}

fn raw_dynamics(
    model: &HamiltonianModel,
    grid: TorusGrid,
    op: &OperatorConfig,
) -> Result<Dynamics> {
    Dynamics::new(model, grid, op.with_alpha(0.0))
}

/// Critical value of `model` on `grid` and the normalized dynamics.
fn normalized(
    model: &HamiltonianModel,
    grid: TorusGrid,
    op: &OperatorConfig,
) -> Result<(Dynamics, f64)> {
    let raw = raw_dynamics(model, grid, op)?;
    let alpha = match op.scheme {
        crate::lax_oleinik::Scheme::Nodal => alpha_karp_for(&raw)?.value,
        _ => alpha_growth(&raw, 300, 100, 1e-8)?.value,
    };
    Ok((raw.with_alpha(alpha), alpha))
}

fn build_models(specs: &[ModelSpec]) -> Result<Vec<HamiltonianModel>> {
    specs.iter().map(ModelSpec::build).collect()
}

/// Point where the pendulum/forced-pendulum bracket equals `π` in absolute value.
pub const CONTROL_WITNESS: (f64, f64, f64) = (0.0, 0.0, 0.25);

struct Context<'a> {
    scenario: &'a Scenario,
    grids: Vec<TorusGrid>,
    primary: Vec<HamiltonianModel>,
    control: Option<Vec<HamiltonianModel>>,
    seed: u64,
    report: Report,
    out: Artifacts,
}

impl Context<'_> {
    fn tol(&self) -> Tolerances {
        self.scenario.tolerances
    }

    fn op(&self) -> OperatorConfig {
        self.scenario.operator
    }

    fn threshold(&self, grid: TorusGrid) -> f64 {
        default_threshold(grid, self.scenario.verification.threshold_constant)
    }
}

fn verify_pair(cx: &mut Context) -> Result<()> {
    let lattice = SampleLattice::default();
    let defect = bracket_defect(&cx.primary[0], &cx.primary[1], &lattice);
    let tol = cx.tol();
    cx.report
        .at_most("bracket defect", defect, tol.bracket, None);
    if let Some(control) = &cx.control {
        let (q, p, t) = CONTROL_WITNESS;
        let witness = bracket(&control[0], &control[1], q, p, t).abs();
        cx.report
            .at_least("control bracket at witness", witness, 1.0, None);
        let worst = bracket_defect(&control[0], &control[1], &lattice);
        cx.report
            .at_least("control bracket defect", worst, 1.0, None);
    }
    Ok(())
}

fn verify_alpha(cx: &mut Context) -> Result<()> {
    let tol = cx.tol();
    let mut rows = Vec::new();
    for &grid in &cx.grids.clone() {
        for (i, model) in cx.primary.clone().iter().enumerate() {
            let raw = raw_dynamics(model, grid, &cx.op())?;
            let karp = alpha_karp_for(&raw)?.value;
            let growth = alpha_growth(&raw, 200, 50, 1e-9)?.value;
            cx.report.record(grid, &format!("alpha_karp[{i}]"), karp);
            cx.report
                .record(grid, &format!("alpha_growth[{i}]"), growth);
            cx.report.at_most(
                &format!("karp vs growth [{i}]"),
                (karp - growth).abs(),
                tol.alpha_agreement,
                Some(grid),
            );
            if let Some(expected) = &cx.scenario.verification.expected_alpha {
                cx.report.at_most(
                    &format!("alpha vs expected [{i}]"),
                    (karp - expected[i]).abs(),
                    tol.grid(grid),
                    Some(grid),
                );
            }
            rows.push((i, grid, karp, growth));
        }
    }
    cx.out.write("alpha.csv", |f| {
        let mut w = csv::Writer::from_writer(f);
        w.write_record(["model", "n_q", "n_t", "karp", "growth"])?;
        for (i, g, k, gr) in &rows {
            w.write_record([
                i.to_string(),
                g.n_q.to_string(),
                g.n_t.to_string(),
                crate::grid::fmt17(*k),
                crate::grid::fmt17(*gr),
            ])?;
        }
        w.flush()?;
        Ok(())
    })
}

fn zero(grid: TorusGrid) -> GridFunction {
    GridFunction::constant(grid, 0, 0.0)
}

fn verify_weak_kam(cx: &mut Context) -> Result<()> {
    let fp = cx.scenario.verification.fixed_point;
    for &grid in &cx.grids.clone() {
        for (i, model) in cx.primary.clone().iter().enumerate() {
            let (dynamics, alpha) = normalized(model, grid, &cx.op())?;
            let back = backward_fixed_point(&dynamics, &zero(grid), &fp)?;
            let fwd = forward_fixed_point(&dynamics, &zero(grid), &fp)?;
            let domination = domination_residual(&dynamics, &back.phi)?;
            cx.report.record(grid, &format!("alpha[{i}]"), alpha);
            cx.report
                .record(grid, &format!("backward_residual[{i}]"), back.residual);
            cx.report
                .record(grid, &format!("forward_residual[{i}]"), fwd.residual);
            cx.report
                .record(grid, &format!("domination[{i}]"), domination);
            cx.report
                .record(grid, &format!("iterations[{i}]"), back.iterations as f64);
            cx.report.at_most(
                &format!("backward fixed point [{i}]"),
                back.residual,
                fp.tol,
                Some(grid),
            );
            cx.report.at_most(
                &format!("forward fixed point [{i}]"),
                fwd.residual,
                fp.tol,
                Some(grid),
            );
            cx.report
                .at_most(&format!("domination [{i}]"), domination, fp.tol, Some(grid));
            let tag = grid_tag(grid);
            cx.out.write(&format!("phi_backward_{i}_{tag}.csv"), |f| {
                back.phi.write_csv(f)
            })?;
            cx.out.write(&format!("phi_forward_{i}_{tag}.csv"), |f| {
                fwd.phi.write_csv(f)
            })?;
        }
    }
    Ok(())
}

fn verify_barrier(cx: &mut Context) -> Result<()> {
    let cfg = cx.scenario.verification.barrier;
    let tol = cx.tol();
    for &grid in &cx.grids.clone() {
        for (i, model) in cx.primary.clone().iter().enumerate() {
            let (dynamics, _) = normalized(model, grid, &cx.op())?;
            let engine = BarrierEngine::new(&dynamics, cfg)?;
            let threshold = cx.threshold(grid);
            let (field, mask, quotient) = barrier_field(&engine, threshold)?;
            let b_on_mask = mask
                .nodes()
                .iter()
                .map(|&(k, j)| field.second.get(k, j))
                .fold(f64::NEG_INFINITY, f64::max);
            let diameter = quotient.diameters.iter().copied().fold(0.0, f64::max);
            cx.report
                .record(grid, &format!("window_change[{i}]"), engine.window_change);
            cx.report
                .record(grid, &format!("barrier_min[{i}]"), field.first.min());
            cx.report
                .record(grid, &format!("barrier_max[{i}]"), field.first.max());
            cx.report
                .record(grid, &format!("mask_count[{i}]"), mask.count() as f64);
            cx.report.record(
                grid,
                &format!("classes[{i}]"),
                quotient.class_count() as f64,
            );
            cx.report
                .record(grid, &format!("max_diameter[{i}]"), diameter);
            cx.report.at_most(
                &format!("window settled [{i}]"),
                engine.window_change,
                cfg.settle_tol,
                Some(grid),
            );
            cx.report.at_least(
                &format!("barrier nonnegative [{i}]"),
                field.first.min(),
                -tol.grid(grid),
                Some(grid),
            );
            cx.report.at_most(
                &format!("second barrier on mask [{i}]"),
                b_on_mask,
                threshold,
                Some(grid),
            );
            let tag = grid_tag(grid);
            cx.out.write(&format!("barrier_B_{i}_{tag}.csv"), |f| {
                field.first.write_csv(f)
            })?;
            cx.out.write(&format!("barrier_b_{i}_{tag}.csv"), |f| {
                field.second.write_csv(f)
            })?;
            cx.out
                .write(&format!("mask_{i}_{tag}.csv"), |f| mask.write_csv(f))?;
        }
    }
    Ok(())
}

/// Weak KAM solution, Aubry mask and extended lift of one model on one grid.
struct AubryData {
    alpha: f64,
    barrier: SpaceTimeFunction,
    mask: crate::barriers::AubryMask,
    classes: usize,
    lift: ExtendedLift,
}

fn aubry_data(cx: &Context, model: &HamiltonianModel, grid: TorusGrid) -> Result<AubryData> {
    let (dynamics, alpha) = normalized(model, grid, &cx.op())?;
    let engine = BarrierEngine::new(&dynamics, cx.scenario.verification.barrier)?;
    let (field, mask, quotient) = barrier_field(&engine, cx.threshold(grid))?;
    let solution = backward_fixed_point(
        &dynamics,
        &zero(grid),
        &cx.scenario.verification.fixed_point,
    )?;
    let lift = ExtendedLift::from_solution(&dynamics, &solution, &mask)?;
    Ok(AubryData {
        alpha,
        barrier: field.first,
        mask,
        classes: quotient.class_count(),
        lift,
    })
}

fn verify_aubry(cx: &mut Context) -> Result<()> {
    let tol = cx.tol();
    for &grid in &cx.grids.clone() {
        for (i, model) in cx.primary.clone().iter().enumerate() {
            let d = aubry_data(cx, model, grid)?;
            let energy = d.lift.energy_defect(model, d.alpha);
            let cal = d
                .mask
                .nodes()
                .iter()
                .map(|&(k, j)| d.barrier.get(k, j))
                .fold(0.0, f64::max);
            cx.report
                .record(grid, &format!("mask_count[{i}]"), d.mask.count() as f64);
            cx.report
                .record(grid, &format!("classes[{i}]"), d.classes as f64);
            cx.report.record(
                grid,
                &format!("lift_points[{i}]"),
                d.lift.points.len() as f64,
            );
            cx.report
                .record(grid, &format!("lift_energy_defect[{i}]"), energy);
            cx.report.at_least(
                &format!("mask nonempty [{i}]"),
                d.mask.count() as f64,
                1.0,
                Some(grid),
            );
            cx.report.at_most(
                &format!("barrier on mask [{i}]"),
                cal,
                cx.threshold(grid),
                Some(grid),
            );
            cx.report
                .at_most(&format!("lift energy [{i}]"), energy, tol.floor, Some(grid));
            let tag = grid_tag(grid);
            cx.out
                .write(&format!("mask_{i}_{tag}.csv"), |f| d.mask.write_csv(f))?;
            cx.out
                .write(&format!("lift_{i}_{tag}.csv"), |f| d.lift.write_csv(f))?;
        }
    }
    Ok(())
}

/// Slice counts for `times` on `grid`; times must be multiples of `Δt`.
fn time_slices(times: [f64; 4], grid: TorusGrid) -> Result<[usize; 4]> {
    let mut out = [0; 4];
    for (o, t) in out.iter_mut().zip(times) {
        let s = t * grid.n_t as f64;
        if (s - s.round()).abs() > 1e-9 || s < 0.0 {
            return Err(invalid(
                "verification.times",
                format!("{t} is not a multiple of Δt = 1/{}", grid.n_t),
            ));
        }
        *o = s.round() as usize;
    }
    Ok(out)
}

/// `max` over probes of the backward and forward two-order defects on one grid.
fn semigroup_defect(
    m1: &HamiltonianModel,
    m2: &HamiltonianModel,
    grid: TorusGrid,
    op: &OperatorConfig,
    times: [f64; 4],
    coeffs: &[ProbeCoefficients],
) -> Result<(f64, f64)> {
    let [s0, s1, s2, s3] = time_slices(times, grid)?;
    let d1 = raw_dynamics(m1, grid, op)?;
    let d2 = raw_dynamics(m2, grid, op)?;
    let (mut back, mut fwd) = (0.0_f64, 0.0_f64);
    for u in probes(coeffs, grid, s0 % grid.n_t) {
        let a = d1.backward_operator(&d2.backward_operator(&u, s1 - s0)?, s3 - s1)?;
        let b = d2.backward_operator(&d1.backward_operator(&u, s2 - s0)?, s3 - s2)?;
        back = back.max(a.sup_distance(&b)?);
    }
    for v in probes(coeffs, grid, s3 % grid.n_t) {
        let a = d2.forward_operator(&d1.forward_operator(&v, s3 - s1)?, s1 - s0)?;
        let b = d1.forward_operator(&d2.forward_operator(&v, s3 - s2)?, s2 - s0)?;
        fwd = fwd.max(a.sup_distance(&b)?);
    }
    Ok((back, fwd))
}

/// Control criteria shared by the refinement theorems: the defect does not shrink and stays well above the primary one.
fn control_separates(cx: &mut Context, name: &str, primary: &[f64], control: &[f64]) {
    let tol = cx.tol();
    let ratios = cx.report.store_ratios(&format!("control {name}"), control);
    for (i, r) in ratios.iter().enumerate() {
        cx.report.push(
            &format!("control {name} ratio"),
            *r,
            tol.control_ratio,
            Comparison::AtMost,
            Some(cx.grids[i + 1]),
        );
    }
    let last = cx.grids.len() - 1;
    let needed = tol.control_factor * primary[last].max(tol.floor);
    cx.report.at_least(
        &format!("control {name} separation"),
        control[last],
        needed,
        Some(cx.grids[last]),
    );
}

fn verify_theorem1(cx: &mut Context) -> Result<()> {
    let v = &cx.scenario.verification;
    let (times, tol, op) = (v.times, cx.tol(), cx.op());
    let coeffs = probe_coefficients(cx.seed, v.probes);
    let mut primary = Vec::new();
    let mut control = Vec::new();
    for &grid in &cx.grids.clone() {
        let (back, fwd) =
            semigroup_defect(&cx.primary[0], &cx.primary[1], grid, &op, times, &coeffs)?;
        let defect = back.max(fwd);
        cx.report.record(grid, "defect_backward", back);
        cx.report.record(grid, "defect_forward", fwd);
        cx.report.record(grid, "defect", defect);
        cx.report
            .at_most("two-order defect", defect, tol.grid(grid), Some(grid));
        primary.push(defect);
        if let Some(c) = cx.control.clone() {
            let (cb, cf) = semigroup_defect(&c[0], &c[1], grid, &op, times, &coeffs)?;
            cx.report.record(grid, "control_defect", cb.max(cf));
            control.push(cb.max(cf));
        }
    }
    cx.report
        .converges("two-order defect", &primary, &cx.grids, &tol);
    if !control.is_empty() {
        control_separates(cx, "two-order defect", &primary, &control);
    }
    Ok(())
}

/// Residual of the first model's weak KAM solutions under the second model's period maps.
fn cross_residual(
    m1: &HamiltonianModel,
    m2: &HamiltonianModel,
    grid: TorusGrid,
    cx: &Context,
) -> Result<(f64, f64)> {
    let fp = &cx.scenario.verification.fixed_point;
    let (d1, _) = normalized(m1, grid, &cx.op())?;
    let (d2, _) = normalized(m2, grid, &cx.op())?;
    let u = backward_fixed_point(&d1, &zero(grid), fp)?.slice0();
    let w = forward_fixed_point(&d1, &zero(grid), fp)?.slice0();
    let back = period_residual(&d2, &u)?;
    let fwd = d2.forward_period_map(&w)?.sup_distance(&w)?;
    Ok((back, fwd))
}

fn verify_theorem2(cx: &mut Context) -> Result<()> {
    let tol = cx.tol();
    let fp = cx.scenario.verification.fixed_point;
    let mut primary = Vec::new();
    let mut control = Vec::new();
    for &grid in &cx.grids.clone() {
        let (b12, f12) = cross_residual(&cx.primary[0], &cx.primary[1], grid, cx)?;
        let (b21, f21) = cross_residual(&cx.primary[1], &cx.primary[0], grid, cx)?;
        let residual = b12.max(f12).max(b21).max(f21);
        cx.report.record(grid, "cross_backward", b12.max(b21));
        cx.report.record(grid, "cross_forward", f12.max(f21));
        cx.report.record(grid, "cross_residual", residual);
        cx.report
            .at_most("cross residual", residual, tol.grid(grid), Some(grid));
        primary.push(residual);

        let (d1, _) = normalized(&cx.primary[0], grid, &cx.op())?;
        let (d2, _) = normalized(&cx.primary[1], grid, &cx.op())?;
        let common = common_fixed_point(&d1, &d2, &fp)?;
        let worst = common.residual_first.max(common.residual_second);
        cx.report.record(grid, "common_residual", worst);
        cx.report
            .at_most("common fixed point", worst, 10.0 * fp.tol, Some(grid));
        cx.out
            .write(&format!("common_{}.csv", grid_tag(grid)), |f| {
                common.u.write_csv(f)
            })?;

        if let Some(c) = cx.control.clone() {
            let (cb, cf) = cross_residual(&c[0], &c[1], grid, cx)?;
            cx.report.record(grid, "control_cross_residual", cb.max(cf));
            control.push(cb.max(cf));
        }
    }
    cx.report
        .converges("cross residual", &primary, &cx.grids, &tol);
    if !control.is_empty() {
        control_separates(cx, "cross residual", &primary, &control);
    }
    Ok(())
}

struct BarrierData {
    first: SpaceTimeFunction,
    second: SpaceTimeFunction,
    classes: usize,
    rho: Vec<Vec<f64>>,
}

fn barrier_data(cx: &Context, model: &HamiltonianModel, grid: TorusGrid) -> Result<BarrierData> {
    let (dynamics, _) = normalized(model, grid, &cx.op())?;
    let engine = BarrierEngine::new(&dynamics, cx.scenario.verification.barrier)?;
    let (field, _, quotient) = barrier_field(&engine, cx.threshold(grid))?;
    Ok(BarrierData {
        first: field.first,
        second: field.second,
        classes: quotient.class_count(),
        rho: quotient.rho,
    })
}

fn verify_theorem3(cx: &mut Context) -> Result<()> {
    let tol = cx.tol();
    let (mut gaps_b1, mut gaps_b2) = (Vec::new(), Vec::new());
    for &grid in &cx.grids.clone() {
        let a = barrier_data(cx, &cx.primary[0], grid)?;
        let b = barrier_data(cx, &cx.primary[1], grid)?;
        let gap1 = a.first.sup_distance(&b.first)?;
        let gap2 = a.second.sup_distance(&b.second)?;
        let class_gap = (a.classes as f64 - b.classes as f64).abs();
        let rho_gap = if class_gap == 0.0 {
            a.rho
                .iter()
                .flatten()
                .zip(b.rho.iter().flatten())
                .map(|(x, y)| (x - y).abs())
                .fold(0.0, f64::max)
        } else {
            f64::INFINITY
        };
        cx.report.record(grid, "barrier_gap", gap1);
        cx.report.record(grid, "second_barrier_gap", gap2);
        cx.report.record(grid, "classes", a.classes as f64);
        cx.report.record(grid, "rho_gap", rho_gap);
        cx.report
            .at_most("barrier gap", gap1, tol.grid(grid), Some(grid));
        cx.report
            .at_most("second barrier gap", gap2, tol.grid(grid), Some(grid));
        cx.report
            .at_most("class count difference", class_gap, 0.0, Some(grid));
        cx.report.at_most(
            "quotient metric gap",
            rho_gap,
            2.0 * cx.threshold(grid),
            Some(grid),
        );
        let tag = grid_tag(grid);
        cx.out
            .write(&format!("barrier_B_0_{tag}.csv"), |f| a.first.write_csv(f))?;
        cx.out
            .write(&format!("barrier_B_1_{tag}.csv"), |f| b.first.write_csv(f))?;
        gaps_b1.push(gap1);
        gaps_b2.push(gap2);

        if let Some(c) = cx.control.clone() {
            let ca = barrier_data(cx, &c[0], grid)?;
            let cb = barrier_data(cx, &c[1], grid)?;
            let gap = ca.first.sup_distance(&cb.first)?;
            cx.report.record(grid, "control_barrier_gap", gap);
            cx.report
                .at_least("control barrier gap", gap, tol.barrier_gap, Some(grid));
        }
    }
    cx.report
        .converges("barrier gap", &gaps_b1, &cx.grids, &tol);
    cx.report
        .converges("second barrier gap", &gaps_b2, &cx.grids, &tol);
    Ok(())
}

fn verify_theorem4(cx: &mut Context) -> Result<()> {
    let tol = cx.tol();
    for &grid in &cx.grids.clone() {
        let a = aubry_data(cx, &cx.primary[0], grid)?;
        let b = aubry_data(cx, &cx.primary[1], grid)?;
        let (count, ok) = symmetric_difference_is_boundary(&a.mask, &b.mask);
        let hausdorff = a.lift.hausdorff(&b.lift);
        let defect = a.lift.energy_defect(&cx.primary[1], b.alpha);
        cx.report
            .record(grid, "mask_symmetric_difference", count as f64);
        cx.report.record(grid, "lift_hausdorff", hausdorff);
        cx.report.record(grid, "partner_energy_defect", defect);
        cx.report.at_most(
            "mask difference off boundary",
            if ok { 0.0 } else { count as f64 },
            0.0,
            Some(grid),
        );
        cx.report.at_most(
            "lift Hausdorff distance",
            hausdorff,
            2.0 * (grid.dq() + grid.dt()),
            Some(grid),
        );
        cx.report
            .at_most("partner energy on lift", defect, tol.grid(grid), Some(grid));
        let tag = grid_tag(grid);
        cx.out
            .write(&format!("mask_0_{tag}.csv"), |f| a.mask.write_csv(f))?;
        cx.out
            .write(&format!("mask_1_{tag}.csv"), |f| b.mask.write_csv(f))?;
        cx.out
            .write(&format!("lift_0_{tag}.csv"), |f| a.lift.write_csv(f))?;
        cx.out
            .write(&format!("lift_1_{tag}.csv"), |f| b.lift.write_csv(f))?;

        if let Some(c) = cx.control.clone() {
            let ca = aubry_data(cx, &c[0], grid)?;
            let cb = aubry_data(cx, &c[1], grid)?;
            let (count, ok) = symmetric_difference_is_boundary(&ca.mask, &cb.mask);
            cx.report
                .record(grid, "control_mask_symmetric_difference", count as f64);
            // Different potentials can share an Aubry set; this control is not expected to separate.
            cx.report.at_most(
                "control masks coincide",
                if ok { 0.0 } else { count as f64 },
                0.0,
                Some(grid),
            );
        }
    }
    Ok(())
}

/// Seeded starting points: `q, t` uniform on the circle, `p ∈ [−1, 1]`, `κ = 0`.
pub fn flow_points(seed: u64, count: usize) -> Vec<ExtendedState> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9e37_79b9_7f4a_7c15);
    (0..count)
        .map(|_| {
            ExtendedState::new(
                rng.gen_range(0.0..1.0),
                rng.gen_range(-1.0..=1.0),
                rng.gen_range(0.0..1.0),
                0.0,
            )
        })
        .collect()
}

/// Largest product-metric distance between the runs at steps `h` and `h/2` over shared sample times.
pub fn halving_error(
    model: &HamiltonianModel,
    x0: ExtendedState,
    span: f64,
    h: f64,
) -> Result<f64> {
    let coarse = flow_extended(
        model,
        x0,
        span,
        &FlowConfig {
            step: h,
            max_span: span.abs(),
        },
    )?;
    let fine = flow_extended(
        model,
        x0,
        span,
        &FlowConfig {
            step: h / 2.0,
            max_span: span.abs(),
        },
    )?;
    Ok(coarse
        .iter()
        .enumerate()
        .map(|(i, x)| x.state.distance(&fine[2 * i].state))
        .fold(0.0, f64::max))
}

fn verify_flow(cx: &mut Context) -> Result<()> {
    let tol = cx.tol();
    let cfg = cx.scenario.verification.flow;
    let (h1, h2) = (cx.primary[0].clone(), cx.primary[1].clone());
    let points = flow_points(cx.seed, 4);
    let (mut commute, mut conserve) = (0.0_f64, 0.0_f64);
    for &x in &points {
        commute = commute.max(commutation_defect(&h1, &h2, x, 0.5, 0.5, &cfg)?);
        conserve = conserve.max(conservation_defect(&h1, &h2, x, 2.0, &cfg)?);
        conserve = conserve.max(conservation_defect(&h2, &h1, x, 2.0, &cfg)?);
    }
    cx.report.at_most(
        "bracket defect",
        bracket_defect(&h1, &h2, &SampleLattice::default()),
        tol.bracket,
        None,
    );
    cx.report
        .at_most("flow commutation", commute, tol.flow, None);
    cx.report
        .at_most("partner energy conservation", conserve, tol.flow, None);

    let ratio =
        halving_error(&h1, points[0], 1.0, 0.0125)? / halving_error(&h1, points[0], 1.0, 0.00625)?;
    cx.report
        .at_least("integrator order ratio (low)", ratio, 12.0, None);
    cx.report
        .at_most("integrator order ratio (high)", ratio, 20.0, None);

    if let Some(c) = cx.control.clone() {
        let worst = points
            .iter()
            .map(|&x| commutation_defect(&c[0], &c[1], x, 0.5, 0.5, &cfg))
            .collect::<Result<Vec<_>>>()?
            .into_iter()
            .fold(0.0, f64::max);
        cx.report
            .at_least("control flow commutation", worst, 1e-2, None);
    }

    let grid = cx.grids[0];
    let d = aubry_data(cx, &h1, grid)?;
    let bound = 2.0 * (grid.dq() + grid.dt());
    for &s in &cx.scenario.verification.flow_times.clone() {
        let dist = aubry_invariance_check(&h2, &d.lift, s, &cfg)?;
        cx.report.record(grid, &format!("invariance[{s}]"), dist);
        cx.report
            .at_most(&format!("lift invariance s={s}"), dist, bound, Some(grid));
    }
    let trajectory = flow_extended(&h1, points[0], 1.0, &cfg)?;
    cx.out
        .write("trajectory.csv", |f| write_trajectory_csv(&trajectory, f))?;
    Ok(())
}

/// Runs `scenario`, writing `report.json` and the verb's CSV files into `out` when given.
///
/// `seed` overrides the scenario seed; `threads` is recorded only, the solvers are sequential.
pub fn run_scenario(
    scenario: &Scenario,
    out: Option<&Path>,
    seed: Option<u64>,
    threads: usize,
) -> Result<Report> {
    scenario.validate()?;
    if threads == 0 {
        return Err(invalid("threads", "must be at least 1"));
    }
    let seed = seed.unwrap_or(scenario.seed);
    let mut cx = Context {
        scenario,
        grids: scenario.torus_grids(),
        primary: build_models(&scenario.models.primary)?,
        control: scenario
            .models
            .control
            .as_deref()
            .map(build_models)
            .transpose()?,
        seed,
        report: Report::new(scenario, seed, threads),
        out: Artifacts::new(out)?,
    };
    match scenario.verification.kind {
        Verb::PairCheck => verify_pair(&mut cx)?,
        Verb::Alpha => verify_alpha(&mut cx)?,
        Verb::WeakKam => verify_weak_kam(&mut cx)?,
        Verb::Barrier => verify_barrier(&mut cx)?,
        Verb::Aubry => verify_aubry(&mut cx)?,
        Verb::Theorem1 => verify_theorem1(&mut cx)?,
        Verb::Theorem2 => verify_theorem2(&mut cx)?,
        Verb::Theorem3 => verify_theorem3(&mut cx)?,
        Verb::Theorem4 => verify_theorem4(&mut cx)?,
        Verb::FlowCheck => verify_flow(&mut cx)?,
    }
    let mut report = cx.report;
    report.artifacts = cx.out.written;
    if let Some(dir) = out {
        report.artifacts.push("report.json".into());
        write_report(&report, &dir.join("report.json"))?;
    }
    Ok(report)
}

pub fn write_report(report: &Report, path: &Path) -> Result<()> {
    let mut text = serde_json::to_string_pretty(report)?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

/// Marker left in `out` when a run aborts, so partial CSV files are not mistaken for results.
pub fn write_failure(out: &Path, verb: &str, error: &WkamError) -> Result<()> {
    fs::create_dir_all(out)?;
    let body = serde_json::json!({
        "verification": verb,
        "status": "aborted",
        "partial": true,
        "error": error.to_string(),
        "exit_code": exit_code_for(error),
    });
    fs::write(
        out.join("report.json"),
        serde_json::to_string_pretty(&body)? + "\n",
    )?;
    Ok(())
}
