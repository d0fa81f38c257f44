use approx::assert_abs_diff_eq;
use proptest::prelude::*;
use std::f64::consts::PI;
use wkam_core::grid::{sample, GridFunction, TorusGrid};
use wkam_core::hamiltonian::{ConvexProfile, GeneratingField, HamiltonianModel};
use wkam_core::lax_oleinik::{minplus_compose, Dynamics, OperatorConfig, Scheme};
use wkam_core::WkamError;

fn nodal(model: &HamiltonianModel, nq: usize, nt: usize) -> Dynamics {
    Dynamics::new(
        model,
        TorusGrid::new(nq, nt).unwrap(),
        OperatorConfig::default(),
    )
    .unwrap()
}

fn interp(model: &HamiltonianModel, scheme: Scheme) -> Dynamics {
    let cfg = OperatorConfig {
        vmax: 2.0,
        n_v: 21,
        alpha_shift: 0.0,
        scheme,
    };
    Dynamics::new(model, TorusGrid::new(32, 8).unwrap(), cfg).unwrap()
}

/// Segment action from the Newton-based Legendre route, Simpson in time.
fn oracle_segment(model: &HamiltonianModel, q0: f64, v: f64, t0: f64, dt: f64) -> f64 {
    let l = |s: f64| model.legendre(q0 + v * s, v, t0 + s).unwrap().lagrangian;
    dt * (l(0.0) + 4.0 * l(0.5 * dt) + l(dt)) / 6.0
}

/// Minimum over every velocity sequence, by exhaustive enumeration.
fn brute_force_kernel(
    model: &HamiltonianModel,
    grid: TorusGrid,
    m_max: isize,
    steps: usize,
) -> Vec<Vec<f64>> {
    let n = grid.n_q;
    let dt = grid.dt();
    let step_v = grid.dq() / dt;
    let mut out = vec![vec![f64::INFINITY; n]; n];
    let width = (2 * m_max + 1) as usize;
    let total = width.pow(steps as u32);
    for i in 0..n {
        for code in 0..total {
            let mut c = code;
            let mut node = i as isize;
            let mut cost = 0.0;
            for k in 0..steps {
                let m = (c % width) as isize - m_max;
                c /= width;
                let v = m as f64 * step_v;
                cost += oracle_segment(model, node as f64 * grid.dq(), v, k as f64 * dt, dt);
                node += m;
            }
            let j = node.rem_euclid(n as isize) as usize;
            out[i][j] = out[i][j].min(cost);
        }
    }
    out
}

#[test]
fn kernel_matches_path_enumeration() {
    let grid = TorusGrid::new(8, 4).unwrap();
    let cfg = OperatorConfig {
        vmax: 1.0,
        ..OperatorConfig::default()
    };
    for model in [
        HamiltonianModel::forced_pendulum(0.7, 0.5),
        HamiltonianModel::conjugated(
            ConvexProfile::quadratic_quartic(),
            GeneratingField::pair_d1(),
        ),
    ] {
        let dynamics = Dynamics::new(&model, grid, cfg).unwrap();
        assert_eq!(dynamics.lattice().len(), 5);
        let kernel = dynamics.action_kernel(0, 4).unwrap();
        let oracle = brute_force_kernel(&model, grid, 2, 4);
        for i in 0..8 {
            for j in 0..8 {
                assert_abs_diff_eq!(kernel.get(i, j), oracle[i][j], epsilon = 1e-9);
            }
        }
    }
}

#[test]
fn free_kernel_example() {
    let dynamics = nodal(&HamiltonianModel::free(), 16, 8);
    let k = dynamics.action_kernel(0, 8).unwrap();
    assert_abs_diff_eq!(k.get(0, 8), 0.125, epsilon = 1e-12);
    assert_abs_diff_eq!(k.get(0, 0), 0.0, epsilon = 1e-12);
}

#[test]
fn pendulum_kernel_example() {
    let dynamics = nodal(&HamiltonianModel::pendulum(1.0), 64, 16);
    let k = dynamics.action_kernel(0, 16).unwrap();
    assert_abs_diff_eq!(k.get(0, 0), -1.0, epsilon = 1e-9);
}

#[test]
fn operator_agrees_with_kernel_and_is_markov() {
    let model = HamiltonianModel::forced_pendulum(0.5, 0.3);
    let dynamics = nodal(&model, 32, 8);
    let grid = dynamics.grid();
    let u = sample(
        |q, _| (2.0 * PI * q).sin() + 0.3 * (6.0 * PI * q).cos(),
        grid,
        2,
    );
    let k1 = dynamics.action_kernel(2, 3).unwrap();
    let k2 = dynamics.action_kernel(5, 7).unwrap();
    let k12 = minplus_compose(&k1, &k2).unwrap();
    let direct = dynamics.backward_operator(&u, 10).unwrap();
    let via_kernel = k12.apply(&u).unwrap();
    assert_eq!(direct.slice, via_kernel.slice);
    assert!(direct.sup_distance(&via_kernel).unwrap() < 1e-12);
    let two_stage = dynamics
        .backward_operator(&dynamics.backward_operator(&u, 3).unwrap(), 7)
        .unwrap();
    assert!(direct.sup_distance(&two_stage).unwrap() < 1e-12);
    let whole = dynamics.action_kernel(2, 10).unwrap();
    assert!(whole.matrix.max_abs_diff(&k12.matrix) < 1e-12);
}

#[test]
fn compose_rejects_slice_mismatch() {
    let dynamics = nodal(&HamiltonianModel::free(), 16, 4);
    let a = dynamics.action_kernel(0, 1).unwrap();
    let b = dynamics.action_kernel(2, 1).unwrap();
    assert!(matches!(
        minplus_compose(&a, &b),
        Err(WkamError::SliceMismatch { end: 1, start: 2 })
    ));
}

#[test]
fn forward_backward_duality_through_reversal() {
    let model = HamiltonianModel::conjugated(
        ConvexProfile::quadratic_quartic(),
        GeneratingField::pair_d1(),
    );
    let model = HamiltonianModel::new(
        wkam_core::hamiltonian::Family::Custom,
        model.profile().clone(),
        HamiltonianModel::forced_pendulum(0.4, 0.6)
            .potential()
            .clone(),
        model.field().clone(),
    );
    let (nq, nt) = (32, 8);
    let forward = nodal(&model, nq, nt);
    let backward = nodal(&model.reversed(), nq, nt);
    let grid = forward.grid();
    for steps in [1, 3, 8, 11] {
        let end = steps % nt;
        let u = sample(
            |q, _| (2.0 * PI * q).cos() - 0.2 * (4.0 * PI * q).sin(),
            grid,
            end,
        );
        let fwd = forward.forward_operator(&u, steps).unwrap();
        assert_eq!(fwd.slice, 0);
        let start = (nt - end) % nt;
        let neg = GridFunction {
            slice: start,
            ..u.negated()
        };
        let bwd = backward.backward_operator(&neg, steps).unwrap();
        assert_eq!(bwd.slice, 0);
        assert!(
            fwd.negated().sup_distance(&bwd).unwrap() < 1e-12,
            "steps {steps}"
        );
    }
}

#[test]
fn interpolating_schemes_refuse_kernels() {
    let d = interp(&HamiltonianModel::free(), Scheme::Linear);
    assert!(matches!(
        d.action_kernel(0, 1),
        Err(WkamError::InvalidConfig(_))
    ));
}

#[test]
fn config_validation() {
    let grid = TorusGrid::new(16, 4).unwrap();
    let bad = OperatorConfig {
        n_v: 4,
        scheme: Scheme::Linear,
        ..OperatorConfig::default()
    };
    assert!(Dynamics::new(&HamiltonianModel::free(), grid, bad).is_err());
    let bad = OperatorConfig {
        vmax: -1.0,
        ..OperatorConfig::default()
    };
    assert!(Dynamics::new(&HamiltonianModel::free(), grid, bad).is_err());
}

#[test]
fn alpha_shift_adds_linearly() {
    let model = HamiltonianModel::pendulum(0.5);
    let d0 = nodal(&model, 32, 8);
    let d1 = d0.with_alpha(0.5);
    let u = sample(|q, _| q.sin(), d0.grid(), 0);
    let a = d0.backward_operator(&u, 5).unwrap();
    let b = d1.backward_operator(&u, 5).unwrap();
    for (x, y) in a.values.iter().zip(&b.values) {
        assert_abs_diff_eq!(y - x, 0.5 * 5.0 / 8.0, epsilon = 1e-12);
    }
}

fn fourier(c: &[f64]) -> impl Fn(f64, f64) -> f64 + '_ {
    move |q, _| {
        c.iter()
            .enumerate()
            .map(|(k, a)| a * (2.0 * PI * (k as f64 + 1.0) * q + k as f64).sin())
            .sum()
    }
}

fn all_schemes() -> Vec<Dynamics> {
    let model = HamiltonianModel::forced_pendulum(0.6, 0.4);
    vec![
        nodal(&model, 32, 8),
        interp(&model, Scheme::Linear),
        interp(&model, Scheme::Cubic),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn contraction_and_equivariance(a in prop::collection::vec(-1.0f64..1.0, 4), b in prop::collection::vec(-1.0f64..1.0, 4), c in -5.0f64..5.0, steps in 1usize..10) {
        for (n, d) in all_schemes().into_iter().enumerate() {
            let grid = d.grid();
            let u = sample(fourier(&a), grid, 1);
            let w = sample(fourier(&b), grid, 1);
            let tu = d.backward_operator(&u, steps).unwrap();
            let tc = d.backward_operator(&u.shifted(c), steps).unwrap();
            prop_assert!(tc.sup_distance(&tu.shifted(c)).unwrap() < 1e-11);
            // Cubic interpolation overshoots, so only the first two schemes contract.
            if n == 2 {
                continue;
            }
            let tw = d.backward_operator(&w, steps).unwrap();
            prop_assert!(tu.sup_distance(&tw).unwrap() <= u.sup_distance(&w).unwrap() + 1e-12);
            let fu = d.forward_operator(&u, steps).unwrap();
            let fw = d.forward_operator(&w, steps).unwrap();
            prop_assert!(fu.sup_distance(&fw).unwrap() <= u.sup_distance(&w).unwrap() + 1e-12);
        }
    }

    #[test]
    fn order_preserving(a in prop::collection::vec(-1.0f64..1.0, 4), bump in prop::collection::vec(0.0f64..1.0, 32), steps in 1usize..10) {
        for d in all_schemes().into_iter().take(2) {
            let grid = d.grid();
            let u = sample(fourier(&a), grid, 3);
            let w = GridFunction { values: u.values.iter().zip(&bump).map(|(x, b)| x + b).collect(), ..u.clone() };
            let tu = d.backward_operator(&u, steps).unwrap();
            let tw = d.backward_operator(&w, steps).unwrap();
            prop_assert!(tu.values.iter().zip(&tw.values).all(|(x, y)| x <= &(y + 1e-12)));
            let fu = d.forward_operator(&u, steps).unwrap();
            let fw = d.forward_operator(&w, steps).unwrap();
            prop_assert!(fu.values.iter().zip(&fw.values).all(|(x, y)| x <= &(y + 1e-12)));
        }
    }
}
