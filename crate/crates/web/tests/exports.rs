use std::f64::consts::PI;

use wkam_web::{barrier_profile, build_model, critical_value, weak_kam_profile};

#[test]
fn pendulum_values() {
    assert!((critical_value("pendulum", 1.0, 0.0, 64, 8).unwrap() - 1.0).abs() < 1e-12);
    let u = weak_kam_profile("pendulum", 1.0, 0.0, 64, 8).unwrap();
    assert_eq!(u.len(), 64);
    assert_eq!(u[0], 0.0);
    let exact = 2.0 / PI * (1.0 - (PI * 0.25).cos());
    assert!((u[16] - exact).abs() < 0.05 * exact, "{}", u[16]);
    let b = barrier_profile("pendulum", 1.0, 0.0, 64, 8).unwrap();
    assert!(b[0].abs() < 1e-12);
    assert!((b[16] - 2.0 * exact).abs() < 0.05 * 2.0 * exact, "{}", b[16]);
}

#[test]
fn pair_members_have_zero_critical_value() {
    for family in ["pair_d1_1", "pair_d1_2"] {
        assert!(critical_value(family, 0.0, 0.0, 32, 8).unwrap().abs() < 5e-3);
    }
}

#[test]
fn rejects_bad_input() {
    assert!(build_model("pendulum_x", 1.0, 0.0).is_err());
    assert!(critical_value("pendulum", 1.0, 0.0, 512, 8).unwrap_err().contains("larger"));
    assert!(critical_value("pendulum", 1.0, 0.0, 4, 8).is_err());
}
