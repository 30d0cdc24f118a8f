use std::f64::consts::PI;

use nalgebra::{Vector2, Vector4};
use proptest::prelude::*;

use densnav::config::{ScenarioConfig, BUNDLED};
use densnav::control::{arm_inverse_dynamics, saturate, ControlCommand};
use densnav::density::{wrap_angle, DistanceFn};
use densnav::ode::rk4_step;
use densnav::path::Path;
use densnav::robots::TwoLinkArm;
use densnav::sim::simulate;

proptest! {
    #[test]
    fn shifted_distance_is_bounded_below_by_kappa(
        tx in -10.0f64..10.0, ty in -10.0f64..10.0,
        px in -20.0f64..20.0, py in -20.0f64..20.0, kappa in 0.01f64..5.0,
    ) {
        let v = DistanceFn::quadratic(Vector2::new(tx, ty)).with_kappa(kappa);
        let e = v.eval(0.0, &Vector2::new(px, py));
        prop_assert!(e.value >= 0.0);
        prop_assert!(e.value + kappa >= kappa);
    }

    #[test]
    fn joint_cosine_vanishes_only_on_the_lattice(
        a in -PI..PI, b in -PI..PI, q1 in -10.0f64..10.0, q2 in -10.0f64..10.0,
        k1 in -3i32..3, k2 in -3i32..3,
    ) {
        let v = DistanceFn::joint_cosine(Path::fixed(Vector2::new(a, b)));
        let off = v.eval(0.0, &Vector2::new(q1, q2)).value;
        prop_assert!(off >= 0.0);
        let near = wrap_angle(q1 - a).abs().max(wrap_angle(q2 - b).abs());
        if near > 1e-3 {
            prop_assert!(off > 0.0);
        }
        let on = Vector2::new(a + 2.0 * PI * k1 as f64, b + 2.0 * PI * k2 as f64);
        prop_assert!(v.eval(0.0, &on).value < 1e-28);
    }

    #[test]
    fn inertia_is_symmetric_positive_definite(q1 in -PI..PI, q2 in -PI..PI) {
        let m = TwoLinkArm::default().mass_matrix(&Vector2::new(q1, q2));
        prop_assert!((m[(0, 1)] - m[(1, 0)]).abs() < 1e-14);
        prop_assert!(m[(0, 0)] > 0.0 && m.determinant() > 0.0);
    }

    #[test]
    fn saturated_commands_are_finite_and_bounded(
        ux in -1e6f64..1e6, uy in -1e6f64..1e6, m in 0.01f64..10.0,
    ) {
        let c = saturate(ControlCommand::new(Vector2::new(ux, uy)), m);
        prop_assert!(c.u.iter().all(|v| v.is_finite() && v.abs() <= m));
    }
}

fn error_ode(t: f64, e0: f64, v0: f64, kp: f64, kv: f64) -> f64 {
    let d = (kv * kv - 4.0 * kp).sqrt();
    let (r1, r2) = ((-kv + d) / 2.0, (-kv - d) / 2.0);
    let b = (v0 - r1 * e0) / (r2 - r1);
    (e0 - b) * (r1 * t).exp() + b * (r2 * t).exp()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn computed_torque_error_is_linear_for_any_reference(
        amp1 in 0.0f64..1.5, amp2 in 0.0f64..1.5, w1 in 0.1f64..3.0, w2 in 0.1f64..3.0,
        e1 in -0.5f64..0.5, e2 in -0.5f64..0.5, kp in 0.5f64..4.0, kv in 5.0f64..12.0,
    ) {
        let model = TwoLinkArm::default();
        let gains = (Vector2::new(kp, kp), Vector2::new(kv, kv));
        let reference = |t: f64| {
            (
                Vector2::new(amp1 * (w1 * t).sin(), 0.8 + amp2 * (w2 * t).cos()),
                Vector2::new(amp1 * w1 * (w1 * t).cos(), -amp2 * w2 * (w2 * t).sin()),
                Vector2::new(-amp1 * w1 * w1 * (w1 * t).sin(), -amp2 * w2 * w2 * (w2 * t).cos()),
            )
        };
        let (q0, qd0, _) = reference(0.0);
        let mut s = Vector4::new(q0[0] + e1, q0[1] + e2, qd0[0], qd0[1]);
        let mut rhs = |t: f64, s: &Vector4<f64>| {
            let q = Vector2::new(s[0], s[1]);
            let qd = Vector2::new(s[2], s[3]);
            let (qr, qdr, qddr) = reference(t);
            let tau = arm_inverse_dynamics(&model, &q, &qd, &qr, &qdr, &qddr, &gains.0, &gains.1)
                .unwrap();
            let a = model.forward_dynamics(&q, &qd, &tau).unwrap();
            Vector4::new(s[2], s[3], a[0], a[1])
        };
        let dt = 1e-3;
        for i in 0..1000 {
            s = rk4_step(&mut rhs, i as f64 * dt, &s, dt);
        }
        let (q1, _, _) = reference(1.0);
        for (i, e0) in [e1, e2].into_iter().enumerate() {
            let expect = error_ode(1.0, e0, 0.0, kp, kv);
            prop_assert!((s[i] - q1[i] - expect).abs() < 1e-6);
        }
    }
}

#[test]
fn bundled_single_scenarios_are_deterministic() {
    for (name, _) in BUNDLED {
        let cfg = ScenarioConfig::load(&format!("bundled:{name}")).unwrap();
        if cfg.single.is_none() {
            continue;
        }
        let sc = cfg.single_scenario().unwrap();
        assert_eq!(simulate(&sc).unwrap(), simulate(&sc).unwrap(), "{name}");
    }
}

#[test]
fn logged_time_is_uniform() {
    let sc = ScenarioConfig::load("bundled:dynamic_obstacles")
        .unwrap()
        .single_scenario()
        .unwrap();
    let log = simulate(&sc).unwrap();
    let step = sc.integration.dt * sc.integration.log_every as f64;
    // the final row may close a partial stride
    let n = log.rows.len();
    for w in log.rows[..n - 1].windows(2) {
        assert!((w[1].t - w[0].t - step).abs() < 1e-9);
    }
    assert!(log.rows[n - 1].t > log.rows[n - 2].t);
}
