use etpc_core::dynamics::{plant_step_with, robot_pose_from_error};
use etpc_core::*;

#[test]
fn plant_and_error_dynamics_agree() {
    let h = 0.005;
    let path = PathSpec::s_curve(5.0);
    let reference = Reference::new(&path, h, 1.0).unwrap();
    let u = |t: f64| ControlInput::new(0.2 + 0.05 * t.sin(), 0.1 * (2.0 * t).cos());

    let x0 = ErrorState::new(0.3, -0.4, 0.1);
    let mut pose = robot_pose_from_error(&reference.sample(0.0).unwrap().pose, &x0);
    let mut x = x0.to_array();
    for i in 0..200 {
        let t = i as f64 * h;
        pose = plant_step_with(&pose, t, h, u).unwrap();
        x = rk4_step(x, t, h, |s, x| {
            let r = reference.sample(s).unwrap();
            error_field(&ErrorState::from_array(*x), &r, &u(s)).to_array()
        })
        .unwrap();
    }
    let via_plant = error_transform(&pose, &reference.sample(1.0).unwrap().pose);
    let direct = ErrorState::from_array(x);
    for (a, b) in via_plant.to_array().iter().zip(direct.to_array()) {
        assert!((a - b).abs() < 1e-6, "{via_plant:?} vs {direct:?}");
    }
}

#[test]
fn logged_derivative_matches_v_differences() {
    // Away from events the logged dV/dt = Lambda - Sigma should match a
    // fourth-order central difference of the logged V.
    let params = ControllerParams::default();
    let scenario = Scenario::new(PathSpec::s_curve(30.0), params, ErrorState::new(1.2, -0.8, 0.15));
    for strategy in [Strategy::Etpc, Strategy::Etc] {
        let tr = run(&scenario, strategy).unwrap();
        let h = tr.step;
        let mut checked = 0;
        let v = &tr.v;
        for i in 2..tr.len() - 2 {
            if tr.event_flags[i - 2..=i + 2].iter().any(|&f| f) {
                continue;
            }
            let fd = (v[i - 2] - 8.0 * v[i - 1] + 8.0 * v[i + 1] - v[i + 2]) / (12.0 * h);
            let an = tr.v_dot(i);
            assert!((fd - an).abs() <= 1e-3 * an.abs() + 1e-6, "t = {}: {fd} vs {an}", tr.time(i));
            checked += 1;
        }
        assert!(checked > tr.len() / 2);
    }
}

#[test]
fn events_reset_error_and_derivative() {
    let params = ControllerParams::default();
    let scenario = Scenario::new(PathSpec::zigzag(30.0), params, ErrorState::new(-1.5, 1.0, -0.1));
    for strategy in [Strategy::Etpc, Strategy::Etc] {
        let tr = run(&scenario, strategy).unwrap();
        assert!(tr.events.len() > 3);
        for ev in &tr.events {
            let e = tr.input_error[ev.step];
            assert!(e.v.abs() < 1e-12 && e.omega.abs() < 1e-12);
            assert!((tr.v_dot(ev.step) + tr.sigma[ev.step]).abs() < 1e-12);
        }
    }
}

#[test]
fn sampled_runs_stay_bounded_between_events() {
    let params = ControllerParams::default();
    for (i, x0) in sample_initial_conditions(6, 3).into_iter().enumerate() {
        let path = PathSpec::catalog(40.0).swap_remove(i % 4);
        let tr = run(&Scenario::new(path, params.clone(), x0), Strategy::Etpc).unwrap();
        let steps: Vec<usize> = tr.events.iter().map(|e| e.step).chain([tr.len()]).collect();
        for k in 1..steps.len() - 1 {
            let eps_k = tr.v[steps[k]];
            let peak = tr.v[steps[k]..steps[k + 1]].iter().copied().fold(0.0, f64::max);
            assert!(peak <= eps_k + 1e-6, "interval {k}: {peak} > {eps_k}");
        }
        let m = compute_metrics(&tr, params.epsilon_sq);
        assert!(m.min_inter_event.unwrap() >= params.step - 1e-12);
    }
}
