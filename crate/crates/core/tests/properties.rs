use std::f64::consts::PI;

use flowlab_core::fixtures::{disk, lamella, perturbed_circle, Mode};
use flowlab_core::flows::{ms_velocity, SingleLayerSystem};
use flowlab_core::functional::{area, boundary_trace, energy, weighted_stats};
use flowlab_core::geometry::BoundarySet;
use flowlab_core::greens::{poisson_solve, GridField};
use flowlab_core::metrics::{alpha_distance, alpha_tolerance, fit_decay};
use flowlab_core::Vector;
use proptest::prelude::*;

fn blob(r: f64, x: f64, y: f64, amp: f64, phase: f64, n: usize) -> BoundarySet {
    let mode = Mode {
        phase,
        ..Mode::new(3, amp)
    };
    BoundarySet::new(vec![
        perturbed_circle(r, Vector::new(x, y), n, &[mode]).unwrap()
    ])
    .unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn poisson_solution_has_zero_mean(a in -2.0f64..2.0, b in -2.0f64..2.0, c in -5.0f64..5.0) {
        let rhs = GridField::from_fn(32, |x, y| {
            c + a * (2.0 * PI * x).sin() + b * (4.0 * PI * (x + y)).cos() + (x * y).powi(2)
        })
        .unwrap();
        prop_assert!(poisson_solve(&rhs).mean().abs() < 1e-12);
    }

    #[test]
    fn constant_data_gives_zero_density(r in 0.1f64..0.3, amp in 0.0f64..0.02, g in -10.0f64..10.0) {
        let b = blob(r, 0.5, 0.5, amp, 0.0, 64);
        let sys = SingleLayerSystem::assemble(&b, &b.frames().unwrap()).unwrap();
        let (sigma, c) = sys.solve(&vec![g; 64]).unwrap();
        prop_assert!(sigma.iter().all(|s| s.abs() < 1e-8));
        prop_assert!((c - g).abs() < 1e-8);
    }

    #[test]
    fn layer_velocity_has_zero_weighted_mean(r in 0.15f64..0.3, amp in 0.0f64..0.02, gamma in 0.0f64..1.0) {
        let b = blob(r, 0.5, 0.5, amp, 0.3, 64);
        let frames = b.frames().unwrap();
        let lv = ms_velocity(&b, &frames, gamma, 64).unwrap();
        let sys = SingleLayerSystem::assemble(&b, &frames).unwrap();
        let (mean, _) = weighted_stats(&lv.velocity, sys.weights());
        prop_assert!(mean.abs() < 1e-6, "{}", mean);
    }

    #[test]
    fn layer_velocity_is_translation_equivariant(dx in -1.0f64..1.0, dy in -1.0f64..1.0) {
        let b = blob(0.25, 0.5, 0.5, 0.02, 0.0, 64);
        let shifted = b.translated(Vector::new(dx, dy));
        let v0 = ms_velocity(&b, &b.frames().unwrap(), 0.0, 64).unwrap().velocity;
        let v1 = ms_velocity(&shifted, &shifted.frames().unwrap(), 0.0, 64).unwrap().velocity;
        for (a, b) in v0.iter().zip(&v1) {
            prop_assert!((a - b).abs() < 1e-8);
        }
    }

    #[test]
    fn energy_terms(r in 0.1f64..0.3, gamma in 0.0f64..2.0) {
        let b = disk(r, Vector::new(0.5, 0.5), 128).unwrap();
        let e = energy(&b, gamma, 128).unwrap();
        prop_assert!(e.nonlocal >= 0.0);
        let e0 = energy(&b, 0.0, 128).unwrap();
        prop_assert!((e0.j - area(&b).unwrap()).abs() < 1e-14);
    }

    #[test]
    fn lambda_is_residual_mean(amp in 0.0f64..0.03, gamma in 0.0f64..1.0) {
        let b = blob(0.25, 0.5, 0.5, amp, 0.0, 96);
        let t = boundary_trace(&b, gamma, 128).unwrap();
        let (mean, std) = weighted_stats(&t.residual, &t.ds);
        prop_assert_eq!(t.lambda, mean);
        prop_assert_eq!(t.defect, std);
    }

    #[test]
    fn alpha_is_symmetric_and_absorbs_translation(
        amp in 0.0f64..0.03,
        phase in 0.0f64..PI,
        dx in -0.5f64..0.5,
        dy in -0.5f64..0.5,
    ) {
        let e = disk(0.25, Vector::new(0.5, 0.5), 128).unwrap();
        let f = blob(0.25, 0.5, 0.5, amp, phase, 128);
        let m = 128;
        let tol = alpha_tolerance(2.0 * PI * 0.25, m);
        let ef = alpha_distance(&e, &f, m).unwrap().value;
        let fe = alpha_distance(&f, &e, m).unwrap().value;
        prop_assert!((ef - fe).abs() <= 2.0 * tol, "{} {}", ef, fe);
        let moved = alpha_distance(&e, &f.translated(Vector::new(dx, dy)), m).unwrap().value;
        prop_assert!((ef - moved).abs() <= tol, "{} {}", ef, moved);
    }

    #[test]
    fn decay_fit_r2_in_unit_interval(
        values in proptest::collection::vec(1e-6f64..1.0, 8..40),
        burn_in in 0.0f64..0.5,
    ) {
        let times: Vec<f64> = (0..values.len()).map(|i| i as f64 * 0.1).collect();
        if let Ok(fit) = fit_decay(&times, &values, burn_in) {
            prop_assert!((0.0..=1.0).contains(&fit.r2), "{}", fit.r2);
        }
    }
}

#[test]
fn stripe_energy_is_translation_invariant_along_the_stripe() {
    let s = lamella(0.5, 0.5, 64).unwrap();
    let e0 = energy(&s, 1.0, 128).unwrap().j;
    let e1 = energy(&s.translated(Vector::new(0.37, 0.0)), 1.0, 128)
        .unwrap()
        .j;
    assert!((e0 - e1).abs() < 1e-12);
}
