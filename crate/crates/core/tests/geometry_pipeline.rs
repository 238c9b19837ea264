mod common;

use common::{c, random_signal};
use ncgabor::algebra::{inner_left, twisted_conv, LatticeSeq};
use ncgabor::frame::{perturbed_dual, FrameSystem};
use ncgabor::geometry::{covariant, soliton_experiment, Axis, ExperimentSettings, WindowSpec};
use ncgabor::lattice::{LatticeKind, TorusParams};
use ncgabor::signal::{hermite, standard_gaussian, GridSpec};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn gaussian(q: usize) -> WindowSpec {
    WindowSpec::Gaussian { c: vec![c(1.0, 0.0); q], lambda: c(0.0, 0.0) }
}

#[test]
fn lifted_gaussian_has_charge_two() {
    let p = TorusParams::new(0.5, 1.0 / 3.0, 1, 1, 2).unwrap();
    let r = soliton_experiment(&p, &WindowSpec::LiftedGaussian, &ExperimentSettings::standard(2)).unwrap();
    assert!(r.admissible);
    assert!((r.c1() - c(2.0, 0.0)).norm() < 1e-5, "{r:?}");
    assert!((r.c1_sum() - c(2.0, 0.0)).norm() < 1e-4);
    assert!(r.c1_im.abs() < 1e-6);
    assert!((r.energy - 2.0).abs() < 1e-4);
    assert!((r.energy - r.energy_window).abs() < 1e-6);
    assert_eq!(r.c1_rounded, 2);
    // the + equation is the small one, and W-membership follows it
    assert!(r.sd_residual_plus < 1e-4 && r.sd_residual_minus > 1.0);
    assert!(r.w_residual_plus < 1e-6 && r.w_residual_minus > 0.5);
}

#[test]
fn generalized_gaussian_with_channel_weights() {
    let p = TorusParams::new(0.5, 0.2, 1, 1, 2).unwrap();
    let w = WindowSpec::Gaussian { c: vec![c(1.0, 0.0), c(0.3, -0.6)], lambda: c(0.4, 0.2) };
    let r = soliton_experiment(&p, &w, &ExperimentSettings::standard(2)).unwrap();
    assert!((r.c1() - c(2.0, 0.0)).norm() < 1e-5, "{r:?}");
    assert!(r.gap.abs() < 1e-4 && r.sd_min() < 1e-5);
}

#[test]
fn non_integral_parameters_still_satisfy_the_bound() {
    let p = TorusParams::new(0.49, 0.49, 0, 0, 1).unwrap();
    let r = soliton_experiment(&p, &gaussian(1), &ExperimentSettings::standard(1)).unwrap();
    assert!(!r.admissible);
    assert!((r.c1() - c(1.0, 0.0)).norm() < 1e-4);
    assert!(r.gap > -1e-4, "{r:?}");
    // observed: the Gaussian still reaches E = 1 here
    assert!((r.energy - 1.0).abs() < 1e-6);
}

#[test]
fn perturbation_keeps_the_charge_and_raises_the_energy() {
    let p = TorusParams::new(0.5, 0.5, 0, 0, 1).unwrap();
    let w = WindowSpec::Perturbed { base: Box::new(gaussian(1)), hermite: 3, eps: 0.05 };
    let r = soliton_experiment(&p, &w, &ExperimentSettings::standard(1)).unwrap();
    assert!((r.c1() - c(1.0, 0.0)).norm() < 1e-4);
    assert!(r.energy > 1.01 && r.gap > 1e-2);
    assert!(r.sd_residual_plus > 1e-3 && r.sd_residual_minus > 1e-3, "{r:?}");
}

#[test]
fn small_self_duality_residual_forces_a_small_gap() {
    for (a, b) in [(0.5, 0.5), (0.4, 0.5), (0.5, 1.0 / 3.0)] {
        let p = TorusParams::new(a, b, 0, 0, 1).unwrap();
        let r = soliton_experiment(&p, &gaussian(1), &ExperimentSettings::standard(1)).unwrap();
        assert!(r.sd_min() < 1e-5);
        assert!(r.gap.abs() < 1e-4);
        assert!((r.c1().re - r.c1().re.round()).abs() < 1e-4 && r.c1_im.abs() < 1e-6);
    }
}

fn derivative_identity_residual(
    g: &ncgabor::signal::GridSignal,
    h: &ncgabor::signal::GridSignal,
    p: &TorusParams,
) -> f64 {
    let spec = *g.spec();
    let r = 6.0;
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let f1 = random_signal(spec, &mut rng);
    let f2 = random_signal(spec, &mut rng);
    let mut worst: f64 = 0.0;
    for axis in [Axis::Time, Axis::Frequency] {
        let lhs =
            twisted_conv(&inner_left(&f1, &covariant(g, axis), p, r).unwrap(), &inner_left(h, &f2, p, r).unwrap())
                .unwrap();
        let rhs =
            twisted_conv(&inner_left(&f1, g, p, r).unwrap(), &inner_left(&covariant(h, axis), &f2, p, r).unwrap())
                .unwrap();
        let zero = LatticeSeq::new(*p, LatticeKind::TimeFreq, r);
        let sum = lhs.add(&rhs).unwrap();
        let scale = lhs.l1_distance(&zero, Some(3.0)).unwrap();
        worst = worst.max(sum.l1_distance(&zero, Some(3.0)).unwrap() / scale);
    }
    worst
}

#[test]
fn dual_pair_derivative_identity() {
    let p = TorusParams::new(0.5, 0.5, 0, 0, 1).unwrap();
    let spec = GridSpec::standard(1);
    let g = standard_gaussian(spec);
    let sys = FrameSystem::new(g.clone(), p, 6.0).unwrap();
    let h = sys.canonical_dual(1e-12).unwrap().clone();
    assert!(derivative_identity_residual(&g, &h, &p) < 1e-6);

    // any dual window, not only the canonical one
    let v = hermite(spec, 2, &[c(1.0, 0.0)]).unwrap();
    let h2 = perturbed_dual(&g, &h, &v, 0.3, &p, 6.0).unwrap();
    assert!(derivative_identity_residual(&g, &h2, &p) < 1e-6);

    // and it fails for a window that is not dual
    let mut h3 = h.clone();
    h3.axpy(c(0.3, 0.0), &v).unwrap();
    assert!(derivative_identity_residual(&g, &h3, &p) > 1e-3);
}

#[test]
fn report_serializes() {
    let p = TorusParams::new(0.5, 0.5, 0, 0, 1).unwrap();
    let r = soliton_experiment(&p, &gaussian(1), &ExperimentSettings::standard(1)).unwrap();
    let back: ncgabor::geometry::ChernReport = serde_json::from_str(&serde_json::to_string(&r).unwrap()).unwrap();
    assert_eq!(back, r);
    assert!(r.energy >= 0.0);
}

#[test]
fn mismatched_settings_are_rejected() {
    let p = TorusParams::new(0.5, 1.0 / 3.0, 1, 1, 2).unwrap();
    assert!(soliton_experiment(&p, &WindowSpec::LiftedGaussian, &ExperimentSettings::standard(1)).is_err());
    let bad = TorusParams::new(0.5, 0.25, 1, 1, 2).unwrap();
    assert!(soliton_experiment(&bad, &WindowSpec::LiftedGaussian, &ExperimentSettings::standard(2)).is_err());
}
