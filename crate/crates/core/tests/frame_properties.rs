mod common;

use common::{c, random_signal};
use ncgabor::algebra::{act_right, inner_left, inner_right, twisted_conv, LatticeSeq};
use ncgabor::frame::{laurent_symbol, lift_scalar_window, project_dual_pair, reconstruction_residual, FrameSystem};
use ncgabor::lattice::{LatticeKind, TorusParams};
use ncgabor::signal::{expi, inner, modulate, standard_gaussian, translate, GridSpec};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn q1() -> TorusParams {
    TorusParams::new(0.5, 0.5, 0, 0, 1).unwrap()
}

fn q2() -> TorusParams {
    TorusParams::new(0.5, 1.0 / 3.0, 1, 1, 2).unwrap()
}

#[test]
fn reconstruction_improves_with_radius() {
    let p = q1();
    let spec = GridSpec::standard(1);
    let g = standard_gaussian(spec);
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let probes: Vec<_> = (0..10).map(|_| random_signal(spec, &mut rng)).collect();
    let mut last = f64::INFINITY;
    for r in [3.0, 4.0, 5.0] {
        let sys = FrameSystem::new(g.clone(), p, r).unwrap();
        let (h, _) = sys.solve(&g, 1e-12).unwrap();
        let worst = probes.iter().map(|f| reconstruction_residual(f, &g, &h, &p, r).unwrap()).fold(0.0, f64::max);
        assert!(worst < last / 10.0, "R = {r}: {worst:e} after {last:e}");
        last = worst;
    }
}

#[test]
fn critical_density_lower_bound_collapses() {
    let g = standard_gaussian(GridSpec::standard(1));
    let critical = FrameSystem::new(g.clone(), TorusParams::new(1.0, 1.0, 0, 0, 1).unwrap(), 6.0).unwrap();
    let t = critical.frame_trend(16, 0).unwrap();
    assert!(!t.frame, "{t:?}");
    assert!(t.lower_large < 0.4 * t.lower_small);
    let sub = FrameSystem::new(g, q1(), 6.0).unwrap();
    let t = sub.frame_trend(16, 0).unwrap();
    assert!(t.frame && t.lower_large > 0.99 * t.lower_small, "{t:?}");
}

#[test]
fn duality_principle_on_a_parameter_grid() {
    // every point satisfies the integrality condition, so the symbol is available
    let g = standard_gaussian(GridSpec::standard(1));
    let steps = [1.0 / 3.0, 0.5, 1.0];
    let mut non_frames = 0;
    for &a in &steps {
        for &b in &steps {
            let p = TorusParams::new(a, b, 0, 0, 1).unwrap();
            let trend = FrameSystem::new(g.clone(), p, 6.0).unwrap().frame_trend(16, 0).unwrap();
            let symbol = laurent_symbol(&g, &p, 16, 6.0).unwrap();
            assert_eq!(
                trend.frame, symbol.riesz,
                "alpha = {a}, beta = {b}: {trend:?} vs min|F| = {:e}",
                symbol.min_abs
            );
            non_frames += usize::from(!symbol.riesz);
        }
    }
    assert_eq!(non_frames, 1);
}

#[test]
fn laurent_symbol_bounds_match_frame_bounds() {
    let g = standard_gaussian(GridSpec::standard(1));
    let sym = laurent_symbol(&g, &q1(), 32, 6.0).unwrap();
    let (lo, hi) = sym.frame_bounds();
    let b = FrameSystem::new(g, q1(), 6.0).unwrap().frame_bounds(16, 0).unwrap();
    assert!(lo <= b.lower * (1.0 + 1e-6) && b.upper <= hi * (1.0 + 1e-6), "{lo} {hi} {b:?}");
    assert!((b.upper - hi).abs() < 1e-2 * hi);
}

#[test]
fn channel_constant_symbol_reduces_to_scalar_sum() {
    let p = q2();
    let q = p.q;
    let scalar = standard_gaussian(GridSpec::standard(1));
    let g = lift_scalar_window(&scalar, &p, 6.0).unwrap();
    let coeffs = inner_right(&g, &g, &p, 6.0).unwrap().scaled(c(p.density(), 0.0));

    // cross-channel terms vanish unless m is a multiple of q, and carry a factor q otherwise
    let (tstep, fstep) = (1.0 / (p.beta * q as f64), 1.0 / (p.alpha * q as f64));
    for n in -4i64..=4 {
        for m in -6i64..=6 {
            let got = coeffs.get(n, m);
            if m.rem_euclid(q as i64) != 0 {
                assert!(got.norm() < 1e-12, "({n}, {m}): {got}");
            } else {
                let shifted = translate(&modulate(&scalar, m as f64 * fstep, 0), n as f64 * tstep, 0);
                let want = inner(&scalar, &shifted).unwrap() * q as f64;
                assert!((got - want).norm() < 1e-12, "({n}, {m}): {got} vs {want}");
            }
        }
    }

    let sym = laurent_symbol(&g, &p, 8, 6.0).unwrap();
    for i in 0..8 {
        for j in 0..8 {
            let (t1, t2) = (i as f64 / 8.0, j as f64 / 8.0);
            let mut want = c(0.0, 0.0);
            // same box as the symbol; longer shifts would wrap around the periodic grid
            for n in -4i64..=4 {
                for m in -3i64..=3 {
                    let shifted = translate(&modulate(&scalar, m as f64 / p.alpha, 0), n as f64 * tstep, 0);
                    want += inner(&scalar, &shifted).unwrap() * expi(q as f64 * m as f64 * t1 + n as f64 * t2);
                }
            }
            want *= q as f64;
            assert!((sym.at(i, j) - want).norm() < 1e-10, "({t1}, {t2})");
        }
    }
}

#[test]
fn lifted_window_is_a_frame() {
    let p = q2();
    let g = lift_scalar_window(&standard_gaussian(GridSpec::standard(1)), &p, 6.0).unwrap();
    let scalar = TorusParams::new(p.alpha, p.q as f64 * p.beta, 0, 0, 1).unwrap();
    assert!(laurent_symbol(&standard_gaussian(GridSpec::standard(1)), &scalar, 16, 6.0).unwrap().riesz);
    let b = FrameSystem::new(g, p, 6.0).unwrap().frame_bounds(16, 0).unwrap();
    assert!(b.lower > 0.1 * b.upper, "{b:?}");
}

#[test]
fn gauge_invariance() {
    let p = q2();
    let spec = GridSpec::standard(2);
    let g = lift_scalar_window(&standard_gaussian(GridSpec::standard(1)), &p, 6.0).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let f1 = random_signal(spec, &mut rng);
    let f2 = random_signal(spec, &mut rng);

    // T f = f . b with b = delta_0 + small terms, invertible by a Neumann series
    let mut b = LatticeSeq::new(p, LatticeKind::Adjoint, 2.0);
    b.insert(0, 0, c(1.0, 0.0));
    b.insert(1, 0, c(0.2, 0.1));
    b.insert(0, -1, c(-0.1, 0.15));
    let t = |f| act_right(f, &b).unwrap();

    let sys = FrameSystem::new(g.clone(), p, 6.0).unwrap();
    let (s_inv_f2, _) = sys.solve(&f2, 1e-13).unwrap();
    let before = inner_left(&f1, &s_inv_f2, &p, 6.0).unwrap();

    let tsys = FrameSystem::new(t(&g), p, 6.0).unwrap();
    let (x, _) = tsys.solve(&t(&f2), 1e-13).unwrap();
    let after = inner_left(&t(&f1), &x, &p, 6.0).unwrap();
    let d = before.l1_distance(&after, None).unwrap();
    assert!(d < 1e-6, "l1 distance {d:e}");
}

#[test]
fn tight_window_generates_the_canonical_projection() {
    for p in [q1(), q2()] {
        let g = lift_scalar_window(&standard_gaussian(GridSpec::standard(1)), &p, 6.0).unwrap();
        let sys = FrameSystem::new(g.clone(), p, 6.0).unwrap();
        let h = sys.canonical_dual(1e-12).unwrap().clone();
        let t = sys.canonical_tight(1e-12).unwrap().clone();
        let a = inner_left(&g, &h, &p, 6.0).unwrap();
        let b = inner_left(&t, &t, &p, 6.0).unwrap();
        assert!(a.l1_distance(&b, None).unwrap() < 1e-6);
        let bounds = FrameSystem::new(t.clone(), p, 6.0).unwrap().frame_bounds(16, 3).unwrap();
        assert!((bounds.lower - 1.0).abs() < 1e-6 && (bounds.upper - 1.0).abs() < 1e-6, "{bounds:?}");
        let proj = project_dual_pair(&t, &t, &p, 6.0).unwrap();
        assert!(proj.is_projection(1e-6));
        // the projection is idempotent as a product as well
        let sq = twisted_conv(&proj.seq, &proj.seq).unwrap();
        assert!(sq.l1_distance(&proj.seq, Some(6.0)).unwrap() < 1e-6);
    }
}
