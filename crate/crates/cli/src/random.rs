//! Seeded random test data for the identity suites.

use std::f64::consts::PI;

use ncgabor::algebra::LatticeSeq;
use ncgabor::lattice::{LatticeKind, TorusParams};
use ncgabor::signal::{expi, GridSignal, GridSpec, PhasePoint};
use num_complex::Complex64;
use rand::Rng;

pub fn complex(rng: &mut impl Rng) -> Complex64 {
    Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
}

/// Sum of three shifted, modulated Gaussians with random channel weights.
pub fn signal(spec: GridSpec, rng: &mut impl Rng) -> GridSignal {
    let mut out = GridSignal::zeros(spec);
    for _ in 0..3 {
        let width = rng.gen_range(0.6..1.6);
        let x0 = rng.gen_range(-1.5..1.5);
        let w0 = rng.gen_range(-1.5..1.5);
        let weights: Vec<Complex64> = (0..spec.channels).map(|_| complex(rng)).collect();
        let term = GridSignal::from_fn(spec, |x, k| {
            weights[k as usize] * (-PI * width * (x - x0) * (x - x0)).exp() * expi(w0 * x)
        });
        out.axpy(Complex64::new(1.0, 0.0), &term).expect("same grid");
    }
    out
}

/// `count` random entries at indices in `[-span, span]^2`, with the radius set to cover them.
pub fn sequence(p: TorusParams, kind: LatticeKind, count: usize, span: i64, rng: &mut impl Rng) -> LatticeSeq {
    let mut s = LatticeSeq::new(p, kind, 0.0);
    for _ in 0..count {
        let (n1, n2) = (rng.gen_range(-span..=span), rng.gen_range(-span..=span));
        s.insert(n1, n2, complex(rng));
    }
    let r = s
        .iter()
        .map(|((n1, n2), _)| {
            let pt = s.point(n1, n2);
            pt.lambda.abs().max(pt.gamma.abs())
        })
        .fold(0.0, f64::max);
    s.with_radius(r)
}

pub fn point(q: u32, rng: &mut impl Rng) -> PhasePoint {
    PhasePoint::new(
        rng.gen_range(-2.0..2.0),
        rng.gen_range(0..q as i64),
        rng.gen_range(-2.0..2.0),
        rng.gen_range(0..q as i64),
        q,
    )
}
