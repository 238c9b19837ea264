#![allow(dead_code)]

use std::f64::consts::PI;

use ncgabor::algebra::LatticeSeq;
use ncgabor::lattice::{LatticeKind, TorusParams};
use ncgabor::signal::{expi, GridSignal, GridSpec};
use num_complex::Complex64;
use rand::Rng;

pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

pub fn rand_complex(rng: &mut impl Rng) -> Complex64 {
    c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
}

/// Sum of three shifted, modulated Gaussians of random width with random channel weights.
pub fn random_signal(spec: GridSpec, rng: &mut impl Rng) -> GridSignal {
    let mut out = GridSignal::zeros(spec);
    for _ in 0..3 {
        let width = rng.gen_range(0.6..1.6);
        let x0 = rng.gen_range(-1.5..1.5);
        let w0 = rng.gen_range(-1.5..1.5);
        let weights: Vec<Complex64> = (0..spec.channels).map(|_| rand_complex(rng)).collect();
        let term = GridSignal::from_fn(spec, |x, k| {
            weights[k as usize] * (-PI * width * (x - x0) * (x - x0)).exp() * expi(w0 * x)
        });
        out.axpy(c(1.0, 0.0), &term).unwrap();
    }
    out
}

/// `count` random entries at indices in `[-span, span]^2`.
pub fn random_seq(p: TorusParams, kind: LatticeKind, count: usize, span: i64, rng: &mut impl Rng) -> LatticeSeq {
    let mut s = LatticeSeq::new(p, kind, 0.0);
    for _ in 0..count {
        let (n1, n2) = (rng.gen_range(-span..=span), rng.gen_range(-span..=span));
        s.insert(n1, n2, rand_complex(rng));
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

/// Random valid parameters with `q` in `1..=5` and steps in `[0.2, 1.5)`.
pub fn random_params(rng: &mut impl Rng) -> TorusParams {
    loop {
        let q = rng.gen_range(1u32..=5);
        let alpha = rng.gen_range(0.2..1.5);
        let beta = rng.gen_range(0.2..1.5);
        let (r, s) = if q == 1 { (0, 0) } else { (rng.gen_range(1..q), rng.gen_range(1..q)) };
        if let Ok(p) = TorusParams::new(alpha, beta, r, s, q) {
            return p;
        }
    }
}
