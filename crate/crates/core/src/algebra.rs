//! Twisted convolution algebras on the time-frequency lattice and its adjoint.
//!
//! On `Lambda x Gamma` the product uses the cocycle `phi`; on the adjoint lattice it
//! uses `conj(phi)`, the convention under which `f . (b1 # b2) = (f . b1) . b2`.

use std::collections::BTreeMap;
use std::io::{BufRead, Write};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{enumerate_lattice, index_bound, rem_q, LatticeKind, TorusParams};
use crate::signal::{expi, translate, GridSignal, PhasePoint};

/// Entries below this magnitude are dropped after arithmetic.
pub const PRUNE: f64 = 1e-14;

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };

/// A finitely supported sequence on one of the two lattices, keyed by generator indices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LatticeSeq {
    params: TorusParams,
    kind: LatticeKind,
    radius: f64,
    entries: BTreeMap<(i64, i64), Complex64>,
}

impl LatticeSeq {
    pub fn new(params: TorusParams, kind: LatticeKind, radius: f64) -> Self {
        LatticeSeq { params, kind, radius, entries: BTreeMap::new() }
    }

    pub fn delta(params: TorusParams, kind: LatticeKind, n1: i64, n2: i64) -> Self {
        let mut s = LatticeSeq::new(params, kind, 0.0);
        s.entries.insert((n1, n2), Complex64::new(1.0, 0.0));
        let p = s.point(n1, n2);
        s.radius = p.lambda.abs().max(p.gamma.abs());
        s
    }

    /// Sequence over the box `max(|lambda|, |gamma|) <= radius`.
    pub fn from_fn(
        params: TorusParams,
        kind: LatticeKind,
        radius: f64,
        f: impl Fn(&PhasePoint) -> Complex64,
    ) -> Result<Self> {
        let mut s = LatticeSeq::new(params, kind, radius);
        for pt in enumerate_lattice(&params, kind, radius)? {
            let v = f(&pt.phase_point());
            if v != ZERO {
                s.entries.insert((pt.n1, pt.n2), v);
            }
        }
        Ok(s)
    }

    pub fn params(&self) -> &TorusParams {
        &self.params
    }

    pub fn kind(&self) -> LatticeKind {
        self.kind
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn with_radius(mut self, radius: f64) -> Self {
        self.radius = radius;
        self
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, n1: i64, n2: i64) -> Complex64 {
        self.entries.get(&(n1, n2)).copied().unwrap_or(ZERO)
    }

    pub fn insert(&mut self, n1: i64, n2: i64, v: Complex64) {
        if v == ZERO {
            self.entries.remove(&(n1, n2));
        } else {
            self.entries.insert((n1, n2), v);
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = ((i64, i64), Complex64)> + '_ {
        self.entries.iter().map(|(k, v)| (*k, *v))
    }

    pub fn point(&self, n1: i64, n2: i64) -> PhasePoint {
        self.params.point(self.kind, n1, n2)
    }

    pub fn origin(&self) -> Complex64 {
        self.get(0, 0)
    }

    pub fn l1_norm(&self) -> f64 {
        self.entries.values().map(|v| v.norm()).sum()
    }

    /// `sum |a(nu)| (1 + |lambda| + |gamma|)^s`
    pub fn weighted_norm(&self, s: f64) -> f64 {
        self.iter()
            .map(|((n1, n2), v)| {
                let p = self.point(n1, n2);
                v.norm() * (1.0 + p.lambda.abs() + p.gamma.abs()).powf(s)
            })
            .sum()
    }

    /// Copy keeping only entries with `max(|lambda|, |gamma|) <= radius`.
    pub fn restricted(&self, radius: f64) -> Self {
        let mut out = LatticeSeq::new(self.params, self.kind, radius.min(self.radius));
        for ((n1, n2), v) in self.iter() {
            let p = self.point(n1, n2);
            if p.lambda.abs().max(p.gamma.abs()) <= radius * (1.0 + 1e-12) {
                out.entries.insert((n1, n2), v);
            }
        }
        out
    }

    pub fn pruned(mut self, threshold: f64) -> Self {
        self.entries.retain(|_, v| v.norm() >= threshold);
        self
    }

    pub fn scaled(&self, a: Complex64) -> Self {
        let mut out = self.clone();
        out.entries.values_mut().for_each(|v| *v *= a);
        out
    }

    pub fn conj(&self) -> Self {
        let mut out = self.clone();
        out.entries.values_mut().for_each(|v| *v = v.conj());
        out
    }

    fn check_compatible(&self, other: &LatticeSeq) -> Result<()> {
        if self.kind != other.kind {
            return Err(Error::LatticeMismatch(format!("{} vs {}", self.kind, other.kind)));
        }
        if self.params != other.params {
            return Err(Error::LatticeMismatch(format!("{:?} vs {:?}", self.params, other.params)));
        }
        Ok(())
    }

    fn check_kind(&self, kind: LatticeKind) -> Result<()> {
        if self.kind != kind {
            return Err(Error::LatticeMismatch(format!("expected {kind}, got {}", self.kind)));
        }
        Ok(())
    }

    /// `self + a * other`
    pub fn axpy(&self, a: Complex64, other: &LatticeSeq) -> Result<Self> {
        self.check_compatible(other)?;
        let mut out = self.clone();
        out.radius = self.radius.max(other.radius);
        for (k, v) in other.iter() {
            *out.entries.entry(k).or_insert(ZERO) += a * v;
        }
        Ok(out.pruned(PRUNE))
    }

    pub fn add(&self, other: &LatticeSeq) -> Result<Self> {
        self.axpy(Complex64::new(1.0, 0.0), other)
    }

    pub fn sub(&self, other: &LatticeSeq) -> Result<Self> {
        self.axpy(Complex64::new(-1.0, 0.0), other)
    }

    /// `||self - other||_1`, optionally restricted to a radius.
    pub fn l1_distance(&self, other: &LatticeSeq, radius: Option<f64>) -> Result<f64> {
        self.check_compatible(other)?;
        let mut d = BTreeMap::new();
        for (k, v) in self.iter() {
            *d.entry(k).or_insert(ZERO) += v;
        }
        for (k, v) in other.iter() {
            *d.entry(k).or_insert(ZERO) -= v;
        }
        Ok(d.into_iter()
            .filter(|((n1, n2), _)| {
                radius.map_or(true, |r| {
                    let p = self.point(*n1, *n2);
                    p.lambda.abs().max(p.gamma.abs()) <= r * (1.0 + 1e-12)
                })
            })
            .map(|(_, v)| v.norm())
            .sum())
    }

    /// Cocycle of this lattice's algebra between index pairs, computed from integers.
    pub fn index_cocycle(&self, a: (i64, i64), b: (i64, i64)) -> Complex64 {
        let phase = index_phase(&self.params, self.kind);
        phase.eval(a.0, b.1)
    }

    pub fn write_rows<W: Write>(&self, mut w: W) -> Result<()> {
        let p = &self.params;
        writeln!(w, "{:.17e} {:.17e} {} {} {} {} {:.17e}", p.alpha, p.beta, p.r, p.s, p.q, self.kind, self.radius)?;
        for ((n1, n2), v) in self.iter() {
            writeln!(w, "{n1} {n2} {:.17e} {:.17e}", v.re, v.im)?;
        }
        Ok(())
    }

    pub fn read_rows<R: BufRead>(r: R) -> Result<Self> {
        let mut lines = r.lines();
        let header = loop {
            match lines.next() {
                Some(l) => {
                    let l = l?;
                    if !l.trim().is_empty() && !l.trim_start().starts_with('#') {
                        break l;
                    }
                }
                None => return Err(Error::Parse("missing header".into())),
            }
        };
        let h: Vec<&str> = header.split_whitespace().collect();
        if h.len() != 7 {
            return Err(Error::Parse(format!("header must be 'alpha beta r s q kind radius', got '{header}'")));
        }
        let num = |s: &str, what: &str| -> Result<f64> { s.parse().map_err(|e| Error::Parse(format!("{what}: {e}"))) };
        let int = |s: &str, what: &str| -> Result<u32> { s.parse().map_err(|e| Error::Parse(format!("{what}: {e}"))) };
        let params = TorusParams::new(
            num(h[0], "alpha")?,
            num(h[1], "beta")?,
            int(h[2], "r")?,
            int(h[3], "s")?,
            int(h[4], "q")?,
        )?;
        let kind: LatticeKind = h[5].parse()?;
        let mut s = LatticeSeq::new(params, kind, num(h[6], "radius")?);
        for line in lines {
            let line = line?;
            if line.trim().is_empty() || line.trim_start().starts_with('#') {
                continue;
            }
            let f: Vec<&str> = line.split_whitespace().collect();
            if f.len() != 4 {
                return Err(Error::Parse(format!("row must be 'n1 n2 re im', got '{line}'")));
            }
            let n1: i64 = f[0].parse().map_err(|e| Error::Parse(format!("n1: {e}")))?;
            let n2: i64 = f[1].parse().map_err(|e| Error::Parse(format!("n2: {e}")))?;
            let v = Complex64::new(num(f[2], "re")?, num(f[3], "im")?);
            if !(v.re.is_finite() && v.im.is_finite()) {
                return Err(Error::Parse(format!("non-finite entry at ({n1}, {n2})")));
            }
            s.insert(n1, n2, v);
        }
        Ok(s)
    }
}

/// `phi(nu(a1, .), nu(., b2))` depends only on `a1 * b2`:
/// `exp(-2 pi i (ts fs a1 b2 + (tl fl a1 b2 mod q) / q))`, conjugated on the adjoint lattice.
#[derive(Clone, Copy)]
struct IndexPhase {
    step_product: f64,
    slope_product: i64,
    q: u32,
    sign: f64,
}

impl IndexPhase {
    fn eval(&self, a1: i64, b2: i64) -> Complex64 {
        let k = a1 * b2;
        let frac = rem_q(self.slope_product * k, self.q) as f64 / self.q as f64;
        expi(-self.sign * (self.step_product * k as f64 + frac))
    }
}

fn index_phase(p: &TorusParams, kind: LatticeKind) -> IndexPhase {
    let g = p.generators(kind);
    IndexPhase {
        step_product: g.time_step * g.freq_step,
        slope_product: g.time_slope as i64 * g.freq_slope as i64,
        q: p.q,
        sign: match kind {
            LatticeKind::TimeFreq => 1.0,
            LatticeKind::Adjoint => -1.0,
        },
    }
}

fn bounds(s: &LatticeSeq) -> Option<(i64, i64, i64, i64)> {
    let mut it = s.entries.keys();
    let &(a, b) = it.next()?;
    let (mut lo1, mut hi1, mut lo2, mut hi2) = (a, a, b, b);
    for &(n1, n2) in it {
        lo1 = lo1.min(n1);
        hi1 = hi1.max(n1);
        lo2 = lo2.min(n2);
        hi2 = hi2.max(n2);
    }
    Some((lo1, hi1, lo2, hi2))
}

/// `(a1 # a2)(nu) = sum a1(nu') a2(nu - nu') phi(nu', nu - nu')` (conjugate cocycle on the
/// adjoint lattice).
pub fn twisted_conv(a1: &LatticeSeq, a2: &LatticeSeq) -> Result<LatticeSeq> {
    a1.check_compatible(a2)?;
    let mut out = LatticeSeq::new(a1.params, a1.kind, a1.radius.max(a2.radius));
    let (Some(b1), Some(b2)) = (bounds(a1), bounds(a2)) else {
        return Ok(out);
    };
    let phase = index_phase(&a1.params, a1.kind);
    let lo1 = b1.0 + b2.0;
    let lo2 = b1.2 + b2.2;
    let w1 = (b1.1 + b2.1 - lo1 + 1) as usize;
    let w2 = (b1.3 + b2.3 - lo2 + 1) as usize;
    let mut acc = vec![ZERO; w1 * w2];
    let right: Vec<((i64, i64), Complex64)> = a2.iter().collect();
    for ((m1, m2), x) in a1.iter() {
        for &((k1, k2), y) in &right {
            let idx = (m1 + k1 - lo1) as usize * w2 + (m2 + k2 - lo2) as usize;
            acc[idx] += x * y * phase.eval(m1, k2);
        }
    }
    for (idx, v) in acc.into_iter().enumerate() {
        if v.norm() >= PRUNE {
            let n1 = lo1 + (idx / w2) as i64;
            let n2 = lo2 + (idx % w2) as i64;
            out.entries.insert((n1, n2), v);
        }
    }
    Ok(out)
}

/// `tr(a1 # a2)` evaluated without forming the product: `sum a1(nu) a2(-nu) phi(nu, -nu)`.
pub fn trace_of_product(a1: &LatticeSeq, a2: &LatticeSeq) -> Result<Complex64> {
    a1.check_compatible(a2)?;
    let phase = index_phase(&a1.params, a1.kind);
    Ok(a1.iter().map(|((n1, n2), x)| x * a2.get(-n1, -n2) * phase.eval(n1, -n2)).sum())
}

/// `a*(nu) = phi(nu, nu) conj(a(-nu))` (conjugate cocycle on the adjoint lattice).
pub fn twisted_star(a: &LatticeSeq) -> LatticeSeq {
    let phase = index_phase(&a.params, a.kind);
    let mut out = LatticeSeq::new(a.params, a.kind, a.radius);
    for ((n1, n2), v) in a.iter() {
        let (m1, m2) = (-n1, -n2);
        out.entries.insert((m1, m2), phase.eval(m1, m2) * v.conj());
    }
    out
}

/// `tr(a) = a(0)` on `Lambda x Gamma`.
pub fn trace_l(a: &LatticeSeq) -> Result<Complex64> {
    a.check_kind(LatticeKind::TimeFreq)?;
    Ok(a.origin())
}

/// `tr°(b) = q |alpha beta| b(0)` on the adjoint lattice.
pub fn trace_r(b: &LatticeSeq) -> Result<Complex64> {
    b.check_kind(LatticeKind::Adjoint)?;
    Ok(b.origin() * b.params.density())
}

fn check_signal(params: &TorusParams, f: &GridSignal) -> Result<()> {
    if f.spec().channels != params.q {
        return Err(Error::GridMismatch(format!(
            "signal has {} channels, params require q = {}",
            f.spec().channels,
            params.q
        )));
    }
    Ok(())
}

/// Per-channel plane wave `e^{2 pi i (x_j gamma + k c / q)}` summed against coefficients.
struct WaveSum {
    waves: Vec<Complex64>,
}

impl WaveSum {
    fn new(n: usize, q: u32) -> Self {
        WaveSum { waves: vec![ZERO; n * q as usize] }
    }

    fn add(&mut self, f: &GridSignal, coeff: Complex64, gamma: f64, c: u32) {
        let spec = f.spec();
        let n = spec.samples;
        let q = spec.channels;
        for k in 0..q {
            let ch = coeff * expi(rem_q(k as i64 * c as i64, q) as f64 / q as f64);
            let row = &mut self.waves[k as usize * n..(k as usize + 1) * n];
            for (j, w) in row.iter_mut().enumerate() {
                *w += ch * expi(spec.x(j) * gamma);
            }
        }
    }
}

/// Entries of a sequence grouped by the first index.
fn rows(a: &LatticeSeq) -> BTreeMap<i64, Vec<(i64, Complex64)>> {
    let mut m: BTreeMap<i64, Vec<(i64, Complex64)>> = BTreeMap::new();
    for ((n1, n2), v) in a.iter() {
        m.entry(n1).or_default().push((n2, v));
    }
    m
}

/// `a . f = sum a(nu) pi(nu) f`
pub fn act_left(a: &LatticeSeq, f: &GridSignal) -> Result<GridSignal> {
    a.check_kind(LatticeKind::TimeFreq)?;
    check_signal(&a.params, f)?;
    let spec = *f.spec();
    let mut out = GridSignal::zeros(spec);
    for (n1, row) in rows(a) {
        let p0 = a.point(n1, 0);
        let tf = translate(f, p0.lambda, p0.l as i64);
        let mut w = WaveSum::new(spec.samples, spec.channels);
        for (n2, v) in row {
            let p = a.point(n1, n2);
            w.add(f, v, p.gamma, p.c);
        }
        for ((o, t), wv) in out.values_mut().iter_mut().zip(tf.values()).zip(&w.waves) {
            *o += wv * t;
        }
    }
    Ok(out)
}

/// `f . b = sum b(nu°) pi°(nu°) f`
pub fn act_right(f: &GridSignal, b: &LatticeSeq) -> Result<GridSignal> {
    b.check_kind(LatticeKind::Adjoint)?;
    check_signal(&b.params, f)?;
    let spec = *f.spec();
    let mut out = GridSignal::zeros(spec);
    for (n1, row) in rows(b) {
        let p0 = b.point(n1, 0);
        let mut w = WaveSum::new(spec.samples, spec.channels);
        for (n2, v) in row {
            let p = b.point(n1, n2);
            w.add(f, v, p.gamma, p.c);
        }
        let mut modded = f.clone();
        for (m, wv) in modded.values_mut().iter_mut().zip(&w.waves) {
            *m *= wv;
        }
        let shifted = translate(&modded, p0.lambda, p0.l as i64);
        out.axpy(Complex64::new(1.0, 0.0), &shifted)?;
    }
    Ok(out)
}

/// Sampled short-time transform: entries `sum_{k,j} u(x_j, k) e^{sign 2 pi i (x_j gamma + k c/q)} dx`
/// where `u = f conj(T g)` with `T` depending only on the first lattice index.
fn sampled_transform(
    params: &TorusParams,
    kind: LatticeKind,
    radius: f64,
    f: &GridSignal,
    g: &GridSignal,
    translate_sign: f64,
    wave_sign: f64,
    scale: f64,
) -> Result<LatticeSeq> {
    check_signal(params, f)?;
    check_signal(params, g)?;
    crate::signal::inner(f, g)?;
    if !(radius > 0.0) {
        return Err(Error::InvalidArgument(format!("radius must be positive, got {radius}")));
    }
    let spec = *f.spec();
    let n = spec.samples;
    let q = params.q;
    let gens = params.generators(kind);
    let b1 = index_bound(gens.time_step, radius);
    let b2 = index_bound(gens.freq_step, radius);
    let xs: Vec<f64> = (0..n).map(|j| spec.x(j)).collect();
    let waves: Vec<Vec<Complex64>> = (-b2..=b2)
        .map(|n2| {
            let gamma = gens.freq_step * n2 as f64;
            xs.iter().map(|x| expi(wave_sign * x * gamma)).collect()
        })
        .collect();
    let mut out = LatticeSeq::new(*params, kind, radius);
    let dx = spec.dx();
    for n1 in -b1..=b1 {
        let p0 = params.point(kind, n1, 0);
        let tg = translate(g, translate_sign * p0.lambda, translate_sign as i64 * p0.l as i64);
        let u: Vec<Complex64> = f.values().iter().zip(tg.values()).map(|(a, b)| a * b.conj()).collect();
        for (i2, n2) in (-b2..=b2).enumerate() {
            let c = params.point(kind, 0, n2).c;
            let mut total = ZERO;
            for k in 0..q {
                let row = &u[k as usize * n..(k as usize + 1) * n];
                let s: Complex64 = row.iter().zip(&waves[i2]).map(|(a, w)| a * w).sum();
                total += s * expi(wave_sign * rem_q(k as i64 * c as i64, q) as f64 / q as f64);
            }
            let v = total * dx * scale;
            if v != ZERO {
                out.entries.insert((n1, n2), v);
            }
        }
    }
    Ok(out)
}

/// `<f, g>(nu) = <f, pi(nu) g>` on `Lambda x Gamma`.
pub fn inner_left(f: &GridSignal, g: &GridSignal, params: &TorusParams, radius: f64) -> Result<LatticeSeq> {
    // <f, E T g> = sum f conj(T g) e^{-2 pi i (x gamma + k c / q)}
    sampled_transform(params, LatticeKind::TimeFreq, radius, f, g, 1.0, -1.0, 1.0)
}

/// `<f, g>°(nu°) = (q |alpha beta|)^{-1} <g, pi°(nu°) f>` on the adjoint lattice.
pub fn inner_right(f: &GridSignal, g: &GridSignal, params: &TorusParams, radius: f64) -> Result<LatticeSeq> {
    // <g, T E f> = <T^{-1} g, E f> is the conjugate of
    // sum f conj(T^{-1} g) e^{+2 pi i (x gamma + k c / q)}
    Ok(sampled_transform(params, LatticeKind::Adjoint, radius, f, g, -1.0, 1.0, 1.0 / params.density())?.conj())
}
