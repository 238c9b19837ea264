//! Sampled functions on R x Z_q and the time-frequency shift operators.
//!
//! The real line is modelled as a circle of circumference `L` sampled at
//! `x_j = -L/2 + j L/N`. Translations act spectrally so non-grid shifts are exact
//! for the periodised band-limited representative.

use std::cell::RefCell;
use std::f64::consts::PI;
use std::io::{BufRead, Write};
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::rem_q;

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

fn plans(n: usize) -> (Arc<dyn Fft<f64>>, Arc<dyn Fft<f64>>) {
    PLANNER.with(|p| {
        let mut p = p.borrow_mut();
        (p.plan_fft_forward(n), p.plan_fft_inverse(n))
    })
}

/// In-place unnormalised forward DFT.
pub fn fft_in_place(buf: &mut [Complex64]) {
    plans(buf.len()).0.process(buf);
}

/// In-place inverse DFT, normalised by `1/n`.
pub fn ifft_in_place(buf: &mut [Complex64]) {
    let n = buf.len();
    plans(n).1.process(buf);
    let s = 1.0 / n as f64;
    buf.iter_mut().for_each(|v| *v *= s);
}

/// `e^{2 pi i t}`
#[inline]
pub fn expi(t: f64) -> Complex64 {
    let a = 2.0 * PI * t;
    Complex64::new(a.cos(), a.sin())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub period: f64,
    pub samples: usize,
    pub channels: u32,
}

impl GridSpec {
    pub fn new(period: f64, samples: usize, channels: u32) -> Result<Self> {
        if !(period > 0.0 && period.is_finite()) {
            return Err(Error::InvalidGrid(format!("period must be positive, got {period}")));
        }
        if samples == 0 || samples % 2 != 0 {
            return Err(Error::InvalidGrid(format!("samples must be positive and even, got {samples}")));
        }
        if channels == 0 {
            return Err(Error::InvalidGrid("at least one channel is required".into()));
        }
        Ok(GridSpec { period, samples, channels })
    }

    /// Default `L = 16`, `N = 512`.
    pub fn standard(channels: u32) -> Self {
        GridSpec { period: 16.0, samples: 512, channels }
    }

    pub fn dx(&self) -> f64 {
        self.period / self.samples as f64
    }

    pub fn x(&self, j: usize) -> f64 {
        -self.period / 2.0 + j as f64 * self.dx()
    }

    /// FFT frequency of bin `m` (numpy `fftfreq` convention).
    pub fn freq(&self, m: usize) -> f64 {
        let n = self.samples as i64;
        let m = m as i64;
        let k = if m < n / 2 { m } else { m - n };
        k as f64 / self.period
    }

    pub fn len(&self) -> usize {
        self.samples * self.channels as usize
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Grid on which centred Fourier transforms live: spacing `1/L`, same sample count.
    pub fn dual(&self) -> GridSpec {
        GridSpec { period: self.samples as f64 / self.period, samples: self.samples, channels: self.channels }
    }

    fn check_same(&self, other: &GridSpec) -> Result<()> {
        if self.samples != other.samples
            || self.channels != other.channels
            || (self.period - other.period).abs() > 1e-12 * self.period
        {
            return Err(Error::GridMismatch(format!("{self:?} vs {other:?}")));
        }
        Ok(())
    }
}

/// A point `(lambda, l, gamma, c)` of the time-frequency plane, channels reduced mod q.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct PhasePoint {
    pub lambda: f64,
    pub l: u32,
    pub gamma: f64,
    pub c: u32,
}

impl PhasePoint {
    pub fn new(lambda: f64, l: i64, gamma: f64, c: i64, q: u32) -> Self {
        PhasePoint { lambda, l: rem_q(l, q), gamma, c: rem_q(c, q) }
    }

    pub fn plus(&self, other: &PhasePoint, q: u32) -> Self {
        PhasePoint::new(
            self.lambda + other.lambda,
            self.l as i64 + other.l as i64,
            self.gamma + other.gamma,
            self.c as i64 + other.c as i64,
            q,
        )
    }

    pub fn negated(&self, q: u32) -> Self {
        PhasePoint::new(-self.lambda, -(self.l as i64), -self.gamma, -(self.c as i64), q)
    }
}

/// `exp(-2 pi i (lambda1 gamma2 + l1 c2 / q))`
pub fn cocycle(nu1: &PhasePoint, nu2: &PhasePoint, q: u32) -> Complex64 {
    let lc = ((nu1.l as u64 * nu2.c as u64) % q as u64) as f64 / q as f64;
    expi(-(nu1.lambda * nu2.gamma + lc))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ShiftKind {
    /// `pi(nu) = E_{gamma,c} T_{lambda,l}`
    TimeFreq,
    /// `pi°(nu) = T_{lambda,l} E_{gamma,c}`
    FreqTime,
}

/// `q` channels of `N` complex samples, stored channel-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSignal {
    spec: GridSpec,
    values: Vec<Complex64>,
}

impl GridSignal {
    pub fn zeros(spec: GridSpec) -> Self {
        GridSignal { spec, values: vec![Complex64::new(0.0, 0.0); spec.len()] }
    }

    pub fn from_values(spec: GridSpec, values: Vec<Complex64>) -> Result<Self> {
        if values.len() != spec.len() {
            return Err(Error::GridMismatch(format!("expected {} values, got {}", spec.len(), values.len())));
        }
        if values.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
            return Err(Error::InvalidArgument("signal values must be finite".into()));
        }
        Ok(GridSignal { spec, values })
    }

    /// Samples `f(x_j, k)`.
    pub fn from_fn(spec: GridSpec, f: impl Fn(f64, u32) -> Complex64) -> Self {
        let mut values = Vec::with_capacity(spec.len());
        for k in 0..spec.channels {
            for j in 0..spec.samples {
                values.push(f(spec.x(j), k));
            }
        }
        GridSignal { spec, values }
    }

    pub fn spec(&self) -> &GridSpec {
        &self.spec
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [Complex64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<Complex64> {
        self.values
    }

    pub fn channel(&self, k: u32) -> &[Complex64] {
        let n = self.spec.samples;
        &self.values[k as usize * n..(k as usize + 1) * n]
    }

    pub fn channel_mut(&mut self, k: u32) -> &mut [Complex64] {
        let n = self.spec.samples;
        &mut self.values[k as usize * n..(k as usize + 1) * n]
    }

    pub fn get(&self, k: u32, j: usize) -> Complex64 {
        self.values[k as usize * self.spec.samples + j]
    }

    pub fn norm_sq(&self) -> f64 {
        self.spec.dx() * self.values.iter().map(|v| v.norm_sqr()).sum::<f64>()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    pub fn scaled(&self, a: Complex64) -> Self {
        GridSignal { spec: self.spec, values: self.values.iter().map(|v| v * a).collect() }
    }

    /// `self += a * other`
    pub fn axpy(&mut self, a: Complex64, other: &GridSignal) -> Result<()> {
        self.spec.check_same(&other.spec)?;
        for (x, y) in self.values.iter_mut().zip(&other.values) {
            *x += a * y;
        }
        Ok(())
    }

    pub fn add(&self, other: &GridSignal) -> Result<Self> {
        let mut out = self.clone();
        out.axpy(Complex64::new(1.0, 0.0), other)?;
        Ok(out)
    }

    pub fn sub(&self, other: &GridSignal) -> Result<Self> {
        let mut out = self.clone();
        out.axpy(Complex64::new(-1.0, 0.0), other)?;
        Ok(out)
    }

    /// Fraction of `||f||^2` carried outside `[-L/4, L/4]`.
    pub fn edge_mass(&self) -> f64 {
        let total: f64 = self.values.iter().map(|v| v.norm_sqr()).sum();
        if total == 0.0 {
            return 0.0;
        }
        let quarter = self.spec.period / 4.0;
        let mut outside = 0.0;
        for k in 0..self.spec.channels {
            for (j, v) in self.channel(k).iter().enumerate() {
                if self.spec.x(j).abs() > quarter {
                    outside += v.norm_sqr();
                }
            }
        }
        outside / total
    }

    /// Fraction of spectral energy in the upper half of the frequency band.
    pub fn spectral_tail_mass(&self) -> f64 {
        let n = self.spec.samples;
        let (mut tail, mut total) = (0.0, 0.0);
        for k in 0..self.spec.channels {
            let mut buf = self.channel(k).to_vec();
            fft_in_place(&mut buf);
            for (m, v) in buf.iter().enumerate() {
                let e = v.norm_sqr();
                total += e;
                let idx = if m < n / 2 { m } else { n - m };
                if idx >= n / 4 {
                    tail += e;
                }
            }
        }
        if total == 0.0 {
            0.0
        } else {
            tail / total
        }
    }

    /// Windows are trusted when their mass outside `[-L/4, L/4]` is below `1e-12`.
    pub fn is_localized(&self) -> bool {
        self.edge_mass() < 1e-12
    }

    pub fn write_columns<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "{} {} {}", self.spec.period, self.spec.samples, self.spec.channels)?;
        for k in 0..self.spec.channels {
            for (j, v) in self.channel(k).iter().enumerate() {
                writeln!(w, "{k} {j} {:.17e} {:.17e}", v.re, v.im)?;
            }
        }
        Ok(())
    }

    pub fn read_columns<R: BufRead>(r: R) -> Result<Self> {
        let mut lines = r
            .lines()
            .map(|l| l.map_err(Error::from))
            .filter(|l| l.as_ref().map_or(true, |s| !s.trim().is_empty() && !s.trim_start().starts_with('#')));
        let header = lines.next().ok_or_else(|| Error::Parse("missing header".into()))??;
        let h: Vec<&str> = header.split_whitespace().collect();
        if h.len() != 3 {
            return Err(Error::Parse(format!("header must be 'L N q', got '{header}'")));
        }
        let period: f64 = h[0].parse().map_err(|e| Error::Parse(format!("L: {e}")))?;
        let samples: usize = h[1].parse().map_err(|e| Error::Parse(format!("N: {e}")))?;
        let channels: u32 = h[2].parse().map_err(|e| Error::Parse(format!("q: {e}")))?;
        let spec = GridSpec::new(period, samples, channels)?;
        let mut values = vec![Complex64::new(f64::NAN, f64::NAN); spec.len()];
        let mut seen = 0usize;
        for line in lines {
            let line = line?;
            let f: Vec<&str> = line.split_whitespace().collect();
            if f.len() != 4 {
                return Err(Error::Parse(format!("row must be 'k j re im', got '{line}'")));
            }
            let k: usize = f[0].parse().map_err(|e| Error::Parse(format!("k: {e}")))?;
            let j: usize = f[1].parse().map_err(|e| Error::Parse(format!("j: {e}")))?;
            let re: f64 = f[2].parse().map_err(|e| Error::Parse(format!("re: {e}")))?;
            let im: f64 = f[3].parse().map_err(|e| Error::Parse(format!("im: {e}")))?;
            if k >= channels as usize || j >= samples {
                return Err(Error::Parse(format!("row index ({k}, {j}) out of range")));
            }
            values[k * samples + j] = Complex64::new(re, im);
            seen += 1;
        }
        if seen != spec.len() {
            return Err(Error::Parse(format!("expected {} rows, got {seen}", spec.len())));
        }
        GridSignal::from_values(spec, values)
    }
}

fn check_pair(f: &GridSignal, g: &GridSignal) -> Result<()> {
    f.spec.check_same(&g.spec)
}

/// `dx * sum f conj(g)`
pub fn inner(f: &GridSignal, g: &GridSignal) -> Result<Complex64> {
    check_pair(f, g)?;
    Ok(inner_unchecked(f, g))
}

pub(crate) fn inner_unchecked(f: &GridSignal, g: &GridSignal) -> Complex64 {
    let s: Complex64 = f.values.iter().zip(&g.values).map(|(a, b)| a * b.conj()).sum();
    s * f.spec.dx()
}

/// Translation `T_{lambda,l}`: `(T f)(x, k) = f(x - lambda, k - l)`.
pub fn translate(f: &GridSignal, lambda: f64, l: i64) -> GridSignal {
    let spec = f.spec;
    let q = spec.channels;
    let n = spec.samples;
    let mut out = GridSignal::zeros(spec);
    let phase: Option<Vec<Complex64>> = (lambda != 0.0).then(|| (0..n).map(|m| expi(-spec.freq(m) * lambda)).collect());
    for k in 0..q {
        let dst = rem_q(k as i64 + l, q);
        let src = f.channel(k);
        let d = out.channel_mut(dst);
        d.copy_from_slice(src);
        if let Some(ph) = &phase {
            fft_in_place(d);
            for (v, p) in d.iter_mut().zip(ph) {
                *v *= p;
            }
            ifft_in_place(d);
        }
    }
    out
}

/// Modulation `E_{gamma,c}`: multiplication by `e^{2 pi i (x gamma + k c / q)}`.
pub fn modulate(f: &GridSignal, gamma: f64, c: i64) -> GridSignal {
    let spec = f.spec;
    let q = spec.channels;
    let mut out = f.clone();
    let wave: Vec<Complex64> = (0..spec.samples).map(|j| expi(spec.x(j) * gamma)).collect();
    for k in 0..q {
        let ch = expi(rem_q(k as i64 * c, q) as f64 / q as f64);
        for (v, w) in out.channel_mut(k).iter_mut().zip(&wave) {
            *v *= w * ch;
        }
    }
    out
}

pub fn tf_shift(f: &GridSignal, nu: &PhasePoint, variant: ShiftKind) -> GridSignal {
    match variant {
        ShiftKind::TimeFreq => modulate(&translate(f, nu.lambda, nu.l as i64), nu.gamma, nu.c as i64),
        ShiftKind::FreqTime => translate(&modulate(f, nu.gamma, nu.c as i64), nu.lambda, nu.l as i64),
    }
}

/// `c_k e^{-pi x^2 - i lam x}` on channel `k`.
pub fn gaussian(spec: GridSpec, c: &[Complex64], lam: Complex64) -> Result<GridSignal> {
    if c.len() != spec.channels as usize {
        return Err(Error::InvalidArgument(format!("need {} channel weights, got {}", spec.channels, c.len())));
    }
    let profile = |x: f64| (-PI * x * x - I * lam * x).exp();
    let g = GridSignal::from_fn(spec, |x, k| c[k as usize] * profile(x));
    let peak = g.max_abs();
    if peak == 0.0 {
        return Ok(g);
    }
    let cmax = c.iter().map(|v| v.norm()).fold(0.0, f64::max);
    let half = spec.period / 2.0;
    let tail = cmax * profile(half).norm().max(profile(-half).norm()) / peak;
    if !(tail < 1e-12) {
        return Err(Error::PeriodTooSmall { tail });
    }
    Ok(g)
}

/// Standard Gaussian `e^{-pi x^2}` on every channel.
pub fn standard_gaussian(spec: GridSpec) -> GridSignal {
    gaussian(spec, &vec![Complex64::new(1.0, 0.0); spec.channels as usize], Complex64::new(0.0, 0.0))
        .expect("standard grid holds a unit Gaussian")
}

/// L2-normalised Hermite function of order `n`, placed on each channel with the given weights.
pub fn hermite(spec: GridSpec, n: usize, weights: &[Complex64]) -> Result<GridSignal> {
    if weights.len() != spec.channels as usize {
        return Err(Error::InvalidArgument(format!("need {} channel weights, got {}", spec.channels, weights.len())));
    }
    let profile: Vec<f64> = (0..spec.samples).map(|j| hermite_fn(n, spec.x(j))).collect();
    let mut g = GridSignal::zeros(spec);
    for k in 0..spec.channels {
        let w = weights[k as usize];
        for (v, p) in g.channel_mut(k).iter_mut().zip(&profile) {
            *v = w * p;
        }
    }
    Ok(g)
}

/// `psi_n(x)`, orthonormal in `L2(R)`, eigenfunctions of the Fourier transform.
pub fn hermite_fn(n: usize, x: f64) -> f64 {
    let mut prev = 0.0;
    let mut cur = 2f64.powf(0.25) * (-PI * x * x).exp();
    for k in 0..n {
        let next = (4.0 * PI / (k + 1) as f64).sqrt() * x * cur - (k as f64 / (k + 1) as f64).sqrt() * prev;
        prev = cur;
        cur = next;
    }
    cur
}

/// Spectral derivative per channel; the Nyquist bin is dropped.
pub fn apply_d(f: &GridSignal) -> GridSignal {
    let spec = f.spec;
    let n = spec.samples;
    let mut out = f.clone();
    for k in 0..spec.channels {
        let d = out.channel_mut(k);
        fft_in_place(d);
        for (m, v) in d.iter_mut().enumerate() {
            *v *= if m == n / 2 { Complex64::new(0.0, 0.0) } else { 2.0 * PI * I * spec.freq(m) };
        }
        ifft_in_place(d);
    }
    out
}

/// Multiplication by the coordinate `x_j`.
pub fn apply_m(f: &GridSignal) -> GridSignal {
    let spec = f.spec;
    let mut out = f.clone();
    for k in 0..spec.channels {
        for (j, v) in out.channel_mut(k).iter_mut().enumerate() {
            *v *= spec.x(j);
        }
    }
    out
}

/// `f†(x, k) = conj(f(-x, -k))`
pub fn involution_dagger(f: &GridSignal) -> GridSignal {
    let spec = f.spec;
    let n = spec.samples;
    let q = spec.channels;
    let mut out = GridSignal::zeros(spec);
    for k in 0..q {
        let src = f.channel(rem_q(-(k as i64), q));
        let d = out.channel_mut(k);
        for j in 0..n {
            d[j] = src[(n - j) % n].conj();
        }
    }
    out
}

/// Centred Fourier transform `F(xi_m) = dx sum_j f(x_j) e^{-2 pi i xi_m x_j}`, sampled on
/// `spec.dual()`.
pub fn fourier(f: &GridSignal) -> GridSignal {
    let spec = f.spec;
    let n = spec.samples;
    let dual = spec.dual();
    let mut out = GridSignal::zeros(dual);
    // N even: e^{-i pi N/2} = (-1)^{N/2}
    let global = if (n / 2) % 2 == 0 { 1.0 } else { -1.0 } * spec.dx();
    for k in 0..spec.channels {
        let d = out.channel_mut(k);
        for (j, v) in f.channel(k).iter().enumerate() {
            d[j] = if j % 2 == 0 { *v } else { -*v };
        }
        fft_in_place(d);
        for (m, v) in d.iter_mut().enumerate() {
            *v *= if m % 2 == 0 { global } else { -global };
        }
    }
    out
}

/// Inverse of [`fourier`]; the argument lives on the dual grid.
pub fn inverse_fourier(fhat: &GridSignal, spec: GridSpec) -> Result<GridSignal> {
    fhat.spec.check_same(&spec.dual())?;
    let n = spec.samples;
    let mut out = GridSignal::zeros(spec);
    let global = if (n / 2) % 2 == 0 { 1.0 } else { -1.0 } / spec.dx();
    for k in 0..spec.channels {
        let d = out.channel_mut(k);
        for (m, v) in fhat.channel(k).iter().enumerate() {
            d[m] = if m % 2 == 0 { *v } else { -*v };
        }
        ifft_in_place(d);
        for (j, v) in d.iter_mut().enumerate() {
            *v *= if j % 2 == 0 { global } else { -global };
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn c1(x: f64) -> Complex64 {
        Complex64::new(x, 0.0)
    }

    fn max_diff(a: &GridSignal, b: &GridSignal) -> f64 {
        a.values().iter().zip(b.values()).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
    }

    fn test_window(q: u32) -> GridSignal {
        let spec = GridSpec::standard(q);
        let c: Vec<Complex64> = (0..q).map(|k| Complex64::new(1.0 + 0.3 * k as f64, 0.2 * k as f64)).collect();
        gaussian(spec, &c, Complex64::new(0.7, -0.4)).unwrap()
    }

    #[test]
    fn grid_validation() {
        assert!(GridSpec::new(16.0, 511, 1).is_err());
        assert!(GridSpec::new(-1.0, 512, 1).is_err());
        assert!(GridSpec::new(16.0, 512, 0).is_err());
        let s = GridSpec::new(16.0, 512, 2).unwrap();
        assert_eq!(s.dx(), 1.0 / 32.0);
        assert_eq!(s.x(0), -8.0);
        assert_eq!(s.x(256), 0.0);
    }

    #[test]
    fn cocycle_examples() {
        let q = 2;
        let zero = PhasePoint::default();
        let nu = PhasePoint::new(0.3, 1, -1.7, 1, q);
        assert!((cocycle(&zero, &nu, q) - c1(1.0)).norm() < 1e-15);
        let a = PhasePoint::new(0.5, 1, 0.0, 0, q);
        let b = PhasePoint::new(0.0, 0, 1.0, 1, q);
        assert!((cocycle(&a, &b, q) - c1(1.0)).norm() < 1e-14);
        let m = PhasePoint::new(0.3, 1, 0.9, 0, 3);
        let n = PhasePoint::new(-1.1, 2, 0.4, 2, 3);
        assert!((cocycle(&m.negated(3), &n, 3) - cocycle(&m, &n, 3).conj()).norm() < 1e-14);
        assert!((cocycle(&m, &n.negated(3), 3) - cocycle(&m, &n, 3).conj()).norm() < 1e-14);
    }

    #[test]
    fn standard_gaussian_norm() {
        let g = standard_gaussian(GridSpec::standard(1));
        assert!((g.norm_sq() - 0.5f64.sqrt()).abs() < 1e-14);
        assert!(g.is_localized());
    }

    #[test]
    fn channel_supported_gaussian() {
        let spec = GridSpec::standard(3);
        let g = gaussian(spec, &[c1(1.0), c1(0.0), c1(0.0)], c1(0.0)).unwrap();
        let g1 = standard_gaussian(GridSpec::standard(1));
        assert!((g.norm() - g1.norm()).abs() < 1e-15);
    }

    #[test]
    fn gaussian_rejects_short_period() {
        let spec = GridSpec::new(4.0, 128, 1).unwrap();
        assert!(matches!(gaussian(spec, &[c1(1.0)], c1(0.0)), Err(Error::PeriodTooSmall { .. })));
        let spec = GridSpec::standard(1);
        // Im(lam) shifts the envelope's peak far from the origin
        assert!(gaussian(spec, &[c1(1.0)], Complex64::new(0.0, 40.0)).is_err());
    }

    #[test]
    fn zero_shift_is_identity() {
        let f = test_window(2);
        for v in [ShiftKind::TimeFreq, ShiftKind::FreqTime] {
            assert_eq!(tf_shift(&f, &PhasePoint::default(), v), f);
        }
    }

    #[test]
    fn shift_composition() {
        let q = 3;
        let f = test_window(q);
        let n1 = PhasePoint::new(0.37, 1, -0.83, 2, q);
        let n2 = PhasePoint::new(-1.21, 2, 0.55, 1, q);
        let lhs = tf_shift(&tf_shift(&f, &n2, ShiftKind::TimeFreq), &n1, ShiftKind::TimeFreq);
        let rhs = tf_shift(&f, &n1.plus(&n2, q), ShiftKind::TimeFreq).scaled(cocycle(&n1, &n2, q));
        assert!(max_diff(&lhs, &rhs) < 1e-8);

        let lhs = tf_shift(&tf_shift(&f, &n2, ShiftKind::FreqTime), &n1, ShiftKind::FreqTime);
        let rhs = tf_shift(&f, &n1.plus(&n2, q), ShiftKind::FreqTime).scaled(cocycle(&n2, &n1, q).conj());
        assert!(max_diff(&lhs, &rhs) < 1e-8);
    }

    #[test]
    fn commutation_phase() {
        let q = 2;
        let f = test_window(q);
        let nu = PhasePoint::new(0.61, 1, 1.3, 1, q);
        let et = tf_shift(&f, &nu, ShiftKind::TimeFreq);
        let te = tf_shift(&f, &nu, ShiftKind::FreqTime);
        // pi(nu) = conj(phi(nu, nu)) pi°(nu)
        assert!(max_diff(&et, &te.scaled(cocycle(&nu, &nu, q).conj())) < 1e-8);
        assert!(max_diff(&et, &te.scaled(cocycle(&nu, &nu, q))) > 1e-2);
    }

    #[test]
    fn adjoint_relation() {
        let q = 2;
        let f = test_window(q);
        let g = gaussian(GridSpec::standard(q), &[c1(0.4), Complex64::new(0.0, 1.0)], c1(-0.3)).unwrap();
        let nu = PhasePoint::new(0.9, 1, -0.45, 1, q);
        // pi(nu)* = pi°(-nu)
        let lhs = inner(&tf_shift(&f, &nu, ShiftKind::TimeFreq), &g).unwrap();
        let rhs = inner(&f, &tf_shift(&g, &nu.negated(q), ShiftKind::FreqTime)).unwrap();
        assert!((lhs - rhs).norm() < 1e-8);
        let rhs2 = inner(&f, &tf_shift(&g, &nu.negated(q), ShiftKind::TimeFreq)).unwrap() * cocycle(&nu, &nu, q).conj();
        assert!((lhs - rhs2).norm() < 1e-8);
    }

    #[test]
    fn ambiguity_of_unit_gaussian() {
        let spec = GridSpec::standard(1);
        let g0 = standard_gaussian(spec);
        let g = g0.scaled(c1(1.0 / g0.norm()));
        for (lam, gam) in [(0.5, 0.0), (1.25, -0.75), (-2.0, 1.5), (0.13, 2.7)] {
            let nu = PhasePoint::new(lam, 0, gam, 0, 1);
            let v = inner(&tf_shift(&g, &nu, ShiftKind::TimeFreq), &g).unwrap().norm();
            // oracle: closed-form Gaussian integral evaluated by an independent quadrature
            let h = 1e-3;
            let quad: Complex64 = (-12000..=12000)
                .map(|i| {
                    let x = i as f64 * h;
                    let a = (-PI * (x - lam).powi(2)).exp() * (-PI * x * x).exp();
                    expi(x * gam) * a * h * 2f64.sqrt()
                })
                .sum();
            assert!((v - quad.norm()).abs() < 1e-10);
            assert!((v - (-PI * (lam * lam + gam * gam) / 2.0).exp()).abs() < 1e-10);
        }
    }

    #[test]
    fn derivative_of_gaussian() {
        let g = standard_gaussian(GridSpec::standard(1));
        let lhs = apply_d(&g);
        let rhs = apply_m(&g).scaled(c1(-2.0 * PI));
        assert!(max_diff(&lhs, &rhs) < 1e-10);
        let z = GridSignal::zeros(GridSpec::standard(2));
        assert_eq!(apply_d(&z), z);
    }

    #[test]
    fn fourier_intertwining() {
        let f = test_window(2);
        let lhs = fourier(&apply_d(&f));
        let rhs = apply_m(&fourier(&f)).scaled(2.0 * PI * I);
        assert!(max_diff(&lhs, &rhs) < 1e-8);
        let back = inverse_fourier(&fourier(&f), *f.spec()).unwrap();
        assert!(max_diff(&back, &f) < 1e-13);
        // the unit Gaussian is its own transform
        let g = standard_gaussian(GridSpec::standard(1));
        let gh = fourier(&g);
        let expect = GridSignal::from_fn(gh.spec, |x, _| c1((-PI * x * x).exp()));
        assert!(max_diff(&gh, &expect) < 1e-12);
    }

    #[test]
    fn commutator_dm() {
        let f = test_window(3);
        let dm = apply_d(&apply_m(&f));
        let md = apply_m(&apply_d(&f));
        assert!(max_diff(&dm.sub(&md).unwrap(), &f) < 1e-8);
    }

    #[test]
    fn gaussian_eigen_relation() {
        // (2 pi i M + i D) g = lam g
        let spec = GridSpec::standard(2);
        let lam = Complex64::new(0.8, 0.35);
        let g = gaussian(spec, &[c1(1.0), Complex64::new(-0.5, 0.5)], lam).unwrap();
        let lhs = apply_m(&g).scaled(2.0 * PI * I).add(&apply_d(&g).scaled(I)).unwrap();
        assert!(max_diff(&lhs, &g.scaled(lam)) < 1e-9);
    }

    #[test]
    fn dagger_properties() {
        let f = test_window(3);
        assert_eq!(involution_dagger(&involution_dagger(&f)), f);
        let g = gaussian(GridSpec::standard(1), &[c1(1.0)], c1(1.3)).unwrap();
        assert!(max_diff(&involution_dagger(&g), &g) < 1e-14);
        let e = GridSignal::from_fn(GridSpec::standard(1), |x, _| c1((-x * x).exp() * (1.0 + x * x)));
        assert!(max_diff(&involution_dagger(&e), &e) < 1e-15);
    }

    #[test]
    fn hermite_orthonormal() {
        let spec = GridSpec::standard(1);
        let hs: Vec<_> = (0..10).map(|n| hermite(spec, n, &[c1(1.0)]).unwrap()).collect();
        for (a, ha) in hs.iter().enumerate() {
            for (b, hb) in hs.iter().enumerate() {
                let v = inner(ha, hb).unwrap();
                let want = if a == b { 1.0 } else { 0.0 };
                assert!((v - c1(want)).norm() < 1e-12, "{a} {b} {v}");
            }
        }
        // Fourier eigenfunction with eigenvalue (-i)^n
        for (n, h) in hs.iter().enumerate() {
            let fh = fourier(h);
            let expect = GridSignal::from_fn(fh.spec, |x, _| (-I).powu(n as u32) * hermite_fn(n, x));
            assert!(max_diff(&fh, &expect) < 1e-10);
        }
    }

    #[test]
    fn columnar_round_trip() {
        let f = test_window(2);
        let mut buf = Vec::new();
        f.write_columns(&mut buf).unwrap();
        let g = GridSignal::read_columns(&buf[..]).unwrap();
        assert_eq!(f, g);
        assert!(GridSignal::read_columns(&b"16 512 1\n0 0 1 0\n"[..]).is_err());
        assert!(GridSignal::read_columns(&b"16 4 1\n0 0 1 0\n0 1 1 0\n0 2 1 0\n0 9 1 0\n"[..]).is_err());
    }

    #[test]
    fn diagnostics() {
        let g = standard_gaussian(GridSpec::standard(1));
        assert!(g.edge_mass() < 1e-30);
        assert!(g.spectral_tail_mass() < 1e-30);
        let spike = GridSignal::from_fn(GridSpec::standard(1), |x, _| c1(if x == 6.0 { 1.0 } else { 0.0 }));
        assert!(!spike.is_localized());
        assert!(spike.spectral_tail_mass() > 0.4);
    }

    proptest! {
        #[test]
        fn shifts_are_unitary(lam in -4.0f64..4.0, gam in -4.0f64..4.0, l in 0i64..3, c in 0i64..3) {
            let f = test_window(3);
            let nu = PhasePoint::new(lam, l, gam, c, 3);
            for v in [ShiftKind::TimeFreq, ShiftKind::FreqTime] {
                let s = tf_shift(&f, &nu, v);
                prop_assert!((s.norm() - f.norm()).abs() < 1e-8);
            }
        }

        #[test]
        fn inner_is_hermitian(lam in -3.0f64..3.0, gam in -3.0f64..3.0) {
            let f = test_window(2);
            let g = tf_shift(&f, &PhasePoint::new(lam, 1, gam, 0, 2), ShiftKind::TimeFreq);
            let a = inner(&f, &g).unwrap();
            let b = inner(&g, &f).unwrap();
            prop_assert!((a - b.conj()).norm() < 1e-14);
            prop_assert!(inner(&f, &f).unwrap().re >= 0.0);
        }
    }
}
