//! The continuous picture: full phase-space short-time transforms, the Moyal identity,
//! continuous energy and Chern number, and the Gaussian eigen-relation.
//!
//! Phase space is sampled at time shifts `x_s = s * stride * dx` (centred) and at the
//! frequencies of the centred Fourier grid, so the quadrature is the trapezoid rule on the
//! periodised grid. With unit strides the Moyal identity is the discrete Parseval identity.

use std::f64::consts::PI;
use std::str::FromStr;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::covariant_combination;
use crate::lattice::rem_q;
use crate::signal::{
    cocycle, expi, fourier, gaussian, hermite, inner, inverse_fourier, standard_gaussian, GridSignal, GridSpec,
    PhasePoint,
};

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };

/// Sampling of `R x Z_q x R^ x Z_q^` used for phase-space quadrature.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhaseGrid {
    pub spec: GridSpec,
    /// Time shifts are multiples of `time_stride * dx`.
    pub time_stride: usize,
    /// Frequencies are every `freq_stride`-th node of the centred frequency grid.
    pub freq_stride: usize,
}

impl PhaseGrid {
    pub fn full(spec: GridSpec) -> Self {
        PhaseGrid { spec, time_stride: 1, freq_stride: 1 }
    }

    /// Grid with the same step `h` in time and frequency.
    pub fn with_step(spec: GridSpec, step: f64) -> Result<Self> {
        let ts = step / spec.dx();
        let fs = step * spec.period;
        let near = |v: f64| (v - v.round()).abs() < 1e-9 && v.round() >= 1.0;
        if !(near(ts) && near(fs)) {
            return Err(Error::InvalidArgument(format!(
                "step {step} must be a multiple of both dx = {} and 1/L = {}",
                spec.dx(),
                1.0 / spec.period
            )));
        }
        let (ts, fs) = (ts.round() as usize, fs.round() as usize);
        if spec.samples % ts != 0 || spec.samples % fs != 0 {
            return Err(Error::InvalidArgument(format!("step {step} does not divide the grid evenly")));
        }
        Ok(PhaseGrid { spec, time_stride: ts, freq_stride: fs })
    }

    pub fn time_count(&self) -> usize {
        self.spec.samples / self.time_stride
    }

    pub fn freq_count(&self) -> usize {
        self.spec.samples / self.freq_stride
    }

    /// Signed sample shift of time node `s`.
    pub fn shift_samples(&self, s: usize) -> i64 {
        let n = self.time_count() as i64;
        let s = s as i64;
        let signed = if s < n / 2 { s } else { s - n };
        signed * self.time_stride as i64
    }

    pub fn time(&self, s: usize) -> f64 {
        self.shift_samples(s) as f64 * self.spec.dx()
    }

    /// Frequency of node `m`; node `freq_count/2` is zero.
    pub fn freq(&self, m: usize) -> f64 {
        let n = self.spec.samples;
        (m * self.freq_stride) as f64 / self.spec.period - n as f64 / (2.0 * self.spec.period)
    }

    /// Quadrature weight per node (the same for every node).
    pub fn weight(&self) -> f64 {
        self.time_stride as f64 * self.spec.dx() * self.freq_stride as f64 / self.spec.period
    }
}

/// `V_g f(x, l, omega, c) = <f, E_{omega,c} T_{x,l} g>` on a phase grid.
#[derive(Debug, Clone, PartialEq)]
pub struct PhasePlane {
    pub grid: PhaseGrid,
    /// indexed `[((l * q + c) * time_count + s) * freq_count + m]`
    values: Vec<Complex64>,
}

impl PhasePlane {
    fn index(&self, l: u32, c: u32, s: usize, m: usize) -> usize {
        let q = self.grid.spec.channels as usize;
        ((l as usize * q + c as usize) * self.grid.time_count() + s) * self.grid.freq_count() + m
    }

    pub fn get(&self, l: u32, c: u32, s: usize, m: usize) -> Complex64 {
        self.values[self.index(l, c, s, m)]
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    /// `sum |V|^2 w(x, omega) dnu` over all nodes and channel pairs.
    pub fn integrate(&self, weight: impl Fn(f64, f64) -> f64) -> f64 {
        let g = &self.grid;
        let q = g.spec.channels;
        let mut total = 0.0;
        for l in 0..q {
            for c in 0..q {
                for s in 0..g.time_count() {
                    let x = g.time(s);
                    for m in 0..g.freq_count() {
                        total += self.get(l, c, s, m).norm_sqr() * weight(x, g.freq(m));
                    }
                }
            }
        }
        total * g.weight()
    }
}

fn shifted_conj(g: &GridSignal, shift: i64, l: u32) -> GridSignal {
    let spec = *g.spec();
    let n = spec.samples as i64;
    let q = spec.channels;
    let mut out = GridSignal::zeros(spec);
    for k in 0..q {
        let src = g.channel(rem_q(k as i64 - l as i64, q));
        let d = out.channel_mut(k);
        for j in 0..n {
            d[j as usize] = src[(j - shift).rem_euclid(n) as usize].conj();
        }
    }
    out
}

/// Short-time transform of `f` with window `g` on the whole phase grid.
pub fn stft_plane(f: &GridSignal, g: &GridSignal, grid: PhaseGrid) -> Result<PhasePlane> {
    inner(f, g)?;
    if *f.spec() != grid.spec {
        return Err(Error::GridMismatch(format!("{:?} vs {:?}", f.spec(), grid.spec)));
    }
    let q = grid.spec.channels;
    let (nt, nf) = (grid.time_count(), grid.freq_count());
    let mut values = vec![ZERO; (q * q) as usize * nt * nf];
    let chan: Vec<Complex64> = (0..q).map(|t| expi(-(t as f64) / q as f64)).collect();
    for l in 0..q {
        for s in 0..nt {
            let gs = shifted_conj(g, grid.shift_samples(s), l);
            let mut u = f.clone();
            for (a, b) in u.values_mut().iter_mut().zip(gs.values()) {
                *a *= b;
            }
            let uh = fourier(&u);
            for c in 0..q {
                for m in 0..nf {
                    let mm = m * grid.freq_stride;
                    let mut v = ZERO;
                    for k in 0..q {
                        v += chan[rem_q(k as i64 * c as i64, q) as usize] * uh.get(k, mm);
                    }
                    values[((l * q + c) as usize * nt + s) * nf + m] = v;
                }
            }
        }
    }
    Ok(PhasePlane { grid, values })
}

/// `sum_{l,c} int V(nu) pi(nu) g dnu`; on a full grid this is the continuous frame operator.
pub fn synthesize(plane: &PhasePlane, g: &GridSignal) -> Result<GridSignal> {
    let grid = plane.grid;
    if grid.time_stride != 1 || grid.freq_stride != 1 {
        return Err(Error::InvalidArgument("synthesis needs the full phase grid".into()));
    }
    let spec = grid.spec;
    let q = spec.channels;
    let mut out = GridSignal::zeros(spec);
    let chan: Vec<Complex64> = (0..q).map(|t| expi(t as f64 / q as f64)).collect();
    for l in 0..q {
        for s in 0..grid.time_count() {
            // undo the frequency transform channel by channel, then the channel transform
            let mut uh = GridSignal::zeros(spec.dual());
            for k in 0..q {
                let row = uh.channel_mut(k);
                for c in 0..q {
                    let ph = chan[rem_q(k as i64 * c as i64, q) as usize];
                    for (m, r) in row.iter_mut().enumerate() {
                        *r += ph * plane.get(l, c, s, m);
                    }
                }
            }
            let u = inverse_fourier(&uh, spec)?;
            let gs = shifted_conj(g, grid.shift_samples(s), l);
            let scale = grid.weight() * spec.period;
            for ((o, uv), gv) in out.values_mut().iter_mut().zip(u.values()).zip(gs.values()) {
                *o += uv * gv.conj() * scale;
            }
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MoyalReport {
    pub lhs: f64,
    pub rhs: f64,
    pub relative_error: f64,
}

/// `sum_{l,c} int |<f, E T g>|^2 = q ||g||^2 ||f||^2`
pub fn moyal_check(f: &GridSignal, g: &GridSignal) -> Result<MoyalReport> {
    let plane = stft_plane(f, g, PhaseGrid::full(*f.spec()))?;
    let lhs = plane.integrate(|_, _| 1.0);
    let rhs = f.spec().channels as f64 * g.norm_sq() * f.norm_sq();
    Ok(MoyalReport { lhs, rhs, relative_error: (lhs - rhs).abs() / rhs })
}

/// `E(g) = (pi / ||g||^4) sum_{l,c} int (x^2 + omega^2) |V_g g|^2`
pub fn continuous_energy(g: &GridSignal) -> Result<f64> {
    let n2 = g.norm_sq();
    if n2 == 0.0 {
        return Err(Error::InvalidArgument("zero window".into()));
    }
    let plane = stft_plane(g, g, PhaseGrid::full(*g.spec()))?;
    Ok(PI * plane.integrate(|x, w| x * x + w * w) / (n2 * n2))
}

/// Default quadrature step for [`continuous_chern`].
pub const CHERN_STEP: f64 = 0.25;
/// Default half-width for [`continuous_chern`].
pub const CHERN_EXTENT: f64 = 4.0;

/// Continuous Chern number of `p = <g, S^{-1} g>` with `S = q ||g||^2`:
/// `c1 = (q^2 / (2 pi i)) tr(p [d1 p, d2 p])`, evaluated by a trapezoid double sum with
/// equal steps `step` in time and frequency over `|x|, |omega| <= extent`.
pub fn continuous_chern(g: &GridSignal, step: f64, extent: f64) -> Result<Complex64> {
    let spec = *g.spec();
    let q = spec.channels;
    let grid = PhaseGrid::with_step(spec, step)?;
    let plane = stft_plane(g, g, grid)?;
    let norm = q as f64 * g.norm_sq();
    let kmax = (extent / step + 1e-9).floor() as i64;
    let nt = grid.time_count() as i64;
    let nf = grid.freq_count() as i64;
    if 2 * kmax >= nt.min(nf) {
        return Err(Error::InvalidArgument(format!("extent {extent} exceeds the phase grid")));
    }
    // node coordinates: integer multiples (a, b) of the step
    let side = (2 * kmax + 1) as usize;
    let idx = |a: i64, b: i64| ((a + kmax) as usize) * side + (b + kmax) as usize;
    let mut p = vec![ZERO; (q * q) as usize * side * side];
    for l in 0..q {
        for c in 0..q {
            for a in -kmax..=kmax {
                let s = a.rem_euclid(nt) as usize;
                for b in -kmax..=kmax {
                    let m = (b + nf / 2) as usize;
                    p[(l * q + c) as usize * side * side + idx(a, b)] = plane.get(l, c, s, m) / norm;
                }
            }
        }
    }
    let at = |l: u32, c: u32, a: i64, b: i64| -> Option<Complex64> {
        (a.abs() <= kmax && b.abs() <= kmax).then(|| p[(l * q + c) as usize * side * side + idx(a, b)])
    };
    let h = step;
    let mut total = ZERO;
    for l1 in 0..q {
        for c1 in 0..q {
            for a1 in -kmax..=kmax {
                for b1 in -kmax..=kmax {
                    let p1 = at(l1, c1, a1, b1).unwrap();
                    if p1.norm() < 1e-300 {
                        continue;
                    }
                    let nu = PhasePoint::new(a1 as f64 * h, l1 as i64, b1 as f64 * h, c1 as i64, q);
                    let self_phase = cocycle(&nu, &nu.negated(q), q);
                    for l2 in 0..q {
                        for c2 in 0..q {
                            let (l3, c3) = (rem_q(-(l1 as i64) - l2 as i64, q), rem_q(-(c1 as i64) - c2 as i64, q));
                            for a2 in -kmax..=kmax {
                                for b2 in -kmax..=kmax {
                                    let w = (a1 * b2 - a2 * b1) as f64;
                                    if w == 0.0 {
                                        continue;
                                    }
                                    let Some(p3) = at(l3, c3, -a1 - a2, -b1 - b2) else { continue };
                                    let p2 = at(l2, c2, a2, b2).unwrap();
                                    let nup = PhasePoint::new(a2 as f64 * h, l2 as i64, b2 as f64 * h, c2 as i64, q);
                                    let nupp = PhasePoint::new(
                                        (-a1 - a2) as f64 * h,
                                        l3 as i64,
                                        (-b1 - b2) as f64 * h,
                                        c3 as i64,
                                        q,
                                    );
                                    total += w * p1 * p2 * p3 * cocycle(&nup, &nupp, q) * self_phase;
                                }
                            }
                        }
                    }
                }
            }
        }
    }
    // (lambda gamma' - lambda' gamma) = h^2 w; two area elements h^4; d1, d2 give (2 pi i)^2
    let qq = (q * q) as f64;
    let i = Complex64::new(0.0, 1.0);
    Ok(total * h * h * h.powi(4) * qq * (-4.0 * PI * PI) / (2.0 * PI * i))
}

/// `sum |V_g f| (1 + |x| + |omega|)^s` with the unit Gaussian as analysis window.
pub fn m1s_diagnostic(f: &GridSignal, s: f64) -> Result<f64> {
    let spec = *f.spec();
    let g0 = standard_gaussian(spec);
    let g = g0.scaled(Complex64::new(1.0 / g0.norm(), 0.0));
    let plane = stft_plane(f, &g, PhaseGrid::full(spec))?;
    let grid = plane.grid;
    let q = spec.channels;
    let mut total = 0.0;
    for l in 0..q {
        for c in 0..q {
            for t in 0..grid.time_count() {
                let x = grid.time(t);
                for m in 0..grid.freq_count() {
                    total += plane.get(l, c, t, m).norm() * (1.0 + x.abs() + grid.freq(m).abs()).powf(s);
                }
            }
        }
    }
    Ok(total * grid.weight())
}

/// Continuous right inner product, a scalar: `<f, g>° = q <g, f>`.
pub fn continuous_inner_right(f: &GridSignal, g: &GridSignal) -> Result<Complex64> {
    Ok(inner(g, f)? * f.spec().channels as f64)
}

/// Continuous right trace: `tr°(b) = b / q`.
pub fn continuous_trace_r(b: Complex64, q: u32) -> Complex64 {
    b / q as f64
}

/// Continuous left trace of `<f, g> = V_g f`: its value at the origin.
pub fn continuous_trace_l(f: &GridSignal, g: &GridSignal) -> Result<Complex64> {
    let plane = stft_plane(f, g, PhaseGrid::full(*f.spec()))?;
    Ok(plane.get(0, 0, 0, plane.grid.freq_count() / 2))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EigenFit {
    pub lambda: Complex64,
    pub residual: f64,
}

/// Least-squares eigenvalue of `nabla_1 + sign i nabla_2` at `g` and the relative residual.
pub fn eigen_residual(g: &GridSignal, sign: f64) -> Result<EigenFit> {
    let n2 = g.norm_sq();
    if n2 == 0.0 {
        return Err(Error::InvalidArgument("zero window".into()));
    }
    let dg = covariant_combination(g, sign)?;
    let lambda = inner(&dg, g)? / n2;
    let residual = dg.sub(&g.scaled(lambda))?.norm() / n2.sqrt();
    Ok(EigenFit { lambda, residual })
}

/// Window families of the screening corpus.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CorpusWindow {
    /// `c_k e^{-pi x^2 - i lambda x}`
    Gaussian {
        c: Vec<Complex64>,
        lambda: Complex64,
    },
    Hermite {
        n: usize,
    },
    /// `e^{-pi width x^2}` on every channel.
    Squeezed {
        width: f64,
    },
    /// Cubic B-spline of the given support width on every channel.
    Bspline {
        width: f64,
    },
    /// Random combination of shifted, modulated unit Gaussians.
    Random {
        seed: u64,
        terms: usize,
    },
    /// Unit Gaussian plus `eps` times a Hermite function of order `n`.
    Mixture {
        n: usize,
        eps: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusEntry {
    pub name: String,
    pub q: u32,
    pub window: CorpusWindow,
}

fn cubic_bspline(t: f64) -> f64 {
    let t = t.abs();
    if t < 1.0 {
        2.0 / 3.0 - t * t + t * t * t / 2.0
    } else if t < 2.0 {
        (2.0 - t).powi(3) / 6.0
    } else {
        0.0
    }
}

impl CorpusEntry {
    pub fn is_generalized_gaussian(&self) -> bool {
        matches!(self.window, CorpusWindow::Gaussian { .. })
    }

    pub fn build(&self, period: f64, samples: usize) -> Result<GridSignal> {
        let spec = GridSpec::new(period, samples, self.q)?;
        let ones = vec![Complex64::new(1.0, 0.0); self.q as usize];
        match &self.window {
            CorpusWindow::Gaussian { c, lambda } => gaussian(spec, c, *lambda),
            CorpusWindow::Hermite { n } => hermite(spec, *n, &ones),
            CorpusWindow::Squeezed { width } => {
                Ok(GridSignal::from_fn(spec, |x, _| Complex64::new((-PI * width * x * x).exp(), 0.0)))
            }
            CorpusWindow::Bspline { width } => {
                Ok(GridSignal::from_fn(spec, |x, _| Complex64::new(cubic_bspline(4.0 * x / width), 0.0)))
            }
            CorpusWindow::Random { seed, terms } => {
                let mut rng = ChaCha8Rng::seed_from_u64(*seed);
                let mut out = GridSignal::zeros(spec);
                for _ in 0..*terms {
                    let (x0, w0) = (rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
                    let coeff: Vec<Complex64> = (0..self.q)
                        .map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
                        .collect();
                    let term = GridSignal::from_fn(spec, |x, k| {
                        coeff[k as usize] * (-PI * (x - x0) * (x - x0)).exp() * expi(w0 * x)
                    });
                    out.axpy(Complex64::new(1.0, 0.0), &term)?;
                }
                Ok(out)
            }
            CorpusWindow::Mixture { n, eps } => {
                let mut g = standard_gaussian(spec);
                let h = hermite(spec, *n, &ones)?;
                let s = eps * g.norm() / h.norm();
                g.axpy(Complex64::new(s, 0.0), &h)?;
                Ok(g)
            }
        }
    }
}

fn parse_complex(s: &str) -> Result<Complex64> {
    Complex64::from_str(s).map_err(|e| Error::Parse(format!("complex '{s}': {e}")))
}

fn parse_num<T: FromStr>(s: &str, what: &str) -> Result<T>
where
    T::Err: std::fmt::Display,
{
    s.parse().map_err(|e| Error::Parse(format!("{what} '{s}': {e}")))
}

/// Parses corpus lines `name kind q key=value ...`; `#` starts a comment.
///
/// ```text
/// gauss-std   gaussian 1 c=1 lambda=0
/// gauss-mixed gaussian 3 c=1,-0.3+0.2i,0.7 lambda=-0.8+0.3i
/// herm1       hermite  1 n=1
/// ```
pub fn parse_corpus(text: &str) -> Result<Vec<CorpusEntry>> {
    let mut out = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() < 3 {
            return Err(Error::Parse(format!("line {}: expected 'name kind q ...'", lineno + 1)));
        }
        let name = fields[0].to_string();
        let kind = fields[1];
        let q: u32 = parse_num(fields[2], "q")?;
        let mut kv = std::collections::BTreeMap::new();
        for f in &fields[3..] {
            let (k, v) = f
                .split_once('=')
                .ok_or_else(|| Error::Parse(format!("line {}: expected key=value, got '{f}'", lineno + 1)))?;
            kv.insert(k, v);
        }
        let get = |k: &str| -> Result<&str> {
            kv.get(k).copied().ok_or_else(|| Error::Parse(format!("line {}: missing '{k}'", lineno + 1)))
        };
        let window = match kind {
            "gaussian" => {
                let c = get("c")?.split(',').map(parse_complex).collect::<Result<Vec<_>>>()?;
                let c = if c.len() == 1 && q > 1 { vec![c[0]; q as usize] } else { c };
                let lambda = kv.get("lambda").map_or(Ok(ZERO), |s| parse_complex(s))?;
                CorpusWindow::Gaussian { c, lambda }
            }
            "hermite" => CorpusWindow::Hermite { n: parse_num(get("n")?, "n")? },
            "squeezed" => CorpusWindow::Squeezed { width: parse_num(get("width")?, "width")? },
            "bspline" => CorpusWindow::Bspline { width: parse_num(get("width")?, "width")? },
            "random" => CorpusWindow::Random {
                seed: parse_num(get("seed")?, "seed")?,
                terms: parse_num(get("terms")?, "terms")?,
            },
            "mixture" => CorpusWindow::Mixture { n: parse_num(get("n")?, "n")?, eps: parse_num(get("eps")?, "eps")? },
            other => return Err(Error::Parse(format!("line {}: unknown window kind '{other}'", lineno + 1))),
        };
        out.push(CorpusEntry { name, q, window });
    }
    Ok(out)
}

pub const DEFAULT_CORPUS: &str = "\
gauss-std      gaussian 1 c=1 lambda=0
gauss-mod      gaussian 1 c=1 lambda=1+1i
gauss-weighted gaussian 2 c=1,0+0.5i lambda=0.5
gauss-const    gaussian 3 c=1 lambda=0
gauss-mixed    gaussian 3 c=1,-0.3+0.2i,0.7 lambda=-0.8+0.3i
herm1          hermite  1 n=1
herm2          hermite  1 n=2
herm1-q2       hermite  2 n=1
squeezed       squeezed 1 width=2
bspline        bspline  1 width=3
random         random   1 seed=11 terms=4
mixture-q2     mixture  2 n=2 eps=0.2
";

pub fn default_corpus() -> Vec<CorpusEntry> {
    parse_corpus(DEFAULT_CORPUS).expect("built-in corpus parses")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScreeningRow {
    pub name: String,
    pub q: u32,
    pub generalized_gaussian: bool,
    pub energy: f64,
    pub excess: f64,
    pub eigen_residual_plus: f64,
    pub eigen_residual_minus: f64,
}

/// Continuous energy and eigen-relation residuals for every corpus entry.
pub fn screen_corpus(entries: &[CorpusEntry], period: f64, samples: usize) -> Result<Vec<ScreeningRow>> {
    entries
        .iter()
        .map(|e| {
            let g = e.build(period, samples)?;
            let energy = continuous_energy(&g)?;
            Ok(ScreeningRow {
                name: e.name.clone(),
                q: e.q,
                generalized_gaussian: e.is_generalized_gaussian(),
                energy,
                excess: energy - e.q as f64,
                eigen_residual_plus: eigen_residual(&g, 1.0)?.residual,
                eigen_residual_minus: eigen_residual(&g, -1.0)?.residual,
            })
        })
        .collect()
}
