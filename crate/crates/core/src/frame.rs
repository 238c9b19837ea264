//! Gabor frames on `Lambda x Gamma`: frame operator, bounds, canonical dual and tight
//! windows, dual-pair projections and the Laurent symbol on the adjoint lattice.
//!
//! The direct frame operator sums over the truncated lattice and is used for Rayleigh
//! quotients. Inverses use the Janssen form `S f = f . <g, g>°`, which is well conditioned
//! on the grid where the truncated direct sum is not.

use std::sync::OnceLock;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::algebra::{act_left, act_right, inner_left, inner_right, twisted_conv, twisted_star, LatticeSeq};
use crate::error::{Error, Result};
use crate::lattice::{enumerate_lattice, soliton_admissible, LatticeKind, TorusParams};
use crate::signal::{expi, hermite, inner, tf_shift, GridSignal, ShiftKind};

const ONE: Complex64 = Complex64 { re: 1.0, im: 0.0 };

/// Below this ratio `A/B` a system is reported as not a frame.
pub const FRAME_RATIO_FLOOR: f64 = 1e-6;
/// Threshold on the Wexler-Raz residual for accepting a dual pair.
pub const DUAL_TOL: f64 = 1e-6;
pub const CG_MAX_ITER: usize = 500;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FrameBounds {
    pub lower: f64,
    pub upper: f64,
    /// Dimension of the probe space used for the Rayleigh quotients.
    pub probe_dim: usize,
    pub radius: f64,
}

impl FrameBounds {
    pub fn ratio(&self) -> f64 {
        self.upper / self.lower
    }
}

/// Fraction of the lower bound that must survive a fourfold larger probe space.
pub const TREND_RETENTION: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FrameTrend {
    pub lower_small: f64,
    pub lower_large: f64,
    pub upper: f64,
    pub frame: bool,
}

/// A window together with its lattice and truncation radius. Derived objects are
/// computed once and cached.
#[derive(Debug)]
pub struct FrameSystem {
    window: GridSignal,
    params: TorusParams,
    radius: f64,
    elements: OnceLock<Vec<GridSignal>>,
    janssen: OnceLock<LatticeSeq>,
    dual: OnceLock<GridSignal>,
    tight: OnceLock<GridSignal>,
    bounds: OnceLock<FrameBounds>,
}

impl Clone for FrameSystem {
    fn clone(&self) -> Self {
        FrameSystem {
            window: self.window.clone(),
            params: self.params,
            radius: self.radius,
            elements: self.elements.clone(),
            janssen: self.janssen.clone(),
            dual: self.dual.clone(),
            tight: self.tight.clone(),
            bounds: self.bounds.clone(),
        }
    }
}

impl FrameSystem {
    pub fn new(window: GridSignal, params: TorusParams, radius: f64) -> Result<Self> {
        params.validate()?;
        if window.spec().channels != params.q {
            return Err(Error::GridMismatch(format!(
                "window has {} channels, params require q = {}",
                window.spec().channels,
                params.q
            )));
        }
        if !(radius > 0.0) {
            return Err(Error::InvalidArgument(format!("radius must be positive, got {radius}")));
        }
        Ok(FrameSystem {
            window,
            params,
            radius,
            elements: OnceLock::new(),
            janssen: OnceLock::new(),
            dual: OnceLock::new(),
            tight: OnceLock::new(),
            bounds: OnceLock::new(),
        })
    }

    pub fn window(&self) -> &GridSignal {
        &self.window
    }

    pub fn params(&self) -> &TorusParams {
        &self.params
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn cached_bounds(&self) -> Option<&FrameBounds> {
        self.bounds.get()
    }

    fn elements(&self) -> Result<&Vec<GridSignal>> {
        if let Some(e) = self.elements.get() {
            return Ok(e);
        }
        let pts = enumerate_lattice(&self.params, LatticeKind::TimeFreq, self.radius)?;
        let els = pts.iter().map(|p| tf_shift(&self.window, &p.phase_point(), ShiftKind::TimeFreq)).collect();
        Ok(self.elements.get_or_init(|| els))
    }

    /// `<g, g>°` on the adjoint lattice; the Janssen coefficients of `S`.
    pub fn janssen_coefficients(&self) -> Result<&LatticeSeq> {
        if let Some(j) = self.janssen.get() {
            return Ok(j);
        }
        let j = inner_right(&self.window, &self.window, &self.params, self.radius)?;
        Ok(self.janssen.get_or_init(|| j))
    }

    fn check(&self, f: &GridSignal) -> Result<()> {
        inner(f, &self.window).map(|_| ())
    }

    /// `sum_{nu in box} <f, pi(nu) g> pi(nu) g`
    pub fn frame_operator(&self, f: &GridSignal) -> Result<GridSignal> {
        self.check(f)?;
        let mut out = GridSignal::zeros(*f.spec());
        for e in self.elements()? {
            out.axpy(inner(f, e)?, e)?;
        }
        Ok(out)
    }

    /// `sum_{nu in box} |<f, pi(nu) g>|^2`
    pub fn frame_energy(&self, f: &GridSignal) -> Result<f64> {
        self.check(f)?;
        Ok(self.elements()?.iter().map(|e| inner(f, e).map(|v| v.norm_sqr())).sum::<Result<f64>>()?)
    }

    /// `f . <g, g>°`, the frame operator evaluated on the adjoint lattice.
    pub fn janssen_operator(&self, f: &GridSignal) -> Result<GridSignal> {
        self.check(f)?;
        act_right(f, self.janssen_coefficients()?)
    }

    /// Rayleigh-quotient bounds of the truncated frame operator on the span of the first
    /// `probes` Hermite functions in every channel, by power and inverse-power iteration
    /// from seeded random starts.
    pub fn frame_bounds(&self, probes: usize, seed: u64) -> Result<FrameBounds> {
        let m = self.compressed_operator(probes)?;
        let (lower, upper) = extreme_eigenvalues(&m, seed)?;
        let b = FrameBounds { lower, upper, probe_dim: m.nrows(), radius: self.radius };
        if !(lower > FRAME_RATIO_FLOOR * upper) {
            return Err(Error::NotAFrame { lower, upper });
        }
        Ok(*self.bounds.get_or_init(|| b))
    }

    /// Lower-bound estimates on a probe space and on one four times larger. A frame keeps
    /// its lower bound as the probe space grows; at critical density it keeps shrinking.
    pub fn frame_trend(&self, probes: usize, seed: u64) -> Result<FrameTrend> {
        let (small, _) = extreme_eigenvalues(&self.compressed_operator(probes)?, seed)?;
        let (large, upper) = extreme_eigenvalues(&self.compressed_operator(4 * probes)?, seed)?;
        Ok(FrameTrend {
            lower_small: small,
            lower_large: large,
            upper,
            frame: large > FRAME_RATIO_FLOOR * upper && large >= TREND_RETENTION * small,
        })
    }

    /// Matrix of the truncated frame operator in an orthonormal Hermite probe basis.
    pub fn compressed_operator(&self, probes: usize) -> Result<DMatrix<Complex64>> {
        if probes < 16 {
            return Err(Error::InvalidArgument(format!("at least 16 probes are required, got {probes}")));
        }
        let basis = hermite_basis(&self.window, probes)?;
        let images: Vec<GridSignal> = basis.iter().map(|v| self.frame_operator(v)).collect::<Result<_>>()?;
        let d = basis.len();
        let mut m = DMatrix::from_element(d, d, Complex64::new(0.0, 0.0));
        for i in 0..d {
            for j in 0..d {
                m[(i, j)] = inner(&images[j], &basis[i])?;
            }
        }
        // symmetrise away rounding
        let mh = m.adjoint();
        Ok((m + mh).scale(0.5))
    }

    /// Solves `S x = rhs` by conjugate gradients on the Janssen form of `S`.
    pub fn solve(&self, rhs: &GridSignal, tol: f64) -> Result<(GridSignal, CgStats)> {
        self.solve_bounded(rhs, tol, CG_MAX_ITER)
    }

    /// As `solve`, with an explicit iteration budget.
    pub fn solve_bounded(&self, rhs: &GridSignal, tol: f64, max_iter: usize) -> Result<(GridSignal, CgStats)> {
        self.check(rhs)?;
        let norm_g = self.window.norm_sq();
        if norm_g == 0.0 {
            return Err(Error::NotAFrame { lower: 0.0, upper: 0.0 });
        }
        let x0 = rhs.scaled(Complex64::new(self.params.density() / norm_g, 0.0));
        conjugate_gradient(|v| self.janssen_operator(v), rhs, x0, tol, max_iter)
    }

    /// `S^{-1} g`, cached after the first successful call.
    pub fn canonical_dual(&self, tol: f64) -> Result<&GridSignal> {
        if let Some(d) = self.dual.get() {
            return Ok(d);
        }
        let (h, _) = self.solve(&self.window, tol)?;
        let wr = wexler_raz_residual(&self.window, &h, &self.params, self.radius)?;
        if !(wr < DUAL_TOL) {
            return Err(Error::NotDual(wr));
        }
        Ok(self.dual.get_or_init(|| h))
    }

    /// `S^{-1/2} g` by a Lanczos approximation of the matrix function on the Janssen
    /// operator, cached after the first successful call.
    pub fn canonical_tight(&self, tol: f64) -> Result<&GridSignal> {
        if let Some(t) = self.tight.get() {
            return Ok(t);
        }
        let t = lanczos_inverse_sqrt(|v| self.janssen_operator(v), &self.window, tol, 200)?;
        let residual = wexler_raz_residual(&t, &t, &self.params, self.radius)?;
        if !(residual < DUAL_TOL) {
            return Err(Error::Inconsistent(format!("tight window is not self-dual: residual {residual:.3e}")));
        }
        Ok(self.tight.get_or_init(|| t))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CgStats {
    pub iterations: usize,
    pub relative_residual: f64,
}

/// Conjugate gradients for a Hermitian positive definite operator.
pub fn conjugate_gradient(
    op: impl Fn(&GridSignal) -> Result<GridSignal>,
    rhs: &GridSignal,
    x0: GridSignal,
    tol: f64,
    max_iter: usize,
) -> Result<(GridSignal, CgStats)> {
    let bnorm = rhs.norm();
    if bnorm == 0.0 {
        return Ok((GridSignal::zeros(*rhs.spec()), CgStats { iterations: 0, relative_residual: 0.0 }));
    }
    let mut x = x0;
    let mut r = rhs.sub(&op(&x)?)?;
    let mut p = r.clone();
    let mut rr = r.norm_sq();
    for it in 0..max_iter {
        let rel = rr.sqrt() / bnorm;
        if rel <= tol {
            return Ok((x, CgStats { iterations: it, relative_residual: rel }));
        }
        let ap = op(&p)?;
        let pap = inner(&ap, &p)?.re;
        if !(pap > 0.0) {
            return Err(Error::CgStagnation { residual: rel, iterations: it });
        }
        let a = rr / pap;
        x.axpy(Complex64::new(a, 0.0), &p)?;
        r.axpy(Complex64::new(-a, 0.0), &ap)?;
        let rr_new = r.norm_sq();
        let beta = rr_new / rr;
        rr = rr_new;
        let mut np = r.clone();
        np.axpy(Complex64::new(beta, 0.0), &p)?;
        p = np;
    }
    // true residual, not the recursively updated one
    let rel = rhs.sub(&op(&x)?)?.norm() / bnorm;
    if rel <= tol {
        return Ok((x, CgStats { iterations: max_iter, relative_residual: rel }));
    }
    Err(Error::CgStagnation { residual: rel, iterations: max_iter })
}

/// `||b|| V f(T) e_1` with `f(t) = t^{-1/2}` on the Krylov space of `b`.
pub fn lanczos_inverse_sqrt(
    op: impl Fn(&GridSignal) -> Result<GridSignal>,
    b: &GridSignal,
    tol: f64,
    max_dim: usize,
) -> Result<GridSignal> {
    let bnorm = b.norm();
    if bnorm == 0.0 {
        return Ok(b.clone());
    }
    let mut basis = vec![b.scaled(Complex64::new(1.0 / bnorm, 0.0))];
    let mut alphas: Vec<f64> = Vec::new();
    let mut betas: Vec<f64> = Vec::new();
    let mut prev: Option<GridSignal> = None;
    loop {
        let k = basis.len();
        let mut w = op(&basis[k - 1])?;
        let a = inner(&w, &basis[k - 1])?.re;
        alphas.push(a);
        // full reorthogonalisation
        for _ in 0..2 {
            for v in &basis {
                let c = inner(&w, v)?;
                w.axpy(-c, v)?;
            }
        }
        let x = lanczos_combination(&basis, &alphas, &betas, bnorm)?;
        if let Some(px) = &prev {
            let change = x.sub(px)?.norm() / x.norm();
            if change <= tol {
                return Ok(x);
            }
        }
        let beta = w.norm();
        if beta <= 1e-14 * bnorm || k >= max_dim {
            if beta <= 1e-14 * bnorm {
                return Ok(x);
            }
            let residual =
                prev.as_ref().map_or(f64::INFINITY, |px| x.sub(px).map_or(f64::INFINITY, |d| d.norm() / x.norm()));
            return Err(Error::CgStagnation { residual, iterations: k });
        }
        betas.push(beta);
        basis.push(w.scaled(Complex64::new(1.0 / beta, 0.0)));
        prev = Some(x);
    }
}

fn lanczos_combination(basis: &[GridSignal], alphas: &[f64], betas: &[f64], bnorm: f64) -> Result<GridSignal> {
    let k = alphas.len();
    let mut t = DMatrix::<f64>::zeros(k, k);
    for i in 0..k {
        t[(i, i)] = alphas[i];
        if i + 1 < k {
            t[(i, i + 1)] = betas[i];
            t[(i + 1, i)] = betas[i];
        }
    }
    let eig = SymmetricEigen::new(t);
    if eig.eigenvalues.iter().any(|&l| !(l > 0.0)) {
        return Err(Error::NotAFrame { lower: eig.eigenvalues.min(), upper: eig.eigenvalues.max() });
    }
    // coefficients = Q diag(l^{-1/2}) Q^T e_1
    let mut coeff = vec![0.0; k];
    for (j, &l) in eig.eigenvalues.iter().enumerate() {
        let w = eig.eigenvectors[(0, j)] / l.sqrt();
        for (i, c) in coeff.iter_mut().enumerate() {
            *c += eig.eigenvectors[(i, j)] * w;
        }
    }
    let mut x = GridSignal::zeros(*basis[0].spec());
    for (v, c) in basis.iter().zip(coeff) {
        x.axpy(Complex64::new(c * bnorm, 0.0), v)?;
    }
    Ok(x)
}

/// Orthonormal Hermite functions `0..probes` on every channel.
pub fn hermite_basis(like: &GridSignal, probes: usize) -> Result<Vec<GridSignal>> {
    let spec = *like.spec();
    let q = spec.channels as usize;
    let mut out = Vec::with_capacity(probes * q);
    for k in 0..q {
        let mut w = vec![Complex64::new(0.0, 0.0); q];
        w[k] = ONE;
        for n in 0..probes {
            let mut v = hermite(spec, n, &w)?;
            // modified Gram-Schmidt removes grid-level non-orthogonality
            for u in &out {
                let c = inner(&v, u)?;
                v.axpy(-c, u)?;
            }
            let nv = v.norm();
            out.push(v.scaled(Complex64::new(1.0 / nv, 0.0)));
        }
    }
    Ok(out)
}

fn rayleigh(m: &DMatrix<Complex64>, v: &DVector<Complex64>) -> f64 {
    (v.adjoint() * m * v)[(0, 0)].re / v.norm_squared()
}

fn eigen_residual(m: &DMatrix<Complex64>, v: &DVector<Complex64>, rho: f64) -> f64 {
    (m * v - v * Complex64::new(rho, 0.0)).norm() / v.norm()
}

/// Iterates `v <- step(v)` until `v` is an approximate eigenvector, then polishes the
/// Rayleigh quotient with shifted inverse iteration, keeping only moves towards the
/// requested end of the spectrum.
fn extreme_by_iteration(
    m: &DMatrix<Complex64>,
    mut v: DVector<Complex64>,
    step: impl Fn(&DVector<Complex64>) -> DVector<Complex64>,
    largest: bool,
) -> f64 {
    let scale = m.norm().max(f64::MIN_POSITIVE);
    v /= Complex64::new(v.norm(), 0.0);
    let mut rho = rayleigh(m, &v);
    for _ in 0..200_000 {
        let w = step(&v);
        let nw = w.norm();
        if !(nw > 0.0) || !nw.is_finite() {
            break;
        }
        v = w / Complex64::new(nw, 0.0);
        rho = rayleigh(m, &v);
        if eigen_residual(m, &v, rho) <= 1e-10 * scale {
            break;
        }
    }
    let d = m.nrows();
    for _ in 0..3 {
        let shifted = m - DMatrix::<Complex64>::identity(d, d) * Complex64::new(rho, 0.0);
        let Some(w) = shifted.lu().solve(&v) else { break };
        let nw = w.norm();
        if !(nw > 0.0) || !nw.is_finite() {
            break;
        }
        let cand = w / Complex64::new(nw, 0.0);
        let r = rayleigh(m, &cand);
        if (largest && r >= rho) || (!largest && r <= rho) {
            rho = r;
            v = cand;
        } else {
            break;
        }
    }
    rho
}

/// Smallest and largest eigenvalue of a Hermitian positive semidefinite matrix by
/// inverse-power and power iteration.
pub fn extreme_eigenvalues(m: &DMatrix<Complex64>, seed: u64) -> Result<(f64, f64)> {
    let d = m.nrows();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut start = || DVector::from_fn(d, |_, _| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)));
    let upper = extreme_by_iteration(m, start(), |v| m * v, true);
    if !(upper > 0.0) {
        return Err(Error::NotAFrame { lower: 0.0, upper: upper.max(0.0) });
    }
    let lower = match m.clone().cholesky() {
        None => 0.0,
        Some(ch) => extreme_by_iteration(m, start(), |v| ch.solve(v), false),
    };
    Ok((lower.max(0.0), upper))
}

/// `||<g, h>° - delta_0||_1`
pub fn wexler_raz_residual(g: &GridSignal, h: &GridSignal, params: &TorusParams, radius: f64) -> Result<f64> {
    let s = inner_right(g, h, params, radius)?;
    let d = LatticeSeq::delta(*params, LatticeKind::Adjoint, 0, 0);
    s.l1_distance(&d, None)
}

/// `||f - <f, g> . h|| / ||f||`
pub fn reconstruction_residual(
    f: &GridSignal,
    g: &GridSignal,
    h: &GridSignal,
    params: &TorusParams,
    radius: f64,
) -> Result<f64> {
    let rec = act_left(&inner_left(f, g, params, radius)?, h)?;
    Ok(f.sub(&rec)?.norm() / f.norm())
}

/// Orthogonal projection onto the closed span of `{pi°(nu°) g}`: `v -> g . <h, v>°` for a
/// dual window `h`.
pub fn adjoint_projection(
    v: &GridSignal,
    g: &GridSignal,
    h: &GridSignal,
    params: &TorusParams,
    radius: f64,
) -> Result<GridSignal> {
    act_right(g, &inner_right(h, v, params, radius)?)
}

/// Relative distance from `f` to the adjoint span of `g`; the membership test for `W`.
pub fn adjoint_span_residual(
    f: &GridSignal,
    g: &GridSignal,
    h: &GridSignal,
    params: &TorusParams,
    radius: f64,
) -> Result<f64> {
    let nf = f.norm();
    if nf == 0.0 {
        return Ok(0.0);
    }
    Ok(f.sub(&adjoint_projection(f, g, h, params, radius)?)?.norm() / nf)
}

/// `h + eps (v - P v)`: another dual window of `g` when `h` is one.
pub fn perturbed_dual(
    g: &GridSignal,
    h: &GridSignal,
    v: &GridSignal,
    eps: f64,
    params: &TorusParams,
    radius: f64,
) -> Result<GridSignal> {
    let w = v.sub(&adjoint_projection(v, g, h, params, radius)?)?;
    let mut out = h.clone();
    out.axpy(Complex64::new(eps, 0.0), &w)?;
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DualProjection {
    pub seq: LatticeSeq,
    pub wexler_raz: f64,
    /// `||a # a - a||_1` within the creation radius.
    pub idempotency: f64,
    /// `||a* - a||_1`
    pub self_adjointness: f64,
    pub trace: Complex64,
}

impl DualProjection {
    pub fn is_projection(&self, tol: f64) -> bool {
        self.idempotency < tol && self.self_adjointness < tol
    }
}

/// `a = <g, h>` for a dual pair, with its idempotency and self-adjointness residuals.
pub fn project_dual_pair(g: &GridSignal, h: &GridSignal, params: &TorusParams, radius: f64) -> Result<DualProjection> {
    let wr = wexler_raz_residual(g, h, params, radius)?;
    if !(wr < DUAL_TOL) {
        return Err(Error::NotDual(wr));
    }
    let a = inner_left(g, h, params, radius)?;
    let idempotency = twisted_conv(&a, &a)?.l1_distance(&a, Some(radius))?;
    if !(idempotency < DUAL_TOL) {
        return Err(Error::NotAProjection(format!("idempotency residual {idempotency:.3e}")));
    }
    let self_adjointness = twisted_star(&a).l1_distance(&a, None)?;
    let trace = a.origin();
    Ok(DualProjection { seq: a, wexler_raz: wr, idempotency, self_adjointness, trace })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LaurentSymbol {
    pub grid: usize,
    /// `F(t1, t2)` at `t = (i, j) / grid`, row-major in `i`.
    pub values: Vec<Complex64>,
    pub min_abs: f64,
    pub max_abs: f64,
    pub riesz: bool,
    /// `q |alpha beta|`; frame bounds are `min |F|` and `max |F|` divided by it.
    pub density: f64,
}

impl LaurentSymbol {
    pub fn frame_bounds(&self) -> (f64, f64) {
        (self.min_abs / self.density, self.max_abs / self.density)
    }

    pub fn at(&self, i: usize, j: usize) -> Complex64 {
        self.values[i * self.grid + j]
    }
}

/// Samples `F(t1, t2) = sum_{n,m} <g, pi°(nu°(n, m)) g> e^{2 pi i (m t1 + n t2)}`.
pub fn laurent_symbol(g: &GridSignal, params: &TorusParams, grid: usize, radius: f64) -> Result<LaurentSymbol> {
    let adm = soliton_admissible(params)?;
    if !adm.integrality_ok {
        return Err(Error::LaurentUnavailable(format!(
            "1/(alpha beta q^2) + r°s°/q = {} is not an integer",
            adm.integrality_value
        )));
    }
    if grid == 0 {
        return Err(Error::InvalidArgument("grid must be positive".into()));
    }
    let coeffs = inner_right(g, g, params, radius)?.scaled(Complex64::new(params.density(), 0.0));
    let mut values = Vec::with_capacity(grid * grid);
    for i in 0..grid {
        let t1 = i as f64 / grid as f64;
        for j in 0..grid {
            let t2 = j as f64 / grid as f64;
            let v: Complex64 = coeffs.iter().map(|((n, m), c)| c * expi(m as f64 * t1 + n as f64 * t2)).sum();
            values.push(v);
        }
    }
    let min_abs = values.iter().map(|v| v.norm()).fold(f64::INFINITY, f64::min);
    let max_abs = values.iter().map(|v| v.norm()).fold(0.0, f64::max);
    Ok(LaurentSymbol {
        grid,
        values,
        min_abs,
        max_abs,
        riesz: max_abs > 0.0 && min_abs > FRAME_RATIO_FLOOR * max_abs,
        density: params.density(),
    })
}

/// Copies a scalar window to all `q` channels after checking that it generates a frame
/// for the scalar lattice `alpha Z x q beta Z`.
pub fn lift_scalar_window(g: &GridSignal, params: &TorusParams, radius: f64) -> Result<GridSignal> {
    params.validate()?;
    if g.spec().channels != 1 {
        return Err(Error::InvalidArgument(format!("scalar window expected, got {} channels", g.spec().channels)));
    }
    let adm = soliton_admissible(params)?;
    if !adm.integrality_ok {
        return Err(Error::LaurentUnavailable(format!(
            "1/(alpha beta q^2) + r°s°/q = {} is not an integer",
            adm.integrality_value
        )));
    }
    let q = params.q;
    let scalar = TorusParams::new(params.alpha, params.beta * q as f64, 0, 0, 1)?;
    let frame = match laurent_symbol(g, &scalar, 64, radius) {
        Ok(sym) => {
            if !sym.riesz {
                let (lower, upper) = sym.frame_bounds();
                return Err(Error::NotAFrame { lower, upper });
            }
            true
        }
        Err(Error::LaurentUnavailable(_)) => {
            FrameSystem::new(g.clone(), scalar, radius)?.frame_bounds(24, 0)?;
            true
        }
        Err(e) => return Err(e),
    };
    debug_assert!(frame);
    let spec = crate::signal::GridSpec::new(g.spec().period, g.spec().samples, q)?;
    let mut out = GridSignal::zeros(spec);
    for k in 0..q {
        out.channel_mut(k).copy_from_slice(g.channel(0));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::signal::{gaussian, standard_gaussian, GridSpec};

    fn q1() -> TorusParams {
        TorusParams::new(0.5, 0.5, 0, 0, 1).unwrap()
    }

    fn q2() -> TorusParams {
        TorusParams::new(0.5, 1.0 / 3.0, 1, 1, 2).unwrap()
    }

    fn probe(q: u32, seed: u64) -> GridSignal {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let c: Vec<Complex64> =
            (0..q).map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect();
        let lam = Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-0.5..0.5));
        let g = gaussian(GridSpec::standard(q), &c, lam).unwrap();
        let nu = crate::signal::PhasePoint::new(rng.gen_range(-1.0..1.0), 0, rng.gen_range(-1.0..1.0), 0, q);
        tf_shift(&g, &nu, ShiftKind::TimeFreq)
    }

    #[test]
    fn frame_operator_is_positive_and_hermitian() {
        let sys = FrameSystem::new(standard_gaussian(GridSpec::standard(2)), q2(), 6.0).unwrap();
        let f = probe(2, 1);
        let h = probe(2, 2);
        let sf = sys.frame_operator(&f).unwrap();
        let sh = sys.frame_operator(&h).unwrap();
        let a = inner(&sf, &h).unwrap();
        let b = inner(&f, &sh).unwrap();
        assert!((a - b).norm() < 1e-12 * a.norm().max(1.0));
        let e = inner(&sf, &f).unwrap();
        assert!(e.re > 0.0 && e.im.abs() < 1e-12);
        assert!((e.re - sys.frame_energy(&f).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn frame_operator_commutes_with_lattice_shifts() {
        let p = q2();
        let sys = FrameSystem::new(standard_gaussian(GridSpec::standard(2)), p, 7.0).unwrap();
        let f = probe(2, 3);
        let nu = p.point(LatticeKind::TimeFreq, 1, 2);
        let lhs = sys.frame_operator(&tf_shift(&f, &nu, ShiftKind::TimeFreq)).unwrap();
        let rhs = tf_shift(&sys.frame_operator(&f).unwrap(), &nu, ShiftKind::TimeFreq);
        assert!(lhs.sub(&rhs).unwrap().norm() < 1e-7 * rhs.norm());
    }

    #[test]
    fn janssen_matches_direct_on_localized_inputs() {
        for p in [q1(), q2()] {
            let sys = FrameSystem::new(standard_gaussian(GridSpec::standard(p.q)), p, 6.0).unwrap();
            let f = probe(p.q, 4);
            let a = sys.frame_operator(&f).unwrap();
            let b = sys.janssen_operator(&f).unwrap();
            assert!(a.sub(&b).unwrap().norm() < 1e-8 * a.norm());
        }
    }

    #[test]
    fn bounds_against_dense_eigen_oracle() {
        let sys = FrameSystem::new(standard_gaussian(GridSpec::standard(1)), q1(), 6.0).unwrap();
        let b = sys.frame_bounds(16, 7).unwrap();
        let m = sys.compressed_operator(16).unwrap();
        let eig = SymmetricEigen::new(m).eigenvalues;
        assert!((b.lower - eig.min()).abs() < 1e-9 * eig.max());
        assert!((b.upper - eig.max()).abs() < 1e-9 * eig.max());
        assert!(b.lower <= b.upper);
        assert_eq!(sys.cached_bounds(), Some(&b));
        assert!(sys.frame_bounds(8, 0).is_err());
    }

    #[test]
    fn canonical_dual_reconstructs() {
        for p in [q1(), q2()] {
            let sys = FrameSystem::new(standard_gaussian(GridSpec::standard(p.q)), p, 6.0).unwrap();
            let h = sys.canonical_dual(1e-12).unwrap().clone();
            let wr = wexler_raz_residual(sys.window(), &h, &p, 6.0).unwrap();
            assert!(wr < 1e-6, "wr {wr:e}");
            for s in 0..3 {
                let f = probe(p.q, 10 + s);
                let r = reconstruction_residual(&f, sys.window(), &h, &p, 6.0).unwrap();
                assert!(r < 1e-6, "q = {}: reconstruction {r:e}", p.q);
            }
            // trace of the projection equals q |alpha beta|
            let proj = project_dual_pair(sys.window(), &h, &p, 6.0).unwrap();
            assert!((proj.trace - Complex64::new(p.density(), 0.0)).norm() < 1e-8);
            assert!(proj.is_projection(1e-6), "{:?}", (proj.idempotency, proj.self_adjointness));
        }
    }

    #[test]
    fn tight_case_is_its_own_dual() {
        let p = q1();
        let sys = FrameSystem::new(standard_gaussian(GridSpec::standard(1)), p, 6.0).unwrap();
        let t = sys.canonical_tight(1e-12).unwrap().clone();
        let tsys = FrameSystem::new(t.clone(), p, 6.0).unwrap();
        let h = tsys.canonical_dual(1e-12).unwrap();
        assert!(h.sub(&t).unwrap().norm() < 1e-8);
        let b = tsys.frame_bounds(16, 1).unwrap();
        assert!((b.lower - 1.0).abs() < 1e-6 && (b.upper - 1.0).abs() < 1e-6, "{b:?}");
    }

    #[test]
    fn detuned_dual_fails_both_tests() {
        let p = q1();
        let sys = FrameSystem::new(standard_gaussian(GridSpec::standard(1)), p, 6.0).unwrap();
        let h = sys.canonical_dual(1e-12).unwrap().scaled(Complex64::new(1.05, 0.0));
        assert!(wexler_raz_residual(sys.window(), &h, &p, 6.0).unwrap() > 1e-3);
        assert!(reconstruction_residual(&probe(1, 3), sys.window(), &h, &p, 6.0).unwrap() > 1e-3);
        assert!(matches!(project_dual_pair(sys.window(), &h, &p, 6.0), Err(Error::NotDual(_))));
    }

    #[test]
    fn laurent_symbol_basics() {
        let p = q1();
        let g = standard_gaussian(GridSpec::standard(1));
        let sym = laurent_symbol(&g, &p, 16, 6.0).unwrap();
        assert!(sym.riesz);
        assert!(sym.values.iter().all(|v| v.im.abs() < 1e-10 * sym.max_abs));
        let z = GridSignal::zeros(GridSpec::standard(1));
        let sym = laurent_symbol(&z, &p, 8, 6.0).unwrap();
        assert!(!sym.riesz);
        let bad = TorusParams::new(0.49, 0.49, 0, 0, 1).unwrap();
        assert!(matches!(laurent_symbol(&g, &bad, 8, 6.0), Err(Error::LaurentUnavailable(_))));
    }

    #[test]
    fn lifting() {
        let g = standard_gaussian(GridSpec::standard(1));
        assert_eq!(lift_scalar_window(&g, &q1(), 6.0).unwrap(), g);
        let lifted = lift_scalar_window(&g, &q2(), 6.0).unwrap();
        assert_eq!(lifted.channel(0), lifted.channel(1));
        FrameSystem::new(lifted, q2(), 6.0).unwrap().frame_bounds(16, 0).unwrap();
        assert!(lift_scalar_window(&standard_gaussian(GridSpec::standard(2)), &q2(), 6.0).is_err());
    }

    #[test]
    fn perturbed_dual_stays_dual() {
        let p = q1();
        let sys = FrameSystem::new(standard_gaussian(GridSpec::standard(1)), p, 6.0).unwrap();
        let h = sys.canonical_dual(1e-12).unwrap().clone();
        let v = hermite(GridSpec::standard(1), 3, &[ONE]).unwrap();
        let h2 = perturbed_dual(sys.window(), &h, &v, 0.2, &p, 6.0).unwrap();
        assert!(h2.sub(&h).unwrap().norm() > 1e-3);
        let proj = project_dual_pair(sys.window(), &h2, &p, 6.0).unwrap();
        assert!(proj.idempotency < 1e-6);
        assert!(proj.self_adjointness > 1e-3);
    }

    #[test]
    fn adjoint_span_membership() {
        let p = q2();
        let sys = FrameSystem::new(standard_gaussian(GridSpec::standard(2)), p, 6.0).unwrap();
        let h = sys.canonical_dual(1e-12).unwrap().clone();
        let mut b = LatticeSeq::new(p, LatticeKind::Adjoint, 2.0);
        b.insert(0, 0, ONE);
        b.insert(1, -1, Complex64::new(0.3, -0.2));
        b.insert(-1, 1, Complex64::new(-0.1, 0.5));
        let f = act_right(sys.window(), &b).unwrap();
        assert!(adjoint_span_residual(&f, sys.window(), &h, &p, 6.0).unwrap() < 1e-6);
        let outside = hermite(GridSpec::standard(2), 5, &[ONE, -ONE]).unwrap();
        assert!(adjoint_span_residual(&outside, sys.window(), &h, &p, 6.0).unwrap() > 1e-2);
    }
}
