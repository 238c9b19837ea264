//! Derivations, covariant derivatives, the Connes-Chern number, the energy functional and
//! the soliton pipeline that ties them to a window.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::path::PathBuf;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::algebra::{trace_l, trace_of_product, twisted_conv, twisted_star, LatticeSeq};
use crate::error::{Error, Result};
use crate::frame::{adjoint_projection, lift_scalar_window, project_dual_pair, wexler_raz_residual, FrameSystem};
use crate::lattice::{enumerate_lattice, soliton_admissible, LatticeKind, TorusParams};
use crate::signal::{
    apply_d, apply_m, cocycle, gaussian, hermite, inner, standard_gaussian, tf_shift, GridSignal, GridSpec, ShiftKind,
};

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

/// Projections must satisfy `p # p = p` and `p* = p` to this `l1` accuracy.
pub const PROJECTION_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Axis {
    /// `d_1`, `nabla_1 = 2 pi i M`
    Time,
    /// `d_2`, `nabla_2 = D`
    Frequency,
}

/// Multiplies each entry by `2 pi i lambda` or `2 pi i gamma`.
pub fn derive(a: &LatticeSeq, axis: Axis) -> LatticeSeq {
    let mut out = LatticeSeq::new(*a.params(), a.kind(), a.radius());
    for ((n1, n2), v) in a.iter() {
        let p = a.point(n1, n2);
        let t = match axis {
            Axis::Time => p.lambda,
            Axis::Frequency => p.gamma,
        };
        out.insert(n1, n2, 2.0 * PI * I * t * v);
    }
    out
}

pub fn covariant(f: &GridSignal, axis: Axis) -> GridSignal {
    match axis {
        Axis::Time => apply_m(f).scaled(2.0 * PI * I),
        Axis::Frequency => apply_d(f),
    }
}

/// `(nabla_1 + sign i nabla_2) f`
pub fn covariant_combination(f: &GridSignal, sign: f64) -> Result<GridSignal> {
    covariant(f, Axis::Time).add(&covariant(f, Axis::Frequency).scaled(sign * I))
}

fn sum_with(a: &LatticeSeq, b: &LatticeSeq, w: Complex64) -> Result<LatticeSeq> {
    a.axpy(w, b)
}

/// Idempotency and self-adjointness residuals of `p` within its radius.
pub fn projection_residuals(p: &LatticeSeq) -> Result<(f64, f64)> {
    let idem = twisted_conv(p, p)?.l1_distance(p, Some(p.radius()))?;
    let sa = twisted_star(p).l1_distance(p, None)?;
    Ok((idem, sa))
}

fn require_projection(p: &LatticeSeq) -> Result<()> {
    if p.kind() != LatticeKind::TimeFreq {
        return Err(Error::LatticeMismatch("projection must live on the time-frequency lattice".into()));
    }
    if p.l1_norm() == 0.0 {
        return Err(Error::NotAProjection("zero sequence".into()));
    }
    let (idem, sa) = projection_residuals(p)?;
    if !(idem < PROJECTION_TOL && sa < PROJECTION_TOL) {
        return Err(Error::NotAProjection(format!(
            "idempotency residual {idem:.3e}, self-adjointness residual {sa:.3e}"
        )));
    }
    Ok(())
}

/// `c1(p) = tr(p [d1 p # d2 p - d2 p # d1 p]) / (2 pi i |alpha beta|)`
pub fn chern_trace(p: &LatticeSeq) -> Result<Complex64> {
    require_projection(p)?;
    let d1 = derive(p, Axis::Time);
    let d2 = derive(p, Axis::Frequency);
    let comm = sum_with(&twisted_conv(&d1, &d2)?, &twisted_conv(&d2, &d1)?, Complex64::new(-1.0, 0.0))?;
    let t = trace_of_product(p, &comm)?;
    let ab = (p.params().alpha * p.params().beta).abs();
    Ok(t / (2.0 * PI * I * ab))
}

/// Samples `V_h g(nu) = <g, pi(nu) h>` on the lattice box straight from the signals.
fn stft_samples(
    g: &GridSignal,
    h: &GridSignal,
    params: &TorusParams,
    radius: f64,
) -> Result<HashMap<(i64, i64), Complex64>> {
    let mut out = HashMap::new();
    for pt in enumerate_lattice(params, LatticeKind::TimeFreq, radius)? {
        let v = inner(g, &tf_shift(h, &pt.phase_point(), ShiftKind::TimeFreq))?;
        out.insert((pt.n1, pt.n2), v);
    }
    Ok(out)
}

/// The explicit double-sum form of the Chern number:
/// `(2 pi / (i |alpha beta|)) sum (lambda' gamma - lambda gamma') p(nu) p(nu') p(-nu-nu')
///  conj(phi(nu', nu' + nu)) conj(phi(nu, nu))` with `p = V_h g`.
pub fn chern_sum(g: &GridSignal, h: &GridSignal, params: &TorusParams, radius: f64) -> Result<Complex64> {
    let wr = wexler_raz_residual(g, h, params, radius)?;
    if !(wr < crate::frame::DUAL_TOL) {
        return Err(Error::NotDual(wr));
    }
    let q = params.q;
    let p = stft_samples(g, h, params, radius)?;
    let mut keys: Vec<(i64, i64)> = p.keys().copied().collect();
    keys.sort_unstable();
    let pts: Vec<_> = keys.iter().map(|&(a, b)| (a, b, params.point(LatticeKind::TimeFreq, a, b))).collect();
    let mut total = Complex64::new(0.0, 0.0);
    for &(a1, a2, nu) in &pts {
        let pnu = p[&(a1, a2)];
        let self_phase = cocycle(&nu, &nu, q).conj();
        for &(b1, b2, nup) in &pts {
            let w = nup.lambda * nu.gamma - nu.lambda * nup.gamma;
            if w == 0.0 {
                continue;
            }
            let Some(&third) = p.get(&(-a1 - b1, -a2 - b2)) else { continue };
            let sum = nup.plus(&nu, q);
            total += w * pnu * p[&(b1, b2)] * third * cocycle(&nup, &sum, q).conj() * self_phase;
        }
    }
    let ab = (params.alpha * params.beta).abs();
    Ok(total * 2.0 * PI / (I * ab))
}

/// `E(p) = tr((d1 p)^2 + (d2 p)^2) / (4 pi |alpha beta|)`
pub fn energy(p: &LatticeSeq) -> Result<f64> {
    require_projection(p)?;
    let d1 = derive(p, Axis::Time);
    let d2 = derive(p, Axis::Frequency);
    let t = trace_of_product(&d1, &d1)? + trace_of_product(&d2, &d2)?;
    let ab = (p.params().alpha * p.params().beta).abs();
    Ok(t.re / (4.0 * PI * ab))
}

/// `(pi / |alpha beta|) sum (lambda^2 + gamma^2) |<g, pi(nu) h>|^2`
pub fn energy_window(g: &GridSignal, h: &GridSignal, params: &TorusParams, radius: f64) -> Result<f64> {
    let p = stft_samples(g, h, params, radius)?;
    let mut total = 0.0;
    let mut keys: Vec<_> = p.keys().copied().collect();
    keys.sort_unstable();
    for (a, b) in keys {
        let nu = params.point(LatticeKind::TimeFreq, a, b);
        total += (nu.lambda * nu.lambda + nu.gamma * nu.gamma) * p[&(a, b)].norm_sqr();
    }
    Ok(PI * total / (params.alpha * params.beta).abs())
}

/// Both energy forms for the canonical pair `(g, S^{-1} g)`; they must agree to `1e-6`.
pub fn energy_checked(p: &LatticeSeq, g: &GridSignal, h: &GridSignal) -> Result<(f64, f64)> {
    let e = energy(p)?;
    let ew = energy_window(g, h, p.params(), p.radius())?;
    if !((e - ew).abs() < 1e-6) {
        return Err(Error::Inconsistent(format!("energy forms disagree: {e} vs {ew}")));
    }
    Ok((e, ew))
}

/// `l1` norms of `(d1 p + i d2 p) # p` and `(d1 p - i d2 p) # p` within the radius of `p`.
pub fn sd_residuals(p: &LatticeSeq) -> Result<(f64, f64)> {
    let d1 = derive(p, Axis::Time);
    let d2 = derive(p, Axis::Frequency);
    let zero = LatticeSeq::new(*p.params(), p.kind(), p.radius());
    let mut out = [0.0; 2];
    for (slot, sign) in out.iter_mut().zip([1.0, -1.0]) {
        let comb = sum_with(&d1, &d2, sign * I)?;
        *slot = twisted_conv(&comb, p)?.l1_distance(&zero, Some(p.radius()))?;
    }
    Ok((out[0], out[1]))
}

/// Distance from `(nabla_1 + sign i nabla_2) g` to the adjoint span of `g`, relative to
/// `||nabla_1 g|| + ||nabla_2 g||` so that an exactly vanishing combination scores zero.
pub fn w_membership_residual(
    g: &GridSignal,
    h: &GridSignal,
    sign: f64,
    params: &TorusParams,
    radius: f64,
) -> Result<f64> {
    let f = covariant_combination(g, sign)?;
    let scale = covariant(g, Axis::Time).norm() + covariant(g, Axis::Frequency).norm();
    if scale == 0.0 {
        return Ok(0.0);
    }
    let dist = f.sub(&adjoint_projection(&f, g, h, params, radius)?)?.norm();
    Ok(dist / scale)
}

/// A window recipe. `Perturbed` adds `eps * ||g|| * psi_n` to the base window on every channel.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum WindowSpec {
    Gaussian { c: Vec<Complex64>, lambda: Complex64 },
    LiftedGaussian,
    Hermite { n: usize },
    Perturbed { base: Box<WindowSpec>, hermite: usize, eps: f64 },
    File { path: PathBuf },
}

impl WindowSpec {
    pub fn build(&self, spec: GridSpec, params: &TorusParams, radius: f64) -> Result<GridSignal> {
        let q = spec.channels as usize;
        match self {
            WindowSpec::Gaussian { c, lambda } => gaussian(spec, c, *lambda),
            WindowSpec::LiftedGaussian => {
                let scalar = GridSpec::new(spec.period, spec.samples, 1)?;
                lift_scalar_window(&standard_gaussian(scalar), params, radius)
            }
            WindowSpec::Hermite { n } => hermite(spec, *n, &vec![Complex64::new(1.0, 0.0); q]),
            WindowSpec::Perturbed { base, hermite: n, eps } => {
                let g = base.build(spec, params, radius)?;
                let w = hermite(spec, *n, &vec![Complex64::new(1.0, 0.0); q])?;
                let scale = eps * g.norm() / w.norm();
                let mut out = g;
                out.axpy(Complex64::new(scale, 0.0), &w)?;
                Ok(out)
            }
            WindowSpec::File { path } => {
                let file = std::fs::File::open(path)?;
                let g = GridSignal::read_columns(std::io::BufReader::new(file))?;
                if *g.spec() != spec {
                    return Err(Error::GridMismatch(format!(
                        "window file grid {:?} differs from configured {:?}",
                        g.spec(),
                        spec
                    )));
                }
                Ok(g)
            }
        }
    }

    pub fn describe(&self) -> String {
        match self {
            WindowSpec::Gaussian { c, lambda } => {
                let c: Vec<String> = c.iter().map(|v| v.to_string()).collect();
                format!("gaussian(c=[{}], lambda={lambda})", c.join(", "))
            }
            WindowSpec::LiftedGaussian => "lifted_gaussian".into(),
            WindowSpec::Hermite { n } => format!("hermite({n})"),
            WindowSpec::Perturbed { base, hermite, eps } => {
                format!("{} + {eps} hermite({hermite})", base.describe())
            }
            WindowSpec::File { path } => format!("file({})", path.display()),
        }
    }
}

/// Tolerances derived from one base value: algebra `eps0`, frame `100 eps0`, Chern and
/// energy `1000 eps0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ToleranceLadder {
    pub eps0: f64,
    pub algebra: f64,
    pub frame: f64,
    pub chern: f64,
}

impl ToleranceLadder {
    pub fn new(eps0: f64) -> Self {
        ToleranceLadder { eps0, algebra: eps0, frame: 1e2 * eps0, chern: 1e3 * eps0 }
    }
}

impl Default for ToleranceLadder {
    fn default() -> Self {
        ToleranceLadder::new(1e-8)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSettings {
    pub grid: GridSpec,
    pub radius: f64,
    pub probes: usize,
    pub seed: u64,
    pub cg_tol: f64,
}

impl ExperimentSettings {
    pub fn standard(q: u32) -> Self {
        ExperimentSettings { grid: GridSpec::standard(q), radius: 6.0, probes: 16, seed: 0, cg_tol: 1e-12 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChernReport {
    pub params: TorusParams,
    pub window: String,
    pub admissible: bool,
    pub period: f64,
    pub samples: usize,
    pub radius: f64,
    pub frame_lower: f64,
    pub frame_upper: f64,
    pub cg_iterations: usize,
    pub wexler_raz: f64,
    pub idempotency: f64,
    pub self_adjointness: f64,
    pub c1_re: f64,
    pub c1_im: f64,
    pub c1_rounded: i64,
    pub c1_sum_re: f64,
    pub c1_sum_im: f64,
    pub energy: f64,
    pub energy_window: f64,
    pub gap: f64,
    pub sd_residual_plus: f64,
    pub sd_residual_minus: f64,
    pub w_residual_plus: f64,
    pub w_residual_minus: f64,
}

impl ChernReport {
    pub fn c1(&self) -> Complex64 {
        Complex64::new(self.c1_re, self.c1_im)
    }

    pub fn c1_sum(&self) -> Complex64 {
        Complex64::new(self.c1_sum_re, self.c1_sum_im)
    }

    /// Smaller of the two self-duality residuals.
    pub fn sd_min(&self) -> f64 {
        self.sd_residual_plus.min(self.sd_residual_minus)
    }

    /// `W`-membership residual for the sign with the smaller self-duality residual.
    pub fn w_residual(&self) -> f64 {
        if self.sd_residual_plus <= self.sd_residual_minus {
            self.w_residual_plus
        } else {
            self.w_residual_minus
        }
    }
}

/// Window, frame bounds, canonical dual, projection, both Chern formulas, energy and the
/// self-duality diagnostics for one parameter set.
pub fn soliton_experiment(
    params: &TorusParams,
    window: &WindowSpec,
    settings: &ExperimentSettings,
) -> Result<ChernReport> {
    params.validate()?;
    if settings.grid.channels != params.q {
        return Err(Error::GridMismatch(format!(
            "grid has {} channels, params require q = {}",
            settings.grid.channels, params.q
        )));
    }
    let radius = settings.radius;
    let g = window.build(settings.grid, params, radius)?;
    let sys = FrameSystem::new(g, *params, radius)?;
    let bounds = sys.frame_bounds(settings.probes, settings.seed)?;
    let (h, stats) = sys.solve(sys.window(), settings.cg_tol)?;
    let g = sys.window();
    let proj = project_dual_pair(g, &h, params, radius)?;
    let c1 = chern_trace(&proj.seq)?;
    let c1_sum = chern_sum(g, &h, params, radius)?;
    let (e, ew) = energy_checked(&proj.seq, g, &h)?;
    let (sd_plus, sd_minus) = sd_residuals(&proj.seq)?;
    let w_plus = w_membership_residual(g, &h, 1.0, params, radius)?;
    let w_minus = w_membership_residual(g, &h, -1.0, params, radius)?;
    debug_assert!(trace_l(&proj.seq).is_ok());
    Ok(ChernReport {
        params: *params,
        window: window.describe(),
        admissible: soliton_admissible(params)?.admissible,
        period: settings.grid.period,
        samples: settings.grid.samples,
        radius,
        frame_lower: bounds.lower,
        frame_upper: bounds.upper,
        cg_iterations: stats.iterations,
        wexler_raz: proj.wexler_raz,
        idempotency: proj.idempotency,
        self_adjointness: proj.self_adjointness,
        c1_re: c1.re,
        c1_im: c1.im,
        c1_rounded: c1.re.round() as i64,
        c1_sum_re: c1_sum.re,
        c1_sum_im: c1_sum.im,
        energy: e,
        energy_window: ew,
        gap: e - c1.norm(),
        sd_residual_plus: sd_plus,
        sd_residual_minus: sd_minus,
        w_residual_plus: w_plus,
        w_residual_minus: w_minus,
    })
}
