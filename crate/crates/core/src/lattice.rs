//! Lattice parameters, modular inverses, adjoint lattices and truncated enumeration.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::signal::PhasePoint;

/// Absolute tolerance for integer-membership tests.
pub const INTEGER_TOL: f64 = 1e-9;

/// Mathematical remainder in `{0, .., q-1}`.
pub fn rem_q(x: i64, q: u32) -> u32 {
    x.rem_euclid(q as i64) as u32
}

fn gcd(a: i64, b: i64) -> i64 {
    let (mut a, mut b) = (a.abs(), b.abs());
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

/// Inverse of `r` modulo `q`, normalised to `{0, .., q-1}`; `0` when `q == 1`.
pub fn mod_inverse(r: i64, q: i64) -> Result<i64> {
    if q < 1 {
        return Err(Error::InvalidArgument(format!("modulus must be positive, got {q}")));
    }
    if q == 1 {
        return Ok(0);
    }
    if gcd(r, q) != 1 {
        return Err(Error::NotCoprime { value: r, modulus: q });
    }
    // extended Euclid
    let (mut old_r, mut cur_r) = (r.rem_euclid(q), q);
    let (mut old_s, mut cur_s) = (1i64, 0i64);
    while cur_r != 0 {
        let k = old_r / cur_r;
        (old_r, cur_r) = (cur_r, old_r - k * cur_r);
        (old_s, cur_s) = (cur_s, old_s - k * cur_s);
    }
    Ok(old_s.rem_euclid(q))
}

/// The five numbers `(alpha, beta, r, s, q)` defining the lattices.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TorusParams {
    pub alpha: f64,
    pub beta: f64,
    pub r: u32,
    pub s: u32,
    pub q: u32,
}

impl TorusParams {
    pub fn new(alpha: f64, beta: f64, r: u32, s: u32, q: u32) -> Result<Self> {
        let p = TorusParams { alpha, beta, r, s, q };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha.is_finite() && self.beta.is_finite()) {
            return Err(Error::InvalidParams("alpha and beta must be finite".into()));
        }
        if self.alpha == 0.0 || self.beta == 0.0 {
            return Err(Error::InvalidParams("alpha and beta must be nonzero".into()));
        }
        if self.q == 0 {
            return Err(Error::InvalidParams("q must be at least 1".into()));
        }
        if self.q == 1 {
            if self.r != 0 || self.s != 0 {
                return Err(Error::InvalidParams("q = 1 requires r = s = 0".into()));
            }
            return Ok(());
        }
        if self.r >= self.q || self.s >= self.q {
            return Err(Error::InvalidParams(format!(
                "r and s must lie in 0..{}, got r = {}, s = {}",
                self.q, self.r, self.s
            )));
        }
        for v in [self.r, self.s] {
            if gcd(v as i64, self.q as i64) != 1 {
                return Err(Error::NotCoprime { value: v as i64, modulus: self.q as i64 });
            }
        }
        Ok(())
    }

    pub fn r_inv(&self) -> u32 {
        mod_inverse(self.r as i64, self.q as i64).expect("validated params") as u32
    }

    pub fn s_inv(&self) -> u32 {
        mod_inverse(self.s as i64, self.q as i64).expect("validated params") as u32
    }

    /// `alpha*beta + r*s/q`.
    pub fn theta(&self) -> f64 {
        self.alpha * self.beta + (self.r as f64) * (self.s as f64) / self.q as f64
    }

    /// `r°s°/q - 1/(alpha*beta*q^2)`.
    pub fn theta_adjoint(&self) -> f64 {
        let q = self.q as f64;
        (self.r_inv() as f64) * (self.s_inv() as f64) / q - 1.0 / (self.alpha * self.beta * q * q)
    }

    /// `q |alpha beta|`, the density parameter; frames require it to be at most one.
    pub fn density(&self) -> f64 {
        self.q as f64 * (self.alpha * self.beta).abs()
    }

    pub fn generators(&self, kind: LatticeKind) -> Generators {
        match kind {
            LatticeKind::TimeFreq => {
                Generators { time_step: self.alpha, time_slope: self.r, freq_step: self.beta, freq_slope: self.s }
            }
            LatticeKind::Adjoint => {
                let q = self.q as f64;
                Generators {
                    time_step: 1.0 / (self.beta * q),
                    time_slope: rem_q(-(self.s_inv() as i64), self.q),
                    freq_step: 1.0 / (self.alpha * q),
                    freq_slope: rem_q(-(self.r_inv() as i64), self.q),
                }
            }
        }
    }

    /// Phase-space point with generator indices `(n1, n2)` on the given lattice.
    pub fn point(&self, kind: LatticeKind, n1: i64, n2: i64) -> PhasePoint {
        self.generators(kind).point(n1, n2, self.q)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum LatticeKind {
    /// `Lambda x Gamma`
    TimeFreq,
    /// `Gamma-perp x Lambda-perp`
    Adjoint,
}

impl std::fmt::Display for LatticeKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            LatticeKind::TimeFreq => "timefreq",
            LatticeKind::Adjoint => "adjoint",
        })
    }
}

impl std::str::FromStr for LatticeKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "timefreq" => Ok(LatticeKind::TimeFreq),
            "adjoint" => Ok(LatticeKind::Adjoint),
            other => Err(Error::Parse(format!("unknown lattice kind '{other}'"))),
        }
    }
}

/// Step and channel slope of each lattice generator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Generators {
    pub time_step: f64,
    pub time_slope: u32,
    pub freq_step: f64,
    pub freq_slope: u32,
}

impl Generators {
    pub fn point(&self, n1: i64, n2: i64, q: u32) -> PhasePoint {
        PhasePoint {
            lambda: self.time_step * n1 as f64,
            l: rem_q(self.time_slope as i64 * n1, q),
            gamma: self.freq_step * n2 as f64,
            c: rem_q(self.freq_slope as i64 * n2, q),
        }
    }
}

/// Generator data and covolumes of the adjoint lattice.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdjointDescriptor {
    pub generators: Generators,
    pub covol_lambda: f64,
    pub covol_gamma: f64,
    pub covol_lambda_perp: f64,
    pub covol_gamma_perp: f64,
}

pub fn annihilator_params(p: &TorusParams) -> Result<AdjointDescriptor> {
    p.validate()?;
    let q = p.q as f64;
    Ok(AdjointDescriptor {
        generators: p.generators(LatticeKind::Adjoint),
        covol_lambda: q * p.alpha.abs(),
        covol_gamma: p.beta.abs(),
        covol_lambda_perp: 1.0 / (q * p.alpha.abs()),
        covol_gamma_perp: 1.0 / p.beta.abs(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LatticePoint {
    pub n1: i64,
    pub n2: i64,
    pub lambda: f64,
    pub l: u32,
    pub gamma: f64,
    pub c: u32,
    pub kind: LatticeKind,
}

impl LatticePoint {
    pub fn phase_point(&self) -> PhasePoint {
        PhasePoint { lambda: self.lambda, l: self.l, gamma: self.gamma, c: self.c }
    }
}

/// Largest index `n` with `|n * step| <= radius`.
pub fn index_bound(step: f64, radius: f64) -> i64 {
    ((radius / step.abs()) * (1.0 + 1e-12) + 1e-12).floor() as i64
}

/// All points with `max(|lambda|, |gamma|) <= radius`, ordered lexicographically in `(n1, n2)`.
pub fn enumerate_lattice(p: &TorusParams, kind: LatticeKind, radius: f64) -> Result<Vec<LatticePoint>> {
    p.validate()?;
    if !(radius > 0.0) {
        return Err(Error::InvalidArgument(format!("radius must be positive, got {radius}")));
    }
    let g = p.generators(kind);
    let b1 = index_bound(g.time_step, radius);
    let b2 = index_bound(g.freq_step, radius);
    let mut out = Vec::with_capacity(((2 * b1 + 1) * (2 * b2 + 1)) as usize);
    for n1 in -b1..=b1 {
        for n2 in -b2..=b2 {
            let pt = g.point(n1, n2, p.q);
            out.push(LatticePoint { n1, n2, lambda: pt.lambda, l: pt.l, gamma: pt.gamma, c: pt.c, kind });
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Admissibility {
    pub admissible: bool,
    /// `1/(alpha beta q^2) + r°s°/q`, required to be an integer.
    pub integrality_value: f64,
    pub integrality_ok: bool,
    /// `|alpha beta| q`, required to be below one.
    pub density: f64,
    pub density_ok: bool,
}

pub fn is_integer(x: f64) -> bool {
    (x - x.round()).abs() <= INTEGER_TOL
}

pub fn soliton_admissible(p: &TorusParams) -> Result<Admissibility> {
    p.validate()?;
    let q = p.q as f64;
    let integrality_value = 1.0 / (p.alpha * p.beta * q * q) + (p.r_inv() as f64) * (p.s_inv() as f64) / q;
    let density = p.density();
    let integrality_ok = is_integer(integrality_value);
    let density_ok = density < 1.0 - INTEGER_TOL;
    Ok(Admissibility {
        admissible: integrality_ok && density_ok,
        integrality_value,
        integrality_ok,
        density,
        density_ok,
    })
}
