//! Filtration radius, growth constants and the regions `V_R`, `V_R^±`.

use alloc::vec::Vec;

use crate::henon::{modulus, ComplexPoint, HenonFactor, HenonMap};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Region {
    Bidisk,
    VPlus,
    VMinus,
}

/// `VPlus` iff `|y| >= max(|x|, R)`, `VMinus` iff `|x| >= max(|y|, R)`; the
/// diagonal `|x| = |y| >= R` goes to `VPlus`.
pub fn region_of(z: ComplexPoint, radius: f64) -> Region {
    let (ax, ay) = (modulus(z.x), modulus(z.y));
    if ay >= ax && ay >= radius {
        Region::VPlus
    } else if ax >= ay && ax >= radius {
        Region::VMinus
    } else {
        Region::Bidisk
    }
}

/// Growth constants `(m_f, M_f)` of one factor on `|y| >= max(|x|, R)`, or
/// `None` when `m_f <= 0`.
pub fn factor_bounds(f: &HenonFactor, radius: f64) -> Option<(f64, f64)> {
    let d = f.degree() as i32;
    let lead = modulus(*f.coeffs().last().unwrap());
    let mut slack = 0.0;
    for (j, c) in f.coeffs()[..d as usize].iter().enumerate() {
        slack += modulus(*c) * libm::pow(radius, (j as i32 - d) as f64);
    }
    slack += modulus(f.a()) * libm::pow(radius, (1 - d) as f64);
    let m = lead - slack;
    if m > 0.0 {
        Some((m, lead + slack))
    } else {
        None
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FactorBounds {
    pub m: f64,
    pub big_m: f64,
    pub degree: u32,
}

/// Unclamped composite constants of one generator (or of its dual), as logs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeneratorBounds {
    pub log_m: f64,
    pub log_big_m: f64,
    pub degree: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FiltrationData {
    pub radius: f64,
    pub m: f64,
    pub big_m: f64,
    pub d0: u64,
    /// Bounds of every factor of every generator, forward factors first and
    /// then the dual factors, each in acting order.
    pub per_factor: Vec<FactorBounds>,
    /// Composite bounds per generator for forward orbits in `V_R^+`.
    pub per_generator: Vec<GeneratorBounds>,
    /// Composite bounds per generator for inverse orbits in `V_R^-`.
    pub per_generator_inverse: Vec<GeneratorBounds>,
}

impl FiltrationData {
    /// `max(|log m|, |log M|)`.
    pub fn m0(&self) -> f64 {
        libm::log(self.m).abs().max(libm::log(self.big_m).abs())
    }

    pub fn escape_radii(&self, k: usize) -> Vec<f64> {
        escape_radii(self.radius, self.m, self.d0, k)
    }
}

/// `R_1 = R`, `R_j = m R_{j-1}^{d0}`; entries past the float range are `+inf`.
pub fn escape_radii(radius: f64, m: f64, d0: u64, k: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(k);
    let mut r = radius;
    for j in 0..k {
        if j > 0 {
            r = if r.is_finite() {
                m * libm::pow(r, d0 as f64)
            } else {
                f64::INFINITY
            };
        }
        out.push(r);
    }
    out
}

const MAX_LOG2_RADIUS: u32 = 60;

/// Doubling search `R = 2, 4, 8, ...` for the first admissible radius.
pub fn find_filtration(gens: &[HenonMap]) -> Result<FiltrationData> {
    if gens.is_empty() {
        return Err(Error::EmptyGeneratorSet);
    }
    let duals: Vec<HenonMap> = gens.iter().map(HenonMap::dual).collect();
    for e in 1..=MAX_LOG2_RADIUS {
        if let Some(fd) = check_radius(gens, &duals, libm::ldexp(1.0, e as i32)) {
            return Ok(fd);
        }
    }
    Err(Error::FiltrationNotFound)
}

/// Filtration data at a given radius, or `None` if it is not admissible.
pub fn filtration_at(gens: &[HenonMap], radius: f64) -> Option<FiltrationData> {
    let duals: Vec<HenonMap> = gens.iter().map(HenonMap::dual).collect();
    check_radius(gens, &duals, radius)
}

fn chain(h: &HenonMap, radius: f64, per_factor: &mut Vec<FactorBounds>) -> Option<GeneratorBounds> {
    let log_r = libm::log(radius);
    let (mut log_m, mut log_big_m) = (0.0, 0.0);
    for f in h.application_order() {
        let (m, big_m) = factor_bounds(f, radius)?;
        let d = f.degree();
        // Every intermediate point must stay in V_R^+.
        if !(libm::log(m) + (d - 1) as f64 * log_r > 0.0) {
            return None;
        }
        log_m = log_m * d as f64 + libm::log(m);
        log_big_m = log_big_m * d as f64 + libm::log(big_m);
        per_factor.push(FactorBounds { m, big_m, degree: d });
    }
    Some(GeneratorBounds {
        log_m,
        log_big_m,
        degree: h.degree(),
    })
}

fn check_radius(gens: &[HenonMap], duals: &[HenonMap], radius: f64) -> Option<FiltrationData> {
    if !(radius > 1.0) {
        return None;
    }
    let mut per_factor = Vec::new();
    let mut per_generator = Vec::with_capacity(gens.len());
    for h in gens {
        per_generator.push(chain(h, radius, &mut per_factor)?);
    }
    let mut per_generator_inverse = Vec::with_capacity(duals.len());
    for h in duals {
        per_generator_inverse.push(chain(h, radius, &mut per_factor)?);
    }
    let all = per_generator.iter().chain(per_generator_inverse.iter());
    let log_m = all.clone().map(|b| b.log_m).fold(f64::INFINITY, f64::min);
    let log_big_m = all.map(|b| b.log_big_m).fold(f64::NEG_INFINITY, f64::max);
    let m = libm::exp(log_m).min(0.99);
    let big_m = libm::exp(log_big_m).max(1.01);
    let d0 = gens.iter().map(HenonMap::degree).min().unwrap();
    let log_r = libm::log(radius);
    if !(log_r < libm::log(m) + d0 as f64 * log_r) {
        return None;
    }
    Some(FiltrationData {
        radius,
        m,
        big_m,
        d0,
        per_factor,
        per_generator,
        per_generator_inverse,
    })
}
