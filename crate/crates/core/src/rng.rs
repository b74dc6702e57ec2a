//! Seeded sampling helpers shared by the searches and the test suites.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::henon::ComplexPoint;

pub fn seeded(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Uniform point of the closed disk of radius `r`.
pub fn in_disk(rng: &mut ChaCha8Rng, r: f64) -> Complex64 {
    let rho = r * libm::sqrt(rng.random::<f64>());
    Complex64::from_polar(rho, rng.random_range(0.0..core::f64::consts::TAU))
}

pub fn in_bidisk(rng: &mut ChaCha8Rng, r: f64) -> ComplexPoint {
    ComplexPoint::new(in_disk(rng, r), in_disk(rng, r))
}

/// Point with sup norm exactly `r`: one coordinate on the circle, the other
/// inside the disk.
pub fn on_sphere(rng: &mut ChaCha8Rng, r: f64) -> ComplexPoint {
    let edge = Complex64::from_polar(r, rng.random_range(0.0..core::f64::consts::TAU));
    let inner = in_disk(rng, r);
    if rng.random::<bool>() {
        ComplexPoint::new(edge, inner)
    } else {
        ComplexPoint::new(inner, edge)
    }
}

pub fn uniform(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    lo + (hi - lo) * rng.random::<f64>()
}

/// Point of `V_R^+` (`Plus`) or `V_R^-` (`Minus`) whose dominant coordinate
/// has modulus log-uniform in `[radius, max_abs]`.
pub fn in_wedge(rng: &mut ChaCha8Rng, radius: f64, max_abs: f64, sign: crate::Sign) -> ComplexPoint {
    let big = libm::exp(uniform(rng, libm::log(radius), libm::log(max_abs))).max(radius);
    let lead = Complex64::from_polar(big, rng.random_range(0.0..core::f64::consts::TAU));
    let other = in_disk(rng, big);
    match sign {
        crate::Sign::Plus => ComplexPoint::new(other, lead),
        crate::Sign::Minus => ComplexPoint::new(lead, other),
    }
}
