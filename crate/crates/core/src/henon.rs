//! Generalized Hénon factors, their compositions and log-space orbits.

use alloc::vec::Vec;
use core::fmt;

use num_complex::Complex64;

use crate::filtration::{region_of, Region};
use crate::{Error, Result};

/// Modulus of a complex scalar without intermediate overflow.
#[inline]
pub(crate) fn modulus(z: Complex64) -> f64 {
    libm::hypot(z.re, z.im)
}

/// A point of C², measured in the sup norm.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComplexPoint {
    pub x: Complex64,
    pub y: Complex64,
}

impl ComplexPoint {
    pub const ORIGIN: ComplexPoint = ComplexPoint {
        x: Complex64::new(0.0, 0.0),
        y: Complex64::new(0.0, 0.0),
    };

    pub const fn new(x: Complex64, y: Complex64) -> Self {
        ComplexPoint { x, y }
    }

    /// Point with real coordinates.
    pub const fn real(x: f64, y: f64) -> Self {
        ComplexPoint::new(Complex64::new(x, 0.0), Complex64::new(y, 0.0))
    }

    /// `max(|x|, |y|)`.
    pub fn norm(&self) -> f64 {
        let (ax, ay) = (modulus(self.x), modulus(self.y));
        if ax > ay {
            ax
        } else {
            ay
        }
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }

    /// `(y, x)`.
    pub fn swapped(&self) -> Self {
        ComplexPoint::new(self.y, self.x)
    }

    /// Sup-norm distance.
    pub fn distance(&self, other: &ComplexPoint) -> f64 {
        ComplexPoint::new(self.x - other.x, self.y - other.y).norm()
    }

    /// `self + t * dir`, coordinate-wise.
    pub fn offset(&self, dir: &ComplexPoint, t: Complex64) -> Self {
        ComplexPoint::new(self.x + dir.x * t, self.y + dir.y * t)
    }
}

impl fmt::Display for ComplexPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "({}{:+}i, {}{:+}i)",
            self.x.re, self.x.im, self.y.re, self.y.im
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Direction {
    Forward,
    Inverse,
}

/// `H(x, y) = (y, p(y) - a x)` with `deg p >= 2` and `a != 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct HenonFactor {
    coeffs: Vec<Complex64>,
    a: Complex64,
    // |c_j| / |c_d| for j < d, and |a| / |c_d|, cached for the growth bounds.
    lower_ratios: Vec<f64>,
    a_ratio: f64,
    log_lead: f64,
}

impl HenonFactor {
    /// `coeffs[j]` is the coefficient of `y^j`; the last entry is the leading one.
    pub fn new(coeffs: Vec<Complex64>, a: Complex64) -> Result<Self> {
        if coeffs.len() < 3 {
            return Err(Error::InvalidFactor("polynomial degree must be at least 2"));
        }
        if coeffs.iter().any(|c| !c.is_finite()) || !a.is_finite() {
            return Err(Error::InvalidFactor("coefficients must be finite"));
        }
        let lead = modulus(*coeffs.last().unwrap());
        if lead == 0.0 {
            return Err(Error::InvalidFactor("leading coefficient is zero"));
        }
        if modulus(a) == 0.0 {
            return Err(Error::InvalidFactor("a must be nonzero"));
        }
        let d = coeffs.len() - 1;
        let lower_ratios = coeffs[..d].iter().map(|c| modulus(*c) / lead).collect();
        Ok(HenonFactor {
            a_ratio: modulus(a) / lead,
            log_lead: libm::log(lead),
            lower_ratios,
            coeffs,
            a,
        })
    }

    /// `p(y) = y^2 + c`.
    pub fn quadratic(c: Complex64, a: Complex64) -> Result<Self> {
        HenonFactor::new(alloc::vec![c, Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0)], a)
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn a(&self) -> Complex64 {
        self.a
    }

    pub fn degree(&self) -> u32 {
        (self.coeffs.len() - 1) as u32
    }

    /// Horner evaluation of `p`.
    pub fn poly(&self, y: Complex64) -> Complex64 {
        self.coeffs
            .iter()
            .rev()
            .fold(Complex64::new(0.0, 0.0), |acc, c| acc * y + c)
    }

    pub fn eval(&self, z: ComplexPoint) -> Result<ComplexPoint> {
        let out = ComplexPoint::new(z.y, self.poly(z.y) - self.a * z.x);
        if out.is_finite() {
            Ok(out)
        } else {
            Err(Error::Overflow)
        }
    }

    pub fn eval_inverse(&self, z: ComplexPoint) -> Result<ComplexPoint> {
        let out = ComplexPoint::new((self.poly(z.x) - z.y) / self.a, z.x);
        if out.is_finite() {
            Ok(out)
        } else {
            Err(Error::Overflow)
        }
    }

    /// The factor `s ∘ H⁻¹ ∘ s` with `s(x, y) = (y, x)`, which is again of Hénon
    /// form: `(x, y) -> (y, p(y)/a - x/a)`.
    pub fn dual(&self) -> HenonFactor {
        let inv = Complex64::new(1.0, 0.0) / self.a;
        let coeffs = self.coeffs.iter().map(|c| c * inv).collect();
        HenonFactor::new(coeffs, inv).expect("dual of a valid factor is valid")
    }

    pub(crate) fn log_lead(&self) -> f64 {
        self.log_lead
    }

    /// Relative size of the non-leading terms at `|y| = exp(log_r)` on
    /// `|x| <= |y|`: `(Σ_{j<d} |c_j| r^{j-d} + |a| r^{1-d}) / |c_d|`.
    pub(crate) fn delta(&self, log_r: f64) -> f64 {
        let d = self.degree() as i32;
        let mut sum = 0.0;
        for (j, ratio) in self.lower_ratios.iter().enumerate() {
            if *ratio != 0.0 {
                sum += ratio * libm::exp((j as i32 - d) as f64 * log_r);
            }
        }
        if self.a_ratio != 0.0 {
            sum += self.a_ratio * libm::exp((1 - d) as f64 * log_r);
        }
        sum
    }

    /// Natural logs of the two-sided growth constants at radius `exp(log_r)`,
    /// or `None` when the lower constant is not positive.
    pub(crate) fn log_bounds(&self, log_r: f64) -> Option<(f64, f64)> {
        let delta = self.delta(log_r);
        if !(delta < 1.0) {
            return None;
        }
        Some((
            self.log_lead + libm::log1p(-delta),
            self.log_lead + libm::log1p(delta),
        ))
    }
}

/// A composition `H_1 ∘ H_2 ∘ ... ∘ H_m`; factors are stored outermost first,
/// so the last stored factor acts first.
#[derive(Debug, Clone, PartialEq)]
pub struct HenonMap {
    factors: Vec<HenonFactor>,
    degree: u64,
}

impl HenonMap {
    pub fn new(factors: Vec<HenonFactor>) -> Result<Self> {
        if factors.is_empty() {
            return Err(Error::EmptyMap);
        }
        let mut degree: u64 = 1;
        for f in &factors {
            degree = degree
                .checked_mul(f.degree() as u64)
                .ok_or(Error::Budget("map degree overflows u64"))?;
        }
        Ok(HenonMap { factors, degree })
    }

    pub fn single(f: HenonFactor) -> Self {
        HenonMap::new(alloc::vec![f]).expect("one factor")
    }

    pub fn factors(&self) -> &[HenonFactor] {
        &self.factors
    }

    pub fn degree(&self) -> u64 {
        self.degree
    }

    /// `self ∘ inner`.
    pub fn compose(&self, inner: &HenonMap) -> Result<HenonMap> {
        let mut factors = self.factors.clone();
        factors.extend(inner.factors.iter().cloned());
        HenonMap::new(factors)
    }

    /// Factors in the order they act on a point.
    pub fn application_order(&self) -> impl DoubleEndedIterator<Item = &HenonFactor> {
        self.factors.iter().rev()
    }

    pub fn eval(&self, z: ComplexPoint, direction: Direction) -> Result<ComplexPoint> {
        let mut w = z;
        match direction {
            Direction::Forward => {
                for f in self.application_order() {
                    w = f.eval(w)?;
                }
            }
            Direction::Inverse => {
                for f in &self.factors {
                    w = f.eval_inverse(w)?;
                }
            }
        }
        Ok(w)
    }

    /// `s ∘ H⁻¹ ∘ s`; orbits of the inverse in `V_R^-` become orbits of the
    /// dual in `V_R^+`.
    pub fn dual(&self) -> HenonMap {
        HenonMap {
            factors: self.factors.iter().rev().map(HenonFactor::dual).collect(),
            degree: self.degree,
        }
    }
}

/// Orbit carrier that falls back to certified bounds on `log|y|` once exact
/// coordinates would overflow.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LogOrbitState {
    Exact(ComplexPoint),
    /// The true `log|y|` lies in `[log_y - err, log_y + err]`. `log_x` is the
    /// midpoint for the previous `log|y|`, kept for norm reporting only.
    Asymptotic { log_y: f64, err: f64, log_x: f64 },
}

/// Radius of the filtration region and the exact-to-asymptotic switch point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepContext {
    pub radius: f64,
    pub switch_threshold: f64,
}

pub const DEFAULT_SWITCH_THRESHOLD: f64 = 1e8;

impl StepContext {
    pub fn new(radius: f64) -> Self {
        StepContext {
            radius,
            switch_threshold: DEFAULT_SWITCH_THRESHOLD,
        }
    }
}

impl LogOrbitState {
    /// Midpoint of `log⁺‖z‖`.
    pub fn log_plus_norm(&self) -> f64 {
        match self {
            LogOrbitState::Exact(z) => {
                let n = z.norm();
                if n > 1.0 {
                    libm::log(n)
                } else {
                    0.0
                }
            }
            LogOrbitState::Asymptotic { log_y, .. } => log_y.max(0.0),
        }
    }

    pub fn error(&self) -> f64 {
        match self {
            LogOrbitState::Exact(_) => 0.0,
            LogOrbitState::Asymptotic { err, .. } => *err,
        }
    }

    /// Whether the state is known to lie in `V_R^+`.
    pub fn in_escaping_region(&self, radius: f64) -> bool {
        match self {
            LogOrbitState::Exact(z) => region_of(*z, radius) == Region::VPlus,
            LogOrbitState::Asymptotic { log_y, err, .. } => log_y - err >= libm::log(radius),
        }
    }

    fn from_point(z: ComplexPoint) -> LogOrbitState {
        LogOrbitState::Asymptotic {
            log_y: libm::log(modulus(z.y)),
            err: 0.0,
            log_x: libm::log(modulus(z.x)),
        }
    }
}

fn should_switch(z: &ComplexPoint, ctx: &StepContext) -> bool {
    modulus(z.y) >= ctx.switch_threshold && region_of(*z, ctx.radius) == Region::VPlus
}

/// One factor step with caller-supplied growth constants `m_bound`, `big_m_bound`,
/// which must be valid on `V_R^+` for `R = ctx.radius`.
pub fn log_step(
    f: &HenonFactor,
    s: LogOrbitState,
    m_bound: f64,
    big_m_bound: f64,
    ctx: &StepContext,
) -> Result<LogOrbitState> {
    let s = match s {
        LogOrbitState::Exact(z) if should_switch(&z, ctx) => LogOrbitState::from_point(z),
        LogOrbitState::Exact(z) => return exact_step(f, z, ctx, Some((m_bound, big_m_bound))),
        other => other,
    };
    asymptotic_step(f, s, libm::log(m_bound), libm::log(big_m_bound), ctx)
}

/// One factor step using growth constants evaluated at the current certified
/// lower bound of `|y|`, which are much tighter than the constants at `R`.
pub fn advance(f: &HenonFactor, s: LogOrbitState, ctx: &StepContext) -> Result<LogOrbitState> {
    let s = match s {
        LogOrbitState::Exact(z) if should_switch(&z, ctx) => LogOrbitState::from_point(z),
        LogOrbitState::Exact(z) => return exact_step(f, z, ctx, None),
        other => other,
    };
    let LogOrbitState::Asymptotic { log_y, err, .. } = s else {
        unreachable!()
    };
    let log_r = libm::log(ctx.radius);
    let lower = (log_y - err).max(log_r);
    let (lm, lbig) = f
        .log_bounds(lower)
        .ok_or(Error::Contract("growth bound infeasible at the filtration radius"))?;
    asymptotic_step(f, s, lm, lbig, ctx)
}

fn exact_step(
    f: &HenonFactor,
    z: ComplexPoint,
    ctx: &StepContext,
    bounds: Option<(f64, f64)>,
) -> Result<LogOrbitState> {
    match f.eval(z) {
        Ok(w) => Ok(LogOrbitState::Exact(w)),
        Err(Error::Overflow) if region_of(z, ctx.radius) == Region::VPlus => {
            let s = LogOrbitState::from_point(z);
            match bounds {
                Some((m, big_m)) => {
                    asymptotic_step(f, s, libm::log(m), libm::log(big_m), ctx)
                }
                None => advance(f, s, ctx),
            }
        }
        Err(e) => Err(e),
    }
}

fn asymptotic_step(
    f: &HenonFactor,
    s: LogOrbitState,
    log_m: f64,
    log_big_m: f64,
    ctx: &StepContext,
) -> Result<LogOrbitState> {
    let LogOrbitState::Asymptotic { log_y, err, .. } = s else {
        unreachable!()
    };
    if !(log_y - err >= libm::log(ctx.radius)) {
        return Err(Error::Contract("asymptotic state not certified inside V_R^+"));
    }
    let d = f.degree() as f64;
    Ok(LogOrbitState::Asymptotic {
        log_y: d * log_y + 0.5 * (log_m + log_big_m),
        err: d * err + 0.5 * (log_big_m - log_m),
        log_x: log_y,
    })
}

/// Applies every factor of `h` to the state, in acting order.
pub fn advance_map(h: &HenonMap, s: LogOrbitState, ctx: &StepContext) -> Result<LogOrbitState> {
    let mut s = s;
    for f in h.application_order() {
        s = advance(f, s, ctx)?;
    }
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    fn f1() -> HenonFactor {
        HenonFactor::new(vec![c(0.0), c(0.0), c(1.0)], c(1.0)).unwrap()
    }

    fn random_factor(rng: &mut ChaCha8Rng, degree: usize) -> HenonFactor {
        let mut coeffs: Vec<Complex64> = (0..degree)
            .map(|_| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
            .collect();
        coeffs.push(Complex64::new(rng.random_range(0.5..1.5), rng.random_range(-0.5..0.5)));
        let a = Complex64::from_polar(rng.random_range(0.3..2.0), rng.random_range(0.0..6.28));
        HenonFactor::new(coeffs, a).unwrap()
    }

    fn random_point(rng: &mut ChaCha8Rng, scale: f64) -> ComplexPoint {
        let mut z = || Complex64::new(rng.random_range(-scale..scale), rng.random_range(-scale..scale));
        ComplexPoint::new(z(), z())
    }

    #[test]
    fn factor_examples() {
        assert_eq!(f1().eval(ComplexPoint::real(1.0, 2.0)).unwrap(), ComplexPoint::real(2.0, 3.0));
        assert_eq!(f1().eval(ComplexPoint::ORIGIN).unwrap(), ComplexPoint::ORIGIN);
        let g = HenonFactor::new(vec![c(1.0), c(0.0), c(1.0)], c(0.5)).unwrap();
        assert_eq!(g.eval(ComplexPoint::real(2.0, 0.0)).unwrap(), ComplexPoint::ORIGIN);
        assert_eq!(
            f1().eval_inverse(ComplexPoint::real(2.0, 3.0)).unwrap(),
            ComplexPoint::real(1.0, 2.0)
        );
        assert_eq!(f1().eval_inverse(ComplexPoint::ORIGIN).unwrap(), ComplexPoint::ORIGIN);
    }

    #[test]
    fn rejects_invalid_factors() {
        assert!(HenonFactor::new(vec![c(0.0), c(1.0)], c(1.0)).is_err());
        assert!(HenonFactor::new(vec![c(0.0), c(0.0), c(0.0)], c(1.0)).is_err());
        assert!(HenonFactor::new(vec![c(0.0), c(0.0), c(1.0)], c(0.0)).is_err());
        assert_eq!(HenonMap::new(vec![]), Err(Error::EmptyMap));
    }

    #[test]
    fn overflow_is_signalled() {
        let z = ComplexPoint::real(0.0, 1e200);
        assert_eq!(f1().eval(z), Err(Error::Overflow));
    }

    #[test]
    fn factor_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..100 {
            let degree = 2 + rng.random_range(0..3);
            let f = random_factor(&mut rng, degree);
            let z = random_point(&mut rng, 3.0);
            let back = f.eval_inverse(f.eval(z).unwrap()).unwrap();
            assert!(back.distance(&z) <= 1e-12 * z.norm().max(1.0) * 10.0, "{back} vs {z}");
        }
    }

    #[test]
    fn map_examples() {
        let h = HenonMap::new(vec![f1(), f1()]).unwrap();
        assert_eq!(
            h.eval(ComplexPoint::real(1.0, 2.0), Direction::Forward).unwrap(),
            ComplexPoint::real(3.0, 7.0)
        );
        let single = HenonMap::single(f1());
        let z = ComplexPoint::real(0.3, -1.2);
        assert_eq!(single.eval(z, Direction::Forward).unwrap(), f1().eval(z).unwrap());
    }

    #[test]
    fn composition_order_is_outermost_first() {
        let g = HenonFactor::quadratic(c(-1.0), c(0.5)).unwrap();
        let h = HenonMap::new(vec![f1(), g.clone()]).unwrap();
        let z = ComplexPoint::real(0.4, 0.7);
        assert_eq!(h.eval(z, Direction::Forward).unwrap(), f1().eval(g.eval(z).unwrap()).unwrap());
    }

    #[test]
    fn degrees_multiply() {
        let cubic = HenonFactor::new(vec![c(0.0), c(0.0), c(0.0), c(1.0)], c(1.0)).unwrap();
        assert_eq!(HenonMap::single(f1()).degree(), 2);
        let h = HenonMap::new(vec![f1(), f1(), cubic]).unwrap();
        assert_eq!(h.degree(), 12);
        assert_eq!(h.compose(&h).unwrap().degree(), 144);
    }

    #[test]
    fn dual_conjugates_the_inverse() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..50 {
            let h = HenonMap::new(vec![random_factor(&mut rng, 2), random_factor(&mut rng, 3)]).unwrap();
            let z = random_point(&mut rng, 2.0);
            let via_inverse = h.eval(z.swapped(), Direction::Inverse).unwrap().swapped();
            let via_dual = h.dual().eval(z, Direction::Forward).unwrap();
            assert!(via_dual.distance(&via_inverse) <= 1e-9 * (1.0 + via_inverse.norm()));
        }
    }

    #[test]
    fn log_step_examples() {
        let ctx = StepContext::new(4.0);
        let s = log_step(&f1(), LogOrbitState::Exact(ComplexPoint::real(0.0, 1e6)), 2.0 / 3.0, 4.0 / 3.0, &ctx)
            .unwrap();
        assert_eq!(s, LogOrbitState::Exact(ComplexPoint::real(1e6, 1e12)));
        let s = log_step(&f1(), s, 2.0 / 3.0, 4.0 / 3.0, &ctx).unwrap();
        assert!(matches!(s, LogOrbitState::Asymptotic { .. }));

        let start = LogOrbitState::Asymptotic { log_y: 30.0, err: 0.0, log_x: 0.0 };
        let LogOrbitState::Asymptotic { log_y, err, .. } =
            log_step(&f1(), start, 2.0 / 3.0, 4.0 / 3.0, &ctx).unwrap()
        else {
            panic!()
        };
        let want = 60.0 + 0.5 * (libm::log(2.0 / 3.0) + libm::log(4.0 / 3.0));
        assert!((log_y - want).abs() < 1e-12);
        assert!((err - 0.5 * libm::log(2.0)).abs() < 1e-12);
        assert!((err - 0.3466).abs() < 1e-4);
    }

    #[test]
    fn log_step_rejects_uncertified_state() {
        let ctx = StepContext::new(4.0);
        let s = LogOrbitState::Asymptotic { log_y: 1.0, err: 0.5, log_x: 0.0 };
        assert!(matches!(log_step(&f1(), s, 0.5, 1.5, &ctx), Err(Error::Contract(_))));
    }

    #[test]
    fn advance_brackets_exact_orbit() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let ctx = StepContext { radius: 8.0, switch_threshold: 1e3 };
        for _ in 0..200 {
            let f = random_factor(&mut rng, 2);
            let mut exact = ComplexPoint::new(
                Complex64::new(rng.random_range(-1.0..1.0), 0.0),
                Complex64::from_polar(rng.random_range(1e3..1e4), rng.random_range(0.0..6.28)),
            );
            let mut s = LogOrbitState::Exact(exact);
            for _ in 0..4 {
                s = advance(&f, s, &ctx).unwrap();
                exact = f.eval(exact).unwrap();
                let truth = libm::log(modulus(exact.y));
                let LogOrbitState::Asymptotic { log_y, err, .. } = s else { panic!() };
                assert!((truth - log_y).abs() <= err * (1.0 + 1e-12) + 1e-12);
            }
        }
    }
}
