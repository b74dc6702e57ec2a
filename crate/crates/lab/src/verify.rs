//! The invariant suite behind `verify`.

use henon_lab_core::classify::find_escape_witness;
use henon_lab_core::currents::laplacian_density;
use henon_lab_core::filtration::region_of;
use henon_lab_core::green::{check_semi_invariance, green_estimate, green_k, single_map_green};
use henon_lab_core::{
    rng, Complex64, ComplexPoint, Direction, GeneratorSet, GreenParams, Region, Result, Sign, SliceGrid, SliceKind,
    SliceSpec, Window,
};
use rayon::prelude::*;
use serde::Serialize;

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct InvariantReport {
    pub name: &'static str,
    pub passed: bool,
    pub samples: usize,
    /// Largest observed excess of the checked quantity over its bound
    /// (non-positive when passing), or a count of failures.
    pub worst: f64,
    pub note: String,
}

#[derive(Debug, Clone, Copy)]
pub struct VerifySettings {
    pub seed: u64,
    pub samples: usize,
    pub params: GreenParams,
}

fn report(name: &'static str, samples: usize, excess: impl IntoIterator<Item = f64>, note: String) -> InvariantReport {
    let worst = excess.into_iter().fold(f64::NEG_INFINITY, f64::max);
    InvariantReport {
        name,
        passed: worst <= 0.0,
        samples,
        worst: if worst.is_finite() { worst } else { 0.0 },
        note,
    }
}

fn wedge_samples(gs: &GeneratorSet, seed: u64, n: usize, max_abs: f64, sign: Sign) -> Vec<ComplexPoint> {
    let mut r = rng::seeded(seed);
    (0..n).map(|_| rng::in_wedge(&mut r, gs.radius(), max_abs, sign)).collect()
}

fn bidisk_samples(seed: u64, n: usize, radius: f64) -> Vec<ComplexPoint> {
    let mut r = rng::seeded(seed);
    (0..n).map(|_| rng::in_bidisk(&mut r, radius)).collect()
}

pub fn filtration(gs: &GeneratorSet) -> InvariantReport {
    let fd = gs.filtration();
    let r = fd.radius;
    let grow = fd.m * r.powi(fd.d0 as i32);
    let excess = [1.0 - r, r - grow, fd.m - 1.0, 1.0 - fd.big_m];
    report(
        "filtration",
        1,
        excess,
        format!("R = {r}, m = {}, M = {}, d0 = {}", fd.m, fd.big_m, fd.d0),
    )
}

/// Every generator maps `V_R^+` into itself and its inverse maps `V_R^-`
/// into itself.
pub fn region_invariance(gs: &GeneratorSet, s: &VerifySettings) -> InvariantReport {
    let r = gs.radius();
    let mut pts = wedge_samples(gs, s.seed, s.samples, 1e6, Sign::Plus);
    pts.extend(wedge_samples(gs, s.seed ^ 1, s.samples, 1e6, Sign::Minus));
    let bad: Vec<f64> = pts
        .par_iter()
        .map(|&z| {
            let (dir, target) = match region_of(z, r) {
                Region::VPlus => (Direction::Forward, Region::VPlus),
                _ => (Direction::Inverse, Region::VMinus),
            };
            let miss = gs
                .gens()
                .iter()
                .filter(|h| h.eval(z, dir).map(|w| region_of(w, r) != target).unwrap_or(false))
                .count();
            miss as f64
        })
        .collect();
    let failures: f64 = bad.iter().sum();
    report("region-invariance", pts.len(), [failures], format!("{failures} images left their region"))
}

/// `|G_{k+1} - G_k| <= 2^{-(k+1)} M0` on `V_R^+`.
pub fn cauchy_rate(gs: &GeneratorSet, s: &VerifySettings, max_k: usize) -> Result<InvariantReport> {
    let m0 = gs.filtration().m0();
    let pts = wedge_samples(gs, s.seed ^ 2, s.samples, 1e6, Sign::Plus);
    let excess: Vec<f64> = pts
        .par_iter()
        .map(|&z| -> Result<f64> {
            let levels = (1..=max_k + 1)
                .map(|k| green_k(gs, z, k, Sign::Plus))
                .collect::<Result<Vec<_>>>()?;
            let mut worst = f64::NEG_INFINITY;
            for k in 1..=max_k {
                let diff = (levels[k] - levels[k - 1]).abs();
                worst = worst.max(diff - (0.5f64.powi(k as i32 + 1) * m0 + 1e-9));
            }
            Ok(worst)
        })
        .collect::<Result<_>>()?;
    Ok(report("cauchy-rate", pts.len(), excess, format!("k = 1..{max_k}, M0 = {m0}")))
}

pub fn semi_invariance(gs: &GeneratorSet, s: &VerifySettings) -> Result<InvariantReport> {
    let pts = bidisk_samples(s.seed ^ 3, s.samples, gs.radius() + 1.0);
    let excess: Vec<f64> = pts
        .par_iter()
        .map(|&z| -> Result<f64> {
            let res = check_semi_invariance(gs, z, Sign::Plus, &s.params)?;
            Ok(if res.contains_zero() { -res.width() } else { res.lo.abs().min(res.hi.abs()) })
        })
        .collect::<Result<_>>()?;
    Ok(report(
        "semi-invariance",
        pts.len(),
        excess,
        "residual interval contains 0".into(),
    ))
}

/// `|Ĝ^± - log|dominant coordinate|| <= M0 (n0/D) / (1 - n0/D) + width`.
pub fn log_growth(gs: &GeneratorSet, s: &VerifySettings, sign: Sign) -> Result<InvariantReport> {
    let m0 = gs.filtration().m0();
    let ratio = gs.n0() as f64 / gs.total_degree() as f64;
    let bound = m0 * ratio / (1.0 - ratio);
    let pts = wedge_samples(gs, s.seed ^ 4 ^ (sign == Sign::Minus) as u64, s.samples, 1e6, sign);
    let excess: Vec<f64> = pts
        .par_iter()
        .map(|&z| -> Result<f64> {
            let e = green_estimate(gs, z, sign, &s.params)?;
            let lead = match sign {
                Sign::Plus => z.y,
                Sign::Minus => z.x,
            };
            Ok((e.midpoint() - lead.norm().ln()).abs() - (bound + e.width()))
        })
        .collect::<Result<_>>()?;
    let name = match sign {
        Sign::Plus => "log-growth-plus",
        Sign::Minus => "log-growth-minus",
    };
    Ok(report(name, pts.len(), excess, format!("bound {bound}")))
}

pub fn positivity(gs: &GeneratorSet, s: &VerifySettings) -> Result<InvariantReport> {
    let pts = bidisk_samples(s.seed ^ 5, s.samples, 2.0 * gs.radius());
    let excess: Vec<f64> = pts
        .par_iter()
        .map(|&z| -> Result<f64> {
            let e = green_estimate(gs, z, Sign::Plus, &s.params)?;
            Ok((-e.lo).max(e.lo - e.hi))
        })
        .collect::<Result<_>>()?;
    Ok(report("positivity", pts.len(), excess, "0 <= lo <= hi".into()))
}

/// Escape witnesses land in the escaping region when replayed.
pub fn witness_replay(gs: &GeneratorSet, s: &VerifySettings, depth: u32) -> Result<InvariantReport> {
    let r = gs.radius();
    let pts = bidisk_samples(s.seed ^ 6, s.samples, r + 1.0);
    let outcomes: Vec<(bool, bool)> = pts
        .par_iter()
        .map(|&z| -> Result<(bool, bool)> {
            let mut ok = true;
            let mut any = false;
            for (sign, dir, target) in [
                (Sign::Plus, Direction::Forward, Region::VPlus),
                (Sign::Minus, Direction::Inverse, Region::VMinus),
            ] {
                if let Some(w) = find_escape_witness(gs, z, sign, depth)? {
                    any = true;
                    ok &= gs.eval_word(&w, z, dir).map(|p| region_of(p, r) == target).unwrap_or(false);
                }
            }
            Ok((ok, any))
        })
        .collect::<Result<_>>()?;
    let failures = outcomes.iter().filter(|o| !o.0).count();
    let found = outcomes.iter().filter(|o| o.1).count();
    Ok(report(
        "witness-replay",
        pts.len(),
        [failures as f64],
        format!("{found} points with witnesses, {failures} failed replays"),
    ))
}

/// The stencil sees no mass in the pluriharmonic field `Re w²`.
pub fn harmonic_control() -> Result<InvariantReport> {
    let spec = SliceSpec::new(
        SliceKind::VerticalLine { x0: Complex64::new(0.0, 0.0) },
        Window::square(Complex64::new(0.0, 0.0), 0.5),
        101,
        101,
    )?;
    let grid = SliceGrid::from_fn(spec, |w| (w * w).re);
    let mass = laplacian_density(&grid)?.total_mass;
    Ok(report("harmonic-control", 1, [mass.abs() - 1e-6], format!("mass {mass:e}")))
}

/// Single generator only: the estimate encloses the iterated oracle.
pub fn oracle(gs: &GeneratorSet, s: &VerifySettings) -> Result<InvariantReport> {
    let h = &gs.gens()[0];
    let pts = wedge_samples(gs, s.seed ^ 7, s.samples, 1e6, Sign::Plus);
    let excess: Vec<f64> = pts
        .par_iter()
        .map(|&z| -> Result<f64> {
            let e = green_estimate(gs, z, Sign::Plus, &s.params)?;
            let g = single_map_green(h, z, 40, Sign::Plus)?;
            Ok((e.midpoint() - g).abs() - (1e-6 + e.half_width()))
        })
        .collect::<Result<_>>()?;
    Ok(report("single-map-oracle", pts.len(), excess, "n = 40".into()))
}

pub fn run_suite(gs: &GeneratorSet, s: &VerifySettings, classify_depth: u32) -> Result<Vec<InvariantReport>> {
    let mut out = vec![
        filtration(gs),
        region_invariance(gs, s),
        cauchy_rate(gs, s, 8)?,
        semi_invariance(gs, s)?,
        log_growth(gs, s, Sign::Plus)?,
        log_growth(gs, s, Sign::Minus)?,
        positivity(gs, s)?,
        witness_replay(gs, s, classify_depth)?,
        harmonic_control()?,
    ];
    if gs.n0() == 1 {
        out.push(oracle(gs, s)?);
    }
    Ok(out)
}
