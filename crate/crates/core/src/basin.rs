//! Attracting parameters, non-autonomous basins and boundary probes.

use crate::classify::find_escape_witness;
use crate::filtration::{region_of, Region};
use crate::green::SequenceSpec;
use crate::henon::{ComplexPoint, Direction};
use crate::rng;
use crate::semigroup::{GeneratorSet, Word};
use crate::{Error, Result, Sign};

/// Sampled contraction `‖H_i(z)‖ <= alpha ‖z‖` on `B(0; r)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AttractingParams {
    pub r: f64,
    pub alpha: f64,
    /// Points sampled per shell and generator.
    pub samples: usize,
}

pub const ACCEPT_ALPHA: f64 = 0.95;
const MIN_RADIUS: f64 = 1e-6;
const REFINE_STEPS: u32 = 12;

/// Largest sampled contraction ratio over the shells `‖z‖ = r, r/2, r/4`.
pub fn sampled_alpha(gs: &GeneratorSet, r: f64, samples: usize, seed: u64) -> f64 {
    let mut stream = rng::seeded(seed);
    let mut alpha: f64 = 0.0;
    for shell in [r, 0.5 * r, 0.25 * r] {
        for _ in 0..samples {
            let z = rng::on_sphere(&mut stream, shell);
            for h in gs.gens() {
                let ratio = match h.eval(z, Direction::Forward) {
                    Ok(w) => w.norm() / shell,
                    Err(_) => f64::INFINITY,
                };
                alpha = alpha.max(ratio);
            }
        }
    }
    alpha
}

/// Halves `r` from `r_max` until the sampled ratio is at most 0.95, then
/// bisects between the accepted radius and the last rejected one.
pub fn estimate_attracting_params(gs: &GeneratorSet, r_max: f64, samples: usize, seed: u64) -> Result<AttractingParams> {
    for (i, h) in gs.gens().iter().enumerate() {
        if h.eval(ComplexPoint::ORIGIN, Direction::Forward)?.norm() > 1e-12 {
            return Err(Error::OriginNotFixed(i));
        }
    }
    if !(r_max > 0.0) {
        return Err(Error::Contract("r_max must be positive"));
    }
    let samples = samples.max(1);
    let mut r = r_max;
    let mut rejected = None;
    while r >= MIN_RADIUS {
        let alpha = sampled_alpha(gs, r, samples, seed);
        if alpha <= ACCEPT_ALPHA {
            let mut best = AttractingParams { r, alpha, samples };
            if let Some(mut hi) = rejected {
                let mut lo = r;
                for _ in 0..REFINE_STEPS {
                    let mid = 0.5 * (lo + hi);
                    let a = sampled_alpha(gs, mid, samples, seed);
                    if a <= ACCEPT_ALPHA {
                        lo = mid;
                        best = AttractingParams { r: mid, alpha: a, samples };
                    } else {
                        hi = mid;
                    }
                }
            }
            return Ok(best);
        }
        rejected = Some(r);
        r *= 0.5;
    }
    Err(Error::NotAttracting)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BasinVerdict {
    /// Entered `B(0; r)` after this many steps.
    Converged(u32),
    /// Entered `V_R^+` after this many steps.
    Diverged(u32),
    Undetermined(u32),
}

pub fn basin_membership(
    gs: &GeneratorSet,
    seq: &SequenceSpec,
    z: ComplexPoint,
    max_steps: u32,
    ap: &AttractingParams,
) -> Result<BasinVerdict> {
    let seq = seq.resolve(gs.n0())?;
    let radius = gs.radius();
    let mut w = z;
    for step in 0..=max_steps {
        if w.norm() <= ap.r {
            return Ok(BasinVerdict::Converged(step));
        }
        if region_of(w, radius) == Region::VPlus {
            return Ok(BasinVerdict::Diverged(step));
        }
        if step == max_steps {
            break;
        }
        match gs.gens()[seq.at(step as usize)].eval(w, Direction::Forward) {
            Ok(next) => w = next,
            Err(_) => return Ok(BasinVerdict::Undetermined(step)),
        }
    }
    Ok(BasinVerdict::Undetermined(max_steps))
}

/// Settings shared by the boundary and witness searches.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BasinContext {
    pub ap: AttractingParams,
    pub max_steps: u32,
}

/// Bracket across the basin boundary: `inside` converges, `outside` does not.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundaryProbe {
    pub inside: ComplexPoint,
    pub outside: ComplexPoint,
    pub iterations: u32,
}

impl BoundaryProbe {
    pub fn width(&self) -> f64 {
        self.inside.distance(&self.outside)
    }
}

pub fn boundary_bisect(
    gs: &GeneratorSet,
    seq: &SequenceSpec,
    z_in: ComplexPoint,
    z_out: ComplexPoint,
    tol: f64,
    ctx: &BasinContext,
) -> Result<BoundaryProbe> {
    let converged = |z| -> Result<bool> {
        Ok(matches!(
            basin_membership(gs, seq, z, ctx.max_steps, &ctx.ap)?,
            BasinVerdict::Converged(_)
        ))
    };
    let diverged = matches!(
        basin_membership(gs, seq, z_out, ctx.max_steps, &ctx.ap)?,
        BasinVerdict::Diverged(_)
    );
    if !converged(z_in)? || !diverged {
        return Err(Error::NoVerdictFlip);
    }
    if !(tol > 0.0) {
        return Err(Error::Contract("tolerance must be positive"));
    }
    let (mut inside, mut outside) = (z_in, z_out);
    let mut iterations = 0;
    while inside.distance(&outside) > tol && iterations < 200 {
        let mid = ComplexPoint::new(0.5 * (inside.x + outside.x), 0.5 * (inside.y + outside.y));
        if converged(mid)? {
            inside = mid;
        } else {
            outside = mid;
        }
        iterations += 1;
    }
    Ok(BoundaryProbe {
        inside,
        outside,
        iterations,
    })
}

/// A word sending a basin point into `V_R^+`, showing that it is not in the
/// strong filled set.
pub fn strong_k_escape_witness(
    gs: &GeneratorSet,
    seq: &SequenceSpec,
    z: ComplexPoint,
    depth: u32,
    ctx: &BasinContext,
) -> Result<Option<Word>> {
    match basin_membership(gs, seq, z, ctx.max_steps, &ctx.ap)? {
        BasinVerdict::Converged(_) => find_escape_witness(gs, z, Sign::Plus, depth),
        _ => Err(Error::Contract("witness search needs a converging basin point")),
    }
}
