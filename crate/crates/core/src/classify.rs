//! Escape classification with replayable word certificates.

use alloc::vec::Vec;

use crate::currents::SliceSpec;
use crate::filtration::{region_of, Region};
use crate::henon::{ComplexPoint, Direction};
use crate::semigroup::{GeneratorSet, Word};
use crate::{Error, Result, Sign};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Verdict {
    /// Every word of length `cert_depth` lands in `V_R^{sign}`.
    EscapingStrong,
    /// The witness word lands in `V_R^{sign}`.
    EscapingWeak,
    /// No word of length up to `cert_depth` reaches `V_R^{sign}`.
    BoundedToDepth,
    /// The node budget ran out before any verdict.
    Undetermined,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Classification {
    pub verdict: Verdict,
    pub cert_depth: u32,
    pub witness: Option<Word>,
}

pub const DEFAULT_NODE_BUDGET: u64 = 1 << 22;

pub fn classify_point(gs: &GeneratorSet, z: ComplexPoint, sign: Sign, depth: u32) -> Result<Classification> {
    classify_point_with_budget(gs, z, sign, depth, DEFAULT_NODE_BUDGET)
}

pub fn classify_point_with_budget(
    gs: &GeneratorSet,
    z: ComplexPoint,
    sign: Sign,
    depth: u32,
    budget: u64,
) -> Result<Classification> {
    let walk = walk(gs, z, sign, depth, budget, false)?;
    let witness = match &walk.first_escape {
        Some(path) => Some(witness_word(gs, path, sign)?),
        None => None,
    };
    let c = if walk.complete && walk.all_escaped {
        Classification {
            verdict: Verdict::EscapingStrong,
            cert_depth: walk.deepest_escape,
            witness,
        }
    } else if let Some(w) = witness {
        Classification {
            verdict: Verdict::EscapingWeak,
            cert_depth: w.len() as u32,
            witness: Some(w),
        }
    } else if walk.complete && !walk.unresolved {
        Classification {
            verdict: Verdict::BoundedToDepth,
            cert_depth: depth,
            witness: None,
        }
    } else {
        Classification {
            verdict: Verdict::Undetermined,
            cert_depth: walk.deepest,
            witness: None,
        }
    };
    Ok(c)
}

/// First word (in depth-first order) of length at most `depth` that sends `z`
/// into `V_R^{sign}`.
pub fn find_escape_witness(gs: &GeneratorSet, z: ComplexPoint, sign: Sign, depth: u32) -> Result<Option<Word>> {
    let walk = walk(gs, z, sign, depth, DEFAULT_NODE_BUDGET, true)?;
    match walk.first_escape {
        Some(path) if !path.is_empty() => Ok(Some(witness_word(gs, &path, sign)?)),
        _ => Ok(None),
    }
}

/// The word whose evaluation replays a path of generator applications
/// (first applied first): `Plus` evaluates it forward, `Minus` via
/// `eval_word(.., Direction::Inverse)`.
fn witness_word(gs: &GeneratorSet, path: &[usize], sign: Sign) -> Result<Word> {
    if path.is_empty() {
        // Already escaping; any single generator keeps it so.
        return gs.word(alloc::vec![0]);
    }
    let indices = match sign {
        Sign::Plus => path.iter().rev().cloned().collect(),
        Sign::Minus => path.to_vec(),
    };
    gs.word(indices)
}

struct Walk {
    complete: bool,
    all_escaped: bool,
    unresolved: bool,
    deepest_escape: u32,
    deepest: u32,
    first_escape: Option<Vec<usize>>,
}

fn walk(gs: &GeneratorSet, z: ComplexPoint, sign: Sign, depth: u32, budget: u64, stop_at_first: bool) -> Result<Walk> {
    if !z.is_finite() {
        return Err(Error::Contract("point must be finite"));
    }
    let (start, direction) = match sign {
        Sign::Plus => (z, Direction::Forward),
        Sign::Minus => (z, Direction::Inverse),
    };
    let target = match sign {
        Sign::Plus => Region::VPlus,
        Sign::Minus => Region::VMinus,
    };
    let radius = gs.radius();
    let mut out = Walk {
        complete: true,
        all_escaped: true,
        unresolved: false,
        deepest_escape: 0,
        deepest: 0,
        first_escape: None,
    };
    let mut visited = 0u64;
    let mut path: Vec<usize> = Vec::new();
    // Each frame: point, next child index to try.
    let mut stack: Vec<(ComplexPoint, usize)> = alloc::vec![(start, 0)];
    let mut fresh = true;
    while !stack.is_empty() {
        let level = (stack.len() - 1) as u32;
        let top = stack.last_mut().unwrap();
        let (w, next) = *top;
        if fresh {
            fresh = false;
            visited += 1;
            out.deepest = out.deepest.max(level);
            if visited > budget {
                out.complete = false;
                break;
            }
            if region_of(w, radius) == target {
                out.deepest_escape = out.deepest_escape.max(level);
                if out.first_escape.is_none() {
                    out.first_escape = Some(path.clone());
                    if stop_at_first {
                        break;
                    }
                }
                stack.pop();
                path.pop();
                continue;
            }
            if level >= depth {
                out.all_escaped = false;
                stack.pop();
                path.pop();
                continue;
            }
        }
        if next == gs.n0() {
            stack.pop();
            path.pop();
            continue;
        }
        stack.last_mut().unwrap().1 += 1;
        match gs.gens()[next].eval(w, direction) {
            Ok(child) => {
                path.push(next);
                stack.push((child, 0));
                fresh = true;
            }
            Err(_) => {
                out.all_escaped = false;
                out.unresolved = true;
            }
        }
    }
    Ok(out)
}

/// Row-major classification of a slice, top row first.
pub fn classify_grid(gs: &GeneratorSet, slice: &SliceSpec, sign: Sign, depth: u32) -> Result<Vec<Classification>> {
    let mut out = Vec::with_capacity(slice.nx * slice.ny);
    for row in 0..slice.ny {
        out.extend(classify_row(gs, slice, sign, depth, row)?);
    }
    Ok(out)
}

pub fn classify_row(gs: &GeneratorSet, slice: &SliceSpec, sign: Sign, depth: u32, row: usize) -> Result<Vec<Classification>> {
    (0..slice.nx)
        .map(|col| classify_point(gs, slice.point(col, row), sign, depth))
        .collect()
}
