//! Dynamical Green's functions of a generator set.
//!
//! `green_estimate` certifies `G±(z)` by walking the word tree of `z` with the
//! weighted recursion `G(z) = D⁻¹ Σ_i G(H_i z)`. Nodes in `V_R^+` are closed
//! with an explicit asymptotic formula and error bound; nodes that are still
//! bounded at the depth limit are closed with the global growth bound.

use alloc::vec::Vec;

use crate::filtration::{region_of, Region};
use crate::henon::{
    advance_map, modulus, ComplexPoint, Direction, HenonMap, LogOrbitState, StepContext,
    DEFAULT_SWITCH_THRESHOLD,
};
use crate::rng;
use crate::semigroup::{GeneratorSet, Orientation};
use crate::{Error, Result, Sign};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GreenParams {
    /// Depth after which bounded-side nodes are closed.
    pub max_depth: u32,
    /// Number of explicit levels in the asymptotic closure before the
    /// geometric remainder.
    pub tail_depth: u32,
    /// Maximum number of tree nodes visited per point.
    pub leaf_budget: u64,
    /// `|y|` at which escaping nodes stop being expanded.
    pub switch_threshold: f64,
}

impl Default for GreenParams {
    fn default() -> Self {
        GreenParams {
            max_depth: 12,
            tail_depth: 20,
            leaf_budget: 1 << 20,
            switch_threshold: DEFAULT_SWITCH_THRESHOLD,
        }
    }
}

impl GreenParams {
    pub fn with_depths(max_depth: u32, tail_depth: u32) -> Self {
        GreenParams {
            max_depth,
            tail_depth,
            ..GreenParams::default()
        }
    }
}

/// Certified enclosure `[lo, hi]` of a Green's function value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GreenEstimate {
    pub lo: f64,
    pub hi: f64,
    /// Closed tree nodes.
    pub leaves: u64,
    /// Deepest node visited.
    pub depth: u32,
    /// The node budget ran out and the remaining subtrees were closed early.
    pub budget_exhausted: bool,
}

impl GreenEstimate {
    pub fn midpoint(&self) -> f64 {
        0.5 * (self.lo + self.hi)
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn half_width(&self) -> f64 {
        0.5 * (self.hi - self.lo)
    }

    pub fn contains(&self, v: f64) -> bool {
        self.lo <= v && v <= self.hi
    }
}

fn rounding_slack(v: f64) -> f64 {
    1e-13 * (1.0 + v.abs())
}

/// Bounds shared by the tree walk and the sequence evaluators.
struct Closure<'a> {
    o: &'a Orientation,
    log_r: f64,
    inv_total: f64,
    ratio: f64,
    center_offset: f64,
    k_up: f64,
    tail_depth: u32,
}

impl<'a> Closure<'a> {
    fn new(gs: &'a GeneratorSet, sign: Sign, tail_depth: u32) -> Self {
        let o = gs.oriented(sign);
        let total = gs.total_degree() as f64;
        let n0 = gs.n0() as f64;
        Closure {
            o,
            log_r: libm::log(gs.radius()),
            inv_total: 1.0 / total,
            ratio: n0 / total,
            center_offset: o.lambda_sum / (total - n0),
            k_up: gs.upper_growth_constant(sign),
            tail_depth,
        }
    }

    /// `log max(‖z‖, R)`.
    fn log_outer(&self, z: &ComplexPoint) -> f64 {
        let n = z.norm();
        if n.is_finite() {
            libm::log(n).max(self.log_r)
        } else {
            f64::INFINITY
        }
    }

    /// Enclosure of `G` at a bounded-side node.
    fn bounded(&self, z: &ComplexPoint) -> (f64, f64) {
        (0.0, self.log_outer(z) + self.k_up)
    }

    /// Enclosure of `G` at a node with `|y| = exp(log_y)` in `V_R^+`.
    fn escaping(&self, log_y: f64) -> (f64, f64) {
        let half = self.half_width(log_y);
        let center = log_y + self.center_offset;
        let lo = (center - half).max(0.0);
        let hi = (center + half).min(log_y.max(self.log_r) + self.k_up);
        (lo.min(hi), hi)
    }

    fn half_width(&self, log_y: f64) -> f64 {
        let mut weight = self.inv_total;
        let mut y = log_y;
        let mut total = 0.0;
        for _ in 0..self.tail_depth {
            let (level, next) = level_error(self.o, y);
            total += weight * level;
            weight *= self.ratio;
            y = next;
            if level == 0.0 {
                return total;
            }
        }
        total + weight / (1.0 - self.ratio) * level_error(self.o, y).0
    }
}

/// Sum over generators of the chained deviation of `log|π₂ H_i|` from its
/// leading-coefficient prediction at `|y| >= exp(log_y)`, and the smallest
/// certified `log|y|` after one generator.
fn level_error(o: &Orientation, log_y: f64) -> (f64, f64) {
    let mut sum = 0.0;
    let mut next = f64::INFINITY;
    for h in &o.maps {
        let (e, y) = map_error(h, log_y);
        sum += e;
        next = next.min(y);
    }
    (sum, next)
}

fn map_error(h: &HenonMap, log_y: f64) -> (f64, f64) {
    let mut err = 0.0;
    let mut y = log_y;
    for f in h.application_order() {
        let delta = f.delta(y);
        if !(delta < 1.0) {
            return (f64::INFINITY, y);
        }
        let d = f.degree() as f64;
        let shrink = libm::log1p(-delta);
        err = err * d - shrink;
        y = d * y + f.log_lead() + shrink;
    }
    (err, y)
}

fn start_point(z: ComplexPoint, sign: Sign) -> ComplexPoint {
    match sign {
        Sign::Plus => z,
        Sign::Minus => z.swapped(),
    }
}

fn check_finite(z: &ComplexPoint) -> Result<()> {
    if z.is_finite() {
        Ok(())
    } else {
        Err(Error::Contract("point must be finite"))
    }
}

/// Certified enclosure of `G_𝒢^{sign}(z)`.
pub fn green_estimate(gs: &GeneratorSet, z: ComplexPoint, sign: Sign, params: &GreenParams) -> Result<GreenEstimate> {
    check_finite(&z)?;
    let cl = Closure::new(gs, sign, params.tail_depth);
    let maps = &cl.o.maps;
    let radius = gs.radius();
    let inv_total = cl.inv_total;

    let (mut lo, mut hi) = (0.0f64, 0.0f64);
    let mut leaves = 0u64;
    let mut visited = 0u64;
    let mut deepest = 0u32;
    let mut exhausted = false;
    let mut stack: Vec<(ComplexPoint, u32)> = alloc::vec![(start_point(z, sign), 0)];
    let mut children: Vec<ComplexPoint> = Vec::with_capacity(maps.len());

    while let Some((w, depth)) = stack.pop() {
        visited += 1;
        deepest = deepest.max(depth);
        let weight = libm::pow(inv_total, depth as f64);
        let escaping = region_of(w, radius) == Region::VPlus;
        let close = |lo: &mut f64, hi: &mut f64| {
            let (a, b) = if escaping {
                cl.escaping(libm::log(modulus(w.y)))
            } else {
                cl.bounded(&w)
            };
            *lo += weight * a;
            *hi += weight * b;
        };
        if visited > params.leaf_budget {
            exhausted = true;
            close(&mut lo, &mut hi);
            leaves += 1;
            continue;
        }
        let stop = if escaping {
            modulus(w.y) >= params.switch_threshold || depth >= params.max_depth
        } else {
            depth >= params.max_depth
        };
        children.clear();
        let expanded = !stop
            && maps.iter().all(|h| match h.eval(w, Direction::Forward) {
                Ok(c) => {
                    children.push(c);
                    true
                }
                Err(_) => false,
            });
        if expanded {
            stack.extend(children.iter().map(|c| (*c, depth + 1)));
        } else {
            close(&mut lo, &mut hi);
            leaves += 1;
        }
    }
    Ok(GreenEstimate {
        lo: (lo - rounding_slack(lo)).max(0.0),
        hi: hi + rounding_slack(hi),
        leaves,
        depth: deepest,
        budget_exhausted: exhausted,
    })
}

/// `D^{-k} Σ_{h ∈ 𝒢_k} log⁺‖h^{±1}(z)‖`, with log-space midpoints where exact
/// coordinates would overflow.
pub fn green_k(gs: &GeneratorSet, z: ComplexPoint, k: usize, sign: Sign) -> Result<f64> {
    check_finite(&z)?;
    gs.words(k.max(1))?;
    let o = gs.oriented(sign);
    let ctx = StepContext::new(gs.radius());
    let mut sum = 0.0;
    let mut stack: Vec<(LogOrbitState, usize)> = alloc::vec![(LogOrbitState::Exact(start_point(z, sign)), 0)];
    while let Some((s, depth)) = stack.pop() {
        if depth == k {
            sum += s.log_plus_norm();
            continue;
        }
        for h in &o.maps {
            stack.push((advance_map(h, s, &ctx)?, depth + 1));
        }
    }
    Ok(sum * libm::pow(gs.total_degree() as f64, -(k as f64)))
}

/// Interval for `Σ_i Ĝ(H_i^{±1} z) - D Ĝ(z)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Residual {
    pub lo: f64,
    pub hi: f64,
    pub budget_exhausted: bool,
}

impl Residual {
    pub fn contains_zero(&self) -> bool {
        self.lo <= 0.0 && 0.0 <= self.hi
    }

    pub fn midpoint(&self) -> f64 {
        0.5 * (self.lo + self.hi)
    }

    /// Sum of the widths of all terms as they enter the residual.
    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }
}

pub fn check_semi_invariance(
    gs: &GeneratorSet,
    z: ComplexPoint,
    sign: Sign,
    params: &GreenParams,
) -> Result<Residual> {
    let base = green_estimate(gs, z, sign, params)?;
    let direction = match sign {
        Sign::Plus => Direction::Forward,
        Sign::Minus => Direction::Inverse,
    };
    let total = gs.total_degree() as f64;
    let (mut lo, mut hi) = (-total * base.hi, -total * base.lo);
    let mut exhausted = base.budget_exhausted;
    for h in gs.gens() {
        let e = green_estimate(gs, h.eval(z, direction)?, sign, params)?;
        lo += e.lo;
        hi += e.hi;
        exhausted |= e.budget_exhausted;
    }
    Ok(Residual {
        lo: lo - rounding_slack(lo),
        hi: hi + rounding_slack(hi),
        budget_exhausted: exhausted,
    })
}

/// A non-autonomous sequence `h_1, h_2, ...` of generator indices (0-based;
/// `h_1` acts first). Finite sequences repeat periodically.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SequenceSpec {
    Explicit(Vec<usize>),
    /// `length` indices drawn uniformly from a ChaCha stream.
    Seeded { seed: u64, length: usize },
}

impl SequenceSpec {
    pub fn resolve(&self, n0: usize) -> Result<Sequence> {
        let period = match self {
            SequenceSpec::Explicit(list) => {
                if let Some(&bad) = list.iter().find(|&&i| i >= n0) {
                    return Err(Error::IndexOutOfRange { index: bad, n0 });
                }
                list.clone()
            }
            SequenceSpec::Seeded { seed, length } => {
                use rand::Rng;
                let mut r = rng::seeded(*seed);
                (0..*length).map(|_| r.random_range(0..n0)).collect()
            }
        };
        if period.is_empty() {
            return Err(Error::Contract("sequence must be nonempty"));
        }
        Ok(Sequence { period })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Sequence {
    period: Vec<usize>,
}

impl Sequence {
    /// Generator index of `h_{j+1}`.
    pub fn at(&self, j: usize) -> usize {
        self.period[j % self.period.len()]
    }
}

struct NaOrbit {
    state: LogOrbitState,
    log_degree: f64,
}

fn run_sequence(gs: &GeneratorSet, seq: &Sequence, z: ComplexPoint, k: usize, sign: Sign) -> Result<NaOrbit> {
    check_finite(&z)?;
    let o = gs.oriented(sign);
    let ctx = StepContext::new(gs.radius());
    let mut state = LogOrbitState::Exact(start_point(z, sign));
    let mut log_degree = 0.0;
    for j in 0..k {
        let h = &o.maps[seq.at(j)];
        state = advance_map(h, state, &ctx)?;
        log_degree += libm::log(h.degree() as f64);
    }
    Ok(NaOrbit { state, log_degree })
}

/// `𝐝_k⁻¹ log⁺‖h(k)(z)‖` for the sequence (midpoint in log space).
pub fn na_green_k(gs: &GeneratorSet, seq: &SequenceSpec, z: ComplexPoint, k: usize, sign: Sign) -> Result<f64> {
    let seq = seq.resolve(gs.n0())?;
    let orbit = run_sequence(gs, &seq, z, k, sign)?;
    Ok(orbit.state.log_plus_norm() * libm::exp(-orbit.log_degree))
}

const NA_TAIL_STEPS: usize = 40;

/// Certified enclosure of the non-autonomous Green's function after `k`
/// steps of the sequence.
pub fn na_green(gs: &GeneratorSet, seq: &SequenceSpec, z: ComplexPoint, k: usize, sign: Sign) -> Result<GreenEstimate> {
    let seq = seq.resolve(gs.n0())?;
    let orbit = run_sequence(gs, &seq, z, k, sign)?;
    let o = gs.oriented(sign);
    let radius = gs.radius();
    let log_r = libm::log(radius);
    let inv_degree = libm::exp(-orbit.log_degree);
    let d0 = gs.filtration().d0 as f64;
    let kappa_max = o.kappa.iter().cloned().fold(0.0, f64::max);

    let (log_outer, escaping) = match orbit.state {
        LogOrbitState::Exact(w) => {
            let n = w.norm();
            let log_outer = libm::log(n).max(log_r);
            let escaping = region_of(w, radius) == Region::VPlus;
            (log_outer, escaping.then(|| (libm::log(modulus(w.y)), 0.0)))
        }
        LogOrbitState::Asymptotic { log_y, err, .. } => (log_y + err, Some((log_y, err))),
    };
    let upper = (log_outer + kappa_max / (d0 - 1.0)) * inv_degree;

    let (lo, hi) = match escaping {
        None => (0.0, upper),
        Some((log_y, err)) => {
            let mut y = log_y - err;
            let mut scale = 1.0;
            let mut center = 0.0;
            let mut spread = err;
            for t in 0..NA_TAIL_STEPS {
                let i = seq.at(k + t);
                let h = &o.maps[i];
                scale /= h.degree() as f64;
                let (e, next) = map_error(h, y);
                center += scale * o.lambda[i];
                spread += scale * e;
                y = next;
            }
            let worst = (0..o.maps.len())
                .map(|i| o.lambda[i].abs() + map_error(&o.maps[i], y).0)
                .fold(0.0, f64::max);
            spread += scale / (d0 - 1.0) * worst;
            let mid = log_y + center;
            (
                ((mid - spread) * inv_degree).max(0.0),
                ((mid + spread) * inv_degree).min(upper),
            )
        }
    };
    Ok(GreenEstimate {
        lo: (lo - rounding_slack(lo)).max(0.0),
        hi: hi + rounding_slack(hi),
        leaves: 1,
        depth: k as u32,
        budget_exhausted: false,
    })
}

fn iterate_green(h: &HenonMap, z: ComplexPoint, n: usize, ctx: &StepContext) -> Result<f64> {
    let mut state = LogOrbitState::Exact(z);
    for _ in 0..n {
        state = advance_map(h, state, ctx)?;
    }
    Ok(state.log_plus_norm() * libm::exp(-(n as f64) * libm::log(h.degree() as f64)))
}

/// `log⁺‖H^{±n}(z)‖ / d^n`, iterated in log space.
pub fn single_map_green(h: &HenonMap, z: ComplexPoint, n: usize, sign: Sign) -> Result<f64> {
    check_finite(&z)?;
    let fd = crate::filtration::find_filtration(core::slice::from_ref(h))?;
    let ctx = StepContext::new(fd.radius);
    match sign {
        Sign::Plus => iterate_green(h, z, n, &ctx),
        Sign::Minus => iterate_green(&h.dual(), z.swapped(), n, &ctx),
    }
}

/// `D^{-k} Σ_{h ∈ 𝒢_k} d_h G_h(z)` with each `G_h` from `inner_n` iterations.
pub fn green_tilde_k(gs: &GeneratorSet, z: ComplexPoint, k: usize, sign: Sign, inner_n: usize) -> Result<f64> {
    check_finite(&z)?;
    let ctx = StepContext::new(gs.radius());
    let scale = libm::pow(gs.total_degree() as f64, -(k as f64));
    let mut sum = 0.0;
    for w in gs.words(k)? {
        let h = gs.word_map(&w)?;
        let g = match sign {
            Sign::Plus => iterate_green(&h, z, inner_n, &ctx)?,
            Sign::Minus => iterate_green(&h.dual(), z.swapped(), inner_n, &ctx)?,
        };
        sum += w.degree() as f64 * g;
    }
    Ok(sum * scale)
}
