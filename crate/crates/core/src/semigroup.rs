//! Generator sets, words and the minimal generating set reduction.

use alloc::vec::Vec;
use core::cmp::Ordering;
use core::fmt;

use crate::filtration::{find_filtration, FiltrationData};
use crate::henon::{ComplexPoint, Direction, HenonFactor, HenonMap};
use crate::rng;
use crate::{Error, Result, Sign};

/// Per-direction constants: the maps whose forward orbits in `V_R^+` are
/// followed (the generators for `Plus`, their duals for `Minus`).
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Orientation {
    pub maps: Vec<HenonMap>,
    /// `log` of the composite leading coefficient of each map.
    pub lambda: Vec<f64>,
    /// Additive constant in `log max(‖h z‖, R) <= d log max(‖z‖, R) + kappa`.
    pub kappa: Vec<f64>,
    pub lambda_sum: f64,
    pub kappa_sum: f64,
}

impl Orientation {
    fn new(maps: Vec<HenonMap>, radius: f64) -> Self {
        let mut lambda = Vec::with_capacity(maps.len());
        let mut kappa = Vec::with_capacity(maps.len());
        for h in &maps {
            let (mut l, mut k) = (0.0, 0.0);
            for f in h.application_order() {
                let d = f.degree() as f64;
                let big_m = crate::filtration::factor_bounds(f, radius)
                    .map(|b| b.1)
                    .unwrap_or(f64::INFINITY);
                let grow = big_m.max(libm::pow(radius, 1.0 - d)).max(1.0);
                l = l * d + f.log_lead();
                k = k * d + libm::log(grow);
            }
            lambda.push(l);
            kappa.push(k);
        }
        Orientation {
            lambda_sum: lambda.iter().sum(),
            kappa_sum: kappa.iter().sum(),
            maps,
            lambda,
            kappa,
        }
    }
}

/// An ordered nonempty list of generators with their filtration data.
#[derive(Debug, Clone, PartialEq)]
pub struct GeneratorSet {
    gens: Vec<HenonMap>,
    total_degree: u64,
    filtration: FiltrationData,
    plus: Orientation,
    minus: Orientation,
}

impl GeneratorSet {
    pub fn new(gens: Vec<HenonMap>) -> Result<Self> {
        let filtration = find_filtration(&gens)?;
        let mut total: u64 = 0;
        for h in &gens {
            total = total
                .checked_add(h.degree())
                .ok_or(Error::Budget("total degree overflows u64"))?;
        }
        let r = filtration.radius;
        Ok(GeneratorSet {
            plus: Orientation::new(gens.clone(), r),
            minus: Orientation::new(gens.iter().map(HenonMap::dual).collect(), r),
            total_degree: total,
            filtration,
            gens,
        })
    }

    pub fn gens(&self) -> &[HenonMap] {
        &self.gens
    }

    pub fn n0(&self) -> usize {
        self.gens.len()
    }

    /// `D = Σ d_i`.
    pub fn total_degree(&self) -> u64 {
        self.total_degree
    }

    pub fn filtration(&self) -> &FiltrationData {
        &self.filtration
    }

    pub fn radius(&self) -> f64 {
        self.filtration.radius
    }

    pub(crate) fn oriented(&self, sign: Sign) -> &Orientation {
        match sign {
            Sign::Plus => &self.plus,
            Sign::Minus => &self.minus,
        }
    }

    /// Additive constant of the global upper bound
    /// `G(z) <= log max(‖z‖, R) + k_up`.
    pub fn upper_growth_constant(&self, sign: Sign) -> f64 {
        self.oriented(sign).kappa_sum / (self.total_degree - self.n0() as u64) as f64
    }

    pub fn word(&self, indices: Vec<usize>) -> Result<Word> {
        if indices.is_empty() {
            return Err(Error::Contract("a word has length at least 1"));
        }
        let mut degree: u64 = 1;
        for &i in &indices {
            let h = self.gens.get(i).ok_or(Error::IndexOutOfRange { index: i, n0: self.n0() })?;
            degree = degree.saturating_mul(h.degree());
        }
        Ok(Word { indices, degree })
    }

    /// All `n0^k` words of length `k`, in lexicographic order.
    pub fn words(&self, k: usize) -> Result<Words> {
        if k == 0 {
            return Err(Error::Contract("word length must be at least 1"));
        }
        let n0 = self.n0();
        if k as f64 * libm::log2(n0 as f64) > 40.0 {
            return Err(Error::Budget("more than 2^40 words requested"));
        }
        Ok(Words {
            degrees: self.gens.iter().map(HenonMap::degree).collect(),
            k,
            next: 0,
            count: (n0 as u64).pow(k as u32),
        })
    }

    /// `Forward` evaluates `H_{i1} ∘ ... ∘ H_{ik}`; `Inverse` evaluates
    /// `H_{ik}⁻¹ ∘ ... ∘ H_{i1}⁻¹`.
    pub fn eval_word(&self, w: &Word, z: ComplexPoint, direction: Direction) -> Result<ComplexPoint> {
        let mut p = z;
        match direction {
            Direction::Forward => {
                for &i in w.indices.iter().rev() {
                    p = self.gen(i)?.eval(p, Direction::Forward)?;
                }
            }
            Direction::Inverse => {
                for &i in &w.indices {
                    p = self.gen(i)?.eval(p, Direction::Inverse)?;
                }
            }
        }
        Ok(p)
    }

    /// The composed map of a word.
    pub fn word_map(&self, w: &Word) -> Result<HenonMap> {
        let mut factors: Vec<HenonFactor> = Vec::new();
        for &i in &w.indices {
            factors.extend(self.gen(i)?.factors().iter().cloned());
        }
        HenonMap::new(factors)
    }

    fn gen(&self, i: usize) -> Result<&HenonMap> {
        self.gens.get(i).ok_or(Error::IndexOutOfRange { index: i, n0: self.n0() })
    }
}

/// Generator indices, outermost first: `(i1, ..., ik)` is
/// `H_{i1} ∘ ... ∘ H_{ik}`. Indices are 0-based; display is 1-based.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Word {
    indices: Vec<usize>,
    degree: u64,
}

impl Word {
    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    /// Product of generator degrees (saturating).
    pub fn degree(&self) -> u64 {
        self.degree
    }
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("(")?;
        for (j, i) in self.indices.iter().enumerate() {
            if j > 0 {
                f.write_str(",")?;
            }
            write!(f, "{}", i + 1)?;
        }
        f.write_str(")")
    }
}

/// Lazy enumeration of one word level; word `j` is decodable directly.
#[derive(Debug, Clone)]
pub struct Words {
    degrees: Vec<u64>,
    k: usize,
    next: u64,
    count: u64,
}

impl Words {
    pub fn count_total(&self) -> u64 {
        self.count
    }

    /// The `j`-th word in lexicographic order.
    pub fn nth_word(&self, j: u64) -> Option<Word> {
        if j >= self.count {
            return None;
        }
        let n0 = self.degrees.len() as u64;
        let mut indices = alloc::vec![0usize; self.k];
        let mut rest = j;
        for slot in indices.iter_mut().rev() {
            *slot = (rest % n0) as usize;
            rest /= n0;
        }
        let degree = indices
            .iter()
            .fold(1u64, |acc, &i| acc.saturating_mul(self.degrees[i]));
        Some(Word { indices, degree })
    }
}

impl Iterator for Words {
    type Item = Word;

    fn next(&mut self) -> Option<Word> {
        let w = self.nth_word(self.next)?;
        self.next += 1;
        Some(w)
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        let left = (self.count - self.next) as usize;
        (left, Some(left))
    }
}

/// Polynomial identity test at seeded points of the bidisk of radius 2.
pub fn maps_equal_probabilistic(a: &HenonMap, b: &HenonMap, trials: usize, seed: u64) -> bool {
    if a.degree() != b.degree() {
        return false;
    }
    let mut rng = rng::seeded(seed);
    for _ in 0..trials.max(16) {
        let z = rng::in_bidisk(&mut rng, 2.0);
        match (a.eval(z, Direction::Forward), b.eval(z, Direction::Forward)) {
            (Ok(u), Ok(v)) => {
                if u.distance(&v) > 1e-8 * (1.0 + u.norm()) {
                    return false;
                }
            }
            (Err(_), Err(_)) => {}
            _ => return false,
        }
    }
    true
}

/// Degree, factor count, then coefficients and `a` lexicographically.
pub fn canonical_cmp(a: &HenonMap, b: &HenonMap) -> Ordering {
    a.degree()
        .cmp(&b.degree())
        .then(a.factors().len().cmp(&b.factors().len()))
        .then_with(|| {
            for (f, g) in a.factors().iter().zip(b.factors()) {
                let ord = f.coeffs().len().cmp(&g.coeffs().len()).then_with(|| {
                    let fs = f.coeffs().iter().copied().chain(core::iter::once(f.a()));
                    let gs = g.coeffs().iter().copied().chain(core::iter::once(g.a()));
                    for (x, y) in fs.zip(gs) {
                        let o = x.re.total_cmp(&y.re).then(x.im.total_cmp(&y.im));
                        if o != Ordering::Equal {
                            return o;
                        }
                    }
                    Ordering::Equal
                });
                if ord != Ordering::Equal {
                    return ord;
                }
            }
            Ordering::Equal
        })
}

#[derive(Debug, Clone, PartialEq)]
pub struct Reduction {
    pub set: GeneratorSet,
    /// The word search ran out of budget; `set` is the unreduced input.
    pub budget_exceeded: bool,
}

const EQUALITY_TRIALS: usize = 24;
const EQUALITY_SEED: u64 = 0x5eed_0001;
const SEARCH_BUDGET: usize = 1 << 16;

/// Drops every generator that equals a word of length at least 2 in the
/// retained generators of lower degree, or duplicates a retained one.
/// The result is in canonical order.
pub fn minimal_generating_set(gs: &GeneratorSet) -> Result<Reduction> {
    let mut sorted: Vec<HenonMap> = gs.gens.clone();
    sorted.sort_by(canonical_cmp);
    let mut kept: Vec<HenonMap> = Vec::new();
    let mut budget = SEARCH_BUDGET;
    for g in sorted {
        let duplicate = kept
            .iter()
            .any(|k| maps_equal_probabilistic(k, &g, EQUALITY_TRIALS, EQUALITY_SEED));
        if duplicate {
            continue;
        }
        let lower: Vec<&HenonMap> = kept.iter().filter(|k| k.degree() < g.degree()).collect();
        match expressible(&g, &lower, &mut budget) {
            Some(true) => {}
            Some(false) => kept.push(g),
            None => {
                return Ok(Reduction {
                    set: gs.clone(),
                    budget_exceeded: true,
                })
            }
        }
    }
    Ok(Reduction {
        set: GeneratorSet::new(kept)?,
        budget_exceeded: false,
    })
}

/// `None` when the budget runs out.
fn expressible(target: &HenonMap, pool: &[&HenonMap], budget: &mut usize) -> Option<bool> {
    let mut prefix: Vec<usize> = Vec::new();
    search(target, pool, &mut prefix, 1, budget)
}

fn search(
    target: &HenonMap,
    pool: &[&HenonMap],
    prefix: &mut Vec<usize>,
    degree: u64,
    budget: &mut usize,
) -> Option<bool> {
    let goal = target.degree();
    if degree == goal {
        if prefix.len() < 2 {
            return Some(false);
        }
        *budget = budget.checked_sub(1)?;
        let mut word = pool[prefix[0]].clone();
        for &i in &prefix[1..] {
            word = word.compose(pool[i]).ok()?;
        }
        return Some(maps_equal_probabilistic(&word, target, EQUALITY_TRIALS, EQUALITY_SEED));
    }
    for (i, h) in pool.iter().enumerate() {
        let next = degree * h.degree();
        if goal % next != 0 {
            continue;
        }
        prefix.push(i);
        let found = search(target, pool, prefix, next, budget);
        prefix.pop();
        match found {
            Some(false) => {}
            other => return other,
        }
    }
    Some(false)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::string::ToString;
    use alloc::vec;
    use num_complex::Complex64;
    use proptest::prelude::*;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    fn quad(cst: f64, a: f64) -> HenonMap {
        HenonMap::single(HenonFactor::quadratic(c(cst), c(a)).unwrap())
    }

    fn pair() -> GeneratorSet {
        GeneratorSet::new(vec![quad(-1.0, 0.5), quad(0.3, -0.8)]).unwrap()
    }

    #[test]
    fn words_examples() {
        let gs = pair();
        let ws: Vec<_> = gs.words(2).unwrap().map(|w| w.to_string()).collect();
        assert_eq!(ws, ["(1,1)", "(1,2)", "(2,1)", "(2,2)"]);
        let one = GeneratorSet::new(vec![quad(0.0, 1.0)]).unwrap();
        assert_eq!(one.words(17).unwrap().count(), 1);
        let three = GeneratorSet::new(vec![quad(0.0, 1.0), quad(0.1, 1.0), quad(0.2, 1.0)]).unwrap();
        assert_eq!(three.words(4).unwrap().count(), 81);
        assert!(matches!(gs.words(41), Err(Error::Budget(_))));
        assert_eq!(gs.words(3).unwrap().nth_word(5).unwrap().to_string(), "(2,1,2)");
    }

    #[test]
    fn eval_word_order() {
        let gs = pair();
        let z = ComplexPoint::real(0.2, -0.4);
        let w1 = gs.word(vec![0]).unwrap();
        assert_eq!(
            gs.eval_word(&w1, z, Direction::Forward).unwrap(),
            gs.gens()[0].eval(z, Direction::Forward).unwrap()
        );
        let w12 = gs.word(vec![0, 1]).unwrap();
        let inner = gs.gens()[1].eval(z, Direction::Forward).unwrap();
        assert_eq!(
            gs.eval_word(&w12, z, Direction::Forward).unwrap(),
            gs.gens()[0].eval(inner, Direction::Forward).unwrap()
        );
        let back = gs.eval_word(&w12, gs.eval_word(&w12, z, Direction::Forward).unwrap(), Direction::Inverse);
        assert!(back.unwrap().distance(&z) < 1e-12);
        assert_eq!(
            gs.word_map(&w12).unwrap().eval(z, Direction::Forward).unwrap(),
            gs.eval_word(&w12, z, Direction::Forward).unwrap()
        );
    }

    #[test]
    fn probabilistic_equality() {
        let (h, g) = (quad(-1.0, 0.5), quad(0.3, -0.8));
        assert!(maps_equal_probabilistic(&h, &h, 16, 1));
        assert!(!maps_equal_probabilistic(&h, &g, 16, 1));
        assert!(!maps_equal_probabilistic(&h.compose(&g).unwrap(), &g.compose(&h).unwrap(), 16, 1));
    }

    #[test]
    fn minimal_set_examples() {
        let (h, g) = (quad(-1.0, 0.5), quad(0.3, -0.8));
        let gs = GeneratorSet::new(vec![h.clone(), g.clone(), h.compose(&g).unwrap()]).unwrap();
        let red = minimal_generating_set(&gs).unwrap();
        assert!(!red.budget_exceeded);
        assert_eq!(red.set.n0(), 2);

        let single = GeneratorSet::new(vec![h.clone()]).unwrap();
        assert_eq!(minimal_generating_set(&single).unwrap().set.gens(), single.gens());

        let h2 = h.compose(&h).unwrap();
        let h3 = h2.compose(&h).unwrap();
        let powers = GeneratorSet::new(vec![h2, h3]).unwrap();
        assert_eq!(minimal_generating_set(&powers).unwrap().set.n0(), 2);
    }

    #[test]
    fn duplicates_collapse() {
        let h = quad(-1.0, 0.5);
        let gs = GeneratorSet::new(vec![h.clone(), h.clone()]).unwrap();
        assert_eq!(minimal_generating_set(&gs).unwrap().set.n0(), 1);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn minimal_set_is_order_invariant_and_idempotent(
            c1 in -1.0f64..1.0, c2 in -1.0f64..1.0, a1 in 0.3f64..1.5, a2 in 0.3f64..1.5,
            perm in 0usize..6, extra in proptest::bool::ANY,
        ) {
            let h = quad(c1, a1);
            let g = quad(c2, -a2);
            let mut list = vec![h.clone(), g.clone(), h.compose(&g).unwrap()];
            if extra {
                list.push(g.compose(&h).unwrap().compose(&g).unwrap());
            }
            let orders = [[0, 1, 2], [0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]];
            let mut shuffled: Vec<HenonMap> = orders[perm].iter().map(|&i| list[i].clone()).collect();
            shuffled.extend(list.iter().skip(3).cloned());
            let a = minimal_generating_set(&GeneratorSet::new(list).unwrap()).unwrap().set;
            let b = minimal_generating_set(&GeneratorSet::new(shuffled).unwrap()).unwrap().set;
            prop_assert_eq!(a.gens(), b.gens());
            prop_assert_eq!(a.n0(), 2);
            let again = minimal_generating_set(&a).unwrap().set;
            prop_assert_eq!(again.gens(), a.gens());
        }

        #[test]
        fn associativity_of_word_evaluation(
            idx in proptest::collection::vec(0usize..2, 2..6), split in 1usize..5,
            x in -1.0f64..1.0, y in -1.0f64..1.0,
        ) {
            let gs = pair();
            let split = split.min(idx.len() - 1);
            let z = ComplexPoint::real(x, y);
            let whole = gs.eval_word(&gs.word(idx.clone()).unwrap(), z, Direction::Forward);
            let inner = gs.eval_word(&gs.word(idx[split..].to_vec()).unwrap(), z, Direction::Forward);
            if let (Ok(whole), Ok(inner)) = (whole, inner) {
                if let Ok(outer) = gs.eval_word(&gs.word(idx[..split].to_vec()).unwrap(), inner, Direction::Forward) {
                    prop_assert!(outer.distance(&whole) <= 1e-9 * (1.0 + whole.norm()));
                }
            }
        }
    }
}
