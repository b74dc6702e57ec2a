//! Slice grids, discrete Laplacian densities of the Green currents and
//! pullback potentials of curves.

use alloc::vec::Vec;

use num_complex::Complex64;

use crate::green::{green_estimate, GreenEstimate, GreenParams};
use crate::henon::{advance_map, modulus, ComplexPoint, LogOrbitState, StepContext};
use crate::semigroup::GeneratorSet;
use crate::{Error, Result, Sign};

/// A complex line (or affine complex line in a general direction) of C²,
/// parameterized by one complex variable `w`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SliceKind {
    /// `{(x0, w)}`.
    VerticalLine { x0: Complex64 },
    /// `{(w, y0)}`.
    HorizontalLine { y0: Complex64 },
    /// `{origin + w * direction}`.
    AffinePlane { origin: ComplexPoint, direction: ComplexPoint },
}

/// Rectangle of the parameter plane.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Window {
    pub re_min: f64,
    pub re_max: f64,
    pub im_min: f64,
    pub im_max: f64,
}

impl Window {
    /// Square window of half-side `r` centred at `c`.
    pub fn square(c: Complex64, r: f64) -> Self {
        Window {
            re_min: c.re - r,
            re_max: c.re + r,
            im_min: c.im - r,
            im_max: c.im + r,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SliceSpec {
    pub kind: SliceKind,
    pub window: Window,
    pub nx: usize,
    pub ny: usize,
}

impl SliceSpec {
    pub fn new(kind: SliceKind, window: Window, nx: usize, ny: usize) -> Result<Self> {
        if nx < 8 || ny < 8 {
            return Err(Error::InvalidGrid("nx and ny must be at least 8"));
        }
        let w = &window;
        let finite = [w.re_min, w.re_max, w.im_min, w.im_max].iter().all(|v| v.is_finite());
        if !finite || !(w.re_max > w.re_min) || !(w.im_max > w.im_min) {
            return Err(Error::InvalidGrid("window must be a finite nondegenerate rectangle"));
        }
        Ok(SliceSpec { kind, window, nx, ny })
    }

    pub fn hx(&self) -> f64 {
        (self.window.re_max - self.window.re_min) / (self.nx - 1) as f64
    }

    pub fn hy(&self) -> f64 {
        (self.window.im_max - self.window.im_min) / (self.ny - 1) as f64
    }

    /// Slice parameter of a pixel; row 0 is the top (largest imaginary part).
    pub fn parameter(&self, col: usize, row: usize) -> Complex64 {
        Complex64::new(
            self.window.re_min + col as f64 * self.hx(),
            self.window.im_max - row as f64 * self.hy(),
        )
    }

    pub fn embed(&self, w: Complex64) -> ComplexPoint {
        match self.kind {
            SliceKind::VerticalLine { x0 } => ComplexPoint::new(x0, w),
            SliceKind::HorizontalLine { y0 } => ComplexPoint::new(w, y0),
            SliceKind::AffinePlane { origin, direction } => origin.offset(&direction, w),
        }
    }

    pub fn point(&self, col: usize, row: usize) -> ComplexPoint {
        self.embed(self.parameter(col, row))
    }

    fn uniform_spacing(&self) -> Result<f64> {
        let (hx, hy) = (self.hx(), self.hy());
        if (hx - hy).abs() > 1e-9 * hx.max(hy) {
            return Err(Error::NonUniformGrid { hx, hy });
        }
        Ok(hx)
    }
}

/// A real field sampled on a slice, row-major with the top row first.
#[derive(Debug, Clone, PartialEq)]
pub struct SliceGrid {
    pub spec: SliceSpec,
    pub values: Vec<f64>,
    /// Per-pixel enclosure widths (zero for exact fields).
    pub widths: Vec<f64>,
    pub max_width: f64,
    /// Pixels whose evaluation hit its budget.
    pub flagged: usize,
}

impl SliceGrid {
    pub fn from_fn(spec: SliceSpec, f: impl Fn(Complex64) -> f64) -> Self {
        let mut values = Vec::with_capacity(spec.nx * spec.ny);
        for row in 0..spec.ny {
            for col in 0..spec.nx {
                values.push(f(spec.parameter(col, row)));
            }
        }
        SliceGrid {
            widths: alloc::vec![0.0; values.len()],
            values,
            spec,
            max_width: 0.0,
            flagged: 0,
        }
    }

    /// Grid of estimate midpoints, row-major.
    pub fn from_estimates(spec: SliceSpec, estimates: &[GreenEstimate]) -> Result<Self> {
        if estimates.len() != spec.nx * spec.ny {
            return Err(Error::InvalidGrid("estimate count does not match the grid"));
        }
        let widths: Vec<f64> = estimates.iter().map(GreenEstimate::width).collect();
        Ok(SliceGrid {
            values: estimates.iter().map(GreenEstimate::midpoint).collect(),
            max_width: widths.iter().cloned().fold(0.0, f64::max),
            widths,
            flagged: estimates.iter().filter(|e| e.budget_exhausted).count(),
            spec,
        })
    }

    pub fn at(&self, col: usize, row: usize) -> f64 {
        self.values[row * self.spec.nx + col]
    }
}

/// Green estimates of one pixel row.
pub fn sample_green_row(
    gs: &GeneratorSet,
    spec: &SliceSpec,
    sign: Sign,
    params: &GreenParams,
    row: usize,
) -> Result<Vec<GreenEstimate>> {
    (0..spec.nx)
        .map(|col| green_estimate(gs, spec.point(col, row), sign, params))
        .collect()
}

pub fn sample_green_on_slice(gs: &GeneratorSet, spec: &SliceSpec, sign: Sign, params: &GreenParams) -> Result<SliceGrid> {
    let mut all = Vec::with_capacity(spec.nx * spec.ny);
    for row in 0..spec.ny {
        all.extend(sample_green_row(gs, spec, sign, params, row)?);
    }
    SliceGrid::from_estimates(*spec, &all)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Density {
    /// `Δu / 2π` on interior pixels, zero on the boundary ring.
    pub grid: SliceGrid,
    /// `Σ density · h²` over all interior pixels.
    pub total_mass: f64,
    /// The same sum restricted to pixels whose stencil widths are all at
    /// most `0.1 h²`.
    pub gated_mass: f64,
    /// Interior pixels left out of `gated_mass`.
    pub excluded: usize,
}

/// 5-point stencil density of `(1/2π) Δu`.
pub fn laplacian_density(grid: &SliceGrid) -> Result<Density> {
    let spec = grid.spec;
    let h = spec.uniform_spacing()?;
    let (nx, ny) = (spec.nx, spec.ny);
    let h2 = h * h;
    let gate = 0.1 * h2;
    let scale = 1.0 / (2.0 * core::f64::consts::PI * h2);
    let mut density = alloc::vec![0.0; nx * ny];
    let (mut total, mut gated, mut excluded) = (0.0, 0.0, 0usize);
    for row in 1..ny - 1 {
        for col in 1..nx - 1 {
            let i = row * nx + col;
            let stencil = [i, i - 1, i + 1, i - nx, i + nx];
            let lap = grid.values[i - 1] + grid.values[i + 1] + grid.values[i - nx] + grid.values[i + nx]
                - 4.0 * grid.values[i];
            let d = lap * scale;
            density[i] = d;
            total += d * h2;
            if stencil.iter().all(|&j| grid.widths[j] <= gate) {
                gated += d * h2;
            } else {
                excluded += 1;
            }
        }
    }
    Ok(Density {
        grid: SliceGrid {
            spec,
            widths: alloc::vec![0.0; nx * ny],
            values: density,
            max_width: 0.0,
            flagged: grid.flagged,
        },
        total_mass: total,
        gated_mass: gated,
        excluded,
    })
}

/// Density clamped to be nonnegative.
pub fn heatmap_from_density(d: &Density) -> SliceGrid {
    let mut g = d.grid.clone();
    for v in &mut g.values {
        *v = v.max(0.0);
    }
    g
}

pub fn julia_heatmap(gs: &GeneratorSet, spec: &SliceSpec, sign: Sign, params: &GreenParams) -> Result<SliceGrid> {
    let field = sample_green_on_slice(gs, spec, sign, params)?;
    Ok(heatmap_from_density(&laplacian_density(&field)?))
}

/// `q(x, y) = Σ coeffs[a][b] x^a y^b`.
#[derive(Debug, Clone, PartialEq)]
pub struct BivariatePoly {
    coeffs: Vec<Vec<Complex64>>,
}

impl BivariatePoly {
    pub fn new(coeffs: Vec<Vec<Complex64>>) -> Result<Self> {
        let nonzero = coeffs.iter().flatten().any(|c| *c != Complex64::new(0.0, 0.0));
        if !nonzero {
            return Err(Error::Contract("curve polynomial is identically zero"));
        }
        if coeffs.iter().flatten().any(|c| !c.is_finite()) {
            return Err(Error::Contract("curve coefficients must be finite"));
        }
        Ok(BivariatePoly { coeffs })
    }

    /// `q = y`.
    pub fn y() -> Self {
        let one = Complex64::new(1.0, 0.0);
        let zero = Complex64::new(0.0, 0.0);
        BivariatePoly { coeffs: alloc::vec![alloc::vec![zero, one]] }
    }

    /// `q = x`.
    pub fn x() -> Self {
        let one = Complex64::new(1.0, 0.0);
        let zero = Complex64::new(0.0, 0.0);
        BivariatePoly { coeffs: alloc::vec![alloc::vec![zero], alloc::vec![one]] }
    }

    pub fn coeffs(&self) -> &[Vec<Complex64>] {
        &self.coeffs
    }

    pub fn eval(&self, z: ComplexPoint) -> Complex64 {
        let mut acc = Complex64::new(0.0, 0.0);
        for row in self.coeffs.iter().rev() {
            let inner = row.iter().rev().fold(Complex64::new(0.0, 0.0), |s, c| s * z.y + c);
            acc = acc * z.x + inner;
        }
        acc
    }

    /// `log|q|` from the logs of `|x|` and `|y|`, when one monomial dominates
    /// the sum of the others.
    fn log_abs_from_logs(&self, log_x: f64, log_y: f64) -> Result<f64> {
        let mut terms: Vec<f64> = Vec::new();
        for (a, row) in self.coeffs.iter().enumerate() {
            for (b, c) in row.iter().enumerate() {
                let m = modulus(*c);
                if m != 0.0 {
                    terms.push(libm::log(m) + a as f64 * log_x + b as f64 * log_y);
                }
            }
        }
        let top = terms.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let rest: f64 = terms.iter().map(|t| libm::exp(t - top)).sum::<f64>() - 1.0;
        if !(rest < 0.5) {
            return Err(Error::DegenerateSample);
        }
        Ok(top + 0.5 * (libm::log1p(-rest) + libm::log1p(rest)))
    }

    fn log_abs(&self, s: &LogOrbitState) -> Result<f64> {
        match s {
            LogOrbitState::Exact(w) => {
                let v = modulus(self.eval(*w));
                if v == 0.0 {
                    Err(Error::DegenerateSample)
                } else if v.is_finite() {
                    Ok(libm::log(v))
                } else {
                    self.log_abs_from_logs(libm::log(modulus(w.x)), libm::log(modulus(w.y)))
                }
            }
            LogOrbitState::Asymptotic { log_y, log_x, .. } => self.log_abs_from_logs(*log_x, *log_y),
        }
    }
}

/// `D^{-k} Σ_{h ∈ 𝒢_k} log|q(h(z))|`.
pub fn equidist_potential(gs: &GeneratorSet, q: &BivariatePoly, z: ComplexPoint, k: usize) -> Result<f64> {
    if !z.is_finite() {
        return Err(Error::Contract("point must be finite"));
    }
    gs.words(k.max(1))?;
    let ctx = StepContext::new(gs.radius());
    let mut sum = 0.0;
    let mut stack: Vec<(LogOrbitState, usize)> = alloc::vec![(LogOrbitState::Exact(z), 0)];
    while let Some((s, depth)) = stack.pop() {
        if depth == k {
            sum += q.log_abs(&s)?;
            continue;
        }
        for h in gs.gens() {
            stack.push((advance_map(h, s, &ctx)?, depth + 1));
        }
    }
    Ok(sum * libm::pow(gs.total_degree() as f64, -(k as f64)))
}
