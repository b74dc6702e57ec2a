//! Line-oriented scene files.
//!
//! ```text
//! # comment
//! name = two-generator
//! [generator]
//! [factor]
//! coeffs = -0.5,0; 0,0; 1,0     # c_0; c_1; ...; c_d as re,im
//! a = 0.5,0
//! [slice]
//! kind = vertical               # vertical | horizontal | affine
//! x0 = 0.3,0
//! half = auto                   # window half-side, auto = R + 1
//! nx = 512
//! [params]
//! max_depth = 10
//! [curve]
//! term = 0 1 1,0                # x-power y-power coefficient
//! [points]
//! point = 0,0; 5,0              # x; y
//! ```
//!
//! Factors inside a `[generator]` block are listed outermost first, so the
//! last one listed acts first.

use std::collections::BTreeMap;

use henon_lab_core::{
    BivariatePoly, Complex64, ComplexPoint, GeneratorSet, HenonFactor, HenonMap, SequenceSpec, SliceKind, SliceSpec,
    Window,
};
use sha2::{Digest, Sha256};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum ConfigError {
    #[error("line {line}: {msg}")]
    Syntax { line: usize, msg: String },
    #[error("line {line}, field `{field}`: {msg}")]
    Field { line: usize, field: String, msg: String },
    #[error("{0}")]
    Scene(String),
}

fn field_err(line: usize, field: &str, msg: impl Into<String>) -> ConfigError {
    ConfigError::Field {
        line,
        field: field.to_string(),
        msg: msg.into(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SliceKindSpec {
    Vertical,
    Horizontal,
    Affine,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SliceConfig {
    pub kind: SliceKindSpec,
    pub x0: Complex64,
    pub y0: Complex64,
    pub origin: ComplexPoint,
    pub direction: ComplexPoint,
    pub center: Complex64,
    /// `None` means `R + 1`.
    pub half: Option<f64>,
    pub nx: usize,
    pub ny: usize,
}

impl Default for SliceConfig {
    fn default() -> Self {
        let zero = Complex64::new(0.0, 0.0);
        SliceConfig {
            kind: SliceKindSpec::Vertical,
            x0: zero,
            y0: zero,
            origin: ComplexPoint::ORIGIN,
            direction: ComplexPoint::new(zero, Complex64::new(1.0, 0.0)),
            center: zero,
            half: None,
            nx: 256,
            ny: 256,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Params {
    pub sign_minus: bool,
    pub max_depth: u32,
    pub tail_depth: u32,
    pub classify_depth: u32,
    pub k: usize,
    pub seed: u64,
    pub samples: usize,
    pub sequence: Option<Vec<usize>>,
    pub sequence_length: usize,
    pub max_steps: u32,
    pub r_max: f64,
    pub probes: usize,
    /// Upper end of the gray ramp; `None` picks it from the data.
    pub gray_max: Option<f64>,
}

impl Default for Params {
    fn default() -> Self {
        Params {
            sign_minus: false,
            max_depth: 12,
            tail_depth: 20,
            classify_depth: 6,
            k: 10,
            seed: 1,
            samples: 100,
            sequence: None,
            sequence_length: 64,
            max_steps: 200,
            r_max: 4.0,
            probes: 20,
            gray_max: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SceneConfig {
    pub name: String,
    /// Each generator as its factors, outermost first.
    pub generators: Vec<Vec<(Vec<Complex64>, Complex64)>>,
    pub slice: SliceConfig,
    pub params: Params,
    /// `(x-power, y-power, coefficient)`.
    pub curve: Vec<(usize, usize, Complex64)>,
    pub points: Vec<ComplexPoint>,
    /// Hex SHA-256 of the source text.
    pub hash: String,
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Section {
    Top,
    Generator,
    Factor,
    Slice,
    Params,
    Curve,
    Points,
}

pub fn parse_complex(s: &str) -> Option<Complex64> {
    let s = s.trim();
    let (re, im) = match s.split_once(',') {
        Some((re, im)) => (re.trim(), im.trim()),
        None => (s, "0"),
    };
    let c = Complex64::new(re.parse().ok()?, im.parse().ok()?);
    if c.is_finite() {
        Some(c)
    } else {
        None
    }
}

fn parse_point(s: &str) -> Option<ComplexPoint> {
    let (x, y) = s.split_once(';')?;
    Some(ComplexPoint::new(parse_complex(x)?, parse_complex(y)?))
}

fn parse_num<T: std::str::FromStr>(line: usize, key: &str, v: &str) -> Result<T, ConfigError> {
    v.parse().map_err(|_| field_err(line, key, format!("cannot parse `{v}`")))
}

fn parse_c(line: usize, key: &str, v: &str) -> Result<Complex64, ConfigError> {
    parse_complex(v).ok_or_else(|| field_err(line, key, format!("expected `re,im`, got `{v}`")))
}

struct FactorDraft {
    line: usize,
    coeffs: Option<Vec<Complex64>>,
    a: Option<Complex64>,
}

impl SceneConfig {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut cfg = SceneConfig {
            name: String::from("scene"),
            generators: Vec::new(),
            slice: SliceConfig::default(),
            params: Params::default(),
            curve: Vec::new(),
            points: Vec::new(),
            hash: hex::encode(Sha256::digest(text.as_bytes())),
        };
        let mut section = Section::Top;
        let mut drafts: Vec<Vec<FactorDraft>> = Vec::new();
        let mut seen: BTreeMap<(u8, String), usize> = BTreeMap::new();

        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let content = raw.split('#').next().unwrap().trim();
            if content.is_empty() {
                continue;
            }
            if let Some(name) = content.strip_prefix('[').and_then(|s| s.strip_suffix(']')) {
                section = match name.trim() {
                    "generator" => {
                        drafts.push(Vec::new());
                        Section::Generator
                    }
                    "factor" => {
                        let Some(g) = drafts.last_mut() else {
                            return Err(ConfigError::Syntax {
                                line,
                                msg: "[factor] outside a [generator] block".into(),
                            });
                        };
                        g.push(FactorDraft { line, coeffs: None, a: None });
                        Section::Factor
                    }
                    "slice" => Section::Slice,
                    "params" => Section::Params,
                    "curve" => Section::Curve,
                    "points" => Section::Points,
                    other => {
                        return Err(ConfigError::Syntax {
                            line,
                            msg: format!("unknown section [{other}]"),
                        })
                    }
                };
                continue;
            }
            let Some((key, value)) = content.split_once('=') else {
                return Err(ConfigError::Syntax {
                    line,
                    msg: format!("expected `key = value`, got `{content}`"),
                });
            };
            let (key, value) = (key.trim(), value.trim());
            let repeatable = matches!(section, Section::Curve | Section::Points | Section::Factor);
            if !repeatable {
                if let Some(first) = seen.insert((section as u8, key.to_string()), line) {
                    return Err(field_err(line, key, format!("duplicate key (first set on line {first})")));
                }
            }
            match section {
                Section::Top => match key {
                    "name" => cfg.name = value.to_string(),
                    _ => return Err(field_err(line, key, "unknown key")),
                },
                Section::Generator => return Err(field_err(line, key, "keys belong in a [factor] block")),
                Section::Factor => {
                    let f = drafts.last_mut().unwrap().last_mut().unwrap();
                    match key {
                        "coeffs" => {
                            if f.coeffs.is_some() {
                                return Err(field_err(line, key, "duplicate key"));
                            }
                            let cs = value
                                .split(';')
                                .map(|s| parse_c(line, key, s))
                                .collect::<Result<Vec<_>, _>>()?;
                            f.coeffs = Some(cs);
                        }
                        "a" => {
                            if f.a.is_some() {
                                return Err(field_err(line, key, "duplicate key"));
                            }
                            f.a = Some(parse_c(line, key, value)?);
                        }
                        _ => return Err(field_err(line, key, "unknown key")),
                    }
                }
                Section::Slice => parse_slice_key(&mut cfg.slice, line, key, value)?,
                Section::Params => parse_param_key(&mut cfg.params, line, key, value)?,
                Section::Curve => {
                    if key != "term" {
                        return Err(field_err(line, key, "unknown key"));
                    }
                    let mut parts = value.split_whitespace();
                    let (Some(i), Some(j), Some(c), None) = (parts.next(), parts.next(), parts.next(), parts.next())
                    else {
                        return Err(field_err(line, key, "expected `i j re,im`"));
                    };
                    cfg.curve.push((parse_num(line, key, i)?, parse_num(line, key, j)?, parse_c(line, key, c)?));
                }
                Section::Points => {
                    if key != "point" {
                        return Err(field_err(line, key, "unknown key"));
                    }
                    let p = parse_point(value).ok_or_else(|| field_err(line, key, "expected `xre,xim; yre,yim`"))?;
                    cfg.points.push(p);
                }
            }
        }

        if drafts.is_empty() {
            return Err(ConfigError::Scene("no [generator] blocks".into()));
        }
        for (gi, g) in drafts.into_iter().enumerate() {
            if g.is_empty() {
                return Err(ConfigError::Scene(format!("generator {} has no [factor] blocks", gi + 1)));
            }
            let mut factors = Vec::new();
            for f in g {
                let coeffs = f.coeffs.ok_or_else(|| field_err(f.line, "coeffs", "missing in [factor] block"))?;
                let a = f.a.ok_or_else(|| field_err(f.line, "a", "missing in [factor] block"))?;
                HenonFactor::new(coeffs.clone(), a).map_err(|e| field_err(f.line, "coeffs", e.to_string()))?;
                factors.push((coeffs, a));
            }
            cfg.generators.push(factors);
        }
        Ok(cfg)
    }

    pub fn maps(&self) -> Vec<HenonMap> {
        self.generators
            .iter()
            .map(|g| {
                let fs = g
                    .iter()
                    .map(|(c, a)| HenonFactor::new(c.clone(), *a).expect("validated at parse time"))
                    .collect();
                HenonMap::new(fs).expect("validated at parse time")
            })
            .collect()
    }

    pub fn generator_set(&self) -> Result<GeneratorSet, ConfigError> {
        GeneratorSet::new(self.maps()).map_err(|e| ConfigError::Scene(e.to_string()))
    }

    pub fn slice_spec(&self, radius: f64) -> Result<SliceSpec, ConfigError> {
        let s = &self.slice;
        let kind = match s.kind {
            SliceKindSpec::Vertical => SliceKind::VerticalLine { x0: s.x0 },
            SliceKindSpec::Horizontal => SliceKind::HorizontalLine { y0: s.y0 },
            SliceKindSpec::Affine => SliceKind::AffinePlane {
                origin: s.origin,
                direction: s.direction,
            },
        };
        // `half` spans the real axis; the imaginary extent keeps square pixels.
        let half = s.half.unwrap_or(radius + 1.0);
        let half_im = half * (s.ny - 1) as f64 / (s.nx - 1) as f64;
        let window = Window {
            re_min: s.center.re - half,
            re_max: s.center.re + half,
            im_min: s.center.im - half_im,
            im_max: s.center.im + half_im,
        };
        SliceSpec::new(kind, window, s.nx, s.ny).map_err(|e| ConfigError::Scene(e.to_string()))
    }

    pub fn curve(&self) -> Result<BivariatePoly, ConfigError> {
        if self.curve.is_empty() {
            return Ok(BivariatePoly::y());
        }
        let rows = self.curve.iter().map(|t| t.0).max().unwrap() + 1;
        let cols = self.curve.iter().map(|t| t.1).max().unwrap() + 1;
        let mut coeffs = vec![vec![Complex64::new(0.0, 0.0); cols]; rows];
        for &(i, j, c) in &self.curve {
            coeffs[i][j] += c;
        }
        BivariatePoly::new(coeffs).map_err(|e| ConfigError::Scene(e.to_string()))
    }

    pub fn sequence(&self) -> SequenceSpec {
        match &self.params.sequence {
            Some(list) => SequenceSpec::Explicit(list.clone()),
            None => SequenceSpec::Seeded {
                seed: self.params.seed,
                length: self.params.sequence_length,
            },
        }
    }
}

fn parse_slice_key(s: &mut SliceConfig, line: usize, key: &str, v: &str) -> Result<(), ConfigError> {
    match key {
        "kind" => {
            s.kind = match v {
                "vertical" => SliceKindSpec::Vertical,
                "horizontal" => SliceKindSpec::Horizontal,
                "affine" => SliceKindSpec::Affine,
                _ => return Err(field_err(line, key, "expected vertical, horizontal or affine")),
            }
        }
        "x0" => s.x0 = parse_c(line, key, v)?,
        "y0" => s.y0 = parse_c(line, key, v)?,
        "origin" => s.origin = parse_point(v).ok_or_else(|| field_err(line, key, "expected `xre,xim; yre,yim`"))?,
        "direction" => {
            s.direction = parse_point(v).ok_or_else(|| field_err(line, key, "expected `xre,xim; yre,yim`"))?
        }
        "center" => s.center = parse_c(line, key, v)?,
        "half" => {
            s.half = if v == "auto" {
                None
            } else {
                let h: f64 = parse_num(line, key, v)?;
                if !(h > 0.0 && h.is_finite()) {
                    return Err(field_err(line, key, "must be positive"));
                }
                Some(h)
            }
        }
        "nx" | "ny" | "n" => {
            let n: usize = parse_num(line, key, v)?;
            if n < 8 {
                return Err(field_err(line, key, "grid size must be at least 8"));
            }
            match key {
                "nx" => s.nx = n,
                "ny" => s.ny = n,
                _ => (s.nx, s.ny) = (n, n),
            }
        }
        _ => return Err(field_err(line, key, "unknown key")),
    }
    Ok(())
}

fn parse_param_key(p: &mut Params, line: usize, key: &str, v: &str) -> Result<(), ConfigError> {
    match key {
        "sign" => {
            p.sign_minus = match v {
                "plus" | "+" => false,
                "minus" | "-" => true,
                _ => return Err(field_err(line, key, "expected plus or minus")),
            }
        }
        "max_depth" => p.max_depth = parse_num(line, key, v)?,
        "tail_depth" => p.tail_depth = parse_num(line, key, v)?,
        "classify_depth" => p.classify_depth = parse_num(line, key, v)?,
        "k" => p.k = parse_num(line, key, v)?,
        "seed" => p.seed = parse_num(line, key, v)?,
        "samples" => p.samples = parse_num(line, key, v)?,
        "sequence" => {
            // 1-based on disk, like words.
            let list = v
                .split(',')
                .map(|s| parse_num::<usize>(line, key, s.trim()))
                .collect::<Result<Vec<_>, _>>()?;
            if list.iter().any(|&i| i == 0) {
                return Err(field_err(line, key, "generator indices start at 1"));
            }
            p.sequence = Some(list.into_iter().map(|i| i - 1).collect());
        }
        "sequence_length" => p.sequence_length = parse_num(line, key, v)?,
        "max_steps" => p.max_steps = parse_num(line, key, v)?,
        "r_max" => p.r_max = parse_num(line, key, v)?,
        "probes" => p.probes = parse_num(line, key, v)?,
        "gray_max" => {
            let g: f64 = parse_num(line, key, v)?;
            if !(g > 0.0 && g.is_finite()) {
                return Err(field_err(line, key, "must be positive"));
            }
            p.gray_max = Some(g);
        }
        _ => return Err(field_err(line, key, "unknown key")),
    }
    Ok(())
}
