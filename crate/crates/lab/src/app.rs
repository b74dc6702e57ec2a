//! Subcommand dispatch.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use henon_lab_core::basin::{
    basin_membership, boundary_bisect, estimate_attracting_params, strong_k_escape_witness, BasinContext,
};
use henon_lab_core::currents::{equidist_potential, heatmap_from_density, laplacian_density};
use henon_lab_core::green::{green_estimate, na_green, na_green_k};
use henon_lab_core::{rng, Complex64, ComplexPoint, GeneratorSet, GreenParams, Sign, Verdict};
use serde_json::{json, Value};
use thiserror::Error;

use crate::config::{ConfigError, SceneConfig};
use crate::output::{encode_csv, encode_pgm, sidecar_path, to_json, write_file, Provenance};
use crate::render::{classification_grid, green_grid, thread_pool};
use crate::verify::{run_suite, VerifySettings};

pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_BUDGET: i32 = 3;

/// Largest number of words a full enumeration may touch.
const WORD_BUDGET_LOG2: f64 = 40.0;

#[derive(Debug, Parser)]
#[command(name = "henon-lab", version, about = "Green's functions, currents and basins of Hénon semigroups")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// Scene file.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output file; JSON reports go to stdout without it.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Worker threads, 0 = all cores. Falls back to HENON_LAB_THREADS.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Overrides max_depth and classify_depth.
    #[arg(long, global = true)]
    pub depth: Option<u32>,
    /// Overrides tail_depth.
    #[arg(long, global = true)]
    pub tail: Option<u32>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// 16-bit graymap of the Green's function on the slice.
    RenderGreen,
    /// 16-bit graymap of the Laplacian density (the Julia set trace).
    RenderJulia,
    /// Escape classification of every pixel as CSV.
    Classify,
    /// Certified Green's intervals at the scene points.
    GreenEval,
    /// Non-autonomous Green's function along the scene sequence.
    NaGreen,
    /// Pullback potentials of the scene curve against Ĝ⁺.
    Equidist,
    /// Attracting parameters, basin membership and boundary probes.
    Basin,
    /// Runs the invariant suite; exits 1 if any invariant fails.
    Verify,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::RenderGreen => "render-green",
            Command::RenderJulia => "render-julia",
            Command::Classify => "classify",
            Command::GreenEval => "green-eval",
            Command::NaGreen => "na-green",
            Command::Equidist => "equidist",
            Command::Basin => "basin",
            Command::Verify => "verify",
        }
    }
}

#[derive(Debug, Error)]
pub enum AppError {
    #[error("{0}")]
    Config(#[from] ConfigError),
    #[error("cannot read {path}: {source}")]
    Read { path: PathBuf, source: std::io::Error },
    #[error("cannot write {path}: {source}")]
    Write { path: PathBuf, source: std::io::Error },
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Budget(String),
    #[error(transparent)]
    Core(#[from] henon_lab_core::Error),
    #[error("{0} invariant(s) failed")]
    VerifyFailed(usize),
}

impl AppError {
    pub fn exit_code(&self) -> i32 {
        match self {
            AppError::Config(_) | AppError::Read { .. } | AppError::Usage(_) => EXIT_CONFIG,
            AppError::Budget(_) | AppError::Core(henon_lab_core::Error::Budget(_)) => EXIT_BUDGET,
            _ => EXIT_FAILURE,
        }
    }
}

/// Parses `argv`, runs, and returns the process exit status.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    match execute(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("henon-lab: {e}");
            e.exit_code()
        }
    }
}

fn thread_count(cli: &Cli) -> Result<usize, AppError> {
    if let Some(n) = cli.threads {
        return Ok(n);
    }
    match std::env::var("HENON_LAB_THREADS") {
        Ok(v) => v
            .trim()
            .parse()
            .map_err(|_| AppError::Usage(format!("HENON_LAB_THREADS must be an integer, got `{v}`"))),
        Err(_) => Ok(0),
    }
}

/// Scene, generator set and effective parameters of one run.
struct Run {
    cmd: Command,
    cfg: SceneConfig,
    gs: GeneratorSet,
    sign: Sign,
    green: GreenParams,
    classify_depth: u32,
    out: Option<PathBuf>,
}

impl Run {
    fn provenance(&self, extra: Value) -> Provenance {
        let p = &self.cfg.params;
        let mut params = json!({
            "sign": if self.sign == Sign::Plus { "plus" } else { "minus" },
            "max_depth": self.green.max_depth,
            "tail_depth": self.green.tail_depth,
            "classify_depth": self.classify_depth,
            "seed": p.seed,
            "radius": self.gs.radius(),
            "generators": self.gs.n0(),
            "total_degree": self.gs.total_degree(),
        });
        if let (Value::Object(m), Value::Object(e)) = (&mut params, extra) {
            m.extend(e);
        }
        Provenance {
            tool: "henon-lab",
            version: env!("CARGO_PKG_VERSION"),
            subcommand: self.cmd.name().into(),
            scene: self.cfg.name.clone(),
            config_sha256: self.cfg.hash.clone(),
            params,
        }
    }

    fn out_path(&self) -> Result<&Path, AppError> {
        self.out
            .as_deref()
            .ok_or_else(|| AppError::Usage(format!("{} needs --out", self.cmd.name())))
    }

    fn emit_json(&self, value: &Value) -> Result<(), AppError> {
        let text = to_json(value);
        match &self.out {
            Some(path) => write_file(path, text.as_bytes()).map_err(|source| AppError::Write {
                path: path.clone(),
                source,
            }),
            None => {
                print!("{text}");
                Ok(())
            }
        }
    }

    fn write(&self, path: &Path, bytes: &[u8]) -> Result<(), AppError> {
        write_file(path, bytes).map_err(|source| AppError::Write {
            path: path.to_path_buf(),
            source,
        })
    }

    /// Scene points, or seeded samples in the bidisk of radius `R + 1`.
    fn points(&self) -> Vec<ComplexPoint> {
        if !self.cfg.points.is_empty() {
            return self.cfg.points.clone();
        }
        let mut r = rng::seeded(self.cfg.params.seed);
        (0..self.cfg.params.samples)
            .map(|_| rng::in_bidisk(&mut r, self.gs.radius() + 1.0))
            .collect()
    }
}

fn load(cli: &Cli) -> Result<Run, AppError> {
    let path = cli
        .config
        .as_ref()
        .ok_or_else(|| AppError::Usage("--config is required".into()))?;
    let text = fs::read_to_string(path).map_err(|source| AppError::Read {
        path: path.clone(),
        source,
    })?;
    let mut cfg = SceneConfig::parse(&text)?;
    if let Some(seed) = cli.seed {
        cfg.params.seed = seed;
    }
    if let Some(d) = cli.depth {
        cfg.params.max_depth = d;
        cfg.params.classify_depth = d;
    }
    if let Some(t) = cli.tail {
        cfg.params.tail_depth = t;
    }
    let gs = cfg.generator_set()?;
    let log2_n0 = (gs.n0() as f64).log2();
    for (what, depth) in [
        ("classify_depth", cfg.params.classify_depth as f64),
        ("k", cfg.params.k as f64),
    ] {
        if depth * log2_n0 > WORD_BUDGET_LOG2 {
            return Err(AppError::Budget(format!(
                "{what} = {depth} would enumerate {}^{depth} words (limit 2^40)",
                gs.n0()
            )));
        }
    }
    let p = &cfg.params;
    let green = GreenParams {
        max_depth: p.max_depth,
        tail_depth: p.tail_depth,
        ..GreenParams::default()
    };
    Ok(Run {
        cmd: cli.command,
        sign: if p.sign_minus { Sign::Minus } else { Sign::Plus },
        classify_depth: p.classify_depth,
        green,
        gs,
        cfg,
        out: cli.out.clone(),
    })
}

pub fn execute(cli: &Cli) -> Result<(), AppError> {
    let run = load(cli)?;
    let pool = thread_pool(thread_count(cli)?);
    pool.install(|| match run.cmd {
        Command::RenderGreen => render_green(&run),
        Command::RenderJulia => render_julia(&run),
        Command::Classify => classify(&run),
        Command::GreenEval => green_eval(&run),
        Command::NaGreen => na_green_cmd(&run),
        Command::Equidist => equidist(&run),
        Command::Basin => basin(&run),
        Command::Verify => verify(&run),
    })
}

fn c_json(c: Complex64) -> Value {
    json!([c.re, c.im])
}

fn p_json(z: ComplexPoint) -> Value {
    json!({"x": c_json(z.x), "y": c_json(z.y)})
}

fn render_green(run: &Run) -> Result<(), AppError> {
    let out = run.out_path()?;
    let spec = run.cfg.slice_spec(run.gs.radius())?;
    let grid = green_grid(&run.gs, &spec, run.sign, &run.green)?;
    let top = grid.values.iter().cloned().fold(0.0, f64::max);
    let hi = run.cfg.params.gray_max.unwrap_or(top);
    let prov = run.provenance(json!({"nx": spec.nx, "ny": spec.ny, "window": window_json(&spec)}));
    run.write(out, &encode_pgm(spec.nx, spec.ny, &grid.values, 0.0, hi, &prov))?;
    let meta = json!({
        "provenance": prov,
        "gray": {"lo": 0.0, "hi": hi, "maps": "green value"},
        "max_width": grid.max_width,
        "flagged": grid.flagged,
    });
    run.write(&sidecar_path(out), to_json(&meta).as_bytes())
}

fn window_json(spec: &henon_lab_core::SliceSpec) -> Value {
    let w = spec.window;
    json!([w.re_min, w.re_max, w.im_min, w.im_max])
}

/// 99th percentile of the positive values, or 1 when there are none.
fn robust_top(values: &[f64]) -> f64 {
    let mut pos: Vec<f64> = values.iter().cloned().filter(|v| *v > 0.0).collect();
    if pos.is_empty() {
        return 1.0;
    }
    pos.sort_by(f64::total_cmp);
    pos[(pos.len() - 1) * 99 / 100]
}

fn render_julia(run: &Run) -> Result<(), AppError> {
    let out = run.out_path()?;
    let spec = run.cfg.slice_spec(run.gs.radius())?;
    let grid = green_grid(&run.gs, &spec, run.sign, &run.green)?;
    let density = laplacian_density(&grid)?;
    let heat = heatmap_from_density(&density);
    let hi = run.cfg.params.gray_max.unwrap_or_else(|| robust_top(&heat.values));
    let prov = run.provenance(json!({"nx": spec.nx, "ny": spec.ny, "window": window_json(&spec)}));
    run.write(out, &encode_pgm(spec.nx, spec.ny, &heat.values, 0.0, hi, &prov))?;
    let meta = json!({
        "provenance": prov,
        "gray": {"lo": 0.0, "hi": hi, "maps": "clamped Laplacian density"},
        "total_mass": density.total_mass,
        "gated_mass": density.gated_mass,
        "excluded": density.excluded,
        "max_width": grid.max_width,
        "flagged": grid.flagged,
    });
    run.write(&sidecar_path(out), to_json(&meta).as_bytes())
}

fn verdict_name(v: Verdict) -> &'static str {
    match v {
        Verdict::EscapingStrong => "escaping-strong",
        Verdict::EscapingWeak => "escaping-weak",
        Verdict::BoundedToDepth => "bounded",
        Verdict::Undetermined => "undetermined",
    }
}

fn classify(run: &Run) -> Result<(), AppError> {
    let out = run.out_path()?;
    let spec = run.cfg.slice_spec(run.gs.radius())?;
    let cls = classification_grid(&run.gs, &spec, run.sign, run.classify_depth)?;
    let mut rows = Vec::with_capacity(cls.len());
    let mut counts = std::collections::BTreeMap::new();
    for (i, c) in cls.iter().enumerate() {
        let (row, col) = (i / spec.nx, i % spec.nx);
        let w = spec.parameter(col, row);
        *counts.entry(verdict_name(c.verdict)).or_insert(0usize) += 1;
        rows.push(vec![
            row.to_string(),
            col.to_string(),
            w.re.to_string(),
            w.im.to_string(),
            verdict_name(c.verdict).to_string(),
            c.cert_depth.to_string(),
            c.witness.as_ref().map(|w| w.to_string().replace(',', " ")).unwrap_or_default(),
        ]);
    }
    let header = ["row", "col", "re", "im", "verdict", "cert_depth", "witness"];
    run.write(out, encode_csv(&header, &rows).as_bytes())?;
    let prov = run.provenance(json!({"nx": spec.nx, "ny": spec.ny, "window": window_json(&spec)}));
    let meta = json!({"provenance": prov, "counts": counts, "witness_order": "outermost generator first"});
    run.write(&sidecar_path(out), to_json(&meta).as_bytes())
}

fn green_eval(run: &Run) -> Result<(), AppError> {
    let pts = run.points();
    let results = crate::render::par_rows(pts.len(), |i| {
        let e = green_estimate(&run.gs, pts[i], run.sign, &run.green)?;
        Ok(vec![json!({
            "point": p_json(pts[i]),
            "lo": e.lo,
            "hi": e.hi,
            "midpoint": e.midpoint(),
            "width": e.width(),
            "leaves": e.leaves,
            "depth": e.depth,
            "budget_exhausted": e.budget_exhausted,
        })])
    })?;
    run.emit_json(&json!({"provenance": run.provenance(json!({})), "results": results}))
}

fn na_green_cmd(run: &Run) -> Result<(), AppError> {
    let pts = run.points();
    let seq = run.cfg.sequence();
    let k = run.cfg.params.k;
    let results = crate::render::par_rows(pts.len(), |i| {
        let e = na_green(&run.gs, &seq, pts[i], k, run.sign)?;
        let raw = na_green_k(&run.gs, &seq, pts[i], k, run.sign)?;
        Ok(vec![json!({
            "point": p_json(pts[i]),
            "lo": e.lo,
            "hi": e.hi,
            "level_k": raw,
        })])
    })?;
    let extra = json!({"k": k, "sequence": format!("{seq:?}")});
    run.emit_json(&json!({"provenance": run.provenance(extra), "results": results}))
}

fn equidist(run: &Run) -> Result<(), AppError> {
    let pts = run.points();
    let q = run.cfg.curve()?;
    let k = run.cfg.params.k;
    let results = crate::render::par_rows(pts.len(), |i| {
        let g = green_estimate(&run.gs, pts[i], Sign::Plus, &run.green)?;
        let mut levels = Vec::new();
        for level in 1..=k {
            let v = match equidist_potential(&run.gs, &q, pts[i], level) {
                Ok(v) => json!(v),
                Err(henon_lab_core::Error::DegenerateSample) => Value::Null,
                Err(e) => return Err(e),
            };
            levels.push(v);
        }
        Ok(vec![json!({
            "point": p_json(pts[i]),
            "green_lo": g.lo,
            "green_hi": g.hi,
            "potentials": levels,
        })])
    })?;
    let extra = json!({"k": k, "curve_terms": run.cfg.curve.len()});
    run.emit_json(&json!({"provenance": run.provenance(extra), "results": results}))
}

fn basin(run: &Run) -> Result<(), AppError> {
    let p = &run.cfg.params;
    let ap = estimate_attracting_params(&run.gs, p.r_max, p.samples, p.seed)?;
    let ctx = BasinContext {
        ap,
        max_steps: p.max_steps,
    };
    let seq = run.cfg.sequence();
    let pts = run.points();
    let membership = crate::render::par_rows(pts.len(), |i| {
        let v = basin_membership(&run.gs, &seq, pts[i], p.max_steps, &ap)?;
        let witness = match v {
            henon_lab_core::BasinVerdict::Converged(_) => {
                strong_k_escape_witness(&run.gs, &seq, pts[i], run.classify_depth, &ctx)?.map(|w| w.to_string())
            }
            _ => None,
        };
        Ok(vec![json!({"point": p_json(pts[i]), "verdict": format!("{v:?}"), "witness": witness})])
    })?;
    let far = 10.0 * run.gs.radius();
    let mut r = rng::seeded(p.seed ^ 0xb0b);
    let dirs: Vec<ComplexPoint> = (0..p.probes).map(|_| rng::on_sphere(&mut r, 1.0)).collect();
    let probes = crate::render::par_rows(dirs.len(), |i| {
        let out = ComplexPoint::new(dirs[i].x * far, dirs[i].y * far);
        let row = match boundary_bisect(&run.gs, &seq, ComplexPoint::ORIGIN, out, 1e-6, &ctx) {
            Ok(b) => {
                // Data for the open question whether the basin boundary is
                // all of J⁺; recorded, never asserted.
                let g_in = na_green(&run.gs, &seq, b.inside, 32, Sign::Plus)?;
                let g_out = na_green(&run.gs, &seq, b.outside, p.max_steps as usize, Sign::Plus)?;
                json!({
                    "inside": p_json(b.inside),
                    "outside": p_json(b.outside),
                    "iterations": b.iterations,
                    "green_inside": [g_in.lo, g_in.hi],
                    "green_outside": [g_out.lo, g_out.hi],
                })
            }
            Err(henon_lab_core::Error::NoVerdictFlip) => json!({"direction": p_json(dirs[i]), "flip": false}),
            Err(e) => return Err(e),
        };
        Ok(vec![row])
    })?;
    let extra = json!({"sequence": format!("{seq:?}"), "max_steps": p.max_steps});
    run.emit_json(&json!({
        "provenance": run.provenance(extra),
        "attracting": {"r": ap.r, "alpha": ap.alpha, "samples": ap.samples},
        "membership": membership,
        "probes": probes,
    }))
}

fn verify(run: &Run) -> Result<(), AppError> {
    let settings = VerifySettings {
        seed: run.cfg.params.seed,
        samples: run.cfg.params.samples,
        params: run.green,
    };
    let reports = run_suite(&run.gs, &settings, run.classify_depth)?;
    let failed = reports.iter().filter(|r| !r.passed).count();
    for r in &reports {
        eprintln!("{} {}: {}", if r.passed { "PASS" } else { "FAIL" }, r.name, r.note);
    }
    let extra = json!({"samples": settings.samples});
    run.emit_json(&json!({
        "provenance": run.provenance(extra),
        "passed": failed == 0,
        "invariants": reports,
    }))?;
    if failed > 0 {
        return Err(AppError::VerifyFailed(failed));
    }
    Ok(())
}
