//! Output files: 16-bit P5 graymaps, CSV grids with JSON sidecars, JSON
//! reports. Every file carries the scene hash and a parameter echo.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::Value;

/// Scene hash plus the effective parameters of a run.
#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct Provenance {
    pub tool: &'static str,
    pub version: &'static str,
    pub subcommand: String,
    pub scene: String,
    pub config_sha256: String,
    pub params: Value,
}

impl Provenance {
    /// `key=value` pairs in a stable order, for one-line headers.
    pub fn echo(&self) -> String {
        let mut out = Vec::new();
        if let Value::Object(map) = &self.params {
            for (k, v) in map {
                out.push(format!("{k}={v}"));
            }
        }
        out.join(" ")
    }
}

/// Value to 16-bit gray: `0` at `lo`, `65535` at `hi`, clamped in between.
pub fn gray_level(v: f64, lo: f64, hi: f64) -> u16 {
    if !(hi > lo) || v.is_nan() {
        return 0;
    }
    let t = ((v - lo) / (hi - lo)).clamp(0.0, 1.0);
    (t * 65535.0).round() as u16
}

/// Binary P5 with `maxval = 65535`, big-endian samples, row-major.
pub fn encode_pgm(width: usize, height: usize, values: &[f64], lo: f64, hi: f64, prov: &Provenance) -> Vec<u8> {
    assert_eq!(values.len(), width * height);
    let mut out = Vec::with_capacity(width * height * 2 + 256);
    out.extend_from_slice(b"P5\n");
    out.extend_from_slice(format!("# henon-lab {} {}\n", prov.subcommand, prov.version).as_bytes());
    out.extend_from_slice(format!("# config-sha256 {}\n", prov.config_sha256).as_bytes());
    out.extend_from_slice(format!("# gray {lo:e}..{hi:e}\n").as_bytes());
    out.extend_from_slice(format!("# params {}\n", prov.echo()).as_bytes());
    out.extend_from_slice(format!("{width} {height}\n65535\n").as_bytes());
    for &v in values {
        out.extend_from_slice(&gray_level(v, lo, hi).to_be_bytes());
    }
    out
}

pub fn sidecar_path(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".meta.json");
    PathBuf::from(s)
}

pub fn to_json(value: &impl Serialize) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("serializable report");
    s.push('\n');
    s
}

/// CSV text with a header row; floats use the shortest round-trip form.
pub fn encode_csv(header: &[&str], rows: &[Vec<String>]) -> String {
    let mut out = header.join(",");
    out.push('\n');
    for r in rows {
        out.push_str(&r.join(","));
        out.push('\n');
    }
    out
}

pub fn write_file(path: &Path, bytes: &[u8]) -> io::Result<()> {
    let mut f = fs::File::create(path)?;
    f.write_all(bytes)?;
    f.flush()
}
