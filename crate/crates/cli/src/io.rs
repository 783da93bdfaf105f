//! File plumbing: atomic writes, run manifests, and the CSV formats of the
//! pipeline.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use anyhow::{bail, Context, Result};
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::One;
use serde::Serialize;

use twinrecover_core::estimate::continuous::{GridSpec, GriddedDensity};
use twinrecover_core::estimate::discrete::DiscreteTable;
use twinrecover_core::sha256_hex;

/// Write via a temporary file in the target directory plus rename, so an
/// interrupted run leaves no partially written report.
pub fn atomic_write(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    fs::create_dir_all(dir)
        .with_context(|| format!("creating output directory {}", dir.display()))?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir)
        .with_context(|| format!("creating temporary file in {}", dir.display()))?;
    use std::io::Write;
    tmp.write_all(bytes)?;
    tmp.persist(path)
        .with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

/// Sidecar describing one produced file. Reruns with equal manifests
/// (timestamp aside) produce byte-identical outputs.
#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub tool_version: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub config_hash: Option<String>,
    pub input_digests: BTreeMap<String, String>,
    pub seeds: Vec<u64>,
    pub timestamp_unix: u64,
}

impl RunManifest {
    pub fn new(command: String) -> Self {
        RunManifest {
            command,
            tool_version: env!("CARGO_PKG_VERSION"),
            config_hash: None,
            input_digests: BTreeMap::new(),
            seeds: Vec::new(),
            timestamp_unix: SystemTime::now()
                .duration_since(UNIX_EPOCH)
                .map(|d| d.as_secs())
                .unwrap_or(0),
        }
    }

    pub fn with_input(mut self, path: &Path) -> Result<Self> {
        let bytes =
            fs::read(path).with_context(|| format!("reading input {}", path.display()))?;
        self.input_digests
            .insert(path.display().to_string(), sha256_hex(&bytes));
        Ok(self)
    }

    pub fn with_config_hash(mut self, hash: String) -> Self {
        self.config_hash = Some(hash);
        self
    }

    pub fn with_seeds(mut self, seeds: &[u64]) -> Self {
        self.seeds = seeds.to_vec();
        self
    }

    /// Write `bytes` to `path` atomically with a `.manifest.json` sidecar.
    pub fn write_output(&self, path: &Path, bytes: &[u8]) -> Result<()> {
        atomic_write(path, bytes)?;
        let sidecar = sidecar_path(path);
        let json = serde_json::to_string_pretty(self)?;
        atomic_write(&sidecar, json.as_bytes())?;
        Ok(())
    }
}

pub fn sidecar_path(path: &Path) -> PathBuf {
    let mut name = path.file_name().map(|s| s.to_os_string()).unwrap_or_default();
    name.push(".manifest.json");
    path.with_file_name(name)
}

/// Exact rational from a decimal literal such as `0.5`, `1`, or `-0.25`.
pub fn decimal_to_rational(s: &str) -> Result<BigRational> {
    let s = s.trim();
    let (sign, digits) = match s.strip_prefix('-') {
        Some(rest) => (-1, rest),
        None => (1, s),
    };
    let (int_part, frac_part) = match digits.split_once('.') {
        Some((i, f)) => (i, f),
        None => (digits, ""),
    };
    if int_part.is_empty() && frac_part.is_empty() {
        bail!("empty number");
    }
    let mut numerator = BigInt::from(0);
    for c in int_part.chars().chain(frac_part.chars()) {
        let d = c
            .to_digit(10)
            .with_context(|| format!("invalid decimal `{s}`"))?;
        numerator = numerator * 10 + d;
    }
    let mut denominator = BigInt::one();
    for _ in 0..frac_part.len() {
        denominator *= 10;
    }
    Ok(BigRational::new(numerator * sign, denominator))
}

/// Biased count table: header `x,<stratum columns...>,y,count`.
pub fn read_discrete_counts_csv(path: &Path) -> Result<DiscreteTable> {
    let mut reader = csv::Reader::from_path(path)
        .with_context(|| format!("opening {}", path.display()))?;
    let headers: Vec<String> = reader.headers()?.iter().map(|h| h.trim().to_string()).collect();
    if headers.len() < 3 || headers.last().map(String::as_str) != Some("count") {
        bail!(
            "{}: expected header `x,<stratum columns...>,y,count`",
            path.display()
        );
    }
    let variables: Vec<String> = headers[..headers.len() - 1].to_vec();
    let mut rows: Vec<(Vec<u8>, u64)> = Vec::new();
    for record in reader.records() {
        let record = record?;
        let mut key = Vec::with_capacity(variables.len());
        for i in 0..variables.len() {
            key.push(parse_level(record.get(i), &variables[i], path)?);
        }
        let count: u64 = record
            .get(variables.len())
            .unwrap_or("")
            .trim()
            .parse()
            .with_context(|| format!("{}: invalid count", path.display()))?;
        rows.push((key, count));
    }
    Ok(DiscreteTable::from_counts(variables, &rows)?)
}

/// External marginal: header `<columns...>,prob`, probabilities as exact
/// decimal literals.
pub fn read_marginal_csv(path: &Path) -> Result<DiscreteTable> {
    let mut reader = csv::Reader::from_path(path)
        .with_context(|| format!("opening {}", path.display()))?;
    let headers: Vec<String> = reader.headers()?.iter().map(|h| h.trim().to_string()).collect();
    if headers.len() < 2 || headers.last().map(String::as_str) != Some("prob") {
        bail!("{}: expected header `<columns...>,prob`", path.display());
    }
    let variables: Vec<String> = headers[..headers.len() - 1].to_vec();
    let mut rows: Vec<(Vec<u8>, BigRational)> = Vec::new();
    for record in reader.records() {
        let record = record?;
        let mut key = Vec::with_capacity(variables.len());
        for i in 0..variables.len() {
            key.push(parse_level(record.get(i), &variables[i], path)?);
        }
        let prob = decimal_to_rational(record.get(variables.len()).unwrap_or(""))
            .with_context(|| format!("{}: invalid probability", path.display()))?;
        rows.push((key, prob));
    }
    Ok(DiscreteTable::from_probabilities(variables, &rows)?)
}

fn parse_level(field: Option<&str>, var: &str, path: &Path) -> Result<u8> {
    field
        .unwrap_or("")
        .trim()
        .parse()
        .with_context(|| format!("{}: invalid level for `{var}`", path.display()))
}

/// Continuous biased rows: header `x,z,y`.
pub fn read_xzy_csv(path: &Path) -> Result<Vec<(f64, f64, f64)>> {
    let mut reader = csv::Reader::from_path(path)
        .with_context(|| format!("opening {}", path.display()))?;
    let headers: Vec<String> = reader.headers()?.iter().map(|h| h.trim().to_string()).collect();
    if headers != ["x", "z", "y"] {
        bail!("{}: expected header `x,z,y`", path.display());
    }
    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record?;
        rows.push((
            parse_f64(record.get(0), path)?,
            parse_f64(record.get(1), path)?,
            parse_f64(record.get(2), path)?,
        ));
    }
    Ok(rows)
}

/// Single-column external sample: header `z`.
pub fn read_z_csv(path: &Path) -> Result<Vec<f64>> {
    let mut reader = csv::Reader::from_path(path)
        .with_context(|| format!("opening {}", path.display()))?;
    let headers: Vec<String> = reader.headers()?.iter().map(|h| h.trim().to_string()).collect();
    if headers != ["z"] {
        bail!("{}: expected header `z`", path.display());
    }
    let mut rows = Vec::new();
    for record in reader.records() {
        rows.push(parse_f64(record?.get(0), path)?);
    }
    Ok(rows)
}

fn parse_f64(field: Option<&str>, path: &Path) -> Result<f64> {
    field
        .unwrap_or("")
        .trim()
        .parse()
        .with_context(|| format!("{}: invalid number", path.display()))
}

pub fn density_to_csv(d: &GriddedDensity) -> String {
    let mut out = String::from("grid,value\n");
    for (g, v) in d.grid().values().into_iter().zip(d.values()) {
        out.push_str(&format!("{g:.12},{v:.12e}\n"));
    }
    out
}

/// Density CSV: header `grid,value` on a uniform grid.
pub fn read_density_csv(path: &Path) -> Result<GriddedDensity> {
    let mut reader = csv::Reader::from_path(path)
        .with_context(|| format!("opening {}", path.display()))?;
    let headers: Vec<String> = reader.headers()?.iter().map(|h| h.trim().to_string()).collect();
    if headers != ["grid", "value"] {
        bail!("{}: expected header `grid,value`", path.display());
    }
    let mut grid_points = Vec::new();
    let mut values = Vec::new();
    for record in reader.records() {
        let record = record?;
        grid_points.push(parse_f64(record.get(0), path)?);
        values.push(parse_f64(record.get(1), path)?);
    }
    if grid_points.len() < 2 {
        bail!("{}: too few grid points", path.display());
    }
    let spec = GridSpec::new(
        grid_points[0],
        *grid_points.last().unwrap(),
        grid_points.len(),
    )?;
    // verify uniformity up to the printed precision
    for (i, g) in grid_points.iter().enumerate() {
        if (g - spec.value(i)).abs() > spec.step() * 1e-6 {
            bail!("{}: grid is not uniform at row {i}", path.display());
        }
    }
    Ok(GriddedDensity::new(spec, values)?)
}
