//! On-disk formats: field snapshots and energy-ledger tables.
//!
//! A snapshot named `stem` inside a directory consists of one JSON manifest
//! `stem.json` and one raw binary file per component, `stem.c0.bin`,
//! `stem.c1.bin`, ... Each binary holds the spectral coefficients in
//! row-major `(k1, k2, k3)` storage order as interleaved little-endian f64
//! pairs `(re, im)`. Reads verify the manifest against file sizes.
//!
//! Ledger tables are CSV with the fixed header
//! `time,kinetic,dissipation_cum,work_cum,energy_residual`; floats are
//! written in shortest round-trip scientific notation, so rereading is exact
//! and byte output is a pure function of the values.

use std::fs::{self, File};
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{SpectralField, VectorField};
use crate::grid::Grid;
use crate::operators::OperatorSpec;
use crate::timestep::EnergyLedger;

pub const FORMAT_VERSION: u32 = 1;
pub const LEDGER_HEADER: &str = "time,kinetic,dissipation_cum,work_cum,energy_residual";
const LAYOUT: &str = "row-major (k1,k2,k3) fft order; interleaved re,im f64";

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SnapshotManifest {
    pub format_version: u32,
    pub endianness: String,
    pub layout: String,
    pub equation: String,
    pub grid: Grid,
    pub operator: OperatorSpec,
    pub time: f64,
    pub components: usize,
}

fn component_path(dir: &Path, stem: &str, i: usize) -> PathBuf {
    dir.join(format!("{stem}.c{i}.bin"))
}

fn manifest_path(dir: &Path, stem: &str) -> PathBuf {
    dir.join(format!("{stem}.json"))
}

/// Write one snapshot (manifest plus per-component binaries).
pub fn write_snapshot<const N: usize>(
    dir: &Path,
    stem: &str,
    field: &VectorField<N>,
    operator: &OperatorSpec,
    equation: &str,
    time: f64,
) -> Result<()> {
    fs::create_dir_all(dir)?;
    let manifest = SnapshotManifest {
        format_version: FORMAT_VERSION,
        endianness: "little".into(),
        layout: LAYOUT.into(),
        equation: equation.into(),
        grid: field.grid(),
        operator: *operator,
        time,
        components: N,
    };
    let json = serde_json::to_string_pretty(&manifest)?;
    fs::write(manifest_path(dir, stem), json)?;
    for i in 0..N {
        let mut w = BufWriter::new(File::create(component_path(dir, stem, i))?);
        for c in field.component(i).data().iter() {
            w.write_all(&c.re.to_le_bytes())?;
            w.write_all(&c.im.to_le_bytes())?;
        }
        w.flush()?;
    }
    Ok(())
}

/// Read a snapshot manifest alone.
pub fn read_manifest(dir: &Path, stem: &str) -> Result<SnapshotManifest> {
    let text = fs::read_to_string(manifest_path(dir, stem))?;
    let manifest: SnapshotManifest = serde_json::from_str(&text)?;
    if manifest.format_version != FORMAT_VERSION {
        return Err(Error::CheckpointCorrupt(format!(
            "format version {} unsupported (expected {FORMAT_VERSION})",
            manifest.format_version
        )));
    }
    if manifest.endianness != "little" {
        return Err(Error::CheckpointCorrupt(format!(
            "endianness '{}' unsupported",
            manifest.endianness
        )));
    }
    Ok(manifest)
}

fn read_component(path: &Path, grid: Grid) -> Result<SpectralField> {
    let expected = grid.len() * 16;
    let mut bytes = Vec::with_capacity(expected);
    File::open(path)?.read_to_end(&mut bytes)?;
    if bytes.len() != expected {
        return Err(Error::CheckpointCorrupt(format!(
            "{}: {} bytes, expected {expected}",
            path.display(),
            bytes.len()
        )));
    }
    let mut field = SpectralField::zeros(grid);
    for (chunk, c) in bytes.chunks_exact(16).zip(field.data_mut().iter_mut()) {
        let re = f64::from_le_bytes(chunk[0..8].try_into().unwrap());
        let im = f64::from_le_bytes(chunk[8..16].try_into().unwrap());
        *c = Complex64::new(re, im);
    }
    Ok(field)
}

/// Read a snapshot with a statically known component count.
pub fn read_snapshot<const N: usize>(
    dir: &Path,
    stem: &str,
) -> Result<(SnapshotManifest, VectorField<N>)> {
    let manifest = read_manifest(dir, stem)?;
    if manifest.components != N {
        return Err(Error::CheckpointCorrupt(format!(
            "snapshot has {} components, expected {N}",
            manifest.components
        )));
    }
    let components: Vec<SpectralField> = (0..N)
        .map(|i| read_component(&component_path(dir, stem, i), manifest.grid))
        .collect::<Result<_>>()?;
    let field = VectorField::new(
        components
            .try_into()
            .map_err(|_| Error::CheckpointCorrupt("component count".into()))?,
    )?;
    Ok((manifest, field))
}

fn fmt(v: f64) -> String {
    format!("{v:e}")
}

/// Write the energy ledger with the fixed five-column header.
pub fn write_ledger_csv(path: &Path, ledger: &EnergyLedger) -> Result<()> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent)?;
    }
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "{LEDGER_HEADER}")?;
    for i in 0..ledger.len() {
        writeln!(
            w,
            "{},{},{},{},{}",
            fmt(ledger.times[i]),
            fmt(ledger.kinetic[i]),
            fmt(ledger.dissipation_cum[i]),
            fmt(ledger.work_cum[i]),
            fmt(ledger.residual[i]),
        )?;
    }
    w.flush()?;
    Ok(())
}

/// The five ledger columns as read back from disk.
#[derive(Clone, Debug, Default)]
pub struct LedgerRows {
    pub times: Vec<f64>,
    pub kinetic: Vec<f64>,
    pub dissipation_cum: Vec<f64>,
    pub work_cum: Vec<f64>,
    pub residual: Vec<f64>,
}

pub fn read_ledger_csv(path: &Path) -> Result<LedgerRows> {
    let reader = BufReader::new(File::open(path)?);
    let mut lines = reader.lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::CheckpointCorrupt("empty ledger file".into()))??;
    if header.trim() != LEDGER_HEADER {
        return Err(Error::CheckpointCorrupt(format!(
            "unexpected ledger header '{header}'"
        )));
    }
    let mut rows = LedgerRows::default();
    for (lineno, line) in lines.enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let cells: Vec<&str> = line.split(',').collect();
        if cells.len() != 5 {
            return Err(Error::CheckpointCorrupt(format!(
                "line {}: expected 5 cells, found {}",
                lineno + 2,
                cells.len()
            )));
        }
        let parse = |s: &str| -> Result<f64> {
            s.trim()
                .parse::<f64>()
                .map_err(|e| Error::CheckpointCorrupt(format!("line {}: {e}", lineno + 2)))
        };
        rows.times.push(parse(cells[0])?);
        rows.kinetic.push(parse(cells[1])?);
        rows.dissipation_cum.push(parse(cells[2])?);
        rows.work_cum.push(parse(cells[3])?);
        rows.residual.push(parse(cells[4])?);
    }
    Ok(rows)
}
