//! Field dumps and spectral CSV export.
//!
//! A dump is one JSON header line followed by little-endian interleaved
//! `(re, im)` f64 pairs in row-major order.

use std::io::{BufRead, BufReader, Read, Write};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{Grid, SpectralData, WaveField};
use crate::error::{Error, Result};

pub const CONVENTION: &str = "FT(u)(Z)=int exp(-i z.Z) u dz; f=exp(i t|Z|^2) FT(u)";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FieldKind {
    Physical,
    Spectral,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FieldHeader {
    pub n: usize,
    #[serde(rename = "N")]
    pub points: usize,
    #[serde(rename = "L")]
    pub half_width: f64,
    pub time: f64,
    pub convention: String,
    pub kind: FieldKind,
}

pub fn write_field<W: Write>(out: &mut W, grid: &Grid, time: f64, kind: FieldKind, values: &[Complex64]) -> Result<()> {
    let header = FieldHeader {
        n: grid.dim,
        points: grid.n_points,
        half_width: grid.half_width,
        time,
        convention: CONVENTION.into(),
        kind,
    };
    let line = serde_json::to_string(&header).map_err(|e| Error::Io(e.to_string()))?;
    writeln!(out, "{line}")?;
    let mut bytes = Vec::with_capacity(16 * values.len());
    for v in values {
        bytes.extend_from_slice(&v.re.to_le_bytes());
        bytes.extend_from_slice(&v.im.to_le_bytes());
    }
    out.write_all(&bytes)?;
    Ok(())
}

pub fn write_wave<W: Write>(out: &mut W, u: &WaveField) -> Result<()> {
    write_field(out, &u.grid, u.time, FieldKind::Physical, &u.values)
}

pub fn write_spectral<W: Write>(out: &mut W, f: &SpectralData, time: f64) -> Result<()> {
    write_field(out, &f.grid, time, FieldKind::Spectral, &f.values)
}

pub fn read_field<R: Read>(input: R) -> Result<(FieldHeader, Vec<Complex64>)> {
    let mut reader = BufReader::new(input);
    let mut line = String::new();
    reader.read_line(&mut line)?;
    let header: FieldHeader = serde_json::from_str(line.trim_end()).map_err(|e| Error::Parse {
        line: 1,
        column: e.column(),
        message: e.to_string(),
    })?;
    let grid = Grid::new(header.n, header.points, header.half_width)?;
    let mut bytes = Vec::new();
    reader.read_to_end(&mut bytes)?;
    if bytes.len() != 16 * grid.len() {
        return Err(Error::Io(format!(
            "expected {} payload bytes, found {}",
            16 * grid.len(),
            bytes.len()
        )));
    }
    let values = bytes
        .chunks_exact(16)
        .map(|c| {
            let re = f64::from_le_bytes(c[..8].try_into().expect("8 bytes"));
            let im = f64::from_le_bytes(c[8..].try_into().expect("8 bytes"));
            Complex64::new(re, im)
        })
        .collect();
    Ok((header, values))
}

/// Rows `Z_1[,Z_2],abs2,arg`.
pub fn write_spectral_csv<W: Write>(out: &mut W, f: &SpectralData) -> Result<()> {
    let cols: Vec<String> = (1..=f.grid.dim).map(|a| format!("Z_{a}")).collect();
    writeln!(out, "{},abs2,arg", cols.join(","))?;
    for (k, v) in f.values.iter().enumerate() {
        let zeta: Vec<String> = f.grid.frequency(k).iter().map(|z| format!("{z}")).collect();
        writeln!(out, "{},{},{}", zeta.join(","), v.norm_sqr(), v.arg())?;
    }
    Ok(())
}
