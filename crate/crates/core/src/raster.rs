//! Raster export for model and wavefield snapshots.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RasterFormat {
    Csv,
    F64Binary,
    Pgm16,
}

impl RasterFormat {
    pub fn extension(&self) -> &'static str {
        match self {
            RasterFormat::Csv => "csv",
            RasterFormat::F64Binary => "bin",
            RasterFormat::Pgm16 => "pgm",
        }
    }
}

/// Shape description written next to binary rasters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BinarySidecar {
    pub nx: usize,
    pub nz: usize,
    pub dtype: String,
    pub order: String,
}

fn check(values: &[f64], nx: usize, nz: usize) -> Result<()> {
    if values.len() != nx * nz {
        return Err(Error::shape(format!(
            "{} values for a {nx}x{nz} raster",
            values.len()
        )));
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::shape("raster contains non-finite values"));
    }
    Ok(())
}

/// One line per depth row, comma-separated, shortest round-trip decimals.
pub fn to_csv(values: &[f64], nx: usize, nz: usize) -> Result<String> {
    check(values, nx, nz)?;
    let mut out = String::new();
    for row in values.chunks(nx.max(1)) {
        let line: Vec<String> = row.iter().map(|v| v.to_string()).collect();
        out.push_str(&line.join(","));
        out.push('\n');
    }
    Ok(out)
}

/// Parses CSV written by [`to_csv`]; returns `(nx, nz, values)`.
pub fn parse_csv(text: &str) -> Result<(usize, usize, Vec<f64>)> {
    let mut values = Vec::new();
    let mut nx = None;
    let mut nz = 0;
    for (line_no, line) in text.lines().enumerate() {
        let row: Vec<f64> = line
            .split(',')
            .map(|t| {
                t.trim()
                    .parse::<f64>()
                    .map_err(|e| Error::format(line_no, format!("line {}: {e}", line_no + 1)))
            })
            .collect::<Result<_>>()?;
        if *nx.get_or_insert(row.len()) != row.len() {
            return Err(Error::format(
                line_no,
                format!("ragged row {}", line_no + 1),
            ));
        }
        values.extend(row);
        nz += 1;
    }
    Ok((nx.unwrap_or(0), nz, values))
}

/// Binary PGM with 16-bit big-endian samples; `[min, max]` maps linearly onto
/// `[0, 65535]` and a constant field maps to 0.
pub fn to_pgm16(values: &[f64], nx: usize, nz: usize) -> Result<Vec<u8>> {
    check(values, nx, nz)?;
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut out = format!("P5\n{nx} {nz}\n65535\n").into_bytes();
    for &v in values {
        let level = if hi > lo {
            ((v - lo) / (hi - lo) * 65535.0).round() as u16
        } else {
            0
        };
        out.extend_from_slice(&level.to_be_bytes());
    }
    Ok(out)
}

pub fn sidecar_path(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".json");
    PathBuf::from(s)
}

pub fn export_raster(
    values: &[f64],
    nx: usize,
    nz: usize,
    path: impl AsRef<Path>,
    format: RasterFormat,
) -> Result<()> {
    let path = path.as_ref();
    match format {
        RasterFormat::Csv => std::fs::write(path, to_csv(values, nx, nz)?)?,
        RasterFormat::Pgm16 => std::fs::write(path, to_pgm16(values, nx, nz)?)?,
        RasterFormat::F64Binary => {
            check(values, nx, nz)?;
            let bytes: Vec<u8> = values.iter().flat_map(|v| v.to_le_bytes()).collect();
            std::fs::write(path, bytes)?;
            let sidecar = BinarySidecar {
                nx,
                nz,
                dtype: "f64-le".into(),
                order: "z-outer,x-inner".into(),
            };
            let json = serde_json::to_string_pretty(&sidecar).expect("sidecar serializes");
            std::fs::write(sidecar_path(path), json)?;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_shape_and_parse_back() {
        let v = [1.0, -2.5, 1e-17, 3.0, 4.25, 0.1 + 0.2];
        let text = to_csv(&v, 3, 2).unwrap();
        assert_eq!(text.lines().count(), 2);
        assert!(text.lines().all(|l| l.split(',').count() == 3));
        let (nx, nz, back) = parse_csv(&text).unwrap();
        assert_eq!((nx, nz), (3, 2));
        for (a, b) in v.iter().zip(&back) {
            assert!((a - b).abs() <= 1e-12 * a.abs().max(1.0));
        }
    }

    #[test]
    fn constant_pgm_is_black() {
        let bytes = to_pgm16(&[7.0; 6], 3, 2).unwrap();
        let header = b"P5\n3 2\n65535\n";
        assert_eq!(&bytes[..header.len()], header);
        assert!(bytes[header.len()..].iter().all(|&b| b == 0));
    }

    #[test]
    fn pgm_spans_full_range() {
        let bytes = to_pgm16(&[0.0, 0.5, 1.0], 3, 1).unwrap();
        let px = &bytes[bytes.len() - 6..];
        assert_eq!(px, &[0, 0, 0x80, 0x00, 0xff, 0xff]);
    }

    #[test]
    fn non_finite_rejected() {
        assert!(to_csv(&[f64::NAN], 1, 1).is_err());
    }
}
