//! Little-endian binary model (`LWIM`) and data (`LWID`) files.
//!
//! Decoding is strict: every header field is checked, the payload length must
//! match the header exactly, and errors carry the byte offset at which the
//! problem was found. Encoding a decoded file reproduces it byte for byte.

use std::path::Path;

use crate::acquisition::DataSet;
use crate::error::{Error, Result};
use crate::field::FieldSet;
use crate::grid::{Grid, Model};
use num_complex::Complex64 as c64;

pub const MODEL_MAGIC: [u8; 4] = *b"LWIM";
pub const DATA_MAGIC: [u8; 4] = *b"LWID";
pub const FORMAT_VERSION: u32 = 1;
/// Velocities must lie strictly inside `(0, MAX_VELOCITY)` m/s.
pub const MAX_VELOCITY: f64 = 2e4;

const MODEL_HEADER_LEN: usize = 48;

/// A velocity raster as stored on disk.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelFile {
    pub nx: u32,
    pub nz: u32,
    pub dx: f64,
    pub dz: f64,
    pub x0: f64,
    pub z0: f64,
    /// Velocities in m/s, z-outer, x-inner.
    pub velocity: Vec<f64>,
}

impl ModelFile {
    pub fn from_model(model: &Model) -> Result<Self> {
        let g = model.grid();
        let nx = u32::try_from(g.nx).map_err(|_| Error::Grid("nx exceeds u32".into()))?;
        let nz = u32::try_from(g.nz).map_err(|_| Error::Grid("nz exceeds u32".into()))?;
        let file = ModelFile {
            nx,
            nz,
            dx: g.dx,
            dz: g.dz,
            x0: g.x0,
            z0: g.z0,
            velocity: model.velocity(),
        };
        file.validate()?;
        Ok(file)
    }

    pub fn grid(&self) -> Result<Grid> {
        Grid::with_origin(
            self.nx as usize,
            self.nz as usize,
            self.dx,
            self.dz,
            self.x0,
            self.z0,
        )
    }

    pub fn to_model(&self) -> Result<Model> {
        Model::from_velocity(self.grid()?, &self.velocity)
    }

    fn validate(&self) -> Result<()> {
        let n = self.nx as u64 * self.nz as u64;
        if n == 0 {
            return Err(Error::Model("model has no nodes".into()));
        }
        if self.velocity.len() as u64 != n {
            return Err(Error::shape(format!(
                "{} velocities for {}x{} nodes",
                self.velocity.len(),
                self.nx,
                self.nz
            )));
        }
        if !(self.dx > 0.0 && self.dz > 0.0 && self.dx.is_finite() && self.dz.is_finite()) {
            return Err(Error::Grid("spacing must be positive and finite".into()));
        }
        if !(self.x0.is_finite() && self.z0.is_finite()) {
            return Err(Error::Grid("origin must be finite".into()));
        }
        if let Some(k) = self.velocity.iter().position(|&v| !valid_velocity(v)) {
            return Err(Error::Model(format!(
                "velocity {} at node {k} outside (0, {MAX_VELOCITY})",
                self.velocity[k]
            )));
        }
        Ok(())
    }
}

fn valid_velocity(v: f64) -> bool {
    v > 0.0 && v < MAX_VELOCITY
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn new(bytes: &'a [u8]) -> Self {
        Reader { bytes, pos: 0 }
    }

    fn take<const N: usize>(&mut self, what: &str) -> Result<[u8; N]> {
        let end = self.pos.checked_add(N).filter(|&e| e <= self.bytes.len());
        match end {
            Some(end) => {
                let out = self.bytes[self.pos..end].try_into().expect("slice length");
                self.pos = end;
                Ok(out)
            }
            None => Err(Error::format(
                self.bytes.len(),
                format!(
                    "truncated {what}, expected {N} more bytes from offset {}",
                    self.pos
                ),
            )),
        }
    }

    fn magic(&mut self, expected: [u8; 4]) -> Result<()> {
        if self.take::<4>("magic")? != expected {
            return Err(Error::format(0, "bad magic"));
        }
        Ok(())
    }

    fn version(&mut self) -> Result<()> {
        let at = self.pos;
        let v = self.u32("version")?;
        if v != FORMAT_VERSION {
            return Err(Error::format(at, format!("unsupported version {v}")));
        }
        Ok(())
    }

    fn u32(&mut self, what: &str) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(what)?))
    }

    fn f64(&mut self, what: &str) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(what)?))
    }

    fn expect_len(&self, payload_values: u64) -> Result<()> {
        let need = payload_values
            .checked_mul(8)
            .and_then(|b| b.checked_add(self.pos as u64));
        match need {
            Some(n) if n == self.bytes.len() as u64 => Ok(()),
            Some(n) if n > self.bytes.len() as u64 => Err(Error::format(
                self.bytes.len(),
                format!("truncated payload, header declares {n} bytes"),
            )),
            Some(n) => Err(Error::format(
                n as usize,
                format!("{} trailing bytes", self.bytes.len() as u64 - n),
            )),
            None => Err(Error::format(self.pos, "declared payload size overflows")),
        }
    }
}

pub fn encode_model(file: &ModelFile) -> Result<Vec<u8>> {
    file.validate()?;
    let mut out = Vec::with_capacity(MODEL_HEADER_LEN + 8 * file.velocity.len());
    out.extend_from_slice(&MODEL_MAGIC);
    out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    out.extend_from_slice(&file.nx.to_le_bytes());
    out.extend_from_slice(&file.nz.to_le_bytes());
    for v in [file.dx, file.dz, file.x0, file.z0] {
        out.extend_from_slice(&v.to_le_bytes());
    }
    for v in &file.velocity {
        out.extend_from_slice(&v.to_le_bytes());
    }
    Ok(out)
}

pub fn decode_model(bytes: &[u8]) -> Result<ModelFile> {
    let mut r = Reader::new(bytes);
    r.magic(MODEL_MAGIC)?;
    r.version()?;
    let nx = r.u32("nx")?;
    let nz = r.u32("nz")?;
    if nx == 0 || nz == 0 {
        return Err(Error::format(8, format!("empty grid {nx}x{nz}")));
    }
    let dx = r.f64("dx")?;
    let dz = r.f64("dz")?;
    if !(dx > 0.0 && dz > 0.0 && dx.is_finite() && dz.is_finite()) {
        return Err(Error::format(
            16,
            format!("spacing must be positive and finite, got dx={dx} dz={dz}"),
        ));
    }
    let x0 = r.f64("x0")?;
    let z0 = r.f64("z0")?;
    if !(x0.is_finite() && z0.is_finite()) {
        return Err(Error::format(32, "origin must be finite"));
    }
    let n = nx as u64 * nz as u64;
    r.expect_len(n)?;
    let mut velocity = Vec::with_capacity(n as usize);
    for _ in 0..n {
        let at = r.pos;
        let v = r.f64("velocity")?;
        if !valid_velocity(v) {
            return Err(Error::format(
                at,
                format!("velocity {v} outside (0, {MAX_VELOCITY})"),
            ));
        }
        velocity.push(v);
    }
    Ok(ModelFile {
        nx,
        nz,
        dx,
        dz,
        x0,
        z0,
        velocity,
    })
}

pub fn encode_data(data: &DataSet) -> Result<Vec<u8>> {
    let count = |n: usize, what: &str| {
        u32::try_from(n).map_err(|_| Error::shape(format!("{what} count exceeds u32")))
    };
    let (nf, ns, nr) = (
        data.frequencies().len(),
        data.sources().len(),
        data.receivers().len(),
    );
    let mut out = Vec::with_capacity(20 + 8 * (nf + 2 * ns + 2 * nr + 2 * nf * ns * nr));
    out.extend_from_slice(&DATA_MAGIC);
    out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    out.extend_from_slice(&count(nf, "frequency")?.to_le_bytes());
    out.extend_from_slice(&count(ns, "source")?.to_le_bytes());
    out.extend_from_slice(&count(nr, "receiver")?.to_le_bytes());
    let mut push = |v: f64| out.extend_from_slice(&v.to_le_bytes());
    data.frequencies().iter().for_each(|&f| push(f));
    for &(x, z) in data.sources().iter().chain(data.receivers()) {
        push(x);
        push(z);
    }
    for record in data.records() {
        for v in record.as_slice() {
            push(v.re);
            push(v.im);
        }
    }
    Ok(out)
}

pub fn decode_data(bytes: &[u8]) -> Result<DataSet> {
    let mut r = Reader::new(bytes);
    r.magic(DATA_MAGIC)?;
    r.version()?;
    let nf = r.u32("n_f")?;
    let ns = r.u32("n_s")?;
    let nr = r.u32("n_r")?;
    if nf == 0 || ns == 0 || nr == 0 {
        return Err(Error::format(
            8,
            format!("empty dimension n_f={nf} n_s={ns} n_r={nr}"),
        ));
    }
    let (nf, ns, nr) = (nf as u64, ns as u64, nr as u64);
    r.expect_len(nf + 2 * ns + 2 * nr + 2 * nf * ns * nr)?;
    let mut frequencies = Vec::with_capacity(nf as usize);
    for k in 0..nf {
        let at = r.pos;
        let f = r.f64("frequency")?;
        if !(f.is_finite() && f > 0.0) || (k > 0 && f <= frequencies[k as usize - 1]) {
            return Err(Error::format(
                at,
                format!("frequency {f} not positive and strictly increasing"),
            ));
        }
        frequencies.push(f);
    }
    let read_positions = |r: &mut Reader<'_>, n: u64, what: &str| -> Result<Vec<(f64, f64)>> {
        (0..n)
            .map(|_| {
                let at = r.pos;
                let p = (r.f64(what)?, r.f64(what)?);
                if !(p.0.is_finite() && p.1.is_finite()) {
                    return Err(Error::format(at, format!("non-finite {what} position")));
                }
                Ok(p)
            })
            .collect()
    };
    let sources = read_positions(&mut r, ns, "source")?;
    let receivers = read_positions(&mut r, nr, "receiver")?;
    let mut records = Vec::with_capacity(nf as usize);
    for _ in 0..nf {
        let mut values = Vec::with_capacity((ns * nr) as usize);
        for _ in 0..ns * nr {
            let at = r.pos;
            let v = c64::new(r.f64("record")?, r.f64("record")?);
            if !(v.re.is_finite() && v.im.is_finite()) {
                return Err(Error::format(at, "non-finite record value"));
            }
            values.push(v);
        }
        records.push(FieldSet::from_fn(nr as usize, ns as usize, |i, j| {
            values[j * nr as usize + i]
        }));
    }
    DataSet::new(frequencies, records, sources, receivers)
        .map_err(|e| Error::format(r.pos, e.to_string()))
}

pub fn read_model(path: impl AsRef<Path>) -> Result<ModelFile> {
    decode_model(&std::fs::read(path)?)
}

pub fn write_model(path: impl AsRef<Path>, file: &ModelFile) -> Result<()> {
    Ok(std::fs::write(path, encode_model(file)?)?)
}

pub fn read_data(path: impl AsRef<Path>) -> Result<DataSet> {
    decode_data(&std::fs::read(path)?)
}

pub fn write_data(path: impl AsRef<Path>, data: &DataSet) -> Result<()> {
    Ok(std::fs::write(path, encode_data(data)?)?)
}
