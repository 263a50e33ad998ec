//! Trace file formats.
//!
//! Binary: a 24-byte header of three little-endian fields — `t0` (f64, ps),
//! `dt` (f64, ps), `count` (u64) — followed by `count` little-endian f64
//! samples. CSV: a `t_ps,value` header line then one row per sample. Samples
//! are written as f64 regardless of the in-memory scalar type.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use byteorder::{LittleEndian, ReadBytesExt, WriteBytesExt};

use crate::error::{Error, Result};
use crate::scalar::Float;
use crate::waveform::Waveform;

pub fn write_binary<T: Float>(path: &Path, waveform: &Waveform<T>) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    w.write_f64::<LittleEndian>(waveform.t0_ps.to_f64().unwrap())?;
    w.write_f64::<LittleEndian>(waveform.dt_ps.to_f64().unwrap())?;
    w.write_u64::<LittleEndian>(waveform.samples.len() as u64)?;
    for s in &waveform.samples {
        w.write_f64::<LittleEndian>(s.to_f64().unwrap())?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_binary(path: &Path) -> Result<Waveform<f64>> {
    let mut r = BufReader::new(File::open(path)?);
    let t0 = r.read_f64::<LittleEndian>()?;
    let dt = r.read_f64::<LittleEndian>()?;
    let count = r.read_u64::<LittleEndian>()? as usize;
    let mut samples = Vec::with_capacity(count.min(1 << 28));
    for _ in 0..count {
        samples.push(r.read_f64::<LittleEndian>()?);
    }
    // Anything left over means the header lied about the length.
    let mut probe = [0u8; 1];
    if r.read(&mut probe)? != 0 {
        return Err(Error::TraceFormat(
            "trailing bytes after declared sample count".into(),
        ));
    }
    Waveform::new(t0, dt, samples)
}

pub fn write_csv<T: Float, W: Write>(mut out: W, waveform: &Waveform<T>) -> Result<()> {
    writeln!(out, "t_ps,value")?;
    for (i, s) in waveform.samples.iter().enumerate() {
        writeln!(
            out,
            "{},{}",
            waveform.time_at(i).to_f64().unwrap(),
            s.to_f64().unwrap()
        )?;
    }
    Ok(())
}

pub fn write_csv_file<T: Float>(path: &Path, waveform: &Waveform<T>) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    write_csv(&mut w, waveform)?;
    w.flush()?;
    Ok(())
}
