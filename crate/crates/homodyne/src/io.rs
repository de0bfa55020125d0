//! Dataset persistence and plot-data export.
//!
//! Detector records use a compact binary format (bit-exact round trip);
//! statistic objects serialize to JSON; plot data exports to CSV.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::invert::StatObject;
use crate::sim::DetectorRecord;
use crate::{Error, Result};

const RECORDS_MAGIC: &[u8; 4] = b"BHD1";

/// Write detector records: magic, little-endian count, then (i1, i2) pairs.
pub fn save_records(path: &Path, records: &[DetectorRecord]) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    let mut w = BufWriter::new(file);
    let io_err = |e| Error::io(path.display().to_string(), e);
    w.write_all(RECORDS_MAGIC).map_err(io_err)?;
    w.write_all(&(records.len() as u64).to_le_bytes()).map_err(io_err)?;
    for r in records {
        w.write_all(&r.i1.to_le_bytes()).map_err(io_err)?;
        w.write_all(&r.i2.to_le_bytes()).map_err(io_err)?;
    }
    w.flush().map_err(io_err)
}

pub fn load_records(path: &Path) -> Result<Vec<DetectorRecord>> {
    let file = File::open(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    let mut r = BufReader::new(file);
    let io_err = |e| Error::io(path.display().to_string(), e);
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic).map_err(io_err)?;
    if &magic != RECORDS_MAGIC {
        return Err(Error::Config(format!(
            "{} is not a detector-record file",
            path.display()
        )));
    }
    let mut len = [0u8; 8];
    r.read_exact(&mut len).map_err(io_err)?;
    let n = u64::from_le_bytes(len) as usize;
    let mut records = Vec::with_capacity(n);
    let mut buf = [0u8; 16];
    for _ in 0..n {
        r.read_exact(&mut buf).map_err(io_err)?;
        records.push(DetectorRecord {
            i1: f64::from_le_bytes(buf[0..8].try_into().unwrap()),
            i2: f64::from_le_bytes(buf[8..16].try_into().unwrap()),
        });
    }
    Ok(records)
}

/// Save a statistic object as JSON (values round-trip bitwise).
pub fn save_stat(path: &Path, stat: &StatObject) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    serde_json::to_writer(BufWriter::new(file), stat)?;
    Ok(())
}

pub fn load_stat(path: &Path) -> Result<StatObject> {
    let file = File::open(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    Ok(serde_json::from_reader(BufReader::new(file))?)
}

/// Export a statistic object as CSV plot data.
///
/// * 1D densities: `x,density,stderr` rows.
/// * 2D densities: a matrix whose first row and first column carry the
///   axis bin centers.
/// * Correlation densities: `m,density,stderr` rows, exclusion window in a
///   leading `#` metadata comment; excluded bins are omitted.
pub fn export_csv(stat: &StatObject, path: &Path) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    let mut w = BufWriter::new(file);
    let io_err = |e| Error::io(path.display().to_string(), e);
    match stat {
        StatObject::Density1D(d) => {
            writeln!(w, "x,density,stderr").map_err(io_err)?;
            for i in 0..d.axis.n_bins {
                writeln!(w, "{},{},{}", d.axis.center(i), d.values[i], d.stderr(i))
                    .map_err(io_err)?;
            }
        }
        StatObject::Density2D(d) => {
            // header row: blank corner then x centers
            write!(w, "").map_err(io_err)?;
            for ix in 0..d.x_axis.n_bins {
                write!(w, ",{}", d.x_axis.center(ix)).map_err(io_err)?;
            }
            writeln!(w).map_err(io_err)?;
            for iy in 0..d.y_axis.n_bins {
                write!(w, "{}", d.y_axis.center(iy)).map_err(io_err)?;
                for ix in 0..d.x_axis.n_bins {
                    write!(w, ",{}", d.values[iy][ix]).map_err(io_err)?;
                }
                writeln!(w).map_err(io_err)?;
            }
        }
        StatObject::Correlation(c) => {
            writeln!(
                w,
                "# exclusion_window = (-{}, {}), excluded_mass = {}",
                c.epsilon0, c.epsilon0, c.excluded_mass
            )
            .map_err(io_err)?;
            writeln!(w, "m,density,stderr").map_err(io_err)?;
            for i in 0..c.m_axis.n_bins {
                if c.is_excluded(i) {
                    continue;
                }
                let se = match c.sample_count {
                    Some(n) if n > 0 => {
                        (c.values[i].max(0.0) / (n as f64 * c.m_axis.dx())).sqrt()
                    }
                    _ => 0.0,
                };
                writeln!(w, "{},{},{}", c.m_axis.center(i), c.values[i], se).map_err(io_err)?;
            }
        }
    }
    w.flush().map_err(io_err)
}
