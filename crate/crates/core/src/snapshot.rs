//! Binary field snapshots.
//!
//! Layout, all little-endian: magic `DSKG`, format version `u32`, `n` and `N` as `u32`,
//! `L` and `t` as `f64`, then `Nⁿ` values of `u` followed by `Nⁿ` values of `∂ₜu`.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::propagator::StateSnapshot;
use crate::spectral::{Field, Grid};
use crate::{Error, Result};

pub const MAGIC: &[u8; 4] = b"DSKG";
pub const VERSION: u32 = 1;

pub fn write_snapshot(out: &mut impl Write, snap: &StateSnapshot) -> Result<()> {
    let g = snap.grid();
    out.write_all(MAGIC)?;
    out.write_all(&VERSION.to_le_bytes())?;
    out.write_all(&(g.dim() as u32).to_le_bytes())?;
    out.write_all(&(g.points() as u32).to_le_bytes())?;
    out.write_all(&g.length().to_le_bytes())?;
    out.write_all(&snap.t.to_le_bytes())?;
    for v in snap.u.samples().iter().chain(snap.ut.samples()) {
        out.write_all(&v.to_le_bytes())?;
    }
    Ok(())
}

fn read_u32(r: &mut impl Read) -> Result<u32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)?;
    Ok(u32::from_le_bytes(b))
}

fn read_f64(r: &mut impl Read) -> Result<f64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(f64::from_le_bytes(b))
}

pub fn read_snapshot(r: &mut impl Read) -> Result<StateSnapshot> {
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(Error::Format(format!("bad magic {magic:?}")));
    }
    let version = read_u32(r)?;
    if version != VERSION {
        return Err(Error::Format(format!("unsupported version {version}")));
    }
    let dim = read_u32(r)? as usize;
    let points = read_u32(r)? as usize;
    let length = read_f64(r)?;
    let t = read_f64(r)?;
    let grid = Grid::new(dim, points, length).map_err(|e| Error::Format(e.to_string()))?;
    let mut read_field = || -> Result<Field> {
        let samples = (0..grid.len()).map(|_| read_f64(r)).collect::<Result<Vec<_>>>()?;
        Field::new(grid, samples)
    };
    let u = read_field()?;
    let ut = read_field()?;
    let mut rest = [0u8; 1];
    if r.read(&mut rest)? != 0 {
        return Err(Error::Format("trailing bytes after snapshot".into()));
    }
    StateSnapshot::new(t, u, ut)
}

pub fn save(path: impl AsRef<Path>, snap: &StateSnapshot) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    write_snapshot(&mut w, snap)?;
    w.flush()?;
    Ok(())
}

pub fn load(path: impl AsRef<Path>) -> Result<StateSnapshot> {
    read_snapshot(&mut BufReader::new(File::open(path)?))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> StateSnapshot {
        let g = Grid::new(2, 4, 3.5).unwrap();
        let u = Field::from_fn(g, |x| x[0].sin() + 0.1 * x[1]);
        let ut = Field::from_fn(g, |x| (x[0] * x[1]).cos() / 3.0);
        StateSnapshot::new(1.25, u, ut).unwrap()
    }

    #[test]
    fn round_trip_is_bit_exact() {
        let snap = sample();
        let mut buf = Vec::new();
        write_snapshot(&mut buf, &snap).unwrap();
        assert_eq!(buf.len(), 4 + 4 * 3 + 16 + 2 * 16 * 8);
        assert_eq!(&buf[..4], b"DSKG");
        let back = read_snapshot(&mut buf.as_slice()).unwrap();
        assert_eq!(back, snap);
    }

    #[test]
    fn corrupt_input_is_rejected() {
        let mut buf = Vec::new();
        write_snapshot(&mut buf, &sample()).unwrap();
        let mut bad = buf.clone();
        bad[0] = b'X';
        assert!(matches!(read_snapshot(&mut bad.as_slice()), Err(Error::Format(_))));
        let mut ver = buf.clone();
        ver[4] = 9;
        assert!(matches!(read_snapshot(&mut ver.as_slice()), Err(Error::Format(_))));
        assert!(read_snapshot(&mut &buf[..buf.len() - 3]).is_err());
        let mut long = buf.clone();
        long.push(0);
        assert!(matches!(read_snapshot(&mut long.as_slice()), Err(Error::Format(_))));
    }
}
