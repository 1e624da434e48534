//! Binary on-disk snapshots of captured slabs.
//!
//! Format (little-endian throughout):
//!
//! | field    | type      | meaning                                  |
//! |----------|-----------|------------------------------------------|
//! | magic    | `[u8; 4]` | `b"PLSB"`                                |
//! | version  | `u32`     | format version, currently 1              |
//! | d        | `u32`     | spatial dimension                        |
//! | time     | `u64`     | polymer length the slab was captured at  |
//! | radius   | `i32`     | box radius; the grid is `[-r, r]^d`      |
//! | count    | `u64`     | number of values, must equal `(2r+1)^d`  |
//! | values   | `f64 * n` | row-major box contents                   |
//! | checksum | `u64`     | wrapping sum of the value bit patterns   |

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::grid::BoxGrid;
use crate::polymer::CapturedSlab;

const MAGIC: [u8; 4] = *b"PLSB";
const VERSION: u32 = 1;

/// Conventional file name for the slab captured at `time`, inside `dir`.
pub fn slab_path(dir: &Path, time: usize) -> PathBuf {
    dir.join(format!("slab_{time:06}.plsb"))
}

/// Serialize one captured slab to `path`, overwriting any existing file.
pub fn write_slab(path: &Path, slab: &CapturedSlab) -> Result<()> {
    let file = File::create(path)?;
    let mut w = BufWriter::new(file);
    w.write_all(&MAGIC)?;
    w.write_all(&VERSION.to_le_bytes())?;
    w.write_all(&(slab.grid.d() as u32).to_le_bytes())?;
    w.write_all(&(slab.time as u64).to_le_bytes())?;
    w.write_all(&slab.grid.radius().to_le_bytes())?;
    w.write_all(&(slab.values.len() as u64).to_le_bytes())?;
    let mut checksum = 0u64;
    for v in &slab.values {
        let bits = v.to_bits();
        checksum = checksum.wrapping_add(bits);
        w.write_all(&bits.to_le_bytes())?;
    }
    w.write_all(&checksum.to_le_bytes())?;
    w.flush()?;
    Ok(())
}

fn read_exact<const N: usize>(r: &mut impl Read, what: &str) -> Result<[u8; N]> {
    let mut buf = [0u8; N];
    r.read_exact(&mut buf)
        .map_err(|e| Error::RunState(format!("snapshot truncated while reading {what}: {e}")))?;
    Ok(buf)
}

/// Read a slab previously written by [`write_slab`], verifying the
/// checksum and the internal consistency of the header.
pub fn read_slab(path: &Path) -> Result<CapturedSlab> {
    let file = File::open(path)?;
    let mut r = BufReader::new(file);
    let magic: [u8; 4] = read_exact(&mut r, "magic")?;
    if magic != MAGIC {
        return Err(Error::RunState(format!(
            "{} is not a slab snapshot (bad magic)",
            path.display()
        )));
    }
    let version = u32::from_le_bytes(read_exact(&mut r, "version")?);
    if version != VERSION {
        return Err(Error::RunState(format!(
            "unsupported snapshot version {version} (expected {VERSION})"
        )));
    }
    let d = u32::from_le_bytes(read_exact(&mut r, "dimension")?) as usize;
    let time = u64::from_le_bytes(read_exact(&mut r, "time")?) as usize;
    let radius = i32::from_le_bytes(read_exact(&mut r, "radius")?);
    let count = u64::from_le_bytes(read_exact(&mut r, "count")?) as usize;
    let grid = BoxGrid::new(d, radius)
        .map_err(|e| Error::RunState(format!("snapshot header invalid: {e}")))?;
    if count != grid.len() {
        return Err(Error::RunState(format!(
            "snapshot claims {count} values but a radius-{radius} box in d = {d} holds {}",
            grid.len()
        )));
    }
    let mut values = Vec::with_capacity(count);
    let mut checksum = 0u64;
    for _ in 0..count {
        let bits = u64::from_le_bytes(read_exact(&mut r, "values")?);
        checksum = checksum.wrapping_add(bits);
        values.push(f64::from_bits(bits));
    }
    let stored = u64::from_le_bytes(read_exact(&mut r, "checksum")?);
    if stored != checksum {
        return Err(Error::RunState(format!(
            "snapshot checksum mismatch in {} (stored {stored:#018x}, computed {checksum:#018x})",
            path.display()
        )));
    }
    Ok(CapturedSlab { time, grid, values })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::{DisorderFamily, EnvironmentField};
    use crate::polymer::forward_run;
    use crate::walk::Dimension;

    fn sample_slab() -> CapturedSlab {
        let field = EnvironmentField::new(
            99,
            DisorderFamily::StandardGaussian,
            Dimension::new(3).unwrap(),
        )
        .unwrap();
        let run = forward_run(&field, 0.7, 6, &[6]).unwrap();
        run.slabs.into_iter().next().unwrap()
    }

    #[test]
    fn roundtrips_bit_exactly() {
        let dir = tempdir();
        let slab = sample_slab();
        let path = slab_path(&dir, slab.time);
        write_slab(&path, &slab).unwrap();
        let back = read_slab(&path).unwrap();
        assert_eq!(back.time, slab.time);
        assert_eq!(back.grid.d(), slab.grid.d());
        assert_eq!(back.grid.radius(), slab.grid.radius());
        assert_eq!(back.values.len(), slab.values.len());
        for (a, b) in back.values.iter().zip(&slab.values) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
        std::fs::remove_dir_all(&dir).ok();
    }

    #[test]
    fn rejects_corruption() {
        let dir = tempdir();
        let slab = sample_slab();
        let path = slab_path(&dir, slab.time);
        write_slab(&path, &slab).unwrap();
        let good = std::fs::read(&path).unwrap();

        // Flipped magic.
        let mut bad = good.clone();
        bad[0] ^= 0xff;
        std::fs::write(&path, &bad).unwrap();
        assert!(read_slab(&path).is_err());

        // Unsupported version.
        let mut bad = good.clone();
        bad[4] = 9;
        std::fs::write(&path, &bad).unwrap();
        assert!(read_slab(&path).is_err());

        // Truncated payload.
        std::fs::write(&path, &good[..good.len() / 2]).unwrap();
        assert!(read_slab(&path).is_err());

        // A flipped value bit must break the checksum.
        let mut bad = good.clone();
        let mid = 32 + 8 * (slab.values.len() / 2);
        bad[mid] ^= 0x01;
        std::fs::write(&path, &bad).unwrap();
        let err = read_slab(&path).unwrap_err().to_string();
        assert!(err.contains("checksum"), "unexpected error: {err}");

        // Inconsistent count.
        let mut bad = good.clone();
        bad[24] = bad[24].wrapping_add(1);
        std::fs::write(&path, &bad).unwrap();
        assert!(read_slab(&path).is_err());

        std::fs::remove_dir_all(&dir).ok();
    }

    fn tempdir() -> PathBuf {
        let dir = std::env::temp_dir().join(format!(
            "plsb_test_{}_{}",
            std::process::id(),
            std::time::SystemTime::now()
                .duration_since(std::time::UNIX_EPOCH)
                .unwrap()
                .as_nanos()
        ));
        std::fs::create_dir_all(&dir).unwrap();
        dir
    }
}
