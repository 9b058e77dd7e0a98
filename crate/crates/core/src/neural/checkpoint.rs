//! Self-describing binary checkpoint format for network parameters.
//!
//! Byte layout (all integers and floats little-endian):
//!
//! ```text
//! offset  size          contents
//! 0       4             magic b"MLP1"
//! 4       4             u32 L = number of layer-size entries
//! 8       4*L           u32 layer sizes [input, hidden..., output]
//! 8+4L    8*n_params    f64 flat theta, layer-major (weights row-major,
//!                       then bias, per layer)
//! ```
//!
//! Writes are atomic: a temporary sibling file is renamed into place.

use super::{n_params, MlpParams};
use crate::error::CoreError;
use crate::Result;
use std::io::{Read, Write};
use std::path::Path;

const MAGIC: &[u8; 4] = b"MLP1";

pub fn save(params: &MlpParams, path: &Path) -> Result<()> {
    let tmp = path.with_extension("tmp");
    {
        let mut f = std::io::BufWriter::new(std::fs::File::create(&tmp)?);
        f.write_all(MAGIC)?;
        f.write_all(&(params.layer_sizes.len() as u32).to_le_bytes())?;
        for &s in &params.layer_sizes {
            f.write_all(&(s as u32).to_le_bytes())?;
        }
        for &v in &params.theta {
            f.write_all(&v.to_le_bytes())?;
        }
        f.flush()?;
    }
    std::fs::rename(&tmp, path)?;
    Ok(())
}

pub fn load(path: &Path) -> Result<MlpParams> {
    let mut f = std::io::BufReader::new(std::fs::File::open(path)?);
    let mut magic = [0u8; 4];
    f.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(CoreError::invalid(format!(
            "{}: bad checkpoint magic {:?}",
            path.display(),
            magic
        )));
    }
    let mut buf4 = [0u8; 4];
    f.read_exact(&mut buf4)?;
    let n_sizes = u32::from_le_bytes(buf4) as usize;
    if n_sizes < 2 || n_sizes > 64 {
        return Err(CoreError::invalid(format!("checkpoint layer count {n_sizes} out of range")));
    }
    let mut layer_sizes = Vec::with_capacity(n_sizes);
    for _ in 0..n_sizes {
        f.read_exact(&mut buf4)?;
        layer_sizes.push(u32::from_le_bytes(buf4) as usize);
    }
    let count = n_params(&layer_sizes);
    let mut theta = Vec::with_capacity(count);
    let mut buf8 = [0u8; 8];
    for _ in 0..count {
        f.read_exact(&mut buf8)?;
        theta.push(f64::from_le_bytes(buf8));
    }
    // trailing bytes mean a layout mismatch
    if f.read(&mut buf8)? != 0 {
        return Err(CoreError::invalid(format!(
            "{}: checkpoint longer than its header implies",
            path.display()
        )));
    }
    Ok(MlpParams { layer_sizes, theta })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_preserves_bits() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("net.ckpt");
        let p = MlpParams::init(vec![5, 7, 3], 3).unwrap();
        save(&p, &path).unwrap();
        let q = load(&path).unwrap();
        assert_eq!(p, q);
        let bytes = std::fs::read(&path).unwrap();
        assert_eq!(bytes.len(), 4 + 4 + 4 * 3 + 8 * p.theta.len());
        assert_eq!(&bytes[..4], b"MLP1");
    }

    #[test]
    fn corrupted_magic_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("net.ckpt");
        std::fs::write(&path, b"JUNKJUNKJUNK").unwrap();
        assert!(load(&path).is_err());
    }
}
