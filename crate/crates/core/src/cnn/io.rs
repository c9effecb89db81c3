//! Flat binary weight files: magic `CNNE1`, an architecture header, a shape
//! table, then layer-ordered little-endian f32 data. The loader validates
//! the shape table against the architecture before touching any data.

use super::net::{Architecture, CnnModel, ConvSpec};
use std::io::{Read, Write};
use std::path::Path;
use thiserror::Error;

pub const WEIGHTS_MAGIC: &[u8; 5] = b"CNNE1";

#[derive(Debug, Error)]
pub enum WeightsError {
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("bad magic, not a weights file")]
    BadMagic,
    #[error("shape table mismatch: {0}")]
    ShapeMismatch(String),
    #[error("truncated file")]
    Truncated,
}

fn put_u32(out: &mut Vec<u8>, v: usize) {
    out.extend_from_slice(&(v as u32).to_le_bytes());
}

/// Tensor shapes in serialization order: per conv layer W `[out,in,k,k]` and
/// b `[out]`, classifier W `[classes,embed]` and b, projection W and b.
fn shape_table(arch: &Architecture) -> Vec<Vec<usize>> {
    let mut shapes = Vec::new();
    for s in &arch.convs {
        shapes.push(vec![s.out_ch, s.in_ch, s.kernel, s.kernel]);
        shapes.push(vec![s.out_ch]);
    }
    shapes.push(vec![arch.num_classes, arch.embed_dim()]);
    shapes.push(vec![arch.num_classes]);
    shapes.push(vec![arch.proj_dim, arch.embed_dim()]);
    shapes.push(vec![arch.proj_dim]);
    shapes
}

pub fn save_model(model: &CnnModel, path: &Path) -> Result<(), WeightsError> {
    let arch = &model.arch;
    let mut buf = Vec::new();
    buf.extend_from_slice(WEIGHTS_MAGIC);
    put_u32(&mut buf, arch.convs.len());
    for s in &arch.convs {
        put_u32(&mut buf, s.in_ch);
        put_u32(&mut buf, s.out_ch);
        put_u32(&mut buf, s.kernel);
        put_u32(&mut buf, s.dilation);
    }
    put_u32(&mut buf, arch.num_classes);
    put_u32(&mut buf, arch.proj_dim);
    let shapes = shape_table(arch);
    put_u32(&mut buf, shapes.len());
    for shape in &shapes {
        put_u32(&mut buf, shape.len());
        for &d in shape {
            put_u32(&mut buf, d);
        }
    }
    for &p in &model.params {
        buf.extend_from_slice(&(p as f32).to_le_bytes());
    }
    let mut file = std::fs::File::create(path)?;
    file.write_all(&buf)?;
    Ok(())
}

struct Reader<'a> {
    buf: &'a [u8],
    at: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], WeightsError> {
        if self.at + n > self.buf.len() {
            return Err(WeightsError::Truncated);
        }
        let s = &self.buf[self.at..self.at + n];
        self.at += n;
        Ok(s)
    }

    fn u32(&mut self) -> Result<usize, WeightsError> {
        let b = self.take(4)?;
        Ok(u32::from_le_bytes([b[0], b[1], b[2], b[3]]) as usize)
    }

    fn f32(&mut self) -> Result<f32, WeightsError> {
        let b = self.take(4)?;
        Ok(f32::from_le_bytes([b[0], b[1], b[2], b[3]]))
    }
}

pub fn load_model(path: &Path) -> Result<CnnModel, WeightsError> {
    let mut bytes = Vec::new();
    std::fs::File::open(path)?.read_to_end(&mut bytes)?;
    let mut r = Reader { buf: &bytes, at: 0 };
    if r.take(5)? != WEIGHTS_MAGIC {
        return Err(WeightsError::BadMagic);
    }
    let n_convs = r.u32()?;
    let mut convs = Vec::with_capacity(n_convs);
    for _ in 0..n_convs {
        let in_ch = r.u32()?;
        let out_ch = r.u32()?;
        let kernel = r.u32()?;
        let dilation = r.u32()?;
        convs.push(ConvSpec { in_ch, out_ch, kernel, dilation });
    }
    let num_classes = r.u32()?;
    let proj_dim = r.u32()?;
    let arch = Architecture { convs, num_classes, proj_dim };

    let n_tensors = r.u32()?;
    let expected = shape_table(&arch);
    if n_tensors != expected.len() {
        return Err(WeightsError::ShapeMismatch(format!(
            "{n_tensors} tensors, architecture needs {}",
            expected.len()
        )));
    }
    for (i, want) in expected.iter().enumerate() {
        let ndim = r.u32()?;
        let mut dims = Vec::with_capacity(ndim);
        for _ in 0..ndim {
            dims.push(r.u32()?);
        }
        if &dims != want {
            return Err(WeightsError::ShapeMismatch(format!(
                "tensor {i}: file has {dims:?}, architecture needs {want:?}"
            )));
        }
    }

    let len = arch.param_len();
    let mut params = Vec::with_capacity(len);
    for _ in 0..len {
        params.push(r.f32()? as f64);
    }
    Ok(CnnModel { arch, params })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn save_load_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.cnne");
        let model = CnnModel::init(Architecture::tiny(), 42);
        save_model(&model, &path).unwrap();
        let loaded = load_model(&path).unwrap();
        assert_eq!(loaded.arch, model.arch);
        // f32 storage: round-trip matches to f32 precision.
        for (a, b) in model.params.iter().zip(&loaded.params) {
            assert_eq!(*a as f32, *b as f32);
        }
    }

    #[test]
    fn bad_magic_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("junk.cnne");
        std::fs::write(&path, b"NOPE!rest").unwrap();
        assert!(matches!(load_model(&path), Err(WeightsError::BadMagic)));
    }

    #[test]
    fn truncation_detected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.cnne");
        let model = CnnModel::init(Architecture::tiny(), 42);
        save_model(&model, &path).unwrap();
        let bytes = std::fs::read(&path).unwrap();
        std::fs::write(&path, &bytes[..bytes.len() - 8]).unwrap();
        assert!(matches!(load_model(&path), Err(WeightsError::Truncated)));
    }
}
