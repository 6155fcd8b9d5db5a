//! Binary checkpoint container.
//!
//! Layout: magic, format version (u32), config text and vocabulary dump
//! (each a u32 byte length plus UTF-8), tensor count (u32), then per
//! tensor its name (length-prefixed), rank (u32), dims (u32 each) and
//! row-major f32 values. All integers and floats are little-endian.

use std::io::{Read, Write};
use std::path::Path;

use super::{ModelConfig, ModelError, ModelParams, Scalar, Tensor};
use crate::encoding::Vocab;

pub const CHECKPOINT_MAGIC: &[u8; 8] = b"SHTRCKPT";
pub const CHECKPOINT_VERSION: u32 = 1;

fn put_u32(out: &mut Vec<u8>, v: u32) {
    out.extend_from_slice(&v.to_le_bytes());
}

fn put_str(out: &mut Vec<u8>, s: &str) {
    put_u32(out, s.len() as u32);
    out.extend_from_slice(s.as_bytes());
}

pub fn write_checkpoint<T: Scalar>(params: &ModelParams<T>, vocab: &Vocab, mut w: impl Write) -> Result<(), ModelError> {
    let mut out = Vec::new();
    out.extend_from_slice(CHECKPOINT_MAGIC);
    put_u32(&mut out, CHECKPOINT_VERSION);
    put_str(&mut out, &params.config.to_text());
    put_str(&mut out, &vocab.dump());
    put_u32(&mut out, params.tensors.len() as u32);
    for t in &params.tensors {
        put_str(&mut out, &t.name);
        put_u32(&mut out, t.shape.len() as u32);
        for &d in &t.shape {
            put_u32(&mut out, d as u32);
        }
        for v in &t.data {
            out.extend_from_slice(&(v.f64() as f32).to_le_bytes());
        }
    }
    w.write_all(&out)?;
    Ok(())
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl Reader<'_> {
    fn take(&mut self, n: usize) -> Result<&[u8], ModelError> {
        if self.pos + n > self.buf.len() {
            return Err(ModelError::Checkpoint("truncated file".into()));
        }
        let s = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32, ModelError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn string(&mut self) -> Result<String, ModelError> {
        let n = self.u32()? as usize;
        String::from_utf8(self.take(n)?.to_vec()).map_err(|_| ModelError::Checkpoint("invalid UTF-8".into()))
    }
}

/// Reads a checkpoint and checks every tensor against the shapes its
/// config implies.
pub fn read_checkpoint<T: Scalar>(mut r: impl Read) -> Result<(ModelParams<T>, Vocab), ModelError> {
    let mut buf = Vec::new();
    r.read_to_end(&mut buf)?;
    let mut rd = Reader { buf: &buf, pos: 0 };
    if rd.take(CHECKPOINT_MAGIC.len())? != CHECKPOINT_MAGIC {
        return Err(ModelError::Checkpoint("bad magic".into()));
    }
    let version = rd.u32()?;
    if version != CHECKPOINT_VERSION {
        return Err(ModelError::Checkpoint(format!("unsupported version {version}")));
    }
    let config = ModelConfig::from_text(&rd.string()?)?;
    let vocab = Vocab::from_dump(&rd.string()?).map_err(|e| ModelError::Checkpoint(e.to_string()))?;
    if vocab.len() != config.vocab_size {
        return Err(ModelError::Checkpoint("vocabulary size differs from config".into()));
    }
    let count = rd.u32()? as usize;
    let mut tensors = Vec::with_capacity(count);
    for _ in 0..count {
        let name = rd.string()?;
        let rank = rd.u32()? as usize;
        let shape = (0..rank).map(|_| rd.u32().map(|d| d as usize)).collect::<Result<Vec<_>, _>>()?;
        let n: usize = shape.iter().product();
        let bytes = rd.take(n * 4)?;
        let data = bytes.chunks_exact(4).map(|b| T::of(f32::from_le_bytes(b.try_into().unwrap()) as f64)).collect();
        tensors.push(Tensor { name, shape, data });
    }
    if rd.pos != buf.len() {
        return Err(ModelError::Checkpoint("trailing bytes".into()));
    }
    Ok((ModelParams::from_tensors(config, tensors)?, vocab))
}

pub fn save_checkpoint<T: Scalar>(params: &ModelParams<T>, vocab: &Vocab, path: &Path) -> Result<(), ModelError> {
    let file = std::fs::File::create(path)?;
    write_checkpoint(params, vocab, std::io::BufWriter::new(file))
}

pub fn load_checkpoint<T: Scalar>(path: &Path) -> Result<(ModelParams<T>, Vocab), ModelError> {
    read_checkpoint(std::fs::File::open(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_and_corruption() {
        let p = ModelParams::<f32>::init(&ModelConfig::micro(), 3).unwrap();
        let vocab = Vocab::standard();
        let mut buf = Vec::new();
        write_checkpoint(&p, &vocab, &mut buf).unwrap();
        let (q, v) = read_checkpoint::<f32>(&buf[..]).unwrap();
        assert_eq!(q, p);
        assert_eq!(v, vocab);
        let mut bad = buf.clone();
        bad[0] = b'X';
        assert!(read_checkpoint::<f32>(&bad[..]).is_err());
        assert!(read_checkpoint::<f32>(&buf[..buf.len() - 1]).is_err());
    }
}
