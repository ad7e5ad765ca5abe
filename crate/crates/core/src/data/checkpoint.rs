//! `FUS1` binary tensor container.
//!
//! Layout: magic `FUS1`, u32 version, u32 tensor count, then for each tensor
//! u16 name length, UTF-8 name, u8 rank, u32 dims, f32 data. All integers and
//! floats are little-endian, data is row-major.

use std::path::Path;

use super::write_atomic;
use crate::error::{Error, Result};

pub const MAGIC: &[u8; 4] = b"FUS1";
pub const VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct CheckpointTensor {
    pub name: String,
    pub dims: Vec<u32>,
    pub data: Vec<f32>,
}

impl CheckpointTensor {
    pub fn new(name: impl Into<String>, dims: &[usize], data: Vec<f32>) -> Self {
        CheckpointTensor {
            name: name.into(),
            dims: dims.iter().map(|&d| d as u32).collect(),
            data,
        }
    }

    pub fn numel(&self) -> usize {
        self.dims.iter().map(|&d| d as usize).product()
    }
}

pub fn encode_checkpoint(tensors: &[CheckpointTensor]) -> Result<Vec<u8>> {
    let mut out = Vec::new();
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&(tensors.len() as u32).to_le_bytes());
    for t in tensors {
        let name = t.name.as_bytes();
        let len =
            u16::try_from(name.len()).map_err(|_| Error::Checkpoint(format!("tensor name too long: {}", t.name)))?;
        let rank =
            u8::try_from(t.dims.len()).map_err(|_| Error::Checkpoint(format!("rank too large for {}", t.name)))?;
        if t.numel() != t.data.len() {
            return Err(Error::Checkpoint(format!(
                "{}: dims {:?} but {} values",
                t.name,
                t.dims,
                t.data.len()
            )));
        }
        out.extend_from_slice(&len.to_le_bytes());
        out.extend_from_slice(name);
        out.push(rank);
        for d in &t.dims {
            out.extend_from_slice(&d.to_le_bytes());
        }
        for v in &t.data {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    Ok(out)
}

struct Cursor<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.buf.len() - self.pos < n {
            return Err(Error::Checkpoint(format!("truncated at byte {}", self.pos)));
        }
        let s = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }
}

pub fn decode_checkpoint(buf: &[u8]) -> Result<Vec<CheckpointTensor>> {
    let mut c = Cursor { buf, pos: 0 };
    if c.take(4).map_err(|_| Error::Checkpoint("bad magic".into()))? != MAGIC {
        return Err(Error::Checkpoint("bad magic".into()));
    }
    let version = c.u32()?;
    if version != VERSION {
        return Err(Error::Checkpoint(format!("unknown version {version}")));
    }
    let count = c.u32()?;
    let mut tensors = Vec::new();
    for _ in 0..count {
        let len = u16::from_le_bytes(c.take(2)?.try_into().unwrap()) as usize;
        let name = std::str::from_utf8(c.take(len)?)
            .map_err(|_| Error::Checkpoint("tensor name is not UTF-8".into()))?
            .to_string();
        let rank = c.take(1)?[0] as usize;
        let dims = (0..rank).map(|_| c.u32()).collect::<Result<Vec<_>>>()?;
        let numel = dims
            .iter()
            .try_fold(1usize, |acc, &d| acc.checked_mul(d as usize))
            .ok_or_else(|| Error::Checkpoint(format!("{name}: dims overflow")))?;
        let bytes = c.take(
            numel
                .checked_mul(4)
                .ok_or_else(|| Error::Checkpoint("size overflow".into()))?,
        )?;
        let data = bytes
            .chunks_exact(4)
            .map(|b| f32::from_le_bytes(b.try_into().unwrap()))
            .collect();
        tensors.push(CheckpointTensor { name, dims, data });
    }
    if c.pos != buf.len() {
        return Err(Error::Checkpoint(format!("{} trailing bytes", buf.len() - c.pos)));
    }
    Ok(tensors)
}

pub fn write_checkpoint(path: &Path, tensors: &[CheckpointTensor]) -> Result<()> {
    write_atomic(path, &encode_checkpoint(tensors)?)
}

pub fn read_checkpoint(path: &Path) -> Result<Vec<CheckpointTensor>> {
    let buf = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_checkpoint(&buf)
}
