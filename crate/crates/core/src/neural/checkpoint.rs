//! Flat binary checkpoint container.
//!
//! Layout, all integers little-endian:
//!
//! ```text
//! magic   8 bytes  "PQRSTCKP"
//! version u32      1
//! count   u32      number of tensors
//! per tensor:
//!   name_len u32, name (UTF-8), rank u32, dims (u64 each),
//!   data (product(dims) x f64 LE)
//! ```
//!
//! Learnable tensors come first, then the batch-norm running statistics.

use std::collections::HashMap;
use std::io::{Read, Write};
use std::path::Path;

use crate::error::{Error, Result};

use super::model::{ModelConfig, ModelParams};

pub const MAGIC: &[u8; 8] = b"PQRSTCKP";
pub const VERSION: u32 = 1;

pub fn write_checkpoint<W: Write>(params: &ModelParams, mut w: W) -> Result<()> {
    let tensors: Vec<_> = params.trainable().into_iter().chain(params.buffers()).collect();
    w.write_all(MAGIC)?;
    w.write_all(&VERSION.to_le_bytes())?;
    w.write_all(&(tensors.len() as u32).to_le_bytes())?;
    for t in tensors {
        w.write_all(&(t.name.len() as u32).to_le_bytes())?;
        w.write_all(t.name.as_bytes())?;
        w.write_all(&(t.dims.len() as u32).to_le_bytes())?;
        for d in &t.dims {
            w.write_all(&(*d as u64).to_le_bytes())?;
        }
        for v in t.data {
            w.write_all(&v.to_le_bytes())?;
        }
    }
    w.flush()?;
    Ok(())
}

fn bad(message: impl Into<String>) -> Error {
    Error::ParseError { location: "checkpoint".into(), message: message.into() }
}

fn read_u32<R: Read>(r: &mut R, what: &str) -> Result<u32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b).map_err(|_| bad(format!("truncated while reading {what}")))?;
    Ok(u32::from_le_bytes(b))
}

fn read_u64<R: Read>(r: &mut R, what: &str) -> Result<u64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b).map_err(|_| bad(format!("truncated while reading {what}")))?;
    Ok(u64::from_le_bytes(b))
}

/// Reads a checkpoint for the given architecture, checking every tensor's
/// name and shape and the total learnable count.
pub fn read_checkpoint<R: Read>(mut r: R, config: ModelConfig) -> Result<ModelParams> {
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic).map_err(|_| bad("truncated magic"))?;
    if &magic != MAGIC {
        return Err(bad("bad magic"));
    }
    let version = read_u32(&mut r, "version")?;
    if version != VERSION {
        return Err(bad(format!("unsupported version {version}")));
    }
    let count = read_u32(&mut r, "tensor count")? as usize;
    let mut found: HashMap<String, (Vec<usize>, Vec<f64>)> = HashMap::new();
    for i in 0..count {
        let name_len = read_u32(&mut r, "name length")? as usize;
        if name_len > 1024 {
            return Err(bad(format!("tensor {i}: name length {name_len}")));
        }
        let mut name = vec![0u8; name_len];
        r.read_exact(&mut name).map_err(|_| bad(format!("tensor {i}: truncated name")))?;
        let name = String::from_utf8(name).map_err(|_| bad(format!("tensor {i}: name not UTF-8")))?;
        let rank = read_u32(&mut r, "rank")? as usize;
        if rank > 8 {
            return Err(bad(format!("{name}: rank {rank}")));
        }
        let mut dims = Vec::with_capacity(rank);
        for _ in 0..rank {
            dims.push(read_u64(&mut r, "dims")? as usize);
        }
        let n = dims.iter().try_fold(1usize, |a, &d| a.checked_mul(d)).ok_or_else(|| bad(format!("{name}: size overflow")))?;
        if n > 1 << 28 {
            return Err(bad(format!("{name}: {n} elements")));
        }
        let mut data = Vec::with_capacity(n);
        for _ in 0..n {
            data.push(f64::from_bits(read_u64(&mut r, &name)?));
        }
        found.insert(name, (dims, data));
    }

    let mut params = ModelParams::zeros(config)?;
    let expected: Vec<(String, Vec<usize>)> = params
        .trainable()
        .into_iter()
        .chain(params.buffers())
        .map(|t| (t.name, t.dims))
        .collect();
    if found.len() != expected.len() {
        return Err(bad(format!("{} tensors, expected {}", found.len(), expected.len())));
    }
    let mut slots: Vec<&mut Vec<f64>> = Vec::new();
    let mut learnable = 0usize;
    let n_trainable = params.trainable().len();
    let expected_total = params.param_count();
    slots.extend(params.trainable_mut());
    // buffers_mut borrows params again; collect after the trainable slots are filled
    for ((name, dims), slot) in expected.iter().zip(slots.iter_mut()) {
        let (d, data) = found.remove(name).ok_or_else(|| bad(format!("missing tensor {name}")))?;
        if &d != dims {
            return Err(bad(format!("{name}: dims {d:?}, expected {dims:?}")));
        }
        learnable += data.len();
        **slot = data;
    }
    drop(slots);
    for ((name, dims), slot) in expected[n_trainable..].iter().zip(params.buffers_mut()) {
        let (d, data) = found.remove(name).ok_or_else(|| bad(format!("missing tensor {name}")))?;
        if &d != dims {
            return Err(bad(format!("{name}: dims {d:?}, expected {dims:?}")));
        }
        *slot = data;
    }
    if learnable != expected_total {
        return Err(bad(format!("{learnable} learnable parameters, expected {expected_total}")));
    }
    if params.norms.iter().any(|n| n.running_var.iter().any(|&v| !(v > 0.0))) {
        return Err(bad("running variances must be positive"));
    }
    Ok(params)
}

pub fn save_checkpoint(params: &ModelParams, path: &Path) -> Result<()> {
    let f = std::fs::File::create(path).map_err(|e| Error::IoFailure(format!("{}: {e}", path.display())))?;
    write_checkpoint(params, std::io::BufWriter::new(f))
}

pub fn load_checkpoint(path: &Path, config: ModelConfig) -> Result<ModelParams> {
    let f = std::fs::File::open(path).map_err(|e| Error::IoFailure(format!("{}: {e}", path.display())))?;
    read_checkpoint(std::io::BufReader::new(f), config)
}
