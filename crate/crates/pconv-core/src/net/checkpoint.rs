//! Binary model checkpoint codec.
//!
//! Little-endian. Header: magic "PCNV", format version u32, then the
//! architecture (B, N, layer count, channels, kernels, m, leaky slope).
//! Body: every parameter tensor in declaration order, each as a rank +
//! dimension header followed by raw f64 data.

use alloc::vec::Vec;

use super::{ArchConfig, ConvLayer, FcLayer, ModelState, Tensor};

pub const CHECKPOINT_MAGIC: [u8; 4] = *b"PCNV";
pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CheckpointError {
    BadMagic([u8; 4]),
    UnsupportedVersion(u32),
    Truncated { offset: usize },
    Malformed { offset: usize, reason: &'static str },
}

impl core::fmt::Display for CheckpointError {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            CheckpointError::BadMagic(m) => write!(f, "not a model checkpoint (magic {m:02x?})"),
            CheckpointError::UnsupportedVersion(v) => {
                write!(f, "unsupported checkpoint format version {v}")
            }
            CheckpointError::Truncated { offset } => {
                write!(f, "checkpoint truncated at byte offset {offset}")
            }
            CheckpointError::Malformed { offset, reason } => {
                write!(f, "malformed checkpoint at byte offset {offset}: {reason}")
            }
        }
    }
}

impl core::error::Error for CheckpointError {}

fn push_tensor(out: &mut Vec<u8>, shape: &[usize], data: &[f64]) {
    out.extend_from_slice(&(shape.len() as u32).to_le_bytes());
    for &d in shape {
        out.extend_from_slice(&(d as u64).to_le_bytes());
    }
    for &v in data {
        out.extend_from_slice(&v.to_le_bytes());
    }
}

/// Serializes a model to the checkpoint wire format.
pub fn encode_model(model: &ModelState) -> Vec<u8> {
    let arch = &model.arch;
    let mut out = Vec::new();
    out.extend_from_slice(&CHECKPOINT_MAGIC);
    out.extend_from_slice(&CHECKPOINT_VERSION.to_le_bytes());
    out.extend_from_slice(&(arch.context_len as u32).to_le_bytes());
    out.extend_from_slice(&(arch.grid_width as u32).to_le_bytes());
    out.extend_from_slice(&(arch.channels.len() as u32).to_le_bytes());
    for &c in &arch.channels {
        out.extend_from_slice(&(c as u32).to_le_bytes());
    }
    for &k in &arch.kernels {
        out.extend_from_slice(&(k as u32).to_le_bytes());
    }
    out.extend_from_slice(&(arch.classes as u32).to_le_bytes());
    out.extend_from_slice(&arch.leaky_slope.to_le_bytes());
    for layer in &model.conv {
        push_tensor(&mut out, layer.weights.shape(), layer.weights.data());
        push_tensor(&mut out, &[layer.bias.len()], &layer.bias);
    }
    for layer in &model.fc {
        push_tensor(&mut out, layer.weights.shape(), layer.weights.data());
        push_tensor(&mut out, &[layer.bias.len()], &layer.bias);
    }
    out
}

struct Reader<'a> {
    bytes: &'a [u8],
    offset: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], CheckpointError> {
        if self.offset + n > self.bytes.len() {
            return Err(CheckpointError::Truncated {
                offset: self.bytes.len(),
            });
        }
        let s = &self.bytes[self.offset..self.offset + n];
        self.offset += n;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32, CheckpointError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn f64(&mut self) -> Result<f64, CheckpointError> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn tensor(&mut self, expect: &[usize]) -> Result<Tensor, CheckpointError> {
        let at = self.offset;
        let rank = self.u32()? as usize;
        if rank != expect.len() {
            return Err(CheckpointError::Malformed {
                offset: at,
                reason: "tensor rank does not match the architecture",
            });
        }
        let mut shape = Vec::with_capacity(rank);
        for _ in 0..rank {
            let d = u64::from_le_bytes(self.take(8)?.try_into().unwrap());
            shape.push(d as usize);
        }
        if shape != expect {
            return Err(CheckpointError::Malformed {
                offset: at,
                reason: "tensor shape does not match the architecture",
            });
        }
        let len: usize = shape.iter().product();
        let mut data = Vec::with_capacity(len);
        for _ in 0..len {
            data.push(self.f64()?);
        }
        Ok(Tensor::from_vec(&shape, data))
    }
}

/// Parses a checkpoint produced by [`encode_model`]; every tensor shape is
/// checked against the recorded architecture.
pub fn decode_model(bytes: &[u8]) -> Result<ModelState, CheckpointError> {
    let mut r = Reader { bytes, offset: 0 };
    let magic: [u8; 4] = r.take(4)?.try_into().unwrap();
    if magic != CHECKPOINT_MAGIC {
        return Err(CheckpointError::BadMagic(magic));
    }
    let version = r.u32()?;
    if version != CHECKPOINT_VERSION {
        return Err(CheckpointError::UnsupportedVersion(version));
    }
    let context_len = r.u32()? as usize;
    let grid_width = r.u32()? as usize;
    let layers = r.u32()? as usize;
    if layers == 0 || layers > 64 {
        return Err(CheckpointError::Malformed {
            offset: r.offset - 4,
            reason: "implausible conv layer count",
        });
    }
    let mut channels = Vec::with_capacity(layers);
    for _ in 0..layers {
        channels.push(r.u32()? as usize);
    }
    let mut kernels = Vec::with_capacity(layers);
    for _ in 0..layers {
        kernels.push(r.u32()? as usize);
    }
    let classes = r.u32()? as usize;
    let leaky_slope = r.f64()?;
    let mut arch = match ArchConfig::new(context_len, grid_width, channels, kernels, classes) {
        Ok(a) => a,
        Err(_) => {
            return Err(CheckpointError::Malformed {
                offset: 8,
                reason: "recorded architecture is not valid",
            })
        }
    };
    arch.leaky_slope = leaky_slope;
    if !leaky_slope.is_finite() {
        return Err(CheckpointError::Malformed {
            offset: 8,
            reason: "leaky slope is not finite",
        });
    }

    let mut conv = Vec::with_capacity(layers);
    let mut cin = 1usize;
    for (&c, &k) in arch.channels.iter().zip(&arch.kernels) {
        let weights = r.tensor(&[c, cin, k, k])?;
        let bias = r.tensor(&[c])?.data().to_vec();
        conv.push(ConvLayer { weights, bias });
        cin = c;
    }
    let mut fc = Vec::with_capacity(4);
    for (in_dim, out_dim) in arch.fc_dims().map_err(|_| CheckpointError::Malformed {
        offset: 8,
        reason: "recorded architecture has no valid flatten dimension",
    })? {
        let weights = r.tensor(&[out_dim, in_dim])?;
        let bias = r.tensor(&[out_dim])?.data().to_vec();
        fc.push(FcLayer { weights, bias });
    }
    if r.offset != bytes.len() {
        return Err(CheckpointError::Malformed {
            offset: r.offset,
            reason: "trailing bytes after parameters",
        });
    }
    Ok(ModelState { arch, conv, fc })
}
