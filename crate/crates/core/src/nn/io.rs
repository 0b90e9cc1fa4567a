//! Binary weight file.
//!
//! Layout (all integers little-endian):
//!
//! ```text
//! magic        8 bytes   "SLRPNET\0"
//! version      u32       1
//! header_len   u32       byte length of the JSON header
//! header       JSON      network topology without parameters
//! payload      f32 LE    every parameter buffer, layers in declaration order
//! ```
//!
//! Conv and dense layers write weights then bias; batch norm writes gamma,
//! beta, running mean, running variance.

use std::fs;
use std::path::Path;

use super::NetworkSpec;
use crate::error::{Error, Result};

pub const MAGIC: &[u8; 8] = b"SLRPNET\0";
pub const FORMAT_VERSION: u32 = 1;

pub fn encode_weights(net: &NetworkSpec) -> Result<Vec<u8>> {
    let header = serde_json::to_vec(net).map_err(|e| Error::json("weight header", e))?;
    let mut out = Vec::with_capacity(16 + header.len() + 4 * net.param_count());
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    out.extend_from_slice(&(header.len() as u32).to_le_bytes());
    out.extend_from_slice(&header);
    for layer in net.layers() {
        for buf in layer.params() {
            for v in buf {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
    }
    Ok(out)
}

pub fn decode_weights(bytes: &[u8]) -> Result<NetworkSpec> {
    let fail = |m: &str| Error::Format(m.to_string());
    if bytes.len() < 16 {
        return Err(fail("file shorter than the fixed header"));
    }
    if &bytes[..8] != MAGIC {
        return Err(fail("bad magic bytes"));
    }
    let version = u32::from_le_bytes(bytes[8..12].try_into().expect("4 bytes"));
    if version != FORMAT_VERSION {
        return Err(Error::Format(format!("unsupported version {version}, expected {FORMAT_VERSION}")));
    }
    let header_len = u32::from_le_bytes(bytes[12..16].try_into().expect("4 bytes")) as usize;
    let body = &bytes[16..];
    if body.len() < header_len {
        return Err(fail("truncated topology header"));
    }
    let mut net: NetworkSpec = serde_json::from_slice(&body[..header_len])
        .map_err(|e| Error::Format(format!("unreadable topology header: {e}")))?;
    let mut payload = &body[header_len..];
    let lens: Vec<Vec<usize>> = net.layers().iter().map(|l| l.param_lens()).collect();
    let total: usize = lens.iter().flatten().sum();
    if payload.len() != 4 * total {
        return Err(Error::Format(format!(
            "payload holds {} bytes, topology needs {}",
            payload.len(),
            4 * total
        )));
    }
    for (layer, lens) in net.layers_mut().iter_mut().zip(&lens) {
        for (buf, &n) in layer.params_mut().into_iter().zip(lens) {
            let (chunk, rest) = payload.split_at(4 * n);
            *buf = chunk.chunks_exact(4).map(|c| f32::from_le_bytes(c.try_into().expect("4 bytes"))).collect();
            payload = rest;
        }
    }
    NetworkSpec::new(net.input_shape().to_vec(), net.layers().to_vec(), net.n_classes())
        .map_err(|e| Error::Format(format!("inconsistent network: {e}")))
}

pub fn save_weights(net: &NetworkSpec, path: &Path) -> Result<()> {
    fs::write(path, encode_weights(net)?).map_err(|e| Error::io(path, e))
}

pub fn load_weights(path: &Path) -> Result<NetworkSpec> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_weights(&bytes)
}
