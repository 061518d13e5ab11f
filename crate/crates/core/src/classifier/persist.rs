//! `.inkm` model container.
//!
//! ```text
//! "INKM" | version u32 LE | header_len u32 LE | header JSON
//!        | n_params u64 LE | n_params * f64 LE
//! ```
//!
//! The header carries the hyperparameters and the input normalization.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{Hparams, InputNorm, Model};
use crate::error::{Error, Result};

const MAGIC: &[u8; 4] = b"INKM";
const VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct Header {
    hparams: Hparams,
    norm: InputNorm,
}

pub fn save_model(m: &Model) -> Vec<u8> {
    let header = serde_json::to_vec(&Header {
        hparams: m.hparams,
        norm: m.norm.clone(),
    })
    .expect("header serializes");
    let mut out = Vec::with_capacity(24 + header.len() + m.param_count() * 8);
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&(header.len() as u32).to_le_bytes());
    out.extend_from_slice(&header);
    out.extend_from_slice(&(m.param_count() as u64).to_le_bytes());
    for p in m.params() {
        out.extend_from_slice(&p.to_le_bytes());
    }
    out
}

fn take<'a>(bytes: &mut &'a [u8], n: usize, what: &str) -> Result<&'a [u8]> {
    if bytes.len() < n {
        return Err(Error::ModelFormat(format!("truncated while reading {what}")));
    }
    let (head, rest) = bytes.split_at(n);
    *bytes = rest;
    Ok(head)
}

pub fn load_model(mut bytes: &[u8]) -> Result<Model> {
    let buf = &mut bytes;
    if take(buf, 4, "magic")? != MAGIC {
        return Err(Error::ModelFormat("bad magic header".into()));
    }
    let version = u32::from_le_bytes(take(buf, 4, "version")?.try_into().expect("4 bytes"));
    if version != VERSION {
        return Err(Error::ModelFormat(format!("unsupported version {version}")));
    }
    let header_len = u32::from_le_bytes(take(buf, 4, "header length")?.try_into().expect("4 bytes"));
    let header: Header = serde_json::from_slice(take(buf, header_len as usize, "header")?)
        .map_err(|e| Error::ModelFormat(format!("header: {e}")))?;
    let n = u64::from_le_bytes(take(buf, 8, "parameter count")?.try_into().expect("8 bytes")) as usize;
    let payload = take(buf, n.checked_mul(8).ok_or_else(|| Error::ModelFormat("size overflow".into()))?, "payload")?;
    if !buf.is_empty() {
        return Err(Error::ModelFormat(format!("{} trailing bytes", buf.len())));
    }
    let params = payload
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
        .collect();
    Model::from_parts(header.hparams, header.norm, params)
}

pub fn save_model_file(m: &Model, path: &Path) -> Result<()> {
    fs::write(path, save_model(m)).map_err(|e| Error::io(path, e))
}

pub fn load_model_file(path: &Path) -> Result<Model> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    load_model(&bytes)
}
