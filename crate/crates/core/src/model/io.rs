//! `CANW` weight files.
//!
//! Layout (little-endian): magic `CANW`, version byte `0x01`, the config as
//! `u32 n, h, w, c1, c2, hidden`, `f64 snake_a`, `u64 seed`, then `u32` record
//! count and per record `u32 name_len`, name bytes, `u32 rank`, `rank x u32`
//! dims and the `f64` data.

use std::fs;
use std::path::Path;

use super::network::{CanConfig, CanModel, CanParams, Tensor};
use crate::error::{Error, Result};

const MAGIC: &[u8; 4] = b"CANW";
const VERSION: u8 = 0x01;

pub fn weights_to_bytes(model: &CanModel) -> Vec<u8> {
    let c = &model.config;
    let mut out = Vec::new();
    out.extend_from_slice(MAGIC);
    out.push(VERSION);
    for v in [c.n, c.h, c.w, c.c1, c.c2, c.hidden] {
        out.extend_from_slice(&(v as u32).to_le_bytes());
    }
    out.extend_from_slice(&c.snake_a.to_le_bytes());
    out.extend_from_slice(&c.seed.to_le_bytes());
    let records: Vec<_> = model.params.iter().collect();
    out.extend_from_slice(&(records.len() as u32).to_le_bytes());
    for (name, tensor) in records {
        out.extend_from_slice(&(name.len() as u32).to_le_bytes());
        out.extend_from_slice(name.as_bytes());
        out.extend_from_slice(&(tensor.shape.len() as u32).to_le_bytes());
        for &d in &tensor.shape {
            out.extend_from_slice(&(d as u32).to_le_bytes());
        }
        for v in &tensor.data {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    out
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize, what: &str) -> std::result::Result<&'a [u8], String> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.bytes.len());
        match end {
            Some(end) => {
                let s = &self.bytes[self.pos..end];
                self.pos = end;
                Ok(s)
            }
            None => Err(format!(
                "truncated while reading {what} at byte {}",
                self.pos
            )),
        }
    }

    fn u32(&mut self, what: &str) -> std::result::Result<u32, String> {
        Ok(u32::from_le_bytes(self.take(4, what)?.try_into().unwrap()))
    }

    fn u64(&mut self, what: &str) -> std::result::Result<u64, String> {
        Ok(u64::from_le_bytes(self.take(8, what)?.try_into().unwrap()))
    }

    fn f64(&mut self, what: &str) -> std::result::Result<f64, String> {
        Ok(f64::from_le_bytes(self.take(8, what)?.try_into().unwrap()))
    }
}

/// Parses a weight file image. `path` is only used in error messages.
pub fn weights_from_bytes(bytes: &[u8], path: &Path) -> Result<CanModel> {
    let fmt = |reason: String| Error::format(path, reason);
    let mut r = Reader { bytes, pos: 0 };
    if r.take(4, "magic").map_err(fmt)? != MAGIC {
        return Err(fmt("bad magic, not a CANW weight file".into()));
    }
    let version = r.take(1, "version").map_err(fmt)?[0];
    if version != VERSION {
        return Err(fmt(format!("unsupported version {version}")));
    }
    let mut dims = [0usize; 6];
    for (slot, name) in dims.iter_mut().zip(["n", "h", "w", "c1", "c2", "hidden"]) {
        *slot = r.u32(name).map_err(fmt)? as usize;
    }
    let config = CanConfig {
        n: dims[0],
        h: dims[1],
        w: dims[2],
        c1: dims[3],
        c2: dims[4],
        hidden: dims[5],
        snake_a: r.f64("snake_a").map_err(fmt)?,
        seed: r.u64("seed").map_err(fmt)?,
    };
    config
        .validate()
        .map_err(|e| fmt(format!("embedded config is invalid: {e}")))?;
    let count = r.u32("record count").map_err(fmt)? as usize;
    let expected = config.param_shapes();
    if count != expected.len() {
        return Err(Error::shape(format!(
            "{}: {count} parameter records, config expects {}",
            path.display(),
            expected.len()
        )));
    }
    let mut named = Vec::with_capacity(count);
    for _ in 0..count {
        let len = r.u32("name length").map_err(fmt)? as usize;
        let name = std::str::from_utf8(r.take(len, "name").map_err(fmt)?)
            .map_err(|_| fmt("parameter name is not UTF-8".into()))?
            .to_string();
        let rank = r.u32("rank").map_err(fmt)? as usize;
        if rank > 8 {
            return Err(fmt(format!(
                "parameter '{name}' has implausible rank {rank}"
            )));
        }
        let mut shape = Vec::with_capacity(rank);
        for _ in 0..rank {
            shape.push(r.u32("dimension").map_err(fmt)? as usize);
        }
        let want = expected.iter().find(|(n, _)| *n == name).ok_or_else(|| {
            Error::shape(format!("{}: unknown parameter '{name}'", path.display()))
        })?;
        if want.1 != shape {
            return Err(Error::shape(format!(
                "{}: parameter '{name}' stored with shape {shape:?}, config expects {:?}",
                path.display(),
                want.1
            )));
        }
        let size: usize = shape.iter().product();
        let raw = r.take(size * 8, &name).map_err(fmt)?;
        let data = raw
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect();
        named.push((name, Tensor { shape, data }));
    }
    if r.pos != bytes.len() {
        return Err(fmt(format!("{} trailing bytes", bytes.len() - r.pos)));
    }
    let params = CanParams::from_named(&config, named)?;
    CanModel::from_params(config, params)
}

pub fn save_weights(model: &CanModel, path: &Path) -> Result<()> {
    fs::write(path, weights_to_bytes(model)).map_err(|e| Error::io(path, e))
}

pub fn load_weights(path: &Path) -> Result<CanModel> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    weights_from_bytes(&bytes, path)
}
