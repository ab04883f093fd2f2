//! Binary model checkpoints: a magic tag, a format version, the model
//! configuration as JSON, and every parameter tensor as named shape-prefixed
//! little-endian f64 data. Floats round-trip bitwise.

use std::io::{Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::model::{HeadParams, ModelConfig, QuixerModel};

const MAGIC: &[u8; 4] = b"QXCP";
const VERSION: u32 = 1;

/// Tensor names in file order.
const TENSOR_NAMES: [&str; 10] = [
    "embedding",
    "w_e",
    "lcu_raw_amplitudes",
    "lcu_phases",
    "poly_coefficients",
    "ff_params",
    "head_w1",
    "head_b1",
    "head_w2",
    "head_b2",
];

fn write_u32(out: &mut Vec<u8>, value: u32) {
    out.extend_from_slice(&value.to_le_bytes());
}

fn write_u64(out: &mut Vec<u8>, value: u64) {
    out.extend_from_slice(&value.to_le_bytes());
}

fn write_tensor(out: &mut Vec<u8>, name: &str, shape: &[usize], data: &[f64]) {
    debug_assert_eq!(shape.iter().product::<usize>(), data.len());
    write_u64(out, name.len() as u64);
    out.extend_from_slice(name.as_bytes());
    write_u64(out, shape.len() as u64);
    for dim in shape {
        write_u64(out, *dim as u64);
    }
    for value in data {
        out.extend_from_slice(&value.to_le_bytes());
    }
}

/// Serializes a model to the checkpoint byte format.
pub fn to_bytes(model: &QuixerModel) -> Result<Vec<u8>> {
    let cfg = model.config();
    let config_json = serde_json::to_vec(cfg)?;
    let mut out = Vec::new();
    out.extend_from_slice(MAGIC);
    write_u32(&mut out, VERSION);
    write_u64(&mut out, config_json.len() as u64);
    out.extend_from_slice(&config_json);

    let (v, e) = (cfg.vocab_size, cfg.embed_dim);
    let (n, h) = (cfg.window, cfg.head_hidden);
    let angles = cfg.angle_count();
    let readout = cfg.readout_dim();
    write_tensor(&mut out, "embedding", &[v, e], &model.embedding_table);
    write_tensor(&mut out, "w_e", &[angles, e], &model.w_e);
    write_tensor(
        &mut out,
        "lcu_raw_amplitudes",
        &[n],
        model.lcu_coeffs.raw_amplitudes(),
    );
    write_tensor(&mut out, "lcu_phases", &[n], model.lcu_coeffs.phases());
    write_tensor(
        &mut out,
        "poly_coefficients",
        &[cfg.degree + 1],
        model.poly.coefficients(),
    );
    write_tensor(&mut out, "ff_params", &[angles], &model.ff_params);
    write_tensor(&mut out, "head_w1", &[h, readout], &model.head.w1);
    write_tensor(&mut out, "head_b1", &[h], &model.head.b1);
    write_tensor(&mut out, "head_w2", &[v, h], &model.head.w2);
    write_tensor(&mut out, "head_b2", &[v], &model.head.b2);
    Ok(out)
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, len: usize) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(len).ok_or_else(|| {
            Error::Checkpoint("length overflows the checkpoint buffer".into())
        })?;
        if end > self.bytes.len() {
            return Err(Error::Checkpoint(format!(
                "truncated checkpoint: wanted {len} bytes at offset {}, have {}",
                self.pos,
                self.bytes.len() - self.pos
            )));
        }
        let slice = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(slice)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn usize_checked(&mut self, what: &str) -> Result<usize> {
        let raw = self.u64()?;
        usize::try_from(raw)
            .map_err(|_| Error::Checkpoint(format!("{what} {raw} does not fit in usize")))
    }

    fn tensor(&mut self) -> Result<(String, Vec<usize>, Vec<f64>)> {
        let name_len = self.usize_checked("tensor name length")?;
        if name_len > 256 {
            return Err(Error::Checkpoint(format!(
                "tensor name length {name_len} is implausible"
            )));
        }
        let name = String::from_utf8(self.take(name_len)?.to_vec())
            .map_err(|_| Error::Checkpoint("tensor name is not UTF-8".into()))?;
        let rank = self.usize_checked("tensor rank")?;
        if rank > 8 {
            return Err(Error::Checkpoint(format!("tensor rank {rank} is implausible")));
        }
        let mut shape = Vec::with_capacity(rank);
        let mut len = 1usize;
        for _ in 0..rank {
            let dim = self.usize_checked("tensor dimension")?;
            len = len
                .checked_mul(dim)
                .ok_or_else(|| Error::Checkpoint("tensor size overflows".into()))?;
            shape.push(dim);
        }
        let raw = self.take(len * 8)?;
        let data = raw
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect();
        Ok((name, shape, data))
    }
}

/// Restores a model from checkpoint bytes, validating the format tag,
/// version, tensor names, and shapes.
pub fn from_bytes(bytes: &[u8]) -> Result<QuixerModel> {
    let mut reader = Reader { bytes, pos: 0 };
    let magic = reader.take(4)?;
    if magic != MAGIC {
        return Err(Error::Checkpoint(format!(
            "bad magic {magic:?}; not a model checkpoint"
        )));
    }
    let version = reader.u32()?;
    if version != VERSION {
        return Err(Error::Checkpoint(format!(
            "unsupported checkpoint version {version} (supported: {VERSION})"
        )));
    }
    let config_len = reader.usize_checked("config length")?;
    let config: ModelConfig = serde_json::from_slice(reader.take(config_len)?)
        .map_err(|e| Error::Checkpoint(format!("config block: {e}")))?;

    let mut tensors = Vec::with_capacity(TENSOR_NAMES.len());
    for expected in TENSOR_NAMES {
        let (name, _shape, data) = reader.tensor()?;
        if name != expected {
            return Err(Error::Checkpoint(format!(
                "expected tensor {expected:?}, found {name:?}"
            )));
        }
        tensors.push(data);
    }
    if reader.pos != bytes.len() {
        return Err(Error::Checkpoint(format!(
            "{} trailing bytes after the last tensor",
            bytes.len() - reader.pos
        )));
    }

    let mut it = tensors.into_iter();
    let embedding = it.next().unwrap();
    let w_e = it.next().unwrap();
    let raw_amplitudes = it.next().unwrap();
    let phases = it.next().unwrap();
    let poly_coefficients = it.next().unwrap();
    let ff_params = it.next().unwrap();
    let head = HeadParams {
        w1: it.next().unwrap(),
        b1: it.next().unwrap(),
        w2: it.next().unwrap(),
        b2: it.next().unwrap(),
    };
    QuixerModel::from_parts(
        config,
        embedding,
        w_e,
        raw_amplitudes,
        phases,
        poly_coefficients,
        ff_params,
        head,
    )
}

/// Writes a checkpoint file.
pub fn save(model: &QuixerModel, path: &Path) -> Result<()> {
    let bytes = to_bytes(model)?;
    let mut file = std::fs::File::create(path)?;
    file.write_all(&bytes)?;
    Ok(())
}

/// Reads a checkpoint file.
pub fn load(path: &Path) -> Result<QuixerModel> {
    let mut bytes = Vec::new();
    std::fs::File::open(path)?.read_to_end(&mut bytes)?;
    from_bytes(&bytes)
}
