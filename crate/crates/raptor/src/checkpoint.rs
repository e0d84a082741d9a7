//! `RCKP` training checkpoints.
//!
//! Magic `RCKP`, `u16` version, then four `u64`-length-prefixed blocks:
//! parameters (L, D and values), optimizer (hyper-parameters, step count and
//! both moments), shuffle position (epoch, cursor) and metadata (iteration,
//! config fingerprint, optional dev EER). All numbers are little-endian.

use std::path::Path;

use raptor_core::model::{build_topology, ModelParams};
use raptor_core::numerics::{AdamConfig, AdamState};
use raptor_core::train::{Checkpoint, ShuffleState};

use crate::bytes::{put_string, Reader};
use crate::error::{read_file, write_file, Error, Result};

pub const MAGIC: &[u8; 4] = b"RCKP";
pub const VERSION: u16 = 1;

fn put_f64s(out: &mut Vec<u8>, values: &[f64]) {
    out.extend_from_slice(&(values.len() as u64).to_le_bytes());
    for v in values {
        out.extend_from_slice(&v.to_le_bytes());
    }
}

fn block(out: &mut Vec<u8>, body: Vec<u8>) {
    out.extend_from_slice(&(body.len() as u64).to_le_bytes());
    out.extend_from_slice(&body);
}

pub fn encode_checkpoint(ckpt: &Checkpoint) -> Vec<u8> {
    let mut out = Vec::new();
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());

    let topo = ckpt.params.topology();
    let mut params = Vec::new();
    params.extend_from_slice(&(topo.layers() as u32).to_le_bytes());
    params.extend_from_slice(&(topo.dim() as u32).to_le_bytes());
    put_f64s(&mut params, ckpt.params.values());
    block(&mut out, params);

    let a = &ckpt.adam;
    let mut opt = Vec::new();
    for v in [a.config.learning_rate, a.config.beta1, a.config.beta2, a.config.epsilon, a.config.weight_decay]
    {
        opt.extend_from_slice(&v.to_le_bytes());
    }
    opt.extend_from_slice(&a.step.to_le_bytes());
    put_f64s(&mut opt, &a.first_moment);
    put_f64s(&mut opt, &a.second_moment);
    block(&mut out, opt);

    let mut rng = Vec::new();
    rng.extend_from_slice(&ckpt.shuffle.epoch.to_le_bytes());
    rng.extend_from_slice(&ckpt.shuffle.cursor.to_le_bytes());
    block(&mut out, rng);

    let mut meta = Vec::new();
    meta.extend_from_slice(&ckpt.iteration.to_le_bytes());
    put_string(&mut meta, &ckpt.fingerprint);
    match ckpt.dev_eer {
        Some(e) => {
            meta.push(1);
            meta.extend_from_slice(&e.to_le_bytes());
        }
        None => meta.push(0),
    }
    block(&mut out, meta);
    out
}

fn read_f64s(r: &mut Reader, what: &str) -> Result<Vec<f64>> {
    let at = r.offset();
    let n = r.u64(what)?;
    if n > (r.remaining() / 8) as u64 {
        return Err(Error::format(at, format!("{what} declares {n} values, block is too short")));
    }
    (0..n).map(|_| r.f64(what)).collect()
}

/// Reads one length-prefixed block and hands its reader to `parse`.
fn read_block<T>(r: &mut Reader, what: &str, parse: impl FnOnce(&mut Reader) -> Result<T>) -> Result<T> {
    let len = r.u64(what)? as usize;
    let base = r.offset();
    let body = r.take(len, what)?;
    let mut inner = Reader::new(body);
    let shift = |e: Error| match e {
        Error::Format { path, offset, message } => Error::Format { path, offset: offset + base, message },
        other => other,
    };
    let value = parse(&mut inner).map_err(shift)?;
    inner.finish(what).map_err(shift)?;
    Ok(value)
}

pub fn decode_checkpoint(bytes: &[u8]) -> Result<Checkpoint> {
    let mut r = Reader::new(bytes);
    if r.take(4, "magic")? != MAGIC {
        return Err(Error::format(0, "bad magic, expected \"RCKP\""));
    }
    let version = r.u16("version")?;
    if version != VERSION {
        return Err(Error::format(
            4,
            format!("unsupported checkpoint version {version} (expected {VERSION})"),
        ));
    }
    let params = read_block(&mut r, "parameter block", |b| {
        let layers = b.u32("layer count")? as usize;
        let dim = b.u32("feature dim")? as usize;
        let at = b.offset();
        let values = read_f64s(b, "parameters")?;
        let topo = build_topology(layers, dim).map_err(|e| Error::format(0, e.to_string()))?;
        ModelParams::from_values(topo, values).map_err(|e| Error::format(at, e.to_string()))
    })?;
    let adam = read_block(&mut r, "optimizer block", |b| {
        let config = AdamConfig {
            learning_rate: b.f64("learning rate")?,
            beta1: b.f64("beta1")?,
            beta2: b.f64("beta2")?,
            epsilon: b.f64("epsilon")?,
            weight_decay: b.f64("weight decay")?,
        };
        let step = b.u64("step")?;
        let at = b.offset();
        let first_moment = read_f64s(b, "first moment")?;
        let second_moment = read_f64s(b, "second moment")?;
        if first_moment.len() != params.len() || second_moment.len() != params.len() {
            return Err(Error::format(at, "optimizer moments do not match the parameter count"));
        }
        Ok(AdamState { config, step, first_moment, second_moment })
    })?;
    let shuffle = read_block(&mut r, "rng block", |b| {
        Ok(ShuffleState { epoch: b.u64("epoch")?, cursor: b.u64("cursor")? })
    })?;
    let (iteration, fingerprint, dev_eer) = read_block(&mut r, "metadata block", |b| {
        let iteration = b.u64("iteration")?;
        let fingerprint = b.string("fingerprint")?;
        let at = b.offset();
        let dev_eer = match b.u8("dev EER flag")? {
            0 => None,
            1 => Some(b.f64("dev EER")?),
            f => return Err(Error::format(at, format!("invalid dev EER flag {f}"))),
        };
        Ok((iteration, fingerprint, dev_eer))
    })?;
    r.finish("metadata block")?;
    Ok(Checkpoint { params, adam, iteration, shuffle, fingerprint, dev_eer })
}

pub fn save_checkpoint(ckpt: &Checkpoint, path: &Path) -> Result<()> {
    write_file(path, &encode_checkpoint(ckpt))
}

pub fn load_checkpoint(path: &Path) -> Result<Checkpoint> {
    decode_checkpoint(&read_file(path)?).map_err(|e| e.at_path(path))
}

#[cfg(test)]
mod tests {
    use super::*;
    use raptor_core::model::init_params;

    fn ckpt(dev_eer: Option<f64>) -> Checkpoint {
        let params = init_params(&build_topology(5, 3).unwrap(), 9);
        let n = params.len();
        let mut adam = AdamState::new(AdamConfig::default(), n);
        adam.step = 17;
        adam.first_moment = (0..n).map(|i| i as f64 * 1e-3).collect();
        adam.second_moment = (0..n).map(|i| i as f64 * 1e-6).collect();
        Checkpoint {
            params,
            adam,
            iteration: 17,
            shuffle: ShuffleState { epoch: 2, cursor: 48 },
            fingerprint: "abc123".into(),
            dev_eer,
        }
    }

    #[test]
    fn save_load_save_is_byte_identical() {
        for c in [ckpt(None), ckpt(Some(0.0125))] {
            let bytes = encode_checkpoint(&c);
            let back = decode_checkpoint(&bytes).unwrap();
            assert_eq!(back, c);
            assert_eq!(encode_checkpoint(&back), bytes);
        }
    }

    #[test]
    fn wrong_version_is_rejected() {
        let mut bytes = encode_checkpoint(&ckpt(None));
        bytes[4] = 9;
        let err = decode_checkpoint(&bytes).unwrap_err();
        assert!(matches!(err, Error::Format { offset: 4, .. }));
        assert!(err.to_string().contains("version"));
    }

    #[test]
    fn corrupt_payload_is_rejected() {
        let bytes = encode_checkpoint(&ckpt(Some(0.5)));
        for cut in [3, 7, 20, bytes.len() - 1] {
            assert!(matches!(decode_checkpoint(&bytes[..cut]), Err(Error::Format { .. })), "cut {cut}");
        }
        let mut extra = bytes.clone();
        extra.push(0);
        assert!(decode_checkpoint(&extra).is_err());
        // Parameter count that does not fit the declared topology.
        let mut wrong = bytes;
        wrong[22..30].copy_from_slice(&3u64.to_le_bytes());
        assert!(decode_checkpoint(&wrong).is_err());
    }
}
