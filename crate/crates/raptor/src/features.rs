//! `RSF1` layer-stack feature files.
//!
//! Layout (little-endian): magic `RSF1`; `u32` L, T, D; `u8` label
//! (0, 1, 255 = unlabeled); `u8` view; `u16` reserved (0); `u32`-prefixed
//! UTF-8 utterance id and dataset id; then L·T·D `f32` values in
//! (layer, frame, dim) order.

use std::path::Path;

use raptor_core::model::{Label, LayerStack};

use crate::bytes::{put_string, Reader};
use crate::error::{read_file, write_file, Error, Result};

pub const MAGIC: &[u8; 4] = b"RSF1";

pub fn encode_features(stack: &LayerStack) -> Vec<u8> {
    let mut out = Vec::with_capacity(64 + 4 * stack.features().len());
    out.extend_from_slice(MAGIC);
    for n in [stack.layers(), stack.frames(), stack.dim()] {
        out.extend_from_slice(&(n as u32).to_le_bytes());
    }
    out.push(stack.label.code());
    out.push(stack.view_id);
    out.extend_from_slice(&0u16.to_le_bytes());
    put_string(&mut out, &stack.utt_id);
    put_string(&mut out, &stack.dataset_id);
    for v in stack.features() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

pub fn decode_features(bytes: &[u8]) -> Result<LayerStack> {
    let mut r = Reader::new(bytes);
    let magic = r.take(4, "magic")?;
    if magic != MAGIC {
        return Err(Error::format(
            0,
            format!("bad magic {:?}, expected \"RSF1\"", String::from_utf8_lossy(magic)),
        ));
    }
    let l = r.u32("layer count")? as usize;
    let t = r.u32("frame count")? as usize;
    let d = r.u32("feature dim")? as usize;
    let label_at = r.offset();
    let label = Label::from_code(r.u8("label")?)
        .ok_or_else(|| Error::format(label_at, format!("invalid label code {}", bytes[label_at as usize])))?;
    let view = r.u8("view")?;
    let reserved_at = r.offset();
    if r.u16("reserved")? != 0 {
        return Err(Error::format(reserved_at, "reserved field must be 0"));
    }
    let utt = r.string("utterance id")?;
    let dataset = r.string("dataset id")?;
    let payload_at = r.offset();
    let expected = l
        .checked_mul(t)
        .and_then(|n| n.checked_mul(d))
        .and_then(|n| n.checked_mul(4))
        .ok_or_else(|| Error::format(4, format!("dims {l}x{t}x{d} overflow the payload size")))?;
    if r.remaining() != expected {
        return Err(Error::format(
            payload_at,
            format!("payload of {l}x{t}x{d} floats needs {expected} bytes, found {}", r.remaining()),
        ));
    }
    let values = r
        .take(expected, "payload")?
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes(c.try_into().expect("chunk of 4")))
        .collect();
    Ok(LayerStack::new(utt, dataset, label, view, (l, t, d), values)?)
}

pub fn write_features(stack: &LayerStack, path: &Path) -> Result<()> {
    write_file(path, &encode_features(stack))
}

pub fn read_features(path: &Path) -> Result<LayerStack> {
    decode_features(&read_file(path)?).map_err(|e| e.at_path(path))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn stack() -> LayerStack {
        let values = (0..2 * 3 * 4).map(|i| i as f32 * 0.25 - 1.0).collect();
        LayerStack::new("utt-é", "ds", Label::Spoof, 2, (2, 3, 4), values).unwrap()
    }

    #[test]
    fn round_trip_is_exact() {
        let s = stack();
        let bytes = encode_features(&s);
        assert_eq!(&bytes[..4], b"RSF1");
        assert_eq!(decode_features(&bytes).unwrap(), s);
        assert_eq!(encode_features(&decode_features(&bytes).unwrap()), bytes);
    }

    #[test]
    fn bad_magic_is_reported_at_offset_zero() {
        let mut bytes = encode_features(&stack());
        bytes[..4].copy_from_slice(b"XXXX");
        match decode_features(&bytes) {
            Err(Error::Format { offset: 0, message, .. }) => assert!(message.contains("magic")),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn short_payload_names_both_sizes() {
        let mut bytes = encode_features(&stack());
        bytes.truncate(bytes.len() - 8);
        let msg = decode_features(&bytes).unwrap_err().to_string();
        assert!(msg.contains("needs 96 bytes, found 88"), "{msg}");
    }

    #[test]
    fn overflowing_dims_are_format_errors() {
        let mut bytes = encode_features(&stack());
        for at in [4, 8, 12] {
            bytes[at..at + 4].copy_from_slice(&u32::MAX.to_le_bytes());
        }
        assert!(matches!(decode_features(&bytes), Err(Error::Format { .. })));
    }

    #[test]
    fn header_faults_name_their_offsets() {
        let good = encode_features(&stack());
        let mut bad_label = good.clone();
        bad_label[16] = 7;
        assert!(matches!(decode_features(&bad_label), Err(Error::Format { offset: 16, .. })));
        let mut bad_reserved = good.clone();
        bad_reserved[18] = 1;
        assert!(matches!(decode_features(&bad_reserved), Err(Error::Format { offset: 18, .. })));
        assert!(matches!(decode_features(&good[..10]), Err(Error::Format { offset: 8, .. })));
    }
}
