//! 16-bit PCM mono RIFF/WAVE files.

use std::path::Path;

use raptor_core::dsp::{Waveform, PIPELINE_RATE};

use crate::bytes::Reader;
use crate::error::{read_file, write_file, Error, Result};

fn quantize(x: f64) -> i16 {
    (x * 32768.0).round().clamp(-32768.0, 32767.0) as i16
}

/// Encodes `w` as 16-bit PCM mono at its own sample rate.
pub fn encode_wav(w: &Waveform) -> Vec<u8> {
    let data_len = (w.len() * 2) as u32;
    let rate = w.sample_rate();
    let mut out = Vec::with_capacity(44 + data_len as usize);
    out.extend_from_slice(b"RIFF");
    out.extend_from_slice(&(36 + data_len).to_le_bytes());
    out.extend_from_slice(b"WAVE");
    out.extend_from_slice(b"fmt ");
    out.extend_from_slice(&16u32.to_le_bytes());
    out.extend_from_slice(&1u16.to_le_bytes());
    out.extend_from_slice(&1u16.to_le_bytes());
    out.extend_from_slice(&rate.to_le_bytes());
    out.extend_from_slice(&(rate * 2).to_le_bytes());
    out.extend_from_slice(&2u16.to_le_bytes());
    out.extend_from_slice(&16u16.to_le_bytes());
    out.extend_from_slice(b"data");
    out.extend_from_slice(&data_len.to_le_bytes());
    for &s in w.samples() {
        out.extend_from_slice(&quantize(s).to_le_bytes());
    }
    out
}

/// Decodes a 16-bit PCM mono file at its native rate.
pub fn decode_wav_native(bytes: &[u8]) -> Result<Waveform> {
    let mut r = Reader::new(bytes);
    if r.take(4, "RIFF chunk id")? != b"RIFF" {
        return Err(Error::format(0, "RIFF: missing \"RIFF\" chunk id"));
    }
    r.u32("RIFF chunk size")?;
    if r.take(4, "RIFF form type")? != b"WAVE" {
        return Err(Error::format(8, "RIFF: form type is not \"WAVE\""));
    }
    let mut rate = None;
    let mut samples = None;
    while r.remaining() > 0 {
        let at = r.offset();
        let id = r.take(4, "chunk id")?;
        let name = String::from_utf8_lossy(id).into_owned();
        let len = r.u32(&format!("{name} chunk size"))? as usize;
        let body = r.take(len, &format!("{name} chunk"))?;
        if len % 2 == 1 && r.remaining() > 0 {
            r.take(1, "chunk padding")?;
        }
        match id {
            b"fmt " => {
                let mut f = Reader::new(body);
                let format = f.u16("fmt chunk").map_err(|_| Error::format(at, "fmt: chunk too short"))?;
                let channels = f.u16("fmt chunk").map_err(|_| Error::format(at, "fmt: chunk too short"))?;
                let sr = f.u32("fmt chunk").map_err(|_| Error::format(at, "fmt: chunk too short"))?;
                f.take(6, "fmt chunk").map_err(|_| Error::format(at, "fmt: chunk too short"))?;
                let bits = f.u16("fmt chunk").map_err(|_| Error::format(at, "fmt: chunk too short"))?;
                if format != 1 {
                    return Err(Error::format(at, format!("fmt: format code {format} is not PCM")));
                }
                if channels != 1 {
                    return Err(Error::format(
                        at,
                        format!("fmt: {channels} channels, only mono is supported"),
                    ));
                }
                if bits != 16 {
                    return Err(Error::format(at, format!("fmt: {bits} bits per sample, expected 16")));
                }
                if sr == 0 {
                    return Err(Error::format(at, "fmt: sample rate is 0"));
                }
                rate = Some(sr);
            }
            b"data" => {
                if rate.is_none() {
                    return Err(Error::format(at, "data: chunk precedes fmt chunk"));
                }
                if !len.is_multiple_of(2) {
                    return Err(Error::format(at, "data: odd byte count for 16-bit samples"));
                }
                samples = Some(
                    body.chunks_exact(2)
                        .map(|c| i16::from_le_bytes([c[0], c[1]]) as f64 / 32768.0)
                        .collect::<Vec<_>>(),
                );
            }
            _ => {}
        }
    }
    let rate = rate.ok_or_else(|| Error::format(r.offset(), "fmt: chunk missing"))?;
    let samples = samples.ok_or_else(|| Error::format(r.offset(), "data: chunk missing"))?;
    Ok(Waveform::new(rate, samples)?)
}

/// Decodes a WAV file and resamples it to the pipeline rate.
pub fn decode_wav(bytes: &[u8]) -> Result<Waveform> {
    let w = decode_wav_native(bytes)?;
    if w.sample_rate() == PIPELINE_RATE {
        Ok(w)
    } else {
        Ok(w.resampled(PIPELINE_RATE)?)
    }
}

pub fn read_wav(path: &Path) -> Result<Waveform> {
    decode_wav(&read_file(path)?).map_err(|e| e.at_path(path))
}

/// Writes `w` as 16-bit PCM mono at 16 kHz, resampling if needed.
pub fn write_wav(w: &Waveform, path: &Path) -> Result<()> {
    let bytes = if w.sample_rate() == PIPELINE_RATE {
        encode_wav(w)
    } else {
        encode_wav(&w.resampled(PIPELINE_RATE)?)
    };
    write_file(path, &bytes)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tone(rate: u32, n: usize) -> Waveform {
        let s = (0..n)
            .map(|i| 0.8 * (2.0 * std::f64::consts::PI * 440.0 * i as f64 / rate as f64).sin())
            .collect();
        Waveform::new(rate, s).unwrap()
    }

    #[test]
    fn write_read_is_within_one_lsb_and_then_exact() {
        let mut s: Vec<f64> = tone(16_000, 1000).into_samples();
        s.extend([1.0, -1.0, 0.0, 1e-9]);
        let w = Waveform::new(16_000, s).unwrap();
        let back = decode_wav(&encode_wav(&w)).unwrap();
        assert_eq!(back.sample_rate(), 16_000);
        for (a, b) in w.samples().iter().zip(back.samples()) {
            assert!((a - b).abs() <= 1.0 / 32768.0);
        }
        let again = decode_wav(&encode_wav(&back)).unwrap();
        assert_eq!(again, back);
    }

    #[test]
    fn stereo_is_rejected_naming_channels() {
        let mut bytes = encode_wav(&tone(16_000, 10));
        bytes[22] = 2;
        let msg = decode_wav(&bytes).unwrap_err().to_string();
        assert!(msg.contains("channels"), "{msg}");
    }

    #[test]
    fn non_pcm_and_broken_riff_are_rejected() {
        let good = encode_wav(&tone(16_000, 10));
        let mut float = good.clone();
        float[20] = 3;
        assert!(decode_wav(&float).unwrap_err().to_string().contains("fmt"));
        let mut riff = good.clone();
        riff[..4].copy_from_slice(b"RIFX");
        assert!(decode_wav(&riff).unwrap_err().to_string().contains("RIFF"));
        assert!(decode_wav(&good[..good.len() - 3]).unwrap_err().to_string().contains("data"));
    }

    #[test]
    fn unknown_chunks_are_skipped() {
        let good = encode_wav(&tone(16_000, 10));
        let mut with_list = good[..36].to_vec();
        with_list.extend_from_slice(b"LIST");
        with_list.extend_from_slice(&3u32.to_le_bytes());
        with_list.extend_from_slice(&[1, 2, 3, 0]);
        with_list.extend_from_slice(&good[36..]);
        assert_eq!(decode_wav(&with_list).unwrap(), decode_wav(&good).unwrap());
    }

    #[test]
    fn eight_khz_input_is_upsampled() {
        let w = decode_wav(&encode_wav(&tone(8_000, 4001))).unwrap();
        assert_eq!(w.sample_rate(), 16_000);
        assert!((w.len() as i64 - 8002).abs() <= 1);
    }
}
