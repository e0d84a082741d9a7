use alloc::vec;
use alloc::vec::Vec;

use super::mulaw::{linear_to_ulaw, ulaw_to_linear};
use super::resample::resample;
use super::{Waveform, PIPELINE_RATE};
use crate::error::{invalid, Result};
use crate::rng::{self, Gaussian};

const CODEC_RATE: u32 = 8_000;
const NOISE_STREAM: u64 = 0x6e6f_6973;

/// Truncates (from the start) or zero-pads (at the end) to exactly
/// `seconds · rate` samples.
pub fn crop_pad(w: &Waveform, seconds: f64) -> Waveform {
    let target = libm::round(seconds * f64::from(w.sample_rate())).max(0.0) as usize;
    let mut samples = w.samples()[..target.min(w.len())].to_vec();
    samples.resize(target, 0.0);
    Waveform { sample_rate: w.sample_rate(), samples }
}

fn fit_length(mut samples: Vec<f64>, len: usize) -> Vec<f64> {
    samples.truncate(len);
    samples.resize(len, 0.0);
    samples
}

fn require_pipeline_rate(w: &Waveform) -> Result<()> {
    if w.sample_rate() != PIPELINE_RATE {
        return Err(invalid!("expected a {PIPELINE_RATE} Hz waveform, got {} Hz", w.sample_rate()));
    }
    Ok(())
}

/// Narrowband telephony simulation: 8 kHz resample, G.711 μ-law round trip,
/// back to 16 kHz.
pub fn voip_codec(w: &Waveform) -> Result<Waveform> {
    require_pipeline_rate(w)?;
    let narrow = resample(w.samples(), PIPELINE_RATE, CODEC_RATE)?;
    let coded: Vec<f64> = narrow
        .iter()
        .map(|&s| {
            let pcm = libm::round(s.clamp(-1.0, 1.0) * 32_767.0) as i16;
            f64::from(ulaw_to_linear(linear_to_ulaw(pcm))) / 32_768.0
        })
        .collect();
    let wide = resample(&coded, CODEC_RATE, PIPELINE_RATE)?;
    Ok(Waveform::clamped(PIPELINE_RATE, fit_length(wide, w.len())))
}

/// Adds seeded white Gaussian noise so that the realized SNR (input power
/// over the power of `output - input`) equals `snr_db`, with the output
/// clamped to `[-1, 1]`.
///
/// Without clipping the noise gain follows directly from the powers. When the
/// clamp bites it removes noise power, so the gain is raised by bisection
/// until the clamped output reaches the target.
pub fn add_noise(w: &Waveform, snr_db: f64, seed: u64) -> Result<Waveform> {
    if !snr_db.is_finite() {
        return Err(invalid!("SNR must be finite, got {snr_db}"));
    }
    let signal_power = w.power();
    if signal_power <= 0.0 {
        return Err(invalid!("cannot set an SNR on a zero-power signal"));
    }
    let x = w.samples();
    let mut g = Gaussian::new(rng::stream(&[seed, NOISE_STREAM]));
    let noise: Vec<f64> = (0..x.len()).map(|_| g.sample()).collect();
    let noise_power = noise.iter().map(|n| n * n).sum::<f64>() / noise.len() as f64;
    let target = signal_power / libm::pow(10.0, snr_db / 10.0);

    let apply = |gain: f64| -> Vec<f64> {
        x.iter().zip(&noise).map(|(s, n)| (s + gain * n).clamp(-1.0, 1.0)).collect()
    };
    let realized = |out: &[f64]| -> f64 {
        out.iter().zip(x).map(|(o, s)| (o - s) * (o - s)).sum::<f64>() / x.len() as f64
    };

    let mut gain = libm::sqrt(target / noise_power);
    let mut out = apply(gain);
    if realized(&out) < target {
        // Realized noise power is non-decreasing in the gain.
        let (mut lo, mut hi) = (gain, gain);
        for _ in 0..64 {
            hi *= 2.0;
            if realized(&apply(hi)) >= target {
                break;
            }
        }
        for _ in 0..60 {
            let mid = 0.5 * (lo + hi);
            if realized(&apply(mid)) < target {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        gain = hi;
        out = apply(gain);
    }
    Ok(Waveform { sample_rate: w.sample_rate(), samples: out })
}

/// Joint speed and pitch change: the time axis is linearly resampled by
/// `1 / factor` and the result cropped or zero-padded to the input length.
pub fn speed_pitch(w: &Waveform, factor: f64) -> Result<Waveform> {
    if !(0.5..=2.0).contains(&factor) {
        return Err(invalid!("speed factor {factor} outside [0.5, 2.0]"));
    }
    let n = w.len();
    let x = w.samples();
    let n_out = libm::round(n as f64 / factor) as usize;
    let mut out = Vec::with_capacity(n);
    for j in 0..n_out {
        let pos = j as f64 * factor;
        let i = pos as usize;
        let frac = pos - i as f64;
        let v = match (x.get(i), x.get(i + 1)) {
            (Some(&a), Some(&b)) => a + frac * (b - a),
            (Some(&a), None) => a,
            _ => 0.0,
        };
        out.push(v);
    }
    Ok(Waveform::clamped(w.sample_rate(), fit_length(out, n)))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ViewKind {
    Codec,
    Noise,
    SpeedPitch,
}

impl ViewKind {
    /// Transform of one-based view `k`: codec, noise, speed, codec, …
    pub fn for_view(k: usize) -> Self {
        match (k - 1) % 3 {
            0 => ViewKind::Codec,
            1 => ViewKind::Noise,
            _ => ViewKind::SpeedPitch,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TtaConfig {
    pub views: usize,
    pub noise_snr_db: f64,
    pub speed_factor: f64,
    pub master_seed: u64,
}

impl Default for TtaConfig {
    fn default() -> Self {
        Self { views: 3, noise_snr_db: 15.0, speed_factor: 1.05, master_seed: 0 }
    }
}

impl TtaConfig {
    pub fn validate(&self) -> Result<()> {
        if self.views == 0 {
            return Err(invalid!("TTA needs at least one view"));
        }
        if !(0.5..=2.0).contains(&self.speed_factor) {
            return Err(invalid!("speed factor {} outside [0.5, 2.0]", self.speed_factor));
        }
        if !self.noise_snr_db.is_finite() {
            return Err(invalid!("noise SNR must be finite"));
        }
        Ok(())
    }

    /// Noise seed of view `k` of `utt_id`.
    pub fn noise_seed(&self, utt_id: &str, k: usize) -> u64 {
        rng::derive_seed(&[self.master_seed, rng::hash_str(utt_id), k as u64])
    }
}

/// Builds the `cfg.views` test-time views of one utterance, in order.
pub fn make_views(w: &Waveform, cfg: &TtaConfig, utt_id: &str) -> Result<Vec<Waveform>> {
    cfg.validate()?;
    let mut views = vec![];
    for k in 1..=cfg.views {
        let view = match ViewKind::for_view(k) {
            ViewKind::Codec => voip_codec(w)?,
            ViewKind::Noise => add_noise(w, cfg.noise_snr_db, cfg.noise_seed(utt_id, k))?,
            ViewKind::SpeedPitch => speed_pitch(w, cfg.speed_factor)?,
        };
        views.push(view);
    }
    Ok(views)
}

#[cfg(test)]
mod tests {
    use super::*;
    use core::f64::consts::PI;

    fn tone(freq: f64, n: usize, amp: f64) -> Waveform {
        let s = (0..n).map(|i| amp * libm::sin(2.0 * PI * freq * i as f64 / 16_000.0)).collect();
        Waveform::new(16_000, s).unwrap()
    }

    fn snr_db(reference: &Waveform, degraded: &Waveform) -> f64 {
        let noise: f64 =
            reference.samples().iter().zip(degraded.samples()).map(|(a, b)| (a - b) * (a - b)).sum::<f64>()
                / reference.len() as f64;
        10.0 * libm::log10(reference.power() / noise)
    }

    #[test]
    fn crop_pad_examples() {
        let w = tone(100.0, 64_000, 0.5);
        assert_eq!(crop_pad(&w, 4.0), w);
        let short = tone(100.0, 16_000, 0.5);
        let p = crop_pad(&short, 4.0);
        assert_eq!(p.len(), 64_000);
        assert_eq!(&p.samples()[..16_000], short.samples());
        assert!(p.samples()[16_000..].iter().all(|&s| s == 0.0));
        let long = tone(100.0, 80_000, 0.5);
        assert_eq!(crop_pad(&long, 4.0).samples(), &long.samples()[..64_000]);
    }

    #[test]
    fn codec_fixed_point_and_determinism() {
        let silence = Waveform::new(16_000, vec![0.0; 4_000]).unwrap();
        assert!(voip_codec(&silence).unwrap().samples().iter().all(|&s| s == 0.0));
        let w = tone(440.0, 16_000, 1.0);
        assert_eq!(voip_codec(&w).unwrap(), voip_codec(&w).unwrap());
        assert!(voip_codec(&Waveform::new(8_000, vec![0.0; 10]).unwrap()).is_err());
    }

    #[test]
    fn codec_snr_on_full_scale_tone() {
        let w = tone(440.0, 16_000, 1.0);
        let snr = snr_db(&w, &voip_codec(&w).unwrap());
        assert!((20.0..=45.0).contains(&snr), "{snr}");
    }

    #[test]
    fn noise_hits_target_snr() {
        let w = tone(440.0, 64_000, 1.0);
        let quiet = tone(440.0, 64_000, 0.25);
        for (w, snr) in [(&quiet, 5.0), (&w, 0.0), (&w, 5.0), (&w, 15.0), (&w, 30.0)] {
            let noisy = add_noise(w, snr, 3).unwrap();
            let got = snr_db(w, &noisy);
            assert!((got - snr).abs() <= 0.5, "target {snr}, got {got}");
            assert!(noisy.samples().iter().all(|s| (-1.0..=1.0).contains(s)));
        }
        assert_eq!(add_noise(&w, 15.0, 3).unwrap(), add_noise(&w, 15.0, 3).unwrap());
        assert_ne!(add_noise(&w, 15.0, 3).unwrap(), add_noise(&w, 15.0, 4).unwrap());
        let silence = Waveform::new(16_000, vec![0.0; 100]).unwrap();
        assert!(add_noise(&silence, 15.0, 1).is_err());
    }

    #[test]
    fn speed_examples() {
        let w = tone(300.0, 64_000, 0.8);
        assert_eq!(speed_pitch(&w, 1.0).unwrap(), w);
        let fast = speed_pitch(&w, 2.0).unwrap();
        assert_eq!(fast.len(), 64_000);
        assert!(fast.samples()[32_000..].iter().all(|&s| s == 0.0));
        assert!(fast.samples()[31_990..32_000].iter().any(|&s| s != 0.0));
        assert!(speed_pitch(&w, 2.5).is_err());
        assert!(speed_pitch(&w, 0.4).is_err());
    }

    #[test]
    fn view_set_contract() {
        let w = tone(440.0, 8_000, 0.7);
        let cfg = TtaConfig::default();
        let views = make_views(&w, &cfg, "utt").unwrap();
        assert_eq!(views.len(), 3);
        assert!(views.iter().all(|v| v.len() == w.len()));
        assert_eq!(views, make_views(&w, &cfg, "utt").unwrap());
        assert_eq!(views[0], voip_codec(&w).unwrap());
        assert_eq!(views[2], speed_pitch(&w, 1.05).unwrap());

        let one = make_views(&w, &TtaConfig { views: 1, ..cfg }, "utt").unwrap();
        assert_eq!(one, vec![voip_codec(&w).unwrap()]);

        let five = make_views(&w, &TtaConfig { views: 5, ..cfg }, "utt").unwrap();
        assert_eq!(five[3], five[0]);
        assert_ne!(five[4], five[1]);
        assert!(make_views(&w, &TtaConfig { views: 0, ..cfg }, "utt").is_err());
    }
}
