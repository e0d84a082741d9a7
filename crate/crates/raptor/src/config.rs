//! Run configuration: a flat map of dotted keys with typed defaults.
//!
//! Files are JSON objects such as `{"train.lambda": 0.25, "seed": 7}`.
//! Unknown keys and nested objects are rejected. The fingerprint is the
//! SHA-256 of the canonical JSON of the fully resolved map.

use std::collections::BTreeMap;
use std::path::Path;

use serde_json::Value;
use sha2::{Digest, Sha256};

use raptor_core::dsp::TtaConfig;
use raptor_core::synth::SynthSpec;
use raptor_core::train::{ClassWeightMode, TrainConfig};

use crate::error::{read_file, Error, Result};

#[derive(Clone, Copy)]
enum Kind {
    UInt,
    Float,
    Str,
    UIntList,
    OneOf(&'static [&'static str]),
}

struct Key {
    name: &'static str,
    kind: Kind,
    default: fn() -> Value,
}

macro_rules! key {
    ($name:literal, $kind:expr, $default:expr) => {
        Key { name: $name, kind: $kind, default: || Value::from($default) }
    };
}

const KEYS: &[Key] = &[
    key!("seed", Kind::UInt, 0u64),
    key!("synth.layers", Kind::UInt, 12u64),
    key!("synth.frames", Kind::UInt, 200u64),
    key!("synth.dim", Kind::UInt, 32u64),
    key!("synth.artifact_layers", Kind::UIntList, vec![5u64, 6, 7, 8]),
    key!("synth.artifact_gain", Kind::Float, 0.5),
    key!("synth.class_separation", Kind::Float, 1.0),
    key!("synth.jitter_scale", Kind::Float, 0.5),
    key!("synth.dataset", Kind::Str, "synth"),
    key!("synth.train", Kind::UInt, 400u64),
    key!("synth.dev", Kind::UInt, 200u64),
    key!("synth.test", Kind::UInt, 200u64),
    key!("train.lambda", Kind::Float, 0.25),
    key!("train.learning_rate", Kind::Float, 1e-6),
    key!("train.weight_decay", Kind::Float, 1e-4),
    key!("train.beta1", Kind::Float, 0.9),
    key!("train.beta2", Kind::Float, 0.999),
    key!("train.epsilon", Kind::Float, 1e-8),
    key!("train.batch_size", Kind::UInt, 24u64),
    key!("train.max_iterations", Kind::UInt, 100_000u64),
    key!("train.checkpoint_every", Kind::UInt, 1_000u64),
    key!("train.class_weights", Kind::OneOf(&["balanced", "uniform"]), "balanced"),
    key!("tta.views", Kind::UInt, 3u64),
    key!("tta.noise_snr_db", Kind::Float, 15.0),
    key!("tta.speed_factor", Kind::Float, 1.05),
    key!("tta.codec", Kind::OneOf(&["mulaw-8k"]), "mulaw-8k"),
    key!("audio.seconds", Kind::Float, 4.0),
];

fn normalize(key: &Key, value: Value) -> Result<Value> {
    let bad = |want: &str| Error::Config(format!("key '{}' expects {want}, got {value}", key.name));
    match key.kind {
        Kind::UInt => value.as_u64().map(Value::from).ok_or_else(|| bad("a non-negative integer")),
        Kind::Float => {
            value.as_f64().filter(|v| v.is_finite()).map(Value::from).ok_or_else(|| bad("a number"))
        }
        Kind::Str => value.as_str().map(Value::from).ok_or_else(|| bad("a string")),
        Kind::OneOf(options) => match value.as_str() {
            Some(s) if options.contains(&s) => Ok(Value::from(s)),
            _ => Err(bad(&format!("one of {options:?}"))),
        },
        Kind::UIntList => value
            .as_array()
            .and_then(|a| a.iter().map(Value::as_u64).collect::<Option<Vec<_>>>())
            .map(Value::from)
            .ok_or_else(|| bad("a list of non-negative integers")),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    values: BTreeMap<String, Value>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self { values: KEYS.iter().map(|k| (k.name.to_string(), (k.default)())).collect() }
    }
}

impl RunConfig {
    /// Defaults overlaid with the keys of a JSON config file.
    pub fn load(path: &Path) -> Result<Self> {
        let text = read_file(path)?;
        let doc: Value =
            serde_json::from_slice(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        let Value::Object(map) = doc else {
            return Err(Error::Config(format!("{}: top level must be a JSON object", path.display())));
        };
        let mut cfg = Self::default();
        for (k, v) in map {
            cfg.set(&k, v)?;
        }
        Ok(cfg)
    }

    pub fn set(&mut self, key: &str, value: Value) -> Result<()> {
        let spec = KEYS
            .iter()
            .find(|k| k.name == key)
            .ok_or_else(|| Error::Config(format!("unknown config key '{key}'")))?;
        self.values.insert(key.to_string(), normalize(spec, value)?);
        Ok(())
    }

    /// Applies a `key=value` override; the value is parsed as JSON when
    /// possible and taken as a string otherwise.
    pub fn set_assignment(&mut self, assignment: &str) -> Result<()> {
        let (key, raw) = assignment
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("override '{assignment}' is not key=value")))?;
        let value = serde_json::from_str(raw).unwrap_or_else(|_| Value::from(raw));
        self.set(key.trim(), value)
    }

    pub fn values(&self) -> &BTreeMap<String, Value> {
        &self.values
    }

    /// Sorted-key compact JSON of the resolved configuration.
    pub fn canonical_json(&self) -> String {
        serde_json::to_string(&self.values).expect("config values serialize")
    }

    pub fn fingerprint(&self) -> String {
        let digest = Sha256::digest(self.canonical_json().as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }

    fn value(&self, key: &str) -> &Value {
        &self.values[key]
    }

    pub fn u64(&self, key: &str) -> u64 {
        self.value(key).as_u64().expect("validated integer key")
    }

    pub fn usize(&self, key: &str) -> Result<usize> {
        usize::try_from(self.u64(key)).map_err(|_| Error::Config(format!("key '{key}' is too large")))
    }

    pub fn f64(&self, key: &str) -> f64 {
        self.value(key).as_f64().expect("validated float key")
    }

    pub fn str(&self, key: &str) -> &str {
        self.value(key).as_str().expect("validated string key")
    }

    pub fn seed(&self) -> u64 {
        self.u64("seed")
    }

    pub fn synth_spec(&self) -> Result<SynthSpec> {
        let artifact_layers = self.value("synth.artifact_layers").as_array().expect("validated list");
        let spec = SynthSpec {
            layers: self.usize("synth.layers")?,
            frames: self.usize("synth.frames")?,
            dim: self.usize("synth.dim")?,
            artifact_layers: artifact_layers.iter().map(|v| v.as_u64().unwrap_or(0) as usize).collect(),
            artifact_gain: self.f64("synth.artifact_gain"),
            class_separation: self.f64("synth.class_separation"),
            jitter_scale: self.f64("synth.jitter_scale"),
            seed: self.seed(),
            dataset_id: self.str("synth.dataset").to_string(),
        };
        spec.validate()?;
        Ok(spec)
    }

    /// Train / dev / test utterance counts for `gen`.
    pub fn splits(&self) -> [(&'static str, u64); 3] {
        [("train", self.u64("synth.train")), ("dev", self.u64("synth.dev")), ("test", self.u64("synth.test"))]
    }

    pub fn train_config(&self) -> Result<TrainConfig> {
        let cfg = TrainConfig {
            lambda: self.f64("train.lambda"),
            learning_rate: self.f64("train.learning_rate"),
            weight_decay: self.f64("train.weight_decay"),
            beta1: self.f64("train.beta1"),
            beta2: self.f64("train.beta2"),
            epsilon: self.f64("train.epsilon"),
            batch_size: self.usize("train.batch_size")?,
            max_iterations: self.u64("train.max_iterations"),
            seed: self.seed(),
            class_weights: match self.str("train.class_weights") {
                "uniform" => ClassWeightMode::Uniform,
                _ => ClassWeightMode::Balanced,
            },
            checkpoint_every: self.u64("train.checkpoint_every"),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn tta_config(&self) -> Result<TtaConfig> {
        let cfg = TtaConfig {
            views: self.usize("tta.views")?,
            noise_snr_db: self.f64("tta.noise_snr_db"),
            speed_factor: self.f64("tta.speed_factor"),
            master_seed: self.seed(),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn audio_seconds(&self) -> Result<f64> {
        let s = self.f64("audio.seconds");
        if s > 0.0 {
            Ok(s)
        } else {
            Err(Error::Config(format!("audio.seconds must be positive, got {s}")))
        }
    }

    /// The resolved configuration as strings, for embedding in reports.
    pub fn as_strings(&self) -> BTreeMap<String, String> {
        self.values
            .iter()
            .map(|(k, v)| {
                let s = match v {
                    Value::String(s) => s.clone(),
                    other => other.to_string(),
                };
                (k.clone(), s)
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn defaults_resolve_to_core_defaults() {
        let cfg = RunConfig::default();
        assert_eq!(cfg.synth_spec().unwrap(), SynthSpec::default());
        assert_eq!(cfg.train_config().unwrap(), TrainConfig::default());
        assert_eq!(cfg.tta_config().unwrap(), TtaConfig::default());
    }

    #[test]
    fn unknown_and_mistyped_keys_are_rejected() {
        let mut cfg = RunConfig::default();
        assert!(cfg.set("train.lamda", json!(0.1)).unwrap_err().to_string().contains("unknown"));
        assert!(cfg.set("train.batch_size", json!(-1)).is_err());
        assert!(cfg.set("train.class_weights", json!("sometimes")).is_err());
        assert!(cfg.set("synth.artifact_layers", json!([1, "x"])).is_err());
        assert!(cfg.set_assignment("seed").is_err());
    }

    #[test]
    fn fingerprint_is_stable_and_sensitive() {
        let a = RunConfig::default();
        let mut b = RunConfig::default();
        // 1 and 1.0 resolve to the same float.
        b.set("synth.class_separation", json!(1)).unwrap();
        assert_eq!(a.fingerprint(), b.fingerprint());
        assert_eq!(a.fingerprint().len(), 64);
        b.set_assignment("train.lambda=0").unwrap();
        assert_ne!(a.fingerprint(), b.fingerprint());
    }

    #[test]
    fn file_overlay_rejects_nesting() {
        let dir = tempfile::tempdir().unwrap();
        let good = dir.path().join("good.json");
        std::fs::write(&good, r#"{"seed": 7, "synth.dataset": "x"}"#).unwrap();
        let cfg = RunConfig::load(&good).unwrap();
        assert_eq!((cfg.seed(), cfg.str("synth.dataset")), (7, "x"));
        let nested = dir.path().join("nested.json");
        std::fs::write(&nested, r#"{"train": {"lambda": 0.1}}"#).unwrap();
        assert!(RunConfig::load(&nested).is_err());
    }
}
