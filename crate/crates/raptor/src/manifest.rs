//! Feature manifests and the file-backed training and evaluation sources.
//!
//! A manifest is JSON Lines with one object per utterance view:
//! `{"path", "utt", "dataset", "label", "view"}` plus an optional
//! `fingerprint`. Relative paths resolve against the manifest's directory.

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use raptor_core::model::{Label, LayerStack};
use raptor_core::train::{PairSource, StackSource};

use crate::error::{Error, Result};
use crate::features::read_features;
use crate::jsonl::{read_jsonl, write_jsonl};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ManifestEntry {
    pub path: String,
    pub utt: String,
    pub dataset: String,
    pub label: u8,
    pub view: u8,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fingerprint: Option<String>,
}

#[derive(Debug, Clone)]
pub struct Manifest {
    base: PathBuf,
    entries: Vec<ManifestEntry>,
}

fn core_err(e: Error) -> raptor_core::Error {
    match e {
        Error::Core(c) => c,
        other => raptor_core::Error::InvalidArgument(other.to_string()),
    }
}

impl Manifest {
    pub fn new(base: impl Into<PathBuf>, entries: Vec<ManifestEntry>) -> Result<Self> {
        for e in &entries {
            if e.label > 1 {
                return Err(Error::Domain(format!(
                    "manifest entry {}: label must be 0 or 1, got {}",
                    e.utt, e.label
                )));
            }
        }
        Ok(Self { base: base.into(), entries })
    }

    pub fn read(path: &Path) -> Result<Self> {
        let entries = read_jsonl(path)?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Self::new(base, entries).map_err(|e| Error::Domain(format!("{}: {e}", path.display())))
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        write_jsonl(path, &self.entries)
    }

    pub fn entries(&self) -> &[ManifestEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn resolve(&self, entry: &ManifestEntry) -> PathBuf {
        self.base.join(&entry.path)
    }

    /// Distinct fingerprints carried by the entries.
    pub fn fingerprints(&self) -> BTreeSet<String> {
        self.entries.iter().filter_map(|e| e.fingerprint.clone()).collect()
    }

    /// Reads entry `index` and checks the file header agrees with it.
    pub fn load(&self, index: usize) -> Result<LayerStack> {
        let entry = &self.entries[index];
        let path = self.resolve(entry);
        let stack = read_features(&path)?;
        if stack.utt_id != entry.utt
            || stack.dataset_id != entry.dataset
            || stack.label.code() != entry.label
            || stack.view_id != entry.view
        {
            return Err(Error::Domain(format!(
                "{}: header ({}, {}, label {}, view {}) disagrees with manifest entry ({}, {}, label {}, view {})",
                path.display(),
                stack.utt_id,
                stack.dataset_id,
                stack.label.code(),
                stack.view_id,
                entry.utt,
                entry.dataset,
                entry.label,
                entry.view
            )));
        }
        Ok(stack)
    }

    /// Entries whose view is in `views` (all entries when `None`), in
    /// manifest order.
    pub fn stacks(&self, views: Option<&[u8]>) -> Stacks<'_> {
        let indices = (0..self.entries.len())
            .filter(|&i| views.is_none_or(|v| v.contains(&self.entries[i].view)))
            .collect();
        Stacks { manifest: self, indices }
    }

    /// Clean (view 0) and augmented (view 1) entries of every utterance,
    /// ordered by the utterance's first appearance.
    pub fn pairs(&self) -> Result<Pairs<'_>> {
        let mut order = Vec::new();
        let mut slots: BTreeMap<&str, [Option<usize>; 2]> = BTreeMap::new();
        for (i, e) in self.entries.iter().enumerate() {
            if e.view > 1 {
                continue;
            }
            let slot = slots.entry(&e.utt).or_insert_with(|| {
                order.push(e.utt.as_str());
                [None, None]
            });
            if slot[e.view as usize].replace(i).is_some() {
                return Err(Error::Domain(format!("utterance {} lists view {} twice", e.utt, e.view)));
            }
        }
        let pairs = order
            .into_iter()
            .map(|utt| match slots[utt] {
                [Some(c), Some(a)] => Ok((c, a)),
                [None, _] => Err(Error::Domain(format!("utterance {utt} has no clean view (view 0)"))),
                [_, None] => Err(Error::Domain(format!("utterance {utt} has no augmented view (view 1)"))),
            })
            .collect::<Result<_>>()?;
        Ok(Pairs { manifest: self, pairs })
    }
}

pub struct Stacks<'a> {
    manifest: &'a Manifest,
    indices: Vec<usize>,
}

impl Stacks<'_> {
    pub fn entry(&self, i: usize) -> &ManifestEntry {
        &self.manifest.entries[self.indices[i]]
    }
}

impl StackSource for Stacks<'_> {
    fn len(&self) -> usize {
        self.indices.len()
    }

    fn stack(&self, index: usize) -> raptor_core::Result<LayerStack> {
        self.manifest.load(self.indices[index]).map_err(core_err)
    }
}

pub struct Pairs<'a> {
    manifest: &'a Manifest,
    pairs: Vec<(usize, usize)>,
}

impl PairSource for Pairs<'_> {
    fn len(&self) -> usize {
        self.pairs.len()
    }

    fn label(&self, index: usize) -> Label {
        Label::from_code(self.manifest.entries[self.pairs[index].0].label).unwrap_or(Label::Unlabeled)
    }

    fn pair(&self, index: usize) -> raptor_core::Result<(LayerStack, LayerStack)> {
        let (c, a) = self.pairs[index];
        let clean = self.manifest.load(c).map_err(core_err)?;
        let aug = self.manifest.load(a).map_err(core_err)?;
        if clean.layers() != aug.layers() || clean.frames() != aug.frames() || clean.dim() != aug.dim() {
            return Err(raptor_core::Error::InvalidArgument(format!(
                "utterance {}: clean and augmented views have different dims",
                clean.utt_id
            )));
        }
        Ok((clean, aug))
    }
}
