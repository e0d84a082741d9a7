#![allow(dead_code)]

pub mod eer;

use std::path::Path;

pub fn raptor<S: AsRef<str>>(args: &[S]) -> i32 {
    let argv = std::iter::once("raptor".to_string()).chain(args.iter().map(|a| a.as_ref().to_string()));
    raptor::cli::run(argv)
}

pub fn p(path: &Path) -> String {
    path.to_str().unwrap().to_string()
}

/// Relative paths and contents of every file under `root`, sorted.
pub fn tree(root: &Path) -> Vec<(String, Vec<u8>)> {
    let mut out = Vec::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(dir) = stack.pop() {
        for entry in std::fs::read_dir(&dir).unwrap() {
            let path = entry.unwrap().path();
            if path.is_dir() {
                stack.push(path);
            } else {
                let rel = path.strip_prefix(root).unwrap().to_str().unwrap().to_string();
                out.push((rel, std::fs::read(&path).unwrap()));
            }
        }
    }
    out.sort();
    out
}

/// A small experiment config: tiny corpus, fast training.
pub fn small_config(dir: &Path) -> std::path::PathBuf {
    let path = dir.join("config.json");
    std::fs::write(
        &path,
        r#"{
  "synth.layers": 6,
  "synth.frames": 20,
  "synth.dim": 8,
  "synth.artifact_layers": [2, 3],
  "synth.train": 40,
  "synth.dev": 20,
  "synth.test": 20,
  "train.learning_rate": 0.001,
  "train.batch_size": 8,
  "train.max_iterations": 30,
  "train.checkpoint_every": 10
}"#,
    )
    .unwrap();
    path
}
