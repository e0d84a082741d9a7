//! The `raptor` command line.
//!
//! Exit codes: 0 on success, 1 on a domain error, 2 on a usage or
//! configuration error.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use serde::Serialize;

use raptor_core::dsp::{crop_pad, make_views, ViewKind};
use raptor_core::metrics::{build_report, tta_aggregate, ScoreRecord};
use raptor_core::model::{build_topology, export_gate_maps, forward};
use raptor_core::synth::{synth_label, synth_utterance};
use raptor_core::train::{evaluate, Executor, StackSource, Trainer};

use crate::checkpoint::{load_checkpoint, save_checkpoint};
use crate::config::RunConfig;
use crate::error::{write_file, Error, Result};
use crate::exec::Pool;
use crate::features::{read_features, write_features};
use crate::gatemap::render_gate_map;
use crate::jsonl::{read_jsonl, write_jsonl};
use crate::manifest::{Manifest, ManifestEntry};
use crate::report::render_report;
use crate::scores::{read_scores, write_scores, TtaLine};
use crate::wav::{read_wav, write_wav};

#[derive(Debug, Parser)]
#[command(name = "raptor", version, about = "Gated layer-fusion spoof detection pipeline")]
struct Cli {
    /// JSON config file with flat dotted keys.
    #[arg(long, alias = "spec", global = true, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Override one config key; repeatable.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    /// Overrides the `seed` config key.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads (0 = one per core). Never changes outputs.
    #[arg(long, global = true, default_value_t = 0)]
    workers: usize,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a synthetic train/dev/test corpus of feature files.
    Gen {
        #[arg(long)]
        out: PathBuf,
    },
    /// Write the TTA views of WAV files as `<stem>.view<k>.wav`.
    Perturb {
        #[arg(required = true)]
        inputs: Vec<PathBuf>,
    },
    /// Train on paired clean/augmented views with dev-set model selection.
    Train {
        #[arg(long)]
        train: PathBuf,
        #[arg(long)]
        dev: PathBuf,
        /// Output directory for best.rckp, last.rckp and log.jsonl.
        #[arg(long)]
        out: PathBuf,
        /// Continue the run saved in this directory.
        #[arg(long)]
        resume: Option<PathBuf>,
        /// Resume even if the checkpoint fingerprint differs.
        #[arg(long)]
        force: bool,
    },
    /// Score every manifest entry with a checkpoint.
    Eval {
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Only score these view ids (comma separated).
        #[arg(long, value_delimiter = ',')]
        views: Vec<u8>,
    },
    /// Aggregate TTA view scores per utterance.
    Tta {
        #[arg(long)]
        scores: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Build the evaluation report from clean and TTA score files.
    Report {
        #[arg(long)]
        clean: PathBuf,
        #[arg(long)]
        tta: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        /// Allow score files with different fingerprints.
        #[arg(long)]
        force: bool,
    },
    /// Export per-frame gate weights of one feature file as CSV.
    Gatemap {
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long)]
        features: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

/// Parses `args` (including the program name) and runs the subcommand.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match execute(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::Config(_) => 2,
                _ => 1,
            }
        }
    }
}

fn resolve_config(cli: &Cli) -> Result<RunConfig> {
    let mut cfg = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    for o in &cli.overrides {
        cfg.set_assignment(o)?;
    }
    if let Some(seed) = cli.seed {
        cfg.set("seed", seed.into())?;
    }
    Ok(cfg)
}

fn execute(cli: Cli) -> Result<()> {
    let cfg = resolve_config(&cli)?;
    let pool = Pool::new(cli.workers)?;
    log::info!("config fingerprint {} ({} workers)", cfg.fingerprint(), pool.workers());
    match cli.command {
        Command::Gen { out } => gen(&cfg, &out, &pool),
        Command::Perturb { inputs } => perturb(&cfg, &inputs, &pool),
        Command::Train { train, dev, out, resume, force } => {
            train_cmd(&cfg, &train, &dev, &out, resume.as_deref(), force, &pool)
        }
        Command::Eval { checkpoint, manifest, out, views } => {
            eval(&cfg, &checkpoint, &manifest, &out, &views, &pool)
        }
        Command::Tta { scores, out } => tta(&scores, &out),
        Command::Report { clean, tta, out, force } => report(&cfg, &clean, tta.as_deref(), &out, force),
        Command::Gatemap { checkpoint, features, out } => gatemap(&checkpoint, &features, &out),
    }
}

fn gen(cfg: &RunConfig, out: &Path, pool: &Pool) -> Result<()> {
    let spec = cfg.synth_spec()?;
    let fp = cfg.fingerprint();
    let mut start = 0u64;
    for (split, count) in cfg.splits() {
        let first = start;
        let entries = pool.map(count as usize, |i| -> Result<Vec<ManifestEntry>> {
            let index = first + i as u64;
            let (clean, aug) = synth_utterance(&spec, index, synth_label(index))?;
            [clean, aug]
                .into_iter()
                .map(|stack| {
                    let rel = format!("features/{}.view{}.rsf", stack.utt_id, stack.view_id);
                    write_features(&stack, &out.join(&rel))?;
                    Ok(ManifestEntry {
                        path: rel,
                        utt: stack.utt_id,
                        dataset: stack.dataset_id,
                        label: stack.label.code(),
                        view: stack.view_id,
                        fingerprint: Some(fp.clone()),
                    })
                })
                .collect()
        });
        let entries: Vec<ManifestEntry> = entries.into_iter().collect::<Result<Vec<_>>>()?.concat();
        Manifest::new(out, entries)?.write(&out.join(format!("{split}.jsonl")))?;
        log::info!("{split}: {count} utterances");
        start += count;
    }
    write_config_record(cfg, &out.join("config.json"))
}

/// `{"fingerprint": …, "config": {…}}` next to generated artifacts.
fn write_config_record(cfg: &RunConfig, path: &Path) -> Result<()> {
    let doc = serde_json::json!({ "fingerprint": cfg.fingerprint(), "config": cfg.values() });
    let mut text = serde_json::to_string_pretty(&doc).expect("config serializes");
    text.push('\n');
    write_file(path, text.as_bytes())
}

#[derive(Serialize)]
struct ViewLine {
    path: String,
    utt: String,
    view: usize,
    kind: &'static str,
    fingerprint: String,
}

fn perturb(cfg: &RunConfig, inputs: &[PathBuf], pool: &Pool) -> Result<()> {
    let tta = cfg.tta_config()?;
    let seconds = cfg.audio_seconds()?;
    let fp = cfg.fingerprint();
    let results = pool.map(inputs.len(), |i| -> Result<()> {
        let input = &inputs[i];
        let stem = input
            .file_stem()
            .and_then(|s| s.to_str())
            .ok_or_else(|| Error::Domain(format!("{}: file name is not UTF-8", input.display())))?;
        let dir = input.parent().unwrap_or(Path::new(""));
        let w = crop_pad(&read_wav(input)?, seconds);
        let mut lines = Vec::new();
        for (k, view) in make_views(&w, &tta, stem)?.iter().enumerate() {
            let k = k + 1;
            let name = format!("{stem}.view{k}.wav");
            write_wav(view, &dir.join(&name))?;
            lines.push(ViewLine {
                path: name,
                utt: stem.to_string(),
                view: k,
                kind: match ViewKind::for_view(k) {
                    ViewKind::Codec => "codec",
                    ViewKind::Noise => "noise",
                    ViewKind::SpeedPitch => "speed_pitch",
                },
                fingerprint: fp.clone(),
            });
        }
        write_jsonl(&dir.join(format!("{stem}.views.jsonl")), &lines)
    });
    results.into_iter().collect::<Result<Vec<_>>>()?;
    log::info!("wrote {} views for {} files", tta.views, inputs.len());
    Ok(())
}

#[derive(Serialize)]
struct LogLine<'a> {
    iteration: u64,
    cls: f64,
    cons: f64,
    total: f64,
    dev_eer: f64,
    fingerprint: &'a str,
}

fn train_cmd(
    cfg: &RunConfig,
    train_path: &Path,
    dev_path: &Path,
    out: &Path,
    resume: Option<&Path>,
    force: bool,
    pool: &Pool,
) -> Result<()> {
    let tc = cfg.train_config()?;
    let fp = cfg.fingerprint();
    let train_manifest = Manifest::read(train_path)?;
    let dev_manifest = Manifest::read(dev_path)?;
    let train = train_manifest.pairs()?;
    let dev = dev_manifest.stacks(Some(&[0]));
    if raptor_core::train::PairSource::is_empty(&train) || dev.is_empty() {
        return Err(Error::Domain("training and dev manifests must both be non-empty".into()));
    }
    let first = train_manifest.load(0)?;
    let topology = build_topology(first.layers(), first.dim())?;
    let mut trainer = match resume {
        None => Trainer::new(tc, &topology, fp.clone())?,
        Some(dir) => {
            let last = load_checkpoint(&dir.join("last.rckp"))?;
            let best = load_checkpoint(&dir.join("best.rckp"))?;
            if last.fingerprint != fp && !force {
                return Err(Error::Domain(format!(
                    "checkpoint fingerprint {} differs from config fingerprint {fp}; pass --force to resume anyway",
                    last.fingerprint
                )));
            }
            if last.params.topology() != &topology {
                return Err(Error::Domain("checkpoint topology does not match the training features".into()));
            }
            Trainer::resume(tc, last, Some(best))?
        }
    };
    let outcome = trainer.run(&train, &dev, pool)?;
    save_checkpoint(&outcome.best, &out.join("best.rckp"))?;
    save_checkpoint(&outcome.last, &out.join("last.rckp"))?;
    let mut log: Vec<serde_json::Value> = match resume {
        Some(dir) if dir.join("log.jsonl").exists() => read_jsonl(&dir.join("log.jsonl"))?,
        _ => Vec::new(),
    };
    for e in &outcome.log {
        log.push(
            serde_json::to_value(LogLine {
                iteration: e.iteration,
                cls: e.cls,
                cons: e.cons,
                total: e.total,
                dev_eer: e.dev_eer,
                fingerprint: &fp,
            })
            .expect("log line serializes"),
        );
    }
    write_jsonl(&out.join("log.jsonl"), &log)?;
    log::info!(
        "best checkpoint at iteration {} (dev EER {:?})",
        outcome.best.iteration,
        outcome.best.dev_eer
    );
    Ok(())
}

fn eval(
    cfg: &RunConfig,
    checkpoint: &Path,
    manifest: &Path,
    out: &Path,
    views: &[u8],
    pool: &Pool,
) -> Result<()> {
    let ckpt = load_checkpoint(checkpoint)?;
    if ckpt.fingerprint != cfg.fingerprint() {
        log::warn!(
            "checkpoint was trained under config {}, current config is {}",
            ckpt.fingerprint,
            cfg.fingerprint()
        );
    }
    let manifest = Manifest::read(manifest)?;
    let filter = (!views.is_empty()).then_some(views);
    let stacks = manifest.stacks(filter);
    let records = evaluate(&ckpt.params, &stacks, pool)?;
    write_scores(out, &records, &ckpt.fingerprint)?;
    log::info!("scored {} entries", records.len());
    Ok(())
}

fn single_fingerprint(set: &std::collections::BTreeSet<Option<String>>) -> String {
    set.iter().map(|f| f.as_deref().unwrap_or("none")).collect::<Vec<_>>().join(",")
}

fn tta(scores: &Path, out: &Path) -> Result<()> {
    let file = read_scores(scores)?;
    let fp = single_fingerprint(&file.fingerprints);
    let mut order: Vec<(String, String)> = Vec::new();
    let mut groups: BTreeMap<(String, String), Vec<ScoreRecord>> = BTreeMap::new();
    for r in file.records.into_iter().filter(|r| r.view_id >= 1) {
        let key = (r.dataset_id.clone(), r.utt_id.clone());
        groups
            .entry(key.clone())
            .or_insert_with(|| {
                order.push(key);
                Vec::new()
            })
            .push(r);
    }
    let lines = order
        .iter()
        .map(|k| Ok(TtaLine::new(&tta_aggregate(&groups[k])?, &fp)))
        .collect::<Result<Vec<_>>>()?;
    write_jsonl(out, &lines)
}

fn report(cfg: &RunConfig, clean: &Path, tta: Option<&Path>, out: &Path, force: bool) -> Result<()> {
    let clean = read_scores(clean)?;
    let mut fingerprints = clean.fingerprints.clone();
    let tta_records = match tta {
        Some(path) => {
            let f = read_scores(path)?;
            fingerprints.extend(f.fingerprints);
            f.records
        }
        None => Vec::new(),
    };
    if fingerprints.len() > 1 && !force {
        return Err(Error::Domain(format!(
            "score files carry different config fingerprints ({}); pass --force to mix them",
            single_fingerprint(&fingerprints)
        )));
    }
    let mut config: BTreeMap<String, String> = cfg
        .as_strings()
        .into_iter()
        .filter(|(k, _)| k.starts_with("tta.") || k.starts_with("audio."))
        .collect();
    config.insert("fingerprint".into(), single_fingerprint(&fingerprints));
    let report = build_report(&clean.records, &tta_records, config)?;
    write_file(out, render_report(&report).as_bytes())
}

fn gatemap(checkpoint: &Path, features: &Path, out: &Path) -> Result<()> {
    let ckpt = load_checkpoint(checkpoint)?;
    let stack = read_features(features)?;
    let trace = forward(&stack, &ckpt.params, false)?;
    write_file(out, render_gate_map(&export_gate_maps(&trace)).as_bytes())?;
    let mut sidecar = out.as_os_str().to_owned();
    sidecar.push(".json");
    let doc = serde_json::json!({
        "fingerprint": ckpt.fingerprint,
        "utt": stack.utt_id,
        "dataset": stack.dataset_id,
        "view": stack.view_id,
        "posterior": trace.posterior,
    });
    write_file(Path::new(&sidecar), format!("{doc}\n").as_bytes())
}
