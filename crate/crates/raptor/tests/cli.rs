mod common;

use std::collections::BTreeMap;

use common::eer::exhaustive_eer;
use common::{p, raptor, small_config, tree};
use raptor::checkpoint::{encode_checkpoint, load_checkpoint};
use raptor::wav::{read_wav, write_wav};
use raptor_core::dsp::Waveform;
use serde_json::Value;

#[test]
fn unknown_subcommands_and_flags_are_usage_errors() {
    assert_eq!(raptor(&["frobnicate"]), 2);
    assert_eq!(raptor(&["gen", "--bogus"]), 2);
    assert_eq!(raptor::<&str>(&[]), 2);
    assert_eq!(raptor(&["--help"]), 0);
}

#[test]
fn bad_config_is_a_usage_error_and_missing_files_are_domain_errors() {
    let dir = tempfile::tempdir().unwrap();
    let out = p(&dir.path().join("g"));
    assert_eq!(raptor(&["gen", "--out", &out, "--set", "train.lamda=1"]), 2);
    let missing = p(&dir.path().join("nope.jsonl"));
    assert_eq!(raptor(&["tta", "--scores", &missing, "--out", &out]), 1);
}

#[test]
fn gen_is_deterministic_and_seed_dependent() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = p(&small_config(dir.path()));
    let (a, b, c) = (dir.path().join("a"), dir.path().join("b"), dir.path().join("c"));
    assert_eq!(raptor(&["gen", "--spec", &cfg, "--out", &p(&a), "--seed", "7", "--workers", "1"]), 0);
    assert_eq!(raptor(&["gen", "--spec", &cfg, "--out", &p(&b), "--seed", "7", "--workers", "3"]), 0);
    assert_eq!(raptor(&["gen", "--spec", &cfg, "--out", &p(&c), "--seed", "8"]), 0);
    let (ta, tb, tc) = (tree(&a), tree(&b), tree(&c));
    assert_eq!(ta, tb);
    assert_ne!(ta, tc);
    // 80 utterances, two views each, plus three manifests and the config record.
    assert_eq!(ta.len(), 80 * 2 + 4);
    let manifest = String::from_utf8(std::fs::read(a.join("train.jsonl")).unwrap()).unwrap();
    let first: Value = serde_json::from_str(manifest.lines().next().unwrap()).unwrap();
    assert_eq!(first["view"], 0);
    assert_eq!(first["path"], "features/synth-000000.view0.rsf");
    let record: Value = serde_json::from_slice(&std::fs::read(a.join("config.json")).unwrap()).unwrap();
    assert_eq!(record["fingerprint"], first["fingerprint"]);
    assert_eq!(record["config"]["seed"], 7);
}

fn score_line(utt: &str, ds: &str, label: u8, view: u8, score: f64, fp: &str) -> String {
    format!(
        "{{\"utt\":\"{utt}\",\"dataset\":\"{ds}\",\"label\":{label},\"view\":{view},\"score\":{score},\"fingerprint\":\"{fp}\"}}\n"
    )
}

#[test]
fn report_matches_oracle_recomputation() {
    use rand::{Rng, SeedableRng};
    let dir = tempfile::tempdir().unwrap();
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
    let (mut clean, mut tta) = (String::new(), String::new());
    let mut by_ds: BTreeMap<String, Vec<(f64, bool)>> = BTreeMap::new();
    let mut tta_by_ds: BTreeMap<String, Vec<(f64, bool)>> = BTreeMap::new();
    let mut pooled = Vec::new();
    for ds in ["alpha", "beta", "gamma"] {
        for i in 0..40 {
            let spoof = i % 2 == 1;
            let s: f64 = rng.gen_range(0.0..0.7) + if spoof { 0.3 } else { 0.0 };
            clean.push_str(&score_line(&format!("{ds}{i}"), ds, spoof as u8, 0, s, "fp"));
            by_ds.entry(ds.into()).or_default().push((s, spoof));
            pooled.push((s, spoof));
            if i < 30 {
                let views: Vec<f64> =
                    (0..3).map(|_| (s + rng.gen_range(-0.2..0.2f64)).clamp(0.0, 1.0)).collect();
                for (k, v) in views.iter().enumerate() {
                    tta.push_str(&score_line(&format!("{ds}{i}"), ds, spoof as u8, k as u8 + 1, *v, "fp"));
                }
                let mean = views.iter().sum::<f64>() / 3.0;
                tta_by_ds.entry(ds.into()).or_default().push((mean, spoof));
            }
        }
    }
    let (clean_path, tta_path, out) =
        (dir.path().join("clean.jsonl"), dir.path().join("tta.jsonl"), dir.path().join("r.json"));
    std::fs::write(&clean_path, clean).unwrap();
    std::fs::write(&tta_path, tta).unwrap();
    assert_eq!(raptor(&["report", "--clean", &p(&clean_path), "--tta", &p(&tta_path), "--out", &p(&out)]), 0);
    let doc: Value = serde_json::from_slice(&std::fs::read(&out).unwrap()).unwrap();
    let close = |v: &Value, want: f64| (v.as_f64().unwrap() - want).abs() <= 5e-7;
    let mut sum = 0.0;
    for (ds, set) in &by_ds {
        let e = exhaustive_eer(set);
        sum += e;
        assert!(close(&doc["per_dataset_eer"][ds], e), "{ds}");
        // Clean EER restricted to the utterances with TTA views.
        let covered: Vec<(f64, bool)> = set[..30].to_vec();
        let clean_e = exhaustive_eer(&covered);
        let tta_e = exhaustive_eer(&tta_by_ds[ds]);
        assert!(close(&doc["clean_eer"][ds], clean_e));
        assert!(close(&doc["tta_eer"][ds], tta_e));
        assert!(close(&doc["delta_eer"][ds], 100.0 * (tta_e - clean_e)));
    }
    assert!(close(&doc["avg_eer"], sum / 3.0));
    assert!(close(&doc["pooled_eer"], exhaustive_eer(&pooled)));
    assert_eq!(doc["config"]["fingerprint"], "fp");
    assert_eq!(doc["config"]["tta.noise_snr_db"], "15.0");

    // Mixed fingerprints need --force.
    let other = dir.path().join("other.jsonl");
    let mixed =
        score_line("alpha0", "alpha", 0, 1, 0.5, "zz") + &score_line("alpha1", "alpha", 1, 1, 0.6, "zz");
    std::fs::write(&other, mixed).unwrap();
    assert_eq!(raptor(&["report", "--clean", &p(&clean_path), "--tta", &p(&other), "--out", &p(&out)]), 1);
    assert_eq!(
        raptor(&["report", "--clean", &p(&clean_path), "--tta", &p(&other), "--out", &p(&out), "--force"]),
        0
    );
}

#[test]
fn train_eval_tta_gatemap_and_resume() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let cfg = p(&small_config(d));
    let data = d.join("data");
    assert_eq!(raptor(&["gen", "--config", &cfg, "--out", &p(&data)]), 0);
    let (train, dev, test) =
        (p(&data.join("train.jsonl")), p(&data.join("dev.jsonl")), p(&data.join("test.jsonl")));

    let full = d.join("full");
    assert_eq!(raptor(&["train", "--config", &cfg, "--train", &train, "--dev", &dev, "--out", &p(&full)]), 0);
    let log = std::fs::read_to_string(full.join("log.jsonl")).unwrap();
    assert_eq!(log.lines().count(), 3);

    // Interrupted at 10 iterations, then resumed to 30.
    let part = d.join("part");
    let short = ["--set", "train.max_iterations=10"];
    assert_eq!(
        raptor(&[
            "train",
            "--config",
            &cfg,
            "--train",
            &train,
            "--dev",
            &dev,
            "--out",
            &p(&part),
            short[0],
            short[1]
        ]),
        0
    );
    assert_eq!(
        raptor(&[
            "train",
            "--config",
            &cfg,
            "--train",
            &train,
            "--dev",
            &dev,
            "--out",
            &p(&part),
            "--resume",
            &p(&part)
        ]),
        1
    );
    assert_eq!(
        raptor(&[
            "train",
            "--config",
            &cfg,
            "--train",
            &train,
            "--dev",
            &dev,
            "--out",
            &p(&part),
            "--resume",
            &p(&part),
            "--force"
        ]),
        0
    );
    for name in ["last.rckp", "best.rckp"] {
        let a = load_checkpoint(&full.join(name)).unwrap();
        let mut b = load_checkpoint(&part.join(name)).unwrap();
        assert_eq!(a.params, b.params, "{name}");
        assert_eq!(a.adam, b.adam);
        b.fingerprint = a.fingerprint.clone();
        if name == "last.rckp" {
            assert_eq!(encode_checkpoint(&a), encode_checkpoint(&b));
        }
    }

    let best = p(&full.join("best.rckp"));
    let scores = d.join("scores.jsonl");
    assert_eq!(
        raptor(&[
            "eval",
            "--config",
            &cfg,
            "--checkpoint",
            &best,
            "--manifest",
            &test,
            "--out",
            &p(&scores),
            "--workers",
            "2"
        ]),
        0
    );
    let again = d.join("again.jsonl");
    assert_eq!(
        raptor(&[
            "eval",
            "--config",
            &cfg,
            "--checkpoint",
            &best,
            "--manifest",
            &test,
            "--out",
            &p(&again),
            "--workers",
            "1"
        ]),
        0
    );
    assert_eq!(std::fs::read(&scores).unwrap(), std::fs::read(&again).unwrap());
    assert_eq!(std::fs::read_to_string(&scores).unwrap().lines().count(), 40);

    let agg = d.join("agg.jsonl");
    assert_eq!(raptor(&["tta", "--scores", &p(&scores), "--out", &p(&agg)]), 0);
    let lines: Vec<Value> =
        std::fs::read_to_string(&agg).unwrap().lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    assert_eq!(lines.len(), 20);
    assert_eq!(lines[0]["views"].as_array().unwrap().len(), 1);

    let map = d.join("map.csv");
    let feat = p(&data.join("features/synth-000060.view0.rsf"));
    assert_eq!(raptor(&["gatemap", "--checkpoint", &best, "--features", &feat, "--out", &p(&map)]), 0);
    let csv = std::fs::read_to_string(&map).unwrap();
    let mut rows = csv.lines();
    assert_eq!(rows.next(), Some("level,gate,frame,alpha1"));
    // L=6 has 5 gates, 20 frames each.
    assert_eq!(rows.count(), 100);
    assert!(d.join("map.csv.json").exists());

    // Dimension mismatch names the utterance.
    let wide = d.join("wide");
    assert_eq!(
        raptor(&[
            "gen",
            "--config",
            &cfg,
            "--set",
            "synth.dim=4",
            "--set",
            "synth.train=1",
            "--out",
            &p(&wide)
        ]),
        0
    );
    assert_eq!(
        raptor(&[
            "eval",
            "--checkpoint",
            &best,
            "--manifest",
            &p(&wide.join("train.jsonl")),
            "--out",
            &p(&d.join("x.jsonl"))
        ]),
        1
    );
}

#[test]
fn perturb_writes_views_beside_the_source() {
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("clip.wav");
    let samples = (0..12_000).map(|i| 0.5 * (i as f64 * 0.05).sin()).collect();
    write_wav(&Waveform::new(16_000, samples).unwrap(), &src).unwrap();
    assert_eq!(raptor(&["perturb", &p(&src), "--seed", "3"]), 0);
    for k in 1..=3 {
        let view = read_wav(&dir.path().join(format!("clip.view{k}.wav"))).unwrap();
        assert_eq!(view.len(), 64_000);
        assert!(view.samples().iter().all(|s| s.abs() <= 1.0));
    }
    let sidecar = std::fs::read_to_string(dir.path().join("clip.views.jsonl")).unwrap();
    assert!(sidecar.contains("\"kind\":\"noise\""));
    assert_eq!(raptor(&["perturb", &p(&src), "--set", "tta.views=1"]), 0);
    let stereo = dir.path().join("stereo.wav");
    let mut bytes = std::fs::read(&src).unwrap();
    bytes[22] = 2;
    std::fs::write(&stereo, bytes).unwrap();
    assert_eq!(raptor(&["perturb", &p(&stereo)]), 1);
}
