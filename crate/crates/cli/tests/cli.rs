mod common;

use std::path::Path;

use common::*;
use tempfile::tempdir;

fn header(path: &Path) -> Vec<String> {
    let text = String::from_utf8(read(path)).unwrap();
    text.lines()
        .next()
        .unwrap()
        .split(',')
        .map(str::to_string)
        .collect()
}

fn write_config(dir: &Path, text: &str) -> std::path::PathBuf {
    let p = dir.join("run.cfg");
    std::fs::write(&p, text).unwrap();
    p
}

/// Synthetic set, features and a 3-epoch tiny training run.
struct Trained {
    _dir: tempfile::TempDir,
    root: std::path::PathBuf,
    manifest: std::path::PathBuf,
    features: std::path::PathBuf,
    run: std::path::PathBuf,
}

fn trained() -> Trained {
    let dir = tempdir().unwrap();
    let root = dir.path().to_path_buf();
    let manifest = synth(&root.join("data"), 3, 8, 32, 5);
    let features = root.join("features.csv");
    assert!(extract(&manifest, &features, 32).status.success());
    let cfg = write_config(&root, TINY_CONFIG);
    let run = root.join("run");
    let out = train(&manifest, &features, &cfg, &run, 1);
    assert!(out.status.success(), "{}", stderr(&out));
    Trained {
        _dir: dir,
        root,
        manifest,
        features,
        run,
    }
}

#[test]
fn extract_three_images_gives_three_rows_of_92_features() {
    let dir = tempdir().unwrap();
    let manifest = synth(&dir.path().join("data"), 3, 1, 32, 0);
    let out = dir.path().join("f.csv");
    let o = extract(&manifest, &out, 32);
    assert!(o.status.success(), "{}", stderr(&o));
    let h = header(&out);
    assert_eq!(&h[..2], ["image_id", "label"]);
    assert_eq!(h.len(), 94);
    assert_eq!(h.iter().filter(|c| c.starts_with("central_")).count(), 46);
    assert_eq!(
        h.iter().filter(|c| c.starts_with("peripheral_")).count(),
        46
    );
    assert_eq!(data_rows(&out), 3);

    let again = dir.path().join("g.csv");
    assert!(extract(&manifest, &again, 32).status.success());
    assert_eq!(read(&out), read(&again));
}

#[test]
fn extract_skips_a_corrupt_image_with_a_warning() {
    let dir = tempdir().unwrap();
    let data = dir.path().join("data");
    let manifest = synth(&data, 4, 25, 32, 1);
    std::fs::write(data.join("images/c2_0007.png"), b"not a png").unwrap();
    let out = dir.path().join("f.csv");
    let o = extract(&manifest, &out, 32);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(data_rows(&out), 99);
    let err = stderr(&o);
    assert!(err.contains("warning") && err.contains("c2_0007"), "{err}");
    let text = String::from_utf8(read(&out)).unwrap();
    assert!(!text.contains("c2_0007"));
}

#[test]
fn extract_fails_when_more_than_a_tenth_of_images_fail() {
    let dir = tempdir().unwrap();
    let data = dir.path().join("data");
    let manifest = synth(&data, 2, 5, 32, 2);
    for i in 0..2 {
        std::fs::write(data.join(format!("images/c0_{i:04}.png")), b"junk").unwrap();
    }
    let out = dir.path().join("f.csv");
    let o = extract(&manifest, &out, 32);
    assert!(!o.status.success());
    assert!(!out.exists());

    let missing = extract(&dir.path().join("nope.csv"), &out, 32);
    assert!(!missing.status.success());
    assert!(stderr(&missing).contains("nope.csv"));
}

#[test]
fn extract_respects_thread_cap() {
    let dir = tempdir().unwrap();
    let manifest = synth(&dir.path().join("data"), 2, 3, 32, 3);
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    assert!(extract(&manifest, &a, 32).status.success());
    let o = std::process::Command::new(env!("CARGO_BIN_EXE_endofuse"))
        .env("ENDOFUSE_THREADS", "1")
        .args(["extract", "--side", "32", "--manifest"])
        .arg(&manifest)
        .arg("--out")
        .arg(&b)
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(read(&a), read(&b));
    let bad = std::process::Command::new(env!("CARGO_BIN_EXE_endofuse"))
        .env("ENDOFUSE_THREADS", "zero")
        .args(["extract", "--manifest"])
        .arg(&manifest)
        .arg("--out")
        .arg(&b)
        .output()
        .unwrap();
    assert!(!bad.status.success());
}

#[test]
fn train_writes_declared_outputs_and_is_reproducible() {
    let t = trained();
    assert_eq!(data_rows(&t.run.join("train_log.csv")), 3);
    assert!(t.run.join("final.ckpt").exists() && t.run.join("best.ckpt").exists());

    let cfg = t.root.join("run.cfg");
    let again = t.root.join("again");
    let o = train(&t.manifest, &t.features, &cfg, &again, 1);
    assert!(o.status.success());
    assert_eq!(
        stdout(&o)
            .lines()
            .filter(|l| l.starts_with("epoch "))
            .count(),
        3
    );
    for f in ["train_log.csv", "final.ckpt", "best.ckpt"] {
        assert_eq!(read(&t.run.join(f)), read(&again.join(f)), "{f}");
    }

    let other = t.root.join("other");
    assert!(train(&t.manifest, &t.features, &cfg, &other, 2)
        .status
        .success());
    assert_ne!(
        read(&t.run.join("final.ckpt")),
        read(&other.join("final.ckpt"))
    );
}

#[test]
fn train_rejects_misaligned_features_before_training() {
    let dir = tempdir().unwrap();
    let manifest = synth(&dir.path().join("data"), 2, 4, 32, 4);
    let features = dir.path().join("f.csv");
    assert!(extract(&manifest, &features, 32).status.success());
    let text = String::from_utf8(read(&features)).unwrap();
    let short: Vec<&str> = text.lines().take(text.lines().count() - 1).collect();
    let cut = dir.path().join("cut.csv");
    std::fs::write(&cut, short.join("\n") + "\n").unwrap();
    let cfg = write_config(dir.path(), TINY_CONFIG);
    let run = dir.path().join("run");
    let o = train(&manifest, &cut, &cfg, &run, 0);
    assert!(!o.status.success());
    assert!(stderr(&o).contains("align"), "{}", stderr(&o));
    assert!(!stdout(&o).contains("epoch "));
    assert!(!run.join("train_log.csv").exists());
}

#[test]
fn train_rejects_unknown_config_keys() {
    let dir = tempdir().unwrap();
    let manifest = synth(&dir.path().join("data"), 2, 4, 32, 4);
    let features = dir.path().join("f.csv");
    assert!(extract(&manifest, &features, 32).status.success());
    let cfg = write_config(dir.path(), "growth_rat = 4\n");
    let o = train(&manifest, &features, &cfg, &dir.path().join("run"), 0);
    assert!(!o.status.success());
    assert!(stderr(&o).contains("growth_rat"));
}

fn json_number(doc: &serde_json::Value, key: &str) -> f64 {
    doc[key]
        .as_f64()
        .unwrap_or_else(|| panic!("{key} missing in {doc}"))
}

#[test]
fn eval_outputs_match_printed_row_and_repeat_identically() {
    let t = trained();
    let ckpt = t.run.join("best.ckpt");
    let out = t.root.join("eval");
    let o = eval(&ckpt, &t.manifest, &t.features, &out, "all");
    assert!(o.status.success(), "{}", stderr(&o));
    let doc: serde_json::Value = serde_json::from_slice(&read(&out.join("metrics.json"))).unwrap();
    assert_eq!(doc["n_samples"], 24);
    assert_eq!(doc["split"], "all");
    assert_eq!(doc["auc"].as_array().unwrap().len(), 3);
    assert_eq!(doc["support"].as_array().unwrap().len(), 3);
    assert!(doc["confusion"].is_object() || doc["confusion"].is_array());
    let row = stdout(&o).lines().next().unwrap().to_string();
    let fields: Vec<&str> = row.split_whitespace().collect();
    assert_eq!(fields.len(), 8, "{row}");
    for (label, key) in [
        ("ACC", "accuracy"),
        ("Sensitivity", "sensitivity"),
        ("F1", "f1"),
        ("Precision", "precision"),
    ] {
        let i = fields.iter().position(|f| *f == label).unwrap();
        let printed: f64 = fields[i + 1].parse().unwrap();
        assert_eq!(printed, json_number(&doc, key), "{label}");
    }
    let roc = String::from_utf8(read(&out.join("roc.csv"))).unwrap();
    assert!(roc.starts_with("class,fpr,tpr\n"));

    let again = t.root.join("eval2");
    let o2 = eval(&ckpt, &t.manifest, &t.features, &again, "all");
    assert_eq!(stdout(&o), stdout(&o2));
    for f in ["metrics.json", "roc.csv"] {
        assert_eq!(read(&out.join(f)), read(&again.join(f)), "{f}");
    }

    let val = t.root.join("eval_val");
    assert!(eval(&ckpt, &t.manifest, &t.features, &val, "val")
        .status
        .success());
    let doc: serde_json::Value = serde_json::from_slice(&read(&val.join("metrics.json"))).unwrap();
    assert_eq!(doc["split"], "val");
    assert!(doc["n_samples"].as_u64().unwrap() < 24);
}

#[test]
fn eval_names_a_missing_feature_column() {
    let t = trained();
    let text = String::from_utf8(read(&t.features)).unwrap();
    let dropped = "central_glcm_contrast";
    let col = text
        .lines()
        .next()
        .unwrap()
        .split(',')
        .position(|c| c == dropped)
        .unwrap();
    let cut: String = text
        .lines()
        .map(|l| {
            let mut cells: Vec<&str> = l.split(',').collect();
            cells.remove(col);
            cells.join(",") + "\n"
        })
        .collect();
    let features = t.root.join("cut.csv");
    std::fs::write(&features, cut).unwrap();
    let o = eval(
        &t.run.join("final.ckpt"),
        &t.manifest,
        &features,
        &t.root.join("e"),
        "all",
    );
    assert!(!o.status.success());
    assert!(stderr(&o).contains(dropped), "{}", stderr(&o));
}

#[test]
fn plot_emits_two_svgs_deterministically() {
    let t = trained();
    let ev = t.root.join("eval");
    assert!(eval(
        &t.run.join("final.ckpt"),
        &t.manifest,
        &t.features,
        &ev,
        "all"
    )
    .status
    .success());
    let log = t.run.join("train_log.csv");
    let roc = ev.join("roc.csv");
    let a = t.root.join("fig_a");
    let b = t.root.join("fig_b");
    assert!(plot(&log, &roc, &a).status.success());
    assert!(plot(&log, &roc, &b).status.success());
    for f in ["training_curves.svg", "roc_curves.svg"] {
        let svg = String::from_utf8(read(&a.join(f))).unwrap();
        assert!(svg.starts_with("<svg") || svg.starts_with("<?xml"), "{f}");
        assert!(svg.trim_end().ends_with("</svg>"));
        assert_eq!(read(&a.join(f)), read(&b.join(f)), "{f}");
    }
    let curves = String::from_utf8(read(&a.join("training_curves.svg"))).unwrap();
    for line in curves.lines().filter(|l| l.starts_with("<polyline")) {
        let pts = line
            .split("points=\"")
            .nth(1)
            .unwrap()
            .split('"')
            .next()
            .unwrap();
        assert_eq!(pts.split_whitespace().count(), 3);
    }
    let rocs = String::from_utf8(read(&a.join("roc_curves.svg"))).unwrap();
    assert!(rocs.contains("AUC"));
}

#[test]
fn plot_rejects_empty_roc_and_names_bad_rows() {
    let dir = tempdir().unwrap();
    let log = dir.path().join("log.csv");
    std::fs::write(
        &log,
        "epoch,train_loss,train_acc,val_loss,val_acc\n1,1.0,0.5,1.1,0.4\n2,0.9,0.6,oops,0.5\n",
    )
    .unwrap();
    let roc = dir.path().join("roc.csv");
    std::fs::write(&roc, "class,fpr,tpr\n0,0,0\n0,1,1\n").unwrap();
    let o = plot(&log, &roc, &dir.path().join("out"));
    assert!(!o.status.success());
    assert!(stderr(&o).contains("row 3"), "{}", stderr(&o));

    std::fs::write(
        &log,
        "epoch,train_loss,train_acc,val_loss,val_acc\n1,1.0,0.5,1.1,0.4\n",
    )
    .unwrap();
    let empty = dir.path().join("empty.csv");
    std::fs::write(&empty, "").unwrap();
    assert!(!plot(&log, &empty, &dir.path().join("out")).status.success());
    assert!(plot(&log, &roc, &dir.path().join("out")).status.success());
}

#[test]
fn synth_writes_balanced_manifest() {
    let dir = tempdir().unwrap();
    let manifest = synth(&dir.path().join("d"), 4, 3, 16, 9);
    assert_eq!(data_rows(&manifest), 12);
    assert_eq!(header(&manifest), ["path", "label"]);
}
