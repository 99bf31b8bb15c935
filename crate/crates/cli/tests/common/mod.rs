#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

pub fn endofuse(args: &[&dyn AsRef<std::ffi::OsStr>]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_endofuse"))
        .args(args.iter().map(|a| a.as_ref()))
        .output()
        .expect("spawn endofuse")
}

/// Runs the binary and panics with its stderr unless it exits 0.
pub fn ok(args: &[&dyn AsRef<std::ffi::OsStr>]) -> Output {
    let out = endofuse(args);
    assert!(
        out.status.success(),
        "endofuse {:?} failed:\n{}",
        args.iter()
            .map(|a| a.as_ref().to_string_lossy().into_owned())
            .collect::<Vec<_>>(),
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

pub fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

pub fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

pub fn synth(dir: &Path, classes: usize, per_class: usize, side: usize, seed: u64) -> PathBuf {
    ok(&[
        &"synth",
        &"--out",
        &dir,
        &"--classes",
        &classes.to_string(),
        &"--per-class",
        &per_class.to_string(),
        &"--side",
        &side.to_string(),
        &"--seed",
        &seed.to_string(),
    ]);
    dir.join("manifest.csv")
}

pub fn extract(manifest: &Path, out: &Path, side: usize) -> Output {
    endofuse(&[
        &"extract",
        &"--manifest",
        &manifest,
        &"--out",
        &out,
        &"--side",
        &side.to_string(),
    ])
}

/// A model small enough to train for a few epochs in about a second.
pub const TINY_CONFIG: &str = "\
input_side = 16
blocks = 2
layers_per_block = 1
growth_rate = 4
d_embed = 8
mlp_hidden = 16
proj_dim = 8
epochs = 3
batch = 8
lr = 0.003
";

pub fn train(manifest: &Path, features: &Path, config: &Path, out: &Path, seed: u64) -> Output {
    endofuse(&[
        &"train",
        &"--manifest",
        &manifest,
        &"--features",
        &features,
        &"--config",
        &config,
        &"--out",
        &out,
        &"--seed",
        &seed.to_string(),
    ])
}

pub fn eval(
    checkpoint: &Path,
    manifest: &Path,
    features: &Path,
    out: &Path,
    split: &str,
) -> Output {
    endofuse(&[
        &"eval",
        &"--checkpoint",
        &checkpoint,
        &"--manifest",
        &manifest,
        &"--features",
        &features,
        &"--out",
        &out,
        &"--split",
        &split,
    ])
}

pub fn plot(log: &Path, roc: &Path, out: &Path) -> Output {
    endofuse(&[&"plot", &"--log", &log, &"--roc", &roc, &"--out", &out])
}

pub fn read(path: &Path) -> Vec<u8> {
    std::fs::read(path).unwrap_or_else(|e| panic!("reading {}: {e}", path.display()))
}

pub fn data_rows(path: &Path) -> usize {
    String::from_utf8(read(path))
        .unwrap()
        .lines()
        .skip(1)
        .filter(|l| !l.is_empty())
        .count()
}
