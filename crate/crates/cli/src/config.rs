use std::collections::HashSet;
use std::path::Path;

use anyhow::{bail, Context, Result};
use endofuse_core::model::ModelConfig;
use endofuse_core::training::TrainConfig;

/// Model and training settings from a flat `key = value` file.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct RunConfig {
    pub model: ModelConfig,
    pub train: TrainConfig,
    /// Whether `num_classes` was set explicitly.
    pub num_classes_set: bool,
}

pub fn load(path: &Path) -> Result<RunConfig> {
    let text =
        std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    parse(&text).with_context(|| format!("in {}", path.display()))
}

pub fn parse(text: &str) -> Result<RunConfig> {
    let mut cfg = RunConfig::default();
    let mut seen = HashSet::new();
    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            bail!("line {line_no}: expected `key = value`, found {raw:?}");
        };
        let (key, value) = (key.trim(), value.trim());
        if !seen.insert(key.to_string()) {
            bail!("line {line_no}: {key} set twice");
        }
        set(&mut cfg, key, value).with_context(|| format!("line {line_no}"))?;
    }
    if seen.contains("growth_rate") && !seen.contains("stem_channels") {
        cfg.model.stem_channels = 2 * cfg.model.growth_rate;
    }
    cfg.num_classes_set = seen.contains("num_classes");
    Ok(cfg)
}

fn set(cfg: &mut RunConfig, key: &str, value: &str) -> Result<()> {
    fn num<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
        value
            .parse()
            .map_err(|_| anyhow::anyhow!("{key}: cannot parse {value:?}"))
    }
    let m = &mut cfg.model;
    let t = &mut cfg.train;
    match key {
        "d_embed" => m.d_embed = num(key, value)?,
        "mlp_hidden" => m.mlp_hidden = num(key, value)?,
        "mlp_dropout" => m.mlp_dropout = num(key, value)?,
        "growth_rate" => m.growth_rate = num(key, value)?,
        "blocks" => m.blocks = num(key, value)?,
        "layers_per_block" => m.layers_per_block = num(key, value)?,
        "compression" => m.compression = num(key, value)?,
        "backbone_dropout" => m.backbone_dropout = num(key, value)?,
        "stem_channels" => m.stem_channels = num(key, value)?,
        "proj_dim" => m.proj_dim = num(key, value)?,
        "num_classes" => m.num_classes = num(key, value)?,
        "input_side" => m.input_side = num(key, value)?,
        "bottleneck" => m.bottleneck = num(key, value)?,
        "lr" => t.lr = num(key, value)?,
        "weight_decay" => t.weight_decay = num(key, value)?,
        "beta1" => t.beta1 = num(key, value)?,
        "beta2" => t.beta2 = num(key, value)?,
        "eps" => t.eps = num(key, value)?,
        "batch" => t.batch = num(key, value)?,
        "epochs" => t.epochs = num(key, value)?,
        "seed" => t.seed = num(key, value)?,
        "val_fraction" => t.val_fraction = num(key, value)?,
        "d_in" => bail!("d_in is derived from the feature table and cannot be set"),
        other => bail!("unknown key {other:?}"),
    }
    Ok(())
}
