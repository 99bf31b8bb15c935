use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Dense-layer composite order, stored alongside the weights.
pub const LAYER_ORDER: &str = "bn-relu-conv3x3-dropout";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub d_in: usize,
    pub d_embed: usize,
    pub mlp_hidden: usize,
    pub mlp_dropout: f64,
    pub growth_rate: usize,
    pub blocks: usize,
    pub layers_per_block: usize,
    pub compression: f64,
    pub backbone_dropout: f64,
    pub stem_channels: usize,
    pub proj_dim: usize,
    pub num_classes: usize,
    pub input_side: usize,
    pub bottleneck: bool,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig {
            d_in: 92,
            d_embed: 128,
            mlp_hidden: 1024,
            mlp_dropout: 0.5,
            growth_rate: 24,
            blocks: 3,
            layers_per_block: 16,
            compression: 0.5,
            backbone_dropout: 0.2,
            stem_channels: 48,
            proj_dim: 128,
            num_classes: 10,
            input_side: 64,
            bottleneck: false,
        }
    }
}

/// Channel and spatial bookkeeping of the backbone.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BackboneLayout {
    /// Input channels of each dense block.
    pub block_inputs: Vec<usize>,
    /// Output channels of each dense block.
    pub block_outputs: Vec<usize>,
    /// Output channels of each transition.
    pub transition_outputs: Vec<usize>,
    /// Spatial side at each dense block.
    pub block_sides: Vec<usize>,
    pub out_channels: usize,
    pub out_side: usize,
}

impl ModelConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("d_in", self.d_in),
            ("d_embed", self.d_embed),
            ("mlp_hidden", self.mlp_hidden),
            ("growth_rate", self.growth_rate),
            ("blocks", self.blocks),
            ("stem_channels", self.stem_channels),
            ("proj_dim", self.proj_dim),
            ("input_side", self.input_side),
        ];
        if let Some((name, _)) = positive.iter().find(|(_, v)| *v == 0) {
            return Err(Error::Config(format!("{name} must be positive")));
        }
        if self.num_classes < 2 {
            return Err(Error::Config("num_classes must be at least 2".into()));
        }
        if !(self.compression > 0.0 && self.compression <= 1.0) {
            return Err(Error::Config(format!(
                "compression {} outside (0, 1]",
                self.compression
            )));
        }
        for (name, p) in [
            ("mlp_dropout", self.mlp_dropout),
            ("backbone_dropout", self.backbone_dropout),
        ] {
            if !(0.0..1.0).contains(&p) {
                return Err(Error::Config(format!("{name} {p} outside [0, 1)")));
            }
        }
        let min_side = 1usize << (self.blocks - 1).min(62);
        if self.input_side < 8 || self.input_side < min_side {
            return Err(Error::Config(format!(
                "input side {} too small for {} blocks (needs at least {})",
                self.input_side,
                self.blocks,
                min_side.max(8)
            )));
        }
        self.layout().map(|_| ())
    }

    /// Channels after a transition: `floor(theta * c)`.
    pub fn compressed(&self, c: usize) -> Result<usize> {
        let out = (self.compression * c as f64).floor() as usize;
        if out == 0 {
            return Err(Error::Config(format!(
                "compression {} leaves no channels out of {c}",
                self.compression
            )));
        }
        Ok(out)
    }

    pub fn layout(&self) -> Result<BackboneLayout> {
        let mut c = self.stem_channels;
        let mut side = self.input_side;
        let mut l = BackboneLayout {
            block_inputs: Vec::new(),
            block_outputs: Vec::new(),
            transition_outputs: Vec::new(),
            block_sides: Vec::new(),
            out_channels: 0,
            out_side: 0,
        };
        for b in 0..self.blocks {
            l.block_inputs.push(c);
            l.block_sides.push(side);
            c += self.layers_per_block * self.growth_rate;
            l.block_outputs.push(c);
            if b + 1 < self.blocks {
                c = self.compressed(c)?;
                l.transition_outputs.push(c);
                side = side.div_ceil(2);
            }
        }
        l.out_channels = c;
        l.out_side = side;
        Ok(l)
    }

    /// Width of the fused vector fed to the classifier.
    pub fn fused_width(&self) -> usize {
        self.proj_dim + self.d_embed
    }

    /// Non-fatal configuration concerns.
    pub fn warnings(&self) -> Vec<String> {
        let mut out = Vec::new();
        if let Ok(l) = self.layout() {
            let flat = l.out_channels * l.out_side * l.out_side;
            if self.proj_dim >= flat {
                out.push(format!(
                    "proj_dim {} is not smaller than the backbone output size {flat}",
                    self.proj_dim
                ));
            }
        }
        out
    }
}
