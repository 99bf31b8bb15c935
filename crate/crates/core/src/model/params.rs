use std::collections::HashMap;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use super::config::ModelConfig;
use crate::error::{Error, Result};
use crate::tensor::{BnRunning, Tensor};

#[derive(Clone, Debug, PartialEq)]
pub struct ParamEntry {
    pub name: String,
    pub value: Tensor,
    /// False for batch-norm running statistics.
    pub trainable: bool,
}

/// Named tensors in a fixed registration order, plus the config they were
/// built for.
#[derive(Clone, Debug, PartialEq)]
pub struct Parameters {
    config: ModelConfig,
    entries: Vec<ParamEntry>,
    index: HashMap<String, usize>,
}

struct Builder<'a> {
    entries: Vec<ParamEntry>,
    rng: &'a mut ChaCha8Rng,
}

impl Builder<'_> {
    fn push(&mut self, name: String, value: Tensor, trainable: bool) {
        self.entries.push(ParamEntry {
            name,
            value,
            trainable,
        });
    }

    fn normal(&mut self, name: String, shape: &[usize], std: f64) {
        let dist = Normal::new(0.0, std).expect("positive std");
        let value = Tensor::from_fn(shape, |_| dist.sample(self.rng));
        self.push(name, value, true);
    }

    /// He-normal weights for layers followed by ReLU.
    fn he(&mut self, name: String, shape: &[usize], fan_in: usize) {
        self.normal(name, shape, (2.0 / fan_in as f64).sqrt());
    }

    fn zeros(&mut self, name: String, shape: &[usize]) {
        self.push(name, Tensor::zeros(shape), true);
    }

    fn bn(&mut self, prefix: &str, c: usize) {
        self.push(format!("{prefix}.gamma"), Tensor::full(&[c], 1.0), true);
        self.push(format!("{prefix}.beta"), Tensor::zeros(&[c]), true);
        self.push(format!("{prefix}.running_mean"), Tensor::zeros(&[c]), false);
        self.push(
            format!("{prefix}.running_var"),
            Tensor::full(&[c], 1.0),
            false,
        );
    }

    fn conv3(&mut self, prefix: &str, co: usize, ci: usize) {
        self.he(format!("{prefix}.w"), &[co, ci, 3, 3], ci * 9);
        self.zeros(format!("{prefix}.b"), &[co]);
    }

    fn linear(&mut self, prefix: &str, dout: usize, din: usize, relu_follows: bool) {
        let std = if relu_follows {
            (2.0 / din as f64).sqrt()
        } else {
            (1.0 / din as f64).sqrt()
        };
        self.normal(format!("{prefix}.w"), &[dout, din], std);
        self.zeros(format!("{prefix}.b"), &[dout]);
    }
}

pub(crate) fn layer_prefix(block: usize, layer: usize) -> String {
    format!("block{block}.layer{layer}")
}

impl Parameters {
    /// Freshly initialized weights: He-normal for layers feeding ReLU,
    /// LeCun-normal otherwise, zero biases, unit BN scale.
    pub fn init(config: &ModelConfig, seed: u64) -> Result<Self> {
        config.validate()?;
        let layout = config.layout()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut b = Builder {
            entries: Vec::new(),
            rng: &mut rng,
        };
        let k = config.growth_rate;

        b.linear("mlp.fc1", config.mlp_hidden, config.d_in, true);
        b.linear("mlp.fc2", config.d_embed, config.mlp_hidden, false);

        b.conv3("stem.conv", config.stem_channels, 3);
        for blk in 0..config.blocks {
            for l in 0..config.layers_per_block {
                let p = layer_prefix(blk, l);
                let c = layout.block_inputs[blk] + l * k;
                if config.bottleneck {
                    let mid = 4 * k;
                    b.bn(&format!("{p}.bn1"), c);
                    b.he(format!("{p}.conv1.w"), &[mid, c], c);
                    b.zeros(format!("{p}.conv1.b"), &[mid]);
                    b.bn(&format!("{p}.bn2"), mid);
                    b.conv3(&format!("{p}.conv2"), k, mid);
                } else {
                    b.bn(&format!("{p}.bn"), c);
                    b.conv3(&format!("{p}.conv"), k, c);
                }
            }
            if blk + 1 < config.blocks {
                let c = layout.block_outputs[blk];
                let co = layout.transition_outputs[blk];
                b.bn(&format!("trans{blk}.bn"), c);
                b.he(format!("trans{blk}.conv.w"), &[co, c], c);
                b.zeros(format!("trans{blk}.conv.b"), &[co]);
            }
        }
        b.bn("final.bn", layout.out_channels);

        b.linear("proj.fc", config.proj_dim, layout.out_channels, true);
        b.bn("proj.bn", config.proj_dim);

        b.linear("head.fc", config.num_classes, config.fused_width(), false);

        let entries = b.entries;
        Self::from_entries(config.clone(), entries)
    }

    /// Rebuilds a collection, checking names and shapes against a fresh
    /// initialization of `config`.
    pub fn from_entries(config: ModelConfig, entries: Vec<ParamEntry>) -> Result<Self> {
        let mut index = HashMap::with_capacity(entries.len());
        for (i, e) in entries.iter().enumerate() {
            if index.insert(e.name.clone(), i).is_some() {
                return Err(Error::Schema(format!("duplicate parameter {}", e.name)));
            }
        }
        Ok(Parameters {
            config,
            entries,
            index,
        })
    }

    /// Checks that `self` has exactly the names and shapes `config` implies.
    pub fn check_against_config(&self) -> Result<()> {
        let reference = Parameters::init(&self.config, 0)?;
        if reference.entries.len() != self.entries.len() {
            return Err(Error::Schema(format!(
                "expected {} parameter tensors, found {}",
                reference.entries.len(),
                self.entries.len()
            )));
        }
        for (r, e) in reference.entries.iter().zip(&self.entries) {
            if r.name != e.name || r.value.shape() != e.value.shape() || r.trainable != e.trainable
            {
                return Err(Error::Schema(format!(
                    "parameter {} {:?} does not match expected {} {:?}",
                    e.name,
                    e.value.shape(),
                    r.name,
                    r.value.shape()
                )));
            }
        }
        Ok(())
    }

    pub fn config(&self) -> &ModelConfig {
        &self.config
    }

    pub fn entries(&self) -> &[ParamEntry] {
        &self.entries
    }

    pub fn entries_mut(&mut self) -> &mut [ParamEntry] {
        &mut self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn position(&self, name: &str) -> Option<usize> {
        self.index.get(name).copied()
    }

    pub fn get(&self, name: &str) -> Result<&Tensor> {
        self.position(name)
            .map(|i| &self.entries[i].value)
            .ok_or_else(|| Error::Schema(format!("no parameter named {name}")))
    }

    pub fn get_mut(&mut self, name: &str) -> Result<&mut Tensor> {
        match self.position(name) {
            Some(i) => Ok(&mut self.entries[i].value),
            None => Err(Error::Schema(format!("no parameter named {name}"))),
        }
    }

    /// Total scalar count of trainable tensors.
    pub fn num_trainable(&self) -> usize {
        self.entries
            .iter()
            .filter(|e| e.trainable)
            .map(|e| e.value.numel())
            .sum()
    }

    pub fn running(&self, bn: &str) -> Result<BnRunning> {
        Ok(BnRunning {
            mean: self.get(&format!("{bn}.running_mean"))?.data().to_vec(),
            var: self.get(&format!("{bn}.running_var"))?.data().to_vec(),
        })
    }

    pub fn set_running(&mut self, bn: &str, r: &BnRunning) -> Result<()> {
        self.get_mut(&format!("{bn}.running_mean"))?
            .data_mut()
            .copy_from_slice(&r.mean);
        self.get_mut(&format!("{bn}.running_var"))?
            .data_mut()
            .copy_from_slice(&r.var);
        Ok(())
    }

    /// Rounds every value to the nearest `f32`, the checkpoint precision.
    pub fn round_to_f32(&mut self) {
        for e in &mut self.entries {
            for v in e.value.data_mut() {
                *v = *v as f32 as f64;
            }
        }
    }
}
