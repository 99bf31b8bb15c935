use rand::RngCore;

use super::config::ModelConfig;
use super::params::{layer_prefix, Parameters};
use crate::error::{Error, Result};
use crate::tensor::{BnRunning, Mode, Tape, Tensor, Var};

/// One forward pass over shared parameters.
///
/// Parameters are placed on the tape the first time a layer asks for them.
/// Batch-norm running statistics are not touched; train-mode updates are
/// collected and returned by [`Forward::finish`] for the caller to apply.
pub struct Forward<'a> {
    pub tape: &'a mut Tape,
    params: &'a Parameters,
    mode: Mode,
    rng: &'a mut dyn RngCore,
    param_grads: bool,
    bound: Vec<Option<Var>>,
    bn_updates: Vec<(String, BnRunning)>,
}

/// What a forward pass leaves behind besides its output.
pub struct ForwardState {
    /// `(parameter index, tape var)` for every parameter that was used.
    pub bound: Vec<(usize, Var)>,
    pub bn_updates: Vec<(String, BnRunning)>,
}

impl<'a> Forward<'a> {
    /// Trainable parameters get gradients in train mode only.
    pub fn new(
        tape: &'a mut Tape,
        params: &'a Parameters,
        mode: Mode,
        rng: &'a mut dyn RngCore,
    ) -> Self {
        Forward {
            tape,
            params,
            mode,
            rng,
            param_grads: mode == Mode::Train,
            bound: vec![None; params.len()],
            bn_updates: Vec::new(),
        }
    }

    /// Overrides whether trainable parameters are recorded with gradients.
    pub fn with_param_grads(mut self, on: bool) -> Self {
        self.param_grads = on;
        self
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    pub fn config(&self) -> &'a ModelConfig {
        self.params.config()
    }

    pub fn param(&mut self, name: &str) -> Result<Var> {
        let i = self
            .params
            .position(name)
            .ok_or_else(|| Error::Schema(format!("no parameter named {name}")))?;
        if let Some(v) = self.bound[i] {
            return Ok(v);
        }
        let e = &self.params.entries()[i];
        let v = if self.param_grads && e.trainable {
            self.tape.param(e.value.clone())
        } else {
            self.tape.constant(e.value.clone())
        };
        self.bound[i] = Some(v);
        Ok(v)
    }

    pub fn batch_norm(&mut self, prefix: &str, x: Var) -> Result<Var> {
        let gamma = self.param(&format!("{prefix}.gamma"))?;
        let beta = self.param(&format!("{prefix}.beta"))?;
        let mut running = self.params.running(prefix)?;
        let y = self
            .tape
            .batch_norm(x, gamma, beta, &mut running, self.mode)?;
        if self.mode == Mode::Train {
            self.bn_updates.push((prefix.to_string(), running));
        }
        Ok(y)
    }

    pub fn dropout(&mut self, x: Var, p: f64) -> Result<Var> {
        self.tape.dropout(x, p, self.mode, &mut *self.rng)
    }

    fn conv3(&mut self, prefix: &str, x: Var) -> Result<Var> {
        let w = self.param(&format!("{prefix}.w"))?;
        let b = self.param(&format!("{prefix}.b"))?;
        self.tape.conv2d(x, w, b)
    }

    fn pointwise(&mut self, prefix: &str, x: Var) -> Result<Var> {
        let w = self.param(&format!("{prefix}.w"))?;
        let b = self.param(&format!("{prefix}.b"))?;
        self.tape.pointwise_conv(x, w, b)
    }

    fn linear(&mut self, prefix: &str, x: Var) -> Result<Var> {
        let w = self.param(&format!("{prefix}.w"))?;
        let b = self.param(&format!("{prefix}.b"))?;
        self.tape.affine(x, w, b)
    }

    pub fn finish(self) -> ForwardState {
        ForwardState {
            bound: self
                .bound
                .iter()
                .enumerate()
                .filter_map(|(i, v)| v.map(|v| (i, v)))
                .collect(),
            bn_updates: self.bn_updates,
        }
    }
}

impl Parameters {
    pub fn apply_bn_updates(&mut self, updates: &[(String, BnRunning)]) -> Result<()> {
        for (name, r) in updates {
            self.set_running(name, r)?;
        }
        Ok(())
    }
}

/// Radiomics embedding: `fc1 -> relu -> dropout -> fc2 -> dropout`.
pub fn mlp_forward(f: &mut Forward, x: Var) -> Result<Var> {
    let cfg = f.config();
    let width = f.tape.value(x).dims2()?.1;
    if width != cfg.d_in {
        return Err(Error::Schema(format!(
            "radiomics input has {width} columns, model expects {}",
            cfg.d_in
        )));
    }
    let h = f.linear("mlp.fc1", x)?;
    let h = f.tape.relu(h);
    let h = f.dropout(h, cfg.mlp_dropout)?;
    let z = f.linear("mlp.fc2", h)?;
    f.dropout(z, cfg.mlp_dropout)
}

/// `H_l`: `bn -> relu -> conv3x3 -> dropout`, producing `growth_rate` maps.
pub fn dense_layer_forward(f: &mut Forward, prefix: &str, x: Var) -> Result<Var> {
    let cfg = f.config();
    let h = if cfg.bottleneck {
        let h = f.batch_norm(&format!("{prefix}.bn1"), x)?;
        let h = f.tape.relu(h);
        let h = f.pointwise(&format!("{prefix}.conv1"), h)?;
        let h = f.batch_norm(&format!("{prefix}.bn2"), h)?;
        let h = f.tape.relu(h);
        f.conv3(&format!("{prefix}.conv2"), h)?
    } else {
        let h = f.batch_norm(&format!("{prefix}.bn"), x)?;
        let h = f.tape.relu(h);
        f.conv3(&format!("{prefix}.conv"), h)?
    };
    f.dropout(h, cfg.backbone_dropout)
}

/// Each layer sees the concatenation of the block input and all earlier
/// layer outputs; the block returns the concatenation of all of them.
pub fn dense_block_forward(f: &mut Forward, block: usize, x0: Var) -> Result<Var> {
    let mut features = vec![x0];
    for l in 0..f.config().layers_per_block {
        let input = if features.len() == 1 {
            x0
        } else {
            f.tape.concat_channels(&features)?
        };
        let out = dense_layer_forward(f, &layer_prefix(block, l), input)?;
        features.push(out);
    }
    if features.len() == 1 {
        Ok(x0)
    } else {
        f.tape.concat_channels(&features)
    }
}

/// `bn -> relu -> 1x1 conv to floor(theta * C) -> 2x2 average pool`.
pub fn transition_forward(f: &mut Forward, index: usize, x: Var) -> Result<Var> {
    let h = f.batch_norm(&format!("trans{index}.bn"), x)?;
    let h = f.tape.relu(h);
    let h = f.pointwise(&format!("trans{index}.conv"), h)?;
    f.tape.avg_pool_2x2(h)
}

pub fn densenet_forward(f: &mut Forward, img: Var) -> Result<Var> {
    let cfg = f.config();
    let (_, c, h, w) = f.tape.value(img).dims4()?;
    if c != 3 || h != cfg.input_side || w != cfg.input_side {
        return Err(Error::Dimension(format!(
            "image batch {:?} does not match 3x{s}x{s}",
            f.tape.shape(img),
            s = cfg.input_side
        )));
    }
    if cfg.input_side < 8 {
        return Err(Error::Config(format!(
            "input side {} below 8",
            cfg.input_side
        )));
    }
    let mut x = f.conv3("stem.conv", img)?;
    for b in 0..cfg.blocks {
        x = dense_block_forward(f, b, x)?;
        if b + 1 < cfg.blocks {
            x = transition_forward(f, b, x)?;
        }
    }
    let x = f.batch_norm("final.bn", x)?;
    Ok(f.tape.relu(x))
}

/// `global average pool -> linear -> bn -> relu`.
pub fn projection_forward(f: &mut Forward, z: Var) -> Result<Var> {
    let g = f.tape.global_avg_pool(z)?;
    let y = f.linear("proj.fc", g)?;
    let y = f.batch_norm("proj.bn", y)?;
    Ok(f.tape.relu(y))
}

/// Concatenates projected CNN features with the radiomics embedding and
/// applies the linear classification head.
pub fn fuse_and_classify(f: &mut Forward, proj: Var, embed: Var) -> Result<Var> {
    let (np, _) = f.tape.value(proj).dims2()?;
    let (ne, _) = f.tape.value(embed).dims2()?;
    if np != ne {
        return Err(Error::Dimension(format!("fusing batches of {np} and {ne}")));
    }
    let fused = f.tape.concat_channels(&[proj, embed])?;
    f.linear("head.fc", fused)
}

pub fn model_forward(f: &mut Forward, img: Var, features: Var) -> Result<Var> {
    let z = densenet_forward(f, img)?;
    let proj = projection_forward(f, z)?;
    let embed = mlp_forward(f, features)?;
    fuse_and_classify(f, proj, embed)
}

/// Eval-mode logits for a batch, without gradients.
pub fn predict_logits(params: &Parameters, images: &Tensor, features: &Tensor) -> Result<Tensor> {
    let mut tape = Tape::new();
    let mut rng = rand::rngs::mock::StepRng::new(0, 0);
    let mut f = Forward::new(&mut tape, params, Mode::Eval, &mut rng);
    let img = f.tape.constant(images.clone());
    let feat = f.tape.constant(features.clone());
    let logits = model_forward(&mut f, img, feat)?;
    Ok(tape.value(logits).clone())
}
