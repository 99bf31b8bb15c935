use super::config::TrainConfig;
use crate::error::{Error, Result};
use crate::model::Parameters;

/// First and second moments per parameter tensor, and the step count.
#[derive(Clone, Debug, PartialEq)]
pub struct AdamState {
    pub m: Vec<Vec<f64>>,
    pub v: Vec<Vec<f64>>,
    pub t: u64,
}

impl AdamState {
    pub fn new(params: &Parameters) -> Self {
        let zeros = || {
            params
                .entries()
                .iter()
                .map(|e| vec![0.0; e.value.numel()])
                .collect()
        };
        AdamState {
            m: zeros(),
            v: zeros(),
            t: 0,
        }
    }
}

/// One Adam step with L2 weight decay added to the gradient. `grads` is
/// aligned with `params.entries()`; a missing gradient counts as zero.
/// Non-trainable entries are left alone.
pub fn adam_step(
    params: &mut Parameters,
    grads: &[Option<&[f64]>],
    state: &mut AdamState,
    cfg: &TrainConfig,
) -> Result<()> {
    if grads.len() != params.len() || state.m.len() != params.len() {
        return Err(Error::Dimension(format!(
            "{} gradients and {} moment tensors for {} parameters",
            grads.len(),
            state.m.len(),
            params.len()
        )));
    }
    state.t += 1;
    let t = state.t as i32;
    let c1 = 1.0 - cfg.beta1.powi(t);
    let c2 = 1.0 - cfg.beta2.powi(t);
    for (i, entry) in params.entries_mut().iter_mut().enumerate() {
        if !entry.trainable {
            continue;
        }
        let w = entry.value.data_mut();
        if let Some(g) = grads[i] {
            if g.len() != w.len() {
                return Err(Error::Dimension(format!(
                    "gradient of {} has {} values, parameter has {}",
                    entry.name,
                    g.len(),
                    w.len()
                )));
            }
        }
        let (m, v) = (&mut state.m[i], &mut state.v[i]);
        for j in 0..w.len() {
            let g = grads[i].map_or(0.0, |g| g[j]) + cfg.weight_decay * w[j];
            m[j] = cfg.beta1 * m[j] + (1.0 - cfg.beta1) * g;
            v[j] = cfg.beta2 * v[j] + (1.0 - cfg.beta2) * g * g;
            let m_hat = m[j] / c1;
            let v_hat = v[j] / c2;
            w[j] -= cfg.lr * m_hat / (v_hat.sqrt() + cfg.eps);
        }
    }
    Ok(())
}
