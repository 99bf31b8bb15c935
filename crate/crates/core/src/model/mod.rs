//! The fusion network: radiomics MLP, DenseNet backbone, projection head and
//! linear classifier over the concatenated features.

mod config;
mod forward;
mod params;

pub use config::{BackboneLayout, ModelConfig, LAYER_ORDER};
pub use forward::{
    dense_block_forward, dense_layer_forward, densenet_forward, fuse_and_classify, mlp_forward,
    model_forward, predict_logits, projection_forward, transition_forward, Forward, ForwardState,
};
pub use params::{ParamEntry, Parameters};
