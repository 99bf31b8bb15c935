//! Manifests, feature tables, normalization, image loading, batching and
//! the synthetic texture dataset.

mod loader;
mod manifest;
mod norm;
mod synth;
mod table;

pub use loader::{batch_order, load_image, Batch, Dataset};
pub use manifest::{
    default_class_names, load_manifest, write_manifest, DatasetManifest, ManifestEntry,
};
pub use norm::{apply_norm, denormalize, fit_norm_stats, NormStats};
pub use synth::{render_image, synthesize_dataset, SynthSpec};
pub use table::FeatureTable;
