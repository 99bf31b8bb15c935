//! Handcrafted region features: first-order statistics, co-occurrence,
//! run-length and size-zone texture matrices, and LoG-filtered intensity
//! statistics, computed inside a central disk or its peripheral complement.

mod first_order;
mod glcm;
mod glrlm;
mod glszm;
mod log_filter;
mod mask;
mod quantize;
mod record;

pub use first_order::{first_order_features, FirstOrderFeatures, ENTROPY_BINS, FIRST_ORDER_NAMES};
pub use glcm::{
    cooccurrence_counts, glcm_features, glcm_matrix, Direction, GlcmFeatures, GLCM_NAMES,
};
pub use glrlm::{glrlm_features, run_length_matrix, GlrlmFeatures, GLRLM_NAMES};
pub use glszm::{glszm_features, zones, GlszmFeatures, GLSZM_NAMES};
pub use log_filter::{log_filter, log_kernel, LOG_SIGMAS};
pub use mask::{make_central_mask, make_peripheral_mask, RoiMask, MIN_ROI_PIXELS};
pub use quantize::{quantize, QuantizedRegion};
pub use record::{
    extract_record, extract_regions, feature_names, merge_tables, records_to_table,
    RadiomicsRecord, DEFAULT_GRAY_LEVELS, DIAGNOSTIC_PREFIX, RECORD_LEN,
};
