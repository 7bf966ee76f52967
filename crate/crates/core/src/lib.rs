//! Content-based image retrieval with an optional Phong-shading pass.
//!
//! Pipeline: decode ([`image_io`]) → shade ([`phong`]) → extract a 15-slot
//! descriptor ([`features`]) → index ([`index`]) → rank by Euclidean distance
//! ([`search`]) → score per-category precision/recall ([`eval`]).

pub mod cli;
pub mod error;
pub mod eval;
pub mod features;
pub mod image_io;
pub mod index;
pub mod phong;
pub mod search;
pub mod synth;

pub use error::{Error, Result};
pub use eval::{
    emit_report, precision, recall, run_experiment, EvalResult, EvalRow, QueryMode, ShadingMode,
};
pub use features::{extract_features, ExtractionOpts, FeatureVector, FEATURE_DIM, FEATURE_NAMES};
pub use image_io::{
    decode_ppm, encode_ppm, read_ppm, to_grayscale, write_ppm, GrayImage, RgbImage,
};
pub use index::{build_index, load_index, save_index, scan_corpus, Index, IndexEntry};
pub use phong::{
    phong_intensity, shade_image, shade_image_tiled, tile_ndoth, PhongParams, TileInterpolant, Vec3,
};
pub use search::{
    euclidean_distance, fit_normalizer, rank, rank_excluding, Normalizer, RankedResult,
};
pub use synth::generate_synthetic_corpus;
