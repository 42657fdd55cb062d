//! Entropy coding for 3D Gaussian Splatting models.
//!
//! Each of the 59 scalar attributes of a Gaussian is quantized on its own
//! min-max grid and range coded under a fitted probability model: Laplace
//! for higher-order SH coefficients, Gaussian mixtures for rotation, scaling
//! and opacity, the empirical histogram for SH DC. Positions and SH DC are
//! coded as a Morton-ordered point cloud.
//!
//! ```no_run
//! use egs::{bitstream, ply};
//!
//! let cloud = ply::load_ply("scene.ply")?;
//! let bytes = bitstream::encode(&cloud, &Default::default())?;
//! let back = bitstream::decode(&bytes, &Default::default())?;
//! assert_eq!(back.count(), cloud.count());
//! # Ok::<(), egs::Error>(())
//! ```

pub mod bitstream;
pub mod error;
pub mod fit;
pub mod model;
pub mod pc_codec;
pub mod ply;
pub mod prune;
pub mod quant;
pub mod range_coder;
pub mod report;
pub mod stats;
pub mod synth;
mod wire;

pub use bitstream::{decode, encode, DecodeOptions, EncodeOptions, GeometryCodec};
pub use error::{Error, Result};
pub use model::{AttributeGroup, GaussianCloud};
pub use quant::{PresetName, QuantGrid, RatePreset};
