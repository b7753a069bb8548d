//! Core of the soundstage soundtrack engine: the project model, embedding
//! math, the music-map projection, WAV utilities and prompt templates.

pub mod assets;
pub mod audiokit;
pub mod lexicon;
pub mod mapper;
pub mod model;
pub mod scalar;
pub mod templates;
pub mod vecmath;

pub use scalar::Scalar;

/// Embedding stored as `f32`, the width used by embedding files and providers.
pub type Embedding = vecmath::Embedding<f32>;
/// Embedding stored as `f64`, used in tests and oracles.
pub type Embedding64 = vecmath::Embedding<f64>;
/// Music-map layout with `f64` coordinates.
pub type MapLayout = mapper::MapLayout<f64>;
/// t-SNE parameters for `f64` layouts.
pub type TsneParams = mapper::TsneParams;
