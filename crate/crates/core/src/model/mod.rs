//! GRU encoder-decoder with country embeddings and a five-quantile head.

mod checkpoint;
mod gru;
mod params;
mod quantiles;
mod seq2seq;

pub use checkpoint::{Checkpoint, CHECKPOINT_VERSION};
pub use gru::GruCache;
pub use params::{GruLayerParams, ModelConfig, ModelParams};
pub use quantiles::{
    rearrange_quantiles, ForecastGrid, QuantileRow, MEDIAN_INDEX, QUANTILE_COUNT, QUANTILE_LEVELS,
};
pub use seq2seq::{backward, decode, encode, forward, forward_with_tape, Tape, TeacherForcing};
