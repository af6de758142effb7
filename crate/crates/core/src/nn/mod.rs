//! Inference-only tensor operations for the reparameterizable conv,
//! channel-shuffle fusion and wavelet-pooling residual blocks.

mod channels;
mod conv;
mod drcb;
pub mod manifest;
mod repconv;
mod tensor;
mod wp_block;

pub use channels::{channel_concat, channel_shuffle, channel_split, shuffle_source_index};
pub use conv::{conv2d, ConvParams, Padding};
pub use drcb::{drcb_forward, DrcbParams, SPLIT_MAIN, SPLIT_SIDE};
pub use repconv::{
    fold_batch_norm, repconv_forward_deploy, repconv_forward_train, repconv_fuse, BatchNorm, RepConvParams,
};
pub use tensor::{wavelet_pool_tensor, Tensor};
pub use wp_block::{wp_block_forward, wp_block_forward_variant, BlockVariant};

use rand::Rng;

/// Deterministic uniform initializer in `[-0.1, 0.1]`.
pub fn uniform_weights<R: Rng + ?Sized>(rng: &mut R, len: usize) -> Vec<f64> {
    (0..len).map(|_| rng.gen_range(-0.1..=0.1)).collect()
}
