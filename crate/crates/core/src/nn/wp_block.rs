//! Residual downsampling block built on wavelet pooling.

use crate::error::{Error, Result};
use crate::wavelet::WaveletFilters;

use super::{conv2d, wavelet_pool_tensor, ConvParams, Tensor};

/// Where the low-pass pooling sits relative to the convolution on each branch.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum BlockVariant {
    /// Pool then conv on both branches.
    #[default]
    PoolThenConv,
    /// Conv then pool on both branches.
    ConvThenPool,
    /// Main branch conv then pool, shortcut pool then conv.
    Mixed,
}

fn check_convs(conv_a: &ConvParams, conv_b: &ConvParams) -> Result<()> {
    if conv_a.kernel() != (3, 3) || conv_a.stride != 1 {
        return Err(Error::param("main-branch conv must be 3x3 with stride 1"));
    }
    if conv_b.kernel() != (1, 1) || conv_b.stride != 1 {
        return Err(Error::param("shortcut conv must be 1x1 with stride 1"));
    }
    if conv_a.out_channels() != conv_b.out_channels() || conv_a.in_channels() != conv_b.in_channels() {
        return Err(Error::param("main and shortcut convs must agree on channels"));
    }
    Ok(())
}

/// `conv_a(pool(x)) + conv_b(pool(x))`: spatial size halves.
pub fn wp_block_forward(x: &Tensor, conv_a: &ConvParams, conv_b: &ConvParams, f: &WaveletFilters) -> Result<Tensor> {
    wp_block_forward_variant(x, conv_a, conv_b, f, BlockVariant::PoolThenConv)
}

pub fn wp_block_forward_variant(
    x: &Tensor,
    conv_a: &ConvParams,
    conv_b: &ConvParams,
    f: &WaveletFilters,
    variant: BlockVariant,
) -> Result<Tensor> {
    check_convs(conv_a, conv_b)?;
    let pool_conv = |c: &ConvParams| conv2d(&wavelet_pool_tensor(x, f)?, c);
    let conv_pool = |c: &ConvParams| wavelet_pool_tensor(&conv2d(x, c)?, f);
    let (main, shortcut) = match variant {
        BlockVariant::PoolThenConv => (pool_conv(conv_a)?, pool_conv(conv_b)?),
        BlockVariant::ConvThenPool => (conv_pool(conv_a)?, conv_pool(conv_b)?),
        BlockVariant::Mixed => (conv_pool(conv_a)?, pool_conv(conv_b)?),
    };
    main.add(&shortcut)
}
