//! Channel-split fusion block: a 3:1 split, a grouped 3×3 conv and 1×1 mix on
//! the wide part, a pass-through narrow part, then a channel shuffle.

use rand::Rng;

use crate::error::{Error, Result};

use super::{channel_concat, channel_shuffle, channel_split, conv2d, uniform_weights, ConvParams, Tensor};

/// Fraction of channels routed through the convolutional path.
pub const SPLIT_MAIN: usize = 3;
/// Fraction of channels passed straight through.
pub const SPLIT_SIDE: usize = 1;

/// Default group count of the main-path conv; 3 always divides `3C/4`.
pub const DEFAULT_GROUPS: usize = 3;
pub const DEFAULT_SHUFFLE_GROUPS: usize = 2;

#[derive(Debug, Clone, PartialEq)]
pub struct DrcbParams {
    pub group_conv: ConvParams,
    pub pointwise_mix: ConvParams,
    pub shuffle_groups: usize,
}

impl DrcbParams {
    /// Seeded uniform weights with the default group counts.
    pub fn random<R: Rng + ?Sized>(channels: usize, rng: &mut R) -> Result<Self> {
        Self::random_with(channels, DEFAULT_GROUPS, DEFAULT_SHUFFLE_GROUPS, rng)
    }

    pub fn random_with<R: Rng + ?Sized>(
        channels: usize,
        groups: usize,
        shuffle_groups: usize,
        rng: &mut R,
    ) -> Result<Self> {
        if !channels.is_multiple_of(4) {
            return Err(Error::param(format!("DRCB needs channels divisible by 4, got {channels}")));
        }
        let main = channels * SPLIT_MAIN / (SPLIT_MAIN + SPLIT_SIDE);
        let mut group_conv = ConvParams::zeros(main, main, 3, groups)?;
        let mut pointwise_mix = ConvParams::zeros(main, main, 1, 1)?;
        for conv in [&mut group_conv, &mut pointwise_mix] {
            let n = conv.weight.data().len();
            conv.weight.data_mut().copy_from_slice(&uniform_weights(rng, n));
            conv.bias = uniform_weights(rng, main);
        }
        let p = Self { group_conv, pointwise_mix, shuffle_groups };
        p.validate(channels)?;
        Ok(p)
    }

    /// Block whose conv path is the identity.
    pub fn identity(channels: usize, groups: usize, shuffle_groups: usize) -> Result<Self> {
        let main = channels * 3 / 4;
        let p = Self {
            group_conv: ConvParams::identity(main, 3, groups)?,
            pointwise_mix: ConvParams::identity(main, 1, 1)?,
            shuffle_groups,
        };
        p.validate(channels)?;
        Ok(p)
    }

    pub fn validate(&self, channels: usize) -> Result<()> {
        if !channels.is_multiple_of(4) {
            return Err(Error::param(format!("DRCB needs channels divisible by 4, got {channels}")));
        }
        if self.shuffle_groups == 0 || !channels.is_multiple_of(self.shuffle_groups) {
            return Err(Error::param(format!(
                "channels {channels} not divisible by shuffle groups {}",
                self.shuffle_groups
            )));
        }
        if self.group_conv.groups < 2 {
            return Err(Error::param("DRCB main-path conv must be grouped (groups > 1)"));
        }
        let main = channels * 3 / 4;
        for (name, conv) in [("group conv", &self.group_conv), ("pointwise mix", &self.pointwise_mix)] {
            conv.validate()?;
            if conv.in_channels() != main || conv.out_channels() != main {
                return Err(Error::param(format!("{name} must map {main} -> {main} channels")));
            }
            if conv.stride != 1 {
                return Err(Error::param(format!("{name} must use stride 1")));
            }
        }
        if self.pointwise_mix.kernel() != (1, 1) {
            return Err(Error::param("pointwise mix must be 1x1"));
        }
        Ok(())
    }

    pub fn param_count(&self) -> usize {
        self.group_conv.param_count() + self.pointwise_mix.param_count()
    }
}

pub fn drcb_forward(x: &Tensor, p: &DrcbParams) -> Result<Tensor> {
    p.validate(x.channels())?;
    let (main, side) = channel_split(x)?;
    let main = conv2d(&conv2d(&main, &p.group_conv)?, &p.pointwise_mix)?;
    if main.shape()[2..] != side.shape()[2..] {
        return Err(Error::dim("DRCB main path changed the spatial size; check group conv padding"));
    }
    channel_shuffle(&channel_concat(&main, &side)?, p.shuffle_groups)
}
