use crate::error::{Error, Result};

use super::Tensor;

fn select_channels(x: &Tensor, channels: impl ExactSizeIterator<Item = usize>) -> Result<Tensor> {
    let [n, _, h, w] = x.shape();
    let count = channels.len();
    let picks: Vec<usize> = channels.collect();
    let mut out = Tensor::zeros([n, count, h, w])?;
    for b in 0..n {
        for (dst, &src) in picks.iter().enumerate() {
            out.plane_mut(b, dst).copy_from_slice(x.plane(b, src));
        }
    }
    Ok(out)
}

/// Splits channels 3:1 into `[0, 3C/4)` and `[3C/4, C)`.
pub fn channel_split(x: &Tensor) -> Result<(Tensor, Tensor)> {
    let c = x.channels();
    if !c.is_multiple_of(4) {
        return Err(Error::dim(format!("3:1 channel split needs C divisible by 4, got {c}")));
    }
    let cut = 3 * c / 4;
    Ok((select_channels(x, 0..cut)?, select_channels(x, cut..c)?))
}

/// Stacks `a` then `b` along the channel axis.
pub fn channel_concat(a: &Tensor, b: &Tensor) -> Result<Tensor> {
    let [na, ca, ha, wa] = a.shape();
    let [nb, cb, hb, wb] = b.shape();
    if (na, ha, wa) != (nb, hb, wb) {
        return Err(Error::dim(format!("cannot concatenate {:?} and {:?} on channels", a.shape(), b.shape())));
    }
    let mut out = Tensor::zeros([na, ca + cb, ha, wa])?;
    for n in 0..na {
        for c in 0..ca {
            out.plane_mut(n, c).copy_from_slice(a.plane(n, c));
        }
        for c in 0..cb {
            out.plane_mut(n, ca + c).copy_from_slice(b.plane(n, c));
        }
    }
    Ok(out)
}

/// Input channel that lands at output channel `c` under a `groups` shuffle.
#[inline]
pub fn shuffle_source_index(c: usize, channels: usize, groups: usize) -> usize {
    (c % groups) * (channels / groups) + c / groups
}

/// Reshape `(groups, C/groups)` → transpose → flatten.
pub fn channel_shuffle(x: &Tensor, groups: usize) -> Result<Tensor> {
    let c = x.channels();
    if groups == 0 || !c.is_multiple_of(groups) {
        return Err(Error::dim(format!("channel shuffle needs C ({c}) divisible by groups ({groups})")));
    }
    select_channels(x, (0..c).map(|i| shuffle_source_index(i, c, groups)))
}
