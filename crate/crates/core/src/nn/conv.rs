use crate::error::{Error, Result};

use super::Tensor;

/// Zero padding per side.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Padding {
    pub top: usize,
    pub bottom: usize,
    pub left: usize,
    pub right: usize,
}

impl Padding {
    pub fn uniform(p: usize) -> Self {
        Self { top: p, bottom: p, left: p, right: p }
    }
}

/// Weights are `(out_ch, in_ch / groups, kh, kw)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvParams {
    pub weight: Tensor,
    pub bias: Vec<f64>,
    pub stride: usize,
    pub padding: Padding,
    pub groups: usize,
}

impl ConvParams {
    pub fn new(weight: Tensor, bias: Vec<f64>, stride: usize, padding: Padding, groups: usize) -> Result<Self> {
        let p = Self { weight, bias, stride, padding, groups };
        p.validate()?;
        Ok(p)
    }

    /// Zero-initialized `k×k` conv with symmetric padding `k / 2`.
    pub fn zeros(out_ch: usize, in_ch: usize, k: usize, groups: usize) -> Result<Self> {
        if groups == 0 || !in_ch.is_multiple_of(groups) {
            return Err(Error::param(format!("in_ch {in_ch} not divisible by groups {groups}")));
        }
        Self::new(Tensor::zeros([out_ch, in_ch / groups, k, k])?, vec![0.0; out_ch], 1, Padding::uniform(k / 2), groups)
    }

    /// 1×1 (or k×k centre-tap) conv that copies input channel `o` to output `o`.
    pub fn identity(channels: usize, k: usize, groups: usize) -> Result<Self> {
        let mut p = Self::zeros(channels, channels, k, groups)?;
        let per_group = channels / groups;
        for o in 0..channels {
            let i = p.weight.index(o, o % per_group, k / 2, k / 2);
            p.weight.data_mut()[i] = 1.0;
        }
        Ok(p)
    }

    pub fn out_channels(&self) -> usize {
        self.weight.batch()
    }

    pub fn in_channels(&self) -> usize {
        self.weight.channels() * self.groups
    }

    /// `(kh, kw)`
    pub fn kernel(&self) -> (usize, usize) {
        (self.weight.height(), self.weight.width())
    }

    pub fn param_count(&self) -> usize {
        self.weight.data().len() + self.bias.len()
    }

    pub fn validate(&self) -> Result<()> {
        let out_ch = self.out_channels();
        if self.groups == 0 {
            return Err(Error::param("groups must be >= 1"));
        }
        if self.stride == 0 {
            return Err(Error::param("stride must be >= 1"));
        }
        if !out_ch.is_multiple_of(self.groups) {
            return Err(Error::param(format!("out_ch {out_ch} not divisible by groups {}", self.groups)));
        }
        if self.bias.len() != out_ch {
            return Err(Error::param(format!("bias has {} entries, expected {out_ch}", self.bias.len())));
        }
        Ok(())
    }

    /// Output spatial size `(h, w)` for an input of `(h, w)`.
    pub fn output_hw(&self, h: usize, w: usize) -> Result<(usize, usize)> {
        let (kh, kw) = self.kernel();
        let ph = h + self.padding.top + self.padding.bottom;
        let pw = w + self.padding.left + self.padding.right;
        if ph < kh || pw < kw {
            return Err(Error::dim(format!("padded input {ph}x{pw} smaller than kernel {kh}x{kw}")));
        }
        Ok(((ph - kh) / self.stride + 1, (pw - kw) / self.stride + 1))
    }
}

/// Grouped 2D cross-correlation with stride and zero padding.
pub fn conv2d(x: &Tensor, p: &ConvParams) -> Result<Tensor> {
    p.validate()?;
    let [n, c_in, h, w] = x.shape();
    if c_in != p.in_channels() {
        return Err(Error::dim(format!("input has {c_in} channels, conv expects {}", p.in_channels())));
    }
    let (oh, ow) = p.output_hw(h, w)?;
    let (kh, kw) = p.kernel();
    let c_out = p.out_channels();
    let in_per_group = c_in / p.groups;
    let out_per_group = c_out / p.groups;
    let (pt, pl) = (p.padding.top as isize, p.padding.left as isize);
    let s = p.stride as isize;
    let wt = p.weight.data();

    let mut out = Tensor::zeros([n, c_out, oh, ow])?;
    for b in 0..n {
        for o in 0..c_out {
            let g = o / out_per_group;
            let plane = out.plane_mut(b, o);
            plane.fill(p.bias[o]);
            for ci in 0..in_per_group {
                let src = x.plane(b, g * in_per_group + ci);
                let kbase = (o * in_per_group + ci) * kh * kw;
                for ky in 0..kh {
                    for kx in 0..kw {
                        let wv = wt[kbase + ky * kw + kx];
                        if wv == 0.0 {
                            continue;
                        }
                        for oy in 0..oh {
                            let iy = oy as isize * s + ky as isize - pt;
                            if iy < 0 || iy >= h as isize {
                                continue;
                            }
                            let row = &src[iy as usize * w..(iy as usize + 1) * w];
                            let dst = &mut plane[oy * ow..(oy + 1) * ow];
                            for (ox, d) in dst.iter_mut().enumerate() {
                                let ix = ox as isize * s + kx as isize - pl;
                                if ix >= 0 && ix < w as isize {
                                    *d += wv * row[ix as usize];
                                }
                            }
                        }
                    }
                }
            }
        }
    }
    Ok(out)
}
