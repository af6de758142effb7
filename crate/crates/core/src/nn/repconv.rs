//! Structural reparameterization: a 3×3 + 1×1 + identity block collapsed
//! into a single 3×3 convolution for inference.

use crate::error::{Error, Result};

use super::{conv2d, ConvParams, Padding, Tensor};

#[derive(Debug, Clone, PartialEq)]
pub struct RepConvParams {
    pub branch3x3: ConvParams,
    pub branch1x1: ConvParams,
    /// Per-output-channel scale of the identity branch (folded BN).
    pub identity_scale: Option<Vec<f64>>,
    pub fused: Option<ConvParams>,
}

impl RepConvParams {
    pub fn new(branch3x3: ConvParams, branch1x1: ConvParams, identity_scale: Option<Vec<f64>>) -> Result<Self> {
        let p = Self { branch3x3, branch1x1, identity_scale, fused: None };
        p.validate()?;
        Ok(p)
    }

    pub fn in_channels(&self) -> usize {
        self.branch3x3.in_channels()
    }

    pub fn out_channels(&self) -> usize {
        self.branch3x3.out_channels()
    }

    pub fn validate(&self) -> Result<()> {
        let (b3, b1) = (&self.branch3x3, &self.branch1x1);
        b3.validate()?;
        b1.validate()?;
        if b3.kernel() != (3, 3) || b1.kernel() != (1, 1) {
            return Err(Error::param("RepConv expects a 3x3 and a 1x1 branch"));
        }
        if b3.stride != 1 || b1.stride != 1 {
            return Err(Error::param("RepConv branches must use stride 1"));
        }
        if b3.padding != Padding::uniform(1) || b1.padding != Padding::uniform(0) {
            return Err(Error::param("RepConv expects padding 1 on the 3x3 branch and 0 on the 1x1 branch"));
        }
        if b3.in_channels() != b1.in_channels() || b3.out_channels() != b1.out_channels() || b3.groups != b1.groups {
            return Err(Error::param("RepConv branches disagree on channels or groups"));
        }
        if let Some(scale) = &self.identity_scale {
            if b3.in_channels() != b3.out_channels() {
                return Err(Error::param(format!(
                    "identity branch requires in_ch == out_ch, got {} -> {}",
                    b3.in_channels(),
                    b3.out_channels()
                )));
            }
            if scale.len() != b3.out_channels() {
                return Err(Error::param("identity scale length must equal channel count"));
            }
        }
        Ok(())
    }
}

/// Multi-branch forward: `conv3x3(x) + conv1x1(x) + scale ⊙ x`.
pub fn repconv_forward_train(x: &Tensor, p: &RepConvParams) -> Result<Tensor> {
    p.validate()?;
    let mut y = conv2d(x, &p.branch3x3)?.add(&conv2d(x, &p.branch1x1)?)?;
    if let Some(scale) = &p.identity_scale {
        let [n, c, _, _] = x.shape();
        for b in 0..n {
            for (ch, &s) in scale.iter().enumerate().take(c) {
                for (d, v) in y.plane_mut(b, ch).iter_mut().zip(x.plane(b, ch)) {
                    *d += s * v;
                }
            }
        }
    }
    Ok(y)
}

/// Single-conv forward using the fused kernel.
pub fn repconv_forward_deploy(x: &Tensor, p: &RepConvParams) -> Result<Tensor> {
    let fused = p.fused.as_ref().ok_or_else(|| Error::param("RepConv has not been fused"))?;
    conv2d(x, fused)
}

pub fn repconv_fuse(p: &RepConvParams) -> Result<RepConvParams> {
    p.validate()?;
    let b3 = &p.branch3x3;
    let mut weight = b3.weight.clone();
    let in_per_group = weight.channels();
    let out_ch = p.out_channels();
    for o in 0..out_ch {
        for i in 0..in_per_group {
            let dst = weight.index(o, i, 1, 1);
            weight.data_mut()[dst] += p.branch1x1.weight.at(o, i, 0, 0);
        }
        if let Some(scale) = &p.identity_scale {
            let dst = weight.index(o, o % in_per_group, 1, 1);
            weight.data_mut()[dst] += scale[o];
        }
    }
    let bias = b3.bias.iter().zip(&p.branch1x1.bias).map(|(a, b)| a + b).collect();
    let fused = ConvParams::new(weight, bias, 1, Padding::uniform(1), b3.groups)?;
    Ok(RepConvParams { fused: Some(fused), ..p.clone() })
}

/// Inference-time batch-norm statistics for one conv output.
#[derive(Debug, Clone, PartialEq)]
pub struct BatchNorm {
    pub gamma: Vec<f64>,
    pub beta: Vec<f64>,
    pub mean: Vec<f64>,
    pub var: Vec<f64>,
    pub eps: f64,
}

/// Folds `bn(conv(x))` into a single conv.
pub fn fold_batch_norm(conv: &ConvParams, bn: &BatchNorm) -> Result<ConvParams> {
    let c = conv.out_channels();
    if [bn.gamma.len(), bn.beta.len(), bn.mean.len(), bn.var.len()] != [c; 4] {
        return Err(Error::dim(format!("batch-norm statistics must have {c} entries")));
    }
    let mut weight = conv.weight.clone();
    let per_out = weight.data().len() / c;
    let mut bias = Vec::with_capacity(c);
    for o in 0..c {
        let k = bn.gamma[o] / (bn.var[o] + bn.eps).sqrt();
        for w in &mut weight.data_mut()[o * per_out..(o + 1) * per_out] {
            *w *= k;
        }
        bias.push((conv.bias[o] - bn.mean[o]) * k + bn.beta[o]);
    }
    ConvParams::new(weight, bias, conv.stride, conv.padding, conv.groups)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    use crate::nn::uniform_weights;

    fn random_conv(rng: &mut ChaCha8Rng, out_ch: usize, in_ch: usize, k: usize, groups: usize) -> ConvParams {
        let mut p = ConvParams::zeros(out_ch, in_ch, k, groups).unwrap();
        let n = p.weight.data().len();
        p.weight.data_mut().copy_from_slice(&uniform_weights(rng, n));
        p.bias = uniform_weights(rng, out_ch);
        p
    }

    fn sample_input(c: usize) -> Tensor {
        Tensor::from_fn([1, c, 5, 6], |[_, ch, y, x]| ((ch * 13 + y * 5 + x * 3) % 11) as f64 / 7.0 - 0.6).unwrap()
    }

    #[test]
    fn identity_only_is_passthrough() {
        let p = RepConvParams::new(
            ConvParams::zeros(3, 3, 3, 1).unwrap(),
            ConvParams::zeros(3, 3, 1, 1).unwrap(),
            Some(vec![1.0; 3]),
        )
        .unwrap();
        let x = sample_input(3);
        assert_eq!(repconv_forward_train(&x, &p).unwrap(), x);

        let fused = repconv_fuse(&p).unwrap().fused.unwrap();
        for o in 0..3 {
            for i in 0..3 {
                for ky in 0..3 {
                    for kx in 0..3 {
                        let want = if o == i && (ky, kx) == (1, 1) { 1.0 } else { 0.0 };
                        assert_eq!(fused.weight.at(o, i, ky, kx), want);
                    }
                }
            }
        }
    }

    #[test]
    fn pointwise_only_lands_on_centre_tap() {
        let mut b1 = ConvParams::zeros(2, 2, 1, 1).unwrap();
        b1.weight.data_mut().copy_from_slice(&[0.5, -0.25, 0.125, 2.0]);
        let p = RepConvParams::new(ConvParams::zeros(2, 2, 3, 1).unwrap(), b1.clone(), None).unwrap();
        let x = sample_input(2);
        assert_eq!(repconv_forward_train(&x, &p).unwrap(), conv2d(&x, &b1).unwrap());
        let fused = repconv_fuse(&p).unwrap().fused.unwrap();
        for o in 0..2 {
            for i in 0..2 {
                assert_eq!(fused.weight.at(o, i, 1, 1), b1.weight.at(o, i, 0, 0));
                assert_eq!(fused.weight.at(o, i, 0, 1), 0.0);
            }
        }
    }

    #[test]
    fn fused_matches_branches_with_groups() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let p = RepConvParams::new(
            random_conv(&mut rng, 4, 4, 3, 2),
            random_conv(&mut rng, 4, 4, 1, 2),
            Some(uniform_weights(&mut rng, 4)),
        )
        .unwrap();
        let fused = repconv_fuse(&p).unwrap();
        let x = sample_input(4);
        let a = repconv_forward_train(&x, &p).unwrap();
        let b = repconv_forward_deploy(&x, &fused).unwrap();
        assert!(a.max_abs_diff(&b) < 1e-12);
    }

    #[test]
    fn identity_requires_square_channels() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let p = RepConvParams {
            branch3x3: random_conv(&mut rng, 4, 2, 3, 1),
            branch1x1: random_conv(&mut rng, 4, 2, 1, 1),
            identity_scale: Some(vec![1.0; 4]),
            fused: None,
        };
        assert!(repconv_fuse(&p).is_err());
        assert!(repconv_forward_deploy(&sample_input(2), &RepConvParams { identity_scale: None, ..p }).is_err());
    }

    #[test]
    fn batch_norm_fold_matches_affine() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let conv = random_conv(&mut rng, 2, 3, 3, 1);
        let bn = BatchNorm {
            gamma: vec![1.5, -0.5],
            beta: vec![0.1, 0.2],
            mean: vec![0.05, -0.3],
            var: vec![0.8, 2.0],
            eps: 1e-5,
        };
        let x = sample_input(3);
        let raw = conv2d(&x, &conv).unwrap();
        let folded = conv2d(&x, &fold_batch_norm(&conv, &bn).unwrap()).unwrap();
        for c in 0..2 {
            let k = bn.gamma[c] / (bn.var[c] + bn.eps).sqrt();
            for (r, f) in raw.plane(0, c).iter().zip(folded.plane(0, c)) {
                assert!(((r - bn.mean[c]) * k + bn.beta[c] - f).abs() < 1e-12);
            }
        }
    }
}
