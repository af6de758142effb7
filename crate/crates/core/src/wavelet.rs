//! Orthonormal two-tap wavelet transforms and low-pass wavelet pooling.
//!
//! For a 2D input `X` the four subbands are `ll = L X Lᵀ`, `lh = H X Lᵀ`,
//! `hl = L X Hᵀ` and `hh = H X Hᵀ`, where `L`/`H` are the decimated
//! low/high-pass analysis operators. `lh` is therefore high-pass along
//! columns (vertical detail) and `hl` high-pass along rows.

use std::f64::consts::FRAC_1_SQRT_2;

use crate::error::{Error, Result};
use crate::grid::Matrix;

const ORTHO_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct WaveletFilters {
    low: Vec<f64>,
    high: Vec<f64>,
}

impl Default for WaveletFilters {
    fn default() -> Self {
        Self::haar()
    }
}

impl WaveletFilters {
    pub fn haar() -> Self {
        Self { low: vec![FRAC_1_SQRT_2, FRAC_1_SQRT_2], high: vec![FRAC_1_SQRT_2, -FRAC_1_SQRT_2] }
    }

    /// Checks orthonormality of the pair. Only two-tap filters can be
    /// applied; longer filters need a boundary rule that is not implemented.
    pub fn new(low: Vec<f64>, high: Vec<f64>) -> Result<Self> {
        if low.len() != high.len() || low.is_empty() {
            return Err(Error::param("low and high filters must be non-empty and equal length"));
        }
        let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();
        if (dot(&low, &low) - 1.0).abs() > ORTHO_TOL
            || (dot(&high, &high) - 1.0).abs() > ORTHO_TOL
            || dot(&low, &high).abs() > ORTHO_TOL
        {
            return Err(Error::param("wavelet filters are not an orthonormal pair"));
        }
        if low.len() != 2 {
            return Err(Error::param(format!("only two-tap filters are supported, got {} taps", low.len())));
        }
        Ok(Self { low, high })
    }

    pub fn low(&self) -> &[f64] {
        &self.low
    }

    pub fn high(&self) -> &[f64] {
        &self.high
    }

    #[inline]
    fn taps(&self) -> ([f64; 2], [f64; 2]) {
        ([self.low[0], self.low[1]], [self.high[0], self.high[1]])
    }
}

pub fn dwt1d(x: &[f64], f: &WaveletFilters) -> Result<(Vec<f64>, Vec<f64>)> {
    if x.len() < 2 || !x.len().is_multiple_of(2) {
        return Err(Error::dim(format!("signal length must be even and >= 2, got {}", x.len())));
    }
    let (l, h) = f.taps();
    Ok(x.chunks_exact(2).map(|p| (l[0] * p[0] + l[1] * p[1], h[0] * p[0] + h[1] * p[1])).unzip())
}

pub fn idwt1d(low: &[f64], high: &[f64], f: &WaveletFilters) -> Result<Vec<f64>> {
    if low.len() != high.len() {
        return Err(Error::dim(format!("subband lengths differ: {} vs {}", low.len(), high.len())));
    }
    let (l, h) = f.taps();
    let mut out = Vec::with_capacity(2 * low.len());
    for (&a, &d) in low.iter().zip(high) {
        out.push(l[0] * a + h[0] * d);
        out.push(l[1] * a + h[1] * d);
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct WaveletCoeffs2D {
    pub ll: Matrix,
    pub lh: Matrix,
    pub hl: Matrix,
    pub hh: Matrix,
}

impl WaveletCoeffs2D {
    pub fn zeros(width: usize, height: usize) -> Self {
        let z = Matrix::new(width, height);
        Self { ll: z.clone(), lh: z.clone(), hl: z.clone(), hh: z }
    }

    pub fn energy(&self) -> f64 {
        self.bands().iter().map(|(_, m)| m.energy()).sum()
    }

    /// Subbands in `ll, lh, hl, hh` order with their names.
    pub fn bands(&self) -> [(&'static str, &Matrix); 4] {
        [("ll", &self.ll), ("lh", &self.lh), ("hl", &self.hl), ("hh", &self.hh)]
    }
}

fn check_even(width: usize, height: usize) -> Result<()> {
    if width == 0 || height == 0 || !width.is_multiple_of(2) || !height.is_multiple_of(2) {
        return Err(Error::dim(format!("spatial dims must be even and non-zero, got {width}x{height}")));
    }
    Ok(())
}

pub fn dwt2d(x: &Matrix, f: &WaveletFilters) -> Result<WaveletCoeffs2D> {
    let (w, h) = x.dims();
    check_even(w, h)?;
    let (l, hi) = f.taps();
    let mut c = WaveletCoeffs2D::zeros(w / 2, h / 2);
    for i in 0..h / 2 {
        let top = x.row(2 * i);
        let bot = x.row(2 * i + 1);
        for j in 0..w / 2 {
            let (a, b, cc, d) = (top[2 * j], top[2 * j + 1], bot[2 * j], bot[2 * j + 1]);
            // rows first, then columns
            let top_lo = l[0] * a + l[1] * b;
            let top_hi = hi[0] * a + hi[1] * b;
            let bot_lo = l[0] * cc + l[1] * d;
            let bot_hi = hi[0] * cc + hi[1] * d;
            *c.ll.get_mut(j, i) = l[0] * top_lo + l[1] * bot_lo;
            *c.lh.get_mut(j, i) = hi[0] * top_lo + hi[1] * bot_lo;
            *c.hl.get_mut(j, i) = l[0] * top_hi + l[1] * bot_hi;
            *c.hh.get_mut(j, i) = hi[0] * top_hi + hi[1] * bot_hi;
        }
    }
    Ok(c)
}

pub fn idwt2d(c: &WaveletCoeffs2D, f: &WaveletFilters) -> Result<Matrix> {
    let dims = c.ll.dims();
    if c.lh.dims() != dims || c.hl.dims() != dims || c.hh.dims() != dims {
        return Err(Error::dim("subband dimensions differ"));
    }
    let (w, h) = dims;
    let (l, hi) = f.taps();
    let mut x = Matrix::new(2 * w, 2 * h);
    for i in 0..h {
        for j in 0..w {
            let (ll, lh, hl, hh) = (*c.ll.get(j, i), *c.lh.get(j, i), *c.hl.get(j, i), *c.hh.get(j, i));
            // undo the column step, then the row step
            for (r, (lr, hr)) in [(l[0], hi[0]), (l[1], hi[1])].into_iter().enumerate() {
                let lo_row = lr * ll + hr * lh;
                let hi_row = lr * hl + hr * hh;
                for (s, (lc, hc)) in [(l[0], hi[0]), (l[1], hi[1])].into_iter().enumerate() {
                    *x.get_mut(2 * j + s, 2 * i + r) = lc * lo_row + hc * hi_row;
                }
            }
        }
    }
    Ok(x)
}

/// Low-pass subband of one row-major plane, written into `dst`
/// (`(width/2)·(height/2)` values). Dimensions must already be checked.
pub(crate) fn pool_plane(src: &[f64], width: usize, height: usize, f: &WaveletFilters, dst: &mut [f64]) {
    let (l, _) = f.taps();
    let (w00, w01, w10, w11) = (l[0] * l[0], l[0] * l[1], l[1] * l[0], l[1] * l[1]);
    let half_w = width / 2;
    for (i, out_row) in dst.chunks_exact_mut(half_w).take(height / 2).enumerate() {
        let top = &src[2 * i * width..(2 * i + 1) * width];
        let bot = &src[(2 * i + 1) * width..(2 * i + 2) * width];
        for (j, out) in out_row.iter_mut().enumerate() {
            *out = w00 * top[2 * j] + w01 * top[2 * j + 1] + w10 * bot[2 * j] + w11 * bot[2 * j + 1];
        }
    }
}

/// Keeps only the `ll` subband, halving both spatial dimensions.
pub fn wavelet_pool(x: &Matrix, f: &WaveletFilters) -> Result<Matrix> {
    let (w, h) = x.dims();
    check_even(w, h)?;
    let mut out = Matrix::new(w / 2, h / 2);
    pool_plane(x.as_slice(), w, h, f, out.as_mut_slice());
    Ok(out)
}

/// Applies [`wavelet_pool`] `levels` times.
pub fn wavelet_pool_levels(x: &Matrix, levels: usize, f: &WaveletFilters) -> Result<Matrix> {
    let mut cur = x.clone();
    for _ in 0..levels {
        cur = wavelet_pool(&cur, f)?;
    }
    Ok(cur)
}
