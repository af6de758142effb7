use crate::error::{Error, Result};
use crate::wavelet::{pool_plane, WaveletFilters};

/// Dense `(batch, channels, height, width)` array, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor {
    shape: [usize; 4],
    data: Vec<f64>,
}

impl Tensor {
    pub fn zeros(shape: [usize; 4]) -> Result<Self> {
        check_shape(shape)?;
        Ok(Self { shape, data: vec![0.0; shape.iter().product()] })
    }

    pub fn from_vec(shape: [usize; 4], data: Vec<f64>) -> Result<Self> {
        check_shape(shape)?;
        let n: usize = shape.iter().product();
        if data.len() != n {
            return Err(Error::dim(format!("{} values do not fit shape {:?}", data.len(), shape)));
        }
        Ok(Self { shape, data })
    }

    pub fn from_fn(shape: [usize; 4], mut f: impl FnMut([usize; 4]) -> f64) -> Result<Self> {
        let mut t = Self::zeros(shape)?;
        let [n, c, h, w] = shape;
        let mut i = 0;
        for b in 0..n {
            for ch in 0..c {
                for y in 0..h {
                    for x in 0..w {
                        t.data[i] = f([b, ch, y, x]);
                        i += 1;
                    }
                }
            }
        }
        Ok(t)
    }

    #[inline]
    pub fn shape(&self) -> [usize; 4] {
        self.shape
    }

    #[inline]
    pub fn batch(&self) -> usize {
        self.shape[0]
    }

    #[inline]
    pub fn channels(&self) -> usize {
        self.shape[1]
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.shape[2]
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.shape[3]
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    #[inline]
    pub fn index(&self, b: usize, c: usize, y: usize, x: usize) -> usize {
        let [_, ch, h, w] = self.shape;
        ((b * ch + c) * h + y) * w + x
    }

    #[inline]
    pub fn at(&self, b: usize, c: usize, y: usize, x: usize) -> f64 {
        self.data[self.index(b, c, y, x)]
    }

    /// One `(batch, channel)` spatial plane.
    pub fn plane(&self, b: usize, c: usize) -> &[f64] {
        let hw = self.shape[2] * self.shape[3];
        let start = (b * self.shape[1] + c) * hw;
        &self.data[start..start + hw]
    }

    pub fn plane_mut(&mut self, b: usize, c: usize) -> &mut [f64] {
        let hw = self.shape[2] * self.shape[3];
        let start = (b * self.shape[1] + c) * hw;
        &mut self.data[start..start + hw]
    }

    pub fn add(&self, other: &Tensor) -> Result<Tensor> {
        if self.shape != other.shape {
            return Err(Error::dim(format!("cannot add {:?} and {:?}", self.shape, other.shape)));
        }
        let data = self.data.iter().zip(&other.data).map(|(a, b)| a + b).collect();
        Ok(Tensor { shape: self.shape, data })
    }

    pub fn scale(&self, s: f64) -> Tensor {
        Tensor { shape: self.shape, data: self.data.iter().map(|v| v * s).collect() }
    }

    pub fn max_abs_diff(&self, other: &Tensor) -> f64 {
        self.data.iter().zip(&other.data).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
    }
}

fn check_shape(shape: [usize; 4]) -> Result<()> {
    if shape.contains(&0) {
        return Err(Error::dim(format!("tensor dims must be >= 1, got {shape:?}")));
    }
    Ok(())
}

/// Wavelet pooling applied independently to every `(batch, channel)` plane.
pub fn wavelet_pool_tensor(x: &Tensor, f: &WaveletFilters) -> Result<Tensor> {
    let [n, c, h, w] = x.shape();
    if h % 2 != 0 || w % 2 != 0 {
        return Err(Error::dim(format!("spatial dims must be even for wavelet pooling, got {h}x{w}")));
    }
    let mut out = Tensor::zeros([n, c, h / 2, w / 2])?;
    for b in 0..n {
        for ch in 0..c {
            pool_plane(x.plane(b, ch), w, h, f, out.plane_mut(b, ch));
        }
    }
    Ok(out)
}
