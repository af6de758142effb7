use crate::error::{Error, Result};
use crate::representation::GrayFrame;

/// Returned by [`psnr`] for identical frames.
pub const PSNR_IDENTICAL: f64 = f64::INFINITY;

pub fn mse(a: &GrayFrame, b: &GrayFrame) -> Result<f64> {
    if a.pixels.dims() != b.pixels.dims() {
        return Err(Error::dim(format!("frames are {:?} and {:?}", a.pixels.dims(), b.pixels.dims())));
    }
    let n = a.pixels.as_slice().len();
    if n == 0 {
        return Ok(0.0);
    }
    let sum: u64 = a
        .pixels
        .as_slice()
        .iter()
        .zip(b.pixels.as_slice())
        .map(|(&x, &y)| {
            let d = x as i64 - y as i64;
            (d * d) as u64
        })
        .sum();
    Ok(sum as f64 / n as f64)
}

/// Peak signal-to-noise ratio in dB for 8-bit frames; [`PSNR_IDENTICAL`]
/// when the frames are equal.
pub fn psnr(a: &GrayFrame, b: &GrayFrame) -> Result<f64> {
    let m = mse(a, b)?;
    if m == 0.0 {
        return Ok(PSNR_IDENTICAL);
    }
    Ok(10.0 * (255.0f64 * 255.0 / m).log10())
}
