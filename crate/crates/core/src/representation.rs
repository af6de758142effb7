//! Time-decay accumulation of polarity matrices into an intensity surface,
//! and its linear quantization to 8-bit gray frames.

use crate::error::{Error, Result};
use crate::event_io::{polarity_matrix, EventWindow, Micros, PolarityMatrix, SensorDims};
use crate::grid::Grid;

/// Decay is `max(0, 1 - k·dt)^b` with `dt` in microseconds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecayParams {
    /// Decay rate per microsecond; 0 disables decay.
    pub k: f64,
    /// Decay exponent.
    pub b: f64,
    /// Contrast step added per unit of polarity.
    pub c_thresh: f64,
    pub s_min: f64,
    pub s_max: f64,
}

impl Default for DecayParams {
    fn default() -> Self {
        Self { k: 1e-6, b: 1.0, c_thresh: 0.2, s_min: -1.0, s_max: 1.0 }
    }
}

impl DecayParams {
    pub fn validate(&self) -> Result<()> {
        let finite = [self.k, self.b, self.c_thresh, self.s_min, self.s_max].iter().all(|v| v.is_finite());
        if !finite {
            return Err(Error::param("decay parameters must be finite"));
        }
        if self.k < 0.0 {
            return Err(Error::param(format!("k must be >= 0, got {}", self.k)));
        }
        if self.b <= 0.0 {
            return Err(Error::param(format!("b must be > 0, got {}", self.b)));
        }
        if self.c_thresh <= 0.0 {
            return Err(Error::param(format!("contrast step must be > 0, got {}", self.c_thresh)));
        }
        if self.s_min >= self.s_max {
            return Err(Error::param(format!(
                "clip bounds must satisfy s_min < s_max, got ({}, {})",
                self.s_min, self.s_max
            )));
        }
        Ok(())
    }

    /// Initial surface level: zero, clamped into the clip range.
    pub fn initial_level(&self) -> f64 {
        0.0f64.clamp(self.s_min, self.s_max)
    }
}

/// Weight retained by the surface across one step of `dt` microseconds.
/// The base is clamped at zero so the result always lies in `[0, 1]`.
pub fn decay_factor(params: &DecayParams, dt: Micros) -> f64 {
    let base = (1.0 - params.k * dt as f64).max(0.0);
    base.powf(params.b)
}

#[derive(Debug, Clone, PartialEq)]
pub struct IntensitySurface {
    pub values: Grid<f64>,
    pub last_t: Micros,
}

impl IntensitySurface {
    pub fn new(dims: SensorDims, params: &DecayParams, t0: Micros) -> Self {
        Self { values: Grid::filled(dims.width, dims.height, params.initial_level()), last_t: t0 }
    }

    pub fn dims(&self) -> SensorDims {
        SensorDims::new(self.values.width(), self.values.height())
    }

    /// In-place form of [`accumulate`].
    pub fn accumulate_in_place(&mut self, pmat: &PolarityMatrix, params: &DecayParams, dt: Micros) -> Result<()> {
        if pmat.dims() != self.dims() {
            return Err(Error::dim(format!("polarity matrix is {}, surface is {}", pmat.dims(), self.dims())));
        }
        let d = decay_factor(params, dt);
        let (c, lo, hi) = (params.c_thresh, params.s_min, params.s_max);
        for (s, &p) in self.values.as_mut_slice().iter_mut().zip(pmat.values.as_slice()) {
            *s = ((*s + p as f64 * c) * d).clamp(lo, hi);
        }
        self.last_t += dt;
        Ok(())
    }
}

/// `new = clip((old + P·C)·d(dt), s_min, s_max)` per cell.
pub fn accumulate(
    surface: &IntensitySurface,
    pmat: &PolarityMatrix,
    params: &DecayParams,
    dt: Micros,
) -> Result<IntensitySurface> {
    let mut next = surface.clone();
    next.accumulate_in_place(pmat, params, dt)?;
    Ok(next)
}

/// 8-bit frame, row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GrayFrame {
    pub pixels: Grid<u8>,
}

impl GrayFrame {
    pub fn new(pixels: Grid<u8>) -> Self {
        Self { pixels }
    }

    pub fn width(&self) -> usize {
        self.pixels.width()
    }

    pub fn height(&self) -> usize {
        self.pixels.height()
    }

    pub fn to_matrix(&self) -> Grid<f64> {
        self.pixels.map(|&p| p as f64)
    }
}

#[inline]
pub fn quantize(s: f64, params: &DecayParams) -> u8 {
    // Normalize before scaling: (s_max - s_min) / (s_max - s_min) is exactly 1.
    let scaled = 255.0 * ((s - params.s_min) / (params.s_max - params.s_min));
    scaled.floor().clamp(0.0, 255.0) as u8
}

/// `floor(255·(S − s_min)/(s_max − s_min))`.
pub fn to_gray(surface: &IntensitySurface, params: &DecayParams) -> GrayFrame {
    GrayFrame::new(surface.values.map(|&s| quantize(s, params)))
}

/// Stateful fold of windows into frames, one frame per window.
#[derive(Debug, Clone)]
pub struct Representer {
    params: DecayParams,
    surface: IntensitySurface,
    reset_every: Option<usize>,
    steps: usize,
}

impl Representer {
    pub fn new(dims: SensorDims, params: DecayParams) -> Result<Self> {
        params.validate()?;
        Ok(Self { surface: IntensitySurface::new(dims, &params, 0), params, reset_every: None, steps: 0 })
    }

    /// Reinitialize the surface before every `n`-th window (`n > 0`).
    pub fn with_reset_every(mut self, n: Option<usize>) -> Self {
        self.reset_every = n.filter(|&n| n > 0);
        self
    }

    pub fn params(&self) -> &DecayParams {
        &self.params
    }

    pub fn surface(&self) -> &IntensitySurface {
        &self.surface
    }

    /// Advances the surface by one window of length `dt`.
    pub fn step(&mut self, pmat: &PolarityMatrix, dt: Micros) -> Result<()> {
        if let Some(n) = self.reset_every {
            if self.steps > 0 && self.steps.is_multiple_of(n) {
                let t = self.surface.last_t;
                self.surface = IntensitySurface::new(self.surface.dims(), &self.params, t);
            }
        }
        self.surface.accumulate_in_place(pmat, &self.params, dt)?;
        self.steps += 1;
        Ok(())
    }

    pub fn frame(&self) -> GrayFrame {
        to_gray(&self.surface, &self.params)
    }

    pub fn push_window(&mut self, window: &EventWindow) -> Result<GrayFrame> {
        let pmat = polarity_matrix(window)?;
        self.step(&pmat, window.duration())?;
        Ok(self.frame())
    }
}

pub fn run_representation(windows: &[EventWindow], params: &DecayParams) -> Result<Vec<GrayFrame>> {
    run_representation_with_reset(windows, params, None)
}

pub fn run_representation_with_reset(
    windows: &[EventWindow],
    params: &DecayParams,
    reset_every: Option<usize>,
) -> Result<Vec<GrayFrame>> {
    let Some(first) = windows.first() else {
        return Ok(Vec::new());
    };
    let dims = first.dims;
    let mut rep = Representer::new(dims, *params)?.with_reset_every(reset_every);
    rep.surface.last_t = first.t_start;
    windows
        .iter()
        .map(|w| {
            if w.dims != dims {
                return Err(Error::dim(format!("window dims {} differ from stream dims {dims}", w.dims)));
            }
            rep.push_window(w)
        })
        .collect()
}
