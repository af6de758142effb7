use std::fs::File;
use std::path::PathBuf;

use crate::error::{Error, Result};
use crate::event_io::{parse_events, Event, EventFormat, Micros, ParseOptions, SensorDims};
use crate::representation::DecayParams;

use super::kv::KeyValues;
use super::noise::RNG_ALGORITHM;

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    pub input: PathBuf,
    pub format: EventFormat,
    /// Required for CSV input; taken from the header for binary input.
    pub dims: Option<SensorDims>,
    pub dt_us: Micros,
    pub decay: DecayParams,
    pub pool_levels: usize,
    pub out_dir: Option<PathBuf>,
    pub seed: u64,
    /// Noise events per pixel per second (noise evaluation only).
    pub noise_rate: f64,
    pub no_write: bool,
    pub strict: bool,
    pub polarity01: bool,
    pub reset_every: Option<usize>,
    /// Benchmark windows excluded from the steady-state rate.
    pub warmup: usize,
    /// Benchmark passes; the fastest steady-state pass is reported.
    pub repeat: usize,
}

impl PipelineConfig {
    pub fn new(input: impl Into<PathBuf>, format: EventFormat, dt_us: Micros) -> Self {
        Self {
            input: input.into(),
            format,
            dims: None,
            dt_us,
            decay: DecayParams::default(),
            pool_levels: 0,
            out_dir: None,
            seed: 0,
            noise_rate: 0.0,
            no_write: false,
            strict: false,
            polarity01: false,
            reset_every: None,
            warmup: 3,
            repeat: 3,
        }
    }

    /// Checks everything that does not depend on the input file contents.
    pub fn validate(&self, dims: SensorDims) -> Result<()> {
        if self.dt_us == 0 {
            return Err(Error::Config("--dt-us must be > 0".into()));
        }
        self.decay.validate().map_err(|e| Error::Config(e.to_string()))?;
        if dims.width == 0 || dims.height == 0 {
            return Err(Error::Config(format!("sensor dims must be non-zero, got {dims}")));
        }
        let (mut w, mut h) = (dims.width, dims.height);
        for level in 0..self.pool_levels {
            if w % 2 != 0 || h % 2 != 0 {
                return Err(Error::Config(format!("pool level {} needs even dims, frame is {w}x{h} there", level + 1)));
            }
            w /= 2;
            h /= 2;
        }
        if !(self.noise_rate >= 0.0 && self.noise_rate.is_finite()) {
            return Err(Error::Config("--noise-rate must be finite and >= 0".into()));
        }
        if self.repeat == 0 {
            return Err(Error::Config("--repeat must be >= 1".into()));
        }
        Ok(())
    }

    pub fn parse_options(&self) -> ParseOptions {
        ParseOptions { dims: self.dims, polarity01: self.polarity01, strict: self.strict }
    }

    /// Reads and parses the configured input file.
    pub fn load_events(&self) -> Result<(Vec<Event>, SensorDims)> {
        let file = File::open(&self.input).map_err(|e| Error::io(format!("opening {}", self.input.display()), e))?;
        let parsed = parse_events(file, self.format, &self.parse_options())?;
        let dims = parsed.dims.ok_or_else(|| Error::Config("--dims WxH is required for CSV input".into()))?;
        Ok((parsed.events, dims))
    }

    /// Parameter echo written into sidecars and reports.
    pub fn echo(&self, dims: SensorDims) -> KeyValues {
        let mut kv = KeyValues::new();
        kv.push("dims", dims)
            .push("dt_us", self.dt_us)
            .push("k", self.decay.k)
            .push("b", self.decay.b)
            .push("c_thresh", self.decay.c_thresh)
            .push("s_min", self.decay.s_min)
            .push("s_max", self.decay.s_max)
            .push("pool_levels", self.pool_levels)
            .push("reset_every", self.reset_every.map_or("none".to_string(), |n| n.to_string()))
            .push("seed", self.seed)
            .push("rng", RNG_ALGORITHM);
        kv
    }
}
