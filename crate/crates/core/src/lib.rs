//! Event-camera preprocessing and the building blocks of a wavelet-denoised
//! detection backbone.
//!
//! * [`event_io`]: event records, CSV/binary formats, time windows.
//! * [`representation`]: time-decay intensity surface and 8-bit frames.
//! * [`wavelet`]: orthonormal Haar DWT/IDWT and wavelet pooling.
//! * [`nn`]: conv2d, RepConv fusion, channel split/shuffle, DRCB, WP block.
//! * [`query_select`]: uncertainty-minimal query selection.
//! * [`pipeline`]: the streaming driver behind the `evwave` binary.

pub mod error;
pub mod event_io;
pub mod grid;
pub mod nn;
pub mod pipeline;
pub mod query_select;
pub mod representation;
pub mod wavelet;

pub use error::{Error, Result};
pub use event_io::{Event, EventFormat, EventWindow, Polarity, PolarityMatrix, SensorDims};
pub use grid::{Grid, Matrix};
pub use representation::{DecayParams, GrayFrame, IntensitySurface};
pub use wavelet::{WaveletCoeffs2D, WaveletFilters};
