//! End-to-end driver: parsing, windowing, representation, pooling, output,
//! plus the noise-injection evaluator and the throughput benchmark.

mod config;
pub mod kv;
mod metrics;
mod noise;
pub mod pgm;
mod run;
pub mod synth;

pub use config::PipelineConfig;
pub use metrics::{mse, psnr, PSNR_IDENTICAL};
pub use noise::{inject_noise, seeded_rng, NoiseModel, RNG_ALGORITHM};
pub use run::{
    benchmark, dwt_dump, evaluate_denoising, finite_mean, frame_file_name, pool_frame, pooled_rescale, process_windows,
    run_pipeline, write_dwt_dump, BenchmarkReport, DenoiseReport, PipelineRun, StageTimes, SubbandImage, META_FILE,
    REPORT_FILE,
};
