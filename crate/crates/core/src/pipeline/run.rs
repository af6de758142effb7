use std::fs;
use std::path::{Path, PathBuf};
use std::sync::mpsc::sync_channel;
use std::thread;
use std::time::Instant;

use crate::error::{Error, Result};
use crate::event_io::{
    polarity_matrix, slice_windows, slice_windows_from, Event, EventWindow, Micros, PolarityMatrix, SensorDims,
};
use crate::grid::{Grid, Matrix};
use crate::representation::{to_gray, GrayFrame, Representer};
use crate::wavelet::{dwt2d, wavelet_pool_levels, WaveletFilters};

use super::config::PipelineConfig;
use super::kv::{fmt_f64, KeyValues};
use super::metrics::psnr;
use super::noise::{inject_noise, NoiseModel};
use super::pgm::write_pgm;

pub const META_FILE: &str = "meta.txt";
pub const REPORT_FILE: &str = "report.txt";

pub fn frame_file_name(index: usize) -> String {
    format!("frame_{index:06}.pgm")
}

/// Multiplier mapping `levels`-deep pooled values back onto `[0, 255]`.
/// Each orthonormal Haar level doubles the range of a non-negative image.
pub fn pooled_rescale(levels: usize) -> f64 {
    0.5f64.powi(levels as i32)
}

/// Applies `levels` wavelet pools to an 8-bit frame and rescales the result
/// to 8 bits with the fixed factor of [`pooled_rescale`] (rounded, clamped).
pub fn pool_frame(frame: &GrayFrame, levels: usize, f: &WaveletFilters) -> Result<GrayFrame> {
    if levels == 0 {
        return Ok(frame.clone());
    }
    let pooled = wavelet_pool_levels(&frame.to_matrix(), levels, f)?;
    let scale = pooled_rescale(levels);
    Ok(GrayFrame::new(pooled.map(|&v| (v * scale).round().clamp(0.0, 255.0) as u8)))
}

/// Wall time per pipeline stage, microseconds.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct StageTimes {
    pub parse_us: f64,
    pub window_us: f64,
    pub accumulate_us: f64,
    pub quantize_us: f64,
    pub pool_us: f64,
    pub write_us: f64,
}

impl StageTimes {
    /// Representation and pooling work; parsing and output I/O excluded.
    pub fn compute_us(&self) -> f64 {
        self.window_us + self.accumulate_us + self.quantize_us + self.pool_us
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchmarkReport {
    pub stages: StageTimes,
    pub frames: usize,
    pub warmup_frames: usize,
    pub steady_frames: usize,
    /// Compute time of the steady-state frames.
    pub steady_us: f64,
    /// `steady_frames / steady_us`, per second.
    pub fps: f64,
    /// Same input with pooling disabled, when pooling was requested.
    pub fps_pool0: Option<f64>,
    pub wall_us: f64,
    pub config: KeyValues,
}

impl BenchmarkReport {
    fn fps_of(frames: usize, us: f64) -> f64 {
        if frames == 0 || us <= 0.0 {
            0.0
        } else {
            frames as f64 / (us * 1e-6)
        }
    }

    pub fn to_kv(&self) -> KeyValues {
        let s = &self.stages;
        let mut kv = KeyValues::new();
        kv.push("frames", self.frames)
            .push("warmup_frames", self.warmup_frames)
            .push("steady_frames", self.steady_frames)
            .push("steady_us", format!("{:.3}", self.steady_us))
            .push("fps", format!("{:.3}", self.fps));
        if let Some(f0) = self.fps_pool0 {
            kv.push("fps_pool0", format!("{f0:.3}"));
        }
        kv.push("wall_us", format!("{:.3}", self.wall_us))
            .push("stage.parse_us", format!("{:.3}", s.parse_us))
            .push("stage.window_us", format!("{:.3}", s.window_us))
            .push("stage.accumulate_us", format!("{:.3}", s.accumulate_us))
            .push("stage.quantize_us", format!("{:.3}", s.quantize_us))
            .push("stage.pool_us", format!("{:.3}", s.pool_us))
            .push("stage.write_us", format!("{:.3}", s.write_us));
        kv.extend(&self.config);
        kv
    }
}

#[derive(Debug, Clone)]
pub struct PipelineRun {
    pub frame_paths: Vec<PathBuf>,
    pub report: BenchmarkReport,
}

fn micros_since(t: Instant) -> f64 {
    t.elapsed().as_secs_f64() * 1e6
}

fn meta_for(cfg: &PipelineConfig, dims: SensorDims, windows: &[EventWindow]) -> KeyValues {
    let mut kv = cfg.echo(dims);
    kv.push("rescale_scale", pooled_rescale(cfg.pool_levels)).push("rescale_offset", 0).push("frames", windows.len());
    for (i, w) in windows.iter().enumerate() {
        let name = frame_file_name(i);
        kv.push(format!("{name}.window_index"), i)
            .push(format!("{name}.t_start_us"), w.t_start)
            .push(format!("{name}.t_end_us"), w.t_end)
            .push(format!("{name}.events"), w.events.len());
    }
    kv
}

fn write_frame(dir: &Path, index: usize, frame: &GrayFrame) -> Result<PathBuf> {
    let path = dir.join(frame_file_name(index));
    let file = fs::File::create(&path).map_err(|e| Error::io(format!("creating {}", path.display()), e))?;
    write_pgm(std::io::BufWriter::new(file), frame)?;
    Ok(path)
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::io(format!("writing {}", path.display()), e))
}

fn output_dir(cfg: &PipelineConfig) -> Result<Option<PathBuf>> {
    if cfg.no_write {
        return Ok(None);
    }
    let dir =
        cfg.out_dir.clone().ok_or_else(|| Error::Config("--out DIR is required unless --no-write is set".into()))?;
    fs::create_dir_all(&dir).map_err(|e| Error::io(format!("creating {}", dir.display()), e))?;
    Ok(Some(dir))
}

/// Frames for every window, computed sequentially in memory.
pub fn process_windows(windows: &[EventWindow], cfg: &PipelineConfig) -> Result<Vec<GrayFrame>> {
    let Some(first) = windows.first() else {
        return Ok(Vec::new());
    };
    let f = WaveletFilters::haar();
    let mut rep = Representer::new(first.dims, cfg.decay)?.with_reset_every(cfg.reset_every);
    windows.iter().map(|w| pool_frame(&rep.push_window(w)?, cfg.pool_levels, &f)).collect()
}

/// `convert`: events → windows → decayed frames → pooled frames → PGM files.
///
/// Runs as three stages joined by bounded channels: windowing, the
/// sequential accumulation fold, and pooling plus output. Frames are
/// produced strictly in window order.
pub fn run_pipeline(cfg: &PipelineConfig) -> Result<PipelineRun> {
    let wall = Instant::now();
    let t = Instant::now();
    let (events, dims) = cfg.load_events()?;
    let parse_us = micros_since(t);
    cfg.validate(dims)?;
    let out_dir = output_dir(cfg)?;

    let windows = slice_windows(&events, cfg.dt_us, dims)?;
    drop(events);
    let mut rep = Representer::new(dims, cfg.decay)?.with_reset_every(cfg.reset_every);
    let filters = WaveletFilters::haar();

    let (pmat_tx, pmat_rx) = sync_channel::<(PolarityMatrix, Micros)>(4);
    let (frame_tx, frame_rx) = sync_channel::<GrayFrame>(4);

    let (window_res, fold_res, out_res) = thread::scope(|s| {
        let windows = &windows;
        let producer = s.spawn(move || -> Result<f64> {
            let mut us = 0.0;
            for w in windows {
                let t = Instant::now();
                let pmat = polarity_matrix(w)?;
                us += micros_since(t);
                if pmat_tx.send((pmat, w.duration())).is_err() {
                    break;
                }
            }
            Ok(us)
        });

        let filters = &filters;
        let out_dir = out_dir.as_deref();
        let sink = s.spawn(move || -> Result<(f64, f64, Vec<PathBuf>)> {
            let (mut pool_us, mut write_us) = (0.0, 0.0);
            let mut paths = Vec::new();
            for (i, frame) in frame_rx.into_iter().enumerate() {
                let t = Instant::now();
                let out = pool_frame(&frame, cfg.pool_levels, filters)?;
                pool_us += micros_since(t);
                if let Some(dir) = out_dir {
                    let t = Instant::now();
                    paths.push(write_frame(dir, i, &out)?);
                    write_us += micros_since(t);
                }
            }
            Ok((pool_us, write_us, paths))
        });

        let fold = (|| -> Result<(f64, f64)> {
            let (mut acc_us, mut q_us) = (0.0, 0.0);
            for (pmat, dt) in pmat_rx {
                let t = Instant::now();
                rep.step(&pmat, dt)?;
                acc_us += micros_since(t);
                let t = Instant::now();
                let frame = to_gray(rep.surface(), rep.params());
                q_us += micros_since(t);
                if frame_tx.send(frame).is_err() {
                    break;
                }
            }
            drop(frame_tx);
            Ok((acc_us, q_us))
        })();

        (producer.join().expect("window stage panicked"), fold, sink.join().expect("output stage panicked"))
    });
    let window_us = window_res?;
    let (accumulate_us, quantize_us) = fold_res?;
    let (pool_us, write_us, frame_paths) = out_res?;

    let stages = StageTimes { parse_us, window_us, accumulate_us, quantize_us, pool_us, write_us };
    let frames = windows.len();
    let report = BenchmarkReport {
        stages,
        frames,
        warmup_frames: 0,
        steady_frames: frames,
        steady_us: stages.compute_us(),
        fps: BenchmarkReport::fps_of(frames, stages.compute_us()),
        fps_pool0: None,
        wall_us: micros_since(wall),
        config: cfg.echo(dims),
    };
    if let Some(dir) = &out_dir {
        write_text(&dir.join(META_FILE), &meta_for(cfg, dims, &windows).to_text())?;
        write_text(&dir.join(REPORT_FILE), &report.to_kv().to_text())?;
    }
    Ok(PipelineRun { frame_paths, report })
}

struct Pass {
    stages: StageTimes,
    per_frame_us: Vec<f64>,
}

/// One sequential timed pass over all windows.
fn timed_pass(
    windows: &[EventWindow],
    cfg: &PipelineConfig,
    pool_levels: usize,
    out_dir: Option<&Path>,
) -> Result<Pass> {
    let mut stages = StageTimes::default();
    let mut per_frame_us = Vec::with_capacity(windows.len());
    let Some(first) = windows.first() else {
        return Ok(Pass { stages, per_frame_us });
    };
    let f = WaveletFilters::haar();
    let mut rep = Representer::new(first.dims, cfg.decay)?.with_reset_every(cfg.reset_every);
    for (i, w) in windows.iter().enumerate() {
        let t0 = Instant::now();
        let pmat = polarity_matrix(w)?;
        let t1 = Instant::now();
        rep.step(&pmat, w.duration())?;
        let t2 = Instant::now();
        let frame = rep.frame();
        let t3 = Instant::now();
        let out = pool_frame(&frame, pool_levels, &f)?;
        let t4 = Instant::now();
        let d = |a: Instant, b: Instant| (b - a).as_secs_f64() * 1e6;
        stages.window_us += d(t0, t1);
        stages.accumulate_us += d(t1, t2);
        stages.quantize_us += d(t2, t3);
        stages.pool_us += d(t3, t4);
        per_frame_us.push(d(t0, t4));
        if let Some(dir) = out_dir {
            let t = Instant::now();
            write_frame(dir, i, &out)?;
            stages.write_us += micros_since(t);
        }
    }
    Ok(Pass { stages, per_frame_us })
}

fn steady(pass: &Pass, warmup: usize) -> (usize, f64) {
    let tail = &pass.per_frame_us[warmup.min(pass.per_frame_us.len())..];
    (tail.len(), tail.iter().sum())
}

/// `bench`: times every stage over `cfg.repeat` passes and reports the
/// fastest steady-state pass. With pooling enabled, an interleaved
/// pool-free baseline over the same windows is reported as `fps_pool0`.
pub fn benchmark(cfg: &PipelineConfig) -> Result<BenchmarkReport> {
    let wall = Instant::now();
    let t = Instant::now();
    let (events, dims) = cfg.load_events()?;
    let parse_us = micros_since(t);
    cfg.validate(dims)?;
    let out_dir = output_dir(cfg)?;
    let t = Instant::now();
    let windows = slice_windows(&events, cfg.dt_us, dims)?;
    let slice_us = micros_since(t);
    let frames = windows.len();
    let warmup = cfg.warmup.min(frames.saturating_sub(1));

    let mut best: Option<(Pass, f64)> = None;
    let mut best_base: Option<f64> = None;
    for rep in 0..cfg.repeat {
        // only the first pass writes output
        let dir = if rep == 0 { out_dir.as_deref() } else { None };
        let pass = timed_pass(&windows, cfg, cfg.pool_levels, dir)?;
        let (_, us) = steady(&pass, warmup);
        if best.as_ref().is_none_or(|(_, b)| us < *b) {
            best = Some((pass, us));
        }
        if cfg.pool_levels > 0 {
            let base = timed_pass(&windows, cfg, 0, None)?;
            let (_, us) = steady(&base, warmup);
            best_base = Some(best_base.map_or(us, |b: f64| b.min(us)));
        }
    }
    let (pass, steady_us) = best.expect("repeat >= 1");
    let steady_frames = frames - warmup;
    let mut stages = pass.stages;
    stages.parse_us = parse_us;
    stages.window_us += slice_us;
    let mut config = cfg.echo(dims);
    config.push("warmup", cfg.warmup).push("repeat", cfg.repeat).push("no_write", cfg.no_write);
    let report = BenchmarkReport {
        stages,
        frames,
        warmup_frames: warmup,
        steady_frames,
        steady_us,
        fps: BenchmarkReport::fps_of(steady_frames, steady_us),
        fps_pool0: best_base.map(|us| BenchmarkReport::fps_of(steady_frames, us)),
        wall_us: micros_since(wall),
        config,
    };
    if let Some(dir) = &out_dir {
        write_text(&dir.join(REPORT_FILE), &report.to_kv().to_text())?;
    }
    Ok(report)
}

#[derive(Debug, Clone, PartialEq)]
pub struct DenoiseReport {
    /// Per-window PSNR(clean, noisy) at full resolution.
    pub psnr_full: Vec<f64>,
    /// Per-window PSNR(pool(clean), pool(noisy)).
    pub psnr_pooled: Vec<f64>,
    pub pool_levels: usize,
    pub clean_events: usize,
    pub noise_events: usize,
    pub config: KeyValues,
}

/// Mean of the finite entries; the identical-frame sentinel when there are none.
pub fn finite_mean(series: &[f64]) -> f64 {
    let finite: Vec<f64> = series.iter().copied().filter(|v| v.is_finite()).collect();
    if finite.is_empty() {
        f64::INFINITY
    } else {
        finite.iter().sum::<f64>() / finite.len() as f64
    }
}

impl DenoiseReport {
    pub fn mean_full(&self) -> f64 {
        finite_mean(&self.psnr_full)
    }

    pub fn mean_pooled(&self) -> f64 {
        finite_mean(&self.psnr_pooled)
    }

    pub fn to_kv(&self) -> KeyValues {
        let join = |s: &[f64]| s.iter().map(|&v| fmt_f64(v)).collect::<Vec<_>>().join(",");
        let identical = |s: &[f64]| s.iter().filter(|v| v.is_infinite()).count();
        let mut kv = KeyValues::new();
        kv.push("windows", self.psnr_full.len())
            .push("eval_pool_levels", self.pool_levels)
            .push("clean_events", self.clean_events)
            .push("noise_events", self.noise_events)
            .push("mean_psnr_full_db", fmt_f64(self.mean_full()))
            .push("mean_psnr_pooled_db", fmt_f64(self.mean_pooled()))
            .push("identical_full", identical(&self.psnr_full))
            .push("identical_pooled", identical(&self.psnr_pooled))
            .push("psnr_full_db", join(&self.psnr_full))
            .push("psnr_pooled_db", join(&self.psnr_pooled));
        kv.extend(&self.config);
        kv
    }
}

/// Compares clean and noise-injected renderings of the same stream, at full
/// resolution and after wavelet pooling (`cfg.pool_levels`, at least 1).
pub fn evaluate_denoising(
    clean: &[Event],
    model: &NoiseModel,
    cfg: &PipelineConfig,
    dims: SensorDims,
) -> Result<DenoiseReport> {
    let levels = cfg.pool_levels.max(1);
    let eval_cfg = PipelineConfig { pool_levels: levels, ..cfg.clone() };
    eval_cfg.validate(dims)?;
    let clean_windows = slice_windows(clean, cfg.dt_us, dims)?;
    let origin = clean_windows.first().map_or(0, |w| w.t_start);
    let end = clean_windows.last().map_or(0, |w| w.t_end);
    let noisy = inject_noise(clean, model, dims, (origin, end))?;
    let noisy_windows = slice_windows_from(&noisy, cfg.dt_us, dims, origin, clean_windows.len())?;

    let no_pool = PipelineConfig { pool_levels: 0, ..cfg.clone() };
    let clean_frames = process_windows(&clean_windows, &no_pool)?;
    let noisy_frames = process_windows(&noisy_windows, &no_pool)?;
    let f = WaveletFilters::haar();
    let mut psnr_full = Vec::with_capacity(clean_frames.len());
    let mut psnr_pooled = Vec::with_capacity(clean_frames.len());
    for (c, n) in clean_frames.iter().zip(&noisy_frames) {
        psnr_full.push(psnr(c, n)?);
        psnr_pooled.push(psnr(&pool_frame(c, levels, &f)?, &pool_frame(n, levels, &f)?)?);
    }
    let mut config = cfg.echo(dims);
    config.push("noise_rate", model.rate_lambda).push("noise_seed", model.seed);
    Ok(DenoiseReport {
        psnr_full,
        psnr_pooled,
        pool_levels: levels,
        clean_events: clean.len(),
        noise_events: noisy.len() - clean.len(),
        config,
    })
}

/// One subband rescaled to 8 bits: `pixel = round((v - min) · scale)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SubbandImage {
    pub name: &'static str,
    pub frame: GrayFrame,
    pub min: f64,
    pub max: f64,
    pub scale: f64,
}

/// Single-level Haar decomposition of a frame, each subband stretched to
/// the full 8-bit range.
pub fn dwt_dump(frame: &GrayFrame) -> Result<Vec<SubbandImage>> {
    let coeffs = dwt2d(&frame.to_matrix(), &WaveletFilters::haar())?;
    Ok(coeffs.bands().into_iter().map(|(name, m)| rescale_band(name, m)).collect())
}

fn rescale_band(name: &'static str, m: &Matrix) -> SubbandImage {
    let (min, max) =
        m.as_slice().iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    let scale = if max > min { 255.0 / (max - min) } else { 0.0 };
    let pixels: Grid<u8> = m.map(|&v| ((v - min) * scale).round().clamp(0.0, 255.0) as u8);
    SubbandImage { name, frame: GrayFrame::new(pixels), min, max, scale }
}

/// Writes `<band>.pgm` files and a `meta.txt` with each band's rescale.
pub fn write_dwt_dump(bands: &[SubbandImage], dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(format!("creating {}", dir.display()), e))?;
    let mut kv = KeyValues::new();
    for b in bands {
        let path = dir.join(format!("{}.pgm", b.name));
        let file = fs::File::create(&path).map_err(|e| Error::io(format!("creating {}", path.display()), e))?;
        write_pgm(std::io::BufWriter::new(file), &b.frame)?;
        kv.push(format!("{}.min", b.name), b.min)
            .push(format!("{}.max", b.name), b.max)
            .push(format!("{}.scale", b.name), b.scale)
            .push(format!("{}.offset", b.name), -b.min);
    }
    write_text(&dir.join(META_FILE), &kv.to_text())
}
