use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use evwave::event_io::{slice_windows, write_binary, write_csv, EventFormat, SensorDims};
use evwave::pipeline::{
    benchmark, dwt_dump, evaluate_denoising, inject_noise, pgm, process_windows, run_pipeline, synth::MovingSquare,
    write_dwt_dump, NoiseModel, PipelineConfig, META_FILE, REPORT_FILE,
};
use evwave::representation::DecayParams;
use evwave::{Error, Result};

#[derive(Parser)]
#[command(name = "evwave", version, about = "Event streams to time-decayed, wavelet-pooled gray frames")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Render one PGM frame per time window.
    Convert(StreamArgs),
    /// Compare clean and noise-injected frames by PSNR, with and without pooling.
    NoiseEval {
        #[command(flatten)]
        stream: StreamArgs,
        /// Injected noise, events per pixel per second.
        #[arg(long, default_value_t = 1.0)]
        noise_rate: f64,
    },
    /// Time every stage and report steady-state frames per second.
    Bench {
        #[command(flatten)]
        stream: StreamArgs,
        /// Leading windows excluded from the steady-state rate.
        #[arg(long, default_value_t = 3)]
        warmup: usize,
        /// Timed passes; the fastest is reported.
        #[arg(long, default_value_t = 3)]
        repeat: usize,
    },
    /// Write the four Haar subbands of a frame as PGM images.
    DwtDump {
        /// A P5 PGM frame, or an event file rendered with the stream options.
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Window to decompose when the input is an event file (default: last).
        #[arg(long)]
        window: Option<usize>,
        #[arg(long)]
        format: Option<String>,
        #[arg(long)]
        dims: Option<String>,
        #[arg(long)]
        dt_us: Option<u64>,
        #[arg(long)]
        polarity01: bool,
    },
    /// Write a synthetic moving-square event stream.
    Synth {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value = "bin")]
        format: String,
        #[arg(long, default_value = "128x128")]
        dims: String,
        #[arg(long, default_value_t = 10_000)]
        dt_us: u64,
        #[arg(long, default_value_t = 100)]
        windows: usize,
        /// Square side in pixels (default: a fifth of the shorter side).
        #[arg(long)]
        size: Option<usize>,
        /// Pixels moved per window.
        #[arg(long, default_value_t = 2)]
        speed: usize,
        /// Background noise, events per pixel per second.
        #[arg(long, default_value_t = 0.0)]
        noise_rate: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

#[derive(Args, Clone)]
struct StreamArgs {
    #[arg(long)]
    input: PathBuf,
    /// csv or bin
    #[arg(long, default_value = "csv")]
    format: String,
    /// Sensor size WxH (required for CSV input).
    #[arg(long)]
    dims: Option<String>,
    /// Window duration in microseconds.
    #[arg(long)]
    dt_us: u64,
    /// Decay rate per microsecond.
    #[arg(long, default_value_t = 1e-6)]
    k: f64,
    /// Decay exponent.
    #[arg(long, default_value_t = 1.0)]
    b: f64,
    /// Contrast step per unit polarity.
    #[arg(long, default_value_t = 0.2)]
    c_thresh: f64,
    #[arg(long, default_value_t = -1.0, allow_negative_numbers = true)]
    smin: f64,
    #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
    smax: f64,
    #[arg(long, default_value_t = 0)]
    pool_levels: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Skip writing frames.
    #[arg(long)]
    no_write: bool,
    /// Reject decreasing timestamps while parsing.
    #[arg(long)]
    strict: bool,
    /// Read polarity 0 as -1.
    #[arg(long)]
    polarity01: bool,
    /// Reinitialize the surface every N windows.
    #[arg(long)]
    reset_every: Option<usize>,
}

impl StreamArgs {
    fn config(&self) -> Result<PipelineConfig> {
        let mut cfg = PipelineConfig::new(&self.input, self.format.parse()?, self.dt_us);
        cfg.dims = self.dims.as_deref().map(str::parse).transpose()?;
        cfg.decay = DecayParams { k: self.k, b: self.b, c_thresh: self.c_thresh, s_min: self.smin, s_max: self.smax };
        cfg.pool_levels = self.pool_levels;
        cfg.seed = self.seed;
        cfg.out_dir = self.out.clone();
        cfg.no_write = self.no_write;
        cfg.strict = self.strict;
        cfg.polarity01 = self.polarity01;
        cfg.reset_every = self.reset_every;
        Ok(cfg)
    }
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::Io { context: format!("writing {}", path.display()), source: e })
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Convert(args) => {
            let run = run_pipeline(&args.config()?)?;
            print!("{}", run.report.to_kv().to_text());
        }
        Command::NoiseEval { stream, noise_rate } => {
            let mut cfg = stream.config()?;
            cfg.noise_rate = noise_rate;
            let (events, dims) = cfg.load_events()?;
            let model = NoiseModel::new(noise_rate, cfg.seed).map_err(|e| Error::Config(e.to_string()))?;
            let report = evaluate_denoising(&events, &model, &cfg, dims)?;
            let text = report.to_kv().to_text();
            if let Some(dir) = cfg.out_dir.as_deref().filter(|_| !cfg.no_write) {
                fs::create_dir_all(dir)
                    .map_err(|e| Error::Io { context: format!("creating {}", dir.display()), source: e })?;
                write_text(&dir.join(REPORT_FILE), &text)?;
            }
            print!("{text}");
        }
        Command::Bench { stream, warmup, repeat } => {
            let mut cfg = stream.config()?;
            cfg.warmup = warmup;
            cfg.repeat = repeat;
            print!("{}", benchmark(&cfg)?.to_kv().to_text());
        }
        Command::DwtDump { input, out, window, format, dims, dt_us, polarity01 } => {
            let is_pgm = input.extension().is_some_and(|e| e.eq_ignore_ascii_case("pgm"));
            let frame = if is_pgm && format.is_none() {
                let file = File::open(&input)
                    .map_err(|e| Error::Io { context: format!("opening {}", input.display()), source: e })?;
                pgm::read_pgm(file)?
            } else {
                let format: EventFormat = format.as_deref().unwrap_or("csv").parse()?;
                let dt = dt_us.ok_or_else(|| Error::Config("--dt-us is required for event input".into()))?;
                let mut cfg = PipelineConfig::new(&input, format, dt);
                cfg.dims = dims.as_deref().map(str::parse).transpose()?;
                cfg.polarity01 = polarity01;
                let (events, dims) = cfg.load_events()?;
                cfg.validate(dims)?;
                let windows = slice_windows(&events, dt, dims)?;
                let idx = window.unwrap_or(windows.len().saturating_sub(1));
                if idx >= windows.len() {
                    return Err(Error::Config(format!("window {idx} out of range ({} windows)", windows.len())));
                }
                process_windows(&windows[..=idx], &cfg)?.pop().expect("non-empty")
            };
            let bands = dwt_dump(&frame)?;
            write_dwt_dump(&bands, &out)?;
            println!("wrote {} subbands and {META_FILE} to {}", bands.len(), out.display());
        }
        Command::Synth { out, format, dims, dt_us, windows, size, speed, noise_rate, seed } => {
            let format: EventFormat = format.parse()?;
            let dims: SensorDims = dims.parse()?;
            let mut scene = MovingSquare::new(dims, windows, dt_us);
            if let Some(s) = size {
                scene.size = s;
            }
            scene.speed = speed;
            let mut events = scene.events()?;
            if noise_rate > 0.0 {
                let model = NoiseModel::new(noise_rate, seed).map_err(|e| Error::Config(e.to_string()))?;
                events = inject_noise(&events, &model, dims, (0, dt_us * windows as u64))?;
            }
            let file = File::create(&out)
                .map_err(|e| Error::Io { context: format!("creating {}", out.display()), source: e })?;
            let sink = BufWriter::new(file);
            match format {
                EventFormat::Csv => write_csv(sink, &events)?,
                EventFormat::Binary => write_binary(sink, dims, &events)?,
            }
            println!("wrote {} events to {}", events.len(), out.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
