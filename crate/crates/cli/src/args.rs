use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use lads::config::{Dataset, ErRatioMode, Method};
use lads::events::{EventFormat, Frequency, PolarityConvention, SceneKind};

#[derive(Debug, Parser)]
#[command(name = "lads", version, about = "Dense surfaces from event-camera streams")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Convert an event stream into a tensor of clipped surfaces.
    Convert(ConvertArgs),
    /// Write surfaces (and optionally decay heatmaps) as PNG files.
    Render(RenderArgs),
    /// Validate face annotations, repair boxes and cut clean clips.
    Filter(FilterArgs),
    /// Time every representation on a synthetic scene.
    Bench(BenchArgs),
    /// Landmark NME and detection mAP50 from JSON-lines files.
    Metrics(MetricsArgs),
    /// Serve the parameter-tuning HTTP API.
    Serve(ServeArgs),
    /// Write a synthetic event stream.
    Synth(SynthArgs),
}

#[derive(Debug, Args)]
pub struct StreamArgs {
    /// Event file (`.csv` or packed binary).
    pub input: PathBuf,
    /// Input format; guessed from the extension when omitted.
    #[arg(long)]
    pub format: Option<EventFormat>,
    /// Sensor width for CSV input (binary files carry their own).
    #[arg(long, default_value_t = 480)]
    pub width: usize,
    #[arg(long, default_value_t = 360)]
    pub height: usize,
    /// `signed` (-1/1) or `zero_one` (0/1).
    #[arg(long, default_value = "signed")]
    pub polarity: PolarityConvention,
    /// Window rate: `30`, `29.97` or `30000/1001`.
    #[arg(long, default_value = "30")]
    pub hz: Frequency,
    /// Window origin in microseconds.
    #[arg(long, default_value_t = 0, allow_negative_numbers = true)]
    pub t0: i64,
}

#[derive(Debug, Args)]
pub struct ReprArgs {
    /// histogram, global_li, lads_er, lads_log or lads_fft.
    #[arg(long)]
    pub method: Method,
    /// Preset row to start from: fes or blink.
    #[arg(long, default_value = "fes")]
    pub dataset: Dataset,
    /// `key = value` overrides, applied before the flags below.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, allow_negative_numbers = true)]
    pub tau: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub lambda0: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub a: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub sigma: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub r: Option<f64>,
    #[arg(long = "t-d", allow_negative_numbers = true)]
    pub t_d: Option<f64>,
    #[arg(long)]
    pub patch_divisor: Option<usize>,
    #[arg(long, allow_negative_numbers = true)]
    pub clip: Option<f64>,
    /// prose or printed.
    #[arg(long)]
    pub er_ratio_mode: Option<ErRatioMode>,
    /// Use one minus the high-frequency fraction as the FFT decay.
    #[arg(long)]
    pub fft_invert: bool,
    /// Score every minimum-size patch instead of subdividing.
    #[arg(long)]
    pub no_fft_recursive: bool,
    /// Score patches on all cores.
    #[arg(long)]
    pub parallel: bool,
}

#[derive(Debug, Args)]
pub struct ConvertArgs {
    #[command(flatten)]
    pub stream: StreamArgs,
    #[command(flatten)]
    pub repr: ReprArgs,
    /// Output directory.
    pub output: PathBuf,
    /// Also write one grayscale PNG per frame under `frames/`.
    #[arg(long)]
    pub png: bool,
}

#[derive(Debug, Args)]
pub struct RenderArgs {
    #[command(flatten)]
    pub stream: StreamArgs,
    #[command(flatten)]
    pub repr: ReprArgs,
    /// Output directory.
    pub output: PathBuf,
    /// Frames to write as `start:end` (post-warm-up indices, end exclusive).
    #[arg(long)]
    pub frames: Option<String>,
    /// Also write the decay map of each frame.
    #[arg(long)]
    pub heatmap: bool,
    /// Outline patches (or quadtree leaves) on the heatmap.
    #[arg(long)]
    pub grid: bool,
}

#[derive(Debug, Args)]
pub struct FilterArgs {
    /// Annotation file (`.jsonl` or `.csv`).
    pub input: PathBuf,
    /// Output directory for report.json, exclusions.csv and clips.csv.
    pub output: PathBuf,
    /// Annotation rate.
    #[arg(long, default_value = "30")]
    pub hz: Frequency,
    /// jsonl or csv; guessed from the extension when omitted.
    #[arg(long)]
    pub format: Option<String>,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    /// Comma-separated methods (default: all six representations).
    #[arg(long)]
    pub methods: Option<String>,
    /// Comma-separated window rates.
    #[arg(long, default_value = "30,240")]
    pub hz: String,
    #[arg(long, default_value_t = 5)]
    pub warmup: usize,
    /// Measured windows per method and rate (at least 30).
    #[arg(long, default_value_t = 60)]
    pub windows: usize,
    #[arg(long, default_value_t = 0x1ad5)]
    pub seed: u64,
    #[arg(long, default_value_t = 480)]
    pub width: usize,
    #[arg(long, default_value_t = 360)]
    pub height: usize,
    #[arg(long, default_value = "fes")]
    pub dataset: Dataset,
    /// Also time the multi-core patch path.
    #[arg(long)]
    pub parallel: bool,
    /// Directory for bench.csv and bench.json.
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct MetricsArgs {
    /// Detections: `{"image", "box", "confidence"}` per line.
    #[arg(long, requires = "boxes")]
    pub detections: Option<PathBuf>,
    /// Ground-truth boxes: `{"image", "box"}` per line.
    #[arg(long, requires = "detections")]
    pub boxes: Option<PathBuf>,
    /// Landmark predictions: `{"id", "points", "crop_w", "crop_h"}` per line.
    #[arg(long, requires = "landmarks_gt")]
    pub landmarks: Option<PathBuf>,
    /// Ground-truth landmarks: `{"id", "points"}` per line.
    #[arg(long, requires = "landmarks")]
    pub landmarks_gt: Option<PathBuf>,
    /// Write the summary JSON here as well as to stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    #[command(flatten)]
    pub stream: StreamArgs,
    /// Preset row used when a request names none.
    #[arg(long, default_value = "fes")]
    pub dataset: Dataset,
    #[arg(long, default_value = "127.0.0.1")]
    pub host: String,
    #[arg(long, default_value_t = 8080)]
    pub port: u16,
    /// Rendered frames kept in memory.
    #[arg(long, default_value_t = 512)]
    pub cache_frames: usize,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    /// moving_edge, blink, static_noise, hot_pixel or benchmark.
    #[arg(long)]
    pub scene: String,
    /// Seconds.
    #[arg(long, default_value_t = 1.0)]
    pub duration: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 480)]
    pub width: usize,
    #[arg(long, default_value_t = 360)]
    pub height: usize,
    #[arg(long)]
    pub format: Option<EventFormat>,
    #[arg(long, default_value = "signed")]
    pub polarity: PolarityConvention,
    pub output: PathBuf,
}

impl SynthArgs {
    /// `None` selects the benchmark composite.
    pub fn scene_kind(&self) -> Result<Option<SceneKind>, String> {
        if self.scene == "benchmark" {
            return Ok(None);
        }
        self.scene.parse().map(Some)
    }
}
