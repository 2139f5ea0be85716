use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;

use anyhow::{anyhow, Context};
use lads::annotations::{self, AnnotationError};
use lads::bench::{self, BenchError, BenchMethod, BenchOptions};
use lads::config::{ConfigError, RepresentationConfig};
use lads::events::{
    benchmark_scene, read_event_stream, synthesize_stream, window_stream, write_event_file,
    EventFormat, EventStream, Frequency, ReadOptions, SensorGeometry,
};
use lads::grid::{Grid, Rect};
use lads::manifest::{FrameRange, RunManifest};
use lads::metrics::{self, DetectionRecord, LandmarkRecord, MetricsError, MetricsSummary};
use lads::render;
use lads::surfaces::{Pipeline, StepOutput, SurfaceError, WARM_UP_WINDOWS};
use lads::tensor::TensorWriter;

use crate::args::*;
use crate::Failure;

pub fn dispatch(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Convert(a) => convert(a),
        Command::Render(a) => render_frames(a),
        Command::Filter(a) => filter(a),
        Command::Bench(a) => bench(a),
        Command::Metrics(a) => metrics_cmd(a),
        Command::Serve(a) => crate::server::serve(a),
        Command::Synth(a) => synth(a),
    }
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        Failure::invalid(e)
    }
}

impl From<SurfaceError> for Failure {
    fn from(e: SurfaceError) -> Self {
        match e {
            SurfaceError::Event(e) => e.into(),
            other => Failure::invalid(other),
        }
    }
}

impl From<AnnotationError> for Failure {
    fn from(e: AnnotationError) -> Self {
        match e {
            AnnotationError::Io(_) => Failure::io(e),
            other => Failure::invalid(other),
        }
    }
}

impl From<MetricsError> for Failure {
    fn from(e: MetricsError) -> Self {
        match e {
            MetricsError::Io(_) => Failure::io(e),
            other => Failure::invalid(other),
        }
    }
}

impl From<BenchError> for Failure {
    fn from(e: BenchError) -> Self {
        match e {
            BenchError::UnknownMethod(_) | BenchError::TooFewWindows(_) | BenchError::Empty => {
                Failure::Usage(e.to_string())
            }
            BenchError::Io(_) => Failure::io(e),
            BenchError::Event(e) => e.into(),
            other => Failure::invalid(other),
        }
    }
}

fn create_dir(dir: &Path) -> Result<(), Failure> {
    fs::create_dir_all(dir)
        .with_context(|| format!("creating {}", dir.display()))
        .map_err(Failure::io)
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<(), Failure> {
    fs::write(path, bytes)
        .with_context(|| format!("writing {}", path.display()))
        .map_err(Failure::io)
}

pub(crate) fn open_stream(args: &StreamArgs) -> Result<(EventStream, EventFormat), Failure> {
    let format = args
        .format
        .unwrap_or_else(|| EventFormat::from_path(&args.input));
    let geometry = SensorGeometry::new(args.width, args.height)?;
    let stream = read_event_stream(
        &args.input,
        format,
        ReadOptions {
            geometry: Some(geometry),
            polarity: args.polarity,
        },
    )
    .map_err(|e| match Failure::from(e) {
        Failure::Io(e) => Failure::Io(e.context(format!("opening {}", args.input.display()))),
        other => other,
    })?;
    Ok((stream, format))
}

/// Preset row, then the config file, then individual flags.
fn build_config(args: &ReprArgs, frequency: Frequency) -> Result<RepresentationConfig, Failure> {
    let mut cfg = RepresentationConfig::from_preset(args.method, args.dataset, frequency.as_f64());
    if let Some(path) = &args.config {
        let text = fs::read_to_string(path)
            .with_context(|| format!("reading {}", path.display()))
            .map_err(Failure::io)?;
        cfg.apply_overrides(&text)?;
    }
    let floats = [
        ("tau", args.tau),
        ("lambda0", args.lambda0),
        ("a", args.a),
        ("sigma", args.sigma),
        ("r", args.r),
        ("t_d", args.t_d),
        ("clip", args.clip),
    ];
    for (key, value) in floats {
        if let Some(v) = value {
            cfg.set(key, &v.to_string())?;
        }
    }
    if let Some(d) = args.patch_divisor {
        cfg.patch_divisor = d;
    }
    if let Some(m) = args.er_ratio_mode {
        cfg.er_ratio_mode = m;
    }
    if args.fft_invert {
        cfg.fft_invert = true;
    }
    if args.no_fft_recursive {
        cfg.fft_recursive = false;
    }
    Ok(cfg)
}

/// Pixel rectangles to outline on a heatmap: quadtree leaves when present,
/// otherwise the patch lattice.
pub(crate) fn grid_rects(out: &StepOutput) -> Vec<Rect> {
    if let Some(tree) = &out.tree {
        return tree.leaves().iter().map(|n| n.region).collect();
    }
    out.patches
        .as_ref()
        .map(|p| p.cells().collect())
        .unwrap_or_default()
}

/// Feeds every window through a pipeline and hands each post-warm-up frame
/// to `visit` with its index. `visit` returns `false` to stop early.
/// Returns the number of frames visited.
fn for_each_frame(
    stream: EventStream,
    cfg: &RepresentationConfig,
    geometry: SensorGeometry,
    stream_args: &StreamArgs,
    parallel: bool,
    mut visit: impl FnMut(usize, &StepOutput, Grid<f32>) -> Result<bool, Failure>,
) -> Result<usize, Failure> {
    let mut pipeline = Pipeline::new(cfg.clone(), geometry)?.parallel(parallel);
    let mut windows = 0;
    let mut frames = 0;
    for w in window_stream(stream, stream_args.hz, stream_args.t0) {
        let w = w?;
        let out = pipeline.step(&w)?;
        windows += 1;
        if windows <= WARM_UP_WINDOWS {
            continue;
        }
        frames += 1;
        if !visit(windows - WARM_UP_WINDOWS - 1, &out, pipeline.frame())? {
            break;
        }
    }
    if windows < WARM_UP_WINDOWS {
        return Err(Failure::invalid(SurfaceError::WarmUpShortfall {
            needed: WARM_UP_WINDOWS,
            available: windows,
        }));
    }
    Ok(frames)
}

fn manifest(
    stream: &StreamArgs,
    format: EventFormat,
    geometry: SensorGeometry,
    cfg: &RepresentationConfig,
    output: &Path,
    first: usize,
    frames: usize,
) -> RunManifest {
    RunManifest {
        input: stream.input.clone(),
        format,
        polarity: stream.polarity,
        geometry,
        frequency: stream.hz,
        t0: stream.t0,
        warm_up: WARM_UP_WINDOWS,
        config: cfg.clone(),
        output: output.to_path_buf(),
        frame_range: FrameRange {
            first_window: (WARM_UP_WINDOWS + first) as u64,
            frames: frames as u64,
        },
        seed: None,
    }
}

fn convert(a: ConvertArgs) -> Result<(), Failure> {
    let cfg = build_config(&a.repr, a.stream.hz)?;
    let (stream, format) = open_stream(&a.stream)?;
    let geometry = stream.geometry();
    cfg.validate_for(geometry)?;
    create_dir(&a.output)?;
    let frames_dir = a.output.join("frames");
    if a.png {
        create_dir(&frames_dir)?;
    }
    let tensor_path = a.output.join("surfaces.srf");
    let file = File::create(&tensor_path)
        .with_context(|| format!("creating {}", tensor_path.display()))
        .map_err(Failure::io)?;
    let mut writer = TensorWriter::new(BufWriter::new(file), geometry.width, geometry.height, cfg.clip as f32)
        .map_err(Failure::invalid)?;
    let frames = for_each_frame(stream, &cfg, geometry, &a.stream, a.repr.parallel, |k, _, frame| {
        writer.push(&frame).map_err(Failure::io)?;
        if a.png {
            let png = render::encode_gray_png(&render::surface_to_gray(&frame)).map_err(Failure::io)?;
            write_file(&frames_dir.join(format!("frame_{k:05}.png")), &png)?;
        }
        Ok(true)
    })?;
    writer.finish().map_err(Failure::io)?;
    manifest(&a.stream, format, geometry, &cfg, &a.output, 0, frames)
        .write_to_dir(&a.output)
        .map_err(Failure::io)?;
    println!("{frames} frames -> {}", tensor_path.display());
    Ok(())
}

fn parse_range(text: &str) -> Result<(usize, usize), Failure> {
    let bad = || Failure::Usage(format!("--frames expects start:end, got `{text}`"));
    let (s, e) = text.split_once(':').ok_or_else(bad)?;
    let start = if s.is_empty() { 0 } else { s.parse().map_err(|_| bad())? };
    let end = if e.is_empty() { usize::MAX } else { e.parse().map_err(|_| bad())? };
    if start >= end {
        return Err(bad());
    }
    Ok((start, end))
}

fn render_frames(a: RenderArgs) -> Result<(), Failure> {
    let (start, end) = match &a.frames {
        Some(r) => parse_range(r)?,
        None => (0, usize::MAX),
    };
    let cfg = build_config(&a.repr, a.stream.hz)?;
    let (stream, format) = open_stream(&a.stream)?;
    let geometry = stream.geometry();
    cfg.validate_for(geometry)?;
    create_dir(&a.output)?;
    let mut written = 0;
    for_each_frame(stream, &cfg, geometry, &a.stream, a.repr.parallel, |k, out, frame| {
        if k < start {
            return Ok(true);
        }
        let png = render::encode_gray_png(&render::surface_to_gray(&frame)).map_err(Failure::io)?;
        write_file(&a.output.join(format!("frame_{k:05}.png")), &png)?;
        if a.heatmap {
            let mut img = render::decay_heatmap(&out.decay);
            if a.grid {
                render::draw_grid(&mut img, grid_rects(out));
            }
            let png = render::encode_rgb_png(&img).map_err(Failure::io)?;
            write_file(&a.output.join(format!("heatmap_{k:05}.png")), &png)?;
        }
        written += 1;
        Ok(k + 1 < end)
    })?;
    manifest(&a.stream, format, geometry, &cfg, &a.output, start, written)
        .write_to_dir(&a.output)
        .map_err(Failure::io)?;
    println!("{written} frames -> {}", a.output.display());
    Ok(())
}

fn filter(a: FilterArgs) -> Result<(), Failure> {
    let format = match a.format.as_deref() {
        Some(f) => f.to_string(),
        None => a
            .input
            .extension()
            .and_then(|e| e.to_str())
            .unwrap_or("jsonl")
            .to_ascii_lowercase(),
    };
    let file = File::open(&a.input)
        .with_context(|| format!("opening {}", a.input.display()))
        .map_err(Failure::io)?;
    let samples = match format.as_str() {
        "csv" => annotations::read_csv(BufReader::new(file))?,
        "jsonl" | "json" => annotations::read_jsonl(BufReader::new(file))?,
        other => return Err(Failure::Usage(format!("unknown annotation format `{other}`"))),
    };
    let report = annotations::filter_annotations(&samples, a.hz)?;
    create_dir(&a.output)?;
    let json = serde_json::to_string_pretty(&report).map_err(Failure::invalid)?;
    write_file(&a.output.join("report.json"), (json + "\n").as_bytes())?;
    let create = |name: &str| {
        let path = a.output.join(name);
        File::create(&path)
            .with_context(|| format!("creating {}", path.display()))
            .map(BufWriter::new)
            .map_err(Failure::io)
    };
    report.write_exclusions_csv(create("exclusions.csv")?)?;
    report.write_clips_csv(create("clips.csv")?)?;
    let t = &report.totals;
    println!(
        "{} samples: {} pass, {} repaired, {} fail; {} clips ({} samples)",
        t.samples, t.pass, t.repaired, t.fail, t.clips, t.clip_samples
    );
    Ok(())
}

fn bench(a: BenchArgs) -> Result<(), Failure> {
    let methods = match &a.methods {
        Some(list) => list
            .split(',')
            .filter(|s| !s.trim().is_empty())
            .map(str::parse)
            .collect::<Result<Vec<BenchMethod>, _>>()?,
        None => BenchMethod::DEFAULT.to_vec(),
    };
    let frequencies = a
        .hz
        .split(',')
        .map(|s| s.parse::<Frequency>())
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| Failure::Usage(format!("--hz: {e}")))?;
    let opts = BenchOptions {
        methods,
        frequencies,
        warmup_windows: a.warmup,
        measured_windows: a.windows,
        geometry: SensorGeometry::new(a.width, a.height)?,
        dataset: a.dataset,
        seed: a.seed,
        parallel: a.parallel,
    };
    let results = bench::run_bench(&opts)?;
    create_dir(&a.out)?;
    let create = |name: &str| {
        let path = a.out.join(name);
        File::create(&path)
            .with_context(|| format!("creating {}", path.display()))
            .map(BufWriter::new)
            .map_err(Failure::io)
    };
    bench::write_csv(create("bench.csv")?, &results)?;
    bench::write_json(create("bench.json")?, &results)?;
    print!("{}", bench::format_table(&results));
    Ok(())
}

fn read_records<T: serde::de::DeserializeOwned>(path: &Path) -> Result<Vec<T>, Failure> {
    let file = File::open(path)
        .with_context(|| format!("opening {}", path.display()))
        .map_err(Failure::io)?;
    metrics::read_jsonl(BufReader::new(file))
        .map_err(|e| Failure::from(e).with_context(path))
}

impl Failure {
    fn with_context(self, path: &Path) -> Self {
        let ctx = format!("{}", path.display());
        match self {
            Failure::Io(e) => Failure::Io(e.context(ctx)),
            Failure::Validation(e) => Failure::Validation(e.context(ctx)),
            usage => usage,
        }
    }
}

fn metrics_cmd(a: MetricsArgs) -> Result<(), Failure> {
    let mut summary = MetricsSummary::default();
    if let (Some(pred), Some(gt)) = (&a.landmarks, &a.landmarks_gt) {
        let preds: Vec<LandmarkRecord> = read_records(pred)?;
        let gts: Vec<LandmarkRecord> = read_records(gt)?;
        summary.nme_percent = metrics::landmark_nme(&preds, &gts)?;
        summary.landmark_samples = Some(preds.len());
    }
    if let (Some(det), Some(gt)) = (&a.detections, &a.boxes) {
        let dets: Vec<DetectionRecord> = read_records(det)?;
        let gts: Vec<DetectionRecord> = read_records(gt)?;
        let (dets, gts) = metrics::group_by_image(&dets, &gts);
        summary.map50 = Some(metrics::map50(&dets, &gts));
        summary.images = Some(gts.len());
    }
    if a.landmarks.is_none() && a.detections.is_none() {
        return Err(Failure::Usage(
            "give --landmarks/--landmarks-gt, --detections/--boxes, or both".into(),
        ));
    }
    let json = serde_json::to_string_pretty(&summary).map_err(Failure::invalid)?;
    if let Some(out) = &a.out {
        write_file(out, (json.clone() + "\n").as_bytes())?;
    }
    println!("{json}");
    Ok(())
}

fn synth(a: SynthArgs) -> Result<(), Failure> {
    let scene = a.scene_kind().map_err(Failure::Usage)?;
    if !(a.duration > 0.0 && a.duration.is_finite()) {
        return Err(Failure::Usage(format!("--duration must be positive, got {}", a.duration)));
    }
    let geometry = SensorGeometry::new(a.width, a.height)?;
    let events = match scene {
        Some(kind) => synthesize_stream(kind, geometry, a.duration, a.seed),
        None => benchmark_scene(geometry, a.duration, a.seed),
    };
    if let Some(parent) = a.output.parent().filter(|p| !p.as_os_str().is_empty()) {
        create_dir(parent)?;
    }
    let format = a.format.unwrap_or_else(|| EventFormat::from_path(&a.output));
    write_event_file(&a.output, format, geometry, &events, a.polarity)
        .with_context(|| format!("writing {}", a.output.display()))
        .map_err(Failure::io)?;
    let mut out = std::io::stdout().lock();
    writeln!(out, "{} events -> {}", events.len(), a.output.display())
        .map_err(|e| Failure::io(anyhow!(e)))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn frame_ranges() {
        assert_eq!(parse_range("2:5").unwrap(), (2, 5));
        assert_eq!(parse_range(":3").unwrap(), (0, 3));
        assert_eq!(parse_range("4:").unwrap(), (4, usize::MAX));
        for bad in ["5:5", "6:2", "x:1", "3"] {
            assert!(matches!(parse_range(bad), Err(Failure::Usage(_))), "{bad}");
        }
    }
}
