//! Command surface for the tracker: `track`, `eval`, `synth` and `bench`.
//!
//! Every subcommand is a plain function taking its parsed arguments so the
//! binary stays a thin shell and tests can drive runs in-process.

use std::fmt;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use anyhow::{anyhow, bail, Context};
use clap::{Args, Parser, Subcommand};
use stc_core::metrics::{self, EvalSummary};
use stc_core::sequence_io::{self, GROUNDTRUTH_FILE};
use stc_core::synth::{self, Dims, SynthSpec, SyntheticSequence};
use stc_core::{BoundingBox, Frame, Tracker, TrackerParams};

pub const RESULTS_FILE: &str = "results.txt";
pub const MANIFEST_FILE: &str = "run_manifest.txt";
pub const METRICS_FILE: &str = "metrics.csv";

/// Raised for invocations that are malformed rather than failing at run time.
#[derive(Debug)]
pub struct UsageError(pub String);

impl fmt::Display for UsageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "usage error: {}", self.0)
    }
}

impl std::error::Error for UsageError {}

fn usage(msg: impl Into<String>) -> anyhow::Error {
    UsageError(msg.into()).into()
}

#[derive(Debug, Parser)]
#[command(name = "stc", version, about = "Spatio-temporal context tracker")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Track a sequence from an initial box and write per-frame results.
    Track(TrackArgs),
    /// Track from ground-truth frame 1 and report CLE, success rate and FPS.
    Eval(TrackArgs),
    /// Write a synthetic preset to disk in the sequence layout.
    Synth(SynthArgs),
    /// Measure tracking throughput on an in-memory synthetic sequence.
    Bench(BenchArgs),
}

/// Box given as `X,Y,W,H` with a 1-based origin.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InitBox(pub BoundingBox);

impl InitBox {
    /// The same box with a 0-based origin.
    pub fn zero_based(&self) -> BoundingBox {
        let b = self.0;
        BoundingBox::new(b.x - 1.0, b.y - 1.0, b.w, b.h)
    }
}

impl FromStr for InitBox {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let fields: Vec<f64> = s
            .split(',')
            .map(|f| f.trim().parse::<f64>().map_err(|e| format!("`{f}`: {e}")))
            .collect::<Result<_, _>>()?;
        let [x, y, w, h] = fields[..] else {
            return Err(format!("expected X,Y,W,H, got {} fields", fields.len()));
        };
        if !(w > 0.0 && h > 0.0) {
            return Err(format!("width and height must be positive, got {w}x{h}"));
        }
        Ok(Self(BoundingBox::new(x, y, w, h)))
    }
}

impl fmt::Display for InitBox {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let b = self.0;
        write!(f, "{},{},{},{}", b.x, b.y, b.w, b.h)
    }
}

/// Tracker parameter overrides shared by every subcommand that tracks.
#[derive(Debug, Clone, Default, Args)]
pub struct ParamArgs {
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub beta: Option<f64>,
    #[arg(long)]
    pub rho: Option<f64>,
    #[arg(long)]
    pub lambda: Option<f64>,
    #[arg(long)]
    pub n_scale: Option<usize>,
    #[arg(long)]
    pub epsilon: Option<f64>,
    /// Start from the parameters recorded in a previous run manifest.
    #[arg(long, value_name = "FILE")]
    pub manifest: Option<PathBuf>,
}

impl ParamArgs {
    /// Defaults, then the manifest (if any), then explicit flags.
    pub fn resolve(&self) -> anyhow::Result<TrackerParams> {
        let mut params = match &self.manifest {
            Some(path) => RunManifest::read(path)?.tracker_params()?,
            None => TrackerParams::default(),
        };
        if let Some(v) = self.alpha {
            params.alpha = v;
        }
        if let Some(v) = self.beta {
            params.beta = v;
        }
        if let Some(v) = self.rho {
            params.rho = v;
        }
        if let Some(v) = self.lambda {
            params.lambda = v;
        }
        if let Some(v) = self.n_scale {
            params.n_scale_frames = v;
        }
        if let Some(v) = self.epsilon {
            params.epsilon = v;
        }
        params.validate().map_err(|e| usage(e.to_string()))?;
        Ok(params)
    }
}

#[derive(Debug, Clone, Args)]
pub struct TrackArgs {
    /// Sequence directory.
    #[arg(long, value_name = "DIR")]
    pub seq: PathBuf,
    /// Frame glob relative to the sequence directory.
    #[arg(long, default_value = "img/*")]
    pub pattern: String,
    /// Initial box X,Y,W,H (1-based); defaults to ground-truth frame 1.
    #[arg(long, value_name = "X,Y,W,H")]
    pub init: Option<InitBox>,
    #[arg(long, value_name = "DIR", default_value = "out")]
    pub out: PathBuf,
    /// Write each frame's confidence map as a PGM.
    #[arg(long)]
    pub dump_confidence: bool,
    /// Write each frame with its tracked box drawn as a PNG.
    #[arg(long)]
    pub overlay: bool,
    #[command(flatten)]
    pub params: ParamArgs,
}

#[derive(Debug, Clone, Args)]
pub struct SynthArgs {
    /// One of translation-100, occlusion-60, zoom-60.
    #[arg(long, default_value = "translation-100")]
    pub preset: String,
    #[arg(long, value_name = "DIR", default_value = "out")]
    pub out: PathBuf,
    /// Override the preset's noise seed.
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Args)]
pub struct BenchArgs {
    /// Frames per timed run.
    #[arg(long, default_value_t = 100)]
    pub frames: usize,
    /// Timed runs; the median is reported.
    #[arg(long, default_value_t = 7)]
    pub runs: usize,
    /// Target box as WxH; the context window is twice this.
    #[arg(long, value_name = "WxH", default_value = "40x20")]
    pub box_size: BoxSize,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[command(flatten)]
    pub params: ParamArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BoxSize {
    pub width: usize,
    pub height: usize,
}

impl FromStr for BoxSize {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (w, h) = s.split_once(['x', 'X']).ok_or_else(|| format!("expected WxH, got `{s}`"))?;
        let parse = |v: &str| v.trim().parse::<usize>().map_err(|e| format!("`{v}`: {e}"));
        let (width, height) = (parse(w)?, parse(h)?);
        if width == 0 || height == 0 {
            return Err("box sides must be positive".into());
        }
        Ok(Self { width, height })
    }
}

/// Ordered key=value record of everything that determines a run.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RunManifest {
    entries: Vec<(String, String)>,
}

impl RunManifest {
    pub fn push(&mut self, key: &str, value: impl fmt::Display) {
        self.entries.push((key.to_string(), value.to_string()));
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    pub fn with_params(mut self, p: &TrackerParams) -> Self {
        self.push("alpha", p.alpha);
        self.push("beta", p.beta);
        self.push("rho", p.rho);
        self.push("lambda", p.lambda);
        self.push("n_scale", p.n_scale_frames);
        self.push("epsilon", p.epsilon);
        self.push("window_ratio", p.window_ratio);
        self.push("scale_min", p.scale_clamp.0);
        self.push("scale_max", p.scale_clamp.1);
        self.push("initial_scale", p.initial_scale);
        self
    }

    pub fn tracker_params(&self) -> anyhow::Result<TrackerParams> {
        let mut p = TrackerParams::default();
        let float = |key: &str, slot: &mut f64| -> anyhow::Result<()> {
            if let Some(v) = self.get(key) {
                *slot = v.parse().with_context(|| format!("manifest key `{key}`"))?;
            }
            Ok(())
        };
        float("alpha", &mut p.alpha)?;
        float("beta", &mut p.beta)?;
        float("rho", &mut p.rho)?;
        float("lambda", &mut p.lambda)?;
        float("epsilon", &mut p.epsilon)?;
        float("window_ratio", &mut p.window_ratio)?;
        float("scale_min", &mut p.scale_clamp.0)?;
        float("scale_max", &mut p.scale_clamp.1)?;
        float("initial_scale", &mut p.initial_scale)?;
        if let Some(v) = self.get("n_scale") {
            p.n_scale_frames = v.parse().context("manifest key `n_scale`")?;
        }
        Ok(p)
    }

    pub fn parse(contents: &str) -> anyhow::Result<Self> {
        let mut m = Self::default();
        for (i, line) in contents.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| anyhow!("manifest line {}: expected key=value", i + 1))?;
            m.push(k.trim(), v.trim());
        }
        Ok(m)
    }

    pub fn read(path: &Path) -> anyhow::Result<Self> {
        let text = fs::read_to_string(path).with_context(|| format!("reading manifest {}", path.display()))?;
        Self::parse(&text)
    }
}

impl fmt::Display for RunManifest {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (k, v) in &self.entries {
            writeln!(f, "{k}={v}")?;
        }
        Ok(())
    }
}

/// Writes `contents` next to `path` and renames it into place.
pub fn write_atomic(path: &Path, contents: &[u8]) -> anyhow::Result<()> {
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".partial");
    let tmp = PathBuf::from(tmp);
    let result = (|| -> std::io::Result<()> {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(contents)?;
        f.sync_all()?;
        fs::rename(&tmp, path)
    })();
    if result.is_err() {
        let _ = fs::remove_file(&tmp);
    }
    result.with_context(|| format!("writing {}", path.display()))
}

#[derive(Debug, Clone)]
pub struct TrackRun {
    pub boxes: Vec<BoundingBox>,
    /// Tracker time only: initialization plus every `track` call.
    pub elapsed_seconds: f64,
    pub manifest: RunManifest,
}

impl TrackRun {
    pub fn fps(&self) -> f64 {
        self.boxes.len() as f64 / self.elapsed_seconds
    }
}

/// Runs the tracker over `frames`, returning one box per frame.
///
/// `on_frame` sees each tracked frame after the first together with its
/// confidence map, which is where artifact dumping hooks in.
pub fn track_frames(
    frames: &[Frame],
    init: BoundingBox,
    params: TrackerParams,
    mut on_frame: impl FnMut(usize, &Frame, &stc_core::ConfidenceMap, &BoundingBox) -> anyhow::Result<()>,
) -> anyhow::Result<(Vec<BoundingBox>, f64)> {
    let first = frames.first().ok_or_else(|| anyhow!("sequence has no frames"))?;
    let mut elapsed = 0.0;
    let start = Instant::now();
    let (mut tracker, warnings) = Tracker::init(first, init, params)?;
    elapsed += start.elapsed().as_secs_f64();
    for w in warnings {
        log::warn!("frame 1: {w:?}");
    }
    let mut boxes = Vec::with_capacity(frames.len());
    boxes.push(tracker.current_box());
    for (t, frame) in frames.iter().enumerate().skip(1) {
        let start = Instant::now();
        let out = tracker.track(frame)?;
        elapsed += start.elapsed().as_secs_f64();
        for w in &out.warnings {
            log::warn!("frame {}: {w:?}", t + 1);
        }
        on_frame(t, frame, &out.confidence, &out.bbox)?;
        boxes.push(out.bbox);
    }
    Ok((boxes, elapsed.max(f64::MIN_POSITIVE)))
}

/// Loads the sequence, tracks it and writes results, manifest and artifacts.
pub fn run_track(args: &TrackArgs) -> anyhow::Result<TrackRun> {
    let params = args.params.resolve()?;
    let seq = sequence_io::load_sequence(&args.seq, &args.pattern)?;
    let init = match (&args.init, &seq.groundtruth) {
        (Some(b), _) => b.zero_based(),
        (None, Some(gt)) => gt[0],
        (None, None) => {
            return Err(usage(format!(
                "no --init box given and {} has no {GROUNDTRUTH_FILE}",
                args.seq.display()
            )))
        }
    };
    let frames = seq.load_frames()?;
    fs::create_dir_all(&args.out).with_context(|| format!("creating {}", args.out.display()))?;
    if args.dump_confidence {
        fs::create_dir_all(args.out.join("confidence"))?;
    }
    if args.overlay {
        fs::create_dir_all(args.out.join("overlay"))?;
        sequence_io::write_overlay(&frames[0], &init, &args.out.join("overlay/0001.png"))?;
    }

    let mut manifest = RunManifest::default();
    manifest.push("seq", args.seq.display());
    manifest.push("pattern", &args.pattern);
    manifest.push("frames", frames.len());
    manifest.push("init", InitBox(BoundingBox::new(init.x + 1.0, init.y + 1.0, init.w, init.h)));
    let manifest = manifest.with_params(&params);

    let (boxes, elapsed) = track_frames(&frames, init, params, |t, frame, conf, bbox| {
        if args.dump_confidence {
            sequence_io::dump_confidence(conf, &args.out.join(format!("confidence/{:04}.pgm", t + 1)))?;
        }
        if args.overlay {
            sequence_io::write_overlay(frame, bbox, &args.out.join(format!("overlay/{:04}.png", t + 1)))?;
        }
        Ok(())
    })?;

    write_atomic(&args.out.join(MANIFEST_FILE), manifest.to_string().as_bytes())?;
    write_atomic(&args.out.join(RESULTS_FILE), sequence_io::format_results(&boxes).as_bytes())?;
    print!("{manifest}");
    let run = TrackRun {
        boxes,
        elapsed_seconds: elapsed,
        manifest,
    };
    println!("frames={} time={:.4}s fps={:.1}", run.boxes.len(), run.elapsed_seconds, run.fps());
    Ok(run)
}

/// Tracks from ground-truth frame 1 and emits the metrics row.
pub fn run_eval(args: &TrackArgs) -> anyhow::Result<EvalSummary> {
    let seq = sequence_io::load_sequence(&args.seq, &args.pattern)?;
    let Some(truth) = seq.groundtruth.clone() else {
        bail!("{} has no {GROUNDTRUTH_FILE}; eval needs ground truth", args.seq.display());
    };
    let track_args = TrackArgs {
        init: None,
        ..args.clone()
    };
    let run = run_track(&track_args)?;
    let summary = metrics::summarize(&seq.name, &run.boxes, &truth, run.elapsed_seconds)?;
    let csv = format!("{}\n{}\n", EvalSummary::CSV_HEADER, summary.csv_row());
    write_atomic(&args.out.join(METRICS_FILE), csv.as_bytes())?;
    print!("{csv}");
    Ok(summary)
}

/// Renders a named preset with the generator matching its kind.
pub fn render_preset(name: &str, seed: Option<u64>) -> anyhow::Result<(SynthSpec, SyntheticSequence)> {
    let mut spec = SynthSpec::preset(name)?;
    if let Some(s) = seed {
        spec.seed = s;
    }
    let seq = if !spec.occlusion_windows.is_empty() {
        synth::gen_occlusion_sequence(&spec)?
    } else if spec.scale_track.iter().any(|&s| s != 1.0) {
        synth::gen_zoom_sequence(&spec)?
    } else {
        synth::gen_translation_sequence(&spec)?
    };
    Ok((spec, seq))
}

pub fn run_synth(args: &SynthArgs) -> anyhow::Result<PathBuf> {
    let (spec, seq) = render_preset(&args.preset, args.seed)?;
    let img_dir = args.out.join("img");
    fs::create_dir_all(&img_dir).with_context(|| format!("creating {}", img_dir.display()))?;
    for (t, frame) in seq.frames.iter().enumerate() {
        sequence_io::save_frame(frame, &img_dir.join(format!("{:04}.png", t + 1)))?;
    }
    let truth = sequence_io::format_results(&seq.groundtruth);
    write_atomic(&args.out.join(GROUNDTRUTH_FILE), truth.as_bytes())?;
    println!("preset={} frames={} seed={} out={}", args.preset, seq.frames.len(), spec.seed, args.out.display());
    Ok(args.out.clone())
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchReport {
    pub frames: usize,
    pub window: (usize, usize),
    /// Frames per second of each timed run, in run order.
    pub run_fps: Vec<f64>,
    pub median_fps: f64,
    pub min_fps: f64,
    pub max_fps: f64,
}

impl fmt::Display for BenchReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "window={}x{} frames={} runs={} median_fps={:.1} min_fps={:.1} max_fps={:.1}",
            self.window.1,
            self.window.0,
            self.frames,
            self.run_fps.len(),
            self.median_fps,
            self.min_fps,
            self.max_fps
        )
    }
}

pub fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Moving textured patch of the requested size in a frame a few windows wide.
pub fn bench_sequence(frames: usize, size: BoxSize, seed: u64) -> anyhow::Result<SyntheticSequence> {
    let frame = Dims {
        height: (size.height * 6).max(120),
        width: (size.width * 6).max(160),
    };
    let (fw, fh) = (frame.width as f64, frame.height as f64);
    let margin_x = size.width as f64 * 1.5;
    let margin_y = size.height as f64 * 1.5;
    let traj = synth::random_walk((fw / 2.0, fh / 2.0), frames, 3.0, seed, (margin_x, fw - margin_x, margin_y, fh - margin_y));
    let spec = SynthSpec::new(frame, Dims { height: size.height, width: size.width }, traj, 2.0, seed);
    Ok(synth::gen_translation_sequence(&spec)?)
}

pub fn run_bench(args: &BenchArgs) -> anyhow::Result<BenchReport> {
    if args.frames == 0 {
        return Err(usage("--frames must be at least 1"));
    }
    if args.runs < 5 {
        return Err(usage("--runs must be at least 5"));
    }
    let params = args.params.resolve()?;
    let seq = bench_sequence(args.frames, args.box_size, args.seed)?;
    let init = seq.groundtruth[0];

    let window = Tracker::init(&seq.frames[0], init, params.clone())?.0.window_size();
    track_frames(&seq.frames, init, params.clone(), |_, _, _, _| Ok(()))?;
    let mut run_fps = Vec::with_capacity(args.runs);
    for _ in 0..args.runs {
        let (boxes, elapsed) = track_frames(&seq.frames, init, params.clone(), |_, _, _, _| Ok(()))?;
        run_fps.push(boxes.len() as f64 / elapsed);
    }
    let report = BenchReport {
        frames: args.frames,
        window: (window.height, window.width),
        median_fps: median(&run_fps),
        min_fps: run_fps.iter().copied().fold(f64::INFINITY, f64::min),
        max_fps: run_fps.iter().copied().fold(0.0, f64::max),
        run_fps,
    };
    println!("{report}");
    Ok(report)
}

pub fn run(cli: &Cli) -> anyhow::Result<()> {
    match &cli.command {
        Command::Track(a) => run_track(a).map(drop),
        Command::Eval(a) => run_eval(a).map(drop),
        Command::Synth(a) => run_synth(a).map(drop),
        Command::Bench(a) => run_bench(a).map(drop),
    }
}
