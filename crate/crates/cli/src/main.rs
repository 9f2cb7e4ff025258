//! `vcd`: command-line front end for the copy detection toolkit.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde_json::json;
use vcd_core::descriptor::{read_store, store_size, write_store};
use vcd_core::harness::{generate_corpus, run_experiment, ExperimentConfig, SyntheticCorpusSpec};
use vcd_core::matching::format_significant;
use vcd_core::media::{
    default_video_id, load_video, parse_y4m, save_video, write_y4m, Manifest, Role,
};
use vcd_core::metrics::evaluate_run;
use vcd_core::selection::reduction_factor;
use vcd_core::{
    compute_curve, describe_video, match_all, select, smooth, AttackSpec, BackgroundPool,
    DescriptorSet, Error, ErrorClass, Fps, FrameSequence, MatchConfig, PolicyKind, SelectionPolicy,
};

#[derive(Parser)]
#[command(name = "vcd", version, about = "Keyframe-based video copy detection")]
struct Cli {
    /// Worker threads (0 = one per core)
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Base seed for random attacks, corpus generation and experiments
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output format for results written to stdout
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(clap::Args)]
struct VideoArgs {
    /// Y4M file, `.vcdr` blob, PGM directory, or `-` for Y4M on stdin
    input: PathBuf,
    /// Video id (defaults to the file stem)
    #[arg(long)]
    id: Option<String>,
    /// Frame rate override, e.g. `25` or `30000/1001`
    #[arg(long)]
    fps: Option<Fps>,
}

#[derive(clap::Args)]
struct PolicyArgs {
    #[arg(long, default_value = "local_max_mid")]
    policy: PolicyKind,
    /// Hanning window size (ignored by the uniform policy)
    #[arg(long, default_value_t = 50)]
    window: usize,
}

impl PolicyArgs {
    fn policy(&self) -> vcd_core::Result<SelectionPolicy> {
        match self.policy {
            PolicyKind::UniformPerSecond => Ok(SelectionPolicy::uniform()),
            kind => SelectionPolicy::new(kind, self.window),
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum AttackKind {
    None,
    Random,
    Targeted,
    Speed,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum RoleFilter {
    All,
    Reference,
    Query,
    Distractor,
}

#[derive(Subcommand)]
enum Command {
    /// Print geometry, frame rate and length of a video
    Probe {
        #[command(flatten)]
        video: VideoArgs,
    },
    /// Export the raw and smoothed interframe difference curve
    Curve {
        #[command(flatten)]
        video: VideoArgs,
        #[arg(long, default_value_t = 50)]
        window: usize,
    },
    /// Select keyframes
    Select {
        #[command(flatten)]
        video: VideoArgs,
        #[command(flatten)]
        policy: PolicyArgs,
    },
    /// Describe selected keyframes and write a descriptor store
    Describe {
        /// Videos to describe (ids are file stems)
        inputs: Vec<PathBuf>,
        /// Describe the videos of a manifest instead
        #[arg(long, conflicts_with = "inputs")]
        manifest: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = RoleFilter::All)]
        role: RoleFilter,
        #[command(flatten)]
        policy: PolicyArgs,
        #[arg(long)]
        out: PathBuf,
    },
    /// Apply a temporal attack to a video
    Attack {
        #[command(flatten)]
        video: VideoArgs,
        #[arg(long, value_enum)]
        kind: AttackKind,
        /// Blackout probability for `random`
        #[arg(long)]
        p: Option<f64>,
        /// Speed factor for `speed`
        #[arg(long)]
        factor: Option<f64>,
        /// Extra frames blacked after each blackout
        #[arg(long, default_value_t = 0)]
        bleed: usize,
        /// Output path (`.vcdr` for the blob format, `-` for Y4M on stdout)
        #[arg(long)]
        out: PathBuf,
    },
    /// Score query stores against a reference store
    Match {
        #[arg(long)]
        queries: PathBuf,
        #[arg(long)]
        references: PathBuf,
        /// Store of distractor descriptors for score normalization
        #[arg(long)]
        background: Option<PathBuf>,
        #[arg(long, default_value_t = 1.0)]
        beta: f64,
        #[arg(long, default_value_t = 1)]
        top_k: usize,
        /// Scores CSV path (stdout when absent)
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Compute micro average precision of a scores file
    Eval {
        #[arg(long)]
        scores: PathBuf,
        #[arg(long)]
        gt: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Generate a synthetic corpus with ground truth
    GenCorpus {
        #[arg(long)]
        out: PathBuf,
        /// JSON corpus spec; missing fields take their defaults
        #[arg(long)]
        spec: Option<PathBuf>,
        #[arg(long)]
        references: Option<usize>,
        #[arg(long)]
        positives: Option<usize>,
        #[arg(long)]
        distractors: Option<usize>,
    },
    /// Run a full experiment grid
    Bench {
        #[arg(long)]
        config: PathBuf,
        /// Output directory (overrides the config's `output_dir`)
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => e.exit(),
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) if is_broken_pipe(&e) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", message(&e));
            ExitCode::from(exit_code(&e))
        }
    }
}

fn is_broken_pipe(e: &anyhow::Error) -> bool {
    e.chain().any(|c| {
        c.downcast_ref::<std::io::Error>()
            .is_some_and(|io| io.kind() == std::io::ErrorKind::BrokenPipe)
    })
}

/// The error chain joined by `: `, skipping causes already quoted by the
/// message above them.
fn message(e: &anyhow::Error) -> String {
    let mut out = String::new();
    for c in e.chain() {
        let text = c.to_string();
        if !out.contains(&text) {
            if !out.is_empty() {
                out.push_str(": ");
            }
            out.push_str(&text);
        }
    }
    out
}

fn exit_code(e: &anyhow::Error) -> u8 {
    let class = e
        .chain()
        .find_map(|c| c.downcast_ref::<Error>())
        .map(Error::class);
    match class {
        Some(ErrorClass::Usage) => 2,
        Some(ErrorClass::Internal) => 4,
        _ => 3,
    }
}

fn usage(msg: impl Into<String>) -> anyhow::Error {
    Error::InvalidArgument(msg.into()).into()
}

fn run(cli: Cli) -> anyhow::Result<()> {
    if let Some(n) = cli.threads {
        // Bench builds its own pool from the config.
        if !matches!(cli.command, Command::Bench { .. }) {
            rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build_global()
                .map_err(|e| Error::Invariant(format!("thread pool: {e}")))?;
        }
    }
    let fmt = cli.format;
    match cli.command {
        Command::Probe { video } => probe(&video, fmt),
        Command::Curve { video, window } => curve(&video, window, fmt),
        Command::Select { video, policy } => select_cmd(&video, &policy, fmt),
        Command::Describe {
            inputs,
            manifest,
            role,
            policy,
            out,
        } => describe(&inputs, manifest.as_deref(), role, &policy, &out, fmt),
        Command::Attack {
            video,
            kind,
            p,
            factor,
            bleed,
            out,
        } => {
            let spec = match kind {
                AttackKind::None => AttackSpec::None,
                AttackKind::Random => AttackSpec::RandomBlackout {
                    p: p.ok_or_else(|| usage("--kind random needs --p"))?,
                    seed: None,
                    bleed,
                },
                AttackKind::Targeted => AttackSpec::TargetedBlackout { bleed },
                AttackKind::Speed => AttackSpec::Speed {
                    factor: factor.ok_or_else(|| usage("--kind speed needs --factor"))?,
                },
            };
            attack(&video, &spec, cli.seed.unwrap_or(0), &out, fmt)
        }
        Command::Match {
            queries,
            references,
            background,
            beta,
            top_k,
            out,
        } => {
            let config = MatchConfig { beta, top_k };
            match_cmd(
                &queries,
                &references,
                background.as_deref(),
                &config,
                out.as_deref(),
                fmt,
            )
        }
        Command::Eval { scores, gt, out } => eval(&scores, &gt, out.as_deref(), fmt),
        Command::GenCorpus {
            out,
            spec,
            references,
            positives,
            distractors,
        } => {
            let mut s = match spec {
                Some(p) => {
                    let text = std::fs::read_to_string(&p).map_err(|e| Error::io(&p, e))?;
                    serde_json::from_str(&text)
                        .map_err(|e| Error::Config(format!("{}: {e}", p.display())))?
                }
                None => SyntheticCorpusSpec::default(),
            };
            s.num_references = references.unwrap_or(s.num_references);
            s.num_queries_positive = positives.unwrap_or(s.num_queries_positive);
            s.num_distractors = distractors.unwrap_or(s.num_distractors);
            s.seed = cli.seed.unwrap_or(s.seed);
            gen_corpus(&s, &out, fmt)
        }
        Command::Bench { config, out } => bench(&config, out, cli.threads, cli.seed, fmt),
    }
}

fn load(video: &VideoArgs) -> anyhow::Result<FrameSequence> {
    if video.input.as_os_str() == "-" {
        let seq = parse_y4m(std::io::stdin().lock()).context("reading Y4M from stdin")?;
        let seq = seq.with_id(video.id.clone().unwrap_or_else(|| "stdin".into()));
        return Ok(match video.fps {
            Some(fps) => seq.with_fps(fps),
            None => seq,
        });
    }
    let id = video
        .id
        .clone()
        .unwrap_or_else(|| default_video_id(&video.input));
    Ok(load_video(&video.input, &id, video.fps)?)
}

fn emit(text: &str) -> anyhow::Result<()> {
    let mut out = std::io::stdout().lock();
    out.write_all(text.as_bytes())?;
    if !text.ends_with('\n') {
        out.write_all(b"\n")?;
    }
    out.flush()?;
    Ok(())
}

fn emit_json(v: &serde_json::Value) -> anyhow::Result<()> {
    emit(&serde_json::to_string_pretty(v)?)
}

/// One header row plus data rows, written through the csv crate.
fn emit_csv<I, R>(header: &[&str], rows: I) -> anyhow::Result<()>
where
    I: IntoIterator<Item = R>,
    R: IntoIterator<Item = String>,
{
    let mut w = csv::Writer::from_writer(std::io::stdout().lock());
    w.write_record(header)?;
    for r in rows {
        w.write_record(r)?;
    }
    w.flush()?;
    Ok(())
}

fn num(x: f64) -> String {
    format_significant(x, 17)
}

fn probe(video: &VideoArgs, fmt: Format) -> anyhow::Result<()> {
    let seq = load(video)?;
    match fmt {
        Format::Json => emit_json(&json!({
            "video_id": seq.video_id(),
            "width": seq.width(),
            "height": seq.height(),
            "fps": seq.fps(),
            "frame_count": seq.len(),
            "duration_seconds": seq.duration_seconds(),
        })),
        Format::Csv => emit_csv(
            &[
                "video_id",
                "width",
                "height",
                "fps",
                "frame_count",
                "duration_seconds",
            ],
            [[
                seq.video_id().to_string(),
                seq.width().to_string(),
                seq.height().to_string(),
                seq.fps().to_string(),
                seq.len().to_string(),
                num(seq.duration_seconds()),
            ]],
        ),
    }
}

fn curve(video: &VideoArgs, window: usize, fmt: Format) -> anyhow::Result<()> {
    let seq = load(video)?;
    let c = smooth(&compute_curve(&seq), window)?;
    let smoothed = c.best().to_vec();
    match fmt {
        Format::Json => emit_json(&json!({
            "video_id": seq.video_id(),
            "fps": seq.fps(),
            "raw": c.values,
            "smoothed": smoothed,
            "window": c.window_size,
        })),
        Format::Csv => emit_csv(
            &["index", "raw", "smoothed"],
            c.values
                .iter()
                .zip(&smoothed)
                .enumerate()
                .map(|(i, (r, s))| [i.to_string(), num(*r), num(*s)]),
        ),
    }
}

fn select_cmd(video: &VideoArgs, policy: &PolicyArgs, fmt: Format) -> anyhow::Result<()> {
    let seq = load(video)?;
    let sel = select(&seq, &policy.policy()?)?;
    match fmt {
        Format::Json => emit_json(&json!({
            "video_id": sel.video_id,
            "policy": {"kind": sel.policy.kind, "window": sel.policy.window},
            "frame_count": sel.source_frame_count,
            "indices": sel.indices,
            "timestamps": sel.timestamps,
            "reduction_factor": reduction_factor(&sel),
        })),
        Format::Csv => emit_csv(
            &["index", "timestamp"],
            sel.indices
                .iter()
                .zip(&sel.timestamps)
                .map(|(i, t)| [i.to_string(), num(*t)]),
        ),
    }
}

fn describe(
    inputs: &[PathBuf],
    manifest: Option<&Path>,
    role: RoleFilter,
    policy: &PolicyArgs,
    out: &Path,
    fmt: Format,
) -> anyhow::Result<()> {
    let policy = policy.policy()?;
    let jobs: Vec<(String, PathBuf, Option<Fps>)> = match manifest {
        Some(path) => Manifest::load(path)?
            .entries
            .into_iter()
            .filter(|e| match role {
                RoleFilter::All => true,
                RoleFilter::Reference => e.role == Role::Reference,
                RoleFilter::Query => e.role == Role::Query,
                RoleFilter::Distractor => e.role == Role::Query && e.distractor,
            })
            .map(|e| (e.video_id, e.path, e.fps_override))
            .collect(),
        None => inputs
            .iter()
            .map(|p| (default_video_id(p), p.clone(), None))
            .collect(),
    };
    if jobs.is_empty() {
        bail!(usage("no videos to describe"));
    }
    let sets: Vec<DescriptorSet> = jobs
        .par_iter()
        .map(|(id, path, fps)| describe_video(&load_video(path, id, *fps)?, &policy))
        .collect::<vcd_core::Result<_>>()?;

    let file = File::create(out).map_err(|e| Error::io(out, e))?;
    let mut w = BufWriter::new(file);
    write_store(&sets, &mut w)?;
    w.flush().map_err(|e| Error::io(out, e))?;
    drop(w);
    let on_disk = std::fs::metadata(out).map_err(|e| Error::io(out, e))?.len();
    let expected = store_size(&sets);
    if on_disk != expected {
        return Err(Error::Invariant(format!(
            "store is {on_disk} bytes on disk, expected {expected}"
        ))
        .into());
    }
    let descriptors: usize = sets.iter().map(DescriptorSet::len).sum();
    let dim = sets.iter().find_map(DescriptorSet::dim).unwrap_or(0);
    match fmt {
        Format::Json => emit_json(&json!({
            "store": out,
            "policy": policy.label(),
            "videos": sets.len(),
            "descriptors": descriptors,
            "dim": dim,
            "bytes": on_disk,
        })),
        Format::Csv => emit_csv(
            &["store", "policy", "videos", "descriptors", "dim", "bytes"],
            [[
                out.display().to_string(),
                policy.label(),
                sets.len().to_string(),
                descriptors.to_string(),
                dim.to_string(),
                on_disk.to_string(),
            ]],
        ),
    }
}

fn attack(
    video: &VideoArgs,
    spec: &AttackSpec,
    seed: u64,
    out: &Path,
    fmt: Format,
) -> anyhow::Result<()> {
    let seq = load(video)?;
    let attacked = spec.apply(&seq, seed)?;
    if out.as_os_str() == "-" {
        let mut w = BufWriter::new(std::io::stdout().lock());
        write_y4m(&attacked, &mut w)?;
        w.flush()?;
        return Ok(());
    }
    save_video(&attacked, out)?;
    match fmt {
        Format::Json => emit_json(&json!({
            "video_id": attacked.video_id(),
            "attack": spec.label(),
            "seed": seed,
            "frames_in": seq.len(),
            "frames_out": attacked.len(),
            "fps_out": attacked.fps(),
            "out": out,
        })),
        Format::Csv => emit_csv(
            &[
                "video_id",
                "attack",
                "seed",
                "frames_in",
                "frames_out",
                "fps_out",
                "out",
            ],
            [[
                attacked.video_id().to_string(),
                spec.label(),
                seed.to_string(),
                seq.len().to_string(),
                attacked.len().to_string(),
                attacked.fps().to_string(),
                out.display().to_string(),
            ]],
        ),
    }
}

fn open_store(path: &Path) -> anyhow::Result<Vec<DescriptorSet>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_store(BufReader::new(file)).with_context(|| format!("reading {}", path.display()))
}

fn match_cmd(
    queries: &Path,
    references: &Path,
    background: Option<&Path>,
    config: &MatchConfig,
    out: Option<&Path>,
    fmt: Format,
) -> anyhow::Result<()> {
    if config.top_k == 0 {
        bail!(usage("--top-k must be at least 1"));
    }
    let q = open_store(queries)?;
    let r = open_store(references)?;
    let pool = background
        .map(open_store)
        .transpose()?
        .map(|sets| BackgroundPool::from_sets(&sets));
    let predictions = match_all(&q, &r, pool.as_ref(), config)?;
    match (out, fmt) {
        (Some(path), _) => {
            let file = File::create(path).map_err(|e| Error::io(path, e))?;
            let mut w = BufWriter::new(file);
            predictions.write_csv(&mut w)?;
            w.flush().map_err(|e| Error::io(path, e))?;
            Ok(())
        }
        (None, Format::Csv) => {
            let mut w = BufWriter::new(std::io::stdout().lock());
            predictions.write_csv(&mut w)?;
            w.flush()?;
            Ok(())
        }
        (None, Format::Json) => emit(&serde_json::to_string_pretty(predictions.entries())?),
    }
}

fn eval(scores: &Path, gt: &Path, out: Option<&Path>, fmt: Format) -> anyhow::Result<()> {
    let report = evaluate_run(scores, gt, BTreeMap::new())?;
    for w in &report.warnings {
        eprintln!("warning: {w}");
    }
    if let Some(path) = out {
        std::fs::write(path, report.to_json()).map_err(|e| Error::io(path, e))?;
    }
    match fmt {
        Format::Json => emit(&report.to_json()),
        Format::Csv => emit_csv(
            &["uap", "positives_total", "predictions_total"],
            [[
                format_significant(report.uap, 9),
                report.positives_total.to_string(),
                report.predictions_total.to_string(),
            ]],
        ),
    }
}

fn gen_corpus(spec: &SyntheticCorpusSpec, out: &Path, fmt: Format) -> anyhow::Result<()> {
    let g = generate_corpus(spec, out)?;
    let refs = g.manifest.references().count();
    let queries = g.manifest.queries().count();
    match fmt {
        Format::Json => emit_json(&json!({
            "manifest": g.manifest_path,
            "ground_truth": g.ground_truth_path,
            "references": refs,
            "queries": queries,
            "positives": g.ground_truth.len(),
            "seed": spec.seed,
        })),
        Format::Csv => emit_csv(
            &[
                "manifest",
                "ground_truth",
                "references",
                "queries",
                "positives",
                "seed",
            ],
            [[
                g.manifest_path.display().to_string(),
                g.ground_truth_path.display().to_string(),
                refs.to_string(),
                queries.to_string(),
                g.ground_truth.len().to_string(),
                spec.seed.to_string(),
            ]],
        ),
    }
}

fn bench(
    config: &Path,
    out: Option<PathBuf>,
    threads: Option<usize>,
    seed: Option<u64>,
    fmt: Format,
) -> anyhow::Result<()> {
    let mut config = ExperimentConfig::load(config)?;
    if let Some(n) = threads {
        config.threads = n;
    }
    if let Some(s) = seed {
        config.seed = s;
    }
    let dir = out.or_else(|| config.output_dir.clone());
    config.output_dir = dir.clone();
    let result = run_experiment(&config)?;
    if let Some(dir) = &dir {
        result.write(dir)?;
    }
    match fmt {
        Format::Json => emit(&result.summary_json()),
        Format::Csv => emit(&result.summary_csv()?),
    }
}
