//! The policy x attack grid: attack queries, select, describe, match and
//! evaluate every cell, then write scores, reports and a summary table.
//!
//! Output layout under `output_dir`:
//!
//! ```text
//! scores/<cell>.csv     ranked predictions
//! reports/<cell>.json   EvalReport (no timings)
//! summary.csv           one row per cell, including vid_per_s
//! summary.json          same rows without timings
//! timing.json           per-cell stage timings
//! ```
//!
//! Everything except `timing.json` and the `vid_per_s` column is a pure
//! function of the config and seed.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::corpus::{SyntheticCorpus, SyntheticCorpusSpec};
use super::derive_seed;
use super::timing::{videos_per_second, TimingProbe, TimingReport};
use crate::attacks::AttackSpec;
use crate::descriptor::{describe_selection, store_size, DctDescriptor, DescriptorSet};
use crate::error::{Error, Result};
use crate::matching::{format_significant, match_all, BackgroundPool, MatchConfig};
use crate::media::{load_video, FrameSequence, Manifest, Role};
use crate::metrics::{EvalReport, GroundTruth, MethodStats};
use crate::selection::{select, PolicyKind, SelectionPolicy};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CorpusConfig {
    Synthetic(SyntheticCorpusSpec),
    Manifest {
        path: PathBuf,
        ground_truth: PathBuf,
    },
}

/// Which videos feed the background pool used for score normalization.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Background {
    #[default]
    Distractors,
    None,
    Videos(Vec<String>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatcherConfig {
    #[serde(default = "one")]
    pub beta: f64,
    #[serde(default = "one_usize")]
    pub top_k: usize,
    #[serde(default)]
    pub background: Background,
}

fn one() -> f64 {
    1.0
}

fn one_usize() -> usize {
    1
}

fn three() -> usize {
    3
}

impl Default for MatcherConfig {
    fn default() -> Self {
        MatcherConfig {
            beta: 1.0,
            top_k: 1,
            background: Background::Distractors,
        }
    }
}

impl MatcherConfig {
    pub fn match_config(&self) -> MatchConfig {
        MatchConfig {
            beta: self.beta,
            top_k: self.top_k,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub corpus: CorpusConfig,
    pub policies: Vec<SelectionPolicy>,
    /// A `none` cell is added in front when missing.
    #[serde(default)]
    pub attacks: Vec<AttackSpec>,
    #[serde(default)]
    pub matcher: MatcherConfig,
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
    /// Repeats for random-blackout cells.
    #[serde(default = "three")]
    pub random_repeats: usize,
    /// Worker threads; 0 uses every core.
    #[serde(default)]
    pub threads: usize,
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }

    pub fn validate(&self) -> Result<()> {
        if self.policies.is_empty() {
            return Err(Error::Config("at least one policy is required".into()));
        }
        for p in &self.policies {
            p.validate()?;
        }
        for a in &self.attacks {
            a.validate()?;
        }
        if self.random_repeats == 0 {
            return Err(Error::Config("random_repeats must be at least 1".into()));
        }
        if !self.matcher.beta.is_finite() || self.matcher.top_k == 0 {
            return Err(Error::Config(
                "matcher needs a finite beta and top_k >= 1".into(),
            ));
        }
        if let CorpusConfig::Synthetic(spec) = &self.corpus {
            spec.validate()?;
        }
        Ok(())
    }

    /// Attacks in run order, with `none` guaranteed first.
    pub fn attack_list(&self) -> Vec<AttackSpec> {
        let mut out = Vec::with_capacity(self.attacks.len() + 1);
        if !self.attacks.contains(&AttackSpec::None) {
            out.push(AttackSpec::None);
        }
        out.extend(self.attacks.iter().copied());
        out
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VideoInfo {
    pub video_id: String,
    pub role: Role,
    pub distractor: bool,
}

/// A loaded corpus: synthetic videos are rendered on demand, manifest
/// videos are read from disk on demand.
pub enum Corpus {
    Synthetic(SyntheticCorpus),
    Files {
        manifest: Manifest,
        ground_truth: GroundTruth,
    },
}

impl Corpus {
    pub fn open(config: &CorpusConfig) -> Result<Self> {
        match config {
            CorpusConfig::Synthetic(spec) => {
                Ok(Corpus::Synthetic(SyntheticCorpus::new(spec.clone())?))
            }
            CorpusConfig::Manifest { path, ground_truth } => {
                let manifest = Manifest::load(path)?;
                let file =
                    std::fs::File::open(ground_truth).map_err(|e| Error::io(ground_truth, e))?;
                let ground_truth = GroundTruth::read_csv(std::io::BufReader::new(file))?;
                Ok(Corpus::Files {
                    manifest,
                    ground_truth,
                })
            }
        }
    }

    /// All videos, sorted by id.
    pub fn videos(&self) -> Vec<VideoInfo> {
        let mut v: Vec<VideoInfo> = match self {
            Corpus::Synthetic(c) => c
                .plans
                .iter()
                .map(|p| VideoInfo {
                    video_id: p.video_id.clone(),
                    role: p.role,
                    distractor: p.distractor,
                })
                .collect(),
            Corpus::Files { manifest, .. } => manifest
                .entries
                .iter()
                .map(|e| VideoInfo {
                    video_id: e.video_id.clone(),
                    role: e.role,
                    distractor: e.distractor,
                })
                .collect(),
        };
        v.sort_by(|a, b| a.video_id.cmp(&b.video_id));
        v
    }

    pub fn load(&self, video_id: &str) -> Result<FrameSequence> {
        match self {
            Corpus::Synthetic(c) => c.render(video_id),
            Corpus::Files { manifest, .. } => {
                let e = manifest
                    .entries
                    .iter()
                    .find(|e| e.video_id == video_id)
                    .ok_or_else(|| Error::InvalidArgument(format!("unknown video {video_id:?}")))?;
                load_video(&e.path, &e.video_id, e.fps_override)
            }
        }
    }

    pub fn ground_truth(&self) -> &GroundTruth {
        match self {
            Corpus::Synthetic(c) => &c.ground_truth,
            Corpus::Files { ground_truth, .. } => ground_truth,
        }
    }
}

/// One video through attack, selection and description.
struct Processed {
    set: DescriptorSet,
    source_frames: usize,
    load: Duration,
    attack: Duration,
    select: Duration,
    describe: Duration,
}

fn process(
    corpus: &Corpus,
    video_id: &str,
    policy: &SelectionPolicy,
    attack: &AttackSpec,
    seed: u64,
) -> Result<Processed> {
    let describer = DctDescriptor::default();
    let t = Instant::now();
    let clean = corpus.load(video_id)?;
    let load = t.elapsed();
    let t = Instant::now();
    let seq = match attack {
        AttackSpec::None => clean,
        _ => attack.apply(&clean, seed)?,
    };
    let attack_time = t.elapsed();
    let t = Instant::now();
    let selection = select(&seq, policy)?;
    let select_time = t.elapsed();
    let t = Instant::now();
    let set = describe_selection(&seq, &selection, &describer);
    let describe = t.elapsed();
    Ok(Processed {
        set,
        source_frames: seq.len(),
        load,
        attack: attack_time,
        select: select_time,
        describe,
    })
}

fn process_all(
    corpus: &Corpus,
    ids: &[&str],
    policy: &SelectionPolicy,
    attack: &AttackSpec,
    cell_seed: u64,
) -> Result<Vec<Processed>> {
    ids.par_iter()
        .map(|id| process(corpus, id, policy, attack, derive_seed(cell_seed, id)))
        .collect()
}

#[derive(Debug, Clone, Copy, Default)]
struct Tally {
    frames: usize,
    reduction_sum: f64,
    videos: usize,
}

impl Tally {
    fn add(&mut self, items: &[Processed]) {
        for p in items {
            self.frames += p.set.len();
            self.reduction_sum += p.source_frames as f64 / p.set.len() as f64;
            self.videos += 1;
        }
    }
}

fn record(probe: &mut TimingProbe, items: &[Processed]) {
    for p in items {
        probe.add("load", p.load, 1);
        probe.add("attack", p.attack, 1);
        probe.add("select", p.select, 1);
        probe.add("describe", p.describe, 1);
    }
}

/// Result of one (policy, attack) cell.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CellResult {
    pub name: String,
    pub policy: SelectionPolicy,
    pub attack: AttackSpec,
    pub seeds: Vec<u64>,
    pub uaps: Vec<f64>,
    pub uap_mean: f64,
    /// Sample standard deviation over repeats; 0 for a single run.
    pub uap_std: f64,
    pub reports: Vec<EvalReport>,
    /// Means over repeats, references included.
    pub frames_selected: f64,
    pub reduction_factor: f64,
    pub descriptor_bytes: f64,
    #[serde(skip)]
    pub timing: TimingReport,
    /// Videos per second through selection and description.
    #[serde(skip)]
    pub videos_per_second: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub method: String,
    pub window: Option<usize>,
    pub attack: String,
    pub param: String,
    pub uap_mean: f64,
    pub uap_std: f64,
    pub uap_runs: Vec<f64>,
    pub frames_selected: f64,
    pub reduction_factor: f64,
    pub descriptor_bytes: f64,
}

impl CellResult {
    pub fn summary_row(&self) -> SummaryRow {
        SummaryRow {
            method: self.policy.kind.as_str().to_string(),
            window: (self.policy.kind != PolicyKind::UniformPerSecond)
                .then_some(self.policy.window),
            attack: self.attack.name().to_string(),
            param: self.attack.param(),
            uap_mean: self.uap_mean,
            uap_std: self.uap_std,
            uap_runs: self.uaps.clone(),
            frames_selected: self.frames_selected,
            reduction_factor: self.reduction_factor,
            descriptor_bytes: self.descriptor_bytes,
        }
    }
}

#[derive(Debug, Clone)]
pub struct ExperimentResult {
    pub cells: Vec<CellResult>,
    pub timing: TimingReport,
}

impl ExperimentResult {
    pub fn cell(&self, policy: &SelectionPolicy, attack: &AttackSpec) -> Option<&CellResult> {
        self.cells
            .iter()
            .find(|c| &c.policy == policy && &c.attack == attack)
    }

    pub fn summary_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let e = |e: csv::Error| Error::Csv(e.to_string());
        w.write_record([
            "method",
            "window",
            "attack",
            "param",
            "uap_mean",
            "uap_std",
            "frames_selected",
            "reduction_factor",
            "descriptor_bytes",
            "vid_per_s",
        ])
        .map_err(e)?;
        for c in &self.cells {
            let r = c.summary_row();
            w.write_record([
                r.method,
                r.window.map(|w| w.to_string()).unwrap_or_default(),
                r.attack,
                r.param,
                format_significant(r.uap_mean, 9),
                format_significant(r.uap_std, 9),
                format_significant(r.frames_selected, 9),
                format_significant(r.reduction_factor, 9),
                format_significant(r.descriptor_bytes, 9),
                format_significant(c.videos_per_second, 6),
            ])
            .map_err(e)?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Csv(e.to_string()))?;
        Ok(String::from_utf8(bytes).expect("csv output is UTF-8"))
    }

    pub fn summary_json(&self) -> String {
        let rows: Vec<SummaryRow> = self.cells.iter().map(|c| c.summary_row()).collect();
        serde_json::to_string_pretty(&rows).expect("summary serializes") + "\n"
    }

    pub fn timing_json(&self) -> String {
        #[derive(Serialize)]
        struct Doc<'a> {
            total: &'a TimingReport,
            cells: BTreeMap<&'a str, CellTiming<'a>>,
        }
        #[derive(Serialize)]
        struct CellTiming<'a> {
            videos_per_second: f64,
            #[serde(flatten)]
            report: &'a TimingReport,
        }
        let doc = Doc {
            total: &self.timing,
            cells: self
                .cells
                .iter()
                .map(|c| {
                    (
                        c.name.as_str(),
                        CellTiming {
                            videos_per_second: c.videos_per_second,
                            report: &c.timing,
                        },
                    )
                })
                .collect(),
        };
        serde_json::to_string_pretty(&doc).expect("timing serializes") + "\n"
    }

    pub fn write(&self, dir: &Path) -> Result<()> {
        let put = |name: &str, text: String| {
            let p = dir.join(name);
            std::fs::write(&p, text).map_err(|e| Error::io(&p, e))
        };
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        put("summary.csv", self.summary_csv()?)?;
        put("summary.json", self.summary_json())?;
        put("timing.json", self.timing_json())
    }
}

fn sanitize(label: &str) -> String {
    let mut s = String::with_capacity(label.len());
    for c in label.chars() {
        if c.is_ascii_alphanumeric() || matches!(c, '.' | '-' | '_') {
            s.push(c);
        } else if !s.ends_with('_') {
            s.push('_');
        }
    }
    s.trim_end_matches('_').to_string()
}

/// File stem for one run of a cell.
pub fn cell_name(policy: &SelectionPolicy, attack: &AttackSpec, repeat: Option<usize>) -> String {
    let base = format!("{}__{}", policy.label(), sanitize(&attack.label()));
    match repeat {
        Some(r) => format!("{base}__r{r}"),
        None => base,
    }
}

/// Seed of one repeat of one cell.
pub fn cell_seed(base: u64, policy: &SelectionPolicy, attack: &AttackSpec, repeat: usize) -> u64 {
    derive_seed(
        base,
        &format!("{}|{}|{}", policy.label(), attack.label(), repeat),
    )
}

fn mean_std(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentResult> {
    config.validate()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.threads)
        .build()
        .map_err(|e| Error::Invariant(format!("thread pool: {e}")))?;
    pool.install(|| {
        let corpus = Corpus::open(&config.corpus)?;
        run_on_corpus(config, &corpus)
    })
}

/// Run the grid on an already opened corpus, in the current thread pool.
pub fn run_on_corpus(config: &ExperimentConfig, corpus: &Corpus) -> Result<ExperimentResult> {
    config.validate()?;
    let started = Instant::now();
    let videos = corpus.videos();
    let refs: Vec<&str> = videos
        .iter()
        .filter(|v| v.role == Role::Reference)
        .map(|v| v.video_id.as_str())
        .collect();
    let queries: Vec<&str> = videos
        .iter()
        .filter(|v| v.role == Role::Query)
        .map(|v| v.video_id.as_str())
        .collect();
    if refs.is_empty() || queries.is_empty() {
        return Err(Error::Config("corpus needs references and queries".into()));
    }
    let background: Vec<&str> = match &config.matcher.background {
        Background::None => Vec::new(),
        Background::Distractors => videos
            .iter()
            .filter(|v| v.distractor)
            .map(|v| v.video_id.as_str())
            .collect(),
        Background::Videos(ids) => {
            for id in ids {
                if !videos.iter().any(|v| &v.video_id == id) {
                    return Err(Error::Config(format!(
                        "background video {id:?} not in corpus"
                    )));
                }
            }
            ids.iter().map(String::as_str).collect()
        }
    };
    let gt = corpus.ground_truth();
    let match_config = config.matcher.match_config();
    let out = config.output_dir.as_deref();
    if let Some(dir) = out {
        for sub in ["scores", "reports"] {
            let p = dir.join(sub);
            std::fs::create_dir_all(&p).map_err(|e| Error::io(&p, e))?;
        }
    }

    let mut total = TimingProbe::new();
    let mut cells = Vec::new();
    for policy in &config.policies {
        let policy_err = |e: Error| Error::Cell {
            cell: policy.label(),
            source: Box::new(e),
        };
        let ref_items =
            process_all(corpus, &refs, policy, &AttackSpec::None, 0).map_err(policy_err)?;
        let mut ref_probe = TimingProbe::new();
        record(&mut ref_probe, &ref_items);
        let mut ref_tally = Tally::default();
        ref_tally.add(&ref_items);
        let ref_sets: Vec<DescriptorSet> = ref_items.into_iter().map(|p| p.set).collect();
        let ref_bytes = store_size(&ref_sets);

        let bg_pool = if background.is_empty() {
            None
        } else {
            let items = process_all(corpus, &background, policy, &AttackSpec::None, 0)
                .map_err(policy_err)?;
            Some(BackgroundPool::from_sets(items.iter().map(|p| &p.set)))
        };

        for attack in config.attack_list() {
            let repeats = if attack.is_random() {
                config.random_repeats
            } else {
                1
            };
            let mut probe = ref_probe.clone();
            let mut counted = ref_tally.videos;
            let mut seeds = Vec::new();
            let mut uaps = Vec::new();
            let mut reports = Vec::new();
            let (mut frames, mut reduction, mut bytes) = (0.0, 0.0, 0.0);
            for rep in 0..repeats {
                let name = cell_name(policy, &attack, attack.is_random().then_some(rep));
                let cell_err = |e: Error| Error::Cell {
                    cell: name.clone(),
                    source: Box::new(e),
                };
                let seed = cell_seed(config.seed, policy, &attack, rep);
                let items =
                    process_all(corpus, &queries, policy, &attack, seed).map_err(cell_err)?;
                record(&mut probe, &items);
                counted += items.len();
                let mut tally = ref_tally;
                tally.add(&items);
                let q_sets: Vec<DescriptorSet> = items.into_iter().map(|p| p.set).collect();
                let q_bytes = store_size(&q_sets);
                let t = Instant::now();
                let predictions = match_all(&q_sets, &ref_sets, bg_pool.as_ref(), &match_config)
                    .map_err(cell_err)?;
                probe.add("match", t.elapsed(), q_sets.len());

                let stats = MethodStats {
                    selected_frames_total: tally.frames,
                    reduction_factor_mean: tally.reduction_sum / tally.videos as f64,
                    descriptor_bytes: ref_bytes + q_bytes,
                    wall_time_seconds: None,
                    videos_per_second: None,
                };
                frames += stats.selected_frames_total as f64;
                reduction += stats.reduction_factor_mean;
                bytes += stats.descriptor_bytes as f64;
                let report = EvalReport::compute(
                    &predictions,
                    gt,
                    BTreeMap::from([(policy.label(), stats)]),
                )
                .map_err(cell_err)?;
                if let Some(dir) = out {
                    let p = dir.join("scores").join(format!("{name}.csv"));
                    let f = std::fs::File::create(&p).map_err(|e| cell_err(Error::io(&p, e)))?;
                    predictions
                        .write_csv(std::io::BufWriter::new(f))
                        .map_err(cell_err)?;
                    let p = dir.join("reports").join(format!("{name}.json"));
                    std::fs::write(&p, report.to_json()).map_err(|e| cell_err(Error::io(&p, e)))?;
                }
                seeds.push(seed);
                uaps.push(report.uap);
                reports.push(report);
            }
            let (uap_mean, uap_std) = mean_std(&uaps);
            let n = repeats as f64;
            let busy = probe.seconds("select") + probe.seconds("describe");
            let timing = probe.report(counted);
            total.merge(&probe);
            cells.push(CellResult {
                name: cell_name(policy, &attack, None),
                policy: *policy,
                attack,
                seeds,
                uaps,
                uap_mean,
                uap_std,
                reports,
                frames_selected: frames / n,
                reduction_factor: reduction / n,
                descriptor_bytes: bytes / n,
                timing,
                videos_per_second: videos_per_second(counted, busy),
            });
        }
    }
    let result = ExperimentResult {
        cells,
        timing: total.report_with_elapsed(videos.len(), started.elapsed()),
    };
    if let Some(dir) = out {
        result.write(dir)?;
    }
    Ok(result)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::corpus::CountRange;

    fn tiny_config() -> ExperimentConfig {
        ExperimentConfig {
            corpus: CorpusConfig::Synthetic(SyntheticCorpusSpec {
                num_references: 6,
                num_queries_positive: 3,
                num_distractors: 3,
                scenes_per_video: CountRange { min: 3, max: 4 },
                scenes_per_query: CountRange { min: 2, max: 3 },
                seed: 5,
                ..Default::default()
            }),
            policies: vec![
                SelectionPolicy::uniform(),
                SelectionPolicy::local_max(30).unwrap(),
                SelectionPolicy::local_max_mid(30).unwrap(),
            ],
            attacks: vec![
                AttackSpec::RandomBlackout {
                    p: 0.1,
                    seed: None,
                    bleed: 0,
                },
                AttackSpec::TargetedBlackout { bleed: 0 },
                AttackSpec::Speed { factor: 1.5 },
            ],
            matcher: MatcherConfig::default(),
            seed: 1,
            output_dir: None,
            random_repeats: 3,
            threads: 2,
        }
    }

    #[test]
    fn grid_shape() {
        let r = run_experiment(&tiny_config()).unwrap();
        assert_eq!(r.cells.len(), 12);
        for c in &r.cells {
            let want = if c.attack.is_random() { 3 } else { 1 };
            assert_eq!(c.uaps.len(), want, "{}", c.name);
            assert!(c.uaps.iter().all(|u| (0.0..=1.0).contains(u)));
        }
        let csv = r.summary_csv().unwrap();
        assert_eq!(csv.lines().count(), 13);
        assert!(csv.starts_with("method,window,attack,param,uap_mean,uap_std,"));
    }

    #[test]
    fn none_is_added_first() {
        let cfg = tiny_config();
        assert_eq!(cfg.attack_list()[0], AttackSpec::None);
        assert_eq!(cfg.attack_list().len(), 4);
    }

    #[test]
    fn speed_cells_equal_clean_cells_for_curve_policies() {
        let r = run_experiment(&tiny_config()).unwrap();
        for p in &tiny_config().policies[1..] {
            let clean = r.cell(p, &AttackSpec::None).unwrap();
            let fast = r.cell(p, &AttackSpec::Speed { factor: 1.5 }).unwrap();
            assert_eq!(clean.uap_mean.to_bits(), fast.uap_mean.to_bits());
        }
    }

    #[test]
    fn files_are_written() {
        let tmp = tempfile::tempdir().unwrap();
        let mut cfg = tiny_config();
        cfg.policies.truncate(1);
        cfg.attacks.truncate(1);
        cfg.output_dir = Some(tmp.path().to_path_buf());
        run_experiment(&cfg).unwrap();
        let scores: Vec<_> = std::fs::read_dir(tmp.path().join("scores"))
            .unwrap()
            .collect();
        assert_eq!(scores.len(), 4);
        for f in ["summary.csv", "summary.json", "timing.json"] {
            assert!(tmp.path().join(f).is_file(), "{f}");
        }
        assert!(tmp
            .path()
            .join("reports/uniform_per_second__random_p_0.1__r2.json")
            .is_file());
    }

    #[test]
    fn config_round_trips_through_json() {
        let cfg = tiny_config();
        let text = serde_json::to_string(&cfg).unwrap();
        let back: ExperimentConfig = serde_json::from_str(&text).unwrap();
        assert_eq!(back, cfg);
        let minimal = r#"{"corpus": {"manifest": {"path": "m.json", "ground_truth": "gt.csv"}},
                          "policies": [{"kind": "local_max_mid", "window": 30}]}"#;
        let m: ExperimentConfig = serde_json::from_str(minimal).unwrap();
        assert_eq!(m.random_repeats, 3);
        assert_eq!(m.matcher, MatcherConfig::default());
        assert!(serde_json::from_str::<ExperimentConfig>(
            r#"{"corpus": {"synthetic": {}}, "policies": []}"#
        )
        .unwrap()
        .validate()
        .is_err());
    }

    #[test]
    fn sample_std() {
        assert_eq!(mean_std(&[0.5]), (0.5, 0.0));
        let (m, s) = mean_std(&[1.0, 2.0, 3.0]);
        assert_eq!(m, 2.0);
        assert!((s - 1.0).abs() < 1e-15);
    }
}
