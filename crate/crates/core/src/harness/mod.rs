//! Synthetic corpora, the experiment grid runner and timing.

pub mod corpus;
pub mod experiment;
pub mod timing;

pub use corpus::{
    generate_corpus, CopySpan, CountRange, GeneratedCorpus, SceneLength, SyntheticCorpus,
    SyntheticCorpusSpec, VideoPlan,
};
pub use experiment::{
    run_experiment, Background, CellResult, Corpus, CorpusConfig, ExperimentConfig,
    ExperimentResult, MatcherConfig,
};
pub use timing::{timing_probe, videos_per_second, StageTiming, TimingProbe, TimingReport};

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

/// 64-bit FNV-1a.
pub fn fnv1a64(bytes: &[u8]) -> u64 {
    bytes
        .iter()
        .fold(FNV_OFFSET, |h, &b| (h ^ b as u64).wrapping_mul(FNV_PRIME))
}

/// Child seed: FNV-1a of the decimal base seed, a `|`, and the tag.
pub fn derive_seed(base: u64, tag: &str) -> u64 {
    fnv1a64(format!("{base}|{tag}").as_bytes())
}
