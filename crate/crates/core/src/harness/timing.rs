//! Per-stage wall-clock accounting.

use std::collections::BTreeMap;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

/// Durations shorter than this are treated as this long when computing a
/// rate, so microsecond-scale runs never divide by zero.
pub const MIN_SECONDS: f64 = 1e-6;

pub fn videos_per_second(videos: usize, seconds: f64) -> f64 {
    videos as f64 / seconds.max(MIN_SECONDS)
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct StageTiming {
    pub seconds: f64,
    pub videos: usize,
    pub videos_per_second: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TimingReport {
    pub stages: BTreeMap<String, StageTiming>,
    pub end_to_end: StageTiming,
}

/// Accumulates time per named stage. Stage times may be summed from many
/// workers, so they measure busy time rather than elapsed time; the
/// end-to-end figure is the elapsed time since the probe started.
#[derive(Debug, Clone)]
pub struct TimingProbe {
    started: Instant,
    stages: BTreeMap<String, (Duration, usize)>,
}

impl Default for TimingProbe {
    fn default() -> Self {
        Self::new()
    }
}

impl TimingProbe {
    pub fn new() -> Self {
        TimingProbe {
            started: Instant::now(),
            stages: BTreeMap::new(),
        }
    }

    pub fn add(&mut self, stage: &str, elapsed: Duration, videos: usize) {
        let e = self.stages.entry(stage.to_string()).or_default();
        e.0 += elapsed;
        e.1 += videos;
    }

    /// Run `f` as one stage over `videos` videos.
    pub fn time<T>(&mut self, stage: &str, videos: usize, f: impl FnOnce() -> T) -> T {
        let t = Instant::now();
        let out = f();
        self.add(stage, t.elapsed(), videos);
        out
    }

    pub fn merge(&mut self, other: &TimingProbe) {
        for (k, &(d, n)) in &other.stages {
            self.add(k, d, n);
        }
    }

    pub fn seconds(&self, stage: &str) -> f64 {
        self.stages.get(stage).map_or(0.0, |s| s.0.as_secs_f64())
    }

    pub fn report(&self, videos: usize) -> TimingReport {
        self.report_with_elapsed(videos, self.started.elapsed())
    }

    pub fn report_with_elapsed(&self, videos: usize, elapsed: Duration) -> TimingReport {
        let stage = |seconds: f64, videos: usize| StageTiming {
            seconds,
            videos,
            videos_per_second: videos_per_second(videos, seconds),
        };
        TimingReport {
            stages: self
                .stages
                .iter()
                .map(|(k, &(d, n))| (k.clone(), stage(d.as_secs_f64(), n)))
                .collect(),
            end_to_end: stage(elapsed.as_secs_f64(), videos),
        }
    }
}

/// Time a list of stages run in order over the same set of videos.
pub fn timing_probe(videos: usize, stages: &mut [(&str, &mut dyn FnMut())]) -> TimingReport {
    let mut probe = TimingProbe::new();
    for (name, f) in stages.iter_mut() {
        probe.time(name, videos, f);
    }
    probe.report(videos)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ten_videos_in_five_seconds() {
        assert_eq!(videos_per_second(10, 5.0), 2.0);
        let mut p = TimingProbe::new();
        p.add("describe", Duration::from_secs(5), 10);
        let r = p.report_with_elapsed(10, Duration::from_secs(5));
        assert_eq!(r.stages["describe"].videos_per_second, 2.0);
        assert_eq!(r.end_to_end.videos_per_second, 2.0);
    }

    #[test]
    fn zero_duration_is_finite() {
        let v = videos_per_second(3, 0.0);
        assert!(v.is_finite());
        assert_eq!(v, 3e6);
        let r = TimingProbe::new().report_with_elapsed(1, Duration::ZERO);
        assert!(r.end_to_end.videos_per_second.is_finite());
    }

    #[test]
    fn stages_run_in_order() {
        let mut log = Vec::new();
        let mut log2 = Vec::new();
        let mut a = || log.push(1);
        let mut b = || log2.push(2);
        let r = timing_probe(4, &mut [("a", &mut a), ("b", &mut b)]);
        assert_eq!(r.stages.len(), 2);
        assert_eq!(r.stages["a"].videos, 4);
        assert_eq!((log, log2), (vec![1], vec![2]));
    }
}
