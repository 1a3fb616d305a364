//! Millisecond time axis shared by every stream.
//!
//! The interaction is cut into half-open windows `[(k-1)·t, k·t)` of `t`
//! milliseconds. Chunk indices are 1-based, so a timestamp that lands exactly
//! on `k·t` already belongs to chunk `k + 1`.

use std::fmt;

use thiserror::Error;

/// Look-ahead bound used by the preset configurations.
pub const DEFAULT_LOOK_AHEAD_TOKENS: usize = 2;

/// Errors raised while building timeline values or validating traces.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TimelineError {
    #[error("chunk duration must be at least 1 ms")]
    ZeroChunkDuration,
    #[error("chunk indices are 1-based; got 0")]
    ZeroChunkIndex,
    #[error("timestamps in the {stream} stream decrease at index {index}")]
    NonMonotoneTimestamps { stream: Stream, index: usize },
    #[error("audio event {index} spans [{start_ms}, {end_ms}) which is empty")]
    EmptyAudioSpan {
        index: usize,
        start_ms: u64,
        end_ms: u64,
    },
}

/// Which environment stream an event belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Stream {
    Visual,
    Audio,
}

impl fmt::Display for Stream {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Stream::Visual => f.write_str("visual"),
            Stream::Audio => f.write_str("audio"),
        }
    }
}

/// Milliseconds since the interaction started.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Timestamp(u64);

impl Timestamp {
    pub const ZERO: Timestamp = Timestamp(0);

    pub const fn from_ms(ms: u64) -> Self {
        Timestamp(ms)
    }

    pub const fn as_ms(self) -> u64 {
        self.0
    }
}

impl From<u64> for Timestamp {
    fn from(ms: u64) -> Self {
        Timestamp(ms)
    }
}

impl fmt::Display for Timestamp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}ms", self.0)
    }
}

/// Chunk duration plus the look-ahead bound used by the speech scheduler.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ChunkConfig {
    duration_ms: u64,
    look_ahead_tokens: usize,
}

impl ChunkConfig {
    pub fn new(duration_ms: u64, look_ahead_tokens: usize) -> Result<Self, TimelineError> {
        if duration_ms == 0 {
            return Err(TimelineError::ZeroChunkDuration);
        }
        Ok(Self {
            duration_ms,
            look_ahead_tokens,
        })
    }

    pub fn duration_ms(&self) -> u64 {
        self.duration_ms
    }

    pub fn look_ahead_tokens(&self) -> usize {
        self.look_ahead_tokens
    }

    pub fn with_look_ahead(self, look_ahead_tokens: usize) -> Self {
        Self {
            look_ahead_tokens,
            ..self
        }
    }

    /// Number of chunks needed to cover `horizon_ms` (ceil division).
    pub fn chunks_for(&self, horizon_ms: u64) -> u64 {
        horizon_ms.div_ceil(self.duration_ms)
    }

    /// `k·t`, the exclusive end of chunk `k`.
    pub fn boundary(&self, k: ChunkIndex) -> u64 {
        k.get() * self.duration_ms
    }
}

/// 1-based chunk number.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ChunkIndex(u64);

impl ChunkIndex {
    pub const FIRST: ChunkIndex = ChunkIndex(1);

    pub fn new(k: u64) -> Result<Self, TimelineError> {
        if k == 0 {
            Err(TimelineError::ZeroChunkIndex)
        } else {
            Ok(ChunkIndex(k))
        }
    }

    pub const fn get(self) -> u64 {
        self.0
    }

    pub const fn next(self) -> Self {
        ChunkIndex(self.0 + 1)
    }

    /// Iterates `1..=last`.
    pub fn up_to(last: u64) -> impl Iterator<Item = ChunkIndex> {
        (1..=last).map(ChunkIndex)
    }
}

impl fmt::Display for ChunkIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

/// The unique `k` with `(k-1)·t <= ts < k·t`.
pub fn chunk_index(ts: Timestamp, cfg: &ChunkConfig) -> ChunkIndex {
    ChunkIndex(ts.0 / cfg.duration_ms + 1)
}

/// Half-open window `[(k-1)·t, k·t)` of chunk `k`.
pub fn chunk_window(k: ChunkIndex, cfg: &ChunkConfig) -> (Timestamp, Timestamp) {
    let t = cfg.duration_ms;
    (Timestamp((k.0 - 1) * t), Timestamp(k.0 * t))
}

/// One sampled video frame.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct VisualEvent {
    pub at: Timestamp,
    pub width_px: u32,
    pub height_px: u32,
}

/// A span of environment audio, `[start, end)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct AudioEvent {
    pub start: Timestamp,
    pub end: Timestamp,
}

/// Time-ordered env-visual and env-audio events.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct InputTrace {
    pub visual_events: Vec<VisualEvent>,
    pub audio_events: Vec<AudioEvent>,
}

impl InputTrace {
    /// End of the last observed event. A frame at `ts` occupies `[ts, ts+1)`.
    pub fn horizon_ms(&self) -> u64 {
        let visual = self
            .visual_events
            .iter()
            .map(|v| v.at.0 + 1)
            .max()
            .unwrap_or(0);
        let audio = self.audio_events.iter().map(|a| a.end.0).max().unwrap_or(0);
        visual.max(audio)
    }

    /// Milliseconds of `[0, until_ms)` covered by at least one audio event.
    ///
    /// Overlapping events are counted once.
    pub fn audio_covered_ms(&self, until_ms: u64) -> u64 {
        let mut covered = 0;
        let mut reach = 0;
        // events are sorted by start (validate_trace)
        for ev in &self.audio_events {
            if ev.start.0 >= until_ms {
                break;
            }
            let start = ev.start.0.max(reach);
            let end = ev.end.0.min(until_ms);
            if end > start {
                covered += end - start;
            }
            reach = reach.max(ev.end.0);
        }
        covered
    }
}

/// Returns the trace unchanged if its ordering and span invariants hold.
pub fn validate_trace(raw: InputTrace) -> Result<InputTrace, TimelineError> {
    if let Some(index) = raw
        .visual_events
        .windows(2)
        .position(|w| w[1].at < w[0].at)
    {
        return Err(TimelineError::NonMonotoneTimestamps {
            stream: Stream::Visual,
            index: index + 1,
        });
    }
    for (index, ev) in raw.audio_events.iter().enumerate() {
        if ev.end <= ev.start {
            return Err(TimelineError::EmptyAudioSpan {
                index,
                start_ms: ev.start.0,
                end_ms: ev.end.0,
            });
        }
    }
    if let Some(index) = raw
        .audio_events
        .windows(2)
        .position(|w| w[1].start < w[0].start)
    {
        return Err(TimelineError::NonMonotoneTimestamps {
            stream: Stream::Audio,
            index: index + 1,
        });
    }
    Ok(raw)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(t: u64) -> ChunkConfig {
        ChunkConfig::new(t, 0).unwrap()
    }

    fn brute_force_index(ts: u64, t: u64) -> u64 {
        (1..).find(|k| (k - 1) * t <= ts && ts < k * t).unwrap()
    }

    #[test]
    fn index_examples() {
        assert_eq!(chunk_index(Timestamp(0), &cfg(1000)).get(), 1);
        assert_eq!(chunk_index(Timestamp(999), &cfg(1000)).get(), 1);
        assert_eq!(chunk_index(Timestamp(1000), &cfg(1000)).get(), 2);
        assert_eq!(brute_force_index(2500, 200), 13);
        assert_eq!(chunk_index(Timestamp(2500), &cfg(200)).get(), 13);
    }

    #[test]
    fn window_examples() {
        let w = |k, t| {
            let (a, b) = chunk_window(ChunkIndex::new(k).unwrap(), &cfg(t));
            (a.as_ms(), b.as_ms())
        };
        assert_eq!(w(1, 1000), (0, 1000));
        assert_eq!(w(3, 1000), (2000, 3000));
        assert_eq!(w(2, 100), (100, 200));
    }

    #[test]
    fn exhaustive_partition_sweep() {
        for t in [100, 200, 1000] {
            let c = cfg(t);
            for ts in 0..10 * t {
                let k = chunk_index(Timestamp(ts), &c);
                assert_eq!(k.get(), brute_force_index(ts, t));
                let (lo, hi) = chunk_window(k, &c);
                assert!(lo.as_ms() <= ts && ts < hi.as_ms());
            }
            for k in 1..=10 {
                assert_eq!(chunk_index(Timestamp(k * t), &c).get(), k + 1);
            }
        }
    }

    #[test]
    fn zero_values_rejected() {
        assert_eq!(ChunkConfig::new(0, 0), Err(TimelineError::ZeroChunkDuration));
        assert_eq!(ChunkIndex::new(0), Err(TimelineError::ZeroChunkIndex));
    }

    #[test]
    fn validate_examples() {
        assert!(validate_trace(InputTrace::default()).is_ok());

        let degenerate = InputTrace {
            audio_events: vec![AudioEvent {
                start: Timestamp(500),
                end: Timestamp(500),
            }],
            ..Default::default()
        };
        assert!(matches!(
            validate_trace(degenerate),
            Err(TimelineError::EmptyAudioSpan { index: 0, .. })
        ));

        let frame = |ms| VisualEvent {
            at: Timestamp(ms),
            width_px: 448,
            height_px: 448,
        };
        let backwards = InputTrace {
            visual_events: vec![frame(100), frame(50)],
            ..Default::default()
        };
        assert_eq!(
            validate_trace(backwards),
            Err(TimelineError::NonMonotoneTimestamps {
                stream: Stream::Visual,
                index: 1
            })
        );
    }

    #[test]
    fn audio_coverage_merges_overlaps() {
        let span = |a, b| AudioEvent {
            start: Timestamp(a),
            end: Timestamp(b),
        };
        let trace = InputTrace {
            audio_events: vec![span(0, 400), span(200, 600), span(800, 1000)],
            ..Default::default()
        };
        assert_eq!(trace.audio_covered_ms(1000), 800);
        assert_eq!(trace.audio_covered_ms(500), 500);
        assert_eq!(trace.audio_covered_ms(700), 600);
        assert_eq!(trace.horizon_ms(), 1000);
    }
}
