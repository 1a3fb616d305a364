//! Training samples from timestamped transcripts.
//!
//! A token belongs to the chunk its *start* time falls in, regardless of how
//! far its audio extends. Its speech frames are read off the 25/s grid from
//! the token's own start and end times. The speech of the last `look_ahead`
//! tokens of each chunk is listed under the following chunk.

use thiserror::Error;

use crate::budget::{self, BudgetError, ModalityProfile};
use crate::serializer::{ChunkOutputs, Content};
use crate::timeline::{chunk_index, ChunkConfig, ChunkIndex, Timestamp};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SupervisionError {
    #[error("token {index} has an empty span [{start_ms}, {end_ms})")]
    EmptyToken {
        index: usize,
        start_ms: u64,
        end_ms: u64,
    },
    #[error("token {index} starts before the previous token")]
    NonMonotoneStarts { index: usize },
    #[error("token {index} overlaps the previous token")]
    OverlappingSpans { index: usize },
    #[error(transparent)]
    Budget(#[from] BudgetError),
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct TranscriptToken {
    pub payload: String,
    pub start_ms: u64,
    pub end_ms: u64,
}

impl TranscriptToken {
    pub fn new(payload: impl Into<String>, start_ms: u64, end_ms: u64) -> Self {
        Self {
            payload: payload.into(),
            start_ms,
            end_ms,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct TimedTranscript {
    pub tokens: Vec<TranscriptToken>,
}

impl TimedTranscript {
    pub fn new(tokens: Vec<TranscriptToken>) -> Self {
        Self { tokens }
    }

    pub fn validate(&self) -> Result<(), SupervisionError> {
        for (index, tok) in self.tokens.iter().enumerate() {
            if tok.end_ms <= tok.start_ms {
                return Err(SupervisionError::EmptyToken {
                    index,
                    start_ms: tok.start_ms,
                    end_ms: tok.end_ms,
                });
            }
            if index > 0 {
                let prev = &self.tokens[index - 1];
                if tok.start_ms < prev.start_ms {
                    return Err(SupervisionError::NonMonotoneStarts { index });
                }
                if tok.start_ms < prev.end_ms {
                    return Err(SupervisionError::OverlappingSpans { index });
                }
            }
        }
        Ok(())
    }
}

/// Speech frames of one transcript token.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct SpeechSpan {
    /// Index of the token in the transcript.
    pub token: usize,
    pub first_frame: u64,
    pub count: u64,
}

impl SpeechSpan {
    pub fn frames(&self) -> std::ops::Range<u64> {
        self.first_frame..self.first_frame + self.count
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SupervisionChunk {
    pub k: ChunkIndex,
    pub text: Vec<TranscriptToken>,
    /// Spans voiced in this chunk that belong to this chunk's own text.
    pub speech: Vec<SpeechSpan>,
    /// Spans carried over from the previous chunk, voiced here first.
    pub deferred_in: Vec<SpeechSpan>,
    /// Spans of this chunk's trailing tokens, voiced in the next chunk.
    pub deferred_out: Vec<SpeechSpan>,
}

impl SupervisionChunk {
    fn empty(k: ChunkIndex) -> Self {
        Self {
            k,
            text: Vec::new(),
            speech: Vec::new(),
            deferred_in: Vec::new(),
            deferred_out: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SupervisionSample {
    pub chunks: Vec<SupervisionChunk>,
    pub cfg: ChunkConfig,
}

pub fn build_sample(
    tr: &TimedTranscript,
    cfg: &ChunkConfig,
    profile: &ModalityProfile,
) -> Result<SupervisionSample, SupervisionError> {
    tr.validate()?;
    let Some(last) = tr.tokens.last() else {
        return Ok(SupervisionSample {
            chunks: Vec::new(),
            cfg: *cfg,
        });
    };
    let last_k = chunk_index(Timestamp::from_ms(last.start_ms), cfg).get();
    let mut chunks: Vec<SupervisionChunk> =
        ChunkIndex::up_to(last_k).map(SupervisionChunk::empty).collect();

    let mut spans: Vec<Vec<SpeechSpan>> = vec![Vec::new(); chunks.len()];
    for (i, tok) in tr.tokens.iter().enumerate() {
        let k = chunk_index(Timestamp::from_ms(tok.start_ms), cfg);
        let slot = (k.get() - 1) as usize;
        let (first_frame, count) = budget::speech_token_span(tok.start_ms, tok.end_ms, profile)?;
        chunks[slot].text.push(tok.clone());
        spans[slot].push(SpeechSpan {
            token: i,
            first_frame,
            count,
        });
    }

    let look_ahead = cfg.look_ahead_tokens();
    for (slot, mut own) in spans.into_iter().enumerate() {
        let keep = own.len() - own.len().min(look_ahead);
        let out = own.split_off(keep);
        chunks[slot].speech = own;
        if out.is_empty() {
            continue;
        }
        if slot + 1 == chunks.len() {
            let k = chunks[slot].k.next();
            chunks.push(SupervisionChunk::empty(k));
        }
        chunks[slot + 1].deferred_in = out.clone();
        chunks[slot].deferred_out = out;
    }

    Ok(SupervisionSample { chunks, cfg: *cfg })
}

/// Per-chunk output parts: text, then carried-over speech, then own speech.
/// Chunks with nothing to emit are left out (they serialize as idle).
pub fn to_serializer_outputs(sample: &SupervisionSample) -> ChunkOutputs {
    let mut outputs = ChunkOutputs::new();
    for chunk in &sample.chunks {
        let mut content: Vec<Content> = chunk
            .text
            .iter()
            .map(|t| Content::Text(t.payload.clone()))
            .collect();
        for span in chunk.deferred_in.iter().chain(&chunk.speech) {
            content.extend(span.frames().map(|f| Content::Speech(format!("s{f}"))));
        }
        if !content.is_empty() {
            outputs.insert(chunk.k, content);
        }
    }
    outputs
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::serializer::{self, BoundaryMode, ControlMode, Role, SerializerConfig};
    use crate::timeline::InputTrace;

    fn tokens(spans: &[(u64, u64)]) -> TimedTranscript {
        TimedTranscript::new(
            spans
                .iter()
                .enumerate()
                .map(|(i, &(s, e))| TranscriptToken::new(format!("t{i}"), s, e))
                .collect(),
        )
    }

    fn cfg(t: u64, l: usize) -> ChunkConfig {
        ChunkConfig::new(t, l).unwrap()
    }

    fn four() -> TimedTranscript {
        tokens(&[(0, 280), (300, 900), (950, 1080), (1100, 1400)])
    }

    #[test]
    fn assignment_keys_on_start_time() {
        let s = build_sample(&four(), &cfg(1000, 0), &ModalityProfile::default()).unwrap();
        let counts: Vec<usize> = s.chunks.iter().map(|c| c.text.len()).collect();
        assert_eq!(counts, vec![3, 1]);
        // the third token crosses 1000 ms but stays in chunk 1
        assert_eq!(s.chunks[0].text[2].payload, "t2");
    }

    #[test]
    fn empty_transcript_has_no_chunks() {
        let s = build_sample(&TimedTranscript::default(), &cfg(1000, 1), &ModalityProfile::default())
            .unwrap();
        assert!(s.chunks.is_empty());
        assert!(to_serializer_outputs(&s).is_empty());
    }

    #[test]
    fn rejects_bad_transcripts() {
        let p = ModalityProfile::default();
        let overlap = tokens(&[(0, 500), (400, 600)]);
        assert_eq!(
            build_sample(&overlap, &cfg(1000, 0), &p),
            Err(SupervisionError::OverlappingSpans { index: 1 })
        );
        let backwards = tokens(&[(500, 600), (100, 200)]);
        assert_eq!(
            build_sample(&backwards, &cfg(1000, 0), &p),
            Err(SupervisionError::NonMonotoneStarts { index: 1 })
        );
        let empty = tokens(&[(100, 100)]);
        assert!(matches!(
            build_sample(&empty, &cfg(1000, 0), &p),
            Err(SupervisionError::EmptyToken { index: 0, .. })
        ));
    }

    #[test]
    fn deferral_moves_trailing_spans() {
        let s = build_sample(&four(), &cfg(1000, 1), &ModalityProfile::default()).unwrap();
        assert_eq!(s.chunks.len(), 3);
        assert_eq!(s.chunks[0].deferred_out.len(), 1);
        assert_eq!(s.chunks[0].deferred_out[0].token, 2);
        assert_eq!(s.chunks[1].deferred_in, s.chunks[0].deferred_out);
        // chunk 2's only token is deferred into a trailing chunk
        assert!(s.chunks[1].speech.is_empty());
        assert!(s.chunks[2].text.is_empty());
        assert_eq!(s.chunks[2].deferred_in[0].token, 3);
        let out: usize = s.chunks.iter().map(|c| c.deferred_out.len()).sum();
        let inn: usize = s.chunks.iter().map(|c| c.deferred_in.len()).sum();
        assert_eq!(out, inn);
    }

    #[test]
    fn silence_gap_leaves_an_empty_chunk() {
        let tr = tokens(&[(0, 300), (300, 500), (2000, 2300)]);
        let s = build_sample(&tr, &cfg(1000, 0), &ModalityProfile::default()).unwrap();
        assert_eq!(s.chunks.len(), 3);
        assert!(s.chunks[1].text.is_empty());
    }

    #[test]
    fn outputs_list_text_then_speech() {
        let s = build_sample(&four(), &cfg(1000, 0), &ModalityProfile::default()).unwrap();
        let outputs = to_serializer_outputs(&s);
        let first = &outputs[&ChunkIndex::FIRST];
        // frames: [0,280) -> 0..7, [300,900) -> 7..22, [950,1080) -> 23..27
        let speech = 7 + 15 + 4;
        assert_eq!(first.len(), 3 + speech);
        assert!(matches!(&first[0], Content::Text(p) if p == "t0"));
        assert!(matches!(&first[3], Content::Speech(p) if p == "s0"));
    }

    #[test]
    fn serialized_sample_recovers_assignment() {
        let s = build_sample(&four(), &cfg(1000, 1), &ModalityProfile::default()).unwrap();
        let outputs = to_serializer_outputs(&s);
        let scfg = SerializerConfig::new(s.cfg, BoundaryMode::Explicit, ControlMode::ListenSpeak);
        let seq = serializer::serialize(&InputTrace::default(), &outputs, &scfg).unwrap();
        let groups = serializer::parse(&seq).unwrap();
        assert_eq!(groups.len(), s.chunks.len());
        for (g, c) in groups.iter().zip(&s.chunks) {
            let text: Vec<&str> = g
                .content()
                .filter(|t| t.role == Role::TextOut)
                .map(|t| t.payload.as_str())
                .collect();
            let expected: Vec<&str> = c.text.iter().map(|t| t.payload.as_str()).collect();
            assert_eq!(text, expected);
        }
    }
}
