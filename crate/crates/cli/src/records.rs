//! JSON-Lines record formats.
//!
//! | file        | record                                                        |
//! |-------------|---------------------------------------------------------------|
//! | trace       | `{"stream":"visual","t_ms":0,"frame_w":448,"frame_h":448}`     |
//! |             | `{"stream":"audio","t_ms_start":0,"t_ms_end":1000}`            |
//! | trigger     | `{"t_ms":1500,"id":"q1"}` (scenario files only)                |
//! | outputs     | `{"k":1,"kind":"text","payload":"hi"}` (`kind` is `text`/`speech`) |
//! | transcript  | `{"payload":"hi","start_ms":0,"end_ms":280}`                   |
//! | tokens      | `{"payload":"hi","duration_ms":200}` (duration optional)       |
//! | reward group| `{"tau":100,"responses":[{"correct":true,"len":100}]}`         |

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use omniflow_core::serializer::{ChunkOutputs, Content};
use omniflow_core::simulator::Trigger;
use omniflow_core::supervision::{SpeechSpan, SupervisionChunk, TranscriptToken};
use omniflow_core::timeline::{AudioEvent, VisualEvent};
use omniflow_core::{ChunkIndex, InputTrace, Timestamp};

/// A record that could not be read.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RecordError {
    pub line: usize,
    pub reason: String,
}

/// Parses every non-blank line of `text` as one `T`.
pub fn read_jsonl<T: DeserializeOwned>(text: &str) -> Result<Vec<T>, RecordError> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            serde_json::from_str(l).map_err(|e| RecordError {
                line: i + 1,
                reason: e.to_string(),
            })
        })
        .collect()
}

pub fn write_jsonl<T: Serialize>(records: &[T]) -> String {
    let mut out = String::new();
    for r in records {
        out.push_str(&serde_json::to_string(r).expect("records always serialize"));
        out.push('\n');
    }
    out
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EventRecord {
    pub stream: Option<String>,
    pub t_ms: Option<u64>,
    pub t_ms_start: Option<u64>,
    pub t_ms_end: Option<u64>,
    pub frame_w: Option<u32>,
    pub frame_h: Option<u32>,
    pub id: Option<String>,
}

enum Event {
    Visual(VisualEvent),
    Audio(AudioEvent),
    Trigger(Trigger),
}

fn classify(r: EventRecord, line: usize) -> Result<Event, RecordError> {
    let err = |reason: &str| RecordError {
        line,
        reason: reason.to_string(),
    };
    match (r.stream.as_deref(), r.id) {
        (Some("visual"), None) => match (r.t_ms, r.frame_w, r.frame_h) {
            (Some(t), Some(w), Some(h)) if r.t_ms_start.is_none() && r.t_ms_end.is_none() => {
                Ok(Event::Visual(VisualEvent {
                    at: Timestamp::from_ms(t),
                    width_px: w,
                    height_px: h,
                }))
            }
            _ => Err(err("visual records need exactly t_ms, frame_w and frame_h")),
        },
        (Some("audio"), None) => match (r.t_ms_start, r.t_ms_end) {
            (Some(s), Some(e)) if r.t_ms.is_none() && r.frame_w.is_none() && r.frame_h.is_none() => {
                Ok(Event::Audio(AudioEvent {
                    start: Timestamp::from_ms(s),
                    end: Timestamp::from_ms(e),
                }))
            }
            _ => Err(err("audio records need exactly t_ms_start and t_ms_end")),
        },
        (Some(other), None) => Err(err(&format!("unknown stream `{other}`"))),
        (None, Some(id)) => match r.t_ms {
            Some(t) if r.t_ms_start.is_none() && r.frame_w.is_none() => Ok(Event::Trigger(Trigger {
                at: Timestamp::from_ms(t),
                id,
            })),
            _ => Err(err("trigger records need exactly t_ms and id")),
        },
        _ => Err(err("record is neither a trace event nor a trigger")),
    }
}

fn read_events(text: &str, allow_triggers: bool) -> Result<(InputTrace, Vec<Trigger>), RecordError> {
    let mut trace = InputTrace::default();
    let mut triggers = Vec::new();
    for (i, l) in text.lines().enumerate() {
        if l.trim().is_empty() {
            continue;
        }
        let line = i + 1;
        let rec: EventRecord = serde_json::from_str(l).map_err(|e| RecordError {
            line,
            reason: e.to_string(),
        })?;
        match classify(rec, line)? {
            Event::Visual(v) => trace.visual_events.push(v),
            Event::Audio(a) => trace.audio_events.push(a),
            Event::Trigger(_) if !allow_triggers => {
                return Err(RecordError {
                    line,
                    reason: "trigger records are only allowed in scenario files".into(),
                })
            }
            Event::Trigger(t) => triggers.push(t),
        }
    }
    Ok((trace, triggers))
}

/// Trace file: visual and audio records, in time order per stream.
pub fn read_trace(text: &str) -> Result<InputTrace, RecordError> {
    read_events(text, false).map(|(t, _)| t)
}

/// Scenario file: trace records interleaved with trigger records.
pub fn read_scenario(text: &str) -> Result<(InputTrace, Vec<Trigger>), RecordError> {
    read_events(text, true)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputRecord {
    pub k: u64,
    pub kind: String,
    pub payload: String,
}

/// Outputs file; records of one chunk keep their file order.
pub fn read_outputs(text: &str) -> Result<ChunkOutputs, RecordError> {
    let mut outputs = ChunkOutputs::new();
    for (i, l) in text.lines().enumerate() {
        if l.trim().is_empty() {
            continue;
        }
        let line = i + 1;
        let err = |reason: String| RecordError { line, reason };
        let r: OutputRecord = serde_json::from_str(l).map_err(|e| err(e.to_string()))?;
        let k = ChunkIndex::new(r.k).map_err(|e| err(e.to_string()))?;
        let content = match r.kind.as_str() {
            "text" => Content::Text(r.payload),
            "speech" => Content::Speech(r.payload),
            other => return Err(err(format!("unknown output kind `{other}`"))),
        };
        outputs.entry(k).or_default().push(content);
    }
    Ok(outputs)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TranscriptRecord {
    pub payload: String,
    pub start_ms: u64,
    pub end_ms: u64,
}

impl From<TranscriptRecord> for TranscriptToken {
    fn from(r: TranscriptRecord) -> Self {
        TranscriptToken::new(r.payload, r.start_ms, r.end_ms)
    }
}

impl From<&TranscriptToken> for TranscriptRecord {
    fn from(t: &TranscriptToken) -> Self {
        Self {
            payload: t.payload.clone(),
            start_ms: t.start_ms,
            end_ms: t.end_ms,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SpanRecord {
    pub token: usize,
    pub first_frame: u64,
    pub count: u64,
}

impl From<&SpeechSpan> for SpanRecord {
    fn from(s: &SpeechSpan) -> Self {
        Self {
            token: s.token,
            first_frame: s.first_frame,
            count: s.count,
        }
    }
}

/// One chunk of a supervision sample.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SampleRecord {
    pub k: u64,
    pub text: Vec<TranscriptRecord>,
    pub speech: Vec<SpanRecord>,
    pub deferred_in: Vec<SpanRecord>,
    pub deferred_out: Vec<SpanRecord>,
}

impl From<&SupervisionChunk> for SampleRecord {
    fn from(c: &SupervisionChunk) -> Self {
        let spans = |v: &[SpeechSpan]| v.iter().map(SpanRecord::from).collect();
        Self {
            k: c.k.get(),
            text: c.text.iter().map(TranscriptRecord::from).collect(),
            speech: spans(&c.speech),
            deferred_in: spans(&c.deferred_in),
            deferred_out: spans(&c.deferred_out),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TokenRecord {
    pub payload: String,
    pub duration_ms: Option<u64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RolloutRecord {
    pub correct: bool,
    pub len: u64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GroupRecord {
    pub tau: f64,
    pub responses: Vec<RolloutRecord>,
}

#[derive(Debug, Clone, Serialize)]
pub struct RewardRecord {
    pub group: usize,
    pub index: usize,
    pub s: f64,
    pub r_len: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct PlannedToken {
    pub ordinal: u64,
    pub payload: String,
    pub duration_ms: u64,
    pub playback_start_ms: u64,
}

/// One planned chunk from the `schedule` command.
#[derive(Debug, Clone, Serialize)]
pub struct PlanRecord {
    pub k: u64,
    pub text: Vec<PlannedToken>,
    /// Ordinals of the tokens voiced in this chunk.
    pub vocalized: Vec<u64>,
    pub speech_frames: usize,
    pub deferred: Vec<u64>,
    pub cum_playback_ms: u64,
    pub lag_ms: i64,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scenario_mixes_events_and_triggers() {
        let text = r#"{"stream":"visual","t_ms":0,"frame_w":448,"frame_h":448}

{"stream":"audio","t_ms_start":0,"t_ms_end":1000}
{"t_ms":500,"id":"q"}
"#;
        let (trace, triggers) = read_scenario(text).unwrap();
        assert_eq!(trace.visual_events.len(), 1);
        assert_eq!(trace.audio_events.len(), 1);
        assert_eq!(triggers[0].id, "q");
        assert_eq!(read_trace(text).unwrap_err().line, 4);
    }

    #[test]
    fn rejects_mixed_shapes() {
        for bad in [
            r#"{"stream":"visual","t_ms":0}"#,
            r#"{"stream":"audio","t_ms_start":0,"t_ms_end":5,"frame_w":3}"#,
            r#"{"stream":"smell","t_ms":0}"#,
            r#"{"t_ms":0}"#,
            r#"{"stream":"visual","t_ms":0,"frame_w":1,"frame_h":1,"colour":"red"}"#,
        ] {
            assert!(read_scenario(bad).is_err(), "{bad}");
        }
    }

    #[test]
    fn outputs_group_by_chunk_in_file_order() {
        let text = r#"{"k":2,"kind":"text","payload":"b"}
{"k":1,"kind":"text","payload":"a"}
{"k":2,"kind":"speech","payload":"s0"}
"#;
        let out = read_outputs(text).unwrap();
        assert_eq!(out.len(), 2);
        let k2 = &out[&ChunkIndex::new(2).unwrap()];
        assert_eq!(k2, &vec![Content::Text("b".into()), Content::Speech("s0".into())]);
        assert!(read_outputs(r#"{"k":0,"kind":"text","payload":"a"}"#).is_err());
    }
}
