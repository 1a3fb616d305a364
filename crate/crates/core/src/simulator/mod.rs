//! Deterministic full-duplex interaction harness.
//!
//! Each chunk runs perception-then-output: the responder sees a summary of
//! the window and the triggers that fired in it, anything it says goes into
//! the scheduler queue, the scheduler plans the chunk, and the serializer
//! emits the group. Once the trace is exhausted the loop keeps going, with no
//! new perception, until everything queued has been spoken.
//!
//! Chunk `k`'s output is available at `k·t`, after its window has been
//! perceived; response latency is measured to that instant.

mod metrics;
mod responder;

pub use metrics::{to_csv, to_table, CostModel, DuplexMetrics, ReportRow, TriggerLatency};
pub use responder::{
    AlwaysSilent, Chatter, ChunkContext, PerceptualSummary, Proactive, ReactiveEcho, Responder,
    Response,
};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::budget::{BudgetError, ModalityProfile};
use crate::serializer::{SerializedSequence, SerializerConfig, SerializerError, StreamSerializer};
use crate::tail::{self, ChunkPlan, DurationModel, Scheduler, Strategy, TailError};
use crate::timeline::{self, chunk_index, chunk_window, InputTrace, TimelineError, Timestamp};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SimulationError {
    #[error(transparent)]
    Timeline(#[from] TimelineError),
    #[error(transparent)]
    Budget(#[from] BudgetError),
    #[error(transparent)]
    Serializer(#[from] SerializerError),
    #[error(transparent)]
    Schedule(#[from] TailError),
    #[error("trigger `{id}` at {at_ms} ms lies outside the {horizon_ms} ms trace")]
    TriggerOutsideTrace {
        id: String,
        at_ms: u64,
        horizon_ms: u64,
    },
    #[error("trigger {index} is earlier than the trigger before it")]
    UnorderedTriggers { index: usize },
}

/// An environment event a responder may react to.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Trigger {
    pub at: Timestamp,
    pub id: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Scenario {
    pub trace: InputTrace,
    pub triggers: Vec<Trigger>,
    pub seed: u64,
}

impl Scenario {
    pub fn validate(&self) -> Result<(), SimulationError> {
        timeline::validate_trace(self.trace.clone())?;
        let horizon_ms = self.trace.horizon_ms();
        for (index, trig) in self.triggers.iter().enumerate() {
            if trig.at.as_ms() >= horizon_ms {
                return Err(SimulationError::TriggerOutsideTrace {
                    id: trig.id.clone(),
                    at_ms: trig.at.as_ms(),
                    horizon_ms,
                });
            }
            if index > 0 && trig.at < self.triggers[index - 1].at {
                return Err(SimulationError::UnorderedTriggers { index });
            }
        }
        Ok(())
    }
}

/// Knobs that are not part of the protocol itself.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct RunOptions {
    pub profile: ModalityProfile,
    pub cost: CostModel,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulationRun {
    pub sequence: SerializedSequence,
    pub metrics: DuplexMetrics,
    pub plans: Vec<ChunkPlan>,
    /// Chunk in which each text token (by ordinal) was queued.
    pub enqueued_in: Vec<u64>,
}

pub fn run<R: Responder + ?Sized, D: DurationModel>(
    sc: &Scenario,
    responder: &mut R,
    cfg: &SerializerConfig,
    strategy: Strategy,
    durations: D,
    opts: &RunOptions,
) -> Result<SimulationRun, SimulationError> {
    sc.validate()?;
    opts.profile.validate()?;
    let chunk = cfg.chunk;
    let t = chunk.duration_ms();
    let horizon = chunk.chunks_for(sc.trace.horizon_ms());

    let mut rng = ChaCha8Rng::seed_from_u64(sc.seed);
    let mut scheduler = Scheduler::new(chunk, strategy, opts.profile, durations)?;
    let mut stream = StreamSerializer::new(&sc.trace, *cfg, opts.profile);

    let mut plans = Vec::new();
    let mut enqueued_in: Vec<u64> = Vec::new();
    let mut lag_ms = Vec::new();
    let mut listen_chunks = 0u64;
    let mut trig_seen = 0usize;
    let mut frame_cursor = 0usize;

    loop {
        let k = stream.next_chunk();
        let in_trace = k.get() <= horizon;
        if !in_trace && scheduler.state().is_drained() {
            break;
        }
        if in_trace {
            let (lo, hi) = chunk_window(k, &chunk);
            let first_new = trig_seen;
            while trig_seen < sc.triggers.len() && sc.triggers[trig_seen].at < hi {
                trig_seen += 1;
            }
            let frames_before = frame_cursor;
            while frame_cursor < sc.trace.visual_events.len()
                && sc.trace.visual_events[frame_cursor].at < hi
            {
                frame_cursor += 1;
            }
            let summary = PerceptualSummary {
                visual_frames: frame_cursor - frames_before,
                audio_ms: sc.trace.audio_covered_ms(hi.as_ms())
                    - sc.trace.audio_covered_ms(lo.as_ms()),
            };
            let mut ctx = ChunkContext {
                k,
                window: (lo, hi),
                summary,
                triggers_so_far: &sc.triggers[..trig_seen],
                new_triggers: &sc.triggers[first_new..trig_seen],
                speaking: !scheduler.state().is_drained(),
                rng: &mut rng,
            };
            match responder.respond(&mut ctx) {
                Response::Silent => {}
                Response::Text(words) => {
                    enqueued_in.extend(std::iter::repeat_n(k.get(), words.len()));
                    scheduler.push_text(words);
                }
                Response::Timed(tokens) => {
                    enqueued_in.extend(std::iter::repeat_n(k.get(), tokens.len()));
                    scheduler.push_timed(tokens);
                }
            }
        }

        let plan = scheduler.plan_next()?;
        let group = stream.push_chunk(plan.output_content())?;
        if group.is_listen_only() {
            listen_chunks += 1;
        }
        lag_ms.push(tail::lag(scheduler.state(), k, &chunk));
        plans.push(plan);
    }

    let sequence = stream.finish();
    let chunks = plans.len() as u64;

    let response_latency = sc
        .triggers
        .iter()
        .map(|trig| {
            let trig_k = chunk_index(trig.at, &chunk).get();
            let answered = plans.iter().find(|p| {
                p.text_tokens
                    .iter()
                    .any(|s| enqueued_in[s.ordinal as usize] >= trig_k)
            });
            TriggerLatency {
                id: trig.id.clone(),
                at_ms: trig.at.as_ms(),
                latency_ms: answered.map(|p| chunk.boundary(p.k) - trig.at.as_ms()),
            }
        })
        .collect();

    let staleness_ms = plans
        .iter()
        .flat_map(|p| &p.text_tokens)
        .map(|s| s.playback_start_ms.saturating_sub((s.emitted_in.get() - 1) * t))
        .collect();

    let compute_ms: f64 = sequence
        .tokens
        .iter()
        .map(|tok| opts.cost.cost_ms(tok.role))
        .sum();
    let duration_ms = chunks * t;
    let metrics = DuplexMetrics {
        response_latency,
        staleness_ms,
        lag_ms,
        listen_ratio: if chunks == 0 {
            1.0
        } else {
            listen_chunks as f64 / chunks as f64
        },
        rtf: if duration_ms == 0 {
            0.0
        } else {
            compute_ms / duration_ms as f64
        },
        chunks,
        text_tokens: scheduler.state().emitted_text_count,
        speech_tokens: scheduler.state().emitted_speech_count,
    };

    Ok(SimulationRun {
        sequence,
        metrics,
        plans,
        enqueued_in,
    })
}

/// Baselines plus the time-aligned scheduler, in report order.
///
/// The fixed-ratio baseline uses the profile's peak text decode rate and the
/// speech frame rate scaled to one chunk.
pub fn comparison_strategies(cfg: &SerializerConfig, profile: &ModalityProfile) -> Vec<Strategy> {
    let t = cfg.chunk.duration_ms();
    let per_chunk = |rate: u64| ((rate * t / 1000) as usize).max(1);
    vec![
        Strategy::TextLead {
            max_lead_tokens: None,
        },
        Strategy::FixedRatio {
            text: per_chunk(profile.text_decodes_per_second_max),
            speech: per_chunk(profile.speech_tokens_per_second),
        },
        Strategy::Tail,
    ]
}

/// Runs the same scenario under each strategy of [`comparison_strategies`].
pub fn compare_strategies<R: Responder + Clone, D: DurationModel + Clone>(
    sc: &Scenario,
    responder: &R,
    cfg: &SerializerConfig,
    durations: &D,
    opts: &RunOptions,
) -> Result<Vec<ReportRow>, SimulationError> {
    comparison_strategies(cfg, &opts.profile)
        .into_iter()
        .map(|strategy| {
            let mut r = responder.clone();
            let out = run(sc, &mut r, cfg, strategy, durations.clone(), opts)?;
            Ok(ReportRow {
                label: strategy.label(),
                metrics: out.metrics,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::serializer::{BoundaryMode, ControlMode};
    use crate::tail::CharLinear;
    use crate::timeline::{AudioEvent, ChunkConfig, VisualEvent};

    fn trace(ms: u64) -> InputTrace {
        InputTrace {
            visual_events: (0..ms / 1000)
                .map(|s| VisualEvent {
                    at: Timestamp::from_ms(s * 1000),
                    width_px: 448,
                    height_px: 448,
                })
                .collect(),
            audio_events: vec![AudioEvent {
                start: Timestamp::ZERO,
                end: Timestamp::from_ms(ms),
            }],
        }
    }

    fn cfg(t: u64) -> SerializerConfig {
        SerializerConfig::new(
            ChunkConfig::new(t, 0).unwrap(),
            BoundaryMode::Explicit,
            ControlMode::ListenSpeak,
        )
    }

    fn echo_scenario() -> Scenario {
        Scenario {
            trace: trace(5000),
            triggers: vec![Trigger {
                at: Timestamp::from_ms(1500),
                id: "q".into(),
            }],
            seed: 7,
        }
    }

    fn words(n: usize) -> Vec<String> {
        (0..n).map(|i| format!("w{i}")).collect()
    }

    #[test]
    fn silent_run_is_all_listen() {
        let sc = Scenario {
            trace: trace(5000),
            triggers: vec![],
            seed: 0,
        };
        let out = run(&sc, &mut AlwaysSilent, &cfg(1000), Strategy::Tail, CharLinear::default(), &RunOptions::default()).unwrap();
        assert_eq!(out.metrics.chunks, 5);
        assert_eq!(out.metrics.listen_ratio, 1.0);
        assert!(out.metrics.staleness_ms.is_empty());
    }

    #[test]
    fn echo_latency_follows_chunk_size() {
        let expect = [(1000, 3, 1500), (200, 9, 300), (100, 17, 200)];
        for (t, first_k, latency) in expect {
            let mut echo = ReactiveEcho::new(1, words(3));
            let out = run(&echo_scenario(), &mut echo, &cfg(t), Strategy::Tail, CharLinear::default(), &RunOptions::default()).unwrap();
            let first = out.plans.iter().find(|p| !p.text_tokens.is_empty()).unwrap();
            assert_eq!(first.k.get(), first_k, "t={t}");
            assert_eq!(out.metrics.response_latency[0].latency_ms, Some(latency), "t={t}");
        }
    }

    #[test]
    fn triggers_must_lie_in_trace() {
        let mut sc = echo_scenario();
        sc.triggers[0].at = Timestamp::from_ms(5000);
        assert!(matches!(
            run(&sc, &mut AlwaysSilent, &cfg(1000), Strategy::Tail, CharLinear::default(), &RunOptions::default()),
            Err(SimulationError::TriggerOutsideTrace { .. })
        ));
    }

    #[test]
    fn proactive_speaks_after_quiet_stretch() {
        let sc = Scenario {
            trace: InputTrace {
                visual_events: (0..6)
                    .map(|s| VisualEvent {
                        at: Timestamp::from_ms(s * 1000),
                        width_px: 100,
                        height_px: 100,
                    })
                    .collect(),
                audio_events: vec![AudioEvent {
                    start: Timestamp::ZERO,
                    end: Timestamp::from_ms(2000),
                }],
            },
            triggers: vec![],
            seed: 0,
        };
        let mut p = Proactive::new(2, words(2));
        let out = run(&sc, &mut p, &cfg(1000), Strategy::Tail, CharLinear::default(), &RunOptions::default()).unwrap();
        let first = out.plans.iter().find(|p| !p.text_tokens.is_empty()).unwrap();
        // chunks 3 and 4 are quiet
        assert_eq!(first.k.get(), 4);
        assert_eq!(out.metrics.text_tokens, 2);
    }

    #[test]
    fn seeded_chatter_is_reproducible() {
        let sc = Scenario {
            seed: 42,
            ..echo_scenario()
        };
        let chatter = Chatter {
            probability: 0.5,
            max_tokens: 6,
        };
        let a = run(&sc, &mut chatter.clone(), &cfg(200), Strategy::Tail, CharLinear::default(), &RunOptions::default()).unwrap();
        let b = run(&sc, &mut chatter.clone(), &cfg(200), Strategy::Tail, CharLinear::default(), &RunOptions::default()).unwrap();
        assert_eq!(a, b);
        let other = Scenario { seed: 43, ..sc };
        let c = run(&other, &mut chatter.clone(), &cfg(200), Strategy::Tail, CharLinear::default(), &RunOptions::default()).unwrap();
        assert_ne!(a.sequence, c.sequence);
    }

    #[test]
    fn rtf_uses_cost_model() {
        let sc = Scenario {
            trace: trace(1000),
            triggers: vec![],
            seed: 0,
        };
        let out = run(&sc, &mut AlwaysSilent, &cfg(1000), Strategy::Tail, CharLinear::default(), &RunOptions::default()).unwrap();
        // 74 perceptual tokens at 0.5 ms + listen + boundary at 25 ms, over 1 s
        assert!((out.metrics.rtf - (74.0 * 0.5 + 50.0) / 1000.0).abs() < 1e-12);
    }

    #[test]
    fn compare_lists_three_strategies() {
        let rows = compare_strategies(&echo_scenario(), &ReactiveEcho::new(0, words(1)), &cfg(1000), &CharLinear::default(), &RunOptions::default()).unwrap();
        let labels: Vec<&str> = rows.iter().map(|r| r.label.as_str()).collect();
        assert_eq!(labels, ["textlead:inf", "fixed:4:25", "tail"]);
    }
}
