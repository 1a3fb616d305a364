//! Full-duplex streaming engine.
//!
//! An interaction is cut into fixed-length chunks. Each chunk serializes as
//! one group of perceptual tokens followed by the assistant's output for that
//! window ([`serializer`]). Spoken output is scheduled so that the speech
//! implied by each chunk's text tracks the chunk boundary ([`tail`]), and the
//! same assignment rule builds training samples from timestamped transcripts
//! ([`supervision`]). [`simulator`] drives all of it against scripted
//! environments and measures latency and staleness; [`reward`] holds the
//! grouped length reward used during RL.

pub mod budget;
pub mod reward;
pub mod serializer;
pub mod simulator;
pub mod supervision;
pub mod tail;
pub mod timeline;

pub use budget::{BudgetError, ModalityProfile};
pub use reward::{length_reward, reward_weight, RewardError, RewardGroup, RewardOutput, Rollout};
pub use serializer::{
    ablation_grid, parse, serialize, BoundaryMode, ChunkOutputs, Content, ControlMode,
    SerializedSequence, SerializerConfig, SerializerError, Token, TokenGroup,
};
pub use simulator::{DuplexMetrics, Scenario, SimulationError, Trigger};
pub use supervision::{build_sample, SupervisionError, SupervisionSample, TimedTranscript};
pub use tail::{
    run_schedule, ChunkPlan, CharLinear, DurationModel, PlaybackState, Strategy, TailError,
    TimedToken,
};
pub use timeline::{ChunkConfig, ChunkIndex, InputTrace, TimelineError, Timestamp};

/// Any error the engine can report.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error(transparent)]
    Timeline(#[from] TimelineError),
    #[error(transparent)]
    Budget(#[from] BudgetError),
    #[error(transparent)]
    Serializer(#[from] SerializerError),
    #[error(transparent)]
    Schedule(#[from] TailError),
    #[error(transparent)]
    Supervision(#[from] SupervisionError),
    #[error(transparent)]
    Simulation(#[from] SimulationError),
    #[error(transparent)]
    Reward(#[from] RewardError),
}

impl Error {
    /// Stable name of the innermost error variant, e.g. `OverlappingSpans`.
    pub fn code(&self) -> &'static str {
        match self {
            Error::Timeline(e) => timeline_code(e),
            Error::Budget(e) => budget_code(e),
            Error::Serializer(e) => serializer_code(e),
            Error::Schedule(e) => tail_code(e),
            Error::Supervision(e) => match e {
                SupervisionError::EmptyToken { .. } => "EmptyToken",
                SupervisionError::NonMonotoneStarts { .. } => "NonMonotoneStarts",
                SupervisionError::OverlappingSpans { .. } => "OverlappingSpans",
                SupervisionError::Budget(e) => budget_code(e),
            },
            Error::Simulation(e) => match e {
                SimulationError::Timeline(e) => timeline_code(e),
                SimulationError::Budget(e) => budget_code(e),
                SimulationError::Serializer(e) => serializer_code(e),
                SimulationError::Schedule(e) => tail_code(e),
                SimulationError::TriggerOutsideTrace { .. } => "TriggerOutsideTrace",
                SimulationError::UnorderedTriggers { .. } => "UnorderedTriggers",
            },
            Error::Reward(e) => match e {
                RewardError::EmptyGroup => "EmptyGroup",
                RewardError::NonPositiveTau(_) => "NonPositiveTau",
                RewardError::ZeroLength { .. } => "ZeroLength",
            },
        }
    }
}

fn timeline_code(e: &TimelineError) -> &'static str {
    match e {
        TimelineError::ZeroChunkDuration => "ZeroChunkDuration",
        TimelineError::ZeroChunkIndex => "ZeroChunkIndex",
        TimelineError::NonMonotoneTimestamps { .. } => "NonMonotoneTimestamps",
        TimelineError::EmptyAudioSpan { .. } => "EmptyAudioSpan",
    }
}

fn budget_code(e: &BudgetError) -> &'static str {
    match e {
        BudgetError::ZeroDimension { .. } => "ZeroDimension",
        BudgetError::ResolutionExceedsStreamingCap { .. } => "ResolutionExceedsStreamingCap",
        BudgetError::EmptySpan { .. } => "EmptySpan",
        BudgetError::ZeroRate(_) => "ZeroRate",
    }
}

fn serializer_code(e: &SerializerError) -> &'static str {
    match e {
        SerializerError::Timeline(e) => timeline_code(e),
        SerializerError::Budget(e) => budget_code(e),
        SerializerError::OutputForMissingChunk { .. } => "OutputForMissingChunk",
        SerializerError::MalformedSequence { .. } => "MalformedSequence",
        SerializerError::BadLine { .. } => "BadLine",
        SerializerError::UnknownPreset(_) => "UnknownPreset",
    }
}

fn tail_code(e: &TailError) -> &'static str {
    match e {
        TailError::InconsistentState(_) => "InconsistentState",
        TailError::UnknownChunk { .. } => "UnknownChunk",
        TailError::ZeroDuration => "ZeroDuration",
        TailError::InvalidStrategy(_) => "InvalidStrategy",
    }
}
