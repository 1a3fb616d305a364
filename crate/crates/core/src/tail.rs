//! Time-aligned text/speech interleaving.
//!
//! Text tokens take a variable amount of time to vocalize. The scheduler
//! decides, chunk by chunk, how much pending text to emit and in which chunk
//! each emitted token's speech frames are generated.
//!
//! Every emitted token reserves a slot `[start, start + duration)` on the
//! playback timeline. Slots are contiguous while the assistant keeps talking,
//! and a slot never starts before the window of the chunk that emitted it, so
//! a silent stretch does not bank playback credit.
//!
//! [`Strategy::Tail`] emits the longest prefix of pending text whose slots end
//! by the chunk boundary `k·t`. If the speech stream is already behind, the
//! budget shrinks (possibly to zero) until playback catches up. The speech of
//! the last `look_ahead` emitted tokens is generated one chunk later than
//! their text.
//!
//! [`Strategy::FixedRatio`] and [`Strategy::TextLead`] are the two baselines:
//! a fixed number of text tokens per chunk, or text that runs ahead of
//! playback by a number of tokens, with speech generated just in time for
//! playback.

use std::collections::VecDeque;
use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::budget::{self, ModalityProfile};
use crate::serializer::Content;
use crate::timeline::{ChunkConfig, ChunkIndex};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TailError {
    #[error("inconsistent playback state: {0}")]
    InconsistentState(String),
    #[error("chunk {got} requested but chunk {expected} is next")]
    UnknownChunk { expected: u64, got: u64 },
    #[error("token durations must be at least 1 ms")]
    ZeroDuration,
    #[error("invalid strategy: {0}")]
    InvalidStrategy(String),
}

/// A text token and how long its speech lasts.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct TimedToken {
    pub payload: String,
    pub duration_ms: u64,
}

impl TimedToken {
    pub fn new(payload: impl Into<String>, duration_ms: u64) -> Result<Self, TailError> {
        if duration_ms == 0 {
            return Err(TailError::ZeroDuration);
        }
        Ok(Self {
            payload: payload.into(),
            duration_ms,
        })
    }
}

/// Estimates how long a text token takes to vocalize.
pub trait DurationModel {
    fn duration_ms(&self, payload: &str, left_context: Option<&str>) -> u64;
}

/// `chars × ms_per_char`, at least 1 ms.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CharLinear {
    pub ms_per_char: u64,
}

impl Default for CharLinear {
    fn default() -> Self {
        Self { ms_per_char: 80 }
    }
}

impl DurationModel for CharLinear {
    fn duration_ms(&self, payload: &str, _left_context: Option<&str>) -> u64 {
        (payload.chars().count() as u64 * self.ms_per_char).max(1)
    }
}

/// Interleaving policy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Strategy {
    /// Emit text until `max_lead_tokens` emitted tokens are still unspoken at
    /// the chunk boundary. `None` is an unbounded lead.
    TextLead { max_lead_tokens: Option<usize> },
    /// `text` tokens per chunk. `speech` is the nominal speech-token count per
    /// step; actual speech frames follow each token's duration.
    FixedRatio { text: usize, speech: usize },
    Tail,
}

impl Strategy {
    pub fn validate(&self) -> Result<(), TailError> {
        match *self {
            Strategy::TextLead {
                max_lead_tokens: Some(0),
            } => Err(TailError::InvalidStrategy("text lead must be at least 1".into())),
            Strategy::FixedRatio { text, speech } if text == 0 || speech == 0 => Err(
                TailError::InvalidStrategy("fixed ratio arguments must be at least 1".into()),
            ),
            _ => Ok(()),
        }
    }

    /// Short name used in reports.
    pub fn label(&self) -> String {
        self.to_string()
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Strategy::Tail => f.write_str("tail"),
            Strategy::FixedRatio { text, speech } => write!(f, "fixed:{text}:{speech}"),
            Strategy::TextLead {
                max_lead_tokens: None,
            } => f.write_str("textlead:inf"),
            Strategy::TextLead {
                max_lead_tokens: Some(n),
            } => write!(f, "textlead:{n}"),
        }
    }
}

impl FromStr for Strategy {
    type Err = TailError;

    /// `tail`, `fixed:A:B` or `textlead:N` (`N` may be `inf`).
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || TailError::InvalidStrategy(format!("cannot parse `{s}`"));
        let parts: Vec<&str> = s.split(':').collect();
        let strategy = match parts.as_slice() {
            ["tail"] => Strategy::Tail,
            ["fixed", a, b] => Strategy::FixedRatio {
                text: a.parse().map_err(|_| bad())?,
                speech: b.parse().map_err(|_| bad())?,
            },
            ["textlead", "inf"] => Strategy::TextLead {
                max_lead_tokens: None,
            },
            ["textlead", n] => Strategy::TextLead {
                max_lead_tokens: Some(n.parse().map_err(|_| bad())?),
            },
            _ => return Err(bad()),
        };
        strategy.validate()?;
        Ok(strategy)
    }
}

/// An emitted text token with its playback slot.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ScheduledToken {
    /// Position in the overall text stream, 0-based.
    pub ordinal: u64,
    pub token: TimedToken,
    pub emitted_in: ChunkIndex,
    pub playback_start_ms: u64,
}

impl ScheduledToken {
    pub fn playback_end_ms(&self) -> u64 {
        self.playback_start_ms + self.token.duration_ms
    }
}

/// One generated speech frame, tagged with the text token it voices.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct SpeechFrame {
    pub ordinal: u64,
    pub frame: u64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ChunkPlan {
    pub k: ChunkIndex,
    /// Text emitted in this chunk.
    pub text_tokens: Vec<ScheduledToken>,
    /// Tokens whose speech is generated in this chunk, carried-over first.
    pub vocalized: Vec<ScheduledToken>,
    pub speech_tokens: Vec<SpeechFrame>,
    /// Emitted tokens whose speech moves to a later chunk.
    pub newly_deferred: Vec<ScheduledToken>,
}

impl ChunkPlan {
    pub fn is_idle(&self) -> bool {
        self.text_tokens.is_empty() && self.speech_tokens.is_empty()
    }

    /// Output part for the serializer: text first, then speech frames.
    pub fn output_content(&self) -> Vec<Content> {
        self.text_tokens
            .iter()
            .map(|t| Content::Text(t.token.payload.clone()))
            .chain(
                self.speech_tokens
                    .iter()
                    .map(|s| Content::Speech(format!("s{}", s.frame))),
            )
            .collect()
    }
}

/// Scheduler state between chunks.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PlaybackState {
    /// Total duration of tokens whose speech has been generated.
    pub cum_playback_ms: u64,
    /// End of the last reserved playback slot, deferred tokens included.
    pub timeline_end_ms: u64,
    pub pending: VecDeque<TimedToken>,
    /// Emitted tokens still waiting for their speech.
    pub deferred: VecDeque<ScheduledToken>,
    pub emitted_text_count: u64,
    pub vocalized_text_count: u64,
    pub emitted_speech_count: u64,
    pub next_chunk: ChunkIndex,
    /// Something was still queued when the previous chunk closed, so the
    /// next slot follows the committed end directly. Otherwise it starts no
    /// earlier than the chunk that emits it.
    pub continuing: bool,
}

impl Default for PlaybackState {
    fn default() -> Self {
        Self::new()
    }
}

impl PlaybackState {
    pub fn new() -> Self {
        Self {
            cum_playback_ms: 0,
            timeline_end_ms: 0,
            pending: VecDeque::new(),
            deferred: VecDeque::new(),
            emitted_text_count: 0,
            vocalized_text_count: 0,
            emitted_speech_count: 0,
            next_chunk: ChunkIndex::FIRST,
            continuing: false,
        }
    }

    /// A state that has already played `cum_playback_ms` of contiguous
    /// speech and is about to plan `next_chunk`.
    pub fn resumed(cum_playback_ms: u64, next_chunk: ChunkIndex) -> Self {
        Self {
            cum_playback_ms,
            timeline_end_ms: cum_playback_ms,
            next_chunk,
            continuing: true,
            ..Self::new()
        }
    }

    pub fn enqueue(&mut self, token: TimedToken) {
        self.pending.push_back(token);
    }

    pub fn is_drained(&self) -> bool {
        self.pending.is_empty() && self.deferred.is_empty()
    }

    /// End of the playback slots committed so far, in ms.
    pub fn committed_end_ms(&self) -> u64 {
        self.timeline_end_ms
    }

    pub fn check(&self, strategy: &Strategy, cfg: &ChunkConfig) -> Result<(), TailError> {
        let bad = |m: String| Err(TailError::InconsistentState(m));
        if self.emitted_text_count != self.vocalized_text_count + self.deferred.len() as u64 {
            return bad(format!(
                "{} emitted != {} vocalized + {} deferred",
                self.emitted_text_count,
                self.vocalized_text_count,
                self.deferred.len()
            ));
        }
        if self.cum_playback_ms > self.timeline_end_ms {
            return bad("vocalized duration exceeds committed timeline".into());
        }
        let expected = self.vocalized_text_count;
        if let Some((i, t)) = self
            .deferred
            .iter()
            .enumerate()
            .find(|(i, t)| t.ordinal != expected + *i as u64)
        {
            return bad(format!("deferred slot {i} holds token {}", t.ordinal));
        }
        match strategy {
            Strategy::Tail if self.deferred.len() > cfg.look_ahead_tokens() => bad(format!(
                "{} deferred tokens exceed look-ahead {}",
                self.deferred.len(),
                cfg.look_ahead_tokens()
            )),
            Strategy::FixedRatio { .. } if !self.deferred.is_empty() => {
                bad("fixed-ratio scheduling never defers speech".into())
            }
            _ => Ok(()),
        }
    }
}

/// Plans chunk `k` and returns the plan with the advanced state.
pub fn plan_chunk(
    state: &PlaybackState,
    k: ChunkIndex,
    cfg: &ChunkConfig,
    strategy: &Strategy,
    profile: &ModalityProfile,
) -> Result<(ChunkPlan, PlaybackState), TailError> {
    let mut next = state.clone();
    let plan = advance(&mut next, k, cfg, strategy, profile)?;
    Ok((plan, next))
}

/// In-place form of [`plan_chunk`].
pub fn advance(
    state: &mut PlaybackState,
    k: ChunkIndex,
    cfg: &ChunkConfig,
    strategy: &Strategy,
    profile: &ModalityProfile,
) -> Result<ChunkPlan, TailError> {
    strategy.validate()?;
    state.check(strategy, cfg)?;
    if k != state.next_chunk {
        return Err(TailError::UnknownChunk {
            expected: state.next_chunk.get(),
            got: k.get(),
        });
    }
    let t = cfg.duration_ms();
    let window_start = (k.get() - 1) * t;
    let boundary = k.get() * t;
    let base = if state.continuing {
        state.timeline_end_ms
    } else {
        state.timeline_end_ms.max(window_start)
    };

    let take = match *strategy {
        Strategy::Tail => {
            let mut end = base;
            let n = state
                .pending
                .iter()
                .take_while(|tok| {
                    let fits = end + tok.duration_ms <= boundary;
                    if fits {
                        end += tok.duration_ms;
                    }
                    fits
                })
                .count();
            // A token longer than a whole chunk can never fit; emit it alone
            // once playback has caught up, then catch up again afterwards.
            if n == 0 && base == window_start && !state.pending.is_empty() {
                1
            } else {
                n
            }
        }
        Strategy::FixedRatio { text, .. } => text.min(state.pending.len()),
        Strategy::TextLead { max_lead_tokens } => {
            let limit = max_lead_tokens.unwrap_or(usize::MAX);
            let mut lead = state
                .deferred
                .iter()
                .filter(|d| d.playback_end_ms() > boundary)
                .count();
            let mut end = base;
            let mut n = 0;
            for tok in &state.pending {
                if lead >= limit {
                    break;
                }
                end += tok.duration_ms;
                if end > boundary {
                    lead += 1;
                }
                n += 1;
            }
            n
        }
    };

    let mut text_tokens = Vec::with_capacity(take);
    let mut start = base;
    for token in state.pending.drain(..take) {
        let scheduled = ScheduledToken {
            ordinal: state.emitted_text_count,
            token,
            emitted_in: k,
            playback_start_ms: start,
        };
        start = scheduled.playback_end_ms();
        state.emitted_text_count += 1;
        text_tokens.push(scheduled);
    }
    if let Some(last) = text_tokens.last() {
        state.timeline_end_ms = last.playback_end_ms();
    }

    let mut vocalized: Vec<ScheduledToken> = Vec::new();
    let mut newly_deferred = Vec::new();
    match strategy {
        Strategy::Tail => {
            vocalized.extend(state.deferred.drain(..));
            let keep = text_tokens.len() - text_tokens.len().min(cfg.look_ahead_tokens());
            vocalized.extend(text_tokens[..keep].iter().cloned());
            newly_deferred.extend(text_tokens[keep..].iter().cloned());
        }
        Strategy::FixedRatio { .. } => {
            vocalized.extend(state.deferred.drain(..));
            vocalized.extend(text_tokens.iter().cloned());
        }
        Strategy::TextLead { .. } => {
            let backlog: Vec<ScheduledToken> = state
                .deferred
                .drain(..)
                .chain(text_tokens.iter().cloned())
                .collect();
            let ready = backlog
                .iter()
                .take_while(|s| s.playback_start_ms < boundary)
                .count();
            let mut backlog = backlog.into_iter();
            vocalized.extend(backlog.by_ref().take(ready));
            newly_deferred.extend(backlog);
        }
    }
    state.deferred.extend(newly_deferred.iter().cloned());

    let mut speech_tokens = Vec::new();
    for v in &vocalized {
        let (first, count) =
            budget::speech_token_span(v.playback_start_ms, v.playback_end_ms(), profile)
                .expect("durations are at least 1 ms");
        speech_tokens.extend((first..first + count).map(|frame| SpeechFrame {
            ordinal: v.ordinal,
            frame,
        }));
        state.cum_playback_ms += v.token.duration_ms;
    }
    state.vocalized_text_count += vocalized.len() as u64;
    state.emitted_speech_count += speech_tokens.len() as u64;
    state.next_chunk = k.next();
    state.continuing = !state.is_drained();

    Ok(ChunkPlan {
        k,
        text_tokens,
        vocalized,
        speech_tokens,
        newly_deferred,
    })
}

/// Playback lag after chunk `k`: `k·t` minus the committed timeline end.
/// Positive when speech trails the boundary, negative on overshoot.
pub fn lag(state: &PlaybackState, k: ChunkIndex, cfg: &ChunkConfig) -> i64 {
    cfg.boundary(k) as i64 - state.timeline_end_ms as i64
}

/// Schedules a finite token stream until nothing is pending or deferred.
pub fn run_schedule(
    tokens: impl IntoIterator<Item = TimedToken>,
    cfg: &ChunkConfig,
    strategy: &Strategy,
    profile: &ModalityProfile,
) -> Result<Vec<ChunkPlan>, TailError> {
    let mut state = PlaybackState::new();
    state.pending.extend(tokens);
    let mut plans = Vec::new();
    while !state.is_drained() {
        let k = state.next_chunk;
        plans.push(advance(&mut state, k, cfg, strategy, profile)?);
    }
    Ok(plans)
}

/// Owns a playback state plus the policy pieces needed to advance it.
pub struct Scheduler<D = CharLinear> {
    cfg: ChunkConfig,
    strategy: Strategy,
    profile: ModalityProfile,
    durations: D,
    state: PlaybackState,
    last_payload: Option<String>,
}

impl<D: DurationModel> Scheduler<D> {
    pub fn new(
        cfg: ChunkConfig,
        strategy: Strategy,
        profile: ModalityProfile,
        durations: D,
    ) -> Result<Self, TailError> {
        strategy.validate()?;
        Ok(Self {
            cfg,
            strategy,
            profile,
            durations,
            state: PlaybackState::new(),
            last_payload: None,
        })
    }

    /// Queues text, timing each token with the duration model.
    pub fn push_text<S: AsRef<str>>(&mut self, payloads: impl IntoIterator<Item = S>) {
        for p in payloads {
            let p = p.as_ref();
            let d = self
                .durations
                .duration_ms(p, self.last_payload.as_deref())
                .max(1);
            self.state.enqueue(TimedToken {
                payload: p.to_string(),
                duration_ms: d,
            });
            self.last_payload = Some(p.to_string());
        }
    }

    /// Queues tokens that already carry measured durations.
    pub fn push_timed(&mut self, tokens: impl IntoIterator<Item = TimedToken>) {
        for t in tokens {
            self.last_payload = Some(t.payload.clone());
            self.state.enqueue(t);
        }
    }

    pub fn plan_next(&mut self) -> Result<ChunkPlan, TailError> {
        let k = self.state.next_chunk;
        advance(&mut self.state, k, &self.cfg, &self.strategy, &self.profile)
    }

    pub fn state(&self) -> &PlaybackState {
        &self.state
    }

    pub fn strategy(&self) -> &Strategy {
        &self.strategy
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(t: u64, look_ahead: usize) -> ChunkConfig {
        ChunkConfig::new(t, look_ahead).unwrap()
    }

    fn uniform(n: usize, ms: u64) -> Vec<TimedToken> {
        (0..n)
            .map(|i| TimedToken::new(format!("w{i}"), ms).unwrap())
            .collect()
    }

    fn k(n: u64) -> ChunkIndex {
        ChunkIndex::new(n).unwrap()
    }

    fn p() -> ModalityProfile {
        ModalityProfile::default()
    }

    fn text_counts(plans: &[ChunkPlan]) -> Vec<usize> {
        plans.iter().map(|p| p.text_tokens.len()).collect()
    }

    #[test]
    fn first_chunk_fills_exactly() {
        let mut state = PlaybackState::new();
        state.pending.extend(uniform(10, 250));
        let (plan, next) = plan_chunk(&state, k(1), &cfg(1000, 0), &Strategy::Tail, &p()).unwrap();
        assert_eq!(plan.text_tokens.len(), 4);
        assert_eq!(plan.vocalized.len(), 4);
        // 4 × 250 ms at 25 frames/s
        assert_eq!(plan.speech_tokens.len(), 25);
        assert_eq!(next.cum_playback_ms, 1000);
        assert_eq!(lag(&next, k(1), &cfg(1000, 0)), 0);
    }

    #[test]
    fn catch_up_emits_fewer_tokens() {
        let mut state = PlaybackState::resumed(1250, k(2));
        state.pending.extend(uniform(10, 250));
        let (plan, next) = plan_chunk(&state, k(2), &cfg(1000, 0), &Strategy::Tail, &p()).unwrap();
        assert_eq!(plan.text_tokens.len(), 3);
        assert_eq!(next.cum_playback_ms, 2000);
        assert_eq!(lag(&next, k(2), &cfg(1000, 0)), 0);
    }

    #[test]
    fn far_behind_emits_nothing() {
        let mut state = PlaybackState::resumed(2100, k(2));
        state.pending.extend(uniform(3, 250));
        let (plan, next) = plan_chunk(&state, k(2), &cfg(1000, 0), &Strategy::Tail, &p()).unwrap();
        assert!(plan.is_idle());
        assert_eq!(next.pending.len(), 3);
        assert_eq!(lag(&next, k(2), &cfg(1000, 0)), -100);
    }

    #[test]
    fn empty_pending_plans_nothing() {
        let state = PlaybackState::new();
        let (plan, next) = plan_chunk(&state, k(1), &cfg(1000, 2), &Strategy::Tail, &p()).unwrap();
        assert!(plan.is_idle());
        assert!(plan.newly_deferred.is_empty());
        assert_eq!(lag(&next, k(1), &cfg(1000, 2)), 1000);
    }

    #[test]
    fn look_ahead_defers_last_tokens_to_next_chunk() {
        let c = cfg(1000, 2);
        let mut state = PlaybackState::new();
        state.pending.extend(uniform(4, 250));
        let (p1, s1) = plan_chunk(&state, k(1), &c, &Strategy::Tail, &p()).unwrap();
        assert_eq!(p1.text_tokens.len(), 4);
        let first: Vec<u64> = p1.vocalized.iter().map(|t| t.ordinal).collect();
        assert_eq!(first, vec![0, 1]);
        assert_eq!(p1.newly_deferred.len(), 2);
        assert_eq!(s1.cum_playback_ms, 500);
        assert_eq!(s1.committed_end_ms(), 1000);

        let (p2, s2) = plan_chunk(&s1, k(2), &c, &Strategy::Tail, &p()).unwrap();
        assert!(p2.text_tokens.is_empty());
        let second: Vec<u64> = p2.vocalized.iter().map(|t| t.ordinal).collect();
        assert_eq!(second, vec![2, 3]);
        assert!(s2.is_drained());
        assert_eq!(s2.cum_playback_ms, 1000);
    }

    #[test]
    fn short_emission_defers_everything() {
        let c = cfg(1000, 3);
        let plans = run_schedule(uniform(2, 100), &c, &Strategy::Tail, &p()).unwrap();
        assert_eq!(plans.len(), 2);
        assert!(plans[0].vocalized.is_empty());
        assert_eq!(plans[0].newly_deferred.len(), 2);
        assert_eq!(plans[1].vocalized.len(), 2);
    }

    #[test]
    fn wrong_chunk_and_bad_state_are_rejected() {
        let state = PlaybackState::new();
        assert_eq!(
            plan_chunk(&state, k(2), &cfg(1000, 0), &Strategy::Tail, &p()),
            Err(TailError::UnknownChunk { expected: 1, got: 2 })
        );
        let mut broken = PlaybackState::new();
        broken.emitted_text_count = 3;
        assert!(matches!(
            plan_chunk(&broken, k(1), &cfg(1000, 0), &Strategy::Tail, &p()),
            Err(TailError::InconsistentState(_))
        ));
    }

    #[test]
    fn schedule_examples() {
        let c = cfg(1000, 0);
        let tail = run_schedule(uniform(10, 250), &c, &Strategy::Tail, &p()).unwrap();
        assert_eq!(text_counts(&tail), vec![4, 4, 2]);

        let lead = Strategy::TextLead {
            max_lead_tokens: None,
        };
        let plans = run_schedule(uniform(10, 250), &c, &lead, &p()).unwrap();
        assert_eq!(text_counts(&plans), vec![10, 0, 0]);
        let spoken: Vec<usize> = plans.iter().map(|p| p.vocalized.len()).collect();
        assert_eq!(spoken, vec![4, 4, 2]);

        let fixed = Strategy::FixedRatio { text: 2, speech: 13 };
        let mixed: Vec<TimedToken> = [100, 900, 50, 3000, 10, 10, 700]
            .iter()
            .enumerate()
            .map(|(i, &d)| TimedToken::new(format!("x{i}"), d).unwrap())
            .collect();
        let plans = run_schedule(mixed, &c, &fixed, &p()).unwrap();
        assert_eq!(text_counts(&plans), vec![2, 2, 2, 1]);
    }

    #[test]
    fn bounded_text_lead() {
        let c = cfg(1000, 0);
        let lead = Strategy::TextLead {
            max_lead_tokens: Some(2),
        };
        let plans = run_schedule(uniform(10, 250), &c, &lead, &p()).unwrap();
        // 4 fit by 1000 ms, then two more run past the boundary
        assert_eq!(plans[0].text_tokens.len(), 6);
    }

    #[test]
    fn oversize_token_is_emitted_alone_then_caught_up() {
        let c = cfg(100, 0);
        let tokens = vec![
            TimedToken::new("long", 350).unwrap(),
            TimedToken::new("a", 50).unwrap(),
        ];
        let plans = run_schedule(tokens, &c, &Strategy::Tail, &p()).unwrap();
        assert_eq!(text_counts(&plans), vec![1, 0, 0, 1]);
        assert_eq!(plans[3].text_tokens[0].playback_start_ms, 350);
    }

    #[test]
    fn silence_does_not_bank_budget() {
        let c = cfg(1000, 0);
        let mut s = Scheduler::new(c, Strategy::Tail, p(), CharLinear::default()).unwrap();
        for _ in 0..3 {
            assert!(s.plan_next().unwrap().is_idle());
        }
        s.push_timed(uniform(10, 250));
        let plan = s.plan_next().unwrap();
        assert_eq!(plan.text_tokens.len(), 4);
        assert_eq!(plan.text_tokens[0].playback_start_ms, 3000);
    }

    #[test]
    fn strategy_parsing() {
        assert_eq!("tail".parse::<Strategy>().unwrap(), Strategy::Tail);
        assert_eq!(
            "fixed:2:13".parse::<Strategy>().unwrap(),
            Strategy::FixedRatio { text: 2, speech: 13 }
        );
        assert_eq!(
            "textlead:inf".parse::<Strategy>().unwrap(),
            Strategy::TextLead {
                max_lead_tokens: None
            }
        );
        assert!("fixed:0:3".parse::<Strategy>().is_err());
        assert!("textlead:0".parse::<Strategy>().is_err());
        assert!("greedy".parse::<Strategy>().is_err());
        for s in ["tail", "fixed:5:15", "textlead:8", "textlead:inf"] {
            assert_eq!(s.parse::<Strategy>().unwrap().to_string(), s);
        }
    }

    #[test]
    fn char_linear_durations() {
        let dm = CharLinear::default();
        assert_eq!(dm.duration_ms("the", None), 240);
        assert_eq!(dm.duration_ms("", None), 1);
        let mut s = Scheduler::new(cfg(1000, 0), Strategy::Tail, p(), dm).unwrap();
        s.push_text(["hello", "world"]);
        assert_eq!(s.state().pending[0].duration_ms, 400);
    }

    #[test]
    fn fixed_ratio_matches_tail_at_uniform_durations() {
        for n in 1..=8u64 {
            // 840 is divisible by every n; the others only by some
            for t in [840, 1000, 200, 100].into_iter().filter(|t| t % n == 0) {
                let dur = t / n;
                let tokens = uniform(37, dur);
                let c = cfg(t, 0);
                let tail = run_schedule(tokens.clone(), &c, &Strategy::Tail, &p()).unwrap();
                let fixed = Strategy::FixedRatio {
                    text: n as usize,
                    speech: 1,
                };
                let fixed = run_schedule(tokens, &c, &fixed, &p()).unwrap();
                assert_eq!(text_counts(&tail), text_counts(&fixed), "n={n} t={t}");
            }
        }
    }
}
