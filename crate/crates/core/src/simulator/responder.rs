use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::tail::TimedToken;
use crate::timeline::{ChunkIndex, Timestamp};

use super::Trigger;

/// What the environment looked like during one chunk.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct PerceptualSummary {
    pub visual_frames: usize,
    /// Milliseconds of the window covered by env-audio.
    pub audio_ms: u64,
}

/// Everything a responder sees when deciding what to say in chunk `k`.
pub struct ChunkContext<'a> {
    pub k: ChunkIndex,
    pub window: (Timestamp, Timestamp),
    pub summary: PerceptualSummary,
    /// Triggers up to and including this chunk.
    pub triggers_so_far: &'a [Trigger],
    /// Triggers whose timestamp falls in this chunk.
    pub new_triggers: &'a [Trigger],
    /// The assistant still has text or speech queued.
    pub speaking: bool,
    pub rng: &'a mut ChaCha8Rng,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Response {
    Silent,
    /// Text tokens to be timed by the run's duration model.
    Text(Vec<String>),
    /// Tokens with known durations.
    Timed(Vec<TimedToken>),
}

pub trait Responder {
    fn respond(&mut self, ctx: &mut ChunkContext<'_>) -> Response;
}

impl<R: Responder + ?Sized> Responder for Box<R> {
    fn respond(&mut self, ctx: &mut ChunkContext<'_>) -> Response {
        (**self).respond(ctx)
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct AlwaysSilent;

impl Responder for AlwaysSilent {
    fn respond(&mut self, _ctx: &mut ChunkContext<'_>) -> Response {
        Response::Silent
    }
}

/// Replies `delay_chunks` chunks after each trigger.
#[derive(Debug, Clone)]
pub struct ReactiveEcho {
    pub delay_chunks: u64,
    pub reply: Vec<String>,
    due: Vec<u64>,
}

impl ReactiveEcho {
    pub fn new(delay_chunks: u64, reply: Vec<String>) -> Self {
        Self {
            delay_chunks,
            reply,
            due: Vec::new(),
        }
    }
}

impl Responder for ReactiveEcho {
    fn respond(&mut self, ctx: &mut ChunkContext<'_>) -> Response {
        let k = ctx.k.get();
        self.due
            .extend(ctx.new_triggers.iter().map(|_| k + self.delay_chunks));
        let fire = self.due.iter().filter(|&&d| d == k).count();
        self.due.retain(|&d| d > k);
        if fire == 0 || self.reply.is_empty() {
            return Response::Silent;
        }
        Response::Text(
            std::iter::repeat_n(&self.reply, fire)
                .flatten()
                .cloned()
                .collect(),
        )
    }
}

/// Speaks up on its own after env-audio has been quiet for `quiet_chunks`
/// consecutive chunks while frames keep arriving. Fires once per quiet run.
#[derive(Debug, Clone)]
pub struct Proactive {
    pub quiet_chunks: u64,
    pub reply: Vec<String>,
    quiet_run: u64,
    fired: bool,
}

impl Proactive {
    pub fn new(quiet_chunks: u64, reply: Vec<String>) -> Self {
        Self {
            quiet_chunks: quiet_chunks.max(1),
            reply,
            quiet_run: 0,
            fired: false,
        }
    }
}

impl Responder for Proactive {
    fn respond(&mut self, ctx: &mut ChunkContext<'_>) -> Response {
        if ctx.summary.audio_ms > 0 {
            self.quiet_run = 0;
            self.fired = false;
            return Response::Silent;
        }
        self.quiet_run += 1;
        if !self.fired
            && self.quiet_run >= self.quiet_chunks
            && ctx.summary.visual_frames > 0
            && !ctx.speaking
        {
            self.fired = true;
            return Response::Text(self.reply.clone());
        }
        Response::Silent
    }
}

/// Seeded random talker, mostly useful for exercising determinism.
#[derive(Debug, Clone)]
pub struct Chatter {
    pub probability: f64,
    pub max_tokens: usize,
}

impl Responder for Chatter {
    fn respond(&mut self, ctx: &mut ChunkContext<'_>) -> Response {
        if ctx.speaking || self.max_tokens == 0 || !ctx.rng.gen_bool(self.probability.clamp(0.0, 1.0)) {
            return Response::Silent;
        }
        let n = ctx.rng.gen_range(1..=self.max_tokens);
        let len = |rng: &mut ChaCha8Rng| rng.gen_range(1..=7);
        let words = (0..n)
            .map(|_| {
                let l = len(ctx.rng);
                (0..l).map(|_| ctx.rng.gen_range(b'a'..=b'z') as char).collect()
            })
            .collect();
        Response::Text(words)
    }
}
