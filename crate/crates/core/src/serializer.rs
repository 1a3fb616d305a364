//! Unified sequence layout.
//!
//! Every chunk `k` becomes one group `[visual; audio; output]`: the frames and
//! audio tokens that arrived inside the window, followed by what the assistant
//! emitted for that window. A chunk with nothing to say still emits a single
//! `[listen]` token, so every group has a non-empty output part.
//!
//! Two switches shape the output part and the framing:
//!
//! * [`ControlMode::ListenSpeak`] prefixes content with a `[speak]` control
//!   token; [`ControlMode::ListenText`] emits content directly.
//! * [`BoundaryMode::Explicit`] terminates each group with a `[boundary]`
//!   token; [`BoundaryMode::Implicit`] relies on chunk indices alone.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::budget::{self, BudgetError, ModalityProfile};
use crate::timeline::{
    self, ChunkConfig, ChunkIndex, InputTrace, TimelineError, DEFAULT_LOOK_AHEAD_TOKENS,
};

pub const LISTEN_PAYLOAD: &str = "[listen]";
pub const SPEAK_PAYLOAD: &str = "[speak]";
pub const BOUNDARY_PAYLOAD: &str = "[boundary]";

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SerializerError {
    #[error(transparent)]
    Timeline(#[from] TimelineError),
    #[error(transparent)]
    Budget(#[from] BudgetError),
    #[error("output assigned to chunk {k} beyond the serialized horizon of {horizon} chunks")]
    OutputForMissingChunk { k: u64, horizon: u64 },
    #[error("malformed sequence at token {index}: {reason}")]
    MalformedSequence { index: usize, reason: String },
    #[error("line {line}: {reason}")]
    BadLine { line: usize, reason: String },
    #[error("unknown preset `{0}`")]
    UnknownPreset(String),
}

fn malformed(index: usize, reason: impl Into<String>) -> SerializerError {
    SerializerError::MalformedSequence {
        index,
        reason: reason.into(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BoundaryMode {
    Explicit,
    Implicit,
}

/// How the model signals whether it speaks in a chunk.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ControlMode {
    /// Binary `[listen]`/`[speak]` decision before any content (LS).
    ListenSpeak,
    /// `[listen]` and text share one output space (LT).
    ListenText,
}

impl fmt::Display for BoundaryMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BoundaryMode::Explicit => "explicit",
            BoundaryMode::Implicit => "implicit",
        })
    }
}

impl fmt::Display for ControlMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ControlMode::ListenSpeak => "ls",
            ControlMode::ListenText => "lt",
        })
    }
}

impl FromStr for BoundaryMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "explicit" => Ok(BoundaryMode::Explicit),
            "implicit" => Ok(BoundaryMode::Implicit),
            other => Err(format!("unknown boundary mode `{other}`")),
        }
    }
}

impl FromStr for ControlMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "ls" => Ok(ControlMode::ListenSpeak),
            "lt" => Ok(ControlMode::ListenText),
            other => Err(format!("unknown control mode `{other}`")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct SerializerConfig {
    pub chunk: ChunkConfig,
    pub boundary: BoundaryMode,
    pub control: ControlMode,
}

impl SerializerConfig {
    pub fn new(chunk: ChunkConfig, boundary: BoundaryMode, control: ControlMode) -> Self {
        Self {
            chunk,
            boundary,
            control,
        }
    }

    /// Name of the form `t1000-explicit-ls`.
    pub fn preset_name(&self) -> String {
        format!(
            "t{}-{}-{}",
            self.chunk.duration_ms(),
            self.boundary,
            self.control
        )
    }

    /// Looks up one of the [`ablation_grid`] presets by name.
    pub fn from_preset(name: &str) -> Result<Self, SerializerError> {
        ablation_grid()
            .into_iter()
            .find(|c| c.preset_name() == name)
            .ok_or_else(|| SerializerError::UnknownPreset(name.to_string()))
    }
}

impl Default for SerializerConfig {
    fn default() -> Self {
        ablation_grid()[0]
    }
}

/// The five design points of the full-duplex ablation, best row first.
pub fn ablation_grid() -> Vec<SerializerConfig> {
    use BoundaryMode::*;
    use ControlMode::*;
    [
        (1000, Explicit, ListenSpeak),
        (1000, Explicit, ListenText),
        (1000, Implicit, ListenText),
        (200, Explicit, ListenSpeak),
        (100, Explicit, ListenSpeak),
    ]
    .into_iter()
    .map(|(t, b, c)| {
        let chunk = ChunkConfig::new(t, DEFAULT_LOOK_AHEAD_TOKENS).expect("non-zero duration");
        SerializerConfig::new(chunk, b, c)
    })
    .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Role {
    Visual,
    Audio,
    TextOut,
    SpeechOut,
    Listen,
    Speak,
    Boundary,
}

impl Role {
    pub fn as_str(self) -> &'static str {
        match self {
            Role::Visual => "visual",
            Role::Audio => "audio",
            Role::TextOut => "text",
            Role::SpeechOut => "speech",
            Role::Listen => "listen",
            Role::Speak => "speak",
            Role::Boundary => "boundary",
        }
    }

    pub fn is_perceptual(self) -> bool {
        matches!(self, Role::Visual | Role::Audio)
    }

    pub fn is_content(self) -> bool {
        matches!(self, Role::TextOut | Role::SpeechOut)
    }
}

impl fmt::Display for Role {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Role {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s {
            "visual" => Role::Visual,
            "audio" => Role::Audio,
            "text" => Role::TextOut,
            "speech" => Role::SpeechOut,
            "listen" => Role::Listen,
            "speak" => Role::Speak,
            "boundary" => Role::Boundary,
            other => return Err(format!("unknown role `{other}`")),
        })
    }
}

/// One position of the unified sequence. Payloads are opaque.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Token {
    pub role: Role,
    pub payload: String,
    pub chunk: ChunkIndex,
}

impl Token {
    pub fn new(role: Role, payload: impl Into<String>, chunk: ChunkIndex) -> Self {
        Self {
            role,
            payload: payload.into(),
            chunk,
        }
    }
}

/// Assistant output for a chunk, before control tokens are added.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Content {
    Text(String),
    Speech(String),
}

impl Content {
    fn into_token(self, chunk: ChunkIndex) -> Token {
        match self {
            Content::Text(p) => Token::new(Role::TextOut, p, chunk),
            Content::Speech(p) => Token::new(Role::SpeechOut, p, chunk),
        }
    }
}

/// Chunk-indexed assistant outputs. Missing chunks are idle.
pub type ChunkOutputs = BTreeMap<ChunkIndex, Vec<Content>>;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TokenGroup {
    pub k: ChunkIndex,
    pub visual: Vec<Token>,
    pub audio: Vec<Token>,
    pub output: Vec<Token>,
}

impl TokenGroup {
    /// True when the output part is the single `[listen]` token.
    pub fn is_listen_only(&self) -> bool {
        matches!(self.output.as_slice(), [t] if t.role == Role::Listen)
    }

    /// Text and speech tokens of the output part, control tokens removed.
    pub fn content(&self) -> impl Iterator<Item = &Token> {
        self.output.iter().filter(|t| t.role.is_content())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SerializedSequence {
    pub tokens: Vec<Token>,
    pub config: SerializerConfig,
}

/// Incremental serializer: feed one chunk of assistant output at a time and
/// read back the emitted prefix.
///
/// Perceptual tokens come from the borrowed trace. Chunks past the end of the
/// trace simply carry no perceptual tokens.
pub struct StreamSerializer<'a> {
    trace: &'a InputTrace,
    cfg: SerializerConfig,
    profile: ModalityProfile,
    next_k: ChunkIndex,
    frame_cursor: usize,
    audio_tokens_so_far: u64,
    tokens: Vec<Token>,
}

impl<'a> StreamSerializer<'a> {
    pub fn new(trace: &'a InputTrace, cfg: SerializerConfig, profile: ModalityProfile) -> Self {
        Self {
            trace,
            cfg,
            profile,
            next_k: ChunkIndex::FIRST,
            frame_cursor: 0,
            audio_tokens_so_far: 0,
            tokens: Vec::new(),
        }
    }

    pub fn next_chunk(&self) -> ChunkIndex {
        self.next_k
    }

    /// Emits the group for the next chunk and returns it.
    pub fn push_chunk(&mut self, content: Vec<Content>) -> Result<TokenGroup, SerializerError> {
        let k = self.next_k;
        let boundary = self.cfg.chunk.boundary(k);

        let mut visual = Vec::new();
        while let Some(frame) = self.trace.visual_events.get(self.frame_cursor) {
            if frame.at.as_ms() >= boundary {
                break;
            }
            let n = budget::visual_tokens(frame.width_px, frame.height_px, true, &self.profile)?;
            visual.extend((0..n).map(|slot| {
                Token::new(Role::Visual, format!("f{}.{}", self.frame_cursor, slot), k)
            }));
            self.frame_cursor += 1;
        }

        let covered = self.trace.audio_covered_ms(boundary);
        let audio_total = budget::audio_tokens_cumulative(covered, &self.profile);
        let audio = (self.audio_tokens_so_far..audio_total)
            .map(|i| Token::new(Role::Audio, format!("a{i}"), k))
            .collect();
        self.audio_tokens_so_far = audio_total;

        let output = if content.is_empty() {
            vec![Token::new(Role::Listen, LISTEN_PAYLOAD, k)]
        } else {
            let mut out = Vec::with_capacity(content.len() + 1);
            if self.cfg.control == ControlMode::ListenSpeak {
                out.push(Token::new(Role::Speak, SPEAK_PAYLOAD, k));
            }
            out.extend(content.into_iter().map(|c| c.into_token(k)));
            out
        };

        let group = TokenGroup {
            k,
            visual,
            audio,
            output,
        };
        emit_group(&group, self.cfg.boundary, &mut self.tokens);
        self.next_k = k.next();
        Ok(group)
    }

    /// Tokens emitted so far.
    pub fn emitted(&self) -> &[Token] {
        &self.tokens
    }

    pub fn finish(self) -> SerializedSequence {
        SerializedSequence {
            tokens: self.tokens,
            config: self.cfg,
        }
    }
}

fn emit_group(group: &TokenGroup, boundary: BoundaryMode, out: &mut Vec<Token>) {
    out.extend(group.visual.iter().cloned());
    out.extend(group.audio.iter().cloned());
    out.extend(group.output.iter().cloned());
    if boundary == BoundaryMode::Explicit {
        out.push(Token::new(Role::Boundary, BOUNDARY_PAYLOAD, group.k));
    }
}

/// Serializes a trace and its outputs with the default modality profile.
///
/// The horizon covers both the trace and the last chunk that has output.
pub fn serialize(
    trace: &InputTrace,
    outputs: &ChunkOutputs,
    cfg: &SerializerConfig,
) -> Result<SerializedSequence, SerializerError> {
    serialize_with(trace, outputs, cfg, &ModalityProfile::default(), None)
}

/// Like [`serialize`], with an explicit profile and optional fixed horizon
/// (in chunks). With a fixed horizon, outputs past it are an error.
pub fn serialize_with(
    trace: &InputTrace,
    outputs: &ChunkOutputs,
    cfg: &SerializerConfig,
    profile: &ModalityProfile,
    horizon_chunks: Option<u64>,
) -> Result<SerializedSequence, SerializerError> {
    let trace = timeline::validate_trace(trace.clone())?;
    profile.validate()?;
    let trace_chunks = cfg.chunk.chunks_for(trace.horizon_ms());
    let last_output = outputs.keys().next_back().map_or(0, |k| k.get());
    let horizon = match horizon_chunks {
        Some(h) => {
            let h = h.max(trace_chunks);
            if last_output > h {
                return Err(SerializerError::OutputForMissingChunk {
                    k: last_output,
                    horizon: h,
                });
            }
            h
        }
        None => trace_chunks.max(last_output),
    };

    let mut stream = StreamSerializer::new(&trace, *cfg, *profile);
    for k in ChunkIndex::up_to(horizon) {
        let content = outputs.get(&k).cloned().unwrap_or_default();
        stream.push_chunk(content)?;
    }
    Ok(stream.finish())
}

/// Re-emits groups as a flat sequence after checking each one.
pub fn serialize_groups(
    groups: &[TokenGroup],
    cfg: &SerializerConfig,
) -> Result<SerializedSequence, SerializerError> {
    let mut tokens = Vec::new();
    let mut prev: Option<ChunkIndex> = None;
    for group in groups {
        if prev.is_some_and(|p| group.k <= p) {
            return Err(malformed(tokens.len(), "groups out of order"));
        }
        check_group(group, cfg.control, tokens.len())?;
        emit_group(group, cfg.boundary, &mut tokens);
        prev = Some(group.k);
    }
    Ok(SerializedSequence {
        tokens,
        config: *cfg,
    })
}

fn check_group(
    group: &TokenGroup,
    control: ControlMode,
    base: usize,
) -> Result<(), SerializerError> {
    let all = group
        .visual
        .iter()
        .chain(&group.audio)
        .chain(&group.output);
    for (i, t) in all.enumerate() {
        if t.chunk != group.k {
            return Err(malformed(base + i, format!("token tagged chunk {} inside group {}", t.chunk, group.k)));
        }
    }
    if let Some(i) = group.visual.iter().position(|t| t.role != Role::Visual) {
        return Err(malformed(base + i, "non-visual token in visual part"));
    }
    if let Some(i) = group.audio.iter().position(|t| t.role != Role::Audio) {
        return Err(malformed(base + group.visual.len() + i, "non-audio token in audio part"));
    }
    check_output(&group.output, control, base + group.visual.len() + group.audio.len())
}

fn check_output(output: &[Token], control: ControlMode, base: usize) -> Result<(), SerializerError> {
    let roles: Vec<Role> = output.iter().map(|t| t.role).collect();
    match (control, roles.as_slice()) {
        (_, []) => Err(malformed(base, "empty output part")),
        (_, [Role::Listen]) => Ok(()),
        (_, [Role::Listen, ..]) => Err(malformed(base + 1, "content after [listen]")),
        (ControlMode::ListenSpeak, [Role::Speak]) => {
            Err(malformed(base, "[speak] without content"))
        }
        (ControlMode::ListenSpeak, [Role::Speak, rest @ ..]) => check_content(rest, base + 1),
        (ControlMode::ListenSpeak, _) => Err(malformed(base, "LS output must start with [listen] or [speak]")),
        (ControlMode::ListenText, rest) => check_content(rest, base),
    }
}

fn check_content(roles: &[Role], base: usize) -> Result<(), SerializerError> {
    match roles.iter().position(|r| !r.is_content()) {
        Some(i) => Err(malformed(base + i, format!("unexpected {} token in content", roles[i]))),
        None => Ok(()),
    }
}

/// Splits a sequence back into groups, checking the layout rules of its
/// config. Re-serializing the result reproduces the input token for token.
pub fn parse(seq: &SerializedSequence) -> Result<Vec<TokenGroup>, SerializerError> {
    let cfg = &seq.config;
    let tokens = &seq.tokens;
    let mut groups: Vec<TokenGroup> = Vec::new();
    let mut i = 0;
    while i < tokens.len() {
        let start = i;
        let k = tokens[i].chunk;
        if groups.last().is_some_and(|g| k <= g.k) {
            return Err(malformed(i, format!("chunk {k} does not increase")));
        }
        let mut end = i;
        while end < tokens.len() && tokens[end].chunk == k {
            end += 1;
        }
        let mut run = &tokens[start..end];
        match cfg.boundary {
            BoundaryMode::Explicit => match run.split_last() {
                Some((last, body)) if last.role == Role::Boundary => run = body,
                _ => return Err(malformed(end.saturating_sub(1), format!("group {k} lacks a terminal boundary"))),
            },
            BoundaryMode::Implicit => {}
        }
        if let Some(j) = run.iter().position(|t| t.role == Role::Boundary) {
            return Err(malformed(start + j, "unexpected boundary token"));
        }

        let n_visual = run.iter().take_while(|t| t.role == Role::Visual).count();
        let n_audio = run[n_visual..]
            .iter()
            .take_while(|t| t.role == Role::Audio)
            .count();
        let split = n_visual + n_audio;
        if let Some(j) = run[split..].iter().position(|t| t.role.is_perceptual()) {
            return Err(malformed(start + split + j, "perceptual token after output"));
        }
        let group = TokenGroup {
            k,
            visual: run[..n_visual].to_vec(),
            audio: run[n_visual..split].to_vec(),
            output: run[split..].to_vec(),
        };
        check_output(&group.output, cfg.control, start + split)?;
        groups.push(group);
        i = end;
    }
    Ok(groups)
}

fn escape(payload: &str, out: &mut String) {
    for c in payload.chars() {
        match c {
            '\\' => out.push_str("\\\\"),
            '\t' => out.push_str("\\t"),
            '\n' => out.push_str("\\n"),
            '\r' => out.push_str("\\r"),
            c => out.push(c),
        }
    }
}

fn unescape(raw: &str) -> Result<String, String> {
    let mut out = String::with_capacity(raw.len());
    let mut chars = raw.chars();
    while let Some(c) = chars.next() {
        if c != '\\' {
            out.push(c);
            continue;
        }
        match chars.next() {
            Some('\\') => out.push('\\'),
            Some('t') => out.push('\t'),
            Some('n') => out.push('\n'),
            Some('r') => out.push('\r'),
            Some(other) => return Err(format!("unknown escape `\\{other}`")),
            None => return Err("dangling escape".into()),
        }
    }
    Ok(out)
}

/// Line-per-token text form: `k<TAB>role<TAB>payload`, one token per line.
///
/// Backslash, tab, CR and LF inside payloads are backslash-escaped.
pub fn to_lines(tokens: &[Token]) -> String {
    let mut out = String::new();
    for t in tokens {
        out.push_str(&t.chunk.get().to_string());
        out.push('\t');
        out.push_str(t.role.as_str());
        out.push('\t');
        escape(&t.payload, &mut out);
        out.push('\n');
    }
    out
}

pub fn from_lines(text: &str) -> Result<Vec<Token>, SerializerError> {
    let bad = |line: usize, reason: String| SerializerError::BadLine { line, reason };
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.is_empty())
        .map(|(n, l)| {
            let line = n + 1;
            let mut parts = l.splitn(3, '\t');
            let (Some(k), Some(role), Some(payload)) = (parts.next(), parts.next(), parts.next())
            else {
                return Err(bad(line, "expected three tab-separated fields".into()));
            };
            let k: u64 = k.parse().map_err(|_| bad(line, format!("bad chunk `{k}`")))?;
            let chunk = ChunkIndex::new(k).map_err(|e| bad(line, e.to_string()))?;
            let role: Role = role.parse().map_err(|e| bad(line, e))?;
            let payload = unescape(payload).map_err(|e| bad(line, e))?;
            Ok(Token {
                role,
                payload,
                chunk,
            })
        })
        .collect()
}
