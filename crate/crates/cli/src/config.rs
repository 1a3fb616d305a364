//! `key = value` run configuration.
//!
//! Lines are `key = value`; blank lines and lines starting with `#` are
//! skipped. Values are applied over the preset (if any) in file order, and
//! command-line flags are applied last.

use std::collections::BTreeSet;

use omniflow_core::serializer::{BoundaryMode, ControlMode, SerializerConfig};
use omniflow_core::simulator::{
    AlwaysSilent, Chatter, CostModel, Proactive, ReactiveEcho, Responder, RunOptions,
};
use omniflow_core::tail::{CharLinear, Strategy};
use omniflow_core::ChunkConfig;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ConfigError {
    #[error("line {line}: expected `key = value`")]
    BadLine { line: usize },
    #[error("line {line}: unknown key `{key}`")]
    UnknownKey { line: usize, key: String },
    #[error("line {line}: key `{key}` given twice")]
    DuplicateKey { line: usize, key: String },
    #[error("`{key}`: {reason}")]
    InvalidValue { key: String, reason: String },
}

impl ConfigError {
    pub fn code(&self) -> &'static str {
        match self {
            ConfigError::BadLine { .. } => "BadConfigLine",
            ConfigError::UnknownKey { .. } => "UnknownKey",
            ConfigError::DuplicateKey { .. } => "DuplicateKey",
            ConfigError::InvalidValue { .. } => "InvalidValue",
        }
    }
}

const KEYS: &[&str] = &[
    "preset",
    "chunk_ms",
    "look_ahead",
    "boundary",
    "control",
    "strategy",
    "ms_per_char",
    "seed",
    "visual_tokens_per_slice",
    "slice_edge_px",
    "audio_tokens_per_second",
    "speech_tokens_per_second",
    "text_decodes_per_second_min",
    "text_decodes_per_second_max",
    "cost_perceptual_ms",
    "cost_decode_ms",
    "cost_speech_ms",
    "responder",
    "reply",
    "echo_delay_chunks",
    "proactive_quiet_chunks",
    "chatter_probability",
    "chatter_max_tokens",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ResponderKind {
    Silent,
    Echo,
    Proactive,
    Chatter,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResponderSpec {
    pub kind: ResponderKind,
    pub reply: Vec<String>,
    pub echo_delay_chunks: u64,
    pub proactive_quiet_chunks: u64,
    pub chatter_probability: f64,
    pub chatter_max_tokens: usize,
}

impl Default for ResponderSpec {
    fn default() -> Self {
        Self {
            kind: ResponderKind::Echo,
            reply: "i see it".split(' ').map(String::from).collect(),
            echo_delay_chunks: 1,
            proactive_quiet_chunks: 2,
            chatter_probability: 0.3,
            chatter_max_tokens: 6,
        }
    }
}

/// Static dispatch over the built-in responders, so runs can be cloned.
#[derive(Debug, Clone)]
pub enum AnyResponder {
    Silent(AlwaysSilent),
    Echo(ReactiveEcho),
    Proactive(Proactive),
    Chatter(Chatter),
}

impl Responder for AnyResponder {
    fn respond(
        &mut self,
        ctx: &mut omniflow_core::simulator::ChunkContext<'_>,
    ) -> omniflow_core::simulator::Response {
        match self {
            AnyResponder::Silent(r) => r.respond(ctx),
            AnyResponder::Echo(r) => r.respond(ctx),
            AnyResponder::Proactive(r) => r.respond(ctx),
            AnyResponder::Chatter(r) => r.respond(ctx),
        }
    }
}

impl ResponderSpec {
    pub fn build(&self) -> AnyResponder {
        match self.kind {
            ResponderKind::Silent => AnyResponder::Silent(AlwaysSilent),
            ResponderKind::Echo => {
                AnyResponder::Echo(ReactiveEcho::new(self.echo_delay_chunks, self.reply.clone()))
            }
            ResponderKind::Proactive => AnyResponder::Proactive(Proactive::new(
                self.proactive_quiet_chunks,
                self.reply.clone(),
            )),
            ResponderKind::Chatter => AnyResponder::Chatter(Chatter {
                probability: self.chatter_probability,
                max_tokens: self.chatter_max_tokens,
            }),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub serializer: SerializerConfig,
    pub strategy: Strategy,
    pub durations: CharLinear,
    pub seed: u64,
    pub options: RunOptions,
    pub responder: ResponderSpec,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            serializer: SerializerConfig::default(),
            strategy: Strategy::Tail,
            durations: CharLinear::default(),
            seed: 0,
            options: RunOptions {
                profile: Default::default(),
                cost: CostModel::default(),
            },
            responder: ResponderSpec::default(),
        }
    }
}

/// Command-line values that override the file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub preset: Option<String>,
    pub strategy: Option<String>,
    pub seed: Option<u64>,
}

/// Splits a config file into `(line, key, value)` entries.
pub fn parse_entries(text: &str) -> Result<Vec<(usize, String, String)>, ConfigError> {
    let mut seen = BTreeSet::new();
    let mut entries = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let trimmed = raw.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let (key, value) = trimmed
            .split_once('=')
            .ok_or(ConfigError::BadLine { line })?;
        let key = key.trim().to_string();
        if !KEYS.contains(&key.as_str()) {
            return Err(ConfigError::UnknownKey { line, key });
        }
        if !seen.insert(key.clone()) {
            return Err(ConfigError::DuplicateKey { line, key });
        }
        entries.push((line, key, value.trim().to_string()));
    }
    Ok(entries)
}

fn invalid(key: &str, reason: impl ToString) -> ConfigError {
    ConfigError::InvalidValue {
        key: key.to_string(),
        reason: reason.to_string(),
    }
}

fn num<T: std::str::FromStr>(key: &str, v: &str) -> Result<T, ConfigError>
where
    T::Err: std::fmt::Display,
{
    v.parse().map_err(|e| invalid(key, format!("`{v}`: {e}")))
}

fn positive_ms(key: &str, v: &str) -> Result<f64, ConfigError> {
    let x: f64 = num(key, v)?;
    if !x.is_finite() || x < 0.0 {
        return Err(invalid(key, "must be a non-negative number"));
    }
    Ok(x)
}

impl RunConfig {
    /// Defaults, then preset, then file entries, then flags.
    pub fn resolve(file: Option<&str>, flags: &Overrides) -> Result<Self, ConfigError> {
        let entries = match file {
            Some(text) => parse_entries(text)?,
            None => Vec::new(),
        };
        let mut cfg = RunConfig::default();

        let file_preset = entries
            .iter()
            .find(|(_, k, _)| k == "preset")
            .map(|(_, _, v)| v.clone());
        if let Some(name) = flags.preset.clone().or(file_preset) {
            cfg.serializer = SerializerConfig::from_preset(&name)
                .map_err(|e| invalid("preset", e))?;
        }

        let mut chunk_ms = cfg.serializer.chunk.duration_ms();
        let mut look_ahead = cfg.serializer.chunk.look_ahead_tokens();
        for (_, key, v) in &entries {
            let key = key.as_str();
            let p = &mut cfg.options.profile;
            match key {
                "preset" => {}
                "chunk_ms" => chunk_ms = num(key, v)?,
                "look_ahead" => look_ahead = num(key, v)?,
                "boundary" => cfg.serializer.boundary = v.parse::<BoundaryMode>().map_err(|e| invalid(key, e))?,
                "control" => cfg.serializer.control = v.parse::<ControlMode>().map_err(|e| invalid(key, e))?,
                "strategy" => cfg.strategy = v.parse().map_err(|e| invalid(key, e))?,
                "ms_per_char" => cfg.durations.ms_per_char = num(key, v)?,
                "seed" => cfg.seed = num(key, v)?,
                "visual_tokens_per_slice" => p.visual_tokens_per_slice = num(key, v)?,
                "slice_edge_px" => p.slice_edge_px = num(key, v)?,
                "audio_tokens_per_second" => p.audio_tokens_per_second = num(key, v)?,
                "speech_tokens_per_second" => p.speech_tokens_per_second = num(key, v)?,
                "text_decodes_per_second_min" => p.text_decodes_per_second_min = num(key, v)?,
                "text_decodes_per_second_max" => p.text_decodes_per_second_max = num(key, v)?,
                "cost_perceptual_ms" => cfg.options.cost.perceptual_ms = positive_ms(key, v)?,
                "cost_decode_ms" => cfg.options.cost.decode_ms = positive_ms(key, v)?,
                "cost_speech_ms" => cfg.options.cost.speech_ms = positive_ms(key, v)?,
                "responder" => {
                    cfg.responder.kind = match v.as_str() {
                        "silent" => ResponderKind::Silent,
                        "echo" => ResponderKind::Echo,
                        "proactive" => ResponderKind::Proactive,
                        "chatter" => ResponderKind::Chatter,
                        other => return Err(invalid(key, format!("unknown responder `{other}`"))),
                    }
                }
                "reply" => cfg.responder.reply = v.split_whitespace().map(String::from).collect(),
                "echo_delay_chunks" => cfg.responder.echo_delay_chunks = num(key, v)?,
                "proactive_quiet_chunks" => cfg.responder.proactive_quiet_chunks = num(key, v)?,
                "chatter_probability" => {
                    let x: f64 = num(key, v)?;
                    if !(0.0..=1.0).contains(&x) {
                        return Err(invalid(key, "must lie in [0, 1]"));
                    }
                    cfg.responder.chatter_probability = x;
                }
                "chatter_max_tokens" => cfg.responder.chatter_max_tokens = num(key, v)?,
                _ => unreachable!("key list and match arms disagree on `{key}`"),
            }
        }
        cfg.serializer.chunk =
            ChunkConfig::new(chunk_ms, look_ahead).map_err(|e| invalid("chunk_ms", e))?;

        if let Some(s) = &flags.strategy {
            cfg.strategy = s.parse().map_err(|e| invalid("strategy", e))?;
        }
        if let Some(seed) = flags.seed {
            cfg.seed = seed;
        }
        cfg.options
            .profile
            .validate()
            .map_err(|e| invalid("profile", e))?;
        Ok(cfg)
    }
}
