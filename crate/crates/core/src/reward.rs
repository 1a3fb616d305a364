//! Smooth length reward for grouped RL rollouts.
//!
//! For responses to the same prompt, with lengths spanning
//! `[len_min, len_max]`:
//!
//! ```text
//! s_i   = (0.5 - (len_i - len_min) / (len_max - len_min)) * min(1, (len_max - len_min) / tau)
//! r_len = s_i            if the response is correct
//!         min(0, s_i)    otherwise
//! ```
//!
//! A group whose lengths are all equal gets `s_i = 0`.

use thiserror::Error;

/// Steps during which the length reward is switched off.
pub const DEFAULT_WARMUP_STEPS: u64 = 480;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RewardError {
    #[error("reward group has no responses")]
    EmptyGroup,
    #[error("tau must be a positive number, got {0}")]
    NonPositiveTau(f64),
    #[error("response {index} has zero length")]
    ZeroLength { index: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Rollout {
    pub correct: bool,
    pub len: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RewardGroup {
    pub responses: Vec<Rollout>,
    pub tau: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LengthReward {
    /// Unclamped length score.
    pub s: f64,
    pub r_len: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RewardOutput {
    pub rewards: Vec<LengthReward>,
}

pub fn length_reward(g: &RewardGroup) -> Result<RewardOutput, RewardError> {
    if g.responses.is_empty() {
        return Err(RewardError::EmptyGroup);
    }
    if g.tau.is_nan() || g.tau <= 0.0 || !g.tau.is_finite() {
        return Err(RewardError::NonPositiveTau(g.tau));
    }
    if let Some(index) = g.responses.iter().position(|r| r.len == 0) {
        return Err(RewardError::ZeroLength { index });
    }
    let min = g.responses.iter().map(|r| r.len).min().unwrap_or(0);
    let max = g.responses.iter().map(|r| r.len).max().unwrap_or(0);
    let range = (max - min) as f64;
    let scale = (range / g.tau).min(1.0);

    let rewards = g
        .responses
        .iter()
        .map(|r| {
            let s = if max == min {
                0.0
            } else {
                (0.5 - (r.len - min) as f64 / range) * scale
            };
            let r_len = if r.correct { s } else { s.min(0.0) };
            LengthReward { s, r_len }
        })
        .collect();
    Ok(RewardOutput { rewards })
}

/// Multiplier applied to the length reward at `step`.
pub fn reward_weight(step: u64, warmup_steps: u64) -> f64 {
    if step < warmup_steps {
        0.0
    } else {
        1.0
    }
}
