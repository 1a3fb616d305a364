//! Token-count model for each modality.
//!
//! Fractional per-chunk rates (10 audio tokens/s over a 250 ms chunk is 2.5)
//! are resolved by flooring the *cumulative* count and differencing, so the
//! long-run rate stays exact no matter how the axis is chunked.

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum BudgetError {
    #[error("frame dimensions must be at least 1x1, got {width_px}x{height_px}")]
    ZeroDimension { width_px: u32, height_px: u32 },
    #[error("{width_px}x{height_px} exceeds the {cap_px}x{cap_px} streaming cap")]
    ResolutionExceedsStreamingCap {
        width_px: u32,
        height_px: u32,
        cap_px: u32,
    },
    #[error("speech span [{start_ms}, {end_ms}) is empty")]
    EmptySpan { start_ms: u64, end_ms: u64 },
    #[error("modality rate `{0}` must be at least 1")]
    ZeroRate(&'static str),
}

/// Per-modality token rates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ModalityProfile {
    /// Tokens produced by the resampler for one image slice.
    pub visual_tokens_per_slice: u64,
    /// Edge of one square slice; also the streaming-mode resolution cap.
    pub slice_edge_px: u32,
    pub audio_tokens_per_second: u64,
    pub speech_tokens_per_second: u64,
    pub text_decodes_per_second_min: u64,
    pub text_decodes_per_second_max: u64,
}

impl Default for ModalityProfile {
    fn default() -> Self {
        Self {
            visual_tokens_per_slice: 64,
            slice_edge_px: 448,
            audio_tokens_per_second: 10,
            speech_tokens_per_second: 25,
            text_decodes_per_second_min: 3,
            text_decodes_per_second_max: 4,
        }
    }
}

impl ModalityProfile {
    pub fn validate(&self) -> Result<(), BudgetError> {
        let rates = [
            ("visual_tokens_per_slice", self.visual_tokens_per_slice),
            ("slice_edge_px", u64::from(self.slice_edge_px)),
            ("audio_tokens_per_second", self.audio_tokens_per_second),
            ("speech_tokens_per_second", self.speech_tokens_per_second),
            ("text_decodes_per_second_min", self.text_decodes_per_second_min),
            ("text_decodes_per_second_max", self.text_decodes_per_second_max),
        ];
        match rates.iter().find(|(_, v)| *v == 0) {
            Some((name, _)) => Err(BudgetError::ZeroRate(name)),
            None => Ok(()),
        }
    }

    /// Duration of one speech frame in milliseconds (40 ms at 25/s).
    pub fn speech_frame_ms(&self) -> f64 {
        1000.0 / self.speech_tokens_per_second as f64
    }
}

/// Visual tokens for one frame.
///
/// Streaming mode encodes a single slice and rejects frames above the slice
/// edge. Otherwise the frame is tiled into `ceil(w/edge) x ceil(h/edge)` slices.
pub fn visual_tokens(
    width_px: u32,
    height_px: u32,
    streaming: bool,
    profile: &ModalityProfile,
) -> Result<u64, BudgetError> {
    if width_px == 0 || height_px == 0 {
        return Err(BudgetError::ZeroDimension {
            width_px,
            height_px,
        });
    }
    let edge = profile.slice_edge_px;
    if streaming {
        if width_px > edge || height_px > edge {
            return Err(BudgetError::ResolutionExceedsStreamingCap {
                width_px,
                height_px,
                cap_px: edge,
            });
        }
        return Ok(profile.visual_tokens_per_slice);
    }
    let slices = u64::from(width_px.div_ceil(edge)) * u64::from(height_px.div_ceil(edge));
    Ok(slices * profile.visual_tokens_per_slice)
}

/// Audio tokens produced by the first `cum_audio_ms` milliseconds of audio.
pub fn audio_tokens_cumulative(cum_audio_ms: u64, profile: &ModalityProfile) -> u64 {
    cum_audio_ms * profile.audio_tokens_per_second / 1000
}

/// Speech frame index at time `ms` on the 25/s grid.
pub fn speech_frame_at(ms: u64, profile: &ModalityProfile) -> u64 {
    ms * profile.speech_tokens_per_second / 1000
}

/// `(first_index, count)` of the speech frames covering `[start_ms, end_ms)`.
///
/// Adjacent spans tile the frame axis: the end frame of one span is the first
/// frame of the next.
pub fn speech_token_span(
    start_ms: u64,
    end_ms: u64,
    profile: &ModalityProfile,
) -> Result<(u64, u64), BudgetError> {
    if end_ms <= start_ms {
        return Err(BudgetError::EmptySpan { start_ms, end_ms });
    }
    let first = speech_frame_at(start_ms, profile);
    let last = speech_frame_at(end_ms, profile);
    Ok((first, last - first))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn p() -> ModalityProfile {
        ModalityProfile::default()
    }

    #[test]
    fn visual_examples() {
        assert_eq!(visual_tokens(448, 448, true, &p()), Ok(64));
        assert_eq!(visual_tokens(1, 1, true, &p()), Ok(64));
        // 896/448 = 2 columns, 448/448 = 1 row
        assert_eq!(visual_tokens(896, 448, false, &p()), Ok(128));
        assert_eq!(visual_tokens(449, 448, false, &p()), Ok(128));
        assert!(matches!(
            visual_tokens(449, 448, true, &p()),
            Err(BudgetError::ResolutionExceedsStreamingCap { .. })
        ));
        assert!(matches!(
            visual_tokens(0, 10, false, &p()),
            Err(BudgetError::ZeroDimension { .. })
        ));
    }

    #[test]
    fn audio_examples() {
        assert_eq!(audio_tokens_cumulative(1000, &p()), 10);
        assert_eq!(audio_tokens_cumulative(0, &p()), 0);
        let cum: Vec<u64> = (0..=4)
            .map(|i| audio_tokens_cumulative(i * 250, &p()))
            .collect();
        let per_chunk: Vec<u64> = cum.windows(2).map(|w| w[1] - w[0]).collect();
        assert_eq!(per_chunk, vec![2, 3, 2, 3]);
        assert_eq!(per_chunk.iter().sum::<u64>(), 10);
    }

    #[test]
    fn speech_examples() {
        assert_eq!(speech_token_span(0, 1000, &p()), Ok((0, 25)));
        assert_eq!(speech_token_span(0, 40, &p()), Ok((0, 1)));
        assert_eq!(speech_token_span(40, 80, &p()), Ok((1, 1)));
        assert!(matches!(
            speech_token_span(80, 80, &p()),
            Err(BudgetError::EmptySpan { .. })
        ));
    }

    #[test]
    fn one_second_streaming_chunk_is_74_tokens() {
        let v = visual_tokens(448, 448, true, &p()).unwrap();
        let a = audio_tokens_cumulative(1000, &p()) - audio_tokens_cumulative(0, &p());
        assert_eq!(v + a, 74);
    }

    #[test]
    fn zero_rate_rejected() {
        let prof = ModalityProfile {
            audio_tokens_per_second: 0,
            ..p()
        };
        assert_eq!(
            prof.validate(),
            Err(BudgetError::ZeroRate("audio_tokens_per_second"))
        );
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]

        #[test]
        fn spans_tile_the_frame_axis(cuts in proptest::collection::btree_set(1u64..60_000, 0..40), total in 60_000u64..60_001) {
            let mut bounds = vec![0];
            bounds.extend(cuts.iter().copied());
            bounds.push(total);
            let mut seen = vec![0u8; speech_frame_at(total, &p()) as usize];
            for w in bounds.windows(2) {
                let (first, count) = speech_token_span(w[0], w[1], &p()).unwrap();
                for f in first..first + count {
                    seen[f as usize] += 1;
                }
            }
            prop_assert!(seen.iter().all(|&c| c == 1));
        }

        #[test]
        fn cumulative_audio_is_monotone_and_close(a in 0u64..600_000, b in 0u64..600_000) {
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            prop_assert!(audio_tokens_cumulative(lo, &p()) <= audio_tokens_cumulative(hi, &p()));
            let exact = hi as f64 * 10.0 / 1000.0;
            let got = audio_tokens_cumulative(hi, &p()) as f64;
            prop_assert!(exact - got >= 0.0 && exact - got < 1.0);
        }
    }
}
