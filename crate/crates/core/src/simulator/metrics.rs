use std::fmt::Write as _;

use crate::serializer::Role;

/// Synthetic compute cost per token, in milliseconds, by role.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CostModel {
    /// Prefill cost of one visual or audio token.
    pub perceptual_ms: f64,
    /// One backbone decode step (text, listen, speak, boundary).
    pub decode_ms: f64,
    /// One speech-decoder step.
    pub speech_ms: f64,
}

impl Default for CostModel {
    fn default() -> Self {
        Self {
            perceptual_ms: 0.5,
            decode_ms: 25.0,
            speech_ms: 4.0,
        }
    }
}

impl CostModel {
    pub fn cost_ms(&self, role: Role) -> f64 {
        match role {
            Role::Visual | Role::Audio => self.perceptual_ms,
            Role::SpeechOut => self.speech_ms,
            Role::TextOut | Role::Listen | Role::Speak | Role::Boundary => self.decode_ms,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TriggerLatency {
    pub id: String,
    pub at_ms: u64,
    /// `None` when no reply was produced.
    pub latency_ms: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct DuplexMetrics {
    pub response_latency: Vec<TriggerLatency>,
    /// Per text token: playback start minus the start of its emitting chunk.
    pub staleness_ms: Vec<u64>,
    /// Per chunk: `k·t` minus the committed playback end.
    pub lag_ms: Vec<i64>,
    pub listen_ratio: f64,
    pub rtf: f64,
    pub chunks: u64,
    pub text_tokens: u64,
    pub speech_tokens: u64,
}

fn mean_u(xs: impl Iterator<Item = u64>) -> Option<f64> {
    let (sum, n) = xs.fold((0u128, 0u64), |(s, n), x| (s + u128::from(x), n + 1));
    (n > 0).then(|| sum as f64 / n as f64)
}

impl DuplexMetrics {
    pub fn mean_staleness_ms(&self) -> Option<f64> {
        mean_u(self.staleness_ms.iter().copied())
    }

    pub fn max_staleness_ms(&self) -> Option<u64> {
        self.staleness_ms.iter().copied().max()
    }

    pub fn mean_lag_ms(&self) -> Option<f64> {
        if self.lag_ms.is_empty() {
            return None;
        }
        Some(self.lag_ms.iter().sum::<i64>() as f64 / self.lag_ms.len() as f64)
    }

    pub fn max_lag_ms(&self) -> Option<i64> {
        self.lag_ms.iter().copied().max()
    }

    fn answered(&self) -> impl Iterator<Item = u64> + '_ {
        self.response_latency.iter().filter_map(|l| l.latency_ms)
    }

    pub fn mean_latency_ms(&self) -> Option<f64> {
        mean_u(self.answered())
    }

    pub fn max_latency_ms(&self) -> Option<u64> {
        self.answered().max()
    }
}

/// One row of a metrics report.
#[derive(Debug, Clone, PartialEq)]
pub struct ReportRow {
    pub label: String,
    pub metrics: DuplexMetrics,
}

const COLUMNS: [&str; 11] = [
    "strategy",
    "chunks",
    "listen_ratio",
    "mean_latency_ms",
    "max_latency_ms",
    "mean_staleness_ms",
    "max_staleness_ms",
    "mean_lag_ms",
    "max_lag_ms",
    "text_tokens",
    "rtf",
];

fn opt<T: ToString>(v: Option<T>) -> String {
    v.map_or_else(|| "-".to_string(), |v| v.to_string())
}

fn fixed(v: Option<f64>) -> String {
    v.map_or_else(|| "-".to_string(), |v| format!("{v:.1}"))
}

fn cells(row: &ReportRow) -> Vec<String> {
    let m = &row.metrics;
    vec![
        row.label.clone(),
        m.chunks.to_string(),
        format!("{:.3}", m.listen_ratio),
        fixed(m.mean_latency_ms()),
        opt(m.max_latency_ms()),
        fixed(m.mean_staleness_ms()),
        opt(m.max_staleness_ms()),
        fixed(m.mean_lag_ms()),
        opt(m.max_lag_ms()),
        m.text_tokens.to_string(),
        format!("{:.4}", m.rtf),
    ]
}

pub fn to_csv(rows: &[ReportRow]) -> String {
    let mut out = COLUMNS.join(",");
    out.push('\n');
    for row in rows {
        out.push_str(&cells(row).join(","));
        out.push('\n');
    }
    out
}

pub fn to_table(rows: &[ReportRow]) -> String {
    let body: Vec<Vec<String>> = rows.iter().map(cells).collect();
    let widths: Vec<usize> = (0..COLUMNS.len())
        .map(|c| {
            body.iter()
                .map(|r| r[c].len())
                .chain(std::iter::once(COLUMNS[c].len()))
                .max()
                .unwrap_or(0)
        })
        .collect();
    let mut out = String::new();
    let mut line = |cells: &[&str]| {
        let parts: Vec<String> = cells
            .iter()
            .zip(&widths)
            .enumerate()
            .map(|(i, (c, w))| {
                if i == 0 {
                    format!("{c:<w$}")
                } else {
                    format!("{c:>w$}")
                }
            })
            .collect();
        let _ = writeln!(out, "{}", parts.join("  ").trim_end());
    };
    line(&COLUMNS);
    for r in &body {
        let refs: Vec<&str> = r.iter().map(String::as_str).collect();
        line(&refs);
    }
    out
}
