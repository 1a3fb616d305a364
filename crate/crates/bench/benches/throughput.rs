use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use omniflow_core::serializer::{self, ChunkOutputs, Content, SerializerConfig};
use omniflow_core::simulator::{self, ReactiveEcho, RunOptions, Scenario, Trigger};
use omniflow_core::timeline::{AudioEvent, VisualEvent};
use omniflow_core::{
    length_reward, run_schedule, CharLinear, ChunkIndex, InputTrace, ModalityProfile, RewardGroup,
    Rollout, Strategy, TimedToken, Timestamp,
};

fn trace(seconds: u64) -> InputTrace {
    InputTrace {
        visual_events: (0..seconds)
            .map(|s| VisualEvent {
                at: Timestamp::from_ms(s * 1000),
                width_px: 448,
                height_px: 448,
            })
            .collect(),
        audio_events: vec![AudioEvent {
            start: Timestamp::ZERO,
            end: Timestamp::from_ms(seconds * 1000),
        }],
    }
}

fn bench_serialize(c: &mut Criterion) {
    let trace = trace(60);
    let mut group = c.benchmark_group("serialize_60s");
    for preset in ["t1000-explicit-ls", "t100-explicit-ls"] {
        let cfg = SerializerConfig::from_preset(preset).unwrap();
        let chunks = cfg.chunk.chunks_for(trace.horizon_ms());
        let outputs: ChunkOutputs = (1..=chunks)
            .step_by(3)
            .map(|k| {
                let content = vec![Content::Text(format!("w{k}")), Content::Speech(format!("s{k}"))];
                (ChunkIndex::new(k).unwrap(), content)
            })
            .collect();
        group.bench_with_input(BenchmarkId::from_parameter(preset), &cfg, |b, cfg| {
            b.iter(|| serializer::serialize(black_box(&trace), &outputs, cfg).unwrap())
        });
    }
    group.finish();
}

fn bench_schedule(c: &mut Criterion) {
    let tokens: Vec<TimedToken> = (0..500)
        .map(|i| TimedToken::new(format!("w{i}"), 120 + (i * 37) % 400).unwrap())
        .collect();
    let cfg = SerializerConfig::default().chunk;
    let profile = ModalityProfile::default();
    let mut group = c.benchmark_group("run_schedule_500");
    for strategy in [
        Strategy::Tail,
        Strategy::FixedRatio { text: 4, speech: 25 },
        Strategy::TextLead {
            max_lead_tokens: None,
        },
    ] {
        group.bench_function(strategy.label(), |b| {
            b.iter(|| run_schedule(black_box(tokens.clone()), &cfg, &strategy, &profile).unwrap())
        });
    }
    group.finish();
}

fn bench_simulate(c: &mut Criterion) {
    let sc = Scenario {
        trace: trace(20),
        triggers: (0..5)
            .map(|i| Trigger {
                at: Timestamp::from_ms(500 + i * 4000),
                id: format!("q{i}"),
            })
            .collect(),
        seed: 1,
    };
    let reply: Vec<String> = (0..12).map(|i| format!("word{i}")).collect();
    let responder = ReactiveEcho::new(1, reply);
    let cfg = SerializerConfig::from_preset("t200-explicit-ls").unwrap();
    let opts = RunOptions::default();
    c.bench_function("compare_strategies_20s", |b| {
        b.iter(|| {
            simulator::compare_strategies(black_box(&sc), &responder, &cfg, &CharLinear::default(), &opts)
                .unwrap()
        })
    });
}

fn bench_reward(c: &mut Criterion) {
    let group = RewardGroup {
        responses: (0..16)
            .map(|i| Rollout {
                correct: i % 3 != 0,
                len: 100 + i * 53,
            })
            .collect(),
        tau: 400.0,
    };
    c.bench_function("length_reward_16", |b| b.iter(|| length_reward(black_box(&group)).unwrap()));
}

criterion_group!(benches, bench_serialize, bench_schedule, bench_simulate, bench_reward);
criterion_main!(benches);
