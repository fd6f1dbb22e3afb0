use criterion::{criterion_group, criterion_main, Criterion};
use std::hint::black_box;

use simirs_bench::{desk_scenario, paper_scale_config};
use simirs_core::channel::ChannelSet;
use simirs_core::engine::run_alternating;
use simirs_core::irs_opt::optimize_phases;
use simirs_core::numerics::Rng;
use simirs_core::phy::{candidate_rate_matrix, zf_precoder};

fn bench_channel_synthesis(c: &mut Criterion) {
    let desk = desk_scenario(1).cfg;
    let paper = paper_scale_config();
    let mut group = c.benchmark_group("channel_synthesis");
    group.bench_function("desk", |b| {
        let mut seed = 0u64;
        b.iter(|| {
            seed += 1;
            black_box(ChannelSet::synthesize(&desk, seed).unwrap())
        })
    });
    group.bench_function("paper_scale", |b| {
        let mut seed = 0u64;
        b.iter(|| {
            seed += 1;
            black_box(ChannelSet::synthesize(&paper, seed).unwrap())
        })
    });
    group.finish();
}

fn bench_phase_optimization(c: &mut Criterion) {
    let s = desk_scenario(2);
    c.bench_function("optimize_phases_desk", |b| {
        b.iter(|| {
            black_box(
                optimize_phases(
                    &s.channels,
                    &s.precoders.per_bs[s.cfg.irs_assisted_bs],
                    &s.assoc,
                    &s.cfg,
                    &s.phi,
                )
                .unwrap(),
            )
        })
    });
}

fn bench_auction(c: &mut Criterion) {
    let s = desk_scenario(3);
    let rates = candidate_rate_matrix(&s.channels, &s.phi, &s.cfg);
    c.bench_function("auction_associate", |b| {
        b.iter(|| black_box(simirs_core::assoc::auction_associate(&rates, s.cfg.epsilon).unwrap()))
    });
}

fn bench_zero_forcing(c: &mut Criterion) {
    let mut rng = Rng::new(4);
    let data: Vec<_> = (0..6 * 16)
        .map(|_| rng.complex_gaussian(1.0).unwrap())
        .collect();
    let h = simirs_core::CMat::from_vec(6, 16, data);
    c.bench_function("zf_precoder_6x16", |b| {
        b.iter(|| black_box(zf_precoder(&h, 1.0).unwrap()))
    });
}

fn bench_full_run(c: &mut Criterion) {
    let cfg = desk_scenario(5).cfg;
    let mut group = c.benchmark_group("alternating");
    group.sample_size(20);
    group.bench_function("run_alternating_desk", |b| {
        let mut seed = 0u64;
        b.iter(|| {
            seed += 1;
            black_box(run_alternating(&cfg, seed).unwrap())
        })
    });
    group.finish();
}

criterion_group!(
    benches,
    bench_channel_synthesis,
    bench_phase_optimization,
    bench_auction,
    bench_zero_forcing,
    bench_full_run
);
criterion_main!(benches);
