use criterion::{criterion_group, criterion_main, BatchSize, Criterion};
use std::hint::black_box;
use twopoint_bench::{case1_windows, sim_config};
use twopoint_core::{
    fit_mle, simulate_survey, ArrivalDist, FitOptions, JourneyDist, JourneyFamily, JourneyModel,
};

fn normalization(c: &mut Criterion) {
    let w = case1_windows();
    let exp = JourneyModel::uniform(JourneyDist::exponential(0.5).unwrap(), w).unwrap();
    let weib = JourneyModel::uniform(JourneyDist::weibull(0.75, 2.0).unwrap(), w).unwrap();
    c.bench_function("normalization/exponential", |b| b.iter(|| black_box(&exp).normalization().unwrap()));
    c.bench_function("normalization/weibull", |b| b.iter(|| black_box(&weib).normalization().unwrap()));
}

fn fits(c: &mut Criterion) {
    let arrival = ArrivalDist::uniform(6.0, 9.0).unwrap();
    let exp = simulate_survey(&sim_config(JourneyDist::exponential_with_mean(2.0).unwrap(), 20_000, 1)).unwrap();
    let weib = simulate_survey(&sim_config(JourneyDist::weibull(0.75, 2.0).unwrap(), 20_000, 2)).unwrap();
    let opts = FitOptions::default();
    c.bench_function("fit/exponential_n20000", |b| {
        b.iter_batched(
            || exp.survivors.clone(),
            |d| fit_mle(&d, JourneyFamily::Exponential, &arrival, &opts).unwrap(),
            BatchSize::LargeInput,
        )
    });
    let mut group = c.benchmark_group("fit");
    group.sample_size(10);
    group.bench_function("weibull_n20000", |b| {
        b.iter(|| fit_mle(black_box(&weib.survivors), JourneyFamily::Weibull, &arrival, &opts).unwrap())
    });
    group.finish();
}

criterion_group!(benches, normalization, fits);
criterion_main!(benches);
