use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use vlc_noma::analytic::analytic_sum_rate_sweep;
use vlc_noma::sim::{run_sweep_sequential, ExperimentConfig};
use vlc_noma::{
    AnalyticModel, FeedbackKind, FeedbackScheme, LedGeometry, MobilityConfig, NomaConfig,
    OmaRateModel, PairingStrategy, PowerAllocation, QuadratureConfig, TargetRates,
};

fn config(trials: u64) -> ExperimentConfig {
    ExperimentConfig {
        geom: LedGeometry::reference(),
        mobility: MobilityConfig::reference(25.0, 20).unwrap(),
        noma: NomaConfig::new(
            PowerAllocation::new(63.0 / 64.0, 1.0 / 64.0).unwrap(),
            TargetRates::new(2.0, 10.0).unwrap(),
            OmaRateModel::TimeShare,
        )
        .unwrap(),
        scheme: FeedbackScheme::individual(FeedbackKind::FullCsi).unwrap(),
        strategy: PairingStrategy::individual(1, 10).unwrap(),
        gamma_db: (0..=36).map(|k| 120.0 + 5.0 * k as f64).collect(),
        trials,
        root_seed: 7,
        noise: None,
    }
}

fn monte_carlo(c: &mut Criterion) {
    let mut g = c.benchmark_group("monte-carlo");
    g.sample_size(10);
    for trials in [20_000u64, 200_000] {
        let cfg = config(trials);
        g.bench_with_input(BenchmarkId::new("sequential", trials), &cfg, |b, cfg| {
            b.iter(|| run_sweep_sequential(cfg).unwrap())
        });
        #[cfg(feature = "parallel")]
        g.bench_with_input(BenchmarkId::new("parallel", trials), &cfg, |b, cfg| {
            b.iter(|| vlc_noma::sim::run_sweep_parallel(cfg).unwrap())
        });
    }
    g.finish();
}

fn analytic(c: &mut Criterion) {
    let cfg = config(1);
    let model = AnalyticModel::new(cfg.geom, cfg.mobility, cfg.scheme, QuadratureConfig::default()).unwrap();
    c.bench_function("analytic-37-points", |b| {
        b.iter(|| analytic_sum_rate_sweep(&model, &cfg.noma, cfg.strategy, &cfg.gamma_db).unwrap())
    });
}

criterion_group!(benches, monte_carlo, analytic);
criterion_main!(benches);
