//! Sequential versus work-stealing campaign execution on the same spec.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion, Throughput};
use swipt_beam::campaign::{run_campaign, run_campaign_sequential, Axis, CampaignScheme, CampaignSpec};
use swipt_beam::SystemConfig;

fn spec(k: usize) -> CampaignSpec {
    CampaignSpec {
        template: SystemConfig::symmetric(k, 10.0, -30.0, 5.0),
        axis: Axis::LambdaDbm,
        values: vec![-40.0, -20.0],
        instances_per_point: 8,
        schemes: vec![CampaignScheme::Zf, CampaignScheme::Mrt, CampaignScheme::MrtZf, CampaignScheme::Optimal],
        base_seed: 42,
    }
}

fn campaigns(c: &mut Criterion) {
    let mut group = c.benchmark_group("campaign");
    group.sample_size(10);
    for k in [2, 4] {
        let s = spec(k);
        group.throughput(Throughput::Elements((s.values.len() * s.instances_per_point) as u64));
        group.bench_with_input(BenchmarkId::new("sequential", k), &s, |b, s| {
            b.iter(|| run_campaign_sequential(s).unwrap())
        });
        group.bench_with_input(BenchmarkId::new("parallel", k), &s, |b, s| b.iter(|| run_campaign(s).unwrap()));
    }
    group.finish();
}

criterion_group!(benches, campaigns);
criterion_main!(benches);
