use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use sqlab_core::builder::{build_sources, GameSources};
use sqlab_core::exec::Execution;
use sqlab_core::formula::FormulaKind;
use sqlab_core::lab::{plan_functions, run_simulation, PopulationSpec, VariantPlan};
use sqlab_core::theorem::{run_theorem_suite, SuiteConfig};

const COMPANY: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/fixtures/company");
const MODES: [(&str, Execution); 2] = [
    ("sequential", Execution::Sequential),
    ("parallel", Execution::Parallel),
];

fn simulation(c: &mut Criterion) {
    let mut group = c.benchmark_group("simulation");
    group.sample_size(10);
    for plan in [VariantPlan::Reduced, VariantPlan::Full] {
        let spec = PopulationSpec::for_plan(plan, 2024);
        let functions = plan_functions(plan);
        for (name, mode) in MODES {
            group.bench_with_input(
                BenchmarkId::new(format!("{plan:?}"), name),
                &mode,
                |b, &mode| b.iter(|| run_simulation(&spec, &functions, mode).unwrap()),
            );
        }
    }
    group.finish();
}

fn theorem(c: &mut Criterion) {
    let sources = GameSources::read(COMPANY).unwrap();
    let dump = build_sources(&sources).unwrap().dump().unwrap();
    let mut group = c.benchmark_group("theorem");
    group.sample_size(10);
    for (name, mode) in MODES {
        let mut config = SuiteConfig::new(FormulaKind::Agg, 200, 7);
        config.execution = mode;
        group.bench_with_input(
            BenchmarkId::new("agg_200_pairs", name),
            &config,
            |b, config| b.iter(|| run_theorem_suite(&dump, config).unwrap()),
        );
    }
    group.finish();
}

criterion_group!(benches, simulation, theorem);
criterion_main!(benches);
