use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use fracorlicz::rearrange::polarize;
use fracorlicz::{Exec, Field, Grid, KernelPair, PairTable, Reach, YoungFunction};

fn setups() -> Vec<(&'static str, Field, PairTable)> {
    let mut out = Vec::new();
    for (name, grid) in [
        ("1d-64", Grid::new(1, 0.05, 32).unwrap()),
        ("2d-12x12", Grid::new(2, 0.1, 6).unwrap()),
    ] {
        let kernel = KernelPair::fractional(0.5, grid.dim()).unwrap();
        let table = PairTable::new(grid, &kernel, Reach::default_for(&grid)).unwrap();
        let u = Field::sample(grid, |x| {
            (-(x.iter().map(|c| c * c).sum::<f64>()) * 4.0).exp() * (1.0 + x[0])
        })
        .unwrap();
        out.push((name, u, table));
    }
    out
}

fn policies(c: &mut Criterion) {
    let young = YoungFunction::power_log(2.0).unwrap();
    for (name, u, table) in setups() {
        let mut group = c.benchmark_group(format!("modular/{name}"));
        for exec in [Exec::Sequential, Exec::Parallel] {
            let t = table.clone().with_exec(exec);
            let label = format!("{exec:?}");
            group.bench_with_input(BenchmarkId::new("phi_mng", &label), &t, |b, t| {
                b.iter(|| t.phi_mng(&u, &young).unwrap())
            });
            group.bench_with_input(BenchmarkId::new("gradient", &label), &t, |b, t| {
                b.iter(|| t.gradient(&u, &young).unwrap())
            });
            let halfspaces = u.grid().compatible_halfspaces();
            group.bench_with_input(
                BenchmarkId::new("polarization_sweep", &label),
                &t,
                |b, t| {
                    b.iter(|| {
                        halfspaces
                            .iter()
                            .map(|hs| t.phi_mng(&polarize(&u, hs).unwrap(), &young).unwrap())
                            .fold(0.0, f64::max)
                    })
                },
            );
        }
        group.finish();
    }
}

criterion_group! {
    name = benches;
    config = Criterion::default().sample_size(10);
    targets = policies
}
criterion_main!(benches);
