use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use netschwarz::fibergen::{generate_fiber_network, generate_grid_network, random_conductivities, FiberGenConfig, FiberKind};
use netschwarz::mesh::BoxMesh;
use netschwarz::models::{assemble_heat, HeatParams};
use netschwarz::network::SpatialNetwork;
use netschwarz::solver::{pcg_solve, PcgOptions, SchwarzPreconditioner};
use std::hint::black_box;

fn networks() -> Vec<(&'static str, SpatialNetwork)> {
    let fibers = FiberGenConfig::preset(FiberKind::Uniform, 1).with_density(150.0);
    vec![("grid65", generate_grid_network(65).unwrap()), ("fibers", generate_fiber_network(&fibers).unwrap())]
}

fn heat_solve(c: &mut Criterion) {
    let mut group = c.benchmark_group("heat");
    group.sample_size(10);
    for (name, net) in networks() {
        let gamma = random_conductivities(&net, 0.1, 1.0, 1);
        let op = assemble_heat(&net, &HeatParams::new(&net, gamma).unwrap()).unwrap();
        let k = op.matrix();
        let b = vec![1.0; k.nrows()];
        for h_inv in [4usize, 8] {
            let mesh = BoxMesh::new(&net, 1.0 / h_inv as f64).unwrap();
            let id = format!("{name}/H=1/{h_inv}");
            group.bench_function(BenchmarkId::new("setup", &id), |bench| {
                bench.iter(|| SchwarzPreconditioner::build(&net, &mesh, &op).unwrap())
            });
            let pre = SchwarzPreconditioner::build(&net, &mesh, &op).unwrap();
            let opts = PcgOptions { tol: 1e-8, max_iterations: 1000 };
            group.bench_function(BenchmarkId::new("pcg", &id), |bench| {
                bench.iter(|| pcg_solve(k, black_box(&b), &pre, &opts, None).unwrap())
            });
        }
    }
    group.finish();
}

criterion_group!(benches, heat_solve);
criterion_main!(benches);
