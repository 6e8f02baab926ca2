use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion};
use keelson::dwa::{plan_step, scan_to_obstacles, DwaConfig};
use keelson::dynamics::{ControlCommand, CurrentSpec, SimState, Simulation};
use keelson::radar::{rasterize, RadarConfig};
use keelson::world::raycast_scan;
use keelson::{Point, Pose, VesselParams};
use keelson_bench::channel;

fn step(c: &mut Criterion) {
    let mut sim = Simulation::new(VesselParams::example_ferry(), SimState::drifting(Pose::default()), 0.02).unwrap();
    sim.current = CurrentSpec::new(0.3, 2.0).unwrap();
    sim.set_command(ControlCommand::single(0.6, 0.55)).unwrap();
    c.bench_function("rk4_step", |b| b.iter(|| black_box(&mut sim).step().unwrap()));
}

fn raycast(c: &mut Criterion) {
    let (layout, world) = channel(1);
    let p = layout.centerline[1];
    let pose = Pose::new(p.x, p.y, 0.3);
    let mut g = c.benchmark_group("raycast_scan");
    for beams in [360, 720, 1440] {
        g.bench_with_input(BenchmarkId::from_parameter(beams), &beams, |b, &n| {
            b.iter(|| raycast_scan(&world, black_box(&pose), n, 100.0))
        });
    }
    g.finish();
}

fn raster(c: &mut Criterion) {
    let (layout, world) = channel(1);
    let p = layout.centerline[1];
    let scan = raycast_scan(&world, &Pose::new(p.x, p.y, 0.0), 720, 100.0);
    let hits: Vec<Point> = scan.points().collect();
    let mut g = c.benchmark_group("rasterize");
    for size in [256, 512] {
        let cfg = RadarConfig { image_size: size, max_range: 100.0, beta: 0.02, ..Default::default() };
        g.bench_with_input(BenchmarkId::from_parameter(size), &cfg, |b, cfg| {
            b.iter(|| rasterize(black_box(&hits), p, cfg).unwrap())
        });
    }
    g.finish();
}

fn plan(c: &mut Criterion) {
    let (layout, world) = channel(1);
    let p = layout.centerline[1];
    let pose = Pose::new(p.x, p.y, layout.heading(1));
    let scan = raycast_scan(&world, &pose, 720, 100.0);
    let obstacles = scan_to_obstacles(&scan, Some(1.0));
    let goal = layout.centerline[2];
    let cfg = DwaConfig::default();
    c.bench_function("plan_step", |b| {
        b.iter(|| plan_step(black_box(&pose), 1.0, 0.0, goal, &obstacles, &cfg, 1.0).unwrap())
    });
}

criterion_group!(benches, step, raycast, raster, plan);
criterion_main!(benches);
