use criterion::{black_box, criterion_group, criterion_main, Criterion};

use intentnav::expert::dwa_control;
use intentnav::intention::{dlm, lpe};
use intentnav::neuralnet::{images_to_tensor, lpe_to_tensor, IntentBatch, IntentionNet, NetKind};
use intentnav::planner::Planner;
use intentnav::world::render_camera;
use intentnav_bench::junction;

pub fn criterion_benchmark(c: &mut Criterion) {
    let fx = junction();
    let grid = &fx.map.grid;
    let start = fx.task.start;
    let target = fx.path.poses()[fx.path.len() / 4];

    c.bench_function("plan junction leg", |b| {
        b.iter(|| {
            let mut p = Planner::new(grid, fx.cfg.planner.clone());
            p.plan(black_box(&start), &fx.task.goals[0]).unwrap()
        })
    });

    c.bench_function("dwa step", |b| {
        b.iter(|| {
            dwa_control(
                grid,
                &[],
                black_box(&start),
                (0.3, 0.0),
                &target,
                &fx.cfg.robot,
                &fx.cfg.dwa,
            )
            .unwrap()
        })
    });

    c.bench_function("render camera", |b| {
        b.iter(|| render_camera(grid, &[], black_box(&start), &fx.cfg.camera).unwrap())
    });

    c.bench_function("render lpe", |b| {
        b.iter(|| lpe(&fx.path, black_box(&start), grid, &fx.cfg.intention))
    });

    let obs = render_camera(grid, &[], &start, &fx.cfg.camera).unwrap().to_bytes();
    let x = images_to_tensor::<f32>(&[&obs], fx.cfg.camera.height, fx.cfg.camera.width);
    let d = dlm(&fx.path, &start, &fx.cfg.intention);
    let l = lpe(&fx.path, &start, grid, &fx.cfg.intention);
    let lt = lpe_to_tensor::<f32>(&[&l.indices], l.size);
    let dlm_net = IntentionNet::<f32>::new(NetKind::Dlm, &fx.cfg.net).unwrap();
    let lpe_net = IntentionNet::<f32>::new(NetKind::Lpe, &fx.cfg.net).unwrap();

    c.bench_function("dlm net predict", |b| {
        b.iter(|| dlm_net.predict(black_box(&x), &IntentBatch::Dlm(&[d])).unwrap())
    });
    c.bench_function("lpe net predict", |b| {
        b.iter(|| lpe_net.predict(black_box(&x), &IntentBatch::Lpe(&lt)).unwrap())
    });
}

criterion_group!(benches, criterion_benchmark);
criterion_main!(benches);
