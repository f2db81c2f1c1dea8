//! Sequential vs parallel execution of the data-parallel stages.
//!
//! Run with `cargo bench -p lecturelens-core`; build with
//! `--no-default-features` to see the sequential fallback on both arms.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use image::imageops::FilterType;
use image::DynamicImage;
use lecturelens_core::gateway::Gateway;
use lecturelens_core::imaging::average_hash;
use lecturelens_core::layout::{
    detect_boxes_in, plan_batch, DetectConfig, LayoutConfig, PlanInput,
};
use lecturelens_core::par::{self, Execution};
use lecturelens_core::pipeline::{build_bundle, PipelineConfig, PipelineInputs};
use lecturelens_core::synth::{random_slide, write_demo_lecture};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const MODES: [(&str, Execution); 2] = [
    ("sequential", Execution::Sequential),
    ("parallel", Execution::Parallel),
];

fn slides(n: usize) -> Vec<DynamicImage> {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    (0..n)
        .map(|_| {
            let (img, _) = random_slide(&mut rng, 6);
            DynamicImage::ImageRgba8(image::imageops::resize(
                &img,
                1280,
                720,
                FilterType::Nearest,
            ))
        })
        .collect()
}

fn hashing(c: &mut Criterion) {
    let frames = slides(64);
    let mut g = c.benchmark_group("frame_hashing");
    for (name, exec) in MODES {
        g.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| par::map(exec, &frames, average_hash))
        });
    }
    g.finish();
}

fn detection(c: &mut Criterion) {
    let imgs = slides(32);
    let cfg = DetectConfig::default();
    let mut g = c.benchmark_group("box_detection");
    for (name, exec) in MODES {
        g.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| par::map(exec, &imgs, |i| detect_boxes_in(i, &cfg)))
        });
    }
    g.finish();
}

fn layout(c: &mut Criterion) {
    let imgs = slides(32);
    let text =
        "An explanation of moderate length that needs a reasonably large free region. ".repeat(3);
    let inputs: Vec<PlanInput<'_>> = imgs
        .iter()
        .enumerate()
        .map(|(i, image)| PlanInput {
            image,
            anchor: ((i % 5) as f64 / 4.0, (i % 3) as f64 / 2.0),
            text: &text,
        })
        .collect();
    let cfg = LayoutConfig::default();
    let mut g = c.benchmark_group("plan_batch");
    for (name, exec) in MODES {
        g.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| plan_batch(&inputs, &cfg, exec))
        });
    }
    g.finish();
}

fn preprocessing(c: &mut Criterion) {
    let src = tempfile::tempdir().expect("tempdir");
    let lecture = write_demo_lecture(src.path()).expect("demo lecture");
    let gateway = Gateway::mock();
    let mut g = c.benchmark_group("preprocess_demo_lecture");
    g.sample_size(10);
    for (name, exec) in MODES {
        let out = tempfile::tempdir().expect("tempdir");
        let inputs = PipelineInputs {
            video: &lecture.video,
            transcript: &lecture.transcript,
            examples: Some(&lecture.examples_dir),
            out_dir: out.path(),
        };
        let cfg = PipelineConfig {
            execution: exec,
            ..PipelineConfig::default()
        };
        g.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| build_bundle(&inputs, &gateway, &cfg).expect("bundle"))
        });
    }
    g.finish();
}

criterion_group!(benches, hashing, detection, layout, preprocessing);
criterion_main!(benches);
