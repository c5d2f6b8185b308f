use depthcast::diff::{finite_diff_check, FdCheckConfig, SynthesisProblem};
use depthcast::geometry::{DepthRange, Intrinsics};
use depthcast::image::ImageBuffer;
use depthcast::loss::LossConfig;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn smooth_image(h: usize, w: usize, c: usize, seed: u64) -> ImageBuffer {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let comps: Vec<(f64, f64, f64)> = (0..2 * c)
        .map(|_| (rng.gen_range(0.02..0.1), rng.gen_range(0.02..0.1), rng.gen_range(0.0..6.28)))
        .collect();
    ImageBuffer::from_fn(h, w, c, |i, j, ch| {
        let mut v = 0.5;
        for (q, &(fu, fv, p0)) in comps.iter().enumerate() {
            if q % c == ch {
                v += 0.2 * (2.0 * std::f64::consts::PI * (fu * j as f64 + fv * i as f64) + p0).sin();
            }
        }
        v
    })
    .unwrap()
}

fn main() {
    let seed = 0u64;
    for automask in [true, false] {
        for scales in [1usize, 2] {
            let k = Intrinsics::new(10.0, 10.0, 4.0, 4.0).unwrap();
            let context = vec![smooth_image(8, 8, 3, seed ^ 0x31), smooth_image(8, 8, 3, seed ^ 0x32)];
            let target = smooth_image(8, 8, 3, seed ^ 0x33);
            let problem = SynthesisProblem::new(
                context, target, k, DepthRange::default(),
                LossConfig { scales, automask_enabled: automask, ..Default::default() },
            ).unwrap();
            let mut point = problem.init_params();
            for (i, v) in point.data_mut().iter_mut().enumerate() {
                *v += ((i * 13 % 7) as f64 - 3.0) * 0.03;
            }
            let (_, analytic) = problem.breakdown_and_grad(&point).unwrap();
            let report = finite_diff_check(|p| problem.loss(p), &analytic, &point, &FdCheckConfig::default()).unwrap();
            println!("automask={automask} scales={scales}: max_rel={:.3e} fails={}", report.max_rel_err, report.failures.len());
            for f in report.failures.iter().take(6) {
                println!("   {}[{}]: analytic {:.8e} vs numeric {:.8e} (rel {:.3e})", f.segment, f.index, f.analytic, f.numeric, f.rel_err);
            }
        }
    }
}
