use sca_core::init::expanded_vertex_init;
use sca_core::linalg::pinv_apply_ones;
use sca_core::metrics::mse;
use sca_core::preprocess::{estimate_sigma2, fit_pca};
use sca_core::prsisal::{pr_direct_solve, pr_solve, PrConfig};
use sca_core::rng::stream;
use sca_core::synth::{generate, SnrSpec, SynthSpec};
use std::time::Instant;

fn main() {
    for trial in 0..3u64 {
        let spec = SynthSpec::new(20, 10, 1000, SnrSpec::Db(30.0), 0);
        let ds = generate(&spec, &mut stream(20240915, &[10, trial])).unwrap();
        let a0 = ds.ground_truth.as_ref().unwrap().a0_matrix();
        let model = fit_pca(&ds.y, 10).unwrap();
        let yr = model.reduce(&ds.y);
        let p = pinv_apply_ones(&yr).unwrap();
        let sigma = estimate_sigma2(&ds.y, 10).unwrap().max(1e-12).sqrt();
        let mk = |path: &[u64]| {
            let mut rng = stream(20240915, path);
            expanded_vertex_init(&yr, 10, 1.2, &mut rng).unwrap()
        };
        let score = |b: &nalgebra::DMatrix<f64>| {
            mse(&a0, &model.lift(&b.clone().try_inverse().unwrap())).unwrap().score
        };
        let t0 = Instant::now();
        let (st, rep) = pr_solve(&yr, sigma, &p, &mk(&[10, trial, 3]).b_init, &PrConfig::default()).unwrap();
        println!("t{trial} bcd: {:.1}s iters {} {:?} mse {:.2e}", t0.elapsed().as_secs_f64(), rep.iterations, rep.termination, score(&st));
        for (name, extrap, rc) in [("epg6", true, 1e-6), ("epg7", true, 1e-7), ("pg7", false, 1e-7)] {
            let t0 = Instant::now();
            let (b, rep) = pr_direct_solve(&yr, sigma, &p, &mk(&[10, trial, 4]).b_init, 1.0, extrap, rc, 400_000).unwrap();
            println!("t{trial} {name}: {:.1}s iters {} {:?} mse {:.2e}", t0.elapsed().as_secs_f64(), rep.iterations, rep.termination, score(&b));
        }
    }
}
