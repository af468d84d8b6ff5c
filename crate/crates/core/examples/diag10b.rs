use sca_core::h2::{h2_solve, H2Config};
use sca_core::init::expanded_vertex_init;
use sca_core::linalg::pinv_apply_ones;
use sca_core::metrics::mse;
use sca_core::preprocess::{estimate_sigma2, fit_pca};
use sca_core::prsisal::pr_direct_solve;
use sca_core::rng::stream;
use sca_core::sisal::{sisal_solve, SisalConfig};
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
        let t0 = Instant::now();
        let (_, rep) = sisal_solve(&yr, &p, &mk(&[10, trial, 2]).b_init, &SisalConfig::new(0.1)).unwrap();
        println!("t{trial} sisal: {:.2}s outer {} {:?}", t0.elapsed().as_secs_f64(), rep.iterations, rep.termination);
        let t0 = Instant::now();
        let (_, rep) = h2_solve(&yr, &p, &mk(&[10, trial, 1]).b_init, &H2Config::new(10.0)).unwrap();
        let mt = &rep.mu_trace;
        let mut evals = 0.0;
        for i in 1..mt.len() {
            evals += 1.0 + (mt[i] / (mt[i - 1] / 2.0)).log2().max(0.0).round();
        }
        println!(
            "t{trial} h2: {:.2}s iters {} {:?} avg_evals {:.2}",
            t0.elapsed().as_secs_f64(),
            rep.iterations,
            rep.termination,
            evals / (mt.len() - 1) as f64
        );
        let t0 = Instant::now();
        let (b, rep) = pr_direct_solve(&yr, sigma, &p, &mk(&[10, trial, 4]).b_init, 1.0, false, 1e-6, 200_000).unwrap();
        println!("t{trial} pg: {:.1}s iters {} {:?} mse {:.2e}", t0.elapsed().as_secs_f64(), rep.iterations, rep.termination,
            mse(&a0, &model.lift(&b.clone().try_inverse().unwrap())).unwrap().score);
    }
}
