//! The production chain against a direct transcription of the update that
//! keeps the whole history in a `Vec`.

use srld_core::dynamics::{run_chain, Method, SamplerConfig};
use srld_core::rng::NoiseStream;
use srld_core::targets::{make_target, TargetModel, TargetSpec};

fn naive_chain(t: &TargetModel, cfg: &SamplerConfig, theta0: &[f64]) -> Vec<Vec<f64>> {
    let d = t.dim();
    let (m, c, eta) = (cfg.window, cfg.thinning, cfg.step_size);
    let mut noise = NoiseStream::new(cfg.seed, d);
    let mut hist = vec![theta0.to_vec()];
    for k in 0..cfg.total_steps {
        let q = hist[k].clone();
        let gq = t.grad_potential(&q).unwrap();
        let e = noise.next_noise().to_vec();
        let mut drift: Vec<f64> = gq.iter().map(|g| -g).collect();
        if k >= m * c {
            let past: Vec<&Vec<f64>> = (1..=m).map(|j| &hist[k - j * c]).collect();
            let mut dists = vec![];
            for a in 0..m {
                for b in a + 1..m {
                    let s: f64 = (0..d).map(|i| (past[a][i] - past[b][i]).powi(2)).sum();
                    dists.push(s.sqrt());
                }
            }
            dists.sort_by(f64::total_cmp);
            let n = dists.len();
            let med = if n % 2 == 1 { dists[n / 2] } else { 0.5 * (dists[n / 2 - 1] + dists[n / 2]) };
            let sigma = med * med / (m as f64).ln();
            for p in &past {
                let r2: f64 = (0..d).map(|i| (q[i] - p[i]).powi(2)).sum();
                let kern = (-r2 / sigma).exp();
                let gp = t.grad_potential(p).unwrap();
                for i in 0..d {
                    drift[i] += cfg.alpha / m as f64 * kern * (2.0 / sigma * (q[i] - p[i]) - gp[i]);
                }
            }
        }
        let next = (0..d).map(|i| q[i] + eta * drift[i] + (2.0 * eta).sqrt() * e[i]).collect();
        hist.push(next);
    }
    hist
}

#[test]
fn srld_chain_matches_naive_history_loop() {
    for spec in [TargetSpec::Banana2d, TargetSpec::standard_gaussian(3)] {
        let t = make_target(&spec).unwrap();
        let cfg = SamplerConfig {
            step_size: 5e-3,
            window: 4,
            thinning: 7,
            total_steps: 600,
            seed: 13,
            ..Default::default()
        };
        let theta0 = vec![0.3; t.dim()];
        let fast = run_chain(&Method::Srld, &t, &cfg, &theta0).unwrap();
        let slow = naive_chain(&t, &cfg, &theta0);
        assert_eq!(fast.len(), slow.len());
        for (k, s) in slow.iter().enumerate() {
            for (a, b) in fast.state(k).iter().zip(s) {
                assert!((a - b).abs() < 1e-10 * (1.0 + b.abs()), "k = {k}: {a} vs {b}");
            }
        }
    }
}
