use rand::Rng as _;

use crr_core::nn::{CategoricalPolicy, MogHead, MogPolicy};
use crr_core::rng::seeded;

fn normal_pdf(x: f64, mu: f64, sigma: f64) -> f64 {
    (-(x - mu) * (x - mu) / (2.0 * sigma * sigma)).exp() / (sigma * (2.0 * std::f64::consts::PI).sqrt())
}

/// Density summed term by term, no log-space tricks.
fn naive_density(logits: &[f64], means: &[f64], log_stds: &[f64], d: usize, a: &[f64]) -> f64 {
    let z: f64 = logits.iter().map(|l| l.exp()).sum();
    (0..logits.len())
        .map(|k| {
            let w = logits[k].exp() / z;
            w * (0..d)
                .map(|j| normal_pdf(a[j], means[k * d + j], log_stds[k * d + j].exp()))
                .product::<f64>()
        })
        .sum()
}

fn random_mixture(k: usize, d: usize, rng: &mut crr_core::rng::Rng) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    let logits = (0..k).map(|_| rng.random_range(-2.0..2.0)).collect();
    let means = (0..k * d).map(|_| rng.random_range(-1.5..1.5)).collect();
    let log_stds = (0..k * d).map(|_| rng.random_range(-1.5..0.5)).collect();
    (logits, means, log_stds)
}

#[test]
fn log_prob_matches_naive_sum() {
    let mut rng = seeded(5);
    for _ in 0..500 {
        let k = rng.random_range(1..6);
        let d = rng.random_range(1..4);
        let (l, m, s) = random_mixture(k, d, &mut rng);
        let pi = MogPolicy::new(d, l.clone(), m.clone(), s.clone()).unwrap();
        let a: Vec<f64> = (0..d).map(|_| rng.random_range(-2.0..2.0)).collect();
        let naive = naive_density(&l, &m, &s, d, &a).ln();
        let lp = pi.log_prob(&a).unwrap();
        assert!((lp - naive).abs() <= 1e-10 * naive.abs().max(1.0), "{lp} vs {naive}");
    }
}

#[test]
fn density_integrates_to_one() {
    let mut rng = seeded(6);
    for _ in 0..20 {
        let (l, m, s) = random_mixture(4, 1, &mut rng);
        let pi = MogPolicy::new(1, l, m, s).unwrap();
        let (lo, hi, n) = (-20.0, 20.0, 200_000);
        let h = (hi - lo) / n as f64;
        let f = |x: f64| pi.log_prob(&[x]).unwrap().exp();
        let mut total = 0.5 * (f(lo) + f(hi));
        for i in 1..n {
            total += f(lo + i as f64 * h);
        }
        assert!((total * h - 1.0).abs() < 1e-6, "{}", total * h);
    }
}

#[test]
fn sample_mean_matches_mixture_mean() {
    let mut rng = seeded(7);
    let (l, m, s) = random_mixture(3, 2, &mut rng);
    let pi = MogPolicy::new(2, l.clone(), m.clone(), s.clone()).unwrap();
    let z: f64 = l.iter().map(|x| x.exp()).sum();
    let w: Vec<f64> = l.iter().map(|x| x.exp() / z).collect();
    let n = 100_000;
    for j in 0..2 {
        let mean: f64 = (0..3).map(|k| w[k] * m[k * 2 + j]).sum();
        let second: f64 = (0..3).map(|k| w[k] * (m[k * 2 + j].powi(2) + (2.0 * s[k * 2 + j]).exp())).sum();
        let se = ((second - mean * mean) / n as f64).sqrt();
        let mut srng = seeded(100 + j as u64);
        let draws: Vec<Vec<f64>> = (0..n).map(|_| pi.sample(&mut srng)).collect();
        let est = draws.iter().map(|a| a[j]).sum::<f64>() / n as f64;
        assert!((est - mean).abs() < 3.0 * se, "dim {j}: {est} vs {mean} (se {se})");
        assert!(draws.iter().take(1000).all(|a| pi.log_prob(a).unwrap().is_finite()));
    }
}

#[test]
fn decoded_log_stds_are_clamped() {
    let head = MogHead::new(2, 1).unwrap();
    let pi = head.decode(&[0.0, 0.0, 0.0, 1.0, -50.0, 50.0]).unwrap();
    assert!((pi.std(0)[0] - (-10.0f64).exp()).abs() < 1e-18);
    assert!((pi.std(1)[0] - 4.0f64.exp()).abs() < 1e-9);
}

#[test]
fn categorical_sampling_frequencies() {
    let logits = vec![0.2, -1.0, 1.1, 0.0];
    let pi = CategoricalPolicy::new(logits);
    let p = pi.probs();
    let n = 200_000;
    let mut counts = [0usize; 4];
    let mut rng = seeded(8);
    for _ in 0..n {
        counts[pi.sample(&mut rng)] += 1;
    }
    for a in 0..4 {
        let se = (p[a] * (1.0 - p[a]) / n as f64).sqrt();
        assert!((counts[a] as f64 / n as f64 - p[a]).abs() < 4.0 * se);
        assert!((pi.log_prob(a) - p[a].ln()).abs() < 1e-12);
    }
    assert_eq!(pi.argmax(), 2);
}
