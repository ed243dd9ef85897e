use proptest::prelude::*;

use crr_core::distributional::{divergence, mean_value, mixture_target, project_target, softmax, AtomGrid};

/// Projection written as a sum of triangular kernels around every atom.
fn kernel_projection(grid: &AtomGrid, reward: f64, discount: f64, next: &[f64]) -> Vec<f64> {
    let dz = grid.spacing();
    (0..grid.n_atoms())
        .map(|j| {
            next.iter()
                .enumerate()
                .map(|(i, p)| {
                    let tz = (reward + discount * grid.atom(i)).clamp(grid.v_min(), grid.v_max());
                    p * (1.0 - (tz - grid.atom(j)).abs() / dz).max(0.0)
                })
                .sum()
        })
        .collect()
}

fn distribution(n: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-5.0f64..5.0, n).prop_map(|l| softmax(&l))
}

fn grid_and_dist() -> impl Strategy<Value = (AtomGrid, Vec<f64>)> {
    (2usize..60, -50.0f64..50.0, 0.1f64..100.0).prop_flat_map(|(n, lo, width)| {
        let grid = AtomGrid::new(n, lo, lo + width).unwrap();
        (Just(grid), distribution(n))
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(2000))]

    #[test]
    fn projection_conserves_mass((grid, next) in grid_and_dist(), r in -200.0f64..200.0, g in 0.0f64..1.0) {
        let out = project_target(&grid, r, g, &next).unwrap();
        let total: f64 = out.probs().iter().sum();
        prop_assert!((total - 1.0).abs() < 1e-10);
        prop_assert!(out.probs().iter().all(|p| *p >= 0.0));
    }

    #[test]
    fn projection_matches_kernel_form((grid, next) in grid_and_dist(), r in -200.0f64..200.0, g in 0.0f64..1.0) {
        let out = project_target(&grid, r, g, &next).unwrap();
        for (a, b) in out.probs().iter().zip(kernel_projection(&grid, r, g, &next)) {
            prop_assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn in_range_projection_preserves_the_mean(next in distribution(21), g in 0.0f64..1.0, u in 0.0f64..1.0) {
        let grid = AtomGrid::default();
        // Largest reward that keeps every shifted atom inside the grid.
        let r = u * (100.0 - g * 100.0);
        let out = project_target(&grid, r, g, &next).unwrap();
        let expected = r + g * mean_value(&grid, &next);
        prop_assert!((mean_value(&grid, out.probs()) - expected).abs() < 1e-8);
    }

    #[test]
    fn divergence_is_minimised_at_the_target(target in distribution(21), logits in prop::collection::vec(-5.0f64..5.0, 21)) {
        let at_target: Vec<f64> = target.iter().map(|p| p.ln()).collect();
        prop_assert!(divergence(&logits, &target).0 >= divergence(&at_target, &target).0 - 1e-12);
        let (_, grad) = divergence(&logits, &target);
        prop_assert!(grad.iter().sum::<f64>().abs() < 1e-12);
    }

    #[test]
    fn mixture_is_a_distribution(a in distribution(21), b in distribution(21), c in distribution(21)) {
        let m = mixture_target(&[a, b, c]).unwrap();
        prop_assert!((m.probs().iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }
}

#[test]
fn ten_thousand_mass_and_mean_cases() {
    use rand::Rng as _;
    let grid = AtomGrid::default();
    let mut rng = crr_core::rng::seeded(3);
    for _ in 0..10_000 {
        let logits: Vec<f64> = (0..21).map(|_| rng.random_range(-4.0..4.0)).collect();
        let next = softmax(&logits);
        let g = rng.random_range(0.0..1.0);
        let r = rng.random_range(0.0..1.0) * (100.0 - 100.0 * g);
        let out = project_target(&grid, r, g, &next).unwrap();
        assert!((out.probs().iter().sum::<f64>() - 1.0).abs() < 1e-10);
        assert!((mean_value(&grid, out.probs()) - (r + g * mean_value(&grid, &next))).abs() < 1e-8);
    }
}
