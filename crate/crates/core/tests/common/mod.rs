#![allow(dead_code)]

use rand::Rng as _;

use crr_core::rng::Rng;

/// Relative error with a floor so that near-zero gradients compare on an
/// absolute scale.
pub fn rel_err(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(1e-6)
}

/// Central finite difference of `f` along coordinate `i`.
pub fn central_diff(f: &dyn Fn(&[f64]) -> f64, x: &[f64], i: usize, h: f64) -> f64 {
    let mut xp = x.to_vec();
    let mut xm = x.to_vec();
    xp[i] += h;
    xm[i] -= h;
    (f(&xp) - f(&xm)) / (2.0 * h)
}

/// Worst relative error over `coords` coordinates drawn (with replacement
/// when `coords` exceeds the dimension) from `range`.
pub fn worst_coordinate_error(
    f: &dyn Fn(&[f64]) -> f64,
    x: &[f64],
    grad: &[f64],
    range: std::ops::Range<usize>,
    coords: usize,
    rng: &mut Rng,
) -> f64 {
    let mut worst: f64 = 0.0;
    let idx: Vec<usize> = if range.len() <= coords {
        let mut v: Vec<usize> = range.clone().collect();
        while v.len() < coords {
            v.push(rng.random_range(range.clone()));
        }
        v
    } else {
        (0..coords).map(|_| rng.random_range(range.clone())).collect()
    };
    for i in idx {
        let n = central_diff(f, x, i, 1e-5);
        worst = worst.max(rel_err(grad[i], n));
    }
    worst
}

use crr_core::crr::{actor_loss, critic_loss, weighted_nll, Actor, AdvantageSpec, BatchItem, Critic, FilterSpec};
use crr_core::data::Transition;
use crr_core::distributional::{divergence, softmax, AtomGrid};
use crr_core::nn::{ActionSpace, MogHead, PolicyHead, ResidualMlp, ResidualMlpSpec};
use crr_core::rng::{seeded, Streams};

/// One finite-difference comparison: what was checked, how many
/// coordinates, and the worst relative error.
#[derive(Debug, Clone)]
pub struct GradCheck {
    pub name: String,
    pub coords: usize,
    pub worst: f64,
}

const MIN_COORDS: usize = 200;

fn random_vec(n: usize, scale: f64, rng: &mut Rng) -> Vec<f64> {
    (0..n).map(|_| rng.random_range(-scale..scale)).collect()
}

/// Checks distinct coordinates of `range` at freshly drawn points until at
/// least 200 (point, coordinate) pairs have been compared.
fn check_points(
    name: &str,
    rng: &mut Rng,
    mut point: impl FnMut(&mut Rng) -> (Box<dyn Fn(&[f64]) -> f64>, Vec<f64>, Vec<f64>, std::ops::Range<usize>),
) -> GradCheck {
    let mut coords = 0;
    let mut worst: f64 = 0.0;
    while coords < MIN_COORDS {
        let (f, x, grad, range) = point(rng);
        let take = range.len().min(MIN_COORDS - coords).max(1);
        let mut idx: Vec<usize> = range.collect();
        for i in 0..take {
            let j = rng.random_range(i..idx.len());
            idx.swap(i, j);
        }
        for &i in &idx[..take] {
            worst = worst.max(rel_err(grad[i], central_diff(&*f, &x, i, 1e-5)));
        }
        coords += take;
    }
    GradCheck {
        name: name.into(),
        coords,
        worst,
    }
}

fn mlp_point(
    mlp: &ResidualMlp,
    rng: &mut Rng,
    group: &[&str],
) -> (Box<dyn Fn(&[f64]) -> f64>, Vec<f64>, Vec<f64>, std::ops::Range<usize>) {
    let mut params = mlp.init(rng);
    // Perturb layer-norm parameters and biases away from their initial
    // values so every term of the backward pass is exercised.
    for x in params.iter_mut() {
        *x += rng.random_range(-0.1..0.1);
    }
    let input = random_vec(mlp.spec().input_dim, 1.0, rng);
    let g = random_vec(mlp.spec().output_dim, 1.0, rng);
    let (_, tape) = mlp.forward_tape(&params, &input).unwrap();
    let grad = mlp.backward(&params, &tape, &g).unwrap();
    let entries: Vec<_> = group.iter().map(|n| mlp.layout().get(n).unwrap().range()).collect();
    let range = entries.first().unwrap().start..entries.last().unwrap().end;
    let m = mlp.clone();
    let f = move |p: &[f64]| -> f64 {
        let out = m.forward(p, &input).unwrap();
        out.iter().zip(&g).map(|(a, b)| a * b).sum()
    };
    (Box::new(f), params, grad, range)
}

pub fn layer_checks(seed: u64) -> Vec<GradCheck> {
    let mut rng = seeded(seed);
    let mlp = ResidualMlp::new(ResidualMlpSpec::new(5, 12, 2, 4)).unwrap();
    let mut out = Vec::new();
    for (name, group) in [
        ("input linear", vec!["input/w", "input/b"]),
        ("block linear", vec!["block0/w", "block0/b"]),
        ("layer norm", vec!["block1/ln_gain", "block1/ln_bias"]),
        ("output linear", vec!["output/w", "output/b"]),
    ] {
        out.push(check_points(name, &mut rng, |r| mlp_point(&mlp, r, &group)));
    }
    out.push(check_points("residual network (all parameters)", &mut rng, |r| {
        let (f, x, g, _) = mlp_point(&mlp, r, &["input/w"]);
        let n = x.len();
        (f, x, g, 0..n)
    }));
    out.push(check_points("residual network (input)", &mut rng, |r| {
        let params = mlp.init(r);
        let input = random_vec(5, 1.0, r);
        let g = random_vec(4, 1.0, r);
        let (_, tape) = mlp.forward_tape(&params, &input).unwrap();
        let mut pg = vec![0.0; mlp.n_params()];
        let dx = mlp.backward_into(&params, &tape, &g, &mut pg).unwrap();
        let m = mlp.clone();
        let f = move |x: &[f64]| -> f64 { m.forward(&params, x).unwrap().iter().zip(&g).map(|(a, b)| a * b).sum() };
        (Box::new(f) as Box<dyn Fn(&[f64]) -> f64>, input, dx, 0..5)
    }));
    out.push(check_points("mixture-of-Gaussians head", &mut rng, |r| {
        let head = MogHead::new(5, 2).unwrap();
        let mut raw = random_vec(head.output_dim(), 1.0, r);
        for x in &mut raw[15..] {
            *x = r.random_range(-2.0..1.0);
        }
        let action = random_vec(2, 1.5, r);
        let (_, grad) = head.log_prob_grad(&raw, &action).unwrap();
        let f = move |o: &[f64]| head.decode(o).unwrap().log_prob(&action).unwrap();
        let n = raw.len();
        (Box::new(f) as Box<dyn Fn(&[f64]) -> f64>, raw, grad, 0..n)
    }));
    out.push(check_points("categorical policy head", &mut rng, |r| {
        let head = PolicyHead::Categorical(6);
        let logits = random_vec(6, 2.0, r);
        let a = vec![r.random_range(0..6) as f64];
        let (_, grad) = head.log_prob_grad(&logits, &a).unwrap();
        let f = move |o: &[f64]| head.log_prob(o, &a).unwrap();
        (Box::new(f) as Box<dyn Fn(&[f64]) -> f64>, logits, grad, 0..6)
    }));
    out.push(check_points("categorical value head", &mut rng, |r| {
        let logits = random_vec(21, 2.0, r);
        let target = softmax(&random_vec(21, 3.0, r));
        let (_, grad) = divergence(&logits, &target);
        let f = move |o: &[f64]| divergence(o, &target).0;
        (Box::new(f) as Box<dyn Fn(&[f64]) -> f64>, logits, grad, 0..21)
    }));
    out
}

pub fn random_transitions(n: usize, obs_dim: usize, space: ActionSpace, rng: &mut Rng) -> Vec<Transition> {
    (0..n)
        .map(|i| {
            let action = match space {
                ActionSpace::Discrete(k) => vec![rng.random_range(0..k) as f64],
                ActionSpace::Continuous(d) => random_vec(d, 1.0, rng),
            };
            Transition {
                observation: random_vec(obs_dim, 1.0, rng),
                action,
                reward: rng.random_range(0.0..2.0),
                next_observation: random_vec(obs_dim, 1.0, rng),
                terminal: i % 5 == 4,
                episode_id: i as u64,
                step_index: 0,
            }
        })
        .collect()
}

fn perturbed_init(mlp: &ResidualMlp, rng: &mut Rng) -> Vec<f64> {
    let mut p = mlp.init(rng);
    for x in p.iter_mut() {
        *x += rng.random_range(-0.05..0.05);
    }
    p
}

/// Actor loss for every filter (weights held fixed, as in the update) and
/// the critic loss, on small random networks and batches.
pub fn loss_checks(seed: u64) -> Vec<GradCheck> {
    let mut rng = seeded(seed);
    let mut out = Vec::new();
    let filters = [
        FilterSpec::Bc,
        FilterSpec::Binary,
        FilterSpec::BinaryMax,
        FilterSpec::Exp { beta: 1.0, clip: 20.0 },
    ];
    for (space, label) in [(ActionSpace::Continuous(2), "mog"), (ActionSpace::Discrete(3), "categorical")] {
        let actor = Actor::new(3, space, 8, 2, 3).unwrap();
        // A narrow value range makes the random critic's action values
        // differ enough for the filters to produce varied weights.
        let critic = Critic::new(3, space, 8, 2, AtomGrid::new(11, -3.0, 3.0).unwrap()).unwrap();
        for filter in filters {
            let adv = if filter == FilterSpec::BinaryMax {
                AdvantageSpec::Max { m: 4 }
            } else {
                AdvantageSpec::Mean { m: 4 }
            };
            let name = format!("actor loss, {} filter, {label} head", filter.name());
            out.push(check_points(&name, &mut rng, |r| {
                let phi = perturbed_init(&actor.mlp, r);
                let theta = perturbed_init(&critic.mlp, r);
                let data = random_transitions(6, 3, space, r);
                let streams = Streams::new(r.random());
                let batch: Vec<BatchItem<'_>> = data.iter().map(BatchItem::new).collect();
                let res = actor_loss(&actor, &phi, &critic.bind(&theta), &batch, &filter, &adv, 0.9, &streams).unwrap();
                let weights = res.weights.clone();
                let a = actor.clone();
                let f = move |p: &[f64]| {
                    let batch: Vec<BatchItem<'_>> = data.iter().map(BatchItem::new).collect();
                    weighted_nll(&a, p, &batch, &weights).unwrap().0
                };
                let n = phi.len();
                (Box::new(f) as Box<dyn Fn(&[f64]) -> f64>, phi, res.grad, 0..n)
            }));
        }
    }
    let space = ActionSpace::Continuous(2);
    let actor = Actor::new(3, space, 8, 2, 3).unwrap();
    let critic = Critic::new(3, space, 8, 2, AtomGrid::new(11, 0.0, 10.0).unwrap()).unwrap();
    out.push(check_points("critic loss", &mut rng, |r| {
        let theta = perturbed_init(&critic.mlp, r);
        let theta_target = perturbed_init(&critic.mlp, r);
        let phi_target = perturbed_init(&actor.mlp, r);
        let data = random_transitions(6, 3, space, r);
        let streams = Streams::new(r.random());
        let batch: Vec<BatchItem<'_>> = data.iter().map(BatchItem::new).collect();
        let (_, grad) = critic_loss(&critic, &theta, &theta_target, &actor, &phi_target, &batch, 3, 0.9, &streams).unwrap();
        let (c, a) = (critic.clone(), actor.clone());
        let f = move |p: &[f64]| {
            let batch: Vec<BatchItem<'_>> = data.iter().map(BatchItem::new).collect();
            critic_loss(&c, p, &theta_target, &a, &phi_target, &batch, 3, 0.9, &streams).unwrap().0
        };
        let n = theta.len();
        (Box::new(f) as Box<dyn Fn(&[f64]) -> f64>, theta, grad, 0..n)
    }));
    out
}
