//! Categorical return distributions on a fixed atom grid: projection of the
//! distributional Bellman target, the cross-entropy divergence used as the
//! critic loss, and scalar expectations.

use crate::error::{Error, Result};

/// Uniformly spaced support `z_0 = v_min, ..., z_{n-1} = v_max`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AtomGrid {
    n_atoms: usize,
    v_min: f64,
    v_max: f64,
}

impl Default for AtomGrid {
    fn default() -> Self {
        Self {
            n_atoms: 21,
            v_min: 0.0,
            v_max: 100.0,
        }
    }
}

impl AtomGrid {
    pub fn new(n_atoms: usize, v_min: f64, v_max: f64) -> Result<Self> {
        if n_atoms < 2 || !(v_max > v_min) || !v_min.is_finite() || !v_max.is_finite() {
            return Err(Error::Config(format!(
                "atom grid needs n >= 2 and v_min < v_max, got n={n_atoms} [{v_min}, {v_max}]"
            )));
        }
        Ok(Self {
            n_atoms,
            v_min,
            v_max,
        })
    }

    pub fn n_atoms(&self) -> usize {
        self.n_atoms
    }

    pub fn v_min(&self) -> f64 {
        self.v_min
    }

    pub fn v_max(&self) -> f64 {
        self.v_max
    }

    pub fn spacing(&self) -> f64 {
        (self.v_max - self.v_min) / (self.n_atoms - 1) as f64
    }

    pub fn atom(&self, i: usize) -> f64 {
        if i == self.n_atoms - 1 {
            self.v_max
        } else {
            self.v_min + i as f64 * self.spacing()
        }
    }

    pub fn atoms(&self) -> Vec<f64> {
        (0..self.n_atoms).map(|i| self.atom(i)).collect()
    }
}

/// Probabilities over the atoms of an [`AtomGrid`].
#[derive(Debug, Clone, PartialEq)]
pub struct ValueDistribution(pub Vec<f64>);

impl ValueDistribution {
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        if probs.iter().any(|p| !(*p >= 0.0)) {
            return Err(Error::Validation("negative or NaN probability".into()));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > 1e-10 {
            return Err(Error::Validation(format!("probabilities sum to {total}")));
        }
        Ok(Self(probs))
    }

    pub fn point_mass(n_atoms: usize, index: usize) -> Self {
        let mut p = vec![0.0; n_atoms];
        p[index] = 1.0;
        Self(p)
    }

    pub fn probs(&self) -> &[f64] {
        &self.0
    }
}

/// Σ_i p_i z_i.
pub fn mean_value(grid: &AtomGrid, probs: &[f64]) -> f64 {
    probs.iter().enumerate().map(|(i, p)| p * grid.atom(i)).sum()
}

/// Shifts every atom to `reward + discount · z_i`, clips to the grid, and
/// splits its mass linearly between the two neighbouring atoms.
pub fn project_target(
    grid: &AtomGrid,
    reward: f64,
    discount: f64,
    next: &[f64],
) -> Result<ValueDistribution> {
    if !reward.is_finite() || !discount.is_finite() {
        return Err(Error::Numeric(format!(
            "non-finite reward {reward} or discount {discount}"
        )));
    }
    let n = grid.n_atoms();
    if next.len() != n {
        return Err(Error::Input(format!("distribution has {} atoms, grid has {n}", next.len())));
    }
    let dz = grid.spacing();
    let mut out = vec![0.0; n];
    for (i, &p) in next.iter().enumerate() {
        if p == 0.0 {
            continue;
        }
        let tz = (reward + discount * grid.atom(i)).clamp(grid.v_min(), grid.v_max());
        let b = ((tz - grid.v_min()) / dz).clamp(0.0, (n - 1) as f64);
        let l = b.floor();
        let u = b.ceil();
        let (li, ui) = (l as usize, u as usize);
        if li == ui {
            out[li] += p;
        } else {
            out[li] += p * (u - b);
            out[ui] += p * (b - l);
        }
    }
    Ok(ValueDistribution(out))
}

/// Numerically stable softmax.
pub fn softmax(logits: &[f64]) -> Vec<f64> {
    let m = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut out: Vec<f64> = logits.iter().map(|x| (x - m).exp()).collect();
    let z: f64 = out.iter().sum();
    out.iter_mut().for_each(|p| *p /= z);
    out
}

pub fn log_sum_exp(xs: &[f64]) -> f64 {
    let m = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + xs.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}

/// Cross-entropy `-Σ q_i log softmax(logits)_i` and its gradient
/// `softmax(logits) - q` with respect to the logits.
pub fn divergence(pred_logits: &[f64], target: &[f64]) -> (f64, Vec<f64>) {
    let lse = log_sum_exp(pred_logits);
    let loss = target
        .iter()
        .zip(pred_logits)
        .filter(|(q, _)| **q > 0.0)
        .map(|(q, x)| -q * (x - lse))
        .sum();
    let grad = pred_logits
        .iter()
        .zip(target)
        .map(|(x, q)| (x - lse).exp() - q)
        .collect();
    (loss, grad)
}

/// Elementwise average of next-state distributions, one per sampled action.
pub fn mixture_target(dists: &[Vec<f64>]) -> Result<ValueDistribution> {
    let first = dists
        .first()
        .ok_or_else(|| Error::Precondition("mixture needs at least one distribution".into()))?;
    let n = first.len();
    let mut out = vec![0.0; n];
    for d in dists {
        if d.len() != n {
            return Err(Error::Input("distributions differ in atom count".into()));
        }
        out.iter_mut().zip(d).for_each(|(o, p)| *o += p);
    }
    let m = dists.len() as f64;
    out.iter_mut().for_each(|o| *o /= m);
    Ok(ValueDistribution(out))
}

pub fn entropy(p: &[f64]) -> f64 {
    -p.iter().filter(|x| **x > 0.0).map(|x| x * x.ln()).sum::<f64>()
}
