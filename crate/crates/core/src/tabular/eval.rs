use super::{TabularMdp, TabularPolicy, TabularValues};
use crate::error::{Error, Result};

const MAX_SWEEPS: usize = 10_000_000;

fn check_inputs(mdp: &TabularMdp, policy: &TabularPolicy) -> Result<()> {
    let gamma = mdp.discount();
    if !(0.0..1.0).contains(&gamma) {
        return Err(Error::Config(format!("discount must lie in [0, 1), got {gamma}")));
    }
    if policy.n_states() != mdp.n_states() || policy.n_actions() != mdp.n_actions() {
        return Err(Error::Input(format!(
            "policy is {}x{}, MDP is {}x{}",
            policy.n_states(),
            policy.n_actions(),
            mdp.n_states(),
            mdp.n_actions()
        )));
    }
    Ok(())
}

fn q_from_v(mdp: &TabularMdp, v: &[f64]) -> Vec<f64> {
    let (ns, na, gamma) = (mdp.n_states(), mdp.n_actions(), mdp.discount());
    let mut q = vec![0.0; ns * na];
    for s in 0..ns {
        for a in 0..na {
            let next: f64 = mdp.row(s, a).iter().zip(v).map(|(p, v)| p * v).sum();
            q[s * na + a] = mdp.reward(s, a) + gamma * next;
        }
    }
    q
}

fn v_from_q(policy: &TabularPolicy, q: &[f64], ns: usize, na: usize) -> Vec<f64> {
    (0..ns)
        .map(|s| {
            policy
                .row(s)
                .iter()
                .zip(&q[s * na..(s + 1) * na])
                .map(|(p, q)| p * q)
                .sum()
        })
        .collect()
}

/// Exact policy evaluation by iterating the Bellman evaluation operator until
/// the sup-norm change drops below `tol`.
pub fn evaluate_policy(
    mdp: &TabularMdp,
    policy: &TabularPolicy,
    tol: f64,
) -> Result<TabularValues> {
    evaluate_policy_iterative(mdp, policy, tol)
}

pub fn evaluate_policy_iterative(
    mdp: &TabularMdp,
    policy: &TabularPolicy,
    tol: f64,
) -> Result<TabularValues> {
    check_inputs(mdp, policy)?;
    if !(tol > 0.0) {
        return Err(Error::Config(format!("evaluation tolerance must be positive, got {tol}")));
    }
    let (ns, na) = (mdp.n_states(), mdp.n_actions());
    let mut v = vec![0.0; ns];
    for _ in 0..MAX_SWEEPS {
        let q = q_from_v(mdp, &v);
        let next = v_from_q(policy, &q, ns, na);
        let delta = next
            .iter()
            .zip(&v)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        v = next;
        if delta < tol {
            let q = q_from_v(mdp, &v);
            let v = v_from_q(policy, &q, ns, na);
            return TabularValues::new(na, q, v);
        }
        if !delta.is_finite() {
            return Err(Error::Numeric("policy evaluation diverged".into()));
        }
    }
    Err(Error::Numeric("policy evaluation did not converge".into()))
}

/// Policy evaluation by solving `(I - γ P^π) v = r^π` with partial pivoting.
pub fn evaluate_policy_direct(mdp: &TabularMdp, policy: &TabularPolicy) -> Result<TabularValues> {
    check_inputs(mdp, policy)?;
    let (ns, na, gamma) = (mdp.n_states(), mdp.n_actions(), mdp.discount());
    let mut m = vec![0.0; ns * ns];
    let mut b = vec![0.0; ns];
    for s in 0..ns {
        m[s * ns + s] = 1.0;
        for a in 0..na {
            let p = policy.prob(s, a);
            if p == 0.0 {
                continue;
            }
            b[s] += p * mdp.reward(s, a);
            for (sn, &t) in mdp.row(s, a).iter().enumerate() {
                m[s * ns + sn] -= gamma * p * t;
            }
        }
    }
    for col in 0..ns {
        let pivot = (col..ns)
            .max_by(|&i, &j| m[i * ns + col].abs().total_cmp(&m[j * ns + col].abs()))
            .unwrap_or(col);
        if m[pivot * ns + col].abs() < 1e-300 {
            return Err(Error::Numeric("singular evaluation system".into()));
        }
        if pivot != col {
            for k in 0..ns {
                m.swap(col * ns + k, pivot * ns + k);
            }
            b.swap(col, pivot);
        }
        let d = m[col * ns + col];
        for row in col + 1..ns {
            let f = m[row * ns + col] / d;
            if f == 0.0 {
                continue;
            }
            for k in col..ns {
                m[row * ns + k] -= f * m[col * ns + k];
            }
            b[row] -= f * b[col];
        }
    }
    let mut v = vec![0.0; ns];
    for row in (0..ns).rev() {
        let tail: f64 = (row + 1..ns).map(|k| m[row * ns + k] * v[k]).sum();
        v[row] = (b[row] - tail) / m[row * ns + row];
    }
    let q = q_from_v(mdp, &v);
    let v = v_from_q(policy, &q, ns, na);
    TabularValues::new(na, q, v)
}
