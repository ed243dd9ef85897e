use super::{evaluate_policy, EmpiricalMdp, TabularPolicy, TabularValues, DEFAULT_EVAL_TOL};
use crate::error::{Error, Result};

const LOG_BETA_MIN: f64 = -18.420_680_743_952_367; // ln 1e-8
const LOG_BETA_MAX: f64 = 18.420_680_743_952_367; // ln 1e8
const MAX_BISECTIONS: usize = 400;

/// Which tabular policy-improvement step to run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CrrVariant {
    Binary,
    /// KL-constrained improvement with per-state budget `epsilon`.
    Exp { epsilon: f64 },
}

impl CrrVariant {
    pub fn name(&self) -> &'static str {
        match self {
            CrrVariant::Binary => "binary",
            CrrVariant::Exp { .. } => "exp",
        }
    }
}

fn tie_tol(v: f64) -> f64 {
    1e-12 * v.abs().max(1.0)
}

fn check_dims(values: &TabularValues, mu_b: &TabularPolicy) -> Result<()> {
    if values.n_states() != mu_b.n_states() || values.n_actions() != mu_b.n_actions() {
        return Err(Error::Input(format!(
            "values are {}x{}, behavior policy is {}x{}",
            values.n_states(),
            values.n_actions(),
            mu_b.n_states(),
            mu_b.n_actions()
        )));
    }
    Ok(())
}

/// KL(p || q) over the support of `p`; infinite if `p` leaves the support of `q`.
pub fn kl_divergence(p: &[f64], q: &[f64]) -> f64 {
    p.iter()
        .zip(q)
        .filter(|(p, _)| **p > 0.0)
        .map(|(&p, &q)| if q > 0.0 { p * (p / q).ln() } else { f64::INFINITY })
        .sum()
}

/// `π(a|s) ∝ 1[Q(s,a) ≥ V(s)] μ_B(a|s)`.
///
/// Comparisons against `V(s)` use a relative slack of 1e-12 so that a state
/// whose Q row is constant keeps all its actions despite rounding in `V`.
pub fn crr_binary_update(values: &TabularValues, mu_b: &TabularPolicy) -> Result<TabularPolicy> {
    check_dims(values, mu_b)?;
    let na = mu_b.n_actions();
    let mut probs = Vec::with_capacity(values.n_states() * na);
    for s in 0..values.n_states() {
        let v = values.v(s);
        let row: Vec<f64> = (0..na)
            .map(|a| {
                if values.q(s, a) >= v - tie_tol(v) {
                    mu_b.prob(s, a)
                } else {
                    0.0
                }
            })
            .collect();
        let z: f64 = row.iter().sum();
        if !(z > 0.0) {
            return Err(Error::Internal(format!(
                "no supported action in state {s} reaches V(s); values do not belong to a policy within supp μ_B"
            )));
        }
        probs.extend(row.into_iter().map(|p| p / z));
    }
    Ok(TabularPolicy::from_raw(na, probs))
}

/// The β→0⁺ limit of the exponential update: μ_B restricted to the argmax of
/// Q within its support, so tied maximisers share mass in proportion to μ_B.
pub fn greedy_within_support(q: &[f64], mu: &[f64]) -> Vec<f64> {
    let qmax = q
        .iter()
        .zip(mu)
        .filter(|(_, m)| **m > 0.0)
        .map(|(q, _)| *q)
        .fold(f64::NEG_INFINITY, f64::max);
    let mut out: Vec<f64> = q
        .iter()
        .zip(mu)
        .map(|(&q, &m)| if m > 0.0 && q >= qmax - tie_tol(qmax) { m } else { 0.0 })
        .collect();
    let z: f64 = out.iter().sum();
    out.iter_mut().for_each(|p| *p /= z);
    out
}

fn tilted(q: &[f64], mu: &[f64], qmax: f64, beta: f64) -> Vec<f64> {
    let mut out: Vec<f64> = q
        .iter()
        .zip(mu)
        .map(|(&q, &m)| if m > 0.0 { m * ((q - qmax) / beta).exp() } else { 0.0 })
        .collect();
    let z: f64 = out.iter().sum();
    out.iter_mut().for_each(|p| *p /= z);
    out
}

fn exp_row(q: &[f64], mu: &[f64], epsilon: f64) -> Result<Vec<f64>> {
    let greedy = greedy_within_support(q, mu);
    if kl_divergence(&greedy, mu) <= epsilon {
        return Ok(greedy);
    }
    let qmax = q
        .iter()
        .zip(mu)
        .filter(|(_, m)| **m > 0.0)
        .map(|(q, _)| *q)
        .fold(f64::NEG_INFINITY, f64::max);
    let kl_at = |log_beta: f64| {
        let p = tilted(q, mu, qmax, log_beta.exp());
        (kl_divergence(&p, mu), p)
    };
    let (kl_hi, p_hi) = kl_at(LOG_BETA_MAX);
    if kl_hi > epsilon {
        return Err(Error::Internal(format!(
            "KL at β=1e8 is {kl_hi}, above budget {epsilon}; bisection does not bracket"
        )));
    }
    let (kl_lo, p_lo) = kl_at(LOG_BETA_MIN);
    if kl_lo <= epsilon {
        // Q gaps below the bracket resolution: the budget never binds inside it.
        return Ok(p_lo);
    }
    let (mut lo, mut hi) = (LOG_BETA_MIN, LOG_BETA_MAX);
    let mut best = p_hi;
    for _ in 0..MAX_BISECTIONS {
        let mid = 0.5 * (lo + hi);
        let (kl, p) = kl_at(mid);
        // Bisect to the bracket width and return the feasible end. An early
        // exit leaves a KL slack that costs about β·slack in value, enough to
        // make converged iterates alternate instead of improving.
        if kl > epsilon {
            lo = mid;
        } else {
            hi = mid;
            best = p;
        }
        if hi - lo <= f64::EPSILON * hi.abs().max(1.0) {
            break;
        }
    }
    Ok(best)
}

/// Per-state solution of `max_π Σ_a π(a|s) Q(s,a)` subject to
/// `KL(π(·|s) || μ_B(·|s)) ≤ epsilon`, i.e. `π ∝ μ_B exp(Q/β(s))` with β(s)
/// found by bisection on log β.
pub fn crr_exp_update(
    values: &TabularValues,
    mu_b: &TabularPolicy,
    epsilon: f64,
) -> Result<TabularPolicy> {
    check_dims(values, mu_b)?;
    if !(epsilon > 0.0) {
        return Err(Error::Config(format!("KL budget must be positive, got {epsilon}")));
    }
    let na = mu_b.n_actions();
    let mut probs = Vec::with_capacity(values.n_states() * na);
    for s in 0..values.n_states() {
        probs.extend(exp_row(values.q_row(s), mu_b.row(s), epsilon)?);
    }
    Ok(TabularPolicy::from_raw(na, probs))
}

/// Tabular CRR: start from μ_B, alternate exact evaluation in the empirical
/// MDP with the chosen improvement step. Entry `i` of the result is
/// `(π_i, Q^{π_i})`, so the trajectory has `iterations + 1` entries.
pub fn tabular_crr(
    empirical: &EmpiricalMdp,
    variant: CrrVariant,
    iterations: usize,
) -> Result<Vec<(TabularPolicy, TabularValues)>> {
    tabular_crr_with(empirical, variant, iterations, |_| {})
}

/// [`tabular_crr`] with a hook applied to every improved policy before it is
/// evaluated. The verification sweep uses it for negative controls.
pub fn tabular_crr_with(
    empirical: &EmpiricalMdp,
    variant: CrrVariant,
    iterations: usize,
    mut hook: impl FnMut(&mut TabularPolicy),
) -> Result<Vec<(TabularPolicy, TabularValues)>> {
    if iterations == 0 {
        return Err(Error::Config("tabular CRR needs at least one iteration".into()));
    }
    let mdp = empirical.mdp();
    let mu = empirical.mu_b();
    let mut policy = mu.clone();
    let mut values = evaluate_policy(mdp, &policy, DEFAULT_EVAL_TOL)?;
    let mut out = Vec::with_capacity(iterations + 1);
    for _ in 0..iterations {
        let mut next = match variant {
            CrrVariant::Binary => crr_binary_update(&values, mu)?,
            CrrVariant::Exp { epsilon } => crr_exp_update(&values, mu, epsilon)?,
        };
        hook(&mut next);
        out.push((policy, values));
        values = evaluate_policy(mdp, &next, DEFAULT_EVAL_TOL)?;
        policy = next;
    }
    out.push((policy, values));
    Ok(out)
}
