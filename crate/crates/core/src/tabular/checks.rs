use super::instances::{random_instance, sample_dataset, trend_mdp};
use super::{
    build_empirical_mdp, evaluate_policy, tabular_crr_with, CrrVariant, EmpiricalMdp, TabularMdp,
    TabularPolicy, DEFAULT_EVAL_TOL,
};
use crate::error::{Error, Result};
use crate::par::*;
use crate::rng::Streams;

/// True iff `π(a|s) = 0` wherever `μ_B(a|s) = 0`. Exact zero test: the
/// updates produce unsupported zeros by multiplication.
pub fn check_support_containment(policy: &TabularPolicy, mu_b: &TabularPolicy) -> bool {
    policy.n_actions() == mu_b.n_actions()
        && policy.n_states() == mu_b.n_states()
        && policy
            .probs()
            .iter()
            .zip(mu_b.probs())
            .all(|(p, m)| *m != 0.0 || *p == 0.0)
}

/// True iff `Q_B^{new} ≥ Q_B^{old} - tol` elementwise in the empirical MDP.
pub fn check_policy_improvement(
    empirical: &EmpiricalMdp,
    pi_old: &TabularPolicy,
    pi_new: &TabularPolicy,
    tol: f64,
) -> Result<bool> {
    let old = evaluate_policy(empirical.mdp(), &empirical.extend_policy(pi_old)?, DEFAULT_EVAL_TOL)?;
    let new = evaluate_policy(empirical.mdp(), &empirical.extend_policy(pi_new)?, DEFAULT_EVAL_TOL)?;
    Ok(new
        .q_table()
        .iter()
        .zip(old.q_table())
        .all(|(n, o)| *n >= *o - tol))
}

fn restrict(policy: &TabularPolicy, n_states: usize) -> Result<TabularPolicy> {
    let na = policy.n_actions();
    if policy.n_states() < n_states {
        return Err(Error::Input("policy has fewer states than the MDP".into()));
    }
    Ok(TabularPolicy::from_raw(na, policy.probs()[..n_states * na].to_vec()))
}

fn visited_supported_pairs<'a>(
    empirical: &'a EmpiricalMdp,
    policy: &'a TabularPolicy,
) -> impl Iterator<Item = (usize, usize)> + 'a {
    let na = empirical.n_actions();
    (0..empirical.n_states())
        .filter(|&s| empirical.d_b()[s] > 0.0)
        .flat_map(move |s| (0..na).map(move |a| (s, a)))
        .filter(|&(s, a)| policy.prob(s, a) > 0.0)
}

/// `sup |Q^π(s,a) - Q_B^π(s,a)|` over visited states and actions in the
/// support of `π`.
pub fn epsilon_mdp_gap(
    true_mdp: &TabularMdp,
    empirical: &EmpiricalMdp,
    policy: &TabularPolicy,
) -> Result<f64> {
    if true_mdp.n_states() != empirical.n_states() || true_mdp.n_actions() != empirical.n_actions() {
        return Err(Error::Input("true and empirical MDPs differ in shape".into()));
    }
    let q_true = evaluate_policy(true_mdp, &restrict(policy, true_mdp.n_states())?, DEFAULT_EVAL_TOL)?;
    let q_emp = evaluate_policy(empirical.mdp(), &empirical.extend_policy(policy)?, DEFAULT_EVAL_TOL)?;
    Ok(visited_supported_pairs(empirical, policy)
        .map(|(s, a)| (q_true.q(s, a) - q_emp.q(s, a)).abs())
        .fold(0.0, f64::max))
}

/// Finite-sample bound on [`epsilon_mdp_gap`]:
/// `γ/(1-γ) · sup |Σ_s' (P - P_B)(s'|s,a) V^π(s')|` over visited states and
/// supported actions. Valid when every such pair was observed in the data,
/// which holds for any policy supported inside μ_B.
pub fn gap_bound(
    true_mdp: &TabularMdp,
    empirical: &EmpiricalMdp,
    policy: &TabularPolicy,
) -> Result<f64> {
    let gamma = true_mdp.discount();
    let values = evaluate_policy(true_mdp, &restrict(policy, true_mdp.n_states())?, DEFAULT_EVAL_TOL)?;
    let sup = visited_supported_pairs(empirical, policy)
        .map(|(s, a)| {
            let p = true_mdp.row(s, a);
            let pb = empirical.mdp().row(s, a);
            p.iter()
                .zip(pb)
                .zip(values.v_table())
                .map(|((p, pb), v)| (p - pb) * v)
                .sum::<f64>()
                .abs()
        })
        .fold(0.0, f64::max);
    Ok(gamma / (1.0 - gamma) * sup)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub instance_seed: u64,
    pub proposition: String,
    pub pass: bool,
    pub detail: String,
}

#[derive(Debug, Clone)]
pub struct SweepOptions {
    pub seed: u64,
    pub instances: usize,
    pub iterations: usize,
    pub max_states: usize,
    pub max_actions: usize,
    pub exp_epsilon: f64,
    pub improvement_tol: f64,
    /// Negative control: leak probability onto an unsupported action after
    /// every binary update.
    pub corrupt: bool,
}

impl Default for SweepOptions {
    fn default() -> Self {
        Self {
            seed: 0,
            instances: 100,
            iterations: 10,
            max_states: 10,
            max_actions: 5,
            exp_epsilon: super::DEFAULT_EXP_EPSILON,
            improvement_tol: 1e-9,
            corrupt: false,
        }
    }
}

fn leak_mass(policy: &mut TabularPolicy, mu: &TabularPolicy) {
    for s in 0..policy.n_states() {
        let row = policy.row(s).to_vec();
        if let Some(a) = (0..row.len()).find(|&a| mu.prob(s, a) == 0.0) {
            let mut leaked: Vec<f64> = row.iter().map(|p| p * 0.9).collect();
            leaked[a] += 0.1;
            policy.set_row_unchecked(s, &leaked);
        }
    }
}

fn sweep_instance(seed: u64, variant: CrrVariant, opts: &SweepOptions) -> Result<Vec<SweepRow>> {
    let inst = random_instance(seed, opts.max_states, opts.max_actions)?;
    let emp = build_empirical_mdp(
        &inst.dataset,
        inst.mdp.n_states(),
        inst.mdp.n_actions(),
        inst.mdp.discount(),
    )?;
    let mu = emp.mu_b().clone();
    let corrupt = opts.corrupt && variant == CrrVariant::Binary;
    let traj = tabular_crr_with(&emp, variant, opts.iterations, |p| {
        if corrupt {
            leak_mass(p, &mu)
        }
    })?;

    let mut support_ok = true;
    let mut support_detail = String::from("all iterates inside supp mu_B");
    for (i, (pi, _)) in traj.iter().enumerate().skip(1) {
        if !check_support_containment(pi, &mu) {
            support_ok = false;
            support_detail = format!("iterate {i} places mass outside supp mu_B");
            break;
        }
    }

    let mut worst_drop = 0.0_f64;
    for pair in traj.windows(2) {
        let (old, new) = (&pair[0].1, &pair[1].1);
        for (n, o) in new.q_table().iter().zip(old.q_table()) {
            worst_drop = worst_drop.max(o - n);
        }
    }
    let improve_ok = worst_drop <= opts.improvement_tol;

    let final_policy = &traj.last().expect("non-empty trajectory").0;
    let (bound_ok, bound_detail) = if check_support_containment(final_policy, &mu) {
        let gap = epsilon_mdp_gap(&inst.mdp, &emp, final_policy)?;
        let bound = gap_bound(&inst.mdp, &emp, final_policy)?;
        (gap <= bound + 1e-9, format!("gap={gap:.6e} bound={bound:.6e}"))
    } else {
        (false, "final policy leaves supp mu_B; bound does not apply".to_string())
    };

    let improvement_name = match variant {
        CrrVariant::Binary => "P2-improvement",
        CrrVariant::Exp { .. } => "P3-improvement",
    };
    let tag = variant.name();
    Ok(vec![
        SweepRow {
            instance_seed: seed,
            proposition: format!("P1-support/{tag}"),
            pass: support_ok,
            detail: support_detail,
        },
        SweepRow {
            instance_seed: seed,
            proposition: format!("{improvement_name}/{tag}"),
            pass: improve_ok,
            detail: format!("max Q decrease {worst_drop:.3e}"),
        },
        SweepRow {
            instance_seed: seed,
            proposition: format!("P4-gap-bound/{tag}"),
            pass: bound_ok,
            detail: bound_detail,
        },
    ])
}

/// Randomised check of support containment, Q-monotonicity, and the
/// empirical-vs-true gap bound on `opts.instances` MDPs, for both variants.
/// Returns `instances × 2 × 3` rows.
pub fn run_sweep(opts: &SweepOptions) -> Result<Vec<SweepRow>> {
    let streams = Streams::new(opts.seed);
    let seeds: Vec<u64> = (0..opts.instances as u64)
        .map(|i| streams.seed("tabular-instance", i))
        .collect();
    let variants = [
        CrrVariant::Binary,
        CrrVariant::Exp {
            epsilon: opts.exp_epsilon,
        },
    ];
    let per_instance: Vec<Result<Vec<SweepRow>>> = seeds
        .par_iter()
        .map(|&seed| {
            let mut rows = Vec::with_capacity(6);
            for v in variants {
                rows.extend(sweep_instance(seed, v, opts)?);
            }
            Ok(rows)
        })
        .collect();
    let mut rows = Vec::with_capacity(opts.instances * 6);
    for r in per_instance {
        rows.extend(r?);
    }
    Ok(rows)
}

#[derive(Debug, Clone)]
pub struct TrendResult {
    pub sizes: Vec<usize>,
    /// `gaps[seed_index][size_index]`
    pub gaps: Vec<Vec<f64>>,
    pub medians: Vec<f64>,
    pub inversions: usize,
    pub shrink: f64,
    pub pass: bool,
}

fn median(xs: &mut [f64]) -> f64 {
    xs.sort_by(f64::total_cmp);
    let n = xs.len();
    if n % 2 == 1 {
        xs[n / 2]
    } else {
        0.5 * (xs[n / 2 - 1] + xs[n / 2])
    }
}

/// Gap between true and empirical Q of the (uniform) behavior policy on a
/// fixed stochastic MDP as the dataset grows. Passes when the per-size median
/// over seeds is non-increasing up to one inversion and the last median is
/// below 10% of the first.
pub fn trend_experiment(seed: u64, n_seeds: usize, sizes: &[usize]) -> Result<TrendResult> {
    if sizes.is_empty() || n_seeds == 0 {
        return Err(Error::Config("trend experiment needs sizes and seeds".into()));
    }
    let mdp = trend_mdp();
    let behavior = TabularPolicy::uniform(mdp.n_states(), mdp.n_actions());
    let streams = Streams::new(seed);
    let jobs: Vec<(usize, usize)> = (0..n_seeds)
        .flat_map(|k| (0..sizes.len()).map(move |j| (k, j)))
        .collect();
    let results: Vec<Result<f64>> = jobs
        .par_iter()
        .map(|&(k, j)| {
            let mut rng = streams.stream("trend", (k * sizes.len() + j) as u64);
            let data = sample_dataset(&mdp, &behavior, &[0], sizes[j], 10_000, &mut rng);
            let emp = build_empirical_mdp(&data, mdp.n_states(), mdp.n_actions(), mdp.discount())?;
            epsilon_mdp_gap(&mdp, &emp, &behavior)
        })
        .collect();
    let mut gaps = vec![vec![0.0; sizes.len()]; n_seeds];
    for (&(k, j), g) in jobs.iter().zip(results) {
        gaps[k][j] = g?;
    }
    let medians: Vec<f64> = (0..sizes.len())
        .map(|j| median(&mut gaps.iter().map(|g| g[j]).collect::<Vec<_>>()))
        .collect();
    let inversions = medians.windows(2).filter(|w| w[1] > w[0]).count();
    let shrink = 1.0 - medians[medians.len() - 1] / medians[0];
    let pass = inversions <= 1 && medians[medians.len() - 1] < 0.1 * medians[0];
    Ok(TrendResult {
        sizes: sizes.to_vec(),
        gaps,
        medians,
        inversions,
        shrink,
        pass,
    })
}
