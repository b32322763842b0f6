//! Ensemble experiments exercising the implications between the
//! decoherence criteria across random and structured unitaries.
//!
//! Trials are independent; per-trial seeds are derived from the master
//! seed by a counting scheme so the trial set is schedule-independent and
//! every flagged instance replays bit-identically.

use crate::criteria::{
    check_approx_strong, check_commutators, check_exact_all_partition_states,
    check_exact_all_states, check_theorem2_bound, CheckReport, CriteriaError, Epsilon,
};
use crate::histories::{full_gram, GramConfig, History};
use crate::linalg::{haar_random_unitary_from_rng, CMatrix, C64};
use crate::partition::{partition_from_basis_groups, ProjectivePartition};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EnsembleKind {
    /// Haar-random unitaries on the full space.
    Haar,
    /// Uniform permutation matrices on the computational basis.
    Permutation,
    /// Haar-random independently inside each partition block.
    BlockDiagonal,
    /// Uniform phases on the computational basis.
    DiagonalPhase,
}

/// A family of unitaries paired with a fixed basis-group partition.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Ensemble {
    pub kind: EnsembleKind,
    pub dim: usize,
    /// Basis groups defining the partition; singletons give fine-grained.
    pub groups: Vec<Vec<usize>>,
    pub trials: usize,
    pub seed: u64,
}

impl Ensemble {
    pub fn fine_grained(kind: EnsembleKind, dim: usize, trials: usize, seed: u64) -> Self {
        Ensemble {
            kind,
            dim,
            groups: (0..dim).map(|i| vec![i]).collect(),
            trials,
            seed,
        }
    }

    pub fn partition(&self) -> Result<ProjectivePartition, crate::partition::PartitionError> {
        partition_from_basis_groups(self.dim, &self.groups)
    }

    /// Seed for trial `t`; a fixed mixing constant keeps streams disjoint.
    pub fn trial_seed(&self, t: usize) -> u64 {
        self.seed ^ (t as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15)
    }

    /// The unitary of trial `t`, reproducible from the trial seed alone.
    pub fn sample_unitary(&self, t: usize) -> CMatrix {
        let mut rng = ChaCha8Rng::seed_from_u64(self.trial_seed(t));
        match self.kind {
            EnsembleKind::Haar => haar_random_unitary_from_rng(self.dim, &mut rng),
            EnsembleKind::Permutation => {
                let mut perm: Vec<usize> = (0..self.dim).collect();
                perm.shuffle(&mut rng);
                CMatrix::from_fn(self.dim, |i, j| {
                    if perm[j] == i {
                        C64::new(1.0, 0.0)
                    } else {
                        C64::new(0.0, 0.0)
                    }
                })
            }
            EnsembleKind::BlockDiagonal => {
                let mut u = CMatrix::zeros(self.dim);
                for g in &self.groups {
                    let inner = haar_random_unitary_from_rng(g.len(), &mut rng);
                    for (a, &i) in g.iter().enumerate() {
                        for (b, &j) in g.iter().enumerate() {
                            u.set(i, j, inner.get(a, b));
                        }
                    }
                }
                u
            }
            EnsembleKind::DiagonalPhase => {
                let phases: Vec<f64> = (0..self.dim)
                    .map(|_| rng.gen::<f64>() * std::f64::consts::TAU)
                    .collect();
                CMatrix::from_fn(self.dim, |i, j| {
                    if i == j {
                        C64::from_polar(1.0, phases[i])
                    } else {
                        C64::new(0.0, 0.0)
                    }
                })
            }
        }
    }
}

/// One trial of an experiment: the relevant check reports plus the
/// implication verdict.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrialRecord {
    pub trial: usize,
    pub seed: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub report_a: Option<CheckReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub report_b: Option<CheckReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub report_c: Option<CheckReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub report_premise: Option<CheckReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub report_bound: Option<CheckReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub violation: Option<String>,
}

/// Full instance data for replaying a flagged trial.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ImplicationViolation {
    pub trial: usize,
    pub seed: u64,
    pub ensemble: Ensemble,
    pub description: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentSummary {
    pub trials: usize,
    pub pass_a: usize,
    pub pass_b: usize,
    pub pass_c: usize,
    pub premise_pass: usize,
    pub conclusion_pass: usize,
    pub violations: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentResult {
    pub records: Vec<TrialRecord>,
    pub violations: Vec<ImplicationViolation>,
    pub summary: ExperimentSummary,
}

/// Evaluates finite-horizon proxies of the three equivalent statements of
/// the exact-decoherence theorem on every trial and flags any trial where
/// a commutator pass fails to imply both decoherence passes.
pub fn run_theorem1_experiment(
    ens: &Ensemble,
    k_max: usize,
    n_max: usize,
    tol: f64,
    cfg: &GramConfig,
) -> Result<ExperimentResult, CriteriaError> {
    let p = ens.partition().expect("valid basis groups");
    let mut records = Vec::with_capacity(ens.trials);
    let mut violations = Vec::new();
    let mut summary = ExperimentSummary {
        trials: ens.trials,
        pass_a: 0,
        pass_b: 0,
        pass_c: 0,
        premise_pass: 0,
        conclusion_pass: 0,
        violations: 0,
    };
    for t in 0..ens.trials {
        let seed = ens.trial_seed(t);
        let u = ens.sample_unitary(t);
        let a = check_exact_all_partition_states(&u, &p, k_max, tol, cfg)?;
        let b = check_commutators(&u, &p, n_max, tol);
        let c = check_exact_all_states(&u, &p, k_max, 3, tol, seed.wrapping_add(1), cfg)?;
        if a.passed() {
            summary.pass_a += 1;
        }
        if b.passed() {
            summary.pass_b += 1;
        }
        if c.passed() {
            summary.pass_c += 1;
        }
        // (b) at n <= n_max covers histories up to k <= n_max + 1, so with
        // k_max <= n_max + 1 a (b)-pass must force (a) and (c) passes.
        let mut violation = None;
        if b.passed() && k_max <= n_max + 1 && (!a.passed() || !c.passed()) {
            violation = Some(format!(
                "commutators pass but exact decoherence fails (a={:?}, c={:?})",
                a.verdict, c.verdict
            ));
        }
        if let Some(desc) = &violation {
            summary.violations += 1;
            violations.push(ImplicationViolation {
                trial: t,
                seed,
                ensemble: ens.clone(),
                description: desc.clone(),
            });
        }
        records.push(TrialRecord {
            trial: t,
            seed,
            report_a: Some(a),
            report_b: Some(b),
            report_c: Some(c),
            report_premise: None,
            report_bound: None,
            violation,
        });
    }
    Ok(ExperimentResult {
        records,
        violations,
        summary,
    })
}

/// Checks the approximate-decoherence implication: whenever the strong
/// epsilon-condition holds for all partition states and all k <= k_max,
/// the iterated commutator norms must stay below 2 d^{3/2} sqrt(eps).
/// The conclusion is asserted only for n <= k_max - 1, matching the
/// premise's quantifier reach.
pub fn run_theorem2_experiment(
    ens: &Ensemble,
    eps: Epsilon,
    k_max: usize,
    n_max: usize,
    p_null: f64,
    cfg: &GramConfig,
) -> Result<ExperimentResult, CriteriaError> {
    let p = ens.partition().expect("valid basis groups");
    let n_conclusion = n_max.min(k_max.saturating_sub(1)).max(1);
    let mut records = Vec::with_capacity(ens.trials);
    let mut violations = Vec::new();
    let mut summary = ExperimentSummary {
        trials: ens.trials,
        pass_a: 0,
        pass_b: 0,
        pass_c: 0,
        premise_pass: 0,
        conclusion_pass: 0,
        violations: 0,
    };
    for t in 0..ens.trials {
        let seed = ens.trial_seed(t);
        let u = ens.sample_unitary(t);
        let mut premise_pass = true;
        let mut worst_premise: Option<CheckReport> = None;
        'premise: for rho in p.partition_states() {
            for k in 1..=k_max {
                let r = check_approx_strong(&u, &p, &rho, k, eps, p_null, cfg)?;
                let failed = !r.passed();
                if worst_premise
                    .as_ref()
                    .map(|w| r.worst_value > w.worst_value)
                    .unwrap_or(true)
                {
                    worst_premise = Some(r);
                }
                if failed {
                    premise_pass = false;
                    break 'premise;
                }
            }
        }
        let bound = check_theorem2_bound(&u, &p, n_conclusion, eps);
        if premise_pass {
            summary.premise_pass += 1;
        }
        if bound.passed() {
            summary.conclusion_pass += 1;
        }
        let mut violation = None;
        if premise_pass && !bound.passed() {
            violation = Some(format!(
                "strong epsilon-condition holds but commutator bound fails (worst {:.3e})",
                bound.worst_value
            ));
        }
        if let Some(desc) = &violation {
            summary.violations += 1;
            violations.push(ImplicationViolation {
                trial: t,
                seed,
                ensemble: ens.clone(),
                description: desc.clone(),
            });
        }
        records.push(TrialRecord {
            trial: t,
            seed,
            report_a: None,
            report_b: None,
            report_c: None,
            report_premise: worst_premise,
            report_bound: Some(bound),
            violation,
        });
    }
    Ok(ExperimentResult {
        records,
        violations,
        summary,
    })
}

/// A partition state, history length, and history pair violating the
/// strong epsilon-condition.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ViolationWitness {
    pub state: usize,
    pub k: usize,
    pub alpha: Vec<usize>,
    pub alpha_code: usize,
    pub beta: Vec<usize>,
    pub beta_code: usize,
    pub value: f64,
}

/// Searches for a concrete violation of the strong epsilon-condition
/// behind a large commutator at iteration `n` of the triple
/// (mu0, mu_a, mu_b). History lengths k <= min(k_cap, n+1) are tried
/// first, preferring pairs that start in mu0 and differ at time n+1 by
/// mu_a vs mu_b, then the remaining lengths up to k_cap.
pub fn find_violation_witness(
    u: &CMatrix,
    p: &ProjectivePartition,
    n: usize,
    mu0: usize,
    mu_a: usize,
    mu_b: usize,
    eps: Epsilon,
    k_cap: usize,
    p_null: f64,
    cfg: &GramConfig,
) -> Result<Option<ViolationWitness>, CriteriaError> {
    if mu_a == mu_b || p.len() < 2 {
        return Ok(None);
    }
    let m = p.len();
    let states = p.partition_states();
    let near: Vec<usize> = (1..=k_cap.min(n + 1)).collect();
    let far: Vec<usize> = ((n + 2)..=k_cap).collect();
    for k in near.into_iter().chain(far) {
        for (si, rho) in states.iter().enumerate() {
            let g = full_gram(u, p, rho, k, cfg)?;
            let count = g.len() as f64;
            let violates = |a: usize, b: usize| -> Option<f64> {
                let da = g.get(a, a).re;
                let db = g.get(b, b).re;
                if da <= p_null || db <= p_null {
                    return None;
                }
                let lhs = g.get(a, b).norm();
                (lhs >= eps.value() * (da * db).sqrt() / count).then_some(lhs)
            };
            // preferred pairs: common prefix starting at mu0, split into
            // mu_a vs mu_b at time n+1
            if k > n {
                for code in 0..g.len() {
                    let h = History::from_code(code, k, m);
                    if h.0[0] != mu0 || h.0[n] != mu_a {
                        continue;
                    }
                    let mut other = h.0.clone();
                    other[n] = mu_b;
                    let b_code = History(other.clone()).code(m);
                    if let Some(value) = violates(code.min(b_code), code.max(b_code)) {
                        return Ok(Some(ViolationWitness {
                            state: si,
                            k,
                            alpha: h.0,
                            alpha_code: code,
                            beta: other,
                            beta_code: b_code,
                            value,
                        }));
                    }
                }
            }
            for a in 0..g.len() {
                for b in (a + 1)..g.len() {
                    if let Some(value) = violates(a, b) {
                        return Ok(Some(ViolationWitness {
                            state: si,
                            k,
                            alpha: History::from_code(a, k, m).0,
                            alpha_code: a,
                            beta: History::from_code(b, k, m).0,
                            beta_code: b,
                            value,
                        }));
                    }
                }
            }
        }
    }
    Ok(None)
}
