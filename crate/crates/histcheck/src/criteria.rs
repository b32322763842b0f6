//! Decoherence criteria: exact medium decoherence, classicality
//! preservation, iterated commutator conditions, the approximate
//! epsilon-conditions, loop conditions, and the commutator norm bound.
//!
//! Universal quantifiers over all n (or all k) are not finitely checkable;
//! every check takes an explicit horizon and labels its verdict with it.

use crate::histories::{full_gram, DecoherenceGram, GramConfig, HistoriesError, History};
use crate::linalg::CMatrix;
use crate::partition::{random_density_from_rng, DensityOperator, ProjectivePartition};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::json;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CriteriaError {
    #[error(transparent)]
    Histories(#[from] HistoriesError),
    #[error("epsilon must lie in (0, 1), got {0}")]
    InvalidEpsilon(f64),
    #[error("loop-condition forms disagree at (n={n}, mu0={mu0}, mu_a={mu_a}, mu_b={mu_b}): trace {trace_form:.3e} vs norm^2 {norm_sq:.3e}")]
    InternalInconsistency {
        n: usize,
        mu0: usize,
        mu_a: usize,
        mu_b: usize,
        trace_form: f64,
        norm_sq: f64,
    },
}

/// Suppression factor for approximate decoherence; must satisfy 0 < eps < 1.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Epsilon(f64);

impl Epsilon {
    pub fn new(value: f64) -> Result<Self, CriteriaError> {
        if value > 0.0 && value < 1.0 && value.is_finite() {
            Ok(Epsilon(value))
        } else {
            Err(CriteriaError::InvalidEpsilon(value))
        }
    }

    pub fn value(&self) -> f64 {
        self.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Pass,
    Fail,
}

impl Verdict {
    pub fn is_pass(&self) -> bool {
        matches!(self, Verdict::Pass)
    }
}

/// Locator for the worst violation found by a check.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Witness {
    HistoryPair {
        /// Index into the list of states scanned, when more than one.
        #[serde(skip_serializing_if = "Option::is_none")]
        state: Option<usize>,
        k: usize,
        alpha: Vec<usize>,
        alpha_code: usize,
        beta: Vec<usize>,
        beta_code: usize,
    },
    Commutator {
        n: usize,
        mu_a: usize,
        mu_b: usize,
    },
    LoopTriple {
        n: usize,
        mu0: usize,
        mu_a: usize,
        mu_b: usize,
    },
    BlockUnit {
        mu: usize,
        row: usize,
        col: usize,
    },
}

/// Structured verdict of a criterion check.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CheckReport {
    pub check: String,
    pub verdict: Verdict,
    /// Magnitude of the worst violation (or worst margin when passing).
    pub worst_value: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<Witness>,
    pub params: serde_json::Value,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub horizon_note: Option<String>,
}

impl CheckReport {
    pub fn passed(&self) -> bool {
        self.verdict.is_pass()
    }
}

fn worst_off_diagonal(g: &DecoherenceGram) -> (f64, Option<(usize, usize)>) {
    let mut worst = 0.0f64;
    let mut arg = None;
    for a in 0..g.len() {
        for b in (a + 1)..g.len() {
            let v = g.get(a, b).norm();
            if v > worst {
                worst = v;
                arg = Some((a, b));
            }
        }
    }
    (worst, arg)
}

fn pair_witness(state: Option<usize>, k: usize, m: usize, a: usize, b: usize) -> Witness {
    Witness::HistoryPair {
        state,
        k,
        alpha: History::from_code(a, k, m).0,
        alpha_code: a,
        beta: History::from_code(b, k, m).0,
        beta_code: b,
    }
}

/// Exact medium decoherence: all off-diagonal |D[alpha, beta]| <= tol.
pub fn check_exact(
    u: &CMatrix,
    p: &ProjectivePartition,
    rho: &DensityOperator,
    k: usize,
    tol: f64,
    cfg: &GramConfig,
) -> Result<CheckReport, CriteriaError> {
    let g = full_gram(u, p, rho, k, cfg)?;
    let (worst, arg) = worst_off_diagonal(&g);
    let verdict = if worst <= tol { Verdict::Pass } else { Verdict::Fail };
    Ok(CheckReport {
        check: "exact".into(),
        verdict,
        worst_value: worst,
        witness: match verdict {
            Verdict::Fail => arg.map(|(a, b)| pair_witness(None, k, p.len(), a, b)),
            Verdict::Pass => None,
        },
        params: json!({ "k": k, "tol": tol }),
        horizon_note: None,
    })
}

/// Exact decoherence over every partition state and every k <= k_max
/// (Theorem 1 statement (a), finite-horizon form).
pub fn check_exact_all_partition_states(
    u: &CMatrix,
    p: &ProjectivePartition,
    k_max: usize,
    tol: f64,
    cfg: &GramConfig,
) -> Result<CheckReport, CriteriaError> {
    let mut worst = 0.0f64;
    let mut witness = None;
    for (nu, rho) in p.partition_states().iter().enumerate() {
        for k in 1..=k_max {
            let g = full_gram(u, p, rho, k, cfg)?;
            let (v, arg) = worst_off_diagonal(&g);
            if v > worst {
                worst = v;
                witness = arg.map(|(a, b)| pair_witness(Some(nu), k, p.len(), a, b));
            }
        }
    }
    let verdict = if worst <= tol { Verdict::Pass } else { Verdict::Fail };
    Ok(CheckReport {
        check: "exact_all_partition_states".into(),
        verdict,
        worst_value: worst,
        witness: if verdict.is_pass() { None } else { witness },
        params: json!({ "k_max": k_max, "tol": tol }),
        horizon_note: Some(format!("pass up to horizon k_max={k_max}")),
    })
}

/// Full c(n, mu_a, mu_b) table of commutator HS norms
/// ||[U^n P_mu_a U^{dagger n}, P_mu_b]||_2 for 1 <= n <= n_max.
pub fn commutator_table(
    u: &CMatrix,
    p: &ProjectivePartition,
    n_max: usize,
) -> Vec<(usize, usize, usize, f64)> {
    let m = p.len();
    let mut table = Vec::with_capacity(n_max * m * m);
    let mut u_n = CMatrix::identity(u.dim());
    for n in 1..=n_max {
        // iterated multiplication, no re-unitarization; drift is far below
        // all tolerances at this scale
        u_n = u.mul(&u_n);
        let u_n_dag = u_n.adjoint();
        for mu_a in 0..m {
            let q = u_n.mul(p.projector(mu_a)).mul(&u_n_dag);
            for mu_b in 0..m {
                table.push((n, mu_a, mu_b, q.commutator(p.projector(mu_b)).hs_norm()));
            }
        }
    }
    table
}

/// Theorem 1 statement (b), finite-horizon form: all iterated commutators
/// vanish to tolerance for n <= n_max.
pub fn check_commutators(
    u: &CMatrix,
    p: &ProjectivePartition,
    n_max: usize,
    tol: f64,
) -> CheckReport {
    let table = commutator_table(u, p, n_max);
    let mut worst = 0.0f64;
    let mut arg = None;
    for &(n, mu_a, mu_b, v) in &table {
        if v > worst {
            worst = v;
            arg = Some(Witness::Commutator { n, mu_a, mu_b });
        }
    }
    let verdict = if worst <= tol { Verdict::Pass } else { Verdict::Fail };
    CheckReport {
        check: "commutators".into(),
        verdict,
        worst_value: worst,
        witness: if verdict.is_pass() { None } else { arg },
        params: json!({ "n_max": n_max, "tol": tol }),
        horizon_note: Some(format!("pass up to horizon n_max={n_max}")),
    }
}

/// Theorem 1 statement (c), sampled: exact decoherence over random
/// densities, partition states, and projected-classical random states.
pub fn check_exact_all_states(
    u: &CMatrix,
    p: &ProjectivePartition,
    k_max: usize,
    trials: usize,
    tol: f64,
    seed: u64,
    cfg: &GramConfig,
) -> Result<CheckReport, CriteriaError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut states: Vec<DensityOperator> = p.partition_states();
    for _ in 0..trials {
        let rho = random_density_from_rng(p.dim(), &mut rng);
        states.push(p.project_classical(&rho));
        states.push(rho);
    }
    let mut worst = 0.0f64;
    let mut witness = None;
    for (si, rho) in states.iter().enumerate() {
        for k in 1..=k_max {
            let g = full_gram(u, p, rho, k, cfg)?;
            let (v, arg) = worst_off_diagonal(&g);
            if v > worst {
                worst = v;
                witness = arg.map(|(a, b)| pair_witness(Some(si), k, p.len(), a, b));
            }
        }
    }
    let verdict = if worst <= tol { Verdict::Pass } else { Verdict::Fail };
    Ok(CheckReport {
        check: "exact_all_states".into(),
        verdict,
        worst_value: worst,
        witness: if verdict.is_pass() { None } else { witness },
        params: json!({ "k_max": k_max, "trials": trials, "tol": tol, "seed": seed }),
        horizon_note: Some(format!("sampled states, pass up to horizon k_max={k_max}")),
    })
}

/// Classicality preservation: U maps block-diagonal states to
/// block-diagonal states. Checked on an operator basis of each block
/// (matrix units over the block's orthonormal frame), which is complete
/// because the condition is linear.
pub fn check_classicality_preservation(
    u: &CMatrix,
    p: &ProjectivePartition,
    tol: f64,
) -> CheckReport {
    let d = p.dim();
    let mut worst = 0.0f64;
    let mut arg = None;
    for mu in 0..p.len() {
        let frame = p.block_frame(mu);
        for (a, va) in frame.iter().enumerate() {
            for (b, vb) in frame.iter().enumerate() {
                let unit = CMatrix::outer(va, vb);
                let evolved = u.mul(&unit).mul(&u.adjoint());
                let mut block_part = CMatrix::zeros(d);
                for q in p.projectors() {
                    block_part = block_part.add(&q.mul(&evolved).mul(q));
                }
                let residual = evolved.sub(&block_part).hs_norm();
                if residual > worst {
                    worst = residual;
                    arg = Some(Witness::BlockUnit { mu, row: a, col: b });
                }
            }
        }
    }
    let verdict = if worst <= tol { Verdict::Pass } else { Verdict::Fail };
    CheckReport {
        check: "classicality_preservation".into(),
        verdict,
        worst_value: worst,
        witness: if verdict.is_pass() { None } else { arg },
        params: json!({ "tol": tol }),
        horizon_note: None,
    }
}

fn approx_check(
    name: &str,
    g: &DecoherenceGram,
    eps: Epsilon,
    divisor: f64,
    real_part_only: bool,
    p_null: f64,
    extra_params: serde_json::Value,
) -> CheckReport {
    let mut worst_ratio = 0.0f64;
    let mut arg = None;
    let mut skipped = 0usize;
    let mut fail = false;
    for a in 0..g.len() {
        for b in (a + 1)..g.len() {
            let da = g.get(a, a).re;
            let db = g.get(b, b).re;
            let z = g.get(a, b);
            let lhs = if real_part_only { z.re.abs() } else { z.norm() };
            if da > p_null && db > p_null {
                let rhs = eps.value() * (da * db).sqrt() / divisor;
                let ratio = lhs / rhs;
                if lhs >= rhs {
                    fail = true;
                }
                if ratio > worst_ratio {
                    worst_ratio = ratio;
                    arg = Some((a, b));
                }
            } else {
                // zero-probability branches: absolute fallback so exact
                // zeros still pass
                skipped += 1;
                let rhs = eps.value() * p_null;
                let abs_lhs = z.norm();
                if abs_lhs > rhs {
                    fail = true;
                    let ratio = abs_lhs / rhs;
                    if ratio > worst_ratio {
                        worst_ratio = ratio;
                        arg = Some((a, b));
                    }
                }
            }
        }
    }
    let verdict = if fail { Verdict::Fail } else { Verdict::Pass };
    let mut params = extra_params;
    params["eps"] = json!(eps.value());
    params["p_null"] = json!(p_null);
    params["skipped_null_pairs"] = json!(skipped);
    CheckReport {
        check: name.into(),
        verdict,
        worst_value: worst_ratio,
        witness: if fail {
            arg.map(|(a, b)| pair_witness(None, g.k(), g.m(), a, b))
        } else {
            None
        },
        params,
        horizon_note: None,
    }
}

/// Approximate decoherence: |D[a,b]| < eps * sqrt(D[a,a] D[b,b]) strictly,
/// for all pairs with non-null diagonals. With `real_part_only` the
/// left-hand side is |Re D[a,b]| instead.
pub fn check_approx_dh(
    u: &CMatrix,
    p: &ProjectivePartition,
    rho: &DensityOperator,
    k: usize,
    eps: Epsilon,
    real_part_only: bool,
    p_null: f64,
    cfg: &GramConfig,
) -> Result<CheckReport, CriteriaError> {
    let g = full_gram(u, p, rho, k, cfg)?;
    let name = if real_part_only { "approx_dh_re" } else { "approx_dh" };
    Ok(approx_check(
        name,
        &g,
        eps,
        1.0,
        real_part_only,
        p_null,
        json!({ "k": k }),
    ))
}

/// Strong approximate decoherence: the right-hand side is additionally
/// divided by the exact history count m^k, which makes every probability
/// sum rule hold to order eps.
pub fn check_approx_strong(
    u: &CMatrix,
    p: &ProjectivePartition,
    rho: &DensityOperator,
    k: usize,
    eps: Epsilon,
    p_null: f64,
    cfg: &GramConfig,
) -> Result<CheckReport, CriteriaError> {
    let g = full_gram(u, p, rho, k, cfg)?;
    let count = g.len() as f64;
    Ok(approx_check(
        "approx_strong",
        &g,
        eps,
        count,
        false,
        p_null,
        json!({ "k": k, "history_count": g.len() }),
    ))
}

/// Loop condition: |Tr[P_b (U^n P_0 U^{dagger n}) P_a (U^n P_0 U^{dagger n}) P_b]| < d*eps
/// for all n <= n_max and all triples with a != b. Also evaluates the
/// equivalent squared-norm form ||P_a (U^n P_0 U^{dagger n}) P_b||_2 < sqrt(d*eps)
/// and errors out if the two forms disagree.
pub fn check_loop_condition(
    u: &CMatrix,
    p: &ProjectivePartition,
    n_max: usize,
    eps: Epsilon,
) -> Result<CheckReport, CriteriaError> {
    let d = p.dim() as f64;
    let m = p.len();
    let bound = d * eps.value();
    let mut worst = 0.0f64;
    let mut arg = None;
    let mut u_n = CMatrix::identity(p.dim());
    for n in 1..=n_max {
        u_n = u.mul(&u_n);
        let u_n_dag = u_n.adjoint();
        for mu0 in 0..m {
            let q = u_n.mul(p.projector(mu0)).mul(&u_n_dag);
            for mu_a in 0..m {
                for mu_b in 0..m {
                    if mu_a == mu_b {
                        continue;
                    }
                    let pa = p.projector(mu_a);
                    let pb = p.projector(mu_b);
                    let trace_form = pb.mul(&q).mul(pa).mul(&q).mul(pb).trace().norm();
                    let norm_form = pa.mul(&q).mul(pb).hs_norm();
                    let norm_sq = norm_form * norm_form;
                    if (trace_form - norm_sq).abs() > 1e-9 {
                        return Err(CriteriaError::InternalInconsistency {
                            n,
                            mu0,
                            mu_a,
                            mu_b,
                            trace_form,
                            norm_sq,
                        });
                    }
                    if trace_form > worst {
                        worst = trace_form;
                        arg = Some(Witness::LoopTriple { n, mu0, mu_a, mu_b });
                    }
                }
            }
        }
    }
    let verdict = if worst < bound { Verdict::Pass } else { Verdict::Fail };
    Ok(CheckReport {
        check: "loop_condition".into(),
        verdict,
        worst_value: worst,
        witness: if verdict.is_pass() { None } else { arg },
        params: json!({ "n_max": n_max, "eps": eps.value(), "bound": bound }),
        horizon_note: Some(format!("pass up to horizon n_max={n_max}")),
    })
}

/// Commutator norm bound: every iterated commutator HS norm must stay
/// strictly below 2 d^{3/2} sqrt(eps) for n <= n_max.
pub fn check_theorem2_bound(
    u: &CMatrix,
    p: &ProjectivePartition,
    n_max: usize,
    eps: Epsilon,
) -> CheckReport {
    let d = p.dim() as f64;
    let m = p.len();
    let threshold = 2.0 * d.powf(1.5) * eps.value().sqrt();
    // intermediate per-pair sum bound from the triangle-inequality chain
    let per_pair_bound = 2.0 * (m.saturating_sub(1)) as f64 * (d * eps.value()).sqrt();
    let table = commutator_table(u, p, n_max);
    let mut worst = 0.0f64;
    let mut arg = None;
    for &(n, mu_a, mu_b, v) in &table {
        if v > worst {
            worst = v;
            arg = Some(Witness::Commutator { n, mu_a, mu_b });
        }
    }
    let verdict = if worst < threshold { Verdict::Pass } else { Verdict::Fail };
    CheckReport {
        check: "theorem2_bound".into(),
        verdict,
        worst_value: worst,
        witness: if verdict.is_pass() { None } else { arg },
        params: json!({
            "n_max": n_max,
            "eps": eps.value(),
            "threshold": threshold,
            "per_pair_sum_bound": per_pair_bound,
        }),
        horizon_note: Some(format!("pass up to horizon n_max={n_max}")),
    }
}
