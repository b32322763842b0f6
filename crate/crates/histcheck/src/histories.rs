//! Histories, class/branch operators, and the decoherence functional.
//!
//! Histories of length k over an m-block partition are enumerated in
//! lexicographic order, identified with base-m integers whose most
//! significant digit is the first time step.

use crate::linalg::{CMatrix, C64};
use crate::partition::{DensityOperator, ProjectivePartition};
use crate::{DEFAULT_BUDGET, DEFAULT_P_NULL};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum HistoriesError {
    #[error("history count {count} exceeds budget {budget}")]
    BudgetExceeded { count: usize, budget: usize },
    #[error("histories have different lengths ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("history index {index} out of range for m = {m}")]
    IndexOutOfRange { index: usize, m: usize },
    #[error("Gram diagonal entry {index} is {value:.3e}, below -1e-9: corrupted Gram")]
    CorruptGram { index: usize, value: f64 },
    #[error("grouping is not a disjoint cover of all histories")]
    BadGrouping,
}

/// Length-k sequence of partition indices, first time step first.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct History(pub Vec<usize>);

impl History {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Lexicographic code: base-m integer with the first index most
    /// significant.
    pub fn code(&self, m: usize) -> usize {
        self.0.iter().fold(0, |acc, &a| acc * m + a)
    }

    pub fn from_code(code: usize, k: usize, m: usize) -> Self {
        let mut idx = vec![0; k];
        let mut c = code;
        for j in (0..k).rev() {
            idx[j] = c % m;
            c /= m;
        }
        History(idx)
    }
}

/// Checked m^k with budget enforcement.
pub fn history_count(m: usize, k: usize, budget: usize) -> Result<usize, HistoriesError> {
    let mut count: usize = 1;
    for _ in 0..k {
        count = count
            .checked_mul(m)
            .filter(|&c| c <= budget)
            .ok_or(HistoriesError::BudgetExceeded {
                count: usize::MAX,
                budget,
            })?;
    }
    Ok(count)
}

/// All m^k histories of length k, in lexicographic order.
pub fn enumerate_histories(
    m: usize,
    k: usize,
    budget: usize,
) -> Result<impl Iterator<Item = History>, HistoriesError> {
    let count = history_count(m, k, budget)?;
    Ok((0..count).map(move |code| History::from_code(code, k, m)))
}

/// Branch operator B = P_{a_k} U ... P_{a_1} U.
pub fn branch_operator(h: &History, u: &CMatrix, p: &ProjectivePartition) -> CMatrix {
    let mut acc = CMatrix::identity(u.dim());
    for &a in &h.0 {
        acc = p.projector(a).mul(&u.mul(&acc));
    }
    acc
}

/// Class operator C = U^{dagger k} P_{a_k} U P_{a_{k-1}} U ... P_{a_1} U.
pub fn class_operator(h: &History, u: &CMatrix, p: &ProjectivePartition) -> CMatrix {
    u.adjoint().pow(h.len()).mul(&branch_operator(h, u, p))
}

/// D[h_a, h_b] = Tr[C_a rho C_b^dagger]; evaluated through branch operators
/// (equal by trace cyclicity since C = U^{dagger k} B).
pub fn decoherence_functional(
    h_a: &History,
    h_b: &History,
    u: &CMatrix,
    p: &ProjectivePartition,
    rho: &DensityOperator,
) -> Result<C64, HistoriesError> {
    if h_a.len() != h_b.len() {
        return Err(HistoriesError::LengthMismatch(h_a.len(), h_b.len()));
    }
    for h in [h_a, h_b] {
        for &a in &h.0 {
            if a >= p.len() {
                return Err(HistoriesError::IndexOutOfRange { index: a, m: p.len() });
            }
        }
    }
    let ba = branch_operator(h_a, u, p);
    let bb = branch_operator(h_b, u, p);
    Ok(pair_value(&ba.mul(rho.matrix()), &bb))
}

/// Tr[R B^dagger] with R = B_a rho already formed.
fn pair_value(r: &CMatrix, b: &CMatrix) -> C64 {
    r.entries()
        .iter()
        .zip(b.entries())
        .map(|(x, y)| x * y.conj())
        .sum()
}

/// Knobs for Gram assembly.
#[derive(Debug, Clone)]
pub struct GramConfig {
    /// Cap on the number of histories m^k.
    pub budget: usize,
    /// Prefix operators with HS norm at or below this prune their subtree.
    pub prune_threshold: f64,
}

impl Default for GramConfig {
    fn default() -> Self {
        GramConfig {
            budget: DEFAULT_BUDGET,
            prune_threshold: 1e-14,
        }
    }
}

/// m^k x m^k matrix of decoherence-functional values over all histories.
#[derive(Debug, Clone)]
pub struct DecoherenceGram {
    m: usize,
    k: usize,
    n: usize,
    entries: Vec<C64>,
}

impl DecoherenceGram {
    pub fn m(&self) -> usize {
        self.m
    }

    pub fn k(&self) -> usize {
        self.k
    }

    /// Number of histories m^k.
    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    #[inline]
    pub fn get(&self, alpha: usize, beta: usize) -> C64 {
        self.entries[alpha * self.n + beta]
    }

    /// Diagonal probabilities. Small negative rounding noise in
    /// [-1e-12, 0) is clamped to zero; anything below -1e-9 is an error.
    pub fn probabilities(&self) -> Result<Vec<f64>, HistoriesError> {
        let mut probs = Vec::with_capacity(self.n);
        for a in 0..self.n {
            let v = self.get(a, a).re;
            if v < -1e-9 {
                return Err(HistoriesError::CorruptGram { index: a, value: v });
            }
            probs.push(v.max(0.0));
        }
        Ok(probs)
    }

    pub fn total_sum(&self) -> C64 {
        self.entries.iter().sum()
    }

    /// Worst deviation from Hermiticity over history pairs.
    pub fn hermiticity_residual(&self) -> f64 {
        let mut worst = 0.0f64;
        for a in 0..self.n {
            for b in 0..self.n {
                worst = worst.max((self.get(a, b) - self.get(b, a).conj()).norm());
            }
        }
        worst
    }

    /// Sparse JSON export: entries with modulus above the threshold only.
    pub fn to_sparse_json(&self, export_threshold: f64) -> serde_json::Value {
        let entries: Vec<(usize, usize, f64, f64)> = (0..self.n)
            .flat_map(|a| (0..self.n).map(move |b| (a, b)))
            .filter_map(|(a, b)| {
                let z = self.get(a, b);
                (z.norm() > export_threshold).then_some((a, b, z.re, z.im))
            })
            .collect();
        serde_json::json!({ "k": self.k, "m": self.m, "entries": entries })
    }

    /// Indices of histories whose diagonal entry is at or below p_null.
    pub fn null_histories(&self, p_null: f64) -> Vec<usize> {
        (0..self.n).filter(|&a| self.get(a, a).re <= p_null).collect()
    }
}

/// Branch operators for all m^k histories, built along a prefix tree so each
/// length-j prefix product is formed once. A prefix whose running operator
/// has vanished prunes its entire subtree (all descendants are exactly zero).
pub fn branch_operators(
    u: &CMatrix,
    p: &ProjectivePartition,
    k: usize,
    cfg: &GramConfig,
) -> Result<Vec<CMatrix>, HistoriesError> {
    let m = p.len();
    let count = history_count(m, k, cfg.budget)?;
    let mut out = vec![CMatrix::zeros(u.dim()); count];
    let root = CMatrix::identity(u.dim());
    extend_prefix(u, p, k, cfg, &root, 0, 0, &mut out);
    Ok(out)
}

fn extend_prefix(
    u: &CMatrix,
    p: &ProjectivePartition,
    k: usize,
    cfg: &GramConfig,
    acc: &CMatrix,
    depth: usize,
    code: usize,
    out: &mut [CMatrix],
) {
    if depth == k {
        out[code] = acc.clone();
        return;
    }
    let m = p.len();
    let advanced = u.mul(acc);
    for a in 0..m {
        let next = p.projector(a).mul(&advanced);
        let child = code * m + a;
        if next.hs_norm() <= cfg.prune_threshold {
            // descendants stay zero-initialized
            continue;
        }
        extend_prefix(u, p, k, cfg, &next, depth + 1, child, out);
    }
}

/// Full decoherence Gram over all m^k histories.
pub fn full_gram(
    u: &CMatrix,
    p: &ProjectivePartition,
    rho: &DensityOperator,
    k: usize,
    cfg: &GramConfig,
) -> Result<DecoherenceGram, HistoriesError> {
    let branches = branch_operators(u, p, k, cfg)?;
    let n = branches.len();
    let weighted: Vec<CMatrix> = branches.iter().map(|b| b.mul(rho.matrix())).collect();
    let mut entries = vec![C64::new(0.0, 0.0); n * n];
    for a in 0..n {
        for b in 0..=a {
            let v = pair_value(&weighted[a], &branches[b]);
            entries[a * n + b] = v;
            entries[b * n + a] = v.conj();
        }
    }
    Ok(DecoherenceGram {
        m: p.len(),
        k,
        n,
        entries,
    })
}

/// Result of a probability-sum-rule check over a coarse-graining.
#[derive(Debug, Clone, Serialize)]
pub struct CoarseGrainReport {
    /// Largest |interference term| over groups.
    pub max_violation: f64,
    /// Index (into the supplied grouping) of the worst group.
    pub worst_group: usize,
}

/// Interference terms of a coarse-graining: for each group G the difference
/// between the group's summed functional and its summed probabilities.
pub fn coarse_grain_check(
    g: &DecoherenceGram,
    grouping: &[Vec<usize>],
) -> Result<CoarseGrainReport, HistoriesError> {
    let mut seen = vec![false; g.len()];
    for group in grouping {
        for &a in group {
            if a >= g.len() || seen[a] {
                return Err(HistoriesError::BadGrouping);
            }
            seen[a] = true;
        }
    }
    if !seen.iter().all(|&s| s) {
        return Err(HistoriesError::BadGrouping);
    }
    let mut max_violation = 0.0f64;
    let mut worst_group = 0;
    for (gi, group) in grouping.iter().enumerate() {
        let mut total = C64::new(0.0, 0.0);
        let mut diag = C64::new(0.0, 0.0);
        for &a in group {
            diag += g.get(a, a);
            for &b in group {
                total += g.get(a, b);
            }
        }
        let violation = (total - diag).norm();
        if violation > max_violation {
            max_violation = violation;
            worst_group = gi;
        }
    }
    Ok(CoarseGrainReport {
        max_violation,
        worst_group,
    })
}

/// Derives p_null-style null flags for ratio-based checks.
pub fn default_p_null() -> f64 {
    DEFAULT_P_NULL
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::haar_random_unitary;
    use crate::partition::{partition_from_basis_groups, random_density, DensityOperator};

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn hadamard() -> CMatrix {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        CMatrix::from_rows(vec![
            vec![c(s, 0.0), c(s, 0.0)],
            vec![c(s, 0.0), c(-s, 0.0)],
        ])
        .unwrap()
    }

    fn fine(d: usize) -> ProjectivePartition {
        let groups: Vec<Vec<usize>> = (0..d).map(|i| vec![i]).collect();
        partition_from_basis_groups(d, &groups).unwrap()
    }

    fn ket0_density() -> DensityOperator {
        DensityOperator::from_positive_form(CMatrix::from_fn(2, |i, j| {
            if i == 0 && j == 0 {
                c(1.0, 0.0)
            } else {
                c(0.0, 0.0)
            }
        }))
    }

    #[test]
    fn enumeration_is_lexicographic_and_complete() {
        let hs: Vec<History> = enumerate_histories(2, 3, DEFAULT_BUDGET).unwrap().collect();
        assert_eq!(hs.len(), 8);
        assert_eq!(hs[0], History(vec![0, 0, 0]));
        assert_eq!(hs[7], History(vec![1, 1, 1]));
        for (code, h) in hs.iter().enumerate() {
            assert_eq!(h.code(2), code);
        }
        let single: Vec<History> = enumerate_histories(1, 5, DEFAULT_BUDGET).unwrap().collect();
        assert_eq!(single, vec![History(vec![0; 5])]);
        assert_eq!(enumerate_histories(3, 2, DEFAULT_BUDGET).unwrap().count(), 9);
    }

    #[test]
    fn enumeration_budget_enforced() {
        assert!(matches!(
            enumerate_histories(5, 9, DEFAULT_BUDGET),
            Err(HistoriesError::BudgetExceeded { .. })
        ));
        assert!(enumerate_histories(4, 10, DEFAULT_BUDGET).is_ok()); // 4^10 = 2^20
    }

    #[test]
    fn class_operator_identity_dynamics() {
        let p = fine(2);
        let u = CMatrix::identity(2);
        let constant = History(vec![1, 1, 1]);
        assert!(class_operator(&constant, &u, &p).sub(p.projector(1)).hs_norm() < 1e-15);
        let mixed = History(vec![0, 1, 0]);
        assert!(class_operator(&mixed, &u, &p).hs_norm() < 1e-15);
    }

    #[test]
    fn class_operator_single_step() {
        let p = fine(2);
        let u = haar_random_unitary(2, 3);
        let h = History(vec![1]);
        let want = u.adjoint().mul(p.projector(1)).mul(&u);
        assert!(class_operator(&h, &u, &p).sub(&want).hs_norm() < 1e-13);
    }

    #[test]
    fn hadamard_operators_match_hand_products() {
        let p = fine(2);
        let h = hadamard();
        // C_(0,1) = H^{dagger 2} P1 H P0 H = P1 H P0 H since H^2 = I
        let want01 =
            CMatrix::from_rows(vec![vec![c(0.0, 0.0); 2], vec![c(0.5, 0.0), c(0.5, 0.0)]])
                .unwrap();
        assert!(class_operator(&History(vec![0, 1]), &h, &p).sub(&want01).hs_norm() < 1e-14);
        assert!(branch_operator(&History(vec![0, 1]), &h, &p).sub(&want01).hs_norm() < 1e-14);
        let want10 = CMatrix::from_rows(vec![
            vec![c(0.5, 0.0), c(-0.5, 0.0)],
            vec![c(0.0, 0.0), c(0.0, 0.0)],
        ])
        .unwrap();
        assert!(branch_operator(&History(vec![1, 0]), &h, &p).sub(&want10).hs_norm() < 1e-14);
        let id = CMatrix::identity(2);
        assert!(branch_operator(&History(vec![0, 0]), &id, &p).sub(p.projector(0)).hs_norm() == 0.0);
    }

    #[test]
    fn single_time_grams_are_diagonal() {
        let p = fine(3);
        let u = haar_random_unitary(3, 9);
        let rho = random_density(3, 4);
        let g = full_gram(&u, &p, &rho, 1, &GramConfig::default()).unwrap();
        for a in 0..3 {
            for b in 0..3 {
                if a != b {
                    assert!(g.get(a, b).norm() < 1e-12);
                }
            }
        }
        let probs = g.probabilities().unwrap();
        assert!((probs.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        // diagonal equals Tr[P_a U rho U^dagger]
        let evolved = u.mul(rho.matrix()).mul(&u.adjoint());
        for a in 0..3 {
            let want = p.projector(a).mul(&evolved).trace().re;
            assert!((probs[a] - want).abs() < 1e-12);
        }
    }

    #[test]
    fn hadamard_k2_gram_values() {
        let p = fine(2);
        let g = full_gram(&hadamard(), &p, &ket0_density(), 2, &GramConfig::default()).unwrap();
        for a in 0..4 {
            assert!((g.get(a, a).re - 0.25).abs() < 1e-14);
            assert!(g.get(a, a).im.abs() < 1e-14);
        }
        // codes: (0,0) -> 0, (1,0) -> 2
        let d = g.get(0, 2);
        assert!((d.re - 0.25).abs() < 1e-14 && d.im.abs() < 1e-14);
        for a in 0..4 {
            for b in 0..4 {
                let n = g.get(a, b).norm();
                assert!(n < 1e-14 || (n - 0.25).abs() < 1e-14);
            }
        }
        let probs = g.probabilities().unwrap();
        assert_eq!(probs.len(), 4);
        for p in probs {
            assert!((p - 0.25).abs() < 1e-14);
        }
    }

    #[test]
    fn identity_dynamics_gram_is_diagonal_on_constants() {
        let p = fine(2);
        let rho = DensityOperator::new(
            CMatrix::from_fn(2, |i, j| {
                if i == j {
                    c(if i == 0 { 0.3 } else { 0.7 }, 0.0)
                } else {
                    c(0.0, 0.0)
                }
            }),
            1e-10,
        )
        .unwrap();
        let g = full_gram(&CMatrix::identity(2), &p, &rho, 2, &GramConfig::default()).unwrap();
        let probs = g.probabilities().unwrap();
        assert!((probs[0] - 0.3).abs() < 1e-14); // (0,0)
        assert!((probs[3] - 0.7).abs() < 1e-14); // (1,1)
        assert!(probs[1].abs() < 1e-14 && probs[2].abs() < 1e-14);
        for a in 0..4 {
            for b in 0..4 {
                if a != b {
                    assert!(g.get(a, b).norm() < 1e-14);
                }
            }
        }
    }

    #[test]
    fn gram_invariants_on_random_instances() {
        for seed in 0..10 {
            let d = 2 + (seed as usize % 3);
            let u = haar_random_unitary(d, seed);
            let p = fine(d);
            let rho = random_density(d, seed + 100);
            let g = full_gram(&u, &p, &rho, 2, &GramConfig::default()).unwrap();
            assert!(g.hermiticity_residual() < 1e-12);
            let total = g.total_sum();
            assert!((total.re - 1.0).abs() < 1e-10 && total.im.abs() < 1e-10);
            for a in 0..g.len() {
                assert!(g.get(a, a).re >= -1e-12);
            }
        }
    }

    #[test]
    fn gram_matches_pairwise_functional() {
        let d = 3;
        let u = haar_random_unitary(d, 21);
        let p = partition_from_basis_groups(d, &[vec![0], vec![1, 2]]).unwrap();
        let rho = random_density(d, 22);
        let k = 3;
        let g = full_gram(&u, &p, &rho, k, &GramConfig::default()).unwrap();
        for a in 0..g.len() {
            for b in 0..g.len() {
                let ha = History::from_code(a, k, p.len());
                let hb = History::from_code(b, k, p.len());
                let v = decoherence_functional(&ha, &hb, &u, &p, &rho).unwrap();
                assert!((g.get(a, b) - v).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn functional_linearity_under_history_summation() {
        // For a group G and fixed beta, sum of D[alpha, beta] equals the
        // functional of the summed class operator against C_beta.
        let d = 2;
        let u = haar_random_unitary(d, 31);
        let p = fine(d);
        let rho = random_density(d, 32);
        let k = 2;
        let g = full_gram(&u, &p, &rho, k, &GramConfig::default()).unwrap();
        let group = [0usize, 3];
        let beta = 1usize;
        let mut summed = CMatrix::zeros(d);
        for &a in &group {
            summed = summed.add(&class_operator(&History::from_code(a, k, 2), &u, &p));
        }
        let cb = class_operator(&History::from_code(beta, k, 2), &u, &p);
        let direct = summed.mul(rho.matrix()).mul(&cb.adjoint()).trace();
        let from_gram: C64 = group.iter().map(|&a| g.get(a, beta)).sum();
        assert!((direct - from_gram).norm() < 1e-12);
    }

    #[test]
    fn pruning_agrees_with_unpruned_evaluation() {
        // permutation dynamics makes most prefixes exactly null
        let perm = CMatrix::from_fn(4, |i, j| {
            if (i + 1) % 4 == j {
                c(1.0, 0.0)
            } else {
                c(0.0, 0.0)
            }
        });
        let p = fine(4);
        let cfg = GramConfig::default();
        let no_prune = GramConfig {
            prune_threshold: -1.0,
            ..GramConfig::default()
        };
        let a = branch_operators(&perm, &p, 3, &cfg).unwrap();
        let b = branch_operators(&perm, &p, 3, &no_prune).unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert!(x.sub(y).hs_norm() < 1e-12);
        }
    }

    #[test]
    fn probabilities_reject_corrupted_gram() {
        let g = DecoherenceGram {
            m: 2,
            k: 1,
            n: 2,
            entries: vec![c(-1e-3, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)],
        };
        assert!(matches!(
            g.probabilities(),
            Err(HistoriesError::CorruptGram { index: 0, .. })
        ));
    }

    #[test]
    fn coarse_grain_interference() {
        let p = fine(2);
        let g = full_gram(&hadamard(), &p, &ket0_density(), 2, &GramConfig::default()).unwrap();
        // singleton grouping: zero interference by construction
        let singles: Vec<Vec<usize>> = (0..4).map(|a| vec![a]).collect();
        assert_eq!(coarse_grain_check(&g, &singles).unwrap().max_violation, 0.0);
        // group {(0,0),(1,0)} = codes {0,2}: interference 2 Re D[0,2] = 1/2
        let report = coarse_grain_check(&g, &[vec![0, 2], vec![1, 3]]).unwrap();
        assert!((report.max_violation - 0.5).abs() < 1e-13);
        assert_eq!(report.worst_group, 0);
        // exactly decoherent Gram: all groupings fine
        let gd = full_gram(
            &CMatrix::identity(2),
            &p,
            &ket0_density(),
            2,
            &GramConfig::default(),
        )
        .unwrap();
        let report = coarse_grain_check(&gd, &[vec![0, 1, 2], vec![3]]).unwrap();
        assert!(report.max_violation < 1e-10);
        // bad groupings rejected
        assert!(matches!(
            coarse_grain_check(&g, &[vec![0, 1]]),
            Err(HistoriesError::BadGrouping)
        ));
        assert!(matches!(
            coarse_grain_check(&g, &[vec![0, 0, 1, 2, 3]]),
            Err(HistoriesError::BadGrouping)
        ));
    }

    #[test]
    fn sparse_export_drops_small_entries() {
        let p = fine(2);
        let g = full_gram(&CMatrix::identity(2), &p, &ket0_density(), 2, &GramConfig::default())
            .unwrap();
        let json = g.to_sparse_json(1e-14);
        let entries = json["entries"].as_array().unwrap();
        assert_eq!(entries.len(), 1); // only D[(0,0),(0,0)] = 1 survives
        assert_eq!(json["k"], 2);
        assert_eq!(json["m"], 2);
    }
}
