//! Projective partitions and density operators.
//!
//! A partition is a list of mutually orthogonal projectors summing to the
//! identity. Partition order is significant and preserved: history indices
//! refer to this order.

use crate::linalg::{gaussian_from_rng, CMatrix, C64};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum PartitionError {
    #[error("partition must contain at least one projector")]
    Empty,
    #[error("projector {index} has dimension {found}, expected {expected}")]
    DimMismatch {
        index: usize,
        found: usize,
        expected: usize,
    },
    #[error("operator {index} is not a projector (residual {residual:.3e})")]
    NotAProjector { index: usize, residual: f64 },
    #[error("projectors {i} and {j} are not orthogonal (|P_i P_j| = {residual:.3e})")]
    NotOrthogonal { i: usize, j: usize, residual: f64 },
    #[error("projectors do not sum to the identity (residual {residual:.3e})")]
    NotComplete { residual: f64 },
    #[error("projector {index} has non-integer trace {trace}")]
    BadRank { index: usize, trace: f64 },
    #[error("basis groups overlap or do not cover 0..d-1")]
    BadGroups,
}

#[derive(Debug, Error)]
pub enum DensityError {
    #[error("density operator is not Hermitian (residual {0:.3e})")]
    NotHermitian(f64),
    #[error("density operator trace is {0}, expected 1")]
    BadTrace(f64),
    #[error("density operator is not positive semidefinite (min eigenvalue ~ {0:.3e})")]
    NotPositive(f64),
}

/// Validated list of orthogonal projectors summing to the identity.
#[derive(Debug, Clone)]
pub struct ProjectivePartition {
    dim: usize,
    projectors: Vec<CMatrix>,
    ranks: Vec<usize>,
}

impl ProjectivePartition {
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Number of blocks m.
    pub fn len(&self) -> usize {
        self.projectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.projectors.is_empty()
    }

    pub fn projector(&self, mu: usize) -> &CMatrix {
        &self.projectors[mu]
    }

    pub fn projectors(&self) -> &[CMatrix] {
        &self.projectors
    }

    pub fn ranks(&self) -> &[usize] {
        &self.ranks
    }

    /// True iff all projectors are rank one (then m == d).
    pub fn is_fine_grained(&self) -> bool {
        self.ranks.iter().all(|&r| r == 1)
    }

    /// The normalized projectors P_nu / Tr[P_nu], one per block.
    pub fn partition_states(&self) -> Vec<DensityOperator> {
        self.projectors
            .iter()
            .zip(&self.ranks)
            .map(|(p, &r)| DensityOperator::from_positive_form(p.scale(C64::new(1.0 / r as f64, 0.0))))
            .collect()
    }

    /// Block-diagonal part sum_mu P_mu rho P_mu.
    pub fn project_classical(&self, rho: &DensityOperator) -> DensityOperator {
        let mut out = CMatrix::zeros(self.dim);
        for p in &self.projectors {
            out = out.add(&p.mul(rho.matrix()).mul(p));
        }
        DensityOperator::from_positive_form(out)
    }

    /// True iff rho is block-diagonal with respect to this partition.
    pub fn is_classical(&self, rho: &DensityOperator, tol: f64) -> bool {
        rho.matrix()
            .sub(self.project_classical(rho).matrix())
            .hs_norm()
            <= tol
    }

    /// Orthonormal frame spanning the range of block `mu`, obtained by
    /// Gram-Schmidt over the projector's columns. Length equals the rank.
    pub fn block_frame(&self, mu: usize) -> Vec<Vec<C64>> {
        let p = &self.projectors[mu];
        let d = self.dim;
        let rank = self.ranks[mu];
        let mut frame: Vec<Vec<C64>> = Vec::with_capacity(rank);
        for j in 0..d {
            if frame.len() == rank {
                break;
            }
            let mut v: Vec<C64> = (0..d).map(|i| p.get(i, j)).collect();
            for u in &frame {
                let proj: C64 = (0..d).map(|i| u[i].conj() * v[i]).sum();
                for i in 0..d {
                    let sub = proj * u[i];
                    v[i] -= sub;
                }
            }
            let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            if norm > 1e-8 {
                for z in v.iter_mut() {
                    *z /= norm;
                }
                frame.push(v);
            }
        }
        assert_eq!(frame.len(), rank, "block frame did not reach full rank");
        frame
    }
}

/// Checks Definition 1 and returns the validated partition, or the first
/// violated invariant with the offending index pair.
pub fn validate_partition(
    projectors: Vec<CMatrix>,
    tol: f64,
) -> Result<ProjectivePartition, PartitionError> {
    if projectors.is_empty() {
        return Err(PartitionError::Empty);
    }
    let dim = projectors[0].dim();
    for (i, p) in projectors.iter().enumerate() {
        if p.dim() != dim {
            return Err(PartitionError::DimMismatch {
                index: i,
                found: p.dim(),
                expected: dim,
            });
        }
        let herm = p.sub(&p.adjoint()).hs_norm();
        let idem = p.mul(p).sub(p).hs_norm();
        if herm > tol || idem > tol {
            return Err(PartitionError::NotAProjector {
                index: i,
                residual: herm.max(idem),
            });
        }
    }
    for i in 0..projectors.len() {
        for j in (i + 1)..projectors.len() {
            let residual = projectors[i].mul(&projectors[j]).hs_norm();
            if residual > tol {
                return Err(PartitionError::NotOrthogonal { i, j, residual });
            }
        }
    }
    let mut sum = CMatrix::zeros(dim);
    for p in &projectors {
        sum = sum.add(p);
    }
    let residual = sum.sub(&CMatrix::identity(dim)).hs_norm();
    if residual > tol {
        return Err(PartitionError::NotComplete { residual });
    }
    let mut ranks = Vec::with_capacity(projectors.len());
    for (i, p) in projectors.iter().enumerate() {
        let tr = p.trace().re;
        let r = tr.round();
        if (tr - r).abs() > tol.max(1e-9) || r < 1.0 {
            return Err(PartitionError::BadRank { index: i, trace: tr });
        }
        ranks.push(r as usize);
    }
    Ok(ProjectivePartition {
        dim,
        projectors,
        ranks,
    })
}

/// Computational-basis partition from disjoint index groups covering 0..d-1.
pub fn partition_from_basis_groups(
    d: usize,
    groups: &[Vec<usize>],
) -> Result<ProjectivePartition, PartitionError> {
    let mut seen = vec![false; d];
    for g in groups {
        for &i in g {
            if i >= d || seen[i] {
                return Err(PartitionError::BadGroups);
            }
            seen[i] = true;
        }
    }
    if groups.is_empty() || !seen.iter().all(|&s| s) {
        return Err(PartitionError::BadGroups);
    }
    let projectors = groups
        .iter()
        .map(|g| {
            let mut p = CMatrix::zeros(d);
            for &i in g {
                p.set(i, i, C64::new(1.0, 0.0));
            }
            p
        })
        .collect();
    validate_partition(projectors, 0.0)
}

/// Density operator: Hermitian, unit trace, positive semidefinite.
#[derive(Debug, Clone)]
pub struct DensityOperator {
    matrix: CMatrix,
}

impl DensityOperator {
    /// Validates all three invariants. Positivity is estimated by power
    /// iteration on a shifted matrix; constructively positive inputs can
    /// skip this via [`DensityOperator::from_positive_form`].
    pub fn new(matrix: CMatrix, tol: f64) -> Result<Self, DensityError> {
        let herm = matrix.sub(&matrix.adjoint()).hs_norm();
        if herm > tol {
            return Err(DensityError::NotHermitian(herm));
        }
        let tr = matrix.trace();
        if (tr.re - 1.0).abs() > tol || tr.im.abs() > tol {
            return Err(DensityError::BadTrace(tr.re));
        }
        let min_eig = min_eigenvalue_estimate(&matrix);
        if min_eig < -tol {
            return Err(DensityError::NotPositive(min_eig));
        }
        Ok(DensityOperator { matrix })
    }

    /// Accepts a matrix known to be PSD by construction (G G^dagger form,
    /// normalized projectors, block projections of valid densities).
    pub fn from_positive_form(matrix: CMatrix) -> Self {
        DensityOperator { matrix }
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.dim()
    }

    pub fn purity(&self) -> f64 {
        self.matrix.mul(&self.matrix).trace().re
    }
}

/// Smallest eigenvalue of a Hermitian matrix, estimated by power iteration
/// on c*I - A with c an upper bound on the spectrum.
fn min_eigenvalue_estimate(a: &CMatrix) -> f64 {
    let d = a.dim();
    let c = a.hs_norm() + 1.0;
    let shifted = CMatrix::identity(d).scale(C64::new(c, 0.0)).sub(a);
    let mut v: Vec<C64> = (0..d)
        .map(|i| C64::new(1.0 + (i as f64) * 0.37, 0.11 * (i as f64 + 1.0)))
        .collect();
    let mut lambda = 0.0;
    for _ in 0..200 {
        let mut w = vec![C64::new(0.0, 0.0); d];
        for i in 0..d {
            for j in 0..d {
                w[i] += shifted.get(i, j) * v[j];
            }
        }
        let norm = w.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if norm == 0.0 {
            return c; // A == c*I would be required; unreachable for densities
        }
        for z in w.iter_mut() {
            *z /= norm;
        }
        // Rayleigh quotient of the normalized iterate
        let mut aw = C64::new(0.0, 0.0);
        for i in 0..d {
            let mut row = C64::new(0.0, 0.0);
            for j in 0..d {
                row += shifted.get(i, j) * w[j];
            }
            aw += w[i].conj() * row;
        }
        lambda = aw.re;
        v = w;
    }
    c - lambda
}

/// Hilbert-Schmidt-random density: G G^dagger / Tr[G G^dagger].
pub fn random_density_from_rng(d: usize, rng: &mut impl rand::Rng) -> DensityOperator {
    let g = gaussian_from_rng(d, rng);
    let gg = g.mul(&g.adjoint());
    let tr = gg.trace().re;
    DensityOperator::from_positive_form(gg.scale(C64::new(1.0 / tr, 0.0)))
}

pub fn random_density(d: usize, seed: u64) -> DensityOperator {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    random_density_from_rng(d, &mut rng)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::haar_random_unitary;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn diag(vals: &[f64]) -> CMatrix {
        CMatrix::from_fn(vals.len(), |i, j| {
            if i == j {
                c(vals[i], 0.0)
            } else {
                c(0.0, 0.0)
            }
        })
    }

    fn fine(d: usize) -> ProjectivePartition {
        let groups: Vec<Vec<usize>> = (0..d).map(|i| vec![i]).collect();
        partition_from_basis_groups(d, &groups).unwrap()
    }

    #[test]
    fn validate_accepts_basis_partition() {
        let p = validate_partition(vec![diag(&[1.0, 0.0]), diag(&[0.0, 1.0])], 1e-10).unwrap();
        assert_eq!(p.ranks(), &[1, 1]);
        assert!(p.is_fine_grained());
    }

    #[test]
    fn validate_accepts_trivial_partition() {
        let p = validate_partition(vec![CMatrix::identity(3)], 1e-10).unwrap();
        assert_eq!(p.ranks(), &[3]);
        assert!(!p.is_fine_grained());
    }

    #[test]
    fn validate_rejects_overlapping_projectors() {
        let err = validate_partition(vec![diag(&[1.0, 0.0]), diag(&[1.0, 0.0])], 1e-10)
            .unwrap_err();
        assert!(matches!(err, PartitionError::NotOrthogonal { i: 0, j: 1, .. }));
    }

    #[test]
    fn validate_rejects_incomplete_partition() {
        let err = validate_partition(vec![diag(&[1.0, 0.0, 0.0])], 1e-10).unwrap_err();
        assert!(matches!(err, PartitionError::NotComplete { .. }));
    }

    #[test]
    fn validate_rejects_non_projector() {
        let nilp = CMatrix::from_rows(vec![
            vec![c(0.0, 0.0), c(1.0, 0.0)],
            vec![c(0.0, 0.0), c(0.0, 0.0)],
        ])
        .unwrap();
        let err = validate_partition(vec![nilp, diag(&[0.0, 1.0])], 1e-10).unwrap_err();
        assert!(matches!(err, PartitionError::NotAProjector { index: 0, .. }));
    }

    #[test]
    fn basis_groups_constructor() {
        let p = partition_from_basis_groups(3, &[vec![0], vec![1, 2]]).unwrap();
        assert_eq!(p.ranks(), &[1, 2]);
        assert!(!p.is_fine_grained());
        assert!(p.projector(1).sub(&diag(&[0.0, 1.0, 1.0])).hs_norm() == 0.0);
        assert!(matches!(
            partition_from_basis_groups(2, &[vec![0], vec![0, 1]]),
            Err(PartitionError::BadGroups)
        ));
    }

    #[test]
    fn partition_states_are_normalized_and_orthogonal() {
        let p = partition_from_basis_groups(3, &[vec![0], vec![1, 2]]).unwrap();
        let states = p.partition_states();
        assert!(states[1].matrix().sub(&diag(&[0.0, 0.5, 0.5])).hs_norm() < 1e-15);
        for s in &states {
            assert!((s.matrix().trace().re - 1.0).abs() < 1e-12);
        }
        // HS-orthogonality of distinct partition states
        let overlap = states[0].matrix().mul(states[1].matrix()).trace().re;
        assert!(overlap.abs() < 1e-14);

        let trivial = validate_partition(vec![CMatrix::identity(4)], 0.0).unwrap();
        let mm = &trivial.partition_states()[0];
        assert!(mm.matrix().sub(&CMatrix::identity(4).scale(c(0.25, 0.0))).hs_norm() < 1e-15);
    }

    #[test]
    fn classicality_and_projection() {
        let p = fine(2);
        let rho = DensityOperator::new(diag(&[0.5, 0.5]), 1e-10).unwrap();
        assert!(p.is_classical(&rho, 1e-10));
        let plus = DensityOperator::new(
            CMatrix::from_rows(vec![
                vec![c(0.5, 0.0), c(0.5, 0.0)],
                vec![c(0.5, 0.0), c(0.5, 0.0)],
            ])
            .unwrap(),
            1e-10,
        )
        .unwrap();
        assert!(!p.is_classical(&plus, 1e-10));
        let projected = p.project_classical(&plus);
        assert!(projected.matrix().sub(&diag(&[0.5, 0.5])).hs_norm() < 1e-12);
        // idempotence
        let twice = p.project_classical(&projected);
        assert!(twice.matrix().sub(projected.matrix()).hs_norm() < 1e-12);
        // trivial partition leaves everything classical
        let trivial = validate_partition(vec![CMatrix::identity(2)], 0.0).unwrap();
        assert!(trivial.is_classical(&plus, 1e-12));
        assert!(trivial.project_classical(&plus).matrix().sub(plus.matrix()).hs_norm() < 1e-12);
    }

    #[test]
    fn projection_preserves_trace_for_random_inputs() {
        let p = partition_from_basis_groups(4, &[vec![0, 2], vec![1], vec![3]]).unwrap();
        for seed in 0..20 {
            let rho = random_density(4, seed);
            let projected = p.project_classical(&rho);
            assert!((projected.matrix().trace().re - 1.0).abs() < 1e-12);
            assert!(p.is_classical(&projected, 1e-10));
        }
    }

    #[test]
    fn density_validation() {
        assert!(DensityOperator::new(diag(&[0.3, 0.7]), 1e-10).is_ok());
        assert!(matches!(
            DensityOperator::new(diag(&[0.3, 0.6]), 1e-10),
            Err(DensityError::BadTrace(_))
        ));
        assert!(matches!(
            DensityOperator::new(diag(&[1.5, -0.5]), 1e-10),
            Err(DensityError::NotPositive(_))
        ));
        let skew = CMatrix::from_rows(vec![
            vec![c(0.5, 0.0), c(0.1, 0.2)],
            vec![c(0.1, 0.1), c(0.5, 0.0)],
        ])
        .unwrap();
        assert!(matches!(
            DensityOperator::new(skew, 1e-10),
            Err(DensityError::NotHermitian(_))
        ));
    }

    #[test]
    fn random_density_is_valid_and_deterministic() {
        for seed in 0..10 {
            let rho = random_density(3, seed);
            assert!((rho.matrix().trace().re - 1.0).abs() < 1e-12);
            assert!(DensityOperator::new(rho.matrix().clone(), 1e-9).is_ok());
        }
        assert!(random_density(1, 0).matrix().sub(&CMatrix::identity(1)).hs_norm() < 1e-14);
        let a = random_density(4, 9);
        let b = random_density(4, 9);
        assert!(a.matrix().sub(b.matrix()).hs_norm() == 0.0);
    }

    #[test]
    fn random_density_mean_purity_matches_hs_measure() {
        // E[Tr rho^2] = (N+K)/(NK+1) = 4/5 at N=K=d=2 for G G^dagger / Tr.
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let n = 10_000;
        let mean: f64 = (0..n)
            .map(|_| random_density_from_rng(2, &mut rng).purity())
            .sum::<f64>()
            / n as f64;
        assert!((mean - 0.8).abs() < 0.02, "mean purity = {mean}");
    }

    #[test]
    fn block_frame_spans_projector() {
        let u = haar_random_unitary(4, 17);
        // rotate a coarse basis partition into a non-diagonal one
        let base = partition_from_basis_groups(4, &[vec![0, 1], vec![2], vec![3]]).unwrap();
        let projs: Vec<CMatrix> = base
            .projectors()
            .iter()
            .map(|p| u.mul(p).mul(&u.adjoint()))
            .collect();
        let p = validate_partition(projs, 1e-9).unwrap();
        assert_eq!(p.ranks(), &[2, 1, 1]);
        for mu in 0..p.len() {
            let frame = p.block_frame(mu);
            let mut sum = CMatrix::zeros(4);
            for v in &frame {
                sum = sum.add(&CMatrix::outer(v, v));
            }
            assert!(sum.sub(p.projector(mu)).hs_norm() < 1e-9);
        }
    }
}
