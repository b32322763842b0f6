//! JSON schemas for matrices, partitions, densities, and input bundles.
//!
//! A complex matrix is `{"dim": d, "entries": [[[re, im], ...], ...]}` with
//! row-major nesting. Partitions are given either as explicit projectors or
//! as computational-basis groups. A bundle pairs a unitary with a partition
//! and an optional initial state; when the state is omitted it defaults to
//! the first partition state.

use crate::linalg::{CMatrix, LinalgError, C64};
use crate::partition::{
    partition_from_basis_groups, validate_partition, DensityError, DensityOperator,
    PartitionError, ProjectivePartition,
};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum IoError {
    #[error("JSON parse error: {0}")]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Matrix(#[from] LinalgError),
    #[error(transparent)]
    Partition(#[from] PartitionError),
    #[error(transparent)]
    Density(#[from] DensityError),
    #[error("matrix dim field is {field} but {rows} rows were given")]
    DimMismatch { field: usize, rows: usize },
    #[error("unitary is {u} x {u} but the partition has dimension {p}")]
    BundleDimMismatch { u: usize, p: usize },
    #[error("initial state is {rho} x {rho} but the system has dimension {d}")]
    RhoDimMismatch { rho: usize, d: usize },
    #[error("matrix is not unitary to tolerance {tol} (residual {residual:.3e})")]
    NotUnitary { tol: f64, residual: f64 },
}

#[derive(Debug, Serialize, Deserialize)]
pub struct MatrixJson {
    pub dim: usize,
    pub entries: Vec<Vec<[f64; 2]>>,
}

impl MatrixJson {
    pub fn to_matrix(&self) -> Result<CMatrix, IoError> {
        if self.entries.len() != self.dim {
            return Err(IoError::DimMismatch {
                field: self.dim,
                rows: self.entries.len(),
            });
        }
        let rows = self
            .entries
            .iter()
            .map(|row| row.iter().map(|&[re, im]| C64::new(re, im)).collect())
            .collect();
        Ok(CMatrix::from_rows(rows)?)
    }

    pub fn from_matrix(m: &CMatrix) -> Self {
        let d = m.dim();
        MatrixJson {
            dim: d,
            entries: (0..d)
                .map(|i| {
                    (0..d)
                        .map(|j| {
                            let z = m.get(i, j);
                            [z.re, z.im]
                        })
                        .collect()
                })
                .collect(),
        }
    }
}

/// Partition input: explicit projectors or computational-basis groups.
#[derive(Debug, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PartitionJson {
    Projectors {
        dim: usize,
        projectors: Vec<MatrixJson>,
    },
    BasisGroups {
        dim: usize,
        basis_groups: Vec<Vec<usize>>,
    },
}

impl PartitionJson {
    pub fn to_partition(&self, tol: f64) -> Result<ProjectivePartition, IoError> {
        match self {
            PartitionJson::Projectors { projectors, .. } => {
                let mats = projectors
                    .iter()
                    .map(|m| m.to_matrix())
                    .collect::<Result<Vec<_>, _>>()?;
                Ok(validate_partition(mats, tol)?)
            }
            PartitionJson::BasisGroups { dim, basis_groups } => {
                Ok(partition_from_basis_groups(*dim, basis_groups)?)
            }
        }
    }
}

/// Density input: a complex matrix carrying a `"type": "density"` tag.
#[derive(Debug, Serialize, Deserialize)]
pub struct DensityJson {
    #[serde(rename = "type", default = "density_tag")]
    pub kind: String,
    pub dim: usize,
    pub entries: Vec<Vec<[f64; 2]>>,
}

fn density_tag() -> String {
    "density".into()
}

impl DensityJson {
    pub fn to_density(&self, tol: f64) -> Result<DensityOperator, IoError> {
        let m = MatrixJson {
            dim: self.dim,
            entries: self.entries.clone(),
        }
        .to_matrix()?;
        Ok(DensityOperator::new(m, tol)?)
    }
}

/// One input file bundling the unitary, the partition, and optionally the
/// initial state.
#[derive(Debug, Serialize, Deserialize)]
pub struct BundleJson {
    pub unitary: MatrixJson,
    pub partition: PartitionJson,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rho: Option<DensityJson>,
}

/// Fully validated bundle.
pub struct Bundle {
    pub unitary: CMatrix,
    pub partition: ProjectivePartition,
    pub rho: DensityOperator,
}

impl BundleJson {
    pub fn validate(&self, tol: f64) -> Result<Bundle, IoError> {
        let unitary = self.unitary.to_matrix()?;
        let residual = unitary
            .adjoint()
            .mul(&unitary)
            .sub(&CMatrix::identity(unitary.dim()))
            .hs_norm();
        if residual > tol {
            return Err(IoError::NotUnitary { tol, residual });
        }
        let partition = self.partition.to_partition(tol)?;
        if unitary.dim() != partition.dim() {
            return Err(IoError::BundleDimMismatch {
                u: unitary.dim(),
                p: partition.dim(),
            });
        }
        let rho = match &self.rho {
            Some(r) => {
                let rho = r.to_density(tol)?;
                if rho.dim() != partition.dim() {
                    return Err(IoError::RhoDimMismatch {
                        rho: rho.dim(),
                        d: partition.dim(),
                    });
                }
                rho
            }
            None => p_first_state(&partition),
        };
        Ok(Bundle {
            unitary,
            partition,
            rho,
        })
    }
}

fn p_first_state(p: &ProjectivePartition) -> DensityOperator {
    p.partition_states().into_iter().next().expect("nonempty partition")
}

pub fn parse_bundle(json: &str, tol: f64) -> Result<Bundle, IoError> {
    let bundle: BundleJson = serde_json::from_str(json)?;
    bundle.validate(tol)
}

pub fn parse_partition(json: &str, tol: f64) -> Result<ProjectivePartition, IoError> {
    // accept either a bare partition object or a full bundle
    if let Ok(pj) = serde_json::from_str::<PartitionJson>(json) {
        return pj.to_partition(tol);
    }
    let bundle: BundleJson = serde_json::from_str(json)?;
    bundle.partition.to_partition(tol)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matrix_roundtrip() {
        let json = r#"{"dim": 2, "entries": [[[1,0],[0,-1]],[[0,1],[0.5,0]]]}"#;
        let mj: MatrixJson = serde_json::from_str(json).unwrap();
        let m = mj.to_matrix().unwrap();
        assert_eq!(m.get(0, 1), C64::new(0.0, -1.0));
        let back = MatrixJson::from_matrix(&m);
        let m2 = back.to_matrix().unwrap();
        assert_eq!(m, m2);
    }

    #[test]
    fn matrix_rejects_bad_input() {
        let ragged = r#"{"dim": 2, "entries": [[[1,0]],[[0,0],[1,0]]]}"#;
        let mj: MatrixJson = serde_json::from_str(ragged).unwrap();
        assert!(mj.to_matrix().is_err());
        let nan = r#"{"dim": 1, "entries": [[[null,0]]]}"#;
        assert!(serde_json::from_str::<MatrixJson>(nan).is_err());
        let wrong_dim = r#"{"dim": 3, "entries": [[[1,0]]]}"#;
        let mj: MatrixJson = serde_json::from_str(wrong_dim).unwrap();
        assert!(matches!(mj.to_matrix(), Err(IoError::DimMismatch { .. })));
    }

    #[test]
    fn partition_from_basis_groups_json() {
        let json = r#"{"dim": 3, "basis_groups": [[0],[1,2]]}"#;
        let p = parse_partition(json, 1e-10).unwrap();
        assert_eq!(p.ranks(), &[1, 2]);
    }

    #[test]
    fn partition_from_projectors_json() {
        let json = r#"{"dim": 2, "projectors": [
            {"dim": 2, "entries": [[[1,0],[0,0]],[[0,0],[0,0]]]},
            {"dim": 2, "entries": [[[0,0],[0,0]],[[0,0],[1,0]]]}
        ]}"#;
        let p = parse_partition(json, 1e-10).unwrap();
        assert!(p.is_fine_grained());
    }

    #[test]
    fn bundle_defaults_rho_to_first_partition_state() {
        let json = r#"{
            "unitary": {"dim": 2, "entries": [[[1,0],[0,0]],[[0,0],[1,0]]]},
            "partition": {"dim": 2, "basis_groups": [[0],[1]]}
        }"#;
        let b = parse_bundle(json, 1e-10).unwrap();
        assert_eq!(b.rho.matrix().get(0, 0), C64::new(1.0, 0.0));
        assert_eq!(b.rho.matrix().get(1, 1), C64::new(0.0, 0.0));
    }

    #[test]
    fn bundle_rejects_non_unitary_and_dim_mismatch() {
        let bad_u = r#"{
            "unitary": {"dim": 2, "entries": [[[1,0],[0,0]],[[0,0],[0.5,0]]]},
            "partition": {"dim": 2, "basis_groups": [[0],[1]]}
        }"#;
        assert!(matches!(
            parse_bundle(bad_u, 1e-10),
            Err(IoError::NotUnitary { .. })
        ));
        let mismatch = r#"{
            "unitary": {"dim": 2, "entries": [[[1,0],[0,0]],[[0,0],[1,0]]]},
            "partition": {"dim": 3, "basis_groups": [[0],[1,2]]}
        }"#;
        assert!(matches!(
            parse_bundle(mismatch, 1e-10),
            Err(IoError::BundleDimMismatch { .. })
        ));
    }

    #[test]
    fn density_tag_accepted() {
        let json = r#"{
            "unitary": {"dim": 2, "entries": [[[1,0],[0,0]],[[0,0],[1,0]]]},
            "partition": {"dim": 2, "basis_groups": [[0],[1]]},
            "rho": {"type": "density", "dim": 2,
                    "entries": [[[0.3,0],[0,0]],[[0,0],[0.7,0]]]}
        }"#;
        let b = parse_bundle(json, 1e-10).unwrap();
        assert!((b.rho.matrix().get(1, 1).re - 0.7).abs() < 1e-15);
    }
}
