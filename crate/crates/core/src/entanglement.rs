//! Entanglement detection for two qubits and the position of a state relative to the
//! separable set: partial transpose, negativity, the X-state block criterion and the
//! interior / boundary / entangled labeling.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::{self, CMatrix4};
use crate::state::{DensityMatrix, Tolerances, XState};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EntanglementError {
    #[error("matrix is not Hermitian: max |Mjk − conj(Mkj)| = {asymmetry:e}")]
    NotHermitian { asymmetry: f64 },
}

/// Transpose on party B: entry (jk),(lm) ↦ (jm),(lk) in product indexing.
pub fn partial_transpose_matrix(m: &CMatrix4) -> CMatrix4 {
    let mut out = linalg::zeros();
    for ja in 0..2 {
        for jb in 0..2 {
            for ka in 0..2 {
                for kb in 0..2 {
                    out[2 * ja + kb][2 * ka + jb] = m[2 * ja + jb][2 * ka + kb];
                }
            }
        }
    }
    out
}

pub fn partial_transpose(rho: &DensityMatrix) -> CMatrix4 {
    partial_transpose_matrix(rho.entries())
}

/// Ascending eigenvalues of a Hermitian 4×4 matrix (cyclic Jacobi).
pub fn eigenvalues_hermitian(
    m: &CMatrix4,
    tol: &Tolerances,
) -> Result<[f64; 4], EntanglementError> {
    let asymmetry = linalg::hermitian_asymmetry(m);
    if asymmetry.is_nan() || asymmetry >= tol.psd {
        return Err(EntanglementError::NotHermitian { asymmetry });
    }
    Ok(linalg::jacobi_eigenvalues(m))
}

pub fn min_pt_eigenvalue(rho: &DensityMatrix) -> f64 {
    linalg::jacobi_eigenvalues(&partial_transpose(rho))[0]
}

/// Sum of |negative eigenvalues| of the partial transpose.
pub fn negativity(rho: &DensityMatrix) -> f64 {
    linalg::jacobi_eigenvalues(&partial_transpose(rho))
        .iter()
        .filter(|&&ev| ev < 0.0)
        .fold(0.0, |acc, ev| acc - ev)
}

/// Peres-Horodecki test: entangled iff the partial transpose has an eigenvalue below −ε_ent.
pub fn is_entangled_ppt(rho: &DensityMatrix, tol: &Tolerances) -> bool {
    min_pt_eigenvalue(rho) < -tol.ent
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Block {
    /// Outer block: the (1,4) coherence w.
    W,
    /// Inner block: the (2,3) coherence z.
    Z,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct XVerdict {
    pub entangled: bool,
    pub active_block: Option<Block>,
    /// |w|² − bc
    pub w_margin: f64,
    /// |z|² − ad
    pub z_margin: f64,
}

/// Closed-form criterion for X states: entangled iff |w|² > bc or |z|² > ad.
pub fn x_entangled(x: &XState, tol: &Tolerances) -> XVerdict {
    let w_margin = x.w().norm_sqr() - x.b() * x.c();
    let z_margin = x.z().norm_sqr() - x.a() * x.d();
    // Positivity (|w|² ≤ ad, |z|² ≤ bc) rules out both blocks at once.
    assert!(
        !(w_margin > tol.psd && z_margin > tol.psd),
        "both X-state margins positive: w {w_margin:e}, z {z_margin:e}"
    );
    let active_block = if w_margin > tol.ent && w_margin >= z_margin {
        Some(Block::W)
    } else if z_margin > tol.ent {
        Some(Block::Z)
    } else {
        None
    };
    XVerdict {
        entangled: active_block.is_some(),
        active_block,
        w_margin,
        z_margin,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Region {
    #[serde(rename = "interior")]
    SeparableInterior,
    #[serde(rename = "boundary")]
    SeparableBoundary,
    #[serde(rename = "entangled")]
    Entangled,
}

impl Region {
    pub fn as_str(&self) -> &'static str {
        match self {
            Region::SeparableInterior => "interior",
            Region::SeparableBoundary => "boundary",
            Region::Entangled => "entangled",
        }
    }

    pub fn is_separable(&self) -> bool {
        !matches!(self, Region::Entangled)
    }
}

impl fmt::Display for Region {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegionLabel {
    pub region: Region,
    /// Smallest partial-transpose eigenvalue (signed).
    pub margin: f64,
    /// Smallest eigenvalue of the state itself.
    pub rank_margin: f64,
}

/// Entangled if the PT margin is below −ε_ent; interior only with strict PPT and full rank;
/// boundary otherwise.
pub fn classify_position(rho: &DensityMatrix, tol: &Tolerances) -> RegionLabel {
    label_from_margins(min_pt_eigenvalue(rho), rho.min_eigenvalue(), tol)
}

pub(crate) fn label_from_margins(margin: f64, rank_margin: f64, tol: &Tolerances) -> RegionLabel {
    let region = if margin < -tol.ent {
        Region::Entangled
    } else if margin > tol.ent && rank_margin > tol.ent {
        Region::SeparableInterior
    } else {
        Region::SeparableBoundary
    };
    RegionLabel {
        region,
        margin,
        rank_margin,
    }
}
