//! Two-fold zero-forcing beamformers at the jammer.
//!
//! The active-eavesdropper AN is sent along the MRT direction of each active
//! eavesdropper after projecting out Bob's channel. The passive AN is spread
//! uniformly over an orthonormal basis of what is left: the orthogonal
//! complement of Bob's channel and all active beams.
//!
//! Received signals are modelled as `g^H x`, so the MRT direction for a
//! channel `g` is `P g` with `P = I − g_B g_B^H / ‖g_B‖²`. This gives
//! `|g^H w|² = ‖P g‖²`, a `Gamma(N − 1, σ²)` variable.

use num_complex::Complex64;
use thiserror::Error;

use crate::linalg::{axpy_neg, dot, norm, norm_sqr, scale, singular_values, CMatrix, CVector};
use crate::model::PowerSplit;

const ZERO_VECTOR_NORM: f64 = 1e-30;
const DEGENERATE_RATIO: f64 = 1e-12;
const RANK_RATIO: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum BeamformError {
    #[error("channel vector has (numerically) zero norm")]
    ZeroVector,
    #[error("active channel {column} is parallel to Bob's channel")]
    DegenerateChannel { column: usize },
    #[error("[g_B | W_Ea] is rank deficient (σ_min/σ_max = {ratio:e})")]
    RankDeficient { ratio: f64 },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
}

/// `I − g g^H / ‖g‖²`.
pub fn complement_projector(g: &[Complex64]) -> Result<CMatrix, BeamformError> {
    let gn2 = norm_sqr(g);
    if !(gn2.sqrt() >= ZERO_VECTOR_NORM) {
        return Err(BeamformError::ZeroVector);
    }
    let n = g.len();
    let mut p = CMatrix::identity(n);
    for j in 0..n {
        for i in 0..n {
            p[(i, j)] -= g[i] * g[j].conj() / gn2;
        }
    }
    Ok(p)
}

/// Applies the complement projector of `g_b` to `v` without forming it.
fn project_out(g_b: &[Complex64], v: &[Complex64]) -> CVector {
    let mut out = v.to_vec();
    let c = dot(g_b, v) / norm_sqr(g_b);
    axpy_neg(&mut out, c, g_b);
    out
}

/// Unit MRT beam toward `g_ea` inside the null space of `g_b`.
pub fn mrt_null_beam(g_b: &[Complex64], g_ea: &[Complex64]) -> Result<CVector, BeamformError> {
    if g_b.len() != g_ea.len() {
        return Err(BeamformError::DimensionMismatch {
            expected: g_b.len(),
            got: g_ea.len(),
        });
    }
    if !(norm(g_b) >= ZERO_VECTOR_NORM) {
        return Err(BeamformError::ZeroVector);
    }
    let mut w = project_out(g_b, g_ea);
    let wn = norm(&w);
    let gn = norm(g_ea);
    if gn == 0.0 || !(wn >= DEGENERATE_RATIO * gn) {
        return Err(BeamformError::DegenerateChannel { column: 0 });
    }
    scale(&mut w, 1.0 / wn);
    Ok(w)
}

/// One MRT null-space beam per column of `g_actives`.
pub fn multi_mrt_beams(g_b: &[Complex64], g_actives: &CMatrix) -> Result<CMatrix, BeamformError> {
    let beams = g_actives
        .columns()
        .enumerate()
        .map(|(m, g)| {
            mrt_null_beam(g_b, g).map_err(|e| match e {
                BeamformError::DegenerateChannel { .. } => BeamformError::DegenerateChannel { column: m },
                other => other,
            })
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(CMatrix::from_columns(g_b.len(), &beams))
}

/// Orthogonalizes `v` against the orthonormal set `basis` (two classical
/// Gram–Schmidt passes) and returns the residual.
fn residual(basis: &[CVector], v: &[Complex64]) -> CVector {
    let mut r = v.to_vec();
    for _ in 0..2 {
        for q in basis {
            let c = dot(q, &r);
            axpy_neg(&mut r, c, q);
        }
    }
    r
}

/// Orthonormal basis of the complement of `span{g_b, w_active}`, `N − M − 1` columns.
///
/// Any orthonormal completion is acceptable since downstream quantities only
/// depend on the subspace. The completion greedily takes the standard basis
/// vector with the largest residual.
pub fn passive_null_basis(g_b: &[Complex64], w_active: &CMatrix) -> Result<CMatrix, BeamformError> {
    let n = g_b.len();
    if w_active.rows() != n {
        return Err(BeamformError::DimensionMismatch {
            expected: n,
            got: w_active.rows(),
        });
    }
    let m = w_active.cols();
    if n < m + 2 {
        return Err(BeamformError::DimensionMismatch {
            expected: m + 2,
            got: n,
        });
    }

    let stacked = CMatrix::from_columns(n, &[g_b.to_vec()]).hcat(w_active);
    let sv = singular_values(&stacked);
    let ratio = sv.last().copied().unwrap_or(0.0) / sv[0];
    if !(sv[0] > 0.0 && ratio >= RANK_RATIO) {
        return Err(BeamformError::RankDeficient { ratio });
    }

    let mut basis: Vec<CVector> = Vec::with_capacity(n);
    for c in stacked.columns() {
        let mut r = residual(&basis, c);
        let rn = norm(&r);
        scale(&mut r, 1.0 / rn);
        basis.push(r);
    }

    let mut used = vec![false; n];
    while basis.len() < n {
        let (best, mut r) = (0..n)
            .filter(|&i| !used[i])
            .map(|i| {
                let mut e = vec![Complex64::new(0.0, 0.0); n];
                e[i] = Complex64::new(1.0, 0.0);
                (i, residual(&basis, &e))
            })
            .max_by(|(_, a), (_, b)| norm_sqr(a).total_cmp(&norm_sqr(b)))
            .expect("fewer basis vectors than dimensions");
        used[best] = true;
        let rn = norm(&r);
        scale(&mut r, 1.0 / rn);
        basis.push(r);
    }
    Ok(CMatrix::from_columns(n, &basis[m + 1..]))
}

/// Active beams plus the passive AN basis for one channel realization.
#[derive(Debug, Clone, PartialEq)]
pub struct BeamformerSet {
    /// `N × M`, unit columns orthogonal to `g_B`.
    pub w_active: CMatrix,
    /// `N × (N − M − 1)`, orthonormal, orthogonal to `g_B` and `w_active`.
    pub w_passive: CMatrix,
}

impl BeamformerSet {
    pub fn build(g_b: &[Complex64], g_actives: &CMatrix) -> Result<Self, BeamformError> {
        let w_active = multi_mrt_beams(g_b, g_actives)?;
        let w_passive = passive_null_basis(g_b, &w_active)?;
        Ok(BeamformerSet { w_active, w_passive })
    }

    pub fn n_active(&self) -> usize {
        self.w_active.cols()
    }

    pub fn n_passive_dims(&self) -> usize {
        self.w_passive.cols()
    }
}

/// The transmitted AN vector
/// `√(P_JA/M) W_a z_a + √(P_Jp/(N − M − 1)) W_p z_p`.
pub fn compose_an(
    set: &BeamformerSet,
    split: &PowerSplit,
    z_active: &[Complex64],
    z_passive: &[Complex64],
) -> Result<CVector, BeamformError> {
    let m = set.n_active();
    let d = set.n_passive_dims();
    if z_active.len() != m {
        return Err(BeamformError::DimensionMismatch {
            expected: m,
            got: z_active.len(),
        });
    }
    if z_passive.len() != d {
        return Err(BeamformError::DimensionMismatch {
            expected: d,
            got: z_passive.len(),
        });
    }
    let a = (split.p_ja() / m as f64).sqrt();
    let p = (split.p_jp() / d as f64).sqrt();
    let active = set.w_active.mul_vec(z_active);
    let passive = set.w_passive.mul_vec(z_passive);
    Ok(active.iter().zip(&passive).map(|(x, y)| x * a + y * p).collect())
}
