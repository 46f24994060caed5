//! Singular values, rank decisions, λ_min^{>0} and the projectors and
//! pseudoinverse built from them.
//!
//! General blocks are decomposed through the hermitian dilation
//! [[0, M], [M*, 0]], whose eigenvalues are ±σᵢ. Anti-hermitian blocks go
//! through the eigen-decomposition of −iM directly.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fourier::{DualIndex, SymbolBlock};
use crate::linalg::{hermitian_eigen, vec_norm, CMatrix, I, ZERO};

/// Default rank cutoff relative to the largest singular value.
pub const DEFAULT_RANK_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralRecord {
    #[serde(flatten)]
    pub index: DualIndex,
    /// Non-increasing.
    pub singular_values: Vec<f64>,
    pub rank: usize,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub lambda_min_pos: Option<f64>,
    /// μ_r with σ = diag(iμ_r) up to unitary change of basis, ascending.
    /// Present only for anti-hermitian blocks.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub eigenvalues_imag: Option<Vec<f64>>,
}

/// Retained part of a singular value decomposition.
#[derive(Debug, Clone)]
pub struct Decomposition {
    /// All singular values, non-increasing.
    pub singular_values: Vec<f64>,
    pub rank: usize,
    /// Left singular vectors of the retained values, one per column.
    pub u: CMatrix,
    /// Right singular vectors of the retained values, one per column.
    pub v: CMatrix,
    pub eigenvalues_imag: Option<Vec<f64>>,
}

impl Decomposition {
    pub fn lambda_min_pos(&self) -> Option<f64> {
        self.rank.checked_sub(1).map(|r| self.singular_values[r])
    }

    /// Unit right singular vector of λ_min^{>0}.
    pub fn least_vector(&self) -> Option<Vec<Complex64>> {
        self.rank.checked_sub(1).map(|r| self.v.column(r))
    }
}

fn check_tol(rank_tol_rel: f64) -> Result<()> {
    if !(rank_tol_rel > 0.0 && rank_tol_rel <= 1e-2) {
        return Err(Error::InvalidArgument(format!("rank tolerance must lie in (0, 1e-2], got {rank_tol_rel}")));
    }
    Ok(())
}

fn is_anti_hermitian_block(m: &CMatrix) -> bool {
    m.is_square() && (m + &m.adjoint()).max_abs() <= 1e-13 * m.max_abs()
}

/// Singular value decomposition restricted to values above
/// `rank_tol_rel` × the largest one.
pub fn decompose(m: &CMatrix, rank_tol_rel: f64) -> Result<Decomposition> {
    check_tol(rank_tol_rel)?;
    if !m.is_finite() {
        return Err(Error::Numeric("symbol block has non-finite entries".into()));
    }
    let (rows, cols) = (m.rows(), m.cols());

    if rows == 1 && cols == 1 {
        let z = m[(0, 0)];
        let s = z.norm();
        let anti = z.re == 0.0;
        let (rank, u, v) = if s > 0.0 {
            (1, CMatrix::from_diagonal(&[z / s]), CMatrix::identity(1))
        } else {
            (0, CMatrix::zeros(1, 0), CMatrix::zeros(1, 0))
        };
        return Ok(Decomposition {
            singular_values: vec![s],
            rank,
            u,
            v,
            eigenvalues_imag: anti.then(|| vec![z.im]),
        });
    }

    if is_anti_hermitian_block(m) {
        let eig = hermitian_eigen(&m.scale(-I));
        let n = rows;
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| eig.values[b].abs().total_cmp(&eig.values[a].abs()).then(a.cmp(&b)));
        let singular_values: Vec<f64> = order.iter().map(|&i| eig.values[i].abs()).collect();
        let rank = count_rank(&singular_values, rank_tol_rel);
        let v = CMatrix::from_fn(n, rank, |i, j| eig.vectors[(i, order[j])]);
        let u = CMatrix::from_fn(n, rank, |i, j| {
            let mu = eig.values[order[j]];
            I * mu.signum() * eig.vectors[(i, order[j])]
        });
        return Ok(Decomposition { singular_values, rank, u, v, eigenvalues_imag: Some(eig.values) });
    }

    let n = rows + cols;
    let mut h = CMatrix::zeros(n, n);
    for i in 0..rows {
        for j in 0..cols {
            h[(i, rows + j)] = m[(i, j)];
            h[(rows + j, i)] = m[(i, j)].conj();
        }
    }
    let eig = hermitian_eigen(&h);
    let k = rows.min(cols);
    // The k largest dilation eigenvalues are σ₁ ≥ … ≥ σ_k.
    let singular_values: Vec<f64> = (0..k).map(|j| eig.values[n - 1 - j].max(0.0)).collect();
    let rank = count_rank(&singular_values, rank_tol_rel);
    let mut u = CMatrix::zeros(rows, rank);
    let mut v = CMatrix::zeros(cols, rank);
    for j in 0..rank {
        let col = eig.vectors.column(n - 1 - j);
        let (top, bottom) = col.split_at(rows);
        let (nt, nb) = (vec_norm(top), vec_norm(bottom));
        for (i, z) in top.iter().enumerate() {
            u[(i, j)] = z / nt;
        }
        for (i, z) in bottom.iter().enumerate() {
            v[(i, j)] = z / nb;
        }
    }
    Ok(Decomposition { singular_values, rank, u, v, eigenvalues_imag: None })
}

fn count_rank(desc: &[f64], tol: f64) -> usize {
    match desc.first() {
        Some(&top) if top > 0.0 => desc.iter().take_while(|&&s| s > tol * top).count(),
        _ => 0,
    }
}

pub fn spectral_record(block: &SymbolBlock, rank_tol_rel: f64) -> Result<SpectralRecord> {
    record_of(&block.index, &block.matrix, rank_tol_rel)
}

pub fn record_of(index: &DualIndex, m: &CMatrix, rank_tol_rel: f64) -> Result<SpectralRecord> {
    Ok(record_from(index, decompose(m, rank_tol_rel)?))
}

pub fn record_from(index: &DualIndex, d: Decomposition) -> SpectralRecord {
    SpectralRecord {
        index: index.clone(),
        lambda_min_pos: d.lambda_min_pos(),
        rank: d.rank,
        singular_values: d.singular_values,
        eigenvalues_imag: d.eigenvalues_imag,
    }
}

/// Orthogonal projector onto (ker M)^⊥.
pub fn ker_perp_projector(m: &CMatrix, rank_tol_rel: f64) -> Result<CMatrix> {
    let d = decompose(m, rank_tol_rel)?;
    Ok(&d.v * &d.v.adjoint())
}

/// Orthogonal projector onto ran M.
pub fn range_projector(m: &CMatrix, rank_tol_rel: f64) -> Result<CMatrix> {
    let d = decompose(m, rank_tol_rel)?;
    Ok(&d.u * &d.u.adjoint())
}

/// M⁺ = V Σ⁻¹ U*: the inverse of M restricted to (ker M)^⊥ → ran M,
/// extended by zero on (ran M)^⊥.
pub fn restricted_pseudoinverse(m: &CMatrix, rank_tol_rel: f64) -> Result<CMatrix> {
    let d = decompose(m, rank_tol_rel)?;
    Ok(pseudoinverse_from(&d))
}

pub fn pseudoinverse_from(d: &Decomposition) -> CMatrix {
    let inv: Vec<Complex64> = d.singular_values[..d.rank].iter().map(|&s| Complex64::new(1.0 / s, 0.0)).collect();
    &(&d.v * &CMatrix::from_diagonal(&inv)) * &d.u.adjoint()
}

/// A unit vector in ker M, if the kernel is non-trivial under the tolerance.
pub fn kernel_vector(m: &CMatrix, rank_tol_rel: f64) -> Result<Option<Vec<Complex64>>> {
    let d = decompose(m, rank_tol_rel)?;
    if d.rank == m.cols() {
        return Ok(None);
    }
    let p = &d.v * &d.v.adjoint();
    // Complement of the retained span applied to the basis vector it keeps best.
    let best = (0..m.cols())
        .map(|j| {
            let mut e = vec![ZERO; m.cols()];
            e[j] = Complex64::new(1.0, 0.0);
            let pe = p.mul_vec(&e);
            let w: Vec<Complex64> = e.iter().zip(&pe).map(|(a, b)| a - b).collect();
            (vec_norm(&w), w)
        })
        .max_by(|a, b| a.0.total_cmp(&b.0))
        .map(|(n, w)| w.into_iter().map(|z| z / n).collect());
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::SplitMix64;
    use crate::su2::sigma_su2;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn random_rank(n: usize, r: usize, seed: u64) -> CMatrix {
        let mut rng = SplitMix64::new(seed);
        let a = CMatrix::from_fn(n, r, |_, _| rng.complex_gaussian());
        let b = CMatrix::from_fn(r, n, |_, _| rng.complex_gaussian());
        &a * &b
    }

    #[test]
    fn zero_block() {
        let z = CMatrix::zeros(3, 3);
        let rec = record_of(&DualIndex::su2(2), &z, DEFAULT_RANK_TOL).unwrap();
        assert_eq!(rec.rank, 0);
        assert_eq!(rec.lambda_min_pos, None);
        assert_eq!(ker_perp_projector(&z, DEFAULT_RANK_TOL).unwrap(), CMatrix::zeros(3, 3));
        assert_eq!(range_projector(&z, DEFAULT_RANK_TOL).unwrap(), CMatrix::zeros(3, 3));
        assert_eq!(restricted_pseudoinverse(&z, DEFAULT_RANK_TOL).unwrap(), CMatrix::zeros(3, 3));
    }

    #[test]
    fn torus_block() {
        let m = CMatrix::from_diagonal(&[c(0.0, -0.75)]);
        let rec = record_of(&DualIndex::torus(&[1, -2]), &m, DEFAULT_RANK_TOL).unwrap();
        assert_eq!(rec.singular_values, vec![0.75]);
        assert_eq!(rec.lambda_min_pos, Some(0.75));
        assert_eq!(rec.eigenvalues_imag, Some(vec![-0.75]));
    }

    #[test]
    fn spin_three_halves_gap() {
        let rec = spectral_record(&sigma_su2(3, &[0.6, 0.0, 0.8]), DEFAULT_RANK_TOL).unwrap();
        assert_eq!(rec.rank, 4);
        assert!((rec.lambda_min_pos.unwrap() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn diagonal_projectors() {
        let m = CMatrix::from_diagonal(&[c(0.0, 1.0), ZERO, c(0.0, -1.0)]);
        let expected = CMatrix::from_real(3, 3, &[1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 1.0]);
        assert!((&ker_perp_projector(&m, DEFAULT_RANK_TOL).unwrap() - &expected).max_abs() < 1e-15);
        assert!((&range_projector(&m, DEFAULT_RANK_TOL).unwrap() - &expected).max_abs() < 1e-15);
        let kv = kernel_vector(&m, DEFAULT_RANK_TOL).unwrap().unwrap();
        assert!((kv[1].norm() - 1.0).abs() < 1e-15);
        assert_eq!(kernel_vector(&CMatrix::identity(2), DEFAULT_RANK_TOL).unwrap(), None);
    }

    #[test]
    fn invertible_projectors_are_identity() {
        let m = random_rank(4, 4, 1);
        assert!((&ker_perp_projector(&m, DEFAULT_RANK_TOL).unwrap() - &CMatrix::identity(4)).max_abs() < 1e-12);
        assert!((&range_projector(&m, DEFAULT_RANK_TOL).unwrap() - &CMatrix::identity(4)).max_abs() < 1e-12);
    }

    #[test]
    fn pseudoinverse_examples() {
        assert!((&restricted_pseudoinverse(&CMatrix::identity(3), DEFAULT_RANK_TOL).unwrap() - &CMatrix::identity(3)).max_abs() < 1e-15);
        let m = CMatrix::from_diagonal(&[c(0.0, 2.0), ZERO]);
        let p = restricted_pseudoinverse(&m, DEFAULT_RANK_TOL).unwrap();
        assert!((&p - &CMatrix::from_diagonal(&[c(0.0, -0.5), ZERO])).max_abs() < 1e-15);

        let m = random_rank(5, 3, 77);
        let d = decompose(&m, DEFAULT_RANK_TOL).unwrap();
        assert_eq!(d.rank, 3);
        let p = pseudoinverse_from(&d);
        assert!((&(&(&m * &p) * &m) - &m).hs_norm() < 1e-10);
        assert!((&(&(&p * &m) * &p) - &p).hs_norm() < 1e-10);
        // ‖M⁺‖_op = 1/λ_min^{>0}
        let top = decompose(&p, DEFAULT_RANK_TOL).unwrap().singular_values[0];
        assert!((top * d.lambda_min_pos().unwrap() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(matches!(decompose(&CMatrix::identity(2), 0.0), Err(Error::InvalidArgument(_))));
        assert!(matches!(decompose(&CMatrix::identity(2), 0.5), Err(Error::InvalidArgument(_))));
        let mut m = CMatrix::identity(2);
        m[(0, 1)] = c(f64::NAN, 0.0);
        assert!(matches!(decompose(&m, 1e-10), Err(Error::Numeric(_))));
    }

    #[test]
    fn small_singular_values_survive() {
        // σ = 1e-9 is lost to √eps noise through M*M but not through the dilation.
        let mut rng = SplitMix64::new(4);
        let q = hermitian_eigen(&{
            let a = CMatrix::from_fn(3, 3, |_, _| rng.complex_gaussian());
            &a + &a.adjoint()
        })
        .vectors;
        let d = CMatrix::from_real(3, 3, &[1.0, 0.0, 0.0, 0.0, 0.3, 0.0, 0.0, 0.0, 1e-9]);
        let m = &(&q * &d) * &q.transpose();
        let s = decompose(&m, DEFAULT_RANK_TOL).unwrap().singular_values;
        assert!((s[2] - 1e-9).abs() < 1e-15, "{s:?}");
    }

    #[test]
    fn record_json_round_trip() {
        let rec = spectral_record(&sigma_su2(2, &[1.0, 0.0, 0.0]), DEFAULT_RANK_TOL).unwrap();
        let s = serde_json::to_string(&rec).unwrap();
        assert!(s.starts_with("{\"two_ell\":2,"));
        let back: SpectralRecord = serde_json::from_str(&s).unwrap();
        assert_eq!(back, rec);
    }

    fn block_strategy() -> impl Strategy<Value = CMatrix> {
        (1usize..6, 0usize..6, any::<u64>(), any::<bool>()).prop_map(|(n, r, seed, anti)| {
            let m = random_rank(n, r.min(n), seed);
            if anti {
                &m - &m.adjoint()
            } else {
                m
            }
        })
    }

    proptest! {
        #[test]
        fn projector_identities(m in block_strategy()) {
            for p in [ker_perp_projector(&m, DEFAULT_RANK_TOL).unwrap(), range_projector(&m, DEFAULT_RANK_TOL).unwrap()] {
                prop_assert!((&(&p * &p) - &p).max_abs() < 1e-12);
                prop_assert!((&p - &p.adjoint()).max_abs() < 1e-12);
            }
        }

        #[test]
        fn gap_bound_on_ker_perp(m in block_strategy(), seed in any::<u64>()) {
            let d = decompose(&m, DEFAULT_RANK_TOL).unwrap();
            if let Some(lam) = d.lambda_min_pos() {
                let mut rng = SplitMix64::new(seed);
                let n = m.cols();
                let b = CMatrix::from_fn(n, n, |_, _| rng.complex_gaussian());
                let b = &ker_perp_projector(&m, DEFAULT_RANK_TOL).unwrap() * &b;
                prop_assert!((&m * &b).hs_norm() >= lam * b.hs_norm() * (1.0 - 1e-10));
            }
        }

        #[test]
        fn anti_hermitian_spectra_agree(m in block_strategy()) {
            let a = &m - &m.adjoint();
            let d = decompose(&a, DEFAULT_RANK_TOL).unwrap();
            let mut mu: Vec<f64> = d.eigenvalues_imag.unwrap().iter().map(|x| x.abs()).collect();
            mu.sort_by(|x, y| y.total_cmp(x));
            let h = decompose(&a.scale(Complex64::new(1.0, 1e-3)), DEFAULT_RANK_TOL).unwrap();
            for (x, y) in mu.iter().zip(&d.singular_values) {
                prop_assert!((x - y).abs() < 1e-10);
            }
            // A non-normal path (dilation) on a rescaled copy agrees too.
            let scale = Complex64::new(1.0, 1e-3).norm();
            for (x, y) in mu.iter().zip(&h.singular_values) {
                prop_assert!((x * scale - y).abs() < 1e-10 * (1.0 + x));
            }
        }

        #[test]
        fn rank_and_lambda_consistent(m in block_strategy()) {
            let d = decompose(&m, DEFAULT_RANK_TOL).unwrap();
            let top = d.singular_values[0];
            let expect = d.singular_values.iter().filter(|&&s| top > 0.0 && s > DEFAULT_RANK_TOL * top).count();
            prop_assert_eq!(d.rank, expect);
            prop_assert!(d.singular_values.windows(2).all(|w| w[0] >= w[1]));
        }
    }
}
