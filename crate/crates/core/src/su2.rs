//! Symbols of left-invariant vector fields on SU(2) ≅ S³.
//!
//! For Y = α₁D₁ + α₂D₂ + α₃D₃ the block at ℓ is tridiagonal of side 2ℓ+1.
//! Rows are numbered k = 1, …, 2ℓ+1 in the formulas below.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fourier::{DualIndex, SymbolBlock, SymbolMap};
use crate::linalg::{hermitian_eigen, CMatrix, I};

/// Tolerance under which cos θ or sin θ is snapped to zero, so that θ = π/2
/// gives an exactly diagonal C-matrix.
const TRIG_SNAP: f64 = 4.0 * f64::EPSILON;

fn snapped_trig(theta: f64) -> (f64, f64) {
    let (s, c) = theta.sin_cos();
    let s = if s.abs() < TRIG_SNAP { 0.0 } else { s };
    let c = if c.abs() < TRIG_SNAP { 0.0 } else { c };
    (s, c)
}

/// α_* = (iα₁ − α₂)/2.
fn alpha_star(alpha: &[f64; 3]) -> Complex64 {
    Complex64::new(-alpha[1] / 2.0, alpha[0] / 2.0)
}

/// σ_Y(ℓ) for Y = α₁D₁ + α₂D₂ + α₃D₃, with `two_ell` = 2ℓ.
///
/// Diagonal iα₃(ℓ+1−k), superdiagonal −ᾱ_*√((2ℓ+1−k)k), subdiagonal
/// α_*√((2ℓ+1−k)k).
pub fn sigma_su2(two_ell: u32, alpha: &[f64; 3]) -> SymbolBlock {
    let kk = two_ell as usize;
    let n = kk + 1;
    let a = alpha_star(alpha);
    let mut m = CMatrix::zeros(n, n);
    for r in 0..n {
        let k = r + 1;
        // ℓ + 1 − k = (2ℓ + 2 − 2k)/2, exact in binary
        m[(r, r)] = I * (alpha[2] * ((kk + 2) as f64 - 2.0 * k as f64) / 2.0);
        if r + 1 < n {
            let s = (((kk + 1 - k) * k) as f64).sqrt();
            m[(r, r + 1)] = -a.conj() * s;
            m[(r + 1, r)] = a * s;
        }
    }
    SymbolBlock::new(DualIndex::su2(two_ell), m)
}

/// σ_{D_j}(ℓ), j ∈ {1, 2, 3}.
pub fn sigma_basis_field(two_ell: u32, j: usize) -> Result<SymbolBlock> {
    if !(1..=3).contains(&j) {
        return Err(Error::InvalidArgument(format!("basis field index must be 1, 2 or 3, got {j}")));
    }
    let mut alpha = [0.0; 3];
    alpha[j - 1] = 1.0;
    Ok(sigma_su2(two_ell, &alpha))
}

/// Symbol blocks of Y on every ℓ with 2ℓ ≤ two_ell_max.
pub fn su2_field_symbols(alpha: &[f64; 3], two_ell_max: u32) -> SymbolMap {
    (0..=two_ell_max).map(|t| (DualIndex::su2(t), sigma_su2(t, alpha).matrix)).collect()
}

/// C₁(ℓ, θ), side 2ℓ+2, for integer ℓ ≥ 0.
pub fn c1_matrix(ell: u32, theta: f64) -> CMatrix {
    let (s, c) = snapped_trig(theta);
    let l = ell as usize;
    let n = 2 * l + 2;
    let mut m = CMatrix::zeros(n, n);
    for r in 0..n {
        let k = r + 1;
        m[(r, r)] = Complex64::new(s * ((2 * l + 1) as f64 - 2.0 * (k - 1) as f64) / 2.0, 0.0);
        if r + 1 < n {
            m[(r, r + 1)] = Complex64::new(c * k as f64 / 2.0, 0.0);
            m[(r + 1, r)] = Complex64::new(c * (2 * l + 2 - k) as f64 / 2.0, 0.0);
        }
    }
    m
}

/// C₂(ℓ, θ), side 2ℓ+1, for integer ℓ ≥ 0.
pub fn c2_matrix(ell: u32, theta: f64) -> CMatrix {
    let (s, c) = snapped_trig(theta);
    let l = ell as usize;
    let n = 2 * l + 1;
    let mut m = CMatrix::zeros(n, n);
    for r in 0..n {
        let k = r + 1;
        m[(r, r)] = Complex64::new(s * ((l + 1) as f64 - k as f64), 0.0);
        if r + 1 < n {
            m[(r, r + 1)] = Complex64::new(c * k as f64 / 2.0, 0.0);
            m[(r + 1, r)] = Complex64::new(c * (2 * l + 1 - k) as f64 / 2.0, 0.0);
        }
    }
    m
}

/// The conjugator D(ℓ) = diag(d₁, …) with d₁ = 1 and
/// d_{k+1} = d_k · (2/‖α′‖) · (1/k) · σ̃_{k,k+1}, where σ̃ = σ_Y/i and
/// α′ = (α₁, α₂).
pub fn d_conjugator(two_ell: u32, alpha: &[f64; 3]) -> Result<CMatrix> {
    let norm_p = alpha[0].hypot(alpha[1]);
    if norm_p == 0.0 {
        return Err(Error::DegenerateConjugator);
    }
    let sigma = sigma_su2(two_ell, alpha).matrix;
    let n = sigma.rows();
    let mut d = vec![Complex64::new(1.0, 0.0); n];
    for r in 0..n.saturating_sub(1) {
        let tilde = sigma[(r, r + 1)] / I;
        d[r + 1] = d[r] * tilde * (2.0 / (norm_p * (r + 1) as f64));
    }
    Ok(CMatrix::from_diagonal(&d))
}

/// The real tridiagonal matrix C₀ = D σ̃_Y D⁻¹ in closed form: diagonal
/// α₃(ℓ+1−k), superdiagonal ‖α′‖k/2, subdiagonal ‖α′‖(2ℓ+1−k)/2.
pub fn c0_matrix(two_ell: u32, alpha: &[f64; 3]) -> CMatrix {
    let kk = two_ell as usize;
    let n = kk + 1;
    let norm_p = alpha[0].hypot(alpha[1]);
    let mut m = CMatrix::zeros(n, n);
    for r in 0..n {
        let k = r + 1;
        m[(r, r)] = Complex64::new(alpha[2] * ((kk + 2) as f64 - 2.0 * k as f64) / 2.0, 0.0);
        if r + 1 < n {
            m[(r, r + 1)] = Complex64::new(norm_p * k as f64 / 2.0, 0.0);
            m[(r + 1, r)] = Complex64::new(norm_p * (kk + 1 - k) as f64 / 2.0, 0.0);
        }
    }
    m
}

/// X = iC₁(ℓ,0), Y = iC₁(ℓ,π/2) and Z = XY − YX.
pub fn bracket_triple(ell: u32) -> (CMatrix, CMatrix, CMatrix) {
    let x = c1_matrix(ell, 0.0).scale(I);
    let y = c1_matrix(ell, std::f64::consts::FRAC_PI_2).scale(I);
    let z = x.commutator(&y);
    (x, y, z)
}

/// Eigenvalues of a real tridiagonal matrix whose off-diagonal products
/// b_k c_k are non-negative, ascending.
///
/// Such a matrix is diagonally similar to the symmetric tridiagonal matrix
/// with off-diagonals √(b_k c_k), which is what gets diagonalised.
pub fn tridiagonal_eigenvalues(m: &CMatrix) -> Result<Vec<f64>> {
    let n = m.rows();
    if !m.is_square() {
        return Err(Error::InvalidArgument("tridiagonal eigenvalues need a square matrix".into()));
    }
    let mut sym = CMatrix::zeros(n, n);
    for r in 0..n {
        sym[(r, r)] = Complex64::new(m[(r, r)].re, 0.0);
        if r + 1 < n {
            let p = m[(r, r + 1)].re * m[(r + 1, r)].re;
            if p < 0.0 {
                return Err(Error::InvalidArgument(format!("off-diagonal product at row {} is negative", r + 1)));
            }
            let b = Complex64::new(p.sqrt(), 0.0);
            sym[(r, r + 1)] = b;
            sym[(r + 1, r)] = b;
        }
    }
    Ok(hermitian_eigen(&sym).values)
}

/// {±1/2, ±3/2, …, ±(2ℓ+1)/2}, ascending.
pub fn c1_expected_spectrum(ell: u32) -> Vec<f64> {
    let l = ell as i64;
    (-l - 1..=l).map(|j| j as f64 + 0.5).collect()
}

/// {0, ±1, …, ±ℓ}, ascending.
pub fn c2_expected_spectrum(ell: u32) -> Vec<f64> {
    let l = ell as i64;
    (-l..=l).map(|j| j as f64).collect()
}

/// Imaginary parts of the eigenvalues of σ_Y(ℓ) for ‖α‖ = 1:
/// {ℓ, ℓ−1, …, −ℓ}, ascending.
pub fn unit_field_spectrum(two_ell: u32) -> Vec<f64> {
    (0..=two_ell).map(|j| j as f64 - two_ell as f64 / 2.0).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::SplitMix64;
    use crate::linalg::ZERO;
    use proptest::prelude::*;
    use std::f64::consts::{FRAC_PI_2, TAU};

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn is_tridiagonal(m: &CMatrix) -> bool {
        (0..m.rows()).all(|i| (0..m.cols()).all(|j| i.abs_diff(j) < 2 || m[(i, j)] == ZERO))
    }

    fn max_err(a: &[f64], b: &[f64]) -> f64 {
        assert_eq!(a.len(), b.len());
        a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
    }

    /// Eigenvalues of an anti-hermitian block as the spectrum of the
    /// hermitian matrix −iM.
    fn imag_spectrum(m: &CMatrix) -> Vec<f64> {
        hermitian_eigen(&m.scale(-I)).values
    }

    #[test]
    fn trivial_and_diagonal_cases() {
        let b = sigma_su2(0, &[0.3, -1.2, 2.0]);
        assert_eq!(b.matrix, CMatrix::zeros(1, 1));
        let b = sigma_su2(2, &[0.0, 0.0, 1.0]).matrix;
        assert_eq!(b, CMatrix::from_diagonal(&[c(0.0, 1.0), ZERO, c(0.0, -1.0)]));
        assert_eq!(sigma_basis_field(2, 3).unwrap().matrix, b);
        assert!(sigma_basis_field(2, 4).is_err());
    }

    #[test]
    fn spin_half_block_by_hand() {
        // α = (1,0,0): α_* = i/2, so the block is (i/2)·[[0,1],[1,0]].
        let b = sigma_su2(1, &[1.0, 0.0, 0.0]).matrix;
        assert_eq!(b[(0, 1)], c(0.0, 0.5));
        assert_eq!(b[(1, 0)], c(0.0, 0.5));
        let ev = imag_spectrum(&b);
        assert!(max_err(&ev, &[-0.5, 0.5]) < 1e-15);
    }

    #[test]
    fn casimir_identity() {
        for two_ell in 0..=40u32 {
            let mut sum = CMatrix::zeros(two_ell as usize + 1, two_ell as usize + 1);
            for j in 1..=3 {
                let s = sigma_basis_field(two_ell, j).unwrap().matrix;
                sum = &sum + &(&s * &s);
            }
            let ell = two_ell as f64 / 2.0;
            let expected = CMatrix::identity(two_ell as usize + 1).scale_real(-ell * (ell + 1.0));
            assert!((&sum - &expected).max_abs() < 1e-10, "two_ell = {two_ell}");
        }
    }

    #[test]
    fn lemma_examples() {
        assert_eq!(c1_matrix(0, FRAC_PI_2), CMatrix::from_real(2, 2, &[0.5, 0.0, 0.0, -0.5]));
        assert_eq!(c2_matrix(1, 0.0), CMatrix::from_real(3, 3, &[0.0, 0.5, 0.0, 1.0, 0.0, 1.0, 0.0, 0.5, 0.0]));
        assert!(max_err(&tridiagonal_eigenvalues(&c2_matrix(1, 0.0)).unwrap(), &[-1.0, 0.0, 1.0]) < 1e-14);
        for ell in 0..6 {
            assert!(c1_matrix(ell, FRAC_PI_2).is_diagonal(0.0));
            assert!(c2_matrix(ell, FRAC_PI_2).is_diagonal(0.0));
        }
    }

    #[test]
    fn conjugator_reduces_to_c_matrices() {
        let d = d_conjugator(1, &[1.0, 0.0, 0.0]).unwrap();
        assert_eq!(d[(0, 0)], c(1.0, 0.0));
        let s = sigma_su2(1, &[1.0, 0.0, 0.0]).matrix.scale(-I);
        let d_inv = CMatrix::from_diagonal(&[d[(0, 0)].inv(), d[(1, 1)].inv()]);
        let conj = &(&d * &s) * &d_inv;
        assert!((&conj - &c1_matrix(0, 0.0)).max_abs() < 1e-15);

        let mut rng = SplitMix64::new(11);
        for two_ell in 1..=16u32 {
            let theta = rng.uniform_range(-1.5, 1.5);
            let phi = rng.uniform_range(0.0, TAU);
            let alpha = [phi.cos() * theta.cos(), phi.sin() * theta.cos(), theta.sin()];
            let d = d_conjugator(two_ell, &alpha).unwrap();
            let d_inv = CMatrix::from_fn(d.rows(), d.cols(), |i, j| if i == j { d[(i, i)].inv() } else { ZERO });
            let tilde = sigma_su2(two_ell, &alpha).matrix.scale(-I);
            let conj = &(&d * &tilde) * &d_inv;
            let c0 = c0_matrix(two_ell, &alpha);
            assert!((&conj - &c0).max_abs() < 1e-9, "two_ell = {two_ell}");
            let target = if two_ell % 2 == 1 { c1_matrix((two_ell - 1) / 2, theta) } else { c2_matrix(two_ell / 2, theta) };
            assert!((&c0 - &target).max_abs() < 1e-12);
            let ev_conj = tridiagonal_eigenvalues(&c0).unwrap();
            let ev = imag_spectrum(&sigma_su2(two_ell, &alpha).matrix);
            assert!(max_err(&ev_conj, &ev) < 1e-10);
        }
        assert!(matches!(d_conjugator(2, &[0.0, 0.0, 1.0]), Err(Error::DegenerateConjugator)));
    }

    #[test]
    fn bracket_relations() {
        let (_, _, z) = bracket_triple(0);
        assert_eq!(z, CMatrix::from_real(2, 2, &[0.0, 0.5, -0.5, 0.0]));
        for ell in 0..=10 {
            let (x, y, z) = bracket_triple(ell);
            assert!((&x.commutator(&z) + &y).max_abs() < 1e-12, "ℓ = {ell}");
            assert!((&y.commutator(&z) - &x).max_abs() < 1e-12, "ℓ = {ell}");
        }
    }

    #[test]
    fn theta_independent_spectra() {
        let mut rng = SplitMix64::new(2024);
        for ell in 0..=8 {
            for _ in 0..10 {
                let theta = rng.uniform_range(0.0, TAU);
                let e1 = tridiagonal_eigenvalues(&c1_matrix(ell, theta)).unwrap();
                assert!(max_err(&e1, &c1_expected_spectrum(ell)) < 1e-9);
                let e2 = tridiagonal_eigenvalues(&c2_matrix(ell, theta)).unwrap();
                assert!(max_err(&e2, &c2_expected_spectrum(ell)) < 1e-9);
            }
        }
    }

    fn unit_alpha() -> impl Strategy<Value = [f64; 3]> {
        (-1.0f64..1.0, -1.0f64..1.0, -1.0f64..1.0)
            .prop_filter("non-degenerate", |(a, b, c)| a * a + b * b + c * c > 1e-3)
            .prop_map(|(a, b, c)| {
                let n = (a * a + b * b + c * c).sqrt();
                [a / n, b / n, c / n]
            })
    }

    proptest! {
        #[test]
        fn blocks_are_anti_hermitian_and_tridiagonal(two_ell in 0u32..30, alpha in unit_alpha()) {
            let m = sigma_su2(two_ell, &alpha).matrix;
            prop_assert!((&m + &m.adjoint()).max_abs() < 1e-14);
            prop_assert!(is_tridiagonal(&m));
        }

        #[test]
        fn unit_field_spectrum_table(two_ell in 0u32..24, alpha in unit_alpha()) {
            let ev = imag_spectrum(&sigma_su2(two_ell, &alpha).matrix);
            prop_assert!(max_err(&ev, &unit_field_spectrum(two_ell)) < 1e-9);
        }

        #[test]
        fn homogeneity(two_ell in 0u32..20, alpha in unit_alpha(), t in -4.0f64..4.0) {
            // Scaling by powers of two is exact in binary floating point.
            let t = 2f64.powi(t.round() as i32);
            let a = sigma_su2(two_ell, &alpha).matrix.scale_real(t);
            let b = sigma_su2(two_ell, &[alpha[0] * t, alpha[1] * t, alpha[2] * t]).matrix;
            prop_assert_eq!(a, b);
        }

        #[test]
        fn integer_spin_has_zero_eigenvalue(ell in 0u32..12, alpha in unit_alpha(), scale in 0.1f64..10.0) {
            let alpha = [alpha[0] * scale, alpha[1] * scale, alpha[2] * scale];
            let ev = imag_spectrum(&sigma_su2(2 * ell, &alpha).matrix);
            let smallest = ev.iter().map(|x| x.abs()).fold(f64::INFINITY, f64::min);
            prop_assert!(smallest < 1e-9 * (1.0 + scale));
        }
    }
}
