//! Frequency-domain algebra for the block-circulant copula correlation.
//!
//! A stationary DT×DT correlation matrix built from Toeplitz blocks is
//! approximated by circulant blocks, which share the Fourier eigenbasis
//! `w_m = (1, e^{2πim/T}, ..., e^{2πim(T-1)/T})ᵀ/√T`. Writing
//! `W = [w_0, ..., w_{T-1}]`, every block decomposes as `W Λ_{ij} Wᴴ` with
//! diagonal `Λ_{ij}`, so after a permutation that regroups coordinates by
//! frequency the full matrix becomes block-diagonal with T Hermitian D×D
//! blocks `C_j`. All fit-time computation happens on those blocks; the dense
//! DT×DT matrix is only materialized here for diagnostics.
//!
//! The DFT is applied as a direct O(T²) matrix product. Time lengths in this
//! problem domain stay in the hundreds, where the direct form is fast enough
//! and matches the matrix notation exactly.
//!
//! All indices are 0-based; the 1-based permutation rule is translated once
//! in [`PermutationIndex`].

use num_complex::Complex64;

use nalgebra::DMatrix;

use crate::copula::SpectralCorrelation;
use crate::error::{CkmmError, Result};

/// Unitary DFT basis `W` with `W[t][m] = exp(2πi·t·m/T)/√T`.
///
/// Column `m` is the circulant eigenvector `w_m`. The struct also carries the
/// conjugated, scaled row table used by the forward transform so repeated
/// spectral maps share one twiddle computation.
#[derive(Debug, Clone)]
pub struct DftBasis {
    t: usize,
    w: DMatrix<Complex64>,
    // forward[j * t + s] = conj(W[s][j]) = exp(-2πi·j·s/T)/√T
    forward: Vec<Complex64>,
}

impl DftBasis {
    pub fn t(&self) -> usize {
        self.t
    }

    /// The T×T matrix `W`.
    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.w
    }

    #[inline]
    pub(crate) fn forward_row(&self, frequency: usize) -> &[Complex64] {
        &self.forward[frequency * self.t..(frequency + 1) * self.t]
    }
}

/// Builds the unitary Fourier basis for time length `t`.
pub fn dft_basis(t: usize) -> Result<DftBasis> {
    if t == 0 {
        return Err(CkmmError::InvalidDimension(
            "DFT basis requires T >= 1".into(),
        ));
    }
    let scale = 1.0 / (t as f64).sqrt();
    let mut forward = Vec::with_capacity(t * t);
    for j in 0..t {
        for s in 0..t {
            // exp(-2πi j s / T) / √T, argument reduced mod T to limit rounding
            let k = (j * s) % t;
            let theta = -2.0 * std::f64::consts::PI * k as f64 / t as f64;
            forward.push(Complex64::from_polar(scale, theta));
        }
    }
    let w = DMatrix::from_fn(t, t, |s, j| forward[j * t + s].conj());
    Ok(DftBasis { t, w, forward })
}

/// Index form of the permutation `P` that regroups the feature-major
/// frequency coordinates by frequency.
///
/// `forward[m·D + n] = T·n + m` for `m ∈ [0,T)`, `n ∈ [0,D)`: entry `i` of
/// the permuted vector is entry `forward[i]` of the input.
#[derive(Debug, Clone)]
pub struct PermutationIndex {
    t: usize,
    d: usize,
    forward: Vec<usize>,
    inverse: Vec<usize>,
}

impl PermutationIndex {
    pub fn new(t: usize, d: usize) -> Result<Self> {
        if t == 0 || d == 0 {
            return Err(CkmmError::InvalidDimension(
                "permutation requires T >= 1 and D >= 1".into(),
            ));
        }
        let mut forward = vec![0usize; t * d];
        let mut inverse = vec![0usize; t * d];
        for m in 0..t {
            for n in 0..d {
                forward[m * d + n] = t * n + m;
            }
        }
        for (i, &j) in forward.iter().enumerate() {
            inverse[j] = i;
        }
        Ok(Self {
            t,
            d,
            forward,
            inverse,
        })
    }

    pub fn t(&self) -> usize {
        self.t
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn forward(&self) -> &[usize] {
        &self.forward
    }

    pub fn inverse(&self) -> &[usize] {
        &self.inverse
    }

    /// Applies `P`: output index `i` takes input index `forward[i]`.
    pub fn apply<T: Copy>(&self, x: &[T]) -> Vec<T> {
        self.forward.iter().map(|&j| x[j]).collect()
    }

    /// Applies `Pᵀ` (the inverse permutation).
    pub fn apply_inverse<T: Copy>(&self, x: &[T]) -> Vec<T> {
        self.inverse.iter().map(|&j| x[j]).collect()
    }
}

/// Frequency-major DFT coefficients of a feature-major DT-vector.
///
/// `block(j)[d]` is the j-th DFT coefficient of feature `d`'s series. For a
/// real input the blocks satisfy `block(T-j) = conj(block(j))`.
#[derive(Debug, Clone)]
pub struct SpectralVector {
    t: usize,
    d: usize,
    // coeffs[j * d + n]
    coeffs: Vec<Complex64>,
}

impl SpectralVector {
    pub fn t(&self) -> usize {
        self.t
    }

    pub fn d(&self) -> usize {
        self.d
    }

    #[inline]
    pub fn block(&self, frequency: usize) -> &[Complex64] {
        &self.coeffs[frequency * self.d..(frequency + 1) * self.d]
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    /// Recomputes the coefficients of a single feature from its time series.
    pub(crate) fn refresh_feature(&mut self, basis: &DftBasis, feature: usize, series: &[f64]) {
        debug_assert_eq!(series.len(), self.t);
        for j in 0..self.t {
            let row = basis.forward_row(j);
            let mut acc = Complex64::new(0.0, 0.0);
            for (s, &x) in series.iter().enumerate() {
                acc += row[s] * x;
            }
            self.coeffs[j * self.d + feature] = acc;
        }
    }
}

/// Maps a feature-major DT-vector to its per-frequency blocks:
/// `block(j)[d] = (1/√T) Σ_t q[dT+t]·exp(-2πi·j·t/T)`.
pub fn spectralize(q: &[f64], t: usize, d: usize) -> Result<SpectralVector> {
    let basis = dft_basis(t)?;
    spectralize_with_basis(q, &basis, d)
}

/// [`spectralize`] with a precomputed basis.
pub fn spectralize_with_basis(q: &[f64], basis: &DftBasis, d: usize) -> Result<SpectralVector> {
    let t = basis.t();
    if d == 0 || q.len() != t * d {
        return Err(CkmmError::InvalidDimension(format!(
            "expected a vector of length D*T = {}, got {}",
            t * d,
            q.len()
        )));
    }
    if q.iter().any(|v| !v.is_finite()) {
        return Err(CkmmError::InvalidInput(
            "spectralize input contains non-finite entries".into(),
        ));
    }
    let mut v = SpectralVector {
        t,
        d,
        coeffs: vec![Complex64::new(0.0, 0.0); t * d],
    };
    for feature in 0..d {
        v.refresh_feature(basis, feature, &q[feature * t..(feature + 1) * t]);
    }
    Ok(v)
}

/// Inverse of [`spectralize`] for real inputs: the conjugate transform per
/// feature, returning the feature-major DT-vector.
pub fn inverse_spectralize(v: &SpectralVector) -> Result<Vec<f64>> {
    let basis = dft_basis(v.t)?;
    let t = v.t;
    let mut q = vec![0.0; t * v.d];
    for feature in 0..v.d {
        for s in 0..t {
            let mut acc = Complex64::new(0.0, 0.0);
            for j in 0..t {
                // conj of the forward twiddle
                acc += basis.forward_row(j)[s].conj() * v.coeffs[j * v.d + feature];
            }
            q[feature * t + s] = acc.re;
        }
    }
    Ok(q)
}

/// Eigenvalues of the circulant approximation of a Toeplitz correlation
/// block: `λ(m) = Σ_k r(k)·exp(2πi·m·k/T)` over lags `k ∈ [-(T-1), T-1]`.
///
/// `acf` lists `(lag, value)` pairs; absent lags are zero. For a symmetric
/// acf all eigenvalues are real.
pub fn circulant_eigenvalues(acf: &[(i64, f64)], t: usize) -> Result<Vec<Complex64>> {
    if t == 0 {
        return Err(CkmmError::InvalidDimension(
            "circulant eigenvalues require T >= 1".into(),
        ));
    }
    let tf = t as f64;
    let mut lambda = vec![Complex64::new(0.0, 0.0); t];
    for (m, l) in lambda.iter_mut().enumerate() {
        for &(k, r) in acf {
            let theta = 2.0 * std::f64::consts::PI * m as f64 * k as f64 / tf;
            *l += Complex64::from_polar(r, theta);
        }
    }
    Ok(lambda)
}

/// Rebuilds the dense DT×DT matrix `R̂ = blockdiag(W)·Λ·blockdiag(Wᴴ)` from
/// frequency blocks. Diagnostics only; the fit loop never materializes it.
///
/// Entry-wise, block `(d1, d2)` of `R̂` is the circulant with symbol
/// `c(k) = (1/T) Σ_j C_j[d1][d2]·exp(2πi·j·k/T)`.
pub fn assemble_full_correlation(corr: &SpectralCorrelation) -> Result<DMatrix<f64>> {
    let t = corr.t();
    let d = corr.d();
    // conjugate symmetry across frequencies is what makes the result real
    let mut worst: f64 = 0.0;
    for j in 0..t {
        let mirror = corr.block((t - j) % t);
        let here = corr.block(j);
        for r in 0..d {
            for c in 0..d {
                worst = worst.max((mirror[(r, c)].conj() - here[(r, c)]).norm());
            }
        }
    }
    if worst > 1e-8 {
        return Err(CkmmError::InconsistentBlocks(format!(
            "conjugate symmetry violated by {worst:.3e}"
        )));
    }

    let tf = t as f64;
    let mut full = DMatrix::<f64>::zeros(d * t, d * t);
    let mut worst_imag: f64 = 0.0;
    for d1 in 0..d {
        for d2 in 0..d {
            // inverse DFT of the (d1, d2) eigenvalue sequence
            let mut symbol = vec![Complex64::new(0.0, 0.0); t];
            for (k, s) in symbol.iter_mut().enumerate() {
                for j in 0..t {
                    let theta = 2.0 * std::f64::consts::PI * (j * k % t) as f64 / tf;
                    *s += corr.block(j)[(d1, d2)] * Complex64::from_polar(1.0, theta);
                }
                *s /= tf;
                worst_imag = worst_imag.max(s.im.abs());
            }
            for t1 in 0..t {
                for t2 in 0..t {
                    // C[t1][t2] = c((t1 - t2) mod T)
                    let k = (t1 + t - t2) % t;
                    full[(d1 * t + t1, d2 * t + t2)] = symbol[k].re;
                }
            }
        }
    }
    if worst_imag > 1e-10 {
        return Err(CkmmError::InconsistentBlocks(format!(
            "imaginary residue {worst_imag:.3e} in reconstructed matrix"
        )));
    }
    // kill float dust so the output is exactly symmetric
    let sym = (&full + full.transpose()) * 0.5;
    Ok(sym)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn basis_t1_is_identity() {
        let b = dft_basis(1).unwrap();
        assert_abs_diff_eq!(b.matrix()[(0, 0)].re, 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(b.matrix()[(0, 0)].im, 0.0, epsilon = 1e-15);
    }

    #[test]
    fn basis_t2_matches_hand_values() {
        let b = dft_basis(2).unwrap();
        let s = 1.0 / 2.0_f64.sqrt();
        let expect = [[s, s], [s, -s]];
        for r in 0..2 {
            for c in 0..2 {
                assert_abs_diff_eq!(b.matrix()[(r, c)].re, expect[r][c], epsilon = 1e-12);
                assert_abs_diff_eq!(b.matrix()[(r, c)].im, 0.0, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn basis_is_unitary() {
        for t in [1usize, 2, 3, 4, 7, 16] {
            let b = dft_basis(t).unwrap();
            let prod = b.matrix() * b.matrix().adjoint();
            for r in 0..t {
                for c in 0..t {
                    let expect = if r == c { 1.0 } else { 0.0 };
                    assert!((prod[(r, c)].re - expect).abs() < 1e-12);
                    assert!(prod[(r, c)].im.abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn basis_rejects_zero() {
        assert!(dft_basis(0).is_err());
    }

    #[test]
    fn permutation_rule_and_roundtrip() {
        let p = PermutationIndex::new(3, 2).unwrap();
        // forward[m*D + n] = T*n + m
        assert_eq!(p.forward(), &[0, 3, 1, 4, 2, 5]);
        for t in 1..=8usize {
            for d in 1..=4usize {
                let p = PermutationIndex::new(t, d).unwrap();
                let x: Vec<usize> = (0..t * d).collect();
                assert_eq!(p.apply_inverse(&p.apply(&x)), x);
                assert_eq!(p.apply(&p.apply_inverse(&x)), x);
            }
        }
    }

    #[test]
    fn spectralize_constant_and_nyquist() {
        let v = spectralize(&[1.0, 1.0], 2, 1).unwrap();
        let s2 = 2.0_f64.sqrt();
        assert_abs_diff_eq!(v.block(0)[0].re, s2, epsilon = 1e-12);
        assert_abs_diff_eq!(v.block(1)[0].norm(), 0.0, epsilon = 1e-12);

        let v = spectralize(&[1.0, -1.0], 2, 1).unwrap();
        assert_abs_diff_eq!(v.block(0)[0].norm(), 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(v.block(1)[0].re, s2, epsilon = 1e-12);
    }

    #[test]
    fn spectralize_rejects_non_finite() {
        assert!(spectralize(&[1.0, f64::INFINITY], 2, 1).is_err());
        assert!(spectralize(&[1.0, 2.0, 3.0], 2, 1).is_err());
    }

    #[test]
    fn identity_acf_gives_flat_spectrum() {
        let lambda = circulant_eigenvalues(&[(0, 1.0)], 4).unwrap();
        for l in lambda {
            assert_abs_diff_eq!(l.re, 1.0, epsilon = 1e-12);
            assert_abs_diff_eq!(l.im, 0.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn two_point_circulant_eigenvalues_by_hand() {
        // circulant [[1, 1], [1, 1]] has eigenvalues (2, 0)
        let lambda = circulant_eigenvalues(&[(0, 1.0), (1, 0.5), (-1, 0.5)], 2).unwrap();
        assert_abs_diff_eq!(lambda[0].re, 2.0, epsilon = 1e-12);
        assert_abs_diff_eq!(lambda[1].re, 0.0, epsilon = 1e-12);
    }
}
