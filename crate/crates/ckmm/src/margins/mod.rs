//! Marginal distributions: weighted Gaussian kernel density estimates, the
//! log-density smoothing operator, bandwidth heuristics, and the parametric
//! margins used by the simulator.
//!
//! One KDE is maintained per (feature, cluster); every time point of a
//! subject shares that subject's posterior weight, so the estimate is
//!
//! `f̂(u) = 1/(T·Σ_n p_n) · Σ_n Σ_t p_n · K_h(x_{nt}, u)`
//!
//! with the Gaussian kernel `K_h(x, u) = φ((u-x)/h)/h`. The smoothing
//! operator expectation `∫ K_h(x, u) log f̂(u) du` is evaluated by 20-point
//! Gauss–Hermite quadrature, which is exact for the Gaussian weight against
//! polynomial integrands up to degree 39.

pub(crate) mod grid;

use statrs::distribution::{Continuous, ContinuousCDF, Normal, StudentsT};
use statrs::function::erf::erfc;

use crate::error::{CkmmError, Result};

/// CDF values are clipped to `[CDF_CLIP, 1 - CDF_CLIP]` before any quantile
/// transform, which caps |Φ⁻¹| near 6.4 and keeps the copula quadratic form
/// finite.
pub const CDF_CLIP: f64 = 1e-10;

/// Kernel contributions beyond this many bandwidths are below
/// double-precision resolution (φ(12) ≈ 2e-32) and are skipped.
const KERNEL_CUTOFF: f64 = 12.0;

/// Density evaluations are floored here so logs stay finite.
const DENSITY_FLOOR: f64 = 1e-300;

const SQRT_2PI: f64 = 2.506628274631000502;

#[inline]
pub(crate) fn normal_pdf(z: f64) -> f64 {
    (-0.5 * z * z).exp() / SQRT_2PI
}

/// Standard normal CDF.
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * erfc(-x / std::f64::consts::SQRT_2)
}

/// Standard normal quantile Φ⁻¹(p) for p in (0, 1).
pub fn normal_quantile(p: f64) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return Err(CkmmError::Domain(format!(
            "normal quantile requires p in (0,1), got {p}"
        )));
    }
    Ok(Normal::standard().inverse_cdf(p))
}

/// Parametric margin used by the simulator and the true-parameter baseline.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MarginSpec {
    Normal { mean: f64, variance: f64 },
    /// Standard Student t with `df > 2` degrees of freedom (finite variance).
    StudentT { df: f64 },
}

impl MarginSpec {
    pub fn validate(&self) -> Result<()> {
        match *self {
            MarginSpec::Normal { variance, .. } if variance <= 0.0 => Err(CkmmError::Domain(
                format!("normal margin requires variance > 0, got {variance}"),
            )),
            MarginSpec::StudentT { df } if df <= 2.0 => Err(CkmmError::Domain(format!(
                "t margin requires df > 2, got {df}"
            ))),
            _ => Ok(()),
        }
    }

    pub fn mean(&self) -> f64 {
        match *self {
            MarginSpec::Normal { mean, .. } => mean,
            MarginSpec::StudentT { .. } => 0.0,
        }
    }

    pub fn variance(&self) -> f64 {
        match *self {
            MarginSpec::Normal { variance, .. } => variance,
            MarginSpec::StudentT { df } => df / (df - 2.0),
        }
    }

    pub fn pdf(&self, x: f64) -> f64 {
        match *self {
            MarginSpec::Normal { mean, variance } => {
                let sd = variance.sqrt();
                normal_pdf((x - mean) / sd) / sd
            }
            MarginSpec::StudentT { df } => StudentsT::new(0.0, 1.0, df).unwrap().pdf(x),
        }
    }

    pub fn cdf(&self, x: f64) -> f64 {
        match *self {
            MarginSpec::Normal { mean, variance } => normal_cdf((x - mean) / variance.sqrt()),
            MarginSpec::StudentT { df } => StudentsT::new(0.0, 1.0, df).unwrap().cdf(x),
        }
    }

    /// F⁻¹(p) for p in (0, 1).
    pub fn quantile(&self, p: f64) -> Result<f64> {
        if !(p > 0.0 && p < 1.0) {
            return Err(CkmmError::Domain(format!(
                "margin quantile requires p in (0,1), got {p}"
            )));
        }
        self.validate()?;
        Ok(match *self {
            MarginSpec::Normal { mean, variance } => {
                mean + variance.sqrt() * Normal::standard().inverse_cdf(p)
            }
            MarginSpec::StudentT { df } => StudentsT::new(0.0, 1.0, df).unwrap().inverse_cdf(p),
        })
    }
}

/// Weighted Gaussian KDE over the pooled time points of one feature.
///
/// Points are kept sorted with per-point weights and a weight prefix table,
/// so density and CDF evaluations only touch the kernel window around the
/// query.
#[derive(Debug, Clone)]
pub struct WeightedKde {
    points: Vec<f64>,
    weights: Vec<f64>,
    prefix: Vec<f64>,
    total: f64,
    bandwidth: f64,
}

impl WeightedKde {
    /// Builds the estimate from an N×T point matrix (flattened row-major)
    /// and one weight per subject; all T points of subject `n` share
    /// `weights[n]`.
    pub fn from_subject_weights(data: &[f64], weights: &[f64], bandwidth: f64) -> Result<Self> {
        if weights.is_empty() || data.len() % weights.len() != 0 {
            return Err(CkmmError::InvalidInput(format!(
                "point count {} is not a multiple of subject count {}",
                data.len(),
                weights.len()
            )));
        }
        let t = data.len() / weights.len();
        let mut point_weights = Vec::with_capacity(data.len());
        for &w in weights {
            point_weights.extend(std::iter::repeat(w).take(t));
        }
        Self::from_point_weights(data.to_vec(), point_weights, bandwidth)
    }

    /// Builds the estimate from points with individual weights.
    pub fn from_point_weights(
        points: Vec<f64>,
        weights: Vec<f64>,
        bandwidth: f64,
    ) -> Result<Self> {
        if points.len() != weights.len() || points.is_empty() {
            return Err(CkmmError::InvalidInput(
                "points and weights must be equal-length and non-empty".into(),
            ));
        }
        if bandwidth <= 0.0 || !bandwidth.is_finite() {
            return Err(CkmmError::Domain(format!(
                "bandwidth must be positive and finite, got {bandwidth}"
            )));
        }
        if points.iter().any(|x| !x.is_finite()) {
            return Err(CkmmError::InvalidInput("non-finite data point".into()));
        }
        if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(CkmmError::InvalidInput(
                "weights must be finite and nonnegative".into(),
            ));
        }
        let total: f64 = weights.iter().sum();
        if total <= 0.0 {
            return Err(CkmmError::DegenerateCluster);
        }
        let mut order: Vec<usize> = (0..points.len()).collect();
        order.sort_by(|&a, &b| points[a].partial_cmp(&points[b]).unwrap());
        let points: Vec<f64> = order.iter().map(|&i| points[i]).collect();
        let weights: Vec<f64> = order.iter().map(|&i| weights[i]).collect();
        let mut prefix = Vec::with_capacity(points.len() + 1);
        let mut acc = 0.0;
        prefix.push(0.0);
        for &w in &weights {
            acc += w;
            prefix.push(acc);
        }
        Ok(Self {
            points,
            weights,
            prefix,
            total,
            bandwidth,
        })
    }

    pub fn bandwidth(&self) -> f64 {
        self.bandwidth
    }

    /// Sorted evaluation points.
    pub fn points(&self) -> &[f64] {
        &self.points
    }

    /// Per-point weights, aligned with [`points`](Self::points).
    pub fn point_weights(&self) -> &[f64] {
        &self.weights
    }

    /// Same points and weights under a different bandwidth.
    pub(crate) fn with_bandwidth(&self, bandwidth: f64) -> Self {
        let mut kde = self.clone();
        kde.bandwidth = bandwidth;
        kde
    }

    fn window(&self, u: f64) -> (usize, usize) {
        let r = KERNEL_CUTOFF * self.bandwidth;
        let lo = self.points.partition_point(|&x| x < u - r);
        let hi = self.points.partition_point(|&x| x <= u + r);
        (lo, hi)
    }

    /// Mixture density `f̂(u)`; strictly positive (floored at 1e-300).
    pub fn pdf(&self, u: f64) -> f64 {
        let (lo, hi) = self.window(u);
        let mut acc = 0.0;
        for i in lo..hi {
            let z = (u - self.points[i]) / self.bandwidth;
            acc += self.weights[i] * (-0.5 * z * z).exp();
        }
        (acc / (self.bandwidth * SQRT_2PI * self.total)).max(DENSITY_FLOOR)
    }

    pub fn log_pdf(&self, u: f64) -> f64 {
        self.pdf(u).ln()
    }

    /// `F̂(u)`, clipped to `[CDF_CLIP, 1 - CDF_CLIP]`.
    pub fn cdf(&self, u: f64) -> f64 {
        let (lo, hi) = self.window(u);
        let mut acc = self.prefix[lo];
        for i in lo..hi {
            let z = (u - self.points[i]) / self.bandwidth;
            acc += self.weights[i] * normal_cdf(z);
        }
        (acc / self.total).clamp(CDF_CLIP, 1.0 - CDF_CLIP)
    }

    /// Smoothing-operator expectation `E[log f̂(U)]` with
    /// `U ~ Normal(x, h_query²)`, by 20-point Gauss–Hermite quadrature.
    pub fn smoothed_log_density(&self, x: f64, h_query: f64) -> Result<f64> {
        if h_query <= 0.0 || !h_query.is_finite() {
            return Err(CkmmError::Domain(format!(
                "query bandwidth must be positive, got {h_query}"
            )));
        }
        let (nodes, weights) = gauss_hermite_20();
        let scale = std::f64::consts::SQRT_2 * h_query;
        let mut acc = 0.0;
        for (&xi, &wi) in nodes.iter().zip(weights) {
            acc += wi * self.log_pdf(x + scale * xi);
        }
        Ok(acc / std::f64::consts::PI.sqrt())
    }
}

/// Weighted Silverman rule-of-thumb bandwidth with per-point weights:
/// `h = 0.9·min(σ̂_w, IQR_w/1.34)·n_eff^{-1/5}`, `n_eff = (Σw)²/Σw²`.
///
/// Used only to initialize the GEM bandwidths. Zero spread falls back to the
/// floor `1e-3·(1+|mean|)`.
pub fn silverman_bandwidth(data: &[f64], weights: &[f64]) -> Result<f64> {
    if data.len() != weights.len() || data.is_empty() {
        return Err(CkmmError::InvalidInput(
            "data and weights must be equal-length and non-empty".into(),
        ));
    }
    let w_sum: f64 = weights.iter().sum();
    if w_sum <= 0.0 {
        return Err(CkmmError::DegenerateCluster);
    }
    let mean: f64 = data.iter().zip(weights).map(|(x, w)| x * w).sum::<f64>() / w_sum;
    let var: f64 = data
        .iter()
        .zip(weights)
        .map(|(x, w)| w * (x - mean) * (x - mean))
        .sum::<f64>()
        / w_sum;
    let sd = var.max(0.0).sqrt();

    let mut order: Vec<usize> = (0..data.len()).collect();
    order.sort_by(|&a, &b| data[a].partial_cmp(&data[b]).unwrap());
    let quantile = |p: f64| -> f64 {
        let target = p * w_sum;
        let mut acc = 0.0;
        for &i in &order {
            acc += weights[i];
            if acc >= target {
                return data[i];
            }
        }
        data[*order.last().unwrap()]
    };
    let iqr = quantile(0.75) - quantile(0.25);

    let spread = if iqr > 0.0 && sd > 0.0 {
        sd.min(iqr / 1.34)
    } else {
        sd.max(iqr / 1.34)
    };
    if spread <= 0.0 {
        return Ok(1e-3 * (1.0 + mean.abs()));
    }
    let n_eff = w_sum * w_sum / weights.iter().map(|w| w * w).sum::<f64>();
    let h = 0.9 * spread * n_eff.powf(-0.2);
    if h > 0.0 && h.is_finite() {
        Ok(h)
    } else {
        Ok(1e-3 * (1.0 + mean.abs()))
    }
}

/// Nodes and weights for 20-point Gauss–Hermite quadrature
/// (`∫ e^{-x²} f(x) dx ≈ Σ w_i f(x_i)`).
pub(crate) fn gauss_hermite_20() -> (&'static [f64], &'static [f64]) {
    use std::sync::OnceLock;
    static TABLE: OnceLock<(Vec<f64>, Vec<f64>)> = OnceLock::new();
    let (x, w) = TABLE.get_or_init(|| gauss_hermite(20));
    (x, w)
}

/// Gauss–Hermite nodes and weights by Newton iteration on the orthonormal
/// Hermite recurrence.
pub(crate) fn gauss_hermite(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 2);
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let nf = n as f64;
    let mut z = 0.0;
    for i in 0..(n + 1) / 2 {
        // initial guesses for roots in decreasing order
        z = match i {
            0 => (2.0 * nf + 1.0).sqrt() - 1.85575 * (2.0 * nf + 1.0).powf(-1.0 / 6.0),
            1 => z - 1.14 * nf.powf(0.426) / z,
            2 => 1.86 * z - 0.86 * x[0],
            3 => 1.91 * z - 0.91 * x[1],
            _ => 2.0 * z - x[i - 2],
        };
        let mut pp = 0.0;
        for _ in 0..100 {
            // orthonormal Hermite polynomials up to degree n at z
            let mut p1 = std::f64::consts::PI.powf(-0.25);
            let mut p2 = 0.0;
            for j in 1..=n {
                let jf = j as f64;
                let p3 = p2;
                p2 = p1;
                p1 = z * (2.0 / jf).sqrt() * p2 - ((jf - 1.0) / jf).sqrt() * p3;
            }
            pp = (2.0 * nf).sqrt() * p2;
            let dz = p1 / pp;
            z -= dz;
            if dz.abs() < 1e-15 {
                break;
            }
        }
        x[i] = z;
        x[n - 1 - i] = -z;
        w[i] = 2.0 / (pp * pp);
        w[n - 1 - i] = w[i];
    }
    (x, w)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn gauss_hermite_moments() {
        let (x, w) = gauss_hermite(20);
        let root_pi = std::f64::consts::PI.sqrt();
        let m0: f64 = w.iter().sum();
        let m2: f64 = x.iter().zip(&w).map(|(x, w)| w * x * x).sum();
        let m4: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(4)).sum();
        assert_abs_diff_eq!(m0, root_pi, epsilon = 1e-12);
        assert_abs_diff_eq!(m2, root_pi / 2.0, epsilon = 1e-12);
        assert_abs_diff_eq!(m4, 3.0 * root_pi / 4.0, epsilon = 1e-11);
    }

    #[test]
    fn kde_single_point_peak() {
        let kde = WeightedKde::from_subject_weights(&[0.0], &[1.0], 1.0).unwrap();
        assert_abs_diff_eq!(kde.pdf(0.0), 1.0 / SQRT_2PI, epsilon = 1e-12);
    }

    #[test]
    fn kde_two_point_symmetry() {
        let kde = WeightedKde::from_subject_weights(&[0.0, 2.0], &[0.5, 0.5], 1.0).unwrap();
        assert_abs_diff_eq!(kde.pdf(1.0), normal_pdf(1.0), epsilon = 1e-12);
    }

    #[test]
    fn kde_rejects_zero_weights() {
        let err = WeightedKde::from_subject_weights(&[0.0, 1.0], &[0.0, 0.0], 1.0).unwrap_err();
        assert!(matches!(err, CkmmError::DegenerateCluster));
    }

    #[test]
    fn kde_cdf_midpoint_and_clipping() {
        let kde = WeightedKde::from_subject_weights(&[0.0], &[1.0], 1.0).unwrap();
        assert_abs_diff_eq!(kde.cdf(0.0), 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(kde.cdf(1e6), 1.0 - CDF_CLIP, epsilon = 0.0);
        assert_abs_diff_eq!(kde.cdf(-1e6), CDF_CLIP, epsilon = 0.0);
    }

    #[test]
    fn smoothed_log_density_degenerate_query() {
        let kde = WeightedKde::from_subject_weights(&[0.0], &[1.0], 1.0).unwrap();
        let v = kde.smoothed_log_density(0.0, 1e-8).unwrap();
        assert_abs_diff_eq!(v, (1.0 / SQRT_2PI).ln(), epsilon = 1e-10);
    }

    #[test]
    fn smoothed_log_density_gaussian_moment() {
        // E[log φ(U)] with U ~ N(0,1) is log(1/√2π) - 1/2
        let kde = WeightedKde::from_subject_weights(&[0.0], &[1.0], 1.0).unwrap();
        let v = kde.smoothed_log_density(0.0, 1.0).unwrap();
        assert_abs_diff_eq!(v, (1.0 / SQRT_2PI).ln() - 0.5, epsilon = 1e-12);
    }

    #[test]
    fn normal_quantile_basics() {
        assert_abs_diff_eq!(normal_quantile(0.5).unwrap(), 0.0, epsilon = 1e-12);
        assert!(normal_quantile(0.0).is_err());
        assert!(normal_quantile(1.0).is_err());
    }

    #[test]
    fn margin_medians() {
        let normal = MarginSpec::Normal {
            mean: 1.0,
            variance: 1.0718,
        };
        assert_abs_diff_eq!(normal.quantile(0.5).unwrap(), 1.0, epsilon = 1e-9);
        let t = MarginSpec::StudentT { df: 10.0 };
        assert_abs_diff_eq!(t.quantile(0.5).unwrap(), 0.0, epsilon = 1e-9);
    }

    #[test]
    fn margin_validation() {
        assert!(MarginSpec::Normal {
            mean: 0.0,
            variance: 0.0
        }
        .validate()
        .is_err());
        assert!(MarginSpec::StudentT { df: 2.0 }.validate().is_err());
    }

    #[test]
    fn silverman_on_single_subject() {
        // all weight on one subject: n_eff equals that subject's T points
        let data = [0.0, 1.0, 2.0, 3.0, 1.5, 2.5, 0.5, 3.5];
        let weights = [1.0, 1.0, 1.0, 1.0, 0.0, 0.0, 0.0, 0.0];
        let h = silverman_bandwidth(&data, &weights).unwrap();
        assert!(h > 0.0 && h.is_finite());
    }

    #[test]
    fn silverman_constant_data_floor() {
        let h = silverman_bandwidth(&[3.0; 10], &[1.0; 10]).unwrap();
        assert_abs_diff_eq!(h, 1e-3 * 4.0, epsilon = 1e-15);
    }
}
