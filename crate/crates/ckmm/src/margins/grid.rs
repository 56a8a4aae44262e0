//! Grid-accelerated KDE evaluation for the fit loop.
//!
//! The GEM iteration needs the log-density, CDF, and smoothing-operator
//! values of each (feature, cluster) KDE at every pooled data point, for
//! every candidate bandwidth. Direct kernel sums would cost O((NT)²) per
//! candidate, so the fit evaluates each KDE on a fixed uniform grid instead:
//! point masses are spread onto the grid by linear binning, convolved with
//! the Gaussian kernel in the frequency domain (the kernel transfer function
//! `e^{-h²ω²/2}` is analytic), and queried by linear interpolation. The grid
//! spans the data range plus twelve maximal bandwidths on each side, so all
//! query points and quadrature nodes fall strictly inside it.
//!
//! One binned-mass FFT is shared by all candidate bandwidths of a search, so
//! each candidate costs one inverse FFT plus two O(m) passes.

use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{CkmmError, Result};
use crate::margins::{gauss_hermite_20, CDF_CLIP};

pub(crate) const GRID_SIZE: usize = 8192;

const DENSITY_FLOOR: f64 = 1e-300;

#[derive(Clone)]
pub(crate) struct FftPlans {
    m: usize,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
}

impl FftPlans {
    pub fn new(m: usize) -> Self {
        let mut planner = FftPlanner::new();
        Self {
            m,
            fwd: planner.plan_fft_forward(m),
            inv: planner.plan_fft_inverse(m),
        }
    }

    pub fn size(&self) -> usize {
        self.m
    }
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct GridGeometry {
    pub x0: f64,
    pub dx: f64,
    pub m: usize,
}

impl GridGeometry {
    /// Geometry covering `[lo - pad, hi + pad]` with `m` nodes.
    pub fn covering(lo: f64, hi: f64, pad: f64, m: usize) -> Self {
        let x0 = lo - pad;
        let span = (hi + pad) - x0;
        let dx = if span > 0.0 {
            span / (m - 1) as f64
        } else {
            // degenerate data; any positive spacing works
            1.0 / (m - 1) as f64
        };
        Self { x0, dx, m }
    }
}

/// Binned point masses of one (feature, cluster) sample, in the frequency
/// domain, ready to be convolved with any kernel width.
pub(crate) struct BinnedSample {
    geom: GridGeometry,
    mass_fft: Vec<Complex64>,
}

impl BinnedSample {
    pub fn new(
        geom: GridGeometry,
        points: &[f64],
        weights: &[f64],
        plans: &FftPlans,
    ) -> Result<Self> {
        debug_assert_eq!(points.len(), weights.len());
        debug_assert_eq!(plans.size(), geom.m);
        let total: f64 = weights.iter().sum();
        if total <= 0.0 {
            return Err(CkmmError::DegenerateCluster);
        }
        let mut mass = vec![Complex64::new(0.0, 0.0); geom.m];
        let inv_total = 1.0 / total;
        for (&x, &w) in points.iter().zip(weights) {
            if w == 0.0 {
                continue;
            }
            let p = (x - geom.x0) / geom.dx;
            let i = (p.floor() as usize).min(geom.m - 2);
            let frac = (p - i as f64).clamp(0.0, 1.0);
            mass[i].re += w * inv_total * (1.0 - frac);
            mass[i + 1].re += w * inv_total * frac;
        }
        plans.fwd.process(&mut mass);
        Ok(Self {
            geom,
            mass_fft: mass,
        })
    }

    /// Convolves the binned masses with a Gaussian of width `h` and tabulates
    /// log-density and CDF over the grid.
    pub fn evaluator(&self, h: f64, plans: &FftPlans) -> GridEvaluator {
        let m = self.geom.m;
        let dx = self.geom.dx;
        let mut buf = self.mass_fft.clone();
        let omega0 = 2.0 * std::f64::consts::PI / (m as f64 * dx);
        for (k, v) in buf.iter_mut().enumerate() {
            let freq = if k <= m / 2 { k as f64 } else { k as f64 - m as f64 };
            let omega = omega0 * freq;
            *v *= (-0.5 * h * h * omega * omega).exp();
        }
        plans.inv.process(&mut buf);
        let scale = 1.0 / (m as f64 * dx);
        let mut log_pdf = Vec::with_capacity(m);
        let mut cdf = Vec::with_capacity(m);
        let mut acc = 0.0;
        let mut prev = 0.0;
        for (i, v) in buf.iter().enumerate() {
            let p = (v.re * scale).max(0.0);
            if i > 0 {
                acc += 0.5 * (prev + p) * dx;
            }
            prev = p;
            cdf.push(acc);
            log_pdf.push(p.max(DENSITY_FLOOR).ln());
        }
        let norm = if acc > 0.0 { 1.0 / acc } else { 1.0 };
        for c in &mut cdf {
            *c *= norm;
        }
        GridEvaluator {
            geom: self.geom,
            h,
            log_pdf,
            cdf,
        }
    }
}

/// Tabulated log-density and CDF of one KDE at one bandwidth.
pub(crate) struct GridEvaluator {
    geom: GridGeometry,
    h: f64,
    log_pdf: Vec<f64>,
    cdf: Vec<f64>,
}

impl GridEvaluator {
    pub fn bandwidth(&self) -> f64 {
        self.h
    }

    #[inline]
    fn interp(&self, table: &[f64], x: f64) -> f64 {
        let p = ((x - self.geom.x0) / self.geom.dx).clamp(0.0, (self.geom.m - 1) as f64);
        let i = (p.floor() as usize).min(self.geom.m - 2);
        let frac = p - i as f64;
        table[i] * (1.0 - frac) + table[i + 1] * frac
    }

    #[inline]
    pub fn log_pdf_at(&self, x: f64) -> f64 {
        self.interp(&self.log_pdf, x)
    }

    #[inline]
    pub fn cdf_at(&self, x: f64) -> f64 {
        self.interp(&self.cdf, x).clamp(CDF_CLIP, 1.0 - CDF_CLIP)
    }

    /// Gauss–Hermite expectation of the tabulated log-density under
    /// `Normal(x, h_query²)`.
    pub fn smoothed_log_pdf(&self, x: f64, h_query: f64) -> f64 {
        let (nodes, weights) = gauss_hermite_20();
        let scale = std::f64::consts::SQRT_2 * h_query;
        let mut acc = 0.0;
        for (&xi, &wi) in nodes.iter().zip(weights) {
            acc += wi * self.log_pdf_at(x + scale * xi);
        }
        acc / std::f64::consts::PI.sqrt()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::margins::WeightedKde;

    /// Grid evaluation must track the exact kernel sums closely enough that
    /// likelihood comparisons are meaningful.
    #[test]
    fn grid_matches_exact_kde() {
        use rand::Rng;
        let mut rng = <rand_chacha::ChaCha8Rng as rand::SeedableRng>::seed_from_u64(42);
        let points: Vec<f64> = (0..400).map(|_| rng.random::<f64>() * 4.0 - 2.0).collect();
        let weights: Vec<f64> = (0..400).map(|_| 0.5 + rng.random::<f64>()).collect();
        let h = 0.15;
        let kde = WeightedKde::from_point_weights(points.clone(), weights.clone(), h).unwrap();

        let plans = FftPlans::new(GRID_SIZE);
        let lo = points.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = points.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let geom = GridGeometry::covering(lo, hi, 12.0 * h, GRID_SIZE);
        let binned = BinnedSample::new(geom, &points, &weights, &plans).unwrap();
        let eval = binned.evaluator(h, &plans);

        for i in 0..200 {
            let x = lo + (hi - lo) * i as f64 / 199.0;
            let exact_log = kde.log_pdf(x);
            let exact_cdf = kde.cdf(x);
            assert!(
                (eval.log_pdf_at(x) - exact_log).abs() < 5e-4,
                "log pdf mismatch at {x}: {} vs {exact_log}",
                eval.log_pdf_at(x)
            );
            assert!(
                (eval.cdf_at(x) - exact_cdf).abs() < 5e-4,
                "cdf mismatch at {x}: {} vs {exact_cdf}",
                eval.cdf_at(x)
            );
        }

        let sm_grid = eval.smoothed_log_pdf(0.3, h);
        let sm_exact = kde.smoothed_log_density(0.3, h).unwrap();
        assert!((sm_grid - sm_exact).abs() < 5e-4);
    }

    #[test]
    fn grid_cdf_is_monotone() {
        let plans = FftPlans::new(GRID_SIZE);
        let points = [0.0, 0.5, 2.0, 2.2];
        let weights = [1.0, 2.0, 1.0, 0.5];
        let geom = GridGeometry::covering(0.0, 2.2, 1.5, GRID_SIZE);
        let binned = BinnedSample::new(geom, &points, &weights, &plans).unwrap();
        let eval = binned.evaluator(0.1, &plans);
        let mut prev = 0.0;
        for i in 0..500 {
            let x = -1.0 + 4.5 * i as f64 / 499.0;
            let c = eval.cdf_at(x);
            assert!(c >= prev);
            prev = c;
        }
    }
}
