//! Balanced longitudinal dataset container.
//!
//! Every subject is observed for the same `D` features at the same `T` time
//! points. Values are stored subject-major, and feature-major within each
//! subject, so `feature_series(n, d)` is a contiguous `T`-slice and
//! `subject_vector(n)` is the DT-vector `(x_{11..1T}, ..., x_{D1..DT})`.

use crate::error::{CkmmError, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct LongitudinalDataset {
    n_subjects: usize,
    n_features: usize,
    n_times: usize,
    values: Vec<f64>,
}

impl LongitudinalDataset {
    /// Builds a dataset from a flat value buffer laid out as
    /// `values[(n * D + d) * T + t]`.
    pub fn new(
        n_subjects: usize,
        n_features: usize,
        n_times: usize,
        values: Vec<f64>,
    ) -> Result<Self> {
        if n_subjects == 0 || n_features == 0 || n_times == 0 {
            return Err(CkmmError::InvalidDimension(format!(
                "dataset dimensions must be positive, got N={n_subjects}, D={n_features}, T={n_times}"
            )));
        }
        let expected = n_subjects * n_features * n_times;
        if values.len() != expected {
            return Err(CkmmError::InvalidInput(format!(
                "expected {expected} values for N={n_subjects}, D={n_features}, T={n_times}, got {}",
                values.len()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(CkmmError::InvalidInput(format!(
                "non-finite value at flat index {i}"
            )));
        }
        Ok(Self {
            n_subjects,
            n_features,
            n_times,
            values,
        })
    }

    pub fn n_subjects(&self) -> usize {
        self.n_subjects
    }

    pub fn n_features(&self) -> usize {
        self.n_features
    }

    pub fn n_times(&self) -> usize {
        self.n_times
    }

    #[inline]
    pub fn value(&self, subject: usize, feature: usize, time: usize) -> f64 {
        self.values[(subject * self.n_features + feature) * self.n_times + time]
    }

    /// The contiguous time series of one feature for one subject.
    #[inline]
    pub fn feature_series(&self, subject: usize, feature: usize) -> &[f64] {
        let start = (subject * self.n_features + feature) * self.n_times;
        &self.values[start..start + self.n_times]
    }

    /// The feature-major DT-vector of one subject.
    #[inline]
    pub fn subject_vector(&self, subject: usize) -> &[f64] {
        let dt = self.n_features * self.n_times;
        &self.values[subject * dt..(subject + 1) * dt]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// All observations of one feature pooled over subjects and times,
    /// as an N×T row-major matrix flattened to a vector.
    pub fn feature_matrix(&self, feature: usize) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.n_subjects * self.n_times);
        for n in 0..self.n_subjects {
            out.extend_from_slice(self.feature_series(n, feature));
        }
        out
    }

    /// First differences along time; the result has `T - 1` time points.
    pub fn difference(&self) -> Result<Self> {
        if self.n_times < 2 {
            return Err(CkmmError::InvalidDimension(
                "differencing requires at least two time points".into(),
            ));
        }
        let nt = self.n_times - 1;
        let mut values = Vec::with_capacity(self.n_subjects * self.n_features * nt);
        for n in 0..self.n_subjects {
            for d in 0..self.n_features {
                let s = self.feature_series(n, d);
                for t in 0..nt {
                    values.push(s[t + 1] - s[t]);
                }
            }
        }
        Self::new(self.n_subjects, self.n_features, nt, values)
    }

    /// Rescales each feature to zero mean and unit variance over the pooled
    /// sample; returns the transformed dataset and per-feature `(mean, sd)`.
    pub fn standardize(&self) -> Result<(Self, Vec<(f64, f64)>)> {
        let count = (self.n_subjects * self.n_times) as f64;
        let mut stats = Vec::with_capacity(self.n_features);
        for d in 0..self.n_features {
            let mut sum = 0.0;
            for n in 0..self.n_subjects {
                sum += self.feature_series(n, d).iter().sum::<f64>();
            }
            let mean = sum / count;
            let mut ss = 0.0;
            for n in 0..self.n_subjects {
                for &x in self.feature_series(n, d) {
                    ss += (x - mean) * (x - mean);
                }
            }
            let sd = (ss / count).sqrt();
            if sd <= 0.0 {
                return Err(CkmmError::InvalidInput(format!(
                    "feature {d} has zero spread; cannot standardize"
                )));
            }
            stats.push((mean, sd));
        }
        let mut values = Vec::with_capacity(self.values.len());
        for n in 0..self.n_subjects {
            for d in 0..self.n_features {
                let (mean, sd) = stats[d];
                for &x in self.feature_series(n, d) {
                    values.push((x - mean) / sd);
                }
            }
        }
        Ok((
            Self::new(self.n_subjects, self.n_features, self.n_times, values)?,
            stats,
        ))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy() -> LongitudinalDataset {
        // two subjects, two features, three times
        LongitudinalDataset::new(
            2,
            2,
            3,
            vec![
                1.0, 2.0, 3.0, // n=0 d=0
                4.0, 5.0, 6.0, // n=0 d=1
                7.0, 8.0, 9.0, // n=1 d=0
                10.0, 11.0, 12.0, // n=1 d=1
            ],
        )
        .unwrap()
    }

    #[test]
    fn layout_accessors() {
        let ds = toy();
        assert_eq!(ds.value(0, 1, 2), 6.0);
        assert_eq!(ds.feature_series(1, 0), &[7.0, 8.0, 9.0]);
        assert_eq!(ds.subject_vector(0), &[1.0, 2.0, 3.0, 4.0, 5.0, 6.0]);
        assert_eq!(ds.feature_matrix(1), vec![4.0, 5.0, 6.0, 10.0, 11.0, 12.0]);
    }

    #[test]
    fn rejects_bad_shapes_and_values() {
        assert!(LongitudinalDataset::new(0, 1, 1, vec![]).is_err());
        assert!(LongitudinalDataset::new(1, 1, 2, vec![1.0]).is_err());
        assert!(LongitudinalDataset::new(1, 1, 2, vec![1.0, f64::NAN]).is_err());
    }

    #[test]
    fn difference_drops_one_time_point() {
        let ds = toy().difference().unwrap();
        assert_eq!(ds.n_times(), 2);
        assert_eq!(ds.feature_series(0, 0), &[1.0, 1.0]);
    }

    #[test]
    fn standardize_zero_mean_unit_sd() {
        let (std, stats) = toy().standardize().unwrap();
        for d in 0..2 {
            let m = std.feature_matrix(d);
            let mean: f64 = m.iter().sum::<f64>() / m.len() as f64;
            let var: f64 = m.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / m.len() as f64;
            assert!(mean.abs() < 1e-12);
            assert!((var - 1.0).abs() < 1e-12);
            assert!(stats[d].1 > 0.0);
        }
    }
}
