//! Sliding-window least-squares estimator used as the data-driven baseline.
//!
//! The last `N` outputs are fitted with the quadratic model
//! `y(k - j) ≈ x1 - (jT) x2 + (jT)²/2 x3`, `j = 0 … N-1`, so the fitted
//! value, slope and curvature at the newest sample estimate `(x1, x2, x3)`.
//! Inputs are not regressed on; `x3` plays the extended-state role.

use std::collections::VecDeque;

use crate::error::{Error, Result};
use crate::linalg::Mat;
use crate::scalar::{lit, Real};

#[derive(Debug, Clone, PartialEq)]
pub struct DdConfig<T> {
    pub n_samples: usize,
    pub sampling_time: T,
}

impl<T: Real> DdConfig<T> {
    pub fn validate(&self) -> Result<()> {
        if self.n_samples < 3 {
            return Err(Error::Config(format!(
                "dd_samples must be at least 3, got {}",
                self.n_samples
            )));
        }
        if !(self.sampling_time > T::zero()) {
            return Err(Error::Config("sampling time must be positive".into()));
        }
        Ok(())
    }
}

/// 3×N operator mapping a window (newest first) to `(x1, x2, x3)`.
pub fn fit_operator<T: Real>(n: usize, sampling_time: T) -> Result<Mat<T>> {
    if n < 3 {
        return Err(Error::Config(format!("need at least 3 samples, got {n}")));
    }
    if !(sampling_time > T::zero()) {
        return Err(Error::Config("sampling time must be positive".into()));
    }
    let ages: Vec<T> = (0..n).map(|j| lit::<T>(j as f64) * sampling_time).collect();
    fit_operator_from_ages(&ages)
}

/// Same as [`fit_operator`] for arbitrary sample ages (seconds before the
/// newest sample, newest first).
pub fn fit_operator_from_ages<T: Real>(ages: &[T]) -> Result<Mat<T>> {
    let n = ages.len();
    if n < 3 {
        return Err(Error::Config(format!("need at least 3 samples, got {n}")));
    }
    let span = ages.iter().fold(T::zero(), |m, a| m.max(a.abs()));
    if !(span > T::zero()) {
        return Err(Error::Config("rank-deficient design: all timestamps coincide".into()));
    }
    // Dimensionless design [1, -s, s²/2] with s = age / span, QR by modified
    // Gram-Schmidt, then undo the time scaling on rows 2 and 3.
    let mut cols: Vec<Vec<T>> = vec![
        vec![T::one(); n],
        ages.iter().map(|&a| -a / span).collect(),
        ages.iter().map(|&a| (a / span) * (a / span) * lit(0.5)).collect(),
    ];
    let mut r = Mat::zeros(3, 3);
    for k in 0..3 {
        for i in 0..k {
            let dot: T = cols[i].iter().zip(&cols[k]).map(|(&a, &b)| a * b).sum();
            r[(i, k)] = dot;
            let qi = cols[i].clone();
            for (c, q) in cols[k].iter_mut().zip(&qi) {
                *c = *c - dot * *q;
            }
        }
        let norm = cols[k].iter().map(|&v| v * v).sum::<T>().sqrt();
        if !(norm > lit::<T>(1e-10) * lit::<T>(n as f64).sqrt()) {
            return Err(Error::Config(
                "rank-deficient design: fewer than 3 distinct timestamps".into(),
            ));
        }
        r[(k, k)] = norm;
        for c in cols[k].iter_mut() {
            *c = *c / norm;
        }
    }
    // pinv = R^-1 Qᵀ
    let mut op = Mat::zeros(3, n);
    for j in 0..n {
        for i in (0..3).rev() {
            let mut s = cols[i][j];
            for k in (i + 1)..3 {
                s = s - r[(i, k)] * op[(k, j)];
            }
            op[(i, j)] = s / r[(i, i)];
        }
    }
    let row_scale = [T::one(), T::one() / span, T::one() / (span * span)];
    for (i, &sc) in row_scale.iter().enumerate() {
        for j in 0..n {
            op[(i, j)] = op[(i, j)] * sc;
        }
    }
    Ok(op)
}

/// Ring buffer of the most recent outputs plus the precomputed fit.
#[derive(Debug, Clone)]
pub struct SampleWindow<T> {
    operator: Mat<T>,
    samples: VecDeque<T>,
    capacity: usize,
    sampling_time: T,
    pushed: u64,
    last_ops: usize,
}

impl<T: Real> SampleWindow<T> {
    pub fn new(cfg: &DdConfig<T>) -> Result<Self> {
        cfg.validate()?;
        Ok(Self {
            operator: fit_operator(cfg.n_samples, cfg.sampling_time)?,
            samples: VecDeque::with_capacity(cfg.n_samples),
            capacity: cfg.n_samples,
            sampling_time: cfg.sampling_time,
            pushed: 0,
            last_ops: 0,
        })
    }

    pub fn is_full(&self) -> bool {
        self.samples.len() == self.capacity
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn operator(&self) -> &Mat<T> {
        &self.operator
    }

    /// Timestamps of the buffered samples, newest first, assuming the first
    /// push happened at t = 0.
    pub fn timestamps(&self) -> Vec<T> {
        let newest = self.pushed.saturating_sub(1);
        (0..self.samples.len() as u64)
            .map(|j| lit::<T>((newest - j) as f64) * self.sampling_time)
            .collect()
    }

    /// Appends `y`; returns `(x1, x2, x3)` once the window is full.
    pub fn push_and_estimate(&mut self, y: T) -> Result<Option<[T; 3]>> {
        if !y.is_finite() {
            return Err(Error::Input(format!("non-finite measurement {y}")));
        }
        if self.samples.len() == self.capacity {
            self.samples.pop_back();
        }
        self.samples.push_front(y);
        self.pushed += 1;
        if !self.is_full() {
            self.last_ops = 0;
            return Ok(None);
        }
        let mut out = [T::zero(); 3];
        let mut ops = 0;
        for (i, o) in out.iter_mut().enumerate() {
            let mut acc = T::zero();
            for (j, &s) in self.samples.iter().enumerate() {
                acc = acc + self.operator[(i, j)] * s;
                ops += 1;
            }
            *o = acc;
        }
        self.last_ops = ops;
        Ok(Some(out))
    }

    pub fn last_ops(&self) -> usize {
        self.last_ops
    }

    pub fn ops_per_step(&self) -> usize {
        dd_ops_per_step(self.capacity)
    }
}

/// Multiply-adds per estimate for a window of `n` samples.
pub fn dd_ops_per_step(n: usize) -> usize {
    3 * n
}

#[cfg(test)]
mod tests {
    use super::*;

    fn window(n: usize, t: f64) -> SampleWindow<f64> {
        SampleWindow::new(&DdConfig {
            n_samples: n,
            sampling_time: t,
        })
        .unwrap()
    }

    #[test]
    fn three_samples_interpolate_parabola() {
        let t = 1e-3;
        let mut w = window(3, t);
        let mut est = None;
        for k in 0..3 {
            let tk = k as f64 * t;
            est = w.push_and_estimate(tk * tk).unwrap();
        }
        let est = est.unwrap();
        assert!((est[2] - 2.0).abs() < 1e-6, "{est:?}");
        assert!((est[1] - 2.0 * 2.0 * t).abs() < 1e-9);
    }

    #[test]
    fn constant_window() {
        let mut w = window(9, 1e-3);
        let mut est = None;
        for _ in 0..9 {
            est = w.push_and_estimate(0.42).unwrap();
        }
        let est = est.unwrap();
        assert!((est[0] - 0.42).abs() < 1e-12);
        assert!(est[1].abs() < 1e-9);
        assert!(est[2].abs() < 1e-6);
    }

    #[test]
    fn warm_up_returns_none() {
        let mut w = window(9, 1e-3);
        for k in 0..8 {
            assert!(w.push_and_estimate(k as f64).unwrap().is_none());
            assert_eq!(w.last_ops(), 0);
        }
        assert!(w.push_and_estimate(8.0).unwrap().is_some());
        assert_eq!(w.last_ops(), 27);
        assert_eq!(w.len(), 9);
        assert_eq!(w.timestamps()[0], 8e-3);
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(fit_operator::<f64>(2, 1e-3).is_err());
        assert!(fit_operator::<f64>(5, 0.0).is_err());
        assert!(matches!(
            fit_operator_from_ages(&[0.0, 1e-3, 1e-3, 0.0]),
            Err(Error::Config(_))
        ));
        assert!(fit_operator_from_ages(&[0.0, 0.0, 0.0]).is_err());
        let mut w = window(3, 1e-3);
        assert!(matches!(w.push_and_estimate(f64::NAN), Err(Error::Input(_))));
    }

    #[test]
    fn ops_formula() {
        assert_eq!(dd_ops_per_step(9), 27);
        assert_eq!(dd_ops_per_step(26), 78);
        assert_eq!(window(26, 1e-3).ops_per_step(), 78);
    }
}
