//! Extended high-gain observer.
//!
//! For relative degree `rho` the observer carries `n = rho + 1` estimates:
//! the output, its `rho - 1` derivatives and the extended state `a + b u`.
//! In scaled coordinates `q = D x̂` with `D = diag(1, ε, …, ε^rho)` the
//! dynamics are `ε q̇ = F q + G y`, where `F` is the companion matrix with
//! first column `-gains` and `G = gains`. Discretizing with the bilinear
//! transform at `T = α ε` makes the discrete matrices depend on `α` only.
//!
//! Realization used throughout (`C_d = I`):
//!
//! ```text
//! M   = (I - α/2 F)^-1
//! A_d = M (I + α/2 F)
//! D_d = α/2 M G
//! B_d = (A_d + I) D_d
//! ξ(k+1) = A_d ξ(k) + B_d y(k)
//! q(k)   = ξ(k) + D_d y(k)
//! x̂(k)  = D^-1 q(k)
//! ```
//!
//! `q(k)` equals the trapezoidal-rule solution of the scaled dynamics.

use crate::error::{Error, Result};
use crate::linalg::{is_hurwitz, Mat};
use crate::scalar::{lit, Real};

/// Gains of `∏ (s - r_i)` without the leading one. All roots must be
/// strictly negative.
pub fn hurwitz_gains_from_roots<T: Real>(roots: &[T]) -> Result<Vec<T>> {
    if roots.is_empty() {
        return Err(Error::InvalidRoots("no roots given".into()));
    }
    if let Some(r) = roots.iter().find(|r| !(**r < T::zero())) {
        return Err(Error::InvalidRoots(format!("root {r} is not strictly negative")));
    }
    // Multiply out (s - r) factors, highest power first.
    let mut poly = vec![T::one()];
    for &r in roots {
        let mut next = vec![T::zero(); poly.len() + 1];
        for (i, &c) in poly.iter().enumerate() {
            next[i] = next[i] + c;
            next[i + 1] = next[i + 1] - r * c;
        }
        poly = next;
    }
    Ok(poly[1..].to_vec())
}

/// Scaled observer dynamics `ε q̇ = F q + G y`.
pub fn build_scaled_system<T: Real>(gains: &[T]) -> (Mat<T>, Vec<T>) {
    let n = gains.len();
    let mut f = Mat::zeros(n, n);
    for (i, &g) in gains.iter().enumerate() {
        f[(i, 0)] = -g;
        if i + 1 < n {
            f[(i, i + 1)] = T::one();
        }
    }
    (f, gains.to_vec())
}

/// `q̇ = (F q + G y) / ε`.
pub fn continuous_observer_derivative<T: Real>(f: &Mat<T>, g: &[T], eps: T, q: &[T], y: T) -> Vec<T> {
    f.matvec(q)
        .into_iter()
        .zip(g)
        .map(|(fq, &gi)| (fq + gi * y) / eps)
        .collect()
}

/// Discrete realization of the observer in `q` coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct TustinRealization<T> {
    pub a_d: Mat<T>,
    pub b_d: Vec<T>,
    pub c_d: Mat<T>,
    pub d_d: Vec<T>,
}

/// Bilinear (Tustin) discretization of `dq/dτ = F q + G y` with step `alpha`
/// in the scaled time `τ = t / ε`.
pub fn discretize_bilinear<T: Real>(f: &Mat<T>, g: &[T], alpha: T) -> Result<TustinRealization<T>> {
    if !(alpha > T::zero()) || !alpha.is_finite() {
        return Err(Error::Discretization(format!("alpha must be positive, got {alpha}")));
    }
    let n = f.rows();
    if !f.is_square() || g.len() != n {
        return Err(Error::Discretization("F and G dimensions differ".into()));
    }
    let half = alpha * lit(0.5);
    let eye = Mat::identity(n);
    let m = eye
        .sub(&f.scale(half))
        .inverse()
        .map_err(|_| Error::Discretization("I - (alpha/2) F is singular".into()))?;
    let a_d = m.matmul(&eye.add(&f.scale(half)));
    let d_d: Vec<T> = m.matvec(g).into_iter().map(|v| v * half).collect();
    let b_d = a_d.add(&eye).matvec(&d_d);
    Ok(TustinRealization {
        a_d,
        b_d,
        c_d: eye,
        d_d,
    })
}

/// Observer configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct HgoConfig<T> {
    /// Observer time constant ε.
    pub epsilon: T,
    /// Ratio T/ε.
    pub alpha: T,
    /// α1..α_{rho+1}.
    pub gains: Vec<T>,
    /// Initial ξ; zero when absent.
    pub initial_xi: Option<Vec<T>>,
}

impl<T: Real> HgoConfig<T> {
    /// Gains (6, 11, 6), i.e. roots at -1, -2, -3.
    pub fn with_default_gains(epsilon: T, sampling_time: T) -> Self {
        Self {
            epsilon,
            alpha: sampling_time / epsilon,
            gains: vec![lit(6.0), lit(11.0), lit(6.0)],
            initial_xi: None,
        }
    }

    pub fn rho(&self) -> usize {
        self.gains.len().saturating_sub(1)
    }

    pub fn sampling_time(&self) -> T {
        self.alpha * self.epsilon
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon > T::zero()) || !self.epsilon.is_finite() {
            return Err(Error::Config(format!("epsilon must be positive, got {}", self.epsilon)));
        }
        if !(self.alpha > T::zero()) || !self.alpha.is_finite() {
            return Err(Error::Config(format!("alpha must be positive, got {}", self.alpha)));
        }
        if self.gains.len() < 2 {
            return Err(Error::Config("need at least two observer gains".into()));
        }
        if self.gains.iter().any(|g| !(*g > T::zero())) {
            return Err(Error::Config("observer gains must be positive".into()));
        }
        if !is_hurwitz(&self.gains) {
            return Err(Error::Config("observer gain polynomial is not Hurwitz".into()));
        }
        if let Some(xi) = &self.initial_xi {
            if xi.len() != self.gains.len() {
                return Err(Error::Config(format!(
                    "initial_xi has {} entries, expected {}",
                    xi.len(),
                    self.gains.len()
                )));
            }
        }
        Ok(())
    }
}

/// Discretized extended high-gain observer with its internal state.
#[derive(Debug, Clone)]
pub struct HgoDiscrete<T> {
    realization: TustinRealization<T>,
    /// Diagonal of `D = diag(1, ε, …, ε^rho)`.
    scale: Vec<T>,
    // Runtime form in estimate coordinates η = D^-1 ξ.
    est_a: Mat<T>,
    est_b: Vec<T>,
    est_d: Vec<T>,
    eta: Vec<T>,
    last_ops: usize,
}

impl<T: Real> HgoDiscrete<T> {
    pub fn new(cfg: &HgoConfig<T>) -> Result<Self> {
        cfg.validate()?;
        let (f, g) = build_scaled_system(&cfg.gains);
        let realization = discretize_bilinear(&f, &g, cfg.alpha)?;
        let n = g.len();
        let scale: Vec<T> = (0..n).map(|i| cfg.epsilon.powi(i as i32)).collect();

        let mut est_a = Mat::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                est_a[(i, j)] = realization.a_d[(i, j)] * scale[j] / scale[i];
            }
        }
        let est_b = (0..n).map(|i| realization.b_d[i] / scale[i]).collect();
        let est_d = (0..n).map(|i| realization.d_d[i] / scale[i]).collect();
        let xi0 = cfg.initial_xi.clone().unwrap_or_else(|| vec![T::zero(); n]);
        let eta = xi0.iter().zip(&scale).map(|(&x, &s)| x / s).collect();

        Ok(Self {
            realization,
            scale,
            est_a,
            est_b,
            est_d,
            eta,
            last_ops: 0,
        })
    }

    pub fn dim(&self) -> usize {
        self.scale.len()
    }

    pub fn realization(&self) -> &TustinRealization<T> {
        &self.realization
    }

    pub fn scaling(&self) -> &[T] {
        &self.scale
    }

    /// Internal state ξ in `q` coordinates.
    pub fn xi(&self) -> Vec<T> {
        self.eta.iter().zip(&self.scale).map(|(&e, &s)| e * s).collect()
    }

    pub fn reset(&mut self, xi: &[T]) {
        assert_eq!(xi.len(), self.dim());
        self.eta = xi.iter().zip(&self.scale).map(|(&x, &s)| x / s).collect();
    }

    /// Returns `x̂(k)` for measurement `y(k)` and advances ξ to `k + 1`.
    pub fn step(&mut self, y: T) -> Result<Vec<T>> {
        if !y.is_finite() {
            return Err(Error::Input(format!("non-finite measurement {y}")));
        }
        let n = self.dim();
        let mut ops = 0;
        let xhat: Vec<T> = (0..n)
            .map(|i| {
                ops += 1;
                self.eta[i] + self.est_d[i] * y
            })
            .collect();
        let mut next = vec![T::zero(); n];
        for (i, out) in next.iter_mut().enumerate() {
            let mut acc = self.est_b[i] * y;
            ops += 1;
            for j in 0..n {
                acc = acc + self.est_a[(i, j)] * self.eta[j];
                ops += 1;
            }
            *out = acc;
        }
        self.eta = next;
        self.last_ops = ops;
        Ok(xhat)
    }

    /// Multiply-adds spent by the most recent [`step`](Self::step).
    pub fn last_ops(&self) -> usize {
        self.last_ops
    }

    /// Documented per-step cost: `n² + 2n` with `n = rho + 1`.
    pub fn ops_per_step(&self) -> usize {
        hgo_ops_per_step(self.dim() - 1)
    }
}

/// Multiply-adds per observer step for relative degree `rho`.
pub fn hgo_ops_per_step(rho: usize) -> usize {
    let n = rho + 1;
    n * n + 2 * n
}

/// Componentwise clamp to `[-b, b]`; components without a bound pass through.
pub fn saturate_estimates<T: Real>(xhat: &[T], bounds: &[Option<T>]) -> Vec<T> {
    xhat.iter()
        .enumerate()
        .map(|(i, &v)| match bounds.get(i).copied().flatten() {
            Some(b) => v.max(-b).min(b),
            None => v,
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn paper_observer(eps: f64, t: f64) -> HgoDiscrete<f64> {
        HgoDiscrete::new(&HgoConfig::with_default_gains(eps, t)).unwrap()
    }

    #[test]
    fn gains_from_roots() {
        assert_eq!(
            hurwitz_gains_from_roots(&[-1.0, -2.0, -3.0]).unwrap(),
            vec![6.0, 11.0, 6.0]
        );
        assert_eq!(hurwitz_gains_from_roots(&[-1.0]).unwrap(), vec![1.0]);
        assert_eq!(hurwitz_gains_from_roots(&[-1.0, -1.0]).unwrap(), vec![2.0, 1.0]);
    }

    #[test]
    fn nonnegative_root_rejected() {
        assert!(matches!(
            hurwitz_gains_from_roots(&[-1.0, 0.0]),
            Err(Error::InvalidRoots(_))
        ));
        assert!(hurwitz_gains_from_roots(&[-1.0, 2.0]).is_err());
        assert!(hurwitz_gains_from_roots::<f64>(&[]).is_err());
    }

    #[test]
    fn scaled_system_shape() {
        let (f, g) = build_scaled_system(&[6.0, 11.0, 6.0]);
        assert_eq!(f.row(0), &[-6.0, 1.0, 0.0]);
        assert_eq!(f.row(1), &[-11.0, 0.0, 1.0]);
        assert_eq!(f.row(2), &[-6.0, 0.0, 0.0]);
        assert_eq!(g, vec![6.0, 11.0, 6.0]);
    }

    #[test]
    fn small_alpha_limit() {
        let (f, g) = build_scaled_system(&[6.0, 11.0, 6.0]);
        let alpha = 1e-4;
        let r = discretize_bilinear(&f, &g, alpha).unwrap();
        let first_order = Mat::identity(3).add(&f.scale(alpha));
        let diff = r.a_d.sub(&first_order).max_abs();
        // Remainder is O(α²) with constants of order ‖F‖².
        assert!(diff < 200.0 * alpha * alpha, "diff {diff}");
    }

    #[test]
    fn singular_discretization_reported() {
        // F = 2/α I makes I - α/2 F vanish.
        let f = Mat::identity(2).scale(2.0);
        assert!(matches!(
            discretize_bilinear(&f, &[1.0, 1.0], 1.0),
            Err(Error::Discretization(_))
        ));
        let (f, g) = build_scaled_system(&[6.0, 11.0, 6.0]);
        assert!(discretize_bilinear(&f, &g, 0.0).is_err());
    }

    #[test]
    fn zero_input_stays_zero() {
        let mut obs = paper_observer(0.05, 1e-3);
        for _ in 0..1000 {
            assert_eq!(obs.step(0.0).unwrap(), vec![0.0, 0.0, 0.0]);
        }
    }

    #[test]
    fn constant_input_converges_to_dc() {
        let mut obs = paper_observer(0.05, 1e-3);
        let mut last = vec![];
        for _ in 0..20_000 {
            last = obs.step(0.3).unwrap();
        }
        assert!((last[0] - 0.3).abs() < 1e-9);
        assert!(last[1].abs() < 1e-9);
        assert!(last[2].abs() < 1e-9);
    }

    #[test]
    fn non_finite_measurement_rejected() {
        let mut obs = paper_observer(0.05, 1e-3);
        assert!(matches!(obs.step(f64::NAN), Err(Error::Input(_))));
        assert!(obs.step(f64::INFINITY).is_err());
    }

    #[test]
    fn realization_matches_trapezoid_recursion() {
        // q(k+1) = A q(k) + D_d (y(k) + y(k+1)) from q(0) = D_d y(0).
        let (f, g) = build_scaled_system(&[6.0, 11.0, 6.0]);
        let alpha = 0.3;
        let r = discretize_bilinear(&f, &g, alpha).unwrap();
        let ys: Vec<f64> = (0..200).map(|k| (0.07 * k as f64).sin() + 0.2).collect();
        let mut xi = vec![0.0; 3];
        let mut q_trap: Vec<f64> = r.d_d.iter().map(|d| d * ys[0]).collect();
        for k in 0..ys.len() - 1 {
            let q: Vec<f64> = xi.iter().zip(&r.d_d).map(|(x, d)| x + d * ys[k]).collect();
            for i in 0..3 {
                assert!((q[i] - q_trap[i]).abs() < 1e-12);
            }
            let ax = r.a_d.matvec(&xi);
            xi = (0..3).map(|i| ax[i] + r.b_d[i] * ys[k]).collect();
            let aq = r.a_d.matvec(&q_trap);
            q_trap = (0..3).map(|i| aq[i] + r.d_d[i] * (ys[k] + ys[k + 1])).collect();
        }
    }

    #[test]
    fn estimate_coordinates_agree_with_q_realization() {
        let eps = 0.05;
        let mut obs = paper_observer(eps, 1e-3);
        let r = obs.realization().clone();
        let mut xi = vec![0.0; 3];
        for k in 0..500 {
            let y = (k as f64 * 1e-3).sin();
            let xhat = obs.step(y).unwrap();
            let q: Vec<f64> = xi.iter().zip(&r.d_d).map(|(x, d)| x + d * y).collect();
            let ref_hat = [q[0], q[1] / eps, q[2] / (eps * eps)];
            for i in 0..3 {
                assert!((xhat[i] - ref_hat[i]).abs() < 1e-9 * (1.0 + ref_hat[i].abs()));
            }
            let ax = r.a_d.matvec(&xi);
            xi = (0..3).map(|i| ax[i] + r.b_d[i] * y).collect();
        }
        let got = obs.xi();
        for i in 0..3 {
            assert!((got[i] - xi[i]).abs() < 1e-9);
        }
    }

    #[test]
    fn step_counts_documented_ops() {
        let mut obs = paper_observer(0.05, 1e-3);
        obs.step(1.0).unwrap();
        assert_eq!(obs.last_ops(), 15);
        assert_eq!(obs.ops_per_step(), 15);
        assert_eq!(hgo_ops_per_step(2), 15);
    }

    #[test]
    fn saturation() {
        let b = [None, Some(0.05), None];
        assert_eq!(saturate_estimates(&[1.0, 3.7, -9.0], &b), vec![1.0, 0.05, -9.0]);
        assert_eq!(saturate_estimates(&[1.0, -3.7, -9.0], &b), vec![1.0, -0.05, -9.0]);
        assert_eq!(saturate_estimates(&[1.0, 0.01, 2.0], &b), vec![1.0, 0.01, 2.0]);
        assert_eq!(saturate_estimates(&[1.0, 0.01, 2.0], &[]), vec![1.0, 0.01, 2.0]);
    }

    #[test]
    fn continuous_derivative_cases() {
        let (f, g) = build_scaled_system(&[6.0, 11.0, 6.0]);
        let c: f64 = 0.7;
        let d = continuous_observer_derivative(&f, &g, 0.05, &[c, 0.0, 0.0], c);
        assert!(d.iter().all(|v: &f64| v.abs() < 1e-14));
        let d = continuous_observer_derivative(&f, &g, 0.05, &[1.0, 0.0, 0.0], 0.0);
        assert_eq!(d, vec![-6.0 / 0.05, -11.0 / 0.05, -6.0 / 0.05]);
    }

    #[test]
    fn config_validation() {
        let mut cfg = HgoConfig::with_default_gains(0.05, 1e-3);
        assert!(cfg.validate().is_ok());
        cfg.gains = vec![1.0, 1.0, 2.0];
        assert!(cfg.validate().is_err());
        let mut cfg = HgoConfig::with_default_gains(0.05, 1e-3);
        cfg.epsilon = 0.0;
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn f32_observer_dc() {
        let mut obs = HgoDiscrete::<f32>::new(&HgoConfig::with_default_gains(0.05, 1e-3)).unwrap();
        let mut last = vec![];
        for _ in 0..20_000 {
            last = obs.step(0.3).unwrap();
        }
        assert!((last[0] - 0.3).abs() < 1e-4);
    }
}
