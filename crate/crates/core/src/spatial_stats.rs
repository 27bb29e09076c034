//! Spatial statistics: empirical correlation of reading windows, the
//! power-exponential correlation kernel, and the radius / cluster-count bounds
//! the kernel induces through a correlation threshold.

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Base of the logarithm used when inverting the kernel. Echoed in reports.
pub const LOG_BASE: &str = "natural";

/// Power-exponential kernel parameters plus the strong-correlation threshold.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CorrelationParams {
    theta1: f64,
    theta2: f64,
    tau: f64,
}

impl CorrelationParams {
    /// `theta1` is the range (meters, > 0), `theta2` the smoothness in (0, 2],
    /// `tau` the threshold in (0, 1).
    pub fn new(theta1: f64, theta2: f64, tau: f64) -> Result<Self> {
        if !(theta1.is_finite() && theta1 > 0.0) {
            return Err(Error::InvalidParameter(format!("theta1 must be > 0, got {theta1}")));
        }
        if !(theta2 > 0.0 && theta2 <= 2.0) {
            return Err(Error::InvalidParameter(format!(
                "theta2 must lie in (0, 2], got {theta2}"
            )));
        }
        if !(tau > 0.0 && tau < 1.0) {
            return Err(Error::InvalidParameter(format!("tau must lie in (0, 1), got {tau}")));
        }
        Ok(Self { theta1, theta2, tau })
    }

    pub fn theta1(&self) -> f64 {
        self.theta1
    }

    pub fn theta2(&self) -> f64 {
        self.theta2
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    /// Same smoothness and threshold, different range.
    pub fn with_theta1(&self, theta1: f64) -> Result<Self> {
        Self::new(theta1, self.theta2, self.tau)
    }
}

/// One node's readings over a time window. At least two samples.
#[derive(Debug, Clone, PartialEq)]
pub struct ReadingWindow(Vec<f64>);

impl ReadingWindow {
    pub fn new(samples: Vec<f64>) -> Result<Self> {
        if samples.len() < 2 {
            return Err(Error::WindowTooShort(samples.len()));
        }
        if samples.iter().any(|s| !s.is_finite()) {
            return Err(Error::InvalidParameter("reading window contains a non-finite sample".into()));
        }
        Ok(Self(samples))
    }

    pub fn samples(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn mean(&self) -> f64 {
        self.0.iter().sum::<f64>() / self.0.len() as f64
    }

    /// Unbiased sample variance (divides by n - 1).
    pub fn variance(&self) -> f64 {
        let mean = self.mean();
        self.0.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / (self.0.len() - 1) as f64
    }
}

/// Sample moments of a pair of reading windows.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EmpiricalStats {
    pub mean_a: f64,
    pub mean_b: f64,
    pub variance_a: f64,
    pub variance_b: f64,
    pub covariance: f64,
    pub pearson: f64,
}

/// Sample means, variances, covariance and Pearson coefficient of two
/// equally long windows.
///
/// The coefficient is `cov / sqrt(var_a * var_b)`, so it always lies in
/// [-1, 1] up to rounding.
pub fn empirical_correlation(a: &ReadingWindow, b: &ReadingWindow) -> Result<EmpiricalStats> {
    if a.len() != b.len() {
        return Err(Error::LengthMismatch(a.len(), b.len()));
    }
    let n1 = (a.len() - 1) as f64;
    let (mean_a, mean_b) = (a.mean(), b.mean());
    let variance_a = a.variance();
    let variance_b = b.variance();
    if variance_a <= 0.0 || variance_b <= 0.0 {
        return Err(Error::DegenerateWindow);
    }
    let covariance = a
        .samples()
        .iter()
        .zip(b.samples())
        .map(|(x, y)| (x - mean_a) * (y - mean_b))
        .sum::<f64>()
        / n1;
    let pearson = covariance / (variance_a * variance_b).sqrt();
    Ok(EmpiricalStats { mean_a, mean_b, variance_a, variance_b, covariance, pearson })
}

/// Power-exponential correlation `exp(-(d / theta1)^theta2)`.
#[inline]
pub fn kernel(d: f64, p: &CorrelationParams) -> f64 {
    debug_assert!(d >= 0.0, "negative distance {d}");
    (-(d / p.theta1).powf(p.theta2)).exp()
}

/// Readings `d` apart are strongly correlated when the kernel reaches `tau`.
pub fn is_strongly_correlated(d: f64, p: &CorrelationParams) -> bool {
    kernel(d, p) >= p.tau
}

/// Largest separation that still counts as strongly correlated:
/// `theta1 * ln(1/tau)^(1/theta2)`.
pub fn max_cluster_radius(p: &CorrelationParams) -> f64 {
    p.theta1 * (1.0 / p.tau).ln().powf(1.0 / p.theta2)
}

/// Square-packing count of radius-`r_max` clusters in a `side x side` field:
/// `k^2 + (k + 1)^2` with `k = floor(side / (2 r_max))`.
///
/// Saturates at `u64::MAX` when `tau` is so close to 1 that the radius
/// collapses.
pub fn cluster_count_bound(side: f64, p: &CorrelationParams) -> Result<u64> {
    if !(side.is_finite() && side > 0.0) {
        return Err(Error::InvalidParameter(format!("field side must be > 0, got {side}")));
    }
    let r = max_cluster_radius(p);
    let k = (side / (2.0 * r)).floor();
    if !k.is_finite() || k >= u32::MAX as f64 {
        return Ok(u64::MAX);
    }
    let k = k as u64;
    Ok((k * k).saturating_add((k + 1) * (k + 1)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::E;

    fn window(v: &[f64]) -> ReadingWindow {
        ReadingWindow::new(v.to_vec()).unwrap()
    }

    fn params(t1: f64, t2: f64, tau: f64) -> CorrelationParams {
        CorrelationParams::new(t1, t2, tau).unwrap()
    }

    #[test]
    fn params_reject_out_of_range() {
        assert!(CorrelationParams::new(0.0, 1.0, 0.5).is_err());
        assert!(CorrelationParams::new(10.0, 0.0, 0.5).is_err());
        assert!(CorrelationParams::new(10.0, 2.5, 0.5).is_err());
        assert!(CorrelationParams::new(10.0, 1.0, 1.0).is_err());
        assert!(CorrelationParams::new(10.0, 1.0, 0.0).is_err());
        assert!(CorrelationParams::new(10.0, 2.0, 0.5).is_ok());
    }

    #[test]
    fn pearson_of_identical_and_negated_series() {
        let a = window(&[1.0, 2.0, 3.0]);
        let r = empirical_correlation(&a, &a).unwrap();
        assert!((r.pearson - 1.0).abs() < 1e-15);
        let b = window(&[3.0, 2.0, 1.0]);
        let r = empirical_correlation(&a, &b).unwrap();
        assert!((r.pearson + 1.0).abs() < 1e-15);
    }

    #[test]
    fn pearson_hand_computed() {
        // means 2 and 7/3, var 1 and 7/3, cov 3/2
        let r = empirical_correlation(&window(&[1.0, 2.0, 3.0]), &window(&[1.0, 2.0, 4.0])).unwrap();
        assert!((r.mean_b - 7.0 / 3.0).abs() < 1e-15);
        assert!((r.variance_a - 1.0).abs() < 1e-15);
        assert!((r.variance_b - 7.0 / 3.0).abs() < 1e-14);
        assert!((r.covariance - 1.5).abs() < 1e-15);
        let expected = 1.5 / (7.0f64 / 3.0).sqrt();
        assert!((r.pearson - expected).abs() < 1e-14);
        assert!((r.pearson - 0.9820).abs() < 5e-5);
    }

    #[test]
    fn correlation_errors() {
        assert_eq!(ReadingWindow::new(vec![1.0]), Err(Error::WindowTooShort(1)));
        let a = window(&[1.0, 2.0, 3.0]);
        assert_eq!(
            empirical_correlation(&a, &window(&[1.0, 2.0])),
            Err(Error::LengthMismatch(3, 2))
        );
        assert_eq!(
            empirical_correlation(&a, &window(&[4.0, 4.0, 4.0])),
            Err(Error::DegenerateWindow)
        );
    }

    #[test]
    fn kernel_values() {
        assert_eq!(kernel(0.0, &params(7.0, 0.3, 0.5)), 1.0);
        assert!((kernel(50.0, &params(50.0, 1.0, 0.5)) - E.recip()).abs() < 1e-15);
        assert!((kernel(21.2132, &params(400.0, 1.0, 0.5)) - 0.948349).abs() < 5e-7);
    }

    #[test]
    fn threshold_boundary_is_inclusive() {
        assert!(is_strongly_correlated(0.0, &params(50.0, 1.0, 0.9)));
        let p = params(50.0, 1.0, E.recip());
        assert!(is_strongly_correlated(50.0, &p));
        assert!(!is_strongly_correlated(50.001, &p));
    }

    #[test]
    fn radius_values() {
        assert!((max_cluster_radius(&params(50.0, 1.0, E.recip())) - 50.0).abs() < 1e-12);
        let r = max_cluster_radius(&params(100.0, 2.0, 0.8));
        assert!((r - 100.0 * 1.25f64.ln().sqrt()).abs() < 1e-12);
        assert!((r - 47.238).abs() < 5e-4);
        assert!(max_cluster_radius(&params(100.0, 1.0, 1.0 - 1e-12)) < 1e-8);
    }

    #[test]
    fn cluster_count_examples() {
        let p = params(50.0, 1.0, E.recip());
        assert_eq!(cluster_count_bound(100.0, &p).unwrap(), 5);
        assert_eq!(cluster_count_bound(99.0, &p).unwrap(), 1);
        assert_eq!(cluster_count_bound(400.0, &p).unwrap(), 16 + 25);
        assert!(cluster_count_bound(0.0, &p).is_err());
        assert_eq!(
            cluster_count_bound(100.0, &params(50.0, 1.0, 1.0 - 1e-15)).unwrap(),
            u64::MAX
        );
    }

    proptest! {
        #[test]
        fn kernel_strictly_decreasing(
            t1 in 0.5f64..500.0, t2 in 0.05f64..=2.0,
            d1 in 0.0f64..200.0, gap in 1e-3f64..50.0,
        ) {
            let p = params(t1, t2, 0.5);
            prop_assert_eq!(kernel(0.0, &p), 1.0);
            let (k1, k2) = (kernel(d1, &p), kernel(d1 + gap, &p));
            // Deep in the tail both underflow to zero.
            prop_assert!(k1 > k2 || (k1 == 0.0 && k2 == 0.0));
        }

        #[test]
        fn kernel_at_radius_is_tau(t1 in 0.5f64..500.0, t2 in 0.05f64..=2.0, tau in 0.01f64..0.99) {
            let p = params(t1, t2, tau);
            let k = kernel(max_cluster_radius(&p), &p);
            prop_assert!(((k - tau) / tau).abs() < 1e-9);
        }

        #[test]
        fn bound_monotone(side in 1.0f64..1000.0, t1 in 1.0f64..200.0, t2 in 0.2f64..=2.0,
                          tau1 in 0.01f64..0.98, dtau in 0.0f64..0.5, dt1 in 0.0f64..100.0) {
            let tau2 = (tau1 + dtau).min(0.99);
            let lo = cluster_count_bound(side, &params(t1, t2, tau1)).unwrap();
            let hi = cluster_count_bound(side, &params(t1, t2, tau2)).unwrap();
            prop_assert!(hi >= lo);
            let wide = cluster_count_bound(side, &params(t1 + dt1, t2, tau1)).unwrap();
            prop_assert!(wide <= lo);
        }

        #[test]
        fn pearson_symmetric_scale_invariant_bounded(
            pairs in proptest::collection::vec((-100.0f64..100.0, -100.0f64..100.0), 3..40),
            alpha in 0.01f64..100.0, shift in -1e3f64..1e3,
        ) {
            let (xs, ys): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
            let a = window(&xs);
            let b = window(&ys);
            let scaled = window(&ys.iter().map(|y| alpha * y + shift).collect::<Vec<_>>());
            match (empirical_correlation(&a, &b), empirical_correlation(&b, &a)) {
                (Ok(ab), Ok(ba)) => {
                    prop_assert_eq!(ab.pearson, ba.pearson);
                    prop_assert!(ab.pearson.abs() <= 1.0 + 1e-12);
                    let s = empirical_correlation(&a, &scaled).unwrap();
                    prop_assert!((s.pearson - ab.pearson).abs() < 1e-9);
                }
                (Err(e1), Err(e2)) => prop_assert_eq!(e1, e2),
                _ => prop_assert!(false, "asymmetric failure"),
            }
        }
    }
}
