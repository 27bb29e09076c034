use serde::Serialize;

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SweepPoint {
    /// Swept quantity (radius, node count or node density).
    pub value: f64,
    /// Cluster size at this point, head included.
    pub m: usize,
    pub d_a: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub std_error: Option<f64>,
}

/// One curve: accuracy along a sweep at a fixed range parameter.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepResult {
    pub variable: &'static str,
    pub theta1: f64,
    pub points: Vec<SweepPoint>,
    /// Derived observations (jumps, plateau onset, ...).
    pub notes: Vec<String>,
}

impl SweepResult {
    pub fn new(variable: &'static str, theta1: f64, points: Vec<SweepPoint>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::InvalidParameter("sweep has no points".into()));
        }
        if !points.windows(2).all(|w| w[0].value < w[1].value) {
            return Err(Error::InvalidParameter(format!("{variable} values must be strictly increasing")));
        }
        Ok(Self { variable, theta1, points, notes: Vec::new() })
    }

    pub fn at_m(&self, m: usize) -> Option<&SweepPoint> {
        self.points.iter().find(|p| p.m == m)
    }

    pub fn last(&self) -> &SweepPoint {
        self.points.last().expect("non-empty sweep")
    }

    /// Smallest `m` from which every later step changes `d_a` by less than
    /// `epsilon`.
    pub fn plateau_onset(&self, epsilon: f64) -> Option<usize> {
        let n = self.points.len();
        let mut onset = n - 1;
        while onset > 0 && (self.points[onset].d_a - self.points[onset - 1].d_a).abs() < epsilon {
            onset -= 1;
        }
        (onset < n - 1 || n == 1).then(|| self.points[onset].m)
    }
}

/// Smallest cluster size whose accuracy is within `epsilon` of the sweep's
/// final value.
///
/// The sweep must end on a plateau: its last three points (fewer if the sweep
/// is shorter) must lie within `epsilon` of each other.
pub fn find_optimal_cluster(sweep: &SweepResult, epsilon: f64) -> Result<usize> {
    let pts = &sweep.points;
    let tail = &pts[pts.len().saturating_sub(3)..];
    let (lo, hi) = tail
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), p| (lo.min(p.d_a), hi.max(p.d_a)));
    if hi - lo > epsilon {
        return Err(Error::NoPlateau(epsilon));
    }
    let target = sweep.last().d_a;
    Ok(pts.iter().find(|p| (p.d_a - target).abs() <= epsilon).expect("last point qualifies").m)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sweep(vals: &[f64]) -> SweepResult {
        let pts = vals
            .iter()
            .enumerate()
            .map(|(i, &d_a)| SweepPoint { value: (i + 2) as f64, m: i + 2, d_a, std_error: None })
            .collect();
        SweepResult::new("m", 50.0, pts).unwrap()
    }

    #[test]
    fn constant_sweep_returns_first() {
        assert_eq!(find_optimal_cluster(&sweep(&[0.8; 6]), 0.01).unwrap(), 2);
    }

    #[test]
    fn settling_sweep() {
        let s = sweep(&[0.5, 0.7, 0.85, 0.9, 0.905, 0.908, 0.909]);
        assert_eq!(find_optimal_cluster(&s, 0.01).unwrap(), 5);
        assert_eq!(s.plateau_onset(0.01), Some(5));
    }

    #[test]
    fn no_plateau() {
        let s = sweep(&[0.1, 0.2, 0.3, 0.4, 0.5]);
        assert_eq!(find_optimal_cluster(&s, 0.01), Err(Error::NoPlateau(0.01)));
        assert_eq!(s.plateau_onset(0.01), None);
    }

    #[test]
    fn rejects_unordered_values() {
        let p = |v: f64| SweepPoint { value: v, m: 1, d_a: 0.5, std_error: None };
        assert!(SweepResult::new("radius", 1.0, vec![p(1.0), p(1.0)]).is_err());
        assert!(SweepResult::new("radius", 1.0, vec![]).is_err());
    }
}
