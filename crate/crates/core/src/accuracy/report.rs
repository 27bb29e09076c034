use std::fmt::{self, Write as _};

use serde::Serialize;

use super::{beta_factors, AccuracyReport, BetaFactors, NoiseModel};
use crate::rng;
use crate::spatial_stats::{CorrelationParams, LOG_BASE};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum MethodTag {
    ClosedForm,
    MonteCarlo,
}

impl fmt::Display for MethodTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            MethodTag::ClosedForm => "closed_form",
            MethodTag::MonteCarlo => "monte_carlo",
        })
    }
}

/// Header row of [`AccuracyReport::csv_row`].
pub const CSV_HEADER: &str = "head_id,m,method,d_a,distortion,std_err,samples";

impl AccuracyReport {
    /// Closed-form rows leave `std_err` and `samples` empty.
    pub fn csv_row(&self) -> String {
        let std_err = self.std_error.map(|e| format!("{e:.6}")).unwrap_or_default();
        let samples = self.samples.map(|n| n.to_string()).unwrap_or_default();
        format!(
            "{},{},{},{:.6},{:.6},{},{}",
            self.head, self.m, self.method, self.d_a, self.distortion, std_err, samples
        )
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ParamEcho {
    pub theta1: f64,
    pub theta2: f64,
    pub tau: f64,
    pub log_base: &'static str,
}

impl From<&CorrelationParams> for ParamEcho {
    fn from(p: &CorrelationParams) -> Self {
        Self { theta1: p.theta1(), theta2: p.theta2(), tau: p.tau(), log_base: LOG_BASE }
    }
}

/// JSON envelope: the reports plus every parameter needed to reproduce them.
#[derive(Debug, Clone, Serialize)]
pub struct AccuracyDocument {
    pub version: &'static str,
    pub generator: &'static str,
    pub params: ParamEcho,
    pub noise: NoiseModel,
    pub betas: BetaFactors,
    pub seed: u64,
    pub reports: Vec<AccuracyReport>,
}

impl AccuracyDocument {
    pub fn new(p: &CorrelationParams, noise: &NoiseModel, seed: u64, reports: Vec<AccuracyReport>) -> Self {
        Self {
            version: crate::VERSION,
            generator: rng::GENERATOR,
            params: p.into(),
            noise: *noise,
            betas: beta_factors(noise),
            seed,
            reports,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// CSV with a `#` comment header echoing the parameters.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        let n = &self.noise;
        let _ = writeln!(out, "# {} generator={}", self.version, self.generator);
        let _ = writeln!(
            out,
            "# theta1={} theta2={} tau={} log={} seed={}",
            self.params.theta1, self.params.theta2, self.params.tau, self.params.log_base, self.seed
        );
        let _ = writeln!(
            out,
            "# sigma_s2={} sigma_n2={} sigma_nt2={} sigma_nch2={} power={} beta={:.6} beta_ch={:.6}",
            n.sigma_s2, n.sigma_n2, n.sigma_nt2, n.sigma_nch2, n.power, self.betas.beta, self.betas.beta_ch
        );
        out.push_str(CSV_HEADER);
        out.push('\n');
        for r in &self.reports {
            out.push_str(&r.csv_row());
            out.push('\n');
        }
        out
    }
}
