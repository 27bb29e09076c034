//! Per-cluster data accuracy.
//!
//! Each non-head member `i` observes `X_i = S_i + N_i`, forwards it over an
//! AWGN link (`Y_i = X_i + N_ti`) scaled to the power budget
//! (`Z_i = alpha * Y_i`), and the head decodes the linear MMSE estimate
//! `beta * Y_i`. The head also senses directly: `X_CH = S_CH + N_CH`, decoded
//! as `beta_ch * X_CH`. The cluster estimate is the plain average of the `m`
//! decoded values and its quality is the normalized accuracy
//! `D_A = 1 - E[(S - S_hat)^2] / sigma_s^2`.
//!
//! The phenomenon values `(S, S_1, .., S_CH)` are jointly Gaussian with
//! covariance `sigma_s^2 * K(distance)`, which yields a closed form for `D_A`
//! ([`normalized_accuracy`]). [`monte_carlo_accuracy`] estimates the same
//! quantity by simulation and serves as its oracle.

mod gaussian;
mod report;

pub use gaussian::{cholesky, latent_covariance, ReadingSimulator, JITTER};
pub use report::{AccuracyDocument, MethodTag};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::clustering::{cluster_geometry, ClusterAssignment, ClusterGeometry};
use crate::deployment::{Deployment, NodeId};
use crate::rng;
use crate::spatial_stats::{kernel, CorrelationParams};
use crate::{Error, Result};

/// Signal and noise variances plus the transmit power budget.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseModel {
    pub sigma_s2: f64,
    pub sigma_n2: f64,
    pub sigma_nt2: f64,
    pub sigma_nch2: f64,
    pub power: f64,
}

impl NoiseModel {
    pub fn new(sigma_s2: f64, sigma_n2: f64, sigma_nt2: f64, sigma_nch2: f64, power: f64) -> Result<Self> {
        let finite = [sigma_s2, sigma_n2, sigma_nt2, sigma_nch2, power].iter().all(|v| v.is_finite());
        if !finite || sigma_s2 <= 0.0 || power <= 0.0 || sigma_n2 < 0.0 || sigma_nt2 < 0.0 || sigma_nch2 < 0.0 {
            return Err(Error::InvalidParameter(format!(
                "noise model needs sigma_s2 > 0, power > 0 and non-negative noise variances \
                 (got s2={sigma_s2}, n2={sigma_n2}, nt2={sigma_nt2}, nch2={sigma_nch2}, P={power})"
            )));
        }
        Ok(Self { sigma_s2, sigma_n2, sigma_nt2, sigma_nch2, power })
    }

    pub fn noiseless() -> Self {
        Self { sigma_s2: 1.0, sigma_n2: 0.0, sigma_nt2: 0.0, sigma_nch2: 0.0, power: 1.0 }
    }

    /// Unit signal variance, 0.06 on every noise source, unit power.
    pub fn default_profile() -> Self {
        Self { sigma_s2: 1.0, sigma_n2: 0.06, sigma_nt2: 0.06, sigma_nch2: 0.06, power: 1.0 }
    }

    /// Amplitude scaling that meets the power budget on the member links.
    pub fn alpha(&self) -> f64 {
        (self.power / (self.sigma_s2 + self.sigma_n2 + self.sigma_nt2)).sqrt()
    }
}

/// MMSE shrinkage for members (`beta`) and for the head (`beta_ch`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BetaFactors {
    pub beta: f64,
    pub beta_ch: f64,
}

pub fn beta_factors(noise: &NoiseModel) -> BetaFactors {
    let s = noise.sigma_s2;
    BetaFactors {
        beta: s / (s + noise.sigma_n2 + noise.sigma_nt2),
        beta_ch: s / (s + noise.sigma_nch2),
    }
}

/// One joint draw of the phenomenon, the noises and the derived observations.
/// Member-indexed vectors have length `m - 1`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReadingSample {
    pub s: f64,
    pub s_i: Vec<f64>,
    pub s_ch: f64,
    pub n_i: Vec<f64>,
    pub n_ti: Vec<f64>,
    pub n_ch: f64,
    pub x_i: Vec<f64>,
    pub y_i: Vec<f64>,
    pub z_i: Vec<f64>,
    pub x_ch: f64,
}

impl ReadingSample {
    pub fn zeros(members: usize) -> Self {
        let v = vec![0.0; members];
        Self {
            s: 0.0,
            s_i: v.clone(),
            s_ch: 0.0,
            n_i: v.clone(),
            n_ti: v.clone(),
            n_ch: 0.0,
            x_i: v.clone(),
            y_i: v.clone(),
            z_i: v,
            x_ch: 0.0,
        }
    }

    /// Cluster size including the head.
    pub fn m(&self) -> usize {
        self.s_i.len() + 1
    }
}

/// Draws one sample for `geometry`. Factors the covariance on every call; use
/// [`ReadingSimulator`] for repeated draws.
pub fn simulate_reading<R: rand::Rng + ?Sized>(
    geometry: &ClusterGeometry,
    noise: &NoiseModel,
    p: &CorrelationParams,
    rng: &mut R,
) -> Result<ReadingSample> {
    Ok(ReadingSimulator::new(geometry, noise, p)?.draw(rng))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EstimateSet {
    pub s_hat_i: Vec<f64>,
    pub s_hat_ch: f64,
    pub s_hat: f64,
}

/// Decodes every member and the head, then averages over the `m` estimates.
///
/// Member estimates are `beta * Y_i`: the MMSE ratio `E[S_i Z_i] / E[Z_i^2]`
/// applied to `Z_i = alpha * Y_i` leaves `alpha` cancelled, so the result is
/// in signal units.
pub fn estimate(sample: &ReadingSample, betas: &BetaFactors) -> EstimateSet {
    let mut out = EstimateSet { s_hat_i: vec![0.0; sample.s_i.len()], s_hat_ch: 0.0, s_hat: 0.0 };
    estimate_into(sample, betas, &mut out);
    out
}

fn estimate_into(sample: &ReadingSample, betas: &BetaFactors, out: &mut EstimateSet) {
    for (hat, y) in out.s_hat_i.iter_mut().zip(&sample.y_i) {
        *hat = betas.beta * y;
    }
    out.s_hat_ch = betas.beta_ch * sample.x_ch;
    out.s_hat = (out.s_hat_i.iter().sum::<f64>() + out.s_hat_ch) / sample.m() as f64;
}

/// Closed-form normalized accuracy of the averaged estimate:
///
/// ```text
/// D_A = (2/m) [ beta * sum_i K(d_S,i) + beta_ch * K(d_S,CH) ]
///     - (1/m^2) [ beta^2 * sum_{i != j} K(d_i,j) + (m - 1) * beta
///                 + 2 * beta * beta_ch * sum_i K(d_CH,i) + beta_ch ]
/// ```
///
/// The sums run over the `m - 1` non-head members (ordered pairs for
/// `i != j`). Obtained from `2 E[S S_hat] - E[S_hat^2]` in units of
/// `sigma_s^2`, using `beta^2 (sigma_s^2 + sigma_n^2 + sigma_nt^2) = beta sigma_s^2`
/// and the analogous identity for the head. May be negative.
pub fn normalized_accuracy(geometry: &ClusterGeometry, betas: &BetaFactors, p: &CorrelationParams) -> f64 {
    let BetaFactors { beta, beta_ch } = *betas;
    let m = geometry.m() as f64;
    let k = |d: f64| kernel(d, p);

    let to_tracing: f64 = geometry.tracing_to_members.iter().map(|&d| k(d)).sum();
    let head_links: f64 = geometry.head_to_members.iter().map(|&d| k(d)).sum();
    let mut pairs = 0.0;
    for (a, row) in geometry.member_pairs.iter().enumerate() {
        pairs += row[..a].iter().map(|&d| k(d)).sum::<f64>();
    }
    pairs *= 2.0;

    let cross = (2.0 / m) * (beta * to_tracing + beta_ch * k(geometry.tracing_to_head));
    let power = (beta * beta * pairs + (m - 1.0) * beta + 2.0 * beta * beta_ch * head_links + beta_ch) / (m * m);
    cross - power
}

/// Accuracy figures for one cluster.
///
/// `d_a = 1 - distortion / sigma_s2` holds for both methods. Monte-Carlo
/// reports carry the sample count and the standard error of `distortion`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AccuracyReport {
    pub head: NodeId,
    pub m: usize,
    pub method: MethodTag,
    pub d_a: f64,
    pub distortion: f64,
    pub sigma_s2: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub samples: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub std_error: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub workers: Option<usize>,
}

impl AccuracyReport {
    /// Standard error of `d_a` (Monte-Carlo only).
    pub fn d_a_std_error(&self) -> Option<f64> {
        self.std_error.map(|e| e / self.sigma_s2)
    }
}

pub fn closed_form_accuracy(
    geometry: &ClusterGeometry,
    noise: &NoiseModel,
    p: &CorrelationParams,
) -> AccuracyReport {
    let d_a = normalized_accuracy(geometry, &beta_factors(noise), p);
    AccuracyReport {
        head: geometry.head,
        m: geometry.m(),
        method: MethodTag::ClosedForm,
        d_a,
        distortion: noise.sigma_s2 * (1.0 - d_a),
        sigma_s2: noise.sigma_s2,
        samples: None,
        std_error: None,
        workers: None,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MonteCarloConfig {
    pub samples: u64,
    pub seed: u64,
    /// Independent substreams; results depend on `(seed, workers)`.
    pub workers: usize,
}

impl MonteCarloConfig {
    pub const MIN_SAMPLES: u64 = 100;

    pub fn new(samples: u64, seed: u64, workers: usize) -> Result<Self> {
        if samples < Self::MIN_SAMPLES {
            return Err(Error::InvalidParameter(format!(
                "Monte-Carlo needs at least {} samples, got {samples}",
                Self::MIN_SAMPLES
            )));
        }
        if workers == 0 || workers as u64 > samples {
            return Err(Error::InvalidParameter(format!("worker count must be in 1..={samples}, got {workers}")));
        }
        Ok(Self { samples, seed, workers })
    }
}

/// Running mean / M2 (Welford), mergeable across workers.
#[derive(Debug, Clone, Copy, Default)]
struct Moments {
    n: u64,
    mean: f64,
    m2: f64,
}

impl Moments {
    fn push(&mut self, x: f64) {
        self.n += 1;
        let delta = x - self.mean;
        self.mean += delta / self.n as f64;
        self.m2 += delta * (x - self.mean);
    }

    fn merge(self, other: Moments) -> Moments {
        if self.n == 0 {
            return other;
        }
        if other.n == 0 {
            return self;
        }
        let n = self.n + other.n;
        let delta = other.mean - self.mean;
        Moments {
            n,
            mean: self.mean + delta * other.n as f64 / n as f64,
            m2: self.m2 + other.m2 + delta * delta * self.n as f64 * other.n as f64 / n as f64,
        }
    }

    fn std_error(&self) -> f64 {
        if self.n < 2 {
            return 0.0;
        }
        (self.m2 / (self.n - 1) as f64 / self.n as f64).sqrt()
    }
}

/// Estimates the distortion as the sample mean of `(S - S_hat)^2`.
///
/// Worker `w` draws its share from substream `w` of `seed`; shares are merged
/// in worker order so the result is fixed for a given `(seed, workers)`.
pub fn monte_carlo_accuracy(
    geometry: &ClusterGeometry,
    noise: &NoiseModel,
    p: &CorrelationParams,
    config: &MonteCarloConfig,
) -> Result<AccuracyReport> {
    let sim = ReadingSimulator::new(geometry, noise, p)?;
    let betas = beta_factors(noise);
    let workers = config.workers as u64;
    let (base, extra) = (config.samples / workers, config.samples % workers);

    let partials: Vec<Moments> = (0..workers)
        .into_par_iter()
        .map(|w| {
            let count = base + u64::from(w < extra);
            let mut rng = rng::substream(config.seed, w);
            let mut sample = ReadingSample::zeros(sim.members());
            let mut scratch = vec![0.0; sim.members() + 2];
            let mut est = estimate(&sample, &betas);
            let mut acc = Moments::default();
            for _ in 0..count {
                sim.draw_into(&mut rng, &mut sample, &mut scratch);
                estimate_into(&sample, &betas, &mut est);
                acc.push((sample.s - est.s_hat).powi(2));
            }
            acc
        })
        .collect();
    let total = partials.into_iter().fold(Moments::default(), Moments::merge);

    Ok(AccuracyReport {
        head: geometry.head,
        m: geometry.m(),
        method: MethodTag::MonteCarlo,
        d_a: 1.0 - total.mean / noise.sigma_s2,
        distortion: total.mean,
        sigma_s2: noise.sigma_s2,
        samples: Some(total.n),
        std_error: Some(total.std_error()),
        workers: Some(config.workers),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    ClosedForm,
    /// Cluster `CHk` uses seed `derive_seed(config.seed, k)`.
    MonteCarlo(MonteCarloConfig),
}

/// One report per cluster, ordered by head id. Head `CHk` is scored against
/// tracing point `k`.
pub fn accuracy_for_assignment(
    assignment: &ClusterAssignment,
    deployment: &Deployment,
    noise: &NoiseModel,
    p: &CorrelationParams,
    method: &Method,
) -> Result<Vec<AccuracyReport>> {
    assignment
        .clusters()
        .map(|cluster| {
            let tp = deployment
                .tracing_point_for(cluster.head)
                .ok_or(Error::MissingTracingPoint(cluster.head))?;
            let geometry = cluster_geometry(cluster, deployment, tp)?;
            match method {
                Method::ClosedForm => Ok(closed_form_accuracy(&geometry, noise, p)),
                Method::MonteCarlo(cfg) => {
                    let cfg = MonteCarloConfig { seed: rng::derive_seed(cfg.seed, cluster.head.index() as u64), ..*cfg };
                    monte_carlo_accuracy(&geometry, noise, p, &cfg)
                }
            }
        })
        .collect()
}
