//! Joint Gaussian sampling of the tracing point, member and head readings.

use rand::Rng;
use rand_distr::StandardNormal;

use super::{NoiseModel, ReadingSample};
use crate::clustering::ClusterGeometry;
use crate::spatial_stats::{kernel, CorrelationParams};
use crate::{Error, Result};

/// Diagonal jitter (relative to the signal variance) applied once when the
/// kernel covariance fails to factor.
pub const JITTER: f64 = 1e-10;

/// Covariance of `(S, S_1, .., S_{m-1}, S_CH)`: `sigma_s2 * K(distance)`.
pub fn latent_covariance(geometry: &ClusterGeometry, p: &CorrelationParams, sigma_s2: f64) -> Vec<Vec<f64>> {
    let k = geometry.members.len();
    let n = k + 2;
    let ch = k + 1;
    let mut cov = vec![vec![0.0; n]; n];
    let mut set = |i: usize, j: usize, d: f64| {
        let v = sigma_s2 * kernel(d, p);
        cov[i][j] = v;
        cov[j][i] = v;
    };
    for i in 0..n {
        set(i, i, 0.0);
    }
    set(0, ch, geometry.tracing_to_head);
    for a in 0..k {
        set(0, a + 1, geometry.tracing_to_members[a]);
        set(ch, a + 1, geometry.head_to_members[a]);
        for b in 0..a {
            set(a + 1, b + 1, geometry.member_pairs[a][b]);
        }
    }
    cov
}

/// Lower Cholesky factor, row-major `n x n`.
///
/// An exactly zero pivot is accepted when its whole residual column is also
/// zero (perfectly correlated variables); any other non-positive pivot fails.
pub fn cholesky(a: &[Vec<f64>]) -> Option<Vec<f64>> {
    let n = a.len();
    let mut l = vec![0.0; n * n];
    for j in 0..n {
        let pivot = a[j][j] - (0..j).map(|k| l[j * n + k] * l[j * n + k]).sum::<f64>();
        if pivot > 0.0 {
            let d = pivot.sqrt();
            l[j * n + j] = d;
            for i in j + 1..n {
                let r = a[i][j] - (0..j).map(|k| l[i * n + k] * l[j * n + k]).sum::<f64>();
                l[i * n + j] = r / d;
            }
        } else if pivot == 0.0 {
            for i in j + 1..n {
                let r = a[i][j] - (0..j).map(|k| l[i * n + k] * l[j * n + k]).sum::<f64>();
                if r != 0.0 {
                    return None;
                }
            }
        } else {
            return None;
        }
    }
    Some(l)
}

/// Draws [`ReadingSample`]s for one cluster geometry. The covariance is
/// factored once at construction.
#[derive(Debug, Clone)]
pub struct ReadingSimulator {
    factor: Vec<f64>,
    dim: usize,
    noise: NoiseModel,
    jittered: bool,
}

impl ReadingSimulator {
    pub fn new(geometry: &ClusterGeometry, noise: &NoiseModel, p: &CorrelationParams) -> Result<Self> {
        let mut cov = latent_covariance(geometry, p, noise.sigma_s2);
        let dim = cov.len();
        let (factor, jittered) = match cholesky(&cov) {
            Some(l) => (l, false),
            None => {
                for (i, row) in cov.iter_mut().enumerate() {
                    row[i] += JITTER * noise.sigma_s2;
                }
                (cholesky(&cov).ok_or(Error::NotPositiveDefinite)?, true)
            }
        };
        Ok(Self { factor, dim, noise: *noise, jittered })
    }

    /// Whether the diagonal jitter was needed to factor the covariance.
    pub fn jittered(&self) -> bool {
        self.jittered
    }

    /// Number of non-head members.
    pub fn members(&self) -> usize {
        self.dim - 2
    }

    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> ReadingSample {
        let mut sample = ReadingSample::zeros(self.members());
        let mut scratch = vec![0.0; self.dim];
        self.draw_into(rng, &mut sample, &mut scratch);
        sample
    }

    /// Refills `sample` in place. `scratch` must have length `members + 2`.
    ///
    /// Draw order: the latent standard normals, then `(N_i, N_ti)` per member,
    /// then `N_CH`.
    pub fn draw_into<R: Rng + ?Sized>(&self, rng: &mut R, sample: &mut ReadingSample, scratch: &mut [f64]) {
        let n = self.dim;
        let k = n - 2;
        for z in scratch.iter_mut() {
            *z = rng.sample(StandardNormal);
        }
        let latent = |i: usize| -> f64 {
            let row = &self.factor[i * n..i * n + i + 1];
            row.iter().zip(&scratch[..=i]).map(|(l, z)| l * z).sum()
        };
        sample.s = latent(0);
        for i in 0..k {
            sample.s_i[i] = latent(i + 1);
        }
        sample.s_ch = latent(k + 1);

        let sd_n = self.noise.sigma_n2.sqrt();
        let sd_nt = self.noise.sigma_nt2.sqrt();
        let alpha = self.noise.alpha();
        for i in 0..k {
            let n_i = sd_n * rng.sample::<f64, _>(StandardNormal);
            let n_ti = sd_nt * rng.sample::<f64, _>(StandardNormal);
            sample.n_i[i] = n_i;
            sample.n_ti[i] = n_ti;
            sample.x_i[i] = sample.s_i[i] + n_i;
            sample.y_i[i] = sample.x_i[i] + n_ti;
            sample.z_i[i] = alpha * sample.y_i[i];
        }
        sample.n_ch = self.noise.sigma_nch2.sqrt() * rng.sample::<f64, _>(StandardNormal);
        sample.x_ch = sample.s_ch + sample.n_ch;
    }
}
