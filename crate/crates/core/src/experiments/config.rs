use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::accuracy::NoiseModel;
use crate::spatial_stats::CorrelationParams;
use crate::{Error, Result};

pub const DEFAULT_SEED: u64 = 42;

/// Range parameter used by the field-wide setups when none is given.
pub const FIELD_THETA1: f64 = 100.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExperimentId {
    Setup1,
    Setup2,
    Fig5,
    Fig6,
    Fig8,
    Fig9,
    Optimal,
}

impl ExperimentId {
    pub const ALL: [ExperimentId; 7] = [
        ExperimentId::Setup1,
        ExperimentId::Setup2,
        ExperimentId::Fig5,
        ExperimentId::Fig6,
        ExperimentId::Fig8,
        ExperimentId::Fig9,
        ExperimentId::Optimal,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            ExperimentId::Setup1 => "setup1",
            ExperimentId::Setup2 => "setup2",
            ExperimentId::Fig5 => "fig5",
            ExperimentId::Fig6 => "fig6",
            ExperimentId::Fig8 => "fig8",
            ExperimentId::Fig9 => "fig9",
            ExperimentId::Optimal => "optimal",
        }
    }
}

impl fmt::Display for ExperimentId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ExperimentId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|id| id.name() == s)
            .ok_or_else(|| Error::InvalidParameter(format!("unknown experiment {s:?}")))
    }
}

/// Parses `default`, `noiseless`, or `s2,n2,nt2,nch2,power`.
pub fn parse_noise_profile(s: &str) -> Result<NoiseModel> {
    match s.trim() {
        "default" => Ok(NoiseModel::default_profile()),
        "noiseless" => Ok(NoiseModel::noiseless()),
        custom => {
            let v: Vec<f64> = custom
                .split(',')
                .map(|t| t.trim().parse::<f64>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|_| Error::InvalidParameter(format!("bad noise profile {s:?}")))?;
            match v[..] {
                [s2, n2, nt2, nch2, p] => NoiseModel::new(s2, n2, nt2, nch2, p),
                _ => Err(Error::InvalidParameter(format!(
                    "noise profile needs 5 comma-separated values (s2,n2,nt2,nch2,power), got {s:?}"
                ))),
            }
        }
    }
}

/// Everything an experiment depends on. Each experiment reads the fields that
/// apply to it; [`ExperimentConfig::preset`] fills sensible values for all.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub experiment: ExperimentId,
    pub seed: u64,
    pub runs: u32,
    pub field_width: f64,
    pub field_height: f64,
    pub head_rows: u32,
    pub head_cols: u32,
    pub normals: u32,
    /// Range parameter for the field-wide setups.
    pub theta1: f64,
    /// One curve per entry for the sweeps.
    pub theta1_list: Vec<f64>,
    pub theta2: f64,
    pub tau: f64,
    pub noise: NoiseModel,
    /// fig5: circle radii (m).
    pub radii: Vec<f64>,
    /// fig6 / fig8 / fig9: cluster sizes, head included.
    pub node_counts: Vec<usize>,
    /// fig5 cluster size.
    pub circle_nodes: usize,
    /// fig6 circle radius (m).
    pub circle_radius: f64,
    /// fig8 grid pitch (m).
    pub grid_spacing: f64,
    /// Plateau tolerance for the optimal-cluster search.
    pub epsilon: f64,
}

impl ExperimentConfig {
    pub fn preset(experiment: ExperimentId) -> Self {
        let base = Self {
            experiment,
            seed: DEFAULT_SEED,
            runs: 1,
            field_width: 120.0,
            field_height: 120.0,
            head_rows: 5,
            head_cols: 5,
            normals: 100,
            theta1: FIELD_THETA1,
            theta1_list: vec![FIELD_THETA1],
            theta2: 1.0,
            tau: 0.8,
            noise: NoiseModel::default_profile(),
            radii: Vec::new(),
            node_counts: Vec::new(),
            circle_nodes: 4,
            circle_radius: 5.0,
            grid_spacing: 5.0,
            epsilon: 0.01,
        };
        let single_cluster = Self { field_width: 30.0, field_height: 30.0, head_rows: 1, head_cols: 1, ..base.clone() };
        match experiment {
            ExperimentId::Setup1 => base,
            ExperimentId::Setup2 => Self { runs: 100, ..base },
            ExperimentId::Fig5 => Self {
                theta1_list: vec![50.0, 100.0],
                radii: (1..=40).map(f64::from).collect(),
                ..single_cluster
            },
            ExperimentId::Fig6 => Self {
                theta1_list: vec![50.0, 100.0, 200.0, 400.0],
                node_counts: (2..=20).collect(),
                ..single_cluster
            },
            ExperimentId::Fig8 => Self {
                theta1_list: vec![50.0, 400.0],
                node_counts: (1..=12).map(|k| 4 * k).collect(),
                ..single_cluster
            },
            ExperimentId::Fig9 => Self {
                runs: 100,
                normals: 99,
                theta1_list: vec![50.0, 100.0, 200.0, 400.0],
                node_counts: (2..=100).collect(),
                ..single_cluster
            },
            ExperimentId::Optimal => Self {
                runs: 100,
                normals: 99,
                theta1_list: vec![400.0],
                node_counts: (2..=100).collect(),
                ..single_cluster
            },
        }
    }

    pub fn params(&self) -> Result<CorrelationParams> {
        CorrelationParams::new(self.theta1, self.theta2, self.tau)
    }

    pub fn curve_params(&self) -> Result<Vec<CorrelationParams>> {
        self.theta1_list.iter().map(|&t| CorrelationParams::new(t, self.theta2, self.tau)).collect()
    }

    /// Overrides the range parameter everywhere: the field setups and every
    /// sweep collapse to this single value.
    pub fn set_theta1(&mut self, theta1: f64) {
        self.theta1 = theta1;
        self.theta1_list = vec![theta1];
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidParameter(msg));
        if self.runs == 0 {
            return bad("runs must be at least 1".into());
        }
        self.params()?;
        self.curve_params()?;
        NoiseModel::new(
            self.noise.sigma_s2,
            self.noise.sigma_n2,
            self.noise.sigma_nt2,
            self.noise.sigma_nch2,
            self.noise.power,
        )?;
        if self.epsilon.is_nan() || self.epsilon <= 0.0 {
            return bad(format!("epsilon must be positive, got {}", self.epsilon));
        }
        let increasing = |v: &[f64]| v.windows(2).all(|w| w[0] < w[1]);
        let needs_list = |empty: bool, what: &str| if empty { bad(format!("{what} must not be empty")) } else { Ok(()) };
        match self.experiment {
            ExperimentId::Setup1 | ExperimentId::Setup2 => {}
            ExperimentId::Fig5 => {
                needs_list(self.radii.is_empty(), "radii")?;
                needs_list(self.theta1_list.is_empty(), "theta1_list")?;
                if !increasing(&self.radii) || self.radii[0] < 0.0 {
                    return bad("radii must be non-negative and strictly increasing".into());
                }
                if self.circle_nodes == 0 {
                    return bad("circle_nodes must be at least 1".into());
                }
            }
            ExperimentId::Fig6 | ExperimentId::Fig8 | ExperimentId::Fig9 | ExperimentId::Optimal => {
                needs_list(self.node_counts.is_empty(), "node_counts")?;
                needs_list(self.theta1_list.is_empty(), "theta1_list")?;
                if self.node_counts[0] == 0 || !self.node_counts.windows(2).all(|w| w[0] < w[1]) {
                    return bad("node_counts must be positive and strictly increasing".into());
                }
                if !(self.circle_radius >= 0.0 && self.grid_spacing > 0.0) {
                    return bad("circle_radius must be >= 0 and grid_spacing > 0".into());
                }
            }
        }
        Ok(())
    }
}
