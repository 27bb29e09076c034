//! Reproducible experiments built on the deployment, clustering and accuracy
//! modules, with CSV and JSON rendering.

mod config;
mod setups;
mod sweep;

use std::fmt::Write as _;

use serde::Serialize;

pub use config::{parse_noise_profile, ExperimentConfig, ExperimentId, DEFAULT_SEED, FIELD_THETA1};
pub use setups::{
    circle_deployment, grid_growth_order, run_fig5, run_fig6, run_fig8, run_fig9, run_optimal, run_seed,
    run_setup1, run_setup2, AverageRow, AverageTable, FieldRow, FieldTable, OptimalRow, FIG6_PLATEAU_FROM,
    FIG6_PLATEAU_GAP,
};
pub use sweep::{find_optimal_cluster, SweepPoint, SweepResult};

use crate::rng;
use crate::spatial_stats::LOG_BASE;
use crate::Result;

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "snake_case", tag = "kind", content = "data")]
pub enum ExperimentOutput {
    Field(FieldTable),
    Average(AverageTable),
    Sweeps(Vec<SweepResult>),
    Optimal(Vec<OptimalRow>),
}

/// Runs the experiment named in `config`.
pub fn run(config: &ExperimentConfig) -> Result<ExperimentOutput> {
    Ok(match config.experiment {
        ExperimentId::Setup1 => ExperimentOutput::Field(run_setup1(config)?),
        ExperimentId::Setup2 => ExperimentOutput::Average(run_setup2(config)?),
        ExperimentId::Fig5 => ExperimentOutput::Sweeps(run_fig5(config)?),
        ExperimentId::Fig6 => ExperimentOutput::Sweeps(run_fig6(config)?),
        ExperimentId::Fig8 => ExperimentOutput::Sweeps(run_fig8(config)?),
        ExperimentId::Fig9 => ExperimentOutput::Sweeps(run_fig9(config)?),
        ExperimentId::Optimal => ExperimentOutput::Optimal(run_optimal(config)?),
    })
}

/// Placement conventions that the output depends on, echoed as metadata.
pub fn layout_note(id: ExperimentId) -> &'static str {
    match id {
        ExperimentId::Setup1 | ExperimentId::Setup2 => {
            "grid heads at cell centers; uniform normals; one uniform tracing point per head cell; nearest head, lowest id on ties"
        }
        ExperimentId::Fig5 | ExperimentId::Fig6 => {
            "nodes at equal angles from angle 0 on a circle around the tracing point; head at angle 0"
        }
        ExperimentId::Fig8 => {
            "head at (0,0); tracing point at center; grid nodes added by descending distance to the tracing point, ties by (y, x)"
        }
        ExperimentId::Fig9 => "head at (0,0); tracing point at center; cluster of size m uses the first m-1 normals of each run",
        ExperimentId::Optimal => "grid sweep as fig8 in steps of 4; random sweep as fig9",
    }
}

fn opt<T: ToString>(v: Option<T>) -> String {
    v.map(|v| v.to_string()).unwrap_or_default()
}

impl ExperimentOutput {
    pub fn to_csv(&self, config: &ExperimentConfig) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "# {} experiment={} generator={} log={}",
            crate::VERSION,
            config.experiment,
            rng::GENERATOR,
            LOG_BASE
        );
        let _ = writeln!(out, "# layout: {}", layout_note(config.experiment));
        let _ = writeln!(out, "# config={}", serde_json::to_string(config).expect("config serializes"));
        match self {
            ExperimentOutput::Field(t) => {
                out.push_str("head,m,members,d_a\n");
                for r in &t.rows {
                    let members: Vec<String> = r.members.iter().map(|m| m.to_string()).collect();
                    let _ = writeln!(out, "{},{},{},{:.6}", r.head, r.m, members.join(";"), r.d_a);
                }
            }
            ExperimentOutput::Average(t) => {
                let _ = writeln!(out, "# runs={}", t.runs);
                out.push_str("head,avg_d_a,avg_m\n");
                for r in &t.rows {
                    let _ = writeln!(out, "{},{:.6},{:.4}", r.head, r.avg_d_a, r.avg_m);
                }
            }
            ExperimentOutput::Sweeps(sweeps) => {
                for s in sweeps {
                    for note in &s.notes {
                        let _ = writeln!(out, "# theta1={} {note}", s.theta1);
                    }
                }
                let variable = sweeps.first().map_or("m", |s| s.variable);
                // Node-count sweeps would repeat the m column.
                let value_col = variable != "m";
                if value_col {
                    let _ = writeln!(out, "theta1,{variable},m,d_a,std_err");
                } else {
                    out.push_str("theta1,m,d_a,std_err\n");
                }
                for s in sweeps {
                    for p in &s.points {
                        let std_err = opt(p.std_error.map(|e| format!("{e:.6}")));
                        if value_col {
                            let _ = writeln!(out, "{},{},{},{:.6},{std_err}", s.theta1, p.value, p.m, p.d_a);
                        } else {
                            let _ = writeln!(out, "{},{},{:.6},{std_err}", s.theta1, p.m, p.d_a);
                        }
                    }
                }
            }
            ExperimentOutput::Optimal(rows) => {
                out.push_str("sweep,theta1,epsilon,optimal_m,d_a_at_optimal,final_m,final_d_a\n");
                for r in rows {
                    let _ = writeln!(
                        out,
                        "{},{},{},{},{},{},{:.6}",
                        r.sweep,
                        r.theta1,
                        r.epsilon,
                        opt(r.optimal_m),
                        opt(r.d_a_at_optimal.map(|v| format!("{v:.6}"))),
                        r.final_m,
                        r.final_d_a
                    );
                }
            }
        }
        out
    }

    pub fn to_json(&self, config: &ExperimentConfig) -> String {
        #[derive(Serialize)]
        struct Envelope<'a> {
            version: &'static str,
            generator: &'static str,
            log_base: &'static str,
            layout: &'static str,
            config: &'a ExperimentConfig,
            result: &'a ExperimentOutput,
        }
        let env = Envelope {
            version: crate::VERSION,
            generator: rng::GENERATOR,
            log_base: LOG_BASE,
            layout: layout_note(config.experiment),
            config,
            result: self,
        };
        serde_json::to_string_pretty(&env).expect("output serializes")
    }
}
