//! Drivers for the individual experiments. Each is a pure function of its
//! [`ExperimentConfig`]; independent runs execute in parallel and are
//! aggregated in run order.

use std::f64::consts::TAU;

use rayon::prelude::*;
use serde::Serialize;

use super::config::{ExperimentConfig, ExperimentId};
use super::sweep::{find_optimal_cluster, SweepPoint, SweepResult};
use crate::accuracy::{accuracy_for_assignment, closed_form_accuracy, Method};
use crate::clustering::{assign_clusters, cluster_geometry, Cluster, ClusterGeometry};
use crate::deployment::{
    deploy_random_normals, place_nodes, Deployment, FieldSpec, HeadGrid, Node, NodeId, NodeKind, Position,
    TracingPoint,
};
use crate::rng;
use crate::{Error, Result};

/// Slack for floating-point comparisons in the post-run property checks.
const SLACK: f64 = 1e-12;

/// Successive-step tolerance for the fig6 plateau (from m = 8 on).
pub const FIG6_PLATEAU_GAP: f64 = 0.005;
pub const FIG6_PLATEAU_FROM: usize = 8;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FieldRow {
    pub head: NodeId,
    pub members: Vec<NodeId>,
    pub m: usize,
    pub d_a: f64,
}

/// Per-cluster membership and accuracy for one field deployment.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FieldTable {
    pub rows: Vec<FieldRow>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AverageRow {
    pub head: NodeId,
    pub avg_d_a: f64,
    pub avg_m: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AverageTable {
    pub runs: u32,
    pub rows: Vec<AverageRow>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OptimalRow {
    pub sweep: ExperimentId,
    pub theta1: f64,
    pub epsilon: f64,
    /// `None` when the sweep never settles within `epsilon`.
    pub optimal_m: Option<usize>,
    pub d_a_at_optimal: Option<f64>,
    pub final_m: usize,
    pub final_d_a: f64,
}

/// Seed for run `r`: run 0 uses the base seed itself so a single-run average
/// coincides with a plain setup-1 pass.
pub fn run_seed(seed: u64, run: u32) -> u64 {
    if run == 0 {
        seed
    } else {
        rng::derive_seed(seed, u64::from(run))
    }
}

fn field_of(config: &ExperimentConfig) -> Result<FieldSpec> {
    FieldSpec::new(config.field_width, config.field_height)
}

fn field_deployment(config: &ExperimentConfig, seed: u64) -> Result<Deployment> {
    let grid = HeadGrid { rows: config.head_rows, cols: config.head_cols };
    Deployment::random_grid(field_of(config)?, grid, config.normals, seed)
}

fn field_table(config: &ExperimentConfig, seed: u64) -> Result<FieldTable> {
    let d = field_deployment(config, seed)?;
    let assignment = assign_clusters(&d)?;
    let reports = accuracy_for_assignment(&assignment, &d, &config.noise, &config.params()?, &Method::ClosedForm)?;
    let rows = assignment
        .clusters()
        .zip(reports)
        .map(|(c, r)| FieldRow { head: c.head, members: c.members.clone(), m: c.m(), d_a: r.d_a })
        .collect();
    Ok(FieldTable { rows })
}

/// Grid heads, random normals, one random tracing point per head cell;
/// nearest-head clustering, closed-form accuracy per cluster.
pub fn run_setup1(config: &ExperimentConfig) -> Result<FieldTable> {
    config.validate()?;
    field_table(config, config.seed)
}

/// Repeats setup 1 `runs` times with fresh normals and tracing points (heads
/// fixed) and averages each head's accuracy. Heads left without members
/// contribute their head-only accuracy.
pub fn run_setup2(config: &ExperimentConfig) -> Result<AverageTable> {
    config.validate()?;
    let tables = (0..config.runs)
        .into_par_iter()
        .map(|r| field_table(config, run_seed(config.seed, r)))
        .collect::<Result<Vec<_>>>()?;
    let runs = f64::from(config.runs);
    let rows = (0..tables[0].rows.len())
        .map(|i| {
            let head = tables[0].rows[i].head;
            let (sum, msum) = tables.iter().fold((0.0, 0.0), |(s, ms), t| (s + t.rows[i].d_a, ms + t.rows[i].m as f64));
            AverageRow { head, avg_d_a: sum / runs, avg_m: msum / runs }
        })
        .collect();
    Ok(AverageTable { runs: config.runs, rows })
}

/// `m` nodes equally spaced on a circle of `radius` around the tracing point,
/// head at angle 0. The field is the circle's bounding square plus 1 m.
pub fn circle_deployment(m: usize, radius: f64) -> Result<Deployment> {
    let side = 2.0 * radius + 2.0;
    let field = FieldSpec::square(side)?;
    let center = Position::new(radius + 1.0, radius + 1.0);
    let placements: Vec<_> = (0..m)
        .map(|k| {
            let a = TAU * k as f64 / m as f64;
            let kind = if k == 0 { NodeKind::ClusterHead } else { NodeKind::Normal };
            (kind, Position::new(center.x + radius * a.cos(), center.y + radius * a.sin()))
        })
        .collect();
    let nodes = place_nodes(field, &placements)?;
    Deployment::new(field, nodes, vec![TracingPoint { id: 1, position: center }], 0)
}

/// Geometry of the single head's cluster, members restricted to the first
/// `members` normals in id order.
fn single_cluster_geometry(d: &Deployment, members: usize) -> Result<ClusterGeometry> {
    let assignment = assign_clusters(d)?;
    let cluster = assignment.cluster(NodeId::Head(1)).ok_or(Error::NoHeads)?;
    if members > cluster.members.len() {
        return Err(Error::InvalidParameter(format!(
            "cluster needs {members} members but only {} are deployed",
            cluster.members.len()
        )));
    }
    let prefix = Cluster { head: cluster.head, members: cluster.members[..members].to_vec() };
    let tp = d.tracing_point_for(cluster.head).ok_or(Error::MissingTracingPoint(cluster.head))?;
    cluster_geometry(&prefix, d, tp)
}

fn curves<F>(config: &ExperimentConfig, variable: &'static str, geometries: &[(f64, ClusterGeometry)], extra: F) -> Result<Vec<SweepResult>>
where
    F: Fn(&mut SweepResult),
{
    config
        .curve_params()?
        .iter()
        .map(|p| {
            let points = geometries
                .iter()
                .map(|(value, g)| SweepPoint {
                    value: *value,
                    m: g.m(),
                    d_a: closed_form_accuracy(g, &config.noise, p).d_a,
                    std_error: None,
                })
                .collect();
            let mut sweep = SweepResult::new(variable, p.theta1(), points)?;
            extra(&mut sweep);
            Ok(sweep)
        })
        .collect()
}

/// Accuracy versus circle radius for a fixed-size circular cluster.
pub fn run_fig5(config: &ExperimentConfig) -> Result<Vec<SweepResult>> {
    config.validate()?;
    let m = config.circle_nodes;
    let geometries = config
        .radii
        .iter()
        .map(|&r| Ok((r, single_cluster_geometry(&circle_deployment(m, r)?, m - 1)?)))
        .collect::<Result<Vec<_>>>()?;
    let sweeps = curves(config, "radius", &geometries, |_| {})?;
    for s in &sweeps {
        if let Some(w) = s.points.windows(2).find(|w| w[1].d_a >= w[0].d_a) {
            return Err(Error::PropertyViolation(format!(
                "fig5 theta1={}: accuracy not decreasing between radius {} and {}",
                s.theta1, w[0].value, w[1].value
            )));
        }
    }
    check_theta1_order(&sweeps, "fig5")?;
    Ok(sweeps)
}

/// Accuracy versus cluster size on a fixed-radius circle.
pub fn run_fig6(config: &ExperimentConfig) -> Result<Vec<SweepResult>> {
    config.validate()?;
    let geometries = config
        .node_counts
        .iter()
        .map(|&m| Ok((m as f64, single_cluster_geometry(&circle_deployment(m, config.circle_radius)?, m - 1)?)))
        .collect::<Result<Vec<_>>>()?;
    let sweeps = curves(config, "m", &geometries, |s| {
        if let (Some(a), Some(b)) = (s.at_m(2), s.at_m(3)) {
            s.notes.push(format!("jump_m2_to_m3={:+.6}", b.d_a - a.d_a));
        }
        match s.plateau_onset(FIG6_PLATEAU_GAP) {
            Some(m) => s.notes.push(format!("plateau_onset_m={m} (gap<{FIG6_PLATEAU_GAP})")),
            None => s.notes.push("plateau_onset_m=none".into()),
        }
    })?;
    for s in &sweeps {
        if let (Some(a), Some(b)) = (s.at_m(2), s.at_m(3)) {
            if b.d_a <= a.d_a {
                return Err(Error::PropertyViolation(format!("fig6 theta1={}: no gain from m=2 to m=3", s.theta1)));
            }
        }
        for w in s.points.windows(2).filter(|w| w[0].m >= FIG6_PLATEAU_FROM) {
            if (w[1].d_a - w[0].d_a).abs() >= FIG6_PLATEAU_GAP {
                return Err(Error::PropertyViolation(format!(
                    "fig6 theta1={}: step m={} -> {} moves accuracy by {:.6}",
                    s.theta1,
                    w[0].m,
                    w[1].m,
                    w[1].d_a - w[0].d_a
                )));
            }
        }
    }
    check_theta1_order(&sweeps, "fig6")?;
    Ok(sweeps)
}

/// Grid points of a `width x height` field at `spacing`, minus the tracing
/// point and the head, ordered from the outside in: descending distance to
/// the tracing point, ties by `(y, x)`.
pub fn grid_growth_order(field: FieldSpec, spacing: f64, tracing: Position, head: Position) -> Vec<Position> {
    let nx = (field.width() / spacing + 1e-9).floor() as usize;
    let ny = (field.height() / spacing + 1e-9).floor() as usize;
    let mut pts: Vec<Position> = (0..=ny)
        .flat_map(|j| (0..=nx).map(move |i| Position::new(i as f64 * spacing, j as f64 * spacing)))
        .filter(|p| p.distance(&tracing) > 1e-9 && p.distance(&head) > 1e-9)
        .collect();
    pts.sort_by(|a, b| {
        b.distance(&tracing)
            .total_cmp(&a.distance(&tracing))
            .then(a.y.total_cmp(&b.y))
            .then(a.x.total_cmp(&b.x))
    });
    pts
}

fn corner_cluster(field: FieldSpec, members: &[Position]) -> Result<Deployment> {
    let tracing = Position::new(field.width() / 2.0, field.height() / 2.0);
    let mut placements = vec![(NodeKind::ClusterHead, Position::new(0.0, 0.0))];
    placements.extend(members.iter().map(|&p| (NodeKind::Normal, p)));
    let nodes = place_nodes(field, &placements)?;
    Deployment::new(field, nodes, vec![TracingPoint { id: 1, position: tracing }], 0)
}

/// Accuracy versus node density on a regular grid: head in the `(0, 0)`
/// corner, tracing point at the center, nodes added from the corners inward.
pub fn run_fig8(config: &ExperimentConfig) -> Result<Vec<SweepResult>> {
    config.validate()?;
    let field = field_of(config)?;
    let tracing = Position::new(field.width() / 2.0, field.height() / 2.0);
    let order = grid_growth_order(field, config.grid_spacing, tracing, Position::new(0.0, 0.0));
    let max_m = *config.node_counts.last().expect("validated");
    if max_m > order.len() + 1 {
        return Err(Error::InvalidParameter(format!(
            "grid holds {} nodes, cannot build m = {max_m}",
            order.len() + 1
        )));
    }
    let d = corner_cluster(field, &order[..max_m - 1])?;
    let geometries = config
        .node_counts
        .iter()
        .map(|&m| Ok((m as f64 / field.area(), single_cluster_geometry(&d, m - 1)?)))
        .collect::<Result<Vec<_>>>()?;
    let last_m = max_m;
    let sweeps = curves(config, "density", &geometries, |s| {
        if let (Some(p20), Some(last)) = (s.at_m(20), s.at_m(last_m)) {
            s.notes.push(format!("d_a_m20_minus_m{last_m}={:+.6}", p20.d_a - last.d_a));
        }
        if let Ok(m) = find_optimal_cluster(s, config.epsilon) {
            s.notes.push(format!("optimal_m={m} (epsilon={})", config.epsilon));
        }
    })?;
    for s in &sweeps {
        if let Some(w) = s.points.windows(2).find(|w| w[1].d_a < w[0].d_a - SLACK) {
            return Err(Error::PropertyViolation(format!(
                "fig8 theta1={}: accuracy drops from m={} to m={}",
                s.theta1, w[0].m, w[1].m
            )));
        }
    }
    check_theta1_order(&sweeps, "fig8")?;
    Ok(sweeps)
}

/// Average accuracy versus cluster size over `runs` random deployments:
/// head at `(0, 0)`, tracing point at the center, cluster of size `m` uses
/// the first `m - 1` normals of each run.
pub fn run_fig9(config: &ExperimentConfig) -> Result<Vec<SweepResult>> {
    config.validate()?;
    let field = field_of(config)?;
    let max_m = *config.node_counts.last().expect("validated");
    if max_m > config.normals as usize + 1 {
        return Err(Error::InvalidParameter(format!(
            "m = {max_m} needs {} normals, config deploys {}",
            max_m - 1,
            config.normals
        )));
    }
    let params = config.curve_params()?;
    // per_run[r][curve][point]
    let per_run = (0..config.runs)
        .into_par_iter()
        .map(|r| {
            let normals = deploy_random_normals(field, config.normals, run_seed(config.seed, r));
            let positions: Vec<Position> = normals.iter().map(|n: &Node| n.position).collect();
            let d = corner_cluster(field, &positions)?;
            let geometries = config
                .node_counts
                .iter()
                .map(|&m| single_cluster_geometry(&d, m - 1))
                .collect::<Result<Vec<_>>>()?;
            Ok(params
                .iter()
                .map(|p| geometries.iter().map(|g| closed_form_accuracy(g, &config.noise, p).d_a).collect::<Vec<_>>())
                .collect::<Vec<_>>())
        })
        .collect::<Result<Vec<_>>>()?;

    let runs = per_run.len() as f64;
    let sweeps = params
        .iter()
        .enumerate()
        .map(|(c, p)| {
            let points = config
                .node_counts
                .iter()
                .enumerate()
                .map(|(i, &m)| {
                    let vals = per_run.iter().map(|run| run[c][i]);
                    let mean = vals.clone().sum::<f64>() / runs;
                    let std_error = (per_run.len() > 1).then(|| {
                        let var = vals.map(|v| (v - mean).powi(2)).sum::<f64>() / (runs - 1.0);
                        (var / runs).sqrt()
                    });
                    SweepPoint { value: m as f64, m, d_a: mean, std_error }
                })
                .collect();
            let mut s = SweepResult::new("m", p.theta1(), points)?;
            if let (Some(p20), Some(last)) = (s.at_m(20), s.points.last()) {
                s.notes.push(format!("d_a_m20_minus_m{}={:+.6}", last.m, p20.d_a - last.d_a));
            }
            if let Ok(m) = find_optimal_cluster(&s, config.epsilon) {
                s.notes.push(format!("optimal_m={m} (epsilon={})", config.epsilon));
            }
            Ok(s)
        })
        .collect::<Result<Vec<_>>>()?;
    check_theta1_order(&sweeps, "fig9")?;
    Ok(sweeps)
}

/// Optimal-cluster search on the grid sweep and the random sweep.
pub fn run_optimal(config: &ExperimentConfig) -> Result<Vec<OptimalRow>> {
    config.validate()?;
    let field = field_of(config)?;
    let tracing = Position::new(field.width() / 2.0, field.height() / 2.0);
    let grid_nodes = grid_growth_order(field, config.grid_spacing, tracing, Position::new(0.0, 0.0)).len() + 1;
    let grid_cfg = ExperimentConfig {
        experiment: ExperimentId::Fig8,
        node_counts: (1..=grid_nodes / 4).map(|k| 4 * k).collect(),
        ..config.clone()
    };
    let random_cfg = ExperimentConfig { experiment: ExperimentId::Fig9, ..config.clone() };

    let mut rows = Vec::new();
    for (id, sweeps) in [(ExperimentId::Fig8, run_fig8(&grid_cfg)?), (ExperimentId::Fig9, run_fig9(&random_cfg)?)] {
        for s in sweeps {
            let optimal_m = find_optimal_cluster(&s, config.epsilon).ok();
            rows.push(OptimalRow {
                sweep: id,
                theta1: s.theta1,
                epsilon: config.epsilon,
                optimal_m,
                d_a_at_optimal: optimal_m.and_then(|m| s.at_m(m)).map(|p| p.d_a),
                final_m: s.last().m,
                final_d_a: s.last().d_a,
            });
        }
    }
    Ok(rows)
}

/// Curves must be pointwise ordered by range parameter.
fn check_theta1_order(sweeps: &[SweepResult], name: &str) -> Result<()> {
    let mut sorted: Vec<&SweepResult> = sweeps.iter().collect();
    sorted.sort_by(|a, b| a.theta1.total_cmp(&b.theta1));
    for pair in sorted.windows(2) {
        for (lo, hi) in pair[0].points.iter().zip(&pair[1].points) {
            if hi.d_a < lo.d_a - SLACK {
                return Err(Error::PropertyViolation(format!(
                    "{name}: theta1={} curve falls below theta1={} at {}",
                    pair[1].theta1, pair[0].theta1, lo.value
                )));
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::accuracy::NoiseModel;

    #[test]
    fn circle_layout() {
        let d = circle_deployment(4, 5.0).unwrap();
        let heads: Vec<_> = d.heads().collect();
        assert_eq!(heads.len(), 1);
        assert_eq!(heads[0].position, Position::new(11.0, 6.0));
        let c = d.tracing_points()[0].position;
        for n in d.nodes() {
            assert!((n.position.distance(&c) - 5.0).abs() < 1e-12);
        }
        let g = single_cluster_geometry(&d, 3).unwrap();
        assert_eq!(g.m(), 4);
    }

    #[test]
    fn growth_order_starts_at_corners() {
        let field = FieldSpec::square(30.0).unwrap();
        let order = grid_growth_order(field, 5.0, Position::new(15.0, 15.0), Position::new(0.0, 0.0));
        assert_eq!(order.len(), 47);
        assert_eq!(
            order[..3],
            [Position::new(30.0, 0.0), Position::new(0.0, 30.0), Position::new(30.0, 30.0)]
        );
        let dist: Vec<f64> = order.iter().map(|p| p.distance(&Position::new(15.0, 15.0))).collect();
        assert!(dist.windows(2).all(|w| w[0] >= w[1]));
    }

    #[test]
    fn single_run_average_is_setup1() {
        let mut c = ExperimentConfig::preset(ExperimentId::Setup2);
        c.runs = 1;
        let avg = run_setup2(&c).unwrap();
        let one = run_setup1(&c).unwrap();
        for (a, r) in avg.rows.iter().zip(&one.rows) {
            assert_eq!(a.head, r.head);
            assert_eq!(a.avg_d_a, r.d_a);
        }
        assert_eq!(run_seed(9, 0), 9);
        assert_ne!(run_seed(9, 1), 9);
    }

    #[test]
    fn setup1_partitions_normals() {
        let t = run_setup1(&ExperimentConfig::preset(ExperimentId::Setup1)).unwrap();
        assert_eq!(t.rows.len(), 25);
        assert_eq!(t.rows.iter().map(|r| r.members.len()).sum::<usize>(), 100);
    }

    #[test]
    fn zero_radius_noiseless_is_perfect() {
        let mut c = ExperimentConfig::preset(ExperimentId::Fig5);
        c.noise = NoiseModel::noiseless();
        c.radii = vec![0.0, 1.0];
        let s = run_fig5(&c).unwrap();
        assert!(s.iter().all(|x| (x.points[0].d_a - 1.0).abs() < 1e-12));
    }

    #[test]
    fn fig9_rejects_too_few_normals() {
        let mut c = ExperimentConfig::preset(ExperimentId::Fig9);
        c.normals = 10;
        c.runs = 2;
        assert!(matches!(run_fig9(&c), Err(Error::InvalidParameter(_))));
        c.node_counts = (2..=11).collect();
        let s = run_fig9(&c).unwrap();
        assert!(s[0].points.iter().all(|p| p.std_error.is_some()));
    }

    #[test]
    fn fig5_rejects_unordered_radii() {
        let mut c = ExperimentConfig::preset(ExperimentId::Fig5);
        c.radii = vec![5.0, 3.0];
        assert!(run_fig5(&c).is_err());
    }
}
