//! Nearest-head partitioning of normal nodes and the per-cluster distance
//! bundle consumed by the accuracy estimators.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::Serialize;

use crate::deployment::{Deployment, NodeId, Position, TracingPoint};
use crate::spatial_stats::{self, CorrelationParams};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Cluster {
    pub head: NodeId,
    /// Normal-node members in ascending id order.
    pub members: Vec<NodeId>,
}

impl Cluster {
    /// Cluster size including the head itself.
    pub fn m(&self) -> usize {
        self.members.len() + 1
    }
}

/// Partition of the normal nodes among the heads. Every head has an entry,
/// possibly with no members.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ClusterAssignment {
    clusters: BTreeMap<NodeId, Cluster>,
}

impl ClusterAssignment {
    pub fn clusters(&self) -> impl Iterator<Item = &Cluster> {
        self.clusters.values()
    }

    pub fn cluster(&self, head: NodeId) -> Option<&Cluster> {
        self.clusters.get(&head)
    }

    pub fn len(&self) -> usize {
        self.clusters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.clusters.is_empty()
    }

    pub fn head_of(&self, normal: NodeId) -> Option<NodeId> {
        self.clusters.values().find(|c| c.members.contains(&normal)).map(|c| c.head)
    }

    /// `head_id,member_ids` with members joined by `;`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("head_id,member_ids\n");
        for c in self.clusters.values() {
            let members: Vec<String> = c.members.iter().map(ToString::to_string).collect();
            let _ = writeln!(out, "{},{}", c.head, members.join(";"));
        }
        out
    }
}

/// Assigns each normal node to the nearest head by Euclidean distance.
///
/// A node equidistant from several heads goes to the one with the lowest id,
/// so the result does not depend on node order.
pub fn assign_clusters(deployment: &Deployment) -> Result<ClusterAssignment> {
    let mut heads: Vec<_> = deployment.heads().collect();
    if heads.is_empty() {
        return Err(Error::NoHeads);
    }
    heads.sort_by_key(|h| h.id);
    let mut clusters: BTreeMap<NodeId, Cluster> =
        heads.iter().map(|h| (h.id, Cluster { head: h.id, members: Vec::new() })).collect();

    for v in deployment.normals() {
        let mut best = heads[0];
        let mut best_d = v.position.distance(&best.position);
        for &u in &heads[1..] {
            let d = v.position.distance(&u.position);
            if d < best_d {
                best = u;
                best_d = d;
            }
        }
        clusters.get_mut(&best.id).expect("head registered").members.push(v.id);
    }
    for c in clusters.values_mut() {
        c.members.sort_unstable();
    }
    Ok(ClusterAssignment { clusters })
}

/// Per-member diagnostics: distance to the assigned head and the kernel value
/// at that distance, for spotting members outside the correlation radius.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MemberDiagnostic {
    pub head: NodeId,
    pub member: NodeId,
    pub distance: f64,
    pub kernel: f64,
    pub strongly_correlated: bool,
}

pub fn member_diagnostics(
    assignment: &ClusterAssignment,
    deployment: &Deployment,
    params: &CorrelationParams,
) -> Result<Vec<MemberDiagnostic>> {
    let mut out = Vec::new();
    for c in assignment.clusters() {
        let head = deployment.position(c.head)?;
        for &member in &c.members {
            let distance = deployment.position(member)?.distance(&head);
            out.push(MemberDiagnostic {
                head: c.head,
                member,
                distance,
                kernel: spatial_stats::kernel(distance, params),
                strongly_correlated: spatial_stats::is_strongly_correlated(distance, params),
            });
        }
    }
    Ok(out)
}

/// Distances needed to evaluate one cluster against its tracing point.
/// Member-indexed vectors follow the cluster's member order.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClusterGeometry {
    pub head: NodeId,
    pub members: Vec<NodeId>,
    /// Tracing point to each member.
    pub tracing_to_members: Vec<f64>,
    pub tracing_to_head: f64,
    pub head_to_members: Vec<f64>,
    /// Symmetric member-by-member distances, zero diagonal.
    pub member_pairs: Vec<Vec<f64>>,
}

impl ClusterGeometry {
    /// Builds the bundle straight from coordinates. Members get ids `1..`.
    pub fn from_positions(tracing: Position, head: Position, members: &[Position]) -> Self {
        let ids = (1..=members.len() as u32).map(NodeId::Normal).collect();
        Self::build(NodeId::Head(1), ids, tracing, head, members)
    }

    fn build(head_id: NodeId, ids: Vec<NodeId>, tracing: Position, head: Position, members: &[Position]) -> Self {
        let member_pairs = members
            .iter()
            .map(|a| members.iter().map(|b| a.distance(b)).collect())
            .collect();
        Self {
            head: head_id,
            members: ids,
            tracing_to_members: members.iter().map(|p| tracing.distance(p)).collect(),
            tracing_to_head: tracing.distance(&head),
            head_to_members: members.iter().map(|p| head.distance(p)).collect(),
            member_pairs,
        }
    }

    /// Cluster size including the head.
    pub fn m(&self) -> usize {
        self.members.len() + 1
    }
}

pub fn cluster_geometry(
    cluster: &Cluster,
    deployment: &Deployment,
    tracing_point: &TracingPoint,
) -> Result<ClusterGeometry> {
    let head = deployment.position(cluster.head)?;
    let members = cluster
        .members
        .iter()
        .map(|&id| deployment.position(id))
        .collect::<Result<Vec<_>>>()?;
    Ok(ClusterGeometry::build(
        cluster.head,
        cluster.members.clone(),
        tracing_point.position,
        head,
        &members,
    ))
}
