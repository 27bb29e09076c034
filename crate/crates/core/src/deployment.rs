//! Sensor field construction: a deterministic grid of cluster heads, seeded
//! uniform placement of normal nodes, hand-placed geometries, and tracing
//! points. Deployments round-trip through a line-oriented text format.

use std::collections::HashSet;
use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::rng;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FieldSpec {
    width: f64,
    height: f64,
}

impl FieldSpec {
    pub fn new(width: f64, height: f64) -> Result<Self> {
        if !(width.is_finite() && width > 0.0 && height.is_finite() && height > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "field dimensions must be positive, got {width} x {height}"
            )));
        }
        Ok(Self { width, height })
    }

    pub fn square(side: f64) -> Result<Self> {
        Self::new(side, side)
    }

    pub fn width(&self) -> f64 {
        self.width
    }

    pub fn height(&self) -> f64 {
        self.height
    }

    pub fn area(&self) -> f64 {
        self.width * self.height
    }

    pub fn contains(&self, p: Position) -> bool {
        (0.0..=self.width).contains(&p.x) && (0.0..=self.height).contains(&p.y)
    }

    fn check(&self, p: Position) -> Result<()> {
        if self.contains(p) {
            Ok(())
        } else {
            Err(Error::OutOfField { x: p.x, y: p.y, width: self.width, height: self.height })
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Position {
    pub x: f64,
    pub y: f64,
}

impl Position {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn distance(&self, other: &Position) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum NodeKind {
    ClusterHead,
    Normal,
}

/// Node identity. Heads and normals are numbered from 1 in separate ranges,
/// printed as `CH3` and `17` respectively.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(into = "String", try_from = "String")]
pub enum NodeId {
    Head(u32),
    Normal(u32),
}

impl NodeId {
    pub fn index(&self) -> u32 {
        match *self {
            NodeId::Head(i) | NodeId::Normal(i) => i,
        }
    }

    pub fn kind(&self) -> NodeKind {
        match self {
            NodeId::Head(_) => NodeKind::ClusterHead,
            NodeId::Normal(_) => NodeKind::Normal,
        }
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NodeId::Head(i) => write!(f, "CH{i}"),
            NodeId::Normal(i) => write!(f, "{i}"),
        }
    }
}

impl From<NodeId> for String {
    fn from(id: NodeId) -> Self {
        id.to_string()
    }
}

impl TryFrom<String> for NodeId {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl FromStr for NodeId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidParameter(format!("bad node id {s:?}"));
        match s.strip_prefix("CH") {
            Some(rest) => rest.parse().map(NodeId::Head).map_err(|_| bad()),
            None => s.parse().map(NodeId::Normal).map_err(|_| bad()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Node {
    pub id: NodeId,
    pub position: Position,
}

impl Node {
    pub fn kind(&self) -> NodeKind {
        self.id.kind()
    }

    pub fn is_head(&self) -> bool {
        matches!(self.id, NodeId::Head(_))
    }
}

/// Reference location a cluster tries to reconstruct. Tracing point `k` is
/// paired with head `CHk`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TracingPoint {
    pub id: u32,
    pub position: Position,
}

/// Layout of the head grid, kept so tracing points can be drawn per cell.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct HeadGrid {
    pub rows: u32,
    pub cols: u32,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Deployment {
    field: FieldSpec,
    nodes: Vec<Node>,
    tracing_points: Vec<TracingPoint>,
    grid: Option<HeadGrid>,
    seed: u64,
}

/// `rows x cols` heads at the cell centers of a uniform grid, numbered
/// `CH1..` in row-major order starting from the `y = 0` row.
pub fn deploy_grid_heads(field: FieldSpec, rows: u32, cols: u32) -> Result<Vec<Node>> {
    if rows == 0 || cols == 0 {
        return Err(Error::InvalidParameter(format!("head grid must be non-empty, got {rows} x {cols}")));
    }
    let (dx, dy) = (field.width / cols as f64, field.height / rows as f64);
    let mut heads = Vec::with_capacity((rows * cols) as usize);
    for r in 0..rows {
        for c in 0..cols {
            heads.push(Node {
                id: NodeId::Head(r * cols + c + 1),
                position: Position::new((c as f64 + 0.5) * dx, (r as f64 + 0.5) * dy),
            });
        }
    }
    Ok(heads)
}

/// `count` normal nodes i.i.d. uniform over the field, numbered `1..=count`
/// in draw order.
pub fn deploy_random_normals(field: FieldSpec, count: u32, seed: u64) -> Vec<Node> {
    let mut rng = rng::seeded(seed);
    random_normals_from(&mut rng, field, count)
}

fn random_normals_from(rng: &mut rng::SimRng, field: FieldSpec, count: u32) -> Vec<Node> {
    (1..=count)
        .map(|i| {
            let x = rng.random_range(0.0..=field.width);
            let y = rng.random_range(0.0..=field.height);
            Node { id: NodeId::Normal(i), position: Position::new(x, y) }
        })
        .collect()
}

/// Hand-placed nodes. Heads and normals are numbered independently in list
/// order.
pub fn place_nodes(field: FieldSpec, placements: &[(NodeKind, Position)]) -> Result<Vec<Node>> {
    let (mut heads, mut normals) = (0u32, 0u32);
    placements
        .iter()
        .map(|&(kind, position)| {
            field.check(position)?;
            let id = match kind {
                NodeKind::ClusterHead => {
                    heads += 1;
                    NodeId::Head(heads)
                }
                NodeKind::Normal => {
                    normals += 1;
                    NodeId::Normal(normals)
                }
            };
            Ok(Node { id, position })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub enum TracingMode {
    /// One point per head, uniform inside that head's grid cell.
    RandomPerCell { seed: u64 },
    /// Caller-supplied positions, numbered from 1 in list order.
    Explicit(Vec<Position>),
}

pub fn assign_tracing_points(deployment: &Deployment, mode: &TracingMode) -> Result<Vec<TracingPoint>> {
    let field = deployment.field;
    match mode {
        TracingMode::Explicit(points) => points
            .iter()
            .zip(1..)
            .map(|(&position, id)| {
                field.check(position)?;
                Ok(TracingPoint { id, position })
            })
            .collect(),
        TracingMode::RandomPerCell { seed } => {
            let grid = deployment.grid.ok_or(Error::MissingHeadGrid)?;
            let mut rng = rng::seeded(*seed);
            Ok(random_tracing_points(&mut rng, field, grid, deployment.heads()))
        }
    }
}

fn random_tracing_points<'a>(
    rng: &mut rng::SimRng,
    field: FieldSpec,
    grid: HeadGrid,
    heads: impl Iterator<Item = &'a Node>,
) -> Vec<TracingPoint> {
    let (dx, dy) = (field.width / grid.cols as f64, field.height / grid.rows as f64);
    heads
        .map(|h| {
            let x0 = ((h.position.x / dx).floor() * dx).clamp(0.0, field.width - dx);
            let y0 = ((h.position.y / dy).floor() * dy).clamp(0.0, field.height - dy);
            let x = rng.random_range(x0..=x0 + dx);
            let y = rng.random_range(y0..=y0 + dy);
            TracingPoint { id: h.id.index(), position: Position::new(x, y) }
        })
        .collect()
}

impl Deployment {
    /// Validates that there is at least one head, ids are unique and every
    /// position lies inside the field.
    pub fn new(
        field: FieldSpec,
        nodes: Vec<Node>,
        tracing_points: Vec<TracingPoint>,
        seed: u64,
    ) -> Result<Self> {
        if !nodes.iter().any(Node::is_head) {
            return Err(Error::NoHeads);
        }
        let mut seen = HashSet::with_capacity(nodes.len());
        for n in &nodes {
            if !seen.insert(n.id) {
                return Err(Error::DuplicateNode(n.id));
            }
            field.check(n.position)?;
        }
        let mut seen_tp = HashSet::with_capacity(tracing_points.len());
        for t in &tracing_points {
            if !seen_tp.insert(t.id) {
                return Err(Error::InvalidParameter(format!("duplicate tracing point id {}", t.id)));
            }
            field.check(t.position)?;
        }
        Ok(Self { field, nodes, tracing_points, grid: None, seed })
    }

    /// Grid heads, `normals` random nodes and one random tracing point per
    /// head cell. Normals and tracing points come from one generator seeded
    /// with `seed`, normals first.
    pub fn random_grid(field: FieldSpec, grid: HeadGrid, normals: u32, seed: u64) -> Result<Self> {
        let mut nodes = deploy_grid_heads(field, grid.rows, grid.cols)?;
        let mut rng = rng::seeded(seed);
        nodes.extend(random_normals_from(&mut rng, field, normals));
        let tracing = random_tracing_points(&mut rng, field, grid, nodes.iter().filter(|n| n.is_head()));
        let mut d = Self::new(field, nodes, tracing, seed)?;
        d.grid = Some(grid);
        Ok(d)
    }

    pub fn with_grid(mut self, grid: HeadGrid) -> Self {
        self.grid = Some(grid);
        self
    }

    pub fn with_tracing_points(self, tracing_points: Vec<TracingPoint>) -> Result<Self> {
        let grid = self.grid;
        let mut d = Self::new(self.field, self.nodes, tracing_points, self.seed)?;
        d.grid = grid;
        Ok(d)
    }

    pub fn field(&self) -> FieldSpec {
        self.field
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn grid(&self) -> Option<HeadGrid> {
        self.grid
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn heads(&self) -> impl Iterator<Item = &Node> {
        self.nodes.iter().filter(|n| n.is_head())
    }

    pub fn normals(&self) -> impl Iterator<Item = &Node> {
        self.nodes.iter().filter(|n| !n.is_head())
    }

    pub fn tracing_points(&self) -> &[TracingPoint] {
        &self.tracing_points
    }

    pub fn node(&self, id: NodeId) -> Option<&Node> {
        self.nodes.iter().find(|n| n.id == id)
    }

    pub fn position(&self, id: NodeId) -> Result<Position> {
        self.node(id).map(|n| n.position).ok_or(Error::UnknownNode(id))
    }

    /// Tracing point paired with head `CHk`.
    pub fn tracing_point_for(&self, head: NodeId) -> Option<&TracingPoint> {
        match head {
            NodeId::Head(k) => self.tracing_points.iter().find(|t| t.id == k),
            NodeId::Normal(_) => None,
        }
    }

    /// Serializes to the line format:
    ///
    /// ```text
    /// # wsn-core deployment v1
    /// field,<width>,<height>
    /// seed,<seed>
    /// grid,<rows>,<cols>          (optional)
    /// CH,<id>,<x>,<y>
    /// N,<id>,<x>,<y>
    /// T,<id>,<x>,<y>
    /// ```
    ///
    /// Coordinates carry 6 decimals.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        out.push_str("# wsn-core deployment v1\n");
        out.push_str(&format!("# generator: {}\n", rng::GENERATOR));
        out.push_str(&format!("field,{:.6},{:.6}\n", self.field.width, self.field.height));
        out.push_str(&format!("seed,{}\n", self.seed));
        if let Some(g) = self.grid {
            out.push_str(&format!("grid,{},{}\n", g.rows, g.cols));
        }
        for n in &self.nodes {
            let tag = if n.is_head() { "CH" } else { "N" };
            out.push_str(&format!("{tag},{},{:.6},{:.6}\n", n.id.index(), n.position.x, n.position.y));
        }
        for t in &self.tracing_points {
            out.push_str(&format!("T,{},{:.6},{:.6}\n", t.id, t.position.x, t.position.y));
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut field = None;
        let mut seed = 0u64;
        let mut grid = None;
        let mut nodes = Vec::new();
        let mut tracing = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let err = |msg: &str| Error::Parse { line: i + 1, msg: msg.to_string() };
            let cols: Vec<&str> = line.split(',').map(str::trim).collect();
            let num = |s: &str| s.parse::<f64>().map_err(|_| err(&format!("bad number {s:?}")));
            let int = |s: &str| s.parse::<u32>().map_err(|_| err(&format!("bad integer {s:?}")));
            match (cols[0], cols.len()) {
                ("field", 3) => field = Some(FieldSpec::new(num(cols[1])?, num(cols[2])?)?),
                ("seed", 2) => seed = cols[1].parse().map_err(|_| err("bad seed"))?,
                ("grid", 3) => grid = Some(HeadGrid { rows: int(cols[1])?, cols: int(cols[2])? }),
                ("CH" | "N" | "T", 4) => {
                    let id = int(cols[1])?;
                    let position = Position::new(num(cols[2])?, num(cols[3])?);
                    match cols[0] {
                        "CH" => nodes.push(Node { id: NodeId::Head(id), position }),
                        "N" => nodes.push(Node { id: NodeId::Normal(id), position }),
                        _ => tracing.push(TracingPoint { id, position }),
                    }
                }
                _ => return Err(err("unrecognized record")),
            }
        }
        let field = field.ok_or(Error::Parse { line: 0, msg: "missing field record".into() })?;
        let mut d = Self::new(field, nodes, tracing, seed)?;
        d.grid = grid;
        Ok(d)
    }
}
