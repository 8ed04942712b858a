//! Boundary-movement statistics comparing a mesh before and after
//! untangling.
//!
//! Reported per boundary vertex is the Euclidean displacement `d` and a
//! scaled variant `d / l̄`, where `l̄` is the mean distance from the
//! vertex to its boundary-edge neighbors measured on the *input* mesh —
//! so the scaled number is mesh-resolution independent.

use crate::mesh::{BoundaryGraph, HexMesh};
use crate::Point3;

/// Errors from report construction.
#[derive(Debug, thiserror::Error)]
pub enum MetricsError {
    #[error("meshes have different connectivity")]
    ConnectivityMismatch,
    #[error("boundary vertex {0} has no boundary neighbors")]
    IsolatedBoundaryVertex(usize),
}

/// Aggregated boundary displacement statistics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundaryMovementReport {
    /// Mean displacement over all boundary vertices.
    pub avg_all: f64,
    /// Mean over the ever-unlocked boundary vertices; 0 when none were
    /// unlocked.
    pub avg_movable: f64,
    /// Maximum displacement over boundary vertices.
    pub max: f64,
    pub avg_all_scaled: f64,
    pub avg_movable_scaled: f64,
    pub max_scaled: f64,
}

/// Euclidean displacement between two positions.
pub fn displacement(before: Point3, after: Point3) -> f64 {
    (after - before).norm()
}

/// Mean distance from `vertex` to its boundary-edge neighbors, measured
/// at the given positions.
pub fn neighbor_scale(
    vertex: usize,
    graph: &BoundaryGraph,
    positions: &[Point3],
) -> Result<f64, MetricsError> {
    let neighbors = graph.neighbors(vertex);
    if neighbors.is_empty() {
        return Err(MetricsError::IsolatedBoundaryVertex(vertex));
    }
    let sum: f64 = neighbors
        .iter()
        .map(|&n| (positions[n] - positions[vertex]).norm())
        .sum();
    Ok(sum / neighbors.len() as f64)
}

/// Builds the displacement report between two meshes with identical
/// connectivity. `ever_unlocked` marks the boundary vertices that were
/// allowed to move at some point.
pub fn boundary_report(
    before: &HexMesh,
    after: &HexMesh,
    ever_unlocked: &[bool],
) -> Result<BoundaryMovementReport, MetricsError> {
    if before.vertex_count() != after.vertex_count()
        || before.hexes() != after.hexes()
        || ever_unlocked.len() != before.vertex_count()
    {
        return Err(MetricsError::ConnectivityMismatch);
    }

    let graph = before.boundary_graph();
    let mut sum_all = 0.0;
    let mut sum_all_scaled = 0.0;
    let mut count_all = 0usize;
    let mut sum_movable = 0.0;
    let mut sum_movable_scaled = 0.0;
    let mut count_movable = 0usize;
    let mut max = 0.0f64;
    let mut max_scaled = 0.0f64;

    for v in 0..before.vertex_count() {
        if !before.is_boundary(v) {
            continue;
        }
        let d = displacement(before.points()[v], after.points()[v]);
        let scale = neighbor_scale(v, &graph, before.points())?;
        let d_scaled = d / scale;
        sum_all += d;
        sum_all_scaled += d_scaled;
        count_all += 1;
        max = max.max(d);
        max_scaled = max_scaled.max(d_scaled);
        if ever_unlocked[v] {
            sum_movable += d;
            sum_movable_scaled += d_scaled;
            count_movable += 1;
        }
    }

    let mean = |sum: f64, n: usize| if n == 0 { 0.0 } else { sum / n as f64 };
    Ok(BoundaryMovementReport {
        avg_all: mean(sum_all, count_all),
        avg_movable: mean(sum_movable, count_movable),
        max,
        avg_all_scaled: mean(sum_all_scaled, count_all),
        avg_movable_scaled: mean(sum_movable_scaled, count_movable),
        max_scaled,
    })
}

/// Scientific notation with 6 fractional digits and a signed two-digit
/// exponent (C's `%.6E`): `0.000000E+00`, `-1.250000E-01`.
pub fn sci6(x: f64) -> String {
    let raw = format!("{:.6e}", x);
    let (mantissa, exp) = raw.split_once('e').expect("exponent marker");
    let exp: i32 = exp.parse().expect("numeric exponent");
    format!("{}E{}{:02}", mantissa, if exp < 0 { '-' } else { '+' }, exp.abs())
}

impl BoundaryMovementReport {
    /// Multi-line human-readable rendering.
    pub fn render(&self) -> String {
        format!(
            "boundary movement (avg all):      {}\n\
             boundary movement (avg movable):  {}\n\
             boundary movement (max):          {}\n\
             scaled movement  (avg all):       {}\n\
             scaled movement  (avg movable):   {}\n\
             scaled movement  (max):           {}",
            sci6(self.avg_all),
            sci6(self.avg_movable),
            sci6(self.max),
            sci6(self.avg_all_scaled),
            sci6(self.avg_movable_scaled),
            sci6(self.max_scaled),
        )
    }
}
