//! Hexahedral mesh data model: connectivity, corner-ordering convention,
//! boundary topology, and vertex bookkeeping.
//!
//! Corner ordering is fixed throughout the crate: corner `c` of a hex maps
//! to a unit-cube corner, bottom quad counterclockwise then top quad,
//!
//! ```text
//! 0:(0,0,0)  1:(1,0,0)  2:(1,1,0)  3:(0,1,0)
//! 4:(0,0,1)  5:(1,0,1)  6:(1,1,1)  7:(0,1,1)
//! ```
//!
//! which coincides with the VTK hexahedron ordering (cell type 12).

use std::collections::HashMap;

use crate::{Point3, Vector3};

/// Unit-cube coordinates of the 8 hex corners in canonical order.
pub const CORNER_COORDS: [[f64; 3]; 8] = [
    [0.0, 0.0, 0.0],
    [1.0, 0.0, 0.0],
    [1.0, 1.0, 0.0],
    [0.0, 1.0, 0.0],
    [0.0, 0.0, 1.0],
    [1.0, 0.0, 1.0],
    [1.0, 1.0, 1.0],
    [0.0, 1.0, 1.0],
];

/// The six quad faces of a hex as corner-index quadruples.
pub const HEX_FACES: [[usize; 4]; 6] = [
    [0, 1, 2, 3], // bottom (z = 0)
    [4, 5, 6, 7], // top    (z = 1)
    [0, 1, 5, 4], // front  (y = 0)
    [1, 2, 6, 5], // right  (x = 1)
    [2, 3, 7, 6], // back   (y = 1)
    [3, 0, 4, 7], // left   (x = 0)
];

/// For each corner, the three corners reachable along a cube edge
/// (unit-cube coordinates differing in exactly one component).
pub const CORNER_EDGE_NEIGHBORS: [[usize; 3]; 8] = [
    [1, 3, 4],
    [0, 2, 5],
    [1, 3, 6],
    [0, 2, 7],
    [0, 5, 7],
    [1, 4, 6],
    [2, 5, 7],
    [3, 4, 6],
];

/// Errors raised while constructing or loading a mesh.
#[derive(Debug, thiserror::Error)]
pub enum MeshError {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("unsupported cell type {0}; only 8-node hexahedra (type 12) are supported")]
    UnsupportedCellType(i64),
    #[error("hex {hex} references vertex {index}, but the mesh has {vertex_count} vertices")]
    IndexOutOfRange {
        hex: usize,
        index: usize,
        vertex_count: usize,
    },
    #[error("hex {hex} uses vertex {index} more than once")]
    RepeatedCorner { hex: usize, index: usize },
    #[error("non-manifold input: a quad face is shared by {count} hexes")]
    NonManifoldFace { count: usize },
    #[error("coordinate {0} is not finite")]
    NonFiniteCoordinate(usize),
}

/// Adjacency between boundary vertices that share a boundary quad edge.
///
/// Interior vertices have an empty neighbor list.
#[derive(Debug, Clone)]
pub struct BoundaryGraph {
    neighbors: Vec<Vec<usize>>,
}

impl BoundaryGraph {
    /// Boundary vertices adjacent to `v`, sorted ascending.
    pub fn neighbors(&self, v: usize) -> &[usize] {
        &self.neighbors[v]
    }

    /// Number of vertices covered by the graph (boundary and interior).
    pub fn len(&self) -> usize {
        self.neighbors.len()
    }

    /// True when the graph covers no vertices.
    pub fn is_empty(&self) -> bool {
        self.neighbors.is_empty()
    }
}

/// A hexahedral mesh: vertex positions plus 8-corner connectivity.
///
/// Construction validates connectivity (index ranges, distinct corners,
/// manifold faces), computes per-vertex boundary flags, and snapshots the
/// original vertex positions. Only positions may change afterwards; the
/// snapshot backs the boundary penalty and the movement reports.
#[derive(Debug, Clone)]
pub struct HexMesh {
    points: Vec<Point3>,
    hexes: Vec<[usize; 8]>,
    boundary: Vec<bool>,
    original: Vec<Point3>,
    vertex_hexes: Vec<Vec<usize>>,
    boundary_faces: Vec<[usize; 4]>,
}

impl HexMesh {
    /// Builds a mesh from positions and hex connectivity.
    pub fn new(points: Vec<Point3>, hexes: Vec<[usize; 8]>) -> Result<Self, MeshError> {
        for (i, p) in points.iter().enumerate() {
            if !(p.x.is_finite() && p.y.is_finite() && p.z.is_finite()) {
                return Err(MeshError::NonFiniteCoordinate(i));
            }
        }
        for (h, hex) in hexes.iter().enumerate() {
            for (c, &v) in hex.iter().enumerate() {
                if v >= points.len() {
                    return Err(MeshError::IndexOutOfRange {
                        hex: h,
                        index: v,
                        vertex_count: points.len(),
                    });
                }
                if hex[..c].contains(&v) {
                    return Err(MeshError::RepeatedCorner { hex: h, index: v });
                }
            }
        }

        let boundary_faces = collect_boundary_faces(&hexes)?;
        let mut boundary = vec![false; points.len()];
        for face in &boundary_faces {
            for &v in face {
                boundary[v] = true;
            }
        }

        let mut vertex_hexes = vec![Vec::new(); points.len()];
        for (h, hex) in hexes.iter().enumerate() {
            for &v in hex {
                vertex_hexes[v].push(h);
            }
        }

        let original = points.clone();
        Ok(HexMesh {
            points,
            hexes,
            boundary,
            original,
            vertex_hexes,
            boundary_faces,
        })
    }

    /// Number of vertices.
    pub fn vertex_count(&self) -> usize {
        self.points.len()
    }

    /// Number of hexahedra.
    pub fn hex_count(&self) -> usize {
        self.hexes.len()
    }

    /// Current vertex positions.
    pub fn points(&self) -> &[Point3] {
        &self.points
    }

    /// Positions snapshotted at construction; never mutated.
    pub fn original_positions(&self) -> &[Point3] {
        &self.original
    }

    /// Hex connectivity.
    pub fn hexes(&self) -> &[[usize; 8]] {
        &self.hexes
    }

    /// The 8 current corner positions of hex `h` in canonical order.
    pub fn hex_corners(&self, h: usize) -> [Point3; 8] {
        let hex = &self.hexes[h];
        std::array::from_fn(|c| self.points[hex[c]])
    }

    /// Per-vertex boundary flags (true when the vertex lies on a quad face
    /// used by exactly one hex).
    pub fn boundary_flags(&self) -> &[bool] {
        &self.boundary
    }

    /// True when vertex `v` is on the boundary surface.
    pub fn is_boundary(&self, v: usize) -> bool {
        self.boundary[v]
    }

    /// Hexes incident to vertex `v`.
    pub fn hexes_of_vertex(&self, v: usize) -> &[usize] {
        &self.vertex_hexes[v]
    }

    /// Every other hex sharing at least one vertex with `h`, sorted.
    pub fn hex_neighbors(&self, h: usize) -> Vec<usize> {
        let mut out: Vec<usize> = self.hexes[h]
            .iter()
            .flat_map(|&v| self.vertex_hexes[v].iter().copied())
            .filter(|&n| n != h)
            .collect();
        out.sort_unstable();
        out.dedup();
        out
    }

    /// Builds the boundary-edge adjacency used by the movement metrics.
    pub fn boundary_graph(&self) -> BoundaryGraph {
        let mut neighbors = vec![Vec::new(); self.points.len()];
        for face in &self.boundary_faces {
            for i in 0..4 {
                let a = face[i];
                let b = face[(i + 1) % 4];
                neighbors[a].push(b);
                neighbors[b].push(a);
            }
        }
        for list in &mut neighbors {
            list.sort_unstable();
            list.dedup();
        }
        BoundaryGraph { neighbors }
    }

    /// Moves a single vertex.
    pub fn set_point(&mut self, v: usize, p: Point3) {
        self.points[v] = p;
    }

    /// Flattens current positions into `[x0, y0, z0, x1, …]`.
    pub fn coords(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(3 * self.points.len());
        for p in &self.points {
            out.extend_from_slice(&[p.x, p.y, p.z]);
        }
        out
    }

    /// Overwrites all positions from a flat coordinate vector.
    pub fn set_coords(&mut self, coords: &[f64]) {
        assert_eq!(coords.len(), 3 * self.points.len(), "coordinate count mismatch");
        for (i, p) in self.points.iter_mut().enumerate() {
            *p = Point3::new(coords[3 * i], coords[3 * i + 1], coords[3 * i + 2]);
        }
    }

    /// Displacement of vertex `v` from its original position.
    pub fn displacement_from_original(&self, v: usize) -> Vector3 {
        self.points[v] - self.original[v]
    }
}

/// Collects the quad faces used by exactly one hex.
///
/// A face key is the sorted corner quadruple; a face used by more than two
/// hexes makes the complex non-manifold and is rejected.
fn collect_boundary_faces(hexes: &[[usize; 8]]) -> Result<Vec<[usize; 4]>, MeshError> {
    let mut counts: HashMap<[usize; 4], (usize, [usize; 4])> = HashMap::new();
    for hex in hexes {
        for face in &HEX_FACES {
            let quad = [hex[face[0]], hex[face[1]], hex[face[2]], hex[face[3]]];
            let mut key = quad;
            key.sort_unstable();
            let entry = counts.entry(key).or_insert((0, quad));
            entry.0 += 1;
            if entry.0 > 2 {
                return Err(MeshError::NonManifoldFace { count: entry.0 });
            }
        }
    }
    let mut faces: Vec<[usize; 4]> = counts
        .into_values()
        .filter(|(count, _)| *count == 1)
        .map(|(_, quad)| quad)
        .collect();
    faces.sort_unstable();
    Ok(faces)
}
