//! Enumeration of the tetrahedra spanned by hex corners.
//!
//! Out of the 70 four-corner subsets of a hex, 12 are coplanar on the
//! reference cube (the 6 faces and the 6 diagonal rectangles) and are
//! dropped; the remaining 58 each define a reference tetrahedron with
//! positive volume once their corner order is fixed. Eight of them are
//! *corner* tetrahedra — a corner together with its three edge
//! neighbors — whose determinants reproduce the classical corner
//! Jacobians of the hex.
//!
//! Each pattern carries the inverse of its reference edge matrix so that
//! the Jacobian of the trilinear map restricted to that tetrahedron,
//! `J = T · S⁻¹`, and its determinant `det J = det T / det S` can be
//! evaluated from physical corner positions alone.

use crate::mesh::{CORNER_COORDS, CORNER_EDGE_NEIGHBORS};
use crate::{Matrix3, Point3};

/// Four-corner subsets of a hex.
pub const CANDIDATE_TET_COUNT: usize = 70;
/// Subsets that are coplanar on the reference cube.
pub const DEGENERATE_TET_COUNT: usize = 12;
/// Usable reference tetrahedra.
pub const TET_COUNT: usize = 58;
/// Tetrahedra formed by a corner and its three edge neighbors.
pub const CORNER_TET_COUNT: usize = 8;

/// One tetrahedron pattern: corner indices plus precomputed reference data.
#[derive(Debug, Clone)]
pub struct TetPattern {
    /// Hex-corner indices, ordered so the reference volume is positive.
    pub corners: [usize; 4],
    /// Determinant of the reference edge matrix; always `1.0` or `2.0`.
    pub det_s: f64,
    /// Inverse of the reference edge matrix (exact: entries are integers
    /// or half-integers).
    pub s_inv: Matrix3,
}

impl TetPattern {
    /// Edge matrix of this tetrahedron at the given hex corner positions
    /// (columns are edges from the first corner).
    pub fn edge_matrix(&self, corners: &[Point3; 8]) -> Matrix3 {
        let [a, b, c, d] = self.corners;
        tet_edge_matrix(corners[a], corners[b], corners[c], corners[d])
    }

    /// Jacobian of the trilinear map restricted to this tetrahedron.
    pub fn jacobian(&self, corners: &[Point3; 8]) -> Matrix3 {
        self.edge_matrix(corners) * self.s_inv
    }

    /// Determinant of [`Self::jacobian`], computed as `det T / det S`.
    pub fn det(&self, corners: &[Point3; 8]) -> f64 {
        self.edge_matrix(corners).determinant() / self.det_s
    }

    /// Volume of the reference tetrahedron, `det S / 6`.
    pub fn reference_volume(&self) -> f64 {
        self.det_s / 6.0
    }
}

/// Edge matrix of a tetrahedron: columns `p1−p0, p2−p0, p3−p0`.
pub fn tet_edge_matrix(p0: Point3, p1: Point3, p2: Point3, p3: Point3) -> Matrix3 {
    Matrix3::from_columns(&[p1 - p0, p2 - p0, p3 - p0])
}

/// The 58 usable tetrahedron patterns of a hex, in lexicographic order of
/// their sorted corner quadruples.
#[derive(Debug, Clone)]
pub struct TetTable {
    patterns: Vec<TetPattern>,
    corner_tets: [usize; 8],
}

impl TetTable {
    /// Enumerates all candidate subsets and keeps the non-degenerate ones.
    pub fn new() -> Self {
        let mut patterns = Vec::with_capacity(TET_COUNT);
        let mut candidates = 0usize;
        for i in 0..8usize {
            for j in i + 1..8 {
                for k in j + 1..8 {
                    for l in k + 1..8 {
                        candidates += 1;
                        let mut corners = [i, j, k, l];
                        let det = reference_det(&corners);
                        if det == 0 {
                            continue;
                        }
                        if det < 0 {
                            corners.swap(2, 3);
                        }
                        let det = reference_det(&corners);
                        debug_assert!(det > 0);
                        patterns.push(TetPattern {
                            corners,
                            det_s: det as f64,
                            s_inv: reference_inverse(&corners, det),
                        });
                    }
                }
            }
        }
        debug_assert_eq!(candidates, CANDIDATE_TET_COUNT);
        debug_assert_eq!(patterns.len(), TET_COUNT);

        let mut corner_tets = [usize::MAX; 8];
        for (idx, pattern) in patterns.iter().enumerate() {
            let mut set = pattern.corners;
            set.sort_unstable();
            for c in 0..8 {
                let mut want = [c, 0, 0, 0];
                want[1..].copy_from_slice(&CORNER_EDGE_NEIGHBORS[c]);
                want.sort_unstable();
                if set == want {
                    corner_tets[c] = idx;
                }
            }
        }
        debug_assert!(corner_tets.iter().all(|&i| i != usize::MAX));

        TetTable {
            patterns,
            corner_tets,
        }
    }

    /// All 58 patterns.
    pub fn patterns(&self) -> &[TetPattern] {
        &self.patterns
    }

    /// Number of patterns (58).
    pub fn len(&self) -> usize {
        self.patterns.len()
    }

    /// Always false; present for clippy symmetry with [`Self::len`].
    pub fn is_empty(&self) -> bool {
        self.patterns.is_empty()
    }

    /// Index into [`Self::patterns`] of the corner tetrahedron at each of
    /// the 8 hex corners.
    pub fn corner_tet_indices(&self) -> &[usize; 8] {
        &self.corner_tets
    }

    /// The corner tetrahedron at hex corner `c`.
    pub fn corner_pattern(&self, c: usize) -> &TetPattern {
        &self.patterns[self.corner_tets[c]]
    }
}

impl Default for TetTable {
    fn default() -> Self {
        Self::new()
    }
}

/// Exact determinant of the reference edge matrix of a corner quadruple
/// (unit-cube coordinates are integers, so the determinant is too).
fn reference_det(corners: &[usize; 4]) -> i64 {
    let m = reference_edges_i64(corners);
    det3(&m)
}

fn reference_edges_i64(corners: &[usize; 4]) -> [[i64; 3]; 3] {
    let p = |c: usize| CORNER_COORDS[c].map(|x| x as i64);
    let p0 = p(corners[0]);
    let mut m = [[0i64; 3]; 3];
    for (col, &c) in corners[1..].iter().enumerate() {
        let pc = p(c);
        for row in 0..3 {
            m[row][col] = pc[row] - p0[row];
        }
    }
    m
}

fn det3(m: &[[i64; 3]; 3]) -> i64 {
    m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
        - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
        + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
}

/// Exact inverse via the integer adjugate: every entry is an integer
/// divided by `det ∈ {1, 2}`, hence exactly representable.
fn reference_inverse(corners: &[usize; 4], det: i64) -> Matrix3 {
    let m = reference_edges_i64(corners);
    let cof = |r: usize, c: usize| -> i64 {
        let rows: Vec<usize> = (0..3).filter(|&i| i != r).collect();
        let cols: Vec<usize> = (0..3).filter(|&i| i != c).collect();
        let minor = m[rows[0]][cols[0]] * m[rows[1]][cols[1]]
            - m[rows[0]][cols[1]] * m[rows[1]][cols[0]];
        if (r + c) % 2 == 0 {
            minor
        } else {
            -minor
        }
    };
    // adj(M)[r][c] = cofactor(c, r); inv = adj / det.
    Matrix3::from_fn(|r, c| cof(c, r) as f64 / det as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use approx::assert_relative_eq;

    #[test]
    fn table_has_expected_counts() {
        let table = TetTable::new();
        assert_eq!(table.len(), TET_COUNT);
        assert_eq!(
            CANDIDATE_TET_COUNT - TET_COUNT,
            DEGENERATE_TET_COUNT,
            "70 candidates minus 58 kept leaves 12 degenerate"
        );
    }

    #[test]
    fn reference_determinants_are_positive_units_or_twos() {
        let table = TetTable::new();
        let ones = table.patterns().iter().filter(|p| p.det_s == 1.0).count();
        let twos = table.patterns().iter().filter(|p| p.det_s == 2.0).count();
        assert_eq!((ones, twos), (56, 2));
    }

    #[test]
    fn the_two_largest_tets_are_the_diagonal_ones() {
        let table = TetTable::new();
        let mut big: Vec<[usize; 4]> = table
            .patterns()
            .iter()
            .filter(|p| p.det_s == 2.0)
            .map(|p| {
                let mut s = p.corners;
                s.sort_unstable();
                s
            })
            .collect();
        big.sort_unstable();
        assert_eq!(big, vec![[0, 2, 5, 7], [1, 3, 4, 6]]);
    }

    #[test]
    fn corner_tets_cover_all_corners_with_unit_volume() {
        let table = TetTable::new();
        let expected_sets: [[usize; 4]; 8] = [
            [0, 1, 3, 4],
            [0, 1, 2, 5],
            [1, 2, 3, 6],
            [0, 2, 3, 7],
            [0, 4, 5, 7],
            [1, 4, 5, 6],
            [2, 5, 6, 7],
            [3, 4, 6, 7],
        ];
        for c in 0..8 {
            let pattern = table.corner_pattern(c);
            let mut set = pattern.corners;
            set.sort_unstable();
            assert_eq!(set, expected_sets[c], "corner {c}");
            assert_eq!(pattern.det_s, 1.0);
            assert_eq!(pattern.reference_volume(), 1.0 / 6.0);
        }
    }

    #[test]
    fn patterns_are_in_lexicographic_order() {
        let table = TetTable::new();
        let sorted_sets: Vec<[usize; 4]> = table
            .patterns()
            .iter()
            .map(|p| {
                let mut s = p.corners;
                s.sort_unstable();
                s
            })
            .collect();
        let mut check = sorted_sets.clone();
        check.sort_unstable();
        assert_eq!(sorted_sets, check);
    }

    #[test]
    fn inverse_is_exact() {
        let table = TetTable::new();
        let cube = fixtures::unit_cube_corners();
        for pattern in table.patterns() {
            let product = pattern.edge_matrix(&cube) * pattern.s_inv;
            assert_eq!(product, Matrix3::identity(), "{:?}", pattern.corners);
        }
    }

    #[test]
    fn unit_cube_jacobians_are_identity() {
        let table = TetTable::new();
        let cube = fixtures::unit_cube_corners();
        for pattern in table.patterns() {
            assert_eq!(pattern.jacobian(&cube), Matrix3::identity());
            assert_eq!(pattern.det(&cube), 1.0);
        }
    }

    #[test]
    fn linear_maps_have_constant_jacobian() {
        let table = TetTable::new();
        let a = Matrix3::new(1.5, 0.25, 0.0, -0.5, 2.0, 0.125, 0.75, 0.0, 1.0);
        let mapped: [Point3; 8] =
            fixtures::unit_cube_corners().map(|p| Point3::from(a * p.coords));
        let det_a = a.determinant();
        for pattern in table.patterns() {
            assert_relative_eq!(pattern.jacobian(&mapped), a, epsilon = 1e-12);
            assert_relative_eq!(pattern.det(&mapped), det_a, epsilon = 1e-12);
        }
    }
}
