//! Validity classification of trilinearly-mapped hexahedra.
//!
//! A hex is valid when the Jacobian determinant of its trilinear map is
//! strictly positive on the whole unit cube. Three classifiers with
//! different guarantees are provided:
//!
//! * **Corner test** — checks the 8 corner Jacobians. A non-positive
//!   corner determinant proves invalidity; all-positive proves nothing,
//!   so this method is an optimistic screen (it never reports a valid
//!   hex as invalid).
//! * **Tet test** — checks all 58 tetrahedron determinants. All-positive
//!   proves validity; otherwise the hex is reported invalid, so this
//!   method is a conservative certificate (it never reports an invalid
//!   hex as valid, but may flag valid hexes near the margin).
//! * **Bézier test** — expands the triquadratic determinant in the
//!   Bernstein basis and recursively subdivides until the convex-hull
//!   bounds decide the sign; undecided regions at the depth cap count as
//!   invalid, keeping the method conservative.

use rayon::prelude::*;

use crate::mesh::{HexMesh, CORNER_COORDS};
use crate::tets::TetTable;
use crate::{Matrix3, Point3, Vector3};

/// Verdict for a single hex.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HexClass {
    Valid,
    Invalid,
}

/// Which classifier to run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ValidityMethod {
    /// 8 corner Jacobians; necessary condition only.
    Corner,
    /// All 58 tetrahedron determinants; sufficient condition only.
    AllTets,
    /// Bernstein-basis subdivision; exact up to the depth cap.
    Bezier,
}

/// Default subdivision depth for [`ValidityMethod::Bezier`].
pub const DEFAULT_BEZIER_DEPTH: u32 = 8;

/// Classification result for a whole mesh.
#[derive(Debug, Clone)]
pub struct ValidityReport {
    pub method: ValidityMethod,
    /// Per-hex verdict under `method`.
    pub classes: Vec<HexClass>,
    /// Per-hex minimum over the 8 corner determinants.
    pub min_corner_dets: Vec<f64>,
    /// Minimum over all 58 tetrahedron determinants of all hexes,
    /// independent of `method`. Infinite for an empty mesh.
    pub det_min: f64,
    pub invalid_count: usize,
}

impl ValidityReport {
    /// True when every hex is classified valid.
    pub fn is_valid(&self) -> bool {
        self.invalid_count == 0
    }
}

/// Classifies every hex of the mesh with the requested method
/// (Bézier uses [`DEFAULT_BEZIER_DEPTH`]).
pub fn classify_mesh(mesh: &HexMesh, table: &TetTable, method: ValidityMethod) -> ValidityReport {
    let per_hex: Vec<(HexClass, f64, f64)> = (0..mesh.hex_count())
        .into_par_iter()
        .with_min_len(64)
        .map(|h| {
            let corners = mesh.hex_corners(h);
            let class = classify_hex(&corners, table, method, DEFAULT_BEZIER_DEPTH);
            let min_corner = corner_dets(&corners, table)
                .into_iter()
                .fold(f64::INFINITY, f64::min);
            let min_tet = min_tet_det(&corners, table);
            (class, min_corner, min_tet)
        })
        .collect();

    let classes: Vec<HexClass> = per_hex.iter().map(|r| r.0).collect();
    let min_corner_dets: Vec<f64> = per_hex.iter().map(|r| r.1).collect();
    let det_min = per_hex
        .iter()
        .map(|r| r.2)
        .fold(f64::INFINITY, f64::min);
    let invalid_count = classes.iter().filter(|&&c| c == HexClass::Invalid).count();
    ValidityReport {
        method,
        classes,
        min_corner_dets,
        det_min,
        invalid_count,
    }
}

/// Classifies a single hex from its corner positions.
pub fn classify_hex(
    corners: &[Point3; 8],
    table: &TetTable,
    method: ValidityMethod,
    bezier_depth: u32,
) -> HexClass {
    match method {
        ValidityMethod::Corner => {
            if corner_dets(corners, table).iter().all(|&d| d > 0.0) {
                HexClass::Valid
            } else {
                HexClass::Invalid
            }
        }
        ValidityMethod::AllTets => {
            if table.patterns().iter().all(|p| p.det(corners) > 0.0) {
                HexClass::Valid
            } else {
                HexClass::Invalid
            }
        }
        ValidityMethod::Bezier => classify_hex_bezier(corners, bezier_depth),
    }
}

/// The 8 corner Jacobian determinants in corner order.
pub fn corner_dets(corners: &[Point3; 8], table: &TetTable) -> [f64; 8] {
    std::array::from_fn(|c| table.corner_pattern(c).det(corners))
}

/// Minimum determinant over all 58 tetrahedra.
pub fn min_tet_det(corners: &[Point3; 8], table: &TetTable) -> f64 {
    table
        .patterns()
        .iter()
        .map(|p| p.det(corners))
        .fold(f64::INFINITY, f64::min)
}

/// Jacobian of the trilinear map at cube coordinates `(u, v, w)`.
pub fn trilinear_jacobian(corners: &[Point3; 8], u: f64, v: f64, w: f64) -> Matrix3 {
    let t = [u, v, w];
    let mut cols = [Vector3::zeros(); 3];
    for (c, corner) in corners.iter().enumerate() {
        let mut shape = [0.0; 3];
        let mut slope = [0.0; 3];
        for i in 0..3 {
            if CORNER_COORDS[c][i] == 1.0 {
                shape[i] = t[i];
                slope[i] = 1.0;
            } else {
                shape[i] = 1.0 - t[i];
                slope[i] = -1.0;
            }
        }
        let p = corner.coords;
        cols[0] += p * (slope[0] * shape[1] * shape[2]);
        cols[1] += p * (shape[0] * slope[1] * shape[2]);
        cols[2] += p * (shape[0] * shape[1] * slope[2]);
    }
    Matrix3::from_columns(&cols)
}

/// Jacobian determinant of the trilinear map at `(u, v, w)`.
pub fn trilinear_det(corners: &[Point3; 8], u: f64, v: f64, w: f64) -> f64 {
    trilinear_jacobian(corners, u, v, w).determinant()
}

/// Image of `(u, v, w)` under the trilinear map.
pub fn trilinear_point(corners: &[Point3; 8], u: f64, v: f64, w: f64) -> Point3 {
    let t = [u, v, w];
    let mut p = Vector3::zeros();
    for (c, corner) in corners.iter().enumerate() {
        let mut weight = 1.0;
        for i in 0..3 {
            weight *= if CORNER_COORDS[c][i] == 1.0 {
                t[i]
            } else {
                1.0 - t[i]
            };
        }
        p += corner.coords * weight;
    }
    Point3::from(p)
}

/// Minimum Jacobian determinant over a dense `n × n × n` parameter grid.
/// Brute-force diagnostic; `n ≥ 2`.
pub fn dense_min_det(corners: &[Point3; 8], n: usize) -> f64 {
    assert!(n >= 2);
    let step = 1.0 / (n - 1) as f64;
    let mut min = f64::INFINITY;
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                let d = trilinear_det(corners, i as f64 * step, j as f64 * step, k as f64 * step);
                min = min.min(d);
            }
        }
    }
    min
}

/// The Jacobian determinant of a trilinear hex as a triquadratic Bernstein
/// polynomial over the unit cube.
///
/// `coeffs[i][j][k]` is the Bernstein coefficient of degree-2 index
/// `(i, j, k)` along `(u, v, w)`.
#[derive(Debug, Clone)]
pub struct BezierPatch {
    coeffs: [[[f64; 3]; 3]; 3],
}

impl BezierPatch {
    /// Builds the patch by sampling the determinant on the tensor grid
    /// `{0, ½, 1}³` and converting Lagrange → Bernstein per axis. The
    /// conversion is exact because the determinant has degree 2 in each
    /// variable.
    pub fn from_hex_corners(corners: &[Point3; 8]) -> Self {
        let mut samples = [[[0.0; 3]; 3]; 3];
        for (i, row) in samples.iter_mut().enumerate() {
            for (j, col) in row.iter_mut().enumerate() {
                for (k, val) in col.iter_mut().enumerate() {
                    *val = trilinear_det(
                        corners,
                        i as f64 * 0.5,
                        j as f64 * 0.5,
                        k as f64 * 0.5,
                    );
                }
            }
        }
        Self::from_value_grid(samples)
    }

    /// Converts values on the `{0, ½, 1}³` grid into Bernstein
    /// coefficients.
    pub fn from_value_grid(mut g: [[[f64; 3]; 3]; 3]) -> Self {
        // Quadratic Lagrange (nodes 0, ½, 1) to Bernstein along one axis:
        // b0 = f(0), b1 = (4 f(½) − f(0) − f(1)) / 2, b2 = f(1).
        let convert = |f0: f64, fh: f64, f1: f64| (f0, (4.0 * fh - f0 - f1) / 2.0, f1);
        for j in 0..3 {
            for k in 0..3 {
                let (a, b, c) = convert(g[0][j][k], g[1][j][k], g[2][j][k]);
                (g[0][j][k], g[1][j][k], g[2][j][k]) = (a, b, c);
            }
        }
        for i in 0..3 {
            for k in 0..3 {
                let (a, b, c) = convert(g[i][0][k], g[i][1][k], g[i][2][k]);
                (g[i][0][k], g[i][1][k], g[i][2][k]) = (a, b, c);
            }
        }
        for i in 0..3 {
            for j in 0..3 {
                let (a, b, c) = convert(g[i][j][0], g[i][j][1], g[i][j][2]);
                (g[i][j][0], g[i][j][1], g[i][j][2]) = (a, b, c);
            }
        }
        BezierPatch { coeffs: g }
    }

    /// Bernstein coefficients.
    pub fn coefficients(&self) -> &[[[f64; 3]; 3]; 3] {
        &self.coeffs
    }

    /// Evaluates the polynomial at `(u, v, w)`.
    pub fn evaluate(&self, u: f64, v: f64, w: f64) -> f64 {
        let basis = |t: f64| [(1.0 - t) * (1.0 - t), 2.0 * t * (1.0 - t), t * t];
        let (bu, bv, bw) = (basis(u), basis(v), basis(w));
        let mut sum = 0.0;
        for i in 0..3 {
            for j in 0..3 {
                for k in 0..3 {
                    sum += self.coeffs[i][j][k] * bu[i] * bv[j] * bw[k];
                }
            }
        }
        sum
    }

    /// Values at the 8 box corners (end-point Bernstein coefficients are
    /// exact function values).
    pub fn corner_values(&self) -> [f64; 8] {
        CORNER_COORDS.map(|[x, y, z]| {
            self.coeffs[2 * x as usize][2 * y as usize][2 * z as usize]
        })
    }

    /// Minimum Bernstein coefficient — a lower bound for the polynomial
    /// on the box.
    pub fn min_coefficient(&self) -> f64 {
        self.coeffs
            .iter()
            .flatten()
            .flatten()
            .fold(f64::INFINITY, |m, &v| m.min(v))
    }

    /// Splits the box in half along `axis` (0 = u, 1 = v, 2 = w).
    pub fn split(&self, axis: usize) -> (BezierPatch, BezierPatch) {
        let mut left = self.coeffs;
        let mut right = self.coeffs;
        let mut idx = [0usize; 3];
        for a in 0..3 {
            for b in 0..3 {
                let (fst, snd) = [(1usize, 2usize), (0, 2), (0, 1)][axis];
                idx[fst] = a;
                idx[snd] = b;
                let pick = |grid: &[[[f64; 3]; 3]; 3], t: usize| {
                    let mut i = idx;
                    i[axis] = t;
                    grid[i[0]][i[1]][i[2]]
                };
                let (b0, b1, b2) = (
                    pick(&self.coeffs, 0),
                    pick(&self.coeffs, 1),
                    pick(&self.coeffs, 2),
                );
                // de Casteljau at t = ½ for a quadratic.
                let mid = (b0 + 2.0 * b1 + b2) / 4.0;
                let store = |grid: &mut [[[f64; 3]; 3]; 3], t: usize, v: f64| {
                    let mut i = idx;
                    i[axis] = t;
                    grid[i[0]][i[1]][i[2]] = v;
                };
                store(&mut left, 1, (b0 + b1) / 2.0);
                store(&mut left, 2, mid);
                store(&mut right, 0, mid);
                store(&mut right, 1, (b1 + b2) / 2.0);
            }
        }
        (BezierPatch { coeffs: left }, BezierPatch { coeffs: right })
    }

    /// Decides the sign of the polynomial on the box.
    ///
    /// Returns `Invalid` when any corner value is non-positive (corner
    /// values are exact), `Valid` when all coefficients are positive
    /// (convex hull), and otherwise recurses into the 8 half-boxes.
    /// Regions still undecided at `max_depth` are counted invalid, so the
    /// verdict errs on the conservative side.
    pub fn classify(&self, max_depth: u32) -> HexClass {
        if self.corner_values().iter().any(|&v| v <= 0.0) {
            return HexClass::Invalid;
        }
        if self.min_coefficient() > 0.0 {
            return HexClass::Valid;
        }
        if max_depth == 0 {
            return HexClass::Invalid;
        }
        let (u0, u1) = self.split(0);
        for u in [u0, u1] {
            let (v0, v1) = u.split(1);
            for v in [v0, v1] {
                let (w0, w1) = v.split(2);
                for w in [w0, w1] {
                    if w.classify(max_depth - 1) == HexClass::Invalid {
                        return HexClass::Invalid;
                    }
                }
            }
        }
        HexClass::Valid
    }
}

/// Bézier classification of one hex with an explicit depth cap.
///
/// Starts with the exact grid samples (any non-positive sample proves
/// invalidity without building the patch), then subdivides.
pub fn classify_hex_bezier(corners: &[Point3; 8], max_depth: u32) -> HexClass {
    let mut samples = [[[0.0; 3]; 3]; 3];
    for (i, row) in samples.iter_mut().enumerate() {
        for (j, col) in row.iter_mut().enumerate() {
            for (k, val) in col.iter_mut().enumerate() {
                let d = trilinear_det(corners, i as f64 * 0.5, j as f64 * 0.5, k as f64 * 0.5);
                if d <= 0.0 {
                    return HexClass::Invalid;
                }
                *val = d;
            }
        }
    }
    BezierPatch::from_value_grid(samples).classify(max_depth)
}
