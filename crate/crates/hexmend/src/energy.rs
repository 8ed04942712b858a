//! Regularized distortion energy and its analytic gradient.
//!
//! Every active tetrahedron `t` of every supported hex contributes
//! `(f_ε(J_t) + λ·g_ε(J_t)) · vol(T_t)` where `J_t = T·S⁻¹` is the
//! Jacobian relative to the reference tetrahedron, `vol(T_t) = det S/6`
//! is the reference volume, and
//!
//! ```text
//! χ(d, ε)  = (d + √(ε² + d²)) / 2          smooth surrogate for max(d, 0)
//! f_ε(J)   = tr(JᵀJ) / χ(det J, ε)^{2/3}   shape distortion
//! g_ε(J)   = (det²J + 1) / χ(det J, ε)     volume distortion
//! ```
//!
//! On top of that, boundary vertices that have been unlocked pay
//! `factor · ‖p − p₀‖²` for straying from their original position.
//!
//! With `ε = 0` the energy is the exact barrier (infinite on inverted
//! elements); evaluating it there returns [`EnergyError::NonPositiveChi`]
//! instead of dividing by zero, and callers must keep `ε > 0` while any
//! active determinant is non-positive.
//!
//! Assembly parallelizes over hexes; partial results are merged in hex
//! order so sums are bit-identical regardless of thread count.

use rayon::prelude::*;

use crate::mesh::HexMesh;
use crate::tets::{TetPattern, TetTable, CORNER_TET_COUNT, TET_COUNT};
use crate::{Matrix3, Vector3};

/// Errors from energy evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
pub enum EnergyError {
    /// `χ(det J, ε) ≤ 0` — the unregularized infinite branch was hit
    /// (only possible with `ε = 0` and a non-positive determinant).
    #[error("chi regularization is non-positive; keep epsilon > 0 while inverted elements exist")]
    NonPositiveChi,
}

/// Which tetrahedra of one hex are active: the 8 corner tets or all 58.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TetSelection {
    Corners,
    Full,
}

/// Per-hex tet selection plus a support mask saying which hexes
/// contribute to the energy at all (localized strategies shrink it).
#[derive(Debug, Clone)]
pub struct ActiveTetSet {
    selection: Vec<TetSelection>,
    support: Vec<bool>,
}

impl ActiveTetSet {
    /// All hexes supported, corner tets everywhere.
    pub fn corners(hex_count: usize) -> Self {
        ActiveTetSet {
            selection: vec![TetSelection::Corners; hex_count],
            support: vec![true; hex_count],
        }
    }

    pub fn hex_count(&self) -> usize {
        self.selection.len()
    }

    pub fn selection(&self, hex: usize) -> TetSelection {
        self.selection[hex]
    }

    /// Switches one hex to the full 58-tet set.
    pub fn escalate_hex(&mut self, hex: usize) {
        self.selection[hex] = TetSelection::Full;
    }

    /// Switches every hex to the full 58-tet set.
    pub fn escalate_all(&mut self) {
        self.selection.fill(TetSelection::Full);
    }

    /// True when every hex already uses the full set.
    pub fn all_escalated(&self) -> bool {
        self.selection.iter().all(|&s| s == TetSelection::Full)
    }

    /// Replaces the support mask (length must equal the hex count).
    pub fn set_support(&mut self, support: Vec<bool>) {
        assert_eq!(support.len(), self.selection.len());
        self.support = support;
    }

    /// Marks every hex as supported.
    pub fn support_all(&mut self) {
        self.support.fill(true);
    }

    pub fn support(&self) -> &[bool] {
        &self.support
    }

    pub fn is_supported(&self, hex: usize) -> bool {
        self.support[hex]
    }

    /// Number of active tetrahedra over supported hexes.
    pub fn active_tet_count(&self) -> usize {
        self.selection
            .iter()
            .zip(&self.support)
            .filter(|(_, &sup)| sup)
            .map(|(&sel, _)| match sel {
                TetSelection::Corners => CORNER_TET_COUNT,
                TetSelection::Full => TET_COUNT,
            })
            .sum()
    }

    fn patterns<'t>(&self, hex: usize, table: &'t TetTable) -> PatternIter<'t> {
        match self.selection[hex] {
            TetSelection::Full => PatternIter::Full(table.patterns().iter()),
            TetSelection::Corners => PatternIter::Corners(table, 0),
        }
    }
}

enum PatternIter<'t> {
    Full(std::slice::Iter<'t, TetPattern>),
    Corners(&'t TetTable, usize),
}

impl<'t> Iterator for PatternIter<'t> {
    type Item = &'t TetPattern;

    fn next(&mut self) -> Option<&'t TetPattern> {
        match self {
            PatternIter::Full(iter) => iter.next(),
            PatternIter::Corners(table, next) => {
                if *next < CORNER_TET_COUNT {
                    *next += 1;
                    Some(table.corner_pattern(*next - 1))
                } else {
                    None
                }
            }
        }
    }
}

/// Energy parameters: regularization, weights, and the unlocked-boundary
/// set feeding the penalty.
#[derive(Debug, Clone)]
pub struct EnergyParams {
    pub epsilon: f64,
    pub lambda: f64,
    pub penalty_factor: f64,
    /// Per-vertex flag: boundary vertex allowed to move (and penalized).
    pub unlocked: Vec<bool>,
}

impl EnergyParams {
    /// Defaults (`λ = 0`, factor `1e6`, nothing unlocked) at the given ε.
    pub fn new(epsilon: f64, vertex_count: usize) -> Self {
        EnergyParams {
            epsilon,
            lambda: 0.0,
            penalty_factor: 1e6,
            unlocked: vec![false; vertex_count],
        }
    }
}

/// Evaluated energy, split into its terms.
///
/// `total = distortion + lambda · volume + penalty`.
#[derive(Debug, Clone, Copy)]
pub struct EnergyBreakdown {
    pub total: f64,
    pub distortion: f64,
    pub volume: f64,
    pub penalty: f64,
    /// Minimum determinant over active tets of supported hexes
    /// (infinite when nothing is supported).
    pub det_min: f64,
}

/// `χ(d, ε) = (d + √(ε² + d²)) / 2`.
///
/// For `d < 0` the textbook form cancels catastrophically once
/// `ε ≪ |d|` (the sum rounds to zero even though χ > 0), so the
/// algebraically identical form `ε² / (2(√(ε² + d²) − d))` is used
/// there; it keeps χ positive for every ε > 0.
pub fn chi(d: f64, eps: f64) -> f64 {
    let root = (eps * eps + d * d).sqrt();
    if d >= 0.0 {
        (d + root) / 2.0
    } else {
        let denom = root - d;
        if denom == 0.0 {
            0.0 // d = ε = 0
        } else {
            eps * eps / (2.0 * denom)
        }
    }
}

/// `∂χ/∂d = χ / √(ε² + d²)`.
pub fn chi_derivative(d: f64, eps: f64) -> f64 {
    let root = (eps * eps + d * d).sqrt();
    chi(d, eps) / root
}

/// `f_ε(J) = tr(JᵀJ) / χ(det J, ε)^{2/3}`.
pub fn f_eps(j: &Matrix3, eps: f64) -> Result<f64, EnergyError> {
    let c = chi(j.determinant(), eps);
    if c <= 0.0 {
        return Err(EnergyError::NonPositiveChi);
    }
    Ok(j.norm_squared() / chi_pow_two_thirds(c))
}

/// `g_ε(J) = (det²J + 1) / χ(det J, ε)`.
pub fn g_eps(j: &Matrix3, eps: f64) -> Result<f64, EnergyError> {
    let d = j.determinant();
    let c = chi(d, eps);
    if c <= 0.0 {
        return Err(EnergyError::NonPositiveChi);
    }
    Ok((d * d + 1.0) / c)
}

/// `χ^{2/3}` via exp/log, valid for `χ > 0` only.
fn chi_pow_two_thirds(c: f64) -> f64 {
    (2.0 / 3.0 * c.ln()).exp()
}

/// Quadratic displacement penalty over unlocked boundary vertices.
pub fn penalty_energy(mesh: &HexMesh, params: &EnergyParams) -> f64 {
    let mut sum = 0.0;
    for (v, &unlocked) in params.unlocked.iter().enumerate() {
        if unlocked {
            sum += mesh.displacement_from_original(v).norm_squared();
        }
    }
    sum * params.penalty_factor
}

/// Per-hex assembly result.
struct HexPartial {
    distortion: f64,
    volume: f64,
    det_min: f64,
    grads: [Vector3; 8],
}

/// Evaluates `F` over the active set.
pub fn mesh_energy(
    mesh: &HexMesh,
    active: &ActiveTetSet,
    params: &EnergyParams,
    table: &TetTable,
) -> Result<EnergyBreakdown, EnergyError> {
    assemble(mesh, active, params, table, false).map(|(breakdown, _)| breakdown)
}

/// Evaluates `F` and its gradient with respect to vertex coordinates.
///
/// The gradient is a flat `3·vertex_count` vector; entries of coordinates
/// masked out by `free` are forced to zero.
pub fn mesh_energy_gradient(
    mesh: &HexMesh,
    active: &ActiveTetSet,
    params: &EnergyParams,
    table: &TetTable,
    free: &[bool],
) -> Result<(EnergyBreakdown, Vec<f64>), EnergyError> {
    assert_eq!(free.len(), mesh.vertex_count());
    let (breakdown, mut grad) = assemble(mesh, active, params, table, true)?;
    let mut grad = grad.take().expect("gradient requested");

    for (v, &unlocked) in params.unlocked.iter().enumerate() {
        if unlocked {
            let d = mesh.displacement_from_original(v);
            for i in 0..3 {
                grad[3 * v + i] += 2.0 * params.penalty_factor * d[i];
            }
        }
    }
    for (v, &is_free) in free.iter().enumerate() {
        if !is_free {
            grad[3 * v] = 0.0;
            grad[3 * v + 1] = 0.0;
            grad[3 * v + 2] = 0.0;
        }
    }
    Ok((breakdown, grad))
}

type Assembled = (EnergyBreakdown, Option<Vec<f64>>);

fn assemble(
    mesh: &HexMesh,
    active: &ActiveTetSet,
    params: &EnergyParams,
    table: &TetTable,
    with_gradient: bool,
) -> Result<Assembled, EnergyError> {
    assert_eq!(active.hex_count(), mesh.hex_count());

    let partials: Vec<(usize, HexPartial)> = (0..mesh.hex_count())
        .into_par_iter()
        .with_min_len(32)
        .filter(|&h| active.is_supported(h))
        .map(|h| hex_partial(mesh, active, params, table, h, with_gradient).map(|p| (h, p)))
        .collect::<Result<_, _>>()?;

    // Merge sequentially in hex order: bit-identical results independent
    // of the thread count.
    let mut distortion = 0.0;
    let mut volume = 0.0;
    let mut det_min = f64::INFINITY;
    let mut grad = with_gradient.then(|| vec![0.0; 3 * mesh.vertex_count()]);
    for (h, partial) in partials {
        distortion += partial.distortion;
        volume += partial.volume;
        det_min = det_min.min(partial.det_min);
        if let Some(grad) = grad.as_mut() {
            for (c, &v) in mesh.hexes()[h].iter().enumerate() {
                for i in 0..3 {
                    grad[3 * v + i] += partial.grads[c][i];
                }
            }
        }
    }

    let penalty = penalty_energy(mesh, params);
    let breakdown = EnergyBreakdown {
        total: distortion + params.lambda * volume + penalty,
        distortion,
        volume,
        penalty,
        det_min,
    };
    Ok((breakdown, grad))
}

fn hex_partial(
    mesh: &HexMesh,
    active: &ActiveTetSet,
    params: &EnergyParams,
    table: &TetTable,
    h: usize,
    with_gradient: bool,
) -> Result<HexPartial, EnergyError> {
    let corners = mesh.hex_corners(h);
    let eps = params.epsilon;
    let mut distortion = 0.0;
    let mut volume = 0.0;
    let mut det_min = f64::INFINITY;
    let mut grads = [Vector3::zeros(); 8];

    for pattern in active.patterns(h, table) {
        let t = pattern.edge_matrix(&corners);
        let j = t * pattern.s_inv;
        let d = t.determinant() / pattern.det_s;
        det_min = det_min.min(d);

        let c = chi(d, eps);
        if c <= 0.0 {
            return Err(EnergyError::NonPositiveChi);
        }
        let c23 = chi_pow_two_thirds(c);
        let trace = j.norm_squared();
        let vol = pattern.reference_volume();
        distortion += trace / c23 * vol;
        volume += (d * d + 1.0) / c * vol;

        if with_gradient {
            // dF/dJ = 2J/χ^{2/3} + coeff·Cof(J), where Cof(J) collects
            // ∂det J/∂J (columns are cross products of the other two).
            let dchi = chi_derivative(d, eps);
            let mut coeff = -(2.0 / 3.0) * trace / (c23 * c) * dchi;
            if params.lambda != 0.0 {
                coeff += params.lambda * (2.0 * d / c - (d * d + 1.0) * dchi / (c * c));
            }
            let c1 = j.column(0).into_owned();
            let c2 = j.column(1).into_owned();
            let c3 = j.column(2).into_owned();
            let cof = Matrix3::from_columns(&[c2.cross(&c3), c3.cross(&c1), c1.cross(&c2)]);
            let g_j = j * (2.0 / c23) + cof * coeff;
            // Chain through J = T·S⁻¹ and T's columns p₁−p₀, p₂−p₀, p₃−p₀.
            let g_t = g_j * pattern.s_inv.transpose() * vol;
            let [a, b, c_idx, d_idx] = pattern.corners;
            let (g1, g2, g3) = (
                g_t.column(0).into_owned(),
                g_t.column(1).into_owned(),
                g_t.column(2).into_owned(),
            );
            grads[a] -= g1 + g2 + g3;
            grads[b] += g1;
            grads[c_idx] += g2;
            grads[d_idx] += g3;
        }
    }

    Ok(HexPartial {
        distortion,
        volume,
        det_min,
        grads,
    })
}

/// Minimum determinant over each hex's *selected* tets — all hexes,
/// ignoring the support mask. This is the mesh-wide quantity the ε
/// schedule watches.
pub fn min_selected_det(mesh: &HexMesh, active: &ActiveTetSet, table: &TetTable) -> f64 {
    min_det_over(mesh, active, table, false)
}

/// Minimum selected determinant over supported hexes only (used when a
/// localized run owns its own ε).
pub fn min_supported_det(mesh: &HexMesh, active: &ActiveTetSet, table: &TetTable) -> f64 {
    min_det_over(mesh, active, table, true)
}

fn min_det_over(
    mesh: &HexMesh,
    active: &ActiveTetSet,
    table: &TetTable,
    supported_only: bool,
) -> f64 {
    (0..mesh.hex_count())
        .into_par_iter()
        .with_min_len(64)
        .filter(|&h| !supported_only || active.is_supported(h))
        .map(|h| {
            let corners = mesh.hex_corners(h);
            active
                .patterns(h, table)
                .map(|p| p.det(&corners))
                .fold(f64::INFINITY, f64::min)
        })
        .reduce(|| f64::INFINITY, f64::min)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::Point3;
    use approx::assert_relative_eq;

    fn table() -> TetTable {
        TetTable::new()
    }

    #[test]
    fn chi_reference_values() {
        assert_eq!(chi(1.0, 0.0), 1.0);
        assert_eq!(chi(-2.0, 0.0), 0.0);
        assert_eq!(chi(0.0, 1.0), 0.5);
        assert_eq!(chi(3.0, 4.0), 4.0); // 3-4-5 triangle
        assert_relative_eq!(chi(-1.0, 1.0), 0.2071067811865476, max_relative = 1e-15);
    }

    #[test]
    fn chi_is_positive_and_monotone_for_positive_eps() {
        for &eps in &[1e-6, 0.1, 1.0] {
            let mut prev = f64::NEG_INFINITY;
            for i in -40..=40 {
                let d = i as f64 / 4.0;
                let c = chi(d, eps);
                assert!(c > 0.0, "chi({d}, {eps})");
                assert!(c >= prev);
                prev = c;
            }
        }
    }

    #[test]
    fn chi_derivative_matches_finite_differences() {
        let h = 1e-6;
        for &(d, eps) in &[(0.5, 1.0), (-0.5, 1.0), (-2.0, 0.1), (0.0, 0.3)] {
            let fd = (chi(d + h, eps) - chi(d - h, eps)) / (2.0 * h);
            assert_relative_eq!(chi_derivative(d, eps), fd, max_relative = 1e-8);
        }
    }

    #[test]
    fn f_reference_values() {
        assert_relative_eq!(f_eps(&Matrix3::identity(), 0.0).unwrap(), 3.0);
        let stretched = Matrix3::from_diagonal(&Vector3::new(2.0, 1.0, 1.0));
        assert_relative_eq!(
            f_eps(&stretched, 0.0).unwrap(),
            3.77976314968462,
            max_relative = 1e-14
        );
        let mirrored = Matrix3::from_diagonal(&Vector3::new(-1.0, 1.0, 1.0));
        assert_eq!(f_eps(&mirrored, 0.0), Err(EnergyError::NonPositiveChi));
        assert_relative_eq!(
            f_eps(&mirrored, 1.0).unwrap(),
            8.570214833550834,
            max_relative = 1e-14
        );
    }

    #[test]
    fn g_reference_values() {
        assert_relative_eq!(g_eps(&Matrix3::identity(), 0.0).unwrap(), 2.0);
        let flat = Matrix3::from_diagonal(&Vector3::new(1.0, 1.0, 0.0));
        assert_relative_eq!(g_eps(&flat, 1.0).unwrap(), 2.0);
        let doubled = Matrix3::from_diagonal(&Vector3::new(1.0, 1.0, 2.0));
        assert_relative_eq!(g_eps(&doubled, 0.0).unwrap(), 2.5);
    }

    #[test]
    fn rotation_leaves_f_and_g_unchanged() {
        let rot = nalgebra::Rotation3::from_euler_angles(0.4, -1.1, 2.2);
        let j = Matrix3::new(1.2, 0.3, -0.1, 0.0, 0.8, 0.2, 0.4, -0.2, 1.5);
        let rj = rot.matrix() * j;
        assert_relative_eq!(
            f_eps(&rj, 0.5).unwrap(),
            f_eps(&j, 0.5).unwrap(),
            max_relative = 1e-12
        );
        assert_relative_eq!(
            g_eps(&rj, 0.5).unwrap(),
            g_eps(&j, 0.5).unwrap(),
            max_relative = 1e-12
        );
    }

    #[test]
    fn identity_cube_energy() {
        let mesh = fixtures::single_hex_mesh(fixtures::unit_cube_corners());
        let table = table();
        let active = ActiveTetSet::corners(1);
        let mut params = EnergyParams::new(0.0, mesh.vertex_count());
        let e = mesh_energy(&mesh, &active, &params, &table).unwrap();
        assert_relative_eq!(e.total, 4.0, max_relative = 1e-14); // 8 tets · 3 · 1/6
        assert_eq!(e.det_min, 1.0);
        params.lambda = 1.0;
        let e = mesh_energy(&mesh, &active, &params, &table).unwrap();
        assert_relative_eq!(e.total, 20.0 / 3.0, max_relative = 1e-14);
        assert_relative_eq!(
            e.total,
            e.distortion + params.lambda * e.volume + e.penalty
        );
    }

    #[test]
    fn mirrored_cube_energy_is_finite_with_regularization() {
        let corners = fixtures::unit_cube_corners().map(|p| Point3::new(-p.x, p.y, p.z));
        let mesh = fixtures::single_hex_mesh(corners);
        let table = table();
        let active = ActiveTetSet::corners(1);
        let params = EnergyParams::new(1.0, mesh.vertex_count());
        let e = mesh_energy(&mesh, &active, &params, &table).unwrap();
        assert_relative_eq!(e.total, 11.42695311140111, max_relative = 1e-13);
        assert_eq!(e.det_min, -1.0);

        let exact = EnergyParams::new(0.0, mesh.vertex_count());
        assert!(matches!(
            mesh_energy(&mesh, &active, &exact, &table),
            Err(EnergyError::NonPositiveChi)
        ));
    }

    #[test]
    fn penalty_counts_only_unlocked_vertices() {
        let mut mesh = fixtures::single_hex_mesh(fixtures::unit_cube_corners());
        let mut params = EnergyParams::new(1.0, mesh.vertex_count());
        mesh.set_point(0, Point3::new(0.0, 0.0, -1.0)); // moved distance 1
        mesh.set_point(1, Point3::new(1.1, 0.0, 0.0)); // moved 0.1, stays locked
        assert_eq!(penalty_energy(&mesh, &params), 0.0);
        params.unlocked[0] = true;
        assert_relative_eq!(penalty_energy(&mesh, &params), 1e6);
        params.unlocked[1] = true;
        assert_relative_eq!(penalty_energy(&mesh, &params), 1e6 + 0.1 * 0.1 * 1e6);
    }

    #[test]
    fn active_tet_counts_follow_escalation_and_support() {
        let mut active = ActiveTetSet::corners(4);
        assert_eq!(active.active_tet_count(), 32);
        active.escalate_hex(2);
        assert_eq!(active.active_tet_count(), 8 * 3 + 58);
        active.set_support(vec![false, true, true, false]);
        assert_eq!(active.active_tet_count(), 8 + 58);
        active.escalate_all();
        assert!(active.all_escalated());
        assert_eq!(active.active_tet_count(), 2 * 58);
    }

    #[test]
    fn selected_det_minima_respect_selection_and_support() {
        let mesh = fixtures::displaced_center_block();
        let table = table();
        let mut active = ActiveTetSet::corners(8);
        let corner_min = min_selected_det(&mesh, &active, &table);
        active.escalate_all();
        let full_min = min_selected_det(&mesh, &active, &table);
        assert!(full_min <= corner_min);
        // Supporting only the valid half of the block hides the negative dets.
        active.set_support((0..8).map(|h| h < 4).collect());
        assert!(min_supported_det(&mesh, &active, &table) < 0.0); // hexes 0-3 contain bad tets
        let mut corners_only = ActiveTetSet::corners(8);
        corners_only.set_support((0..8).map(|h| h < 4).collect());
        assert!(min_supported_det(&mesh, &corners_only, &table) > 0.0);
    }

    #[test]
    fn interior_gradient_vanishes_on_perfect_lattice() {
        let mesh = fixtures::block_mesh(2, 2, 2);
        let table = table();
        let active = ActiveTetSet::corners(8);
        let params = EnergyParams::new(0.0, mesh.vertex_count());
        let free: Vec<bool> = (0..mesh.vertex_count()).map(|v| !mesh.is_boundary(v)).collect();
        let (_, grad) = mesh_energy_gradient(&mesh, &active, &params, &table, &free).unwrap();
        for (i, g) in grad.iter().enumerate() {
            assert!(g.abs() <= 1e-10, "coordinate {i}: {g}");
        }
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let mut mesh = fixtures::displaced_center_block();
        let table = table();
        let mut active = ActiveTetSet::corners(8);
        active.escalate_hex(3);
        let mut params = EnergyParams::new(0.7, mesh.vertex_count());
        params.lambda = 0.25;
        params.unlocked[0] = true;
        mesh.set_point(0, Point3::new(-0.03, 0.02, 0.05));
        let free = vec![true; mesh.vertex_count()];

        let (_, grad) = mesh_energy_gradient(&mesh, &active, &params, &table, &free).unwrap();
        let coords = mesh.coords();
        let h = 1e-6;
        for i in 0..coords.len() {
            let mut probe = mesh.clone();
            let mut c = coords.clone();
            c[i] += h;
            probe.set_coords(&c);
            let plus = mesh_energy(&probe, &active, &params, &table).unwrap().total;
            c[i] -= 2.0 * h;
            probe.set_coords(&c);
            let minus = mesh_energy(&probe, &active, &params, &table).unwrap().total;
            let fd = (plus - minus) / (2.0 * h);
            let denom = 1.0f64.max(fd.abs()).max(grad[i].abs());
            assert!(
                ((grad[i] - fd) / denom).abs() < 1e-5,
                "coordinate {i}: analytic {} vs fd {}",
                grad[i],
                fd
            );
        }
    }

    #[test]
    fn masked_coordinates_report_zero_gradient() {
        let mesh = fixtures::displaced_center_block();
        let table = table();
        let active = ActiveTetSet::corners(8);
        let params = EnergyParams::new(1.0, mesh.vertex_count());
        let free: Vec<bool> = (0..mesh.vertex_count()).map(|v| v == 13).collect();
        let (_, grad) = mesh_energy_gradient(&mesh, &active, &params, &table, &free).unwrap();
        for v in 0..mesh.vertex_count() {
            let block = &grad[3 * v..3 * v + 3];
            if v == 13 {
                assert!(block.iter().any(|&g| g != 0.0));
            } else {
                assert_eq!(block, [0.0, 0.0, 0.0]);
            }
        }
    }
}
