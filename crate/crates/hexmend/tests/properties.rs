//! Randomized invariants of the numerical kernels: the regularized
//! determinant surrogate, the distortion/volume energies, the Bernstein
//! bound, the ε schedule, and the boundary-movement report.

use hexmend::energy::{chi, f_eps, g_eps};
use hexmend::fixtures;
use hexmend::metrics::boundary_report;
use hexmend::untangle::{fast_epsilon_applicable, is_stuck, update_epsilon};
use hexmend::validity::BezierPatch;
use hexmend::{HexMesh, Matrix3, Point3, Vector3};
use nalgebra::Rotation3;
use proptest::prelude::*;

fn matrix_strategy() -> impl Strategy<Value = Matrix3> {
    prop::array::uniform9(-2.0f64..2.0).prop_map(|e| Matrix3::from_row_slice(&e))
}

fn rotation_strategy() -> impl Strategy<Value = Rotation3<f64>> {
    (prop::array::uniform3(-1.0f64..1.0), 0.0f64..std::f64::consts::TAU)
        .prop_filter("axis too short", |(axis, _)| {
            axis.iter().map(|a| a * a).sum::<f64>() > 1e-2
        })
        .prop_map(|(axis, angle)| {
            Rotation3::from_axis_angle(
                &nalgebra::Unit::new_normalize(Vector3::new(axis[0], axis[1], axis[2])),
                angle,
            )
        })
}

fn hex_corners_strategy() -> impl Strategy<Value = [Point3; 8]> {
    prop::array::uniform24(-0.5f64..0.5).prop_map(|offsets| {
        let mut corners = fixtures::unit_cube_corners();
        for (c, chunk) in corners.iter_mut().zip(offsets.chunks(3)) {
            *c += Vector3::new(chunk[0], chunk[1], chunk[2]);
        }
        corners
    })
}

proptest! {
    /// χ is a smooth positive overestimate of max(d, 0) for every ε > 0,
    /// and it increases with d.
    #[test]
    fn chi_is_positive_monotone_and_dominates_d(
        d1 in -10.0f64..10.0,
        d2 in -10.0f64..10.0,
        eps in 1e-6f64..10.0,
    ) {
        let (lo, hi) = if d1 <= d2 { (d1, d2) } else { (d2, d1) };
        prop_assert!(chi(lo, eps) > 0.0);
        prop_assert!(chi(lo, eps) >= lo.max(0.0));
        prop_assert!(chi(lo, eps) <= chi(hi, eps));
    }

    /// Rotating the Jacobian changes neither the distortion nor the volume
    /// term: both are built from rotation-invariant quantities.
    #[test]
    fn energies_are_rotation_invariant(
        j in matrix_strategy(),
        r in rotation_strategy(),
    ) {
        let eps = 1.0;
        let rj: Matrix3 = r.matrix() * j;
        let f = f_eps(&j, eps).unwrap();
        let f_rot = f_eps(&rj, eps).unwrap();
        prop_assert!((f - f_rot).abs() <= 1e-9 * f.abs().max(1.0), "f {f} vs rotated {f_rot}");
        let g = g_eps(&j, eps).unwrap();
        let g_rot = g_eps(&rj, eps).unwrap();
        prop_assert!((g - g_rot).abs() <= 1e-9 * g.abs().max(1.0), "g {g} vs rotated {g_rot}");
    }

    /// The minimum Bernstein coefficient really is a lower bound: no point
    /// evaluation of the determinant field falls below it.
    #[test]
    fn bernstein_minimum_bounds_every_evaluation(
        corners in hex_corners_strategy(),
        u in 0.0f64..=1.0,
        v in 0.0f64..=1.0,
        w in 0.0f64..=1.0,
    ) {
        let patch = BezierPatch::from_hex_corners(&corners);
        let bound = patch.min_coefficient();
        let value = patch.evaluate(u, v, w);
        prop_assert!(
            value >= bound - 1e-12 * bound.abs().max(1.0),
            "evaluation {value} below coefficient bound {bound}"
        );
    }

    /// Subdividing a patch never loosens the coefficient bound.
    #[test]
    fn subdivision_never_lowers_the_bound(
        corners in hex_corners_strategy(),
        axis in 0usize..3,
    ) {
        let patch = BezierPatch::from_hex_corners(&corners);
        let bound = patch.min_coefficient();
        let (left, right) = patch.split(axis);
        let child_bound = left.min_coefficient().min(right.min_coefficient());
        prop_assert!(
            child_bound >= bound - 1e-12 * bound.abs().max(1.0),
            "split loosened the bound: {bound} -> {child_bound}"
        );
    }

    /// While any determinant is still non-positive, the scheduled ε never
    /// grows: the regularization only tightens as the run progresses.
    #[test]
    fn epsilon_update_never_increases(
        f_prev in 1e-3f64..1e6,
        ratio in 0.0f64..=1.0,
        eps in 1e-8f64..=1.0,
        d_min in -10.0f64..=0.0,
    ) {
        let next = update_epsilon(f_prev, ratio * f_prev, eps, d_min);
        prop_assert!(next <= eps, "ε grew from {eps} to {next}");
        prop_assert!(next >= 0.0);
    }

    /// The aggressive restart (det got worse) and the stagnation detector
    /// (det frozen) can never both claim the same iteration.
    #[test]
    fn fast_path_and_stuck_are_mutually_exclusive(
        eps in 1e-10f64..=1.0,
        d_min in -10.0f64..10.0,
        d_prev in -10.0f64..10.0,
        invalid in 0usize..100,
        invalid_prev in 0usize..100,
    ) {
        let fast = fast_epsilon_applicable(d_min, Some(d_prev), eps);
        let stuck = is_stuck(eps, d_min, Some(d_prev), invalid, invalid_prev);
        prop_assert!(!(fast && stuck));
    }

    /// The boundary-movement report only sees displacements, so translating
    /// both meshes by the same offset leaves every number unchanged.
    #[test]
    fn boundary_report_is_translation_invariant(
        t in prop::array::uniform3(-100.0f64..100.0),
        moved in prop::array::uniform3(-0.4f64..0.4),
    ) {
        let before = fixtures::block_mesh(2, 2, 2);
        let mut after = fixtures::block_mesh(2, 2, 2);
        // Move one boundary vertex a little; vertex 0 is a corner.
        after.set_point(0, Point3::new(moved[0], moved[1], moved[2]));
        let unlocked = vec![false; before.vertex_count()];

        let base = boundary_report(&before, &after, &unlocked).unwrap();

        let shift = Vector3::new(t[0], t[1], t[2]);
        let translate = |mesh: &HexMesh| {
            let points: Vec<Point3> = mesh.points().iter().map(|p| p + shift).collect();
            HexMesh::new(points, mesh.hexes().to_vec()).unwrap()
        };
        let shifted = boundary_report(&translate(&before), &translate(&after), &unlocked).unwrap();

        prop_assert!((base.avg_all - shifted.avg_all).abs() <= 1e-9 * base.avg_all.max(1.0));
        prop_assert!((base.max - shifted.max).abs() <= 1e-9 * base.max.max(1.0));
        prop_assert!(
            (base.avg_all_scaled - shifted.avg_all_scaled).abs()
                <= 1e-9 * base.avg_all_scaled.max(1.0)
        );
        prop_assert!((base.max_scaled - shifted.max_scaled).abs() <= 1e-9 * base.max_scaled.max(1.0));
    }
}
