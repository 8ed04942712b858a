//! Deterministic test meshes and single-hex corner configurations.
//!
//! These are used across the unit and integration tests and by the
//! property sweeps; everything is seeded, nothing depends on global
//! state. The hand-picked hexes encode the interesting classification
//! cases: a cell the tetrahedron certificate rejects even though it is
//! genuinely valid, and a cell whose corners all look fine while its
//! interior folds.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::mesh::{HexMesh, CORNER_COORDS};
use crate::Point3;

/// A reproducible RNG for tests and generators.
pub fn seeded_rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Corners of the unit cube in canonical order.
pub fn unit_cube_corners() -> [Point3; 8] {
    CORNER_COORDS.map(|[x, y, z]| Point3::new(x, y, z))
}

/// A mesh consisting of a single hex with the given corners.
pub fn single_hex_mesh(corners: [Point3; 8]) -> HexMesh {
    HexMesh::new(corners.to_vec(), vec![[0, 1, 2, 3, 4, 5, 6, 7]]).unwrap()
}

/// Axis-aligned block of `nx × ny × nz` unit hexes on the integer lattice.
///
/// Vertex `(x, y, z)` has index `(x·(ny+1) + y)·(nz+1) + z`; hex
/// `(i, j, k)` has index `(i·ny + j)·nz + k`.
pub fn block_mesh(nx: usize, ny: usize, nz: usize) -> HexMesh {
    let (points, hexes) = block_lattice(nx, ny, nz);
    HexMesh::new(points, hexes).unwrap()
}

fn block_lattice(nx: usize, ny: usize, nz: usize) -> (Vec<Point3>, Vec<[usize; 8]>) {
    let vid = move |x: usize, y: usize, z: usize| (x * (ny + 1) + y) * (nz + 1) + z;
    let mut points = Vec::with_capacity((nx + 1) * (ny + 1) * (nz + 1));
    for x in 0..=nx {
        for y in 0..=ny {
            for z in 0..=nz {
                points.push(Point3::new(x as f64, y as f64, z as f64));
            }
        }
    }
    let mut hexes = Vec::with_capacity(nx * ny * nz);
    for i in 0..nx {
        for j in 0..ny {
            for k in 0..nz {
                hexes.push([
                    vid(i, j, k),
                    vid(i + 1, j, k),
                    vid(i + 1, j + 1, k),
                    vid(i, j + 1, k),
                    vid(i, j, k + 1),
                    vid(i + 1, j, k + 1),
                    vid(i + 1, j + 1, k + 1),
                    vid(i, j + 1, k + 1),
                ]);
            }
        }
    }
    (points, hexes)
}

/// 2×2×2 block whose single interior vertex (the center) is displaced to
/// `(2.5, 1, 1)`, inverting the four hexes on the `x ∈ [1, 2]` side.
///
/// The displacement is baked into the construction, so the snapshot of
/// original positions — and with it the boundary penalty and movement
/// report — treats the tangled state as the input.
pub fn displaced_center_block() -> HexMesh {
    let (mut points, hexes) = block_lattice(2, 2, 2);
    points[13] = Point3::new(2.5, 1.0, 1.0); // lattice node (1,1,1)
    HexMesh::new(points, hexes).unwrap()
}

/// [`displaced_center_block`] with one bottom-face boundary vertex pulled
/// across the `x = 0` plane, folding that boundary quad onto itself.
///
/// No interior motion can fix the folded quad — its four vertices are all
/// on the boundary — so untangling this mesh requires boundary movement.
pub fn bowtie_block() -> HexMesh {
    let (mut points, hexes) = block_lattice(2, 2, 2);
    points[13] = Point3::new(2.5, 1.0, 1.0); // lattice node (1,1,1)
    points[9] = Point3::new(-0.25, 0.05, 0.0); // lattice node (1,0,0)
    HexMesh::new(points, hexes).unwrap()
}

/// A genuinely valid hex (positive determinant everywhere, margin ≈ 0.06)
/// on which the all-tets certificate nevertheless fails (its worst
/// tetrahedron determinant is ≈ −0.27). Distilled from a seeded random
/// search and cross-checked against dense sampling.
pub fn gap_hex_corners() -> [Point3; 8] {
    [
        Point3::new(0.0016, 0.0251, -0.0896),
        Point3::new(0.8882, 0.4283, 0.0059),
        Point3::new(1.2790, 0.7263, -0.0281),
        Point3::new(0.0704, 0.7709, -0.1604),
        Point3::new(0.2054, 0.0190, 1.1690),
        Point3::new(1.0063, -0.3723, 1.1418),
        Point3::new(1.0170, 1.2510, 1.0672),
        Point3::new(-0.0700, 0.7248, 0.6883),
    ]
}

/// A hex whose 8 corner determinants are all positive (worst ≈ +0.088)
/// while the interior folds (determinant ≈ −0.053 at a midface sample
/// point). The corner screen passes it; subdivision rejects it. Distilled
/// from a seeded random search and cross-checked against dense sampling.
pub fn folded_interior_hex_corners() -> [Point3; 8] {
    [
        Point3::new(0.2363, -0.2385, -0.0568),
        Point3::new(1.1126, 0.0301, 0.5001),
        Point3::new(0.6235, 1.0213, -0.3108),
        Point3::new(0.2145, 0.7924, -0.2869),
        Point3::new(-0.4842, 0.0057, 1.2004),
        Point3::new(0.8825, -0.1940, 0.5090),
        Point3::new(1.1546, 0.4897, 0.9338),
        Point3::new(-0.0770, 1.4421, 1.2554),
    ]
}

/// A valid hex (dense-sampled determinant minimum ≈ +0.0425) whose
/// undivided Bernstein coefficient bound is inconclusive (smallest
/// coefficient ≈ −0.064): certifying it requires at least one subdivision
/// step, so a depth-0 certificate conservatively rejects it. Distilled
/// from a seeded random search and cross-checked against dense sampling.
pub fn subdivision_needed_hex_corners() -> [Point3; 8] {
    [
        Point3::new(0.2312, 0.1493, -0.1883),
        Point3::new(1.3267, -0.0156, -0.3987),
        Point3::new(0.6112, 0.7555, 0.0988),
        Point3::new(0.2837, 0.6391, -0.4299),
        Point3::new(0.1103, -0.0815, 0.9475),
        Point3::new(1.2886, 0.3771, 1.4205),
        Point3::new(1.2512, 0.5529, 0.6855),
        Point3::new(0.0785, 1.4098, 0.6233),
    ]
}

/// Unit cube with corner 6 collapsed onto the cube center; three corner
/// determinants drop to ½ and corner 6's own determinant to −½.
pub fn collapsed_corner_hex_corners() -> [Point3; 8] {
    let mut corners = unit_cube_corners();
    corners[6] = Point3::new(0.5, 0.5, 0.5);
    corners
}

/// Unit-cube corners each displaced by an independent uniform offset from
/// the ball of the given radius.
pub fn random_hex<R: Rng>(rng: &mut R, radius: f64) -> [Point3; 8] {
    unit_cube_corners().map(|p| {
        loop {
            let dx = rng.gen_range(-radius..=radius);
            let dy = rng.gen_range(-radius..=radius);
            let dz = rng.gen_range(-radius..=radius);
            if dx * dx + dy * dy + dz * dz <= radius * radius {
                return Point3::new(p.x + dx, p.y + dy, p.z + dz);
            }
        }
    })
}

/// `n × n × n` block whose interior vertices are redrawn uniformly inside
/// the block's bounding box, leaving the boundary intact. The scrambled
/// state is the construction-time snapshot.
pub fn scrambled_block(n: usize, seed: u64) -> HexMesh {
    let (mut points, hexes) = block_lattice(n, n, n);
    let probe = HexMesh::new(points.clone(), hexes.clone()).unwrap();
    let mut rng = seeded_rng(seed);
    for v in 0..points.len() {
        if !probe.is_boundary(v) {
            points[v] = Point3::new(
                rng.gen_range(0.0..n as f64),
                rng.gen_range(0.0..n as f64),
                rng.gen_range(0.0..n as f64),
            );
        }
    }
    HexMesh::new(points, hexes).unwrap()
}
