//! Outer untangling driver.
//!
//! Repeats: classify the mesh, pick the hexes and vertices to work on,
//! refresh the regularization parameter ε, and run the inner minimizer.
//! The loop exits as soon as every hex classifies valid.
//!
//! Three scopes are available per iteration:
//! * **global** — every hex contributes energy, every interior vertex moves;
//! * **blob-whole** — only the invalid hexes plus `layers` rings of
//!   neighbors contribute, and only vertices inside the blobs move;
//! * **blob-individual** — one blob at a time, each with its own ε run
//!   starting back at 1.
//!
//! When progress stalls (determinant stagnation at tiny ε with a constant
//! invalid count), a ladder of recovery moves fires, one per stall event:
//! activate all 58 tetrahedra everywhere, grow the blob layer count, and
//! finally unlock the boundary vertices of invalid hexes so they can move
//! against a quadratic anchor penalty.

use std::collections::VecDeque;

use crate::energy::{
    self, ActiveTetSet, EnergyError, EnergyParams, TetSelection,
};
use crate::mesh::HexMesh;
use crate::metrics::{self, BoundaryMovementReport};
use crate::optimizer::{
    minimize, Objective, OptimizeBudget, OptimizeError, StopReason,
};
use crate::tets::TetTable;
use crate::validity::{classify_mesh, HexClass, ValidityMethod, ValidityReport};

/// Floor of the relative-progress factor used by the ε update.
pub const SIGMA_FLOOR: f64 = 0.1;
/// Minimum relative determinant improvement for the fast ε rule.
pub const FAST_IMPROVEMENT_THRESHOLD: f64 = 1e-4;
/// Relative determinant stagnation below which an iteration counts as stuck.
pub const STUCK_STAGNATION_THRESHOLD: f64 = 1e-12;
/// Upper bound on the blob layer count reachable through layer growth.
pub const MAX_BLOB_LAYERS: usize = 5;
/// Consecutive no-op stall events before the run is declared stalled.
///
/// Stalled iterations cost little (the inner solve exits almost at once when
/// nothing can improve), so the budget is generous; it matters when a heavy
/// boundary penalty forces the shrinking regularization to decay for many
/// iterations before the barrier term overtakes the penalty and a pinned
/// vertex finally moves.
const STALL_STREAK_LIMIT: usize = 250;

/// Which hexes contribute energy and which vertices move.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Strategy {
    /// Whole mesh active, all interior vertices free.
    Global,
    /// All blobs active at once, vertices restricted to the blobs.
    BlobWhole,
    /// One blob at a time, ε restarting at 1 per blob.
    BlobIndividual,
}

/// Boundary-vertex handling.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundaryMode {
    /// The boundary never moves.
    Locked,
    /// Boundary vertices of invalid hexes may be unlocked as a last
    /// resort; unlocked vertices are tied to their start position by the
    /// quadratic penalty.
    Auto,
}

/// Tuning knobs for [`untangle`].
#[derive(Debug, Clone)]
pub struct UntangleConfig {
    pub strategy: Strategy,
    pub validity: ValidityMethod,
    pub penalty_factor: f64,
    /// Weight of the volume-control energy term (0 disables it).
    pub lambda: f64,
    /// Descent-step budget of each inner minimization.
    pub inner_iterations: usize,
    /// Hard cap on outer iterations; exceeding it fails with the partial mesh.
    pub max_outer_iterations: usize,
    /// Enables the aggressive ε = −det_min/5 shortcut while dets improve.
    pub fast_epsilon_enabled: bool,
    pub boundary: BoundaryMode,
    /// Ring depth of blob supports (≥ 1).
    pub layers: usize,
    /// Whether stall events may grow `layers`; `None` enables it exactly
    /// for the blob-individual strategy.
    pub layer_growth: Option<bool>,
    pub gradient_tolerance: f64,
}

impl Default for UntangleConfig {
    fn default() -> Self {
        UntangleConfig {
            strategy: Strategy::BlobWhole,
            validity: ValidityMethod::Bezier,
            penalty_factor: 1e6,
            lambda: 0.0,
            inner_iterations: 100,
            max_outer_iterations: 10_000,
            fast_epsilon_enabled: true,
            boundary: BoundaryMode::Auto,
            layers: 1,
            layer_growth: None,
            gradient_tolerance: 1e-10,
        }
    }
}

impl UntangleConfig {
    fn layer_growth_enabled(&self) -> bool {
        self.layer_growth
            .unwrap_or(self.strategy == Strategy::BlobIndividual)
    }
}

/// One outer iteration, as logged to the CSV iteration log.
#[derive(Debug, Clone, Copy)]
pub struct IterationRecord {
    pub k: usize,
    /// ε used by this iteration's minimization.
    pub epsilon: f64,
    /// Scheduling determinant minimum seen before the step.
    pub det_min: f64,
    /// Invalid hexes at the start of the iteration.
    pub invalid_count: usize,
    pub f_before: f64,
    pub f_after: f64,
    /// Penalty part of the energy after the step.
    pub penalty_energy: f64,
    pub active_tet_count: usize,
    pub unlocked_boundary_count: usize,
}

impl IterationRecord {
    pub const CSV_HEADER: &'static str = "k,epsilon,det_min,invalid_count,\
F_before,F_after,penalty_energy,active_tet_count,unlocked_boundary_count";

    /// One CSV data row matching [`Self::CSV_HEADER`].
    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{}",
            self.k,
            self.epsilon,
            self.det_min,
            self.invalid_count,
            self.f_before,
            self.f_after,
            self.penalty_energy,
            self.active_tet_count,
            self.unlocked_boundary_count,
        )
    }
}

/// How an untangling run ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UntangleOutcome {
    /// Every hex classifies valid.
    Success,
    /// The outer-iteration cap was reached with invalid hexes left.
    IterationLimit,
    /// No recovery move was left and the iteration stopped making progress.
    Stalled,
}

/// Full result of an untangling run; the mesh itself is updated in place.
#[derive(Debug, Clone)]
pub struct UntangleReport {
    pub outcome: UntangleOutcome,
    /// Outer iterations executed (equals `records.len()`).
    pub outer_iterations: usize,
    pub records: Vec<IterationRecord>,
    /// Classification of the final mesh under the configured method.
    pub final_validity: ValidityReport,
    pub boundary: BoundaryMovementReport,
    /// Boundary vertices that were unlocked at any point (never relocked).
    pub ever_unlocked: Vec<bool>,
    /// Inner minimizations performed.
    pub optimizer_calls: usize,
    /// Energy evaluations rejected because χ ≤ 0. The schedule keeps
    /// ε > 0 whenever any active determinant is ≤ 0, so this stays 0.
    pub chi_failure_count: u64,
}

impl UntangleReport {
    pub fn success(&self) -> bool {
        self.outcome == UntangleOutcome::Success
    }
}

// ---------------------------------------------------------------------------
// ε schedule
// ---------------------------------------------------------------------------

/// Relative energy progress of the last step, floored at 0.1:
/// `max(0.1, 1 − f_next/f_prev)`.
pub fn progress_factor(f_prev: f64, f_next: f64) -> f64 {
    debug_assert!(f_prev > 0.0);
    (1.0 - f_next / f_prev).max(SIGMA_FLOOR)
}

/// Standard ε update.
///
/// With `σ = progress_factor(f_prev, f_next)` and `μ = (1−σ)·χ(d_min, eps)`,
/// the next ε is `2√(μ(μ − d_min))` while `d_min < μ`, and 0 once
/// `d_min ≥ μ`. The result is chosen so that χ(d_min, ε') ≈ μ: slow energy
/// progress keeps the regularization high, good progress lets it decay.
pub fn update_epsilon(f_prev: f64, f_next: f64, eps: f64, d_min: f64) -> f64 {
    let sigma = progress_factor(f_prev, f_next);
    let mu = (1.0 - sigma) * energy::chi(d_min, eps);
    if d_min < mu {
        2.0 * (mu * (mu - d_min)).sqrt()
    } else {
        0.0
    }
}

/// Aggressive ε choice `−d_min/5` for a strictly negative minimum.
pub fn fast_epsilon(d_min: f64) -> f64 {
    debug_assert!(d_min < 0.0);
    -0.2 * d_min
}

/// True when the fast ε rule may be used: the minimum determinant is
/// negative, smaller in magnitude than the current ε, and improved by more
/// than [`FAST_IMPROVEMENT_THRESHOLD`] relative to the previous iteration.
/// Without a usable previous value the rule is off.
pub fn fast_epsilon_applicable(d_min: f64, d_min_prev: Option<f64>, eps: f64) -> bool {
    let Some(prev) = d_min_prev else { return false };
    if prev == 0.0 {
        return false;
    }
    d_min < 0.0
        && eps > d_min.abs()
        && (d_min - prev) / prev.abs() > FAST_IMPROVEMENT_THRESHOLD
}

/// True when the iteration is stuck: ε already far below the determinant
/// magnitude (`100·ε < |d_min|`), the invalid count frozen, and the
/// determinant relative change below [`STUCK_STAGNATION_THRESHOLD`].
/// Without a usable previous value the check is off.
pub fn is_stuck(
    eps: f64,
    d_min: f64,
    d_min_prev: Option<f64>,
    invalid_count: usize,
    invalid_count_prev: usize,
) -> bool {
    let Some(prev) = d_min_prev else { return false };
    if prev == 0.0 {
        return false;
    }
    100.0 * eps < d_min.abs()
        && invalid_count == invalid_count_prev
        && ((d_min - prev) / prev).abs() < STUCK_STAGNATION_THRESHOLD
}

// ---------------------------------------------------------------------------
// Blobs
// ---------------------------------------------------------------------------

/// A connected group of invalid hexes plus the neighborhood that is
/// optimized around it.
#[derive(Debug, Clone)]
pub struct Blob {
    /// Invalid hexes, connected under vertex sharing (sorted).
    pub core: Vec<usize>,
    /// Hexes within `layers` vertex-adjacency hops of the core, core
    /// excluded (sorted).
    pub ring: Vec<usize>,
    /// Vertices free to move when this blob is optimized (sorted). These
    /// are the vertices of hexes strictly inside the outermost ring,
    /// minus locked boundary vertices.
    pub movable_vertices: Vec<usize>,
}

impl Blob {
    /// Marks core and ring hexes in a per-hex flag vector.
    pub fn mark_support(&self, flags: &mut [bool]) {
        for &h in self.core.iter().chain(&self.ring) {
            flags[h] = true;
        }
    }

    /// Marks the movable vertices in a per-vertex flag vector.
    pub fn mark_movable(&self, flags: &mut [bool]) {
        for &v in &self.movable_vertices {
            flags[v] = true;
        }
    }
}

/// Vertex-sharing connected component of `invalid` hexes containing `seed`.
fn invalid_component_of(mesh: &HexMesh, invalid: &[bool], seed: usize) -> Vec<usize> {
    debug_assert!(invalid[seed]);
    let mut seen = vec![false; mesh.hex_count()];
    let mut queue = VecDeque::from([seed]);
    seen[seed] = true;
    let mut component = Vec::new();
    while let Some(h) = queue.pop_front() {
        component.push(h);
        for n in mesh.hex_neighbors(h) {
            if invalid[n] && !seen[n] {
                seen[n] = true;
                queue.push_back(n);
            }
        }
    }
    component.sort_unstable();
    component
}

/// Grows a blob around a core: breadth-first over hex adjacency up to
/// `layers` hops for the ring, with movable vertices taken from hexes at
/// most `layers − 1` hops away and filtered to interior-or-unlocked.
fn grow_blob(mesh: &HexMesh, core: Vec<usize>, layers: usize, unlocked: &[bool]) -> Blob {
    debug_assert!(layers >= 1);
    let mut dist = vec![usize::MAX; mesh.hex_count()];
    let mut queue = VecDeque::new();
    for &h in &core {
        dist[h] = 0;
        queue.push_back(h);
    }
    while let Some(h) = queue.pop_front() {
        if dist[h] == layers {
            continue;
        }
        for n in mesh.hex_neighbors(h) {
            if dist[n] == usize::MAX {
                dist[n] = dist[h] + 1;
                queue.push_back(n);
            }
        }
    }

    let mut ring = Vec::new();
    let mut movable = vec![false; mesh.vertex_count()];
    for (h, &d) in dist.iter().enumerate() {
        if (1..=layers).contains(&d) {
            ring.push(h);
        }
        if d < layers {
            for &v in &mesh.hexes()[h] {
                if !mesh.is_boundary(v) || unlocked[v] {
                    movable[v] = true;
                }
            }
        }
    }
    let movable_vertices = movable
        .iter()
        .enumerate()
        .filter_map(|(v, &m)| m.then_some(v))
        .collect();
    Blob {
        core,
        ring,
        movable_vertices,
    }
}

/// Splits the invalid hexes into connected components and grows each into
/// a blob. Blobs come back ordered by their smallest core hex id.
pub fn build_blobs(
    mesh: &HexMesh,
    invalid: &[bool],
    layers: usize,
    unlocked: &[bool],
) -> Vec<Blob> {
    let mut assigned = vec![false; mesh.hex_count()];
    let mut blobs = Vec::new();
    for h in 0..mesh.hex_count() {
        if !invalid[h] || assigned[h] {
            continue;
        }
        let core = invalid_component_of(mesh, invalid, h);
        for &c in &core {
            assigned[c] = true;
        }
        blobs.push(grow_blob(mesh, core, layers, unlocked));
    }
    blobs
}

// ---------------------------------------------------------------------------
// Boundary unlocking
// ---------------------------------------------------------------------------

/// Unlocks every still-locked boundary vertex belonging to an invalid hex.
/// Returns how many vertices were newly unlocked. Vertices are never
/// relocked.
pub fn unlock_boundary(mesh: &HexMesh, classes: &[HexClass], unlocked: &mut [bool]) -> usize {
    let mut newly = 0;
    for (h, class) in classes.iter().enumerate() {
        if *class != HexClass::Invalid {
            continue;
        }
        for &v in &mesh.hexes()[h] {
            if mesh.is_boundary(v) && !unlocked[v] {
                unlocked[v] = true;
                newly += 1;
            }
        }
    }
    newly
}

/// True when some invalid hex still has a locked boundary vertex.
fn has_unlockable(mesh: &HexMesh, classes: &[HexClass], unlocked: &[bool]) -> bool {
    classes.iter().enumerate().any(|(h, class)| {
        *class == HexClass::Invalid
            && mesh.hexes()[h]
                .iter()
                .any(|&v| mesh.is_boundary(v) && !unlocked[v])
    })
}

// ---------------------------------------------------------------------------
// Driver internals
// ---------------------------------------------------------------------------

/// Energy/determinant figures of the previous iteration, feeding the ε
/// schedule of the next one.
#[derive(Debug, Clone, Copy)]
struct SchedulePoint {
    f_before: f64,
    f_after: f64,
    d_min: f64,
    invalid_count: usize,
}

/// Per-iteration scope: which vertices move and the scheduling minimum
/// determinant. The active-set support is updated as a side effect.
struct Scope {
    movable: Vec<bool>,
    d_min: f64,
}

fn assemble_scope(
    mesh: &HexMesh,
    table: &TetTable,
    active: &mut ActiveTetSet,
    config: &UntangleConfig,
    invalid: &[bool],
    layers: usize,
    unlocked: &[bool],
    current_core: Option<&[usize]>,
) -> Scope {
    let scope = match config.strategy {
        Strategy::Global => {
            active.support_all();
            let movable = (0..mesh.vertex_count())
                .map(|v| !mesh.is_boundary(v) || unlocked[v])
                .collect();
            Scope {
                movable,
                d_min: energy::min_selected_det(mesh, active, table),
            }
        }
        Strategy::BlobWhole => {
            let blobs = build_blobs(mesh, invalid, layers, unlocked);
            let mut support = vec![false; mesh.hex_count()];
            let mut movable = vec![false; mesh.vertex_count()];
            for blob in &blobs {
                blob.mark_support(&mut support);
                blob.mark_movable(&mut movable);
            }
            active.set_support(support);
            Scope {
                movable,
                // The schedule watches the whole mesh, not just the blobs.
                d_min: energy::min_selected_det(mesh, active, table),
            }
        }
        Strategy::BlobIndividual => {
            let core = current_core.expect("a current blob must be selected");
            let blob = grow_blob(mesh, core.to_vec(), layers, unlocked);
            let mut support = vec![false; mesh.hex_count()];
            let mut movable = vec![false; mesh.vertex_count()];
            blob.mark_support(&mut support);
            blob.mark_movable(&mut movable);
            active.set_support(support);
            Scope {
                movable,
                // Per-blob ε runs follow the blob's own determinants.
                d_min: energy::min_supported_det(mesh, active, table),
            }
        }
    };

    // Every hex a movable vertex touches must contribute energy; otherwise
    // the minimizer could invert it without noticing.
    #[cfg(debug_assertions)]
    for (v, &m) in scope.movable.iter().enumerate() {
        if m {
            for &h in mesh.hexes_of_vertex(v) {
                debug_assert!(active.is_supported(h));
            }
        }
    }

    scope
}

/// One recovery move per stall event, in order: activate all tetrahedra,
/// grow the blob layers, unlock boundary vertices of invalid hexes.
/// Returns whether anything changed.
fn ladder_step(
    mesh: &HexMesh,
    classes: &[HexClass],
    config: &UntangleConfig,
    active: &mut ActiveTetSet,
    layers: &mut usize,
    unlocked: &mut [bool],
) -> bool {
    if !active.all_escalated() {
        active.escalate_all();
        return true;
    }
    if config.layer_growth_enabled()
        && config.strategy != Strategy::Global
        && *layers < MAX_BLOB_LAYERS
    {
        *layers += 1;
        return true;
    }
    config.boundary == BoundaryMode::Auto && unlock_boundary(mesh, classes, unlocked) > 0
}

/// True when [`ladder_step`] would be a no-op.
fn ladder_exhausted(
    mesh: &HexMesh,
    classes: &[HexClass],
    config: &UntangleConfig,
    active: &ActiveTetSet,
    layers: usize,
    unlocked: &[bool],
) -> bool {
    if !active.all_escalated() {
        return false;
    }
    if config.layer_growth_enabled()
        && config.strategy != Strategy::Global
        && layers < MAX_BLOB_LAYERS
    {
        return false;
    }
    match config.boundary {
        BoundaryMode::Locked => true,
        BoundaryMode::Auto => !has_unlockable(mesh, classes, unlocked),
    }
}

/// Adapter exposing the mesh energy as a minimizer objective over the flat
/// coordinate vector. Evaluations with χ ≤ 0 are counted and reported as
/// non-finite so the line search backs off.
struct EnergyObjective<'a> {
    scratch: HexMesh,
    active: &'a ActiveTetSet,
    params: &'a EnergyParams,
    table: &'a TetTable,
    movable: &'a [bool],
    chi_failures: u64,
}

impl Objective for EnergyObjective<'_> {
    fn value(&mut self, x: &[f64]) -> Option<f64> {
        self.scratch.set_coords(x);
        match energy::mesh_energy(&self.scratch, self.active, self.params, self.table) {
            Ok(breakdown) if breakdown.total.is_finite() => Some(breakdown.total),
            Ok(_) => None,
            Err(EnergyError::NonPositiveChi) => {
                self.chi_failures += 1;
                None
            }
        }
    }

    fn value_and_gradient(&mut self, x: &[f64]) -> Option<(f64, Vec<f64>)> {
        self.scratch.set_coords(x);
        match energy::mesh_energy_gradient(
            &self.scratch,
            self.active,
            self.params,
            self.table,
            self.movable,
        ) {
            Ok((breakdown, grad))
                if breakdown.total.is_finite() && grad.iter().all(|g| g.is_finite()) =>
            {
                Some((breakdown.total, grad))
            }
            Ok(_) => None,
            Err(EnergyError::NonPositiveChi) => {
                self.chi_failures += 1;
                None
            }
        }
    }
}

fn coordinate_mask(vertex_mask: &[bool]) -> Vec<bool> {
    vertex_mask.iter().flat_map(|&m| [m, m, m]).collect()
}

// ---------------------------------------------------------------------------
// Driver
// ---------------------------------------------------------------------------

/// Untangles the mesh in place and reports what happened.
///
/// Running it on an already-valid mesh returns immediately without moving
/// anything or calling the minimizer, so a second run is a no-op.
pub fn untangle(mesh: &mut HexMesh, config: &UntangleConfig, table: &TetTable) -> UntangleReport {
    let before = HexMesh::new(mesh.original_positions().to_vec(), mesh.hexes().to_vec())
        .expect("starting positions come from a validated mesh");

    let mut active = ActiveTetSet::corners(mesh.hex_count());
    let mut params = EnergyParams::new(1.0, mesh.vertex_count());
    params.lambda = config.lambda;
    params.penalty_factor = config.penalty_factor;

    let mut layers = config.layers.max(1);
    let mut eps = 1.0_f64;
    let mut sched_prev: Option<SchedulePoint> = None;
    let mut prev_eps_used: Option<f64> = None;
    let mut current_core: Option<Vec<usize>> = None;
    let mut records: Vec<IterationRecord> = Vec::new();
    let mut optimizer_calls = 0usize;
    let mut chi_failures = 0u64;
    let mut stall_streak = 0usize;
    let mut ls_failure_streak = 0usize;
    let mut k = 0usize;

    let (outcome, final_validity) = loop {
        let report = classify_mesh(mesh, table, config.validity);
        if report.is_valid() {
            break (UntangleOutcome::Success, report);
        }
        if k >= config.max_outer_iterations {
            break (UntangleOutcome::IterationLimit, report);
        }

        // A hex whose corner determinants are all positive can still be
        // folded in its interior; the corner subset cannot express that,
        // so such hexes get the full tetrahedron set. This runs before
        // the ε refresh so the new determinants feed into it.
        for h in 0..mesh.hex_count() {
            if report.classes[h] == HexClass::Invalid
                && active.selection(h) == TetSelection::Corners
                && report.min_corner_dets[h] > 0.0
            {
                active.escalate_hex(h);
            }
        }

        let invalid: Vec<bool> = report
            .classes
            .iter()
            .map(|c| *c == HexClass::Invalid)
            .collect();

        if config.strategy == Strategy::BlobIndividual {
            let carried = current_core
                .as_ref()
                .and_then(|core| core.iter().copied().find(|&h| invalid[h]));
            let seed = match carried {
                Some(h) => h,
                None => {
                    // Fresh blob: its ε run starts over.
                    eps = 1.0;
                    sched_prev = None;
                    prev_eps_used = None;
                    stall_streak = 0;
                    ls_failure_streak = 0;
                    invalid.iter().position(|&b| b).expect("mesh has invalid hexes")
                }
            };
            current_core = Some(invalid_component_of(mesh, &invalid, seed));
        }

        let mut scope = assemble_scope(
            mesh,
            table,
            &mut active,
            config,
            &invalid,
            layers,
            &params.unlocked,
            current_core.as_deref(),
        );

        // Refresh ε. The first iteration (and the first of each blob) runs
        // at the initial ε = 1. A stuck iteration consults the recovery
        // ladder and recomputes ε from the post-recovery determinants.
        let eps_in = eps;
        let mut stalled = false;
        if let Some(prev) = sched_prev {
            let stuck = is_stuck(
                eps_in,
                scope.d_min,
                Some(prev.d_min),
                report.invalid_count,
                prev.invalid_count,
            );
            if stuck {
                let acted = ladder_step(
                    mesh,
                    &report.classes,
                    config,
                    &mut active,
                    &mut layers,
                    &mut params.unlocked,
                );
                if acted {
                    stall_streak = 0;
                    scope = assemble_scope(
                        mesh,
                        table,
                        &mut active,
                        config,
                        &invalid,
                        layers,
                        &params.unlocked,
                        current_core.as_deref(),
                    );
                } else {
                    stall_streak += 1;
                    if stall_streak >= STALL_STREAK_LIMIT {
                        stalled = true;
                    }
                }
                eps = update_epsilon(prev.f_before, prev.f_after, eps_in, scope.d_min);
            } else {
                stall_streak = 0;
                eps = if config.fast_epsilon_enabled
                    && fast_epsilon_applicable(scope.d_min, Some(prev.d_min), eps_in)
                {
                    fast_epsilon(scope.d_min)
                } else {
                    update_epsilon(prev.f_before, prev.f_after, eps_in, scope.d_min)
                };
            }
        }
        if stalled {
            break (UntangleOutcome::Stalled, report);
        }

        params.epsilon = eps;
        let x0 = mesh.coords();
        let coord_mask = coordinate_mask(&scope.movable);
        let budget = OptimizeBudget {
            inner_iterations: config.inner_iterations,
            gradient_tolerance: config.gradient_tolerance,
            ..OptimizeBudget::default()
        };
        let mut objective = EnergyObjective {
            scratch: mesh.clone(),
            active: &active,
            params: &params,
            table,
            movable: &scope.movable,
            chi_failures: 0,
        };
        let result = minimize(&mut objective, &x0, &coord_mask, &budget);
        optimizer_calls += 1;
        chi_failures += objective.chi_failures;
        let step = match result {
            Ok(step) => step,
            Err(OptimizeError::NonFiniteStart) => {
                // The schedule keeps ε > 0 whenever a supported determinant
                // is ≤ 0, so this is not reachable; fail soft if it ever is.
                break (UntangleOutcome::Stalled, report);
            }
        };
        mesh.set_coords(&step.x);

        records.push(IterationRecord {
            k,
            epsilon: eps,
            det_min: scope.d_min,
            invalid_count: report.invalid_count,
            f_before: step.f_before,
            f_after: step.f_after,
            penalty_energy: energy::penalty_energy(mesh, &params),
            active_tet_count: active.active_tet_count(),
            unlocked_boundary_count: params.unlocked.iter().filter(|&&u| u).count(),
        });

        // A failed line search at an ε that no longer changes, with no
        // recovery move left, repeats forever: two in a row end the run.
        // (A failed search leaves the coordinates untouched, so the scan
        // from the top of this iteration still describes the mesh.)
        let wedged = step.reason == StopReason::LineSearchFailure
            && prev_eps_used == Some(eps)
            && ladder_exhausted(mesh, &report.classes, config, &active, layers, &params.unlocked);
        ls_failure_streak = if wedged { ls_failure_streak + 1 } else { 0 };

        sched_prev = Some(SchedulePoint {
            f_before: step.f_before,
            f_after: step.f_after,
            d_min: scope.d_min,
            invalid_count: report.invalid_count,
        });
        prev_eps_used = Some(eps);
        k += 1;

        if ls_failure_streak >= 2 {
            break (UntangleOutcome::Stalled, report);
        }
    };

    let boundary = metrics::boundary_report(&before, mesh, &params.unlocked)
        .expect("input and output share connectivity");
    UntangleReport {
        outcome,
        outer_iterations: k,
        records,
        final_validity,
        boundary,
        ever_unlocked: params.unlocked,
        optimizer_calls,
        chi_failure_count: chi_failures,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use approx::assert_relative_eq;

    #[test]
    fn progress_factor_examples() {
        assert_eq!(progress_factor(100.0, 95.0), 0.1);
        assert_eq!(progress_factor(100.0, 50.0), 0.5);
        assert_eq!(progress_factor(7.5, 7.5), 0.1);
    }

    #[test]
    fn update_epsilon_reference_value() {
        // σ = 0.1, μ = 0.9·χ(−0.5, 1) = 0.27811529493745267,
        // ε' = 2·√(μ·(μ + 0.5)).
        let eps = update_epsilon(100.0, 95.0, 1.0, -0.5);
        assert_relative_eq!(eps, 0.9303886601778262, max_relative = 1e-12);
    }

    #[test]
    fn update_epsilon_zero_once_determinant_clears_mu() {
        // χ(1, 0.1) ≈ 1.0025 gives μ ≈ 0.902 < d_min = 1.
        assert_eq!(update_epsilon(100.0, 95.0, 0.1, 1.0), 0.0);
    }

    #[test]
    fn update_epsilon_at_zero_determinant_contracts_by_progress() {
        // χ(0, ε) = ε/2, so μ = (1−σ)·ε/2 and ε' = 2μ = (1−σ)·ε.
        assert_relative_eq!(
            update_epsilon(100.0, 50.0, 1.0, 0.0),
            0.5,
            max_relative = 1e-15
        );
        assert_relative_eq!(
            update_epsilon(100.0, 95.0, 0.25, 0.0),
            0.9 * 0.25,
            max_relative = 1e-15
        );
    }

    #[test]
    fn update_epsilon_shrinks_under_stagnation() {
        // Flat energy, non-positive determinants: ε must strictly decrease.
        for &eps in &[1e-6, 1e-3, 0.1, 0.5, 1.0] {
            for &d in &[-10.0, -1.0, -1e-3, -1e-9, 0.0] {
                let next = update_epsilon(42.0, 42.0, eps, d);
                assert!(
                    next < eps,
                    "eps {eps} d {d} gave non-decreasing update {next}"
                );
                assert!(next >= 0.0);
            }
        }
    }

    #[test]
    fn fast_epsilon_values() {
        assert_eq!(fast_epsilon(-0.5), 0.1);
        assert_relative_eq!(fast_epsilon(-1.0), 0.2, max_relative = 1e-15);
        assert_relative_eq!(fast_epsilon(-1e-6), 2e-7, max_relative = 1e-15);
    }

    #[test]
    fn fast_epsilon_applicability_conditions() {
        // Improving negative determinant under a larger ε: applicable.
        assert!(fast_epsilon_applicable(-0.5, Some(-0.6), 1.0));
        // Positive determinant: not applicable.
        assert!(!fast_epsilon_applicable(0.1, Some(-0.6), 1.0));
        // ε already below |d_min|: not applicable.
        assert!(!fast_epsilon_applicable(-0.5, Some(-0.6), 0.3));
        // Improvement below the threshold: not applicable.
        assert!(!fast_epsilon_applicable(-0.5, Some(-0.500000001), 1.0));
        // Worsening determinant: not applicable.
        assert!(!fast_epsilon_applicable(-0.7, Some(-0.6), 1.0));
        // No or zero previous value: not applicable.
        assert!(!fast_epsilon_applicable(-0.5, None, 1.0));
        assert!(!fast_epsilon_applicable(-0.5, Some(0.0), 1.0));
    }

    #[test]
    fn stuck_detection_conditions() {
        // Tiny ε, frozen determinant, frozen invalid count: stuck.
        assert!(is_stuck(1e-9, -1e-3, Some(-1e-3), 5, 5));
        // Invalid count changed: not stuck.
        assert!(!is_stuck(1e-9, -1e-3, Some(-1e-3), 4, 5));
        // ε still significant relative to the determinant: not stuck.
        assert!(!is_stuck(1.0, -0.5, Some(-0.5), 5, 5));
        // Determinant still moving: not stuck.
        assert!(!is_stuck(1e-9, -1.0000001e-3, Some(-1e-3), 5, 5));
        // No or zero previous value: not stuck.
        assert!(!is_stuck(1e-9, -1e-3, None, 5, 5));
        assert!(!is_stuck(1e-9, -1e-3, Some(0.0), 5, 5));
    }

    #[test]
    fn stuck_and_fast_conditions_are_mutually_exclusive() {
        // ε > |d| (fast) contradicts 100ε < |d| (stuck), and the stagnation
        // bound contradicts the improvement bound.
        let grid = [-2.0, -1.0, -0.1, -1e-3, -1e-9, 0.0, 0.5];
        let epsilons = [1e-12, 1e-6, 1e-3, 0.1, 1.0];
        for &d in &grid {
            for &prev in &grid {
                for &eps in &epsilons {
                    let fast = fast_epsilon_applicable(d, Some(prev), eps);
                    let stuck = is_stuck(eps, d, Some(prev), 3, 3);
                    assert!(!(fast && stuck), "d {d} prev {prev} eps {eps}");
                }
            }
        }
    }

    fn center_hex_id() -> usize {
        // block_mesh(5,5,5): hex (i,j,k) → (i·5 + j)·5 + k.
        (2 * 5 + 2) * 5 + 2
    }

    #[test]
    fn single_interior_blob_has_expected_shape() {
        let mesh = fixtures::block_mesh(5, 5, 5);
        let mut invalid = vec![false; mesh.hex_count()];
        invalid[center_hex_id()] = true;
        let unlocked = vec![false; mesh.vertex_count()];

        let blobs = build_blobs(&mesh, &invalid, 1, &unlocked);
        assert_eq!(blobs.len(), 1);
        let blob = &blobs[0];
        assert_eq!(blob.core, vec![center_hex_id()]);
        // All 26 face/edge/corner neighbors of the center hex.
        assert_eq!(blob.ring.len(), 26);
        // The hex's own 8 corners, all interior in a 5×5×5 block.
        assert_eq!(blob.movable_vertices.len(), 8);

        let blobs = build_blobs(&mesh, &invalid, 2, &unlocked);
        let blob = &blobs[0];
        // Every other hex is within two hops of the center one.
        assert_eq!(blob.ring.len(), mesh.hex_count() - 1);
        // Vertices of the 3×3×3 hex neighborhood: a 4×4×4 vertex grid.
        assert_eq!(blob.movable_vertices.len(), 64);
    }

    #[test]
    fn separated_invalid_hexes_make_separate_blobs() {
        let mesh = fixtures::block_mesh(3, 1, 1);
        let unlocked = vec![false; mesh.vertex_count()];

        let mut invalid = vec![false; 3];
        invalid[0] = true;
        invalid[2] = true;
        let blobs = build_blobs(&mesh, &invalid, 1, &unlocked);
        assert_eq!(blobs.len(), 2);
        assert_eq!(blobs[0].core, vec![0]);
        assert_eq!(blobs[1].core, vec![2]);

        let mut invalid = vec![false; 3];
        invalid[0] = true;
        invalid[1] = true;
        let blobs = build_blobs(&mesh, &invalid, 1, &unlocked);
        assert_eq!(blobs.len(), 1);
        assert_eq!(blobs[0].core, vec![0, 1]);
    }

    #[test]
    fn blob_movable_vertices_respect_the_locked_boundary() {
        let mesh = fixtures::block_mesh(2, 2, 2);
        let mut invalid = vec![false; mesh.hex_count()];
        invalid[0] = true;
        let mut unlocked = vec![false; mesh.vertex_count()];

        // Hex 0 touches the block corner; its only interior vertex is the
        // block center.
        let blobs = build_blobs(&mesh, &invalid, 1, &unlocked);
        let center: Vec<usize> = (0..mesh.vertex_count())
            .filter(|&v| !mesh.is_boundary(v))
            .collect();
        assert_eq!(blobs[0].movable_vertices, center);

        // Unlocking one of its boundary vertices adds exactly that vertex.
        let some_boundary = mesh.hexes()[0][0];
        unlocked[some_boundary] = true;
        let blobs = build_blobs(&mesh, &invalid, 1, &unlocked);
        let mut expected = center;
        expected.push(some_boundary);
        expected.sort_unstable();
        assert_eq!(blobs[0].movable_vertices, expected);
    }

    #[test]
    fn movable_vertices_only_touch_supported_hexes() {
        let mesh = fixtures::displaced_center_block();
        let table = TetTable::new();
        let report = classify_mesh(&mesh, &table, ValidityMethod::Bezier);
        let invalid: Vec<bool> = report
            .classes
            .iter()
            .map(|c| *c == HexClass::Invalid)
            .collect();
        let unlocked = vec![false; mesh.vertex_count()];
        for layers in 1..=3 {
            for blob in build_blobs(&mesh, &invalid, layers, &unlocked) {
                let mut support = vec![false; mesh.hex_count()];
                blob.mark_support(&mut support);
                for &v in &blob.movable_vertices {
                    for &h in mesh.hexes_of_vertex(v) {
                        assert!(support[h], "vertex {v} touches unsupported hex {h}");
                    }
                }
            }
        }
    }

    #[test]
    fn unlock_boundary_targets_invalid_hex_vertices_once() {
        let mesh = fixtures::block_mesh(2, 2, 2);
        let mut classes = vec![HexClass::Valid; mesh.hex_count()];
        classes[0] = HexClass::Invalid;
        let mut unlocked = vec![false; mesh.vertex_count()];

        // Hex 0 has 8 corners, one of which (the block center) is interior.
        assert_eq!(unlock_boundary(&mesh, &classes, &mut unlocked), 7);
        assert_eq!(unlocked.iter().filter(|&&u| u).count(), 7);
        for &v in &mesh.hexes()[0] {
            assert_eq!(unlocked[v], mesh.is_boundary(v));
        }
        // Repeating unlocks nothing new.
        assert_eq!(unlock_boundary(&mesh, &classes, &mut unlocked), 0);
    }

    #[test]
    fn ladder_escalates_then_unlocks_for_whole_mesh_blobs() {
        let mesh = fixtures::block_mesh(2, 2, 2);
        let config = UntangleConfig::default();
        let mut classes = vec![HexClass::Valid; mesh.hex_count()];
        classes[0] = HexClass::Invalid;
        let mut active = ActiveTetSet::corners(mesh.hex_count());
        let mut layers = 1;
        let mut unlocked = vec![false; mesh.vertex_count()];

        assert!(!ladder_exhausted(&mesh, &classes, &config, &active, layers, &unlocked));
        assert!(ladder_step(&mesh, &classes, &config, &mut active, &mut layers, &mut unlocked));
        assert!(active.all_escalated());
        assert_eq!(layers, 1);

        // Whole-mesh blobs skip layer growth and go straight to unlocking.
        assert!(ladder_step(&mesh, &classes, &config, &mut active, &mut layers, &mut unlocked));
        assert_eq!(layers, 1);
        assert_eq!(unlocked.iter().filter(|&&u| u).count(), 7);

        // Nothing is left after that.
        assert!(ladder_exhausted(&mesh, &classes, &config, &active, layers, &unlocked));
        assert!(!ladder_step(&mesh, &classes, &config, &mut active, &mut layers, &mut unlocked));
    }

    #[test]
    fn ladder_grows_layers_for_individual_blobs() {
        let mesh = fixtures::block_mesh(2, 2, 2);
        let config = UntangleConfig {
            strategy: Strategy::BlobIndividual,
            boundary: BoundaryMode::Locked,
            ..UntangleConfig::default()
        };
        let mut classes = vec![HexClass::Valid; mesh.hex_count()];
        classes[0] = HexClass::Invalid;
        let mut active = ActiveTetSet::corners(mesh.hex_count());
        let mut layers = 1;
        let mut unlocked = vec![false; mesh.vertex_count()];

        assert!(ladder_step(&mesh, &classes, &config, &mut active, &mut layers, &mut unlocked));
        for expected in 2..=MAX_BLOB_LAYERS {
            assert!(ladder_step(&mesh, &classes, &config, &mut active, &mut layers, &mut unlocked));
            assert_eq!(layers, expected);
        }
        // Layers capped and the boundary locked: the ladder is exhausted.
        assert!(!ladder_step(&mesh, &classes, &config, &mut active, &mut layers, &mut unlocked));
        assert!(ladder_exhausted(&mesh, &classes, &config, &active, layers, &unlocked));
        assert!(unlocked.iter().all(|&u| !u));
    }

    #[test]
    fn valid_mesh_returns_untouched_without_optimizing() {
        let mut mesh = fixtures::block_mesh(2, 2, 2);
        let coords_before = mesh.coords();
        let table = TetTable::new();
        let report = untangle(&mut mesh, &UntangleConfig::default(), &table);

        assert!(report.success());
        assert_eq!(report.outer_iterations, 0);
        assert!(report.records.is_empty());
        assert_eq!(report.optimizer_calls, 0);
        assert_eq!(report.chi_failure_count, 0);
        assert_eq!(mesh.coords(), coords_before);
        assert_eq!(report.boundary.max, 0.0);
    }

    #[test]
    fn displaced_center_block_untangles_without_boundary_motion() {
        let mut mesh = fixtures::displaced_center_block();
        let table = TetTable::new();
        let report = untangle(&mut mesh, &UntangleConfig::default(), &table);

        assert!(report.success(), "outcome: {:?}", report.outcome);
        assert!(report.outer_iterations <= 200);
        assert_eq!(report.chi_failure_count, 0);
        assert_eq!(report.boundary.max, 0.0);
        assert!(report.final_validity.is_valid());
        for record in &report.records {
            assert!(record.f_after <= record.f_before);
        }
    }
}
