//! Inner minimization engine: truncated-Newton descent with a masked
//! coordinate space.
//!
//! Each iteration solves the Newton system approximately with conjugate
//! gradients (Hessian-vector products by forward differencing of the
//! gradient), falls back to steepest descent when that fails to produce
//! a descent direction, and enforces monotone progress with an Armijo
//! backtracking line search. Objectives may return `None` for states
//! where they are not finite — such trial points are treated as failed
//! line-search steps, so barrier-like energies are never left in an
//! infinite state.

/// A minimizable function. `None` signals a non-finite value.
pub trait Objective {
    fn value(&mut self, x: &[f64]) -> Option<f64>;
    fn value_and_gradient(&mut self, x: &[f64]) -> Option<(f64, Vec<f64>)>;
}

/// Iteration and tolerance limits for one [`minimize`] call.
#[derive(Debug, Clone)]
pub struct OptimizeBudget {
    /// Maximum descent steps.
    pub inner_iterations: usize,
    /// Stop when the masked gradient max-norm falls below this.
    pub gradient_tolerance: f64,
    /// Stop when the accepted step is this small relative to `‖x‖∞ + 1`.
    pub step_tolerance: f64,
}

impl Default for OptimizeBudget {
    fn default() -> Self {
        OptimizeBudget {
            inner_iterations: 100,
            gradient_tolerance: 1e-10,
            step_tolerance: 1e-14,
        }
    }
}

/// Why [`minimize`] stopped.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopReason {
    /// Iteration budget exhausted.
    Budget,
    /// Gradient tolerance reached.
    Gradient,
    /// Step shorter than the step tolerance.
    Step,
    /// Backtracking could not find a decreasing step.
    LineSearchFailure,
}

/// Result of one [`minimize`] call. The monotone contract
/// `f_after ≤ f_before` always holds.
#[derive(Debug, Clone)]
pub struct OptimizeOutcome {
    pub x: Vec<f64>,
    pub f_before: f64,
    pub f_after: f64,
    pub iterations_used: usize,
    pub reason: StopReason,
}

/// Errors from [`minimize`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
pub enum OptimizeError {
    #[error("objective is not finite at the starting point")]
    NonFiniteStart,
}

const ARMIJO_C1: f64 = 1e-4;
const MAX_HALVINGS: usize = 48;
const MAX_CG_ITERATIONS: usize = 12;

/// Minimizes `objective` over the coordinates where `free` is true,
/// starting from `x0`. Frozen coordinates are bit-identical on return.
pub fn minimize(
    objective: &mut dyn Objective,
    x0: &[f64],
    free: &[bool],
    budget: &OptimizeBudget,
) -> Result<OptimizeOutcome, OptimizeError> {
    assert_eq!(x0.len(), free.len());
    let mut x = x0.to_vec();
    let (mut f, mut g) = objective
        .value_and_gradient(&x)
        .filter(|(f, _)| f.is_finite())
        .ok_or(OptimizeError::NonFiniteStart)?;
    mask(&mut g, free);
    let f_before = f;

    let mut iterations_used = 0;
    let mut reason = StopReason::Budget;
    for _ in 0..budget.inner_iterations {
        if max_norm(&g) <= budget.gradient_tolerance {
            reason = StopReason::Gradient;
            break;
        }

        let mut direction = newton_direction(objective, &x, &g, free)
            .unwrap_or_else(|| neg(&g));
        let mut slope = dot(&g, &direction);
        if slope >= 0.0 {
            direction = neg(&g);
            slope = -dot(&g, &g);
        }

        // Armijo backtracking; non-finite trial values count as failures.
        // The first trial never displaces a coordinate by more than the
        // coordinate scale: steep barrier walls produce gradient directions
        // many orders of magnitude longer than any useful step, and a unit
        // trial step would need more halvings than any sane budget. Newton
        // directions of ordinary length are unaffected (the cap only binds
        // when the direction is longer than the coordinate scale).
        let scale = 1.0 + max_norm(&x);
        let direction_len = max_norm(&direction);
        let mut step = if direction_len > scale { scale / direction_len } else { 1.0 };
        let mut accepted = None;
        for _ in 0..=MAX_HALVINGS {
            let trial: Vec<f64> = x
                .iter()
                .zip(&direction)
                .map(|(xi, di)| xi + step * di)
                .collect();
            match objective.value(&trial).filter(|v| v.is_finite()) {
                Some(v) if v <= f + ARMIJO_C1 * step * slope => {
                    accepted = Some((trial, v));
                    break;
                }
                _ => step *= 0.5,
            }
        }
        let Some((trial, f_trial)) = accepted else {
            reason = StopReason::LineSearchFailure;
            break;
        };

        let step_size = direction.iter().fold(0.0f64, |m, d| m.max((step * d).abs()));
        x = trial;
        f = f_trial;
        iterations_used += 1;

        let Some((f_new, mut g_new)) = objective.value_and_gradient(&x) else {
            // The accepted point was finite a moment ago; treat a failure
            // here as convergence rather than looping on a broken state.
            reason = StopReason::LineSearchFailure;
            break;
        };
        f = f_new;
        mask(&mut g_new, free);
        g = g_new;

        if step_size <= budget.step_tolerance * (1.0 + max_norm(&x)) {
            reason = StopReason::Step;
            break;
        }
    }

    Ok(OptimizeOutcome {
        x,
        f_before,
        f_after: f,
        iterations_used,
        reason,
    })
}

/// Approximately solves `H d = −g` with conjugate gradients, using
/// finite-difference Hessian-vector products. Returns `None` when no
/// usable direction was produced (caller falls back to steepest
/// descent). The forcing tolerance follows the usual inexact-Newton rule
/// `η = min(0.5, √‖g‖)`.
fn newton_direction(
    objective: &mut dyn Objective,
    x: &[f64],
    g: &[f64],
    free: &[bool],
) -> Option<Vec<f64>> {
    let g_norm = dot(g, g).sqrt();
    if g_norm == 0.0 {
        return None;
    }
    let target = (g_norm.sqrt().min(0.5)) * g_norm;

    let mut d = vec![0.0; x.len()];
    let mut r = neg(g);
    let mut p = r.clone();
    let mut r_sq = dot(&r, &r);

    let free_count = free.iter().filter(|&&f| f).count();
    for i in 0..MAX_CG_ITERATIONS.min(free_count) {
        let hp = hessian_vec(objective, x, g, &p, free)?;
        let curvature = dot(&p, &hp);
        if curvature <= 0.0 {
            // Negative curvature: use the progress so far, or the
            // steepest-descent direction if this was the first step.
            return if i == 0 { None } else { Some(d) };
        }
        let alpha = r_sq / curvature;
        for k in 0..d.len() {
            d[k] += alpha * p[k];
            r[k] -= alpha * hp[k];
        }
        let r_sq_new = dot(&r, &r);
        if r_sq_new.sqrt() <= target {
            return Some(d);
        }
        let beta = r_sq_new / r_sq;
        for k in 0..p.len() {
            p[k] = r[k] + beta * p[k];
        }
        r_sq = r_sq_new;
    }
    Some(d)
}

/// Forward-difference Hessian-vector product `H·v ≈ (∇f(x+hv) − ∇f(x))/h`.
fn hessian_vec(
    objective: &mut dyn Objective,
    x: &[f64],
    g: &[f64],
    v: &[f64],
    free: &[bool],
) -> Option<Vec<f64>> {
    let v_norm = max_norm(v);
    if v_norm == 0.0 {
        return Some(vec![0.0; v.len()]);
    }
    let h = 1e-7 * (1.0 + max_norm(x)) / v_norm;
    let probe: Vec<f64> = x.iter().zip(v).map(|(xi, vi)| xi + h * vi).collect();
    let (_, mut g_probe) = objective.value_and_gradient(&probe)?;
    mask(&mut g_probe, free);
    Some(
        g_probe
            .iter()
            .zip(g)
            .map(|(gp, gi)| (gp - gi) / h)
            .collect(),
    )
}

fn mask(v: &mut [f64], free: &[bool]) {
    for (value, &is_free) in v.iter_mut().zip(free) {
        if !is_free {
            *value = 0.0;
        }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn max_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |m, x| m.max(x.abs()))
}

fn neg(v: &[f64]) -> Vec<f64> {
    v.iter().map(|x| -x).collect()
}
