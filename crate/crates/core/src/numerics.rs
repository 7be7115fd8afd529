//! Scalar numerical kernel shared by every solver: safeguarded bracketed
//! root finding, bounded one-dimensional maximization, and damped fixed-point
//! iteration for joint best-response maps.
//!
//! Everything here is deterministic: identical inputs produce bit-identical
//! outputs, and there are no randomized restarts.

use thiserror::Error;

/// Convergence controls. `abs_tol` and `rel_tol` bound residuals and interval
/// widths; `max_iter` caps the iteration budget.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerance {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_iter: usize,
}

impl Default for Tolerance {
    fn default() -> Self {
        Self {
            abs_tol: 1e-10,
            rel_tol: 1e-10,
            max_iter: 200,
        }
    }
}

impl Tolerance {
    pub fn new(abs_tol: f64, rel_tol: f64, max_iter: usize) -> Self {
        assert!(abs_tol > 0.0 && rel_tol > 0.0 && max_iter >= 1);
        Self {
            abs_tol,
            rel_tol,
            max_iter,
        }
    }

    /// Same relative settings with the absolute tolerance no looser than
    /// `floor` and at least `min_iter` iterations to spend.
    pub(crate) fn for_iteration(&self, floor: f64, min_iter: usize) -> Self {
        Self {
            abs_tol: self.abs_tol.max(floor),
            rel_tol: self.rel_tol,
            max_iter: self.max_iter.max(min_iter),
        }
    }
}

/// What a solve did and how it ended.
#[derive(Debug, Clone, PartialEq)]
pub struct SolveDiagnostics {
    pub iterations: usize,
    pub residual: f64,
    pub converged: bool,
    /// Bracket or iteration-path description for logs and error reports.
    pub path: String,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum NumericsError {
    #[error("no sign change on [{lo}, {hi}]: f(lo) = {f_lo}, f(hi) = {f_hi}")]
    NoBracket {
        lo: f64,
        hi: f64,
        f_lo: f64,
        f_hi: f64,
    },
    #[error("iteration budget of {max_iter} exhausted, residual {residual}")]
    MaxIterations { max_iter: usize, residual: f64 },
    #[error("component {component} pinned at the floor for {streak} consecutive iterations; the map is contracting toward the no-trade profile")]
    CollapsedToFloor { component: usize, streak: usize },
}

/// Root of `f` on a bracketing interval `[lo, hi]` with `f(lo)·f(hi) ≤ 0`.
///
/// Bisection guarantees progress; a secant step through the bracket
/// endpoints accelerates it and is discarded whenever it leaves the bracket
/// or stalls. Payoff first-order conditions in this domain have poles near
/// bracket edges, so the safeguard is not optional.
pub fn find_root<F>(
    f: F,
    lo: f64,
    hi: f64,
    tol: &Tolerance,
) -> Result<(f64, SolveDiagnostics), NumericsError>
where
    F: Fn(f64) -> f64,
{
    assert!(
        lo < hi && lo.is_finite() && hi.is_finite(),
        "invalid bracket [{lo}, {hi}]"
    );
    let path = format!("bisection+secant on [{lo}, {hi}]");
    let mut a = lo;
    let mut b = hi;
    let mut f_a = f(a);
    let mut f_b = f(b);
    if f_a == 0.0 {
        return Ok((a, done(0, 0.0, &path)));
    }
    if f_b == 0.0 {
        return Ok((b, done(0, 0.0, &path)));
    }
    if f_a.signum() == f_b.signum() {
        return Err(NumericsError::NoBracket {
            lo,
            hi,
            f_lo: f_a,
            f_hi: f_b,
        });
    }

    let mut force_bisect = false;
    for iter in 1..=tol.max_iter {
        let width = b - a;
        let mid = a + 0.5 * width;
        let mut x = if force_bisect {
            mid
        } else {
            let denom = f_b - f_a;
            let secant = b - f_b * (b - a) / denom;
            if secant.is_finite() && secant > a && secant < b {
                secant
            } else {
                mid
            }
        };
        if !(x > a && x < b) {
            x = mid;
        }
        let f_x = f(x);
        if f_x.abs() <= tol.abs_tol {
            return Ok((x, done(iter, f_x.abs(), &path)));
        }
        if f_x.signum() == f_a.signum() {
            a = x;
            f_a = f_x;
        } else {
            b = x;
            f_b = f_x;
        }
        // If the accepted step failed to halve the bracket, bisect next time.
        force_bisect = (b - a) > 0.5 * width;
        if (b - a) <= tol.rel_tol * x.abs() + tol.abs_tol {
            let (root, res) = if f_a.abs() <= f_b.abs() {
                (a, f_a)
            } else {
                (b, f_b)
            };
            return Ok((root, done(iter, res.abs(), &path)));
        }
    }
    Err(NumericsError::MaxIterations {
        max_iter: tol.max_iter,
        residual: f_a.abs().min(f_b.abs()),
    })
}

fn done(iterations: usize, residual: f64, path: &str) -> SolveDiagnostics {
    SolveDiagnostics {
        iterations,
        residual,
        converged: true,
        path: path.to_string(),
    }
}

/// Result of a bounded maximization.
#[derive(Debug, Clone, PartialEq)]
pub struct Maximum {
    pub argmax: f64,
    pub value: f64,
    pub diagnostics: SolveDiagnostics,
}

const INV_PHI: f64 = 0.618_033_988_749_894_9;

/// Maximum of `g` on `[lo, hi]` by golden-section search.
///
/// The bracket is narrowed to `rel_tol·(hi−lo) + abs_tol`, a parabolic fit
/// through three points around the incumbent then sharpens the interior
/// estimate below the comparison-noise floor, and the endpoints are checked
/// last so corner maxima come back exactly at `lo` or `hi`.
pub fn maximize_1d<G>(g: G, lo: f64, hi: f64, tol: &Tolerance) -> Result<Maximum, NumericsError>
where
    G: Fn(f64) -> f64,
{
    assert!(
        lo <= hi && lo.is_finite() && hi.is_finite(),
        "invalid interval [{lo}, {hi}]"
    );
    let path = format!("golden section on [{lo}, {hi}]");
    if lo == hi {
        return Ok(Maximum {
            argmax: lo,
            value: g(lo),
            diagnostics: done(0, 0.0, &path),
        });
    }

    let span = hi - lo;
    let width_target = tol.rel_tol * span + tol.abs_tol;
    let mut a = lo;
    let mut b = hi;
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut g_c = g(c);
    let mut g_d = g(d);
    let mut iterations = 0;
    while (b - a) > width_target {
        if iterations >= tol.max_iter {
            return Err(NumericsError::MaxIterations {
                max_iter: tol.max_iter,
                residual: b - a,
            });
        }
        if g_c > g_d {
            b = d;
            d = c;
            g_d = g_c;
            c = b - INV_PHI * (b - a);
            g_c = g(c);
        } else {
            a = c;
            c = d;
            g_c = g_d;
            d = a + INV_PHI * (b - a);
            g_d = g(d);
        }
        iterations += 1;
    }

    let (mut best_x, mut best_v) = if g_c > g_d { (c, g_c) } else { (d, g_d) };

    // Parabolic polish: golden comparisons go blind once value differences
    // drop under rounding noise, so refit at a spacing wide enough for the
    // curvature to dominate that noise. The second, narrower round removes
    // the cubic-term bias of the first.
    for h in [1e-4 * span, 1e-5 * span] {
        if !(best_x - h > lo && best_x + h < hi) {
            continue;
        }
        let f_minus = g(best_x - h);
        let f_plus = g(best_x + h);
        let denom = f_plus - 2.0 * best_v + f_minus;
        if denom >= 0.0 {
            continue;
        }
        let vertex = best_x - 0.5 * h * (f_plus - f_minus) / denom;
        // Only trust a vertex near the fitted points; the quadratic model
        // says nothing further out.
        if vertex.is_finite() && (vertex - best_x).abs() <= 2.0 * h && vertex > lo && vertex < hi {
            let g_vertex = g(vertex);
            // Accept unless measurably worse. Demanding a strict win would
            // let comparison noise flip the returned point between nearby
            // inputs, and downstream fixed-point iterations need the argmax
            // to vary smoothly.
            if g_vertex >= best_v - 1e-9 * (1.0 + best_v.abs()) {
                best_x = vertex;
                best_v = g_vertex;
            }
        }
    }

    // Corner maxima win only on a strict improvement.
    let g_lo = g(lo);
    let g_hi = g(hi);
    if g_hi > best_v {
        best_x = hi;
        best_v = g_hi;
    }
    if g_lo > best_v {
        best_x = lo;
        best_v = g_lo;
    }

    Ok(Maximum {
        argmax: best_x,
        value: best_v,
        diagnostics: done(iterations, b - a, &path),
    })
}

/// Fixed point of `map` by damped iteration `x ← (1−damping)·x + damping·map(x)`,
/// clamped componentwise to at least `floor`.
///
/// The floor steers iterates away from the autarkic no-trade profile, which
/// is always a fixed point of bid/offer games; a component held at the floor
/// for ten straight iterations is reported as [`NumericsError::CollapsedToFloor`]
/// instead of being passed off as convergence.
pub fn damped_best_response_fixed_point<M>(
    map: M,
    start: &[f64],
    damping: f64,
    tol: &Tolerance,
    floor: f64,
) -> Result<(Vec<f64>, SolveDiagnostics), NumericsError>
where
    M: Fn(&[f64]) -> Vec<f64>,
{
    assert!(
        damping > 0.0 && damping <= 1.0,
        "damping must lie in (0, 1]"
    );
    assert!(!start.is_empty(), "empty start profile");
    let mut x: Vec<f64> = start.iter().map(|&v| v.max(floor)).collect();
    let mut pinned_streak = vec![0usize; x.len()];
    let mut last_diff = f64::INFINITY;
    let path = format!("damped fixed point, damping {damping}, floor {floor:e}");

    for iter in 1..=tol.max_iter {
        let target = map(&x);
        assert_eq!(target.len(), x.len(), "map changed the profile length");
        let mut diff: f64 = 0.0;
        let mut any_pinned = false;
        for i in 0..x.len() {
            let stepped = (1.0 - damping) * x[i] + damping * target[i];
            let next = stepped.max(floor);
            if stepped <= floor {
                pinned_streak[i] += 1;
                any_pinned = true;
            } else {
                pinned_streak[i] = 0;
            }
            diff = diff.max((next - x[i]).abs());
            x[i] = next;
        }
        if let Some(component) = pinned_streak.iter().position(|&s| s >= 10) {
            return Err(NumericsError::CollapsedToFloor {
                component,
                streak: pinned_streak[component],
            });
        }
        if diff <= tol.abs_tol && !any_pinned {
            return Ok((
                x,
                SolveDiagnostics {
                    iterations: iter,
                    residual: diff,
                    converged: true,
                    path,
                },
            ));
        }
        last_diff = diff;
    }
    Err(NumericsError::MaxIterations {
        max_iter: tol.max_iter,
        residual: last_diff,
    })
}
