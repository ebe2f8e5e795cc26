//! Gauss–Legendre rules and composite integration.
//!
//! Every integral in the engine is split at the breakpoints of the
//! integrand (basis cell boundaries, the payoff kink) so that each piece is
//! smooth and the rule converges at its full polynomial rate.

use std::sync::OnceLock;

use crate::error::{Error, Result};

/// Largest supported number of nodes.
pub const MAX_POINTS: usize = 64;

/// Nodes per subinterval used for kernel integrals unless overridden.
pub const DEFAULT_POINTS: usize = 20;

/// An `n`-point Gauss–Legendre rule on the reference interval `[-1, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureRule {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

static CACHE: [OnceLock<QuadratureRule>; MAX_POINTS] = [const { OnceLock::new() }; MAX_POINTS];

/// Computes the `n`-point Gauss–Legendre rule.
///
/// Nodes are the roots of `p_n`, found by Newton iteration from Chebyshev-like
/// initial guesses; weights are `2 / ((1 - x²) p_n'(x)²)`.
pub fn gauss_legendre(n: usize) -> Result<QuadratureRule> {
    if n == 0 || n > MAX_POINTS {
        return Err(Error::OrderOutOfRange(n));
    }
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    // Roots come in ± pairs; solve for the positive half only.
    for i in 0..n.div_ceil(2) {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() <= 1e-15 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, x);
        if d != 0.0 {
            dp = d;
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[n - 1 - i] = x;
        nodes[i] = -x;
        weights[n - 1 - i] = w;
        weights[i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    Ok(QuadratureRule { nodes, weights })
}

/// `(p_n(x), p_n'(x))` by the three-term recurrence.
fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p_prev = 1.0;
    let mut p = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 1..n {
        let kf = k as f64;
        let next = ((2.0 * kf + 1.0) * x * p - kf * p_prev) / (kf + 1.0);
        p_prev = p;
        p = next;
    }
    let nf = n as f64;
    (p, nf * (x * p - p_prev) / (x * x - 1.0))
}

impl QuadratureRule {
    /// Returns the process-wide cached `n`-point rule.
    pub fn cached(n: usize) -> Result<&'static QuadratureRule> {
        if n == 0 || n > MAX_POINTS {
            return Err(Error::OrderOutOfRange(n));
        }
        Ok(CACHE[n - 1].get_or_init(|| gauss_legendre(n).expect("order checked above")))
    }

    pub fn npoints(&self) -> usize {
        self.nodes.len()
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Nodes and weights mapped affinely onto `[a, b]`.
    pub fn mapped(&self, a: f64, b: f64) -> impl Iterator<Item = (f64, f64)> + '_ {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(move |(&x, &w)| (mid + half * x, half * w))
    }

    /// Integrates `f` over `[a, b]` with this rule, without splitting.
    pub fn apply<F: FnMut(f64) -> f64>(&self, a: f64, b: f64, mut f: F) -> f64 {
        self.mapped(a, b).map(|(x, w)| w * f(x)).sum()
    }
}

/// Cuts `[a, b]` at every breakpoint strictly inside it.
///
/// Returns the sorted, deduplicated list of subinterval endpoints, starting
/// at `a` and ending at `b`.
pub fn subdivide(a: f64, b: f64, breakpoints: &[f64]) -> Vec<f64> {
    let mut pts = Vec::with_capacity(breakpoints.len() + 2);
    pts.push(a);
    pts.extend(breakpoints.iter().copied().filter(|&x| x > a && x < b));
    pts.push(b);
    pts.sort_by(f64::total_cmp);
    pts.dedup_by(|x, y| (*x - *y).abs() <= 1e-15 * (1.0 + y.abs()));
    pts
}

/// Composite integral of `f` over `[a, b]`, split at `breakpoints`.
pub fn integrate<F: FnMut(f64) -> f64>(
    mut f: F,
    a: f64,
    b: f64,
    rule: &QuadratureRule,
    breakpoints: &[f64],
) -> Result<f64> {
    if a.partial_cmp(&b) != Some(std::cmp::Ordering::Less) {
        return Err(Error::EmptyInterval { a, b });
    }
    let pts = subdivide(a, b, breakpoints);
    Ok(pts.windows(2).map(|w| rule.apply(w[0], w[1], &mut f)).sum())
}

/// Tensor-product composite integral of `f(x, y)` over `[ax, bx] × [ay, by]`.
pub fn integrate2d<F: FnMut(f64, f64) -> f64>(
    mut f: F,
    (ax, bx): (f64, f64),
    (ay, by): (f64, f64),
    rule: &QuadratureRule,
    breakpoints_x: &[f64],
    breakpoints_y: &[f64],
) -> Result<f64> {
    if ax.partial_cmp(&bx) != Some(std::cmp::Ordering::Less) {
        return Err(Error::EmptyInterval { a: ax, b: bx });
    }
    if ay.partial_cmp(&by) != Some(std::cmp::Ordering::Less) {
        return Err(Error::EmptyInterval { a: ay, b: by });
    }
    let xs = subdivide(ax, bx, breakpoints_x);
    let ys = subdivide(ay, by, breakpoints_y);
    let mut total = 0.0;
    for wx in xs.windows(2) {
        for (x, wxi) in rule.mapped(wx[0], wx[1]) {
            let mut inner = 0.0;
            for wy in ys.windows(2) {
                inner += rule.apply(wy[0], wy[1], |y| f(x, y));
            }
            total += wxi * inner;
        }
    }
    Ok(total)
}
