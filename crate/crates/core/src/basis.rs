//! Legendre multiscaling functions and Alpert multiwavelets on `[0, 1]`.
//!
//! `V_J` is the space of piecewise polynomials of degree `< r` on the `2^J`
//! uniform cells of `[0, 1]`; it has dimension `N = r 2^J`. Two orthonormal
//! bases of `V_J` are offered:
//!
//! * [`BasisKind::Scaling`]: `φˡ_{J,k}(x) = 2^{J/2} φˡ(2^J x - k)`, ordered with
//!   the translation `k` outer and the component `l` inner, so index
//!   `k r + l`.
//! * [`BasisKind::Wavelet`]: `φˡ_{0,0}` (indices `0..r`) followed by
//!   `ψˡ_{j,k}` for `j = 0..J`, `k = 0..2^j`, `l = 0..r` at index
//!   `r 2^j + k r + l`.
//!
//! Both span the same space, so anything computed from an orthogonal
//! projection (norms, reconstructed functions, prices) agrees between them.

use std::sync::OnceLock;

use crate::error::{Error, Result};
use crate::linalg::DenseMatrix;
use crate::quadrature::{gauss_legendre, subdivide, QuadratureRule};

/// Highest multiplicity with a shipped wavelet construction.
pub const MAX_ORDER: usize = 4;

/// Deepest refinement level accepted by [`BasisSpec::new`].
pub const MAX_LEVEL: u32 = 12;

/// Legendre polynomial `p_i(x)` via the Bonnet recurrence
/// `(i+1) p_{i+1} = (2i+1) x p_i - i p_{i-1}`.
pub fn legendre_poly(i: usize, x: f64) -> f64 {
    let mut prev = 1.0;
    if i == 0 {
        return prev;
    }
    let mut cur = x;
    for k in 1..i {
        let kf = k as f64;
        let next = ((2.0 * kf + 1.0) * x * cur - kf * prev) / (kf + 1.0);
        prev = cur;
        cur = next;
    }
    cur
}

/// Fills `out[k] = p_k(t)` for `k < out.len()`.
fn legendre_values(t: f64, out: &mut [f64]) {
    let n = out.len();
    if n == 0 {
        return;
    }
    out[0] = 1.0;
    if n > 1 {
        out[1] = t;
    }
    for k in 1..n.saturating_sub(1) {
        let kf = k as f64;
        out[k + 1] = ((2.0 * kf + 1.0) * t * out[k] - kf * out[k - 1]) / (kf + 1.0);
    }
}

/// Orthonormal Legendre multiscaling function `φˡ(x) = √(2l+1) p_l(2x-1)`
/// on `[0, 1)`, zero elsewhere.
pub fn scaling_fn(l: usize, x: f64) -> f64 {
    if !(0.0..1.0).contains(&x) {
        return 0.0;
    }
    ((2 * l + 1) as f64).sqrt() * legendre_poly(l, 2.0 * x - 1.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BasisKind {
    Scaling,
    Wavelet,
}

impl std::fmt::Display for BasisKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            BasisKind::Scaling => "scaling",
            BasisKind::Wavelet => "wavelet",
        })
    }
}

/// Multiplicity `r`, level `J` and kind of a basis of `V_J`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct BasisSpec {
    order: usize,
    level: u32,
    kind: BasisKind,
}

impl BasisSpec {
    pub fn new(order: usize, level: u32, kind: BasisKind) -> Result<Self> {
        if !(1..=MAX_ORDER).contains(&order) {
            return Err(Error::UnsupportedOrder(order));
        }
        if level > MAX_LEVEL {
            return Err(Error::LevelOutOfRange(level));
        }
        Ok(Self { order, level, kind })
    }

    pub fn scaling(order: usize, level: u32) -> Result<Self> {
        Self::new(order, level, BasisKind::Scaling)
    }

    pub fn wavelet(order: usize, level: u32) -> Result<Self> {
        Self::new(order, level, BasisKind::Wavelet)
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn level(&self) -> u32 {
        self.level
    }

    pub fn kind(&self) -> BasisKind {
        self.kind
    }

    pub fn with_kind(self, kind: BasisKind) -> Self {
        Self { kind, ..self }
    }

    /// Number of uniform cells, `2^J`.
    pub fn cells(&self) -> usize {
        1 << self.level
    }

    /// `N = r 2^J`.
    pub fn dimension(&self) -> usize {
        self.order * self.cells()
    }
}

/// A function on `[0, 1)` that is a polynomial on each interval between
/// consecutive breakpoints, stored as Legendre coefficients in the local
/// coordinate `t ∈ [-1, 1]` of each interval.
#[derive(Debug, Clone, PartialEq)]
pub struct PiecewisePolynomial {
    breakpoints: Vec<f64>,
    coeffs: Vec<Vec<f64>>,
}

impl PiecewisePolynomial {
    pub fn new(breakpoints: Vec<f64>, coeffs: Vec<Vec<f64>>) -> Result<Self> {
        if breakpoints.len() < 2 {
            return Err(Error::InvalidPiecewise("need at least two breakpoints"));
        }
        if breakpoints[0] != 0.0 || *breakpoints.last().unwrap() != 1.0 {
            return Err(Error::InvalidPiecewise(
                "breakpoints must start at 0 and end at 1",
            ));
        }
        if !breakpoints.windows(2).all(|w| w[0] < w[1]) {
            return Err(Error::InvalidPiecewise(
                "breakpoints must be strictly increasing",
            ));
        }
        if coeffs.len() != breakpoints.len() - 1 {
            return Err(Error::InvalidPiecewise(
                "one coefficient vector per interval",
            ));
        }
        Ok(Self {
            breakpoints,
            coeffs,
        })
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    pub fn coeffs(&self) -> &[Vec<f64>] {
        &self.coeffs
    }

    pub fn pieces(&self) -> usize {
        self.coeffs.len()
    }

    /// Value at `x`; intervals are half-open `[b_i, b_{i+1})`, zero outside
    /// `[0, 1)`.
    pub fn eval(&self, x: f64) -> f64 {
        if !(0.0..1.0).contains(&x) {
            return 0.0;
        }
        let piece = self.breakpoints[1..]
            .iter()
            .position(|&b| x < b)
            .unwrap_or(self.pieces() - 1);
        self.eval_piece(piece, x)
    }

    /// Evaluates the polynomial of interval `piece` at `x`, which may lie on
    /// or beyond the interval's closure.
    pub fn eval_piece(&self, piece: usize, x: f64) -> f64 {
        let a = self.breakpoints[piece];
        let b = self.breakpoints[piece + 1];
        let t = 2.0 * (x - a) / (b - a) - 1.0;
        let c = &self.coeffs[piece];
        let mut p = [0.0; MAX_ORDER * 2];
        let p = &mut p[..c.len()];
        legendre_values(t, p);
        c.iter().zip(p.iter()).map(|(a, b)| a * b).sum()
    }
}

/// Two-scale coefficients of the multiwavelets:
/// `ψˡ(x) = Σ_k g0[l][k] φᵏ(2x) + g1[l][k] φᵏ(2x-1)`.
#[derive(Debug, Clone, PartialEq)]
pub struct WaveletCoefficients {
    order: usize,
    g0: Vec<Vec<f64>>,
    g1: Vec<Vec<f64>>,
}

impl WaveletCoefficients {
    pub fn order(&self) -> usize {
        self.order
    }

    pub fn g0(&self) -> &[Vec<f64>] {
        &self.g0
    }

    pub fn g1(&self) -> &[Vec<f64>] {
        &self.g1
    }

    /// Piecewise form of each `ψˡ` on `[0, ½) ∪ [½, 1)`.
    pub fn to_piecewise(&self) -> Vec<PiecewisePolynomial> {
        let scale = |k: usize| ((2 * k + 1) as f64).sqrt();
        (0..self.order)
            .map(|l| {
                let left = self.g0[l]
                    .iter()
                    .enumerate()
                    .map(|(k, g)| g * scale(k))
                    .collect();
                let right = self.g1[l]
                    .iter()
                    .enumerate()
                    .map(|(k, g)| g * scale(k))
                    .collect();
                PiecewisePolynomial::new(vec![0.0, 0.5, 1.0], vec![left, right])
                    .expect("fixed breakpoints are valid")
            })
            .collect()
    }
}

/// Solves for the order-`r` Legendre multiwavelets.
///
/// Working in the orthonormal basis `{√2 φᵏ(2x), √2 φᵏ(2x-1)}` of `V_1`,
/// `ψˡ` is taken, for `l = r-1` down to `0`, as the unit vector orthogonal to
/// the moments `x⁰ … x^{r+l-1}` and to the already fixed `ψ^{l+1} … ψ^{r-1}`.
/// That is `2r - 1` constraints in a `2r`-dimensional space, so each
/// function is determined up to sign. Signs are fixed so the highest-degree
/// coefficient of the right half is positive (`r ≥ 2`), or so that `ψ⁰` is
/// positive on `[0, ½)` for the Haar case `r = 1`.
pub fn construct_wavelets(r: usize) -> Result<WaveletCoefficients> {
    if !(1..=MAX_ORDER).contains(&r) {
        return Err(Error::UnsupportedOrder(r));
    }
    let dim = 2 * r;
    let rule = gauss_legendre(2 * r + 2)?;
    // Moment rows against φⁱ on [0,1]; span{φ⁰..φⁱ} = span{x⁰..xⁱ}, but
    // Legendre moments keep the rows well conditioned.
    let sqrt2 = std::f64::consts::SQRT_2;
    let moments: Vec<Vec<f64>> = (0..dim - 1)
        .map(|i| {
            let mut row = vec![0.0; dim];
            for k in 0..r {
                row[k] = rule.apply(0.0, 0.5, |x| {
                    sqrt2 * local_scaling(k, 4.0 * x - 1.0) * scaling_fn(i, x)
                });
                row[r + k] = rule.apply(0.5, 1.0, |x| {
                    sqrt2 * local_scaling(k, 4.0 * x - 3.0) * scaling_fn(i, x)
                });
            }
            row
        })
        .collect();

    let mut psi: Vec<Vec<f64>> = vec![Vec::new(); r];
    for l in (0..r).rev() {
        let mut constraints: Vec<Vec<f64>> = moments[..r + l].to_vec();
        constraints.extend(psi[l + 1..].iter().cloned());
        let q = orthonormalize(constraints);
        let mut v = (0..dim)
            .map(|j| {
                let mut e = vec![0.0; dim];
                e[j] = 1.0;
                project_out(&mut e, &q);
                project_out(&mut e, &q);
                e
            })
            .max_by(|a, b| norm(a).total_cmp(&norm(b)))
            .expect("dim > 0");
        let n = norm(&v);
        v.iter_mut().for_each(|x| *x /= n);

        let flip = if r == 1 {
            v[0] < 0.0
        } else {
            let top = (0..r)
                .rev()
                .map(|k| v[r + k])
                .find(|c| c.abs() > 1e-8)
                .unwrap_or(0.0);
            top < 0.0
        };
        if flip {
            v.iter_mut().for_each(|x| *x = -*x);
        }
        psi[l] = v;
    }

    let g0 = psi
        .iter()
        .map(|v| v[..r].iter().map(|c| c * sqrt2).collect())
        .collect();
    let g1 = psi
        .iter()
        .map(|v| v[r..].iter().map(|c| c * sqrt2).collect())
        .collect();
    Ok(WaveletCoefficients { order: r, g0, g1 })
}

/// `√(2k+1) p_k(t)`, i.e. `φᵏ` in local coordinate `t ∈ [-1, 1]`.
fn local_scaling(k: usize, t: f64) -> f64 {
    ((2 * k + 1) as f64).sqrt() * legendre_poly(k, t)
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn project_out(v: &mut [f64], basis: &[Vec<f64>]) {
    for q in basis {
        let c: f64 = v.iter().zip(q).map(|(a, b)| a * b).sum();
        v.iter_mut().zip(q).for_each(|(a, b)| *a -= c * b);
    }
}

/// Modified Gram–Schmidt with one re-orthogonalization pass.
fn orthonormalize(rows: Vec<Vec<f64>>) -> Vec<Vec<f64>> {
    let mut q: Vec<Vec<f64>> = Vec::with_capacity(rows.len());
    for mut v in rows {
        project_out(&mut v, &q);
        project_out(&mut v, &q);
        let n = norm(&v);
        if n > 1e-12 {
            v.iter_mut().for_each(|x| *x /= n);
            q.push(v);
        }
    }
    q
}

struct WaveletSet {
    coefficients: WaveletCoefficients,
    pieces: Vec<PiecewisePolynomial>,
}

static WAVELETS: [OnceLock<WaveletSet>; MAX_ORDER] = [const { OnceLock::new() }; MAX_ORDER];

fn wavelet_set(r: usize) -> Result<&'static WaveletSet> {
    if !(1..=MAX_ORDER).contains(&r) {
        return Err(Error::UnsupportedOrder(r));
    }
    Ok(WAVELETS[r - 1].get_or_init(|| {
        let coefficients = construct_wavelets(r).expect("order checked above");
        let pieces = coefficients.to_piecewise();
        WaveletSet {
            coefficients,
            pieces,
        }
    }))
}

/// Cached multiwavelet coefficients of order `r`.
pub fn wavelets(r: usize) -> Result<&'static WaveletCoefficients> {
    Ok(&wavelet_set(r)?.coefficients)
}

/// Cached piecewise form of the order-`r` multiwavelets `ψ⁰ … ψ^{r-1}`.
pub fn wavelet_functions(r: usize) -> Result<&'static [PiecewisePolynomial]> {
    Ok(&wavelet_set(r)?.pieces)
}

/// Expansion coefficients of a function of `V_J` in a given basis.
#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientVector {
    values: Vec<f64>,
    spec: BasisSpec,
}

impl CoefficientVector {
    pub fn new(values: Vec<f64>, spec: BasisSpec) -> Result<Self> {
        if values.len() != spec.dimension() {
            return Err(Error::DimensionMismatch {
                expected: spec.dimension(),
                found: values.len(),
            });
        }
        Ok(Self { values, spec })
    }

    pub fn zeros(spec: BasisSpec) -> Self {
        Self {
            values: vec![0.0; spec.dimension()],
            spec,
        }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn spec(&self) -> BasisSpec {
        self.spec
    }

    pub fn norm(&self) -> f64 {
        norm(&self.values)
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }
}

/// Quadrature samples of the basis functions that are nonzero on one
/// interval inside a single cell.
#[derive(Debug, Clone)]
pub struct CellSamples {
    pub cell: usize,
    pub points: Vec<f64>,
    pub weights: Vec<f64>,
    /// Global indices of the basis functions supported on the cell.
    pub active: Vec<usize>,
    /// `values[a][p]` is basis function `active[a]` at `points[p]`.
    pub values: Vec<Vec<f64>>,
}

/// An evaluable basis of `V_J`.
#[derive(Debug, Clone)]
pub struct Basis {
    spec: BasisSpec,
    wavelets: Option<&'static [PiecewisePolynomial]>,
}

impl Basis {
    pub fn new(spec: BasisSpec) -> Result<Self> {
        let wavelets = match spec.kind() {
            BasisKind::Scaling => None,
            BasisKind::Wavelet => Some(wavelet_functions(spec.order())?),
        };
        Ok(Self { spec, wavelets })
    }

    pub fn spec(&self) -> BasisSpec {
        self.spec
    }

    pub fn dimension(&self) -> usize {
        self.spec.dimension()
    }

    pub fn cells(&self) -> usize {
        self.spec.cells()
    }

    pub fn cell_width(&self) -> f64 {
        1.0 / self.cells() as f64
    }

    /// Interior cell boundaries `k 2^{-J}`. Every basis function of either
    /// kind is a polynomial between consecutive entries.
    pub fn breakpoints(&self) -> Vec<f64> {
        let h = self.cell_width();
        (1..self.cells()).map(|k| k as f64 * h).collect()
    }

    /// Cell containing `x`; `x = 1` belongs to the last cell.
    pub fn cell_of(&self, x: f64) -> usize {
        let c = (x * self.cells() as f64).floor();
        (c.max(0.0) as usize).min(self.cells() - 1)
    }

    /// Global indices of the basis functions nonzero on `cell`.
    pub fn active(&self, cell: usize) -> Vec<usize> {
        let r = self.spec.order();
        match self.spec.kind() {
            BasisKind::Scaling => (cell * r..(cell + 1) * r).collect(),
            BasisKind::Wavelet => {
                let big_j = self.spec.level();
                let mut out: Vec<usize> = (0..r).collect();
                for j in 0..big_j {
                    let k = cell >> (big_j - j);
                    let base = (r << j) + k * r;
                    out.extend(base..base + r);
                }
                out
            }
        }
    }

    /// Basis function `index` at `x`, using the polynomial of `cell` (so `x`
    /// on the cell's right edge takes the limit from inside the cell).
    pub fn eval_in_cell(&self, index: usize, cell: usize, x: f64) -> f64 {
        let r = self.spec.order();
        let big_j = self.spec.level();
        match self.wavelets {
            None => {
                if index / r != cell {
                    return 0.0;
                }
                let l = index % r;
                let t = 2.0 * (x * self.cells() as f64 - cell as f64) - 1.0;
                let scale = (self.cells() as f64).sqrt();
                scale * local_scaling(l, t)
            }
            Some(psi) => {
                if index < r {
                    return local_scaling(index, 2.0 * x - 1.0);
                }
                let j = (index / r).ilog2();
                let offset = index - (r << j);
                let (k, l) = (offset / r, offset % r);
                if cell >> (big_j - j) != k {
                    return 0.0;
                }
                let piece = (cell >> (big_j - j - 1)) & 1;
                let scale = ((1u64 << j) as f64).sqrt();
                let y = (1u64 << j) as f64 * x - k as f64;
                scale * psi[l].eval_piece(piece, y)
            }
        }
    }

    /// All `N` basis functions at `x ∈ [0, 1]`, in the documented order.
    /// Zero outside `[0, 1]`.
    pub fn basis_vector(&self, x: f64) -> Vec<f64> {
        let mut out = vec![0.0; self.dimension()];
        if !(0.0..=1.0).contains(&x) {
            return out;
        }
        let cell = self.cell_of(x);
        for i in self.active(cell) {
            out[i] = self.eval_in_cell(i, cell, x);
        }
        out
    }

    /// `Ψ_J(x)ᵀ F`.
    pub fn evaluate(&self, coeffs: &CoefficientVector, x: f64) -> Result<f64> {
        if coeffs.values().len() != self.dimension() {
            return Err(Error::DimensionMismatch {
                expected: self.dimension(),
                found: coeffs.values().len(),
            });
        }
        Ok(self.evaluate_slice(coeffs.values(), x))
    }

    pub(crate) fn evaluate_slice(&self, coeffs: &[f64], x: f64) -> f64 {
        if !(0.0..=1.0).contains(&x) {
            return 0.0;
        }
        let cell = self.cell_of(x);
        self.active(cell)
            .into_iter()
            .map(|i| coeffs[i] * self.eval_in_cell(i, cell, x))
            .sum()
    }

    /// Samples the active basis functions on `[a, b]`, which must lie in
    /// one cell.
    pub fn sample_interval(&self, a: f64, b: f64, rule: &QuadratureRule) -> CellSamples {
        let cell = self.cell_of(0.5 * (a + b));
        let (points, weights): (Vec<f64>, Vec<f64>) = rule.mapped(a, b).unzip();
        let active = self.active(cell);
        let values = active
            .iter()
            .map(|&i| {
                points
                    .iter()
                    .map(|&x| self.eval_in_cell(i, cell, x))
                    .collect()
            })
            .collect();
        CellSamples {
            cell,
            points,
            weights,
            active,
            values,
        }
    }

    pub fn sample_cell(&self, cell: usize, rule: &QuadratureRule) -> CellSamples {
        let h = self.cell_width();
        self.sample_interval(cell as f64 * h, (cell + 1) as f64 * h, rule)
    }

    /// Orthogonal projection coefficients `d_i = ∫₀¹ f ψ̄_i`, integrating
    /// per cell and additionally splitting at `extra_breakpoints` (kinks of
    /// `f`).
    pub fn project<F: FnMut(f64) -> f64>(
        &self,
        mut f: F,
        rule: &QuadratureRule,
        extra_breakpoints: &[f64],
    ) -> CoefficientVector {
        let mut cuts = self.breakpoints();
        cuts.extend_from_slice(extra_breakpoints);
        let pts = subdivide(0.0, 1.0, &cuts);
        let mut d = vec![0.0; self.dimension()];
        for w in pts.windows(2) {
            let s = self.sample_interval(w[0], w[1], rule);
            let fx: Vec<f64> = s.points.iter().map(|&x| f(x)).collect();
            for (a, &i) in s.active.iter().enumerate() {
                d[i] += s.values[a]
                    .iter()
                    .zip(&fx)
                    .zip(&s.weights)
                    .map(|((v, f), w)| v * f * w)
                    .sum::<f64>();
            }
        }
        CoefficientVector {
            values: d,
            spec: self.spec,
        }
    }

    /// Numerically integrated Gram matrix `∫₀¹ Ψ Ψᵀ`.
    pub fn gram(&self, rule: &QuadratureRule) -> DenseMatrix {
        let n = self.dimension();
        let mut g = DenseMatrix::zeros(n, n);
        for cell in 0..self.cells() {
            let s = self.sample_cell(cell, rule);
            for (a, &i) in s.active.iter().enumerate() {
                for (b, &j) in s.active.iter().enumerate() {
                    g[(i, j)] += s.values[a]
                        .iter()
                        .zip(&s.values[b])
                        .zip(&s.weights)
                        .map(|((x, y), w)| x * y * w)
                        .sum::<f64>();
                }
            }
        }
        g
    }
}

/// [`Basis::basis_vector`] for a spec.
pub fn basis_vector(spec: BasisSpec, x: f64) -> Result<Vec<f64>> {
    Ok(Basis::new(spec)?.basis_vector(x))
}

/// [`Basis::project`] for a spec.
pub fn project<F: FnMut(f64) -> f64>(
    f: F,
    spec: BasisSpec,
    rule: &QuadratureRule,
    extra_breakpoints: &[f64],
) -> Result<CoefficientVector> {
    Ok(Basis::new(spec)?.project(f, rule, extra_breakpoints))
}

/// [`Basis::evaluate`] for the spec carried by `coeffs`.
pub fn evaluate(coeffs: &CoefficientVector, spec: BasisSpec, x: f64) -> Result<f64> {
    if coeffs.spec().dimension() != spec.dimension() {
        return Err(Error::DimensionMismatch {
            expected: spec.dimension(),
            found: coeffs.values().len(),
        });
    }
    Basis::new(spec)?.evaluate(coeffs, x)
}

/// Largest `|∫₀¹ ψˡ(x) xⁱ dx|` over `0 ≤ l, i < r`.
pub fn moment_residual(r: usize) -> Result<f64> {
    let psi = wavelet_functions(r)?;
    let rule = gauss_legendre(2 * r)?;
    let mut worst = 0.0f64;
    for p in psi {
        for i in 0..r {
            let m = rule.apply(0.0, 0.5, |x| p.eval_piece(0, x) * x.powi(i as i32))
                + rule.apply(0.5, 1.0, |x| p.eval_piece(1, x) * x.powi(i as i32));
            worst = worst.max(m.abs());
        }
    }
    Ok(worst)
}

/// Largest entrywise deviation of the Gram matrix from the identity.
pub fn gram_residual(spec: BasisSpec) -> Result<f64> {
    let basis = Basis::new(spec)?;
    let rule = gauss_legendre(spec.order() + 1)?;
    let g = basis.gram(&rule);
    Ok(g.max_abs_diff(&DenseMatrix::identity(spec.dimension())))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn rule(n: usize) -> &'static QuadratureRule {
        QuadratureRule::cached(n).unwrap()
    }

    #[test]
    fn legendre_examples() {
        assert_eq!(legendre_poly(0, 0.7), 1.0);
        assert_eq!(legendre_poly(1, -0.3), -0.3);
        assert_abs_diff_eq!(legendre_poly(2, 0.0), -0.5, epsilon = 1e-16);
    }

    #[test]
    fn legendre_closed_forms() {
        for &x in &[-1.0, -0.61, 0.0, 0.2, 0.93, 1.0] {
            let p2 = 0.5 * (3.0 * x * x - 1.0);
            let p3 = 0.5 * (5.0 * x * x * x - 3.0 * x);
            assert_abs_diff_eq!(legendre_poly(2, x), p2, epsilon = 1e-15);
            assert_abs_diff_eq!(legendre_poly(3, x), p3, epsilon = 1e-15);
        }
    }

    #[test]
    fn legendre_norms() {
        let q = rule(12);
        for i in 0..8 {
            let n2 = q.apply(-1.0, 1.0, |x| legendre_poly(i, x).powi(2));
            assert_abs_diff_eq!(n2, 2.0 / (2 * i + 1) as f64, epsilon = 1e-14);
        }
    }

    #[test]
    fn scaling_examples() {
        assert_eq!(scaling_fn(0, 0.42), 1.0);
        assert_abs_diff_eq!(scaling_fn(1, 0.5), 0.0, epsilon = 1e-16);
        assert_abs_diff_eq!(scaling_fn(2, 0.0), 5f64.sqrt(), epsilon = 1e-15);
        assert_eq!(scaling_fn(0, 1.0), 0.0);
        assert_eq!(scaling_fn(3, -0.1), 0.0);
    }

    #[test]
    fn scaling_closed_forms() {
        for &x in &[0.0, 0.13, 0.5, 0.77, 0.999] {
            assert_abs_diff_eq!(
                scaling_fn(2, x),
                5f64.sqrt() * (6.0 * x * x - 6.0 * x + 1.0),
                epsilon = 1e-14
            );
            assert_abs_diff_eq!(
                scaling_fn(3, x),
                7f64.sqrt() * (20.0 * x.powi(3) - 30.0 * x * x + 12.0 * x - 1.0),
                epsilon = 1e-13
            );
        }
    }

    #[test]
    fn scaling_functions_orthonormal() {
        let q = rule(8);
        for a in 0..4 {
            for b in 0..4 {
                let v = q.apply(0.0, 1.0, |x| scaling_fn(a, x) * scaling_fn(b, x));
                assert_abs_diff_eq!(v, if a == b { 1.0 } else { 0.0 }, epsilon = 1e-14);
            }
        }
    }

    #[test]
    fn spec_validation() {
        assert_eq!(BasisSpec::scaling(0, 2), Err(Error::UnsupportedOrder(0)));
        assert_eq!(BasisSpec::scaling(5, 2), Err(Error::UnsupportedOrder(5)));
        assert_eq!(
            BasisSpec::wavelet(2, MAX_LEVEL + 1),
            Err(Error::LevelOutOfRange(MAX_LEVEL + 1))
        );
        let s = BasisSpec::wavelet(4, 5).unwrap();
        assert_eq!(s.dimension(), 128);
        assert_eq!(construct_wavelets(7), Err(Error::UnsupportedOrder(7)));
    }

    #[test]
    fn haar_wavelet() {
        let psi = &wavelet_functions(1).unwrap()[0];
        assert_abs_diff_eq!(psi.eval(0.1), 1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(psi.eval(0.49), 1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(psi.eval(0.5), -1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(psi.eval(0.9), -1.0, epsilon = 1e-14);
    }

    /// Unnormalized polynomial forms of the r = 4 multiwavelets. The left
    /// half of `ψ¹` has the opposite sign to the constructed basis.
    fn closed_form_r4(l: usize, x: f64) -> f64 {
        let left = x < 0.5;
        match (l, left) {
            (0, true) => -(224.0 * x.powi(3) - 216.0 * x * x + 56.0 * x - 3.0),
            (0, false) => 224.0 * x.powi(3) - 456.0 * x * x + 296.0 * x - 61.0,
            (1, true) => -(1680.0 * x.powi(3) - 1320.0 * x * x + 270.0 * x - 11.0),
            (1, false) => 1680.0 * x.powi(3) - 3720.0 * x * x + 2670.0 * x - 619.0,
            (2, true) => -(256.0 * x.powi(3) - 174.0 * x * x + 30.0 * x - 1.0),
            (2, false) => 256.0 * x.powi(3) - 594.0 * x * x + 450.0 * x - 111.0,
            (3, true) => 420.0 * x.powi(3) - 246.0 * x * x + 36.0 * x - 1.0,
            (3, false) => 420.0 * x.powi(3) - 1014.0 * x * x + 804.0 * x - 209.0,
            _ => unreachable!(),
        }
    }

    #[test]
    fn r4_matches_closed_form_shapes() {
        let psi = wavelet_functions(4).unwrap();
        let q = rule(8);
        for (l, f) in psi.iter().enumerate() {
            // Normalize each half of the reference form by the constructed
            // function's value at one point, then compare everywhere.
            for (a, b) in [(0.0, 0.5), (0.5, 1.0)] {
                let x0 = a + 0.137;
                let scale = f.eval(x0) / closed_form_r4(l, x0);
                let err = q.apply(a, b, |x| (f.eval(x) - scale * closed_form_r4(l, x)).powi(2));
                assert!(err.sqrt() < 1e-12, "l={l} half=({a},{b}) err={err}");
                // Same normalization constant on both halves, same sign on the
                // right half.
                assert!(scale > 0.0 || (l == 1 && a == 0.0), "l={l} scale={scale}");
            }
        }
        // Normalization constants: √(15/17), √(1/21), √(35/17), √(10/42).
        let consts = [
            (15.0f64 / 17.0).sqrt(),
            (1.0f64 / 21.0).sqrt(),
            (35.0f64 / 17.0).sqrt(),
            (10.0f64 / 42.0).sqrt(),
        ];
        for l in 0..4 {
            let x0 = 0.8;
            assert_abs_diff_eq!(
                psi[l].eval(x0),
                consts[l] * closed_form_r4(l, x0),
                epsilon = 1e-11
            );
        }
    }

    #[test]
    fn r4_closed_forms_lie_in_wavelet_span() {
        // ψ⁰, ψ², ψ³ as written are in W₀; ψ¹ is in W₀ once its left half
        // takes the opposite sign.
        let psi = wavelet_functions(4).unwrap();
        let q = rule(10);
        for l in 0..4 {
            let f = |x: f64| {
                let v = closed_form_r4(l, x);
                if l == 1 && x < 0.5 {
                    -v
                } else {
                    v
                }
            };
            let norm2 = q.apply(0.0, 0.5, |x| f(x).powi(2)) + q.apply(0.5, 1.0, |x| f(x).powi(2));
            let coef: Vec<f64> = psi
                .iter()
                .map(|p| {
                    (q.apply(0.0, 0.5, |x| f(x) * p.eval(x))
                        + q.apply(0.5, 1.0, |x| f(x) * p.eval(x)))
                        / norm2.sqrt()
                })
                .collect();
            let captured: f64 = coef.iter().map(|c| c * c).sum();
            assert!((1.0 - captured).abs() < 1e-10, "l={l} captured={captured}");
        }
    }

    #[test]
    fn wavelets_orthonormal_and_vanishing() {
        let q = rule(10);
        for r in 1..=MAX_ORDER {
            let psi = wavelet_functions(r).unwrap();
            for a in 0..r {
                for b in 0..r {
                    let v = q.apply(0.0, 0.5, |x| psi[a].eval(x) * psi[b].eval(x))
                        + q.apply(0.5, 1.0, |x| psi[a].eval(x) * psi[b].eval(x));
                    assert_abs_diff_eq!(v, if a == b { 1.0 } else { 0.0 }, epsilon = 1e-12);
                }
            }
            assert!(moment_residual(r).unwrap() < 1e-12, "r={r}");
        }
    }

    #[test]
    fn second_moment_example() {
        let psi = wavelet_functions(4).unwrap();
        let q = rule(8);
        let m =
            q.apply(0.0, 0.5, |x| psi[2].eval(x) * x) + q.apply(0.5, 1.0, |x| psi[2].eval(x) * x);
        assert_abs_diff_eq!(m, 0.0, epsilon = 1e-14);
    }

    #[test]
    fn two_scale_coefficients_reproduce_piecewise_form() {
        for r in 1..=MAX_ORDER {
            let w = wavelets(r).unwrap();
            let psi = wavelet_functions(r).unwrap();
            for (l, f) in psi.iter().enumerate() {
                for &x in &[0.05, 0.3, 0.49, 0.5, 0.71, 0.98] {
                    let direct: f64 = (0..r)
                        .map(|k| {
                            w.g0()[l][k] * scaling_fn(k, 2.0 * x)
                                + w.g1()[l][k] * scaling_fn(k, 2.0 * x - 1.0)
                        })
                        .sum();
                    assert_abs_diff_eq!(direct, f.eval(x), epsilon = 1e-12);
                }
            }
        }
    }

    #[test]
    fn basis_vector_examples() {
        let v = basis_vector(BasisSpec::scaling(1, 0).unwrap(), 0.3).unwrap();
        assert_eq!(v, vec![1.0]);
        let v = basis_vector(BasisSpec::scaling(2, 1).unwrap(), 0.25).unwrap();
        assert_eq!(v.len(), 4);
        assert_abs_diff_eq!(v[0], 2f64.sqrt(), epsilon = 1e-15);
        assert_abs_diff_eq!(v[1], 0.0, epsilon = 1e-15);
        assert_eq!(&v[2..], &[0.0, 0.0]);
    }

    #[test]
    fn gram_is_identity() {
        for r in 1..=MAX_ORDER {
            for j in 0..=6 {
                for kind in [BasisKind::Scaling, BasisKind::Wavelet] {
                    let res = gram_residual(BasisSpec::new(r, j, kind).unwrap()).unwrap();
                    assert!(res < 1e-10, "r={r} J={j} {kind}: {res}");
                }
            }
        }
    }

    #[test]
    fn piecewise_validation() {
        assert!(PiecewisePolynomial::new(vec![0.0], vec![]).is_err());
        assert!(PiecewisePolynomial::new(vec![0.1, 1.0], vec![vec![1.0]]).is_err());
        assert!(PiecewisePolynomial::new(vec![0.0, 0.6, 0.5, 1.0], vec![vec![1.0]; 3]).is_err());
        assert!(PiecewisePolynomial::new(vec![0.0, 0.5, 1.0], vec![vec![1.0]]).is_err());
        let p = PiecewisePolynomial::new(vec![0.0, 0.25, 1.0], vec![vec![1.0], vec![0.0, 1.0]])
            .unwrap();
        assert_eq!(p.eval(0.1), 1.0);
        // Second piece is the local coordinate t on [0.25, 1).
        assert_abs_diff_eq!(p.eval(0.625), 0.0, epsilon = 1e-15);
        assert_eq!(p.eval(1.0), 0.0);
    }

    #[test]
    fn project_constant() {
        let spec = BasisSpec::scaling(4, 3).unwrap();
        let d = project(|_| 1.0, spec, rule(6), &[]).unwrap();
        let expect = 2f64.powf(-1.5);
        for (i, v) in d.values().iter().enumerate() {
            let want = if i % 4 == 0 { expect } else { 0.0 };
            assert_abs_diff_eq!(*v, want, epsilon = 1e-14);
        }
    }

    #[test]
    fn project_reproduces_low_degree_polynomials() {
        let spec = BasisSpec::scaling(3, 0).unwrap();
        let basis = Basis::new(spec).unwrap();
        let d = basis.project(|x| x * x, rule(6), &[]);
        let q = rule(10);
        let err = q.apply(0.0, 1.0, |x| {
            (basis.evaluate(&d, x).unwrap() - x * x).powi(2)
        });
        assert!(err.sqrt() < 1e-14);
        // Exact coefficients: <x², φ⁰> = 1/3, <x², φ¹> = √3/6, <x², φ²> = √5/30.
        assert_abs_diff_eq!(d.values()[0], 1.0 / 3.0, epsilon = 1e-15);
        assert_abs_diff_eq!(d.values()[1], 3f64.sqrt() / 6.0, epsilon = 1e-15);
        assert_abs_diff_eq!(d.values()[2], 5f64.sqrt() / 30.0, epsilon = 1e-15);
    }

    fn projection_error<F: Fn(f64) -> f64 + Copy>(f: F, spec: BasisSpec) -> f64 {
        let basis = Basis::new(spec).unwrap();
        let d = basis.project(f, rule(12), &[]);
        let mut cuts = basis.breakpoints();
        cuts.push(0.0);
        crate::quadrature::integrate(
            |x| (basis.evaluate(&d, x).unwrap() - f(x)).powi(2),
            0.0,
            1.0,
            rule(16),
            &cuts,
        )
        .unwrap()
        .sqrt()
    }

    #[test]
    fn projection_rate_matches_order() {
        for r in 1..=MAX_ORDER {
            let target = 2f64.powi(r as i32);
            for j in 2..6 {
                let e0 = projection_error(f64::sin, BasisSpec::scaling(r, j).unwrap());
                let e1 = projection_error(f64::sin, BasisSpec::scaling(r, j + 1).unwrap());
                let ratio = e0 / e1;
                assert!(
                    ratio > target / 1.6 && ratio < target * 1.6,
                    "r={r} J={j} ratio={ratio}"
                );
            }
        }
    }

    #[test]
    fn evaluate_examples() {
        let spec = BasisSpec::scaling(4, 0).unwrap();
        let zero = CoefficientVector::zeros(spec);
        assert_eq!(evaluate(&zero, spec, 0.37).unwrap(), 0.0);
        let mut e1 = vec![0.0; 4];
        e1[0] = 1.0;
        let e1 = CoefficientVector::new(e1, spec).unwrap();
        assert_abs_diff_eq!(evaluate(&e1, spec, 0.1).unwrap(), 1.0, epsilon = 1e-15);
        let other = BasisSpec::scaling(4, 1).unwrap();
        assert!(matches!(
            evaluate(&e1, other, 0.1),
            Err(Error::DimensionMismatch { .. })
        ));
        assert!(CoefficientVector::new(vec![1.0; 3], spec).is_err());
    }

    #[test]
    fn wavelet_and_scaling_reconstruct_same_function() {
        let f = |x: f64| (2.0 * x).exp() * (5.0 * x).cos();
        for r in 1..=MAX_ORDER {
            for j in 0..5 {
                let s = Basis::new(BasisSpec::scaling(r, j).unwrap()).unwrap();
                let w = Basis::new(BasisSpec::wavelet(r, j).unwrap()).unwrap();
                let ds = s.project(f, rule(10), &[]);
                let dw = w.project(f, rule(10), &[]);
                assert_abs_diff_eq!(ds.norm(), dw.norm(), epsilon = 1e-12);
                for &x in &[0.0, 0.11, 0.5, 0.73, 1.0] {
                    assert_abs_diff_eq!(
                        s.evaluate(&ds, x).unwrap(),
                        w.evaluate(&dw, x).unwrap(),
                        epsilon = 1e-11
                    );
                }
            }
        }
    }

    proptest! {
        #[test]
        fn nesting(r in 1usize..=4, j in 0u32..5, a in -2.0f64..2.0, b in -3.0f64..3.0, kink in 0.05f64..0.95) {
            let f = move |x: f64| (a * x).sin() + b * (x - kink).abs();
            let fine = Basis::new(BasisSpec::scaling(r, j + 1).unwrap()).unwrap();
            let coarse = Basis::new(BasisSpec::scaling(r, j).unwrap()).unwrap();
            let d_fine = fine.project(f, rule(12), &[kink]);
            let via_fine = coarse.project(|x| fine.evaluate(&d_fine, x).unwrap(), rule(12), &fine.breakpoints());
            let direct = coarse.project(f, rule(12), &[kink]);
            for (u, v) in via_fine.values().iter().zip(direct.values()) {
                prop_assert!((u - v).abs() < 1e-12);
            }
        }

        #[test]
        fn change_of_basis_is_unitary(r in 1usize..=4, j in 0u32..6, a in -4.0f64..4.0, c in 0.0f64..1.0) {
            let f = move |x: f64| (a * x).cos() + if x > c { 1.0 } else { 0.0 };
            let s = project(f, BasisSpec::scaling(r, j).unwrap(), rule(12), &[c]).unwrap();
            let w = project(f, BasisSpec::wavelet(r, j).unwrap(), rule(12), &[c]).unwrap();
            prop_assert!((s.norm() - w.norm()).abs() < 1e-12);
        }

        #[test]
        fn projection_is_identity_on_vj(r in 1usize..=4, j in 0u32..4, seed in proptest::collection::vec(-1.0f64..1.0, 64)) {
            let spec = BasisSpec::wavelet(r, j).unwrap();
            let basis = Basis::new(spec).unwrap();
            let c = CoefficientVector::new(seed[..spec.dimension()].to_vec(), spec).unwrap();
            let p = basis.project(|y| basis.evaluate(&c, y).unwrap(), rule(6), &[]);
            for (u, v) in p.values().iter().zip(c.values()) {
                prop_assert!((u - v).abs() < 1e-12);
            }
        }
    }
}
