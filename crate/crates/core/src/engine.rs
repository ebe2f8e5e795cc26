//! Operational matrix assembly and pricing.
//!
//! On `V_J` the projected smoothing operator `P_J 𝒦` is the symmetric matrix
//! `K_ij = ∫∫ ψ̄_i(η) ψ̄_j(ξ) κ(η - ξ, τ) dξ dη`. The payoff enters through
//! `F₁ = P_J 𝒦 f₀`, and the coefficients after the last monitoring date are
//! `F_M = K^{M-1} F₁`. Pricing cost beyond assembly is `M - 1` dense
//! matrix–vector products.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::{Arc, Mutex};
use std::time::Instant;

use crate::basis::{Basis, BasisKind, BasisSpec, CoefficientVector};
use crate::error::{Error, Result};
use crate::linalg::DenseMatrix;
use crate::model::{transform, DownOutParams, MarketParams, TransformedParams};
use crate::quadrature::{subdivide, QuadratureRule, DEFAULT_POINTS};

/// Scaled heat kernel `κ(z, τ) = θ / √(4πc²τ) · exp(-(θz)² / (4c²τ))`.
pub fn heat_kernel(z: f64, tau: f64, csq: f64, theta: f64) -> f64 {
    let var4 = 4.0 * csq * tau;
    let tz = theta * z;
    theta / (PI * var4).sqrt() * (-tz * tz / var4).exp()
}

/// Whether the kernel is narrower than the basis cells it is integrated
/// over: `4c²τ/θ² < (2^{-J})² / 4`.
pub fn kernel_narrower_than_cell(spec: BasisSpec, tp: &TransformedParams) -> bool {
    let h = 1.0 / spec.cells() as f64;
    4.0 * tp.csq * tp.tau / (tp.theta * tp.theta) < 0.25 * h * h
}

/// The matrix of `P_J 𝒦` in an orthonormal basis of `V_J`.
#[derive(Debug, Clone, PartialEq)]
pub struct OperatorMatrix {
    entries: DenseMatrix,
    spec: BasisSpec,
    tau: f64,
    theta: f64,
    csq: f64,
}

impl OperatorMatrix {
    pub fn entries(&self) -> &DenseMatrix {
        &self.entries
    }

    pub fn spec(&self) -> BasisSpec {
        self.spec
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn csq(&self) -> f64 {
        self.csq
    }

    pub fn dimension(&self) -> usize {
        self.spec.dimension()
    }

    pub fn apply(&self, v: &CoefficientVector) -> Result<CoefficientVector> {
        self.check(v)?;
        CoefficientVector::new(self.entries.matvec(v.values())?, self.spec)
    }

    pub fn max_asymmetry(&self) -> f64 {
        self.entries.max_asymmetry()
    }

    pub fn spectral_radius_estimate(&self, iterations: usize) -> f64 {
        self.entries.spectral_radius_estimate(iterations)
    }

    fn check(&self, v: &CoefficientVector) -> Result<()> {
        if v.spec().dimension() != self.dimension() {
            return Err(Error::DimensionMismatch {
                expected: self.dimension(),
                found: v.values().len(),
            });
        }
        Ok(())
    }
}

/// Assembles `K` by tensor Gauss–Legendre quadrature on every pair of
/// basis cells.
///
/// Only pairs `(c, c')` with `c ≤ c'` are integrated; the mirrored pair
/// contributes the transpose because `κ` is even. The weighted kernel on a
/// cell pair depends only on the cell offset, so it is tabulated once per
/// offset.
pub fn assemble_k(
    spec: BasisSpec,
    tp: &TransformedParams,
    rule: &QuadratureRule,
) -> Result<OperatorMatrix> {
    let basis = Basis::new(spec)?;
    let n = spec.dimension();
    let cells = basis.cells();
    let h = basis.cell_width();
    let q = rule.npoints();

    let samples: Vec<_> = (0..cells).map(|c| basis.sample_cell(c, rule)).collect();
    let local_w: Vec<f64> = rule.weights().iter().map(|w| 0.5 * h * w).collect();
    // kernel_table[o][p * q + s]: weighted κ between node p of cell c and
    // node s of cell c + o.
    let kernel_table: Vec<Vec<f64>> = (0..cells)
        .map(|o| {
            let mut g = vec![0.0; q * q];
            for p in 0..q {
                for s in 0..q {
                    let d = -(o as f64) * h + 0.5 * h * (rule.nodes()[p] - rule.nodes()[s]);
                    g[p * q + s] =
                        local_w[p] * local_w[s] * heat_kernel(d, tp.tau, tp.csq, tp.theta);
                }
            }
            g
        })
        .collect();

    let mut k = DenseMatrix::zeros(n, n);
    let mut t = Vec::new();
    for (ca, a) in samples.iter().enumerate() {
        for (cb, b) in samples.iter().enumerate().skip(ca) {
            let g = &kernel_table[cb - ca];
            let nb = b.active.len();
            // t[p][bj] = Σ_s g[p][s] b_bj(ξ_s)
            t.clear();
            t.resize(q * nb, 0.0);
            for p in 0..q {
                let grow = &g[p * q..(p + 1) * q];
                for (bj, bv) in b.values.iter().enumerate() {
                    t[p * nb + bj] = grow.iter().zip(bv).map(|(x, y)| x * y).sum();
                }
            }
            for (ai, &i) in a.active.iter().enumerate() {
                let av = &a.values[ai];
                for (bj, &j) in b.active.iter().enumerate() {
                    let v: f64 = (0..q).map(|p| av[p] * t[p * nb + bj]).sum();
                    k[(i, j)] += v;
                    if ca != cb {
                        k[(j, i)] += v;
                    }
                }
            }
        }
    }
    Ok(OperatorMatrix {
        entries: k,
        spec,
        tau: tp.tau,
        theta: tp.theta,
        csq: tp.csq,
    })
}

/// Coefficients of `P_J 𝒦 f₀`.
///
/// The inner integral over `ξ` is split at the payoff kink `δ/θ` and at the
/// basis cell boundaries.
pub fn assemble_f1(
    spec: BasisSpec,
    tp: &TransformedParams,
    rule: &QuadratureRule,
) -> Result<CoefficientVector> {
    let basis = Basis::new(spec)?;
    let start = tp.payoff_start();
    if tp.degenerate_payoff || start >= 1.0 {
        return Ok(CoefficientVector::zeros(spec));
    }
    let cuts = subdivide(start, 1.0, &basis.breakpoints());
    let source: Vec<(f64, f64)> = cuts
        .windows(2)
        .flat_map(|w| rule.mapped(w[0], w[1]).collect::<Vec<_>>())
        .map(|(x, w)| (x, w * tp.payoff_f0(x)))
        .collect();

    let mut coeffs = vec![0.0; spec.dimension()];
    for cell in 0..basis.cells() {
        let s = basis.sample_cell(cell, rule);
        let smoothed: Vec<f64> = s
            .points
            .iter()
            .map(|&eta| {
                source
                    .iter()
                    .map(|&(xi, wf)| wf * heat_kernel(eta - xi, tp.tau, tp.csq, tp.theta))
                    .sum()
            })
            .collect();
        for (a, &i) in s.active.iter().enumerate() {
            coeffs[i] += s.values[a]
                .iter()
                .zip(&smoothed)
                .zip(&s.weights)
                .map(|((v, g), w)| v * g * w)
                .sum::<f64>();
        }
    }
    CoefficientVector::new(coeffs, spec)
}

/// `F_M = K^{M-1} F₁` by `M - 1` successive matrix–vector products.
pub fn propagate(
    k: &OperatorMatrix,
    f1: &CoefficientVector,
    monitors: usize,
) -> Result<CoefficientVector> {
    if monitors == 0 {
        return Err(Error::InvalidParameter {
            name: "monitors",
            value: 0.0,
            reason: "at least one monitoring date is required",
        });
    }
    k.check(f1)?;
    let mut f = f1.clone();
    for _ in 1..monitors {
        f = k.apply(&f)?;
    }
    Ok(f)
}

/// Treatment of a spot lying exactly on a barrier at inception.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum SpotOnBarrier {
    /// The option is knocked out and worth zero.
    #[default]
    KnockedOut,
    /// Inception is not a monitoring date; the price is the limit of the
    /// price from inside the corridor.
    Limit,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct PricingOptions {
    pub spot_on_barrier: SpotOnBarrier,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PriceResult {
    pub price: f64,
    /// Basis dimension `N`.
    pub dimension: usize,
    pub monitors: usize,
    /// Wall-clock seconds spent assembling `K` and `F₁`.
    pub t_assembly: f64,
    /// Wall-clock seconds spent propagating and evaluating.
    pub t_propagation: f64,
    pub basis_kind: BasisKind,
    /// Spot on or outside a barrier; the price is zero by convention.
    pub knocked_out: bool,
    /// Single-barrier price obtained through a synthetic upper barrier.
    pub approximation: bool,
    /// The kernel was narrower than a basis cell.
    pub kernel_warning: bool,
}

/// `f̃_{M,J}` together with the transform it belongs to.
#[derive(Debug, Clone)]
pub struct GalerkinSolution {
    pub basis: Basis,
    pub transformed: TransformedParams,
    pub coefficients: CoefficientVector,
    pub t_assembly: f64,
    pub t_propagation: f64,
}

impl GalerkinSolution {
    /// `f̃_{M,J}(z)` for `z ∈ [0, 1]`.
    pub fn value_at(&self, z: f64) -> f64 {
        self.basis.evaluate_slice(self.coefficients.values(), z)
    }
}

type KernelKey = (u64, u64, u64);

/// Prices contracts for one basis specification, caching `K` per
/// `(τ, θ, c²)`.
#[derive(Debug)]
pub struct Pricer {
    spec: BasisSpec,
    rule: QuadratureRule,
    options: PricingOptions,
    cache: Mutex<HashMap<KernelKey, Arc<OperatorMatrix>>>,
}

impl Pricer {
    pub fn new(spec: BasisSpec, rule: QuadratureRule) -> Self {
        Self {
            spec,
            rule,
            options: PricingOptions::default(),
            cache: Mutex::new(HashMap::new()),
        }
    }

    /// `(r = 4, J = 5)` scaling basis with the default kernel quadrature.
    pub fn with_defaults() -> Self {
        let spec = BasisSpec::scaling(4, 5).expect("valid default spec");
        let rule = QuadratureRule::cached(DEFAULT_POINTS).expect("valid default rule");
        Self::new(spec, rule.clone())
    }

    pub fn with_options(mut self, options: PricingOptions) -> Self {
        self.options = options;
        self
    }

    pub fn spec(&self) -> BasisSpec {
        self.spec
    }

    pub fn rule(&self) -> &QuadratureRule {
        &self.rule
    }

    /// The operational matrix for `tp`, assembled on first use.
    pub fn operator(&self, tp: &TransformedParams) -> Result<Arc<OperatorMatrix>> {
        let key = (tp.tau.to_bits(), tp.theta.to_bits(), tp.csq.to_bits());
        if let Some(k) = self.cache.lock().expect("cache poisoned").get(&key) {
            return Ok(Arc::clone(k));
        }
        let k = Arc::new(assemble_k(self.spec, tp, &self.rule)?);
        self.cache
            .lock()
            .expect("cache poisoned")
            .insert(key, Arc::clone(&k));
        Ok(k)
    }

    /// Computes `F_M` without evaluating at the spot.
    pub fn solve(&self, p: &MarketParams) -> Result<GalerkinSolution> {
        let tp = transform(p)?;
        let basis = Basis::new(self.spec)?;
        let start = Instant::now();
        let k = self.operator(&tp)?;
        let f1 = assemble_f1(self.spec, &tp, &self.rule)?;
        let t_assembly = start.elapsed().as_secs_f64();
        let start = Instant::now();
        let coefficients = propagate(&k, &f1, p.monitors)?;
        let t_propagation = start.elapsed().as_secs_f64();
        Ok(GalerkinSolution {
            basis,
            transformed: tp,
            coefficients,
            t_assembly,
            t_propagation,
        })
    }

    pub fn price(&self, p: &MarketParams) -> Result<PriceResult> {
        let tp = transform(p)?;
        let mut result = PriceResult {
            price: 0.0,
            dimension: self.spec.dimension(),
            monitors: p.monitors,
            t_assembly: 0.0,
            t_propagation: 0.0,
            basis_kind: self.spec.kind(),
            knocked_out: false,
            approximation: false,
            kernel_warning: kernel_narrower_than_cell(self.spec, &tp),
        };
        let on_barrier = tp.z0 == 0.0 || tp.z0 == tp.theta;
        let evaluable = tp.spot_inside()
            || (on_barrier && self.options.spot_on_barrier == SpotOnBarrier::Limit);
        if !evaluable {
            result.knocked_out = true;
            return Ok(result);
        }
        if tp.degenerate_payoff {
            return Ok(result);
        }
        let sol = self.solve(p)?;
        let start = Instant::now();
        let fval = sol.value_at(tp.unit_spot().clamp(0.0, 1.0));
        let price = tp.price_multiplier() * fval;
        result.t_assembly = sol.t_assembly;
        result.t_propagation = sol.t_propagation + start.elapsed().as_secs_f64();
        // Projection noise can leave values of order 1e-16 below zero.
        result.price = price.max(0.0);
        Ok(result)
    }

    /// Down-and-out call via a double barrier with `U = 2.5 E`.
    pub fn price_single_down_out(&self, p: &DownOutParams) -> Result<PriceResult> {
        let mut r = self.price(&p.to_double_barrier())?;
        r.approximation = true;
        Ok(r)
    }
}

/// One-shot double barrier price with a fresh (uncached) operator.
pub fn price_double_barrier(
    p: &MarketParams,
    spec: BasisSpec,
    rule: &QuadratureRule,
) -> Result<PriceResult> {
    Pricer::new(spec, rule.clone()).price(p)
}

/// One-shot down-and-out price with a synthetic upper barrier at `2.5 E`.
pub fn price_single_down_out(
    p: &DownOutParams,
    spec: BasisSpec,
    rule: &QuadratureRule,
) -> Result<PriceResult> {
    Pricer::new(spec, rule.clone()).price_single_down_out(p)
}
