//! Independent reference prices and convergence measurement.
//!
//! Two oracles share nothing with the Galerkin engine beyond the parameter
//! transform: a Monte Carlo simulation of the discretely monitored option
//! and a Nyström discretization of the same recursion on a dense composite
//! Gauss grid. The Nyström solution doubles as the reference `f_M` for
//! L² error measurement.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::basis::BasisSpec;
use crate::engine::{heat_kernel, GalerkinSolution, Pricer};
use crate::error::{Error, Result};
use crate::format::g6;
use crate::model::{transform, MarketParams, TransformedParams};
use crate::quadrature::{subdivide, QuadratureRule, DEFAULT_POINTS};

/// Paths simulated per random stream.
pub const MC_BLOCK: usize = 4096;
pub const MC_MIN_PATHS: usize = 1000;
pub const MC_GENERATOR: &str = "ChaCha8 (rand_chacha), one stream per 4096-path block";

/// Gauss points per Nyström panel.
pub const NYSTROM_PANEL_POINTS: usize = 16;
pub const NYSTROM_MIN_NODES: usize = 64;
/// Nyström nodes used as the L² reference unless the basis is finer.
pub const REFERENCE_NODES: usize = 2048;

#[derive(Debug, Clone, PartialEq)]
pub struct MCResult {
    pub estimate: f64,
    pub std_error: f64,
    pub paths: usize,
    pub seed: u64,
    pub generator: &'static str,
}

impl MCResult {
    pub const CSV_HEADER: &'static str = "estimate,std_error,paths,seed,generator";

    pub fn to_csv_row(&self) -> String {
        format!(
            "{},{},{},{},\"{}\"",
            g6(self.estimate),
            g6(self.std_error),
            self.paths,
            self.seed,
            self.generator
        )
    }

    /// Whether `price` lies within `k` standard errors of the estimate.
    pub fn within(&self, price: f64, k: f64) -> bool {
        (price - self.estimate).abs() <= k * self.std_error
    }
}

fn validate_for_simulation(p: &MarketParams) -> Result<()> {
    let bad = |name, value, reason| {
        Err(Error::InvalidParameter {
            name,
            value,
            reason,
        })
    };
    if !(p.spot > 0.0 && p.spot.is_finite()) {
        return bad("spot", p.spot, "must be positive");
    }
    if !(p.strike > 0.0 && p.strike.is_finite()) {
        return bad("strike", p.strike, "must be positive");
    }
    if !(p.lower >= 0.0 && p.lower < p.upper) {
        return Err(Error::InvalidBarriers {
            lower: p.lower,
            upper: p.upper,
        });
    }
    if !(p.vol >= 0.0 && p.vol.is_finite()) {
        return bad("vol", p.vol, "must be non-negative");
    }
    if !(p.maturity > 0.0 && p.maturity.is_finite()) {
        return bad("maturity", p.maturity, "must be positive");
    }
    if !p.rate.is_finite() {
        return bad("rate", p.rate, "must be finite");
    }
    if p.monitors == 0 {
        return bad("monitors", 0.0, "at least one monitoring date is required");
    }
    Ok(())
}

/// Monte Carlo price with exact lognormal steps between monitoring dates.
///
/// A path is knocked out if it leaves `(L, U)` at any of `t₁, …, t_M`;
/// inception is not monitored. Accepts `σ = 0`, `L = 0` and `U = ∞`, which
/// the engine does not. Paths are split into fixed blocks with one
/// generator stream each, so the result does not depend on thread count.
pub fn mc_price(p: &MarketParams, paths: usize, seed: u64) -> Result<MCResult> {
    validate_for_simulation(p)?;
    if paths < MC_MIN_PATHS {
        return Err(Error::InvalidParameter {
            name: "paths",
            value: paths as f64,
            reason: "at least 1000 paths are required",
        });
    }
    let tau = p.period();
    let drift = (p.rate - 0.5 * p.vol * p.vol) * tau;
    let diffusion = p.vol * tau.sqrt();
    let discount = (-p.rate * p.maturity).exp();
    let (ln_lower, ln_upper, ln_spot) = (p.lower.ln(), p.upper.ln(), p.spot.ln());

    let blocks = paths.div_ceil(MC_BLOCK);
    let sums: Vec<(f64, f64)> = (0..blocks)
        .into_par_iter()
        .map(|b| {
            let n = MC_BLOCK.min(paths - b * MC_BLOCK);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(b as u64);
            let (mut s1, mut s2) = (0.0, 0.0);
            for _ in 0..n {
                let mut x = ln_spot;
                let mut alive = true;
                for _ in 0..p.monitors {
                    let z: f64 = StandardNormal.sample(&mut rng);
                    x += drift + diffusion * z;
                    if !(x > ln_lower && x < ln_upper) {
                        alive = false;
                        break;
                    }
                }
                if alive {
                    let v = discount * (x.exp() - p.strike).max(0.0);
                    s1 += v;
                    s2 += v * v;
                }
            }
            (s1, s2)
        })
        .collect();

    let (s1, s2) = sums
        .iter()
        .fold((0.0, 0.0), |(a, b), &(x, y)| (a + x, b + y));
    let n = paths as f64;
    let mean = s1 / n;
    let var = ((s2 - n * mean * mean) / (n - 1.0)).max(0.0);
    Ok(MCResult {
        estimate: mean,
        std_error: (var / n).sqrt(),
        paths,
        seed,
        generator: MC_GENERATOR,
    })
}

/// `f_M` represented by the quadrature sum of its last kernel application,
/// `f_M(z) = Σ_j w_j f_{M-1}(ξ_j) κ(z - ξ_j, τ)`.
#[derive(Debug, Clone)]
pub struct NystromSolution {
    transformed: TransformedParams,
    nodes: usize,
    source_points: Vec<f64>,
    source_weights: Vec<f64>,
}

impl NystromSolution {
    pub fn transformed(&self) -> &TransformedParams {
        &self.transformed
    }

    pub fn nodes(&self) -> usize {
        self.nodes
    }

    /// `f_M(z)`; defined for every real `z`.
    pub fn value_at(&self, z: f64) -> f64 {
        let tp = &self.transformed;
        self.source_points
            .iter()
            .zip(&self.source_weights)
            .map(|(&x, &w)| w * heat_kernel(z - x, tp.tau, tp.csq, tp.theta))
            .sum()
    }

    /// `e^{αz₀ + βT} f_M(z₀/θ)`, clamped at zero.
    pub fn price(&self) -> f64 {
        let tp = &self.transformed;
        (tp.price_multiplier() * self.value_at(tp.unit_spot())).max(0.0)
    }
}

/// Solves the monitoring recursion on `nodes` composite Gauss points
/// (rounded up to whole panels of 16).
///
/// The first kernel application integrates `f₀` exactly across its kink at
/// `δ/θ`; the later ones use the uniform panel grid, on which every
/// `f_m`, `m ≥ 1`, is smooth.
pub fn nystrom_solution(p: &MarketParams, nodes: usize) -> Result<NystromSolution> {
    let tp = transform(p)?;
    if nodes < NYSTROM_MIN_NODES {
        return Err(Error::InvalidParameter {
            name: "nodes",
            value: nodes as f64,
            reason: "at least 64 nodes are required",
        });
    }
    let rule = QuadratureRule::cached(NYSTROM_PANEL_POINTS)?;
    let panels = nodes.div_ceil(NYSTROM_PANEL_POINTS);
    let panel_cuts: Vec<f64> = (1..panels).map(|i| i as f64 / panels as f64).collect();

    let start = tp.payoff_start();
    let (mut src_x, mut src_w) = (Vec::new(), Vec::new());
    if !tp.degenerate_payoff && start < 1.0 {
        for w in subdivide(start, 1.0, &panel_cuts).windows(2) {
            for (x, wt) in rule.mapped(w[0], w[1]) {
                src_x.push(x);
                src_w.push(wt * tp.payoff_f0(x));
            }
        }
    }

    if tp.monitors > 1 && !src_x.is_empty() {
        let mut grid = Vec::with_capacity(panels * NYSTROM_PANEL_POINTS);
        let mut weights = Vec::with_capacity(grid.capacity());
        for i in 0..panels {
            let (a, b) = (i as f64 / panels as f64, (i + 1) as f64 / panels as f64);
            for (x, w) in rule.mapped(a, b) {
                grid.push(x);
                weights.push(w);
            }
        }
        let kernel = |d: f64| heat_kernel(d, tp.tau, tp.csq, tp.theta);
        let mut f: Vec<f64> = grid
            .iter()
            .map(|&z| {
                src_x
                    .iter()
                    .zip(&src_w)
                    .map(|(&x, &w)| w * kernel(z - x))
                    .sum()
            })
            .collect();
        if tp.monitors > 2 {
            let n = grid.len();
            let mut a = vec![0.0; n * n];
            for i in 0..n {
                for j in 0..n {
                    a[i * n + j] = weights[j] * kernel(grid[i] - grid[j]);
                }
            }
            for _ in 2..tp.monitors {
                f = (0..n)
                    .map(|i| {
                        a[i * n..(i + 1) * n]
                            .iter()
                            .zip(&f)
                            .map(|(k, v)| k * v)
                            .sum()
                    })
                    .collect();
            }
        }
        src_w = weights.iter().zip(&f).map(|(w, v)| w * v).collect();
        src_x = grid;
    }

    Ok(NystromSolution {
        transformed: tp,
        nodes: panels * NYSTROM_PANEL_POINTS,
        source_points: src_x,
        source_weights: src_w,
    })
}

/// Reference price from the Nyström recursion.
///
/// Inception is not monitored, so a spot on or outside a barrier still has
/// a (limit) value here, matching [`mc_price`].
pub fn direct_quadrature_price(p: &MarketParams, nodes: usize) -> Result<f64> {
    Ok(nystrom_solution(p, nodes)?.price())
}

/// `‖f̃ - reference‖_{L²[0,1]}` by per-cell Gauss quadrature.
pub fn l2_distance(solution: &GalerkinSolution, reference: impl Fn(f64) -> f64) -> f64 {
    let rule = QuadratureRule::cached(DEFAULT_POINTS).expect("default rule");
    let cells = solution.basis.cells();
    let mut sum = 0.0;
    for c in 0..cells {
        let (a, b) = (c as f64 / cells as f64, (c + 1) as f64 / cells as f64);
        sum += rule.apply(a, b, |z| (solution.value_at(z) - reference(z)).powi(2));
    }
    sum.sqrt()
}

/// L² error of the Galerkin `f̃_{M,J}` for `spec` against `reference`.
pub fn l2_error(spec: BasisSpec, p: &MarketParams, reference: impl Fn(f64) -> f64) -> Result<f64> {
    let rule = QuadratureRule::cached(DEFAULT_POINTS)?;
    let sol = Pricer::new(spec, rule.clone()).solve(p)?;
    Ok(l2_distance(&sol, reference))
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceReport {
    pub order: usize,
    pub levels: Vec<u32>,
    pub errors: Vec<f64>,
    /// `e₂(J-1)/e₂(J)` for consecutive levels.
    pub ratios: Vec<f64>,
    /// Least-squares slope of `log₂ e₂` against `J`.
    pub fitted_slope: f64,
    pub reference_nodes: usize,
}

impl ConvergenceReport {
    pub const CSV_HEADER: &'static str = "J,e2,ratio,slope";

    /// Whether the errors decrease strictly with `J`.
    pub fn is_monotone(&self) -> bool {
        self.errors.windows(2).all(|w| w[1] < w[0])
    }

    /// One row per level; the first level has an empty ratio.
    pub fn csv_rows(&self) -> Vec<String> {
        self.levels
            .iter()
            .enumerate()
            .map(|(i, j)| {
                let ratio = if i == 0 {
                    String::new()
                } else {
                    g6(self.ratios[i - 1])
                };
                format!(
                    "{j},{},{ratio},{}",
                    g6(self.errors[i]),
                    g6(self.fitted_slope)
                )
            })
            .collect()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from(Self::CSV_HEADER);
        out.push('\n');
        for row in self.csv_rows() {
            out.push_str(&row);
            out.push('\n');
        }
        out
    }
}

/// Slope of the least-squares line through `(x, y)`.
pub fn least_squares_slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    sxy / sxx
}

pub const MIN_STUDY_LEVEL: u32 = 3;
pub const MAX_STUDY_LEVEL: u32 = 8;

/// L² errors of the scaling-basis solution of order `r` for
/// `J = j_min..=j_max` against a Nyström reference.
pub fn convergence_study(
    p: &MarketParams,
    r: usize,
    j_min: u32,
    j_max: u32,
) -> Result<ConvergenceReport> {
    if j_min < MIN_STUDY_LEVEL {
        return Err(Error::LevelOutOfRange(j_min));
    }
    if j_max > MAX_STUDY_LEVEL || j_max <= j_min {
        return Err(Error::LevelOutOfRange(j_max));
    }
    let nodes = REFERENCE_NODES.max(4 * (1 << j_max));
    let reference = nystrom_solution(p, nodes)?;
    let levels: Vec<u32> = (j_min..=j_max).collect();
    let errors = levels
        .iter()
        .map(|&j| l2_error(BasisSpec::scaling(r, j)?, p, |z| reference.value_at(z)))
        .collect::<Result<Vec<f64>>>()?;
    let ratios = errors.windows(2).map(|w| w[0] / w[1]).collect();
    let xs: Vec<f64> = levels.iter().map(|&j| j as f64).collect();
    let ys: Vec<f64> = errors.iter().map(|e| e.log2()).collect();
    Ok(ConvergenceReport {
        order: r,
        levels,
        errors,
        ratios,
        fitted_slope: least_squares_slope(&xs, &ys),
        reference_nodes: reference.nodes(),
    })
}
