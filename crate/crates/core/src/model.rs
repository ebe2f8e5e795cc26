//! Contract inputs and the reduction of Black–Scholes to a heat-kernel
//! recursion on `[0, 1]`.
//!
//! With `z = ln(S/L)` and `C = e^{αz + βt} h`, the pricing equation between
//! monitoring dates becomes `h_t = c² h_zz` with `c² = σ²/2`. Rescaling
//! `z ∈ [0, θ]`, `θ = ln(U/L)`, onto `[0, 1]` turns each monitoring period
//! into one application of a Gaussian integral operator on the unit interval.

use crate::error::{Error, Result};

/// Market and contract inputs for a knock-out double barrier call.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MarketParams {
    pub spot: f64,
    pub strike: f64,
    pub lower: f64,
    pub upper: f64,
    /// Continuously compounded risk-free rate, per year.
    pub rate: f64,
    /// Volatility, per square-root year.
    pub vol: f64,
    /// Time to maturity in years.
    pub maturity: f64,
    /// Number of equally spaced monitoring dates, the last one at maturity.
    pub monitors: usize,
}

impl MarketParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.lower > 0.0 && self.lower < self.upper && self.upper.is_finite()) {
            return Err(Error::InvalidBarriers {
                lower: self.lower,
                upper: self.upper,
            });
        }
        positive("strike", self.strike)?;
        positive("vol", self.vol)?;
        positive("maturity", self.maturity)?;
        positive("spot", self.spot)?;
        if !self.rate.is_finite() {
            return Err(Error::InvalidParameter {
                name: "rate",
                value: self.rate,
                reason: "must be finite",
            });
        }
        if self.monitors == 0 {
            return Err(Error::InvalidParameter {
                name: "monitors",
                value: 0.0,
                reason: "at least one monitoring date is required",
            });
        }
        Ok(())
    }

    /// `τ = T / M`.
    pub fn period(&self) -> f64 {
        self.maturity / self.monitors as f64
    }

    pub fn with_lower(self, lower: f64) -> Self {
        Self { lower, ..self }
    }

    pub fn with_spot(self, spot: f64) -> Self {
        Self { spot, ..self }
    }

    pub fn with_monitors(self, monitors: usize) -> Self {
        Self { monitors, ..self }
    }
}

fn positive(name: &'static str, value: f64) -> Result<()> {
    if value > 0.0 && value.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter {
            name,
            value,
            reason: "must be positive and finite",
        })
    }
}

/// Down-and-out call inputs; priced as a double barrier with a distant
/// synthetic upper barrier.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DownOutParams {
    pub spot: f64,
    pub strike: f64,
    pub lower: f64,
    pub rate: f64,
    pub vol: f64,
    pub maturity: f64,
    pub monitors: usize,
}

impl DownOutParams {
    /// Synthetic upper barrier as a multiple of the strike.
    pub const UPPER_MULTIPLE: f64 = 2.5;

    pub fn to_double_barrier(&self) -> MarketParams {
        MarketParams {
            spot: self.spot,
            strike: self.strike,
            lower: self.lower,
            upper: Self::UPPER_MULTIPLE * self.strike,
            rate: self.rate,
            vol: self.vol,
            maturity: self.maturity,
            monitors: self.monitors,
        }
    }
}

/// Constants of the heat-equation form of the problem.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransformedParams {
    /// `μ = r̂ - σ²/2`.
    pub mu: f64,
    /// `α = -μ/σ²`.
    pub alpha: f64,
    /// `β = αμ + α²σ²/2 - r̂`.
    pub beta: f64,
    /// Diffusion coefficient `c² = σ²/2`.
    pub csq: f64,
    /// `θ = ln(U/L)`.
    pub theta: f64,
    /// `E* = ln(E/L)`.
    pub estar: f64,
    /// `δ = max(E*, 0)`.
    pub delta: f64,
    /// Monitoring period `τ = T/M`.
    pub tau: f64,
    /// `z₀ = ln(S₀/L)`.
    pub z0: f64,
    pub maturity: f64,
    pub lower: f64,
    pub monitors: usize,
    /// Set when `E ≥ U`: the payoff region is empty and the option is
    /// worthless.
    pub degenerate_payoff: bool,
}

/// Computes the change-of-variables constants for `p`.
pub fn transform(p: &MarketParams) -> Result<TransformedParams> {
    p.validate()?;
    let sigma2 = p.vol * p.vol;
    let mu = p.rate - 0.5 * sigma2;
    let alpha = -mu / sigma2;
    let beta = alpha * mu + alpha * alpha * sigma2 / 2.0 - p.rate;
    let theta = (p.upper / p.lower).ln();
    let estar = (p.strike / p.lower).ln();
    Ok(TransformedParams {
        mu,
        alpha,
        beta,
        csq: 0.5 * sigma2,
        theta,
        estar,
        delta: estar.max(0.0),
        tau: p.period(),
        z0: (p.spot / p.lower).ln(),
        maturity: p.maturity,
        lower: p.lower,
        monitors: p.monitors,
        degenerate_payoff: p.strike >= p.upper,
    })
}

impl TransformedParams {
    /// Left end of the payoff support on `[0, 1]`, `δ/θ`.
    pub fn payoff_start(&self) -> f64 {
        self.delta / self.theta
    }

    /// Spot in unit-interval coordinates, `z₀/θ`.
    pub fn unit_spot(&self) -> f64 {
        self.z0 / self.theta
    }

    /// Whether the spot lies strictly between the barriers.
    pub fn spot_inside(&self) -> bool {
        self.z0 > 0.0 && self.z0 < self.theta
    }

    /// Scaled payoff `f₀(z) = L e^{-αθz} (e^{θz} - e^{E*}) 1[δ/θ ≤ z ≤ 1]`.
    pub fn payoff_f0(&self, z: f64) -> f64 {
        if self.degenerate_payoff || z < self.payoff_start() || z > 1.0 {
            return 0.0;
        }
        let tz = self.theta * z;
        let v = self.lower * (-self.alpha * tz).exp() * (tz.exp() - self.estar.exp());
        v.max(0.0)
    }

    /// Discount factor `e^{αz₀ + βT}` mapping `f_M(z₀/θ)` back to a price.
    pub fn price_multiplier(&self) -> f64 {
        (self.alpha * self.z0 + self.beta * self.maturity).exp()
    }
}

/// `e^{αz₀ + βT} · fval`, failing when the spot is not strictly inside the
/// barriers.
pub fn untransform_price(tp: &TransformedParams, fval: f64) -> Result<f64> {
    if !tp.spot_inside() {
        return Err(Error::SpotOutsideBarriers {
            spot: tp.lower * tp.z0.exp(),
            lower: tp.lower,
            upper: tp.lower * tp.theta.exp(),
        });
    }
    Ok(tp.price_multiplier() * fval)
}
