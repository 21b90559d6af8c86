//! Per-slot reservation loss and its gradient.
//!
//! `f(x, y) = -V·a·ln(1 + (x̃ + ỹ)ᵀθ) + pᵀx̃ + qᵀỹ`, where `x̃ = α⊙x` and
//! `ỹ = β⊙y` are the delivered amounts (identity when no SLA ratios are set).

use crate::domain::{Decision, GradVector};
use crate::error::{ensure_len, Error, Result};

/// Environment realized in one slot.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceSlot {
    /// Demand `a`.
    pub demand: f64,
    /// In-advance unit prices `p`.
    pub price_adv: Vec<f64>,
    /// Spot unit prices `q`.
    pub price_spot: Vec<f64>,
    /// Per-resource contribution `θ`.
    pub theta: Vec<f64>,
    /// In-advance fulfillment ratios `α`.
    pub alpha: Option<Vec<f64>>,
    /// Spot fulfillment ratios `β`.
    pub beta: Option<Vec<f64>>,
}

impl TraceSlot {
    pub fn new(demand: f64, price_adv: Vec<f64>, price_spot: Vec<f64>, theta: Vec<f64>) -> Result<Self> {
        let slot = Self {
            demand,
            price_adv,
            price_spot,
            theta,
            alpha: None,
            beta: None,
        };
        slot.validate()?;
        Ok(slot)
    }

    pub fn with_sla(mut self, alpha: Vec<f64>, beta: Vec<f64>) -> Result<Self> {
        self.alpha = Some(alpha);
        self.beta = Some(beta);
        self.validate()?;
        Ok(self)
    }

    pub fn resources(&self) -> usize {
        self.theta.len()
    }

    pub fn validate(&self) -> Result<()> {
        let m = self.theta.len();
        ensure_len(m, self.price_adv.len())?;
        ensure_len(m, self.price_spot.len())?;
        if !(self.demand.is_finite() && self.demand >= 0.0) {
            return Err(Error::Domain(format!("demand must be nonnegative, got {}", self.demand)));
        }
        let nonneg = |v: &[f64]| v.iter().all(|x| x.is_finite() && *x >= 0.0);
        if !nonneg(&self.price_adv) || !nonneg(&self.price_spot) || !nonneg(&self.theta) {
            return Err(Error::Domain("prices and contributions must be nonnegative".into()));
        }
        for ratios in [&self.alpha, &self.beta].into_iter().flatten() {
            ensure_len(m, ratios.len())?;
            if ratios.iter().any(|r| !(*r > 0.0 && *r <= 1.0)) {
                return Err(Error::Domain("fulfillment ratios must lie in (0, 1]".into()));
            }
        }
        Ok(())
    }

    fn alpha_at(&self, i: usize) -> f64 {
        self.alpha.as_ref().map_or(1.0, |a| a[i])
    }

    fn beta_at(&self, i: usize) -> f64 {
        self.beta.as_ref().map_or(1.0, |b| b[i])
    }

    /// `1 + (x̃ + ỹ)ᵀθ`.
    fn utility_arg(&self, z: &Decision) -> Result<f64> {
        let m = self.resources();
        ensure_len(m, z.x.len())?;
        ensure_len(m, z.y.len())?;
        let s: f64 = (0..m)
            .map(|i| (self.alpha_at(i) * z.x[i] + self.beta_at(i) * z.y[i]) * self.theta[i])
            .sum();
        let arg = 1.0 + s;
        if arg > 0.0 && arg.is_finite() {
            Ok(arg)
        } else {
            Err(Error::Domain(format!("log argument {arg} is not positive")))
        }
    }
}

/// Weight `V ≥ 1` of the utility term against payments.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossConfig {
    v: f64,
}

impl LossConfig {
    pub fn new(v: f64) -> Result<Self> {
        if v.is_finite() && v >= 1.0 {
            Ok(Self { v })
        } else {
            Err(Error::Config(format!("V must be >= 1, got {v}")))
        }
    }

    pub fn v(&self) -> f64 {
        self.v
    }
}

impl Default for LossConfig {
    fn default() -> Self {
        Self { v: 2.0 }
    }
}

pub fn loss_value(slot: &TraceSlot, z: &Decision, cfg: &LossConfig) -> Result<f64> {
    let arg = slot.utility_arg(z)?;
    let payment: f64 = (0..slot.resources())
        .map(|i| {
            slot.price_adv[i] * slot.alpha_at(i) * z.x[i] + slot.price_spot[i] * slot.beta_at(i) * z.y[i]
        })
        .sum();
    Ok(-cfg.v * slot.demand * arg.ln() + payment)
}

pub fn loss_gradient(slot: &TraceSlot, z: &Decision, cfg: &LossConfig) -> Result<GradVector> {
    let arg = slot.utility_arg(z)?;
    let m = slot.resources();
    let marginal = cfg.v * slot.demand / arg;
    let mut g = vec![0.0; 2 * m];
    for i in 0..m {
        let (a, b) = (slot.alpha_at(i), slot.beta_at(i));
        g[i] = a * (slot.price_adv[i] - marginal * slot.theta[i]);
        g[m + i] = b * (slot.price_spot[i] - marginal * slot.theta[i]);
    }
    GradVector::new(g)
}
