//! Online reservation policies: classical FTRL with a Euclidean regularizer
//! and optimistic FTRL with adaptive proximal regularizers (OOLR).

use crate::domain::{Decision, FeasibleBox, GradVector};
use crate::error::{ensure_len, Error, Result};

/// Guard for the self-confident FTRL step size.
pub const FTRL_GRAD_EPS: f64 = 1e-12;

/// A gradient forecast `∇f̂_{t+1}(ẑ_{t+1})` consumed by one decision.
#[derive(Debug, Clone, PartialEq)]
pub struct Prediction {
    pub grad_hat: GradVector,
}

impl Prediction {
    pub fn new(grad_hat: GradVector) -> Self {
        Self { grad_hat }
    }

    pub fn zeros(m: usize) -> Self {
        Self {
            grad_hat: GradVector::zeros(m),
        }
    }
}

/// `σ = √2/D`, the scale minimizing the regret bound.
pub fn optimal_sigma(bx: &FeasibleBox) -> f64 {
    std::f64::consts::SQRT_2 / bx.diameter()
}

/// Raw accumulator values for rebuilding an [`OolrState`].
#[derive(Debug, Clone, PartialEq)]
pub struct OolrParts {
    pub sigma: f64,
    pub grad_sum: Vec<f64>,
    pub weighted_center_sum: Vec<f64>,
    pub sigma_sum: f64,
    pub h_sum: f64,
    pub last_decision: Decision,
    pub t: usize,
}

/// Accumulators of optimistic FTRL.
///
/// The proximal regularizers `r_i(z) = σ_i/2·||z - z_i||²` sum to
/// `σ_{1:t}/2·||z - c̄||² + const` with `c̄ = Σσ_i·z_i / σ_{1:t}`, so only
/// the weighted center sum and `σ_{1:t}` are kept.
#[derive(Debug, Clone, PartialEq)]
pub struct OolrState {
    sigma: f64,
    grad_sum: Vec<f64>,
    weighted_center_sum: Vec<f64>,
    sigma_sum: f64,
    h_sum: f64,
    last_decision: Decision,
    t: usize,
}

impl OolrState {
    pub fn init(bx: &FeasibleBox, sigma: f64, z1: Decision) -> Result<Self> {
        if !(sigma.is_finite() && sigma > 0.0) {
            return Err(Error::Config(format!("sigma must be positive, got {sigma}")));
        }
        if !bx.contains(&z1) {
            return Err(Error::Infeasible(format!("initial decision {z1:?} lies outside the box")));
        }
        let n = bx.dim();
        Ok(Self {
            sigma,
            grad_sum: vec![0.0; n],
            weighted_center_sum: vec![0.0; n],
            sigma_sum: 0.0,
            h_sum: 0.0,
            last_decision: z1,
            t: 1,
        })
    }

    /// Rebuilds a state from stored accumulators (replay and oracle checks).
    pub fn from_parts(parts: OolrParts) -> Result<Self> {
        let n = parts.grad_sum.len();
        ensure_len(n, parts.weighted_center_sum.len())?;
        ensure_len(n, 2 * parts.last_decision.resources())?;
        if !(parts.sigma > 0.0) || parts.sigma_sum < 0.0 || parts.h_sum < 0.0 || parts.t == 0 {
            return Err(Error::Config("invalid OOLR accumulators".into()));
        }
        Ok(Self {
            sigma: parts.sigma,
            grad_sum: parts.grad_sum,
            weighted_center_sum: parts.weighted_center_sum,
            sigma_sum: parts.sigma_sum,
            h_sum: parts.h_sum,
            last_decision: parts.last_decision,
            t: parts.t,
        })
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }
    pub fn grad_sum(&self) -> &[f64] {
        &self.grad_sum
    }
    pub fn weighted_center_sum(&self) -> &[f64] {
        &self.weighted_center_sum
    }
    pub fn sigma_sum(&self) -> f64 {
        self.sigma_sum
    }
    pub fn h_sum(&self) -> f64 {
        self.h_sum
    }
    pub fn last_decision(&self) -> &Decision {
        &self.last_decision
    }
    pub fn t(&self) -> usize {
        self.t
    }

    /// Exact minimizer over `Δ²` of `r_{1:t}(z) + (Σ∇f_i + ∇f̂_{t+1})ᵀz`.
    pub fn decide(&self, pred: &Prediction, bx: &FeasibleBox) -> Result<Decision> {
        let n = bx.dim();
        ensure_len(n, self.grad_sum.len())?;
        ensure_len(n, pred.grad_hat.len())?;
        let linear = self
            .grad_sum
            .iter()
            .zip(pred.grad_hat.values())
            .map(|(s, g)| s + g);

        if self.sigma_sum > 0.0 {
            let point: Vec<f64> = linear
                .zip(&self.weighted_center_sum)
                .map(|(l, c)| (c - l) / self.sigma_sum)
                .collect();
            return bx.project(&point);
        }

        // No curvature yet: minimize the linear term coordinate-wise,
        // keeping the previous decision on exact ties.
        let last = self.last_decision.stacked();
        let point: Vec<f64> = linear
            .enumerate()
            .map(|(k, l)| {
                if l > 0.0 {
                    0.0
                } else if l < 0.0 {
                    bx.upper(k)
                } else {
                    last[k]
                }
            })
            .collect();
        bx.project(&point)
    }

    /// Folds the realized gradient at `z_played` into the accumulators.
    /// `pred_used` must be the forecast that produced `z_played`.
    pub fn update(mut self, grad_true: &GradVector, pred_used: &Prediction, z_played: &Decision) -> Result<Self> {
        ensure_len(self.grad_sum.len(), grad_true.len())?;
        ensure_len(self.grad_sum.len(), pred_used.grad_hat.len())?;
        ensure_len(self.grad_sum.len(), 2 * z_played.resources())?;
        let h = grad_true.dist_sq(&pred_used.grad_hat);
        let h_new = self.h_sum + h;
        let sigma_t = self.sigma * (h_new.sqrt() - self.h_sum.sqrt());
        for (c, z) in self.weighted_center_sum.iter_mut().zip(z_played.stacked()) {
            *c += sigma_t * z;
        }
        for (s, g) in self.grad_sum.iter_mut().zip(grad_true.values()) {
            *s += g;
        }
        self.sigma_sum += sigma_t;
        self.h_sum = h_new;
        self.t += 1;
        self.last_decision = z_played.clone();
        Ok(self)
    }

    /// Value of the decision objective (up to the constant of `r_{1:t}`);
    /// shared by solvers and oracle checks.
    pub fn objective(&self, pred: &Prediction, z: &Decision) -> f64 {
        let zs = z.stacked();
        let mut quad = 0.0;
        let mut lin = 0.0;
        for k in 0..zs.len() {
            // σ_{1:t}/2·||z||² - (Σσ_i z_i)ᵀz expands Σσ_i/2·||z - z_i||²
            quad += 0.5 * self.sigma_sum * zs[k] * zs[k] - self.weighted_center_sum[k] * zs[k];
            lin += (self.grad_sum[k] + pred.grad_hat.values()[k]) * zs[k];
        }
        quad + lin
    }
}

/// Accumulators of the FTRL baseline with `R(z) = ||z||²/(2η_t)` and the
/// self-confident step `η_t = eta_scale / √Σ||∇f_i||²`.
#[derive(Debug, Clone, PartialEq)]
pub struct FtrlState {
    eta_scale: f64,
    grad_sum: Vec<f64>,
    grad_sq_sum: f64,
    t: usize,
    last_decision: Decision,
}

impl FtrlState {
    pub fn init(bx: &FeasibleBox, eta_scale: f64, z1: Decision) -> Result<Self> {
        if !(eta_scale.is_finite() && eta_scale > 0.0) {
            return Err(Error::Config(format!("eta_scale must be positive, got {eta_scale}")));
        }
        if !bx.contains(&z1) {
            return Err(Error::Infeasible(format!("initial decision {z1:?} lies outside the box")));
        }
        Ok(Self {
            eta_scale,
            grad_sum: vec![0.0; bx.dim()],
            grad_sq_sum: 0.0,
            t: 1,
            last_decision: z1,
        })
    }

    pub fn from_parts(eta_scale: f64, grad_sum: Vec<f64>, grad_sq_sum: f64, t: usize, last: Decision) -> Result<Self> {
        ensure_len(grad_sum.len(), 2 * last.resources())?;
        if !(eta_scale > 0.0) || grad_sq_sum < 0.0 || t == 0 {
            return Err(Error::Config("invalid FTRL accumulators".into()));
        }
        Ok(Self {
            eta_scale,
            grad_sum,
            grad_sq_sum,
            t,
            last_decision: last,
        })
    }

    pub fn eta_scale(&self) -> f64 {
        self.eta_scale
    }
    pub fn grad_sum(&self) -> &[f64] {
        &self.grad_sum
    }
    pub fn grad_sq_sum(&self) -> f64 {
        self.grad_sq_sum
    }
    pub fn t(&self) -> usize {
        self.t
    }
    pub fn last_decision(&self) -> &Decision {
        &self.last_decision
    }

    pub fn eta(&self) -> f64 {
        self.eta_scale / self.grad_sq_sum.max(FTRL_GRAD_EPS).sqrt()
    }

    pub fn decide(&self, bx: &FeasibleBox) -> Result<Decision> {
        ensure_len(bx.dim(), self.grad_sum.len())?;
        if self.t == 1 {
            return Ok(self.last_decision.clone());
        }
        let eta = self.eta();
        let point: Vec<f64> = self.grad_sum.iter().map(|g| -eta * g).collect();
        bx.project(&point)
    }

    pub fn update(mut self, grad_true: &GradVector) -> Result<Self> {
        ensure_len(self.grad_sum.len(), grad_true.len())?;
        for (s, g) in self.grad_sum.iter_mut().zip(grad_true.values()) {
            *s += g;
        }
        self.grad_sq_sum += grad_true.norm_sq();
        self.t += 1;
        Ok(self)
    }

    /// `Σ∇f_iᵀz + ||z||²/(2η_t)`.
    pub fn objective(&self, z: &Decision) -> f64 {
        let eta = self.eta();
        z.stacked()
            .iter()
            .zip(&self.grad_sum)
            .map(|(zk, g)| g * zk + zk * zk / (2.0 * eta))
            .sum()
    }
}
