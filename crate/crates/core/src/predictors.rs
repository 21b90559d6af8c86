//! Gradient forecasters feeding the optimistic term of OOLR.
//!
//! * [`ArmaOgd`]: per-coordinate AR(q) model of the gradient series whose lag
//!   coefficients are learned by projected online gradient descent.
//! * [`SyntheticPredictor`]: oracle forecast with a prescribed relative error
//!   `ζ`, used as a controlled-accuracy baseline.
//! * [`zero_predict`]: no forecast at all.

use std::collections::VecDeque;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::domain::{Decision, GradVector};
use crate::error::{Error, Result};
use crate::learners::Prediction;
use crate::loss::{loss_gradient, LossConfig, TraceSlot};

/// The all-zeros forecast.
pub fn zero_predict(m: usize) -> Prediction {
    Prediction::zeros(m)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ArmaOgdConfig {
    /// Lag order `q`.
    pub lag_order: usize,
    /// OGD numerator; the step at update `t` is `step_scale / √t`.
    pub step_scale: f64,
    /// Divide the step by a running max of `|v_t|` (floored at 1) per coordinate.
    pub normalize_step: bool,
    /// Radius of the coefficient box.
    pub coeff_bound: f64,
}

impl Default for ArmaOgdConfig {
    fn default() -> Self {
        Self {
            lag_order: 5,
            step_scale: 0.1,
            normalize_step: true,
            coeff_bound: 1.0,
        }
    }
}

impl ArmaOgdConfig {
    fn validate(&self) -> Result<()> {
        if self.lag_order == 0 {
            return Err(Error::Config("ARMA-OGD lag order must be positive".into()));
        }
        if !(self.step_scale > 0.0 && self.coeff_bound > 0.0) {
            return Err(Error::Config("ARMA-OGD step and coefficient bound must be positive".into()));
        }
        Ok(())
    }
}

/// Online AR(q) forecaster trained by OGD, one model per series coordinate.
#[derive(Debug, Clone, PartialEq)]
pub struct ArmaOgd {
    cfg: ArmaOgdConfig,
    coeffs: Vec<Vec<f64>>,
    // most recent observation first
    history: Vec<VecDeque<f64>>,
    scale: Vec<f64>,
    t: usize,
}

impl ArmaOgd {
    /// Coefficients start at the persistence model `(1, 0, ..., 0)`, the same
    /// forecast the warm-up phase uses.
    pub fn new(dim: usize, cfg: ArmaOgdConfig) -> Result<Self> {
        cfg.validate()?;
        let mut init = vec![0.0; cfg.lag_order];
        init[0] = 1.0f64.min(cfg.coeff_bound);
        Self::with_coeffs(dim, cfg, init)
    }

    /// Same initial coefficients for every coordinate (clamped to the box).
    pub fn with_coeffs(dim: usize, cfg: ArmaOgdConfig, coeffs: Vec<f64>) -> Result<Self> {
        cfg.validate()?;
        if coeffs.len() != cfg.lag_order {
            return Err(Error::Dimension {
                expected: cfg.lag_order,
                got: coeffs.len(),
            });
        }
        let bound = cfg.coeff_bound;
        let coeffs: Vec<f64> = coeffs.into_iter().map(|c| c.clamp(-bound, bound)).collect();
        Ok(Self {
            coeffs: vec![coeffs; dim],
            history: vec![VecDeque::with_capacity(cfg.lag_order); dim],
            scale: vec![1.0; dim],
            t: 0,
            cfg,
        })
    }

    pub fn config(&self) -> &ArmaOgdConfig {
        &self.cfg
    }

    pub fn dim(&self) -> usize {
        self.coeffs.len()
    }

    pub fn coeffs(&self, coord: usize) -> &[f64] {
        &self.coeffs[coord]
    }

    /// Stored observations for one coordinate, most recent first.
    pub fn history(&self, coord: usize) -> impl Iterator<Item = f64> + '_ {
        self.history[coord].iter().copied()
    }

    pub fn t(&self) -> usize {
        self.t
    }

    fn predict_coord(&self, k: usize) -> f64 {
        let h = &self.history[k];
        if h.len() < self.cfg.lag_order {
            h.front().copied().unwrap_or(0.0)
        } else {
            self.coeffs[k].iter().zip(h).map(|(c, v)| c * v).sum()
        }
    }

    /// Forecast of every coordinate for the next step.
    pub fn predict_values(&self) -> Vec<f64> {
        (0..self.dim()).map(|k| self.predict_coord(k)).collect()
    }

    pub fn predict(&self) -> Prediction {
        Prediction::new(GradVector::from_raw(self.predict_values()))
    }

    /// One OGD step on the squared forecast loss, then pushes the observation.
    pub fn update(&mut self, observed: &[f64]) -> Result<()> {
        if observed.len() != self.dim() {
            return Err(Error::Dimension {
                expected: self.dim(),
                got: observed.len(),
            });
        }
        self.t += 1;
        let q = self.cfg.lag_order;
        let bound = self.cfg.coeff_bound;
        for (k, &v) in observed.iter().enumerate() {
            if self.cfg.normalize_step {
                self.scale[k] = self.scale[k].max(v.abs());
            }
            let eta = self.cfg.step_scale / ((self.t as f64).sqrt() * self.scale[k]);
            if self.history[k].len() == q {
                let err = self.predict_coord(k) - v;
                let window = &self.history[k];
                for (c, h) in self.coeffs[k].iter_mut().zip(window) {
                    *c = (*c - eta * 2.0 * err * h).clamp(-bound, bound);
                }
            }
            let hist = &mut self.history[k];
            if hist.len() == q {
                hist.pop_back();
            }
            hist.push_front(v);
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticPredictorConfig {
    /// Relative error rate `ζ ≥ 0`.
    pub zeta: f64,
    pub rng_seed: u64,
    pub fixed_point_iters: usize,
    pub fixed_point_tol: f64,
}

impl SyntheticPredictorConfig {
    pub fn new(zeta: f64, rng_seed: u64) -> Result<Self> {
        let cfg = Self {
            zeta,
            rng_seed,
            fixed_point_iters: 20,
            fixed_point_tol: 1e-10,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    fn validate(&self) -> Result<()> {
        if !(self.zeta.is_finite() && self.zeta >= 0.0) {
            return Err(Error::Config(format!("zeta must be >= 0, got {}", self.zeta)));
        }
        if self.fixed_point_iters == 0 || !(self.fixed_point_tol > 0.0) {
            return Err(Error::Config("fixed-point iterations and tolerance must be positive".into()));
        }
        Ok(())
    }
}

/// Result of one synthetic forecast.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticForecast {
    pub prediction: Prediction,
    pub converged: bool,
    pub iterations: usize,
}

/// Forecast `(1 + s·ζ)·∇f_{t+1}(ẑ)` with a random sign `s` per slot.
///
/// The point `ẑ` depends on the forecast itself (the learner decides from
/// it), so it is found by iterating `ẑ ← probe(perturb(∇f_{t+1}(ẑ)))`.
#[derive(Debug, Clone)]
pub struct SyntheticPredictor {
    cfg: SyntheticPredictorConfig,
    rng: ChaCha8Rng,
}

impl SyntheticPredictor {
    pub fn new(cfg: SyntheticPredictorConfig) -> Result<Self> {
        cfg.validate()?;
        Ok(Self {
            rng: ChaCha8Rng::seed_from_u64(cfg.rng_seed),
            cfg,
        })
    }

    pub fn config(&self) -> &SyntheticPredictorConfig {
        &self.cfg
    }

    /// Draws the slot's error sign.
    pub fn draw_sign(&mut self) -> f64 {
        if self.rng.random_bool(0.5) {
            1.0
        } else {
            -1.0
        }
    }

    pub fn predict<F>(&mut self, next_slot: &TraceSlot, mut learner_probe: F, loss_cfg: &LossConfig) -> Result<SyntheticForecast>
    where
        F: FnMut(&Prediction) -> Result<Decision>,
    {
        let sign = self.draw_sign();
        let factor = 1.0 + sign * self.cfg.zeta;
        let m = next_slot.resources();
        let mut z_hat = learner_probe(&Prediction::zeros(m))?;
        let mut last = None;
        for it in 1..=self.cfg.fixed_point_iters {
            let g = loss_gradient(next_slot, &z_hat, loss_cfg)?;
            let pred = Prediction::new(perturb(&g, factor));
            let z_next = learner_probe(&pred)?;
            let step = z_next.distance(&z_hat);
            if step < self.cfg.fixed_point_tol {
                return Ok(SyntheticForecast {
                    prediction: pred,
                    converged: true,
                    iterations: it,
                });
            }
            z_hat = z_next;
            last = Some(pred);
        }
        Ok(SyntheticForecast {
            prediction: last.expect("at least one iteration"),
            converged: false,
            iterations: self.cfg.fixed_point_iters,
        })
    }
}

/// Multiplies every coordinate by `factor = 1 + s·ζ`.
pub fn perturb(g: &GradVector, factor: f64) -> GradVector {
    g.scaled(factor)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fixed(q: usize, step: f64, bound: f64) -> ArmaOgdConfig {
        ArmaOgdConfig {
            lag_order: q,
            step_scale: step,
            normalize_step: false,
            coeff_bound: bound,
        }
    }

    #[test]
    fn predicts_lag_combination() {
        let mut p = ArmaOgd::with_coeffs(1, fixed(2, 0.1, 1.0), vec![0.5, 0.5]).unwrap();
        p.history[0] = VecDeque::from(vec![4.0, 2.0]);
        assert_eq!(p.predict_values(), vec![3.0]);
    }

    #[test]
    fn cold_start_and_warm_up() {
        let mut p = ArmaOgd::new(2, fixed(3, 0.1, 1.0)).unwrap();
        assert_eq!(p.predict_values(), vec![0.0, 0.0]);
        p.update(&[7.5, -1.0]).unwrap();
        assert_eq!(p.predict_values(), vec![7.5, -1.0]);
    }

    #[test]
    fn exact_forecast_leaves_coefficients() {
        let mut p = ArmaOgd::with_coeffs(1, fixed(2, 0.5, 1.0), vec![0.5, 0.5]).unwrap();
        p.history[0] = VecDeque::from(vec![4.0, 2.0]);
        p.update(&[3.0]).unwrap();
        assert_eq!(p.coeffs(0), &[0.5, 0.5]);
        assert_eq!(p.history(0).collect::<Vec<_>>(), vec![3.0, 4.0]);
    }

    #[test]
    fn one_ogd_step_by_hand() {
        for bound in [2.0, 1.0, 0.4] {
            let mut p = ArmaOgd::with_coeffs(1, fixed(1, 0.5, bound), vec![0.0]).unwrap();
            p.history[0] = VecDeque::from(vec![1.0]);
            p.update(&[1.0]).unwrap();
            // grad = 2·(0 - 1)·1 = -2, step 0.5/√1 → γ = 1 before clamping
            let gamma: f64 = 0.0 - 0.5 * (2.0 * (0.0 - 1.0) * 1.0);
            assert_eq!(p.coeffs(0), &[gamma.min(bound)]);
        }
    }

    #[test]
    fn coefficients_stay_in_box() {
        let mut p = ArmaOgd::new(1, fixed(3, 50.0, 0.7)).unwrap();
        let mut v = 1.0;
        for i in 0..200 {
            v = if i % 7 == 0 { -3.0 * v } else { 0.9 * v + 0.5 };
            p.update(&[v]).unwrap();
            assert!(p.coeffs(0).iter().all(|c| c.abs() <= 0.7));
            assert!(p.history(0).count() <= 3);
        }
    }

    #[test]
    fn rejects_bad_config() {
        assert!(ArmaOgd::new(1, fixed(0, 0.1, 1.0)).is_err());
        assert!(ArmaOgd::new(1, fixed(2, 0.0, 1.0)).is_err());
        assert!(SyntheticPredictorConfig::new(-0.1, 0).is_err());
    }

    #[test]
    fn perturbation_examples() {
        let g = GradVector::new(vec![1.0, -2.0]).unwrap();
        assert_eq!(perturb(&g, 1.0 + 0.3).values(), &[1.3, -2.6]);
        let g = GradVector::new(vec![1.0, 1.0]).unwrap();
        assert_eq!(perturb(&g, 1.0 - 4.0).values(), &[-3.0, -3.0]);
    }

    #[test]
    fn zero_predictor_shape() {
        let p = zero_predict(3);
        assert_eq!(p.grad_hat.values(), &[0.0; 6]);
        assert_eq!(zero_predict(3), p);
    }

    #[test]
    fn perfect_forecast_matches_gradient_at_fixed_point() {
        let slot = TraceSlot::new(0.8, vec![0.3], vec![0.6], vec![0.9]).unwrap();
        let cfg = LossConfig::new(2.0).unwrap();
        let mut sp = SyntheticPredictor::new(SyntheticPredictorConfig::new(0.0, 1).unwrap()).unwrap();
        // a contraction-like probe: z = clamp(0.5 - 0.2·ĝ)
        let probe = |p: &Prediction| {
            let v: Vec<f64> = p.grad_hat.values().iter().map(|g| (0.5 - 0.2 * g).clamp(0.0, 1.0)).collect();
            Decision::from_stacked(&v)
        };
        let out = sp.predict(&slot, probe, &cfg).unwrap();
        assert!(out.converged);
        let played = probe(&out.prediction).unwrap();
        let truth = loss_gradient(&slot, &played, &cfg).unwrap();
        assert!(truth.dist_sq(&out.prediction.grad_hat) < 1e-18);
    }

    #[test]
    fn same_seed_same_signs() {
        let cfg = SyntheticPredictorConfig::new(0.3, 99).unwrap();
        let mut a = SyntheticPredictor::new(cfg.clone()).unwrap();
        let mut b = SyntheticPredictor::new(cfg).unwrap();
        let sa: Vec<f64> = (0..64).map(|_| a.draw_sign()).collect();
        let sb: Vec<f64> = (0..64).map(|_| b.draw_sign()).collect();
        assert_eq!(sa, sb);
        assert!(sa.contains(&1.0) && sa.contains(&-1.0));
    }
}
