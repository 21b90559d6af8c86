//! Online protocol driver: runs a learner against a trace, wires the gradient
//! forecasts in, and assembles the regret report against the benchmarks.

use crate::benchmarks::{compute_regret, solve_dynamic_benchmark, solve_static_benchmark, RegretReport, SolverOptions};
use crate::domain::{Decision, FeasibleBox, GradVector};
use crate::error::{Error, Result};
use crate::learners::{optimal_sigma, FtrlState, OolrState, Prediction};
use crate::loss::{loss_gradient, loss_value, LossConfig, TraceSlot};
use crate::predictors::{zero_predict, ArmaOgd, ArmaOgdConfig, SyntheticPredictor, SyntheticPredictorConfig};

#[derive(Debug, Clone, PartialEq)]
pub enum LearnerKind {
    /// `eta_scale` defaults to the diameter `D`.
    Ftrl { eta_scale: Option<f64> },
    Oolr,
}

#[derive(Debug, Clone, PartialEq)]
pub enum PredictorKind {
    ArmaOgd(ArmaOgdConfig),
    Synthetic(SyntheticPredictorConfig),
    Zero,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SigmaChoice {
    /// `√2/D`.
    Auto,
    Fixed(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BenchmarkSet {
    Static,
    Dynamic,
    Both,
}

impl BenchmarkSet {
    pub fn has_static(self) -> bool {
        matches!(self, BenchmarkSet::Static | BenchmarkSet::Both)
    }
    pub fn has_dynamic(self) -> bool {
        matches!(self, BenchmarkSet::Dynamic | BenchmarkSet::Both)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub learner: LearnerKind,
    pub predictor: PredictorKind,
    pub loss: LossConfig,
    pub feasible: FeasibleBox,
    pub sigma: SigmaChoice,
    pub benchmarks: BenchmarkSet,
    pub solver: SolverOptions,
    pub horizon: usize,
    /// First decision (and tie-break point); defaults to zero reservations.
    pub z1: Option<Decision>,
}

impl ExperimentConfig {
    /// OOLR with `σ = √2/D` and both benchmarks.
    pub fn oolr(feasible: FeasibleBox, predictor: PredictorKind, horizon: usize) -> Self {
        Self {
            learner: LearnerKind::Oolr,
            predictor,
            loss: LossConfig::default(),
            feasible,
            sigma: SigmaChoice::Auto,
            benchmarks: BenchmarkSet::Both,
            solver: SolverOptions::default(),
            horizon,
            z1: None,
        }
    }

    pub fn ftrl(feasible: FeasibleBox, horizon: usize) -> Self {
        Self {
            learner: LearnerKind::Ftrl { eta_scale: None },
            predictor: PredictorKind::Zero,
            ..Self::oolr(feasible, PredictorKind::Zero, horizon)
        }
    }

    pub fn resolved_sigma(&self) -> Result<f64> {
        let s = match self.sigma {
            SigmaChoice::Auto => optimal_sigma(&self.feasible),
            SigmaChoice::Fixed(s) => s,
        };
        if s.is_finite() && s > 0.0 {
            Ok(s)
        } else {
            Err(Error::Config(format!("sigma must be positive, got {s}")))
        }
    }

    /// True when forecasts read the upcoming slot.
    pub fn oracle_assisted(&self) -> bool {
        self.learner == LearnerKind::Oolr && matches!(self.predictor, PredictorKind::Synthetic(_))
    }
}

enum Learner {
    Ftrl(FtrlState),
    Oolr(OolrState),
}

enum Forecaster {
    Arma(ArmaOgd),
    Synthetic(SyntheticPredictor),
    Zero,
}

/// Per-slot record of the online phase alone.
#[derive(Debug, Clone, PartialEq)]
pub struct OnlineRun {
    pub decisions: Vec<Decision>,
    pub predictions: Vec<Prediction>,
    pub gradients: Vec<GradVector>,
    pub losses: Vec<f64>,
    pub h: Vec<f64>,
    pub fixed_point_unconverged: usize,
}

/// Plays the online protocol: at slot `t` the forecast is formed and the
/// decision committed before slot `t` is revealed. Slots are handed over one
/// at a time, so no decision can read a later slot; only the synthetic oracle
/// forecaster reads slot `t` itself.
pub fn run_online(cfg: &ExperimentConfig, trace: &[TraceSlot]) -> Result<OnlineRun> {
    let bx = &cfg.feasible;
    let m = bx.resources();
    if cfg.horizon == 0 || trace.len() < cfg.horizon {
        return Err(Error::Config(format!(
            "horizon {} needs a trace of at least that many slots, got {}",
            cfg.horizon,
            trace.len()
        )));
    }
    if let Some(s) = trace.iter().find(|s| s.resources() != m) {
        return Err(Error::Config(format!("trace has {} resources, box has {m}", s.resources())));
    }
    let z1 = cfg.z1.clone().unwrap_or_else(|| Decision::zeros(m));

    let mut learner = match cfg.learner {
        LearnerKind::Ftrl { eta_scale } => Learner::Ftrl(FtrlState::init(bx, eta_scale.unwrap_or_else(|| bx.diameter()), z1)?),
        LearnerKind::Oolr => Learner::Oolr(OolrState::init(bx, cfg.resolved_sigma()?, z1)?),
    };
    let mut forecaster = match (&cfg.learner, &cfg.predictor) {
        (LearnerKind::Ftrl { .. }, _) | (_, PredictorKind::Zero) => Forecaster::Zero,
        (_, PredictorKind::ArmaOgd(c)) => Forecaster::Arma(ArmaOgd::new(bx.dim(), c.clone())?),
        (_, PredictorKind::Synthetic(c)) => Forecaster::Synthetic(SyntheticPredictor::new(c.clone())?),
    };

    let mut run = OnlineRun {
        decisions: Vec::with_capacity(cfg.horizon),
        predictions: Vec::with_capacity(cfg.horizon),
        gradients: Vec::with_capacity(cfg.horizon),
        losses: Vec::with_capacity(cfg.horizon),
        h: Vec::with_capacity(cfg.horizon),
        fixed_point_unconverged: 0,
    };

    for slot in &trace[..cfg.horizon] {
        let prediction = match (&mut forecaster, &learner) {
            (Forecaster::Zero, _) => zero_predict(m),
            (Forecaster::Arma(p), _) => p.predict(),
            (Forecaster::Synthetic(p), Learner::Oolr(st)) => {
                let out = p.predict(slot, |pr| st.decide(pr, bx), &cfg.loss)?;
                if !out.converged {
                    run.fixed_point_unconverged += 1;
                }
                out.prediction
            }
            (Forecaster::Synthetic(_), Learner::Ftrl(_)) => unreachable!("FTRL runs without forecasts"),
        };
        let z = match &learner {
            Learner::Ftrl(st) => st.decide(bx)?,
            Learner::Oolr(st) => st.decide(&prediction, bx)?,
        };

        // slot revealed
        let loss = loss_value(slot, &z, &cfg.loss)?;
        let grad = loss_gradient(slot, &z, &cfg.loss)?;
        let h = grad.dist_sq(&prediction.grad_hat);

        learner = match learner {
            Learner::Ftrl(st) => Learner::Ftrl(st.update(&grad)?),
            Learner::Oolr(st) => Learner::Oolr(st.update(&grad, &prediction, &z)?),
        };
        if let Forecaster::Arma(p) = &mut forecaster {
            p.update(grad.values())?;
        }

        run.decisions.push(z);
        run.predictions.push(prediction);
        run.gradients.push(grad);
        run.losses.push(loss);
        run.h.push(h);
    }
    Ok(run)
}

/// Full experiment: online run, benchmarks, and the regret report.
pub fn run_experiment(cfg: &ExperimentConfig, trace: &[TraceSlot]) -> Result<RegretReport> {
    let run = run_online(cfg, trace)?;
    let slots = &trace[..cfg.horizon];
    let bx = &cfg.feasible;

    let (static_losses, static_unconverged) = if cfg.benchmarks.has_static() {
        let sol = solve_static_benchmark(slots, &cfg.loss, bx, cfg.solver)?;
        let losses = slots
            .iter()
            .map(|s| loss_value(s, &sol.decision, &cfg.loss))
            .collect::<Result<Vec<_>>>()?;
        (losses, !sol.converged)
    } else {
        (vec![0.0; slots.len()], false)
    };

    let mut report = compute_regret(&run.losses, &static_losses, &run.h, bx.diameter())?;
    if !cfg.benchmarks.has_static() {
        report = report.without_static();
    }
    if cfg.benchmarks.has_dynamic() {
        let mut dynamic = Vec::with_capacity(slots.len());
        for s in slots {
            let sol = solve_dynamic_benchmark(s, &cfg.loss, bx, cfg.solver)?;
            if !sol.converged {
                report.diagnostics.dynamic_unconverged += 1;
            }
            dynamic.push(loss_value(s, &sol.decision, &cfg.loss)?);
        }
        report = report.with_dynamic(&dynamic)?;
    }
    report.oracle_assisted = cfg.oracle_assisted();
    report.diagnostics.static_unconverged = static_unconverged;
    report.diagnostics.fixed_point_unconverged = run.fixed_point_unconverged;
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn zero_trace(t: usize, m: usize) -> Vec<TraceSlot> {
        vec![TraceSlot::new(0.0, vec![0.0; m], vec![0.0; m], vec![0.5; m]).unwrap(); t]
    }

    #[test]
    fn degenerate_environment_has_zero_regret() {
        let bx = FeasibleBox::unit(2).unwrap();
        let trace = zero_trace(30, 2);
        for cfg in [
            ExperimentConfig::ftrl(bx.clone(), 30),
            ExperimentConfig::oolr(bx.clone(), PredictorKind::Zero, 30),
            ExperimentConfig::oolr(bx.clone(), PredictorKind::ArmaOgd(ArmaOgdConfig::default()), 30),
        ] {
            let rep = run_experiment(&cfg, &trace).unwrap();
            assert_eq!(rep.horizon(), 30);
            assert!(rep.rows.iter().all(|r| r.loss == 0.0));
            assert_eq!(rep.final_regret_static(), 0.0);
            assert_eq!(rep.last().unwrap().regret_dynamic, 0.0);
        }
    }

    #[test]
    fn rejects_resource_mismatch_and_short_trace() {
        let bx = FeasibleBox::unit(3).unwrap();
        let cfg = ExperimentConfig::oolr(bx, PredictorKind::Zero, 10);
        assert!(matches!(run_experiment(&cfg, &zero_trace(10, 2)), Err(Error::Config(_))));
        assert!(matches!(run_experiment(&cfg, &zero_trace(5, 3)), Err(Error::Config(_))));
    }

    #[test]
    fn oracle_flag_only_for_synthetic_oolr() {
        let bx = FeasibleBox::unit(1).unwrap();
        let syn = PredictorKind::Synthetic(SyntheticPredictorConfig::new(0.3, 1).unwrap());
        assert!(ExperimentConfig::oolr(bx.clone(), syn, 5).oracle_assisted());
        assert!(!ExperimentConfig::oolr(bx.clone(), PredictorKind::Zero, 5).oracle_assisted());
        assert!(!ExperimentConfig::ftrl(bx, 5).oracle_assisted());
    }

    #[test]
    fn single_slot_horizon() {
        let bx = FeasibleBox::unit(1).unwrap();
        let trace = vec![TraceSlot::new(0.7, vec![0.2], vec![0.5], vec![0.9]).unwrap()];
        let rep = run_experiment(&ExperimentConfig::oolr(bx, PredictorKind::Zero, 1), &trace).unwrap();
        assert_eq!(rep.horizon(), 1);
        let r = rep.last().unwrap();
        assert_eq!(r.avg_regret_static, r.regret_static);
    }
}
