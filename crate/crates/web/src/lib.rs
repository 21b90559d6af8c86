//! WebAssembly bindings for the browser demo in `www/`.
//!
//! Each exported function is a thin wrapper over a plain Rust function of the
//! same name with a `_impl` suffix, so the logic is testable natively.

use oolr::metrics::{run_experiment, BenchmarkSet, ExperimentConfig, PredictorKind, SigmaChoice};
use oolr::predictors::{ArmaOgdConfig, SyntheticPredictorConfig};
use oolr::traces::{apply_sla, generate, DemandModel, SlaParams, TraceConfig};
use oolr::{Decision, FeasibleBox, GradVector, LossConfig, OolrState, Prediction};
use wasm_bindgen::prelude::*;

/// Series returned by [`regret_curves`], in order.
pub const CURVE_NAMES: [&str; 4] = ["FTRL", "OOLR synthetic", "OOLRgrad", "bound / T"];

const RESOURCES: usize = 3;

/// Parameters the page exposes; everything else stays at trace defaults.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DemoParams {
    pub seed: u64,
    pub horizon: usize,
    pub zeta: f64,
    pub v: f64,
    /// Multiplier on the default `σ = √2/D`.
    pub sigma_scale: f64,
    /// In-advance fulfillment floor; 1 disables the SLA.
    pub alpha_min: f64,
    pub amp_slow: f64,
}

fn trace_config(p: &DemoParams) -> TraceConfig {
    let mut cfg = TraceConfig::new(p.horizon, RESOURCES, p.seed);
    if let DemandModel::Synthetic(d) = &mut cfg.demand {
        d.amp_slow = p.amp_slow;
    }
    cfg
}

/// Running static average regret of FTRL, OOLR with a synthetic forecaster
/// and OOLRgrad, plus the OOLRgrad bound divided by `t`; concatenated, each
/// of length `horizon`.
pub fn regret_curves_impl(p: &DemoParams) -> Result<Vec<f64>, String> {
    let err = |e: oolr::Error| e.to_string();
    let mut trace = generate(&trace_config(p)).map_err(err)?;
    if p.alpha_min < 1.0 {
        let sla = SlaParams {
            alpha_min: p.alpha_min,
            beta_min: 1.0,
        };
        apply_sla(&mut trace, sla, p.seed).map_err(err)?;
    }
    let bx = FeasibleBox::unit(RESOURCES).map_err(err)?;
    let loss = LossConfig::new(p.v).map_err(err)?;
    let sigma = SigmaChoice::Fixed(p.sigma_scale * oolr::learners::optimal_sigma(&bx));
    let synthetic = SyntheticPredictorConfig::new(p.zeta, p.seed).map_err(err)?;
    let mut experiments = [
        ExperimentConfig::ftrl(bx.clone(), p.horizon),
        ExperimentConfig::oolr(bx.clone(), PredictorKind::Synthetic(synthetic), p.horizon),
        ExperimentConfig::oolr(bx.clone(), PredictorKind::ArmaOgd(ArmaOgdConfig::default()), p.horizon),
    ];
    let mut out = Vec::with_capacity(4 * p.horizon);
    let mut bound = Vec::new();
    for exp in experiments.iter_mut() {
        exp.loss = loss;
        exp.sigma = sigma;
        exp.benchmarks = BenchmarkSet::Static;
        let report = run_experiment(exp, &trace).map_err(err)?;
        out.extend(report.rows.iter().map(|r| r.avg_regret_static));
        bound = report.rows.iter().map(|r| r.bound / r.t as f64).collect();
    }
    out.extend(bound);
    Ok(out)
}

/// Demand, then mean in-advance price, then mean spot price per slot.
pub fn trace_series_impl(seed: u64, horizon: usize, amp_slow: f64) -> Result<Vec<f64>, String> {
    let p = DemoParams {
        seed,
        horizon,
        zeta: 0.0,
        v: 2.0,
        sigma_scale: 1.0,
        alpha_min: 1.0,
        amp_slow,
    };
    let trace = generate(&trace_config(&p)).map_err(|e| e.to_string())?;
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    let mut out: Vec<f64> = trace.iter().map(|s| s.demand).collect();
    out.extend(trace.iter().map(|s| mean(&s.price_adv)));
    out.extend(trace.iter().map(|s| mean(&s.price_spot)));
    Ok(out)
}

/// One OOLR decision for a single resource with bound `upper`, from the
/// accumulated gradient, a proximal center and its weight, and a forecast.
/// Returns `[x, y]`.
pub fn oolr_decision_impl(grad_sum: [f64; 2], center: [f64; 2], sigma_sum: f64, grad_hat: [f64; 2], upper: f64) -> Result<Vec<f64>, String> {
    let err = |e: oolr::Error| e.to_string();
    let bx = FeasibleBox::new(vec![upper]).map_err(err)?;
    let state = OolrState::from_parts(oolr::learners::OolrParts {
        sigma: oolr::learners::optimal_sigma(&bx),
        grad_sum: grad_sum.to_vec(),
        weighted_center_sum: center.iter().map(|c| c * sigma_sum).collect(),
        sigma_sum,
        h_sum: 0.0,
        last_decision: Decision::zeros(1),
        t: 1,
    })
    .map_err(err)?;
    let pred = Prediction::new(GradVector::new(grad_hat.to_vec()).map_err(err)?);
    Ok(state.decide(&pred, &bx).map_err(err)?.stacked())
}

#[wasm_bindgen]
pub fn curve_names() -> Vec<String> {
    CURVE_NAMES.iter().map(|s| s.to_string()).collect()
}

#[wasm_bindgen]
#[allow(clippy::too_many_arguments)]
pub fn regret_curves(seed: u32, horizon: u32, zeta: f64, v: f64, sigma_scale: f64, alpha_min: f64, amp_slow: f64) -> Result<Vec<f64>, JsError> {
    let p = DemoParams {
        seed: seed as u64,
        horizon: horizon as usize,
        zeta,
        v,
        sigma_scale,
        alpha_min,
        amp_slow,
    };
    regret_curves_impl(&p).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn trace_series(seed: u32, horizon: u32, amp_slow: f64) -> Result<Vec<f64>, JsError> {
    trace_series_impl(seed as u64, horizon as usize, amp_slow).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
#[allow(clippy::too_many_arguments)]
pub fn oolr_decision(gx: f64, gy: f64, cx: f64, cy: f64, sigma_sum: f64, hx: f64, hy: f64, upper: f64) -> Result<Vec<f64>, JsError> {
    oolr_decision_impl([gx, gy], [cx, cy], sigma_sum, [hx, hy], upper).map_err(|e| JsError::new(&e))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params() -> DemoParams {
        DemoParams {
            seed: 1,
            horizon: 144,
            zeta: 0.3,
            v: 2.0,
            sigma_scale: 1.0,
            alpha_min: 1.0,
            amp_slow: 0.0,
        }
    }

    #[test]
    fn curves_have_one_series_per_name() {
        let out = regret_curves_impl(&params()).unwrap();
        assert_eq!(out.len(), CURVE_NAMES.len() * 144);
        assert!(out.iter().all(|v| v.is_finite()));
        assert_eq!(out, regret_curves_impl(&params()).unwrap());
    }

    #[test]
    fn sla_floor_changes_curves() {
        let sla = DemoParams { alpha_min: 0.5, ..params() };
        assert_ne!(regret_curves_impl(&params()).unwrap(), regret_curves_impl(&sla).unwrap());
    }

    #[test]
    fn bad_parameters_report_errors() {
        assert!(regret_curves_impl(&DemoParams { v: 0.5, ..params() }).is_err());
        assert!(regret_curves_impl(&DemoParams { zeta: -1.0, ..params() }).is_err());
        assert!(oolr_decision_impl([0.0; 2], [0.0; 2], 1.0, [0.0; 2], -1.0).is_err());
    }

    #[test]
    fn trace_series_layout() {
        let out = trace_series_impl(3, 50, 0.4).unwrap();
        assert_eq!(out.len(), 150);
        assert!(out[..50].iter().all(|&a| (0.0..=1.0).contains(&a)));
    }

    #[test]
    fn decision_is_clamped_prox_step() {
        // center 0.5, G + ĝ = (0.2, -0.4), σ = 2 → (0.5 - 0.1, 0.5 + 0.2)
        let z = oolr_decision_impl([0.1, -0.2], [0.5, 0.5], 2.0, [0.1, -0.2], 1.0).unwrap();
        assert!((z[0] - 0.4).abs() < 1e-12 && (z[1] - 0.7).abs() < 1e-12);
        let corner = oolr_decision_impl([5.0, -5.0], [0.5, 0.5], 1.0, [0.0, 0.0], 1.0).unwrap();
        assert_eq!(corner, vec![0.0, 1.0]);
        // No curvature: the sign rule.
        assert_eq!(oolr_decision_impl([1.0, -1.0], [0.0; 2], 0.0, [0.0; 2], 2.0).unwrap(), vec![0.0, 2.0]);
    }
}
