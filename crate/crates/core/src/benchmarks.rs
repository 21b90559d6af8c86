//! Offline comparators and regret accounting.
//!
//! Both the static benchmark `argmin_z Σ_t f_t(z)` and the per-slot dynamic
//! benchmark `argmin_z f_t(z)` are solved by projected gradient descent with
//! Armijo backtracking. The objectives are convex, so a stationary point of
//! the projected iteration is a global optimum.

use crate::domain::{Decision, FeasibleBox};
use crate::error::{Error, Result};
use crate::loss::{loss_gradient, loss_value, LossConfig, TraceSlot};

const ARMIJO: f64 = 1e-4;
const MIN_STEP: f64 = 1e-16;
const FLAT_REL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    /// Stop once `||z - Π(z - ∇F(z))||` drops below this.
    pub tol: f64,
    pub max_iters: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            tol: 1e-9,
            max_iters: 10_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchmarkSolution {
    pub decision: Decision,
    /// Mean loss over the slots at `decision`.
    pub objective: f64,
    pub iterations: usize,
    pub converged: bool,
}

fn mean_loss(slots: &[TraceSlot], z: &Decision, cfg: &LossConfig) -> Result<f64> {
    let mut total = 0.0;
    for s in slots {
        total += loss_value(s, z, cfg)?;
    }
    Ok(total / slots.len() as f64)
}

fn mean_gradient(slots: &[TraceSlot], z: &Decision, cfg: &LossConfig) -> Result<Vec<f64>> {
    let mut g = vec![0.0; 2 * z.resources()];
    for s in slots {
        for (acc, v) in g.iter_mut().zip(loss_gradient(s, z, cfg)?.values()) {
            *acc += v;
        }
    }
    let n = slots.len() as f64;
    g.iter_mut().for_each(|v| *v /= n);
    Ok(g)
}

/// Armijo test in gradient form, used once the objective change is lost in
/// rounding: for a smooth 1-D restriction, `φ(1) - φ(0) ≈ ½(φ'(0) + φ'(1))`.
#[allow(clippy::too_many_arguments)]
fn flat_armijo(
    slots: &[TraceSlot],
    cfg: &LossConfig,
    cand: &Decision,
    zs: &[f64],
    g: &[f64],
    fz: f64,
    fc: f64,
    decrease: f64,
) -> Result<bool> {
    if (fc - fz).abs() > FLAT_REL * (1.0 + fz.abs()) {
        return Ok(false);
    }
    let gc = mean_gradient(slots, cand, cfg)?;
    let approx: f64 = cand
        .stacked()
        .iter()
        .zip(zs)
        .zip(g.iter().zip(&gc))
        .map(|((c, a), (g0, g1))| 0.5 * (g0 + g1) * (c - a))
        .sum();
    Ok(approx <= ARMIJO * decrease)
}

/// Minimizes the mean loss over `slots` on the box.
pub fn minimize_sum(slots: &[TraceSlot], cfg: &LossConfig, bx: &FeasibleBox, opts: SolverOptions) -> Result<BenchmarkSolution> {
    if slots.is_empty() {
        return Err(Error::Length("benchmark needs at least one slot".into()));
    }
    for s in slots {
        if s.resources() != bx.resources() {
            return Err(Error::Dimension {
                expected: bx.resources(),
                got: s.resources(),
            });
        }
    }
    let mut z = bx.center();
    let mut fz = mean_loss(slots, &z, cfg)?;
    let mut iterations = 0;
    let mut converged = false;
    while iterations < opts.max_iters {
        let g = mean_gradient(slots, &z, cfg)?;
        let zs = z.stacked();
        let shifted: Vec<f64> = zs.iter().zip(&g).map(|(a, b)| a - b).collect();
        if bx.project(&shifted)?.distance(&z) < opts.tol {
            converged = true;
            break;
        }
        iterations += 1;

        let mut step = 1.0;
        let mut accepted = None;
        while step >= MIN_STEP {
            let trial: Vec<f64> = zs.iter().zip(&g).map(|(a, b)| a - step * b).collect();
            let cand = bx.project(&trial)?;
            let decrease: f64 = cand.stacked().iter().zip(&zs).zip(&g).map(|((c, a), b)| b * (c - a)).sum();
            let fc = mean_loss(slots, &cand, cfg)?;
            if fc <= fz + ARMIJO * decrease || flat_armijo(slots, cfg, &cand, &zs, &g, fz, fc, decrease)? {
                accepted = Some((cand, fc));
                break;
            }
            step *= 0.5;
        }
        match accepted {
            Some((cand, fc)) => {
                z = cand;
                fz = fc;
            }
            // no representable descent left
            None => {
                converged = true;
                break;
            }
        }
    }
    Ok(BenchmarkSolution {
        decision: z,
        objective: fz,
        iterations,
        converged,
    })
}

/// Best fixed reservation in hindsight over the whole horizon.
pub fn solve_static_benchmark(slots: &[TraceSlot], cfg: &LossConfig, bx: &FeasibleBox, opts: SolverOptions) -> Result<BenchmarkSolution> {
    minimize_sum(slots, cfg, bx, opts)
}

/// Per-slot optimal reservation.
pub fn solve_dynamic_benchmark(slot: &TraceSlot, cfg: &LossConfig, bx: &FeasibleBox, opts: SolverOptions) -> Result<BenchmarkSolution> {
    minimize_sum(std::slice::from_ref(slot), cfg, bx, opts)
}

/// One row of a regret report. Benchmark columns hold `NaN` when that
/// benchmark was not computed.
#[derive(Debug, Clone, PartialEq)]
pub struct RegretRow {
    pub t: usize,
    pub loss: f64,
    pub loss_static: f64,
    pub loss_dynamic: f64,
    pub regret_static: f64,
    pub regret_dynamic: f64,
    pub avg_regret_static: f64,
    pub avg_regret_dynamic: f64,
    pub h: f64,
    pub bound: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct RunDiagnostics {
    pub fixed_point_unconverged: usize,
    pub static_unconverged: bool,
    pub dynamic_unconverged: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RegretReport {
    pub rows: Vec<RegretRow>,
    /// Set when the forecasts peeked at future slots.
    pub oracle_assisted: bool,
    pub diagnostics: RunDiagnostics,
}

/// `2√2·D`, the bound coefficient at `σ = √2/D`.
pub fn bound_coefficient(diameter: f64) -> f64 {
    2.0 * std::f64::consts::SQRT_2 * diameter
}

fn cumulative(alg: &[f64], bench: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let mut acc = 0.0;
    alg.iter()
        .zip(bench)
        .enumerate()
        .map(|(i, (a, b))| {
            acc += a - b;
            (acc, acc / (i + 1) as f64)
        })
        .unzip()
}

/// Cumulative and average regret of `alg_losses` against `benchmark_losses`
/// (static columns), plus the running bound `2√2·D·√h_{1:t}`.
pub fn compute_regret(alg_losses: &[f64], benchmark_losses: &[f64], h_series: &[f64], diameter: f64) -> Result<RegretReport> {
    if alg_losses.len() != benchmark_losses.len() || alg_losses.len() != h_series.len() {
        return Err(Error::Length(format!(
            "losses {}, benchmark {}, errors {}",
            alg_losses.len(),
            benchmark_losses.len(),
            h_series.len()
        )));
    }
    let (regret, avg) = cumulative(alg_losses, benchmark_losses);
    let coeff = bound_coefficient(diameter);
    let mut h_acc = 0.0;
    let rows = (0..alg_losses.len())
        .map(|i| {
            h_acc += h_series[i];
            RegretRow {
                t: i + 1,
                loss: alg_losses[i],
                loss_static: benchmark_losses[i],
                loss_dynamic: f64::NAN,
                regret_static: regret[i],
                regret_dynamic: f64::NAN,
                avg_regret_static: avg[i],
                avg_regret_dynamic: f64::NAN,
                h: h_series[i],
                bound: coeff * h_acc.sqrt(),
            }
        })
        .collect();
    Ok(RegretReport {
        rows,
        oracle_assisted: false,
        diagnostics: RunDiagnostics::default(),
    })
}

impl RegretReport {
    /// Fills the dynamic-benchmark columns.
    pub fn with_dynamic(mut self, dynamic_losses: &[f64]) -> Result<Self> {
        if dynamic_losses.len() != self.rows.len() {
            return Err(Error::Length(format!(
                "report has {} rows, dynamic benchmark {}",
                self.rows.len(),
                dynamic_losses.len()
            )));
        }
        let alg: Vec<f64> = self.rows.iter().map(|r| r.loss).collect();
        let (regret, avg) = cumulative(&alg, dynamic_losses);
        for (i, row) in self.rows.iter_mut().enumerate() {
            row.loss_dynamic = dynamic_losses[i];
            row.regret_dynamic = regret[i];
            row.avg_regret_dynamic = avg[i];
        }
        Ok(self)
    }

    /// Clears the static-benchmark columns (dynamic-only runs).
    pub fn without_static(mut self) -> Self {
        for row in &mut self.rows {
            row.loss_static = f64::NAN;
            row.regret_static = f64::NAN;
            row.avg_regret_static = f64::NAN;
        }
        self
    }

    pub fn horizon(&self) -> usize {
        self.rows.len()
    }

    pub fn last(&self) -> Option<&RegretRow> {
        self.rows.last()
    }

    pub fn final_regret_static(&self) -> f64 {
        self.last().map_or(f64::NAN, |r| r.regret_static)
    }

    pub fn final_avg_regret_static(&self) -> f64 {
        self.last().map_or(f64::NAN, |r| r.avg_regret_static)
    }

    pub fn final_bound(&self) -> f64 {
        self.last().map_or(f64::NAN, |r| r.bound)
    }

    /// Average static regret at slot `t` (1-based).
    pub fn avg_regret_static_at(&self, t: usize) -> f64 {
        self.rows[t - 1].avg_regret_static
    }

    pub fn h_total(&self) -> f64 {
        self.rows.iter().map(|r| r.h).sum()
    }

    /// Checks `R_T ≤ 2√2·D·√h_{1:T} + 1e-6·(1 + |R_T|)`.
    pub fn bound_holds(&self) -> bool {
        let r = self.final_regret_static();
        r <= self.final_bound() + 1e-6 * (1.0 + r.abs())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn slot1(a: f64, p: f64, q: f64, th: f64) -> TraceSlot {
        TraceSlot::new(a, vec![p], vec![q], vec![th]).unwrap()
    }

    fn unit() -> FeasibleBox {
        FeasibleBox::new(vec![1.0]).unwrap()
    }

    #[test]
    fn static_single_slot_saturates_cheap_market() {
        let cfg = LossConfig::new(2.0).unwrap();
        let sol = solve_static_benchmark(&[slot1(1.0, 0.5, 1.0, 1.0)], &cfg, &unit(), SolverOptions::default()).unwrap();
        assert!(sol.converged);
        assert!((sol.decision.x[0] - 1.0).abs() < 1e-8);
        assert!(sol.decision.y[0].abs() < 1e-8);
    }

    #[test]
    fn pure_cost_reserves_nothing() {
        let cfg = LossConfig::new(2.0).unwrap();
        let slots = vec![slot1(0.0, 1.0, 1.0, 1.0); 4];
        let sol = solve_static_benchmark(&slots, &cfg, &unit(), SolverOptions::default()).unwrap();
        assert_eq!(sol.decision, Decision::zeros(1));
    }

    #[test]
    fn pure_utility_saturates() {
        let cfg = LossConfig::new(2.0).unwrap();
        let bx = FeasibleBox::new(vec![2.0, 0.5]).unwrap();
        let s = TraceSlot::new(1.0, vec![0.0, 0.0], vec![0.0, 0.0], vec![0.5, 0.7]).unwrap();
        let sol = solve_static_benchmark(&[s.clone(), s], &cfg, &bx, SolverOptions::default()).unwrap();
        assert_eq!(sol.decision.x, vec![2.0, 0.5]);
        assert_eq!(sol.decision.y, vec![2.0, 0.5]);
    }

    #[test]
    fn dynamic_zero_demand() {
        let cfg = LossConfig::new(2.0).unwrap();
        let sol = solve_dynamic_benchmark(&slot1(0.0, 0.3, 0.4, 1.0), &cfg, &unit(), SolverOptions::default()).unwrap();
        assert_eq!(sol.decision, Decision::zeros(1));
    }

    #[test]
    fn dynamic_expensive_spot() {
        let cfg = LossConfig::new(2.0).unwrap();
        let sol = solve_dynamic_benchmark(&slot1(1.0, 0.1, 2.0, 1.0), &cfg, &unit(), SolverOptions::default()).unwrap();
        assert!((sol.decision.x[0] - 1.0).abs() < 1e-9);
        assert!(sol.decision.y[0].abs() < 1e-9);
    }

    #[test]
    fn empty_slots_rejected() {
        let r = solve_static_benchmark(&[], &LossConfig::default(), &unit(), SolverOptions::default());
        assert!(matches!(r, Err(Error::Length(_))));
    }

    #[test]
    fn regret_of_identical_series_is_zero() {
        let l = [0.3, -0.2, 1.0];
        let rep = compute_regret(&l, &l, &[0.0; 3], 1.0).unwrap();
        assert!(rep.rows.iter().all(|r| r.regret_static == 0.0 && r.avg_regret_static == 0.0));
    }

    #[test]
    fn regret_arithmetic() {
        let rep = compute_regret(&[1.0, 1.0], &[0.0, 0.0], &[0.0, 0.0], 1.0).unwrap();
        let r: Vec<f64> = rep.rows.iter().map(|r| r.regret_static).collect();
        let a: Vec<f64> = rep.rows.iter().map(|r| r.avg_regret_static).collect();
        let b: Vec<f64> = rep.rows.iter().map(|r| r.bound).collect();
        assert_eq!(r, vec![1.0, 2.0]);
        assert_eq!(a, vec![1.0, 1.0]);
        assert_eq!(b, vec![0.0, 0.0]);
        assert!(!rep.bound_holds());
    }

    #[test]
    fn running_bound_formula() {
        let d = 3f64.sqrt();
        let rep = compute_regret(&[0.0, 0.0], &[0.0, 0.0], &[4.0, 5.0], d).unwrap();
        let expected = 2.0 * 2f64.sqrt() * d * 3.0;
        assert!((rep.rows[1].bound - expected).abs() < 1e-12);
        assert!((rep.rows[1].bound - 14.6969).abs() < 1e-4);
    }

    #[test]
    fn length_mismatch_rejected() {
        assert!(compute_regret(&[1.0], &[1.0, 2.0], &[0.0], 1.0).is_err());
        let rep = compute_regret(&[1.0], &[1.0], &[0.0], 1.0).unwrap();
        assert!(rep.with_dynamic(&[1.0, 2.0]).is_err());
    }
}
