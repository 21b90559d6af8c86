//! Synthetic non-stationary environments and trace CSV I/O.
//!
//! Prices follow independent AR(1) (discretized Ornstein-Uhlenbeck)
//! recursions per resource, contributions are a seasonal sine with an offset
//! plus OU noise, and demand is either ingested from CSV or synthesized from
//! two sinusoids. Every component draws from its own ChaCha stream of the
//! trace seed, so enabling SLA ratios never changes the other columns.

use std::f64::consts::PI;
use std::io::Write;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::loss::TraceSlot;

const STREAM_DEMAND: u64 = 0;
const STREAM_PRICE_ADV: u64 = 1;
const STREAM_PRICE_SPOT: u64 = 2;
const STREAM_THETA: u64 = 3;
const STREAM_SLA: u64 = 4;

/// `v_{t+1} = v_t + κ(μ - v_t) + σ·ε_t`, clamped at zero.
#[derive(Debug, Clone, PartialEq)]
pub struct OuParams {
    pub kappa: f64,
    pub mean: f64,
    pub std: f64,
    /// Defaults to `mean`.
    pub initial: Option<f64>,
}

impl OuParams {
    fn validate(&self, what: &str) -> Result<()> {
        if !(self.kappa > 0.0 && self.kappa <= 1.0) {
            return Err(Error::Config(format!("{what}: kappa must lie in (0, 1]")));
        }
        if !(self.mean > 0.0) || !(self.std >= 0.0) {
            return Err(Error::Config(format!("{what}: mean must be > 0 and std >= 0")));
        }
        if let Some(v) = self.initial {
            if !(v >= 0.0) {
                return Err(Error::Config(format!("{what}: initial value must be >= 0")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ThetaModel {
    pub offset: Vec<f64>,
    pub amplitude: Vec<f64>,
    /// Period in slots.
    pub period: Vec<f64>,
    pub phase: Vec<f64>,
    pub ou_kappa: f64,
    pub ou_std: f64,
}

impl ThetaModel {
    pub fn uniform(m: usize) -> Self {
        Self {
            offset: vec![0.5; m],
            amplitude: vec![0.3; m],
            period: vec![144.0; m],
            phase: (0..m).map(|i| 2.0 * PI * i as f64 / m as f64).collect(),
            ou_kappa: 0.1,
            ou_std: 0.02,
        }
    }

    fn validate(&self, m: usize) -> Result<()> {
        for (name, v) in [
            ("theta.offset", &self.offset),
            ("theta.amplitude", &self.amplitude),
            ("theta.period", &self.period),
            ("theta.phase", &self.phase),
        ] {
            if v.len() != m {
                return Err(Error::Config(format!("{name} needs {m} values, got {}", v.len())));
            }
        }
        if self.offset.iter().any(|o| !(*o > 0.0)) || self.amplitude.iter().any(|a| !(*a >= 0.0)) {
            return Err(Error::Config("theta offsets must be > 0 and amplitudes >= 0".into()));
        }
        if self.period.iter().any(|p| !(*p > 0.0)) {
            return Err(Error::Config("theta periods must be positive".into()));
        }
        if !(self.ou_kappa > 0.0 && self.ou_kappa <= 1.0) || !(self.ou_std >= 0.0) {
            return Err(Error::Config("theta OU noise needs kappa in (0, 1] and std >= 0".into()));
        }
        Ok(())
    }
}

/// Two sinusoids plus Gaussian noise, clamped at zero and max-normalized.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticDemand {
    pub offset: f64,
    pub amp_daily: f64,
    pub period_daily: f64,
    pub amp_weekly: f64,
    pub period_weekly: f64,
    /// Slow seasonal component (off by default).
    pub amp_slow: f64,
    pub period_slow: f64,
    pub noise_std: f64,
}

impl Default for SyntheticDemand {
    fn default() -> Self {
        Self {
            offset: 1.0,
            amp_daily: 0.4,
            period_daily: 144.0,
            amp_weekly: 0.2,
            period_weekly: 1008.0,
            amp_slow: 0.0,
            period_slow: 4464.0,
            noise_std: 0.05,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum DemandModel {
    Synthetic(SyntheticDemand),
    Csv {
        path: PathBuf,
        column: String,
        normalize: bool,
    },
}

/// Lower bounds of the uniform fulfillment-ratio draws.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlaParams {
    pub alpha_min: f64,
    pub beta_min: f64,
}

impl SlaParams {
    fn validate(&self) -> Result<()> {
        for v in [self.alpha_min, self.beta_min] {
            if !(v > 0.0 && v <= 1.0) {
                return Err(Error::Config(format!("SLA floor must lie in (0, 1], got {v}")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TraceConfig {
    pub horizon: usize,
    pub resources: usize,
    pub seed: u64,
    pub price_adv: OuParams,
    pub price_spot: OuParams,
    pub theta: ThetaModel,
    pub demand: DemandModel,
    pub sla: Option<SlaParams>,
}

impl TraceConfig {
    pub fn new(horizon: usize, resources: usize, seed: u64) -> Self {
        Self {
            horizon,
            resources,
            seed,
            price_adv: OuParams {
                kappa: 0.1,
                mean: 0.5,
                std: 0.05,
                initial: None,
            },
            price_spot: OuParams {
                kappa: 0.1,
                mean: 0.8,
                std: 0.08,
                initial: None,
            },
            theta: ThetaModel::uniform(resources),
            demand: DemandModel::Synthetic(SyntheticDemand::default()),
            sla: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.horizon == 0 || self.resources == 0 {
            return Err(Error::Config("horizon and resource count must be positive".into()));
        }
        self.price_adv.validate("price_adv")?;
        self.price_spot.validate("price_spot")?;
        self.theta.validate(self.resources)?;
        if let DemandModel::Synthetic(d) = &self.demand {
            if !(d.noise_std >= 0.0) || !(d.period_daily > 0.0) || !(d.period_weekly > 0.0) || !(d.period_slow > 0.0) {
                return Err(Error::Config("demand noise must be >= 0 and periods positive".into()));
            }
        }
        if let Some(s) = &self.sla {
            s.validate()?;
        }
        Ok(())
    }
}

fn stream(seed: u64, id: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(id);
    rng
}

fn normal(rng: &mut ChaCha8Rng) -> f64 {
    rng.sample(StandardNormal)
}

fn ou_path(p: &OuParams, horizon: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let mut v = p.initial.unwrap_or(p.mean);
    let mut out = Vec::with_capacity(horizon);
    for _ in 0..horizon {
        out.push(v);
        v = (v + p.kappa * (p.mean - v) + p.std * normal(rng)).max(0.0);
    }
    out
}

/// Max-normalizes in place; an all-zero column stays zero.
fn normalize_max(values: &mut [f64]) {
    let max = values.iter().copied().fold(0.0, f64::max);
    if max > 0.0 {
        values.iter_mut().for_each(|v| *v /= max);
    }
}

fn synthetic_demand(d: &SyntheticDemand, horizon: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let mut out: Vec<f64> = (0..horizon)
        .map(|s| {
            let s = s as f64;
            let v = d.offset
                + d.amp_daily * (2.0 * PI * s / d.period_daily).sin()
                + d.amp_weekly * (2.0 * PI * s / d.period_weekly).sin()
                + d.amp_slow * (2.0 * PI * s / d.period_slow).sin()
                + d.noise_std * normal(rng);
            v.max(0.0)
        })
        .collect();
    normalize_max(&mut out);
    out
}

/// Generates a `horizon`-slot trace from `cfg`.
pub fn generate(cfg: &TraceConfig) -> Result<Vec<TraceSlot>> {
    cfg.validate()?;
    let (t_len, m) = (cfg.horizon, cfg.resources);

    let demand = match &cfg.demand {
        DemandModel::Synthetic(d) => synthetic_demand(d, t_len, &mut stream(cfg.seed, STREAM_DEMAND)),
        DemandModel::Csv { path, column, normalize } => {
            let col = ingest_demand_csv(path, column, *normalize)?;
            if col.len() < t_len {
                return Err(Error::TraceSource(format!(
                    "{}: column {column} has {} rows, horizon needs {t_len}",
                    path.display(),
                    col.len()
                )));
            }
            col[..t_len].to_vec()
        }
    };

    let mut rng_p = stream(cfg.seed, STREAM_PRICE_ADV);
    let mut rng_q = stream(cfg.seed, STREAM_PRICE_SPOT);
    let adv: Vec<Vec<f64>> = (0..m).map(|_| ou_path(&cfg.price_adv, t_len, &mut rng_p)).collect();
    let spot: Vec<Vec<f64>> = (0..m).map(|_| ou_path(&cfg.price_spot, t_len, &mut rng_q)).collect();

    let th = &cfg.theta;
    let noise_params = OuParams {
        kappa: th.ou_kappa,
        mean: 0.0,
        std: th.ou_std,
        initial: Some(0.0),
    };
    let mut rng_th = stream(cfg.seed, STREAM_THETA);
    let theta: Vec<Vec<f64>> = (0..m)
        .map(|i| {
            // zero-mean OU noise: no clamping until it is added to the trend
            let mut u = 0.0;
            (0..t_len)
                .map(|s| {
                    let trend = th.offset[i] + th.amplitude[i] * (2.0 * PI * s as f64 / th.period[i] + th.phase[i]).sin();
                    let v = (trend + u).max(0.0);
                    u += noise_params.kappa * (noise_params.mean - u) + noise_params.std * normal(&mut rng_th);
                    v
                })
                .collect()
        })
        .collect();

    let mut slots: Vec<TraceSlot> = (0..t_len)
        .map(|s| TraceSlot {
            demand: demand[s],
            price_adv: adv.iter().map(|c| c[s]).collect(),
            price_spot: spot.iter().map(|c| c[s]).collect(),
            theta: theta.iter().map(|c| c[s]).collect(),
            alpha: None,
            beta: None,
        })
        .collect();
    if let Some(sla) = cfg.sla {
        apply_sla(&mut slots, sla, cfg.seed)?;
    }
    for s in &slots {
        s.validate()?;
    }
    Ok(slots)
}

/// Draws `α_{i,t} ~ U[α_min, 1]` and `β_{i,t} ~ U[β_min, 1]` i.i.d. onto
/// existing slots, replacing any previous ratios.
pub fn apply_sla(slots: &mut [TraceSlot], sla: SlaParams, seed: u64) -> Result<()> {
    sla.validate()?;
    let mut rng = stream(seed, STREAM_SLA);
    let draw = |lo: f64, rng: &mut ChaCha8Rng| {
        if lo >= 1.0 {
            1.0
        } else {
            lo + (1.0 - lo) * rng.random::<f64>()
        }
    };
    for s in slots.iter_mut() {
        let m = s.resources();
        let alpha: Vec<f64> = (0..m).map(|_| draw(sla.alpha_min, &mut rng)).collect();
        let beta: Vec<f64> = (0..m).map(|_| draw(sla.beta_min, &mut rng)).collect();
        s.alpha = Some(alpha);
        s.beta = Some(beta);
    }
    Ok(())
}

/// Reads one numeric column (by header name) from a CSV file.
pub fn ingest_demand_csv(path: &Path, column: &str, normalize: bool) -> Result<Vec<f64>> {
    let file = std::fs::File::open(path).map_err(|e| Error::TraceSource(format!("{}: {e}", path.display())))?;
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(file);
    let headers = rdr
        .headers()
        .map_err(|e| Error::TraceSource(format!("{}: {e}", path.display())))?
        .clone();
    let idx = headers
        .iter()
        .position(|h| h == column)
        .ok_or_else(|| Error::TraceSource(format!("{}: no column named {column}", path.display())))?;
    let mut out = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| Error::TraceSource(format!("{}: {e}", path.display())))?;
        let line = rec.position().map_or(0, |p| p.line() as usize);
        let cell = rec.get(idx).unwrap_or("");
        let v: f64 = cell.parse().map_err(|_| Error::Parse {
            path: path.to_path_buf(),
            line,
            message: format!("non-numeric value {cell:?} in column {column}"),
        })?;
        out.push(v);
    }
    if out.is_empty() {
        return Err(Error::TraceSource(format!("{}: column {column} is empty", path.display())));
    }
    if normalize {
        normalize_max(&mut out);
    }
    Ok(out)
}

/// 17 significant digits, round-trip exact.
pub fn format_f64(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn trace_header(m: usize, sla: bool) -> Vec<String> {
    let mut h = vec!["t".to_string(), "a".to_string()];
    for prefix in ["p", "q", "theta"] {
        h.extend((1..=m).map(|i| format!("{prefix}_{i}")));
    }
    if sla {
        for prefix in ["alpha", "beta"] {
            h.extend((1..=m).map(|i| format!("{prefix}_{i}")));
        }
    }
    h
}

/// Writes the trace CSV (`t` is 1-based).
pub fn write_trace_csv<W: Write>(slots: &[TraceSlot], out: W) -> Result<()> {
    let m = slots.first().map_or(0, TraceSlot::resources);
    let sla = slots.first().is_some_and(|s| s.alpha.is_some());
    let mut w = csv::Writer::from_writer(out);
    let csv_err = |e: csv::Error| Error::TraceSource(format!("writing trace: {e}"));
    w.write_record(trace_header(m, sla)).map_err(csv_err)?;
    for (i, s) in slots.iter().enumerate() {
        let mut row = vec![(i + 1).to_string(), format_f64(s.demand)];
        for v in s.price_adv.iter().chain(&s.price_spot).chain(&s.theta) {
            row.push(format_f64(*v));
        }
        if sla {
            let ones = vec![1.0; m];
            let (a, b) = (s.alpha.as_ref().unwrap_or(&ones), s.beta.as_ref().unwrap_or(&ones));
            row.extend(a.iter().chain(b).map(|v| format_f64(*v)));
        }
        w.write_record(&row).map_err(csv_err)?;
    }
    w.flush().map_err(|e| Error::TraceSource(format!("writing trace: {e}")))?;
    Ok(())
}

/// Reads a trace CSV written by [`write_trace_csv`] (or by hand in that format).
pub fn read_trace_csv(path: &Path) -> Result<Vec<TraceSlot>> {
    let file = std::fs::File::open(path).map_err(|e| Error::TraceSource(format!("{}: {e}", path.display())))?;
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(file);
    let headers: Vec<String> = rdr
        .headers()
        .map_err(|e| Error::TraceSource(format!("{}: {e}", path.display())))?
        .iter()
        .map(str::to_string)
        .collect();
    let n = headers.len();
    let (m, sla) = if n >= 2 && (n - 2) % 5 == 0 && headers.iter().any(|h| h == "alpha_1") {
        ((n - 2) / 5, true)
    } else if n >= 5 && (n - 2) % 3 == 0 {
        ((n - 2) / 3, false)
    } else {
        return Err(Error::TraceSource(format!("{}: unexpected trace header {headers:?}", path.display())));
    };
    if headers != trace_header(m, sla) {
        return Err(Error::TraceSource(format!("{}: unexpected trace header {headers:?}", path.display())));
    }
    let mut slots = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| Error::TraceSource(format!("{}: {e}", path.display())))?;
        let line = rec.position().map_or(0, |p| p.line() as usize);
        let vals: Vec<f64> = rec
            .iter()
            .skip(1)
            .map(|c| {
                c.parse::<f64>().map_err(|_| Error::Parse {
                    path: path.to_path_buf(),
                    line,
                    message: format!("non-numeric value {c:?}"),
                })
            })
            .collect::<Result<_>>()?;
        let block = |k: usize| vals[1 + k * m..1 + (k + 1) * m].to_vec();
        let mut slot = TraceSlot {
            demand: vals[0],
            price_adv: block(0),
            price_spot: block(1),
            theta: block(2),
            alpha: None,
            beta: None,
        };
        if sla {
            slot.alpha = Some(block(3));
            slot.beta = Some(block(4));
        }
        slot.validate().map_err(|e| Error::Parse {
            path: path.to_path_buf(),
            line,
            message: e.to_string(),
        })?;
        slots.push(slot);
    }
    if slots.is_empty() {
        return Err(Error::TraceSource(format!("{}: trace has no rows", path.display())));
    }
    Ok(slots)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn noiseless(t: usize, m: usize) -> TraceConfig {
        let mut cfg = TraceConfig::new(t, m, 5);
        cfg.price_adv.std = 0.0;
        cfg.price_spot.std = 0.0;
        cfg.theta.amplitude = vec![0.0; m];
        cfg.theta.ou_std = 0.0;
        cfg
    }

    #[test]
    fn noiseless_trace_is_constant() {
        let slots = generate(&noiseless(50, 2)).unwrap();
        for s in &slots {
            assert_eq!(s.price_adv, vec![0.5, 0.5]);
            assert_eq!(s.price_spot, vec![0.8, 0.8]);
            assert_eq!(s.theta, vec![0.5, 0.5]);
        }
    }

    #[test]
    fn seeded_generation_is_deterministic() {
        let mut cfg = TraceConfig::new(300, 3, 11);
        cfg.sla = Some(SlaParams {
            alpha_min: 0.5,
            beta_min: 1.0,
        });
        assert_eq!(generate(&cfg).unwrap(), generate(&cfg).unwrap());
        let mut other = cfg.clone();
        other.seed = 12;
        assert_ne!(generate(&cfg).unwrap(), generate(&other).unwrap());
    }

    #[test]
    fn sla_does_not_disturb_other_columns() {
        let plain = generate(&TraceConfig::new(100, 2, 3)).unwrap();
        let mut cfg = TraceConfig::new(100, 2, 3);
        cfg.sla = Some(SlaParams {
            alpha_min: 0.8,
            beta_min: 1.0,
        });
        let with = generate(&cfg).unwrap();
        for (a, b) in plain.iter().zip(&with) {
            assert_eq!(a.price_adv, b.price_adv);
            assert_eq!(a.theta, b.theta);
            assert_eq!(a.demand, b.demand);
            assert_eq!(b.beta.as_ref().unwrap(), &vec![1.0, 1.0]);
        }
    }

    #[test]
    fn alpha_draws_match_uniform_moments() {
        let mut cfg = TraceConfig::new(10_000, 1, 21);
        cfg.sla = Some(SlaParams {
            alpha_min: 0.8,
            beta_min: 1.0,
        });
        let slots = generate(&cfg).unwrap();
        let alphas: Vec<f64> = slots.iter().map(|s| s.alpha.as_ref().unwrap()[0]).collect();
        assert!(alphas.iter().all(|a| (0.8..=1.0).contains(a)));
        let mean = alphas.iter().sum::<f64>() / alphas.len() as f64;
        assert!((mean - 0.9).abs() < 0.01, "mean {mean}");
    }

    #[test]
    fn generated_values_are_nonnegative() {
        let mut cfg = TraceConfig::new(2000, 3, 8);
        cfg.price_adv.std = 0.4;
        cfg.theta.ou_std = 0.3;
        let slots = generate(&cfg).unwrap();
        for s in &slots {
            assert!(s.demand >= 0.0 && s.demand <= 1.0);
            assert!(s.price_adv.iter().chain(&s.price_spot).chain(&s.theta).all(|v| *v >= 0.0));
        }
    }

    #[test]
    fn ou_prices_revert_to_mean() {
        let mut cfg = TraceConfig::new(50_000, 1, 4);
        cfg.price_adv = OuParams {
            kappa: 0.5,
            mean: 1.0,
            std: 0.05,
            initial: None,
        };
        let slots = generate(&cfg).unwrap();
        let mean = slots.iter().map(|s| s.price_adv[0]).sum::<f64>() / slots.len() as f64;
        assert!((mean - 1.0).abs() < 0.02, "mean {mean}");
    }

    fn csv_file(body: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(body.as_bytes()).unwrap();
        f
    }

    #[test]
    fn demand_csv_normalization() {
        let f = csv_file("t,volume\n1,2\n2,4\n3,8\n");
        assert_eq!(ingest_demand_csv(f.path(), "volume", true).unwrap(), vec![0.25, 0.5, 1.0]);
        let f = csv_file("volume\n5\n");
        assert_eq!(ingest_demand_csv(f.path(), "volume", false).unwrap(), vec![5.0]);
    }

    #[test]
    fn demand_csv_reports_bad_line() {
        let f = csv_file("volume\n1\nabc\n");
        match ingest_demand_csv(f.path(), "volume", false) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("unexpected {other:?}"),
        }
        let f = csv_file("volume\n");
        assert!(matches!(ingest_demand_csv(f.path(), "volume", false), Err(Error::TraceSource(_))));
        assert!(matches!(ingest_demand_csv(Path::new("/nonexistent/x.csv"), "v", false), Err(Error::TraceSource(_))));
    }

    #[test]
    fn csv_demand_source_short_file() {
        let f = csv_file("volume\n1\n2\n");
        let mut cfg = TraceConfig::new(5, 1, 0);
        cfg.demand = DemandModel::Csv {
            path: f.path().to_path_buf(),
            column: "volume".into(),
            normalize: true,
        };
        assert!(matches!(generate(&cfg), Err(Error::TraceSource(_))));
        cfg.horizon = 2;
        let slots = generate(&cfg).unwrap();
        assert_eq!(slots[1].demand, 1.0);
    }

    #[test]
    fn trace_csv_round_trip() {
        let mut cfg = TraceConfig::new(20, 2, 9);
        cfg.sla = Some(SlaParams {
            alpha_min: 0.6,
            beta_min: 0.9,
        });
        for sla in [None, cfg.sla] {
            cfg.sla = sla;
            let slots = generate(&cfg).unwrap();
            let mut buf = Vec::new();
            write_trace_csv(&slots, &mut buf).unwrap();
            let f = csv_file(std::str::from_utf8(&buf).unwrap());
            assert_eq!(read_trace_csv(f.path()).unwrap(), slots);
        }
    }

    #[test]
    fn trace_header_layout() {
        assert_eq!(trace_header(1, false), vec!["t", "a", "p_1", "q_1", "theta_1"]);
        assert_eq!(trace_header(2, true).len(), 12);
    }
}
