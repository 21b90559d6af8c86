//! Line-oriented experiment configuration.
//!
//! ```text
//! # comment
//! section.key = value
//! ```
//!
//! Vector-valued keys take comma-separated lists; a single value is
//! broadcast to every resource. Unknown and duplicate keys are rejected.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use crate::benchmarks::SolverOptions;
use crate::error::{Error, Result};
use crate::loss::LossConfig;
use crate::metrics::{BenchmarkSet, ExperimentConfig, LearnerKind, PredictorKind, SigmaChoice};
use crate::predictors::{ArmaOgdConfig, SyntheticPredictorConfig};
use crate::traces::{DemandModel, SlaParams, SyntheticDemand, TraceConfig};
use crate::FeasibleBox;

/// Raw `key = value` pairs in file order.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RawConfig {
    entries: Vec<(String, String, usize)>,
    path: PathBuf,
}

impl RawConfig {
    pub fn parse(text: &str, path: &Path) -> Result<Self> {
        let mut entries: Vec<(String, String, usize)> = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line_no = i + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| Error::Parse {
                path: path.to_path_buf(),
                line: line_no,
                message: format!("expected `key = value`, got {line:?}"),
            })?;
            let (k, v) = (k.trim().to_string(), v.trim().to_string());
            if k.is_empty() || !k.contains('.') {
                return Err(Error::Parse {
                    path: path.to_path_buf(),
                    line: line_no,
                    message: format!("key {k:?} must be `section.key`"),
                });
            }
            if let Some((_, _, first)) = entries.iter().find(|(ek, _, _)| *ek == k) {
                return Err(Error::Parse {
                    path: path.to_path_buf(),
                    line: line_no,
                    message: format!("duplicate key {k} (first set on line {first})"),
                });
            }
            entries.push((k, v, line_no));
        }
        Ok(Self {
            entries,
            path: path.to_path_buf(),
        })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text, path)
    }

    fn line_of(&self, key: &str) -> usize {
        self.entries.iter().find(|(k, _, _)| k == key).map_or(0, |e| e.2)
    }

    fn bad(&self, key: &str, msg: impl std::fmt::Display) -> Error {
        Error::Parse {
            path: self.path.clone(),
            line: self.line_of(key),
            message: format!("{key}: {msg}"),
        }
    }
}

/// One learner/predictor combination to run on the shared trace.
#[derive(Debug, Clone, PartialEq)]
pub struct Combination {
    pub name: String,
    pub experiment: ExperimentConfig,
    /// Redraws fulfillment ratios on the shared trace for this run only.
    pub sla_override: Option<SlaParams>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HarnessConfig {
    pub scenario: String,
    pub trace: TraceConfig,
    pub combinations: Vec<Combination>,
    /// Every resolved setting as sorted `key = value` pairs.
    pub resolved: BTreeMap<String, String>,
}

const KNOWN_KEYS: &[&str] = &[
    "scenario.name",
    "trace.horizon",
    "trace.resources",
    "trace.seed",
    "trace.price_adv.kappa",
    "trace.price_adv.mean",
    "trace.price_adv.std",
    "trace.price_adv.initial",
    "trace.price_spot.kappa",
    "trace.price_spot.mean",
    "trace.price_spot.std",
    "trace.price_spot.initial",
    "trace.theta.offset",
    "trace.theta.amplitude",
    "trace.theta.period",
    "trace.theta.phase",
    "trace.theta.ou_kappa",
    "trace.theta.ou_std",
    "trace.demand.source",
    "trace.demand.path",
    "trace.demand.column",
    "trace.demand.normalize",
    "trace.demand.offset",
    "trace.demand.amp_daily",
    "trace.demand.period_daily",
    "trace.demand.amp_weekly",
    "trace.demand.period_weekly",
    "trace.demand.amp_slow",
    "trace.demand.period_slow",
    "trace.demand.noise_std",
    "trace.sla.alpha_min",
    "trace.sla.beta_min",
    "experiment.horizon",
    "experiment.v",
    "experiment.bounds",
    "experiment.sigma",
    "experiment.eta_scale",
    "experiment.benchmarks",
    "solver.tol",
    "solver.max_iters",
    "arma.lag_order",
    "arma.step_scale",
    "arma.normalize_step",
    "arma.coeff_bound",
    "synthetic.seed",
    "synthetic.fixed_point_iters",
    "synthetic.fixed_point_tol",
];

struct Reader<'a> {
    raw: &'a RawConfig,
    resolved: BTreeMap<String, String>,
}

impl<'a> Reader<'a> {
    fn get(&self, key: &str) -> Option<&'a str> {
        self.raw.entries.iter().find(|(k, _, _)| k == key).map(|(_, v, _)| v.as_str())
    }

    fn record(&mut self, key: &str, value: String) {
        self.resolved.insert(key.to_string(), value);
    }

    fn f64_or(&mut self, key: &str, default: f64) -> Result<f64> {
        let v = match self.get(key) {
            Some(s) => s.parse::<f64>().map_err(|_| self.raw.bad(key, format!("not a number: {s:?}")))?,
            None => default,
        };
        self.record(key, format!("{v:?}"));
        Ok(v)
    }

    fn opt_f64(&mut self, key: &str) -> Result<Option<f64>> {
        match self.get(key) {
            None | Some("auto") => {
                self.record(key, "auto".into());
                Ok(None)
            }
            Some(s) => {
                let v = s.parse::<f64>().map_err(|_| self.raw.bad(key, format!("not a number: {s:?}")))?;
                self.record(key, format!("{v:?}"));
                Ok(Some(v))
            }
        }
    }

    fn usize_or(&mut self, key: &str, default: usize) -> Result<usize> {
        let v = match self.get(key) {
            Some(s) => s.parse::<usize>().map_err(|_| self.raw.bad(key, format!("not a nonnegative integer: {s:?}")))?,
            None => default,
        };
        self.record(key, v.to_string());
        Ok(v)
    }

    fn u64_or(&mut self, key: &str, default: u64) -> Result<u64> {
        let v = match self.get(key) {
            Some(s) => s.parse::<u64>().map_err(|_| self.raw.bad(key, format!("not a nonnegative integer: {s:?}")))?,
            None => default,
        };
        self.record(key, v.to_string());
        Ok(v)
    }

    fn bool_or(&mut self, key: &str, default: bool) -> Result<bool> {
        let v = match self.get(key) {
            Some("true") => true,
            Some("false") => false,
            Some(s) => return Err(self.raw.bad(key, format!("expected true or false, got {s:?}"))),
            None => default,
        };
        self.record(key, v.to_string());
        Ok(v)
    }

    fn str_or(&mut self, key: &str, default: &str) -> String {
        let v = self.get(key).unwrap_or(default).to_string();
        self.record(key, v.clone());
        v
    }

    fn vec_or(&mut self, key: &str, m: usize, default: &[f64]) -> Result<Vec<f64>> {
        let v = match self.get(key) {
            Some(s) => {
                let vals = parse_list(s).map_err(|e| self.raw.bad(key, e))?;
                match vals.len() {
                    1 => vec![vals[0]; m],
                    n if n == m => vals,
                    n => return Err(self.raw.bad(key, format!("expected 1 or {m} values, got {n}"))),
                }
            }
            None => default.to_vec(),
        };
        self.record(key, join(&v));
        Ok(v)
    }
}

fn parse_list(s: &str) -> std::result::Result<Vec<f64>, String> {
    s.split(',')
        .map(|p| p.trim().parse::<f64>().map_err(|_| format!("not a number: {p:?}")))
        .collect()
}

fn join(v: &[f64]) -> String {
    v.iter().map(|x| format!("{x:?}")).collect::<Vec<_>>().join(", ")
}

fn valid_name(name: &str) -> bool {
    !name.is_empty()
        && name != "manifest"
        && name.chars().all(|c| c.is_ascii_alphanumeric() || matches!(c, '_' | '-' | '.'))
        && !name.starts_with('.')
}

impl HarnessConfig {
    pub fn load(path: &Path, seed_override: Option<u64>) -> Result<Self> {
        Self::from_raw(&RawConfig::load(path)?, seed_override)
    }

    pub fn from_raw(raw: &RawConfig, seed_override: Option<u64>) -> Result<Self> {
        for (k, _, line) in &raw.entries {
            if !k.starts_with("combo.") && !KNOWN_KEYS.contains(&k.as_str()) {
                return Err(Error::Parse {
                    path: raw.path.clone(),
                    line: *line,
                    message: format!("unknown key {k}"),
                });
            }
        }
        let mut r = Reader {
            raw,
            resolved: BTreeMap::new(),
        };
        let scenario = r.str_or("scenario.name", "default");

        let horizon = r.usize_or("trace.horizon", 1008)?;
        let m = r.usize_or("trace.resources", 3)?;
        let mut seed = r.u64_or("trace.seed", 0)?;
        if let Some(s) = seed_override {
            seed = s;
            r.record("trace.seed", s.to_string());
        }
        let mut trace = TraceConfig::new(horizon, m, seed);

        for (prefix, ou) in [("trace.price_adv", &mut trace.price_adv), ("trace.price_spot", &mut trace.price_spot)] {
            ou.kappa = r.f64_or(&format!("{prefix}.kappa"), ou.kappa)?;
            ou.mean = r.f64_or(&format!("{prefix}.mean"), ou.mean)?;
            ou.std = r.f64_or(&format!("{prefix}.std"), ou.std)?;
            ou.initial = r.opt_f64(&format!("{prefix}.initial"))?;
        }

        let th = &mut trace.theta;
        th.offset = r.vec_or("trace.theta.offset", m, &th.offset.clone())?;
        th.amplitude = r.vec_or("trace.theta.amplitude", m, &th.amplitude.clone())?;
        th.period = r.vec_or("trace.theta.period", m, &th.period.clone())?;
        if r.get("trace.theta.phase") == Some("auto") {
            r.record("trace.theta.phase", join(&th.phase));
        } else {
            th.phase = r.vec_or("trace.theta.phase", m, &th.phase.clone())?;
        }
        th.ou_kappa = r.f64_or("trace.theta.ou_kappa", th.ou_kappa)?;
        th.ou_std = r.f64_or("trace.theta.ou_std", th.ou_std)?;

        trace.demand = match r.str_or("trace.demand.source", "synthetic").as_str() {
            "synthetic" => {
                let d = SyntheticDemand::default();
                DemandModel::Synthetic(SyntheticDemand {
                    offset: r.f64_or("trace.demand.offset", d.offset)?,
                    amp_daily: r.f64_or("trace.demand.amp_daily", d.amp_daily)?,
                    period_daily: r.f64_or("trace.demand.period_daily", d.period_daily)?,
                    amp_weekly: r.f64_or("trace.demand.amp_weekly", d.amp_weekly)?,
                    period_weekly: r.f64_or("trace.demand.period_weekly", d.period_weekly)?,
                    amp_slow: r.f64_or("trace.demand.amp_slow", d.amp_slow)?,
                    period_slow: r.f64_or("trace.demand.period_slow", d.period_slow)?,
                    noise_std: r.f64_or("trace.demand.noise_std", d.noise_std)?,
                })
            }
            "csv" => {
                let p = r
                    .get("trace.demand.path")
                    .ok_or_else(|| raw.bad("trace.demand.path", "required when trace.demand.source = csv"))?;
                let mut path = PathBuf::from(p);
                if path.is_relative() {
                    if let Some(dir) = raw.path.parent() {
                        path = dir.join(path);
                    }
                }
                r.record("trace.demand.path", p.to_string());
                DemandModel::Csv {
                    path,
                    column: r.str_or("trace.demand.column", "demand"),
                    normalize: r.bool_or("trace.demand.normalize", true)?,
                }
            }
            other => return Err(raw.bad("trace.demand.source", format!("expected synthetic or csv, got {other:?}"))),
        };

        if r.get("trace.sla.alpha_min").is_some() || r.get("trace.sla.beta_min").is_some() {
            trace.sla = Some(SlaParams {
                alpha_min: r.f64_or("trace.sla.alpha_min", 1.0)?,
                beta_min: r.f64_or("trace.sla.beta_min", 1.0)?,
            });
        }
        trace.validate().map_err(|e| Error::Config(format!("{}: {e}", raw.path.display())))?;

        let exp_horizon = r.usize_or("experiment.horizon", horizon)?;
        let v = r.f64_or("experiment.v", 2.0)?;
        let loss = LossConfig::new(v).map_err(|e| raw.bad("experiment.v", e))?;
        let bounds = r.vec_or("experiment.bounds", m, &vec![1.0; m])?;
        let feasible = FeasibleBox::new(bounds).map_err(|e| raw.bad("experiment.bounds", e))?;
        let sigma = match r.opt_f64("experiment.sigma")? {
            None => SigmaChoice::Auto,
            Some(s) => SigmaChoice::Fixed(s),
        };
        let eta_scale = r.opt_f64("experiment.eta_scale")?;
        let benchmarks = match r.str_or("experiment.benchmarks", "both").as_str() {
            "both" => BenchmarkSet::Both,
            "static" => BenchmarkSet::Static,
            "dynamic" => BenchmarkSet::Dynamic,
            other => return Err(raw.bad("experiment.benchmarks", format!("expected both, static or dynamic, got {other:?}"))),
        };
        let solver = SolverOptions {
            tol: r.f64_or("solver.tol", 1e-9)?,
            max_iters: r.usize_or("solver.max_iters", 10_000)?,
        };
        let ad = ArmaOgdConfig::default();
        let arma = ArmaOgdConfig {
            lag_order: r.usize_or("arma.lag_order", ad.lag_order)?,
            step_scale: r.f64_or("arma.step_scale", ad.step_scale)?,
            normalize_step: r.bool_or("arma.normalize_step", ad.normalize_step)?,
            coeff_bound: r.f64_or("arma.coeff_bound", ad.coeff_bound)?,
        };
        let syn_seed = r.u64_or("synthetic.seed", seed)?;
        let fp_iters = r.usize_or("synthetic.fixed_point_iters", 20)?;
        let fp_tol = r.f64_or("synthetic.fixed_point_tol", 1e-10)?;

        let base = ExperimentConfig {
            learner: LearnerKind::Oolr,
            predictor: PredictorKind::Zero,
            loss,
            feasible,
            sigma,
            benchmarks,
            solver,
            horizon: exp_horizon,
            z1: None,
        };
        base.resolved_sigma().map_err(|e| raw.bad("experiment.sigma", e))?;

        let mut combinations = Vec::new();
        for (k, v, _) in &raw.entries {
            let Some(name) = k.strip_prefix("combo.") else { continue };
            if !valid_name(name) {
                return Err(raw.bad(k, "combination names may use letters, digits, '_', '-' and '.'"));
            }
            let mut exp = base.clone();
            let mut sla_override = None;
            let words: Vec<&str> = v.split_whitespace().collect();
            let mut rest = words.as_slice();
            match rest {
                ["ftrl", tail @ ..] => {
                    exp.learner = LearnerKind::Ftrl { eta_scale };
                    rest = tail;
                }
                ["oolr", "arma", tail @ ..] => {
                    exp.predictor = PredictorKind::ArmaOgd(arma.clone());
                    rest = tail;
                }
                ["oolr", "zero", tail @ ..] => rest = tail,
                ["oolr", "synthetic", zeta, tail @ ..] => {
                    let zeta: f64 = zeta.parse().map_err(|_| raw.bad(k, format!("bad zeta {zeta:?}")))?;
                    let mut sc = SyntheticPredictorConfig::new(zeta, syn_seed).map_err(|e| raw.bad(k, e))?;
                    sc.fixed_point_iters = fp_iters;
                    sc.fixed_point_tol = fp_tol;
                    exp.predictor = PredictorKind::Synthetic(sc);
                    rest = tail;
                }
                _ => {
                    return Err(raw.bad(
                        k,
                        format!("expected `ftrl`, `oolr arma`, `oolr zero` or `oolr synthetic ZETA`, got {v:?}"),
                    ))
                }
            }
            for opt in rest {
                let Some(spec) = opt.strip_prefix("sla=") else {
                    return Err(raw.bad(k, format!("unknown option {opt:?}")));
                };
                let vals = parse_list(spec).map_err(|e| raw.bad(k, e))?;
                let [alpha_min, beta_min] = vals[..] else {
                    return Err(raw.bad(k, "sla= takes ALPHA_MIN,BETA_MIN"));
                };
                sla_override = Some(SlaParams { alpha_min, beta_min });
            }
            let fp = if let PredictorKind::Synthetic(s) = &exp.predictor {
                format!(" seed={} iters={} tol={:?}", s.rng_seed, s.fixed_point_iters, s.fixed_point_tol)
            } else {
                String::new()
            };
            r.record(k, format!("{}{fp}", words.join(" ")));
            combinations.push(Combination {
                name: name.to_string(),
                experiment: exp,
                sla_override,
            });
        }
        if combinations.is_empty() {
            combinations.push(Combination {
                name: "oolrgrad".into(),
                experiment: ExperimentConfig {
                    predictor: PredictorKind::ArmaOgd(arma),
                    ..base
                },
                sla_override: None,
            });
            r.record("combo.oolrgrad", "oolr arma".into());
        }
        Ok(Self {
            scenario,
            trace,
            combinations,
            resolved: r.resolved,
        })
    }

    /// Canonical text of the resolved configuration.
    pub fn canonical(&self) -> String {
        self.resolved.iter().map(|(k, v)| format!("{k} = {v}\n")).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> Result<HarnessConfig> {
        HarnessConfig::from_raw(&RawConfig::parse(text, Path::new("test.cfg"))?, None)
    }

    #[test]
    fn defaults_resolve() {
        let c = parse("").unwrap();
        assert_eq!(c.trace.horizon, 1008);
        assert_eq!(c.trace.resources, 3);
        assert_eq!(c.combinations.len(), 1);
        assert_eq!(c.combinations[0].experiment.feasible.bounds(), &[1.0, 1.0, 1.0]);
    }

    #[test]
    fn combos_in_file_order() {
        let c = parse(
            "combo.ftrl = ftrl\ncombo.z0 = oolr synthetic 0\ncombo.grad = oolr arma sla=0.5,1\n# note\ncombo.zero = oolr zero\n",
        )
        .unwrap();
        let names: Vec<&str> = c.combinations.iter().map(|c| c.name.as_str()).collect();
        assert_eq!(names, vec!["ftrl", "z0", "grad", "zero"]);
        assert!(matches!(c.combinations[0].experiment.learner, LearnerKind::Ftrl { .. }));
        assert_eq!(
            c.combinations[2].sla_override,
            Some(SlaParams {
                alpha_min: 0.5,
                beta_min: 1.0
            })
        );
    }

    #[test]
    fn broadcasts_and_lists() {
        let c = parse("trace.resources = 2\nexperiment.bounds = 1, 0.5\ntrace.theta.offset = 0.4\n").unwrap();
        assert_eq!(c.combinations[0].experiment.feasible.bounds(), &[1.0, 0.5]);
        assert_eq!(c.trace.theta.offset, vec![0.4, 0.4]);
        assert!(parse("trace.resources = 2\nexperiment.bounds = 1, 0.5, 2\n").is_err());
    }

    #[test]
    fn rejects_unknown_duplicate_and_malformed() {
        assert!(matches!(parse("trace.horizn = 5\n"), Err(Error::Parse { line: 1, .. })));
        assert!(matches!(parse("trace.seed = 1\ntrace.seed = 2\n"), Err(Error::Parse { line: 2, .. })));
        assert!(matches!(parse("just words\n"), Err(Error::Parse { .. })));
        assert!(parse("experiment.v = 0.5\n").is_err());
        assert!(parse("combo.x = sgd\n").is_err());
        assert!(parse("combo.bad/name = ftrl\n").is_err());
        assert!(parse("experiment.sigma = -1\n").is_err());
    }

    #[test]
    fn canonical_text_tracks_every_change() {
        let a = parse("trace.seed = 1\n").unwrap().canonical();
        let b = parse("trace.seed = 2\n").unwrap().canonical();
        let c = parse("trace.seed = 1\narma.lag_order = 5\n").unwrap().canonical();
        assert_ne!(a, b);
        // an explicit default resolves to the same configuration
        assert_eq!(a, c);
    }

    #[test]
    fn seed_override_wins() {
        let raw = RawConfig::parse("trace.seed = 1\ncombo.z = oolr synthetic 0.3\n", Path::new("t.cfg")).unwrap();
        let c = HarnessConfig::from_raw(&raw, Some(42)).unwrap();
        assert_eq!(c.trace.seed, 42);
        match &c.combinations[0].experiment.predictor {
            PredictorKind::Synthetic(s) => assert_eq!(s.rng_seed, 42),
            other => panic!("unexpected {other:?}"),
        }
    }
}
