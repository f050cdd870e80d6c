//! JSON problem configuration with a strict schema.

use std::fs;
use std::path::{Path, PathBuf};

use mechsolve_core::econ_model::validate_assumptions;
use mechsolve_core::solver::{ControlInit, GammaSchedule, SolverConfig};
use mechsolve_core::{
    MarketParams, Problem, RevenueModel, SatisfactionModel, Thresholds, TypeDistribution, TypeGrid,
};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{path}:{line}:{column}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        column: usize,
        message: String,
    },
    #[error("{path}:{line}: {key}: {message}")]
    Invalid {
        path: PathBuf,
        line: usize,
        key: String,
        message: String,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum DistributionConfig {
    Uniform { lo: f64, hi: f64 },
    Custom { theta: Vec<f64>, density: Vec<f64> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SatisfactionConfig {
    pub z1: f64,
    pub z2: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RevenueConfig {
    pub q1: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MarketConfig {
    pub p: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SearchKeyword {
    Search,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AutoKeyword {
    Auto,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Alpha0Setting {
    Fixed(f64),
    Search(SearchKeyword),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum UBarSetting {
    Fixed(f64),
    Auto(AutoKeyword),
}

fn default_alpha_margin() -> f64 {
    1e-6
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSection {
    pub alpha0: Alpha0Setting,
    /// Interval for `alpha0 = "search"`; defaults to `[0, 0.9 p]`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub search_interval: Option<[f64; 2]>,
    pub u_bar: UBarSetting,
    pub u_init: ControlInit,
    pub gamma0: f64,
    pub gamma_schedule: GammaSchedule,
    pub max_iters: usize,
    pub tol_u: f64,
    pub n_grid: usize,
    #[serde(default = "default_alpha_margin")]
    pub alpha_margin: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemConfig {
    pub distribution: DistributionConfig,
    pub satisfaction: SatisfactionConfig,
    pub revenue: RevenueConfig,
    pub market: MarketConfig,
    pub solver: SolverSection,
    #[serde(default)]
    pub verify: Thresholds,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
    #[serde(default)]
    pub snapshot_iters: Vec<usize>,
}

/// A configuration that passed every load-time check.
#[derive(Debug, Clone)]
pub struct LoadedConfig {
    pub path: PathBuf,
    pub raw: ProblemConfig,
    pub problem: Problem,
    /// Solver settings; `alpha0` holds the lower search bound when searching.
    pub solver: SolverConfig,
    pub search_interval: Option<(f64, f64)>,
}

/// First line mentioning `"key"`, or line 1.
fn line_of_key(text: &str, key: &str) -> usize {
    let needle = format!("\"{key}\"");
    text.lines()
        .position(|l| l.contains(&needle))
        .map_or(1, |i| i + 1)
}

impl LoadedConfig {
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_str(path, &text)
    }

    pub fn from_str(path: &Path, text: &str) -> Result<Self, ConfigError> {
        let raw: ProblemConfig = serde_json::from_str(text).map_err(|e| ConfigError::Parse {
            path: path.to_path_buf(),
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        })?;
        let invalid = |key: &str, message: String| {
            let leaf = key.rsplit('.').next().unwrap_or(key);
            ConfigError::Invalid {
                path: path.to_path_buf(),
                line: line_of_key(text, leaf),
                key: key.to_string(),
                message,
            }
        };

        let dist = match &raw.distribution {
            DistributionConfig::Uniform { lo, hi } => TypeDistribution::make_uniform(*lo, *hi),
            DistributionConfig::Custom { theta, density } => {
                TypeDistribution::custom(theta.clone(), density.clone())
            }
        }
        .map_err(|e| invalid("distribution", e.to_string()))?;
        let satisfaction = SatisfactionModel::new(raw.satisfaction.z1, raw.satisfaction.z2)
            .map_err(|e| invalid("satisfaction", e.to_string()))?;
        let revenue =
            RevenueModel::new(raw.revenue.q1).map_err(|e| invalid("revenue.q1", e.to_string()))?;
        let market =
            MarketParams::new(raw.market.p).map_err(|e| invalid("market.p", e.to_string()))?;
        let problem = Problem {
            dist,
            satisfaction,
            revenue,
            market,
        };
        let p = problem.p();

        let s = &raw.solver;
        let (alpha0, search_interval) = match s.alpha0 {
            // a leftover search interval is ignored for a fixed alpha0
            Alpha0Setting::Fixed(a) => (a, None),
            Alpha0Setting::Search(_) => {
                let [lo, hi] = s.search_interval.unwrap_or([0.0, 0.9 * p]);
                if !(lo >= 0.0 && lo <= hi && hi < p) {
                    return Err(invalid(
                        "solver.search_interval",
                        format!("must satisfy 0 <= lo <= hi < p = {p}, got [{lo}, {hi}]"),
                    ));
                }
                (lo, Some((lo, hi)))
            }
        };
        let solver = SolverConfig {
            alpha0,
            u_bar: match s.u_bar {
                UBarSetting::Fixed(v) => Some(v),
                UBarSetting::Auto(_) => None,
            },
            u_init: s.u_init.clone(),
            gamma0: s.gamma0,
            gamma_schedule: s.gamma_schedule,
            max_iters: s.max_iters,
            tol_u: s.tol_u,
            n_grid: s.n_grid,
            alpha_margin: s.alpha_margin,
            snapshot_iters: raw.snapshot_iters.clone(),
        };
        if let Err(e) = solver.validate(&problem) {
            let key = match &e {
                mechsolve_core::Error::InvalidParameter { name, .. } => format!("solver.{name}"),
                mechsolve_core::Error::LengthMismatch { .. } => "solver.u_init".into(),
                mechsolve_core::Error::GridTooSmall { .. } => "solver.n_grid".into(),
                _ => "solver".into(),
            };
            return Err(invalid(&key, e.to_string()));
        }

        let grid = TypeGrid::for_distribution(&problem.dist, solver.n_grid)
            .map_err(|e| invalid("solver.n_grid", e.to_string()))?;
        let violations = validate_assumptions(
            &problem.dist,
            &problem.satisfaction,
            &problem.revenue,
            &grid,
        );
        if let Some(v) = violations.first() {
            let key = match v {
                mechsolve_core::Violation::SatisfactionNotIncreasing { .. }
                | mechsolve_core::Violation::SatisfactionNotStrictlyConcave { .. } => {
                    "satisfaction"
                }
                mechsolve_core::Violation::RevenueNotIncreasing { .. }
                | mechsolve_core::Violation::RevenueNotStrictlyConcave { .. } => "revenue",
                _ => "distribution",
            };
            let all: Vec<String> = violations.iter().map(|v| v.to_string()).collect();
            return Err(invalid(key, all.join("; ")));
        }

        Ok(Self {
            path: path.to_path_buf(),
            raw,
            problem,
            solver,
            search_interval,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const DEFAULT: &str = include_str!("../configs/default.json");

    fn load(text: &str) -> Result<LoadedConfig, ConfigError> {
        LoadedConfig::from_str(Path::new("cfg.json"), text)
    }

    #[test]
    fn shipped_default_loads() {
        let c = load(DEFAULT).unwrap();
        assert_eq!(c.problem.p(), 10.0);
        assert_eq!(c.search_interval, Some((0.0, 9.0)));
        assert_eq!(c.solver.n_grid, 201);
        assert_eq!(c.solver.u_bar, None);
    }

    #[test]
    fn unknown_keys_are_rejected_with_a_line() {
        let text = DEFAULT.replacen("\"q1\": 0.5", "\"q1\": 0.5, \"q2\": 3", 1);
        let err = load(&text).unwrap_err().to_string();
        assert!(err.contains("unknown field `q2`"), "{err}");
        assert!(err.starts_with("cfg.json:"), "{err}");
    }

    #[test]
    fn invalid_alpha0_names_the_key() {
        let text = DEFAULT.replacen("\"alpha0\": \"search\"", "\"alpha0\": 12", 1);
        let err = load(&text).unwrap_err();
        match &err {
            ConfigError::Invalid { key, line, .. } => {
                assert_eq!(key, "solver.alpha0");
                assert!(DEFAULT.lines().nth(line - 1).unwrap().contains("alpha0"));
            }
            other => panic!("unexpected {other:?}"),
        }
        assert!(err.to_string().contains("alpha0 < p"));
    }

    #[test]
    fn assumption_violations_are_errors() {
        let text = DEFAULT.replacen("\"z1\": 0.5", "\"z1\": 0.0", 1);
        let err = load(&text).unwrap_err().to_string();
        assert!(err.contains("strictly concave"), "{err}");
    }

    #[test]
    fn custom_distribution() {
        let text = DEFAULT.replacen(
            "{ \"kind\": \"uniform\", \"lo\": 4, \"hi\": 6 }",
            "{ \"kind\": \"custom\", \"theta\": [4, 5, 6], \"density\": [1, 1, 1] }",
            1,
        );
        let c = load(&text).unwrap();
        assert_eq!(c.problem.dist.lo(), 4.0);
        assert!((c.problem.dist.density(5.0) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn keyword_settings_round_trip() {
        let c = load(DEFAULT).unwrap();
        let echoed = serde_json::to_string(&c.raw).unwrap();
        let again: ProblemConfig = serde_json::from_str(&echoed).unwrap();
        assert_eq!(again, c.raw);
        assert!(echoed.contains("\"alpha0\":\"search\""));
        assert!(echoed.contains("\"u_bar\":\"auto\""));
    }
}
