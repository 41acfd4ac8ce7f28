//! Scenario configuration: one JSON document.
//!
//! ```json
//! {
//!   "metric": { "kind": "cone", "alpha": 0.5 },
//!   "endpoints": { "p": [1.0, 0.0], "q": [1.0, 3.141592653589793] },
//!   "seeds": [0],
//!   "discretization": { "N": 256 },
//!   "flow": { "max_iters": 2000, "tol_residual": 1e-6 },
//!   "output": { "svg": true }
//! }
//! ```
//!
//! `metric.kind` is one of
//!
//! - `flat` with optional `dimension` (default 2),
//! - `cone` with `alpha`, chart `(r, theta)`,
//! - `conformal` with `factor` and optional `dimension`, `vertices`,
//! - `lifted_sphere` with `factor`, optional `vertices`, `growth_exponent`;
//!   endpoints stay in the planar chart and are lifted internally,
//! - `brachistochrone`, which takes its data from the `scenario` block:
//!   `potential`, `energy_level`, optional `lift`, `singular_points`,
//!   `growth_exponent`, `window`.
//!
//! Exactly one of `endpoints` and `closed_basepoint` must be given. `seeds`
//! lists winding classes about the first vertex (default `[0]`).
//!
//! Scalar fields (`factor`, `potential`) use a closed grammar over the chart
//! coordinates `x1 .. xn`:
//!
//! ```text
//! expr  := term (('+' | '-') term)*
//! term  := unary (('*' | '/') unary)*
//! unary := '-' unary | power
//! power := atom ('^' unary)?
//! atom  := number | pi | x<k> | func '(' expr (',' expr)? ')' | '(' expr ')' | '|' expr '|'
//! func  := pow | exp | log | sqrt | abs
//! ```
//!
//! `|x|` is the Euclidean norm of the chart point and `-x1^2` means
//! `-(x1^2)`.

use std::path::Path;

use conegeo::brach::ScenarioConfig;
use conegeo::flows::FlowOptions;
use conegeo::geometry::{induced_sphere_metric, Metric, ScalarField};
use conegeo::paths::Boundary;
use serde::Deserialize;

use crate::CliError;

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub metric: MetricConfig,
    pub endpoints: Option<Endpoints>,
    pub closed_basepoint: Option<Vec<f64>>,
    #[serde(default = "default_seeds")]
    pub seeds: Vec<i64>,
    #[serde(default)]
    pub discretization: Discretization,
    #[serde(default)]
    pub flow: FlowConfig,
    pub scenario: Option<Scenario>,
    #[serde(default)]
    pub output: Output,
}

fn default_seeds() -> Vec<i64> {
    vec![0]
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum MetricConfig {
    Flat {
        #[serde(default = "two")]
        dimension: usize,
    },
    Cone {
        alpha: f64,
    },
    Conformal {
        factor: String,
        #[serde(default = "two")]
        dimension: usize,
        #[serde(default)]
        vertices: Vec<Vec<f64>>,
    },
    LiftedSphere {
        factor: String,
        #[serde(default = "two")]
        dimension: usize,
        #[serde(default)]
        vertices: Vec<Vec<f64>>,
        growth_exponent: Option<f64>,
    },
    Brachistochrone,
}

fn two() -> usize {
    2
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Endpoints {
    pub p: Vec<f64>,
    pub q: Vec<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Discretization {
    #[serde(rename = "N")]
    pub n: usize,
}

impl Default for Discretization {
    fn default() -> Self {
        Self { n: 256 }
    }
}

/// Any field left out keeps the library default.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FlowConfig {
    pub max_iters: Option<usize>,
    pub tol_residual: Option<f64>,
    pub step0: Option<f64>,
    pub backtrack: Option<f64>,
    pub nu: Option<f64>,
    pub check_every: Option<usize>,
}

impl FlowConfig {
    pub fn options(&self) -> FlowOptions<f64> {
        let d = FlowOptions::default();
        FlowOptions {
            max_iters: self.max_iters.unwrap_or(d.max_iters),
            tol_residual: self.tol_residual.unwrap_or(d.tol_residual),
            step0: self.step0.unwrap_or(d.step0),
            backtrack: self.backtrack.unwrap_or(d.backtrack),
            nu: self.nu.unwrap_or(d.nu),
            check_every: self.check_every.unwrap_or(d.check_every),
            ..d
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub potential: String,
    pub energy_level: f64,
    #[serde(default)]
    pub lift: bool,
    #[serde(default)]
    pub singular_points: Vec<Vec<f64>>,
    pub growth_exponent: Option<f64>,
    pub window: Option<Vec<[f64; 2]>>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Output {
    #[serde(default = "yes")]
    pub svg: bool,
}

impl Default for Output {
    fn default() -> Self {
        Self { svg: true }
    }
}

fn yes() -> bool {
    true
}

/// What a validated config asks for.
pub enum Problem {
    /// One flow per seed on a fixed metric.
    Geodesic { metric: Metric<f64>, boundary: Boundary<f64>, lifted: bool },
    Brachistochrone(ScenarioConfig),
}

pub fn load(path: &Path) -> Result<Config, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
    parse(&text).map_err(|e| match e {
        CliError::Config(msg) => CliError::Config(format!("{}: {msg}", path.display())),
        other => other,
    })
}

/// serde_json reports the offending key and its line and column.
pub fn parse(text: &str) -> Result<Config, CliError> {
    serde_json::from_str(text).map_err(|e| CliError::Config(e.to_string()))
}

fn bad(msg: impl Into<String>) -> CliError {
    CliError::Config(msg.into())
}

impl Config {
    /// Checks that go beyond the schema and builds the problem.
    pub fn problem(&self) -> Result<Problem, CliError> {
        if self.seeds.is_empty() {
            return Err(bad("`seeds` must list at least one winding"));
        }
        if self.discretization.n < 2 {
            return Err(bad("`discretization.N` must be at least 2"));
        }
        self.flow.options().validate().map_err(|e| bad(format!("`flow`: {e}")))?;
        let boundary = match (&self.endpoints, &self.closed_basepoint) {
            (Some(e), None) => Boundary::Fixed { p: e.p.clone(), q: e.q.clone() },
            (None, Some(b)) => Boundary::Closed { basepoint: b.clone() },
            (None, None) => return Err(bad("missing field `endpoints` (or `closed_basepoint`)")),
            (Some(_), Some(_)) => return Err(bad("`endpoints` and `closed_basepoint` are mutually exclusive")),
        };
        let expect_dim = |dim: usize| -> Result<(), CliError> {
            let pts: Vec<(&str, &Vec<f64>)> = match &boundary {
                Boundary::Fixed { p, q } => vec![("endpoints.p", p), ("endpoints.q", q)],
                Boundary::Closed { basepoint } => vec![("closed_basepoint", basepoint)],
            };
            for (key, x) in pts {
                if x.len() != dim {
                    return Err(bad(format!("`{key}` has {} coordinates, the chart has {dim}", x.len())));
                }
            }
            Ok(())
        };
        let field = |src: &str, dim: usize, key: &str| {
            ScalarField::parse(src, dim).map_err(|e| bad(format!("`{key}`: {e}")))
        };
        if self.scenario.is_some() && !matches!(self.metric, MetricConfig::Brachistochrone) {
            return Err(bad("`scenario` is only used with metric kind `brachistochrone`"));
        }
        let (metric, lifted) = match &self.metric {
            MetricConfig::Flat { dimension } => {
                if *dimension < 1 {
                    return Err(bad("`metric.dimension` must be positive"));
                }
                (Metric::flat(*dimension), false)
            }
            MetricConfig::Cone { alpha } => {
                (Metric::cone(*alpha).map_err(|e| bad(format!("`metric.alpha`: {e}")))?, false)
            }
            MetricConfig::Conformal { factor, dimension, vertices } => {
                let f = field(factor, *dimension, "metric.factor")?;
                (Metric::conformal(f, vertices.clone()).map_err(|e| bad(format!("`metric`: {e}")))?, false)
            }
            MetricConfig::LiftedSphere { factor, dimension, vertices, growth_exponent } => {
                let f = field(factor, *dimension, "metric.factor")?;
                let base = Metric::conformal(f, vertices.clone()).map_err(|e| bad(format!("`metric`: {e}")))?;
                let m = induced_sphere_metric(&base, *growth_exponent).map_err(|e| bad(format!("`metric`: {e}")))?;
                (m, true)
            }
            MetricConfig::Brachistochrone => {
                let Some(s) = &self.scenario else {
                    return Err(bad("metric kind `brachistochrone` needs a `scenario` block"));
                };
                let Boundary::Fixed { p, q } = boundary else {
                    return Err(bad("metric kind `brachistochrone` needs `endpoints`"));
                };
                return Ok(Problem::Brachistochrone(ScenarioConfig {
                    potential: s.potential.clone(),
                    energy_level: s.energy_level,
                    p,
                    q,
                    singular_points: s.singular_points.clone(),
                    growth_exponent: s.growth_exponent,
                    seed_windings: self.seeds.clone(),
                    lift: s.lift,
                    window: s.window.clone(),
                }));
            }
        };
        // A lifted metric lives on the sphere; its config points are planar.
        expect_dim(if lifted { metric.dim() - 1 } else { metric.dim() })?;
        Ok(Problem::Geodesic { metric, boundary, lifted })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn missing_metric_names_key_and_position() {
        let err = parse("{\n  \"endpoints\": {\"p\": [0, 0], \"q\": [1, 0]}\n}").unwrap_err().to_string();
        assert!(err.contains("`metric`"), "{err}");
        assert!(err.contains("line 3"), "{err}");
    }

    #[test]
    fn cone_needs_alpha() {
        let err = parse(r#"{"metric": {"kind": "cone"}, "endpoints": {"p": [1, 0], "q": [1, 1]}}"#)
            .unwrap_err()
            .to_string();
        assert!(err.contains("`alpha`"), "{err}");
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let err = parse(r#"{"metric": {"kind": "flat"}, "endpoint": {}}"#).unwrap_err().to_string();
        assert!(err.contains("`endpoint`"), "{err}");
    }

    #[test]
    fn defaults_and_dimension_check() {
        let c = parse(r#"{"metric": {"kind": "flat"}, "endpoints": {"p": [0, 0], "q": [1, 2, 3]}}"#).unwrap();
        assert_eq!(c.seeds, vec![0]);
        assert_eq!(c.discretization.n, 256);
        assert!(c.output.svg);
        let err = c.problem().err().unwrap().to_string();
        assert!(err.contains("endpoints.q"), "{err}");
    }

    #[test]
    fn brachistochrone_requires_scenario() {
        let c = parse(r#"{"metric": {"kind": "brachistochrone"}, "endpoints": {"p": [0, 0], "q": [1, 1]}}"#).unwrap();
        assert!(c.problem().err().unwrap().to_string().contains("scenario"));
    }
}
