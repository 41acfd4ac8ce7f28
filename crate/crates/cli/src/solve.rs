use conegeo::brach::{build_scenario, solve_brachistochrone, BrachScenario};
use conegeo::flows::{flow_to_geodesic, FlowOptions, FlowReport};
use conegeo::geometry::{stereographic_fwd, stereographic_inv, Metric};
use conegeo::paths::{energy, length, seed_path, winding_number, Boundary, DiscretePath};
use conegeo::verify::GeodesicCertificate;
use conegeo::Error;
use rayon::prelude::*;

use crate::config::{Config, Problem};
use crate::CliError;

pub struct Solution {
    pub seed: i64,
    pub winding: Option<i64>,
    pub energy: f64,
    pub length: f64,
    pub transit_time: Option<f64>,
    pub converged: bool,
    /// Chart coordinates, so lifted solutions are mapped back to the plane.
    pub nodes: Vec<Vec<f64>>,
    pub certificate: GeodesicCertificate<f64>,
    pub report: FlowReport<f64>,
}

/// A config that passed every check short of solving.
pub struct Prepared {
    pub kind: Kind,
    /// Metric that the plots and the winding classes refer to.
    pub chart_metric: Metric<f64>,
    pub seeds: Vec<i64>,
    pub n: usize,
    pub opts: FlowOptions<f64>,
    pub warnings: Vec<String>,
}

pub enum Kind {
    Geodesic { metric: Metric<f64>, boundary: Boundary<f64>, lifted: bool },
    Brachistochrone(Box<BrachScenario<f64>>),
}

/// Schema and preflight checks: metric construction, energy-level sampling
/// for scenarios and seeding of every requested winding class.
pub fn prepare(config: &Config, seed_filter: Option<i64>) -> Result<Prepared, CliError> {
    let seeds = match seed_filter {
        Some(k) if !config.seeds.contains(&k) => {
            return Err(CliError::Config(format!("--seed-filter {k} is not one of `seeds` {:?}", config.seeds)))
        }
        Some(k) => vec![k],
        None => config.seeds.clone(),
    };
    let n = config.discretization.n;
    let opts = config.flow.options();
    let mut warnings = Vec::new();
    let (kind, chart_metric) = match config.problem()? {
        Problem::Geodesic { metric, boundary, lifted } => {
            let boundary = if lifted { lift_boundary(&boundary) } else { boundary };
            let chart_metric = match &metric {
                Metric::LiftedSphere(l) => {
                    if l.boundedness_warning() {
                        warnings.push(lift_warning(l.growth_exponent()));
                    }
                    Metric::Conformal(l.base().clone())
                }
                m => m.clone(),
            };
            for &k in &seeds {
                seed_path(&boundary, k, &metric, n).map_err(|e| seed_error(k, e))?;
            }
            (Kind::Geodesic { metric, boundary, lifted }, chart_metric)
        }
        Problem::Brachistochrone(mut sc) => {
            sc.seed_windings = seeds.clone();
            let scenario = build_scenario::<f64>(&sc).map_err(|e| CliError::Config(format!("`scenario`: {e}")))?;
            if scenario.boundedness_warning {
                warnings.push(lift_warning(scenario.growth_exponent));
            }
            let boundary = Boundary::Fixed { p: scenario.p.clone(), q: scenario.q.clone() };
            for &k in &seeds {
                seed_path(&boundary, k, scenario.metric(), n).map_err(|e| seed_error(k, e))?;
            }
            let chart_metric = scenario.metric().clone();
            (Kind::Brachistochrone(Box::new(scenario)), chart_metric)
        }
    };
    Ok(Prepared { kind, chart_metric, seeds, n, opts, warnings })
}

fn lift_boundary(b: &Boundary<f64>) -> Boundary<f64> {
    match b {
        Boundary::Fixed { p, q } => Boundary::Fixed { p: stereographic_fwd(p), q: stereographic_fwd(q) },
        Boundary::Closed { basepoint } => Boundary::Closed { basepoint: stereographic_fwd(basepoint) },
    }
}

fn lift_warning(a: Option<f64>) -> String {
    match a {
        Some(a) => format!("growth exponent {a:.3} <= 2: the lifted metric need not stay bounded at the pole"),
        None => "growth exponent <= 2: the lifted metric need not stay bounded at the pole".into(),
    }
}

fn seed_error(k: i64, e: Error) -> CliError {
    CliError::Config(format!("`seeds`: winding {k}: {e}"))
}

/// Solutions in seed order, or in energy order with near-duplicates merged
/// for scenarios.
pub fn solve(prep: &Prepared) -> Result<Vec<Solution>, CliError> {
    match &prep.kind {
        Kind::Geodesic { metric, boundary, lifted } => prep
            .seeds
            .par_iter()
            .map(|&k| solve_seed(metric, boundary, *lifted, k, prep.n, &prep.opts))
            .collect::<Result<Vec<_>, _>>()
            .map_err(CliError::Solve),
        Kind::Brachistochrone(scenario) => {
            let sols = solve_brachistochrone(scenario, prep.n, &prep.opts).map_err(CliError::Solve)?;
            sols.into_iter()
                .map(|s| {
                    Ok(Solution {
                        seed: s.seed,
                        winding: s.winding,
                        energy: s.energy,
                        length: length(&s.path, scenario.metric()).map_err(CliError::Solve)?,
                        transit_time: Some(s.transit_time),
                        converged: s.converged,
                        nodes: s.path.into_nodes(),
                        certificate: s.certificate,
                        report: s.report,
                    })
                })
                .collect()
        }
    }
}

fn solve_seed(
    metric: &Metric<f64>,
    boundary: &Boundary<f64>,
    lifted: bool,
    k: i64,
    n: usize,
    opts: &FlowOptions<f64>,
) -> conegeo::Result<Solution> {
    let seed = seed_path(boundary, k, metric, n)?;
    let (path, report) = flow_to_geodesic(&seed, metric, opts)?;
    let (chart, converged): (DiscretePath<f64>, bool) = if lifted {
        match path.map_nodes(|y| stereographic_inv(y)) {
            Ok(c) => (c, report.converged),
            // Through the north pole: no planar image.
            Err(Error::Pole) => (seed.map_nodes(|y| stereographic_inv(y))?, false),
            Err(e) => return Err(e),
        }
    } else {
        (path.clone(), report.converged)
    };
    Ok(Solution {
        seed: k,
        winding: winding_number(&path, metric),
        energy: energy(&path, metric)?,
        length: length(&path, metric)?,
        transit_time: None,
        converged,
        nodes: chart.into_nodes(),
        certificate: report.final_certificate,
        report,
    })
}
