//! Brachistochrone scenarios: the conformal metric `<,> / (E - U)` whose
//! geodesics are the fastest frictionless trajectories at total energy `E`,
//! optionally transplanted to the sphere, solved over several winding seeds.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::flows::{flow_to_geodesic, FlowOptions, FlowReport};
use crate::geometry::{brach_metric, induced_sphere_metric, stereographic_fwd, stereographic_inv, Metric, ScalarField};
use crate::paths::{energy, length, seed_path, winding_number, Boundary, DiscretePath};
use crate::scalar::{fmt_point, lit, to_f64, Real};
use crate::verify::GeodesicCertificate;

/// Radius of the balls around singular points skipped by validation.
pub const SINGULAR_BALL: f64 = 1e-3;
/// Number of quasi-random validation samples.
pub const VALIDATION_SAMPLES: usize = 10_000;
/// Solutions closer than this in Hausdorff distance are merged.
pub const DEDUP_DISTANCE: f64 = 1e-3;

/// Scenario description as read from a config file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    /// Potential `U` as an expression in `x1, x2, ...`.
    pub potential: String,
    pub energy_level: f64,
    pub p: Vec<f64>,
    pub q: Vec<f64>,
    #[serde(default)]
    pub singular_points: Vec<Vec<f64>>,
    /// Exponent `a` in `-U(x) = O(|x|^a)`; estimated from the potential when
    /// absent.
    #[serde(default)]
    pub growth_exponent: Option<f64>,
    #[serde(default = "default_windings")]
    pub seed_windings: Vec<i64>,
    #[serde(default)]
    pub lift: bool,
    /// Validation box, one `[lo, hi]` per coordinate. Defaults to the
    /// bounding box of the endpoints and singular points.
    #[serde(default)]
    pub window: Option<Vec<[f64; 2]>>,
}

fn default_windings() -> Vec<i64> {
    vec![0]
}

#[derive(Debug, Clone, PartialEq)]
pub struct BrachScenario<T: Real> {
    pub potential: ScalarField,
    pub energy_level: T,
    pub singular_points: Vec<Vec<T>>,
    pub growth_exponent: Option<T>,
    pub p: Vec<T>,
    pub q: Vec<T>,
    pub seed_windings: Vec<i64>,
    pub lift: bool,
    pub window: Vec<[T; 2]>,
    /// Lifting requested with growth exponent at most 2.
    pub boundedness_warning: bool,
    metric: Metric<T>,
}

impl<T: Real> BrachScenario<T> {
    /// The chart metric `<,> / (E - U)`.
    pub fn metric(&self) -> &Metric<T> {
        &self.metric
    }

    /// The metric the solver runs on: the chart metric, or its sphere lift.
    pub fn solve_metric(&self) -> Result<Metric<T>> {
        if self.lift {
            induced_sphere_metric(&self.metric, self.growth_exponent)
        } else {
            Ok(self.metric.clone())
        }
    }
}

/// Validates a scenario config and attaches its metric.
///
/// `E > U` is checked on [`VALIDATION_SAMPLES`] Halton points of the window,
/// skipping balls of radius [`SINGULAR_BALL`] around the singular points, and
/// at both endpoints.
pub fn build_scenario<T: Real>(config: &ScenarioConfig) -> Result<BrachScenario<T>> {
    let dim = config.p.len();
    if dim == 0 || config.q.len() != dim {
        return Err(Error::InvalidArgument("endpoints p and q must have the same positive dimension".into()));
    }
    if config.singular_points.iter().any(|s| s.len() != dim) {
        return Err(Error::InvalidArgument("singular points must match the endpoint dimension".into()));
    }
    if config.seed_windings.is_empty() {
        return Err(Error::InvalidArgument("seed_windings must not be empty".into()));
    }
    let potential = ScalarField::parse(&config.potential, dim)?;
    let conv = |v: &[f64]| -> Vec<T> { v.iter().map(|x| lit(*x)).collect() };
    let energy_level: T = lit(config.energy_level);
    let singular_points: Vec<Vec<T>> = config.singular_points.iter().map(|s| conv(s)).collect();
    let (p, q) = (conv(&config.p), conv(&config.q));

    let ball = lit::<T>(SINGULAR_BALL);
    let near_singular = |x: &[T]| singular_points.iter().any(|s| crate::geometry::linalg::dist(x, s) < ball);
    for x in [&p, &q] {
        if near_singular(x) {
            return Err(Error::Singularity { point: fmt_point(x) });
        }
    }

    let window: Vec<[T; 2]> = match &config.window {
        Some(w) if w.len() == dim && w.iter().all(|[a, b]| a <= b) => w.iter().map(|[a, b]| [lit(*a), lit(*b)]).collect(),
        Some(_) => return Err(Error::InvalidArgument("window needs one [lo, hi] pair per coordinate".into())),
        None => (0..dim)
            .map(|k| {
                let coords = [&p, &q].into_iter().chain(&singular_points).map(|x| x[k]);
                let lo = coords.clone().fold(T::infinity(), T::min);
                let hi = coords.fold(T::neg_infinity(), T::max);
                [lo, hi]
            })
            .collect(),
    };

    let check = |x: &[T]| -> Result<()> {
        let u = potential.eval(x);
        if !(energy_level > u) {
            return Err(Error::EnergyLevel { point: fmt_point(x), potential: to_f64(u), energy: to_f64(energy_level) });
        }
        Ok(())
    };
    check(&p)?;
    check(&q)?;
    for i in 1..=VALIDATION_SAMPLES {
        let x: Vec<T> = window
            .iter()
            .enumerate()
            .map(|(k, [lo, hi])| *lo + (*hi - *lo) * lit(radical_inverse(i, PRIMES[k % PRIMES.len()])))
            .collect();
        if !near_singular(&x) {
            check(&x)?;
        }
    }

    let growth_exponent = match config.growth_exponent {
        Some(a) => Some(lit(a)),
        None => estimate_growth(&potential, dim).map(lit),
    };
    let boundedness_warning = config.lift && growth_exponent.is_some_and(|a: T| a <= lit(2.0));
    let metric = brach_metric(&potential, energy_level, singular_points.clone())?;
    Ok(BrachScenario {
        potential,
        energy_level,
        singular_points,
        growth_exponent,
        p,
        q,
        seed_windings: config.seed_windings.clone(),
        lift: config.lift,
        window,
        boundedness_warning,
        metric,
    })
}

const PRIMES: [usize; 8] = [2, 3, 5, 7, 11, 13, 17, 19];

fn radical_inverse(mut i: usize, base: usize) -> f64 {
    let mut f = 1.0;
    let mut r = 0.0;
    while i > 0 {
        f /= base as f64;
        r += f * (i % base) as f64;
        i /= base;
    }
    r
}

/// Slope of `log(-U)` against `log |x|` between radii 1e3 and 1e4, averaged
/// over the coordinate directions. `None` when `-U` is not positive out
/// there.
fn estimate_growth(potential: &ScalarField, dim: usize) -> Option<f64> {
    let (r1, r2) = (1e3, 1e4);
    let mut slopes = Vec::new();
    for k in 0..dim {
        for sign in [1.0, -1.0] {
            let at = |r: f64| {
                let mut x = vec![0.0; dim];
                x[k] = sign * r;
                -potential.eval(&x)
            };
            let (a, b) = (at(r1), at(r2));
            if !(a > 0.0 && b > 0.0) || !a.is_finite() || !b.is_finite() {
                return None;
            }
            slopes.push((b / a).ln() / (r2 / r1).ln());
        }
    }
    let mean = slopes.iter().sum::<f64>() / slopes.len() as f64;
    (mean > 0.0).then_some(mean)
}

/// Travel time along `path`: its length under the brachistochrone metric.
pub fn transit_time<T: Real>(path: &DiscretePath<T>, scenario: &BrachScenario<T>) -> Result<T> {
    length(path, &scenario.metric)
}

/// One converged (or abandoned) seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BrachSolution<T: Real> {
    /// Seed winding.
    pub seed: i64,
    /// Winding of the result about the first singular point, when there is
    /// one.
    pub winding: Option<i64>,
    /// Chart nodes.
    pub path: DiscretePath<T>,
    pub energy: T,
    pub transit_time: T,
    pub converged: bool,
    pub certificate: GeodesicCertificate<T>,
    pub report: FlowReport<T>,
}

/// Runs the flow from every seed winding in parallel, then sorts by energy
/// and merges results within [`DEDUP_DISTANCE`] of a lower-energy one.
pub fn solve_brachistochrone<T: Real>(
    scenario: &BrachScenario<T>,
    n: usize,
    opts: &FlowOptions<T>,
) -> Result<Vec<BrachSolution<T>>> {
    let metric = scenario.solve_metric()?;
    let mut solved: Vec<BrachSolution<T>> = scenario
        .seed_windings
        .par_iter()
        .map(|&k| solve_seed(scenario, &metric, k, n, opts))
        .collect::<Result<_>>()?;
    solved.sort_by(|a, b| a.energy.partial_cmp(&b.energy).unwrap_or(std::cmp::Ordering::Equal).then(a.seed.cmp(&b.seed)));
    let mut out: Vec<BrachSolution<T>> = Vec::new();
    let tol = lit::<T>(DEDUP_DISTANCE);
    for s in solved {
        if out.iter().all(|o| !(o.path.hausdorff(&s.path) < tol)) {
            out.push(s);
        }
    }
    Ok(out)
}

fn solve_seed<T: Real>(
    scenario: &BrachScenario<T>,
    metric: &Metric<T>,
    k: i64,
    n: usize,
    opts: &FlowOptions<T>,
) -> Result<BrachSolution<T>> {
    let boundary = if scenario.lift {
        Boundary::Fixed { p: stereographic_fwd(&scenario.p), q: stereographic_fwd(&scenario.q) }
    } else {
        Boundary::Fixed { p: scenario.p.clone(), q: scenario.q.clone() }
    };
    let seed = seed_path(&boundary, k, metric, n)?;
    let (path, report) = flow_to_geodesic(&seed, metric, opts)?;
    let e = energy(&path, metric)?;
    let (chart, converged) = if scenario.lift {
        // A path through the north pole has no chart image.
        match path.map_nodes(|y| stereographic_inv(y)) {
            Ok(c) => (c, report.converged),
            Err(Error::Pole) => (seed.map_nodes(|y| stereographic_inv(y))?, false),
            Err(e) => return Err(e),
        }
    } else {
        (path, report.converged)
    };
    let time = transit_time(&chart, scenario).unwrap_or(T::infinity());
    Ok(BrachSolution {
        seed: k,
        winding: winding_number(&chart, &scenario.metric),
        path: chart,
        energy: e,
        transit_time: time,
        converged,
        certificate: report.final_certificate,
        report,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn config(potential: &str, lift: bool) -> ScenarioConfig {
        ScenarioConfig {
            potential: potential.into(),
            energy_level: 1.0,
            p: vec![0.0, 0.0],
            q: vec![1.0, 0.5],
            singular_points: Vec::new(),
            growth_exponent: None,
            seed_windings: vec![0],
            lift,
            window: Some(vec![[-2.0, 2.0], [-2.0, 2.0]]),
        }
    }

    #[test]
    fn zero_potential_is_flat() {
        let s = build_scenario::<f64>(&config("0", false)).unwrap();
        assert!(!s.boundedness_warning);
        let m = Metric::<f64>::flat(2);
        let p = DiscretePath::chord(&[0.0, 0.0], &[1.0, 0.5], 8).unwrap();
        assert!((transit_time(&p, &s).unwrap() - length(&p, &m).unwrap()).abs() < 1e-14);
        let sol = solve_brachistochrone(&s, 32, &FlowOptions::default()).unwrap();
        assert_eq!(sol.len(), 1);
        assert!((sol[0].energy - 1.25).abs() < 1e-6);
    }

    #[test]
    fn growth_exponents_and_warning() {
        let s = build_scenario::<f64>(&config("-(x1^2+x2^2)^2", true)).unwrap();
        assert!((s.growth_exponent.unwrap() - 4.0).abs() < 1e-6);
        assert!(!s.boundedness_warning);
        let s = build_scenario::<f64>(&config("-sqrt(x1^2+x2^2)", true)).unwrap();
        assert!((s.growth_exponent.unwrap() - 1.0).abs() < 1e-6);
        assert!(s.boundedness_warning);
    }

    #[test]
    fn energy_level_violation_names_a_point() {
        let err = build_scenario::<f64>(&config("x1", false)).unwrap_err();
        assert!(matches!(err, Error::EnergyLevel { .. }), "{err:?}");
    }

    #[test]
    fn scaling_halves_time() {
        let a = build_scenario::<f64>(&config("0", false)).unwrap();
        let mut c = config("-3", false);
        c.energy_level = 1.0;
        let b = build_scenario::<f64>(&c).unwrap();
        let p = DiscretePath::chord(&[0.0, 0.0], &[1.0, 0.5], 8).unwrap();
        let (ta, tb) = (transit_time(&p, &a).unwrap(), transit_time(&p, &b).unwrap());
        assert!((tb - ta / 2.0).abs() < 1e-14);
    }

    #[test]
    fn halton_is_in_unit_interval() {
        assert_eq!(radical_inverse(1, 2), 0.5);
        assert_eq!(radical_inverse(3, 2), 0.75);
        assert!((radical_inverse(5, 3) - 7.0 / 9.0).abs() < 1e-15);
    }
}
