//! Energy-decreasing deformations of discrete paths: a preconditioned
//! curve-shortening step that never moves vertex-incident nodes, the explicit
//! reparametrization that slides a vertex break to its constant-speed
//! position, and a driver alternating the two until the path certifies.

mod driver;
mod vertex;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::linalg::{dot, solve_tridiagonal};
use crate::geometry::Metric;
use crate::paths::{energy, DiscretePath};
use crate::scalar::{from_usize, lit, Real};

pub use driver::{flow_to_geodesic, FlowReport, SlideEvent, StepEvent, TraceEntry};
pub use vertex::{tau_bounds, vertex_flow, vertex_flow_energy, vertex_flow_energy_rate, vertex_slide};

/// Step-size rule and stopping criteria.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FlowOptions<T> {
    pub max_iters: usize,
    /// Target for both certificate residuals.
    pub tol_residual: T,
    /// Initial trial step, in units of the preconditioned direction (1 is a
    /// full Newton step for the flat chart).
    pub step0: T,
    /// Backtracking factor.
    pub backtrack: T,
    /// Sufficient-decrease fraction: accept when
    /// `E_new <= E_old - nu * step * <grad, dir>`.
    pub nu: T,
    pub min_step: T,
    /// Iterations between attempts to certify the constant-speed resampling
    /// of the current iterate.
    pub check_every: usize,
}

impl<T: Real> Default for FlowOptions<T> {
    fn default() -> Self {
        Self {
            max_iters: 2000,
            tol_residual: lit(1e-6),
            step0: T::one(),
            backtrack: lit(0.5),
            nu: lit(1e-4),
            min_step: lit(1e-14),
            check_every: 10,
        }
    }
}

impl<T: Real> FlowOptions<T> {
    pub fn validate(&self) -> Result<()> {
        if self.max_iters == 0 {
            return Err(Error::InvalidArgument("max_iters must be at least 1".into()));
        }
        if !(self.backtrack > T::zero() && self.backtrack < T::one()) {
            return Err(Error::InvalidArgument("backtrack factor must lie in (0, 1)".into()));
        }
        if !(self.step0 > T::zero()) || self.nu < T::zero() || !(self.tol_residual > T::zero()) {
            return Err(Error::InvalidArgument("step0 and tol_residual must be positive, nu non-negative".into()));
        }
        Ok(())
    }
}

/// Nodes the flows may not move: the boundary nodes and every node inside a
/// vertex ball.
pub fn frozen_nodes<T: Real>(path: &DiscretePath<T>, metric: &Metric<T>) -> Vec<bool> {
    let n = path.n();
    path.nodes()
        .iter()
        .enumerate()
        .map(|(i, x)| i == 0 || i == n || metric.vertex_at(x).is_some())
        .collect()
}

/// Gradient of the discrete energy with respect to every node.
pub fn energy_gradient<T: Real>(path: &DiscretePath<T>, metric: &Metric<T>) -> Result<Vec<Vec<T>>> {
    let nf: T = from_usize(path.n());
    let nodes = path.nodes();
    let mut g = vec![vec![T::zero(); path.dim()]; nodes.len()];
    for (i, w) in nodes.windows(2).enumerate() {
        let (ga, gb) = metric.segment_sq_grad(&w[0], &w[1]).map_err(|e| e.at_segment(i))?;
        for k in 0..ga.len() {
            g[i][k] = g[i][k] + nf * ga[k];
            g[i + 1][k] = g[i + 1][k] + nf * gb[k];
        }
    }
    Ok(g)
}

/// Directional derivative `dE(path)[w]` for a variation supported away from
/// the boundary and the vertices.
pub fn first_variation<T: Real>(path: &DiscretePath<T>, metric: &Metric<T>, w: &[Vec<T>]) -> Result<T> {
    if w.len() != path.nodes().len() {
        return Err(Error::InvalidArgument(format!("variation has {} nodes, path has {}", w.len(), path.nodes().len())));
    }
    let frozen = frozen_nodes(path, metric);
    let bad: Vec<usize> = w
        .iter()
        .enumerate()
        .filter(|(i, wi)| frozen[*i] && wi.iter().any(|v| *v != T::zero()))
        .map(|(i, _)| i)
        .collect();
    if !bad.is_empty() {
        return Err(Error::InvalidVariation { indices: bad });
    }
    let g = energy_gradient(path, metric)?;
    Ok(g.iter().zip(w).map(|(gi, wi)| dot(gi, wi)).sum())
}

/// Result of one shortening attempt.
#[derive(Debug, Clone, PartialEq)]
pub struct StepOutcome<T: Real> {
    pub path: DiscretePath<T>,
    pub accepted: bool,
    /// Step length used (the last one tried when rejected).
    pub step: T,
    pub energy: T,
}

/// One backtracking step along the preconditioned negative energy gradient.
///
/// The gradient is restricted to free nodes and smoothed by the inverse of
/// the weighted path Laplacian `2N * sum_i w_i |d_{i+1} - d_i|^2`, with the
/// segment metric as weights. On the flat chart that operator is the exact
/// Hessian. Trial points that leave the chart domain, or where the metric
/// fails to evaluate, count as insufficient decrease.
pub fn shortening_step<T: Real>(path: &DiscretePath<T>, metric: &Metric<T>, opts: &FlowOptions<T>) -> Result<StepOutcome<T>> {
    let e0 = energy(path, metric)?;
    shortening_step_from(path, metric, opts, e0, opts.step0)
}

pub(crate) fn shortening_step_from<T: Real>(
    path: &DiscretePath<T>,
    metric: &Metric<T>,
    opts: &FlowOptions<T>,
    e0: T,
    step0: T,
) -> Result<StepOutcome<T>> {
    let frozen = frozen_nodes(path, metric);
    let mut grad = energy_gradient(path, metric)?;
    for (i, g) in grad.iter_mut().enumerate() {
        if frozen[i] {
            g.iter_mut().for_each(|v| *v = T::zero());
        } else {
            metric.tangent_project(path.node(i), g);
        }
    }
    let dir = precondition(path, metric, &frozen, &grad)?;
    let slope: T = grad.iter().zip(&dir).map(|(g, d)| dot(g, d)).sum();
    let rejected = |step: T| StepOutcome { path: path.clone(), accepted: false, step, energy: e0 };
    if !(slope > T::zero()) {
        return Ok(rejected(T::zero()));
    }

    let nodes = path.nodes();
    let mut step = step0;
    while step >= opts.min_step {
        let trial: Vec<Vec<T>> = nodes
            .iter()
            .zip(&dir)
            .enumerate()
            .map(|(i, (x, d))| {
                if frozen[i] {
                    return x.clone();
                }
                let mut y: Vec<T> = x.iter().zip(d).map(|(a, b)| *a - step * *b).collect();
                metric.retract(&mut y);
                y
            })
            .collect();
        let ok_domain = trial.iter().all(|x| metric.in_domain(x));
        if ok_domain {
            let candidate = path.with_interior(trial);
            if let Ok(e1) = energy(&candidate, metric) {
                if e1 < e0 && e1 <= e0 - opts.nu * step * slope {
                    return Ok(StepOutcome { path: candidate, accepted: true, step, energy: e1 });
                }
            }
        }
        step = step * opts.backtrack;
    }
    Ok(rejected(step))
}

/// Solves the weighted Laplacian system on every maximal run of free nodes,
/// one coordinate at a time.
fn precondition<T: Real>(
    path: &DiscretePath<T>,
    metric: &Metric<T>,
    frozen: &[bool],
    grad: &[Vec<T>],
) -> Result<Vec<Vec<T>>> {
    let n = path.n();
    let dim = path.dim();
    let two_n = from_usize::<T>(2 * n);
    let nodes = path.nodes();
    let weights: Vec<Vec<T>> = nodes
        .windows(2)
        .enumerate()
        .map(|(i, w)| metric.precond_weights(&w[0], &w[1]).map_err(|e| e.at_segment(i)))
        .collect::<Result<_>>()?;
    let mut dir = vec![vec![T::zero(); dim]; n + 1];
    let mut i = 0;
    while i <= n {
        if frozen[i] {
            i += 1;
            continue;
        }
        let start = i;
        while i <= n && !frozen[i] {
            i += 1;
        }
        let end = i; // exclusive
        for c in 0..dim {
            let diag: Vec<T> = (start..end).map(|j| two_n * (weights[j - 1][c] + weights[j][c])).collect();
            let off: Vec<T> = (start..end - 1).map(|j| -two_n * weights[j][c]).collect();
            let rhs: Vec<T> = (start..end).map(|j| grad[j][c]).collect();
            let sol = solve_tridiagonal(&diag, &off, &rhs);
            for (j, v) in (start..end).zip(sol) {
                dir[j][c] = v;
            }
        }
    }
    for (i, d) in dir.iter_mut().enumerate() {
        if !frozen[i] {
            metric.tangent_project(path.node(i), d);
        }
    }
    Ok(dir)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn straight_path_is_critical() {
        let m = Metric::<f64>::flat(2);
        let p = DiscretePath::chord(&[0.0, 0.0], &[1.0, 1.0], 16).unwrap();
        let mut w = vec![vec![0.0, 0.0]; 17];
        for (i, wi) in w.iter_mut().enumerate().take(16).skip(1) {
            *wi = vec![(i as f64).sin(), (i as f64 * 0.3).cos()];
        }
        assert!(first_variation(&p, &m, &w).unwrap().abs() < 1e-10);
        let out = shortening_step(&p, &m, &FlowOptions::default()).unwrap();
        assert!(!out.accepted || (out.energy - 2.0).abs() < 1e-14);
    }

    #[test]
    fn single_node_variation_is_discrete_laplacian() {
        // N = 4, w supported on node 2: dE[w] = 2N <2 x_2 - x_1 - x_3, w_2>.
        let m = Metric::<f64>::flat(2);
        let nodes = vec![vec![0.0, 0.0], vec![0.3, 0.4], vec![0.5, 0.9], vec![0.9, 1.0], vec![1.0, 1.0]];
        let p = DiscretePath::fixed(nodes.clone()).unwrap();
        let mut w = vec![vec![0.0, 0.0]; 5];
        w[2] = vec![0.7, -0.2];
        let lap: Vec<f64> = (0..2).map(|k| 2.0 * nodes[2][k] - nodes[1][k] - nodes[3][k]).collect();
        let want = 8.0 * (lap[0] * 0.7 + lap[1] * -0.2);
        assert!((first_variation(&p, &m, &w).unwrap() - want).abs() < 1e-14);
    }

    #[test]
    fn support_violation_lists_nodes() {
        let m = Metric::<f64>::flat(2);
        let p = DiscretePath::chord(&[0.0, 0.0], &[1.0, 1.0], 4).unwrap();
        let mut w = vec![vec![0.0, 0.0]; 5];
        w[0] = vec![1.0, 0.0];
        w[4] = vec![0.0, 1.0];
        assert_eq!(first_variation(&p, &m, &w).unwrap_err(), Error::InvalidVariation { indices: vec![0, 4] });
    }

    #[test]
    fn l_shape_shortens_to_chord() {
        let m = Metric::<f64>::flat(2);
        let mut nodes = Vec::new();
        for i in 0..=8 {
            nodes.push(vec![0.0, i as f64 / 8.0]);
        }
        for i in 1..=8 {
            nodes.push(vec![i as f64 / 8.0, 1.0]);
        }
        let mut p = DiscretePath::fixed(nodes).unwrap();
        let opts = FlowOptions::default();
        let mut e = energy(&p, &m).unwrap();
        for _ in 0..5 {
            let out = shortening_step(&p, &m, &opts).unwrap();
            if out.accepted {
                assert!(out.energy < e);
                e = out.energy;
                p = out.path;
            }
        }
        assert!((e - 2.0).abs() < 1e-12);
    }
}
