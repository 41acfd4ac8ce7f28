//! Certificates for the defining conditions of a conical geodesic, and a
//! fourth-order shooter for the geodesic equation away from vertices.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Metric;
use crate::paths::{break_structure, segment_sq, DiscretePath};
use crate::scalar::{fmt_point, from_usize, lit, Real};

/// Residuals for: geodesic off the vertex set, constant speed, and a vertex
/// set without interior.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeodesicCertificate<T> {
    /// Largest discrete covariant acceleration over interior nodes that are
    /// not on a vertex, in metric units.
    pub straightness_residual: T,
    /// Largest relative deviation of a segment's metric length from the mean
    /// over all segments, across breaks included.
    pub speed_residual: T,
    /// Some vertex-incident run spans more than two grid cells.
    pub break_interior_violation: bool,
    /// Number of breaks found.
    pub breaks: usize,
    pub tolerance: T,
    pub pass: bool,
}

/// Evaluates the three geodesic conditions on `path` at tolerance `tol`.
///
/// A metric evaluation failure anywhere makes the residual infinite rather
/// than an error, so the certificate simply fails.
pub fn certify_geodesic<T: Real>(path: &DiscretePath<T>, metric: &Metric<T>, tol: T) -> GeodesicCertificate<T> {
    let n = path.n();
    let nodes = path.nodes();
    let bs = break_structure(path, metric);

    let mut straight = T::zero();
    for i in 1..n {
        if metric.vertex_at(&nodes[i]).is_some() {
            continue;
        }
        let r = metric
            .covariant_residual(&nodes[i - 1], &nodes[i], &nodes[i + 1])
            .unwrap_or(T::infinity());
        straight = straight.max(if r.is_nan() { T::infinity() } else { r });
    }

    let speed = match segment_sq(path, metric) {
        Ok(q) => {
            let lens: Vec<T> = q.into_iter().map(|v| v.sqrt()).collect();
            let mean = lens.iter().copied().sum::<T>() / from_usize::<T>(lens.len());
            if mean > T::zero() {
                lens.iter().map(|l| (*l - mean).abs() / mean).fold(T::zero(), T::max)
            } else {
                T::zero()
            }
        }
        Err(_) => T::infinity(),
    };

    let violation = bs.breaks.iter().any(|b| b.cells() > 2);
    GeodesicCertificate {
        straightness_residual: straight,
        speed_residual: speed,
        break_interior_violation: violation,
        breaks: bs.breaks.len(),
        tolerance: tol,
        pass: straight <= tol && speed <= tol && !violation,
    }
}

/// Trajectory of the Cauchy problem together with whether integration
/// stopped early at a vertex.
#[derive(Debug, Clone, PartialEq)]
pub struct Shot<T> {
    /// Nodes at the fixed RK4 steps; shorter than `n_steps + 1` when halted.
    pub path: DiscretePath<T>,
    pub halted_at_vertex: bool,
    /// Velocity at the last node.
    pub final_velocity: Vec<T>,
}

/// Integrates `D_s gamma' = 0`, `gamma(0) = p`, `gamma'(0) = v` over
/// `[0, t_max]` with `n_steps` classical Runge-Kutta steps. Stops at the
/// first step that lands in a vertex ball.
pub fn shoot<T: Real>(metric: &Metric<T>, p: &[T], v: &[T], n_steps: usize, t_max: T) -> Result<Shot<T>> {
    if metric.vertex_at(p).is_some() {
        return Err(Error::Singularity { point: fmt_point(p) });
    }
    if n_steps < 2 {
        return Err(Error::InvalidArgument("shoot needs at least two steps".into()));
    }
    let d = p.len();
    let h = t_max / from_usize::<T>(n_steps);
    let half = lit::<T>(0.5);
    let sixth = T::one() / lit(6.0);
    let two = lit::<T>(2.0);

    let rhs = |y: &[T]| -> Result<Vec<T>> {
        let (x, u) = y.split_at(d);
        let a = metric.geodesic_acceleration(x, u)?;
        Ok(u.iter().copied().chain(a).collect())
    };
    let axpy = |y: &[T], k: &[T], s: T| -> Vec<T> { y.iter().zip(k).map(|(a, b)| *a + *b * s).collect() };

    let mut y: Vec<T> = p.iter().chain(v).copied().collect();
    let mut nodes = vec![p.to_vec()];
    let mut halted = false;
    for _ in 0..n_steps {
        let stages = (|| {
            let k1 = rhs(&y)?;
            let k2 = rhs(&axpy(&y, &k1, h * half))?;
            let k3 = rhs(&axpy(&y, &k2, h * half))?;
            let k4 = rhs(&axpy(&y, &k3, h))?;
            Ok((k1, k2, k3, k4))
        })();
        // An intermediate stage landing on the vertex also ends the shot.
        let (k1, k2, k3, k4) = match stages {
            Ok(k) => k,
            Err(Error::Singularity { .. }) => {
                halted = true;
                break;
            }
            Err(e) => return Err(e),
        };
        for j in 0..y.len() {
            y[j] = y[j] + h * sixth * (k1[j] + two * k2[j] + two * k3[j] + k4[j]);
        }
        nodes.push(y[..d].to_vec());
        // Leaving the chart domain (r < 0 on the cone) means the step jumped
        // across the vertex.
        if metric.vertex_at(&y[..d]).is_some() || !metric.in_domain(&y[..d]) {
            halted = true;
            break;
        }
    }
    if nodes.len() < 3 {
        nodes.push(nodes[nodes.len() - 1].clone());
    }
    Ok(Shot { path: DiscretePath::fixed(nodes)?, halted_at_vertex: halted, final_velocity: y[d..].to_vec() })
}

/// Fourth-order one-sided estimate of `gamma'(0)` from the first five nodes.
pub fn initial_velocity<T: Real>(path: &DiscretePath<T>) -> Vec<T> {
    let x = path.nodes();
    let nf: T = from_usize(path.n());
    let c = [-25.0, 48.0, -36.0, 16.0, -3.0];
    (0..path.dim())
        .map(|k| c.iter().enumerate().fold(T::zero(), |acc, (j, cj)| acc + lit::<T>(*cj) * x[j][k]) * nf / lit(12.0))
        .collect()
}
