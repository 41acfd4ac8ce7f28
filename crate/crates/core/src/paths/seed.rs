use crate::error::{Error, Result};
use crate::geometry::linalg::dist;
use crate::geometry::{stereographic_fwd, stereographic_inv, Metric, VERTEX_TOL};
use crate::paths::{Boundary, BoundaryKind, DiscretePath};
use crate::scalar::{from_usize, lit, wrap_angle, Real};

/// Deterministic initial path in the homotopy class `k` about the first
/// vertex.
///
/// The angle about the reference vertex advances by the direct (wrapped)
/// difference plus `2 pi k`, with the radius interpolated linearly. Without a
/// vertex only `k = 0` is meaningful and gives the straight chord (or the
/// constant loop). On the cone the endpoint's stored angle is shifted by
/// `2 pi k` so the class is explicit in the chart. Lifted-sphere seeds are
/// built in the base chart and mapped onto the sphere.
pub fn seed_path<T: Real>(boundary: &Boundary<T>, k: i64, metric: &Metric<T>, n: usize) -> Result<DiscretePath<T>> {
    let need = 8 * (k.unsigned_abs() as usize + 1);
    if n < need {
        return Err(Error::InvalidArgument(format!("winding {k} needs N >= {need}, got {n}")));
    }
    match metric {
        Metric::Cone { .. } => cone_seed(boundary, k, n),
        Metric::LiftedSphere(l) => {
            let to_chart = |y: &Vec<T>| stereographic_inv(y);
            let chart_boundary = match boundary {
                Boundary::Fixed { p, q } => Boundary::Fixed { p: to_chart(p)?, q: to_chart(q)? },
                Boundary::Closed { basepoint } => Boundary::Closed { basepoint: to_chart(basepoint)? },
            };
            let centre = l.base().vertices().first().cloned();
            let chart = chart_seed(&chart_boundary, k, centre.as_deref(), n)?;
            let mut nodes: Vec<Vec<T>> = chart.nodes().iter().map(|x| stereographic_fwd(x)).collect();
            // Keep the caller's boundary points bit-for-bit.
            match boundary {
                Boundary::Fixed { p, q } => {
                    nodes[0] = p.clone();
                    nodes[n] = q.clone();
                }
                Boundary::Closed { basepoint } => {
                    nodes[0] = basepoint.clone();
                    nodes[n] = basepoint.clone();
                }
            }
            DiscretePath::new(nodes, chart.boundary_kind())
        }
        _ => {
            let vertices = metric.vertices();
            chart_seed(boundary, k, vertices.first().map(|v| v.as_slice()), n)
        }
    }
}

fn chart_seed<T: Real>(boundary: &Boundary<T>, k: i64, centre: Option<&[T]>, n: usize) -> Result<DiscretePath<T>> {
    let nf: T = from_usize(n);
    let two_pi = T::PI() + T::PI();
    let turns: T = T::from_i64(k).expect("winding fits scalar");
    let eps = lit::<T>(VERTEX_TOL);
    match boundary {
        Boundary::Fixed { p, q } => {
            let Some(c) = centre else {
                return if k == 0 { DiscretePath::chord(p, q, n) } else { Err(Error::NoCenter) };
            };
            let (rp, rq) = (dist(p, c), dist(q, c));
            if p.len() != 2 || rp < eps || rq < eps {
                if k == 0 {
                    return DiscretePath::chord(p, q, n);
                }
                return Err(Error::InvalidArgument(
                    "winding seeds need planar endpoints away from the reference vertex".into(),
                ));
            }
            let tp = (p[1] - c[1]).atan2(p[0] - c[0]);
            let tq = (q[1] - c[1]).atan2(q[0] - c[0]);
            let dtheta = wrap_angle(tq - tp) + two_pi * turns;
            let mut nodes: Vec<Vec<T>> = (0..=n)
                .map(|i| {
                    let s = from_usize::<T>(i) / nf;
                    let r = rp + (rq - rp) * s;
                    let t = tp + dtheta * s;
                    vec![c[0] + r * t.cos(), c[1] + r * t.sin()]
                })
                .collect();
            nodes[0] = p.clone();
            nodes[n] = q.clone();
            DiscretePath::fixed(nodes)
        }
        Boundary::Closed { basepoint } => {
            if k == 0 {
                return DiscretePath::closed(vec![basepoint.clone(); n + 1]);
            }
            let c = centre.ok_or(Error::NoCenter)?;
            let r = dist(basepoint, c);
            if basepoint.len() != 2 || r < eps {
                return Err(Error::InvalidArgument("loop seeds need a planar basepoint off the vertex".into()));
            }
            let t0 = (basepoint[1] - c[1]).atan2(basepoint[0] - c[0]);
            let mut nodes: Vec<Vec<T>> = (0..=n)
                .map(|i| {
                    let t = t0 + two_pi * turns * from_usize::<T>(i) / nf;
                    vec![c[0] + r * t.cos(), c[1] + r * t.sin()]
                })
                .collect();
            nodes[0] = basepoint.clone();
            nodes[n] = basepoint.clone();
            DiscretePath::closed(nodes)
        }
    }
}

fn cone_seed<T: Real>(boundary: &Boundary<T>, k: i64, n: usize) -> Result<DiscretePath<T>> {
    let nf: T = from_usize(n);
    let two_pi = T::PI() + T::PI();
    match boundary {
        Boundary::Fixed { p, q } => {
            if p.len() != 2 || q.len() != 2 || p[0] < T::zero() || q[0] < T::zero() {
                return Err(Error::InvalidArgument("cone endpoints are (r >= 0, theta)".into()));
            }
            let turns: T = T::from_i64(k).expect("winding fits scalar");
            let end_theta = p[1] + wrap_angle(q[1] - p[1]) + two_pi * turns;
            let mut nodes: Vec<Vec<T>> = (0..=n)
                .map(|i| {
                    let s = from_usize::<T>(i) / nf;
                    vec![p[0] + (q[0] - p[0]) * s, p[1] + (end_theta - p[1]) * s]
                })
                .collect();
            nodes[0] = p.clone();
            nodes[n] = vec![q[0], end_theta];
            DiscretePath::new(nodes, BoundaryKind::Fixed)
        }
        Boundary::Closed { basepoint } => {
            if k != 0 {
                return Err(Error::InvalidArgument(
                    "closed cone loops with nonzero winding cannot be stored in the polar chart".into(),
                ));
            }
            DiscretePath::closed(vec![basepoint.clone(); n + 1])
        }
    }
}
