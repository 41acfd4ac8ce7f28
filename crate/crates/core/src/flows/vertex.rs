use crate::error::{Error, Result};
use crate::geometry::Metric;
use crate::paths::{break_structure, BreakSite, BreakStructure, DiscretePath};
use crate::scalar::{from_usize, lit, to_f64, Real};

/// `c0 * (sigma^2 / a + (1 - sigma)^2 / (1 - a))` with `a = (1 - t) tau + t sigma`:
/// the energy of a two-leg broken geodesic whose break has been moved from
/// `tau` toward `sigma` for time `t`. With `c0 = (L1 + L2)^2` and
/// `sigma = L1 / (L1 + L2)` this is `L1^2 / a + L2^2 / (1 - a)`.
pub fn vertex_flow_energy<T: Real>(c0: T, sigma: T, tau: T, t: T) -> Result<T> {
    let a = break_position(sigma, tau, t)?;
    let s1 = T::one() - sigma;
    Ok(c0 * (sigma * sigma / a + s1 * s1 / (T::one() - a)))
}

/// Time derivative of [`vertex_flow_energy`], including the chain factor
/// `a'(t) = sigma - tau`.
pub fn vertex_flow_energy_rate<T: Real>(c0: T, sigma: T, tau: T, t: T) -> Result<T> {
    let a = break_position(sigma, tau, t)?;
    let s1 = T::one() - sigma;
    let b = T::one() - a;
    Ok(c0 * (sigma - tau) * (s1 * s1 / (b * b) - sigma * sigma / (a * a)))
}

fn break_position<T: Real>(sigma: T, tau: T, t: T) -> Result<T> {
    let a = (T::one() - t) * tau + t * sigma;
    if !(a > T::zero() && a < T::one()) {
        return Err(Error::DivisionSingularity { a: to_f64(a) });
    }
    Ok(a)
}

/// Interval of break parameters compatible with leg lengths `l1`, `l2` and
/// energy at most `b`.
///
/// Cauchy-Schwarz on each leg gives `E >= l1^2 / tau + l2^2 / (1 - tau)`, so
/// `E <= b` confines `tau` between the roots of
/// `b tau^2 - (b + l1^2 - l2^2) tau + l1^2`. The interval collapses to the
/// single point `l1 / (l1 + l2)` at the minimal energy `b = (l1 + l2)^2`, and
/// is empty below it.
pub fn tau_bounds<T: Real>(l1: T, l2: T, b: T) -> Result<(T, T)> {
    if !(b > T::zero()) || !(l1 >= T::zero()) || !(l2 >= T::zero()) {
        return Err(Error::InvalidArgument("tau bounds need b > 0 and non-negative leg lengths".into()));
    }
    let (q1, q2) = (l1 * l1, l2 * l2);
    let m = b + q1 - q2;
    let disc = m * m - lit::<T>(4.0) * b * q1;
    let two_b = b + b;
    // Rounding can push the discriminant just below zero at b = (l1 + l2)^2.
    let slack = T::epsilon() * lit(64.0) * m * m;
    if disc < -slack {
        let c = m / two_b;
        return Err(Error::InconsistentBound { lo: to_f64(c), hi: to_f64(c) });
    }
    let root = disc.max(T::zero()).sqrt();
    // Stable form for the smaller root.
    let lo = if m + root > T::zero() { (q1 + q1) / (m + root) } else { T::zero() };
    let hi = (m + root) / two_b;
    Ok((lo, hi.max(lo)))
}

/// Reparametrizes a path with exactly one break so the break moves from its
/// current parameter `tau` to `(1 - t) tau + t sigma`, where
/// `sigma = L1 / (L1 + L2)` is the constant-speed position. The image is
/// unchanged; nodes are resampled along each leg.
pub fn vertex_flow<T: Real>(path: &DiscretePath<T>, metric: &Metric<T>, t: T) -> Result<DiscretePath<T>> {
    let bs = break_structure(path, metric);
    if bs.breaks.len() != 1 {
        return Err(Error::BreakCount { found: bs.breaks.len() });
    }
    vertex_slide(path, metric, &bs, 0, t)
}

/// Slides break `k` within the window bounded by its neighbouring breaks (or
/// the path ends), toward the position that gives its two flanking legs equal
/// speed.
///
/// On the cone the break can sit anywhere inside a segment, so the new break
/// parameter is exact. For other metrics the vertex must stay a node, so the
/// target parameter is rounded to the nearest grid node.
pub fn vertex_slide<T: Real>(
    path: &DiscretePath<T>,
    metric: &Metric<T>,
    bs: &BreakStructure<T>,
    k: usize,
    t: T,
) -> Result<DiscretePath<T>> {
    let n = path.n();
    let nf: T = from_usize(n);
    let brk = bs.breaks.get(k).ok_or(Error::BreakCount { found: bs.breaks.len() })?;
    let (tl, tr) = brk.span(n);
    let u0 = if k == 0 { T::zero() } else { bs.breaks[k - 1].span(n).1 };
    let u1 = bs.breaks.get(k + 1).map_or(T::one(), |b| b.span(n).0);
    let (l1, l2) = (bs.legs[k], bs.legs[k + 1]);
    if !(l1 + l2 > T::zero()) {
        return Ok(path.clone());
    }
    let sigma = u0 + (u1 - u0) * l1 / (l1 + l2);
    let tau = brk.param;
    let mut a = (T::one() - t) * tau + t * sigma;

    let vertex_node: Option<Vec<T>> = match brk.site {
        BreakSite::Nodes { first, .. } => Some(path.node(first).to_vec()),
        BreakSite::Segment { .. } => None,
    };
    let snap = !metric.supports_segment_crossing();
    if snap {
        // Nearest grid node strictly inside the window.
        let lo = (u0 * nf).floor().to_usize().unwrap_or(0) + 1;
        let hi = (u1 * nf).ceil().to_usize().unwrap_or(n).saturating_sub(1);
        if lo > hi {
            return Ok(path.clone());
        }
        let idx = (a * nf).round().to_usize().unwrap_or(lo).clamp(lo, hi);
        a = from_usize::<T>(idx) / nf;
    }
    if !(a > u0 && a < u1) {
        return Ok(path.clone());
    }

    let mut nodes = path.nodes().to_vec();
    let half = lit::<T>(1e-12);
    for (i, node) in nodes.iter_mut().enumerate() {
        let s = from_usize::<T>(i) / nf;
        if !(s > u0 && s < u1) {
            continue;
        }
        if (s - a).abs() < half / nf {
            *node = match &vertex_node {
                Some(v) => v.clone(),
                None => sample(path, metric, tau),
            };
            continue;
        }
        let u = if s < a { u0 + (tl - u0) * (s - u0) / (a - u0) } else { tr + (u1 - tr) * (s - a) / (u1 - a) };
        *node = sample(path, metric, u);
    }
    Ok(path.with_interior(nodes))
}

/// The path's curve at parameter `u`, following each segment's own
/// interpolation.
fn sample<T: Real>(path: &DiscretePath<T>, metric: &Metric<T>, u: T) -> Vec<T> {
    let n = path.n();
    let x = u * from_usize::<T>(n);
    let j = x.floor().to_usize().unwrap_or(0).min(n - 1);
    let lam = (x - from_usize::<T>(j)).max(T::zero()).min(T::one());
    if lam == T::zero() {
        return path.node(j).to_vec();
    }
    if lam == T::one() {
        return path.node(j + 1).to_vec();
    }
    metric.point_on_segment(path.node(j), path.node(j + 1), lam)
}
