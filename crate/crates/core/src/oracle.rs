//! Ground truth independent of the flows: cone geodesics by unrolling, and
//! shortest paths on a metric-weighted grid graph.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Metric, MetricKind};
use crate::paths::DiscretePath;
use crate::scalar::{fmt_point, from_usize, lit, to_f64, wrap_angle, Real};

/// Closed-form cone geodesic between two points given in `(r, theta)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConeGeodesic<T> {
    pub length: T,
    pub through_vertex: bool,
    /// Developed angular separation `alpha * |dtheta|`.
    pub delta: T,
    pub alpha: T,
    pub p: [T; 2],
    /// `q` with its angle lifted to the chosen sheet, so `q[1] - p[1]` is the
    /// chart angle actually swept.
    pub q_lifted: [T; 2],
}

impl<T: Real> ConeGeodesic<T> {
    /// The geodesic sampled at constant speed with `n` segments: the
    /// developed straight segment, or two radial legs through the vertex.
    pub fn witness(&self, n: usize) -> Result<DiscretePath<T>> {
        let (p, q) = (self.p, self.q_lifted);
        let nf: T = from_usize(n);
        let nodes = (0..=n)
            .map(|i| {
                let s = from_usize::<T>(i) / nf;
                if self.through_vertex {
                    let d = s * self.length;
                    if d <= p[0] {
                        vec![p[0] - d, p[1]]
                    } else {
                        vec![d - p[0], q[1]]
                    }
                } else {
                    developed_point(self.alpha, &p, &q, s)
                }
            })
            .collect();
        DiscretePath::fixed(nodes)
    }
}

/// Point at fraction `s` of the straight developed segment from `p` to `q`
/// (requires `alpha |q1 - p1| < pi`).
fn developed_point<T: Real>(alpha: T, p: &[T; 2], q: &[T; 2], s: T) -> Vec<T> {
    let phi = alpha * (q[1] - p[1]);
    let x = (T::one() - s) * p[0] + s * q[0] * phi.cos();
    let y = s * q[0] * phi.sin();
    vec![x.hypot(y), p[1] + y.atan2(x) / alpha]
}

fn check_cone_args<T: Real>(alpha: T, p: &[T], q: &[T]) -> Result<()> {
    if !(alpha > T::zero()) {
        return Err(Error::Domain(format!("cone angle factor must be positive, got {}", to_f64(alpha))));
    }
    for x in [p, q] {
        if x.len() != 2 || !(x[0] > T::zero()) {
            return Err(Error::Domain(format!("cone point {} needs positive radius", fmt_point(x))));
        }
    }
    Ok(())
}

fn cone_from_sweep<T: Real>(alpha: T, p: &[T], q: &[T], sweep: T) -> ConeGeodesic<T> {
    let delta = alpha * sweep.abs();
    let (rp, rq) = (p[0], q[0]);
    let through = delta >= T::PI();
    let length = if through {
        rp + rq
    } else {
        let s = (delta * lit(0.5)).sin();
        ((rp - rq) * (rp - rq) + lit::<T>(4.0) * rp * rq * s * s).sqrt()
    };
    ConeGeodesic { length, through_vertex: through, delta, alpha, p: [p[0], p[1]], q_lifted: [q[0], p[1] + sweep] }
}

/// Shortest path on the cone `dr^2 + alpha^2 r^2 dtheta^2` between `p` and
/// `q`, by developing the cone into the plane. The shorter way around is
/// used; a developed separation of at least `pi` sends the path through the
/// vertex.
pub fn cone_unroll_geodesic<T: Real>(alpha: T, p: &[T], q: &[T]) -> Result<ConeGeodesic<T>> {
    check_cone_args(alpha, p, q)?;
    Ok(cone_from_sweep(alpha, p, q, wrap_angle(q[1] - p[1])))
}

/// Shortest path from `p` to `q` that sweeps the chart angle
/// `wrap(q1 - p1) + 2 pi k`, i.e. the geodesic in winding class `k`.
pub fn cone_geodesic_in_class<T: Real>(alpha: T, p: &[T], q: &[T], k: i64) -> Result<ConeGeodesic<T>> {
    check_cone_args(alpha, p, q)?;
    let two_pi = T::PI() + T::PI();
    let k = T::from_i64(k).ok_or_else(|| Error::InvalidArgument("winding out of range".into()))?;
    Ok(cone_from_sweep(alpha, p, q, wrap_angle(q[1] - p[1]) + two_pi * k))
}

/// Grid stencil of [`graph_shortest_path`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Connectivity {
    Four,
    Eight,
    Sixteen,
}

impl Connectivity {
    pub fn from_count(k: usize) -> Result<Self> {
        match k {
            4 => Ok(Self::Four),
            8 => Ok(Self::Eight),
            16 => Ok(Self::Sixteen),
            _ => Err(Error::InvalidArgument(format!("connectivity must be 4, 8 or 16, got {k}"))),
        }
    }

    fn offsets(self) -> &'static [(i64, i64)] {
        const ALL: [(i64, i64); 16] = [
            (1, 0),
            (-1, 0),
            (0, 1),
            (0, -1),
            (1, 1),
            (1, -1),
            (-1, 1),
            (-1, -1),
            (1, 2),
            (2, 1),
            (-1, 2),
            (-2, 1),
            (1, -2),
            (2, -1),
            (-1, -2),
            (-2, -1),
        ];
        match self {
            Self::Four => &ALL[..4],
            Self::Eight => &ALL[..8],
            Self::Sixteen => &ALL,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Entry {
    dist: f64,
    node: usize,
}

impl Eq for Entry {}

impl Ord for Entry {
    fn cmp(&self, other: &Self) -> Ordering {
        // Min-heap on distance, ties broken by node index for determinism.
        other.dist.total_cmp(&self.dist).then_with(|| other.node.cmp(&self.node))
    }
}

impl PartialOrd for Entry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Dijkstra distance from `p` to `q` on a `resolution x resolution` cell grid
/// over the two-dimensional chart window `[x0, x1] x [y0, y1]`.
///
/// Edge weights are segment lengths under `metric`. `p` and `q` join the
/// graph through edges to every grid node within two cells. Edges the metric
/// cannot evaluate are dropped. The result is an upper bound on the geodesic
/// distance that decreases as the grid is refined.
pub fn graph_shortest_path<T: Real>(
    metric: &Metric<T>,
    p: &[T],
    q: &[T],
    window: [[T; 2]; 2],
    resolution: usize,
    connectivity: Connectivity,
) -> Result<T> {
    if metric.dim() != 2 || metric.kind() == MetricKind::LiftedSphere {
        return Err(Error::UnsupportedKind { op: "graph_shortest_path", kind: metric.kind().to_string() });
    }
    if resolution < 2 {
        return Err(Error::InvalidArgument("resolution must be at least 2".into()));
    }
    let [[x0, x1], [y0, y1]] = window;
    if !(x1 > x0 && y1 > y0) {
        return Err(Error::InvalidArgument("empty chart window".into()));
    }
    for x in [p, q] {
        if x.len() != 2 || x[0] < x0 || x[0] > x1 || x[1] < y0 || x[1] > y1 {
            return Err(Error::Domain(format!("point {} outside the chart window", fmt_point(x))));
        }
    }
    let m = resolution + 1;
    let rf: T = from_usize(resolution);
    let (hx, hy) = ((x1 - x0) / rf, (y1 - y0) / rf);
    let coord = |i: usize, j: usize| vec![x0 + hx * from_usize::<T>(i), y0 + hy * from_usize::<T>(j)];
    let weight = |a: &[T], b: &[T]| -> Option<f64> {
        let w = to_f64(metric.segment_sq(a, b).ok()?.sqrt());
        w.is_finite().then_some(w)
    };

    // Grid nodes are 0..m*m; p is m*m and q is m*m + 1.
    let src = m * m;
    let dst = src + 1;
    let near = |x: &[T]| -> Vec<(usize, f64)> {
        let ci = to_f64((x[0] - x0) / hx);
        let cj = to_f64((x[1] - y0) / hy);
        let mut out = Vec::new();
        let (ilo, ihi) = ((ci - 2.0).ceil().max(0.0) as usize, ((ci + 2.0).floor() as usize).min(resolution));
        let (jlo, jhi) = ((cj - 2.0).ceil().max(0.0) as usize, ((cj + 2.0).floor() as usize).min(resolution));
        for i in ilo..=ihi {
            for j in jlo..=jhi {
                if (i as f64 - ci).hypot(j as f64 - cj) <= 2.0 {
                    if let Some(w) = weight(x, &coord(i, j)) {
                        out.push((i * m + j, w));
                    }
                }
            }
        }
        out
    };
    let from_p = near(p);
    let to_q: std::collections::HashMap<usize, f64> = near(q).into_iter().collect();

    let mut dist = vec![f64::INFINITY; m * m + 2];
    let mut heap = BinaryHeap::new();
    dist[src] = 0.0;
    heap.push(Entry { dist: 0.0, node: src });
    if let Some(w) = weight(p, q) {
        // p and q close enough to link directly.
        if to_f64((p[0] - q[0]) / hx).hypot(to_f64((p[1] - q[1]) / hy)) <= 2.0 {
            dist[dst] = w;
            heap.push(Entry { dist: w, node: dst });
        }
    }
    while let Some(Entry { dist: d, node }) = heap.pop() {
        if d > dist[node] {
            continue;
        }
        if node == dst {
            return Ok(lit(d));
        }
        let mut relax = |v: usize, w: f64, heap: &mut BinaryHeap<Entry>| {
            let nd = d + w;
            if nd < dist[v] {
                dist[v] = nd;
                heap.push(Entry { dist: nd, node: v });
            }
        };
        if node == src {
            for &(v, w) in &from_p {
                relax(v, w, &mut heap);
            }
            continue;
        }
        let (i, j) = (node / m, node % m);
        let here = coord(i, j);
        for &(di, dj) in connectivity.offsets() {
            let (ni, nj) = (i as i64 + di, j as i64 + dj);
            if ni < 0 || nj < 0 || ni >= m as i64 || nj >= m as i64 {
                continue;
            }
            let (ni, nj) = (ni as usize, nj as usize);
            if let Some(w) = weight(&here, &coord(ni, nj)) {
                relax(ni * m + nj, w, &mut heap);
            }
        }
        if let Some(&w) = to_q.get(&node) {
            relax(dst, w, &mut heap);
        }
    }
    Err(Error::Domain("q is unreachable from p on the grid".into()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::paths::length;
    use std::f64::consts::PI;

    #[test]
    fn unroll_examples() {
        let g = cone_unroll_geodesic(1.0, &[1.0, 0.0], &[1.0, PI]).unwrap();
        assert!(g.through_vertex && (g.length - 2.0).abs() < 1e-15);
        let g = cone_unroll_geodesic(0.5, &[1.0, 0.0], &[1.0, PI]).unwrap();
        assert!(!g.through_vertex && (g.length - 2f64.sqrt()).abs() < 1e-15);
        let g = cone_unroll_geodesic(0.25, &[1.0, 0.0], &[1.0, PI]).unwrap();
        assert!((g.length - (2.0 - 2.0 * (PI / 4.0).cos()).sqrt()).abs() < 1e-15);
        assert!(matches!(cone_unroll_geodesic(0.5, &[0.0, 0.0], &[1.0, 1.0]), Err(Error::Domain(_))));
    }

    #[test]
    fn unroll_is_continuous_across_the_vertex_transition() {
        let alpha = 1.5f64;
        let th = PI / alpha;
        let below = cone_unroll_geodesic(alpha, &[1.0, 0.0], &[0.7, th - 1e-9]).unwrap();
        let above = cone_unroll_geodesic(alpha, &[1.0, 0.0], &[0.7, th + 1e-9]).unwrap();
        assert!((below.length - 1.7).abs() < 1e-8 && (above.length - 1.7).abs() < 1e-8);
    }

    #[test]
    fn witness_has_oracle_length() {
        let m = Metric::cone(0.6).unwrap();
        for q in [[0.8f64, 2.0], [1.5, 3.0], [0.5, -3.1]] {
            let g = cone_unroll_geodesic(0.6, &[1.0, 0.2], &q).unwrap();
            let w = g.witness(64).unwrap();
            assert!((length(&w, &m).unwrap() - g.length).abs() < 1e-12, "{q:?}");
        }
    }

    #[test]
    fn winding_classes_grow() {
        let l: Vec<f64> =
            (0..3).map(|k| cone_geodesic_in_class(0.1, &[1.0, 0.0], &[1.0, 1.0], k).unwrap().length).collect();
        assert!(l[0] < l[1] && l[1] < l[2] + 1e-15);
    }

    #[test]
    fn flat_axis_path_is_exact() {
        let m = Metric::<f64>::flat(2);
        let w = [[0.0, 1.0], [-0.5, 0.5]];
        for res in [16, 32] {
            let d = graph_shortest_path(&m, &[0.0, 0.0], &[1.0, 0.0], w, res, Connectivity::Sixteen).unwrap();
            assert!((d - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn flat_diagonal_is_an_upper_bound() {
        let m = Metric::<f64>::flat(2);
        let w = [[0.0, 1.0], [0.0, 1.0]];
        let d = graph_shortest_path(&m, &[0.0, 0.0], &[1.0, 1.0], w, 128, Connectivity::Sixteen).unwrap();
        assert!(d >= 2f64.sqrt() - 1e-12 && d <= 2f64.sqrt() * 1.011);
    }

    #[test]
    fn refinement_never_lengthens_on_the_flat_chart() {
        let m = Metric::<f64>::flat(2);
        let w = [[0.0, 1.0], [0.0, 1.0]];
        let (p, q) = ([0.0, 0.0], [1.0, 0.75]);
        let mut prev = f64::INFINITY;
        for res in [16, 32, 64] {
            let d = graph_shortest_path(&m, &p, &q, w, res, Connectivity::Eight).unwrap();
            assert!(d <= prev + 1e-12);
            prev = d;
        }
    }

    #[test]
    fn outside_window_is_a_domain_error() {
        let m = Metric::<f64>::flat(2);
        let r = graph_shortest_path(&m, &[2.0, 0.0], &[0.0, 0.0], [[0.0, 1.0], [0.0, 1.0]], 16, Connectivity::Four);
        assert!(matches!(r, Err(Error::Domain(_))));
    }

    #[test]
    fn cone_graph_within_two_percent() {
        let m = Metric::cone(0.5).unwrap();
        let w = [[0.0, 1.2], [-0.1, PI + 0.1]];
        let d = graph_shortest_path(&m, &[1.0, 0.0], &[1.0, PI], w, 256, Connectivity::Sixteen).unwrap();
        let exact = 2f64.sqrt();
        assert!(d >= exact - 1e-9 && (d - exact) / exact < 0.02, "{d}");
    }
}
