use crate::error::{Error, Result};
use crate::geometry::Metric;
use crate::paths::{length, BreakSite, DiscretePath};
use crate::paths::breaks::break_structure;
use crate::scalar::{from_usize, lit, Real};

/// Resamples the path so that every segment has the same metric length.
///
/// Nodes are placed by marching along the old polyline with a fixed chord
/// `c`, which is tuned by bisection until the last chord closes exactly on
/// the endpoint. On the cone, segments may pass through the vertex, so the
/// whole path is resampled at once and the speed is exactly constant. For
/// other metrics with vertex-incident nodes each run of incident nodes is
/// collapsed to one node that stays put, and the legs between them are
/// resampled separately with cell counts proportional to their lengths.
pub fn reparam_constant_speed<T: Real>(path: &DiscretePath<T>, metric: &Metric<T>) -> Result<DiscretePath<T>> {
    let total = length(path, metric)?;
    if !(total > T::zero()) {
        return Err(Error::DegeneratePath);
    }
    let n = path.n();
    let nodes = path.nodes();
    let bs = break_structure(path, metric);
    let runs: Vec<(usize, usize)> = bs
        .breaks
        .iter()
        .filter_map(|b| match b.site {
            BreakSite::Nodes { first, last } => Some((first, last)),
            BreakSite::Segment { .. } => None,
        })
        .collect();

    if runs.is_empty() || metric.supports_segment_crossing() {
        let out = equal_chord(metric, nodes, n)?;
        return Ok(DiscretePath::from_parts(out, path.boundary_kind()));
    }

    // Legs as node ranges between incident runs; a run contributes its first
    // node as the shared endpoint.
    let mut legs: Vec<Vec<Vec<T>>> = Vec::new();
    let mut start = 0;
    for &(first, last) in &runs {
        let mut leg: Vec<Vec<T>> = nodes[start..=first].to_vec();
        if start > 0 {
            leg[0] = nodes[runs.iter().find(|r| r.1 == start).map_or(start, |r| r.0)].clone();
        }
        legs.push(leg);
        start = last;
    }
    let mut tail: Vec<Vec<T>> = nodes[start..].to_vec();
    tail[0] = nodes[runs.last().map_or(start, |r| r.0)].clone();
    legs.push(tail);

    let lens: Vec<T> = legs.iter().map(|leg| polyline_length(metric, leg)).collect::<Result<_>>()?;
    let cells = allocate_cells(&lens, n);
    let mut out: Vec<Vec<T>> = Vec::with_capacity(n + 1);
    for (leg, &k) in legs.iter().zip(&cells) {
        let mut piece = equal_chord(metric, leg, k)?;
        if !out.is_empty() {
            piece.remove(0);
        }
        out.extend(piece);
    }
    debug_assert_eq!(out.len(), n + 1);
    out[n] = nodes[n].clone();
    Ok(DiscretePath::from_parts(out, path.boundary_kind()))
}

fn polyline_length<T: Real>(metric: &Metric<T>, poly: &[Vec<T>]) -> Result<T> {
    poly.windows(2).map(|w| metric.segment_sq(&w[0], &w[1]).map(|q| q.sqrt())).sum()
}

/// Largest-remainder split of `n` cells in proportion to `lens`, giving each
/// leg of positive length at least one cell.
fn allocate_cells<T: Real>(lens: &[T], n: usize) -> Vec<usize> {
    let total: T = lens.iter().copied().sum();
    let positive = lens.iter().filter(|l| **l > T::zero()).count();
    let spare = n.saturating_sub(positive);
    let mut cells: Vec<usize> = Vec::with_capacity(lens.len());
    let mut rema: Vec<(T, usize)> = Vec::new();
    for (i, l) in lens.iter().enumerate() {
        if *l > T::zero() {
            let share = *l / total * from_usize::<T>(spare);
            let whole = share.floor();
            cells.push(1 + whole.to_usize().unwrap_or(0));
            rema.push((share - whole, i));
        } else {
            cells.push(0);
        }
    }
    let mut left = n - cells.iter().sum::<usize>();
    rema.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap_or(std::cmp::Ordering::Equal).then(a.1.cmp(&b.1)));
    for (_, i) in rema {
        if left == 0 {
            break;
        }
        cells[i] += 1;
        left -= 1;
    }
    cells
}

/// `cells + 1` points along `poly` with equal consecutive chords, first and
/// last points exactly the polyline ends.
fn equal_chord<T: Real>(metric: &Metric<T>, poly: &[Vec<T>], cells: usize) -> Result<Vec<Vec<T>>> {
    let first = poly[0].clone();
    let last = poly[poly.len() - 1].clone();
    if cells == 0 {
        return Ok(vec![first]);
    }
    let total = polyline_length(metric, poly)?;
    if cells == 1 || !(total > T::zero()) {
        let mut out = vec![first.clone(); cells + 1];
        out[cells] = last;
        return Ok(out);
    }
    // residual(c) = last chord - c, positive for small c, undefined (march
    // runs off the end) for large c.
    let residual = |c: T| -> Result<Option<(T, Vec<Vec<T>>)>> {
        match march(metric, poly, c, cells - 1)? {
            Some(pts) => {
                let tail = metric.segment_sq(&pts[pts.len() - 1], &last)?.sqrt();
                Ok(Some((tail - c, pts)))
            }
            None => Ok(None),
        }
    };
    let mut lo = T::zero();
    let mut hi = total;
    let mut best: Option<Vec<Vec<T>>> = None;
    let tol = T::epsilon() * lit(4.0);
    for _ in 0..200 {
        let mid = (lo + hi) * lit(0.5);
        if mid <= lo || mid >= hi || hi - lo <= tol * hi {
            break;
        }
        match residual(mid)? {
            Some((r, pts)) if r >= T::zero() => {
                lo = mid;
                best = Some(pts);
                if r == T::zero() {
                    break;
                }
            }
            _ => hi = mid,
        }
    }
    let mut out = match best {
        Some(pts) => pts,
        None => march(metric, poly, lo, cells - 1)?.unwrap_or_else(|| vec![first.clone(); cells]),
    };
    out.push(last);
    Ok(out)
}

/// Marches `steps` chords of length `c` along `poly`. `None` if the polyline
/// ends first.
fn march<T: Real>(metric: &Metric<T>, poly: &[Vec<T>], c: T, steps: usize) -> Result<Option<Vec<Vec<T>>>> {
    let c2 = c * c;
    let m = poly.len() - 1;
    let mut out = Vec::with_capacity(steps + 1);
    let mut p = poly[0].clone();
    out.push(p.clone());
    let (mut seg, mut lam) = (0usize, T::zero());
    for _ in 0..steps {
        let mut j = seg;
        loop {
            if j >= m {
                return Ok(None);
            }
            if metric.segment_sq(&p, &poly[j + 1])? >= c2 {
                break;
            }
            j += 1;
        }
        let lo = if j == seg { lam } else { T::zero() };
        let f = |l: T| -> Result<T> {
            let x = metric.point_on_segment(&poly[j], &poly[j + 1], l);
            Ok(metric.segment_sq(&p, &x)? - c2)
        };
        let l = illinois(f, lo, T::one())?;
        p = metric.point_on_segment(&poly[j], &poly[j + 1], l);
        seg = j;
        lam = l;
        out.push(p.clone());
    }
    Ok(Some(out))
}

/// Regula falsi with the Illinois modification on a bracket with
/// `f(lo) <= 0 <= f(hi)`.
pub(crate) fn illinois<T: Real, F: FnMut(T) -> Result<T>>(mut f: F, lo: T, hi: T) -> Result<T> {
    let (mut a, mut b) = (lo, hi);
    let (mut fa, mut fb) = (f(a)?, f(b)?);
    if fa >= T::zero() {
        return Ok(a);
    }
    if fb <= T::zero() {
        return Ok(b);
    }
    let half = lit::<T>(0.5);
    let mut side = 0i8;
    for _ in 0..200 {
        let x = (a * fb - b * fa) / (fb - fa);
        let x = if x > a && x < b { x } else { (a + b) * half };
        let fx = f(x)?;
        if fx == T::zero() || b - a <= T::epsilon() * lit(4.0) * (a.abs() + b.abs()).max(T::one()) {
            return Ok(x);
        }
        if fx < T::zero() {
            a = x;
            fa = fx;
            if side == -1 {
                fb = fb * half;
            }
            side = -1;
        } else {
            b = x;
            fb = fx;
            if side == 1 {
                fa = fa * half;
            }
            side = 1;
        }
    }
    Ok((a + b) * half)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::paths::energy;

    #[test]
    fn straight_constant_speed_is_fixed_point() {
        let m = Metric::<f64>::flat(2);
        let p = DiscretePath::chord(&[0.0, 0.0], &[1.0, 0.5], 16).unwrap();
        let r = reparam_constant_speed(&p, &m).unwrap();
        for (a, b) in p.nodes().iter().zip(r.nodes()) {
            assert!((a[0] - b[0]).abs() < 1e-12 && (a[1] - b[1]).abs() < 1e-12);
        }
    }

    #[test]
    fn clustered_l_shape_reaches_length_squared() {
        let m = Metric::flat(2);
        // 12 nodes on the first leg, 4 on the second.
        let mut nodes = Vec::new();
        for i in 0..=12 {
            nodes.push(vec![0.0, (i as f64 / 12.0).powi(2)]);
        }
        for i in 1..=4 {
            nodes.push(vec![i as f64 / 4.0, 1.0]);
        }
        let p = DiscretePath::fixed(nodes).unwrap();
        let r = reparam_constant_speed(&p, &m).unwrap();
        assert!((energy(&r, &m).unwrap() - 4.0).abs() < 1e-6);
    }

    #[test]
    fn degenerate_path_is_an_error() {
        let p = DiscretePath::fixed(vec![vec![1.0, 1.0]; 4]).unwrap();
        assert_eq!(reparam_constant_speed(&p, &Metric::flat(2)).unwrap_err(), Error::DegeneratePath);
    }

    #[test]
    fn allocation_sums_to_n() {
        assert_eq!(allocate_cells(&[1.0, 1.0], 8), vec![4, 4]);
        assert_eq!(allocate_cells(&[0.0, 3.0, 1.0], 9).iter().sum::<usize>(), 9);
        assert_eq!(allocate_cells(&[0.0, 3.0, 1.0], 9)[0], 0);
    }
}
