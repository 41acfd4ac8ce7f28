//! Discrete paths on a uniform parameter grid, the energy and length
//! functionals, and the operations that reshape a path without changing its
//! image.

mod breaks;
mod reparam;
mod seed;

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::linalg::dist;
use crate::geometry::Metric;
use crate::scalar::{from_usize, lit, to_f64, wrap_angle, Real};

pub use breaks::{break_structure, Break, BreakSite, BreakStructure};
pub use reparam::reparam_constant_speed;
pub use seed::seed_path;

/// Endpoint treatment of a path.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundaryKind {
    /// `x_0 = p`, `x_N = q`, both pinned.
    Fixed,
    /// Loop based at `x_0 = x_N`, which stays pinned.
    Closed,
}

/// Boundary data used to seed a path.
#[derive(Debug, Clone, PartialEq)]
pub enum Boundary<T> {
    Fixed { p: Vec<T>, q: Vec<T> },
    Closed { basepoint: Vec<T> },
}

/// Nodes `x_0 .. x_N` sampled at `s_i = i / N`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscretePath<T> {
    nodes: Vec<Vec<T>>,
    boundary: BoundaryKind,
}

impl<T: Real> DiscretePath<T> {
    pub fn new(nodes: Vec<Vec<T>>, boundary: BoundaryKind) -> Result<Self> {
        if nodes.len() < 3 {
            return Err(Error::InvalidArgument(format!("a path needs N >= 2 segments, got {}", nodes.len().saturating_sub(1))));
        }
        let dim = nodes[0].len();
        if dim == 0 || nodes.iter().any(|x| x.len() != dim) {
            return Err(Error::InvalidArgument("path nodes have inconsistent dimensions".into()));
        }
        if boundary == BoundaryKind::Closed && nodes[0] != nodes[nodes.len() - 1] {
            return Err(Error::InvalidArgument("closed path must end at its basepoint".into()));
        }
        Ok(Self { nodes, boundary })
    }

    pub fn fixed(nodes: Vec<Vec<T>>) -> Result<Self> {
        Self::new(nodes, BoundaryKind::Fixed)
    }

    pub fn closed(nodes: Vec<Vec<T>>) -> Result<Self> {
        Self::new(nodes, BoundaryKind::Closed)
    }

    /// Straight chart chord from `p` to `q` with `n` segments.
    pub fn chord(p: &[T], q: &[T], n: usize) -> Result<Self> {
        let nf: T = from_usize(n);
        let mut nodes: Vec<Vec<T>> = (0..=n)
            .map(|i| {
                let s = from_usize::<T>(i) / nf;
                p.iter().zip(q).map(|(a, b)| *a + (*b - *a) * s).collect()
            })
            .collect();
        nodes[n] = q.to_vec();
        Self::fixed(nodes)
    }

    /// Number of segments `N`.
    pub fn n(&self) -> usize {
        self.nodes.len() - 1
    }

    pub fn dim(&self) -> usize {
        self.nodes[0].len()
    }

    pub fn nodes(&self) -> &[Vec<T>] {
        &self.nodes
    }

    pub fn node(&self, i: usize) -> &[T] {
        &self.nodes[i]
    }

    pub fn first(&self) -> &[T] {
        &self.nodes[0]
    }

    pub fn last(&self) -> &[T] {
        &self.nodes[self.n()]
    }

    pub fn boundary_kind(&self) -> BoundaryKind {
        self.boundary
    }

    pub fn boundary(&self) -> Boundary<T> {
        match self.boundary {
            BoundaryKind::Fixed => Boundary::Fixed { p: self.first().to_vec(), q: self.last().to_vec() },
            BoundaryKind::Closed => Boundary::Closed { basepoint: self.first().to_vec() },
        }
    }

    /// Grid parameter `s_i = i / N`.
    pub fn param(&self, i: usize) -> T {
        from_usize::<T>(i) / from_usize::<T>(self.n())
    }

    pub fn into_nodes(self) -> Vec<Vec<T>> {
        self.nodes
    }

    /// Replaces the interior nodes, keeping the boundary nodes as they are.
    pub(crate) fn with_interior(&self, nodes: Vec<Vec<T>>) -> Self {
        debug_assert_eq!(nodes.len(), self.nodes.len());
        let mut nodes = nodes;
        let n = self.n();
        nodes[0] = self.nodes[0].clone();
        nodes[n] = self.nodes[n].clone();
        Self { nodes, boundary: self.boundary }
    }

    /// Same boundary descriptor, new node list (boundary nodes must match).
    pub(crate) fn from_parts(nodes: Vec<Vec<T>>, boundary: BoundaryKind) -> Self {
        Self { nodes, boundary }
    }

    /// Applies `f` to every node, e.g. a change of chart.
    pub fn map_nodes<F>(&self, f: F) -> Result<Self>
    where
        F: FnMut(&Vec<T>) -> Result<Vec<T>>,
    {
        let nodes = self.nodes.iter().map(f).collect::<Result<Vec<_>>>()?;
        Ok(Self { nodes, boundary: self.boundary })
    }

    /// Symmetric Hausdorff distance between the node sets, in chart units.
    pub fn hausdorff(&self, other: &Self) -> T {
        let one_sided = |a: &Self, b: &Self| {
            a.nodes
                .iter()
                .map(|x| b.nodes.iter().map(|y| dist(x, y)).fold(T::infinity(), T::min))
                .fold(T::zero(), T::max)
        };
        one_sided(self, other).max(one_sided(other, self))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&self.cast_f64()).expect("path serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let raw: DiscretePath<f64> =
            serde_json::from_str(text).map_err(|e| Error::InvalidArgument(format!("path JSON: {e}")))?;
        let nodes = raw.nodes.iter().map(|x| x.iter().map(|v| lit(*v)).collect()).collect();
        Self::new(nodes, raw.boundary)
    }

    /// CSV with columns `s, x1, .., xn`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let io = |e: csv::Error| Error::InvalidArgument(format!("csv: {e}"));
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["s".to_string()];
        header.extend((1..=self.dim()).map(|k| format!("x{k}")));
        w.write_record(&header).map_err(io)?;
        for (i, x) in self.nodes.iter().enumerate() {
            let mut row = vec![format!("{:e}", to_f64(self.param(i)))];
            row.extend(x.iter().map(|v| format!("{:e}", to_f64(*v))));
            w.write_record(&row).map_err(io)?;
        }
        w.flush().map_err(|e| Error::InvalidArgument(format!("csv: {e}")))?;
        Ok(())
    }

    fn cast_f64(&self) -> DiscretePath<f64> {
        DiscretePath {
            nodes: self.nodes.iter().map(|x| x.iter().map(|v| to_f64(*v)).collect()).collect(),
            boundary: self.boundary,
        }
    }
}

/// Per-segment squared lengths `Q_i`.
pub fn segment_sq<T: Real>(path: &DiscretePath<T>, metric: &Metric<T>) -> Result<Vec<T>> {
    path.nodes
        .windows(2)
        .enumerate()
        .map(|(i, w)| metric.segment_sq(&w[0], &w[1]).map_err(|e| e.at_segment(i)))
        .collect()
}

/// `E = N * sum_i Q_i`, the discrete form of `int_0^1 |gamma'|^2 ds`.
pub fn energy<T: Real>(path: &DiscretePath<T>, metric: &Metric<T>) -> Result<T> {
    let q = segment_sq(path, metric)?;
    Ok(from_usize::<T>(path.n()) * q.into_iter().sum::<T>())
}

/// `L = sum_i sqrt(Q_i)`.
pub fn length<T: Real>(path: &DiscretePath<T>, metric: &Metric<T>) -> Result<T> {
    Ok(segment_sq(path, metric)?.into_iter().map(|q| q.sqrt()).sum())
}

/// Total unwrapped angle swept about the metric's reference vertex. Steps
/// touching a vertex-incident node are skipped. `None` for metrics without a
/// vertex.
pub fn angular_span<T: Real>(path: &DiscretePath<T>, metric: &Metric<T>) -> Option<T> {
    if let Metric::Cone { .. } = metric {
        return Some(path.last()[1] - path.first()[1]);
    }
    let mut total = T::zero();
    let mut prev: Option<T> = None;
    for x in &path.nodes {
        if metric.vertex_at(x).is_some() {
            prev = None;
            continue;
        }
        let a = metric.angle_about_reference(x)?;
        if let Some(p) = prev {
            total = total + wrap_angle(a - p);
        }
        prev = Some(a);
    }
    Some(total)
}

/// Integer homotopy class about the reference vertex: the number of extra
/// turns relative to the direct angular difference of the endpoints.
pub fn winding_number<T: Real>(path: &DiscretePath<T>, metric: &Metric<T>) -> Option<i64> {
    let span = angular_span(path, metric)?;
    let direct = match (path.boundary_kind(), metric) {
        (BoundaryKind::Closed, _) => T::zero(),
        (_, Metric::Cone { .. }) => wrap_angle(span),
        _ => {
            let a = metric.angle_about_reference(path.first())?;
            let b = metric.angle_about_reference(path.last())?;
            wrap_angle(b - a)
        }
    };
    let two_pi = T::PI() + T::PI();
    ((span - direct) / two_pi).round().to_i64()
}
