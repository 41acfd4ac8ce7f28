use serde::{Deserialize, Serialize};

use crate::geometry::Metric;
use crate::paths::DiscretePath;
use crate::scalar::{from_usize, Real};

/// Where a path meets a vertex.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum BreakSite<T> {
    /// Nodes `first ..= last` all lie in the vertex ball.
    Nodes { first: usize, last: usize },
    /// Segment `index` passes through the vertex at `fraction` of its length.
    Segment { index: usize, fraction: T },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Break<T> {
    /// Break parameter `tau`; the midpoint of the incident interval for node
    /// runs.
    pub param: T,
    pub vertex: usize,
    pub site: BreakSite<T>,
}

impl<T: Real> Break<T> {
    /// Parameter interval occupied by the break.
    pub fn span(&self, n: usize) -> (T, T) {
        let nf: T = from_usize(n);
        match self.site {
            BreakSite::Nodes { first, last } => (from_usize::<T>(first) / nf, from_usize::<T>(last) / nf),
            BreakSite::Segment { .. } => (self.param, self.param),
        }
    }

    /// Number of grid cells the incident interval covers.
    pub fn cells(&self) -> usize {
        match self.site {
            BreakSite::Nodes { first, last } => last - first,
            BreakSite::Segment { .. } => 0,
        }
    }
}

/// Vertex incidence of a path: breaks in parameter order, the metric length
/// of each vertex-free leg between them, and the parameter intervals of those
/// legs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BreakStructure<T> {
    pub breaks: Vec<Break<T>>,
    pub legs: Vec<T>,
    pub components: Vec<(T, T)>,
}

impl<T: Real> BreakStructure<T> {
    pub fn break_params(&self) -> Vec<T> {
        self.breaks.iter().map(|b| b.param).collect()
    }

    pub fn is_empty(&self) -> bool {
        self.breaks.is_empty()
    }
}

/// Finds vertex-incident nodes (merging consecutive ones into a single break)
/// and, on the cone, segments that pass through the vertex between nodes.
pub fn break_structure<T: Real>(path: &DiscretePath<T>, metric: &Metric<T>) -> BreakStructure<T> {
    let n = path.n();
    let nf: T = from_usize(n);
    let nodes = path.nodes();
    let incident: Vec<Option<usize>> = nodes.iter().map(|x| metric.vertex_at(x)).collect();

    let mut breaks = Vec::new();
    let mut i = 0;
    while i <= n {
        if let Some(v) = incident[i] {
            let first = i;
            while i < n && incident[i + 1] == Some(v) {
                i += 1;
            }
            let param = from_usize::<T>(first + i) / (nf + nf);
            breaks.push(Break { param, vertex: v, site: BreakSite::Nodes { first, last: i } });
        } else if i < n && incident[i + 1].is_none() {
            if let Some(f) = metric.segment_vertex_crossing(&nodes[i], &nodes[i + 1]) {
                let param = (from_usize::<T>(i) + f) / nf;
                breaks.push(Break { param, vertex: 0, site: BreakSite::Segment { index: i, fraction: f } });
            }
        }
        i += 1;
    }

    let mut legs = Vec::with_capacity(breaks.len() + 1);
    let mut cur = T::zero();
    for (i, w) in nodes.windows(2).enumerate() {
        let (a_inc, b_inc) = (incident[i].is_some(), incident[i + 1].is_some());
        if a_inc && b_inc {
            continue;
        }
        let l = metric.segment_sq(&w[0], &w[1]).map(|q| q.sqrt()).unwrap_or(T::zero());
        if let Some(f) = (!a_inc && !b_inc).then(|| metric.segment_vertex_crossing(&w[0], &w[1])).flatten() {
            legs.push(cur + l * f);
            cur = l * (T::one() - f);
            continue;
        }
        cur = cur + l;
        if b_inc {
            legs.push(cur);
            cur = T::zero();
        }
    }
    // A path that starts on a vertex has an empty first leg and one that ends
    // on a vertex an empty last leg.
    if incident[0].is_some() {
        legs.insert(0, T::zero());
    }
    if incident[n].is_none() || legs.len() < breaks.len() + 1 {
        legs.push(cur);
    }

    let mut components = Vec::with_capacity(breaks.len() + 1);
    let mut start = T::zero();
    for b in &breaks {
        let (lo, hi) = b.span(n);
        components.push((start, lo));
        start = hi;
    }
    components.push((start, T::one()));

    BreakStructure { breaks, legs, components }
}
