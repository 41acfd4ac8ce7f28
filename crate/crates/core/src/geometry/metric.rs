use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::expr::{Expr, ScalarField};
use crate::geometry::linalg::{dist, dot, lerp, midpoint, norm, norm_sq, sub, Matrix};
use crate::geometry::stereo::{chart_jacobian, north_chart, south_chart, stereographic_fwd, tangent_basis};
use crate::geometry::{FD_STEP, LIFT_HANDOFF, VERTEX_TOL};
use crate::scalar::{fmt_point, lit, to_f64, Real};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum MetricKind {
    FlatEuclidean,
    EuclideanCone,
    Conformal,
    LiftedSphere,
}

impl std::fmt::Display for MetricKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        std::fmt::Debug::fmt(self, f)
    }
}

/// How [`Metric::factor_grad`] differentiates the conformal factor.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum GradientMode {
    /// Symbolic derivative of the factor expression.
    #[default]
    ClosedForm,
    /// Central differences with step [`FD_STEP`].
    FiniteDifference,
}

/// Metric `g(x) * delta_ij` on a planar (or n-dimensional) chart.
#[derive(Debug, Clone, PartialEq)]
pub struct ConformalMetric<T> {
    factor: ScalarField,
    vertices: Vec<Vec<T>>,
}

impl<T: Real> ConformalMetric<T> {
    pub fn new(factor: ScalarField, vertices: Vec<Vec<T>>) -> Result<Self> {
        let dim = factor.dim();
        if dim < 2 {
            return Err(Error::InvalidArgument(format!("chart dimension {dim} < 2")));
        }
        if let Some(v) = vertices.iter().find(|v| v.len() != dim) {
            return Err(Error::InvalidArgument(format!("vertex {} has wrong dimension", fmt_point(v))));
        }
        Ok(Self { factor, vertices })
    }

    pub fn factor_field(&self) -> &ScalarField {
        &self.factor
    }

    pub fn dim(&self) -> usize {
        self.factor.dim()
    }

    pub fn vertices(&self) -> &[Vec<T>] {
        &self.vertices
    }

    fn vertex_index(&self, x: &[T]) -> Option<usize> {
        self.vertices.iter().position(|v| dist(v, x) < lit(VERTEX_TOL))
    }
}

/// Pullback of a conformal chart metric to the unit sphere through the
/// stereographic chart; the north pole is an additional vertex carrying the
/// zero form.
#[derive(Debug, Clone, PartialEq)]
pub struct LiftedSphereMetric<T> {
    base: ConformalMetric<T>,
    growth_exponent: Option<T>,
    boundedness_warning: bool,
    vertices: Vec<Vec<T>>,
}

impl<T: Real> LiftedSphereMetric<T> {
    pub fn base(&self) -> &ConformalMetric<T> {
        &self.base
    }

    pub fn growth_exponent(&self) -> Option<T> {
        self.growth_exponent
    }

    /// Set when the caller's growth exponent does not exceed 2.
    pub fn boundedness_warning(&self) -> bool {
        self.boundedness_warning
    }
}

/// A chart metric with a finite singular set.
#[derive(Debug, Clone, PartialEq)]
pub enum Metric<T: Real> {
    /// Identity metric on R^dim.
    Flat { dim: usize },
    /// `dr^2 + alpha^2 r^2 dtheta^2` in the polar chart `(r, theta)`, vertex
    /// at `r = 0`. The angle is stored unwrapped.
    Cone { alpha: T },
    Conformal(ConformalMetric<T>),
    /// Points are stored in ambient coordinates of R^(n+1).
    LiftedSphere(LiftedSphereMetric<T>),
}

enum Chart {
    North,
    South,
}

/// Conformal factor as seen in one chart.
trait ChartFactor<T: Real> {
    fn at_vertex(&self, x: &[T]) -> bool;
    fn factor(&self, x: &[T]) -> Result<T>;
    fn factor_grad(&self, x: &[T]) -> Result<Vec<T>>;
}

fn checked_factor<T: Real>(x: &[T], v: T) -> Result<T> {
    if v.is_finite() && v > T::zero() {
        Ok(v)
    } else {
        Err(Error::Evaluation { point: fmt_point(x), reason: format!("conformal factor is {}", to_f64(v)) })
    }
}

impl<T: Real> ChartFactor<T> for ConformalMetric<T> {
    fn at_vertex(&self, x: &[T]) -> bool {
        self.vertex_index(x).is_some()
    }

    fn factor(&self, x: &[T]) -> Result<T> {
        checked_factor(x, self.factor.eval(x))
    }

    fn factor_grad(&self, x: &[T]) -> Result<Vec<T>> {
        let g = self.factor.grad(x);
        if g.iter().all(|v| v.is_finite()) {
            Ok(g)
        } else {
            Err(Error::Evaluation { point: fmt_point(x), reason: "factor gradient is not finite".into() })
        }
    }
}

/// The base factor read through the inversion `x' -> x' / |x'|^2`, i.e. the
/// chart from the south pole. The origin of this chart is the north pole.
struct InvertedChart<'a, T: Real>(&'a ConformalMetric<T>);

impl<T: Real> InvertedChart<'_, T> {
    fn invert(x: &[T]) -> Vec<T> {
        let s = norm_sq(x);
        x.iter().map(|v| *v / s).collect()
    }
}

impl<T: Real> ChartFactor<T> for InvertedChart<'_, T> {
    fn at_vertex(&self, x: &[T]) -> bool {
        let s = norm_sq(x);
        if s.sqrt() < lit(VERTEX_TOL) {
            return true;
        }
        self.0.at_vertex(&Self::invert(x))
    }

    fn factor(&self, x: &[T]) -> Result<T> {
        let s = norm_sq(x);
        if s.sqrt() < lit(VERTEX_TOL) {
            return Ok(T::zero());
        }
        let base = self.0.factor(&Self::invert(x))?;
        checked_factor(x, base / (s * s))
    }

    fn factor_grad(&self, x: &[T]) -> Result<Vec<T>> {
        let s = norm_sq(x);
        if s.sqrt() < lit(VERTEX_TOL) {
            return Err(Error::Singularity { point: fmt_point(x) });
        }
        let xi = Self::invert(x);
        let g = self.0.factor(&xi)?;
        let dg = self.0.factor_grad(&xi)?;
        let two = lit::<T>(2.0);
        let four = lit::<T>(4.0);
        // D(inversion) = (|x|^2 I - 2 x x^T) / |x|^4, symmetric.
        let xdg = dot(x, &dg);
        Ok((0..x.len())
            .map(|k| {
                let chain = (s * dg[k] - two * x[k] * xdg) / (s * s);
                chain / (s * s) - four * g * x[k] / (s * s * s)
            })
            .collect())
    }
}

/// Segment quadratic form `g(p) |b - a|^2` with `p` the midpoint, or the
/// off-vertex endpoint when the other endpoint lies in a vertex ball.
fn conformal_segment_sq<T: Real, F: ChartFactor<T>>(f: &F, a: &[T], b: &[T]) -> Result<T> {
    let d2 = norm_sq(&sub(b, a));
    let g = match (f.at_vertex(a), f.at_vertex(b)) {
        (false, false) => f.factor(&midpoint(a, b))?,
        (true, false) => f.factor(b)?,
        (false, true) => f.factor(a)?,
        (true, true) => {
            let m = midpoint(a, b);
            if f.at_vertex(&m) {
                return Ok(T::zero());
            }
            f.factor(&m)?
        }
    };
    Ok(g * d2)
}

fn conformal_segment_sq_grad<T: Real, F: ChartFactor<T>>(f: &F, a: &[T], b: &[T]) -> Result<(Vec<T>, Vec<T>)> {
    let delta = sub(b, a);
    let d2 = norm_sq(&delta);
    let two = lit::<T>(2.0);
    let half = lit::<T>(0.5);
    let (wa, wb, p) = match (f.at_vertex(a), f.at_vertex(b)) {
        (true, false) => (T::zero(), T::one(), b.to_vec()),
        (false, true) => (T::one(), T::zero(), a.to_vec()),
        (true, true) if f.at_vertex(&midpoint(a, b)) => {
            let z = vec![T::zero(); a.len()];
            return Ok((z.clone(), z));
        }
        _ => (half, half, midpoint(a, b)),
    };
    let g = f.factor(&p)?;
    let dg = f.factor_grad(&p)?;
    let ga = delta.iter().zip(&dg).map(|(d, gk)| -two * g * *d + wa * d2 * *gk).collect();
    let gb = delta.iter().zip(&dg).map(|(d, gk)| two * g * *d + wb * d2 * *gk).collect();
    Ok((ga, gb))
}

impl<T: Real> Metric<T> {
    pub fn flat(dim: usize) -> Self {
        Metric::Flat { dim }
    }

    pub fn cone(alpha: T) -> Result<Self> {
        if !(alpha > T::zero()) || !alpha.is_finite() {
            return Err(Error::InvalidArgument(format!("cone ratio alpha = {} must be positive", to_f64(alpha))));
        }
        Ok(Metric::Cone { alpha })
    }

    pub fn conformal(factor: ScalarField, vertices: Vec<Vec<T>>) -> Result<Self> {
        Ok(Metric::Conformal(ConformalMetric::new(factor, vertices)?))
    }

    pub fn kind(&self) -> MetricKind {
        match self {
            Metric::Flat { .. } => MetricKind::FlatEuclidean,
            Metric::Cone { .. } => MetricKind::EuclideanCone,
            Metric::Conformal(_) => MetricKind::Conformal,
            Metric::LiftedSphere(_) => MetricKind::LiftedSphere,
        }
    }

    /// Number of stored coordinates per point.
    pub fn dim(&self) -> usize {
        match self {
            Metric::Flat { dim } => *dim,
            Metric::Cone { .. } => 2,
            Metric::Conformal(c) => c.dim(),
            Metric::LiftedSphere(l) => l.base.dim() + 1,
        }
    }

    /// Singular set in stored coordinates.
    pub fn vertices(&self) -> Vec<Vec<T>> {
        match self {
            Metric::Flat { .. } => Vec::new(),
            Metric::Cone { .. } => vec![vec![T::zero(), T::zero()]],
            Metric::Conformal(c) => c.vertices.clone(),
            Metric::LiftedSphere(l) => l.vertices.clone(),
        }
    }

    pub fn has_vertices(&self) -> bool {
        match self {
            Metric::Flat { .. } => false,
            Metric::Cone { .. } | Metric::LiftedSphere(_) => true,
            Metric::Conformal(c) => !c.vertices.is_empty(),
        }
    }

    /// Index of the vertex whose tolerance ball strictly contains `x`.
    pub fn vertex_at(&self, x: &[T]) -> Option<usize> {
        match self {
            Metric::Flat { .. } => None,
            Metric::Cone { .. } => (x[0].abs() < lit(VERTEX_TOL)).then_some(0),
            Metric::Conformal(c) => c.vertex_index(x),
            Metric::LiftedSphere(l) => l.vertices.iter().position(|v| dist(v, x) < lit(VERTEX_TOL)),
        }
    }

    fn check_dim(&self, x: &[T]) -> Result<()> {
        if x.len() != self.dim() {
            return Err(Error::InvalidArgument(format!(
                "point {} has {} coordinates, metric expects {}",
                fmt_point(x),
                x.len(),
                self.dim()
            )));
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::Evaluation { point: fmt_point(x), reason: "non-finite coordinate".into() });
        }
        if let Metric::Cone { .. } = self {
            if x[0] < T::zero() {
                return Err(Error::Evaluation { point: fmt_point(x), reason: "negative cone radius".into() });
            }
        }
        Ok(())
    }

    /// Whether `x` lies in the chart domain (dimension, finiteness, `r >= 0`
    /// on the cone).
    pub fn in_domain(&self, x: &[T]) -> bool {
        self.check_dim(x).is_ok()
    }

    /// Metric matrix at `x`. Inside a vertex ball the degenerate limit is
    /// returned: `diag(1, 0)` on the cone, the zero form at the north pole of a
    /// lifted sphere, and the factor evaluated exactly at the vertex for
    /// conformal metrics (an error if it is not finite).
    pub fn eval(&self, x: &[T]) -> Result<Matrix<T>> {
        self.check_dim(x)?;
        match self {
            Metric::Flat { dim } => Ok(Matrix::identity(*dim)),
            Metric::Cone { alpha } => {
                let r = if x[0] < lit(VERTEX_TOL) { T::zero() } else { x[0] };
                Ok(Matrix::diag(&[T::one(), *alpha * *alpha * r * r]))
            }
            Metric::Conformal(c) => {
                let g = match c.vertex_index(x) {
                    Some(i) => {
                        let v = c.factor.eval(&c.vertices[i]);
                        if v.is_finite() && v >= T::zero() {
                            v
                        } else {
                            return Err(Error::Singularity { point: fmt_point(x) });
                        }
                    }
                    None => c.factor(x)?,
                };
                Ok(Matrix::scaled_identity(c.dim(), g))
            }
            Metric::LiftedSphere(l) => {
                let m = x.len();
                if crate::geometry::stereo::is_north_pole(x) {
                    return Ok(Matrix::zeros(m));
                }
                let (chart, sign) = if x[m - 1] < lit(LIFT_HANDOFF) {
                    (Chart::North, -T::one())
                } else {
                    (Chart::South, T::one())
                };
                let jac = chart_jacobian(x, sign);
                let g = match chart {
                    Chart::North => {
                        let p = north_chart(x);
                        if c_at_vertex(&l.base, &p) {
                            l.base.factor.eval(&p).max(T::zero())
                        } else {
                            l.base.factor(&p)?
                        }
                    }
                    Chart::South => InvertedChart(&l.base).factor(&south_chart(x))?,
                };
                let mut out = Matrix::zeros(m);
                for i in 0..m {
                    for j in 0..m {
                        let s = jac.iter().fold(T::zero(), |acc, row| acc + row[i] * row[j]);
                        out.set(i, j, g * s);
                    }
                }
                Ok(out)
            }
        }
    }

    /// Scalar conformal factor at `x` (flat: 1).
    pub fn factor(&self, x: &[T]) -> Result<T> {
        self.check_dim(x)?;
        match self {
            Metric::Flat { .. } => Ok(T::one()),
            Metric::Conformal(c) => c.factor(x),
            other => Err(Error::UnsupportedKind { op: "factor", kind: other.kind().to_string() }),
        }
    }

    /// Gradient of the scalar conformal factor.
    pub fn factor_grad(&self, x: &[T], mode: GradientMode) -> Result<Vec<T>> {
        self.check_dim(x)?;
        match self {
            Metric::Flat { dim } => Ok(vec![T::zero(); *dim]),
            Metric::Conformal(c) => {
                if c.vertex_index(x).is_some() {
                    return Err(Error::Singularity { point: fmt_point(x) });
                }
                match mode {
                    GradientMode::ClosedForm => c.factor_grad(x),
                    GradientMode::FiniteDifference => {
                        let h = lit::<T>(FD_STEP);
                        (0..x.len())
                            .map(|k| {
                                let mut xp = x.to_vec();
                                let mut xm = x.to_vec();
                                xp[k] = xp[k] + h;
                                xm[k] = xm[k] - h;
                                Ok((c.factor(&xp)? - c.factor(&xm)?) / (h + h))
                            })
                            .collect()
                    }
                }
            }
            other => Err(Error::UnsupportedKind { op: "metric_grad", kind: other.kind().to_string() }),
        }
    }

    /// Discrete squared length of the segment `a -> b`.
    ///
    /// Flat and conformal charts use the metric at the midpoint (or at the
    /// off-vertex endpoint when the other endpoint is in a vertex ball). The
    /// cone uses the exact squared distance between the endpoints within the
    /// segment's unwrapped angular span, so a segment whose developed angle
    /// reaches pi passes through the vertex with length `r_a + r_b`. Lifted
    /// sphere segments are evaluated in the stereographic chart selected by
    /// the height of their midpoint.
    pub fn segment_sq(&self, a: &[T], b: &[T]) -> Result<T> {
        self.check_dim(a)?;
        self.check_dim(b)?;
        match self {
            Metric::Flat { .. } => Ok(norm_sq(&sub(b, a))),
            Metric::Cone { alpha } => Ok(cone_segment_sq(*alpha, a, b)),
            Metric::Conformal(c) => conformal_segment_sq(c, a, b),
            Metric::LiftedSphere(l) => match lifted_chart(a, b) {
                Chart::North => conformal_segment_sq(&l.base, &north_chart(a), &north_chart(b)),
                Chart::South => conformal_segment_sq(&InvertedChart(&l.base), &south_chart(a), &south_chart(b)),
            },
        }
    }

    /// Gradients of [`Metric::segment_sq`] with respect to both endpoints.
    pub fn segment_sq_grad(&self, a: &[T], b: &[T]) -> Result<(Vec<T>, Vec<T>)> {
        self.check_dim(a)?;
        self.check_dim(b)?;
        match self {
            Metric::Flat { .. } => {
                let two = lit::<T>(2.0);
                let d = sub(b, a);
                Ok((d.iter().map(|v| -two * *v).collect(), d.iter().map(|v| two * *v).collect()))
            }
            Metric::Cone { alpha } => Ok(cone_segment_sq_grad(*alpha, a, b)),
            Metric::Conformal(c) => conformal_segment_sq_grad(c, a, b),
            Metric::LiftedSphere(l) => {
                let (sign, (ga, gb)) = match lifted_chart(a, b) {
                    Chart::North => {
                        (-T::one(), conformal_segment_sq_grad(&l.base, &north_chart(a), &north_chart(b))?)
                    }
                    Chart::South => (
                        T::one(),
                        conformal_segment_sq_grad(&InvertedChart(&l.base), &south_chart(a), &south_chart(b))?,
                    ),
                };
                let pull = |y: &[T], g: &[T]| -> Vec<T> {
                    let jac = chart_jacobian(y, sign);
                    (0..y.len()).map(|j| jac.iter().zip(g).fold(T::zero(), |acc, (row, gi)| acc + row[j] * *gi)).collect()
                };
                Ok((pull(a, &ga), pull(b, &gb)))
            }
        }
    }

    /// Fraction along `a -> b` at which the segment passes through a vertex
    /// without either endpoint being incident. Only the cone represents such
    /// segments exactly.
    pub fn segment_vertex_crossing(&self, a: &[T], b: &[T]) -> Option<T> {
        match self {
            Metric::Cone { alpha } => {
                let eps = lit::<T>(VERTEX_TOL);
                if a[0] < eps || b[0] < eps {
                    return None;
                }
                ((*alpha * (b[1] - a[1])).abs() >= T::PI()).then(|| a[0] / (a[0] + b[0]))
            }
            _ => None,
        }
    }

    /// Whether segments may pass through a vertex between nodes.
    pub fn supports_segment_crossing(&self) -> bool {
        matches!(self, Metric::Cone { .. })
    }

    /// Point at fraction `lambda` of the segment `a -> b` along the curve the
    /// segment represents: a developed straight line on the cone, a
    /// normalized chord on the sphere, the chart chord otherwise.
    pub fn point_on_segment(&self, a: &[T], b: &[T], lambda: T) -> Vec<T> {
        match self {
            Metric::Cone { alpha } => cone_point_on_segment(*alpha, a, b, lambda),
            Metric::LiftedSphere(_) => {
                let p = lerp(a, b, lambda);
                let l = norm(&p);
                p.into_iter().map(|v| v / l).collect()
            }
            _ => lerp(a, b, lambda),
        }
    }

    /// Maps a trial point back onto the chart domain (normalization on the
    /// sphere; identity elsewhere).
    pub fn retract(&self, x: &mut [T]) {
        if let Metric::LiftedSphere(_) = self {
            let l = norm(x);
            for v in x.iter_mut() {
                *v = *v / l;
            }
        }
    }

    /// Projects `v` onto the tangent space at `x`.
    pub fn tangent_project(&self, x: &[T], v: &mut [T]) {
        if let Metric::LiftedSphere(_) = self {
            let c = dot(x, v);
            for (vi, xi) in v.iter_mut().zip(x) {
                *vi = *vi - c * *xi;
            }
        }
    }

    /// Per-coordinate weights of the segment metric used to precondition
    /// descent directions.
    pub fn precond_weights(&self, a: &[T], b: &[T]) -> Result<Vec<T>> {
        let floor = lit::<T>(1e-12);
        match self {
            Metric::Flat { dim } => Ok(vec![T::one(); *dim]),
            Metric::Cone { alpha } => {
                let rm = (a[0] + b[0]) * lit(0.5);
                Ok(vec![T::one(), (*alpha * *alpha * rm * rm).max(floor)])
            }
            Metric::Conformal(c) => {
                let m = midpoint(a, b);
                let g = if c.vertex_index(&m).is_some() { floor } else { c.factor(&m).unwrap_or(floor) };
                Ok(vec![g.max(floor); c.dim()])
            }
            Metric::LiftedSphere(_) => {
                let mut m = midpoint(a, b);
                self.retract(&mut m);
                let g = self.sphere_factor(&m).unwrap_or(floor);
                Ok(vec![g.max(floor); m.len()])
            }
        }
    }

    /// Conformal factor of the lifted metric against the round metric of the
    /// sphere: `g(x) / (1 - y_{n+1})^2` in the north chart.
    fn sphere_factor(&self, y: &[T]) -> Result<T> {
        let Metric::LiftedSphere(l) = self else {
            return Err(Error::UnsupportedKind { op: "sphere_factor", kind: self.kind().to_string() });
        };
        let m = y.len();
        if crate::geometry::stereo::is_north_pole(y) {
            return Ok(T::zero());
        }
        if y[m - 1] < lit(LIFT_HANDOFF) {
            let p = north_chart(y);
            let s = T::one() - y[m - 1];
            Ok(l.base.factor(&p)? / (s * s))
        } else {
            let p = south_chart(y);
            let s = T::one() + y[m - 1];
            Ok(InvertedChart(&l.base).factor(&p)? / (s * s))
        }
    }

    /// Dual norm `sqrt(c^T g^{-1} c)` of a covector at `x`, restricted to the
    /// tangent space on the sphere.
    pub fn dual_norm(&self, x: &[T], covector: &[T]) -> Result<T> {
        match self {
            Metric::Flat { .. } => Ok(norm(covector)),
            Metric::Cone { alpha } => {
                let r = x[0].max(lit(VERTEX_TOL));
                let a = *alpha * r;
                Ok((covector[0] * covector[0] + covector[1] * covector[1] / (a * a)).sqrt())
            }
            Metric::Conformal(c) => Ok(norm(covector) / c.factor(x)?.sqrt()),
            Metric::LiftedSphere(_) => {
                let g = self.sphere_factor(x)?;
                let ct: Vec<T> = tangent_basis(x).iter().map(|b| dot(b, covector)).collect();
                Ok(norm(&ct) / g.sqrt())
            }
        }
    }

    /// Metric norm of a tangent vector at `x`.
    pub fn vector_norm(&self, x: &[T], v: &[T]) -> Result<T> {
        Ok(self.eval(x)?.quad(v).max(T::zero()).sqrt())
    }

    /// Angle of `x` about the first vertex, used for winding numbers. `None`
    /// when the metric has no vertex.
    pub fn angle_about_reference(&self, x: &[T]) -> Option<T> {
        match self {
            Metric::Flat { .. } => None,
            Metric::Cone { .. } => Some(x[1]),
            Metric::Conformal(c) => c.vertices.first().map(|v| (x[1] - v[1]).atan2(x[0] - v[0])),
            Metric::LiftedSphere(l) => {
                let v = l.base.vertices.first()?;
                let p = north_chart(x);
                Some((p[1] - v[1]).atan2(p[0] - v[0]))
            }
        }
    }

    /// Discrete covariant acceleration at `x` given its grid neighbours,
    /// measured in the metric norm at `x`. Zero for a uniformly sampled
    /// geodesic up to discretization error.
    pub fn covariant_residual(&self, prev: &[T], x: &[T], next: &[T]) -> Result<T> {
        match self {
            Metric::Flat { .. } => {
                let two = lit::<T>(2.0);
                Ok(norm(&(0..x.len()).map(|k| next[k] - two * x[k] + prev[k]).collect::<Vec<_>>()))
            }
            Metric::Cone { alpha } => Ok(cone_residual(*alpha, prev, x, next)),
            Metric::Conformal(c) => conformal_residual(c, prev, x, next),
            Metric::LiftedSphere(l) => {
                let m = x.len();
                if x[m - 1] < lit(LIFT_HANDOFF) {
                    conformal_residual(&l.base, &north_chart(prev), &north_chart(x), &north_chart(next))
                } else {
                    let f = InvertedChart(&l.base);
                    conformal_residual(&f, &south_chart(prev), &south_chart(x), &south_chart(next))
                }
            }
        }
    }

    /// Geodesic acceleration `-Gamma(x)(v, v)` for the Cauchy problem.
    pub fn geodesic_acceleration(&self, x: &[T], v: &[T]) -> Result<Vec<T>> {
        match self {
            Metric::Flat { dim } => Ok(vec![T::zero(); *dim]),
            Metric::Cone { alpha } => {
                let r = x[0];
                if r < lit(VERTEX_TOL) {
                    return Err(Error::Singularity { point: fmt_point(x) });
                }
                let a2 = *alpha * *alpha;
                let two = lit::<T>(2.0);
                Ok(vec![a2 * r * v[1] * v[1], -two * v[0] * v[1] / r])
            }
            Metric::Conformal(c) => {
                if c.vertex_index(x).is_some() {
                    return Err(Error::Singularity { point: fmt_point(x) });
                }
                let g = c.factor(x)?;
                let dg = c.factor_grad(x)?;
                let dgv = dot(&dg, v);
                let v2 = norm_sq(v);
                let half = lit::<T>(0.5);
                Ok((0..v.len()).map(|k| -(dgv * v[k] - half * v2 * dg[k]) / g).collect())
            }
            other => Err(Error::UnsupportedKind { op: "geodesic_acceleration", kind: other.kind().to_string() }),
        }
    }
}

/// `|x_{i+1} - 2 x_i + x_{i-1} + Gamma(x_i)(v, v)|` in the metric norm at
/// `x_i`, with `v` the central difference.
fn conformal_residual<T: Real, F: ChartFactor<T>>(f: &F, prev: &[T], x: &[T], next: &[T]) -> Result<T> {
    let g = f.factor(x)?;
    let dg = f.factor_grad(x)?;
    let half = lit::<T>(0.5);
    let two = lit::<T>(2.0);
    let v: Vec<T> = next.iter().zip(prev).map(|(a, b)| (*a - *b) * half).collect();
    let dgv = dot(&dg, &v);
    let v2 = norm_sq(&v);
    let res: Vec<T> = (0..x.len())
        .map(|k| next[k] - two * x[k] + prev[k] + (dgv * v[k] - half * v2 * dg[k]) / g)
        .collect();
    Ok(g.sqrt() * norm(&res))
}

/// Developed-plane second difference on the cone. `x` sits on the positive
/// axis; a neighbour whose developed angle reaches pi lies on the far side of
/// the vertex and is placed on the negative axis.
fn cone_residual<T: Real>(alpha: T, prev: &[T], x: &[T], next: &[T]) -> T {
    let place = |y: &[T]| -> (T, T) {
        let phi = alpha * (y[1] - x[1]);
        if phi.abs() >= T::PI() {
            (-y[0], T::zero())
        } else {
            (y[0] * phi.cos(), y[0] * phi.sin())
        }
    };
    let (ax, ay) = place(prev);
    let (bx, by) = place(next);
    let two = lit::<T>(2.0);
    let rx = ax + bx - two * x[0];
    let ry = ay + by;
    (rx * rx + ry * ry).sqrt()
}

fn c_at_vertex<T: Real>(c: &ConformalMetric<T>, x: &[T]) -> bool {
    c.vertex_index(x).is_some()
}

fn lifted_chart<T: Real>(a: &[T], b: &[T]) -> Chart {
    let m = a.len();
    if (a[m - 1] + b[m - 1]) * lit(0.5) < lit(LIFT_HANDOFF) {
        Chart::North
    } else {
        Chart::South
    }
}

fn cone_segment_sq<T: Real>(alpha: T, a: &[T], b: &[T]) -> T {
    let (ra, rb) = (a[0], b[0]);
    let delta = (alpha * (b[1] - a[1])).abs();
    if delta >= T::PI() {
        (ra + rb) * (ra + rb)
    } else {
        let two = lit::<T>(2.0);
        // (ra - rb)^2 + 2 ra rb (1 - cos delta), stable for small delta.
        let s = (delta * lit(0.5)).sin();
        (ra - rb) * (ra - rb) + two * two * ra * rb * s * s
    }
}

fn cone_segment_sq_grad<T: Real>(alpha: T, a: &[T], b: &[T]) -> (Vec<T>, Vec<T>) {
    let (ra, rb) = (a[0], b[0]);
    let signed = alpha * (b[1] - a[1]);
    let two = lit::<T>(2.0);
    if signed.abs() >= T::PI() {
        let g = two * (ra + rb);
        return (vec![g, T::zero()], vec![g, T::zero()]);
    }
    let c = signed.cos();
    let s = signed.sin();
    let dra = two * ra - two * rb * c;
    let drb = two * rb - two * ra * c;
    // d/d(signed) of -2 ra rb cos(signed) = 2 ra rb sin(signed)
    let dsig = two * ra * rb * s;
    (vec![dra, -dsig * alpha], vec![drb, dsig * alpha])
}

fn cone_point_on_segment<T: Real>(alpha: T, a: &[T], b: &[T], lambda: T) -> Vec<T> {
    let (ra, rb) = (a[0], b[0]);
    let signed = alpha * (b[1] - a[1]);
    if signed.abs() >= T::PI() {
        let d = lambda * (ra + rb);
        return if d <= ra { vec![ra - d, a[1]] } else { vec![d - ra, b[1]] };
    }
    let px = (T::one() - lambda) * ra + lambda * rb * signed.cos();
    let py = lambda * rb * signed.sin();
    let r = (px * px + py * py).sqrt();
    let theta = if r < lit(VERTEX_TOL) {
        if lambda < lit(0.5) { a[1] } else { b[1] }
    } else {
        a[1] + py.atan2(px) / alpha
    };
    vec![r, theta]
}

/// Lifts a conformal chart metric to the sphere. `growth_exponent` is the
/// exponent `a` in `-U(x) = O(|x|^a)`; a warning flag is set when `a <= 2`.
pub fn induced_sphere_metric<T: Real>(base: &Metric<T>, growth_exponent: Option<T>) -> Result<Metric<T>> {
    let base = match base {
        Metric::Conformal(c) => c.clone(),
        Metric::Flat { dim } => ConformalMetric::new(ScalarField::constant(1.0, *dim), Vec::new())?,
        other => return Err(Error::UnsupportedKind { op: "induced_sphere_metric", kind: other.kind().to_string() }),
    };
    let n = base.dim();
    let mut north = vec![T::zero(); n + 1];
    north[n] = T::one();
    let mut vertices = vec![north];
    vertices.extend(base.vertices.iter().map(|v| stereographic_fwd(v)));
    let boundedness_warning = growth_exponent.is_some_and(|a| a <= lit(2.0));
    Ok(Metric::LiftedSphere(LiftedSphereMetric { base, growth_exponent, boundedness_warning, vertices }))
}

/// Brachistochrone metric `<,> / (E - U(x))` for potential `potential` at
/// energy level `energy`; the singular points of `U` become vertices.
pub fn brach_metric<T: Real>(potential: &ScalarField, energy: T, singular_points: Vec<Vec<T>>) -> Result<Metric<T>> {
    let expr = Expr::Div(
        Box::new(Expr::Const(1.0)),
        Box::new(Expr::Sub(Box::new(Expr::Const(to_f64(energy))), Box::new(potential.expr().clone()))),
    );
    let source = format!("1 / (({}) - ({}))", to_f64(energy), potential.source());
    let field = ScalarField::from_expr(source, expr, potential.dim());
    Metric::conformal(field, singular_points)
}
