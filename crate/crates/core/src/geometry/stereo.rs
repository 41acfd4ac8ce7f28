//! Stereographic projection between R^n and the unit sphere S^n in R^(n+1).
//!
//! The projection is taken from the north pole `N = (0, .., 0, 1)` onto the
//! equatorial hyperplane: `x_i = y_i / (1 - y_{n+1})`. The companion chart
//! from the south pole, `x'_i = y_i / (1 + y_{n+1})`, covers a neighbourhood
//! of `N` and is related to the first by the inversion `x' = x / |x|^2`.

use crate::error::{Error, Result};
use crate::geometry::linalg::{norm, norm_sq};
use crate::scalar::{lit, Real};

/// Maximum deviation of `|y|` from one accepted by [`stereographic_inv`].
pub const SPHERE_TOL: f64 = 1e-12;

/// Maps a point of R^n onto S^n.
pub fn stereographic_fwd<T: Real>(x: &[T]) -> Vec<T> {
    let s = norm_sq(x);
    let two = lit::<T>(2.0);
    let mut y: Vec<T> = x.iter().map(|v| two * *v / (T::one() + s)).collect();
    y.push((s - T::one()) / (s + T::one()));
    y
}

/// Maps a point of S^n minus the north pole back to R^n.
pub fn stereographic_inv<T: Real>(y: &[T]) -> Result<Vec<T>> {
    let r = norm(y);
    if (r - T::one()).abs() > lit(SPHERE_TOL) {
        return Err(Error::NotOnSphere { norm: crate::scalar::to_f64(r) });
    }
    if is_north_pole(y) {
        return Err(Error::Pole);
    }
    Ok(north_chart(y))
}

pub(crate) fn is_north_pole<T: Real>(y: &[T]) -> bool {
    let n = y.len() - 1;
    let d2 = y[..n].iter().fold(T::zero(), |a, v| a + *v * *v) + (y[n] - T::one()).powi(2);
    d2.sqrt() < lit(crate::geometry::VERTEX_TOL)
}

/// `x_i = y_i / (1 - y_{n+1})` without sphere checks.
pub(crate) fn north_chart<T: Real>(y: &[T]) -> Vec<T> {
    let n = y.len() - 1;
    let den = T::one() - y[n];
    y[..n].iter().map(|v| *v / den).collect()
}

/// `x'_i = y_i / (1 + y_{n+1})` without sphere checks.
pub(crate) fn south_chart<T: Real>(y: &[T]) -> Vec<T> {
    let n = y.len() - 1;
    let den = T::one() + y[n];
    y[..n].iter().map(|v| *v / den).collect()
}

/// Jacobian (n rows, n+1 columns) of the north chart map at `y`.
pub fn inverse_jacobian<T: Real>(y: &[T]) -> Vec<Vec<T>> {
    chart_jacobian(y, -T::one())
}

/// Jacobian of `y_i / (1 + sign * y_{n+1})`.
pub(crate) fn chart_jacobian<T: Real>(y: &[T], sign: T) -> Vec<Vec<T>> {
    let n = y.len() - 1;
    let den = T::one() + sign * y[n];
    (0..n)
        .map(|i| {
            let mut row = vec![T::zero(); n + 1];
            row[i] = T::one() / den;
            row[n] = -sign * y[i] / (den * den);
            row
        })
        .collect()
}

/// Orthonormal basis of the tangent space of S^n at `y`, as `n` vectors of
/// length `n + 1`.
pub fn tangent_basis<T: Real>(y: &[T]) -> Vec<Vec<T>> {
    let m = y.len();
    let mut basis: Vec<Vec<T>> = Vec::with_capacity(m - 1);
    let mut order: Vec<usize> = (0..m).collect();
    // Start from the axes least aligned with the normal.
    order.sort_by(|a, b| y[*a].abs().partial_cmp(&y[*b].abs()).unwrap_or(std::cmp::Ordering::Equal));
    for &axis in &order {
        if basis.len() == m - 1 {
            break;
        }
        let mut v = vec![T::zero(); m];
        v[axis] = T::one();
        let along = y[axis];
        for (vi, yi) in v.iter_mut().zip(y) {
            *vi = *vi - along * *yi;
        }
        for b in &basis {
            let c = crate::geometry::linalg::dot(&v, b);
            for (vi, bi) in v.iter_mut().zip(b) {
                *vi = *vi - c * *bi;
            }
        }
        let l = norm(&v);
        if l > lit(1e-6) {
            basis.push(v.into_iter().map(|c| c / l).collect());
        }
    }
    basis
}

/// Operator norm of the differential of the north chart map restricted to
/// the tangent space of the sphere at `y`.
///
/// Stereographic projection is conformal, so this equals `1 / (1 - y_{n+1})`,
/// which is `(1 + |x|^2) / 2` in terms of the image point.
pub fn inverse_jacobian_norm<T: Real>(y: &[T]) -> T {
    let jac = inverse_jacobian(y);
    tangent_basis(y)
        .iter()
        .map(|b| {
            let img: Vec<T> = jac.iter().map(|row| crate::geometry::linalg::dot(row, b)).collect();
            norm(&img)
        })
        .fold(T::zero(), T::max)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn poles_and_equator() {
        assert_eq!(stereographic_inv(&[0.0, 0.0, -1.0]).unwrap(), vec![0.0, 0.0]);
        assert_eq!(stereographic_inv(&[1.0, 0.0, 0.0]).unwrap(), vec![1.0, 0.0]);
        assert_eq!(stereographic_fwd(&[0.0, 0.0]), vec![0.0, 0.0, -1.0]);
        assert_eq!(stereographic_inv(&[0.0, 0.0, 1.0]), Err(Error::Pole));
        assert!(matches!(stereographic_inv(&[0.0, 0.5, 0.5]), Err(Error::NotOnSphere { .. })));
    }

    #[test]
    fn tangent_basis_is_orthonormal_and_tangent() {
        let y = stereographic_fwd(&[0.3f64, -1.2, 0.7]);
        let b = tangent_basis(&y);
        assert_eq!(b.len(), 3);
        for (i, bi) in b.iter().enumerate() {
            assert!(crate::geometry::linalg::dot(bi, &y).abs() < 1e-14);
            for (j, bj) in b.iter().enumerate() {
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((crate::geometry::linalg::dot(bi, bj) - want).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn south_chart_is_inversion_of_north_chart() {
        let x = [0.4f64, -2.5];
        let y = stereographic_fwd(&x);
        let xs = south_chart(&y);
        let s = norm_sq(&x);
        assert!((xs[0] - x[0] / s).abs() < 1e-15);
        assert!((xs[1] - x[1] / s).abs() < 1e-15);
    }
}
