//! Points of the n-sphere, both as extended Euclidean points and as null
//! rays of the Lorentz space of dimension `n + 2`.
//!
//! A finite point `x` lifts to the ray of `(x, (1 - |x|^2)/2, (1 + |x|^2)/2)`
//! and the point at infinity to the ray of `(0, ..., 0, -1, 1)`. The
//! canonical representative of a ray is `(xi, 1) / sqrt(2)` where `xi` is
//! the stereographic image of the point on the unit sphere of `R^{n+1}`;
//! it has unit Euclidean norm and a positive last coordinate.

use std::fmt;

use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::linalg::lorentz_inner;
use crate::tolerance::Tolerances;

/// Finite points farther out than roughly `1 / FAR_FIELD` are
/// indistinguishable from infinity in double precision.
const FAR_FIELD: f64 = 1e-14;

/// Dimension `n` of the sphere `S^n`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct AmbientDim(usize);

impl AmbientDim {
    pub fn new(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidInput("sphere dimension must be at least 1".into()));
        }
        Ok(Self(n))
    }

    pub fn get(self) -> usize {
        self.0
    }

    /// Dimension of the Lorentz space, `n + 2`.
    pub fn lorentz(self) -> usize {
        self.0 + 2
    }
}

impl fmt::Display for AmbientDim {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// A point of `R^n` together with the point at infinity.
#[derive(Debug, Clone, PartialEq)]
pub enum ExtendedPoint {
    Finite(Vec<f64>),
    Infinity,
}

impl ExtendedPoint {
    pub fn finite(coords: impl Into<Vec<f64>>) -> Self {
        Self::Finite(coords.into())
    }

    pub fn is_infinity(&self) -> bool {
        matches!(self, Self::Infinity)
    }

    pub fn coords(&self) -> Option<&[f64]> {
        match self {
            Self::Finite(c) => Some(c),
            Self::Infinity => None,
        }
    }

    /// Checks that the point belongs to `R^n_inf` for the given `n`.
    pub fn validate(&self, n: AmbientDim) -> Result<()> {
        match self {
            Self::Infinity => Ok(()),
            Self::Finite(c) => {
                if c.len() != n.get() {
                    return Err(Error::DimensionMismatch {
                        expected: n.get(),
                        found: c.len(),
                    });
                }
                if c.iter().any(|x| !x.is_finite()) {
                    return Err(Error::InvalidInput("point coordinates must be finite".into()));
                }
                Ok(())
            }
        }
    }
}

/// A point of `S^n` stored as the canonical unit null vector of its ray.
#[derive(Debug, Clone, PartialEq)]
pub struct SpherePoint {
    v: DVector<f64>,
}

impl SpherePoint {
    /// Lifts an extended point onto the light cone.
    pub fn lift(p: &ExtendedPoint, n: AmbientDim) -> Result<Self> {
        p.validate(n)?;
        let n = n.get();
        let mut xi = DVector::zeros(n + 1);
        match p {
            ExtendedPoint::Infinity => xi[n] = -1.0,
            ExtendedPoint::Finite(x) => {
                // Scale first so that |x|^2 cannot overflow.
                let scale = x.iter().fold(0.0f64, |m, c| m.max(c.abs()));
                if scale == 0.0 {
                    xi[n] = 1.0;
                } else if scale <= 1.0 {
                    let r2: f64 = x.iter().map(|c| c * c).sum();
                    let denom = 1.0 + r2;
                    for (i, c) in x.iter().enumerate() {
                        xi[i] = 2.0 * c / denom;
                    }
                    xi[n] = (1.0 - r2) / denom;
                } else {
                    let y2: f64 = x.iter().map(|c| (c / scale).powi(2)).sum();
                    let inv = 1.0 / scale;
                    let denom = inv + scale * y2;
                    for (i, c) in x.iter().enumerate() {
                        xi[i] = 2.0 * (c / scale) / denom;
                    }
                    xi[n] = (inv * inv - y2) / (inv * inv + y2);
                }
            }
        }
        Ok(Self::from_unit_sphere_unchecked(xi))
    }

    /// Builds a point from a unit vector of `R^{n+1}`.
    pub fn from_unit_sphere(xi: &[f64]) -> Result<Self> {
        let xi = DVector::from_column_slice(xi);
        let norm = xi.norm();
        if !(norm.is_finite() && norm > 0.0) {
            return Err(Error::InvalidInput("zero or non-finite direction".into()));
        }
        Ok(Self::from_unit_sphere_unchecked(xi / norm))
    }

    fn from_unit_sphere_unchecked(xi: DVector<f64>) -> Self {
        let n1 = xi.len();
        let mut v = DVector::zeros(n1 + 1);
        v.rows_mut(0, n1).copy_from(&xi);
        v[n1] = 1.0;
        v *= std::f64::consts::FRAC_1_SQRT_2;
        Self { v }
    }

    /// Accepts an arbitrary representative of a null ray, checking nullity
    /// against `tol.null`.
    pub fn from_ray(v: &DVector<f64>, tol: &Tolerances) -> Result<Self> {
        let norm2 = v.norm_squared();
        if v.len() < 3 || !(norm2.is_finite() && norm2 > 0.0) {
            return Err(Error::DegenerateRay { residual: f64::INFINITY });
        }
        let residual = lorentz_inner(v, v).abs() / norm2;
        if residual > tol.null {
            return Err(Error::DegenerateRay { residual });
        }
        Self::snap(v).ok_or(Error::DegenerateRay { residual })
    }

    /// Canonicalizes a ray that is null up to rounding: fixes the sign and
    /// moves it exactly onto the cone.
    pub(crate) fn snap(v: &DVector<f64>) -> Option<Self> {
        let last = v.len() - 1;
        let t = v[last];
        if t == 0.0 || !t.is_finite() {
            return None;
        }
        let spatial = v.rows(0, last) * t.signum();
        let norm = spatial.norm();
        if norm == 0.0 {
            return None;
        }
        Some(Self::from_unit_sphere_unchecked(spatial / norm))
    }

    /// Stereographic projection back to `R^n_inf`.
    pub fn project(&self) -> ExtendedPoint {
        let n = self.v.len() - 2;
        let u = self.v.rows(0, n);
        let h = self.v[n];
        let t = self.v[n + 1];
        if h <= 0.0 {
            let u2 = u.norm_squared();
            if u2.sqrt() <= FAR_FIELD * self.v.norm() {
                return ExtendedPoint::Infinity;
            }
            let s = (t - h) / u2;
            ExtendedPoint::Finite(u.iter().map(|c| c * s).collect())
        } else {
            let s = 1.0 / (t + h);
            ExtendedPoint::Finite(u.iter().map(|c| c * s).collect())
        }
    }

    pub fn vector(&self) -> &DVector<f64> {
        &self.v
    }

    /// The sphere dimension `n`.
    pub fn dim(&self) -> usize {
        self.v.len() - 2
    }

    /// Point on the unit sphere of `R^{n+1}`.
    pub fn unit_sphere_coords(&self) -> Vec<f64> {
        let n1 = self.v.len() - 1;
        self.v.rows(0, n1).iter().map(|c| c * std::f64::consts::SQRT_2).collect()
    }

    /// Euclidean distance between canonical representatives; equals the
    /// chordal distance on the unit sphere divided by `sqrt(2)`.
    pub fn distance(&self, other: &SpherePoint) -> f64 {
        (&self.v - &other.v).norm()
    }

    /// Point equality under the membership tolerance.
    pub fn approx_eq(&self, other: &SpherePoint, tol: &Tolerances) -> bool {
        self.distance(other) <= tol.member
    }

    /// `Q(v)` of the stored representative.
    pub fn lorentz_norm(&self) -> f64 {
        lorentz_inner(&self.v, &self.v)
    }
}

/// Lifts an extended point; free-function form.
pub fn lift(p: &ExtendedPoint, n: AmbientDim) -> Result<SpherePoint> {
    SpherePoint::lift(p, n)
}

/// Projects a sphere point back to `R^n_inf`; free-function form.
pub fn project(v: &SpherePoint) -> ExtendedPoint {
    v.project()
}

/// Inversion in the sphere `|x - a| = r`, with `a <-> inf`.
pub fn invert_in_sphere(center: &[f64], radius: f64, p: &ExtendedPoint) -> Result<ExtendedPoint> {
    if !(radius.is_finite() && radius > 0.0) {
        return Err(Error::InvalidInput("inversion radius must be positive".into()));
    }
    let x = match p {
        ExtendedPoint::Infinity => return Ok(ExtendedPoint::Finite(center.to_vec())),
        ExtendedPoint::Finite(x) => x,
    };
    if x.len() != center.len() {
        return Err(Error::DimensionMismatch {
            expected: center.len(),
            found: x.len(),
        });
    }
    let d2: f64 = x.iter().zip(center).map(|(xi, ai)| (xi - ai).powi(2)).sum();
    if d2 == 0.0 {
        return Ok(ExtendedPoint::Infinity);
    }
    let s = radius * radius / d2;
    Ok(ExtendedPoint::Finite(
        x.iter().zip(center).map(|(xi, ai)| ai + s * (xi - ai)).collect(),
    ))
}

/// Reflection in the hyperplane `u . x = c`; fixes infinity.
pub fn reflect_in_hyperplane(normal: &[f64], offset: f64, p: &ExtendedPoint) -> Result<ExtendedPoint> {
    let norm: f64 = normal.iter().map(|c| c * c).sum::<f64>().sqrt();
    if (norm - 1.0).abs() > 1e-12 {
        return Err(Error::InvalidInput("hyperplane normal must be a unit vector".into()));
    }
    let x = match p {
        ExtendedPoint::Infinity => return Ok(ExtendedPoint::Infinity),
        ExtendedPoint::Finite(x) => x,
    };
    if x.len() != normal.len() {
        return Err(Error::DimensionMismatch {
            expected: normal.len(),
            found: x.len(),
        });
    }
    let d: f64 = x.iter().zip(normal).map(|(xi, ui)| xi * ui).sum::<f64>() - offset;
    Ok(ExtendedPoint::Finite(
        x.iter().zip(normal).map(|(xi, ui)| xi - 2.0 * d * ui).collect(),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn n(d: usize) -> AmbientDim {
        AmbientDim::new(d).unwrap()
    }

    fn rel_err(a: &ExtendedPoint, b: &ExtendedPoint) -> f64 {
        match (a, b) {
            (ExtendedPoint::Infinity, ExtendedPoint::Infinity) => 0.0,
            (ExtendedPoint::Finite(x), ExtendedPoint::Finite(y)) => {
                let d: f64 = x.iter().zip(y).map(|(p, q)| (p - q).powi(2)).sum::<f64>().sqrt();
                let s: f64 = y.iter().map(|q| q * q).sum::<f64>().sqrt();
                d / s.max(1.0)
            }
            _ => f64::INFINITY,
        }
    }

    #[test]
    fn origin_lifts_to_null_vector() {
        let v = lift(&ExtendedPoint::finite(vec![0.0, 0.0, 0.0]), n(3)).unwrap();
        assert_eq!(v.lorentz_norm(), 0.0);
        assert!((v.vector().norm() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn infinity_has_zero_finite_part() {
        let v = lift(&ExtendedPoint::Infinity, n(3)).unwrap();
        let h = std::f64::consts::FRAC_1_SQRT_2;
        assert_eq!(v.vector().as_slice(), &[0.0, 0.0, 0.0, -h, h]);
        assert_eq!(v.project(), ExtendedPoint::Infinity);
    }

    #[test]
    fn round_trips() {
        for p in [vec![1.0, 0.0, 0.0], vec![2.0, -1.0, 5.0], vec![1e-9, 3e5, -7.0]] {
            let q = ExtendedPoint::Finite(p);
            let back = lift(&q, n(3)).unwrap().project();
            assert!(rel_err(&back, &q) < 1e-12, "{q:?} -> {back:?}");
        }
    }

    #[test]
    fn rescaled_ray_projects_to_same_point() {
        let tol = Tolerances::default();
        let p = ExtendedPoint::finite(vec![0.3, -2.0]);
        let v = lift(&p, n(2)).unwrap();
        let scaled = v.vector() * -3.7;
        let back = SpherePoint::from_ray(&scaled, &tol).unwrap();
        assert!(back.distance(&v) < 1e-15);
        assert!(rel_err(&back.project(), &p) < 1e-12);
    }

    #[test]
    fn non_null_ray_is_rejected() {
        let tol = Tolerances::default();
        let v = DVector::from_vec(vec![1.0, 0.0, 0.0, 0.5]);
        assert!(matches!(
            SpherePoint::from_ray(&v, &tol),
            Err(Error::DegenerateRay { .. })
        ));
    }

    #[test]
    fn lift_validates_dimension() {
        assert!(matches!(
            lift(&ExtendedPoint::finite(vec![1.0]), n(2)),
            Err(Error::DimensionMismatch { .. })
        ));
        assert!(lift(&ExtendedPoint::finite(vec![f64::NAN, 0.0]), n(2)).is_err());
        assert!(AmbientDim::new(0).is_err());
    }

    #[test]
    fn huge_coordinates_do_not_overflow() {
        let p = ExtendedPoint::finite(vec![1e200, -1e200]);
        let v = lift(&p, n(2)).unwrap();
        assert!(v.vector().iter().all(|c| c.is_finite()));
        assert!(v.lorentz_norm().abs() < 1e-15);
    }

    #[test]
    fn unit_inversion_at_origin() {
        let q = invert_in_sphere(&[0.0; 3], 1.0, &ExtendedPoint::finite(vec![2.0, 0.0, 0.0])).unwrap();
        assert_eq!(q, ExtendedPoint::finite(vec![0.5, 0.0, 0.0]));
    }

    #[test]
    fn inversion_special_points() {
        let a = vec![1.0, -2.0];
        assert_eq!(
            invert_in_sphere(&a, 0.7, &ExtendedPoint::Finite(a.clone())).unwrap(),
            ExtendedPoint::Infinity
        );
        assert_eq!(
            invert_in_sphere(&a, 0.7, &ExtendedPoint::Infinity).unwrap(),
            ExtendedPoint::Finite(a)
        );
        assert!(invert_in_sphere(&[0.0], 0.0, &ExtendedPoint::Infinity).is_err());
    }

    #[test]
    fn hyperplane_reflection() {
        let u = [1.0, 0.0];
        let p = ExtendedPoint::finite(vec![1.0, 2.0]);
        assert_eq!(
            reflect_in_hyperplane(&u, 0.0, &p).unwrap(),
            ExtendedPoint::finite(vec![-1.0, 2.0])
        );
        let on = ExtendedPoint::finite(vec![0.5, 9.0]);
        assert_eq!(reflect_in_hyperplane(&u, 0.5, &on).unwrap(), on);
        assert_eq!(
            reflect_in_hyperplane(&u, 3.0, &ExtendedPoint::Infinity).unwrap(),
            ExtendedPoint::Infinity
        );
        assert!(reflect_in_hyperplane(&[2.0, 0.0], 0.0, &p).is_err());
    }
}
