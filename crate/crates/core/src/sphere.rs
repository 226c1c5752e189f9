//! Round k-spheres of `S^n` as Lorentzian subspaces of `R^{n+1,1}`.
//!
//! A k-sphere is the projectivized null cone of a `(k+2)`-dimensional
//! subspace on which the Lorentz form has signature `(k+1, 1)`. Euclidean
//! spheres and affine subspaces through infinity are treated uniformly.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::linalg::{self, column_space, lorentz_gram, residual_from_span, sorted_svd};
use crate::point::{AmbientDim, SpherePoint};
use crate::tolerance::Tolerances;

/// A k-sphere stored as an orthonormal basis of its Lorentzian subspace.
#[derive(Debug, Clone, PartialEq)]
pub struct KSphere {
    basis: DMatrix<f64>,
    gram: DMatrix<f64>,
}

/// Outcome of intersecting two spheres.
#[derive(Debug, Clone, PartialEq)]
pub enum Intersection {
    Empty,
    /// The spheres touch in exactly one point (degenerate intersection).
    SinglePoint(SpherePoint),
    Sphere(KSphere),
}

impl KSphere {
    /// Builds a sphere from any spanning set of its subspace (columns of
    /// `vectors`), checking the signature.
    pub fn from_subspace(vectors: &DMatrix<f64>, tol: &Tolerances) -> Result<Self> {
        let (basis, _) = column_space(vectors, tol.rank);
        Self::from_orthonormal(basis, tol)
    }

    pub(crate) fn from_orthonormal(basis: DMatrix<f64>, tol: &Tolerances) -> Result<Self> {
        let rank = basis.ncols();
        if rank < 2 {
            return Err(Error::TooFewPoints { rank });
        }
        let gram = lorentz_gram(&basis);
        let eig = gram.clone().symmetric_eigen();
        let negative = eig.eigenvalues.iter().filter(|&&l| l < -tol.rank).count();
        let smallest = eig.eigenvalues.iter().fold(f64::INFINITY, |m, l| m.min(l.abs()));
        if negative != 1 || smallest <= tol.rank {
            return Err(Error::IllConditioned {
                value: smallest,
                threshold: tol.rank,
            });
        }
        Ok(Self { basis, gram })
    }

    /// The whole sphere `S^n`.
    pub fn whole(n: AmbientDim) -> Self {
        let basis = DMatrix::identity(n.lorentz(), n.lorentz());
        let gram = linalg::lorentz_form(n.lorentz());
        Self { basis, gram }
    }

    /// Sphere dimension `k`.
    pub fn dim(&self) -> usize {
        self.basis.ncols() - 2
    }

    pub fn ambient_dim(&self) -> usize {
        self.basis.nrows() - 2
    }

    pub fn basis(&self) -> &DMatrix<f64> {
        &self.basis
    }

    pub fn gram(&self) -> &DMatrix<f64> {
        &self.gram
    }

    /// Distance of a point's unit ray from the subspace.
    pub fn residual(&self, p: &SpherePoint) -> f64 {
        residual_from_span(&self.basis, p.vector())
    }

    pub fn contains(&self, p: &SpherePoint, tol: &Tolerances) -> bool {
        p.dim() == self.ambient_dim() && self.residual(p) <= tol.member
    }

    /// Equality of the underlying subspaces.
    pub fn equals(&self, other: &KSphere, tol: &Tolerances) -> bool {
        if self.basis.shape() != other.basis.shape() {
            return false;
        }
        let proj = &self.basis * (self.basis.transpose() * &other.basis);
        (&other.basis - proj).norm() <= tol.member
    }

    /// Whether `other` is contained in this sphere.
    pub fn contains_sphere(&self, other: &KSphere, tol: &Tolerances) -> bool {
        if self.basis.nrows() != other.basis.nrows() || other.dim() > self.dim() {
            return false;
        }
        let proj = &self.basis * (self.basis.transpose() * &other.basis);
        (&other.basis - proj).norm() <= tol.member
    }

    /// Frame `(e_0, e_1, ..., e_{k+1})` of the subspace with `<e_0,e_0> = -1`,
    /// `<e_i,e_i> = 1` and pairwise Lorentz-orthogonal.
    fn lorentz_frame(&self) -> DMatrix<f64> {
        let eig = self.gram.clone().symmetric_eigen();
        let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
        let cols: Vec<DVector<f64>> = order
            .iter()
            .map(|&i| {
                let scale = eig.eigenvalues[i].abs().sqrt();
                &self.basis * eig.eigenvectors.column(i) / scale
            })
            .collect();
        DMatrix::from_columns(&cols)
    }
}

/// Sphere dimension `k`.
pub fn sphere_dim(s: &KSphere) -> usize {
    s.dim()
}

/// Numerical rank of the lifted vectors of `points` and the sorted singular
/// values of the matrix they form.
pub fn span_rank(points: &[SpherePoint], tol: &Tolerances) -> (usize, Vec<f64>) {
    if points.is_empty() {
        return (0, Vec::new());
    }
    let m = lifted_matrix(points);
    let svd = sorted_svd(&m);
    let rank = linalg::numerical_rank(&svd.singular_values, tol.rank);
    (rank, svd.singular_values)
}

pub(crate) fn lifted_matrix(points: &[SpherePoint]) -> DMatrix<f64> {
    let cols: Vec<DVector<f64>> = points.iter().map(|p| p.vector().clone()).collect();
    DMatrix::from_columns(&cols)
}

/// The smallest sphere containing all `points`.
pub fn span(points: &[SpherePoint], tol: &Tolerances) -> Result<KSphere> {
    let Some(first) = points.first() else {
        return Err(Error::TooFewPoints { rank: 0 });
    };
    if let Some(bad) = points.iter().find(|p| p.dim() != first.dim()) {
        return Err(Error::DimensionMismatch {
            expected: first.dim(),
            found: bad.dim(),
        });
    }
    KSphere::from_subspace(&lifted_matrix(points), tol)
}

pub fn contains(s: &KSphere, p: &SpherePoint, tol: &Tolerances) -> bool {
    s.contains(p, tol)
}

pub fn sphere_equals(a: &KSphere, b: &KSphere, tol: &Tolerances) -> bool {
    a.equals(b, tol)
}

/// Intersects two spheres of the same ambient dimension.
///
/// The subspace intersection is found from the principal angles between the
/// two subspaces; directions whose sine is at most `tol.rank` are shared.
/// A sine strictly between `tol.rank` and `1e3 * tol.rank` makes the
/// decision ambiguous and is reported as [`Error::IllConditioned`].
pub fn intersect(a: &KSphere, b: &KSphere, tol: &Tolerances) -> Result<Intersection> {
    if a.ambient_dim() != b.ambient_dim() {
        return Err(Error::DimensionMismatch {
            expected: a.ambient_dim(),
            found: b.ambient_dim(),
        });
    }
    let ba = &a.basis;
    let bb = &b.basis;
    let off = bb - ba * (ba.transpose() * bb);
    let svd = sorted_svd(&off);
    let band = tol.rank * Tolerances::AMBIGUITY_FACTOR;
    if let Some(&s) = svd.singular_values.iter().find(|&&s| s > tol.rank && s <= band) {
        return Err(Error::IllConditioned {
            value: s,
            threshold: tol.rank,
        });
    }
    let shared: Vec<usize> = (0..svd.singular_values.len())
        .filter(|&i| svd.singular_values[i] <= tol.rank)
        .collect();
    if shared.is_empty() {
        return Ok(Intersection::Empty);
    }
    let dirs = DMatrix::from_columns(&shared.iter().map(|&i| bb * svd.v.column(i)).collect::<Vec<_>>());
    // Re-orthonormalize to wash out rounding from the rotation.
    let (w, _) = column_space(&dirs, tol.rank);
    let gram = lorentz_gram(&w);
    let eig = gram.symmetric_eigen();
    let (imin, lmin) = eig
        .eigenvalues
        .iter()
        .copied()
        .enumerate()
        .min_by(|x, y| x.1.total_cmp(&y.1))
        .expect("nonempty");
    if lmin.abs() <= tol.rank {
        let v = &w * eig.eigenvectors.column(imin);
        return SpherePoint::snap(&v)
            .map(Intersection::SinglePoint)
            .ok_or(Error::IllConditioned {
                value: lmin.abs(),
                threshold: tol.rank,
            });
    }
    if lmin > 0.0 || w.ncols() < 2 {
        return Ok(Intersection::Empty);
    }
    KSphere::from_orthonormal(w, tol).map(Intersection::Sphere)
}

/// Deterministic sample of `count` points on `s`.
///
/// Points are null combinations `e_0 + sum u_i e_i` of a Lorentz frame of the
/// subspace, with `u` on the unit sphere `S^k`. Circles are sampled at
/// equally spaced angles after a random phase, so the output is pairwise
/// distinct for every `count`; 0-spheres alternate between their two points
/// (distinct for `count <= 2`); for `k >= 2` the directions are independent
/// Gaussian draws and coincide with probability zero.
pub fn sample_sphere(s: &KSphere, count: usize, seed: u64) -> Vec<SpherePoint> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let frame = s.lorentz_frame();
    let k = s.dim();
    let timelike = frame.column(0).into_owned();
    let mut out = Vec::with_capacity(count);
    let phase: f64 = rng.random::<f64>() * std::f64::consts::TAU;
    for j in 0..count {
        let u: Vec<f64> = match k {
            0 => vec![if j % 2 == 0 { 1.0 } else { -1.0 }],
            1 => {
                let t = phase + std::f64::consts::TAU * j as f64 / count as f64;
                vec![t.cos(), t.sin()]
            }
            _ => loop {
                let g: Vec<f64> = (0..=k).map(|_| rng.sample(StandardNormal)).collect();
                let norm = g.iter().map(|x| x * x).sum::<f64>().sqrt();
                if norm > 1e-12 {
                    break g.into_iter().map(|x| x / norm).collect();
                }
            },
        };
        let mut v = timelike.clone();
        for (i, ui) in u.iter().enumerate() {
            v += frame.column(i + 1) * *ui;
        }
        out.push(SpherePoint::snap(&v).expect("frame vectors give a future null ray"));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::point::{lift, ExtendedPoint};

    fn tol() -> Tolerances {
        Tolerances::default()
    }

    fn pts(n: usize, coords: &[&[f64]]) -> Vec<SpherePoint> {
        let n = AmbientDim::new(n).unwrap();
        coords
            .iter()
            .map(|c| lift(&ExtendedPoint::finite(c.to_vec()), n).unwrap())
            .collect()
    }

    fn fin(n: usize, c: &[f64]) -> SpherePoint {
        lift(&ExtendedPoint::finite(c.to_vec()), AmbientDim::new(n).unwrap()).unwrap()
    }

    #[test]
    fn collinear_points_span_a_circle_through_infinity() {
        let p = pts(3, &[&[0.0, 0.0, 0.0], &[1.0, 1.0, 1.0], &[-2.0, -2.0, -2.0]]);
        let c = span(&p, &tol()).unwrap();
        assert_eq!(c.dim(), 1);
        let inf = lift(&ExtendedPoint::Infinity, AmbientDim::new(3).unwrap()).unwrap();
        assert!(c.contains(&inf, &tol()));
        for q in &p {
            assert!(c.contains(q, &tol()));
        }
    }

    #[test]
    fn three_points_give_the_circumcircle() {
        // Oracle: equidistance equations give center (1,1), radius sqrt(2).
        let c = span(&pts(2, &[&[0.0, 0.0], &[2.0, 0.0], &[0.0, 2.0]]), &tol()).unwrap();
        assert_eq!(c.dim(), 1);
        let r = 2f64.sqrt();
        for t in [0.3, 1.9, 4.4] {
            assert!(c.contains(&fin(2, &[1.0 + r * f64::cos(t), 1.0 + r * f64::sin(t)]), &tol()));
        }
        assert!(!c.contains(&fin(2, &[1.0, 1.0]), &tol()));
        assert!(!c.contains(&fin(2, &[1.0, 1.0 + 1.01 * r]), &tol()));
    }

    #[test]
    fn single_point_has_no_span() {
        let p = pts(2, &[&[1.0, 1.0], &[1.0, 1.0]]);
        assert_eq!(span(&p, &tol()), Err(Error::TooFewPoints { rank: 1 }));
        assert_eq!(span(&[], &tol()), Err(Error::TooFewPoints { rank: 0 }));
    }

    #[test]
    fn two_points_form_a_zero_sphere() {
        let s = span(&pts(3, &[&[1.0, 0.0, 0.0], &[0.0, 4.0, 0.0]]), &tol()).unwrap();
        assert_eq!(s.dim(), 0);
    }

    #[test]
    fn round_two_sphere_in_r3() {
        let s = span(
            &pts(3, &[&[1.0, 0.0, 0.0], &[0.0, 1.0, 0.0], &[0.0, 0.0, 1.0], &[-1.0, 0.0, 0.0]]),
            &tol(),
        )
        .unwrap();
        assert_eq!(s.dim(), 2);
        let h = 1.0 / 3f64.sqrt();
        assert!(s.contains(&fin(3, &[h, -h, h]), &tol()));
        assert!(!s.contains(&fin(3, &[0.0, 0.0, 0.0]), &tol()));
    }

    #[test]
    fn unit_circles_meet_in_a_point_pair() {
        let a = span(&pts(2, &[&[1.0, 0.0], &[0.0, 1.0], &[-1.0, 0.0]]), &tol()).unwrap();
        let b = span(&pts(2, &[&[2.0, 0.0], &[1.0, 1.0], &[0.0, 0.0]]), &tol()).unwrap();
        let Intersection::Sphere(s) = intersect(&a, &b, &tol()).unwrap() else {
            panic!("expected a 0-sphere");
        };
        assert_eq!(s.dim(), 0);
        let y = 3f64.sqrt() / 2.0;
        assert!(s.contains(&fin(2, &[0.5, y]), &tol()));
        assert!(s.contains(&fin(2, &[0.5, -y]), &tol()));
    }

    #[test]
    fn tangent_circles_meet_in_one_point() {
        let a = span(&pts(2, &[&[1.0, 0.0], &[0.0, 1.0], &[-1.0, 0.0]]), &tol()).unwrap();
        let b = span(&pts(2, &[&[1.0, 0.0], &[2.0, 1.0], &[3.0, 0.0]]), &tol()).unwrap();
        let Intersection::SinglePoint(p) = intersect(&a, &b, &tol()).unwrap() else {
            panic!("expected tangency");
        };
        assert!(p.distance(&fin(2, &[1.0, 0.0])) < 1e-7);
    }

    #[test]
    fn disjoint_circles_do_not_meet() {
        let a = span(&pts(2, &[&[1.0, 0.0], &[0.0, 1.0], &[-1.0, 0.0]]), &tol()).unwrap();
        let b = span(&pts(2, &[&[5.0, 0.0], &[6.0, 1.0], &[7.0, 0.0]]), &tol()).unwrap();
        assert_eq!(intersect(&a, &b, &tol()).unwrap(), Intersection::Empty);
    }

    #[test]
    fn self_intersection_is_idempotent() {
        let a = span(&pts(3, &[&[1.0, 0.0, 2.0], &[0.0, 1.0, 0.0], &[-1.0, 0.5, 0.0]]), &tol()).unwrap();
        let Intersection::Sphere(s) = intersect(&a, &a, &tol()).unwrap() else {
            panic!()
        };
        assert!(s.equals(&a, &tol()));
    }

    #[test]
    fn planes_in_s3_meet_in_a_circle() {
        // Two 2-planes of R^3 (with infinity) through the x-axis.
        let a = span(&pts(3, &[&[0.0, 0.0, 0.0], &[1.0, 0.0, 0.0], &[0.0, 1.0, 0.0], &[2.0, 3.0, 0.0]]), &tol())
            .unwrap();
        let b = span(&pts(3, &[&[0.0, 0.0, 0.0], &[1.0, 0.0, 0.0], &[0.0, 0.0, 1.0], &[2.0, 0.0, 3.0]]), &tol())
            .unwrap();
        assert_eq!((a.dim(), b.dim()), (2, 2));
        let Intersection::Sphere(s) = intersect(&a, &b, &tol()).unwrap() else {
            panic!()
        };
        assert_eq!(s.dim(), 1);
        assert!(s.contains(&fin(3, &[-7.0, 0.0, 0.0]), &tol()));
    }

    #[test]
    fn samples_lie_on_the_sphere_and_are_deterministic() {
        let c = span(&pts(3, &[&[1.0, 0.0, 2.0], &[0.0, 1.0, 0.0], &[-1.0, 0.5, 0.0]]), &tol()).unwrap();
        let s1 = sample_sphere(&c, 4, 7);
        let s2 = sample_sphere(&c, 4, 7);
        assert_eq!(s1, s2);
        for (i, p) in s1.iter().enumerate() {
            assert!(c.contains(p, &tol()));
            for q in &s1[..i] {
                assert!(p.distance(q) > 1e-3);
            }
        }
        assert_eq!(sample_sphere(&c, 1, 3).len(), 1);
        let w = KSphere::whole(AmbientDim::new(3).unwrap());
        for p in sample_sphere(&w, 10, 1) {
            assert!(p.lorentz_norm().abs() < 1e-15);
        }
    }

    #[test]
    fn zero_sphere_samples_alternate() {
        let s = span(&pts(2, &[&[1.0, 0.0], &[0.0, 4.0]]), &tol()).unwrap();
        let p = sample_sphere(&s, 2, 0);
        assert!(p[0].distance(&p[1]) > 0.1);
        assert!(s.contains(&p[0], &tol()) && s.contains(&p[1], &tol()));
    }
}
