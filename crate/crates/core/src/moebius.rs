//! The generalized Moebius group acting linearly on the light cone.
//!
//! Every Moebius map is a Lorentz matrix `G` (`G^T J G = J`) acting on null
//! rays; the action is projective, so `G` and `-G` describe the same map.
//! Inversions and hyperplane reflections are Lorentz reflections in a
//! spacelike vector.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::general_position::spherical_general_position_of;
use crate::linalg::{lorentz_form, lorentz_inner, sorted_svd, numerical_rank};
use crate::point::{AmbientDim, ExtendedPoint, SpherePoint};
use crate::sphere::{lifted_matrix, KSphere};
use crate::tolerance::Tolerances;

/// A Moebius transformation of `S^n`.
#[derive(Debug, Clone, PartialEq)]
pub struct MoebiusMap {
    g: DMatrix<f64>,
    n: AmbientDim,
}

/// A source/target pair of a map to be fitted.
#[derive(Debug, Clone, PartialEq)]
pub struct Correspondence {
    pub source: ExtendedPoint,
    pub target: ExtendedPoint,
}

impl Correspondence {
    pub fn new(source: ExtendedPoint, target: ExtendedPoint) -> Self {
        Self { source, target }
    }
}

/// Lorentz reflection `v -> v - 2 <v,s>/<s,s> s` in a spacelike vector.
fn lorentz_reflection(s: &DVector<f64>) -> DMatrix<f64> {
    let d = s.len();
    let q = lorentz_inner(s, s);
    let mut js = s.clone();
    js[d - 1] = -js[d - 1];
    DMatrix::identity(d, d) - (s * js.transpose()) * (2.0 / q)
}

impl MoebiusMap {
    pub fn identity(n: AmbientDim) -> Self {
        Self {
            g: DMatrix::identity(n.lorentz(), n.lorentz()),
            n,
        }
    }

    /// Wraps a matrix after checking the Lorentz condition relative to its
    /// size (`|G^T J G - J| <= tol.verify * |G|^2`). The sign is normalized
    /// so that the map preserves the future cone.
    pub fn from_matrix(g: DMatrix<f64>, tol: &Tolerances) -> Result<Self> {
        let d = g.nrows();
        if d < 3 || g.ncols() != d {
            return Err(Error::InvalidInput(format!(
                "Moebius matrix must be square of size n+2 >= 3, got {}x{}",
                g.nrows(),
                g.ncols()
            )));
        }
        if g.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidInput("matrix entries must be finite".into()));
        }
        let n = AmbientDim::new(d - 2)?;
        let mut map = Self { g, n };
        let deviation = map.lorentz_deviation() / map.g.norm_squared().max(1.0);
        if deviation > tol.verify {
            return Err(Error::NotLorentz { deviation });
        }
        if map.g[(d - 1, d - 1)] < 0.0 {
            map.g.neg_mut();
        }
        Ok(map)
    }

    /// Inversion in the sphere `|x - center| = radius`.
    pub fn from_inversion(center: &[f64], radius: f64, n: AmbientDim) -> Result<Self> {
        if center.len() != n.get() {
            return Err(Error::DimensionMismatch {
                expected: n.get(),
                found: center.len(),
            });
        }
        if !(radius.is_finite() && radius > 0.0) || center.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidInput("inversion needs a finite center and positive radius".into()));
        }
        // s = lift(a) - (r^2/2) (0, -1, 1) satisfies <lift(x), s> = (r^2 - |x-a|^2)/2.
        let a2: f64 = center.iter().map(|c| c * c).sum();
        let r2 = radius * radius;
        let d = n.lorentz();
        let mut s = DVector::zeros(d);
        s.rows_mut(0, n.get()).copy_from_slice(center);
        s[d - 2] = (1.0 - a2) / 2.0 + r2 / 2.0;
        s[d - 1] = (1.0 + a2) / 2.0 - r2 / 2.0;
        Ok(Self {
            g: lorentz_reflection(&s),
            n,
        })
    }

    /// Reflection in the hyperplane `normal . x = offset`.
    pub fn from_reflection(normal: &[f64], offset: f64, n: AmbientDim) -> Result<Self> {
        if normal.len() != n.get() {
            return Err(Error::DimensionMismatch {
                expected: n.get(),
                found: normal.len(),
            });
        }
        let norm: f64 = normal.iter().map(|c| c * c).sum::<f64>().sqrt();
        if (norm - 1.0).abs() > 1e-12 || !offset.is_finite() {
            return Err(Error::InvalidInput("hyperplane normal must be a unit vector".into()));
        }
        // s = (u, -c, c) satisfies <lift(x), s> = u.x - c and <s,s> = 1.
        let d = n.lorentz();
        let mut s = DVector::zeros(d);
        s.rows_mut(0, n.get()).copy_from_slice(normal);
        s[d - 2] = -offset;
        s[d - 1] = offset;
        Ok(Self {
            g: lorentz_reflection(&s),
            n,
        })
    }

    pub fn n(&self) -> AmbientDim {
        self.n
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.g
    }

    /// `|G^T J G - J|` in the Frobenius norm.
    pub fn lorentz_deviation(&self) -> f64 {
        let j = lorentz_form(self.n.lorentz());
        (self.g.transpose() * &j * &self.g - j).norm()
    }

    /// `self` after `other`: `apply(compose(a, b), p) = apply(a, apply(b, p))`.
    pub fn compose(&self, other: &MoebiusMap) -> Result<MoebiusMap> {
        self.check_dim(other.n.get())?;
        Ok(Self {
            g: &self.g * &other.g,
            n: self.n,
        })
    }

    /// Inverse via `G^{-1} = J G^T J`.
    pub fn inverse(&self) -> MoebiusMap {
        let j = lorentz_form(self.n.lorentz());
        Self {
            g: &j * self.g.transpose() * &j,
            n: self.n,
        }
    }

    fn check_dim(&self, found: usize) -> Result<()> {
        if found != self.n.get() {
            return Err(Error::DimensionMismatch {
                expected: self.n.get(),
                found,
            });
        }
        Ok(())
    }

    pub fn apply_point(&self, p: &SpherePoint) -> Result<SpherePoint> {
        self.check_dim(p.dim())?;
        let w = &self.g * p.vector();
        SpherePoint::snap(&w).ok_or(Error::DegenerateRay { residual: f64::INFINITY })
    }

    pub fn apply(&self, p: &ExtendedPoint) -> Result<ExtendedPoint> {
        let v = SpherePoint::lift(p, self.n)?;
        Ok(self.apply_point(&v)?.project())
    }

    /// Image of a sphere; its dimension is preserved.
    pub fn apply_to_sphere(&self, s: &KSphere, tol: &Tolerances) -> Result<KSphere> {
        self.check_dim(s.ambient_dim())?;
        // The image subspace has the same dimension; no rank decision is
        // needed, and a boost would make a relative rank cut unreliable.
        let q = (&self.g * s.basis()).qr().q();
        KSphere::from_orthonormal(q, tol)
    }

    /// Same map with the matrix multiplied by `factor`; the projective
    /// action is unchanged.
    pub fn rescaled(&self, factor: f64) -> MoebiusMap {
        Self {
            g: &self.g * factor,
            n: self.n,
        }
    }
}

/// `compose(a, b)`: first `b`, then `a`.
pub fn compose(a: &MoebiusMap, b: &MoebiusMap) -> Result<MoebiusMap> {
    a.compose(b)
}

pub fn inverse(m: &MoebiusMap) -> MoebiusMap {
    m.inverse()
}

pub fn apply(m: &MoebiusMap, p: &ExtendedPoint) -> Result<ExtendedPoint> {
    m.apply(p)
}

/// True iff both maps send every witness to the same point within
/// `tol.verify`.
pub fn maps_agree(a: &MoebiusMap, b: &MoebiusMap, witnesses: &[ExtendedPoint], tol: &Tolerances) -> bool {
    witnesses.iter().all(|w| {
        let (Ok(v), true) = (SpherePoint::lift(w, a.n), a.n == b.n) else {
            return false;
        };
        match (a.apply_point(&v), b.apply_point(&v)) {
            (Ok(x), Ok(y)) => x.distance(&y) <= tol.verify,
            _ => false,
        }
    })
}

/// Residual `|G v - w|` between canonical rays, or 1 when `G v` is not a
/// usable ray.
fn pair_residual(g: &DMatrix<f64>, v: &SpherePoint, w: &SpherePoint) -> f64 {
    let image = g * v.vector();
    match SpherePoint::snap(&image) {
        Some(x) => x.distance(w),
        None => 1.0,
    }
}

fn worst_pair(g: &DMatrix<f64>, sources: &[SpherePoint], targets: &[SpherePoint]) -> (usize, f64) {
    sources
        .iter()
        .zip(targets)
        .map(|(v, w)| pair_residual(g, v, w))
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |best, (i, r)| if r > best.1 { (i, r) } else { best })
}

/// Principal square root and inverse square root of a matrix near the
/// identity (Denman-Beavers iteration).
fn inverse_sqrt(a: &DMatrix<f64>) -> Option<DMatrix<f64>> {
    let mut y = a.clone();
    let mut z = DMatrix::identity(a.nrows(), a.ncols());
    for _ in 0..60 {
        let yi = y.clone().try_inverse()?;
        let zi = z.clone().try_inverse()?;
        let y_next = (&y + zi) * 0.5;
        let z_next = (&z + yi) * 0.5;
        let step = (&y_next - &y).norm();
        y = y_next;
        z = z_next;
        if step <= 1e-15 * y.norm() {
            break;
        }
    }
    z.iter().all(|x| x.is_finite()).then_some(z)
}

/// Nearest Lorentz matrix in the form-aware polar sense:
/// `L = G (J G^T J G)^{-1/2}`. The matrix `A = J G^T J G` is self-adjoint
/// for the Lorentz form, so `L^T J L = J` holds exactly whenever the
/// square root exists.
pub fn nearest_lorentz(g: &DMatrix<f64>) -> Option<DMatrix<f64>> {
    let j = lorentz_form(g.nrows());
    let a = &j * g.transpose() * &j * g;
    let root = inverse_sqrt(&a)?;
    Some(g * root)
}

/// Fits a Moebius map to point correspondences.
///
/// Each pair contributes `P_w G v = 0` with `P_w = I - w w^T`, which removes
/// the unknown per-pair scale of `G v = lambda w`. The stacked homogeneous
/// system is solved by SVD, rescaled so that `G^T J G = J`, projected onto the
/// Lorentz group and verified against every pair.
pub fn fit_from_correspondences(pairs: &[Correspondence], tol: &Tolerances) -> Result<MoebiusMap> {
    let Some(first) = pairs.first() else {
        return Err(Error::InsufficientData {
            reason: "no correspondences".into(),
        });
    };
    let n = match &first.source {
        ExtendedPoint::Finite(c) => c.len(),
        ExtendedPoint::Infinity => match pairs.iter().find_map(|p| p.source.coords().or(p.target.coords())) {
            Some(c) => c.len(),
            None => {
                return Err(Error::InsufficientData {
                    reason: "all correspondences are at infinity".into(),
                })
            }
        },
    };
    let n = AmbientDim::new(n)?;
    let mut sources = Vec::with_capacity(pairs.len());
    let mut targets = Vec::with_capacity(pairs.len());
    for p in pairs {
        sources.push(SpherePoint::lift(&p.source, n)?);
        targets.push(SpherePoint::lift(&p.target, n)?);
    }
    fit_lifted(&sources, &targets, n, tol)
}

pub(crate) fn fit_lifted(
    sources: &[SpherePoint],
    targets: &[SpherePoint],
    n: AmbientDim,
    tol: &Tolerances,
) -> Result<MoebiusMap> {
    let d = n.lorentz();
    let m = sources.len();
    if m < n.get() + 3 {
        return Err(Error::InsufficientData {
            reason: format!("{m} pairs given, at least n+3 = {} required", n.get() + 3),
        });
    }
    let source_rank = numerical_rank(&sorted_svd(&lifted_matrix(sources)).singular_values, tol.rank);
    if source_rank < d {
        return Err(Error::InsufficientData {
            reason: format!("sources span rank {source_rank} < {d}; they lie on an (n-1)-sphere"),
        });
    }
    let mut a = DMatrix::zeros(m * d, d * d);
    for (i, (v, w)) in sources.iter().zip(targets).enumerate() {
        let v = v.vector();
        let w = w.vector();
        let proj = DMatrix::identity(d, d) - w * w.transpose();
        for r in 0..d {
            for b in 0..d {
                let pab = proj[(r, b)];
                if pab == 0.0 {
                    continue;
                }
                for c in 0..d {
                    a[(i * d + r, b * d + c)] = pab * v[c];
                }
            }
        }
    }
    let svd = sorted_svd(&a);
    let sv = &svd.singular_values;
    let last = d * d - 1;
    if sv[last - 1] <= tol.rank * sv[0] {
        if spherical_general_position_of(sources, n, tol) {
            return Err(Error::IllConditioned {
                value: sv[last - 1] / sv[0],
                threshold: tol.rank,
            });
        }
        return Err(Error::InsufficientData {
            reason: format!(
                "correspondences leave a {}-dimensional family of solutions; sources are not in spherical general position",
                sv.iter().filter(|&&s| s <= tol.rank * sv[0]).count()
            ),
        });
    }
    let mut g = DMatrix::from_row_slice(d, d, svd.v.column(last).as_slice());
    let j = lorentz_form(d);
    let scale2 = (&j * g.transpose() * &j * &g).trace() / d as f64;
    if !(scale2 > 0.0) {
        let (index, residual) = worst_pair(&g, sources, targets);
        return Err(Error::Inconsistent { index, residual });
    }
    g /= scale2.sqrt();
    if g[(d - 1, d - 1)] < 0.0 {
        g.neg_mut();
    }
    let Some(lorentz) = nearest_lorentz(&g) else {
        let (index, residual) = worst_pair(&g, sources, targets);
        return Err(Error::Inconsistent { index, residual });
    };
    let moved = (&lorentz - &g).norm() / g.norm();
    let (index, residual) = worst_pair(&lorentz, sources, targets);
    if moved > tol.verify || residual > tol.verify {
        return Err(Error::Inconsistent {
            index,
            residual: residual.max(moved),
        });
    }
    Ok(MoebiusMap { g: lorentz, n })
}

/// Largest point residual of `m` over the given lifted pairs, with its index.
pub(crate) fn max_residual(m: &MoebiusMap, sources: &[SpherePoint], targets: &[SpherePoint]) -> (usize, f64) {
    worst_pair(&m.g, sources, targets)
}

/// Builds a map from its matrix without checks; the caller guarantees the
/// Lorentz condition.
pub(crate) fn from_lorentz_unchecked(g: DMatrix<f64>, n: AmbientDim) -> MoebiusMap {
    MoebiusMap { g, n }
}

/// Fits a Moebius map between two spheres of equal dimension from point
/// correspondences, working in coordinates of the two subspaces, and
/// extends it to the whole of `S^n` by an arbitrary isometry between the
/// orthogonal complements. Only the restriction to `domain` is determined
/// by the data.
pub fn fit_restriction(
    sources: &[SpherePoint],
    targets: &[SpherePoint],
    domain: &KSphere,
    image: &KSphere,
    tol: &Tolerances,
) -> Result<MoebiusMap> {
    let k = domain.dim();
    if image.dim() != k || domain.ambient_dim() != image.ambient_dim() {
        return Err(Error::DimensionMismatch {
            expected: k,
            found: image.dim(),
        });
    }
    let n = AmbientDim::new(domain.ambient_dim())?;
    let m = k + 2;
    if sources.len() < k + 3 {
        return Err(Error::InsufficientData {
            reason: format!("{} pairs given, at least {} required on a {k}-sphere", sources.len(), k + 3),
        });
    }
    let b = domain.basis();
    let bp = image.basis();
    let mut a = DMatrix::zeros(sources.len() * m, m * m);
    for (i, (v, w)) in sources.iter().zip(targets).enumerate() {
        let c = b.transpose() * v.vector();
        let mut cp = bp.transpose() * w.vector();
        cp /= cp.norm();
        let proj = DMatrix::identity(m, m) - &cp * cp.transpose();
        for r in 0..m {
            for s in 0..m {
                for t in 0..m {
                    a[(i * m + r, s * m + t)] = proj[(r, s)] * c[t];
                }
            }
        }
    }
    let svd = sorted_svd(&a);
    let sv = &svd.singular_values;
    let last = m * m - 1;
    if sv[last - 1] <= tol.rank * sv[0] {
        return Err(Error::InsufficientData {
            reason: "correspondences on the sphere do not determine a unique map".into(),
        });
    }
    let mut l = DMatrix::from_row_slice(m, m, svd.v.column(last).as_slice());
    let gram = domain.gram();
    let gram_p = image.gram();
    let gram_inv = gram.clone().try_inverse().ok_or(Error::IllConditioned {
        value: 0.0,
        threshold: tol.rank,
    })?;
    let scale = (&gram_inv * l.transpose() * gram_p * &l).trace() / m as f64;
    let inconsistent = |l: &DMatrix<f64>| {
        let full = bp * l * b.transpose();
        let (index, residual) = worst_pair(&full, sources, targets);
        Error::Inconsistent { index, residual }
    };
    if !(scale > 0.0) {
        return Err(inconsistent(&l));
    }
    l /= scale.sqrt();
    let probe = bp * (&l * (b.transpose() * sources[0].vector()));
    if probe[probe.len() - 1] < 0.0 {
        l.neg_mut();
    }
    // Polar projection onto the isometries between the two restricted forms.
    let a_mat = &gram_inv * l.transpose() * gram_p * &l;
    let Some(root) = inverse_sqrt(&a_mat) else {
        return Err(inconsistent(&l));
    };
    let iso = &l * root;
    let moved = (&iso - &l).norm() / l.norm();
    // Extend by mapping a Lorentz-orthonormal complement onto another.
    let (Some(comp), Some(comp_p)) = (
        crate::linalg::lorentz_complement(b),
        crate::linalg::lorentz_complement(bp),
    ) else {
        return Err(Error::IllConditioned {
            value: 0.0,
            threshold: tol.rank,
        });
    };
    let d = n.lorentz();
    let mut src = DMatrix::zeros(d, d);
    let mut dst = DMatrix::zeros(d, d);
    src.columns_mut(0, m).copy_from(b);
    dst.columns_mut(0, m).copy_from(&(bp * &iso));
    src.columns_mut(m, d - m).copy_from(&comp);
    dst.columns_mut(m, d - m).copy_from(&comp_p);
    let src_inv = src.try_inverse().ok_or(Error::IllConditioned {
        value: 0.0,
        threshold: tol.rank,
    })?;
    let g = dst * src_inv;
    let (index, residual) = worst_pair(&g, sources, targets);
    if moved > tol.verify || residual > tol.verify {
        return Err(Error::Inconsistent {
            index,
            residual: residual.max(moved),
        });
    }
    Ok(MoebiusMap { g, n })
}
