//! Seeded generators for points, spheres and Moebius maps.

use rand::Rng;
use rand_distr::StandardNormal;

use crate::moebius::MoebiusMap;
use crate::point::{AmbientDim, ExtendedPoint, SpherePoint};
use crate::sphere::{span, KSphere};
use crate::tolerance::Tolerances;

pub use rand_chacha::ChaCha8Rng as Rng64;
pub use rand::SeedableRng;

/// Seeded generator used across the crate.
pub fn rng(seed: u64) -> Rng64 {
    Rng64::seed_from_u64(seed)
}

/// Uniform point of `S^n` (uniform on the unit sphere of `R^{n+1}`).
pub fn random_point<R: Rng + ?Sized>(n: AmbientDim, rng: &mut R) -> SpherePoint {
    loop {
        let g: Vec<f64> = (0..=n.get()).map(|_| rng.sample(StandardNormal)).collect();
        if let Ok(p) = SpherePoint::from_unit_sphere(&g) {
            return p;
        }
    }
}

/// Random finite point with standard normal coordinates.
pub fn random_finite<R: Rng + ?Sized>(n: AmbientDim, rng: &mut R) -> ExtendedPoint {
    ExtendedPoint::Finite((0..n.get()).map(|_| rng.sample(StandardNormal)).collect())
}

/// Random k-sphere spanned by `k + 2` uniform points.
pub fn random_sphere<R: Rng + ?Sized>(n: AmbientDim, k: usize, rng: &mut R) -> KSphere {
    assert!(k <= n.get(), "sphere dimension {k} exceeds ambient dimension {n}");
    if k == n.get() {
        return KSphere::whole(n);
    }
    let tol = Tolerances::default();
    loop {
        let pts: Vec<SpherePoint> = (0..k + 2).map(|_| random_point(n, rng)).collect();
        if let Ok(s) = span(&pts, &tol) {
            if s.dim() == k {
                return s;
            }
        }
    }
}

/// Random inversion with center `N(0, I)` and radius uniform in `[0.5, 2]`.
pub fn random_inversion<R: Rng + ?Sized>(n: AmbientDim, rng: &mut R) -> MoebiusMap {
    let center: Vec<f64> = (0..n.get()).map(|_| rng.sample(StandardNormal)).collect();
    let radius = rng.random_range(0.5..2.0);
    MoebiusMap::from_inversion(&center, radius, n).expect("valid inversion")
}

/// Random hyperplane reflection with a uniform normal and `N(0,1)` offset.
pub fn random_reflection<R: Rng + ?Sized>(n: AmbientDim, rng: &mut R) -> MoebiusMap {
    let normal = loop {
        let g: Vec<f64> = (0..n.get()).map(|_| rng.sample(StandardNormal)).collect();
        let norm = g.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 1e-6 {
            break g.into_iter().map(|x| x / norm).collect::<Vec<_>>();
        }
    };
    let offset: f64 = rng.sample(StandardNormal);
    MoebiusMap::from_reflection(&normal, offset, n).expect("valid reflection")
}

/// Composition of `generators` random inversions and reflections (each an
/// inversion with probability 3/4).
pub fn random_moebius<R: Rng + ?Sized>(n: AmbientDim, generators: usize, rng: &mut R) -> MoebiusMap {
    let mut m = MoebiusMap::identity(n);
    for _ in 0..generators {
        let g = if rng.random_bool(0.75) {
            random_inversion(n, rng)
        } else {
            random_reflection(n, rng)
        };
        m = g.compose(&m).expect("same dimension");
    }
    m
}

/// Points for sample tables: a group of 8 on a random 2-sphere (when
/// `n > 2`), two groups of 6 on random circles, a group of `n + 3` on a
/// random `(n-1)`-sphere (when `n > 3`), then uniform points, truncated to
/// `count`. The groups give the table-based sphere checks and the 2-sphere
/// witness search something to find; the uniform tail keeps the set in
/// spherical general position.
pub fn structured_domain(n: AmbientDim, count: usize, seed: u64) -> Vec<SpherePoint> {
    let mut r = rng(seed);
    let mut groups: Vec<(usize, usize)> = Vec::new();
    if n.get() > 2 {
        groups.push((2, 8));
    }
    groups.push((1, 6));
    groups.push((1, 6));
    if n.get() > 3 {
        groups.push((n.get() - 1, n.get() + 3));
    }
    let mut pts = Vec::with_capacity(count);
    for (k, size) in groups {
        let s = random_sphere(n, k, &mut r);
        let group_seed: u64 = r.random();
        pts.extend(crate::sphere::sample_sphere(&s, size, group_seed));
    }
    pts.truncate(count);
    while pts.len() < count {
        pts.push(random_point(n, &mut r));
    }
    pts
}

/// Like [`random_moebius`], redrawing until the spectral norm of the Lorentz
/// matrix is at most `max_norm`. The norm bounds how strongly the map
/// compresses distances on `S^n`.
pub fn random_moebius_bounded<R: Rng + ?Sized>(n: AmbientDim, generators: usize, max_norm: f64, rng: &mut R) -> MoebiusMap {
    assert!(max_norm >= 1.0, "every Lorentz matrix has norm at least 1");
    loop {
        let m = random_moebius(n, generators, rng);
        if m.matrix().clone().singular_values().max() <= max_norm {
            return m;
        }
    }
}
