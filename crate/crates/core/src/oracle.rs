//! Black-box maps `T: S^n -> S^n`, as sample tables or as oracles that can
//! be queried at arbitrary points.

use crate::error::{Error, Result};
use crate::moebius::MoebiusMap;
use crate::point::{AmbientDim, ExtendedPoint, SpherePoint};
use crate::tolerance::Tolerances;

/// A deterministic map that can be evaluated pointwise.
///
/// Implementations must return identical answers for identical queries and
/// be safe to query from several threads.
pub trait MapOracle: Sync {
    fn n(&self) -> AmbientDim;

    fn query_point(&self, p: &SpherePoint) -> Result<SpherePoint>;

    fn query(&self, p: &ExtendedPoint) -> Result<ExtendedPoint> {
        let v = SpherePoint::lift(p, self.n())?;
        Ok(self.query_point(&v)?.project())
    }
}

/// Exact evaluation of a known Moebius map.
#[derive(Debug, Clone)]
pub struct MoebiusOracle(pub MoebiusMap);

impl MapOracle for MoebiusOracle {
    fn n(&self) -> AmbientDim {
        self.0.n()
    }

    fn query_point(&self, p: &SpherePoint) -> Result<SpherePoint> {
        self.0.apply_point(p)
    }
}

/// `outer` after `inner`.
#[derive(Debug, Clone)]
pub struct Composed<A, B> {
    pub outer: A,
    pub inner: B,
}

impl<A: MapOracle, B: MapOracle> MapOracle for Composed<A, B> {
    fn n(&self) -> AmbientDim {
        self.outer.n()
    }

    fn query_point(&self, p: &SpherePoint) -> Result<SpherePoint> {
        self.outer.query_point(&self.inner.query_point(p)?)
    }
}

/// An oracle backed by a closure on extended points.
pub struct FnOracle<F> {
    n: AmbientDim,
    f: F,
}

impl<F> FnOracle<F>
where
    F: Fn(&ExtendedPoint) -> ExtendedPoint + Sync,
{
    pub fn new(n: AmbientDim, f: F) -> Self {
        Self { n, f }
    }
}

impl<F> MapOracle for FnOracle<F>
where
    F: Fn(&ExtendedPoint) -> ExtendedPoint + Sync,
{
    fn n(&self) -> AmbientDim {
        self.n
    }

    fn query_point(&self, p: &SpherePoint) -> Result<SpherePoint> {
        SpherePoint::lift(&(self.f)(&p.project()), self.n)
    }
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Mixes a seed with an index into a fresh seed.
pub(crate) fn derive_seed(seed: u64, index: u64) -> u64 {
    splitmix(seed ^ splitmix(index))
}

/// A map with finitely many image points, assigned to domain points by a
/// seeded hash of their coordinates.
#[derive(Debug, Clone)]
pub struct FiniteImageOracle {
    n: AmbientDim,
    images: Vec<SpherePoint>,
    seed: u64,
}

impl FiniteImageOracle {
    pub fn images(&self) -> &[SpherePoint] {
        &self.images
    }

    /// At most `n + 1` images: every `(n-1)`-sphere image lies in an
    /// `(n-1)`-sphere.
    pub fn sphere_preserving_by_construction(&self) -> bool {
        self.images.len() <= self.n.get() + 1
    }

    /// At most 3 images: every circle image lies in a circle.
    pub fn circle_preserving_by_construction(&self) -> bool {
        self.images.len() <= 3
    }
}

impl MapOracle for FiniteImageOracle {
    fn n(&self) -> AmbientDim {
        self.n
    }

    fn query_point(&self, p: &SpherePoint) -> Result<SpherePoint> {
        if p.dim() != self.n.get() {
            return Err(Error::DimensionMismatch {
                expected: self.n.get(),
                found: p.dim(),
            });
        }
        let mut h = self.seed;
        for c in p.vector().iter() {
            // Fold -0.0 into 0.0 so equal points hash equally.
            let c = if *c == 0.0 { 0.0 } else { *c };
            h = splitmix(h ^ c.to_bits());
        }
        Ok(self.images[(h % self.images.len() as u64) as usize].clone())
    }
}

/// Builds a finite-image oracle. Images are kept in the given order
/// (duplicates included), so the assignment depends only on the inputs.
pub fn make_finite_image_oracle(images: &[ExtendedPoint], assignment_seed: u64, n: AmbientDim) -> Result<FiniteImageOracle> {
    if images.is_empty() {
        return Err(Error::InvalidInput("a finite-image map needs at least one image".into()));
    }
    let images = images
        .iter()
        .map(|p| SpherePoint::lift(p, n))
        .collect::<Result<Vec<_>>>()?;
    Ok(FiniteImageOracle {
        n,
        images,
        seed: assignment_seed,
    })
}

/// One sample of a map.
#[derive(Debug, Clone, PartialEq)]
pub struct TablePair {
    pub domain: ExtendedPoint,
    pub image: ExtendedPoint,
}

/// A finite sample of a map: distinct domain points with their images.
#[derive(Debug, Clone, PartialEq)]
pub struct MapTable {
    n: AmbientDim,
    pairs: Vec<TablePair>,
    domain: Vec<SpherePoint>,
    image: Vec<SpherePoint>,
    tol: Tolerances,
}

impl MapTable {
    /// Validates dimensions and that no domain point repeats.
    pub fn new(n: AmbientDim, pairs: Vec<TablePair>, tol: &Tolerances) -> Result<Self> {
        let mut domain = Vec::with_capacity(pairs.len());
        let mut image = Vec::with_capacity(pairs.len());
        for (i, p) in pairs.iter().enumerate() {
            let d = SpherePoint::lift(&p.domain, n)?;
            if let Some(j) = domain.iter().position(|q: &SpherePoint| q.approx_eq(&d, tol)) {
                return Err(Error::InvalidInput(format!(
                    "domain point {i} repeats domain point {j}; a map has one image per point"
                )));
            }
            domain.push(d);
            image.push(SpherePoint::lift(&p.image, n)?);
        }
        Ok(Self {
            n,
            pairs,
            domain,
            image,
            tol: *tol,
        })
    }

    pub fn n(&self) -> AmbientDim {
        self.n
    }

    pub fn pairs(&self) -> &[TablePair] {
        &self.pairs
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn domain_points(&self) -> &[SpherePoint] {
        &self.domain
    }

    pub fn image_points(&self) -> &[SpherePoint] {
        &self.image
    }

    /// Sub-table on the given indices.
    pub fn restrict(&self, indices: &[usize]) -> MapTable {
        MapTable {
            n: self.n,
            pairs: indices.iter().map(|&i| self.pairs[i].clone()).collect(),
            domain: indices.iter().map(|&i| self.domain[i].clone()).collect(),
            image: indices.iter().map(|&i| self.image[i].clone()).collect(),
            tol: self.tol,
        }
    }
}

/// Table lookup; off-table queries fail with [`Error::NoData`].
impl MapOracle for MapTable {
    fn n(&self) -> AmbientDim {
        self.n
    }

    fn query_point(&self, p: &SpherePoint) -> Result<SpherePoint> {
        self.domain
            .iter()
            .position(|d| d.approx_eq(p, &self.tol))
            .map(|i| self.image[i].clone())
            .ok_or(Error::NoData)
    }
}

/// Evaluates `oracle` on every domain point.
pub fn make_table<O: MapOracle + ?Sized>(oracle: &O, domain_points: &[ExtendedPoint], tol: &Tolerances) -> Result<MapTable> {
    let n = oracle.n();
    let mut pairs = Vec::with_capacity(domain_points.len());
    for p in domain_points {
        let v = SpherePoint::lift(p, n)?;
        let image = oracle.query_point(&v)?.project();
        pairs.push(TablePair {
            domain: p.clone(),
            image,
        });
    }
    MapTable::new(n, pairs, tol)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dim(n: usize) -> AmbientDim {
        AmbientDim::new(n).unwrap()
    }

    #[test]
    fn identity_table_repeats_domain() {
        let tol = Tolerances::default();
        let o = MoebiusOracle(MoebiusMap::identity(dim(2)));
        let pts = vec![ExtendedPoint::finite(vec![1.0, 2.0]), ExtendedPoint::Infinity];
        let t = make_table(&o, &pts, &tol).unwrap();
        for (p, pair) in pts.iter().zip(t.pairs()) {
            let a = SpherePoint::lift(p, dim(2)).unwrap();
            let b = SpherePoint::lift(&pair.image, dim(2)).unwrap();
            assert!(a.distance(&b) < 1e-14);
        }
        assert!(make_table(&o, &[], &tol).unwrap().is_empty());
    }

    #[test]
    fn table_lookup_and_no_data() {
        let tol = Tolerances::default();
        let pairs = vec![TablePair {
            domain: ExtendedPoint::finite(vec![0.0, 0.0]),
            image: ExtendedPoint::Infinity,
        }];
        let t = MapTable::new(dim(2), pairs, &tol).unwrap();
        assert_eq!(t.query(&ExtendedPoint::finite(vec![0.0, 0.0])).unwrap(), ExtendedPoint::Infinity);
        assert_eq!(t.query(&ExtendedPoint::finite(vec![1.0, 0.0])), Err(Error::NoData));
    }

    #[test]
    fn repeated_domain_point_is_rejected() {
        let tol = Tolerances::default();
        let p = ExtendedPoint::finite(vec![1.0, 0.0]);
        let pairs = vec![
            TablePair { domain: p.clone(), image: p.clone() },
            TablePair { domain: p.clone(), image: ExtendedPoint::Infinity },
        ];
        assert!(matches!(MapTable::new(dim(2), pairs, &tol), Err(Error::InvalidInput(_))));
    }

    #[test]
    fn finite_image_oracle_is_deterministic() {
        let imgs = vec![
            ExtendedPoint::finite(vec![0.0, 0.0, 0.0]),
            ExtendedPoint::finite(vec![1.0, 0.0, 0.0]),
            ExtendedPoint::Infinity,
        ];
        let o = make_finite_image_oracle(&imgs, 42, dim(3)).unwrap();
        assert!(o.circle_preserving_by_construction());
        assert!(o.sphere_preserving_by_construction());
        let mut seen = [false; 3];
        for i in 0..200 {
            let p = ExtendedPoint::finite(vec![i as f64 * 0.1, -0.2, 3.0]);
            let a = o.query(&p).unwrap();
            assert_eq!(a, o.query(&p).unwrap());
            let lifted = SpherePoint::lift(&a, dim(3)).unwrap();
            let k = o.images().iter().position(|q| q.distance(&lifted) < 1e-12).unwrap();
            seen[k] = true;
        }
        assert!(seen.iter().all(|&s| s));
        assert!(make_finite_image_oracle(&[], 0, dim(3)).is_err());
    }

    #[test]
    fn composition_applies_inner_first() {
        let n = dim(2);
        let inv = MoebiusOracle(MoebiusMap::from_inversion(&[0.0, 0.0], 1.0, n).unwrap());
        let shift = FnOracle::new(n, |p: &ExtendedPoint| match p {
            ExtendedPoint::Finite(x) => ExtendedPoint::finite(vec![x[0] + 1.0, x[1]]),
            ExtendedPoint::Infinity => ExtendedPoint::Infinity,
        });
        let c = Composed { outer: shift, inner: inv };
        let q = c.query(&ExtendedPoint::finite(vec![2.0, 0.0])).unwrap();
        let ExtendedPoint::Finite(x) = q else { panic!() };
        assert!((x[0] - 1.5).abs() < 1e-12 && x[1].abs() < 1e-12);
    }
}
