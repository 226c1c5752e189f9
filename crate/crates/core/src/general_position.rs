//! Circular and spherical general position of finite point sets.
//!
//! A set `B` is in circular (spherical) general position when every circle
//! (every `(n-1)`-sphere) misses at least two points of `B`.
//!
//! # Leave-one-out reduction
//!
//! Let `t` be the target dimension (1 for circles, `n-1` for hyperspheres).
//! `B` fails iff some `t`-sphere `S` has `|B \ S| <= 1`, i.e. iff some
//! `B' in {B} ∪ {B \ {b} : b in B}` lies on a `t`-sphere. A set lies on a
//! `t`-sphere iff its span has dimension at most `t`: the span is the
//! smallest sphere containing it, and every sphere of dimension `<= t` sits
//! inside a `t`-sphere (`t <= n`). Sets of at most one point lie on every
//! sphere. So the universal quantifier over spheres collapses to `|B| + 1`
//! rank computations, which is what [`circular_general_position`] and
//! [`spherical_general_position`] do.
//!
//! [`brute_force_gp_oracle`] instead enumerates the spheres spanned by
//! `(t+2)`-subsets and counts incidences directly. It is complete because a
//! failing sphere `S` contains `B ∩ S`, whose span is already spanned by
//! `t + 2` or fewer of its own points (padded from `B ∩ S` when larger).
//!
//! Verdicts certify only the finite set that was passed in.

use crate::error::{Error, Result};
use crate::point::{AmbientDim, ExtendedPoint, SpherePoint};
use crate::sphere::{span, span_rank, KSphere};
use crate::tolerance::Tolerances;

/// Largest set accepted by the brute-force oracle.
pub const BRUTE_FORCE_LIMIT: usize = 12;

/// A finite set of distinct points of `S^n`.
#[derive(Debug, Clone, PartialEq)]
pub struct PointSet {
    points: Vec<SpherePoint>,
    n: AmbientDim,
    merged: usize,
}

impl PointSet {
    /// Builds a set, merging points closer than `tol.member` (first
    /// occurrence wins).
    pub fn new(points: Vec<SpherePoint>, n: AmbientDim, tol: &Tolerances) -> Result<Self> {
        let mut kept: Vec<SpherePoint> = Vec::with_capacity(points.len());
        let mut merged = 0;
        for p in points {
            if p.dim() != n.get() {
                return Err(Error::DimensionMismatch {
                    expected: n.get(),
                    found: p.dim(),
                });
            }
            if kept.iter().any(|q| q.approx_eq(&p, tol)) {
                merged += 1;
            } else {
                kept.push(p);
            }
        }
        Ok(Self {
            points: kept,
            n,
            merged,
        })
    }

    pub fn from_extended(points: &[ExtendedPoint], n: AmbientDim, tol: &Tolerances) -> Result<Self> {
        let lifted = points
            .iter()
            .map(|p| SpherePoint::lift(p, n))
            .collect::<Result<Vec<_>>>()?;
        Self::new(lifted, n, tol)
    }

    pub fn points(&self) -> &[SpherePoint] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn n(&self) -> AmbientDim {
        self.n
    }

    /// Number of input points merged as duplicates.
    pub fn merged(&self) -> usize {
        self.merged
    }
}

/// Which family of spheres must miss two points.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GpMode {
    Circular,
    Spherical,
}

impl GpMode {
    /// Dimension of the spheres quantified over.
    pub fn target_dim(self, n: AmbientDim) -> usize {
        match self {
            GpMode::Circular => 1,
            GpMode::Spherical => n.get() - 1,
        }
    }

    /// Minimum cardinality for the property to be possible.
    pub fn min_points(self, n: AmbientDim) -> usize {
        self.target_dim(n) + 4
    }
}

/// A sphere of the target dimension that misses at most one point.
#[derive(Debug, Clone, PartialEq)]
pub struct GpWitness {
    pub sphere: KSphere,
    /// Indices (into the point set) of points off the sphere; at most one.
    pub excluded: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GpReport {
    pub mode: GpMode,
    pub verdict: bool,
    pub witness: Option<GpWitness>,
    pub cardinality_ok: bool,
    pub size: usize,
    /// Smallest relative singular value that separated a tested subset from
    /// the target dimension; small values mean a near-threshold verdict.
    pub margin: Option<f64>,
}

/// Pads `points` with canonical points (0, infinity, unit vectors) until the
/// span has dimension `target`. Points must already span at most `target`.
fn sphere_of_dim(points: &[SpherePoint], target: usize, n: AmbientDim, tol: &Tolerances) -> Result<KSphere> {
    let mut pool = vec![ExtendedPoint::Finite(vec![0.0; n.get()]), ExtendedPoint::Infinity];
    for i in 0..n.get() {
        let mut e = vec![0.0; n.get()];
        e[i] = 1.0;
        pool.push(ExtendedPoint::Finite(e));
    }
    let mut chosen: Vec<SpherePoint> = points.to_vec();
    let mut rank = span_rank(&chosen, tol).0;
    for q in &pool {
        if rank >= target + 2 {
            break;
        }
        let q = SpherePoint::lift(q, n)?;
        chosen.push(q);
        let r = span_rank(&chosen, tol).0;
        if r > rank {
            rank = r;
        } else {
            chosen.pop();
        }
    }
    span(&chosen, tol)
}

fn check_dims(points: &[SpherePoint], n: AmbientDim) -> Result<()> {
    match points.iter().find(|p| p.dim() != n.get()) {
        Some(p) => Err(Error::DimensionMismatch {
            expected: n.get(),
            found: p.dim(),
        }),
        None => Ok(()),
    }
}

/// Leave-one-out decision on raw points (assumed pairwise distinct).
pub(crate) fn reduction(points: &[SpherePoint], n: AmbientDim, mode: GpMode, tol: &Tolerances) -> Result<GpReport> {
    check_dims(points, n)?;
    let target = mode.target_dim(n);
    let size = points.len();
    let cardinality_ok = size >= mode.min_points(n);
    let mut margin: Option<f64> = None;
    let mut subsets: Vec<Option<usize>> = vec![None];
    subsets.extend((0..size).map(Some));
    for skip in subsets {
        let subset: Vec<SpherePoint> = points
            .iter()
            .enumerate()
            .filter(|(i, _)| Some(*i) != skip)
            .map(|(_, p)| p.clone())
            .collect();
        let (rank, sv) = span_rank(&subset, tol);
        if rank <= target + 2 {
            let sphere = sphere_of_dim(&subset, target, n, tol)?;
            return Ok(GpReport {
                mode,
                verdict: false,
                witness: Some(GpWitness {
                    sphere,
                    excluded: skip.into_iter().collect(),
                }),
                cardinality_ok,
                size,
                margin,
            });
        }
        let deciding = sv[target + 2] / sv[0];
        margin = Some(margin.map_or(deciding, |m: f64| m.min(deciding)));
    }
    Ok(GpReport {
        mode,
        verdict: true,
        witness: None,
        cardinality_ok,
        size,
        margin,
    })
}

/// Every circle misses at least two points of `set`.
pub fn circular_general_position(set: &PointSet, tol: &Tolerances) -> Result<GpReport> {
    reduction(set.points(), set.n(), GpMode::Circular, tol)
}

/// Every `(n-1)`-sphere misses at least two points of `set`.
pub fn spherical_general_position(set: &PointSet, tol: &Tolerances) -> Result<GpReport> {
    reduction(set.points(), set.n(), GpMode::Spherical, tol)
}

pub fn general_position(set: &PointSet, mode: GpMode, tol: &Tolerances) -> Result<GpReport> {
    reduction(set.points(), set.n(), mode, tol)
}

/// Spherical general position of raw points, merging duplicates first.
pub(crate) fn spherical_general_position_of(points: &[SpherePoint], n: AmbientDim, tol: &Tolerances) -> bool {
    PointSet::new(points.to_vec(), n, tol)
        .and_then(|s| spherical_general_position(&s, tol))
        .map(|r| r.verdict)
        .unwrap_or(false)
}

/// Visits every `k`-subset of `0..len` in lexicographic order until `f`
/// returns `Some`.
fn first_subset<T>(len: usize, k: usize, mut f: impl FnMut(&[usize]) -> Result<Option<T>>) -> Result<Option<T>> {
    if k > len {
        return Ok(None);
    }
    let mut idx: Vec<usize> = (0..k).collect();
    loop {
        if let Some(found) = f(&idx)? {
            return Ok(Some(found));
        }
        let mut i = k;
        loop {
            if i == 0 {
                return Ok(None);
            }
            i -= 1;
            if idx[i] < len - k + i {
                idx[i] += 1;
                for j in i + 1..k {
                    idx[j] = idx[j - 1] + 1;
                }
                break;
            }
        }
    }
}

/// Decides general position from the definition by enumerating the spheres
/// spanned by small subsets and counting incidences.
pub fn brute_force_gp_oracle(set: &PointSet, mode: GpMode, tol: &Tolerances) -> Result<GpReport> {
    let size = set.len();
    if size > BRUTE_FORCE_LIMIT {
        return Err(Error::TooLarge {
            size,
            limit: BRUTE_FORCE_LIMIT,
        });
    }
    let n = set.n();
    let target = mode.target_dim(n);
    let points = set.points();
    let cardinality_ok = size >= mode.min_points(n);
    let fail = |sphere: KSphere, excluded: Vec<usize>| GpReport {
        mode,
        verdict: false,
        witness: Some(GpWitness { sphere, excluded }),
        cardinality_ok,
        size,
        margin: None,
    };
    if size <= 1 {
        return Ok(fail(sphere_of_dim(points, target, n, tol)?, Vec::new()));
    }
    let k = (target + 2).min(size);
    let found = first_subset(size, k, |idx| {
        let subset: Vec<SpherePoint> = idx.iter().map(|&i| points[i].clone()).collect();
        let sphere = match span(&subset, tol) {
            Ok(s) => s,
            Err(Error::IllConditioned { .. }) => return Ok(None),
            Err(e) => return Err(e),
        };
        if sphere.dim() > target {
            return Ok(None);
        }
        let off: Vec<usize> = (0..size).filter(|&i| !sphere.contains(&points[i], tol)).collect();
        if off.len() > 1 {
            return Ok(None);
        }
        let on: Vec<SpherePoint> = (0..size).filter(|i| !off.contains(i)).map(|i| points[i].clone()).collect();
        Ok(Some((sphere_of_dim(&on, target, n, tol)?, off)))
    })?;
    Ok(match found {
        Some((sphere, off)) => fail(sphere, off),
        None => GpReport {
            mode,
            verdict: true,
            witness: None,
            cardinality_ok,
            size,
            margin: None,
        },
    })
}
