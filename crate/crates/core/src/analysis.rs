//! Sampled checks of weak circle/sphere preservation.
//!
//! "For every circle" is certified only over the spheres actually tested;
//! reports carry the count of tested and skipped spheres.

use crate::error::{Error, Result};
use crate::oracle::{derive_seed, MapOracle, MapTable};
use crate::point::{ExtendedPoint, SpherePoint};
use crate::random::{random_sphere, rng};
use crate::sphere::{sample_sphere, span, span_rank, KSphere};
use crate::tolerance::Tolerances;

/// Default number of samples per tested circle.
pub const DEFAULT_SAMPLES_PER_CIRCLE: usize = 6;

/// A tested sphere whose image is not contained in a sphere of the
/// expected dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct SphereFailure {
    pub index: usize,
    pub sphere: KSphere,
    pub image_dim: usize,
    /// Sampled domain points with their images.
    pub witnesses: Vec<(ExtendedPoint, ExtendedPoint)>,
}

/// Outcome of a sampled preservation check.
#[derive(Debug, Clone, PartialEq)]
pub struct WcpReport {
    /// Dimension the images must fit into.
    pub target_dim: usize,
    pub spheres_tested: usize,
    /// Spheres skipped because the oracle had no data for a sample.
    pub skipped: usize,
    pub verdict: bool,
    /// Image span dimension per sphere, `None` when skipped.
    pub image_dims: Vec<Option<usize>>,
    pub failures: Vec<SphereFailure>,
}

/// Dimension of the smallest sphere containing the images; a single image
/// point counts as dimension 0.
pub fn image_span_dim(images: &[SpherePoint], tol: &Tolerances) -> usize {
    span_rank(images, tol).0.saturating_sub(2)
}

fn check_one<O: MapOracle + ?Sized>(
    oracle: &O,
    samples: &[SpherePoint],
    tol: &Tolerances,
) -> Result<(usize, Vec<SpherePoint>)> {
    let images = samples
        .iter()
        .map(|p| oracle.query_point(p))
        .collect::<Result<Vec<_>>>()?;
    Ok((image_span_dim(&images, tol), images))
}

/// Samples every sphere, maps the samples and requires the image span to
/// have dimension at most `target_dim`.
pub fn check_sphere_images<O: MapOracle + ?Sized>(
    oracle: &O,
    spheres: &[KSphere],
    target_dim: usize,
    samples_per_sphere: usize,
    seed: u64,
    tol: &Tolerances,
) -> Result<WcpReport> {
    let n = oracle.n().get();
    if let Some(s) = spheres.iter().find(|s| s.ambient_dim() != n) {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: s.ambient_dim(),
        });
    }
    let mut report = WcpReport {
        target_dim,
        spheres_tested: 0,
        skipped: 0,
        verdict: true,
        image_dims: Vec::with_capacity(spheres.len()),
        failures: Vec::new(),
    };
    for (index, sphere) in spheres.iter().enumerate() {
        let samples = sample_sphere(sphere, samples_per_sphere, derive_seed(seed, index as u64));
        match check_one(oracle, &samples, tol) {
            Ok((dim, images)) => {
                report.spheres_tested += 1;
                report.image_dims.push(Some(dim));
                if dim > target_dim {
                    report.failures.push(SphereFailure {
                        index,
                        sphere: sphere.clone(),
                        image_dim: dim,
                        witnesses: samples
                            .iter()
                            .zip(&images)
                            .map(|(d, i)| (d.project(), i.project()))
                            .collect(),
                    });
                }
            }
            Err(Error::NoData) => {
                report.skipped += 1;
                report.image_dims.push(None);
            }
            Err(e) => return Err(e),
        }
    }
    report.verdict = report.failures.is_empty();
    Ok(report)
}

/// Does every tested circle map into a circle?
pub fn check_weakly_circle_preserving<O: MapOracle + ?Sized>(
    oracle: &O,
    circles: &[KSphere],
    samples_per_circle: usize,
    seed: u64,
    tol: &Tolerances,
) -> Result<WcpReport> {
    if samples_per_circle < 4 {
        return Err(Error::InvalidInput(
            "at least 4 samples per circle are needed; any 3 points are concircular".into(),
        ));
    }
    if let Some(c) = circles.iter().find(|c| c.dim() != 1) {
        return Err(Error::InvalidInput(format!("expected circles, got a {}-sphere", c.dim())));
    }
    check_sphere_images(oracle, circles, 1, samples_per_circle, seed, tol)
}

/// Does every tested `(n-1)`-sphere map into an `(n-1)`-sphere?
pub fn check_weakly_sphere_preserving<O: MapOracle + ?Sized>(
    oracle: &O,
    spheres: &[KSphere],
    samples_per_sphere: usize,
    seed: u64,
    tol: &Tolerances,
) -> Result<WcpReport> {
    let n = oracle.n().get();
    if samples_per_sphere < n + 2 {
        return Err(Error::InvalidInput(format!(
            "at least n+2 = {} samples per sphere are needed",
            n + 2
        )));
    }
    if let Some(s) = spheres.iter().find(|s| s.dim() != n - 1) {
        return Err(Error::InvalidInput(format!("expected {}-spheres, got a {}-sphere", n - 1, s.dim())));
    }
    check_sphere_images(oracle, spheres, n - 1, samples_per_sphere, seed, tol)
}

/// Maps `trials` random k-spheres (with `k + 4` samples each) and records
/// their image dimensions, which must not exceed `k`.
pub fn check_k_sphere_collapse<O: MapOracle + ?Sized>(
    oracle: &O,
    k: usize,
    trials: usize,
    seed: u64,
    tol: &Tolerances,
) -> Result<WcpReport> {
    let n = oracle.n();
    if k == 0 || k >= n.get() {
        return Err(Error::InvalidInput(format!("k must satisfy 1 <= k <= n-1 = {}", n.get() - 1)));
    }
    let mut r = rng(seed);
    let spheres: Vec<KSphere> = (0..trials).map(|_| random_sphere(n, k, &mut r)).collect();
    check_sphere_images(oracle, &spheres, k, k + 4, derive_seed(seed, u64::MAX), tol)
}

/// `count` random k-spheres from a seed.
pub fn random_spheres(n: crate::point::AmbientDim, k: usize, count: usize, seed: u64) -> Vec<KSphere> {
    let mut r = rng(seed);
    (0..count).map(|_| random_sphere(n, k, &mut r)).collect()
}

/// Spheres through table points found by [`find_table_spheres`].
#[derive(Debug, Clone, PartialEq)]
pub struct SphereSearch {
    /// Each sphere with the indices of the table points on it.
    pub spheres: Vec<(KSphere, Vec<usize>)>,
    pub subsets_examined: usize,
    pub cap_hit: bool,
}

/// Subsets examined before a table sphere search gives up.
pub const SPHERE_SEARCH_CAP: usize = 100_000;

/// Finds up to `max_spheres` distinct `dim`-spheres carrying at least
/// `min_points` domain points of the table. Subsets of `dim + 2` points are
/// examined in lexicographic order, at most [`SPHERE_SEARCH_CAP`] of them.
pub fn find_table_spheres(
    table: &MapTable,
    dim: usize,
    min_points: usize,
    max_spheres: usize,
    tol: &Tolerances,
) -> SphereSearch {
    let pts = table.domain_points();
    let m = pts.len();
    let k = dim + 2;
    let mut out = SphereSearch {
        spheres: Vec::new(),
        subsets_examined: 0,
        cap_hit: false,
    };
    if k > m || max_spheres == 0 {
        return out;
    }
    let mut idx: Vec<usize> = (0..k).collect();
    'outer: loop {
        if out.subsets_examined >= SPHERE_SEARCH_CAP {
            out.cap_hit = true;
            break;
        }
        out.subsets_examined += 1;
        let seen = out
            .spheres
            .iter()
            .any(|(_, on)| idx.iter().all(|i| on.contains(i)));
        if !seen {
            let subset: Vec<SpherePoint> = idx.iter().map(|&i| pts[i].clone()).collect();
            if let Ok(s) = span(&subset, tol) {
                if s.dim() == dim {
                    let on: Vec<usize> = (0..m).filter(|&i| s.contains(&pts[i], tol)).collect();
                    if on.len() >= min_points {
                        out.spheres.push((s, on));
                        if out.spheres.len() >= max_spheres {
                            break 'outer;
                        }
                    }
                }
            }
        }
        let mut i = k;
        loop {
            if i == 0 {
                break 'outer;
            }
            i -= 1;
            if idx[i] < m - k + i {
                idx[i] += 1;
                for j in i + 1..k {
                    idx[j] = idx[j - 1] + 1;
                }
                break;
            }
        }
    }
    out
}

/// Preservation check on a table: tests the spheres of dimension `dim`
/// that carry at least `min_points` table points, using up to `samples`
/// table points per sphere.
pub fn check_table(
    table: &MapTable,
    dim: usize,
    max_spheres: usize,
    samples: usize,
    tol: &Tolerances,
) -> Result<(WcpReport, SphereSearch)> {
    let min_points = dim + 3;
    if samples < min_points {
        return Err(Error::InvalidInput(format!(
            "at least {min_points} samples per {dim}-sphere are needed"
        )));
    }
    let search = find_table_spheres(table, dim, min_points, max_spheres, tol);
    if search.spheres.is_empty() {
        return Err(Error::InsufficientData {
            reason: format!(
                "no {dim}-sphere carries {min_points} or more table points ({} subsets examined{})",
                search.subsets_examined,
                if search.cap_hit { ", search cap hit" } else { "" }
            ),
        });
    }
    let mut report = WcpReport {
        target_dim: dim,
        spheres_tested: 0,
        skipped: 0,
        verdict: true,
        image_dims: Vec::new(),
        failures: Vec::new(),
    };
    for (index, (sphere, on)) in search.spheres.iter().enumerate() {
        let used: Vec<usize> = on.iter().copied().take(samples).collect();
        let images: Vec<SpherePoint> = used.iter().map(|&i| table.image_points()[i].clone()).collect();
        let d = image_span_dim(&images, tol);
        report.spheres_tested += 1;
        report.image_dims.push(Some(d));
        if d > dim {
            report.failures.push(SphereFailure {
                index,
                sphere: sphere.clone(),
                image_dim: d,
                witnesses: used
                    .iter()
                    .map(|&i| (table.pairs()[i].domain.clone(), table.pairs()[i].image.clone()))
                    .collect(),
            });
        }
    }
    report.verdict = report.failures.is_empty();
    Ok((report, search))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::moebius::MoebiusMap;
    use crate::oracle::{make_finite_image_oracle, FnOracle, MoebiusOracle};
    use crate::point::AmbientDim;
    use crate::random::random_moebius;

    fn dim(n: usize) -> AmbientDim {
        AmbientDim::new(n).unwrap()
    }

    #[test]
    fn moebius_oracle_preserves_circles() {
        let tol = Tolerances::default();
        let n = dim(3);
        let m = random_moebius(n, 3, &mut rng(5));
        let circles = random_spheres(n, 1, 50, 9);
        let r = check_weakly_circle_preserving(&MoebiusOracle(m), &circles, 6, 1, &tol).unwrap();
        assert!(r.verdict);
        assert_eq!(r.spheres_tested, 50);
    }

    #[test]
    fn three_image_map_is_weakly_circle_preserving() {
        let tol = Tolerances::default();
        let n = dim(3);
        let imgs = [
            ExtendedPoint::finite(vec![0.0, 0.0, 0.0]),
            ExtendedPoint::finite(vec![1.0, 0.0, 0.0]),
            ExtendedPoint::finite(vec![0.0, 5.0, 1.0]),
        ];
        let o = make_finite_image_oracle(&imgs, 3, n).unwrap();
        let circles = random_spheres(n, 1, 30, 2);
        assert!(check_weakly_circle_preserving(&o, &circles, 6, 0, &tol).unwrap().verdict);
    }

    #[test]
    fn cubing_map_is_not_weakly_circle_preserving() {
        // Coordinatewise cube on R^2, infinity fixed. The unit circle's
        // samples map onto a curve whose 6 images span S^2 (rank 4).
        let tol = Tolerances::default();
        let n = dim(2);
        let cube = FnOracle::new(n, |p: &ExtendedPoint| match p {
            ExtendedPoint::Finite(x) => ExtendedPoint::Finite(x.iter().map(|c| c * c * c).collect()),
            ExtendedPoint::Infinity => ExtendedPoint::Infinity,
        });
        let unit = crate::sphere::span(
            &[[1.0, 0.0], [0.0, 1.0], [-1.0, 0.0]]
                .iter()
                .map(|c| SpherePoint::lift(&ExtendedPoint::finite(c.to_vec()), n).unwrap())
                .collect::<Vec<_>>(),
            &tol,
        )
        .unwrap();
        let r = check_weakly_circle_preserving(&cube, &[unit], 6, 0, &tol).unwrap();
        assert!(!r.verdict);
        assert_eq!(r.failures[0].image_dim, 2);
        assert_eq!(r.failures[0].witnesses.len(), 6);
    }

    #[test]
    fn table_oracle_skips_off_table_circles() {
        let tol = Tolerances::default();
        let n = dim(2);
        let table = crate::oracle::make_table(
            &MoebiusOracle(MoebiusMap::identity(n)),
            &[ExtendedPoint::finite(vec![0.0, 0.0])],
            &tol,
        )
        .unwrap();
        let circles = random_spheres(n, 1, 3, 0);
        let r = check_weakly_circle_preserving(&table, &circles, 4, 0, &tol).unwrap();
        assert_eq!((r.spheres_tested, r.skipped), (0, 3));
        assert!(r.image_dims.iter().all(Option::is_none));
    }

    #[test]
    fn rejects_too_few_samples() {
        let tol = Tolerances::default();
        let o = MoebiusOracle(MoebiusMap::identity(dim(3)));
        assert!(check_weakly_circle_preserving(&o, &[], 3, 0, &tol).is_err());
        assert!(check_weakly_sphere_preserving(&o, &[], 4, 0, &tol).is_err());
        assert!(check_k_sphere_collapse(&o, 3, 1, 0, &tol).is_err());
    }

    #[test]
    fn table_search_finds_planted_circle() {
        let tol = Tolerances::default();
        let n = dim(3);
        let circle = random_spheres(n, 1, 1, 4).remove(0);
        let mut domain: Vec<ExtendedPoint> = sample_sphere(&circle, 5, 1).iter().map(|p| p.project()).collect();
        let mut r = rng(8);
        domain.extend((0..6).map(|_| crate::random::random_point(n, &mut r).project()));
        let table = crate::oracle::make_table(&MoebiusOracle(MoebiusMap::identity(n)), &domain, &tol).unwrap();
        let (report, search) = check_table(&table, 1, 10, 6, &tol).unwrap();
        assert_eq!(search.spheres.len(), 1);
        assert_eq!(search.spheres[0].1, vec![0, 1, 2, 3, 4]);
        assert!(report.verdict);
    }
}
