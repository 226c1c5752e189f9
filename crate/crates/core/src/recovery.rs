//! Recovery of a Moebius map from a sample table of a weakly
//! circle-preserving map.
//!
//! The hypotheses checked on the sample are: the image is in spherical
//! general position, and some 2-sphere through table points has images in
//! circular general position. When both hold, the `direct` strategy fits a
//! well-spread `(n+3)`-subset, and the `chain` strategy fits the map on the
//! witness 2-sphere and extends it one dimension at a time through a nested
//! chain `S_2 ⊂ S_3 ⊂ ... ⊂ S_n`. Either result is verified on every pair.

use nalgebra::DMatrix;
use rand::seq::index::sample;

use crate::error::{Error, Result};
use crate::general_position::{reduction, GpMode, GpReport, PointSet};
use crate::linalg::{lorentz_inner, residual_from_span};
use crate::moebius::{fit_lifted, fit_restriction, from_lorentz_unchecked, max_residual, MoebiusMap};
use crate::oracle::MapTable;
use crate::point::SpherePoint;
use crate::random::rng;
use crate::sphere::{span, KSphere};
use crate::tolerance::Tolerances;

/// Cap on 4-subsets examined while looking for a 2-sphere witness.
pub const WITNESS_SEARCH_CAP: usize = 100_000;

/// A 2-sphere through table points whose images are in circular general
/// position.
#[derive(Debug, Clone, PartialEq)]
pub struct TwoSphereWitness {
    pub sphere: KSphere,
    /// Indices of the table pairs whose domain point lies on the sphere.
    pub indices: Vec<usize>,
    pub image_gp: GpReport,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HypothesisReport {
    /// Distinct image points in the table.
    pub distinct_images: usize,
    pub spherical_gp: GpReport,
    pub two_sphere: Option<TwoSphereWitness>,
    pub subsets_examined: usize,
    /// Whether the table is small enough for every 4-subset to be examined.
    /// Larger tables enumerate the first `WITNESS_SEARCH_CAP` subsets in
    /// lexicographic order and then draw as many random ones.
    pub exhaustive: bool,
    pub cap_hit: bool,
}

impl HypothesisReport {
    pub fn satisfied(&self) -> bool {
        self.spherical_gp.verdict && self.two_sphere.is_some()
    }
}

/// Which hypothesis failed.
#[derive(Debug, Clone, PartialEq)]
pub enum Hypothesis {
    /// The image sample is not in spherical general position.
    SphericalGeneralPosition(GpReport),
    /// No 2-sphere with images in circular general position was found.
    TwoSphereWitness { subsets_examined: usize, cap_hit: bool },
    /// Fewer than five distinct images on the 2-sphere.
    TooFewImages { distinct: usize },
    /// Images on the 2-sphere are not in circular general position.
    CircularGeneralPosition(GpReport),
    /// The chain could not be extended at dimension `k`: only
    /// `new_image_points` images lie off the current image sphere.
    ChainObstruction { k: usize, new_image_points: usize },
}

impl Hypothesis {
    pub fn name(&self) -> &'static str {
        match self {
            Hypothesis::SphericalGeneralPosition(_) => "spherical-general-position",
            Hypothesis::TwoSphereWitness { .. } => "two-sphere-witness",
            Hypothesis::TooFewImages { .. } => "five-distinct-images",
            Hypothesis::CircularGeneralPosition(_) => "circular-general-position",
            Hypothesis::ChainObstruction { .. } => "chain-extension",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum RecoveryResult {
    Recovered { map: MoebiusMap, max_residual: f64 },
    HypothesesNotSatisfied(Hypothesis),
    /// The pair with the largest residual under the best available fit.
    Inconsistent { index: usize, residual: f64 },
}

impl RecoveryResult {
    pub fn is_recovered(&self) -> bool {
        matches!(self, RecoveryResult::Recovered { .. })
    }

    pub fn map(&self) -> Option<&MoebiusMap> {
        match self {
            RecoveryResult::Recovered { map, .. } => Some(map),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Strategy {
    Direct,
    Chain,
}

fn distinct(points: &[SpherePoint], table: &MapTable, tol: &Tolerances) -> Result<PointSet> {
    PointSet::new(points.to_vec(), table.n(), tol)
}

/// Looks at the 2-sphere spanned by the given domain indices; returns a
/// witness if its images are in circular general position.
fn try_witness(table: &MapTable, idx: &[usize], tol: &Tolerances) -> Result<Option<TwoSphereWitness>> {
    let dom = table.domain_points();
    let subset: Vec<SpherePoint> = idx.iter().map(|&i| dom[i].clone()).collect();
    let sphere = match span(&subset, tol) {
        Ok(s) if s.dim() == 2 => s,
        _ => return Ok(None),
    };
    let on: Vec<usize> = (0..dom.len()).filter(|&i| sphere.contains(&dom[i], tol)).collect();
    if on.len() < 5 {
        return Ok(None);
    }
    let images: Vec<SpherePoint> = on.iter().map(|&i| table.image_points()[i].clone()).collect();
    let set = distinct(&images, table, tol)?;
    if set.len() < 5 {
        return Ok(None);
    }
    let gp = reduction(set.points(), table.n(), GpMode::Circular, tol)?;
    Ok(gp.verdict.then_some(TwoSphereWitness {
        sphere,
        indices: on,
        image_gp: gp,
    }))
}

fn binomial(n: usize, k: usize) -> Option<usize> {
    let mut acc: usize = 1;
    for i in 0..k.min(n.saturating_sub(k)) {
        acc = acc.checked_mul(n - i)? / (i + 1);
    }
    Some(if k > n { 0 } else { acc })
}

/// Checks the recovery hypotheses on a table.
pub fn verify_hypotheses(table: &MapTable, tol: &Tolerances) -> Result<HypothesisReport> {
    tol.validate()?;
    let (distinct_images, spherical_gp) = image_gp(table, tol)?;
    let (two_sphere, subsets_examined, exhaustive) = search_witness(table, tol)?;
    Ok(HypothesisReport {
        distinct_images,
        spherical_gp,
        cap_hit: !exhaustive && two_sphere.is_none(),
        two_sphere,
        subsets_examined,
        exhaustive,
    })
}

fn image_gp(table: &MapTable, tol: &Tolerances) -> Result<(usize, GpReport)> {
    let images = distinct(table.image_points(), table, tol)?;
    let gp = reduction(images.points(), table.n(), GpMode::Spherical, tol)?;
    Ok((images.len(), gp))
}

fn search_witness(table: &MapTable, tol: &Tolerances) -> Result<(Option<TwoSphereWitness>, usize, bool)> {
    let m = table.len();
    let total = binomial(m, 4).unwrap_or(usize::MAX);
    let exhaustive = total <= WITNESS_SEARCH_CAP;
    let mut examined = 0;
    let mut two_sphere = None;
    if m >= 5 {
        // Lexicographic enumeration up to the cap, then random 4-subsets.
        let mut idx = [0usize, 1, 2, 3];
        'enumerate: while examined < WITNESS_SEARCH_CAP {
            examined += 1;
            if let Some(w) = try_witness(table, &idx, tol)? {
                two_sphere = Some(w);
                break;
            }
            let mut i = 4;
            loop {
                if i == 0 {
                    break 'enumerate;
                }
                i -= 1;
                if idx[i] < m - 4 + i {
                    idx[i] += 1;
                    for j in i + 1..4 {
                        idx[j] = idx[j - 1] + 1;
                    }
                    break;
                }
            }
        }
        if two_sphere.is_none() && !exhaustive {
            let mut r = rng(m as u64);
            for _ in 0..WITNESS_SEARCH_CAP {
                examined += 1;
                let mut idx = sample(&mut r, m, 4).into_vec();
                idx.sort_unstable();
                if let Some(w) = try_witness(table, &idx, tol)? {
                    two_sphere = Some(w);
                    break;
                }
            }
        }
    }
    Ok((two_sphere, examined, exhaustive))
}

/// Greedy farthest-point ordering of the indices in `pool`, starting from
/// the point farthest from the pool's mean ray.
fn spread_order(points: &[SpherePoint], pool: &[usize]) -> Vec<usize> {
    if pool.is_empty() {
        return Vec::new();
    }
    let d = points[pool[0]].vector().len();
    let mut mean = nalgebra::DVector::zeros(d);
    for &i in pool {
        mean += points[i].vector();
    }
    mean /= pool.len() as f64;
    let start = *pool
        .iter()
        .max_by(|&&a, &&b| {
            (points[a].vector() - &mean)
                .norm()
                .total_cmp(&(points[b].vector() - &mean).norm())
        })
        .expect("nonempty");
    let mut order = vec![start];
    let mut nearest: Vec<f64> = pool.iter().map(|&i| points[i].distance(&points[start])).collect();
    while order.len() < pool.len() {
        let (pos, _) = nearest
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .expect("nonempty");
        let next = pool[pos];
        order.push(next);
        for (j, &i) in pool.iter().enumerate() {
            nearest[j] = nearest[j].min(points[i].distance(&points[next]));
        }
    }
    order
}

/// Fits on a well-spread subset of `pool`: the shortest prefix of the
/// spread ordering (at least `n + 3` long) whose domain and image points are
/// both in spherical general position.
fn fit_spread_subset(table: &MapTable, pool: &[usize], tol: &Tolerances) -> Result<(MoebiusMap, Vec<usize>)> {
    let n = table.n();
    let order = spread_order(table.domain_points(), pool);
    let need = n.get() + 3;
    let mut ill = None;
    for len in need..=order.len() {
        let chosen = &order[..len];
        let src: Vec<SpherePoint> = chosen.iter().map(|&i| table.domain_points()[i].clone()).collect();
        let dst: Vec<SpherePoint> = chosen.iter().map(|&i| table.image_points()[i].clone()).collect();
        if !reduction(&src, n, GpMode::Spherical, tol)?.verdict || !reduction(&dst, n, GpMode::Spherical, tol)?.verdict {
            continue;
        }
        return match fit_lifted(&src, &dst, n, tol) {
            Ok(m) => Ok((m, chosen.to_vec())),
            Err(Error::Inconsistent { index, residual }) => Err(Error::Inconsistent {
                index: chosen[index],
                residual,
            }),
            // A nearly degenerate prefix; more points sharpen the fit.
            Err(e @ Error::IllConditioned { .. }) => {
                ill = Some(e);
                continue;
            }
            Err(e) => Err(e),
        };
    }
    Err(ill.unwrap_or_else(|| Error::InsufficientData {
        reason: "no subset of the table has domain and image points in spherical general position".into(),
    }))
}

fn verify_all(table: &MapTable, map: MoebiusMap, tol: &Tolerances) -> RecoveryResult {
    let (index, residual) = max_residual(&map, table.domain_points(), table.image_points());
    if table.is_empty() || residual <= tol.verify {
        RecoveryResult::Recovered {
            map,
            max_residual: residual.max(0.0),
        }
    } else {
        RecoveryResult::Inconsistent { index, residual }
    }
}

fn recover_direct(table: &MapTable, tol: &Tolerances) -> Result<RecoveryResult> {
    let all: Vec<usize> = (0..table.len()).collect();
    let first = fit_spread_subset(table, &all, tol);
    let (used, first_outcome) = match first {
        Ok((map, used)) => {
            let outcome = verify_all(table, map, tol);
            if outcome.is_recovered() {
                return Ok(outcome);
            }
            (used, outcome)
        }
        Err(Error::Inconsistent { index, residual }) => {
            let order = spread_order(table.domain_points(), &all);
            let used = order[..table.n().get() + 3].to_vec();
            (used, RecoveryResult::Inconsistent { index, residual })
        }
        Err(e) => return Err(e),
    };
    // Attribute the failure with a second, disjoint subset: a single bad pair
    // cannot spoil both fits.
    let rest: Vec<usize> = all.into_iter().filter(|i| !used.contains(i)).collect();
    if let Ok((map, _)) = fit_spread_subset(table, &rest, tol) {
        let second = verify_all(table, map, tol);
        if second.is_recovered() {
            return Ok(second);
        }
        if let RecoveryResult::Inconsistent { .. } = second {
            return Ok(second);
        }
    }
    Ok(first_outcome)
}

/// Lorentz-orthogonal projection onto a Lorentzian subspace.
fn lorentz_project(sphere_basis: &DMatrix<f64>, gram_inv: &DMatrix<f64>, v: &nalgebra::DVector<f64>) -> nalgebra::DVector<f64> {
    let mut jv = v.clone();
    let last = jv.len() - 1;
    jv[last] = -jv[last];
    sphere_basis * (gram_inv * (sphere_basis.transpose() * jv))
}

/// Composes `map` with a reflection fixing the image sphere `image` so that
/// the domain point `x` goes to `target`.
fn extend_through(map: &MoebiusMap, image: &KSphere, x: &SpherePoint, target: &SpherePoint) -> Option<MoebiusMap> {
    let basis = image.basis();
    let gram_inv = image.gram().clone().try_inverse()?;
    let y = map.matrix() * x.vector();
    let t = target.vector();
    let y_in = lorentz_project(basis, &gram_inv, &y);
    let t_in = lorentz_project(basis, &gram_inv, t);
    let scale = y_in.dot(&t_in) / t_in.norm_squared();
    if !(scale > 0.0) {
        return None;
    }
    let b = &y - &y_in;
    let c = (t - &t_in) * scale;
    let qb = lorentz_inner(&b, &b);
    let qc = lorentz_inner(&c, &c);
    if !(qb > 0.0 && qc > 0.0) {
        return None;
    }
    let s = &b / qb.sqrt() - &c / qc.sqrt();
    let d = s.len();
    let reflection = if lorentz_inner(&s, &s) <= 1e-24 {
        DMatrix::identity(d, d)
    } else {
        let q = lorentz_inner(&s, &s);
        let mut js = s.clone();
        js[d - 1] = -js[d - 1];
        DMatrix::identity(d, d) - (&s * js.transpose()) * (2.0 / q)
    };
    Some(from_lorentz_unchecked(reflection * map.matrix(), map.n()))
}

fn recover_chain(table: &MapTable, witness: &TwoSphereWitness, tol: &Tolerances) -> Result<RecoveryResult> {
    let base = five_point_on(table, &witness.indices, tol)?;
    let mut map = match base {
        RecoveryResult::Recovered { map, .. } => map,
        other => return Ok(other),
    };
    let n = table.n().get();
    let dom = table.domain_points();
    let img = table.image_points();
    let mut sphere = witness.sphere.clone();
    for k in 2..n {
        let image_sphere = map.apply_to_sphere(&sphere, tol)?;
        let candidates: Vec<(usize, f64)> = (0..table.len())
            .filter(|&i| !sphere.contains(&dom[i], tol))
            .map(|i| (i, residual_from_span(image_sphere.basis(), img[i].vector())))
            .filter(|&(_, r)| r > tol.member)
            .collect();
        let new_images = distinct(
            &candidates.iter().map(|&(i, _)| img[i].clone()).collect::<Vec<_>>(),
            table,
            tol,
        )?
        .len();
        if new_images < 2 {
            return Ok(RecoveryResult::HypothesesNotSatisfied(Hypothesis::ChainObstruction {
                k,
                new_image_points: new_images,
            }));
        }
        let &(best, _) = candidates
            .iter()
            .max_by(|a, b| a.1.total_cmp(&b.1))
            .expect("nonempty");
        let Some(extended) = extend_through(&map, &image_sphere, &dom[best], &img[best]) else {
            let (_, residual) = max_residual(&map, &dom[best..=best], &img[best..=best]);
            return Ok(RecoveryResult::Inconsistent { index: best, residual });
        };
        map = extended;
        let cols = sphere.basis().ncols();
        let mut vectors = sphere.basis().clone().insert_column(cols, 0.0);
        let last = vectors.ncols() - 1;
        vectors.column_mut(last).copy_from(dom[best].vector());
        sphere = KSphere::from_subspace(&vectors, tol)?;
    }
    // Every table pair lies on the last sphere; refit on all of them, which
    // removes the error carried through the one-point extensions.
    if n > 2 {
        match fit_lifted(dom, img, table.n(), tol) {
            Ok(refit) => map = refit,
            Err(Error::Inconsistent { index, residual }) => return Ok(RecoveryResult::Inconsistent { index, residual }),
            Err(e) => return Err(e),
        }
    }
    Ok(verify_all(table, map, tol))
}

/// Recovers a Moebius map from a sample table.
pub fn recover_moebius(table: &MapTable, strategy: Strategy, tol: &Tolerances) -> Result<RecoveryResult> {
    tol.validate()?;
    if table.is_empty() {
        return Err(Error::InsufficientData {
            reason: "empty table".into(),
        });
    }
    let (_, gp) = image_gp(table, tol)?;
    if !gp.verdict {
        return Ok(RecoveryResult::HypothesesNotSatisfied(Hypothesis::SphericalGeneralPosition(gp)));
    }
    let (witness, subsets_examined, exhaustive) = search_witness(table, tol)?;
    let Some(witness) = witness else {
        return Ok(RecoveryResult::HypothesesNotSatisfied(Hypothesis::TwoSphereWitness {
            subsets_examined,
            cap_hit: !exhaustive,
        }));
    };
    match strategy {
        Strategy::Direct => recover_direct(table, tol),
        Strategy::Chain => recover_chain(table, &witness, tol),
    }
}

/// Five-point regime on the given table indices, which must lie on one
/// 2-sphere.
fn five_point_on(table: &MapTable, indices: &[usize], tol: &Tolerances) -> Result<RecoveryResult> {
    let dom: Vec<SpherePoint> = indices.iter().map(|&i| table.domain_points()[i].clone()).collect();
    let img: Vec<SpherePoint> = indices.iter().map(|&i| table.image_points()[i].clone()).collect();
    let domain_sphere = span(&dom, tol)?;
    if domain_sphere.dim() != 2 {
        return Err(Error::InvalidInput(format!(
            "domain points span a {}-sphere, not a 2-sphere",
            domain_sphere.dim()
        )));
    }
    let images = distinct(&img, table, tol)?;
    if images.len() < 5 {
        return Ok(RecoveryResult::HypothesesNotSatisfied(Hypothesis::TooFewImages {
            distinct: images.len(),
        }));
    }
    let gp = reduction(images.points(), table.n(), GpMode::Circular, tol)?;
    if !gp.verdict {
        return Ok(RecoveryResult::HypothesesNotSatisfied(Hypothesis::CircularGeneralPosition(gp)));
    }
    let image_sphere = span(images.points(), tol)?;
    if image_sphere.dim() != 2 {
        // Images of a 2-sphere under a Moebius map lie on a 2-sphere; report
        // the image farthest from the sphere through the first four.
        let through = span(&images.points()[..4], tol)?;
        let (pos, residual) = img
            .iter()
            .map(|p| through.residual(p))
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(&b.1))
            .expect("nonempty");
        return Ok(RecoveryResult::Inconsistent {
            index: indices[pos],
            residual,
        });
    }
    match fit_restriction(&dom, &img, &domain_sphere, &image_sphere, tol) {
        Ok(map) => {
            let (_, residual) = max_residual(&map, &dom, &img);
            Ok(RecoveryResult::Recovered {
                map,
                max_residual: residual,
            })
        }
        Err(Error::Inconsistent { index, residual }) => Ok(RecoveryResult::Inconsistent {
            index: indices[index],
            residual,
        }),
        Err(e) => Err(e),
    }
}

/// Fits a table whose domain lies on one 2-sphere. The returned map agrees
/// with the table on that 2-sphere; its action off the sphere is one
/// arbitrary Moebius extension.
pub fn five_point_recover_s2(table: &MapTable, tol: &Tolerances) -> Result<RecoveryResult> {
    tol.validate()?;
    let all: Vec<usize> = (0..table.len()).collect();
    five_point_on(table, &all, tol)
}
