//! JSON documents read and written by the command-line tool.
//!
//! Every document carries `version`, `kind` and `n`. Points are coordinate
//! arrays, or the string `"inf"` for the point at infinity. Unknown fields
//! are rejected.

use anyhow::{bail, Context, Result};
use geom_kit_core::analysis::{SphereSearch, WcpReport};
use geom_kit_core::{
    AmbientDim, ExtendedPoint, GpMode, GpReport, Hypothesis, KSphere, MapTable, MoebiusMap, RecoveryResult, TablePair,
    Tolerances,
};
use nalgebra::DMatrix;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

pub const VERSION: &str = "1";

pub const POINT_SET: &str = "point-set";
pub const MAP_TABLE: &str = "map-table";
pub const MOEBIUS_MAP: &str = "moebius-map";
pub const SPHERE: &str = "sphere";
pub const GP_REPORT: &str = "gp-report";
pub const CHECK_REPORT: &str = "check-report";
pub const RECOVERY_REPORT: &str = "recovery-report";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum WirePoint {
    Coords(Vec<f64>),
    Infinity(String),
}

impl From<&ExtendedPoint> for WirePoint {
    fn from(p: &ExtendedPoint) -> Self {
        match p {
            ExtendedPoint::Finite(x) => WirePoint::Coords(x.clone()),
            ExtendedPoint::Infinity => WirePoint::Infinity("inf".into()),
        }
    }
}

impl WirePoint {
    pub fn to_point(&self, n: AmbientDim) -> Result<ExtendedPoint> {
        let p = match self {
            WirePoint::Coords(x) => ExtendedPoint::Finite(x.clone()),
            WirePoint::Infinity(s) if s == "inf" => ExtendedPoint::Infinity,
            WirePoint::Infinity(s) => bail!("expected a coordinate array or \"inf\", found \"{s}\""),
        };
        p.validate(n)?;
        Ok(p)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PointSetDoc {
    pub version: String,
    pub kind: String,
    pub n: usize,
    pub points: Vec<WirePoint>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PairDoc {
    pub domain: WirePoint,
    pub image: WirePoint,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MapTableDoc {
    pub version: String,
    pub kind: String,
    pub n: usize,
    pub pairs: Vec<PairDoc>,
}

/// Lorentz matrix of the map, one array per row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MoebiusMapDoc {
    pub version: String,
    pub kind: String,
    pub n: usize,
    pub matrix: Vec<Vec<f64>>,
}

/// A k-sphere as an orthonormal basis of its subspace of `R^{n+1,1}`, one
/// array per basis vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SphereBody {
    pub dim: usize,
    pub basis: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SphereDoc {
    pub version: String,
    pub kind: String,
    pub n: usize,
    pub sphere: SphereBody,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GpWitnessDoc {
    pub sphere: SphereBody,
    /// Input indices (after duplicate merging) left out of the subset that
    /// fits on the sphere.
    pub excluded: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GpReportDoc {
    pub version: String,
    pub kind: String,
    pub n: usize,
    pub mode: String,
    pub verdict: bool,
    pub size: usize,
    pub merged_duplicates: usize,
    pub cardinality_ok: bool,
    pub margin: Option<f64>,
    pub witness: Option<GpWitnessDoc>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SphereFailureDoc {
    pub index: usize,
    pub image_dim: usize,
    pub sphere: SphereBody,
    pub witnesses: Vec<PairDoc>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CheckReportDoc {
    pub version: String,
    pub kind: String,
    pub n: usize,
    pub mode: String,
    pub verdict: bool,
    pub target_dim: usize,
    pub spheres_tested: usize,
    pub skipped: usize,
    pub subsets_examined: usize,
    pub cap_hit: bool,
    pub image_dims: Vec<Option<usize>>,
    pub failures: Vec<SphereFailureDoc>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RecoveryReportDoc {
    pub version: String,
    pub kind: String,
    pub n: usize,
    pub strategy: String,
    /// `recovered`, `hypotheses-not-satisfied` or `inconsistent`.
    pub outcome: String,
    pub max_residual: Option<f64>,
    pub hypothesis: Option<String>,
    pub detail: Option<String>,
    pub index: Option<usize>,
    pub residual: Option<f64>,
}

/// Parses a document, checking version, kind and dimension. serde_json
/// errors carry line and column.
pub fn parse<T: DeserializeOwned + Header>(text: &str, expected_kind: &str, what: &str) -> Result<T> {
    let doc: T = serde_json::from_str(text).with_context(|| format!("invalid {what} document"))?;
    if doc.version() != VERSION {
        bail!("unsupported {what} version \"{}\" (expected \"{VERSION}\")", doc.version());
    }
    if doc.kind() != expected_kind {
        bail!("field `kind`: expected \"{expected_kind}\", found \"{}\"", doc.kind());
    }
    AmbientDim::new(doc.n()).context("field `n`")?;
    Ok(doc)
}

pub fn to_json<T: Serialize>(doc: &T) -> String {
    let mut s = serde_json::to_string_pretty(doc).expect("documents serialize");
    s.push('\n');
    s
}

pub trait Header {
    fn version(&self) -> &str;
    fn kind(&self) -> &str;
    fn n(&self) -> usize;
}

macro_rules! header {
    ($($t:ty),*) => {$(
        impl Header for $t {
            fn version(&self) -> &str { &self.version }
            fn kind(&self) -> &str { &self.kind }
            fn n(&self) -> usize { self.n }
        }
    )*};
}

header!(PointSetDoc, MapTableDoc, MoebiusMapDoc, SphereDoc, GpReportDoc, CheckReportDoc, RecoveryReportDoc);

fn dim(n: usize) -> AmbientDim {
    AmbientDim::new(n).expect("validated on parse")
}

impl PointSetDoc {
    pub fn new(n: AmbientDim, points: &[ExtendedPoint]) -> Self {
        Self {
            version: VERSION.into(),
            kind: POINT_SET.into(),
            n: n.get(),
            points: points.iter().map(WirePoint::from).collect(),
        }
    }

    pub fn to_points(&self) -> Result<Vec<ExtendedPoint>> {
        let n = dim(self.n);
        self.points
            .iter()
            .enumerate()
            .map(|(i, p)| p.to_point(n).with_context(|| format!("points[{i}]")))
            .collect()
    }
}

impl MapTableDoc {
    pub fn new(table: &MapTable) -> Self {
        Self {
            version: VERSION.into(),
            kind: MAP_TABLE.into(),
            n: table.n().get(),
            pairs: table.pairs().iter().map(pair_doc).collect(),
        }
    }

    pub fn to_table(&self, tol: &Tolerances) -> Result<MapTable> {
        let n = dim(self.n);
        let pairs = self
            .pairs
            .iter()
            .enumerate()
            .map(|(i, p)| {
                Ok(TablePair {
                    domain: p.domain.to_point(n).with_context(|| format!("pairs[{i}].domain"))?,
                    image: p.image.to_point(n).with_context(|| format!("pairs[{i}].image"))?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(MapTable::new(n, pairs, tol)?)
    }
}

fn pair_doc(p: &TablePair) -> PairDoc {
    PairDoc {
        domain: (&p.domain).into(),
        image: (&p.image).into(),
    }
}

impl MoebiusMapDoc {
    pub fn new(map: &MoebiusMap) -> Self {
        let g = map.matrix();
        Self {
            version: VERSION.into(),
            kind: MOEBIUS_MAP.into(),
            n: map.n().get(),
            matrix: (0..g.nrows()).map(|r| g.row(r).iter().copied().collect()).collect(),
        }
    }

    pub fn to_map(&self, tol: &Tolerances) -> Result<MoebiusMap> {
        let d = self.n + 2;
        if self.matrix.len() != d || self.matrix.iter().any(|r| r.len() != d) {
            bail!("field `matrix`: expected {d} rows of {d} entries for n = {}", self.n);
        }
        let flat: Vec<f64> = self.matrix.iter().flatten().copied().collect();
        if flat.iter().any(|x| !x.is_finite()) {
            bail!("field `matrix`: entries must be finite");
        }
        Ok(MoebiusMap::from_matrix(DMatrix::from_row_slice(d, d, &flat), tol)?)
    }
}

impl SphereBody {
    pub fn new(s: &KSphere) -> Self {
        let b = s.basis();
        Self {
            dim: s.dim(),
            basis: (0..b.ncols()).map(|c| b.column(c).iter().copied().collect()).collect(),
        }
    }

    pub fn to_sphere(&self, n: AmbientDim, tol: &Tolerances) -> Result<KSphere> {
        let d = n.lorentz();
        if self.basis.is_empty() || self.basis.iter().any(|v| v.len() != d) {
            bail!("field `basis`: expected vectors of length {d}");
        }
        let cols: Vec<nalgebra::DVector<f64>> = self.basis.iter().map(|v| nalgebra::DVector::from_column_slice(v)).collect();
        let s = KSphere::from_subspace(&DMatrix::from_columns(&cols), tol)?;
        if s.dim() != self.dim {
            bail!("field `dim`: basis spans a {}-sphere, not a {}-sphere", s.dim(), self.dim);
        }
        Ok(s)
    }
}

impl SphereDoc {
    pub fn new(n: AmbientDim, s: &KSphere) -> Self {
        Self {
            version: VERSION.into(),
            kind: SPHERE.into(),
            n: n.get(),
            sphere: SphereBody::new(s),
        }
    }
}

pub fn mode_name(mode: GpMode) -> &'static str {
    match mode {
        GpMode::Circular => "circular",
        GpMode::Spherical => "spherical",
    }
}

impl GpReportDoc {
    pub fn new(n: AmbientDim, r: &GpReport, merged: usize) -> Self {
        Self {
            version: VERSION.into(),
            kind: GP_REPORT.into(),
            n: n.get(),
            mode: mode_name(r.mode).into(),
            verdict: r.verdict,
            size: r.size,
            merged_duplicates: merged,
            cardinality_ok: r.cardinality_ok,
            margin: r.margin,
            witness: r.witness.as_ref().map(|w| GpWitnessDoc {
                sphere: SphereBody::new(&w.sphere),
                excluded: w.excluded.clone(),
            }),
        }
    }
}

impl CheckReportDoc {
    pub fn new(n: AmbientDim, mode: &str, r: &WcpReport, search: &SphereSearch) -> Self {
        Self {
            version: VERSION.into(),
            kind: CHECK_REPORT.into(),
            n: n.get(),
            mode: mode.into(),
            verdict: r.verdict,
            target_dim: r.target_dim,
            spheres_tested: r.spheres_tested,
            skipped: r.skipped,
            subsets_examined: search.subsets_examined,
            cap_hit: search.cap_hit,
            image_dims: r.image_dims.clone(),
            failures: r
                .failures
                .iter()
                .map(|f| SphereFailureDoc {
                    index: f.index,
                    image_dim: f.image_dim,
                    sphere: SphereBody::new(&f.sphere),
                    witnesses: f
                        .witnesses
                        .iter()
                        .map(|(a, b)| PairDoc {
                            domain: a.into(),
                            image: b.into(),
                        })
                        .collect(),
                })
                .collect(),
        }
    }
}

fn hypothesis_detail(h: &Hypothesis) -> String {
    match h {
        Hypothesis::SphericalGeneralPosition(r) | Hypothesis::CircularGeneralPosition(r) => match &r.witness {
            Some(w) if !r.cardinality_ok => format!(
                "{} distinct image points, fewer than needed; all fit on one {}-sphere",
                r.size,
                w.sphere.dim()
            ),
            Some(w) => format!(
                "a {}-sphere contains all image points except {:?}",
                w.sphere.dim(),
                w.excluded
            ),
            None => String::new(),
        },
        Hypothesis::TwoSphereWitness {
            subsets_examined,
            cap_hit,
        } => format!(
            "no 2-sphere through table points has images in circular general position ({subsets_examined} subsets examined{})",
            if *cap_hit { ", search cap hit" } else { "" }
        ),
        Hypothesis::TooFewImages { distinct } => format!("{distinct} distinct images on the 2-sphere, at least 5 needed"),
        Hypothesis::ChainObstruction { k, new_image_points } => format!(
            "extending from a {k}-sphere: only {new_image_points} image point(s) off the current image sphere"
        ),
    }
}

impl RecoveryReportDoc {
    pub fn new(n: AmbientDim, strategy: &str, r: &RecoveryResult) -> Self {
        let mut doc = Self {
            version: VERSION.into(),
            kind: RECOVERY_REPORT.into(),
            n: n.get(),
            strategy: strategy.into(),
            outcome: String::new(),
            max_residual: None,
            hypothesis: None,
            detail: None,
            index: None,
            residual: None,
        };
        match r {
            RecoveryResult::Recovered { max_residual, .. } => {
                doc.outcome = "recovered".into();
                doc.max_residual = Some(*max_residual);
            }
            RecoveryResult::HypothesesNotSatisfied(h) => {
                doc.outcome = "hypotheses-not-satisfied".into();
                doc.hypothesis = Some(h.name().into());
                doc.detail = Some(hypothesis_detail(h));
            }
            RecoveryResult::Inconsistent { index, residual } => {
                doc.outcome = "inconsistent".into();
                doc.index = Some(*index);
                doc.residual = Some(*residual);
            }
        }
        doc
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn infinity_is_a_string() {
        let n = AmbientDim::new(2).unwrap();
        let doc = PointSetDoc::new(n, &[ExtendedPoint::Infinity, ExtendedPoint::finite(vec![0.5, -1.0])]);
        let text = serde_json::to_string(&doc).unwrap();
        assert_eq!(text, r#"{"version":"1","kind":"point-set","n":2,"points":["inf",[0.5,-1.0]]}"#);
        let back: PointSetDoc = parse(&text, POINT_SET, "point set").unwrap();
        assert_eq!(back, doc);
    }

    #[test]
    fn unknown_fields_report_a_position() {
        let text = "{\n  \"version\": \"1\",\n  \"kind\": \"point-set\",\n  \"n\": 2,\n  \"colour\": 3,\n  \"points\": []\n}";
        let err = format!("{:#}", parse::<PointSetDoc>(text, POINT_SET, "point set").unwrap_err());
        assert!(err.contains("unknown field `colour`"), "{err}");
        assert!(err.contains("line 5"), "{err}");
    }

    #[test]
    fn wrong_kind_and_version_are_rejected() {
        let text = r#"{"version":"1","kind":"map-table","n":2,"points":[]}"#;
        assert!(parse::<PointSetDoc>(text, POINT_SET, "point set").is_err());
        let text = r#"{"version":"2","kind":"point-set","n":2,"points":[]}"#;
        assert!(parse::<PointSetDoc>(text, POINT_SET, "point set").is_err());
    }

    #[test]
    fn bad_point_strings_and_dimensions() {
        let n = AmbientDim::new(2).unwrap();
        assert!(WirePoint::Infinity("infinity".into()).to_point(n).is_err());
        assert!(WirePoint::Coords(vec![1.0]).to_point(n).is_err());
    }

    #[test]
    fn map_and_sphere_documents_rebuild_their_values() {
        let tol = Tolerances::default();
        let n = AmbientDim::new(3).unwrap();
        let m = MoebiusMap::from_inversion(&[1.0, 0.0, 0.5], 1.5, n).unwrap();
        let text = to_json(&MoebiusMapDoc::new(&m));
        let back = parse::<MoebiusMapDoc>(&text, MOEBIUS_MAP, "map").unwrap().to_map(&tol).unwrap();
        assert_eq!(back.matrix(), m.matrix());

        let s = geom_kit_core::random::random_sphere(n, 2, &mut geom_kit_core::random::rng(3));
        let text = to_json(&SphereDoc::new(n, &s));
        let doc = parse::<SphereDoc>(&text, SPHERE, "sphere").unwrap();
        assert!(doc.sphere.to_sphere(n, &tol).unwrap().equals(&s, &tol));
    }
}
