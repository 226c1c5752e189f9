//! Inversive geometry on the n-sphere in the Lorentz light-cone model.
//!
//! Points of `S^n = R^n ∪ {∞}` are null rays of `R^{n+1,1}`, k-spheres are
//! Lorentzian subspaces of dimension `k + 2`, and Moebius transformations
//! are Lorentz matrices. On top of these primitives the crate provides
//! circular/spherical general-position predicates, sampled checks of weak
//! circle/sphere preservation for black-box maps, and recovery of a Moebius
//! map from a sample table.

pub mod analysis;
pub mod error;
pub mod general_position;
pub mod linalg;
pub mod moebius;
pub mod oracle;
pub mod point;
pub mod random;
pub mod recovery;
pub mod sphere;
pub mod tolerance;

pub use analysis::{
    check_k_sphere_collapse, check_table, check_weakly_circle_preserving, check_weakly_sphere_preserving,
    find_table_spheres, random_spheres, SphereFailure, SphereSearch, WcpReport,
};
pub use error::{Error, Result};
pub use general_position::{
    brute_force_gp_oracle, circular_general_position, general_position, spherical_general_position, GpMode,
    GpReport, GpWitness, PointSet,
};
pub use moebius::{fit_from_correspondences, fit_restriction, maps_agree, Correspondence, MoebiusMap};
pub use oracle::{
    make_finite_image_oracle, make_table, Composed, FiniteImageOracle, FnOracle, MapOracle, MapTable,
    MoebiusOracle, TablePair,
};
pub use point::{invert_in_sphere, lift, project, reflect_in_hyperplane, AmbientDim, ExtendedPoint, SpherePoint};
pub use recovery::{
    five_point_recover_s2, recover_moebius, verify_hypotheses, Hypothesis, HypothesisReport, RecoveryResult,
    Strategy, TwoSphereWitness,
};
pub use sphere::{contains, intersect, sample_sphere, span, sphere_dim, sphere_equals, Intersection, KSphere};
pub use tolerance::Tolerances;
