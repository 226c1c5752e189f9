//! Command-line front end: argument parsing and the subcommands, kept in a
//! library so they can be driven without spawning the binary.

pub mod wire;

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use geom_kit_core::random::{random_finite, random_moebius_bounded, random_point, rng, structured_domain};
use geom_kit_core::{
    check_table, general_position, make_finite_image_oracle, make_table, recover_moebius, AmbientDim, ExtendedPoint,
    GpMode, MoebiusOracle, PointSet, RecoveryResult, Strategy, Tolerances,
};
use rand::Rng;

use wire::*;

/// Largest Lorentz-matrix norm of generated Moebius maps.
pub const GENERATED_MAP_MAX_NORM: f64 = 1e3;

#[derive(Debug, Parser)]
#[command(name = "geom-kit", version, about = "Moebius geometry toolkit: general position, sphere preservation, map recovery")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct GlobalArgs {
    /// Ambient dimension; checked against input files when given.
    #[arg(long, global = true)]
    pub n: Option<usize>,
    /// Random seed.
    #[arg(long, global = true, env = "GEOM_KIT_SEED", default_value_t = 0)]
    pub seed: u64,
    /// Verification tolerance (relative).
    #[arg(long, global = true)]
    pub tol: Option<f64>,
    /// Output file; standard output when absent.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Circular or spherical general position of a point set.
    GpCheck {
        input: PathBuf,
        #[arg(long, value_enum, default_value_t = ModeArg::Spherical)]
        mode: ModeArg,
    },
    /// Weak circle preservation on the circles through table points.
    WcpCheck(CheckArgs),
    /// Weak sphere preservation on the (n-1)-spheres through table points.
    WspCheck(CheckArgs),
    /// Recover a Moebius map from a table.
    Recover {
        input: PathBuf,
        #[arg(long, value_enum, default_value_t = StrategyArg::Direct)]
        strategy: StrategyArg,
    },
    /// Apply a Moebius map to a point set.
    Apply {
        #[arg(long)]
        map: PathBuf,
        #[arg(long)]
        points: PathBuf,
    },
    /// Generate test data.
    Generate {
        #[arg(value_enum)]
        kind: GenerateKind,
        #[arg(long, default_value_t = 40)]
        count: usize,
        /// Number of distinct images (finite-image-table).
        #[arg(long, default_value_t = 3)]
        images: usize,
        /// Number of inversions/reflections composed (moebius-table).
        #[arg(long, default_value_t = 3)]
        generators: usize,
    },
}

#[derive(Debug, Args)]
pub struct CheckArgs {
    pub input: PathBuf,
    /// Maximum number of spheres tested.
    #[arg(long, default_value_t = 20)]
    pub circles: usize,
    /// Table points used per sphere.
    #[arg(long, default_value_t = 6)]
    pub samples: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Circular,
    Spherical,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum StrategyArg {
    Direct,
    Chain,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum GenerateKind {
    MoebiusTable,
    FiniteImageTable,
    GpSet,
}

pub const EXIT_PASS: u8 = 0;
pub const EXIT_FAIL: u8 = 1;
pub const EXIT_INPUT: u8 = 2;

/// Result of a successful invocation: the document to write, the exit code
/// its verdict implies, and a one-line summary for standard error.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub code: u8,
    pub document: String,
    pub summary: String,
}

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))
}

fn tolerances(global: &GlobalArgs) -> Result<Tolerances> {
    let tol = match global.tol {
        Some(t) => Tolerances::default().with_verify(t),
        None => Tolerances::default(),
    };
    tol.validate().context("--tol")?;
    Ok(tol)
}

fn check_n(global: &GlobalArgs, found: usize, path: &Path) -> Result<()> {
    match global.n {
        Some(n) if n != found => bail!("{}: n = {found}, but --n {n} was given", path.display()),
        _ => Ok(()),
    }
}

fn required_n(global: &GlobalArgs) -> Result<AmbientDim> {
    let n = global.n.context("--n is required")?;
    Ok(AmbientDim::new(n)?)
}

/// Runs one command. Errors are input errors (exit code 2).
pub fn run(cli: &Cli) -> Result<Outcome> {
    let g = &cli.global;
    let tol = tolerances(g)?;
    match &cli.command {
        Command::GpCheck { input, mode } => gp_check(g, input, *mode, &tol),
        Command::WcpCheck(args) => table_check(g, args, false, &tol),
        Command::WspCheck(args) => table_check(g, args, true, &tol),
        Command::Recover { input, strategy } => recover(g, input, *strategy, &tol),
        Command::Apply { map, points } => apply(g, map, points, &tol),
        Command::Generate {
            kind,
            count,
            images,
            generators,
        } => generate(g, *kind, *count, *images, *generators, &tol),
    }
}

fn verdict_code(pass: bool) -> u8 {
    if pass {
        EXIT_PASS
    } else {
        EXIT_FAIL
    }
}

fn gp_check(g: &GlobalArgs, input: &Path, mode: ModeArg, tol: &Tolerances) -> Result<Outcome> {
    let doc: PointSetDoc = parse(&read(input)?, POINT_SET, "point set")?;
    check_n(g, doc.n, input)?;
    let n = AmbientDim::new(doc.n)?;
    let set = PointSet::from_extended(&doc.to_points()?, n, tol)?;
    let mode = match mode {
        ModeArg::Circular => GpMode::Circular,
        ModeArg::Spherical => GpMode::Spherical,
    };
    let report = general_position(&set, mode, tol)?;
    let summary = format!(
        "{} general position: {} ({} distinct points)",
        mode_name(mode),
        if report.verdict { "holds" } else { "fails" },
        report.size
    );
    Ok(Outcome {
        code: verdict_code(report.verdict),
        document: to_json(&GpReportDoc::new(n, &report, set.merged())),
        summary,
    })
}

fn table_check(g: &GlobalArgs, args: &CheckArgs, spheres: bool, tol: &Tolerances) -> Result<Outcome> {
    let doc: MapTableDoc = parse(&read(&args.input)?, MAP_TABLE, "map table")?;
    check_n(g, doc.n, &args.input)?;
    let table = doc.to_table(tol)?;
    let n = table.n();
    let (mode, dim) = if spheres { ("wsp", n.get() - 1) } else { ("wcp", 1) };
    if dim == 0 {
        bail!("wsp-check needs n >= 2");
    }
    let (report, search) = check_table(&table, dim, args.circles, args.samples, tol)?;
    let summary = format!(
        "{mode}: {} on {} tested {dim}-sphere(s)",
        if report.verdict { "pass" } else { "fail" },
        report.spheres_tested
    );
    Ok(Outcome {
        code: verdict_code(report.verdict),
        document: to_json(&CheckReportDoc::new(n, mode, &report, &search)),
        summary,
    })
}

fn recover(g: &GlobalArgs, input: &Path, strategy: StrategyArg, tol: &Tolerances) -> Result<Outcome> {
    let doc: MapTableDoc = parse(&read(input)?, MAP_TABLE, "map table")?;
    check_n(g, doc.n, input)?;
    let table = doc.to_table(tol)?;
    let (name, strategy) = match strategy {
        StrategyArg::Direct => ("direct", Strategy::Direct),
        StrategyArg::Chain => ("chain", Strategy::Chain),
    };
    let result = recover_moebius(&table, strategy, tol)?;
    Ok(match &result {
        RecoveryResult::Recovered { map, max_residual } => Outcome {
            code: EXIT_PASS,
            document: to_json(&MoebiusMapDoc::new(map)),
            summary: format!("recovered ({name}), max residual {max_residual:e}"),
        },
        other => {
            let report = RecoveryReportDoc::new(table.n(), name, other);
            let summary = match (&report.hypothesis, report.index) {
                (Some(h), _) => format!("hypothesis not satisfied: {h}"),
                (None, Some(i)) => format!("inconsistent: pair {i} has residual {:e}", report.residual.unwrap_or(0.0)),
                _ => report.outcome.clone(),
            };
            Outcome {
                code: EXIT_FAIL,
                document: to_json(&report),
                summary,
            }
        }
    })
}

fn apply(g: &GlobalArgs, map_path: &Path, points_path: &Path, tol: &Tolerances) -> Result<Outcome> {
    let map_doc: MoebiusMapDoc = parse(&read(map_path)?, MOEBIUS_MAP, "map")?;
    let pts_doc: PointSetDoc = parse(&read(points_path)?, POINT_SET, "point set")?;
    check_n(g, map_doc.n, map_path)?;
    if map_doc.n != pts_doc.n {
        bail!("dimension mismatch: map has n = {}, points have n = {}", map_doc.n, pts_doc.n);
    }
    let map = map_doc.to_map(tol)?;
    let images = pts_doc
        .to_points()?
        .iter()
        .map(|p| map.apply(p))
        .collect::<geom_kit_core::Result<Vec<_>>>()?;
    Ok(Outcome {
        code: EXIT_PASS,
        document: to_json(&PointSetDoc::new(map.n(), &images)),
        summary: format!("{} point(s) mapped", images.len()),
    })
}

fn generate(
    g: &GlobalArgs,
    kind: GenerateKind,
    count: usize,
    images: usize,
    generators: usize,
    tol: &Tolerances,
) -> Result<Outcome> {
    let n = required_n(g)?;
    let seed = g.seed;
    match kind {
        GenerateKind::GpSet => {
            if count < n.get() + 3 {
                bail!(
                    "a set in spherical general position in S^{n} has at least n + 3 = {} points; --count {count} is too small",
                    n.get() + 3
                );
            }
            let mut r = rng(seed);
            let points = loop {
                let pts: Vec<ExtendedPoint> = (0..count).map(|_| random_point(n, &mut r).project()).collect();
                let set = PointSet::from_extended(&pts, n, tol)?;
                if set.len() == count && general_position(&set, GpMode::Spherical, tol)?.verdict {
                    break pts;
                }
            };
            Ok(Outcome {
                code: EXIT_PASS,
                document: to_json(&PointSetDoc::new(n, &points)),
                summary: format!("{count} points in spherical general position"),
            })
        }
        GenerateKind::MoebiusTable => {
            let map = random_moebius_bounded(n, generators, GENERATED_MAP_MAX_NORM, &mut rng(seed));
            let domain: Vec<ExtendedPoint> = structured_domain(n, count, seed).iter().map(|p| p.project()).collect();
            let table = make_table(&MoebiusOracle(map), &domain, tol)?;
            if !recover_moebius(&table, Strategy::Direct, tol)?.is_recovered() {
                bail!("a table of {count} points does not determine the map; increase --count");
            }
            Ok(Outcome {
                code: EXIT_PASS,
                document: to_json(&MapTableDoc::new(&table)),
                summary: format!("{count} samples of a Moebius map"),
            })
        }
        GenerateKind::FiniteImageTable => {
            if images == 0 {
                bail!("--images must be at least 1");
            }
            let mut r = rng(seed);
            let targets: Vec<ExtendedPoint> = (0..images).map(|_| random_finite(n, &mut r)).collect();
            let oracle = make_finite_image_oracle(&targets, r.random(), n)?;
            let domain: Vec<ExtendedPoint> = structured_domain(n, count, seed).iter().map(|p| p.project()).collect();
            let table = make_table(&oracle, &domain, tol)?;
            let mut summary = format!("{count} samples of a map with {images} image point(s)");
            if !oracle.sphere_preserving_by_construction() {
                summary.push_str("; more than n + 1 images, so weak sphere preservation is not guaranteed");
            }
            Ok(Outcome {
                code: EXIT_PASS,
                document: to_json(&MapTableDoc::new(&table)),
                summary,
            })
        }
    }
}
