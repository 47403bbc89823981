//! Command-line front end.
//!
//! Exit codes: 0 when every verdict passes, 1 when a mathematical verdict is
//! negative, 2 for usage and I/O errors.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::bounds::{
    bounds_report, default_sweep, demo_bounded_creators, demo_bounded_l, demo_functional, demo_unbounded_squeezing,
    GrowthVerdict,
};
use crate::catalog;
use crate::deform::{discrete_monotone, q_fock_recursive, q_fock_with, DeformationFamily};
use crate::error::{Error, Result};
use crate::interacting::{space_from_squeezing, InteractingSpace};
use crate::io::{self, FamilyFile, JsonVector, MomentsFile, SpaceFile, Table};
use crate::onemode::onemode_report;
use crate::opalg::{opalg_report, SpanKind};
use crate::par::Exec;
use crate::subproduct::{self, certify, pi_space, two_sided_test};
use crate::tensor::TruncatedFockSpace;
use crate::Tolerances;

pub const DEFAULT_SEED: u64 = 20_240_917;

#[derive(Debug, Parser)]
#[command(name = "fockbench", version, about = "Truncated interacting Fock spaces at desk scale")]
pub struct Cli {
    #[command(flatten)]
    pub global: Global,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct Global {
    /// Relative positivity floor.
    #[arg(long, global = true, default_value_t = 1e-10)]
    pub psd: f64,
    /// Relative rank cutoff.
    #[arg(long, global = true, default_value_t = 1e-10)]
    pub rank: f64,
    /// Relative residual tolerance.
    #[arg(long, global = true, default_value_t = 1e-9)]
    pub residual: f64,
    /// Run on one thread.
    #[arg(long, global = true)]
    pub sequential: bool,
}

impl Global {
    fn tolerances(&self) -> Result<Tolerances> {
        for (name, v) in [("psd", self.psd), ("rank", self.rank), ("residual", self.residual)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Invalid(format!("--{name} must be positive")));
            }
        }
        Ok(Tolerances {
            psd: self.psd,
            rank: self.rank,
            residual: self.residual,
        })
    }

    fn exec(&self) -> Exec {
        if self.sequential {
            Exec::Sequential
        } else {
            Exec::Parallel
        }
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write a deformation (or squeezing) family.
    Deform(DeformArgs),
    /// Check positivity and the kernel condition of a deformation family.
    Validate(InputReport),
    /// Build a space from a deformation, squeezing or projection family.
    Build(BuildArgs),
    /// Residual report for a built space.
    Verify(InputReport),
    /// Jacobi parameters from a moment sequence, with round trip.
    Onemode(OnemodeArgs),
    /// Per-level creator constants for one probe vector.
    Bounds(BoundsArgs),
    /// Growth demonstrations.
    Demo(DemoArgs),
    /// Projection families.
    #[command(subcommand)]
    Subproduct(SubproductCommand),
    /// Spans of creation/annihilation words.
    Opalg(OpalgArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum DeformKind {
    Q,
    Monotone,
    /// Re-read a family file and rewrite it normalized.
    File,
    Cptex,
    /// The unbounded squeezing on `Ω ⊕ H ⊕ Ω₂` (writes a squeezing).
    Kappaunb,
    /// Its three-level extension (writes a squeezing).
    Extension,
}

#[derive(Debug, Args)]
pub struct DeformArgs {
    #[arg(long, value_enum)]
    pub kind: DeformKind,
    #[arg(short = 'q', long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub q: f64,
    #[arg(short = 'd', long, default_value_t = 2)]
    pub dim: usize,
    #[arg(short = 'N', long = "cutoff", default_value_t = 4)]
    pub cutoff: usize,
    /// Use the recursive q-Fock construction.
    #[arg(long)]
    pub recursive: bool,
    /// Input for `--kind file`.
    #[arg(long)]
    pub input: Option<PathBuf>,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct InputReport {
    pub input: PathBuf,
    #[arg(long)]
    pub report: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct BuildArgs {
    pub input: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct OnemodeArgs {
    #[arg(long)]
    pub moments: PathBuf,
    #[arg(short = 'N', long = "cutoff")]
    pub cutoff: Option<usize>,
    #[arg(long)]
    pub report: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct BoundsArgs {
    pub input: PathBuf,
    #[arg(long)]
    pub x: PathBuf,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    #[arg(long)]
    pub report: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DemoName {
    BoundedL,
    BoundedCreators,
    UnboundedSqueezing,
    Functional,
}

impl std::str::FromStr for DemoName {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "bLunbex" => Ok(DemoName::BoundedL),
            "bA*unbL" | "bAunbL" => Ok(DemoName::BoundedCreators),
            "kappaunb" => Ok(DemoName::UnboundedSqueezing),
            "phicb" => Ok(DemoName::Functional),
            _ => Err(format!("unknown demo {s:?}; expected bLunbex, bA*unbL, kappaunb or phicb")),
        }
    }
}

#[derive(Debug, Args)]
pub struct DemoArgs {
    /// bLunbex | bA*unbL | kappaunb | phicb
    pub name: DemoName,
    /// Largest grid (bLunbex), block count (bA*unbL) or term count (kappaunb).
    #[arg(long)]
    pub param: Option<usize>,
    /// Basis size for phicb.
    #[arg(long, default_value_t = 50)]
    pub basis: usize,
    #[arg(long, default_value_t = 1000)]
    pub samples: usize,
    #[arg(long, default_value_t = 100.0)]
    pub max_entry: f64,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    #[arg(long)]
    pub csv: Option<PathBuf>,
    #[arg(long)]
    pub report: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ExampleKind {
    Full,
    Symmetrizer,
    Diagonal,
}

#[derive(Debug, Subcommand)]
pub enum SubproductCommand {
    /// Certify the adjacent and pairwise projection inequalities.
    Certify(InputReport),
    /// Build the space with `L = π`.
    Build(BuildArgs),
    /// Seeded random family satisfying both adjacent chains.
    Generate {
        #[arg(short = 'd', long, default_value_t = 2)]
        dim: usize,
        #[arg(short = 'N', long = "cutoff", default_value_t = 4)]
        cutoff: usize,
        #[arg(long, value_delimiter = ',')]
        ranks: Option<Vec<usize>>,
        #[arg(long, default_value_t = DEFAULT_SEED)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Named example family.
    Example {
        #[arg(value_enum)]
        kind: ExampleKind,
        #[arg(short = 'd', long, default_value_t = 2)]
        dim: usize,
        #[arg(short = 'N', long = "cutoff", default_value_t = 4)]
        cutoff: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Right factorization test on a built space.
    TwoSided(InputReport),
}

#[derive(Debug, Args)]
pub struct OpalgArgs {
    pub input: PathBuf,
    /// Comma-separated span kinds; all when omitted.
    #[arg(long, value_delimiter = ',')]
    pub which: Option<Vec<SpanKind>>,
    /// Longest word; defaults to `2N + 2`.
    #[arg(long)]
    pub horizon: Option<usize>,
    #[arg(long)]
    pub report: Option<PathBuf>,
}

/// Parses `argv` and runs; returns the process exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    match dispatch(&cli) {
        Ok(true) => 0,
        Ok(false) => 1,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

/// Negative mathematical findings exit 1, everything else 2.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::NotHermitian { .. }
        | Error::NotPositive { .. }
        | Error::KernelCondition { .. }
        | Error::NotSqueezing(_)
        | Error::Certification { .. }
        | Error::Moments(_)
        | Error::Jacobi(_) => 1,
        _ => 2,
    }
}

fn emit<T: Serialize>(report: &T, path: Option<&Path>) -> Result<()> {
    match path {
        Some(p) => io::write_json(p, report),
        None => {
            print!("{}", io::to_json_string(report)?);
            Ok(())
        }
    }
}

fn read_family(path: &Path) -> Result<FamilyFile> {
    io::read_json(path)
}

fn load_space(path: &Path, tol: &Tolerances) -> Result<InteractingSpace> {
    io::read_json::<SpaceFile>(path)?.to_space(tol)
}

fn dispatch(cli: &Cli) -> Result<bool> {
    let tol = cli.global.tolerances()?;
    let exec = cli.global.exec();
    match &cli.command {
        Command::Deform(a) => deform(a, &tol, exec),
        Command::Validate(a) => {
            let fam = read_family(&a.input)?.to_deformation()?;
            let r = fam.validate(&tol)?;
            emit(&r, a.report.as_deref())?;
            Ok(r.passed)
        }
        Command::Build(a) => {
            let file = read_family(&a.input)?;
            let space = match file.kind.as_str() {
                "squeezing" => space_from_squeezing(&file.to_squeezing()?, &tol)?,
                "projection" => pi_space(&file.to_projections()?, &tol)?.0,
                _ => InteractingSpace::build_with(file.to_deformation()?, &tol, exec)?,
            };
            io::write_json(&a.out, &SpaceFile::from_space(&space))?;
            Ok(true)
        }
        Command::Verify(a) => {
            let r = load_space(&a.input, &tol)?.verify(&tol);
            emit(&r, a.report.as_deref())?;
            Ok(r.passed)
        }
        Command::Onemode(a) => {
            let m = io::read_json::<MomentsFile>(&a.moments)?.into_moments();
            let r = onemode_report(&m, a.cutoff, &tol)?;
            emit(&r, a.report.as_deref())?;
            Ok(r.roundtrip_residual <= tol.residual)
        }
        Command::Bounds(a) => {
            let space = load_space(&a.input, &tol)?;
            let x = io::read_json::<JsonVector>(&a.x)?.to_vector()?;
            let r = bounds_report(&space, &x, a.seed, &tol, exec)?;
            emit(&r, a.report.as_deref())?;
            Ok(r.consistent && r.kappa.holds)
        }
        Command::Demo(a) => demo(a, &tol, exec),
        Command::Subproduct(c) => subproduct_cmd(c, &tol, exec),
        Command::Opalg(a) => {
            let space = load_space(&a.input, &tol)?;
            let kinds = a.which.clone().unwrap_or_else(|| SpanKind::ALL.to_vec());
            let horizon = a.horizon.unwrap_or(2 * space.cutoff() + 2);
            if horizon == 0 {
                return Err(Error::Invalid("--horizon must be at least 1".into()));
            }
            let r = opalg_report(&space, &kinds, horizon, exec);
            emit(&r, a.report.as_deref())?;
            Ok(r.chains_hold && r.spans.iter().all(|s| s.stabilized))
        }
    }
}

fn deform(a: &DeformArgs, tol: &Tolerances, exec: Exec) -> Result<bool> {
    let space = || TruncatedFockSpace::new(a.dim, a.cutoff);
    let family: DeformationFamily = match a.kind {
        DeformKind::Q if a.recursive => q_fock_recursive(space()?, a.q)?,
        DeformKind::Q => q_fock_with(space()?, a.q, exec)?,
        DeformKind::Monotone => discrete_monotone(space()?),
        DeformKind::Cptex => catalog::cptex_family(a.dim)?,
        DeformKind::File => {
            let input = a
                .input
                .as_deref()
                .ok_or_else(|| Error::Invalid("--kind file needs --input".into()))?;
            read_family(input)?.to_deformation()?
        }
        DeformKind::Kappaunb | DeformKind::Extension => {
            let k = if a.kind == DeformKind::Extension {
                catalog::squeezing_extension(a.dim, a.seed)?
            } else {
                let mut omega2 = crate::linalg::CVec::zeros(a.dim * a.dim);
                omega2[0] = crate::linalg::ONE;
                crate::bounds::unbounded_squeezing(a.dim, &omega2)?
            };
            io::write_json(&a.out, &FamilyFile::squeezing(&k))?;
            return Ok(k.check(tol).passed);
        }
    };
    io::write_json(&a.out, &FamilyFile::deformation(&family))?;
    Ok(true)
}

fn demo(a: &DemoArgs, tol: &Tolerances, exec: Exec) -> Result<bool> {
    #[derive(Serialize)]
    struct Verdict<'a, T: Serialize> {
        demo: &'a str,
        passed: bool,
        report: T,
    }
    let (name, passed, json, table) = match a.name {
        DemoName::BoundedL => {
            let grids = default_sweep(4, a.param.unwrap_or(400));
            let r = demo_bounded_l(&grids, tol, exec)?;
            let mut t = Table::new(&["m", "ratio", "reference"]);
            for row in &r.rows {
                t.push(vec![row.param as f64, row.value, row.reference]);
            }
            let ok = r.growth.verdict == GrowthVerdict::Diverging
                && r.dense_check.iter().all(|&(_, e)| e <= tol.residual);
            ("bLunbex", ok, serde_json::to_value(&r)?, t)
        }
        DemoName::BoundedCreators => {
            let sizes = default_sweep(4, a.param.unwrap_or(40));
            let r = demo_bounded_creators(&sizes, a.seed, exec)?;
            let mut t = Table::new(&["K", "l2_norm", "worst_constant"]);
            for row in &r.rows {
                t.push(vec![row.blocks as f64, row.l2_norm, row.worst_constant]);
            }
            let ok = r.constants_bounded && r.l2_growth.verdict == GrowthVerdict::Diverging && r.dense_check <= tol.residual;
            ("bA*unbL", ok, serde_json::to_value(&r)?, t)
        }
        DemoName::UnboundedSqueezing => {
            let terms = a.param.unwrap_or(500);
            let r = demo_unbounded_squeezing(terms, a.seed, tol)?;
            let mut t = Table::new(&["N", "ratio"]);
            for (n, v) in r.ratios.iter().enumerate() {
                t.push(vec![(n + 1) as f64, *v]);
            }
            let ok = r.strictly_increasing
                && r.growth.verdict == GrowthVerdict::Diverging
                && r.creator_isometry_defect <= tol.residual
                && r.dense_check <= tol.residual;
            ("kappaunb", ok, serde_json::to_value(&r)?, t)
        }
        DemoName::Functional => {
            let r = demo_functional(a.basis, a.max_entry, a.samples, a.seed, exec)?;
            let mut t = Table::new(&["basis", "max_ratio", "exact_norm", "proof_bound"]);
            t.push(vec![a.basis as f64, r.max_ratio, r.rescaling.exact_norm, r.rescaling.proof_bound]);
            ("phicb", r.certified, serde_json::to_value(&r)?, t)
        }
    };
    if let Some(p) = &a.csv {
        io::write_atomic(p, table.to_csv().as_bytes())?;
    }
    emit(
        &Verdict {
            demo: name,
            passed,
            report: json,
        },
        a.report.as_deref(),
    )?;
    Ok(passed)
}

fn subproduct_cmd(c: &SubproductCommand, tol: &Tolerances, exec: Exec) -> Result<bool> {
    match c {
        SubproductCommand::Certify(a) => {
            let fam = read_family(&a.input)?.to_projections()?;
            let r = certify(&fam, crate::subproduct::PROJECTION_TOL, exec);
            emit(&r, a.report.as_deref())?;
            Ok(r.passed)
        }
        SubproductCommand::Build(a) => {
            let fam = read_family(&a.input)?.to_projections()?;
            let (space, _, _) = pi_space(&fam, tol)?;
            io::write_json(&a.out, &SpaceFile::from_space(&space))?;
            Ok(true)
        }
        SubproductCommand::Generate {
            dim,
            cutoff,
            ranks,
            seed,
            out,
        } => {
            let fam = subproduct::random_adjacent_family(TruncatedFockSpace::new(*dim, *cutoff)?, ranks.as_deref(), *seed)?;
            io::write_json(out, &FamilyFile::projections(&fam))?;
            Ok(true)
        }
        SubproductCommand::Example { kind, dim, cutoff, out } => {
            let space = TruncatedFockSpace::new(*dim, *cutoff)?;
            let fam = match kind {
                ExampleKind::Full => subproduct::full(space),
                ExampleKind::Symmetrizer => subproduct::symmetrizer(space)?,
                ExampleKind::Diagonal => subproduct::diagonal_chain(space)?,
            };
            io::write_json(out, &FamilyFile::projections(&fam))?;
            Ok(true)
        }
        SubproductCommand::TwoSided(a) => {
            let r = two_sided_test(&load_space(&a.input, tol)?, tol);
            emit(&r, a.report.as_deref())?;
            Ok(r.exists)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run_args(args: &[&str]) -> i32 {
        run(std::iter::once("fockbench").chain(args.iter().copied()))
    }

    #[test]
    fn help_and_usage_codes() {
        assert_eq!(run_args(&["--help"]), 0);
        assert_eq!(run_args(&["nonsense"]), 2);
        assert_eq!(run_args(&["demo", "nope"]), 2);
    }

    #[test]
    fn pipeline_deform_build_verify() {
        let dir = tempfile::tempdir().unwrap();
        let fam = dir.path().join("fam.json");
        let sp = dir.path().join("space.json");
        let rep = dir.path().join("rep.json");
        let s = |p: &Path| p.to_str().unwrap().to_string();
        assert_eq!(run_args(&["deform", "--kind", "q", "-q", "-0.5", "-d", "2", "-N", "3", "--out", &s(&fam)]), 0);
        assert_eq!(run_args(&["validate", &s(&fam), "--report", &s(&rep)]), 0);
        assert_eq!(run_args(&["build", &s(&fam), "--out", &s(&sp)]), 0);
        assert_eq!(run_args(&["verify", &s(&sp), "--report", &s(&rep)]), 0);
        assert_eq!(run_args(&["opalg", &s(&sp), "--which", "B_I,E_NC", "--report", &s(&rep)]), 0);
    }

    #[test]
    fn diagonal_example_fails_certification() {
        let dir = tempfile::tempdir().unwrap();
        let fam = dir.path().join("fam.json");
        let rep = dir.path().join("rep.json");
        let s = |p: &Path| p.to_str().unwrap().to_string();
        assert_eq!(run_args(&["subproduct", "example", "diagonal", "-d", "3", "-N", "3", "--out", &s(&fam)]), 0);
        assert_eq!(run_args(&["subproduct", "certify", &s(&fam), "--report", &s(&rep)]), 1);
        assert_eq!(run_args(&["validate", "/nonexistent/fam.json"]), 2);
    }

    #[test]
    fn error_classes() {
        assert_eq!(exit_code(&Error::KernelCondition { level: 1, residual: 1.0 }), 1);
        assert_eq!(exit_code(&Error::Invalid("x".into())), 2);
    }
}
