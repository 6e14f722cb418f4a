use std::path::Path;

use qdf::classical::{self, ClassicalExchSeq, FinDist};
use qdf::cstar::StateVec;
use qdf::definetti::{
    self, default_atoms, moment_analysis, AtomOrigin, AtomSet, Cone, ReconstructOptions,
    MIN_NORM_RIDGE,
};
use qdf::exchange::{check_exchangeable, ExchSeq};
use qdf::fixtures;
use qdf::json::matrix_to_rows;

use crate::config::{Cli, Command, DemoName, Format, Options};
use crate::error::{CliError, Status};
use crate::input::{self, Atoms, Input};
use crate::report::{
    AtomSource, CheckReport, DemoReport, ErrorReport, FactorReport, FittedMixture, Kind,
    ReconstructReport, Report,
};

/// Restarts used by the uniqueness check of `factor`.
pub const UNIQUENESS_TRIALS: usize = 10;

/// Result of a command that ran to completion.
#[derive(Debug)]
pub struct Outcome {
    pub status: Status,
    pub report: Report,
    /// JSON written to `--output`.
    pub artifact: String,
}

impl Outcome {
    fn from_report(status: Status, report: Report) -> Self {
        let artifact = report.to_json();
        Outcome {
            status,
            report,
            artifact,
        }
    }
}

/// Run a parsed command line: print the report, write `--output`, return the exit status.
pub fn run(cli: &Cli) -> Status {
    let opts = &cli.options;
    let (status, report) = match execute(cli) {
        Ok(outcome) => match write_output(opts, &outcome.artifact) {
            Ok(()) => (outcome.status, outcome.report),
            Err(e) => (e.status(), error_report(&e)),
        },
        Err(e) => (e.status(), error_report(&e)),
    };
    match opts.format {
        Format::Json => println!("{}", report.to_json()),
        Format::Text => {
            let lines = report.text();
            if matches!(report, Report::Error(_)) {
                lines.iter().for_each(|l| eprintln!("{l}"));
            } else {
                lines.iter().for_each(|l| println!("{l}"));
            }
        }
    }
    status
}

fn error_report(e: &CliError) -> Report {
    Report::Error(ErrorReport {
        status: e.status().code(),
        message: e.to_string(),
        details: e.details(),
    })
}

fn write_output(opts: &Options, artifact: &str) -> Result<(), CliError> {
    let Some(path) = &opts.output else {
        return Ok(());
    };
    std::fs::write(path, format!("{artifact}\n")).map_err(|source| CliError::Write {
        path: path.clone(),
        source,
    })
}

pub fn execute(cli: &Cli) -> Result<Outcome, CliError> {
    let opts = &cli.options;
    match cli.command {
        Command::Check => cmd_check(opts),
        Command::Reconstruct => cmd_reconstruct(opts),
        Command::Factor => cmd_factor(opts),
        Command::Demo { name } => cmd_demo(name, opts),
    }
}

fn input_path(opts: &Options) -> Result<&Path, CliError> {
    opts.input
        .as_deref()
        .ok_or_else(|| CliError::Usage("--input is required".into()))
}

fn depth(opts: &Options) -> Option<usize> {
    opts.depth.map(|d| d as usize)
}

enum Sequence {
    Quantum(ExchSeq),
    Classical(ClassicalExchSeq),
}

impl Sequence {
    fn depth(&self) -> usize {
        match self {
            Sequence::Quantum(s) => s.depth(),
            Sequence::Classical(s) => s.depth(),
        }
    }
}

/// The input sequence, truncated to `--depth` and with `--tol` applied.
fn load_sequence(opts: &Options) -> Result<Sequence, CliError> {
    let path = input_path(opts)?;
    let seq = match input::load_input(path)? {
        Input::Quantum(s) => Sequence::Quantum(s),
        Input::Classical(s) => Sequence::Classical(s),
        Input::Cone(_) => {
            return Err(CliError::Parse {
                path: path.to_path_buf(),
                message: "expected a sequence, found a cone (use `qdf factor`)".into(),
            })
        }
    };
    let n = depth(opts).unwrap_or(seq.depth());
    if n > seq.depth() {
        return Err(CliError::Usage(format!(
            "--depth {n} exceeds the input depth {}",
            seq.depth()
        )));
    }
    Ok(match seq {
        Sequence::Quantum(s) => {
            let s = s.truncated(n)?;
            let tol = opts.tol.unwrap_or(s.tolerance());
            Sequence::Quantum(s.with_tolerance(tol))
        }
        Sequence::Classical(s) => {
            let s = s.truncated(n)?;
            let tol = opts.tol.unwrap_or(s.tolerance());
            Sequence::Classical(s.with_tolerance(tol))
        }
    })
}

fn check_report(seq: &Sequence) -> CheckReport {
    match seq {
        Sequence::Quantum(s) => CheckReport {
            kind: Kind::Quantum,
            depth: s.depth(),
            exchange: check_exchangeable(s),
        },
        Sequence::Classical(s) => CheckReport {
            kind: Kind::Classical,
            depth: s.depth(),
            exchange: s.check(),
        },
    }
}

fn verdict_status(report: &CheckReport) -> Status {
    if report.exchange.verdict {
        Status::Ok
    } else {
        Status::InvariantFailure
    }
}

pub fn cmd_check(opts: &Options) -> Result<Outcome, CliError> {
    let report = check_report(&load_sequence(opts)?);
    Ok(Outcome::from_report(
        verdict_status(&report),
        Report::Check(report),
    ))
}

fn quantum_atoms(opts: &Options, d: usize) -> Result<(AtomSet, AtomSource), CliError> {
    match &opts.atoms {
        Some(path) => match input::load_atoms(path)? {
            Atoms::Quantum(a) => Ok((a, file_source(path))),
            Atoms::Classical(_) => Err(CliError::Parse {
                path: path.clone(),
                message: "expected density matrices for a quantum input".into(),
            }),
        },
        None => {
            let atoms = default_atoms(d, opts.atom_count as usize, opts.seed)?;
            let source = match atoms.origin() {
                AtomOrigin::Random { seed, pure, mixed } => AtomSource::Random {
                    seed: *seed,
                    pure: *pure,
                    mixed: *mixed,
                },
                AtomOrigin::Explicit => AtomSource::Fixture {
                    name: "default".into(),
                },
            };
            Ok((atoms, source))
        }
    }
}

/// The finest simplex lattice with at most `--atom-count` points.
fn classical_grid(
    opts: &Options,
    space: &[String],
) -> Result<(Vec<FinDist>, AtomSource), CliError> {
    if let Some(path) = &opts.atoms {
        return match input::load_atoms(path)? {
            Atoms::Classical(g) => Ok((g, file_source(path))),
            Atoms::Quantum(_) => Err(CliError::Parse {
                path: path.clone(),
                message: "expected distributions for a classical input".into(),
            }),
        };
    }
    let budget = opts.atom_count as usize;
    let mut resolution = 1;
    while classical::simplex_grid_size(space.len(), resolution + 1) <= budget {
        resolution += 1;
    }
    Ok((
        classical::simplex_grid(space, resolution)?,
        AtomSource::Lattice { resolution },
    ))
}

fn file_source(path: &Path) -> AtomSource {
    AtomSource::File {
        path: path.display().to_string(),
    }
}

fn fit_quantum(
    seq: &ExchSeq,
    atoms: &AtomSet,
    source: AtomSource,
    opts: &ReconstructOptions,
) -> Result<ReconstructReport, CliError> {
    let rec = definetti::reconstruct(seq, atoms, opts)?;
    let mix = &rec.mixture;
    Ok(ReconstructReport {
        depth: seq.depth(),
        atoms: source,
        mixture: FittedMixture::Quantum {
            atoms: mix
                .atoms()
                .atoms()
                .iter()
                .map(|a| matrix_to_rows(&a.to_rep()))
                .collect(),
            weights: mix.weights().to_vec(),
        },
        residual: rec.residual,
        max_residual: opts.max_residual,
        representable: rec.residual <= opts.max_residual,
        moments: moment_analysis(atoms, seq.depth()),
        barycenter: Some(matrix_to_rows(&mix.barycenter()?.to_rep())),
    })
}

fn fit_classical(
    seq: &ClassicalExchSeq,
    grid: &[FinDist],
    source: AtomSource,
    opts: &ReconstructOptions,
) -> Result<ReconstructReport, CliError> {
    let rec = classical::hs_reconstruct(seq, grid, opts)?;
    Ok(ReconstructReport {
        depth: seq.depth(),
        atoms: source,
        mixture: FittedMixture::Classical {
            grid: rec.grid,
            weights: rec.weights,
        },
        residual: rec.residual,
        max_residual: opts.max_residual,
        representable: rec.residual <= opts.max_residual,
        moments: moment_analysis(&classical::grid_atoms(grid)?, seq.depth()),
        barycenter: None,
    })
}

fn fit_status(report: &ReconstructReport) -> Status {
    if report.representable {
        Status::Ok
    } else {
        Status::NotRepresentable
    }
}

fn reconstruct_options(opts: &Options) -> ReconstructOptions {
    ReconstructOptions {
        max_residual: opts.max_residual,
        ..ReconstructOptions::default()
    }
}

pub fn cmd_reconstruct(opts: &Options) -> Result<Outcome, CliError> {
    let ropts = reconstruct_options(opts);
    let report = match load_sequence(opts)? {
        Sequence::Quantum(seq) => {
            let (atoms, source) = quantum_atoms(opts, seq.base().rep_dim())?;
            fit_quantum(&seq, &atoms, source, &ropts)?
        }
        Sequence::Classical(seq) => {
            let (grid, source) = classical_grid(opts, seq.space())?;
            fit_classical(&seq, &grid, source, &ropts)?
        }
    };
    Ok(Outcome::from_report(
        fit_status(&report),
        Report::Reconstruct(report),
    ))
}

pub fn cmd_factor(opts: &Options) -> Result<Outcome, CliError> {
    let path = input_path(opts)?;
    let cone = match input::load_input(path)? {
        Input::Cone(c) => c,
        _ => {
            return Err(CliError::Parse {
                path: path.to_path_buf(),
                message: "expected a cone (key \"channels\")".into(),
            })
        }
    };
    let n = depth(opts).unwrap_or(cone.depth());
    if n > cone.depth() {
        return Err(CliError::Usage(format!(
            "--depth {n} exceeds the cone depth {}",
            cone.depth()
        )));
    }
    let cone = Cone::new(
        cone.apex().clone(),
        cone.base().clone(),
        cone.channels()[..n].to_vec(),
        opts.tol.unwrap_or(cone.tolerance()),
    )?;
    let cone_laws = cone.check_laws()?;
    let (atoms, source) = quantum_atoms(opts, cone.base().rep_dim())?;
    let med = definetti::mediating_map(&cone, &atoms, &reconstruct_options(opts))?;
    let factorization_error = definetti::factorization_error(&cone, &med)?;
    let uniqueness = definetti::uniqueness_check(&cone, &atoms, UNIQUENESS_TRIALS, opts.seed)?;
    let report = FactorReport {
        depth: n,
        atoms: source,
        cone_laws,
        factorization_error,
        uniqueness,
        mediating_map: serde_json::to_value(&med).map_err(qdf::Error::from)?,
    };
    Ok(Outcome::from_report(Status::Ok, Report::Factor(report)))
}

pub fn cmd_demo(name: DemoName, opts: &Options) -> Result<Outcome, CliError> {
    let n = depth(opts).unwrap_or(name.default_depth());
    let ropts = reconstruct_options(opts);
    let fixture = |label: &str| AtomSource::Fixture { name: label.into() };
    let (seq, reconstruction, artifact) = match name {
        DemoName::Coin => {
            let seq = fixtures::coin_bag(n)?;
            let seq = match opts.tol {
                Some(t) => seq.with_tolerance(t),
                None => seq,
            };
            let rec = fit_classical(&seq, &fixtures::coin_grid(), fixture("coin bag"), &ropts)?;
            let artifact = to_json(&seq)?;
            (Sequence::Classical(seq), rec, artifact)
        }
        _ => {
            let (seq, atoms, source, ropts) = match name {
                DemoName::Circuit1 => (
                    fixtures::copied_coin(n)?,
                    fixtures::computational_atoms(),
                    fixture("computational basis"),
                    ropts,
                ),
                DemoName::Circuit2 => (
                    fixtures::maximally_mixed(n)?,
                    fixtures::maximally_mixed_atom(),
                    fixture("maximally mixed"),
                    ropts,
                ),
                DemoName::Equator => (
                    definetti::synthesize(&fixtures::equator_mixture()?, n)?,
                    fixtures::equator_atoms()?,
                    fixture("equator"),
                    // the equator moments are degenerate; prefer the most even weights
                    ropts.min_norm(MIN_NORM_RIDGE),
                ),
                DemoName::UnknownQubit => {
                    let mix = fixtures::bloch_ball_mixture()?;
                    let atoms = mix.atoms().clone();
                    (
                        definetti::synthesize(&mix, n)?,
                        atoms,
                        fixture("Bloch-ball grid"),
                        ropts,
                    )
                }
                DemoName::Coin => unreachable!(),
            };
            let seq = match opts.tol {
                Some(t) => seq.with_tolerance(t),
                None => seq,
            };
            let rec = fit_quantum(&seq, &atoms, source, &ropts)?;
            let artifact = to_json(&seq)?;
            (Sequence::Quantum(seq), rec, artifact)
        }
    };
    let check = check_report(&seq);
    let barycenter_distance = match &seq {
        Sequence::Quantum(s) => Some(barycenter_distance(s, &reconstruction)?),
        Sequence::Classical(_) => None,
    };
    let status = match verdict_status(&check) {
        Status::Ok => fit_status(&reconstruction),
        failed => failed,
    };
    Ok(Outcome {
        status,
        report: Report::Demo(DemoReport {
            demo: name.label().into(),
            check,
            reconstruction,
            barycenter_distance,
        }),
        artifact,
    })
}

fn barycenter_distance(seq: &ExchSeq, rec: &ReconstructReport) -> Result<f64, CliError> {
    let rows = rec
        .barycenter
        .as_ref()
        .expect("quantum fits carry a barycenter");
    let bary = StateVec::from_density(qdf::json::rows_to_matrix(rows)?)?;
    let half = StateVec::maximally_mixed(seq.base().rep_dim())?;
    Ok(bary.trace_distance(&half)?)
}

fn to_json<T: serde::Serialize>(value: &T) -> Result<String, CliError> {
    Ok(serde_json::to_string_pretty(value).map_err(qdf::Error::from)?)
}
