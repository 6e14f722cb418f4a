//! Machine-readable reports and their text rendering.

use qdf::classical::FinDist;
use qdf::definetti::{ConeLawReport, MomentAnalysis, UniquenessReport};
use qdf::exchange::ExchangeReport;
use qdf::json::MatrixRows;
use serde::{Deserialize, Serialize};
use serde_json::Value;

/// Weights at or below this are left out of text reports.
const PRINT_WEIGHT_FLOOR: f64 = 1e-9;
/// Longest weight listing in text reports.
const PRINT_WEIGHT_LIMIT: usize = 16;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "command", rename_all = "snake_case")]
pub enum Report {
    Check(CheckReport),
    Reconstruct(ReconstructReport),
    Factor(FactorReport),
    Demo(DemoReport),
    Error(ErrorReport),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Kind {
    Quantum,
    Classical,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckReport {
    pub kind: Kind,
    pub depth: usize,
    pub exchange: ExchangeReport,
}

/// Where the atoms of a fit came from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "snake_case")]
pub enum AtomSource {
    File {
        path: String,
    },
    Random {
        seed: u64,
        pure: usize,
        mixed: usize,
    },
    Lattice {
        resolution: usize,
    },
    Fixture {
        name: String,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FittedMixture {
    Quantum {
        atoms: Vec<MatrixRows>,
        weights: Vec<f64>,
    },
    Classical {
        grid: Vec<FinDist>,
        weights: Vec<f64>,
    },
}

impl FittedMixture {
    pub fn weights(&self) -> &[f64] {
        match self {
            FittedMixture::Quantum { weights, .. } | FittedMixture::Classical { weights, .. } => {
                weights
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReconstructReport {
    pub depth: usize,
    pub atoms: AtomSource,
    pub mixture: FittedMixture,
    pub residual: f64,
    pub max_residual: f64,
    pub representable: bool,
    /// Rank of the atoms' moment vectors and which weights they pin down.
    pub moments: MomentAnalysis,
    /// Level-one state of the fitted mixture (quantum input only).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub barycenter: Option<MatrixRows>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FactorReport {
    pub depth: usize,
    pub atoms: AtomSource,
    pub cone_laws: ConeLawReport,
    pub factorization_error: f64,
    pub uniqueness: UniquenessReport,
    pub mediating_map: Value,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DemoReport {
    pub demo: String,
    pub check: CheckReport,
    pub reconstruction: ReconstructReport,
    /// Trace distance of the fitted barycenter to the maximally mixed state.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub barycenter_distance: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorReport {
    pub status: u8,
    pub message: String,
    pub details: Vec<String>,
}

impl Report {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("reports serialize")
    }

    pub fn text(&self) -> Vec<String> {
        match self {
            Report::Check(r) => check_text(r),
            Report::Reconstruct(r) => reconstruct_text(r),
            Report::Factor(r) => factor_text(r),
            Report::Demo(r) => {
                let mut out = vec![format!("demo {}", r.demo)];
                out.extend(check_text(&r.check));
                out.extend(reconstruct_text(&r.reconstruction));
                if let Some(d) = r.barycenter_distance {
                    out.push(format!("barycenter trace distance to I/2: {d:.3e}"));
                }
                out
            }
            Report::Error(r) => {
                let mut out = vec![format!("error: {}", r.message)];
                out.extend(r.details.iter().map(|d| format!("  {d}")));
                out
            }
        }
    }
}

fn check_text(r: &CheckReport) -> Vec<String> {
    let kind = match r.kind {
        Kind::Quantum => "quantum",
        Kind::Classical => "classical",
    };
    let mut out = vec![format!(
        "{kind} sequence of depth {}, tolerance {:.1e}",
        r.depth, r.exchange.tolerance
    )];
    out.extend(r.exchange.describe());
    out.push(if r.exchange.verdict {
        "exchangeable".into()
    } else {
        format!(
            "NOT exchangeable (worst violation {:.3e})",
            r.exchange.worst_violation()
        )
    });
    out
}

fn source_text(s: &AtomSource) -> String {
    match s {
        AtomSource::File { path } => format!("atoms from {path}"),
        AtomSource::Random { seed, pure, mixed } => {
            format!(
                "{} random atoms ({pure} pure, {mixed} mixed, seed {seed})",
                pure + mixed
            )
        }
        AtomSource::Lattice { resolution } => format!("simplex lattice with step 1/{resolution}"),
        AtomSource::Fixture { name } => format!("{name} atoms"),
    }
}

fn weight_lines(weights: &[f64], name: impl Fn(usize) -> String) -> Vec<String> {
    let mut order: Vec<usize> = (0..weights.len())
        .filter(|&k| weights[k] > PRINT_WEIGHT_FLOOR)
        .collect();
    order.sort_by(|&a, &b| weights[b].total_cmp(&weights[a]));
    let mut out: Vec<String> = order
        .iter()
        .take(PRINT_WEIGHT_LIMIT)
        .map(|&k| format!("  {}: {:.10}", name(k), weights[k]))
        .collect();
    if order.len() > PRINT_WEIGHT_LIMIT {
        out.push(format!("  and {} more", order.len() - PRINT_WEIGHT_LIMIT));
    }
    out
}

fn reconstruct_text(r: &ReconstructReport) -> Vec<String> {
    let m = &r.moments;
    let mut out = vec![
        format!("fit at depth {} over {}", r.depth, source_text(&r.atoms)),
        format!(
            "residual {:.3e} (threshold {:.1e}): {}",
            r.residual,
            r.max_residual,
            if r.representable {
                "representable"
            } else {
                "NOT representable at this depth and atom set"
            }
        ),
    ];
    let determined = m.determined.iter().filter(|&&d| d).count();
    out.push(if m.independent() {
        format!(
            "moment rank {}/{}: weights are unique",
            m.rank, m.atom_count
        )
    } else {
        format!(
            "moment rank {}/{}: degenerate, {determined} atom weights determined",
            m.rank, m.atom_count
        )
    });
    out.push("weights:".into());
    out.extend(match &r.mixture {
        FittedMixture::Quantum { weights, .. } => weight_lines(weights, |k| format!("atom {k}")),
        FittedMixture::Classical { grid, weights } => {
            weight_lines(weights, |k| format!("grid point {k} {:?}", grid[k].probs()))
        }
    });
    if let Some(b) = &r.barycenter {
        let rows: Vec<String> = b
            .iter()
            .map(|row| {
                row.iter()
                    .map(|z| format!("{:+.6}{:+.6}i", z[0], z[1]))
                    .collect::<Vec<_>>()
                    .join(" ")
            })
            .collect();
        out.push(format!("barycenter: [{}]", rows.join("; ")));
    }
    out
}

fn factor_text(r: &FactorReport) -> Vec<String> {
    let laws = &r.cone_laws;
    let u = &r.uniqueness;
    let mut out = vec![
        format!(
            "cone of depth {}: laws hold on {} injections and {} probes (worst {:.3e}{})",
            r.depth,
            laws.injections_checked,
            laws.probes,
            laws.max_violation,
            if laws.exhaustive {
                ""
            } else {
                ", generators only"
            }
        ),
        format!(
            "mediating map over {}: factorization error {:.3e}",
            source_text(&r.atoms),
            r.factorization_error
        ),
        format!(
            "uniqueness over {} restarts: moment rank {}/{}, spread {:.3e}, {}",
            u.trials,
            u.moment_rank,
            u.atom_count,
            u.max_pairwise_distance,
            match (u.unique, u.degenerate) {
                (true, false) => "unique",
                (true, true) => "unique on the determined atoms (degenerate moments)",
                (false, _) => "NOT unique",
            }
        ),
    ];
    if let Some(rows) = r.mediating_map.get("weights").and_then(Value::as_array) {
        for (i, row) in rows.iter().enumerate() {
            let w: Vec<f64> = row
                .as_array()
                .map(|a| a.iter().filter_map(Value::as_f64).collect())
                .unwrap_or_default();
            out.push(format!("probe {i}:"));
            out.extend(weight_lines(&w, |k| format!("atom {k}")));
        }
    }
    out
}
