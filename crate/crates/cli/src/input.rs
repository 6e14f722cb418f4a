//! Reading sequence, cone and atom files.
//!
//! The kind of an input file is read off its keys: `"channels"` marks a cone,
//! `"space"` with `"levels"` a classical sequence, and `"states"` a quantum sequence.

use std::path::Path;

use qdf::classical::{ClassicalExchSeq, FinDist};
use qdf::definetti::{atoms_from_matrices, AtomSet, Cone};
use qdf::exchange::ExchSeq;
use qdf::json::{rows_to_matrix, MatrixRows};
use serde::de::DeserializeOwned;
use serde::Deserialize;
use serde_json::Value;

use crate::error::CliError;

pub enum Input {
    Quantum(ExchSeq),
    Classical(ClassicalExchSeq),
    Cone(Cone),
}

pub enum Atoms {
    Quantum(AtomSet),
    Classical(Vec<FinDist>),
}

pub fn read(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|source| CliError::Read {
        path: path.to_path_buf(),
        source,
    })
}

fn parse<T: DeserializeOwned>(path: &Path, text: &str) -> Result<T, CliError> {
    serde_json::from_str(text).map_err(|e| CliError::Parse {
        path: path.to_path_buf(),
        message: e.to_string(),
    })
}

pub fn load_input(path: &Path) -> Result<Input, CliError> {
    let text = read(path)?;
    let value: Value = parse(path, &text)?;
    let has = |key: &str| value.get(key).is_some();
    // parse from the text again so semantic errors keep their line and column
    if has("channels") {
        Ok(Input::Cone(parse(path, &text)?))
    } else if has("space") && has("levels") {
        Ok(Input::Classical(parse(path, &text)?))
    } else if has("states") {
        Ok(Input::Quantum(parse(path, &text)?))
    } else {
        Err(CliError::Parse {
            path: path.to_path_buf(),
            message: "expected a sequence (keys \"states\", or \"space\" and \"levels\") \
                      or a cone (key \"channels\")"
                .into(),
        })
    }
}

#[derive(Deserialize)]
#[serde(untagged)]
enum AtomFile {
    Matrices(Vec<MatrixRows>),
    Grid(Vec<FinDist>),
    Mixture { atoms: Vec<MatrixRows> },
    GridMixture { grid: Vec<FinDist> },
}

/// Atoms as a JSON list of density matrices or of distributions, optionally wrapped
/// in an object under `"atoms"` or `"grid"` (so mixture files and reports can be reused).
pub fn load_atoms(path: &Path) -> Result<Atoms, CliError> {
    let text = read(path)?;
    let file: AtomFile = serde_json::from_str(&text).map_err(|e| CliError::Parse {
        path: path.to_path_buf(),
        message: format!(
            "expected a list of density matrices or of distributions ({})",
            e
        ),
    })?;
    let reject = |e: qdf::Error| CliError::Parse {
        path: path.to_path_buf(),
        message: e.to_string(),
    };
    match file {
        AtomFile::Matrices(rows) | AtomFile::Mixture { atoms: rows } => {
            let mats = rows
                .iter()
                .map(rows_to_matrix)
                .collect::<qdf::Result<Vec<_>>>()
                .map_err(reject)?;
            Ok(Atoms::Quantum(atoms_from_matrices(&mats).map_err(reject)?))
        }
        AtomFile::Grid(grid) | AtomFile::GridMixture { grid } => Ok(Atoms::Classical(grid)),
    }
}
