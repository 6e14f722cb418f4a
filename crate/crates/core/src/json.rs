//! Shared JSON encodings.
//!
//! A complex number is a two-element array `[re, im]` and a matrix is an array of
//! rows. Floats are written in shortest round-trip form, so a parse of the printed
//! value recovers the original bits.

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{invalid, Result};
use crate::linalg::{c, CMat};

pub type MatrixRows = Vec<Vec<[f64; 2]>>;

pub fn matrix_to_rows(m: &CMat) -> MatrixRows {
    (0..m.nrows())
        .map(|i| {
            (0..m.ncols())
                .map(|j| [m[(i, j)].re, m[(i, j)].im])
                .collect()
        })
        .collect()
}

pub fn rows_to_matrix(rows: &MatrixRows) -> Result<CMat> {
    let n = rows.len();
    let ncols = rows.first().map_or(0, Vec::len);
    if rows.iter().any(|r| r.len() != ncols) {
        return invalid("ragged matrix rows");
    }
    Ok(CMat::from_fn(n, ncols, |i, j| {
        c(rows[i][j][0], rows[i][j][1])
    }))
}

/// `#[serde(with = "json::matrix")]` for a single matrix field.
pub mod matrix {
    use super::*;

    pub fn serialize<S: Serializer>(m: &CMat, s: S) -> std::result::Result<S::Ok, S::Error> {
        matrix_to_rows(m).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<CMat, D::Error> {
        let rows = MatrixRows::deserialize(d)?;
        rows_to_matrix(&rows).map_err(serde::de::Error::custom)
    }
}

/// `#[serde(with = "json::matrices")]` for a list of matrices.
pub mod matrices {
    use super::*;

    pub fn serialize<S: Serializer>(ms: &[CMat], s: S) -> std::result::Result<S::Ok, S::Error> {
        let rows: Vec<MatrixRows> = ms.iter().map(matrix_to_rows).collect();
        rows.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(
        d: D,
    ) -> std::result::Result<Vec<CMat>, D::Error> {
        let all = Vec::<MatrixRows>::deserialize(d)?;
        all.iter()
            .map(rows_to_matrix)
            .collect::<Result<Vec<_>>>()
            .map_err(serde::de::Error::custom)
    }
}
