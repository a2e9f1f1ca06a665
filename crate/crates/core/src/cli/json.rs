//! Canonical JSON serialization of parameter triples.
//!
//! Complex numbers are two-element arrays [re, im]; matrices are row-major
//! nested arrays. Field order is fixed and floats print in shortest
//! round-trip form, so load → save reproduces a file byte for byte.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matcore::{cplx, CMatrix};
use crate::triples::{ParameterTriple, Signature, SystemKind};

pub const KIND_SELF_ADJOINT: &str = "self_adjoint";
pub const KIND_SKEW: &str = "skew";

/// Wire format of a triple file.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TripleFile {
    pub kind: String,
    pub n: usize,
    pub m1: usize,
    pub m2: usize,
    #[serde(rename = "A")]
    pub a: Vec<Vec<[f64; 2]>>,
    #[serde(rename = "S0")]
    pub s0: Vec<Vec<[f64; 2]>>,
    #[serde(rename = "Pi0")]
    pub pi0: Vec<Vec<[f64; 2]>>,
}

fn matrix_to_rows(m: &CMatrix) -> Vec<Vec<[f64; 2]>> {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| [m[(i, j)].re, m[(i, j)].im]).collect())
        .collect()
}

fn rows_to_matrix(rows: &[Vec<[f64; 2]>], nrows: usize, ncols: usize, name: &str) -> Result<CMatrix> {
    if rows.len() != nrows || rows.iter().any(|r| r.len() != ncols) {
        return Err(Error::Dimension(format!(
            "{name} must be {nrows}x{ncols} in the triple file"
        )));
    }
    Ok(CMatrix::from_fn(nrows, ncols, |i, j| {
        cplx(rows[i][j][0], rows[i][j][1])
    }))
}

impl TripleFile {
    pub fn from_triple(t: &ParameterTriple) -> Self {
        Self {
            kind: match t.kind() {
                SystemKind::SelfAdjoint => KIND_SELF_ADJOINT.to_string(),
                SystemKind::SkewSelfAdjoint => KIND_SKEW.to_string(),
            },
            n: t.n(),
            m1: t.sig().m1(),
            m2: t.sig().m2(),
            a: matrix_to_rows(t.a()),
            s0: matrix_to_rows(t.s0()),
            pi0: matrix_to_rows(t.pi0()),
        }
    }

    pub fn into_triple(&self) -> Result<ParameterTriple> {
        let kind = match self.kind.as_str() {
            KIND_SELF_ADJOINT => SystemKind::SelfAdjoint,
            KIND_SKEW => SystemKind::SkewSelfAdjoint,
            other => {
                return Err(Error::InvalidArgument(format!(
                    "unknown system kind {other:?} (expected \"{KIND_SELF_ADJOINT}\" or \"{KIND_SKEW}\")"
                )))
            }
        };
        let sig = Signature::new(self.m1, self.m2)?;
        let a = rows_to_matrix(&self.a, self.n, self.n, "A")?;
        let s0 = rows_to_matrix(&self.s0, self.n, self.n, "S0")?;
        let pi0 = rows_to_matrix(&self.pi0, self.n, sig.m(), "Pi0")?;
        ParameterTriple::new(kind, sig, a, s0, pi0)
    }
}

/// Canonical text of a triple: pretty JSON plus a trailing newline.
pub fn triple_to_string(t: &ParameterTriple) -> String {
    let mut text = serde_json::to_string_pretty(&TripleFile::from_triple(t))
        .expect("triple serialization cannot fail");
    text.push('\n');
    text
}

pub fn triple_from_str(text: &str) -> Result<ParameterTriple> {
    let file: TripleFile = serde_json::from_str(text)
        .map_err(|e| Error::InvalidArgument(format!("malformed triple JSON: {e}")))?;
    file.into_triple()
}
