use serde::{Deserialize, Serialize};

use super::{ComplexMatrix, C64};
use crate::error::{Error, Result};

/// JSON exchange form: `{"dim": n, "re": [[...]], "im": [[...]]}`, row-major.
///
/// Rectangular matrices (Kraus operators between different spaces) carry
/// `rows`/`cols` instead of `dim`. `im` may be omitted for real matrices.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MatrixJson {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dim: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rows: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cols: Option<usize>,
    pub re: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub im: Option<Vec<Vec<f64>>>,
}

impl From<&ComplexMatrix> for MatrixJson {
    fn from(m: &ComplexMatrix) -> Self {
        let (r, c) = (m.rows(), m.cols());
        let re = (0..r).map(|i| (0..c).map(|j| m.get(i, j).re).collect()).collect();
        let im = (0..r).map(|i| (0..c).map(|j| m.get(i, j).im).collect()).collect();
        let square = r == c;
        Self { dim: square.then_some(r), rows: (!square).then_some(r), cols: (!square).then_some(c), re, im: Some(im) }
    }
}

impl TryFrom<&MatrixJson> for ComplexMatrix {
    type Error = Error;

    fn try_from(j: &MatrixJson) -> Result<Self> {
        let rows = j.re.len();
        let cols = j.re.first().map_or(0, Vec::len);
        if rows == 0 || cols == 0 {
            return Err(Error::Parse("empty matrix".into()));
        }
        if j.re.iter().any(|r| r.len() != cols) {
            return Err(Error::Parse("ragged rows in \"re\"".into()));
        }
        if let Some(d) = j.dim {
            if d != rows || d != cols {
                return Err(Error::Parse(format!("\"dim\" is {d} but \"re\" is {rows}x{cols}")));
            }
        }
        if j.rows.is_some_and(|r| r != rows) || j.cols.is_some_and(|c| c != cols) {
            return Err(Error::Parse("\"rows\"/\"cols\" disagree with \"re\"".into()));
        }
        let mut entries = Vec::with_capacity(rows * cols);
        match &j.im {
            Some(im) => {
                if im.len() != rows || im.iter().any(|r| r.len() != cols) {
                    return Err(Error::Parse("\"im\" shape differs from \"re\"".into()));
                }
                for (rr, ri) in j.re.iter().zip(im) {
                    entries.extend(rr.iter().zip(ri).map(|(&a, &b)| C64::new(a, b)));
                }
            }
            None => entries.extend(j.re.iter().flatten().map(|&a| C64::new(a, 0.0))),
        }
        ComplexMatrix::new(rows, cols, entries)
    }
}

impl ComplexMatrix {
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(MatrixJson::from(self)).expect("matrix serializes")
    }

    pub fn from_json_str(s: &str) -> Result<Self> {
        let j: MatrixJson = serde_json::from_str(s).map_err(|e| Error::Parse(e.to_string()))?;
        ComplexMatrix::try_from(&j)
    }
}
