//! JSON matrix files.
//!
//! ```json
//! {"algebra": {"blocks": [2, 1]},
//!  "matrix": {"blocks": [{"re": [[1, 0], [0, 1]], "im": [[0, 0], [0, 0]]},
//!                        {"re": [[2]], "im": [[0]]}]},
//!  "kind": "functional"}
//! ```
//!
//! Entries are row-major. Numbers are written with 17 significant digits so a
//! write/read cycle reproduces every `f64` exactly.

use std::fs;
use std::path::Path;

use nclp_core::algebra::{BlockAlgebra, Element};
use nclp_core::functionals::PositiveFunctional;
use nclp_core::matrix::CMatrix;
use nclp_core::{SpectralConfig, C64};
use serde::{Deserialize, Serialize};
use serde_json::{json, Number, Value};

#[derive(Debug, thiserror::Error)]
pub enum FormatError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("malformed JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("invalid matrix file: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Kind {
    Element,
    Functional,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawFile {
    algebra: RawAlgebra,
    matrix: RawMatrix,
    kind: Kind,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawAlgebra {
    blocks: Vec<usize>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawMatrix {
    blocks: Vec<RawBlock>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawBlock {
    re: Vec<Vec<f64>>,
    im: Vec<Vec<f64>>,
}

/// A parsed file. `element` holds the entries exactly as written.
#[derive(Debug, Clone)]
pub struct MatrixFile {
    pub kind: Kind,
    pub element: Element,
}

impl MatrixFile {
    pub fn element(element: Element) -> Self {
        Self {
            kind: Kind::Element,
            element,
        }
    }

    pub fn functional(psi: &PositiveFunctional) -> Self {
        Self {
            kind: Kind::Functional,
            element: psi.density().clone(),
        }
    }

    pub fn algebra(&self) -> &BlockAlgebra {
        self.element.algebra()
    }

    /// The functional with this density; the file must be of kind `functional`.
    pub fn to_functional(&self, cfg: &SpectralConfig) -> Result<PositiveFunctional, FormatError> {
        if self.kind != Kind::Functional {
            return Err(FormatError::Invalid("expected a file of kind \"functional\"".into()));
        }
        PositiveFunctional::from_density(self.element.clone(), cfg).map_err(|e| FormatError::Invalid(e.to_string()))
    }
}

fn read_block(k: usize, n: usize, raw: &RawBlock) -> Result<CMatrix, FormatError> {
    let rect = |part: &[Vec<f64>], name: &str| {
        if part.len() != n || part.iter().any(|row| row.len() != n) {
            return Err(FormatError::Invalid(format!("block {k}: \"{name}\" must be {n}x{n}")));
        }
        Ok(())
    };
    rect(&raw.re, "re")?;
    rect(&raw.im, "im")?;
    Ok(CMatrix::from_fn(n, n, |i, j| C64::new(raw.re[i][j], raw.im[i][j])))
}

/// Parses and validates a file. Functional files must be Hermitian within
/// `1e-8·max(1, ‖h‖_F)` and positive after clipping.
pub fn parse(text: &str, cfg: &SpectralConfig) -> Result<MatrixFile, FormatError> {
    let raw: RawFile = serde_json::from_str(text)?;
    let algebra = BlockAlgebra::new(&raw.algebra.blocks).map_err(|e| FormatError::Invalid(e.to_string()))?;
    if raw.matrix.blocks.len() != algebra.num_blocks() {
        return Err(FormatError::Invalid(format!(
            "algebra has {} blocks but matrix has {}",
            algebra.num_blocks(),
            raw.matrix.blocks.len()
        )));
    }
    let blocks = algebra
        .block_dims()
        .iter()
        .zip(&raw.matrix.blocks)
        .enumerate()
        .map(|(k, (&n, b))| read_block(k, n, b))
        .collect::<Result<Vec<_>, _>>()?;
    let element = Element::from_blocks(&algebra, blocks).map_err(|e| FormatError::Invalid(e.to_string()))?;
    let file = MatrixFile {
        kind: raw.kind,
        element,
    };
    if file.kind == Kind::Functional {
        file.to_functional(cfg)?;
    }
    Ok(file)
}

pub fn read(path: impl AsRef<Path>, cfg: &SpectralConfig) -> Result<MatrixFile, FormatError> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|source| FormatError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse(&text, cfg)
}

/// A JSON number with 17 significant digits, or the strings `"inf"`,
/// `"-inf"`, `"nan"` for non-finite values.
pub fn number(x: f64) -> Value {
    if x.is_finite() {
        Value::Number(format!("{x:.16e}").parse::<Number>().expect("valid JSON number"))
    } else if x.is_nan() {
        Value::String("nan".into())
    } else if x > 0.0 {
        Value::String("inf".into())
    } else {
        Value::String("-inf".into())
    }
}

pub fn to_value(file: &MatrixFile) -> Value {
    let blocks: Vec<Value> = file
        .element
        .blocks()
        .iter()
        .map(|b| {
            let part = |f: fn(&C64) -> f64| -> Value {
                (0..b.rows())
                    .map(|i| (0..b.cols()).map(|j| number(f(&b[(i, j)]))).collect::<Vec<_>>().into())
                    .collect::<Vec<Value>>()
                    .into()
            };
            json!({"re": part(|z| z.re), "im": part(|z| z.im)})
        })
        .collect();
    json!({
        "algebra": {"blocks": file.algebra().block_dims()},
        "matrix": {"blocks": blocks},
        "kind": file.kind,
    })
}

pub fn to_string(file: &MatrixFile) -> String {
    let mut s = serde_json::to_string_pretty(&to_value(file)).expect("serializable");
    s.push('\n');
    s
}

pub fn write(path: impl AsRef<Path>, file: &MatrixFile) -> Result<(), FormatError> {
    let path = path.as_ref();
    fs::write(path, to_string(file)).map_err(|source| FormatError::Io {
        path: path.display().to_string(),
        source,
    })
}
