//! On-disk source description.
//!
//! ```json
//! {
//!   "dims": { "n_x": 1, "n_s": 1, "n_y": 1 },
//!   "covariance": [[1, 1, 1], [1, 1.5, 1], [1, 1, 2]],
//!   "label": "scalar"
//! }
//! ```

use std::path::Path;

use nalgebra::DMatrix;
use remote_rdf::{validate_spec, Dims, GaussianSourceSpec};
use serde::Deserialize;

use crate::CliError;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct DimsFile {
    n_x: usize,
    n_s: usize,
    n_y: usize,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct SpecFile {
    dims: DimsFile,
    covariance: Vec<Vec<f64>>,
    #[serde(default)]
    label: Option<String>,
}

#[derive(Debug, Clone)]
pub struct LoadedSpec {
    pub spec: GaussianSourceSpec,
    pub label: Option<String>,
}

pub fn load(path: &Path) -> Result<LoadedSpec, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::new(format!("cannot read {}: {e}", path.display())))?;
    parse(&text).map_err(|e| CliError::new(format!("{}: {}", path.display(), e.message)))
}

pub fn parse(text: &str) -> Result<LoadedSpec, CliError> {
    let file: SpecFile =
        serde_json::from_str(text).map_err(|e| CliError::new(format!("invalid spec file: {e}")))?;
    let dims = Dims::new(file.dims.n_x, file.dims.n_s, file.dims.n_y);
    let n = dims.total();
    if file.covariance.len() != n {
        return Err(CliError::new(format!(
            "covariance has {} rows, dims require {n}",
            file.covariance.len()
        )));
    }
    if let Some((i, row)) = file
        .covariance
        .iter()
        .enumerate()
        .find(|(_, r)| r.len() != n)
    {
        return Err(CliError::new(format!(
            "covariance row {i} has {} entries, dims require {n}",
            row.len()
        )));
    }
    let q = DMatrix::from_fn(n, n, |i, j| file.covariance[i][j]);
    let spec = validate_spec(q, dims)
        .map_err(|e| CliError::new(format!("covariance rejected ({}): {e}", e.code())))?;
    Ok(LoadedSpec {
        spec,
        label: file.label,
    })
}
