//! JSON state files: `{"dims": [2, 2], "matrix": [[[re, im], ...], ...]}`.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{CMatrix, C64};
use crate::state::QuantumState;

#[derive(Serialize, Deserialize)]
struct StateFile {
    dims: Vec<usize>,
    matrix: Vec<Vec<[f64; 2]>>,
}

/// Serializes with 17 significant digits, enough to round-trip every `f64`.
pub fn to_string(state: &QuantumState) -> String {
    let m = state.matrix();
    let dims: Vec<String> = state.dims().iter().map(|d| d.to_string()).collect();
    let rows: Vec<String> = (0..m.nrows())
        .map(|r| {
            let entries: Vec<String> = (0..m.ncols())
                .map(|c| format!("[{:.16e}, {:.16e}]", m[(r, c)].re, m[(r, c)].im))
                .collect();
            format!("    [{}]", entries.join(", "))
        })
        .collect();
    format!(
        "{{\n  \"dims\": [{}],\n  \"matrix\": [\n{}\n  ]\n}}\n",
        dims.join(", "),
        rows.join(",\n")
    )
}

/// Parses and validates a state.
pub fn from_str(text: &str) -> Result<QuantumState> {
    let file: StateFile = serde_json::from_str(text).map_err(|e| Error::Format(e.to_string()))?;
    let d = file.matrix.len();
    if file.matrix.iter().any(|row| row.len() != d) {
        return Err(Error::Format("matrix must be square".into()));
    }
    let matrix = CMatrix::from_fn(d, d, |r, c| {
        let [re, im] = file.matrix[r][c];
        C64::new(re, im)
    });
    QuantumState::new(file.dims, matrix)
}

pub fn write_state(path: impl AsRef<Path>, state: &QuantumState) -> Result<()> {
    fs::write(path, to_string(state))?;
    Ok(())
}

pub fn read_state(path: impl AsRef<Path>) -> Result<QuantumState> {
    from_str(&fs::read_to_string(path)?)
}
