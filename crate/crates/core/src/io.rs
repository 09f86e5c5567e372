//! JSON files for states and measurements.
//!
//! A state file is `{"dims":[2,2],"label":"phi_plus","matrix":[[[re,im],…],…]}`
//! with `matrix[i][j]` the entry `(i, j)`. A measurement file is a list of
//! POVMs, each a list of matrices in the same `[re, im]` layout. Floats are
//! written at full round-trip precision.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::bell::Measurement;
use crate::error::{Error, Result};
use crate::linalg::{ComplexMatrix, HermitianOperator};
use crate::states::DensityMatrix;

type PairMatrix = Vec<Vec<[f64; 2]>>;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StateFile {
    pub dims: Vec<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
    pub matrix: PairMatrix,
}

fn to_pairs(m: &ComplexMatrix) -> PairMatrix {
    (0..m.rows()).map(|i| (0..m.cols()).map(|j| [m[(i, j)].re, m[(i, j)].im]).collect()).collect()
}

fn from_pairs(rows: &PairMatrix) -> Result<ComplexMatrix> {
    if rows.iter().any(|r| r.len() != rows.len()) {
        return Err(Error::Shape("matrix rows must all have length equal to the row count".into()));
    }
    ComplexMatrix::from_pairs(rows)
}

impl StateFile {
    pub fn from_state(rho: &DensityMatrix, label: Option<&str>) -> Self {
        Self { dims: rho.dims().to_vec(), label: label.map(str::to_string), matrix: to_pairs(rho.matrix()) }
    }

    pub fn to_state(&self) -> Result<DensityMatrix> {
        let m = from_pairs(&self.matrix)?;
        let side: usize = self.dims.iter().product();
        if self.dims.is_empty() || m.rows() != side {
            return Err(Error::Shape(format!("dims {:?} need a {side}x{side} matrix, file has {}x{}", self.dims, m.rows(), m.cols())));
        }
        DensityMatrix::new(HermitianOperator::new(self.dims.clone(), m)?)
    }
}

pub fn parse_state(json: &str) -> Result<DensityMatrix> {
    serde_json::from_str::<StateFile>(json)?.to_state()
}

pub fn state_to_json(rho: &DensityMatrix, label: Option<&str>) -> Result<String> {
    Ok(serde_json::to_string(&StateFile::from_state(rho, label))?)
}

pub fn load_state(path: impl AsRef<Path>) -> Result<DensityMatrix> {
    parse_state(&fs::read_to_string(path)?)
}

/// Label stored in a state file, if any.
pub fn load_label(path: impl AsRef<Path>) -> Result<Option<String>> {
    Ok(serde_json::from_str::<StateFile>(&fs::read_to_string(path)?)?.label)
}

pub fn save_state(path: impl AsRef<Path>, rho: &DensityMatrix, label: Option<&str>) -> Result<()> {
    fs::write(path, state_to_json(rho, label)?)?;
    Ok(())
}

pub fn parse_measurements(json: &str) -> Result<Vec<Measurement>> {
    let raw: Vec<Vec<PairMatrix>> = serde_json::from_str(json)?;
    raw.iter()
        .map(|povm| Measurement::new(povm.iter().map(from_pairs).collect::<Result<_>>()?))
        .collect()
}

pub fn measurements_to_json(ms: &[Measurement]) -> Result<String> {
    let raw: Vec<Vec<PairMatrix>> = ms.iter().map(|m| m.elements().iter().map(to_pairs).collect()).collect();
    Ok(serde_json::to_string(&raw)?)
}

pub fn load_measurements(path: impl AsRef<Path>) -> Result<Vec<Measurement>> {
    parse_measurements(&fs::read_to_string(path)?)
}

pub fn save_measurements(path: impl AsRef<Path>, ms: &[Measurement]) -> Result<()> {
    fs::write(path, measurements_to_json(ms)?)?;
    Ok(())
}
