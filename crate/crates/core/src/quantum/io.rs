//! Text serialization: matrices are nested row lists of `[re, im]` pairs.
//! Loading always goes through the validating constructors.

use serde::{Deserialize, Serialize};

use super::matrix::{c, CMatrix, CVector};
use super::measurement::{BinaryPvm, Reflection};
use super::state::{DensityOperator, PureState};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MatrixRecord {
    pub entries: Vec<Vec<[f64; 2]>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DensityRecord {
    pub system_dims: Vec<usize>,
    pub entries: Vec<Vec<[f64; 2]>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PureStateRecord {
    pub system_dims: Vec<usize>,
    pub amplitudes: Vec<[f64; 2]>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PvmRecord {
    pub effects: [MatrixRecord; 2],
}

pub fn matrix_to_rows(m: &CMatrix) -> Vec<Vec<[f64; 2]>> {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| [m[(i, j)].re, m[(i, j)].im]).collect())
        .collect()
}

pub fn rows_to_matrix(rows: &[Vec<[f64; 2]>]) -> Result<CMatrix> {
    let r = rows.len();
    let cols = rows.first().map_or(0, |row| row.len());
    if r == 0 || cols == 0 {
        return Err(Error::Parse("empty matrix".into()));
    }
    if rows.iter().any(|row| row.len() != cols) {
        return Err(Error::Parse("ragged matrix rows".into()));
    }
    if rows.iter().flatten().flatten().any(|x| !x.is_finite()) {
        return Err(Error::Parse("non-finite entry".into()));
    }
    Ok(CMatrix::from_fn(r, cols, |i, j| c(rows[i][j][0], rows[i][j][1])))
}

impl From<CMatrix> for MatrixRecord {
    fn from(m: CMatrix) -> Self {
        Self { entries: matrix_to_rows(&m) }
    }
}

impl TryFrom<MatrixRecord> for CMatrix {
    type Error = Error;
    fn try_from(r: MatrixRecord) -> Result<Self> {
        rows_to_matrix(&r.entries)
    }
}

impl From<Reflection> for MatrixRecord {
    fn from(r: Reflection) -> Self {
        Self { entries: matrix_to_rows(r.matrix()) }
    }
}

impl TryFrom<MatrixRecord> for Reflection {
    type Error = Error;
    fn try_from(r: MatrixRecord) -> Result<Self> {
        Reflection::new(rows_to_matrix(&r.entries)?)
    }
}

impl From<DensityOperator> for DensityRecord {
    fn from(d: DensityOperator) -> Self {
        Self { system_dims: d.system_dims().to_vec(), entries: matrix_to_rows(d.matrix()) }
    }
}

impl TryFrom<DensityRecord> for DensityOperator {
    type Error = Error;
    fn try_from(r: DensityRecord) -> Result<Self> {
        DensityOperator::new(rows_to_matrix(&r.entries)?, r.system_dims)
    }
}

impl From<PureState> for PureStateRecord {
    fn from(p: PureState) -> Self {
        Self {
            system_dims: p.system_dims().to_vec(),
            amplitudes: p.amplitudes().iter().map(|z| [z.re, z.im]).collect(),
        }
    }
}

impl TryFrom<PureStateRecord> for PureState {
    type Error = Error;
    fn try_from(r: PureStateRecord) -> Result<Self> {
        if r.amplitudes.iter().flatten().any(|x| !x.is_finite()) {
            return Err(Error::Parse("non-finite amplitude".into()));
        }
        let v = CVector::from_iterator(r.amplitudes.len(), r.amplitudes.iter().map(|a| c(a[0], a[1])));
        PureState::new(v, r.system_dims)
    }
}

impl From<BinaryPvm> for PvmRecord {
    fn from(p: BinaryPvm) -> Self {
        let [m0, m1] = p.effects().clone();
        Self { effects: [m0.into(), m1.into()] }
    }
}

impl TryFrom<PvmRecord> for BinaryPvm {
    type Error = Error;
    fn try_from(r: PvmRecord) -> Result<Self> {
        let [a, b] = r.effects;
        BinaryPvm::new(rows_to_matrix(&a.entries)?, rows_to_matrix(&b.entries)?)
    }
}

pub fn from_json<T: serde::de::DeserializeOwned>(text: &str) -> Result<T> {
    serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))
}

pub fn to_json<T: Serialize>(value: &T) -> Result<String> {
    serde_json::to_string_pretty(value).map_err(|e| Error::Parse(e.to_string()))
}
