//! JSON representation of complex matrices: a list of rows, each entry an
//! `[re, im]` pair.

use num_complex::Complex;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::linalg::ComplexMatrix;
use crate::scalar::Real;

pub type MatrixRepr = Vec<Vec<[f64; 2]>>;

pub fn to_repr<T: Real>(m: &ComplexMatrix<T>) -> MatrixRepr {
    (0..m.nrows())
        .map(|i| {
            (0..m.ncols())
                .map(|j| [m[(i, j)].re.as_f64(), m[(i, j)].im.as_f64()])
                .collect()
        })
        .collect()
}

pub fn from_repr<T: Real>(rows: &MatrixRepr) -> Result<ComplexMatrix<T>> {
    let n = rows.len();
    let cols = rows.first().map_or(0, Vec::len);
    if rows.iter().any(|r| r.len() != cols) {
        return Err(Error::Config("ragged matrix rows".into()));
    }
    if rows.iter().flatten().flatten().any(|x| !x.is_finite()) {
        return Err(Error::Config("non-finite matrix entry".into()));
    }
    Ok(ComplexMatrix::from_fn(n, cols, |i, j| {
        Complex::new(T::lit(rows[i][j][0]), T::lit(rows[i][j][1]))
    }))
}

/// `#[serde(with = "wire::matrix")]` adapter.
pub mod matrix {
    use super::*;

    pub fn serialize<T: Real, S: Serializer>(m: &ComplexMatrix<T>, s: S) -> std::result::Result<S::Ok, S::Error> {
        to_repr(m).serialize(s)
    }

    pub fn deserialize<'de, T: Real, D: Deserializer<'de>>(d: D) -> std::result::Result<ComplexMatrix<T>, D::Error> {
        let rows = MatrixRepr::deserialize(d)?;
        from_repr(&rows).map_err(serde::de::Error::custom)
    }
}

/// `#[serde(with = "wire::matrix_list")]` adapter.
pub mod matrix_list {
    use super::*;

    pub fn serialize<T: Real, S: Serializer>(ms: &[ComplexMatrix<T>], s: S) -> std::result::Result<S::Ok, S::Error> {
        ms.iter().map(to_repr).collect::<Vec<_>>().serialize(s)
    }

    pub fn deserialize<'de, T: Real, D: Deserializer<'de>>(d: D) -> std::result::Result<Vec<ComplexMatrix<T>>, D::Error> {
        let list = Vec::<MatrixRepr>::deserialize(d)?;
        list.iter()
            .map(from_repr)
            .collect::<Result<Vec<_>>>()
            .map_err(serde::de::Error::custom)
    }
}
