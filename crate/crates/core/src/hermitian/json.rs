//! JSON layout for matrices and vectors: arrays of `[re, im]` pairs, row-major.

use super::{CMatrix, CVector, C64};
use crate::error::{Error, Result};

pub type MatrixJson = Vec<Vec<[f64; 2]>>;
pub type VectorJson = Vec<[f64; 2]>;

pub fn matrix_to_json(m: &CMatrix) -> MatrixJson {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| [m[(i, j)].re, m[(i, j)].im]).collect())
        .collect()
}

pub fn matrix_from_json(rows: &MatrixJson, field: &str) -> Result<CMatrix> {
    let n = rows.len();
    if n == 0 {
        return Err(Error::schema(field, "empty matrix"));
    }
    let cols = rows[0].len();
    for (i, r) in rows.iter().enumerate() {
        if r.len() != cols {
            return Err(Error::schema(
                format!("{field}[{i}]"),
                format!("row has {} entries, expected {cols}", r.len()),
            ));
        }
    }
    Ok(CMatrix::from_fn(n, cols, |i, j| C64::new(rows[i][j][0], rows[i][j][1])))
}

pub fn vector_to_json(v: &CVector) -> VectorJson {
    v.iter().map(|c| [c.re, c.im]).collect()
}

pub fn vector_from_json(v: &VectorJson) -> CVector {
    CVector::from_iterator(v.len(), v.iter().map(|p| C64::new(p[0], p[1])))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn layout_is_row_major_pairs() {
        let m = CMatrix::from_row_slice(1, 2, &[C64::new(1.0, 2.0), C64::new(3.0, -4.0)]);
        let s = serde_json::to_string(&matrix_to_json(&m)).unwrap();
        assert_eq!(s, "[[[1.0,2.0],[3.0,-4.0]]]");
        let back: MatrixJson = serde_json::from_str(&s).unwrap();
        assert_eq!(matrix_from_json(&back, "m").unwrap(), m);
    }

    #[test]
    fn ragged_rows_are_schema_errors() {
        let rows: MatrixJson = vec![vec![[1.0, 0.0], [0.0, 0.0]], vec![[1.0, 0.0]]];
        assert!(matches!(matrix_from_json(&rows, "forms[0]"), Err(Error::Schema { .. })));
    }
}
