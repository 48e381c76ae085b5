//! JSON encoding of matrices: `{"dim": n, "re": [...], "im": [...]}`, row-major.
//!
//! Rectangular matrices (Kraus operators) use `{"rows": r, "cols": c, ...}`.
//! `im` may be omitted for real matrices.

use num_complex::Complex64;
use serde_json::{json, Value};
use std::path::Path;

use super::{hermitize, CMat, PsdMatrix};
use crate::error::{Error, Result};

fn field_usize(obj: &serde_json::Map<String, Value>, key: &str, pointer: &str) -> Result<Option<usize>> {
    match obj.get(key) {
        None => Ok(None),
        Some(v) => v
            .as_u64()
            .filter(|&n| n > 0)
            .map(|n| Some(n as usize))
            .ok_or_else(|| Error::input(format!("{pointer}/{key}"), "expected a positive integer")),
    }
}

fn field_reals(obj: &serde_json::Map<String, Value>, key: &str, pointer: &str, len: usize) -> Result<Vec<f64>> {
    let p = format!("{pointer}/{key}");
    let arr = match obj.get(key) {
        None if key == "im" => return Ok(vec![0.0; len]),
        None => return Err(Error::input(p, "missing field")),
        Some(v) => v.as_array().ok_or_else(|| Error::input(p.clone(), "expected an array of numbers"))?,
    };
    if arr.len() != len {
        return Err(Error::input(p, format!("expected {len} entries, found {}", arr.len())));
    }
    arr.iter()
        .enumerate()
        .map(|(i, v)| {
            v.as_f64()
                .filter(|x| x.is_finite())
                .ok_or_else(|| Error::input(format!("{p}/{i}"), "expected a finite number"))
        })
        .collect()
}

/// Parses a (possibly rectangular) complex matrix. `pointer` locates the value
/// in the enclosing document for error messages.
pub fn matrix_from_json(v: &Value, pointer: &str) -> Result<CMat> {
    let obj = v
        .as_object()
        .ok_or_else(|| Error::input(pointer, "expected a matrix object"))?;
    let (rows, cols) = match field_usize(obj, "dim", pointer)? {
        Some(d) => (d, d),
        None => {
            let r = field_usize(obj, "rows", pointer)?
                .ok_or_else(|| Error::input(format!("{pointer}/dim"), "missing field"))?;
            let c = field_usize(obj, "cols", pointer)?
                .ok_or_else(|| Error::input(format!("{pointer}/cols"), "missing field"))?;
            (r, c)
        }
    };
    let re = field_reals(obj, "re", pointer, rows * cols)?;
    let im = field_reals(obj, "im", pointer, rows * cols)?;
    Ok(CMat::from_fn(rows, cols, |i, j| {
        Complex64::new(re[i * cols + j], im[i * cols + j])
    }))
}

/// Parses a square matrix, symmetrizes it and validates positive semi-definiteness.
pub fn psd_from_json(v: &Value, pointer: &str) -> Result<PsdMatrix> {
    let m = matrix_from_json(v, pointer)?;
    if m.nrows() != m.ncols() {
        return Err(Error::input(pointer, "expected a square matrix"));
    }
    let asym = (&m - m.adjoint()).norm();
    if asym > 1e-8 * m.norm().max(1.0) {
        return Err(Error::input(
            pointer,
            format!("matrix is not Hermitian (|M - M*| = {asym:e})"),
        ));
    }
    PsdMatrix::new(hermitize(&m)).map_err(|e| Error::input(pointer, e.to_string()))
}

pub fn matrix_to_json(m: &CMat) -> Value {
    let (r, c) = (m.nrows(), m.ncols());
    let mut re = Vec::with_capacity(r * c);
    let mut im = Vec::with_capacity(r * c);
    for i in 0..r {
        for j in 0..c {
            re.push(m[(i, j)].re);
            im.push(m[(i, j)].im);
        }
    }
    if r == c {
        json!({"dim": r, "re": re, "im": im})
    } else {
        json!({"rows": r, "cols": c, "re": re, "im": im})
    }
}

pub fn read_json_file(path: &Path) -> Result<Value> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::input(path.display().to_string(), format!("cannot read file: {e}")))?;
    serde_json::from_str(&text)
        .map_err(|e| Error::input(path.display().to_string(), format!("invalid JSON: {e}")))
}

pub fn read_psd_file(path: &Path) -> Result<PsdMatrix> {
    let v = read_json_file(path)?;
    psd_from_json(&v, &path.display().to_string())
}
