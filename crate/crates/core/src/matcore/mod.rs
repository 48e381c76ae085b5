//! Dense complex Hermitian linear algebra.
//!
//! Everything here works on [`CMat`] (an `nalgebra` dense complex matrix).
//! "Support" always means the span of eigenvectors whose eigenvalue exceeds
//! `eig_zero_tol` times the largest eigenvalue magnitude.

mod eigh;
mod extreal;
pub mod io;

pub use eigh::{eigh, SpectralDecomposition};
pub use extreal::{pow0, ExtReal};

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use std::ops::Deref;

use crate::config;
use crate::error::{Error, Result};

pub type CMat = DMatrix<Complex64>;
pub type CVec = DVector<Complex64>;

pub const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };
pub const ONE: Complex64 = Complex64 { re: 1.0, im: 0.0 };

pub fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

/// (M + M*) / 2.
pub fn hermitize(m: &CMat) -> CMat {
    let mut out = m.clone();
    hermitize_in_place(&mut out);
    out
}

pub(crate) fn hermitize_in_place(m: &mut CMat) {
    let n = m.nrows();
    for i in 0..n {
        m[(i, i)] = c(m[(i, i)].re);
        for j in (i + 1)..n {
            let avg = (m[(i, j)] + m[(j, i)].conj()) * 0.5;
            m[(i, j)] = avg;
            m[(j, i)] = avg.conj();
        }
    }
}

pub fn from_real_rows(rows: &[&[f64]]) -> CMat {
    let r = rows.len();
    let k = rows.first().map_or(0, |row| row.len());
    CMat::from_fn(r, k, |i, j| c(rows[i][j]))
}

pub fn from_diag(d: &[f64]) -> CMat {
    let n = d.len();
    CMat::from_fn(n, n, |i, j| if i == j { c(d[i]) } else { ZERO })
}

/// |v><v|.
pub fn outer(v: &CVec) -> CMat {
    v * v.adjoint()
}

pub fn trace(m: &CMat) -> Complex64 {
    m.diagonal().iter().sum()
}

pub fn trace_re(m: &CMat) -> f64 {
    m.diagonal().iter().map(|z| z.re).sum()
}

/// Re Tr(A B) without forming the product.
pub fn trace_prod_re(a: &CMat, b: &CMat) -> f64 {
    let n = a.nrows();
    let mut s = 0.0;
    for i in 0..n {
        for k in 0..n {
            s += (a[(i, k)] * b[(k, i)]).re;
        }
    }
    s
}

pub fn lambda_min(m: &CMat) -> Result<f64> {
    Ok(eigh(m)?.min())
}

pub fn lambda_max(m: &CMat) -> Result<f64> {
    Ok(eigh(m)?.max())
}

/// Operator (spectral) norm of an arbitrary matrix.
pub fn op_norm(m: &CMat) -> Result<f64> {
    let g = m.adjoint() * m;
    Ok(eigh(&g)?.max().max(0.0).sqrt())
}

/// Smallest eigenvalue of `b - a`; nonnegative iff a <= b in the Loewner order.
pub fn loewner_margin(a: &CMat, b: &CMat) -> Result<f64> {
    lambda_min(&(b - a))
}

/// Applies `f` to eigenvalues above the zero cutoff and `zero_value` to the rest.
pub fn mat_fn(a: &CMat, f: impl Fn(f64) -> f64, zero_value: f64) -> Result<CMat> {
    let d = eigh(a)?;
    let cut = d.zero_cutoff();
    for &l in &d.values {
        if l > cut && !f(l).is_finite() {
            return Err(Error::Domain(format!("function undefined at eigenvalue {l:e}")));
        }
    }
    Ok(d.apply_supported(f, zero_value))
}

/// A^p on the support of A (zero elsewhere); p < 0 gives generalized inverse powers.
pub fn psd_pow(a: &CMat, p: f64) -> Result<CMat> {
    let d = eigh(a)?;
    Ok(d.apply_supported(|l| l.powf(p), 0.0))
}

pub fn support_proj(a: &CMat) -> Result<CMat> {
    let d = eigh(a)?;
    Ok(d.apply_supported(|_| 1.0, 0.0))
}

/// Generalized inverse: invert eigenvalues above the zero cutoff, zero the rest.
pub fn pinv(a: &CMat) -> Result<CMat> {
    psd_pow(a, -1.0)
}

pub fn rank(a: &CMat) -> Result<usize> {
    Ok(eigh(a)?.rank())
}

/// Orthonormal basis (columns) of the support of a PSD matrix.
pub fn support_basis(a: &CMat) -> Result<CMat> {
    Ok(eigh(a)?.support_basis())
}

/// Absolutely continuous part of `a` with respect to `b`: the largest X <= a
/// supported inside supp(b).
pub fn acc_part(a: &PsdMatrix, b: &PsdMatrix) -> Result<PsdMatrix> {
    check_same_dim(a, b)?;
    let n = a.dim();
    let db = eigh(b)?;
    let cut = db.zero_cutoff();
    let (sup, ker): (Vec<usize>, Vec<usize>) = (0..n).partition(|&j| db.values[j] > cut);
    if ker.is_empty() {
        return Ok(a.clone());
    }
    if sup.is_empty() {
        return Ok(PsdMatrix::zeros(n));
    }
    // Schur complement of the kernel block, in the eigenbasis of b.
    let v = db.vectors.select_columns(sup.iter());
    let w = db.vectors.select_columns(ker.iter());
    let av = a.as_mat() * &v;
    let a11 = v.adjoint() * &av;
    let a21 = w.adjoint() * &av;
    let a22 = w.adjoint() * a.as_mat() * &w;
    let s = a11 - a21.adjoint() * pinv(&a22)? * a21;
    // Drop rounding debris relative to the scale of a.
    let floor = config::get().eig_zero_tol * eigh(a)?.scale();
    let ds = eigh(&s)?;
    let s = ds.apply(|l| if l > floor { l } else { 0.0 });
    Ok(PsdMatrix::from_hermitian(&v * s * v.adjoint()))
}

pub fn kron(a: &CMat, b: &CMat) -> CMat {
    a.kronecker(b)
}

/// The n-fold tensor power, refusing results larger than the configured cap.
pub fn kron_power(a: &CMat, n: usize) -> Result<CMat> {
    kron_power_capped(a, n, config::get().dim_cap)
}

pub fn kron_power_capped(a: &CMat, n: usize, cap: usize) -> Result<CMat> {
    if n == 0 {
        return Err(Error::Domain("tensor power needs n >= 1".into()));
    }
    let d = a.nrows();
    let needed = d.checked_pow(n as u32).unwrap_or(usize::MAX);
    if needed > cap {
        return Err(Error::Resource { needed, cap });
    }
    let mut out = a.clone();
    for _ in 1..n {
        out = out.kronecker(a);
    }
    Ok(out)
}

pub fn direct_sum(blocks: &[CMat]) -> CMat {
    let rows: usize = blocks.iter().map(|b| b.nrows()).sum();
    let cols: usize = blocks.iter().map(|b| b.ncols()).sum();
    let mut out = CMat::zeros(rows, cols);
    let (mut r0, mut c0) = (0, 0);
    for b in blocks {
        out.view_mut((r0, c0), (b.nrows(), b.ncols())).copy_from(b);
        r0 += b.nrows();
        c0 += b.ncols();
    }
    out
}

/// Traces out subsystem `traced` (0-based) of a matrix on the product of `dims`.
pub fn partial_trace(m: &CMat, dims: &[usize], traced: usize) -> Result<CMat> {
    let total: usize = dims.iter().product();
    if m.nrows() != total || m.ncols() != total {
        return Err(Error::Dimension(format!(
            "partial trace: matrix is {}x{}, dims {:?} give {}",
            m.nrows(),
            m.ncols(),
            dims,
            total
        )));
    }
    if traced >= dims.len() {
        return Err(Error::Dimension(format!(
            "partial trace: subsystem {traced} out of range for {} factors",
            dims.len()
        )));
    }
    let before: usize = dims[..traced].iter().product();
    let mid = dims[traced];
    let after: usize = dims[traced + 1..].iter().product();
    let out_dim = before * after;
    let mut out = CMat::zeros(out_dim, out_dim);
    for i1 in 0..before {
        for i2 in 0..after {
            for j1 in 0..before {
                for j2 in 0..after {
                    let mut s = ZERO;
                    for k in 0..mid {
                        s += m[((i1 * mid + k) * after + i2, (j1 * mid + k) * after + j2)];
                    }
                    out[(i1 * after + i2, j1 * after + j2)] = s;
                }
            }
        }
    }
    Ok(out)
}

pub(crate) fn check_same_dim(a: &CMat, b: &CMat) -> Result<()> {
    if a.nrows() != b.nrows() {
        return Err(Error::Dimension(format!(
            "operands have dims {} and {}",
            a.nrows(),
            b.nrows()
        )));
    }
    Ok(())
}

/// Dense Hermitian positive semi-definite matrix.
///
/// Construction symmetrizes exactly; `new` additionally validates the spectrum.
#[derive(Clone, Debug, PartialEq)]
pub struct PsdMatrix(CMat);

impl PsdMatrix {
    pub fn new(m: CMat) -> Result<Self> {
        if m.nrows() != m.ncols() {
            return Err(Error::Dimension(format!(
                "PSD matrix must be square, got {}x{}",
                m.nrows(),
                m.ncols()
            )));
        }
        let h = hermitize(&m);
        let d = eigh(&h)?;
        let tol = config::get().psd_tol * d.scale();
        if d.min() < -tol {
            return Err(Error::Domain(format!(
                "matrix is not positive semi-definite (smallest eigenvalue {:e})",
                d.min()
            )));
        }
        Ok(PsdMatrix(h))
    }

    /// Symmetrizes without checking the spectrum. For results that are PSD by
    /// construction up to rounding.
    pub fn from_hermitian(m: CMat) -> Self {
        PsdMatrix(hermitize(&m))
    }

    pub fn from_diag(d: &[f64]) -> Result<Self> {
        Self::new(from_diag(d))
    }

    pub fn identity(n: usize) -> Self {
        PsdMatrix(CMat::identity(n, n))
    }

    pub fn zeros(n: usize) -> Self {
        PsdMatrix(CMat::zeros(n, n))
    }

    /// Rank-one |v><v|.
    pub fn projector(v: &CVec) -> Self {
        PsdMatrix::from_hermitian(outer(v))
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn as_mat(&self) -> &CMat {
        &self.0
    }

    pub fn into_inner(self) -> CMat {
        self.0
    }

    pub fn trace(&self) -> f64 {
        trace_re(&self.0)
    }

    pub fn scale(&self, s: f64) -> PsdMatrix {
        PsdMatrix(&self.0 * c(s.max(0.0)))
    }

    pub fn kron(&self, other: &PsdMatrix) -> PsdMatrix {
        PsdMatrix(kron(&self.0, &other.0))
    }

    pub fn kron_power(&self, n: usize) -> Result<PsdMatrix> {
        Ok(PsdMatrix(kron_power(&self.0, n)?))
    }

    pub fn eigh(&self) -> Result<SpectralDecomposition> {
        eigh(&self.0)
    }

    pub fn support(&self) -> Result<CMat> {
        support_proj(&self.0)
    }

    pub fn is_positive_definite(&self) -> Result<bool> {
        Ok(eigh(&self.0)?.rank() == self.dim())
    }
}

impl Deref for PsdMatrix {
    type Target = CMat;
    fn deref(&self) -> &CMat {
        &self.0
    }
}

impl AsRef<CMat> for PsdMatrix {
    fn as_ref(&self) -> &CMat {
        &self.0
    }
}
