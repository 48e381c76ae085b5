//! Cyclic Jacobi eigensolver for dense complex Hermitian matrices.

use num_complex::Complex64;

use super::CMat;
use crate::error::{Error, Result};

const MAX_SWEEPS: usize = 100;

/// Eigenvalues in ascending order with the matching unitary of column eigenvectors.
#[derive(Clone, Debug)]
pub struct SpectralDecomposition {
    pub values: Vec<f64>,
    pub vectors: CMat,
}

impl SpectralDecomposition {
    pub fn dim(&self) -> usize {
        self.values.len()
    }

    /// Largest eigenvalue magnitude.
    pub fn scale(&self) -> f64 {
        self.values.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    /// Absolute cutoff below which an eigenvalue counts as zero.
    pub fn zero_cutoff(&self) -> f64 {
        crate::config::get().eig_zero_tol * self.scale()
    }

    pub fn min(&self) -> f64 {
        self.values.first().copied().unwrap_or(0.0)
    }

    pub fn max(&self) -> f64 {
        self.values.last().copied().unwrap_or(0.0)
    }

    /// U diag(f(lambda)) U*.
    pub fn apply(&self, f: impl Fn(f64) -> f64) -> CMat {
        let n = self.dim();
        let mut scaled = self.vectors.clone();
        for (j, &l) in self.values.iter().enumerate() {
            let fl = f(l);
            for i in 0..n {
                scaled[(i, j)] *= fl;
            }
        }
        let mut out = &scaled * self.vectors.adjoint();
        super::hermitize_in_place(&mut out);
        out
    }

    /// Like `apply`, but eigenvalues at or below the zero cutoff map to `zero_value`.
    pub fn apply_supported(&self, f: impl Fn(f64) -> f64, zero_value: f64) -> CMat {
        let cut = self.zero_cutoff();
        self.apply(|l| if l > cut { f(l) } else { zero_value })
    }

    /// Columns of U spanning the support (eigenvalues above the zero cutoff).
    pub fn support_basis(&self) -> CMat {
        let cut = self.zero_cutoff();
        let idx: Vec<usize> = (0..self.dim()).filter(|&j| self.values[j] > cut).collect();
        self.vectors.select_columns(idx.iter())
    }

    pub fn rank(&self) -> usize {
        let cut = self.zero_cutoff();
        self.values.iter().filter(|&&l| l > cut).count()
    }
}

/// Eigendecomposition of a Hermitian matrix. The input is symmetrized first.
pub fn eigh(a: &CMat) -> Result<SpectralDecomposition> {
    let n = a.nrows();
    if a.ncols() != n {
        return Err(Error::Dimension(format!(
            "eigh needs a square matrix, got {}x{}",
            n,
            a.ncols()
        )));
    }
    if n == 0 {
        return Ok(SpectralDecomposition {
            values: vec![],
            vectors: CMat::zeros(0, 0),
        });
    }
    let mut m = a.clone();
    super::hermitize_in_place(&mut m);
    if m.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::Numerical {
            message: "non-finite matrix entry".into(),
            residual: f64::NAN,
        });
    }
    let mut v = CMat::identity(n, n);
    let fro0 = m.norm();
    let floor = fro0 * 1e-18;
    let eps = f64::EPSILON;

    // nalgebra storage is column-major: (i, j) lives at i + j * n.
    let ms = m.as_mut_slice();
    let vs = v.as_mut_slice();
    let mut converged = false;
    for _sweep in 0..MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = ms[p + q * n];
                let abs = apq.norm();
                if abs == 0.0 {
                    continue;
                }
                let app = ms[p + p * n].re;
                let aqq = ms[q + q * n].re;
                if abs <= floor || abs <= eps * (app.abs() * aqq.abs()).sqrt() {
                    ms[p + q * n] = Complex64::new(0.0, 0.0);
                    ms[q + p * n] = Complex64::new(0.0, 0.0);
                    continue;
                }
                rotated = true;
                let ph = apq / abs;
                let tau = (aqq - app) / (2.0 * abs);
                let t = if tau >= 0.0 {
                    1.0 / (tau + (1.0 + tau * tau).sqrt())
                } else {
                    -1.0 / (-tau + (1.0 + tau * tau).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                let jpp = Complex64::new(c, 0.0);
                let jpq = Complex64::new(s, 0.0);
                let jqp = -ph.conj() * s;
                let jqq = ph.conj() * c;
                for k in 0..n {
                    let kp = ms[k + p * n];
                    let kq = ms[k + q * n];
                    ms[k + p * n] = kp * jpp + kq * jqp;
                    ms[k + q * n] = kp * jpq + kq * jqq;
                }
                for k in 0..n {
                    let pk = ms[p + k * n];
                    let qk = ms[q + k * n];
                    ms[p + k * n] = jpp.conj() * pk + jqp.conj() * qk;
                    ms[q + k * n] = jpq.conj() * pk + jqq.conj() * qk;
                }
                ms[p + q * n] = Complex64::new(0.0, 0.0);
                ms[q + p * n] = Complex64::new(0.0, 0.0);
                ms[p + p * n] = Complex64::new(app - t * abs, 0.0);
                ms[q + q * n] = Complex64::new(aqq + t * abs, 0.0);
                for k in 0..n {
                    let kp = vs[k + p * n];
                    let kq = vs[k + q * n];
                    vs[k + p * n] = kp * jpp + kq * jqp;
                    vs[k + q * n] = kp * jpq + kq * jqq;
                }
            }
        }
        if !rotated {
            converged = true;
            break;
        }
    }
    if !converged {
        let mut off = 0.0;
        for j in 0..n {
            for i in 0..n {
                if i != j {
                    off += ms[i + j * n].norm_sqr();
                }
            }
        }
        return Err(Error::Numerical {
            message: format!("Jacobi did not converge in {MAX_SWEEPS} sweeps"),
            residual: off.sqrt(),
        });
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| ms[i + i * n].re.total_cmp(&ms[j + j * n].re));
    let values = order.iter().map(|&i| ms[i + i * n].re).collect();
    let vectors = v.select_columns(order.iter());
    Ok(SpectralDecomposition { values, vectors })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matcore::{from_real_rows, hermitize};
    use crate::random;
    use rand::Rng;

    fn residual(a: &CMat, d: &SpectralDecomposition) -> (f64, f64) {
        let rec = d.apply(|x| x);
        let n = a.nrows();
        let unit = d.vectors.adjoint() * &d.vectors - CMat::identity(n, n);
        ((rec - a).norm(), unit.norm())
    }

    #[test]
    fn diagonal_input() {
        let a = from_real_rows(&[&[3.0, 0.0], &[0.0, 1.0]]);
        let d = eigh(&a).unwrap();
        assert_eq!(d.values, vec![1.0, 3.0]);
        assert!((d.vectors[(1, 0)].norm() - 1.0).abs() < 1e-15);
        assert!((d.vectors[(0, 1)].norm() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn rank_one_projector() {
        let a = from_real_rows(&[&[0.5, 0.5], &[0.5, 0.5]]);
        let d = eigh(&a).unwrap();
        assert!(d.values[0].abs() < 1e-15);
        assert!((d.values[1] - 1.0).abs() < 1e-15);
        let v = d.vectors.column(1);
        let r = std::f64::consts::FRAC_1_SQRT_2;
        assert!((v[0].norm() - r).abs() < 1e-12 && (v[1].norm() - r).abs() < 1e-12);
        assert!((v[0] - v[1]).norm() < 1e-12);
    }

    #[test]
    fn random_hermitian_reconstruction() {
        let mut rng = random::rng(11);
        for _ in 0..1000 {
            let n = rng.random_range(1..=8);
            let g = random::complex_gaussian(&mut rng, n, n);
            let a = hermitize(&g);
            let d = eigh(&a).unwrap();
            let (res, unit) = residual(&a, &d);
            assert!(res <= 1e-10 * a.norm().max(1.0), "residual {res}");
            assert!(unit <= 1e-12, "unitarity {unit}");
            assert!(d.values.windows(2).all(|w| w[0] <= w[1]));
        }
    }

    #[test]
    fn agrees_with_nalgebra_symmetric_eigen() {
        let mut rng = random::rng(12);
        for _ in 0..200 {
            let n = rng.random_range(1..=7);
            let a = hermitize(&random::complex_gaussian(&mut rng, n, n));
            let ours = eigh(&a).unwrap().values;
            let mut theirs: Vec<f64> = a.clone().symmetric_eigen().eigenvalues.iter().copied().collect();
            theirs.sort_by(f64::total_cmp);
            for (x, y) in ours.iter().zip(&theirs) {
                assert!((x - y).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn degenerate_and_zero() {
        let d = eigh(&CMat::zeros(3, 3)).unwrap();
        assert_eq!(d.values, vec![0.0; 3]);
        let d = eigh(&CMat::identity(4, 4)).unwrap();
        assert_eq!(d.values, vec![1.0; 4]);
    }
}
