//! Petz and sandwiched Renyi divergences, Umegaki relative entropy,
//! max-relative entropy and the Hoeffding divergence / anti-divergence.
//!
//! All logarithms are natural. Second arguments need not be normalized.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::matcore::{check_same_dim, eigh, support_proj, CMat, ExtReal, PsdMatrix, SpectralDecomposition};
use crate::means::joint_diagonalize;

/// Number of interior grid points for the Hoeffding suprema.
pub const HOEFFDING_GRID: usize = 512;
/// Golden-section stopping width.
pub const HOEFFDING_REFINE_TOL: f64 = 1e-8;
/// Relative tie tolerance for the argmax set of the max-relative entropy.
pub const TIE_TOL: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct HoeffdingResult {
    pub value: ExtReal,
    /// Optimal alpha; 1 or +inf when the supremum is the corresponding limit.
    pub maximizer_alpha: ExtReal,
    pub grid_resolution: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MaxRelEntropy {
    pub value: ExtReal,
    /// Indices in the joint eigenbasis (the standard basis for diagonal input).
    pub argmax: Vec<usize>,
    pub r_inf: ExtReal,
}

fn log_sum_exp(terms: impl Iterator<Item = f64>) -> f64 {
    let v: Vec<f64> = terms.filter(|x| *x > f64::NEG_INFINITY).collect();
    let m = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if m.is_infinite() {
        return m;
    }
    m + v.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}

fn supported_logs(d: &SpectralDecomposition) -> Vec<Option<f64>> {
    let cut = d.zero_cutoff();
    d.values.iter().map(|&l| (l > cut).then(|| l.ln())).collect()
}

fn proj_leq(p: &CMat, q: &CMat) -> bool {
    (p - q * p).norm() <= 1e-8
}

/// Commuting pair given as weighted functions on a finite set: point x carries
/// multiplicity `mult[x]` and values `p[x]`, `q[x]`. Multiplicities let k-copy
/// product distributions be handled through their type classes.
#[derive(Clone, Debug)]
pub struct ClassicalPair {
    mult: Vec<f64>,
    p: Vec<f64>,
    q: Vec<f64>,
}

impl ClassicalPair {
    pub fn new(p: Vec<f64>, q: Vec<f64>) -> Result<Self> {
        let mult = vec![1.0; p.len()];
        Self::with_multiplicities(mult, p, q)
    }

    pub fn with_multiplicities(mult: Vec<f64>, p: Vec<f64>, q: Vec<f64>) -> Result<Self> {
        if mult.len() != p.len() || p.len() != q.len() {
            return Err(Error::Dimension("classical pair vectors differ in length".into()));
        }
        if p.iter().chain(&q).chain(&mult).any(|x| !(*x >= 0.0) || !x.is_finite()) {
            return Err(Error::Domain("classical pair entries must be finite and nonnegative".into()));
        }
        if p.iter().all(|x| *x == 0.0) || q.iter().all(|x| *x == 0.0) {
            return Err(Error::Domain("classical pair arguments must be nonzero".into()));
        }
        Ok(ClassicalPair { mult, p, q })
    }

    fn support_ok(&self) -> bool {
        self.p.iter().zip(&self.q).all(|(&a, &b)| a == 0.0 || b > 0.0)
    }

    /// log sum mult p^alpha q^(1-alpha), restricted to the common support.
    pub fn log_q(&self, alpha: f64) -> f64 {
        log_sum_exp((0..self.p.len()).filter(|&x| self.p[x] > 0.0 && self.q[x] > 0.0 && self.mult[x] > 0.0).map(|x| self.mult[x].ln() + alpha * self.p[x].ln() + (1.0 - alpha) * self.q[x].ln()))
    }

    pub fn renyi(&self, alpha: f64) -> Result<ExtReal> {
        if !(alpha > 0.0) || alpha == 1.0 || !alpha.is_finite() {
            return Err(Error::Domain(format!("Renyi order {alpha} must be positive, finite and not 1")));
        }
        if alpha > 1.0 && !self.support_ok() {
            return Ok(ExtReal::PosInf);
        }
        Ok(ExtReal::from_f64(self.log_q(alpha)).scale(1.0 / (alpha - 1.0)))
    }

    pub fn relative_entropy(&self) -> ExtReal {
        if !self.support_ok() {
            return ExtReal::PosInf;
        }
        let s: f64 = (0..self.p.len())
            .filter(|&x| self.p[x] > 0.0)
            .map(|x| self.mult[x] * self.p[x] * (self.p[x] / self.q[x]).ln())
            .sum();
        ExtReal::Finite(s)
    }

    pub fn max_relative_entropy(&self) -> MaxRelEntropy {
        let support: Vec<usize> = (0..self.p.len()).filter(|&x| self.p[x] > 0.0 && self.mult[x] > 0.0).collect();
        let bad: Vec<usize> = support.iter().copied().filter(|&x| self.q[x] == 0.0).collect();
        if !bad.is_empty() {
            return MaxRelEntropy {
                value: ExtReal::PosInf,
                argmax: bad,
                r_inf: ExtReal::PosInf,
            };
        }
        let logs: Vec<f64> = support.iter().map(|&x| (self.p[x] / self.q[x]).ln()).collect();
        let best = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let argmax: Vec<usize> = support
            .iter()
            .zip(&logs)
            .filter(|(_, &l)| best - l <= TIE_TOL * best.abs().max(1.0))
            .map(|(&x, _)| x)
            .collect();
        let mass: f64 = argmax.iter().map(|&x| self.mult[x] * self.q[x]).sum();
        MaxRelEntropy {
            value: ExtReal::Finite(best),
            argmax,
            r_inf: ExtReal::ln(mass).neg(),
        }
    }

    fn log_mass_p(&self) -> f64 {
        (0..self.p.len()).map(|x| self.mult[x] * self.p[x]).sum::<f64>().ln()
    }

    fn log_q_at_zero(&self) -> f64 {
        log_sum_exp((0..self.p.len()).filter(|&x| self.p[x] > 0.0 && self.q[x] > 0.0).map(|x| self.mult[x].ln() + self.q[x].ln()))
    }

    fn log_q_at_one(&self) -> f64 {
        log_sum_exp((0..self.p.len()).filter(|&x| self.p[x] > 0.0 && self.q[x] > 0.0).map(|x| self.mult[x].ln() + self.p[x].ln()))
    }

    pub fn hoeffding(&self, r: f64) -> HoeffdingResult {
        petz_sup(r, |a| self.log_q(a), self.log_q_at_zero(), self.log_q_at_one())
    }

    pub fn hoeffding_star(&self, r: f64) -> HoeffdingResult {
        if !self.support_ok() {
            return star_unbounded();
        }
        let dmax = self.max_relative_entropy().value.to_f64();
        star_sup(r, |a| self.log_q(a), self.log_mass_p(), dmax)
    }
}

/// Precomputed data for Petz quantities of a fixed pair.
struct PetzPair {
    la: Vec<Option<f64>>,
    lb: Vec<Option<f64>>,
    overlap: Vec<Vec<f64>>,
}

impl PetzPair {
    fn new(a: &PsdMatrix, b: &PsdMatrix) -> Result<Self> {
        check_same_dim(a, b)?;
        Ok(Self::from_spectra(&eigh(a)?, &eigh(b)?))
    }

    fn from_spectra(da: &SpectralDecomposition, db: &SpectralDecomposition) -> Self {
        let g = da.vectors.adjoint() * &db.vectors;
        let n = da.dim();
        let overlap = (0..n).map(|i| (0..n).map(|j| g[(i, j)].norm_sqr()).collect()).collect();
        PetzPair {
            la: supported_logs(da),
            lb: supported_logs(db),
            overlap,
        }
    }

    /// log Tr A^alpha B^(1-alpha) for alpha in [0, 1], powers on supports.
    fn log_q(&self, alpha: f64) -> f64 {
        let mut terms = Vec::new();
        for (i, la) in self.la.iter().enumerate() {
            let Some(la) = la else { continue };
            for (j, lb) in self.lb.iter().enumerate() {
                let Some(lb) = lb else { continue };
                let w = self.overlap[i][j];
                if w > 0.0 {
                    terms.push(w.ln() + alpha * la + (1.0 - alpha) * lb);
                }
            }
        }
        log_sum_exp(terms.into_iter())
    }
}

fn check_nonzero(a: &PsdMatrix, b: &PsdMatrix) -> Result<()> {
    if a.norm() == 0.0 || b.norm() == 0.0 {
        return Err(Error::Domain("divergence arguments must be nonzero".into()));
    }
    Ok(())
}

pub fn petz_renyi(alpha: f64, a: &PsdMatrix, b: &PsdMatrix) -> Result<ExtReal> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::Domain(format!("Petz order {alpha} outside (0,1)")));
    }
    check_nonzero(a, b)?;
    let lq = PetzPair::new(a, b)?.log_q(alpha);
    Ok(ExtReal::from_f64(lq).scale(1.0 / (alpha - 1.0)))
}

/// Precomputed data for sandwiched quantities of a fixed pair.
struct SandwichedPair {
    a: CMat,
    db: SpectralDecomposition,
    support_ok: bool,
    log_trace_a: f64,
    d_max: f64,
}

impl SandwichedPair {
    fn new(a: &PsdMatrix, b: &PsdMatrix) -> Result<Self> {
        check_same_dim(a, b)?;
        let support_ok = proj_leq(&support_proj(a)?, &support_proj(b)?);
        let db = eigh(b)?;
        let mhalf = db.apply_supported(|l| l.powf(-0.5), 0.0);
        let top = eigh(&(&mhalf * a.as_mat() * &mhalf))?.max();
        Ok(SandwichedPair {
            a: a.as_mat().clone(),
            db,
            support_ok,
            log_trace_a: a.trace().ln(),
            d_max: top.ln(),
        })
    }

    /// log Tr (B^g A B^g)^alpha with g = (1 - alpha) / (2 alpha).
    fn log_q(&self, alpha: f64) -> f64 {
        let g = (1.0 - alpha) / (2.0 * alpha);
        let bg = self.db.apply_supported(|l| l.powf(g), 0.0);
        let m = &bg * &self.a * &bg;
        match eigh(&m) {
            Ok(d) => {
                let cut = d.zero_cutoff();
                log_sum_exp(d.values.iter().filter(|&&l| l > cut).map(|l| alpha * l.ln()))
            }
            Err(_) => f64::NAN,
        }
    }
}

pub fn sandwiched_renyi(alpha: f64, a: &PsdMatrix, b: &PsdMatrix) -> Result<ExtReal> {
    if !(alpha > 1.0 && alpha.is_finite()) {
        return Err(Error::Domain(format!("sandwiched order {alpha} must exceed 1")));
    }
    check_nonzero(a, b)?;
    let sp = SandwichedPair::new(a, b)?;
    if !sp.support_ok {
        return Ok(ExtReal::PosInf);
    }
    Ok(ExtReal::from_f64(sp.log_q(alpha)).scale(1.0 / (alpha - 1.0)))
}

/// Umegaki relative entropy Tr A (log A - log B), +inf unless supp A <= supp B.
pub fn relative_entropy(a: &PsdMatrix, b: &PsdMatrix) -> Result<ExtReal> {
    check_same_dim(a, b)?;
    check_nonzero(a, b)?;
    if !proj_leq(&support_proj(a)?, &support_proj(b)?) {
        return Ok(ExtReal::PosInf);
    }
    let da = eigh(a)?;
    let db = eigh(b)?;
    let cut_a = da.zero_cutoff();
    let first: f64 = da.values.iter().filter(|&&l| l > cut_a).map(|l| l * l.ln()).sum();
    let logb = db.apply_supported(f64::ln, 0.0);
    let second = crate::matcore::trace_prod_re(a.as_mat(), &logb);
    Ok(ExtReal::Finite(first - second))
}

/// Max-relative entropy of commuting inputs with its argmax set and r_inf.
pub fn max_relative_entropy(a: &PsdMatrix, b: &PsdMatrix) -> Result<MaxRelEntropy> {
    check_same_dim(a, b)?;
    check_nonzero(a, b)?;
    let (p, q) = commuting_spectra(a, b)?;
    let tol = crate::config::get().eig_zero_tol;
    let clean = |v: Vec<f64>| {
        let m = v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        v.into_iter().map(|x| if x > tol * m { x } else { 0.0 }).collect::<Vec<_>>()
    };
    Ok(ClassicalPair::new(clean(p), clean(q))?.max_relative_entropy())
}

/// Joint spectra of a commuting pair, in the standard basis for diagonal input.
pub fn commuting_spectra(a: &PsdMatrix, b: &PsdMatrix) -> Result<(Vec<f64>, Vec<f64>)> {
    let is_diag = |m: &PsdMatrix| {
        let n = m.dim();
        (0..n).all(|i| (0..n).all(|j| i == j || m[(i, j)].norm() == 0.0))
    };
    if is_diag(a) && is_diag(b) {
        let n = a.dim();
        return Ok(((0..n).map(|i| a[(i, i)].re).collect(), (0..n).map(|i| b[(i, i)].re).collect()));
    }
    let (_, mut d) = joint_diagonalize(&[a.clone(), b.clone()])?;
    let q = d.pop().unwrap();
    let p = d.pop().unwrap();
    Ok((p, q))
}

pub fn hoeffding(r: f64, a: &PsdMatrix, b: &PsdMatrix) -> Result<HoeffdingResult> {
    check_nonzero(a, b)?;
    let pp = PetzPair::new(a, b)?;
    Ok(petz_sup(r, |x| pp.log_q(x), pp.log_q(0.0), pp.log_q(1.0)))
}

/// Petz Hoeffding divergence from precomputed spectral decompositions.
pub fn hoeffding_spectral(r: f64, da: &SpectralDecomposition, db: &SpectralDecomposition) -> HoeffdingResult {
    let pp = PetzPair::from_spectra(da, db);
    petz_sup(r, |x| pp.log_q(x), pp.log_q(0.0), pp.log_q(1.0))
}

pub fn hoeffding_star(r: f64, a: &PsdMatrix, b: &PsdMatrix) -> Result<HoeffdingResult> {
    check_nonzero(a, b)?;
    let sp = SandwichedPair::new(a, b)?;
    if !sp.support_ok {
        return Ok(star_unbounded());
    }
    Ok(star_sup(r, |x| sp.log_q(x), sp.log_trace_a, sp.d_max))
}

fn star_unbounded() -> HoeffdingResult {
    HoeffdingResult {
        value: ExtReal::NegInf,
        maximizer_alpha: ExtReal::Finite(1.0),
        grid_resolution: 1.0 / (HOEFFDING_GRID as f64 + 1.0),
    }
}

/// sup over alpha in (0,1) of ((alpha-1)/alpha) r - (1/alpha) log Q_alpha.
fn petz_sup(r: f64, log_q: impl Fn(f64) -> f64, log_q0: f64, log_q1: f64) -> HoeffdingResult {
    let h = 1.0 / (HOEFFDING_GRID as f64 + 1.0);
    if log_q0 == f64::NEG_INFINITY {
        // Disjoint supports: every objective value is +inf.
        return HoeffdingResult {
            value: ExtReal::PosInf,
            maximizer_alpha: ExtReal::Finite(h),
            grid_resolution: h,
        };
    }
    // alpha -> 0: objective -> r - (r + log Q_0)/alpha.
    if r + log_q0 < -1e-12 {
        return HoeffdingResult {
            value: ExtReal::PosInf,
            maximizer_alpha: ExtReal::ZERO,
            grid_resolution: h,
        };
    }
    let obj = |a: f64| ((a - 1.0) / a) * r - log_q(a) / a;
    let right = Some(-log_q1);
    let (value, x) = grid_golden(obj, None, right);
    HoeffdingResult {
        value: ExtReal::from_f64(value),
        maximizer_alpha: ExtReal::Finite(x),
        grid_resolution: h,
    }
}

/// sup over u in (0,1) of u r - (1-u) log Q*_{1/(1-u)}.
fn star_sup(r: f64, log_q: impl Fn(f64) -> f64, log_trace_a: f64, d_max: f64) -> HoeffdingResult {
    let h = 1.0 / (HOEFFDING_GRID as f64 + 1.0);
    let obj = |u: f64| u * r - (1.0 - u) * log_q(1.0 / (1.0 - u));
    let (value, u) = grid_golden(obj, Some(-log_trace_a), Some(r - d_max));
    let alpha = if u >= 1.0 {
        ExtReal::PosInf
    } else {
        ExtReal::Finite(1.0 / (1.0 - u))
    };
    HoeffdingResult {
        value: ExtReal::from_f64(value),
        maximizer_alpha: alpha,
        grid_resolution: h,
    }
}

/// Maximizes `f` over (0,1) by a uniform grid plus golden-section refinement
/// around the best interior point. `left`/`right` are the limits at 0 and 1,
/// reported with argument 0 or 1 when they win.
fn grid_golden(f: impl Fn(f64) -> f64, left: Option<f64>, right: Option<f64>) -> (f64, f64) {
    let n = HOEFFDING_GRID;
    let h = 1.0 / (n as f64 + 1.0);
    let xs: Vec<f64> = (1..=n).map(|i| i as f64 * h).collect();
    let ys: Vec<f64> = xs.iter().map(|&x| f(x)).collect();
    let mut best_i = 0;
    for i in 1..n {
        if ys[i] > ys[best_i] || ys[best_i].is_nan() {
            best_i = i;
        }
    }
    let (mut best, mut arg) = (ys[best_i], xs[best_i]);
    let lo = if best_i == 0 { 0.0 } else { xs[best_i - 1] };
    let hi = if best_i + 1 == n { 1.0 } else { xs[best_i + 1] };
    let (gx, gy) = golden_max(&f, lo, hi, HOEFFDING_REFINE_TOL);
    if gy > best {
        best = gy;
        arg = gx;
    }
    if let Some(l) = left {
        if l > best {
            best = l;
            arg = 0.0;
        }
    }
    if let Some(rv) = right {
        if rv >= best {
            best = rv;
            arg = 1.0;
        }
    }
    (best, arg)
}

/// Golden-section search for a maximum on the open interval (lo, hi).
pub(crate) fn golden_max(f: &impl Fn(f64) -> f64, lo: f64, hi: f64, tol: f64) -> (f64, f64) {
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = (lo, hi);
    let mut x1 = b - g * (b - a);
    let mut x2 = a + g * (b - a);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    while b - a > tol {
        if f1 >= f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - g * (b - a);
            f1 = f(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + g * (b - a);
            f2 = f(x2);
        }
    }
    if f1 >= f2 {
        (x1, f1)
    } else {
        (x2, f2)
    }
}
