//! Operator perspectives, weighted Kubo-Ando geometric means, the rival
//! tensor-multiplicative means and commuting weighted geometric means.
//!
//! Convention: `ka_mean(a, b, t)` is `b #_t a`, the mean with weight `t` on
//! `a`, so `t = 0` gives `b` and `t = 1` gives `a`.

use rand::Rng;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::matcore::{
    acc_part, c, check_same_dim, eigh, mat_fn, psd_pow, support_basis, support_proj, CMat, ExtReal,
    PsdMatrix, SpectralDecomposition,
};
use crate::random;

/// Frobenius tolerance for successive iterates along the regularization path.
pub const PERSP_TOL: f64 = 1e-9;
/// Commutator tolerance for `commuting_gm`.
pub const COMMUTE_TOL: f64 = 1e-8;

/// Scalar function on (0, inf) with its boundary behaviour declared:
/// `limit_at_zero` is f(0+) and `transpose_limit_at_zero` is lim f(x)/x as x -> inf,
/// i.e. the value at 0+ of the transpose x f(1/x).
#[derive(Clone)]
pub struct ScalarFn {
    label: String,
    eval: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
    limit_at_zero: ExtReal,
    transpose_limit_at_zero: ExtReal,
    power: Option<f64>,
}

impl fmt::Debug for ScalarFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ScalarFn")
            .field("label", &self.label)
            .field("limit_at_zero", &self.limit_at_zero)
            .field("transpose_limit_at_zero", &self.transpose_limit_at_zero)
            .finish()
    }
}

impl ScalarFn {
    /// Builds a descriptor and checks that the declared limits are consistent
    /// with the evaluator at 1e-6 and 1e6.
    pub fn new(
        label: impl Into<String>,
        eval: impl Fn(f64) -> f64 + Send + Sync + 'static,
        limit_at_zero: ExtReal,
        transpose_limit_at_zero: ExtReal,
    ) -> Result<Self> {
        let f = ScalarFn {
            label: label.into(),
            eval: Arc::new(eval),
            limit_at_zero,
            transpose_limit_at_zero,
            power: None,
        };
        f.validate()?;
        Ok(f)
    }

    fn validate(&self) -> Result<()> {
        for k in -8..=8 {
            let x = 10f64.powi(k);
            if !self.eval(x).is_finite() {
                return Err(Error::Domain(format!("{}: not finite at {x:e}", self.label)));
            }
        }
        let near = self.eval(1e-6);
        let far = 1e-6 * self.eval(1e6);
        let at_one = self.eval(1.0);
        for (name, probe, limit) in [
            ("f(0+)", near, self.limit_at_zero),
            ("transpose f(0+)", far, self.transpose_limit_at_zero),
        ] {
            let ok = match limit {
                ExtReal::Finite(l) => (probe - l).abs() <= 0.05 * l.abs().max(1.0),
                ExtReal::PosInf => probe > at_one,
                ExtReal::NegInf => probe < at_one,
            };
            if !ok {
                return Err(Error::Domain(format!(
                    "{}: declared {name} = {limit} inconsistent with probe value {probe:e}",
                    self.label
                )));
            }
        }
        Ok(())
    }

    /// x^t.
    pub fn power(t: f64) -> Self {
        let f0 = if t > 0.0 {
            ExtReal::ZERO
        } else if t == 0.0 {
            ExtReal::Finite(1.0)
        } else {
            ExtReal::PosInf
        };
        let ft0 = if t < 1.0 {
            ExtReal::ZERO
        } else if t == 1.0 {
            ExtReal::Finite(1.0)
        } else {
            ExtReal::PosInf
        };
        ScalarFn {
            label: format!("pow:{t}"),
            eval: Arc::new(move |x: f64| x.powf(t)),
            limit_at_zero: f0,
            transpose_limit_at_zero: ft0,
            power: Some(t),
        }
    }

    pub fn log() -> Self {
        ScalarFn {
            label: "log".into(),
            eval: Arc::new(f64::ln),
            limit_at_zero: ExtReal::NegInf,
            transpose_limit_at_zero: ExtReal::ZERO,
            power: None,
        }
    }

    pub fn xlogx() -> Self {
        ScalarFn {
            label: "xlogx".into(),
            eval: Arc::new(|x: f64| x * x.ln()),
            limit_at_zero: ExtReal::ZERO,
            transpose_limit_at_zero: ExtReal::PosInf,
            power: None,
        }
    }

    pub fn sqrt() -> Self {
        let mut f = Self::power(0.5);
        f.label = "sqrt".into();
        f
    }

    /// Presets by name: `pow:t`, `log`, `xlogx`, `sqrt`.
    pub fn preset(name: &str) -> Result<Self> {
        match name {
            "log" => Ok(Self::log()),
            "xlogx" => Ok(Self::xlogx()),
            "sqrt" => Ok(Self::sqrt()),
            _ => {
                let t = name
                    .strip_prefix("pow:")
                    .and_then(|s| s.parse::<f64>().ok())
                    .filter(|t| t.is_finite())
                    .ok_or_else(|| Error::input("function", format!("unknown preset {name:?}")))?;
                Ok(Self::power(t))
            }
        }
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn eval(&self, x: f64) -> f64 {
        (self.eval)(x)
    }

    pub fn limit_at_zero(&self) -> ExtReal {
        self.limit_at_zero
    }

    pub fn transpose_limit_at_zero(&self) -> ExtReal {
        self.transpose_limit_at_zero
    }

    /// x f(1/x), with the two limits exchanged.
    pub fn transpose(&self) -> ScalarFn {
        let inner = self.eval.clone();
        ScalarFn {
            label: format!("transpose({})", self.label),
            eval: Arc::new(move |x: f64| x * inner(1.0 / x)),
            limit_at_zero: self.transpose_limit_at_zero,
            transpose_limit_at_zero: self.limit_at_zero,
            power: self.power.map(|t| 1.0 - t),
        }
    }
}

/// The decreasing regularization path 10^-1, ..., 10^-12.
pub fn default_eps_path() -> Vec<f64> {
    (1..=12).map(|k| 10f64.powi(-k)).collect()
}

fn proj_leq(p: &CMat, q: &CMat) -> bool {
    (p - q * p).norm() <= 1e-8
}

/// B^{1/2} f(B^{-1/2} A B^{-1/2}) B^{1/2} for positive definite B; zero
/// eigenvalues of the inner operator take the value f(0+).
fn persp_definite(f: &ScalarFn, a: &CMat, b: &CMat) -> Result<CMat> {
    let db = eigh(b)?;
    let half = db.apply(f64::sqrt);
    let mhalf = db.apply(|l| 1.0 / l.sqrt());
    let inner = &mhalf * a * &mhalf;
    let f0 = f.limit_at_zero();
    let di = eigh(&inner)?;
    let cut = di.zero_cutoff();
    let zero_value = match f0 {
        ExtReal::Finite(v) => v,
        _ if di.values.iter().all(|&l| l > cut) => 0.0,
        _ => {
            return Err(Error::Domain(format!(
                "{} has infinite limit at 0 but the argument is singular",
                f.label()
            )))
        }
    };
    let fx = di.apply_supported(|l| f.eval(l), zero_value);
    Ok(&half * fx * &half)
}

fn compress(m: &CMat, v: &CMat) -> CMat {
    v.adjoint() * m * v
}

fn embed(m: &CMat, v: &CMat) -> CMat {
    v * m * v.adjoint()
}

/// Operator perspective P_f(A, B) = B^{1/2} f(B^{-1/2} A B^{-1/2}) B^{1/2},
/// extended to singular arguments as the limit along `(A + eps I, B + eps I)`.
///
/// The result is Hermitian; it is PSD whenever f is nonnegative.
/// Cases where the limit has an exact expression are evaluated exactly:
/// power functions with exponent in [0, 1] use the Kubo-Ando closed form, and
/// nested supports are handled by compressing to the larger support. Only
/// incomparable supports fall back to the numerical path.
pub fn perspective(f: &ScalarFn, a: &PsdMatrix, b: &PsdMatrix, eps_path: &[f64]) -> Result<CMat> {
    check_same_dim(a, b)?;
    if let Some(t) = f.power {
        if (0.0..=1.0).contains(&t) {
            return Ok(ka_mean(a, b, t)?.into_inner());
        }
    }
    let n = a.dim();
    let pa = support_proj(a)?;
    let pb = support_proj(b)?;
    let a_in_b = proj_leq(&pa, &pb);
    let b_in_a = proj_leq(&pb, &pa);
    let f0_finite = f.limit_at_zero().is_finite();
    let ft0_finite = f.transpose_limit_at_zero().is_finite();

    if a_in_b && (b_in_a || f0_finite) {
        let v = support_basis(b)?;
        if v.ncols() == 0 {
            return Ok(CMat::zeros(n, n));
        }
        let p = persp_definite(f, &compress(a, &v), &compress(b, &v))?;
        return Ok(embed(&p, &v));
    }
    if b_in_a && ft0_finite {
        let v = support_basis(a)?;
        let p = persp_definite(&f.transpose(), &compress(b, &v), &compress(a, &v))?;
        return Ok(embed(&p, &v));
    }
    if !(f0_finite && ft0_finite) {
        return Err(Error::Domain(format!(
            "no support condition holds for {}: supp A = supp B is {}, \
             f(0+) = {} with supp A <= supp B {}, transpose limit = {} with supp A >= supp B {}",
            f.label(),
            a_in_b && b_in_a,
            f.limit_at_zero(),
            a_in_b,
            f.transpose_limit_at_zero(),
            b_in_a
        )));
    }
    perspective_path(f, a, b, eps_path)
}

/// The raw regularization path, without the exact shortcuts of `perspective`.
pub fn perspective_path(f: &ScalarFn, a: &PsdMatrix, b: &PsdMatrix, eps_path: &[f64]) -> Result<CMat> {
    if eps_path.len() < 2 {
        return Err(Error::Domain("regularization path needs at least two points".into()));
    }
    let n = a.dim();
    let id = CMat::identity(n, n);
    let mut iterates: Vec<CMat> = Vec::with_capacity(eps_path.len());
    let mut agreements = 0;
    let mut step = f64::INFINITY;
    for &eps in eps_path {
        let p = persp_definite(f, &(a.as_mat() + &id * c(eps)), &(b.as_mat() + &id * c(eps)))?;
        if let Some(q) = iterates.last() {
            step = (&p - q).norm();
            agreements = if step < PERSP_TOL { agreements + 1 } else { 0 };
            if agreements >= 2 {
                return Ok(p);
            }
        }
        iterates.push(p);
    }
    let last = iterates.pop().unwrap();
    let previous = iterates.pop().unwrap();
    Err(Error::Convergence {
        eps: *eps_path.last().unwrap(),
        step,
        previous: Box::new(previous),
        last: Box::new(last),
    })
}

/// Precomputed t-curve of the Kubo-Ando mean b #_t a, cheap to evaluate at many t.
#[derive(Clone, Debug)]
pub struct KaCurve {
    a: PsdMatrix,
    b: PsdMatrix,
    half: CMat,
    inner: SpectralDecomposition,
}

impl KaCurve {
    pub fn new(a: &PsdMatrix, b: &PsdMatrix) -> Result<Self> {
        check_same_dim(a, b)?;
        let aa = acc_part(a, b)?;
        let bb = acc_part(b, a)?;
        let db = eigh(&bb)?;
        let half = db.apply_supported(f64::sqrt, 0.0);
        let mhalf = db.apply_supported(|l| 1.0 / l.sqrt(), 0.0);
        let inner = eigh(&(&mhalf * aa.as_mat() * &mhalf))?;
        Ok(KaCurve {
            a: a.clone(),
            b: b.clone(),
            half,
            inner,
        })
    }

    /// b #_t a; exact endpoints at t = 0 and t = 1.
    pub fn at(&self, t: f64) -> Result<PsdMatrix> {
        if !(0.0..=1.0).contains(&t) {
            return Err(Error::Domain(format!("mean weight t = {t} outside [0, 1]")));
        }
        if t == 0.0 {
            return Ok(self.b.clone());
        }
        if t == 1.0 {
            return Ok(self.a.clone());
        }
        let pw = self.inner.apply_supported(|l| l.powf(t), 0.0);
        Ok(PsdMatrix::from_hermitian(&self.half * pw * &self.half))
    }
}

/// Weighted Kubo-Ando geometric mean b #_t a (weight t on a), total on PSD inputs.
pub fn ka_mean(a: &PsdMatrix, b: &PsdMatrix, t: f64) -> Result<PsdMatrix> {
    if !(0.0..=1.0).contains(&t) {
        return Err(Error::Domain(format!("mean weight t = {t} outside [0, 1]")));
    }
    check_same_dim(a, b)?;
    if t == 0.0 {
        return Ok(b.clone());
    }
    if t == 1.0 {
        return Ok(a.clone());
    }
    KaCurve::new(a, b)?.at(t)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum AltKind {
    G,
    Gtilde,
    Ghat,
    LogEuclid,
}

impl std::str::FromStr for AltKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "g" => Ok(AltKind::G),
            "gtilde" => Ok(AltKind::Gtilde),
            "ghat" => Ok(AltKind::Ghat),
            "logeuclid" | "log-euclid" => Ok(AltKind::LogEuclid),
            _ => Err(Error::input("kind", format!("unknown mean kind {s:?}"))),
        }
    }
}

/// Rival tensor-multiplicative means with weight t on `a` and parameter z > 0.
pub fn alt_mean(kind: AltKind, a: &PsdMatrix, b: &PsdMatrix, t: f64, z: f64) -> Result<PsdMatrix> {
    check_same_dim(a, b)?;
    if !(t > 0.0 && t < 1.0) {
        return Err(Error::Domain(format!("alt_mean needs t in (0,1), got {t}")));
    }
    if kind != AltKind::LogEuclid && !(z > 0.0 && z.is_finite()) {
        return Err(Error::Domain(format!("alt_mean needs finite z > 0, got {z}")));
    }
    let m = match kind {
        AltKind::G => {
            let x = psd_pow(a, t / (2.0 * z))?;
            let y = psd_pow(b, (1.0 - t) / z)?;
            psd_pow(&(&x * y * &x), z)?
        }
        AltKind::Gtilde => {
            let x = psd_pow(b, (1.0 - t) / (2.0 * z))?;
            let y = psd_pow(a, t / z)?;
            psd_pow(&(&x * y * &x), z)?
        }
        AltKind::Ghat => {
            let ap = PsdMatrix::from_hermitian(psd_pow(a, 1.0 / z)?);
            let bp = PsdMatrix::from_hermitian(psd_pow(b, 1.0 / z)?);
            psd_pow(ka_mean(&ap, &bp, t)?.as_mat(), z)?
        }
        AltKind::LogEuclid => {
            if !a.is_positive_definite()? || !b.is_positive_definite()? {
                return Err(Error::Domain("log-Euclidean mean needs positive definite arguments".into()));
            }
            let la = mat_fn(a, f64::ln, 0.0)?;
            let lb = mat_fn(b, f64::ln, 0.0)?;
            eigh(&(la * c(t) + lb * c(1.0 - t)))?.apply(f64::exp)
        }
    };
    Ok(PsdMatrix::from_hermitian(m))
}

/// Finite family of PSD matrices with a probability vector of weights.
#[derive(Clone, Debug)]
pub struct WeightedFamily {
    members: Vec<PsdMatrix>,
    weights: Vec<f64>,
}

impl WeightedFamily {
    pub fn new(members: Vec<PsdMatrix>, weights: Vec<f64>) -> Result<Self> {
        if members.is_empty() {
            return Err(Error::Precondition("family is empty".into()));
        }
        if members.len() != weights.len() {
            return Err(Error::Dimension(format!(
                "{} members but {} weights",
                members.len(),
                weights.len()
            )));
        }
        let d = members[0].dim();
        if members.iter().any(|m| m.dim() != d) {
            return Err(Error::Dimension("family members differ in dimension".into()));
        }
        if weights.iter().any(|w| !(*w >= 0.0)) {
            return Err(Error::Domain("weights must be nonnegative".into()));
        }
        let s: f64 = weights.iter().sum();
        if (s - 1.0).abs() > 1e-12 {
            return Err(Error::Domain(format!("weights sum to {s}, not 1")));
        }
        Ok(WeightedFamily { members, weights })
    }

    pub fn members(&self) -> &[PsdMatrix] {
        &self.members
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn dim(&self) -> usize {
        self.members[0].dim()
    }
}

/// Largest commutator norm in a list of Hermitian matrices.
pub fn worst_commutator(members: &[PsdMatrix]) -> f64 {
    let mut worst = 0.0f64;
    for i in 0..members.len() {
        for j in (i + 1)..members.len() {
            let (x, y) = (members[i].as_mat(), members[j].as_mat());
            worst = worst.max((x * y - y * x).norm());
        }
    }
    worst
}

/// Joint eigenbasis of commuting Hermitian matrices, with the diagonal of each
/// member in that basis.
pub fn joint_diagonalize(members: &[PsdMatrix]) -> Result<(CMat, Vec<Vec<f64>>)> {
    let worst = worst_commutator(members);
    if worst > COMMUTE_TOL {
        return Err(Error::Precondition(format!(
            "members do not commute (worst commutator norm {worst:e})"
        )));
    }
    let n = members[0].dim();
    let mut rng = random::rng(0x6a6f_696e);
    let scale: f64 = members.iter().map(|m| m.norm()).fold(0.0, f64::max).max(1.0);
    let mut last_resid = f64::INFINITY;
    for _attempt in 0..8 {
        let mut comb = CMat::zeros(n, n);
        for m in members {
            comb += m.as_mat() * c(rng.random_range(0.5..1.5) / m.norm().max(1e-300));
        }
        let u = eigh(&comb)?.vectors;
        let mut diags = Vec::with_capacity(members.len());
        let mut resid = 0.0f64;
        for m in members {
            let mut d = u.adjoint() * m.as_mat() * &u;
            let diag: Vec<f64> = (0..n).map(|k| d[(k, k)].re).collect();
            for k in 0..n {
                d[(k, k)] = c(0.0);
            }
            resid = resid.max(d.norm());
            diags.push(diag);
        }
        if resid <= COMMUTE_TOL * scale {
            return Ok((u, diags));
        }
        last_resid = resid;
    }
    Err(Error::Numerical {
        message: "joint diagonalization failed".into(),
        residual: last_resid,
    })
}

/// exp(sum_y w_y log A_y) for commuting members, with 0^w = 0 for w > 0 and 0^0 = 1.
pub fn commuting_gm(family: &WeightedFamily) -> Result<PsdMatrix> {
    let (u, diags) = joint_diagonalize(family.members())?;
    let n = family.dim();
    let tol = crate::config::get().eig_zero_tol;
    let cutoffs: Vec<f64> = diags
        .iter()
        .map(|d| tol * d.iter().fold(0.0f64, |m, x| m.max(x.abs())))
        .collect();
    let mut vals = vec![0.0; n];
    for (k, val) in vals.iter_mut().enumerate() {
        let mut log = ExtReal::ZERO;
        for (y, d) in diags.iter().enumerate() {
            let a = if d[k] > cutoffs[y] { d[k] } else { 0.0 };
            let term = ExtReal::ln(a).scale(family.weights()[y]);
            log = log.checked_add(term).expect("logs are never +inf");
        }
        *val = log.exp();
    }
    let mut m = u.clone();
    for j in 0..n {
        for i in 0..n {
            m[(i, j)] *= vals[j];
        }
    }
    Ok(PsdMatrix::from_hermitian(m * u.adjoint()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matcore::{from_diag, from_real_rows, kron, lambda_min, partial_trace};
    use proptest::prelude::{any, prop_assert, proptest, ProptestConfig};

    fn psi() -> PsdMatrix {
        PsdMatrix::new(from_real_rows(&[&[0.5, 0.5], &[0.5, 0.5]])).unwrap()
    }

    fn diag(d: &[f64]) -> PsdMatrix {
        PsdMatrix::from_diag(d).unwrap()
    }

    fn close(a: &CMat, b: &CMat, tol: f64) -> bool {
        (a - b).norm() <= tol
    }

    #[test]
    fn presets() {
        assert_eq!(ScalarFn::preset("pow:0.25").unwrap().eval(16.0), 2.0);
        assert!(ScalarFn::preset("nope").is_err());
        for f in [ScalarFn::log(), ScalarFn::xlogx(), ScalarFn::sqrt(), ScalarFn::power(0.3), ScalarFn::power(1.7)] {
            f.validate().unwrap();
            f.transpose().validate().unwrap();
        }
        assert!(ScalarFn::new("bad", |x| x, ExtReal::Finite(5.0), ExtReal::Finite(1.0)).is_err());
    }

    #[test]
    fn perspective_examples() {
        let a = diag(&[2.0, 3.0]);
        let b = diag(&[5.0, 7.0]);
        let eps = default_eps_path();
        let p = perspective(&ScalarFn::power(0.3), &a, &b, &eps).unwrap();
        let want = from_diag(&[2f64.powf(0.3) * 5f64.powf(0.7), 3f64.powf(0.3) * 7f64.powf(0.7)]);
        assert!(close(&p, &want, 1e-12));
        let p = perspective(&ScalarFn::power(1.0), &a, &b, &eps).unwrap();
        assert!(close(&p, &a, 1e-12));
        let p = perspective(&ScalarFn::power(0.0), &a, &b, &eps).unwrap();
        assert!(close(&p, &b, 1e-12));
        let p = perspective(&ScalarFn::sqrt(), &diag(&[1.0, 4.0]), &diag(&[4.0, 1.0]), &eps).unwrap();
        assert!(close(&p, &from_diag(&[2.0, 2.0]), 1e-12));
        let p = perspective(&ScalarFn::sqrt(), &diag(&[1.0, 0.0]), &diag(&[1.0, 1.0]), &eps).unwrap();
        assert!(close(&p, &from_diag(&[1.0, 0.0]), 1e-12));
    }

    #[test]
    fn perspective_generic_function_matches_path() {
        // Exact shortcuts agree with the raw regularization path where it converges.
        let mut rng = random::rng(21);
        let f = ScalarFn::new("x/(1+x)", |x| x / (1.0 + x), ExtReal::ZERO, ExtReal::ZERO).unwrap();
        for _ in 0..20 {
            let a = PsdMatrix::new(random::random_pd(&mut rng, 3, 0.2, 2.0)).unwrap();
            let b = PsdMatrix::new(random::random_pd(&mut rng, 3, 0.2, 2.0)).unwrap();
            let exact = perspective(&f, &a, &b, &default_eps_path()).unwrap();
            let path = perspective_path(&f, &a, &b, &default_eps_path()).unwrap();
            assert!(close(&exact, &path, 1e-8));
            // Scalar perspective on commuting input.
            let (x, y) = (diag(&[0.3, 2.0]), diag(&[1.5, 0.5]));
            let p = perspective(&f, &x, &y, &default_eps_path()).unwrap();
            let want = from_diag(&[1.5 * f.eval(0.2), 0.5 * f.eval(4.0)]);
            assert!(close(&p, &want, 1e-12));
        }
    }

    #[test]
    fn perspective_support_conditions() {
        let eps = default_eps_path();
        let a = diag(&[1.0, 0.0]);
        let b = diag(&[1.0, 1.0]);
        // log has f(0+) = -inf and supp A < supp B: no condition applies.
        assert!(matches!(perspective(&ScalarFn::log(), &a, &b, &eps), Err(Error::Domain(_))));
        // Relative-entropy perspective with supp A <= supp B is fine.
        let p = perspective(&ScalarFn::xlogx(), &diag(&[2.0, 0.0]), &b, &eps).unwrap();
        assert!(close(&p, &from_diag(&[2.0 * 2f64.ln(), 0.0]), 1e-12));
        // Transpose route: supp A >= supp B with finite transpose limit.
        let p = perspective(&ScalarFn::log(), &b, &diag(&[3.0, 0.0]), &eps).unwrap();
        assert!(close(&p, &from_diag(&[3.0 * (1.0f64 / 3.0).ln(), 0.0]), 1e-12));
    }

    #[test]
    fn perspective_path_reports_slow_convergence() {
        let f = ScalarFn::new("x/(1+x)", |x| x / (1.0 + x), ExtReal::ZERO, ExtReal::ZERO).unwrap();
        let a = diag(&[1.0, 0.0]);
        let b = diag(&[0.0, 1.0]);
        // Orthogonal supports: the limit is 0 and the path converges at rate eps.
        let p = perspective(&f, &a, &b, &default_eps_path()).unwrap();
        assert!(p.norm() < 1e-8);
        match perspective_path(&f, &a, &b, &[1e-1, 1e-2]) {
            Err(Error::Convergence { .. }) => {}
            other => panic!("expected a convergence error, got {other:?}"),
        }
    }

    #[test]
    fn ka_examples() {
        let a = diag(&[1.0, 4.0]);
        let b = diag(&[9.0, 1.0]);
        assert_eq!(ka_mean(&a, &b, 0.0).unwrap(), b);
        assert_eq!(ka_mean(&a, &b, 1.0).unwrap(), a);
        assert!(close(&ka_mean(&a, &b, 0.5).unwrap(), &from_diag(&[3.0, 2.0]), 1e-12));

        for (x, y) in [(1.0, 4.0), (2.0, 0.5)] {
            for t in [0.2, 0.5, 0.7] {
                let m = ka_mean(&psi(), &diag(&[x, y]), t).unwrap();
                let coef = ((1.0 / x + 1.0 / y) / 2.0).powf(t - 1.0);
                assert!(close(&m, &(psi().as_mat() * c(coef)), 1e-12));
            }
        }
        let e1 = diag(&[1.0, 0.0]);
        let m = ka_mean(&e1, &psi(), 0.5).unwrap();
        assert!(m.norm() < 1e-14);
    }

    #[test]
    fn ka_support_is_meet() {
        let mut rng = random::rng(22);
        for _ in 0..100 {
            let n = rng.random_range(3..=5);
            let shared = random::random_projection(&mut rng, n, 1);
            let a = PsdMatrix::new(random::random_psd(&mut rng, n, 1) + &shared).unwrap();
            let b = PsdMatrix::new(random::random_psd(&mut rng, n, 1) + &shared).unwrap();
            let m = ka_mean(&a, &b, rng.random_range(0.05..0.95)).unwrap();
            let pm = support_proj(&m).unwrap();
            assert!(close(&pm, &shared, 1e-7), "{}", (&pm - &shared).norm());
        }
    }

    #[test]
    fn alt_mean_examples() {
        let a = diag(&[2.0, 3.0]);
        let b = diag(&[5.0, 0.5]);
        let want = from_diag(&[2f64.powf(0.4) * 5f64.powf(0.6), 3f64.powf(0.4) * 0.5f64.powf(0.6)]);
        for kind in [AltKind::G, AltKind::Gtilde, AltKind::Ghat, AltKind::LogEuclid] {
            let m = alt_mean(kind, &a, &b, 0.4, 2.5).unwrap();
            assert!(close(&m, &want, 1e-12), "{kind:?}");
        }
        for z in [2.0, 3.0, 4.0] {
            let p = 1.0 / z;
            let m = alt_mean(AltKind::Ghat, &psi(), &diag(&[1.0, 4.0]), 0.5, z).unwrap();
            let coef = ((1f64.powf(-p) + 4f64.powf(-p)) / 2.0).powf(-0.5 / p);
            assert!(close(&m, &(psi().as_mat() * c(coef)), 1e-10));
        }
        assert!(matches!(
            alt_mean(AltKind::LogEuclid, &psi(), &diag(&[1.0, 4.0]), 0.5, 1.0),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn log_euclid_regularized_limit() {
        let b = diag(&[1.0, 4.0]);
        let want = 4f64.powf(0.25);
        let mut prev_err = f64::INFINITY;
        for eps in [1e-3, 1e-6, 1e-9] {
            let a = PsdMatrix::new(psi().as_mat() + CMat::identity(2, 2) * c(eps)).unwrap();
            let m = alt_mean(AltKind::LogEuclid, &a, &b, 0.5, 1.0).unwrap();
            let coef = crate::matcore::trace_prod_re(m.as_mat(), psi().as_mat());
            let err = (coef - want).abs();
            assert!(err < prev_err);
            prev_err = err;
        }
        assert!(prev_err < 0.05, "{prev_err}");
    }

    #[test]
    fn commuting_gm_examples() {
        let s1 = diag(&[0.25, 0.75]);
        let s2 = diag(&[0.75, 0.25]);
        let fam = WeightedFamily::new(vec![s1.clone(), s2.clone()], vec![0.5, 0.5]).unwrap();
        let r = 3f64.sqrt() / 4.0;
        assert!(close(&commuting_gm(&fam).unwrap(), &from_diag(&[r, r]), 1e-14));
        let single = WeightedFamily::new(vec![s1.clone()], vec![1.0]).unwrap();
        assert!(close(&commuting_gm(&single).unwrap(), &s1, 1e-14));
        let z = diag(&[0.0, 2.0]);
        let fam = WeightedFamily::new(vec![z, diag(&[3.0, 2.0])], vec![0.5, 0.5]).unwrap();
        assert!(close(&commuting_gm(&fam).unwrap(), &from_diag(&[0.0, 2.0]), 1e-14));
        let fam = WeightedFamily::new(vec![diag(&[0.0, 2.0]), diag(&[3.0, 2.0])], vec![0.0, 1.0]).unwrap();
        assert!(close(&commuting_gm(&fam).unwrap(), &from_diag(&[3.0, 2.0]), 1e-14));
        let bad = WeightedFamily::new(vec![psi(), s1], vec![0.5, 0.5]).unwrap();
        assert!(matches!(commuting_gm(&bad), Err(Error::Precondition(_))));
    }

    #[test]
    fn commuting_gm_rotated_basis() {
        let mut rng = random::rng(23);
        let u = random::random_unitary(&mut rng, 3);
        let rot = |d: &[f64]| PsdMatrix::new(&u * from_diag(d) * u.adjoint()).unwrap();
        let fam = WeightedFamily::new(vec![rot(&[1.0, 2.0, 0.0]), rot(&[4.0, 0.5, 3.0])], vec![0.3, 0.7]).unwrap();
        let want = &u * from_diag(&[4f64.powf(0.7), 2f64.powf(0.3) * 0.5f64.powf(0.7), 0.0]) * u.adjoint();
        assert!(close(&commuting_gm(&fam).unwrap(), &want, 1e-12));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn ka_symmetry_and_am_gm(seed in any::<u64>(), t in 0.0f64..=1.0) {
            let mut rng = random::rng(seed);
            let n = rng.random_range(1..=4);
            let (ra, rb) = (rng.random_range(0..=n), rng.random_range(0..=n));
            let a = PsdMatrix::new(random::random_psd(&mut rng, n, ra)).unwrap();
            let b = PsdMatrix::new(random::random_psd(&mut rng, n, rb)).unwrap();
            let m = ka_mean(&a, &b, t).unwrap();
            let flipped = ka_mean(&b, &a, 1.0 - t).unwrap();
            prop_assert!(close(&m, &flipped, 1e-8));
            let am = a.as_mat() * c(t) + b.as_mat() * c(1.0 - t);
            prop_assert!(lambda_min(&(am - m.as_mat())).unwrap() >= -1e-9);
        }

        #[test]
        fn ka_riccati_midpoint(seed in any::<u64>()) {
            // X = B # A solves X B^{-1} X = A for positive definite arguments.
            let mut rng = random::rng(seed);
            let n = rng.random_range(1..=5);
            let a = PsdMatrix::new(random::random_pd(&mut rng, n, 0.1, 3.0)).unwrap();
            let b = PsdMatrix::new(random::random_pd(&mut rng, n, 0.1, 3.0)).unwrap();
            let x = ka_mean(&a, &b, 0.5).unwrap();
            let binv = eigh(&b).unwrap().apply(|l| 1.0 / l);
            prop_assert!(close(&(x.as_mat() * binv * x.as_mat()), &a, 1e-9));
        }

        #[test]
        fn ka_tensor_and_partial_trace(seed in any::<u64>(), t in 0.05f64..0.95) {
            let mut rng = random::rng(seed);
            let a = PsdMatrix::new(random::random_pd(&mut rng, 2, 0.1, 2.0)).unwrap();
            let b = PsdMatrix::new(random::random_pd(&mut rng, 2, 0.1, 2.0)).unwrap();
            let a2 = PsdMatrix::new(random::random_pd(&mut rng, 3, 0.1, 2.0)).unwrap();
            let b2 = PsdMatrix::new(random::random_pd(&mut rng, 3, 0.1, 2.0)).unwrap();
            let lhs = ka_mean(&a.kron(&a2), &b.kron(&b2), t).unwrap();
            let rhs = kron(&ka_mean(&a, &b, t).unwrap(), &ka_mean(&a2, &b2, t).unwrap());
            prop_assert!(close(&lhs, &rhs, 1e-8));
            let big_a = PsdMatrix::new(random::random_pd(&mut rng, 6, 0.1, 2.0)).unwrap();
            let big_b = PsdMatrix::new(random::random_pd(&mut rng, 6, 0.1, 2.0)).unwrap();
            let m = ka_mean(&big_a, &big_b, t).unwrap();
            let pa = PsdMatrix::new(partial_trace(&big_a, &[2, 3], 1).unwrap()).unwrap();
            let pb = PsdMatrix::new(partial_trace(&big_b, &[2, 3], 1).unwrap()).unwrap();
            let pm = partial_trace(&m, &[2, 3], 1).unwrap();
            prop_assert!(lambda_min(&(ka_mean(&pa, &pb, t).unwrap().as_mat() - pm)).unwrap() >= -1e-9);
        }
    }
}
