//! Completely positive maps through Choi matrices in (reference ⊗ output)
//! order: block (i,j) of the Choi matrix is N(|i><j|).

use rand::Rng;
use serde_json::Value;

use crate::error::{Error, Result};
use crate::matcore::{
    c, eigh, hermitize, io::matrix_from_json, io::psd_from_json, lambda_min, partial_trace,
    trace_prod_re, CMat, PsdMatrix,
};
use crate::means::{ka_mean, perspective, ScalarFn};
use crate::membership::{am_feasibility_quantum, ka_membership, MembershipVerdict};
use crate::random;

pub const CP_TOL: f64 = 1e-9;

fn block(j: &CMat, dout: usize, i: usize, k: usize) -> CMat {
    j.view((i * dout, k * dout), (dout, dout)).into_owned()
}

fn apply_choi(j: &CMat, din: usize, dout: usize, x: &CMat) -> CMat {
    let mut out = CMat::zeros(dout, dout);
    for i in 0..din {
        for k in 0..din {
            let w = x[(i, k)];
            if w.norm() != 0.0 {
                out += block(j, dout, i, k) * w;
            }
        }
    }
    out
}

/// (id ⊗ F) applied to a Choi matrix with `din` reference blocks of size `dmid`.
fn post_choi(j: &CMat, din: usize, dmid: usize, f: &CMat, dout: usize) -> CMat {
    let mut out = CMat::zeros(din * dout, din * dout);
    for i in 0..din {
        for k in 0..din {
            let b = apply_choi(f, dmid, dout, &block(j, dmid, i, k));
            out.view_mut((i * dout, k * dout), (dout, dout)).copy_from(&b);
        }
    }
    out
}

/// Choi matrix of a tensor product, reordered from (ref1 out1 ref2 out2) to (ref1 ref2 out1 out2).
fn tensor_choi(j1: &CMat, d1i: usize, d1o: usize, j2: &CMat, d2i: usize, d2o: usize) -> CMat {
    let big = crate::matcore::kron(j1, j2);
    let n = d1i * d2i * d1o * d2o;
    let src = |i1: usize, i2: usize, a1: usize, a2: usize| (i1 * d1o + a1) * (d2i * d2o) + i2 * d2o + a2;
    let mut perm = vec![0usize; n];
    for i1 in 0..d1i {
        for i2 in 0..d2i {
            for a1 in 0..d1o {
                for a2 in 0..d2o {
                    perm[(i1 * d2i + i2) * (d1o * d2o) + a1 * d2o + a2] = src(i1, i2, a1, a2);
                }
            }
        }
    }
    CMat::from_fn(n, n, |r, s| big[(perm[r], perm[s])])
}

/// Hermiticity-preserving map given by its Choi matrix, e.g. a perspective of CP maps.
#[derive(Clone, Debug)]
pub struct HermMap {
    pub dim_in: usize,
    pub dim_out: usize,
    pub choi: CMat,
}

impl HermMap {
    pub fn apply_mat(&self, x: &CMat) -> CMat {
        apply_choi(&self.choi, self.dim_in, self.dim_out, x)
    }

    /// F ∘ self.
    pub fn then(&self, f: &CpMap) -> Result<HermMap> {
        if f.dim_in != self.dim_out {
            return Err(Error::Dimension(format!("cannot compose: {} -> {}", self.dim_out, f.dim_in)));
        }
        Ok(HermMap {
            dim_in: self.dim_in,
            dim_out: f.dim_out,
            choi: post_choi(&self.choi, self.dim_in, self.dim_out, f.choi.as_mat(), f.dim_out),
        })
    }

    /// self ∘ E.
    pub fn after(&self, e: &CpMap) -> Result<HermMap> {
        if e.dim_out != self.dim_in {
            return Err(Error::Dimension(format!("cannot compose: {} -> {}", e.dim_out, self.dim_in)));
        }
        Ok(HermMap {
            dim_in: e.dim_in,
            dim_out: self.dim_out,
            choi: post_choi(e.choi.as_mat(), e.dim_in, e.dim_out, &self.choi, self.dim_out),
        })
    }

    pub fn tensor(&self, e: &CpMap) -> HermMap {
        HermMap {
            dim_in: self.dim_in * e.dim_in,
            dim_out: self.dim_out * e.dim_out,
            choi: tensor_choi(&self.choi, self.dim_in, self.dim_out, e.choi.as_mat(), e.dim_in, e.dim_out),
        }
    }

    pub fn into_cp(self) -> Result<CpMap> {
        CpMap::from_choi(self.dim_in, self.dim_out, PsdMatrix::new(self.choi)?)
    }
}

#[derive(Clone, Debug)]
pub struct CpMap {
    pub dim_in: usize,
    pub dim_out: usize,
    pub choi: PsdMatrix,
}

impl CpMap {
    pub fn from_choi(dim_in: usize, dim_out: usize, choi: PsdMatrix) -> Result<Self> {
        if dim_in == 0 || dim_out == 0 || choi.dim() != dim_in * dim_out {
            return Err(Error::Dimension(format!(
                "Choi matrix of dim {} does not match {dim_in} x {dim_out}",
                choi.dim()
            )));
        }
        Ok(CpMap { dim_in, dim_out, choi })
    }

    /// Kraus operators are dim_out x dim_in.
    pub fn from_kraus(ks: &[CMat]) -> Result<Self> {
        let first = ks.first().ok_or_else(|| Error::Domain("empty Kraus set".into()))?;
        let (dout, din) = (first.nrows(), first.ncols());
        let mut j = CMat::zeros(din * dout, din * dout);
        for k in ks {
            if k.nrows() != dout || k.ncols() != din {
                return Err(Error::Dimension("Kraus operators differ in shape".into()));
            }
            let v = crate::matcore::CVec::from_fn(din * dout, |r, _| k[(r % dout, r / dout)]);
            j += &v * v.adjoint();
        }
        Self::from_choi(din, dout, PsdMatrix::from_hermitian(hermitize(&j)))
    }

    pub fn identity(d: usize) -> Self {
        Self::from_kraus(&[CMat::identity(d, d)]).expect("identity Kraus")
    }

    pub fn unitary(u: &CMat) -> Self {
        Self::from_kraus(std::slice::from_ref(u)).expect("unitary Kraus")
    }

    /// rho -> a Tr(rho).
    pub fn replacer(dim_in: usize, a: &PsdMatrix) -> Self {
        let choi = PsdMatrix::identity(dim_in).kron(a);
        CpMap { dim_in, dim_out: a.dim(), choi }
    }

    /// Completely depolarizing map I Tr(.) / dim_out.
    pub fn depolarizing(dim_in: usize, dim_out: usize) -> Self {
        let choi = PsdMatrix::identity(dim_in * dim_out).scale(1.0 / dim_out as f64);
        CpMap { dim_in, dim_out, choi }
    }

    /// (1-p) id + p times the completely depolarizing channel.
    pub fn depolarizing_mix(d: usize, p: f64) -> Self {
        let id = Self::identity(d);
        let m = id.choi.as_mat() * c(1.0 - p) + CMat::identity(d * d, d * d) * c(p / d as f64);
        CpMap {
            dim_in: d,
            dim_out: d,
            choi: PsdMatrix::from_hermitian(m),
        }
    }

    pub fn scale(&self, s: f64) -> CpMap {
        CpMap {
            dim_in: self.dim_in,
            dim_out: self.dim_out,
            choi: self.choi.scale(s),
        }
    }

    pub fn as_herm(&self) -> HermMap {
        HermMap {
            dim_in: self.dim_in,
            dim_out: self.dim_out,
            choi: self.choi.as_mat().clone(),
        }
    }

    pub fn apply_mat(&self, x: &CMat) -> CMat {
        apply_choi(self.choi.as_mat(), self.dim_in, self.dim_out, x)
    }

    pub fn apply(&self, rho: &PsdMatrix) -> Result<PsdMatrix> {
        if rho.dim() != self.dim_in {
            return Err(Error::Dimension(format!("input dim {} != {}", rho.dim(), self.dim_in)));
        }
        Ok(PsdMatrix::from_hermitian(hermitize(&self.apply_mat(rho.as_mat()))))
    }

    /// f ∘ e.
    pub fn compose(f: &CpMap, e: &CpMap) -> Result<CpMap> {
        let h = e.as_herm().then(f)?;
        Ok(CpMap {
            dim_in: h.dim_in,
            dim_out: h.dim_out,
            choi: PsdMatrix::from_hermitian(hermitize(&h.choi)),
        })
    }

    pub fn tensor(e: &CpMap, f: &CpMap) -> CpMap {
        let h = e.as_herm().tensor(f);
        CpMap {
            dim_in: h.dim_in,
            dim_out: h.dim_out,
            choi: PsdMatrix::from_hermitian(h.choi),
        }
    }

    pub fn tensor_power(&self, n: usize) -> Result<CpMap> {
        if n == 0 {
            return Err(Error::Domain("tensor power needs n >= 1".into()));
        }
        let cap = crate::config::get().dim_cap;
        let need = (self.dim_in * self.dim_out).checked_pow(n as u32).unwrap_or(usize::MAX);
        if need > cap {
            return Err(Error::Resource { needed: need, cap });
        }
        let mut out = self.clone();
        for _ in 1..n {
            out = CpMap::tensor(&out, self);
        }
        Ok(out)
    }

    pub fn trace_preservation_residual(&self) -> f64 {
        let pt = partial_trace(self.choi.as_mat(), &[self.dim_in, self.dim_out], 1).expect("dims match");
        (pt - CMat::identity(self.dim_in, self.dim_in)).norm()
    }

    pub fn is_trace_preserving(&self) -> bool {
        self.trace_preservation_residual() <= 1e-9
    }

    /// {"dim_in", "dim_out", "choi": matrix} or {"kraus": [matrix, ...]}.
    pub fn from_json(v: &Value, pointer: &str) -> Result<Self> {
        if let Some(ks) = v.get("kraus") {
            let arr = ks
                .as_array()
                .ok_or_else(|| Error::input(format!("{pointer}/kraus"), "expected an array"))?;
            let mats = arr
                .iter()
                .enumerate()
                .map(|(i, k)| matrix_from_json(k, &format!("{pointer}/kraus/{i}")))
                .collect::<Result<Vec<_>>>()?;
            return Self::from_kraus(&mats).map_err(|e| Error::input(format!("{pointer}/kraus"), e.to_string()));
        }
        let dim = |key: &str| {
            v.get(key)
                .and_then(Value::as_u64)
                .filter(|&d| d > 0)
                .map(|d| d as usize)
                .ok_or_else(|| Error::input(format!("{pointer}/{key}"), "expected a positive integer"))
        };
        let (din, dout) = (dim("dim_in")?, dim("dim_out")?);
        let choi_v = v
            .get("choi")
            .ok_or_else(|| Error::input(format!("{pointer}/choi"), "missing field"))?;
        let choi = psd_from_json(choi_v, &format!("{pointer}/choi"))?;
        Self::from_choi(din, dout, choi).map_err(|e| Error::input(format!("{pointer}/choi"), e.to_string()))
    }
}

fn check_pair(n: &CpMap, m: &CpMap) -> Result<()> {
    if n.dim_in != m.dim_in || n.dim_out != m.dim_out {
        return Err(Error::Dimension("maps have different input or output dims".into()));
    }
    Ok(())
}

/// N <=_CP M, with margin lambda_min(J(M) - J(N)).
pub fn cp_leq(n: &CpMap, m: &CpMap) -> Result<(bool, f64)> {
    herm_cp_leq(&n.as_herm(), &m.as_herm())
}

pub fn herm_cp_leq(n: &HermMap, m: &HermMap) -> Result<(bool, f64)> {
    if n.dim_in != m.dim_in || n.dim_out != m.dim_out {
        return Err(Error::Dimension("maps have different input or output dims".into()));
    }
    let margin = lambda_min(&(&m.choi - &n.choi))?;
    let scale = n.choi.norm().max(m.choi.norm()).max(1.0);
    Ok((margin >= -CP_TOL * scale, margin))
}

/// M #_t N with weight t on N.
pub fn channel_ka_mean(n: &CpMap, m: &CpMap, t: f64) -> Result<CpMap> {
    check_pair(n, m)?;
    CpMap::from_choi(n.dim_in, n.dim_out, ka_mean(&n.choi, &m.choi, t)?)
}

/// Perspective of the Choi matrices; the regularization N + eps·(completely
/// depolarizing) shifts Choi matrices by (eps/dim_out)·I.
pub fn superop_perspective(f: &ScalarFn, n: &CpMap, m: &CpMap, eps_path: &[f64]) -> Result<HermMap> {
    check_pair(n, m)?;
    let scaled: Vec<f64> = eps_path.iter().map(|e| e / n.dim_out as f64).collect();
    let choi = perspective(f, &n.choi, &m.choi, &scaled)?;
    Ok(HermMap {
        dim_in: n.dim_in,
        dim_out: n.dim_out,
        choi,
    })
}

#[derive(Clone, Debug)]
pub struct DiscriminationReport {
    pub n: usize,
    /// Some t with E <=_CP N2 #_t N1.
    pub ka_verdict: MembershipVerdict,
    /// E^n <=_CP p N1^n + (1-p) N2^n for some p.
    pub am_feasible: bool,
    /// All sampled parallel strategies satisfy Tr T E_n(phi) <= max_y Tr T N_y,n(phi).
    pub strategies_pass: bool,
    pub worst_strategy_margin: f64,
    pub strategies_tried: usize,
    /// The verdicts agree with the equivalence of the mean and strategy conditions.
    pub consistent: bool,
}

/// Output of id_R ⊗ N^n on the vector (X ⊗ I) Ψ, i.e. (X ⊗ I) J (X ⊗ I)*.
fn strategy_output(j: &CMat, dout: usize, x: &CMat) -> CMat {
    let xi = crate::matcore::kron(x, &CMat::identity(dout, dout));
    hermitize(&(&xi * j * xi.adjoint()))
}

/// Tests the channel discrimination equivalences on n copies with sampled
/// parallel strategies (reference system of the input's size).
pub fn discrimination_equivalence_check<R: Rng + ?Sized>(
    e: &CpMap,
    n1: &CpMap,
    n2: &CpMap,
    n: usize,
    trials: usize,
    rng: &mut R,
) -> Result<DiscriminationReport> {
    check_pair(e, n1)?;
    check_pair(e, n2)?;
    let ka_verdict = ka_membership(&e.choi, &n1.choi, &n2.choi)?;
    let en = e.tensor_power(n)?;
    let ns = [n1.tensor_power(n)?, n2.tensor_power(n)?];
    let am = am_feasibility_quantum(&e.choi, &[n1.choi.clone(), n2.choi.clone()], n)?;

    let (din, dout) = (en.dim_in, en.dim_out);
    let margin = |x: &CMat, tm: &CMat| {
        let lhs = trace_prod_re(&strategy_output(en.choi.as_mat(), dout, x), tm);
        let rhs = ns
            .iter()
            .map(|m| trace_prod_re(&strategy_output(m.choi.as_mat(), dout, x), tm))
            .fold(f64::NEG_INFINITY, f64::max);
        (rhs - lhs) / lhs.abs().max(rhs.abs()).max(1e-300)
    };
    let dim = din * dout;
    let ident = CMat::identity(dim, dim);
    // Maximally entangled input with the identity test and the positive parts
    // of the output differences.
    let x0 = CMat::identity(din, din) / c((din as f64).sqrt());
    let mut structured = vec![(x0.clone(), ident.clone())];
    for m in &ns {
        let diff = strategy_output(en.choi.as_mat(), dout, &x0) - strategy_output(m.choi.as_mat(), dout, &x0);
        let d = eigh(&diff)?;
        structured.push((x0.clone(), d.apply(|l| if l > 0.0 { 1.0 } else { 0.0 })));
    }
    let mut worst = f64::INFINITY;
    for (x, tm) in &structured {
        worst = worst.min(margin(x, tm));
    }
    for _ in 0..trials {
        let g = random::complex_gaussian(rng, din, din);
        let x = &g / c(g.norm());
        let u = random::random_unitary(rng, dim);
        let mut ud = u.clone();
        for jx in 0..dim {
            let l: f64 = rng.random_range(0.0..1.0);
            for ix in 0..dim {
                ud[(ix, jx)] *= l;
            }
        }
        let tm = hermitize(&(ud * u.adjoint()));
        worst = worst.min(margin(&x, &tm));
    }
    let strategies_pass = worst >= -1e-8;
    let consistent = (!ka_verdict.member || (am.feasible && strategies_pass))
        && (strategies_pass || !ka_verdict.member)
        && (am.feasible || !ka_verdict.member);
    Ok(DiscriminationReport {
        n,
        ka_verdict,
        am_feasible: am.feasible,
        strategies_pass,
        worst_strategy_margin: worst,
        strategies_tried: structured.len() + trials,
        consistent,
    })
}

/// Random channel with the given Kraus rank.
pub fn random_channel<R: Rng + ?Sized>(rng: &mut R, dim_in: usize, dim_out: usize, kraus_rank: usize) -> CpMap {
    CpMap::from_kraus(&random::random_channel_kraus(rng, dim_in, dim_out, kraus_rank)).expect("valid Kraus set")
}

/// Same map expressed in the Choi basis rotated by U on the reference.
pub fn rotate_reference(j: &CMat, dout: usize, u: &CMat) -> CMat {
    let w = crate::matcore::kron(u, &CMat::identity(dout, dout));
    hermitize(&(&w * j * w.adjoint()))
}
