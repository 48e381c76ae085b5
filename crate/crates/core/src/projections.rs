//! Two-projection calculus: Jordan normal form, ε-orthogonality and
//! ε-domination, ε-subtraction and restriction, and composite tests for
//! states with disjoint supports.

use std::ops::Deref;

use crate::error::{Error, Result};
use crate::matcore::{c, eigh, hermitize, lambda_max, lambda_min, outer, support_basis, trace_prod_re, CMat, CVec, PsdMatrix};

/// Block angles closer than this to 0 or π/2 (in eigenvalues of S+Q) go to the commuting part.
pub const THETA_TOL: f64 = 1e-7;
pub const PROJ_TOL: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq)]
pub struct Projection(CMat);

impl Projection {
    pub fn new(m: CMat) -> Result<Self> {
        if m.nrows() != m.ncols() || m.nrows() == 0 {
            return Err(Error::Dimension(format!("projection must be square, got {}x{}", m.nrows(), m.ncols())));
        }
        let h = hermitize(&m);
        let herm_err = (&m - &h).norm();
        let idem_err = (&h * &h - &h).norm();
        if herm_err > PROJ_TOL || idem_err > PROJ_TOL {
            return Err(Error::Precondition(format!(
                "not a projection: hermiticity error {herm_err:.3e}, idempotency error {idem_err:.3e}"
            )));
        }
        Ok(Projection(h))
    }

    /// Projection onto the column span of `v`.
    pub fn range_of(v: &CMat) -> Result<Self> {
        let basis = support_basis(&hermitize(&(v * v.adjoint())))?;
        Ok(Projection(hermitize(&(&basis * basis.adjoint()))))
    }

    pub fn support_of(a: &PsdMatrix) -> Result<Self> {
        Ok(Projection(a.support()?))
    }

    pub fn zeros(d: usize) -> Self {
        Projection(CMat::zeros(d, d))
    }

    pub fn identity(d: usize) -> Self {
        Projection(CMat::identity(d, d))
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn as_mat(&self) -> &CMat {
        &self.0
    }

    pub fn complement(&self) -> Projection {
        Projection(CMat::identity(self.dim(), self.dim()) - &self.0)
    }

    pub fn rank(&self) -> usize {
        self.0.trace().re.round() as usize
    }

    pub fn kron(&self, other: &Projection) -> Projection {
        Projection(crate::matcore::kron(&self.0, &other.0))
    }
}

impl Deref for Projection {
    type Target = CMat;
    fn deref(&self) -> &CMat {
        &self.0
    }
}

fn check_dims(a: &Projection, b: &Projection) -> Result<()> {
    if a.dim() != b.dim() {
        return Err(Error::Dimension(format!("projection dims differ: {} vs {}", a.dim(), b.dim())));
    }
    Ok(())
}

#[derive(Clone, Debug)]
pub struct JordanBlock {
    pub theta: f64,
    pub e: CVec,
    pub e_perp: CVec,
}

impl JordanBlock {
    /// cos θ e + sin θ e⊥, the range of Q in this block.
    pub fn phi(&self) -> CVec {
        &self.e * c(self.theta.cos()) + &self.e_perp * c(self.theta.sin())
    }

    /// sin θ e - cos θ e⊥.
    pub fn phi_perp(&self) -> CVec {
        &self.e * c(self.theta.sin()) - &self.e_perp * c(self.theta.cos())
    }
}

#[derive(Clone, Debug)]
pub struct JordanDecomposition {
    pub dim: usize,
    /// Ascending in θ.
    pub blocks: Vec<JordanBlock>,
    pub commuting_basis: Vec<CVec>,
    pub s_prime: Vec<bool>,
    pub q_prime: Vec<bool>,
}

fn fix_phase(v: &mut CVec) {
    let (mut best, mut idx) = (0.0, 0);
    for (i, z) in v.iter().enumerate() {
        // First entry within rounding of the largest magnitude.
        if z.norm() > best * (1.0 + 1e-9) + 1e-12 {
            best = z.norm();
            idx = i;
        }
    }
    if best > 0.0 {
        let ph = v[idx].conj() / best;
        *v *= ph;
    }
}

impl JordanDecomposition {
    fn sum_outer<'a>(&self, vs: impl Iterator<Item = CVec>) -> CMat {
        vs.fold(CMat::zeros(self.dim, self.dim), |acc, v| acc + outer(&v))
    }

    /// S' and Q' as operators on the whole space.
    pub fn s_prime_proj(&self) -> CMat {
        self.sum_outer(self.commuting_basis.iter().zip(&self.s_prime).filter(|(_, &s)| s).map(|(v, _)| v.clone()))
    }

    pub fn q_prime_proj(&self) -> CMat {
        self.sum_outer(self.commuting_basis.iter().zip(&self.q_prime).filter(|(_, &q)| q).map(|(v, _)| v.clone()))
    }

    fn commuting_proj(&self, pick: impl Fn(bool, bool) -> bool) -> CMat {
        self.sum_outer(
            self.commuting_basis
                .iter()
                .zip(self.s_prime.iter().zip(&self.q_prime))
                .filter(|(_, (&s, &q))| pick(s, q))
                .map(|(v, _)| v.clone()),
        )
    }

    pub fn reconstruct_s(&self) -> CMat {
        self.sum_outer(self.blocks.iter().map(|b| b.e.clone())) + self.s_prime_proj()
    }

    pub fn reconstruct_q(&self) -> CMat {
        self.sum_outer(self.blocks.iter().map(JordanBlock::phi)) + self.q_prime_proj()
    }

    /// Largest Frobenius error of the reconstructed pair.
    pub fn residual(&self, s: &Projection, q: &Projection) -> f64 {
        let rs = (self.reconstruct_s() - s.as_mat()).norm();
        let rq = (self.reconstruct_q() - q.as_mat()).norm();
        rs.max(rq)
    }

    pub fn overlap(&self) -> f64 {
        let blocks = self.blocks.iter().map(|b| b.theta.cos()).fold(0.0, f64::max);
        let commuting = if self.s_prime.iter().zip(&self.q_prime).any(|(&s, &q)| s && q) { 1.0 } else { 0.0 };
        blocks.max(commuting)
    }
}

/// Jordan normal form of the pair (S, Q) from the spectrum of S + Q.
pub fn jordan_decompose(s: &Projection, q: &Projection) -> Result<JordanDecomposition> {
    jordan_decompose_tol(s, q, THETA_TOL)
}

pub fn jordan_decompose_tol(s: &Projection, q: &Projection, tol: f64) -> Result<JordanDecomposition> {
    check_dims(s, q)?;
    let d = s.dim();
    let sum = hermitize(&(s.as_mat() + q.as_mat()));
    let dec = eigh(&sum)?;
    let ident = CMat::identity(d, d);
    let not_s = &ident - s.as_mat();

    let near = |l: f64, x: f64| (l - x).abs() <= tol;
    let mut lower = Vec::new();
    let mut upper = Vec::new();
    let (mut zero, mut one, mut two) = (Vec::new(), Vec::new(), Vec::new());
    for (i, &l) in dec.values.iter().enumerate() {
        let v: CVec = dec.vectors.column(i).into_owned();
        if near(l, 0.0) || l < 0.0 {
            zero.push(v);
        } else if near(l, 1.0) {
            one.push(v);
        } else if near(l, 2.0) || l > 2.0 {
            two.push(v);
        } else if l < 1.0 {
            lower.push(l);
        } else {
            upper.push((l, v));
        }
    }
    if lower.len() != upper.len() {
        return Err(Error::Numerical {
            message: format!(
                "Jordan pairing failed: {} eigenvalues below 1 vs {} above; try a smaller tolerance",
                lower.len(),
                upper.len()
            ),
            residual: tol,
        });
    }
    // lower ascending pairs with upper descending: (1-c) + (1+c) = 2.
    for (lo, (hi, _)) in lower.iter().zip(upper.iter().rev()) {
        if (lo + hi - 2.0).abs() > 2.0 * tol {
            return Err(Error::Numerical {
                message: format!("Jordan pairing failed: {lo} and {hi} do not pair to 2; try a smaller tolerance"),
                residual: (lo + hi - 2.0).abs(),
            });
        }
    }

    let mut blocks: Vec<JordanBlock> = upper
        .into_iter()
        .map(|(_, mut v)| {
            let sv = s.as_mat() * &v;
            let pv = &not_s * &v;
            let (ns, np) = (sv.norm(), pv.norm());
            let mut e = sv / c(ns);
            fix_phase(&mut e);
            // Carry the phase chosen for e over to v so e⊥ stays consistent.
            let ph = e.dotc(&(s.as_mat() * &v)) / c(ns);
            v *= ph.conj();
            let e_perp = (&not_s * &v) / c(np);
            JordanBlock {
                theta: 2.0 * np.atan2(ns),
                e,
                e_perp,
            }
        })
        .collect();
    blocks.sort_by(|a, b| a.theta.total_cmp(&b.theta));

    let mut commuting_basis = Vec::new();
    let (mut s_prime, mut q_prime) = (Vec::new(), Vec::new());
    for mut v in zero {
        fix_phase(&mut v);
        commuting_basis.push(v);
        s_prime.push(false);
        q_prime.push(false);
    }
    if !one.is_empty() {
        // Eigenvalue 1 of S+Q: ran S ∩ ker Q plus ker S ∩ ran Q; split by S.
        let w = CMat::from_columns(&one);
        let inner = hermitize(&(w.adjoint() * s.as_mat() * &w));
        let id = eigh(&inner)?;
        for (i, &l) in id.values.iter().enumerate() {
            let mut v = &w * id.vectors.column(i);
            fix_phase(&mut v);
            commuting_basis.push(v);
            let in_s = l > 0.5;
            s_prime.push(in_s);
            q_prime.push(!in_s);
        }
    }
    for mut v in two {
        fix_phase(&mut v);
        commuting_basis.push(v);
        s_prime.push(true);
        q_prime.push(true);
    }
    Ok(JordanDecomposition {
        dim: d,
        blocks,
        commuting_basis,
        s_prime,
        q_prime,
    })
}

/// ‖SQ‖, the largest |<v,w>| over unit vectors in the two ranges.
pub fn overlap(s: &Projection, q: &Projection) -> Result<f64> {
    check_dims(s, q)?;
    let qsq = hermitize(&(q.as_mat() * s.as_mat() * q.as_mat()));
    Ok(lambda_max(&qsq)?.max(0.0).sqrt().min(1.0))
}

fn check_eps(eps: f64) -> Result<()> {
    if !(0.0..1.0).contains(&eps) {
        return Err(Error::Domain(format!("eps must lie in [0,1), got {eps}")));
    }
    Ok(())
}

/// Spectrum of S compressed to range(Q); empty when Q = 0.
fn compressed_spectrum(q: &Projection, s: &Projection) -> Result<Vec<f64>> {
    let basis = support_basis(q.as_mat())?;
    if basis.ncols() == 0 {
        return Ok(Vec::new());
    }
    Ok(eigh(&hermitize(&(basis.adjoint() * s.as_mat() * &basis)))?.values)
}

/// Q ≤_ε S: QSQ ≥ (1-ε²) Q.
pub fn eps_dominated(q: &Projection, s: &Projection, eps: f64) -> Result<bool> {
    check_dims(q, s)?;
    check_eps(eps)?;
    let spec = compressed_spectrum(q, s)?;
    Ok(spec.first().is_none_or(|&l| l >= 1.0 - eps * eps - PROJ_TOL))
}

/// Q ⟂_ε S: QSQ ≤ ε² Q.
pub fn eps_orthogonal(q: &Projection, s: &Projection, eps: f64) -> Result<bool> {
    check_dims(q, s)?;
    check_eps(eps)?;
    let qsq = hermitize(&(q.as_mat() * s.as_mat() * q.as_mat()));
    Ok(lambda_max(&qsq)? <= eps * eps + PROJ_TOL)
}

/// Evaluations of the equivalent characterizations of Q ⟂_ε S.
#[derive(Clone, Debug)]
pub struct OrthogonalityConditions {
    /// ‖SQv‖² ≤ ε²‖Qv‖² on range(Q).
    pub vector_q: bool,
    /// QSQ ≤ ε² Q.
    pub operator_q: bool,
    /// Q'S' = 0 and cos θ_k ≤ ε.
    pub jordan: bool,
    pub overlap: bool,
    /// (1-ε)(Q∨S) ≤ Q+S ≤ (1+ε)(Q∨S).
    pub sandwich: bool,
    /// SQS ≤ ε² S.
    pub operator_s: bool,
    /// ‖QSv‖² ≤ ε²‖Sv‖² on range(S).
    pub vector_s: bool,
}

impl OrthogonalityConditions {
    pub fn as_array(&self) -> [bool; 7] {
        [
            self.vector_q,
            self.operator_q,
            self.jordan,
            self.overlap,
            self.sandwich,
            self.operator_s,
            self.vector_s,
        ]
    }

    pub fn agree(&self) -> bool {
        let a = self.as_array();
        a.iter().all(|&x| x == a[0])
    }
}

pub fn orthogonality_conditions(q: &Projection, s: &Projection, eps: f64, tol: f64) -> Result<OrthogonalityConditions> {
    check_dims(q, s)?;
    check_eps(eps)?;
    let e2 = eps * eps;
    let vector_q = compressed_spectrum(q, s)?.last().is_none_or(|&l| l <= e2 + tol);
    let vector_s = compressed_spectrum(s, q)?.last().is_none_or(|&l| l <= e2 + tol);
    let (qm, sm) = (q.as_mat(), s.as_mat());
    let operator_q = lambda_max(&hermitize(&(qm * sm * qm - qm * c(e2))))? <= tol;
    let operator_s = lambda_max(&hermitize(&(sm * qm * sm - sm * c(e2))))? <= tol;
    let jd = jordan_decompose(s, q)?;
    let jordan = !jd.s_prime.iter().zip(&jd.q_prime).any(|(&a, &b)| a && b)
        && jd.blocks.iter().all(|b| b.theta.cos() <= eps + tol);
    let overlap = overlap(s, q)? <= eps + tol;
    let j = join(&[q.clone(), s.clone()])?;
    let sum = qm + sm;
    let sandwich = lambda_min(&hermitize(&(&sum - j.as_mat() * c(1.0 - eps))))? >= -tol
        && lambda_min(&hermitize(&(j.as_mat() * c(1.0 + eps) - &sum)))? >= -tol;
    Ok(OrthogonalityConditions {
        vector_q,
        operator_q,
        jordan,
        overlap,
        sandwich,
        operator_s,
        vector_s,
    })
}

/// Q ⊖_ε S: blocks with cos θ ≤ ε, plus Q'(I-S').
pub fn eps_subtract(q: &Projection, s: &Projection, eps: f64) -> Result<Projection> {
    check_eps(eps)?;
    let jd = jordan_decompose(s, q)?;
    let keep = jd
        .blocks
        .iter()
        .filter(|b| b.theta.cos().powi(2) <= eps * eps + PROJ_TOL)
        .fold(CMat::zeros(jd.dim, jd.dim), |acc, b| acc + outer(&b.phi()));
    Ok(Projection(hermitize(&(keep + jd.commuting_proj(|s, q| q && !s)))))
}

/// Q_{S,ε}: blocks with sin θ ≤ ε, plus Q'S'.
pub fn restrict(q: &Projection, s: &Projection, eps: f64) -> Result<Projection> {
    check_eps(eps)?;
    let jd = jordan_decompose(s, q)?;
    let keep = jd
        .blocks
        .iter()
        .filter(|b| b.theta.sin().powi(2) <= eps * eps + PROJ_TOL)
        .fold(CMat::zeros(jd.dim, jd.dim), |acc, b| acc + outer(&b.phi()));
    Ok(Projection(hermitize(&(keep + jd.commuting_proj(|s, q| q && s)))))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EpsMode {
    /// sqrt((t-1)/((r-1)(2t-1))). Exceeds the sharp two-projection value
    /// 1 - 1/t (e.g. r = t = 2), where the domination bound then fails.
    ClosedForm,
    Recursive,
}

/// ε(r,t) such that pairwise ε-orthogonal Q_1..Q_r satisfy ∨Q_j ≤ t ΣQ_j.
pub fn eps_rt(r: usize, t: f64, mode: EpsMode) -> Result<f64> {
    if r < 2 || !(t > 1.0) || !t.is_finite() {
        return Err(Error::Domain(format!("eps_rt needs r >= 2 and finite t > 1, got r={r}, t={t}")));
    }
    Ok(match mode {
        EpsMode::ClosedForm => ((t - 1.0) / ((r as f64 - 1.0) * (2.0 * t - 1.0))).sqrt(),
        EpsMode::Recursive => eps_rt_recursive(r, t),
    })
}

fn eps_rt_recursive(r: usize, t: f64) -> f64 {
    if r == 2 {
        return 1.0 - 1.0 / t;
    }
    let n = (r - 1) as f64;
    let ft = (1.0 + t) / 2.0;
    eps_rt_recursive(r - 1, ft).min((1.0 - ft / t) / (n * ft).sqrt())
}

/// Projection onto the span of all ranges.
pub fn join(ps: &[Projection]) -> Result<Projection> {
    let first = ps.first().ok_or_else(|| Error::Domain("join of an empty list".into()))?;
    let mut sum = CMat::zeros(first.dim(), first.dim());
    for p in ps {
        check_dims(first, p)?;
        sum += p.as_mat();
    }
    let basis = support_basis(&hermitize(&sum))?;
    Ok(Projection(hermitize(&(&basis * basis.adjoint()))))
}

pub fn meet(ps: &[Projection]) -> Result<Projection> {
    let comps: Vec<Projection> = ps.iter().map(Projection::complement).collect();
    Ok(join(&comps)?.complement())
}

#[derive(Clone, Debug, serde::Serialize)]
pub struct TypeOneCert {
    /// Tr ρ_j (I - T).
    pub error: f64,
    /// (1/ε²) Tr ρ_j (I - T_j).
    pub bound: f64,
    pub holds: bool,
}

#[derive(Clone, Debug, serde::Serialize)]
pub struct CompositeCerts {
    pub type_one: Vec<TypeOneCert>,
    /// λ_min(t ΣT_j - T).
    pub domination_margin: f64,
    pub dominated: bool,
}

/// T = ∨_j (T_j)_{supp ρ_j, ε} for states with pairwise disjoint supports.
pub fn composite_test(tests: &[Projection], states: &[PsdMatrix], eps: f64, t: f64) -> Result<(Projection, CompositeCerts)> {
    if tests.is_empty() || tests.len() != states.len() {
        return Err(Error::Domain(format!("{} tests for {} states", tests.len(), states.len())));
    }
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::Domain(format!("eps must lie in (0,1), got {eps}")));
    }
    let supports = states.iter().map(Projection::support_of).collect::<Result<Vec<_>>>()?;
    for (j, sj) in supports.iter().enumerate() {
        check_dims(&tests[j], sj)?;
        for (k, sk) in supports.iter().enumerate().skip(j + 1) {
            if meet(&[sj.clone(), sk.clone()])?.rank() != 0 {
                return Err(Error::Precondition(format!("supports of states {j} and {k} intersect")));
            }
        }
    }
    let restricted = tests
        .iter()
        .zip(&supports)
        .map(|(tj, sj)| restrict(tj, sj, eps))
        .collect::<Result<Vec<_>>>()?;
    let big_t = join(&restricted)?;
    let d = big_t.dim();
    let not_t = CMat::identity(d, d) - big_t.as_mat();
    let type_one = states
        .iter()
        .zip(tests)
        .map(|(rho, tj)| {
            let error = trace_prod_re(rho, &not_t);
            let bound = trace_prod_re(rho, &tj.complement()) / (eps * eps);
            let scale = rho.trace().max(1.0);
            TypeOneCert {
                error,
                bound,
                holds: error <= bound + PROJ_TOL * scale,
            }
        })
        .collect();
    let sum = tests.iter().fold(CMat::zeros(d, d), |acc, tj| acc + tj.as_mat());
    let domination_margin = lambda_min(&hermitize(&(sum * c(t) - big_t.as_mat())))?;
    let dominated = domination_margin >= -PROJ_TOL * t * tests.len() as f64;
    Ok((
        big_t,
        CompositeCerts {
            type_one,
            domination_margin,
            dominated,
        },
    ))
}

/// Copy number beyond which the tensor-power composite test is dominated,
/// given λ with R_j R_k R_j ≤ λ R_j on one copy.
pub fn domination_threshold(lambda: f64, eps_rt: f64, eps: f64) -> Option<usize> {
    if !(eps < eps_rt / 2.0) || !(lambda < 1.0) {
        return None;
    }
    if lambda <= 0.0 {
        return Some(1);
    }
    let n = (2.0 * (eps_rt - 2.0 * eps).ln() / lambda.ln()).ceil();
    Some(n.max(1.0) as usize)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matcore::from_real_rows;
    use crate::random;
    use rand::Rng;
    use std::f64::consts::PI;

    fn theta_pair(theta: f64) -> (Projection, Projection) {
        let s = Projection::new(from_real_rows(&[&[1.0, 0.0], &[0.0, 0.0]])).unwrap();
        let (co, si) = (theta.cos(), theta.sin());
        let q = Projection::new(from_real_rows(&[&[co * co, co * si], &[co * si, si * si]])).unwrap();
        (s, q)
    }

    fn random_pair<R: Rng>(rng: &mut R, d: usize) -> (Projection, Projection) {
        let rs = rng.random_range(0..=d);
        let rq = rng.random_range(0..=d);
        (
            Projection::new(random::random_projection(rng, d, rs)).unwrap(),
            Projection::new(random::random_projection(rng, d, rq)).unwrap(),
        )
    }

    #[test]
    fn jordan_examples() {
        let mut rng = random::rng(1);
        let s = Projection::new(random::random_projection(&mut rng, 4, 2)).unwrap();
        let jd = jordan_decompose(&s, &s).unwrap();
        assert!(jd.blocks.is_empty());
        assert_eq!(jd.s_prime, jd.q_prime);
        assert!(jd.residual(&s, &s) < 1e-10);

        let (s, q) = theta_pair(PI / 3.0);
        let jd = jordan_decompose(&s, &q).unwrap();
        assert_eq!(jd.blocks.len(), 1);
        assert!((jd.blocks[0].theta - PI / 3.0).abs() < 1e-12);
        assert!(jd.residual(&s, &q) < 1e-12);

        for d in [2, 5, 6, 8] {
            let (s, q) = random_pair(&mut rng, d);
            let jd = jordan_decompose(&s, &q).unwrap();
            assert!(jd.residual(&s, &q) < 1e-8);
            assert!(jd.blocks.windows(2).all(|w| w[0].theta <= w[1].theta));
        }
    }

    #[test]
    fn overlap_examples() {
        let e1 = Projection::new(from_real_rows(&[&[1.0, 0.0], &[0.0, 0.0]])).unwrap();
        assert!(overlap(&e1, &e1.complement()).unwrap() < 1e-15);
        let (s, q) = theta_pair(PI / 3.0);
        assert!((overlap(&s, &q).unwrap() - 0.5).abs() < 1e-12);
        assert!((overlap(&e1, &e1).unwrap() - 1.0).abs() < 1e-12);
        let mut rng = random::rng(2);
        for _ in 0..20 {
            let (s, q) = random_pair(&mut rng, 5);
            let jd = jordan_decompose(&s, &q).unwrap();
            assert!((overlap(&s, &q).unwrap() - jd.overlap()).abs() < 1e-9);
        }
    }

    #[test]
    fn eps_relations() {
        let mut rng = random::rng(3);
        let s = Projection::new(random::random_projection(&mut rng, 4, 3)).unwrap();
        let basis = support_basis(s.as_mat()).unwrap();
        let q = Projection::range_of(&basis.columns(0, 2).into_owned()).unwrap();
        assert!(eps_dominated(&q, &s, 0.0).unwrap());
        assert!(eps_orthogonal(&q, &s.complement(), 0.0).unwrap());

        let (s, q) = theta_pair(PI / 3.0);
        let half = 0.5;
        let root = (3.0f64).sqrt() / 2.0;
        assert!(eps_orthogonal(&q, &s, half).unwrap() && !eps_orthogonal(&q, &s, half - 1e-6).unwrap());
        assert!(eps_dominated(&q, &s, root).unwrap() && !eps_dominated(&q, &s, root - 1e-6).unwrap());

        for _ in 0..50 {
            let (s, q) = random_pair(&mut rng, 4);
            let eps: f64 = rng.random_range(0.0..1.0);
            assert_eq!(eps_dominated(&q, &s, eps).unwrap(), eps_orthogonal(&q, &s.complement(), eps).unwrap());
            assert!(orthogonality_conditions(&q, &s, eps, 1e-8).unwrap().agree());
        }
    }

    #[test]
    fn subtraction_and_restriction() {
        let s = Projection::new(crate::matcore::from_diag(&[1.0, 1.0, 0.0, 0.0])).unwrap();
        let q = Projection::new(crate::matcore::from_diag(&[1.0, 0.0, 1.0, 0.0])).unwrap();
        for eps in [0.0, 0.3, 0.9] {
            let sub = eps_subtract(&q, &s, eps).unwrap();
            assert!((sub.as_mat() - crate::matcore::from_diag(&[0.0, 0.0, 1.0, 0.0])).norm() < 1e-12);
            let res = restrict(&q, &s, eps).unwrap();
            assert!((res.as_mat() - crate::matcore::from_diag(&[1.0, 0.0, 0.0, 0.0])).norm() < 1e-12);
        }
        let (s, q) = theta_pair(PI / 3.0);
        assert!((eps_subtract(&q, &s, 0.6).unwrap().as_mat() - q.as_mat()).norm() < 1e-12);
        assert!(restrict(&q, &s, 0.6).unwrap().as_mat().norm() < 1e-12);

        let mut rng = random::rng(4);
        for _ in 0..50 {
            let (s, q) = random_pair(&mut rng, 5);
            let eps: f64 = rng.random_range(0.05..0.95);
            let sub = eps_subtract(&q, &s, eps).unwrap();
            let res = restrict(&q, &s, eps).unwrap();
            for p in [&sub, &res] {
                assert!(lambda_min(&(q.as_mat() - p.as_mat())).unwrap() >= -1e-9);
            }
            assert!(eps_orthogonal(&sub, &s, eps).unwrap());
            assert!(eps_dominated(&res, &s, eps).unwrap());
        }
    }

    #[test]
    fn eps_rt_values() {
        assert!((eps_rt(2, 2.0, EpsMode::ClosedForm).unwrap() - (1.0f64 / 3.0).sqrt()).abs() < 1e-15);
        assert!((eps_rt(2, 3.0, EpsMode::Recursive).unwrap() - 2.0 / 3.0).abs() < 1e-15);
        for r in 2..6 {
            let e = eps_rt(r, 1.5, EpsMode::Recursive).unwrap();
            assert!(e > 0.0 && e < 1.0);
        }
        assert!(eps_rt(1, 2.0, EpsMode::ClosedForm).is_err());
        // Two lines at overlap exactly ε: ΣQ has eigenvalue 1 - ε < 1/t.
        let e = eps_rt(2, 2.0, EpsMode::ClosedForm).unwrap();
        let (s, q) = theta_pair(e.acos());
        assert!(eps_orthogonal(&q, &s, e).unwrap());
        let sum = s.as_mat() + q.as_mat();
        assert!((lambda_min(&sum).unwrap() - (1.0 - e)).abs() < 1e-12 && 1.0 - e < 0.5);
        assert!(eps_rt(2, 1.0, EpsMode::Recursive).is_err());
    }

    #[test]
    fn join_meet_cases() {
        let mut rng = random::rng(5);
        let p = Projection::new(random::random_projection(&mut rng, 4, 2)).unwrap();
        let q = Projection::new(random::random_projection(&mut rng, 4, 3)).unwrap();
        assert!((join(&[p.clone(), p.clone()]).unwrap().as_mat() - p.as_mat()).norm() < 1e-10);
        let pq = join(&[p.clone(), q.clone()]).unwrap();
        let absorbed = meet(&[p.clone(), pq]).unwrap();
        assert!((absorbed.as_mat() - p.as_mat()).norm() < 1e-9);
        let a = Projection::new(crate::matcore::from_diag(&[1.0, 1.0, 0.0])).unwrap();
        let b = Projection::new(crate::matcore::from_diag(&[0.0, 1.0, 1.0])).unwrap();
        assert!((join(&[a.clone(), b.clone()]).unwrap().as_mat() - CMat::identity(3, 3)).norm() < 1e-12);
        assert!((meet(&[a, b]).unwrap().as_mat() - crate::matcore::from_diag(&[0.0, 1.0, 0.0])).norm() < 1e-12);
    }

    #[test]
    fn composite_test_two_states() {
        let mut rng = random::rng(6);
        // States supported on orthogonal halves of a two-qubit space.
        let r1 = PsdMatrix::new(crate::matcore::direct_sum(&[random::random_density(&mut rng, 2, 2), CMat::zeros(2, 2)])).unwrap();
        let r2 = PsdMatrix::new(crate::matcore::direct_sum(&[CMat::zeros(2, 2), random::random_density(&mut rng, 2, 2)])).unwrap();
        let t1 = Projection::new(random::random_projection(&mut rng, 4, 3)).unwrap();
        let t2 = Projection::new(random::random_projection(&mut rng, 4, 3)).unwrap();
        let mut bounds = Vec::new();
        for eps in [0.3, 0.6, 0.9] {
            let (_, certs) = composite_test(&[t1.clone(), t2.clone()], &[r1.clone(), r2.clone()], eps, 2.0).unwrap();
            assert!(certs.type_one.iter().all(|c| c.holds));
            bounds.push(certs.type_one[0].bound);
        }
        assert!(bounds.windows(2).all(|w| w[0] >= w[1]));

        let (big_t, certs) = composite_test(std::slice::from_ref(&t1), std::slice::from_ref(&r1), 0.5, 2.0).unwrap();
        let want = restrict(&t1, &Projection::support_of(&r1).unwrap(), 0.5).unwrap();
        assert!((big_t.as_mat() - want.as_mat()).norm() < 1e-9);
        let direct = trace_prod_re(&r1, &want.complement());
        assert!((certs.type_one[0].error - direct).abs() < 1e-12);

        assert!(matches!(
            composite_test(&[t1.clone(), t2], &[r1.clone(), r1], 0.5, 2.0),
            Err(Error::Precondition(_))
        ));
    }

    #[test]
    fn threshold_formula() {
        assert_eq!(domination_threshold(0.0, 0.5, 0.1), Some(1));
        assert_eq!(domination_threshold(0.5, 0.5, 0.3), None);
        let n = domination_threshold(0.25, 0.5, 0.1).unwrap();
        assert!(0.25f64.powf(n as f64 / 2.0) + 0.2 <= 0.5 + 1e-12);
    }
}
