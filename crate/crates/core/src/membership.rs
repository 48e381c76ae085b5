//! Membership certification for C(R): the exact two-element Kubo-Ando
//! criterion, fixed-n arithmetic-mean feasibility and randomized oracles.

use rand::Rng;
use serde::Serialize;

use crate::divergences::golden_max;
use crate::error::{Error, Result};
use crate::matcore::{c, check_same_dim, eigh, kron_power, pow0, trace_prod_re, CMat, CVec, PsdMatrix};
use crate::means::KaCurve;
use crate::random;

pub const MEMBER_TOL: f64 = 1e-9;
pub const AM_TOL: f64 = 1e-8;
pub const DEFAULT_T_GRID: usize = 2001;
pub const INTERVAL_TOL: f64 = 1e-6;
/// Largest tensor-power dimension tried when searching for a non-member witness.
pub const WITNESS_DIM_LIMIT: usize = 64;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub enum Method {
    /// t-grid decision, no witness requested or needed.
    KaGrid,
    /// Non-member with an n-copy witness X from the arithmetic-mean dual.
    KaGridWithWitness,
    /// Non-member, but no witness found within the dimension limit.
    KaGridNoWitness,
}

#[derive(Clone, Debug)]
pub struct MembershipVerdict {
    pub member: bool,
    /// Closed intervals of t with lambda_min(A2 #_t A1 - C) >= -MEMBER_TOL.
    pub t_intervals: Vec<[f64; 2]>,
    pub best_t: f64,
    pub max_phi: f64,
    pub witness_n: Option<usize>,
    pub witness_x: Option<CMat>,
    /// min over the 1e-3 t-grid of Tr C^n X - (Tr A1^n X)^t (Tr A2^n X)^(1-t), Tr X = 1.
    pub witness_margin: Option<f64>,
    pub method: Method,
}

fn bottom(m: &CMat) -> Result<(f64, CVec)> {
    let d = eigh(m)?;
    Ok((d.values[0], d.vectors.column(0).into_owned()))
}

fn phi_at(curve: &KaCurve, cm: &CMat, t: f64) -> f64 {
    match curve.at(t).and_then(|m| eigh(&(m.as_mat() - cm))) {
        Ok(d) => d.values[0],
        Err(_) => f64::NAN,
    }
}

/// Decides C <= A2 #_t A1 for some t in [0,1].
pub fn ka_membership(cm: &PsdMatrix, a1: &PsdMatrix, a2: &PsdMatrix) -> Result<MembershipVerdict> {
    ka_membership_grid(cm, a1, a2, DEFAULT_T_GRID)
}

pub fn ka_membership_grid(cm: &PsdMatrix, a1: &PsdMatrix, a2: &PsdMatrix, grid: usize) -> Result<MembershipVerdict> {
    check_same_dim(cm, a1)?;
    check_same_dim(cm, a2)?;
    if grid < 3 {
        return Err(Error::Domain("t grid needs at least 3 points".into()));
    }
    let curve = KaCurve::new(a1, a2)?;
    let cmat = cm.as_mat();
    let phi = |t: f64| phi_at(&curve, cmat, t);
    let h = 1.0 / (grid - 1) as f64;
    let ts: Vec<f64> = (0..grid).map(|i| if i == grid - 1 { 1.0 } else { i as f64 * h }).collect();
    let ys: Vec<f64> = ts.iter().map(|&t| phi(t)).collect();
    let ok = |y: f64| y >= -MEMBER_TOL;

    let mut best = (ts[0], ys[0]);
    for (&t, &y) in ts.iter().zip(&ys) {
        if y > best.1 {
            best = (t, y);
        }
    }
    // Refine interior local maxima that the grid may have missed.
    let mut peaks = Vec::new();
    for i in 1..grid - 1 {
        if ys[i] >= ys[i - 1] && ys[i] >= ys[i + 1] && !ok(ys[i]) {
            let (t, y) = golden_max(&phi, ts[i - 1], ts[i + 1], 1e-13);
            if y > best.1 {
                best = (t, y);
            }
            if ok(y) {
                peaks.push(t);
            }
        }
    }

    let edge = |feasible: f64, infeasible: f64| {
        let (mut a, mut b) = (feasible, infeasible);
        while (b - a).abs() > INTERVAL_TOL {
            let m = 0.5 * (a + b);
            if ok(phi(m)) {
                a = m;
            } else {
                b = m;
            }
        }
        a
    };
    // phi may jump at 0 and 1, so an exact endpoint is only extended inward
    // when the interior limit is also feasible.
    let inward = |t: f64| {
        if t == 0.0 {
            ok(phi(1e-9))
        } else if t == 1.0 {
            ok(phi(1.0 - 1e-9))
        } else {
            true
        }
    };

    let mut intervals: Vec<[f64; 2]> = Vec::new();
    let mut i = 0;
    while i < grid {
        if !ok(ys[i]) {
            i += 1;
            continue;
        }
        let mut j = i;
        while j + 1 < grid && ok(ys[j + 1]) {
            j += 1;
        }
        let (mut i0, mut j0) = (i, j);
        if i == 0 && !inward(0.0) {
            intervals.push([0.0, 0.0]);
            i0 = 1;
        }
        if j == grid - 1 && !inward(1.0) {
            intervals.push([1.0, 1.0]);
            j0 = grid - 2;
        }
        if i0 <= j0 {
            let lo = match i0 {
                0 => 0.0,
                1 if i == 0 => edge(ts[1], 1e-9),
                _ => edge(ts[i0], ts[i0 - 1]),
            };
            let hi = if j0 == grid - 1 {
                1.0
            } else if j0 == grid - 2 && j == grid - 1 {
                edge(ts[j0], 1.0 - 1e-9)
            } else {
                edge(ts[j0], ts[j0 + 1])
            };
            intervals.push([lo, hi]);
        }
        i = j + 1;
    }
    for t in peaks {
        if intervals.iter().any(|iv| iv[0] <= t && t <= iv[1]) {
            continue;
        }
        let k = ((t / h).floor() as usize).min(grid - 2);
        intervals.push([edge(t, ts[k]), edge(t, ts[k + 1])]);
    }
    intervals.sort_by(|a, b| a[0].total_cmp(&b[0]));

    let member = !intervals.is_empty();
    let mut verdict = MembershipVerdict {
        member,
        t_intervals: intervals,
        best_t: best.0,
        max_phi: best.1,
        witness_n: None,
        witness_x: None,
        witness_margin: None,
        method: Method::KaGrid,
    };
    if !member {
        verdict.method = Method::KaGridNoWitness;
        let d = cm.dim();
        let mut n = 1;
        while d.pow(n as u32) <= WITNESS_DIM_LIMIT {
            if let Some((x, margin)) = am_witness(cm, a1, a2, n)? {
                verdict.witness_n = Some(n);
                verdict.witness_x = Some(x);
                verdict.witness_margin = Some(margin);
                verdict.method = Method::KaGridWithWitness;
                break;
            }
            n += 1;
        }
    }
    Ok(verdict)
}

/// min over t in {0, 0.001, ..., 1} of Tr C X - (Tr A1 X)^t (Tr A2 X)^(1-t).
pub fn weak_bound_violation(cn: &CMat, a1n: &CMat, a2n: &CMat, x: &CMat) -> f64 {
    let tc = trace_prod_re(cn, x);
    let (t1, t2) = (trace_prod_re(a1n, x).max(0.0), trace_prod_re(a2n, x).max(0.0));
    (0..=1000)
        .map(|k| {
            let t = k as f64 / 1000.0;
            tc - pow0(t1, t) * pow0(t2, 1.0 - t)
        })
        .fold(f64::INFINITY, f64::min)
}

/// Looks for X >= 0 with Tr C^n X > max_y Tr A_y^n X from the maximizer of
/// p -> lambda_min(p A1^n + (1-p) A2^n - C^n).
fn am_witness(cm: &PsdMatrix, a1: &PsdMatrix, a2: &PsdMatrix, n: usize) -> Result<Option<(CMat, f64)>> {
    let cn = kron_power(cm, n)?;
    let a1n = kron_power(a1, n)?;
    let a2n = kron_power(a2, n)?;
    let g = |p: f64| bottom(&(&a1n * c(p) + &a2n * c(1.0 - p) - &cn)).map(|x| x.0).unwrap_or(f64::NAN);
    let (p, v) = golden_max(&g, 0.0, 1.0, 1e-10);
    let (p, v) = [(0.0, g(0.0)), (1.0, g(1.0))]
        .into_iter()
        .fold((p, v), |acc, x| if x.1 > acc.1 { x } else { acc });
    if v >= -AM_TOL {
        return Ok(None);
    }
    let diff = &a1n - &a2n;
    let mut cands: Vec<CMat> = Vec::new();
    let delta = 1e-6;
    let vl = bottom(&(&a1n * c((p - delta).max(0.0)) + &a2n * c(1.0 - (p - delta).max(0.0)) - &cn))?.1;
    let vr = bottom(&(&a1n * c((p + delta).min(1.0)) + &a2n * c(1.0 - (p + delta).min(1.0)) - &cn))?.1;
    let xl = &vl * vl.adjoint();
    let xr = &vr * vr.adjoint();
    let (dl, dr) = (trace_prod_re(&diff, &xl), trace_prod_re(&diff, &xr));
    if dl > dr && dl >= 0.0 && dr <= 0.0 {
        let (wl, wr) = (-dr / (dl - dr), dl / (dl - dr));
        cands.push(&xl * c(wl) + &xr * c(wr));
    }
    cands.push(xl);
    cands.push(xr);
    let best = cands
        .into_iter()
        .map(|x| {
            let m = weak_bound_violation(&cn, &a1n, &a2n, &x);
            (x, m)
        })
        .max_by(|a, b| a.1.total_cmp(&b.1))
        .expect("non-empty");
    Ok((best.1 > 1e-8).then_some(best))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AmFeasibility {
    pub feasible: bool,
    pub mu: Option<Vec<f64>>,
    /// Best lambda_min found and the measure attaining it.
    pub max_lambda_min: f64,
    pub argmax: Vec<f64>,
    /// For two members, the interval of p (weight on the first) with lambda_min >= -AM_TOL.
    pub p_interval: Option<[f64; 2]>,
}

/// Maximizes mu -> lambda_min(sum_y mu(y) A_y^n - C^n) over the simplex.
pub fn am_feasibility_quantum(cm: &PsdMatrix, family: &[PsdMatrix], n: usize) -> Result<AmFeasibility> {
    if family.is_empty() {
        return Err(Error::Domain("family must be non-empty".into()));
    }
    if n == 0 {
        return Err(Error::Domain("n must be positive".into()));
    }
    for a in family {
        check_same_dim(cm, a)?;
    }
    let cn = kron_power(cm, n)?;
    let powers: Vec<CMat> = family.iter().map(|a| kron_power(a, n)).collect::<Result<_>>()?;
    let lmin = |mu: &[f64]| -> Result<(f64, CVec)> {
        let mut m = -&cn;
        for (w, a) in mu.iter().zip(&powers) {
            m += a * c(*w);
        }
        bottom(&m)
    };
    let (mu, value, p_interval) = match family.len() {
        1 => (vec![1.0], lmin(&[1.0])?.0, None),
        2 => {
            let g = |p: f64| lmin(&[p, 1.0 - p]).map(|x| x.0).unwrap_or(f64::NAN);
            let (mut p, mut v) = golden_max(&g, 0.0, 1.0, 1e-11);
            for e in [0.0, 1.0] {
                let ve = g(e);
                if ve >= v {
                    p = e;
                    v = ve;
                }
            }
            let interval = (v >= -AM_TOL).then(|| {
                let edge = |inside: f64, outside: f64| {
                    if g(outside) >= -AM_TOL {
                        return outside;
                    }
                    let (mut a, mut b) = (inside, outside);
                    while (b - a).abs() > 1e-10 {
                        let m = 0.5 * (a + b);
                        if g(m) >= -AM_TOL {
                            a = m;
                        } else {
                            b = m;
                        }
                    }
                    a
                };
                [edge(p, 0.0), edge(p, 1.0)]
            });
            (vec![p, 1.0 - p], v, interval)
        }
        k => {
            let (mu, v) = supergradient_ascent(k, |mu| lmin(mu), &powers)?;
            (mu, v, None)
        }
    };
    let feasible = value >= -AM_TOL;
    Ok(AmFeasibility {
        feasible,
        mu: feasible.then(|| mu.clone()),
        max_lambda_min: value,
        argmax: mu,
        p_interval,
    })
}

fn supergradient_ascent(
    k: usize,
    lmin: impl Fn(&[f64]) -> Result<(f64, CVec)>,
    powers: &[CMat],
) -> Result<(Vec<f64>, f64)> {
    let scale = powers.iter().map(|a| a.norm()).fold(1e-300, f64::max);
    let mut mu = vec![1.0 / k as f64; k];
    let mut best = (mu.clone(), lmin(&mu)?.0);
    for y in 0..k {
        let mut e = vec![0.0; k];
        e[y] = 1.0;
        let v = lmin(&e)?.0;
        if v > best.1 {
            best = (e, v);
        }
    }
    for it in 0..2000 {
        let (val, v) = lmin(&mu)?;
        if val > best.1 {
            best = (mu.clone(), val);
        }
        let grad: Vec<f64> = powers
            .iter()
            .map(|a| (v.adjoint() * a * &v)[(0, 0)].re)
            .collect();
        let step = 0.5 / (scale * ((it + 1) as f64).sqrt());
        let moved: Vec<f64> = mu.iter().zip(&grad).map(|(m, g)| m + step * g).collect();
        mu = project_simplex(&moved);
    }
    let (val, _) = lmin(&mu)?;
    if val > best.1 {
        best = (mu, val);
    }
    Ok(best)
}

/// Euclidean projection onto the probability simplex.
pub fn project_simplex(v: &[f64]) -> Vec<f64> {
    let mut u = v.to_vec();
    u.sort_by(|a, b| b.total_cmp(a));
    let mut cum = 0.0;
    let mut theta = 0.0;
    for (i, x) in u.iter().enumerate() {
        cum += x;
        let t = (cum - 1.0) / (i + 1) as f64;
        if x - t > 0.0 {
            theta = t;
        }
    }
    v.iter().map(|x| (x - theta).max(0.0)).collect()
}

#[derive(Clone, Debug)]
pub struct OracleResult {
    pub holds: bool,
    /// Worst candidate (X for the weak bound, T for the sup bound).
    pub worst: CMat,
    /// Smallest relative slack seen; negative means a violation.
    pub worst_margin: f64,
    pub candidates: usize,
}

fn check_cap(dim: usize, n: usize) -> Result<usize> {
    let cap = crate::config::get().dim_cap;
    match dim.checked_pow(n as u32) {
        Some(d) if d <= cap => Ok(d),
        other => Err(Error::Resource {
            needed: other.unwrap_or(usize::MAX),
            cap,
        }),
    }
}

fn eigenprojectors(m: &CMat) -> Result<Vec<CMat>> {
    let d = eigh(m)?;
    Ok((0..d.dim())
        .map(|k| {
            let v = d.vectors.column(k);
            v * v.adjoint()
        })
        .collect())
}

/// Pencil vectors A2^(-1/2) w for eigenvectors w of A2^(-1/2) A1 A2^(-1/2):
/// equality cases of the weak bound for C = A2 #_t A1.
fn pencil_projectors(a1: &CMat, a2: &CMat) -> Result<Vec<CMat>> {
    let d2 = eigh(a2)?;
    if d2.rank() < d2.dim() {
        return Ok(Vec::new());
    }
    let mh = d2.apply(|l| 1.0 / l.sqrt());
    let inner = eigh(&(&mh * a1 * &mh))?;
    Ok((0..inner.dim())
        .map(|k| {
            let v = &mh * inner.vectors.column(k);
            let v = &v / c(v.norm());
            &v * v.adjoint()
        })
        .collect())
}

fn random_wishart<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> CMat {
    let rank = rng.random_range(1..=dim);
    random::random_psd(rng, dim, rank)
}

/// Samples PSD X and checks Tr C^n X <= (Tr A1^n X)^t (Tr A2^n X)^(1-t).
pub fn weak_geometric_oracle<R: Rng + ?Sized>(
    cm: &PsdMatrix,
    a1: &PsdMatrix,
    a2: &PsdMatrix,
    t: f64,
    n: usize,
    trials: usize,
    rng: &mut R,
) -> Result<OracleResult> {
    check_same_dim(cm, a1)?;
    check_same_dim(cm, a2)?;
    if !(0.0..=1.0).contains(&t) {
        return Err(Error::Domain(format!("t = {t} outside [0,1]")));
    }
    let dim = check_cap(cm.dim(), n)?;
    let cn = kron_power(cm, n)?;
    let a1n = kron_power(a1, n)?;
    let a2n = kron_power(a2, n)?;
    let mut structured = vec![CMat::identity(dim, dim) / c(dim as f64)];
    for m in [&a1n, &a2n, &cn] {
        structured.extend(eigenprojectors(m)?);
    }
    structured.extend(pencil_projectors(&a1n, &a2n)?);
    let margin = |x: &CMat| {
        let lhs = trace_prod_re(&cn, x);
        let rhs = pow0(trace_prod_re(&a1n, x).max(0.0), t) * pow0(trace_prod_re(&a2n, x).max(0.0), 1.0 - t);
        (rhs - lhs) / lhs.abs().max(rhs.abs()).max(1e-300)
    };
    Ok(run_oracle(structured, trials, |r| random_wishart(r, dim), margin, rng))
}

/// Samples tests 0 <= T <= I and checks Tr C^n T <= max_y Tr A_y^n T.
pub fn sup_bound_oracle<R: Rng + ?Sized>(
    cm: &PsdMatrix,
    family: &[PsdMatrix],
    n: usize,
    trials: usize,
    rng: &mut R,
) -> Result<OracleResult> {
    if family.is_empty() {
        return Err(Error::Domain("family must be non-empty".into()));
    }
    for a in family {
        check_same_dim(cm, a)?;
    }
    let dim = check_cap(cm.dim(), n)?;
    let cn = kron_power(cm, n)?;
    let powers: Vec<CMat> = family.iter().map(|a| kron_power(a, n)).collect::<Result<_>>()?;
    let mut structured = vec![CMat::identity(dim, dim)];
    for a in &powers {
        let d = eigh(&(&cn - a))?;
        structured.push(d.apply(|l| if l > 0.0 { 1.0 } else { 0.0 }));
    }
    let margin = |tm: &CMat| {
        let lhs = trace_prod_re(&cn, tm);
        let rhs = powers.iter().map(|a| trace_prod_re(a, tm)).fold(f64::NEG_INFINITY, f64::max);
        (rhs - lhs) / lhs.abs().max(rhs.abs()).max(1e-300)
    };
    let sample = |r: &mut R| {
        let u = random::random_unitary(r, dim);
        let mut ud = u.clone();
        for j in 0..dim {
            let l: f64 = match r.random_range(0..3) {
                0 => 0.0,
                1 => 1.0,
                _ => r.random_range(0.0..1.0),
            };
            for i in 0..dim {
                ud[(i, j)] *= l;
            }
        }
        crate::matcore::hermitize(&(ud * u.adjoint()))
    };
    Ok(run_oracle(structured, trials, sample, margin, rng))
}

fn run_oracle<R: Rng + ?Sized>(
    structured: Vec<CMat>,
    trials: usize,
    mut sample: impl FnMut(&mut R) -> CMat,
    margin: impl Fn(&CMat) -> f64,
    rng: &mut R,
) -> OracleResult {
    let candidates = structured.len() + trials;
    let mut worst: Option<(CMat, f64)> = None;
    let mut consider = |x: CMat| {
        let m = margin(&x);
        if worst.as_ref().is_none_or(|w| m < w.1) {
            worst = Some((x, m));
        }
    };
    for x in structured {
        consider(x);
    }
    for _ in 0..trials {
        consider(sample(rng));
    }
    let (worst, worst_margin) = worst.expect("at least one candidate");
    OracleResult {
        holds: worst_margin >= -1e-8,
        worst,
        worst_margin,
        candidates,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::means::ka_mean;

    fn pd(seed: u64, dim: usize) -> PsdMatrix {
        PsdMatrix::new(random::random_pd(&mut random::rng(seed), dim, 0.2, 2.0)).unwrap()
    }

    #[test]
    fn reflexive_and_endpoint_members() {
        let (a1, a2) = (pd(1, 2), pd(2, 2));
        let cm = ka_mean(&a1, &a2, 0.3).unwrap();
        let v = ka_membership(&cm, &a1, &a2).unwrap();
        assert!(v.member);
        assert!(v.t_intervals.iter().any(|iv| iv[0] <= 0.3 + 1e-6 && 0.3 - 1e-6 <= iv[1]));
        let v = ka_membership(&a1, &a1, &a2).unwrap();
        assert!(v.member);
        assert!(v.t_intervals.iter().any(|iv| iv[1] == 1.0));
    }

    #[test]
    fn scaled_mean_is_not_member() {
        let mut rng = random::rng(3);
        let a1 = PsdMatrix::new(random::random_density(&mut rng, 2, 2)).unwrap();
        let a2 = PsdMatrix::new(random::random_density(&mut rng, 2, 2)).unwrap();
        let cm = ka_mean(&a1, &a2, 0.3).unwrap().scale(1.01);
        let v = ka_membership(&cm, &a1, &a2).unwrap();
        assert!(!v.member);
        // Oracle: dense scan of lambda_min.
        let curve = KaCurve::new(&a1, &a2).unwrap();
        for k in 0..=10000 {
            assert!(phi_at(&curve, cm.as_mat(), k as f64 / 10000.0) < 0.0);
        }
        if let (Some(n), Some(x)) = (v.witness_n, v.witness_x.as_ref()) {
            let m = weak_bound_violation(
                &kron_power(&cm, n).unwrap(),
                &kron_power(&a1, n).unwrap(),
                &kron_power(&a2, n).unwrap(),
                x,
            );
            assert!(m > 1e-8);
        }
    }

    #[test]
    fn witness_for_sum() {
        let (a1, a2) = (pd(12, 3), pd(13, 3));
        let cm = PsdMatrix::new(a1.as_mat() + a2.as_mat()).unwrap();
        let v = ka_membership(&cm, &a1, &a2).unwrap();
        assert!(!v.member);
        assert_eq!(v.method, Method::KaGridWithWitness);
        assert_eq!(v.witness_n, Some(1));
        let m = weak_bound_violation(cm.as_mat(), a1.as_mat(), a2.as_mat(), v.witness_x.as_ref().unwrap());
        assert!(m > 1e-8 && (m - v.witness_margin.unwrap()).abs() < 1e-15);
    }

    #[test]
    fn classical_means_are_incomparable() {
        let a1 = PsdMatrix::from_diag(&[0.2, 0.8]).unwrap();
        let a2 = PsdMatrix::from_diag(&[0.6, 0.4]).unwrap();
        for s in [0.25, 0.5, 0.8] {
            let cm = ka_mean(&a1, &a2, s).unwrap();
            let v = ka_membership(&cm, &a1, &a2).unwrap();
            assert!(v.member);
            assert_eq!(v.t_intervals.len(), 1);
            let iv = v.t_intervals[0];
            assert!(iv[0] <= s && s <= iv[1] && iv[1] - iv[0] < 1e-5, "{iv:?}");
        }
    }

    #[test]
    fn am_examples() {
        let (a1, a2) = (pd(5, 2), pd(6, 2));
        for n in 1..=3 {
            let r = am_feasibility_quantum(&a1, &[a1.clone(), a2.clone()], n).unwrap();
            assert!(r.feasible);
            let iv = r.p_interval.unwrap();
            assert!(iv[1] > 1.0 - 1e-9);
            let cm = ka_mean(&a1, &a2, 0.4).unwrap();
            let r = am_feasibility_quantum(&cm, &[a1.clone(), a2.clone()], n).unwrap();
            assert!(r.feasible);
            let iv = r.p_interval.unwrap();
            assert!(iv[0] <= 0.4 + 1e-9 && 0.4 - 1e-9 <= iv[1]);
        }
        // Diagonal embedding of the infeasible commuting instance.
        let g1 = PsdMatrix::from_diag(&[0.01, 10.0]).unwrap();
        let g2 = PsdMatrix::from_diag(&[10.0, 0.01]).unwrap();
        let f = PsdMatrix::identity(2);
        assert!(am_feasibility_quantum(&f, &[g1.clone(), g2.clone()], 1).unwrap().feasible);
        let inst = crate::classical::ClassicalInstance::new(vec![1.0, 1.0], vec![vec![0.01, 10.0], vec![10.0, 0.01]]).unwrap();
        for n in 1..=6 {
            let q = am_feasibility_quantum(&f, &[g1.clone(), g2.clone()], n).unwrap().feasible;
            let lp = crate::classical::am_feasibility_single_n(&inst, n).unwrap().feasible;
            assert_eq!(q, lp, "n = {n}");
        }
    }

    #[test]
    fn supergradient_three_members() {
        let fam: Vec<PsdMatrix> = (0..3).map(|s| pd(10 + s, 2)).collect();
        let cm = ka_mean(&fam[0], &fam[1], 0.5).unwrap();
        let r = am_feasibility_quantum(&cm, &fam, 1).unwrap();
        assert!(r.feasible);
        let big = PsdMatrix::identity(2).scale(10.0);
        assert!(!am_feasibility_quantum(&big, &fam, 1).unwrap().feasible);
    }

    #[test]
    fn lambda_min_is_concave_in_mu() {
        let fam: Vec<PsdMatrix> = (0..3).map(|s| pd(20 + s, 3)).collect();
        let cm = pd(30, 3);
        let lmin = |mu: &[f64]| {
            let m = fam.iter().zip(mu).fold(-cm.as_mat(), |acc, (a, w)| acc + a.as_mat() * c(*w));
            bottom(&m).unwrap().0
        };
        let mut rng = random::rng(7);
        for _ in 0..200 {
            let x = project_simplex(&[rng.random(), rng.random(), rng.random()]);
            let y = project_simplex(&[rng.random(), rng.random(), rng.random()]);
            let mid: Vec<f64> = x.iter().zip(&y).map(|(a, b)| 0.5 * (a + b)).collect();
            assert!(lmin(&mid) >= 0.5 * (lmin(&x) + lmin(&y)) - 1e-10);
        }
    }

    #[test]
    fn oracle_examples() {
        let (a1, a2) = (pd(40, 2), pd(41, 2));
        let cm = ka_mean(&a1, &a2, 0.35).unwrap();
        let mut rng = random::rng(8);
        for n in 1..=2 {
            assert!(weak_geometric_oracle(&cm, &a1, &a2, 0.35, n, 300, &mut rng).unwrap().holds);
            assert!(sup_bound_oracle(&cm, &[a1.clone(), a2.clone()], n, 300, &mut rng).unwrap().holds);
        }
        assert!(sup_bound_oracle(&a1, &[a1.clone(), a2.clone()], 2, 50, &mut rng).unwrap().holds);

        // Perturbing along a pencil direction breaks the weak bound.
        let p = pencil_projectors(a1.as_mat(), a2.as_mat()).unwrap().remove(0);
        let bumped = PsdMatrix::new(cm.as_mat() + p * c(1e-2)).unwrap();
        assert!(!weak_geometric_oracle(&bumped, &a1, &a2, 0.35, 1, 0, &mut rng).unwrap().holds);

        let rho = PsdMatrix::new(random::random_density(&mut rng, 2, 2)).unwrap();
        let sigma = PsdMatrix::new(random::random_density(&mut rng, 2, 2)).unwrap();
        let r = sup_bound_oracle(&rho.scale(1.05), &[rho.clone(), sigma], 1, 0, &mut rng).unwrap();
        assert!(!r.holds);
        assert!((r.worst.clone() - CMat::identity(2, 2)).norm() < 1e-12 || r.worst_margin < 0.0);

        // X = I reduces to a trace inequality.
        let x = CMat::identity(2, 2);
        let lhs = trace_prod_re(cm.as_mat(), &x);
        let rhs = a1.trace().powf(0.35) * a2.trace().powf(0.65);
        assert!(lhs <= rhs + 1e-12);
    }

    #[test]
    fn simplex_projection() {
        let p = project_simplex(&[0.5, 0.8, -0.2]);
        assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-15);
        assert!((p[0] - 0.35).abs() < 1e-15 && (p[1] - 0.65).abs() < 1e-15 && p[2] == 0.0);
    }

    #[test]
    fn cap_is_enforced() {
        let a = PsdMatrix::identity(3);
        let mut rng = random::rng(1);
        assert!(matches!(
            sup_bound_oracle(&a, std::slice::from_ref(&a), 9, 1, &mut rng),
            Err(Error::Resource { .. })
        ));
    }
}
