//! Error-exponent bounds for composite hypothesis testing: pairwise bounds,
//! geometric-mean improvements and the two-point commutative example chain.

use rayon::prelude::*;
use serde::Serialize;

use crate::divergences::{
    golden_max, hoeffding_spectral, hoeffding_star, ClassicalPair, HoeffdingResult, HOEFFDING_GRID,
};
use crate::error::{Error, Result};
use crate::matcore::{c, eigh, ExtReal, PsdMatrix, SpectralDecomposition};
use crate::means::KaCurve;

pub const DEFAULT_ST_GRID: usize = 101;
const HULL_POINTS: usize = 21;
pub const MAX_APPENDIX_K: usize = 12;

fn check_density(m: &PsdMatrix, what: &str) -> Result<()> {
    let tr = m.trace();
    if (tr - 1.0).abs() > 1e-9 {
        return Err(Error::Precondition(format!("{what} has trace {tr}, expected 1")));
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TrivialBounds {
    pub direct_upper: ExtReal,
    pub sc_lower: ExtReal,
}

/// Pairwise bounds: min of Hoeffding divergences and max of anti-divergences.
pub fn trivial_bounds(null_set: &[PsdMatrix], alt_set: &[PsdMatrix], r: f64) -> Result<TrivialBounds> {
    if null_set.is_empty() || alt_set.is_empty() {
        return Err(Error::Domain("hypothesis sets must be non-empty".into()));
    }
    for m in null_set {
        check_density(m, "null state")?;
    }
    for m in alt_set {
        check_density(m, "alternative state")?;
    }
    let mut direct = ExtReal::PosInf;
    let mut sc = ExtReal::NegInf;
    for rho in null_set {
        for sigma in alt_set {
            direct = direct.min(crate::divergences::hoeffding(r, rho, sigma)?.value);
            sc = sc.max(hoeffding_star(r, rho, sigma)?.value);
        }
    }
    Ok(TrivialBounds {
        direct_upper: direct,
        sc_lower: sc,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GridInfo {
    pub s_points: usize,
    pub t_points: usize,
    pub alpha_points: usize,
    /// Grid arguments attaining the geometric direct bound.
    pub direct_s: f64,
    pub direct_t: f64,
    /// Null index (0 or 1) and t attaining the geometric sc bound.
    pub sc_index: usize,
    pub sc_t: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExponentReport {
    pub r: f64,
    pub trivial_direct_upper: ExtReal,
    /// Infimum over the (s,t) grid: an upper bound on the true infimum.
    pub geometric_direct_upper: ExtReal,
    pub trivial_sc_lower: ExtReal,
    /// Supremum over the t grid: a lower bound on the true supremum.
    pub geometric_sc_lower: ExtReal,
    /// Pairwise sc bound with the alternatives replaced by sampled mixtures
    /// (an overshoot of the geometric bound in general).
    pub convex_hull_sc: ExtReal,
    pub grids: GridInfo,
}

fn grid_points(n: usize) -> Vec<f64> {
    (0..n).map(|i| if i + 1 == n { 1.0 } else { i as f64 / (n - 1) as f64 }).collect()
}

/// Geometric-mean bounds for two null and two alternative states.
pub fn geometric_bounds_two(
    null_pair: (&PsdMatrix, &PsdMatrix),
    alt_pair: (&PsdMatrix, &PsdMatrix),
    r: f64,
    grid: usize,
) -> Result<ExponentReport> {
    if grid < 2 {
        return Err(Error::Domain("s,t grid needs at least 2 points".into()));
    }
    let (rho1, rho2) = null_pair;
    let (sigma1, sigma2) = alt_pair;
    let nulls = [rho1.clone(), rho2.clone()];
    let alts = [sigma1.clone(), sigma2.clone()];
    let trivial = trivial_bounds(&nulls, &alts, r)?;
    let pts = grid_points(grid);

    let rho_curve = KaCurve::new(rho1, rho2)?;
    let sigma_curve = KaCurve::new(sigma1, sigma2)?;
    let spectra = |curve: &KaCurve| -> Result<Vec<SpectralDecomposition>> {
        pts.par_iter().map(|&t| eigh(curve.at(t)?.as_mat())).collect()
    };
    let rho_spec = spectra(&rho_curve)?;
    let sigma_mats: Vec<PsdMatrix> = pts.iter().map(|&t| sigma_curve.at(t)).collect::<Result<_>>()?;
    let sigma_spec: Vec<SpectralDecomposition> =
        sigma_mats.par_iter().map(|m| eigh(m.as_mat())).collect::<Result<_>>()?;

    let (direct, ds, dt) = rho_spec
        .par_iter()
        .enumerate()
        .map(|(i, da)| {
            let mut best = (ExtReal::PosInf, pts[i], 0.0);
            for (j, db) in sigma_spec.iter().enumerate() {
                let v = hoeffding_spectral(r, da, db).value;
                if v < best.0 {
                    best = (v, pts[i], pts[j]);
                }
            }
            best
        })
        .reduce(
            || (ExtReal::PosInf, 0.0, 0.0),
            |a, b| if b.0 < a.0 { b } else { a },
        );

    let sc_cells: Vec<(ExtReal, usize, f64)> = (0..2)
        .flat_map(|i| (0..grid).map(move |j| (i, j)))
        .collect::<Vec<_>>()
        .par_iter()
        .map(|&(i, j)| hoeffding_star(r, &nulls[i], &sigma_mats[j]).map(|h| (h.value, i, pts[j])))
        .collect::<Result<_>>()?;
    let (sc, si, st) = sc_cells
        .into_iter()
        .fold((ExtReal::NegInf, 0, 0.0), |a, b| if b.0 > a.0 { b } else { a });

    let mut hull = ExtReal::NegInf;
    for rho in &nulls {
        for k in 0..HULL_POINTS {
            let lam = k as f64 / (HULL_POINTS - 1) as f64;
            let mix = PsdMatrix::from_hermitian(sigma1.as_mat() * c(1.0 - lam) + sigma2.as_mat() * c(lam));
            hull = hull.max(hoeffding_star(r, rho, &mix)?.value);
        }
    }

    Ok(ExponentReport {
        r,
        trivial_direct_upper: trivial.direct_upper,
        geometric_direct_upper: direct,
        trivial_sc_lower: trivial.sc_lower,
        geometric_sc_lower: sc,
        convex_hull_sc: hull,
        grids: GridInfo {
            s_points: grid,
            t_points: grid,
            alpha_points: HOEFFDING_GRID,
            direct_s: ds,
            direct_t: dt,
            sc_index: si,
            sc_t: st,
        },
    })
}

/// Binomial coefficient as f64 (exact for the sizes used here).
pub fn binomial(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// k-copy commuting pair over type classes of a two-letter alphabet: the
/// class with m zeros has multiplicity C(k,m).
fn type_class_pair(k: usize, p: impl Fn(usize) -> f64, q: impl Fn(usize) -> f64) -> Result<ClassicalPair> {
    let mult = (0..=k).map(|m| binomial(k, m)).collect();
    ClassicalPair::with_multiplicities(mult, (0..=k).map(&p).collect(), (0..=k).map(&q).collect())
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AppendixAReport {
    pub k: usize,
    pub r: f64,
    /// max_j H*_r(rho^k || sigma_j^k).
    pub i_pairwise: ExtReal,
    /// r - k log(2/sqrt 3).
    pub ii_shifted: f64,
    /// sup_t H*_r(rho^k || (sigma_2 #_t sigma_1)^k) and its maximizer.
    pub iii_geometric: ExtReal,
    pub iii_t: f64,
    /// H*_r(rho^k || (sigma_1^k + sigma_2^k)/2).
    pub iv_mixture: ExtReal,
    pub iv_maximizer_alpha: ExtReal,
    pub d_inf_mixture: ExtReal,
    pub r_inf_mixture: ExtReal,
    /// Whether (iv) > (iii) is expected: k odd, or k even and r < r_inf.
    pub iv_strict_expected: bool,
    pub margin_i_ii: f64,
    pub gap_ii_iii: f64,
    pub margin_iii_iv: f64,
}

/// The chain for rho = (1/2,1/2), sigma_1 = (1/4,3/4), sigma_2 = (3/4,1/4).
pub fn appendix_a_report(k: usize, r: f64) -> Result<AppendixAReport> {
    if k == 0 || k > MAX_APPENDIX_K {
        return Err(Error::Precondition(format!("k = {k} outside 1..={MAX_APPENDIX_K}")));
    }
    let d = k as f64 * (2.0 / 3f64.sqrt()).ln();
    if !(r > d) {
        return Err(Error::Precondition(format!("r = {r} must exceed k log(2/sqrt 3) = {d}")));
    }
    let kf = k as i32;
    let rho = |_m: usize| 0.5f64.powi(kf);
    // m counts occurrences of the first letter.
    let prod = |a: f64, b: f64| move |m: usize| a.powi(m as i32) * b.powi(kf - m as i32);

    let s1 = type_class_pair(k, rho, prod(0.25, 0.75))?;
    let s2 = type_class_pair(k, rho, prod(0.75, 0.25))?;
    let i_pairwise = s1.hoeffding_star(r).value.max(s2.hoeffding_star(r).value);

    let geo = |t: f64| -> Result<HoeffdingResult> {
        let (a, b) = (3f64.powf(1.0 - t) / 4.0, 3f64.powf(t) / 4.0);
        Ok(type_class_pair(k, rho, prod(a, b))?.hoeffding_star(r))
    };
    let pts = grid_points(DEFAULT_ST_GRID);
    let mut best = (ExtReal::NegInf, 0.0);
    for &t in &pts {
        let v = geo(t)?.value;
        if v > best.0 {
            best = (v, t);
        }
    }
    let h = 1.0 / (DEFAULT_ST_GRID - 1) as f64;
    let f = |t: f64| geo(t).map(|x| x.value.to_f64()).unwrap_or(f64::NAN);
    let (gt, gv) = golden_max(&f, (best.1 - h).max(0.0), (best.1 + h).min(1.0), 1e-10);
    if gv > best.0.to_f64() {
        best = (ExtReal::from_f64(gv), gt);
    }

    let mix = type_class_pair(k, rho, |m| 0.5 * (prod(0.25, 0.75)(m) + prod(0.75, 0.25)(m)))?;
    let iv = mix.hoeffding_star(r);
    let mre = mix.max_relative_entropy();
    let r_inf = mre.r_inf;
    let iv_strict_expected = k % 2 == 1 || ExtReal::Finite(r) < r_inf;

    let ii = r - d;
    Ok(AppendixAReport {
        k,
        r,
        i_pairwise,
        ii_shifted: ii,
        iii_geometric: best.0,
        iii_t: best.1,
        iv_mixture: iv.value,
        iv_maximizer_alpha: iv.maximizer_alpha,
        d_inf_mixture: mre.value,
        r_inf_mixture: r_inf,
        iv_strict_expected,
        margin_i_ii: ii - i_pairwise.to_f64(),
        gap_ii_iii: (best.0.to_f64() - ii).abs(),
        margin_iii_iv: iv.value.to_f64() - best.0.to_f64(),
    })
}

/// Closed forms for D_inf and r_inf of the k-copy mixture alternative.
pub fn appendix_a_closed_forms(k: usize) -> (f64, f64) {
    let a = (2.0 / 3f64.sqrt()).ln();
    let b = (4.0 / 3f64.sqrt()).ln();
    if k.is_multiple_of(2) {
        (k as f64 * a, k as f64 * b - binomial(k, k / 2).ln())
    } else {
        ((k - 1) as f64 * a, (k - 1) as f64 * b - binomial(k, (k - 1) / 2).ln())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::divergences::{hoeffding, max_relative_entropy};
    use crate::random;

    fn diag(d: &[f64]) -> PsdMatrix {
        PsdMatrix::from_diag(d).unwrap()
    }

    fn fin(x: ExtReal) -> f64 {
        x.finite().unwrap()
    }

    #[test]
    fn trivial_examples() {
        let rho = diag(&[0.5, 0.5]);
        let b = trivial_bounds(std::slice::from_ref(&rho), std::slice::from_ref(&rho), 0.3).unwrap();
        assert!(fin(b.direct_upper).abs() < 1e-12);
        assert!((fin(b.sc_lower) - 0.3).abs() < 1e-12);

        let s1 = diag(&[0.25, 0.75]);
        let s2 = diag(&[0.75, 0.25]);
        let b = trivial_bounds(std::slice::from_ref(&rho), &[s1.clone(), s2.clone()], 0.5).unwrap();
        let want = fin(hoeffding_star(0.5, &rho, &s1).unwrap().value).max(fin(hoeffding_star(0.5, &rho, &s2).unwrap().value));
        assert_eq!(fin(b.sc_lower), want);

        let e0 = diag(&[1.0, 0.0]);
        let e1 = diag(&[0.0, 1.0]);
        let b = trivial_bounds(std::slice::from_ref(&e0), &[e1, rho.clone()], 0.2).unwrap();
        assert_eq!(b.direct_upper, hoeffding(0.2, &e0, &rho).unwrap().value);
        assert!(trivial_bounds(&[rho.scale(2.0)], &[rho], 0.1).is_err());
    }

    #[test]
    fn degenerate_pairs_reduce_to_single_copy() {
        let mut rng = random::rng(50);
        let rho = PsdMatrix::new(random::random_density(&mut rng, 2, 2)).unwrap();
        let sigma = PsdMatrix::new(random::random_density(&mut rng, 2, 2)).unwrap();
        let rep = geometric_bounds_two((&rho, &rho), (&sigma, &sigma), 0.4, 11).unwrap();
        let h = fin(hoeffding(0.4, &rho, &sigma).unwrap().value);
        let hs = fin(hoeffding_star(0.4, &rho, &sigma).unwrap().value);
        assert!((fin(rep.geometric_direct_upper) - h).abs() < 1e-9);
        assert!((fin(rep.geometric_sc_lower) - hs).abs() < 1e-9);
        assert!((fin(rep.trivial_sc_lower) - hs).abs() < 1e-12);
    }

    #[test]
    fn commuting_sc_bound_is_shifted_r() {
        let rho = diag(&[0.5, 0.5]);
        let s1 = diag(&[0.25, 0.75]);
        let s2 = diag(&[0.75, 0.25]);
        let rep = geometric_bounds_two((&rho, &rho), (&s1, &s2), 0.5, 101).unwrap();
        let want = 0.5 - (2.0 / 3f64.sqrt()).ln();
        assert!((fin(rep.geometric_sc_lower) - want).abs() < 1e-12);
        assert_eq!(rep.grids.sc_t, 0.5);
        assert!(fin(rep.geometric_sc_lower) > fin(rep.trivial_sc_lower) + 1e-7);
        // The hull contains rho itself, which overshoots.
        assert!((fin(rep.convex_hull_sc) - 0.5).abs() < 1e-12);
        assert!(fin(rep.convex_hull_sc) > fin(rep.geometric_sc_lower) + 1e-7);
    }

    #[test]
    fn geometric_dominates_trivial() {
        let mut rng = random::rng(51);
        for _ in 0..8 {
            let st: Vec<PsdMatrix> = (0..4)
                .map(|_| PsdMatrix::new(random::random_density(&mut rng, 2, 2)).unwrap())
                .collect();
            let rep = geometric_bounds_two((&st[0], &st[1]), (&st[2], &st[3]), 0.6, 21).unwrap();
            assert!(rep.geometric_direct_upper.to_f64() <= rep.trivial_direct_upper.to_f64() + 1e-8);
            assert!(rep.geometric_sc_lower.to_f64() >= rep.trivial_sc_lower.to_f64() - 1e-8);
            // Enlarging the alternatives to mixtures never lowers the pairwise sc bound.
            assert!(rep.convex_hull_sc.to_f64() >= rep.trivial_sc_lower.to_f64() - 1e-12);
        }
    }

    #[test]
    fn appendix_chain_small_k() {
        for (k, r) in [(1, 0.5), (2, 0.9), (3, 0.7), (2, 1.2)] {
            let rep = appendix_a_report(k, r).unwrap();
            assert!(rep.margin_i_ii > 1e-7, "k {k} r {r}: {rep:?}");
            assert!(rep.gap_ii_iii < 1e-12, "k {k} r {r}: {rep:?}");
            assert!((rep.iii_t - 0.5).abs() < 1e-9);
            assert!(rep.margin_iii_iv >= -1e-12);
            if rep.iv_strict_expected {
                assert!(rep.margin_iii_iv > 1e-7, "k {k} r {r}: {rep:?}");
            }
            let (dinf, rinf) = appendix_a_closed_forms(k);
            assert!((fin(rep.d_inf_mixture) - dinf).abs() < 1e-12);
            assert!((fin(rep.r_inf_mixture) - rinf).abs() < 1e-12);
        }
        assert!(!appendix_a_report(2, 1.2).unwrap().iv_strict_expected);
        assert!(appendix_a_report(1, 0.1).is_err());
    }

    #[test]
    fn type_classes_match_explicit_tensor_powers() {
        let k = 3;
        let rho = diag(&[0.5, 0.5]).kron_power(k).unwrap();
        let s1 = diag(&[0.25, 0.75]).kron_power(k).unwrap();
        let s2 = diag(&[0.75, 0.25]).kron_power(k).unwrap();
        let mix = PsdMatrix::from_hermitian((s1.as_mat() + s2.as_mat()) * c(0.5));
        let rep = appendix_a_report(k, 0.7).unwrap();
        let direct = fin(hoeffding_star(0.7, &rho, &mix).unwrap().value);
        assert!((direct - fin(rep.iv_mixture)).abs() < 1e-10);
        let m = max_relative_entropy(&rho, &mix).unwrap();
        assert!((fin(m.r_inf) - fin(rep.r_inf_mixture)).abs() < 1e-12);
    }

    #[test]
    fn binomials() {
        assert_eq!(binomial(12, 6), 924.0);
        assert_eq!(binomial(5, 0), 1.0);
        assert_eq!(binomial(3, 4), 0.0);
    }
}
