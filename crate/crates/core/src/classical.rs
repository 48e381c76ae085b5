//! Commutative decision procedures: weighted geometric mean feasibility,
//! the single-n arithmetic mean LP and sampled geometric means of commuting
//! families.

use serde::Serialize;
use serde_json::Value;

use crate::error::{Error, Result};
use crate::matcore::{ExtReal, PsdMatrix};
use crate::means::{commuting_gm, WeightedFamily};

pub const FEAS_TOL: f64 = 1e-9;
const PIVOT_TOL: f64 = 1e-12;

/// f over X and g over X x Y (row x, column y).
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ClassicalInstance {
    pub f: Vec<f64>,
    pub g: Vec<Vec<f64>>,
}

impl ClassicalInstance {
    pub fn new(f: Vec<f64>, g: Vec<Vec<f64>>) -> Result<Self> {
        if f.is_empty() || f.len() != g.len() {
            return Err(Error::Dimension(format!("f has {} entries but g has {} rows", f.len(), g.len())));
        }
        let ny = g[0].len();
        if ny == 0 || g.iter().any(|row| row.len() != ny) {
            return Err(Error::Dimension("g rows must be non-empty and of equal length".into()));
        }
        if f.iter().chain(g.iter().flatten()).any(|x| !(x.is_finite() && *x >= 0.0)) {
            return Err(Error::Domain("instance entries must be finite and nonnegative".into()));
        }
        Ok(ClassicalInstance { f, g })
    }

    pub fn from_json(v: &Value) -> Result<Self> {
        let num = |v: &Value, p: String| {
            v.as_f64()
                .filter(|x| x.is_finite() && *x >= 0.0)
                .ok_or_else(|| Error::input(p, "expected a finite nonnegative number"))
        };
        let f = v
            .get("f")
            .and_then(Value::as_array)
            .ok_or_else(|| Error::input("/f", "expected an array"))?
            .iter()
            .enumerate()
            .map(|(i, x)| num(x, format!("/f/{i}")))
            .collect::<Result<Vec<_>>>()?;
        let rows = v
            .get("g")
            .and_then(Value::as_array)
            .ok_or_else(|| Error::input("/g", "expected an array of rows"))?;
        let mut g = Vec::with_capacity(rows.len());
        for (i, row) in rows.iter().enumerate() {
            let row = row
                .as_array()
                .ok_or_else(|| Error::input(format!("/g/{i}"), "expected an array"))?;
            g.push(
                row.iter()
                    .enumerate()
                    .map(|(j, x)| num(x, format!("/g/{i}/{j}")))
                    .collect::<Result<Vec<_>>>()?,
            );
        }
        Self::new(f, g).map_err(|e| Error::input("/g", e.to_string()))
    }

    pub fn nx(&self) -> usize {
        self.f.len()
    }

    pub fn ny(&self) -> usize {
        self.g[0].len()
    }

    /// min over x in supp f of sum_y nu(y) log g(x,y) - log f(x).
    pub fn gm_slack(&self, nu: &[f64]) -> ExtReal {
        let mut worst = ExtReal::PosInf;
        for x in 0..self.nx() {
            if self.f[x] == 0.0 {
                continue;
            }
            let mut s = ExtReal::Finite(-self.f[x].ln());
            for (y, &w) in nu.iter().enumerate() {
                s = s.checked_add(ExtReal::ln(self.g[x][y]).scale(w)).expect("no +inf terms");
            }
            worst = worst.min(s);
        }
        worst
    }

    /// max over y of sum_x r(x) log(g(x,y)/f(x)) for r supported on supp f.
    pub fn dual_value(&self, r: &[f64]) -> ExtReal {
        let mut best = ExtReal::NegInf;
        for y in 0..self.ny() {
            let mut s = ExtReal::ZERO;
            for (x, &w) in r.iter().enumerate() {
                if w == 0.0 {
                    continue;
                }
                let term = ExtReal::ln(self.g[x][y]).add_f64(-self.f[x].ln());
                s = s.checked_add(term.scale(w)).expect("no +inf terms");
            }
            best = best.max(s);
        }
        best
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FeasibilityCertificate {
    pub feasible: bool,
    /// Probability vector over Y (present when feasible).
    pub measure: Option<Vec<f64>>,
    /// Row violated by the best measure (present when infeasible).
    pub violated_x: Option<usize>,
    /// Probability vector over X, zero off supp f (present when infeasible).
    pub dual_witness: Option<Vec<f64>>,
    /// Game value: the optimal worst-row slack.
    pub value: f64,
}

struct GameSolution {
    value: f64,
    row: Vec<f64>,
    col: Vec<f64>,
}

/// Value and optimal strategies of the zero-sum game with payoff `l[x][y]`;
/// the column player maximizes, the row player minimizes.
fn solve_game(l: &[Vec<f64>]) -> Result<GameSolution> {
    let (nx, ny) = (l.len(), l[0].len());
    let lo = l.iter().flatten().copied().fold(f64::INFINITY, f64::min);
    let shift = 1.0 - lo;
    // Row LP: max 1'z s.t. M'z <= 1, z >= 0, with M = L + shift > 0.
    let a: Vec<Vec<f64>> = (0..ny).map(|y| (0..nx).map(|x| l[x][y] + shift).collect()).collect();
    let sol = simplex_max(&a, &vec![1.0; ny], &vec![1.0; nx])?;
    let total = sol.value;
    let dual_total: f64 = sol.dual.iter().sum();
    Ok(GameSolution {
        value: 1.0 / total - shift,
        row: sol.x.iter().map(|z| z / total).collect(),
        col: sol.dual.iter().map(|w| w / dual_total).collect(),
    })
}

pub(crate) struct LpSolution {
    pub x: Vec<f64>,
    pub dual: Vec<f64>,
    pub value: f64,
}

/// Dense tableau simplex for max c'x s.t. Ax <= b, x >= 0 with b >= 0, so the
/// slack basis is feasible. Bland's rule rules out cycling.
pub(crate) fn simplex_max(a: &[Vec<f64>], b: &[f64], c: &[f64]) -> Result<LpSolution> {
    let (m, n) = (a.len(), c.len());
    if b.iter().any(|&v| v < 0.0) {
        return Err(Error::Precondition("simplex needs b >= 0".into()));
    }
    let width = n + m + 1;
    let mut t = vec![vec![0.0; width]; m + 1];
    for i in 0..m {
        t[i][..n].copy_from_slice(&a[i]);
        t[i][n + i] = 1.0;
        t[i][width - 1] = b[i];
    }
    for j in 0..n {
        t[m][j] = -c[j];
    }
    let mut basis: Vec<usize> = (n..n + m).collect();
    let max_iter = 50 * (n + m) + 1000;
    for _ in 0..max_iter {
        let Some(enter) = (0..n + m).find(|&j| t[m][j] < -PIVOT_TOL) else {
            let mut x = vec![0.0; n];
            for (i, &bv) in basis.iter().enumerate() {
                if bv < n {
                    x[bv] = t[i][width - 1];
                }
            }
            return Ok(LpSolution {
                x,
                dual: (0..m).map(|i| t[m][n + i].max(0.0)).collect(),
                value: t[m][width - 1],
            });
        };
        let mut leave: Option<usize> = None;
        let mut best = f64::INFINITY;
        for i in 0..m {
            if t[i][enter] > PIVOT_TOL {
                let ratio = t[i][width - 1] / t[i][enter];
                let better = match leave {
                    None => true,
                    Some(l) => ratio < best - 1e-14 || (ratio <= best + 1e-14 && basis[i] < basis[l]),
                };
                if better {
                    best = ratio.min(best);
                    leave = Some(i);
                }
            }
        }
        let Some(p) = leave else {
            return Err(Error::Numerical {
                message: "linear program is unbounded".into(),
                residual: f64::INFINITY,
            });
        };
        let piv = t[p][enter];
        for v in t[p].iter_mut() {
            *v /= piv;
        }
        let prow = t[p].clone();
        for (i, row) in t.iter_mut().enumerate() {
            if i != p && row[enter] != 0.0 {
                let k = row[enter];
                for (v, pv) in row.iter_mut().zip(&prow) {
                    *v -= k * pv;
                }
            }
        }
        basis[p] = enter;
    }
    Err(Error::Numerical {
        message: "simplex iteration limit reached".into(),
        residual: f64::NAN,
    })
}

/// Decides whether some probability measure nu on Y satisfies
/// log f(x) <= sum_y nu(y) log g(x,y) for every x in supp f.
pub fn gm_feasibility(inst: &ClassicalInstance) -> Result<FeasibilityCertificate> {
    let (nx, ny) = (inst.nx(), inst.ny());
    let rows: Vec<usize> = (0..nx).filter(|&x| inst.f[x] > 0.0).collect();
    if rows.is_empty() {
        return Ok(FeasibilityCertificate {
            feasible: true,
            measure: Some(vec![1.0 / ny as f64; ny]),
            violated_x: None,
            dual_witness: None,
            value: f64::INFINITY,
        });
    }
    // A zero g(x,y) with f(x) > 0 forces nu(y) = 0.
    let cols: Vec<usize> = (0..ny).filter(|&y| rows.iter().all(|&x| inst.g[x][y] > 0.0)).collect();
    let killers: Vec<usize> = rows
        .iter()
        .copied()
        .filter(|&x| (0..ny).any(|y| !cols.contains(&y) && inst.g[x][y] == 0.0))
        .collect();
    let uniform_killers = || {
        let mut r = vec![0.0; nx];
        for &x in &killers {
            r[x] = 1.0 / killers.len() as f64;
        }
        r
    };
    if cols.is_empty() {
        return Ok(FeasibilityCertificate {
            feasible: false,
            measure: None,
            violated_x: Some(killers[0]),
            dual_witness: Some(uniform_killers()),
            value: f64::NEG_INFINITY,
        });
    }
    let l: Vec<Vec<f64>> = rows
        .iter()
        .map(|&x| cols.iter().map(|&y| (inst.g[x][y] / inst.f[x]).ln()).collect())
        .collect();
    let game = solve_game(&l)?;
    let mut nu = vec![0.0; ny];
    for (k, &y) in cols.iter().enumerate() {
        nu[y] = game.col[k];
    }
    if game.value >= -FEAS_TOL {
        return Ok(FeasibilityCertificate {
            feasible: true,
            measure: Some(nu),
            violated_x: None,
            dual_witness: None,
            value: game.value,
        });
    }
    let mut r = vec![0.0; nx];
    for (k, &x) in rows.iter().enumerate() {
        r[x] = game.row[k];
    }
    if !killers.is_empty() {
        // Give the killing rows a little weight so dropped columns score -inf.
        let top = l.iter().flatten().copied().fold(f64::NEG_INFINITY, f64::max);
        let delta = (0.5 * -game.value / (top - game.value + 1.0)).min(0.5);
        let k = uniform_killers();
        for x in 0..nx {
            r[x] = (1.0 - delta) * r[x] + delta * k[x];
        }
    }
    let violated = rows
        .iter()
        .copied()
        .min_by(|&a, &b| row_slack(inst, a, &nu).total_cmp(&row_slack(inst, b, &nu)))
        .expect("non-empty support");
    Ok(FeasibilityCertificate {
        feasible: false,
        measure: None,
        violated_x: Some(violated),
        dual_witness: Some(r),
        value: game.value,
    })
}

fn row_slack(inst: &ClassicalInstance, x: usize, nu: &[f64]) -> f64 {
    let mut s = ExtReal::Finite(-inst.f[x].ln());
    for (y, &w) in nu.iter().enumerate() {
        s = s.checked_add(ExtReal::ln(inst.g[x][y]).scale(w)).expect("no +inf terms");
    }
    s.to_f64()
}

/// Row-major enumeration of X^n as digit vectors.
fn for_each_word(nx: usize, n: usize, mut visit: impl FnMut(&[usize])) {
    let mut word = vec![0usize; n];
    loop {
        visit(&word);
        let mut k = n;
        loop {
            if k == 0 {
                return;
            }
            k -= 1;
            word[k] += 1;
            if word[k] < nx {
                break;
            }
            word[k] = 0;
        }
    }
}

/// Decides whether some mu on Y satisfies f^n <= sum_y mu(y) g_y^n pointwise on X^n.
/// Row and index positions in the certificate refer to X^n in row-major order.
pub fn am_feasibility_single_n(inst: &ClassicalInstance, n: usize) -> Result<FeasibilityCertificate> {
    if n == 0 {
        return Err(Error::Domain("n must be positive".into()));
    }
    let (nx, ny) = (inst.nx(), inst.ny());
    let cap = crate::config::get().dim_cap;
    let size = (nx as u128).checked_pow(n as u32).unwrap_or(u128::MAX);
    if size > cap as u128 {
        return Err(Error::Resource {
            needed: size.min(usize::MAX as u128) as usize,
            cap,
        });
    }
    let size = size as usize;
    let mut rows = Vec::new();
    let mut payoff = Vec::new();
    let mut index = 0usize;
    for_each_word(nx, n, |w| {
        let lf: f64 = w.iter().map(|&x| inst.f[x].ln()).sum();
        if lf > f64::NEG_INFINITY {
            let ratios: Vec<f64> = (0..ny)
                .map(|y| {
                    let lg: f64 = w.iter().map(|&x| inst.g[x][y].ln()).sum();
                    (lg - lf).exp() - 1.0
                })
                .collect();
            let scale = ratios.iter().fold(1.0f64, |m, v| m.max(v.abs()));
            payoff.push(ratios.iter().map(|v| v / scale).collect::<Vec<_>>());
            rows.push(index);
        }
        index += 1;
    });
    if rows.is_empty() {
        return Ok(FeasibilityCertificate {
            feasible: true,
            measure: Some(vec![1.0 / ny as f64; ny]),
            violated_x: None,
            dual_witness: None,
            value: f64::INFINITY,
        });
    }
    let game = solve_game(&payoff)?;
    if game.value >= -FEAS_TOL {
        return Ok(FeasibilityCertificate {
            feasible: true,
            measure: Some(game.col),
            violated_x: None,
            dual_witness: None,
            value: game.value,
        });
    }
    let worst = (0..rows.len())
        .min_by(|&a, &b| {
            let sa: f64 = payoff[a].iter().zip(&game.col).map(|(p, m)| p * m).sum();
            let sb: f64 = payoff[b].iter().zip(&game.col).map(|(p, m)| p * m).sum();
            sa.total_cmp(&sb)
        })
        .expect("non-empty");
    let mut r = vec![0.0; size];
    for (k, &idx) in rows.iter().enumerate() {
        r[idx] = game.row[k];
    }
    Ok(FeasibilityCertificate {
        feasible: false,
        measure: None,
        violated_x: Some(rows[worst]),
        dual_witness: Some(r),
        value: game.value,
    })
}

/// Checks f^n <= sum_y mu(y) g_y^n pointwise and returns the worst relative slack.
pub fn am_slack(inst: &ClassicalInstance, n: usize, mu: &[f64]) -> f64 {
    let mut worst = f64::INFINITY;
    for_each_word(inst.nx(), n, |w| {
        let fv: f64 = w.iter().map(|&x| inst.f[x]).product();
        if fv > 0.0 {
            let gv: f64 = (0..inst.ny())
                .map(|y| mu[y] * w.iter().map(|&x| inst.g[x][y]).product::<f64>())
                .sum();
            worst = worst.min(gv / fv - 1.0);
        }
    });
    worst
}

/// Weighted geometric means of a commuting family for each sampled measure.
pub fn max_cr_commuting(members: &[PsdMatrix], samples: &[Vec<f64>]) -> Result<Vec<PsdMatrix>> {
    samples
        .iter()
        .map(|nu| commuting_gm(&WeightedFamily::new(members.to_vec(), nu.clone())?))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::random;
    use rand::Rng;

    fn inst(f: &[f64], g: &[&[f64]]) -> ClassicalInstance {
        ClassicalInstance::new(f.to_vec(), g.iter().map(|r| r.to_vec()).collect()).unwrap()
    }

    // Columns are the two hypotheses g_1, g_2.
    fn skewed_single() -> ClassicalInstance {
        inst(&[1.0], &[&[0.01, 10.0]])
    }

    fn two_sided_infeasible() -> ClassicalInstance {
        inst(&[1.0, 1.0], &[&[0.01, 10.0], &[10.0, 0.01]])
    }

    #[test]
    fn gm_examples() {
        let c = gm_feasibility(&skewed_single()).unwrap();
        assert!(c.feasible);
        let nu = c.measure.unwrap();
        assert!(skewed_single().gm_slack(&nu).to_f64() >= -FEAS_TOL);
        assert!(skewed_single().gm_slack(&[1.0 / 3.0, 2.0 / 3.0]).to_f64() >= 0.0);
        assert!(skewed_single().gm_slack(&[0.5, 0.5]).to_f64() < 0.0);

        let c = gm_feasibility(&two_sided_infeasible()).unwrap();
        assert!(!c.feasible);
        let r = c.dual_witness.unwrap();
        assert!(two_sided_infeasible().dual_value(&r).to_f64() < -FEAS_TOL);

        let sym = inst(&[1.0, 1.0], &[&[0.1, 10.0], &[10.0, 0.1]]);
        let c = gm_feasibility(&sym).unwrap();
        assert!(c.feasible);
        let nu = c.measure.unwrap();
        assert!((nu[0] - 0.5).abs() < 1e-9 && (nu[1] - 0.5).abs() < 1e-9);
    }

    #[test]
    fn zero_entries_force_weights() {
        // g(0,0) = 0 < f(0) removes column 0; column 1 alone is infeasible at x=1.
        let i = inst(&[1.0, 1.0], &[&[0.0, 2.0], &[5.0, 0.5]]);
        let c = gm_feasibility(&i).unwrap();
        assert!(!c.feasible);
        assert!(i.dual_value(&c.dual_witness.unwrap()).to_f64() < -FEAS_TOL);
        // Every column killed.
        let i = inst(&[1.0, 1.0], &[&[0.0, 2.0], &[5.0, 0.0]]);
        let c = gm_feasibility(&i).unwrap();
        assert!(!c.feasible);
        assert_eq!(i.dual_value(&c.dual_witness.unwrap()), ExtReal::NegInf);
        // f(x) = 0 rows impose nothing.
        let i = inst(&[0.0, 1.0], &[&[0.0, 0.0], &[1.0, 0.5]]);
        let c = gm_feasibility(&i).unwrap();
        assert!(c.feasible);
        assert!((c.measure.unwrap()[0] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn am_examples() {
        let c = am_feasibility_single_n(&two_sided_infeasible(), 1).unwrap();
        assert!(c.feasible);
        let mu = c.measure.unwrap();
        assert!((mu[0] - 0.5).abs() < 1e-9);
        assert!(am_slack(&two_sided_infeasible(), 1, &[0.5, 0.5]) >= 0.0);

        // Sweep: some n up to 8 must fail, and feasibility is monotone once lost.
        let verdicts: Vec<bool> = (1..=8)
            .map(|n| am_feasibility_single_n(&two_sided_infeasible(), n).unwrap().feasible)
            .collect();
        let first_fail = verdicts.iter().position(|v| !v).expect("some n fails");
        assert!(verdicts[first_fail..].iter().all(|v| !v));
        assert!(!verdicts[4], "n = 5 expected infeasible: {verdicts:?}");

        let c = am_feasibility_single_n(&two_sided_infeasible(), 5).unwrap();
        let r = c.dual_witness.unwrap();
        assert!((r.iter().sum::<f64>() - 1.0).abs() < 1e-9);

        let g: &[&[f64]] = &[&[0.3, 0.5], &[0.9, 0.2]];
        let f: Vec<f64> = g.iter().map(|r| r[0].min(r[1])).collect();
        let i = inst(&f, g);
        for n in 1..=4 {
            assert!(am_feasibility_single_n(&i, n).unwrap().feasible);
        }
    }

    #[test]
    fn resource_cap() {
        let i = inst(&[1.0, 1.0, 1.0], &[&[1.0], &[1.0], &[1.0]]);
        assert!(matches!(am_feasibility_single_n(&i, 9), Err(Error::Resource { .. })));
    }

    #[test]
    fn gm_implies_am_for_small_n() {
        let mut rng = random::rng(41);
        let mut feasible_seen = 0;
        for _ in 0..150 {
            let nx = rng.random_range(1..=3);
            let ny = rng.random_range(1..=3);
            let f: Vec<f64> = (0..nx).map(|_| rng.random_range(0.1..1.0)).collect();
            let g: Vec<Vec<f64>> = (0..nx)
                .map(|_| (0..ny).map(|_| rng.random_range(0.05..2.0)).collect())
                .collect();
            let i = ClassicalInstance::new(f, g).unwrap();
            let c = gm_feasibility(&i).unwrap();
            if c.feasible {
                feasible_seen += 1;
                let nu = c.measure.unwrap();
                for n in 1..=3 {
                    assert!(am_slack(&i, n, &nu) >= -1e-8);
                }
            } else {
                let r = c.dual_witness.unwrap();
                assert!(i.dual_value(&r).to_f64() < -FEAS_TOL);
            }
        }
        assert!(feasible_seen > 10);
    }

    #[test]
    fn simplex_small_lp() {
        // max 3x + 2y s.t. x + y <= 4, x + 3y <= 6, x <= 3.
        let a = vec![vec![1.0, 1.0], vec![1.0, 3.0], vec![1.0, 0.0]];
        let s = simplex_max(&a, &[4.0, 6.0, 3.0], &[3.0, 2.0]).unwrap();
        assert!((s.value - 11.0).abs() < 1e-12);
        assert!((s.x[0] - 3.0).abs() < 1e-12 && (s.x[1] - 1.0).abs() < 1e-12);
        // Duals reproduce the optimum.
        let dual_obj: f64 = s.dual.iter().zip([4.0, 6.0, 3.0]).map(|(y, b)| y * b).sum();
        assert!((dual_obj - 11.0).abs() < 1e-12);
    }

    #[test]
    fn max_cr_examples() {
        let s1 = PsdMatrix::from_diag(&[0.25, 0.75]).unwrap();
        let s2 = PsdMatrix::from_diag(&[0.75, 0.25]).unwrap();
        let out = max_cr_commuting(&[s1.clone(), s2.clone()], &[vec![1.0, 0.0], vec![0.5, 0.5]]).unwrap();
        assert!((out[0].as_mat() - s1.as_mat()).norm() < 1e-14);
        let h = 3f64.sqrt() / 4.0;
        assert!((out[1].as_mat() - PsdMatrix::from_diag(&[h, h]).unwrap().as_mat()).norm() < 1e-14);
        let same = max_cr_commuting(&[s1.clone(), s1.clone()], &[vec![0.3, 0.7]]).unwrap();
        assert!((same[0].as_mat() - s1.as_mat()).norm() < 1e-14);
    }

    #[test]
    fn json_pointers() {
        let v = serde_json::json!({"f": [1.0, 2.0], "g": [[1.0], [1.0, "x"]]});
        match ClassicalInstance::from_json(&v) {
            Err(Error::Input { pointer, .. }) => assert_eq!(pointer, "/g/1/1"),
            other => panic!("unexpected {other:?}"),
        }
        let v = serde_json::json!({"f": [1.0], "g": [[0.01, 10.0]]});
        assert_eq!(ClassicalInstance::from_json(&v).unwrap(), skewed_single());
    }
}
