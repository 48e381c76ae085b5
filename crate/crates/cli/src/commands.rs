use std::path::{Path, PathBuf};

use opmean::channels::{discrimination_equivalence_check, CpMap};
use opmean::divergences::{hoeffding, hoeffding_star, max_relative_entropy, petz_renyi, relative_entropy, sandwiched_renyi};
use opmean::exponents::{appendix_a_report, geometric_bounds_two, DEFAULT_ST_GRID};
use opmean::matcore::io::{matrix_to_json, read_json_file, read_psd_file};
use opmean::matcore::{CMat, CVec};
use opmean::means::{alt_mean, default_eps_path, ka_mean, perspective, AltKind, ScalarFn};
use opmean::membership::{am_feasibility_quantum, ka_membership, sup_bound_oracle, weak_geometric_oracle};
use opmean::projections::{
    eps_dominated, eps_orthogonal, eps_subtract, jordan_decompose, overlap, restrict, Projection,
};
use opmean::random;
use opmean::reproduce::{run_criterion, CRITERIA};
use opmean::{Error, PsdMatrix, Result};
use serde_json::{json, Value};

/// Result of a command: the report body and whether it certifies a violation.
pub struct Outcome {
    pub params: Value,
    pub result: Value,
    pub violation: bool,
}

fn ok(params: Value, result: Value) -> Outcome {
    Outcome {
        params,
        result,
        violation: false,
    }
}

fn path_str(p: &Path) -> String {
    p.display().to_string()
}

fn vector_json(v: &CVec) -> Value {
    json!({
        "re": v.iter().map(|z| z.re).collect::<Vec<_>>(),
        "im": v.iter().map(|z| z.im).collect::<Vec<_>>(),
    })
}

fn to_value<T: serde::Serialize>(x: &T) -> Value {
    serde_json::to_value(x).expect("report types serialize")
}

pub fn means(a: &Path, b: &Path, t: f64, kind: &str, z: f64, persp: Option<&str>) -> Result<Outcome> {
    let (am, bm) = (read_psd_file(a)?, read_psd_file(b)?);
    let params = json!({"a": path_str(a), "b": path_str(b), "t": t, "kind": kind, "z": z, "perspective": persp});
    let m: CMat = if let Some(name) = persp {
        let f = ScalarFn::preset(name)?;
        perspective(&f, &am, &bm, &default_eps_path())?
    } else if kind == "ka" {
        if !(0.0..=1.0).contains(&t) {
            return Err(Error::input("t", format!("t = {t} outside [0,1]")));
        }
        ka_mean(&am, &bm, t)?.into_inner()
    } else {
        let k: AltKind = kind.parse()?;
        alt_mean(k, &am, &bm, t, z)?.into_inner()
    };
    Ok(ok(params, json!({"matrix": matrix_to_json(&m)})))
}

pub fn divergence(a: &Path, b: &Path, kind: &str, alpha: Option<f64>, r: Option<f64>) -> Result<Outcome> {
    let (am, bm) = (read_psd_file(a)?, read_psd_file(b)?);
    let params = json!({"a": path_str(a), "b": path_str(b), "kind": kind, "alpha": alpha, "r": r});
    let need = |x: Option<f64>, name: &str| x.ok_or_else(|| Error::input(name, format!("--{name} is required for {kind}")));
    let result = match kind {
        "petz" => json!({"value": to_value(&petz_renyi(need(alpha, "alpha")?, &am, &bm)?)}),
        "sandwiched" => json!({"value": to_value(&sandwiched_renyi(need(alpha, "alpha")?, &am, &bm)?)}),
        "relative" => json!({"value": to_value(&relative_entropy(&am, &bm)?)}),
        "max" => to_value(&max_relative_entropy(&am, &bm)?),
        "hoeffding" => to_value(&hoeffding(need(r, "r")?, &am, &bm)?),
        "hoeffding-star" => to_value(&hoeffding_star(need(r, "r")?, &am, &bm)?),
        other => return Err(Error::input("kind", format!("unknown divergence {other:?}"))),
    };
    Ok(ok(params, result))
}

pub fn bounds(null: &[PathBuf], alt: &[PathBuf], r: f64, grid: Option<usize>) -> Result<Outcome> {
    let read = |ps: &[PathBuf]| ps.iter().map(|p| read_psd_file(p)).collect::<Result<Vec<PsdMatrix>>>();
    let (nulls, alts) = (read(null)?, read(alt)?);
    let grid = grid.unwrap_or(DEFAULT_ST_GRID);
    let params = json!({
        "null": (null.iter().map(|p| path_str(p)).collect::<Vec<_>>()),
        "alt": alt.iter().map(|p| path_str(p)).collect::<Vec<_>>(),
        "r": r,
        "grid": grid,
    });
    let rep = geometric_bounds_two((&nulls[0], &nulls[1]), (&alts[0], &alts[1]), r, grid)?;
    let improvement = rep.geometric_sc_lower.to_f64() - rep.trivial_sc_lower.to_f64();
    let mut result = to_value(&rep);
    result["sc_improvement"] = json!(improvement);
    Ok(Outcome {
        params,
        result,
        violation: improvement < -1e-12,
    })
}

pub fn membership(c: &Path, a: &[PathBuf], n_max: usize, trials: usize, seed: u64) -> Result<Outcome> {
    let cm = read_psd_file(c)?;
    let (a1, a2) = (read_psd_file(&a[0])?, read_psd_file(&a[1])?);
    let params = json!({
        "c": path_str(c),
        "a": a.iter().map(|p| path_str(p)).collect::<Vec<_>>(),
        "n_max": n_max,
        "trials": trials,
    });
    let v = ka_membership(&cm, &a1, &a2)?;
    let fam = [a1.clone(), a2.clone()];
    let mut rng = random::rng(seed);
    let mut am = Vec::new();
    let mut weak = Vec::new();
    let mut sup = Vec::new();
    let mut oracle_failure = false;
    for n in 1..=n_max {
        let f = am_feasibility_quantum(&cm, &fam, n)?;
        oracle_failure |= !f.feasible;
        am.push(json!({"n": n, "report": to_value(&f)}));
        let w = weak_geometric_oracle(&cm, &a1, &a2, v.best_t, n, trials, &mut rng)?;
        let s = sup_bound_oracle(&cm, &fam, n, trials, &mut rng)?;
        oracle_failure |= !w.holds || !s.holds;
        weak.push(json!({"n": n, "holds": w.holds, "worst_margin": w.worst_margin, "candidates": w.candidates}));
        sup.push(json!({"n": n, "holds": s.holds, "worst_margin": s.worst_margin, "candidates": s.candidates}));
    }
    let verdict = json!({
        "member": v.member,
        "t_intervals": v.t_intervals,
        "best_t": v.best_t,
        "max_phi": v.max_phi,
        "witness_n": v.witness_n,
        "witness_x": v.witness_x.as_ref().map(matrix_to_json),
        "witness_margin": v.witness_margin,
        "method": to_value(&v.method),
    });
    Ok(Outcome {
        params,
        result: json!({"verdict": verdict, "am_feasibility": am, "weak_geometric": weak, "sup_bound": sup}),
        violation: v.member && oracle_failure,
    })
}

fn read_map(p: &Path) -> Result<CpMap> {
    CpMap::from_json(&read_json_file(p)?, &path_str(p))
}

pub fn channels(e: &Path, n1: &Path, n2: &Path, n: usize, trials: usize, seed: u64) -> Result<Outcome> {
    let (em, m1, m2) = (read_map(e)?, read_map(n1)?, read_map(n2)?);
    let params = json!({"e": path_str(e), "n1": path_str(n1), "n2": path_str(n2), "n": n, "trials": trials});
    let mut rng = random::rng(seed);
    let rep = discrimination_equivalence_check(&em, &m1, &m2, n, trials, &mut rng)?;
    let result = json!({
        "n": rep.n,
        "ka_member": rep.ka_verdict.member,
        "t_intervals": rep.ka_verdict.t_intervals,
        "best_t": rep.ka_verdict.best_t,
        "am_feasible": rep.am_feasible,
        "strategies_pass": rep.strategies_pass,
        "worst_strategy_margin": rep.worst_strategy_margin,
        "strategies_tried": rep.strategies_tried,
        "consistent": rep.consistent,
        "trace_preserving": [em.is_trace_preserving(), m1.is_trace_preserving(), m2.is_trace_preserving()],
    });
    Ok(Outcome {
        params,
        result,
        violation: !rep.consistent,
    })
}

fn read_projection(p: &Path) -> Result<Projection> {
    let m = read_psd_file(p)?;
    Projection::new(m.into_inner()).map_err(|e| Error::input(path_str(p), e.to_string()))
}

pub fn jordan(s: &Path, q: &Path, eps: &[f64]) -> Result<Outcome> {
    let (sp, qp) = (read_projection(s)?, read_projection(q)?);
    let params = json!({"s": path_str(s), "q": path_str(q), "eps": eps});
    let jd = jordan_decompose(&sp, &qp)?;
    let blocks: Vec<Value> = jd
        .blocks
        .iter()
        .map(|b| json!({"theta": b.theta, "e": vector_json(&b.e), "e_perp": vector_json(&b.e_perp)}))
        .collect();
    let mut relations = Vec::new();
    for &e in eps {
        relations.push(json!({
            "eps": e,
            "q_orthogonal_to_s": eps_orthogonal(&qp, &sp, e)?,
            "q_dominated_by_s": eps_dominated(&qp, &sp, e)?,
            "subtraction": matrix_to_json(eps_subtract(&qp, &sp, e)?.as_mat()),
            "restriction": matrix_to_json(restrict(&qp, &sp, e)?.as_mat()),
        }));
    }
    let result = json!({
        "blocks": blocks,
        "commuting_basis": jd.commuting_basis.iter().map(vector_json).collect::<Vec<_>>(),
        "s_prime": jd.s_prime,
        "q_prime": jd.q_prime,
        "overlap": overlap(&sp, &qp)?,
        "reconstruction_residual": jd.residual(&sp, &qp),
        "relations": relations,
    });
    Ok(ok(params, result))
}

pub fn appendix_a(k: usize, r: f64) -> Result<Outcome> {
    let rep = appendix_a_report(k, r)?;
    let strict_ok = !rep.iv_strict_expected || rep.margin_iii_iv > 1e-7;
    let chain_ok = rep.margin_i_ii > 1e-7 && rep.gap_ii_iii <= 1e-12 && rep.margin_iii_iv >= -1e-12 && strict_ok;
    let mut result = to_value(&rep);
    result["chain_holds"] = json!(chain_ok);
    Ok(Outcome {
        params: json!({"k": k, "r": r}),
        result,
        violation: !chain_ok,
    })
}

/// Criterion reports plus per-criterion wall times (kept out of the report).
pub fn reproduce_all(seed: u64, only: &[u32]) -> Result<(Outcome, Vec<(u32, f64)>)> {
    let ids: Vec<u32> = if only.is_empty() { CRITERIA.to_vec() } else { only.to_vec() };
    let mut reports = Vec::new();
    let mut timings = Vec::new();
    let mut failed = false;
    for id in &ids {
        let start = std::time::Instant::now();
        let rep = run_criterion(*id, seed)?;
        timings.push((*id, start.elapsed().as_secs_f64()));
        failed |= !rep.passed;
        reports.push(to_value(&rep));
    }
    Ok((
        Outcome {
            params: json!({"criteria": ids}),
            result: json!({"criteria": reports}),
            violation: failed,
        },
        timings,
    ))
}
