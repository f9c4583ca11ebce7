use std::collections::BTreeSet;
use std::path::Path;

use rayon::prelude::*;
use serde_json::{json, Value};

use crate::bounds::{g_bounds, gk_common_information, h_bounds, positivity, BoundSet};
use crate::error::{Error, Result};
use crate::ext_lemmas::{
    calibrate_perletter, efrl_construct, esfrl_construct, prioritized_construct, y_randomization_construct,
    BaseRepresentation,
};
use crate::frl::{frl_construct, sfrl_construct, SfrlParams};
use crate::linalg::{leakage_rank, REL_RANK_TOL};
use crate::oracle::{solve_g, solve_g_perletter, solve_h, solve_h_perletter, OracleOptions};
use crate::perfect_privacy::{g0_solve, MAX_Y};
use crate::perletter::evaluate_criteria;
use crate::privcomp::{analyze, bits_to_hex, build_code, codebook_from_json, codebook_to_json, hex_to_bits};
use crate::probcore::io::{
    is_triple_json, mechanism_from_json, mechanism_to_value, read_distribution, triple_from_json,
};
use crate::probcore::{induce, Alphabet, JointDistribution, Mechanism, TripleDistribution};
use crate::rng::derive_seed;

use super::args::{CompressCommand, DesignArgs, InfoArgs, Method, ProblemArg, SweepArgs, VerifyArgs};
use super::{format_number, Outcome};

pub const DEFAULT_TOL: f64 = 1e-6;
pub const TOL_ENV: &str = "PRIVLENS_TOL";

/// Tolerance from the environment override, or the default.
pub fn tolerance() -> Result<f64> {
    match std::env::var(TOL_ENV) {
        Ok(s) => match s.trim().parse::<f64>() {
            Ok(t) if t >= 0.0 && t.is_finite() => Ok(t),
            _ => Err(Error::Usage(format!("{TOL_ENV}={s:?} is not a nonnegative number"))),
        },
        Err(_) => Ok(DEFAULT_TOL),
    }
}

enum Input {
    Pair(JointDistribution),
    Triple(TripleDistribution),
}

impl Input {
    fn joint(&self) -> JointDistribution {
        match self {
            Input::Pair(j) => j.clone(),
            Input::Triple(t) => t.pair_joint(),
        }
    }
}

fn load(path: &Path) -> Result<Input> {
    let is_json = !path
        .extension()
        .and_then(|e| e.to_str())
        .is_some_and(|e| e.eq_ignore_ascii_case("csv"));
    if is_json {
        let text = std::fs::read_to_string(path)?;
        if is_triple_json(&text) {
            return Ok(Input::Triple(triple_from_json(&text)?));
        }
    }
    Ok(Input::Pair(read_distribution(path)?))
}

fn write_out(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(p) => std::fs::write(p, text)?,
        None => print!("{text}"),
    }
    Ok(())
}

fn pretty(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("json values serialize");
    s.push('\n');
    s
}

fn metrics(j: &JointDistribution, m: &Mechanism) -> Result<Value> {
    let ij = induce(j, m)?;
    Ok(json!({
        "i_yu": ij.i_yu(),
        "i_xu": ij.i_xu(),
        "h_y_given_ux": ij.h_y_given_ux(),
        "i_xu_given_y": ij.i_xu_given_y(),
        "u_size": m.nu(),
        "per_letter": evaluate_criteria(&ij),
    }))
}

pub fn info(a: &InfoArgs) -> Result<Outcome> {
    let j = load(&a.input)?.joint();
    let (rank, nullity) = leakage_rank(&j, REL_RANK_TOL);
    let v = json!({
        "nx": j.nx(),
        "ny": j.ny(),
        "h_x": j.h_x(),
        "h_y": j.h_y(),
        "h_xy": j.h_xy(),
        "h_y_given_x": j.h_y_given_x(),
        "h_x_given_y": j.h_x_given_y(),
        "i_xy": j.mutual_information(),
        "leakage_matrix_rank": rank,
        "leakage_matrix_nullity": nullity,
        "common_information": gk_common_information(&j),
        "positivity": positivity(&j),
    });
    write_out(a.out.as_deref(), &pretty(&v))?;
    Ok(Outcome::Ok)
}

pub fn design(a: &DesignArgs) -> Result<Outcome> {
    let input = load(&a.input)?;
    let eps = a.epsilon;
    let per_letter = a.criterion.per_letter();
    if per_letter.is_some() && !matches!(a.method, Method::Efrl | Method::Esfrl) {
        return Err(Error::Usage("per-letter calibration applies to efrl and esfrl only".into()));
    }
    let sfrl_params = SfrlParams {
        truncation: a.truncation,
        quantization: a.quantization,
        seed: derive_seed(a.seed, "design/sfrl"),
    };
    let j = input.joint();
    let (mechanism, details): (Mechanism, Value) = match a.method {
        Method::Frl => {
            let out = frl_construct(&j);
            (out.mechanism, json!({ "notes": out.notes, "degenerate": out.degenerate }))
        }
        Method::Sfrl => {
            let (m, r) = sfrl_construct(&j, sfrl_params)?;
            (m, json!({ "sfrl": r }))
        }
        Method::Efrl | Method::Esfrl => match per_letter {
            Some(c) => {
                let base = if a.method == Method::Efrl {
                    BaseRepresentation::Frl
                } else {
                    BaseRepresentation::Sfrl(sfrl_params)
                };
                let cal = calibrate_perletter(&j, base, eps, c)?;
                (cal.mechanism, json!({ "alpha": cal.alpha, "achieved": cal.achieved }))
            }
            None if a.method == Method::Efrl => {
                let out = efrl_construct(&j, eps)?;
                (out.mechanism, json!({ "alpha": out.budget.alpha, "notes": out.notes }))
            }
            None => {
                let (out, r) = esfrl_construct(&j, eps, sfrl_params)?;
                (
                    out.mechanism,
                    json!({ "alpha": out.budget.alpha, "notes": out.notes, "esfrl": r }),
                )
            }
        },
        Method::YRand => {
            let (m, beta) = y_randomization_construct(&j, eps)?;
            (m, json!({ "beta": beta }))
        }
        Method::Prioritized => {
            let Input::Triple(t) = &input else {
                return Err(Error::Usage("prioritized design needs an (X1, X2, Y) input".into()));
            };
            let (m, r) = prioritized_construct(t, eps)?;
            (m, json!({ "prioritized": r }))
        }
        Method::G0Lp => {
            let s = g0_solve(&j)?;
            (
                s.mechanism,
                json!({
                    "g0_bits": s.value,
                    "vertices": s.vertices,
                    "weights": s.weights,
                    "vertex_count": s.vertex_count,
                }),
            )
        }
    };
    let v = json!({
        "method": a.method_name(),
        "epsilon": eps,
        "criterion": a.criterion.name(),
        "seed": a.seed,
        "metrics": metrics(&j, &mechanism)?,
        "details": details,
        "mechanism": mechanism_to_value(&mechanism, &j),
    });
    write_out(a.out.as_deref(), &pretty(&v))?;
    Ok(Outcome::Ok)
}

impl DesignArgs {
    fn method_name(&self) -> &'static str {
        match self.method {
            Method::Frl => "frl",
            Method::Sfrl => "sfrl",
            Method::Efrl => "efrl",
            Method::Esfrl => "esfrl",
            Method::YRand => "y-rand",
            Method::Prioritized => "prioritized",
            Method::G0Lp => "g0-lp",
        }
    }
}

pub fn verify(a: &VerifyArgs) -> Result<Outcome> {
    let tol = tolerance()?;
    let j = load(&a.input)?.joint();
    let text = std::fs::read_to_string(&a.mechanism)?;
    // accept a bare mechanism or a design report that embeds one
    let m = match serde_json::from_str::<Value>(&text)?.get("mechanism") {
        Some(inner) if inner.get("kind").is_some() => mechanism_from_json(&inner.to_string(), &j)?,
        _ => mechanism_from_json(&text, &j)?,
    };
    if !(a.epsilon >= 0.0) {
        return Err(Error::Usage(format!("ε = {} must be nonnegative", a.epsilon)));
    }
    let ij = induce(&j, &m)?;
    let measured = match a.criterion.per_letter() {
        None => ij.i_xu(),
        Some(c) => evaluate_criteria(&ij).max_for(c),
    };
    let pass = measured <= a.epsilon + tol;
    let mut v = json!({
        "criterion": a.criterion.name(),
        "epsilon": a.epsilon,
        "tolerance": tol,
        "measured": measured,
        "pass": pass,
        "metrics": metrics(&j, &m)?,
    });
    if m.reconstruction().is_some() {
        v["reconstruction_exact"] = json!(ij.h_y_given_ux() <= tol);
    }
    write_out(a.out.as_deref(), &pretty(&v))?;
    Ok(if pass { Outcome::Ok } else { Outcome::Failed })
}

type Row = Vec<Option<f64>>;

fn bound_columns(sets: &[BoundSet]) -> (Vec<String>, Vec<String>) {
    let lower: BTreeSet<&String> = sets.iter().flat_map(|b| b.lower_bounds.keys()).collect();
    let upper: BTreeSet<&String> = sets.iter().flat_map(|b| b.upper_bounds.keys()).collect();
    (
        lower.into_iter().cloned().collect(),
        upper.into_iter().cloned().collect(),
    )
}

fn utility(j: &JointDistribution, m: Result<Mechanism>) -> Option<f64> {
    m.and_then(|m| induce(j, &m)).map(|ij| ij.i_yu()).ok()
}

pub fn sweep(a: &SweepArgs) -> Result<Outcome> {
    let grid = super::args::parse_grid(&a.grid)?;
    let j = load(&a.input)?.joint();
    let per_letter = a.criterion.per_letter();
    let last = *grid.last().expect("nonempty grid");
    match (a.problem, per_letter) {
        (_, Some(_)) if last > 2.0 => {
            return Err(Error::Usage("per-letter budgets lie in [0, 2]".into()));
        }
        (ProblemArg::H, None) if last > j.h_x() + 1e-12 => {
            return Err(Error::Usage(format!("h grid ends at {last} > H(X) = {}", j.h_x())));
        }
        _ => {}
    }
    let opts_at = |k: usize| OracleOptions {
        u_size: a.oracle.u_size,
        restarts: a.oracle.restarts,
        seed: derive_seed(a.seed, &format!("sweep/oracle/{k}")),
    };
    if a.oracle.restarts == 0 {
        return Err(Error::Usage("at least one restart is required".into()));
    }
    let oracle_at = |k: usize, eps: f64| -> Result<Option<f64>> {
        if !a.with_oracle {
            return Ok(None);
        }
        let o = opts_at(k);
        let r = match (a.problem, per_letter) {
            (ProblemArg::G, None) => solve_g(&j, eps, &o)?,
            (ProblemArg::H, None) => solve_h(&j, eps, &o)?,
            (ProblemArg::G, Some(c)) => solve_g_perletter(&j, eps, c, &o)?,
            (ProblemArg::H, Some(c)) => solve_h_perletter(&j, eps, c, &o)?,
        };
        Ok(Some(r.value))
    };

    let mut header: Vec<String> = vec!["epsilon".into()];
    let rows: Vec<Row> = match per_letter {
        None => {
            let g0 = if a.problem == ProblemArg::G && j.ny() <= MAX_Y {
                Some(g0_solve(&j)?.value)
            } else {
                None
            };
            let sets: Vec<BoundSet> = grid
                .iter()
                .map(|&e| match a.problem {
                    ProblemArg::G => g_bounds(&j, e, g0),
                    ProblemArg::H => h_bounds(&j, e),
                })
                .collect();
            let (lower, upper) = bound_columns(&sets);
            header.extend(lower.iter().map(|n| format!("lower_{n}")));
            header.extend(upper.iter().map(|n| format!("upper_{n}")));
            header.extend(["best_lower".into(), "best_upper".into()]);
            let constructions: &[&str] = match a.problem {
                ProblemArg::G => &["y_rand_utility"],
                ProblemArg::H => &["efrl_utility", "esfrl_utility", "y_rand_utility"],
            };
            header.extend(constructions.iter().map(|s| s.to_string()));
            let sfrl_params = SfrlParams {
                seed: derive_seed(a.seed, "sweep/sfrl"),
                ..SfrlParams::default()
            };
            grid.par_iter()
                .enumerate()
                .map(|(k, &e)| {
                    let b = &sets[k];
                    let mut row: Row = vec![Some(e)];
                    row.extend(lower.iter().map(|n| b.lower_bounds.get(n).copied()));
                    row.extend(upper.iter().map(|n| b.upper_bounds.get(n).copied()));
                    row.extend([Some(b.best_lower()), Some(b.best_upper())]);
                    if a.problem == ProblemArg::H {
                        row.push(utility(&j, efrl_construct(&j, e).map(|o| o.mechanism)));
                        row.push(utility(&j, esfrl_construct(&j, e, sfrl_params).map(|o| o.0.mechanism)));
                    }
                    row.push(utility(&j, y_randomization_construct(&j, e).map(|o| o.0)));
                    row.push(oracle_at(k, e)?);
                    Ok(row)
                })
                .collect::<Result<_>>()?
        }
        Some(c) => {
            if a.problem == ProblemArg::H {
                header.push("calibrated_efrl_utility".into());
            }
            grid.par_iter()
                .enumerate()
                .map(|(k, &e)| {
                    let mut row: Row = vec![Some(e)];
                    if a.problem == ProblemArg::H {
                        row.push(utility(
                            &j,
                            calibrate_perletter(&j, BaseRepresentation::Frl, e, c).map(|o| o.mechanism),
                        ));
                    }
                    row.push(oracle_at(k, e)?);
                    Ok(row)
                })
                .collect::<Result<_>>()?
        }
    };
    if a.with_oracle {
        header.push("oracle".into());
    }
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(&header)?;
    for row in rows {
        // the oracle slot is always pushed; drop it when not requested
        let cells = if a.with_oracle { &row[..] } else { &row[..row.len() - 1] };
        w.write_record(cells.iter().map(|v| v.map(format_number).unwrap_or_default()))?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
    let text = String::from_utf8(bytes).expect("csv output is utf-8");
    write_out(a.out.as_deref(), &text)?;
    Ok(Outcome::Ok)
}

fn symbol(alphabet: &Alphabet, s: &str, what: &str) -> Result<usize> {
    alphabet
        .index_of(s)
        .or_else(|| s.parse::<usize>().ok().filter(|&i| i < alphabet.len()))
        .ok_or_else(|| Error::Usage(format!("{what} {s:?} is neither a label nor an index")))
}

pub fn compress(c: &CompressCommand) -> Result<Outcome> {
    match c {
        CompressCommand::Build { input, seed, out } => {
            let j = load(input)?.joint();
            let code = build_code(&j, *seed)?;
            let mut s = codebook_to_json(&code, &j);
            s.push('\n');
            write_out(out.as_deref(), &s)?;
        }
        CompressCommand::Encode {
            codebook,
            x,
            y,
            key,
            nonce,
        } => {
            let (code, j) = codebook_from_json(&std::fs::read_to_string(codebook)?)?;
            let xi = symbol(j.x_alphabet(), x, "x")?;
            let yi = symbol(j.y_alphabet(), y, "y")?;
            let bits = code.encode(&j, xi, yi, *key, *nonce)?;
            let v = json!({ "hex": bits_to_hex(&bits), "bits": bits, "length_bits": bits.len() });
            write_out(None, &pretty(&v))?;
        }
        CompressCommand::Decode { codebook, hex, key } => {
            let (code, j) = codebook_from_json(&std::fs::read_to_string(codebook)?)?;
            let bits = hex_to_bits(hex)?;
            let (x, u) = code.parse(&bits, *key)?;
            let y = code.decode(&bits, *key)?;
            let v = json!({
                "x": j.x_alphabet().label(x),
                "u": code.frl_mechanism.u_alphabet().label(u),
                "y": j.y_alphabet().label(y),
            });
            write_out(None, &pretty(&v))?;
        }
        CompressCommand::Analyze { codebook } => {
            let (code, j) = codebook_from_json(&std::fs::read_to_string(codebook)?)?;
            let a = analyze(&code, &j)?;
            let checked = code.verify_roundtrip(&j)?;
            let v = json!({
                "analysis": a,
                "prefix_free": code.is_prefix_free(),
                "roundtrip_cases": checked,
                "pad_width": code.pad_width,
            });
            write_out(None, &pretty(&v))?;
            let ok = a.bound_check && a.leakage_i_xc_bits <= 1e-9 && code.is_prefix_free();
            return Ok(if ok { Outcome::Ok } else { Outcome::Failed });
        }
    }
    Ok(Outcome::Ok)
}
