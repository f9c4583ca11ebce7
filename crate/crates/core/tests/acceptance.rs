//! Acceptance suite: one PASS/FAIL line per criterion.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::Command;
use std::time::Instant;

use privlens::bounds::{efrl_lower_bound, equivalence_check, esfrl_lower_bound, g0_simple_bounds, g_bounds, h_bounds};
use privlens::ext_lemmas::{efrl_construct, prioritized_construct, y_randomization_construct};
use privlens::frl::{frl_construct, sfrl_bound, sfrl_construct, SfrlParams};
use privlens::linalg::{leakage_rank, REL_RANK_TOL};
use privlens::oracle::{solve_g, solve_h, OracleOptions};
use privlens::perfect_privacy::g0_solve;
use privlens::perletter::{
    error_prob_relation, evaluate_criteria, linkage_check, pinsker_bridge, postprocessing_check,
};
use privlens::privcomp::{analyze, build_code};
use privlens::probcore::io::distribution_to_json;
use privlens::rng::{dirichlet, rng_for};
use privlens::{induce, testkit, Alphabet, JointDistribution, Mechanism};
use rand::Rng;

type Outcome = Result<String, String>;

const RESTARTS: usize = 8;

fn opts(seed: u64) -> OracleOptions {
    OracleOptions {
        u_size: None,
        restarts: RESTARTS,
        seed,
    }
}

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn sizes(seed: u64, choices: &[usize]) -> (usize, usize) {
    let mut r = rng_for(seed, "acceptance/sizes");
    (
        choices[r.random_range(0..choices.len())],
        choices[r.random_range(0..choices.len())],
    )
}

fn frl_sweep() -> Outcome {
    let t = Instant::now();
    let mut worst = 0.0f64;
    for s in 0..50 {
        let (nx, ny) = sizes(s, &[2, 3, 4]);
        let j = testkit::random_joint(1000 + s, nx, ny);
        let m = frl_construct(&j).mechanism;
        let ij = induce(&j, &m).map_err(|e| e.to_string())?;
        let (ind, rec, chain) = (ij.independence_residual(), ij.h_y_given_ux(), ij.chain_rule_residual());
        worst = worst.max(ind).max(rec).max(chain);
        ensure(ind <= 1e-9 && rec <= 1e-9 && chain <= 1e-9, || {
            format!("joint {s}: independence {ind:e}, H(Y|U,X) {rec:e}, chain {chain:e}")
        })?;
        ensure(m.nu() <= nx * (ny - 1) + 1, || format!("joint {s}: |U| = {}", m.nu()))?;
    }
    let secs = t.elapsed().as_secs_f64();
    ensure(secs < 5.0, || format!("took {secs:.2} s"))?;
    Ok(format!("50 joints, worst residual {worst:.1e}, {secs:.2} s"))
}

fn efrl_exactness() -> Outcome {
    let mut worst = 0.0f64;
    for s in 0..20 {
        let (nx, ny) = sizes(2000 + s, &[2, 3, 4]);
        let j = testkit::random_joint(2000 + s, nx, ny);
        let hx = j.h_x();
        for k in 0..9 {
            let eps = hx * k as f64 / 8.0;
            let out = efrl_construct(&j, eps).map_err(|e| e.to_string())?;
            let ij = induce(&j, &out.mechanism).map_err(|e| e.to_string())?;
            let gap = (ij.i_xu() - eps).abs();
            worst = worst.max(gap);
            ensure(gap <= 1e-9, || format!("joint {s}, ε = {eps}: |I(U;X) − ε| = {gap:e}"))?;
            let floor = eps + j.h_y_given_x() - j.h_x_given_y();
            ensure(ij.i_yu() >= floor - 1e-9, || {
                format!("joint {s}, ε = {eps}: I(Y;U) = {} below {floor}", ij.i_yu())
            })?;
        }
    }
    Ok(format!("20 joints × 9 budgets, worst leakage gap {worst:.1e}"))
}

fn tightness_x_function_of_y() -> Outcome {
    let mut worst_oracle = 0.0f64;
    for s in 0..10 {
        let (nx, ny) = if s % 2 == 0 { (2, 4) } else { (2, 3) };
        let j = testkit::x_function_of_y(3000 + s, nx, ny);
        let eps = 0.4 * j.h_x();
        let target = eps + j.h_y_given_x();
        let ij = induce(&j, &efrl_construct(&j, eps).map_err(|e| e.to_string())?.mechanism)
            .map_err(|e| e.to_string())?;
        ensure((ij.i_yu() - target).abs() <= 1e-9, || {
            format!("instance {s}: EFRL utility {} vs {target}", ij.i_yu())
        })?;
        let h = solve_h(&j, eps, &opts(s)).map_err(|e| e.to_string())?.value;
        worst_oracle = worst_oracle.max((h - target).abs());
        ensure((h - target).abs() <= 1e-3, || format!("instance {s}: oracle h = {h} vs {target}"))?;
    }
    Ok(format!("10 instances, oracle gap {worst_oracle:.1e}"))
}

fn y_function_of_x_optimality() -> Outcome {
    let mut worst_oracle = 0.0f64;
    for s in 0..10 {
        let (nx, ny) = if s % 2 == 0 { (4, 2) } else { (3, 3) };
        let j = testkit::y_function_of_x(4000 + s, nx, ny);
        let eps = 0.5 * j.h_y();
        let (m, _) = y_randomization_construct(&j, eps).map_err(|e| e.to_string())?;
        let ij = induce(&j, &m).map_err(|e| e.to_string())?;
        ensure((ij.i_yu() - eps).abs() <= 1e-9 && (ij.i_xu() - eps).abs() <= 1e-9, || {
            format!("instance {s}: I(Y;U) = {}, I(X;U) = {}, ε = {eps}", ij.i_yu(), ij.i_xu())
        })?;
        let h = solve_h(&j, eps, &opts(s)).map_err(|e| e.to_string())?.value;
        worst_oracle = worst_oracle.max((h - eps).abs());
        ensure((h - eps).abs() <= 1e-3, || format!("instance {s}: oracle h = {h} vs ε = {eps}"))?;
    }
    Ok(format!("10 instances, oracle gap {worst_oracle:.1e}"))
}

fn perfect_privacy_lp() -> Outcome {
    let t = Instant::now();
    let mut worst = 0.0f64;
    let mut positive = 0;
    for s in 0..20 {
        let nx = if s % 3 == 0 { 3 } else { 2 };
        let ny = 2 + (s as usize % 3);
        let j = testkit::random_joint(5000 + s, nx, ny);
        let lp = g0_solve(&j).map_err(|e| e.to_string())?;
        let oracle = solve_g(&j, 0.0, &opts(s)).map_err(|e| e.to_string())?.value;
        worst = worst.max((lp.value - oracle).abs());
        ensure((lp.value - oracle).abs() <= 1e-3, || {
            format!("joint {s}: LP {} vs oracle {oracle}", lp.value)
        })?;
        let sandwich = g0_simple_bounds(&j);
        ensure(sandwich.contains(lp.value, 1e-9), || {
            format!("joint {s}: g₀ = {} outside [{}, {}]", lp.value, sandwich.best_lower(), sandwich.best_upper())
        })?;
        let (_, null) = leakage_rank(&j, REL_RANK_TOL);
        ensure(lp.weights.len() <= null + 1, || {
            format!("joint {s}: support {} > nullity {null} + 1", lp.weights.len())
        })?;
        positive += usize::from(lp.value > 1e-9);
    }
    let secs = t.elapsed().as_secs_f64();
    ensure(secs < 60.0, || format!("took {secs:.1} s"))?;
    Ok(format!("20 joints ({positive} with g₀ > 0), LP–oracle gap {worst:.1e}, {secs:.1} s"))
}

fn bound_sandwich() -> Outcome {
    for s in 0..20 {
        let (nx, ny) = sizes(6000 + s, &[2, 3]);
        let j = testkit::random_joint(6000 + s, nx, ny);
        let (i, hx) = (j.mutual_information(), j.h_x());
        let g0 = g0_solve(&j).map_err(|e| e.to_string())?.value;
        for (k, eps) in [0.0, 0.25 * i, 0.5 * i, i, 0.5 * (i + hx)].into_iter().enumerate() {
            let o = opts(100 * s + k as u64);
            let g = solve_g(&j, eps, &o).map_err(|e| e.to_string())?.value;
            let h = solve_h(&j, eps, &o).map_err(|e| e.to_string())?.value;
            let (gb, hb) = (g_bounds(&j, eps, Some(g0)), h_bounds(&j, eps));
            ensure(gb.contains(g, 1e-3), || {
                format!("joint {s}, ε = {eps}: g = {g} outside [{}, {}]", gb.best_lower(), gb.best_upper())
            })?;
            ensure(hb.contains(h, 1e-3), || {
                format!("joint {s}, ε = {eps}: h = {h} outside [{}, {}]", hb.best_lower(), hb.best_upper())
            })?;
            ensure(h >= g - 1e-3, || format!("joint {s}, ε = {eps}: h = {h} < g = {g}"))?;
        }
    }
    Ok("20 joints × 5 budgets".into())
}

fn common_information_tightness() -> Outcome {
    let shapes: [&[(usize, usize)]; 5] = [
        &[(1, 2), (2, 1)],
        &[(2, 2), (1, 1)],
        &[(1, 1), (1, 2), (1, 1)],
        &[(2, 1), (1, 2)],
        &[(1, 2), (1, 2)],
    ];
    let mut worst = 0.0f64;
    for (s, shape) in shapes.iter().enumerate() {
        let j = testkit::block_joint(7000 + s as u64, shape);
        let eps = 0.5 * j.mutual_information();
        let target = eps + j.h_y_given_x();
        let o = opts(s as u64);
        let g = solve_g(&j, eps, &o).map_err(|e| e.to_string())?.value;
        let h = solve_h(&j, eps, &o).map_err(|e| e.to_string())?.value;
        worst = worst.max((g - target).abs()).max((h - target).abs());
        ensure((g - target).abs() <= 1e-3 && (h - target).abs() <= 1e-3, || {
            format!("block joint {s}: g = {g}, h = {h}, ε + H(Y|X) = {target}")
        })?;
        let e = equivalence_check(&j, eps, g, h).map_err(|e| e.to_string())?;
        ensure(e.i && e.ii && e.iii, || format!("block joint {s}: flags {e:?}"))?;
    }
    Ok(format!("5 block joints, worst gap {worst:.1e}"))
}

fn example_dominance() -> Outcome {
    let ind = testkit::uniform_product(32, 2);
    ensure((ind.h_x() - 5.0).abs() < 1e-12, || "H(X) ≠ 5".into())?;
    let (es, ef) = (esfrl_lower_bound(&ind, 0.0), efrl_lower_bound(&ind, 0.0));
    ensure(es > ef, || format!("independent: ESFRL {es} ≤ EFRL {ef}"))?;
    let f = testkit::parity();
    let (es2, ef2) = (esfrl_lower_bound(&f, 0.0), efrl_lower_bound(&f, 0.0));
    ensure(ef2 > es2, || format!("X = f(Y): EFRL {ef2} ≤ ESFRL {es2}"))?;
    Ok(format!("independent: {es:.4} > {ef:.4}; X = f(Y): {ef2:.4} > {es2:.4}"))
}

/// X − X̃ − Y with random kernels out of X̃.
fn markov_chain(seed: u64) -> privlens::probcore::TripleDistribution {
    let mut r = rng_for(seed, "acceptance/chain");
    let (nx, nt, ny) = (r.random_range(2..4), r.random_range(2..4), r.random_range(2..4));
    let pt = dirichlet(&mut r, nt);
    let x_given_t: Vec<Vec<f64>> = (0..nt).map(|_| dirichlet(&mut r, nx)).collect();
    let y_given_t: Vec<Vec<f64>> = (0..nt).map(|_| dirichlet(&mut r, ny)).collect();
    let mut pmf = Vec::with_capacity(nx * nt * ny);
    for x in 0..nx {
        for t in 0..nt {
            for y in 0..ny {
                pmf.push(pt[t] * x_given_t[t][x] * y_given_t[t][y]);
            }
        }
    }
    privlens::probcore::TripleDistribution::new(Alphabet::range(nx), Alphabet::range(nt), Alphabet::range(ny), pmf)
        .expect("valid chain")
}

fn perletter_properties() -> Outcome {
    let mut worst_identity = 0.0f64;
    let mut worst_tv = 0.0f64;
    for s in 0..100 {
        let chain = markov_chain(8000 + s);
        let ny = chain.ny();
        let mut r = rng_for(8000 + s, "acceptance/kernels");
        let nu = r.random_range(2..5);
        let m = Mechanism::given_y(Alphabet::range(nu), (0..ny).map(|_| dirichlet(&mut r, nu)).collect())
            .map_err(|e| e.to_string())?;
        let nv = r.random_range(2..4);
        let post: Vec<Vec<f64>> = (0..nu).map(|_| dirichlet(&mut r, nv)).collect();

        let link = linkage_check(&chain, &m).map_err(|e| e.to_string())?;
        ensure(link.holds, || format!("triple {s}: linkage margins {:?}", link.margins))?;

        // the (X, Y) marginal of the chain carries the remaining checks
        let pair = {
            let (nx, nt) = (chain.n1(), chain.n2());
            let rows = (0..nx)
                .map(|x| (0..ny).map(|y| (0..nt).map(|t| chain.p(x, t, y)).sum()).collect())
                .collect();
            JointDistribution::from_rows(rows).map_err(|e| e.to_string())?
        };
        let ij = induce(&pair, &m).map_err(|e| e.to_string())?;
        let post_report = postprocessing_check(&ij, &post).map_err(|e| e.to_string())?;
        ensure(post_report.holds, || format!("triple {s}: post-processing {post_report:?}"))?;
        let rep = evaluate_criteria(&ij);
        worst_identity = worst_identity.max(rep.weighted_identity_residual());
        ensure(rep.weighted_identity_residual() <= 1e-12, || {
            format!("triple {s}: identity residual {:e}", rep.weighted_identity_residual())
        })?;
        pinsker_bridge(&ij).map_err(|e| format!("triple {s}: {e}"))?;
        let px = ij.px();
        for u in 0..nu {
            if let Some(c) = ij.x_given_u(u) {
                let rel = error_prob_relation(&c, &px).map_err(|e| e.to_string())?;
                worst_tv = worst_tv.max(rel.residual);
                ensure(rel.residual <= 1e-12, || format!("triple {s}: TV residual {:e}", rel.residual))?;
            }
        }
    }
    Ok(format!("100 triples, identity {worst_identity:.1e}, TV relation {worst_tv:.1e}"))
}

fn prioritized() -> Outcome {
    let mut worst = 0.0f64;
    for s in 0..10 {
        let t = testkit::random_triple(9000 + s, 2, 2 + (s as usize % 2), 3);
        let eps = 0.6 * t.h_x2();
        let (_, rep) = prioritized_construct(&t, eps).map_err(|e| e.to_string())?;
        worst = worst.max((rep.i_u_x1x2 - eps).abs());
        ensure((rep.i_u_x1x2 - eps).abs() <= 1e-9, || {
            format!("triple {s}: I(U;X1,X2) = {} vs ε = {eps}", rep.i_u_x1x2)
        })?;
        ensure(rep.i_u_x1 <= rep.i_u_x2 + 1e-9, || {
            format!("triple {s}: I(U;X1) = {} > I(U;X2) = {}", rep.i_u_x1, rep.i_u_x2)
        })?;
    }
    Ok(format!("10 triples, leakage gap {worst:.1e}"))
}

fn private_compression() -> Outcome {
    let t = Instant::now();
    let mut cases = 0;
    let mut worst = 0.0f64;
    for s in 0..10 {
        let (nx, ny) = sizes(10_000 + s, &[2, 3, 4]);
        let j = testkit::random_joint(10_000 + s, nx, ny);
        let code = build_code(&j, s).map_err(|e| e.to_string())?;
        cases += code.verify_roundtrip(&j).map_err(|e| format!("joint {s}: {e}"))?;
        let a = analyze(&code, &j).map_err(|e| e.to_string())?;
        worst = worst.max(a.leakage_i_xc_bits);
        ensure(a.leakage_i_xc_bits <= 1e-9, || format!("joint {s}: I(X;C) = {:e}", a.leakage_i_xc_bits))?;
        ensure(a.bound_check, || {
            format!("joint {s}: length {} > log|X| + H(U) + 1", a.expected_length_bits)
        })?;
    }
    let secs = t.elapsed().as_secs_f64();
    ensure(secs < 30.0, || format!("took {secs:.1} s"))?;
    Ok(format!("10 joints, {cases} round trips, max I(X;C) {worst:.1e}, {secs:.2} s"))
}

fn sfrl_diagnostic() -> Outcome {
    let mut slack = f64::INFINITY;
    for s in 0..10 {
        let (nx, ny) = sizes(11_000 + s, &[2, 3]);
        let j = testkit::random_joint(11_000 + s, nx, ny);
        let params = SfrlParams {
            seed: s,
            ..SfrlParams::default()
        };
        let (m, rep) = sfrl_construct(&j, params).map_err(|e| e.to_string())?;
        let ij = induce(&j, &m).map_err(|e| e.to_string())?;
        let bound = sfrl_bound(&j);
        slack = slack.min(bound - ij.i_xu_given_y());
        ensure(ij.i_xu_given_y() <= bound, || {
            format!("joint {s}: I(X;U|Y) = {} > {bound}", ij.i_xu_given_y())
        })?;
        ensure(ij.independence_residual() <= 1e-6, || {
            format!("joint {s}: independence residual {:e}", ij.independence_residual())
        })?;
        ensure(rep.h_y_given_ux <= 1e-9, || format!("joint {s}: H(Y|U,X) = {}", rep.h_y_given_ux))?;
    }
    Ok(format!("10 joints, least slack to the bound {slack:.3} bits"))
}

fn cli_determinism() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let input = dir.path().join("joint.json");
    std::fs::write(&input, distribution_to_json(&testkit::random_joint(12_000, 2, 3))).map_err(|e| e.to_string())?;
    let input = input.to_str().expect("utf-8 path").to_string();
    let runs: [(&str, Vec<&str>); 4] = [
        ("sfrl.json", vec!["design", "--method", "sfrl", "--seed", "7"]),
        ("esfrl.json", vec!["design", "--method", "esfrl", "--epsilon", "0.3", "--seed", "7"]),
        (
            "sweep.csv",
            vec!["sweep", "--problem", "h", "--grid", "0:0.6:4", "--with-oracle", "--restarts", "2", "--seed", "7"],
        ),
        ("code.json", vec!["compress", "build", "--seed", "7"]),
    ];
    for (name, args) in runs {
        let mut outputs = Vec::new();
        for k in 0..2 {
            let out = dir.path().join(format!("{k}-{name}"));
            let status = Command::new(env!("CARGO_BIN_EXE_privlens"))
                .args(&args)
                .args(["--input", &input, "--out", out.to_str().expect("utf-8 path")])
                .status()
                .map_err(|e| e.to_string())?;
            ensure(status.success(), || format!("{name}: exit {status}"))?;
            outputs.push(std::fs::read(&out).map_err(|e| e.to_string())?);
        }
        ensure(outputs[0] == outputs[1], || format!("{name}: outputs differ"))?;
    }
    Ok("design, sweep and compress outputs byte-identical across runs".into())
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 13] = [
        ("FRL correctness sweep", frl_sweep),
        ("EFRL leakage exactness", efrl_exactness),
        ("tightness when H(X|Y) = 0", tightness_x_function_of_y),
        ("optimality when Y = f(X)", y_function_of_x_optimality),
        ("perfect-privacy LP versus oracle", perfect_privacy_lp),
        ("bound sandwich", bound_sandwich),
        ("common-information tightness", common_information_tightness),
        ("ESFRL/EFRL dominance examples", example_dominance),
        ("per-letter properties", perletter_properties),
        ("prioritized construction", prioritized),
        ("private compression", private_compression),
        ("SFRL diagnostic", sfrl_diagnostic),
        ("CLI determinism", cli_determinism),
    ];
    let mut failures = 0;
    for (k, (name, check)) in criteria.iter().enumerate() {
        let t = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|_| Err("panicked".into()));
        let secs = t.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("criterion {:>2} PASS {name}: {detail} [{secs:.2} s]", k + 1),
            Err(why) => {
                failures += 1;
                println!("criterion {:>2} FAIL {name}: {why} [{secs:.2} s]", k + 1);
            }
        }
    }
    println!("acceptance: {} passed, {failures} failed", criteria.len() - failures);
    if failures > 0 {
        std::process::exit(1);
    }
}
