//! Numerical reference solvers for the trade-off problems on small alphabets.
//!
//! * `g`: mechanisms P_{U|Y}; `h`: mechanisms P_{U|X,Y}.
//! * Mutual-information leakage and the strong per-letter criterion are
//!   solved by column generation over posterior atoms with a nonconvex
//!   pricing step; the weighted per-letter criterion by penalized kernel
//!   ascent at a fixed |U|.
//!
//! Every restart runs from its own derived seed and the best feasible result
//! wins, so the output depends only on (input, options).

mod colgen;
mod kernel;
mod problem;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::perletter::{evaluate_criteria, Criterion};
use crate::probcore::io::mechanism_to_value;
use crate::probcore::{induce, JointDistribution, Mechanism};
use crate::rng::rng_for;

use colgen::{column_generation, merge_to, polish_leakage, AtomRule};
use problem::{Observes, Problem};

/// Largest admissible |X|·|Y|·|U|.
pub const ORACLE_GUARD: usize = 2000;
pub const DEFAULT_RESTARTS: usize = 64;
/// Spread of the best restarts above which the result is flagged.
pub const SPREAD_WARNING: f64 = 1e-2;
/// Largest tolerated constraint violation of a returned mechanism.
pub const CONSTRAINT_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy)]
pub struct OracleOptions {
    /// Defaults to |X|·|Y| + 1.
    pub u_size: Option<usize>,
    pub restarts: usize,
    pub seed: u64,
}

impl Default for OracleOptions {
    fn default() -> Self {
        Self {
            u_size: None,
            restarts: DEFAULT_RESTARTS,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct OracleResult {
    /// Measured I(Y;U) of `argmech`.
    pub value: f64,
    pub argmech: Mechanism,
    pub restarts_used: usize,
    /// max − min over the top decile of restart values.
    pub convergence_spread: f64,
    pub nonconvexity_warning: bool,
    /// Measured constraint minus ε, floored at 0.
    pub constraint_residual: f64,
    pub u_size: usize,
    pub restart_values: Vec<f64>,
}

#[derive(Serialize)]
struct ResultJson<'a> {
    value: f64,
    restarts_used: usize,
    convergence_spread: f64,
    nonconvexity_warning: bool,
    constraint_residual: f64,
    u_size: usize,
    restart_values: &'a [f64],
    argmech: serde_json::Value,
}

impl OracleResult {
    pub fn to_value(&self, j: &JointDistribution) -> serde_json::Value {
        serde_json::to_value(ResultJson {
            value: self.value,
            restarts_used: self.restarts_used,
            convergence_spread: self.convergence_spread,
            nonconvexity_warning: self.nonconvexity_warning,
            constraint_residual: self.constraint_residual,
            u_size: self.u_size,
            restart_values: &self.restart_values,
            argmech: mechanism_to_value(&self.argmech, j),
        })
        .expect("serializable")
    }
}

#[derive(Debug, Clone, Copy)]
enum Constraint {
    Mutual,
    PerLetter(Criterion),
}

fn measure(j: &JointDistribution, m: &Mechanism, c: Constraint) -> Result<(f64, f64)> {
    let ij = induce(j, m)?;
    let level = match c {
        Constraint::Mutual => ij.i_xu(),
        Constraint::PerLetter(k) => evaluate_criteria(&ij).max_for(k),
    };
    Ok((ij.i_yu(), level))
}

fn check_inputs(j: &JointDistribution, epsilon: f64, opts: &OracleOptions) -> Result<usize> {
    if !(epsilon >= 0.0) {
        return Err(Error::Budget(format!("leakage budget {epsilon} must be nonnegative")));
    }
    if opts.restarts == 0 {
        return Err(Error::Usage("at least one restart is required".into()));
    }
    let k = opts.u_size.unwrap_or(j.nx() * j.ny() + 1);
    if k == 0 {
        return Err(Error::Usage("u_size must be positive".into()));
    }
    let load = j.nx() * j.ny() * k;
    if load > ORACLE_GUARD {
        return Err(Error::Resource(format!(
            "|X|·|Y|·|U| = {load} exceeds the oracle guard {ORACLE_GUARD}"
        )));
    }
    Ok(k)
}

/// Runs the restarts, keeps the best feasible mechanism.
fn best_of(
    j: &JointDistribution,
    epsilon: f64,
    c: Constraint,
    k: usize,
    opts: &OracleOptions,
    label: &str,
    run: impl Fn(usize, &mut rand_chacha::ChaCha8Rng) -> Result<Mechanism> + Sync,
) -> Result<OracleResult> {
    let outcomes: Vec<Result<(Mechanism, f64, f64)>> = (0..opts.restarts)
        .into_par_iter()
        .map(|r| {
            let mut rng = rng_for(opts.seed, &format!("oracle/{label}/{r}"));
            let m = run(r, &mut rng)?;
            let (value, level) = measure(j, &m, c)?;
            Ok((m, value, (level - epsilon).max(0.0)))
        })
        .collect();
    let mut results = Vec::with_capacity(outcomes.len());
    for o in outcomes {
        results.push(o?);
    }
    let values: Vec<f64> = results.iter().map(|r| r.1).collect();
    let best = results
        .iter()
        .enumerate()
        .filter(|(_, r)| r.2 <= CONSTRAINT_TOL)
        .max_by(|a, b| a.1 .1.total_cmp(&b.1 .1).then(b.0.cmp(&a.0)))
        .map(|(i, _)| i)
        .ok_or_else(|| Error::Consistency("no restart produced a feasible mechanism".into()))?;
    let mut sorted = values.clone();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let top = sorted.len().div_ceil(10).max(1);
    let spread = sorted[0] - sorted[top - 1];
    let (m, value, residual) = results.swap_remove(best);
    Ok(OracleResult {
        value,
        argmech: m,
        restarts_used: opts.restarts,
        convergence_spread: spread,
        nonconvexity_warning: spread > SPREAD_WARNING,
        constraint_residual: residual,
        u_size: k,
        restart_values: values,
    })
}

fn mi_atoms(p: &Problem, epsilon: f64, k: usize, rng: &mut rand_chacha::ChaCha8Rng) -> Result<colgen::Atoms> {
    let rule = if epsilon == 0.0 {
        AtomRule::Independent
    } else {
        AtomRule::Leakage(epsilon)
    };
    let atoms = merge_to(p, column_generation(p, rule, rng)?, k);
    Ok(if epsilon > 0.0 {
        polish_leakage(p, atoms, epsilon)
    } else {
        atoms
    })
}

fn solve_mi(j: &JointDistribution, epsilon: f64, observes: Observes, opts: &OracleOptions) -> Result<OracleResult> {
    let k = check_inputs(j, epsilon, opts)?;
    let p = Problem::new(j, observes);
    let label = match observes {
        Observes::Y => "g",
        Observes::XY => "h",
    };
    best_of(j, epsilon, Constraint::Mutual, k, opts, label, |_, rng| {
        Ok(p.mechanism(&mi_atoms(&p, epsilon, k, rng)?))
    })
}

/// max I(Y;U) over P_{U|X,Y} subject to I(X;U) ≤ ε.
pub fn solve_h(j: &JointDistribution, epsilon: f64, opts: &OracleOptions) -> Result<OracleResult> {
    solve_mi(j, epsilon, Observes::XY, opts)
}

/// max I(Y;U) over P_{U|Y} subject to I(X;U) ≤ ε.
pub fn solve_g(j: &JointDistribution, epsilon: f64, opts: &OracleOptions) -> Result<OracleResult> {
    solve_mi(j, epsilon, Observes::Y, opts)
}

fn solve_perletter(
    j: &JointDistribution,
    epsilon: f64,
    criterion: Criterion,
    observes: Observes,
    opts: &OracleOptions,
) -> Result<OracleResult> {
    if epsilon == 0.0 {
        // both criteria at ε = 0 mean U ⫫ X
        return solve_mi(j, 0.0, observes, opts);
    }
    let k = check_inputs(j, epsilon, opts)?;
    let eps = epsilon.min(2.0);
    let p = Problem::new(j, observes);
    let label = match (observes, criterion) {
        (Observes::Y, Criterion::StrongL1) => "g-l1",
        (Observes::Y, Criterion::WeightedL1) => "g-wl1",
        (Observes::XY, Criterion::StrongL1) => "h-l1",
        (Observes::XY, Criterion::WeightedL1) => "h-wl1",
    };
    let strong = |rng: &mut rand_chacha::ChaCha8Rng| -> Result<colgen::Atoms> {
        Ok(merge_to(&p, column_generation(&p, AtomRule::Distance(eps), rng)?, k))
    };
    best_of(j, epsilon, Constraint::PerLetter(criterion), k, opts, label, |r, rng| match criterion {
        Criterion::StrongL1 => Ok(p.mechanism(&strong(rng)?)),
        Criterion::WeightedL1 => {
            let q0 = if r == 0 {
                kernel::kernel_from_atoms(&p, &strong(rng)?, k)
            } else {
                kernel::random_kernel(&p, k, rng)
            };
            let q = kernel::ascend(&p, q0, k, eps);
            Ok(p.mechanism_from_kernel(&q, k))
        }
    })
}

/// max I(Y;U) over P_{U|Y} subject to the per-letter criterion ≤ ε for every u.
pub fn solve_g_perletter(
    j: &JointDistribution,
    epsilon: f64,
    criterion: Criterion,
    opts: &OracleOptions,
) -> Result<OracleResult> {
    solve_perletter(j, epsilon, criterion, Observes::Y, opts)
}

/// As [`solve_g_perletter`] with mechanisms that also observe X.
pub fn solve_h_perletter(
    j: &JointDistribution,
    epsilon: f64,
    criterion: Criterion,
    opts: &OracleOptions,
) -> Result<OracleResult> {
    solve_perletter(j, epsilon, criterion, Observes::XY, opts)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ext_lemmas::{calibrate_perletter, BaseRepresentation};
    use crate::perfect_privacy::g0_solve;
    use crate::testkit;

    fn opts(restarts: usize) -> OracleOptions {
        OracleOptions {
            u_size: None,
            restarts,
            seed: 1,
        }
    }

    #[test]
    fn h_on_x_function_of_y() {
        let j = testkit::parity();
        let r = solve_h(&j, 0.3, &opts(4)).unwrap();
        assert!((r.value - 1.3).abs() < 1e-3, "{}", r.value);
        assert!(r.constraint_residual <= CONSTRAINT_TOL);
    }

    #[test]
    fn h_on_y_function_of_x() {
        let j = testkit::y_function_of_x(2, 4, 2);
        let r = solve_h(&j, 0.3, &opts(4)).unwrap();
        assert!((r.value - 0.3).abs() < 1e-3, "{}", r.value);
        let r = solve_h(&j, j.h_x(), &opts(2)).unwrap();
        assert!((r.value - j.h_y()).abs() < 1e-3);
    }

    #[test]
    fn g_endpoints() {
        let j = testkit::bsc(0.3);
        let r = solve_g(&j, j.mutual_information(), &opts(4)).unwrap();
        assert!((r.value - 1.0).abs() < 1e-3);
        let r = solve_g(&j, 0.0, &opts(2)).unwrap();
        assert!(r.value < 1e-3);
    }

    #[test]
    fn g_zero_matches_linear_program() {
        for seed in 0..3 {
            let j = testkit::random_joint(seed, 2, 3);
            let r = solve_g(&j, 0.0, &opts(4)).unwrap();
            let lp = g0_solve(&j).unwrap();
            assert!((r.value - lp.value).abs() < 1e-3, "{seed}: {} vs {}", r.value, lp.value);
        }
    }

    #[test]
    fn perletter_endpoints() {
        let j = testkit::random_joint(4, 2, 3);
        let g0 = g0_solve(&j).unwrap().value;
        for c in [Criterion::StrongL1, Criterion::WeightedL1] {
            let r = solve_g_perletter(&j, 0.0, c, &opts(2)).unwrap();
            assert!((r.value - g0).abs() < 1e-3);
            let r = solve_g_perletter(&j, 2.0, c, &opts(2)).unwrap();
            assert!((r.value - j.h_y()).abs() < 1e-3, "{c:?}: {}", r.value);
        }
    }

    #[test]
    fn perletter_beats_calibrated_construction() {
        let j = testkit::random_joint(6, 2, 3);
        let c = calibrate_perletter(&j, BaseRepresentation::Frl, 0.1, Criterion::WeightedL1).unwrap();
        let built = induce(&j, &c.mechanism).unwrap().i_yu();
        let r = solve_h_perletter(&j, 0.1, Criterion::WeightedL1, &opts(4)).unwrap();
        assert!(r.value >= built - 1e-6, "{} < {built}", r.value);
        assert!(r.constraint_residual <= CONSTRAINT_TOL);
    }

    #[test]
    fn deterministic_and_guarded() {
        let j = testkit::random_joint(9, 3, 3);
        let a = solve_g(&j, 0.1, &opts(3)).unwrap();
        let b = solve_g(&j, 0.1, &opts(3)).unwrap();
        assert_eq!(a.restart_values, b.restart_values);
        assert_eq!(a.argmech, b.argmech);
        let big = testkit::uniform_product(12, 12);
        assert!(matches!(solve_g(&big, 0.1, &opts(1)), Err(Error::Resource(_))));
    }
}
