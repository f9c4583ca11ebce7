//! Non-zero-leakage mechanisms built from functional representations.
//!
//! The extended constructions pair a functional representation Ũ (U ⫫ X,
//! Y = f(Ũ, X)) with an erasure-style randomized response Z on the private
//! data: Z reveals X with probability α and is ⊥ otherwise, independently of
//! everything else. Then I(U; X) = I(Z; X) = α·H(X) exactly, and Y stays a
//! function of (U, X).

use serde::Serialize;

use crate::bounds::{efrl_lower_bound, esfrl_lower_bound};
use crate::error::{Error, Result};
use crate::frl::{frl_construct, sfrl_construct, SfrlParams, SfrlReport};
use crate::perletter::{evaluate_criteria, Criterion};
use crate::probcore::{induce, Alphabet, JointDistribution, Mechanism, MechanismKind, TripleDistribution};

/// Bisection tolerance for mutual-information targets.
pub const MI_TARGET_TOL: f64 = 1e-9;
/// Bisection tolerance for per-letter targets.
pub const PERLETTER_TARGET_TOL: f64 = 1e-6;
pub const MAX_BISECTION: usize = 200;

const BUDGET_SLACK: f64 = 1e-12;
const ERASED: &str = "⊥";

/// A leakage budget ε and the reveal probability α = ε / H that realizes it.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct LeakageBudget {
    pub epsilon: f64,
    pub alpha: f64,
}

impl LeakageBudget {
    /// α = ε / entropy; rejects ε outside [0, entropy].
    pub fn new(epsilon: f64, entropy: f64) -> Result<Self> {
        if !(epsilon >= 0.0) {
            return Err(Error::Budget(format!("leakage budget {epsilon} must be nonnegative")));
        }
        if epsilon > entropy + BUDGET_SLACK {
            return Err(Error::Budget(format!(
                "ε = {epsilon} exceeds H = {entropy}; revealing the private data outright \
                 already leaks H bits, so a larger ε is vacuous"
            )));
        }
        let alpha = if entropy > 0.0 { (epsilon / entropy).min(1.0) } else { 0.0 };
        Ok(Self { epsilon, alpha })
    }
}

#[derive(Debug, Clone)]
pub struct ExtOutput {
    pub mechanism: Mechanism,
    pub budget: LeakageBudget,
    pub notes: Vec<String>,
}

/// Attaches Z = reveal(x) w.p. α, ⊥ otherwise, to a GivenXY base mechanism.
fn with_erasure(
    j: &JointDistribution,
    base: &Mechanism,
    alpha: f64,
    reveal: impl Fn(usize) -> usize,
    reveal_labels: &Alphabet,
) -> Mechanism {
    debug_assert_eq!(base.kind(), MechanismKind::GivenXY);
    let mut zs: Vec<Option<usize>> = Vec::new();
    if alpha > 0.0 {
        zs.extend((0..reveal_labels.len()).map(Some));
    }
    if alpha < 1.0 {
        zs.push(None);
    }
    let nb = base.nu();
    let (nx, ny) = (j.nx(), j.ny());
    let nu = nb * zs.len();
    let labels = (0..nb).flat_map(|b| {
        zs.iter().map(move |z| {
            let zl = z.map_or(ERASED, |z| reveal_labels.label(z));
            format!("{}|{}", base.u_alphabet().label(b), zl)
        })
    });
    let mut kernel = vec![0.0; nx * ny * nu];
    for x in 0..nx {
        let r = reveal(x);
        for y in 0..ny {
            let slice = base.slice(x, y);
            let out = &mut kernel[(x * ny + y) * nu..(x * ny + y + 1) * nu];
            for b in 0..nb {
                for (k, z) in zs.iter().enumerate() {
                    let pz = match z {
                        Some(z) if *z == r => alpha,
                        Some(_) => 0.0,
                        None => 1.0 - alpha,
                    };
                    out[b * zs.len() + k] = slice[b] * pz;
                }
            }
        }
    }
    let rec = base.reconstruction().map(|_| {
        (0..nb)
            .flat_map(|b| std::iter::repeat_n(b, zs.len()))
            .flat_map(|b| (0..nx).map(move |x| base.reconstruct(b, x).unwrap()))
            .collect()
    });
    Mechanism::given_xy(Alphabet::new(labels).expect("distinct"), nx, ny, kernel, rec)
        .expect("product of stochastic slices")
}

/// Extended FRL: U = (Ũ, Z) with Ũ the FRL variable and Z an erasure of X
/// revealed with probability α = ε / H(X).
pub fn efrl_construct(j: &JointDistribution, epsilon: f64) -> Result<ExtOutput> {
    let hx = j.h_x();
    let budget = LeakageBudget::new(epsilon, hx)?;
    let frl = frl_construct(j);
    let mut notes = frl.notes;
    if hx == 0.0 {
        notes.push("H(X) = 0: X is constant, every mechanism leaks 0 bits; plain FRL returned".into());
        return Ok(ExtOutput {
            mechanism: frl.mechanism,
            budget,
            notes,
        });
    }
    notes.push("randomized response realized as an erasure channel on X".into());
    let mechanism = with_erasure(j, &frl.mechanism, budget.alpha, |x| x, j.x_alphabet());
    Ok(ExtOutput {
        mechanism,
        budget,
        notes,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct EsfrlReport {
    pub i_yu: f64,
    pub i_xu: f64,
    pub h_y_given_ux: f64,
    pub i_xu_given_y: f64,
    pub esfrl_lower_bound: f64,
    pub efrl_lower_bound: f64,
    /// Measured utility ≥ ESFRL bound − 1e-6 (checked only when the bound is positive).
    pub bound_holds: bool,
    pub sfrl: SfrlReport,
}

/// Extended SFRL: as [`efrl_construct`] with Ũ from the SFRL construction.
pub fn esfrl_construct(
    j: &JointDistribution,
    epsilon: f64,
    params: SfrlParams,
) -> Result<(ExtOutput, EsfrlReport)> {
    let hx = j.h_x();
    let budget = LeakageBudget::new(epsilon, hx)?;
    let (base, sfrl) = sfrl_construct(j, params)?;
    let mut notes = vec!["randomized response realized as an erasure channel on X".to_string()];
    let mechanism = if hx == 0.0 {
        notes.push("H(X) = 0: plain SFRL returned".into());
        base
    } else {
        with_erasure(j, &base, budget.alpha, |x| x, j.x_alphabet())
    };
    let ij = induce(j, &mechanism)?;
    let i_xu = ij.i_xu();
    let h_y_given_ux = ij.h_y_given_ux();
    if (i_xu - epsilon).abs() > 1e-6 || h_y_given_ux > 1e-9 {
        return Err(Error::Consistency(format!(
            "ESFRL postcondition failed: I(U;X) = {i_xu}, H(Y|U,X) = {h_y_given_ux}"
        )));
    }
    let i_yu = ij.i_yu();
    let lower = esfrl_lower_bound(j, epsilon);
    let report = EsfrlReport {
        i_yu,
        i_xu,
        h_y_given_ux,
        i_xu_given_y: ij.i_xu_given_y(),
        esfrl_lower_bound: lower,
        efrl_lower_bound: efrl_lower_bound(j, epsilon),
        bound_holds: lower <= 0.0 || i_yu >= lower - 1e-6,
        sfrl,
    };
    Ok((
        ExtOutput {
            mechanism,
            budget,
            notes,
        },
        report,
    ))
}

/// For Y = f(X): U reveals Y with probability β and is ⊥ otherwise, with β
/// calibrated so that I(Y;U) = ε. Since U − Y − X and H(Y|X) = 0, the
/// leakage I(X;U) equals ε as well.
pub fn y_randomization_construct(j: &JointDistribution, epsilon: f64) -> Result<(Mechanism, f64)> {
    let hyx = j.h_y_given_x();
    if hyx > 1e-9 {
        return Err(Error::Precondition(format!(
            "Y is not a deterministic function of X (H(Y|X) = {hyx})"
        )));
    }
    let hy = j.h_y();
    LeakageBudget::new(epsilon, hy)?;
    let build = |beta: f64| {
        let mut labels: Vec<String> = j.y_alphabet().labels().to_vec();
        labels.push(ERASED.to_string());
        let ny = j.ny();
        let rows = (0..ny)
            .map(|y| {
                let mut r = vec![0.0; ny + 1];
                r[y] = beta;
                r[ny] = 1.0 - beta;
                r
            })
            .collect();
        Mechanism::given_y(Alphabet::new(labels).expect("⊥ is not a Y label"), rows)
    };
    let utility = |beta: f64| -> Result<f64> { Ok(induce(j, &build(beta)?)?.i_yu()) };
    let beta = bisect(0.0, 1.0, epsilon, MI_TARGET_TOL, utility)?;
    Ok((build(beta)?, beta))
}

/// Monotone bisection for `f(t) = target` on `[lo, hi]`.
fn bisect(
    mut lo: f64,
    mut hi: f64,
    target: f64,
    tol: f64,
    f: impl Fn(f64) -> Result<f64>,
) -> Result<f64> {
    let (flo, fhi) = (f(lo)?, f(hi)?);
    if (flo - target).abs() <= tol {
        return Ok(lo);
    }
    if (fhi - target).abs() <= tol {
        return Ok(hi);
    }
    if target < flo || target > fhi {
        return Err(Error::Calibration(format!(
            "target {target} outside the attainable range [{flo}, {fhi}]"
        )));
    }
    for _ in 0..MAX_BISECTION {
        let mid = 0.5 * (lo + hi);
        let v = f(mid)?;
        if (v - target).abs() <= tol {
            return Ok(mid);
        }
        if v < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Err(Error::Calibration(format!(
        "bisection did not reach {target} within {tol} (bracket [{lo}, {hi}])"
    )))
}

#[derive(Debug, Clone, Serialize)]
pub struct PrioritizedReport {
    pub i_u_x1x2: f64,
    pub i_u_x1: f64,
    pub i_u_x2: f64,
    pub alpha: f64,
}

/// Prioritized private data X = (X1, X2): FRL on the pair, with the erasure
/// applied to X2 only, α₂ = ε / H(X2).
pub fn prioritized_construct(
    t: &TripleDistribution,
    epsilon: f64,
) -> Result<(Mechanism, PrioritizedReport)> {
    let h2 = t.h_x2();
    if h2 <= 0.0 {
        return Err(Error::Precondition("H(X2) = 0: nothing to randomize over".into()));
    }
    let budget = LeakageBudget::new(epsilon, h2)?;
    let j = t.pair_joint();
    let frl = frl_construct(&j);
    let m = with_erasure(&j, &frl.mechanism, budget.alpha, |x| t.split(x).1, t.x2_alphabet());
    let report = prioritized_report(t, &m)?;
    Ok((
        m,
        PrioritizedReport {
            alpha: budget.alpha,
            ..report
        },
    ))
}

/// Measures I(U; X1, X2), I(U; X1), I(U; X2) for a mechanism on the pair joint.
pub fn prioritized_report(t: &TripleDistribution, m: &Mechanism) -> Result<PrioritizedReport> {
    let j = t.pair_joint();
    let ij = induce(&j, m)?;
    let pxu = ij.pxu();
    let nu = ij.nu();
    let pu = ij.pu();
    let mi = |part: &dyn Fn(usize) -> usize, n: usize| {
        let mut joint = vec![0.0; n * nu];
        for x in 0..j.nx() {
            for u in 0..nu {
                joint[part(x) * nu + u] += pxu[x * nu + u];
            }
        }
        let marg: Vec<f64> = (0..n).map(|a| joint[a * nu..(a + 1) * nu].iter().sum()).collect();
        let h = crate::probcore::measures::entropy_of_masses;
        (h(&marg) + h(&pu) - h(&joint)).max(0.0)
    };
    Ok(PrioritizedReport {
        i_u_x1x2: ij.i_xu(),
        i_u_x1: mi(&|x| t.split(x).0, t.n1()),
        i_u_x2: mi(&|x| t.split(x).1, t.n2()),
        alpha: f64::NAN,
    })
}

/// Functional representation the calibrated family is built on.
#[derive(Debug, Clone, Copy)]
pub enum BaseRepresentation {
    Frl,
    Sfrl(SfrlParams),
}

#[derive(Debug, Clone)]
pub struct Calibrated {
    pub mechanism: Mechanism,
    pub alpha: f64,
    pub achieved: f64,
}

/// Bisects the reveal probability α of the erasure family so that the chosen
/// per-letter criterion of the induced joint equals ε.
pub fn calibrate_perletter(
    j: &JointDistribution,
    base: BaseRepresentation,
    epsilon: f64,
    criterion: Criterion,
) -> Result<Calibrated> {
    if !(0.0..=2.0).contains(&epsilon) {
        return Err(Error::Budget(format!("per-letter target {epsilon} outside [0, 2]")));
    }
    let base = match base {
        BaseRepresentation::Frl => frl_construct(j).mechanism,
        BaseRepresentation::Sfrl(p) => sfrl_construct(j, p)?.0,
    };
    let build = |alpha: f64| with_erasure(j, &base, alpha, |x| x, j.x_alphabet());
    let value = |alpha: f64| -> Result<f64> {
        let ij = induce(j, &build(alpha))?;
        Ok(evaluate_criteria(&ij).max_for(criterion))
    };
    let mut trace: Vec<(f64, f64)> = Vec::new();
    let (mut lo, mut hi) = (0.0, 1.0);
    let (mut flo, mut fhi) = (value(lo)?, value(hi)?);
    trace.push((lo, flo));
    trace.push((hi, fhi));
    let done = |alpha: f64, v: f64| Calibrated {
        mechanism: build(alpha),
        alpha,
        achieved: v,
    };
    if (flo - epsilon).abs() <= PERLETTER_TARGET_TOL {
        return Ok(done(lo, flo));
    }
    if (fhi - epsilon).abs() <= PERLETTER_TARGET_TOL {
        return Ok(done(hi, fhi));
    }
    if flo > fhi + 1e-12 {
        return Err(Error::Calibration(format!("criterion not monotone in α: {trace:?}")));
    }
    if epsilon > fhi {
        return Err(Error::Calibration(format!(
            "target {epsilon} exceeds the family maximum {fhi} at α = 1"
        )));
    }
    for _ in 0..MAX_BISECTION {
        let mid = 0.5 * (lo + hi);
        let v = value(mid)?;
        trace.push((mid, v));
        if v < flo - 1e-12 || v > fhi + 1e-12 {
            return Err(Error::Calibration(format!(
                "criterion not monotone in α: {:?}",
                &trace[trace.len().saturating_sub(6)..]
            )));
        }
        if (v - epsilon).abs() <= PERLETTER_TARGET_TOL {
            return Ok(done(mid, v));
        }
        if v < epsilon {
            lo = mid;
            flo = v;
        } else {
            hi = mid;
            fhi = v;
        }
    }
    Err(Error::Calibration(format!(
        "target {epsilon} not attained: the criterion jumps from {flo} to {fhi} between α = {lo:e} and α = {hi:e}"
    )))
}
