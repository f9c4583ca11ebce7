//! Per-letter ℓ1 privacy criteria.
//!
//! With d the ℓ1 distance, the strong criterion bounds d(P_{X|U=u}, P_X) for
//! every disclosed letter u, and the weighted criterion bounds
//! d(P_{X,U}(·,u), P_X·P_U(u)) = P_U(u)·d(P_{X|U=u}, P_X).

use std::str::FromStr;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::probcore::measures::{check_pmf, l1};
use crate::probcore::{InducedJoint, Mechanism, MechanismKind, TripleDistribution};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Criterion {
    StrongL1,
    WeightedL1,
}

impl FromStr for Criterion {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "l1" | "strong-l1" | "STRONG_L1" => Ok(Self::StrongL1),
            "weighted-l1" | "WEIGHTED_L1" => Ok(Self::WeightedL1),
            _ => Err(Error::Usage(format!("unknown per-letter criterion `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct PerLetterReport {
    pub p_u: Vec<f64>,
    /// d(P_{X|U=u}, P_X); `None` where P_U(u) = 0.
    pub strong: Vec<Option<f64>>,
    /// d(P_{X,U}(·,u), P_X·P_U(u)).
    pub weighted: Vec<f64>,
    pub max_strong: f64,
    pub max_weighted: f64,
    /// Σ_u P_U(u)·d(P_{X|U=u}, P_X).
    pub average_strong: f64,
    /// Σ_u d(P_{X,U}(·,u), P_X·P_U(u)); equals `average_strong`.
    pub total_weighted: f64,
    pub notes: Vec<String>,
}

impl PerLetterReport {
    pub fn max_for(&self, c: Criterion) -> f64 {
        match c {
            Criterion::StrongL1 => self.max_strong,
            Criterion::WeightedL1 => self.max_weighted,
        }
    }

    pub fn weighted_identity_residual(&self) -> f64 {
        (self.average_strong - self.total_weighted).abs()
    }
}

/// Report from a joint P(x, u) laid out as `[x][u]`.
pub fn report_from_pxu(pxu: &[f64], nx: usize, nu: usize) -> PerLetterReport {
    let px: Vec<f64> = (0..nx).map(|x| pxu[x * nu..(x + 1) * nu].iter().sum()).collect();
    let p_u: Vec<f64> = (0..nu).map(|u| (0..nx).map(|x| pxu[x * nu + u]).sum()).collect();
    let mut strong = Vec::with_capacity(nu);
    let mut weighted = Vec::with_capacity(nu);
    let mut notes = Vec::new();
    for u in 0..nu {
        let pu = p_u[u];
        let w: f64 = (0..nx).map(|x| (pxu[x * nu + u] - px[x] * pu).abs()).sum();
        weighted.push(w);
        if pu > 0.0 {
            let s: f64 = (0..nx).map(|x| (pxu[x * nu + u] / pu - px[x]).abs()).sum();
            strong.push(Some(s));
        } else {
            strong.push(None);
            notes.push(format!("letter {u} has zero probability and is skipped"));
        }
    }
    let max_strong = strong.iter().flatten().copied().fold(0.0, f64::max);
    let max_weighted = weighted.iter().copied().fold(0.0, f64::max);
    let average_strong = strong
        .iter()
        .zip(&p_u)
        .map(|(s, p)| s.map_or(0.0, |s| s * p))
        .sum();
    let total_weighted = weighted.iter().sum();
    PerLetterReport {
        p_u,
        strong,
        weighted,
        max_strong,
        max_weighted,
        average_strong,
        total_weighted,
        notes,
    }
}

pub fn evaluate_criteria(ij: &InducedJoint) -> PerLetterReport {
    report_from_pxu(&ij.pxu(), ij.nx(), ij.nu())
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct PinskerBridge {
    pub mi_value: f64,
    /// TV(P_{X,U}, P_X·P_U) = ½ Σ_u d(P_{X,U}(·,u), P_X·P_U(u)).
    pub tv: f64,
    /// 2·TV² / ln 2 bits.
    pub mi_lower_from_weighted: f64,
}

/// Pinsker's inequality on the joint-versus-product pair:
/// I(X;U) = D(P_{X,U} ‖ P_X·P_U) ≥ 2·TV² / ln 2 bits.
pub fn pinsker_bridge(ij: &InducedJoint) -> Result<PinskerBridge> {
    let r = evaluate_criteria(ij);
    let tv = 0.5 * r.total_weighted;
    let bound = 2.0 * tv * tv / std::f64::consts::LN_2;
    let mi = ij.i_xu();
    if mi < bound - 1e-9 {
        return Err(Error::Consistency(format!(
            "Pinsker bridge violated: I(X;U) = {mi} < {bound}"
        )));
    }
    Ok(PinskerBridge {
        mi_value: mi,
        tv,
        mi_lower_from_weighted: bound,
    })
}

/// Reverse direction, I(X;U) ≤ log₂(1 + χ²) ≤ log₂(1 + (2·TV)² / q_min),
/// where `q_min` is the smallest positive mass of P_X·P_U.
pub fn reverse_pinsker_bound(ij: &InducedJoint, q_min: f64) -> Result<f64> {
    if !(q_min > 0.0) {
        return Err(Error::Usage("reverse Pinsker needs a positive minimum mass".into()));
    }
    let d = evaluate_criteria(ij).total_weighted;
    Ok((1.0 + d * d / q_min).log2())
}

#[derive(Debug, Clone, Serialize)]
pub struct LinkageReport {
    /// d(P_{X̃|U=u}, P_X̃) − d(P_{X|U=u}, P_X); `None` where P_U(u) = 0.
    pub margins: Vec<Option<f64>>,
    pub holds: bool,
}

/// Checks the linkage inequality for X − X̃ − Y − U, with the chain given as
/// a triple over (X, X̃, Y) and the mechanism acting on Y alone.
pub fn linkage_check(chain: &TripleDistribution, m: &Mechanism) -> Result<LinkageReport> {
    if m.kind() != MechanismKind::GivenY || m.ny() != chain.ny() {
        return Err(Error::Usage("linkage check needs a P_{U|Y} mechanism on the chain's Y".into()));
    }
    let (n1, n2, ny, nu) = (chain.n1(), chain.n2(), chain.ny(), m.nu());
    // I(X; Y | X̃) from the triple
    let mut cmi = 0.0;
    for b in 0..n2 {
        let pb: f64 = (0..n1).flat_map(|a| (0..ny).map(move |y| (a, y))).map(|(a, y)| chain.p(a, b, y)).sum();
        if pb <= 0.0 {
            continue;
        }
        for a in 0..n1 {
            let pab: f64 = (0..ny).map(|y| chain.p(a, b, y)).sum();
            for y in 0..ny {
                let p = chain.p(a, b, y);
                if p > 0.0 {
                    let pby: f64 = (0..n1).map(|a| chain.p(a, b, y)).sum();
                    cmi += p * (p * pb / (pab * pby)).log2();
                }
            }
        }
    }
    if cmi > 1e-9 {
        return Err(Error::Precondition(format!(
            "X − X̃ − Y is not Markov: I(X;Y|X̃) = {cmi}"
        )));
    }
    let mut pxu = vec![0.0; n1 * nu];
    let mut ptu = vec![0.0; n2 * nu];
    for a in 0..n1 {
        for b in 0..n2 {
            for y in 0..ny {
                let p = chain.p(a, b, y);
                if p == 0.0 {
                    continue;
                }
                for u in 0..nu {
                    let v = p * m.q(u, 0, y);
                    pxu[a * nu + u] += v;
                    ptu[b * nu + u] += v;
                }
            }
        }
    }
    let left = report_from_pxu(&pxu, n1, nu);
    let right = report_from_pxu(&ptu, n2, nu);
    let margins: Vec<Option<f64>> = left
        .strong
        .iter()
        .zip(&right.strong)
        .map(|(l, r)| Some(r.as_ref()? - l.as_ref()?))
        .collect();
    let holds = margins.iter().flatten().all(|&g| g >= -1e-12);
    Ok(LinkageReport { margins, holds })
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct PostprocessingReport {
    pub total_weighted_before: f64,
    pub total_weighted_after: f64,
    pub max_strong_before: f64,
    pub max_strong_after: f64,
    pub holds: bool,
}

/// Passes U through a channel `post[u][v]` and compares the criteria on V
/// with those on U.
pub fn postprocessing_check(ij: &InducedJoint, post: &[Vec<f64>]) -> Result<PostprocessingReport> {
    let nu = ij.nu();
    if post.len() != nu {
        return Err(Error::Usage(format!(
            "post-processing kernel has {} rows, expected {nu}",
            post.len()
        )));
    }
    let nv = post.first().map_or(0, Vec::len);
    for row in post {
        if row.len() != nv {
            return Err(Error::Usage("post-processing kernel rows differ in length".into()));
        }
        check_pmf(row)?;
    }
    let nx = ij.nx();
    let pxu = ij.pxu();
    let mut pxv = vec![0.0; nx * nv];
    for x in 0..nx {
        for u in 0..nu {
            for v in 0..nv {
                pxv[x * nv + v] += pxu[x * nu + u] * post[u][v];
            }
        }
    }
    let before = report_from_pxu(&pxu, nx, nu);
    let after = report_from_pxu(&pxv, nx, nv);
    Ok(PostprocessingReport {
        total_weighted_before: before.total_weighted,
        total_weighted_after: after.total_weighted,
        max_strong_before: before.max_strong,
        max_strong_after: after.max_strong,
        holds: after.total_weighted <= before.total_weighted + 1e-12
            && after.max_strong <= before.max_strong + 1e-12,
    })
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct ErrorProbRelation {
    pub tv: f64,
    /// Bayes error of testing p against q under equal priors.
    pub bayes_error: f64,
    /// |TV − (1 − 2·P_e)|.
    pub residual: f64,
}

pub fn error_prob_relation(p: &[f64], q: &[f64]) -> Result<ErrorProbRelation> {
    if p.len() != q.len() {
        return Err(Error::Usage("distributions differ in length".into()));
    }
    check_pmf(p)?;
    check_pmf(q)?;
    let tv = 0.5 * l1(p, q);
    let bayes_error = 0.5 * p.iter().zip(q).map(|(a, b)| a.min(*b)).sum::<f64>();
    Ok(ErrorProbRelation {
        tv,
        bayes_error,
        residual: (tv - (1.0 - 2.0 * bayes_error)).abs(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::probcore::{induce, Alphabet, JointDistribution};
    use crate::testkit;

    #[test]
    fn independent_letters_have_zero_distance() {
        let j = testkit::random_joint(1, 3, 3);
        let ij = induce(&j, &Mechanism::constant(3)).unwrap();
        let r = evaluate_criteria(&ij);
        assert_eq!(r.max_strong, 0.0);
        assert_eq!(r.max_weighted, 0.0);
    }

    #[test]
    fn full_disclosure_point_mass_formula() {
        // U = X through X = Y
        let j = JointDistribution::from_rows(vec![vec![0.2, 0.0, 0.0], vec![0.0, 0.3, 0.0], vec![0.0, 0.0, 0.5]])
            .unwrap();
        let ij = induce(&j, &Mechanism::identity(j.y_alphabet())).unwrap();
        let r = evaluate_criteria(&ij);
        for (u, p) in [0.2, 0.3, 0.5].iter().enumerate() {
            assert!((r.strong[u].unwrap() - 2.0 * (1.0 - p)).abs() < 1e-12);
            assert!((r.weighted[u] - 2.0 * p * (1.0 - p)).abs() < 1e-12);
        }
        assert!((r.max_strong - 1.6).abs() < 1e-12);
        assert!(r.weighted_identity_residual() < 1e-12);
    }

    #[test]
    fn pinsker_uniform_bit() {
        let j = JointDistribution::from_rows(vec![vec![0.5, 0.0], vec![0.0, 0.5]]).unwrap();
        let ij = induce(&j, &Mechanism::identity(j.y_alphabet())).unwrap();
        let b = pinsker_bridge(&ij).unwrap();
        assert!((b.mi_value - 1.0).abs() < 1e-12);
        assert!((b.tv - 0.5).abs() < 1e-12);
        assert!((b.mi_lower_from_weighted - 0.7213475204444817).abs() < 1e-12);
        let up = reverse_pinsker_bound(&ij, 0.25).unwrap();
        assert!(up >= b.mi_value);
    }

    #[test]
    fn error_probability_examples() {
        let r = error_prob_relation(&[0.5, 0.5], &[0.3, 0.7]).unwrap();
        assert!((r.tv - 0.2).abs() < 1e-12);
        assert!((r.bayes_error - 0.4).abs() < 1e-12);
        assert!(r.residual < 1e-12);
        let r = error_prob_relation(&[1.0, 0.0], &[0.0, 1.0]).unwrap();
        assert_eq!((r.tv, r.bayes_error), (1.0, 0.0));
        let r = error_prob_relation(&[0.25, 0.75], &[0.25, 0.75]).unwrap();
        assert_eq!((r.tv, r.bayes_error), (0.0, 0.5));
    }

    #[test]
    fn postprocessing_identity_and_merge() {
        let j = testkit::random_joint(2, 3, 3);
        let m = testkit::random_kernel_given_y(3, 3, 4);
        let ij = induce(&j, &m).unwrap();
        let id: Vec<Vec<f64>> = (0..4).map(|u| (0..4).map(|v| f64::from(u == v)).collect()).collect();
        let r = postprocessing_check(&ij, &id).unwrap();
        assert!((r.total_weighted_before - r.total_weighted_after).abs() < 1e-15);
        let merge = vec![vec![1.0]; 4];
        let r = postprocessing_check(&ij, &merge).unwrap();
        assert!(r.total_weighted_after < 1e-15 && r.holds);
        assert!(postprocessing_check(&ij, &vec![vec![0.5, 0.4]; 4]).is_err());
    }

    #[test]
    fn linkage_with_identical_and_constant_private_data() {
        let a = Alphabet::range(2);
        // X = X̃
        let mut p = vec![0.0; 2 * 2 * 3];
        let joint = testkit::random_joint(4, 2, 3);
        for t in 0..2 {
            for y in 0..3 {
                p[(t * 2 + t) * 3 + y] = joint.p(t, y);
            }
        }
        let chain = TripleDistribution::new(a.clone(), a.clone(), Alphabet::range(3), p).unwrap();
        let m = testkit::random_kernel_given_y(8, 3, 3);
        let r = linkage_check(&chain, &m).unwrap();
        assert!(r.holds);
        assert!(r.margins.iter().flatten().all(|g| g.abs() < 1e-12));
        // X depends on Y beyond X̃: not Markov
        let mut p = vec![0.0; 12];
        for t in 0..2 {
            for y in 0..3 {
                let x = usize::from(y == 2);
                p[(x * 2 + t) * 3 + y] = joint.p(t, y);
            }
        }
        let chain = TripleDistribution::new(a.clone(), a, Alphabet::range(3), p).unwrap();
        assert!(matches!(linkage_check(&chain, &m), Err(Error::Precondition(_))));
    }

    #[test]
    fn criterion_names() {
        assert_eq!("l1".parse::<Criterion>().unwrap(), Criterion::StrongL1);
        assert_eq!("weighted-l1".parse::<Criterion>().unwrap(), Criterion::WeightedL1);
        assert!("chi2".parse::<Criterion>().is_err());
    }
}
