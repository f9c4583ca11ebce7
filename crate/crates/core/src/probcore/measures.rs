//! Entropy, mutual information and ℓ1 distances, all in bits.

use std::str::FromStr;

use crate::error::{Error, Result};

/// Tolerance on the total mass of a user-supplied pmf.
pub const PMF_TOL: f64 = 1e-9;

/// Named random variables of an (X, Y, U) model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Var {
    X,
    Y,
    U,
}

impl FromStr for Var {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "X" | "x" => Ok(Var::X),
            "Y" | "y" => Ok(Var::Y),
            "U" | "u" => Ok(Var::U),
            other => Err(Error::Usage(format!("unknown variable {other:?}"))),
        }
    }
}

/// Anything that can report the joint entropy of a subset of its variables.
pub trait JointEntropy {
    fn joint_entropy(&self, vars: &[Var]) -> Result<f64>;
}

pub fn check_pmf(p: &[f64]) -> Result<()> {
    if p.is_empty() {
        return Err(Error::Validation("empty pmf".into()));
    }
    let mut sum = 0.0;
    for (i, &v) in p.iter().enumerate() {
        if !v.is_finite() || v < 0.0 {
            return Err(Error::Validation(format!("entry {i} is {v}, expected a probability")));
        }
        sum += v;
    }
    if (sum - 1.0).abs() > PMF_TOL {
        return Err(Error::Validation(format!("pmf sums to {sum}, expected 1")));
    }
    Ok(())
}

/// Shannon entropy in bits of a validated pmf.
pub fn entropy(p: &[f64]) -> Result<f64> {
    check_pmf(p)?;
    Ok(entropy_of_masses(p))
}

/// `-Σ p log₂ p` over positive entries, no validation. Used on sub-normalized
/// marginals that are already known to be consistent.
pub fn entropy_of_masses(p: &[f64]) -> f64 {
    let h: f64 = p
        .iter()
        .filter(|&&v| v > 0.0)
        .map(|&v| -v * v.log2())
        .sum();
    h.max(0.0)
}

/// Binary entropy function.
pub fn binary_entropy(p: f64) -> f64 {
    entropy_of_masses(&[p, 1.0 - p])
}

/// Kullback-Leibler divergence D(p‖q) in bits. Infinite when p is not
/// absolutely continuous with respect to q.
pub fn kl_divergence(p: &[f64], q: &[f64]) -> f64 {
    let mut d = 0.0;
    for (&a, &b) in p.iter().zip(q) {
        if a > 0.0 {
            if b <= 0.0 {
                return f64::INFINITY;
            }
            d += a * (a / b).log2();
        }
    }
    d.max(0.0)
}

pub fn conditional_entropy(j: &impl JointEntropy, target: &[Var], given: &[Var]) -> Result<f64> {
    let all = union(target, given);
    let h = j.joint_entropy(&all)? - j.joint_entropy(given)?;
    Ok(h.max(0.0))
}

pub fn mutual_information(j: &impl JointEntropy, a: &[Var], b: &[Var]) -> Result<f64> {
    conditional_mutual_information(j, a, b, &[])
}

/// I(A;B|C) = H(A,C) + H(B,C) − H(A,B,C) − H(C), clamped at 0.
pub fn conditional_mutual_information(
    j: &impl JointEntropy,
    a: &[Var],
    b: &[Var],
    given: &[Var],
) -> Result<f64> {
    let ac = union(a, given);
    let bc = union(b, given);
    let abc = union(&ac, b);
    let i = j.joint_entropy(&ac)? + j.joint_entropy(&bc)?
        - j.joint_entropy(&abc)?
        - j.joint_entropy(given)?;
    if i < -1e-9 {
        return Err(Error::Consistency(format!("negative mutual information {i}")));
    }
    Ok(i.max(0.0))
}

fn union(a: &[Var], b: &[Var]) -> Vec<Var> {
    let mut v: Vec<Var> = a.iter().chain(b).copied().collect();
    v.sort();
    v.dedup();
    v
}

/// d(P, Q) = Σ |P − Q|, in [0, 2].
pub fn l1_distance(p: &[f64], q: &[f64]) -> Result<f64> {
    if p.len() != q.len() {
        return Err(Error::Usage(format!(
            "pmfs over different alphabets ({} vs {} symbols)",
            p.len(),
            q.len()
        )));
    }
    Ok(l1(p, q))
}

pub(crate) fn l1(p: &[f64], q: &[f64]) -> f64 {
    p.iter().zip(q).map(|(a, b)| (a - b).abs()).sum()
}

/// Total variation, half the ℓ1 distance.
pub fn total_variation(p: &[f64], q: &[f64]) -> Result<f64> {
    Ok(0.5 * l1_distance(p, q)?)
}
