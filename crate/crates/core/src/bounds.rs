//! Closed-form bounds on the privacy-utility trade-offs, positivity tests for
//! the perfect-privacy problems and Gács–Körner common information.
//!
//! `g` is the trade-off where the mechanism sees only Y, `h` the one where it
//! sees (X, Y); the utility is I(Y;U) and the leakage I(X;U) ≤ ε.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{leakage_rank, REL_RANK_TOL};
use crate::probcore::measures::entropy_of_masses;
use crate::probcore::JointDistribution;

/// Information quantities at or below this count as zero.
pub const ZERO_TOL: f64 = 1e-9;
/// Agreement tolerance for oracle-valued equalities.
pub const EQUIVALENCE_TOL: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Problem {
    GEps,
    HEps,
    G0,
    H0,
}

#[derive(Debug, Clone, Serialize)]
pub struct BoundSet {
    pub problem: Problem,
    pub epsilon: f64,
    pub lower_bounds: BTreeMap<String, f64>,
    pub upper_bounds: BTreeMap<String, f64>,
    pub tightness_flags: BTreeMap<String, bool>,
    pub notes: Vec<String>,
}

impl BoundSet {
    fn new(problem: Problem, epsilon: f64) -> Self {
        Self {
            problem,
            epsilon,
            lower_bounds: BTreeMap::new(),
            upper_bounds: BTreeMap::new(),
            tightness_flags: BTreeMap::new(),
            notes: Vec::new(),
        }
    }

    fn lower(&mut self, name: &str, v: f64) {
        self.lower_bounds.insert(name.into(), v.max(0.0));
    }

    fn upper(&mut self, name: &str, v: f64) {
        self.upper_bounds.insert(name.into(), v);
    }

    fn flag(&mut self, name: &str, v: bool) {
        self.tightness_flags.insert(name.into(), v);
    }

    pub fn best_lower(&self) -> f64 {
        self.lower_bounds.values().copied().fold(0.0, f64::max)
    }

    pub fn best_upper(&self) -> f64 {
        self.upper_bounds.values().copied().fold(f64::INFINITY, f64::min)
    }

    /// max(lower) ≤ min(upper) + 1e-9.
    pub fn is_consistent(&self) -> bool {
        self.best_lower() <= self.best_upper() + ZERO_TOL
    }

    pub fn contains(&self, value: f64, tol: f64) -> bool {
        value >= self.best_lower() - tol && value <= self.best_upper() + tol
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("bound sets serialize")
    }
}

/// Reveal probability of the erasure family at budget ε: min(ε/H(X), 1), or
/// 0 when X is constant.
pub fn reveal_probability(j: &JointDistribution, epsilon: f64) -> f64 {
    let hx = j.h_x();
    if hx > 0.0 {
        (epsilon / hx).clamp(0.0, 1.0)
    } else {
        0.0
    }
}

/// ε + H(Y|X) − H(X|Y), unfloored.
pub fn efrl_lower_bound(j: &JointDistribution, epsilon: f64) -> f64 {
    epsilon + j.h_y_given_x() - j.h_x_given_y()
}

/// ε + H(Y|X) − α·H(X|Y) − (1 − α)·(log₂(I(X;Y) + 1) + 4), unfloored.
pub fn esfrl_lower_bound(j: &JointDistribution, epsilon: f64) -> f64 {
    let a = reveal_probability(j, epsilon);
    epsilon + j.h_y_given_x()
        - a * j.h_x_given_y()
        - (1.0 - a) * ((j.mutual_information() + 1.0).log2() + 4.0)
}

pub fn h_bounds(j: &JointDistribution, epsilon: f64) -> BoundSet {
    let problem = if epsilon == 0.0 { Problem::H0 } else { Problem::HEps };
    let mut b = BoundSet::new(problem, epsilon);
    let (hy, hyx, hxy, hx) = (j.h_y(), j.h_y_given_x(), j.h_x_given_y(), j.h_x());
    let eps = epsilon.min(hx);
    if epsilon > hx {
        b.notes.push(format!(
            "ε exceeds H(X) = {hx}; the constructive lower bounds are evaluated at ε = H(X)"
        ));
    }
    b.upper("leakage_plus_hyx", (epsilon + hyx).min(hy));
    b.upper("entropy_y", hy);
    b.lower("efrl", efrl_lower_bound(j, eps));
    b.lower("esfrl", esfrl_lower_bound(j, eps));
    let gk = gk_common_information(j).bits;
    let hyx_zero = hyx <= ZERO_TOL;
    let gk_equals_mi = (gk - j.mutual_information()).abs() <= ZERO_TOL;
    if hyx_zero {
        b.lower("y_function", epsilon.min(hy));
    }
    if gk_equals_mi {
        b.lower("common_information", (epsilon + hyx).min(hy));
    }
    b.flag("hxy_zero", hxy <= ZERO_TOL);
    b.flag("hyx_zero", hyx_zero);
    b.flag("gk_equals_mi", gk_equals_mi);
    b.flag("optimal", (b.best_upper() - b.best_lower()).abs() <= ZERO_TOL);
    b.notes
        .push("upper bounds capped at H(Y); lower bounds floored at 0".into());
    b
}

pub fn g_bounds(j: &JointDistribution, epsilon: f64, g0_value: Option<f64>) -> BoundSet {
    let problem = if epsilon == 0.0 { Problem::G0 } else { Problem::GEps };
    let mut b = BoundSet::new(problem, epsilon);
    let (hy, hyx) = (j.h_y(), j.h_y_given_x());
    let mi = j.mutual_information();
    if mi <= ZERO_TOL {
        b.lower("independent", hy);
        b.upper("entropy_y", hy);
        b.flag("independent", true);
        b.flag("optimal", true);
        b.notes.push("X ⫫ Y: U = Y is private for free".into());
        return b;
    }
    b.flag("independent", false);
    b.upper("leakage_plus_hyx", (epsilon + hyx).min(hy));
    b.upper("entropy_y", hy);
    if epsilon >= mi {
        b.lower("u_equals_y", hy);
        b.flag("u_equals_y_feasible", true);
    } else {
        b.flag("u_equals_y_feasible", false);
        let line = epsilon * hy / mi;
        b.lower("line", line);
        if let Some(g0) = g0_value {
            b.lower("improved", line + g0 * (1.0 - epsilon / mi));
        }
    }
    let gk_equals_mi = (gk_common_information(j).bits - mi).abs() <= ZERO_TOL;
    if gk_equals_mi {
        b.lower("common_information", (epsilon + hyx).min(hy));
    }
    b.flag("gk_equals_mi", gk_equals_mi);
    b.flag("optimal", (b.best_upper() - b.best_lower()).abs() <= ZERO_TOL);
    b
}

/// Sandwich for g₀ from the rank and nullity of P_{X|Y}.
pub fn g0_simple_bounds(j: &JointDistribution) -> BoundSet {
    let mut b = BoundSet::new(Problem::G0, 0.0);
    let (rank, null) = leakage_rank(j, REL_RANK_TOL);
    b.lower("rank", j.h_y() - (rank.max(1) as f64).log2());
    b.upper("nullity", j.h_y_given_x().min(((null + 1) as f64).log2()));
    b.flag("invertible", null == 0);
    b.notes.push(format!("rank {rank}, nullity {null}"));
    b
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct Positivity {
    pub g0_positive: bool,
    pub h0_positive: bool,
}

/// g₀ > 0 iff P_{X|Y} (over positive-probability Y) has a nontrivial null
/// space; h₀ > 0 iff Y is not a function of X.
pub fn positivity(j: &JointDistribution) -> Positivity {
    let (_, null) = leakage_rank(j, REL_RANK_TOL);
    Positivity {
        g0_positive: null > 0,
        h0_positive: j.h_y_given_x() > ZERO_TOL,
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CommonInformation {
    pub bits: f64,
    pub components: usize,
    /// Component of each x; `None` for zero-probability symbols.
    pub x_component: Vec<Option<usize>>,
    pub y_component: Vec<Option<usize>>,
}

/// Entropy of the connected-component index of the bipartite support graph.
pub fn gk_common_information(j: &JointDistribution) -> CommonInformation {
    let (nx, ny) = (j.nx(), j.ny());
    let mut parent: Vec<usize> = (0..nx + ny).collect();
    fn find(p: &mut [usize], mut i: usize) -> usize {
        while p[i] != i {
            p[i] = p[p[i]];
            i = p[i];
        }
        i
    }
    for x in 0..nx {
        for y in 0..ny {
            if j.p(x, y) > 0.0 {
                let (a, b) = (find(&mut parent, x), find(&mut parent, nx + y));
                if a != b {
                    parent[a.max(b)] = a.min(b);
                }
            }
        }
    }
    let (px, py) = (j.px(), j.py());
    let mut ids: BTreeMap<usize, usize> = BTreeMap::new();
    let mut mass: Vec<f64> = Vec::new();
    let mut label = |node: usize, p: f64, parent: &mut Vec<usize>| {
        if p <= 0.0 {
            return None;
        }
        let root = find(parent, node);
        let next = ids.len();
        let id = *ids.entry(root).or_insert(next);
        if id == mass.len() {
            mass.push(0.0);
        }
        Some(id)
    };
    let x_component: Vec<Option<usize>> = (0..nx).map(|x| label(x, px[x], &mut parent)).collect();
    let y_component: Vec<Option<usize>> = (0..ny).map(|y| label(nx + y, py[y], &mut parent)).collect();
    for (x, c) in x_component.iter().enumerate() {
        if let Some(c) = c {
            mass[*c] += px[x];
        }
    }
    CommonInformation {
        bits: entropy_of_masses(&mass),
        components: mass.len(),
        x_component,
        y_component,
    }
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct Equivalence {
    /// g_ε = H(Y|X) + ε.
    pub i: bool,
    /// g_ε = h_ε.
    pub ii: bool,
    /// h_ε = H(Y|X) + ε.
    pub iii: bool,
}

/// Checks the three equivalent tightness statements against supplied values;
/// H(Y|X) + ε is capped at H(Y). Disagreeing flags signal an unreliable value.
pub fn equivalence_check(j: &JointDistribution, epsilon: f64, g_eps: f64, h_eps: f64) -> Result<Equivalence> {
    let target = (j.h_y_given_x() + epsilon).min(j.h_y());
    let e = Equivalence {
        i: (g_eps - target).abs() <= EQUIVALENCE_TOL,
        ii: (g_eps - h_eps).abs() <= EQUIVALENCE_TOL,
        iii: (h_eps - target).abs() <= EQUIVALENCE_TOL,
    };
    if e.i == e.ii && e.ii == e.iii {
        Ok(e)
    } else {
        Err(Error::Consistency(format!(
            "equivalence violated at ε = {epsilon}: g = {g_eps}, h = {h_eps}, H(Y|X)+ε = {target}, \
             flags {e:?}; the supplied values are likely not converged"
        )))
    }
}
