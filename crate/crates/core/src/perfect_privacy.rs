//! Exact perfect-privacy utility g₀.
//!
//! A mechanism P_{U|Y} is perfectly private iff every posterior p = P_{Y|U=u}
//! satisfies A·p = P_X with A = P_{X|Y}. The utility H(Y) − Σ_u w_u H(p_u) is
//! maximized at decompositions of P_Y into vertices of that polytope, so once
//! the vertices are listed the problem is a linear program in the weights.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{leakage_matrix, rank, solve_on_support, REL_RANK_TOL};
use crate::lp::{self, LinearProgram};
use crate::perletter::evaluate_criteria;
use crate::probcore::io::mechanism_to_value;
use crate::probcore::measures::entropy_of_masses;
use crate::probcore::{induce, Alphabet, JointDistribution, Mechanism};

/// Largest |Y| accepted by the subset enumeration.
pub const MAX_Y: usize = 12;
const DEDUP_TOL: f64 = 1e-8;
const WEIGHT_PRUNE: f64 = 1e-9;

#[derive(Debug, Clone, Serialize)]
pub struct PrivacyPolytope {
    /// `a[x][y]` = P(x | y), over all Y symbols.
    pub a: Vec<Vec<f64>>,
    pub b: Vec<f64>,
    /// Vertices as full-length pmfs over Y, in canonical order.
    pub vertices: Vec<Vec<f64>>,
}

impl PrivacyPolytope {
    /// max over vertices of ‖A·p − b‖∞.
    pub fn max_residual(&self) -> f64 {
        self.vertices
            .iter()
            .map(|p| {
                self.a
                    .iter()
                    .zip(&self.b)
                    .map(|(row, b)| (row.iter().zip(p).map(|(a, p)| a * p).sum::<f64>() - b).abs())
                    .fold(0.0, f64::max)
            })
            .fold(0.0, f64::max)
    }
}

/// All vertices of {p ≥ 0 : A·p = P_X}, with p supported on positive-probability Y.
pub fn enumerate_vertices(j: &JointDistribution) -> Result<PrivacyPolytope> {
    if j.ny() > MAX_Y {
        return Err(Error::Resource(format!(
            "vertex enumeration is limited to |Y| ≤ {MAX_Y}, got {}",
            j.ny()
        )));
    }
    let (a, ys) = leakage_matrix(j);
    let b = j.px();
    let r = rank(&a, REL_RANK_TOL);
    let k = ys.len();
    let subsets: Vec<Vec<usize>> = (1u32..(1 << k))
        .filter(|s| s.count_ones() as usize <= r)
        .map(|s| (0..k).filter(|i| s & (1 << i) != 0).collect())
        .collect();
    let mut found: Vec<Vec<f64>> = subsets
        .par_iter()
        .filter_map(|sup| {
            if rank(&a.select_columns(sup), REL_RANK_TOL) != sup.len() {
                return None;
            }
            let (p, resid) = solve_on_support(&a, &b, sup)?;
            if resid > 1e-9 || p.iter().any(|&v| v < -1e-12) {
                return None;
            }
            let p: Vec<f64> = p.iter().map(|v| v.max(0.0)).collect();
            let s: f64 = p.iter().sum();
            if (s - 1.0).abs() > 1e-9 {
                return None;
            }
            let mut full = vec![0.0; j.ny()];
            for (i, &y) in ys.iter().enumerate() {
                full[y] = p[i] / s;
            }
            Some(full)
        })
        .collect();
    found.sort_by(|p, q| {
        p.iter()
            .zip(q)
            .map(|(a, b)| b.total_cmp(a))
            .find(|o| o.is_ne())
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    let mut vertices: Vec<Vec<f64>> = Vec::new();
    for p in found {
        let dup = vertices
            .iter()
            .any(|v| v.iter().zip(&p).map(|(a, b)| (a - b).abs()).sum::<f64>() < DEDUP_TOL);
        if !dup {
            vertices.push(p);
        }
    }
    if vertices.is_empty() {
        return Err(Error::Consistency(
            "no vertex found although P_Y is feasible; the leakage matrix is numerically degenerate".into(),
        ));
    }
    let a_full = (0..j.nx())
        .map(|x| (0..j.ny()).map(|y| j.x_given_y(y)[x]).collect())
        .collect();
    Ok(PrivacyPolytope { a: a_full, b, vertices })
}

#[derive(Debug, Clone)]
pub struct G0Solution {
    pub value: f64,
    pub mechanism: Mechanism,
    /// Vertices used by the mechanism and their weights P_U.
    pub vertices: Vec<Vec<f64>>,
    pub weights: Vec<f64>,
    /// Size of the full vertex list.
    pub vertex_count: usize,
}

impl G0Solution {
    pub fn to_json(&self, j: &JointDistribution) -> String {
        let v = serde_json::json!({
            "g0_bits": self.value,
            "vertices": self.vertices,
            "weights": self.weights,
            "mechanism": mechanism_to_value(&self.mechanism, j),
        });
        serde_json::to_string_pretty(&v).expect("json values serialize")
    }
}

/// Maximum I(Y;U) over P_{U|Y} with U ⫫ X.
pub fn g0_solve(j: &JointDistribution) -> Result<G0Solution> {
    let poly = enumerate_vertices(j)?;
    let py = j.py();
    let ys = j.y_support();
    let lp = LinearProgram {
        a: ys
            .iter()
            .map(|&y| poly.vertices.iter().map(|p| p[y]).collect())
            .collect(),
        b: ys.iter().map(|&y| py[y]).collect(),
        c: poly.vertices.iter().map(|p| entropy_of_masses(p)).collect(),
    };
    let sol = lp::solve(&lp)?;
    let kept: Vec<usize> = (0..poly.vertices.len())
        .filter(|&v| sol.x[v] > WEIGHT_PRUNE)
        .collect();
    let vertices: Vec<Vec<f64>> = kept.iter().map(|&v| poly.vertices[v].clone()).collect();
    let wsum: f64 = kept.iter().map(|&v| sol.x[v]).sum();
    let weights: Vec<f64> = kept.iter().map(|&v| sol.x[v] / wsum).collect();
    let nu = kept.len();
    let rows = (0..j.ny())
        .map(|y| {
            if py[y] > 0.0 {
                let row: Vec<f64> = (0..nu).map(|u| weights[u] * vertices[u][y]).collect();
                let s: f64 = row.iter().sum();
                row.iter().map(|v| v / s).collect()
            } else {
                vec![1.0 / nu as f64; nu]
            }
        })
        .collect();
    let labels = (0..nu).map(|u| format!("v{u}"));
    let mechanism = Mechanism::given_y(Alphabet::new(labels).expect("distinct"), rows)?;
    let value = (j.h_y() - sol.objective).max(0.0);

    let ij = induce(j, &mechanism)?;
    let leak = evaluate_criteria(&ij).max_strong;
    let util = ij.i_yu();
    if leak > 1e-7 || (util - value).abs() > 1e-7 {
        return Err(Error::Consistency(format!(
            "perfect-privacy mechanism check failed: max per-letter distance {leak:e}, \
             I(Y;U) = {util} against LP value {value}"
        )));
    }
    Ok(G0Solution {
        value,
        mechanism,
        vertices,
        weights,
        vertex_count: poly.vertices.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bounds::g0_simple_bounds;
    use crate::linalg::leakage_rank;
    use crate::rng::{dirichlet, rng_for};
    use crate::testkit;

    #[test]
    fn independent_pair_vertices_are_point_masses() {
        let j = testkit::product(&[0.4, 0.6], &[0.2, 0.3, 0.5]);
        let poly = enumerate_vertices(&j).unwrap();
        assert_eq!(poly.vertices.len(), 3);
        assert!(poly.vertices.iter().all(|v| v.iter().filter(|&&p| p == 1.0).count() == 1));
        let s = g0_solve(&j).unwrap();
        assert!((s.value - j.h_y()).abs() < 1e-9);
        assert_eq!(s.mechanism.nu(), 3);
    }

    #[test]
    fn invertible_kernel_gives_zero() {
        let j = testkit::bsc(0.2);
        let poly = enumerate_vertices(&j).unwrap();
        assert_eq!(poly.vertices.len(), 1);
        assert!(poly.vertices[0].iter().zip(j.py()).all(|(a, b)| (a - b).abs() < 1e-12));
        let s = g0_solve(&j).unwrap();
        assert!(s.value < 1e-12);
        assert_eq!(s.mechanism.nu(), 1);
    }

    #[test]
    fn sampled_feasible_points_are_in_the_hull() {
        let j = testkit::random_joint(21, 2, 4);
        let poly = enumerate_vertices(&j).unwrap();
        assert!(poly.max_residual() < 1e-9);
        let mut r = rng_for(3, "hull");
        let py = j.py();
        let (a, _) = leakage_matrix(&j);
        for _ in 0..20 {
            // a random point of the affine set, pulled toward P_Y until nonnegative
            let d = dirichlet(&mut r, 4);
            let proj = crate::linalg::project_affine_on_support(&a, &j.px(), &d, &[0, 1, 2, 3]).unwrap();
            let mut t = 1.0f64;
            for y in 0..4 {
                if proj[y] < 0.0 {
                    t = t.min(py[y] / (py[y] - proj[y]));
                }
            }
            let p: Vec<f64> = (0..4).map(|y| py[y] + t * (proj[y] - py[y])).collect();
            let lp = LinearProgram {
                a: (0..4)
                    .map(|y| poly.vertices.iter().map(|v| v[y]).collect())
                    .collect(),
                b: p.clone(),
                c: vec![0.0; poly.vertices.len()],
            };
            let sol = lp::solve(&lp).unwrap();
            let back: Vec<f64> = (0..4)
                .map(|y| poly.vertices.iter().zip(&sol.x).map(|(v, w)| v[y] * w).sum())
                .collect();
            assert!(back.iter().zip(&p).all(|(a, b)| (a - b).abs() < 1e-6));
        }
    }

    #[test]
    fn value_inside_sandwich_and_support_small() {
        for seed in 0..10 {
            let j = testkit::random_joint(seed, 2, 4);
            let s = g0_solve(&j).unwrap();
            let b = g0_simple_bounds(&j);
            assert!(b.contains(s.value, 1e-9), "{seed}: {} vs {b:?}", s.value);
            let (_, null) = leakage_rank(&j, REL_RANK_TOL);
            assert!(s.mechanism.nu() <= null + 1);
        }
    }

    #[test]
    fn relabel_invariance() {
        let j = testkit::random_joint(5, 2, 4);
        let v = g0_solve(&j).unwrap().value;
        let k = j.permute_y(&[3, 1, 0, 2]).permute_x(&[1, 0]);
        assert!((g0_solve(&k).unwrap().value - v).abs() < 1e-9);
    }

    #[test]
    fn guard() {
        let j = testkit::uniform_product(2, 13);
        assert!(matches!(enumerate_vertices(&j), Err(Error::Resource(_))));
    }

    #[test]
    fn solution_json_shape() {
        let j = testkit::random_joint(2, 2, 3);
        let s = g0_solve(&j).unwrap();
        let v: serde_json::Value = serde_json::from_str(&s.to_json(&j)).unwrap();
        assert!(v["g0_bits"].is_number());
        assert_eq!(v["weights"].as_array().unwrap().len(), s.mechanism.nu());
    }
}
