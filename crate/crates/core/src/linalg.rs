//! Numeric rank, null spaces and restricted least squares on small dense
//! matrices.

use nalgebra::{DMatrix, DVector};

use crate::probcore::JointDistribution;

/// Singular values below `REL_RANK_TOL · σ_max` count as zero.
pub const REL_RANK_TOL: f64 = 1e-9;

pub fn rank(m: &DMatrix<f64>, rel_tol: f64) -> usize {
    if m.nrows() == 0 || m.ncols() == 0 {
        return 0;
    }
    let sv = m.clone().svd(false, false).singular_values;
    let smax = sv.iter().copied().fold(0.0, f64::max);
    if smax == 0.0 {
        return 0;
    }
    sv.iter().filter(|&&s| s > rel_tol * smax).count()
}

/// The leakage matrix P_{X|Y} (|X| rows) restricted to Y symbols of positive
/// probability, together with those Y indices.
pub fn leakage_matrix(j: &JointDistribution) -> (DMatrix<f64>, Vec<usize>) {
    let ys = j.y_support();
    let cols: Vec<Vec<f64>> = ys.iter().map(|&y| j.x_given_y(y)).collect();
    let m = DMatrix::from_fn(j.nx(), ys.len(), |x, k| cols[k][x]);
    (m, ys)
}

/// Rank and nullity of P_{X|Y} over positive-probability Y symbols.
pub fn leakage_rank(j: &JointDistribution, rel_tol: f64) -> (usize, usize) {
    let (a, ys) = leakage_matrix(j);
    let r = rank(&a, rel_tol);
    (r, ys.len() - r)
}

/// Solves `A[:, support] p = b` in the least-squares sense; returns the
/// solution scattered back to full length and the residual norm.
pub fn solve_on_support(a: &DMatrix<f64>, b: &[f64], support: &[usize]) -> Option<(Vec<f64>, f64)> {
    let sub = a.select_columns(support);
    let bv = DVector::from_column_slice(b);
    let svd = sub.clone().svd(true, true);
    let sol = svd.solve(&bv, 1e-12).ok()?;
    let resid = (&sub * &sol - &bv).norm();
    let mut full = vec![0.0; a.ncols()];
    for (k, &c) in support.iter().enumerate() {
        full[c] = sol[k];
    }
    Some((full, resid))
}

/// Euclidean projection of `p` onto `{q : A q = b, q_i = 0 off support}`.
pub fn project_affine_on_support(
    a: &DMatrix<f64>,
    b: &[f64],
    p: &[f64],
    support: &[usize],
) -> Option<Vec<f64>> {
    let sub = a.select_columns(support);
    let ps = DVector::from_iterator(support.len(), support.iter().map(|&i| p[i]));
    let bv = DVector::from_column_slice(b);
    let resid = &sub * &ps - bv;
    let gram = &sub * sub.transpose();
    let lam = gram.pseudo_inverse(1e-12).ok()? * resid;
    let corr = sub.transpose() * lam;
    let q = ps - corr;
    let mut full = vec![0.0; p.len()];
    for (k, &c) in support.iter().enumerate() {
        full[c] = q[k];
    }
    Some(full)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rank_of_product_and_identity() {
        let ind = JointDistribution::from_rows(vec![vec![0.12, 0.28], vec![0.18, 0.42]]).unwrap();
        assert_eq!(leakage_rank(&ind, REL_RANK_TOL), (1, 1));
        let eq = JointDistribution::from_rows(vec![vec![0.5, 0.0], vec![0.0, 0.5]]).unwrap();
        assert_eq!(leakage_rank(&eq, REL_RANK_TOL), (2, 0));
    }

    #[test]
    fn zero_probability_columns_ignored() {
        let j = JointDistribution::from_rows(vec![vec![0.5, 0.0, 0.1], vec![0.2, 0.0, 0.2]]).unwrap();
        let (a, ys) = leakage_matrix(&j);
        assert_eq!(ys, vec![0, 2]);
        assert_eq!(a.ncols(), 2);
    }

    #[test]
    fn projection_lands_on_affine_set() {
        let a = DMatrix::from_row_slice(2, 3, &[0.5, 0.2, 0.9, 0.5, 0.8, 0.1]);
        let b = [0.5, 0.5];
        let q = project_affine_on_support(&a, &b, &[0.3, 0.3, 0.4], &[0, 1, 2]).unwrap();
        let r = &a * DVector::from_column_slice(&q);
        assert!((r[0] - 0.5).abs() < 1e-12 && (r[1] - 0.5).abs() < 1e-12);
    }
}
