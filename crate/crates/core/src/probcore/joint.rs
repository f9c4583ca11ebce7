use crate::error::{Error, Result};

use super::measures::{entropy_of_masses, JointEntropy, Var, PMF_TOL};
use super::Alphabet;

/// Finite joint pmf of private data X and useful data Y.
#[derive(Debug, Clone, PartialEq)]
pub struct JointDistribution {
    x: Alphabet,
    y: Alphabet,
    /// Row-major |X|×|Y|.
    pmf: Vec<f64>,
}

impl JointDistribution {
    pub fn new(x: Alphabet, y: Alphabet, rows: Vec<Vec<f64>>) -> Result<Self> {
        if rows.len() != x.len() {
            return Err(Error::Validation(format!(
                "pmf has {} rows but X has {} symbols",
                rows.len(),
                x.len()
            )));
        }
        let mut flat = Vec::with_capacity(x.len() * y.len());
        for (i, row) in rows.into_iter().enumerate() {
            if row.len() != y.len() {
                return Err(Error::Validation(format!(
                    "row {i} has {} entries but Y has {} symbols",
                    row.len(),
                    y.len()
                )));
            }
            flat.extend(row);
        }
        Self::from_flat(x, y, flat)
    }

    /// Builds from a row-major table, validating within 1e-9 and renormalizing.
    pub fn from_flat(x: Alphabet, y: Alphabet, mut pmf: Vec<f64>) -> Result<Self> {
        if pmf.len() != x.len() * y.len() {
            return Err(Error::Validation(format!(
                "pmf has {} entries, expected {}",
                pmf.len(),
                x.len() * y.len()
            )));
        }
        let mut sum = 0.0;
        for (k, &v) in pmf.iter().enumerate() {
            if !v.is_finite() || v < 0.0 {
                return Err(Error::Validation(format!(
                    "P({}, {}) = {v} is not a probability",
                    x.label(k / y.len()),
                    y.label(k % y.len())
                )));
            }
            sum += v;
        }
        if (sum - 1.0).abs() > PMF_TOL {
            return Err(Error::Validation(format!("pmf sums to {sum}, expected 1")));
        }
        pmf.iter_mut().for_each(|v| *v /= sum);
        Ok(Self { x, y, pmf })
    }

    /// Unlabeled convenience constructor.
    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        let nx = rows.len();
        let ny = rows.first().map_or(0, Vec::len);
        if nx == 0 || ny == 0 {
            return Err(Error::Validation("empty pmf".into()));
        }
        Self::new(Alphabet::range(nx), Alphabet::range(ny), rows)
    }

    pub fn x_alphabet(&self) -> &Alphabet {
        &self.x
    }

    pub fn y_alphabet(&self) -> &Alphabet {
        &self.y
    }

    pub fn nx(&self) -> usize {
        self.x.len()
    }

    pub fn ny(&self) -> usize {
        self.y.len()
    }

    pub fn p(&self, x: usize, y: usize) -> f64 {
        self.pmf[x * self.ny() + y]
    }

    pub fn pmf(&self) -> &[f64] {
        &self.pmf
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        self.pmf.chunks(self.ny()).map(<[f64]>::to_vec).collect()
    }

    pub fn px(&self) -> Vec<f64> {
        self.pmf.chunks(self.ny()).map(|r| r.iter().sum()).collect()
    }

    pub fn py(&self) -> Vec<f64> {
        let mut py = vec![0.0; self.ny()];
        for row in self.pmf.chunks(self.ny()) {
            for (acc, v) in py.iter_mut().zip(row) {
                *acc += v;
            }
        }
        py
    }

    /// P_{Y|X=x}; uniform when P(X=x) = 0.
    pub fn y_given_x(&self, x: usize) -> Vec<f64> {
        let row = &self.pmf[x * self.ny()..(x + 1) * self.ny()];
        let s: f64 = row.iter().sum();
        if s > 0.0 {
            row.iter().map(|v| v / s).collect()
        } else {
            vec![1.0 / self.ny() as f64; self.ny()]
        }
    }

    /// P_{X|Y=y}; uniform when P(Y=y) = 0.
    pub fn x_given_y(&self, y: usize) -> Vec<f64> {
        let col: Vec<f64> = (0..self.nx()).map(|x| self.p(x, y)).collect();
        let s: f64 = col.iter().sum();
        if s > 0.0 {
            col.iter().map(|v| v / s).collect()
        } else {
            vec![1.0 / self.nx() as f64; self.nx()]
        }
    }

    /// Indices of X symbols with positive probability.
    pub fn x_support(&self) -> Vec<usize> {
        self.px()
            .iter()
            .enumerate()
            .filter(|(_, &p)| p > 0.0)
            .map(|(i, _)| i)
            .collect()
    }

    pub fn y_support(&self) -> Vec<usize> {
        self.py()
            .iter()
            .enumerate()
            .filter(|(_, &p)| p > 0.0)
            .map(|(i, _)| i)
            .collect()
    }

    pub fn h_x(&self) -> f64 {
        entropy_of_masses(&self.px())
    }

    pub fn h_y(&self) -> f64 {
        entropy_of_masses(&self.py())
    }

    pub fn h_xy(&self) -> f64 {
        entropy_of_masses(&self.pmf)
    }

    pub fn h_y_given_x(&self) -> f64 {
        (self.h_xy() - self.h_x()).max(0.0)
    }

    pub fn h_x_given_y(&self) -> f64 {
        (self.h_xy() - self.h_y()).max(0.0)
    }

    pub fn mutual_information(&self) -> f64 {
        (self.h_x() + self.h_y() - self.h_xy()).max(0.0)
    }

    /// Reorders X symbols: new row `i` is old row `perm[i]`.
    pub fn permute_x(&self, perm: &[usize]) -> Self {
        let rows = self.rows();
        Self {
            x: self.x.permuted(perm),
            y: self.y.clone(),
            pmf: perm.iter().flat_map(|&i| rows[i].clone()).collect(),
        }
    }

    /// Reorders Y symbols: new column `j` is old column `perm[j]`.
    pub fn permute_y(&self, perm: &[usize]) -> Self {
        let pmf = (0..self.nx())
            .flat_map(|x| perm.iter().map(move |&j| (x, j)))
            .map(|(x, j)| self.p(x, j))
            .collect();
        Self {
            x: self.x.clone(),
            y: self.y.permuted(perm),
            pmf,
        }
    }
}

impl JointEntropy for JointDistribution {
    fn joint_entropy(&self, vars: &[Var]) -> Result<f64> {
        let has_x = vars.contains(&Var::X);
        let has_y = vars.contains(&Var::Y);
        if vars.contains(&Var::U) {
            return Err(Error::Usage("variable U is not part of an (X, Y) distribution".into()));
        }
        Ok(match (has_x, has_y) {
            (false, false) => 0.0,
            (true, false) => self.h_x(),
            (false, true) => self.h_y(),
            (true, true) => self.h_xy(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::probcore::measures::{binary_entropy, conditional_entropy, mutual_information};

    fn bsc(theta: f64) -> JointDistribution {
        JointDistribution::from_rows(vec![
            vec![(1.0 - theta) / 2.0, theta / 2.0],
            vec![theta / 2.0, (1.0 - theta) / 2.0],
        ])
        .unwrap()
    }

    #[test]
    fn conditional_entropy_examples() {
        let eq = JointDistribution::from_rows(vec![vec![0.5, 0.0], vec![0.0, 0.5]]).unwrap();
        assert_eq!(conditional_entropy(&eq, &[Var::Y], &[Var::X]).unwrap(), 0.0);

        let ind = JointDistribution::from_rows(vec![vec![0.12, 0.28], vec![0.18, 0.42]]).unwrap();
        let h = conditional_entropy(&ind, &[Var::Y], &[Var::X]).unwrap();
        assert!((h - ind.h_y()).abs() < 1e-12);

        let b = bsc(0.3);
        let h = conditional_entropy(&b, &[Var::Y], &[Var::X]).unwrap();
        assert!((h - 0.881_290_899_230_693_4).abs() < 1e-12);
    }

    #[test]
    fn mutual_information_examples() {
        let ind = JointDistribution::from_rows(vec![vec![0.12, 0.28], vec![0.18, 0.42]]).unwrap();
        assert!(mutual_information(&ind, &[Var::X], &[Var::Y]).unwrap() < 1e-12);
        let eq = JointDistribution::from_rows(vec![vec![0.5, 0.0], vec![0.0, 0.5]]).unwrap();
        assert!((mutual_information(&eq, &[Var::X], &[Var::Y]).unwrap() - 1.0).abs() < 1e-12);
        let i = mutual_information(&bsc(0.3), &[Var::X], &[Var::Y]).unwrap();
        assert!((i - (1.0 - binary_entropy(0.3))).abs() < 1e-12);
        assert!((i - 0.118_709_100_769_306_6).abs() < 1e-12);
    }

    #[test]
    fn unknown_variable_is_usage_error() {
        let b = bsc(0.2);
        assert!(matches!(
            conditional_entropy(&b, &[Var::U], &[Var::X]),
            Err(Error::Usage(_))
        ));
    }

    #[test]
    fn validation() {
        assert!(JointDistribution::from_rows(vec![vec![0.5, 0.4]]).is_err());
        assert!(JointDistribution::from_rows(vec![vec![0.5, 0.5], vec![0.1]]).is_err());
        assert!(JointDistribution::from_rows(vec![vec![1.1, -0.1]]).is_err());
        let j = JointDistribution::from_rows(vec![vec![0.5, 0.5 + 1e-10]]).unwrap();
        assert!((j.pmf().iter().sum::<f64>() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn relabeling_preserves_measures() {
        let j = JointDistribution::from_rows(vec![
            vec![0.1, 0.2, 0.05],
            vec![0.3, 0.0, 0.15],
            vec![0.05, 0.1, 0.05],
        ])
        .unwrap();
        let k = j.permute_x(&[2, 0, 1]).permute_y(&[1, 2, 0]);
        assert!((j.mutual_information() - k.mutual_information()).abs() < 1e-12);
        assert!((j.h_y_given_x() - k.h_y_given_x()).abs() < 1e-12);
        assert_eq!(k.p(0, 0), j.p(2, 1));
    }
}
