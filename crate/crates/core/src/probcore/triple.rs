use crate::error::{Error, Result};

use super::measures::{entropy_of_masses, PMF_TOL};
use super::{Alphabet, JointDistribution};

/// Joint pmf over (X1, X2, Y) where X = (X1, X2) is private data with X1
/// taking priority.
#[derive(Debug, Clone, PartialEq)]
pub struct TripleDistribution {
    x1: Alphabet,
    x2: Alphabet,
    y: Alphabet,
    /// `[x1][x2][y]`, flattened.
    pmf: Vec<f64>,
}

impl TripleDistribution {
    pub fn new(x1: Alphabet, x2: Alphabet, y: Alphabet, mut pmf: Vec<f64>) -> Result<Self> {
        if pmf.len() != x1.len() * x2.len() * y.len() {
            return Err(Error::Validation("pmf size does not match alphabets".into()));
        }
        if pmf.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::Validation("pmf has a negative or non-finite entry".into()));
        }
        let sum: f64 = pmf.iter().sum();
        if (sum - 1.0).abs() > PMF_TOL {
            return Err(Error::Validation(format!("pmf sums to {sum}, expected 1")));
        }
        pmf.iter_mut().for_each(|v| *v /= sum);
        Ok(Self { x1, x2, y, pmf })
    }

    pub fn n1(&self) -> usize {
        self.x1.len()
    }

    pub fn n2(&self) -> usize {
        self.x2.len()
    }

    pub fn ny(&self) -> usize {
        self.y.len()
    }

    pub fn p(&self, x1: usize, x2: usize, y: usize) -> f64 {
        self.pmf[(x1 * self.n2() + x2) * self.ny() + y]
    }

    pub fn x2_marginal(&self) -> Vec<f64> {
        let mut m = vec![0.0; self.n2()];
        for a in 0..self.n1() {
            for (b, acc) in m.iter_mut().enumerate() {
                *acc += (0..self.ny()).map(|y| self.p(a, b, y)).sum::<f64>();
            }
        }
        m
    }

    pub fn h_x2(&self) -> f64 {
        entropy_of_masses(&self.x2_marginal())
    }

    /// The pair X = (X1, X2) flattened to one alphabet, index `x1·|X2| + x2`.
    pub fn pair_joint(&self) -> JointDistribution {
        let labels = self
            .x1
            .labels()
            .iter()
            .flat_map(|a| self.x2.labels().iter().map(move |b| format!("({a},{b})")));
        let x = Alphabet::new(labels).expect("pairs of distinct labels are distinct");
        JointDistribution::from_flat(x, self.y.clone(), self.pmf.clone()).expect("already valid")
    }

    /// Splits a pair index back into (x1, x2).
    pub fn split(&self, x: usize) -> (usize, usize) {
        (x / self.n2(), x % self.n2())
    }

    pub fn x1_alphabet(&self) -> &Alphabet {
        &self.x1
    }

    pub fn x2_alphabet(&self) -> &Alphabet {
        &self.x2
    }

    pub fn y_alphabet(&self) -> &Alphabet {
        &self.y
    }
}
