//! The trade-off problems in posterior form.
//!
//! The mechanism observes an input i: i = y for the Y-only problem, i = (x, y)
//! for the problem with both. A mechanism with weights w_u and posteriors
//! r_u = P_{I|U=u} satisfies Σ_u w_u r_u = P_I, and
//!
//! * utility   I(Y;U) = H(Y) − Σ_u w_u H(C r_u)
//! * leakage   I(X;U) = Σ_u w_u D(A r_u ‖ P_X)
//! * per-letter distance d(P_{X|U=u}, P_X) = d(A r_u, P_X)
//!
//! with C the map from inputs to their Y symbol and A the map from inputs to
//! the conditional law of X.

use nalgebra::DMatrix;

use crate::probcore::measures::entropy_of_masses;
use crate::probcore::{Alphabet, JointDistribution, Mechanism};

const LOG_FLOOR: f64 = 1e-300;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Observes {
    Y,
    XY,
}

#[derive(Debug, Clone)]
pub(crate) struct Problem {
    pub observes: Observes,
    pub nx: usize,
    pub ny: usize,
    /// Positive-probability inputs, as y (Observes::Y) or x·|Y| + y.
    pub inputs: Vec<usize>,
    pub p_in: Vec<f64>,
    /// Y symbol of each input.
    pub cy: Vec<usize>,
    /// `a[i]` = P_{X | I = i}.
    pub a: Vec<Vec<f64>>,
    pub px: Vec<f64>,
}

impl Problem {
    pub fn new(j: &JointDistribution, observes: Observes) -> Self {
        let (nx, ny) = (j.nx(), j.ny());
        let mut inputs = Vec::new();
        let mut p_in = Vec::new();
        let mut cy = Vec::new();
        let mut a = Vec::new();
        match observes {
            Observes::Y => {
                let py = j.py();
                for y in j.y_support() {
                    inputs.push(y);
                    p_in.push(py[y]);
                    cy.push(y);
                    a.push(j.x_given_y(y));
                }
            }
            Observes::XY => {
                for x in 0..nx {
                    for y in 0..ny {
                        if j.p(x, y) > 0.0 {
                            inputs.push(x * ny + y);
                            p_in.push(j.p(x, y));
                            cy.push(y);
                            let mut e = vec![0.0; nx];
                            e[x] = 1.0;
                            a.push(e);
                        }
                    }
                }
            }
        }
        Self {
            observes,
            nx,
            ny,
            inputs,
            p_in,
            cy,
            a,
            px: j.px(),
        }
    }

    pub fn n(&self) -> usize {
        self.inputs.len()
    }

    pub fn y_of(&self, r: &[f64]) -> Vec<f64> {
        let mut v = vec![0.0; self.ny];
        for (i, &p) in r.iter().enumerate() {
            v[self.cy[i]] += p;
        }
        v
    }

    pub fn x_of(&self, r: &[f64]) -> Vec<f64> {
        let mut v = vec![0.0; self.nx];
        for (i, &p) in r.iter().enumerate() {
            if p != 0.0 {
                for (x, a) in self.a[i].iter().enumerate() {
                    v[x] += a * p;
                }
            }
        }
        v
    }

    /// H(C r).
    pub fn cost(&self, r: &[f64]) -> f64 {
        entropy_of_masses(&self.y_of(r))
    }

    /// D(A r ‖ P_X) in bits.
    pub fn leakage(&self, r: &[f64]) -> f64 {
        let ax = self.x_of(r);
        ax.iter()
            .zip(&self.px)
            .filter(|(a, _)| **a > 0.0)
            .map(|(a, p)| a * (a / p).log2())
            .sum::<f64>()
            .max(0.0)
    }

    /// d(A r, P_X).
    pub fn distance(&self, r: &[f64]) -> f64 {
        self.x_of(r).iter().zip(&self.px).map(|(a, p)| (a - p).abs()).sum()
    }

    /// Gradient of H(C r), up to a constant shift.
    pub fn cost_grad(&self, r: &[f64]) -> Vec<f64> {
        let y = self.y_of(r);
        self.cy.iter().map(|&c| -y[c].max(LOG_FLOOR).log2()).collect()
    }

    /// Gradient of D(A r ‖ P_X), up to a constant shift.
    pub fn leakage_grad(&self, r: &[f64]) -> Vec<f64> {
        let lr: Vec<f64> = self
            .x_of(r)
            .iter()
            .zip(&self.px)
            .map(|(a, p)| if *p > 0.0 { (a.max(LOG_FLOOR) / p).log2() } else { 0.0 })
            .collect();
        self.a
            .iter()
            .map(|row| row.iter().zip(&lr).map(|(a, l)| a * l).sum())
            .collect()
    }

    /// The affine constraint A r = P_X as a matrix (|X| × n).
    pub fn a_matrix(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.nx, self.n(), |x, i| self.a[i][x])
    }

    /// Mechanism from atoms (w_u, r_u) through q(u | i) = w_u r_u(i) / P_I(i).
    pub fn mechanism(&self, atoms: &[(f64, Vec<f64>)]) -> Mechanism {
        let nu = atoms.len();
        let nin = match self.observes {
            Observes::Y => self.ny,
            Observes::XY => self.nx * self.ny,
        };
        let mut kernel = vec![1.0 / nu as f64; nin * nu];
        for (k, &i) in self.inputs.iter().enumerate() {
            let row = &mut kernel[i * nu..(i + 1) * nu];
            for (u, (w, r)) in atoms.iter().enumerate() {
                row[u] = w * r[k] / self.p_in[k];
            }
            let s: f64 = row.iter().sum();
            if s > 0.0 {
                row.iter_mut().for_each(|v| *v /= s);
            } else {
                row.iter_mut().for_each(|v| *v = 1.0 / nu as f64);
            }
        }
        let labels = Alphabet::new((0..nu).map(|u| format!("u{u}"))).expect("distinct");
        match self.observes {
            Observes::Y => {
                let rows = kernel.chunks(nu).map(<[f64]>::to_vec).collect();
                Mechanism::given_y(labels, rows).expect("stochastic rows")
            }
            Observes::XY => {
                Mechanism::given_xy(labels, self.nx, self.ny, kernel, None).expect("stochastic slices")
            }
        }
    }

    /// Kernel q(u | i) over support inputs (`[i][u]`) as a mechanism.
    pub fn mechanism_from_kernel(&self, q: &[f64], nu: usize) -> Mechanism {
        let atoms = self.atoms_from_kernel(q, nu);
        if atoms.is_empty() {
            return self.mechanism(&[(1.0, self.p_in.clone())]);
        }
        self.mechanism(&atoms)
    }

    /// Posterior atoms (w_u, r_u) of a kernel; letters of zero mass dropped.
    pub fn atoms_from_kernel(&self, q: &[f64], nu: usize) -> Vec<(f64, Vec<f64>)> {
        let n = self.n();
        (0..nu)
            .filter_map(|u| {
                let joint: Vec<f64> = (0..n).map(|i| self.p_in[i] * q[i * nu + u]).collect();
                let w: f64 = joint.iter().sum();
                (w > 0.0).then(|| (w, joint.iter().map(|v| v / w).collect()))
            })
            .collect()
    }
}

/// Euclidean projection onto the probability simplex.
pub(crate) fn project_simplex(v: &[f64]) -> Vec<f64> {
    let mut s: Vec<f64> = v.to_vec();
    s.sort_by(|a, b| b.total_cmp(a));
    let mut acc = 0.0;
    let mut theta = 0.0;
    for (k, &x) in s.iter().enumerate() {
        acc += x;
        let t = (acc - 1.0) / (k + 1) as f64;
        if x - t > 0.0 {
            theta = t;
        }
    }
    v.iter().map(|x| (x - theta).max(0.0)).collect()
}
