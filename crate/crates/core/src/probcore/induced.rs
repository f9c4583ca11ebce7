use crate::error::{Error, Result};

use super::measures::{entropy_of_masses, l1, JointEntropy, Var};
use super::{Alphabet, JointDistribution, Mechanism, MechanismKind};

/// Tolerance for `P(Y = f(u,x) | U=u, X=x) = 1`.
pub const RECONSTRUCTION_TOL: f64 = 1e-9;

/// The full pmf over (x, y, u) induced by a source and a mechanism.
#[derive(Debug, Clone)]
pub struct InducedJoint {
    x: Alphabet,
    y: Alphabet,
    u: Alphabet,
    /// `[x][y][u]`, flattened.
    pmf: Vec<f64>,
}

/// P(x,y,u) = P_XY(x,y)·q(u|y) or P_XY(x,y)·q(u|x,y).
pub fn induce(j: &JointDistribution, m: &Mechanism) -> Result<InducedJoint> {
    if m.ny() != j.ny() {
        return Err(Error::Usage(format!(
            "mechanism expects |Y| = {}, distribution has {}",
            m.ny(),
            j.ny()
        )));
    }
    if m.kind() == MechanismKind::GivenXY && m.nx() != j.nx() {
        return Err(Error::Usage(format!(
            "mechanism expects |X| = {}, distribution has {}",
            m.nx(),
            j.nx()
        )));
    }
    if m.reconstruction().is_some() && m.nx().max(1) != j.nx() {
        return Err(Error::Usage("reconstruction table does not match |X|".into()));
    }
    let (nx, ny, nu) = (j.nx(), j.ny(), m.nu());
    let mut pmf = vec![0.0; nx * ny * nu];
    for x in 0..nx {
        for y in 0..ny {
            let pxy = j.p(x, y);
            if pxy == 0.0 {
                continue;
            }
            let base = (x * ny + y) * nu;
            for (u, &q) in m.slice(x, y).iter().enumerate() {
                pmf[base + u] = pxy * q;
            }
        }
    }
    let ij = InducedJoint {
        x: j.x_alphabet().clone(),
        y: j.y_alphabet().clone(),
        u: m.u_alphabet().clone(),
        pmf,
    };
    if m.reconstruction().is_some() {
        ij.check_reconstruction(m)?;
    }
    Ok(ij)
}

impl InducedJoint {
    /// Builds directly from a tensor, e.g. one computed by an independent route.
    pub fn from_tensor(x: Alphabet, y: Alphabet, u: Alphabet, pmf: Vec<f64>) -> Result<Self> {
        if pmf.len() != x.len() * y.len() * u.len() {
            return Err(Error::Validation("tensor size does not match alphabets".into()));
        }
        super::measures::check_pmf(&pmf)?;
        Ok(Self { x, y, u, pmf })
    }

    pub fn nx(&self) -> usize {
        self.x.len()
    }

    pub fn ny(&self) -> usize {
        self.y.len()
    }

    pub fn nu(&self) -> usize {
        self.u.len()
    }

    pub fn x_alphabet(&self) -> &Alphabet {
        &self.x
    }

    pub fn y_alphabet(&self) -> &Alphabet {
        &self.y
    }

    pub fn u_alphabet(&self) -> &Alphabet {
        &self.u
    }

    pub fn p(&self, x: usize, y: usize, u: usize) -> f64 {
        self.pmf[(x * self.ny() + y) * self.nu() + u]
    }

    pub fn tensor(&self) -> &[f64] {
        &self.pmf
    }

    /// Marginal over the listed variables, laid out in X, Y, U order.
    pub fn marginal(&self, vars: &[Var]) -> Vec<f64> {
        let (nx, ny, nu) = (self.nx(), self.ny(), self.nu());
        let keep_x = vars.contains(&Var::X);
        let keep_y = vars.contains(&Var::Y);
        let keep_u = vars.contains(&Var::U);
        let dy = if keep_y { ny } else { 1 };
        let du = if keep_u { nu } else { 1 };
        let dx = if keep_x { nx } else { 1 };
        let mut out = vec![0.0; dx * dy * du];
        for x in 0..nx {
            for y in 0..ny {
                for u in 0..nu {
                    let v = self.pmf[(x * ny + y) * nu + u];
                    if v == 0.0 {
                        continue;
                    }
                    let ix = if keep_x { x } else { 0 };
                    let iy = if keep_y { y } else { 0 };
                    let iu = if keep_u { u } else { 0 };
                    out[(ix * dy + iy) * du + iu] += v;
                }
            }
        }
        out
    }

    pub fn px(&self) -> Vec<f64> {
        self.marginal(&[Var::X])
    }

    pub fn py(&self) -> Vec<f64> {
        self.marginal(&[Var::Y])
    }

    pub fn pu(&self) -> Vec<f64> {
        self.marginal(&[Var::U])
    }

    /// P(x, u) as `[x][u]`.
    pub fn pxu(&self) -> Vec<f64> {
        self.marginal(&[Var::X, Var::U])
    }

    /// P_{X|U=u}; `None` when P(U=u) = 0.
    pub fn x_given_u(&self, u: usize) -> Option<Vec<f64>> {
        let nu = self.nu();
        let pxu = self.pxu();
        let col: Vec<f64> = (0..self.nx()).map(|x| pxu[x * nu + u]).collect();
        let s: f64 = col.iter().sum();
        (s > 0.0).then(|| col.iter().map(|v| v / s).collect())
    }

    /// The (X, Y) marginal.
    pub fn source(&self) -> JointDistribution {
        JointDistribution::from_flat(self.x.clone(), self.y.clone(), self.marginal(&[Var::X, Var::Y]))
            .expect("marginal of a pmf is a pmf")
    }

    /// Largest entrywise deviation of the (X, Y) marginal from `j`.
    pub fn source_residual(&self, j: &JointDistribution) -> f64 {
        self.marginal(&[Var::X, Var::Y])
            .iter()
            .zip(j.pmf())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    /// max over positive-probability u of d(P_{X|U=u}, P_X).
    pub fn independence_residual(&self) -> f64 {
        let px = self.px();
        (0..self.nu())
            .filter_map(|u| self.x_given_u(u))
            .map(|c| l1(&c, &px))
            .fold(0.0, f64::max)
    }

    pub fn h(&self, vars: &[Var]) -> f64 {
        entropy_of_masses(&self.marginal(vars))
    }

    pub fn i_yu(&self) -> f64 {
        self.mi(&[Var::Y], &[Var::U], &[])
    }

    pub fn i_xu(&self) -> f64 {
        self.mi(&[Var::X], &[Var::U], &[])
    }

    pub fn i_xy(&self) -> f64 {
        self.mi(&[Var::X], &[Var::Y], &[])
    }

    pub fn i_xu_given_y(&self) -> f64 {
        self.mi(&[Var::X], &[Var::U], &[Var::Y])
    }

    pub fn h_y_given_ux(&self) -> f64 {
        (self.h(&[Var::X, Var::Y, Var::U]) - self.h(&[Var::X, Var::U])).max(0.0)
    }

    pub fn h_y_given_x(&self) -> f64 {
        (self.h(&[Var::X, Var::Y]) - self.h(&[Var::X])).max(0.0)
    }

    fn mi(&self, a: &[Var], b: &[Var], c: &[Var]) -> f64 {
        super::measures::conditional_mutual_information(self, a, b, c).unwrap_or(0.0)
    }

    /// |I(Y;U) − [I(X;U) + H(Y|X) − H(Y|U,X) − I(X;U|Y)]|.
    pub fn chain_rule_residual(&self) -> f64 {
        let rhs = self.i_xu() + self.h_y_given_x() - self.h_y_given_ux() - self.i_xu_given_y();
        (self.i_yu() - rhs).abs()
    }

    fn check_reconstruction(&self, m: &Mechanism) -> Result<()> {
        let (nx, ny, nu) = (self.nx(), self.ny(), self.nu());
        for u in 0..nu {
            for x in 0..nx {
                let mass: f64 = (0..ny).map(|y| self.p(x, y, u)).sum();
                if mass <= 0.0 {
                    continue;
                }
                let y = m.reconstruct(u, x).expect("checked by caller");
                let hit = self.p(x, y, u) / mass;
                if hit < 1.0 - RECONSTRUCTION_TOL {
                    return Err(Error::Validation(format!(
                        "reconstruction f({}, {}) = {} holds with probability {hit}",
                        self.u.label(u),
                        self.x.label(x),
                        self.y.label(y)
                    )));
                }
            }
        }
        Ok(())
    }
}

impl JointEntropy for InducedJoint {
    fn joint_entropy(&self, vars: &[Var]) -> Result<f64> {
        Ok(self.h(vars))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testkit;

    #[test]
    fn identity_and_constant_mechanisms() {
        let j = testkit::random_joint(3, 3, 3);
        let ij = induce(&j, &Mechanism::identity(j.y_alphabet())).unwrap();
        assert!((ij.i_yu() - j.h_y()).abs() < 1e-12);
        let ij = induce(&j, &Mechanism::constant(j.ny())).unwrap();
        assert!(ij.i_yu() < 1e-15 && ij.i_xu() < 1e-15);
    }

    #[test]
    fn marginal_recovery() {
        for seed in 0..10 {
            let j = testkit::random_joint(seed, 3, 3);
            let m = testkit::random_kernel_given_y(seed + 100, 3, 4);
            let ij = induce(&j, &m).unwrap();
            assert!(ij.source_residual(&j) < 1e-12);
            assert!((ij.tensor().iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn markov_data_processing() {
        for seed in 0..20 {
            let j = testkit::random_joint(seed, 3, 4);
            let m = testkit::random_kernel_given_y(seed + 7, 4, 3);
            let ij = induce(&j, &m).unwrap();
            assert!(ij.i_xu() <= ij.i_yu() + 1e-9);
            assert!(ij.i_xu() <= j.mutual_information() + 1e-9);
            assert!(ij.chain_rule_residual() < 1e-9);
        }
    }

    #[test]
    fn incompatible_shapes() {
        let j = testkit::random_joint(1, 2, 3);
        let m = Mechanism::constant(2);
        assert!(matches!(induce(&j, &m), Err(Error::Usage(_))));
    }

    #[test]
    fn bad_reconstruction_detected() {
        let j = JointDistribution::from_rows(vec![vec![0.25, 0.25], vec![0.25, 0.25]]).unwrap();
        // U independent of everything, but claims Y = 0 always
        let m = Mechanism::given_xy(Alphabet::range(1), 2, 2, vec![1.0; 4], Some(vec![0, 0])).unwrap();
        assert!(matches!(induce(&j, &m), Err(Error::Validation(_))));
    }
}
