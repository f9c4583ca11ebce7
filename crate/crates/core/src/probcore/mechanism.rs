use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::measures::PMF_TOL;
use super::Alphabet;

/// What the mechanism gets to observe.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MechanismKind {
    /// P_{U|Y}: private data hidden, X − Y − U holds by construction.
    GivenY,
    /// P_{U|X,Y}: private data observable.
    GivenXY,
}

/// A disclosure channel with an optional reconstruction table `y = f(u, x)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Mechanism {
    kind: MechanismKind,
    u: Alphabet,
    nx: usize,
    ny: usize,
    /// GivenY: `[y][u]`, GivenXY: `[x][y][u]`, flattened.
    kernel: Vec<f64>,
    /// `[u][x]` → y index.
    reconstruction: Option<Vec<usize>>,
}

impl Mechanism {
    /// Channel P_{U|Y} from one row per y.
    pub fn given_y(u: Alphabet, rows: Vec<Vec<f64>>) -> Result<Self> {
        let ny = rows.len();
        let nu = u.len();
        let mut kernel = Vec::with_capacity(ny * nu);
        for (y, row) in rows.into_iter().enumerate() {
            if row.len() != nu {
                return Err(Error::Validation(format!(
                    "kernel row for y={y} has {} entries, U has {nu}",
                    row.len()
                )));
            }
            kernel.extend(row);
        }
        Self::from_parts(MechanismKind::GivenY, u, 0, ny, kernel, None)
    }

    /// Channel P_{U|X,Y} from a flattened `[x][y][u]` table.
    pub fn given_xy(
        u: Alphabet,
        nx: usize,
        ny: usize,
        kernel: Vec<f64>,
        reconstruction: Option<Vec<usize>>,
    ) -> Result<Self> {
        Self::from_parts(MechanismKind::GivenXY, u, nx, ny, kernel, reconstruction)
    }

    pub(crate) fn from_parts(
        kind: MechanismKind,
        u: Alphabet,
        nx: usize,
        ny: usize,
        mut kernel: Vec<f64>,
        reconstruction: Option<Vec<usize>>,
    ) -> Result<Self> {
        let nu = u.len();
        let slices = match kind {
            MechanismKind::GivenY => ny,
            MechanismKind::GivenXY => nx * ny,
        };
        if slices == 0 || kernel.len() != slices * nu {
            return Err(Error::Validation(format!(
                "kernel has {} entries, expected {}",
                kernel.len(),
                slices * nu
            )));
        }
        for (s, slice) in kernel.chunks_mut(nu).enumerate() {
            let mut sum = 0.0;
            for &v in slice.iter() {
                if !v.is_finite() || v < 0.0 {
                    return Err(Error::Validation(format!(
                        "kernel slice {s} has entry {v}, expected a probability"
                    )));
                }
                sum += v;
            }
            if (sum - 1.0).abs() > PMF_TOL {
                return Err(Error::Validation(format!(
                    "kernel slice {s} sums to {sum}, expected 1"
                )));
            }
            slice.iter_mut().for_each(|v| *v /= sum);
        }
        if let Some(rec) = &reconstruction {
            let nx_rec = if kind == MechanismKind::GivenY { nx.max(1) } else { nx };
            if rec.len() != nu * nx_rec {
                return Err(Error::Validation(format!(
                    "reconstruction table has {} entries, expected {}",
                    rec.len(),
                    nu * nx_rec
                )));
            }
            if let Some(bad) = rec.iter().find(|&&y| y >= ny) {
                return Err(Error::Validation(format!("reconstruction maps to unknown y {bad}")));
            }
        }
        Ok(Self {
            kind,
            u,
            nx,
            ny,
            kernel,
            reconstruction,
        })
    }

    pub fn kind(&self) -> MechanismKind {
        self.kind
    }

    pub fn u_alphabet(&self) -> &Alphabet {
        &self.u
    }

    pub fn nu(&self) -> usize {
        self.u.len()
    }

    /// Number of X symbols the kernel is indexed by (0 for GivenY).
    pub fn nx(&self) -> usize {
        self.nx
    }

    pub fn ny(&self) -> usize {
        self.ny
    }

    /// q(u | x, y); `x` is ignored for GivenY kernels.
    pub fn q(&self, u: usize, x: usize, y: usize) -> f64 {
        let nu = self.nu();
        match self.kind {
            MechanismKind::GivenY => self.kernel[y * nu + u],
            MechanismKind::GivenXY => self.kernel[(x * self.ny + y) * nu + u],
        }
    }

    /// The conditional slice q(· | x, y).
    pub fn slice(&self, x: usize, y: usize) -> &[f64] {
        let nu = self.nu();
        let s = match self.kind {
            MechanismKind::GivenY => y,
            MechanismKind::GivenXY => x * self.ny + y,
        };
        &self.kernel[s * nu..(s + 1) * nu]
    }

    pub fn kernel(&self) -> &[f64] {
        &self.kernel
    }

    pub fn reconstruction(&self) -> Option<&[usize]> {
        self.reconstruction.as_deref()
    }

    /// f(u, x), when a reconstruction table is attached.
    pub fn reconstruct(&self, u: usize, x: usize) -> Option<usize> {
        let nx = self.nx.max(1);
        self.reconstruction.as_ref().map(|r| r[u * nx + x])
    }

    pub fn with_reconstruction(mut self, rec: Vec<usize>, nx: usize) -> Result<Self> {
        if rec.len() != self.nu() * nx {
            return Err(Error::Validation("reconstruction table has the wrong size".into()));
        }
        if self.kind == MechanismKind::GivenXY && nx != self.nx {
            return Err(Error::Validation("reconstruction X size differs from kernel".into()));
        }
        self.nx = nx;
        self.reconstruction = Some(rec);
        Ok(self)
    }

    /// Deterministic mechanism U = Y.
    pub fn identity(y: &Alphabet) -> Self {
        let n = y.len();
        let rows = (0..n)
            .map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
            .collect();
        Self::given_y(y.clone(), rows).expect("identity kernel is valid")
    }

    /// U = ⊥ regardless of the input.
    pub fn constant(ny: usize) -> Self {
        let u = Alphabet::new(["⊥"]).expect("single label");
        Self::given_y(u, vec![vec![1.0]; ny]).expect("constant kernel is valid")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn slices_must_be_stochastic() {
        let u = Alphabet::range(2);
        assert!(Mechanism::given_y(u.clone(), vec![vec![0.5, 0.6]]).is_err());
        assert!(Mechanism::given_y(u.clone(), vec![vec![1.5, -0.5]]).is_err());
        assert!(Mechanism::given_y(u.clone(), vec![vec![0.5]]).is_err());
        let m = Mechanism::given_y(u, vec![vec![0.25, 0.75], vec![1.0, 0.0]]).unwrap();
        assert_eq!(m.q(1, 7, 0), 0.75);
    }

    #[test]
    fn given_xy_indexing() {
        let u = Alphabet::range(2);
        // x=0: y0 -> u0, y1 -> u1; x=1: uniform
        let k = vec![1.0, 0.0, 0.0, 1.0, 0.5, 0.5, 0.5, 0.5];
        let m = Mechanism::given_xy(u, 2, 2, k, Some(vec![0, 0, 1, 1])).unwrap();
        assert_eq!(m.q(1, 0, 1), 1.0);
        assert_eq!(m.q(1, 1, 0), 0.5);
        assert_eq!(m.reconstruct(1, 0), Some(1));
        assert_eq!(m.reconstruct(0, 1), Some(0));
    }

    #[test]
    fn reconstruction_range_checked() {
        let u = Alphabet::range(1);
        assert!(Mechanism::given_xy(u, 1, 2, vec![1.0, 1.0], Some(vec![2])).is_err());
    }
}
