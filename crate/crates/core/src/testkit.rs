//! Seeded instance generators shared by unit tests, integration tests and
//! the acceptance suite.

use rand::Rng;

use crate::probcore::{Alphabet, JointDistribution, Mechanism, TripleDistribution};
use crate::rng::{dirichlet, rng_for};

/// Full-support random joint with |X| = nx, |Y| = ny.
pub fn random_joint(seed: u64, nx: usize, ny: usize) -> JointDistribution {
    let mut r = rng_for(seed, "testkit/joint");
    let p: Vec<f64> = dirichlet(&mut r, nx * ny).iter().map(|v| v + 1e-3).collect();
    let s: f64 = p.iter().sum();
    JointDistribution::from_flat(
        Alphabet::range(nx),
        Alphabet::range(ny),
        p.iter().map(|v| v / s).collect(),
    )
    .unwrap()
}

pub fn random_kernel_given_y(seed: u64, ny: usize, nu: usize) -> Mechanism {
    let mut r = rng_for(seed, "testkit/kernel");
    let rows = (0..ny).map(|_| dirichlet(&mut r, nu)).collect();
    Mechanism::given_y(Alphabet::range(nu), rows).unwrap()
}

pub fn random_kernel_given_xy(seed: u64, nx: usize, ny: usize, nu: usize) -> Mechanism {
    let mut r = rng_for(seed, "testkit/kernel_xy");
    let k = (0..nx * ny).flat_map(|_| dirichlet(&mut r, nu)).collect();
    Mechanism::given_xy(Alphabet::range(nu), nx, ny, k, None).unwrap()
}

/// Binary symmetric pair: P(x,y) = (1−θ)/2 on the diagonal, θ/2 off it.
pub fn bsc(theta: f64) -> JointDistribution {
    JointDistribution::from_rows(vec![
        vec![(1.0 - theta) / 2.0, theta / 2.0],
        vec![theta / 2.0, (1.0 - theta) / 2.0],
    ])
    .unwrap()
}

/// Y uniform over {0,1,2,3}, X = parity of Y.
pub fn parity() -> JointDistribution {
    JointDistribution::from_rows(vec![
        vec![0.25, 0.0, 0.25, 0.0],
        vec![0.0, 0.25, 0.0, 0.25],
    ])
    .unwrap()
}

pub fn product(px: &[f64], py: &[f64]) -> JointDistribution {
    JointDistribution::from_rows(
        px.iter()
            .map(|a| py.iter().map(|b| a * b).collect())
            .collect(),
    )
    .unwrap()
}

pub fn uniform_product(nx: usize, ny: usize) -> JointDistribution {
    product(&vec![1.0 / nx as f64; nx], &vec![1.0 / ny as f64; ny])
}

/// Random P_Y with X = f(Y) for a random surjection f onto nx symbols.
pub fn x_function_of_y(seed: u64, nx: usize, ny: usize) -> JointDistribution {
    assert!(ny >= nx);
    let mut r = rng_for(seed, "testkit/xfy");
    let py: Vec<f64> = dirichlet(&mut r, ny).iter().map(|v| v + 0.02).collect();
    let s: f64 = py.iter().sum();
    let mut f: Vec<usize> = (0..ny).map(|y| if y < nx { y } else { r.random_range(0..nx) }).collect();
    // shuffle so the preimages are not always the leading symbols
    for i in (1..ny).rev() {
        let k = r.random_range(0..=i);
        f.swap(i, k);
    }
    let mut rows = vec![vec![0.0; ny]; nx];
    for y in 0..ny {
        rows[f[y]][y] = py[y] / s;
    }
    JointDistribution::from_rows(rows).unwrap()
}

/// Random P_X with Y = f(X), f surjective onto ny symbols.
pub fn y_function_of_x(seed: u64, nx: usize, ny: usize) -> JointDistribution {
    let t = x_function_of_y(seed, ny, nx);
    let rows = (0..nx)
        .map(|x| (0..ny).map(|y| t.p(y, x)).collect())
        .collect();
    JointDistribution::from_rows(rows).unwrap()
}

/// Block-diagonal joint: X and Y share a common part (the block index) and
/// are conditionally independent given it, so GK common information equals
/// I(X;Y).
pub fn block_joint(seed: u64, blocks: &[(usize, usize)]) -> JointDistribution {
    let mut r = rng_for(seed, "testkit/block");
    let nx: usize = blocks.iter().map(|b| b.0).sum();
    let ny: usize = blocks.iter().map(|b| b.1).sum();
    let w: Vec<f64> = dirichlet(&mut r, blocks.len()).iter().map(|v| v + 0.05).collect();
    let ws: f64 = w.iter().sum();
    let mut rows = vec![vec![0.0; ny]; nx];
    let (mut ox, mut oy) = (0, 0);
    for (k, &(bx, by)) in blocks.iter().enumerate() {
        let px: Vec<f64> = dirichlet(&mut r, bx).iter().map(|v| v + 0.05).collect();
        let py: Vec<f64> = dirichlet(&mut r, by).iter().map(|v| v + 0.05).collect();
        let (sx, sy): (f64, f64) = (px.iter().sum(), py.iter().sum());
        for a in 0..bx {
            for b in 0..by {
                rows[ox + a][oy + b] = w[k] / ws * px[a] / sx * py[b] / sy;
            }
        }
        ox += bx;
        oy += by;
    }
    JointDistribution::from_rows(rows).unwrap()
}

pub fn random_triple(seed: u64, n1: usize, n2: usize, ny: usize) -> TripleDistribution {
    let mut r = rng_for(seed, "testkit/triple");
    let p: Vec<f64> = dirichlet(&mut r, n1 * n2 * ny).iter().map(|v| v + 1e-3).collect();
    let s: f64 = p.iter().sum();
    TripleDistribution::new(
        Alphabet::range(n1),
        Alphabet::range(n2),
        Alphabet::range(ny),
        p.iter().map(|v| v / s).collect(),
    )
    .unwrap()
}
