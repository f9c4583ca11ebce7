//! Projected ascent on a kernel q(u | i) with a fixed number of letters, for
//! the weighted per-letter criterion. The weighted distance of a letter
//! shrinks when the letter is split, so the criterion is only meaningful with
//! |U| capped; the cap is the kernel width.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::rng::dirichlet;

use super::problem::{project_simplex, Problem};

const PENALTIES: [f64; 4] = [1.0, 10.0, 100.0, 1000.0];
const ITERS: usize = 120;

pub(crate) struct KernelStats {
    pub utility: f64,
    /// d(P_{X,U}(·,u), P_X·P_U(u)) per letter.
    pub weighted: Vec<f64>,
    pub p_u: Vec<f64>,
}

pub(crate) fn stats(p: &Problem, q: &[f64], k: usize) -> KernelStats {
    let n = p.n();
    let py = p.y_of(&p.p_in);
    let mut p_u = vec![0.0; k];
    let mut pyu = vec![0.0; p.ny * k];
    let mut pxu = vec![0.0; p.nx * k];
    for i in 0..n {
        for u in 0..k {
            let m = p.p_in[i] * q[i * k + u];
            if m == 0.0 {
                continue;
            }
            p_u[u] += m;
            pyu[p.cy[i] * k + u] += m;
            for (x, a) in p.a[i].iter().enumerate() {
                pxu[x * k + u] += a * m;
            }
        }
    }
    let mut utility = 0.0;
    for y in 0..p.ny {
        for u in 0..k {
            let m = pyu[y * k + u];
            if m > 0.0 {
                utility += m * (m / (py[y] * p_u[u])).log2();
            }
        }
    }
    let weighted = (0..k)
        .map(|u| (0..p.nx).map(|x| (pxu[x * k + u] - p.px[x] * p_u[u]).abs()).sum())
        .collect();
    KernelStats {
        utility: utility.max(0.0),
        weighted,
        p_u,
    }
}

fn penalized(p: &Problem, q: &[f64], k: usize, eps: f64, mu: f64) -> f64 {
    let s = stats(p, q, k);
    s.utility - mu * s.weighted.iter().map(|d| (d - eps).max(0.0).powi(2)).sum::<f64>()
}

fn gradient(p: &Problem, q: &[f64], k: usize, eps: f64, mu: f64) -> Vec<f64> {
    let n = p.n();
    let py = p.y_of(&p.p_in);
    let mut p_u = vec![0.0; k];
    let mut pyu = vec![0.0; p.ny * k];
    let mut pxu = vec![0.0; p.nx * k];
    for i in 0..n {
        for u in 0..k {
            let m = p.p_in[i] * q[i * k + u];
            p_u[u] += m;
            pyu[p.cy[i] * k + u] += m;
            for (x, a) in p.a[i].iter().enumerate() {
                pxu[x * k + u] += a * m;
            }
        }
    }
    // sign pattern and hinge weight per letter
    let mut sign = vec![0.0; p.nx * k];
    let mut hinge = vec![0.0; k];
    for u in 0..k {
        let mut d = 0.0;
        for x in 0..p.nx {
            let diff = pxu[x * k + u] - p.px[x] * p_u[u];
            sign[x * k + u] = diff.signum() * f64::from(diff != 0.0);
            d += diff.abs();
        }
        hinge[u] = 2.0 * mu * (d - eps).max(0.0);
    }
    let mut g = vec![0.0; n * k];
    for i in 0..n {
        let y = p.cy[i];
        for u in 0..k {
            let num = pyu[y * k + u].max(1e-300);
            let den = (py[y] * p_u[u]).max(1e-300);
            let mut v = p.p_in[i] * (num / den).log2();
            if hinge[u] > 0.0 {
                let sp: f64 = (0..p.nx).map(|x| sign[x * k + u] * p.px[x]).sum();
                let sa: f64 = (0..p.nx).map(|x| sign[x * k + u] * p.a[i][x]).sum();
                v -= hinge[u] * p.p_in[i] * (sa - sp);
            }
            g[i * k + u] = v;
        }
    }
    g
}

fn project_rows(q: &[f64], k: usize) -> Vec<f64> {
    q.chunks(k).flat_map(project_simplex).collect()
}

/// Mixes the kernel with its own output marginal: P_U is unchanged and every
/// per-letter distance is scaled by (1 − t), the least t meeting ε.
pub(crate) fn polish(p: &Problem, q: &[f64], k: usize, eps: f64) -> Vec<f64> {
    let s = stats(p, q, k);
    let dmax = s.weighted.iter().copied().fold(0.0, f64::max);
    if dmax <= eps {
        return q.to_vec();
    }
    let t = 1.0 - eps / dmax;
    q.chunks(k)
        .flat_map(|row| row.iter().zip(&s.p_u).map(|(a, b)| (1.0 - t) * a + t * b).collect::<Vec<_>>())
        .collect()
}

/// Penalized projected ascent followed by the polish; returns a feasible kernel.
pub(crate) fn ascend(p: &Problem, mut q: Vec<f64>, k: usize, eps: f64) -> Vec<f64> {
    for mu in PENALTIES {
        let mut val = penalized(p, &q, k, eps, mu);
        let mut step = 1.0;
        for _ in 0..ITERS {
            let g = gradient(p, &q, k, eps, mu);
            let mut moved = false;
            while step > 1e-12 {
                let cand: Vec<f64> = q.iter().zip(&g).map(|(a, b)| a + step * b).collect();
                let cand = project_rows(&cand, k);
                let v = penalized(p, &cand, k, eps, mu);
                if v > val + 1e-15 {
                    q = cand;
                    val = v;
                    step = (step * 2.0).min(1e4);
                    moved = true;
                    break;
                }
                step *= 0.25;
            }
            if !moved {
                break;
            }
        }
    }
    polish(p, &q, k, eps)
}

/// A random starting kernel leaning toward a random deterministic map.
pub(crate) fn random_kernel(p: &Problem, k: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    (0..p.n())
        .flat_map(|_| {
            let mut row: Vec<f64> = dirichlet(rng, k).iter().map(|v| 0.5 * v).collect();
            row[rng.random_range(0..k)] += 0.5;
            row
        })
        .collect()
}

/// Kernel `[i][u]` of width `k` realizing the given atoms (k ≥ atoms.len()).
pub(crate) fn kernel_from_atoms(p: &Problem, atoms: &[(f64, Vec<f64>)], k: usize) -> Vec<f64> {
    let mut q = vec![0.0; p.n() * k];
    for i in 0..p.n() {
        for (u, (w, r)) in atoms.iter().enumerate() {
            q[i * k + u] = w * r[i] / p.p_in[i];
        }
        let row = &mut q[i * k..(i + 1) * k];
        let s: f64 = row.iter().sum();
        row.iter_mut().for_each(|v| *v /= s);
    }
    q
}
