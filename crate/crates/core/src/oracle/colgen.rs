//! Column generation over posterior atoms.
//!
//! The master LP chooses weights for a pool of atoms r ∈ Δ(inputs):
//!
//! ```text
//! minimize Σ_k w_k H(C r_k)  s.t.  Σ_k w_k r_k = P_I,  Σ_k w_k D(A r_k ‖ P_X) ≤ ε,  w ≥ 0
//! ```
//!
//! (the leakage row is absent when atoms are individually constrained). The
//! pricing problem, minimizing the reduced cost over the simplex, is not
//! convex; it is attacked from several starts by projected gradient descent.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::error::Result;
use crate::linalg::project_affine_on_support;
use crate::lp::{self, LinearProgram};
use crate::rng::dirichlet;

use super::problem::{project_simplex, Problem};

const MAX_ROUNDS: usize = 60;
const PGD_ITERS: usize = 120;
const RANDOM_STARTS: usize = 3;
const PRICE_TOL: f64 = 1e-9;
const SAME_ATOM: f64 = 1e-9;

#[derive(Debug, Clone, Copy)]
pub(crate) enum AtomRule {
    /// Aggregate leakage Σ w D ≤ ε, with ε > 0.
    Leakage(f64),
    /// Every atom satisfies A r = P_X exactly.
    Independent,
    /// Every atom satisfies d(A r, P_X) ≤ ε.
    Distance(f64),
}

pub(crate) type Atoms = Vec<(f64, Vec<f64>)>;

struct Pool<'a> {
    p: &'a Problem,
    rule: AtomRule,
    atoms: Vec<Vec<f64>>,
    costs: Vec<f64>,
    leaks: Vec<f64>,
}

impl<'a> Pool<'a> {
    fn push(&mut self, r: Vec<f64>) -> bool {
        let dup = self
            .atoms
            .iter()
            .any(|a| a.iter().zip(&r).map(|(x, y)| (x - y).abs()).sum::<f64>() < SAME_ATOM);
        if dup {
            return false;
        }
        self.costs.push(self.p.cost(&r));
        self.leaks.push(match self.rule {
            AtomRule::Leakage(_) => self.p.leakage(&r),
            _ => 0.0,
        });
        self.atoms.push(r);
        true
    }

    fn master(&self) -> Result<lp::LpSolution> {
        let n = self.p.n();
        let k = self.atoms.len();
        let mut a: Vec<Vec<f64>> = (0..n).map(|i| self.atoms.iter().map(|r| r[i]).collect()).collect();
        let mut b = self.p.p_in.clone();
        let mut c = self.costs.clone();
        if let AtomRule::Leakage(eps) = self.rule {
            for row in a.iter_mut() {
                row.push(0.0);
            }
            let mut lrow = self.leaks.clone();
            lrow.push(1.0);
            a.push(lrow);
            b.push(eps);
            c.push(0.0);
        }
        debug_assert!(a.iter().all(|r| r.len() == c.len()) && c.len() >= k);
        lp::solve(&LinearProgram { a, b, c })
    }
}

/// Moves an atom toward P_I until its per-letter distance is at most ε.
pub(crate) fn shrink(p: &Problem, r: Vec<f64>, eps: f64) -> Vec<f64> {
    let d = p.distance(&r);
    if d <= eps {
        return r;
    }
    let t = eps / d;
    r.iter().zip(&p.p_in).map(|(a, c)| c + t * (a - c)).collect()
}

/// Projected gradient descent with an adaptive step on the simplex, followed
/// by `post` after every projection.
fn pgd(
    r0: Vec<f64>,
    f: &dyn Fn(&[f64]) -> f64,
    grad: &dyn Fn(&[f64]) -> Vec<f64>,
    post: &dyn Fn(Vec<f64>) -> Vec<f64>,
) -> (f64, Vec<f64>) {
    let mut r = post(r0);
    let mut val = f(&r);
    let mut step = 0.5;
    for _ in 0..PGD_ITERS {
        let g = grad(&r);
        loop {
            let cand: Vec<f64> = r.iter().zip(&g).map(|(a, b)| a - step * b).collect();
            let cand = post(project_simplex(&cand));
            let v = f(&cand);
            if v < val - 1e-15 {
                r = cand;
                val = v;
                step = (step * 2.0).min(1e3);
                break;
            }
            step *= 0.25;
            if step < 1e-12 {
                return (val, r);
            }
        }
    }
    (val, r)
}

/// Orthonormal basis (as columns) of the null space of `a` restricted to `free`.
fn null_basis(a: &DMatrix<f64>, free: &[usize]) -> DMatrix<f64> {
    let sub = a.select_columns(free);
    let gram = sub.transpose() * &sub;
    let eig = SymmetricEigen::new(gram);
    let top = eig.eigenvalues.iter().copied().fold(0.0, f64::max).max(1e-300);
    let cols: Vec<DVector<f64>> = (0..free.len())
        .filter(|&k| eig.eigenvalues[k] <= 1e-11 * top.max(1.0))
        .map(|k| eig.eigenvectors.column(k).into_owned())
        .collect();
    if cols.is_empty() {
        DMatrix::zeros(free.len(), 0)
    } else {
        DMatrix::from_columns(&cols)
    }
}

/// Walks from a point of {r ≥ 0 : A r = P_X} to a vertex, each leg going
/// along the projected negative gradient to the boundary. The objective is
/// concave, so a full leg never increases it.
fn polytope_descent(
    p: &Problem,
    a: &DMatrix<f64>,
    mut r: Vec<f64>,
    grad: &dyn Fn(&[f64]) -> Vec<f64>,
    rng: &mut ChaCha8Rng,
) -> Vec<f64> {
    for _ in 0..=p.n() {
        let free: Vec<usize> = (0..p.n()).filter(|&i| r[i] > 1e-13).collect();
        let nb = null_basis(a, &free);
        if nb.ncols() == 0 {
            break;
        }
        let g = grad(&r);
        let gf = DVector::from_iterator(free.len(), free.iter().map(|&i| g[i]));
        let mut d = -(&nb * (nb.transpose() * gf));
        if d.norm() < 1e-12 {
            let z = DVector::from_fn(nb.ncols(), |_, _| rng.random::<f64>() - 0.5);
            d = &nb * z;
        }
        let mut t = f64::INFINITY;
        let mut hit = None;
        for (k, &i) in free.iter().enumerate() {
            if d[k] < -1e-15 {
                let s = -r[i] / d[k];
                if s < t {
                    t = s;
                    hit = Some(i);
                }
            }
        }
        let Some(hit) = hit else { break };
        for (k, &i) in free.iter().enumerate() {
            r[i] = (r[i] + t * d[k]).max(0.0);
        }
        r[hit] = 0.0;
    }
    clean_onto_polytope(p, a, r)
}

fn clean_onto_polytope(p: &Problem, a: &DMatrix<f64>, r: Vec<f64>) -> Vec<f64> {
    let support: Vec<usize> = (0..p.n()).filter(|&i| r[i] > 0.0).collect();
    let mut q = project_affine_on_support(a, &p.px, &r, &support).unwrap_or(r);
    q.iter_mut().for_each(|v| *v = v.max(0.0));
    let s: f64 = q.iter().sum();
    q.iter_mut().for_each(|v| *v /= s);
    q
}

/// A random point of the polytope: P_I pushed a random fraction of the way to
/// the boundary along a random null direction.
fn random_feasible(p: &Problem, a: &DMatrix<f64>, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let free: Vec<usize> = (0..p.n()).collect();
    let nb = null_basis(a, &free);
    let mut r = p.p_in.clone();
    if nb.ncols() == 0 {
        return r;
    }
    let z = DVector::from_fn(nb.ncols(), |_, _| rng.random::<f64>() - 0.5);
    let d = &nb * z;
    let tmax = (0..p.n())
        .filter(|&i| d[i] < 0.0)
        .map(|i| -r[i] / d[i])
        .fold(f64::INFINITY, f64::min);
    if tmax.is_finite() {
        let t = tmax * rng.random::<f64>();
        for i in 0..p.n() {
            r[i] = (r[i] + t * d[i]).max(0.0);
        }
    }
    r
}

/// Runs column generation and returns the optimal atoms (weights > 1e-12).
pub(crate) fn column_generation(p: &Problem, rule: AtomRule, rng: &mut ChaCha8Rng) -> Result<Atoms> {
    let n = p.n();
    let amat = p.a_matrix();
    let mut pool = Pool {
        p,
        rule,
        atoms: Vec::new(),
        costs: Vec::new(),
        leaks: Vec::new(),
    };
    pool.push(p.p_in.clone());
    let unit = |i: usize| {
        let mut e = vec![0.0; n];
        e[i] = 1.0;
        e
    };
    match rule {
        AtomRule::Leakage(_) => {
            for i in 0..n {
                pool.push(unit(i));
            }
        }
        AtomRule::Distance(eps) => {
            for i in 0..n {
                pool.push(shrink(p, unit(i), eps));
            }
        }
        AtomRule::Independent => {
            let zero = |_: &[f64]| vec![0.0; n];
            for _ in 0..RANDOM_STARTS {
                let r0 = random_feasible(p, &amat, rng);
                pool.push(polytope_descent(p, &amat, r0, &zero, rng));
            }
        }
    }

    let mut sol = pool.master()?;
    for _ in 0..MAX_ROUNDS {
        let nu: Vec<f64> = sol.duals[..n].to_vec();
        let lambda = match rule {
            AtomRule::Leakage(_) => sol.duals[n].min(0.0),
            _ => 0.0,
        };
        let reduced = |r: &[f64]| -> f64 {
            let lin: f64 = r.iter().zip(&nu).map(|(a, b)| a * b).sum();
            let leak = if lambda != 0.0 { p.leakage(r) } else { 0.0 };
            p.cost(r) - lin - lambda * leak
        };
        let grad = |r: &[f64]| -> Vec<f64> {
            let mut g = p.cost_grad(r);
            for (gi, v) in g.iter_mut().zip(&nu) {
                *gi -= v;
            }
            if lambda != 0.0 {
                for (gi, l) in g.iter_mut().zip(p.leakage_grad(r)) {
                    *gi -= lambda * l;
                }
            }
            g
        };

        let mut starts: Vec<Vec<f64>> = (0..pool.atoms.len())
            .filter(|&k| sol.x[k] > 1e-12)
            .map(|k| pool.atoms[k].clone())
            .collect();
        for _ in 0..RANDOM_STARTS {
            starts.push(match rule {
                AtomRule::Independent => random_feasible(p, &amat, rng),
                _ => dirichlet(rng, n),
            });
        }
        let mut added = false;
        for s in starts {
            let r = match rule {
                AtomRule::Independent => polytope_descent(p, &amat, s, &grad, rng),
                AtomRule::Leakage(_) => pgd(s, &reduced, &grad, &|r| r).1,
                AtomRule::Distance(eps) => pgd(s, &reduced, &grad, &|r| shrink(p, r, eps)).1,
            };
            if reduced(&r) < -PRICE_TOL && pool.push(r) {
                added = true;
            }
        }
        if !added {
            break;
        }
        sol = pool.master()?;
    }

    Ok((0..pool.atoms.len())
        .filter(|&k| sol.x[k] > 1e-12)
        .map(|k| (sol.x[k], pool.atoms[k].clone()))
        .collect())
}

/// Greedily merges atom pairs with the smallest utility loss until at most
/// `k` remain. Merging preserves Σ w r = P_I and, by convexity, never
/// increases leakage or the largest per-letter distance.
pub(crate) fn merge_to(p: &Problem, mut atoms: Atoms, k: usize) -> Atoms {
    while atoms.len() > k.max(1) {
        let mut best = (f64::INFINITY, 0, 1);
        for a in 0..atoms.len() {
            for b in a + 1..atoms.len() {
                let (wa, wb) = (atoms[a].0, atoms[b].0);
                let m: Vec<f64> = atoms[a].1.iter().zip(&atoms[b].1).map(|(x, y)| (wa * x + wb * y) / (wa + wb)).collect();
                let loss = (wa + wb) * p.cost(&m) - wa * p.cost(&atoms[a].1) - wb * p.cost(&atoms[b].1);
                if loss < best.0 {
                    best = (loss, a, b);
                }
            }
        }
        let (_, a, b) = best;
        let (wb, rb) = atoms.remove(b);
        let (wa, ra) = &mut atoms[a];
        for (x, y) in ra.iter_mut().zip(&rb) {
            *x = (*wa * *x + wb * y) / (*wa + wb);
        }
        *wa += wb;
    }
    atoms
}

/// Mixes every atom toward P_I by the smallest t that brings Σ w D within ε.
pub(crate) fn polish_leakage(p: &Problem, atoms: Atoms, eps: f64) -> Atoms {
    let mix = |t: f64| -> Atoms {
        atoms
            .iter()
            .map(|(w, r)| (*w, r.iter().zip(&p.p_in).map(|(a, c)| (1.0 - t) * a + t * c).collect()))
            .collect()
    };
    let leak = |a: &Atoms| a.iter().map(|(w, r)| w * p.leakage(r)).sum::<f64>();
    if leak(&atoms) <= eps {
        return atoms;
    }
    let (mut lo, mut hi) = (0.0, 1.0);
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if leak(&mix(mid)) <= eps {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    mix(hi)
}
