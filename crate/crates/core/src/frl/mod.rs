//! Functional representations: a variable U independent of X such that Y is
//! a deterministic function of (U, X).
//!
//! Both constructions here produce U as a distribution over assignment maps
//! `g: X → Y`. U is drawn independently of X with weight `w_g`, and the
//! released Y for private value x is `g(x)`; the weights satisfy
//! `Σ_{g : g(x) = y} w_g = P(y | x)` for every x in the support, which makes
//! independence and determinism exact.

mod sfrl;

use std::collections::BTreeMap;

use serde::Serialize;

use crate::probcore::{Alphabet, JointDistribution, Mechanism};

pub use sfrl::{sfrl_bound, sfrl_construct, SfrlParams, SfrlReport, SFRL_GUARD};

/// Breakpoints closer than this are merged.
pub const MERGE_TOL: f64 = 1e-12;

/// Common refinement of the stacked conditional CDFs of Y given each x.
#[derive(Debug, Clone, Serialize)]
pub struct SegmentTable {
    /// Strictly increasing, from 0 to 1.
    pub breakpoints: Vec<f64>,
    /// `segment_owner[x][s]` is the y covering segment `s` under P_{Y|X=x}.
    pub segment_owner: Vec<Vec<usize>>,
}

impl SegmentTable {
    /// Builds the table from, for each x, an ordered list of `(y, length)`
    /// pieces tiling [0, 1). Rows given as `None` are ignored and own y = 0.
    pub fn from_pieces(pieces: &[Option<Vec<(usize, f64)>>]) -> Self {
        let mut cuts = vec![0.0, 1.0];
        for row in pieces.iter().flatten() {
            let mut acc = 0.0;
            for &(_, len) in row.iter().take(row.len().saturating_sub(1)) {
                acc += len;
                if acc > 0.0 && acc < 1.0 {
                    cuts.push(acc);
                }
            }
        }
        cuts.sort_by(f64::total_cmp);
        let mut breakpoints: Vec<f64> = Vec::with_capacity(cuts.len());
        for c in cuts {
            match breakpoints.last() {
                Some(&last) if c - last < MERGE_TOL => {
                    if c == 1.0 {
                        *breakpoints.last_mut().unwrap() = 1.0;
                    }
                }
                _ => breakpoints.push(c),
            }
        }
        if breakpoints.len() < 2 {
            breakpoints = vec![0.0, 1.0];
        }
        let nseg = breakpoints.len() - 1;
        let segment_owner = pieces
            .iter()
            .map(|row| match row {
                None => vec![0; nseg],
                Some(row) => (0..nseg)
                    .map(|s| {
                        let mid = 0.5 * (breakpoints[s] + breakpoints[s + 1]);
                        owner_at(row, mid)
                    })
                    .collect(),
            })
            .collect();
        Self {
            breakpoints,
            segment_owner,
        }
    }

    pub fn len(&self) -> usize {
        self.breakpoints.len() - 1
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn segment_length(&self, s: usize) -> f64 {
        self.breakpoints[s + 1] - self.breakpoints[s]
    }

    /// The assignment map x ↦ y of segment `s`.
    pub fn map_of(&self, s: usize) -> Vec<usize> {
        self.segment_owner.iter().map(|row| row[s]).collect()
    }
}

fn owner_at(row: &[(usize, f64)], t: f64) -> usize {
    let mut acc = 0.0;
    let mut last = row[0].0;
    for &(y, len) in row {
        if len <= 0.0 {
            continue;
        }
        last = y;
        acc += len;
        if t < acc {
            return y;
        }
    }
    last
}

#[derive(Debug, Clone)]
pub struct FrlOutput {
    pub mechanism: Mechanism,
    pub segments: SegmentTable,
    /// |Y| = 1: U is a single constant letter.
    pub degenerate: bool,
    pub notes: Vec<String>,
}

/// Builds U ⫫ X with Y = f(U, X) by cutting [0, 1) at every conditional CDF
/// breakpoint of Y given X; each refinement segment is one letter of U.
pub fn frl_construct(j: &JointDistribution) -> FrlOutput {
    let px = j.px();
    let order = stacking_order(j);
    let mut notes = Vec::new();
    let pieces: Vec<Option<Vec<(usize, f64)>>> = (0..j.nx())
        .map(|x| {
            if px[x] > 0.0 {
                let cond = j.y_given_x(x);
                Some(order.iter().map(|&y| (y, cond[y])).collect())
            } else {
                notes.push(format!(
                    "X = {} has zero probability and was dropped",
                    j.x_alphabet().label(x)
                ));
                None
            }
        })
        .collect();
    let segments = SegmentTable::from_pieces(&pieces);
    let maps: Vec<(Vec<usize>, f64)> = (0..segments.len())
        .map(|s| (segments.map_of(s), segments.segment_length(s)))
        .collect();
    let degenerate = j.ny() == 1;
    if degenerate {
        notes.push("|Y| = 1: U is trivial".into());
    }
    let labels = (0..maps.len()).map(|s| format!("u{s}"));
    let mechanism = mechanism_from_maps(j, &maps, Alphabet::new(labels).expect("distinct"));
    FrlOutput {
        mechanism,
        segments,
        degenerate,
        notes,
    }
}

/// Y symbols sorted by the content of their joint-pmf column, so the
/// construction does not depend on how X or Y happen to be labeled. The key
/// is P_Y(y), then the column's sorted values, then the raw column.
pub(crate) fn stacking_order(j: &JointDistribution) -> Vec<usize> {
    let key = |y: usize| {
        let raw: Vec<f64> = (0..j.nx()).map(|x| j.p(x, y)).collect();
        let mut sorted = raw.clone();
        sorted.sort_by(|a, b| b.total_cmp(a));
        let total: f64 = raw.iter().sum();
        (total, sorted, raw)
    };
    let keys: Vec<_> = (0..j.ny()).map(key).collect();
    let desc = |a: &[f64], b: &[f64]| {
        b.iter()
            .zip(a)
            .map(|(p, q)| p.total_cmp(q))
            .find(|o| o.is_ne())
            .unwrap_or(std::cmp::Ordering::Equal)
    };
    let mut order: Vec<usize> = (0..j.ny()).collect();
    order.sort_by(|&a, &b| {
        let (ka, kb) = (&keys[a], &keys[b]);
        kb.0.total_cmp(&ka.0)
            .then_with(|| desc(&ka.1, &kb.1))
            .then_with(|| desc(&ka.2, &kb.2))
            .then(a.cmp(&b))
    });
    order
}

/// U ⫫ X with P(U = u) = w_u and Y = map_u(X):
/// q(u | x, y) = w_u·[map_u(x) = y] / P(y | x) where P(x, y) > 0, uniform
/// elsewhere.
pub(crate) fn mechanism_from_maps(
    j: &JointDistribution,
    maps: &[(Vec<usize>, f64)],
    labels: Alphabet,
) -> Mechanism {
    let (nx, ny, nu) = (j.nx(), j.ny(), maps.len());
    let mut kernel = vec![0.0; nx * ny * nu];
    for x in 0..nx {
        let cond = j.y_given_x(x);
        for y in 0..ny {
            let slice = &mut kernel[(x * ny + y) * nu..(x * ny + y + 1) * nu];
            if j.p(x, y) > 0.0 {
                for (u, (map, w)) in maps.iter().enumerate() {
                    if map[x] == y {
                        slice[u] = w / cond[y];
                    }
                }
                let s: f64 = slice.iter().sum();
                if s > 0.0 {
                    slice.iter_mut().for_each(|v| *v /= s);
                    continue;
                }
            }
            slice.iter_mut().for_each(|v| *v = 1.0 / nu as f64);
        }
    }
    let rec = maps.iter().flat_map(|(map, _)| map.iter().copied()).collect();
    Mechanism::given_xy(labels, nx, ny, kernel, Some(rec)).expect("slices are stochastic")
}

/// Merges maps that coincide; the letters of U are then distinct maps.
pub(crate) fn compact_maps(maps: impl IntoIterator<Item = (Vec<usize>, f64)>) -> Vec<(Vec<usize>, f64)> {
    let mut acc: BTreeMap<Vec<usize>, f64> = BTreeMap::new();
    for (m, w) in maps {
        if w > 0.0 {
            *acc.entry(m).or_insert(0.0) += w;
        }
    }
    acc.into_iter().collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::probcore::induce;
    use crate::testkit;

    fn check_frl(j: &JointDistribution) -> crate::InducedJoint {
        let out = frl_construct(j);
        let ij = induce(j, &out.mechanism).unwrap();
        assert!(ij.independence_residual() <= 1e-9);
        assert!(ij.h_y_given_ux() <= 1e-9);
        assert!(out.mechanism.nu() <= j.nx() * (j.ny() - 1) + 1);
        assert!(ij.i_yu() >= j.h_y_given_x() - j.h_x_given_y() - 1e-9);
        for x in 0..j.nx() {
            for y in 0..j.ny() {
                let len: f64 = (0..out.segments.len())
                    .filter(|&s| out.segments.segment_owner[x][s] == y)
                    .map(|s| out.segments.segment_length(s))
                    .sum();
                if j.px()[x] > 0.0 {
                    assert!((len - j.y_given_x(x)[y]).abs() < 1e-12);
                }
            }
        }
        ij
    }

    #[test]
    fn independent_pair_gives_u_equal_y() {
        let j = testkit::product(&[0.3, 0.7], &[0.2, 0.5, 0.3]);
        let ij = check_frl(&j);
        assert!((ij.i_yu() - j.h_y()).abs() < 1e-9);
    }

    #[test]
    fn identical_pair_gives_zero_utility() {
        let j = JointDistribution::from_rows(vec![vec![0.5, 0.0], vec![0.0, 0.5]]).unwrap();
        let ij = check_frl(&j);
        assert!(ij.i_yu() < 1e-12);
    }

    #[test]
    fn bsc_quarter() {
        let j = testkit::bsc(0.25);
        let ij = check_frl(&j);
        // cuts at 0.25 and 0.75: three segments, utility H(Y|X) − I(X;U|Y)
        assert_eq!(ij.nu(), 3);
        assert!(ij.chain_rule_residual() < 1e-12);
    }

    #[test]
    fn breakpoints_strictly_increasing() {
        for seed in 0..20 {
            let j = testkit::random_joint(seed, 3, 4);
            let out = frl_construct(&j);
            let b = &out.segments.breakpoints;
            assert_eq!(b[0], 0.0);
            assert_eq!(*b.last().unwrap(), 1.0);
            assert!(b.windows(2).all(|w| w[1] > w[0]));
            check_frl(&j);
        }
    }

    #[test]
    fn zero_rows_dropped_and_degenerate_flagged() {
        let j = JointDistribution::from_rows(vec![vec![0.5, 0.5], vec![0.0, 0.0]]).unwrap();
        let out = frl_construct(&j);
        assert_eq!(out.notes.len(), 1);
        check_frl(&j);
        let one = JointDistribution::from_rows(vec![vec![0.4], vec![0.6]]).unwrap();
        let out = frl_construct(&one);
        assert!(out.degenerate);
        assert_eq!(out.mechanism.nu(), 1);
    }

    #[test]
    fn relabeling_invariance() {
        let j = testkit::random_joint(11, 3, 3);
        let k = j.permute_y(&[2, 0, 1]);
        let a = induce(&j, &frl_construct(&j).mechanism).unwrap();
        let b = induce(&k, &frl_construct(&k).mechanism).unwrap();
        assert_eq!(a.nu(), b.nu());
        assert!((a.i_yu() - b.i_yu()).abs() < 1e-9);
        assert!((a.h_y_given_ux() - b.h_y_given_ux()).abs() < 1e-9);
        assert!((a.i_xu() - b.i_xu()).abs() < 1e-9);
        let c = j.permute_x(&[1, 2, 0]);
        let c = induce(&c, &frl_construct(&c).mechanism).unwrap();
        assert!((a.i_yu() - c.i_yu()).abs() < 1e-9);
    }
}
