//! Discretized Poisson functional representation.
//!
//! A tuple of `m` marks is drawn i.i.d. from P_Y together with a score cell
//! `c` out of `q`. Given X = x, each mark competes in an exponential race
//! with rate P(mark | x) / P_Y(mark); the cell position picks the winner by
//! inverting the race's selection CDF. Finite `m` leaves the selected Y
//! slightly off P_{Y|X=x}, so surplus mass on over-selected symbols is
//! reassigned to under-selected ones inside each atom. Marks that cannot be
//! produced by x at all (zero race rate) fall entirely into that reassignment.
//! The result is a distribution over assignment maps, exactly as in the FRL.

use serde::Serialize;

use rand::Rng;

use crate::error::{Error, Result};
use crate::probcore::{induce, Alphabet, JointDistribution, Mechanism};
use crate::rng::rng_for;

use super::{compact_maps, frl_construct, mechanism_from_maps, stacking_order, SegmentTable};

/// Largest admissible |Y|^m · q.
pub const SFRL_GUARD: f64 = 1e6;

/// Largest tolerated deviation of the realized P_{Y|X} from the source.
const MARGINAL_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy)]
pub struct SfrlParams {
    /// Number of marks m ≥ 2.
    pub truncation: usize,
    /// Score cells q ≥ 2.
    pub quantization: usize,
    pub seed: u64,
}

impl Default for SfrlParams {
    fn default() -> Self {
        Self {
            truncation: 4,
            quantization: 16,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SfrlReport {
    pub i_xu: f64,
    pub h_y_given_ux: f64,
    pub i_xu_given_y: f64,
    /// log₂(I(X;Y) + 1) + 4.
    pub sfrl_bound: f64,
    pub within_bound: bool,
    pub frl_i_xu_given_y: f64,
    pub not_worse_than_frl: bool,
    pub independence_residual: f64,
    /// max over x of the probability that no mark is compatible with x.
    pub overflow_mass: f64,
    /// max over x of the mass reassigned to match P_{Y|X=x} exactly.
    pub correction_mass: f64,
    pub u_size: usize,
}

pub fn sfrl_bound(j: &JointDistribution) -> f64 {
    (j.mutual_information() + 1.0).log2() + 4.0
}

pub fn sfrl_construct(j: &JointDistribution, params: SfrlParams) -> Result<(Mechanism, SfrlReport)> {
    let SfrlParams {
        truncation: m,
        quantization: q,
        seed,
    } = params;
    if m < 2 || q < 2 {
        return Err(Error::Usage("SFRL needs truncation ≥ 2 and quantization ≥ 2".into()));
    }
    let load = (j.ny() as f64).powi(m as i32) * q as f64;
    if load > SFRL_GUARD {
        return Err(Error::Resource(format!(
            "|Y|^m·q = {load:e} exceeds the desk-scale guard {SFRL_GUARD:e}"
        )));
    }

    let py = j.py();
    let ys = j.y_support();
    let xs = j.x_support();
    let cond: Vec<Vec<f64>> = (0..j.nx()).map(|x| j.y_given_x(x)).collect();
    let rate = |x: usize, y: usize| cond[x][y] / py[y];
    let dither: f64 = rng_for(seed, "sfrl/dither").random();

    // Aggregate the (tuple, cell) atoms by the winner they produce for each x.
    const OVERFLOW: usize = usize::MAX;
    let mut by_selection: std::collections::BTreeMap<Vec<usize>, f64> = Default::default();
    let mut tuple = vec![0usize; m];
    let k = ys.len();
    let total = k.pow(m as u32);
    let mut cum = vec![0.0; m];
    for idx in 0..total {
        let mut r = idx;
        for slot in tuple.iter_mut() {
            *slot = ys[r % k];
            r /= k;
        }
        let pt: f64 = tuple.iter().map(|&y| py[y]).product();
        let mut cells: Vec<Vec<usize>> = vec![Vec::with_capacity(xs.len()); q];
        for &x in &xs {
            let mut acc = 0.0;
            for (i, &y) in tuple.iter().enumerate() {
                acc += rate(x, y);
                cum[i] = acc;
            }
            for (c, sel) in cells.iter_mut().enumerate() {
                if acc <= 0.0 {
                    sel.push(OVERFLOW);
                    continue;
                }
                let s = (c as f64 + dither) / q as f64 * acc;
                let i = cum.iter().position(|&v| s < v).unwrap_or(m - 1);
                sel.push(tuple[i]);
            }
        }
        for sel in cells {
            *by_selection.entry(sel).or_insert(0.0) += pt / q as f64;
        }
    }

    // Selected distribution, per x, and the correction that makes it exact.
    let nxs = xs.len();
    let ny = j.ny();
    let mut selected = vec![vec![0.0; ny]; nxs];
    let mut overflow = vec![0.0; nxs];
    for (sel, &w) in &by_selection {
        for (k, &y) in sel.iter().enumerate() {
            if y == OVERFLOW {
                overflow[k] += w;
            } else {
                selected[k][y] += w;
            }
        }
    }
    let keep: Vec<Vec<f64>> = (0..nxs)
        .map(|k| {
            (0..ny)
                .map(|y| {
                    let s = selected[k][y];
                    if s > 0.0 {
                        (cond[xs[k]][y] / s).min(1.0)
                    } else {
                        0.0
                    }
                })
                .collect()
        })
        .collect();
    let deficit: Vec<Vec<f64>> = (0..nxs)
        .map(|k| {
            (0..ny)
                .map(|y| (cond[xs[k]][y] - selected[k][y].min(cond[xs[k]][y])).max(0.0))
                .collect()
        })
        .collect();
    let deficit_total: Vec<f64> = deficit.iter().map(|d| d.iter().sum()).collect();
    let order = stacking_order(j);

    let mut maps: Vec<(Vec<usize>, f64)> = Vec::new();
    for (sel, &w) in &by_selection {
        let mut pieces: Vec<Option<Vec<(usize, f64)>>> = vec![None; j.nx()];
        for (k, &x) in xs.iter().enumerate() {
            let mut row = Vec::with_capacity(ny + 1);
            let kept = if sel[k] == OVERFLOW {
                0.0
            } else {
                let f = keep[k][sel[k]];
                row.push((sel[k], f));
                f
            };
            let freed = 1.0 - kept;
            if deficit_total[k] > 0.0 {
                for &y in &order {
                    if deficit[k][y] > 0.0 {
                        row.push((y, freed * deficit[k][y] / deficit_total[k]));
                    }
                }
            } else if freed > 0.0 {
                if let Some(last) = row.last_mut() {
                    last.1 += freed;
                }
            }
            pieces[x] = Some(row);
        }
        let seg = SegmentTable::from_pieces(&pieces);
        for s in 0..seg.len() {
            maps.push((seg.map_of(s), w * seg.segment_length(s)));
        }
    }
    let maps = compact_maps(maps);

    for (k, &x) in xs.iter().enumerate() {
        for y in 0..ny {
            let got: f64 = maps.iter().filter(|(g, _)| g[x] == y).map(|(_, w)| w).sum();
            if (got - cond[x][y]).abs() > MARGINAL_TOL {
                return Err(Error::Construction(format!(
                    "realized P(y={y}|x={x}) = {got} deviates from {}; try a larger truncation m",
                    cond[xs[k]][y]
                )));
            }
        }
    }

    let labels = maps.iter().map(|(g, _)| {
        let ls: Vec<&str> = g.iter().map(|&y| j.y_alphabet().label(y)).collect();
        format!("[{}]", ls.join(","))
    });
    let mechanism = mechanism_from_maps(j, &maps, Alphabet::new(labels).expect("maps are distinct"));
    let ij = induce(j, &mechanism)?;
    let frl = induce(j, &frl_construct(j).mechanism)?;
    let bound = sfrl_bound(j);
    let i_xu_given_y = ij.i_xu_given_y();
    let report = SfrlReport {
        i_xu: ij.i_xu(),
        h_y_given_ux: ij.h_y_given_ux(),
        i_xu_given_y,
        sfrl_bound: bound,
        within_bound: i_xu_given_y <= bound,
        frl_i_xu_given_y: frl.i_xu_given_y(),
        not_worse_than_frl: i_xu_given_y <= frl.i_xu_given_y() + 1e-12,
        independence_residual: ij.independence_residual(),
        overflow_mass: overflow.iter().copied().fold(0.0, f64::max),
        correction_mass: deficit_total.iter().copied().fold(0.0, f64::max),
        u_size: mechanism.nu(),
    };
    Ok((mechanism, report))
}
